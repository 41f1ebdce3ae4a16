//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::time::{Duration, Instant};

use gridloss::coupled::{fit_alpha_exponent, gamma_curve, gamma_series_complete, SeriesTerms};
use gridloss::dynamics::{assemble_decoupled, InverterParams};
use gridloss::h2::{complete_graph_asymptote, complete_graph_bounds, h2_norm_analytic, h2_norm_gramian, path_graph_bound};
use gridloss::network::{complete_graph, path_graph, random_connected_graph, Susceptances};
use gridloss::sim::{empirical_h2, impulse_energy_total, simulate, SimConfig};
use gridloss::spectral::{analytic_spectrum, numeric_spectrum, spectrum_distance};
use gridloss::{LaplacianKind, NetworkGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{name}]: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn eigs(g: &NetworkGraph) -> Vec<f64> {
    g.laplacian(LaplacianKind::Susceptance).eigenvalues()
}

fn random_params(rng: &mut ChaCha8Rng) -> InverterParams {
    InverterParams::new(
        rng.random_range(0.1..5.0),
        rng.random_range(0.1..5.0),
        rng.random_range(0.05..2.0),
        rng.random_range(0.05..2.0),
        rng.random_range(0.5..3.0),
        rng.random_range(0.0..0.9),
    )
    .unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> (NetworkGraph, InverterParams) {
    let p = random_params(rng);
    let n = rng.random_range(2..=max_n);
    let prob = rng.random_range(0.15..0.9);
    let g = random_connected_graph(n, prob, (0.5, 3.25), p.alpha, rng.random()).unwrap();
    (g, p)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn c01_spectrum_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (g, p) = random_instance(&mut rng, 15);
        let analytic = analytic_spectrum(&p, &eigs(&g)).unwrap();
        let numeric = numeric_spectrum(&assemble_decoupled(&g, &p).unwrap()).unwrap();
        worst = worst.max(spectrum_distance(&analytic, &numeric).unwrap_or(f64::INFINITY));
    }
    let t = secs(start.elapsed());
    report(1, "spectrum", worst <= 1e-8 && t < 10.0, format!("max distance {worst:.2e}, {t:.2} s"));
}

#[test]
fn c02_norm_oracles_agree() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (g, p) = random_instance(&mut rng, 20);
        let a = h2_norm_analytic(&p, &eigs(&g)).unwrap().total;
        let n = h2_norm_gramian(&assemble_decoupled(&g, &p).unwrap()).unwrap().total;
        worst = worst.max((a - n).abs() / a.abs());
    }
    let t = secs(start.elapsed());
    report(2, "h2 oracles", worst <= 1e-8 && t < 30.0, format!("max relative error {worst:.2e}, {t:.2} s"));
}

#[test]
fn c03_phase_loss_topology_independent() {
    let n = 10;
    let p = InverterParams::scaling_defaults();
    let graphs = [
        complete_graph(n, Susceptances::fig_default(3), p.alpha).unwrap(),
        path_graph(n, Susceptances::fig_default(4), p.alpha).unwrap(),
        random_connected_graph(n, 0.3, (0.5, 3.25), p.alpha, 5).unwrap(),
    ];
    let expected = p.alpha * (n - 1) as f64 / (2.0 * p.k_p);
    let mut worst: f64 = 0.0;
    let mut worst_gramian: f64 = 0.0;
    for g in &graphs {
        worst = worst.max((h2_norm_analytic(&p, &eigs(g)).unwrap().phase_part - expected).abs());
        let gp = h2_norm_gramian(&assemble_decoupled(g, &p).unwrap()).unwrap().phase_part;
        worst_gramian = worst_gramian.max((gp - expected).abs() / expected);
    }
    report(
        3,
        "phase part",
        (expected - 0.9).abs() < 1e-15 && worst <= 1e-12 && worst_gramian <= 1e-8,
        format!("target {expected}, closed form off by {worst:.1e}, Gramian off by {worst_gramian:.1e} relative"),
    );
}

#[test]
fn c04_complete_graph_sandwich() {
    let p = InverterParams::scaling_defaults();
    let mut ok = true;
    let mut worst_eq: f64 = 0.0;
    for &n in &[5, 20, 50] {
        let g = complete_graph(n, Susceptances::fig_default(n as u64), p.alpha).unwrap();
        let exact = h2_norm_analytic(&p, &eigs(&g)).unwrap().total;
        let b = complete_graph_bounds(&p, &g).unwrap();
        ok &= b.lower <= exact && exact <= b.upper && b.lower < b.upper;

        let g = complete_graph(n, Susceptances::Constant(1.7), p.alpha).unwrap();
        let exact = h2_norm_analytic(&p, &eigs(&g)).unwrap().total;
        let b = complete_graph_bounds(&p, &g).unwrap();
        worst_eq = worst_eq.max((b.upper - exact).abs() / exact).max((b.lower - exact).abs() / exact);
        ok &= b.equality_expected;
    }
    report(4, "complete bounds", ok && worst_eq <= 1e-10, format!("sandwich holds: {ok}, uniform gap {worst_eq:.1e}"));
}

#[test]
fn c05_path_graph_bound() {
    let p = InverterParams::scaling_defaults();
    let mut ok = true;
    for &n in &[5, 20, 50] {
        let g = path_graph(n, Susceptances::fig_default(n as u64), p.alpha).unwrap();
        ok &= h2_norm_analytic(&p, &eigs(&g)).unwrap().total <= path_graph_bound(&p, &g).unwrap().upper;
    }
    let mut min_margin = f64::INFINITY;
    for n in 2..=100usize {
        let g = path_graph(n, Susceptances::fig_default(1 + n as u64), p.alpha).unwrap();
        let exact = h2_norm_analytic(&p, &eigs(&g)).unwrap().total;
        let bound = path_graph_bound(&p, &g).unwrap().upper;
        min_margin = min_margin.min((bound - exact) / exact);
    }
    ok &= min_margin >= -1e-12;
    report(5, "path bound", ok, format!("smallest relative margin over N = 2..100: {min_margin:.2e}"));
}

#[test]
fn c06_asymptote() {
    let p = InverterParams::scaling_defaults();
    let mut ok = true;
    let mut detail = Vec::new();
    for &n in &[10usize, 100, 1000] {
        let g = complete_graph(n, Susceptances::Constant(1.0), p.alpha).unwrap();
        let exact = h2_norm_analytic(&p, &eigs(&g)).unwrap().total;
        let gap = (exact - complete_graph_asymptote(&p, n)).abs() / exact;
        ok &= gap <= 2.0 / n as f64;
        detail.push(format!("N={n}: {gap:.2e}"));
    }
    report(6, "asymptote", ok, detail.join(", "));
}

#[test]
fn c07_coupling_error() {
    let p = InverterParams::coupling_defaults(0.0);
    let g = complete_graph(50, Susceptances::Constant(5.0), 0.0).unwrap();

    let small: Vec<f64> = (1..=10).map(|i| 0.01 * i as f64).collect();
    let curve = gamma_curve(&g, &p, &small, true).unwrap();
    let series = curve.series_prediction.clone().unwrap();
    let mut worst: f64 = 0.0;
    for (gm, s) in curve.gammas.iter().zip(&series) {
        let s = s.unwrap();
        worst = worst.max((gm - s).abs() / s);
    }
    let increasing = curve.gammas.windows(2).all(|w| w[1] > w[0]);

    let fit_alphas: Vec<f64> = (0..9).map(|i| 0.011 * (0.049f64 / 0.011).powf(i as f64 / 8.0)).collect();
    let fit = gamma_curve(&g, &p, &fit_alphas, false).unwrap();
    let slope = fit_alpha_exponent(&fit.alphas, &fit.gammas).unwrap();

    let series_01 = gamma_series_complete(&p, 0.1, SeriesTerms::Infinite).unwrap();
    report(
        7,
        "coupling error",
        worst <= 0.05 && (slope - 2.0).abs() <= 0.1 && increasing && curve.skipped.is_empty(),
        format!("max relative deviation {worst:.3} for alpha <= 0.1 (series {series_01:.3e} at 0.1), slope {slope:.4}"),
    );
}

#[test]
fn c08_monte_carlo() {
    let start = Instant::now();
    let p = InverterParams::scaling_defaults();
    let g2 = path_graph(2, Susceptances::Constant(1.0), p.alpha).unwrap();
    let model = assemble_decoupled(&g2, &p).unwrap();
    let exact = h2_norm_analytic(&p, &eigs(&g2)).unwrap().total;
    let config = SimConfig { dt: 1e-3, horizon: 1e4, burn_in: 0.01, seed: 8, ..SimConfig::default() };
    let (est, se) = empirical_h2(&model, &config).unwrap();
    let z = (est - exact).abs() / se;

    let g3 = path_graph(3, Susceptances::fig_default(9), p.alpha).unwrap();
    let m3 = assemble_decoupled(&g3, &p).unwrap();
    let a = h2_norm_analytic(&p, &eigs(&g3)).unwrap().total;
    let gr = h2_norm_gramian(&m3).unwrap().total;
    let imp = impulse_energy_total(&m3).unwrap();
    let spread = [(a - gr).abs() / a, (a - imp).abs() / a, (gr - imp).abs() / a].into_iter().fold(0.0, f64::max);

    let t = secs(start.elapsed());
    report(
        8,
        "monte carlo",
        (exact - 1.0 / 6.0).abs() < 1e-14 && z <= 3.0 && spread <= 1e-6 && t < 60.0,
        format!("estimate {est:.5} ± {se:.5} vs {exact:.5} ({z:.2} se), three-way spread {spread:.1e}, {t:.1} s"),
    );
}

#[test]
fn c09_zero_mode_invariance() {
    let p = InverterParams::scaling_defaults();
    let g = random_connected_graph(6, 0.5, (0.5, 3.25), p.alpha, 11).unwrap();
    let model = assemble_decoupled(&g, &p).unwrap();
    let n = g.n_nodes();
    let x0: Vec<f64> = (0..3 * n).map(|i| 0.01 * ((i * 7 % 5) as f64 - 2.0)).collect();
    let mut shifted = x0.clone();
    shifted[..n].iter_mut().for_each(|d| *d += 0.75);

    let leak = (model.c() * model.zero_mode()).norm();

    let relax = |x: &[f64]| simulate(&model, &SimConfig::relaxation(x.to_vec(), 5.0)).unwrap();
    let (r0, r1) = (relax(&x0), relax(&shifted));
    let peak = r0.loss_series.iter().cloned().fold(0.0, f64::max);
    let mut worst = r0.loss_series.iter().zip(&r1.loss_series).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak;

    let noisy = |x: &[f64]| {
        let cfg = SimConfig { horizon: 60.0, seed: 3, initial_state: Some(x.to_vec()), ..SimConfig::default() };
        empirical_h2(&model, &cfg).unwrap().0
    };
    let (h0, h1) = (noisy(&x0), noisy(&shifted));
    worst = worst.max((h0 - h1).abs() / h0);

    report(
        9,
        "zero mode",
        leak <= 1e-12 && worst <= 1e-12,
        format!("output leak {leak:.1e}, largest change from a phase shift {worst:.1e}"),
    );
}

#[test]
fn c10_speed_cost_tradeoff() {
    let n = 5;
    let p = InverterParams::scaling_defaults();
    let mut x0 = vec![0.0; 3 * n];
    x0[0] = 0.1;
    x0[2 * n] = 0.05;
    let run = |g: NetworkGraph| {
        let t = simulate(&assemble_decoupled(&g, &p).unwrap(), &SimConfig::relaxation(x0.clone(), 30.0)).unwrap();
        (t.envelope_time(0.05), t.total_loss())
    };
    let (te_c, loss_c) = run(complete_graph(n, Susceptances::Constant(1.0), p.alpha).unwrap());
    let (te_l, loss_l) = run(path_graph(n, Susceptances::Constant(1.0), p.alpha).unwrap());
    report(
        10,
        "speed vs cost",
        te_c < te_l && loss_c > loss_l,
        format!("envelope {te_c:.3} s vs {te_l:.3} s, cumulative loss {loss_c:.5} vs {loss_l:.5} (complete vs line)"),
    );
}
