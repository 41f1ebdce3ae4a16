//! Time-domain simulation: Euler–Maruyama under white noise, empirical H2
//! estimates with batch-means error bars, and impulse-response energies.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coupled::csv_err;
use crate::dynamics::StateSpaceModel;
use crate::error::{Error, Result};
use crate::h2::deflate;
use crate::parallel;
use crate::spectral::{matrix_eigenvalues, require_stable};

/// Number of batches for the batch-means standard error.
pub const BATCHES: usize = 50;
/// Upper bound on `dt · ρ(A)` for the explicit scheme.
pub const STEP_GUARD: f64 = 0.5;

/// Per-channel disturbance variance. The covariance of `w` is
/// `diag(intensity)`, so doubling it doubles the expected loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseIntensity {
    Uniform(f64),
    PerChannel(Vec<f64>),
}

impl NoiseIntensity {
    fn expand(&self, channels: usize) -> Result<Vec<f64>> {
        let v = match self {
            NoiseIntensity::Uniform(x) => vec![*x; channels],
            NoiseIntensity::PerChannel(v) if v.len() == channels => v.clone(),
            NoiseIntensity::PerChannel(v) => {
                return Err(Error::DimensionMismatch { expected: channels, got: v.len() })
            }
        };
        if let Some(x) = v.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig(format!("noise intensity must be non-negative, got {x}")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Fraction of the horizon discarded before averaging.
    pub burn_in: f64,
    pub seed: u64,
    pub noise_intensity: NoiseIntensity,
    /// Defaults to the origin.
    pub initial_state: Option<Vec<f64>>,
    /// Keep every `record_stride`-th step in the trajectory.
    pub record_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 100.0,
            burn_in: 0.2,
            seed: 0,
            noise_intensity: NoiseIntensity::Uniform(1.0),
            initial_state: None,
            record_stride: 1,
        }
    }
}

impl SimConfig {
    /// Noise-free relaxation from `initial_state`.
    pub fn relaxation(initial_state: Vec<f64>, horizon: f64) -> Self {
        Self {
            horizon,
            burn_in: 0.0,
            noise_intensity: NoiseIntensity::Uniform(0.0),
            initial_state: Some(initial_state),
            ..Self::default()
        }
    }

    fn validate(&self, model: &StateSpaceModel) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon {} shorter than one step", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidConfig(format!("burn_in must lie in [0, 1), got {}", self.burn_in)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        if let Some(x0) = &self.initial_state {
            if x0.len() != model.n_states() {
                return Err(Error::DimensionMismatch { expected: model.n_states(), got: x0.len() });
            }
        }
        let rho = matrix_eigenvalues(model.a())?.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if self.dt * rho >= STEP_GUARD {
            return Err(Error::InvalidConfig(format!(
                "step guard violated: dt·ρ(A) = {:.3} ≥ {STEP_GUARD}",
                self.dt * rho
            )));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n_nodes: usize,
    pub times: Vec<f64>,
    /// One `3N` state per recorded step.
    pub states: Vec<Vec<f64>>,
    /// `‖Cψ‖²` at each recorded step.
    pub loss_series: Vec<f64>,
    /// Mean loss over every step past the burn-in.
    pub empirical_h2: f64,
    /// Batch-means standard error of `empirical_h2` (`NaN` with too few samples).
    pub stderr: f64,
}

impl Trajectory {
    /// Trapezoidal integral of the recorded loss.
    pub fn cumulative_loss(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.loss_series.len());
        for i in 0..self.loss_series.len() {
            if i > 0 {
                acc += 0.5 * (self.times[i] - self.times[i - 1]) * (self.loss_series[i] + self.loss_series[i - 1]);
            }
            out.push(acc);
        }
        out
    }

    pub fn total_loss(&self) -> f64 {
        self.cumulative_loss().last().copied().unwrap_or(0.0)
    }

    /// Last recorded time at which the loss exceeds `fraction` of its peak;
    /// after it the loss stays inside the envelope. `0` for an all-zero series.
    pub fn envelope_time(&self, fraction: f64) -> f64 {
        let peak = self.loss_series.iter().copied().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        self.loss_series
            .iter()
            .rposition(|&l| l > fraction * peak)
            .map_or(0.0, |i| self.times[i])
    }

    /// CSV with columns `t, delta_1..N, omega_1..N, V_1..N, loss`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.n_nodes;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for p in ["delta", "omega", "V"] {
            header.extend((1..=n).map(|i| format!("{p}_{i}")));
        }
        header.push("loss".into());
        w.write_record(&header).map_err(csv_err)?;
        for ((t, s), l) in self.times.iter().zip(&self.states).zip(&self.loss_series) {
            let mut row = Vec::with_capacity(3 * n + 2);
            row.push(format!("{t}"));
            row.extend(s.iter().map(|x| format!("{x:.12e}")));
            row.push(format!("{l:.12e}"));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Running batch-means accumulator over a known number of samples.
struct BatchMeans {
    batch_len: usize,
    filled: usize,
    current: f64,
    means: Vec<f64>,
    total: f64,
    count: usize,
}

impl BatchMeans {
    fn new(samples: usize) -> Self {
        Self { batch_len: samples / BATCHES, filled: 0, current: 0.0, means: Vec::new(), total: 0.0, count: 0 }
    }

    fn push(&mut self, x: f64) {
        self.total += x;
        self.count += 1;
        if self.batch_len == 0 || self.means.len() == BATCHES {
            return;
        }
        self.current += x;
        self.filled += 1;
        if self.filled == self.batch_len {
            self.means.push(self.current / self.batch_len as f64);
            self.current = 0.0;
            self.filled = 0;
        }
    }

    fn finish(&self) -> (f64, f64) {
        let mean = if self.count > 0 { self.total / self.count as f64 } else { 0.0 };
        if self.means.len() < 2 {
            return (mean, f64::NAN);
        }
        let b = self.means.len() as f64;
        let m = self.means.iter().sum::<f64>() / b;
        let var = self.means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1.0);
        (mean, (var / b).sqrt())
    }
}

fn run(model: &StateSpaceModel, config: &SimConfig, record: bool) -> Result<Trajectory> {
    config.validate(model)?;
    let n_states = model.n_states();
    let intensity = config.noise_intensity.expand(model.n_inputs())?;
    let noisy = intensity.iter().any(|&x| x > 0.0);

    let dt = config.dt;
    let step = DMatrix::identity(n_states, n_states) + model.a() * dt;
    let mut noise_in = model.b().clone();
    for (j, s) in intensity.iter().enumerate() {
        noise_in.column_mut(j).scale_mut((s * dt).sqrt());
    }
    let c = model.c();

    let steps = config.steps();
    let first_avg = (config.burn_in * steps as f64).ceil() as usize;
    let mut stats = BatchMeans::new(steps + 1 - first_avg.min(steps + 1));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut psi = config.initial_state.as_ref().map_or_else(|| DVector::zeros(n_states), |x| DVector::from_column_slice(x));
    let mut next = DVector::zeros(n_states);
    let mut xi = DVector::zeros(model.n_inputs());
    let mut y = DVector::zeros(c.nrows());

    let capacity = if record { steps / config.record_stride + 1 } else { 0 };
    let mut traj = Trajectory {
        n_nodes: model.n_nodes(),
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        loss_series: Vec::with_capacity(capacity),
        empirical_h2: 0.0,
        stderr: f64::NAN,
    };

    for k in 0..=steps {
        y.gemv(1.0, c, &psi, 0.0);
        let loss = y.norm_squared();
        if k >= first_avg {
            stats.push(loss);
        }
        if record && k % config.record_stride == 0 {
            traj.times.push(k as f64 * dt);
            traj.states.push(psi.as_slice().to_vec());
            traj.loss_series.push(loss);
        }
        if k == steps {
            break;
        }
        next.gemv(1.0, &step, &psi, 0.0);
        if noisy {
            for v in xi.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            next.gemv(1.0, &noise_in, &xi, 1.0);
        }
        std::mem::swap(&mut psi, &mut next);
    }
    let (mean, stderr) = stats.finish();
    traj.empirical_h2 = mean;
    traj.stderr = stderr;
    Ok(traj)
}

/// Euler–Maruyama recursion `ψ ← ψ + dt·Aψ + √dt·B·ξ`, `ξ ~ N(0, diag(intensity))`.
/// Deterministic in `config.seed`.
pub fn simulate(model: &StateSpaceModel, config: &SimConfig) -> Result<Trajectory> {
    run(model, config, true)
}

/// Time-averaged loss past the burn-in, with its batch-means standard error.
///
/// Requires a stable model, a positive burn-in and a horizon of at least ten
/// slowest time constants. Nothing is recorded, so long horizons are cheap
/// in memory.
pub fn empirical_h2(model: &StateSpaceModel, config: &SimConfig) -> Result<(f64, f64)> {
    if config.burn_in <= 0.0 {
        return Err(Error::InvalidConfig("empirical estimates need a positive burn_in".into()));
    }
    let report = require_stable(model)?;
    let slowest = 1.0 / report.spectral_abscissa_observable.abs();
    if config.horizon < 10.0 * slowest {
        return Err(Error::InvalidConfig(format!(
            "horizon {} is shorter than 10 slowest time constants ({:.3})",
            config.horizon,
            10.0 * slowest
        )));
    }
    let t = run(model, config, false)?;
    Ok((t.empirical_h2, t.stderr))
}

/// Independent replicas with seeds `base_seed, base_seed + 1, …`, run in parallel.
pub fn empirical_h2_replicas(model: &StateSpaceModel, config: &SimConfig, replicas: usize) -> Result<Vec<(f64, f64)>> {
    parallel::map_range(replicas, |r| {
        let cfg = SimConfig { seed: config.seed.wrapping_add(r as u64), ..config.clone() };
        empirical_h2(model, &cfg)
    })
    .into_iter()
    .collect()
}

/// Quadrature step relative to the spectral radius of the deflated `A`.
const IMPULSE_STEP: f64 = 0.05;
/// Integration horizon in slowest time constants.
const IMPULSE_HORIZON: f64 = 40.0;

/// `∫₀^∞ ‖C e^{At} B e_channel‖² dt` by composite Simpson on the deflated system.
pub fn impulse_energy(model: &StateSpaceModel, channel: usize) -> Result<f64> {
    if channel >= model.n_inputs() {
        return Err(Error::DimensionMismatch { expected: model.n_inputs(), got: channel });
    }
    let sys = deflate(model);
    let eigs = matrix_eigenvalues(&sys.a)?;
    let abscissa = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::Unstable { abscissa });
    }
    let x0 = sys.b.column(channel).into_owned();
    if (&sys.c * &x0).norm() == 0.0 && sys.c.norm() == 0.0 {
        return Ok(0.0);
    }
    let rho = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let h = IMPULSE_STEP / rho;
    let horizon = IMPULSE_HORIZON / abscissa.abs();
    let mut intervals = (horizon / h).ceil() as usize;
    intervals += intervals % 2;
    let propagator = (&sys.a * h).exp();

    let mut x = x0;
    let mut sum = 0.0;
    for k in 0..=intervals {
        let f = (&sys.c * &x).norm_squared();
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * f;
        x = &propagator * x;
    }
    Ok(sum * h / 3.0)
}

/// Sum of [`impulse_energy`] over all input channels.
pub fn impulse_energy_total(model: &StateSpaceModel) -> Result<f64> {
    parallel::map_range(model.n_inputs(), |ch| impulse_energy(model, ch))
        .into_iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble_decoupled, InverterParams};
    use crate::h2::h2_norm_analytic;
    use crate::network::{complete_graph, path_graph, Susceptances};
    use approx::assert_relative_eq;

    fn unit(alpha: f64) -> InverterParams {
        InverterParams::new(1.0, 1.0, 1.0, 1.0, 1.0, alpha).unwrap()
    }

    fn two_node(alpha: f64) -> StateSpaceModel {
        let g = path_graph(2, Susceptances::Constant(1.0), alpha).unwrap();
        assemble_decoupled(&g, &unit(alpha)).unwrap()
    }

    #[test]
    fn equilibrium_stays_put() {
        let cfg = SimConfig { noise_intensity: NoiseIntensity::Uniform(0.0), horizon: 1.0, ..SimConfig::default() };
        let t = simulate(&two_node(0.2), &cfg).unwrap();
        assert!(t.states.iter().all(|s| s.iter().all(|x| *x == 0.0)));
        assert!(t.loss_series.iter().all(|l| *l == 0.0));
        assert_eq!(t.times.len(), 1001);
    }

    #[test]
    fn relaxation_matches_matrix_exponential() {
        let m = two_node(0.2);
        let x0 = vec![0.1, 0.0, 0.0, 0.0, 0.05, 0.0];
        let cfg = SimConfig { dt: 1e-4, ..SimConfig::relaxation(x0.clone(), 2.0) };
        let t = simulate(&m, &cfg).unwrap();
        let exact = (m.a() * 2.0).exp() * DVector::from_vec(x0);
        let last = DVector::from_vec(t.states.last().unwrap().clone());
        assert!((last - &exact).norm() < 1e-4 * exact.norm().max(1e-3));
        // Loss decays over a long relaxation.
        let long = simulate(&m, &SimConfig::relaxation(vec![0.1, 0.0, 0.0, 0.0, 0.05, 0.0], 30.0)).unwrap();
        assert!(long.loss_series.last().unwrap() < &(1e-6 * long.loss_series[0]));
        assert!(long.envelope_time(0.05) < 30.0);
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = SimConfig { horizon: 2.0, seed: 42, ..SimConfig::default() };
        let a = simulate(&two_node(0.2), &cfg).unwrap();
        let b = simulate(&two_node(0.2), &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate(&two_node(0.2), &SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn step_guard() {
        let cfg = SimConfig { dt: 0.5, ..SimConfig::default() };
        assert!(matches!(simulate(&two_node(0.2), &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn config_guards() {
        let m = two_node(0.2);
        for cfg in [
            SimConfig { dt: 0.0, ..SimConfig::default() },
            SimConfig { burn_in: 1.0, ..SimConfig::default() },
            SimConfig { record_stride: 0, ..SimConfig::default() },
            SimConfig { initial_state: Some(vec![0.0; 5]), ..SimConfig::default() },
            SimConfig { noise_intensity: NoiseIntensity::Uniform(-1.0), ..SimConfig::default() },
        ] {
            assert!(simulate(&m, &cfg).is_err(), "{cfg:?}");
        }
        let no_burn = SimConfig { burn_in: 0.0, ..SimConfig::default() };
        assert!(empirical_h2(&m, &no_burn).is_err());
        let short = SimConfig { horizon: 1.0, ..SimConfig::default() };
        assert!(empirical_h2(&m, &short).is_err());
    }

    #[test]
    fn zero_alpha_is_exactly_zero() {
        let cfg = SimConfig { horizon: 50.0, ..SimConfig::default() };
        let (est, _) = empirical_h2(&two_node(0.0), &cfg).unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn noise_scaling_is_linear() {
        // Same seed, so the paths differ only by the √2 factor.
        let m = two_node(0.2);
        let base = SimConfig { horizon: 200.0, seed: 5, ..SimConfig::default() };
        let (e1, _) = empirical_h2(&m, &base).unwrap();
        let doubled = SimConfig { noise_intensity: NoiseIntensity::Uniform(2.0), ..base };
        let (e2, _) = empirical_h2(&m, &doubled).unwrap();
        assert_relative_eq!(e2, 2.0 * e1, max_relative = 1e-10);
    }

    #[test]
    fn initial_state_scaling_is_quadratic() {
        let m = two_node(0.2);
        let x0 = vec![0.1, -0.05, 0.02, 0.0, 0.03, -0.01];
        let a = simulate(&m, &SimConfig::relaxation(x0.clone(), 5.0)).unwrap();
        let b = simulate(&m, &SimConfig::relaxation(x0.iter().map(|x| 3.0 * x).collect(), 5.0)).unwrap();
        let peak = b.loss_series.iter().copied().fold(0.0, f64::max);
        for (la, lb) in a.loss_series.iter().zip(&b.loss_series) {
            assert!((lb - 9.0 * la).abs() <= 1e-12 * peak);
        }
    }

    #[test]
    fn impulse_energy_matches_closed_form() {
        let g = path_graph(3, Susceptances::Constant(1.0), 0.2).unwrap();
        let p = unit(0.2);
        let m = assemble_decoupled(&g, &p).unwrap();
        let total = impulse_energy_total(&m).unwrap();
        let h = h2_norm_analytic(&p, m.laplacian_eigenvalues()).unwrap().total;
        assert_relative_eq!(total, h, max_relative = 1e-6);
    }

    #[test]
    fn complete_graph_channels_are_symmetric() {
        let g = complete_graph(4, Susceptances::Constant(1.0), 0.2).unwrap();
        let m = assemble_decoupled(&g, &unit(0.2)).unwrap();
        let e: Vec<f64> = (0..4).map(|ch| impulse_energy(&m, ch).unwrap()).collect();
        for x in &e[1..] {
            assert_relative_eq!(*x, e[0], max_relative = 1e-9);
        }
        assert_eq!(impulse_energy(&two_node(0.0), 0).unwrap(), 0.0);
    }

    #[test]
    fn trajectory_csv() {
        let t = simulate(&two_node(0.2), &SimConfig { record_stride: 500, ..SimConfig::relaxation(vec![0.1, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0) }).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,delta_1,delta_2,omega_1,omega_2,V_1,V_2,loss");
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn batch_means_on_constant_series() {
        let mut b = BatchMeans::new(1000);
        for _ in 0..1000 {
            b.push(2.5);
        }
        let (mean, se) = b.finish();
        assert_eq!(mean, 2.5);
        assert_eq!(se, 0.0);
    }
}
