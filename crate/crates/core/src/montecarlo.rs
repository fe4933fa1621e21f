//! Metropolis sampling of the finite-N eigenvalue law
//! `P(λ) ∝ exp(-β E(λ; s))`, `E = -Σ_{i<j} log|λi - λj| + N Σ W_s(λi)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{solve_one_cut, EquilibriumMeasure};
use crate::error::{Error, Result};
use crate::model::{tilt, ConfinementPotential, GasParameters, LinearStatistic, Polynomial, Walls};

const COINCIDENCE: f64 = 1e-14;
const RESYNC_SWEEPS: usize = 10_000;
const TARGET_ACCEPTANCE: f64 = 0.4;
const TUNE_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub gas: GasParameters,
    pub potential: ConfinementPotential,
    /// Recorded statistic `F = N⁻¹ Σ f(λi)`.
    pub observable: LinearStatistic,
    /// Statistic tilting the energy by `s·N·Σ f_t(λi)`.
    pub tilt_statistic: Option<LinearStatistic>,
    pub tilt_s: f64,
    /// Initial proposal half-width.
    pub step_scale: f64,
    /// Adapt the step during burn-in towards 40% acceptance.
    pub auto_tune: bool,
    pub seed: u64,
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub histogram_bins: usize,
}

impl ChainConfig {
    /// Defaults: step 0.1, tuning on, 10⁵ sweeps of which 10⁴ burn-in.
    pub fn new(
        gas: GasParameters,
        potential: ConfinementPotential,
        observable: LinearStatistic,
    ) -> Self {
        ChainConfig {
            gas,
            potential,
            observable,
            tilt_statistic: None,
            tilt_s: 0.0,
            step_scale: 0.1,
            auto_tune: true,
            seed: 0,
            n_sweeps: 100_000,
            burn_in: 10_000,
            thinning: 1,
            histogram_bins: 50,
        }
    }

    /// Tilt by `s` along the observable itself.
    pub fn tilted(mut self, s: f64) -> Self {
        self.tilt_statistic = Some(self.observable.clone());
        self.tilt_s = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_sweeps {
            return Err(Error::InvalidParameter(format!(
                "burn_in ({}) must be smaller than n_sweeps ({})",
                self.burn_in, self.n_sweeps
            )));
        }
        if self.thinning == 0 || self.histogram_bins == 0 {
            return Err(Error::InvalidParameter(
                "thinning and histogram_bins must be positive".into(),
            ));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step_scale must be positive, got {}",
                self.step_scale
            )));
        }
        self.tilted_potential().map(|_| ())
    }

    /// `W_s = V + s·f_t`.
    pub fn tilted_potential(&self) -> Result<ConfinementPotential> {
        match &self.tilt_statistic {
            Some(f) => tilt(&self.potential, f, self.tilt_s),
            None => Ok(self.potential.clone()),
        }
    }
}

/// One-body part `N·W_s` and walls, cached for the inner loop.
#[derive(Debug, Clone)]
struct Field {
    w: Polynomial,
    walls: Walls,
    n: f64,
    beta: f64,
}

impl Field {
    fn new(config: &ChainConfig) -> Result<Self> {
        let w = config.tilted_potential()?;
        Ok(Field {
            w: w.polynomial().clone(),
            walls: *w.walls(),
            n: config.gas.n_particles() as f64,
            beta: config.gas.beta(),
        })
    }

    fn energy(&self, lambda: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..lambda.len() {
            for j in i + 1..lambda.len() {
                e -= (lambda[i] - lambda[j]).abs().ln();
            }
            e += self.n * self.w.eval(lambda[i]);
        }
        e
    }

    /// Energy change for moving particle `i` to `new`, or `None` if the move
    /// lands on another particle.
    fn delta(&self, lambda: &[f64], i: usize, new: f64) -> Option<f64> {
        let old = lambda[i];
        let mut log_ratio = 0.0;
        let mut prod = 1.0;
        let mut count = 0;
        for (j, &lj) in lambda.iter().enumerate() {
            if j == i {
                continue;
            }
            let dn = (new - lj).abs();
            if dn < COINCIDENCE {
                return None;
            }
            prod *= dn / (old - lj).abs();
            count += 1;
            if count == 8 {
                log_ratio += prod.ln();
                prod = 1.0;
                count = 0;
            }
        }
        log_ratio += prod.ln();
        Some(-log_ratio + self.n * (self.w.eval(new) - self.w.eval(old)))
    }
}

/// Metropolis acceptance probability `min(1, exp(-βΔE))` of moving
/// particle `i` of `lambda` to `new` (0 outside the walls or on another
/// particle).
pub fn acceptance_probability(
    config: &ChainConfig,
    lambda: &[f64],
    i: usize,
    new: f64,
) -> Result<f64> {
    let field = Field::new(config)?;
    if !field.walls.contains(new) {
        return Ok(0.0);
    }
    Ok(match field.delta(lambda, i, new) {
        None => 0.0,
        Some(de) if de <= 0.0 => 1.0,
        Some(de) => (-field.beta * de).exp(),
    })
}

/// Energy `E(λ; s)` of a configuration under the config's tilted potential.
pub fn energy(config: &ChainConfig, lambda: &[f64]) -> Result<f64> {
    Ok(Field::new(config)?.energy(lambda))
}

/// Microstate of a chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    eigenvalues: Vec<f64>,
    energy: f64,
    rng: ChaCha8Rng,
    field: Field,
    step: f64,
    proposed: u64,
    accepted: u64,
    coincident: u64,
    max_drift: f64,
    sweeps: usize,
}

impl ChainState {
    /// Start at the quantiles `(i - 1/2)/N` of the continuum density of the
    /// tilted potential.
    pub fn new(config: &ChainConfig) -> Result<Self> {
        config.validate()?;
        let field = Field::new(config)?;
        let n = config.gas.n_particles();
        let eigenvalues = match solve_one_cut(&config.tilted_potential()?) {
            Ok(m) => warm_start(&m, n),
            Err(e) => {
                log::warn!("no continuum warm start ({e}); starting from a uniform spread");
                uniform_start(&field.walls, n)
            }
        };
        Self::from_eigenvalues(config, eigenvalues)
    }

    pub fn from_eigenvalues(config: &ChainConfig, eigenvalues: Vec<f64>) -> Result<Self> {
        let field = Field::new(config)?;
        if eigenvalues.len() != config.gas.n_particles() {
            return Err(Error::InvalidParameter(format!(
                "expected {} eigenvalues, got {}",
                config.gas.n_particles(),
                eigenvalues.len()
            )));
        }
        if let Some(x) = eigenvalues.iter().find(|&&x| !field.walls.contains(x)) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue {x} is not strictly inside the walls {}",
                field.walls
            )));
        }
        let energy = field.energy(&eigenvalues);
        Ok(ChainState {
            eigenvalues,
            energy,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            field,
            step: config.step_scale,
            proposed: 0,
            accepted: 0,
            coincident: 0,
            max_drift: 0.0,
            sweeps: 0,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Cached energy, updated incrementally.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn coincident_rejections(&self) -> u64 {
        self.coincident
    }

    /// Largest relative difference seen between the cached and the
    /// recomputed energy.
    pub fn max_energy_drift(&self) -> f64 {
        self.max_drift
    }

    /// One sweep: `N` single-particle proposals in order.
    pub fn sweep(&mut self) {
        let n = self.eigenvalues.len();
        for i in 0..n {
            let u: f64 = self.rng.random_range(-1.0..1.0);
            let new = self.eigenvalues[i] + self.step * u;
            self.proposed += 1;
            if !self.field.walls.contains(new) {
                continue;
            }
            let Some(de) = self.field.delta(&self.eigenvalues, i, new) else {
                self.coincident += 1;
                continue;
            };
            let accept = de <= 0.0 || self.rng.random::<f64>() < (-self.field.beta * de).exp();
            if accept {
                self.eigenvalues[i] = new;
                self.energy += de;
                self.accepted += 1;
            }
        }
        self.sweeps += 1;
        if self.sweeps.is_multiple_of(RESYNC_SWEEPS) {
            self.resync();
        }
    }

    /// Replace the cached energy by a full recomputation.
    pub fn resync(&mut self) {
        let full = self.field.energy(&self.eigenvalues);
        let drift = (self.energy - full).abs() / full.abs().max(1.0);
        self.max_drift = self.max_drift.max(drift);
        self.energy = full;
    }

    fn tune(&mut self, window_rate: f64) {
        self.step *= (2.0 * (window_rate - TARGET_ACCEPTANCE)).exp();
        if let (Some(a), Some(b)) = (
            self.field.walls.lower().finite(),
            self.field.walls.upper().finite(),
        ) {
            self.step = self.step.min(b - a);
        }
    }
}

fn warm_start(m: &EquilibriumMeasure, n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n)
        .map(|i| m.quantile((i as f64 + 0.5) / n as f64))
        .collect();
    for i in 1..n {
        if out[i] <= out[i - 1] {
            out[i] = out[i - 1] + 1e-9 * (1.0 + out[i - 1].abs());
        }
    }
    out
}

fn uniform_start(walls: &Walls, n: usize) -> Vec<f64> {
    let a = walls.lower().finite().unwrap_or(-1.0);
    let b = walls.upper().finite().unwrap_or(a + 2.0);
    (0..n)
        .map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    pub mean_f: f64,
    pub var_f: f64,
    /// Standard error of `mean_f` corrected for autocorrelation.
    pub stderr: f64,
    pub histogram: Histogram,
    /// Integrated autocorrelation time in recorded samples.
    pub autocorrelation_time: f64,
    pub n_effective: f64,
    pub n_samples: usize,
    pub acceptance_rate: f64,
    pub step: f64,
    pub coincident_rejections: u64,
    pub max_energy_drift: f64,
}

/// Run a chain and summarise the recorded `F` samples.
pub fn run_chain(config: &ChainConfig) -> Result<EmpiricalSummary> {
    let mut state = ChainState::new(config)?;
    let mut window = (0u64, 0u64);
    for k in 0..config.burn_in {
        state.sweep();
        if config.auto_tune && (k + 1) % TUNE_WINDOW == 0 {
            let rate = (state.accepted - window.0) as f64 / (state.proposed - window.1) as f64;
            state.tune(rate);
            window = (state.accepted, state.proposed);
        }
    }
    state.proposed = 0;
    state.accepted = 0;
    let f = config.observable.polynomial();
    let n = config.gas.n_particles() as f64;
    let mut samples = Vec::with_capacity((config.n_sweeps - config.burn_in) / config.thinning);
    for k in config.burn_in..config.n_sweeps {
        state.sweep();
        if (k - config.burn_in + 1).is_multiple_of(config.thinning) {
            let v: f64 = state.eigenvalues.iter().map(|&x| f.eval(x)).sum::<f64>() / n;
            samples.push(v);
        }
    }
    state.resync();
    let coincident_rate = state.coincident as f64 / state.proposed.max(1) as f64;
    if coincident_rate > 0.01 {
        log::warn!(
            "{:.2}% of proposals landed on another eigenvalue and were rejected",
            100.0 * coincident_rate
        );
    }
    Ok(summarize(&samples, config.histogram_bins, &state))
}

fn summarize(samples: &[f64], bins: usize, state: &ChainState) -> EmpiricalSummary {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
    } else {
        0.0
    };
    let tau = integrated_autocorrelation_time(samples).max(1.0);
    let n_eff = n as f64 / tau;
    EmpiricalSummary {
        mean_f: mean,
        var_f: var,
        stderr: (var / n_eff).sqrt(),
        histogram: histogram(samples, bins),
        autocorrelation_time: tau,
        n_effective: n_eff,
        n_samples: n,
        acceptance_rate: state.acceptance_rate(),
        step: state.step,
        coincident_rejections: state.coincident,
        max_energy_drift: state.max_drift,
    }
}

/// Geyer's initial positive sequence estimator of `τ = 1 + 2 Σ ρ_k`.
pub fn integrated_autocorrelation_time(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let gamma = |k: usize| -> f64 {
        d[..n - k]
            .iter()
            .zip(&d[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let g0 = gamma(0);
    if g0 == 0.0 {
        return 1.0;
    }
    // pair sums Γ_m = γ_{2m} + γ_{2m+1}, truncated at the first non-positive
    // one and forced monotone
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n / 2 {
        let pair = gamma(2 * m) + gamma(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    // τ = -1 + 2 Σ Γ_m / γ_0
    (2.0 * sum / g0 - 1.0).max(f64::MIN_POSITIVE)
}

fn histogram(samples: &[f64], bins: usize) -> Histogram {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltedMeanCheck {
    pub empirical_mean: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub z_score: f64,
    pub summary: EmpiricalSummary,
}

/// Compare the tilted chain's mean of `F` with `x*(s)`.
pub fn tilted_mean_check(config: &ChainConfig) -> Result<TiltedMeanCheck> {
    let measure = solve_one_cut(&config.tilted_potential()?)?;
    let predicted = measure.statistic_value(&config.observable);
    let summary = run_chain(config)?;
    let z = if summary.stderr > 0.0 {
        (summary.mean_f - predicted) / summary.stderr
    } else {
        0.0
    };
    Ok(TiltedMeanCheck {
        empirical_mean: summary.mean_f,
        stderr: summary.stderr,
        predicted,
        z_score: z,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_config(n: usize, sweeps: usize) -> ChainConfig {
        let mut c = ChainConfig::new(
            GasParameters::new(n, 2.0).unwrap(),
            ConfinementPotential::hard_box(-1.0, 1.0).unwrap(),
            LinearStatistic::power(1).unwrap(),
        );
        c.n_sweeps = sweeps;
        c.burn_in = sweeps / 10;
        c.seed = 7;
        c
    }

    #[test]
    fn zero_energy_change_is_always_accepted() {
        // V = 0, N = 2: moving one particle to its mirror distance keeps |λ1 - λ2|
        let c = box_config(2, 10);
        let p = acceptance_probability(&c, &[0.0, 0.2], 0, 0.4).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(
            acceptance_probability(&c, &[0.0, 0.2], 0, 1.5).unwrap(),
            0.0
        );
    }

    #[test]
    fn detailed_balance_on_two_particles() {
        let c = box_config(2, 10).tilted(0.7);
        let states = [[-0.3, 0.4], [0.1, 0.4], [-0.8, 0.4], [0.35, 0.4]];
        for x in &states {
            for y in &states {
                let ex = energy(&c, x).unwrap();
                let ey = energy(&c, y).unwrap();
                let pxy = acceptance_probability(&c, x, 0, y[0]).unwrap();
                let pyx = acceptance_probability(&c, y, 0, x[0]).unwrap();
                let lhs = (-2.0 * ex).exp() * pxy;
                let rhs = (-2.0 * ey).exp() * pyx;
                assert!((lhs - rhs).abs() <= 1e-14 * lhs.max(rhs), "{x:?} {y:?}");
            }
        }
    }

    #[test]
    fn incremental_energy_matches_recomputation() {
        let c = box_config(8, 20_000);
        let mut st = ChainState::new(&c).unwrap();
        for _ in 0..RESYNC_SWEEPS {
            st.sweep();
        }
        assert!(st.max_energy_drift() < 1e-8);
        let cached = st.energy();
        st.resync();
        assert!((cached - st.energy()).abs() <= 1e-8 * st.energy().abs().max(1.0));
    }

    #[test]
    fn two_particle_symmetry() {
        let s = run_chain(&box_config(2, 200_000)).unwrap();
        assert!(
            s.mean_f.abs() < 4.0 * s.stderr,
            "{} ± {}",
            s.mean_f,
            s.stderr
        );
    }

    #[test]
    fn tuned_acceptance_rate() {
        let s = run_chain(&box_config(8, 20_000)).unwrap();
        assert!(
            s.acceptance_rate > 0.2 && s.acceptance_rate < 0.6,
            "{}",
            s.acceptance_rate
        );
        assert!(s.n_effective <= s.n_samples as f64);
    }

    #[test]
    fn seed_reproducible() {
        let a = run_chain(&box_config(4, 5_000)).unwrap();
        let b = run_chain(&box_config(4, 5_000)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn autocorrelation_of_ar1() {
        // AR(1) with φ = 0.5 has τ = (1 + φ)/(1 - φ) = 3
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = vec![0.0; 200_000];
        for i in 1..x.len() {
            let e: f64 = rng.random_range(-1.0..1.0);
            x[i] = 0.5 * x[i - 1] + e;
        }
        let tau = integrated_autocorrelation_time(&x);
        assert!((tau - 3.0).abs() < 0.15, "{tau}");
    }

    #[test]
    fn burn_in_must_be_shorter_than_run() {
        let mut c = box_config(4, 100);
        c.burn_in = 100;
        assert!(run_chain(&c).is_err());
    }
}
