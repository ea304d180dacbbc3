//! CMA-ES over a bounded, grid-discretized parameter space.
//!
//! Candidates are drawn from `N(m, sigma^2 C)`, clamped to the bounds and
//! snapped to a per-coordinate grid before evaluation. The mean is the
//! weighted recombination of the best candidates; the covariance receives a
//! rank-one update from its evolution path, and the step size follows the
//! length of a second path. The mean and covariance stay continuous; only
//! evaluated candidates are snapped.

mod search;

pub use search::{default_bounds, optimize, Layout, RigOptimization, RigTemplate, SearchSpace};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    /// Candidates per iteration.
    pub population: usize,
    /// Candidates recombined into the new mean.
    pub elite: usize,
    /// Recombination weights, best first. Length `elite`, sums to 1.
    pub weights: Vec<f64>,
    pub c_c: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    /// Grid spacing per coordinate; the grid is anchored at `lower`.
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub max_iterations: usize,
    pub seed: u64,
    pub initial_mean: Vec<f64>,
    pub initial_sigma: f64,
    /// Added to the covariance diagonal before factorization.
    pub jitter: f64,
}

/// `w_i ∝ ln(M + 1/2) - ln i`, normalized.
pub fn default_weights(elite: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=elite).map(|i| (elite as f64 + 0.5).ln() - (i as f64).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Effective selection mass `1 / sum(w_i^2)`.
pub fn effective_mass(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// `E||N(0, I_n)||` approximation.
pub fn expected_normal_norm(n: usize) -> f64 {
    let n = n as f64;
    n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
}

impl OptConfig {
    /// Standard population size, weights and learning rates for the given
    /// dimension.
    pub fn standard(
        initial_mean: Vec<f64>,
        initial_sigma: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        grid: Vec<f64>,
    ) -> Result<Self> {
        let n = initial_mean.len();
        if n == 0 {
            return Err(invalid("optimization needs at least one coordinate"));
        }
        let population = 4 + (3.0 * (n as f64).ln()).floor() as usize;
        let mut cfg = Self {
            population,
            elite: 0,
            weights: Vec::new(),
            c_c: 0.0,
            c_sigma: 0.0,
            d_sigma: 0.0,
            grid,
            lower,
            upper,
            max_iterations: 100,
            seed: 0,
            initial_mean,
            initial_sigma,
            jitter: DEFAULT_JITTER,
        };
        cfg.set_population(population, population / 2)?;
        Ok(cfg)
    }

    /// Changes population and elite counts, recomputing the weights and the
    /// learning rates that depend on them.
    pub fn set_population(&mut self, population: usize, elite: usize) -> Result<()> {
        if elite == 0 || elite > population {
            return Err(invalid(format!("need 1 <= elite ({elite}) <= population ({population})")));
        }
        let n = self.dim() as f64;
        self.population = population;
        self.elite = elite;
        self.weights = default_weights(elite);
        let mu_eff = effective_mass(&self.weights);
        self.c_c = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        self.c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        self.d_sigma = 1.0 + self.c_sigma;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.initial_mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(invalid("optimization needs at least one coordinate"));
        }
        for (name, len) in [("grid", self.grid.len()), ("lower", self.lower.len()), ("upper", self.upper.len())] {
            if len != n {
                return Err(invalid(format!("{name} has {len} entries, expected {n}")));
            }
        }
        if self.elite == 0 || self.elite > self.population {
            return Err(invalid(format!("need 1 <= elite ({}) <= population ({})", self.elite, self.population)));
        }
        if self.weights.len() != self.elite {
            return Err(invalid("weights length must equal elite count"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("weights must sum to 1"));
        }
        if !self.weights.windows(2).all(|w| w[0] >= w[1]) || !self.weights.iter().all(|&w| w > 0.0) {
            return Err(invalid("weights must be positive and non-increasing"));
        }
        // zero learning rates are allowed: they freeze C and sigma
        for (name, v) in [("c_c", self.c_c), ("c_sigma", self.c_sigma)] {
            if !(0.0..1.0).contains(&v) {
                return Err(invalid(format!("{name} = {v} must lie in [0, 1)")));
            }
        }
        if !(self.d_sigma > 0.0) {
            return Err(invalid("d_sigma must be positive"));
        }
        if !(self.initial_sigma > 0.0 && self.initial_sigma.is_finite()) {
            return Err(invalid("initial sigma must be positive"));
        }
        for i in 0..n {
            if !(self.grid[i] > 0.0) {
                return Err(invalid(format!("grid spacing {} at coordinate {i} must be positive", self.grid[i])));
            }
            if !(self.lower[i] <= self.upper[i]) {
                return Err(invalid(format!("empty bounds at coordinate {i}")));
            }
            if !self.initial_mean[i].is_finite() {
                return Err(invalid("initial mean must be finite"));
            }
        }
        if !(self.jitter >= 0.0) {
            return Err(invalid("jitter must be non-negative"));
        }
        Ok(())
    }

    /// Clamps to the bounds, then snaps to the nearest grid point that is
    /// still inside them.
    pub fn snap(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let (lo, hi, d) = (self.lower[i], self.upper[i], self.grid[i]);
                let steps_max = ((hi - lo) / d + 1e-9).floor();
                let k = ((v.clamp(lo, hi) - lo) / d).round().clamp(0.0, steps_max);
                lo + k * d
            })
            .collect()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, &v)| v.clamp(self.lower[i], self.upper[i])).collect()
    }
}

/// The evolving search distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub path_c: DVector<f64>,
    pub path_sigma: DVector<f64>,
    pub iteration: usize,
}

impl OptState {
    pub fn initial(config: &OptConfig) -> Self {
        let n = config.dim();
        Self {
            mean: DVector::from_vec(config.clamp(&config.initial_mean)),
            sigma: config.initial_sigma,
            cov: DMatrix::identity(n, n),
            path_c: DVector::zeros(n),
            path_sigma: DVector::zeros(n),
            iteration: 0,
        }
    }

    /// Lower Cholesky factor of `C + jitter I`.
    pub fn factor(&self, jitter: f64) -> Result<DMatrix<f64>> {
        let n = self.cov.nrows();
        let jittered = &self.cov + DMatrix::identity(n, n) * jitter;
        jittered.cholesky().map(|c| c.l()).ok_or_else(|| Error::Optimizer("covariance is not positive definite".into()))
    }
}

/// Candidate for a given standard-normal draw `z`, using a precomputed factor.
pub fn candidate_from_normal(state: &OptState, config: &OptConfig, factor: &DMatrix<f64>, z: &[f64]) -> Vec<f64> {
    let z = DVector::from_column_slice(z);
    let x = &state.mean + factor * z * state.sigma;
    config.snap(x.as_slice())
}

/// Draws one candidate `snap(clamp(m + sigma L z))`.
pub fn sample_candidate(state: &OptState, config: &OptConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let factor = state.factor(config.jitter)?;
    let z: Vec<f64> = (0..config.dim()).map(|_| StandardNormal.sample(rng)).collect();
    Ok(candidate_from_normal(state, config, &factor, &z))
}

/// Weighted recombination of elites sorted best-first.
pub fn update_mean(elites: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = elites.first().map_or(0, Vec::len);
    let mut m = vec![0.0; n];
    for (e, &w) in elites.iter().zip(weights) {
        for (mi, ei) in m.iter_mut().zip(e) {
            *mi += w * ei;
        }
    }
    m
}

/// Evolution paths, rank-one covariance update and step-size adaptation;
/// then moves the mean to `new_mean` (clamped to the bounds).
pub fn update_paths_and_cov(state: &mut OptState, new_mean: &[f64], config: &OptConfig) {
    let n = config.dim();
    let mu_eff = effective_mass(&config.weights);
    let step = (DVector::from_column_slice(new_mean) - &state.mean) / state.sigma;

    let cc = config.c_c;
    let coef_c = (1.0 - (1.0 - cc).powi(2)).sqrt() * mu_eff.sqrt();
    state.path_c = &state.path_c * (1.0 - cc) + &step * coef_c;
    let rank_one = &state.path_c * state.path_c.transpose();
    let cov = &state.cov * (1.0 - cc) + rank_one * cc;
    state.cov = (&cov + cov.transpose()) * 0.5;

    let cs = config.c_sigma;
    let coef_s = (1.0 - (1.0 - cs).powi(2)).sqrt() * mu_eff.sqrt();
    state.path_sigma = &state.path_sigma * (1.0 - cs) + &step * coef_s;
    let ratio = state.path_sigma.norm() / expected_normal_norm(n);
    state.sigma *= ((cs / config.d_sigma) * (ratio - 1.0)).exp();

    state.mean = DVector::from_vec(config.clamp(new_mean));
    state.iteration += 1;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub best_error: f64,
    pub sigma: f64,
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptOutcome {
    pub best: Vec<f64>,
    pub best_error: f64,
    pub history: Vec<HistoryRecord>,
    pub evaluations: usize,
}

fn evaluate_all<F>(objective: &F, candidates: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let f = |c: &Vec<f64>| {
        let e = objective(c);
        if e.is_nan() {
            f64::INFINITY
        } else {
            e
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        candidates.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        candidates.iter().map(f).collect()
    }
}

/// Minimizes `objective`. The snapped initial mean is evaluated first, then
/// `max_iterations` generations run. History has one record for the initial
/// evaluation and one per generation.
pub fn minimize<F>(objective: F, config: &OptConfig) -> Result<OptOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = OptState::initial(config);

    let start = config.snap(state.mean.as_slice());
    let mut best_error = evaluate_all(&objective, std::slice::from_ref(&start))[0];
    let mut best = start;
    let mut evaluations = 1;
    let record = |state: &OptState, best_error: f64| HistoryRecord {
        iteration: state.iteration,
        best_error,
        sigma: state.sigma,
        mean: state.mean.as_slice().to_vec(),
    };
    let mut history = vec![record(&state, best_error)];

    for _ in 0..config.max_iterations {
        let factor = state.factor(config.jitter)?;
        let candidates: Vec<Vec<f64>> = (0..config.population)
            .map(|_| {
                let z: Vec<f64> = (0..config.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
                candidate_from_normal(&state, config, &factor, &z)
            })
            .collect();
        let errors = evaluate_all(&objective, &candidates);
        evaluations += candidates.len();

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
        if errors[order[0]] < best_error {
            best_error = errors[order[0]];
            best = candidates[order[0]].clone();
        }
        let elites: Vec<Vec<f64>> = order[..config.elite].iter().map(|&i| candidates[i].clone()).collect();
        let new_mean = update_mean(&elites, &config.weights);
        update_paths_and_cov(&mut state, &new_mean, config);
        if !(state.sigma > 0.0 && state.sigma.is_finite()) {
            return Err(Error::Optimizer(format!("step size degenerated to {}", state.sigma)));
        }
        history.push(record(&state, best_error));
    }
    Ok(OptOutcome { best, best_error, history, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> OptConfig {
        OptConfig::standard(vec![0.0; n], 1.0, vec![-5.0; n], vec![5.0; n], vec![0.1; n]).unwrap()
    }

    #[test]
    fn standard_settings() {
        let c = cfg(10);
        assert_eq!(c.population, 10);
        assert_eq!(c.elite, 5);
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(c.weights.windows(2).all(|w| w[0] > w[1]));
        let mu = effective_mass(&c.weights);
        assert!((c.c_c - 2.0 / (11.3f64.powi(2) + mu)).abs() < 1e-15);
        assert!((c.c_sigma - (mu + 2.0) / (15.0 + mu)).abs() < 1e-15);
        assert_eq!(c.d_sigma, 1.0 + c.c_sigma);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(3);
        assert!(c.set_population(4, 5).is_err());
        assert!(c.set_population(4, 0).is_err());
        c.grid[1] = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(3);
        c.weights[0] += 0.1;
        assert!(c.validate().is_err());
        let mut c = cfg(3);
        c.c_c = 1.0;
        assert!(c.validate().is_err());
        let mut c = cfg(3);
        c.lower.pop();
        assert!(c.validate().is_err());
    }

    #[test]
    fn snapping_stays_on_grid_inside_bounds() {
        let mut c = cfg(2);
        c.upper = vec![0.95, 5.0];
        let s = c.snap(&[0.94, -7.0]);
        assert!((s[0] - 0.9).abs() < 1e-12, "0.95 is off-grid; the top grid point is 0.9");
        assert_eq!(s[1], -5.0);
        let s = c.snap(&[0.123, 0.149]);
        assert!((s[0] - 0.1).abs() < 1e-12 && (s[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_sigma_candidate_is_snapped_mean() {
        let mut c = cfg(3);
        c.initial_mean = vec![0.26, -1.04, 3.3];
        let mut state = OptState::initial(&c);
        state.sigma = 1e-300;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = sample_candidate(&state, &c, &mut rng).unwrap();
        assert_eq!(x, c.snap(&[0.26, -1.04, 3.3]));
    }

    #[test]
    fn recorded_draws_give_hand_computed_candidate() {
        let mut c = cfg(3);
        c.initial_mean = vec![1.0, 2.0, -1.0];
        c.initial_sigma = 0.5;
        let state = OptState::initial(&c);
        let l = state.factor(0.0).unwrap();
        let z = [0.3, -1.2, 2.5];
        // m + 0.5 z = (1.15, 1.4, 0.25) -> grid 0.1 anchored at -5
        let x = candidate_from_normal(&state, &c, &l, &z);
        let expect = [1.2, 1.4, 0.3];
        for i in 0..3 {
            assert!((x[i] - expect[i]).abs() < 1e-12, "{x:?}");
        }
        // bound violation: 1 + 0.5 * 20 = 11 -> clamp to 5
        let x = candidate_from_normal(&state, &c, &l, &[20.0, 0.0, -30.0]);
        assert_eq!((x[0], x[2]), (5.0, -5.0));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let c = cfg(4);
        let state = OptState::initial(&c);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| sample_candidate(&state, &c, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn non_pd_covariance_fails() {
        let c = cfg(2);
        let mut state = OptState::initial(&c);
        state.cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_candidate(&state, &c, &mut rng), Err(Error::Optimizer(_))));
    }

    #[test]
    fn mean_update_examples() {
        let a = vec![1.0, 2.0];
        let b = vec![3.0, -2.0];
        assert_eq!(update_mean(std::slice::from_ref(&a), &[1.0]), a);
        assert_eq!(update_mean(&[a.clone(), b.clone()], &[0.5, 0.5]), vec![2.0, 0.0]);
        let c = vec![-10.0, 10.0];
        let m = update_mean(&[a, b, c], &[0.7, 0.2, 0.1]);
        // 0.7*1 + 0.2*3 - 0.1*10 = 0.3 ; 0.7*2 - 0.2*2 + 0.1*10 = 2.0
        assert!((m[0] - 0.3).abs() < 1e-12 && (m[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_step_shrinks_sigma() {
        let c = cfg(4);
        let mut state = OptState::initial(&c);
        let m = state.mean.as_slice().to_vec();
        update_paths_and_cov(&mut state, &m, &c);
        assert!(state.path_c.iter().all(|&x| x == 0.0));
        assert!(state.path_sigma.iter().all(|&x| x == 0.0));
        let expect = (-c.c_sigma / c.d_sigma).exp();
        assert!((state.sigma - expect).abs() < 1e-15);
        assert_eq!(state.cov, DMatrix::identity(4, 4) * (1.0 - c.c_c));
    }

    #[test]
    fn single_update_matches_hand_evaluation() {
        let mut c = cfg(2);
        c.weights = vec![0.6, 0.4];
        c.elite = 2;
        c.c_c = 0.2;
        c.c_sigma = 0.3;
        c.d_sigma = 1.3;
        c.initial_sigma = 0.5;
        let mut state = OptState::initial(&c);
        update_paths_and_cov(&mut state, &[0.1, -0.2], &c);
        // mu_eff = 1 / (0.36 + 0.16); step = (0.2, -0.4)
        let mu = 1.0 / 0.52f64;
        let kc = (1.0 - 0.8f64 * 0.8).sqrt() * mu.sqrt();
        let pc = [0.2 * kc, -0.4 * kc];
        assert!((state.path_c[0] - pc[0]).abs() < 1e-12 && (state.path_c[1] - pc[1]).abs() < 1e-12);
        let cov = [0.8 + 0.2 * pc[0] * pc[0], 0.2 * pc[0] * pc[1], 0.8 + 0.2 * pc[1] * pc[1]];
        assert!((state.cov[(0, 0)] - cov[0]).abs() < 1e-12);
        assert!((state.cov[(0, 1)] - cov[1]).abs() < 1e-12);
        assert!((state.cov[(1, 0)] - cov[1]).abs() < 1e-12);
        assert!((state.cov[(1, 1)] - cov[2]).abs() < 1e-12);
        let ks = (1.0 - 0.7f64 * 0.7).sqrt() * mu.sqrt();
        let ps_norm = (0.04f64 + 0.16).sqrt() * ks;
        let en = expected_normal_norm(2);
        let sigma = 0.5 * ((0.3 / 1.3) * (ps_norm / en - 1.0)).exp();
        assert!((state.sigma - sigma).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_path_keeps_sigma() {
        let c = cfg(5);
        let mut state = OptState::initial(&c);
        let en = expected_normal_norm(5);
        // choose the path so that after decay and zero step its norm is E||N||
        state.path_sigma = DVector::from_element(5, en / (1.0 - c.c_sigma) / 5f64.sqrt());
        let m = state.mean.as_slice().to_vec();
        update_paths_and_cov(&mut state, &m, &c);
        assert!((state.path_sigma.norm() - en).abs() < 1e-12);
        assert!((state.sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_rates_keep_distribution_shape() {
        let mut c = cfg(3);
        c.c_c = 0.0;
        c.c_sigma = 0.0;
        let out = {
            let mut state = OptState::initial(&c);
            update_paths_and_cov(&mut state, &[1.0, -1.0, 0.5], &c);
            state
        };
        assert_eq!(out.cov, DMatrix::identity(3, 3));
        assert_eq!(out.sigma, 1.0);
    }

    #[test]
    fn quadratic_descends() {
        let mut c = cfg(3);
        c.initial_mean = vec![3.0, -3.0, 2.0];
        c.max_iterations = 200;
        c.seed = 5;
        let target = [0.5, -0.3, 1.2];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let out = minimize(f, &c).unwrap();
        assert!(out.best_error < 1e-12, "{}", out.best_error);
        assert!(out.history.windows(2).all(|w| w[1].best_error <= w[0].best_error));
        assert_eq!(out.history.len(), 201);
        assert_eq!(out.evaluations, 1 + 200 * c.population);
    }

    #[test]
    fn zero_iterations_returns_initial_mean() {
        let mut c = cfg(2);
        c.initial_mean = vec![1.04, 2.0];
        c.max_iterations = 0;
        let out = minimize(|x: &[f64]| x[0] + x[1], &c).unwrap();
        assert_eq!(out.best, c.snap(&[1.04, 2.0]));
        assert_eq!(out.evaluations, 1);
        assert_eq!(out.history.len(), 1);
    }
}
