//! Categorical diffusion forward process, posterior, and class-count collapse.
//!
//! The forward kernel over `K` classes mixes the previous state with the
//! uniform distribution, `q(x_t | x_{t-1}) = Cat((1 - beta_t) x_{t-1} +
//! beta_t / K)`, which closes over `t` steps to `q(x_t | x_0) =
//! Cat(abar_t x_0 + (1 - abar_t) / K)` with `abar_t` the running product of
//! `alpha_t = 1 - beta_t`. Conditioning a step on both its endpoints gives the
//! forward posterior `q(x_{t-1} | x_t, x_0) = Cat(pi / sum(pi))` with
//!
//! ```text
//! pi = [alpha_t x_t + (1 - alpha_t)/K] . [abar_{t-1} x_0 + (1 - abar_{t-1})/K]
//! ```
//!
//! As `K` grows with everything else fixed, the uniform terms vanish and the
//! posterior degenerates onto `Cat(x_0)`: a denoiser trained against this
//! posterior on a huge class count is pushed toward reproducing a single
//! class. [`collapse_curve`] measures that degeneration as a total-variation
//! distance per `K`, and the Monte Carlo sampler provides an independent check
//! of the closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollapseError {
    #[error("schedule must contain at least one step")]
    EmptySchedule,
    #[error("beta values must be strictly increasing within (0, 1): {0}")]
    InvalidSchedule(String),
    #[error("time step {t} outside the valid range [{min}, {max}]")]
    TimeOutOfRange { t: usize, min: usize, max: usize },
    #[error("state is not a one-hot vector")]
    NotOneHot,
    #[error("states have mismatched class counts: {0} vs {1}")]
    ClassCountMismatch(usize, usize),
    #[error("distribution entries must be non-negative and sum to 1 (sum error {0})")]
    NotADistribution(f64),
    #[error("hot index {index} requires at least {index_plus_one} classes, got {k}")]
    HotIndexOutOfRange {
        index: usize,
        index_plus_one: usize,
        k: usize,
    },
}

/// Noise schedule: strictly increasing `beta_t` in (0, 1) with the derived
/// `alpha_t` and running products `abar_t`. Time indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionSchedule<T> {
    betas: Vec<T>,
    alphas: Vec<T>,
    alpha_bars: Vec<T>,
}

impl<T: Real> DiffusionSchedule<T> {
    pub fn new(betas: Vec<T>) -> Result<Self, CollapseError> {
        if betas.is_empty() {
            return Err(CollapseError::EmptySchedule);
        }
        let mut previous = T::zero();
        for (i, &beta) in betas.iter().enumerate() {
            if !(beta > T::zero() && beta < T::one()) {
                return Err(CollapseError::InvalidSchedule(format!(
                    "beta_{} = {beta} is outside (0, 1)",
                    i + 1
                )));
            }
            if beta <= previous {
                return Err(CollapseError::InvalidSchedule(format!(
                    "beta_{} = {beta} does not increase past {previous}",
                    i + 1
                )));
            }
            previous = beta;
        }
        let alphas: Vec<T> = betas.iter().map(|&b| T::one() - b).collect();
        let mut alpha_bars = Vec::with_capacity(alphas.len());
        let mut product = T::one();
        for &alpha in &alphas {
            product = product * alpha;
            alpha_bars.push(product);
        }
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
        })
    }

    /// Linear schedule from `beta_start` to `beta_end` over `steps` steps.
    pub fn linear(steps: usize, beta_start: T, beta_end: T) -> Result<Self, CollapseError> {
        if steps == 0 {
            return Err(CollapseError::EmptySchedule);
        }
        if steps == 1 {
            return Self::new(vec![beta_start]);
        }
        let denom = T::from_usize(steps - 1).expect("step count fits scalar");
        let betas = (0..steps)
            .map(|i| {
                let t = T::from_usize(i).expect("step fits scalar") / denom;
                beta_start + t * (beta_end - beta_start)
            })
            .collect();
        Self::new(betas)
    }

    /// The stock schedule used by the CLI: 1000 linear steps from `1e-4` to
    /// `0.02`.
    pub fn default_linear() -> Self {
        Self::linear(1000, T::c(1e-4), T::c(0.02)).expect("stock schedule is valid")
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    fn check_t(&self, t: usize, min: usize) -> Result<(), CollapseError> {
        if t < min || t > self.len() {
            return Err(CollapseError::TimeOutOfRange {
                t,
                min,
                max: self.len(),
            });
        }
        Ok(())
    }

    /// `beta_t`, 1-based.
    pub fn beta(&self, t: usize) -> Result<T, CollapseError> {
        self.check_t(t, 1)?;
        Ok(self.betas[t - 1])
    }

    /// `alpha_t = 1 - beta_t`, 1-based.
    pub fn alpha(&self, t: usize) -> Result<T, CollapseError> {
        self.check_t(t, 1)?;
        Ok(self.alphas[t - 1])
    }

    /// `abar_t`, 1-based; `abar_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> Result<T, CollapseError> {
        if t == 0 {
            return Ok(T::one());
        }
        self.check_t(t, 1)?;
        Ok(self.alpha_bars[t - 1])
    }

    /// The `(alpha_t, abar_{t-1})` pair the posterior at step `t` depends on.
    pub fn posterior_params(&self, t: usize) -> Result<PosteriorParams<T>, CollapseError> {
        self.check_t(t, 2)?;
        Ok(PosteriorParams {
            alpha_t: self.alphas[t - 1],
            alpha_bar_prev: self.alpha_bars[t - 2],
        })
    }
}

/// The two scalars the forward posterior depends on. Useful directly when
/// probing parameter combinations no single monotone schedule realizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorParams<T> {
    pub alpha_t: T,
    pub alpha_bar_prev: T,
}

/// A distribution (or realized one-hot state) over `K` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalState<T> {
    probs: Vec<T>,
}

impl<T: Real> CategoricalState<T> {
    const SUM_TOLERANCE: f64 = 1e-10;

    pub fn new(probs: Vec<T>) -> Result<Self, CollapseError> {
        if probs.is_empty() {
            return Err(CollapseError::NotADistribution(1.0));
        }
        let mut sum = T::zero();
        for &p in &probs {
            if p < T::zero() || !p.is_finite() {
                return Err(CollapseError::NotADistribution(f64::NAN));
            }
            sum = sum + p;
        }
        let error = (sum - T::one()).abs().as_f64();
        if error > Self::SUM_TOLERANCE {
            return Err(CollapseError::NotADistribution(error));
        }
        Ok(Self { probs })
    }

    /// One-hot state with the given hot index.
    pub fn one_hot(k: usize, index: usize) -> Result<Self, CollapseError> {
        if index >= k {
            return Err(CollapseError::HotIndexOutOfRange {
                index,
                index_plus_one: index + 1,
                k,
            });
        }
        let mut probs = vec![T::zero(); k];
        probs[index] = T::one();
        Ok(Self { probs })
    }

    pub fn class_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn is_one_hot(&self) -> bool {
        let mut hot = 0usize;
        for &p in &self.probs {
            if p == T::one() {
                hot += 1;
            } else if p != T::zero() {
                return false;
            }
        }
        hot == 1
    }

    pub fn hot_index(&self) -> Option<usize> {
        if self.is_one_hot() {
            self.probs.iter().position(|&p| p == T::one())
        } else {
            None
        }
    }

    fn require_one_hot(&self) -> Result<usize, CollapseError> {
        self.hot_index().ok_or(CollapseError::NotOneHot)
    }
}

/// Total variation distance, half the L1 distance between the probability
/// vectors. Bounded in [0, 1].
pub fn tv_distance<T: Real>(
    a: &CategoricalState<T>,
    b: &CategoricalState<T>,
) -> Result<T, CollapseError> {
    if a.class_count() != b.class_count() {
        return Err(CollapseError::ClassCountMismatch(
            a.class_count(),
            b.class_count(),
        ));
    }
    let mut sum = T::zero();
    for (&p, &q) in a.probs.iter().zip(&b.probs) {
        sum = sum + (p - q).abs();
    }
    Ok(sum / T::c(2.0))
}

/// One forward step: `q(x_t | x_{t-1}) = Cat((1 - beta_t) x_{t-1} + beta_t / K)`.
pub fn forward_step_dist<T: Real>(
    x_prev: &CategoricalState<T>,
    t: usize,
    schedule: &DiffusionSchedule<T>,
) -> Result<CategoricalState<T>, CollapseError> {
    x_prev.require_one_hot()?;
    let beta = schedule.beta(t)?;
    let k = T::from_usize(x_prev.class_count()).expect("class count fits scalar");
    let noise = beta / k;
    let keep = T::one() - beta;
    let probs = x_prev.probs.iter().map(|&p| keep * p + noise).collect();
    Ok(CategoricalState { probs })
}

/// Closed-form marginal: `q(x_t | x_0) = Cat(abar_t x_0 + (1 - abar_t) / K)`.
pub fn marginal_dist<T: Real>(
    x0: &CategoricalState<T>,
    t: usize,
    schedule: &DiffusionSchedule<T>,
) -> Result<CategoricalState<T>, CollapseError> {
    x0.require_one_hot()?;
    let abar = schedule.alpha_bar(t)?;
    if t == 0 {
        return Ok(x0.clone());
    }
    let k = T::from_usize(x0.class_count()).expect("class count fits scalar");
    let noise = (T::one() - abar) / k;
    let probs = x0.probs.iter().map(|&p| abar * p + noise).collect();
    Ok(CategoricalState { probs })
}

/// Forward posterior `q(x_{t-1} | x_t, x_0)` for `2 <= t <= T`.
pub fn posterior_dist<T: Real>(
    x_t: &CategoricalState<T>,
    x0: &CategoricalState<T>,
    t: usize,
    schedule: &DiffusionSchedule<T>,
) -> Result<CategoricalState<T>, CollapseError> {
    posterior_dist_with(x_t, x0, schedule.posterior_params(t)?)
}

/// Forward posterior from explicit `(alpha_t, abar_{t-1})` parameters.
pub fn posterior_dist_with<T: Real>(
    x_t: &CategoricalState<T>,
    x0: &CategoricalState<T>,
    params: PosteriorParams<T>,
) -> Result<CategoricalState<T>, CollapseError> {
    x_t.require_one_hot()?;
    x0.require_one_hot()?;
    if x_t.class_count() != x0.class_count() {
        return Err(CollapseError::ClassCountMismatch(
            x_t.class_count(),
            x0.class_count(),
        ));
    }
    let k = T::from_usize(x_t.class_count()).expect("class count fits scalar");
    let step_noise = (T::one() - params.alpha_t) / k;
    let marg_noise = (T::one() - params.alpha_bar_prev) / k;
    let mut probs: Vec<T> = x_t
        .probs
        .iter()
        .zip(&x0.probs)
        .map(|(&xt, &x0v)| {
            (params.alpha_t * xt + step_noise) * (params.alpha_bar_prev * x0v + marg_noise)
        })
        .collect();
    let normalizer = probs.iter().fold(T::zero(), |acc, &p| acc + p);
    // For beta in (0, 1) every factor is strictly positive.
    assert!(
        normalizer > T::zero(),
        "posterior normalizer must be positive"
    );
    for p in &mut probs {
        *p = *p / normalizer;
    }
    Ok(CategoricalState { probs })
}

/// One point of a collapse curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapsePoint<T> {
    pub k: usize,
    pub tv_distance: T,
}

/// Total-variation distance between the posterior and `Cat(x_0)` for each
/// class count in `k_list`, holding the hot indices fixed while padding with
/// zero classes. The distance shrinks toward zero as `K` grows.
pub fn collapse_curve<T: Real>(
    k_list: &[usize],
    t: usize,
    schedule: &DiffusionSchedule<T>,
    x0_index: usize,
    xt_index: usize,
) -> Result<Vec<CollapsePoint<T>>, CollapseError> {
    collapse_curve_with(k_list, schedule.posterior_params(t)?, x0_index, xt_index)
}

/// [`collapse_curve`] from explicit posterior parameters.
pub fn collapse_curve_with<T: Real>(
    k_list: &[usize],
    params: PosteriorParams<T>,
    x0_index: usize,
    xt_index: usize,
) -> Result<Vec<CollapsePoint<T>>, CollapseError> {
    let mut points = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let x0 = CategoricalState::one_hot(k, x0_index)?;
        let x_t = CategoricalState::one_hot(k, xt_index)?;
        let posterior = posterior_dist_with(&x_t, &x0, params)?;
        points.push(CollapsePoint {
            k,
            tv_distance: tv_distance(&posterior, &x0)?,
        });
    }
    Ok(points)
}

/// Draws a realized trajectory `x_1 .. x_T` (as hot indices) from the forward
/// process, reproducibly from `seed`.
pub fn sample_trajectory<T: Real>(
    x0_index: usize,
    k: usize,
    schedule: &DiffusionSchedule<T>,
    seed: u64,
) -> Result<Vec<usize>, CollapseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_trajectory_with_rng(x0_index, k, schedule, &mut rng)
}

/// [`sample_trajectory`] with a caller-managed generator, for bulk sampling.
pub fn sample_trajectory_with_rng<T: Real, R: Rng>(
    x0_index: usize,
    k: usize,
    schedule: &DiffusionSchedule<T>,
    rng: &mut R,
) -> Result<Vec<usize>, CollapseError> {
    if x0_index >= k {
        return Err(CollapseError::HotIndexOutOfRange {
            index: x0_index,
            index_plus_one: x0_index + 1,
            k,
        });
    }
    let mut state = x0_index;
    let mut trajectory = Vec::with_capacity(schedule.len());
    for t in 1..=schedule.len() {
        let beta = schedule.beta(t)?.as_f64();
        // The kernel is a mixture: keep the state with weight 1 - beta,
        // otherwise resample uniformly over all K classes.
        if rng.gen::<f64>() < beta {
            state = rng.gen_range(0..k);
        }
        trajectory.push(state);
    }
    Ok(trajectory)
}
