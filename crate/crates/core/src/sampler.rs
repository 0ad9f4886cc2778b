//! MCMC for the marginalized kernel machine model with component-wise
//! spike-and-slab variable selection.
//!
//! Each iteration updates, in fixed order:
//!
//! 1. `beta` — exact conjugate normal draw under the flat prior,
//! 2. `sigma2` — inverse-gamma draw with posterior
//!    `IG(a0 + n/2, b0 + q/2)`, `q = (y-Xb)' (I+lambda K)^-1 (y-Xb)`,
//! 3. `lambda` — random-walk Metropolis-Hastings on the log scale,
//! 4. one sweep `m = 0..M` of component moves: birth (include `m` with a
//!    weight drawn from the slab), death (exclude `m`), or refine (log-scale
//!    walk on `r_m`), accepted by the usual ratio against the spike-and-slab
//!    prior `P(delta_m = 1) = pi0`.
//!
//! The birth proposal draws from the slab prior itself, so slab densities
//! cancel in the birth/death ratios and the two moves are exact reciprocals.
//! Chains are bit-reproducible: a single seeded generator drives every draw
//! in a fixed order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::dataset::ExposureDataset;
use crate::error::{invalid, numerical, Error, Result};
use crate::kernel::ComponentDistances;
use crate::likelihood::FACTOR_JITTER;
use crate::linalg::{
    cholesky_in_place, dot, least_squares, log_det_from_factor, solve_lower_in_place,
    solve_lower_transpose_in_place, Cholesky, Matrix, PackedStrictLower,
};
use crate::math;
use crate::seeding::SimRng;
use crate::stats;

const LN_2PI: f64 = 1.8378770664093453;

/// Slab distribution for an included component's kernel weight.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum SlabPrior {
    /// `r ~ Uniform(0, max]`: mass spread over rough, short-length-scale
    /// surfaces.
    Uniform { max: f64 },
    /// `1/r ~ Uniform(0, max]`, i.e. density `1/(max r^2)` on `[1/max, inf)`.
    /// Concentrates mass on small weights (smooth, nearly linear surfaces),
    /// matching the reference kernel-machine implementation.
    InverseUniform { max: f64 },
    /// Mixture of the two: with probability `rough_weight` the component
    /// behaves as `Uniform`, otherwise as `InverseUniform`. Spans smooth
    /// trend surfaces and rough noise-absorbing ones.
    SmoothRough { max: f64, rough_weight: f64 },
}

impl SlabPrior {
    pub fn validate(&self) -> Result<()> {
        let max = match self {
            SlabPrior::Uniform { max }
            | SlabPrior::InverseUniform { max }
            | SlabPrior::SmoothRough { max, .. } => *max,
        };
        if !(max > 0.0) || !max.is_finite() {
            return Err(invalid(format!("slab prior bound must be positive, got {max}")));
        }
        if let SlabPrior::SmoothRough { rough_weight, .. } = self {
            if !(*rough_weight > 0.0 && *rough_weight < 1.0) {
                return Err(invalid(format!(
                    "rough_weight must lie in (0,1), got {rough_weight}"
                )));
            }
        }
        Ok(())
    }

    /// Log density at `r` (`-inf` outside the support).
    pub fn log_density(&self, r: f64) -> f64 {
        match *self {
            SlabPrior::Uniform { max } => {
                if r > 0.0 && r <= max {
                    -math::ln(max)
                } else {
                    f64::NEG_INFINITY
                }
            }
            SlabPrior::InverseUniform { max } => {
                if r >= 1.0 / max {
                    -math::ln(max) - 2.0 * math::ln(r)
                } else {
                    f64::NEG_INFINITY
                }
            }
            SlabPrior::SmoothRough { max, rough_weight } => {
                let mut density = 0.0;
                if r > 0.0 && r <= max {
                    density += rough_weight / max;
                }
                if r >= 1.0 / max {
                    density += (1.0 - rough_weight) / (max * r * r);
                }
                if density > 0.0 {
                    math::ln(density)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Draws a weight from the slab.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            // 1 - gen() lies in (0, 1], keeping the draw inside the support.
            SlabPrior::Uniform { max } => (1.0 - rng.gen::<f64>()) * max,
            SlabPrior::InverseUniform { max } => 1.0 / ((1.0 - rng.gen::<f64>()) * max),
            SlabPrior::SmoothRough { max, rough_weight } => {
                let pick_rough = rng.gen::<f64>() < rough_weight;
                let u = 1.0 - rng.gen::<f64>();
                if pick_rough {
                    u * max
                } else {
                    1.0 / (u * max)
                }
            }
        }
    }
}

/// Prior specification for the sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriorSpec {
    /// Inverse-gamma shape `a0` for `sigma2`.
    pub sigma2_shape: f64,
    /// Inverse-gamma rate `b0` for `sigma2`.
    pub sigma2_rate: f64,
    /// `lambda ~ Uniform(0, lambda_max)`.
    pub lambda_max: f64,
    /// Slab for included kernel weights.
    pub slab: SlabPrior,
    /// Spike-and-slab inclusion probability `pi0`.
    pub inclusion_prob: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            sigma2_shape: 1e-3,
            sigma2_rate: 1e-3,
            lambda_max: 100.0,
            // Mass on smooth surfaces detects trend signals; the rough
            // component lets high-noise responses inflate inclusion the way
            // unstable selection does at scale.
            slab: SlabPrior::SmoothRough {
                max: 100.0,
                rough_weight: 0.3,
            },
            inclusion_prob: 0.5,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2_shape > 0.0) || !(self.sigma2_rate > 0.0) {
            return Err(invalid("sigma2 prior parameters must be positive"));
        }
        if !(self.lambda_max > 0.0) || !self.lambda_max.is_finite() {
            return Err(invalid("lambda_max must be positive and finite"));
        }
        if !(self.inclusion_prob > 0.0 && self.inclusion_prob < 1.0) {
            return Err(invalid("inclusion probability must lie in (0, 1)"));
        }
        self.slab.validate()
    }
}

/// Sampler configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Log-scale random-walk deviation for `lambda`.
    pub proposal_sd_lambda: f64,
    /// Log-scale random-walk deviation for the refine move on `r_m`.
    pub proposal_sd_r: f64,
    pub priors: PriorSpec,
    /// Pins `lambda` (diagnostic use); `None` samples it.
    pub fixed_lambda: Option<f64>,
    /// Disables the component sweep (diagnostic use).
    pub update_components: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 10_000,
            burn_in: 5_000,
            seed: 0,
            proposal_sd_lambda: 0.5,
            proposal_sd_r: 0.3,
            priors: PriorSpec::default(),
            fixed_lambda: None,
            update_components: true,
        }
    }
}

impl McmcConfig {
    /// A default configuration with `iterations` and a 50% burn-in.
    pub fn with_iterations(iterations: usize, seed: u64) -> Self {
        McmcConfig {
            iterations,
            burn_in: iterations / 2,
            seed,
            ..McmcConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 2 {
            return Err(invalid(format!("need at least 2 iterations, got {}", self.iterations)));
        }
        if self.burn_in >= self.iterations {
            return Err(invalid(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.proposal_sd_lambda > 0.0) || !(self.proposal_sd_r > 0.0) {
            return Err(invalid("proposal deviations must be positive"));
        }
        if let Some(l) = self.fixed_lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(invalid(format!("fixed lambda must be nonnegative, got {l}")));
            }
        }
        self.priors.validate()
    }
}

/// One stored iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainRecord {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub lambda: f64,
    pub r: Vec<f64>,
    pub delta: Vec<bool>,
}

/// Proposal/acceptance counters per parameter block.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcceptanceStats {
    pub lambda_proposed: u64,
    pub lambda_accepted: u64,
    pub birth_proposed: u64,
    pub birth_accepted: u64,
    pub death_proposed: u64,
    pub death_accepted: u64,
    pub refine_proposed: u64,
    pub refine_accepted: u64,
}

impl AcceptanceStats {
    pub fn lambda_rate(&self) -> f64 {
        ratio(self.lambda_accepted, self.lambda_proposed)
    }

    pub fn birth_rate(&self) -> f64 {
        ratio(self.birth_accepted, self.birth_proposed)
    }

    pub fn death_rate(&self) -> f64 {
        ratio(self.death_accepted, self.death_proposed)
    }

    pub fn refine_rate(&self) -> f64 {
        ratio(self.refine_accepted, self.refine_proposed)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// A complete posterior sample with its configuration echo.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorChain {
    pub records: Vec<ChainRecord>,
    pub acceptance: AcceptanceStats,
    pub config: McmcConfig,
    /// Exposure names, in column order.
    pub names: Vec<String>,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Post-burn-in records.
    pub fn kept(&self) -> &[ChainRecord] {
        &self.records[self.config.burn_in..]
    }
}

/// Posterior inclusion probability per component: the post-burn-in frequency
/// of `delta_m = 1`.
pub fn posterior_inclusion_probabilities(chain: &PosteriorChain) -> Result<Vec<f64>> {
    if chain.records.len() <= chain.config.burn_in {
        return Err(invalid(format!(
            "chain of length {} has no records after burn-in {}",
            chain.records.len(),
            chain.config.burn_in
        )));
    }
    let kept = chain.kept();
    let m = kept[0].delta.len();
    let mut counts = vec![0usize; m];
    for rec in kept {
        for (c, &d) in counts.iter_mut().zip(&rec.delta) {
            if d {
                *c += 1;
            }
        }
    }
    Ok(counts.iter().map(|&c| c as f64 / kept.len() as f64).collect())
}

/// The move a component update proposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentMove {
    Birth,
    Death,
    Refine,
}

/// Conditional posterior of `beta` under the flat prior: mean and the
/// Cholesky factor of `X'V^-1 X` (whose inverse, scaled by `sigma2`, is the
/// covariance).
pub fn beta_conditional(y: &[f64], x: &Matrix, v_factor: &Cholesky) -> Result<(Vec<f64>, Cholesky)> {
    let p = x.cols();
    let n = y.len();
    // Whitened design A = L^-1 X and response b = L^-1 y.
    let mut a = Matrix::zeros(n, p);
    for j in 0..p {
        let mut col = x.column(j);
        solve_lower_in_place(v_factor.factor(), &mut col);
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    let b = v_factor.forward_solve(y);
    let mut gram = Matrix::zeros(p, p);
    for i in 0..n {
        let row = a.row(i);
        for s in 0..p {
            for t in 0..=s {
                gram[(s, t)] += row[s] * row[t];
            }
        }
    }
    for s in 0..p {
        for t in 0..s {
            gram[(t, s)] = gram[(s, t)];
        }
    }
    let atb = a.transpose_matvec(&b);
    let gram_chol = Cholesky::decompose(&gram)
        .map_err(|e| numerical(format!("whitened normal equations are singular: {e}")))?;
    let mean = gram_chol.solve(&atb);
    Ok((mean, gram_chol))
}

/// Draws `beta` from its exact conditional normal posterior. With no
/// confounders the empty vector is returned and no randomness is consumed.
pub fn gibbs_update_beta<R: Rng>(
    y: &[f64],
    x: &Matrix,
    v_factor: &Cholesky,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if x.cols() == 0 {
        return Ok(Vec::new());
    }
    let (mean, gram_chol) = beta_conditional(y, x, v_factor)?;
    let p = mean.len();
    let mut z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    // Covariance sigma2 (C C')^-1: transform z by sqrt(sigma2) C'^-1.
    solve_lower_transpose_in_place(gram_chol.factor(), &mut z);
    Ok(mean
        .iter()
        .zip(&z)
        .map(|(m, zi)| m + math::sqrt(sigma2) * zi)
        .collect())
}

/// Draws `sigma2` from `IG(a0 + n/2, b0 + q/2)` with
/// `q = (y-Xb)' V^-1 (y-Xb)`.
pub fn gibbs_update_sigma2<R: Rng>(
    y: &[f64],
    x: &Matrix,
    beta: &[f64],
    v_factor: &Cholesky,
    priors: &PriorSpec,
    rng: &mut R,
) -> Result<f64> {
    let resid = crate::likelihood::residuals(y, x, beta);
    let w = v_factor.forward_solve(&resid);
    let q: f64 = w.iter().map(|v| v * v).sum();
    if !q.is_finite() {
        return Err(numerical("residual quadratic form is not finite"));
    }
    let shape = priors.sigma2_shape + y.len() as f64 / 2.0;
    let scale_param = priors.sigma2_rate + q / 2.0;
    let gamma = Gamma::new(shape, 1.0)
        .map_err(|e| numerical(format!("invalid inverse-gamma draw: {e}")))?;
    let g: f64 = gamma.sample(rng);
    Ok(scale_param / g)
}

/// Incremental-state sampler. [`fit`] drives it; the stepping methods are
/// public so correctness tests can exercise single updates and raw
/// Metropolis-Hastings ratios.
pub struct Sampler<'d> {
    data: &'d ExposureDataset,
    config: McmcConfig,
    rng: SimRng,
    distances: ComponentDistances,
    // Current state.
    beta: Vec<f64>,
    sigma2: f64,
    lambda: f64,
    r: Vec<f64>,
    delta: Vec<bool>,
    // Caches for the current state.
    kernel: PackedStrictLower,
    factor: Matrix,
    logdet: f64,
    // Proposal workspaces.
    prop_kernel: PackedStrictLower,
    prop_factor: Matrix,
    acceptance: AcceptanceStats,
}

impl<'d> Sampler<'d> {
    pub fn new(data: &'d ExposureDataset, config: &McmcConfig) -> Result<Self> {
        config.validate()?;
        let y = data
            .response()
            .ok_or_else(|| invalid("fit requires a dataset with a response"))?;
        let n = data.n();
        if n < 10 {
            return Err(invalid(format!("fit requires n >= 10, got {n}")));
        }
        let m = data.n_exposures();
        let x = data.confounders();

        let beta = least_squares(x, y)?;
        let resid = crate::likelihood::residuals(y, x, &beta);
        let sigma2 = stats::sample_variance(&resid);
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Initialization(format!(
                "residual variance is {sigma2} at the initial state (parameter sigma2)"
            )));
        }
        let lambda = match config.fixed_lambda {
            Some(l) => l,
            None => config.priors.lambda_max.min(1.0),
        };
        if lambda > config.priors.lambda_max {
            return Err(Error::Initialization(format!(
                "fixed lambda {lambda} exceeds lambda_max {} (parameter lambda)",
                config.priors.lambda_max
            )));
        }

        let distances = ComponentDistances::from_exposures(data.exposures());
        let mut sampler = Sampler {
            data,
            config: config.clone(),
            rng: <SimRng as rand::SeedableRng>::seed_from_u64(config.seed),
            distances,
            beta,
            sigma2,
            lambda,
            r: vec![0.0; m],
            delta: vec![false; m],
            kernel: PackedStrictLower::zeros(n),
            factor: Matrix::zeros(n, n),
            logdet: 0.0,
            prop_kernel: PackedStrictLower::zeros(n),
            prop_factor: Matrix::zeros(n, n),
            acceptance: AcceptanceStats::default(),
        };
        sampler.distances.kernel_into(&sampler.r, &mut sampler.kernel);
        sampler.logdet = sampler
            .factor_into_current()
            .map_err(|e| Error::Initialization(format!("{e} (parameter lambda)")))?;
        let ll = sampler.current_log_lik();
        if !ll.is_finite() {
            return Err(Error::Initialization(format!(
                "marginal log likelihood is {ll} at the initial state (parameter sigma2)"
            )));
        }
        Ok(sampler)
    }

    pub fn state(&self) -> ChainRecord {
        ChainRecord {
            beta: self.beta.clone(),
            sigma2: self.sigma2,
            lambda: self.lambda,
            r: self.r.clone(),
            delta: self.delta.clone(),
        }
    }

    pub fn acceptance(&self) -> &AcceptanceStats {
        &self.acceptance
    }

    fn n(&self) -> usize {
        self.data.n()
    }

    fn y(&self) -> &[f64] {
        self.data.response().expect("checked at construction")
    }

    /// Builds `V = I + lambda K` from `kernel` into `buf` (lower triangle)
    /// and factors it in place. Returns the log determinant.
    fn factor_v(
        kernel: &PackedStrictLower,
        lambda: f64,
        buf: &mut Matrix,
    ) -> Result<f64> {
        let n = kernel.n();
        let build = |buf: &mut Matrix, jitter: f64| {
            let data = kernel.data();
            let mut idx = 0;
            for i in 0..n {
                let row = buf.row_mut(i);
                for v in row[..i].iter_mut() {
                    *v = lambda * data[idx];
                    idx += 1;
                }
                row[i] = 1.0 + lambda + jitter;
            }
        };
        build(buf, 0.0);
        if cholesky_in_place(buf).is_ok() {
            return Ok(log_det_from_factor(buf));
        }
        build(buf, FACTOR_JITTER);
        cholesky_in_place(buf).map_err(|e| {
            numerical(format!(
                "marginal covariance factorization failed at lambda={lambda}: {e}"
            ))
        })?;
        Ok(log_det_from_factor(buf))
    }

    fn factor_into_current(&mut self) -> Result<f64> {
        let logdet = Self::factor_v(&self.kernel, self.lambda, &mut self.factor)?;
        self.logdet = logdet;
        Ok(logdet)
    }

    /// Marginal log likelihood at the current factor and `(beta, sigma2)`.
    fn log_lik_with(&self, factor: &Matrix, logdet: f64) -> f64 {
        let y = self.y();
        let mut resid = crate::likelihood::residuals(y, self.data.confounders(), &self.beta);
        solve_lower_in_place(factor, &mut resid);
        let q = dot(&resid, &resid);
        -0.5 * (self.n() as f64 * (LN_2PI + math::ln(self.sigma2)) + logdet + q / self.sigma2)
    }

    pub fn current_log_lik(&self) -> f64 {
        self.log_lik_with(&self.factor, self.logdet)
    }

    /// Gibbs draw of `beta` from its conditional normal posterior.
    pub fn update_beta(&mut self) -> Result<()> {
        if self.data.n_confounders() == 0 {
            return Ok(());
        }
        // Wrap the cached factor for the shared conjugate-update routine;
        // only the confounder path pays for this copy.
        let chol = Cholesky::from_factor(self.factor.clone());
        let data = self.data;
        self.beta = gibbs_update_beta(
            data.response().expect("checked at construction"),
            data.confounders(),
            &chol,
            self.sigma2,
            &mut self.rng,
        )?;
        Ok(())
    }

    /// Gibbs draw of `sigma2` from its conditional inverse gamma.
    pub fn update_sigma2(&mut self) -> Result<()> {
        let y = self.y();
        let resid = crate::likelihood::residuals(y, self.data.confounders(), &self.beta);
        let mut w = resid;
        solve_lower_in_place(&self.factor, &mut w);
        let q = dot(&w, &w);
        if !q.is_finite() {
            return Err(numerical("residual quadratic form is not finite"));
        }
        let shape = self.config.priors.sigma2_shape + self.n() as f64 / 2.0;
        let scale_param = self.config.priors.sigma2_rate + q / 2.0;
        let gamma = Gamma::new(shape, 1.0)
            .map_err(|e| numerical(format!("invalid inverse-gamma draw: {e}")))?;
        let g: f64 = gamma.sample(&mut self.rng);
        self.sigma2 = scale_param / g;
        Ok(())
    }

    /// Log Metropolis-Hastings ratio for a lambda proposal (log-scale walk:
    /// the Jacobian contributes `ln(lambda'/lambda)`).
    pub fn log_lambda_ratio(&mut self, lambda_new: f64) -> Result<f64> {
        if lambda_new <= 0.0 || lambda_new >= self.config.priors.lambda_max {
            return Ok(f64::NEG_INFINITY);
        }
        let logdet_new = Self::factor_v(&self.kernel, lambda_new, &mut self.prop_factor)?;
        let ll_new = self.log_lik_with(&self.prop_factor, logdet_new);
        let ll_cur = self.current_log_lik();
        Ok(ll_new - ll_cur + math::ln(lambda_new / self.lambda))
    }

    /// Random-walk Metropolis-Hastings update of `lambda`. Returns the
    /// acceptance flag.
    pub fn update_lambda(&mut self) -> Result<bool> {
        if self.config.fixed_lambda.is_some() {
            return Ok(false);
        }
        let z: f64 = self.rng.sample(StandardNormal);
        let lambda_new = self.lambda * math::exp(self.config.proposal_sd_lambda * z);
        self.acceptance.lambda_proposed += 1;
        let log_ratio = self.log_lambda_ratio(lambda_new)?;
        let u: f64 = self.rng.gen();
        if math::ln(u) < log_ratio {
            self.lambda = lambda_new;
            core::mem::swap(&mut self.factor, &mut self.prop_factor);
            self.logdet = log_det_from_factor(&self.factor);
            self.acceptance.lambda_accepted += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Log ratio for a birth move on component `m` with proposed weight
    /// `r_new` (drawn from the slab, whose density cancels):
    /// `ln(pi0/(1-pi0)) + ll(r_new) - ll(current) + ln(1/2)`.
    pub fn log_birth_ratio(&mut self, m: usize, r_new: f64) -> Result<f64> {
        if self.delta[m] {
            return Err(invalid("birth proposed for an included component"));
        }
        if !r_new.is_finite() || self.config.priors.slab.log_density(r_new).is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        let pi0 = self.config.priors.inclusion_prob;
        let ll_new = self.proposal_log_lik_with_r(m, r_new)?;
        let ll_cur = self.current_log_lik();
        Ok(math::ln(pi0 / (1.0 - pi0)) + ll_new - ll_cur + math::ln(0.5))
    }

    /// Log ratio for a death move on component `m` (exact reciprocal of the
    /// birth ratio back to the same weight).
    pub fn log_death_ratio(&mut self, m: usize) -> Result<f64> {
        if !self.delta[m] {
            return Err(invalid("death proposed for an excluded component"));
        }
        let pi0 = self.config.priors.inclusion_prob;
        let ll_new = self.proposal_log_lik_with_r(m, 0.0)?;
        let ll_cur = self.current_log_lik();
        Ok(math::ln((1.0 - pi0) / pi0) + ll_new - ll_cur + math::ln(2.0))
    }

    /// Log ratio for a refine move `r_m -> r_new` (log-scale walk; slab
    /// density ratio plus the `ln(r_new/r_m)` Jacobian).
    pub fn log_refine_ratio(&mut self, m: usize, r_new: f64) -> Result<f64> {
        if !self.delta[m] {
            return Err(invalid("refine proposed for an excluded component"));
        }
        let slab = self.config.priors.slab;
        let prior_new = slab.log_density(r_new);
        if prior_new.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        let ll_new = self.proposal_log_lik_with_r(m, r_new)?;
        let ll_cur = self.current_log_lik();
        Ok(ll_new - ll_cur + prior_new - slab.log_density(self.r[m])
            + math::ln(r_new / self.r[m]))
    }

    /// Likelihood of the state with `r[m] = r_new`, leaving current caches
    /// untouched (the proposal factor holds the result).
    fn proposal_log_lik_with_r(&mut self, m: usize, r_new: f64) -> Result<f64> {
        let old = self.r[m];
        self.r[m] = r_new;
        self.distances.kernel_into(&self.r, &mut self.prop_kernel);
        self.r[m] = old;
        let logdet = Self::factor_v(&self.prop_kernel, self.lambda, &mut self.prop_factor)?;
        Ok(self.log_lik_with(&self.prop_factor, logdet))
    }

    fn accept_component_proposal(&mut self, m: usize, r_new: f64, include: bool) {
        self.r[m] = r_new;
        self.delta[m] = include;
        core::mem::swap(&mut self.kernel, &mut self.prop_kernel);
        core::mem::swap(&mut self.factor, &mut self.prop_factor);
        self.logdet = log_det_from_factor(&self.factor);
    }

    /// One spike-and-slab move on component `m`. Returns the move that was
    /// proposed and whether it was accepted.
    pub fn update_component(&mut self, m: usize) -> Result<(ComponentMove, bool)> {
        if m >= self.r.len() {
            return Err(invalid(format!("component index {m} out of range")));
        }
        if !self.delta[m] {
            // Birth.
            let r_new = self.config.priors.slab.sample(&mut self.rng);
            self.acceptance.birth_proposed += 1;
            let log_ratio = self.log_birth_ratio(m, r_new)?;
            let u: f64 = self.rng.gen();
            if math::ln(u) < log_ratio {
                self.accept_component_proposal(m, r_new, true);
                self.acceptance.birth_accepted += 1;
                return Ok((ComponentMove::Birth, true));
            }
            return Ok((ComponentMove::Birth, false));
        }
        let choose_death = self.rng.gen::<f64>() < 0.5;
        if choose_death {
            self.acceptance.death_proposed += 1;
            let log_ratio = self.log_death_ratio(m)?;
            let u: f64 = self.rng.gen();
            if math::ln(u) < log_ratio {
                self.accept_component_proposal(m, 0.0, false);
                self.acceptance.death_accepted += 1;
                return Ok((ComponentMove::Death, true));
            }
            Ok((ComponentMove::Death, false))
        } else {
            let z: f64 = self.rng.sample(StandardNormal);
            let r_new = self.r[m] * math::exp(self.config.proposal_sd_r * z);
            self.acceptance.refine_proposed += 1;
            let log_ratio = self.log_refine_ratio(m, r_new)?;
            let u: f64 = self.rng.gen();
            if math::ln(u) < log_ratio {
                self.accept_component_proposal(m, r_new, true);
                self.acceptance.refine_accepted += 1;
                return Ok((ComponentMove::Refine, true));
            }
            Ok((ComponentMove::Refine, false))
        }
    }

    /// One full iteration: beta, sigma2, lambda, then a component sweep in
    /// fixed order.
    pub fn step(&mut self) -> Result<()> {
        self.update_beta()?;
        self.update_sigma2()?;
        self.update_lambda()?;
        if self.config.update_components {
            for m in 0..self.r.len() {
                self.update_component(m)?;
            }
        }
        Ok(())
    }
}

/// Fits the model by MCMC and returns the full chain.
///
/// Deterministic given `(data, config)`: a single generator seeded from
/// `config.seed` drives every proposal in a fixed order.
pub fn fit(data: &ExposureDataset, config: &McmcConfig) -> Result<PosteriorChain> {
    let mut sampler = Sampler::new(data, config)?;
    let mut records = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        sampler.step()?;
        records.push(sampler.state());
    }
    Ok(PosteriorChain {
        records,
        acceptance: sampler.acceptance,
        config: config.clone(),
        names: data.names().to_vec(),
    })
}
