//! Exponent sets, admissibility, the weighted kernel and the bilinear form
//!
//! `J(f, g) = int int f(u) w_alpha(u) d(u, v)^{-lambda} w_beta(v) g(v) du dv`
//!
//! on a quadrature grid, with `w_e(u) = base(u)^{-e}` and the base chosen by
//! the weight kind of the space.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance_of, power_weight, weight_base_of, SpacePoint, SpaceSpec, WeightKind};
use crate::grid::{same_grid, GridFunction, QuadratureGrid};
use crate::kernel::KernelOperator;
use crate::quadrature::compensated_sum;

/// Slack on the exponent identity, which is usually built from decimals.
const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteinWeissParams {
    pub spec: SpaceSpec,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub p: f64,
    pub q_prime: f64,
}

impl SteinWeissParams {
    pub fn new(spec: SpaceSpec, alpha: f64, beta: f64, lambda: f64, p: f64, q_prime: f64) -> Self {
        Self { spec, alpha, beta, lambda, p, q_prime }
    }

    /// Unweighted diagonal case `p = q' = 2N / (2N - lambda)`.
    pub fn diagonal(spec: SpaceSpec, lambda: f64) -> Self {
        let nf = spec.homogeneous_dimension() as f64;
        let p = 2.0 * nf / (2.0 * nf - lambda);
        Self::new(spec, 0.0, 0.0, lambda, p, p)
    }

    /// Solves the exponent identity for `q'` given `p`.
    pub fn balanced(spec: SpaceSpec, alpha: f64, beta: f64, lambda: f64, p: f64) -> Self {
        let nf = spec.homogeneous_dimension() as f64;
        let inv = 2.0 - 1.0 / p - (lambda + alpha + beta) / nf;
        Self::new(spec, alpha, beta, lambda, p, 1.0 / inv)
    }

    pub fn q(&self) -> f64 {
        self.q_prime / (self.q_prime - 1.0)
    }

    pub fn p_prime(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn dimension(&self) -> f64 {
        self.spec.homogeneous_dimension() as f64
    }

    pub fn is_diagonal(&self) -> bool {
        let d = Self::diagonal(self.spec, self.lambda);
        self.alpha == 0.0 && self.beta == 0.0 && (self.p - d.p).abs() < BALANCE_TOL && (self.q_prime - d.q_prime).abs() < BALANCE_TOL
    }

    /// Same exponents with the roles of the two weights exchanged.
    pub fn swapped(&self) -> Self {
        Self { alpha: self.beta, beta: self.alpha, p: self.q_prime, q_prime: self.p, ..*self }
    }

    pub fn check(&self) -> AdmissibilityReport {
        admissibility_check(self)
    }

    /// `Ok` when admissible, otherwise the list of violated conditions.
    pub fn validate(&self) -> Result<()> {
        let report = self.check();
        if report.valid {
            Ok(())
        } else {
            Err(Error::Inadmissible(report.violations))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub valid: bool,
    pub violations: Vec<String>,
    /// `q > p`, where extremals are known to exist.
    pub existence_regime: bool,
}

pub fn admissibility_check(params: &SteinWeissParams) -> AdmissibilityReport {
    let SteinWeissParams { spec, alpha, beta, lambda, p, q_prime } = *params;
    let nf = params.dimension();
    let mut violations = Vec::new();
    let mut require = |ok: bool, what: String| {
        if !ok {
            violations.push(what);
        }
    };
    let finite = [alpha, beta, lambda, p, q_prime].iter().all(|v| v.is_finite());
    require(finite, "all exponents must be finite".into());
    require(p > 1.0, format!("1 < p (p = {p})"));
    require(q_prime > 1.0, format!("1 < q' (q' = {q_prime})"));
    let balance = 1.0 / p + 1.0 / q_prime + (lambda + alpha + beta) / nf;
    require(
        (balance - 2.0).abs() <= BALANCE_TOL,
        format!("1/p + 1/q' + (lambda + alpha + beta)/N = 2 (left side is {balance})"),
    );
    require(alpha + beta >= 0.0, format!("alpha + beta >= 0 (alpha + beta = {})", alpha + beta));
    require(lambda > 0.0 && lambda < nf, format!("0 < lambda < N = {nf} (lambda = {lambda})"));
    require(lambda + alpha + beta <= nf, format!("lambda + alpha + beta <= N = {nf}"));
    if p > 1.0 && q_prime > 1.0 {
        let (q, pp) = (params.q(), params.p_prime());
        let (bound, name) = match spec.weight_kind {
            WeightKind::FullNorm => (nf, "N"),
            WeightKind::Horizontal => (spec.weight_dimension() as f64, "2n"),
            WeightKind::PartialFirstFactor => (spec.weight_dimension() as f64, "m"),
        };
        require(alpha < bound / q, format!("alpha < {name}/q = {}", bound / q));
        require(beta < bound / pp, format!("beta < {name}/p' = {}", bound / pp));
    }
    let existence_regime = p > 1.0 && q_prime > 1.0 && params.q() > p;
    AdmissibilityReport { valid: violations.is_empty(), violations, existence_regime }
}

/// Pointwise kernel `w_alpha(u) d(u, v)^{-lambda} w_beta(v)`; `+inf` at `u = v`.
pub fn kernel(u: &SpacePoint, v: &SpacePoint, params: &SteinWeissParams) -> Result<f64> {
    let spec = &params.spec;
    let d = spec.coord_len();
    for x in [u, v] {
        if x.coords().len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.coords().len() });
        }
    }
    let dist = distance_of(spec, u.coords(), v.coords());
    if dist == 0.0 {
        return Ok(f64::INFINITY);
    }
    let wa = power_weight(weight_base_of(spec, u.coords()), params.alpha);
    let wb = power_weight(weight_base_of(spec, v.coords()), params.beta);
    Ok(wa * dist.powf(-params.lambda) * wb)
}

/// The discretized functional on one grid.
#[derive(Debug, Clone)]
pub struct SteinWeissOperator {
    params: SteinWeissParams,
    kernel: Arc<KernelOperator>,
    w_alpha: Vec<f64>,
    w_beta: Vec<f64>,
}

impl SteinWeissOperator {
    pub fn new(params: SteinWeissParams, grid: Arc<QuadratureGrid>) -> Result<Self> {
        let kernel = KernelOperator::new(grid, params.lambda)?;
        Self::with_kernel(params, Arc::new(kernel))
    }

    /// Reuses an assembled kernel; only `lambda` and the space must match.
    pub fn with_kernel(params: SteinWeissParams, kernel: Arc<KernelOperator>) -> Result<Self> {
        let grid = kernel.grid().clone();
        if *grid.spec() != params.spec {
            return invalid("parameters and grid describe different spaces");
        }
        if kernel.lambda() != params.lambda {
            return invalid(format!("kernel built for lambda = {}, parameters have {}", kernel.lambda(), params.lambda));
        }
        let bases: Vec<f64> = (0..grid.node_count()).map(|i| weight_base_of(grid.spec(), grid.node_coords(i))).collect();
        let w_alpha = bases.iter().map(|b| power_weight(*b, params.alpha)).collect();
        let w_beta = bases.iter().map(|b| power_weight(*b, params.beta)).collect();
        Ok(Self { params, kernel, w_alpha, w_beta })
    }

    pub fn params(&self) -> &SteinWeissParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        self.kernel.grid()
    }

    pub fn kernel(&self) -> &Arc<KernelOperator> {
        &self.kernel
    }

    /// The same kernel with `alpha` and `beta` (and `p`, `q'`) exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            params: self.params.swapped(),
            kernel: self.kernel.clone(),
            w_alpha: self.w_beta.clone(),
            w_beta: self.w_alpha.clone(),
        }
    }

    pub fn w_alpha(&self) -> &[f64] {
        &self.w_alpha
    }

    pub fn w_beta(&self) -> &[f64] {
        &self.w_beta
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(f.grid(), self.grid()) || f.grid().descriptor() == self.grid().descriptor() {
            Ok(())
        } else {
            invalid("grid function does not live on the operator's grid")
        }
    }

    /// `I(phi)_i = sum_j D_ij w_j phi_j` for raw node values.
    pub(crate) fn potential_values(&self, phi: &[f64]) -> Vec<f64> {
        let weights = self.grid().node_weights();
        let mass: Vec<f64> = phi.iter().zip(weights).map(|(v, w)| v * w).collect();
        self.kernel.apply(&mass)
    }

    /// `w_alpha I(w_beta g)` on raw values.
    pub(crate) fn right_values(&self, g: &[f64]) -> Vec<f64> {
        let inner: Vec<f64> = g.iter().zip(&self.w_beta).map(|(v, w)| v * w).collect();
        let mut out = self.potential_values(&inner);
        out.iter_mut().zip(&self.w_alpha).for_each(|(o, w)| *o *= w);
        out
    }

    /// `w_beta I(w_alpha f)` on raw values.
    pub(crate) fn left_values(&self, f: &[f64]) -> Vec<f64> {
        let inner: Vec<f64> = f.iter().zip(&self.w_alpha).map(|(v, w)| v * w).collect();
        let mut out = self.potential_values(&inner);
        out.iter_mut().zip(&self.w_beta).for_each(|(o, w)| *o *= w);
        out
    }

    /// `<a, b> = sum_i w_i a_i b_i`.
    pub(crate) fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        let w = self.grid().node_weights();
        compensated_sum(a.iter().zip(b).zip(w).map(|((x, y), w)| w * x * y))
    }

    /// Node values of `I_lambda(g)`; the self cell uses the exact cell
    /// average of the kernel.
    pub fn riesz_potential(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        Ok(GridFunction::new_unchecked(self.grid().clone(), self.potential_values(g.values())))
    }

    /// `u -> w_alpha(u) I_lambda(w_beta g)(u)`, so that `J(f, g) = <f, R g>`.
    pub fn dual_apply_right(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        Ok(GridFunction::new_unchecked(self.grid().clone(), self.right_values(g.values())))
    }

    /// `v -> w_beta(v) I_lambda(w_alpha f)(v)`, so that `J(f, g) = <L f, g>`.
    pub fn dual_apply_left(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        Ok(GridFunction::new_unchecked(self.grid().clone(), self.left_values(f.values())))
    }

    /// `J(f, g) = sum_ij w_i w_j f_i K_ij g_j`.
    pub fn functional_j(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        self.check(f)?;
        same_grid(f, g)?;
        Ok(self.pairing(f.values(), &self.right_values(g.values())))
    }

    /// `J(f, g) / (||f||_{q'} ||g||_p)` with unweighted norms.
    pub fn ratio(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        let j = self.functional_j(f, g)?;
        let nf = crate::grid::weighted_lp_norm(f, self.params.q_prime, 0.0);
        let ng = crate::grid::weighted_lp_norm(g, self.params.p, 0.0);
        if !(nf > 0.0 && ng > 0.0) {
            return Err(Error::Degenerate("zero function in the quotient".into()));
        }
        Ok(j / (nf * ng))
    }
}
