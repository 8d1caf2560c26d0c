//! Alternating maximization of the weighted functional and the normalized
//! fixed-point iteration for the Euler–Lagrange system.
//!
//! The maximizer `g` is kept in the form of the maximizing problem,
//! `||g |v|^beta||_p = 1`, so `J = int f w_alpha I(g)` with `||f||_{q'} = 1`.
//! Each half-step is the exact discrete maximizer over one slot (equality
//! in Hölder), which makes the recorded functional nondecreasing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{half_mass_radius, shift_shells, tail_mass, weighted_lp_norm, GridFunction};
use crate::quadrature::compensated_sum;
use crate::steinweiss::SteinWeissOperator;

/// Flag carried by runs outside the regime `q > p`.
pub const NON_EXISTENCE_REGIME: &str = "NON-EXISTENCE-REGIME";

/// Rounding-level drop a renormalization may always cause.
const RENORMALIZE_SLACK: f64 = 1e-13;
/// Largest step multiple tried by [`extrapolate_drift`].
const MAX_OVERSHOOT: f64 = 1e7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub functional: f64,
    pub residual: f64,
    pub half_mass_radius: f64,
    pub tail_mass: f64,
}

#[derive(Debug, Clone)]
pub struct MaximizerState {
    /// `||g |v|^beta||_p = 1`.
    pub g: GridFunction,
    /// `||f||_{q'} = 1`.
    pub f: GridFunction,
    pub functional_history: Vec<f64>,
    pub constant_estimate: f64,
    pub half_mass_radii: Vec<f64>,
    pub residual: f64,
    pub records: Vec<IterationRecord>,
    pub renormalizations: usize,
    pub rejected_renormalizations: usize,
    pub extrapolations: usize,
    pub converged: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximizeOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Renormalize the dilation every this many steps; 0 disables it.
    pub renormalize_every: usize,
    /// At the same cadence, jump along the last update when the residual
    /// stalls; see [`extrapolate_drift`].
    pub extrapolate: bool,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, renormalize_every: 5, extrapolate: true }
    }
}

/// Starting point of [`maximize`].
#[derive(Debug, Clone)]
pub enum Init {
    /// `exp(-(ln |x|)^2)`.
    Bump,
    /// Independent uniform node values in `(0, 1]`.
    Random { seed: u64 },
    Function(GridFunction),
}

pub fn bump(op: &SteinWeissOperator) -> GridFunction {
    let grid = op.grid();
    let values = grid.node_norms().iter().map(|r| (-r.ln().powi(2)).exp()).collect();
    GridFunction::new_unchecked(grid.clone(), values)
}

pub fn random_start(op: &SteinWeissOperator, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = op.grid();
    let values = (0..grid.node_count()).map(|_| 1.0 - rng.gen::<f64>()).collect();
    GridFunction::new_unchecked(grid.clone(), values)
}

fn power_normalized(values: Vec<f64>, exponent: f64, p: f64, weight_exponent: f64, op: &SteinWeissOperator) -> Result<GridFunction> {
    let powered: Vec<f64> = values.into_iter().map(|v| v.max(0.0).powf(exponent)).collect();
    let raw = GridFunction::new_unchecked(op.grid().clone(), powered);
    let norm = weighted_lp_norm(&raw, p, weight_exponent);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate(format!("dual image has norm {norm}")));
    }
    Ok(raw.scaled(1.0 / norm))
}

/// `||a - b||_{p, e} / ||a||_{p, e}`.
fn relative_change(a: &GridFunction, b: &GridFunction, p: f64, weight_exponent: f64) -> f64 {
    let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).collect();
    let diff = GridFunction::new_unchecked(a.grid().clone(), diff);
    weighted_lp_norm(&diff, p, weight_exponent) / weighted_lp_norm(a, p, weight_exponent)
}

/// Whole-shell dilation of a normalized start that brings its half-mass
/// radius to within half a shell of 1, renormalized for what left the grid.
fn centered(op: &SteinWeissOperator, g: GridFunction) -> Result<GridFunction> {
    let params = op.params();
    let grid = op.grid();
    let half = half_mass_radius(&g, params.p, params.beta)?;
    let s = (half.radius.ln() / grid.log_spacing()).round() as i64;
    if s == 0 {
        return Ok(g);
    }
    let shifted = shift_shells(&g, s, 1.0);
    let norm = weighted_lp_norm(&shifted, params.p, params.beta);
    if !(norm > 0.0) {
        return Ok(g);
    }
    Ok(shifted.scaled(1.0 / norm))
}

/// Optimal `f` for `g`: `f ∝ (w_alpha I(g))^{q-1}`.
fn best_f(op: &SteinWeissOperator, g: &GridFunction) -> Result<GridFunction> {
    let params = op.params();
    let mut h = op.potential_values(g.values());
    h.iter_mut().zip(op.w_alpha()).for_each(|(v, w)| *v *= w);
    power_normalized(h, params.q() - 1.0, params.q_prime, 0.0, op)
}

/// Optimal `g` for `f` and the functional at the new pair. In the
/// functional form `G = g |v|^beta` the optimum is `G ∝ (w_beta I(w_alpha f))^{p'-1}`.
fn best_g(op: &SteinWeissOperator, f: &GridFunction) -> Result<(GridFunction, f64)> {
    let params = op.params();
    let fa: Vec<f64> = f.values().iter().zip(op.w_alpha()).map(|(v, w)| v * w).collect();
    let k = op.potential_values(&fa);
    let wk: Vec<f64> = k.iter().zip(op.w_beta()).map(|(v, w)| v * w).collect();
    let big_g = power_normalized(wk, params.p_prime() - 1.0, params.p, 0.0, op)?;
    let g: Vec<f64> = big_g.values().iter().zip(op.w_beta()).map(|(v, w)| v * w).collect();
    let j = op.pairing(&g, &k);
    Ok((GridFunction::new_unchecked(op.grid().clone(), g), j))
}

fn functional(op: &SteinWeissOperator, f: &GridFunction, g: &GridFunction) -> f64 {
    let mut h = op.potential_values(g.values());
    h.iter_mut().zip(op.w_alpha()).for_each(|(v, w)| *v *= w);
    op.pairing(f.values(), &h)
}

impl MaximizerState {
    /// Normalizes `g` and pairs it with its optimal `f`.
    pub fn new(op: &SteinWeissOperator, g: GridFunction) -> Result<Self> {
        let params = op.params();
        let norm = weighted_lp_norm(&g, params.p, params.beta);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate(format!("initial iterate has weighted norm {norm}")));
        }
        let g = centered(op, g.scaled(1.0 / norm))?;
        let f = best_f(op, &g)?;
        let j = functional(op, &f, &g);
        let mut flags = Vec::new();
        if !params.check().existence_regime {
            flags.push(NON_EXISTENCE_REGIME.to_string());
        }
        let mut state = Self {
            g,
            f,
            functional_history: vec![j],
            constant_estimate: j,
            half_mass_radii: Vec::new(),
            residual: f64::INFINITY,
            records: Vec::new(),
            renormalizations: 0,
            rejected_renormalizations: 0,
            extrapolations: 0,
            converged: false,
            flags,
        };
        state.record(op, 0);
        Ok(state)
    }

    fn record(&mut self, op: &SteinWeissOperator, iteration: usize) {
        let params = op.params();
        let radius = half_mass_radius(&self.g, params.p, params.beta).map(|h| h.radius).unwrap_or(f64::NAN);
        self.half_mass_radii.push(radius);
        self.records.push(IterationRecord {
            iteration,
            functional: self.constant_estimate,
            residual: self.residual,
            half_mass_radius: radius,
            tail_mass: tail_mass(&self.g, params.p, params.beta),
        });
    }

    /// `g` in the functional form `G = g |v|^beta`, unit norm in `L^p`.
    pub fn functional_form(&self, op: &SteinWeissOperator) -> GridFunction {
        let values = self.g.values().iter().zip(op.w_beta()).map(|(v, w)| v / w).collect();
        GridFunction::new_unchecked(self.g.grid().clone(), values)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

/// One alternating update: `f` from `g`, then `g` from the new `f`.
pub fn ascent_step(state: &MaximizerState, op: &SteinWeissOperator) -> Result<MaximizerState> {
    let params = op.params();
    let f = best_f(op, &state.g)?;
    let (g, j) = best_g(op, &f)?;
    let residual = relative_change(&g, &state.g, params.p, params.beta);
    let mut next = state.clone();
    next.f = f;
    next.g = g;
    next.functional_history.push(j);
    next.constant_estimate = j;
    next.residual = residual;
    let iteration = state.records.last().map_or(0, |r| r.iteration) + 1;
    next.record(op, iteration);
    Ok(next)
}

/// Moves the half-mass radius of `g` towards 1 by a whole-shell dilation,
/// `g(v) -> r^{(N + beta p)/p} g(delta_r v)` and `f(u) -> r^{N/q'} f(delta_r u)`.
/// Shell shifts leave the functional unchanged apart from what leaves the
/// annulus. A shift is applied only if the functional stays at or above
/// the value recorded before the latest ascent step, so the history stays
/// nondecreasing; otherwise shorter shifts are tried.
pub fn renormalize_dilation(state: &MaximizerState, op: &SteinWeissOperator) -> Result<MaximizerState> {
    let params = op.params();
    let grid = op.grid();
    let half = half_mass_radius(&state.g, params.p, params.beta)?;
    let h = &state.functional_history;
    let floor = if h.len() >= 2 { h[h.len() - 2] } else { state.constant_estimate };
    let floor = floor.min(state.constant_estimate * (1.0 - RENORMALIZE_SLACK));
    let mut s = (half.radius.ln() / grid.log_spacing()).round() as i64;
    let mut next = state.clone();
    let nf = params.dimension();
    while s != 0 {
        let r = (s as f64 * grid.log_spacing()).exp();
        let g = shift_shells(&state.g, s, r.powf((nf + params.beta * params.p) / params.p));
        let f = shift_shells(&state.f, s, r.powf(nf / params.q_prime));
        let j = functional(op, &f, &g);
        if j >= floor {
            next.renormalizations += 1;
            next.g = g;
            next.f = f;
            next.constant_estimate = j;
            if let Some(last) = next.functional_history.last_mut() {
                *last = j;
            }
            if let Some(rec) = next.records.last_mut() {
                rec.functional = j;
            }
            return Ok(next);
        }
        s /= 2;
    }
    if (half.radius.ln() / grid.log_spacing()).round() != 0.0 {
        next.rejected_renormalizations += 1;
    }
    Ok(next)
}

/// Near the maximizer the iteration creeps along an almost neutral
/// direction (a slow dilation), so that consecutive updates
/// `d = g - g_prev` shrink by a factor `rho` close to 1. This tries
/// `g + omega d` with `omega = rho / (1 - rho)` and shorter multiples,
/// keeping the first candidate whose functional is at least the current one.
pub fn extrapolate_drift(state: &MaximizerState, previous: &GridFunction, rho: f64, op: &SteinWeissOperator) -> Result<MaximizerState> {
    let params = op.params();
    let rho = rho.clamp(0.0, 1.0 - 1.0 / MAX_OVERSHOOT);
    let mut omega = rho / (1.0 - rho);
    let mut next = state.clone();
    while omega >= 1.0 {
        let values: Vec<f64> = state
            .g
            .values()
            .iter()
            .zip(previous.values())
            .map(|(g, p)| (g + omega * (g - p)).max(0.0))
            .collect();
        let raw = GridFunction::new_unchecked(op.grid().clone(), values);
        let norm = weighted_lp_norm(&raw, params.p, params.beta);
        if norm > 0.0 && norm.is_finite() {
            let g = raw.scaled(1.0 / norm);
            let f = best_f(op, &g)?;
            let j = functional(op, &f, &g);
            if j >= state.constant_estimate {
                next.extrapolations += 1;
                next.g = g;
                next.f = f;
                next.constant_estimate = j;
                if let Some(last) = next.functional_history.last_mut() {
                    *last = j;
                }
                if let Some(rec) = next.records.last_mut() {
                    rec.functional = j;
                }
                return Ok(next);
            }
        }
        omega /= 4.0;
    }
    Ok(next)
}

pub fn maximize(op: &SteinWeissOperator, init: Init, options: &MaximizeOptions) -> Result<MaximizerState> {
    let g0 = match init {
        Init::Bump => bump(op),
        Init::Random { seed } => random_start(op, seed),
        Init::Function(g) => {
            if g.grid().descriptor() != op.grid().descriptor() {
                return invalid("initial iterate lives on a different grid");
            }
            g
        }
    };
    let mut state = MaximizerState::new(op, g0)?;
    let every = options.renormalize_every;
    for it in 1..=options.max_iter {
        let previous = state.g.clone();
        state = ascent_step(&state, op)?;
        if state.residual < options.tol {
            state.converged = true;
            break;
        }
        if every > 0 && it % every == 0 {
            let moved = state.renormalizations;
            state = renormalize_dilation(&state, op)?;
            // the window must hold plain ascent steps only
            if options.extrapolate && state.renormalizations == moved && it > every {
                let r = &state.records;
                let (now, then) = (r[r.len() - 1].residual, r[r.len() - 1 - every].residual);
                let rho = (now / then).powf(1.0 / every as f64);
                if rho.is_finite() && rho > 0.5 && rho < 1.0 {
                    state = extrapolate_drift(&state, &previous, rho, op)?;
                }
            }
        }
    }
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct SystemState {
    /// Solution pair of the integral system at its own scale.
    pub u: GridFunction,
    pub v: GridFunction,
    /// The functional at the normalized pair; the system's scale follows
    /// from it through `c_1 = J^{(p_2 + 1)/(1 - p_1 p_2)}`, `c_2 = c_1^{p_1} J`.
    pub multiplier_estimate: f64,
    pub scale: (f64, f64),
    pub residuals: (f64, f64),
    pub residual_history: Vec<(f64, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub p1: f64,
    pub p2: f64,
}

/// Solves
/// `u = w_alpha I(w_beta v^{p_2})`, `v = w_beta I(w_alpha u^{p_1})`
/// with `p_1 = q - 1 = 1/(q' - 1)` and `p_2 = p' - 1 = 1/(p - 1)`.
///
/// The iteration works on the pair normalized to `||u||_{p_1+1} = ||v||_{p_2+1} = 1`,
/// applying both integral maps to the current pair and rescaling; at a
/// fixed point both maps return the pair times the functional value `J`,
/// and the homogeneity of the system then fixes the scale of the solution.
pub fn solve_system(op: &SteinWeissOperator, init: (GridFunction, GridFunction), tol: f64, max_iter: usize) -> Result<SystemState> {
    let params = op.params();
    params.validate()?;
    let nf = params.dimension();
    let (p1, p2) = (params.q() - 1.0, params.p_prime() - 1.0);
    let identity = 1.0 / (p1 + 1.0) + 1.0 / (p2 + 1.0);
    let target = (params.alpha + params.beta + params.lambda) / nf;
    if (identity - target).abs() > 1e-9 {
        return invalid(format!("1/(p1+1) + 1/(p2+1) = {identity}, expected (alpha+beta+lambda)/N = {target}"));
    }
    if (p1 * p2 - 1.0).abs() < 1e-12 {
        return invalid("p1 p2 = 1: the system has no preferred scale");
    }
    let (u0, v0) = init;
    let mut u = power_normalized(u0.into_values(), 1.0, p1 + 1.0, 0.0, op)?;
    let mut v = power_normalized(v0.into_values(), 1.0, p2 + 1.0, 0.0, op)?;
    let mut history = Vec::new();
    let mut last = None;
    for it in 0..=max_iter {
        let up: Vec<f64> = u.values().iter().map(|x| x.powf(p1)).collect();
        let vp: Vec<f64> = v.values().iter().map(|x| x.powf(p2)).collect();
        let a = op.right_values(&vp);
        let b = op.left_values(&up);
        let j = op.pairing(&up, &a);
        let c1 = j.powf((p2 + 1.0) / (1.0 - p1 * p2));
        let c2 = c1.powf(p1) * j;
        if !(c1.is_finite() && c2.is_finite()) || c1.max(c2) > 1e12 || c1.min(c2) < 1e-12 {
            return Err(Error::Divergence { iterations: it, reason: format!("scale constants ({c1}, {c2}) out of range") });
        }
        // defects of the two equations at (c1 u, c2 v)
        let r1 = defect(u.values(), &a, c1, c2.powf(p2), p1 + 1.0, op);
        let r2 = defect(v.values(), &b, c2, c1.powf(p1), p2 + 1.0, op);
        history.push((r1, r2));
        last = Some((j, c1, c2, r1, r2));
        if r1.max(r2) < tol || it == max_iter {
            break;
        }
        u = power_normalized(a, 1.0, p1 + 1.0, 0.0, op)?;
        v = power_normalized(b, 1.0, p2 + 1.0, 0.0, op)?;
    }
    let (j, c1, c2, r1, r2) = last.expect("loop runs at least once");
    let iterations = history.len() - 1;
    Ok(SystemState {
        u: u.scaled(c1),
        v: v.scaled(c2),
        multiplier_estimate: j,
        scale: (c1, c2),
        residuals: (r1, r2),
        residual_history: history,
        iterations,
        converged: r1.max(r2) < tol,
        p1,
        p2,
    })
}

/// `||c x - k m|| / ||c x||` in the unweighted `L^p` norm.
fn defect(x: &[f64], mapped: &[f64], c: f64, k: f64, p: f64, op: &SteinWeissOperator) -> f64 {
    let w = op.grid().node_weights();
    let num = compensated_sum(x.iter().zip(mapped).zip(w).map(|((x, m), w)| w * (c * x - k * m).abs().powf(p)));
    let den = compensated_sum(x.iter().zip(w).map(|(x, w)| w * (c * x).powf(p)));
    (num / den).powf(1.0 / p)
}

/// Seed for [`solve_system`] from a maximizer: `u = f^{q'-1}`, `v = G^{p-1}`
/// with `G` the functional form of `g`.
pub fn system_seed(state: &MaximizerState, op: &SteinWeissOperator) -> (GridFunction, GridFunction) {
    seed_from_pair(op, &state.f, &state.g)
}

/// [`system_seed`] for a stored pair, `g` in the maximizing form.
pub fn seed_from_pair(op: &SteinWeissOperator, f: &GridFunction, g: &GridFunction) -> (GridFunction, GridFunction) {
    let params = op.params();
    let grid = op.grid().clone();
    let u = f.values().iter().map(|x| x.powf(params.q_prime - 1.0)).collect();
    let v = g.values().iter().zip(op.w_beta()).map(|(x, w)| (x / w).powf(params.p - 1.0)).collect();
    (GridFunction::new_unchecked(grid.clone(), u), GridFunction::new_unchecked(grid, v))
}
