//! Log-polar quadrature grids and functions sampled on them.
//!
//! A grid covers the annulus `r_min <= |u| <= r_max` in the homogeneous norm.
//! Each node is the centre of a cell in parameter space
//! `xi = (x, angles...)` with `x = ln |u|`:
//!
//! - R^1: `u = s e^x` with a sign `s`; each requested shell is split into
//!   `angular_resolution / 2` log sub-shells so a shell carries
//!   `angular_resolution` nodes.
//! - R^N, N >= 2 (and products): hyperspherical angles
//!   `theta_1..theta_{N-2}` in `[0, pi]` and `phi` in `[0, 2 pi)`, density
//!   `e^{Nx} prod sin^{N-1-k}(theta_k)`.
//! - H^n: `|z| = rho cos^{1/2}(psi)`, `t = rho^2 sin(psi)` with
//!   `psi` in `[-pi/2, pi/2]` and `z / |z|` on the unit sphere of R^{2n};
//!   the Haar density is `rho^Q cos^{n-1}(psi)` times the sphere density.
//!
//! Every angular coordinate gets `angular_resolution` uniform bins, so a
//! shell has `angular_resolution^(d-1)` nodes where `d` is the number of
//! real coordinates. Node weights are exact cell volumes.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{self, SpaceKind, SpacePoint, SpaceSpec};
use crate::quadrature::{compensated_sum, gauss_legendre_on};
use crate::special;

pub(crate) const MAX_COORDS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum AxisKind {
    /// The two directions of R^1.
    Sign,
    /// Polar angle in `[0, pi]` with density `sin^power`.
    Theta { power: u32 },
    /// Heisenberg homogeneous angle in `[-pi/2, pi/2]` with density `cos^power`.
    Psi { power: u32 },
    /// Periodic azimuth in `[0, 2 pi)`.
    Phi,
}

#[derive(Debug, Clone)]
pub(crate) struct Axis {
    pub kind: AxisKind,
    pub bins: usize,
    pub lo: f64,
    pub width: f64,
}

impl Axis {
    fn new(kind: AxisKind, bins: usize) -> Self {
        let (lo, span) = match kind {
            AxisKind::Sign => (0.0, 0.0),
            AxisKind::Theta { .. } => (0.0, PI),
            AxisKind::Psi { .. } => (-0.5 * PI, PI),
            AxisKind::Phi => (0.0, 2.0 * PI),
        };
        let bins = if kind == AxisKind::Sign { 2 } else { bins };
        Self { kind, bins, lo, width: span / bins as f64 }
    }

    pub fn center(&self, j: usize) -> f64 {
        match self.kind {
            AxisKind::Sign => {
                if j == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => self.lo + (j as f64 + 0.5) * self.width,
        }
    }

    /// Parameter interval of bin `j`; zero width for the sign axis.
    pub fn bounds(&self, j: usize) -> (f64, f64) {
        match self.kind {
            AxisKind::Sign => {
                let c = self.center(j);
                (c, c)
            }
            _ => {
                let a = self.lo + j as f64 * self.width;
                (a, a + self.width)
            }
        }
    }

    fn density(&self, v: f64) -> f64 {
        match self.kind {
            AxisKind::Sign | AxisKind::Phi => 1.0,
            AxisKind::Theta { power } => v.sin().powi(power as i32),
            AxisKind::Psi { power } => v.cos().max(0.0).powi(power as i32),
        }
    }

    fn bin_measure(&self, j: usize) -> f64 {
        match self.kind {
            AxisKind::Sign => 1.0,
            AxisKind::Phi => self.width,
            _ => {
                let (a, b) = self.bounds(j);
                compensated_sum(gauss_legendre_on(24, a, b).into_iter().map(|(x, w)| w * self.density(x)))
            }
        }
    }
}

/// Cell-centred quadrature grid on a truncated annulus.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    spec: SpaceSpec,
    radial_levels: usize,
    angular_resolution: usize,
    r_min: f64,
    r_max: f64,
    shells: usize,
    h: f64,
    x0: f64,
    axes: Vec<Axis>,
    strides: Vec<usize>,
    per_shell: usize,
    angular_measure: Vec<f64>,
    coords: Vec<f64>,
    weights: Vec<f64>,
    norms: Vec<f64>,
}

fn sphere_axes(dim: usize, bins: usize) -> Vec<Axis> {
    let mut axes = Vec::new();
    for k in 0..dim.saturating_sub(2) {
        axes.push(Axis::new(AxisKind::Theta { power: (dim - 2 - k) as u32 }, bins));
    }
    axes.push(Axis::new(AxisKind::Phi, bins));
    axes
}

/// Unit vector of R^dim from hyperspherical angles `theta_1..theta_{dim-2}`
/// and the azimuth `phi`.
fn sphere_point(thetas: &[f64], phi: f64, omega: &mut [f64]) {
    let dim = omega.len();
    let mut s = 1.0;
    for k in 0..dim - 2 {
        omega[k] = s * thetas[k].cos();
        s *= thetas[k].sin();
    }
    omega[dim - 2] = s * phi.cos();
    omega[dim - 1] = s * phi.sin();
}

fn sphere_angles(omega: &[f64], angles: &mut [f64]) {
    let dim = omega.len();
    let mut tail2: f64 = omega.iter().map(|w| w * w).sum();
    for k in 0..dim - 2 {
        tail2 -= omega[k] * omega[k];
        angles[k] = tail2.max(0.0).sqrt().atan2(omega[k]);
    }
    let mut phi = omega[dim - 1].atan2(omega[dim - 2]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    angles[dim - 2] = phi;
}

impl QuadratureGrid {
    pub fn build(
        spec: SpaceSpec,
        radial_levels: usize,
        angular_resolution: usize,
        r_min: f64,
        r_max: f64,
    ) -> Result<Self> {
        if radial_levels < 4 {
            return invalid(format!("radial_levels must be at least 4, got {radial_levels}"));
        }
        if angular_resolution < 4 {
            return invalid(format!("angular_resolution must be at least 4, got {angular_resolution}"));
        }
        if spec.coord_len() > MAX_COORDS {
            return invalid(format!("at most {MAX_COORDS} real coordinates are supported"));
        }
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return invalid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]"));
        }
        let big_n = spec.homogeneous_dimension();
        let (axes, shells) = match spec.kind {
            SpaceKind::Euclidean { n: 1 } => {
                if angular_resolution % 2 != 0 {
                    return invalid("angular_resolution must be even on R^1");
                }
                (vec![Axis::new(AxisKind::Sign, 2)], radial_levels * angular_resolution / 2)
            }
            SpaceKind::Euclidean { n } => (sphere_axes(n, angular_resolution), radial_levels),
            SpaceKind::Product { m, n } => (sphere_axes(m + n, angular_resolution), radial_levels),
            SpaceKind::Heisenberg { n } => {
                let mut axes = sphere_axes(2 * n, angular_resolution);
                let phi = axes.pop().expect("azimuth axis");
                axes.push(Axis::new(AxisKind::Psi { power: (n - 1) as u32 }, angular_resolution));
                axes.push(phi);
                (axes, radial_levels)
            }
        };
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].bins;
        }
        let per_shell: usize = axes.iter().map(|a| a.bins).product();
        let x0 = r_min.ln();
        let h = (r_max.ln() - x0) / shells as f64;

        let mut grid = Self {
            spec,
            radial_levels,
            angular_resolution,
            r_min,
            r_max,
            shells,
            h,
            x0,
            axes,
            strides,
            per_shell,
            angular_measure: Vec::new(),
            coords: Vec::new(),
            weights: Vec::new(),
            norms: Vec::new(),
        };
        grid.angular_measure = (0..per_shell)
            .map(|a| {
                let idx = grid.angular_multi_index(a);
                grid.axes.iter().zip(&idx).map(|(ax, &j)| ax.bin_measure(j)).product()
            })
            .collect();

        let d = spec.coord_len();
        let count = shells * per_shell;
        grid.coords = vec![0.0; count * d];
        grid.weights = vec![0.0; count];
        grid.norms = vec![0.0; count];
        let nf = big_n as f64;
        let mut xi = vec![0.0; grid.param_len()];
        for k in 0..shells {
            let xk = x0 + k as f64 * h;
            let radial = (nf * xk).exp() * (nf * h).exp_m1() / nf;
            for a in 0..per_shell {
                let i = k * per_shell + a;
                grid.node_param(k, a, &mut xi);
                let mut pt = vec![0.0; d];
                grid.param_to_point(&xi, &mut pt);
                grid.coords[i * d..(i + 1) * d].copy_from_slice(&pt);
                grid.weights[i] = radial * grid.angular_measure[a];
                grid.norms[i] = geometry::norm_of(&spec, &pt);
                let base = geometry::weight_base_of(&spec, &pt);
                if !(base > 1e-12 * grid.norms[i]) {
                    return Err(Error::InvalidArgument(format!(
                        "grid node {i} lies on the weight singular set; a multiple of 4 for angular_resolution avoids it"
                    )));
                }
            }
        }
        Ok(grid)
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn radial_levels(&self) -> usize {
        self.radial_levels
    }

    pub fn angular_resolution(&self) -> usize {
        self.angular_resolution
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of log-radial cells actually used (differs from
    /// `radial_levels` only on R^1).
    pub fn shell_count(&self) -> usize {
        self.shells
    }

    pub fn nodes_per_shell(&self) -> usize {
        self.per_shell
    }

    /// Log-radial cell width.
    pub fn log_spacing(&self) -> f64 {
        self.h
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn node_coords(&self, i: usize) -> &[f64] {
        let d = self.spec.coord_len();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn node(&self, i: usize) -> SpacePoint {
        SpacePoint(self.node_coords(i).to_vec())
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node_norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn shell_of(&self, i: usize) -> usize {
        i / self.per_shell
    }

    /// Inner and outer radius of shell `k`.
    pub fn shell_bounds(&self, k: usize) -> (f64, f64) {
        let a = self.x0 + k as f64 * self.h;
        (a.exp(), (a + self.h).exp())
    }

    /// Measure of the truncation annulus from the closed-form unit-ball volume.
    pub fn annulus_volume(&self) -> f64 {
        let nf = self.spec.homogeneous_dimension() as f64;
        unit_ball_volume(&self.spec) * (self.r_max.powf(nf) - self.r_min.powf(nf))
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    // Parameter-space layout, shared with the kernel assembly.

    pub(crate) fn param_len(&self) -> usize {
        1 + self.axes.len()
    }

    pub(crate) fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub(crate) fn log_origin(&self) -> f64 {
        self.x0
    }

    pub(crate) fn angular_multi_index(&self, a: usize) -> Vec<usize> {
        self.axes
            .iter()
            .zip(&self.strides)
            .map(|(ax, &s)| (a / s) % ax.bins)
            .collect()
    }

    pub(crate) fn angular_flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(j, s)| j * s).sum()
    }

    /// Bins of the fastest-varying (azimuthal or sign) axis.
    pub(crate) fn azimuth_bins(&self) -> usize {
        self.axes.last().map(|a| a.bins).unwrap_or(1)
    }

    /// Parameter vector of the node in shell `k`, angular cell `a`.
    pub(crate) fn node_param(&self, k: usize, a: usize, xi: &mut [f64]) {
        xi[0] = self.x0 + (k as f64 + 0.5) * self.h;
        for (j, (ax, &s)) in self.axes.iter().zip(&self.strides).enumerate() {
            xi[1 + j] = ax.center((a / s) % ax.bins);
        }
    }

    /// Parameter box of angular cell `a` over the log interval `[xa, xb]`.
    pub(crate) fn cell_box(&self, a: usize, xa: f64, xb: f64) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![xa];
        let mut hi = vec![xb];
        for (ax, &s) in self.axes.iter().zip(&self.strides) {
            let (l, u) = ax.bounds((a / s) % ax.bins);
            lo.push(l);
            hi.push(u);
        }
        (lo, hi)
    }

    pub(crate) fn angular_measure(&self, a: usize) -> f64 {
        self.angular_measure[a]
    }

    /// Volume density of the parameterization at `xi`.
    pub(crate) fn param_density(&self, xi: &[f64]) -> f64 {
        let nf = self.spec.homogeneous_dimension() as f64;
        let mut d = (nf * xi[0]).exp();
        for (ax, &v) in self.axes.iter().zip(&xi[1..]) {
            d *= ax.density(v);
        }
        d
    }

    pub(crate) fn param_to_point(&self, xi: &[f64], out: &mut [f64]) {
        let r = xi[0].exp();
        match self.spec.kind {
            SpaceKind::Euclidean { n: 1 } => out[0] = xi[1] * r,
            SpaceKind::Euclidean { .. } | SpaceKind::Product { .. } => {
                let dim = out.len();
                sphere_point(&xi[1..dim - 1], xi[dim - 1], out);
                for v in out.iter_mut() {
                    *v *= r;
                }
            }
            SpaceKind::Heisenberg { n } => {
                let mut omega = [0.0; MAX_COORDS];
                sphere_point(&xi[1..2 * n - 1], xi[2 * n], &mut omega[..2 * n]);
                let psi = xi[2 * n - 1];
                let zr = r * psi.cos().max(0.0).sqrt();
                for j in 0..n {
                    out[j] = zr * omega[2 * j];
                    out[n + j] = zr * omega[2 * j + 1];
                }
                out[2 * n] = r * r * psi.sin();
            }
        }
    }

    /// Inverse of [`Self::param_to_point`]; `None` at the origin.
    pub(crate) fn point_to_param(&self, u: &[f64], xi: &mut [f64]) -> Option<()> {
        let rho = geometry::norm_of(&self.spec, u);
        if !(rho > 0.0) || !rho.is_finite() {
            return None;
        }
        xi[0] = rho.ln();
        match self.spec.kind {
            SpaceKind::Euclidean { n: 1 } => xi[1] = if u[0] >= 0.0 { 1.0 } else { -1.0 },
            SpaceKind::Euclidean { .. } | SpaceKind::Product { .. } => {
                let dim = u.len();
                let mut omega = [0.0; MAX_COORDS];
                for k in 0..dim {
                    omega[k] = u[k] / rho;
                }
                sphere_angles(&omega[..dim], &mut xi[1..]);
            }
            SpaceKind::Heisenberg { n } => {
                let z2: f64 = u[..2 * n].iter().map(|v| v * v).sum();
                let mut omega = [0.0; MAX_COORDS];
                let zn = z2.sqrt();
                if zn > 0.0 {
                    for j in 0..n {
                        omega[2 * j] = u[j] / zn;
                        omega[2 * j + 1] = u[n + j] / zn;
                    }
                } else {
                    omega[0] = 1.0;
                }
                let mut ang = [0.0; MAX_COORDS];
                sphere_angles(&omega[..2 * n], &mut ang[..2 * n - 1]);
                xi[1..2 * n - 1].copy_from_slice(&ang[..2 * n - 2]);
                xi[2 * n - 1] = u[2 * n].atan2(z2);
                xi[2 * n] = ang[2 * n - 2];
            }
        }
        Some(())
    }
}

pub(crate) fn unit_ball_volume(spec: &SpaceSpec) -> f64 {
    match spec.kind {
        SpaceKind::Heisenberg { n } => special::heisenberg_ball_volume(n),
        _ => special::euclidean_ball_volume(spec.homogeneous_dimension()),
    }
}

/// Builds a grid; see [`QuadratureGrid`] for the layout.
pub fn build_grid(
    spec: SpaceSpec,
    radial_levels: usize,
    angular_resolution: usize,
    r_min: f64,
    r_max: f64,
) -> Result<Arc<QuadratureGrid>> {
    QuadratureGrid::build(spec, radial_levels, angular_resolution, r_min, r_max).map(Arc::new)
}

/// Serializable description from which a grid can be rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDescriptor {
    pub spec: SpaceSpec,
    pub radial_levels: usize,
    pub angular_resolution: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl GridDescriptor {
    pub fn build(&self) -> Result<Arc<QuadratureGrid>> {
        build_grid(self.spec, self.radial_levels, self.angular_resolution, self.r_min, self.r_max)
    }
}

impl QuadratureGrid {
    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            spec: self.spec,
            radial_levels: self.radial_levels,
            angular_resolution: self.angular_resolution,
            r_min: self.r_min,
            r_max: self.r_max,
        }
    }
}

/// Nonnegative values, one per node of a shared grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<QuadratureGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch { expected: grid.node_count(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid(format!("grid value {i} is {} (must be finite and nonnegative)", values[i]));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn new_unchecked(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<QuadratureGrid>) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: Arc<QuadratureGrid>, c: f64) -> Result<Self> {
        let n = grid.node_count();
        Self::new(grid, vec![c; n])
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<QuadratureGrid>, f: F) -> Result<Self> {
        let values = (0..grid.node_count()).map(|i| f(grid.node_coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    /// `a * self + b * other`; both must live on the same grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        same_grid(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.grid.clone(), values)
    }

    /// Multilinear in the angular parameters, cubic in log-values along the
    /// radius where the values are positive; zero outside the annulus.
    pub fn interpolate(&self, u: &[f64]) -> f64 {
        interpolate_values(&self.grid, &self.values, u)
    }
}

pub(crate) fn same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if Arc::ptr_eq(&a.grid, &b.grid) || a.grid.descriptor() == b.grid.descriptor() {
        Ok(())
    } else {
        invalid("grid functions live on different grids")
    }
}

pub(crate) fn interpolate_values(grid: &QuadratureGrid, values: &[f64], u: &[f64]) -> f64 {
    let mut xi = [0.0; MAX_COORDS];
    let plen = grid.param_len();
    if grid.point_to_param(u, &mut xi[..plen]).is_none() {
        return 0.0;
    }
    let span = grid.shells as f64 * grid.h;
    let rel = xi[0] - grid.x0;
    if rel < -1e-12 * grid.h || rel > span + 1e-12 * grid.h {
        return 0.0;
    }
    // (lower index, upper index, fraction toward upper) per parameter axis
    let mut lo = [0usize; MAX_COORDS];
    let mut hi = [0usize; MAX_COORDS];
    let mut fr = [0.0f64; MAX_COORDS];
    let clamp = |s: f64, bins: usize| -> (usize, usize, f64) {
        if s <= 0.0 {
            (0, 0, 0.0)
        } else if s >= (bins - 1) as f64 {
            (bins - 1, bins - 1, 0.0)
        } else {
            let j = s.floor();
            (j as usize, j as usize + 1, s - j)
        }
    };
    (lo[0], hi[0], fr[0]) = clamp(rel / grid.h - 0.5, grid.shells);
    for (k, ax) in grid.axes.iter().enumerate() {
        let v = xi[1 + k];
        (lo[k + 1], hi[k + 1], fr[k + 1]) = match ax.kind {
            AxisKind::Sign => {
                let j = if v >= 0.0 { 0 } else { 1 };
                (j, j, 0.0)
            }
            AxisKind::Phi => {
                let s = (v - ax.lo) / ax.width - 0.5;
                let j = s.floor();
                let f = s - j;
                let b = ax.bins as i64;
                let j0 = (j as i64).rem_euclid(b) as usize;
                (j0, (j0 + 1) % ax.bins, f)
            }
            AxisKind::Theta { .. } | AxisKind::Psi { .. } => clamp((v - ax.lo) / ax.width - 0.5, ax.bins),
        };
    }
    // multilinear in the angles on each shell, then cubic in log-values
    // along the radius, so power laws in |u| are reproduced exactly
    let active: Vec<usize> = (1..plen).filter(|&k| fr[k] > 0.0).collect();
    let mut idx = [0usize; MAX_COORDS];
    let mut on_shell = |shell: usize| {
        let mut total = 0.0;
        for mask in 0u32..(1u32 << active.len()) {
            let mut w = 1.0;
            idx[1..plen].copy_from_slice(&lo[1..plen]);
            for (bit, &k) in active.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    idx[k] = hi[k];
                    w *= fr[k];
                } else {
                    w *= 1.0 - fr[k];
                }
            }
            if w == 0.0 {
                continue;
            }
            let a = grid.angular_flat_index(&idx[1..plen]);
            total += w * values[shell * grid.per_shell + a];
        }
        total
    };
    let t = fr[0];
    if t == 0.0 {
        return on_shell(lo[0]);
    }
    let (a, b) = (on_shell(lo[0]), on_shell(hi[0]));
    if !(a > 0.0 && b > 0.0) {
        return (1.0 - t) * a + t * b;
    }
    if lo[0] == 0 || hi[0] + 1 >= grid.shells {
        return a.powf(1.0 - t) * b.powf(t);
    }
    let (a0, b1) = (on_shell(lo[0] - 1), on_shell(hi[0] + 1));
    if !(a0 > 0.0 && b1 > 0.0) {
        return a.powf(1.0 - t) * b.powf(t);
    }
    // Catmull-Rom on log-values
    let (y0, y1, y2, y3) = (a0.ln(), a.ln(), b.ln(), b1.ln());
    let t2 = t * t;
    let t3 = t2 * t;
    let y = 0.5
        * (2.0 * y1 + (y2 - y0) * t + (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3) * t2 + (3.0 * y1 - 3.0 * y2 + y3 - y0) * t3);
    y.exp()
}

/// Per-node mass `w_i (f_i base_i^e)^p`.
pub fn node_masses(f: &GridFunction, p: f64, weight_exponent: f64) -> Vec<f64> {
    let grid = &f.grid;
    let spec = grid.spec;
    (0..grid.node_count())
        .map(|i| {
            let v = f.values[i];
            if v == 0.0 {
                return 0.0;
            }
            let scale = if weight_exponent == 0.0 {
                1.0
            } else {
                geometry::weight_base_of(&spec, grid.node_coords(i)).powf(weight_exponent)
            };
            grid.weights[i] * (v * scale).powf(p)
        })
        .collect()
}

/// `(sum_i w_i (f_i base_i^e)^p)^{1/p}` with the base chosen by the weight kind.
pub fn weighted_lp_norm(f: &GridFunction, p: f64, weight_exponent: f64) -> f64 {
    compensated_sum(node_masses(f, p, weight_exponent)).powf(1.0 / p)
}

/// Rescales `f` to weighted norm 1.
pub fn normalize(f: &GridFunction, p: f64, weight_exponent: f64) -> Result<GridFunction> {
    let norm = weighted_lp_norm(f, p, weight_exponent);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate(format!("cannot normalize a function with norm {norm}")));
    }
    Ok(f.scaled(1.0 / norm))
}

/// `f_r(v) = r^{(N + e p)/p} f(delta_r v)`, which preserves the weighted
/// L^p norm in the continuum. Dilations by whole shell steps are applied as
/// exact index shifts; others interpolate. Values pulled from outside the
/// annulus are zero.
pub fn dilate_resample(f: &GridFunction, r: f64, p: f64, weight_exponent: f64) -> Result<GridFunction> {
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("dilation factor must be positive, got {r}"));
    }
    if r == 1.0 {
        return Ok(f.clone());
    }
    let grid = &f.grid;
    let nf = grid.spec.homogeneous_dimension() as f64;
    let factor = r.powf((nf + weight_exponent * p) / p);
    let s = r.ln() / grid.h;
    let sr = s.round();
    if (s - sr).abs() < 1e-9 {
        return Ok(shift_shells(f, sr as i64, factor));
    }
    let d = grid.spec.coord_len();
    let mut buf = vec![0.0; d];
    let mut values = vec![0.0; grid.node_count()];
    for (i, out) in values.iter_mut().enumerate() {
        geometry::dilate_into(&grid.spec, grid.node_coords(i), r, &mut buf);
        *out = factor * f.interpolate(&buf);
    }
    Ok(GridFunction::new_unchecked(grid.clone(), values))
}

/// `out(k, a) = factor * f(k + s, a)`, zero where `k + s` leaves the grid.
pub fn shift_shells(f: &GridFunction, s: i64, factor: f64) -> GridFunction {
    let grid = &f.grid;
    let ps = grid.per_shell;
    let shells = grid.shells as i64;
    let mut values = vec![0.0; grid.node_count()];
    for k in 0..shells {
        let src = k + s;
        if (0..shells).contains(&src) {
            let (dst, srcr) = (k as usize * ps, src as usize * ps);
            for a in 0..ps {
                values[dst + a] = factor * f.values[srcr + a];
            }
        }
    }
    GridFunction::new_unchecked(grid.clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfMass {
    pub radius: f64,
    /// Set when the half-mass point falls in the innermost shell, so the
    /// radius only bounds the true value from above.
    pub degenerate: bool,
}

/// Radius at which the cumulative mass `|g base^e|^p dv` reaches 1/2, with
/// log-linear interpolation between shell edges.
pub fn half_mass_radius(g: &GridFunction, p: f64, weight_exponent: f64) -> Result<HalfMass> {
    let grid = &g.grid;
    let per_shell = shell_masses(g, p, weight_exponent);
    let total = compensated_sum(per_shell.iter().copied());
    if total < 0.5 {
        return Err(Error::Truncation(format!(
            "only {total:.6} of the mass lies inside the truncation annulus"
        )));
    }
    let mut cum = 0.0;
    for (k, m) in per_shell.iter().enumerate() {
        let next = cum + m;
        if next >= 0.5 {
            if k == 0 {
                return Ok(HalfMass { radius: grid.r_min, degenerate: true });
            }
            let frac = if *m > 0.0 { (0.5 - cum) / m } else { 0.0 };
            let x = grid.x0 + (k as f64 + frac) * grid.h;
            return Ok(HalfMass { radius: x.exp(), degenerate: false });
        }
        cum = next;
    }
    Ok(HalfMass { radius: grid.r_max, degenerate: true })
}

/// Mass per shell, innermost first.
pub fn shell_masses(g: &GridFunction, p: f64, weight_exponent: f64) -> Vec<f64> {
    let masses = node_masses(g, p, weight_exponent);
    masses.chunks(g.grid.per_shell).map(|c| compensated_sum(c.iter().copied())).collect()
}

/// Mass carried by the innermost and outermost shells together, the
/// discrete proxy for what truncation cuts off.
pub fn tail_mass(g: &GridFunction, p: f64, weight_exponent: f64) -> f64 {
    let shells = shell_masses(g, p, weight_exponent);
    match shells.len() {
        0 => 0.0,
        1 => shells[0],
        n => shells[0] + shells[n - 1],
    }
}
