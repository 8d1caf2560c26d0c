//! Ambient spaces: Euclidean R^n, the product R^m x R^n with a distinguished
//! first factor, and the Heisenberg group H^n.
//!
//! Heisenberg points are stored flat as `(x_1..x_n, y_1..y_n, t)` with
//! `z_j = x_j + i y_j`. The group law is
//!
//! ```text
//! (z, t)(z', t') = (z + z', t + t' + 2 Im(z . conj(z')))
//!                = (z + z', t + t' + 2 sum_j (y_j x'_j - x_j y'_j))
//! ```
//!
//! With this sign the inverse is `(-z, -t)`: the cross term of `u u^{-1}` is
//! `2 Im(-|z|^2) = 0`. The homogeneous norm is the Korányi gauge
//! `(|z|^4 + t^2)^{1/4}`, the dilation is `(r z, r^2 t)`, and the homogeneous
//! dimension is `Q = 2n + 2`. Euclidean and product spaces use vector
//! addition, negation and the Euclidean norm.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean { n: usize },
    /// R^m x R^n; the weight acts on the first factor x' in R^m.
    Product { m: usize, n: usize },
    Heisenberg { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// |u|, the (homogeneous) norm of the whole point.
    FullNorm,
    /// |z| on H^n, singular on the center {z = 0}.
    Horizontal,
    /// |x'| on R^m x R^n, singular on {x' = 0}.
    PartialFirstFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub weight_kind: WeightKind,
}

impl SpaceSpec {
    pub fn new(kind: SpaceKind, weight_kind: WeightKind) -> Result<Self> {
        match kind {
            SpaceKind::Euclidean { n } | SpaceKind::Heisenberg { n } if n == 0 => {
                return invalid("dimension must be positive")
            }
            SpaceKind::Product { m, n } if m == 0 || n == 0 => {
                return invalid("product factors must have positive dimension")
            }
            _ => {}
        }
        let ok = matches!(
            (kind, weight_kind),
            (SpaceKind::Euclidean { .. }, WeightKind::FullNorm)
                | (SpaceKind::Heisenberg { .. }, WeightKind::FullNorm)
                | (SpaceKind::Heisenberg { .. }, WeightKind::Horizontal)
                | (SpaceKind::Product { .. }, WeightKind::PartialFirstFactor)
        );
        if !ok {
            return invalid(format!("weight kind {weight_kind:?} is not valid on {kind:?}"));
        }
        Ok(Self { kind, weight_kind })
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(SpaceKind::Euclidean { n }, WeightKind::FullNorm).expect("valid euclidean spec")
    }

    pub fn product(m: usize, n: usize) -> Self {
        Self::new(SpaceKind::Product { m, n }, WeightKind::PartialFirstFactor).expect("valid product spec")
    }

    pub fn heisenberg(n: usize) -> Self {
        Self::new(SpaceKind::Heisenberg { n }, WeightKind::FullNorm).expect("valid heisenberg spec")
    }

    pub fn heisenberg_horizontal(n: usize) -> Self {
        Self::new(SpaceKind::Heisenberg { n }, WeightKind::Horizontal).expect("valid heisenberg spec")
    }

    /// n for R^n, m + n for the product, 2n + 2 for H^n.
    pub fn homogeneous_dimension(&self) -> usize {
        match self.kind {
            SpaceKind::Euclidean { n } => n,
            SpaceKind::Product { m, n } => m + n,
            SpaceKind::Heisenberg { n } => 2 * n + 2,
        }
    }

    /// Number of real coordinates of a point.
    pub fn coord_len(&self) -> usize {
        match self.kind {
            SpaceKind::Euclidean { n } => n,
            SpaceKind::Product { m, n } => m + n,
            SpaceKind::Heisenberg { n } => 2 * n + 1,
        }
    }

    /// Dimension of the factor carrying the weight's singular set test:
    /// 2n for horizontal weights, m for partial weights, the homogeneous
    /// dimension for full-norm weights.
    pub fn weight_dimension(&self) -> usize {
        match (self.kind, self.weight_kind) {
            (SpaceKind::Heisenberg { n }, WeightKind::Horizontal) => 2 * n,
            (SpaceKind::Product { m, .. }, WeightKind::PartialFirstFactor) => m,
            _ => self.homogeneous_dimension(),
        }
    }

    pub fn is_heisenberg(&self) -> bool {
        matches!(self.kind, SpaceKind::Heisenberg { .. })
    }

    fn check(&self, p: &SpacePoint) -> Result<()> {
        let expected = self.coord_len();
        if p.0.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: p.0.len() });
        }
        Ok(())
    }

    pub fn identity(&self) -> SpacePoint {
        SpacePoint(vec![0.0; self.coord_len()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacePoint(pub Vec<f64>);

impl SpacePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Heisenberg point from complex coordinates given as `(re, im)` pairs.
    pub fn heisenberg(z: &[(f64, f64)], t: f64) -> Self {
        let n = z.len();
        let mut c = vec![0.0; 2 * n + 1];
        for (j, &(x, y)) in z.iter().enumerate() {
            c[j] = x;
            c[n + j] = y;
        }
        c[2 * n] = t;
        Self(c)
    }
}

// Slice kernels shared with the hot loops in `grid` and `kernel`.

pub(crate) fn mul_into(spec: &SpaceSpec, u: &[f64], v: &[f64], out: &mut [f64]) {
    match spec.kind {
        SpaceKind::Heisenberg { n } => {
            let mut cross = 0.0;
            for j in 0..n {
                cross += u[n + j] * v[j] - u[j] * v[n + j];
            }
            for k in 0..2 * n {
                out[k] = u[k] + v[k];
            }
            out[2 * n] = u[2 * n] + v[2 * n] + 2.0 * cross;
        }
        _ => {
            for k in 0..u.len() {
                out[k] = u[k] + v[k];
            }
        }
    }
}

pub(crate) fn norm_of(spec: &SpaceSpec, u: &[f64]) -> f64 {
    match spec.kind {
        SpaceKind::Heisenberg { n } => {
            let z2: f64 = u[..2 * n].iter().map(|x| x * x).sum();
            let t = u[2 * n];
            (z2 * z2 + t * t).sqrt().sqrt()
        }
        _ => u.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// d(u, v) = |u^{-1} v| without allocating.
pub(crate) fn distance_of(spec: &SpaceSpec, u: &[f64], v: &[f64]) -> f64 {
    match spec.kind {
        SpaceKind::Heisenberg { n } => {
            // u^{-1} v = (z' - z, t' - t + 2 Im(-z . conj(z')))
            let mut cross = 0.0;
            let mut z2 = 0.0;
            for j in 0..n {
                cross += u[j] * v[n + j] - u[n + j] * v[j];
                let dx = v[j] - u[j];
                let dy = v[n + j] - u[n + j];
                z2 += dx * dx + dy * dy;
            }
            let t = v[2 * n] - u[2 * n] + 2.0 * cross;
            (z2 * z2 + t * t).sqrt().sqrt()
        }
        _ => u
            .iter()
            .zip(v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
    }
}

/// The base of the weight: |u|, |z| or |x'|.
pub(crate) fn weight_base_of(spec: &SpaceSpec, u: &[f64]) -> f64 {
    match (spec.kind, spec.weight_kind) {
        (SpaceKind::Heisenberg { n }, WeightKind::Horizontal) => {
            u[..2 * n].iter().map(|x| x * x).sum::<f64>().sqrt()
        }
        (SpaceKind::Product { m, .. }, WeightKind::PartialFirstFactor) => {
            u[..m].iter().map(|x| x * x).sum::<f64>().sqrt()
        }
        _ => norm_of(spec, u),
    }
}

pub(crate) fn power_weight(base: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else if base == 0.0 {
        if exponent > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        base.powf(-exponent)
    }
}

pub(crate) fn dilate_into(spec: &SpaceSpec, u: &[f64], r: f64, out: &mut [f64]) {
    match spec.kind {
        SpaceKind::Heisenberg { n } => {
            for k in 0..2 * n {
                out[k] = r * u[k];
            }
            out[2 * n] = r * r * u[2 * n];
        }
        _ => {
            for k in 0..u.len() {
                out[k] = r * u[k];
            }
        }
    }
}

pub fn group_mul(u: &SpacePoint, v: &SpacePoint, spec: &SpaceSpec) -> Result<SpacePoint> {
    spec.check(u)?;
    spec.check(v)?;
    let mut out = vec![0.0; u.0.len()];
    mul_into(spec, &u.0, &v.0, &mut out);
    Ok(SpacePoint(out))
}

pub fn group_inv(u: &SpacePoint, spec: &SpaceSpec) -> Result<SpacePoint> {
    spec.check(u)?;
    Ok(SpacePoint(u.0.iter().map(|x| -x).collect()))
}

pub fn homogeneous_norm(u: &SpacePoint, spec: &SpaceSpec) -> f64 {
    norm_of(spec, &u.0)
}

pub fn left_distance(u: &SpacePoint, v: &SpacePoint, spec: &SpaceSpec) -> Result<f64> {
    spec.check(u)?;
    spec.check(v)?;
    Ok(distance_of(spec, &u.0, &v.0))
}

pub fn dilation(u: &SpacePoint, r: f64, spec: &SpaceSpec) -> Result<SpacePoint> {
    spec.check(u)?;
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("dilation factor must be positive, got {r}"));
    }
    let mut out = vec![0.0; u.0.len()];
    dilate_into(spec, &u.0, r, &mut out);
    Ok(SpacePoint(out))
}

/// `base^{-exponent}` with the base selected by the weight kind. Points on
/// the singular set give `+inf` for positive exponents and `0` for negative.
pub fn weight_value(u: &SpacePoint, exponent: f64, spec: &SpaceSpec) -> f64 {
    power_weight(weight_base_of(spec, &u.0), exponent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> SpaceSpec {
        SpaceSpec::heisenberg(1)
    }

    #[test]
    fn heisenberg_product_examples() {
        let u = SpacePoint::heisenberg(&[(1.0, 0.0)], 0.0);
        let v = SpacePoint::heisenberg(&[(0.0, 1.0)], 0.0);
        let w = group_mul(&u, &v, &h1()).unwrap();
        assert_eq!(w, SpacePoint::heisenberg(&[(1.0, 1.0)], -2.0));

        let u = SpacePoint::heisenberg(&[(2.0, 3.0)], 5.0);
        assert_eq!(group_mul(&u, &h1().identity(), &h1()).unwrap(), u);
    }

    #[test]
    fn inverse_examples() {
        let u = SpacePoint::heisenberg(&[(1.0, 2.0)], 3.0);
        assert_eq!(group_inv(&u, &h1()).unwrap(), SpacePoint::heisenberg(&[(-1.0, -2.0)], -3.0));
        assert_eq!(group_inv(&h1().identity(), &h1()).unwrap(), h1().identity());
        let e3 = SpaceSpec::euclidean(3);
        let x = SpacePoint::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(group_inv(&x, &e3).unwrap().0, vec![-1.0, -2.0, -3.0]);
    }

    #[test]
    fn norm_examples() {
        let s = h1();
        assert_eq!(homogeneous_norm(&SpacePoint::heisenberg(&[(1.0, 0.0)], 0.0), &s), 1.0);
        assert!((homogeneous_norm(&SpacePoint::heisenberg(&[(0.0, 0.0)], 4.0), &s) - 2.0).abs() < 1e-15);
        let v = homogeneous_norm(&SpacePoint::heisenberg(&[(1.0, 1.0)], 2.0), &s);
        assert!((v - 8f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let s = h1();
        let o = s.identity();
        let p = SpacePoint::heisenberg(&[(0.0, 0.0)], 4.0);
        assert!((left_distance(&o, &p, &s).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(left_distance(&p, &p, &s).unwrap(), 0.0);
    }

    #[test]
    fn dilation_examples() {
        let s = h1();
        let u = SpacePoint::heisenberg(&[(1.0, 0.0)], 3.0);
        assert_eq!(dilation(&u, 2.0, &s).unwrap(), SpacePoint::heisenberg(&[(2.0, 0.0)], 12.0));
        assert_eq!(dilation(&u, 1.0, &s).unwrap(), u);
        let e2 = SpaceSpec::euclidean(2);
        assert_eq!(dilation(&SpacePoint::new(vec![1.0, 1.0]), 3.0, &e2).unwrap().0, vec![3.0, 3.0]);
        assert!(dilation(&u, 0.0, &s).is_err());
        assert!(dilation(&u, -1.0, &s).is_err());
    }

    #[test]
    fn weight_examples() {
        let s = h1();
        let u = SpacePoint::heisenberg(&[(0.0, 0.0)], 4.0); // |u| = 2
        assert!((weight_value(&u, 1.0, &s) - 0.5).abs() < 1e-15);
        assert_eq!(weight_value(&u, 0.0, &s), 1.0);
        let hz = SpaceSpec::heisenberg_horizontal(1);
        let c = SpacePoint::heisenberg(&[(0.0, 0.0)], 5.0);
        assert_eq!(weight_value(&c, 1.0, &hz), f64::INFINITY);
        assert_eq!(weight_value(&c, -1.0, &hz), 0.0);
        let pr = SpaceSpec::product(1, 1);
        assert!((weight_value(&SpacePoint::new(vec![4.0, 7.0]), 0.5, &pr) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = h1();
        let bad = SpacePoint::new(vec![1.0, 2.0]);
        assert!(matches!(
            group_mul(&bad, &s.identity(), &s),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(left_distance(&bad, &bad, &s).is_err());
    }

    #[test]
    fn spec_validation() {
        assert_eq!(SpaceSpec::heisenberg(3).homogeneous_dimension(), 8);
        assert!(SpaceSpec::new(SpaceKind::Euclidean { n: 2 }, WeightKind::Horizontal).is_err());
        assert!(SpaceSpec::new(SpaceKind::Product { m: 1, n: 1 }, WeightKind::FullNorm).is_err());
        assert!(SpaceSpec::new(SpaceKind::Heisenberg { n: 1 }, WeightKind::PartialFirstFactor).is_err());
    }
}
