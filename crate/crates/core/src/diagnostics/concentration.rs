//! Concentration-compactness classification of sequences of measures.
//!
//! For each frame the concentration function
//! `Q_i(R) = max_v mu_i(B(v, R))` is evaluated over candidate centers
//! (grid nodes and the frame centroid) and the late third of the sequence
//! is tested against the three alternatives in turn.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{distance_of, SpaceSpec};
use crate::grid::{node_masses, shift_shells, GridFunction, QuadratureGrid};
use crate::quadrature::compensated_sum;

/// Tolerance on the total mass of each frame.
const NORMALIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MeasureSequence {
    spec: SpaceSpec,
    /// Node masses; each frame sums to 1.
    frames: Vec<GridFunction>,
}

impl MeasureSequence {
    /// Frames hold the mass carried by each node.
    pub fn new(frames: Vec<GridFunction>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return invalid("a measure sequence needs at least one frame");
        };
        let spec = *first.grid().spec();
        for (i, frame) in frames.iter().enumerate() {
            if frame.grid().spec() != &spec {
                return invalid(format!("frame {i} lives on a different space"));
            }
            let total = compensated_sum(frame.values().iter().copied());
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return invalid(format!("frame {i} has total mass {total}, expected 1"));
            }
        }
        Ok(Self { spec, frames })
    }

    /// `mu_i = |g_i|^p base^{e p} dv`, normalized per frame.
    pub fn from_functions(functions: &[GridFunction], p: f64, weight_exponent: f64) -> Result<Self> {
        let frames = functions
            .iter()
            .map(|g| {
                let masses = node_masses(g, p, weight_exponent);
                let total = compensated_sum(masses.iter().copied());
                if !(total > 0.0) {
                    return invalid("frame with zero mass");
                }
                GridFunction::new(g.grid().clone(), masses.iter().map(|m| m / total).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn frames(&self) -> &[GridFunction] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Moves each frame by the whole-shell dilation that brings its
    /// half-mass radius closest to 1. Masses that move off the annulus are
    /// dropped and the frame renormalized.
    pub fn renormalized(&self) -> Result<Self> {
        let frames = self
            .frames
            .iter()
            .map(|frame| {
                let grid = frame.grid();
                let shells: Vec<f64> = frame
                    .values()
                    .chunks(grid.nodes_per_shell())
                    .map(|c| compensated_sum(c.iter().copied()))
                    .collect();
                let mut cum = 0.0;
                let mut k_half = shells.len() - 1;
                for (k, m) in shells.iter().enumerate() {
                    cum += m;
                    if cum >= 0.5 {
                        k_half = k;
                        break;
                    }
                }
                let (lo, hi) = grid.shell_bounds(k_half);
                let r = (lo * hi).sqrt();
                let s = (r.ln() / grid.log_spacing()).round() as i64;
                // masses move with the cells, so no Jacobian factor
                let moved = shift_shells(frame, s, 1.0);
                let total = compensated_sum(moved.values().iter().copied());
                if !(total > 0.0) {
                    return invalid("renormalization moved all mass off the grid");
                }
                Ok(moved.scaled(1.0 / total))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Compactness,
    Vanishing,
    Dichotomy,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompactnessWitness {
    /// Per late frame, the center capturing at least `1 - epsilon`.
    pub centers: Vec<Vec<f64>>,
    /// Smallest tested radius that works for every late frame.
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VanishingWitness {
    /// `Q_i(R_max)` for every frame.
    pub decay: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyWitness {
    /// Mean mass of the heavier cluster over the late frames.
    pub k: f64,
    /// Cluster masses per late frame.
    pub masses: Vec<(f64, f64)>,
    /// Cluster radius `R_eps`.
    pub radius: f64,
    /// Center distances per late frame, the growing radii `R'`.
    pub separations: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub verdict: Verdict,
    pub epsilon: f64,
    pub radii: Vec<f64>,
    /// Index of the first late frame.
    pub late_start: usize,
    /// `Q_i(R)` per frame and radius.
    pub concentration: Vec<Vec<f64>>,
    pub compactness: Option<CompactnessWitness>,
    pub vanishing: Option<VanishingWitness>,
    pub dichotomy: Option<DichotomyWitness>,
}

/// Sorted distances from one center to every node, with the node masses
/// accumulated in that order.
struct Profile {
    center: Vec<f64>,
    dist: Vec<f64>,
    order: Vec<usize>,
    cum: Vec<f64>,
}

impl Profile {
    fn new(grid: &QuadratureGrid, masses: &[f64], center: Vec<f64>) -> Self {
        let spec = grid.spec();
        let dist: Vec<f64> = (0..grid.node_count()).map(|j| distance_of(spec, &center, grid.node_coords(j))).collect();
        let mut order: Vec<usize> = (0..dist.len()).collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
        let mut acc = 0.0;
        let cum = order
            .iter()
            .map(|&j| {
                acc += masses[j];
                acc
            })
            .collect();
        Self { center, dist, order, cum }
    }

    /// Mass strictly inside `B(center, r)`.
    fn mass_within(&self, r: f64) -> f64 {
        let count = self.order.partition_point(|&j| self.dist[j] < r);
        if count == 0 {
            0.0
        } else {
            self.cum[count - 1]
        }
    }
}

fn candidates(grid: &QuadratureGrid, masses: &[f64]) -> Vec<Vec<f64>> {
    let d = grid.spec().coord_len();
    let mut centroid = vec![0.0; d];
    for (j, m) in masses.iter().enumerate() {
        for (c, x) in centroid.iter_mut().zip(grid.node_coords(j)) {
            *c += m * x;
        }
    }
    let mut out: Vec<Vec<f64>> = (0..grid.node_count()).map(|j| grid.node_coords(j).to_vec()).collect();
    out.push(centroid);
    out
}

/// Best center and captured mass for each radius.
fn best_balls(grid: &Arc<QuadratureGrid>, masses: &[f64], radii: &[f64]) -> Vec<(f64, Vec<f64>)> {
    let profiles: Vec<Profile> = candidates(grid, masses)
        .into_par_iter()
        .map(|c| Profile::new(grid, masses, c))
        .collect();
    radii
        .iter()
        .map(|&r| {
            let mut best: (f64, usize) = (-1.0, 0);
            for (i, p) in profiles.iter().enumerate() {
                let m = p.mass_within(r);
                if m > best.0 {
                    best = (m, i);
                }
            }
            (best.0, profiles[best.1].center.clone())
        })
        .collect()
}

/// Mass left after removing `B(center, r)`.
fn outside(grid: &QuadratureGrid, masses: &[f64], center: &[f64], r: f64) -> Vec<f64> {
    let spec = grid.spec();
    masses
        .iter()
        .enumerate()
        .map(|(j, m)| if distance_of(spec, center, grid.node_coords(j)) < r { 0.0 } else { *m })
        .collect()
}

pub fn concentration_classify(seq: &MeasureSequence, epsilon: f64, radii: &[f64]) -> Result<ConcentrationReport> {
    if seq.len() < 3 {
        return invalid(format!("need at least 3 frames, got {}", seq.len()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}"));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return invalid("radii must be positive and finite");
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let n = seq.len();
    let late_start = n - (n / 3).max(1);

    let balls: Vec<Vec<(f64, Vec<f64>)>> =
        seq.frames.iter().map(|f| best_balls(f.grid(), f.values(), &radii)).collect();
    let concentration: Vec<Vec<f64>> = balls.iter().map(|b| b.iter().map(|x| x.0).collect()).collect();
    let late = late_start..n;

    let mut report = ConcentrationReport {
        verdict: Verdict::Inconclusive,
        epsilon,
        radii: radii.clone(),
        late_start,
        concentration: concentration.clone(),
        compactness: None,
        vanishing: None,
        dichotomy: None,
    };

    // compactness: one tested radius captures 1 - eps in every late frame
    if let Some(ri) = (0..radii.len()).find(|&ri| late.clone().all(|i| concentration[i][ri] >= 1.0 - epsilon)) {
        report.verdict = Verdict::Compactness;
        report.compactness = Some(CompactnessWitness {
            centers: late.clone().map(|i| balls[i][ri].1.clone()).collect(),
            radius: radii[ri],
        });
        return Ok(report);
    }

    // vanishing: every tested radius captures less than eps in late frames
    if late.clone().all(|i| concentration[i].iter().all(|q| *q < epsilon)) {
        report.verdict = Verdict::Vanishing;
        let last = radii.len() - 1;
        report.vanishing = Some(VanishingWitness { decay: concentration.iter().map(|q| q[last]).collect() });
        return Ok(report);
    }

    // dichotomy: two clusters of stable masses at growing distance
    for (ri, &r) in radii.iter().enumerate() {
        let mut masses = Vec::new();
        let mut separations = Vec::new();
        let mut ok = true;
        for i in late.clone() {
            let frame = &seq.frames[i];
            let grid = frame.grid();
            let (m1, c1) = (balls[i][ri].0, &balls[i][ri].1);
            let rest = outside(grid, frame.values(), c1, r);
            let (m2, c2) = best_balls(grid, &rest, &[r]).remove(0);
            let sep = distance_of(grid.spec(), c1, &c2);
            if m1.min(m2) < epsilon || m1 + m2 < 1.0 - epsilon || sep < 2.0 * r {
                ok = false;
                break;
            }
            masses.push((m1, m2));
            separations.push(sep);
        }
        if !ok {
            continue;
        }
        let heavy: Vec<f64> = masses.iter().map(|m| m.0).collect();
        let spread = heavy.iter().cloned().fold(f64::MIN, f64::max) - heavy.iter().cloned().fold(f64::MAX, f64::min);
        let growing = separations.windows(2).all(|w| w[1] >= w[0]) && separations.last() > separations.first();
        if spread <= epsilon && (growing || separations.len() == 1) {
            report.verdict = Verdict::Dichotomy;
            report.dichotomy = Some(DichotomyWitness {
                k: heavy.iter().sum::<f64>() / heavy.len() as f64,
                masses,
                radius: r,
                separations,
            });
            return Ok(report);
        }
    }
    Ok(report)
}
