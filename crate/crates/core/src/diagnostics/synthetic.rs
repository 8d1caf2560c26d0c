//! Synthetic measure sequences, one for each alternative of the
//! concentration-compactness trichotomy, on a planar log-polar grid.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::geometry::SpaceSpec;
use crate::grid::{build_grid, GridFunction, QuadratureGrid};

use super::concentration::{MeasureSequence, Verdict};

/// Frames per bundled sequence.
pub const FRAMES: usize = 9;
/// Tolerance and radii used with the bundled sequences.
pub const EPSILON: f64 = 0.1;
pub const RADII: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// The plane with 48 shells on `[1e-3, 4e3]` and 32 angular bins.
pub fn bundled_grid() -> Result<Arc<QuadratureGrid>> {
    build_grid(SpaceSpec::euclidean(2), 48, 32, 1e-3, 4e3)
}

fn gaussian_masses(grid: &Arc<QuadratureGrid>, centers: &[[f64; 2]], sigma: f64) -> Result<GridFunction> {
    let w = grid.node_weights();
    let mut masses: Vec<f64> = (0..grid.node_count())
        .map(|i| {
            let u = grid.node_coords(i);
            let density: f64 = centers
                .iter()
                .map(|c| {
                    let d2 = (u[0] - c[0]).powi(2) + (u[1] - c[1]).powi(2);
                    (-d2 / (2.0 * sigma * sigma)).exp()
                })
                .sum();
            w[i] * density
        })
        .collect();
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    GridFunction::new(grid.clone(), masses)
}

/// Coordinates of the node nearest to `x`.
fn nearest_node(grid: &QuadratureGrid, x: [f64; 2]) -> [f64; 2] {
    let mut best = (f64::INFINITY, [0.0; 2]);
    for i in 0..grid.node_count() {
        let u = grid.node_coords(i);
        let d = (u[0] - x[0]).powi(2) + (u[1] - x[1]).powi(2);
        if d < best.0 {
            best = (d, [u[0], u[1]]);
        }
    }
    best.1
}

/// - `Compactness`: a Gaussian of width 1/2 whose center circles at radius 0.3.
/// - `Vanishing`: centered Gaussians of width `2^i`.
/// - `Dichotomy`: two equal Gaussians of width 0.3 at antipodal nodes
///   `2^i` apart.
pub fn synthetic_sequence(kind: Verdict, grid: &Arc<QuadratureGrid>, frames: usize) -> Result<MeasureSequence> {
    let mut out = Vec::with_capacity(frames);
    for i in 0..frames {
        let frame = match kind {
            Verdict::Compactness => {
                let a = i as f64;
                gaussian_masses(grid, &[[0.3 * a.cos(), 0.3 * a.sin()]], 0.5)?
            }
            Verdict::Vanishing => gaussian_masses(grid, &[[0.0, 0.0]], 2f64.powi(i as i32))?,
            Verdict::Inconclusive => return invalid("no synthetic sequence for an inconclusive verdict"),
            Verdict::Dichotomy => {
                let half = 2f64.powi(i as i32 + 1) / 2.0;
                let c = nearest_node(grid, [half, 0.0]);
                gaussian_masses(grid, &[c, [-c[0], -c[1]]], 0.3)?
            }
        };
        out.push(frame);
    }
    MeasureSequence::new(out)
}

/// The three bundled sequences in the order compactness, vanishing, dichotomy.
pub fn bundled_sequences() -> Result<Vec<(Verdict, MeasureSequence)>> {
    let grid = bundled_grid()?;
    [Verdict::Compactness, Verdict::Vanishing, Verdict::Dichotomy]
        .into_iter()
        .map(|k| Ok((k, synthetic_sequence(k, &grid, FRAMES)?)))
        .collect()
}
