//! Invariance of the quotient under translations along the center of the
//! Heisenberg group. With the weight `|z|` the functional commutes with
//! left translation by `(0, s)`, which maps `(z, t)` to `(z, t + s)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{SpaceKind, WeightKind};
use crate::grid::{interpolate_values, GridFunction};
use crate::steinweiss::SteinWeissOperator;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslationReport {
    pub shift: f64,
    pub quotient: f64,
    pub translated_quotient: f64,
    pub relative_change: f64,
}

/// `f(z, t - s)` resampled on the grid.
pub fn translate_center(f: &GridFunction, s: f64) -> GridFunction {
    let grid = f.grid();
    let d = grid.spec().coord_len();
    let mut buf = vec![0.0; d];
    let values = (0..grid.node_count())
        .map(|i| {
            buf.copy_from_slice(grid.node_coords(i));
            buf[d - 1] -= s;
            interpolate_values(grid, f.values(), &buf)
        })
        .collect();
    GridFunction::new_unchecked(grid.clone(), values)
}

/// Compares `J(f, g) / (||f|| ||g||)` before and after translating both
/// functions by `s` along the center. `g` is in the functional form.
pub fn translation_check(op: &SteinWeissOperator, f: &GridFunction, g: &GridFunction, s: f64) -> Result<TranslationReport> {
    let spec = op.params().spec;
    if !matches!((spec.kind, spec.weight_kind), (SpaceKind::Heisenberg { .. }, WeightKind::Horizontal)) {
        return invalid("center translations commute with the functional only for the |z| weight on H^n");
    }
    if !s.is_finite() {
        return invalid("translation must be finite");
    }
    let quotient = op.ratio(f, g)?;
    let translated_quotient = op.ratio(&translate_center(f, s), &translate_center(g, s))?;
    Ok(TranslationReport {
        shift: s,
        quotient,
        translated_quotient,
        relative_change: (translated_quotient - quotient).abs() / quotient,
    })
}
