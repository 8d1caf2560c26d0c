//! Executable counterparts of the analysis: concentration-compactness
//! classification, symmetry of solutions, the two-condition boundedness
//! test on product spaces, center translations on the Heisenberg group,
//! and a randomized geometry suite.

pub mod concentration;
pub mod sawyer_wheeden;
pub mod selftest;
pub mod symmetry;
pub mod synthetic;
pub mod translation;

pub use concentration::{concentration_classify, ConcentrationReport, MeasureSequence, Verdict};
pub use sawyer_wheeden::{sawyer_wheeden_check, SwOptions, SwReport};
pub use selftest::{geometry_suite, SuiteReport};
pub use symmetry::{symmetry_check, SymmetryOptions, SymmetryReport};
pub use translation::{translation_check, TranslationReport};
