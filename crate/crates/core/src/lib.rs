//! Periodic block-band random matrices: sampling, spectra, least singular
//! values, Stieltjes transforms and circular-law comparisons.

pub mod atoms;
pub mod bandmat;
pub mod error;
pub mod girko;
pub mod lsv;
pub mod oracles;
pub mod report;
pub mod seed;
pub mod spectra;
pub mod stieltjes;

pub use atoms::{AtomDistribution, AtomKind};
pub use bandmat::{BlockKind, PeriodicBlockBandMatrix, ShiftedMatrix, Symmetry};
pub use error::{Error, Result};
pub use report::ExperimentReport;
pub use spectra::EmpiricalMeasure;
pub use stieltjes::LimitTransform;
pub use num_complex::Complex64;
