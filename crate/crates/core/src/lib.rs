//! Generalized deep convolutional feature extraction on sampled periodic
//! signals, with a harness that checks the extractor's stability bounds.
//!
//! The pipeline is: build [`frames::FilterBank`]s, combine them with a
//! [`nonlinearities::Nonlinearity`] and a [`pooling::PoolingSpec`] per layer
//! into a [`network::ModuleSequence`], then call [`network::extract`].
//! The [`verify`] module measures energy, Lipschitz, translation and
//! deformation bounds against the extracted features.
//!
//! ```
//! use frameshift::network::preset_scattering;
//! use frameshift::verify::verify_energy;
//! use frameshift::{extract, random_bandlimited, BandlimitSpec, Grid};
//!
//! let grid = Grid::new(2, 64, 1.0)?;
//! let net = preset_scattering(grid, 3, 8, 2)?;
//! let f = random_bandlimited(grid, &BandlimitSpec { radius: 0.2, seed: 1 })?;
//! let phi = extract(&net, &f)?;
//! assert_eq!(phi.count(), 1 + 24 + 24 * 24);
//! assert!(verify_energy(&net, &f)?.pass);
//! # Ok::<(), frameshift::Error>(())
//! ```

pub mod error;
mod fft;
pub mod frames;
pub mod io;
pub mod network;
pub mod nonlinearities;
pub mod parallel;
pub mod pooling;
pub mod signal;
pub mod verify;

pub use error::{Error, Result};
pub use frames::{FilterBank, FrameBounds};
pub use network::{extract, AdmissibilityReport, FeatureVector, ModuleSequence, NetModule, Path};
pub use nonlinearities::Nonlinearity;
pub use pooling::PoolingSpec;
pub use signal::{random_bandlimited, BandlimitSpec, Domain, Grid, SampledSignal};
pub use verify::{BoundReport, DeformationField};
