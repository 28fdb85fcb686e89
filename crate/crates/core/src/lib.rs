//! Reconstruction of planar electron densities from Compton-scatter data.
//!
//! Dark-field measurements at a fixed scattered energy are modeled as
//! integrals of the density over discs whose boundary passes through the
//! source. A weighted plane inversion turns the p-derivative of those disc
//! integrals into ordinary line integrals, so a standard filtered
//! backprojection recovers the inverted density and, after mapping back,
//! the density itself.
//!
//! Modules follow the processing chain: [`geometry`] and [`phantom`] set up
//! the scanner and test objects, [`transform`] evaluates the disc and Radon
//! transforms, [`signal`] injects and suppresses noise, [`recon`] inverts,
//! [`physics`] relates raw intensities to disc integrals and [`materials`]
//! turns attenuation over density into an effective atomic number.

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod image;
pub mod materials;
mod par;
pub mod pchip;
pub mod phantom;
pub mod physics;
pub mod recon;
pub mod rtt80;
pub mod signal;
pub mod sinogram;
pub mod transform;

pub use error::{Error, Result};
pub use geometry::{Disc, Point2, ScannerGeometry};
pub use image::ImageGrid;
pub use phantom::PhantomSpec;
pub use sinogram::{DiscSinogram, Quantity};

pub use par::is_parallel;
