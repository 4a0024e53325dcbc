//! Fourier analysis on bounded Vilenkin groups at finite resolution.
//!
//! The crate provides mixed-radix arithmetic ([`radix`]), Vilenkin characters
//! and fast transforms ([`transform`]), Dirichlet kernels and partial sums
//! ([`kernels`]), martingale Hardy-space quantities ([`hardy`]), the sharpness
//! construction for weighted coefficient and partial-sum series
//! ([`counterexample`]) and the experiment harness behind the CLI
//! ([`harness`]).

pub mod counterexample;
pub mod error;
pub mod hardy;
pub mod harness;
pub mod kernels;
pub mod radix;
pub mod transform;

pub use error::{Result, VilenkinError};
pub use hardy::{AtomCertificate, MartingaleView};
pub use radix::{Coset, GroupPoint, RadixSystem, VIndex};
pub use transform::{GridFunction, Spectrum};

pub use num_complex::Complex64;
