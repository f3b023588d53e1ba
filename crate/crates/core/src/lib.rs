//! Extreme points of the Dumont–Thomas type fractals attached to a substitution
//! with a non-real expanding eigenvalue, the circle skew product they induce,
//! minimal sequences, wandering-interval series, Denjoy affine extensions and
//! Rauzy–Veech matrix families.
//!
//! Numerical kernels that make sense in single precision are generic over
//! [`Scalar`]; the concrete double-precision aliases below are what the
//! pipeline uses.

pub mod circle;
pub mod error;
pub mod examples;
pub mod fractal;
pub mod hmap;
pub mod iem;
pub mod minseq;
pub mod pipeline;
pub mod rauzy;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod substitution;
pub mod svg;

pub use circle::Direction;
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use substitution::{Label, Letter, PointedWord, PrefixSuffixStream, Substitution, Word};

pub type Complex64 = num_complex::Complex<f64>;
pub type EigenData64 = spectral::EigenData<f64>;
pub type EigenData32 = spectral::EigenData<f32>;
pub type ValueFunction64<'a> = fractal::ValueFunction<'a, f64>;
pub type ValueFunction32<'a> = fractal::ValueFunction<'a, f32>;
pub type IemSpec64 = iem::IemSpec<f64>;
pub type IemSpec32 = iem::IemSpec<f32>;

