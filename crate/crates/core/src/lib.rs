//! Projector distributions separating the spectral decomposition of the
//! regular representation on the space of real forms inside a complex
//! linear group.
//!
//! The crate implements, from the ground up:
//!
//! * signed perfect/near-perfect matchings of index sets and signed arc
//!   diagrams connecting circle data to box data ([`matchings`],
//!   [`diagrams`]);
//! * a small exact calculus of distributions on products of circles and
//!   lines built from delta constraints, half-angle cotangent factors and
//!   exponentials ([`distributions`]);
//! * spherical kernel evaluators on the Cartan charts of the double coset
//!   space — the circle-line kernel `xi`, the circle-circle kernel `D`,
//!   their "primed" partners and the assembled chart kernels `kappa_k`
//!   ([`kernels`]);
//! * the projector distribution itself: the antisymmetric cotangent-delta
//!   distribution `Lambda_p`, its Fourier-side partial sums, and the full
//!   chart-weighted projector kernel ([`projectors`]);
//! * numerical verification suites that fit every normalization constant
//!   from scratch against independent oracles and report machine-readable
//!   results ([`verification`]);
//! * a deterministic command line front end ([`cli`]).

pub mod cli;
pub mod diagrams;
pub mod distributions;
pub mod kernels;
pub mod matchings;
pub mod projectors;
pub mod util;
pub mod verification;

pub use num_complex::Complex64;
