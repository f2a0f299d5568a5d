//! Coalescents with simultaneous multiple collisions, the measure-valued
//! processes they are dual to, and exact symbolic tools for their stationary
//! moments and reversibility.
//!
//! The crate has three layers:
//!
//! * exact arithmetic: dense rational polynomials ([`poly`]), canonical
//!   rational functions ([`ratfun`]) and a scalar abstraction ([`scalar`])
//!   so every moment formula runs both in `f64` and symbolically;
//! * the coalescent side: resampling measures and collision rates
//!   ([`measure`]), the named rate tables and their consistency relations
//!   ([`rates`]), partitions ([`partition`]) and exact simulation
//!   ([`coalescent`]);
//! * the forward side and the bridges: mutation semigroups ([`mutation`]),
//!   the function-valued dual ([`dual`]), forward simulation on a finite
//!   type space ([`fv`]), stationary moments and reversibility verdicts
//!   ([`stationary`]), and a grid solver for the spatial version ([`spde`]).

pub mod coalescent;
pub mod dual;
pub mod error;
pub mod fv;
pub mod measure;
pub mod mutation;
pub mod partition;
pub mod poly;
pub mod quad;
pub mod ratfun;
pub mod rates;
pub mod scalar;
pub mod spde;
pub mod stationary;
pub mod stats;

pub use error::{Error, Result};
pub use measure::{CollisionSignature, LambdaFamily, Xi0, XiMeasure};
pub use partition::Partition;
pub use ratfun::RatFun;
pub use scalar::Scalar;
