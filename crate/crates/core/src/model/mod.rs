//! Neural network components for hyperbolic embedding.
//!
//! The module bundles a scalar reverse-mode autodiff tape ([`tape`]), a named
//! parameter store with checkpoint io ([`params`]), Lorentz-manifold layers and
//! the attention encoder ([`layers`]), the graph learner networks ([`learner`]),
//! and Adam optimizers for both Euclidean and manifold parameters ([`optim`]).

pub mod layers;
pub mod learner;
pub mod optim;
pub mod params;
pub mod tape;

pub use layers::{Activation, Encoder, LorentzLinear, Projector};
pub use learner::{GraphLearner, LearnerVariant};
pub use optim::{Adam, AdamConfig, ParamMode};
pub use params::{BoundParams, ParamError, ParamId, ParamStore};
pub use tape::{Grads, Tape, Var};
