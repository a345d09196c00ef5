//! Selective extraction of time-ordered bath correlations with synthesized
//! sensor channels: Liouville-space algebra, the operation catalog, channel
//! synthesis, the ¹³C–¹H system model, protocol simulation, reference
//! correlations and the error budget.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod budget;
pub mod catalog;
pub mod engine;
pub mod error;
pub mod liouville;
pub mod oracle;
pub mod ordering;
pub mod scalar;
pub mod synthesis;
pub mod system;

pub use error::{Error, Result};
pub use ordering::{Eta, OrderingSequence};
pub use scalar::Real;

pub type OperatorMatrix = liouville::OperatorMatrix<f64>;
pub type SuperOperator = liouville::SuperOperator<f64>;
pub type OperatorBasis = liouville::OperatorBasis<f64>;
pub type CatalogOperation = catalog::CatalogOperation<f64>;
pub type SynthesizedChannel = synthesis::SynthesizedChannel<f64>;
pub type Decomposer = synthesis::Decomposer<f64>;
pub type WeightSolution = synthesis::WeightSolution<f64>;
pub type GeneralWeightProblem = synthesis::GeneralWeightProblem<f64>;
pub type ExperimentParams = system::ExperimentParams<f64>;
pub type SystemModel = system::SystemModel<f64>;
pub type ProtocolSpec = engine::ProtocolSpec<f64>;
pub type ProtocolSlot = engine::ProtocolSlot<f64>;

pub use budget::ErrorParams;
pub use engine::{CouplingMode, SweepResult};
