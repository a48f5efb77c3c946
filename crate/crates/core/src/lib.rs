//! All-to-all broadcast coded slotted ALOHA over packet erasure channels.

pub mod csma;
pub mod de;
pub mod decoder;
pub mod dist;
pub mod efapprox;
pub mod error;
pub mod graph;
pub mod math;
pub mod montecarlo;
pub mod optimizer;
pub mod stopsets;

pub use csma::{csma_simulate, CsmaConfig, CsmaResult};
pub use de::{threshold, Threshold};
pub use decoder::{peel, DecodeResult};
pub use dist::DegreeDistribution;
pub use error::{Error, Result};
pub use graph::FrameGraph;
pub use montecarlo::{Estimate, FrameBudget, Mode, PlrReport, SimConfig};
pub use optimizer::{optimize, tradeoff_sweep, OptConfig, TradeoffPoint};
pub use stopsets::{Catalog, StoppingSetRecord};
