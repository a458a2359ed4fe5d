pub mod blend;
pub mod corpus;
pub mod labels;
pub mod langsim;
pub mod metrics;
pub mod miner;
pub mod packs;
pub mod rules;
pub mod sampling;
pub mod scalar;
pub mod search;

pub use scalar::Scalar;

pub type EvalReport = metrics::EvalReport<f64>;
pub type LabelScores = metrics::LabelScores<f64>;
pub type LabelShare = metrics::LabelShare<f64>;
pub type AuditScore = metrics::AuditScore<f64>;
pub type LangVector = langsim::LangVector<f64>;
pub type RankedPair = langsim::RankedPair<f64>;
