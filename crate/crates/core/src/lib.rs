//! Knowledge-based model construction: build an event-specific Bayesian
//! network from a first-order statistical knowledge base.
//!
//! The pipeline is
//! [`parser::parse_kb`] → [`kb::KnowledgeBase::from_source`] →
//! [`construct::build_network`] → [`bn::BayesNet::eliminate`].

pub mod bn;
pub mod cli;
pub mod construct;
pub mod eval;
pub mod kb;
pub mod logic;
pub mod parser;

pub use bn::BayesNet;
pub use construct::{build_network, ConstructionReport, ConstructionRequest};
pub use kb::KnowledgeBase;
pub use logic::{Formula, Rational, Sentence, Signature};
pub use parser::{parse_kb, parse_request, pretty_print, SourceKB};
