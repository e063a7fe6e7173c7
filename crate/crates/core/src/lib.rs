//! Programming by example for web data integration: learn URL programs
//! from example URLs, and input-dependent extraction programs from example
//! node selections on page snapshots.

pub mod dom;
pub mod extract_dsl;
pub mod extract_synth;
pub mod harness;
pub mod url_dsl;
pub mod url_synth;

pub use dom::{Axis, DomNode, DomTree, NodeId};
pub use extract_dsl::{eval_program, ExtractProgram};
pub use extract_synth::{learn_extract, ExtractConfig, ExtractExample, UnseenPage};
pub use url_dsl::{AtomicExpr, CaseMode, InputRow, Position, Predicate, Token, TokenClass, UrlPattern, UrlProgram};
pub use url_synth::{learn_url, UnseenInput, UrlConfig, UrlExample};
