//! First-order logical decision tree induction in the learning-from-interpretations
//! setting.

pub mod bench;
pub mod bias;
pub mod discretize;
pub mod engine;
pub mod gen;
pub mod learn;
pub mod parser;
pub mod rdb;
pub mod score;
pub mod settings;
pub mod store;
pub mod symbol;
pub mod term;
pub mod tree;

pub use parser::{parse_program, parse_term, ParseError, Pos};
pub use settings::{parse_settings, Settings};
pub use store::{load_dataset, DatasetHandle, Interpretation, LoadOptions, Selector};
pub use symbol::Symbol;
pub use term::{Builtin, Clause, Literal, Term};
