//! Mini-language frontend (parse + compile) and the textual model format.

pub mod ast;
pub mod compile;
pub mod format;
pub mod lex;
pub mod lower;
pub mod parse;

pub use compile::{compile_source, compile_to_graph, CompileOpts, Compiled};
pub use parse::parse_program;
