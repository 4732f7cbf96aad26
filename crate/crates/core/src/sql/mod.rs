//! Spider SQL subset: parsing, name binding, exact set match and hardness.

mod ast;
mod bind;
mod em;
mod hardness;
mod lexer;
mod parser;

pub use ast::*;
pub use bind::{bind_and_usage, BindError, NamedUsage, UsageSet};
pub use em::{
    canonicalize, exact_set_match, exact_set_match_with, first_difference, CanonicalColumn,
    CanonicalCondition, CanonicalExpr, CanonicalOperand, CanonicalPredicate, CanonicalQuery,
    CanonicalTable, Clause, MatchOptions,
};
pub use hardness::{
    classify_hardness, component_counts, hardness_from_counts, ComponentCounts, Hardness,
    HARDNESS_RULES_VERSION,
};
pub use parser::parse_sql;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at byte {offset}: {message} (expected {expected})")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    pub expected: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>, expected: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
            expected: expected.into(),
        }
    }
}
