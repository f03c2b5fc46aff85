use thiserror::Error;

use crate::poset::ElementId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {0} does not belong to this fragment")]
    ForeignElement(ElementId),

    #[error("{0} requires a nonempty set")]
    EmptySet(&'static str),

    #[error("{what}: size {got} exceeds the limit {limit}")]
    SizeBound {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("({a:?}|{b:?}) is not a node of the structure poset")]
    NotMember { a: Vec<usize>, b: Vec<usize> },

    #[error("curve {x} is not below point {m}")]
    NotBelow { x: usize, m: usize },

    #[error("({a:?}|{b:?}) has height zero in its fiber")]
    HeightZero { a: Vec<usize>, b: Vec<usize> },

    #[error("invalid fragment: {}", .0.join("; "))]
    Invalid(Vec<String>),

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("generator: {0}")]
    Generator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
