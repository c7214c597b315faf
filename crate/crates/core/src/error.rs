use std::fmt;

/// Broad classes of failure, used by drivers to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed source text.
    Syntax,
    /// A well-formed program rejected by a static check or by the chosen mode.
    Rejected,
    /// Evaluation stopped at a configured resource limit.
    ResourceBound,
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{at}: syntax error: expected {expected}, found {found}")]
    Syntax {
        at: Pos,
        expected: String,
        found: String,
    },

    #[error("{at}: path operator `+` applied to {pred}/{arity}; only binary predicates can be closed")]
    PathArity { at: Pos, pred: String, arity: usize },

    #[error("predicate `{0}` uses the reserved `__` infix")]
    ReservedName(String),

    #[error("{at}: unsafe rule `{rule}`: variable {var} does not occur in a positive body atom")]
    Unsafe { at: Pos, rule: String, var: String },

    #[error("unknown predicate {0}")]
    UnknownPredicate(String),

    #[error("program is not stratifiable: negation or aggregation inside the cycle {{{0}}}")]
    NotStratifiable(String),

    #[error("unsupported in this mode: {0}")]
    Unsupported(String),

    #[error("aggregate depends on a cycle through negation or aggregation {{{0}}}")]
    AggregateInCycle(String),

    #[error("type error in rule `{rule}`: {message}")]
    Type { rule: String, message: String },

    #[error("term depth {depth} exceeds the maximum of {max}{}", rule_context(.rule))]
    TermDepth {
        depth: u32,
        max: u32,
        rule: Option<String>,
    },

    #[error("stratum {stratum} did not reach a fixed point within {max} iterations")]
    IterationLimit { stratum: usize, max: usize },

    #[error("predicate {pred} has arity {arity}; at most 64 argument positions are supported")]
    ArityLimit { pred: String, arity: usize },
}

fn rule_context(rule: &Option<String>) -> String {
    match rule {
        Some(r) => format!(" while deriving from `{r}`"),
        None => String::new(),
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax { .. } => ErrorKind::Syntax,
            Error::TermDepth { .. } | Error::IterationLimit { .. } => ErrorKind::ResourceBound,
            _ => ErrorKind::Rejected,
        }
    }

    /// Attaches the offending rule to a depth error raised while building a term.
    pub(crate) fn in_rule(self, rule: &dyn fmt::Display) -> Error {
        match self {
            Error::TermDepth {
                depth,
                max,
                rule: None,
            } => Error::TermDepth {
                depth,
                max,
                rule: Some(rule.to_string()),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
