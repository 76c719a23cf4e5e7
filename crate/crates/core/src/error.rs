//! Error type shared by the whole analysis pipeline.

use thiserror::Error;

/// Everything that can go wrong between reading a Lagrangian file and
/// emitting a report or trajectory.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("undeclared identifier `{name}` at {line}:{col}")]
    UndeclaredIdentifier { name: String, line: usize, col: usize },

    #[error("parameter `{name}` is used but never bound")]
    UnboundParameter { name: String },

    #[error("name collision: `{name}` is declared more than once")]
    NameCollision { name: String },

    #[error("unsupported velocity structure: {0}")]
    UnsupportedVelocityStructure(String),

    #[error("division by a non-constant expression")]
    DivisionByNonConstant,

    #[error("constraint set is linearly dependent: {0}")]
    DependentConstraintSet(String),

    #[error("constraint surface is inconsistent: {0} = 0 has no solution")]
    InconsistentConstraints(String),

    #[error("stabilization produced a non-affine constraint: {0}")]
    NonAffineSecondaryConstraint(String),

    #[error("stabilization did not terminate within {bound} iterations")]
    NonTerminating { bound: usize },

    #[error("constraint bracket matrix has a non-constant entry: {{{a}, {b}}} = {value}")]
    NonConstantBracketMatrix { a: String, b: String, value: String },

    #[error("no admissible second-class complement: {0}")]
    InvalidSccChoice(String),

    #[error("inadmissible gauge: {0}")]
    InadmissibleGauge(String),

    #[error("expected one gauge condition per first-class constraint (need {expected}, got {got})")]
    GaugeCountMismatch { expected: usize, got: usize },

    #[error("cannot eliminate with the requested keep set; a maximal keepable set is {{{keepable}}}")]
    UnsolvableEliminationChoice { keepable: String },

    #[error("substitution produced a trigonometric factor with constant argument {0}")]
    ConstantTrigArgument(String),

    #[error("quantum commutator would be operator-valued: {{{a}, {b}}} = {value}")]
    OperatorOrderingUnsupported { a: String, b: String, value: String },

    #[error("variable `{0}` has no value in the assignment")]
    UnboundVariable(String),

    #[error("no initial value for evolving variable `{0}`")]
    MissingInitialValue(String),

    #[error("initial data does not determine the evolving variables: {0}")]
    AmbiguousInitialState(String),

    #[error("state became non-finite at step {step} (t = {time})")]
    NonFiniteState { step: usize, time: f64 },

    #[error("linearization point must send every trigonometric argument to zero; {0} does not")]
    UnsupportedLinearizationPoint(String),

    #[error("invalid flag value: {0}")]
    InvalidFlag(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Stable machine-readable kind, used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            Syntax { .. } => "SyntaxError",
            UndeclaredIdentifier { .. } => "UndeclaredIdentifier",
            UnboundParameter { .. } => "UnboundParameter",
            NameCollision { .. } => "NameCollision",
            UnsupportedVelocityStructure(_) => "UnsupportedVelocityStructure",
            DivisionByNonConstant => "DivisionByNonConstant",
            DependentConstraintSet(_) => "DependentConstraintSet",
            InconsistentConstraints(_) => "InconsistentConstraints",
            NonAffineSecondaryConstraint(_) => "NonAffineSecondaryConstraint",
            NonTerminating { .. } => "NonTerminating",
            NonConstantBracketMatrix { .. } => "NonConstantBracketMatrix",
            InvalidSccChoice(_) => "InvalidSccChoice",
            InadmissibleGauge(_) => "InadmissibleGauge",
            GaugeCountMismatch { .. } => "GaugeCountMismatch",
            UnsolvableEliminationChoice { .. } => "UnsolvableEliminationChoice",
            ConstantTrigArgument(_) => "ConstantTrigArgument",
            OperatorOrderingUnsupported { .. } => "OperatorOrderingUnsupported",
            UnboundVariable(_) => "UnboundVariable",
            MissingInitialValue(_) => "MissingInitialValue",
            AmbiguousInitialState(_) => "AmbiguousInitialState",
            NonFiniteState { .. } => "NonFiniteState",
            UnsupportedLinearizationPoint(_) => "UnsupportedLinearizationPoint",
            InvalidFlag(_) => "InvalidFlag",
            Internal(_) => "InternalError",
        }
    }

    /// True for defects in the engine itself rather than in the input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
