//! Syntax trees for specification suites and test cases. Literal values are
//! kept as source text; they are resolved against declared types when the
//! suite is translated.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecSuite {
    pub variables: Vec<VarDecl>,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub id: String,
    pub ty: TypeDesc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimType {
    Boolean,
    Integer,
    Decimal,
    String,
}

impl PrimType {
    pub fn keyword(self) -> &'static str {
        match self {
            PrimType::Boolean => "boolean",
            PrimType::Integer => "integer",
            PrimType::Decimal => "decimal",
            PrimType::String => "string",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RangeAst {
    Set(Vec<String>),
    Interval { lo: String, lo_closed: bool, hi: String, hi_closed: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    AtMost(usize),
    Exactly(usize),
    Between(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDesc {
    Primitive {
        ty: PrimType,
        range: RangeAst,
    },
    Array {
        cardinality: Cardinality,
        element: Box<TypeDesc>,
    },
    /// `header` is the attribute list after "with attributes"; `attrs` the
    /// per-attribute descriptions that follow "such that:".
    Struct {
        header: Vec<String>,
        attrs: Vec<(String, TypeDesc)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub title: String,
    pub given: Option<Given>,
    pub when: Vec<Step>,
    pub then: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Given {
    pub initial: bool,
    pub description: Option<String>,
    pub referenced: Vec<String>,
    pub guard: Option<GuardBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    pub action: String,
    pub params: Vec<String>,
    pub guard: Option<GuardBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conj {
    And,
    Or,
}

impl Conj {
    pub fn keyword(self) -> &'static str {
        match self {
            Conj::And => "AND",
            Conj::Or => "OR",
        }
    }
}

/// Clauses joined by connectives; `conjs.len() + 1 == clauses.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardBlock {
    pub clauses: Vec<GuardClause>,
    pub conjs: Vec<Conj>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardClause {
    pub var: VarRef,
    pub guard: Guard,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarRef {
    pub id: String,
    pub stored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Eq,
    Ne,
    Gt,
    Lt,
    Le,
    Ge,
}

impl Op {
    pub fn phrase(self) -> &'static str {
        match self {
            Op::Eq => "equal to",
            Op::Ne => "not equal to",
            Op::Gt => "greater than",
            Op::Lt => "lower than",
            Op::Le => "lower or equal than",
            Op::Ge => "greater or equal than",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Literal(String),
    Range(RangeAst),
    Var(VarRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    AtLeast(u32),
    AtMost(u32),
    Exactly(u32),
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    Compare { op: Op, rhs: Rhs },
    Between { lo: Rhs, hi: Rhs },
    Array { quantifier: Quantifier, element: Box<Guard> },
    Struct { attrs: Vec<(String, Guard)>, conjs: Vec<Conj> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub given: Vec<ValueDef>,
    pub steps: Vec<TestStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestStep {
    Input { action: String, params: Vec<String>, values: Vec<ValueDef> },
    Output(Step),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueDef {
    pub id: String,
    pub value: ValueAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueAst {
    Scalar(String),
    /// 1-based indexed entries of an array.
    Indexed(Vec<(usize, ValueAst)>),
    Keyed(Vec<(String, ValueAst)>),
}
