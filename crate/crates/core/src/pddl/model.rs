use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Root of every type hierarchy.
pub const ROOT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
}

/// A `?var - type` or `name - type` entry of a typed list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypedName {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl PredicateDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Argument of a schema-level atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Variable name including the leading `?`.
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiteralTemplate {
    pub atom: AtomTemplate,
    pub positive: bool,
}

impl fmt::Display for LiteralTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precondition: Vec<LiteralTemplate>,
    pub add_effects: Vec<AtomTemplate>,
    pub del_effects: Vec<AtomTemplate>,
}

impl ActionSchema {
    /// Bind parameters positionally to `args`. The caller checks the arity.
    pub fn binding<'a>(&'a self, args: &'a [String]) -> BTreeMap<&'a str, &'a str> {
        self.params
            .iter()
            .zip(args)
            .map(|(p, a)| (p.name.as_str(), a.as_str()))
            .collect()
    }

    /// Parameter signature such as `(pick ?b - ball ?r - room ?g - gripper)`.
    pub fn signature(&self) -> String {
        let mut s = format!("({}", self.name);
        for p in &self.params {
            s.push_str(&format!(" {} - {}", p.name, p.ty));
        }
        s.push(')');
        s
    }
}

/// Ground a schema-level atom under a binding. Unbound variables are kept verbatim.
pub fn instantiate(atom: &AtomTemplate, binding: &BTreeMap<&str, &str>) -> GroundAtom {
    GroundAtom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding.get(v.as_str()).map_or_else(|| v.clone(), |o| o.to_string()),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl DomainModel {
    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn parent_of(&self, ty: &str) -> Option<&str> {
        self.types
            .iter()
            .find(|t| t.name == ty)
            .map(|t| t.parent.as_str())
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == ROOT_TYPE || self.types.iter().any(|t| t.name == ty)
    }

    /// True if `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == ROOT_TYPE {
            return true;
        }
        let mut current = ty;
        // Bounded by the number of types; the parser rejects cycles.
        for _ in 0..=self.types.len() {
            if current == ancestor {
                return true;
            }
            match self.parent_of(current) {
                Some(p) => current = p,
                None => return false,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(predicate: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundLiteral {
    pub atom: GroundAtom,
    pub positive: bool,
}

impl GroundLiteral {
    pub fn pos(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: true }
    }

    pub fn neg(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: false }
    }
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemModel {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    /// Initial atoms in declaration order, without duplicates.
    pub init: Vec<GroundAtom>,
    pub goal: Vec<GroundLiteral>,
}

/// An instantiated action. Names are kept as written so that error
/// messages can quote them; lookups lowercase them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
}

impl GroundAction {
    pub fn new<S: Into<String>>(schema: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        GroundAction {
            schema: schema.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn normalized(&self) -> GroundAction {
        GroundAction {
            schema: self.schema.to_lowercase(),
            args: self.args.iter().map(|a| a.to_lowercase()).collect(),
        }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.schema)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
}

impl Plan {
    pub fn new(steps: Vec<GroundAction>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One action per line, no trailing newline.
    pub fn to_text(&self) -> String {
        self.steps
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("\n")
    }
}
