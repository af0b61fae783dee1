use std::collections::{BTreeMap, BTreeSet};

use super::model::*;
use super::PddlError;

/// Closed-world state: absent atoms are false.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    atoms: BTreeSet<GroundAtom>,
}

impl State {
    pub fn new(atoms: impl IntoIterator<Item = GroundAtom>) -> Self {
        State {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn holds(&self, literal: &GroundLiteral) -> bool {
        self.contains(&literal.atom) == literal.positive
    }
}

impl FromIterator<GroundAtom> for State {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Self {
        State::new(iter)
    }
}

fn schema_for<'a>(domain: &'a DomainModel, action: &GroundAction) -> Result<&'a ActionSchema, PddlError> {
    let schema = domain
        .action(&action.schema.to_lowercase())
        .ok_or_else(|| PddlError::UnknownSchema(action.schema.clone()))?;
    if schema.params.len() != action.args.len() {
        return Err(PddlError::ArityMismatch {
            schema: schema.name.clone(),
            expected: schema.params.len(),
            given: action.args.len(),
        });
    }
    Ok(schema)
}

/// Ground precondition literals of `action`.
pub fn instantiated_precondition(domain: &DomainModel, action: &GroundAction) -> Result<Vec<GroundLiteral>, PddlError> {
    let action = action.normalized();
    let schema = schema_for(domain, &action)?;
    let binding = schema.binding(&action.args);
    Ok(schema
        .precondition
        .iter()
        .map(|l| GroundLiteral {
            atom: instantiate(&l.atom, &binding),
            positive: l.positive,
        })
        .collect())
}

/// True iff every positive precondition literal holds and every negated one is absent.
pub fn is_applicable(state: &State, action: &GroundAction, domain: &DomainModel) -> Result<bool, PddlError> {
    Ok(instantiated_precondition(domain, action)?
        .iter()
        .all(|l| state.holds(l)))
}

/// Successor state. Deletes are applied before adds, so an atom that the
/// instantiation both deletes and adds stays true.
pub fn apply(state: &State, action: &GroundAction, domain: &DomainModel) -> Result<State, PddlError> {
    if !is_applicable(state, action, domain)? {
        return Err(PddlError::InapplicableAction(action.to_string()));
    }
    Ok(apply_unchecked(state, action, domain))
}

/// Apply effects without checking the precondition. Panics on an unknown schema.
pub(crate) fn apply_unchecked(state: &State, action: &GroundAction, domain: &DomainModel) -> State {
    let action = action.normalized();
    let schema = domain.action(&action.schema).expect("schema checked by caller");
    let binding = schema.binding(&action.args);
    let mut atoms = state.atoms.clone();
    for d in &schema.del_effects {
        atoms.remove(&instantiate(d, &binding));
    }
    for a in &schema.add_effects {
        atoms.insert(instantiate(a, &binding));
    }
    State { atoms }
}

/// True iff all positive goal atoms are present and all negative ones absent.
pub fn goal_satisfied(state: &State, goal: &[GroundLiteral]) -> bool {
    goal.iter().all(|l| state.holds(l))
}

/// A domain together with one of its problems.
#[derive(Debug, Clone)]
pub struct Task {
    pub domain: DomainModel,
    pub problem: ProblemModel,
    object_types: BTreeMap<String, String>,
}

impl Task {
    pub fn new(domain: DomainModel, problem: ProblemModel) -> Self {
        let object_types = domain
            .constants
            .iter()
            .chain(&problem.objects)
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect();
        Task {
            domain,
            problem,
            object_types,
        }
    }

    pub fn from_text(domain_text: &str, problem_text: &str) -> Result<Self, PddlError> {
        let domain = super::parse_domain(domain_text)?;
        let problem = super::parse_problem(problem_text, &domain)?;
        Ok(Task::new(domain, problem))
    }

    pub fn initial_state(&self) -> State {
        State::new(self.problem.init.iter().cloned())
    }

    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.object_types.get(name).map(String::as_str)
    }

    /// Objects (constants first, then problem objects) whose type is `ty` or a subtype of it.
    pub fn objects_of_type(&self, ty: &str) -> Vec<&str> {
        self.domain
            .constants
            .iter()
            .chain(&self.problem.objects)
            .filter(|o| self.domain.is_subtype(&o.ty, ty))
            .map(|o| o.name.as_str())
            .collect()
    }

    /// Schema parameters whose bound object is not of a compatible type.
    pub fn type_violations(&self, action: &GroundAction) -> Result<Vec<(usize, String)>, PddlError> {
        let action = action.normalized();
        let schema = schema_for(&self.domain, &action)?;
        let mut out = Vec::new();
        for (i, (param, arg)) in schema.params.iter().zip(&action.args).enumerate() {
            let ok = self
                .object_type(arg)
                .is_some_and(|t| self.domain.is_subtype(t, &param.ty));
            if !ok {
                out.push((i, param.ty.clone()));
            }
        }
        Ok(out)
    }

    /// Like [`is_applicable`], additionally requiring every argument to be a
    /// declared object of a compatible type.
    pub fn is_applicable(&self, state: &State, action: &GroundAction) -> Result<bool, PddlError> {
        if !self.type_violations(action)?.is_empty() {
            return Ok(false);
        }
        is_applicable(state, action, &self.domain)
    }

    pub fn apply(&self, state: &State, action: &GroundAction) -> Result<State, PddlError> {
        if !self.is_applicable(state, action)? {
            return Err(PddlError::InapplicableAction(action.to_string()));
        }
        Ok(apply_unchecked(state, action, &self.domain))
    }

    pub fn goal_satisfied(&self, state: &State) -> bool {
        goal_satisfied(state, &self.problem.goal)
    }
}
