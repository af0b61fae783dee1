//! Brute-force reference simulator used as an independent oracle.
//!
//! Works directly on the parsed model fields with its own string-tuple state
//! representation; it never calls the library's semantics, validator or
//! planner.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use genplan_core::pddl::{ActionSchema, DomainModel, ProblemModel, Term};

pub type Fact = (String, Vec<String>);
pub type Facts = BTreeSet<Fact>;

pub struct Oracle<'a> {
    pub domain: &'a DomainModel,
    pub problem: &'a ProblemModel,
    types: HashMap<String, String>,
    statics: HashSet<String>,
}

/// (outcome kind, failing 1-based step) as the validator is expected to report it.
pub type Verdict = (&'static str, Option<usize>);

impl<'a> Oracle<'a> {
    pub fn new(domain: &'a DomainModel, problem: &'a ProblemModel) -> Self {
        let mut types = HashMap::new();
        for o in domain.constants.iter().chain(problem.objects.iter()) {
            types.insert(o.name.clone(), o.ty.clone());
        }
        let mut changed = HashSet::new();
        for a in &domain.actions {
            for e in a.add_effects.iter().chain(a.del_effects.iter()) {
                changed.insert(e.predicate.clone());
            }
        }
        let statics = domain
            .predicates
            .iter()
            .map(|p| p.name.clone())
            .filter(|p| !changed.contains(p))
            .collect();
        Oracle {
            domain,
            problem,
            types,
            statics,
        }
    }

    pub fn init(&self) -> Facts {
        self.problem
            .init
            .iter()
            .map(|a| (a.predicate.clone(), a.args.clone()))
            .collect()
    }

    fn schema(&self, name: &str) -> Option<&'a ActionSchema> {
        let mut found = None;
        for a in &self.domain.actions {
            if a.name == name {
                found = Some(a);
            }
        }
        found
    }

    fn descends(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == "object" || ty == ancestor {
            return true;
        }
        let mut t = ty.to_string();
        for _ in 0..64 {
            let parent = self.domain.types.iter().find(|d| d.name == t).map(|d| d.parent.clone());
            match parent {
                Some(p) if p == ancestor => return true,
                Some(p) => t = p,
                None => return false,
            }
        }
        false
    }

    fn subst(&self, schema: &ActionSchema, args: &[String], terms: &[Term]) -> Vec<String> {
        terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => {
                    let i = schema.params.iter().position(|p| &p.name == v).unwrap();
                    args[i].clone()
                }
            })
            .collect()
    }

    /// Ok(next facts) or Err(verdict for a failure at `step`).
    pub fn step(&self, facts: &Facts, name: &str, args: &[String], step: usize) -> Result<Facts, Verdict> {
        let name = name.to_lowercase();
        let args: Vec<String> = args.iter().map(|a| a.to_lowercase()).collect();
        let Some(schema) = self.schema(&name) else {
            return Err(("unknown_action", Some(step)));
        };
        if schema.params.len() != args.len() {
            return Err(("arity_mismatch", Some(step)));
        }
        for a in &args {
            if !self.types.contains_key(a) {
                return Err(("unknown_object", Some(step)));
            }
        }
        let mut static_fail = false;
        let mut dynamic_fail = false;
        for (p, a) in schema.params.iter().zip(args.iter()) {
            if !self.descends(&self.types[a], &p.ty) {
                static_fail = true;
            }
        }
        for lit in &schema.precondition {
            let fact = (lit.atom.predicate.clone(), self.subst(schema, &args, &lit.atom.args));
            if facts.contains(&fact) != lit.positive {
                if self.statics.contains(&fact.0) {
                    static_fail = true;
                } else {
                    dynamic_fail = true;
                }
            }
        }
        if static_fail {
            return Err(("unsat_static_precondition", Some(step)));
        }
        if dynamic_fail {
            return Err(("unsat_dynamic_precondition", Some(step)));
        }
        let mut next = facts.clone();
        for d in &schema.del_effects {
            next.remove(&(d.predicate.clone(), self.subst(schema, &args, &d.args)));
        }
        for a in &schema.add_effects {
            next.insert((a.predicate.clone(), self.subst(schema, &args, &a.args)));
        }
        Ok(next)
    }

    pub fn goal_reached(&self, facts: &Facts) -> bool {
        self.problem
            .goal
            .iter()
            .all(|l| facts.contains(&(l.atom.predicate.clone(), l.atom.args.clone())) == l.positive)
    }

    pub fn judge(&self, plan: &[(String, Vec<String>)]) -> Verdict {
        let mut facts = self.init();
        for (i, (name, args)) in plan.iter().enumerate() {
            match self.step(&facts, name, args, i + 1) {
                Ok(next) => facts = next,
                Err(v) => return v,
            }
        }
        if self.goal_reached(&facts) {
            ("valid", None)
        } else {
            ("goal_not_reached", None)
        }
    }

    /// Every type-compatible ground action, as (name, args), regardless of state.
    pub fn all_ground_actions(&self) -> Vec<(String, Vec<String>)> {
        let objects: Vec<(String, String)> = self
            .domain
            .constants
            .iter()
            .chain(self.problem.objects.iter())
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect();
        let mut out = Vec::new();
        for schema in &self.domain.actions {
            let mut partial: Vec<Vec<String>> = vec![Vec::new()];
            for p in &schema.params {
                let mut grown = Vec::new();
                for prefix in &partial {
                    for (o, t) in &objects {
                        if self.descends(t, &p.ty) {
                            let mut v = prefix.clone();
                            v.push(o.clone());
                            grown.push(v);
                        }
                    }
                }
                partial = grown;
            }
            for args in partial {
                out.push((schema.name.clone(), args));
            }
        }
        out
    }

    /// Length of a shortest plan up to `max_depth`, by iterative deepening
    /// over all ground actions. Failed (state, remaining depth) pairs are
    /// memoized within one iteration.
    pub fn shortest_plan_len(&self, max_depth: usize) -> Option<usize> {
        let actions = self.all_ground_actions();
        let init = self.init();
        for depth in 0..=max_depth {
            let mut failed: HashMap<Facts, usize> = HashMap::new();
            if self.dfs(&init, depth, &actions, &mut failed) {
                return Some(depth);
            }
        }
        None
    }

    fn dfs(
        &self,
        facts: &Facts,
        remaining: usize,
        actions: &[(String, Vec<String>)],
        failed: &mut HashMap<Facts, usize>,
    ) -> bool {
        if self.goal_reached(facts) {
            return true;
        }
        if remaining == 0 {
            return false;
        }
        if failed.get(facts).is_some_and(|&r| r >= remaining) {
            return false;
        }
        for (name, args) in actions {
            if let Ok(next) = self.step(facts, name, args, 0) {
                if self.dfs(&next, remaining - 1, actions, failed) {
                    return true;
                }
            }
        }
        failed.insert(facts.clone(), remaining);
        false
    }
}
