//! Breadth-first optimal planner for small tasks.
//!
//! Successors are generated in lexicographic order of their action text and
//! every state keeps the first path that reaches it, so among all shortest
//! plans the returned one is the lexicographically smallest sequence.

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::pddl::{apply_unchecked, instantiate, ActionSchema, GroundAction, Plan, State, Task, Term};
use crate::validator::compute_static_predicates;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub max_states: usize,
    pub max_seconds: f64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_states: 2_000_000,
            max_seconds: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveResult {
    Solved(Plan),
    Unsolvable,
    ResourceExhausted { states: usize },
}

impl SolveResult {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SolveResult::Solved(p) => Some(p),
            _ => None,
        }
    }
}

/// Precondition literals grouped by the parameter position after which they
/// become fully bound.
struct SchemaGrounder<'a> {
    schema: &'a ActionSchema,
    candidates: Vec<Vec<&'a str>>,
    checks: Vec<Vec<usize>>,
}

impl<'a> SchemaGrounder<'a> {
    fn new(task: &'a Task, schema: &'a ActionSchema) -> Self {
        let candidates = schema.params.iter().map(|p| task.objects_of_type(&p.ty)).collect();
        let mut checks = vec![Vec::new(); schema.params.len() + 1];
        for (li, lit) in schema.precondition.iter().enumerate() {
            let last = lit
                .atom
                .args
                .iter()
                .filter_map(|t| match t {
                    Term::Var(v) => schema.params.iter().position(|p| &p.name == v).map(|i| i + 1),
                    Term::Const(_) => Some(0),
                })
                .max()
                .unwrap_or(0);
            checks[last].push(li);
        }
        SchemaGrounder {
            schema,
            candidates,
            checks,
        }
    }

    fn holds(&self, state: &State, args: &[String], depth: usize) -> bool {
        let binding = self.schema.binding(args);
        self.checks[depth].iter().all(|&li| {
            let lit = &self.schema.precondition[li];
            state.contains(&instantiate(&lit.atom, &binding)) == lit.positive
        })
    }

    fn applicable(&self, state: &State, out: &mut Vec<GroundAction>) {
        if !self.holds(state, &[], 0) {
            return;
        }
        let mut args = Vec::with_capacity(self.candidates.len());
        self.extend(state, &mut args, out);
    }

    fn extend(&self, state: &State, args: &mut Vec<String>, out: &mut Vec<GroundAction>) {
        let depth = args.len();
        if depth == self.candidates.len() {
            out.push(GroundAction::new(self.schema.name.clone(), args.iter().cloned()));
            return;
        }
        for obj in &self.candidates[depth] {
            args.push((*obj).to_string());
            if self.holds(state, args, depth + 1) {
                self.extend(state, args, out);
            }
            args.pop();
        }
    }
}

/// Applicable, well-typed ground actions of `state`, sorted by action text.
pub fn applicable_actions(task: &Task, state: &State) -> Vec<GroundAction> {
    let grounders: Vec<_> = task.domain.actions.iter().map(|s| SchemaGrounder::new(task, s)).collect();
    successors_sorted(&grounders, state)
}

fn successors_sorted(grounders: &[SchemaGrounder<'_>], state: &State) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for g in grounders {
        g.applicable(state, &mut out);
    }
    out.sort_by_cached_key(ToString::to_string);
    out
}

/// Shortest plan by breadth-first search over ground states.
pub fn solve_optimal(task: &Task, limits: SearchLimits) -> SolveResult {
    let start = Instant::now();
    let deadline = Duration::from_secs_f64(limits.max_seconds.max(0.0));
    let init = task.initial_state();
    if task.goal_satisfied(&init) {
        return SolveResult::Solved(Plan::default());
    }

    // Static goal literals are decided by the initial state.
    let statics = compute_static_predicates(&task.domain);
    if task
        .problem
        .goal
        .iter()
        .any(|l| statics.contains(&l.atom.predicate) && !init.holds(l))
    {
        return SolveResult::Unsolvable;
    }

    let grounders: Vec<_> = task.domain.actions.iter().map(|s| SchemaGrounder::new(task, s)).collect();
    // (state, parent node, action from parent)
    let mut nodes: Vec<(State, Option<(usize, GroundAction)>)> = vec![(init.clone(), None)];
    let mut visited: HashSet<State> = HashSet::from([init]);
    let mut queue = VecDeque::from([0usize]);

    while let Some(idx) = queue.pop_front() {
        if start.elapsed() > deadline {
            return SolveResult::ResourceExhausted { states: visited.len() };
        }
        let state = nodes[idx].0.clone();
        for action in successors_sorted(&grounders, &state) {
            let next = apply_unchecked(&state, &action, &task.domain);
            if visited.contains(&next) {
                continue;
            }
            let goal = task.goal_satisfied(&next);
            visited.insert(next.clone());
            nodes.push((next, Some((idx, action))));
            let node = nodes.len() - 1;
            if goal {
                return SolveResult::Solved(extract_plan(&nodes, node));
            }
            if visited.len() >= limits.max_states {
                return SolveResult::ResourceExhausted { states: visited.len() };
            }
            queue.push_back(node);
        }
    }
    SolveResult::Unsolvable
}

fn extract_plan(nodes: &[(State, Option<(usize, GroundAction)>)], mut idx: usize) -> Plan {
    let mut steps = Vec::new();
    while let Some((parent, action)) = &nodes[idx].1 {
        steps.push(action.clone());
        idx = *parent;
    }
    steps.reverse();
    Plan::new(steps)
}
