//! Program-facing task encoding: ordered tuples of objects, initial facts
//! and signed goal facts, as handed to a generated program.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pddl::ProblemModel;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoalFact {
    pub positive: bool,
    /// Predicate followed by its arguments.
    pub fact: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskEncoding {
    /// (name, type) pairs.
    pub objects: Vec<(String, String)>,
    /// Predicate followed by its arguments.
    pub init: Vec<Vec<String>>,
    pub goal: Vec<GoalFact>,
}

/// Encode a problem. Seed 0 keeps declaration order; any other seed shuffles
/// objects, initial facts and goal facts deterministically.
pub fn encode_task(problem: &ProblemModel, ordering_seed: u64) -> TaskEncoding {
    let mut enc = TaskEncoding {
        objects: problem.objects.iter().map(|o| (o.name.clone(), o.ty.clone())).collect(),
        init: problem
            .init
            .iter()
            .map(|a| std::iter::once(a.predicate.clone()).chain(a.args.iter().cloned()).collect())
            .collect(),
        goal: problem
            .goal
            .iter()
            .map(|l| GoalFact {
                positive: l.positive,
                fact: std::iter::once(l.atom.predicate.clone()).chain(l.atom.args.iter().cloned()).collect(),
            })
            .collect(),
    };
    if ordering_seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(ordering_seed);
        enc.objects.shuffle(&mut rng);
        enc.init.shuffle(&mut rng);
        enc.goal.shuffle(&mut rng);
    }
    enc
}

/// Shuffle the presentation order of objects and goal facts; initial facts
/// keep their order.
pub fn permute_presentation(encoding: &TaskEncoding, rng_seed: u64) -> TaskEncoding {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = encoding.clone();
    out.objects.shuffle(&mut rng);
    out.goal.shuffle(&mut rng);
    out
}

fn py_str(s: &str) -> String {
    let escaped = s.replace('\\', "\\\\").replace('\'', "\\'");
    format!("'{escaped}'")
}

fn py_tuple<'a>(items: impl IntoIterator<Item = String>) -> String {
    let items: Vec<String> = items.into_iter().collect();
    match items.len() {
        1 => format!("({},)", items[0]),
        _ => format!("({})", items.join(", ")),
    }
}

impl TaskEncoding {
    /// Python literal assignments for `objects`, `init` and `goal`.
    pub fn to_python(&self) -> String {
        let objects: Vec<String> = self
            .objects
            .iter()
            .map(|(n, t)| py_tuple([py_str(n), py_str(t)]))
            .collect();
        let init: Vec<String> = self.init.iter().map(|f| py_tuple(f.iter().map(|s| py_str(s)))).collect();
        let goal: Vec<String> = self
            .goal
            .iter()
            .map(|g| {
                let sign = if g.positive { "True" } else { "False" }.to_string();
                py_tuple(std::iter::once(sign).chain(g.fact.iter().map(|s| py_str(s))))
            })
            .collect();
        format!(
            "objects = [{}]\ninit = [{}]\ngoal = [{}]",
            objects.join(", "),
            init.join(", "),
            goal.join(", ")
        )
    }
}

/// Python `repr` of a list of strings.
pub fn py_str_list(items: &[String]) -> String {
    format!("[{}]", items.iter().map(|s| py_str(s)).collect::<Vec<_>>().join(", "))
}
