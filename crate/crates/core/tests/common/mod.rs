#![allow(dead_code)]

pub mod golden;
pub mod oracle;
pub mod programs;

use std::fs;
use std::path::PathBuf;

use genplan_core::pddl::{parse_domain, parse_problem, DomainModel, GroundAction, Plan, ProblemModel};
use rand::Rng;

use oracle::{Facts, Oracle};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fixture(name: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)).unwrap()
}

pub const TOY_DOMAINS: [&str; 3] = ["gripper", "logistics", "ferry"];

pub fn domain_text(name: &str) -> String {
    fs::read_to_string(data_dir().join(name).join("domain.pddl")).unwrap()
}

pub fn load_domain(name: &str) -> DomainModel {
    parse_domain(&domain_text(name)).unwrap()
}

/// (file stem, problem text, parsed problem) for every bundled task of a domain.
pub fn load_problems(name: &str, domain: &DomainModel) -> Vec<(String, String, ProblemModel)> {
    let mut entries: Vec<_> = fs::read_dir(data_dir().join(name).join("problems"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            let problem = parse_problem(&text, domain).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), text, problem)
        })
        .collect()
}

/// Random plan of 0..=20 steps mixing applicable steps with several kinds of
/// broken ones.
pub fn random_plan<R: Rng>(oracle: &Oracle<'_>, rng: &mut R) -> Plan {
    let ground = oracle.all_ground_actions();
    let objects: Vec<String> = oracle.problem.objects.iter().map(|o| o.name.clone()).collect();
    let schemas: Vec<(String, usize)> = oracle
        .domain
        .actions
        .iter()
        .map(|a| (a.name.clone(), a.params.len()))
        .collect();
    let len = rng.gen_range(0..=20);
    let mut facts: Facts = oracle.init();
    let mut steps = Vec::new();
    for _ in 0..len {
        let roll = rng.gen_range(0..100);
        let (name, args) = if roll < 65 {
            let legal: Vec<_> = ground
                .iter()
                .filter_map(|(n, a)| oracle.step(&facts, n, a, 0).ok().map(|next| (n.clone(), a.clone(), next)))
                .collect();
            if legal.is_empty() {
                ground[rng.gen_range(0..ground.len())].clone()
            } else {
                let (n, a, next) = legal[rng.gen_range(0..legal.len())].clone();
                facts = next;
                (n, a)
            }
        } else if roll < 75 {
            ground[rng.gen_range(0..ground.len())].clone()
        } else if roll < 83 {
            let (n, k) = &schemas[rng.gen_range(0..schemas.len())];
            (n.clone(), (0..*k).map(|_| objects[rng.gen_range(0..objects.len())].clone()).collect())
        } else if roll < 89 {
            ("teleport".to_string(), vec![objects[0].clone()])
        } else if roll < 95 {
            let (n, k) = &schemas[rng.gen_range(0..schemas.len())];
            let k = if *k == 0 || rng.gen_bool(0.5) { k + 1 } else { k - 1 };
            (n.clone(), (0..k).map(|_| objects[rng.gen_range(0..objects.len())].clone()).collect())
        } else {
            let (n, k) = &schemas[rng.gen_range(0..schemas.len())];
            let mut args: Vec<String> = (0..*k).map(|_| objects[rng.gen_range(0..objects.len())].clone()).collect();
            if let Some(slot) = args.iter_mut().last() {
                *slot = "ghost".to_string();
            }
            (n.clone(), args)
        };
        steps.push(GroundAction::new(name, args));
    }
    Plan::new(steps)
}

pub fn as_pairs(plan: &Plan) -> Vec<(String, Vec<String>)> {
    plan.steps.iter().map(|s| (s.schema.clone(), s.args.clone())).collect()
}
