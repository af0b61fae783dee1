//! Stage prompts. Wording lives in `templates/`.

use genplan_core::feedback::{fill, strip_final_newline};

macro_rules! template {
    ($path:literal) => {
        strip_final_newline(include_str!(concat!("../templates/", $path)))
    };
}

pub const SYSTEM: &str = template!("system.txt");
pub const PSEUDOCODE_REASK: &str = template!("pseudocode_reask.txt");
pub const PLAN_REASK: &str = template!("plan_reask.txt");
pub const CODE_REASK: &str = template!("code_reask.txt");
const DOMAIN_NL: &str = template!("domain_nl.txt");
const TASK_NL: &str = template!("task_nl.txt");
const PSEUDOCODE: &str = template!("pseudocode.txt");
const PLAN: &str = template!("plan.txt");
const CODE_INITIAL: &str = template!("code_initial.txt");

pub fn domain_nl(domain_pddl: &str) -> String {
    fill(DOMAIN_NL, &[("DOMAIN_PDDL", domain_pddl)])
}

pub fn task_nl(domain_pddl: &str, domain_nl: &str, task_pddl: &str) -> String {
    fill(
        TASK_NL,
        &[("DOMAIN_PDDL", domain_pddl), ("DOMAIN_NL", domain_nl), ("TASK_PDDL", task_pddl)],
    )
}

pub fn pseudocode(domain_nl: &str, task_nl_1: &str, task_nl_2: &str) -> String {
    fill(
        PSEUDOCODE,
        &[("DOMAIN_NL", domain_nl), ("TASK_NL_1", task_nl_1), ("TASK_NL_2", task_nl_2)],
    )
}

pub fn plan(domain_nl: &str, task_nl: &str, pseudocode: &str, action_catalog: &str) -> String {
    fill(
        PLAN,
        &[
            ("DOMAIN_NL", domain_nl),
            ("TASK_NL", task_nl),
            ("PSEUDOCODE", pseudocode),
            ("ACTION_CATALOG", action_catalog),
        ],
    )
}

pub fn code_initial(pseudocode: &str, example_task: &str, example_plan: &str) -> String {
    fill(
        CODE_INITIAL,
        &[("PSEUDOCODE", pseudocode), ("EXAMPLE_TASK", example_task), ("EXAMPLE_PLAN", example_plan)],
    )
}
