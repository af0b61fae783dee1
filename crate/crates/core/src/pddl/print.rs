//! Canonical PDDL output. Parsing the printed text yields an equal model.

use std::fmt::Write;

use super::model::*;

fn typed(names: &[TypedName]) -> String {
    names
        .iter()
        .map(|n| format!("{} - {}", n.name, n.ty))
        .collect::<Vec<_>>()
        .join(" ")
}

fn conjunction<T: std::fmt::Display>(items: &[T]) -> String {
    match items.len() {
        0 => "(and)".to_string(),
        _ => format!(
            "(and {})",
            items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        ),
    }
}

pub fn print_domain(d: &DomainModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    if !d.types.is_empty() {
        let types: Vec<String> = d.types.iter().map(|t| format!("{} - {}", t.name, t.parent)).collect();
        let _ = writeln!(out, "  (:types {})", types.join(" "));
    }
    if !d.constants.is_empty() {
        let _ = writeln!(out, "  (:constants {})", typed(&d.constants));
    }
    let _ = writeln!(out, "  (:predicates");
    for p in &d.predicates {
        if p.params.is_empty() {
            let _ = writeln!(out, "    ({})", p.name);
        } else {
            let _ = writeln!(out, "    ({} {})", p.name, typed(&p.params));
        }
    }
    let _ = writeln!(out, "  )");
    for a in &d.actions {
        let _ = writeln!(out, "  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", typed(&a.params));
        let _ = writeln!(out, "    :precondition {}", conjunction(&a.precondition));
        let effects: Vec<String> = a
            .add_effects
            .iter()
            .map(ToString::to_string)
            .chain(a.del_effects.iter().map(|e| format!("(not {e})")))
            .collect();
        let _ = writeln!(out, "    :effect {})", conjunction(&effects));
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &ProblemModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain_name);
    let _ = writeln!(out, "  (:objects {})", typed(&p.objects));
    let _ = writeln!(out, "  (:init");
    for a in &p.init {
        let _ = writeln!(out, "    {a}");
    }
    let _ = writeln!(out, "  )");
    let _ = writeln!(out, "  (:goal {}))", conjunction(&p.goal));
    out
}
