//! Domain and problem parsers for the typed STRIPS fragment with negative
//! conditions.

use std::collections::{BTreeMap, BTreeSet};

use super::model::*;
use super::sexpr::{parse_one, Pos, Sexpr};
use super::PddlError;

/// Heads of formulas outside the supported fragment.
const UNSUPPORTED_HEADS: &[&str] = &[
    "or", "imply", "exists", "forall", "when", "=", "<", ">", "<=", ">=", "increase", "decrease",
    "assign", "scale-up", "scale-down", "either", "preference",
];

const UNSUPPORTED_SECTIONS: &[&str] = &[
    ":functions",
    ":derived",
    ":durative-action",
    ":constraints",
    ":metric",
    ":length",
];

const UNSUPPORTED_REQUIREMENTS: &[&str] = &[
    ":action-costs",
    ":fluents",
    ":numeric-fluents",
    ":object-fluents",
    ":durative-actions",
    ":duration-inequalities",
    ":continuous-effects",
    ":derived-predicates",
    ":timed-initial-literals",
    ":preferences",
    ":constraints",
    ":conditional-effects",
    ":disjunctive-preconditions",
    ":existential-preconditions",
    ":universal-preconditions",
    ":quantified-preconditions",
    ":equality",
];

fn unsupported(construct: impl Into<String>, pos: Pos) -> PddlError {
    PddlError::Unsupported {
        construct: construct.into(),
        line: pos.line,
        column: pos.column,
    }
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], PddlError> {
    e.as_list()
        .ok_or_else(|| PddlError::parse(e.pos(), format!("expected a list for {what}")))
}

fn expect_atom<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom()
        .ok_or_else(|| PddlError::parse(e.pos(), format!("expected a name for {what}")))
}

/// Split `(define (KIND name) sections...)` into its name and sections.
fn define_header<'a>(root: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr]), PddlError> {
    let items = expect_list(root, "define")?;
    match items.first().and_then(Sexpr::as_atom) {
        Some("define") => {}
        _ => return Err(PddlError::parse(root.pos(), "expected (define ...)")),
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::parse(root.pos(), format!("missing ({kind} <name>)")))?;
    let h = expect_list(header, kind)?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(PddlError::parse(header.pos(), format!("expected ({kind} <name>)")));
    }
    let name = expect_atom(&h[1], kind)?.to_string();
    Ok((name, &items[2..]))
}

/// Parse `a b - t c ?x` style typed lists. Untyped entries default to `object`.
fn typed_list(items: &[Sexpr], what: &str) -> Result<Vec<(String, String, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        if let Some(l) = item.as_list() {
            if l.first().and_then(Sexpr::as_atom) == Some("either") {
                return Err(unsupported("either", item.pos()));
            }
            return Err(PddlError::parse(item.pos(), format!("unexpected list in {what}")));
        }
        let name = item.as_atom().unwrap_or_default();
        if name == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| PddlError::parse(item.pos(), format!("missing type after '-' in {what}")))?;
            if ty.head() == Some("either") {
                return Err(unsupported("either", ty.pos()));
            }
            let ty = expect_atom(ty, "type name")?;
            if pending.is_empty() {
                return Err(PddlError::parse(item.pos(), format!("'-' without names in {what}")));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty.to_string(), p));
            }
            i += 2;
            continue;
        }
        pending.push((name.to_string(), item.pos()));
        i += 1;
    }
    for (n, p) in pending {
        out.push((n, ROOT_TYPE.to_string(), p));
    }
    Ok(out)
}

fn check_head_supported(e: &Sexpr) -> Result<(), PddlError> {
    if let Some(h) = e.head() {
        if UNSUPPORTED_HEADS.contains(&h) {
            return Err(unsupported(h, e.pos()));
        }
    }
    Ok(())
}

fn term(e: &Sexpr) -> Result<Term, PddlError> {
    let s = expect_atom(e, "argument")?;
    Ok(if s.starts_with('?') {
        Term::Var(s.to_string())
    } else {
        Term::Const(s.to_string())
    })
}

fn atom_template(e: &Sexpr) -> Result<AtomTemplate, PddlError> {
    check_head_supported(e)?;
    let items = expect_list(e, "atom")?;
    let pred = items
        .first()
        .ok_or_else(|| PddlError::parse(e.pos(), "empty atom"))?;
    let predicate = expect_atom(pred, "predicate name")?.to_string();
    if predicate.starts_with('?') || predicate.starts_with(':') {
        return Err(PddlError::parse(pred.pos(), format!("invalid predicate name '{predicate}'")));
    }
    let args = items[1..].iter().map(term).collect::<Result<_, _>>()?;
    Ok(AtomTemplate { predicate, args })
}

/// Conjunction of literals. `()` and `(and)` are the empty conjunction.
fn literal_conjunction(e: &Sexpr) -> Result<Vec<(LiteralTemplate, Pos)>, PddlError> {
    check_head_supported(e)?;
    let items = expect_list(e, "condition")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    match e.head() {
        Some("and") => {
            let mut out = Vec::new();
            for sub in &items[1..] {
                out.extend(literal_conjunction(sub)?);
            }
            Ok(out)
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(PddlError::parse(e.pos(), "'not' takes exactly one argument"));
            }
            let inner = &items[1];
            check_head_supported(inner)?;
            match inner.head() {
                Some("and") | Some("not") => Err(unsupported("not over a compound formula", inner.pos())),
                _ => Ok(vec![(
                    LiteralTemplate {
                        atom: atom_template(inner)?,
                        positive: false,
                    },
                    e.pos(),
                )]),
            }
        }
        _ => Ok(vec![(
            LiteralTemplate {
                atom: atom_template(e)?,
                positive: true,
            },
            e.pos(),
        )]),
    }
}

fn check_requirements(items: &[Sexpr]) -> Result<Vec<String>, PddlError> {
    let mut out = Vec::new();
    for r in items {
        let name = expect_atom(r, "requirement")?;
        if UNSUPPORTED_REQUIREMENTS.contains(&name) {
            return Err(unsupported(name, r.pos()));
        }
        out.push(name.to_string());
    }
    Ok(out)
}

fn section_key(section: &Sexpr) -> Result<(&str, &[Sexpr]), PddlError> {
    let items = expect_list(section, "section")?;
    let key = items
        .first()
        .and_then(Sexpr::as_atom)
        .ok_or_else(|| PddlError::parse(section.pos(), "expected a section keyword"))?;
    if UNSUPPORTED_SECTIONS.contains(&key) {
        return Err(unsupported(key, section.pos()));
    }
    Ok((key, &items[1..]))
}

/// Parse a PDDL domain.
pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    let root = parse_one(text)?;
    let (name, sections) = define_header(&root, "domain")?;

    let mut domain = DomainModel {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    let mut type_positions: BTreeMap<String, Pos> = BTreeMap::new();
    let mut action_positions: Vec<Pos> = Vec::new();

    for section in sections {
        let (key, body) = section_key(section)?;
        match key {
            ":requirements" => domain.requirements.extend(check_requirements(body)?),
            ":types" => {
                for (n, parent, p) in typed_list(body, ":types")? {
                    if n == ROOT_TYPE {
                        if parent != ROOT_TYPE {
                            return Err(PddlError::validation_at(p, "type 'object' cannot have a parent"));
                        }
                        continue;
                    }
                    if type_positions.insert(n.clone(), p).is_some() {
                        return Err(PddlError::validation_at(p, format!("duplicate type '{n}'")));
                    }
                    domain.types.push(TypeDecl { name: n, parent });
                }
            }
            ":constants" => {
                for (n, ty, _) in typed_list(body, ":constants")? {
                    domain.constants.push(TypedName::new(n, ty));
                }
            }
            ":predicates" => {
                for p in body {
                    let items = expect_list(p, "predicate declaration")?;
                    let pname = items
                        .first()
                        .ok_or_else(|| PddlError::parse(p.pos(), "empty predicate declaration"))?;
                    let pname = expect_atom(pname, "predicate name")?.to_string();
                    let params = typed_list(&items[1..], "predicate parameters")?
                        .into_iter()
                        .map(|(n, t, _)| TypedName::new(n, t))
                        .collect();
                    if domain.predicate(&pname).is_some() {
                        return Err(PddlError::validation_at(p.pos(), format!("duplicate predicate '{pname}'")));
                    }
                    domain.predicates.push(PredicateDecl { name: pname, params });
                }
            }
            ":action" => {
                action_positions.push(section.pos());
                domain.actions.push(parse_action(section, body)?);
            }
            other => {
                return Err(PddlError::parse(section.pos(), format!("unknown domain section '{other}'")));
            }
        }
    }

    // Parents that are only mentioned after '-' are implicitly declared under `object`.
    let declared: BTreeSet<String> = domain.types.iter().map(|t| t.name.clone()).collect();
    let mut implicit: BTreeSet<String> = BTreeSet::new();
    for t in &domain.types {
        if t.parent != ROOT_TYPE && !declared.contains(&t.parent) {
            implicit.insert(t.parent.clone());
        }
    }
    for t in implicit {
        domain.types.push(TypeDecl {
            name: t,
            parent: ROOT_TYPE.to_string(),
        });
    }
    check_type_forest(&domain)?;
    check_domain(&domain, &action_positions)?;
    Ok(domain)
}

fn parse_action(section: &Sexpr, body: &[Sexpr]) -> Result<ActionSchema, PddlError> {
    let name = body
        .first()
        .ok_or_else(|| PddlError::parse(section.pos(), "missing action name"))?;
    let name = expect_atom(name, "action name")?.to_string();
    let mut schema = ActionSchema {
        name,
        params: Vec::new(),
        precondition: Vec::new(),
        add_effects: Vec::new(),
        del_effects: Vec::new(),
    };
    let mut i = 1;
    while i < body.len() {
        let key = expect_atom(&body[i], "action keyword")?;
        let value = body
            .get(i + 1)
            .ok_or_else(|| PddlError::parse(body[i].pos(), format!("missing value for {key}")))?;
        match key {
            ":parameters" => {
                let items = expect_list(value, ":parameters")?;
                for (n, t, p) in typed_list(items, ":parameters")? {
                    if !n.starts_with('?') {
                        return Err(PddlError::parse(p, format!("parameter '{n}' must start with '?'")));
                    }
                    schema.params.push(TypedName::new(n, t));
                }
            }
            ":precondition" => {
                schema.precondition = literal_conjunction(value)?.into_iter().map(|(l, _)| l).collect();
            }
            ":effect" => {
                for (lit, _) in literal_conjunction(value)? {
                    if lit.positive {
                        schema.add_effects.push(lit.atom);
                    } else {
                        schema.del_effects.push(lit.atom);
                    }
                }
            }
            other => return Err(PddlError::parse(body[i].pos(), format!("unknown action keyword '{other}'"))),
        }
        i += 2;
    }
    Ok(schema)
}

fn check_type_forest(domain: &DomainModel) -> Result<(), PddlError> {
    for t in &domain.types {
        let mut seen = BTreeSet::new();
        let mut current = t.name.as_str();
        while current != ROOT_TYPE {
            if !seen.insert(current) {
                return Err(PddlError::Validation(format!("type hierarchy has a cycle through '{}'", t.name)));
            }
            current = domain.parent_of(current).unwrap_or(ROOT_TYPE);
        }
    }
    Ok(())
}

fn check_domain(domain: &DomainModel, action_positions: &[Pos]) -> Result<(), PddlError> {
    let known_type = |ty: &str, ctx: &str| -> Result<(), PddlError> {
        if domain.has_type(ty) {
            Ok(())
        } else {
            Err(PddlError::Validation(format!("unknown type '{ty}' in {ctx}")))
        }
    };
    for c in &domain.constants {
        known_type(&c.ty, &format!("constant '{}'", c.name))?;
    }
    for p in &domain.predicates {
        for param in &p.params {
            known_type(&param.ty, &format!("predicate '{}'", p.name))?;
        }
    }
    let constants: BTreeSet<&str> = domain.constants.iter().map(|c| c.name.as_str()).collect();

    for (idx, a) in domain.actions.iter().enumerate() {
        let at = action_positions[idx];
        if domain.actions[..idx].iter().any(|b| b.name == a.name) {
            return Err(PddlError::validation_at(at, format!("duplicate action '{}'", a.name)));
        }
        let mut vars = BTreeSet::new();
        for p in &a.params {
            known_type(&p.ty, &format!("action '{}'", a.name))?;
            if !vars.insert(p.name.as_str()) {
                return Err(PddlError::validation_at(
                    at,
                    format!("duplicate parameter '{}' in action '{}'", p.name, a.name),
                ));
            }
        }
        let atoms = a
            .precondition
            .iter()
            .map(|l| &l.atom)
            .chain(&a.add_effects)
            .chain(&a.del_effects);
        for atom in atoms {
            let decl = domain.predicate(&atom.predicate).ok_or_else(|| {
                PddlError::validation_at(
                    at,
                    format!("undeclared predicate '{}' in action '{}'", atom.predicate, a.name),
                )
            })?;
            if decl.arity() != atom.args.len() {
                return Err(PddlError::validation_at(
                    at,
                    format!(
                        "predicate '{}' expects {} arguments but {} are used in action '{}'",
                        atom.predicate,
                        decl.arity(),
                        atom.args.len(),
                        a.name
                    ),
                ));
            }
            for t in &atom.args {
                match t {
                    Term::Var(v) if !vars.contains(v.as_str()) => {
                        return Err(PddlError::validation_at(
                            at,
                            format!("undeclared variable '{v}' in action '{}'", a.name),
                        ))
                    }
                    Term::Const(c) if !constants.contains(c.as_str()) => {
                        return Err(PddlError::validation_at(
                            at,
                            format!("undeclared constant '{c}' in action '{}'", a.name),
                        ))
                    }
                    _ => {}
                }
            }
        }
        if let Some(both) = a.add_effects.iter().find(|x| a.del_effects.contains(x)) {
            return Err(PddlError::validation_at(
                at,
                format!("atom {both} is both added and deleted by action '{}'", a.name),
            ));
        }
    }
    Ok(())
}

/// Parse a PDDL problem against an already parsed domain.
pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemModel, PddlError> {
    let root = parse_one(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut problem = ProblemModel {
        name,
        domain_name: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
    };
    let mut init_positions = Vec::new();
    let mut goal_positions = Vec::new();

    for section in sections {
        let (key, body) = section_key(section)?;
        match key {
            ":domain" => {
                let d = body
                    .first()
                    .ok_or_else(|| PddlError::parse(section.pos(), "missing domain name"))?;
                problem.domain_name = expect_atom(d, "domain name")?.to_string();
            }
            ":requirements" => {
                check_requirements(body)?;
            }
            ":objects" => {
                for (n, ty, p) in typed_list(body, ":objects")? {
                    if problem.objects.iter().any(|o| o.name == n) || domain.constants.iter().any(|c| c.name == n) {
                        return Err(PddlError::validation_at(p, format!("duplicate object '{n}'")));
                    }
                    if !domain.has_type(&ty) {
                        return Err(PddlError::validation_at(p, format!("unknown type '{ty}' for object '{n}'")));
                    }
                    problem.objects.push(TypedName::new(n, ty));
                }
            }
            ":init" => {
                for fact in body {
                    check_head_supported(fact)?;
                    if fact.head() == Some("not") {
                        return Err(unsupported("negative initial literal", fact.pos()));
                    }
                    let atom = ground(atom_template(fact)?, fact.pos())?;
                    if !problem.init.contains(&atom) {
                        problem.init.push(atom);
                        init_positions.push(fact.pos());
                    }
                }
            }
            ":goal" => {
                let g = body
                    .first()
                    .ok_or_else(|| PddlError::parse(section.pos(), "empty goal"))?;
                for (lit, pos) in literal_conjunction(g)? {
                    problem.goal.push(GroundLiteral {
                        atom: ground(lit.atom, pos)?,
                        positive: lit.positive,
                    });
                    goal_positions.push(pos);
                }
            }
            other => {
                return Err(PddlError::parse(section.pos(), format!("unknown problem section '{other}'")));
            }
        }
    }

    if problem.domain_name != domain.name {
        return Err(PddlError::Validation(format!(
            "problem refers to domain '{}' but the domain is '{}'",
            problem.domain_name, domain.name
        )));
    }

    let mut types: BTreeMap<&str, &str> = BTreeMap::new();
    for o in domain.constants.iter().chain(&problem.objects) {
        types.insert(&o.name, &o.ty);
    }
    let atoms = problem
        .init
        .iter()
        .zip(&init_positions)
        .chain(problem.goal.iter().map(|l| &l.atom).zip(&goal_positions));
    for (atom, pos) in atoms {
        check_ground_atom(domain, &types, atom, *pos)?;
    }
    Ok(problem)
}

fn ground(atom: AtomTemplate, pos: Pos) -> Result<GroundAtom, PddlError> {
    let mut args = Vec::with_capacity(atom.args.len());
    for t in atom.args {
        match t {
            Term::Const(c) => args.push(c),
            Term::Var(v) => return Err(PddlError::validation_at(pos, format!("variable '{v}' in a ground fact"))),
        }
    }
    Ok(GroundAtom {
        predicate: atom.predicate,
        args,
    })
}

fn check_ground_atom(
    domain: &DomainModel,
    types: &BTreeMap<&str, &str>,
    atom: &GroundAtom,
    pos: Pos,
) -> Result<(), PddlError> {
    let decl = domain
        .predicate(&atom.predicate)
        .ok_or_else(|| PddlError::validation_at(pos, format!("undeclared predicate '{}'", atom.predicate)))?;
    if decl.arity() != atom.args.len() {
        return Err(PddlError::validation_at(
            pos,
            format!(
                "predicate '{}' expects {} arguments but {atom} has {}",
                atom.predicate,
                decl.arity(),
                atom.args.len()
            ),
        ));
    }
    for (arg, param) in atom.args.iter().zip(&decl.params) {
        let ty = types
            .get(arg.as_str())
            .ok_or_else(|| PddlError::validation_at(pos, format!("undeclared object '{arg}' in {atom}")))?;
        if !domain.is_subtype(ty, &param.ty) {
            return Err(PddlError::validation_at(
                pos,
                format!("object '{arg}' of type '{ty}' does not match type '{}' in {atom}", param.ty),
            ));
        }
    }
    Ok(())
}
