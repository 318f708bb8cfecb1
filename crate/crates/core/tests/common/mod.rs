//! Small, deliberately naive reference implementations shared by the
//! integration tests. Nothing here reuses the engine's evaluators.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use magic_core::syntax::{Atom, Clause, Program, Query, Symbol, Term};
use magic_core::transform::SelectionMap;

fn ground_term(t: &Term, env: &BTreeMap<String, Symbol>) -> Term {
    match t {
        Term::Var(v) => Term::Const(env[&v.to_string()].clone()),
        other => other.clone(),
    }
}

fn ground_atom(a: &Atom, env: &BTreeMap<String, Symbol>) -> Atom {
    Atom::new(a.pred.clone(), a.args.iter().map(|t| ground_term(t, env)).collect())
}

fn var_names(c: &Clause) -> Vec<String> {
    let mut names = Vec::new();
    for a in c.atoms() {
        for t in &a.args {
            if let Term::Var(v) = t {
                if !names.contains(&v.to_string()) {
                    names.push(v.to_string());
                }
            }
        }
    }
    names
}

fn assignments(names: &[String], universe: &[Symbol]) -> Vec<BTreeMap<String, Symbol>> {
    let mut out = vec![BTreeMap::new()];
    for n in names {
        out = out
            .into_iter()
            .flat_map(|env| {
                universe.iter().map(move |c| {
                    let mut e = env.clone();
                    e.insert(n.clone(), c.clone());
                    e
                })
            })
            .collect();
    }
    out
}

/// Least model by iterating the immediate-consequence operator from the
/// empty set, re-deriving everything every round.
pub fn naive_least_model(p: &Program, universe: &BTreeSet<Symbol>) -> BTreeSet<Atom> {
    let universe: Vec<Symbol> = universe.iter().cloned().collect();
    let mut model = BTreeSet::new();
    loop {
        let mut next = BTreeSet::new();
        for c in p.clauses() {
            for env in assignments(&var_names(c), &universe) {
                if c.body.iter().all(|b| model.contains(&ground_atom(b, &env))) {
                    next.insert(ground_atom(&c.head, &env));
                }
            }
        }
        if next == model {
            return model;
        }
        model = next;
    }
}

/// Constants of the program and query, or a single placeholder constant.
pub fn universe_of(p: &Program, q: &Query) -> BTreeSet<Symbol> {
    let mut u = p.constants().clone();
    u.extend(q.constants());
    if u.is_empty() {
        u.insert(Symbol::from("c0"));
    }
    u
}

/// Model atoms that are instances of the atomic query.
pub fn query_answers(model: &BTreeSet<Atom>, q: &Atom) -> BTreeSet<Atom> {
    model
        .iter()
        .filter(|a| {
            a.pred == q.pred && {
                let mut env: BTreeMap<String, Term> = BTreeMap::new();
                a.args.iter().zip(&q.args).all(|(g, t)| match t {
                    Term::Var(v) => env.entry(v.to_string()).or_insert_with(|| g.clone()) == g,
                    other => other == g,
                })
            }
        })
        .cloned()
        .collect()
}

fn pre(a: &Atom, sel: &SelectionMap) -> Atom {
    let positions = sel.positions(&a.pred).expect("selection covers the signature");
    Atom::new(a.pred.magic(), positions.iter().map(|&i| a.args[i - 1].clone()).collect())
}

/// The magic program written out rule by rule: a guarded copy of each
/// clause, one call-propagation clause per body atom, and the seed.
pub fn reference_magic(p: &Program, q: &Atom, sel: &SelectionMap) -> Vec<String> {
    let mut out = Vec::new();
    for c in p.clauses() {
        let guard = pre(&c.head, sel);
        let mut body = vec![guard.clone()];
        body.extend(c.body.iter().cloned());
        out.push(Clause::new(c.head.clone(), body).to_string());
        for i in 0..c.body.len() {
            let mut body = vec![guard.clone()];
            body.extend(c.body[..i].iter().cloned());
            out.push(Clause::new(pre(&c.body[i], sel), body).to_string());
        }
    }
    out.push(Clause::fact(pre(q, sel)).to_string());
    out
}
