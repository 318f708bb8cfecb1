use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::syntax::{Atom, Clause, Pred, Program, Query, Term};
use crate::transform::{SelectionMap, VariantFlags};

/// Bounds for [`random_program`]. All bounds must be at least 1.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct RandomConfig {
    pub max_preds: usize,
    pub max_arity: usize,
    pub max_clauses: usize,
    pub max_body: usize,
    pub const_count: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            max_preds: 4,
            max_arity: 2,
            max_clauses: 6,
            max_body: 3,
            const_count: 3,
        }
    }
}

const VARS: [&str; 3] = ["X", "Y", "Z"];
const PRED_NAMES: [&str; 8] = ["p", "q", "r", "s", "t", "u", "v", "w"];

fn const_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("k{i}")
    }
}

fn pred_name(i: usize) -> String {
    PRED_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("p{i}"))
}

fn random_args(rng: &mut ChaCha8Rng, arity: usize, consts: usize, var_bias: f64) -> Vec<Term> {
    (0..arity)
        .map(|_| {
            if rng.gen_bool(var_bias) {
                Term::var(VARS.choose(rng).unwrap())
            } else {
                Term::constant(&const_name(rng.gen_range(0..consts)))
            }
        })
        .collect()
}

/// A random Datalog program and atomic query, deterministic in `seed`.
///
/// Body atoms are mostly variables drawn from a three-variable pool, so
/// clauses join and recursion through the dependency graph is common.
pub fn random_program(cfg: &RandomConfig, seed: u64) -> (Program, Query) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_preds = rng.gen_range(1..=cfg.max_preds.max(1));
    let consts = cfg.const_count.max(1);
    let preds: Vec<(Pred, usize)> = (0..n_preds)
        .map(|i| (Pred::new(&pred_name(i)), rng.gen_range(1..=cfg.max_arity.max(1))))
        .collect();

    let n_clauses = rng.gen_range(1..=cfg.max_clauses.max(1));
    let mut clauses = Vec::with_capacity(n_clauses);
    for _ in 0..n_clauses {
        let (hp, ha) = preds.choose(&mut rng).unwrap();
        let body_len = if rng.gen_bool(0.35) {
            0
        } else {
            rng.gen_range(1..=cfg.max_body.max(1))
        };
        let var_bias = if body_len == 0 { 0.3 } else { 0.8 };
        let head = Atom::new(hp.clone(), random_args(&mut rng, *ha, consts, var_bias));
        let body = (0..body_len)
            .map(|_| {
                let (bp, ba) = preds.choose(&mut rng).unwrap();
                Atom::new(bp.clone(), random_args(&mut rng, *ba, consts, 0.8))
            })
            .collect();
        clauses.push(Clause::new(head, body));
    }

    let head = &clauses.choose(&mut rng).unwrap().head;
    let query = Query::atomic(Atom::new(head.pred.clone(), random_args(&mut rng, head.arity(), consts, 0.6)));
    let program = Program::new(clauses).expect("generated predicates have fixed arities");
    (program, query)
}

/// Each position of each predicate is selected independently with
/// probability one half.
pub fn random_selection(signature: &BTreeMap<Pred, usize>, rng: &mut impl Rng) -> SelectionMap {
    let mut sel = SelectionMap::new();
    for (p, &n) in signature {
        sel.select(p.clone(), (1..=n).filter(|_| rng.gen_bool(0.5)));
    }
    sel
}

/// A random subset of the admissible supplementary magic atoms of `p`.
pub fn random_supplementary(p: &Program, rng: &mut impl Rng) -> VariantFlags {
    let mut flags = VariantFlags::full_supplementary(p);
    flags.supplementary.retain(|_| rng.gen_bool(0.5));
    flags
}

/// True if some predicate depends on itself.
pub fn is_recursive(p: &Program) -> bool {
    let mut edges: BTreeMap<&Pred, Vec<&Pred>> = BTreeMap::new();
    for c in p.clauses() {
        edges
            .entry(&c.head.pred)
            .or_default()
            .extend(c.body.iter().map(|b| &b.pred));
    }
    edges.keys().any(|&start| {
        let mut stack: Vec<&Pred> = edges[start].clone();
        let mut seen = std::collections::BTreeSet::new();
        while let Some(x) = stack.pop() {
            if x == start {
                return true;
            }
            if seen.insert(x) {
                if let Some(next) = edges.get(x) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        false
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let cfg = RandomConfig::default();
        assert_eq!(random_program(&cfg, 7), random_program(&cfg, 7));
        assert_ne!(random_program(&cfg, 7), random_program(&cfg, 8));
    }

    #[test]
    fn bounds_respected() {
        let cfg = RandomConfig::default();
        for seed in 0..1000 {
            let (p, q) = random_program(&cfg, seed);
            let sig = p.signature_with(&q).unwrap();
            assert!(p.is_datalog() && q.is_datalog());
            assert!(sig.len() <= cfg.max_preds);
            assert!(sig.values().all(|&n| n <= cfg.max_arity));
            assert!(!p.is_empty() && p.len() <= cfg.max_clauses);
            assert!(p.clauses().iter().all(|c| c.body.len() <= cfg.max_body));
            assert!(p.constants().len() <= cfg.const_count);
            assert!(p.predicates().contains_key(&q.atoms[0].pred));
        }
    }

    #[test]
    fn corpus_is_often_recursive() {
        let cfg = RandomConfig::default();
        let recursive = (0..1000)
            .filter(|&s| is_recursive(&random_program(&cfg, s).0))
            .count();
        assert!(recursive >= 300, "{recursive} of 1000 recursive");
    }

    #[test]
    fn recursion_detection() {
        let p = crate::parser::parse_program("a(X) :- b(X).\nb(X) :- a(X).").unwrap();
        assert!(is_recursive(&p));
        let p = crate::parser::parse_program("a(X) :- b(X).\nb(c).").unwrap();
        assert!(!is_recursive(&p));
    }
}
