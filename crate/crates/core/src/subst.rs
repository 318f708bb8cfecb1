//! Substitutions, unification with occurs check, renaming apart and grounding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::Error;
use crate::syntax::{Atom, Clause, Query, Symbol, Term, Var};

/// A finite map from variables to terms. Bindings `X -> X` are never stored.
///
/// Substitutions produced by [`mgu`] are idempotent. [`compose`] returns the
/// usual composition, which is idempotent whenever its arguments come from a
/// derivation with variables renamed apart.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    /// Builds a substitution from raw pairs, dropping identity bindings.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Self {
        let bindings = pairs
            .into_iter()
            .filter(|(v, t)| !matches!(t, Term::Var(w) if w == v))
            .collect();
        Substitution { bindings }
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.bindings.keys()
    }

    pub fn is_idempotent(&self) -> bool {
        self.bindings
            .values()
            .all(|t| self.bindings.keys().all(|v| !t.occurs(v)))
    }

    /// Keeps only the bindings of the given variables.
    pub fn restrict(&self, vars: &[Var]) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }

    pub fn term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Const(_) => t.clone(),
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| self.term(a)).collect())
            }
        }
    }

    pub fn atom(&self, a: &Atom) -> Atom {
        if self.is_empty() {
            return a.clone();
        }
        Atom::new(a.pred.clone(), a.args.iter().map(|t| self.term(t)).collect())
    }

    pub fn atoms(&self, atoms: &[Atom]) -> Vec<Atom> {
        atoms.iter().map(|a| self.atom(a)).collect()
    }

    pub fn query(&self, q: &Query) -> Query {
        Query::new(self.atoms(&q.atoms))
    }

    pub fn clause(&self, c: &Clause) -> Clause {
        Clause::new(self.atom(&c.head), self.atoms(&c.body))
    }

    /// Adds `v -> t` to an idempotent substitution, keeping it idempotent.
    /// `t` must already be fully instantiated by `self` and must not contain `v`.
    fn bind(&mut self, v: Var, t: Term) {
        let single = Substitution {
            bindings: BTreeMap::from([(v.clone(), t.clone())]),
        };
        for range in self.bindings.values_mut() {
            if range.occurs(&v) {
                *range = single.term(range);
            }
        }
        self.bindings.insert(v, t);
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} = {t}")?;
        }
        write!(f, "}}")
    }
}

/// Most general unifier of two atoms, with occurs check. `None` on a
/// predicate/arity clash or when no unifier exists.
pub fn mgu(a1: &Atom, a2: &Atom) -> Option<Substitution> {
    if a1.pred != a2.pred || a1.arity() != a2.arity() {
        return None;
    }
    let mut s = Substitution::new();
    let mut stack: Vec<(Term, Term)> = a1
        .args
        .iter()
        .cloned()
        .zip(a2.args.iter().cloned())
        .collect();
    stack.reverse();
    while let Some((l, r)) = stack.pop() {
        let l = s.term(&l);
        let r = s.term(&r);
        match (l, r) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.occurs(&x) {
                    return None;
                }
                s.bind(x, t);
            }
            (Term::Const(c), Term::Const(d)) => {
                if c != d {
                    return None;
                }
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.into_iter().zip(ys).rev());
            }
            _ => return None,
        }
    }
    Some(s)
}

/// Unifies two equal-length atom sequences pairwise.
pub fn mgu_all(xs: &[Atom], ys: &[Atom]) -> Option<Substitution> {
    if xs.len() != ys.len() {
        return None;
    }
    let mut s = Substitution::new();
    for (x, y) in xs.iter().zip(ys) {
        let step = mgu(&s.atom(x), &s.atom(y))?;
        s = compose(&s, &step);
    }
    Some(s)
}

/// `compose(s1, s2)` applies `s1` first, then `s2`.
pub fn compose(s1: &Substitution, s2: &Substitution) -> Substitution {
    let mut bindings: BTreeMap<Var, Term> = BTreeMap::new();
    for (v, t) in &s1.bindings {
        let t = s2.term(t);
        if !matches!(&t, Term::Var(w) if w == v) {
            bindings.insert(v.clone(), t);
        }
    }
    for (v, t) in &s2.bindings {
        if !s1.bindings.contains_key(v) {
            bindings.insert(v.clone(), t.clone());
        }
    }
    Substitution { bindings }
}

/// Variable assignment built up by one-way matching.
pub type Matcher = BTreeMap<Var, Term>;

/// One-way matching: extends `s` over the pattern's variables so that
/// `s(pattern) == target`.
pub fn match_term(pattern: &Term, target: &Term, s: &mut Matcher) -> bool {
    match (pattern, target) {
        (Term::Var(v), _) => match s.get(v) {
            Some(bound) => bound == target,
            None => {
                s.insert(v.clone(), target.clone());
                true
            }
        },
        (Term::Const(c), Term::Const(d)) => c == d,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, s))
        }
        _ => false,
    }
}

pub fn match_atom(pattern: &Atom, target: &Atom, s: &mut Matcher) -> bool {
    pattern.pred == target.pred
        && pattern.arity() == target.arity()
        && pattern
            .args
            .iter()
            .zip(&target.args)
            .all(|(p, t)| match_term(p, t, s))
}

/// True iff `head <- body` is an instance of `clause`.
pub fn is_clause_instance(clause: &Clause, head: &Atom, body: &[Atom]) -> bool {
    if clause.body.len() != body.len() {
        return false;
    }
    let mut s = Matcher::new();
    match_atom(&clause.head, head, &mut s)
        && clause
            .body
            .iter()
            .zip(body)
            .all(|(p, t)| match_atom(p, t, &mut s))
}

/// Produces fresh variants of clauses. Fresh variables keep the base name and
/// get a generation number from a monotone counter, so renaming is
/// deterministic given the counter state.
#[derive(Clone, Debug)]
pub struct Renamer {
    next: u32,
}

impl Default for Renamer {
    fn default() -> Self {
        Renamer { next: 1 }
    }
}

impl Renamer {
    pub fn new() -> Self {
        Renamer::default()
    }

    pub fn starting_at(next: u32) -> Self {
        Renamer { next: next.max(1) }
    }

    pub fn rename_apart(&mut self, c: &Clause, avoid: &BTreeSet<Var>) -> Clause {
        let vars = c.vars();
        if vars.is_empty() {
            return c.clone();
        }
        loop {
            let generation = self.next;
            self.next += 1;
            let renaming = Substitution::from_pairs(
                vars.iter()
                    .map(|v| (v.clone(), Term::Var(v.renamed(generation)))),
            );
            if renaming
                .bindings
                .values()
                .all(|t| matches!(t, Term::Var(w) if !avoid.contains(w)))
            {
                return renaming.clause(c);
            }
        }
    }
}

/// Stand-alone renaming with a fresh counter.
pub fn rename_apart(c: &Clause, avoid: &BTreeSet<Var>) -> Clause {
    Renamer::new().rename_apart(c, avoid)
}

/// Calls `f` with every assignment of `n` slots to indices `0..k`, in
/// lexicographic order. With `n == 0` there is exactly one (empty) assignment.
pub fn for_each_assignment(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if n > 0 && k == 0 {
        return;
    }
    let mut digits = vec![0usize; n];
    loop {
        f(&digits);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < k {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// All ground instances of a Datalog clause over `universe`, ordered
/// lexicographically by the values of the clause variables in first-occurrence
/// order.
pub fn ground_instances(c: &Clause, universe: &BTreeSet<Symbol>) -> Result<Vec<Clause>, Error> {
    if !c.is_datalog() {
        return Err(Error::NonDatalog(c.to_string()));
    }
    let vars = c.vars();
    let consts: Vec<&Symbol> = universe.iter().collect();
    let mut out = Vec::new();
    for_each_assignment(vars.len(), consts.len(), |digits| {
        let s = Substitution::from_pairs(
            vars.iter()
                .zip(digits)
                .map(|(v, &d)| (v.clone(), Term::Const(consts[d].clone()))),
        );
        out.push(s.clause(c));
    });
    Ok(out)
}

/// Ground instances of an atom over `universe`, in lexicographic order.
pub fn ground_atom_instances(a: &Atom, universe: &BTreeSet<Symbol>) -> Vec<Atom> {
    let vars = a.vars();
    let consts: Vec<&Symbol> = universe.iter().collect();
    let mut out = Vec::new();
    for_each_assignment(vars.len(), consts.len(), |digits| {
        let s = Substitution::from_pairs(
            vars.iter()
                .zip(digits)
                .map(|(v, &d)| (v.clone(), Term::Const(consts[d].clone()))),
        );
        out.push(s.atom(a));
    });
    out
}

/// Renames the variables of a conjunction to `_0, _1, ...` in first-occurrence
/// order. Two conjunctions are variants iff their canonical forms are equal.
pub fn canonical_atoms(atoms: &[Atom]) -> Vec<Atom> {
    let mut vars = Vec::new();
    atoms.iter().for_each(|a| a.collect_vars(&mut vars));
    // Application is simultaneous, so overlapping names like `_0` are safe.
    let s = Substitution::from_pairs(
        vars.into_iter()
            .enumerate()
            .map(|(i, v)| (v, Term::Var(Var::new(&format!("_{i}"))))),
    );
    s.atoms(atoms)
}

pub fn canonical_atom(a: &Atom) -> Atom {
    canonical_atoms(std::slice::from_ref(a)).remove(0)
}

pub fn is_variant(a: &[Atom], b: &[Atom]) -> bool {
    canonical_atoms(a) == canonical_atoms(b)
}

/// True iff `instance` is an instance of `general`.
pub fn is_instance_of(instance: &Atom, general: &Atom) -> bool {
    let mut s = Matcher::new();
    match_atom(general, instance, &mut s)
}
