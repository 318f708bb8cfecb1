//! The magic transformation, its variants, and the adorned pipeline.
//!
//! For a program `P` and an atomic query `Q`, the magic program contains
//!
//! 1. `H :- pre_H, B1, ..., Bn` for each clause `H :- B1, ..., Bn` of `P`,
//! 2. `pre_Bi :- pre_H, B1, ..., B(i-1)` for each such clause and each `i`,
//! 3. the seed `pre_Q.`
//!
//! where `pre_A` is the magic template of `A`: the atom over the magic copy of
//! `A`'s predicate keeping only the selected argument positions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::Error;
use crate::syntax::{Adornment, Atom, Clause, Pred, Program, Query, Term, Var};

/// Selected argument positions (1-based, strictly increasing) per predicate.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SelectionMap {
    selected: BTreeMap<Pred, Vec<usize>>,
}

impl SelectionMap {
    pub fn new() -> Self {
        SelectionMap::default()
    }

    /// Every position of every predicate in the signature.
    pub fn all_positions(signature: &BTreeMap<Pred, usize>) -> Self {
        SelectionMap {
            selected: signature
                .iter()
                .map(|(p, &n)| (p.clone(), (1..=n).collect()))
                .collect(),
        }
    }

    /// No positions at all: every magic predicate is propositional.
    pub fn no_positions(signature: &BTreeMap<Pred, usize>) -> Self {
        SelectionMap {
            selected: signature.keys().map(|p| (p.clone(), Vec::new())).collect(),
        }
    }

    /// Sets the positions of one predicate. Positions are sorted and
    /// deduplicated; range is checked by [`SelectionMap::validate`].
    pub fn select(&mut self, pred: Pred, positions: impl IntoIterator<Item = usize>) {
        let set: BTreeSet<usize> = positions.into_iter().collect();
        self.selected.insert(pred, set.into_iter().collect());
    }

    pub fn with(mut self, pred: Pred, positions: impl IntoIterator<Item = usize>) -> Self {
        self.select(pred, positions);
        self
    }

    pub fn positions(&self, pred: &Pred) -> Option<&[usize]> {
        self.selected.get(pred).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pred, &Vec<usize>)> {
        self.selected.iter()
    }

    /// Adds all-position entries for predicates of `signature` not yet covered.
    pub fn complete_with_all(&mut self, signature: &BTreeMap<Pred, usize>) {
        for (p, &n) in signature {
            self.selected
                .entry(p.clone())
                .or_insert_with(|| (1..=n).collect());
        }
    }

    /// Checks coverage of `signature` and that every position is in range.
    pub fn validate(&self, signature: &BTreeMap<Pred, usize>) -> Result<(), Error> {
        for (pred, &arity) in signature {
            let positions = self
                .selected
                .get(pred)
                .ok_or_else(|| Error::UnknownPredicate(pred.to_string()))?;
            check_positions(pred, positions, arity)?;
        }
        Ok(())
    }
}

fn check_positions(pred: &Pred, positions: &[usize], arity: usize) -> Result<(), Error> {
    if let Some(bad) = positions.iter().find(|&&i| i == 0 || i > arity) {
        return Err(Error::IllegalSelection {
            pred: pred.to_string(),
            reason: format!("position {bad} outside 1..={arity}"),
        });
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::IllegalSelection {
            pred: pred.to_string(),
            reason: "positions must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// Adds `pre_Bj` to the body of the clause generated for `B_i` of source
/// clause `clause` (0-based). `i` ranges over `1..=n+1`, where `n+1` denotes
/// the guarded copy of the clause itself; `j < i`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
pub struct Supplement {
    pub clause: usize,
    pub i: usize,
    pub j: usize,
}

/// Variations of the transformation that preserve its correctness.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct VariantFlags {
    /// Omit `pre_H` from the guarded copies of the clauses.
    pub drop_pre_head: bool,
    /// Body positions (1-based, within `pre_H, B1, ..., B(i-1)`) to delete
    /// from the call-propagation clause keyed by (source clause, i).
    pub body_prune: BTreeMap<(usize, usize), BTreeSet<usize>>,
    pub supplementary: Vec<Supplement>,
}

impl VariantFlags {
    pub fn is_default(&self) -> bool {
        *self == VariantFlags::default()
    }

    pub fn supplementary_only(&self) -> bool {
        !self.drop_pre_head && self.body_prune.is_empty()
    }

    /// Every admissible supplement `pre_Bj` for every clause of `p`.
    pub fn full_supplementary(p: &Program) -> Self {
        let mut supplementary = Vec::new();
        for (k, c) in p.clauses().iter().enumerate() {
            for i in 1..=c.body.len() + 1 {
                for j in 1..i {
                    supplementary.push(Supplement { clause: k, i, j });
                }
            }
        }
        VariantFlags {
            supplementary,
            ..VariantFlags::default()
        }
    }

    fn validate(&self, p: &Program) -> Result<(), Error> {
        let body_len = |k: usize| {
            p.clauses()
                .get(k)
                .map(|c| c.body.len())
                .ok_or_else(|| Error::IllegalVariant(format!("no source clause {}", k + 1)))
        };
        for (&(k, i), positions) in &self.body_prune {
            let n = body_len(k)?;
            if i == 0 || i > n {
                return Err(Error::IllegalVariant(format!(
                    "clause {} has no body atom {i} to prune for",
                    k + 1
                )));
            }
            if let Some(bad) = positions.iter().find(|&&pos| pos == 0 || pos > i) {
                return Err(Error::IllegalVariant(format!(
                    "prune position {bad} outside the body of the clause for atom {i} of clause {}",
                    k + 1
                )));
            }
        }
        for s in &self.supplementary {
            let n = body_len(s.clause)?;
            if s.i == 0 || s.i > n + 1 || s.j == 0 || s.j >= s.i {
                return Err(Error::IllegalVariant(format!(
                    "supplement ({}, {}, {}) needs 1 <= j < i <= body length + 1",
                    s.clause + 1,
                    s.i,
                    s.j
                )));
            }
        }
        Ok(())
    }
}

/// Which rule of the transformation produced a clause.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Provenance {
    /// Guarded copy of source clause `source_clause` (0-based).
    Case1 { source_clause: usize },
    /// Call propagation for body atom `position` (1-based) of the source clause.
    Case2 { source_clause: usize, position: usize },
    Seed,
}

impl Provenance {
    pub fn comment(&self) -> String {
        match self {
            Provenance::Case1 { source_clause } => format!("case1 from clause {}", source_clause + 1),
            Provenance::Case2 {
                source_clause,
                position,
            } => format!("case2 from clause {}, i = {position}", source_clause + 1),
            Provenance::Seed => "seed".into(),
        }
    }
}

/// JSON form: `{"case": 1|2|"seed", "source_clause": k, "i": i}` with 1-based
/// clause numbers.
impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match *self {
            Provenance::Case1 { source_clause } => {
                map.serialize_entry("case", &1)?;
                map.serialize_entry("source_clause", &(source_clause + 1))?;
            }
            Provenance::Case2 {
                source_clause,
                position,
            } => {
                map.serialize_entry("case", &2)?;
                map.serialize_entry("source_clause", &(source_clause + 1))?;
                map.serialize_entry("i", &position)?;
            }
            Provenance::Seed => map.serialize_entry("case", "seed")?,
        }
        map.end()
    }
}

#[derive(Clone, Debug)]
pub struct MagicProgram {
    pub program: Program,
    pub provenance: Vec<Provenance>,
    pub selection: SelectionMap,
    pub variants: VariantFlags,
    /// The atomic query the program was built for.
    pub query: Atom,
}

impl MagicProgram {
    pub fn seed(&self) -> &Clause {
        let idx = self
            .provenance
            .iter()
            .position(|p| *p == Provenance::Seed)
            .expect("magic program has a seed clause");
        &self.program.clauses()[idx]
    }

    /// Clauses paired with their provenance, in generation order.
    pub fn annotated(&self) -> impl Iterator<Item = (&Clause, &Provenance)> {
        self.program.clauses().iter().zip(&self.provenance)
    }

    /// Rendered program with a trailing provenance comment on each clause.
    pub fn render_annotated(&self) -> String {
        let mut out = String::new();
        for (c, p) in self.annotated() {
            let _ = writeln!(out, "{c}  % {}", p.comment());
        }
        out
    }

    /// Replaces the clause list, e.g. for mutation tests.
    pub fn with_program(&self, program: Program, provenance: Vec<Provenance>) -> Self {
        MagicProgram {
            program,
            provenance,
            ..self.clone()
        }
    }
}

/// `pre_A`: the magic atom keeping the selected arguments of `a`, in order.
pub fn magic_template(a: &Atom, sel: &SelectionMap) -> Result<Atom, Error> {
    let positions = sel
        .positions(&a.pred)
        .ok_or_else(|| Error::UnknownPredicate(a.pred.to_string()))?;
    check_positions(&a.pred, positions, a.arity())?;
    Ok(Atom::new(
        a.pred.magic(),
        positions.iter().map(|&i| a.args[i - 1].clone()).collect(),
    ))
}

pub fn magic_transform(
    p: &Program,
    q: &Query,
    sel: &SelectionMap,
    variants: &VariantFlags,
) -> Result<MagicProgram, Error> {
    let query = q.as_atom()?.clone();
    if let Some(a) = q
        .atoms
        .iter()
        .chain(p.clauses().iter().flat_map(|c| c.atoms()))
        .find(|a| a.pred.is_magic())
    {
        return Err(Error::MagicInInput(a.pred.to_string()));
    }
    sel.validate(&p.signature_with(q)?)?;
    variants.validate(p)?;

    let mut clauses = Vec::new();
    let mut provenance = Vec::new();
    for (k, clause) in p.clauses().iter().enumerate() {
        let pre_head = magic_template(&clause.head, sel)?;
        let n = clause.body.len();
        let supplements = |i: usize| -> Result<Vec<Atom>, Error> {
            let mut js: Vec<usize> = variants
                .supplementary
                .iter()
                .filter(|s| s.clause == k && s.i == i)
                .map(|s| s.j)
                .collect();
            js.sort_unstable();
            js.dedup();
            js.into_iter()
                .map(|j| magic_template(&clause.body[j - 1], sel))
                .collect()
        };

        let mut guarded = Vec::with_capacity(n + 1);
        if !variants.drop_pre_head {
            guarded.push(pre_head.clone());
        }
        guarded.extend(clause.body.iter().cloned());
        guarded.extend(supplements(n + 1)?);
        clauses.push(Clause::new(clause.head.clone(), guarded));
        provenance.push(Provenance::Case1 { source_clause: k });

        for i in 1..=n {
            let pruned = variants.body_prune.get(&(k, i));
            let mut body: Vec<Atom> = std::iter::once(pre_head.clone())
                .chain(clause.body[..i - 1].iter().cloned())
                .enumerate()
                .filter(|(pos, _)| pruned.is_none_or(|set| !set.contains(&(pos + 1))))
                .map(|(_, a)| a)
                .collect();
            body.extend(supplements(i)?);
            clauses.push(Clause::new(magic_template(&clause.body[i - 1], sel)?, body));
            provenance.push(Provenance::Case2 {
                source_clause: k,
                position: i,
            });
        }
    }
    clauses.push(Clause::fact(magic_template(&query, sel)?));
    provenance.push(Provenance::Seed);

    Ok(MagicProgram {
        program: Program::new(clauses)?,
        provenance,
        selection: sel.clone(),
        variants: variants.clone(),
        query,
    })
}

#[derive(Clone, Debug)]
pub struct AdornedProgram {
    pub program: Program,
    /// Adorned predicate to the predicate it was renamed from.
    pub origin: BTreeMap<Pred, Pred>,
    pub adorned_query: Atom,
}

impl AdornedProgram {
    /// Maps an atom over adorned predicates back to the source predicate.
    pub fn deadorn(&self, a: &Atom) -> Atom {
        let pred = self.origin.get(&a.pred).cloned().unwrap_or_else(|| a.pred.clone());
        Atom::new(pred, a.args.clone())
    }
}

/// Adornment of a query atom: an argument is bound iff it is not a variable,
/// or it is a variable already seen in an earlier bound argument.
fn query_adornment(a: &Atom) -> Adornment {
    let mut bound_vars: BTreeSet<Var> = BTreeSet::new();
    let mut pattern = Vec::with_capacity(a.arity());
    for t in &a.args {
        let bound = match t {
            Term::Var(v) => bound_vars.contains(v),
            _ => true,
        };
        if bound {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            bound_vars.extend(vs);
        }
        pattern.push(bound);
    }
    Adornment(pattern)
}

fn term_bound(t: &Term, bound: &BTreeSet<Var>) -> bool {
    let mut vs = Vec::new();
    t.collect_vars(&mut vs);
    vs.iter().all(|v| bound.contains(v))
}

/// Specializes a clause to a head adornment, passing bindings left to right:
/// a body argument is bound iff all its variables occur in bound head
/// arguments or in any earlier body atom.
fn adorn_clause(c: &Clause, head_ad: &Adornment) -> Clause {
    let mut bound: BTreeSet<Var> = BTreeSet::new();
    for (t, &b) in c.head.args.iter().zip(&head_ad.0) {
        if b {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            bound.extend(vs);
        }
    }
    let mut body = Vec::with_capacity(c.body.len());
    for atom in &c.body {
        let ad = Adornment(atom.args.iter().map(|t| term_bound(t, &bound)).collect());
        body.push(Atom::new(atom.pred.adorned(ad), atom.args.clone()));
        bound.extend(atom.vars());
    }
    Clause::new(
        Atom::new(c.head.pred.adorned(head_ad.clone()), c.head.args.clone()),
        body,
    )
}

pub fn adorn(p: &Program, q: &Query) -> Result<AdornedProgram, Error> {
    let query = q.as_atom()?;
    p.signature_with(q)?;
    let query_ad = query_adornment(query);
    let adorned_query = Atom::new(query.pred.adorned(query_ad.clone()), query.args.clone());

    let mut seen: BTreeSet<(Pred, Adornment)> = BTreeSet::new();
    let mut queue = VecDeque::from([(query.pred.clone(), query_ad)]);
    let mut clauses = Vec::new();
    let mut origin = BTreeMap::new();
    while let Some((pred, ad)) = queue.pop_front() {
        if !seen.insert((pred.clone(), ad.clone())) {
            continue;
        }
        origin.insert(pred.adorned(ad.clone()), pred.clone());
        for (_, c) in p.clauses_for(&pred) {
            let adorned = adorn_clause(c, &ad);
            for b in &adorned.body {
                let key = (b.pred.origin(), b.pred.adornment.clone().expect("adorned"));
                if !seen.contains(&key) {
                    queue.push_back(key);
                }
            }
            clauses.push(adorned);
        }
    }
    Ok(AdornedProgram {
        program: Program::new(clauses)?,
        origin,
        adorned_query,
    })
}

#[derive(Clone, Debug)]
pub struct AdornedMagic {
    pub adorned: AdornedProgram,
    pub magic: MagicProgram,
}

/// Adorns `P` for `Q`, then applies the magic transformation selecting exactly
/// the bound positions of each adorned predicate.
pub fn magic_adorned(p: &Program, q: &Query) -> Result<AdornedMagic, Error> {
    let adorned = adorn(p, q)?;
    let aq = Query::atomic(adorned.adorned_query.clone());
    let mut sel = SelectionMap::new();
    for pred in adorned.program.signature_with(&aq)?.keys() {
        let positions = pred.adornment.as_ref().map(Adornment::bound_positions).unwrap_or_default();
        sel.select(pred.clone(), positions);
    }
    let magic = magic_transform(&adorned.program, &aq, &sel, &VariantFlags::default())?;
    Ok(AdornedMagic { adorned, magic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_query};

    const ANC: &str = "anc(X,Y) :- par(X,Y).\nanc(X,Y) :- par(X,Z), anc(Z,Y).\npar(a,b).\npar(b,c).";

    fn anc_sel() -> SelectionMap {
        SelectionMap::new()
            .with(Pred::new("anc"), [1])
            .with(Pred::new("par"), [1])
    }

    fn texts(m: &MagicProgram) -> Vec<String> {
        m.program.clauses().iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn template_examples() {
        let a = parse_query("anc(a,W)").unwrap().atoms.remove(0);
        assert_eq!(magic_template(&a, &anc_sel()).unwrap().to_string(), "pre_anc(a)");
        let b = parse_query("p(a,b)").unwrap().atoms.remove(0);
        let all = SelectionMap::new().with(Pred::new("p"), [1, 2]);
        assert_eq!(magic_template(&b, &all).unwrap().to_string(), "pre_p(a, b)");
        let none = SelectionMap::new().with(Pred::new("p"), []);
        let t = magic_template(&b, &none).unwrap();
        assert_eq!(t.to_string(), "pre_p");
        assert_eq!(t.arity(), 0);
        assert!(matches!(
            magic_template(&b, &SelectionMap::new()),
            Err(Error::UnknownPredicate(_))
        ));
    }

    #[test]
    fn ancestor_magic_program() {
        let p = parse_program(ANC).unwrap();
        let q = parse_query("anc(a,W)").unwrap();
        let m = magic_transform(&p, &q, &anc_sel(), &VariantFlags::default()).unwrap();
        assert_eq!(m.program.len(), 8);
        let t = texts(&m);
        assert!(t.contains(&"pre_anc(Z) :- pre_anc(X), par(X, Z).".to_string()));
        assert!(t.contains(&"par(a, b) :- pre_par(a).".to_string()));
        assert_eq!(t.last().unwrap(), "pre_anc(a).");
        assert_eq!(m.seed().to_string(), "pre_anc(a).");
    }

    #[test]
    fn single_fact_program() {
        let p = parse_program("p(a).").unwrap();
        let q = parse_query("p(X)").unwrap();
        let sel = SelectionMap::new().with(Pred::new("p"), [1]);
        let m = magic_transform(&p, &q, &sel, &VariantFlags::default()).unwrap();
        assert_eq!(texts(&m), ["p(a) :- pre_p(a).", "pre_p(X)."]);
        assert_eq!(m.provenance, [Provenance::Case1 { source_clause: 0 }, Provenance::Seed]);
    }

    #[test]
    fn non_atomic_query_rejected() {
        let p = parse_program("p(a).").unwrap();
        let q = parse_query("p(X), p(Y)").unwrap();
        let sel = SelectionMap::new().with(Pred::new("p"), [1]);
        assert!(matches!(
            magic_transform(&p, &q, &sel, &VariantFlags::default()),
            Err(Error::NonAtomicQuery(2))
        ));
    }

    #[test]
    fn selection_out_of_range_rejected() {
        let p = parse_program("p(a).").unwrap();
        let q = parse_query("p(X)").unwrap();
        let sel = SelectionMap::new().with(Pred::new("p"), [2]);
        assert!(matches!(
            magic_transform(&p, &q, &sel, &VariantFlags::default()),
            Err(Error::IllegalSelection { .. })
        ));
    }

    #[test]
    fn variants_apply() {
        let p = parse_program(ANC).unwrap();
        let q = parse_query("anc(a,W)").unwrap();
        let flags = VariantFlags {
            drop_pre_head: true,
            body_prune: BTreeMap::from([((1, 2), BTreeSet::from([1]))]),
            supplementary: vec![Supplement { clause: 1, i: 3, j: 2 }],
        };
        let m = magic_transform(&p, &q, &anc_sel(), &flags).unwrap();
        let t = texts(&m);
        assert_eq!(t[0], "anc(X, Y) :- par(X, Y).");
        assert_eq!(t[2], "anc(X, Y) :- par(X, Z), anc(Z, Y), pre_anc(Z).");
        assert_eq!(t[4], "pre_anc(Z) :- par(X, Z).");
    }

    #[test]
    fn illegal_variants_rejected() {
        let p = parse_program(ANC).unwrap();
        let q = parse_query("anc(a,W)").unwrap();
        let bad_supp = VariantFlags {
            supplementary: vec![Supplement { clause: 1, i: 2, j: 2 }],
            ..VariantFlags::default()
        };
        assert!(matches!(
            magic_transform(&p, &q, &anc_sel(), &bad_supp),
            Err(Error::IllegalVariant(_))
        ));
        let bad_prune = VariantFlags {
            body_prune: BTreeMap::from([((1, 1), BTreeSet::from([2]))]),
            ..VariantFlags::default()
        };
        assert!(matches!(
            magic_transform(&p, &q, &anc_sel(), &bad_prune),
            Err(Error::IllegalVariant(_))
        ));
    }

    #[test]
    fn provenance_json() {
        let json = serde_json::to_string(&[
            Provenance::Case1 { source_clause: 2 },
            Provenance::Case2 {
                source_clause: 0,
                position: 2,
            },
            Provenance::Seed,
        ])
        .unwrap();
        assert_eq!(
            json,
            r#"[{"case":1,"source_clause":3},{"case":2,"source_clause":1,"i":2},{"case":"seed"}]"#
        );
    }

    #[test]
    fn adorn_ancestor() {
        let p = parse_program(ANC).unwrap();
        let ad = adorn(&p, &parse_query("anc(a,W)").unwrap()).unwrap();
        assert_eq!(ad.adorned_query.to_string(), "anc_bf(a, W)");
        let t: Vec<String> = ad.program.clauses().iter().map(|c| c.to_string()).collect();
        assert!(t.contains(&"anc_bf(X, Y) :- par_bf(X, Z), anc_bf(Z, Y).".to_string()));
        assert!(t.contains(&"par_bf(a, b).".to_string()));
    }

    #[test]
    fn adorn_trivial_cases() {
        let p = parse_program("p(X).").unwrap();
        let ad = adorn(&p, &parse_query("p(W)").unwrap()).unwrap();
        assert_eq!(ad.program.to_string(), "p_f(X).\n");
        let p = parse_program("p(a).").unwrap();
        let ad = adorn(&p, &parse_query("p(a)").unwrap()).unwrap();
        assert_eq!(ad.program.to_string(), "p_b(a).\n");
        assert_eq!(ad.origin.len(), 1);
    }

    #[test]
    fn repeated_query_variable_stays_free() {
        let a = parse_query("p(X, X, a, f(Y), Y)").unwrap().atoms.remove(0);
        assert_eq!(query_adornment(&a).to_string(), "ffbbb");
    }

    #[test]
    fn magic_adorned_examples() {
        let p = parse_program(ANC).unwrap();
        let am = magic_adorned(&p, &parse_query("anc(a,W)").unwrap()).unwrap();
        assert_eq!(am.magic.seed().to_string(), "pre_anc_bf(a).");

        let p = parse_program("p(a).").unwrap();
        let am = magic_adorned(&p, &parse_query("p(X)").unwrap()).unwrap();
        assert_eq!(am.magic.program.to_string(), "p_f(a) :- pre_p_f.\npre_p_f.\n");
    }
}
