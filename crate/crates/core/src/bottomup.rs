//! Ground Datalog evaluation: explicit grounding over a finite universe,
//! naive and semi-naive least-fixpoint iteration, entailment, and proof trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::Error;
use crate::subst::{for_each_assignment, is_clause_instance};
use crate::syntax::{sym, Atom, Clause, Pred, Program, Query, Symbol, Term};
use crate::topdown::{ld_solve, Budget};
use crate::transform::MagicProgram;

/// Name of the constant added when a program and query mention none.
pub const RESERVED_CONSTANT: &str = "c0";

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStrategy {
    Naive,
    #[default]
    SemiNaive,
}

/// All constants of `p` and `q`, or `{c0}` if there are none.
pub fn herbrand_universe(p: &Program, q: &Query) -> Result<BTreeSet<Symbol>, Error> {
    if let Some(c) = p.clauses().iter().find(|c| !c.is_datalog()) {
        return Err(Error::NonDatalog(c.to_string()));
    }
    if !q.is_datalog() {
        return Err(Error::NonDatalog(q.to_string()));
    }
    let mut universe: BTreeSet<Symbol> = p.constants().clone();
    universe.extend(q.constants());
    if universe.is_empty() {
        universe.insert(sym(RESERVED_CONSTANT));
    }
    Ok(universe)
}

#[derive(Clone, Debug)]
struct GroundRule {
    head: usize,
    body: Vec<usize>,
    clause: usize,
}

/// A Datalog program grounded over a finite universe. Ground atoms are
/// numbered densely: each predicate owns a block of `|U|^arity` ids, and the
/// id of `p(c1..cn)` is the block offset plus the base-`|U|` number
/// `c1..cn`.
#[derive(Clone, Debug)]
pub struct GroundProgram {
    universe: Vec<Symbol>,
    const_index: BTreeMap<Symbol, usize>,
    preds: Vec<(Pred, usize)>,
    pred_index: BTreeMap<Pred, usize>,
    offsets: Vec<usize>,
    atom_count: usize,
    rules: Vec<GroundRule>,
}

enum Slot {
    Const(usize),
    Var(usize),
}

impl GroundProgram {
    /// Grounds every clause over `universe` extended with the program's own
    /// constants. `extra` adds predicates (e.g. from a query) to the atom space.
    pub fn new(
        p: &Program,
        universe: &BTreeSet<Symbol>,
        extra: &BTreeMap<Pred, usize>,
    ) -> Result<Self, Error> {
        if let Some(c) = p.clauses().iter().find(|c| !c.is_datalog()) {
            return Err(Error::NonDatalog(c.to_string()));
        }
        let mut all: BTreeSet<Symbol> = universe.clone();
        all.extend(p.constants().iter().cloned());
        let universe: Vec<Symbol> = all.into_iter().collect();
        let const_index = universe
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let mut signature = p.predicates().clone();
        for (pred, &n) in extra {
            signature.entry(pred.clone()).or_insert(n);
        }
        let preds: Vec<(Pred, usize)> = signature.into_iter().collect();
        let pred_index = preds
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.clone(), i))
            .collect();
        let mut offsets = Vec::with_capacity(preds.len());
        let mut atom_count = 0usize;
        for (_, arity) in &preds {
            offsets.push(atom_count);
            atom_count += universe.len().pow(*arity as u32);
        }
        let mut g = GroundProgram {
            universe,
            const_index,
            preds,
            pred_index,
            offsets,
            atom_count,
            rules: Vec::new(),
        };
        for (k, clause) in p.clauses().iter().enumerate() {
            g.ground_clause(k, clause);
        }
        Ok(g)
    }

    fn ground_clause(&mut self, k: usize, clause: &Clause) {
        let vars = clause.vars();
        let template = |a: &Atom| -> (usize, Vec<Slot>) {
            let slots = a
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Slot::Var(vars.iter().position(|w| w == v).expect("clause var")),
                    Term::Const(c) => Slot::Const(self.const_index[c]),
                    Term::Compound(..) => unreachable!("checked Datalog"),
                })
                .collect();
            (self.pred_index[&a.pred], slots)
        };
        let head = template(&clause.head);
        let body: Vec<_> = clause.body.iter().map(template).collect();
        let n = self.universe.len();
        let mut rules = Vec::new();
        for_each_assignment(vars.len(), n, |digits| {
            let id = |(p, slots): &(usize, Vec<Slot>)| {
                let local = slots.iter().fold(0, |acc, s| {
                    let c = match s {
                        Slot::Const(c) => *c,
                        Slot::Var(v) => digits[*v],
                    };
                    acc * n + c
                });
                self.offsets[*p] + local
            };
            rules.push(GroundRule {
                head: id(&head),
                body: body.iter().map(id).collect(),
                clause: k,
            });
        });
        self.rules.extend(rules);
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn universe(&self) -> BTreeSet<Symbol> {
        self.universe.iter().cloned().collect()
    }

    /// Id of a ground atom over the known predicates and universe.
    pub fn encode(&self, a: &Atom) -> Option<usize> {
        let &p = self.pred_index.get(&a.pred)?;
        if self.preds[p].1 != a.arity() {
            return None;
        }
        let n = self.universe.len();
        let mut local = 0usize;
        for t in &a.args {
            match t {
                Term::Const(c) => local = local * n + *self.const_index.get(c)?,
                _ => return None,
            }
        }
        Some(self.offsets[p] + local)
    }

    pub fn decode(&self, id: usize) -> Atom {
        let p = self.offsets.partition_point(|&o| o <= id) - 1;
        let (pred, arity) = &self.preds[p];
        let n = self.universe.len();
        let mut local = id - self.offsets[p];
        let mut args = vec![Term::Const(sym("")); *arity];
        for slot in args.iter_mut().rev() {
            *slot = Term::Const(self.universe[local % n].clone());
            local /= n;
        }
        Atom::new(pred.clone(), args)
    }

    fn rule_clause(&self, r: &GroundRule) -> Clause {
        Clause::new(
            self.decode(r.head),
            r.body.iter().map(|&b| self.decode(b)).collect(),
        )
    }

    /// Naive iteration `I_k = T_P(I_{k-1})` from the empty set. For each atom
    /// records the round it first appears in and the first rule (in grounding
    /// order) that derived it.
    fn naive(&self) -> Evaluation {
        let mut member = vec![false; self.atom_count];
        let mut fired: Vec<Option<usize>> = vec![None; self.atom_count];
        let mut round_of: Vec<usize> = vec![0; self.atom_count];
        let mut round = 0;
        loop {
            round += 1;
            let mut new: Vec<(usize, usize)> = Vec::new();
            for (ri, r) in self.rules.iter().enumerate() {
                if !member[r.head] && r.body.iter().all(|&b| member[b]) {
                    new.push((r.head, ri));
                }
            }
            if new.is_empty() {
                break;
            }
            for (h, ri) in new {
                if !member[h] && fired[h].is_none() {
                    fired[h] = Some(ri);
                    round_of[h] = round;
                }
            }
            for (h, f) in fired.iter().enumerate() {
                if f.is_some() {
                    member[h] = true;
                }
            }
        }
        Evaluation {
            member,
            fired,
            round_of,
        }
    }

    /// Semi-naive iteration: each round only considers rules with a body atom
    /// derived in the previous round.
    fn semi_naive(&self) -> Vec<bool> {
        let mut uses: Vec<Vec<usize>> = vec![Vec::new(); self.atom_count];
        for (ri, r) in self.rules.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &b in &r.body {
                if seen.insert(b) {
                    uses[b].push(ri);
                }
            }
        }
        let mut member = vec![false; self.atom_count];
        let mut delta: Vec<usize> = Vec::new();
        for r in self.rules.iter().filter(|r| r.body.is_empty()) {
            if !member[r.head] {
                member[r.head] = true;
                delta.push(r.head);
            }
        }
        while !delta.is_empty() {
            let mut next = Vec::new();
            let mut pending = vec![false; self.atom_count];
            for &d in &delta {
                for &ri in &uses[d] {
                    let r = &self.rules[ri];
                    if !member[r.head]
                        && !pending[r.head]
                        && r.body.iter().all(|&b| member[b])
                    {
                        pending[r.head] = true;
                        next.push(r.head);
                    }
                }
            }
            for &h in &next {
                member[h] = true;
            }
            delta = next;
        }
        member
    }

    fn model(&self, member: &[bool], strategy: EvalStrategy) -> GroundModel {
        GroundModel {
            atoms: member
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| self.decode(i))
                .collect(),
            universe: self.universe(),
            strategy,
        }
    }

    pub fn least_model(&self, strategy: EvalStrategy) -> GroundModel {
        match strategy {
            EvalStrategy::Naive => self.model(&self.naive().member, strategy),
            EvalStrategy::SemiNaive => self.model(&self.semi_naive(), strategy),
        }
    }

    /// Ground clause instances, in grounding order.
    pub fn instances(&self) -> impl Iterator<Item = Clause> + '_ {
        self.rules.iter().map(|r| self.rule_clause(r))
    }
}

struct Evaluation {
    member: Vec<bool>,
    fired: Vec<Option<usize>>,
    round_of: Vec<usize>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct GroundModel {
    #[serde(serialize_with = "serialize_atoms")]
    pub atoms: BTreeSet<Atom>,
    #[serde(serialize_with = "serialize_symbols")]
    pub universe: BTreeSet<Symbol>,
    pub strategy: EvalStrategy,
}

impl GroundModel {
    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    /// Atoms of the original namespace.
    pub fn original(&self) -> BTreeSet<Atom> {
        self.atoms.iter().filter(|a| !a.pred.is_magic()).cloned().collect()
    }
}

fn serialize_atoms<S: serde::Serializer>(atoms: &BTreeSet<Atom>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(atoms.iter().map(|a| a.to_string()))
}

fn serialize_symbols<S: serde::Serializer>(syms: &BTreeSet<Symbol>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(syms.iter().map(|c| c.as_ref()))
}

pub fn least_model(
    p: &Program,
    universe: &BTreeSet<Symbol>,
    strategy: EvalStrategy,
) -> Result<GroundModel, Error> {
    Ok(GroundProgram::new(p, universe, &BTreeMap::new())?.least_model(strategy))
}

/// Least model over the program's own Herbrand universe extended by `q`.
pub fn least_model_for(p: &Program, q: &Query, strategy: EvalStrategy) -> Result<GroundModel, Error> {
    least_model(p, &herbrand_universe(p, q)?, strategy)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Entailment {
    True,
    False,
    Unknown,
}

/// `P ⊨ A`. Exact for Datalog programs and ground atoms (least-model
/// membership); otherwise decided by top-down search, which may run out of
/// budget.
pub fn entails(p: &Program, a: &Atom, budget: &Budget) -> Entailment {
    if p.is_datalog() && a.is_ground() && a.is_datalog() {
        let q = Query::atomic(a.clone());
        if let Ok(model) = least_model_for(p, &q, EvalStrategy::SemiNaive) {
            return if model.contains(a) {
                Entailment::True
            } else {
                Entailment::False
            };
        }
    }
    // A universally quantified atom is entailed iff its computed answers
    // include a variant of the atom itself.
    let q = Query::atomic(a.clone());
    let solutions = ld_solve(p, &q, &Budget { max_answers: usize::MAX, ..*budget });
    let target = crate::subst::canonical_atom(a);
    if solutions.answers.iter().any(|ans| ans.atoms[0] == target) {
        Entailment::True
    } else if solutions.complete {
        Entailment::False
    } else {
        Entailment::Unknown
    }
}

/// A finite tree in which every node with its children is an instance of a
/// program clause.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct ProofTree {
    #[serde(serialize_with = "serialize_atom")]
    pub root: Atom,
    pub children: Vec<ProofTree>,
}

fn serialize_atom<S: serde::Serializer>(a: &Atom, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&a.to_string())
}

impl ProofTree {
    pub fn leaf(root: Atom) -> Self {
        ProofTree {
            root,
            children: Vec::new(),
        }
    }

    pub fn node(root: Atom, children: Vec<ProofTree>) -> Self {
        ProofTree { root, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ProofTree::size).sum::<usize>()
    }

    pub fn nodes(&self) -> Vec<&ProofTree> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }

    fn fmt_indent(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(f, "{:width$}{}", "", self.root, width = depth * 2)?;
        for c in &self.children {
            c.fmt_indent(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indent(f, 0)
    }
}

/// First-firing derivations of every atom in the least model, from which
/// proof trees are read off. Children were derived in strictly earlier
/// rounds, so every extracted tree is finite.
pub struct ProofForest {
    ground: GroundProgram,
    eval: Evaluation,
}

impl ProofForest {
    pub fn new(p: &Program, universe: &BTreeSet<Symbol>) -> Result<Self, Error> {
        let ground = GroundProgram::new(p, universe, &BTreeMap::new())?;
        let eval = ground.naive();
        Ok(ProofForest { ground, eval })
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.ground.encode(a).is_some_and(|id| self.eval.member[id])
    }

    pub fn model(&self) -> GroundModel {
        self.ground.model(&self.eval.member, EvalStrategy::Naive)
    }

    /// Round in which `a` was first derived (1-based).
    pub fn round(&self, a: &Atom) -> Option<usize> {
        let id = self.ground.encode(a)?;
        self.eval.member[id].then(|| self.eval.round_of[id])
    }

    /// Index of the program clause whose instance first derived `a`.
    pub fn fired_clause(&self, a: &Atom) -> Option<usize> {
        let id = self.ground.encode(a)?;
        self.eval.fired[id].map(|ri| self.ground.rules[ri].clause)
    }

    pub fn tree(&self, a: &Atom) -> Result<ProofTree, Error> {
        let id = self
            .ground
            .encode(a)
            .filter(|&id| self.eval.member[id])
            .ok_or_else(|| Error::NotEntailed(a.to_string()))?;
        Ok(self.tree_of(id))
    }

    fn tree_of(&self, id: usize) -> ProofTree {
        let rule = &self.ground.rules[self.eval.fired[id].expect("derived atom has a rule")];
        ProofTree::node(
            self.ground.decode(id),
            rule.body.iter().map(|&b| self.tree_of(b)).collect(),
        )
    }
}

/// A proof tree for `a` with respect to `p`, or `NotEntailed` when `a` is
/// not in the model.
pub fn build_proof_tree(p: &Program, a: &Atom, m: &GroundModel) -> Result<ProofTree, Error> {
    if !m.contains(a) {
        return Err(Error::NotEntailed(a.to_string()));
    }
    ProofForest::new(p, &m.universe)?.tree(a)
}

/// True iff every node with its children is an instance of a clause of `p`.
pub fn check_proof_tree(p: &Program, t: &ProofTree) -> bool {
    let children: Vec<Atom> = t.children.iter().map(|c| c.root.clone()).collect();
    p.clauses_for(&t.root.pred)
        .any(|(_, c)| is_clause_instance(c, &t.root, &children))
        && t.children.iter().all(|c| check_proof_tree(p, c))
}

/// Removes every magic-namespace node from a proof tree of a magic program.
/// Original-namespace nodes keep their original-namespace children; the
/// original-namespace subtrees hanging below removed nodes become separate
/// trees. When the root is in the original namespace, its stripped tree comes
/// first.
pub fn strip_magic(magic: &MagicProgram, t: &ProofTree) -> Result<Vec<ProofTree>, Error> {
    if !check_proof_tree(&magic.program, t) {
        return Err(Error::InvalidTree(format!(
            "not a proof tree of the magic program for {}",
            t.root
        )));
    }
    let mut detached = Vec::new();
    let mut out: Vec<ProofTree> = strip(t, &mut detached).into_iter().collect();
    for d in detached {
        if !out.contains(&d) {
            out.push(d);
        }
    }
    Ok(out)
}

fn strip(t: &ProofTree, detached: &mut Vec<ProofTree>) -> Option<ProofTree> {
    if t.root.pred.is_magic() {
        for c in &t.children {
            if let Some(s) = strip(c, detached) {
                detached.push(s);
            }
        }
        None
    } else {
        let children = t.children.iter().filter_map(|c| strip(c, detached)).collect();
        Some(ProofTree::node(t.root.clone(), children))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_query};
    use crate::transform::{magic_transform, SelectionMap, VariantFlags};

    const ANC: &str = "anc(X,Y) :- par(X,Y).\nanc(X,Y) :- par(X,Z), anc(Z,Y).\npar(a,b).\npar(b,c).";

    fn atom(s: &str) -> Atom {
        parse_query(s).unwrap().atoms.remove(0)
    }

    fn names(m: &GroundModel) -> Vec<String> {
        m.atoms.iter().map(|a| a.to_string()).collect()
    }

    fn anc_magic() -> MagicProgram {
        let sel = SelectionMap::new()
            .with(Pred::new("anc"), [1])
            .with(Pred::new("par"), [1]);
        magic_transform(
            &parse_program(ANC).unwrap(),
            &parse_query("anc(a,W)").unwrap(),
            &sel,
            &VariantFlags::default(),
        )
        .unwrap()
    }

    #[test]
    fn universe_examples() {
        let p = parse_program(ANC).unwrap();
        let u = herbrand_universe(&p, &parse_query("anc(a,W)").unwrap()).unwrap();
        assert_eq!(u.iter().map(|s| s.as_ref()).collect::<Vec<_>>(), ["a", "b", "c"]);
        let p = parse_program("p(X).").unwrap();
        let u = herbrand_universe(&p, &parse_query("p(Y)").unwrap()).unwrap();
        assert_eq!(u.iter().map(|s| s.as_ref()).collect::<Vec<_>>(), ["c0"]);
        let p = parse_program("p(a).").unwrap();
        let u = herbrand_universe(&p, &parse_query("p(b)").unwrap()).unwrap();
        assert_eq!(u.len(), 2);
        let p = parse_program("p(f(a)).").unwrap();
        assert!(matches!(
            herbrand_universe(&p, &parse_query("p(X)").unwrap()),
            Err(Error::NonDatalog(_))
        ));
    }

    #[test]
    fn encode_decode_inverse() {
        let p = parse_program("r(X,Y,Z) :- s(X), s(Y), s(Z). s(a). s(b). s(c). t.").unwrap();
        let g = GroundProgram::new(&p, &BTreeSet::new(), &BTreeMap::new()).unwrap();
        assert_eq!(g.atom_count(), 27 + 3 + 1);
        for id in 0..g.atom_count() {
            assert_eq!(g.encode(&g.decode(id)), Some(id));
        }
    }

    #[test]
    fn ancestor_model() {
        let p = parse_program(ANC).unwrap();
        let u = herbrand_universe(&p, &parse_query("anc(a,W)").unwrap()).unwrap();
        for strategy in [EvalStrategy::Naive, EvalStrategy::SemiNaive] {
            let m = least_model(&p, &u, strategy).unwrap();
            assert_eq!(
                names(&m),
                ["anc(a, b)", "anc(a, c)", "anc(b, c)", "par(a, b)", "par(b, c)"]
            );
        }
    }

    #[test]
    fn ancestor_magic_model() {
        let m = anc_magic();
        let u = herbrand_universe(&parse_program(ANC).unwrap(), &parse_query("anc(a,W)").unwrap()).unwrap();
        let model = least_model(&m.program, &u, EvalStrategy::SemiNaive).unwrap();
        let expected: BTreeSet<String> = [
            "pre_anc(a)", "pre_par(a)", "par(a, b)", "pre_anc(b)", "pre_par(b)", "par(b, c)",
            "pre_anc(c)", "pre_par(c)", "anc(b, c)", "anc(a, c)", "anc(a, b)",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(names(&model).into_iter().collect::<BTreeSet<_>>(), expected);
        let naive = least_model(&m.program, &u, EvalStrategy::Naive).unwrap();
        assert_eq!(naive.atoms, model.atoms);
        let forest = ProofForest::new(&m.program, &u).unwrap();
        for a in &model.atoms {
            assert!(check_proof_tree(&m.program, &forest.tree(a).unwrap()));
        }
    }

    #[test]
    fn empty_program_model() {
        let m = least_model(&Program::empty(), &BTreeSet::from([sym("a")]), EvalStrategy::Naive).unwrap();
        assert!(m.atoms.is_empty());
    }

    #[test]
    fn entailment_examples() {
        let p = parse_program(ANC).unwrap();
        let b = Budget::new(50, 50);
        assert_eq!(entails(&p, &atom("anc(a,c)"), &b), Entailment::True);
        assert_eq!(entails(&p, &atom("anc(c,a)"), &b), Entailment::False);
        assert_eq!(entails(&parse_program("p(a).").unwrap(), &atom("p(a)"), &b), Entailment::True);
    }

    #[test]
    fn entailment_of_non_ground_and_non_datalog() {
        let b = Budget::new(20, 20);
        let p = parse_program("p(X).").unwrap();
        assert_eq!(entails(&p, &atom("p(Y)"), &b), Entailment::True);
        let p = parse_program("p(a).").unwrap();
        assert_eq!(entails(&p, &atom("p(Y)"), &b), Entailment::False);
        let p = parse_program("nat(z). nat(s(X)) :- nat(X).").unwrap();
        assert_eq!(entails(&p, &atom("nat(s(s(z)))"), &b), Entailment::True);
        let p = parse_program("q(X) :- q(f(X)).").unwrap();
        assert_eq!(entails(&p, &atom("q(a)"), &b), Entailment::Unknown);
    }

    #[test]
    fn proof_tree_examples() {
        let p = parse_program(ANC).unwrap();
        let m = least_model_for(&p, &parse_query("anc(a,W)").unwrap(), EvalStrategy::SemiNaive).unwrap();
        let t = build_proof_tree(&p, &atom("anc(a,c)"), &m).unwrap();
        let expected = ProofTree::node(
            atom("anc(a,c)"),
            vec![
                ProofTree::leaf(atom("par(a,b)")),
                ProofTree::node(atom("anc(b,c)"), vec![ProofTree::leaf(atom("par(b,c)"))]),
            ],
        );
        assert_eq!(t, expected);
        assert!(check_proof_tree(&p, &t));

        let fact = parse_program("p(a).").unwrap();
        let fm = least_model(&fact, &BTreeSet::new(), EvalStrategy::Naive).unwrap();
        let t = build_proof_tree(&fact, &atom("p(a)"), &fm).unwrap();
        assert_eq!(t, ProofTree::leaf(atom("p(a)")));

        assert!(matches!(
            build_proof_tree(&p, &atom("anc(c,a)"), &m),
            Err(Error::NotEntailed(_))
        ));
    }

    #[test]
    fn invalid_trees_rejected() {
        let fact = parse_program("p(a).").unwrap();
        assert!(!check_proof_tree(&fact, &ProofTree::leaf(atom("p(b)"))));

        let p = parse_program(ANC).unwrap();
        let wrong_children = ProofTree::node(
            atom("anc(a,c)"),
            vec![ProofTree::leaf(atom("par(a,c)"))],
        );
        assert!(!check_proof_tree(&p, &wrong_children));
        let swapped = ProofTree::node(
            atom("anc(a,c)"),
            vec![
                ProofTree::node(atom("anc(b,c)"), vec![ProofTree::leaf(atom("par(b,c)"))]),
                ProofTree::leaf(atom("par(a,b)")),
            ],
        );
        assert!(!check_proof_tree(&p, &swapped));
    }

    #[test]
    fn strip_examples() {
        let m = anc_magic();
        let p = parse_program(ANC).unwrap();
        let u = herbrand_universe(&p, &parse_query("anc(a,W)").unwrap()).unwrap();
        let forest = ProofForest::new(&m.program, &u).unwrap();

        let stripped = strip_magic(&m, &forest.tree(&atom("anc(a,c)")).unwrap()).unwrap();
        let expected = ProofTree::node(
            atom("anc(a,c)"),
            vec![
                ProofTree::leaf(atom("par(a,b)")),
                ProofTree::node(atom("anc(b,c)"), vec![ProofTree::leaf(atom("par(b,c)"))]),
            ],
        );
        assert_eq!(stripped[0], expected);
        assert!(stripped.iter().all(|t| check_proof_tree(&p, t)));

        let seed = forest
            .tree(&Atom::new(Pred::new("anc").magic(), vec![Term::constant("a")]))
            .unwrap();
        assert!(seed.children.is_empty());
        assert!(strip_magic(&m, &seed).unwrap().is_empty());

        let par = forest.tree(&atom("par(a,b)")).unwrap();
        assert_eq!(par.children.len(), 1);
        assert_eq!(strip_magic(&m, &par).unwrap(), vec![ProofTree::leaf(atom("par(a,b)"))]);

        assert!(matches!(
            strip_magic(&m, &ProofTree::leaf(atom("anc(a,c)"))),
            Err(Error::InvalidTree(_))
        ));
    }
}
