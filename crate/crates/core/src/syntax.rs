//! Abstract syntax of definite programs: terms, atoms, clauses, programs and queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::Error;

pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

/// A logic variable. Parsed variables have `generation == 0`; renaming apart
/// produces the same base name with a positive generation, so fresh variables
/// never collide with anything a user can write.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var {
    pub name: Symbol,
    pub generation: u32,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var {
            name: sym(name),
            generation: 0,
        }
    }

    pub fn renamed(&self, generation: u32) -> Self {
        Var {
            name: self.name.clone(),
            generation,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generation == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}_{}", self.name, self.generation)
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Var),
    Const(Symbol),
    /// Always has at least one argument; constants are never compounds.
    Compound(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(sym(name))
    }

    /// Builds `f(args)`, collapsing to a constant when `args` is empty.
    pub fn compound(functor: &str, args: Vec<Term>) -> Self {
        if args.is_empty() {
            Term::Const(sym(functor))
        } else {
            Term::Compound(sym(functor), args)
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Const(_) => false,
            Term::Compound(_, args) => args.iter().any(|t| t.occurs(v)),
        }
    }

    /// Appends variables in first-occurrence order, without duplicates.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
        }
    }

    pub fn collect_constants(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Term::Var(_) => {}
            Term::Const(c) => {
                out.insert(c.clone());
            }
            Term::Compound(_, args) => args.iter().for_each(|t| t.collect_constants(out)),
        }
    }

    pub fn is_compound(&self) -> bool {
        matches!(self, Term::Compound(..))
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Compound(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 1,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::Compound(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                write!(f, ")")
            }
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

/// Which predicate namespace an atom lives in. Magic predicates only appear in
/// transformed programs and never collide with user predicates.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Namespace {
    Original,
    Magic,
}

/// Bound/free pattern attached to an adorned predicate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Adornment(pub Vec<bool>);

impl Adornment {
    pub fn bound_positions(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i + 1))
            .collect()
    }
}

impl fmt::Display for Adornment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", if *b { 'b' } else { 'f' })?;
        }
        Ok(())
    }
}

/// Identity of a predicate symbol. Arity is tracked by [`Program`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Pred {
    pub name: Symbol,
    pub adornment: Option<Adornment>,
    pub namespace: Namespace,
}

impl Pred {
    pub fn new(name: &str) -> Self {
        Pred {
            name: sym(name),
            adornment: None,
            namespace: Namespace::Original,
        }
    }

    pub fn magic(&self) -> Self {
        Pred {
            namespace: Namespace::Magic,
            ..self.clone()
        }
    }

    pub fn adorned(&self, adornment: Adornment) -> Self {
        Pred {
            adornment: Some(adornment),
            ..self.clone()
        }
    }

    /// The predicate this one was derived from by adornment or by the magic
    /// namespace: same name, original namespace, no adornment.
    pub fn origin(&self) -> Self {
        Pred::new(&self.name)
    }

    pub fn is_magic(&self) -> bool {
        self.namespace == Namespace::Magic
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_magic() {
            write!(f, "pre_")?;
        }
        write!(f, "{}", self.name)?;
        if let Some(ad) = &self.adornment {
            write!(f, "_{ad}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub pred: Pred,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: Pred, args: Vec<Term>) -> Self {
        Atom { pred, args }
    }

    /// Convenience constructor for original-namespace atoms.
    pub fn of(name: &str, args: Vec<Term>) -> Self {
        Atom::new(Pred::new(name), args)
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        self.args.iter().for_each(|t| t.collect_vars(out));
    }

    pub fn is_datalog(&self) -> bool {
        !self.args.iter().any(Term::is_compound)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            write_list(f, &self.args)?;
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Clause {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        Clause { head, body }
    }

    pub fn fact(head: Atom) -> Self {
        Clause {
            head,
            body: Vec::new(),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.head.collect_vars(&mut out);
        self.body.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }

    pub fn is_datalog(&self) -> bool {
        self.atoms().all(Atom::is_datalog)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            write_list(f, &self.body)?;
        }
        write!(f, ".")
    }
}

/// A conjunction of atoms. The empty query only occurs as the end of a
/// successful derivation; parsed queries are never empty.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Query {
    pub atoms: Vec<Atom>,
}

impl Query {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Query { atoms }
    }

    pub fn atomic(atom: Atom) -> Self {
        Query { atoms: vec![atom] }
    }

    /// The single atom of an atomic query.
    pub fn as_atom(&self) -> Result<&Atom, Error> {
        match self.atoms.as_slice() {
            [a] => Ok(a),
            _ => Err(Error::NonAtomicQuery(self.atoms.len())),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.atoms.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn is_datalog(&self) -> bool {
        self.atoms.iter().all(Atom::is_datalog)
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            a.args.iter().for_each(|t| t.collect_constants(&mut out));
        }
        out
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?- ")?;
        write_list(f, &self.atoms)?;
        write!(f, ".")
    }
}

/// An ordered list of clauses with a consistent predicate signature.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Program {
    clauses: Vec<Clause>,
    predicates: BTreeMap<Pred, usize>,
    constants: BTreeSet<Symbol>,
}

impl Program {
    /// Builds a program, rejecting predicates used at two different arities.
    pub fn new(clauses: Vec<Clause>) -> Result<Self, Error> {
        let mut predicates = BTreeMap::new();
        let mut constants = BTreeSet::new();
        for clause in &clauses {
            for atom in clause.atoms() {
                record_arity(&mut predicates, atom)?;
                atom.args
                    .iter()
                    .for_each(|t| t.collect_constants(&mut constants));
            }
        }
        Ok(Program {
            clauses,
            predicates,
            constants,
        })
    }

    pub fn empty() -> Self {
        Program::default()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn predicates(&self) -> &BTreeMap<Pred, usize> {
        &self.predicates
    }

    pub fn arity(&self, pred: &Pred) -> Option<usize> {
        self.predicates.get(pred).copied()
    }

    pub fn constants(&self) -> &BTreeSet<Symbol> {
        &self.constants
    }

    pub fn is_datalog(&self) -> bool {
        self.clauses.iter().all(Clause::is_datalog)
    }

    /// Predicate signature of the program extended with the query's atoms.
    pub fn signature_with(&self, query: &Query) -> Result<BTreeMap<Pred, usize>, Error> {
        let mut preds = self.predicates.clone();
        for atom in &query.atoms {
            record_arity(&mut preds, atom)?;
        }
        Ok(preds)
    }

    /// Clauses whose head predicate is `pred`, with their program indices.
    pub fn clauses_for<'a>(&'a self, pred: &'a Pred) -> impl Iterator<Item = (usize, &'a Clause)> {
        self.clauses
            .iter()
            .enumerate()
            .filter(move |(_, c)| &c.head.pred == pred)
    }

    pub fn with_clause(&self, clause: Clause) -> Result<Self, Error> {
        let mut clauses = self.clauses.clone();
        clauses.push(clause);
        Program::new(clauses)
    }

    pub fn without_clause(&self, index: usize) -> Self {
        let mut clauses = self.clauses.clone();
        clauses.remove(index);
        Program::new(clauses).expect("removing a clause keeps arities consistent")
    }

    pub fn into_clauses(self) -> Vec<Clause> {
        self.clauses
    }
}

fn record_arity(preds: &mut BTreeMap<Pred, usize>, atom: &Atom) -> Result<(), Error> {
    match preds.get(&atom.pred) {
        Some(&n) if n != atom.arity() => Err(Error::ArityMismatch {
            pred: atom.pred.to_string(),
            expected: n,
            found: atom.arity(),
        }),
        Some(_) => Ok(()),
        None => {
            preds.insert(atom.pred.clone(), atom.arity());
            Ok(())
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
