//! LD-resolution: SLD-resolution with the leftmost selection rule and clauses
//! tried in program order.
//!
//! The search explores the LD-tree up to a derivation-length bound. By default
//! it uses iterative deepening (bounds 1, 2, 4, ... up to the budget), so every
//! answer at a finite depth is eventually found even when the tree has
//! infinite branches. While exploring, it collects the procedure calls (the
//! selected atoms) and procedure successes: the instance `A θ(i,j)` of a call
//! `A` at the first later query `Q_j` that consists only of the remainder of
//! the query where `A` was selected.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::subst::{canonical_atom, canonical_atoms, compose, match_atom, mgu, Matcher, Renamer, Substitution};
use crate::syntax::{Atom, Program, Query, Var};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Budget {
    pub max_derivation_length: usize,
    pub max_answers: usize,
    /// Cap on resolution steps over the whole search, counting every
    /// iterative-deepening round.
    pub max_steps: usize,
}

impl Budget {
    pub const DEFAULT_MAX_STEPS: usize = 200_000;

    pub fn new(max_derivation_length: usize, max_answers: usize) -> Self {
        Budget {
            max_derivation_length: max_derivation_length.max(1),
            max_answers: max_answers.max(1),
            max_steps: Self::DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_max_steps(self, max_steps: usize) -> Self {
        Budget {
            max_steps: max_steps.max(1),
            ..self
        }
    }

    pub fn depth(max_derivation_length: usize) -> Self {
        Budget::new(max_derivation_length, usize::MAX)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    IterativeDeepening,
    /// Plain Prolog-style depth-first search bounded by the derivation length.
    DepthFirst,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivationStatus {
    Success,
    Failure,
    BudgetExhausted,
}

/// One root-to-leaf path of the LD-tree. `queries[j]` is obtained from
/// `queries[j-1]` by resolving its first atom with program clause
/// `clause_choices[j-1]` (renamed apart) using mgu `mgus[j-1]`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DerivationTrace {
    pub queries: Vec<Vec<Atom>>,
    pub mgus: Vec<Substitution>,
    pub clause_choices: Vec<usize>,
    pub status: DerivationStatus,
}

/// Calls, successes and answers collected over every explored derivation.
/// Atoms are stored in canonical variable naming, so set equality is
/// equality modulo renaming.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TraceReport {
    pub calls: BTreeSet<Atom>,
    pub successes: BTreeSet<Atom>,
    /// Computed answer substitutions restricted to the query variables.
    pub answers: Vec<Substitution>,
    /// Instantiated queries, one per computed answer, in discovery order.
    pub answer_queries: Vec<Query>,
    pub complete: bool,
    pub steps: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Solutions {
    pub answers: Vec<Query>,
    pub complete: bool,
}

#[derive(Clone, Debug)]
struct Frame {
    call: Atom,
    remainder: usize,
}

struct Search<'a> {
    program: &'a Program,
    renamer: Renamer,
    depth_limit: usize,
    max_answers: usize,
    max_steps: usize,
    steps: usize,
    cut_off: bool,
    stopped: bool,
    seen_answers: BTreeSet<Vec<Atom>>,
    answers: Vec<Vec<Atom>>,
    calls: BTreeSet<Atom>,
    successes: BTreeSet<Atom>,
    record: Option<Recorder>,
}

#[derive(Default)]
struct Recorder {
    queries: Vec<Vec<Atom>>,
    mgus: Vec<Substitution>,
    choices: Vec<usize>,
    finished: Vec<DerivationTrace>,
}

impl Recorder {
    fn leaf(&mut self, status: DerivationStatus) {
        self.finished.push(DerivationTrace {
            queries: self.queries.clone(),
            mgus: self.mgus.clone(),
            clause_choices: self.choices.clone(),
            status,
        });
    }
}

impl<'a> Search<'a> {
    fn new(program: &'a Program, budget: &Budget, depth_limit: usize) -> Self {
        Search {
            program,
            renamer: Renamer::new(),
            depth_limit,
            max_answers: budget.max_answers,
            max_steps: budget.max_steps,
            steps: 0,
            cut_off: false,
            stopped: false,
            seen_answers: BTreeSet::new(),
            answers: Vec::new(),
            calls: BTreeSet::new(),
            successes: BTreeSet::new(),
            record: None,
        }
    }

    fn run(&mut self, query: &Query) {
        if let Some(r) = &mut self.record {
            r.queries.push(query.atoms.clone());
        }
        self.explore(query.atoms.clone(), Vec::new(), query.atoms.clone(), 0);
    }

    fn explore(&mut self, goals: Vec<Atom>, frames: Vec<Frame>, inst: Vec<Atom>, depth: usize) {
        let Some(selected) = goals.first().cloned() else {
            let answer = canonical_atoms(&inst);
            if self.seen_answers.insert(answer) {
                self.answers.push(inst);
                if self.answers.len() >= self.max_answers {
                    self.stopped = true;
                }
            }
            if let Some(r) = &mut self.record {
                r.leaf(DerivationStatus::Success);
            }
            return;
        };
        self.calls.insert(canonical_atom(&selected));

        if depth >= self.depth_limit {
            let status = if self
                .program
                .clauses_for(&selected.pred)
                .any(|(_, c)| unifiable_after_rename(&selected, &c.head))
            {
                self.cut_off = true;
                DerivationStatus::BudgetExhausted
            } else {
                DerivationStatus::Failure
            };
            if let Some(r) = &mut self.record {
                r.leaf(status);
            }
            return;
        }

        let mut frames = frames;
        frames.push(Frame {
            call: selected.clone(),
            remainder: goals.len() - 1,
        });
        let avoid: BTreeSet<Var> = {
            let mut vs = Vec::new();
            goals.iter().for_each(|a| a.collect_vars(&mut vs));
            vs.into_iter().collect()
        };

        let mut any = false;
        for (index, clause) in self.program.clauses_for(&selected.pred) {
            if self.stopped {
                return;
            }
            let renamed = self.renamer.rename_apart(clause, &avoid);
            let Some(theta) = mgu(&selected, &renamed.head) else {
                continue;
            };
            any = true;
            self.steps += 1;
            if self.steps > self.max_steps {
                self.cut_off = true;
                self.stopped = true;
                return;
            }
            let mut next_goals = theta.atoms(&renamed.body);
            next_goals.extend(goals[1..].iter().map(|a| theta.atom(a)));
            let mut next_frames: Vec<Frame> = frames
                .iter()
                .map(|f| Frame {
                    call: theta.atom(&f.call),
                    remainder: f.remainder,
                })
                .collect();
            while next_frames
                .last()
                .is_some_and(|f| f.remainder == next_goals.len())
            {
                let done = next_frames.pop().expect("non-empty");
                self.successes.insert(canonical_atom(&done.call));
            }
            let next_inst = theta.atoms(&inst);
            if let Some(r) = &mut self.record {
                r.queries.push(next_goals.clone());
                r.mgus.push(theta.clone());
                r.choices.push(index);
            }
            self.explore(next_goals, next_frames, next_inst, depth + 1);
            if let Some(r) = &mut self.record {
                r.queries.pop();
                r.mgus.pop();
                r.choices.pop();
            }
        }
        if !any {
            if let Some(r) = &mut self.record {
                r.leaf(DerivationStatus::Failure);
            }
        }
    }
}

fn unifiable_after_rename(goal: &Atom, head: &Atom) -> bool {
    let renamed = Renamer::starting_at(u32::MAX - 1)
        .rename_apart(&crate::syntax::Clause::fact(head.clone()), &BTreeSet::new());
    mgu(goal, &renamed.head).is_some()
}

fn depth_schedule(strategy: Strategy, max: usize) -> Vec<usize> {
    match strategy {
        Strategy::DepthFirst => vec![max],
        Strategy::IterativeDeepening => {
            let mut out = Vec::new();
            let mut d = 1;
            while d < max {
                out.push(d);
                d *= 2;
            }
            out.push(max);
            out
        }
    }
}

fn answer_substitution(query: &Query, instance: &[Atom]) -> Substitution {
    let mut m = Matcher::new();
    for (a, b) in query.atoms.iter().zip(instance) {
        let ok = match_atom(a, b, &mut m);
        debug_assert!(ok, "answer is an instance of the query");
    }
    Substitution::from_pairs(m)
}

/// Explores the LD-tree for `q` and collects calls, successes and answers.
pub fn ld_trace_with(p: &Program, q: &Query, budget: &Budget, strategy: Strategy) -> TraceReport {
    let mut report = TraceReport::default();
    let mut seen_answers: BTreeSet<Vec<Atom>> = BTreeSet::new();
    for limit in depth_schedule(strategy, budget.max_derivation_length) {
        let remaining = Budget {
            max_steps: budget.max_steps.saturating_sub(report.steps).max(1),
            ..*budget
        };
        let mut search = Search::new(p, &remaining, limit);
        search.run(q);
        report.steps += search.steps;
        report.calls.extend(search.calls);
        report.successes.extend(search.successes);
        for inst in search.answers {
            let canon = canonical_atoms(&inst);
            if seen_answers.insert(canon.clone()) {
                report.answer_queries.push(Query::new(canon));
            }
        }
        if search.stopped {
            break;
        }
        if !search.cut_off {
            report.complete = true;
            break;
        }
    }
    report.answer_queries.truncate(budget.max_answers);
    report.answers = report
        .answer_queries
        .iter()
        .map(|inst| answer_substitution(q, &inst.atoms).restrict(&q.vars()))
        .collect();
    report
}

pub fn ld_trace(p: &Program, q: &Query, budget: &Budget) -> TraceReport {
    ld_trace_with(p, q, budget, Strategy::IterativeDeepening)
}

/// Computed answers `Qθ` (canonical variable naming) and whether the whole
/// LD-tree was exhausted within the budget.
pub fn ld_solve(p: &Program, q: &Query, budget: &Budget) -> Solutions {
    ld_solve_with(p, q, budget, Strategy::IterativeDeepening)
}

pub fn ld_solve_with(p: &Program, q: &Query, budget: &Budget, strategy: Strategy) -> Solutions {
    let report = ld_trace_with(p, q, budget, strategy);
    Solutions {
        answers: report.answer_queries,
        complete: report.complete,
    }
}

/// Every maximal derivation of the LD-tree cut at `max_derivation_length`,
/// in depth-first order.
pub fn ld_derivations(p: &Program, q: &Query, max_derivation_length: usize) -> Vec<DerivationTrace> {
    let budget = Budget::depth(max_derivation_length).with_max_steps(usize::MAX);
    let mut search = Search::new(p, &budget, max_derivation_length);
    search.record = Some(Recorder::default());
    search.run(q);
    search.record.map(|r| r.finished).unwrap_or_default()
}

/// Procedure calls and successes of a single derivation, computed directly
/// from the query sequence and the composed mgus `θ(i,j) = θ(i+1)···θ(j)`.
pub fn calls_and_successes(d: &DerivationTrace) -> (Vec<Atom>, Vec<Atom>) {
    let mut calls = Vec::new();
    let mut successes = Vec::new();
    for (i, qi) in d.queries.iter().enumerate() {
        let Some((a, rest)) = qi.split_first() else {
            continue;
        };
        calls.push(a.clone());
        let mut theta = Substitution::new();
        for j in i + 1..d.queries.len() {
            theta = compose(&theta, &d.mgus[j - 1]);
            if d.queries[j] == theta.atoms(rest) {
                successes.push(theta.atom(a));
                break;
            }
        }
    }
    (calls, successes)
}
