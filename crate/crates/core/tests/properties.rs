use proptest::prelude::*;

use magic_core::parser::{parse_program, parse_query};
use magic_core::subst::{compose, mgu, Substitution};
use magic_core::syntax::{Atom, Term, Var};
use magic_core::transform::{magic_transform, SelectionMap, VariantFlags};
use magic_core::verify::{random_program, RandomConfig};

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["X", "Y", "Z", "W"]).prop_map(Term::var),
        prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::compound("f", vec![t])),
            (inner.clone(), inner).prop_map(|(s, t)| Term::compound("g", vec![s, t])),
        ]
    })
}

fn atom() -> impl Strategy<Value = Atom> {
    (term(), term()).prop_map(|(s, t)| Atom::of("p", vec![s, t]))
}

fn substitution() -> impl Strategy<Value = Substitution> {
    prop::collection::vec((prop::sample::select(vec!["X", "Y", "Z", "W"]), term()), 0..3).prop_map(|pairs| {
        Substitution::from_pairs(pairs.into_iter().map(|(v, t)| (Var::new(v), t)))
    })
}

proptest! {
    #[test]
    fn mgu_unifies_and_is_idempotent(a in atom(), b in atom()) {
        if let Some(s) = mgu(&a, &b) {
            prop_assert_eq!(s.atom(&a), s.atom(&b));
            prop_assert!(s.is_idempotent());
            let again = s.atom(&a);
            prop_assert_eq!(s.atom(&again), again);
        }
    }

    #[test]
    fn mgu_is_most_general(a in atom(), b in atom(), theta in substitution()) {
        // Any unifier obtained by instantiating a common instance is an instance of the mgu's.
        if theta.atom(&a) == theta.atom(&b) {
            let s = mgu(&a, &b);
            prop_assert!(s.is_some());
            let s = s.unwrap();
            prop_assert!(magic_core::subst::is_instance_of(&theta.atom(&a), &s.atom(&a)));
        }
    }

    #[test]
    fn mgu_is_symmetric_in_success(a in atom(), b in atom()) {
        prop_assert_eq!(mgu(&a, &b).is_some(), mgu(&b, &a).is_some());
    }

    #[test]
    fn compose_applies_in_order(s1 in substitution(), s2 in substitution(), t in term()) {
        prop_assert_eq!(compose(&s1, &s2).term(&t), s2.term(&s1.term(&t)));
    }

    #[test]
    fn compose_is_associative(s1 in substitution(), s2 in substitution(), s3 in substitution(), t in term()) {
        let left = compose(&compose(&s1, &s2), &s3);
        let right = compose(&s1, &compose(&s2, &s3));
        prop_assert_eq!(left.term(&t), right.term(&t));
    }

    #[test]
    fn render_parse_round_trip(seed in 0u64..5000) {
        let (p, q) = random_program(&RandomConfig::default(), seed);
        prop_assert_eq!(parse_program(&p.to_string()).unwrap(), p);
        let text = q.to_string();
        let body = text.trim_start_matches("?- ").trim_end_matches('.');
        prop_assert_eq!(parse_query(body).unwrap(), q);
    }

    #[test]
    fn magic_clause_count(seed in 0u64..5000, all in any::<bool>()) {
        let (p, q) = random_program(&RandomConfig::default(), seed);
        let sig = p.signature_with(&q).unwrap();
        let sel = if all { SelectionMap::all_positions(&sig) } else { SelectionMap::no_positions(&sig) };
        let m = magic_transform(&p, &q, &sel, &VariantFlags::default()).unwrap();
        let body: usize = p.clauses().iter().map(|c| c.body.len()).sum();
        prop_assert_eq!(m.program.len(), p.len() + body + 1);
        prop_assert_eq!(m.provenance.len(), m.program.len());
    }
}
