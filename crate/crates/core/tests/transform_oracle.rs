mod common;

use magic_core::bottomup::{herbrand_universe, least_model, EvalStrategy};
use magic_core::parser::{parse_program, parse_query};
use magic_core::syntax::Pred;
use magic_core::transform::{magic_transform, SelectionMap, VariantFlags};
use magic_core::verify::{random_program, random_selection, RandomConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ANCESTOR: &str = "anc(X,Y) :- par(X,Y).\nanc(X,Y) :- par(X,Z), anc(Z,Y).\npar(a,b).\npar(b,c).\n";

#[test]
fn ancestor_golden() {
    let p = parse_program(ANCESTOR).unwrap();
    let q = parse_query("anc(a,W)").unwrap();
    let sel = SelectionMap::new()
        .with(Pred::new("anc"), [1])
        .with(Pred::new("par"), [1]);
    let m = magic_transform(&p, &q, &sel, &VariantFlags::default()).unwrap();
    let expected = "\
anc(X, Y) :- pre_anc(X), par(X, Y).  % case1 from clause 1
pre_par(X) :- pre_anc(X).  % case2 from clause 1, i = 1
anc(X, Y) :- pre_anc(X), par(X, Z), anc(Z, Y).  % case1 from clause 2
pre_par(X) :- pre_anc(X).  % case2 from clause 2, i = 1
pre_anc(Z) :- pre_anc(X), par(X, Z).  % case2 from clause 2, i = 2
par(a, b) :- pre_par(a).  % case1 from clause 3
par(b, c) :- pre_par(b).  % case1 from clause 4
pre_anc(a).  % seed
";
    assert_eq!(m.render_annotated(), expected);
}

#[test]
fn transform_matches_reference_rules_on_random_programs() {
    let cfg = RandomConfig::default();
    for seed in 0..300 {
        let (p, q) = random_program(&cfg, seed);
        let sig = p.signature_with(&q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for sel in [
            SelectionMap::all_positions(&sig),
            SelectionMap::no_positions(&sig),
            random_selection(&sig, &mut rng),
        ] {
            let m = magic_transform(&p, &q, &sel, &VariantFlags::default()).unwrap();
            let ours: Vec<String> = m.program.clauses().iter().map(|c| c.to_string()).collect();
            let reference = common::reference_magic(&p, q.as_atom().unwrap(), &sel);
            assert_eq!(ours, reference, "seed {seed}");
            let body_atoms: usize = p.clauses().iter().map(|c| c.body.len()).sum();
            assert_eq!(m.program.len(), p.len() + body_atoms + 1);
        }
    }
}

#[test]
fn engine_models_match_naive_oracle() {
    let cfg = RandomConfig::default();
    for seed in 0..300 {
        let (p, q) = random_program(&cfg, seed);
        let universe = herbrand_universe(&p, &q).unwrap();
        assert_eq!(universe, common::universe_of(&p, &q));
        let oracle = common::naive_least_model(&p, &universe);
        for strategy in [EvalStrategy::Naive, EvalStrategy::SemiNaive] {
            assert_eq!(least_model(&p, &universe, strategy).unwrap().atoms, oracle, "seed {seed}");
        }
        let sel = SelectionMap::all_positions(&p.signature_with(&q).unwrap());
        let m = magic_transform(&p, &q, &sel, &VariantFlags::default()).unwrap();
        assert_eq!(
            least_model(&m.program, &universe, EvalStrategy::SemiNaive).unwrap().atoms,
            common::naive_least_model(&m.program, &universe),
            "seed {seed}"
        );
    }
}
