mod common;

use std::collections::BTreeSet;

use common::*;
use cutpoint::arith::{entry_rename, format_rational, int, parse_rational, rat, BlockMatrix, EntryPermutation, QMatrix, QVector, Rational};
use cutpoint::qfa::{QuantumAutomaton, Word};
use cutpoint::semialg::{Probe, SearchLimits, SemiAlgSet};
use cutpoint::zariski::closure::{group_closure, ClosureConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_matrix(n: usize) -> impl Strategy<Value = QMatrix> {
    prop::collection::vec((-3i64..=3, 1i64..=3), n * n)
        .prop_map(move |v| QMatrix::from_fn(n, |r, c| rat(v[r * n + c].0, v[r * n + c].1)))
}

/// Orthogonal letters, a unit start vector and a coordinate projector.
fn random_qfa(rng: &mut ChaCha8Rng) -> QuantumAutomaton {
    let n = rng.gen_range(2..=3);
    let letters = ["a", "b"];
    let phi = letters
        .iter()
        .map(|a| {
            let finite = rng.gen_bool(0.3);
            (a.to_string(), random_orthogonal(rng, n, finite))
        })
        .collect();
    let mut s = vec![int(0); n];
    if rng.gen_bool(0.5) {
        s[0] = rat(3, 5);
        s[1] = rat(4, 5);
    } else {
        s[rng.gen_range(0..n)] = int(1);
    }
    let p = QMatrix::from_fn(n, |r, c| if r == c && rng.gen_bool(0.5) { int(1) } else { int(0) });
    QuantumAutomaton {
        dim: n,
        alphabet: letters.iter().map(|a| a.to_string()).collect(),
        s: QVector::new(s),
        phi,
        p,
        lambda: rat(1, 2),
    }
}

fn random_word(rng: &mut ChaCha8Rng, max: usize) -> Word {
    (0..rng.gen_range(0..=max)).map(|_| if rng.gen_bool(0.5) { "a" } else { "b" }.to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multiplication_is_associative(a in small_matrix(3), b in small_matrix(3), c in small_matrix(3)) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!((&a * &b).transpose(), &b.transpose() * &a.transpose());
    }

    #[test]
    fn rationals_round_trip(p in -1000i64..1000, q in 1i64..1000) {
        let x = rat(p, q);
        prop_assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
    }

    #[test]
    fn entry_rename_has_inverse(a in small_matrix(3), perm in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle()) {
        let pi = EntryPermutation::new(3, |r, c| (perm[r * 3 + c] / 3, perm[r * 3 + c] % 3)).unwrap();
        let there = entry_rename(&pi, &a).unwrap();
        prop_assert_eq!(entry_rename(&pi.inverse(), &there).unwrap(), a);
    }

    #[test]
    fn orthogonal_products_stay_orthogonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_orthogonal(&mut rng, 3, false);
        let b = random_orthogonal(&mut rng, 3, false);
        prop_assert!(a.is_orthogonal() && b.is_orthogonal());
        prop_assert!((&a * &b).is_orthogonal());
        prop_assert!((&a * &a.transpose()).is_identity());
    }

    #[test]
    fn automaton_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_qfa(&mut rng);
        prop_assert!(q.validate().is_empty(), "{:?}", q.validate());
        prop_assert_eq!(q.s.norm_sq(), int(1));
        let u = random_word(&mut rng, 5);
        let v = random_word(&mut rng, 5);
        let uv: Word = u.iter().chain(&v).cloned().collect();
        let (xu, xv) = (q.phi_of_word(&u).unwrap(), q.phi_of_word(&v).unwrap());
        prop_assert_eq!(q.phi_of_word(&uv).unwrap(), &xu * &xv);
        let p = q.accept_prob(&uv).unwrap();
        prop_assert!(p >= int(0) && p <= int(1));
        prop_assert_eq!(p, naive_value(&q, &(&xu * &xv)));
    }

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_qfa(&mut rng);
        prop_assert_eq!(QuantumAutomaton::from_json(&q.to_json()).unwrap(), q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn group_closure_contains_group(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<QMatrix> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let finite = rng.gen_bool(0.4);
                random_orthogonal(&mut rng, 2, finite)
            })
            .collect();
        let tuples: Vec<BlockMatrix> = gens.iter().map(|g| BlockMatrix::new(vec![g.clone()])).collect();
        let k = group_closure(&[2], &tuples, &ClosureConfig::default()).unwrap();
        prop_assert!(k.ideal.contains_matrix(&QMatrix::identity(2)));
        for g in &gens {
            prop_assert!(k.ideal.contains_matrix(g));
            prop_assert!(k.ideal.contains_matrix(&g.transpose()));
            for h in &gens {
                prop_assert!(k.ideal.contains_matrix(&(g * h)));
            }
        }
        // a non-orthogonal matrix is never in the closure of an orthogonal group
        prop_assert!(!k.ideal.contains_matrix(&QMatrix::from_ints(&[&[2, 0], &[0, 1]])));
    }

    #[test]
    fn point_products(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = |rng: &mut ChaCha8Rng| -> Vec<BlockMatrix> {
            (0..rng.gen_range(1..=2)).map(|_| BlockMatrix::new(vec![random_orthogonal(rng, 2, true)])).collect()
        };
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let set = |ts: &[BlockMatrix]| SemiAlgSet::points(&[2], ts).unwrap();
        let left = SemiAlgSet::product(&SemiAlgSet::product(&set(&a), &set(&b)).unwrap(), &set(&c)).unwrap();
        let right = SemiAlgSet::product(&set(&a), &SemiAlgSet::product(&set(&b), &set(&c)).unwrap()).unwrap();
        let limits = SearchLimits::default();
        let (ml, cl) = left.members(&limits);
        let (mr, cr) = right.members(&limits);
        prop_assert!(cl && cr);
        prop_assert_eq!(&ml, &mr);
        let mut expected: BTreeSet<Vec<QMatrix>> = BTreeSet::new();
        for x in &a {
            for y in &b {
                for z in &c {
                    expected.insert(vec![&(&x.blocks()[0] * &y.blocks()[0]) * &z.blocks()[0]]);
                }
            }
        }
        prop_assert_eq!(&ml, &expected);
        for m in &expected {
            prop_assert_eq!(left.probe_matrix(&m[0]), Probe::True);
        }
        prop_assert_eq!(left.probe_matrix(&QMatrix::zeros(2)), Probe::False);
    }
}

#[test]
fn rational_text_forms() {
    assert_eq!(parse_rational("-3/6").unwrap(), rat(-1, 2));
    assert_eq!(format_rational(&Rational::from_integer(7.into())), "7");
    assert!(parse_rational("1/0").is_err());
}
