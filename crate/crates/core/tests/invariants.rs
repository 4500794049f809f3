use gslda::birth_death::{birth_death_step, prune_unused};
use gslda::gibbs::gibbs_sweep;
use gslda::init::init_prior;
use gslda::mh_sparsify::{merge_at, mh_sweep, solve_rows, split_at, MoveKind, QpOptions};
use gslda::{Corpus, HyperParams, Matrix, Ontology, RngStream, State};
use proptest::prelude::*;
use rand::Rng;

/// Random DAG: every edge points from a lower to a higher id.
fn dag(v: usize, seed: u64) -> Ontology {
    let mut rng = RngStream::new(seed, 7);
    let mut edges = Vec::new();
    for c in 1..v {
        for p in 0..c {
            if rng.random::<f64>() < 1.5 / c as f64 {
                edges.push((p, c));
            }
        }
    }
    Ontology::from_edges(v, &edges).unwrap()
}

fn corpus(n: usize, v: usize, seed: u64) -> Corpus {
    let mut rng = RngStream::new(seed, 8);
    let triplets: Vec<(usize, usize, u32)> = (0..n)
        .flat_map(|d| (0..6).map(move |_| d))
        .map(|d| (d, rng.random_range(0..v), rng.random_range(1..4)))
        .collect();
    Corpus::from_triplets(n, v, triplets).unwrap()
}

fn hyper() -> impl Strategy<Value = HyperParams> {
    (0.1f64..2.0, 0.1f64..2.0, 0.1f64..2.0, 0.5f64..3.0, 0.5f64..3.0).prop_map(|(ab, aa, ap, gb, ga)| HyperParams {
        alpha_b: ab,
        alpha_a: aa,
        alpha_p: ap,
        gamma_b: gb,
        gamma_a: ga,
        ..Default::default()
    })
}

fn row_sums_ok(m: &Matrix) -> bool {
    m.iter_rows().all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_iterations_keep_state_valid(
        v in 2usize..9,
        n in 1usize..8,
        k in 1usize..4,
        seed in any::<u64>(),
        hp in hyper(),
    ) {
        let o = dag(v, seed);
        let c = corpus(n, v, seed);
        let mut rng = RngStream::new(seed, 0);
        let mut state: State = init_prior(&mut rng, &c, &o, &hp, k).unwrap();
        for _ in 0..4 {
            let (mut counts, _) = gibbs_sweep(&mut rng, &c, &mut state, &o, &hp).unwrap();
            prop_assert!(counts.check(&c, &o).is_ok());
            mh_sweep(&mut rng, &c, &mut state, &o, &hp, &mut counts, v).unwrap();
            prop_assert!(counts.check(&c, &o).is_ok());
            birth_death_step(&mut rng, &c, &mut state, &mut counts, &hp).unwrap();
            prop_assert_eq!(counts.num_topics, state.num_topics());
            prop_assert!(state.validate(&o).is_ok(), "{:?}", state.validate(&o));
            prop_assert!(row_sums_ok(&state.a) && row_sums_ok(&state.b) && row_sums_ok(&state.p));
        }
    }

    #[test]
    fn pruning_is_idempotent(v in 2usize..7, n in 1usize..6, k in 1usize..6, seed in any::<u64>()) {
        let o = dag(v, seed);
        let c = corpus(n, v, seed);
        let hp = HyperParams::default();
        let mut rng = RngStream::new(seed, 0);
        let mut state: State = init_prior(&mut rng, &c, &o, &hp, k).unwrap();
        gibbs_sweep(&mut rng, &c, &mut state, &o, &hp).unwrap();
        prune_unused(&mut state);
        let once = state.clone();
        prop_assert_eq!(prune_unused(&mut state), 0);
        prop_assert_eq!(state, once);
    }

    #[test]
    fn split_then_merge_restores_the_row(v in 2usize..10, seed in any::<u64>(), w_pick in any::<usize>()) {
        let o = dag(v, seed);
        let hp = HyperParams::default();
        let w = w_pick % v;
        prop_assume!(o.descendants(w).len() > 1);
        let mut rng = RngStream::new(seed, 1);
        let mut row = vec![0.0; v];
        let outside: Vec<usize> = (0..v).filter(|c| !o.descendants(w).contains(c)).collect();
        row[w] = rng.random_range(0.05..1.0);
        let rest = 1.0 - row[w];
        if outside.is_empty() {
            row[w] = 1.0;
        } else {
            for &c in &outside {
                row[c] = rest / outside.len() as f64;
            }
        }
        let a = Matrix::from_rows(vec![row.clone()]).unwrap();
        let split = split_at(&mut rng, &a, &o, &hp, 0, w).unwrap();
        prop_assert_eq!(split.kind, MoveKind::Split);
        let s: f64 = split.a_prime.row(0).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        let merge = merge_at(&split.a_prime, &o, &hp, 0, w).unwrap();
        for (x, y) in merge.a_prime.row(0).iter().zip(&row) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((split.log_q_forward - merge.log_q_reverse).abs() < 1e-12);
        prop_assert!((split.log_q_reverse - merge.log_q_forward).abs() < 1e-12);
        prop_assert!((split.log_jacobian + merge.log_jacobian).abs() < 1e-9);
    }

    #[test]
    fn concept_word_centre_is_feasible(v in 2usize..8, k in 1usize..4, seed in any::<u64>(), w_pick in any::<usize>()) {
        let o = dag(v, seed);
        let c = corpus(3, v, seed);
        let hp = HyperParams::default();
        let mut rng = RngStream::new(seed, 2);
        let state: State = init_prior(&mut rng, &c, &o, &hp, k).unwrap();
        let w = w_pick % v;
        let Ok(mv) = merge_at(&state.a, &o, &hp, 0, w) else { return Ok(()) };
        let rows = o.descendants(w).to_vec();
        let sol = solve_rows(&state.a, &mv.a_prime, &state.p, &o, &rows, QpOptions::default());
        for r in 0..v {
            let row = sol.p_star.row(r);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (w2, &x) in row.iter().enumerate() {
                prop_assert!(x >= 0.0);
                if x > 0.0 {
                    prop_assert!(o.can_emit(r, w2));
                }
            }
            if !rows.contains(&r) {
                prop_assert_eq!(row, state.p.row(r));
            }
        }
    }

    #[test]
    fn heldout_split_conserves_tokens(n in 1usize..12, v in 1usize..10, seed in any::<u64>(), frac in 0.0f64..0.49) {
        let c = corpus(n, v, seed);
        let split = c.split_heldout(&mut RngStream::new(seed, 3), frac).unwrap();
        prop_assert_eq!(split.total_tokens() + split.heldout_tokens(), c.total_tokens());
        prop_assert_eq!(split.heldout_tokens(), (frac * c.total_tokens() as f64).round() as u64);
        let mut dense = split.to_dense();
        for &(d, w, x) in split.heldout() {
            dense[d][w] += x;
        }
        prop_assert_eq!(dense, c.to_dense());
    }
}
