use num::{BigInt, BigRational, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilejoin::dataset::{generate, GenSpec};
use tilejoin::kernels::{
    distance_tile_v1, distance_tile_v2, precompute_chunk_norms, scalar_distance_sq, ChunkNorms,
    ScalarOutcome,
};
use tilejoin::oracle::direct_sq_dist;
use tilejoin::tile::TileB;

fn points(rng: &mut ChaCha8Rng, count: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

fn norms(pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = ChunkNorms::from_points(pts).unwrap();
    (0..pts.len()).map(|i| n.of(i).to_vec()).collect()
}

fn sq_norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum()
}

#[test]
fn chunk_norms_match_scalar_loop() {
    let ds = generate(&GenSpec::uniform(10, 7, 99)).unwrap();
    let cn = precompute_chunk_norms(&ds).unwrap();
    assert_eq!(cn.len(), 10 * 2);
    for i in 0..10 {
        let p = ds.point(i);
        let mut want = [0.0f64; 2];
        for (j, v) in p.iter().enumerate() {
            want[j / 4] += v * v;
        }
        assert_eq!(cn.of(i), &want);
        let total: f64 = cn.of(i).iter().sum();
        assert!((total - sq_norm(p)).abs() <= 4.0 * 7.0 * f64::EPSILON * sq_norm(p));
        assert!(cn.of(i).iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn v1_matches_scalar_formula_d12() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let q = points(&mut rng, 1, 12, 5.0).remove(0);
        let cands = points(&mut rng, 8, 12, 5.0);
        let got = distance_tile_v1(&q, &cands, &TileB::identity()).unwrap();
        for (c, g) in cands.iter().zip(&got) {
            let want = direct_sq_dist(&q, c);
            assert!((g - want).abs() <= 1e-9 * want.max(1e-300), "{g} vs {want}");
        }
    }
}

#[test]
fn v1_self_distance_is_zero() {
    let q = vec![0.3, -1.25, 7.5, 2.0, 0.125];
    let got = distance_tile_v1(&q, std::slice::from_ref(&q), &TileB::identity()).unwrap();
    assert_eq!(got, vec![0.0]);
}

#[test]
fn v2_matches_scalar_formula_d19() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let q = points(&mut rng, 8, 19, 3.0);
        let c = points(&mut rng, 8, 19, 3.0);
        let t = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), 0.0, false).unwrap();
        assert_eq!(t.chunks_total, 5);
        for (i, qp) in q.iter().enumerate() {
            for (j, cp) in c.iter().enumerate() {
                let want = direct_sq_dist(qp, cp);
                assert!((t.get(i, j) - want).abs() <= 1e-9 * want, "{} vs {want}", t.get(i, j));
            }
        }
    }
}

#[test]
fn v1_and_v2_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in [1, 3, 4, 5, 9, 16] {
        let q = points(&mut rng, 8, d, 2.0);
        let c = points(&mut rng, 8, d, 2.0);
        let t = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), 0.0, false).unwrap();
        for (i, qp) in q.iter().enumerate() {
            let diag = distance_tile_v1(qp, &c, &TileB::identity()).unwrap();
            for (j, v1) in diag.iter().enumerate() {
                let v2 = t.get(i, j);
                let bound = 1e-9 * 1f64.max(sq_norm(qp) + sq_norm(&c[j]));
                assert!((v1 - v2).abs() <= bound, "d={d}: {v1} vs {v2}");
            }
        }
    }
}

#[test]
fn padding_dimensions_are_neutral() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in [3, 4, 7] {
        let q = points(&mut rng, 5, d, 1.0);
        let c = points(&mut rng, 6, d, 1.0);
        let base = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), 0.0, false).unwrap();
        let pad = |p: &Vec<Vec<f64>>, extra: usize| -> Vec<Vec<f64>> {
            p.iter()
                .map(|v| v.iter().copied().chain(std::iter::repeat_n(0.0, extra)).collect())
                .collect()
        };
        for extra in [1, 4, 9] {
            let (qp, cp) = (pad(&q, extra), pad(&c, extra));
            let t = distance_tile_v2(&qp, &cp, &norms(&qp), &norms(&cp), 0.0, false).unwrap();
            for i in 0..5 {
                for j in 0..6 {
                    assert_eq!(t.get(i, j).to_bits(), base.get(i, j).to_bits());
                }
            }
        }
    }
}

#[test]
fn precomputed_and_recomputed_norms_agree_bitwise() {
    let ds = generate(&GenSpec::exponential(16, 10, 8)).unwrap();
    let cn = precompute_chunk_norms(&ds).unwrap();
    let q: Vec<Vec<f64>> = (0..8).map(|i| ds.point(i).to_vec()).collect();
    let c: Vec<Vec<f64>> = (8..16).map(|i| ds.point(i).to_vec()).collect();
    let pre_q: Vec<&[f64]> = (0..8).map(|i| cn.of(i)).collect();
    let pre_c: Vec<&[f64]> = (8..16).map(|i| cn.of(i)).collect();
    let a = distance_tile_v2(&q, &c, &pre_q, &pre_c, 0.01, true).unwrap();
    let b = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), 0.01, true).unwrap();
    assert_eq!(a, b);
}

#[test]
fn short_circuit_only_saves_work() {
    // Queries near the origin, candidates all farther than epsilon.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let q = points(&mut rng, 8, 16, 0.1);
    let c: Vec<Vec<f64>> = points(&mut rng, 8, 16, 0.1)
        .into_iter()
        .map(|p| p.into_iter().map(|v| v + 3.0).collect())
        .collect();
    let eps_sq = 1.0;
    let off = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), eps_sq, false).unwrap();
    let on = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), eps_sq, true).unwrap();
    let none_within = |t: &tilejoin::kernels::DistanceTile| {
        t.sq_dists.iter().flatten().all(|&v| v > eps_sq)
    };
    assert!(none_within(&off) && !off.pruned);
    assert!(on.pruned);
    assert!(on.chunks_executed < off.chunks_executed);
    assert_eq!(off.chunks_executed, 4);
}

fn exact_sq_dist(a: &[f64], b: &[f64]) -> BigRational {
    let mut sum = BigRational::from_integer(BigInt::from(0));
    for (x, y) in a.iter().zip(b) {
        let diff = BigRational::from_float(*x).unwrap() - BigRational::from_float(*y).unwrap();
        sum += &diff * &diff;
    }
    sum
}

#[test]
fn scalar_kernel_matches_exact_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let d = rng.random_range(1..40);
        let pts = points(&mut rng, 2, d, 10.0);
        let got = match scalar_distance_sq(&pts[0], &pts[1], f64::MAX, true).unwrap() {
            ScalarOutcome::Distance(v) => v,
            other => panic!("{other:?}"),
        };
        let exact = exact_sq_dist(&pts[0], &pts[1]).to_f64().unwrap();
        assert!((got - exact).abs() <= 1e-12 * exact, "{got} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // Pruning implies every valid pair's full squared distance exceeds the threshold.
    #[test]
    fn pruning_is_sound(
        seed in any::<u64>(),
        d in 5usize..24,
        nq in 1usize..=8,
        nc in 1usize..=8,
        eps in 0.05f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = points(&mut rng, nq, d, 1.0);
        let c = points(&mut rng, nc, d, 1.0);
        let eps_sq = eps * eps;
        let t = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), eps_sq, true).unwrap();
        if t.pruned {
            for qp in &q {
                for cp in &c {
                    prop_assert!(direct_sq_dist(qp, cp) > eps_sq);
                }
            }
        }
        let full = distance_tile_v2(&q, &c, &norms(&q), &norms(&c), eps_sq, false).unwrap();
        for i in 0..nq {
            for j in 0..nc {
                let want = direct_sq_dist(&q[i], &c[j]);
                let bound = 1e-9 * 1f64.max(sq_norm(&q[i]) + sq_norm(&c[j]));
                prop_assert!((full.get(i, j) - want).abs() <= bound);
                prop_assert!(full.get(i, j) >= 0.0);
                if !t.pruned {
                    prop_assert_eq!(t.get(i, j).to_bits(), full.get(i, j).to_bits());
                }
            }
        }
    }
}
