//! Cross-module invariants, checked against brute-force ground truth.

use mglab::bits::BitString;
use mglab::dist::{
    fermionized_noisy_parity_dist, fermionized_parity_dist, parity_dist, NoiseRate, Secret,
};
use mglab::embed::{embed_noisy_parity, embed_parity, parity_block_circuit, plan_permutation};
use mglab::gates::{fswap_gate, ux_gate, Gate2Q, GateKind, Mat4, MatchgateCircuit};
use mglab::oracle::{
    default_shots, distinguishable_secrets, stat_query, OracleMode, StatOracle, StatQuery,
};
use mglab::pfaffian::{amplitude, normalize, pfaffian, SkewMatrix};
use mglab::simulate::{apply_circuit, born_distribution, tvd, DistributionTable, StateVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matchgate(rng: &mut impl Rng) -> Mat4 {
    let su2 = |rng: &mut dyn rand::RngCore| {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let b: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let c: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let p = Complex64::from_polar(c.cos(), a);
        let q = Complex64::from_polar(c.sin(), b);
        [[p, q], [-q.conj(), p.conj()]]
    };
    let w = su2(rng);
    let q = su2(rng);
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let z = Complex64::new(0.0, 0.0);
    let mut m = [[z; 4]; 4];
    m[0][0] = w[0][0];
    m[0][3] = w[0][1];
    m[3][0] = w[1][0];
    m[3][3] = w[1][1];
    m[1][1] = q[0][0];
    m[1][2] = q[0][1];
    m[2][1] = q[1][0];
    m[2][2] = q[1][1];
    m.iter_mut().flatten().for_each(|e| *e *= phase);
    m
}

fn random_circuit(n: usize, depth: usize, seed: u64) -> MatchgateCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = MatchgateCircuit::new(n);
    for _ in 0..depth {
        let mut layer = Vec::new();
        let mut w = rng.random_range(0..2usize);
        while w + 1 < n {
            if rng.random_bool(0.8) {
                let kind = match rng.random_range(0..3) {
                    0 => GateKind::UX(rng.random_range(-4.0..4.0)),
                    1 => GateKind::FSwap,
                    _ => GateKind::Custom(Box::new(random_matchgate(&mut rng))),
                };
                layer.push(Gate2Q::on(kind, w));
            }
            w += 2 + rng.random_range(0..2usize);
        }
        c.push_layer(layer);
    }
    c
}

fn random_skew(dim: usize, rng: &mut impl Rng) -> SkewMatrix {
    let mut m = SkewMatrix::zeros(dim);
    for i in 0..dim {
        for j in i + 1..dim {
            m.set(i, j, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    m
}

fn to_dmatrix(a: &SkewMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matchgate_circuits_have_no_odd_mass(n in 2usize..=10, depth in 0usize..12, seed in any::<u64>()) {
        let c = random_circuit(n, depth, seed);
        let d = born_distribution(&c).unwrap();
        prop_assert!(d.odd_parity_mass() < 1e-12);
    }

    #[test]
    fn unitarity(n in 2usize..=12, depth in 0usize..=50, seed in any::<u64>()) {
        let psi = apply_circuit(&random_circuit(n, depth, seed)).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gates_within_a_layer_commute(n in 3usize..=9, depth in 1usize..6, seed in any::<u64>()) {
        let c = random_circuit(n, depth, seed);
        let mut reversed = c.clone();
        reversed.layers.iter_mut().for_each(|l| l.reverse());
        // apply in the stored (reversed) order by hand, bypassing the sort
        let mut psi = StateVector::zero_state(n).unwrap();
        for layer in &reversed.layers {
            for g in layer {
                psi.apply_gate(&g.matrix(), g.lower());
            }
        }
        let reference = apply_circuit(&c).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(reference.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fswap_acts_as_outcome_swap(n in 2usize..=8, depth in 0usize..8, seed in any::<u64>(), pair in 0usize..7) {
        let i = pair % (n - 1);
        let c = random_circuit(n, depth, seed);
        let before = born_distribution(&c).unwrap();
        let mut after_c = c.clone();
        after_c.push_layer(vec![Gate2Q::fswap(i)]);
        let after = born_distribution(&after_c).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(i, i + 1);
        let swapped = before.permute_bits(&perm);
        for (a, b) in after.mass().iter().zip(swapped.mass()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn pfaffian_squares_to_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for dim in 0..=12 {
        for _ in 0..30 {
            let a = random_skew(dim, &mut rng);
            let pf = pfaffian(&a);
            let det = to_dmatrix(&a).determinant();
            if dim % 2 == 1 {
                assert_eq!(pf, Complex64::new(0.0, 0.0));
                assert!(det.norm() < 1e-10, "dim {dim}: det {det}");
            } else {
                assert!((pf * pf - det).norm() / det.norm() < 1e-8, "dim {dim}");
            }
        }
    }
}

#[test]
fn pfaffian_congruence() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for dim in [2usize, 4, 6, 8, 10] {
        for _ in 0..20 {
            let a = random_skew(dim, &mut rng);
            let b = DMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let bab = b.transpose() * to_dmatrix(&a) * &b;
            let bab = SkewMatrix::from_dense(dim, bab.transpose().iter().copied().collect()).unwrap();
            let lhs = pfaffian(&bab);
            let rhs = b.determinant() * pfaffian(&a);
            assert!((lhs - rhs).norm() <= 1e-8 * rhs.norm().max(1e-300), "dim {dim}");
        }
    }
}

#[test]
fn gaussian_amplitudes_normalized_with_even_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for n in 1..=8 {
        for _ in 0..5 {
            let psi = normalize(random_skew(n, &mut rng)).unwrap();
            let mut norm = 0.0;
            for x in BitString::all(n) {
                let a = amplitude(&psi, x).unwrap();
                if x.parity() == 1 {
                    assert_eq!(a, Complex64::new(0.0, 0.0));
                }
                norm += a.norm_sqr();
            }
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn distinct_secrets_are_half_apart() {
    for n in 1..=6 {
        let ms: Vec<_> = Secret::all(n).map(|s| fermionized_parity_dist(&s).unwrap()).collect();
        let ds: Vec<_> = Secret::all(n).map(|s| parity_dist(&s).unwrap()).collect();
        for i in 0..ms.len() {
            for j in 0..i {
                assert_eq!(tvd(&ms[i], &ms[j]).unwrap(), 0.5);
                assert_eq!(tvd(&ds[i], &ds[j]).unwrap(), 0.5);
            }
        }
    }
}

#[test]
fn noisy_fermionized_is_mixture_of_flips() {
    for s in Secret::all(4) {
        for eta in [0.0, 0.1, 0.37, 1.0] {
            let m = fermionized_parity_dist(&s).unwrap();
            let flipped = DistributionTable::from_fn(6, |v| m.prob(v.with_bit(4, v.get(4) ^ 1).with_bit(5, v.get(5) ^ 1))).unwrap();
            let mix = m.mix(&flipped, eta).unwrap();
            let direct = fermionized_noisy_parity_dist(&s, NoiseRate::new(eta).unwrap()).unwrap();
            for (a, b) in mix.mass().iter().zip(direct.mass()) {
                assert!((a - b).abs() < 1e-16);
            }
        }
    }
}

#[test]
fn x_marginals_are_uniform() {
    let eta = NoiseRate::new(0.3).unwrap();
    for s in Secret::all(5) {
        let u = DistributionTable::uniform(5).unwrap();
        for d in [
            parity_dist(&s).unwrap(),
            mglab::dist::noisy_parity_dist(&s, eta).unwrap(),
            fermionized_parity_dist(&s).unwrap(),
            fermionized_noisy_parity_dist(&s, eta).unwrap(),
        ] {
            assert!(tvd(&d.marginal_prefix(5), &u).unwrap() < 1e-15);
        }
    }
}

#[test]
fn embedding_exact_for_all_secrets() {
    for n in 1..=6 {
        for s in Secret::all(n) {
            for eta in [0.0, 0.1, 0.25] {
                let eta = NoiseRate::new(eta).unwrap();
                let target = fermionized_noisy_parity_dist(&s, eta).unwrap();
                for local in [true, false] {
                    let e = embed_noisy_parity(&s, eta, local).unwrap();
                    mglab::gates::validate_circuit(&e.circuit).unwrap();
                    assert!(e.circuit.gates().all(|g| !matches!(g.kind, GateKind::Custom(_))));
                    assert!(tvd(&e.output_distribution().unwrap(), &target).unwrap() < 1e-10);
                }
            }
        }
    }
}

/// Least-squares fit of the worst local depth per n; depth must stay within
/// the fitted line plus a small slack and grow at most linearly.
#[test]
fn local_depth_is_linear() {
    let mut points = Vec::new();
    for n in 1..=10 {
        let worst = Secret::all(n).map(|s| embed_noisy_parity(&s, NoiseRate::new(0.1).unwrap(), true).unwrap().circuit.depth()).max().unwrap();
        assert!(worst <= n + 5, "n={n}: depth {worst}");
        points.push((n as f64, worst as f64));
    }
    let k = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let c1 = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let c2 = (sy - c1 * sx) / k;
    println!("local depth fit: depth ~= {c1:.3} n + {c2:.3}");
    assert!(c1 <= 1.5, "slope {c1}");
    for (x, y) in points {
        assert!(y <= c1 * x + c2 + 2.0);
    }
}

#[test]
fn routing_network_matches_bit_permutation() {
    for n in 1..=6 {
        for s in Secret::all(n) {
            let plan = plan_permutation(&s);
            let blocks = embed_parity(&s, false).unwrap();
            let pre = born_distribution(&blocks.circuit).unwrap();
            let routed = embed_parity(&s, true).unwrap();
            let post = born_distribution(&routed.circuit).unwrap();
            assert!(tvd(&pre.permute_bits(&plan.destination), &post).unwrap() < 1e-12);
        }
    }
}

#[test]
fn routing_is_sound_on_arbitrary_states() {
    // random state prepared on n+2 <= 8 wires, then routed through a plan's network
    for (n, seed) in [(3usize, 1u64), (4, 2), (5, 3), (6, 4)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Secret::random(n, &mut rng).unwrap();
        let plan = plan_permutation(&s);
        let prep = random_circuit(n + 2, 6, seed);
        let pre = born_distribution(&prep).unwrap();
        let mut full = prep.clone();
        for round in &plan.rounds {
            full.push_layer(round.iter().map(|&i| Gate2Q::fswap(i)).collect());
        }
        let post = born_distribution(&full).unwrap();
        assert!(tvd(&pre.permute_bits(&plan.destination), &post).unwrap() < 1e-12);
    }
}

#[test]
fn parity_blocks_match_even_distribution() {
    for k in 1..=10 {
        let d = born_distribution(&parity_block_circuit(k)).unwrap();
        assert!(tvd(&d, &mglab::dist::even_parity_dist(k).unwrap()).unwrap() < 1e-10);
        assert!(parity_block_circuit(k).depth() <= 2);
    }
}

#[test]
fn gate_matrices_sanity() {
    let f = fswap_gate();
    let u = ux_gate(0.3);
    assert_eq!(f[3][3], Complex64::new(-1.0, 0.0));
    assert!((u[0][3].im - 0.15f64.sin()).abs() < 1e-15);
}

#[test]
fn empirical_oracle_rarely_exceeds_tolerance() {
    let s: Secret = "1101".parse().unwrap();
    let d = parity_dist(&s).unwrap();
    let tau = 0.2;
    let q = StatQuery::parity_correlator("1100".parse().unwrap(), 1, 5);
    let exact = q.expectation(&d).unwrap();
    let trials = 2000;
    let mut violations = 0;
    for seed in 0..trials {
        let mut o = StatOracle::new(d.clone(), tau, OracleMode::Empirical { shots: default_shots(tau), seed }).unwrap();
        if (stat_query(&mut o, &q).unwrap() - exact).abs() > tau {
            violations += 1;
        }
    }
    assert!((violations as f64) / (trials as f64) < 1e-3);
}

#[test]
fn parseval_bound_small_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for n in 1..=6 {
        for _ in 0..30 {
            let values: Vec<f64> = (0..1 << (n + 1)).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let q = StatQuery::from_values(n + 1, values);
            for tau in [0.05, 0.1, 0.2, 0.5] {
                assert!(distinguishable_secrets(&q, n, tau).unwrap() as f64 <= 1.0 / (tau * tau));
            }
        }
        // a single correlator saturates one secret
        let q = StatQuery::parity_correlator(BitString::ones(n), 1, n + 1);
        assert_eq!(distinguishable_secrets(&q, n, 0.9).unwrap(), 1);
    }
}
