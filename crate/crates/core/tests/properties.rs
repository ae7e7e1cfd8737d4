use std::collections::VecDeque;
use std::f64::consts::PI;

use mcx_encoder::circuit::{amplification_rounds, amplified_success_probability, amplify, build_core};
use mcx_encoder::pathopt::{build_path_matrix, edge_costs, solve_tsp};
use mcx_encoder::preprocess::{compute_angles, density_rho, quantize, quantized_success_probability, reconstruct};
use mcx_encoder::simulator::{postselect_flag, run};
use mcx_encoder::{decompose, BinaryVector, ControlString, Decomposer, InputVector, OrderMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal_input(rng: &mut ChaCha8Rng, n: u32) -> InputVector<f64> {
    InputVector::new((0..1usize << n).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

fn infidelity(v: &[f64], w: &[f64]) -> f64 {
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = v.iter().zip(w).map(|(a, b)| a / nv * b).sum();
    1.0 - dot * dot
}

#[test]
fn quantization_error_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for l in 2..=12u32 {
        let v = normal_input(&mut rng, 6);
        let theta = compute_angles(&v).unwrap();
        let b = quantize(&theta, l).unwrap();
        let step = 0.5f64.powi(l as i32 - 1);
        for (i, &t) in theta.thetas().iter().enumerate() {
            let err = (b.quantized_angle::<f64>(i) - t).abs();
            assert!(err <= step + 1e-15, "L = {l}, row {i}: {err}");
            // truncation toward zero never increases the magnitude
            assert!(b.quantized_angle::<f64>(i).abs() <= t.abs() + 1e-15);
        }
    }
}

#[test]
fn infidelity_falls_with_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inputs: Vec<_> = (0..100).map(|_| normal_input(&mut rng, 5)).collect();
    let means: Vec<f64> = (2..=12u32)
        .map(|l| {
            let total: f64 = inputs
                .iter()
                .map(|v| {
                    let w = reconstruct::<f64>(&quantize(&compute_angles(v).unwrap(), l).unwrap()).unwrap();
                    infidelity(v.values(), &w)
                })
                .sum();
            total / inputs.len() as f64
        })
        .collect();
    for (i, w) in means.windows(2).enumerate() {
        assert!(w[1] < w[0], "L = {} -> {}: {means:?}", i + 2, i + 3);
    }
}

#[test]
fn success_probability_approaches_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let v = normal_input(&mut rng, n);
        let rho = density_rho(&v).unwrap();
        for l in 2..=12u32 {
            let p = quantized_success_probability::<f64>(&quantize(&compute_angles(&v).unwrap(), l).unwrap());
            assert!((p - rho).abs() < 0.5f64.powi(l as i32 - 2) * PI, "n = {n}, L = {l}: p {p} rho {rho}");
        }
    }
}

/// Fewest subcubes whose XOR is each pattern of `2^n` bits, by BFS over all patterns.
fn optimal_covers(n: u32) -> Vec<u8> {
    let cubes: Vec<u32> = ControlString::all(n)
        .map(|c| c.cells().fold(0u32, |m, i| m | 1 << i))
        .collect();
    let mut dist = vec![u8::MAX; 1 << (1 << n)];
    dist[0] = 0;
    let mut queue = VecDeque::from([0u32]);
    while let Some(s) = queue.pop_front() {
        for &c in &cubes {
            let t = (s ^ c) as usize;
            if dist[t] == u8::MAX {
                dist[t] = dist[s as usize] + 1;
                queue.push_back(t as u32);
            }
        }
    }
    dist
}

#[test]
fn decomposition_against_exhaustive_optimum() {
    for n in 1..=4u32 {
        let opt = optimal_covers(n);
        let (mut total_m, mut total_opt, mut exact) = (0usize, 0usize, 0usize);
        for pattern in 0..opt.len() {
            let b = BinaryVector::from_indices(n, (0..1usize << n).filter(|i| pattern >> i & 1 == 1)).unwrap();
            let m = decompose(&b).unwrap().gate_count();
            let best = opt[pattern] as usize;
            assert!(m >= best, "n = {n}, {b}: M {m} below optimum {best}");
            assert!(m as u64 <= b.popcount(), "n = {n}, {b}: M {m} > popcount");
            total_m += m;
            total_opt += best;
            exact += (m == best) as usize;
        }
        println!(
            "n = {n}: M/optimum {:.4}, optimal on {exact}/{} patterns",
            total_m as f64 / total_opt.max(1) as f64,
            opt.len()
        );
    }
}

#[test]
fn pipeline_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..5 {
        let v = normal_input(&mut rng, 6);
        let b = quantize(&compute_angles(&v).unwrap(), 6).unwrap();
        let build = || {
            let dec = Decomposer::new();
            let costs = edge_costs(&build_path_matrix(&b), &dec).unwrap();
            let tour = solve_tsp(&costs, OrderMode::Auto).unwrap();
            serde_json::to_string(&build_core(&b, &tour, &dec).unwrap()).unwrap()
        };
        assert_eq!(build(), build());
    }
}

#[test]
fn flag_probability_matches_quantized_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let dec = Decomposer::new();
    for _ in 0..30 {
        let n = rng.gen_range(1..=6);
        let l = rng.gen_range(2..=6);
        let v = normal_input(&mut rng, n);
        let b = quantize(&compute_angles(&v).unwrap(), l).unwrap();
        let costs = edge_costs(&build_path_matrix(&b), &dec).unwrap();
        let core = build_core(&b, &solve_tsp(&costs, OrderMode::Auto).unwrap(), &dec).unwrap();
        let p: f64 = b.signed_sines::<f64>().iter().map(|s| s * s).sum::<f64>() / (1usize << n) as f64;
        let ps = postselect_flag(&run::<f64>(&core).unwrap()).unwrap();
        assert!((ps.flag_probability - p).abs() < 1e-10, "{} vs {p}", ps.flag_probability);
    }
}

#[test]
fn amplification_reaches_predicted_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let dec = Decomposer::new();
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let v = normal_input(&mut rng, n);
        let b = quantize(&compute_angles(&v).unwrap(), 5).unwrap();
        let costs = edge_costs(&build_path_matrix(&b), &dec).unwrap();
        let core = build_core(&b, &solve_tsp(&costs, OrderMode::Auto).unwrap(), &dec).unwrap();
        let p = postselect_flag(&run::<f64>(&core).unwrap()).unwrap().flag_probability;
        for k in 0..=amplification_rounds(p).unwrap() + 1 {
            let amplified = postselect_flag(&run::<f64>(&amplify(&core, k)).unwrap()).unwrap();
            let want = amplified_success_probability(p, k);
            assert!((amplified.flag_probability - want).abs() < 1e-9, "k = {k}: {} vs {want}", amplified.flag_probability);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn decomposition_reproduces_input(n in 1u32..=7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..1usize << n).map(|_| rng.gen()).collect();
        let b = BinaryVector::from_bools(&bits).unwrap();
        let d = decompose(&b).unwrap();
        let mut acc = BinaryVector::zeros(n).unwrap();
        for c in d.controls() {
            for i in c.cells() {
                acc.flip(i);
            }
        }
        prop_assert_eq!(acc, b.clone());
        prop_assert!(d.gate_count() as u64 <= b.popcount());
    }
}
