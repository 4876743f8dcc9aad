//! Monte Carlo linear-forms averages against exhaustive evaluation.

use narrowlab_core::conditions::{lfc_average_exact, lfc_average_mc, RandomModel};
use narrowlab_core::cutoff::{make_cutoff, CutoffKind};
use narrowlab_core::linforms::{first_family, third_family};
use narrowlab_core::majorant::{build_majorant, max_r};
use narrowlab_core::numtheory::primorial_context;
use narrowlab_core::{BoxRegion, ExponentPattern, FactorSieve, LinearSystem, MajorantTable, WeightModel};

const RUNS: u64 = 100;
const SAMPLES: u64 = 5000;

fn table(modulus: u64) -> MajorantTable {
    let ctx = primorial_context(3, 1, modulus).unwrap();
    let sieve = FactorSieve::new(1000).unwrap();
    build_majorant(&ctx, max_r(&ctx), &make_cutoff(CutoffKind::Cosine).unwrap(), &sieve).unwrap()
}

fn within_three_sigma(model: &WeightModel, sys: &LinearSystem, e: &ExponentPattern, region: &BoxRegion) -> u64 {
    let exact = lfc_average_exact(model, sys, e, region, 1 << 24).unwrap();
    (0..RUNS)
        .filter(|&seed| {
            let mc = lfc_average_mc(model, sys, e, region, SAMPLES, seed).unwrap();
            (mc.estimate - exact).abs() <= 3.0 * mc.std_error
        })
        .count() as u64
}

#[test]
fn majorant_table_monte_carlo_matches_exact() {
    let t = table(1009);
    let model = WeightModel::Table(&t);
    let cases = [
        (first_family(2).unwrap(), "1,1,1,1", 2),
        (first_family(2).unwrap(), "1,0,1,0", 2),
        (third_family(3, 1).unwrap(), "1,1,1,1,1", 10),
    ];
    for (sys, e, s) in cases {
        let e: ExponentPattern = e.parse().unwrap();
        let region = BoxRegion::centered(sys.d(), s).unwrap();
        let hits = within_three_sigma(&model, &sys, &e, &region);
        assert!(hits >= 99, "{hits}/{RUNS} runs within 3σ for pattern {e:?}");
    }
}

#[test]
fn constant_one_is_exact() {
    let sys = first_family(2).unwrap();
    let model = WeightModel::ConstantOne { modulus: 101 };
    let region = BoxRegion::centered(sys.d(), 3).unwrap();
    let e = ExponentPattern::ones(sys.t());
    let mc = lfc_average_mc(&model, &sys, &e, &region, SAMPLES, 1).unwrap();
    assert_eq!(mc.estimate, 1.0);
    assert_eq!(mc.std_error, 0.0);
    assert_eq!(lfc_average_exact(&model, &sys, &e, &region, 1 << 20).unwrap(), 1.0);
}

#[test]
fn random_model_average_over_seeds_matches_collision_formula() {
    // Each seed draws a fresh model, so the seed-average estimates the
    // expectation over draws that the exact routine computes.
    let sys = third_family(3, 2).unwrap();
    let region = BoxRegion::centered(sys.d(), 4).unwrap();
    let e = ExponentPattern::ones(sys.t());
    let alpha = 0.5;
    let exact = lfc_average_exact(
        &WeightModel::Random(RandomModel::new(alpha, 0, 100_003).unwrap()),
        &sys,
        &e,
        &region,
        1 << 20,
    )
    .unwrap();
    let estimates: Vec<f64> = (0..RUNS)
        .map(|seed| {
            let model = WeightModel::Random(RandomModel::new(alpha, seed, 100_003).unwrap());
            lfc_average_mc(&model, &sys, &e, &region, SAMPLES, seed).unwrap().estimate
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / RUNS as f64;
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (RUNS - 1) as f64;
    let se = (var / RUNS as f64).sqrt();
    assert!((mean - exact).abs() <= 4.0 * se, "mean {mean} vs exact {exact} (se {se})");
}
