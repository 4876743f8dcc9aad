//! Acceptance gate. Each test prints one `PASS`/`FAIL` line for its criterion
//! (visible with `--nocapture`) and fails when the criterion fails.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use narrowlab_core::aplab::{count_aps_with_difference, hl_prediction, lambda_d, narrowness_report, prime_indicator_weight, SubsetRule};
use narrowlab_core::conditions::{width_threshold_fit, DeviationOptions};
use narrowlab_core::cutoff::{make_cutoff, sieve_factor, CutoffKind, SieveFactorConfig};
use narrowlab_core::linforms::{
    first_family, lindex, lindex_bruteforce, min_distinct_on_codim, second_family, third_family, LinearForm,
    LinearSystem,
};
use narrowlab_core::majorant::{build_majorant, check_minorization, majorant_pair_correlation, max_r, MajorantTable};
use narrowlab_core::numtheory::primorial_context;
use narrowlab_core::singular::{gallagher_average, singular_series, AverageMode, GallagherConfig, GallagherWeight};
use narrowlab_core::{BoxRegion, FactorSieve, ShiftVector};
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// criterion 1
const LINDEX_K3_BUDGET: Duration = Duration::from_secs(60);
// criterion 2
const MIN_DISTINCT_K4_BUDGET: Duration = Duration::from_secs(600);
// criterion 3
const ORACLE_SYSTEMS: usize = 100;
const ORACLE_MAX_FORMS: usize = 6;
const ORACLE_BUDGET: Duration = Duration::from_secs(300);
// criterion 4
const C2_TOL: f64 = 1e-3;
const ENERGY_TOL: f64 = 1e-9;
// criterion 5
const TWIN_VALUE: f64 = 1.32032;
const TWIN_TOL: f64 = 1e-4;
const TWIN_PMAX: u64 = 10_000_000;
const INVARIANCE_VECTORS: usize = 200;
// criterion 6
const GALLAGHER_HI: i64 = 500;
const GALLAGHER_WS: [u64; 4] = [2, 3, 5, 7];
const GALLAGHER_SIGMAS: f64 = 2.0;
// criteria 7 and 8
const MAJORANT_MODULUS: u64 = 1_000_003;
const MAJORANT_LADDER: [u64; 3] = [100_003, 1_000_003, 10_000_019];
const MAJORANT_W: u64 = 3;
const MAJORANT_B: i64 = 1;
const CORRELATION_SHIFT: i64 = 6;
const MEAN_BRACKET: (f64, f64) = (0.5, 1.5);
const RATIO_BRACKET: (f64, f64) = (0.5, 2.0);
const FLOOR_BUDGET: Duration = Duration::from_secs(60);
// criterion 9
const ALPHAS: [f64; 3] = [0.2, 0.1, 0.05];
const FIRST_SLOPE: (f64, f64) = (4.0, 0.3);
const THIRD_SLOPE: (f64, f64) = (2.0, 0.2);
const THRESHOLD_BUDGET: Duration = Duration::from_secs(300);
// criterion 10
const NARROW_LADDER: [u64; 3] = [100_000, 1_000_000, 10_000_000];
const LAMBDA_MODULI: [u64; 2] = [100_003, 1_000_003];
// criterion 11
const HL_N: u64 = 10_000_000;
const HL_D: u64 = 6;
const HL_TOL: f64 = 0.10;
// criterion 12
const LAMBDA_INSTANCES: usize = 50;

const SIEVE_LIMIT: u64 = 10_000_100;

fn sieve() -> &'static FactorSieve {
    static SIEVE: OnceLock<FactorSieve> = OnceLock::new();
    SIEVE.get_or_init(|| FactorSieve::new(SIEVE_LIMIT).expect("sieve"))
}

fn report(n: u32, title: &str, pass: bool, detail: &str) {
    println!("{} criterion {n:>2} ({title}): {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({title}) failed: {detail}");
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

#[test]
fn criterion_01_collision_index_exactness() {
    let mut cases = Vec::new();
    for k in 2..=3usize {
        cases.push((format!("first({k})"), first_family(k).unwrap(), (k as i64 - 1) << (k - 2)));
        cases.push((format!("second({k})"), second_family(k).unwrap(), 1 << (k - 1)));
        for j in 1..=k {
            cases.push((format!("third({k},{j})"), third_family(k, j).unwrap(), k as i64 - 1));
        }
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, sys, want) in cases {
        let start = Instant::now();
        let got = lindex(&sys).expect("lindex").value;
        let elapsed = start.elapsed();
        ok &= got == int(want);
        if name == "first(3)" {
            ok &= elapsed < LINDEX_K3_BUDGET;
        }
        notes.push(format!("{name}={got} (want {want}, {elapsed:.1?})"));
    }
    report(1, "collision index exactness", ok, &notes.join(", "));
}

#[test]
fn criterion_02_codim_propositions() {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in 2..=4usize {
        let sys = first_family(k).unwrap();
        let c1 = min_distinct_on_codim(&sys, 1).unwrap().count;
        let c2 = min_distinct_on_codim(&sys, 2).unwrap().count;
        let (b1, b2) = ((k + 1) << (k - 2), 1usize << (k - 1));
        ok &= c1 >= b1 && c2 >= b2;
        notes.push(format!("k={k}: codim1 {c1} ≥ {b1}, codim2 {c2} ≥ {b2}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < MIN_DISTINCT_K4_BUDGET;
    notes.push(format!("{elapsed:.1?}"));
    report(2, "codimension propositions", ok, &notes.join("; "));
}

fn random_system(rng: &mut ChaCha8Rng) -> LinearSystem {
    loop {
        let d = rng.random_range(1..=4usize);
        let t = rng.random_range(2..=ORACLE_MAX_FORMS);
        let forms: Vec<LinearForm> = (0..t)
            .map(|_| LinearForm::new((0..d).map(|_| rng.random_range(-2..=2)).collect(), rng.random_range(-2..=2)))
            .collect();
        if let Ok(sys) = LinearSystem::new(d, forms) {
            return sys;
        }
    }
}

#[test]
fn criterion_03_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_603);
    let mut mismatches = 0;
    for _ in 0..ORACLE_SYSTEMS {
        let sys = random_system(&mut rng);
        if lindex(&sys).unwrap().value != lindex_bruteforce(&sys).unwrap().value {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        3,
        "oracle equivalence",
        mismatches == 0 && elapsed < ORACLE_BUDGET,
        &format!("{mismatches} mismatches over {ORACLE_SYSTEMS} systems, {elapsed:.1?}"),
    );
}

#[test]
fn criterion_04_sieve_factor_normalization() {
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in [CutoffKind::Cosine, CutoffKind::Bump] {
        let spec = make_cutoff(kind).unwrap();
        let c2 = sieve_factor(&spec, 2, &SieveFactorConfig::default_for(kind, 2)).unwrap().value;
        let whole = spec.full_line_residual().unwrap();
        let c2_ok = (c2 - 1.0).abs() <= C2_TOL;
        let energy_ok = whole < ENERGY_TOL;
        ok &= c2_ok && energy_ok;
        notes.push(format!(
            "{kind:?}: c2 = {c2:.6} [{}], |∫|χ′|² − 1| = {whole:.3e} [{}]",
            if c2_ok { "ok" } else { "off" },
            if energy_ok { "ok" } else { "off" }
        ));
    }
    report(4, "sieve factor normalization", ok, &notes.join("; "));
}

#[test]
fn criterion_05_singular_series() {
    let twin = singular_series(&ShiftVector::new(vec![0, 2]).unwrap(), TWIN_PMAX, 1).unwrap();
    let twin_ok = (twin.value - TWIN_VALUE).abs() <= TWIN_TOL;
    let adjacent = singular_series(&ShiftVector::new(vec![0, 1]).unwrap(), 1000, 1).unwrap();
    let zero_ok = adjacent.value == 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0f64;
    for _ in 0..INVARIANCE_VECTORS {
        let len = rng.random_range(2..=5);
        let mut h: Vec<i64> = (0..len).map(|_| rng.random_range(-60..=60)).collect();
        let base = singular_series(&ShiftVector::new(h.clone()).unwrap(), 100_000, 1).unwrap().value;
        let shift = rng.random_range(-1000..=1000);
        let moved = singular_series(&ShiftVector::new(h.iter().map(|x| x + shift).collect()).unwrap(), 100_000, 1)
            .unwrap()
            .value;
        h.shuffle(&mut rng);
        let permuted = singular_series(&ShiftVector::new(h).unwrap(), 100_000, 1).unwrap().value;
        for v in [moved, permuted] {
            let diff = if base == 0.0 { v.abs() } else { (v - base).abs() / base };
            worst = worst.max(diff);
        }
    }
    let inv_ok = worst <= 1e-12;
    report(
        5,
        "singular series",
        twin_ok && zero_ok && inv_ok,
        &format!(
            "G(0,2) = {:.7} (pmax 1e7), G(0,1) = {}, worst invariance gap {worst:.1e} over {INVARIANCE_VECTORS} vectors",
            twin.value, adjacent.value
        ),
    );
}

#[test]
fn criterion_06_gallagher_trend() {
    let region = BoxRegion::cube(2, 1, GALLAGHER_HI).unwrap();
    let reports: Vec<_> = GALLAGHER_WS
        .iter()
        .map(|&w| {
            let cfg = GallagherConfig {
                w,
                mode: AverageMode::Exact,
                ..Default::default()
            };
            gallagher_average(GallagherWeight::SingularW, &region, &cfg).unwrap()
        })
        .collect();
    let ok = reports
        .windows(2)
        .all(|p| p[1].deviation <= p[0].deviation + GALLAGHER_SIGMAS * (p[0].std_error + p[1].std_error));
    let detail: Vec<String> = GALLAGHER_WS
        .iter()
        .zip(&reports)
        .map(|(w, r)| format!("w={w}: mean {:.5} ± {:.5}", r.mean, r.std_error))
        .collect();
    report(6, "Gallagher trend", ok, &detail.join(", "));
}

fn majorant(modulus: u64) -> MajorantTable {
    let ctx = primorial_context(MAJORANT_W, MAJORANT_B, modulus).unwrap();
    let chi = make_cutoff(CutoffKind::Cosine).unwrap();
    build_majorant(&ctx, max_r(&ctx), &chi, sieve()).unwrap()
}

#[test]
fn criterion_07_majorant_floor() {
    let start = Instant::now();
    let table = majorant(MAJORANT_MODULUS);
    let rep = check_minorization(&table, sieve());
    let elapsed = start.elapsed();
    report(
        7,
        "majorant floor",
        rep.violations == 0 && rep.primes_checked > 0 && elapsed < FLOOR_BUDGET,
        &format!(
            "{} violations over {} primes, floor {:.4}, {elapsed:.1?}",
            rep.violations, rep.primes_checked, rep.floor
        ),
    );
}

#[test]
fn criterion_08_majorant_mean_and_correlation() {
    let mut means = Vec::new();
    let mut ratios = Vec::new();
    for &m in &MAJORANT_LADDER {
        let table = majorant(m);
        means.push(table.mean());
        ratios.push(majorant_pair_correlation(&table, CORRELATION_SHIFT, 1000).unwrap().ratio);
    }
    let mid = MAJORANT_LADDER.iter().position(|&m| m == MAJORANT_MODULUS).unwrap();
    let mean_ok = (MEAN_BRACKET.0..=MEAN_BRACKET.1).contains(&means[mid]);
    let mean_trend = means.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    let ratio_ok = (RATIO_BRACKET.0..=RATIO_BRACKET.1).contains(&ratios[mid]);
    let ratio_trend = ratios.windows(2).all(|w| w[1].ln().abs() <= w[0].ln().abs());
    report(
        8,
        "majorant mean and correlation",
        mean_ok && mean_trend && ratio_ok && ratio_trend,
        &format!("means {means:.4?}, correlation ratios (h={CORRELATION_SHIFT}) {ratios:.4?} over N' = {MAJORANT_LADDER:?}"),
    );
}

#[test]
fn criterion_09_width_threshold() {
    let start = Instant::now();
    let opts = DeviationOptions::default();
    let mut ok = true;
    let mut notes = Vec::new();
    let mut run = |name: String, sys: LinearSystem, (centre, tol): (f64, f64)| {
        let fit = width_threshold_fit(&sys, &ALPHAS, &opts).unwrap();
        let l = lindex(&sys).unwrap().value;
        let ratios_ok = fit
            .points
            .iter()
            .all(|p| BigRational::new((p.dominant_merged as i64).into(), (p.dominant_codim as i64).into()) == l);
        let slope_ok = (fit.slope - centre).abs() <= tol;
        ok &= ratios_ok && slope_ok;
        notes.push(format!(
            "{name}: slope {:.3} (want {centre} ± {tol}), dominant ratios {:?} vs L = {l}",
            fit.slope,
            fit.points.iter().map(|p| p.dominant_ratio).collect::<Vec<_>>()
        ));
    };
    run("first(3)".into(), first_family(3).unwrap(), FIRST_SLOPE);
    for j in 1..=3 {
        run(format!("third(3,{j})"), third_family(3, j).unwrap(), THIRD_SLOPE);
    }
    let elapsed = start.elapsed();
    ok &= elapsed < THRESHOLD_BUDGET;
    notes.push(format!("{elapsed:.1?}"));
    report(9, "width threshold exponent", ok, &notes.join("; "));
}

#[test]
fn criterion_10_narrow_progressions() {
    let rows = narrowness_report(&NARROW_LADDER, 3, &SubsetRule::all(), None, sieve()).unwrap();
    let ap_ok = rows.iter().all(|r| r.min_d.is_some_and(|d| d >= 1 && (d as f64) <= r.log_pow_lk));
    let mut notes: Vec<String> = rows
        .iter()
        .map(|r| format!("N={}: min d {:?}, median d {:?}, (log N)^4 = {:.0}", r.n, r.min_d, r.median_d, r.log_pow_lk))
        .collect();
    let mut lambda_ok = true;
    for &m in &LAMBDA_MODULI {
        let f = prime_indicator_weight(m, sieve()).unwrap();
        let d = (m as f64).ln().powi(4).ceil() as u64;
        let v = lambda_d(&[&f, &f, &f], d).unwrap();
        lambda_ok &= v > 0.0;
        notes.push(format!("Λ_D(f,f,f) at N'={m}, D={d}: {v:.4}"));
    }
    report(10, "narrow progressions", ap_ok && lambda_ok, &notes.join("; "));
}

#[test]
fn criterion_11_hardy_littlewood() {
    let count = count_aps_with_difference(HL_N, 3, HL_D, sieve()).unwrap();
    let pred = hl_prediction(HL_N, 3, HL_D, 1_000_000).unwrap();
    let rel = (count as f64 - pred.value).abs() / pred.value;
    report(
        11,
        "Hardy–Littlewood comparison",
        rel <= HL_TOL,
        &format!(
            "count {count}, prediction {:.1} (crude {:.1}), relative gap {rel:.4}",
            pred.value, pred.crude
        ),
    );
}

#[test]
fn criterion_12_lambda_d_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut mismatches = 0;
    for _ in 0..LAMBDA_INSTANCES {
        let n = rng.random_range(3..=211usize);
        let d_max = rng.random_range(1..=20usize.min(n - 1));
        let k = rng.random_range(1..=4usize);
        let fs: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| f64::from(rng.random_range(0..=3u8))).collect())
            .collect();
        let mut brute = 0.0;
        for start in 0..n {
            for d in 1..=d_max {
                brute += fs.iter().enumerate().map(|(j, f)| f[(start + j * d) % n]).product::<f64>();
            }
        }
        brute /= (n * d_max) as f64;
        let refs: Vec<&[f64]> = fs.iter().map(Vec::as_slice).collect();
        if lambda_d(&refs, d_max as u64).unwrap() != brute {
            mismatches += 1;
        }
    }
    report(
        12,
        "Λ_D brute-force equivalence",
        mismatches == 0,
        &format!("{mismatches} mismatches over {LAMBDA_INSTANCES} instances"),
    );
}
