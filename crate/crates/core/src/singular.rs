//! Singular series of shift vectors, the discriminant Δ(h), the error factor
//! E(h) and Gallagher-type averages over integer boxes.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::BoxRegion;
use crate::error::{Error, Result};
use crate::numtheory::{is_prime_u64, prime_divisors, primorial, small_primes};
use crate::summation::{stream_rng, CompensatedSum, MeanAccumulator};

/// A vector of integer shifts `(h_1, …, h_k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ShiftVector {
    entries: Vec<i64>,
}

impl ShiftVector {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("shift vector must have at least one entry"));
        }
        Ok(Self { entries })
    }

    /// `(0, d, 2d, …, (k-1)d)`.
    pub fn progression(k: usize, d: i64) -> Result<Self> {
        Self::new((0..k as i64).map(|i| i * d).collect())
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct values in increasing order.
    pub fn distinct(&self) -> Vec<i64> {
        let mut v = self.entries.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Number of distinct values.
    pub fn r(&self) -> usize {
        self.distinct().len()
    }

    /// `(value, multiplicity)` pairs in increasing order of value.
    pub fn multiplicities(&self) -> Vec<(i64, usize)> {
        let mut m = BTreeMap::new();
        for &h in &self.entries {
            *m.entry(h).or_insert(0usize) += 1;
        }
        m.into_iter().collect()
    }

    pub fn translated(&self, c: i64) -> Self {
        Self {
            entries: self.entries.iter().map(|h| h + c).collect(),
        }
    }
}

impl std::str::FromStr for ShiftVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::domain(format!("`{p}` is not an integer shift")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

fn residue_count(h: &ShiftVector, p: u64) -> usize {
    let mut seen: Vec<u64> = h.entries.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Number of residue classes mod `p` met by the entries of `h`.
pub fn occupied_residues(h: &ShiftVector, p: u64) -> Result<usize> {
    if !is_prime_u64(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    Ok(residue_count(h, p))
}

/// `Δ(h) = ∏_{i<j, h_i≠h_j} (h_i − h_j)` in arbitrary precision.
pub fn delta(h: &ShiftVector) -> BigInt {
    let e = &h.entries;
    let mut acc = BigInt::from(1);
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            if e[i] != e[j] {
                acc *= BigInt::from(e[i] as i128 - e[j] as i128);
            }
        }
    }
    acc
}

/// Distinct primes dividing `Δ(h)`, increasing.
pub fn delta_primes(h: &ShiftVector) -> Vec<u64> {
    let d = h.distinct();
    let mut primes = Vec::new();
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            let diff = (d[j] as i128 - d[i] as i128).unsigned_abs() as u64;
            primes.extend(prime_divisors(diff));
        }
    }
    primes.sort_unstable();
    primes.dedup();
    primes
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularValue {
    pub value: f64,
    pub pmax: u64,
    /// Bound on `|G / G_truncated − 1|` from the primes above `pmax`.
    pub tail_bound: f64,
    pub zero: bool,
    pub r: usize,
    pub w_modulus: u64,
}

/// Reusable evaluator of `G_W(h)` truncated at `pmax`.
///
/// The product over primes `p > r` that do not divide `Δ(h)` depends on
/// `h` only through `r`, so it is cached per `r`.
#[derive(Debug)]
pub struct SingularSeries {
    pmax: u64,
    w_modulus: u64,
    primes: Vec<u64>,
    generic: Mutex<HashMap<usize, f64>>,
}

impl SingularSeries {
    /// `w_modulus` is the squarefree `W` whose primes are skipped (1 for the
    /// plain series).
    pub fn new(pmax: u64, w_modulus: u64) -> Result<Self> {
        if pmax < 2 {
            return Err(Error::domain("pmax must be at least 2"));
        }
        if w_modulus == 0 {
            return Err(Error::domain("W must be positive"));
        }
        let w_primes = prime_divisors(w_modulus);
        if w_primes.iter().product::<u64>() != w_modulus {
            return Err(Error::domain(format!("W = {w_modulus} is not squarefree")));
        }
        let primes = small_primes(pmax).into_iter().filter(|p| w_modulus % p != 0).collect();
        Ok(Self {
            pmax,
            w_modulus,
            primes,
            generic: Mutex::new(HashMap::new()),
        })
    }

    pub fn pmax(&self) -> u64 {
        self.pmax
    }

    pub fn w_modulus(&self) -> u64 {
        self.w_modulus
    }

    // log of ∏_{p > r} (1 − 1/p)^{−r} (1 − r/p) over the retained primes
    fn generic_log(&self, r: usize) -> f64 {
        if let Some(&v) = self.generic.lock().expect("cache lock").get(&r) {
            return v;
        }
        let rf = r as f64;
        let mut acc = CompensatedSum::new();
        for &p in self.primes.iter().filter(|&&p| p as usize > r) {
            let pf = p as f64;
            acc.add(-rf * (-1.0 / pf).ln_1p() + (-rf / pf).ln_1p());
        }
        let v = acc.value();
        self.generic.lock().expect("cache lock").insert(r, v);
        v
    }

    pub fn evaluate(&self, h: &ShiftVector) -> Result<SingularValue> {
        let r = h.r();
        let k = h.len() as u64;
        if self.pmax < k {
            return Err(Error::domain(format!(
                "pmax = {} is below the vector length {k}",
                self.pmax
            )));
        }
        let dp = delta_primes(h);
        if let Some(&p) = dp.iter().find(|&&p| p > self.pmax && self.w_modulus % p != 0) {
            return Err(Error::domain(format!(
                "pmax = {} does not cover the prime {p} dividing Δ(h)",
                self.pmax
            )));
        }
        let mut value = CompensatedSum::new();
        value.add(self.generic_log(r));
        let rf = r as f64;
        let mut zero = false;
        for &p in self.primes.iter().take_while(|&&p| p as usize <= r) {
            let nu = residue_count(h, p);
            if nu as u64 == p {
                zero = true;
                break;
            }
            let pf = p as f64;
            value.add(-rf * (-1.0 / pf).ln_1p() + (-(nu as f64) / pf).ln_1p());
        }
        if !zero {
            for &p in dp.iter().filter(|&&p| p as usize > r && self.w_modulus % p != 0) {
                let nu = residue_count(h, p) as f64;
                let pf = p as f64;
                value.add((-nu / pf).ln_1p() - (-rf / pf).ln_1p());
            }
        }
        let tail_bound = if r <= 1 {
            0.0
        } else {
            let pm = self.pmax as f64;
            (rf * rf / (2.0 * pm * (1.0 - rf / (pm + 1.0)))).exp_m1()
        };
        Ok(SingularValue {
            value: if zero { 0.0 } else { value.value().exp() },
            pmax: self.pmax,
            tail_bound,
            zero,
            r,
            w_modulus: self.w_modulus,
        })
    }
}

/// `G_W(h)` with exact local factors at every prime up to `pmax`.
pub fn singular_series(h: &ShiftVector, pmax: u64, w_modulus: u64) -> Result<SingularValue> {
    SingularSeries::new(pmax, w_modulus)?.evaluate(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorFactor {
    pub value: f64,
    /// `Σ_{p | Δ(h)} 1/p`.
    pub prime_sum: f64,
}

/// `E(h) = exp(C · Σ_{p|Δ(h)} 1/p)`.
pub fn error_factor(h: &ShiftVector, c: f64) -> ErrorFactor {
    let prime_sum: f64 = delta_primes(h).iter().map(|&p| 1.0 / p as f64).sum();
    ErrorFactor {
        value: (c * prime_sum).exp(),
        prime_sum,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "weight", rename_all = "kebab-case")]
pub enum GallagherWeight {
    /// `G_W(h)`.
    SingularW,
    /// `E(h)` with the given constant.
    ErrorFactor { c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AverageMode {
    Exact,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GallagherConfig {
    /// Primes up to `w` form `W`.
    pub w: u64,
    pub pmax: u64,
    pub mode: AverageMode,
    pub exact_cap: u128,
}

impl Default for GallagherConfig {
    fn default() -> Self {
        Self {
            w: 1,
            pmax: 100_000,
            mode: AverageMode::Exact,
            exact_cap: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GallagherReport {
    pub mean: f64,
    pub deviation: f64,
    pub std_error: f64,
    pub points: u64,
    pub exact: bool,
    pub big_w: u64,
}

const SAMPLE_STREAMS: u64 = 64;
const EXACT_CHUNK: u128 = 4096;

/// Mean of the chosen weight over the integer points of `region`.
pub fn gallagher_average(
    weight: GallagherWeight,
    region: &BoxRegion,
    cfg: &GallagherConfig,
) -> Result<GallagherReport> {
    let big_w = primorial(cfg.w)?;
    let series = SingularSeries::new(cfg.pmax, big_w)?;
    let eval = |point: Vec<i64>| -> Result<f64> {
        let h = ShiftVector::new(point)?;
        Ok(match weight {
            GallagherWeight::SingularW => series.evaluate(&h)?.value,
            GallagherWeight::ErrorFactor { c } => error_factor(&h, c).value,
        })
    };
    let (acc, exact) = match cfg.mode {
        AverageMode::Exact => {
            let total = region.point_count();
            if total > cfg.exact_cap {
                return Err(Error::resource(
                    format!("exact average over {total} points exceeds the cap {}", cfg.exact_cap),
                    total.min(u64::MAX as u128) as u64,
                ));
            }
            let chunks = total.div_ceil(EXACT_CHUNK) as u64;
            let parts = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut acc = MeanAccumulator::default();
                    let lo = c as u128 * EXACT_CHUNK;
                    let hi = (lo + EXACT_CHUNK).min(total);
                    for i in lo..hi {
                        acc.push(eval(region.point(i))?);
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            (merge_all(&parts), true)
        }
        AverageMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(Error::domain("sampling needs at least one sample"));
            }
            let parts = (0..SAMPLE_STREAMS)
                .into_par_iter()
                .map(|s| {
                    let n = samples / SAMPLE_STREAMS + u64::from(s < samples % SAMPLE_STREAMS);
                    let mut rng = stream_rng(seed, s);
                    let mut acc = MeanAccumulator::default();
                    for _ in 0..n {
                        acc.push(eval(region.sample(&mut rng))?);
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            (merge_all(&parts), false)
        }
    };
    Ok(GallagherReport {
        mean: acc.mean,
        deviation: (acc.mean - 1.0).abs(),
        std_error: acc.std_error(),
        points: acc.count,
        exact,
        big_w,
    })
}

fn merge_all(parts: &[MeanAccumulator]) -> MeanAccumulator {
    let mut total = MeanAccumulator::default();
    for p in parts {
        total.merge(p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[i64]) -> ShiftVector {
        ShiftVector::new(v.to_vec()).unwrap()
    }

    // direct product with the residue sets built from scratch at every prime
    fn naive_series(h: &[i64], pmax: u64, w_modulus: u64) -> f64 {
        let mut d = h.to_vec();
        d.sort_unstable();
        d.dedup();
        let r = d.len() as i32;
        let mut g = 1.0;
        for p in small_primes(pmax) {
            if w_modulus % p == 0 {
                continue;
            }
            let mut res: Vec<i64> = h.iter().map(|x| x.rem_euclid(p as i64)).collect();
            res.sort_unstable();
            res.dedup();
            let pf = p as f64;
            g *= (1.0 - 1.0 / pf).powi(-r) * (1.0 - res.len() as f64 / pf);
        }
        g
    }

    #[test]
    fn occupancy_examples() {
        assert_eq!(occupied_residues(&sv(&[0, 2, 4]), 2).unwrap(), 1);
        assert_eq!(occupied_residues(&sv(&[0, 2, 4]), 3).unwrap(), 3);
        assert_eq!(occupied_residues(&sv(&[0, 1]), 2).unwrap(), 2);
        assert!(occupied_residues(&sv(&[0, 1]), 4).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&sv(&[0, 2, 4])), BigInt::from(-16));
        assert_eq!(delta(&sv(&[5, 5])), BigInt::from(1));
        assert_eq!(delta(&sv(&[0, 1])), BigInt::from(-1));
        let big = sv(&[0, i64::MAX, i64::MIN]);
        let (a, b) = (i64::MAX as i128, i64::MIN as i128);
        let expect = BigInt::from(-a) * BigInt::from(-b) * BigInt::from(a - b);
        assert_eq!(delta(&big), expect);
    }

    #[test]
    fn series_examples() {
        let one = singular_series(&sv(&[0]), 1000, 1).unwrap();
        assert_eq!(one.value, 1.0);
        assert_eq!(one.tail_bound, 0.0);
        let z = singular_series(&sv(&[0, 1]), 1000, 1).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.zero);
    }

    #[test]
    fn twin_value_matches_direct_product() {
        let g = singular_series(&sv(&[0, 2]), 10_000_000, 1).unwrap();
        let oracle = naive_series(&[0, 2], 10_000_000, 1);
        assert!((g.value - oracle).abs() < 1e-9);
        assert!((g.value - 1.32032).abs() < 1e-4);
        assert!(g.tail_bound < 1e-6);
    }

    #[test]
    fn tricked_series_matches_direct_product() {
        for h in [vec![0, 6], vec![0, 6, 12], vec![0, 2, 6, 8], vec![0, 30, 60, 90]] {
            for w in [1, 2, 6, 30] {
                let g = singular_series(&sv(&h), 20_000, w).unwrap();
                let oracle = naive_series(&h, 20_000, w);
                assert!((g.value - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{h:?} W={w}");
            }
        }
    }

    #[test]
    fn pmax_must_cover_delta() {
        assert!(matches!(singular_series(&sv(&[0, 1009]), 1000, 1), Err(Error::Domain(_))));
        assert!(matches!(singular_series(&sv(&[0, 1, 2, 3]), 3, 1), Err(Error::Domain(_))));
        assert!(SingularSeries::new(1000, 12).is_err());
    }

    #[test]
    fn error_factor_examples() {
        assert!((error_factor(&sv(&[0, 2]), 1.0).value - 0.5f64.exp()).abs() < 1e-15);
        assert_eq!(error_factor(&sv(&[5, 5]), 3.0).value, 1.0);
        assert!((error_factor(&sv(&[0, 6]), 2.0).value - (5.0f64 / 3.0).exp()).abs() < 1e-14);
    }

    #[test]
    fn generic_primes_are_fully_occupied_by_distinct_values() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 2001) as i64 - 1000
        };
        for _ in 0..200 {
            let h = sv(&(0..5).map(|_| next()).collect::<Vec<_>>());
            let dp = delta_primes(&h);
            for p in small_primes(100) {
                if !dp.contains(&p) {
                    assert_eq!(occupied_residues(&h, p).unwrap(), h.r());
                }
            }
        }
    }

    #[test]
    fn vanishing_exactly_at_small_full_occupation() {
        let series = SingularSeries::new(100, 1).unwrap();
        for k in 1..=4u32 {
            for code in 0..21u64.pow(k) {
                let mut c = code;
                let h: Vec<i64> = (0..k)
                    .map(|_| {
                        let v = (c % 21) as i64;
                        c /= 21;
                        v
                    })
                    .collect();
                let h = sv(&h);
                let full = small_primes(k as u64)
                    .into_iter()
                    .any(|p| occupied_residues(&h, p).unwrap() == p as usize);
                assert_eq!(series.evaluate(&h).unwrap().value == 0.0, full, "{h:?}");
            }
        }
    }

    #[test]
    fn doubled_entries_leave_series_unchanged() {
        let series = SingularSeries::new(10_000, 6).unwrap();
        for h in [vec![0, 6], vec![0, 2, 6], vec![3, 9, 21, 33]] {
            let doubled: Vec<i64> = h.iter().flat_map(|&x| [x, x]).collect();
            let a = series.evaluate(&sv(&h)).unwrap().value;
            let b = series.evaluate(&sv(&doubled)).unwrap().value;
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn translation_and_permutation_invariance(
            h in proptest::collection::vec(-200i64..200, 1..5),
            shift in -1000i64..1000,
            rot in 0usize..5,
        ) {
            let series = SingularSeries::new(2000, 1).unwrap();
            let base = series.evaluate(&sv(&h)).unwrap().value;
            let moved = series.evaluate(&sv(&h).translated(shift)).unwrap().value;
            let mut p = h.clone();
            p.rotate_left(rot % h.len());
            p.reverse();
            let permuted = series.evaluate(&sv(&p)).unwrap().value;
            prop_assert_eq!(base, moved);
            prop_assert_eq!(base, permuted);
        }
    }

    #[test]
    fn gallagher_exact_matches_loop() {
        let region = BoxRegion::cube(2, 1, 40).unwrap();
        let cfg = GallagherConfig {
            w: 3,
            pmax: 5000,
            ..Default::default()
        };
        let rep = gallagher_average(GallagherWeight::SingularW, &region, &cfg).unwrap();
        let mut s = 0.0;
        for a in 1..=40 {
            for b in 1..=40 {
                s += naive_series(&[a, b], 5000, 6);
            }
        }
        assert!((rep.mean - s / 1600.0).abs() < 1e-10);
        assert_eq!(rep.points, 1600);
        assert!(rep.exact);
    }

    #[test]
    fn gallagher_sampling_is_reproducible_and_close() {
        let region = BoxRegion::cube(2, 1, 200).unwrap();
        let exact = gallagher_average(
            GallagherWeight::ErrorFactor { c: 1.0 },
            &region,
            &GallagherConfig::default(),
        )
        .unwrap();
        let cfg = GallagherConfig {
            mode: AverageMode::Sampled { samples: 20_000, seed: 9 },
            ..Default::default()
        };
        let a = gallagher_average(GallagherWeight::ErrorFactor { c: 1.0 }, &region, &cfg).unwrap();
        let b = gallagher_average(GallagherWeight::ErrorFactor { c: 1.0 }, &region, &cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - exact.mean).abs() < 4.0 * a.std_error);
    }

    #[test]
    fn gallagher_cap() {
        let region = BoxRegion::cube(3, 1, 500).unwrap();
        let r = gallagher_average(GallagherWeight::SingularW, &region, &GallagherConfig::default());
        assert!(matches!(r, Err(Error::Resource { .. })));
    }
}
