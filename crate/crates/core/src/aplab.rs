//! Narrow arithmetic progressions: the averaging functional
//! `Λ_D(f_1, …, f_k) = E_{n ∈ Z/N'Z} E_{d ∈ [D]} ∏_j f_{j+1}(n + j d)`,
//! exact AP counts in the primes, Hardy–Littlewood predictions and
//! minimal-difference statistics.
//!
//! In `Λ_D` the `j`-th function is evaluated at `n + j d` for every `j`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::{gcd, FactorSieve, PrimeFlags};
use crate::quad::{integrate, QuadConfig};
use crate::singular::{singular_series, ShiftVector};
use crate::summation::compensated_sum;

/// `Λ_D` with indices reduced mod the common length `N'`.
///
/// Starting points where `f_1` vanishes are skipped, which keeps sparse inputs
/// (prime indicators) cheap without changing the value.
pub fn lambda_d(fs: &[&[f64]], d_max: u64) -> Result<f64> {
    let first = fs.first().ok_or_else(|| Error::domain("Λ_D needs at least one function"))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::domain("functions must be non-empty"));
    }
    if let Some((i, f)) = fs.iter().enumerate().find(|(_, f)| f.len() != n) {
        return Err(Error::domain(format!("function {i} has length {}, expected {n}", f.len())));
    }
    if d_max == 0 || d_max >= n as u64 {
        return Err(Error::domain(format!("D = {d_max} must satisfy 1 ≤ D < {n}")));
    }
    let d_max = d_max as usize;
    let per_n: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|start| {
            let head = first[start];
            if head == 0.0 {
                return 0.0;
            }
            let mut s = 0.0;
            for d in 1..=d_max {
                let mut prod = head;
                let mut idx = start;
                for f in &fs[1..] {
                    idx += d;
                    if idx >= n {
                        idx -= n;
                    }
                    prod *= f[idx];
                    if prod == 0.0 {
                        break;
                    }
                }
                s += prod;
            }
            s
        })
        .collect();
    Ok(compensated_sum(per_n) / (n as f64 * d_max as f64))
}

/// `#{p ≤ N : p, p + d, …, p + (k−1)d all prime}`.
pub fn count_aps_with_difference(n: u64, k: usize, d: u64, sieve: &FactorSieve) -> Result<u64> {
    check_ap_args(n, k, d, sieve)?;
    let flags = PrimeFlags::from_sieve(sieve);
    Ok(count_with_flags(n, k, d, &flags))
}

fn check_ap_args(n: u64, k: usize, d: u64, sieve: &FactorSieve) -> Result<()> {
    if d == 0 || k == 0 {
        return Err(Error::domain("k and d must be at least 1"));
    }
    let top = n.checked_add((k as u64 - 1).saturating_mul(d));
    match top {
        Some(top) if top <= sieve.limit() => Ok(()),
        _ => Err(Error::domain(format!(
            "N + (k−1)d exceeds the sieve limit {}",
            sieve.limit()
        ))),
    }
}

fn count_with_flags(n: u64, k: usize, d: u64, flags: &PrimeFlags) -> u64 {
    let starts: Vec<u64> = (2..=n).filter(|&p| flags.is_prime(p)).collect();
    starts
        .par_iter()
        .filter(|&&p| (1..k as u64).all(|j| flags.is_prime(p + j * d)))
        .count() as u64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HlPrediction {
    /// `G((0, d, …, (k−1)d))`.
    pub singular: f64,
    /// `G · ∫_2^N dt / (log t)^k`.
    pub value: f64,
    /// `G · N / (log N)^k`.
    pub crude: f64,
}

/// Hardy–Littlewood prediction for the number of `k`-APs of primes with
/// difference `d` starting below `N`.
pub fn hl_prediction(n: u64, k: usize, d: u64, pmax: u64) -> Result<HlPrediction> {
    if d == 0 {
        return Err(Error::domain("d must be at least 1"));
    }
    if n < 3 {
        return Err(Error::domain(format!("N = {n} must be at least 3")));
    }
    let h = ShiftVector::progression(k, d as i64)?;
    let g = singular_series(&h, pmax, 1)?.value;
    let kk = k as i32;
    // ∫_2^N dt/(log t)^k = ∫_{log 2}^{log N} e^u / u^k du
    let integral = integrate(
        |u: f64| (u - (kk as f64) * u.ln()).exp(),
        2f64.ln(),
        (n as f64).ln(),
        &QuadConfig::default(),
    )?
    .value;
    let ln = (n as f64).ln();
    Ok(HlPrediction {
        singular: g,
        value: g * integral,
        crude: g * n as f64 / ln.powi(kk),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APCountReport {
    pub n: u64,
    pub k: usize,
    pub d: u64,
    pub count: u64,
    pub prediction: f64,
    pub crude_prediction: f64,
    pub ratio: f64,
}

/// Exact count against the Hardy–Littlewood prediction.
pub fn ap_count_report(n: u64, k: usize, d: u64, pmax: u64, sieve: &FactorSieve) -> Result<APCountReport> {
    let count = count_aps_with_difference(n, k, d, sieve)?;
    let pred = hl_prediction(n, k, d, pmax)?;
    Ok(APCountReport {
        n,
        k,
        d,
        count,
        prediction: pred.value,
        crude_prediction: pred.crude,
        ratio: count as f64 / pred.value,
    })
}

/// Primes kept by a congruence filter: `p mod modulus ∈ classes`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetRule {
    modulus: u64,
    classes: Vec<u64>,
}

impl SubsetRule {
    pub fn new(modulus: u64, mut classes: Vec<u64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::domain("subset modulus must be positive"));
        }
        if let Some(c) = classes.iter().find(|&&c| c >= modulus) {
            return Err(Error::domain(format!("class {c} is not reduced mod {modulus}")));
        }
        classes.sort_unstable();
        classes.dedup();
        let rule = Self { modulus, classes };
        if rule.density() == 0.0 {
            return Err(Error::domain(format!(
                "no class in {:?} is coprime to {modulus}; the subset is finite",
                rule.classes
            )));
        }
        Ok(rule)
    }

    /// Every prime.
    pub fn all() -> Self {
        Self {
            modulus: 1,
            classes: vec![0],
        }
    }

    pub fn keeps(&self, p: u64) -> bool {
        self.classes.binary_search(&(p % self.modulus)).is_ok()
    }

    /// Relative density among the primes: reduced classes kept over `φ(modulus)`.
    pub fn density(&self) -> f64 {
        let reduced = (0..self.modulus).filter(|&a| gcd(a, self.modulus) == 1).count();
        let kept = self.classes.iter().filter(|&&a| gcd(a, self.modulus) == 1).count();
        kept as f64 / reduced as f64
    }
}

impl std::str::FromStr for SubsetRule {
    type Err = Error;

    /// `all`, or `classes mod m` written as `1,2@7` (classes 1 and 2 mod 7).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(Self::all());
        }
        let (classes, modulus) = s
            .split_once('@')
            .ok_or_else(|| Error::domain(format!("subset rule `{s}` is not `all` or `c1,c2@m`")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::domain(format!("`{t}` is not a non-negative integer")))
        };
        let modulus = parse(modulus)?;
        let classes = classes.split(',').map(parse).collect::<Result<Vec<_>>>()?;
        Self::new(modulus, classes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NarrownessRow {
    pub n: u64,
    pub k: usize,
    pub subset_primes: u64,
    pub density: f64,
    /// Smallest difference of a `k`-AP inside the subset below `N`.
    pub min_d: Option<u64>,
    /// Median over subset primes `p` of the smallest `d ≤ d_cap` for which
    /// `p, p + d, …` stays in the subset below `N`.
    pub median_d: Option<u64>,
    /// Share of subset primes that start some `k`-AP with `d ≤ d_cap`.
    pub found_fraction: f64,
    pub d_cap: u64,
    pub log_pow_k_minus_1: f64,
    pub log_pow_lk: f64,
    pub min_ratio_k_minus_1: Option<f64>,
    pub min_ratio_lk: Option<f64>,
}

/// `(k − 1)·2^{k−2}`.
pub fn l_k(k: usize) -> u64 {
    assert!(k >= 2, "L_k needs k ≥ 2");
    (k as u64 - 1) << (k - 2)
}

/// Minimal and median common differences of `k`-APs inside the subset of
/// primes up to each `N` of the ladder.
///
/// Differences are searched up to `⌈(log N)^{L_k}⌉`, or `d_cap` if given.
pub fn narrowness_report(
    ladder: &[u64],
    k: usize,
    rule: &SubsetRule,
    d_cap: Option<u64>,
    sieve: &FactorSieve,
) -> Result<Vec<NarrownessRow>> {
    if k < 2 {
        return Err(Error::domain(format!("k = {k}; progressions need k ≥ 2")));
    }
    if let Some(&n) = ladder.iter().find(|&&n| n > sieve.limit() || n < 3) {
        return Err(Error::domain(format!(
            "ladder point {n} is outside 3..={}",
            sieve.limit()
        )));
    }
    let flags = PrimeFlags::from_sieve(sieve);
    let lk = l_k(k) as i32;
    ladder
        .iter()
        .map(|&n| {
            let ln = (n as f64).ln();
            let cap = d_cap.unwrap_or_else(|| ln.powi(lk).ceil() as u64).max(1);
            let keep = |m: u64| m <= n && flags.is_prime(m) && rule.keeps(m);
            let primes: Vec<u64> = (2..=n).filter(|&p| keep(p)).collect();
            if primes.is_empty() {
                return Err(Error::domain(format!("the subset has no primes up to {n}")));
            }
            let mut firsts: Vec<u64> = primes
                .par_iter()
                .filter_map(|&p| {
                    // p > 2 forces even differences once k ≥ 2
                    let (start, step) = if p == 2 { (1, 1) } else { (2, 2) };
                    let last = (n - p) / (k as u64 - 1);
                    (start..=cap.min(last))
                        .step_by(step)
                        .find(|&d| (1..k as u64).all(|j| keep(p + j * d)))
                })
                .collect();
            firsts.sort_unstable();
            let min_d = firsts.first().copied();
            let median_d = (!firsts.is_empty()).then(|| firsts[(firsts.len() - 1) / 2]);
            let p1 = ln.powi(k as i32 - 1);
            let p2 = ln.powi(lk);
            Ok(NarrownessRow {
                n,
                k,
                subset_primes: primes.len() as u64,
                density: rule.density(),
                min_d,
                median_d,
                found_fraction: firsts.len() as f64 / primes.len() as f64,
                d_cap: cap,
                log_pow_k_minus_1: p1,
                log_pow_lk: p2,
                min_ratio_k_minus_1: min_d.map(|d| d as f64 / p1),
                min_ratio_lk: min_d.map(|d| d as f64 / p2),
            })
        })
        .collect()
}

/// `f(n) = log N'` on primes in `[√N', N')`, zero elsewhere.
pub fn prime_indicator_weight(modulus: u64, sieve: &FactorSieve) -> Result<Vec<f64>> {
    if modulus > sieve.limit() + 1 {
        return Err(Error::domain(format!("sieve limit {} does not cover {modulus}", sieve.limit())));
    }
    let lo = (modulus as f64).sqrt();
    let w = (modulus as f64).ln();
    Ok((0..modulus)
        .map(|n| if n as f64 >= lo && sieve.is_prime(n) { w } else { 0.0 })
        .collect())
}
