//! The truncated von Mangoldt function
//! `Λ_{χ,R}(m) = log R · Σ_{d | m} μ(d) χ(log d / log R)` and the prime
//! majorant `ν(n) = φ(W)/(W log R) · Λ_{χ,R}(W n + b)²` tabulated over
//! `n ∈ Z/N'Z`.
//!
//! The table is filled by a divisor sieve: every squarefree `d < R` coprime
//! to `W` hits exactly the `n` with `W n + b ≡ 0 (mod d)`, an arithmetic
//! progression found with one modular inverse.

use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::numtheory::{gcd, is_prime_u64, mod_inverse, FactorSieve, WTrickContext};
use crate::singular::{singular_series, ShiftVector};
use crate::summation::{compensated_sum, CompensatedSum};

const BLOCK: usize = 1 << 15;

/// Where a [`MajorantTable`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableSource {
    Sieve,
    /// `ν ≡ 1`, for exercising harnesses.
    ConstantOne,
    /// Read back from a cache file; only `ν` is available.
    Loaded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorantTable {
    context: WTrickContext,
    r: f64,
    cutoff: Option<CutoffSpec>,
    source: TableSource,
    values: Vec<f64>,
    lambda_values: Vec<f64>,
}

/// Exponent `1/(4 t₀)` with `t₀ = k·2^{k−1}`, so that `R = range^{exponent}`.
pub fn proof_r_exponent(k: usize) -> f64 {
    1.0 / (4.0 * (k as f64) * 2f64.powi(k as i32 - 1))
}

/// `Λ_{χ,R}(m)` evaluated from the factorisation of `m`.
pub fn lambda_chi_r(m: u64, r: f64, cutoff: &CutoffSpec, sieve: &FactorSieve) -> Result<f64> {
    if r <= 1.0 {
        return Err(Error::domain(format!("R = {r} must exceed 1")));
    }
    if m == 0 {
        return Err(Error::domain("Λ is defined for m ≥ 1"));
    }
    let primes: Vec<u64> = sieve.factorize(m)?.into_iter().map(|(p, _)| p).collect();
    let log_r = r.ln();
    let mut acc = CompensatedSum::new();
    // squarefree divisors as subsets of the distinct primes
    for mask in 0u64..(1 << primes.len()) {
        let mut d = 1f64;
        for (i, &p) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                d *= p as f64;
            }
        }
        if d >= r {
            continue;
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * cutoff.chi(d.ln() / log_r));
    }
    Ok(log_r * acc.value())
}

/// `φ(W) / (W log R)`.
fn normalizer(context: &WTrickContext, r: f64) -> f64 {
    context.phi_w() as f64 / (context.big_w as f64 * r.ln())
}

/// Largest `R` accepted by [`build_majorant`]: `(W N' + b)^{1/2}`.
pub fn max_r(context: &WTrickContext) -> f64 {
    ((context.big_w as f64) * (context.modulus as f64) + context.b as f64).sqrt()
}

/// Tabulate `Λ_{χ,R}(W n + b)` and `ν(n)` for `n ∈ [0, N')`.
///
/// The sieve must cover `R`; it supplies μ(d) for the divisors.
pub fn build_majorant(
    context: &WTrickContext,
    r: f64,
    cutoff: &CutoffSpec,
    sieve: &FactorSieve,
) -> Result<MajorantTable> {
    if r.is_nan() || r <= 1.0 {
        return Err(Error::domain(format!("R = {r} must exceed 1")));
    }
    let cap = max_r(context);
    if r > cap * (1.0 + 1e-12) {
        return Err(Error::domain(format!("R = {r} exceeds (W N' + b)^(1/2) = {cap}")));
    }
    let d_max = r.ceil() as u64 - 1;
    if sieve.limit() < d_max.max(2) {
        return Err(Error::domain(format!(
            "sieve limit {} does not cover the divisors up to R = {r}",
            sieve.limit()
        )));
    }
    let n_len = context.modulus as usize;
    let big_w = context.big_w;
    let log_r = r.ln();
    // (d, first n, weight) for every contributing divisor
    let mut divisors: Vec<(u64, u64, f64)> = Vec::new();
    for d in 1..=d_max {
        let mu = if d == 1 { 1 } else { sieve.moebius(d)? };
        if mu == 0 || gcd(d, big_w) != 1 {
            continue;
        }
        let weight = mu as f64 * cutoff.chi((d as f64).ln() / log_r);
        if weight == 0.0 {
            continue;
        }
        let start = if d == 1 {
            0
        } else {
            let inv = mod_inverse(big_w % d, d).expect("d is coprime to W");
            let minus_b = (d - context.b % d) % d;
            (minus_b as u128 * inv as u128 % d as u128) as u64
        };
        divisors.push((d, start, weight));
    }

    let mut lambda_values = vec![0f64; n_len];
    lambda_values
        .par_chunks_mut(BLOCK)
        .enumerate()
        .for_each(|(block, out)| {
            let lo = (block * BLOCK) as u64;
            let hi = lo + out.len() as u64;
            let mut acc = vec![CompensatedSum::new(); out.len()];
            for &(d, start, weight) in &divisors {
                let first = if start >= lo {
                    start
                } else {
                    lo + (d - (lo - start) % d) % d
                };
                let mut n = first;
                while n < hi {
                    acc[(n - lo) as usize].add(weight);
                    n += d;
                }
            }
            for (slot, a) in out.iter_mut().zip(&acc) {
                *slot = log_r * a.value();
            }
        });
    let scale = normalizer(context, r);
    let values = lambda_values.iter().map(|l| scale * l * l).collect();
    Ok(MajorantTable {
        context: context.clone(),
        r,
        cutoff: Some(*cutoff),
        source: TableSource::Sieve,
        values,
        lambda_values,
    })
}

impl MajorantTable {
    /// Degenerate table with `ν ≡ 1`.
    pub fn constant_one(context: &WTrickContext) -> Self {
        Self {
            context: context.clone(),
            r: f64::NAN,
            cutoff: None,
            source: TableSource::ConstantOne,
            values: vec![1.0; context.modulus as usize],
            lambda_values: Vec::new(),
        }
    }

    /// Table rebuilt from stored `ν` values.
    pub fn from_values(context: &WTrickContext, r: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != context.modulus {
            return Err(Error::domain(format!(
                "{} values for modulus {}",
                values.len(),
                context.modulus
            )));
        }
        Ok(Self {
            context: context.clone(),
            r,
            cutoff: None,
            source: TableSource::Loaded,
            values,
            lambda_values: Vec::new(),
        })
    }

    pub fn context(&self) -> &WTrickContext {
        &self.context
    }

    pub fn modulus(&self) -> u64 {
        self.context.modulus
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn cutoff(&self) -> Option<&CutoffSpec> {
        self.cutoff.as_ref()
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Λ_{χ,R}(W n + b)`; only present for sieve-built tables.
    pub fn lambda_values(&self) -> Option<&[f64]> {
        (self.source == TableSource::Sieve).then_some(&self.lambda_values[..])
    }

    /// `ν(n mod N')`.
    pub fn value(&self, n: i128) -> f64 {
        self.values[n.rem_euclid(self.context.modulus as i128) as usize]
    }

    /// `E_{n ∈ Z/N'Z} ν(n)`.
    pub fn mean(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Lower bound `φ(W) log R / (4W)` promised on primes `W n + b > R`.
    pub fn floor(&self) -> f64 {
        self.context.phi_w() as f64 * self.r.ln() / (4.0 * self.context.big_w as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub h: i64,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: f64,
}

/// `E_n ν(n) ν(n + h)` with cyclic shifts, against the prediction
/// `G_W(0, h)` (the sieve factor of a doubled pair is 1).
pub fn majorant_pair_correlation(table: &MajorantTable, h: i64, pmax: u64) -> Result<PairCorrelation> {
    let modulus = table.modulus() as i64;
    let shift = h.rem_euclid(modulus) as usize;
    if shift == 0 {
        return Err(Error::domain(format!("shift h = {h} is 0 mod {modulus}")));
    }
    let v = table.values();
    let n = v.len();
    let partial: Vec<f64> = v
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(block, chunk)| {
            let mut acc = CompensatedSum::new();
            for (i, x) in chunk.iter().enumerate() {
                let j = (block * BLOCK + i + shift) % n;
                acc.add(x * v[j]);
            }
            acc.value()
        })
        .collect();
    let empirical = compensated_sum(partial) / n as f64;
    let predicted = match table.source() {
        TableSource::ConstantOne => 1.0,
        _ => singular_series(&ShiftVector::new(vec![0, h])?, pmax, table.context().big_w)?.value,
    };
    Ok(PairCorrelation {
        h,
        empirical,
        predicted,
        ratio: empirical / predicted,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinorizationReport {
    pub floor: f64,
    pub primes_checked: u64,
    pub violations: u64,
    /// Smallest offending `n`, if any.
    pub first_violation: Option<u64>,
}

/// Scan every `n` with `W n + b` prime and larger than `R`, counting those
/// with `ν(n)` below [`MajorantTable::floor`].
///
/// Primality comes from `sieve` where it reaches and from a deterministic
/// Miller–Rabin test beyond.
pub fn check_minorization(table: &MajorantTable, sieve: &FactorSieve) -> MinorizationReport {
    let ctx = table.context();
    let floor = table.floor();
    let r = table.r();
    let (checked, bad, first) = table
        .values()
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(block, chunk)| {
            let mut checked = 0u64;
            let mut bad = 0u64;
            let mut first = None;
            for (i, &v) in chunk.iter().enumerate() {
                let n = (block * BLOCK + i) as u64;
                let m = ctx.big_w * n + ctx.b;
                if (m as f64) <= r {
                    continue;
                }
                let prime = if m <= sieve.limit() { sieve.is_prime(m) } else { is_prime_u64(m) };
                if !prime {
                    continue;
                }
                checked += 1;
                if v < floor {
                    bad += 1;
                    first.get_or_insert(n);
                }
            }
            (checked, bad, first)
        })
        .reduce(
            || (0, 0, None),
            |a, b| (a.0 + b.0, a.1 + b.1, match (a.2, b.2) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            }),
        );
    MinorizationReport {
        floor,
        primes_checked: checked,
        violations: bad,
        first_violation: first,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::{make_cutoff, CutoffKind};
    use crate::numtheory::primorial_context;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cosine() -> CutoffSpec {
        make_cutoff(CutoffKind::Cosine).unwrap()
    }

    #[test]
    fn lambda_small_cases() {
        let sieve = FactorSieve::new(1000).unwrap();
        let chi = cosine();
        let r = 10.0;
        let one = lambda_chi_r(1, r, &chi, &sieve).unwrap();
        assert!((one - chi.chi(0.0) * r.ln()).abs() < 1e-14);
        // a prime above R only sees d = 1
        let p = lambda_chi_r(997, r, &chi, &sieve).unwrap();
        assert!((p - chi.chi(0.0) * r.ln()).abs() < 1e-14);
        // d ∈ {1, 2}; μ(4) = 0
        let four = lambda_chi_r(4, r, &chi, &sieve).unwrap();
        let expect = r.ln() * (chi.chi(0.0) - chi.chi(2f64.ln() / r.ln()));
        assert!((four - expect).abs() < 1e-14);
        assert!(lambda_chi_r(1001, r, &chi, &sieve).is_err());
        assert!(lambda_chi_r(5, 1.0, &chi, &sieve).is_err());
    }

    #[test]
    fn sieve_table_matches_pointwise_evaluation() {
        let ctx = primorial_context(3, 1, 10_007).unwrap();
        let r = max_r(&ctx);
        let sieve = FactorSieve::new(ctx.top()).unwrap();
        for kind in [CutoffKind::Cosine, CutoffKind::Bump] {
            let chi = make_cutoff(kind).unwrap();
            let table = build_majorant(&ctx, r, &chi, &sieve).unwrap();
            let lam = table.lambda_values().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..1000 {
                let n = rng.random_range(0..ctx.modulus);
                let direct = lambda_chi_r(ctx.big_w * n + ctx.b, r, &chi, &sieve).unwrap();
                let got = lam[n as usize];
                assert!((got - direct).abs() <= 1e-9 * direct.abs().max(1.0), "n = {n}: {got} vs {direct}");
            }
            let scale = normalizer(&ctx, r);
            for (v, l) in table.values().iter().zip(lam) {
                assert!(*v >= 0.0);
                assert!((v - scale * l * l).abs() <= 1e-12 * (l * l).max(1.0));
            }
        }
    }

    #[test]
    fn r_limits() {
        let ctx = primorial_context(3, 1, 101).unwrap();
        let sieve = FactorSieve::new(1000).unwrap();
        assert!(build_majorant(&ctx, max_r(&ctx) * 1.01, &cosine(), &sieve).is_err());
        assert!(build_majorant(&ctx, 1.0, &cosine(), &sieve).is_err());
        let small = FactorSieve::new(10).unwrap();
        assert!(build_majorant(&ctx, 20.0, &cosine(), &small).is_err());
        assert!((proof_r_exponent(3) - 1.0 / 48.0).abs() < 1e-15);
    }

    #[test]
    fn constant_one_harness() {
        let ctx = primorial_context(3, 1, 1009).unwrap();
        let table = MajorantTable::constant_one(&ctx);
        let pc = majorant_pair_correlation(&table, 6, 100).unwrap();
        assert_eq!(pc.empirical, 1.0);
        assert_eq!(pc.predicted, 1.0);
        assert_eq!(table.mean(), 1.0);
        assert!(majorant_pair_correlation(&table, 1009, 100).is_err());
        assert!(table.lambda_values().is_none());
    }

    #[test]
    fn correlation_matches_loop() {
        let ctx = primorial_context(3, 1, 2003).unwrap();
        let sieve = FactorSieve::new(ctx.top()).unwrap();
        let table = build_majorant(&ctx, max_r(&ctx), &cosine(), &sieve).unwrap();
        let h = -7i64;
        let pc = majorant_pair_correlation(&table, h, 1000).unwrap();
        let n = ctx.modulus as i128;
        let direct: f64 = (0..n).map(|i| table.value(i) * table.value(i + h as i128)).sum::<f64>() / n as f64;
        assert!((pc.empirical - direct).abs() < 1e-12 * direct);
        let g = singular_series(&ShiftVector::new(vec![0, h]).unwrap(), 1000, 6).unwrap().value;
        assert_eq!(pc.predicted, g);
    }

    #[test]
    fn minorization_holds_and_checker_bites() {
        let ctx = primorial_context(3, 1, 20_011).unwrap();
        let sieve = FactorSieve::new(ctx.top()).unwrap();
        let r = max_r(&ctx);
        for kind in [CutoffKind::Cosine, CutoffKind::Bump] {
            let table = build_majorant(&ctx, r, &make_cutoff(kind).unwrap(), &sieve).unwrap();
            let rep = check_minorization(&table, &sieve);
            assert!(rep.primes_checked > 1000);
            assert_eq!(rep.violations, 0);
        }
        // χ(0) = 0.4 < 1/2 puts every large prime below the floor
        let weak = CutoffSpec {
            norm_constant: 0.4,
            ..cosine()
        };
        let table = build_majorant(&ctx, r, &weak, &sieve).unwrap();
        let rep = check_minorization(&table, &sieve);
        assert_eq!(rep.violations, rep.primes_checked);
        assert!(rep.first_violation.is_some());
        // the Miller–Rabin fallback agrees with the sieve
        let short = FactorSieve::new(1000).unwrap();
        assert_eq!(check_minorization(&table, &short), rep);
    }
}
