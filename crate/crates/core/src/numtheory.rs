//! Integer arithmetic used throughout the laboratory.
//!
//! The central object is [`FactorSieve`], a table of smallest prime factors
//! for every integer up to a limit. It answers Möbius, totient, factorisation
//! and primality queries in O(log n). Tables beyond a configurable threshold
//! are built segment by segment from the base primes below √limit, which keeps
//! the working set of the marking loop inside the cache and lets segments be
//! filled independently.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Number of table entries above which [`FactorSieve::new`] switches to the
/// segmented construction.
pub const DEFAULT_SEGMENT_THRESHOLD: usize = 1 << 26;

/// Length of one segment of the segmented construction.
pub const DEFAULT_SEGMENT_LEN: usize = 1 << 18;

/// Smallest-prime-factor table for `2..=limit`.
///
/// Entries 0 and 1 are stored as 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

fn alloc_table(len: usize) -> Result<Vec<u32>> {
    let mut v: Vec<u32> = Vec::new();
    let bytes = (len as u64).saturating_mul(4);
    v.try_reserve_exact(len)
        .map_err(|_| Error::resource(format!("smallest-prime-factor table of {len} entries"), bytes))?;
    v.resize(len, 0);
    Ok(v)
}

fn check_limit(limit: u64) -> Result<usize> {
    if limit < 2 {
        return Err(Error::domain(format!("sieve limit must be at least 2, got {limit}")));
    }
    if limit >= u32::MAX as u64 {
        return Err(Error::resource(
            format!("sieve limit {limit} exceeds the 32-bit entry range"),
            limit.saturating_mul(4),
        ));
    }
    Ok(limit as usize)
}

/// Plain Eratosthenes up to `limit`, returning the primes.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i.saturating_mul(i);
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

impl FactorSieve {
    /// Build a table for `2..=limit`, segmented above
    /// [`DEFAULT_SEGMENT_THRESHOLD`] entries.
    pub fn new(limit: u64) -> Result<Self> {
        Self::with_threshold(limit, DEFAULT_SEGMENT_THRESHOLD)
    }

    pub fn with_threshold(limit: u64, threshold: usize) -> Result<Self> {
        let n = check_limit(limit)?;
        if n + 1 > threshold {
            Self::segmented(limit, DEFAULT_SEGMENT_LEN)
        } else {
            Self::monolithic(limit)
        }
    }

    /// Linear (Euler) sieve over the whole range at once.
    pub fn monolithic(limit: u64) -> Result<Self> {
        let n = check_limit(limit)?;
        let mut spf = alloc_table(n + 1)?;
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let m = i * p as usize;
                if m > n {
                    break;
                }
                spf[m] = p;
            }
        }
        Ok(Self { spf })
    }

    /// Segmented construction: base primes up to √limit mark each segment in
    /// increasing order, so the first prime to touch an entry is its smallest
    /// factor. Segments are filled in parallel.
    pub fn segmented(limit: u64, segment_len: usize) -> Result<Self> {
        let n = check_limit(limit)?;
        if segment_len == 0 {
            return Err(Error::domain("segment length must be positive"));
        }
        let root = (n as f64).sqrt() as u64 + 1;
        let base = small_primes(root);
        let mut spf = alloc_table(n + 1)?;
        spf.par_chunks_mut(segment_len)
            .enumerate()
            .for_each(|(seg, chunk)| {
                let lo = seg * segment_len;
                let hi = lo + chunk.len();
                for &p in &base {
                    let p = p as usize;
                    let sq = p * p;
                    if sq >= hi {
                        break;
                    }
                    let first = sq.max(lo.div_ceil(p) * p);
                    let mut m = first;
                    while m < hi {
                        let e = &mut chunk[m - lo];
                        if *e == 0 {
                            *e = p as u32;
                        }
                        m += p;
                    }
                }
                for (i, e) in chunk.iter_mut().enumerate() {
                    let v = lo + i;
                    if v >= 2 && *e == 0 {
                        *e = v as u32;
                    }
                }
            });
        Ok(Self { spf })
    }

    /// Adopt a raw table (entry `n` = smallest prime factor of `n`),
    /// validating every entry.
    pub fn from_raw(spf: Vec<u32>) -> Result<Self> {
        if spf.len() < 3 {
            return Err(Error::Format("table must cover at least 0..=2".into()));
        }
        if spf[0] != 0 || spf[1] != 0 {
            return Err(Error::Format("entries 0 and 1 must be zero".into()));
        }
        let reference = Self::new((spf.len() - 1) as u64)?;
        if let Some(n) = (2..spf.len()).find(|&n| spf[n] != reference.spf[n]) {
            return Err(Error::Format(format!("invalid smallest prime factor {} for {n}", spf[n])));
        }
        Ok(Self { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.spf
    }

    fn check(&self, n: u64) -> Result<usize> {
        if n == 0 || n > self.limit() {
            return Err(Error::domain(format!(
                "{n} outside sieve range 1..={}",
                self.limit()
            )));
        }
        Ok(n as usize)
    }

    /// Smallest prime factor of `n` (`None` for 0, 1 or out of range).
    pub fn smallest_prime_factor(&self, n: u64) -> Option<u64> {
        if n < 2 || n > self.limit() {
            None
        } else {
            Some(self.spf[n as usize] as u64)
        }
    }

    /// Primality for `n` within range; out-of-range values report `false`.
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit() && self.spf[n as usize] as u64 == n
    }

    pub fn moebius(&self, n: u64) -> Result<i8> {
        let mut m = self.check(n)?;
        let mut sign = 1i8;
        while m > 1 {
            let p = self.spf[m] as usize;
            m /= p;
            if m % p == 0 {
                return Ok(0);
            }
            sign = -sign;
        }
        Ok(sign)
    }

    pub fn euler_phi(&self, n: u64) -> Result<u64> {
        Ok(self
            .factorize(n)?
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product())
    }

    /// Sorted prime factorisation as `(prime, exponent)` pairs.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        let mut m = self.check(n)?;
        let mut out: Vec<(u64, u32)> = Vec::new();
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        Ok(out)
    }

    /// Number of distinct prime divisors; ω(1) = 0.
    pub fn omega(&self, n: u64) -> Result<u32> {
        Ok(self.factorize(n)?.len() as u32)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.spf
            .iter()
            .enumerate()
            .filter(|&(n, &p)| n >= 2 && p as usize == n)
            .map(|(n, _)| n as u64)
    }

    pub fn prime_count(&self) -> u64 {
        self.primes().count() as u64
    }
}

/// Packed primality flags, one bit per integer.
#[derive(Clone, Debug)]
pub struct PrimeFlags {
    bits: Vec<u64>,
    limit: u64,
}

impl PrimeFlags {
    pub fn from_sieve(sieve: &FactorSieve) -> Self {
        let limit = sieve.limit();
        let mut bits = vec![0u64; (limit as usize >> 6) + 1];
        for p in sieve.primes() {
            bits[(p >> 6) as usize] |= 1 << (p & 63);
        }
        Self { bits, limit }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        n <= self.limit && (self.bits[(n >> 6) as usize] >> (n & 63)) & 1 == 1
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin. The witness set {2,…,41} is exact below
/// 3.3·10^24, which covers every `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Distinct prime factors of `n` by trial division.
pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Parameters of the W-trick: `W = ∏_{p ≤ w} p`, a reduced residue `b` mod
/// `W` and a prime modulus `N'` for the cyclic group `Z/N'Z`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct WTrickContext {
    pub w: u64,
    pub big_w: u64,
    pub b: u64,
    pub modulus: u64,
}

/// Product of the primes up to `w`.
pub fn primorial(w: u64) -> Result<u64> {
    small_primes(w).into_iter().try_fold(1u64, |acc, p| {
        acc.checked_mul(p)
            .ok_or_else(|| Error::domain(format!("primorial of {w} overflows 64 bits")))
    })
}

/// Validate and build a [`WTrickContext`]; `b` is stored reduced mod `W`.
pub fn primorial_context(w: u64, b: i64, modulus: u64) -> Result<WTrickContext> {
    if w == 0 {
        return Err(Error::domain("w must be at least 1"));
    }
    let big_w = primorial(w)?;
    let b_red = b.rem_euclid(big_w as i64) as u64;
    for p in small_primes(w) {
        if b_red % p == 0 {
            return Err(Error::domain(format!(
                "b = {b} is not a reduced residue mod W = {big_w}: gcd shares the prime {p}"
            )));
        }
    }
    if !is_prime_u64(modulus) {
        return Err(Error::domain(format!("modulus {modulus} is not prime")));
    }
    Ok(WTrickContext {
        w,
        big_w,
        b: b_red,
        modulus,
    })
}

impl WTrickContext {
    /// φ(W) for the primorial W.
    pub fn phi_w(&self) -> u64 {
        small_primes(self.w).iter().map(|p| p - 1).product()
    }

    /// The largest integer `W n + b` with `n < N'`.
    pub fn top(&self) -> u64 {
        self.big_w * (self.modulus - 1) + self.b
    }
}
