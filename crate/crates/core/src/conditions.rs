//! Linear-forms-condition averages over integer boxes, for the prime majorant
//! and for a random sparse model, plus the random model's width threshold.
//!
//! For the random model (ν = 1/α on a random set of density α, 0 elsewhere)
//! the expectation of `∏_i ν(n + ψ_i(x))` over the randomness is
//! `α^{#distinct − t}`, where `#distinct` counts the distinct values among the
//! `ψ_i(x)`. Every `x` lies in a unique smallest flat of the difference
//! arrangement and that flat fixes `#distinct`, so the box average minus one
//! is a sum over flats of (point density) × (Möbius-inverted weight). The
//! deviation model evaluates that sum up to a codimension cap.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linforms::{difference_hyperplanes, LinearSystem, SolutionLattice, Subspace};
use crate::majorant::MajorantTable;
use crate::summation::{stream_rng, MeanAccumulator};

/// Axis-aligned integer box `∏ [lo_i, hi_i]` with every side at least 2, so
/// its inradius is at least 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxRegion {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::domain("box bounds must be non-empty and of equal length"));
        }
        if let Some(i) = (0..lo.len()).find(|&i| hi[i] < lo[i] + 2) {
            return Err(Error::domain(format!(
                "box side {i} is [{}, {}]; sides must have length at least 2",
                lo[i], hi[i]
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(d: usize, lo: i64, hi: i64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    /// `[−s, s]^d`.
    pub fn centered(d: usize, s: i64) -> Result<Self> {
        Self::cube(d, -s, s)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    /// Half the shortest side.
    pub fn inradius(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l) as f64 / 2.0).fold(f64::INFINITY, f64::min)
    }

    /// Whether the box sits inside `[−r^e, r^e]^d` for inradius `r`.
    pub fn within_diameter_cap(&self, exponent: f64) -> bool {
        let bound = self.inradius().powf(exponent);
        self.lo.iter().chain(&self.hi).all(|&v| (v as f64).abs() <= bound)
    }

    pub fn point_count(&self) -> u128 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l + 1) as u128).product()
    }

    /// The point with mixed-radix index `index`, first coordinate fastest.
    pub fn point(&self, mut index: u128) -> Vec<i64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let side = (h - l + 1) as u128;
                let v = l + (index % side) as i64;
                index /= side;
                v
            })
            .collect()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<i64> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| rng.random_range(l..=h)).collect()
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `ν(n) ∈ {0, 1/α}`, one Bernoulli(α) draw per residue. Draws are a pure
/// function of `(seed, n)`, so repeated lookups agree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RandomModel {
    pub alpha: f64,
    pub seed: u64,
    pub modulus: u64,
}

impl RandomModel {
    pub fn new(alpha: f64, seed: u64, modulus: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("density α = {alpha} must lie in (0, 1)")));
        }
        if modulus == 0 {
            return Err(Error::domain("modulus must be positive"));
        }
        Ok(Self { alpha, seed, modulus })
    }

    pub fn value(&self, n: u64) -> f64 {
        let u = (mix64(self.seed ^ mix64(n)) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u < self.alpha {
            1.0 / self.alpha
        } else {
            0.0
        }
    }
}

/// The weight `ν` whose products are averaged.
#[derive(Clone, Copy, Debug)]
pub enum WeightModel<'a> {
    Table(&'a MajorantTable),
    Random(RandomModel),
    ConstantOne { modulus: u64 },
}

impl WeightModel<'_> {
    pub fn modulus(&self) -> u64 {
        match self {
            WeightModel::Table(t) => t.modulus(),
            WeightModel::Random(r) => r.modulus,
            WeightModel::ConstantOne { modulus } => *modulus,
        }
    }

    /// `ν(n mod N')`.
    pub fn value(&self, n: i128) -> f64 {
        let m = n.rem_euclid(self.modulus() as i128) as u64;
        match self {
            WeightModel::Table(t) => t.values()[m as usize],
            WeightModel::Random(r) => r.value(m),
            WeightModel::ConstantOne { .. } => 1.0,
        }
    }
}

/// Which forms enter the product: `e_i ∈ {0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ExponentPattern(Vec<bool>);

impl ExponentPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn ones(t: usize) -> Self {
        Self(vec![true; t])
    }

    pub fn zeros(t: usize) -> Self {
        Self(vec![false; t])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i]).collect()
    }
}

impl FromStr for ExponentPattern {
    type Err = Error;

    /// Digits `0`/`1`, optionally separated by commas, e.g. `1,0,1` or `101`.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::domain(format!("exponent pattern digit `{c}` is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

fn check_shapes(sys: &LinearSystem, e: &ExponentPattern, region: &BoxRegion) -> Result<Vec<usize>> {
    if e.len() != sys.t() {
        return Err(Error::domain(format!("exponent pattern has {} entries for {} forms", e.len(), sys.t())));
    }
    if region.dim() != sys.d() {
        return Err(Error::domain(format!("box has dimension {} but the forms use {}", region.dim(), sys.d())));
    }
    Ok(e.selected())
}

/// Smallest sample count accepted by [`lfc_average_mc`].
pub const MIN_MC_SAMPLES: u64 = 1000;
/// Number of independent generator streams used by [`lfc_average_mc`].
pub const MC_STREAMS: u64 = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub streams: u64,
}

/// Monte Carlo estimate of `E_{n, x} ∏_i ν(n + ψ_i(x))^{e_i}` over uniform
/// `n ∈ Z/N'Z` and `x` in the box.
///
/// Samples are split over [`MC_STREAMS`] ChaCha streams derived from `seed`
/// and merged in stream order, so the result does not depend on the thread
/// count.
pub fn lfc_average_mc(
    model: &WeightModel,
    sys: &LinearSystem,
    e: &ExponentPattern,
    region: &BoxRegion,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let idx = check_shapes(sys, e, region)?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::domain(format!("{samples} samples; at least {MIN_MC_SAMPLES} required")));
    }
    let modulus = model.modulus();
    let forms: Vec<_> = idx.iter().map(|&i| &sys.forms()[i]).collect();
    let parts: Vec<MeanAccumulator> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|stream| {
            let quota = samples / MC_STREAMS + u64::from(stream < samples % MC_STREAMS);
            let mut rng = stream_rng(seed, stream);
            let mut acc = MeanAccumulator::default();
            for _ in 0..quota {
                let n = rng.random_range(0..modulus) as i128;
                let x = region.sample(&mut rng);
                let mut prod = 1.0;
                for f in &forms {
                    prod *= model.value(n + f.eval(&x));
                    if prod == 0.0 {
                        break;
                    }
                }
                acc.push(prod);
            }
            acc
        })
        .collect();
    let mut total = MeanAccumulator::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(McEstimate {
        estimate: total.mean,
        std_error: total.std_error(),
        samples,
        streams: MC_STREAMS,
    })
}

fn distinct_count(values: &mut [i128]) -> usize {
    values.sort_unstable();
    let mut n = 0;
    for i in 0..values.len() {
        if i == 0 || values[i] != values[i - 1] {
            n += 1;
        }
    }
    n
}

/// Exact value of the average estimated by [`lfc_average_mc`].
///
/// For the random model the expectation over the draws is averaged, which
/// replaces the `n`-average by `α^{#distinct − t}` per point. A table-backed
/// model is summed over every `(n, x)`; `cap` bounds that work.
pub fn lfc_average_exact(
    model: &WeightModel,
    sys: &LinearSystem,
    e: &ExponentPattern,
    region: &BoxRegion,
    cap: u128,
) -> Result<f64> {
    let idx = check_shapes(sys, e, region)?;
    let points = region.point_count();
    let modulus = model.modulus() as i128;
    let forms: Vec<_> = idx.iter().map(|&i| &sys.forms()[i]).collect();
    let work = match model {
        WeightModel::Table(_) => points.saturating_mul(modulus as u128),
        _ => points,
    };
    if work > cap {
        return Err(Error::resource(
            format!("exact average needs {work} evaluations, above the cap {cap}"),
            work.min(u64::MAX as u128) as u64,
        ));
    }
    let sum: f64 = match model {
        WeightModel::ConstantOne { .. } => return Ok(1.0),
        WeightModel::Random(r) => (0..points as u64)
            .into_par_iter()
            .map(|i| {
                let x = region.point(i as u128);
                let mut vals: Vec<i128> = forms.iter().map(|f| f.eval(&x).rem_euclid(modulus)).collect();
                let distinct = distinct_count(&mut vals);
                r.alpha.powi(distinct as i32 - forms.len() as i32)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum(),
        WeightModel::Table(t) => {
            let v = t.values();
            (0..points as u64)
                .into_par_iter()
                .map(|i| {
                    let x = region.point(i as u128);
                    let offsets: Vec<usize> =
                        forms.iter().map(|f| f.eval(&x).rem_euclid(modulus) as usize).collect();
                    let n_len = v.len();
                    let mut s = 0.0;
                    for n in 0..n_len {
                        let mut prod = 1.0;
                        for &o in &offsets {
                            let j = n + o;
                            prod *= v[if j >= n_len { j - n_len } else { j }];
                        }
                        s += prod;
                    }
                    s / n_len as f64
                })
                .collect::<Vec<_>>()
                .into_iter()
                .sum()
        }
    };
    Ok(sum / points as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DeviationOptions {
    /// Deepest codimension of flats included in the sum.
    pub max_codim: usize,
    /// Upper bound on the number of flats enumerated.
    pub max_flats: usize,
}

impl Default for DeviationOptions {
    fn default() -> Self {
        Self {
            max_codim: 2,
            max_flats: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
enum PointCount {
    /// `a·x = b` with `|a|` sorted and zero entries dropped; counted exactly.
    Hyperplane { weights: Vec<u64>, rhs: u64 },
    /// A single point, present when integral.
    Point(Option<Vec<i64>>),
    /// Gaussian density of a lattice flat; `None` when it has no integer point.
    Lattice(Option<f64>),
}

#[derive(Clone, Debug)]
struct Flat {
    subspace: Subspace,
    codim: usize,
    merged: usize,
    parents: Vec<usize>,
    count: PointCount,
}

/// One flat's share of the deviation at a given `(α, S)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatTerm {
    pub codim: usize,
    /// `t − |π_V|`: how many forms the flat merges away.
    pub merged: usize,
    /// `merged / codim`.
    pub ratio: f64,
    /// Integer points of the flat per box point.
    pub density: f64,
    /// Whether `density` is an exact count.
    pub exact: bool,
    /// Möbius-inverted weight of the flat.
    pub weight: f64,
    pub contribution: f64,
    pub equations: Vec<String>,
}

impl FlatTerm {
    pub fn exact_ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.merged), BigInt::from(self.codim))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub alpha: f64,
    pub s: u64,
    /// Random-model average over `[−S, S]^d` minus one.
    pub deviation: f64,
    pub dominant: FlatTerm,
    /// All terms, largest `|contribution|` first.
    pub terms: Vec<FlatTerm>,
    /// Set when a term uses the lattice-density approximation or deeper
    /// flats were cut off.
    pub approximate: bool,
}

/// The flat structure of a system, reusable across `(α, S)`.
#[derive(Clone, Debug)]
pub struct DeviationModel {
    t: usize,
    d: usize,
    names: Vec<String>,
    flats: Vec<Flat>,
    truncated: bool,
}

impl DeviationModel {
    pub fn new(sys: &LinearSystem, opts: &DeviationOptions) -> Result<Self> {
        sys.require_distinct()?;
        if opts.max_codim == 0 {
            return Err(Error::domain("max_codim must be at least 1"));
        }
        let t = sys.t();
        let d = sys.d();
        let hyper = difference_hyperplanes(sys);
        let mut levels: Vec<Vec<Subspace>> = vec![hyper.iter().map(|(h, _)| h.clone()).collect()];
        let mut truncated = false;
        while levels.last().is_some_and(|l| !l.is_empty()) {
            let codim = levels.len();
            if codim == d {
                break;
            }
            if codim == opts.max_codim {
                truncated = true;
                break;
            }
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for v in levels.last().expect("non-empty") {
                for (_, row) in &hyper {
                    if v.contains_row(row) {
                        continue;
                    }
                    let u = v.with_row(row.clone());
                    if u.is_feasible() && seen.insert(u.clone()) {
                        next.push(u);
                    }
                }
            }
            if levels.iter().map(Vec::len).sum::<usize>() + next.len() > opts.max_flats {
                return Err(Error::resource(
                    format!("flat enumeration exceeds {} flats at codimension {}", opts.max_flats, codim + 1),
                    next.len() as u64,
                ));
            }
            levels.push(next);
        }
        let mut flats: Vec<Flat> = Vec::new();
        for (level, subs) in levels.into_iter().enumerate() {
            let codim = level + 1;
            let built: Vec<Flat> = subs
                .into_par_iter()
                .map(|subspace| -> Result<Flat> {
                    let merged = t - subspace.induced_partition(sys).len();
                    let count = if codim == 1 {
                        let (a, b) = subspace.integer_equations().remove(0);
                        let mut weights: Vec<u64> = a
                            .iter()
                            .filter_map(|c| c.magnitude().to_u64().filter(|&m| m != 0))
                            .collect();
                        weights.sort_unstable();
                        let rhs = b.magnitude().to_u64().ok_or_else(|| Error::domain("hyperplane offset overflows"))?;
                        PointCount::Hyperplane { weights, rhs }
                    } else {
                        let lat = SolutionLattice::of_subspace(&subspace)?;
                        if codim == d {
                            PointCount::Point(
                                lat.offset
                                    .map(|x| x.iter().map(|v| v.to_i64().unwrap_or(i64::MAX)).collect()),
                            )
                        } else {
                            PointCount::Lattice(lat.offset.map(|_| lat.covolume))
                        }
                    };
                    Ok(Flat {
                        subspace,
                        codim,
                        merged,
                        parents: Vec::new(),
                        count,
                    })
                })
                .collect::<Result<_>>()?;
            flats.extend(built);
        }
        let parents: Vec<Vec<usize>> = (0..flats.len())
            .into_par_iter()
            .map(|i| {
                (0..flats.len())
                    .filter(|&j| flats[j].codim < flats[i].codim && flats[j].subspace.contains(&flats[i].subspace))
                    .collect()
            })
            .collect();
        for (f, p) in flats.iter_mut().zip(parents) {
            f.parents = p;
        }
        Ok(Self {
            t,
            d,
            names: sys.names().to_vec(),
            flats,
            truncated,
        })
    }

    pub fn flat_count(&self) -> usize {
        self.flats.len()
    }

    /// Deviation of the random model with density `alpha` on `[−s, s]^d`.
    pub fn evaluate(&self, alpha: f64, s: u64) -> Result<DeviationReport> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("density α = {alpha} must lie in (0, 1)")));
        }
        if s < 2 {
            return Err(Error::domain(format!("width S = {s} must be at least 2")));
        }
        if self.flats.is_empty() {
            return Err(Error::domain("no two forms can coincide; the deviation is identically 0"));
        }
        let sigma2 = (s as f64) * (s as f64 + 1.0) / 3.0;
        let mut dp_cache: HashMap<(Vec<u64>, u64), f64> = HashMap::new();
        for f in &self.flats {
            if let PointCount::Hyperplane { weights, rhs } = &f.count {
                dp_cache.entry((weights.clone(), *rhs)).or_insert(0.0);
            }
        }
        let keys: Vec<_> = dp_cache.keys().cloned().collect();
        let values: Vec<f64> = keys.par_iter().map(|(w, r)| hyperplane_density(w, *r, s)).collect();
        for (k, v) in keys.into_iter().zip(values) {
            dp_cache.insert(k, v);
        }
        let side = (2 * s + 1) as f64;
        let mut approximate = self.truncated;
        let mut weights = vec![0f64; self.flats.len()];
        let mut terms = Vec::with_capacity(self.flats.len());
        for (i, f) in self.flats.iter().enumerate() {
            let own = alpha.powi(-(f.merged as i32)) - 1.0;
            let weight = own - f.parents.iter().map(|&j| weights[j]).sum::<f64>();
            weights[i] = weight;
            let (density, exact) = match &f.count {
                PointCount::Hyperplane { weights, rhs } => (dp_cache[&(weights.clone(), *rhs)], true),
                PointCount::Point(p) => {
                    let inside = p.as_ref().is_some_and(|x| x.iter().all(|v| v.unsigned_abs() <= s));
                    (if inside { side.powi(-(self.d as i32)) } else { 0.0 }, true)
                }
                PointCount::Lattice(covol) => {
                    approximate = true;
                    let dens = covol.map_or(0.0, |c| (2.0 * PI * sigma2).powf(-(f.codim as f64) / 2.0) / c);
                    (dens, false)
                }
            };
            terms.push(FlatTerm {
                codim: f.codim,
                merged: f.merged,
                ratio: f.merged as f64 / f.codim as f64,
                density,
                exact,
                weight,
                contribution: weight * density,
                equations: f.subspace.render(&self.names),
            });
        }
        let deviation = terms.iter().map(|t| t.contribution).sum();
        terms.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
        Ok(DeviationReport {
            alpha,
            s,
            deviation,
            dominant: terms[0].clone(),
            terms,
            approximate,
        })
    }

    /// Number of forms of the underlying system.
    pub fn t(&self) -> usize {
        self.t
    }
}

/// `P(Σ w_i x_i = rhs)` for independent `x_i` uniform on `{−s, …, s}`,
/// by exact convolution of the value distributions.
fn hyperplane_density(weights: &[u64], rhs: u64, s: u64) -> f64 {
    let inv = 1.0 / (2 * s + 1) as f64;
    let s = s as i64;
    let mut m: i64 = 0;
    let mut dist = vec![1.0f64];
    for &w in weights {
        let w = w as i64;
        let new_m = m + w * s;
        let mut prefix = dist.clone();
        for i in w as usize..prefix.len() {
            prefix[i] += prefix[i - w as usize];
        }
        // index i of `dist` holds value i − m
        let at = |value: i64| -> Option<usize> { (value >= -m && value <= m).then(|| (value + m) as usize) };
        let mut next = vec![0f64; (2 * new_m + 1) as usize];
        for (j, slot) in next.iter_mut().enumerate() {
            let v = j as i64 - new_m;
            let mut hi = v + w * s;
            if hi > m {
                hi -= w * ((hi - m + w - 1) / w);
            }
            let mut lo = v - w * s;
            if lo < -m {
                lo += w * ((-m - lo + w - 1) / w);
            }
            if hi < lo {
                continue;
            }
            let top = prefix[at(hi).expect("in range")];
            let below = at(lo - w).map_or(0.0, |k| prefix[k]);
            *slot = (top - below) * inv;
        }
        dist = next;
        m = new_m;
    }
    let r = rhs as i64;
    if r > m {
        0.0
    } else {
        dist[(r + m) as usize]
    }
}

/// Deviation of the random model from 1 for `sys` on `[−S, S]^d`.
pub fn random_model_deviation(
    sys: &LinearSystem,
    alpha: f64,
    s: u64,
    opts: &DeviationOptions,
) -> Result<DeviationReport> {
    DeviationModel::new(sys, opts)?.evaluate(alpha, s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub alpha: f64,
    /// Width at which the deviation crosses 1, interpolated in log–log.
    pub s_star: f64,
    pub dominant_codim: usize,
    pub dominant_merged: usize,
    pub dominant_ratio: f64,
    /// Deviation at the first integer width past the crossing.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdFit {
    pub points: Vec<ThresholdPoint>,
    /// Least-squares slope of `log S*` against `log(1/α)`.
    pub slope: f64,
    pub intercept: f64,
}

const S_CEILING: u64 = 1 << 40;

fn crossing(model: &DeviationModel, alpha: f64) -> Result<ThresholdPoint> {
    let dev = |s: u64| model.evaluate(alpha, s).map(|r| r.deviation);
    let mut lo = 2u64;
    let mut d_lo = dev(lo)?;
    if d_lo <= 1.0 {
        return Err(Error::numeric(
            format!("deviation at α = {alpha} is already {d_lo:.4} ≤ 1 at S = 2"),
            d_lo,
        ));
    }
    let mut hi = lo;
    let mut d_hi = d_lo;
    while d_hi > 1.0 {
        lo = hi;
        d_lo = d_hi;
        hi *= 2;
        if hi > S_CEILING {
            return Err(Error::numeric(format!("deviation at α = {alpha} stays above 1 up to S = {S_CEILING}"), d_hi));
        }
        d_hi = dev(hi)?;
        if d_hi > d_lo {
            return Err(Error::numeric(
                format!("deviation at α = {alpha} increases from S = {lo} ({d_lo:.6}) to S = {hi} ({d_hi:.6})"),
                d_hi - d_lo,
            ));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let d_mid = dev(mid)?;
        if d_mid > d_lo || d_mid < d_hi {
            return Err(Error::numeric(
                format!(
                    "deviation at α = {alpha} is not monotone: S = {lo}, {mid}, {hi} give {d_lo:.6}, {d_mid:.6}, {d_hi:.6}"
                ),
                (d_mid - d_lo).max(d_hi - d_mid),
            ));
        }
        if d_mid > 1.0 {
            lo = mid;
            d_lo = d_mid;
        } else {
            hi = mid;
            d_hi = d_mid;
        }
    }
    let (ll, lh) = ((lo as f64).ln(), (hi as f64).ln());
    let s_star = if d_hi > 0.0 {
        let (gl, gh) = (d_lo.ln(), d_hi.ln());
        (ll + gl / (gl - gh) * (lh - ll)).exp()
    } else {
        hi as f64
    };
    let report = model.evaluate(alpha, hi)?;
    Ok(ThresholdPoint {
        alpha,
        s_star,
        dominant_codim: report.dominant.codim,
        dominant_merged: report.dominant.merged,
        dominant_ratio: report.dominant.ratio,
        deviation: report.deviation,
    })
}

/// Solve `deviation(S*) = 1` for each `α` and fit `log S* ≈ a + slope·log(1/α)`.
pub fn width_threshold_fit(sys: &LinearSystem, alphas: &[f64], opts: &DeviationOptions) -> Result<ThresholdFit> {
    if alphas.len() < 3 {
        return Err(Error::domain(format!("{} densities given; the fit needs at least 3", alphas.len())));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::domain(format!("density α = {a} must lie in (0, 1)")));
    }
    let model = DeviationModel::new(sys, opts)?;
    let points = alphas.iter().map(|&a| crossing(&model, a)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| (1.0 / p.alpha).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.s_star.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("densities must not all be equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(ThresholdFit {
        points,
        slope,
        intercept: my - slope * mx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linforms::{first_family, third_family, LinearForm};

    #[test]
    fn box_basics() {
        let b = BoxRegion::new(vec![1, -2], vec![4, 2]).unwrap();
        assert_eq!(b.point_count(), 20);
        assert_eq!(b.inradius(), 1.5);
        let all: HashSet<Vec<i64>> = (0..20).map(|i| b.point(i)).collect();
        assert_eq!(all.len(), 20);
        assert!(all.iter().all(|p| b.contains(p)));
        assert!(BoxRegion::new(vec![0], vec![1]).is_err());
        assert!(BoxRegion::centered(2, 10).unwrap().within_diameter_cap(1.0));
        assert!(!BoxRegion::cube(2, 90, 100).unwrap().within_diameter_cap(1.0));
    }

    #[test]
    fn exponent_patterns() {
        let e: ExponentPattern = "1,0,1".parse().unwrap();
        assert_eq!(e.selected(), vec![0, 2]);
        assert_eq!("101".parse::<ExponentPattern>().unwrap(), e);
        assert!("12".parse::<ExponentPattern>().is_err());
    }

    #[test]
    fn random_model_density() {
        let r = RandomModel::new(0.3, 11, 1_000_003).unwrap();
        let hits = (0..100_000u64).filter(|&n| r.value(n) > 0.0).count() as f64 / 1e5;
        assert!((hits - 0.3).abs() < 0.006, "{hits}");
        assert_eq!(r.value(17), r.value(17));
        assert!(RandomModel::new(1.0, 0, 7).is_err());
    }

    #[test]
    fn hyperplane_density_matches_enumeration() {
        for (weights, rhs, s) in [(vec![1u64, 1], 0u64, 3u64), (vec![1, 2], 1, 4), (vec![1, 1, 2], 3, 3), (vec![3], 0, 5), (vec![2, 3], 7, 2)] {
            let side = 2 * s as i64 + 1;
            let total = side.pow(weights.len() as u32);
            let mut hits = 0i64;
            for idx in 0..total {
                let mut i = idx;
                let mut v = 0i64;
                for &w in &weights {
                    v += w as i64 * (i % side - s as i64);
                    i /= side;
                }
                hits += i64::from(v == rhs as i64);
            }
            let want = hits as f64 / total as f64;
            let got = hyperplane_density(&weights, rhs, s);
            assert!((got - want).abs() < 1e-15, "{weights:?}: {got} vs {want}");
        }
    }

    /// `(1/|B|) Σ_x α^{#distinct − t} − 1` by enumeration.
    fn brute_deviation(sys: &LinearSystem, alpha: f64, s: i64) -> f64 {
        let region = BoxRegion::centered(sys.d(), s).unwrap();
        let n = region.point_count();
        let mut total = 0.0;
        for i in 0..n {
            let x = region.point(i);
            let mut vals: Vec<i128> = sys.forms().iter().map(|f| f.eval(&x)).collect();
            let distinct = distinct_count(&mut vals);
            total += alpha.powi(distinct as i32 - sys.t() as i32);
        }
        total / n as f64 - 1.0
    }

    #[test]
    fn deviation_is_exact_when_every_flat_is_counted() {
        // two variables: hyperplanes by DP and points exactly
        let sys = third_family(3, 1).unwrap();
        for s in [2u64, 5, 9] {
            let got = random_model_deviation(&sys, 0.3, s, &DeviationOptions::default()).unwrap();
            let want = brute_deviation(&sys, 0.3, s as i64);
            assert!((got.deviation - want).abs() < 1e-9 * want.abs().max(1.0), "S = {s}: {} vs {want}", got.deviation);
            assert!(!got.approximate);
        }
        let sys = LinearSystem::new(
            3,
            vec![
                LinearForm::homogeneous(vec![1, 0, 0]),
                LinearForm::homogeneous(vec![0, 1, 0]),
                LinearForm::homogeneous(vec![0, 0, 1]),
                LinearForm::new(vec![1, 1, 0], 1),
            ],
        )
        .unwrap();
        let opts = DeviationOptions { max_codim: 3, ..Default::default() };
        let got = random_model_deviation(&sys, 0.5, 3, &opts).unwrap();
        // codim-2 flats fall back to the density approximation; stay close
        let want = brute_deviation(&sys, 0.5, 3);
        assert!(got.approximate);
        assert!((got.deviation - want).abs() < 0.15 * want, "{} vs {want}", got.deviation);
    }

    #[test]
    fn dominant_flat_of_first_family() {
        let sys = first_family(3).unwrap();
        let rep = random_model_deviation(&sys, 0.1, 20_000, &DeviationOptions::default()).unwrap();
        assert_eq!(rep.dominant.exact_ratio(), BigRational::from_integer(4.into()));
        assert!(rep.terms.iter().any(|t| t.codim == 1 && t.merged == 4));
    }

    #[test]
    fn deviation_decreases_in_width() {
        let model = DeviationModel::new(&first_family(2).unwrap(), &DeviationOptions::default()).unwrap();
        let devs: Vec<f64> = [2u64, 4, 8, 16, 64, 256, 1024].iter().map(|&s| model.evaluate(0.2, s).unwrap().deviation).collect();
        assert!(devs.windows(2).all(|w| w[1] <= w[0]), "{devs:?}");
    }
}
