//! The collision index `L(Ψ)` and related extremal searches over the flats of
//! the arrangement of pairwise-difference hyperplanes.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use super::rowspace::{augmented, difference};
use super::{Codim, FormPartition, LinearSystem, Subspace};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LindexOptions {
    /// Upper bound on the number of flats held while searching.
    pub max_subspaces: usize,
    /// Stop descending below this codimension; the result is then a lower bound.
    pub max_codim: Option<usize>,
}

impl Default for LindexOptions {
    fn default() -> Self {
        Self {
            max_subspaces: 1_000_000,
            max_codim: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LindexResult {
    pub value: BigRational,
    /// Maximizing partition; absent when every merge is inconsistent.
    pub witness: Option<FormPartition>,
    pub witness_subspace: Option<Subspace>,
    pub codim: Option<usize>,
    pub subspaces_explored: usize,
    /// Set when `max_codim` cut the search before the pruning bound did.
    pub truncated_at_codim: Option<usize>,
}

/// Distinct consistent pairwise-difference hyperplanes, each with a row
/// generating it, in order of first appearance over pairs `(i, j)`, `i < j`.
pub(crate) fn difference_hyperplanes(sys: &LinearSystem) -> Vec<(Subspace, Vec<BigRational>)> {
    let aug: Vec<_> = sys.forms().iter().map(augmented).collect();
    let whole = Subspace::whole(sys.d());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for i in 0..aug.len() {
        for j in i + 1..aug.len() {
            let row = difference(&aug[i], &aug[j]);
            if row.iter().all(Zero::is_zero) {
                continue;
            }
            let h = whole.with_row(row.clone());
            if h.is_feasible() && seen.insert(h.clone()) {
                out.push((h, row));
            }
        }
    }
    out
}

fn ratio(t: usize, parts: usize, codim: usize) -> BigRational {
    BigRational::new(BigInt::from(t - parts), BigInt::from(codim))
}

/// `codim Π(Ψ, π)`: the rank of the within-atom difference constraints, or
/// infinite when they are inconsistent.
pub fn codim_of_partition(sys: &LinearSystem, pi: &FormPartition) -> Result<Codim> {
    if pi.t() != sys.t() || pi.atoms().iter().flatten().any(|&i| i >= sys.t()) {
        return Err(Error::domain(format!(
            "partition covers {} indices but the system has {} forms",
            pi.t(),
            sys.t()
        )));
    }
    Ok(partition_subspace(sys, pi).codim())
}

fn partition_subspace(sys: &LinearSystem, pi: &FormPartition) -> Subspace {
    let aug: Vec<_> = sys.forms().iter().map(augmented).collect();
    let rows = pi
        .atoms()
        .iter()
        .flat_map(|atom| atom.windows(2).map(|w| difference(&aug[w[0]], &aug[w[1]])).collect::<Vec<_>>());
    Subspace::from_rows(sys.d(), rows)
}

pub fn lindex(sys: &LinearSystem) -> Result<LindexResult> {
    lindex_with(sys, &LindexOptions::default())
}

/// `L(Ψ) = sup_{|π|<t} (t − |π|) / codim Π(Ψ, π)` by breadth-first search over
/// flats of the difference arrangement, one codimension at a time.
///
/// For a flat `V` the induced partition (forms equal on `V`) is the coarsest
/// partition whose subvariety contains `V`, so the supremum is attained on
/// flats. A level `c` is explored only while `(t − 1)/c` can still beat the
/// best ratio found.
pub fn lindex_with(sys: &LinearSystem, opts: &LindexOptions) -> Result<LindexResult> {
    sys.require_distinct()?;
    let t = sys.t();
    if t < 2 {
        return Err(Error::domain("the collision index needs at least two forms"));
    }
    let hyper = difference_hyperplanes(sys);
    let mut best = BigRational::zero();
    let mut witness: Option<(FormPartition, Subspace, usize)> = None;
    let mut explored = 0usize;
    let mut truncated = None;
    let mut frontier: Vec<Subspace> = hyper.iter().map(|(h, _)| h.clone()).collect();
    let mut codim = 1usize;
    while !frontier.is_empty() {
        let partitions: Vec<FormPartition> = frontier.par_iter().map(|v| v.induced_partition(sys)).collect();
        explored += frontier.len();
        for (v, p) in frontier.iter().zip(partitions) {
            let r = ratio(t, p.len(), codim);
            if r > best {
                best = r;
                witness = Some((p, v.clone(), codim));
            }
        }
        let next = codim + 1;
        if next > sys.d() || ratio(t, 1, next) <= best {
            break;
        }
        if opts.max_codim.is_some_and(|m| next > m) {
            truncated = Some(codim);
            break;
        }
        let children: Vec<Vec<Subspace>> = frontier
            .par_iter()
            .map(|v| {
                hyper
                    .iter()
                    .filter(|(_, row)| !v.contains_row(row))
                    .map(|(_, row)| v.with_row(row.clone()))
                    .filter(Subspace::is_feasible)
                    .collect()
            })
            .collect();
        let mut seen = HashSet::new();
        let mut level = Vec::new();
        for g in children.into_iter().flatten() {
            if !seen.contains(&g) {
                seen.insert(g.clone());
                level.push(g);
                if level.len() > opts.max_subspaces {
                    return Err(Error::resource(
                        format!(
                            "closure lattice exceeds {} flats at codimension {next}; set a codimension cap",
                            opts.max_subspaces
                        ),
                        level.len() as u64,
                    ));
                }
            }
        }
        frontier = level;
        codim = next;
    }
    let (witness, witness_subspace, codim) = match witness {
        Some((p, v, c)) => (Some(p), Some(v), Some(c)),
        None => (None, None, None),
    };
    Ok(LindexResult {
        value: best,
        witness,
        witness_subspace,
        codim,
        subspaces_explored: explored,
        truncated_at_codim: truncated,
    })
}

/// Largest system accepted by [`lindex_bruteforce`].
pub const BRUTEFORCE_MAX_FORMS: usize = 8;

/// `L(Ψ)` by direct enumeration of every set partition of the forms.
pub fn lindex_bruteforce(sys: &LinearSystem) -> Result<LindexResult> {
    sys.require_distinct()?;
    let t = sys.t();
    if t > BRUTEFORCE_MAX_FORMS {
        return Err(Error::Unsupported(format!(
            "brute-force enumeration is limited to {BRUTEFORCE_MAX_FORMS} forms, got {t}"
        )));
    }
    if t < 2 {
        return Err(Error::domain("the collision index needs at least two forms"));
    }
    let mut best = BigRational::zero();
    let mut witness = None;
    let mut explored = 0;
    // restricted growth strings: labels[i] ≤ 1 + max(labels[..i])
    let mut labels = vec![0usize; t];
    loop {
        let parts = labels.iter().max().map_or(0, |m| m + 1);
        if parts < t {
            explored += 1;
            let pi = FormPartition::from_labels(&labels);
            let sub = partition_subspace(sys, &pi);
            if let Codim::Finite(c) = sub.codim() {
                let r = ratio(t, parts, c);
                if r > best {
                    best = r;
                    witness = Some((pi, sub, c));
                }
            }
        }
        // next string
        let mut i = t - 1;
        loop {
            if i == 0 {
                let (witness, witness_subspace, codim) = match witness {
                    Some((p, v, c)) => (Some(p), Some(v), Some(c)),
                    None => (None, None, None),
                };
                return Ok(LindexResult {
                    value: best,
                    witness,
                    witness_subspace,
                    codim,
                    subspaces_explored: explored,
                    truncated_at_codim: None,
                });
            }
            let prefix_max = labels[..i].iter().copied().max().unwrap_or(0);
            if labels[i] <= prefix_max {
                labels[i] += 1;
                labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
            i -= 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinDistinct {
    /// Smallest number of distinct restricted forms.
    pub count: usize,
    pub witness: Subspace,
    pub partition: FormPartition,
    /// Number of candidate flats evaluated (with repetition).
    pub candidates: usize,
}

/// Smallest number of distinct forms of `sys` on an affine subspace of
/// codimension `c ∈ {1, 2}`.
///
/// Restricting to a subspace only identifies forms whose difference vanishes
/// on it, so the count on any subspace equals the count on the flat cut out by
/// the difference hyperplanes containing it. The candidates are therefore the
/// hyperplanes and (for `c = 2`) their pairwise intersections; a codim-2 flat
/// is preferred on ties.
pub fn min_distinct_on_codim(sys: &LinearSystem, c: usize) -> Result<MinDistinct> {
    if !(1..=2).contains(&c) {
        return Err(Error::domain(format!("codimension {c} is not 1 or 2")));
    }
    if c > sys.d() {
        return Err(Error::domain(format!("no codimension-{c} subspace in dimension {}", sys.d())));
    }
    let hyper = difference_hyperplanes(sys);
    let t = sys.t();
    let mut best: Option<(usize, Subspace)> = None;
    let mut candidates = 0;
    if c == 2 {
        let per_row: Vec<Option<(usize, usize, usize)>> = (0..hyper.len())
            .into_par_iter()
            .map(|i| {
                let mut local: Option<(usize, usize, usize)> = None;
                for j in i + 1..hyper.len() {
                    let g = hyper[i].0.with_row(hyper[j].1.clone());
                    if g.codim() != Codim::Finite(2) {
                        continue;
                    }
                    let n = g.distinct_count(sys);
                    if local.is_none_or(|(m, _, _)| n < m) {
                        local = Some((n, i, j));
                    }
                }
                local
            })
            .collect();
        candidates += hyper.len() * hyper.len().saturating_sub(1) / 2;
        for (n, i, j) in per_row.into_iter().flatten() {
            if best.as_ref().is_none_or(|(m, _)| n < *m) {
                best = Some((n, hyper[i].0.with_row(hyper[j].1.clone())));
            }
        }
    }
    candidates += hyper.len();
    for (h, _) in &hyper {
        let n = h.distinct_count(sys);
        if best.as_ref().is_none_or(|(m, _)| n < *m) {
            best = Some((n, h.clone()));
        }
    }
    let (count, witness) = match best {
        Some(b) => b,
        // no consistent collision: generic subspaces keep all forms apart
        None => (t, Subspace::whole(sys.d())),
    };
    let partition = witness.induced_partition(sys);
    Ok(MinDistinct {
        count,
        witness,
        partition,
        candidates,
    })
}
