//! Affine subspaces `{x : A x = b}` held as the reduced row-echelon form of
//! the augmented matrix `(A | b)` over the rationals.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{FormPartition, LinearForm, LinearSystem};

/// Codimension of a subspace; empty subspaces have infinite codimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Codim {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Codim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Codim::Finite(c) => write!(f, "{c}"),
            Codim::Infinite => write!(f, "inf"),
        }
    }
}

/// Augmented vector `(a | −c)` of a form; pair differences of these are the
/// constraint rows `(a_i − a_j) x = c_j − c_i`.
pub(crate) fn augmented(f: &LinearForm) -> Vec<BigRational> {
    f.coeffs
        .iter()
        .map(|&a| BigRational::from_integer(a.into()))
        .chain(std::iter::once(BigRational::from_integer((-(f.constant as i128)).into())))
        .collect()
}

pub(crate) fn difference(u: &[BigRational], v: &[BigRational]) -> Vec<BigRational> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

/// Affine subspace of `R^d` in canonical reduced row-echelon form.
///
/// The canonical form is unique per subspace, so it doubles as a dedup key.
/// An inconsistent system keeps the single row `(0 … 0 | 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    d: usize,
    rows: Vec<Vec<BigRational>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn whole(d: usize) -> Self {
        Self {
            d,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Subspace cut out by augmented rows of length `d + 1`.
    pub fn from_rows(d: usize, rows: impl IntoIterator<Item = Vec<BigRational>>) -> Self {
        let mut s = Self::whole(d);
        for r in rows {
            s.insert(r);
            if !s.is_feasible() {
                break;
            }
        }
        s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_feasible(&self) -> bool {
        self.pivots.last().is_none_or(|&p| p < self.d)
    }

    pub fn codim(&self) -> Codim {
        if self.is_feasible() {
            Codim::Finite(self.rows.len())
        } else {
            Codim::Infinite
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` modulo the row space; zero exactly when `v` lies in it.
    pub fn normal_form(&self, v: &[BigRational]) -> Vec<BigRational> {
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p].is_zero() {
                continue;
            }
            let f = v[p].clone();
            for (x, r) in v.iter_mut().zip(row).skip(p) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
        v
    }

    pub fn contains_row(&self, v: &[BigRational]) -> bool {
        self.normal_form(v).iter().all(Zero::is_zero)
    }

    /// Add the constraint row `v`; returns whether the rank grew.
    pub fn insert(&mut self, v: Vec<BigRational>) -> bool {
        assert_eq!(v.len(), self.d + 1, "constraint row has the wrong length");
        let mut v = self.normal_form(&v);
        let Some(p) = v.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let lead = v[p].clone();
        for x in v.iter_mut().skip(p) {
            *x /= &lead;
        }
        for row in &mut self.rows {
            if row[p].is_zero() {
                continue;
            }
            let f = row[p].clone();
            for (x, y) in row.iter_mut().zip(&v).skip(p) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.rows.insert(at, v);
        self.pivots.insert(at, p);
        if p == self.d {
            // inconsistent: collapse to the canonical empty subspace
            self.rows = vec![unit(self.d + 1, self.d)];
            self.pivots = vec![self.d];
        }
        true
    }

    /// Whether `other` lies inside `self`: every constraint of `self` is
    /// implied by those of `other`.
    pub fn contains(&self, other: &Subspace) -> bool {
        if !other.is_feasible() {
            return true;
        }
        self.is_feasible() && self.rows.iter().all(|r| other.contains_row(r))
    }

    pub fn with_row(&self, v: Vec<BigRational>) -> Self {
        let mut s = self.clone();
        s.insert(v);
        s
    }

    /// Partition of the forms of `sys` into classes that agree identically on
    /// this subspace. Meaningless for an empty subspace.
    pub fn induced_partition(&self, sys: &LinearSystem) -> FormPartition {
        let mut classes: HashMap<Vec<BigRational>, usize> = HashMap::new();
        let labels: Vec<usize> = sys
            .forms()
            .iter()
            .map(|f| {
                let key = self.normal_form(&augmented(f));
                let next = classes.len();
                *classes.entry(key).or_insert(next)
            })
            .collect();
        FormPartition::from_labels(&labels)
    }

    /// Number of distinct forms of `sys` restricted to this subspace.
    pub fn distinct_count(&self, sys: &LinearSystem) -> usize {
        let mut keys: Vec<Vec<BigRational>> =
            sys.forms().iter().map(|f| self.normal_form(&augmented(f))).collect();
        keys.sort();
        keys.dedup();
        keys.len()
    }

    /// Constraint rows scaled to primitive integers, as `(a, b)` with `a·x = b`.
    pub fn integer_equations(&self) -> Vec<(Vec<BigInt>, BigInt)> {
        self.rows
            .iter()
            .map(|row| {
                let mut lcm = BigInt::one();
                for x in row {
                    lcm = lcm.lcm(x.denom());
                }
                let ints: Vec<BigInt> = row.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
                let mut g = BigInt::zero();
                for x in &ints {
                    g = g.gcd(x);
                }
                if g.is_zero() {
                    g = BigInt::one();
                }
                let ints: Vec<BigInt> = ints.into_iter().map(|x| x / &g).collect();
                let (a, b) = ints.split_at(self.d);
                (a.to_vec(), b[0].clone())
            })
            .collect()
    }

    /// Equations rendered with variable names, e.g. `x1 - y1 = 0`.
    pub fn render(&self, names: &[String]) -> Vec<String> {
        if !self.is_feasible() {
            return vec!["0 = 1".into()];
        }
        self.integer_equations()
            .into_iter()
            .map(|(a, b)| {
                let mut lhs = String::new();
                for (c, name) in a.iter().zip(names) {
                    if c.is_zero() {
                        continue;
                    }
                    let mag = c.abs();
                    let term = if mag.is_one() { name.clone() } else { format!("{mag}{name}") };
                    if lhs.is_empty() {
                        if c.is_negative() {
                            lhs.push('-');
                        }
                    } else {
                        lhs.push_str(if c.is_negative() { " - " } else { " + " });
                    }
                    lhs.push_str(&term);
                }
                format!("{lhs} = {b}")
            })
            .collect()
    }
}

fn unit(len: usize, at: usize) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); len];
    v[at] = BigRational::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(xs: &[i64]) -> Vec<BigRational> {
        xs.iter().map(|&x| BigRational::from_integer(x.into())).collect()
    }

    #[test]
    fn canonical_form_ignores_generating_set() {
        let a = Subspace::from_rows(3, [row(&[1, 1, 0, 2]), row(&[0, 1, 1, 0])]);
        let b = Subspace::from_rows(3, [row(&[1, 2, 1, 2]), row(&[2, 0, -2, 4])]);
        assert_eq!(a, b);
        assert_eq!(a.codim(), Codim::Finite(2));
    }

    #[test]
    fn repeated_insertion_is_idempotent() {
        let mut s = Subspace::from_rows(2, [row(&[1, -1, 0])]);
        let before = s.clone();
        assert!(!s.insert(row(&[2, -2, 0])));
        assert_eq!(s, before);
    }

    #[test]
    fn inconsistency_detected() {
        let s = Subspace::from_rows(1, [row(&[1, 0]), row(&[1, 1])]);
        assert!(!s.is_feasible());
        assert_eq!(s.codim(), Codim::Infinite);
        let t = Subspace::from_rows(2, [row(&[1, 1, 3]), row(&[2, 2, 5]), row(&[0, 1, 0])]);
        assert_eq!(s.codim(), t.codim());
    }

    #[test]
    fn containment() {
        let line = Subspace::from_rows(3, [row(&[1, 0, 0, 0]), row(&[0, 1, 0, 0])]);
        let plane = Subspace::from_rows(3, [row(&[1, 1, 0, 0])]);
        assert!(plane.contains(&line));
        assert!(!line.contains(&plane));
        assert!(Subspace::whole(3).contains(&plane));
        let off = Subspace::from_rows(3, [row(&[1, 1, 0, 1])]);
        assert!(!off.contains(&line));
    }

    #[test]
    fn integer_equations_are_primitive() {
        let s = Subspace::from_rows(3, [row(&[2, 4, 0, 6]), row(&[0, 3, 3, 3])]);
        let eqs = s.integer_equations();
        assert_eq!(eqs.len(), 2);
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(s.render(&names), vec!["a - 2c = 1".to_string(), "b + c = 1".to_string()]);
    }
}
