//! Integer points of a flat: the lattice `{x ∈ Z^d : A x = 0}` and an integer
//! point of `{A x = b}` when one exists.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{FormPartition, LinearSystem, Subspace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionLattice {
    pub d: usize,
    pub dimension: usize,
    /// Basis vectors of the homogeneous solution lattice, each of length `d`.
    pub basis: Vec<Vec<BigInt>>,
    /// `det(Bᵀ B)` for the basis matrix `B`; the squared covolume.
    pub gram_det: BigInt,
    pub covolume: f64,
    /// An integer solution of the affine system, if any exists.
    pub offset: Option<Vec<BigInt>>,
}

/// Integer solution lattice of the within-atom equalities of `pi`.
pub fn solution_lattice(sys: &LinearSystem, pi: &FormPartition) -> Result<SolutionLattice> {
    let sub = Subspace::from_rows(
        sys.d(),
        pi.atoms().iter().flat_map(|atom| {
            atom.windows(2)
                .map(|w| {
                    super::rowspace::difference(
                        &super::rowspace::augmented(&sys.forms()[w[0]]),
                        &super::rowspace::augmented(&sys.forms()[w[1]]),
                    )
                })
                .collect::<Vec<_>>()
        }),
    );
    SolutionLattice::of_subspace(&sub)
}

impl SolutionLattice {
    pub fn of_subspace(sub: &Subspace) -> Result<Self> {
        if !sub.is_feasible() {
            return Err(Error::domain("the equalities are inconsistent; no solution lattice"));
        }
        let d = sub.d();
        let eqs = sub.integer_equations();
        let (a, b): (Vec<Vec<BigInt>>, Vec<BigInt>) = eqs.into_iter().unzip();
        let (h, u, pivots) = column_hermite(&a, d);
        let rank = pivots.len();
        let basis: Vec<Vec<BigInt>> = (rank..d).map(|c| (0..d).map(|r| u[r][c].clone()).collect()).collect();
        let offset = solve_particular(&h, &u, &pivots, &b, d);
        let gram: Vec<Vec<BigInt>> = basis
            .iter()
            .map(|x| basis.iter().map(|y| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect())
            .collect();
        let gram_det = bareiss_det(gram);
        let covolume = gram_det.to_f64().unwrap_or(f64::INFINITY).sqrt();
        Ok(Self {
            d,
            dimension: d - rank,
            basis,
            gram_det,
            covolume,
            offset,
        })
    }
}

type Matrix = Vec<Vec<BigInt>>;

/// Unimodular column reduction `A U = H` with `H` in column echelon form.
/// Returns `H`, `U` and the `(row, column)` pivot positions.
fn column_hermite(a: &[Vec<BigInt>], d: usize) -> (Matrix, Matrix, Vec<(usize, usize)>) {
    let mut h: Vec<Vec<BigInt>> = a.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..d)
        .map(|r| (0..d).map(|c| if r == c { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut col = 0;
    for r in 0..h.len() {
        if col == d {
            break;
        }
        for j in col + 1..d {
            if h[r][j].is_zero() {
                continue;
            }
            let eg = h[r][col].extended_gcd(&h[r][j]);
            let g = eg.gcd;
            let p = &h[r][col] / &g;
            let q = &h[r][j] / &g;
            let (s, t) = (eg.x, eg.y);
            // [C J] ← [C J] · [[s, −q], [t, p]], determinant s·p + t·q = 1
            for m in [&mut h, &mut u] {
                for row in m.iter_mut() {
                    let c0 = row[col].clone();
                    let j0 = row[j].clone();
                    row[col] = &s * &c0 + &t * &j0;
                    row[j] = &p * &j0 - &q * &c0;
                }
            }
        }
        if !h[r][col].is_zero() {
            pivots.push((r, col));
            col += 1;
        }
    }
    (h, u, pivots)
}

fn solve_particular(
    h: &[Vec<BigInt>],
    u: &[Vec<BigInt>],
    pivots: &[(usize, usize)],
    b: &[BigInt],
    d: usize,
) -> Option<Vec<BigInt>> {
    let mut y = vec![BigInt::zero(); d];
    for &(r, c) in pivots {
        let partial: BigInt = (0..c).map(|k| &h[r][k] * &y[k]).sum();
        let rest = &b[r] - partial;
        let (quo, rem) = rest.div_rem(&h[r][c]);
        if !rem.is_zero() {
            return None;
        }
        y[c] = quo;
    }
    for (r, row) in h.iter().enumerate() {
        let lhs: BigInt = row.iter().zip(&y).map(|(p, q)| p * q).sum();
        if lhs != b[r] {
            return None;
        }
    }
    Some((0..d).map(|r| u[r].iter().zip(&y).map(|(p, q)| p * q).sum()).collect())
}

/// Fraction-free determinant of a square integer matrix.
pub(crate) fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

#[cfg(test)]
mod tests {
    use super::super::{first_family, LinearForm};
    use super::*;

    fn bi(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn position(sys: &LinearSystem, coeffs: &[i64]) -> usize {
        sys.forms().iter().position(|f| f.coeffs == coeffs).unwrap()
    }

    fn merged(sys: &LinearSystem, a: usize, b: usize) -> FormPartition {
        let mut atoms = vec![vec![a, b]];
        atoms.extend((0..sys.t()).filter(|&i| i != a && i != b).map(|i| vec![i]));
        FormPartition::new(sys.t(), atoms).unwrap()
    }

    fn check_kernel(lat: &SolutionLattice, eqs: &[Vec<i64>]) {
        for v in &lat.basis {
            for e in eqs {
                let s: BigInt = v.iter().zip(e).map(|(x, &c)| x * BigInt::from(c)).sum();
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn discrete_partition_gives_full_lattice() {
        let f2 = first_family(2).unwrap();
        let lat = solution_lattice(&f2, &FormPartition::discrete(4)).unwrap();
        assert_eq!(lat.dimension, 4);
        assert_eq!(lat.gram_det, BigInt::one());
    }

    #[test]
    fn single_merges() {
        let f2 = first_family(2).unwrap();
        // variables (x1, x2, y1, y2)
        let x1 = position(&f2, &[1, 0, 0, 0]);
        let y1 = position(&f2, &[0, 0, 1, 0]);
        let lat = solution_lattice(&f2, &merged(&f2, x1, y1)).unwrap();
        assert_eq!(lat.dimension, 3);
        check_kernel(&lat, &[vec![1, 0, -1, 0]]);
        assert_eq!(lat.gram_det, BigInt::from(2));
        let mx2 = position(&f2, &[0, -1, 0, 0]);
        let lat = solution_lattice(&f2, &merged(&f2, x1, mx2)).unwrap();
        assert_eq!(lat.dimension, 3);
        check_kernel(&lat, &[vec![1, 1, 0, 0]]);
        assert_eq!(lat.offset, Some(bi(&[0, 0, 0, 0])));
    }

    #[test]
    fn covolume_matches_primitive_normal() {
        // kernel of a primitive row a has covolume |a|
        let sys = LinearSystem::new(3, vec![LinearForm::homogeneous(vec![2, 3, 0]), LinearForm::homogeneous(vec![0, 0, 5])]).unwrap();
        let lat = solution_lattice(&sys, &FormPartition::new(2, vec![vec![0, 1]]).unwrap()).unwrap();
        assert_eq!(lat.gram_det, BigInt::from(4 + 9 + 25));
        check_kernel(&lat, &[vec![2, 3, -5]]);
    }

    #[test]
    fn affine_offsets() {
        // 2x = 1 has no integer solution; x = 3 does
        let sys = LinearSystem::new(1, vec![LinearForm::new(vec![2], 0), LinearForm::new(vec![0], 1)]).unwrap();
        let lat = solution_lattice(&sys, &FormPartition::new(2, vec![vec![0, 1]]).unwrap()).unwrap();
        assert_eq!(lat.dimension, 0);
        assert_eq!(lat.offset, None);
        let sys = LinearSystem::new(2, vec![LinearForm::new(vec![1, 1], -3), LinearForm::new(vec![0, 1], 0)]).unwrap();
        let lat = solution_lattice(&sys, &FormPartition::new(2, vec![vec![0, 1]]).unwrap()).unwrap();
        let x = lat.offset.unwrap();
        assert_eq!(x[0], BigInt::from(3));
        let bad = LinearSystem::new(1, vec![LinearForm::new(vec![1], 0), LinearForm::new(vec![1], 1)]).unwrap();
        assert!(solution_lattice(&bad, &FormPartition::new(2, vec![vec![0, 1]]).unwrap()).is_err());
    }

    #[test]
    fn determinant() {
        let m = vec![bi(&[2, 0, 1]), bi(&[1, 3, 2]), bi(&[1, 1, 2])];
        assert_eq!(bareiss_det(m), BigInt::from(6));
        assert_eq!(bareiss_det(vec![bi(&[0, 1]), bi(&[1, 0])]), BigInt::from(-1));
    }
}
