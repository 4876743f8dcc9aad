//! The three families of forms appearing in the linear-forms conditions.

use super::{LinearForm, LinearSystem};
use crate::error::{Error, Result};

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("k = {k}; the families need k ≥ 2")));
    }
    Ok(())
}

fn pair_names(k: usize) -> Vec<String> {
    (1..=k)
        .map(|i| format!("x{i}"))
        .chain((1..=k).map(|i| format!("y{i}")))
        .collect()
}

/// `ψ_j(s) = Σ_i (j − i) s_i` over `k` variables, with `j` counted from 1.
pub fn psi_j(k: usize, j: usize) -> Result<LinearForm> {
    check_k(k)?;
    if j == 0 || j > k {
        return Err(Error::domain(format!("j = {j} is outside 1..={k}")));
    }
    Ok(LinearForm::homogeneous(
        (1..=k).map(|i| j as i64 - i as i64).collect(),
    ))
}

/// Forms `ψ_j(s^{(ω)})` in the variables `(x_1..x_k, y_1..y_k)`, where
/// `s^{(ω)}_i` is `x_i` or `y_i` according to `ω_i` and `ω` ranges over the
/// coordinates other than `j`.
///
/// Forms are listed by `j`, then by `ω` read as a binary number whose lowest
/// bit belongs to the smallest remaining coordinate.
pub fn first_family(k: usize) -> Result<LinearSystem> {
    check_k(k)?;
    if k > 16 {
        return Err(Error::domain(format!("k = {k} gives more forms than supported")));
    }
    let mut forms = Vec::with_capacity(k << (k - 1));
    for j in 1..=k {
        let base = psi_j(k, j)?.coeffs;
        let others: Vec<usize> = (0..k).filter(|&i| i != j - 1).collect();
        for omega in 0u32..(1 << (k - 1)) {
            let mut coeffs = vec![0i64; 2 * k];
            for (bit, &i) in others.iter().enumerate() {
                let slot = if omega >> bit & 1 == 1 { k + i } else { i };
                coeffs[slot] = base[i];
            }
            forms.push(LinearForm::homogeneous(coeffs));
        }
    }
    LinearSystem::new(2 * k, forms)?.with_names(pair_names(k))
}

/// Forms `k!·Σ_i s^{(ω)}_i` for every `ω ∈ {0,1}^k`.
pub fn second_family(k: usize) -> Result<LinearSystem> {
    check_k(k)?;
    if k > 16 {
        return Err(Error::domain(format!("k = {k} gives more forms than supported")));
    }
    let fact: i64 = (1..=k as i64).product();
    let forms = (0u32..(1 << k))
        .map(|omega| {
            let mut coeffs = vec![0i64; 2 * k];
            for i in 0..k {
                let slot = if omega >> i & 1 == 1 { k + i } else { i };
                coeffs[slot] = fact;
            }
            LinearForm::homogeneous(coeffs)
        })
        .collect();
    LinearSystem::new(2 * k, forms)?.with_names(pair_names(k))
}

/// The zero form followed by `(i − j)·d^{(τ)}` for `τ ∈ {0, 1}` and `i ≠ j`,
/// in the two variables `(d0, d1)`.
pub fn third_family(k: usize, j: usize) -> Result<LinearSystem> {
    check_k(k)?;
    if j == 0 || j > k {
        return Err(Error::domain(format!("j = {j} is outside 1..={k}")));
    }
    let mut forms = vec![LinearForm::homogeneous(vec![0, 0])];
    for tau in 0..2 {
        for i in (1..=k).filter(|&i| i != j) {
            let mut coeffs = vec![0i64; 2];
            coeffs[tau] = i as i64 - j as i64;
            forms.push(LinearForm::homogeneous(coeffs));
        }
    }
    LinearSystem::new(2, forms)?.with_names(vec!["d0".into(), "d1".into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn rendered(sys: &LinearSystem) -> BTreeSet<String> {
        sys.forms().iter().map(|f| f.render(sys.names())).collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn psi_j_examples() {
        assert_eq!(psi_j(3, 1).unwrap().coeffs, vec![0, -1, -2]);
        assert_eq!(psi_j(3, 2).unwrap().coeffs, vec![1, 0, -1]);
        assert_eq!(psi_j(3, 3).unwrap().coeffs, vec![2, 1, 0]);
        assert!(psi_j(3, 0).is_err());
        assert!(psi_j(3, 4).is_err());
    }

    #[test]
    fn first_family_small() {
        let f2 = first_family(2).unwrap();
        assert_eq!(f2.t(), 4);
        assert_eq!(rendered(&f2), set(&["x1", "y1", "-x2", "-y2"]));
        assert!(first_family(1).is_err());
    }

    #[test]
    fn first_family_three_matches_listed_terms() {
        let f3 = first_family(3).unwrap();
        let expect = set(&[
            "-x2 - 2x3", "-x2 - 2y3", "-2x3 - y2", "-y2 - 2y3",
            "x1 - x3", "-x3 + y1", "x1 - y3", "y1 - y3",
            "2x1 + x2", "x2 + 2y1", "2x1 + y2", "2y1 + y2",
        ]);
        assert_eq!(f3.t(), 12);
        assert_eq!(rendered(&f3), expect);
    }

    #[test]
    fn first_family_four_is_distinct() {
        let f4 = first_family(4).unwrap();
        assert_eq!(f4.t(), 32);
        assert!(f4.is_distinct());
    }

    #[test]
    fn second_family_shapes() {
        let s2 = second_family(2).unwrap();
        assert_eq!(rendered(&s2), set(&["2x1 + 2x2", "2x2 + 2y1", "2x1 + 2y2", "2y1 + 2y2"]));
        let s3 = second_family(3).unwrap();
        assert_eq!(s3.t(), 8);
        for f in s3.forms() {
            assert!(f.coeffs.iter().all(|&c| c == 0 || c == 6));
            assert_eq!(f.coeffs.iter().filter(|&&c| c == 6).count(), 3);
        }
        assert!(s3.is_distinct());
    }

    #[test]
    fn third_family_shapes() {
        assert_eq!(rendered(&third_family(3, 1).unwrap()), set(&["0", "d0", "2d0", "d1", "2d1"]));
        assert_eq!(rendered(&third_family(2, 2).unwrap()), set(&["0", "-d0", "-d1"]));
        assert_eq!(rendered(&third_family(3, 2).unwrap()), set(&["0", "-d0", "d0", "-d1", "d1"]));
        assert!(third_family(3, 4).is_err());
    }
}
