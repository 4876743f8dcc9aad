//! Systems of affine linear forms over exact arithmetic.
//!
//! A form `f(x) = a·x + c` is stored with integer coefficients. Two forms agree
//! on the affine subspace `{x : A x = b}` exactly when their augmented
//! difference `(a_i − a_j | c_j − c_i)` lies in the row space of `(A | b)`;
//! every collision question below reduces to that test.

mod families;
mod index;
mod lattice;
mod rowspace;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use families::{first_family, psi_j, second_family, third_family};
pub use index::{
    codim_of_partition, lindex, lindex_bruteforce, lindex_with, min_distinct_on_codim, LindexOptions,
    LindexResult, MinDistinct,
};
pub(crate) use index::difference_hyperplanes;
pub use lattice::{solution_lattice, SolutionLattice};
pub use rowspace::{Codim, Subspace};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LinearForm {
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl LinearForm {
    pub fn new(coeffs: Vec<i64>, constant: i64) -> Self {
        Self { coeffs, constant }
    }

    pub fn homogeneous(coeffs: Vec<i64>) -> Self {
        Self::new(coeffs, 0)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[i64]) -> i128 {
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.constant as i128, |acc, (&a, &v)| acc + a as i128 * v as i128)
    }

    /// Human-readable rendering such as `-x2 - 2x3 + 1`.
    pub fn render(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (a, name) in self.coeffs.iter().zip(names) {
            if *a == 0 {
                continue;
            }
            let mag = a.unsigned_abs();
            let term = if mag == 1 { name.clone() } else { format!("{mag}{name}") };
            if out.is_empty() {
                if *a < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if *a < 0 { " - " } else { " + " });
            }
            out.push_str(&term);
        }
        if self.constant != 0 || out.is_empty() {
            if out.is_empty() {
                out = self.constant.to_string();
            } else {
                out.push_str(if self.constant < 0 { " - " } else { " + " });
                out.push_str(&self.constant.unsigned_abs().to_string());
            }
        }
        out
    }
}

/// An ordered list of `t` affine forms in `d` variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinearSystem {
    d: usize,
    forms: Vec<LinearForm>,
    names: Vec<String>,
}

impl LinearSystem {
    /// System of pairwise distinct forms.
    pub fn new(d: usize, forms: Vec<LinearForm>) -> Result<Self> {
        let sys = Self::with_repeats(d, forms)?;
        if let Some((i, j)) = sys.first_repeat() {
            return Err(Error::domain(format!("forms {i} and {j} are identical")));
        }
        Ok(sys)
    }

    /// System that may list the same form more than once, as happens when a
    /// product of weights repeats a factor.
    pub fn with_repeats(d: usize, forms: Vec<LinearForm>) -> Result<Self> {
        if forms.is_empty() {
            return Err(Error::domain("a system needs at least one form"));
        }
        if let Some((i, f)) = forms.iter().enumerate().find(|(_, f)| f.dim() != d) {
            return Err(Error::domain(format!(
                "form {i} has {} coefficients, expected {d}",
                f.dim()
            )));
        }
        Ok(Self {
            d,
            forms,
            names: (1..=d).map(|i| format!("s{i}")).collect(),
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::domain(format!("{} names for {} variables", names.len(), self.d)));
        }
        self.names = names;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[LinearForm] {
        &self.forms
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_distinct(&self) -> bool {
        self.first_repeat().is_none()
    }

    fn first_repeat(&self) -> Option<(usize, usize)> {
        for i in 0..self.forms.len() {
            for j in i + 1..self.forms.len() {
                if self.forms[i] == self.forms[j] {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub(crate) fn require_distinct(&self) -> Result<()> {
        match self.first_repeat() {
            Some((i, j)) => Err(Error::domain(format!("forms {i} and {j} are identical"))),
            None => Ok(()),
        }
    }

    /// Interchange text: one form per line as `c0; c1 c2 … cd`. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut forms = Vec::new();
        let mut d = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (c, rest) = line
                .split_once(';')
                .ok_or_else(|| Error::Format(format!("line {}: missing `;`", lineno + 1)))?;
            let parse = |s: &str| {
                s.parse::<i64>()
                    .map_err(|_| Error::Format(format!("line {}: `{s}` is not an integer", lineno + 1)))
            };
            let constant = parse(c.trim())?;
            let coeffs = rest.split_whitespace().map(parse).collect::<Result<Vec<_>>>()?;
            match d {
                None => d = Some(coeffs.len()),
                Some(d) if d != coeffs.len() => {
                    return Err(Error::Format(format!(
                        "line {}: {} coefficients, expected {d}",
                        lineno + 1,
                        coeffs.len()
                    )))
                }
                _ => {}
            }
            forms.push(LinearForm::new(coeffs, constant));
        }
        let d = d.ok_or_else(|| Error::Format("no forms in input".into()))?;
        Self::new(d, forms)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for f in &self.forms {
            s.push_str(&f.constant.to_string());
            s.push(';');
            for a in &f.coeffs {
                s.push(' ');
                s.push_str(&a.to_string());
            }
            s.push('\n');
        }
        s
    }
}

/// A partition of the form indices `0..t` into disjoint atoms.
///
/// Atoms are kept sorted internally and ordered by their smallest element, so
/// equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FormPartition {
    atoms: Vec<Vec<usize>>,
}

impl FormPartition {
    pub fn new(t: usize, atoms: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; t];
        for atom in &atoms {
            if atom.is_empty() {
                return Err(Error::domain("partition has an empty atom"));
            }
            for &i in atom {
                if i >= t {
                    return Err(Error::domain(format!("index {i} is outside 0..{t}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::domain(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::domain(format!("index {i} is not covered")));
        }
        Ok(Self::canonical(atoms))
    }

    /// Every form in its own atom.
    pub fn discrete(t: usize) -> Self {
        Self {
            atoms: (0..t).map(|i| vec![i]).collect(),
        }
    }

    /// Partition whose atoms are the classes of equal labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        Self::canonical(groups.into_values().collect())
    }

    fn canonical(mut atoms: Vec<Vec<usize>>) -> Self {
        for a in &mut atoms {
            a.sort_unstable();
        }
        atoms.sort_unstable_by_key(|a| a[0]);
        Self { atoms }
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of indices covered.
    pub fn t(&self) -> usize {
        self.atoms.iter().map(Vec::len).sum()
    }
}

impl fmt::Display for FormPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                let inner: Vec<String> = a.iter().map(|i| i.to_string()).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let text = "# a comment\n0; 1 0 -2\n3; 0 1 1\n\n";
        let sys = LinearSystem::parse(text).unwrap();
        assert_eq!(sys.t(), 2);
        assert_eq!(sys.d(), 3);
        assert_eq!(sys.forms()[1], LinearForm::new(vec![0, 1, 1], 3));
        assert_eq!(LinearSystem::parse(&sys.to_text()).unwrap(), sys);
    }

    #[test]
    fn text_errors() {
        assert!(matches!(LinearSystem::parse("1 2 3"), Err(Error::Format(_))));
        assert!(matches!(LinearSystem::parse("0; 1 2\n0; 1"), Err(Error::Format(_))));
        assert!(matches!(LinearSystem::parse("0; 1 x"), Err(Error::Format(_))));
        assert!(matches!(LinearSystem::parse("0; 1 2\n0; 1 2"), Err(Error::Domain(_))));
    }

    #[test]
    fn repeats_only_when_requested() {
        let f = LinearForm::homogeneous(vec![1]);
        assert!(LinearSystem::new(1, vec![f.clone(), f.clone()]).is_err());
        let sys = LinearSystem::with_repeats(1, vec![f.clone(), f]).unwrap();
        assert!(!sys.is_distinct());
    }

    #[test]
    fn partition_validation() {
        assert!(FormPartition::new(3, vec![vec![0, 2], vec![1]]).is_ok());
        assert!(FormPartition::new(3, vec![vec![0, 2]]).is_err());
        assert!(FormPartition::new(3, vec![vec![0, 2], vec![2, 1]]).is_err());
        assert!(FormPartition::new(3, vec![vec![0, 3], vec![1, 2]]).is_err());
        let a = FormPartition::new(3, vec![vec![2, 0], vec![1]]).unwrap();
        assert_eq!(a, FormPartition::from_labels(&[5, 1, 5]));
        assert_eq!(a.to_string(), "{0,2} {1}");
    }

    #[test]
    fn rendering() {
        let names: Vec<String> = ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect();
        assert_eq!(LinearForm::homogeneous(vec![0, -1, -2]).render(&names), "-x2 - 2x3");
        assert_eq!(LinearForm::new(vec![2, 1, 0], -3).render(&names), "2x1 + x2 - 3");
        assert_eq!(LinearForm::new(vec![0, 0, 0], 0).render(&names), "0");
    }
}
