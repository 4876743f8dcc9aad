//! Smooth cutoffs supported on [-1, 1], their Fourier companions and the
//! multi-dimensional sieve factors built from them.
//!
//! A cutoff is `χ(x) = c·g(x)` for a fixed shape `g`. The constant `c` is
//! chosen so that the derivative energy equals one, measured either on the
//! half line `[0, ∞)` (the default, which is the convention under which the
//! two-fold sieve factor equals one) or on the whole line.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{integrate, PanelGrid, QuadConfig};
use crate::singular::ShiftVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    /// `cos(πx/2)`; continuous with a kink at ±1.
    Cosine,
    /// `exp(-1/(1-x²))`; smooth.
    Bump,
}

impl std::str::FromStr for CutoffKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "bump" => Ok(Self::Bump),
            other => Err(Error::domain(format!("unknown cutoff kind `{other}`"))),
        }
    }
}

/// Interval over which `∫χ′² = 1` is imposed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    HalfLine,
    FullLine,
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-line" | "half" => Ok(Self::HalfLine),
            "full-line" | "full" => Ok(Self::FullLine),
            other => Err(Error::domain(format!("unknown normalization `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffSpec {
    pub kind: CutoffKind,
    pub normalization: Normalization,
    pub norm_constant: f64,
}

// below this value of 1 - x² the bump and its derivative underflow to zero
const BUMP_FLOOR: f64 = 1.0 / 700.0;

fn shape(kind: CutoffKind, x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    match kind {
        CutoffKind::Cosine => (PI * x / 2.0).cos(),
        CutoffKind::Bump => {
            let s = 1.0 - x * x;
            if s <= BUMP_FLOOR {
                0.0
            } else {
                (-1.0 / s).exp()
            }
        }
    }
}

fn shape_deriv(kind: CutoffKind, x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    match kind {
        CutoffKind::Cosine => -(PI / 2.0) * (PI * x / 2.0).sin(),
        CutoffKind::Bump => {
            let s = 1.0 - x * x;
            if s <= BUMP_FLOOR {
                0.0
            } else {
                (-1.0 / s).exp() * (-2.0 * x / (s * s))
            }
        }
    }
}

fn shape_half_energy(kind: CutoffKind) -> Result<f64> {
    match kind {
        CutoffKind::Cosine => Ok(PI * PI / 8.0),
        CutoffKind::Bump => {
            let cfg = QuadConfig {
                abs_tol: 1e-15,
                rel_tol: 1e-14,
                ..Default::default()
            };
            Ok(integrate(|x| shape_deriv(kind, x).powi(2), 0.0, 1.0, &cfg)?.value)
        }
    }
}

/// Cutoff of the given shape under the default half-line normalization.
pub fn make_cutoff(kind: CutoffKind) -> Result<CutoffSpec> {
    make_cutoff_with(kind, Normalization::HalfLine)
}

pub fn make_cutoff_with(kind: CutoffKind, normalization: Normalization) -> Result<CutoffSpec> {
    let half = shape_half_energy(kind)?;
    let energy = match normalization {
        Normalization::HalfLine => half,
        Normalization::FullLine => 2.0 * half,
    };
    Ok(CutoffSpec {
        kind,
        normalization,
        norm_constant: energy.sqrt().recip(),
    })
}

impl CutoffSpec {
    pub fn chi(&self, x: f64) -> f64 {
        self.norm_constant * shape(self.kind, x)
    }

    pub fn chi_deriv(&self, x: f64) -> f64 {
        self.norm_constant * shape_deriv(self.kind, x)
    }

    /// `∫_a^b χ′(x)² dx` by adaptive quadrature.
    pub fn derivative_energy(&self, a: f64, b: f64) -> Result<f64> {
        let cfg = QuadConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let lo = a.max(-1.0);
        let hi = b.min(1.0);
        if lo >= hi {
            return Ok(0.0);
        }
        Ok(integrate(|x| self.chi_deriv(x).powi(2), lo, hi, &cfg)?.value)
    }

    /// `|∫_{-∞}^{∞} χ′² − 1|`.
    pub fn full_line_residual(&self) -> Result<f64> {
        Ok((self.derivative_energy(-1.0, 1.0)? - 1.0).abs())
    }

    /// `|∫_0^∞ χ′² − 1|`.
    pub fn half_line_residual(&self) -> Result<f64> {
        Ok((self.derivative_energy(0.0, 1.0)? - 1.0).abs())
    }

    /// Residual of the energy identity under this spec's own normalization.
    pub fn normalization_residual(&self) -> Result<f64> {
        match self.normalization {
            Normalization::HalfLine => self.half_line_residual(),
            Normalization::FullLine => self.full_line_residual(),
        }
    }

    /// Same shape renormalized under another convention.
    pub fn renormalized(&self, normalization: Normalization) -> Result<CutoffSpec> {
        make_cutoff_with(self.kind, normalization)
    }

    /// Closed form of `ψ(t)` where one exists (cosine kind).
    pub fn psi_closed_form(&self, t: f64) -> Option<Complex64> {
        match self.kind {
            CutoffKind::Cosine => {
                let z = Complex64::new(1.0, t);
                Some(z.cosh() * (self.norm_constant / 2.0) / (z * z + PI * PI / 4.0))
            }
            CutoffKind::Bump => None,
        }
    }
}

/// `ψ(t) = (1/2π) ∫ e^x χ(x) e^{ixt} dx` by adaptive quadrature over [-1, 1].
pub fn fourier_psi(spec: &CutoffSpec, t: f64, cfg: &QuadConfig) -> Result<Complex64> {
    let r = integrate(
        |x: f64| Complex64::new(x, x * t).exp() * spec.chi(x),
        -1.0,
        1.0,
        cfg,
    )?;
    Ok(r.value / (2.0 * PI))
}

fn psi_fast(spec: &CutoffSpec, t: f64, cfg: &QuadConfig) -> Result<Complex64> {
    match spec.psi_closed_form(t) {
        Some(v) => Ok(v),
        None => fourier_psi(spec, t, cfg),
    }
}

/// Truncation and grid for the oscillatory sieve-factor integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SieveFactorConfig {
    pub t_max: f64,
    pub panel_width: f64,
    pub nodes_per_panel: usize,
    /// Richardson step assuming an `O(1/T)` tail; appropriate when `ψ` decays
    /// only polynomially.
    pub extrapolate: bool,
    pub imag_tol: f64,
    pub max_tail: f64,
    pub quad: QuadConfig,
}

impl SieveFactorConfig {
    pub fn default_for(kind: CutoffKind, m: usize) -> Self {
        let base = Self {
            t_max: 200.0,
            panel_width: 0.5,
            nodes_per_panel: 8,
            extrapolate: true,
            imag_tol: 1e-8,
            max_tail: 5e-2,
            quad: QuadConfig {
                abs_tol: 1e-12,
                rel_tol: 1e-11,
                ..Default::default()
            },
        };
        match (kind, m >= 3) {
            (CutoffKind::Cosine, false) => base,
            (CutoffKind::Cosine, true) => Self {
                t_max: 60.0,
                panel_width: 1.0,
                nodes_per_panel: 6,
                extrapolate: false,
                ..base
            },
            (CutoffKind::Bump, false) => Self {
                t_max: 50.0,
                extrapolate: false,
                ..base
            },
            (CutoffKind::Bump, true) => Self {
                t_max: 60.0,
                panel_width: 1.0,
                nodes_per_panel: 6,
                extrapolate: false,
                ..base
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SieveFactor {
    pub m: usize,
    pub value: f64,
    /// Raw truncated integral at `t_max` before extrapolation.
    pub truncated: f64,
    pub imag_residual: f64,
    /// Difference between the reported value and the truncated integral at
    /// `t_max / 2`, scaled to the reported correction.
    pub tail_estimate: f64,
    pub t_max: f64,
}

fn integrand_sum(m: usize, z: &[Complex64], a: &[Complex64]) -> Complex64 {
    let n = z.len();
    match m {
        1 => a.iter().sum(),
        2 => {
            let rows: Vec<Complex64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        s += a[j] / (z[i] + z[j]);
                    }
                    a[i] * s
                })
                .collect();
            rows.iter().sum()
        }
        3 => {
            let rows: Vec<Complex64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        let zij = z[i] + z[j];
                        let mut inner = Complex64::new(0.0, 0.0);
                        for k in 0..n {
                            let zijk = zij + z[k];
                            inner += a[k] * zijk / ((z[i] + z[k]) * (z[j] + z[k]));
                        }
                        s += a[j] * inner / zij;
                    }
                    a[i] * s
                })
                .collect();
            rows.iter().sum()
        }
        _ => unreachable!(),
    }
}

/// Sieve factor `c_{χ,m}` for `m ∈ {1, 2, 3}` from a tensor Gauss–Legendre
/// grid over `[-T, T]^m`.
///
/// With `z_j = 1 + i t_j` the integrand is
/// `∏_{∅≠I⊆[m]} (Σ_{j∈I} z_j)^{(-1)^{|I|-1}} ∏ ψ(t_j)`.
pub fn sieve_factor(spec: &CutoffSpec, m: usize, cfg: &SieveFactorConfig) -> Result<SieveFactor> {
    if m == 0 {
        return Err(Error::domain("sieve factor needs m ≥ 1"));
    }
    if m > 3 {
        return Err(Error::Unsupported(format!(
            "sieve factor for m = {m} is outside the supported range m ≤ 3"
        )));
    }
    if cfg.t_max.is_nan() || cfg.t_max <= 0.0 || cfg.panel_width.is_nan() || cfg.panel_width <= 0.0 || cfg.nodes_per_panel == 0 {
        return Err(Error::domain("sieve factor grid needs T > 0, panel width > 0 and at least one node"));
    }
    let raw_panels = (2.0 * cfg.t_max / cfg.panel_width).round().max(4.0) as usize;
    let panels = raw_panels.div_ceil(4) * 4;
    let grid = PanelGrid::symmetric(cfg.t_max, 2.0 * cfg.t_max / panels as f64, cfg.nodes_per_panel);

    let psi: Vec<Complex64> = grid
        .nodes
        .par_iter()
        .map(|&t| psi_fast(spec, t, &cfg.quad))
        .collect::<Result<_>>()?;
    let z: Vec<Complex64> = grid.nodes.iter().map(|&t| Complex64::new(1.0, t)).collect();
    let a: Vec<Complex64> = z
        .iter()
        .zip(&psi)
        .zip(&grid.weights)
        .map(|((z, p), w)| z * p * *w)
        .collect();

    let full = integrand_sum(m, &z, &a);
    let inner = grid.inner_range(panels / 2);
    let half = integrand_sum(m, &z[inner.clone()], &a[inner]);

    let value = if cfg.extrapolate { 2.0 * full.re - half.re } else { full.re };
    let tail_estimate = (full.re - half.re).abs();
    if !value.is_finite() || tail_estimate > cfg.max_tail {
        return Err(Error::numeric(
            format!("sieve factor m = {m}: tail does not settle at T = {}", cfg.t_max),
            tail_estimate,
        ));
    }
    if full.im.abs() > cfg.imag_tol {
        return Err(Error::numeric(
            format!("sieve factor m = {m}: imaginary residual too large"),
            full.im.abs(),
        ));
    }
    Ok(SieveFactor {
        m,
        value,
        truncated: full.re,
        imag_residual: full.im.abs(),
        tail_estimate,
        t_max: cfg.t_max,
    })
}

/// `c_χ(h) = ∏_{distinct v in h} c_{χ, m(v)}` where `m(v)` is the multiplicity.
pub fn sieve_factor_vector(
    spec: &CutoffSpec,
    h: &ShiftVector,
    config_for: impl Fn(usize) -> SieveFactorConfig,
) -> Result<f64> {
    let mults = h.multiplicities();
    if let Some(&(v, m)) = mults.iter().find(|(_, m)| *m > 3) {
        return Err(Error::Unsupported(format!(
            "shift {v} has multiplicity {m}; sieve factors are available for m ≤ 3"
        )));
    }
    let mut factors = [None::<f64>; 4];
    let mut product = 1.0;
    for &(_, m) in &mults {
        let c = match factors[m] {
            Some(c) => c,
            None => {
                let c = sieve_factor(spec, m, &config_for(m))?.value;
                factors[m] = Some(c);
                c
            }
        };
        product *= c;
    }
    Ok(product)
}
