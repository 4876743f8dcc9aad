//! Deterministic quadrature: adaptive 7/15-point Gauss–Kronrod bisection and
//! composite Gauss–Legendre panel grids.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Tolerances and budget for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

// Kronrod abscissae and weights (QUADPACK qk15); every odd-indexed node is a
// Gauss node.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron = kron + (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let value = kron * half;
    let err = ((kron - gauss) * half).magnitude();
    (value, err)
}

/// Adaptive bisection on the interval with the largest error estimate until
/// the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: QuadValue>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            error: 0.0,
            intervals: 0,
        });
    }
    let (v0, e0) = kronrod15(&f, a, b);
    let mut pieces: Vec<(f64, f64, T, f64)> = vec![(a, b, v0, e0)];
    loop {
        let total: T = pieces.iter().fold(T::zero(), |acc, p| acc + p.2);
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * total.magnitude());
        if err <= target {
            return Ok(QuadResult {
                value: total,
                error: err,
                intervals: pieces.len(),
            });
        }
        if pieces.len() >= cfg.max_intervals {
            return Err(Error::numeric(
                format!("quadrature on [{a}, {b}] exhausted {} intervals", cfg.max_intervals),
                err,
            ));
        }
        // first index with the largest error keeps the refinement order fixed
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = kronrod15(&f, lo, mid);
        let (vr, er) = kronrod15(&f, mid, hi);
        pieces.push((lo, mid, vl, el));
        pieces.push((mid, hi, vr, er));
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
            break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre grid on `[-t_max, t_max]` made of equal panels.
#[derive(Clone, Debug)]
pub struct PanelGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl PanelGrid {
    pub fn symmetric(t_max: f64, panel_width: f64, nodes_per_panel: usize) -> Self {
        let panels = ((2.0 * t_max) / panel_width).round().max(1.0) as usize;
        let width = 2.0 * t_max / panels as f64;
        let (gx, gw) = gauss_legendre(nodes_per_panel);
        let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
        let mut weights = Vec::with_capacity(panels * nodes_per_panel);
        for p in 0..panels {
            let lo = -t_max + p as f64 * width;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(lo + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Self {
            nodes,
            weights,
            panels,
            nodes_per_panel,
        }
    }

    /// Index range of the nodes inside the centred sub-grid holding
    /// `inner_panels` panels.
    pub fn inner_range(&self, inner_panels: usize) -> std::ops::Range<usize> {
        let skip = (self.panels - inner_panels) / 2;
        skip * self.nodes_per_panel..(skip + inner_panels) * self.nodes_per_panel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| x.powi(6) - 2.0 * x, -1.0, 2.0, &QuadConfig::default()).unwrap();
        let exact = (2f64.powi(7) + 1.0) / 7.0 - (4.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        // ∫_{-1}^{1} e^{i 50 x} dx = 2 sin(50)/50
        let r = integrate(|x: f64| Complex64::new(0.0, 50.0 * x).exp(), -1.0, 1.0, &QuadConfig::default())
            .unwrap();
        assert!((r.value.re - 2.0 * 50f64.sin() / 50.0).abs() < 1e-12);
        assert!(r.value.im.abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_numeric_error() {
        let cfg = QuadConfig {
            max_intervals: 3,
            ..Default::default()
        };
        let r = integrate(|x: f64| (1.0 / x.abs().max(1e-300)).sqrt(), -1.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::Numeric { .. })));
    }

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn panel_grid_inner_range() {
        let g = PanelGrid::symmetric(4.0, 1.0, 3);
        assert_eq!(g.panels, 8);
        let r = g.inner_range(4);
        assert!((g.nodes[r.start] + 2.0).abs() < 1.0);
        let s: f64 = g.weights[r].iter().sum();
        assert!((s - 4.0).abs() < 1e-13);
    }
}
