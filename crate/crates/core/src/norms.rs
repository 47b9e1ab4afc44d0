//! Quasimodes, their `L^p` norms, the conjectured bound and its regimes, the
//! proven-region exponent, and the few/many cap split.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use rustdct::{Dct1, DctPlanner};
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::caps::Cap;
use crate::energy::{check_guard, convolution_power};
use crate::error::{Error, Result};
use crate::linalg::IntVec3;
use crate::shell::ShellPointSet;

/// Constant in the few/many threshold `N_θ ≤ C·(λδ² + 1)`.
pub const FEW_MANY_CONSTANT: f64 = 4.0;
/// Relative tolerance for the regime boundary.
pub const REGIME_TOLERANCE: f64 = 1e-12;
/// Largest FFT block side used by the grid evaluator.
pub const MAX_FFT_BLOCK: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    Integer(Vec<i64>),
    Complex(Vec<Complex64>),
}

/// Finitely supported Fourier coefficients `a_n`, sorted by frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    points: Vec<IntVec3>,
    weights: Weights,
}

fn sorted_support<W: Copy + Zero>(entries: Vec<(IntVec3, W)>) -> Result<(Vec<IntVec3>, Vec<W>)> {
    let mut entries: Vec<(IntVec3, W)> = entries.into_iter().filter(|e| !e.1.is_zero()).collect();
    entries.sort_by_key(|e| e.0);
    if entries.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("repeated frequency".into()));
    }
    if entries.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(entries.into_iter().unzip())
}

impl CoefficientVector {
    pub fn from_integer(entries: Vec<(IntVec3, i64)>) -> Result<Self> {
        let (points, w) = sorted_support(entries)?;
        Ok(CoefficientVector {
            points,
            weights: Weights::Integer(w),
        })
    }

    pub fn from_complex(entries: Vec<(IntVec3, Complex64)>) -> Result<Self> {
        let (points, w) = sorted_support(entries)?;
        Ok(CoefficientVector {
            points,
            weights: Weights::Complex(w),
        })
    }

    pub fn points(&self) -> &[IntVec3] {
        &self.points
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn complex_weights(&self) -> Vec<Complex64> {
        match &self.weights {
            Weights::Integer(w) => w.iter().map(|&a| Complex64::new(a as f64, 0.0)).collect(),
            Weights::Complex(w) => w.clone(),
        }
    }

    /// `Σ|a_n|²` when the weights are integers.
    pub fn l2_norm_sq_exact(&self) -> Option<i128> {
        match &self.weights {
            Weights::Integer(w) => Some(w.iter().map(|&a| a as i128 * a as i128).sum()),
            Weights::Complex(_) => None,
        }
    }

    /// `‖f‖₂` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        match &self.weights {
            Weights::Integer(_) => (self.l2_norm_sq_exact().unwrap() as f64).sqrt(),
            Weights::Complex(w) => w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    pub fn max_coordinate(&self) -> i64 {
        self.points.iter().map(IntVec3::max_abs).max().unwrap_or(0)
    }

    /// Real weights with `a_n` unchanged under every sign flip of a coordinate.
    pub fn is_sign_symmetric(&self) -> bool {
        let w = self.complex_weights();
        if w.iter().any(|a| a.im != 0.0) {
            return false;
        }
        let index: HashMap<IntVec3, f64> = self.points.iter().copied().zip(w.iter().map(|a| a.re)).collect();
        self.points.iter().all(|p| {
            (1..8).all(|mask: u8| {
                let q = IntVec3::new(
                    if mask & 1 != 0 { -p[0] } else { p[0] },
                    if mask & 2 != 0 { -p[1] } else { p[1] },
                    if mask & 4 != 0 { -p[2] } else { p[2] },
                );
                index.get(&q) == index.get(p)
            })
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub enum QuasimodeKind<'a> {
    /// Unit weights on the whole shell.
    Point,
    /// Unit weights on one cap.
    Cap(&'a Cap),
}

pub fn make_quasimode(shell: &ShellPointSet, kind: QuasimodeKind<'_>) -> Result<CoefficientVector> {
    let support: Vec<IntVec3> = match kind {
        QuasimodeKind::Point => shell.points().to_vec(),
        QuasimodeKind::Cap(cap) => {
            if let Some(p) = cap.members.iter().find(|p| !shell.contains(p)) {
                return Err(Error::InvalidArgument(format!("cap member {p} is not a shell point")));
            }
            cap.members.clone()
        }
    };
    CoefficientVector::from_integer(support.into_iter().map(|p| (p, 1)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum NormPower {
    Exact(i128),
    Approx(f64),
}

impl NormPower {
    pub fn to_f64(self) -> f64 {
        match self {
            NormPower::Exact(v) => v as f64,
            NormPower::Approx(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvenNorm {
    pub r: u32,
    /// `‖f‖_{2r}^{2r}`
    pub power: NormPower,
    pub norm: f64,
}

/// `‖f‖_{2r}^{2r} = Σ_k |Σ_{n₁+⋯+n_r=k} a_{n₁}⋯a_{n_r}|²`.
pub fn lp_norm_even(f: &CoefficientVector, r: u32) -> Result<EvenNorm> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    check_guard(f.len(), r)?;
    let power = match &f.weights {
        Weights::Integer(w) => {
            let table: Vec<(IntVec3, i128)> = f.points.iter().copied().zip(w.iter().map(|&a| a as i128)).collect();
            NormPower::Exact(convolution_power(&table, r).iter().map(|e| e.1 * e.1).sum())
        }
        Weights::Complex(w) => {
            let table: Vec<(IntVec3, Complex64)> = f.points.iter().copied().zip(w.iter().copied()).collect();
            NormPower::Approx(convolution_power(&table, r).iter().map(|e| e.1.norm_sqr()).sum())
        }
    };
    Ok(EvenNorm {
        r,
        power,
        norm: power.to_f64().powf(1.0 / (2.0 * r as f64)),
    })
}

/// Smallest power of two exceeding `4λ`.
pub fn default_grid_side(lambda: f64) -> usize {
    let mut n = 1usize;
    while n as f64 <= 4.0 * lambda {
        n *= 2;
    }
    n
}

/// Smallest even side exceeding `p·K`; grids this fine integrate `|f|^p`
/// exactly for even `p` and frequencies bounded by `K`.
pub fn exact_grid_side(p: u32, max_coordinate: i64) -> usize {
    let n = p as usize * max_coordinate.max(0) as usize + 1;
    n + n % 2
}

fn check_aliasing(f: &CoefficientVector, n: usize) -> Result<()> {
    let k = f.max_coordinate();
    if n as i64 <= 2 * k {
        return Err(Error::Aliasing { n, max_freq: k });
    }
    Ok(())
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

fn block_side(n: usize) -> usize {
    (1..=n.min(MAX_FFT_BLOCK)).rev().find(|d| n % d == 0).unwrap_or(1)
}

/// Accumulator for `Σ|f|^p`, or `max|f|` when `p = ∞`.
#[derive(Clone, Copy)]
struct PowerSum {
    p: f64,
}

impl PowerSum {
    fn term(&self, v: f64) -> f64 {
        if self.p.is_infinite() {
            v
        } else {
            v.powf(self.p)
        }
    }

    fn combine(&self, a: f64, b: f64) -> f64 {
        if self.p.is_infinite() {
            a.max(b)
        } else {
            a + b
        }
    }

    fn finish(&self, total: f64, points: f64) -> f64 {
        if self.p.is_infinite() {
            total
        } else {
            (total / points).powf(1.0 / self.p)
        }
    }
}

fn fft_axis_rows(data: &mut [Complex64], m: usize, fft: &Arc<dyn Fft<f64>>) {
    data.par_chunks_mut(m * 64).for_each(|rows| {
        let mut scratch = vec![Complex64::zero(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(rows, &mut scratch);
    });
}

/// Transposes the last two axes of each plane and the plane axis in turn,
/// so that repeated row transforms cover all three axes.
fn rotate_axes(data: &[Complex64], m: usize) -> Vec<Complex64> {
    // (i, j, k) -> (k, i, j)
    let mut out = vec![Complex64::zero(); data.len()];
    out.par_chunks_mut(m * m).enumerate().for_each(|(k, plane)| {
        for i in 0..m {
            for j in 0..m {
                plane[i * m + j] = data[(i * m + j) * m + k];
            }
        }
    });
    out
}

/// `(N⁻³ Σ_{x ∈ (Z/N)³} |f(x)|^p)^{1/p}` (the maximum for `p = ∞`).
///
/// The grid is swept as shifted sub-grids of side at most [`MAX_FFT_BLOCK`].
pub fn lp_norm_grid(f: &CoefficientVector, p: f64, n: usize) -> Result<f64> {
    check_exponent(p)?;
    check_aliasing(f, n)?;
    let m = block_side(n);
    let q = n / m;
    let fft = FftPlanner::new().plan_fft_inverse(m);
    let weights = f.complex_weights();
    let acc = PowerSum { p };
    let mut total = 0.0;
    for s1 in 0..q {
        for s2 in 0..q {
            for s3 in 0..q {
                let shift = [s1, s2, s3];
                let mut data = vec![Complex64::zero(); m * m * m];
                for (k, a) in f.points.iter().zip(&weights) {
                    let phase: i128 = (0..3).map(|i| k[i] as i128 * shift[i] as i128).sum();
                    let phase = phase.rem_euclid(n as i128) as f64 / n as f64;
                    let idx: [usize; 3] = std::array::from_fn(|i| k[i].rem_euclid(m as i64) as usize);
                    data[(idx[0] * m + idx[1]) * m + idx[2]] += a * Complex64::from_polar(1.0, 2.0 * PI * phase);
                }
                fft_axis_rows(&mut data, m, &fft);
                let mut data = rotate_axes(&data, m);
                fft_axis_rows(&mut data, m, &fft);
                let mut data = rotate_axes(&data, m);
                fft_axis_rows(&mut data, m, &fft);
                let partial: Vec<f64> = data
                    .par_chunks(m * m)
                    .map(|plane| plane.iter().fold(0.0, |s, z| acc.combine(s, acc.term(z.norm()))))
                    .collect();
                total = partial.into_iter().fold(total, |s, v| acc.combine(s, v));
            }
        }
    }
    Ok(acc.finish(total, (n as f64).powi(3)))
}

/// Grid norm for sign-symmetric real weights, written as a cosine series
/// `Σ_{m ≥ 0} c_m Π cos(2π m_i x_i)` and evaluated on `[0, 1/2]³` with
/// trapezoid weights; `t` must be even.
pub fn lp_norm_cosine(f: &CoefficientVector, p: f64, t: usize) -> Result<f64> {
    check_exponent(p)?;
    check_aliasing(f, t)?;
    if t % 2 != 0 {
        return Err(Error::InvalidArgument("cosine grid side must be even".into()));
    }
    if !f.is_sign_symmetric() {
        return Err(Error::InvalidArgument("weights are not sign symmetric".into()));
    }
    let k = f.max_coordinate() as usize;
    let len = t / 2 + 1;
    let terms: Vec<([usize; 3], f64)> = f
        .points
        .iter()
        .zip(f.complex_weights())
        .filter(|(q, _)| q[0] >= 0 && q[1] >= 0 && q[2] >= 0)
        .map(|(q, a)| {
            let nz = (0..3).filter(|&i| q[i] != 0).count() as i32;
            ([q[0] as usize, q[1] as usize, q[2] as usize], a.re * 2f64.powi(nz))
        })
        .collect();
    let cos_table: Vec<f64> = (0..t).map(|j| (2.0 * PI * j as f64 / t as f64).cos()).collect();
    let dct: Arc<dyn Dct1<f64>> = DctPlanner::new().plan_dct1(len);
    let trap = |j: usize| if j == 0 || j == len - 1 { 1.0 } else { 2.0 };
    let acc = PowerSum { p };
    let partial: Vec<f64> = (0..len)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![0.0; (k + 1) * (k + 1)],
                    vec![0.0; (k + 1) * len],
                    vec![0.0; len],
                    vec![0.0; dct.get_scratch_len()],
                )
            },
            |(plane, rows, buf, scratch), x2| {
                plane.iter_mut().for_each(|v| *v = 0.0);
                for &(m, c) in &terms {
                    plane[m[0] * (k + 1) + m[2]] += c * cos_table[(m[1] * x2) % t];
                }
                for m1 in 0..=k {
                    buf.iter_mut().for_each(|v| *v = 0.0);
                    buf[..=k].copy_from_slice(&plane[m1 * (k + 1)..(m1 + 1) * (k + 1)]);
                    buf[0] *= 2.0;
                    dct.process_dct1_with_scratch(buf, scratch);
                    rows[m1 * len..(m1 + 1) * len].copy_from_slice(buf);
                }
                let mut sum: f64 = 0.0;
                for x3 in 0..len {
                    buf.iter_mut().for_each(|v| *v = 0.0);
                    for m1 in 0..=k {
                        buf[m1] = rows[m1 * len + x3];
                    }
                    buf[0] *= 2.0;
                    dct.process_dct1_with_scratch(buf, scratch);
                    let w23 = trap(x2) * trap(x3);
                    for (x1, v) in buf.iter().enumerate() {
                        let term = acc.term(v.abs());
                        sum = if p.is_infinite() {
                            sum.max(term)
                        } else {
                            sum + w23 * trap(x1) * term
                        };
                    }
                }
                sum
            },
        )
        .collect();
    let total = partial.into_iter().fold(0.0, |s, v| acc.combine(s, v));
    Ok(acc.finish(total, (t as f64).powi(3)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    EvenExact,
    Grid,
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMethod::EvenExact => "even-exact",
            NormMethod::Grid => "grid",
        })
    }
}

/// `‖f‖_p` for even `p`: exact when the tuple guard allows, otherwise by a
/// grid fine enough for exact quadrature.
pub fn lp_norm_auto(f: &CoefficientVector, p: u32) -> Result<(f64, NormMethod)> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidExponent(p as f64));
    }
    let r = p / 2;
    if check_guard(f.len(), r).is_ok() {
        return Ok((lp_norm_even(f, r)?.norm, NormMethod::EvenExact));
    }
    let t = exact_grid_side(p, f.max_coordinate());
    let norm = if f.is_sign_symmetric() {
        lp_norm_cosine(f, p as f64, t)?
    } else {
        lp_norm_grid(f, p as f64, t)?
    };
    Ok((norm, NormMethod::Grid))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConjecturedBound {
    /// `(λδ)^{1/2−1/p}`
    pub first: f64,
    /// `λ^{1−3/p} δ^{1/2}`
    pub second: f64,
    pub total: f64,
}

/// `(λδ)^{1/2−1/p} + λ^{1−3/p}δ^{1/2}`; `p = ∞` is allowed.
pub fn conjectured_bound(lambda: f64, delta: f64, p: f64) -> ConjecturedBound {
    let inv = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let first = (lambda * delta).powf(0.5 - inv);
    let second = lambda.powf(1.0 - 3.0 * inv) * delta.sqrt();
    ConjecturedBound {
        first,
        second,
        total: first + second,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `λ^{1−3/p}δ^{1/2}` dominates (unit weights on the whole shell win).
    PointFocusing,
    /// `(λδ)^{1/2−1/p}` dominates (a single cap wins).
    GeodesicFocusing,
    Boundary,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::PointFocusing => "point-focusing",
            Regime::GeodesicFocusing => "geodesic-focusing",
            Regime::Boundary => "boundary",
        })
    }
}

/// Regime from the two bound terms alone.
pub fn classify_terms(first: f64, second: f64) -> Regime {
    let gap = (second / first).ln();
    if gap.abs() <= REGIME_TOLERANCE {
        Regime::Boundary
    } else if gap > 0.0 {
        Regime::PointFocusing
    } else {
        Regime::GeodesicFocusing
    }
}

/// `ln(second/first) = (1/2 − 2/p) ln λ + (1/p) ln δ`, positive on the
/// point-focusing side of `δ = λ^{2−p/2}`.
pub fn regime_log_gap(lambda: f64, delta: f64, p: f64) -> f64 {
    let inv = if p.is_infinite() { 0.0 } else { 1.0 / p };
    (0.5 - 2.0 * inv) * lambda.ln() + inv * delta.ln()
}

pub fn regime_classify(lambda: f64, delta: f64, p: f64) -> Regime {
    let gap = regime_log_gap(lambda, delta, p);
    let scale = 1.0 + lambda.ln().abs() + delta.ln().abs();
    if gap.abs() <= REGIME_TOLERANCE * scale {
        Regime::Boundary
    } else if gap > 0.0 {
        Regime::PointFocusing
    } else {
        Regime::GeodesicFocusing
    }
}

/// `δ / λ^{2−p/2}`: how far `δ` sits from the boundary curve, as a factor.
pub fn boundary_factor(lambda: f64, delta: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return f64::INFINITY;
    }
    delta / lambda.powf(2.0 - p / 2.0)
}

pub type Rational = Ratio<i128>;

/// Exponent `p` for the region function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Rational(Rational),
    Real(f64),
    Infinity,
}

impl Exponent {
    pub fn to_f64(self) -> f64 {
        match self {
            Exponent::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Exponent::Real(x) => x,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// Parses `"inf"`, `"a/b"`, integers, or decimals.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        if let Some((a, b)) = s.split_once('/') {
            let a: i128 = a.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad exponent `{s}`")))?;
            let b: i128 = b.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad exponent `{s}`")))?;
            if b == 0 {
                return Err(Error::InvalidArgument(format!("bad exponent `{s}`")));
            }
            return Ok(Exponent::Rational(Rational::new(a, b)));
        }
        if let Ok(n) = s.parse::<i128>() {
            return Ok(Exponent::Rational(Rational::from_integer(n)));
        }
        s.parse::<f64>()
            .map(|x| if x.is_infinite() { Exponent::Infinity } else { Exponent::Real(x) })
            .map_err(|_| Error::InvalidArgument(format!("bad exponent `{s}`")))
    }
}

fn q(a: i128, b: i128) -> Rational {
    Rational::new(a, b)
}

/// Breakpoints of the region function, in increasing order.
pub fn region_breakpoints() -> [Rational; 5] {
    [q(4, 1), q(235, 52), q(389, 79), q(5, 1), q(49, 1)]
}

/// Piece `k ∈ 1..=6` of the region function at rational `p`.
pub fn region_piece_exact(piece: u8, p: Rational) -> Rational {
    let n = |x: i128| Rational::from_integer(x);
    match piece {
        1 => n(-1),
        2 => -(n(316) - n(27) * p) / (n(104) * (p - n(2))),
        3 => p / n(2) - n(3),
        4 => -(n(9) * p - n(224)) / (n(444) - n(158) * p),
        5 => q(-1, 2),
        6 => -(n(85) * p - n(358)) / (n(158) * p - n(128)),
        _ => panic!("region piece {piece} out of range"),
    }
}

fn region_piece_f64(piece: u8, p: f64) -> f64 {
    match piece {
        1 => -1.0,
        2 => -(316.0 - 27.0 * p) / (104.0 * (p - 2.0)),
        3 => p / 2.0 - 3.0,
        4 => -(9.0 * p - 224.0) / (444.0 - 158.0 * p),
        5 => -0.5,
        6 if p.is_infinite() => -85.0 / 158.0,
        6 => -(85.0 * p - 358.0) / (158.0 * p - 128.0),
        _ => panic!("region piece {piece} out of range"),
    }
}

/// Piece selection: `[2,4]`, `(4,235/52]`, `(235/52,389/79]`, `(389/79,5)`,
/// `[5,49]`, `(49,∞]`.
fn select_piece<T: PartialOrd>(p: &T, bp: &[T; 5]) -> u8 {
    if *p <= bp[0] {
        1
    } else if *p <= bp[1] {
        2
    } else if *p <= bp[2] {
        3
    } else if *p < bp[3] {
        4
    } else if *p <= bp[4] {
        5
    } else {
        6
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionValue {
    pub exponent: f64,
    /// Exact value for rational `p` (and `p = ∞`).
    #[serde(skip)]
    pub exact: Option<Rational>,
    pub piece: u8,
    /// At a breakpoint: whether the two adjacent pieces agree there.
    pub continuous: Option<bool>,
}

/// Exponent `e(p)` such that the conjecture is proven for `δ > λ^{e(p)}`.
pub fn proven_region_threshold(p: Exponent) -> Result<RegionValue> {
    let bp = region_breakpoints();
    match p {
        Exponent::Infinity => {
            let v = q(-85, 158);
            Ok(RegionValue {
                exponent: v.to_f64().unwrap(),
                exact: Some(v),
                piece: 6,
                continuous: None,
            })
        }
        Exponent::Rational(r) => {
            if r < Rational::from_integer(2) {
                return Err(Error::InvalidExponent(r.to_f64().unwrap_or(f64::NAN)));
            }
            let piece = select_piece(&r, &bp);
            let v = region_piece_exact(piece, r);
            let continuous = bp.iter().position(|b| *b == r).map(|i| {
                let (left, right) = (i as u8 + 1, i as u8 + 2);
                region_piece_exact(left, r) == region_piece_exact(right, r)
            });
            Ok(RegionValue {
                exponent: v.to_f64().unwrap(),
                exact: Some(v),
                piece,
                continuous,
            })
        }
        Exponent::Real(x) => {
            if x.is_nan() || x < 2.0 {
                return Err(Error::InvalidExponent(x));
            }
            let bpf: [f64; 5] = bp.map(|b| b.to_f64().unwrap());
            let piece = select_piece(&x, &bpf);
            let continuous = bpf.iter().position(|b| *b == x).map(|i| {
                let (left, right) = (i as u8 + 1, i as u8 + 2);
                (region_piece_f64(left, x) - region_piece_f64(right, x)).abs() < 1e-12
            });
            Ok(RegionValue {
                exponent: region_piece_f64(piece, x),
                exact: None,
                piece,
                continuous,
            })
        }
    }
}

/// Few/many masks over the shell points (in shell order).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FewManySplit {
    pub threshold: f64,
    pub few: Vec<bool>,
    pub many: Vec<bool>,
}

impl FewManySplit {
    pub fn few_count(&self) -> usize {
        self.few.iter().filter(|&&b| b).count()
    }

    pub fn many_count(&self) -> usize {
        self.many.iter().filter(|&&b| b).count()
    }
}

/// A point is few when its cap holds at most `C·(λδ² + 1)` points.
pub fn split_few_many(shell: &ShellPointSet, cover: &[Cap]) -> Result<FewManySplit> {
    let (lambda, delta) = (shell.lambda(), shell.delta());
    let threshold = FEW_MANY_CONSTANT * (lambda * delta * delta + 1.0);
    let mut few = vec![false; shell.len()];
    let mut seen = vec![false; shell.len()];
    for cap in cover {
        let is_few = cap.n_points() as f64 <= threshold;
        for m in &cap.members {
            let i = shell
                .index_of(m)
                .ok_or_else(|| Error::InvalidArgument(format!("cap member {m} is not a shell point")))?;
            if seen[i] {
                return Err(Error::InvalidArgument(format!("point {m} lies in two caps")));
            }
            seen[i] = true;
            few[i] = is_few;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument("cover does not cover the shell".into()));
    }
    let many = few.iter().map(|f| !f).collect();
    Ok(FewManySplit { threshold, few, many })
}

/// `‖f‖_p / ‖f‖₂` together with the bound it is compared with.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub lambda: f64,
    pub delta: f64,
    pub p: f64,
    pub quasimode: String,
    pub support: usize,
    pub ratio: f64,
    pub bound: f64,
    pub bound_terms: [f64; 2],
    pub regime: Regime,
    pub method: NormMethod,
}

pub fn norm_estimate(
    f: &CoefficientVector,
    lambda: f64,
    delta: f64,
    p: u32,
    label: impl Into<String>,
) -> Result<NormEstimate> {
    let (norm, method) = lp_norm_auto(f, p)?;
    let bound = conjectured_bound(lambda, delta, p as f64);
    Ok(NormEstimate {
        lambda,
        delta,
        p: p as f64,
        quasimode: label.into(),
        support: f.len(),
        ratio: norm / f.l2_norm(),
        bound: bound.total,
        bound_terms: [bound.first, bound.second],
        regime: regime_classify(lambda, delta, p as f64),
        method,
    })
}

/// Point quasimode against the best single-cap quasimode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub point: NormEstimate,
    pub best_cap: Option<NormEstimate>,
    pub best_cap_center: Option<[f64; 3]>,
    pub max_ratio: f64,
    /// Regime suggested by which quasimode wins.
    pub winner: Regime,
    pub regime: Regime,
    pub boundary_factor: f64,
}

/// Even-`p` witnesses over the point quasimode and every cap quasimode.
pub fn witness_report(shell: &ShellPointSet, cover: &[Cap], p: u32) -> Result<WitnessReport> {
    let (lambda, delta) = (shell.lambda(), shell.delta());
    let point = norm_estimate(&make_quasimode(shell, QuasimodeKind::Point)?, lambda, delta, p, "point")?;
    let cap_ratios: Vec<Result<(f64, usize)>> = cover
        .par_iter()
        .enumerate()
        .filter(|(_, c)| c.n_points() >= 2)
        .map(|(i, c)| {
            let f = make_quasimode(shell, QuasimodeKind::Cap(c))?;
            let (norm, _) = lp_norm_auto(&f, p)?;
            Ok((norm / f.l2_norm(), i))
        })
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for r in cap_ratios {
        let (ratio, i) = r?;
        if best.is_none_or(|b| ratio > b.0) {
            best = Some((ratio, i));
        }
    }
    // a one-point cap has ratio exactly 1
    if best.is_none() {
        if let Some(i) = cover.iter().position(|c| c.n_points() == 1) {
            best = Some((1.0, i));
        }
    }
    let best_cap = match best {
        Some((_, i)) => {
            let f = make_quasimode(shell, QuasimodeKind::Cap(&cover[i]))?;
            Some(norm_estimate(&f, lambda, delta, p, format!("cap:{i}"))?)
        }
        None => None,
    };
    let cap_ratio = best_cap.as_ref().map_or(0.0, |c| c.ratio);
    let winner = if point.ratio >= cap_ratio {
        Regime::PointFocusing
    } else {
        Regime::GeodesicFocusing
    };
    Ok(WitnessReport {
        max_ratio: point.ratio.max(cap_ratio),
        regime: point.regime,
        boundary_factor: boundary_factor(lambda, delta, p as f64),
        best_cap_center: best.map(|(_, i)| {
            let c = cover[i].center;
            [c[0], c[1], c[2]]
        }),
        point,
        best_cap,
        winner,
    })
}
