//! Brute-force counting oracles, the Fejér majorant, and cap-count bound
//! ratios.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::caps::CapCensus;
use crate::error::{Error, Result};

/// Catalog curves `G` on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Curve {
    /// `√(1 − t²/4)`
    CircleArc,
    /// `t²`
    Parabola,
    /// `1/(1 + t)`
    Hyperbola,
    /// `t`, accepted by the counting oracle only.
    Linear,
}

impl Curve {
    pub const CATALOG: [Curve; 3] = [Curve::CircleArc, Curve::Parabola, Curve::Hyperbola];

    pub fn eval(self, t: f64) -> f64 {
        match self {
            Curve::CircleArc => (1.0 - t * t / 4.0).sqrt(),
            Curve::Parabola => t * t,
            Curve::Hyperbola => 1.0 / (1.0 + t),
            Curve::Linear => t,
        }
    }

    /// `Y·G(x/X)`, arranged so that exact rational values stay exact.
    pub fn scaled(self, x: f64, big_x: f64, big_y: f64) -> f64 {
        match self {
            Curve::CircleArc => big_y * (1.0 - x * x / (4.0 * big_x * big_x)).sqrt(),
            Curve::Parabola => big_y * x * x / (big_x * big_x),
            Curve::Hyperbola => big_y * big_x / (big_x + x),
            Curve::Linear => big_y * x / big_x,
        }
    }

    /// Bounds `(α, β)` on `|G''|` over `[0, 1]`, `None` for the linear curve.
    pub fn curvature_bounds(self) -> Option<(f64, f64)> {
        match self {
            Curve::CircleArc => Some((0.25, 0.25 * 0.75f64.powf(-1.5))),
            Curve::Parabola => Some((2.0, 2.0)),
            Curve::Hyperbola => Some((0.25, 2.0)),
            Curve::Linear => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Curve::CircleArc => "circle",
            Curve::Parabola => "parabola",
            Curve::Hyperbola => "hyperbola",
            Curve::Linear => "linear",
        }
    }
}

impl FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Curve::CircleArc),
            "parabola" => Ok(Curve::Parabola),
            "hyperbola" => Ok(Curve::Hyperbola),
            "linear" => Ok(Curve::Linear),
            other => Err(Error::InvalidArgument(format!("unknown curve `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveSpec {
    pub curve: Curve,
    pub x: f64,
    pub y: f64,
    pub delta: f64,
}

impl CurveSpec {
    pub fn new(curve: Curve, x: f64, y: f64, delta: f64) -> Self {
        CurveSpec { curve, x, y, delta }
    }

    fn x_max(&self) -> i64 {
        self.x.floor() as i64
    }
}

/// `#{(x, y) ∈ Z² : 0 ≤ x ≤ X, |y − Y G(x/X)| ≤ δ}`.
pub fn count_near_curve(spec: &CurveSpec) -> Result<u64> {
    if !(spec.x >= 1.0) || !(spec.delta >= 0.0) {
        return Err(Error::InvalidArgument("need X ≥ 1 and δ ≥ 0".into()));
    }
    Ok((0..=spec.x_max())
        .into_par_iter()
        .map(|x| {
            let c = spec.curve.scaled(x as f64, spec.x, spec.y);
            let lo = (c - spec.delta).ceil();
            let hi = (c + spec.delta).floor();
            if hi >= lo {
                (hi - lo) as u64 + 1
            } else {
                0
            }
        })
        .sum())
}

/// Fejér coefficient `max(0, 1 − |j|/k)`.
pub fn fejer_coefficient(k: u32, j: i64) -> f64 {
    (1.0 - j.unsigned_abs() as f64 / k as f64).max(0.0)
}

/// `F_k(t) = Σ_{|j|≤k} (1 − |j|/k) e^{2πijt} = (1/k)(1 − cos 2πkt)/(1 − cos 2πt)`.
pub fn fejer_kernel(k: u32, t: f64) -> f64 {
    let t = t - t.round();
    let s = (PI * t).sin();
    if s.abs() < 1e-4 {
        let mut acc = 1.0;
        for j in 1..=k {
            acc += 2.0 * fejer_coefficient(k, j as i64) * (2.0 * PI * j as f64 * t).cos();
        }
        return acc;
    }
    let num = (PI * k as f64 * t).sin();
    num * num / (s * s * k as f64)
}

/// Largest admissible Fejér degree `⌊1/(2πδ)⌋`.
pub fn max_admissible_k(delta: f64) -> u32 {
    if delta <= 0.0 {
        0
    } else {
        (1.0 / (2.0 * PI * delta)).floor().min(u32::MAX as f64) as u32
    }
}

/// `(3/k) Σ_{x=0}^{⌊X⌋} F_k(Y G(x/X))`, an upper bound for the near-curve
/// count whenever `1 ≤ k ≤ 1/(2πδ)`.
pub fn fejer_majorant(spec: &CurveSpec, k: u32) -> Result<f64> {
    if spec.delta <= 0.0 || k == 0 || k as f64 > 1.0 / (2.0 * PI * spec.delta) {
        return Err(Error::MajorantInvalid);
    }
    let terms: Vec<f64> = (0..=spec.x_max())
        .into_par_iter()
        .map(|x| fejer_kernel(k, spec.curve.scaled(x as f64, spec.x, spec.y)))
        .collect();
    Ok(3.0 / k as f64 * terms.iter().sum::<f64>())
}

/// `count / (δX + (XY)^{1/3})`.
pub fn van_der_corput_ratio(spec: &CurveSpec) -> Result<f64> {
    let count = count_near_curve(spec)?;
    Ok(count as f64 / (spec.delta * spec.x + (spec.x * spec.y).cbrt()))
}

/// Binary form `q1 x² + 2 q2 xy + q3 y²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinaryForm {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl BinaryForm {
    pub fn new(q1: f64, q2: f64, q3: f64) -> Self {
        BinaryForm { q1, q2, q3 }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.q1 * x * x + 2.0 * self.q2 * x * y + self.q3 * y * y
    }

    pub fn det(&self) -> f64 {
        self.q1 * self.q3 - self.q2 * self.q2
    }

    pub fn is_positive_definite(&self) -> bool {
        self.q1 > 0.0 && self.det() > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusCount {
    pub count: u64,
    /// `ηAB + (AB)^{1/3}`
    pub bound_vdc: f64,
    /// `ηAB + (AB)^{131/416}`
    pub bound_huxley: f64,
    /// `B^{147/253} ≤ A ≤ B^{253/147}`
    pub huxley_window: bool,
}

/// `#{(a, b) ∈ Z² : |q(a/A, b/B) − 1| < η}`.
pub fn count_annulus(q: &BinaryForm, a: f64, b: f64, eta: f64) -> Result<AnnulusCount> {
    if !q.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    if !(a >= 1.0 && b >= 1.0 && eta > 0.0) {
        return Err(Error::InvalidArgument("need A, B ≥ 1 and η > 0".into()));
    }
    let outer = 1.0 + eta;
    let det = q.det();
    let a_max = (a * (outer * q.q3 / det).sqrt()).ceil() as i64 + 1;
    let count = (-a_max..=a_max)
        .into_par_iter()
        .map(|ai| {
            let s = ai as f64 / a;
            // q3 t² + 2 q2 s t + q1 s² − outer < 0
            let disc = q.q2 * q.q2 * s * s - q.q3 * (q.q1 * s * s - outer);
            // rows near the tangent are still scanned over the padded window
            let root = disc.max(0.0).sqrt();
            let lo = ((-q.q2 * s - root) / q.q3 * b).floor() as i64 - 1;
            let hi = ((-q.q2 * s + root) / q.q3 * b).ceil() as i64 + 1;
            (lo..=hi)
                .filter(|&bi| (q.eval(s, bi as f64 / b) - 1.0).abs() < eta)
                .count() as u64
        })
        .sum();
    let ab = a * b;
    Ok(AnnulusCount {
        count,
        bound_vdc: eta * ab + ab.cbrt(),
        bound_huxley: eta * ab + ab.powf(131.0 / 416.0),
        huxley_window: b.powf(147.0 / 253.0) <= a && a <= b.powf(253.0 / 147.0),
    })
}

/// Cap-count bounds, with `ε = 0` and implicit constant 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BoundId {
    /// `𝒩¹_s ≲ (λδ)³2^{−4s} + λ^{1903/832}δ^{1379/832}2^{−1379s/416}`
    N1Huxley,
    /// `𝒩¹_s ≲ (2^{−10s}λ⁷δ⁵)^{1/3}`
    N1Vdc,
    /// `𝒩²_s ≲ (2^{−s}λδ)³`
    N2Gm,
    /// `𝒩²_s ≲ (2^{−s}λδ)² + δ(2^{−s}λδ)⁴`
    N2Improved,
    /// `𝒩²_s ≲ (λδ)³2^{−5s/2} + λ^{1903/832}δ^{1379/832}2^{−1795s/832}`
    N2Incidence,
}

impl BoundId {
    pub const ALL: [BoundId; 5] = [
        BoundId::N1Huxley,
        BoundId::N1Vdc,
        BoundId::N2Gm,
        BoundId::N2Improved,
        BoundId::N2Incidence,
    ];

    pub fn rank(self) -> u8 {
        match self {
            BoundId::N1Huxley | BoundId::N1Vdc => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::N1Huxley => "N1_HUXLEY",
            BoundId::N1Vdc => "N1_VDC",
            BoundId::N2Gm => "N2_GM",
            BoundId::N2Improved => "N2_IMPROVED",
            BoundId::N2Incidence => "N2_INCIDENCE",
        }
    }

    pub fn evaluate(self, lambda: f64, delta: f64, s: u32) -> f64 {
        let ld = lambda * delta;
        let two_s = 2f64.powi(s as i32);
        let sf = s as f64;
        let huxley_scale = lambda.powf(1903.0 / 832.0) * delta.powf(1379.0 / 832.0);
        match self {
            BoundId::N1Huxley => ld.powi(3) / two_s.powi(4) + huxley_scale * 2f64.powf(-1379.0 * sf / 416.0),
            BoundId::N1Vdc => (lambda.powi(7) * delta.powi(5) / two_s.powi(10)).cbrt(),
            BoundId::N2Gm => (ld / two_s).powi(3),
            BoundId::N2Improved => (ld / two_s).powi(2) + delta * (ld / two_s).powi(4),
            BoundId::N2Incidence => ld.powi(3) * 2f64.powf(-2.5 * sf) + huxley_scale * 2f64.powf(-1795.0 * sf / 832.0),
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::UnknownBoundId(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundRatioRow {
    pub s: u32,
    pub observed: u64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRatioReport {
    pub bound_id: BoundId,
    pub lambda: f64,
    pub delta: f64,
    pub rows: Vec<BoundRatioRow>,
    pub max_ratio: f64,
}

/// Smallest dyadic index with `2^{s+1} > max(1, λδ²)`.
pub fn min_dyadic_index(lambda: f64, delta: f64) -> u32 {
    let floor = (lambda * delta * delta).max(1.0);
    let mut s = 0;
    while 2f64.powi(s as i32 + 1) <= floor {
        s += 1;
    }
    s
}

/// Observed/bound ratios for every dyadic bin from [`min_dyadic_index`] up to
/// the largest populated bin of the census.
pub fn bound_ratio_report(census: &CapCensus, bound_id: BoundId) -> BoundRatioReport {
    let (lambda, delta) = (census.lambda, census.delta);
    let rank = bound_id.rank();
    let rows: Vec<BoundRatioRow> = match census.max_s() {
        None => Vec::new(),
        Some(s_max) => (min_dyadic_index(lambda, delta)..=s_max)
            .map(|s| {
                let observed = census.count(rank, s) as u64;
                let bound = bound_id.evaluate(lambda, delta, s);
                BoundRatioRow {
                    s,
                    observed,
                    bound,
                    ratio: observed as f64 / bound,
                }
            })
            .collect(),
    };
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    BoundRatioReport {
        bound_id,
        lambda,
        delta,
        rows,
        max_ratio,
    }
}
