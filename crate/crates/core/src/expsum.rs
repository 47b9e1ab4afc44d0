//! Sphere Fourier transform, the mollified shell symbol, and the dyadic
//! exponential sums `S^M_{λ,δ}(x)` on the square torus.
//!
//! The cutoff is `ψ(r) = 64 s³(1 − s)³` with `s = (r − 1/2)/(3/2)` for
//! `1/2 ≤ r ≤ 2` and `ψ = 0` elsewhere; it is `C²`, radial, and peaks at
//! `ψ(5/4) = 1`. The mollifier is the Gaussian `χ(y) = e^{−π|y|²}`, so that
//! `χ̂(ξ) = e^{−π|ξ|²}`.
//!
//! Summands are rounded to fixed point (units of `2⁻⁶⁴`) and accumulated as
//! integers, which makes every sum independent of traversal order. The phase
//! uses the pure-Rust `libm` routines so that its bits do not depend on how
//! the platform `sin`/`cos` calls get fused at compile time.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Fixed-point scale for summands.
pub const FIXED_SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

/// `m(ξ) = 2 sin(2π|ξ|)/|ξ|`, equal to `4π` at the origin.
pub fn surface_ft_sphere(xi: [f64; 3]) -> f64 {
    surface_ft_radial(norm(xi))
}

pub fn surface_ft_radial(r: f64) -> f64 {
    if r == 0.0 {
        4.0 * PI
    } else {
        2.0 * (2.0 * PI * r).sin() / r
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn gaussian_hat(r: f64) -> f64 {
    (-PI * r * r).exp()
}

/// Fourier side `λ²δ·m(λ|ξ|)·χ̂(δ|ξ|)`.
pub fn mollified_symbol(lambda: f64, delta: f64, xi: [f64; 3]) -> f64 {
    let r = norm(xi);
    lambda * lambda * delta * surface_ft_radial(lambda * r) * gaussian_hat(delta * r)
}

/// Physical side `χ_{λ,δ}(k)` at `|k| = ρ`, in closed form:
/// `(λ/ρ)[e^{−π(ρ−λ)²/δ²} − e^{−π(ρ+λ)²/δ²}]`.
pub fn mollified_symbol_physical(lambda: f64, delta: f64, rho: f64) -> f64 {
    let d2 = delta * delta;
    if rho == 0.0 {
        return 4.0 * PI * lambda * lambda / d2 * (-PI * lambda * lambda / d2).exp();
    }
    lambda / rho * ((-PI * (rho - lambda).powi(2) / d2).exp() - (-PI * (rho + lambda).powi(2) / d2).exp())
}

/// Physical side by composite Simpson quadrature in `u = cos θ` over the
/// sphere of radius `λ` (`intervals` is rounded up to an even number).
pub fn mollified_symbol_physical_quadrature(lambda: f64, delta: f64, rho: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let d2 = delta * delta;
    let g = |u: f64| (-PI * (rho * rho + lambda * lambda - 2.0 * rho * lambda * u) / d2).exp();
    let h = 2.0 / n as f64;
    let mut s = g(-1.0) + g(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(-1.0 + i as f64 * h);
    }
    2.0 * PI * lambda * lambda / d2 * s * h / 3.0
}

/// The annular cutoff `ψ`.
pub fn psi(r: f64) -> f64 {
    if !(0.5..=2.0).contains(&r) {
        return 0.0;
    }
    let s = (r - 0.5) / 1.5;
    let t = s * (1.0 - s);
    64.0 * t * t * t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DyadicSumSpec {
    pub lambda: f64,
    pub delta: f64,
    pub m: u64,
    pub x: [f64; 3],
}

impl DyadicSumSpec {
    pub fn new(lambda: f64, delta: f64, m: u64, x: [f64; 3]) -> Result<Self> {
        if !m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("M = {m} is not a power of two")));
        }
        if !(delta >= 0.0) || m as f64 * delta > 4.0 {
            return Err(Error::InvalidArgument(format!("need 0 ≤ Mδ ≤ 4, got M = {m}, δ = {delta}")));
        }
        if !(lambda > 0.0) || x.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::InvalidArgument("need λ > 0 and x ∈ [0,1)³".into()));
        }
        Ok(DyadicSumSpec { lambda, delta, m, x })
    }
}

/// Fixed-point summand `λδ ψ(|y|/M)(−2i)e^{2πiλ|y|}/|y|` at `y = n − x`
/// (zero outside the support of `ψ`).
pub fn summand_fixed(lambda: f64, delta: f64, m: f64, y: [f64; 3]) -> (i128, i128) {
    let r = norm(y);
    let w = psi(r / m);
    if w == 0.0 {
        return (0, 0);
    }
    let amp = lambda * delta * w * 2.0 / r;
    let phase = 2.0 * PI * lambda * r;
    let (s, c) = (libm::sin(phase), libm::cos(phase));
    // (−2i)(cos + i sin) = 2 sin − 2i cos
    ((amp * s * FIXED_SCALE).round() as i128, (-amp * c * FIXED_SCALE).round() as i128)
}

pub fn fixed_to_complex(v: (i128, i128)) -> Complex64 {
    Complex64::new(v.0 as f64 / FIXED_SCALE, v.1 as f64 / FIXED_SCALE)
}

/// Exact fixed-point value of `S^M_{λ,δ}(x)`, summed over `n ∈ Z³` with
/// `M/2 ≤ |n − x| ≤ 2M`.
pub fn dyadic_sum_fixed(spec: &DyadicSumSpec) -> (i128, i128) {
    if spec.delta == 0.0 {
        return (0, 0);
    }
    let m = spec.m as f64;
    let outer = 2.0 * m;
    let inner = 0.5 * m;
    let x = spec.x;
    let lo0 = (x[0] - outer).floor() as i64;
    let hi0 = (x[0] + outer).ceil() as i64;
    let slabs: Vec<(i128, i128)> = (lo0..=hi0)
        .into_par_iter()
        .map(|n0| {
            let y0 = n0 as f64 - x[0];
            let rem0 = outer * outer - y0 * y0;
            if rem0 < 0.0 {
                return (0, 0);
            }
            let w1 = rem0.sqrt();
            let mut acc = (0i128, 0i128);
            for n1 in (x[1] - w1).floor() as i64..=(x[1] + w1).ceil() as i64 {
                let y1 = n1 as f64 - x[1];
                let rem1 = rem0 - y1 * y1;
                if rem1 < 0.0 {
                    continue;
                }
                let w2 = rem1.sqrt();
                for n2 in (x[2] - w2).floor() as i64..=(x[2] + w2).ceil() as i64 {
                    let y = [y0, y1, n2 as f64 - x[2]];
                    let r = norm(y);
                    if r < inner || r > outer {
                        continue;
                    }
                    let t = summand_fixed(spec.lambda, spec.delta, m, y);
                    acc.0 += t.0;
                    acc.1 += t.1;
                }
            }
            acc
        })
        .collect();
    slabs.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

pub fn dyadic_sum(spec: &DyadicSumSpec) -> Complex64 {
    fixed_to_complex(dyadic_sum_fixed(spec))
}

/// `2λδ Σ_{annulus} 1/|n − x|`, an upper bound for `|S^M|`.
pub fn dyadic_sum_majorant(spec: &DyadicSumSpec) -> f64 {
    let m = spec.m as f64;
    let reach = (2.0 * m).ceil() as i64 + 1;
    let x = spec.x;
    let mut acc = 0.0;
    for n0 in -reach..=reach + 1 {
        for n1 in -reach..=reach + 1 {
            for n2 in -reach..=reach + 1 {
                let r = norm([n0 as f64 - x[0], n1 as f64 - x[1], n2 as f64 - x[2]]);
                if (0.5 * m..=2.0 * m).contains(&r) {
                    acc += 1.0 / r;
                }
            }
        }
    }
    2.0 * spec.lambda * spec.delta * acc
}

/// Point `i ≥ 1` of the Halton sequence in bases 2, 3, 5.
pub fn halton_point(i: u64) -> [f64; 3] {
    let radical = |mut n: u64, b: u64| {
        let mut f = 1.0;
        let mut r = 0.0;
        while n > 0 {
            f /= b as f64;
            r += f * (n % b) as f64;
            n /= b;
        }
        r
    };
    [radical(i, 2), radical(i, 3), radical(i, 5)]
}

pub fn halton_samples(count: usize) -> Vec<[f64; 3]> {
    (1..=count as u64).map(halton_point).collect()
}

/// Dyadic scales `M = 1, 2, 4, …` with `M ≤ 4/δ`.
pub fn dyadic_scales(delta: f64) -> Vec<u64> {
    if !(delta > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut m = 1u64;
    while m as f64 * delta <= 4.0 {
        out.push(m);
        m *= 2;
    }
    out
}

/// `λδM²`
pub fn trivial_bound(lambda: f64, delta: f64, m: f64) -> f64 {
    lambda * delta * m * m
}

/// `δλ^{103/94}M^{2−30/94}`
pub fn guo_bound(lambda: f64, delta: f64, m: f64) -> f64 {
    delta * lambda.powf(103.0 / 94.0) * m.powf(2.0 - 30.0 / 94.0)
}

/// `M > λ^{2/7}`
pub fn in_guo_window(lambda: f64, m: f64) -> bool {
    m > lambda.powf(2.0 / 7.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpsumRow {
    pub lambda: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub x_index: usize,
    pub abs_s: f64,
    pub ratio_trivial: f64,
    pub ratio_guo: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExpsumReport {
    pub rows: Vec<ExpsumRow>,
    /// `(M, max ratio)` against `λδM²`.
    pub max_trivial: Vec<(u64, f64)>,
    /// `(M, max ratio)` against the Guo-type bound, inside its window.
    pub max_guo: Vec<(u64, f64)>,
}

impl ExpsumReport {
    pub fn overall_max_trivial(&self) -> f64 {
        self.max_trivial.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    pub fn overall_max_guo(&self) -> Option<f64> {
        self.max_guo.iter().map(|e| e.1).reduce(f64::max)
    }
}

/// Ratios of `|S^M(x)|` against both bounds for every dyadic `M ≤ 4/δ` and
/// every sample `x`.
pub fn expsum_bound_report(lambda: f64, delta: f64, samples: &[[f64; 3]]) -> Result<ExpsumReport> {
    let mut report = ExpsumReport::default();
    if delta == 0.0 {
        return Ok(report);
    }
    for m in dyadic_scales(delta) {
        let mf = m as f64;
        let mut max_t: f64 = 0.0;
        let mut max_g: Option<f64> = None;
        for (i, &x) in samples.iter().enumerate() {
            let spec = DyadicSumSpec::new(lambda, delta, m, x)?;
            let abs_s = dyadic_sum(&spec).norm();
            let ratio_trivial = abs_s / trivial_bound(lambda, delta, mf);
            let ratio_guo = in_guo_window(lambda, mf).then(|| abs_s / guo_bound(lambda, delta, mf));
            max_t = max_t.max(ratio_trivial);
            if let Some(g) = ratio_guo {
                max_g = Some(max_g.map_or(g, |v: f64| v.max(g)));
            }
            report.rows.push(ExpsumRow {
                lambda,
                delta,
                m,
                x_index: i,
                abs_s,
                ratio_trivial,
                ratio_guo,
            });
        }
        report.max_trivial.push((m, max_t));
        if let Some(g) = max_g {
            report.max_guo.push((m, g));
        }
    }
    Ok(report)
}
