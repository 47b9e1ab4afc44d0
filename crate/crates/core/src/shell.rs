//! Integer points in the thin shell `S = { x : |√Q(x) − λ| < δ }`.
//!
//! Enumeration walks `(x1, x2)` over the bounding box of the outer ellipsoid
//! and solves the two quadratics `Q(x) = (λ ± δ)²` for `x3`, so only the
//! integers inside at most two intervals are tested. For rational forms the
//! test is exact: `(λ ± δ)²` is computed as an exact rational from the binary
//! values of `λ` and `δ` and turned into integer thresholds on `denom·Q(x)`.
//! For real forms the test runs in double precision and rejects points within
//! a relative guard band of `1e-12` around either boundary.

use nalgebra::Vector3;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{IntVec3, QuadraticForm};

/// Relative guard band for shells of non-rational forms.
pub const FLOAT_GUARD: f64 = 1e-12;

/// Sorted, deduplicated integer points of a shell.
#[derive(Clone, Debug)]
pub struct ShellPointSet {
    form: QuadraticForm,
    lambda: f64,
    delta: f64,
    points: Vec<IntVec3>,
}

impl ShellPointSet {
    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn points(&self) -> &[IntVec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &IntVec3) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// Index of a point in the sorted list.
    pub fn index_of(&self, p: &IntVec3) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    /// Largest absolute coordinate over all points.
    pub fn max_coordinate(&self) -> i64 {
        self.points.iter().map(IntVec3::max_abs).max().unwrap_or(0)
    }
}

/// Membership test `|√Q(x) − λ| < δ`.
#[derive(Clone, Debug)]
pub enum Membership {
    /// `lo ≤ denom·Q(x) ≤ hi` over the integers.
    Exact { lo: i128, hi: i128 },
    /// `lo < Q(x) < hi` in floating point, guard band already applied.
    Float { lo: f64, hi: f64 },
}

impl Membership {
    pub fn new(form: &QuadraticForm, lambda: f64, delta: f64) -> Self {
        match form.exact() {
            Some(e) => {
                let d = BigRational::from_integer(BigInt::from(e.denom));
                let l = BigRational::from_float(lambda).expect("finite lambda");
                let w = BigRational::from_float(delta).expect("finite delta");
                let inner = &l - &w;
                let outer = &l + &w;
                let lo_bound = &d * &inner * &inner;
                let hi_bound = &d * &outer * &outer;
                // smallest integer strictly above, largest strictly below
                let lo: BigInt = lo_bound.floor().to_integer() + 1;
                let hi: BigInt = hi_bound.ceil().to_integer() - 1;
                Membership::Exact {
                    lo: lo.to_i128().expect("threshold fits i128"),
                    hi: hi.to_i128().expect("threshold fits i128"),
                }
            }
            None => {
                let inner = (lambda - delta).max(0.0);
                Membership::Float {
                    lo: inner * inner * (1.0 + FLOAT_GUARD),
                    hi: (lambda + delta) * (lambda + delta) * (1.0 - FLOAT_GUARD),
                }
            }
        }
    }

    pub fn contains(&self, form: &QuadraticForm, x: &IntVec3) -> bool {
        match *self {
            Membership::Exact { lo, hi } => {
                let v = form.evaluate_numer(x).expect("exact form");
                lo <= v && v <= hi
            }
            Membership::Float { lo, hi } => {
                let q = form.evaluate(&x.to_f64());
                lo < q && q < hi
            }
        }
    }
}

fn validate(lambda: f64, delta: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidShell(format!("lambda must be positive, got {lambda}")));
    }
    if !(delta.is_finite() && delta > 0.0 && delta < lambda) {
        return Err(Error::InvalidShell(format!("delta must lie in (0, lambda), got {delta}")));
    }
    Ok(())
}

/// Real roots of `a t² + 2 b t + c = target`, if any.
fn roots(a: f64, b: f64, c: f64, target: f64) -> Option<(f64, f64)> {
    let disc = b * b - a * (c - target);
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((-b - s) / a, (-b + s) / a))
}

/// All integer points of the shell, sorted lexicographically.
pub fn enumerate_shell(form: &QuadraticForm, lambda: f64, delta: f64) -> Result<ShellPointSet> {
    validate(lambda, delta)?;
    let membership = Membership::new(form, lambda, delta);
    let outer = lambda + delta;
    let inner = lambda - delta;
    let (outer_sq, inner_sq) = (outer * outer, inner * inner);
    let half = form.bounding_half_widths(outer);
    let r1 = half[0].floor() as i64 + 1;
    let r2 = half[1].floor() as i64 + 1;
    let a = *form.matrix();

    let points: Vec<IntVec3> = (-r1..=r1)
        .into_par_iter()
        .flat_map_iter(|x1| {
            let mut slab = Vec::new();
            for x2 in -r2..=r2 {
                let (f1, f2) = (x1 as f64, x2 as f64);
                let b = a[(0, 2)] * f1 + a[(1, 2)] * f2;
                let c = a[(0, 0)] * f1 * f1 + 2.0 * a[(0, 1)] * f1 * f2 + a[(1, 1)] * f2 * f2;
                let Some((lo, hi)) = roots(a[(2, 2)], b, c, outer_sq) else {
                    continue;
                };
                let slack = |t: f64| 1e-7 * (1.0 + t.abs());
                let first = (lo - slack(lo)).ceil() as i64;
                let last = (hi + slack(hi)).floor() as i64;
                let push_range = |from: i64, to: i64, slab: &mut Vec<IntVec3>| {
                    for x3 in from..=to {
                        let p = IntVec3::new(x1, x2, x3);
                        if membership.contains(form, &p) {
                            slab.push(p);
                        }
                    }
                };
                match roots(a[(2, 2)], b, c, inner_sq) {
                    Some((ilo, ihi)) => {
                        let left_end = ((ilo + slack(ilo)).floor() as i64).min(last);
                        let right_start = ((ihi - slack(ihi)).ceil() as i64).max(first).max(left_end + 1);
                        push_range(first, left_end, &mut slab);
                        push_range(right_start, last, &mut slab);
                    }
                    None => push_range(first, last, &mut slab),
                }
            }
            slab
        })
        .collect();
    debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
    Ok(ShellPointSet {
        form: form.clone(),
        lambda,
        delta,
        points,
    })
}

/// Point count normalized by the shell-volume proxy `λ²δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellCensus {
    pub count: usize,
    pub volume_proxy: f64,
    pub ratio: f64,
}

pub fn shell_census(shell: &ShellPointSet) -> ShellCensus {
    let volume_proxy = shell.lambda * shell.lambda * shell.delta;
    ShellCensus {
        count: shell.len(),
        volume_proxy,
        ratio: shell.len() as f64 / volume_proxy,
    }
}

/// Radial projection of a shell point onto `{√Q = λ}`.
pub fn normalize_to_surface(form: &QuadraticForm, lambda: f64, p: &IntVec3) -> Vector3<f64> {
    let x = p.to_f64();
    x * (lambda / form.evaluate(&x).sqrt())
}

/// Convenience: `δ = λ^e`.
pub fn delta_from_exponent(lambda: f64, exponent: f64) -> f64 {
    lambda.powf(exponent)
}

/// Integer interval of `|x|²` admitted by the square-torus shell.
pub fn square_torus_norm_range(lambda: f64, delta: f64) -> Option<(i128, i128)> {
    let m = Membership::new(&QuadraticForm::identity(), lambda, delta);
    match m {
        Membership::Exact { lo, hi } => Some((lo.max(0), hi)),
        Membership::Float { .. } => None,
    }
}
