//! Additive energy, representation counts and the representation maximum
//! over shell point sets.

use std::collections::BTreeMap;
use std::ops::{AddAssign, Mul};

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{IntVec3, QuadraticForm};
use crate::shell::enumerate_shell;

/// Largest admissible number of ordered `r`-tuples.
pub const TUPLE_GUARD: u128 = 1_000_000_000;

/// Coefficient ring for sumset convolutions.
pub trait Weight: Copy + Zero + AddAssign + Mul<Output = Self> + Send + Sync {}

impl<T: Copy + Zero + AddAssign + Mul<Output = T> + Send + Sync> Weight for T {}

/// Sparse table sorted by key.
pub type SparseTable<W> = Vec<(IntVec3, W)>;

struct Slabs<W> {
    by_first: BTreeMap<i64, Vec<(i64, i64, W)>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

fn slabs<W: Weight>(table: &[(IntVec3, W)]) -> Slabs<W> {
    let mut by_first: BTreeMap<i64, Vec<(i64, i64, W)>> = BTreeMap::new();
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for (k, w) in table {
        by_first.entry(k[0]).or_default().push((k[1], k[2], *w));
        for i in 0..3 {
            lo[i] = lo[i].min(k[i]);
            hi[i] = hi[i].max(k[i]);
        }
    }
    Slabs { by_first, lo, hi }
}

/// `(a ⋆ b)(k) = Σ_{x + y = k} a(x) b(y)`, zero entries dropped, sorted.
pub fn convolve<W: Weight>(a: &[(IntVec3, W)], b: &[(IntVec3, W)]) -> SparseTable<W> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let sa = slabs(a);
    let sb = slabs(b);
    let lo: [i64; 3] = std::array::from_fn(|i| sa.lo[i] + sb.lo[i]);
    let hi: [i64; 3] = std::array::from_fn(|i| sa.hi[i] + sb.hi[i]);
    let n2 = (hi[1] - lo[1] + 1) as usize;
    let n3 = (hi[2] - lo[2] + 1) as usize;
    let chunks: Vec<SparseTable<W>> = (lo[0]..=hi[0])
        .into_par_iter()
        .map_init(
            || vec![W::zero(); n2 * n3],
            |buf, k1| {
                let mut touched = false;
                for (&x1, left) in &sa.by_first {
                    let Some(right) = sb.by_first.get(&(k1 - x1)) else {
                        continue;
                    };
                    touched = true;
                    for &(x2, x3, wa) in left {
                        let base2 = x2 - lo[1];
                        let base3 = x3 - lo[2];
                        for &(y2, y3, wb) in right {
                            let idx = (base2 + y2) as usize * n3 + (base3 + y3) as usize;
                            buf[idx] += wa * wb;
                        }
                    }
                }
                let mut out = Vec::new();
                if touched {
                    for (idx, cell) in buf.iter_mut().enumerate() {
                        if !cell.is_zero() {
                            let k2 = lo[1] + (idx / n3) as i64;
                            let k3 = lo[2] + (idx % n3) as i64;
                            out.push((IntVec3::new(k1, k2, k3), *cell));
                            *cell = W::zero();
                        }
                    }
                }
                out
            },
        )
        .collect();
    chunks.concat()
}

/// `r`-fold self-convolution `a ⋆ ⋯ ⋆ a`.
pub fn convolution_power<W: Weight>(a: &[(IntVec3, W)], r: u32) -> SparseTable<W> {
    assert!(r >= 1, "convolution power needs r ≥ 1");
    let mut sorted: SparseTable<W> = a.to_vec();
    sorted.sort_by_key(|e| e.0);
    let mut acc = sorted.clone();
    for _ in 1..r {
        acc = convolve(&acc, &sorted);
    }
    acc
}

/// Checks `|A|^r ≤ TUPLE_GUARD`.
pub fn check_guard(size: usize, r: u32) -> Result<u128> {
    let tuples = (size as u128).saturating_pow(r);
    if tuples > TUPLE_GUARD {
        return Err(Error::GuardExceeded {
            tuples,
            limit: TUPLE_GUARD,
        });
    }
    Ok(tuples)
}

/// Points of the square-torus shell with `n₁ > |n₂| + |n₃|`.
pub fn upper_shell(lambda: f64, delta: f64) -> Result<Vec<IntVec3>> {
    let shell = enumerate_shell(&QuadraticForm::identity(), lambda, delta)?;
    Ok(shell
        .points()
        .iter()
        .copied()
        .filter(|n| n[0] > n[1].abs() + n[2].abs())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepCountTable {
    pub r: u32,
    pub source_size: usize,
    /// `(k, r_r(k))` sorted by `k`, counts positive.
    pub entries: Vec<(IntVec3, u128)>,
}

impl RepCountTable {
    pub fn get(&self, k: &IntVec3) -> u128 {
        self.entries
            .binary_search_by_key(k, |e| e.0)
            .map_or(0, |i| self.entries[i].1)
    }

    pub fn total(&self) -> u128 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn energy(&self) -> u128 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    /// Largest count with the lexicographically least witness.
    pub fn max_entry(&self) -> Option<(IntVec3, u128)> {
        let mut best: Option<(IntVec3, u128)> = None;
        for &(k, c) in &self.entries {
            if best.is_none_or(|b| c > b.1) {
                best = Some((k, c));
            }
        }
        best
    }
}

fn dedup_sorted(points: &[IntVec3]) -> Vec<IntVec3> {
    let mut v = points.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Ordered `r`-fold representation counts.
pub fn rep_counts(points: &[IntVec3], r: u32) -> Result<RepCountTable> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    let set = dedup_sorted(points);
    check_guard(set.len(), r)?;
    let unit: Vec<(IntVec3, u128)> = set.iter().map(|&p| (p, 1u128)).collect();
    let entries = if set.is_empty() {
        Vec::new()
    } else {
        convolution_power(&unit, r)
    };
    let table = RepCountTable {
        r,
        source_size: set.len(),
        entries,
    };
    debug_assert_eq!(table.total(), (set.len() as u128).pow(r));
    Ok(table)
}

/// `E_r(A) = #{a₁ + ⋯ + a_r = a_{r+1} + ⋯ + a_{2r}}`.
pub fn additive_energy(points: &[IntVec3], r: u32) -> Result<u128> {
    let table = rep_counts(points, r)?;
    let e = table.energy();
    let n = table.source_size as u128;
    if n > 0 {
        assert!(n.pow(r) <= e && e <= n.pow(2 * r - 1), "energy outside universal bounds");
    }
    Ok(e)
}

/// `(k*, Z)` with `Z = max_k r_r(k)`.
pub fn z_max(points: &[IntVec3], r: u32) -> Result<(IntVec3, u128)> {
    rep_counts(points, r)?.max_entry().ok_or(Error::EmptySupport)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub lambda: f64,
    pub delta: f64,
    pub r: u32,
    pub p: u32,
    pub full_shell: bool,
    pub set_size: usize,
    #[serde(rename = "E")]
    pub energy: u128,
    #[serde(rename = "Z")]
    pub z: u128,
    pub k_star: IntVec3,
    /// `[λ^p δ^{p/2}, λ^{2p−3} δ^p]`
    pub energy_bound_terms: [f64; 2],
    pub energy_bound: f64,
    /// `λδ` for `p = 4`, `λ^{p−3} δ^{p/2}` otherwise.
    pub z_bound: f64,
    pub energy_ratio: f64,
    pub z_ratio: f64,
}

pub fn energy_bounds(lambda: f64, delta: f64, r: u32) -> ([f64; 2], f64) {
    let p = 2.0 * r as f64;
    let terms = [
        lambda.powf(p) * delta.powf(p / 2.0),
        lambda.powf(2.0 * p - 3.0) * delta.powf(p),
    ];
    let z = if r == 2 {
        lambda * delta
    } else {
        lambda.powf(p - 3.0) * delta.powf(p / 2.0)
    };
    (terms, z)
}

/// Energy and representation maximum of the upper shell (or the full shell)
/// against the conjectured bounds.
pub fn energy_conjecture_report(lambda: f64, delta: f64, r: u32, full_shell: bool) -> Result<EnergyReport> {
    if r < 2 {
        return Err(Error::InvalidArgument("need r ≥ 2".into()));
    }
    let points = if full_shell {
        enumerate_shell(&QuadraticForm::identity(), lambda, delta)?.points().to_vec()
    } else {
        upper_shell(lambda, delta)?
    };
    let table = rep_counts(&points, r)?;
    let (k_star, z) = table.max_entry().ok_or(Error::EmptySupport)?;
    let energy = table.energy();
    let (terms, z_bound) = energy_bounds(lambda, delta, r);
    let energy_bound = terms[0] + terms[1];
    Ok(EnergyReport {
        lambda,
        delta,
        r,
        p: 2 * r,
        full_shell,
        set_size: table.source_size,
        energy,
        z,
        k_star,
        energy_bound_terms: terms,
        energy_bound,
        z_bound,
        energy_ratio: energy as f64 / energy_bound,
        z_ratio: z as f64 / z_bound,
    })
}
