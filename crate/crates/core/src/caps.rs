//! Cap decomposition of the shell and the lattice data of each cap.
//!
//! Centers are a maximal `√(λδ)`-separated subset of the radially normalized
//! shell points, chosen greedily in lexicographic point order. Every shell
//! point joins its nearest center (ties go to the lexicographically smaller
//! center), so the cover is a partition. Each cap is then classified by the
//! rank of the lattice generated by differences of its members.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{gauss_reduce_2d, lattice_basis, primitive_of, IntVec3, Metric, QuadraticForm};
use crate::shell::{normalize_to_surface, ShellPointSet};

/// Assignment radius in units of `√(λδ)`.
pub const ASSIGNMENT_RADIUS_FACTOR: f64 = 2.0;

/// Reduced basis data of a rank-2 cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rank2Data {
    pub u: IntVec3,
    pub v: IntVec3,
    /// `u ∧ v`, oriented so that `w · normal ≥ 0`.
    pub w: IntVec3,
    /// `|w|`, the determinant of the difference lattice.
    pub det: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cap {
    /// Point `x_θ` with `√Q(x_θ) = λ`.
    pub center: Vector3<f64>,
    /// Unit normal `A x_θ / |A x_θ|`.
    pub normal: Vector3<f64>,
    /// `A x_θ` (not normalized).
    pub gradient: Vector3<f64>,
    /// Sorted member points.
    pub members: Vec<IntVec3>,
    pub rank: u8,
    pub rank1_dir: Option<IntVec3>,
    pub rank2: Option<Rank2Data>,
}

impl Cap {
    /// Unclassified cap with the given center and members.
    pub fn new(form: &QuadraticForm, center: Vector3<f64>, mut members: Vec<IntVec3>) -> Self {
        members.sort_unstable();
        members.dedup();
        let gradient = form.apply(&center);
        Cap {
            center,
            normal: gradient.normalize(),
            gradient,
            members,
            rank: 0,
            rank1_dir: None,
            rank2: None,
        }
    }

    pub fn n_points(&self) -> usize {
        self.members.len()
    }

    /// `M_θ = I + δ⁻¹ n nᵀ`, the stretch by `1 + δ⁻¹` along the normal.
    pub fn stretch(&self, delta: f64) -> Matrix3<f64> {
        Matrix3::identity() + self.normal * self.normal.transpose() / delta
    }
}

/// Dyadic index `s` with `2^s ≤ n < 2^{s+1}`.
pub fn dyadic_index(n: usize) -> u32 {
    assert!(n > 0, "dyadic index of zero");
    usize::BITS - 1 - n.leading_zeros()
}

type CellKey = (i64, i64, i64);

fn cell_of(x: &Vector3<f64>, size: f64) -> CellKey {
    (
        (x[0] / size).floor() as i64,
        (x[1] / size).floor() as i64,
        (x[2] / size).floor() as i64,
    )
}

fn lex_cmp(a: &Vector3<f64>, b: &Vector3<f64>) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2]))
}

/// Greedy maximal `radius`-separated subset of the normalized shell points,
/// returned in lexicographic order of the centers.
pub fn select_centers(shell: &ShellPointSet, radius: f64) -> Vec<Vector3<f64>> {
    let mut grid: HashMap<CellKey, Vec<usize>> = HashMap::new();
    let mut centers: Vec<Vector3<f64>> = Vec::new();
    for p in shell.points() {
        let y = normalize_to_surface(shell.form(), shell.lambda(), p);
        let (cx, cy, cz) = cell_of(&y, radius);
        let mut near = false;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        if ids.iter().any(|&i| (centers[i] - y).norm() < radius) {
                            near = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !near {
            grid.entry((cx, cy, cz)).or_default().push(centers.len());
            centers.push(y);
        }
    }
    centers.sort_by(lex_cmp);
    centers
}

/// Index of the nearest center, ties to the smaller index.
pub fn nearest_center_naive(centers: &[Vector3<f64>], x: &Vector3<f64>) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, c) in centers.iter().enumerate() {
        let d = (c - x).norm_squared();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

struct CenterIndex<'a> {
    centers: &'a [Vector3<f64>],
    grid: HashMap<CellKey, Vec<usize>>,
    cell: f64,
}

impl<'a> CenterIndex<'a> {
    fn new(centers: &'a [Vector3<f64>], cell: f64) -> Self {
        let mut grid: HashMap<CellKey, Vec<usize>> = HashMap::new();
        for (i, c) in centers.iter().enumerate() {
            grid.entry(cell_of(c, cell)).or_default().push(i);
        }
        CenterIndex { centers, grid, cell }
    }

    fn nearest(&self, x: &Vector3<f64>) -> Option<usize> {
        let (cx, cy, cz) = cell_of(x, self.cell);
        let mut best: Option<(f64, usize)> = None;
        for dx in -2..=2 {
            for dy in -2..=2 {
                for dz in -2..=2 {
                    let Some(ids) = self.grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &i in ids {
                        let d = (self.centers[i] - x).norm_squared();
                        if best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                            best = Some((d, i));
                        }
                    }
                }
            }
        }
        // a search of two rings is exact for any center within 2·cell
        match best {
            Some((d, i)) if d.sqrt() <= 2.0 * self.cell => Some(i),
            _ => nearest_center_naive(self.centers, x),
        }
    }
}

/// Cap cover of a shell (unclassified caps, ordered by center).
pub fn build_cover(shell: &ShellPointSet) -> Vec<Cap> {
    if shell.is_empty() {
        return Vec::new();
    }
    let radius = (shell.lambda() * shell.delta()).sqrt();
    let centers = select_centers(shell, radius);
    let index = CenterIndex::new(&centers, radius);
    let owner: Vec<usize> = shell
        .points()
        .par_iter()
        .map(|p| index.nearest(&p.to_f64()).expect("nonempty centers"))
        .collect();
    let mut members: Vec<Vec<IntVec3>> = vec![Vec::new(); centers.len()];
    for (p, &c) in shell.points().iter().zip(&owner) {
        members[c].push(*p);
    }
    centers
        .into_iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(c, m)| Cap::new(shell.form(), c, m))
        .collect()
}

/// Fills in the rank and the rank-specific lattice data.
pub fn classify_cap(cap: &Cap, delta: f64) -> Cap {
    let mut out = cap.clone();
    out.rank1_dir = None;
    out.rank2 = None;
    if cap.members.len() <= 1 {
        out.rank = 0;
        return out;
    }
    let base = cap.members[0];
    let diffs: Vec<IntVec3> = cap.members[1..].iter().map(|m| *m - base).collect();
    let basis = lattice_basis(&diffs);
    out.rank = basis.len() as u8;
    match basis.len() {
        1 => out.rank1_dir = Some(primitive_of(&basis[0]).expect("nonzero generator").0),
        2 => {
            let m = cap.stretch(delta);
            let gram = m.transpose() * m;
            let red = gauss_reduce_2d(&basis[0], &basis[1], Metric::Gram(&gram)).expect("independent basis");
            let (u, mut v) = (red.u, red.v);
            let mut w = u.wedge(&v);
            if w.to_f64().dot(&cap.normal) < 0.0 {
                v = -v;
                w = -w;
            }
            out.rank2 = Some(Rank2Data {
                u,
                v,
                w,
                det: (w.norm_sq() as f64).sqrt(),
            });
        }
        _ => {}
    }
    out
}

/// Cover with every cap classified.
pub fn build_classified_cover(shell: &ShellPointSet) -> Vec<Cap> {
    let delta = shell.delta();
    build_cover(shell).par_iter().map(|c| classify_cap(c, delta)).collect()
}

/// Dyadic histograms `𝒩^r_s` and incidence counts `𝒩̃^r_t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapCensus {
    pub lambda: f64,
    pub delta: f64,
    /// `(rank, s) → number of caps`.
    pub bins: BTreeMap<(u8, u32), usize>,
    /// `(r, t) → number of (cap, affine subspace) incidences`, `r ∈ {1, 2}`.
    pub incidence: BTreeMap<(u8, u32), usize>,
    pub total_caps: usize,
    pub total_points: usize,
}

impl CapCensus {
    pub fn count(&self, rank: u8, s: u32) -> usize {
        self.bins.get(&(rank, s)).copied().unwrap_or(0)
    }

    pub fn incidence_count(&self, r: u8, t: u32) -> usize {
        self.incidence.get(&(r, t)).copied().unwrap_or(0)
    }

    pub fn max_s(&self) -> Option<u32> {
        self.bins.keys().map(|&(_, s)| s).max()
    }
}

pub fn census(cover: &[Cap], lambda: f64, delta: f64) -> CapCensus {
    let mut bins = BTreeMap::new();
    for cap in cover.iter().filter(|c| c.n_points() > 0) {
        *bins.entry((cap.rank, dyadic_index(cap.n_points()))).or_insert(0) += 1;
    }
    CapCensus {
        lambda,
        delta,
        bins,
        incidence: incidence_counts(cover),
        total_caps: cover.iter().filter(|c| c.n_points() > 0).count(),
        total_points: cover.iter().map(Cap::n_points).sum(),
    }
}

/// Sizes of the maximal collinear classes (≥ 2 points) among `members`.
pub fn line_classes(members: &[IntVec3]) -> Vec<usize> {
    let mut pairs: HashMap<(IntVec3, IntVec3), usize> = HashMap::new();
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            let d = primitive_of(&(*b - *a)).expect("distinct members").0;
            *pairs.entry((d, a.wedge(&d))).or_insert(0) += 1;
        }
    }
    // a line holding m points accounts for m(m-1)/2 pairs
    let mut sizes: Vec<usize> = pairs
        .into_values()
        .map(|c| ((1.0 + (1.0 + 8.0 * c as f64).sqrt()) / 2.0).round() as usize)
        .collect();
    sizes.sort_unstable();
    sizes
}

/// Sizes of the maximal coplanar classes among `members`, over planes spanned
/// by non-collinear member triples.
pub fn plane_classes(members: &[IntVec3], rank: u8) -> Vec<usize> {
    match rank {
        0 | 1 => Vec::new(),
        2 => vec![members.len()],
        _ => {
            let mut planes: HashMap<(IntVec3, i128), Vec<usize>> = HashMap::new();
            let n = members.len();
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let normal = (members[j] - members[i]).wedge(&(members[k] - members[i]));
                        if normal.is_zero() {
                            continue;
                        }
                        let dir = primitive_of(&normal).expect("nonzero").0;
                        let entry = planes.entry((dir, dir.dot(&members[i]))).or_default();
                        entry.extend([i, j, k]);
                    }
                }
            }
            let mut sizes: Vec<usize> = planes
                .into_values()
                .map(|mut v| {
                    v.sort_unstable();
                    v.dedup();
                    v.len()
                })
                .collect();
            sizes.sort_unstable();
            sizes
        }
    }
}

/// `(r, t) → count` of incidences between caps and affine lines (`r = 1`) or
/// planes (`r = 2`) meeting the cap in `2^t ≤ m < 2^{t+1}` points, `m ≥ 2`.
pub fn incidence_counts(cover: &[Cap]) -> BTreeMap<(u8, u32), usize> {
    let per_cap: Vec<Vec<(u8, u32)>> = cover
        .par_iter()
        .map(|cap| {
            let mut keys = Vec::new();
            if cap.n_points() >= 2 {
                keys.extend(line_classes(&cap.members).into_iter().map(|m| (1u8, dyadic_index(m))));
                keys.extend(
                    plane_classes(&cap.members, cap.rank)
                        .into_iter()
                        .filter(|&m| m >= 2)
                        .map(|m| (2u8, dyadic_index(m))),
                );
            }
            keys
        })
        .collect();
    let mut table = BTreeMap::new();
    for key in per_cap.into_iter().flatten() {
        *table.entry(key).or_insert(0) += 1;
    }
    table
}

/// Distribution of `ρ₁ = |w|N/(λδ)` and `ρ₂ = |(Ax_θ)∧w|N/(λδ)^{3/2}` over
/// rank-2 caps.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Rank2Report {
    pub caps: usize,
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
    pub rho1_max: Option<f64>,
    pub rho2_max: Option<f64>,
}

pub fn rank2_invariant_ratios(cover: &[Cap], lambda: f64, delta: f64) -> Rank2Report {
    let ld = lambda * delta;
    let mut report = Rank2Report::default();
    for cap in cover {
        let Some(r2) = cap.rank2 else { continue };
        let n = cap.n_points() as f64;
        let w = r2.w.to_f64();
        report.rho1.push(r2.det * n / ld);
        report.rho2.push(cap.gradient.cross(&w).norm() * n / ld.powf(1.5));
    }
    report.caps = report.rho1.len();
    let max = |v: &[f64]| v.iter().copied().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    report.rho1_max = max(&report.rho1);
    report.rho2_max = max(&report.rho2);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::QuadraticForm;
    use crate::shell::enumerate_shell;

    fn v(x: i64, y: i64, z: i64) -> IntVec3 {
        IntVec3::new(x, y, z)
    }

    fn cap_of(members: Vec<IntVec3>) -> Cap {
        let q = QuadraticForm::identity();
        let c = members[0].to_f64();
        Cap::new(&q, c, members)
    }

    #[test]
    fn dyadic_bins() {
        assert_eq!(dyadic_index(1), 0);
        assert_eq!(dyadic_index(3), 1);
        assert_eq!(dyadic_index(4), 2);
        assert_eq!(dyadic_index(5), 2);
        assert_eq!(dyadic_index(1024), 10);
    }

    #[test]
    fn sparse_sphere_gives_singleton_caps() {
        let shell = enumerate_shell(&QuadraticForm::identity(), 5.0, 0.05).unwrap();
        let cover = build_classified_cover(&shell);
        assert_eq!(cover.len(), 30);
        assert!(cover.iter().all(|c| c.n_points() == 1 && c.rank == 0));
        let census = census(&cover, 5.0, 0.05);
        assert_eq!(census.bins.len(), 1);
        assert_eq!(census.count(0, 0), 30);
        assert!(census.incidence.is_empty());
    }

    #[test]
    fn empty_shell_gives_empty_cover() {
        let shell = enumerate_shell(&QuadraticForm::identity(), 1.2, 0.01).unwrap();
        assert!(build_cover(&shell).is_empty());
        assert!(incidence_counts(&[]).is_empty());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_cap(&cap_of(vec![v(5, 0, 0)]), 0.1).rank, 0);
        let c = classify_cap(&cap_of(vec![v(4, 3, 0), v(5, 0, 0)]), 0.1);
        assert_eq!(c.rank, 1);
        assert_eq!(c.rank1_dir, Some(v(1, -3, 0)));
        let p = v(2, 3, 7);
        let c = classify_cap(&cap_of(vec![p, p + v(1, 0, 0), p + v(0, 1, 0)]), 0.1);
        assert_eq!(c.rank, 2);
        let r2 = c.rank2.unwrap();
        assert_eq!(r2.w, v(0, 0, 1));
        assert_eq!(r2.det, 1.0);
        let c = classify_cap(&cap_of(vec![p, p + v(1, 0, 0), p + v(0, 1, 0), p + v(0, 0, 1)]), 0.1);
        assert_eq!((c.rank, c.rank2), (3, None));
    }

    #[test]
    fn rank1_direction_is_primitive_for_gapped_progression() {
        let p = v(1, 2, 3);
        let c = classify_cap(&cap_of(vec![p, p + v(2, 4, -2), p + v(4, 8, -4)]), 0.1);
        assert_eq!(c.rank1_dir, Some(v(1, 2, -1)));
    }

    #[test]
    fn census_binning() {
        let mut a = classify_cap(&cap_of(vec![v(0, 0, 0), v(1, 0, 0), v(0, 1, 0)]), 0.1);
        let b = classify_cap(
            &cap_of(vec![v(0, 0, 0), v(1, 0, 0), v(0, 1, 0), v(1, 1, 0), v(2, 0, 0)]),
            0.1,
        );
        a.center = Vector3::new(10.0, 0.0, 0.0);
        let census = census(&[a, b], 8.0, 0.25);
        assert_eq!(census.count(2, 1), 1);
        assert_eq!(census.count(2, 2), 1);
        assert_eq!(census.total_caps, 2);
        assert_eq!(census.total_points, 8);
    }

    #[test]
    fn progression_line_class() {
        let p = v(3, -1, 4);
        let u = v(1, 2, 0);
        let cap = classify_cap(&cap_of(vec![p, p + u, p + 2 * u]), 0.1);
        assert_eq!(line_classes(&cap.members), vec![3]);
        let table = incidence_counts(&[cap]);
        assert_eq!(table.get(&(1, 1)), Some(&1));
        assert_eq!(table.len(), 1);
    }

    /// Brute-force collinearity scan: for every pair, the set of members on
    /// the line through it.
    fn brute_lines(members: &[IntVec3]) -> Vec<usize> {
        let mut lines: Vec<Vec<usize>> = Vec::new();
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let d = members[j] - members[i];
                let on: Vec<usize> = (0..members.len())
                    .filter(|&k| (members[k] - members[i]).wedge(&d).is_zero())
                    .collect();
                if !lines.contains(&on) {
                    lines.push(on);
                }
            }
        }
        let mut sizes: Vec<usize> = lines.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        sizes
    }

    #[test]
    fn grid_cap_classes() {
        let (p, u, w) = (v(5, 5, 5), v(1, 0, 0), v(0, 1, 0));
        let members: Vec<IntVec3> = (0..3).flat_map(|i| (0..3).map(move |j| p + i * u + j * w)).collect();
        let cap = classify_cap(&cap_of(members.clone()), 0.1);
        assert_eq!(cap.rank, 2);
        assert_eq!(plane_classes(&cap.members, cap.rank), vec![9]);
        let lines = line_classes(&cap.members);
        assert_eq!(lines, brute_lines(&cap.members));
        // 3 rows, 3 columns, 2 long diagonals of size 3; the rest are pairs
        assert_eq!(lines.iter().filter(|&&m| m == 3).count(), 8);
        let table = incidence_counts(&[cap]);
        assert_eq!(table.get(&(2, 3)), Some(&1));
        // sizes 2 and 3 share the bin t = 1: 8 triples plus 36 - 24 = 12 pairs
        assert_eq!(table.get(&(1, 1)), Some(&20));
    }

    #[test]
    fn plane_classes_of_rank3_cap() {
        let members = vec![v(0, 0, 0), v(1, 0, 0), v(0, 1, 0), v(1, 1, 0), v(0, 0, 1)];
        let sizes = plane_classes(&members, 3);
        // z = 0 holds four points; every other spanned plane holds three
        assert_eq!(*sizes.last().unwrap(), 4);
        assert!(sizes[..sizes.len() - 1].iter().all(|&m| m == 3));
    }

    #[test]
    fn rank2_ratio_vanishes_for_aligned_normal() {
        let lambda = 20.0;
        let q = QuadraticForm::identity();
        let p = v(0, 0, 20);
        let members: Vec<IntVec3> = (0..3).flat_map(|i| (0..3).map(move |j| p + v(i, j, 0))).collect();
        let cap = classify_cap(&Cap::new(&q, Vector3::new(0.0, 0.0, lambda), members), 0.25);
        assert_eq!(cap.rank2.unwrap().w, v(0, 0, 1));
        let report = rank2_invariant_ratios(&[cap], lambda, 0.25);
        assert_eq!(report.caps, 1);
        assert!(report.rho2_max.unwrap() < 1e-12);
        assert!((report.rho1_max.unwrap() - 9.0 / 5.0).abs() < 1e-12);
        assert_eq!(rank2_invariant_ratios(&[], lambda, 0.25), Rank2Report::default());
    }

    #[test]
    fn cover_matches_naive_assignment_and_invariants() {
        let (lambda, delta) = (64.0, 0.125);
        let shell = enumerate_shell(&QuadraticForm::identity(), lambda, delta).unwrap();
        let radius = (lambda * delta).sqrt();
        let centers = select_centers(&shell, radius);
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                assert!((centers[i] - centers[j]).norm() >= radius);
            }
        }
        let cover = build_classified_cover(&shell);
        let mut naive: Vec<Vec<IntVec3>> = vec![Vec::new(); centers.len()];
        for p in shell.points() {
            naive[nearest_center_naive(&centers, &p.to_f64()).unwrap()].push(*p);
        }
        let naive: Vec<Vec<IntVec3>> = naive.into_iter().filter(|m| !m.is_empty()).collect();
        assert_eq!(cover.len(), naive.len());
        for (cap, members) in cover.iter().zip(&naive) {
            assert_eq!(&cap.members, members);
        }
        let total: usize = cover.iter().map(Cap::n_points).sum();
        assert_eq!(total, shell.len());
        for cap in &cover {
            for m in &cap.members {
                assert!((m.to_f64() - cap.center).norm() <= ASSIGNMENT_RADIUS_FACTOR * radius);
            }
            if let Some(r2) = cap.rank2 {
                for a in &cap.members {
                    assert_eq!(r2.w.dot(&(*a - cap.members[0])), 0);
                }
                assert_eq!(r2.w, r2.u.wedge(&r2.v));
                assert!(r2.w.to_f64().dot(&cap.normal) >= 0.0);
                let m = cap.stretch(delta);
                let (uu, vv) = (m * r2.u.to_f64(), m * r2.v.to_f64());
                assert!(uu.norm() <= vv.norm() * (1.0 + 1e-12));
                assert!(uu.dot(&vv).abs() <= 0.5 * uu.norm_squared() * (1.0 + 1e-12));
            }
            if let Some(d) = cap.rank1_dir {
                assert_eq!(d.content(), 1);
            }
        }
    }
}
