//! Deterministic sample generation over a mapping's probe region.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mapping;
use crate::hilbert::{BoxSet, Point};

/// Distance kept from open domain boundaries.
pub const OPEN_MARGIN: f64 = 1e-6;

/// Deepest halving level tried when refining toward a boundary.
const MAX_DEPTH: i32 = 1100;

/// Grid size, random count and seed for sampling a mapping's domain.
///
/// The grid mixes a uniform lattice with nodes that approach each face of
/// the sampling box geometrically, `lo + w·2^-k`, with the levels `k` spread
/// evenly down to the floating-point resolution of the face. Random points
/// are uniform in the sampling box and drawn from a ChaCha8 stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SampleSchedule {
    pub grid: usize,
    pub random: usize,
    pub seed: u64,
}

impl Default for SampleSchedule {
    fn default() -> Self {
        Self { grid: 64, random: 64, seed: 20_240_601 }
    }
}

impl SampleSchedule {
    pub fn new(grid: usize, random: usize, seed: u64) -> Self {
        Self { grid, random, seed }
    }

    /// Splits a total budget evenly between grid and random points.
    pub fn with_total(total: usize, seed: u64) -> Self {
        Self { grid: total - total / 2, random: total / 2, seed }
    }

    /// Grid points followed by random points, all inside the domain, with
    /// exact duplicates removed. The grid is a tensor product, so its size
    /// only approximates `grid`; random points make up the difference, giving
    /// `grid + random` candidates in total.
    pub fn generate(&self, mapping: &Mapping) -> Vec<Point> {
        let region = mapping.domain().sampling_box(mapping.probe());
        let mut points = refined_grid(&region, self.grid);
        points.truncate(self.grid + self.random);
        let random = self.grid + self.random - points.len();
        points.extend(random_in_box(&region, random, self.seed));
        let mut seen = HashSet::new();
        points
            .into_iter()
            .filter(|p| mapping.domain().contains(p))
            .filter(|p| seen.insert(p.bits()))
            .collect()
    }
}

/// `w·2^-k` without overflowing the intermediate power.
fn scale_down(mut w: f64, mut k: i32) -> f64 {
    while k > 512 {
        w *= 2f64.powi(-512);
        k -= 512;
    }
    w * 2f64.powi(-k)
}

fn halving_depth(from: f64, toward: f64) -> i32 {
    let w = from - toward;
    let mut depth = 0;
    while depth < MAX_DEPTH && toward + scale_down(w, depth + 1) != toward {
        depth += 1;
    }
    depth
}

/// `k` axis nodes on `[lo, hi]`: half uniform, the rest refined toward the ends.
fn axis_nodes(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    if k == 1 || lo == hi {
        return vec![0.5 * (lo + hi)];
    }
    let uniform = k.div_ceil(2).max(2);
    let mut nodes: Vec<f64> =
        (0..uniform).map(|i| lo + (hi - lo) * i as f64 / (uniform - 1) as f64).collect();
    let refine = k.saturating_sub(uniform);
    let to_lo = refine.div_ceil(2);
    let to_hi = refine / 2;
    for (count, from, toward) in [(to_lo, hi, lo), (to_hi, lo, hi)] {
        let depth = halving_depth(from, toward);
        if count == 0 || depth == 0 {
            continue;
        }
        let w = from - toward;
        for j in 1..=count {
            let level = ((j * depth as usize).div_ceil(count)) as i32;
            nodes.push(toward + scale_down(w, level));
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

/// Tensor grid with about `n` points (`round(n^(1/d))` nodes per axis).
fn refined_grid(region: &BoxSet, n: usize) -> Vec<Point> {
    if n == 0 {
        return Vec::new();
    }
    let dim = region.dim();
    let per_axis = ((n as f64).powf(1.0 / dim as f64).round() as usize).max(1);
    let axes: Vec<Vec<f64>> = region
        .lower()
        .iter()
        .zip(region.upper())
        .map(|(lo, hi)| axis_nodes(*lo, *hi, per_axis))
        .collect();
    tensor(&axes)
}

fn tensor(axes: &[Vec<f64>]) -> Vec<Point> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(Point::raw).collect()
}

/// `n` seeded uniform points of `region`.
pub fn random_in_box(region: &BoxSet, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Point::raw(
                region
                    .lower()
                    .iter()
                    .zip(region.upper())
                    .map(|(lo, hi)| if lo < hi { rng.gen_range(*lo..=*hi) } else { *lo })
                    .collect(),
            )
        })
        .collect()
}

/// `per_axis` evenly spaced nodes per axis, endpoints included.
pub fn uniform_grid(region: &BoxSet, per_axis: usize) -> Vec<Point> {
    let axes: Vec<Vec<f64>> = region
        .lower()
        .iter()
        .zip(region.upper())
        .map(|(lo, hi)| match per_axis {
            0 => Vec::new(),
            1 => vec![0.5 * (lo + hi)],
            k => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
        })
        .collect();
    tensor(&axes)
}

/// Grid of spacing `step` anchored at the lower corner, upper corner included
/// when the width is a multiple of the step.
pub fn grid_with_step(region: &BoxSet, step: f64) -> Vec<Point> {
    assert!(step > 0.0, "grid step must be positive");
    let axes: Vec<Vec<f64>> = region
        .lower()
        .iter()
        .zip(region.upper())
        .map(|(lo, hi)| {
            let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            (0..n).map(|i| lo + i as f64 * step).collect()
        })
        .collect();
    tensor(&axes)
}

/// `n` seeded uniform points of the mapping's sampling region that lie in its domain.
pub fn random_points(mapping: &Mapping, n: usize, seed: u64) -> Vec<Point> {
    let region = mapping.domain().sampling_box(mapping.probe());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n && attempts < 100 * n.max(1) {
        attempts += 1;
        let p = Point::raw(
            region
                .lower()
                .iter()
                .zip(region.upper())
                .map(|(lo, hi)| if lo < hi { rng.gen_range(*lo..=*hi) } else { *lo })
                .collect(),
        );
        if mapping.domain().contains(&p) {
            out.push(p);
        }
    }
    out
}

/// `n` seeded pairs of domain points.
pub fn random_pairs(mapping: &Mapping, n: usize, seed: u64) -> Vec<(Point, Point)> {
    let pts = random_points(mapping, 2 * n, seed);
    pts.chunks_exact(2).map(|c| (c[0].clone(), c[1].clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::CatalogEntry;

    #[test]
    fn axis_nodes_reach_the_floating_point_floor() {
        let nodes = axis_nodes(0.0, 1.0, 64);
        assert_eq!(nodes[0], 0.0);
        assert_eq!(*nodes.last().unwrap(), 1.0);
        // deepest refinement toward 0 is the smallest subnormal
        assert_eq!(nodes[1], f64::from_bits(1));
        assert!(nodes.iter().any(|&v| v > 1.0 - 1e-10 && v < 1.0));
    }

    #[test]
    fn schedule_is_deterministic_and_in_domain() {
        let t = CatalogEntry::Halving.mapping();
        let s = SampleSchedule::default();
        let a = s.generate(&t);
        let b = s.generate(&t);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| t.domain().contains(p)));
        let min = a.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        assert_eq!(min, OPEN_MARGIN);
    }

    #[test]
    fn different_seeds_differ() {
        let t = CatalogEntry::Square.mapping();
        let a = SampleSchedule::new(0, 10, 1).generate(&t);
        let b = SampleSchedule::new(0, 10, 2).generate(&t);
        assert_ne!(a, b);
    }

    #[test]
    fn two_dimensional_grid_size() {
        let t = CatalogEntry::Rotation { theta: 1.0, center: [0.0, 0.0] }.mapping();
        let pts = SampleSchedule::new(64, 0, 0).generate(&t);
        assert_eq!(pts.len(), 64);
    }

    #[test]
    fn total_budget_is_exact() {
        let t = CatalogEntry::Rotation { theta: 1.0, center: [0.0, 0.0] }.mapping();
        assert_eq!(SampleSchedule::with_total(64, 3).generate(&t).len(), 64);
        assert_eq!(SampleSchedule::with_total(512, 3).generate(&t).len(), 512);
    }

    #[test]
    fn step_grid_includes_both_ends() {
        let g = grid_with_step(&BoxSet::interval(-2.0, 2.0).unwrap(), 0.01);
        assert_eq!(g.len(), 401);
        assert!((g[400][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_grid_contains_center_for_odd_counts() {
        let g = uniform_grid(&BoxSet::cube(2, -1.0, 1.0).unwrap(), 21);
        assert!(g.contains(&Point::from([0.0, 0.0])));
    }

    #[test]
    fn random_pairs_count() {
        let t = CatalogEntry::Halving.mapping();
        let pairs = random_pairs(&t, 200, 7);
        assert_eq!(pairs.len(), 200);
        assert!(pairs.iter().all(|(x, y)| x[0] > 0.0 && y[0] > 0.0));
    }
}
