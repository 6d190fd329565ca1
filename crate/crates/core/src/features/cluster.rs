//! Histogram quantization by a modified kmeans.
//!
//! Points are compared with `||h(p) - h(c)||_2 + (gamma / 100) ||lab(p) - lab(c)||_2`,
//! i.e. the histogram distance augmented by the Lab distance between the anchor color
//! and the cluster's mean color. This is a metric on the product space, so Hamerly's
//! bounds apply unchanged. Identical feature points are merged and carried as weights.
//!
//! After convergence the clusters are ranked by size and only the smallest prefix
//! covering `coverage` of all points survives; the remaining points move to their
//! nearest surviving cluster.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::histogram::HistogramSet;
use crate::error::{PisaError, Result};

/// kmeans++ seeding runs on at most this many distinct points.
const SEEDING_SAMPLE: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub initial_clusters: usize,
    pub coverage: f64,
    /// Weight of the anchor-color term; 0 disables it.
    pub color_weight: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            initial_clusters: 256,
            coverage: 0.95,
            color_weight: 0.5,
            seed: 0,
            max_iterations: 50,
            tolerance: 1e-6,
        }
    }
}

/// Cluster partition of a feature set. Clusters are indexed by decreasing size.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureClusterModel {
    dim: usize,
    color_weight: f64,
    assignment: Vec<u32>,
    centroids: Vec<f64>,
    mean_lab: Option<Vec<[f64; 3]>>,
    counts: Vec<usize>,
    positions: Vec<Vec<(usize, usize)>>,
}

impl FeatureClusterModel {
    /// Assembles a model from an explicit partition; centroids and mean colors are
    /// recomputed as member averages.
    pub fn from_assignment(
        features: &HistogramSet,
        anchor_lab: Option<&[[f64; 3]]>,
        assignment: Vec<u32>,
        color_weight: f64,
    ) -> Self {
        let k = assignment.iter().map(|&a| a as usize + 1).max().unwrap_or(0);
        let dim = features.dim();
        let mut centroids = vec![0.0; k * dim];
        let mut labs = vec![[0.0; 3]; k];
        let mut counts = vec![0usize; k];
        let mut positions = vec![Vec::new(); k];
        for (i, &a) in assignment.iter().enumerate() {
            let a = a as usize;
            counts[a] += 1;
            positions[a].push(features.anchors()[i]);
            for (c, v) in centroids[a * dim..(a + 1) * dim].iter_mut().zip(features.bins(i)) {
                *c += v;
            }
            if let Some(lab) = anchor_lab {
                for c in 0..3 {
                    labs[a][c] += lab[i][c];
                }
            }
        }
        for a in 0..k {
            if counts[a] > 0 {
                let n = counts[a] as f64;
                centroids[a * dim..(a + 1) * dim].iter_mut().for_each(|c| *c /= n);
                labs[a].iter_mut().for_each(|c| *c /= n);
            }
        }
        Self {
            dim,
            color_weight,
            assignment,
            centroids,
            mean_lab: anchor_lab.map(|_| labs),
            counts,
            positions,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn centroid(&self, k: usize) -> &[f64] {
        &self.centroids[k * self.dim..(k + 1) * self.dim]
    }

    pub fn mean_lab(&self, k: usize) -> Option<[f64; 3]> {
        self.mean_lab.as_ref().map(|m| m[k])
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn positions(&self, k: usize) -> &[(usize, usize)] {
        &self.positions[k]
    }

    pub fn num_points(&self) -> usize {
        self.assignment.len()
    }

    /// Clustering metric between two cluster centers.
    pub fn centroid_distance(&self, a: usize, b: usize) -> f64 {
        let hist = l2(self.centroid(a), self.centroid(b));
        match &self.mean_lab {
            Some(labs) if self.color_weight > 0.0 => hist + self.color_weight / 100.0 * l2(&labs[a], &labs[b]),
            _ => hist,
        }
    }

    /// Per-point value of a per-cluster quantity.
    pub fn broadcast(&self, per_cluster: &[f64]) -> Vec<f64> {
        self.assignment.iter().map(|&a| per_cluster[a as usize]).collect()
    }
}

#[inline]
pub(crate) fn l2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        sum += (x - y) * (x - y);
    }
    sum.sqrt()
}

/// Distinct feature points with multiplicities.
struct PointSet {
    dim: usize,
    features: Vec<f64>,
    labs: Vec<[f64; 3]>,
    weights: Vec<f64>,
    // original point -> distinct point
    index: Vec<usize>,
}

impl PointSet {
    fn new(features: &HistogramSet, anchor_lab: Option<&[[f64; 3]]>) -> Self {
        let dim = features.dim();
        let n = features.len();
        let key_len = dim + 3;
        let mut keys = Vec::with_capacity(n * key_len);
        for i in 0..n {
            keys.extend(features.bins(i).iter().map(|v| v.to_bits()));
            let lab = anchor_lab.map_or([0.0; 3], |l| l[i]);
            keys.extend(lab.iter().map(|v| v.to_bits()));
        }

        let mut seen: HashMap<&[u64], usize> = HashMap::with_capacity(n);
        let mut set = PointSet {
            dim,
            features: Vec::new(),
            labs: Vec::new(),
            weights: Vec::new(),
            index: Vec::with_capacity(n),
        };
        for i in 0..n {
            let key = &keys[i * key_len..(i + 1) * key_len];
            let next = set.weights.len();
            let id = *seen.entry(key).or_insert(next);
            if id == next {
                set.features.extend_from_slice(features.bins(i));
                set.labs.push(anchor_lab.map_or([0.0; 3], |l| l[i]));
                set.weights.push(0.0);
            }
            set.weights[id] += 1.0;
            set.index.push(id);
        }
        set
    }

    fn len(&self) -> usize {
        self.weights.len()
    }

    fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

struct Centers {
    dim: usize,
    features: Vec<f64>,
    labs: Vec<[f64; 3]>,
}

impl Centers {
    fn len(&self) -> usize {
        self.labs.len()
    }

    fn feature(&self, k: usize) -> &[f64] {
        &self.features[k * self.dim..(k + 1) * self.dim]
    }
}

struct Metric {
    lab_scale: f64,
}

impl Metric {
    #[inline]
    fn point_center(&self, pts: &PointSet, i: usize, c: &Centers, k: usize) -> f64 {
        let d = l2(pts.feature(i), c.feature(k));
        if self.lab_scale > 0.0 {
            d + self.lab_scale * l2(&pts.labs[i], &c.labs[k])
        } else {
            d
        }
    }

    #[inline]
    fn center_center(&self, a: &Centers, i: usize, b: &Centers, k: usize) -> f64 {
        let d = l2(a.feature(i), b.feature(k));
        if self.lab_scale > 0.0 {
            d + self.lab_scale * l2(&a.labs[i], &b.labs[k])
        } else {
            d
        }
    }
}

fn seed_centers(pts: &PointSet, k: usize, metric: &Metric, rng: &mut ChaCha8Rng) -> Centers {
    let candidates: Vec<usize> = if pts.len() > SEEDING_SAMPLE.max(4 * k) {
        let mut idx = sample(rng, pts.len(), SEEDING_SAMPLE.max(4 * k)).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..pts.len()).collect()
    };
    let weights: Vec<f64> = candidates.iter().map(|&i| pts.weights[i]).collect();

    let mut centers = Centers {
        dim: pts.dim,
        features: Vec::with_capacity(k * pts.dim),
        labs: Vec::with_capacity(k),
    };
    let push = |centers: &mut Centers, i: usize| {
        centers.features.extend_from_slice(pts.feature(i));
        centers.labs.push(pts.labs[i]);
    };

    let first = WeightedIndex::new(&weights).expect("positive weights").sample(rng);
    push(&mut centers, candidates[first]);
    let mut nearest: Vec<f64> = candidates
        .iter()
        .map(|&i| metric.point_center(pts, i, &centers, 0))
        .collect();

    while centers.len() < k {
        let scores: Vec<f64> = nearest.iter().zip(&weights).map(|(d, w)| w * d * d).collect();
        let Ok(dist) = WeightedIndex::new(&scores) else {
            break; // every candidate coincides with a center
        };
        let pick = dist.sample(rng);
        push(&mut centers, candidates[pick]);
        let c = centers.len() - 1;
        for (slot, &i) in nearest.iter_mut().zip(&candidates) {
            let d = metric.point_center(pts, i, &centers, c);
            if d < *slot {
                *slot = d;
            }
        }
    }
    centers
}

/// Center-to-center distances, with every row's other centers in increasing order.
///
/// Rows are ordered by the distance rounded to `f32`, which makes sorting a plain
/// integer sort; `floor` gives a lower bound that is still monotone along a row.
struct Gaps {
    k: usize,
    dist: Vec<f64>,
    order: Vec<u64>,
}

/// Slack covering `f32` rounding of a non-negative distance.
const F32_SLACK: f64 = 1.0 - 1.0 / (1u64 << 23) as f64;

impl Gaps {
    fn new(centers: &Centers, metric: &Metric) -> Self {
        let k = centers.len();
        let mut dist = vec![0.0; k * k];
        for a in 0..k {
            for b in a + 1..k {
                let d = metric.center_center(centers, a, centers, b);
                dist[a * k + b] = d;
                dist[b * k + a] = d;
            }
        }
        let m = k.saturating_sub(1);
        let mut order = Vec::with_capacity(k * m);
        for a in 0..k {
            let start = order.len();
            order.extend((0..k).filter(|&b| b != a).map(|b| {
                let key = (dist[a * k + b] as f32).to_bits() as u64;
                (key << 32) | b as u64
            }));
            order[start..].sort_unstable();
        }
        Self { k, dist, order }
    }

    /// Other centers of row `a` as `(index, lower bound on the distance)`, in
    /// non-decreasing bound order.
    fn neighbors(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let m = self.k - 1;
        self.order[a * m..(a + 1) * m].iter().map(|&e| {
            let d = f32::from_bits((e >> 32) as u32) as f64 * F32_SLACK;
            ((e & 0xffff_ffff) as usize, d)
        })
    }

    /// Half the distance from `a` to its closest other center.
    fn half_nearest(&self, a: usize) -> f64 {
        let row = &self.dist[a * self.k..(a + 1) * self.k];
        let nearest = row
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .fold(f64::INFINITY, |m, (_, &d)| m.min(d));
        0.5 * nearest
    }
}

/// Exact nearest center and a lower bound on the distance to every other center.
/// Candidates are visited in increasing distance from `hint`; once
/// `gap(hint, j) - d(x, hint)` reaches the best distance, no later candidate can win.
fn nearest_center(
    pts: &PointSet,
    i: usize,
    centers: &Centers,
    gaps: &Gaps,
    metric: &Metric,
    hint: usize,
) -> (usize, f64, f64) {
    let d_hint = metric.point_center(pts, i, centers, hint);
    let (mut best, mut best_d, mut second) = (hint, d_hint, f64::INFINITY);
    for (j, gap) in gaps.neighbors(hint) {
        let bound = gap - d_hint;
        if bound >= best_d {
            second = second.min(bound);
            break;
        }
        let d = metric.point_center(pts, i, centers, j);
        if d < best_d {
            second = best_d;
            best = j;
            best_d = d;
        } else if d < second {
            second = d;
        }
    }
    (best, best_d, second)
}

/// Weighted Lloyd iterations with Hamerly's bounds. Returns the distinct-point assignment.
fn lloyd(pts: &PointSet, centers: &mut Centers, metric: &Metric, max_iterations: usize, tolerance: f64) -> Vec<usize> {
    let n = pts.len();
    let k = centers.len();
    let dim = pts.dim;

    let mut gaps = Gaps::new(centers, metric);
    let mut assign = vec![0usize; n];
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut hint = 0;
    for i in 0..n {
        let (a, u, l) = nearest_center(pts, i, centers, &gaps, metric, hint);
        hint = a;
        assign[i] = a;
        upper[i] = u;
        lower[i] = l;
    }

    for _ in 0..max_iterations {
        let mut sums = vec![0.0; k * dim];
        let mut lab_sums = vec![[0.0; 3]; k];
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let a = assign[i];
            let w = pts.weights[i];
            mass[a] += w;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(pts.feature(i)) {
                *s += w * v;
            }
            for c in 0..3 {
                lab_sums[a][c] += w * pts.labs[i][c];
            }
        }
        let previous = Centers {
            dim,
            features: centers.features.clone(),
            labs: centers.labs.clone(),
        };
        for a in 0..k {
            if mass[a] > 0.0 {
                for (c, s) in centers.features[a * dim..(a + 1) * dim]
                    .iter_mut()
                    .zip(&sums[a * dim..(a + 1) * dim])
                {
                    *c = s / mass[a];
                }
                for c in 0..3 {
                    centers.labs[a][c] = lab_sums[a][c] / mass[a];
                }
            }
        }
        let moves: Vec<f64> = (0..k).map(|a| metric.center_center(&previous, a, centers, a)).collect();
        let (mut top, mut top_at, mut runner_up) = (0.0, 0, 0.0);
        for (a, &m) in moves.iter().enumerate() {
            if m > top {
                runner_up = top;
                top = m;
                top_at = a;
            } else if m > runner_up {
                runner_up = m;
            }
        }
        if top < tolerance {
            break;
        }

        gaps = Gaps::new(centers, metric);
        let half_gap: Vec<f64> = (0..k).map(|a| gaps.half_nearest(a)).collect();

        for i in 0..n {
            let a = assign[i];
            upper[i] += moves[a];
            lower[i] -= if a == top_at { runner_up } else { top };
            let bound = half_gap[a].max(lower[i]);
            if upper[i] <= bound {
                continue;
            }
            upper[i] = metric.point_center(pts, i, centers, a);
            if upper[i] <= bound {
                continue;
            }
            let (b, u, l) = nearest_center(pts, i, centers, &gaps, metric, a);
            assign[i] = b;
            upper[i] = u;
            lower[i] = l;
        }
    }
    assign
}

/// Quantizes the feature space. `anchor_lab` enables the color-augmented distance.
pub fn cluster_features(
    features: &HistogramSet,
    anchor_lab: Option<&[[f64; 3]]>,
    params: &ClusterParams,
) -> Result<FeatureClusterModel> {
    if params.initial_clusters == 0 {
        return Err(PisaError::invalid("initial cluster count must be at least 1"));
    }
    if !(params.coverage > 0.0 && params.coverage <= 1.0) {
        return Err(PisaError::invalid(format!(
            "coverage {} outside (0, 1]",
            params.coverage
        )));
    }
    if features.is_empty() {
        return Err(PisaError::invalid("no feature points to cluster"));
    }
    if let Some(lab) = anchor_lab {
        if lab.len() != features.len() {
            return Err(PisaError::invalid("anchor colors do not match feature count"));
        }
    }

    let pts = PointSet::new(features, anchor_lab);
    let metric = Metric {
        lab_scale: if anchor_lab.is_some() {
            params.color_weight / 100.0
        } else {
            0.0
        },
    };
    let k = params.initial_clusters.min(pts.len());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centers = seed_centers(&pts, k, &metric, &mut rng);
    let assign = lloyd(&pts, &mut centers, &metric, params.max_iterations, params.tolerance);

    // Rank clusters by population and keep the prefix reaching the coverage target.
    let k = centers.len();
    let mut mass = vec![0.0; k];
    for (i, &a) in assign.iter().enumerate() {
        mass[a] += pts.weights[i];
    }
    let mut order: Vec<usize> = (0..k).filter(|&a| mass[a] > 0.0).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    let total = features.len() as f64;
    let mut kept = 0;
    let mut covered = 0.0;
    for &a in &order {
        kept += 1;
        covered += mass[a];
        if covered >= params.coverage * total {
            break;
        }
    }
    let survivors = &order[..kept];
    let mut rank = vec![usize::MAX; k];
    for (r, &a) in survivors.iter().enumerate() {
        rank[a] = r;
    }
    let kept_centers = Centers {
        dim: pts.dim,
        features: survivors
            .iter()
            .flat_map(|&a| centers.feature(a).iter().copied())
            .collect(),
        labs: survivors.iter().map(|&a| centers.labs[a]).collect(),
    };

    let distinct_assign: Vec<u32> = (0..pts.len())
        .map(|i| {
            let a = assign[i];
            if rank[a] != usize::MAX {
                return rank[a] as u32;
            }
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for r in 0..kept_centers.len() {
                let d = metric.point_center(&pts, i, &kept_centers, r);
                if d < best_d {
                    best_d = d;
                    best = r;
                }
            }
            best as u32
        })
        .collect();

    let assignment: Vec<u32> = pts.index.iter().map(|&u| distinct_assign[u]).collect();
    let mut model = FeatureClusterModel::from_assignment(features, anchor_lab, assignment, params.color_weight);
    model.sort_by_size();
    Ok(model)
}

impl FeatureClusterModel {
    /// Relabels clusters so that indices follow decreasing size (ties by old index)
    /// and drops empty clusters.
    fn sort_by_size(&mut self) {
        let k = self.counts.len();
        let mut order: Vec<usize> = (0..k).filter(|&a| self.counts[a] > 0).collect();
        order.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        if order.iter().copied().eq(0..k) {
            return;
        }
        let mut rank = vec![0u32; k];
        for (r, &a) in order.iter().enumerate() {
            rank[a] = r as u32;
        }
        let dim = self.dim;
        self.assignment.iter_mut().for_each(|a| *a = rank[*a as usize]);
        self.centroids = order
            .iter()
            .flat_map(|&a| self.centroids[a * dim..(a + 1) * dim].to_vec())
            .collect();
        if let Some(labs) = &mut self.mean_lab {
            *labs = order.iter().map(|&a| labs[a]).collect();
        }
        self.counts = order.iter().map(|&a| self.counts[a]).collect();
        let mut positions = std::mem::take(&mut self.positions);
        self.positions = order.iter().map(|&a| std::mem::take(&mut positions[a])).collect();
    }
}
