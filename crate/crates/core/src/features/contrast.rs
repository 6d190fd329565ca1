use super::cluster::{l2, FeatureClusterModel};

/// Global rarity of every cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSaliency {
    pub values: Vec<f64>,
    pub smoothed: bool,
}

/// `U(k) = sum_i n_i * ||h_i - h_k||_2` over all clusters: clusters far from the bulk
/// of the image score high.
pub fn contrast_measure(model: &FeatureClusterModel) -> ClusterSaliency {
    let k = model.num_clusters();
    let counts = model.counts();
    let values = (0..k)
        .map(|a| {
            (0..k)
                .map(|i| counts[i] as f64 * l2(model.centroid(i), model.centroid(a)))
                .sum()
        })
        .collect();
    ClusterSaliency {
        values,
        smoothed: false,
    }
}

/// `max(2, round(K / 4))`.
pub fn default_neighbor_count(num_clusters: usize) -> usize {
    ((num_clusters as f64 / 4.0).round() as usize).max(2)
}

/// Replaces each cluster's value by a linearly weighted average over its `m` nearest
/// clusters (itself included). With neighbor distances `d_j` and `T = sum d_j`, the
/// weight of neighbor `j` is `T - d_j`. When all `m` distances are zero the neighbors
/// are averaged uniformly.
pub fn smooth_cluster_saliency(
    model: &FeatureClusterModel,
    saliency: &ClusterSaliency,
    neighbors: usize,
) -> ClusterSaliency {
    let k = model.num_clusters();
    assert_eq!(saliency.values.len(), k);
    let m = neighbors.max(2).min(k);
    if k <= 1 {
        return saliency.clone();
    }

    let mut values = Vec::with_capacity(k);
    let mut near: Vec<(f64, usize)> = Vec::with_capacity(k);
    for a in 0..k {
        near.clear();
        near.extend((0..k).map(|b| (if a == b { 0.0 } else { model.centroid_distance(a, b) }, b)));
        near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let near = &near[..m];
        let total: f64 = near.iter().map(|&(d, _)| d).sum();
        let weight_sum: f64 = near.iter().map(|&(d, _)| total - d).sum();
        let value = if weight_sum > 0.0 {
            near.iter().map(|&(d, b)| (total - d) * saliency.values[b]).sum::<f64>() / weight_sum
        } else {
            near.iter().map(|&(_, b)| saliency.values[b]).sum::<f64>() / m as f64
        };
        values.push(value);
    }
    ClusterSaliency { values, smoothed: true }
}
