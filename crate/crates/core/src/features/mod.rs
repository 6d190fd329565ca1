//! Region descriptors, their clustering, and the global rarity of each cluster.

mod cluster;
mod contrast;
mod histogram;

pub use cluster::{cluster_features, ClusterParams, FeatureClusterModel};
pub use contrast::{contrast_measure, default_neighbor_count, smooth_cluster_saliency, ClusterSaliency};
pub use histogram::{
    color_histograms, color_histograms_at, om_histograms, om_histograms_at, FeatureHistogram, HistogramKind,
    HistogramSet, COLOR_BINS_PER_CHANNEL, OM_BINS_PER_COMPONENT,
};
