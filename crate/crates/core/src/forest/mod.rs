//! CART random forests: Gini-split training over bootstrap samples,
//! mean-decrease-in-impurity feature importances, cumulative-importance
//! feature selection, and the compacted variant (fewer, depth-capped
//! trees over the selected features).

mod build;
mod io;


pub use build::{recompute_importances, train_forest};

use crate::dataset::ScalerParams;
use crate::error::{Error, Result};

/// Leaf marker in the feature field.
pub const LEAF: u16 = 0xFFFF;

/// One tree node. Internal nodes route `x[feature] <= threshold` to
/// `left`, else `right`; leaves carry the class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub feature: u16,
    pub threshold: f32,
    pub left: u32,
    pub right: u32,
    pub leaf_class: u16,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }

    pub fn leaf(class: u16) -> TreeNode {
        TreeNode {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            leaf_class: class,
        }
    }
}

/// A decision tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.is_leaf() {
                return node.leaf_class as u8;
            }
            i = if x[node.feature as usize] <= node.threshold as f64 {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    /// Depth by traversal; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            let node = &nodes[i];
            if node.is_leaf() {
                0
            } else {
                1 + walk(nodes, node.left as usize).max(walk(nodes, node.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until purity or `min_samples_split`.
    pub max_depth: Option<u32>,
    pub min_samples_split: usize,
    /// Candidate features per split; `None` means round(sqrt(n_features)).
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// The compacted-variant settings: 10 trees, depth cap 10, seed 0.
    pub fn compact() -> Self {
        ForestConfig {
            n_trees: 10,
            max_depth: Some(10),
            ..Default::default()
        }
    }

    pub fn effective_features_per_split(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| ((n_features as f64).sqrt().round() as usize).max(1))
            .clamp(1, n_features)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Width of the rows this forest expects (pre-projection).
    pub n_features: usize,
    pub n_classes: usize,
    /// Original feature indices a compacted forest was trained on,
    /// strictly increasing. Tree nodes always store original indices, so
    /// prediction needs no projection; this records the selection.
    pub feature_subset: Option<Vec<u16>>,
    pub config: ForestConfig,
    pub scaler: ScalerParams,
    pub label_names: Vec<String>,
    /// Raw mean-decrease-in-impurity sums, averaged over trees; present
    /// on forests trained in this process, absent after deserialization
    /// (the wire format carries structure only).
    pub(crate) importance_sums: Option<Vec<f64>>,
}

impl Forest {
    /// Plurality vote over the trees for an already-standardized row;
    /// ties resolve to the lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(self.vote(x)?.0)
    }

    /// `(class, vote share)` for an already-standardized row.
    pub fn vote(&self, x: &[f64]) -> Result<(u8, f32)> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut votes = vec![0u32; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(x) as usize] += 1;
        }
        let mut best = 0usize;
        for (c, &v) in votes.iter().enumerate().skip(1) {
            if v > votes[best] {
                best = c;
            }
        }
        Ok((best as u8, votes[best] as f32 / self.trees.len() as f32))
    }

    /// Scales a raw feature row with the bundled scaler, then votes.
    pub fn infer_raw(&self, x_raw: &[f64]) -> Result<(u8, f32)> {
        let mut row = x_raw.to_vec();
        self.scaler.transform_row(&mut row)?;
        self.vote(&row)
    }

    /// Normalized Gini importances (sum 1). Only available on forests
    /// trained in-process; use [`recompute_importances`] for a forest
    /// loaded from a file.
    pub fn feature_importances(&self) -> Result<Vec<f64>> {
        let sums = self.importance_sums.as_ref().ok_or_else(|| {
            Error::Argument(
                "importances unavailable on a deserialized forest; recompute from the \
                 training data"
                    .into(),
            )
        })?;
        normalize_importances(sums)
    }

    pub fn total_nodes(&self) -> usize {
        self.trees.iter().map(Tree::n_nodes).sum()
    }

    pub fn max_depth_observed(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn serialize(&self) -> Vec<u8> {
        io::serialize(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Forest> {
        io::deserialize(bytes)
    }
}

pub(crate) fn normalize_importances(sums: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = sums.iter().sum();
    if total <= 0.0 {
        return Err(Error::Argument(
            "forest contains no splits; importances are undefined".into(),
        ));
    }
    Ok(sums.iter().map(|&s| s / total).collect())
}

/// Smallest prefix of features, sorted by importance descending (ties
/// toward the lower index), whose cumulative importance reaches the
/// threshold. Returned in ascending index order.
pub fn select_features_cumulative(importances: &[f64], threshold: f64) -> Result<Vec<u16>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Argument(format!(
            "importance threshold must be in (0, 1], got {threshold}"
        )));
    }
    let mut order: Vec<usize> = (0..importances.len()).collect();
    order.sort_by(|&a, &b| {
        importances[b]
            .partial_cmp(&importances[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut selected = Vec::new();
    let mut cumulative = 0.0;
    for &f in &order {
        selected.push(f as u16);
        cumulative += importances[f];
        if cumulative >= threshold {
            break;
        }
    }
    selected.sort_unstable();
    Ok(selected)
}

/// Retrains on the projected columns with the compact configuration
/// (10 trees, depth cap 10, seed 0 unless overridden), recording the
/// selection. Tree feature indices are remapped back to the original
/// space, so the forest still consumes full-width rows.
#[allow(clippy::too_many_arguments)]
pub fn compact_forest(
    xs: &[f64],
    ys: &[u8],
    n_features: usize,
    n_classes: usize,
    selected: &[u16],
    config: &ForestConfig,
    scaler: ScalerParams,
    label_names: Vec<String>,
) -> Result<Forest> {
    if selected.is_empty() {
        return Err(Error::Argument("feature selection is empty".into()));
    }
    if selected.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument(
            "selected features must be strictly increasing".into(),
        ));
    }
    if let Some(&last) = selected.last() {
        if last as usize >= n_features {
            return Err(Error::Argument(format!(
                "selected feature {last} out of range for {n_features} features"
            )));
        }
    }
    let n = ys.len();
    let k = selected.len();
    let mut projected = Vec::with_capacity(n * k);
    for row in xs.chunks_exact(n_features) {
        for &f in selected {
            projected.push(row[f as usize]);
        }
    }
    let mut forest = train_forest(&projected, ys, k, n_classes, config, ScalerParams::identity(k), label_names)?;
    // Remap tree splits to original feature indices.
    for tree in forest.trees.iter_mut() {
        for node in tree.nodes.iter_mut() {
            if !node.is_leaf() {
                node.feature = selected[node.feature as usize];
            }
        }
    }
    // Importance sums live in the projected space; widen them.
    if let Some(sums) = forest.importance_sums.take() {
        let mut wide = vec![0f64; n_features];
        for (j, &f) in selected.iter().enumerate() {
            wide[f as usize] = sums[j];
        }
        forest.importance_sums = Some(wide);
    }
    forest.n_features = n_features;
    forest.feature_subset = Some(selected.to_vec());
    forest.scaler = scaler;
    Ok(forest)
}
