//! Forest training: per-tree bootstrap, greedy Gini splits over a random
//! feature subset per node, midpoint thresholds.
//!
//! Every tree draws its bootstrap sample and per-node feature candidates
//! from its own generator seeded with `seed + tree_index`, so trees can be
//! built in parallel with a result independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::ScalerParams;
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestConfig, Tree, TreeNode};

/// Gini impurity of a class-count vector.
fn gini(counts: &[u32], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

/// Majority class; ties resolve to the lowest id.
fn majority(counts: &[u32]) -> u16 {
    let mut best = 0usize;
    for (c, &v) in counts.iter().enumerate().skip(1) {
        if v > counts[best] {
            best = c;
        }
    }
    best as u16
}

struct SplitCandidate {
    feature: usize,
    threshold: f32,
    weighted_gini: f64,
}

struct TreeBuilder<'a> {
    xs: &'a [f64],
    ys: &'a [u8],
    n_features: usize,
    n_classes: usize,
    config: &'a ForestConfig,
    features_per_split: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    /// Raw importance contributions of this tree.
    importance: Vec<f64>,
    /// Bootstrap sample count, the weight base for importances.
    n_total: usize,
}

impl<'a> TreeBuilder<'a> {
    fn row(&self, i: usize) -> &[f64] {
        &self.xs[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Distinct candidate features via partial Fisher-Yates, returned in
    /// ascending order so equal-quality splits break ties the same way on
    /// every platform.
    fn sample_features(&mut self) -> Vec<usize> {
        let k = self.features_per_split;
        let mut pool: Vec<usize> = (0..self.n_features).collect();
        for i in 0..k {
            let j = self.rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut chosen = pool[..k].to_vec();
        chosen.sort_unstable();
        chosen
    }

    fn best_split(&mut self, samples: &[u32], parent_gini: f64) -> Option<SplitCandidate> {
        let n = samples.len();
        let mut total_counts = vec![0u32; self.n_classes];
        for &i in samples {
            total_counts[self.ys[i as usize] as usize] += 1;
        }
        let mut best: Option<SplitCandidate> = None;
        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(n);
        for feature in self.sample_features() {
            sorted.clear();
            sorted.extend(
                samples
                    .iter()
                    .map(|&i| (self.row(i as usize)[feature], self.ys[i as usize])),
            );
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_counts = vec![0u32; self.n_classes];
            for (pos, &(value, class)) in sorted.iter().enumerate().take(n - 1) {
                left_counts[class as usize] += 1;
                let next = sorted[pos + 1].0;
                if value == next {
                    continue;
                }
                let threshold = ((value + next) / 2.0) as f32;
                // All stored values are float32-precision, but adjacent
                // representable values can swallow the midpoint; the
                // snapped threshold must keep the partition it encodes.
                if (threshold as f64) < value || (threshold as f64) >= next {
                    continue;
                }
                let n_left = pos + 1;
                let n_right = n - n_left;
                let g_left = gini(&left_counts, n_left);
                let right_counts: Vec<u32> = total_counts
                    .iter()
                    .zip(&left_counts)
                    .map(|(&t, &l)| t - l)
                    .collect();
                let g_right = gini(&right_counts, n_right);
                let weighted =
                    (n_left as f64 * g_left + n_right as f64 * g_right) / n as f64;
                // A split must strictly decrease impurity; equal-quality
                // candidates keep the first found (ascending feature,
                // ascending threshold).
                let improves_parent = weighted < parent_gini - 1e-12;
                let beats_best = match &best {
                    None => true,
                    Some(b) => weighted < b.weighted_gini - 1e-12,
                };
                if improves_parent && beats_best {
                    best = Some(SplitCandidate {
                        feature,
                        threshold,
                        weighted_gini: weighted,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<u32>) {
        // Explicit stack; recursion depth equals tree depth, which is
        // unbounded without a depth cap.
        self.nodes.push(TreeNode::leaf(0));
        let mut stack: Vec<(usize, Vec<u32>, u32)> = vec![(0, samples, 0)];
        while let Some((node_idx, samples, depth)) = stack.pop() {
            let mut counts = vec![0u32; self.n_classes];
            for &i in &samples {
                counts[self.ys[i as usize] as usize] += 1;
            }
            let n = samples.len();
            let node_gini = gini(&counts, n);
            let depth_allowed = self.config.max_depth.is_none_or(|d| depth < d);
            let mut leaf = true;

            if node_gini > 0.0 && n >= self.config.min_samples_split && depth_allowed {
                if let Some(split) = self.best_split(&samples, node_gini) {
                    let (mut left, mut right) = (Vec::new(), Vec::new());
                    for &i in &samples {
                        if self.row(i as usize)[split.feature] <= split.threshold as f64 {
                            left.push(i);
                        } else {
                            right.push(i);
                        }
                    }
                    debug_assert!(!left.is_empty() && !right.is_empty());
                    self.importance[split.feature] +=
                        n as f64 / self.n_total as f64 * (node_gini - split.weighted_gini);
                    let left_idx = self.nodes.len() as u32;
                    let right_idx = left_idx + 1;
                    self.nodes.push(TreeNode::leaf(0));
                    self.nodes.push(TreeNode::leaf(0));
                    self.nodes[node_idx] = TreeNode {
                        feature: split.feature as u16,
                        threshold: split.threshold,
                        left: left_idx,
                        right: right_idx,
                        leaf_class: 0,
                    };
                    // Left processed first.
                    stack.push((right_idx as usize, right, depth + 1));
                    stack.push((left_idx as usize, left, depth + 1));
                    leaf = false;
                }
            }
            if leaf {
                self.nodes[node_idx] = TreeNode::leaf(majority(&counts));
            }
        }
    }
}

fn build_one_tree(
    xs: &[f64],
    ys: &[u8],
    n_features: usize,
    n_classes: usize,
    config: &ForestConfig,
    tree_index: u64,
) -> (Tree, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(tree_index));
    let n = ys.len();
    let bootstrap: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
    let mut builder = TreeBuilder {
        xs,
        ys,
        n_features,
        n_classes,
        config,
        features_per_split: config.effective_features_per_split(n_features),
        rng,
        nodes: Vec::new(),
        importance: vec![0f64; n_features],
        n_total: n,
    };
    builder.build(bootstrap);
    (
        Tree {
            nodes: builder.nodes,
        },
        builder.importance,
    )
}

/// Trains a forest on an already-standardized row-major matrix.
#[allow(clippy::too_many_arguments)]
pub fn train_forest(
    xs: &[f64],
    ys: &[u8],
    n_features: usize,
    n_classes: usize,
    config: &ForestConfig,
    scaler: ScalerParams,
    label_names: Vec<String>,
) -> Result<Forest> {
    if ys.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != ys.len() * n_features {
        return Err(Error::Dimension {
            expected: ys.len() * n_features,
            got: xs.len(),
        });
    }
    let mut present = vec![false; n_classes];
    for &y in ys {
        if y as usize >= n_classes {
            return Err(Error::Argument(format!(
                "label {y} out of range for {n_classes} classes"
            )));
        }
        present[y as usize] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Argument(
            "forest training needs at least two classes present".into(),
        ));
    }
    if config.n_trees == 0 {
        return Err(Error::Argument("n_trees must be >= 1".into()));
    }

    let built: Vec<(Tree, Vec<f64>)> = (0..config.n_trees as u64)
        .into_par_iter()
        .map(|t| build_one_tree(xs, ys, n_features, n_classes, config, t))
        .collect();

    let mut importance_sums = vec![0f64; n_features];
    let mut trees = Vec::with_capacity(built.len());
    for (tree, imp) in built {
        for (s, v) in importance_sums.iter_mut().zip(&imp) {
            *s += v;
        }
        trees.push(tree);
    }
    for s in importance_sums.iter_mut() {
        *s /= config.n_trees as f64;
    }

    Ok(Forest {
        trees,
        n_features,
        n_classes,
        feature_subset: None,
        config: config.clone(),
        scaler,
        label_names,
        importance_sums: Some(importance_sums),
    })
}

/// Recomputes training-time importances for a forest whose stats were not
/// serialized, by replaying each tree's bootstrap draw (`seed +
/// tree_index`) over the original training data and routing the sample
/// down the stored structure. `xs`/`ys` must be the data the forest was
/// trained on and `seed` its training seed.
pub fn recompute_importances(
    forest: &Forest,
    xs: &[f64],
    ys: &[u8],
    seed: u64,
) -> Result<Vec<f64>> {
    let n = ys.len();
    if xs.len() != n * forest.n_features {
        return Err(Error::Dimension {
            expected: n * forest.n_features,
            got: xs.len(),
        });
    }
    let mut sums = vec![0f64; forest.n_features];
    for (t, tree) in forest.trees.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let bootstrap: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n) as u32).collect();

        // Class counts per node, filled by routing.
        let mut counts = vec![vec![0u32; forest.n_classes]; tree.nodes.len()];
        for &i in &bootstrap {
            let row = &xs[i as usize * forest.n_features..(i as usize + 1) * forest.n_features];
            let mut node = 0usize;
            loop {
                counts[node][ys[i as usize] as usize] += 1;
                let nd = &tree.nodes[node];
                if nd.is_leaf() {
                    break;
                }
                node = if row[nd.feature as usize] <= nd.threshold as f64 {
                    nd.left as usize
                } else {
                    nd.right as usize
                };
            }
        }
        for (idx, nd) in tree.nodes.iter().enumerate() {
            if nd.is_leaf() {
                continue;
            }
            let n_node: u32 = counts[idx].iter().sum();
            let n_l: u32 = counts[nd.left as usize].iter().sum();
            let n_r: u32 = counts[nd.right as usize].iter().sum();
            if n_node == 0 {
                continue;
            }
            let g = gini(&counts[idx], n_node as usize);
            let g_l = gini(&counts[nd.left as usize], n_l as usize);
            let g_r = gini(&counts[nd.right as usize], n_r as usize);
            let weighted = (n_l as f64 * g_l + n_r as f64 * g_r) / n_node as f64;
            sums[nd.feature as usize] += n_node as f64 / n as f64 * (g - weighted);
        }
    }
    for s in sums.iter_mut() {
        *s /= forest.trees.len() as f64;
    }
    crate::forest::normalize_importances(&sums)
}
