//! Forest binary serialization (kind 3).
//!
//! Layout (little-endian): shared header, u16 n_trees; per tree u32
//! n_nodes then nodes as {u16 feature (0xFFFF = leaf), float32 threshold,
//! u32 left, u32 right, u16 leaf_class}; u8 subset flag and, when set,
//! u16 count + u16 ascending original feature indices; then the f64
//! scaler block and the label table.

use crate::error::{Error, Result};
use crate::fmt::{
    read_label_table, read_scaler_f64, write_label_table, write_scaler_f64, Reader, Writer,
    KIND_FOREST,
};
use crate::forest::{Forest, ForestConfig, Tree, TreeNode, LEAF};

pub fn serialize(forest: &Forest) -> Vec<u8> {
    let mut w = Writer::with_header(KIND_FOREST);
    w.u16(forest.trees.len() as u16);
    for tree in &forest.trees {
        w.u32(tree.nodes.len() as u32);
        for node in &tree.nodes {
            w.u16(node.feature);
            w.f32(node.threshold);
            w.u32(node.left);
            w.u32(node.right);
            w.u16(node.leaf_class);
        }
    }
    match &forest.feature_subset {
        Some(subset) => {
            w.u8(1);
            w.u16(subset.len() as u16);
            for &f in subset {
                w.u16(f);
            }
        }
        None => w.u8(0),
    }
    write_scaler_f64(&mut w, &forest.scaler);
    write_label_table(&mut w, &forest.label_names);
    w.finish()
}

pub fn deserialize(bytes: &[u8]) -> Result<Forest> {
    let mut r = Reader::new(bytes);
    r.header_expect(KIND_FOREST)?;
    let n_trees = r.u16()? as usize;
    if n_trees == 0 {
        return Err(Error::format_at(r.pos(), "forest has zero trees"));
    }
    let mut trees = Vec::with_capacity(n_trees);
    let mut max_class = 0u16;
    for t in 0..n_trees {
        let n_nodes = r.u32()? as usize;
        if n_nodes == 0 {
            return Err(Error::format_at(r.pos(), format!("tree {t} has zero nodes")));
        }
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let at = r.pos();
            let feature = r.u16()?;
            let threshold = r.f32()?;
            let left = r.u32()?;
            let right = r.u32()?;
            let leaf_class = r.u16()?;
            if feature != LEAF {
                // Children must point forward and stay in range; that
                // rules out cycles and dangling indices in one check.
                for child in [left, right] {
                    if child as usize >= n_nodes || child as usize == 0 {
                        return Err(Error::format_at(
                            at,
                            format!("tree {t}: dangling child index {child} of {n_nodes} nodes"),
                        ));
                    }
                }
                if left as usize <= nodes.len() || right as usize <= nodes.len() {
                    return Err(Error::format_at(
                        at,
                        format!("tree {t}: child index does not point forward"),
                    ));
                }
            } else {
                max_class = max_class.max(leaf_class);
            }
            nodes.push(TreeNode {
                feature,
                threshold,
                left,
                right,
                leaf_class,
            });
        }
        trees.push(Tree { nodes });
    }
    let feature_subset = if r.u8()? == 1 {
        let count = r.u16()? as usize;
        let mut subset = Vec::with_capacity(count);
        for _ in 0..count {
            subset.push(r.u16()?);
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::format_at(
                r.pos(),
                "feature subset is not strictly increasing",
            ));
        }
        Some(subset)
    } else {
        None
    };
    let scaler = read_scaler_f64(&mut r)?;
    let label_names = read_label_table(&mut r)?;
    r.expect_end()?;

    let n_features = scaler.n_features();
    for (t, tree) in trees.iter().enumerate() {
        for node in &tree.nodes {
            if !node.is_leaf() && node.feature as usize >= n_features {
                return Err(Error::format_at(
                    0,
                    format!("tree {t} splits on feature {} of {n_features}", node.feature),
                ));
            }
        }
    }
    let n_classes = if label_names.is_empty() {
        max_class as usize + 1
    } else {
        label_names.len()
    };
    Ok(Forest {
        trees,
        n_features,
        n_classes,
        feature_subset,
        config: ForestConfig {
            n_trees,
            ..Default::default()
        },
        scaler,
        label_names,
        importance_sums: None,
    })
}
