//! Stratified sampling, train/test splitting, and fold planning.
//!
//! All three operate on label slices and return index lists, so they are
//! reusable wherever class proportions must be preserved (the validation
//! carve-out during network training uses the same split routine).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Indices grouped by class id, classes in id order, indices ascending.
fn indices_by_class(labels: &[u8], n_classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        groups[y as usize].push(i);
    }
    groups
}

/// One seeded shuffle per class, classes consuming the RNG in id order.
fn shuffled_by_class(labels: &[u8], n_classes: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = indices_by_class(labels, n_classes);
    for group in groups.iter_mut() {
        group.shuffle(&mut rng);
    }
    groups
}

/// Per-class quota of `max(1, round(fraction * count))`, skipping empty
/// classes.
fn rounded_quota(count: usize, fraction: f64) -> usize {
    if count == 0 {
        0
    } else {
        ((fraction * count as f64).round() as usize).clamp(1, count)
    }
}

/// Stratified subsample: selects `max(1, round(fraction * count_c))`
/// indices per class by seeded shuffle. Returned indices are ascending.
pub fn stratified_sample_indices(
    labels: &[u8],
    n_classes: usize,
    fraction: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "sample fraction must be in (0, 1], got {fraction}"
        )));
    }
    let groups = shuffled_by_class(labels, n_classes, seed);
    let mut selected = Vec::new();
    for group in &groups {
        let quota = rounded_quota(group.len(), fraction);
        selected.extend_from_slice(&group[..quota]);
    }
    selected.sort_unstable();
    Ok(selected)
}

/// Stratified train/test split with largest-remainder allocation of the
/// test quota. Classes with a single sample go entirely to train; the
/// number of such classes is returned as a warning count.
pub fn stratified_split_indices(
    labels: &[u8],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let groups = shuffled_by_class(labels, n_classes, seed);
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }

    // Singleton classes never contribute to the test set.
    let singleton_classes = groups.iter().filter(|g| g.len() == 1).count();
    let eligible: Vec<usize> = (0..n_classes)
        .filter(|&c| groups[c].len() >= 2)
        .collect();

    let total_test = (test_fraction * n as f64).round() as usize;
    let mut test_counts = vec![0usize; n_classes];
    let mut base_sum = 0usize;
    let mut remainders: Vec<(f64, usize)> = Vec::new();
    for &c in &eligible {
        let quota = test_fraction * groups[c].len() as f64;
        let base = quota.floor() as usize;
        test_counts[c] = base;
        base_sum += base;
        remainders.push((quota - base as f64, c));
    }
    // Largest remainder first; equal remainders break toward the lower
    // class id. Sorting descending by remainder then ascending by id.
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut extras = total_test.saturating_sub(base_sum);
    for &(_, c) in remainders.iter().cycle().take(remainders.len() * 2) {
        if extras == 0 {
            break;
        }
        // Keep at least one sample of every class in train.
        if test_counts[c] + 1 < groups[c].len() {
            test_counts[c] += 1;
            extras -= 1;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes {
        let take = test_counts[c].min(groups[c].len().saturating_sub(1));
        test.extend_from_slice(&groups[c][..take]);
        train.extend_from_slice(&groups[c][take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        test,
        singleton_classes,
    })
}

#[derive(Debug, Clone)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Classes with one sample that were forced into train.
    pub singleton_classes: usize,
}

/// `k` pairwise-disjoint stratified subsets drawn without replacement from
/// a single seeded per-class shuffle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

pub fn make_fold_plan(
    labels: &[u8],
    n_classes: usize,
    k: usize,
    per_fold_fraction: f64,
    seed: u64,
) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::Argument("fold count must be >= 1".into()));
    }
    if !(per_fold_fraction > 0.0 && per_fold_fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "per-fold fraction must be in (0, 1], got {per_fold_fraction}"
        )));
    }
    if k as f64 * per_fold_fraction > 1.0 + 1e-12 {
        return Err(Error::Argument(format!(
            "k * per_fold_fraction = {} exceeds 1",
            k as f64 * per_fold_fraction
        )));
    }

    let groups = shuffled_by_class(labels, n_classes, seed);
    for (c, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let quota = rounded_quota(group.len(), per_fold_fraction);
        if quota * k > group.len() {
            return Err(Error::ClassTooSmall {
                class: c.to_string(),
                detail: format!(
                    "{} samples cannot supply {k} disjoint folds of {quota}",
                    group.len()
                ),
            });
        }
    }

    let mut folds = vec![Vec::new(); k];
    for group in &groups {
        if group.is_empty() {
            continue;
        }
        let quota = rounded_quota(group.len(), per_fold_fraction);
        for (j, fold) in folds.iter_mut().enumerate() {
            fold.extend_from_slice(&group[j * quota..(j + 1) * quota]);
        }
    }
    for fold in folds.iter_mut() {
        fold.sort_unstable();
    }
    Ok(FoldPlan { k, folds, seed })
}
