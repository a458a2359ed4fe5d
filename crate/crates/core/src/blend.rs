//! Per-epoch training manifests that blend gold data with a geometrically
//! shrinking portion of noisy data.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling;

#[derive(Debug, Error)]
pub enum BlendError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("epochs must be at least 1")]
    NoEpochs,
    #[error("dataset id `{0}` is listed more than once")]
    DuplicateDataset(String),
    #[error("cannot parse dataset `{0}`; expected `id:size`")]
    BadSource(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSize {
    pub id: String,
    pub size: usize,
}

impl DatasetSize {
    pub fn new(id: impl Into<String>, size: usize) -> Self {
        DatasetSize { id: id.into(), size }
    }

    /// Parses `id:size`.
    pub fn parse(s: &str) -> Result<Self, BlendError> {
        let (id, size) = s.rsplit_once(':').ok_or_else(|| BlendError::BadSource(s.to_string()))?;
        let size = size.trim().parse().map_err(|_| BlendError::BadSource(s.to_string()))?;
        if id.trim().is_empty() {
            return Err(BlendError::BadSource(s.to_string()));
        }
        Ok(DatasetSize::new(id.trim(), size))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemRef {
    pub dataset: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochManifest {
    /// 1-based.
    pub epoch: usize,
    pub item_refs: Vec<ItemRef>,
}

impl EpochManifest {
    pub fn refs_for<'a>(&'a self, dataset: &'a str) -> impl Iterator<Item = &'a ItemRef> + 'a {
        self.item_refs.iter().filter(move |r| r.dataset == dataset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendPlan {
    pub alpha: f64,
    pub epochs: usize,
    pub seed: u64,
    pub gold_sources: Vec<DatasetSize>,
    pub noisy_sources: Vec<DatasetSize>,
    pub manifests: Vec<EpochManifest>,
}

/// Items kept from a noisy dataset of size `n` at 1-based `epoch`:
/// `n * alpha^(epoch - 1)` rounded half to even.
pub fn noisy_count(n: usize, alpha: f64, epoch: usize) -> usize {
    let exp = i32::try_from(epoch.saturating_sub(1)).unwrap_or(i32::MAX);
    (n as f64 * alpha.powi(exp)).round_ties_even() as usize
}

pub fn make_blend_plan(
    gold: &[DatasetSize],
    noisy: &[DatasetSize],
    alpha: f64,
    epochs: usize,
    seed: u64,
) -> Result<BlendPlan, BlendError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(BlendError::Alpha(alpha));
    }
    if epochs == 0 {
        return Err(BlendError::NoEpochs);
    }
    let mut seen = HashSet::new();
    for d in gold.iter().chain(noisy) {
        if !seen.insert(d.id.as_str()) {
            return Err(BlendError::DuplicateDataset(d.id.clone()));
        }
    }

    let gold_refs: Vec<ItemRef> =
        gold.iter().flat_map(|d| (0..d.size).map(|index| ItemRef { dataset: d.id.clone(), index })).collect();
    let orders: Vec<Vec<usize>> = noisy
        .iter()
        .map(|d| {
            let mut order: Vec<usize> = (0..d.size).collect();
            order.shuffle(&mut sampling::keyed_rng(seed, &d.id));
            order
        })
        .collect();

    let manifests = (1..=epochs)
        .map(|epoch| {
            let mut item_refs = gold_refs.clone();
            for (d, order) in noisy.iter().zip(&orders) {
                let mut kept = order[..noisy_count(d.size, alpha, epoch)].to_vec();
                kept.sort_unstable();
                item_refs.extend(kept.into_iter().map(|index| ItemRef { dataset: d.id.clone(), index }));
            }
            EpochManifest { epoch, item_refs }
        })
        .collect();

    Ok(BlendPlan { alpha, epochs, seed, gold_sources: gold.to_vec(), noisy_sources: noisy.to_vec(), manifests })
}

#[derive(Serialize)]
struct PlanSummary<'a> {
    alpha: f64,
    epochs: usize,
    seed: u64,
    gold_sources: &'a [DatasetSize],
    noisy_sources: &'a [DatasetSize],
    epoch_sizes: Vec<EpochSize>,
}

#[derive(Serialize)]
struct EpochSize {
    epoch: usize,
    file: String,
    gold: usize,
    noisy: usize,
}

pub fn manifest_file_name(epoch: usize) -> String {
    format!("epoch-{epoch}.tsv")
}

/// Writes `epoch-<e>.tsv` (header `dataset\tindex`) for each epoch and a
/// `plan.json` summary into `out_dir`.
pub fn emit_manifests(plan: &BlendPlan, out_dir: &Path) -> Result<(), BlendError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BlendError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let gold_ids: HashSet<&str> = plan.gold_sources.iter().map(|d| d.id.as_str()).collect();
    let mut sizes = Vec::new();
    for m in &plan.manifests {
        let file = manifest_file_name(m.epoch);
        let path = out_dir.join(&file);
        let mut buf = Vec::with_capacity(16 * m.item_refs.len() + 16);
        buf.extend_from_slice(b"dataset\tindex\n");
        for r in &m.item_refs {
            writeln!(buf, "{}\t{}", r.dataset, r.index).expect("writing to a Vec cannot fail");
        }
        fs::write(&path, buf).map_err(io_err(&path))?;
        let gold = m.item_refs.iter().filter(|r| gold_ids.contains(r.dataset.as_str())).count();
        sizes.push(EpochSize { epoch: m.epoch, file, gold, noisy: m.item_refs.len() - gold });
    }
    let summary = PlanSummary {
        alpha: plan.alpha,
        epochs: plan.epochs,
        seed: plan.seed,
        gold_sources: &plan.gold_sources,
        noisy_sources: &plan.noisy_sources,
        epoch_sizes: sizes,
    };
    let path = out_dir.join("plan.json");
    let mut json = serde_json::to_vec_pretty(&summary).expect("plan summary serializes");
    json.push(b'\n');
    fs::write(&path, json).map_err(io_err(&path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn noisy_sizes(plan: &BlendPlan, id: &str) -> Vec<usize> {
        plan.manifests.iter().map(|m| m.refs_for(id).count()).collect()
    }

    #[test]
    fn decay_examples() {
        let noisy = [DatasetSize::new("hi", 1000)];
        let plan = make_blend_plan(&[], &noisy, 0.5, 4, 0).unwrap();
        assert_eq!(noisy_sizes(&plan, "hi"), [1000, 500, 250, 125]);
        let plan = make_blend_plan(&[], &noisy, 1.0, 3, 0).unwrap();
        assert_eq!(noisy_sizes(&plan, "hi"), [1000; 3]);
        let plan = make_blend_plan(&[], &noisy, 0.0, 3, 0).unwrap();
        assert_eq!(noisy_sizes(&plan, "hi"), [1000, 0, 0]);
    }

    #[test]
    fn rounding_is_half_to_even() {
        assert_eq!(noisy_count(10, 0.25, 2), 2);
        assert_eq!(noisy_count(10, 0.25, 3), 1);
        assert_eq!(noisy_count(2, 0.25, 2), 0);
        assert_eq!(noisy_count(6, 0.25, 2), 2);
        assert_eq!(noisy_count(1, 0.5, 2), 0);
    }

    #[test]
    fn nested_and_gold_invariant() {
        let gold = [DatasetSize::new("circa", 50)];
        let noisy = [DatasetSize::new("tr", 40), DatasetSize::new("zh", 33)];
        let plan = make_blend_plan(&gold, &noisy, 0.6, 5, 11).unwrap();
        let gold0: BTreeSet<_> = plan.manifests[0].refs_for("circa").collect();
        assert_eq!(gold0.len(), 50);
        for w in plan.manifests.windows(2) {
            assert_eq!(w[1].refs_for("circa").collect::<BTreeSet<_>>(), gold0);
            for id in ["tr", "zh"] {
                let prev: BTreeSet<_> = w[0].refs_for(id).collect();
                assert!(w[1].refs_for(id).all(|r| prev.contains(r)));
            }
        }
    }

    #[test]
    fn adding_a_dataset_leaves_others_untouched() {
        let a = make_blend_plan(&[], &[DatasetSize::new("tr", 100)], 0.5, 3, 4).unwrap();
        let b = make_blend_plan(&[], &[DatasetSize::new("es", 70), DatasetSize::new("tr", 100)], 0.5, 3, 4).unwrap();
        for (ma, mb) in a.manifests.iter().zip(&b.manifests) {
            assert!(ma.refs_for("tr").eq(mb.refs_for("tr")));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_blend_plan(&[], &[], 1.5, 1, 0), Err(BlendError::Alpha(_))));
        assert!(matches!(make_blend_plan(&[], &[], f64::NAN, 1, 0), Err(BlendError::Alpha(_))));
        assert!(matches!(make_blend_plan(&[], &[], 0.5, 0, 0), Err(BlendError::NoEpochs)));
        let dup = [DatasetSize::new("x", 1), DatasetSize::new("x", 2)];
        assert!(matches!(make_blend_plan(&dup, &[], 0.5, 1, 0), Err(BlendError::DuplicateDataset(_))));
    }

    #[test]
    fn parses_sources() {
        assert_eq!(DatasetSize::parse("swda-ia:1200").unwrap(), DatasetSize::new("swda-ia", 1200));
        assert!(DatasetSize::parse("tr").is_err());
        assert!(DatasetSize::parse(":3").is_err());
    }

    #[test]
    fn emitted_files_are_stable() {
        let plan =
            make_blend_plan(&[DatasetSize::new("circa", 5)], &[DatasetSize::new("hi", 8)], 0.5, 2, 3).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        emit_manifests(&plan, d1.path()).unwrap();
        emit_manifests(&plan, d2.path()).unwrap();
        for f in ["epoch-1.tsv", "epoch-2.tsv", "plan.json"] {
            assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap());
        }
        assert!(!d1.path().join("epoch-3.tsv").exists());
        let e1 = fs::read_to_string(d1.path().join("epoch-1.tsv")).unwrap();
        assert!(e1.starts_with("dataset\tindex\ncirca\t0\n"));
        assert_eq!(e1.lines().count(), 1 + 5 + 8);
    }
}
