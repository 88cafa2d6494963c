//! Bag directory layout: `manifest.json` plus one headerless CSV per bag.
//!
//! Each CSV row holds the `d` feature values followed by a `hidden_label`
//! column (`+1`, `-1` or `NA`). Floats are written in Rust's shortest
//! round-trip decimal form, so a write/read cycle is exact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Bag, BagCollection, Instance, Label, LabelGate};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub m: usize,
    pub d: usize,
    /// File of bag id `i + 1` at position `i`.
    pub bag_files: Vec<String>,
    /// Bag ids from highest to lowest prior.
    pub asserted_order: Vec<usize>,
    pub true_priors: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub format_version: u32,
}

fn label_field(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Positive) => "+1",
        Some(Label::Negative) => "-1",
        None => "NA",
    }
}

fn parse_label(field: &str) -> Option<Option<Label>> {
    match field.trim() {
        "+1" | "1" => Some(Some(Label::Positive)),
        "-1" | "0" => Some(Some(Label::Negative)),
        "NA" | "" => Some(None),
        _ => None,
    }
}

/// Writes instances as headerless CSV rows (features then `hidden_label`).
pub fn write_instances_csv(instances: &[Instance], path: &Path) -> Result<()> {
    let gate = LabelGate::evaluation();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut row: Vec<String> = Vec::new();
    for inst in instances {
        row.clear();
        row.extend(inst.features().iter().map(f64::to_string));
        row.push(label_field(inst.hidden_label(&gate)).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_instances_csv(path: &Path) -> Result<Vec<Instance>> {
    let bad = |msg: String| Error::DataFile {
        path: path.to_path_buf(),
        msg,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(bad(format!(
                "row {} needs features and a label column",
                line + 1
            )));
        }
        let d = rec.len() - 1;
        let features = rec
            .iter()
            .take(d)
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("row {}: `{f}` is not a number", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let label = parse_label(&rec[d])
            .ok_or_else(|| bad(format!("row {}: bad label `{}`", line + 1, &rec[d])))?;
        out.push(match label {
            Some(l) => Instance::labeled(features, l),
            None => Instance::unlabeled(features),
        });
    }
    if let Some(first) = out.first() {
        let d = first.dim();
        if let Some(inst) = out.iter().find(|i| i.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: inst.dim(),
            });
        }
    }
    Ok(out)
}

/// Reads a labeled instance file (every row must carry `+1` or `-1`).
pub fn read_labeled_csv(path: &Path) -> Result<Vec<Instance>> {
    let rows = read_instances_csv(path)?;
    if rows.is_empty() {
        return Err(Error::DataFile {
            path: path.to_path_buf(),
            msg: "no rows".into(),
        });
    }
    if rows.iter().any(|i| !i.has_hidden_label()) {
        return Err(Error::DataFile {
            path: path.to_path_buf(),
            msg: "labeled file contains NA labels".into(),
        });
    }
    Ok(rows)
}

pub fn write_bags(collection: &BagCollection, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut bag_files = Vec::with_capacity(collection.m());
    for bag in collection.bags() {
        let name = format!("bag_{:03}.csv", bag.id());
        write_instances_csv(bag.instances(), &dir.join(&name))?;
        bag_files.push(name);
    }
    let manifest = Manifest {
        m: collection.m(),
        d: collection.d(),
        bag_files,
        asserted_order: (1..=collection.m()).collect(),
        true_priors: collection.true_priors(),
        seed: collection.seed(),
        format_version: FORMAT_VERSION,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_bags(dir: &Path) -> Result<BagCollection> {
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Manifest(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Manifest(format!(
            "unsupported format_version {}",
            manifest.format_version
        )));
    }
    let m = manifest.m;
    if manifest.bag_files.len() != m {
        return Err(Error::Manifest(format!(
            "m = {m} but {} bag files listed",
            manifest.bag_files.len()
        )));
    }
    let mut seen = vec![false; m];
    for &id in &manifest.asserted_order {
        if id == 0 || id > m || std::mem::replace(&mut seen[id - 1], true) {
            return Err(Error::Manifest(
                "asserted_order must be a permutation of the bag ids".into(),
            ));
        }
    }
    if manifest.asserted_order.len() != m {
        return Err(Error::Manifest("asserted_order must list every bag".into()));
    }
    if let Some(p) = &manifest.true_priors {
        if p.len() != m {
            return Err(Error::Manifest(format!(
                "true_priors has {} entries",
                p.len()
            )));
        }
    }

    let mut bags = Vec::with_capacity(m);
    for (rank, &id) in manifest.asserted_order.iter().enumerate() {
        let path: PathBuf = dir.join(&manifest.bag_files[id - 1]);
        if !path.is_file() {
            return Err(Error::MissingBagFile(path));
        }
        let instances = read_instances_csv(&path)?;
        if instances.is_empty() {
            return Err(Error::DataFile {
                path,
                msg: "bag file is empty".into(),
            });
        }
        if instances[0].dim() != manifest.d {
            return Err(Error::DimensionMismatch {
                expected: manifest.d,
                found: instances[0].dim(),
            });
        }
        let prior = manifest.true_priors.as_ref().map(|p| p[id - 1]);
        bags.push(Bag::new(rank + 1, instances, prior)?);
    }
    Ok(BagCollection::new(bags)?.with_seed(manifest.seed))
}
