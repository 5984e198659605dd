//! Dataset listing and train/validation/test splits.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

/// Image excluded from CrackForest because of its faulty annotation.
pub const CFD_EXCLUDED: &str = "042";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Cfd,
    Dcd,
    Ael,
}

/// Expected split sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub test: usize,
    pub val: usize,
}

impl DatasetName {
    /// Sizes before the validation carve-out.
    pub fn sizes(self) -> SplitSizes {
        match self {
            DatasetName::Cfd => SplitSizes { train: 71, test: 46, val: 7 },
            DatasetName::Dcd => SplitSizes { train: 300, test: 237, val: 30 },
            DatasetName::Ael => SplitSizes { train: 34, test: 24, val: 4 },
        }
    }
}

impl std::str::FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cfd" => Ok(DatasetName::Cfd),
            "dcd" => Ok(DatasetName::Dcd),
            "ael" => Ok(DatasetName::Ael),
            other => Err(Error::Usage(format!("unknown dataset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub image_dir: PathBuf,
    pub mask_dir: PathBuf,
    /// Appended to an image stem to find its mask, e.g. `"_gt"`.
    #[serde(default)]
    pub mask_suffix: String,
    /// Official train/test name lists; when absent the test set is drawn
    /// with the seed.
    #[serde(default)]
    pub train_list: Option<PathBuf>,
    #[serde(default)]
    pub test_list: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// File stem to path for every image file in a directory.
pub fn list_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if !matches!(ext.as_deref(), Some(e) if IMAGE_EXTENSIONS.contains(&e)) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if let Some(prev) = out.insert(stem.to_string(), path.clone()) {
            return Err(Error::Dataset(format!(
                "duplicate image name {stem:?}: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Pairs every image with its mask by name. Names without a partner in
/// either directory are an error.
pub fn pair_images(
    image_dir: &Path,
    mask_dir: &Path,
    mask_suffix: &str,
) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let images = list_images(image_dir)?;
    let mut masks = list_images(mask_dir)?;
    let mut out = Vec::with_capacity(images.len());
    for (name, img) in images {
        let key = format!("{name}{mask_suffix}");
        let mask = masks
            .remove(&key)
            .ok_or_else(|| Error::Dataset(format!("no mask {key:?} for image {name:?}")))?;
        out.push((name, img, mask));
    }
    if let Some(extra) = masks.keys().next() {
        return Err(Error::Dataset(format!("mask {extra:?} has no image")));
    }
    Ok(out)
}

pub fn read_name_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            // official lists may carry paths or extensions
            let base = l.rsplit(['/', '\\']).next().unwrap_or(l);
            Path::new(base)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(base)
                .to_string()
        })
        .collect())
}

pub fn write_name_list(path: &Path, names: &[String]) -> Result<()> {
    let mut text = names.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn shuffled(names: &[String], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut v = names.to_vec();
    v.sort();
    v.shuffle(rng);
    v
}

/// Splits a list of available names. Pure function of its inputs.
pub fn split_names(
    name: DatasetName,
    available: &[String],
    official: Option<(Vec<String>, Vec<String>)>,
    seed: u64,
) -> Result<Splits> {
    let sizes = name.sizes();
    let mut names: Vec<String> = available.to_vec();
    if name == DatasetName::Cfd {
        names.retain(|n| n != CFD_EXCLUDED);
    }
    names.sort();
    names.dedup();
    let set: BTreeSet<&String> = names.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (train, test) = match official {
        Some((train, test)) => {
            for n in train.iter().chain(&test) {
                if !set.contains(n) {
                    return Err(Error::Dataset(format!("listed image {n:?} not found")));
                }
            }
            if train.iter().any(|n| test.contains(n)) {
                return Err(Error::Dataset("train and test lists overlap".into()));
            }
            (train, test)
        }
        None => {
            let order = shuffled(&names, &mut rng);
            let test = order[sizes.train.min(order.len())..].to_vec();
            let train = order[..sizes.train.min(order.len())].to_vec();
            (train, test)
        }
    };
    if train.len() != sizes.train || test.len() != sizes.test {
        return Err(Error::Dataset(format!(
            "{name:?} expects {} train / {} test images, found {} / {}",
            sizes.train,
            sizes.test,
            train.len(),
            test.len()
        )));
    }
    let order = shuffled(&train, &mut rng);
    let (val, rest) = order.split_at(sizes.val);
    let mut train = rest.to_vec();
    let mut val = val.to_vec();
    let mut test = test;
    train.sort();
    val.sort();
    test.sort();
    Ok(Splits { train, val, test })
}

pub fn make_splits(spec: &DatasetSpec) -> Result<Splits> {
    let pairs = pair_images(&spec.image_dir, &spec.mask_dir, &spec.mask_suffix)?;
    let names: Vec<String> = pairs.into_iter().map(|(n, _, _)| n).collect();
    let official = match (&spec.train_list, &spec.test_list) {
        (Some(tr), Some(te)) => Some((read_name_list(tr)?, read_name_list(te)?)),
        (None, None) => None,
        _ => {
            return Err(Error::Usage(
                "train and test lists must be given together".into(),
            ))
        }
    };
    split_names(spec.name, &names, official, spec.seed)
}

/// Writes `train.txt`, `val.txt` and `test.txt`.
pub fn write_splits(splits: &Splits, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_name_list(&dir.join("train.txt"), &splits.train)?;
    write_name_list(&dir.join("val.txt"), &splits.val)?;
    write_name_list(&dir.join("test.txt"), &splits.test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{i:03}")).collect()
    }

    #[test]
    fn cfd_drops_042() {
        let s = split_names(DatasetName::Cfd, &numbered(118), None, 7).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (64, 7, 46));
        let all: BTreeSet<_> = s.train.iter().chain(&s.val).chain(&s.test).collect();
        assert_eq!(all.len(), 117);
        assert!(!all.contains(&CFD_EXCLUDED.to_string()));
    }

    #[test]
    fn seeded_splits_are_deterministic() {
        let names = numbered(58);
        let a = split_names(DatasetName::Ael, &names, None, 3).unwrap();
        let mut rev = names.clone();
        rev.reverse();
        assert_eq!(a, split_names(DatasetName::Ael, &rev, None, 3).unwrap());
        assert_ne!(a, split_names(DatasetName::Ael, &names, None, 4).unwrap());
    }

    #[test]
    fn official_lists_are_respected() {
        let names = numbered(537);
        let train = names[..300].to_vec();
        let test = names[300..].to_vec();
        let s = split_names(DatasetName::Dcd, &names, Some((train.clone(), test.clone())), 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (270, 30, 237));
        assert_eq!(s.test, test);
        assert!(s.val.iter().all(|n| train.contains(n)));
    }

    #[test]
    fn count_mismatch_is_a_dataset_error() {
        assert!(matches!(
            split_names(DatasetName::Ael, &numbered(50), None, 0),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn pairing_and_lists() {
        let dir = tempfile::tempdir().unwrap();
        let (img, gt) = (dir.path().join("img"), dir.path().join("gt"));
        std::fs::create_dir_all(&img).unwrap();
        std::fs::create_dir_all(&gt).unwrap();
        for n in ["a", "b"] {
            std::fs::write(img.join(format!("{n}.jpg")), b"").unwrap();
            std::fs::write(gt.join(format!("{n}_gt.png")), b"").unwrap();
        }
        std::fs::write(img.join("notes.txt"), b"").unwrap();
        let pairs = pair_images(&img, &gt, "_gt").unwrap();
        assert_eq!(pairs.iter().map(|p| p.0.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        std::fs::write(img.join("c.png"), b"").unwrap();
        assert!(matches!(pair_images(&img, &gt, "_gt"), Err(Error::Dataset(_))));

        let list = dir.path().join("list.txt");
        std::fs::write(&list, "train/x.jpg\n\ny\n").unwrap();
        assert_eq!(read_name_list(&list).unwrap(), ["x", "y"]);
    }
}
