//! Dataset manifests: sorted, indexed image lists with class labels.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "bmp", "tif"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    /// Path relative to the dataset root.
    pub path: PathBuf,
    pub class: String,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    /// Class names; `label` indexes this list.
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

fn is_image(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(e.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// One Flavia-style class: file numbers `first..=last`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRange {
    pub class: String,
    pub first: u32,
    pub last: u32,
}

/// Parse `class,first,last` lines; `#` starts a comment.
pub fn parse_ranges(text: &str) -> Result<Vec<ClassRange>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("range file line {}: expected class,first,last", n + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let first = parts[1].parse().map_err(|_| bad())?;
        let last = parts[2].parse().map_err(|_| bad())?;
        if first > last {
            return Err(bad());
        }
        out.push(ClassRange {
            class: parts[0].to_string(),
            first,
            last,
        });
    }
    Ok(out)
}

impl DatasetManifest {
    fn build(root: &Path, mut items: Vec<(PathBuf, String)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidArgument(format!("no images found under {}", root.display())));
        }
        let mut seen = HashSet::new();
        for (p, _) in &items {
            let name = p.file_name().map(|n| n.to_os_string()).unwrap_or_default();
            if !seen.insert(name) {
                return Err(Error::InvalidArgument(format!("duplicate file name {}", p.display())));
            }
        }
        items.sort_by(|a, b| a.0.file_name().cmp(&b.0.file_name()));
        let mut classes: Vec<String> = items.iter().map(|i| i.1.clone()).collect();
        classes.sort();
        classes.dedup();
        let entries = items
            .into_iter()
            .enumerate()
            .map(|(index, (path, class))| ManifestEntry {
                index,
                label: classes.binary_search(&class).expect("collected above"),
                path,
                class,
            })
            .collect();
        Ok(Self {
            root: root.to_path_buf(),
            classes,
            entries,
        })
    }

    /// One subdirectory per class; entries sorted by file name.
    pub fn from_class_dirs(root: &Path) -> Result<Self> {
        let mut items = Vec::new();
        for dir in list_dir(root)? {
            if !dir.is_dir() {
                continue;
            }
            let class = dir.file_name().unwrap().to_string_lossy().into_owned();
            for f in list_dir(&dir)? {
                if f.is_file() && is_image(&f) {
                    items.push((f.strip_prefix(root).unwrap().to_path_buf(), class.clone()));
                }
            }
        }
        Self::build(root, items)
    }

    /// Flat directory whose numeric file stems map to classes through
    /// `ranges`. Files outside every range are skipped with a warning.
    pub fn from_ranges(root: &Path, ranges: &[ClassRange]) -> Result<Self> {
        let mut items = Vec::new();
        for f in list_dir(root)? {
            if !(f.is_file() && is_image(&f)) {
                continue;
            }
            let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            let class = stem
                .parse::<u32>()
                .ok()
                .and_then(|n| ranges.iter().find(|r| (r.first..=r.last).contains(&n)));
            match class {
                Some(r) => items.push((f.strip_prefix(root).unwrap().to_path_buf(), r.class.clone())),
                None => log::warn!("{} is not covered by the class ranges; skipped", f.display()),
            }
        }
        Self::build(root, items)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.class.clone()).or_insert(0) += 1;
        }
        m
    }

    pub fn full_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.path)
    }

    /// CSV with a `# root=` comment line, then `index,path,class,label`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "path", "class", "label"]).map_err(csv_err)?;
        for e in &self.entries {
            w.write_record([
                e.index.to_string(),
                e.path.to_string_lossy().into_owned(),
                e.class.clone(),
                e.label.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| Error::FeatureFile(e.to_string()))?;
        let mut out = format!("# leafkit manifest root={}\n", self.root.display()).into_bytes();
        out.extend(body);
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let first = text.lines().next().unwrap_or("");
        let root = first
            .strip_prefix("# leafkit manifest root=")
            .ok_or_else(|| Error::FeatureFile(format!("{} is not a manifest", path.display())))?;
        let body = &text[first.len()..];
        let mut r = csv::Reader::from_reader(body.trim_start().as_bytes());
        let mut entries = Vec::new();
        for rec in r.deserialize() {
            let e: ManifestEntry = rec.map_err(csv_err)?;
            entries.push(e);
        }
        let mut classes: Vec<String> = entries.iter().map(|e| e.class.clone()).collect();
        classes.sort();
        classes.dedup();
        for (i, e) in entries.iter().enumerate() {
            if e.index != i || classes.get(e.label) != Some(&e.class) {
                return Err(Error::FeatureFile(format!("manifest row {i} is inconsistent")));
            }
        }
        Ok(Self {
            root: PathBuf::from(root),
            classes,
            entries,
        })
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::FeatureFile(e.to_string())
}
