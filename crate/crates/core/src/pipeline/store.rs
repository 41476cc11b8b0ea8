//! Feature files: one CSV per vector branch plus a tensor file per image.
//!
//! Every CSV starts with a stamp line
//! `# leafkit-features format=1 branch_order=1:color,vein,... config=<hash> seed=<n>`
//! followed by a header row `index,path,label,<columns>`. Rows are appended
//! as images finish and sorted by index on load.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::features::{extract_from_image, ExtractConfig, Intermediates, LeafFeatureSet};
use super::fusion::{branch_order_stamp, BRANCH_ORDER_VERSION};
use super::manifest::{DatasetManifest, ManifestEntry};
use crate::container::Container;
use crate::error::{Error, Result};
use crate::neural::Tensor;
use crate::raster::{load_image, save_gray_png, save_png, RasterImage};

pub const FEATURE_FORMAT: u32 = 1;

/// Vector feature files in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorFile {
    Shape,
    Texture,
    ColorStats,
    Fourier,
    Projection,
}

pub const VECTOR_FILES: [VectorFile; 5] = [
    VectorFile::Shape,
    VectorFile::Texture,
    VectorFile::ColorStats,
    VectorFile::Fourier,
    VectorFile::Projection,
];

impl VectorFile {
    pub fn file_name(self) -> &'static str {
        match self {
            VectorFile::Shape => "shape.csv",
            VectorFile::Texture => "texture.csv",
            VectorFile::ColorStats => "color_stats.csv",
            VectorFile::Fourier => "fourier.csv",
            VectorFile::Projection => "xy_projection.csv",
        }
    }

    pub fn columns(self) -> Vec<String> {
        match self {
            VectorFile::Shape => (0..35).map(|i| format!("shape_{i:02}")).collect(),
            VectorFile::Texture => (1..=14).map(|i| format!("tex_f{i:02}")).collect(),
            VectorFile::ColorStats => (0..36).map(|i| format!("col_{i:02}")).collect(),
            VectorFile::Fourier => (1..=16).map(|i| format!("fd_{i:02}")).collect(),
            VectorFile::Projection => (0..60).map(|i| format!("xyp_{i:02}")).collect(),
        }
    }

    fn values(self, f: &LeafFeatureSet) -> &[f64] {
        match self {
            VectorFile::Shape => &f.shape,
            VectorFile::Texture => &f.texture,
            VectorFile::ColorStats => &f.color_stats,
            VectorFile::Fourier => &f.fourier,
            VectorFile::Projection => &f.projection,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeatureStore {
    dir: PathBuf,
    stamp: String,
}

struct Row {
    path: String,
    label: usize,
    values: Vec<f64>,
}

impl FeatureStore {
    /// Open or create a store. Existing files must carry the same format,
    /// branch order and config hash.
    pub fn open(dir: &Path, config_hash: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir.join("images")).map_err(|e| Error::io(dir, e))?;
        let store = Self {
            dir: dir.to_path_buf(),
            stamp: format!(
                "# leafkit-features format={FEATURE_FORMAT} branch_order={BRANCH_ORDER_VERSION}:{} config={config_hash} seed={seed}",
                branch_order_stamp()
            ),
        };
        for v in VECTOR_FILES {
            let p = dir.join(v.file_name());
            if p.exists() {
                store.check_stamp(&p)?;
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn check_stamp(&self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let found = text.lines().next().unwrap_or("");
        let field = |line: &str, key: &str| {
            line.split_whitespace()
                .find_map(|t| t.strip_prefix(key).map(str::to_string))
                .unwrap_or_default()
        };
        for key in ["format=", "branch_order=", "config="] {
            let (want, got) = (field(&self.stamp, key), field(found, key));
            if want != got {
                return Err(Error::Config(format!(
                    "{}: {key}{got} does not match this build/config ({key}{want})",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    fn image_path(&self, index: usize) -> PathBuf {
        self.dir.join("images").join(format!("{index:06}.bin"))
    }

    fn read_rows(&self, v: VectorFile) -> Result<BTreeMap<usize, Row>> {
        let path = self.dir.join(v.file_name());
        let mut out = BTreeMap::new();
        if !path.exists() {
            return Ok(out);
        }
        self.check_stamp(&path)?;
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let width = v.columns().len();
        for rec in r.records() {
            let rec = rec.map_err(super::manifest::csv_err)?;
            let bad = || Error::FeatureFile(format!("{}: malformed row {:?}", path.display(), rec));
            if rec.len() != 3 + width {
                return Err(bad());
            }
            let index: usize = rec[0].parse().map_err(|_| bad())?;
            let values = (3..rec.len())
                .map(|i| rec[i].parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            out.insert(
                index,
                Row {
                    path: rec[1].to_string(),
                    label: rec[2].parse().map_err(|_| bad())?,
                    values,
                },
            );
        }
        Ok(out)
    }

    /// Indexes with a row in every CSV and a tensor file.
    pub fn completed(&self) -> Result<BTreeSet<usize>> {
        let mut done: Option<BTreeSet<usize>> = None;
        for v in VECTOR_FILES {
            let keys: BTreeSet<usize> = self.read_rows(v)?.into_keys().collect();
            done = Some(match done {
                None => keys,
                Some(d) => d.intersection(&keys).copied().collect(),
            });
        }
        Ok(done
            .unwrap_or_default()
            .into_iter()
            .filter(|&i| self.image_path(i).exists())
            .collect())
    }

    /// Append finished rows; tensors go to `images/<index>.bin`.
    pub fn append(&self, rows: &[(&ManifestEntry, &LeafFeatureSet)]) -> Result<()> {
        for (e, f) in rows {
            let mut c = Container::new("leaf-images", serde_json::json!({ "index": e.index }));
            c.push("color_image", f.color_image.shape().to_vec(), f.color_image.data().to_vec());
            c.push("vein_image", f.vein_image.shape().to_vec(), f.vein_image.data().to_vec());
            c.write(&self.image_path(e.index))?;
        }
        for v in VECTOR_FILES {
            let path = self.dir.join(v.file_name());
            let fresh = !path.exists();
            let mut w = csv::Writer::from_writer(Vec::new());
            if fresh {
                let mut header = vec!["index".to_string(), "path".into(), "label".into()];
                header.extend(v.columns());
                w.write_record(&header).map_err(super::manifest::csv_err)?;
            }
            for (e, f) in rows {
                let mut rec = vec![e.index.to_string(), e.path.to_string_lossy().into_owned(), e.label.to_string()];
                rec.extend(v.values(f).iter().map(|x| x.to_string()));
                w.write_record(&rec).map_err(super::manifest::csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::FeatureFile(e.to_string()))?;
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            if fresh {
                writeln!(file, "{}", self.stamp).map_err(|e| Error::io(&path, e))?;
            }
            file.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Features for every manifest entry; `None` where extraction has not
    /// succeeded. Rows must agree with the manifest's path and label.
    pub fn load(&self, manifest: &DatasetManifest) -> Result<Vec<Option<LeafFeatureSet>>> {
        let mut tables = Vec::new();
        for v in VECTOR_FILES {
            tables.push(self.read_rows(v)?);
        }
        let mut out = Vec::with_capacity(manifest.len());
        for e in &manifest.entries {
            let rows: Option<Vec<&Row>> = tables.iter().map(|t| t.get(&e.index)).collect();
            let Some(rows) = rows else {
                out.push(None);
                continue;
            };
            let ipath = self.image_path(e.index);
            if !ipath.exists() {
                out.push(None);
                continue;
            }
            let path = e.path.to_string_lossy();
            if rows.iter().any(|r| r.path != path || r.label != e.label) {
                return Err(Error::FeatureFile(format!(
                    "row {} does not match manifest entry {}",
                    e.index, path
                )));
            }
            let mut c = Container::read(&ipath, "leaf-images")?;
            let color_shape = c.arrays.iter().find(|a| a.name == "color_image").map(|a| a.shape.clone());
            let vein_shape = c.arrays.iter().find(|a| a.name == "vein_image").map(|a| a.shape.clone());
            let (Some(cs), Some(vs)) = (color_shape, vein_shape) else {
                return Err(Error::FeatureFile(format!("{} lacks image arrays", ipath.display())));
            };
            let color = c.take("color_image", cs.iter().product())?;
            let vein = c.take("vein_image", vs.iter().product())?;
            let val = |i: usize| rows[i].values.clone();
            out.push(Some(LeafFeatureSet {
                shape: val(0),
                texture: val(1),
                color_stats: val(2),
                fourier: val(3),
                projection: val(4),
                color_image: Tensor::new(cs, color)?,
                vein_image: Tensor::new(vs, vein)?,
            }));
        }
        Ok(out)
    }

    /// Replace `failures.csv` with the given `(index, path, error)` rows.
    pub fn write_failures(&self, failures: &[(usize, String, String)]) -> Result<()> {
        let path = self.dir.join("failures.csv");
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "path", "error"]).map_err(super::manifest::csv_err)?;
        for (i, p, m) in failures {
            w.write_record([i.to_string(), p.clone(), m.clone()]).map_err(super::manifest::csv_err)?;
        }
        let mut bytes = format!("{}\n", self.stamp).into_bytes();
        bytes.extend(w.into_inner().map_err(|e| Error::FeatureFile(e.to_string()))?);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtractSummary {
    pub cached: usize,
    pub extracted: usize,
    /// `(index, path, message)` of images that failed.
    pub failed: Vec<(usize, String, String)>,
}

/// Write gray, mask, contour overlay and vein planes for one image.
pub fn write_debug_images(dir: &Path, stem: &str, inter: &Intermediates) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_gray_png(&inter.gray, dir.join(format!("{stem}_gray.png")))?;
    save_gray_png(&inter.mask.to_gray(), dir.join(format!("{stem}_mask.png")))?;
    let mut overlay: RasterImage = inter.working.clone();
    for &(x, y) in inter.contour.points() {
        overlay.set(x, y, [255, 0, 0]);
    }
    save_png(&overlay, dir.join(format!("{stem}_contour.png")))?;
    for (r, p) in inter.veins.radii.iter().zip(&inter.veins.planes) {
        save_gray_png(&stretch(p), dir.join(format!("{stem}_vein_r{r}.png")))?;
    }
    save_gray_png(&stretch(&inter.veins.fused), dir.join(format!("{stem}_vein_fused.png")))
}

fn stretch(p: &crate::raster::Plane) -> crate::raster::GrayImage {
    let peak = p.as_raw().iter().cloned().fold(0.0, f64::max);
    let mut q = p.clone();
    if peak > 0.0 {
        q.as_raw_mut().iter_mut().for_each(|v| *v *= 255.0 / peak);
    }
    q.to_gray()
}

/// Extract every manifest entry not already in the store, `chunk` images at
/// a time in parallel. Failures are logged and collected; the run goes on.
pub fn extract_dataset(
    manifest: &DatasetManifest,
    store: &FeatureStore,
    cfg: &ExtractConfig,
    debug_dir: Option<&Path>,
) -> Result<ExtractSummary> {
    cfg.validate()?;
    let done = store.completed()?;
    let todo: Vec<&ManifestEntry> = manifest.entries.iter().filter(|e| !done.contains(&e.index)).collect();
    let mut summary = ExtractSummary {
        cached: manifest.len() - todo.len(),
        ..Default::default()
    };
    let chunk = rayon::current_num_threads().max(1) * 8;
    for batch in todo.chunks(chunk) {
        let results: Vec<Result<LeafFeatureSet>> = batch
            .par_iter()
            .map(|e| {
                let img = load_image(manifest.full_path(e))?;
                let (f, inter) = extract_from_image(&img, cfg, debug_dir.is_some())?;
                if let (Some(dir), Some(inter)) = (debug_dir, inter) {
                    write_debug_images(dir, &format!("{:06}", e.index), &inter)?;
                }
                Ok(f)
            })
            .collect();
        let mut ok = Vec::new();
        for (e, r) in batch.iter().zip(&results) {
            match r {
                Ok(f) => ok.push((*e, f)),
                Err(err) => {
                    log::error!("{}: {err}", e.path.display());
                    summary
                        .failed
                        .push((e.index, e.path.to_string_lossy().into_owned(), err.to_string()));
                }
            }
        }
        store.append(&ok)?;
        summary.extracted += ok.len();
        log::info!("extracted {}/{}", summary.cached + summary.extracted, manifest.len());
    }
    store.write_failures(&summary.failed)?;
    Ok(summary)
}
