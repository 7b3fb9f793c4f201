//! Command implementations behind the `texlab` binary: training from a
//! directory of class folders, labeling a section superpixel by
//! superpixel, scoring label maps, and dumping decompositions or feature
//! vectors.

pub mod synthetic;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, SvmModel, TrainParams};
use crate::error::{Result, TexlabError};
use crate::features::{attribute_features, decompose, feature_length, Attribute, AttributeConfig};
use crate::imagecore::patch::{extract_weighted_patch, taper_full_patch, DEFAULT_PATCH_SIDE};
use crate::imagecore::{label_overlay, read_raster_auto, write_ppm, write_raster, Raster, RasterFormat};
use crate::metrics::{aggregate_metrics, average_reports, confusion_matrix, LabelMap, MetricsReport};
use crate::segmentation::{patch_anchors, slic_segment, SlicParams, SuperpixelMap, DEFAULT_COMPACTNESS, DEFAULT_MAX_ITERS};

pub const DEFAULT_PALETTE: [[u8; 3]; 4] = [[0, 0, 255], [0, 255, 0], [255, 0, 0], [128, 128, 128]];

fn default_attribute() -> Attribute {
    Attribute::Curvelet
}
fn default_scales() -> usize {
    3
}
fn default_orientations() -> usize {
    crate::gabor::DEFAULT_ORIENTATIONS
}
fn default_patch_side() -> usize {
    DEFAULT_PATCH_SIDE
}
fn default_compactness() -> f64 {
    DEFAULT_COMPACTNESS
}
fn default_slic_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_c() -> f64 {
    classifier::DEFAULT_C
}
fn default_epochs() -> usize {
    classifier::DEFAULT_EPOCHS
}
fn default_seed() -> u64 {
    classifier::DEFAULT_SEED
}
fn default_class_names() -> Vec<String> {
    classifier::CLASS_NAMES.iter().map(|s| s.to_string()).collect()
}
fn default_palette() -> Vec<[u8; 3]> {
    DEFAULT_PALETTE.to_vec()
}

/// Every setting of a run. Loaded from JSON; missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_attribute")]
    pub attribute: Attribute,
    #[serde(default = "default_scales")]
    pub scales: usize,
    #[serde(default = "default_orientations")]
    pub orientations: usize,
    #[serde(default = "default_patch_side")]
    pub patch_side: usize,
    /// Target superpixel count; `None` means one per 2500 pixels.
    #[serde(default)]
    pub superpixels: Option<usize>,
    #[serde(default = "default_compactness")]
    pub compactness: f64,
    #[serde(default = "default_slic_iters")]
    pub slic_iters: usize,
    #[serde(default = "default_c")]
    pub svm_c: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Class names by id.
    #[serde(default = "default_class_names")]
    pub class_names: Vec<String>,
    /// Overlay color per class id.
    #[serde(default = "default_palette")]
    pub palette: Vec<[u8; 3]>,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub section: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| TexlabError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| TexlabError::io(path, e))?;
        RunConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TexlabError::Config(m));
        if self.attribute != Attribute::Amplitude && self.scales == 0 {
            return bad("scales must be positive".into());
        }
        if self.orientations == 0 || self.slic_iters == 0 || self.epochs == 0 {
            return bad("orientations, slic_iters and epochs must be positive".into());
        }
        if self.patch_side == 0 || self.patch_side.is_multiple_of(2) {
            return bad(format!("patch_side must be odd and positive, got {}", self.patch_side));
        }
        if self.superpixels == Some(0) {
            return bad("superpixels must be positive".into());
        }
        if !(self.compactness.is_finite() && self.compactness > 0.0) || !(self.svm_c.is_finite() && self.svm_c > 0.0) {
            return bad("compactness and svm_c must be positive".into());
        }
        if self.class_names.is_empty() || self.palette.len() < self.class_names.len() {
            return bad(format!(
                "palette has {} colors for {} classes",
                self.palette.len(),
                self.class_names.len()
            ));
        }
        Ok(())
    }

    pub fn attribute_config(&self) -> AttributeConfig {
        AttributeConfig {
            attribute: self.attribute,
            scales: self.scales,
            orientations: self.orientations,
        }
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            c: self.svm_c,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn slic_params(&self, width: usize, height: usize) -> SlicParams {
        let mut p = match self.superpixels {
            Some(n) => SlicParams::new(n),
            None => SlicParams::for_size(width, height),
        };
        p.compactness = self.compactness;
        p.max_iters = self.slic_iters;
        p
    }

    pub fn class_name(&self, id: usize) -> String {
        self.class_names
            .get(id)
            .cloned()
            .unwrap_or_else(|| classifier::default_class_name(id))
    }
}

/// Attribute names that are not known are configuration errors here.
pub fn parse_attribute(name: &str) -> Result<Attribute> {
    name.parse()
        .map_err(|_| TexlabError::Config(format!("unknown attribute {name:?}")))
}

fn is_raster_file(path: &Path) -> bool {
    RasterFormat::from_path(path).is_ok() && path.is_file()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| TexlabError::io(dir, e))? {
        out.push(entry.map_err(|e| TexlabError::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Training samples found under a dataset root.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub files: Vec<PathBuf>,
    pub labels: Vec<usize>,
    /// Class id to name for every class folder found.
    pub classes: BTreeMap<usize, String>,
}

impl Dataset {
    pub fn counts(&self) -> Vec<(usize, String, usize)> {
        self.classes
            .iter()
            .map(|(&id, name)| (id, name.clone(), self.labels.iter().filter(|&&l| l == id).count()))
            .collect()
    }
}

/// One subdirectory per class. Folder names listed in the config keep
/// their configured id; other names follow in sorted order.
pub fn scan_dataset(root: &Path, config: &RunConfig) -> Result<Dataset> {
    let dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if dirs.is_empty() {
        return Err(TexlabError::Training(format!(
            "{} contains no class folders",
            root.display()
        )));
    }
    let mut next_id = config.class_names.len();
    let mut classes = BTreeMap::new();
    let mut files = Vec::new();
    let mut labels = Vec::new();
    for dir in dirs {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let id = match config.class_names.iter().position(|n| *n == name) {
            Some(id) => id,
            None => {
                next_id += 1;
                next_id - 1
            }
        };
        let members: Vec<PathBuf> = sorted_entries(&dir)?.into_iter().filter(|p| is_raster_file(p)).collect();
        if members.is_empty() {
            return Err(TexlabError::Training(format!(
                "class folder {} holds no .pgm or .sgrd patches",
                dir.display()
            )));
        }
        labels.extend(std::iter::repeat_n(id, members.len()));
        files.extend(members);
        classes.insert(id, name);
    }
    Ok(Dataset { files, labels, classes })
}

/// Reads a patch file, checks its size, tapers it and extracts features.
pub fn patch_file_features(path: &Path, config: &RunConfig) -> Result<Vec<f64>> {
    let raster = read_raster_auto(path)?;
    let side = config.patch_side;
    if raster.shape() != (side, side) {
        return Err(TexlabError::format(format!(
            "{}: patch is {}x{}, expected {side}x{side}",
            path.display(),
            raster.width(),
            raster.height()
        )));
    }
    raster_patch_features(&raster, config)
}

pub fn raster_patch_features(raster: &Raster, config: &RunConfig) -> Result<Vec<f64>> {
    let patch = taper_full_patch(raster)?;
    Ok(attribute_features(&patch, &config.attribute_config())?.values)
}

pub fn dataset_features(dataset: &Dataset, config: &RunConfig) -> Result<Vec<Vec<f64>>> {
    dataset
        .files
        .par_iter()
        .map(|f| patch_file_features(f, config))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model: SvmModel,
    /// `(id, name, count)` per class.
    pub counts: Vec<(usize, String, usize)>,
}

/// Trains from feature rows. Class names come from `names`.
pub fn train_from_rows(
    rows: &[Vec<f64>],
    labels: &[usize],
    config: &RunConfig,
    names: &BTreeMap<usize, String>,
) -> Result<SvmModel> {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let (model, _) = classifier::train_rows(&refs, labels, config.attribute, &config.train_params(), |id| {
        names.get(&id).cloned().unwrap_or_else(|| config.class_name(id))
    })?;
    Ok(model)
}

pub fn cmd_train(config: &RunConfig, dataset_root: &Path, model_out: &Path) -> Result<TrainSummary> {
    config.validate()?;
    let dataset = scan_dataset(dataset_root, config)?;
    let rows = dataset_features(&dataset, config)?;
    let model = train_from_rows(&rows, &dataset.labels, config, &dataset.classes)?;
    model.save(model_out)?;
    Ok(TrainSummary {
        model,
        counts: dataset.counts(),
    })
}

#[derive(Debug, Clone)]
pub struct LabelOutcome {
    pub labels: LabelMap,
    pub superpixels: SuperpixelMap,
    /// Predicted class per superpixel id.
    pub predictions: Vec<usize>,
}

fn check_model(config: &RunConfig, model: &SvmModel) -> Result<()> {
    if model.attribute != config.attribute {
        return Err(TexlabError::Config(format!(
            "model was trained on {} features but the config asks for {}",
            model.attribute, config.attribute
        )));
    }
    let expected = feature_length(&config.attribute_config(), config.patch_side)?;
    if model.feature_len != expected {
        return Err(TexlabError::Config(format!(
            "model expects {} features, config produces {expected}",
            model.feature_len
        )));
    }
    Ok(())
}

/// Oversegments the section, classifies the tapered patch around every
/// superpixel anchor and paints each superpixel with its class.
pub fn label_section(section: &Raster, model: &SvmModel, config: &RunConfig) -> Result<LabelOutcome> {
    config.validate()?;
    check_model(config, model)?;
    let (h, w) = section.shape();
    let superpixels = slic_segment(section, &config.slic_params(w, h))?;
    let anchors = patch_anchors(&superpixels);
    let attr = config.attribute_config();
    let predictions: Vec<usize> = anchors
        .par_iter()
        .map(|&center| {
            let patch = extract_weighted_patch(section, center, config.patch_side)?;
            let f = attribute_features(&patch, &attr)?;
            Ok(model.predict(&f.values)?.class_id)
        })
        .collect::<Result<_>>()?;
    let labels = superpixels.labels.iter().map(|&s| predictions[s]).collect();
    Ok(LabelOutcome {
        labels: LabelMap::new(w, h, labels)?,
        superpixels,
        predictions,
    })
}

/// Section amplitude scaled to `[0, 1]` with superpixel boundaries white.
pub fn boundary_image(section: &Raster, map: &SuperpixelMap) -> Raster {
    let (lo, hi) = section
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mask = map.boundary_mask();
    let data = section
        .data()
        .iter()
        .zip(mask)
        .map(|(&v, edge)| if edge { 1.0 } else { 0.8 * (v - lo) / span })
        .collect();
    Raster::new(section.width(), section.height(), data).expect("same shape as section")
}

#[derive(Debug, Clone, Default)]
pub struct LabelPaths {
    pub labels: PathBuf,
    pub overlay: Option<PathBuf>,
    /// Writes `<prefix>_superpixels.sgrd` and `<prefix>_boundaries.pgm`.
    pub superpixel_prefix: Option<PathBuf>,
}

pub fn cmd_label(config: &RunConfig, section_path: &Path, model_path: &Path, out: &LabelPaths) -> Result<LabelOutcome> {
    let model = SvmModel::load(model_path)?;
    let section = read_raster_auto(section_path)?;
    let outcome = label_section(&section, &model, config)?;
    outcome.labels.write_sgrd(&out.labels)?;
    if let Some(p) = &out.overlay {
        let rgb = label_overlay(&outcome.labels.labels, &config.palette);
        write_ppm(p, section.width(), section.height(), &rgb)?;
    }
    if let Some(prefix) = &out.superpixel_prefix {
        let sp = &outcome.superpixels;
        let ids = Raster::new(sp.width, sp.height, sp.labels.iter().map(|&l| l as f64).collect())?;
        write_raster(&ids, with_suffix(prefix, "_superpixels.sgrd"), RasterFormat::Sgrd)?;
        write_raster(
            &boundary_image(&section, sp),
            with_suffix(prefix, "_boundaries.pgm"),
            RasterFormat::Pgm,
        )?;
    }
    Ok(outcome)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Scores prediction/reference pairs. The class count is the configured
/// one, widened if a map holds a larger id.
pub fn evaluate_pairs(pairs: &[(LabelMap, LabelMap)], config: &RunConfig) -> Result<Vec<MetricsReport>> {
    let max_id = pairs
        .iter()
        .flat_map(|(p, r)| p.labels.iter().chain(&r.labels))
        .copied()
        .max()
        .unwrap_or(0);
    let nc = config.class_names.len().max(max_id + 1);
    pairs
        .iter()
        .map(|(p, r)| {
            let mut rep = aggregate_metrics(&confusion_matrix(p, r, nc)?)?;
            rep.class_names = (0..nc).map(|k| config.class_name(k)).collect();
            Ok(rep)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub reports: Vec<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub average: Option<MetricsReport>,
}

impl EvalOutput {
    /// A single report serializes bare; several (or an average) as an
    /// object with `reports` and `average`.
    pub fn to_json(&self) -> String {
        if self.reports.len() == 1 && self.average.is_none() {
            self.reports[0].to_json()
        } else {
            serde_json::to_string_pretty(self).expect("report serializes") + "\n"
        }
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for (k, r) in self.reports.iter().enumerate() {
            if self.reports.len() > 1 {
                s.push_str(&format!("pair {k}\n"));
            }
            s.push_str(&r.to_table());
        }
        if let Some(a) = &self.average {
            s.push_str("average\n");
            s.push_str(&a.to_table());
        }
        s
    }
}

pub fn cmd_eval(config: &RunConfig, pairs: &[(PathBuf, PathBuf)], average: bool) -> Result<EvalOutput> {
    if pairs.is_empty() {
        return Err(TexlabError::arg("eval needs at least one prediction/reference pair"));
    }
    let maps = pairs
        .iter()
        .map(|(p, r)| Ok((LabelMap::read(p)?, LabelMap::read(r)?)))
        .collect::<Result<Vec<_>>>()?;
    let reports = evaluate_pairs(&maps, config)?;
    let average = if average { Some(average_reports(&reports)?) } else { None };
    Ok(EvalOutput { reports, average })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandIndexEntry {
    pub file: String,
    pub name: String,
    pub attribute: Attribute,
    pub scale: usize,
    pub orientation: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Writes one SGRD per subband (complex bands by modulus) plus
/// `index.json`.
pub fn cmd_decompose(config: &RunConfig, image: &Path, out_dir: &Path) -> Result<Vec<BandIndexEntry>> {
    config.validate()?;
    let raster = read_raster_auto(image)?;
    let set = decompose(&raster, &config.attribute_config())?;
    fs::create_dir_all(out_dir).map_err(|e| TexlabError::io(out_dir, e))?;
    let mut index = Vec::with_capacity(set.len());
    for band in set.iter() {
        let file = format!("{}.sgrd", band.name);
        write_raster(&band.feature_grid(), out_dir.join(&file), RasterFormat::Sgrd)?;
        let (rows, cols) = band.shape();
        index.push(BandIndexEntry {
            file,
            name: band.name.clone(),
            attribute: config.attribute,
            scale: band.scale,
            orientation: band.orientation,
            rows,
            cols,
        });
    }
    let path = out_dir.join("index.json");
    let text = serde_json::to_string_pretty(&index).expect("index serializes") + "\n";
    fs::write(&path, text).map_err(|e| TexlabError::io(&path, e))?;
    Ok(index)
}

/// Feature CSV. A directory input is read as a dataset (rows carry class
/// ids); plain files get label -1.
pub fn cmd_features(config: &RunConfig, inputs: &[PathBuf], out: &Path) -> Result<usize> {
    config.validate()?;
    let mut files = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let ds = scan_dataset(input, config)?;
            labels.extend(ds.labels.iter().map(|&l| l as i64));
            files.extend(ds.files);
        } else {
            files.push(input.clone());
            labels.push(-1);
        }
    }
    let rows: Vec<Vec<f64>> = files
        .par_iter()
        .map(|f| patch_file_features(f, config))
        .collect::<Result<_>>()?;
    let mut text = String::new();
    for (label, row) in labels.iter().zip(&rows) {
        text.push_str(&label.to_string());
        for v in row {
            text.push(',');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    fs::write(out, text).map_err(|e| TexlabError::io(out, e))?;
    Ok(rows.len())
}
