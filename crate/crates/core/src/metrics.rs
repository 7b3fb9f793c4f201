//! Segmentation scores computed from a confusion matrix: pixel accuracy,
//! per-class intersection over union, its mean and its frequency-weighted
//! mean.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::default_class_name;
use crate::error::{Result, TexlabError};
use crate::imagecore::{read_raster_auto, write_raster, Raster, RasterFormat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<usize>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(TexlabError::arg(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        Ok(LabelMap { width, height, labels })
    }

    pub fn to_raster(&self) -> Raster {
        Raster::new(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l as f64).collect(),
        )
        .expect("shape checked at construction")
    }

    /// Every value must be a nonnegative integer.
    pub fn from_raster(raster: &Raster) -> Result<Self> {
        let labels = raster
            .data()
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(TexlabError::format(format!("label value {v} is not a class id")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        LabelMap::new(raster.width(), raster.height(), labels)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        LabelMap::from_raster(&read_raster_auto(path)?)
    }

    pub fn write_sgrd(&self, path: impl AsRef<Path>) -> Result<()> {
        write_raster(&self.to_raster(), path, RasterFormat::Sgrd)
    }
}

/// Square matrix, `counts[i][j]` = pixels with reference `i` predicted `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: Vec<Vec<u64>>,
}

impl Confusion {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

pub fn confusion_matrix(pred: &LabelMap, reference: &LabelMap, n_classes: usize) -> Result<Confusion> {
    if (pred.width, pred.height) != (reference.width, reference.height) {
        return Err(TexlabError::arg(format!(
            "prediction is {}x{} but reference is {}x{}",
            pred.width, pred.height, reference.width, reference.height
        )));
    }
    confusion_from_slices(&pred.labels, &reference.labels, n_classes)
}

pub fn confusion_from_slices(pred: &[usize], reference: &[usize], n_classes: usize) -> Result<Confusion> {
    if pred.len() != reference.len() {
        return Err(TexlabError::arg("label arrays differ in length"));
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &r) in pred.iter().zip(reference) {
        if p >= n_classes || r >= n_classes {
            return Err(TexlabError::arg(format!(
                "class id {} outside [0, {n_classes})",
                p.max(r)
            )));
        }
        counts[r][p] += 1;
    }
    Ok(Confusion { counts })
}

pub fn pixel_accuracy(confusion: &Confusion) -> Result<f64> {
    let total = confusion.total();
    if total == 0 {
        return Err(TexlabError::arg("empty confusion matrix"));
    }
    let diag: u64 = (0..confusion.num_classes()).map(|i| confusion.counts[i][i]).sum();
    Ok(diag as f64 / total as f64)
}

/// `None` for classes absent from both maps.
pub fn intersection_over_union(confusion: &Confusion) -> Vec<Option<f64>> {
    (0..confusion.num_classes())
        .map(|i| {
            let inter = confusion.counts[i][i];
            let union = confusion.row_sum(i) + confusion.col_sum(i) - inter;
            (union > 0).then(|| inter as f64 / union as f64)
        })
        .collect()
}

/// Mean over the applicable entries; `None` if there are none.
pub fn mean_iu(iu: &[Option<f64>]) -> Option<f64> {
    let vals: Vec<f64> = iu.iter().flatten().copied().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Weighted by reference class sizes over the applicable classes.
pub fn frequency_weighted_iu(iu: &[Option<f64>], ref_sizes: &[u64]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (v, &n) in iu.iter().zip(ref_sizes) {
        if let Some(v) = v {
            num += n as f64 * v;
            den += n as f64;
        }
    }
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    pub confusion: Confusion,
    pub pa: f64,
    pub iu: Vec<Option<f64>>,
    pub miu: f64,
    pub fwiu: f64,
    /// Reference pixel share of each class.
    pub frequency: Vec<f64>,
}

pub fn aggregate_metrics(confusion: &Confusion) -> Result<MetricsReport> {
    let pa = pixel_accuracy(confusion)?;
    let iu = intersection_over_union(confusion);
    let total = confusion.total() as f64;
    let sizes: Vec<u64> = (0..confusion.num_classes()).map(|i| confusion.row_sum(i)).collect();
    Ok(MetricsReport {
        class_names: (0..confusion.num_classes()).map(default_class_name).collect(),
        confusion: confusion.clone(),
        pa,
        miu: mean_iu(&iu).expect("nonempty matrix has an applicable class"),
        fwiu: frequency_weighted_iu(&iu, &sizes).expect("nonempty matrix has reference pixels"),
        frequency: sizes.iter().map(|&n| n as f64 / total).collect(),
        iu,
    })
}

/// Arithmetic mean of each metric over several reports. Per-class IU is
/// averaged over the reports where it is applicable; confusion counts are
/// summed.
pub fn average_reports(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports
        .first()
        .ok_or_else(|| TexlabError::arg("no reports to average"))?;
    let nc = first.confusion.num_classes();
    if reports.iter().any(|r| r.confusion.num_classes() != nc) {
        return Err(TexlabError::arg("reports have different class counts"));
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let mut counts = vec![vec![0u64; nc]; nc];
    for r in reports {
        for (i, row) in r.confusion.counts.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                counts[i][j] += v;
            }
        }
    }
    let iu = (0..nc)
        .map(|k| mean_iu(&reports.iter().map(|r| r.iu[k]).collect::<Vec<_>>()))
        .collect();
    Ok(MetricsReport {
        class_names: first.class_names.clone(),
        confusion: Confusion { counts },
        pa: mean(&|r| r.pa),
        iu,
        miu: mean(&|r| r.miu),
        fwiu: mean(&|r| r.fwiu),
        frequency: (0..nc).map(|k| mean(&|r| r.frequency[k])).collect(),
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Aligned text table: one header row, one row of values.
    pub fn to_table(&self) -> String {
        let mut heads = vec!["PA".to_string()];
        let mut vals = vec![format!("{:.4}", self.pa)];
        for (name, iu) in self.class_names.iter().zip(&self.iu) {
            heads.push(format!("IU {name}"));
            vals.push(iu.map_or("n/a".to_string(), |v| format!("{v:.4}")));
        }
        heads.push("MIU".into());
        vals.push(format!("{:.4}", self.miu));
        heads.push("FWIU".into());
        vals.push(format!("{:.4}", self.fwiu));
        for (name, f) in self.class_names.iter().zip(&self.frequency) {
            heads.push(format!("freq {name}"));
            vals.push(format!("{f:.4}"));
        }
        let widths: Vec<usize> = heads.iter().zip(&vals).map(|(h, v)| h.len().max(v.len())).collect();
        let mut out = String::new();
        for row in [&heads, &vals] {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strip() -> (LabelMap, LabelMap) {
        let gt = LabelMap::new(4, 1, vec![0, 0, 1, 1]).unwrap();
        let pred = LabelMap::new(4, 1, vec![0, 1, 1, 1]).unwrap();
        (pred, gt)
    }

    #[test]
    fn strip_example() {
        let (pred, gt) = strip();
        let c = confusion_matrix(&pred, &gt, 2).unwrap();
        assert_eq!(c.counts, vec![vec![1, 1], vec![0, 2]]);
        assert_eq!(pixel_accuracy(&c).unwrap(), 0.75);
        let iu = intersection_over_union(&c);
        assert_eq!(iu, vec![Some(0.5), Some(2.0 / 3.0)]);
        let r = aggregate_metrics(&c).unwrap();
        assert!((r.miu - 7.0 / 12.0).abs() < 1e-15);
        assert!((r.fwiu - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(r.frequency, vec![0.5, 0.5]);
    }

    #[test]
    fn perfect_and_complement() {
        let a = LabelMap::new(3, 2, vec![0, 1, 2, 2, 1, 0]).unwrap();
        let c = confusion_matrix(&a, &a, 3).unwrap();
        assert_eq!(c.counts, vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
        let r = aggregate_metrics(&c).unwrap();
        assert_eq!((r.pa, r.miu, r.fwiu), (1.0, 1.0, 1.0));
        let x = LabelMap::new(2, 1, vec![0, 1]).unwrap();
        let y = LabelMap::new(2, 1, vec![1, 0]).unwrap();
        let c = confusion_matrix(&x, &y, 2).unwrap();
        assert_eq!(pixel_accuracy(&c).unwrap(), 0.0);
        assert_eq!(intersection_over_union(&c), vec![Some(0.0), Some(0.0)]);
    }

    #[test]
    fn single_class_and_absent_classes() {
        let a = LabelMap::new(2, 2, vec![1; 4]).unwrap();
        let c = confusion_matrix(&a, &a, 3).unwrap();
        assert_eq!(c.counts[1][1], 4);
        assert_eq!(c.total(), 4);
        let r = aggregate_metrics(&c).unwrap();
        assert_eq!(r.iu, vec![None, Some(1.0), None]);
        assert_eq!(r.miu, 1.0);
    }

    #[test]
    fn errors() {
        let a = LabelMap::new(2, 1, vec![0, 1]).unwrap();
        let b = LabelMap::new(1, 2, vec![0, 1]).unwrap();
        assert!(confusion_matrix(&a, &b, 2).is_err());
        assert!(confusion_matrix(&a, &a, 1).is_err());
        assert!(pixel_accuracy(&Confusion { counts: vec![vec![0]] }).is_err());
        assert!(LabelMap::new(2, 2, vec![0]).is_err());
        assert!(LabelMap::from_raster(&Raster::new(1, 1, vec![0.5]).unwrap()).is_err());
    }

    #[test]
    fn table_one_rows() {
        let curvelet = [Some(0.7672), Some(0.5128), Some(0.2656), Some(0.5261)];
        assert!((mean_iu(&curvelet).unwrap() - 0.5179).abs() <= 5e-5);
        let gabor = [Some(0.7070), Some(0.4645), Some(0.2257), Some(0.4724)];
        assert!((mean_iu(&gabor).unwrap() - 0.4674).abs() <= 5e-5);
    }

    #[test]
    fn averaging_identical_reports() {
        let (pred, gt) = strip();
        let r = aggregate_metrics(&confusion_matrix(&pred, &gt, 2).unwrap()).unwrap();
        let avg = average_reports(&[r.clone(), r.clone()]).unwrap();
        assert_eq!((avg.pa, avg.miu, avg.fwiu, &avg.iu), (r.pa, r.miu, r.fwiu, &r.iu));
        assert_eq!(avg.frequency, r.frequency);
    }

    #[test]
    fn table_text() {
        let (pred, gt) = strip();
        let r = aggregate_metrics(&confusion_matrix(&pred, &gt, 2).unwrap()).unwrap();
        let t = r.to_table();
        assert!(t.contains("0.7500") && t.contains("0.5833") && t.contains("IU chaotic"));
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].len(), lines[1].len());
        let back: MetricsReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn permutation_invariance(
            nc in 2usize..5,
            seed in prop::collection::vec(0usize..100, 20),
            perm_seed in 0usize..24,
        ) {
            let pred: Vec<usize> = seed.iter().map(|v| v % nc).collect();
            let gt: Vec<usize> = seed.iter().map(|v| (v / 7) % nc).collect();
            let mut perm: Vec<usize> = (0..nc).collect();
            perm.rotate_left(perm_seed % nc);
            if perm_seed % 2 == 1 {
                perm.swap(0, nc - 1);
            }
            let a = aggregate_metrics(&confusion_from_slices(&pred, &gt, nc).unwrap()).unwrap();
            let pp: Vec<usize> = pred.iter().map(|&v| perm[v]).collect();
            let pg: Vec<usize> = gt.iter().map(|&v| perm[v]).collect();
            let b = aggregate_metrics(&confusion_from_slices(&pp, &pg, nc).unwrap()).unwrap();
            prop_assert_eq!(a.pa, b.pa);
            prop_assert!((a.miu - b.miu).abs() < 1e-12);
            prop_assert!((a.fwiu - b.fwiu).abs() < 1e-12);
            for (k, &pk) in perm.iter().enumerate() {
                prop_assert_eq!(a.iu[k], b.iu[pk]);
            }
        }
    }
}
