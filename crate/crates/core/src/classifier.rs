//! One-vs-all linear SVMs trained by stochastic subgradient descent.
//!
//! Each binary problem minimizes `1/2 |w|^2 + C * sum hinge(y (w.x + b))`
//! over z-scored features. Weight steps follow `eta_t = 1 / (lambda t)`
//! with `lambda = 1 / (C n)`; the bias is an unregularized explicit term
//! set to its exact minimizer at the end of every epoch. After
//! every epoch the full objective is evaluated and the best iterate so far
//! is retained, so the recorded history never increases.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TexlabError};
use crate::features::{Attribute, FeatureVector};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_SEED: u64 = 7;
pub const STD_FLOOR: f64 = 1e-12;
/// Relative objective change between epochs below which training stops.
pub const TOLERANCE: f64 = 1e-6;

pub const CLASS_NAMES: [&str; 4] = ["chaotic", "faults", "salt", "other"];

/// Default name of a class id: the four structure classes, then `class{id}`.
pub fn default_class_name(id: usize) -> String {
    CLASS_NAMES
        .get(id)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("class{id}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Standardizer {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmClass {
    pub id: usize,
    pub name: String,
    pub bias: f64,
    pub weights: Vec<f64>,
}

impl SvmClass {
    fn score(&self, z: &[f64]) -> f64 {
        dot(&self.weights, z) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub attribute: Attribute,
    pub feature_len: usize,
    /// Sorted by id.
    pub classes: Vec<SvmClass>,
    pub standardizer: Standardizer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            c: DEFAULT_C,
            epochs: DEFAULT_EPOCHS,
            seed: DEFAULT_SEED,
        }
    }
}

/// Per-class optimization trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTrace {
    pub id: usize,
    /// Best objective after each epoch.
    pub objective: Vec<f64>,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_id: usize,
    /// In model class order.
    pub scores: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn objective(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], c: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

/// Bias minimizing the hinge sum for fixed scores `s_i = w.x_i`. Every
/// sample contributes one breakpoint where its slope switches on or off;
/// with `P` positives the minimizers span the `P`-th to `(P+1)`-th smallest
/// breakpoint and the midpoint is returned.
fn optimal_bias(scores: &[f64], ys: &[f64]) -> f64 {
    let mut events: Vec<f64> = scores
        .iter()
        .zip(ys)
        .map(|(s, y)| if *y > 0.0 { 1.0 - s } else { -1.0 - s })
        .collect();
    events.sort_by(f64::total_cmp);
    let p = ys.iter().filter(|y| **y > 0.0).count();
    0.5 * (events[p - 1] + events[p])
}

/// Pegasos-style updates for `w`; the bias is re-solved exactly after each
/// epoch, since the decaying step schedule cannot pull an unregularized
/// bias back from its large early moves.
fn train_binary(xs: &[Vec<f64>], ys: &[f64], params: &TrainParams, seed: u64) -> (Vec<f64>, f64, Vec<f64>) {
    let n = xs.len();
    let d = xs[0].len();
    let lambda = 1.0 / (params.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let mut best = (w.clone(), b, objective(&w, b, xs, ys, params.c));
    let mut history = Vec::with_capacity(params.epochs);
    let mut prev = best.2;
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * (dot(&w, &xs[i]) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                let step = eta * ys[i];
                for (v, x) in w.iter_mut().zip(&xs[i]) {
                    *v += step * x;
                }
            }
        }
        let scores: Vec<f64> = xs.iter().map(|x| dot(&w, x)).collect();
        b = optimal_bias(&scores, ys);
        let obj = objective(&w, b, xs, ys, params.c);
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
        history.push(best.2);
        let change = (prev - obj).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = obj;
        if change < TOLERANCE {
            break;
        }
    }
    (best.0, best.1, history)
}

/// Trains one binary SVM per class present in `labels`.
pub fn train_classifier(
    features: &[FeatureVector],
    labels: &[usize],
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmModel> {
    let params = TrainParams { c, epochs, seed };
    let attribute = features
        .first()
        .map(|f| f.attribute)
        .ok_or_else(|| TexlabError::Training("no training samples".into()))?;
    let rows: Vec<&[f64]> = features.iter().map(|f| f.values.as_slice()).collect();
    Ok(train_rows(&rows, labels, attribute, &params, default_class_name)?.0)
}

/// Trains on raw rows. `names` maps class ids to names.
pub fn train_rows(
    rows: &[&[f64]],
    labels: &[usize],
    attribute: Attribute,
    params: &TrainParams,
    names: impl Fn(usize) -> String + Sync,
) -> Result<(SvmModel, Vec<ClassTrace>)> {
    if rows.len() != labels.len() {
        return Err(TexlabError::arg(format!(
            "{} feature vectors but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if rows.is_empty() {
        return Err(TexlabError::Training("no training samples".into()));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(TexlabError::arg(format!(
            "feature vector {bad} has length {}, expected {d}",
            rows[bad].len()
        )));
    }
    if !(params.c.is_finite() && params.c > 0.0) || params.epochs == 0 {
        return Err(TexlabError::arg("C and epochs must be positive"));
    }
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(TexlabError::Training(format!(
            "need at least two classes, found {}",
            ids.len()
        )));
    }

    let standardizer = Standardizer::fit(rows);
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.apply(r)).collect();
    let trained: Vec<(SvmClass, ClassTrace)> = ids
        .par_iter()
        .map(|&id| {
            let ys: Vec<f64> = labels.iter().map(|&l| if l == id { 1.0 } else { -1.0 }).collect();
            let class_seed = params.seed.wrapping_add((id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (weights, bias, objective) = train_binary(&xs, &ys, params, class_seed);
            let epochs_run = objective.len();
            (
                SvmClass {
                    id,
                    name: names(id),
                    bias,
                    weights,
                },
                ClassTrace {
                    id,
                    objective,
                    epochs_run,
                },
            )
        })
        .collect();
    let (classes, traces) = trained.into_iter().unzip();
    Ok((
        SvmModel {
            attribute,
            feature_len: d,
            classes,
            standardizer,
        },
        traces,
    ))
}

/// Argmax of per-class scores; ties go to the lowest class id.
pub fn predict(model: &SvmModel, feature: &[f64]) -> Result<Prediction> {
    model.predict(feature)
}

impl SvmModel {
    pub fn class_ids(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.id).collect()
    }

    pub fn scores(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.feature_len {
            return Err(TexlabError::arg(format!(
                "feature length {} does not match model length {}",
                feature.len(),
                self.feature_len
            )));
        }
        let z = self.standardizer.apply(feature);
        Ok(self.classes.iter().map(|c| c.score(&z)).collect())
    }

    pub fn predict(&self, feature: &[f64]) -> Result<Prediction> {
        let scores = self.scores(feature)?;
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            let cur = &self.classes[best];
            let better = *s > scores[best] || (*s == scores[best] && self.classes[k].id < cur.id);
            if better {
                best = k;
            }
        }
        Ok(Prediction {
            class_id: self.classes[best].id,
            scores,
        })
    }

    fn validate(&self) -> Result<()> {
        let d = self.feature_len;
        let ok = self.standardizer.mean.len() == d
            && self.standardizer.std.len() == d
            && self.standardizer.std.iter().all(|&s| s > 0.0)
            && self.classes.iter().all(|c| c.weights.len() == d)
            && self.classes.windows(2).all(|w| w[0].id < w[1].id)
            && !self.classes.is_empty();
        if ok {
            Ok(())
        } else {
            Err(TexlabError::format("inconsistent model dimensions"))
        }
    }

    /// JSON with every number printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        fn num(v: f64) -> String {
            format!("{v:.16e}")
        }
        fn list(vs: &[f64]) -> String {
            let items: Vec<String> = vs.iter().map(|&v| num(v)).collect();
            format!("[{}]", items.join(", "))
        }
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"attribute\": \"{}\",", self.attribute);
        let _ = writeln!(s, "  \"feature_len\": {},", self.feature_len);
        s.push_str("  \"classes\": [\n");
        for (k, c) in self.classes.iter().enumerate() {
            let _ = write!(
                s,
                "    {{\"id\": {}, \"name\": {}, \"bias\": {}, \"weights\": {}}}",
                c.id,
                serde_json::to_string(&c.name).expect("string serializes"),
                num(c.bias),
                list(&c.weights)
            );
            s.push_str(if k + 1 < self.classes.len() { ",\n" } else { "\n" });
        }
        s.push_str("  ],\n");
        s.push_str("  \"standardizer\": {\n");
        let _ = writeln!(s, "    \"mean\": {},", list(&self.standardizer.mean));
        let _ = writeln!(s, "    \"std\": {}", list(&self.standardizer.std));
        s.push_str("  }\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<SvmModel> {
        let model: SvmModel =
            serde_json::from_str(text).map_err(|e| TexlabError::format(format!("model json: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| TexlabError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SvmModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TexlabError::io(path, e))?;
        SvmModel::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(per_class: usize, sigma: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (id, (cx, cy)) in corners.iter().enumerate() {
            for _ in 0..per_class {
                xs.push(vec![cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)]);
                ys.push(id);
            }
        }
        (xs, ys)
    }

    fn fit(xs: &[Vec<f64>], ys: &[usize]) -> (SvmModel, Vec<ClassTrace>) {
        let rows: Vec<&[f64]> = xs.iter().map(|r| r.as_slice()).collect();
        train_rows(&rows, ys, Attribute::Amplitude, &TrainParams::default(), default_class_name).unwrap()
    }

    fn accuracy(model: &SvmModel, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let hits = xs
            .iter()
            .zip(ys)
            .filter(|(x, &y)| model.predict(x).unwrap().class_id == y)
            .count();
        hits as f64 / ys.len() as f64
    }

    #[test]
    fn separates_four_blobs() {
        let (xs, ys) = blobs(100, 0.1, 7);
        let (model, traces) = fit(&xs, &ys);
        assert_eq!(accuracy(&model, &xs, &ys), 1.0);
        assert_eq!(model.class_ids(), vec![0, 1, 2, 3]);
        assert_eq!(model.classes[2].name, "salt");
        for t in traces {
            assert!(t.epochs_run <= DEFAULT_EPOCHS);
            for w in t.objective.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_training() {
        let (xs, ys) = blobs(30, 0.2, 3);
        assert_eq!(fit(&xs, &ys).0.to_json(), fit(&xs, &ys).0.to_json());
    }

    #[test]
    fn duplicated_data_keeps_decisions() {
        let (xs, ys) = blobs(100, 0.1, 7);
        let (a, _) = fit(&xs, &ys);
        let xs2: Vec<Vec<f64>> = xs.iter().chain(&xs).cloned().collect();
        let ys2: Vec<usize> = ys.iter().chain(&ys).copied().collect();
        let (b, _) = fit(&xs2, &ys2);
        for i in 0..11 {
            for j in 0..11 {
                // grid over the blob centers, away from the decision boundaries
                let x = [i as f64 * 0.1 - 0.0, j as f64 * 0.1];
                if (x[0] - 0.5).abs() < 0.15 || (x[1] - 0.5).abs() < 0.15 {
                    continue;
                }
                assert_eq!(a.predict(&x).unwrap().class_id, b.predict(&x).unwrap().class_id);
            }
        }
    }

    #[test]
    fn bias_minimizes_hinge_sum() {
        let scores = [2.0, 0.5, -0.3, -1.5, 0.1];
        let ys = [1.0, 1.0, -1.0, -1.0, -1.0];
        let f = |b: f64| -> f64 {
            scores.iter().zip(&ys).map(|(s, y)| (1.0 - y * (s + b)).max(0.0)).sum()
        };
        let b = optimal_bias(&scores, &ys);
        for k in -400..400 {
            assert!(f(b) <= f(k as f64 * 0.01) + 1e-12);
        }
        // separable scores: midpoint of the flat region
        assert_eq!(optimal_bias(&[3.0, -3.0], &[1.0, -1.0]), 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let rows: Vec<&[f64]> = vec![&[1.0], &[2.0]];
        let err = train_rows(&rows, &[1, 1], Attribute::Dwt, &TrainParams::default(), default_class_name);
        assert!(matches!(err, Err(TexlabError::Training(_))));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let rows: Vec<&[f64]> = vec![&[1.0], &[2.0, 3.0]];
        let err = train_rows(&rows, &[0, 1], Attribute::Dwt, &TrainParams::default(), default_class_name);
        assert!(matches!(err, Err(TexlabError::Argument(_))));
    }

    fn hand_model(w1: [f64; 2]) -> SvmModel {
        let classes = (0..4)
            .map(|id| SvmClass {
                id,
                name: default_class_name(id),
                bias: 0.0,
                weights: if id == 1 { w1.to_vec() } else { vec![0.0, 0.0] },
            })
            .collect();
        SvmModel {
            attribute: Attribute::Gabor,
            feature_len: 2,
            classes,
            standardizer: Standardizer {
                mean: vec![1.0, 0.0],
                std: vec![0.5, 1.0],
            },
        }
    }

    #[test]
    fn hand_evaluated_prediction() {
        let m = hand_model([1.0, 0.0]);
        // (2, 0) standardizes to (2, 0)
        let p = m.predict(&[2.0, 0.0]).unwrap();
        assert_eq!(p.class_id, 1);
        assert_eq!(p.scores, vec![0.0, 2.0, 0.0, 0.0]);
        let zero = hand_model([0.0, 0.0]);
        assert_eq!(zero.predict(&[5.0, -3.0]).unwrap().class_id, 0);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn constant_score_shift_keeps_argmax() {
        let mut m = hand_model([1.0, -2.0]);
        m.classes[3].weights = vec![-0.5, 0.7];
        let x = [0.3, 1.9];
        let before = m.predict(&x).unwrap().class_id;
        for c in m.classes.iter_mut() {
            c.bias += 12.5;
        }
        assert_eq!(m.predict(&x).unwrap().class_id, before);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let (xs, ys) = blobs(20, 0.3, 11);
        let (m, _) = fit(&xs, &ys);
        let text = m.to_json();
        let back = SvmModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["classes"].as_array().unwrap().len(), 4);
        assert!(text.contains("e0") || text.contains("e-") || text.contains("e1"));
    }

    #[test]
    fn rejects_corrupt_model() {
        let mut m = hand_model([1.0, 0.0]);
        m.classes[0].weights.push(1.0);
        assert!(SvmModel::from_json(&m.to_json()).is_err());
    }
}
