use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use texlab::imagecore::{read_raster_auto, write_raster, RasterFormat};
use texlab::metrics::LabelMap;
use texlab::pipeline::synthetic::synthetic_texture;
use texlab::Raster;

fn texlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texlab")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `root/<name>/NN.sgrd` with `n` patches of the given class texture.
fn class_folder(root: &Path, name: &str, class: usize, n: usize, side: usize, seed: u64) -> PathBuf {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..n {
        let r = synthetic_texture(class, side, side, &mut rng).unwrap();
        write_raster(&r, dir.join(format!("{k:02}.sgrd")), RasterFormat::Sgrd).unwrap();
    }
    dir
}

fn toy_dataset(root: &Path) {
    class_folder(root, "chaotic", 0, 10, 33, 1);
    class_folder(root, "salt", 2, 10, 33, 2);
}

#[test]
fn train_toy_dataset_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    toy_dataset(&data);
    let m1 = dir.path().join("m1.json");
    let m2 = dir.path().join("m2.json");
    for m in [&m1, &m2] {
        let out = texlab(&["train", "--attr", "dwt", "--patch-side", "33", "--dataset", s(&data), "--model", s(m)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = String::from_utf8_lossy(&out.stdout).into_owned();
        assert!(text.contains("chaotic: 10 patches") && text.contains("salt: 10 patches"), "{text}");
    }
    let bytes = fs::read(&m1).unwrap();
    assert_eq!(bytes, fs::read(&m2).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["attribute"], "dwt");
    let len = v["feature_len"].as_u64().unwrap() as usize;
    let classes = v["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 2);
    assert_eq!((classes[0]["id"].as_u64(), classes[0]["name"].as_str()), (Some(0), Some("chaotic")));
    assert_eq!((classes[1]["id"].as_u64(), classes[1]["name"].as_str()), (Some(2), Some("salt")));
    for c in classes {
        assert_eq!(c["weights"].as_array().unwrap().len(), len);
        assert!(c["bias"].is_f64());
    }
    assert_eq!(v["standardizer"]["mean"].as_array().unwrap().len(), len);
    assert!(v["standardizer"]["std"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap() > 0.0));
}

#[test]
fn train_contract_errors() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one");
    class_folder(&one, "faults", 1, 4, 33, 3);
    let out = texlab(&["train", "--patch-side", "33", "--dataset", s(&one), "--model", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let empty = dir.path().join("empty");
    class_folder(&empty, "faults", 1, 4, 33, 3);
    fs::create_dir_all(empty.join("salt")).unwrap();
    let out = texlab(&["train", "--patch-side", "33", "--dataset", s(&empty), "--model", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("salt"));

    let wrong = dir.path().join("wrong");
    toy_dataset(&wrong);
    let bad = wrong.join("salt").join("odd.sgrd");
    write_raster(&Raster::zeros(31, 33), &bad, RasterFormat::Sgrd).unwrap();
    let out = texlab(&["train", "--patch-side", "33", "--dataset", s(&wrong), "--model", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("odd.sgrd"), "{}", stderr(&out));

    let out = texlab(&["train", "--attr", "fourier", "--dataset", s(&wrong), "--model", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decompose_counts_and_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.sgrd");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    write_raster(&synthetic_texture(0, 99, 99, &mut rng).unwrap(), &img, RasterFormat::Sgrd).unwrap();
    let sgrd_files = |d: &Path| -> Vec<PathBuf> {
        let mut v: Vec<PathBuf> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "sgrd"))
            .collect();
        v.sort();
        v
    };

    let out_dir = dir.path().join("dwt");
    let out = texlab(&["decompose", "--attr", "dwt", "--scales", "3", "--image", s(&img), "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(sgrd_files(&out_dir).len(), 10);
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("index.json")).unwrap()).unwrap();
    assert_eq!(index.as_array().unwrap().len(), 10);
    assert_eq!(index[0]["attribute"], "dwt");

    let out_dir = dir.path().join("pyr");
    let out = texlab(&["decompose", "--attr", "pyramid", "--scales", "4", "--image", s(&img), "--out-dir", s(&out_dir)]);
    assert!(out.status.success());
    let mut sides: Vec<usize> = sgrd_files(&out_dir).iter().map(|p| read_raster_auto(p).unwrap().width()).collect();
    sides.sort_unstable_by(|a, b| b.cmp(a));
    assert_eq!(sides, vec![99, 50, 25, 13]);

    let out_dir = dir.path().join("cur");
    let out = texlab(&["decompose", "--attr", "curvelet", "--scales", "3", "--image", s(&img), "--out-dir", s(&out_dir)]);
    assert!(out.status.success());
    let files = sgrd_files(&out_dir);
    assert_eq!(files.len(), 49);
    assert!(out_dir.join("scale1_wedge0.sgrd").exists() && out_dir.join("scale2_wedge31.sgrd").exists());

    let out = texlab(&["decompose", "--attr", "fourier", "--image", s(&img), "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let out = texlab(&["decompose", "--image", s(&dir.path().join("nope.sgrd")), "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.sgrd");
    let pred = dir.path().join("pred.sgrd");
    LabelMap::new(4, 1, vec![0, 0, 1, 1]).unwrap().write_sgrd(&gt).unwrap();
    LabelMap::new(4, 1, vec![0, 1, 1, 1]).unwrap().write_sgrd(&pred).unwrap();

    let json = dir.path().join("same.json");
    let out = texlab(&["eval", "--pred", s(&gt), "--ref", s(&gt), "--json", s(&json)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    for key in ["pa", "miu", "fwiu"] {
        assert_eq!(v[key].as_f64(), Some(1.0), "{key}");
    }

    let json = dir.path().join("strip.json");
    let out = texlab(&["eval", "--pred", s(&pred), "--ref", s(&gt), "--json", s(&json)]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(table.contains("0.7500") && table.contains("0.5833"), "{table}");
    assert!(table.contains("MIU") && table.contains("FWIU") && table.contains("freq salt"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["pa"].as_f64(), Some(0.75));
    assert!((v["miu"].as_f64().unwrap() - 0.5833).abs() < 5e-5);
    assert_eq!(v["confusion"]["counts"][0], serde_json::json!([1, 1, 0, 0]));

    let json = dir.path().join("avg.json");
    let out = texlab(&[
        "eval", "--pred", s(&pred), "--ref", s(&gt), "--pred", s(&pred), "--ref", s(&gt), "--average", "--json", s(&json),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["average"]["pa"], v["reports"][0]["pa"]);
    assert_eq!(v["average"]["miu"], v["reports"][0]["miu"]);
    assert_eq!(v["average"]["iu"], v["reports"][0]["iu"]);

    let other = dir.path().join("other.sgrd");
    LabelMap::new(2, 2, vec![0, 0, 1, 1]).unwrap().write_sgrd(&other).unwrap();
    let out = texlab(&["eval", "--pred", s(&other), "--ref", s(&gt)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn label_outputs_and_attribute_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    toy_dataset(&data);
    let model = dir.path().join("m.json");
    let out = texlab(&["train", "--attr", "dwt", "--patch-side", "33", "--dataset", s(&data), "--model", s(&model)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let section = synthetic_texture(2, 80, 60, &mut rng).unwrap();
    let sec = dir.path().join("sec.sgrd");
    write_raster(&section, &sec, RasterFormat::Sgrd).unwrap();
    let labels = dir.path().join("labels.sgrd");
    let overlay = dir.path().join("overlay.ppm");
    let prefix = dir.path().join("sp");
    let out = texlab(&[
        "label", "--attr", "dwt", "--patch-side", "33", "--superpixels", "12", "--model", s(&model), "--section", s(&sec),
        "--out", s(&labels), "--overlay", s(&overlay), "--dump-superpixels", s(&prefix),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let map = LabelMap::read(&labels).unwrap();
    assert_eq!((map.width, map.height), (80, 60));
    assert!(map.labels.iter().all(|&l| l == 0 || l == 2));
    let ppm = fs::read(&overlay).unwrap();
    assert!(ppm.starts_with(b"P6\n80 60\n255\n"));
    let body = &ppm[b"P6\n80 60\n255\n".len()..];
    assert_eq!(body.len(), 80 * 60 * 3);
    for (px, &l) in body.chunks(3).zip(&map.labels) {
        assert_eq!(px, if l == 0 { [0, 0, 255] } else { [255, 0, 0] });
    }
    let ids = read_raster_auto(dir.path().join("sp_superpixels.sgrd")).unwrap();
    assert_eq!(ids.shape(), (60, 80));
    let edges = fs::read(dir.path().join("sp_boundaries.pgm")).unwrap();
    assert!(edges.starts_with(b"P5\n80 60\n255\n"));

    let out = texlab(&[
        "label", "--attr", "gabor", "--patch-side", "33", "--model", s(&model), "--section", s(&sec), "--out", s(&labels),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dwt"));
}

#[test]
fn features_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    toy_dataset(&data);
    let single = data.join("salt").join("00.sgrd");
    let csv = dir.path().join("f.csv");
    let out = texlab(&["features", "--attr", "pyramid", "--scales", "2", "--patch-side", "33", "--out", s(&csv), s(&data), s(&single)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 21);
    // 33 + 17 singular values per row, plus the label column
    assert!(rows.iter().all(|r| r.len() == 1 + 33 + 17));
    assert_eq!(rows.iter().filter(|r| r[0] == "0").count(), 10);
    assert_eq!(rows.iter().filter(|r| r[0] == "2").count(), 10);
    assert_eq!(rows[20][0], "-1");
    assert_eq!(rows[20][1..], rows[10][1..]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    toy_dataset(&data);
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"attribute": "pyramid", "scales": 2, "patch_side": 33, "epochs": 20}"#).unwrap();
    let model = dir.path().join("m.json");
    let out = texlab(&["train", "--config", s(&cfg), "--dataset", s(&data), "--model", s(&model)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(v["attribute"], "pyramid");
    let out = texlab(&["train", "--config", s(&cfg), "--attr", "dwt", "--dataset", s(&data), "--model", s(&model)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(v["attribute"], "dwt");

    fs::write(&cfg, r#"{"attribute": "pyramid", "patch_side": 32}"#).unwrap();
    let out = texlab(&["train", "--config", s(&cfg), "--dataset", s(&data), "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
}
