use std::path::Path;
use std::process::{Command, Output};

use rdsc_core::metaimage::{read_mask, read_metaimage, write_metaimage, ElementType};
use rdsc_core::phantom::{phantom_image, sphere_mask};
use rdsc_core::sliding::normalize;
use rdsc_core::{Geometry, Mask3, Spacing3, Volume3};
use serde_json::Value;

fn rdsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdsc")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn geometry(dims: [usize; 3]) -> Geometry {
    Geometry::new(dims, Spacing3::new(0.625, 0.625, 3.6).unwrap(), [1.0, -2.0, 3.0]).unwrap()
}

fn blob(dir: &Path, dims: [usize; 3]) -> (std::path::PathBuf, std::path::PathBuf) {
    let g = geometry(dims);
    let m = sphere_mask(g, g.center(), dims[0] as f64 * 0.625 / 3.0);
    let (img, mask) = (dir.join("img.mhd"), dir.join("mask.mhd"));
    write_metaimage(&phantom_image(&m, 3).unwrap(), &img, ElementType::Short).unwrap();
    write_metaimage(&m, &mask, ElementType::UChar).unwrap();
    (img, mask)
}

#[test]
fn resample_at_own_spacing_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = blob(dir.path(), [20, 18, 6]);
    let out = dir.path().join("out.mhd");
    let o = rdsc(&["resample", "--in", s(&img), "--out", s(&out), "--spacing", "0.625,0.625,3.6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "20 18 6");
    assert_eq!(read_metaimage(&out).unwrap(), read_metaimage(&img).unwrap());
    for mode in ["nearest", "threshold:0.5"] {
        let o = rdsc(&["resample", "--in", s(&img), "--out", s(&out), "--spacing", "twice", "--mode", mode]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "40 36 12");
    }
}

#[test]
fn resample_reports_proposed_dims() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry([512, 512, 32]);
    let input = dir.path().join("big.mhd");
    write_metaimage(&Mask3::empty(g), &input, ElementType::UChar).unwrap();
    let out = dir.path().join("out.mhd");
    let o = rdsc(&["resample", "--in", s(&input), "--out", s(&out), "--mode", "nearest"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1024 1024 77");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.mhd");
    let out = dir.path().join("out.mhd");

    let o = rdsc(&["resample", "--in", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("nope.mhd"));

    assert_eq!(code(&rdsc(&["resample", "--bogus"])), 2);
    assert_eq!(code(&rdsc(&["frobnicate"])), 2);
    let (img, mask) = blob(dir.path(), [12, 12, 4]);
    assert_eq!(code(&rdsc(&["resample", "--in", s(&img), "--out", s(&out), "--mode", "cubic"])), 2);
    assert_eq!(code(&rdsc(&["mclahe", "--in", s(&img), "--out", s(&out), "--bins", "1"])), 2);
    assert_eq!(code(&rdsc(&["--workers", "0", "mclahe", "--in", s(&img), "--out", s(&out)])), 2);

    let other = dir.path().join("other.mhd");
    write_metaimage(&Mask3::empty(geometry([12, 12, 5])), &other, ElementType::UChar).unwrap();
    assert_eq!(code(&rdsc(&["metrics", "--a", s(&mask), "--b", s(&other)])), 4);

    let garbage = dir.path().join("garbage.mhd");
    std::fs::write(&garbage, "NDims = 3\nDimSize = 2 2\n").unwrap();
    assert_eq!(code(&rdsc(&["metrics", "--a", s(&garbage), "--b", s(&mask)])), 3);

    let o = rdsc(&["predict", "--in", s(&img), "--out", s(&out), "--stride", "0,1,1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn metrics_json() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry([6, 6, 3]);
    let a = Mask3::from_fn(g, |[i, _, _]| i < 3);
    let b = Mask3::from_fn(g, |[i, _, _]| i >= 3);
    let c = Mask3::from_fn(g, |[i, j, _]| i < 3 && j < 4 || i == 4);
    for (name, m) in [("a", &a), ("b", &b), ("c", &c)] {
        write_metaimage(m, dir.path().join(format!("{name}.mhd")), ElementType::UChar).unwrap();
    }
    let p = |n: &str| dir.path().join(format!("{n}.mhd")).to_str().unwrap().to_string();
    let run = |x: &str, y: &str, extra: &[&str]| -> Value {
        let mut args = vec!["metrics".to_string(), "--a".into(), p(x), "--b".into(), p(y)];
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = rdsc(&refs);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        serde_json::from_str(&stdout(&o)).unwrap()
    };
    assert_eq!(run("a", "a", &[])["dice"], 1.0);
    assert_eq!(run("a", "b", &[])["dice"], 0.0);

    let v = run("a", "c", &[]);
    let (d, ti) = (v["dice"].as_f64().unwrap(), v["tversky"].as_f64().unwrap());
    let conf = &v["confusion"];
    let (tp, fp, fn_) = (conf["tp"].as_f64().unwrap(), conf["fp"].as_f64().unwrap(), conf["fn"].as_f64().unwrap());
    assert_eq!(tp + fp + fn_ + conf["tn"].as_f64().unwrap(), 108.0);
    assert!((d - 2.0 * tp / (2.0 * tp + fp + fn_)).abs() < 1e-12);
    assert!((ti - d).abs() < 1e-9);

    let j = run("a", "c", &["--tversky", "1,1"])["tversky"].as_f64().unwrap();
    assert!((j - tp / (tp + fp + fn_)).abs() < 1e-12);
    assert!((2.0 * j / (1.0 + j) - d).abs() < 1e-9);
    let w = run("a", "c", &["--tversky", "0.3,0.7"]);
    assert!((w["tversky"].as_f64().unwrap() - tp / (tp + 0.3 * fn_ + 0.7 * fp)).abs() < 1e-12);
}

#[test]
fn mclahe_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry([32, 32, 8]);
    let constant = dir.path().join("const.mhd");
    write_metaimage(&Volume3::filled(g, 40.0), &constant, ElementType::Short).unwrap();
    let out = dir.path().join("out.mhd");
    let o = rdsc(&["mclahe", "--in", s(&constant), "--out", s(&out), "--tiles", "4,4,2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = read_metaimage(&out).unwrap();
    assert!(v.voxels().iter().all(|&x| x == v.voxels()[0]));

    let ramp = dir.path().join("ramp.mhd");
    let r = Volume3::from_fn(g, |[i, j, k]| 0.45 + 0.1 * (i + j + 4 * k) as f32 / 90.0).unwrap();
    write_metaimage(&r, &ramp, ElementType::Float).unwrap();
    let o = rdsc(&["mclahe", "--in", s(&ramp), "--out", s(&out), "--tiles", "4,4,2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = read_metaimage(&out).unwrap();
    let (lo, hi) = v.min_max();
    assert!(lo >= 0.0 && hi <= 1.0);
    let text = stdout(&o);
    let entropy = |label: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(label)).unwrap();
        line.split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    assert!(entropy("entropy after") > entropy("entropy before"), "{text}");
}

#[test]
fn augment_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mask) = blob(dir.path(), [200, 196, 30]);
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = rdsc(&["augment", "--image", s(&img), "--mask", s(&mask), "--seed", seed, "--out-dir", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let files = ["image_patch.mhd", "image_patch.raw", "mask_patch.mhd", "mask_patch.raw"];
        files.map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let a = run("42", "a");
    assert_eq!(a, run("42", "b"));
    assert_ne!(a, run("43", "c"));
    let m = read_mask(dir.path().join("a/mask_patch.mhd")).unwrap();
    assert_eq!(m.dims(), [192, 192, 32]);
    assert!(m.voxels().iter().all(|&x| x <= 1));
    assert_eq!(read_metaimage(dir.path().join("a/image_patch.mhd")).unwrap().dims(), [192, 192, 32]);

    let o = rdsc(&["augment", "--image", s(&img), "--mask", s(&mask), "--out-dir", s(&dir.path().join("d"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("seed "));
}

#[test]
fn predict_outputs_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = blob(dir.path(), [40, 36, 12]);
    let out = dir.path().join("p.mhd");
    let small = ["--window", "16,16,8", "--stride", "8,8,4"];

    let mut args = vec!["predict", "--in", s(&img), "--out", s(&out), "--predictor", "const:0.7", "--binarize", "0.5"];
    args.extend(small);
    let o = rdsc(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = read_mask(&out).unwrap();
    assert!(m.voxels().iter().all(|&x| x == 1));

    let mut args = vec!["predict", "--in", s(&img), "--out", s(&out), "--predictor", "echo"];
    args.extend(small);
    assert_eq!(code(&rdsc(&args)), 0);
    let want = normalize(&read_metaimage(&img).unwrap());
    let got = read_metaimage(&out).unwrap();
    assert!(got.voxels().iter().zip(want.voxels()).all(|(a, b)| (a - b).abs() <= 1e-6));

    let o = rdsc(&["predict", "--in", s(&img), "--out", s(&out), "--predictor", "const:0.7", "--stride", "96,96,16"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(meta["stride"], serde_json::json!([96, 96, 16]));
    assert_eq!(meta["window"], serde_json::json!([192, 192, 32]));
    assert!(stdout(&o).contains("stride 96 96 16"));
    let v = read_metaimage(&out).unwrap();
    assert!(v.voxels().iter().all(|&x| (x - 0.7).abs() <= 1e-6));
}

#[test]
fn study_needs_two_cases() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = rdsc(&["phantom", "--out-dir", s(&data), "--cases", "1", "--dims", "48,48,10", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = rdsc(&["rdsc-study", "--data", s(&data)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn study_writes_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = rdsc(&["phantom", "--out-dir", s(&data), "--cases", "4", "--dims", "64,64,12", "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (json, csv, svg) = (dir.path().join("r.json"), dir.path().join("r.csv"), dir.path().join("f.svg"));
    let args = ["rdsc-study", "--data", s(&data), "--out", s(&json), "--csv", s(&csv), "--svg", s(&svg)];
    let o = rdsc(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("4 cases"));
    let first = [&json, &csv, &svg].map(|p| std::fs::read(p).unwrap());
    let mut again = args.to_vec();
    again.splice(0..0, ["--workers", "1"]);
    assert_eq!(code(&rdsc(&again)), 0);
    assert_eq!(first, [&json, &csv, &svg].map(|p| std::fs::read(p).unwrap()));
    let report: Value = serde_json::from_slice(&first[0]).unwrap();
    assert_eq!(report["cases"].as_array().unwrap().len(), 4);
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = blob(dir.path(), [20, 18, 6]);
    let out = dir.path().join("out.mhd");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("[resample]\ninput = {:?}\noutput = {:?}\nspacing = \"half\"\n", s(&img), s(&out)),
    )
    .unwrap();
    let o = rdsc(&["--config", s(&cfg), "resample"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "10 9 3");
    let o = rdsc(&["--config", s(&cfg), "resample", "--spacing", "twice"]);
    assert_eq!(stdout(&o).trim(), "40 36 12");

    std::fs::write(&cfg, "[resample]\nspaceing = \"half\"\n").unwrap();
    assert_eq!(code(&rdsc(&["--config", s(&cfg), "resample"])), 2);
    assert_eq!(code(&rdsc(&["--config", s(&dir.path().join("none.toml")), "resample"])), 3);
}

#[test]
fn help_lists_defaults() {
    let cases: [(&str, &[&str]); 6] = [
        ("resample", &["0.3125,0.3125,1.5", "trilinear"]),
        ("rdsc-study", &["half, twice, median, common, proposed", "threshold:0.5"]),
        ("metrics", &["0.5,0.5"]),
        ("mclahe", &["8,8,2", "256", "[default: 4]"]),
        ("augment", &["192,192,32", "0.5"]),
        ("predict", &["echo", "192,192,32", "48,48,8"]),
    ];
    for (cmd, defaults) in cases {
        let o = rdsc(&[cmd, "--help"]);
        assert_eq!(code(&o), 0);
        let text = stdout(&o);
        for d in defaults {
            assert!(text.contains(d), "{cmd} help lacks {d}:\n{text}");
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = blob(dir.path(), [24, 20, 8]);
    let runs: [&[&str]; 3] = [
        &["resample", "--spacing", "proposed"],
        &["mclahe", "--tiles", "2,2,2"],
        &["predict", "--window", "16,16,4", "--stride", "8,8,2"],
    ];
    for extra in runs {
        let read = |name: &str| {
            let out = dir.path().join(name);
            let mut args = vec![extra[0], "--in", s(&img), "--out", s(&out)];
            args.extend(&extra[1..]);
            let o = rdsc(&args);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            (stdout(&o), std::fs::read(out.with_extension("raw")).unwrap())
        };
        assert_eq!(read("x.mhd"), read("y.mhd"));
    }
}
