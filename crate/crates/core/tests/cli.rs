use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lapt::eval::EvalReport;
use lapt::io::{self, depth_from_tensor, Tensor, TensorData};

fn lapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lapt"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A simulated sample in `dir`, returning its manifest path.
fn simulate(dir: &Path) -> PathBuf {
    let o = lapt(&["simulate", "--out", &s(dir)]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("manifest.json")
}

#[test]
fn missing_cloud_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let missing = tmp.path().join("nope.lapt");
    let o = lapt(&[
        "depth",
        "--calib",
        &s(&tmp.path().join("calib.json")),
        "--cloud",
        &s(&missing),
        "--out",
        &s(&tmp.path().join("out")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nope.lapt"), "{}", stderr(&o));
}

#[test]
fn empty_cloud_gives_all_sentinel_depth() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let empty = tmp.path().join("empty.xyz");
    std::fs::write(&empty, "# no points\n").unwrap();
    let out = tmp.path().join("out");
    let o = lapt(&[
        "depth",
        "--calib",
        &s(&tmp.path().join("calib.json")),
        "--cloud",
        &s(&empty),
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = depth_from_tensor(&Tensor::read(&out.join("cam_front.depth.lapt")).unwrap()).unwrap();
    assert_eq!(d.valid_count(), 0);
    assert!(d.values().iter().all(|v| *v == f64::INFINITY));
}

#[test]
fn indivisible_df_names_the_camera() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(tmp.path());
    let o = lapt(&["depth", "--manifest", &s(&manifest), "--df", "24"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("cam_") && err.contains("24"), "{err}");
}

#[test]
fn malformed_calibration_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let calib = tmp.path().join("calib.json");
    let text = std::fs::read_to_string(&calib).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["cameras"][1]["extrinsics"][0] = serde_json::json!(7.0);
    std::fs::write(&calib, v.to_string()).unwrap();
    let o = lapt(&["depth", "--manifest", &s(&tmp.path().join("manifest.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("cameras[1].extrinsics"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn corrupt_tensor_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(tmp.path());
    let cloud = tmp.path().join("cloud.lapt");
    let bytes = std::fs::read(&cloud).unwrap();
    std::fs::write(&cloud, &bytes[..bytes.len() - 3]).unwrap();
    let o = lapt(&["depth", "--manifest", &s(&manifest)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cloud.lapt"), "{}", stderr(&o));
}

#[test]
fn bev_is_deterministic_and_renders() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = lapt(&[
            "bev",
            "--manifest",
            &s(&manifest),
            "--out",
            &s(out),
            "--render",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["bev.lapt", "bev.json", "occupancy.png"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let side: io::GridSidecar = io::read_json(&a.join("bev.json")).unwrap();
    assert_eq!((side.n_f, side.d_f), (Some(3), Some(16)));
}

#[test]
fn bev_from_feature_tensors() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let calib = lapt::io::Calibration::load(&tmp.path().join("calib.json")).unwrap();
    let mut args = vec![
        "bev".to_string(),
        "--calib".into(),
        s(&tmp.path().join("calib.json")),
        "--cloud".into(),
        s(&tmp.path().join("cloud.lapt")),
        "--df".into(),
        "8".into(),
        "--grid-extent".into(),
        "20".into(),
        "--grid-cell".into(),
        "1".into(),
        "--out".into(),
        s(&tmp.path().join("out")),
    ];
    for cam in &calib.cameras {
        let (w, h) = (cam.intrinsics.width / 8, cam.intrinsics.height / 8);
        let t = Tensor::new(vec![2, h, w], TensorData::F32(vec![0.5; 2 * w * h])).unwrap();
        let path = tmp.path().join(format!("{}.feat.lapt", cam.name));
        t.write(&path).unwrap();
        args.push("--features".into());
        args.push(format!("{}={}", cam.name, s(&path)));
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = lapt(&refs);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Tensor::read(&tmp.path().join("out/bev.lapt")).unwrap();
    assert_eq!(t.dims(), &[2, 40, 40]);
}

#[test]
fn gt_box_fixture_and_eval_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let ann = tmp.path().join("ann.json");
    std::fs::write(
        &ann,
        r#"{"boxes": [{"center": [0, 0, 0.75], "size": [2, 2, 1.5], "yaw": 0, "label": "car"},
                      {"center": [10, 3, 0.9], "size": [1.2, 1.2, 1.8], "yaw": 0.3, "label": "pedestrian"}]}"#,
    )
    .unwrap();
    let classes = tmp.path().join("classes.json");
    std::fs::write(
        &classes,
        r#"{"vehicle": ["car", "truck"], "human": ["pedestrian"]}"#,
    )
    .unwrap();
    let out = tmp.path().join("gt");
    let o = lapt(&[
        "gt",
        "--annotations",
        &s(&ann),
        "--classes",
        &s(&classes),
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("vehicle: 16 cells\n"), "{stdout}");

    let gt = out.join("gt.lapt");
    let o = lapt(&[
        "eval",
        "--pred",
        &s(&gt),
        "--gt",
        &s(&gt),
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: EvalReport = io::read_json(&out.join("report.json")).unwrap();
    assert_eq!(report.classes, ["vehicle", "human"]);
    assert!(report.per_class_iou.values().all(|v| *v == Some(1.0)));
}

#[test]
fn eval_rejects_shape_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let ann = tmp.path().join("ann.json");
    std::fs::write(
        &ann,
        r#"{"boxes": [{"center": [0, 0, 0], "size": [2, 2, 1], "yaw": 0, "label": "car"}]}"#,
    )
    .unwrap();
    let out = tmp.path().join("gt");
    assert!(lapt(&["gt", "--annotations", &s(&ann), "--out", &s(&out)])
        .status
        .success());
    let pred = tmp.path().join("pred.lapt");
    Tensor::new(vec![1, 10, 10], TensorData::U8(vec![0; 100]))
        .unwrap()
        .write(&pred)
        .unwrap();
    let o = lapt(&[
        "eval",
        "--pred",
        &s(&pred),
        "--gt",
        &s(&out.join("gt.lapt")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pred.lapt"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lapt(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lapt(&["eval", "--pred", "x"]).status.code(), Some(2));
    assert_eq!(lapt(&["--help"]).status.code(), Some(0));
}
