use std::path::Path;
use std::process::{Command, Output};

use refsr_core::feature::Image;
use refsr_core::matching::CorrespondenceField;

fn textured(h: usize, w: usize) -> Image {
    Image::from_fn(h, w, |y, x| {
        let (y, x) = (y as f32, x as f32);
        [
            0.5 + 0.4 * (0.31 * x + 0.17 * y).sin(),
            0.5 + 0.4 * (0.23 * y - 0.11 * x).cos(),
            0.5 + 0.3 * (0.07 * x * y / 8.0).sin(),
        ]
    })
    .unwrap()
}

fn inputs(dir: &Path) -> (String, String) {
    let (lr, reference) = (dir.join("lr.png"), dir.join("ref.png"));
    textured(24, 32).save(&lr).unwrap();
    textured(96, 112).save(&reference).unwrap();
    (lr.display().to_string(), reference.display().to_string())
}

fn refsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refsr"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn match_writes_field_visualization_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, r) = inputs(dir.path());
    let out_dir = dir.path().join("m");
    let out = refsr(&[
        "match",
        "--lr",
        &lr,
        "--ref",
        &r,
        "--text",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let field = CorrespondenceField::load(out_dir.join("correspondence.bin")).unwrap();
    assert_eq!(field.blocks.len(), 3 * 4);
    for name in [
        "correspondence.txt",
        "correspondence.png",
        "report.txt",
        "report.json",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("dense / coarse-to-fine"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(
        report["total_ops"],
        report["coarse_ops"].as_u64().unwrap() + report["fine_ops"].as_u64().unwrap()
    );
}

#[test]
fn transfer_writes_image_manifest_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, r) = inputs(dir.path());
    let hr = dir.path().join("hr.png");
    textured(96, 128).save(&hr).unwrap();
    let out_dir = dir.path().join("t");
    let out = refsr(&[
        "transfer",
        "--lr",
        &lr,
        "--ref",
        &r,
        "--hr",
        hr.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sr = Image::load(out_dir.join("sr.png")).unwrap();
    assert_eq!((sr.height(), sr.width()), (96, 128));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["metrics"].is_object());
    assert!(out_dir.join("metrics.txt").exists());
}

#[test]
fn config_file_and_flags_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, r) = inputs(dir.path());
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[match]\nlr_block = 12\ndilations = [1]\n").unwrap();
    let out_dir = dir.path().join("c");
    let args = [
        "match",
        "--lr",
        &lr,
        "--ref",
        &r,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ];
    assert_eq!(code(&refsr(&args)), 0);
    let field = CorrespondenceField::load(out_dir.join("correspondence.bin")).unwrap();
    assert_eq!(field.geometry.block, 12);

    let mut with_flag = args.to_vec();
    with_flag.extend(["--lr-block", "8"]);
    assert_eq!(code(&refsr(&with_flag)), 0);
    let field = CorrespondenceField::load(out_dir.join("correspondence.bin")).unwrap();
    assert_eq!(field.geometry.block, 8);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, r) = inputs(dir.path());
    // dilation 2 needs a footprint of 5
    assert_eq!(
        code(&refsr(&[
            "match",
            "--lr",
            &lr,
            "--ref",
            &r,
            "--lr-block",
            "4"
        ])),
        2
    );
    assert_eq!(
        code(&refsr(&[
            "match",
            "--lr",
            &lr,
            "--ref",
            &r,
            "--ref-block-scale",
            "huge"
        ])),
        2
    );
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[match]\nblock = 8\n").unwrap();
    assert_eq!(
        code(&refsr(&[
            "match",
            "--lr",
            &lr,
            "--ref",
            &r,
            "--config",
            cfg.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(code(&refsr(&["match", "--lr", &lr])), 2);
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, _) = inputs(dir.path());
    let missing = dir.path().join("missing.png");
    let out = refsr(&["match", "--lr", &lr, "--ref", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.png"));
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not an image").unwrap();
    assert_eq!(
        code(&refsr(&[
            "transfer",
            "--lr",
            &lr,
            "--ref",
            junk.to_str().unwrap()
        ])),
        3
    );
}

#[test]
fn oracle_compare_on_single_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, r) = inputs(dir.path());
    let out_dir = dir.path().join("o");
    let out = refsr(&[
        "oracle-compare",
        "--lr",
        &lr,
        "--ref",
        &r,
        "--ref-block-scale",
        "full",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("oracle.json")).unwrap())
            .unwrap();
    assert_eq!(report["mean_agreement"], 1.0);
    assert_eq!(report["mean_ratio"], 1.0);
}
