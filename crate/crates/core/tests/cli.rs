use std::path::Path;
use std::process::{Command, Output};

use honlm::noise::GaussianNoise;
use honlm::pnmio::{quantize_image, read_pgm, write_pgm};
use honlm::Image;

fn honlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_honlm")).args(args).output().unwrap()
}

fn noisy_image(path: &Path, seed: u64) {
    let mut g = GaussianNoise::new(seed);
    let img = Image::from_fn(24, 20, |r, c| 100.0 + 2.0 * c as f64 + r as f64 + 10.0 * g.standard()).unwrap();
    write_pgm(&quantize_image(&img), path).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn psnr_of_identical_images_is_inf() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pgm");
    noisy_image(&a, 1);
    let out = honlm(&["psnr", s(&a), s(&a)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("inf"), "{text}");
}

#[test]
fn order_zero_matches_classic_nlm_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    noisy_image(&input, 2);
    let a = dir.path().join("order0.pgm");
    let b = dir.path().join("nlm.pgm");
    let common = ["--q", "5", "--search-radius", "4", "--sigma-r", "50"];
    let mut args = vec!["denoise", "--order", "0"];
    args.extend(common);
    args.extend([s(&input), s(&a)]);
    assert!(honlm(&args).status.success());
    let mut args = vec!["denoise", "--classic-nlm"];
    args.extend(common);
    args.extend([s(&input), s(&b)]);
    assert!(honlm(&args).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn usage_and_runtime_exit_codes() {
    assert_eq!(honlm(&["denoise", "--order", "3", "x.pgm", "y.pgm"]).status.code(), Some(2));
    assert_eq!(honlm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(honlm(&["--help"]).status.code(), Some(0));
    let out = honlm(&["psnr", "/nonexistent/a.pgm", "/nonexistent/b.pgm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/a.pgm"));
}

#[test]
fn synth_then_upscale() {
    let dir = tempfile::tempdir().unwrap();
    let frames = format!("{}/lr_%02d.pgm", s(dir.path()));
    let out = honlm(&["synth", "--size", "32", "--frames", "4", "--shifts", "0,0;0,1;1,0;1,1", "--out", &frames]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_pgm(dir.path().join("lr_03.pgm")).unwrap().width(), 15);
    let hr = dir.path().join("hr.pgm");
    let spec = format!("{frames}:0:4");
    let out = honlm(&["upscale", "--frames", &spec, "--iters", "5", "--out", s(&hr)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let img = read_pgm(&hr).unwrap();
    assert_eq!((img.width(), img.height()), (30, 30));
}

#[test]
fn upscale_reports_missing_frame_index() {
    let dir = tempfile::tempdir().unwrap();
    let frames = format!("{}/lr_%02d.pgm", s(dir.path()));
    assert!(honlm(&["synth", "--size", "16", "--frames", "2", "--shifts", "0,0;0,1", "--out", &frames]).status.success());
    let spec = format!("{frames}:0:3");
    let out = honlm(&["upscale", "--frames", &spec, "--out", s(&dir.path().join("x.pgm"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('2'));
}

#[test]
fn bench_report_layout() {
    let out = honlm(&["bench", "--size", "32", "--frames", "4", "--shifts", "0,0;0,1;1,0;1,1", "--iters", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let labels: Vec<&str> = text.lines().skip(2).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(labels, ["bicubic", "order0", "order1", "order2"]);
}
