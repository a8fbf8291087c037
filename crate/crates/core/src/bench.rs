//! Synthetic super-resolution benchmark: degrade a known scene, reconstruct
//! every frame with the bicubic pilot and with fusion at orders 0, 1 and 2,
//! and report mean PSNR per method.

use crate::error::Result;
use crate::image::Image;
use crate::kernreg::Order;
use crate::metrics::{mean_psnr, PsnrReport, DEFAULT_PEAK};
use crate::pnmio::quantize_image;
use crate::superres::{
    fuse_frames_orders, initial_estimate, synth_degrade, synthetic_scene, tv_deblur, DeblurParams, FrameSequence,
    SrParams, SyntheticSequence,
};

/// The nine integer shifts `{-1, 0, 1}^2`, row-major, starting with `(0, 0)`.
pub fn default_shifts() -> Vec<(i32, i32)> {
    let mut shifts = vec![(0, 0)];
    for dy in -1..=1 {
        for dx in -1..=1 {
            if (dy, dx) != (0, 0) {
                shifts.push((dy, dx));
            }
        }
    }
    shifts
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub size: usize,
    pub frames: usize,
    pub shifts: Vec<(i32, i32)>,
    pub noise_sigma: f64,
    pub seed: u64,
    pub sr: SrParams,
    pub deblur: DeblurParams,
    /// Score 8-bit quantized reconstructions instead of raw values.
    pub quantize: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            size: 128,
            frames: 9,
            shifts: default_shifts(),
            noise_sigma: 2.0,
            seed: 7,
            sr: SrParams::default(),
            deblur: DeblurParams::default(),
            quantize: false,
        }
    }
}

/// Reconstructions for one method, frame by frame.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub label: String,
    pub images: Vec<Image>,
    pub report: PsnrReport,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub synthetic: SyntheticSequence,
    /// Bicubic pilot, then orders 0, 1, 2.
    pub methods: Vec<MethodRun>,
}

impl BenchResult {
    pub fn reports(&self) -> Vec<PsnrReport> {
        self.methods.iter().map(|m| m.report.clone()).collect()
    }
}

pub const METHOD_LABELS: [&str; 4] = ["bicubic", "order0", "order1", "order2"];

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchResult> {
    let truth = synthetic_scene(cfg.size, cfg.size)?;
    run_benchmark_on(&truth, cfg)
}

pub fn run_benchmark_on(truth: &Image, cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.sr.validate()?;
    cfg.deblur.validate()?;
    let synthetic = synth_degrade(
        truth,
        cfg.sr.scale,
        &cfg.deblur.blur,
        cfg.noise_sigma,
        cfg.frames,
        &cfg.shifts,
        cfg.seed,
    )?;
    let seq = &synthetic.frames;
    let mut per_method: Vec<Vec<Image>> = (0..4).map(|_| Vec::with_capacity(seq.len())).collect();
    for reference in 0..seq.len() {
        per_method[0].push(initial_estimate(seq, reference, cfg.sr.scale)?);
        let sp = SrParams { reference, ..cfg.sr.clone() };
        let fused = fuse_frames_orders(seq, &sp, &Order::ALL)?;
        for (n, f) in fused.into_iter().enumerate() {
            per_method[n + 1].push(tv_deblur(&f.image, &cfg.deblur)?);
        }
    }
    let truths = FrameSequence::new(synthetic.truths.clone())?;
    let mut methods = Vec::with_capacity(4);
    for (label, images) in METHOD_LABELS.iter().zip(per_method) {
        let scored: Vec<Image> = if cfg.quantize { images.iter().map(quantize_image).collect() } else { images.clone() };
        let report = mean_psnr(&FrameSequence::new(scored)?, &truths, label, DEFAULT_PEAK)?;
        methods.push(MethodRun { label: label.to_string(), images, report });
    }
    Ok(BenchResult { synthetic, methods })
}

