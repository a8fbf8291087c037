//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{default_shifts, run_benchmark_on, BenchConfig};
use crate::error::{param, Error, Result};
use crate::honlm::{honlm_denoise, HonlmParams};
use crate::image::Kernel2D;
use crate::kernreg::Order;
use crate::metrics::{mean_psnr, psnr, render_csv, render_table, PsnrReport};
use crate::nlm::{nlm_denoise, NlmParams};
use crate::pnmio::{load_sequence, quantize_image, read_pgm, write_pgm, write_sequence, SequencePattern};
use crate::superres::{super_resolve, synth_degrade, synthetic_scene, DeblurParams, SrParams};

#[derive(Debug, Parser)]
#[command(name = "honlm", version, about = "High-order nonlocal-means denoising and super-resolution")]
pub struct Cli {
    /// Worker threads; results do not depend on it (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

/// Parsed and validated invocation.
pub type RunConfig = Cli;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise one PGM image with nonlocal means of order 0, 1 or 2.
    Denoise(DenoiseArgs),
    /// Super-resolve a frame sequence: fusion followed by TV deblurring.
    Upscale(UpscaleArgs),
    /// Generate a degraded frame sequence from a ground-truth image.
    Synth(SynthArgs),
    /// PSNR between two images or two frame sequences.
    Psnr(PsnrArgs),
    /// Synthetic benchmark: bicubic pilot vs fusion at orders 0, 1, 2.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Regression order (0 is classic nonlocal means).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub order: u8,
    /// Run the dedicated nonlocal-means path instead of the regression.
    #[arg(long)]
    pub classic_nlm: bool,
    /// Odd patch size.
    #[arg(long, default_value_t = 7)]
    pub q: usize,
    #[arg(long, default_value_t = 10)]
    pub search_radius: usize,
    /// Radiometric bandwidth on the patch SSD (roughly q times the noise sigma).
    #[arg(long, default_value_t = 70.0)]
    pub sigma_r: f64,
    /// Spatial bandwidth [default: search_radius / 2].
    #[arg(long)]
    pub sigma_s: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FusionArgs {
    /// Integer magnification.
    #[arg(long, default_value_t = 2)]
    pub scale: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub order: u8,
    /// Odd low-resolution patch size.
    #[arg(long, default_value_t = 5)]
    pub q: usize,
    /// Search radius in low-resolution pixels.
    #[arg(long, default_value_t = 3)]
    pub search_radius: usize,
    #[arg(long, default_value_t = 10.0)]
    pub sigma_r: f64,
    /// Spatial bandwidth in low-resolution pixels.
    #[arg(long, default_value_t = 1.5)]
    pub sigma_s: f64,
    /// Regression support in high-resolution pixels.
    #[arg(long, default_value_t = 6.0)]
    pub fusion_radius: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    /// Fusion passes; later passes use the previous output as pilot.
    #[arg(long, default_value_t = 1)]
    pub sr_iters: usize,
    /// Blur of the forward model: identity, uniform:N or gaussian:N:SIGMA.
    #[arg(long, default_value = "uniform:3", value_parser = parse_blur)]
    pub blur: Kernel2D,
    /// TV weight.
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    /// TV smoothing.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Gradient-descent step.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Deblurring iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
}

impl FusionArgs {
    fn sr_params(&self, reference: usize) -> Result<SrParams> {
        let sp = SrParams {
            scale: self.scale,
            q: self.q,
            search_radius: self.search_radius,
            sigma_r: self.sigma_r,
            sigma_s: self.sigma_s,
            order: Order::try_from(self.order as usize)?,
            fusion_radius: self.fusion_radius,
            ridge: self.ridge,
            reference,
            iterations: self.sr_iters,
        };
        sp.validate()?;
        Ok(sp)
    }

    fn deblur_params(&self) -> Result<DeblurParams> {
        let dp = DeblurParams {
            blur: self.blur.clone(),
            lambda: self.lambda,
            epsilon: self.epsilon,
            step: self.step,
            iters: self.iters,
        };
        dp.validate()?;
        Ok(dp)
    }
}

#[derive(Debug, Args)]
pub struct UpscaleArgs {
    /// Input frames as `path_%0Nd.pgm:start:count`.
    #[arg(long)]
    pub frames: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Frame (0-based position in the sequence) to reconstruct.
    #[arg(long, default_value_t = 0)]
    pub ref_index: usize,
    #[command(flatten)]
    pub fusion: FusionArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Ground-truth PGM [default: built-in synthetic scene of --size].
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 2)]
    pub scale: usize,
    #[arg(long, default_value = "uniform:3", value_parser = parse_blur)]
    pub blur: Kernel2D,
    #[arg(long, default_value_t = 2.0)]
    pub noise_sigma: f64,
    /// Number of frames T.
    #[arg(long, default_value_t = 9)]
    pub frames: usize,
    /// Integer shifts `dy,dx;dy,dx;...` [default: the 3x3 grid starting at 0,0].
    #[arg(long)]
    pub shifts: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output template for the degraded frames, e.g. `seq/f_%03d.pgm` (numbered from 0).
    #[arg(long)]
    pub out: String,
    /// Optional template for the high-resolution crops each frame observes.
    #[arg(long)]
    pub truth_out: Option<String>,
}

#[derive(Debug, Args)]
pub struct PsnrArgs {
    /// Two PGM images, or two sequence patterns with --sequence.
    #[arg(num_args = 2)]
    pub inputs: Vec<String>,
    /// Treat the inputs as `path_%0Nd.pgm:start:count` patterns.
    #[arg(long)]
    pub sequence: bool,
    #[arg(long, default_value_t = 255.0)]
    pub peak: f64,
    /// Round and clamp to 8 bits before scoring.
    #[arg(long)]
    pub quantize: bool,
    /// Emit `label,frame,psnr_db` rows instead of a table.
    #[arg(long)]
    pub csv: bool,
    #[arg(long, default_value = "input")]
    pub label: String,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Side of the square ground-truth scene.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Ground-truth PGM instead of the built-in scene.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 9)]
    pub frames: usize,
    #[arg(long)]
    pub shifts: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    pub noise_sigma: f64,
    #[arg(long)]
    pub quantize: bool,
    #[arg(long)]
    pub csv: bool,
    /// Directory for reconstructed frames (`<method>_%03d.pgm`).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub fusion: FusionArgs,
}

fn parse_blur(s: &str) -> std::result::Result<Kernel2D, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<usize>().map_err(|_| format!("bad kernel size {t:?}"));
    let kernel = match parts.as_slice() {
        ["identity"] => Ok(Kernel2D::identity()),
        ["uniform", n] => Kernel2D::uniform(num(n)?),
        ["gaussian", n, sigma] => {
            let sigma = sigma.parse::<f64>().map_err(|_| format!("bad sigma {sigma:?}"))?;
            Kernel2D::gaussian(num(n)?, sigma)
        }
        _ => return Err(format!("unknown blur {s:?}; use identity, uniform:N or gaussian:N:SIGMA")),
    };
    kernel.map_err(|e| e.to_string())
}

fn parse_shifts(spec: Option<&str>, frames: usize) -> Result<Vec<(i32, i32)>> {
    let Some(spec) = spec else {
        let grid = default_shifts();
        return Ok((0..frames).map(|t| grid[t % grid.len()]).collect());
    };
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let mut it = pair.split(',').map(|v| v.trim().parse::<i32>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(dy)), Some(Ok(dx)), None) => Ok((dy, dx)),
                _ => param(format!("bad shift {pair:?}, expected dy,dx")),
            }
        })
        .collect()
}

/// Parses arguments (including the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Runs a parsed invocation, writing reports to `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.threads > 0 {
        builder = builder.num_threads(cfg.threads);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let report = pool.install(|| dispatch(&cfg.command))?;
    out.write_all(report.as_bytes())
        .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
}

/// Runs one subcommand and returns the text destined for standard output.
fn dispatch(cmd: &Command) -> Result<String> {
    match cmd {
        Command::Denoise(a) => denoise(a).map(|_| String::new()),
        Command::Upscale(a) => upscale(a).map(|_| String::new()),
        Command::Synth(a) => synth(a).map(|_| String::new()),
        Command::Psnr(a) => psnr_cmd(a),
        Command::Bench(a) => bench(a),
    }
}

fn denoise(a: &DenoiseArgs) -> Result<()> {
    let img = read_pgm(&a.input)?;
    let nlm = NlmParams {
        q: a.q,
        search_radius: a.search_radius,
        sigma_r: a.sigma_r,
        sigma_s: a.sigma_s.unwrap_or((a.search_radius as f64 / 2.0).max(0.5)),
    };
    let result = if a.classic_nlm {
        nlm_denoise(&img, &nlm)?
    } else {
        let p = HonlmParams { nlm, order: Order::try_from(a.order as usize)?, ridge: a.ridge };
        honlm_denoise(&img, &p)?
    };
    write_pgm(&result, &a.output)
}

fn upscale(a: &UpscaleArgs) -> Result<()> {
    let pat: SequencePattern = a.frames.parse()?;
    let seq = load_sequence(&pat)?;
    if a.ref_index >= seq.len() {
        return param(format!("reference index {} out of range (T = {})", a.ref_index, seq.len()));
    }
    let sp = a.fusion.sr_params(a.ref_index)?;
    let dp = a.fusion.deblur_params()?;
    write_pgm(&super_resolve(&seq, &sp, &dp)?, &a.out)
}

fn synth(a: &SynthArgs) -> Result<()> {
    let truth = match &a.truth {
        Some(p) => read_pgm(p)?,
        None => synthetic_scene(a.size, a.size)?,
    };
    let shifts = parse_shifts(a.shifts.as_deref(), a.frames)?;
    let synthetic = synth_degrade(&truth, a.scale, &a.blur, a.noise_sigma, a.frames, &shifts, a.seed)?;
    write_sequence(&synthetic.frames, &SequencePattern::new(a.out.clone(), 0, a.frames)?)?;
    if let Some(t) = &a.truth_out {
        let truths = crate::superres::FrameSequence::new(synthetic.truths)?;
        write_sequence(&truths, &SequencePattern::new(t.clone(), 0, a.frames)?)?;
    }
    Ok(())
}

fn psnr_cmd(a: &PsnrArgs) -> Result<String> {
    let prep = |img: crate::Image| if a.quantize { quantize_image(&img) } else { img };
    let report = if a.sequence {
        let recon = load_sequence(&a.inputs[0].parse()?)?;
        let truth = load_sequence(&a.inputs[1].parse()?)?;
        let recon = crate::superres::FrameSequence::new(recon.into_frames().into_iter().map(prep).collect())?;
        let truth = crate::superres::FrameSequence::new(truth.into_frames().into_iter().map(prep).collect())?;
        mean_psnr(&recon, &truth, &a.label, a.peak)?
    } else {
        let x = prep(read_pgm(&a.inputs[0])?);
        let y = prep(read_pgm(&a.inputs[1])?);
        let v = psnr(&x, &y, a.peak)?;
        PsnrReport { method_label: a.label.clone(), per_frame: vec![(0, v)], mean: v }
    };
    Ok(if a.csv { render_csv(&[report]) } else { render_table(&[report]) })
}

fn bench(a: &BenchArgs) -> Result<String> {
    let truth = match &a.truth {
        Some(p) => read_pgm(p)?,
        None => synthetic_scene(a.size, a.size)?,
    };
    let cfg = BenchConfig {
        size: truth.width(),
        frames: a.frames,
        shifts: parse_shifts(a.shifts.as_deref(), a.frames)?,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
        sr: a.fusion.sr_params(0)?,
        deblur: a.fusion.deblur_params()?,
        quantize: a.quantize,
    };
    let result = run_benchmark_on(&truth, &cfg)?;
    if let Some(dir) = &a.out_dir {
        write_bench_images(dir, &result)?;
    }
    let reports = result.reports();
    if a.csv {
        return Ok(render_csv(&reports));
    }
    let mut text = format!(
        "# bench seed={} size={}x{} frames={} scale={} noise_sigma={} q={} search_radius={}\n",
        a.seed,
        truth.width(),
        truth.height(),
        a.frames,
        cfg.sr.scale,
        a.noise_sigma,
        cfg.sr.q,
        cfg.sr.search_radius
    );
    text.push_str(&render_table(&reports));
    Ok(text)
}

fn write_bench_images(dir: &Path, result: &crate::bench::BenchResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    for m in &result.methods {
        for (t, img) in m.images.iter().enumerate() {
            write_pgm(img, dir.join(format!("{}_{t:03}.pgm", m.label)))?;
        }
    }
    for (t, img) in result.synthetic.frames.frames().iter().enumerate() {
        write_pgm(img, dir.join(format!("lowres_{t:03}.pgm")))?;
    }
    Ok(())
}

/// Full entry point: parse, run, map errors to exit codes.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match run(&cfg, out) {
        Ok(()) => 0,
        Err(e @ Error::Parameter(_)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn denoise_config() {
        let cfg = parse_args(["honlm", "denoise", "--order", "2", "--sigma-r", "10", "in.pgm", "out.pgm"]).unwrap();
        match cfg.command {
            Command::Denoise(a) => {
                assert_eq!(a.order, 2);
                assert_eq!(a.sigma_r, 10.0);
                assert_eq!(a.input, PathBuf::from("in.pgm"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn order_three_rejected() {
        let e = parse_args(["honlm", "denoise", "--order", "3", "a", "b"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_flag_rejected() {
        let e = parse_args(["honlm", "psnr", "--bogus", "a", "b"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn upscale_config() {
        let cfg = parse_args(["honlm", "upscale", "--scale", "2", "--frames", "seq/f_%03d.pgm:0:9", "--out", "hr.pgm"]).unwrap();
        match cfg.command {
            Command::Upscale(a) => {
                let pat: SequencePattern = a.frames.parse().unwrap();
                assert_eq!(pat.count, 9);
                assert_eq!(a.fusion.scale, 2);
                assert!(a.fusion.sr_params(0).is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blur_specs() {
        assert!(parse_blur("identity").unwrap().is_identity());
        assert_eq!(parse_blur("uniform:3").unwrap().size(), 3);
        assert!((parse_blur("gaussian:5:1.2").unwrap().dc_gain() - 1.0).abs() < 1e-12);
        assert!(parse_blur("uniform:4").is_err());
        assert!(parse_blur("box").is_err());
    }

    #[test]
    fn shift_specs() {
        assert_eq!(parse_shifts(Some("0,0; 1,-1"), 2).unwrap(), vec![(0, 0), (1, -1)]);
        assert!(parse_shifts(Some("0"), 1).is_err());
        let d = parse_shifts(None, 9).unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(d[0], (0, 0));
    }
}
