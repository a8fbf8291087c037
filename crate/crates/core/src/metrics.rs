//! MSE / PSNR and per-sequence mean-PSNR reports.

use std::fmt::Write as _;

use crate::error::{contract, param, Result};
use crate::image::Image;
use crate::superres::FrameSequence;

pub const DEFAULT_PEAK: f64 = 255.0;

fn check_same(a: &Image, b: &Image) -> Result<()> {
    if a.same_size(b) {
        Ok(())
    } else {
        param(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        ))
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_same(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(peak^2 / mse)`; identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / e).log10())
}

/// Formats a PSNR value, printing the infinite sentinel as `inf`.
pub fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsnrReport {
    pub method_label: String,
    pub per_frame: Vec<(usize, f64)>,
    pub mean: f64,
}

pub fn mean_psnr(recon: &FrameSequence, truth: &FrameSequence, label: &str, peak: f64) -> Result<PsnrReport> {
    if recon.len() != truth.len() {
        return param(format!("{} reconstructed frames vs {} reference frames", recon.len(), truth.len()));
    }
    let mut per_frame = Vec::with_capacity(recon.len());
    for (t, (r, g)) in recon.frames().iter().zip(truth.frames()).enumerate() {
        let v = psnr(r, g, peak)?;
        if v.is_infinite() {
            return contract(format!("frame {t} is identical to its reference; infinite PSNR cannot be averaged"));
        }
        per_frame.push((t, v));
    }
    let mean = per_frame.iter().map(|(_, v)| v).sum::<f64>() / per_frame.len() as f64;
    Ok(PsnrReport {
        method_label: label.to_string(),
        per_frame,
        mean,
    })
}

/// Plain-text table, one row per method in the given order.
///
/// ```text
/// method      mean_psnr_db  frames
/// bicubic          31.2034       9
/// ```
pub fn render_table(reports: &[PsnrReport]) -> String {
    let width = reports.iter().map(|r| r.method_label.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>12}  {:>6}", "method", "mean_psnr_db", "frames");
    for r in reports {
        let _ = writeln!(out, "{:<width$}  {:>12}  {:>6}", r.method_label, format_db(r.mean), r.per_frame.len());
    }
    out
}

/// Comma-separated rows with header `label,frame,psnr_db`, frames in order.
pub fn render_csv(reports: &[PsnrReport]) -> String {
    let mut out = String::from("label,frame,psnr_db\n");
    for r in reports {
        for (t, v) in &r.per_frame {
            let _ = writeln!(out, "{},{},{}", r.method_label, t, format_db(*v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> (Image, Image) {
        let a = Image::from_fn(7, 5, |r, c| ((r * 37 + c * 11) % 256) as f64).unwrap();
        let b = Image::from_fn(7, 5, |r, c| ((r * 13 + c * 29 + 5) % 256) as f64).unwrap();
        (a, b)
    }

    #[test]
    fn mse_cases() {
        let (a, b) = pair();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &a.map(|v| v + 2.0)).unwrap(), 4.0);
        let mut hand = 0.0;
        for r in 0..5 {
            for c in 0..7 {
                hand += (a.get(r, c) - b.get(r, c)).powi(2);
            }
        }
        assert!((mse(&a, &b).unwrap() - hand / 35.0).abs() < 1e-12);
        assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        assert!(mse(&a, &Image::filled(5, 7, 0.0).unwrap()).is_err());
    }

    #[test]
    fn psnr_closed_forms() {
        let a = Image::filled(4, 4, 100.0).unwrap();
        let v = psnr(&a, &a.map(|v| v + 1.0), 255.0).unwrap();
        assert!((v - 48.1308).abs() < 1e-4);
        assert!(psnr(&a, &a, 255.0).unwrap().is_infinite());
        let v = psnr(&a, &a.map(|v| v + 255.0), 255.0).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn mean_report() {
        // Constant offsets chosen so PSNRs are exactly 30 and 32 dB.
        let truth = Image::filled(3, 3, 0.0).unwrap();
        let off = |db: f64| 255.0 / 10f64.powf(db / 20.0);
        let recon = FrameSequence::new(vec![truth.map(|v| v + off(30.0)), truth.map(|v| v + off(32.0))]).unwrap();
        let gt = FrameSequence::new(vec![truth.clone(), truth.clone()]).unwrap();
        let rep = mean_psnr(&recon, &gt, "x", 255.0).unwrap();
        assert!((rep.mean - 31.0).abs() < 1e-9);

        let single = FrameSequence::new(vec![truth.map(|v| v + 3.0)]).unwrap();
        let one = FrameSequence::new(vec![truth.clone()]).unwrap();
        let rep = mean_psnr(&single, &one, "y", 255.0).unwrap();
        assert_eq!(rep.mean, rep.per_frame[0].1);

        assert!(mean_psnr(&one, &one, "z", 255.0).is_err());
        assert!(mean_psnr(&recon, &one, "z", 255.0).is_err());
    }

    #[test]
    fn rendering() {
        let reps = vec![PsnrReport { method_label: "order2".into(), per_frame: vec![(0, 30.0), (1, 32.0)], mean: 31.0 }];
        assert_eq!(render_csv(&reps), "label,frame,psnr_db\norder2,0,30.0000\norder2,1,32.0000\n");
        let table = render_table(&reps);
        assert!(table.starts_with("method"));
        assert!(table.contains("31.0000"));
        assert_eq!(format_db(f64::INFINITY), "inf");
    }
}
