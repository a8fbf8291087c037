use super::FrameSequence;
use crate::error::{param, Result};
use crate::image::{convolve, decimate, Image, Kernel2D};
use crate::noise::GaussianNoise;

/// Degraded frames together with the high-resolution crop each one observes.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: FrameSequence,
    pub truths: Vec<Image>,
}

/// Forward model: translate (crop), blur, decimate, add Gaussian noise.
///
/// Every frame is a crop of `truth` inset by the largest shift component `m`,
/// so frame `t` observes the window at `(m + dy_t, m + dx_t)` of size
/// `(W - 2m) x (H - 2m)`. Noise is drawn frame by frame in row-major order
/// from one [`GaussianNoise`] stream seeded with `seed`.
pub fn synth_degrade(
    truth: &Image,
    p: usize,
    blur: &Kernel2D,
    noise_sigma: f64,
    frames: usize,
    shifts: &[(i32, i32)],
    seed: u64,
) -> Result<SyntheticSequence> {
    if p < 1 {
        return param("scale must be at least 1");
    }
    if frames < 1 {
        return param("at least one frame is required");
    }
    if shifts.len() != frames {
        return param(format!("{} shifts given for {frames} frames", shifts.len()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return param(format!("noise sigma must be nonnegative, got {noise_sigma}"));
    }
    let margin = shifts
        .iter()
        .flat_map(|&(dy, dx)| [dy.unsigned_abs(), dx.unsigned_abs()])
        .max()
        .unwrap_or(0) as usize;
    if 2 * margin >= truth.width() || 2 * margin >= truth.height() {
        return param(format!(
            "shift of {margin} pixels leaves no crop inside a {}x{} image",
            truth.width(),
            truth.height()
        ));
    }
    let (w, h) = (truth.width() - 2 * margin, truth.height() - 2 * margin);
    let mut noise = GaussianNoise::new(seed);
    let mut out = Vec::with_capacity(frames);
    let mut truths = Vec::with_capacity(frames);
    for &(dy, dx) in shifts {
        let row = (margin as i64 + dy as i64) as usize;
        let col = (margin as i64 + dx as i64) as usize;
        let crop = truth.crop(row, col, w, h)?;
        let lr = decimate(&convolve(&crop, blur)?, p)?;
        let lr = if noise_sigma > 0.0 { lr.map(|v| v + noise_sigma * noise.standard()) } else { lr };
        out.push(lr);
        truths.push(crop);
    }
    Ok(SyntheticSequence {
        frames: FrameSequence::new(out)?,
        truths,
    })
}

/// Deterministic test scene: smooth shading, oriented waves, a bright blob
/// and a soft-edged disk, all inside `[0, 255]`.
pub fn synthetic_scene(width: usize, height: usize) -> Result<Image> {
    use std::f64::consts::PI;
    Image::from_fn(width, height, |r, c| {
        let x = c as f64 / width as f64;
        let y = r as f64 / height as f64;
        let shading = 90.0 + 60.0 * x + 30.0 * y;
        let waves = 35.0 * (2.0 * PI * (1.5 * x + 0.6 * y)).sin() * (2.0 * PI * (1.1 * y - 0.4 * x)).cos();
        let blob = 45.0 * (-((x - 0.3).powi(2) + (y - 0.7).powi(2)) / 0.015).exp();
        let dist = ((x - 0.68).powi(2) + (y - 0.32).powi(2)).sqrt();
        let disk = -50.0 / (1.0 + ((dist - 0.17) / 0.015).exp());
        (shading + waves + blob + disk).clamp(0.0, 255.0)
    })
}
