use super::FrameSequence;
use crate::error::{param, Result};
use crate::image::Image;

/// Keys cubic convolution kernel with `a = -0.5`.
fn keys(s: f64) -> f64 {
    const A: f64 = -0.5;
    let s = s.abs();
    if s <= 1.0 {
        (A + 2.0) * s * s * s - (A + 3.0) * s * s + 1.0
    } else if s < 2.0 {
        A * s * s * s - 5.0 * A * s * s + 8.0 * A * s - 4.0 * A
    } else {
        0.0
    }
}

/// For each output index, the four clamped source indices and their weights.
fn taps(len: usize, p: usize) -> Vec<([usize; 4], [f64; 4])> {
    (0..len * p)
        .map(|k| {
            let x = k as f64 / p as f64;
            let base = x.floor();
            let t = x - base;
            let base = base as isize;
            let mut idx = [0; 4];
            let mut w = [0.0; 4];
            for (n, off) in (-1..=2).enumerate() {
                idx[n] = (base + off).clamp(0, len as isize - 1) as usize;
                w[n] = keys(t - off as f64);
            }
            (idx, w)
        })
        .collect()
}

/// Bicubic upscale of frame `ref_index` by `p`: high-resolution pixel `k`
/// sits at low-resolution coordinate `k / p`, edges replicate.
///
/// This is the pilot on which high-resolution patches are compared.
pub fn initial_estimate(seq: &FrameSequence, ref_index: usize, p: usize) -> Result<Image> {
    if p < 1 {
        return param("scale must be at least 1");
    }
    let Some(frame) = seq.frames().get(ref_index) else {
        return param(format!("reference frame {ref_index} out of range (T = {})", seq.len()));
    };
    if p == 1 {
        return Ok(frame.clone());
    }
    let (w, h) = (frame.width(), frame.height());
    let cols = taps(w, p);
    let rows = taps(h, p);
    // Horizontal pass.
    let mut tmp = vec![0.0; w * p * h];
    for r in 0..h {
        for (c, (idx, wt)) in cols.iter().enumerate() {
            tmp[r * w * p + c] = (0..4).map(|n| wt[n] * frame.get(r, idx[n])).sum();
        }
    }
    let out_w = w * p;
    let mut out = vec![0.0; out_w * h * p];
    for (r, (idx, wt)) in rows.iter().enumerate() {
        for c in 0..out_w {
            out[r * out_w + c] = (0..4).map(|n| wt[n] * tmp[idx[n] * out_w + c]).sum();
        }
    }
    Ok(Image::from_parts(out_w, h * p, out))
}
