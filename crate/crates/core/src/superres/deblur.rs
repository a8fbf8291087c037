//! Deblurring stage: gradient descent on `||z - H x||^2 + lambda * TV_eps(x)`.
//!
//! `TV_eps(x) = sum sqrt(Dh^2 + Dv^2 + eps^2)` with forward differences and a
//! zero difference past the last row/column.

use super::DeblurParams;
use crate::error::{param, Result};
use crate::image::{convolve, convolve_adjoint, Image};

fn check_sizes(x: &Image, z: &Image) -> Result<()> {
    if x.same_size(z) {
        Ok(())
    } else {
        param(format!(
            "estimate is {}x{} but target is {}x{}",
            x.width(),
            x.height(),
            z.width(),
            z.height()
        ))
    }
}

#[inline]
fn forward_diffs(x: &Image, r: usize, c: usize) -> (f64, f64) {
    let v = x.get(r, c);
    let dh = if c + 1 < x.width() { x.get(r, c + 1) - v } else { 0.0 };
    let dv = if r + 1 < x.height() { x.get(r + 1, c) - v } else { 0.0 };
    (dh, dv)
}

fn total_variation(x: &Image, eps: f64) -> f64 {
    let mut tv = 0.0;
    for r in 0..x.height() {
        for c in 0..x.width() {
            let (dh, dv) = forward_diffs(x, r, c);
            tv += (dh * dh + dv * dv + eps * eps).sqrt();
        }
    }
    tv
}

/// The scalar objective being minimized.
pub fn tv_objective(x: &Image, z_hat: &Image, dp: &DeblurParams) -> Result<f64> {
    check_sizes(x, z_hat)?;
    let hx = convolve(x, &dp.blur)?;
    let data: f64 = hx.data().iter().zip(z_hat.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    let tv = if dp.lambda == 0.0 { 0.0 } else { total_variation(x, dp.epsilon) };
    Ok(data + dp.lambda * tv)
}

/// Gradient `2 H^T (H x - z) + lambda * grad TV_eps(x)`.
pub fn tv_gradient(x: &Image, z_hat: &Image, dp: &DeblurParams) -> Result<Image> {
    check_sizes(x, z_hat)?;
    let hx = convolve(x, &dp.blur)?;
    let residual = Image::from_parts(
        x.width(),
        x.height(),
        hx.data().iter().zip(z_hat.data()).map(|(a, b)| 2.0 * (a - b)).collect(),
    );
    let mut grad = convolve_adjoint(&residual, &dp.blur)?;
    if dp.lambda == 0.0 {
        return Ok(grad);
    }
    let (w, h) = (x.width(), x.height());
    let eps2 = dp.epsilon * dp.epsilon;
    // Per-pixel (Dh / g, Dv / g).
    let mut ratio = vec![(0.0, 0.0); w * h];
    for r in 0..h {
        for c in 0..w {
            let (dh, dv) = forward_diffs(x, r, c);
            let g = (dh * dh + dv * dv + eps2).sqrt();
            ratio[r * w + c] = (dh / g, dv / g);
        }
    }
    for r in 0..h {
        for c in 0..w {
            let (gh, gv) = ratio[r * w + c];
            let mut d = 0.0;
            if c + 1 < w {
                d -= gh;
            }
            if r + 1 < h {
                d -= gv;
            }
            if c > 0 {
                d += ratio[r * w + c - 1].0;
            }
            if r > 0 {
                d += ratio[(r - 1) * w + c].1;
            }
            let v = grad.get(r, c) + dp.lambda * d;
            grad.set(r, c, v);
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone)]
pub struct DeblurOutput {
    pub image: Image,
    /// Objective before the first step and after every accepted step.
    pub objective: Vec<f64>,
    /// Step size in effect at the end.
    pub final_step: f64,
}

pub fn tv_deblur(z_hat: &Image, dp: &DeblurParams) -> Result<Image> {
    tv_deblur_with_history(z_hat, dp).map(|o| o.image)
}

/// Fixed-step descent from `x = z_hat`. A step that would raise the objective
/// is rejected and the step size halved until it does not.
pub fn tv_deblur_with_history(z_hat: &Image, dp: &DeblurParams) -> Result<DeblurOutput> {
    dp.validate()?;
    let mut x = z_hat.clone();
    let mut current = tv_objective(&x, z_hat, dp)?;
    let mut objective = vec![current];
    let mut step = dp.step;
    'outer: for _ in 0..dp.iters {
        let grad = tv_gradient(&x, z_hat, dp)?;
        if grad.data().iter().all(|&g| g == 0.0) {
            break;
        }
        loop {
            let candidate = Image::from_parts(
                x.width(),
                x.height(),
                x.data().iter().zip(grad.data()).map(|(v, g)| v - step * g).collect(),
            );
            let value = tv_objective(&candidate, z_hat, dp)?;
            if value <= current {
                x = candidate;
                current = value;
                objective.push(current);
                break;
            }
            step /= 2.0;
            if step < dp.step * 1e-12 {
                break 'outer;
            }
        }
    }
    Ok(DeblurOutput { image: x, objective, final_step: step })
}
