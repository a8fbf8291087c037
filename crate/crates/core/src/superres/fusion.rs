use rayon::prelude::*;

use super::{initial_estimate, FrameSequence, SrParams};
use crate::error::{contract, Result};
use crate::image::{Image, Padded};
use crate::kernreg::{NormalEquations, Order};

#[derive(Debug, Clone)]
pub struct FusionOutput {
    pub image: Image,
    /// High-resolution pixels with no usable sample, copied from the pilot.
    pub unfilled: usize,
    /// Pixels whose fit was rank deficient and fell back to the weighted mean.
    pub fallbacks: usize,
}

#[inline]
fn geometric(sp: &SrParams, d2: f64) -> f64 {
    let r = sp.search_radius as f64;
    if d2 > r * r {
        0.0
    } else {
        (-d2 / (2.0 * sp.sigma_s * sp.sigma_s)).exp()
    }
}

#[inline]
fn radiometric(sp: &SrParams, ssd: f64) -> f64 {
    (-ssd / (2.0 * sp.sigma_r * sp.sigma_r)).exp()
}

/// Similarity between the pilot around high-resolution pixel `hr` and frame
/// `frame` around low-resolution pixel `lr`.
///
/// The pilot patch is read on the lattice through `hr` with step `p`, so it
/// has the same `q x q` shape as the frame patch.
pub fn fusion_weight(
    pilot: &Image,
    hr: (usize, usize),
    frame: &Image,
    lr: (usize, usize),
    sp: &SrParams,
) -> Result<f64> {
    sp.validate()?;
    if !pilot.contains(hr) {
        return contract(format!("high-resolution pixel {hr:?} outside the pilot"));
    }
    if !frame.contains(lr) {
        return contract(format!("low-resolution pixel {lr:?} outside the frame"));
    }
    let p = sp.scale as f64;
    let dk = hr.0 as f64 / p - lr.0 as f64;
    let dl = hr.1 as f64 / p - lr.1 as f64;
    let f = geometric(sp, dk * dk + dl * dl);
    if f == 0.0 {
        return Ok(0.0);
    }
    let half = (sp.q / 2) as isize;
    let step = sp.scale as isize;
    let (k, l) = (hr.0 as isize, hr.1 as isize);
    let (i, j) = (lr.0 as isize, lr.1 as isize);
    let mut ssd = 0.0;
    for a in -half..=half {
        for b in -half..=half {
            let d = pilot.get_mirrored(k + step * a, l + step * b) - frame.get_mirrored(i + a, j + b);
            ssd += d * d;
        }
    }
    Ok(radiometric(sp, ssd) * f)
}

/// Order-`sp.order` fusion of all frames onto the high-resolution grid.
pub fn fuse_frames(seq: &FrameSequence, sp: &SrParams) -> Result<FusionOutput> {
    let mut out = fuse_frames_orders(seq, sp, &[sp.order])?;
    Ok(out.remove(0))
}

/// Fuses at several orders at once; the similarity weights are shared when
/// only one pass is requested.
pub fn fuse_frames_orders(seq: &FrameSequence, sp: &SrParams, orders: &[Order]) -> Result<Vec<FusionOutput>> {
    sp.validate()?;
    let pilot = initial_estimate(seq, sp.reference, sp.scale)?;
    if sp.iterations == 1 {
        return Ok(fuse_pass(seq, sp, &pilot, orders));
    }
    Ok(orders
        .iter()
        .map(|&order| {
            let mut current = fuse_pass(seq, sp, &pilot, &[order]).remove(0);
            for _ in 1..sp.iterations {
                current = fuse_pass(seq, sp, &current.image, &[order]).remove(0);
            }
            current
        })
        .collect())
}

fn fuse_pass(seq: &FrameSequence, sp: &SrParams, pilot: &Image, orders: &[Order]) -> Vec<FusionOutput> {
    let p = sp.scale;
    let half = sp.q / 2;
    let pilot_pad = Padded::new(pilot, p * half);
    let frames: Vec<Padded> = seq.frames().iter().map(|f| Padded::new(f, half)).collect();
    let (lr_h, lr_w) = (seq.height() as isize, seq.width() as isize);
    let (hr_w, hr_h) = (pilot.width(), pilot.height());
    let radius = sp.search_radius as f64;
    let fusion_r2 = sp.fusion_radius * sp.fusion_radius;
    let pf = p as f64;

    let rows: Vec<Vec<(Vec<f64>, usize, usize)>> = (0..hr_h)
        .into_par_iter()
        .map(|k| {
            let mut per_order: Vec<(Vec<f64>, usize, usize)> =
                orders.iter().map(|_| (Vec::with_capacity(hr_w), 0, 0)).collect();
            let ck = k as f64 / pf;
            let i_lo = ((ck - radius).ceil() as isize).max(0);
            let i_hi = ((ck + radius).floor() as isize).min(lr_h - 1);
            for l in 0..hr_w {
                let cl = l as f64 / pf;
                let j_lo = ((cl - radius).ceil() as isize).max(0);
                let j_hi = ((cl + radius).floor() as isize).min(lr_w - 1);
                let mut systems: Vec<NormalEquations> = orders.iter().map(|&o| NormalEquations::new(o)).collect();
                for (t, frame) in frames.iter().enumerate() {
                    let values = &seq.frames()[t];
                    for i in i_lo..=i_hi {
                        for j in j_lo..=j_hi {
                            let (dk, dl) = (ck - i as f64, cl - j as f64);
                            let f = geometric(sp, dk * dk + dl * dl);
                            if f == 0.0 {
                                continue;
                            }
                            let offset = [(p as isize * i - k as isize) as f64, (p as isize * j - l as isize) as f64];
                            if offset[0] * offset[0] + offset[1] * offset[1] > fusion_r2 {
                                continue;
                            }
                            let ssd = pilot_pad.patch_ssd_with(
                                (k as isize, l as isize),
                                p as isize,
                                frame,
                                (i, j),
                                half as isize,
                            );
                            let weight = radiometric(sp, ssd) * f;
                            let y = values.get(i as usize, j as usize);
                            for ne in &mut systems {
                                ne.add(offset, weight, y);
                            }
                        }
                    }
                }
                for (ne, (row, unfilled, fallbacks)) in systems.iter().zip(per_order.iter_mut()) {
                    match ne.solve(sp.ridge) {
                        Ok(fit) => {
                            *fallbacks += usize::from(fit.fallback);
                            row.push(fit.intercept());
                        }
                        Err(_) => {
                            *unfilled += 1;
                            row.push(pilot.get(k, l));
                        }
                    }
                }
            }
            per_order
        })
        .collect();

    orders
        .iter()
        .enumerate()
        .map(|(n, _)| {
            let mut data = Vec::with_capacity(hr_w * hr_h);
            let (mut unfilled, mut fallbacks) = (0, 0);
            for row in &rows {
                data.extend_from_slice(&row[n].0);
                unfilled += row[n].1;
                fallbacks += row[n].2;
            }
            FusionOutput {
                image: Image::from_parts(hr_w, hr_h, data),
                unfilled,
                fallbacks,
            }
        })
        .collect()
}
