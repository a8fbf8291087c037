//! Classic nonlocal-means denoising.
//!
//! Each output pixel is the normalized sum of its search-window neighbors,
//! weighted by patch similarity times a truncated Gaussian in distance.

use rayon::prelude::*;

use crate::error::{param, Result};
use crate::image::{check_odd, extract_patch, patch_ssd, Image, Padded};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmParams {
    /// Odd patch side length.
    pub q: usize,
    /// The neighborhood is the `(2r+1)^2` window, cut to the disk of radius `r`.
    pub search_radius: usize,
    /// Radiometric bandwidth applied to the raw patch SSD.
    pub sigma_r: f64,
    /// Spatial bandwidth of the geometric factor.
    pub sigma_s: f64,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self {
            q: 7,
            search_radius: 10,
            sigma_r: 70.0,
            sigma_s: 5.0,
        }
    }
}

impl NlmParams {
    /// Parameters scaled to a Gaussian noise level: `sigma_r = q * noise_sigma`,
    /// so two noisy copies of the same patch meet at weight `e^-1` on average.
    pub fn for_noise(q: usize, search_radius: usize, noise_sigma: f64) -> Self {
        Self {
            q,
            search_radius,
            sigma_r: q as f64 * noise_sigma,
            sigma_s: (search_radius as f64 / 2.0).max(0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_odd("patch size q", self.q)?;
        if !(self.sigma_r > 0.0 && self.sigma_r.is_finite()) {
            return param(format!("sigma_r must be positive and finite, got {}", self.sigma_r));
        }
        if !(self.sigma_s > 0.0 && self.sigma_s.is_finite()) {
            return param(format!("sigma_s must be positive and finite, got {}", self.sigma_s));
        }
        Ok(())
    }

    /// Radiometric factor `exp(-ssd / (2 sigma_r^2))`.
    #[inline]
    pub fn radiometric(&self, ssd: f64) -> f64 {
        (-ssd / (2.0 * self.sigma_r * self.sigma_r)).exp()
    }

    /// Geometric factor `f(d)`: Gaussian in distance, zero beyond the search radius.
    #[inline]
    pub fn geometric(&self, d2: f64) -> f64 {
        let r = self.search_radius as f64;
        if d2 > r * r {
            0.0
        } else {
            (-d2 / (2.0 * self.sigma_s * self.sigma_s)).exp()
        }
    }
}

/// Weight of neighbor `ij` for center `kl`.
pub fn nlm_weight(img: &Image, kl: (usize, usize), ij: (usize, usize), p: &NlmParams) -> Result<f64> {
    p.validate()?;
    let a = extract_patch(img, kl, p.q)?;
    let b = extract_patch(img, ij, p.q)?;
    let dr = kl.0 as f64 - ij.0 as f64;
    let dc = kl.1 as f64 - ij.1 as f64;
    let f = p.geometric(dr * dr + dc * dc);
    if f == 0.0 {
        return Ok(0.0);
    }
    let ssd = patch_ssd(&a, &b)?;
    Ok(p.radiometric(ssd) * f)
}

/// Precomputed search-window state shared by the NLM and high-order passes,
/// so both visit the same neighbors in the same order with identical weights.
pub(crate) struct WeightField<'a> {
    img: &'a Image,
    padded: Padded,
    params: NlmParams,
    /// `(dr, dc, f)` for every window offset with nonzero geometric factor, row-major.
    offsets: Vec<(isize, isize, f64)>,
}

impl<'a> WeightField<'a> {
    pub(crate) fn new(img: &'a Image, params: &NlmParams) -> Result<Self> {
        params.validate()?;
        let r = params.search_radius as isize;
        let offsets = (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| (dr, dc)))
            .filter_map(|(dr, dc)| {
                let f = params.geometric((dr * dr + dc * dc) as f64);
                (f > 0.0).then_some((dr, dc, f))
            })
            .collect();
        Ok(Self {
            img,
            padded: Padded::new(img, params.q / 2),
            params: *params,
            offsets,
        })
    }

    /// Calls `visit(di, dj, value, weight)` for every in-image neighbor of `(k, l)`.
    #[inline]
    pub(crate) fn for_each(&self, (k, l): (usize, usize), mut visit: impl FnMut(isize, isize, f64, f64)) {
        let half = (self.params.q / 2) as isize;
        let (h, w) = (self.img.height() as isize, self.img.width() as isize);
        let (k, l) = (k as isize, l as isize);
        for &(dr, dc, f) in &self.offsets {
            let (i, j) = (k + dr, l + dc);
            if i < 0 || j < 0 || i >= h || j >= w {
                continue;
            }
            let ssd = self.padded.patch_ssd_with((k, l), 1, &self.padded, (i, j), half);
            let weight = self.params.radiometric(ssd) * f;
            visit(dr, dc, self.img.get(i as usize, j as usize), weight);
        }
    }
}

pub fn nlm_denoise(img: &Image, p: &NlmParams) -> Result<Image> {
    let field = WeightField::new(img, p)?;
    let w = img.width();
    let mut out = vec![0.0; w * img.height()];
    out.par_chunks_mut(w).enumerate().for_each(|(k, row)| {
        for (l, px) in row.iter_mut().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            field.for_each((k, l), |_, _, y, wt| {
                num += wt * y;
                den += wt;
            });
            *px = num / den;
        }
    });
    Ok(Image::from_parts(w, img.height(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: usize, r: usize, sigma_r: f64) -> NlmParams {
        NlmParams { q, search_radius: r, sigma_r, sigma_s: 2.0 }
    }

    #[test]
    fn self_weight_is_one() {
        let img = Image::from_fn(6, 6, |r, c| (r * 7 + c * 3) as f64).unwrap();
        assert_eq!(nlm_weight(&img, (2, 3), (2, 3), &params(3, 2, 5.0)).unwrap(), 1.0);
    }

    #[test]
    fn closed_form_weight() {
        // Two flat patches one level apart: SSD = 9, so sigma_r^2 = 4.5 puts it at 2 sigma_r^2.
        let a = extract_patch(&Image::filled(3, 3, 0.0).unwrap(), (1, 1), 3).unwrap();
        let b = extract_patch(&Image::filled(3, 3, 1.0).unwrap(), (1, 1), 3).unwrap();
        let ssd = patch_ssd(&a, &b).unwrap();
        assert_eq!(ssd, 9.0);
        let p = params(3, 2, 4.5f64.sqrt());
        let w = p.radiometric(ssd) * p.geometric(0.0);
        assert!((w - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn cutoff_beyond_radius() {
        let img = Image::filled(8, 8, 1.0).unwrap();
        let p = params(3, 2, 5.0);
        assert_eq!(nlm_weight(&img, (0, 0), (0, 3), &p).unwrap(), 0.0);
        assert_eq!(nlm_weight(&img, (0, 0), (2, 2), &p).unwrap(), 0.0);
        assert!(nlm_weight(&img, (0, 0), (0, 2), &p).unwrap() > 0.0);
        assert!(nlm_weight(&img, (0, 0), (8, 0), &p).is_err());
    }

    #[test]
    fn constant_image_is_fixed() {
        let img = Image::filled(9, 7, 77.0).unwrap();
        let out = nlm_denoise(&img, &params(3, 3, 4.0)).unwrap();
        assert!(out.data().iter().all(|&v| (v - 77.0).abs() < 1e-12));
    }

    #[test]
    fn impulse_stays_in_range() {
        let mut img = Image::filled(11, 11, 100.0).unwrap();
        img.set(5, 5, 250.0);
        let out = nlm_denoise(&img, &params(3, 3, 60.0)).unwrap();
        let moved_impulse = (out.get(5, 5) - 250.0).abs();
        for r in 0..11 {
            for c in 0..11 {
                let v = out.get(r, c);
                assert!((100.0 - 1e-9..=250.0 + 1e-9).contains(&v));
                if (r, c) != (5, 5) {
                    assert!((v - 100.0).abs() < moved_impulse);
                }
            }
        }
    }

    #[test]
    fn invalid_params() {
        let img = Image::filled(4, 4, 0.0).unwrap();
        assert!(nlm_denoise(&img, &params(2, 1, 1.0)).is_err());
        assert!(nlm_denoise(&img, &params(3, 1, 0.0)).is_err());
        let mut p = params(3, 1, 1.0);
        p.sigma_s = -1.0;
        assert!(nlm_denoise(&img, &p).is_err());
    }
}
