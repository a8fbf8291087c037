//! High-order nonlocal means: the NLM weights drive a local polynomial fit
//! over the search window instead of a plain weighted average.
//!
//! At order 0 the fit is exactly the NLM average; orders 1 and 2 add the
//! gradient and curvature terms of the Taylor expansion around each pixel.

use rayon::prelude::*;

use crate::error::{param, Result};
use crate::image::Image;
use crate::kernreg::{NormalEquations, Order};
use crate::nlm::{nlm_weight, NlmParams, WeightField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HonlmParams {
    pub nlm: NlmParams,
    pub order: Order,
    pub ridge: f64,
}

impl Default for HonlmParams {
    fn default() -> Self {
        Self {
            nlm: NlmParams::default(),
            order: Order::Two,
            ridge: 0.0,
        }
    }
}

impl HonlmParams {
    pub fn validate(&self) -> Result<()> {
        self.nlm.validate()?;
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return param(format!("ridge must be finite and nonnegative, got {}", self.ridge));
        }
        Ok(())
    }
}

/// The joint radiometric and geometric kernel; identical to [`nlm_weight`].
pub fn honlm_weight(
    img: &Image,
    center: (usize, usize),
    neighbor: (usize, usize),
    p: &HonlmParams,
) -> Result<f64> {
    nlm_weight(img, center, neighbor, &p.nlm)
}

/// Denoised image plus the number of pixels whose fit fell back to order 0.
#[derive(Debug, Clone)]
pub struct HonlmOutput {
    pub image: Image,
    pub fallbacks: usize,
}

pub fn honlm_denoise(img: &Image, p: &HonlmParams) -> Result<Image> {
    honlm_denoise_with_stats(img, p).map(|o| o.image)
}

pub fn honlm_denoise_with_stats(img: &Image, p: &HonlmParams) -> Result<HonlmOutput> {
    p.validate()?;
    let field = WeightField::new(img, &p.nlm)?;
    let w = img.width();
    let rows: Vec<(Vec<f64>, usize)> = (0..img.height())
        .into_par_iter()
        .map(|k| {
            let mut fallbacks = 0;
            let row = (0..w)
                .map(|l| {
                    let mut ne = NormalEquations::new(p.order);
                    field.for_each((k, l), |dr, dc, y, wt| {
                        ne.add([dr as f64, dc as f64], wt, y);
                    });
                    // The self weight is 1, so the system is never empty.
                    let fit = ne.solve(p.ridge).expect("self weight keeps the system nonempty");
                    fallbacks += usize::from(fit.fallback);
                    fit.intercept()
                })
                .collect();
            (row, fallbacks)
        })
        .collect();
    let fallbacks = rows.iter().map(|(_, f)| f).sum();
    let data = rows.into_iter().flat_map(|(r, _)| r).collect();
    Ok(HonlmOutput {
        image: Image::from_parts(w, img.height(), data),
        fallbacks,
    })
}
