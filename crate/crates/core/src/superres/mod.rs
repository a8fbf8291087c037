//! Multi-frame super-resolution without motion estimation.
//!
//! Stage one fuses the low-resolution frames onto the high-resolution grid
//! with patch-similarity weights (an order-N local fit per pixel), producing
//! an estimate of the blurred high-resolution image. Stage two removes the
//! blur by minimizing a data term plus smoothed total variation.

mod deblur;
mod fusion;
mod pilot;
mod synth;

pub use deblur::{tv_deblur, tv_deblur_with_history, tv_gradient, tv_objective, DeblurOutput};
pub use fusion::{fuse_frames, fuse_frames_orders, fusion_weight, FusionOutput};
pub use pilot::initial_estimate;
pub use synth::{synth_degrade, synthetic_scene, SyntheticSequence};

use crate::error::{param, Error, Result};
use crate::image::{check_odd, Image, Kernel2D};
use crate::kernreg::Order;

/// Ordered frames `y_1 .. y_T` of identical size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Image>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Image>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return param("a frame sequence needs at least one frame");
        };
        if let Some(index) = frames.iter().position(|f| !f.same_size(first)) {
            return Err(Error::Sequence {
                index,
                message: format!(
                    "size {}x{} differs from first frame {}x{}",
                    frames[index].width(),
                    frames[index].height(),
                    first.width(),
                    first.height()
                ),
            });
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn into_frames(self) -> Vec<Image> {
        self.frames
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrParams {
    /// Integer magnification `p`.
    pub scale: usize,
    /// Odd side of the low-resolution comparison patch.
    pub q: usize,
    /// Search radius in low-resolution pixels around `(k/p, l/p)`.
    pub search_radius: usize,
    pub sigma_r: f64,
    /// Spatial bandwidth in low-resolution pixels.
    pub sigma_s: f64,
    pub order: Order,
    /// Samples farther than this (high-resolution pixels) from the output pixel are ignored.
    pub fusion_radius: f64,
    pub ridge: f64,
    /// Frame whose upscale serves as the pilot for similarity weights.
    pub reference: usize,
    /// Fusion passes; each pass after the first uses the previous output as pilot.
    pub iterations: usize,
}

impl Default for SrParams {
    fn default() -> Self {
        Self {
            scale: 2,
            q: 5,
            search_radius: 3,
            sigma_r: 10.0,
            sigma_s: 1.5,
            order: Order::Two,
            fusion_radius: 6.0,
            ridge: 0.0,
            reference: 0,
            iterations: 1,
        }
    }
}

impl SrParams {
    pub fn validate(&self) -> Result<()> {
        if self.scale < 1 {
            return param("scale must be at least 1");
        }
        check_odd("patch size q", self.q)?;
        for (name, v) in [("sigma_r", self.sigma_r), ("sigma_s", self.sigma_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return param(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.fusion_radius >= 0.0) {
            return param(format!("fusion radius must be nonnegative, got {}", self.fusion_radius));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return param(format!("ridge must be finite and nonnegative, got {}", self.ridge));
        }
        if self.iterations < 1 {
            return param("at least one fusion pass is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeblurParams {
    /// Blur operator of the forward model; must have unit DC gain.
    pub blur: Kernel2D,
    pub lambda: f64,
    /// TV smoothing, keeps the objective differentiable.
    pub epsilon: f64,
    pub step: f64,
    pub iters: usize,
}

impl Default for DeblurParams {
    fn default() -> Self {
        Self {
            blur: Kernel2D::uniform(3).expect("3 is odd"),
            lambda: 0.05,
            epsilon: 1e-3,
            step: 0.1,
            iters: 50,
        }
    }
}

impl DeblurParams {
    pub fn validate(&self) -> Result<()> {
        if (self.blur.dc_gain() - 1.0).abs() > 1e-9 {
            return param(format!("blur kernel DC gain must be 1, got {}", self.blur.dc_gain()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return param(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return param(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return param(format!("step must be positive, got {}", self.step));
        }
        Ok(())
    }
}

/// Fusion followed by TV deblurring.
pub fn super_resolve(seq: &FrameSequence, sp: &SrParams, dp: &DeblurParams) -> Result<Image> {
    dp.validate()?;
    let fused = fuse_frames(seq, sp)?;
    tv_deblur(&fused.image, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::honlm::{honlm_denoise, HonlmParams};
    use crate::nlm::NlmParams;

    #[test]
    fn sequence_validation() {
        assert!(FrameSequence::new(vec![]).is_err());
        let a = Image::filled(3, 3, 0.0).unwrap();
        let b = Image::filled(3, 4, 0.0).unwrap();
        match FrameSequence::new(vec![a.clone(), a.clone(), b]) {
            Err(Error::Sequence { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(FrameSequence::new(vec![a.clone(), a]).unwrap().len(), 2);
    }

    #[test]
    fn params_validation() {
        assert!(SrParams::default().validate().is_ok());
        assert!(SrParams { q: 4, ..Default::default() }.validate().is_err());
        assert!(SrParams { scale: 0, ..Default::default() }.validate().is_err());
        assert!(SrParams { iterations: 0, ..Default::default() }.validate().is_err());
        let dp = DeblurParams { blur: Kernel2D::new(1, vec![2.0]).unwrap(), ..Default::default() };
        assert!(dp.validate().is_err());
        assert!(DeblurParams { epsilon: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn reduces_to_fusion_without_deblur() {
        let frame = synthetic_scene(12, 10).unwrap();
        let seq = FrameSequence::new(vec![frame.clone(), frame.map(|v| v + 1.0)]).unwrap();
        let sp = SrParams { scale: 2, q: 3, search_radius: 2, order: Order::One, ..Default::default() };
        let dp = DeblurParams { blur: Kernel2D::identity(), lambda: 0.0, iters: 0, ..Default::default() };
        let fused = fuse_frames(&seq, &sp).unwrap().image;
        assert_eq!(super_resolve(&seq, &sp, &dp).unwrap(), fused);
    }

    #[test]
    fn reduces_to_honlm_single_frame() {
        let frame = synthetic_scene(14, 14).unwrap();
        let seq = FrameSequence::new(vec![frame.clone()]).unwrap();
        let sp = SrParams {
            scale: 1,
            q: 3,
            search_radius: 3,
            sigma_r: 15.0,
            sigma_s: 2.0,
            order: Order::Two,
            fusion_radius: 10.0,
            ..Default::default()
        };
        let dp = DeblurParams { blur: Kernel2D::identity(), lambda: 0.0, iters: 0, ..Default::default() };
        let hp = HonlmParams {
            nlm: NlmParams { q: 3, search_radius: 3, sigma_r: 15.0, sigma_s: 2.0 },
            order: Order::Two,
            ridge: 0.0,
        };
        let a = super_resolve(&seq, &sp, &dp).unwrap();
        let b = honlm_denoise(&frame, &hp).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
