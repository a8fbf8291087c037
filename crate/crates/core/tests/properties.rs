use proptest::prelude::*;

use honlm::honlm::{honlm_denoise, HonlmParams};
use honlm::image::{convolve, decimate, extract_patch, patch_ssd, upsample_zero_fill};
use honlm::kernreg::{basis_row, weighted_residual, wls_solve};
use honlm::metrics::psnr;
use honlm::nlm::{nlm_denoise, NlmParams};
use honlm::superres::{tv_deblur_with_history, DeblurParams};
use honlm::{Image, Kernel2D, Order};

fn image(max_side: usize) -> impl Strategy<Value = Image> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0..255.0f64, w * h).prop_map(move |d| Image::new(w, h, d).unwrap())
    })
}

fn kernel() -> impl Strategy<Value = Kernel2D> {
    prop::sample::select(vec![1usize, 3, 5]).prop_flat_map(|k| {
        prop::collection::vec(0.0..1.0f64, k * k).prop_map(move |t| Kernel2D::new(k, t).unwrap())
    })
}

/// Offsets, weights and values for a weighted fit with `m` samples.
fn samples(m: usize) -> impl Strategy<Value = Vec<([f64; 2], f64, f64)>> {
    prop::collection::vec(((-4.0..4.0f64, -4.0..4.0f64), 0.1..1.0f64, 0.0..255.0f64), m)
        .prop_map(|v| v.into_iter().map(|((a, b), w, y)| ([a, b], w, y)).collect())
}

fn small_nlm() -> NlmParams {
    NlmParams { q: 3, search_radius: 2, sigma_r: 40.0, sigma_s: 1.5 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_is_linear(x in image(9), k in kernel(), a in -3.0..3.0f64) {
        let y = x.flip_horizontal();
        let combo = Image::new(x.width(), x.height(), x.data().iter().zip(y.data()).map(|(p, q)| a * p + q).collect()).unwrap();
        let lhs = convolve(&combo, &k).unwrap();
        let (cx, cy) = (convolve(&x, &k).unwrap(), convolve(&y, &k).unwrap());
        for ((l, p), q) in lhs.data().iter().zip(cx.data()).zip(cy.data()) {
            prop_assert!((l - (a * p + q)).abs() < 1e-9);
        }
    }

    #[test]
    fn decimate_undoes_zero_fill(x in image(8), p in 1usize..=4) {
        prop_assert_eq!(decimate(&upsample_zero_fill(&x, p).unwrap(), p).unwrap(), x);
    }

    #[test]
    fn patch_ssd_is_symmetric(x in image(10), q in prop::sample::select(vec![1usize, 3, 5])) {
        let a = extract_patch(&x, (0, 0), q).unwrap();
        let b = extract_patch(&x, (x.height() - 1, x.width() - 1), q).unwrap();
        prop_assert_eq!(patch_ssd(&a, &b).unwrap(), patch_ssd(&b, &a).unwrap());
    }

    #[test]
    fn quadratic_reproduction(s in samples(14), c in prop::collection::vec(-5.0..5.0f64, 6)) {
        let rows: Vec<Vec<f64>> = s.iter().map(|(o, _, _)| basis_row(*o, Order::Two)).collect();
        let values: Vec<f64> = rows.iter().map(|r| r.iter().zip(&c).map(|(a, b)| a * b).sum()).collect();
        let weights: Vec<f64> = s.iter().map(|(_, w, _)| *w).collect();
        let fit = wls_solve(&rows, &weights, &values, 0.0).unwrap();
        prop_assume!(!fit.fallback);
        prop_assert!((fit.intercept() - c[0]).abs() < 1e-6);
    }

    #[test]
    fn residual_shrinks_with_order(s in samples(12)) {
        let weights: Vec<f64> = s.iter().map(|(_, w, _)| *w).collect();
        let values: Vec<f64> = s.iter().map(|(_, _, y)| *y).collect();
        let mut last = f64::INFINITY;
        for order in Order::ALL {
            let rows: Vec<Vec<f64>> = s.iter().map(|(o, _, _)| basis_row(*o, order)).collect();
            let fit = wls_solve(&rows, &weights, &values, 0.0).unwrap();
            prop_assume!(!fit.fallback);
            let r = weighted_residual(&rows, &weights, &values, &fit.beta);
            prop_assert!(r <= last * (1.0 + 1e-9) + 1e-9);
            last = r;
        }
    }

    #[test]
    fn fit_ignores_weight_scale(s in samples(10), k in 0.01..100.0f64) {
        let rows: Vec<Vec<f64>> = s.iter().map(|(o, _, _)| basis_row(*o, Order::One)).collect();
        let w: Vec<f64> = s.iter().map(|(_, w, _)| *w).collect();
        let kw: Vec<f64> = w.iter().map(|v| v * k).collect();
        let y: Vec<f64> = s.iter().map(|(_, _, y)| *y).collect();
        let a = wls_solve(&rows, &w, &y, 0.0).unwrap();
        let b = wls_solve(&rows, &kw, &y, 0.0).unwrap();
        for (p, q) in a.beta.iter().zip(&b.beta) {
            prop_assert!((p - q).abs() < 1e-8 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn nlm_is_a_convex_combination(x in image(10)) {
        let out = nlm_denoise(&x, &small_nlm()).unwrap();
        prop_assert!(out.min() >= x.min() - 1e-9 && out.max() <= x.max() + 1e-9);
    }

    #[test]
    fn nlm_commutes_with_mirroring(x in image(10)) {
        let a = nlm_denoise(&x.flip_horizontal(), &small_nlm()).unwrap();
        let b = nlm_denoise(&x, &small_nlm()).unwrap().flip_horizontal();
        for (p, q) in a.data().iter().zip(b.data()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn honlm_shift_equivariance(x in image(9), c in -50.0..50.0f64) {
        let p = HonlmParams { nlm: small_nlm(), order: Order::One, ridge: 0.0 };
        let a = honlm_denoise(&x.map(|v| v + c), &p).unwrap();
        let b = honlm_denoise(&x, &p).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            prop_assert!((u - (v + c)).abs() < 1e-8);
        }
    }

    #[test]
    fn flat_radiometry_gives_spatial_average(x in image(8)) {
        // A huge sigma_r leaves only the geometric factor.
        let p = NlmParams { sigma_r: 1e9, ..small_nlm() };
        let out = nlm_denoise(&x, &p).unwrap();
        let (w, h) = (x.width() as isize, x.height() as isize);
        let (r, c) = (h / 2, w / 2);
        let (mut num, mut den) = (0.0, 0.0);
        for i in (r - 2).max(0)..=(r + 2).min(h - 1) {
            for j in (c - 2).max(0)..=(c + 2).min(w - 1) {
                let d2 = ((i - r) * (i - r) + (j - c) * (j - c)) as f64;
                let f = p.geometric(d2);
                num += f * x.get(i as usize, j as usize);
                den += f;
            }
        }
        prop_assert!((out.get(r as usize, c as usize) - num / den).abs() < 1e-6);
    }

    #[test]
    fn psnr_falls_as_error_grows(x in image(8), a in 0.1..5.0f64, extra in 0.1..5.0f64) {
        let near = x.map(|v| v + a);
        let far = x.map(|v| v + a + extra);
        prop_assert!(psnr(&near, &x, 255.0).unwrap() > psnr(&far, &x, 255.0).unwrap());
    }

    #[test]
    fn deblur_objective_never_rises(z in image(8), lambda in 0.0..2.0f64) {
        let dp = DeblurParams { lambda, iters: 15, ..Default::default() };
        let out = tv_deblur_with_history(&z, &dp).unwrap();
        prop_assert!(out.objective.windows(2).all(|w| w[1] <= w[0]));
    }
}
