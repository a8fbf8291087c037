//! Pinned outputs from the first verified runs. A change here means the
//! numerics changed; re-pin only on purpose.

use honlm::bench::{run_benchmark, BenchConfig};
use honlm::honlm::{honlm_denoise, HonlmParams};
use honlm::metrics::psnr;
use honlm::nlm::NlmParams;
use honlm::noise::GaussianNoise;
use honlm::superres::synthetic_scene;
use honlm::Order;

const TOL: f64 = 1e-6;

#[test]
fn denoising_baselines() {
    let clean = synthetic_scene(64, 64).unwrap();
    let mut noise = GaussianNoise::new(10);
    let noisy = clean.map(|v| v + 10.0 * noise.standard());
    assert!((psnr(&noisy, &clean, 255.0).unwrap() - 28.1672307183).abs() < TOL);
    let nlm = NlmParams::for_noise(5, 5, 10.0);
    let pinned = [39.5993786669, 39.8248338558, 37.2659282714];
    for (order, want) in Order::ALL.into_iter().zip(pinned) {
        let out = honlm_denoise(&noisy, &HonlmParams { nlm, order, ridge: 0.0 }).unwrap();
        let got = psnr(&out, &clean, 255.0).unwrap();
        assert!((got - want).abs() < TOL, "order {order}: {got:.10} vs {want:.10}");
    }
}

#[test]
fn bench_baselines() {
    let result = run_benchmark(&BenchConfig::default()).unwrap();
    let pinned = [
        ("bicubic", 43.7576652547),
        ("order0", 51.7725475369),
        ("order1", 48.1392371213),
        ("order2", 47.2766135790),
    ];
    for (m, (label, want)) in result.methods.iter().zip(pinned) {
        assert_eq!(m.label, label);
        assert!((m.report.mean - want).abs() < TOL, "{label}: {:.10} vs {want:.10}", m.report.mean);
    }
}
