use bmdr_core::abstraction::{awgn_bmdr, esm_effective_sinr, EsmConfig, EsmFamily};
use bmdr_core::bmdr::{estimate_bmdr_mc, predict_set, siso_bmdr_mc, BmdrPredictor, MiCurves, MiTablePredictor};
use bmdr_core::channel::{complex_gaussian, sample_channel, ChannelModel};
use bmdr_core::detect::{lmmse_sinr, DetectorKind, DetectorSpec};
use bmdr_core::modem::{constellation, llr_to_posterior, BitLlr};
use bmdr_core::rng;
use rand::Rng;

#[test]
fn posterior_is_logistic() {
    let p = llr_to_posterior(BitLlr::new(2.0, 30.0), 0);
    assert!((p - 1.0 / (1.0 + 2f64.exp())).abs() < 1e-15);
    assert!((p - 0.11920).abs() < 1e-5);
    let q = llr_to_posterior(BitLlr::new(2.0, 30.0), 1);
    assert!((p + q - 1.0).abs() < 1e-15);
}

/// Sum over bits of `I(b_j; Y)` from histograms of the axis carrying bit `j`.
fn histogram_bicm_mi(snr: f64, samples: usize, seed: u64) -> f64 {
    let c = constellation(2).unwrap();
    let bins = 400;
    let (lo, hi) = (-6.0, 6.0);
    let mut counts = vec![[[0u64; 2]; 400]; 2];
    let mut r = rng::stream(seed, &[0]);
    for _ in 0..samples {
        let lab = r.random_range(0..4usize);
        let y = c.point(lab) + complex_gaussian(1.0 / snr, &mut r);
        for (j, v) in [y.re, y.im].into_iter().enumerate() {
            let k = (((v - lo) / (hi - lo)) * bins as f64).clamp(0.0, bins as f64 - 1.0) as usize;
            counts[j][k][c.label_bit(lab, j) as usize] += 1;
        }
    }
    let n = samples as f64;
    let mut mi = 0.0;
    for hist in &counts {
        let pb: Vec<f64> = (0..2).map(|b| hist.iter().map(|h| h[b]).sum::<u64>() as f64 / n).collect();
        for h in hist {
            let py = (h[0] + h[1]) as f64 / n;
            for b in 0..2 {
                let pj = h[b] as f64 / n;
                if pj > 0.0 {
                    mi += pj * (pj / (py * pb[b])).log2();
                }
            }
        }
    }
    mi
}

#[test]
fn siso_bmdr_times_m_is_bicm_capacity() {
    let est = siso_bmdr_mc(2, 1.0, 200_000, &mut rng::stream(1, &[0])).unwrap();
    let mi = histogram_bicm_mi(1.0, 2_000_000, 2);
    assert!((2.0 * est.value - mi).abs() < 0.01, "m*BMDR {} vs histogram {mi}", 2.0 * est.value);
}

#[test]
fn siso_bmdr_tracks_awgn_curve() {
    let curves = MiCurves::shared();
    for (m, db) in [(2, 0.0), (4, 8.0), (6, 14.0)] {
        let snr = 10f64.powf(db / 10.0);
        let est = siso_bmdr_mc(m, snr, 100_000, &mut rng::stream(3, &[m as u64])).unwrap();
        let curve = awgn_bmdr(&curves, m, snr).unwrap();
        assert!((est.value - curve).abs() < 4.0 * est.std_err + 0.01, "m={m}: {} vs {curve}", est.value);
    }
}

#[test]
fn mi_table_agrees_with_monte_carlo_for_lmmse() {
    let model = ChannelModel::iid(0.0);
    let pred = MiTablePredictor::new(MiCurves::shared());
    let det = DetectorSpec::new(DetectorKind::Lmmse, 4, 2);
    let mut r = rng::stream(4, &[0]);
    let mut diff = 0.0;
    let mut count = 0;
    for _ in 0..100 {
        let h = sample_channel(&model, 4, &[1, 1, 1, 1], &[3.0; 4], &mut r).unwrap();
        let a = pred.predict(&h, &[2; 4], &mut r).unwrap();
        let b = estimate_bmdr_mc(&det, &h, &[2; 4], 2000, &mut r).unwrap();
        for (x, y) in a.iter().zip(&b) {
            diff += (x.value - y.value).abs();
            count += 1;
        }
    }
    let mad = diff / count as f64;
    assert!(mad <= 0.02, "mean absolute difference {mad}");
}

#[test]
fn monte_carlo_is_self_consistent_across_seeds() {
    let model = ChannelModel::iid(0.0);
    let h = sample_channel(&model, 4, &[1, 1], &[2.0, 2.0], &mut rng::stream(5, &[0])).unwrap();
    let det = DetectorSpec::new(DetectorKind::KBest(4), 2, 4);
    let runs: Vec<_> =
        (0..5).map(|s| estimate_bmdr_mc(&det, &h, &[4, 4], 10_000, &mut rng::stream(s, &[1])).unwrap()).collect();
    for ue in 0..2 {
        for a in &runs {
            for b in &runs {
                let se = (a[ue].std_err.powi(2) + b[ue].std_err.powi(2)).sqrt();
                assert!((a[ue].value - b[ue].value).abs() <= 3.0 * se + 1e-12);
            }
        }
    }
}

#[test]
fn mi_table_equals_miesm_mean_mi() {
    let curves = MiCurves::shared();
    let pred = MiTablePredictor::new(curves.clone());
    let model = ChannelModel::iid(0.0);
    let mut r = rng::stream(6, &[0]);
    for m in [2, 4, 6] {
        let channels: Vec<_> =
            (0..8).map(|_| sample_channel(&model, 4, &[1, 1], &[10.0, 10.0], &mut r).unwrap()).collect();
        let bmdr = predict_set(&pred, &[m, m], &channels, &mut r).unwrap();
        let curve = curves.curve(m).unwrap();
        for (ue, b) in bmdr.iter().enumerate() {
            let sinrs: Vec<f64> = channels.iter().map(|h| lmmse_sinr(&h.h).unwrap()[ue]).collect();
            let mean_mi = sinrs.iter().map(|&s| curve.eval(s)).sum::<f64>() / sinrs.len() as f64;
            assert!((b - mean_mi / m as f64).abs() < 1e-9);
            let eff = esm_effective_sinr(&sinrs, &EsmConfig::new(EsmFamily::Miesm), m, &curves).unwrap();
            assert!(!eff.clamped);
            assert!((awgn_bmdr(&curves, m, eff.value).unwrap() - b).abs() < 1e-9);
        }
    }
}

#[test]
fn eesm_closed_form() {
    let e = std::f64::consts::E;
    let v = esm_effective_sinr(&[1.0, e], &EsmConfig::new(EsmFamily::Eesm), 2, &MiCurves::shared()).unwrap().value;
    let want = -(((-1f64).exp() + (-e).exp()) / 2.0).ln();
    assert!((v - want).abs() < 1e-12);
}
