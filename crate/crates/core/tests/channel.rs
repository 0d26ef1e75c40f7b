use bmdr_core::channel::{
    colored_noise, complex_gaussian_matrix, olpc_power, psd_sqrt, sample_channel, CMatrix, ChannelModel, NoiseModel,
    Whitener,
};
use bmdr_core::rng;
use num_complex::Complex64;

#[test]
fn iid_columns_have_unit_variance() {
    let model = ChannelModel::iid(0.0);
    let mut r = rng::stream(1, &[0]);
    let draws = 10_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let h = sample_channel(&model, 4, &[1], &[1.0], &mut r).unwrap();
        acc += h.h.column(0).norm_squared() / 4.0;
    }
    let v = acc / draws as f64;
    assert!((v - 1.0).abs() < 0.05, "variance {v}");
}

fn slot_correlation(a: f64) -> f64 {
    let model = ChannelModel::iid(a);
    let mut r = rng::stream(2, &[0]);
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for _ in 0..10_000 {
        let g = model.sample_blocks(1, &[1], &mut r).unwrap();
        let next = model.evolve(&g, &mut r).unwrap();
        num += next[0][(0, 0)] * g[0][(0, 0)].conj();
        den += g[0][(0, 0)].norm_sqr();
    }
    (num / den).re
}

#[test]
fn ar1_sets_slot_to_slot_correlation() {
    assert!(slot_correlation(0.0).abs() < 0.05);
    assert!((slot_correlation(0.9) - 0.9).abs() < 0.05);
    assert!((slot_correlation(1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn whitened_noise_is_white() {
    let n_r = 4;
    let mut r = rng::stream(3, &[0]);
    let a = complex_gaussian_matrix(n_r, n_r, 1.0, &mut r);
    let b = complex_gaussian_matrix(n_r, n_r, 0.3, &mut r);
    let nm = NoiseModel {
        k_n: &a * a.adjoint() + CMatrix::identity(n_r, n_r) * Complex64::new(0.1, 0.0),
        k_e: &b * b.adjoint(),
    };
    let s = psd_sqrt(&nm.total()).unwrap();
    let w = Whitener::new(&nm).unwrap();
    let draws = 10_000;
    let mut cov = CMatrix::zeros(n_r, n_r);
    for _ in 0..draws {
        let z = w.apply_vector(&colored_noise(Some(&s), n_r, &mut r));
        cov += &z * z.adjoint();
    }
    cov /= Complex64::new(draws as f64, 0.0);
    let dist = (cov - CMatrix::identity(n_r, n_r)).norm();
    assert!(dist < 0.05 * n_r as f64, "Frobenius distance {dist}");
}

#[test]
fn open_loop_power_control() {
    let p = olpc_power(-98.0, 1.0, 100.0, 24, 23.0);
    assert!((p - 15.802).abs() < 1e-3, "{p}");
    assert_eq!(olpc_power(-98.0, 1.0, 120.0, 24, 23.0), 23.0);
}
