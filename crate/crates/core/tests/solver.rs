mod common;

use common::*;
use kplab::data::{gaussian_derivative, random_real_field};
use kplab::decomposition::{dyadic_projection, lqlp_norm, NormParams};
use kplab::rng::member_rng;
use kplab::solver::*;
use kplab::spectral::*;
use num_complex::Complex64;
use std::f64::consts::PI;

#[test]
fn nonlinearity_matches_convolution_oracle() {
    let g = GridSpec::cube(16, 1.0, true).unwrap();
    let u = random_real_field(&g, &mut member_rng(11, 0), [5, 5, 5]);
    let got = nonlinearity(&u);
    let want = naive_nonlinearity(&u);
    assert!(max_gap(&got.coeff, &want) < 1e-10 * max_abs(&want));
    assert!(got.x_mean_defect() == 0.0);
}

#[test]
fn fourth_order_in_time() {
    let g = GridSpec::cube(16, 2.0, true).unwrap();
    let u0 = gaussian_derivative(&g, [1.0; 3], [6.0; 3], 2.0);
    let fin = |dt: f64| evolve(&u0, &SimConfig::new(g.clone(), dt, 0.5, 2.0).unwrap()).unwrap().states.pop().unwrap();
    let r = fin(0.025 / 8.0);
    let (e1, e2) = (fin(0.025).l2_distance(&r), fin(0.0125).l2_distance(&r));
    assert!((e1 / e2).log2() >= 3.5, "order {}", (e1 / e2).log2());
}

#[test]
fn weak_nonlinearity_approaches_linear_flow_at_first_order() {
    let g = GridSpec::cube(16, 2.0, true).unwrap();
    let u0 = gaussian_derivative(&g, [1.0; 3], [6.0; 3], 1.0);
    let gap = |alpha: f64| {
        let mut cfg = SimConfig::new(g.clone(), 0.01, 0.5, 2.0).unwrap();
        cfg.alpha = alpha;
        evolve(&u0, &cfg).unwrap().states.pop().unwrap().l2_distance(&apply_linear_propagator(&u0, 0.5))
    };
    let alphas = [0.4, 0.2, 0.1, 0.05];
    let xs: Vec<f64> = alphas.iter().map(|a: &f64| a.log2()).collect();
    let ys: Vec<f64> = alphas.iter().map(|&a| gap(a).log2()).collect();
    let fit = kplab::fit::fit_line(&xs, &ys);
    assert!((fit.slope - 1.0).abs() < 0.05, "slope {}", fit.slope);
}

#[test]
fn picard_zero_datum() {
    let g = GridSpec::cube(16, 1.0, true).unwrap();
    let cfg = SimConfig::new(g.clone(), 0.05, 0.5, 20.0).unwrap();
    let (tr, rep) = picard_iterate(&SpectralField::zeros(&g, true), &cfg, 10, 1e-14).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterates, 0);
    assert!(tr.sup_l2() == 0.0);
}

#[test]
fn picard_large_datum_diverges() {
    let g = GridSpec::cube(16, 2.0, true).unwrap();
    let u0 = gaussian_derivative(&g, [1.0; 3], [6.0; 3], 1.0);
    let np = NormParams { q: f64::INFINITY, p: 1.5, b: 0.9 };
    let u0 = u0.scaled(400.0 / lqlp_norm(&u0, &np));
    let cfg = SimConfig::new(g, 1.0 / 32.0, 1.0, 32.0).unwrap();
    let opt = PicardOptions { smallness: f64::INFINITY, n_max: 20, ..Default::default() };
    match picard_iterate_with(&u0, &cfg, &opt) {
        Err(kplab::KpError::Divergence(_)) => {}
        other => panic!("expected divergence, got {:?}", other.map(|r| r.1)),
    }
    assert!(picard_iterate(&u0, &SimConfig::new(u0.grid.clone(), 1.0 / 32.0, 1.0, 32.0).unwrap(), 5, 1e-12).is_err());
}

fn tl_grid() -> GridSpec {
    // Strong anisotropy spreads the slope separations over many dyadic levels.
    GridSpec::new([16, 16, 16], [2.0 * PI * 8.0, 2.0 * PI / 64.0, 2.0 * PI / 64.0], false).unwrap()
}

#[test]
fn tl_levels_sum_to_product() {
    let g = tl_grid();
    let prof = MultiplierProfile::default();
    let u = random_real_field(&g, &mut member_rng(21, 0), [3, 3, 3]);
    let v = random_real_field(&g, &mut member_rng(21, 1), [3, 3, 3]);
    let lmax = max_level(&u, &v, &prof).unwrap();
    assert!(lmax >= 64, "levels exercised up to {lmax}");
    let mut sum = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut l = 1;
    while l <= lmax {
        let t = apply_tl(&u, &v, l, &prof).unwrap();
        for (s, c) in sum.iter_mut().zip(&t.field.coeff) {
            *s += c;
        }
        l *= 2;
    }
    let mut want = naive_product(&u, &v);
    for (i, w) in want.iter_mut().enumerate() {
        if g.wavenumbers(i)[0] == 0 {
            *w = Complex64::new(0.0, 0.0);
        }
    }
    assert!(max_gap(&sum, &want) < 1e-10 * max_abs(&want));
    let (parts, zero) = tl_decomposition(&u, &v, &prof).unwrap();
    assert!(zero > 0);
    let mut total = vec![Complex64::new(0.0, 0.0); g.len()];
    for f in parts.values() {
        for (s, c) in total.iter_mut().zip(&f.coeff) {
            *s += c;
        }
    }
    assert!(max_gap(&total, &want) < 1e-10 * max_abs(&want));
}

#[test]
fn parallel_slopes_live_at_level_one() {
    let g = tl_grid();
    let prof = MultiplierProfile::default();
    let mut u = SpectralField::zeros(&g, false);
    let mut v = SpectralField::zeros(&g, false);
    u.set_mode([1, 1, -1], Complex64::new(1.0, 0.0)).unwrap();
    v.set_mode([2, 2, -2], Complex64::new(0.5, 0.5)).unwrap();
    let one = apply_tl(&u, &v, 1, &prof).unwrap().field;
    assert!(one.coeff_energy() > 0.0);
    for l in [2, 4, 8, 1024] {
        assert_eq!(apply_tl(&u, &v, l, &prof).unwrap().field.coeff_energy(), 0.0);
    }
}

#[test]
fn slope_identity_pointwise() {
    let mut rng = member_rng(5, 0);
    use rand::Rng;
    for _ in 0..1000 {
        let x1: f64 = rng.gen_range(0.1..4.0) * if rng.gen() { 1.0 } else { -1.0 };
        let x2: f64 = rng.gen_range(0.1..4.0);
        let e1 = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let e2 = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        if (x1 + x2).abs() < 0.1 {
            continue;
        }
        let rhs = pair_slope(x1, e1, x2, e2);
        for i in 0..2 {
            let lhs = ((e1[i] + e2[i]) / (x1 + x2) - e1[i] / x1) / x2;
            assert!((lhs + rhs[i]).abs() < 1e-12 * (1.0 + rhs[i].abs()));
        }
    }
}

#[test]
fn tl_trilinear_symmetry() {
    let g = tl_grid();
    let prof = MultiplierProfile::default();
    let lam = 0.25;
    let u = dyadic_projection(&random_real_field(&g, &mut member_rng(31, 0), [3, 3, 3]), lam).unwrap();
    let v = dyadic_projection(&random_real_field(&g, &mut member_rng(31, 1), [3, 3, 3]), lam).unwrap();
    let w = dyadic_projection(&random_real_field(&g, &mut member_rng(31, 2), [3, 3, 3]), 0.125).unwrap();
    let lmax = max_level(&u, &v, &prof).unwrap().max(max_level(&u, &w, &prof).unwrap());
    let mut l = 1;
    while l <= 2 * lmax {
        let a = u.bilinear_pairing(&apply_tl(&v, &w, l, &prof).unwrap().field);
        let b = v.bilinear_pairing(&apply_tl(&u, &w, l, &prof).unwrap().field);
        let c = w.bilinear_pairing(&apply_tl(&u, &v, l, &prof).unwrap().field);
        let scale = a.norm().max(b.norm()).max(c.norm()).max(1e-300);
        assert!((a - b).norm() <= 1e-10 * scale && (a - c).norm() <= 1e-10 * scale, "L = {l}: {a} {b} {c}");
        l *= 2;
    }
}
