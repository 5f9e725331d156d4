mod common;

use common::sign_scan_roots;
use kplab::estimates::bilinear::{
    bilinear_product_norm, bilinear_product_norm_roots, high_datum, low_datum, BilinearQuadrature, ProductWeight,
    RootQuadrature,
};
use kplab::estimates::*;
use kplab::rng::member_rng;
use proptest::prelude::*;
use rand::Rng;

fn w(xi: f64, eta: [f64; 2]) -> f64 {
    xi * xi * xi - (eta[0] * eta[0] + eta[1] * eta[1]) / xi
}

proptest! {
    #[test]
    fn resonance_function_is_the_symbol_defect(
        xi in 0.3f64..6.0, xi1 in -6.0f64..6.0,
        e in prop::array::uniform2(-5.0f64..5.0), e1 in prop::array::uniform2(-5.0f64..5.0),
    ) {
        let x2 = xi - xi1;
        prop_assume!(xi1.abs() > 0.1 && x2.abs() > 0.1);
        let want = w(xi1, e1) + w(x2, [e[0] - e1[0], e[1] - e1[1]]) - w(xi, e);
        let got = resonance_r(xi, xi1, e, e1).unwrap();
        let scale = [w(xi1, e1), w(x2, [e[0] - e1[0], e[1] - e1[1]]), w(xi, e)].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!((got - want).abs() <= 1e-12 * scale);
    }

    #[test]
    fn on_shell_points_satisfy_identity(
        xi in prop::array::uniform2(0.25f64..8.0), s in prop::array::uniform2(any::<bool>()),
        eta in prop::array::uniform2(prop::array::uniform2(-8.0f64..8.0)),
    ) {
        let xi = [if s[0] { xi[0] } else { -xi[0] }, if s[1] { xi[1] } else { -xi[1] }];
        prop_assume!((xi[0] + xi[1]).abs() > 0.25);
        let p = ResonancePoint::on_shell(xi, eta);
        // tau_i = omega_i for i = 1, 2 leaves tau_3 - omega_3 as the whole left side.
        let x3 = p.xi[2];
        let lhs = p.tau[2] - w(x3, p.eta[2]);
        let (l, r, scale) = resonance_sides(&p).unwrap();
        prop_assert!((l - lhs).abs() <= 1e-12 * scale);
        prop_assert!((l - r).abs() <= 1e-11 * scale);
    }
}

/// Sublevel area `A(tau) = 1/2 int r(theta)^2 d theta` about the centre, by
/// bisection on the level function; the coarea measure is `|dA/dtau|`.
fn sublevel_area(c: &MeasureConfig, tau: f64, ctr: [f64; 2]) -> f64 {
    let n = 256;
    let f0 = c.level_function(ctr) - tau;
    let mut s = 0.0;
    for j in 0..n {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let f = |r: f64| c.level_function([ctr[0] + r * th.cos(), ctr[1] + r * th.sin()]) - tau;
        let mut hi = 1.0;
        while f(hi).signum() == f0.signum() {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m).signum() == f0.signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        s += 0.25 * (lo + hi) * (lo + hi);
    }
    s * std::f64::consts::PI / n as f64
}

#[test]
fn circle_measure_is_area_derivative() {
    let mut rng = member_rng(77, 0);
    for _ in 0..20 {
        let c = random_measure_config(&mut rng);
        let ctr = c.center().unwrap();
        let h = 1e-3 * (1.0 + c.tau.abs());
        let d = (sublevel_area(&c, c.tau + h, ctr) - sublevel_area(&c, c.tau - h, ctr)).abs() / (2.0 * h);
        let q = circle_measure_integral(&c).unwrap();
        assert!((q.value - d).abs() <= 1e-6 * d, "coarea {} vs area derivative {d}", q.value);
        let closed = circle_measure_closed_form(&c).unwrap();
        assert!((closed - d).abs() <= 1e-6 * d);
    }
}

#[test]
fn g_rho_roots_match_sign_scan_of_g() {
    let mut rng = member_rng(78, 0);
    let mut seen = 0;
    for _ in 0..200 {
        let c = random_grho_config(&mut rng);
        if (c.xi1 - c.xi2).abs() < 1e-2 {
            continue;
        }
        let r = g_rho_analysis(&c, None).unwrap();
        for x in [-3.0, 0.5, 7.0] {
            let direct = (x - c.xi1) * (c.g(x) - c.tau);
            let poly: f64 = r.coefficients.iter().rev().fold(0.0, |a, k| a * x + k);
            assert!((direct - poly).abs() <= 1e-9 * (1.0 + direct.abs()));
        }
        let (lo, hi) = (-40.0, 40.0);
        // Scan g - tau on both sides of the pole so the jump there is never counted.
        let side = |a: f64, b: f64| -> Vec<f64> {
            let n = 20000;
            let f = |x: f64| c.g(x) - c.tau;
            let mut out = vec![];
            let hstep = (b - a) / n as f64;
            for i in 0..n {
                let (x0, x1) = (a + i as f64 * hstep, a + (i + 1) as f64 * hstep);
                if f(x0).signum() != f(x1).signum() {
                    let (mut l, mut u) = (x0, x1);
                    for _ in 0..100 {
                        let m = 0.5 * (l + u);
                        if f(m).signum() == f(l).signum() {
                            l = m;
                        } else {
                            u = m;
                        }
                    }
                    out.push(0.5 * (l + u));
                }
            }
            out
        };
        let mut scan = side(lo, c.xi1 - 1e-9);
        scan.extend(side(c.xi1 + 1e-9, hi));
        let found: Vec<f64> = r.roots.iter().map(|z| z.xi).filter(|x| (lo..=hi).contains(x)).collect();
        assert!(r.roots.len() <= 4);
        assert_eq!(found.len(), scan.len(), "roots {found:?} scan {scan:?} for {c:?}");
        for (a, b) in found.iter().zip(&scan) {
            assert!((a - b).abs() <= 1e-7 * (1.0 + a.abs()));
        }
        seen += found.len();
    }
    assert!(seen > 50);
}

#[test]
fn polynomial_roots_match_scan() {
    let mut rng = member_rng(79, 0);
    for _ in 0..100 {
        let p: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut got: Vec<f64> = real_roots(&p).into_iter().filter(|x| x.abs() <= 10.0).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scan = sign_scan_roots(&p, -10.0, 10.0, 200_000);
        assert_eq!(got.len(), scan.len(), "{p:?}");
        for (a, b) in got.iter().zip(&scan) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn bilinear_routes_agree_on_cartesian_data() {
    let mut rng = member_rng(3, 0);
    let u = low_datum(&mut rng, 1.0, 8.0, 2);
    let v = high_datum(&mut rng, 4.0, 8.0, 2);
    let rings = bilinear_product_norm(&u, &v, ProductWeight::Unit, &BilinearQuadrature { zeta: [8, 8, 8], xi1: 36, tau: 144, theta: 72 });
    let roots = bilinear_product_norm_roots(&u, &v, ProductWeight::Unit, &RootQuadrature { zeta: [8, 8, 8], transverse: 36, tau: 144, scan: 24 });
    assert!((rings - roots).abs() <= 0.01 * roots, "rings {rings} roots {roots}");
}

#[test]
fn strichartz_families_and_rejection() {
    assert_eq!(strichartz_family(4.0, 4.0).unwrap().1, 0.5);
    let (_, s) = strichartz_family(2.0, 6.0).unwrap();
    assert!((s - 1.0 / 6.0).abs() < 1e-15);
    assert!(strichartz_family(6.0, 6.0).is_err());
}
