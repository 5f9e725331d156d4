use kplab::illposed::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn omega(xi: f64, eta: [f64; 2]) -> f64 {
    xi.powi(3) - (eta[0] * eta[0] + eta[1] * eta[1]) / xi
}

/// Four-point Gauss-Legendre nodes on `[-1, 1]`.
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

fn composite(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(4 * panels);
    for i in 0..panels {
        let c = a + (i as f64 + 0.5) * h;
        out.extend(GL4.iter().map(|(x, w)| (c + 0.5 * h * x, 0.5 * h * w)));
    }
    out
}

/// Sector masses of a box by brute-force quadrature in `xi` of the product of
/// transverse overlap lengths, sectors of width `lp` in slope `eta / xi`.
fn oracle_masses(b: &FrequencyBox, lp: f64) -> Vec<f64> {
    let nodes = composite(b.xi[0], b.xi[1], 4000);
    let lo = (b.eta[0] / b.xi[1] / lp + 0.5).floor() as i64;
    let hi = (b.eta[1] / b.xi[0] / lp + 0.5).floor() as i64;
    let ov: Vec<Vec<f64>> = (lo..=hi)
        .map(|m| {
            nodes
                .iter()
                .map(|&(x, _)| {
                    let (a, c) = (x * lp * (m as f64 - 0.5), x * lp * (m as f64 + 0.5));
                    (c.min(b.eta[1]) - a.max(b.eta[0])).max(0.0)
                })
                .collect()
        })
        .collect();
    let a2 = b.amplitude * b.amplitude;
    let mut out = vec![];
    for o1 in &ov {
        for o2 in &ov {
            let s: f64 = nodes.iter().zip(o1.iter().zip(o2)).map(|(&(_, w), (u, v))| w * u * v).sum();
            if s > 0.0 {
                out.push(a2 * s);
            }
        }
    }
    out
}

fn small_params() -> IllposedParams {
    IllposedParams { mu: 0.25, lam: 2.0, p: 3.0, coupling: false }
}

#[test]
fn phi1_sector_norm_matches_quadrature_oracle() {
    let ip = small_params();
    let (b1, _) = build_phi(&ip).unwrap();
    // xi in [1/8, 1/4] sits in the shell 1/8.
    let lp = 0.125;
    let masses = oracle_masses(&b1, lp);
    for p in [2.0, 3.0, 4.0] {
        let want = lp.sqrt() * masses.iter().map(|m| m.powf(p / 2.0)).sum::<f64>().powf(1.0 / p);
        let got = box_sector_norm(&b1, p).unwrap();
        assert!((got - want).abs() <= 1e-6 * want, "p = {p}: {got} vs oracle {want}");
    }
    let got = phi_norms(&ip).unwrap().phi1;
    let want = lp.sqrt() * masses.iter().map(|m| m.powf(1.5)).sum::<f64>().powf(1.0 / 3.0);
    assert!((got - want).abs() <= 1e-6 * want);
}

#[test]
fn sector_masses_sum_to_box_mass() {
    let (b1, b2) = build_phi(&small_params()).unwrap();
    for b in [b1, b2] {
        let s: f64 = box_sector_masses_exact(&b).unwrap().iter().sum();
        let l2 = b.l2_norm();
        assert!((s - l2 * l2).abs() <= 1e-12 * l2 * l2);
    }
}

#[test]
fn phi2_is_a_single_sector() {
    let ip = small_params();
    let (_, b2) = build_phi(&ip).unwrap();
    assert_eq!(box_sector_masses_exact(&b2).unwrap().iter().filter(|m| **m > 0.0).count(), 1);
    let want = 2f64.sqrt() * b2.l2_norm();
    assert!((phi_norms(&ip).unwrap().phi2 - want).abs() <= 1e-12 * want);
}

#[test]
fn continuum_limit_matches_enumeration() {
    let ip = IllposedParams { mu: 1.0 / 16.0, lam: 4.0, p: 3.0, coupling: true };
    let (b1, _) = build_phi(&ip).unwrap();
    assert!(box_sector_count(&b1).unwrap() <= EXACT_SECTOR_LIMIT);
    let m = box_sector_masses_exact(&b1).unwrap();
    let exact = m.iter().map(|v| v.powf(1.5)).sum::<f64>().powf(1.0 / 3.0);
    let cont = box_lp_continuum(&b1, 3.0).unwrap();
    assert!((exact - cont).abs() <= 1e-4 * exact, "exact {exact} continuum {cont}");
}

#[test]
fn cross_term_matches_time_integral_oracle() {
    let ip = IllposedParams { mu: 1.0 / 16.0, lam: 4.0, p: 3.0, coupling: true };
    let (b1, b2) = build_phi(&ip).unwrap();
    let (xi, eta) = (4.09, [0.5, 0.6]);
    let a = interaction_set(&b1, &b2, xi, eta).unwrap();
    // -2 i xi int_0^1 e^{i(1-s) omega} (2 S phi_1 S phi_2)^(s) ds, composite
    // Gauss in the interaction set and in time.
    let [gx, g1, g2] = a.map(|r| composite(r[0], r[1], 4));
    let mut phases = vec![];
    for &(x1, wx) in &gx {
        for &(y1, wy) in &g1 {
            for &(z1, wz) in &g2 {
                phases.push((wx * wy * wz, omega(x1, [y1, z1]) + omega(xi - x1, [eta[0] - y1, eta[1] - z1])));
            }
        }
    }
    let om = omega(xi, eta);
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, w) in composite(0.0, 1.0, 64) {
        let f3: Complex64 = phases.iter().map(|&(c, ph)| Complex64::from_polar(c, s * ph)).sum();
        acc += w * Complex64::from_polar(1.0, (1.0 - s) * om) * f3;
    }
    let direct = acc * 2.0 * (2.0 * PI).powf(-1.5) * b1.amplitude * b2.amplitude * Complex64::new(0.0, -2.0 * xi);
    let closed = f3_closed_on(&b1, &b2, xi, eta, 24);
    assert!((direct + closed).norm() <= 1e-6 * direct.norm(), "direct {direct} closed {closed}");
}

#[test]
fn interaction_set_rejects_outside_output_box() {
    let (b1, b2) = build_phi(&small_params()).unwrap();
    let out = b1.minkowski(&b2);
    assert!(interaction_set(&b1, &b2, out.xi[1] + 1e-3, [out.eta[0] + 0.1; 2]).is_none());
    assert!(b1.disjoint(&b2));
}

proptest! {
    #[test]
    fn phase_kernel_matches_definition(r in prop_oneof![-1e-6f64..1e-6, -50.0f64..50.0]) {
        prop_assume!(r != 0.0);
        let got = phase_kernel(r);
        if r.abs() > 1e-3 {
            let want = (Complex64::new(0.0, r).exp() - 1.0) / r;
            prop_assert!((got - want).norm() <= 1e-13);
        } else {
            // Taylor: i - r/2 - i r^2/6.
            let want = Complex64::new(-r / 2.0, 1.0 - r * r / 6.0);
            prop_assert!((got - want).norm() <= 1e-12);
        }
        prop_assert!(got.norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn interaction_set_is_exact_preimage(
        t in prop::array::uniform3(0.0f64..1.0), u in prop::array::uniform3(0.0f64..1.0),
    ) {
        let (b1, b2) = build_phi(&small_params()).unwrap();
        let out = b1.minkowski(&b2);
        let xi = out.xi[0] + t[0] * (out.xi[1] - out.xi[0]);
        let eta = [out.eta[0] + t[1] * (out.eta[1] - out.eta[0]), out.eta[0] + t[2] * (out.eta[1] - out.eta[0])];
        if let Some(a) = interaction_set(&b1, &b2, xi, eta) {
            let z: Vec<f64> = a.iter().zip(&u).map(|(r, s)| r[0] + s * (r[1] - r[0])).collect();
            let near = |b: &FrequencyBox, x: f64, e: [f64; 2]| {
                let ins = |v: f64, r: [f64; 2]| v >= r[0] - 1e-12 && v <= r[1] + 1e-12;
                ins(x, b.xi) && ins(e[0], b.eta) && ins(e[1], b.eta)
            };
            prop_assert!(near(&b1, z[0], [z[1], z[2]]));
            prop_assert!(near(&b2, xi - z[0], [eta[0] - z[1], eta[1] - z[2]]));
        }
    }
}
