//! Discrete 2- and 1-variation of the pullback `t -> S(-t) u(t)` over the
//! sample grid.

use rayon::prelude::*;

use super::trace::SpaceTimeTrace;
use crate::error::{KpError, Result};
use crate::spectral::SpectralField;

/// Matrix `d[i][j] = ||S(-t_j) u(t_j) - S(-t_i) u(t_i)||_2`.
pub fn pullback_distances(tr: &SpaceTimeTrace) -> Vec<Vec<f64>> {
    let pb: Vec<SpectralField> = tr.pullbacks();
    let n = pb.len();
    (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { pb[i].l2_distance(&pb[j]) }).collect())
        .collect()
}

/// `sup_{i_0 < ... < i_K} (sum d[i_{k-1}][i_k]^2)^{1/2}` by a longest-path
/// recursion over the upper triangle.
pub fn v2_from_distances(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut b: f64 = 0.0;
        for i in 0..j {
            b = b.max(best[i] + d[i][j] * d[i][j]);
        }
        best[j] = b;
    }
    best.into_iter().fold(0.0, f64::max).sqrt()
}

/// Sum of consecutive distances; the finest partition is optimal for the
/// 1-variation by the triangle inequality.
pub fn u1_from_distances(d: &[Vec<f64>]) -> f64 {
    (1..d.len()).map(|j| d[j - 1][j]).sum()
}

fn need_two(tr: &SpaceTimeTrace) -> Result<()> {
    if tr.len() < 2 {
        return Err(KpError::Precondition("variation norms need at least 2 samples".into()));
    }
    Ok(())
}

pub fn v2_variation_norm(tr: &SpaceTimeTrace) -> Result<f64> {
    need_two(tr)?;
    Ok(v2_from_distances(&pullback_distances(tr)))
}

pub fn u1_variation_norm(tr: &SpaceTimeTrace) -> Result<f64> {
    need_two(tr)?;
    let pb = tr.pullbacks();
    Ok(pb.windows(2).map(|w| w[0].l2_distance(&w[1])).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::Window;
    use crate::spectral::{apply_linear_propagator, GridSpec};
    use num_complex::Complex64;

    #[test]
    fn linear_flow_has_no_variation() {
        let g = GridSpec::cube(8, 1.0, false).unwrap();
        let mut u = SpectralField::zeros(&g, false);
        u.set_mode([1, 2, 0], Complex64::new(1.0, 0.5)).unwrap();
        let tr = SpaceTimeTrace::linear(&u, vec![0.0, 0.3, 0.7, 1.1], Window::None).unwrap();
        assert!(v2_variation_norm(&tr).unwrap() < 1e-14);
        assert!(u1_variation_norm(&tr).unwrap() < 1e-14);
    }

    #[test]
    fn single_jump() {
        let g = GridSpec::cube(8, 1.0, false).unwrap();
        let a = SpectralField::zeros(&g, false);
        let mut b = a.clone();
        b.set_mode([1, 0, 0], Complex64::new(3.0, 0.0)).unwrap();
        let jump = b.l2_norm();
        let times = vec![0.0, 1.0, 2.0];
        let states = [a, b.clone(), b].iter().zip(&times).map(|(s, &t)| apply_linear_propagator(s, t)).collect();
        let tr = SpaceTimeTrace::new(times, states, Window::None).unwrap();
        assert!((v2_variation_norm(&tr).unwrap() - jump).abs() < 1e-12 * jump);
        assert!((u1_variation_norm(&tr).unwrap() - jump).abs() < 1e-12 * jump);
    }

    #[test]
    fn back_and_forth_prefers_long_jumps() {
        // Points 0, 1, 0, 1 on a line: the full partition has 3 unit steps.
        let p = [0.0f64, 1.0, 0.0, 1.0];
        let d: Vec<Vec<f64>> = p.iter().map(|a| p.iter().map(|b| (a - b).abs()).collect()).collect();
        assert!((v2_from_distances(&d) - 3f64.sqrt()).abs() < 1e-15);
        // Monotone path 0, 1, 2: one jump of length 2 beats two unit steps.
        let p = [0.0f64, 1.0, 2.0];
        let d: Vec<Vec<f64>> = p.iter().map(|a| p.iter().map(|b| (a - b).abs()).collect()).collect();
        assert!((v2_from_distances(&d) - 2.0).abs() < 1e-15);
        assert!((u1_from_distances(&d) - 2.0).abs() < 1e-15);
    }
}
