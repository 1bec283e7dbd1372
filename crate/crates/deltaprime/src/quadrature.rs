//! 1D quadrature node builders shared by the form estimates and the
//! Hilbert-Schmidt distance code.
//!
//! The kernels integrated here are piecewise smooth with kinks or jumps at a
//! handful of known locations (interaction centers, potential support
//! edges), so the basic tool is a composite Gauss-Legendre rule on panels
//! whose boundaries include those feature points. Gauss nodes are interior,
//! which keeps evaluation away from the discontinuities themselves.

/// 8-point Gauss-Legendre rule on [-1, 1].
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights of a composite 8-point Gauss rule on `[lo, hi]`, with
/// panel boundaries at every feature point inside the interval and panels
/// subdivided until roughly `n_target` nodes cover the interval.
pub fn panel_gauss_nodes(lo: f64, hi: f64, features: &[f64], n_target: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(hi > lo, "empty quadrature interval");
    let mut cuts: Vec<f64> = vec![lo, hi];
    for &f in features {
        if f > lo && f < hi {
            cuts.push(f);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let total = hi - lo;
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for pair in cuts.windows(2) {
        let (s0, s1) = (pair[0], pair[1]);
        let seg = s1 - s0;
        if seg <= 0.0 {
            continue;
        }
        // subdivide so node density is roughly uniform across the interval
        let m = ((n_target as f64 * seg / total / 8.0).ceil() as usize).max(1);
        for k in 0..m {
            let a = s0 + seg * k as f64 / m as f64;
            let b = s0 + seg * (k + 1) as f64 / m as f64;
            let half = (b - a) / 2.0;
            let mid = (a + b) / 2.0;
            for i in 0..8 {
                xs.push(mid + half * GL8_X[i]);
                ws.push(half * GL8_W[i]);
            }
        }
    }
    (xs, ws)
}

/// Composite trapezoid value of `f` sampled on a uniform grid over `[lo, hi]`.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..n - 1 {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_panels_integrate_smooth_functions() {
        let (xs, ws) = panel_gauss_nodes(0.0, 1.0, &[0.3], 32);
        let val: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.exp()).sum();
        assert_relative_eq!(val, std::f64::consts::E - 1.0, max_relative = 1e-14);
    }

    #[test]
    fn gauss_panels_handle_kinks_at_features() {
        // |x| has a kink at 0; with the feature split the rule is exact-ish
        let (xs, ws) = panel_gauss_nodes(-1.0, 2.0, &[0.0], 64);
        let val: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.abs()).sum();
        assert_relative_eq!(val, 2.5, max_relative = 1e-13);
    }

    #[test]
    fn trapezoid_matches_linear_exactly() {
        assert_relative_eq!(trapezoid(|x| 3.0 * x + 1.0, 0.0, 2.0, 11), 8.0);
    }
}
