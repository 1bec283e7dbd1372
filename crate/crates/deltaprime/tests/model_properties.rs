//! Property tests over the kernel families: symmetry under coordinate swap,
//! positivity of the free kernel, and the Hilbert-Schmidt/operator-norm
//! ordering on random model pairs.

use deltaprime::convergence::{hs_distance, op_norm_estimate};
use deltaprime::delta_arrays::{cs_couplings, CouplingConfig};
use deltaprime::kernels::SpectralPoint;
use deltaprime::model::KernelModel;
use proptest::prelude::*;

fn sp(k: f64) -> SpectralPoint {
    SpectralPoint::new(k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_stay_symmetric_and_finite(
        kappa in 0.3f64..6.0,
        beta in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
        a in 0.01f64..0.25,
        x in -4.0f64..4.0,
        xp in -4.0f64..4.0,
    ) {
        // skip the delta-prime resonance line
        prop_assume!((2.0 + beta * kappa).abs() > 0.05);
        let s = sp(kappa);
        let cfg = CouplingConfig::balanced(beta, a).unwrap();
        let arr = match cs_couplings(&cfg) {
            Ok(arr) => arr,
            Err(_) => return Ok(()), // degenerate spacing a = beta/2
        };
        let models = [
            KernelModel::Free,
            KernelModel::DeltaPrime { beta, y: 0.0 },
            KernelModel::Dirichlet { y: 0.0 },
            KernelModel::DeltaArray(arr),
        ];
        for m in &models {
            let p = match m.prepare(s) {
                Ok(p) => p,
                Err(_) => continue, // -kappa^2 at an array eigenvalue
            };
            let v1 = p.eval(x, xp);
            let v2 = p.eval(xp, x);
            prop_assert!(v1.is_finite());
            prop_assert!((v1 - v2).abs() <= 1e-12 * v1.abs().max(1.0));
        }
        let free = sp(kappa);
        prop_assert!(deltaprime::kernels::free_kernel(free, x, xp).value > 0.0);
    }

    #[test]
    fn hs_dominates_operator_norm(
        kappa in 1.5f64..5.0,
        beta in -2.0f64..-0.5,
        a in 0.02f64..0.12,
    ) {
        prop_assume!((2.0 + beta * kappa).abs() > 0.1);
        let s = sp(kappa);
        let cfg = CouplingConfig::balanced(beta, a).unwrap();
        let arr = match cs_couplings(&cfg) {
            Ok(arr) => arr,
            Err(_) => return Ok(()),
        };
        let am = KernelModel::DeltaArray(arr);
        let dp = KernelModel::DeltaPrime { beta, y: 0.0 };
        let l = 16.0 / kappa;
        if let (Ok((hs, tail)), Ok(op)) = (
            hs_distance(&am, &dp, s, l, 220),
            op_norm_estimate(&am, &dp, s, l, 220),
        ) {
            prop_assert!(hs >= 0.0 && tail >= 0.0);
            prop_assert!(op <= hs * 1.0001, "op {op} vs hs {hs}");
        }
    }
}
