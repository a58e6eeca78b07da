//! Property-based invariants over randomly drawn inputs.

use ffoct::layered::{fresnel, transfer_matrix, LayerStack};
use ffoct::model::{FrequencyGrid, Units};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    /// Interface reversal flips the reflection sign and preserves energy,
    /// for any admissible susceptibility pair.
    #[test]
    fn fresnel_antisymmetry_and_energy(
        a in -0.95f64..10.0,
        b in -0.95f64..10.0,
    ) {
        let (rho, tau) = fresnel(a, b).unwrap();
        let (rho_rev, _) = fresnel(b, a).unwrap();
        prop_assert!((rho + rho_rev).abs() <= 1e-12);
        prop_assert!((tau - (1.0 + rho)).abs() <= 1e-12);
        let (n1, n2) = ((a + 1.0).sqrt(), (b + 1.0).sqrt());
        prop_assert!((n1 * (1.0 - rho * rho) - n2 * tau * tau).abs() <= 1e-10 * n1.max(n2));
    }

    /// The transfer-matrix determinant only depends on the interface, never
    /// on the layer thickness or the frequency.
    #[test]
    fn transfer_matrix_determinant_identity(
        chi in -0.9f64..5.0,
        thickness in 0.1f64..20.0,
        omega in 0.1f64..30.0,
    ) {
        let (rho, tau) = fresnel(0.0, chi).unwrap();
        let m = transfer_matrix(chi, thickness, 0.0, omega, rho, tau, Units::default()).unwrap();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let want = Complex64::new((1.0 - rho) / (1.0 + rho), 0.0);
        prop_assert!((det - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }

    /// The frequency grid is the exact discrete Fourier partner of the
    /// mirror grid: mirroring an index negates the frequency.
    #[test]
    fn frequency_grid_mirror_involution(
        n_half in 2usize..128,
        dr in 0.01f64..2.0,
        k in 0usize..256,
    ) {
        let n = 2 * n_half;
        let k = k % n;
        let grid = FrequencyGrid::from_mirror_grid(dr, n, 1.0).unwrap();
        let m = grid.mirror_index(k);
        prop_assert_eq!(grid.mirror_index(m), k);
        prop_assert!((grid.omega(m) + grid.omega(k)).abs() <= 1e-12 * grid.omega(k).abs());
    }

    /// Stack validation accepts exactly the strictly-decreasing boundary
    /// sequences ending at zero.
    #[test]
    fn layer_stack_boundary_ordering(
        mut gaps in prop::collection::vec(0.01f64..5.0, 1..6),
        chi in prop::collection::vec(-0.9f64..5.0, 6),
    ) {
        let mut boundaries = vec![0.0f64];
        for g in gaps.iter() {
            let last = *boundaries.last().unwrap();
            boundaries.push(last + g);
        }
        boundaries.reverse();
        let n = boundaries.len() - 1;
        prop_assert!(LayerStack::new(boundaries.clone(), chi[..n].to_vec()).is_ok());
        // breaking the strict ordering must be rejected
        gaps[0] = 0.0;
        let mut bad = vec![0.0f64];
        for g in gaps.iter() {
            let last = *bad.last().unwrap();
            bad.push(last + g);
        }
        bad.reverse();
        prop_assert!(LayerStack::new(bad, chi[..n].to_vec()).is_err());
    }
}
