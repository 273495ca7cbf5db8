use ftl_core::lattice::{dft, inner, inverse_dft, make_grid, WaveFunction};
use ftl_core::linalg::{symplectic_form, RealMatrix};
use ftl_core::potential::Potential;
use ftl_core::propagators::{eigensolver_reference, trotter_propagator, GridPropagator};
use ftl_core::symplectic::{flow_at, QuadraticHamiltonian};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn sym2(p: f64, q: f64, r: f64) -> RealMatrix {
    RealMatrix::from_rows(&[vec![p, q], vec![q, r]])
}

prop_compose! {
    fn hamiltonian()(a in (-2.0f64..2.0, -1.0f64..1.0, -2.0f64..2.0),
                     b in proptest::collection::vec(-1.0f64..1.0, 4),
                     c in (0.5f64..3.0, -0.3f64..0.3, 0.5f64..3.0)) -> QuadraticHamiltonian {
        let b = RealMatrix::from_rows(&[vec![b[0], b[1]], vec![b[2], b[3]]]);
        QuadraticHamiltonian::new(sym2(a.0, a.1, a.2), b, sym2(c.0, c.1, c.2)).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn flow_is_symplectic_with_unit_determinant(h in hamiltonian(), t in -3.0f64..3.0) {
        let f = flow_at(&h, t);
        let j = symplectic_form(2);
        let m = f.matrix();
        let scale = m.max_abs().max(1.0);
        let residual = m.transpose().mul(&j).mul(m).sub(&j).max_abs();
        prop_assert!(residual <= 1e-11 * scale * scale, "residual {residual}");
        prop_assert!((f.det() - 1.0).abs() <= 1e-10 * scale.powi(4));
    }

    #[test]
    fn flow_group_law(h in hamiltonian(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let composed = flow_at(&h, s).matrix().mul(flow_at(&h, t).matrix());
        let direct = flow_at(&h, s + t);
        let diff = composed.sub(direct.matrix()).max_abs();
        prop_assert!(diff <= 1e-10 * direct.matrix().max_abs().max(1.0).powi(2), "diff {diff}");
    }

    #[test]
    fn flow_blocks_reassemble(h in hamiltonian(), t in -2.0f64..2.0) {
        let f = flow_at(&h, t);
        let m = RealMatrix::from_blocks(&f.a_t(), &f.b_t(), &f.c_t(), &f.d_t());
        prop_assert_eq!(m.max_abs(), f.matrix().max_abs());
        prop_assert_eq!(f.det_b(), f.b_t().det());
    }

    #[test]
    fn dft_is_an_isometry(
        re in proptest::collection::vec(-1.0f64..1.0, 64),
        im in proptest::collection::vec(-1.0f64..1.0, 64),
    ) {
        let grid = make_grid(1, 64, 4.0).unwrap();
        let values: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect();
        let f = WaveFunction::new(grid, values).unwrap();
        let spec = dft(&f);
        let energy = inner(&f, &f).unwrap().re;
        let spectral = spec.inner(&spec).unwrap().re;
        prop_assert!((energy - spectral).abs() <= 1e-12 * energy.max(1e-300));
        let back = inverse_dft(&spec);
        for (u, v) in back.values().iter().zip(f.values()) {
            prop_assert!((u - v).norm() <= 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trotter_is_unitary_for_real_potentials(amp in -2.0f64..2.0, freq in 0.2f64..2.0, t in 0.1f64..2.5, n in 1usize..12) {
        let grid = make_grid(1, 32, 5.0).unwrap();
        let h = QuadraticHamiltonian::harmonic(1).with_potential(Potential::cosine(amp, vec![freq]));
        let k = trotter_propagator(&h, t, n, &grid).unwrap();
        prop_assert!(k.unitarity_residual() <= 1e-10, "residual {}", k.unitarity_residual());
    }

    #[test]
    fn grid_propagator_composes(amp in -1.0f64..1.0, s in 0.1f64..1.5, t in 0.1f64..1.5) {
        let grid = make_grid(1, 32, 5.0).unwrap();
        let h = QuadraticHamiltonian::harmonic(1).with_potential(Potential::cosine(amp, vec![1.0]));
        let prop = GridPropagator::new(&h, &grid).unwrap();
        let composed = prop.evolve(s) * prop.evolve(t);
        let direct = prop.evolve(s + t);
        let mut diff = 0.0f64;
        for i in 0..32 {
            for j in 0..32 {
                diff = diff.max((composed[(i, j)] - direct[(i, j)]).norm());
            }
        }
        prop_assert!(diff <= 1e-11, "diff {diff}");
    }
}

#[test]
fn free_trotter_needs_no_refinement() {
    let grid = make_grid(1, 64, 8.0).unwrap();
    let h = QuadraticHamiltonian::free(1);
    let exact = eigensolver_reference(&h, 0.7, &grid).unwrap();
    for n in [1, 3, 17] {
        let k = trotter_propagator(&h, 0.7, n, &grid).unwrap();
        let mut diff = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                diff = diff.max((k.entry(i, j) - exact.entry(i, j)).norm());
            }
        }
        assert!(diff <= 1e-9 * exact.max_abs(), "n = {n}: {diff}");
    }
}
