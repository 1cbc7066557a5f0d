use num_complex::Complex64;
use proptest::prelude::*;
use sqg_core::spectral::{
    forward_transform, fractional_laplacian, inverse_transform, riesz_transform, riesz_velocity, Grid, ScalarField,
    SpectralField,
};

fn field_from_modes(grid: Grid, modes: &[(i64, i64, f64, f64)]) -> ScalarField {
    let n = grid.n() as i64;
    let mut spec = SpectralField::zeros(grid);
    for &(a, b, re, im) in modes {
        if (a, b) == (0, 0) {
            continue;
        }
        let idx = |m: i64| m.rem_euclid(n) as usize;
        let c = Complex64::new(re, im);
        spec.coefficients_mut()[grid.index(idx(a), idx(b))] += c;
        spec.coefficients_mut()[grid.index(idx(-a), idx(-b))] += c.conj();
    }
    inverse_transform(&spec, 0.0).unwrap()
}

fn modes() -> impl Strategy<Value = Vec<(i64, i64, f64, f64)>> {
    prop::collection::vec((-7i64..=7, -7i64..=7, -1.0..1.0f64, -1.0..1.0f64), 1..12)
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn scale(f: &ScalarField) -> f64 {
    f.max_abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fractional_laplacian_is_linear(m1 in modes(), m2 in modes(), a in -3.0..3.0f64, b in -3.0..3.0f64, order in 0.05..1.95f64) {
        let grid = Grid::periodic(32).unwrap();
        let f = field_from_modes(grid, &m1);
        let g = field_from_modes(grid, &m2);
        let lhs = fractional_laplacian(&f.axpby(a, &g, b).unwrap(), order).unwrap();
        let rhs = fractional_laplacian(&f, order).unwrap().axpby(a, &fractional_laplacian(&g, order).unwrap(), b).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * scale(&rhs));
    }

    #[test]
    fn fractional_laplacian_semigroup(m in modes(), a1 in 0.05..0.95f64, a2 in 0.05..0.95f64) {
        let grid = Grid::periodic(32).unwrap();
        let f = field_from_modes(grid, &m);
        let lhs = fractional_laplacian(&fractional_laplacian(&f, a2).unwrap(), a1).unwrap();
        let rhs = fractional_laplacian(&f, a1 + a2).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10 * scale(&rhs));
    }

    #[test]
    fn shifts_commute_with_operators(m in modes(), di in 0usize..32, dj in 0usize..32, order in 0.1..1.9f64) {
        let grid = Grid::periodic(32).unwrap();
        let f = field_from_modes(grid, &m);
        let s = f.shifted(di, dj);
        let lap_then_shift = fractional_laplacian(&f, order).unwrap().shifted(di, dj);
        prop_assert!(max_diff(&fractional_laplacian(&s, order).unwrap(), &lap_then_shift) <= 1e-12 * scale(&lap_then_shift));
        let w = riesz_velocity(&f).unwrap();
        let ws = riesz_velocity(&s).unwrap();
        let u = ScalarField::new(grid, w.u().to_vec(), 0.0).unwrap().shifted(di, dj);
        let v = ScalarField::new(grid, w.v().to_vec(), 0.0).unwrap().shifted(di, dj);
        prop_assert!(max_diff(&ScalarField::new(grid, ws.u().to_vec(), 0.0).unwrap(), &u) <= 1e-12 * scale(&f));
        prop_assert!(max_diff(&ScalarField::new(grid, ws.v().to_vec(), 0.0).unwrap(), &v) <= 1e-12 * scale(&f));
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity(m in modes()) {
        let grid = Grid::periodic(32).unwrap();
        let f = field_from_modes(grid, &m);
        let r11 = riesz_transform(&riesz_transform(&f, 0).unwrap(), 0).unwrap();
        let r22 = riesz_transform(&riesz_transform(&f, 1).unwrap(), 1).unwrap();
        let sum = r11.axpby(1.0, &r22, 1.0).unwrap();
        let neg = f.map(|v| -v).unwrap();
        prop_assert!(max_diff(&sum, &neg) <= 1e-10 * scale(&f));
    }

    #[test]
    fn multipliers_preserve_hermitian_symmetry(m in modes(), order in 0.1..1.9f64) {
        let grid = Grid::periodic(32).unwrap();
        let f = field_from_modes(grid, &m);
        let lap = forward_transform(&fractional_laplacian(&f, order).unwrap()).unwrap();
        prop_assert!(lap.hermitian_defect() <= 1e-13 * scale(&f));
        let w = riesz_velocity(&f).unwrap();
        let u = forward_transform(&ScalarField::new(grid, w.u().to_vec(), 0.0).unwrap()).unwrap();
        prop_assert!(u.hermitian_defect() <= 1e-13 * scale(&f));
    }
}
