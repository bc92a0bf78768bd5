use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use fracspec::assemble::assemble;
use fracspec::coeff::{CoefficientField, CoefficientParams, RadialBump};
use fracspec::evolution::{
    picard_solve, viscous_solve, Nonlinearity, NonlinearityKind, PicardOptions, Term, ViscousOptions,
};
use fracspec::extension::{extend, ExtensionResolution};
use fracspec::grid::{Boundary, Grid};
use fracspec::problem::Problem;
use fracspec::spectral::{eigendecompose, fractional_power, unitary_propagate, ScalarMap, SpectralDecomposition};
use fracspec::ucprobe::{probe, VanishingSpec};

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Dirichlet), Just(Boundary::Periodic)]
}

/// Random uniformly elliptic field on a small grid.
fn field_on(grid: &Grid, a: &[f64], q: &[f64], c: &[f64]) -> CoefficientField {
    let dim = grid.dim();
    let nodes = grid.node_count();
    let mut av = Vec::with_capacity(nodes * dim * dim);
    for i in 0..nodes {
        if dim == 1 {
            av.push(a[i % a.len()]);
        } else {
            let (p, r, s) = (a[i % a.len()], a[(i + 1) % a.len()], q[i % q.len()]);
            av.extend([p, s, s, r]);
        }
    }
    let cv = (0..nodes).map(|i| c[i % c.len()]).collect();
    CoefficientField::from_samples(grid, av, cv).unwrap()
}

fn grid_and_field() -> impl Strategy<Value = (Grid, CoefficientField)> {
    (
        1usize..=2,
        boundary(),
        prop::collection::vec(1.0..3.0f64, 7),
        prop::collection::vec(-0.4..0.4f64, 5),
        prop::collection::vec(0.0..2.0f64, 3),
    )
        .prop_map(|(dim, b, a, q, c)| {
            let n = if dim == 1 { 17 } else { 7 };
            let grid = Grid::new(dim, n, 2.0, b).unwrap();
            let field = field_on(&grid, &a, &q, &c);
            (grid, field)
        })
}

fn bump_dec(n: usize, scale: f64, width: f64) -> (Grid, SpectralDecomposition) {
    let s = Problem::new(
        1,
        n,
        3.0,
        Boundary::Dirichlet,
        CoefficientParams::RadialBump(RadialBump::isotropic(1, scale, width)),
    )
    .build()
    .unwrap();
    (s.grid, s.decomposition)
}

fn complex_vec(n: usize) -> impl Strategy<Value = DVector<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

fn real_vec(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..1.0f64, n).prop_map(DVector::from_vec)
}

const N: usize = 24;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assembled_matrix_is_exactly_symmetric((grid, field) in grid_and_field()) {
        let op = assemble(&grid, &field).unwrap();
        let k = op.matrix();
        prop_assert_eq!(k, &k.transpose());
    }

    #[test]
    fn quadratic_form_is_nonnegative((grid, field) in grid_and_field(), seed in 0u64..1000) {
        let op = assemble(&grid, &field).unwrap();
        let n = op.dof_count();
        let f = DVector::from_fn(n, |i, _| ((i as u64 * 7919 + seed) % 101) as f64 / 50.0 - 1.0);
        let q = f.dot(&(op.matrix() * &f));
        prop_assert!(q >= -1e-12 * op.max_abs_entry() * f.norm_squared());
    }

    #[test]
    fn constant_shift_moves_every_eigenvalue((grid, field) in grid_and_field(), c0 in 0.0..3.0f64) {
        let base = eigendecompose(&assemble(&grid, &field).unwrap()).unwrap();
        let shifted = eigendecompose(&assemble(&grid, &field.with_c_shift(c0)).unwrap()).unwrap();
        let scale = base.lambda_max() + c0;
        for (a, b) in base.eigenvalues().iter().zip(shifted.eigenvalues().iter()) {
            prop_assert!((b - a - c0).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn propagator_is_unitary_and_a_group(
        f in complex_vec(N - 2),
        alpha in 0.05..1.5f64,
        t in -2.0..2.0f64,
        s in -2.0..2.0f64,
        scale in 0.2..2.0f64,
    ) {
        let (_, dec) = bump_dec(N, scale, 1.0);
        let ut = unitary_propagate(&dec, alpha, t, &f).unwrap();
        prop_assert!((ut.norm() - f.norm()).abs() <= 1e-10 * f.norm());
        let ust = unitary_propagate(&dec, alpha, s, &ut).unwrap();
        let direct = unitary_propagate(&dec, alpha, t + s, &f).unwrap();
        prop_assert!((ust - direct).norm() <= 1e-10 * f.norm());
    }

    #[test]
    fn functional_calculus_is_a_homomorphism(f in real_vec(N - 2), a in 0.0..1.5f64, b in 0.0..1.5f64) {
        let (_, dec) = bump_dec(N, 1.0, 1.0);
        let two = fractional_power(&dec, a, &fractional_power(&dec, b, &f).unwrap()).unwrap();
        let one = fractional_power(&dec, a + b, &f).unwrap();
        prop_assert!((&two - &one).norm() <= 1e-10 * one.norm().max(f.norm()));
    }

    #[test]
    fn functions_of_l_commute_with_l_and_are_self_adjoint(
        f in real_vec(N - 2),
        g in real_vec(N - 2),
        alpha in 0.05..2.0f64,
        t in 0.01..1.0f64,
    ) {
        let (_, dec) = bump_dec(N, 0.5, 1.5);
        let l = dec.matrix();
        for map in [ScalarMap::Power(alpha), ScalarMap::Heat { t }] {
            let a = dec.apply_real(&map, &(l * &f)).unwrap();
            let b = l * dec.apply_real(&map, &f).unwrap();
            prop_assert!((&a - &b).norm() <= 1e-9 * b.norm().max(1.0));
            let lhs = dec.apply_real(&map, &f).unwrap().dot(&g);
            let rhs = f.dot(&dec.apply_real(&map, &g).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (f.norm() * g.norm()).max(1.0) * dec.lambda_max().powf(alpha.max(1.0)));
        }
    }

    #[test]
    fn trace_is_monotone_and_contractive_in_y(u in real_vec(14), alpha in 0.1..0.9f64) {
        let (grid, dec) = bump_dec(16, 1.0, 1.0);
        let res = ExtensionResolution::for_spectrum(&dec);
        let ext = extend(&dec, alpha, &u, &res.ladder.nodes(), &res.quadrature).unwrap();
        let norms: Vec<f64> = (0..ext.y_nodes().len()).map(|k| grid.norm(&ext.slice(k))).collect();
        let top = grid.norm(&u);
        prop_assert!(norms[0] <= top * (1.0 + 1e-8));
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-8));
        }
    }

    #[test]
    fn picard_is_gauge_covariant(theta in 0.0..std::f64::consts::TAU, amp in 0.05..0.4f64) {
        let (grid, dec) = bump_dec(16, 1.0, 1.0);
        let u0 = grid.sample(|x| amp * (-x[0] * x[0]).exp()).map(|v| Complex64::new(v, 0.0));
        let p = Nonlinearity::power_law(Complex64::new(1.0, 0.0), 1);
        let opts = PicardOptions { t_final: 0.05, dt: 5e-3, ..Default::default() };
        let phase = Complex64::from_polar(1.0, theta);
        let a = picard_solve(&dec, 0.5, &u0, &p, &opts).unwrap();
        let b = picard_solve(&dec, 0.5, &(&u0 * phase), &p, &opts).unwrap();
        prop_assert!((a.last() * phase - b.last()).norm() <= 1e-10 * u0.norm());
    }

    #[test]
    fn picard_without_nonlinearity_is_the_free_flow(u0 in complex_vec(14), alpha in 0.1..1.0f64) {
        let (_, dec) = bump_dec(16, 1.0, 1.0);
        let p = Nonlinearity::zero(NonlinearityKind::Polynomial, 1);
        let opts = PicardOptions { t_final: 0.2, dt: 0.02, ..Default::default() };
        let tr = picard_solve(&dec, alpha, &u0, &p, &opts).unwrap();
        for (k, &t) in tr.times.iter().enumerate() {
            let free = unitary_propagate(&dec, alpha, t, &u0).unwrap();
            prop_assert!((tr.state(k) - free).norm() <= 1e-9 * u0.norm());
        }
    }

    #[test]
    fn linear_viscous_flow_never_grows(u0 in complex_vec(14), eps in 0.0..0.2f64, alpha in 0.1..1.0f64) {
        let (_, dec) = bump_dec(16, 1.0, 1.0);
        let q = Nonlinearity::zero(NonlinearityKind::Gradient, 1);
        let opts = ViscousOptions { t_final: 0.1, dt: 0.01, output_stride: 1, ..Default::default() };
        let tr = viscous_solve(&dec, alpha, eps, &u0, &q, &opts).unwrap();
        let norms: Vec<f64> = (0..tr.times.len()).map(|k| tr.state(k).norm()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn energy_hypothesis_matches_the_symbolic_rule(
        a in 0u32..3, b in 0u32..3, c in 0u32..3, d in 0u32..3,
        re in prop_oneof![Just(1.0f64), Just(-0.5)],
        im in prop_oneof![Just(0.0f64), Just(0.7)],
    ) {
        prop_assume!(a + b + c + d >= 2);
        let grid = Grid::new(1, 9, 1.0, Boundary::Periodic).unwrap();
        let deg = a + b + c + d;
        let q = Nonlinearity::gradient(1, vec![Term::new(Complex64::new(re, im), vec![a, b, c, d])], deg, deg).unwrap();
        let expected = c == 0 || (im == 0.0 && a == b && c == d + 1);
        prop_assert_eq!(q.satisfies_energy_hypothesis(&grid).unwrap(), expected);
    }

    #[test]
    fn nonlocality_ratio_is_scale_invariant_and_deterministic(alpha in 0.1..0.95f64, k in 0.1..10.0f64) {
        let (grid, dec) = bump_dec(48, 0.5, 1.0);
        let spec = VanishingSpec::standard(1);
        let r = probe(&dec, alpha, &spec, 0).unwrap().ratio;
        prop_assert_eq!(r, probe(&dec, alpha, &spec, 0).unwrap().ratio);
        let scaled = SpectralDecomposition::from_symmetric(dec.matrix() * k, Some(grid)).unwrap();
        let rs = probe(&scaled, alpha, &spec, 0).unwrap().ratio;
        prop_assert!((rs - r).abs() <= 1e-8 * r);
    }
}

#[test]
fn integer_powers_vanish_exactly_off_the_support() {
    let (_, dec) = bump_dec(64, 1.0, 1.0);
    let spec = VanishingSpec::standard(1);
    for m in [1.0, 2.0] {
        let r = probe(&dec, m, &spec, m as usize).unwrap();
        assert_eq!(r.mass_on_theta, 0.0);
    }
}
