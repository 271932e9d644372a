//! Fock-space operators checked against direct evaluation of their
//! defining formulas.

use std::f64::consts::PI;

use num_complex::Complex64;
use znwedge::fock::{zf_create, OneParticle, Term};
use znwedge::testfn::onshell_transform_2d;
use znwedge::{
    charge_conjugate, cpt_partner, eta_closed_form, fusion_table_for, Bump, FockContext, FockVector, LineRule,
    SMatrixModel, SectorMask, Sign, TestFunction,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bump(center: [f64; 2], r: f64, a: Complex64) -> Bump {
    Bump::new(center, r, a).unwrap()
}

fn rule() -> LineRule {
    LineRule::new(8.0, 60, 16)
}

fn gaussian(z: Complex64, a: f64, z0: f64) -> Complex64 {
    (-(z - z0) * (z - z0) * a).exp()
}

fn probe_points() -> Vec<Complex64> {
    [-1.7, -0.4, 0.0, 0.9, 2.2].iter().map(|&t| c(t, 0.0)).collect()
}

fn max_component_gap(model: &SMatrixModel, a: &FockVector, b: &FockVector, n: u32) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 1..n {
        for z in probe_points() {
            let x = a.one_component(model, s, z).unwrap();
            let y = b.one_component(model, s, z).unwrap();
            worst = worst.max((x - y).norm() / x.norm().max(y.norm()).max(1e-300));
        }
    }
    worst
}

fn left_f() -> TestFunction {
    TestFunction::single(1, bump([0.1, -1.0], 0.5, c(1.0, 0.2))).with(2, bump([-0.3, -1.4], 0.6, c(0.6, 0.0)))
}

fn left_g() -> TestFunction {
    TestFunction::single(1, bump([0.4, -1.6], 0.5, c(-0.3, 0.8)))
}

#[test]
fn adjoint_identity_between_creation_and_annihilation() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let h: OneParticle = [
        (1, vec![Term::gaussian(c(0.8, -0.3), 1.2, 0.2, 0)]),
        (2, vec![Term::gaussian(c(0.4, 0.1), 0.7, -0.5, 1)]),
    ]
    .into();
    let phi = FockVector::gaussian(2, c(1.0, 0.5), 0.9, 0.1).plus(&FockVector::gaussian(1, c(0.3, 0.0), 1.4, -0.3));
    let k: OneParticle = [(1, vec![Term::gaussian(c(0.6, 0.2), 1.0, -0.2, 0)])].into();
    let psi = zf_create(&k, &FockVector::gaussian(2, c(0.9, -0.4), 1.1, 0.4), SectorMask::ALL);

    let lhs = ctx.inner(&zf_create(&h, &phi, SectorMask::ALL), &psi).unwrap();
    let rhs = ctx
        .inner(&phi, &ctx.zf_annihilate(&h, &psi, SectorMask::ALL).unwrap())
        .unwrap();
    assert!(lhs.norm() > 1e-3);
    assert!((lhs - rhs).norm() <= 1e-6 * lhs.norm(), "{lhs} vs {rhs}");
}

#[test]
fn field_on_vacuum_is_the_plus_transform() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let f = left_f();
    let v = ctx.apply_phi(&f, &FockVector::vacuum(), SectorMask::ALL).unwrap();
    assert_eq!(v.max_particles(), 1);
    assert_eq!(v.vacuum, ZERO);
    for s in [1, 2] {
        for z in probe_points() {
            let want = onshell_transform_2d(&f, s, 1.0, Sign::Plus, z).unwrap();
            let got = v.one_component(&model, s, z).unwrap();
            assert!((got - want).norm() <= 1e-8 * want.norm(), "type {s} at {z}");
        }
    }
}

#[test]
fn two_point_function_matches_direct_quadrature() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let f = left_f();
    let g = left_g().with(2, bump([0.0, -1.2], 0.4, c(1.0, 0.0)));
    let v = ctx
        .apply_phi(
            &f,
            &ctx.apply_phi(&g, &FockVector::vacuum(), SectorMask::ALL).unwrap(),
            SectorMask::ALL,
        )
        .unwrap();
    let got = ctx.inner(&FockVector::vacuum(), &v).unwrap();

    // Σ_α ∫ f^−_ᾱ(θ) g^+_α(θ) dθ with the tensor-product transform and a
    // plain trapezoid rule.
    let (lo, hi, steps) = (-7.0, 7.0, 2800);
    let dt = (hi - lo) / steps as f64;
    let mut want = ZERO;
    for k in 0..=steps {
        let t = c(lo + dt * k as f64, 0.0);
        let w = if k == 0 || k == steps { 0.5 * dt } else { dt };
        for a in [1, 2] {
            let fm = onshell_transform_2d(&f, 3 - a, 1.0, Sign::Minus, t).unwrap();
            let gp = onshell_transform_2d(&g, a, 1.0, Sign::Plus, t).unwrap();
            want += fm * gp * w;
        }
    }
    assert!(want.norm() > 1e-6);
    assert!((got - want).norm() <= 1e-6 * want.norm(), "{got} vs {want}");
}

#[test]
fn two_point_function_is_positive_for_the_adjoint_pair() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let f = left_f();
    let fb = charge_conjugate(&f, 3);
    let v = ctx.apply_phi(&f, &FockVector::vacuum(), SectorMask::ALL).unwrap();
    let w = ctx.apply_phi(&fb, &v, SectorMask::only(0)).unwrap();
    let norm = ctx.inner(&v, &v).unwrap();
    let two_point = ctx.inner(&FockVector::vacuum(), &w).unwrap();
    assert!(norm.re > 0.0);
    assert!((two_point - norm).norm() <= 1e-12 * norm.norm());
}

#[test]
fn field_is_linear_in_test_function_and_vector() {
    let model = SMatrixModel::zn(4, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let (f, g) = (left_f(), left_g().with(3, bump([0.2, -1.1], 0.5, c(0.5, -0.5))));
    let (a, b) = (c(0.7, -1.3), c(-0.4, 0.25));
    let psi = FockVector::vacuum()
        .scaled(c(0.3, 0.1))
        .plus(&FockVector::gaussian(3, c(1.0, 0.0), 1.0, 0.1));
    let chi = FockVector::gaussian(1, c(0.2, 0.9), 0.6, -0.3);

    let combo = ctx
        .apply_phi(&f.scaled(a).plus(&g.scaled(b)), &psi, SectorMask::ALL)
        .unwrap();
    let parts = ctx
        .apply_phi(&f, &psi, SectorMask::ALL)
        .unwrap()
        .scaled(a)
        .plus(&ctx.apply_phi(&g, &psi, SectorMask::ALL).unwrap().scaled(b));
    assert!(max_component_gap(&model, &combo, &parts, 4) < 1e-12);
    assert!((combo.vacuum - parts.vacuum).norm() <= 1e-12 * parts.vacuum.norm());

    let combo = ctx
        .apply_phi(&f, &psi.scaled(a).plus(&chi.scaled(b)), SectorMask::ALL)
        .unwrap();
    let parts = ctx
        .apply_phi(&f, &psi, SectorMask::ALL)
        .unwrap()
        .scaled(a)
        .plus(&ctx.apply_phi(&f, &chi, SectorMask::ALL).unwrap().scaled(b));
    assert!(max_component_gap(&model, &combo, &parts, 4) < 1e-12);
    assert!((combo.vacuum - parts.vacuum).norm() <= 1e-12 * parts.vacuum.norm());
}

#[test]
fn field_shifts_particle_number_by_one() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let f = left_f();
    let one = FockVector::gaussian(1, c(1.0, 0.0), 1.0, 0.0);
    let out = ctx.apply_phi(&f, &one, SectorMask::ALL).unwrap();
    assert!(out.one.is_empty());
    assert!(out.vacuum != ZERO && !out.two.is_empty());
    let out = ctx
        .apply_phi_reflected(&cpt_partner(&f, 3), &one, SectorMask::ALL)
        .unwrap();
    assert!(out.one.is_empty());
    assert!(out.vacuum != ZERO && !out.two.is_empty());
}

#[test]
fn reflected_field_on_vacuum_carries_the_types_of_g() {
    let model = SMatrixModel::zn(4, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let g = TestFunction::single(1, bump([0.2, 1.3], 0.5, c(1.0, 0.0)));
    let v = ctx
        .apply_phi_reflected(&g, &FockVector::vacuum(), SectorMask::ALL)
        .unwrap();
    assert_eq!(v.species().collect::<Vec<_>>(), vec![1]);
    let direct = ctx.apply_phi(&g, &FockVector::vacuum(), SectorMask::ALL).unwrap();
    assert!(max_component_gap(&model, &v, &direct, 4) < 1e-12);
}

#[test]
fn bound_state_operator_spot_value() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let table = eta_closed_form(&fusion_table_for(&model).unwrap());
    let f = TestFunction::single(1, bump([0.0, -1.0], 0.5, c(1.0, 0.0)));
    let (a, z0) = (0.8, 0.3);
    let psi = FockVector::gaussian(1, c(1.0, 0.0), a, z0);
    let out = ctx.apply_chi_1(&table, &f, &psi).unwrap();
    assert_eq!(out.species().collect::<Vec<_>>(), vec![2]);

    // η²₁₁ = i√(2π · √3), shifts ±iπ/3.
    let eta = c(0.0, (2.0 * PI * 3f64.sqrt()).sqrt());
    let shift = c(0.0, PI / 3.0);
    for z in probe_points() {
        let fp = onshell_transform_2d(&f, 1, 1.0, Sign::Plus, z + shift).unwrap();
        let want = -Complex64::i() * eta * fp * gaussian(z - shift, a, z0);
        let got = out.one_component(&model, 2, z).unwrap();
        assert!((got - want).norm() <= 1e-8 * want.norm(), "{got} vs {want}");
    }
}

#[test]
fn reflected_bound_state_operator_spot_value() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let table = eta_closed_form(&fusion_table_for(&model).unwrap());
    let g = TestFunction::single(2, bump([0.1, 1.2], 0.5, c(0.9, 0.3)));
    let (a, z0) = (1.1, -0.2);
    let psi = FockVector::gaussian(2, c(0.5, -0.5), a, z0);
    let out = ctx.apply_chi_reflected_1(&table, &g, &psi).unwrap();
    assert_eq!(out.species().collect::<Vec<_>>(), vec![1]);

    // (χ′(g)ψ)^1(θ) = conj[−iη g̃^+_1(θ+iπ/3) conj ψ^2(θ+iπ/3)] with
    // g̃_1(x) = conj g_2(−x), written out directly.
    let eta = c(0.0, (2.0 * PI * 3f64.sqrt()).sqrt());
    let shift = c(0.0, PI / 3.0);
    let gt = TestFunction::single(1, bump([-0.1, -1.2], 0.5, c(0.9, -0.3)));
    for z in probe_points() {
        let gp = onshell_transform_2d(&gt, 1, 1.0, Sign::Plus, z + shift).unwrap();
        let jpsi = (c(0.5, -0.5) * gaussian((z - shift).conj(), a, z0)).conj();
        let want = (-Complex64::i() * eta * gp * jpsi).conj();
        let got = out.one_component(&model, 1, z).unwrap();
        assert!((got - want).norm() <= 1e-8 * want.norm(), "{got} vs {want}");
    }
}

#[test]
fn bound_state_operator_zero_cases_and_grading() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let table = eta_closed_form(&fusion_table_for(&model).unwrap());
    let f = left_f();
    let psi = FockVector::gaussian(1, c(1.0, 0.0), 1.0, 0.0);
    assert_eq!(
        ctx.apply_chi_1(&table, &f, &FockVector::vacuum())
            .unwrap()
            .max_particles(),
        0
    );
    assert_eq!(
        ctx.apply_chi_1(&table, &TestFunction::zero(), &psi)
            .unwrap()
            .max_particles(),
        0
    );
    assert_eq!(
        ctx.apply_chi_reflected_1(&table, &f, &FockVector::vacuum())
            .unwrap()
            .max_particles(),
        0
    );
    assert_eq!(
        ctx.apply_chi_1(&table.without_eta(), &f, &psi).unwrap().max_particles(),
        0
    );
    let out = ctx.apply_chi_1(&table, &f, &psi).unwrap();
    assert_eq!(out.max_particles(), 1);
    assert_eq!(out.vacuum, ZERO);
    let two = ctx.apply_phi(&f, &psi, SectorMask::ALL).unwrap();
    assert!(ctx.apply_chi_1(&table, &f, &two).is_err());
}

#[test]
fn bound_state_operator_rejects_non_analytic_input() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let table = eta_closed_form(&fusion_table_for(&model).unwrap());
    let k: OneParticle = [(2, vec![Term::gaussian(c(1.0, 0.0), 1.0, 0.0, 0)])].into();
    let two = zf_create(&k, &FockVector::gaussian(1, c(1.0, 0.0), 1.0, 0.2), SectorMask::ALL);
    let h: OneParticle = [(1, vec![Term::gaussian(c(1.0, 0.0), 1.0, 0.1, 0)])].into();
    let contracted = ctx.zf_annihilate(&h, &two, SectorMask::only(1)).unwrap();
    assert_eq!(contracted.species().collect::<Vec<_>>(), vec![2]);
    let f = TestFunction::single(2, bump([0.0, -1.0], 0.5, c(1.0, 0.0)));
    let err = ctx.apply_chi_1(&table, &f, &contracted).unwrap_err();
    assert!(matches!(err, znwedge::Error::DomainError { .. }), "{err}");
}

#[test]
fn bound_state_operator_is_linear() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let table = eta_closed_form(&fusion_table_for(&model).unwrap());
    let (f, g) = (left_f(), left_g());
    let (a, b) = (c(1.1, 0.4), c(-0.6, -0.9));
    let psi = FockVector::gaussian(1, c(1.0, 0.0), 1.0, 0.1).plus(&FockVector::gaussian(2, c(0.2, 0.3), 0.5, -0.4));
    let chi = FockVector::gaussian(2, c(0.7, 0.0), 1.3, 0.6);

    let combo = ctx.apply_chi_1(&table, &f.scaled(a).plus(&g.scaled(b)), &psi).unwrap();
    let parts = ctx
        .apply_chi_1(&table, &f, &psi)
        .unwrap()
        .scaled(a)
        .plus(&ctx.apply_chi_1(&table, &g, &psi).unwrap().scaled(b));
    assert!(max_component_gap(&model, &combo, &parts, 3) < 1e-12);

    let combo = ctx
        .apply_chi_1(&table, &f, &psi.scaled(a).plus(&chi.scaled(b)))
        .unwrap();
    let parts = ctx
        .apply_chi_1(&table, &f, &psi)
        .unwrap()
        .scaled(a)
        .plus(&ctx.apply_chi_1(&table, &f, &chi).unwrap().scaled(b));
    assert!(max_component_gap(&model, &combo, &parts, 3) < 1e-12);
}

#[test]
fn reflecting_the_bound_state_operator_twice_is_the_identity() {
    let model = SMatrixModel::zn(4, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let table = eta_closed_form(&fusion_table_for(&model).unwrap());
    let f = left_f().with(3, bump([0.0, -1.5], 0.5, c(0.3, 0.3)));
    let psi = FockVector::gaussian(1, c(1.0, 0.0), 1.0, 0.1).plus(&FockVector::gaussian(3, c(0.2, 0.3), 0.5, -0.4));
    let direct = ctx.apply_chi_1(&table, &f, &psi).unwrap();
    let twice = ctx
        .apply_chi_reflected_1(&table, &cpt_partner(&f, 4), &psi.cpt(4))
        .unwrap()
        .cpt(4);
    assert!(direct.max_particles() == 1);
    assert!(max_component_gap(&model, &direct, &twice, 4) < 1e-12);
}

#[test]
fn bound_state_operator_is_symmetric() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let table = eta_closed_form(&fusion_table_for(&model).unwrap());
    let f = TestFunction::single(1, bump([0.0, -1.0], 0.5, c(1.0, 0.0))).with(2, bump([0.2, -1.3], 0.5, c(0.7, 0.0)));
    let fb = charge_conjugate(&f, 3);
    let phi = FockVector::gaussian(2, c(1.0, 0.2), 0.8, 0.3).plus(&FockVector::gaussian(1, c(0.5, 0.0), 1.0, -0.2));
    let psi = FockVector::gaussian(1, c(0.7, -0.1), 1.1, -0.1).plus(&FockVector::gaussian(2, c(0.3, 0.4), 0.9, 0.2));
    let lhs = ctx.inner(&phi, &ctx.apply_chi_1(&table, &f, &psi).unwrap()).unwrap();
    let rhs = ctx.inner(&ctx.apply_chi_1(&table, &fb, &phi).unwrap(), &psi).unwrap();
    assert!(lhs.norm() > 1e-3);
    assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm(), "{lhs} vs {rhs}");
}

#[test]
fn two_particle_states_are_s_symmetric() {
    for n in [3, 4, 5] {
        let model = SMatrixModel::zn(n, 1.0).unwrap();
        let rule = rule();
        let ctx = FockContext::new(&model, &rule);
        let h: OneParticle = [
            (1, vec![Term::gaussian(c(1.0, 0.3), 1.0, 0.4, 0)]),
            (n - 1, vec![Term::gaussian(c(0.5, 0.0), 0.7, -0.3, 1)]),
        ]
        .into();
        let k =
            FockVector::gaussian(1, c(0.8, -0.2), 1.2, -0.1).plus(&FockVector::gaussian(n - 1, c(0.1, 0.6), 0.9, 0.5));
        let two = zf_create(&h, &k, SectorMask::ALL);
        let grid: Vec<f64> = (0..10).map(|i| -2.0 + 4.0 * i as f64 / 9.0).collect();
        assert!(ctx.s_symmetry_defect(&two, &grid).unwrap() < 1e-8, "N = {n}");
    }
}

#[test]
fn cpt_is_antiunitary_on_two_particle_vectors() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = LineRule::new(6.0, 20, 16);
    let ctx = FockContext::new(&model, &rule);
    let h: OneParticle = [(2, vec![Term::gaussian(c(0.4, 0.9), 1.0, 0.2, 0)])].into();
    let a = zf_create(&h, &FockVector::gaussian(1, c(1.0, 0.0), 1.0, -0.3), SectorMask::ALL)
        .plus(&FockVector::gaussian(2, c(0.3, 0.1), 0.8, 0.0));
    let b =
        zf_create(&h, &FockVector::gaussian(2, c(0.2, -0.7), 0.6, 0.4), SectorMask::ALL).plus(&FockVector::vacuum());
    let b = b.plus(&zf_create(
        &h,
        &FockVector::gaussian(1, c(0.5, 0.5), 1.5, 0.1),
        SectorMask::ALL,
    ));
    let lhs = ctx.inner(&a.cpt(3), &b.cpt(3)).unwrap();
    let rhs = ctx.inner(&a, &b).unwrap().conj();
    assert!(rhs.norm() > 1e-3);
    assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn annihilation_contracts_one_particle_vectors_to_the_vacuum() {
    let model = SMatrixModel::zn(3, 1.0).unwrap();
    let rule = rule();
    let ctx = FockContext::new(&model, &rule);
    let h: OneParticle = [(1, vec![Term::gaussian(c(1.0, 0.0), 1.0, 0.0, 0)])].into();
    let k = FockVector::gaussian(1, c(1.0, 0.0), 1.0, 0.5);
    let out = ctx.zf_annihilate(&h, &k, SectorMask::ALL).unwrap();
    // ∫ e^{−θ²} e^{−(θ−½)²} dθ = √(π/2) e^{−1/8}.
    let want = (PI / 2.0).sqrt() * (-0.125f64).exp();
    assert!((out.vacuum - want).norm() < 1e-12);
    assert_eq!(out.max_particles(), 0);
}
