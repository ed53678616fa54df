use proptest::prelude::*;

use super::*;
use crate::catalog::{make_family, FamilySpec, FamilyTag, Profile};
use crate::geometry::{point_geometry, principal_data, DEFAULT_TOL_GAP};

fn family(tag: FamilyTag) -> Immersion {
    make_family(&FamilySpec::new(tag)).unwrap()
}

fn spherical_hypercylinder(r: f64) -> Immersion {
    let profile = Profile::parse(&format!("{r}*sin(s)"), &format!("{r}*cos(s)")).unwrap();
    make_family(&FamilySpec::new(FamilyTag::HypercylinderRotational).with_profile(profile)).unwrap()
}

fn angles(m: &Immersion, p: &[f64]) -> (PointGeometry, PositionAngles) {
    let pg = point_geometry(m, p).unwrap();
    let pa = position_angles(m, p, &pg).unwrap();
    (pg, pa)
}

#[test]
fn delta2_spectra() {
    assert!(delta2_ideal_test(&[1.0, 2.0, 3.0], 1e-12));
    assert!(delta2_ideal_test(&[3.0, -1.0, 2.0], 1e-12));
    assert!(delta2_ideal_test(&[0.0, 0.0, 0.0], 0.0));
    assert!(!delta2_ideal_test(&[1.0, 2.0, 4.0], 1e-6));
    assert!(!delta2_ideal_test(&[1.0, 2.0], 1.0));
}

#[test]
fn special_sqrt2_spectrum_and_flags() {
    let m = family(FamilyTag::SpecialSqrt2);
    for p in [[0.6, 0.4, 2.0], [1.7, 5.0, 0.3]] {
        let pg = point_geometry(&m, &p).unwrap();
        let pd = principal_data(&pg, DEFAULT_TOL_GAP).unwrap();
        let kappa = 1.0 / (2.0 * p[0]);
        for (got, want) in pd.k.iter().zip([-kappa, 0.0, kappa]) {
            assert!((got - want).abs() < 1e-12, "{:?}", pd.k);
        }
    }
    let r = classify_surface(&m, &GridSpec::Regular(vec![3, 4, 4]), &Tolerances::default()).unwrap();
    let f = &r.flags;
    assert!(f.is_gcr && f.is_delta2_ideal && f.is_3_minimal && f.is_cmc);
    assert!(!f.is_isoparametric);
    assert_eq!(f.structure_equations_hold, Some(true));
    assert_eq!(r.aggregate.distinct_count, 3);
}

#[test]
fn generic_hypercylinder_is_not_gcr() {
    let r = classify_surface(
        &family(FamilyTag::HypercylinderRotational),
        &GridSpec::Regular(vec![4, 3, 2]),
        &Tolerances::default(),
    )
    .unwrap();
    assert!(!r.flags.is_gcr);
    assert!(r.aggregate.max_gcr_residual.unwrap() > 1e-2);
    assert_eq!(r.aggregate.structural_points, 0);
    assert_eq!(r.flags.structure_equations_hold, None);
}

#[test]
fn spherical_hypercylinder_classification() {
    let m = spherical_hypercylinder(1.5);
    let r = classify_surface(&m, &GridSpec::Regular(vec![3, 3, 4]), &Tolerances::default()).unwrap();
    let f = &r.flags;
    assert!(f.is_gcr && f.is_isoparametric && f.is_cmc);
    assert_eq!(f.structure_equations_hold, Some(true));
    assert_eq!(r.aggregate.distinct_count, 2);
    for rec in &r.points {
        let mut k = rec.k.clone();
        k.sort_by(f64::total_cmp);
        assert!((k[0] + 1.0 / 1.5).abs() < 1e-12 || (k[2] - 1.0 / 1.5).abs() < 1e-12);
    }
}

#[test]
fn angle_derivative_on_spherical_hypercylinder() {
    // θ = arccos(±r/μ) with μ² = r² + u², so ê₁(θ) = ±r/μ²
    let r = 1.5;
    let m = spherical_hypercylinder(r);
    let p = [1.1, 2.0, 0.7];
    let (pg, pa) = angles(&m, &p);
    let e1 = pa.e1().unwrap();
    let mu2 = r * r + p[2] * p[2];
    assert!((pa.mu - mu2.sqrt()).abs() < 1e-14);
    let sign = pa.cos_theta.signum();
    assert!((linalg::dot(&pa.theta_grad, &e1) - sign * r / mu2).abs() < 1e-12);
    // ê₁ = ±∂u
    assert!((e1[2].abs() - 1.0).abs() < 1e-12 && e1[0].abs() < 1e-12);
    let g = gcr_residual(&pa, &pg).unwrap();
    assert!(g.primary < 1e-14 && g.secondary < 1e-8);
}

#[test]
fn centered_sphere_is_degenerate() {
    let profile = Profile::parse("cos(s)", "sin(s)").unwrap();
    let m = make_family(&FamilySpec::new(FamilyTag::Rotational).with_profile(profile)).unwrap();
    let (pg, pa) = angles(&m, &[1.0, 1.0, 1.0]);
    assert!(pa.degenerate);
    assert!(pa.x_t_norm < 1e-12);
    assert!(matches!(gcr_residual(&pa, &pg), Err(GcrError::Degenerate { .. })));
    let err = classify_surface(&m, &GridSpec::Regular(vec![2, 2, 2]), &Tolerances::default()).unwrap_err();
    assert!(matches!(err, GcrError::Empty(_)));
}

#[test]
fn primary_and_secondary_residuals_agree() {
    // Y(θ) = ⟨Y, S ê₁⟩ for Y ⊥ ê₁
    let m = family(FamilyTag::HypercylinderRotational);
    for p in [[0.5, 1.0, 0.3], [1.9, 4.0, -0.8], [2.5, 0.2, 0.9]] {
        let (pg, pa) = angles(&m, &p);
        let g = gcr_residual(&pa, &pg).unwrap();
        assert!(g.primary > 1e-3);
        assert!((g.primary - g.secondary).abs() < 1e-7 * g.primary.max(1.0), "{g:?}");
    }
}

#[test]
fn grid_layout_and_errors() {
    let d = crate::geometry::DomainBox::new(&[(0.0, 1.0), (2.0, 4.0)]);
    let pts = GridSpec::Regular(vec![2, 3]).points(&d).unwrap();
    assert_eq!(pts.len(), 6);
    assert_eq!(pts[0], vec![0.0, 2.0]);
    assert_eq!(pts[1], vec![0.0, 3.0]);
    assert_eq!(pts[5], vec![1.0, 4.0]);
    assert_eq!(GridSpec::Regular(vec![1, 1]).points(&d).unwrap(), vec![vec![0.5, 3.0]]);
    assert!(GridSpec::Regular(vec![2]).points(&d).is_err());
    assert!(GridSpec::Regular(vec![0, 2]).points(&d).is_err());
    assert!(GridSpec::Points(vec![vec![0.1]]).points(&d).is_err());
}

#[test]
fn out_of_domain_points_are_skipped() {
    let m = family(FamilyTag::SpecialSqrt2);
    let grid = GridSpec::Points(vec![vec![1.0, 1.0, 1.0], vec![9.0, 1.0, 1.0]]);
    let r = classify_surface(&m, &grid, &Tolerances::default()).unwrap();
    assert_eq!(r.points.len(), 1);
    assert_eq!(r.skipped.len(), 1);
    assert!(r.skipped[0].reason.contains("outside"));
}

#[test]
fn report_does_not_depend_on_thread_count() {
    let m = family(FamilyTag::So2XSo2);
    let grid = GridSpec::Regular(vec![3, 3, 3]);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| classify_surface(&m, &grid, &Tolerances::default()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn structural_residuals_on_rotational_family() {
    let m = family(FamilyTag::Rotational);
    let p = [1.2, 1.1, 2.0];
    let (pg, pa) = angles(&m, &p);
    let pd = principal_data(&pg, DEFAULT_TOL_GAP).unwrap();
    let s = structural_residuals(&m, &p, &pg, &pd, &pa, &Tolerances::default()).unwrap();
    assert!(s.max_first_order() < 1e-10, "{s:?}");
    assert!(s.codazzi.k1_transverse.unwrap() < 1e-8);
    assert!(s.codazzi.e1_derivatives.unwrap() < 1e-8);
    // the two rotational curvatures coincide, so the frame checks are skipped
    assert!(s.codazzi.frame_derivatives.is_none());
    assert_eq!(s.skipped.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn position_vector_decomposes(s in 0.4..2.7f64, t in 0.1..5.9f64, u in 0.1..5.9f64) {
        let m = family(FamilyTag::So2XSo2);
        let (pg, pa) = angles(&m, &[s, t, u]);
        prop_assume!(!pa.degenerate);
        let e1 = pg.push_forward(&pa.e1().unwrap());
        let (st, ct) = (pa.theta.sin(), pa.theta.cos());
        for a in 0..4 {
            let want = pa.mu * (st * e1[a] + ct * pg.normal[a]);
            prop_assert!((pg.position[a] - want).abs() < 1e-12 * pa.mu.max(1.0));
        }
    }

    #[test]
    fn curvature_data_scale_covariantly(s in 0.4..2.7f64, t in 0.1..5.9f64, u in 0.1..5.9f64, lambda in 0.3..4.0f64) {
        let m = family(FamilyTag::So2XSo2);
        let big = m.scaled(lambda);
        let p = [s, t, u];
        let (pg, pa) = angles(&m, &p);
        let (qg, qa) = angles(&big, &p);
        prop_assume!(!pa.degenerate);
        let k = principal_data(&pg, 0.0).unwrap().k;
        let kq = principal_data(&qg, 0.0).unwrap().k;
        for (a, b) in k.iter().zip(&kq) {
            prop_assert!((a / lambda - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
        prop_assert!((pa.mu * lambda - qa.mu).abs() < 1e-12 * qa.mu);
        prop_assert!((pa.theta - qa.theta).abs() < 1e-7);
        let (r, rq) = (gcr_residual(&pa, &pg).unwrap(), gcr_residual(&qa, &qg).unwrap());
        prop_assert!((r.primary / lambda - rq.primary).abs() < 1e-12);
    }
}
