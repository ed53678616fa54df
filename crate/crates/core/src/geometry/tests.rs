use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::jet::finite_difference_jet;

fn hyperplane() -> Immersion {
    Immersion::from_exprs(
        "hyperplane",
        &["s", "t", "u"],
        &["s", "t", "u", "0"],
        DomainBox::new(&[(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)]),
    )
    .unwrap()
}

fn so2(f: &str, g: &str) -> Immersion {
    let comps = [
        format!("({f})*cos(t)"),
        format!("({f})*sin(t)"),
        format!("({g})*cos(u)"),
        format!("({g})*sin(u)"),
    ];
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    Immersion::from_exprs(
        "so2",
        &["s", "t", "u"],
        &refs,
        DomainBox::new(&[(0.2, 2.8), (0.0, 2.0 * PI), (0.0, 2.0 * PI)]),
    )
    .unwrap()
}

fn round_sphere(r: f64) -> Immersion {
    let comps = [
        format!("{r}*cos(s)"),
        format!("{r}*sin(s)*cos(t)"),
        format!("{r}*sin(s)*sin(t)*sin(u)"),
        format!("{r}*sin(s)*sin(t)*cos(u)"),
    ];
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    Immersion::from_exprs(
        "sphere",
        &["s", "t", "u"],
        &refs,
        DomainBox::new(&[(0.3, 2.8), (0.3, 2.8), (0.0, 6.0)]),
    )
    .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Real roots of the characteristic polynomial of a 3×3 matrix with real
/// spectrum, by the trigonometric cubic formula.
fn cubic_roots(s: &[Vec<f64>]) -> Vec<f64> {
    let tr = s[0][0] + s[1][1] + s[2][2];
    let c2 = s[0][0] * s[1][1] - s[0][1] * s[1][0] + s[0][0] * s[2][2] - s[0][2] * s[2][0] + s[1][1] * s[2][2]
        - s[1][2] * s[2][1];
    let d = linalg::det(s);
    // λ³ − tr λ² + c2 λ − d = 0, shift λ = x + tr/3
    let shift = tr / 3.0;
    let p = c2 - tr * tr / 3.0;
    let q = -(2.0 * tr.powi(3) / 27.0 - tr * c2 / 3.0 + d);
    let mut roots = if p.abs() < 1e-14 {
        vec![shift - q.cbrt(); 3]
    } else {
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| shift + m * (phi - 2.0 * PI * k as f64 / 3.0).cos())
            .collect()
    };
    roots.sort_by(f64::total_cmp);
    roots
}

#[test]
fn hyperplane_forms() {
    let m = hyperplane();
    let pg = point_geometry(&m, &[0.3, -1.0, 1.5]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(pg.metric[i][j], if i == j { 1.0 } else { 0.0 });
            assert_eq!(pg.h[i][j], 0.0);
            assert_eq!(pg.shape[i][j], 0.0);
        }
    }
    assert_eq!(pg.normal, vec![0.0, 0.0, 0.0, 1.0]);
    let jets = evaluate_jets(&m, &[0.3, -1.0, 1.5], 2).unwrap();
    for (a, x) in jets.iter().enumerate() {
        for i in 0..3 {
            assert_eq!(x.grad()[i], if a == i { 1.0 } else { 0.0 });
            for j in 0..3 {
                assert_eq!(x.hess(i, j), 0.0);
            }
        }
    }
    let pd = principal_data(&pg, DEFAULT_TOL_GAP).unwrap();
    assert_eq!(pd.k, vec![0.0; 3]);
    assert_eq!(pd.distinct_count, 1);
    assert_eq!(codazzi_residual(&m, &[0.3, -1.0, 1.5]).unwrap(), 0.0);
    assert_eq!(gauss_residual(&m, &[0.3, -1.0, 1.5]).unwrap(), 0.0);
    let omega = frame_connection_forms(&m, &[0.3, -1.0, 1.5], &pd, 1e-4, 0.0).unwrap();
    assert!(omega.iter().flatten().flatten().all(|w| *w == 0.0));
}

#[test]
fn so2_family_position_and_metric() {
    let m = so2("2+cos(s)", "sin(s)");
    let pos = m.position(&[0.0, 0.0, 0.0]);
    // s = 0 is outside the box but the map is still evaluable there
    assert_eq!(pos.unwrap(), vec![3.0, 0.0, 0.0, 0.0]);
    let unit = so2("cos(s)", "sin(s)");
    assert_eq!(unit.position(&[0.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);

    for s in [0.4, 1.0, 2.1] {
        let pg = point_geometry(&m, &[s, 0.7, 1.9]).unwrap();
        let want = [1.0, (2.0 + s.cos()).powi(2), s.sin().powi(2)];
        for i in 0..3 {
            for j in 0..3 {
                let w = if i == j { want[i] } else { 0.0 };
                assert!(close(pg.metric[i][j], w, 1e-13), "g[{i}][{j}] at s={s}");
            }
        }
    }
}

#[test]
fn so2_family_principal_curvatures() {
    // circle profile: κ = 1, −f'/g = 1, g'/f = cos s/(2+cos s)
    let m = so2("2+cos(s)", "sin(s)");
    let s = PI / 3.0;
    let pg = point_geometry(&m, &[s, 0.4, 1.1]).unwrap();
    let pd = principal_data(&pg, DEFAULT_TOL_GAP).unwrap();
    let mut want = vec![1.0, 1.0, s.cos() / (2.0 + s.cos())];
    want.sort_by(f64::total_cmp);
    let mut flipped: Vec<f64> = want.iter().map(|x| -x).collect();
    flipped.sort_by(f64::total_cmp);
    let matches = |w: &[f64]| pd.k.iter().zip(w).all(|(a, b)| close(*a, *b, 1e-10));
    assert!(matches(&want) || matches(&flipped), "got {:?}", pd.k);
    assert_eq!(pd.distinct_count, 2);
    let roots = cubic_roots(&pg.shape);
    for (a, b) in pd.k.iter().zip(&roots) {
        assert!(close(*a, *b, 1e-7), "{:?} vs {:?}", pd.k, roots);
    }
}

#[test]
fn hypercylinder_metric() {
    // unit-speed profile: (2 + cos s, sin s)
    let m = Immersion::from_exprs(
        "hypercylinder",
        &["s", "t", "u"],
        &["(2+cos(s))*cos(t)", "(2+cos(s))*sin(t)", "sin(s)", "u"],
        DomainBox::new(&[(0.0, 6.0), (0.0, 6.0), (-1.0, 1.0)]),
    )
    .unwrap();
    for s in [0.5, 2.0, 4.0] {
        let pg = point_geometry(&m, &[s, 1.0, 0.2]).unwrap();
        let f = 2.0 + s.cos();
        let want = [1.0, f * f, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(pg.metric[i][j], if i == j { want[i] } else { 0.0 }, 1e-13));
            }
        }
    }
}

#[test]
fn sphere_sectional_curvature() {
    for r in [1.0, 2.0] {
        let m = round_sphere(r);
        for p in [[0.7, 1.2, 0.5], [2.0, 0.9, 4.0]] {
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let k = sectional_curvature(&m, &p, i, j).unwrap();
                assert!(close(k, 1.0 / (r * r), 1e-9), "K = {k} for r = {r}");
            }
            let pd = principal_data(&point_geometry(&m, &p).unwrap(), DEFAULT_TOL_GAP).unwrap();
            assert!(pd.k.iter().all(|k| close(k.abs(), 1.0 / r, 1e-10)));
        }
    }
}

#[test]
fn corrupted_second_form_breaks_codazzi() {
    let m = so2("2+cos(s)", "sin(s)");
    let p = [1.1, 0.4, 2.2];
    let mut fj = form_jets(&m, &p, 3).unwrap();
    assert!(codazzi_residual_from(&fj) < 1e-10);
    fj.h[0][0] = fj.h[0][0] + 0.1;
    assert!(codazzi_residual_from(&fj) > 1e-3);
}

#[test]
fn rejects_points_outside_domain_and_singular_points() {
    let m = so2("2+cos(s)", "sin(s)");
    assert!(matches!(
        point_geometry(&m, &[3.0, 0.0, 0.0]),
        Err(GeometryError::OutOfDomain { .. })
    ));
    let cone = Immersion::from_exprs(
        "pinched",
        &["s", "t", "u"],
        &["s*cos(t)", "s*sin(t)", "u", "0"],
        DomainBox::new(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]),
    )
    .unwrap();
    let err = point_geometry(&cone, &[0.0, 0.5, 0.5]).unwrap_err();
    assert!(matches!(err, GeometryError::Singular { .. }));
    assert_eq!(err.point(), Some(&[0.0, 0.5, 0.5][..]));
}

#[test]
fn so2_connection_form_omega23_vanishes() {
    // non-circular profile so the three curvatures are distinct
    let m = so2("2+cos(s)", "1.5*sin(s)");
    let step = default_frame_step(&m);
    let mut checked = 0;
    for s in [0.5, 0.9, 1.3, 2.0, 2.5] {
        let p = [s, 1.0, 2.0];
        let pg = point_geometry(&m, &p).unwrap();
        let pd = principal_data(&pg, DEFAULT_TOL_GAP).unwrap();
        if pd.gap < 1e-3 {
            continue;
        }
        let omega = frame_connection_forms(&m, &p, &pd, step, DEFAULT_TOL_GAP).unwrap();
        // identify the t- and u-directions among the principal directions
        let t_dir = (0..3).max_by(|&a, &b| pd.e[a][1].abs().total_cmp(&pd.e[b][1].abs())).unwrap();
        let u_dir = (0..3).max_by(|&a, &b| pd.e[a][2].abs().total_cmp(&pd.e[b][2].abs())).unwrap();
        for l in 0..3 {
            assert!(omega[t_dir][u_dir][l].abs() < 1e-5, "ω at s={s}: {}", omega[t_dir][u_dir][l]);
        }
        for i in 0..3 {
            for l in 0..3 {
                assert_eq!(omega[i][i][l], 0.0);
            }
        }
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn near_umbilic_points_are_rejected_by_frame_forms() {
    let m = round_sphere(1.0);
    let p = [1.0, 1.0, 1.0];
    let pd = principal_data(&point_geometry(&m, &p).unwrap(), DEFAULT_TOL_GAP).unwrap();
    assert!(matches!(
        frame_connection_forms(&m, &p, &pd, 1e-4, DEFAULT_TOL_GAP),
        Err(GeometryError::NearUmbilic { .. })
    ));
}

#[test]
fn curvature_invariant_examples() {
    let ci = curvature_invariants(&[1.0, 2.0, 3.0]);
    assert_eq!(ci.s, vec![6.0, 11.0, 6.0]);
    assert!(close(ci.h[0], 2.0, 1e-15) && close(ci.h[1], 11.0 / 3.0, 1e-15) && close(ci.h[2], 6.0, 1e-15));
    let k = 0.8;
    let ci = curvature_invariants(&[0.0, k, -k]);
    assert_eq!(ci.h[0], 0.0);
    assert_eq!(ci.h[2], 0.0);
    assert!(close(ci.h[1], -k * k / 3.0, 1e-15));
    let c = -1.7;
    let ci = curvature_invariants(&[c, c, c]);
    for (j, h) in ci.h.iter().enumerate() {
        assert!(close(*h, c.powi(j as i32 + 1), 1e-14));
    }
    assert_eq!(ci.gauss_kronecker(), ci.h[2]);
}

#[test]
fn position_jets_match_finite_differences() {
    let m = so2("2+cos(s)", "1.5*sin(s)");
    let p = [1.2, 0.8, 2.5];
    let jets = evaluate_jets(&m, &p, 3).unwrap();
    for (a, jet) in jets.iter().enumerate() {
        let fd = finite_difference_jet(|q: &[f64]| m.position(q).map(|x| x[a]), &p, None).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() <= 1e-5 * y.abs().max(1.0);
        for i in 0..3 {
            assert!(rel(fd.grad()[i], jet.grad()[i]));
            for j in 0..3 {
                assert!(rel(fd.hess(i, j), jet.hess(i, j)));
                for k in 0..3 {
                    assert!(rel(fd.third(i, j, k), jet.third(i, j, k)));
                }
            }
        }
    }
}

fn brute_force_s(k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let mut s = vec![0.0; n];
    for mask in 1u32..(1 << n) {
        let prod: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| k[i]).product();
        s[mask.count_ones() as usize - 1] += prod;
    }
    s
}

proptest! {
    #[test]
    fn invariants_match_brute_force(k in prop::collection::vec(-5.0f64..5.0, 1..=3)) {
        let ci = curvature_invariants(&k);
        for (a, b) in ci.s.iter().zip(brute_force_s(&k)) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pointwise_invariants_on_so2(
        s in 0.3f64..2.7, t in 0.0f64..6.2, u in 0.0f64..6.2, a in 1.2f64..3.0, b in 0.5f64..2.0,
    ) {
        let m = so2(&format!("{a}+cos(s)"), &format!("{b}*sin(s)"));
        let p = [s, t, u];
        let pg = point_geometry(&m, &p).unwrap();
        let n_len: f64 = pg.normal.iter().map(|x| x * x).sum();
        prop_assert!((n_len - 1.0).abs() < 1e-12);
        for i in 0..3 {
            let col: Vec<f64> = pg.jac.iter().map(|r| r[i]).collect();
            prop_assert!(linalg::dot(&pg.normal, &col).abs() < 1e-10);
        }
        let gs = linalg::matmul(&pg.metric, &pg.shape);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((gs[i][j] - gs[j][i]).abs() < 1e-10);
            }
        }
        let pd = principal_data(&pg, DEFAULT_TOL_GAP).unwrap();
        for i in 0..3 {
            let se = linalg::matvec(&pg.shape, &pd.e[i]);
            for c in 0..3 {
                prop_assert!((se[c] - pd.k[i] * pd.e[i][c]).abs() < 1e-9);
            }
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((pg.inner(&pd.e[i], &pd.e[j]) - want).abs() < 1e-10);
            }
        }
        // S = E diag(k) E⁻¹ with E's columns the principal directions
        let e_cols = linalg::transpose(&pd.e);
        let mut kd = linalg::zeros(3, 3);
        for i in 0..3 {
            kd[i][i] = pd.k[i];
        }
        // E⁻¹ = Eᵀ g for g-orthonormal columns
        let e_inv = linalg::matmul(&pd.e, &pg.metric);
        let rebuilt = linalg::matmul(&linalg::matmul(&e_cols, &kd), &e_inv);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((rebuilt[i][j] - pg.shape[i][j]).abs() < 1e-8);
            }
        }
        let roots = cubic_roots(&pg.shape);
        for (x, y) in pd.k.iter().zip(&roots) {
            prop_assert!((x - y).abs() < 1e-9, "{:?} vs {:?}", pd.k, roots);
        }
        prop_assert!(codazzi_residual(&m, &p).unwrap() < 1e-6);
        prop_assert!(gauss_residual(&m, &p).unwrap() < 1e-6);
    }
}
