use std::sync::{Arc, OnceLock};

use enclosure::admittivity::{expand_background, reduce_background, ReductionInput};
use enclosure::fem::BoundaryBasis;
use enclosure::geom::Sym2;
use enclosure::mesh::{build_disk_mesh, support_function_exact, Mesh, ShapeSpec};
use enclosure::mittag::{ml_eval, MLParams};
use enclosure::probes::ProbeSpec;
use enclosure::{Direction, Vec2};
use nalgebra::Matrix2;
use num_complex::Complex64;
use proptest::prelude::*;

fn small_mesh() -> Arc<Mesh> {
    static MESH: OnceLock<Arc<Mesh>> = OnceLock::new();
    MESH.get_or_init(|| {
        let d = ShapeSpec::disk(Vec2::new(0.1, 0.0), 0.4);
        Arc::new(build_disk_mesh(1.0, 0.2, Some(&d)).unwrap())
    })
    .clone()
}

fn sym() -> impl Strategy<Value = Sym2> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Sym2::new(a, b, c))
}

fn spd() -> impl Strategy<Value = Sym2> {
    (0.2..3.0f64, 0.2..3.0f64, 0.0..std::f64::consts::PI).prop_map(|(l1, l2, r)| {
        let (s, c) = r.sin_cos();
        Sym2::new(
            c * c * l1 + s * s * l2,
            c * s * (l1 - l2),
            s * s * l1 + c * c * l2,
        )
    })
}

fn shape() -> impl Strategy<Value = ShapeSpec> {
    let disk = (-0.3..0.3f64, -0.3..0.3f64, 0.05..0.4f64).prop_map(|(x, y, r)| ShapeSpec::Disk {
        center: [x, y],
        radius: r,
    });
    let ellipse = (
        -0.3..0.3f64,
        -0.3..0.3f64,
        0.05..0.4f64,
        0.05..0.4f64,
        0.0..3.2f64,
    )
        .prop_map(|(x, y, a, b, rotation)| ShapeSpec::Ellipse {
            center: [x, y],
            a,
            b,
            rotation,
        });
    let polygon = (
        prop::collection::vec(0.0..std::f64::consts::TAU, 3..9),
        0.1..0.5f64,
    )
        .prop_map(|(mut angles, r)| {
            angles.sort_by(f64::total_cmp);
            angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            while angles.len() < 3 {
                let last = angles.last().copied().unwrap_or(0.0);
                angles.push(last + 2.0);
            }
            ShapeSpec::Polygon {
                vertices: angles.iter().map(|t| [r * t.cos(), r * t.sin()]).collect(),
            }
        });
    prop_oneof![disk, ellipse, polygon]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_round_trip(s0 in 0.1..5.0f64, e0 in 0.0..5.0f64, w in 0.0..10.0f64,
                            alpha in sym(), beta in sym()) {
        let mesh = small_mesh();
        let input = ReductionInput::constant(&mesh, s0, e0, w, alpha, beta);
        // Only coefficient values matter here; skip inputs that break definiteness.
        if let Ok(field) = reduce_background(mesh.clone(), &input) {
            let t = mesh.inclusion_triangles().next().unwrap();
            let (al, be) = expand_background(s0, e0, w, &field.a()[t], &field.b()[t]);
            let scale = 1.0 + alpha.norm() + beta.norm();
            prop_assert!(al.sub(&alpha).norm() <= 1e-12 * scale);
            prop_assert!(be.sub(&beta).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn inverse_difference_identity(a in spd(), b in spd(), sa in any::<bool>()) {
        // Symmetric invertible, not necessarily definite.
        let a = if sa { a.to_matrix() } else { -a.to_matrix() };
        let b = b.to_matrix();
        let ai = a.try_inverse().unwrap();
        let bi = b.try_inverse().unwrap();
        let d: Matrix2<f64> = b - a;
        let lhs = ai - bi;
        let rhs = bi * d * bi + bi * d * ai * d * bi;
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn support_function_is_sublinear(s in shape(), p1 in 0.0..6.3f64, p2 in 0.0..6.3f64) {
        let (t1, t2) = (Direction::from_angle(p1), Direction::from_angle(p2));
        let sum = t1.vec() + t2.vec();
        prop_assume!(sum.norm() > 1e-6);
        let t = Direction::normalize(sum).unwrap();
        let lhs = sum.norm() * support_function_exact(&s, &t);
        let rhs = support_function_exact(&s, &t1) + support_function_exact(&s, &t2);
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn support_function_is_max_over_boundary(s in shape(), p in 0.0..6.3f64) {
        let th = Direction::from_angle(p);
        let exact = support_function_exact(&s, &th);
        let sampled = s.boundary_samples(20000).iter().map(|x| th.dot(x)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(sampled <= exact + 1e-12);
        prop_assert!(exact - sampled <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn ml_conjugation_symmetry(alpha in 0.2..=1.0f64, r in 0.0..40.0f64, phi in -3.14..3.14f64) {
        let p = MLParams::new(alpha).unwrap();
        let z = Complex64::from_polar(r, phi);
        let v = match ml_eval(&p, z) {
            Ok(v) => v,
            Err(e) => {
                let overflow = matches!(e, enclosure::Error::Overflow { .. });
                prop_assert!(overflow, "{}", e);
                return Ok(());
            }
        };
        let w = ml_eval(&p, z.conj()).unwrap();
        prop_assert!((w - v.conj()).norm() <= 1e-10 * v.norm().max(1e-300));
    }

    #[test]
    fn perp_flip_conjugates_probes(p in 0.0..6.3f64, t in -1.0..1.0f64, tau in 0.0..20.0f64,
                                   alpha in 0.2..=1.0f64, yr in 2.0..4.0f64) {
        let th = Direction::from_angle(p);
        let pts: Vec<Vec2> = (0..32).map(|k| Direction::from_angle(k as f64 * 0.2).vec()).collect();
        let y = th.vec() * yr;
        for probe in [
            ProbeSpec::cgo(th, th.perp(), t, tau).unwrap(),
            ProbeSpec::mittag_leffler(y, alpha, th, th.perp(), t - yr, tau.min(5.0)).unwrap(),
        ] {
            let a = match probe.trace(&pts) {
                Ok(a) => a,
                Err(enclosure::Error::ProbeOverflow { .. }) => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let b = probe.flipped().trace(&pts).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u.conj() - v).norm() <= 1e-12 * u.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn basis_conjugate_coefficients(n_max in 1usize..8, re in prop::collection::vec(-1.0..1.0f64, 17),
                                    im in prop::collection::vec(-1.0..1.0f64, 17)) {
        let pts: Vec<Vec2> = (0..128).map(|k| Direction::from_angle(k as f64 * 0.049).vec()).collect();
        for basis in [BoundaryBasis::Fourier { n_max }, BoundaryBasis::Nodal] {
            let cols = basis.columns(&pts);
            let c: Vec<Complex64> = (0..cols.len()).map(|j| Complex64::new(re[j % 17], im[j % 17])).collect();
            let cc = basis.conjugate_coefficients(&c);
            for i in 0..pts.len() {
                let f: Complex64 = cols.iter().zip(&c).map(|(col, a)| col[i] * a).sum();
                let g: Complex64 = cols.iter().zip(&cc).map(|(col, a)| col[i] * a).sum();
                prop_assert!((f.conj() - g).norm() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mesh_area_identity(h in 0.06..0.15f64, s in shape()) {
        let mesh = match build_disk_mesh(1.0, h, Some(&s)) {
            Ok(m) => m,
            // Shapes too small or too close to the boundary for the mesh size are rejected.
            Err(e) => {
                let rejected = matches!(
                    e,
                    enclosure::Error::UnresolvedInclusion { .. } | enclosure::Error::InclusionNotInterior { .. }
                );
                prop_assert!(rejected, "{}", e);
                return Ok(());
            }
        };
        mesh.check().unwrap();
        let total = mesh.total_area();
        prop_assert!((total - mesh.boundary_polygon_area()).abs() <= 1e-10 * total);
        prop_assert!(mesh.signed_area(0) > 0.0);
        prop_assert!((0..mesh.num_triangles()).all(|t| mesh.signed_area(t) > 0.0));
    }
}
