use enclosure::fem::{element_gradient, DirichletSolver};
use enclosure::geom::CSym2;
use enclosure::mesh::build_disk_mesh;
use enclosure::mittag::{ml_deriv, MLParams};
use enclosure::probes::ProbeSpec;
use enclosure::{Direction, Vec2};
use num_complex::Complex64;

type C = Complex64;

fn fd_gradient(probe: &ProbeSpec, x: Vec2, step: f64) -> [C; 2] {
    let v = |p: Vec2| probe.trace(&[p]).unwrap()[0];
    let dx = Vec2::new(step, 0.0);
    let dy = Vec2::new(0.0, step);
    [
        (v(x + dx) - v(x - dx)) / (2.0 * step),
        (v(x + dy) - v(x - dy)) / (2.0 * step),
    ]
}

fn rel(a: [C; 2], b: [C; 2]) -> f64 {
    ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
        / (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

#[test]
fn cgo_gradient_examples() {
    let th = Direction::from_angle(0.7);
    let x = Vec2::new(0.3, -0.2);
    let t = th.dot(&x);
    let p = ProbeSpec::cgo(th, th.perp(), t, 1.0).unwrap();
    let v = p.trace(&[x]).unwrap()[0];
    assert!((v.norm() - 1.0).abs() < 1e-14);
    let g = p.gradient(&[x]).unwrap()[0];
    let expect = [
        C::new(th.x(), th.perp().x()) * v,
        C::new(th.y(), th.perp().y()) * v,
    ];
    assert!(rel(g, expect) < 1e-14);

    let p = ProbeSpec::cgo(th, th.perp(), 0.1, 4.0).unwrap();
    let pts = [Vec2::new(0.41, 0.13), Vec2::new(-0.6, 0.52)];
    let vals = p.trace(&pts).unwrap();
    for (k, g) in p.gradient(&pts).unwrap().into_iter().enumerate() {
        let modulus = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
        assert!((modulus - 2f64.sqrt() * 4.0 * vals[k].norm()).abs() < 1e-12 * modulus);
        assert!(rel(g, fd_gradient(&p, pts[k], 1e-6)) < 1e-6);
    }
}

#[test]
fn ml_probe_examples() {
    let th = Direction::from_angle(0.3);
    let y = th.vec() * 3.0;
    let pts = [Vec2::new(0.2, 0.1), Vec2::new(-0.5, 0.4)];
    let p = ProbeSpec::mittag_leffler(y, 0.5, th, th.perp(), -2.0, 0.0).unwrap();
    for v in p.trace(&pts).unwrap() {
        assert_eq!(v, C::new(1.0, 0.0));
    }
    for g in p.gradient(&pts).unwrap() {
        assert_eq!(g, [C::new(0.0, 0.0); 2]);
    }

    let p = ProbeSpec::mittag_leffler(y, 0.5, th, th.perp(), -2.0, 1.5).unwrap();
    let params = MLParams::new(0.5).unwrap();
    for (k, g) in p.gradient(&pts).unwrap().into_iter().enumerate() {
        let w = 1.5 * C::new(th.dot(&(pts[k] - y)) + 2.0, th.perp().dot(&(pts[k] - y)));
        let d = ml_deriv(&params, w).unwrap();
        let modulus = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
        assert!((modulus - 2f64.sqrt() * 1.5 * d.norm()).abs() < 1e-12 * modulus);
        assert!(rel(g, fd_gradient(&p, pts[k], 1e-5)) < 1e-5);
    }

    // Real part of the argument is about −100 here, deep in the decay sector.
    let p = ProbeSpec::mittag_leffler(y, 0.5, th, th.perp(), -1.0, 100.0).unwrap();
    let v = p.trace(&[Vec2::zeros()]).unwrap()[0];
    assert!(v.norm() < 0.05, "{v}");
}

#[test]
fn alpha_one_is_the_exponential_probe() {
    let th = Direction::from_angle(-1.1);
    let y = th.vec() * 3.0;
    let pts = [
        Vec2::new(0.2, 0.1),
        Vec2::new(-0.5, 0.4),
        Vec2::new(0.0, -0.9),
    ];
    let ml = ProbeSpec::mittag_leffler(y, 1.0, th, th.perp(), -2.5, 2.0).unwrap();
    let vals = ml.trace(&pts).unwrap();
    for (x, v) in pts.iter().zip(&vals) {
        let d = *x - y;
        let w = 2.0 * C::new(th.dot(&d) + 2.5, th.perp().dot(&d));
        assert!((v - w.exp()).norm() <= 1e-14 * v.norm());
    }
}

/// Energy norm of `I_h u − u_h`, where `u_h` is the discrete harmonic function with the same
/// boundary values: the dual norm of the stiffness residual of the interpolant.
fn harmonic_defect(h: f64, probe: &ProbeSpec) -> f64 {
    let mesh = build_disk_mesh(1.0, h, None).unwrap();
    let ident = vec![CSym2::identity(); mesh.num_triangles()];
    let solver = DirichletSolver::new(&mesh, &ident).unwrap();
    let interp = probe.trace(&mesh.vertices).unwrap();
    let trace: Vec<C> = mesh.boundary_nodes().iter().map(|&i| interp[i]).collect();
    let uh = solver.solve(&trace).unwrap().u;
    let diff: Vec<C> = interp.iter().zip(&uh).map(|(a, b)| a - b).collect();
    (0..mesh.num_triangles())
        .map(|t| {
            let g = element_gradient(&mesh, t, &diff);
            mesh.signed_area(t) * (g[0].norm_sqr() + g[1].norm_sqr())
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn probes_are_discretely_harmonic() {
    let th = Direction::from_angle(0.4);
    let probes = [
        ProbeSpec::cgo(th, th.perp(), 0.5, 2.0).unwrap(),
        ProbeSpec::mittag_leffler(th.vec() * 3.0, 0.5, th, th.perp(), -2.2, 2.0).unwrap(),
    ];
    for p in &probes {
        let d: Vec<f64> = [0.08, 0.04, 0.02]
            .iter()
            .map(|&h| harmonic_defect(h, p))
            .collect();
        println!("{:?}: defects {d:?}", p.kind);
        for w in d.windows(2) {
            assert!(w[0] / w[1] >= 1.6, "{d:?}");
        }
    }
}

#[test]
fn cgo_scaling_in_t() {
    let mesh = build_disk_mesh(1.0, 0.1, None).unwrap();
    let pts: Vec<Vec2> = mesh
        .boundary_nodes()
        .iter()
        .map(|&i| mesh.vertices[i])
        .collect();
    let th = Direction::from_angle(1.3);
    let (tau, t) = (1.7, 0.35);
    let f0 = ProbeSpec::cgo(th, th.perp(), 0.0, tau)
        .unwrap()
        .trace(&pts)
        .unwrap();
    let ft = ProbeSpec::cgo(th, th.perp(), t, tau)
        .unwrap()
        .trace(&pts)
        .unwrap();
    // Pairing of a trace with its conjugate, with a fixed symmetric weight.
    let pair = |f: &[C]| -> C {
        let n = f.len();
        (0..n)
            .map(|j| {
                f[j] * f[j].conj() * 2.0
                    - f[j] * f[(j + 1) % n].conj()
                    - f[(j + 1) % n] * f[j].conj()
            })
            .sum()
    };
    let (a, b) = (pair(&ft), pair(&f0) * (-2.0 * tau * t).exp());
    assert!((a - b).norm() <= 1e-12 * a.norm(), "{a} vs {b}");
}
