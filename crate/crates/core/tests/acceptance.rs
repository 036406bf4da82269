//! Acceptance criteria 1 to 10. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr, so the lines survive output capture.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::RadialOracle;
use slab_symmetry::curvature::{boundary_mean_curvature, mc_expanded, BoundaryCurve, PrescribedH};
use slab_symmetry::geometry::{DomainGrid, NodeTag, Region, ScalarField};
use slab_symmetry::harness::{run_scenario, Perturbation, Scenario, ScenarioOutcome};
use slab_symmetry::linearization::{
    assemble_difference_operator, ellipticity_constant, pointwise_aij, EllipticOperatorField,
};
use slab_symmetry::moving_plane::Verdict;
use slab_symmetry::solver::{
    solve_axisymmetric_profile, solve_graph_dirichlet, BoundaryConditionSpec, BoundaryData, SolverSettings,
};
use slab_symmetry::touching::{check_interior_touching, inward_normal_derivative, Conclusion, MonotoneScheme};

fn report(n: usize, passed: bool, detail: String) {
    let mark = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {mark} {detail}");
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)).unwrap()
}

fn rect(h: f64) -> Arc<DomainGrid> {
    let n = (1.0 / h).round() as usize + 1;
    Arc::new(DomainGrid::rectangle(vec![0.0, 0.0], h, vec![n, n]).unwrap())
}

fn disk(r: f64, h: f64) -> Arc<DomainGrid> {
    Arc::new(DomainGrid::from_region(&Region::disk([0.0, 0.0], r), h).unwrap())
}

/// `a sin(b·x + c) + d x y + e (x² - y²)` with closed-form derivatives.
#[derive(Clone, Copy)]
struct Smooth {
    a: f64,
    b: [f64; 2],
    c: f64,
    d: f64,
    e: f64,
}

impl Smooth {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            a: rng.gen_range(-0.5..0.5),
            b: [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            c: rng.gen_range(0.0..PI),
            d: rng.gen_range(-0.5..0.5),
            e: rng.gen_range(-0.3..0.3),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = self.b[0] * x[0] + self.b[1] * x[1] + self.c;
        self.a * s.sin() + self.d * x[0] * x[1] + self.e * (x[0] * x[0] - x[1] * x[1])
    }

    fn grad(&self, x: &[f64]) -> [f64; 2] {
        let s = self.b[0] * x[0] + self.b[1] * x[1] + self.c;
        let c = self.a * s.cos();
        [c * self.b[0] + self.d * x[1] + 2.0 * self.e * x[0], c * self.b[1] + self.d * x[0] - 2.0 * self.e * x[1]]
    }

    fn hess(&self, x: &[f64]) -> [f64; 4] {
        let s = self.b[0] * x[0] + self.b[1] * x[1] + self.c;
        let m = -self.a * s.sin();
        let xy = m * self.b[0] * self.b[1] + self.d;
        [m * self.b[0] * self.b[0] + 2.0 * self.e, xy, xy, m * self.b[1] * self.b[1] - 2.0 * self.e]
    }

    /// `div(∇u / W)` in closed form.
    fn mc(&self, x: &[f64]) -> f64 {
        let [p, q] = self.grad(x);
        let [uxx, uxy, _, uyy] = self.hess(x);
        let w2 = 1.0 + p * p + q * q;
        ((1.0 + q * q) * uxx - 2.0 * p * q * uxy + (1.0 + p * p) * uyy) / w2.powf(1.5)
    }

    fn field(&self, grid: &Arc<DomainGrid>) -> ScalarField {
        let f = *self;
        ScalarField::from_fn(grid.clone(), move |x| f.value(x)).unwrap()
    }
}

#[test]
fn criterion_01_ellipticity_eigenstructure() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut eig_err: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
        let p = [scale * rng.gen_range(-1.0..1.0), scale * rng.gen_range(-1.0..1.0)];
        let w = (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt();
        let a = pointwise_aij(&p);
        let mut ev = a.eigenvalues();
        ev.sort_by(f64::total_cmp);
        eig_err = eig_err.max((ev[0] - 1.0 / w.powi(3)).abs()).max((ev[1] - 1.0 / w).abs());
        let th: f64 = rng.gen_range(0.0..2.0 * PI);
        let len: f64 = rng.gen_range(0.1..3.0);
        let xi = [len * th.cos(), len * th.sin()];
        if a.quadratic_form(&xi) < len * len / w.powi(3) - 1e-12 {
            violations += 1;
        }
    }
    let passed = eig_err <= 1e-12 && violations == 0;
    report(1, passed, format!("max eigenvalue error {eig_err:.2e}, bound violations {violations}"));
    assert!(passed);
}

#[test]
fn criterion_02_ellipticity_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1.0 / 16.0;
    let grid = rect(h);
    let profile = PrescribedH::constant(0.0);
    let (mut worst_gap, mut worst_formula) = (f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let (f, g) = (Smooth::random(&mut rng), Smooth::random(&mut rng));
        let (u, ubar) = (f.field(&grid), g.field(&grid));
        let k = ellipticity_constant(&u, &ubar).unwrap();
        let op = assemble_difference_operator(&u, &ubar, &profile, 32).unwrap();
        let mut min_eig = f64::INFINITY;
        let mut wmax: f64 = 1.0;
        for node in grid.interior_nodes() {
            let a = &op.coefficients_at(node).unwrap().a;
            // Smallest eigenvalue of a symmetric 2x2 matrix.
            let (p, q, r) = (a.get(0, 0), a.get(0, 1), a.get(1, 1));
            min_eig = min_eig.min(0.5 * (p + r) - (0.25 * (p - r) * (p - r) + q * q).sqrt());
            // Centered differences, as the discrete gradient.
            let c = |fld: &ScalarField, dx: [isize; 2]| fld.at(grid.offset(node, &dx).unwrap()).unwrap();
            for fld in [&u, &ubar] {
                let gx = (c(fld, [1, 0]) - c(fld, [-1, 0])) / (2.0 * h);
                let gy = (c(fld, [0, 1]) - c(fld, [0, -1])) / (2.0 * h);
                wmax = wmax.max((1.0 + gx * gx + gy * gy).sqrt());
            }
        }
        worst_gap = worst_gap.min(min_eig - k);
        worst_formula = worst_formula.max((k * wmax.powi(3) - 1.0).abs());
    }
    let passed = worst_gap >= -1e-14 && worst_formula <= 1e-12;
    report(
        2,
        passed,
        format!("min(lambda_min - k) = {worst_gap:.3e}, |k max W^3 - 1| <= {worst_formula:.1e} over 100 pairs"),
    );
    assert!(passed);
}

/// Largest `|L w - (mc(u) - mc(ū))|` at interior nodes, against the
/// closed-form curvature.
fn ftc_residual(f: &Smooth, g: &Smooth, h: f64) -> f64 {
    let grid = rect(h);
    let (u, ubar) = (f.field(&grid), g.field(&grid));
    let w = u.zip_map(&ubar, |a, b| a - b).unwrap();
    let op: EllipticOperatorField = assemble_difference_operator(&u, &ubar, &PrescribedH::constant(0.0), 32).unwrap();
    let lw = op.apply(&w).unwrap();
    grid.interior_nodes()
        .zip(&lw)
        .map(|(k, l)| {
            let x = grid.coords(k);
            (l - (f.mc(&x) - g.mc(&x))).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_03_ftc_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1.0 / 64.0;
    let (mut worst, mut min_ratio) = (0.0f64, f64::INFINITY);
    for _ in 0..50 {
        let (f, g) = (Smooth::random(&mut rng), Smooth::random(&mut rng));
        let r1 = ftc_residual(&f, &g, h);
        let r2 = ftc_residual(&f, &g, h / 2.0);
        worst = worst.max(r1);
        min_ratio = min_ratio.min(r1 / r2);
    }
    let passed = worst <= 20.0 * h * h && min_ratio >= 3.5;
    report(3, passed, format!("max residual {worst:.3e} (<= {:.3e}), min halving ratio {min_ratio:.2}", 20.0 * h * h));
    assert!(passed);
}

#[test]
fn criterion_04_exact_geometry() {
    let (h, big_r) = (1.0 / 64.0, 1.0);
    let grid = disk(0.7, h);
    let u = ScalarField::from_fn(grid.clone(), |x| (big_r * big_r - x[0] * x[0] - x[1] * x[1]).sqrt()).unwrap();
    let mc = mc_expanded(&u).unwrap();
    let hemi = grid.interior_nodes().map(|k| (mc.at(k).unwrap() + 2.0 / big_r).abs()).fold(0.0, f64::max);

    let r = 0.7;
    let slab = slab_symmetry::geometry::Slab::horizontal(0.0, 1.0).unwrap();
    let p = solve_axisymmetric_profile(&slab, &PrescribedH::constant(0.5 / r), PI / 2.0, PI / 2.0, &SolverSettings::default())
        .unwrap();
    let cyl = p.x.iter().map(|x| (x - r).abs()).fold(0.0, f64::max);

    // Jittered samples, so the polyline is not a regular polygon.
    let n = 96;
    let step = 2.0 * PI / n as f64;
    let verts: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let t = step * (k as f64 + 0.3 * (k as f64 * 1.7).sin());
            [0.2 + 1.5 * t.cos(), -0.1 + 1.5 * t.sin()]
        })
        .collect();
    let curve = BoundaryCurve::polyline(1, verts.clone()).unwrap();
    let mesh_h = (0..n).map(|k| {
        let (a, b) = (verts[k], verts[(k + 1) % n]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }).fold(0.0, f64::max);
    let circ = boundary_mean_curvature(&curve).unwrap().iter().map(|k| (k - 1.0 / 1.5).abs()).fold(0.0, f64::max);

    let passed = hemi <= 5.0 * h * h && cyl <= 1e-8 && circ <= mesh_h * mesh_h;
    report(
        4,
        passed,
        format!("hemisphere {hemi:.2e} (<= {:.2e}), cylinder radius {cyl:.1e}, circle {circ:.1e}", 5.0 * h * h),
    );
    assert!(passed);
}

fn criterion_value(out: &ScenarioOutcome, name: &str) -> (bool, Option<f64>) {
    match out.report.criterion(name) {
        Some(c) => (c.passed, c.value),
        None => (false, None),
    }
}

#[test]
fn criterion_05_contact_angle_scenario() {
    let s = scenario("t1.json");
    let h = s.resolution;
    let out = run_scenario(&s, 0);
    assert!(out.report.failure.is_none(), "{:?}", out.report.failure);
    let BoundaryConditionSpec::ContactAngle { gamma1, .. } = s.bc else { panic!("T1 is a contact-angle scenario") };
    let PrescribedH::Affine { h0, slope, u0 } = s.h_profile else { panic!("T1 uses affine H") };
    let Some(Region::Planar { outer: slab_symmetry::geometry::Shape2::Circle { radius, .. }, .. }) = s.domain else {
        panic!("T1 is posed on a disk")
    };
    // H0 + slope (u - u0) = (H0 - slope u0) + slope u.
    let oracle = RadialOracle::solve(h0 - slope * u0, slope, radius, gamma1);
    let u = &out.solution.as_ref().unwrap().u;
    let grid = u.grid();
    let err = grid
        .active_nodes()
        .iter()
        .map(|&k| {
            let x = grid.coords(k);
            (u.at(k).unwrap() - oracle.at(x[0].hypot(x[1]))).abs()
        })
        .fold(0.0, f64::max);
    let (axis_ok, residual) = criterion_value(&out, "axis_residual");
    let (dev_ok, dev) = criterion_value(&out, "max_deviation");
    let passed = err <= 5.0 * h * h && axis_ok && dev_ok && out.report.pass;
    report(
        5,
        passed,
        format!("oracle error {err:.2e} (<= {:.2e}), axis residual {residual:?}, max deviation {dev:?}", 5.0 * h * h),
    );
    assert!(passed, "{:#?}", out.report.criteria);
}

#[test]
fn criterion_06_fixed_boundary_scenarios() {
    let mirror = run_scenario(&scenario("t2.json"), 0);
    let (plane_ok, plane_dist) = criterion_value(&mirror, "plane_through_mirror_line");

    let mut concentric = scenario("t2.json");
    let center = [0.1, -0.05];
    concentric.bc = BoundaryConditionSpec::FixedBoundary {
        curves: vec![BoundaryCurve::circle(1, center, 0.3, 128).unwrap(), BoundaryCurve::circle(2, center, 0.9, 256).unwrap()],
    };
    concentric.directions = 8;
    let conc = run_scenario(&concentric, 0);
    let (axis_ok, axis_dist) = criterion_value(&conc, "axis_through_common_center");

    let passed = mirror.report.pass && plane_ok && conc.report.pass && axis_ok;
    report(
        6,
        passed,
        format!(
            "mirror plane distance to alpha {plane_dist:?}, concentric axis distance {axis_dist:?}{}",
            conc.report.failure.as_ref().map_or(String::new(), |f| format!(", concentric {} failed: {}", f.stage, f.message))
        ),
    );
    assert!(passed, "{:#?}\n{:#?}", mirror.report.criteria, conc.report.criteria);
}

#[test]
fn criterion_07_flux_scenarios() {
    let t3 = run_scenario(&scenario("t3.json"), 0);
    let t4 = run_scenario(&scenario("t4.json"), 0);
    let (origin_ok, origin_dist) = criterion_value(&t4, "axis_through_origin");
    let dev = |o: &ScenarioOutcome| o.report.symmetry.as_ref().map(|s| s.max_deviation);
    let passed = t3.report.pass && t4.report.pass && origin_ok;
    report(
        7,
        passed,
        format!(
            "curvature flux deviation {:?}, radial flux deviation {:?}, axis to origin {origin_dist:?}",
            dev(&t3),
            dev(&t4)
        ),
    );
    assert!(passed, "{:#?}\n{:#?}", t3.report.criteria, t4.report.criteria);
}

#[test]
fn criterion_08_negative_control() {
    let mut lines = Vec::new();
    let mut passed = true;
    for name in ["t4.json", "t3.json"] {
        let mut s = scenario(name);
        s.perturbation = Some(Perturbation { amplitude: 0.05, at: None, width: None });
        let out = run_scenario(&s, 0);
        let sym = out.report.symmetry.as_ref().expect("sweep ran");
        let asym = matches!(sym.verdict, Verdict::Asymmetric { .. });
        passed &= asym && sym.max_deviation >= 0.02 && !out.report.pass;
        lines.push(format!("{name}: deviation {:.3e}, asymmetric {asym}", sym.max_deviation));
    }
    report(8, passed, lines.join("; "));
    assert!(passed);
}

#[test]
fn criterion_09_touching_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grid = disk(1.0, 1.0 / 16.0);
    let lap = EllipticOperatorField::laplacian(grid.clone());
    let scheme = MonotoneScheme::build(&lap).unwrap();
    let zero_rhs = vec![0.0; grid.interior_nodes().count()];
    let boundary: Vec<usize> = grid.boundary_nodes().collect();

    let mut interior_max = 0;
    for _ in 0..100 {
        let (a, b, c, m) = (rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(1..5));
        let g = move |x: &[f64]| -a - 0.5 * (1.0 + (b * x[0] + c * x[1] + m as f64 * x[0].atan2(x[1])).sin());
        let w = scheme.solve_dirichlet(g, &zero_rhs).unwrap();
        let bmax = boundary.iter().map(|&k| w.at(k).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        let imax = grid.interior_nodes().map(|k| w.at(k).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        if imax >= bmax {
            interior_max += 1;
        }
    }

    // The one-sided difference along η must sample the solution, not other
    // boundary data, so Hopf sites need interior nodes at x0 + hη and x0 + 2hη.
    let h = grid.spacing();
    let sites: Vec<usize> = boundary
        .iter()
        .copied()
        .filter(|&k| {
            let (x, eta) = (grid.coords(k), grid.boundary_normal(k).unwrap().to_vec());
            [h, 2.0 * h].iter().all(|s| {
                let q = [x[0] + s * eta[0], x[1] + s * eta[1]];
                grid.tag(grid.nearest_node(&q)) == NodeTag::Interior
            })
        })
        .collect();
    let mut hopf_fail = 0;
    let mut delta = f64::INFINITY;
    for _ in 0..100 {
        let k0 = sites[rng.gen_range(0..sites.len())];
        let x0 = grid.coords(k0);
        let a = rng.gen_range(0.2..2.0);
        let g = move |x: &[f64]| -a * ((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2));
        let w = scheme.solve_dirichlet(g, &zero_rhs).unwrap();
        let dn = inward_normal_derivative(&w, k0).unwrap();
        delta = delta.min(-dn);
        if !(dn < 0.0) {
            hopf_fail += 1;
        }
    }

    let zero = ScalarField::constant(grid.clone(), 0.0).unwrap();
    let mut zero_fail = 0;
    let interior: Vec<usize> = grid.interior_nodes().collect();
    for i in 0..100 {
        let f = Smooth::random(&mut rng);
        let u = f.field(&grid);
        let op = if i % 2 == 0 {
            lap.clone()
        } else {
            assemble_difference_operator(&u, &u, &PrescribedH::affine(0.3, 1.0), 8).unwrap()
        };
        let x0 = interior[rng.gen_range(0..interior.len())];
        let v = check_interior_touching(&op, &zero, x0).unwrap();
        if !matches!(v.conclusion, Conclusion::Holds { .. }) {
            zero_fail += 1;
        }
    }
    let passed = interior_max == 0 && hopf_fail == 0 && zero_fail == 0;
    report(
        9,
        passed,
        format!(
            "interior maxima {interior_max}/100, Hopf failures {hopf_fail}/100 (min -dw/deta {delta:.3e}, {} of {} boundary sites), zero-field failures {zero_fail}/100",
            sites.len(),
            boundary.len()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_10_newton_convergence() {
    let h = 1.0 / 32.0;
    let grid = disk(0.9, h);
    let exact = |x: &[f64]| 0.3 * x[0].sin() * x[1].sin();
    let ustar = ScalarField::from_fn(grid.clone(), exact).unwrap();
    let target = Arc::new(mc_expanded(&ustar).unwrap());
    let g2 = grid.clone();
    let profile = PrescribedH::of_position(move |x| 0.5 * target.at(g2.nearest_node(x)).unwrap());
    let settings = SolverSettings { newton_tol: 1e-12, ..Default::default() };
    let sol = solve_graph_dirichlet(grid.clone(), &profile, &BoundaryData::function(exact), &settings).unwrap();
    let hist = &sol.history;
    // Ratios r_{k+1} / r_k², above the round-off floor.
    let ratios: Vec<f64> = hist.windows(2).filter(|w| w[0] > 1e-8 && w[1] > 1e-13).map(|w| w[1] / (w[0] * w[0])).collect();
    let bound = ratios.iter().copied().fold(0.0, f64::max);
    let quadratic = !ratios.is_empty() && bound <= 50.0;
    let passed = quadratic && sol.interior_residual <= 1e-9;
    report(
        10,
        passed,
        format!("history {:?}, max r_(k+1)/r_k^2 {bound:.2}, interior residual {:.2e}", hist.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>(), sol.interior_residual),
    );
    assert!(passed);
}
