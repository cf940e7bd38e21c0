//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use holoq::biorth::{build_frame, BiorthFrame, FrameOptions};
use holoq::dynamics::{
    evolve_path, evolve_path_with, extract_geometric_phase, EvolutionMode, EvolveOptions, ParameterPath,
};
use holoq::geometry::{
    apply_gauge, auxiliary_operator_check, auxiliary_operator_residuals, curvature_plaquette, curvature_vector,
    find_constant_y, flux_surface, holonomy_discrete, holonomy_of_frames, phase_distance, real_phase_condition,
    GaugeAssignment, ParameterLoop, TriangulatedSurface,
};
use holoq::linalg::pauli::sigma_z;
use holoq::linalg::{inner, multiplicity_report, C64};
use holoq::models::{ModelHandle, Reference};
use holoq::{Error, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Dirac point in the `p_z = 0` plane with `1.3 <= |p| <= 3`.
fn dirac_point(g: &mut ChaCha8Rng) -> Point3 {
    let rho = g.random_range(1.3..3.0);
    let phi = g.random_range(0.0..2.0 * PI);
    [rho * phi.cos(), rho * phi.sin(), 0.0]
}

/// Random BdG point inside the cone, `x^2 + y^2 <= (0.6 z)^2`.
fn bdg_point(g: &mut ChaCha8Rng) -> Point3 {
    let z: f64 = g.random_range(0.8..1.5) * if g.random_bool(0.5) { 1.0 } else { -1.0 };
    let rho = g.random_range(0.0..0.6) * z.abs();
    let phi = g.random_range(0.0..2.0 * PI);
    [rho * phi.cos(), rho * phi.sin(), z]
}

fn relative(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn loop_frames(model: &ModelHandle, lp: &ParameterLoop) -> Vec<BiorthFrame> {
    lp.vertices()[..lp.edges()]
        .iter()
        .map(|r| build_frame(&model.hamiltonian(r), &FrameOptions::default()).unwrap())
        .collect()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn ep_classification() -> Outcome {
    let (cluster_tol, rank_tol) = (1e-2, 1e-6);
    let dirac = ModelHandle::dirac(1.0);
    let mut flagged = 0;
    let mut mismatches = 0;
    for i in 0..101 {
        for j in 0..101 {
            let r = [-2.0 + 0.04 * i as f64, -2.0 + 0.04 * j as f64, 0.0];
            let on_ring = ((r[0] * r[0] + r[1] * r[1]).sqrt() - 1.0).abs() < 1e-6;
            let rep = multiplicity_report(&dirac.hamiltonian(&r), cluster_tol, rank_tol).map_err(|e| e.to_string())?;
            flagged += usize::from(!rep.diagonalizable);
            mismatches += usize::from(rep.diagonalizable == on_ring);
        }
    }
    let bdg = ModelHandle::bdg();
    let reference = Reference::Bdg;
    let mut g = rng(1);
    let (mut cone, mut bad_cone) = (0, 0);
    for k in 0..1000 {
        // Every other sample lies on the cone itself.
        let phi = g.random_range(0.0..2.0 * PI);
        let r = if k % 2 == 0 {
            let z: f64 = g.random_range(0.2..2.0) * if g.random_bool(0.5) { 1.0 } else { -1.0 };
            [z.abs() * phi.cos(), z.abs() * phi.sin(), z]
        } else {
            [g.random_range(-2.0..2.0), g.random_range(-2.0..2.0), g.random_range(-2.0..2.0)]
        };
        let on_cone = reference.is_exceptional(&r) || k % 2 == 0;
        let rep = multiplicity_report(&bdg.hamiltonian(&r), cluster_tol, rank_tol).map_err(|e| e.to_string())?;
        mismatches += usize::from(rep.diagonalizable == on_cone);
        if on_cone {
            cone += 1;
            let ok = rep.clusters.len() == 1 && rep.clusters[0].eta == 2 && rep.clusters[0].zeta == 1;
            bad_cone += usize::from(!ok);
        }
    }
    check(
        mismatches == 0 && bad_cone == 0 && flagged > 0,
        format!(
            "dirac grid flags {flagged} ring points; bdg {cone} cone points with (eta, zeta) != (2, 1): {bad_cone}; misclassified {mismatches}"
        ),
    )
}

fn curvature_oracle() -> Outcome {
    let mut g = rng(2);
    let dirac = ModelHandle::dirac(1.0);
    let rd = Reference::Dirac { s: 1.0 };
    let mut worst_d: f64 = 0.0;
    for _ in 0..50 {
        let r = dirac_point(&mut g);
        let b = curvature_plaquette(&dirac, &r, (0, 1), 1e-3, 0).map_err(|e| e.to_string())?;
        worst_d = worst_d.max(relative(b, rd.curvature(&r, 0).unwrap()[2]));
    }
    let bdg = ModelHandle::bdg();
    let mut worst_b: f64 = 0.0;
    for _ in 0..50 {
        let r = bdg_point(&mut g);
        let b = curvature_vector(&bdg, &r, 1e-3, 0).map_err(|e| e.to_string())?;
        let want = Reference::Bdg.curvature(&r, 0).unwrap();
        let err: f64 = (0..3).map(|c| (b[c] - want[c]).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = want.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst_b = worst_b.max(err / norm);
    }
    // Observed order from errors at h and h/2, away from roundoff.
    let order = |model: &ModelHandle, r: Point3, want: C64| {
        let e1 = (curvature_plaquette(model, &r, (0, 1), 4e-2, 0).unwrap() - want).norm();
        let e2 = (curvature_plaquette(model, &r, (0, 1), 2e-2, 0).unwrap() - want).norm();
        (e1 / e2).log2()
    };
    let rdp = [1.6, 0.7, 0.0];
    let rbp = [0.2, 0.1, 1.0];
    let od = order(&dirac, rdp, rd.curvature(&rdp, 0).unwrap()[2]);
    let ob = order(&bdg, rbp, Reference::Bdg.curvature(&rbp, 0).unwrap()[2]);
    check(
        worst_d < 1e-4 && worst_b < 1e-4 && od >= 1.8 && ob >= 1.8,
        format!("max rel err dirac {worst_d:.2e}, bdg {worst_b:.2e}; order dirac {od:.2}, bdg {ob:.2}"),
    )
}

fn stokes() -> Outcome {
    let model = ModelHandle::dirac(1.0);
    let (c, radius) = ([2.0, 0.0, 0.0], 0.5);
    let lp = ParameterLoop::circle(c, radius, (0, 1), 2000).map_err(|e| e.to_string())?;
    let beta = holonomy_discrete(&model, &lp, 0).map_err(|e| e.to_string())?.beta;
    let rf = Reference::Dirac { s: 1.0 };
    // Polar quadrature: Simpson in r, periodic trapezoid in phi.
    let n_phi = 256;
    let integral = simpson(
        |r| {
            (0..n_phi)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / n_phi as f64;
                    let p = [c[0] + r * phi.cos(), r * phi.sin(), 0.0];
                    rf.curvature(&p, 0).unwrap()[2].im
                })
                .sum::<f64>()
                * (2.0 * PI / n_phi as f64)
                * r
        },
        0.0,
        radius,
        400,
    );
    let want = C64::new(0.0, integral);
    let rel = relative(beta, want);
    check(
        rel < 1e-3 && beta.re.abs() < 1e-6,
        format!("beta = {:.6e}{:+.6e}i, quadrature {integral:.6e}i, rel err {rel:.2e}", beta.re, beta.im),
    )
}

fn dynamics_geometry() -> Outcome {
    let theta = PI / 8.0;
    let cases = [
        ("dirac", ModelHandle::dirac(1.0), [2.0, 0.0, 0.0], 0.5),
        ("bdg", ModelHandle::bdg(), [0.0, 0.0, theta.cos()], theta.sin()),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, model, c, radius) in cases {
        let lp = ParameterLoop::circle(c, radius, (0, 1), 2000).map_err(|e| e.to_string())?;
        let beta = holonomy_discrete(&model, &lp, 0).map_err(|e| e.to_string())?.beta;
        let mut diffs = Vec::new();
        for (t, steps) in [(1e3, 10_000), (1e4, 100_000)] {
            let path = ParameterPath::circle(c, radius, (0, 1), t, steps).map_err(|e| e.to_string())?;
            let f0 = build_frame(&model.hamiltonian(&path.point(0)), &FrameOptions::default()).unwrap();
            let rec = evolve_path(&model, &path, &f0.psi(0), EvolutionMode::Adiabatic).map_err(|e| e.to_string())?;
            let b = extract_geometric_phase(&rec, 0).map_err(|e| e.to_string())?;
            diffs.push(phase_distance(b, beta));
        }
        ok &= diffs[0] < 1e-2 && diffs[1] < diffs[0];
        details.push(format!("{name}: |d| {:.2e} (T=1e3), {:.2e} (T=1e4)", diffs[0], diffs[1]));
    }
    check(ok, details.join("; "))
}

fn gauge_invariance() -> Outcome {
    let theta = PI / 8.0;
    let cases = [
        (ModelHandle::dirac(1.0), [2.0, 0.0, 0.0], 0.5),
        (ModelHandle::bdg(), [0.0, 0.0, theta.cos()], theta.sin()),
    ];
    let mut worst: f64 = 0.0;
    for (model, c, radius) in cases {
        let lp = ParameterLoop::circle(c, radius, (0, 1), 200).map_err(|e| e.to_string())?;
        let frames = loop_frames(&model, &lp);
        for j in 0..2 {
            let base = holonomy_of_frames(&frames, j);
            for trial in 0..100 {
                let gauge = GaugeAssignment::random(frames.len(), 0.2, 5.0, 1000 + trial);
                let moved = apply_gauge(&frames, &gauge, j).map_err(|e| e.to_string())?;
                worst = worst.max(phase_distance(holonomy_of_frames(&moved, j), base));
            }
        }
    }
    check(worst <= 1e-10, format!("max |delta beta| over 100 gauges x 2 bands x 2 models = {worst:.2e}"))
}

fn monopole_localization() -> Outcome {
    let dirac_cube = TriangulatedSurface::cube([2.0, 0.0, 0.0], 0.5, 6).map_err(|e| e.to_string())?;
    let fd = flux_surface(&ModelHandle::dirac(1.0), &dirac_cube, 0).map_err(|e| e.to_string())?;
    let bdg = ModelHandle::bdg();
    let bdg_cube = TriangulatedSurface::cube([0.0, 0.0, 1.5], 0.4, 6).map_err(|e| e.to_string())?;
    let fb = flux_surface(&bdg, &bdg_cube, 0).map_err(|e| e.to_string())?;
    let mut caps = Vec::new();
    let mut worst: f64 = 0.0;
    for frac in [0.7, 0.9, 0.95] {
        let theta_max = frac * PI / 4.0;
        let cap = TriangulatedSurface::sphere_cap([0.0; 3], 1.0, theta_max, 40, 1000).map_err(|e| e.to_string())?;
        let flux = flux_surface(&bdg, &cap, 0).map_err(|e| e.to_string())?;
        // Normal component on the unit sphere is 1 / (2 cos(2 theta)^{3/2}).
        let want = 2.0 * PI * simpson(|t| t.sin() / (2.0 * (2.0 * t).cos().powf(1.5)), 0.0, theta_max, 2000);
        worst = worst.max((flux.re - want).abs() / want).max(flux.im.abs() / want);
        caps.push(flux.re);
    }
    let increasing = caps.windows(2).all(|w| w[1] > w[0]);
    check(
        fd.norm() <= 1e-6 && fb.norm() <= 1e-6 && increasing && worst < 1e-3,
        format!(
            "cube flux dirac {:.1e}, bdg {:.1e}; caps {:.5} < {:.5} < {:.5}, max rel err {worst:.1e}",
            fd.norm(),
            fb.norm(),
            caps[0],
            caps[1],
            caps[2]
        ),
    )
}

fn conservation() -> Outcome {
    let dirac = ModelHandle::dirac(1.0);
    let r = [2.0, 0.5, 0.0];
    let path = ParameterPath::constant(r, 100.0, 10_000).map_err(|e| e.to_string())?;
    let psi0 = [C64::new(0.6, 0.1), C64::new(-0.3, 0.7)];
    let rec = evolve_path(&dirac, &path, &psi0, EvolutionMode::Free).map_err(|e| e.to_string())?;
    let p0 = rec.pseudo_norm_trace[0];
    let drift = rec.pseudo_norm_trace.iter().map(|p| (p - p0).abs()).fold(0.0, f64::max);

    let bdg = ModelHandle::bdg();
    let theta = PI / 8.0;
    let loop_path = ParameterPath::circle([0.0, 0.0, theta.cos()], theta.sin(), (0, 1), 100.0, 10_000)
        .map_err(|e| e.to_string())?;
    let rec = evolve_path(&bdg, &loop_path, &psi0, EvolutionMode::Free).map_err(|e| e.to_string())?;
    let sz = sigma_z();
    let norm = |s: &[C64]| inner(s, &sz.mul_vec(s)).re;
    let n0 = norm(&rec.states[0]);
    let sz_drift = rec.states.iter().map(|s| (norm(s) - n0).abs()).fold(0.0, f64::max);
    check(
        drift <= 1e-10 && sz_drift <= 1e-8,
        format!("fixed-H pseudo-norm drift {drift:.1e}; bdg sigma_z-norm drift {sz_drift:.1e}"),
    )
}

fn adiabatic_boundary() -> Outcome {
    let model = ModelHandle::dirac(1.0);
    let (c, radius) = ([2.0, 0.0, 0.0], 0.5);
    let mut points = Vec::new();
    for (t, steps) in [(1e2, 4000), (1e3, 10_000), (1e4, 100_000)] {
        let path = ParameterPath::circle(c, radius, (0, 1), t, steps).map_err(|e| e.to_string())?;
        let f0 = build_frame(&model.hamiltonian(&path.point(0)), &FrameOptions::default()).unwrap();
        let rec = evolve_path(&model, &path, &f0.psi(0), EvolutionMode::Adiabatic).map_err(|e| e.to_string())?;
        points.push((t.ln(), rec.leakage_from(0).ln()));
    }
    // Least-squares slope of ln(leakage) against ln(T).
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    // Crossing into the ring's interior, where the spectrum is complex.
    let crossing = ParameterPath::linear([2.0, 0.0, 0.0], [0.5, 0.0, 0.0], 10.0, 200).map_err(|e| e.to_string())?;
    let f0 = build_frame(&model.hamiltonian(&[2.0, 0.0, 0.0]), &FrameOptions::default()).unwrap();
    let rejected = matches!(
        evolve_path(&model, &crossing, &f0.psi(0), EvolutionMode::Adiabatic).map_err(|e| e.root().clone()),
        Err(Error::ComplexSpectrum { .. })
    );

    let inside = [0.5, 0.0, 0.0];
    let still = ParameterPath::constant(inside, 5.0, 500).map_err(|e| e.to_string())?;
    let fi = build_frame(&model.hamiltonian(&inside), &FrameOptions::default()).map_err(|e| e.to_string())?;
    let psi0: Vec<C64> = fi.psi(0).iter().zip(fi.psi(1)).map(|(a, b)| a + b).collect();
    let opts = EvolveOptions::new(EvolutionMode::Free);
    let rec = evolve_path_with(&model, &still, &psi0, &opts).map_err(|e| e.to_string())?;
    let g = fi.energies().iter().position(|e| e.im > 0.0).unwrap_or(0);
    let ratios: Vec<f64> = rec.amplitudes.iter().map(|a| a[g].norm() / a[1 - g].norm()).collect();
    let monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    check(
        (slope + 1.0).abs() <= 0.2 && rejected && monotone,
        format!(
            "leakage slope {slope:.3}; complex-spectrum path rejected: {rejected}; free dominant ratio {:.2} -> {:.3e} monotone: {monotone}",
            ratios[0],
            ratios[ratios.len() - 1]
        ),
    )
}

fn real_phase_criterion() -> Outcome {
    let mut g = rng(9);
    let bdg = ModelHandle::bdg();
    let dirac = ModelHandle::dirac(1.0);
    let mut bdg_points = Vec::new();
    let mut worst_b: f64 = 0.0;
    for _ in 0..20 {
        let r = bdg_point(&mut g);
        worst_b = worst_b.max(real_phase_condition(&bdg, &r, 0, 1e-5).map_err(|e| e.to_string())?.norm());
        bdg_points.push(r);
    }
    let mut dirac_points = Vec::new();
    let mut least_d = f64::INFINITY;
    for _ in 0..20 {
        let r = dirac_point(&mut g);
        least_d = least_d.min(real_phase_condition(&dirac, &r, 0, 1e-5).map_err(|e| e.to_string())?.norm());
        dirac_points.push(r);
    }
    // The sign pattern flips between the two nappes of the cone; search on the upper one.
    let upper: Vec<Point3> = bdg_points.iter().copied().filter(|r| r[2] > 0.0).collect();
    let y = find_constant_y(&bdg, &upper, 1e-8).map_err(|e| e.to_string())?;
    let y_ok = y.as_ref().is_some_and(|y| (&y.y - &sigma_z()).max_abs() < 1e-8 && y.alphas == [1, -1] && y.residual < 1e-8);
    let absent = find_constant_y(&dirac, &dirac_points, 1e-6).map_err(|e| e.to_string())?.is_none();
    check(
        worst_b <= 1e-8 && least_d >= 1e-3 && y_ok && absent,
        format!(
            "bdg max {worst_b:.1e}, dirac min {least_d:.2e}; sigma_z recovered: {y_ok} (residual {:.1e}); dirac absent: {absent}",
            y.map_or(f64::NAN, |y| y.residual)
        ),
    )
}

fn auxiliary_identity() -> Outcome {
    let mut g = rng(10);
    let mut worst: f64 = 0.0;
    let mut orders = Vec::new();
    let mut opposite = f64::INFINITY;
    for (model, bdg) in [(ModelHandle::dirac(1.0), false), (ModelHandle::bdg(), true)] {
        for k in 0..20 {
            let r = if bdg { bdg_point(&mut g) } else { dirac_point(&mut g) };
            worst = worst.max(auxiliary_operator_check(&model, &r, 5e-4).map_err(|e| e.to_string())?);
            if k < 3 {
                let e1 = auxiliary_operator_check(&model, &r, 2e-2).map_err(|e| e.to_string())?;
                let e2 = auxiliary_operator_check(&model, &r, 1e-2).map_err(|e| e.to_string())?;
                orders.push((e1 / e2).log2());
                opposite = opposite.min(auxiliary_operator_residuals(&model, &r, 1e-3).unwrap().opposite_sign);
            }
        }
    }
    let order_ok = orders.iter().all(|o| (1.8..=2.2).contains(o));
    let lo = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = orders.iter().copied().fold(0.0, f64::max);
    check(
        worst < 1e-5 && order_ok,
        format!("max residual {worst:.1e} at h=5e-4; observed order {lo:.2}..{hi:.2}; opposite-sign residual >= {opposite:.2}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("EP classification", ep_classification),
        ("curvature oracle match", curvature_oracle),
        ("Stokes consistency", stokes),
        ("dynamics-geometry agreement", dynamics_geometry),
        ("gauge invariance", gauge_invariance),
        ("monopole localization", monopole_localization),
        ("conservation", conservation),
        ("adiabatic theorem boundary", adiabatic_boundary),
        ("real-phase criterion", real_phase_criterion),
        ("auxiliary-operator identity", auxiliary_identity),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name}: {detail} ({:.1}s)", k + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
