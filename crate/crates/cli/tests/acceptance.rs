//! Acceptance criteria, one test each. Every test prints its measurement
//! and PASS/FAIL before asserting.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use jetflow::integrate::{
    integrate_first_order, integrate_second_order, integrate_sheet,
    integrate_sheet_ordered, residual_along, Sample, Trajectory,
};
use jetflow::jetspace::{check_omega_eq_minus_dtheta, frames_at, hamilton_consistency, hamilton_system};
use jetflow::prolong::{reduce_order_ode, reduce_order_pde};
use jetflow::sampling::DEFAULT_SEED;
use jetflow::variational::{hamiltonian, HamiltonianForm, LagrangianSpec};
use jetflow::verify::speed_drift;
use jetflow::{
    parse, DistTensorField, FirstOrderODESystem, FormVariant, JetPoint, Metrics, Problem, SecondOrderSystem,
};

fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn load(name: &str) -> Problem {
    Problem::load(problems_dir().join(format!("{name}.json"))).unwrap()
}

const ALL: [&str; 8] = [
    "rotation",
    "sphere_geodesic",
    "sphere_flow",
    "timelike",
    "flat_geodesic",
    "sheet_integrable",
    "sheet_nonintegrable",
    "polysymplectic",
];

const CURVES: [&str; 5] = ["rotation", "sphere_geodesic", "sphere_flow", "timelike", "flat_geodesic"];

fn verdict(id: u32, what: &str, pass: bool) {
    println!("criterion {id:02} {}: {what}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {what}");
}

fn max(vals: impl IntoIterator<Item = f64>) -> f64 {
    vals.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

fn eq2(pr: &Problem, step: f64, n: usize) -> Trajectory {
    let ini = pr.initial().unwrap();
    let sys = FirstOrderODESystem::from_field(&pr.field).unwrap();
    integrate_first_order(&sys, ini.t0[0], &ini.x0, step, n).unwrap()
}

fn second(sys: &SecondOrderSystem, jp: &JetPoint, step: f64, n: usize) -> Trajectory {
    integrate_second_order(sys, jp.t[0], &jp.x, &jp.v, step, n).unwrap()
}

fn off_shell(pr: &Problem) -> JetPoint {
    let on = pr.on_shell_jet().unwrap();
    JetPoint::new(on.t.clone(), on.x.clone(), on.v.iter().map(|v| v + 0.25).collect()).unwrap()
}

#[test]
fn c01_prolongation_of_the_rotation_flow() {
    let pr = load("rotation");
    let sys = SecondOrderSystem::eq5(&pr.field).unwrap();
    let n = (2.0 * PI / 1e-3).round() as usize;
    let clock = Instant::now();
    let coarse = residual_along(&eq2(&pr, 1e-3, n), &sys).unwrap();
    let elapsed = clock.elapsed().as_secs_f64();
    let fine = residual_along(&eq2(&pr, 5e-4, 2 * n), &sys).unwrap();
    let ratio = coarse / fine;
    verdict(
        1,
        &format!("eq5 residual {coarse:.3e} <= 1e-5, halving ratio {ratio:.3} in [3, 5], runtime {elapsed:.3}s < 1s"),
        coarse <= 1e-5 && (3.0..=5.0).contains(&ratio) && elapsed < 1.0,
    );
}

#[test]
fn c02_trajectory_coincidence() {
    let mut worst: f64 = 0.0;
    for name in CURVES {
        let pr = load(name);
        let sys = SecondOrderSystem::eq5(&pr.field).unwrap();
        let a = eq2(&pr, 1e-3, 1000);
        let b = second(&sys, &pr.on_shell_jet().unwrap(), 1e-3, 1000);
        let d = a.max_position_diff(&b);
        println!("  {name}: sup |x_eq2 - x_eq5| = {d:.3e}");
        worst = worst.max(d);
    }
    verdict(2, &format!("eq2 vs eq5 on [0, 1]: {worst:.3e} <= 1e-5"), worst <= 1e-5);
}

#[test]
fn c03_euler_lagrange_extremality() {
    let mut min_order = f64::INFINITY;
    for name in ["rotation", "sphere_flow", "timelike", "sphere_geodesic"] {
        let pr = load(name);
        let sys = SecondOrderSystem::eq5(&pr.field).unwrap();
        let full = LagrangianSpec::full(&pr.field);
        let jp = off_shell(&pr);
        let a = full.el_residual(&second(&sys, &jp, 2e-3, 1000)).unwrap();
        let b = full.el_residual(&second(&sys, &jp, 1e-3, 2000)).unwrap();
        let order = (a / b).log2();
        println!("  {name}: EL residual {a:.3e} -> {b:.3e}, order {order:.3}");
        min_order = min_order.min(order);
    }
    let zero = DistTensorField::vector(Metrics::flat(1, 2), &["0", "0"]).unwrap();
    let path = Trajectory {
        step: 1e-2,
        provenance: "cubic".into(),
        samples: (0..=50)
            .map(|k| {
                let t = 0.5 + k as f64 * 1e-2;
                Sample {
                    t,
                    x: vec![t * t * t, 0.0],
                    v: vec![3.0 * t * t, 0.0],
                }
            })
            .collect(),
    };
    let control = LagrangianSpec::full(&zero).el_residual(&path).unwrap();
    verdict(
        3,
        &format!("min EL order {min_order:.3} >= 1.8, negative control {control:.3} >= 0.05"),
        min_order >= 1.8 && control >= 0.05,
    );
}

#[test]
fn c04_same_hamiltonian() {
    let mut legendre: f64 = 0.0;
    for name in ALL {
        let pr = load(name);
        let full = LagrangianSpec::full(&pr.field);
        let reduced = LagrangianSpec::reduced(&pr.field);
        let pts = pr.sampler(DEFAULT_SEED).jet_points(1000);
        let d = max(pts.iter().map(|jp| (full.legendre(jp).unwrap() - reduced.legendre(jp).unwrap()).abs()));
        println!("  {name}: Legendre mismatch {d:.3e}");
        legendre = legendre.max(d);
    }
    let mut on_shell: f64 = 0.0;
    for name in CURVES {
        let pr = load(name);
        let tr = eq2(&pr, 1e-3, 1000);
        let h = max((0..tr.len()).map(|k| {
            hamiltonian(&pr.field, &tr.jet(k), HamiltonianForm::Weighted)
                .unwrap()
                .abs()
        }));
        println!("  {name}: |H| along eq2 {h:.3e}");
        on_shell = on_shell.max(h);
    }
    verdict(
        4,
        &format!("Legendre transforms agree {legendre:.3e} <= 1e-10, |H| on shell {on_shell:.3e} <= 1e-8"),
        legendre <= 1e-10 && on_shell <= 1e-8,
    );
}

#[test]
fn c05_grad_f_identity() {
    let mut worst: f64 = 0.0;
    for name in ALL {
        let pr = load(name);
        if !pr.metrics.g.is_constant() {
            continue;
        }
        let pts = pr.sampler(DEFAULT_SEED).base_points(100);
        let r = max(pts.iter().map(|b| pr.field.grad_f_identity_residual(b).unwrap()));
        println!("  {name}: grad-f identity residual {r:.3e}");
        worst = worst.max(r);
    }
    verdict(5, &format!("grad-f identity {worst:.3e} <= 1e-8"), worst <= 1e-8);
}

#[test]
fn c06_omega_is_minus_dtheta() {
    let (mut curved, mut flat): (f64, f64) = (0.0, 0.0);
    for name in ALL {
        let pr = load(name);
        let is_flat = pr.metrics.h.is_constant() && pr.metrics.g.is_constant();
        let pts = pr.sampler(DEFAULT_SEED).jet_points(100);
        let r = max(pts.iter().flat_map(|jp| {
            [FormVariant::Plain, FormVariant::Shifted]
                .map(|v| check_omega_eq_minus_dtheta(&pr.field, jp, v).unwrap())
        }));
        println!("  {name} ({}): |Ω + dθ| = {r:.3e}", if is_flat { "flat" } else { "curved" });
        if is_flat {
            flat = flat.max(r);
        } else {
            curved = curved.max(r);
        }
    }
    verdict(
        6,
        &format!("curved {curved:.3e} <= 1e-8, flat {flat:.3e} <= 1e-12"),
        curved <= 1e-8 && flat <= 1e-12,
    );
}

#[test]
fn c07_frame_duality() {
    let mut worst: f64 = 0.0;
    for name in ALL {
        let pr = load(name);
        let pts = pr.sampler(DEFAULT_SEED).jet_points(100);
        let r = max(pts.iter().map(|jp| frames_at(&pr.metrics, jp).unwrap().duality_residual()));
        println!("  {name}: pairing deviation {r:.3e}");
        worst = worst.max(r);
    }
    verdict(7, &format!("pairing = identity within {worst:.3e} <= 1e-12"), worst <= 1e-12);
}

#[test]
fn c08_hamilton_transfer() {
    let mut ratios = Vec::new();
    for name in ["rotation", "sphere_flow", "timelike"] {
        let pr = load(name);
        let jp = off_shell(&pr);
        for (variant, sys) in [
            (FormVariant::Shifted, SecondOrderSystem::eq5(&pr.field).unwrap()),
            (FormVariant::Plain, SecondOrderSystem::gradient_force(&pr.field)),
        ] {
            let a = hamilton_consistency(&pr.field, &second(&sys, &jp, 2e-3, 500), variant).unwrap();
            let b = hamilton_consistency(&pr.field, &second(&sys, &jp, 1e-3, 1000), variant).unwrap();
            println!("  {name} {variant:?}: {a:.3e} -> {b:.3e}, ratio {:.3}", a / b);
            ratios.push(a / b);
        }
    }
    let mut cond: f64 = 0.0;
    for name in ALL {
        let pr = load(name);
        if !(pr.field.is_autonomous() && pr.metrics.h.is_constant()) {
            continue;
        }
        let pts = pr.sampler(DEFAULT_SEED).jet_points(100);
        for jp in &pts {
            for v in [FormVariant::Plain, FormVariant::Shifted] {
                cond = cond.max(hamilton_system(&pr.field, jp, v).unwrap().condition_max());
            }
        }
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    verdict(
        8,
        &format!("consistency ratios in [{lo:.3}, {hi:.3}] within [3.5, 4.5], side conditions {cond:.3e} <= 1e-12"),
        lo >= 3.5 && hi <= 4.5 && cond <= 1e-12,
    );
}

#[test]
fn c09_sheets() {
    let pr = load("sheet_integrable");
    let (t0, x0) = (&[0.0, 0.0], &[1.0]);
    let s = integrate_sheet(&pr.field, t0, x0, &[0.01, 0.01], &[100, 100]).unwrap();
    let exact = max((0..s.node_count()).map(|k| {
        let idx = s.multi_index(k);
        let t = s.t_at(&idx);
        (s.x[k][0] - (t[0] + t[1]).exp()).abs()
    }));
    let rev = integrate_sheet_ordered(&pr.field, t0, x0, &[0.01, 0.01], &[100, 100], &[1, 0]).unwrap();
    let path = max(s.x.iter().zip(&rev.x).map(|(a, b)| (a[0] - b[0]).abs()));

    let bad = problems_dir().join("sheet_nonintegrable.json");
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_jetflow"))
        .args(["integrate", bad.to_str().unwrap(), "--system", "sheet", "--out"])
        .arg(out.path().join("sheet.csv"))
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&status.stderr);
    println!("  non-integrable control: exit {:?}, {}", status.status.code(), stderr.trim());
    verdict(
        9,
        &format!(
            "e^(t1+t2) error {exact:.3e} <= 1e-6, path independence {path:.3e} <= 1e-7, control refused with nonzero exit"
        ),
        exact <= 1e-6 && path <= 1e-7 && !status.status.success() && stderr.contains("integrability"),
    );
}

#[test]
fn c10_order_reduction() {
    let sys = reduce_order_ode(&parse("-x1").unwrap(), 2).unwrap();
    let n = 1000;
    let tr = integrate_first_order(&sys, 0.0, &[1.0, 0.0], PI / n as f64, n).unwrap();
    let err = (tr.last().unwrap().x[0] + 1.0).abs();
    let counts: Vec<(usize, usize)> = (1..=4)
        .map(|p| {
            let f = parse("x1 + t1").unwrap();
            (p, reduce_order_pde(&f, p, 2).unwrap().equations.len())
        })
        .collect();
    println!("  PDE equation counts {counts:?}");
    verdict(
        10,
        &format!("|x(π) + 1| = {err:.3e} <= 1e-6, PDE reductions emit p(1+p) equations"),
        err <= 1e-6 && counts.iter().all(|&(p, k)| k == p * (1 + p)),
    );
}

#[test]
fn c11_omega_skew_and_sphere_speed() {
    let mut skew: f64 = 0.0;
    for name in ALL {
        let pr = load(name);
        let pts = pr.sampler(DEFAULT_SEED).base_points(100);
        skew = skew.max(max(pts.iter().map(|b| pr.field.local(b).unwrap().omega_skew_residual())));
        if let Some(wf) = &pr.world_force {
            skew = skew.max(max(pts.iter().map(|b| wf.omega_skew_residual(b).unwrap())));
        }
    }
    let pr = load("sphere_geodesic");
    let sys = SecondOrderSystem::geodesic(&pr.metrics);
    let n = (PI / 1e-3).round() as usize;
    let tr = second(&sys, &pr.initial_jet().unwrap(), PI / n as f64, n);
    let drift = speed_drift(&pr.field, &tr).unwrap();
    verdict(
        11,
        &format!("ω skew {skew:.3e} <= 1e-13, sphere geodesic speed drift {drift:.3e} <= 1e-6 on [0, π]"),
        skew <= 1e-13 && drift <= 1e-6,
    );
}
