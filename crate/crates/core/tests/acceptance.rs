//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::{
    derivative_check, pair_distance, quadratic_eigenvalues, random_expr, random_matrix, rng,
    round_trips, DerivativeCheck,
};
use nhphase::evolution::{
    adiabatic_decompose, angle_distance, berry_phase_loop, closed_form_berry_41,
    closed_form_berry_42, dynamical_phase, eigen_trajectory, geometric_phase,
    hermitian_berry_phase_loop, tdse_integrate, EigenTrajectory, TimeGrid, TrajectoryOptions,
};
use nhphase::exprpath::parse;
use nhphase::linalg::{c64, eig_biorthogonal, CMatrix};
use nhphase::model::{
    build_scenario_41, build_scenario_42, discriminant, DysonSystem, Free41, Free42, Regime,
    ScenarioConstants, ScenarioSolution,
};
use nhphase::operators::{c_hat_evolution_residual, metric_ode_solve, OperatorFrame, Tolerances};
use rand::Rng;

/// Measured quantities of one criterion against their thresholds.
#[derive(Default)]
struct Checks {
    parts: Vec<String>,
    failed: bool,
}

impl Checks {
    fn le(&mut self, label: &str, value: f64, tol: f64) {
        let ok = value <= tol;
        self.failed |= !ok;
        self.parts.push(format!("{label} {value:.2e} {} {tol:.0e}", if ok { "<=" } else { "!<=" }));
    }

    fn ge(&mut self, label: &str, value: f64, bound: f64) {
        let ok = value >= bound;
        self.failed |= !ok;
        self.parts.push(format!("{label} {value:.2e} {} {bound:.0e}", if ok { ">=" } else { "!>=" }));
    }

    fn holds(&mut self, label: &str, ok: bool, detail: String) {
        self.failed |= !ok;
        self.parts.push(format!("{label} {detail}{}", if ok { "" } else { " (violated)" }));
    }
}

fn s41(ar: &str, mr: &str, ti: &str, consts: ScenarioConstants, g: &TimeGrid) -> ScenarioSolution {
    build_scenario_41(
        Free41 {
            alpha_r: parse(ar).unwrap(),
            mu_r: parse(mr).unwrap(),
            tau_i: parse(ti).unwrap(),
        },
        consts,
        g,
    )
    .unwrap()
}

fn s42(ar: &str, mi: &str, ti: &str, consts: ScenarioConstants, g: &TimeGrid) -> ScenarioSolution {
    build_scenario_42(
        Free42 {
            alpha_r: parse(ar).unwrap(),
            mu_i: parse(mi).unwrap(),
            tau_i: parse(ti).unwrap(),
        },
        consts,
        g,
    )
    .unwrap()
}

fn grid(t1: f64, steps: usize) -> TimeGrid {
    TimeGrid::new(0.0, t1, steps).unwrap()
}

/// α_r = 1, μ_r = 0, τ_i = 2: broken at the static level.
fn mended(g: &TimeGrid) -> ScenarioSolution {
    s41("1", "0", "2", ScenarioConstants::new(2.0, 1.0, 0.3), g)
}

/// A time-dependent path of the first scenario.
fn moving_41(g: &TimeGrid) -> ScenarioSolution {
    s41(
        "1 + 0.3*sin(t)",
        "0.4*cos(2*t)",
        "0.9*cos(t)",
        ScenarioConstants::new(2.0, 1.0, 0.3),
        g,
    )
}

fn moving_42(g: &TimeGrid) -> ScenarioSolution {
    s42(
        "1 + 0.2*sin(t)",
        "0.7 + 0.1*cos(3*t)",
        "0.4*cos(t)",
        ScenarioConstants::new(1.2, 0.0, 0.1),
        g,
    )
}

fn energy_traj(s: &ScenarioSolution, g: &TimeGrid) -> EigenTrajectory {
    eigen_trajectory(|t| s.energy_operator(t), |t| s.metric(t), g, TrajectoryOptions::default()).unwrap()
}

fn reality_mending() -> Checks {
    let mut c = Checks::default();
    let g = grid(1.0, 1000);
    let s = mended(&g);
    let (mut max_im, mut closed_err, mut broken) = (0.0f64, 0.0f64, 0);
    for t in g.times() {
        let f = OperatorFrame::build(&s, t, None).unwrap();
        let e = f.energies();
        max_im = max_im.max(e[0].im.abs()).max(e[1].im.abs());
        // Ẽ± = −ω/2 ± K·√(α_r² + μ_r²) with α_r = 1, μ_r = 0
        let k = s.coupling_scale(t).unwrap().unwrap();
        closed_err = closed_err
            .max((e[0] - c64(-0.15 + k, 0.0)).norm())
            .max((e[1] - c64(-0.15 - k, 0.0)).norm());
        if discriminant(&s.path, t, 1e-12).unwrap().1 == Regime::Broken {
            broken += 1;
        }
    }
    c.le("max|Im E~|", max_im, 1e-10);
    c.le("|E~ - closed form|", closed_err, 1e-10);
    c.holds("static broken", broken == g.len(), format!("{broken}/{}", g.len()));
    c
}

fn ptrel_suite() -> Checks {
    let mut c = Checks::default();
    let tol = Tolerances::default();
    let g = grid(2.0, 400);
    for (name, s) in [("dyson41 static", mended(&g)), ("dyson41 moving", moving_41(&g)), ("dyson42", moving_42(&g))] {
        let (mut i, mut ii, mut iii, mut alpha) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let (mut control, mut control_min) = (0.0f64, f64::INFINITY);
        for t in g.times() {
            let f = OperatorFrame::build(&s, t, None).unwrap();
            let r = f.verify_ptrel(&tol);
            i = i.max(r.intertwining);
            ii = ii.max(r.max_level_residual());
            iii = iii.max(r.hermiticity);
            alpha = alpha.max(r.max_alpha_imag());
            let h_fit = f.verify_ptrel_hamiltonian(&tol).unwrap().max_level_residual();
            control = control.max(h_fit);
            control_min = control_min.min(h_fit);
        }
        c.le(&format!("{name} (i)"), i, 1e-9);
        c.le(&format!("{name} (ii)"), ii, 1e-9);
        c.le(&format!("{name} (iii)"), iii, 1e-9);
        c.le(&format!("{name} Im alpha"), alpha, 1e-9);
        c.ge(&format!("{name} control with H (ii)"), control, 1e-2);
        // where η̇ vanishes H̃ = H and the control cannot fail
        c.parts.push(format!("{name} control pointwise min {control_min:.2e}"));
    }
    c
}

fn metric_identities() -> Checks {
    let mut c = Checks::default();
    let g = grid(2.0, 50);
    let mut r = rng(2024);
    let (mut err41, mut err42) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let (c1, c2) = loop {
            let c1: f64 = r.random_range(0.3..3.0);
            let c2: f64 = r.random_range(-3.0..3.0);
            if (c1 * c1 - c2 * c2).abs() > 0.1 {
                break (c1, c2);
            }
        };
        let omega = r.random_range(-1.0..1.0);
        let a = s41("1 + 0.3*sin(t)", "0.4*cos(2*t)", "0.9*cos(t)", ScenarioConstants::new(c1, c2, omega), &g);
        let b = s42("1 + 0.2*sin(t)", "0.7 + 0.1*cos(3*t)", "0.4*cos(t)", ScenarioConstants::new(c1, 0.0, omega), &g);
        let want41 = (c1 * c1 - c2 * c2).powi(2);
        let want42 = -16.0 * c1.powi(4);
        for t in g.times() {
            err41 = err41.max((a.metric(t).unwrap().det() - want41).norm() / want41);
            let f = OperatorFrame::build(&b, t, None).unwrap();
            err42 = err42.max((f.p_tilde.det() - want42).norm() / want42.abs());
        }
    }
    c.le("det rho rel", err41, 1e-9);
    c.le("det P~ rel", err42, 1e-9);
    c
}

fn metric_ode() -> Checks {
    let mut c = Checks::default();
    let g = grid(1.0, 10_000);
    for (name, s) in [("dyson41", moving_41(&g)), ("dyson42", moving_42(&g))] {
        let sol = metric_ode_solve(|t| s.hamiltonian(t), &s.metric(0.0).unwrap(), &g).unwrap();
        let err = sol
            .times
            .iter()
            .zip(&sol.rho)
            .map(|(&t, rho)| (rho - &s.metric(t).unwrap()).max_abs())
            .fold(0.0, f64::max);
        c.le(&format!("{name} |rho_rk4 - rho|"), err, 1e-6);
        c.holds(&format!("{name} rho_rk4 positive definite"), sol.positive, sol.positive.to_string());
    }
    c
}

fn operator_algebra() -> Checks {
    let mut c = Checks::default();
    let g = grid(2.0, 400);
    let id = CMatrix::identity(2);
    let mut worst = [0.0f64; 4];
    for s in [mended(&g), moving_41(&g), moving_42(&g)] {
        for t in g.times() {
            let f = OperatorFrame::build(&s, t, None).unwrap();
            let r = [
                (&(&f.c_tilde * &f.c_tilde) - &id).max_abs(),
                (&(&f.c_tilde * &f.energy) - &(&f.energy * &f.c_tilde)).max_abs(),
                (&f.p_tilde - &f.p_tilde.adjoint()).max_abs(),
                (&(&f.rho.inverse().unwrap() * &f.p_tilde) - &f.c_tilde).max_abs(),
            ];
            for (w, x) in worst.iter_mut().zip(r) {
                *w = w.max(x);
            }
        }
    }
    c.le("C~^2 - I", worst[0], 1e-9);
    c.le("[C~, H~]", worst[1], 1e-9);
    c.le("P~ - P~+", worst[2], 1e-9);
    c.le("rho^-1 P~ - C~", worst[3], 1e-9);

    // Ĉ needs a parity operator that does not move: μ_r/α_r constant.
    let s = s41(
        "1 + 0.3*sin(t)",
        "0.5*(1 + 0.3*sin(t))",
        "0.9*cos(t)",
        ScenarioConstants::new(2.0, 1.0, 0.3),
        &g,
    );
    let mut evo = 0.0f64;
    for t in g.times() {
        let h = s.hamiltonian(t).unwrap();
        let r = c_hat_evolution_residual(
            |x| s.static_parity(x).unwrap(),
            |x| s.metric(x),
            &h,
            t,
        )
        .unwrap();
        evo = evo.max(r);
    }
    c.le("iC^dot - [H, C^]", evo, 1e-6);
    c
}

fn berry_phase() -> Checks {
    let mut c = Checks::default();
    let mut max_im = 0.0f64;

    let g = grid(1.0, 800);
    // encloses the origin of the (α_r, μ_r) plane once
    let s = s41(
        "0.3 + cos(2*pi*t)",
        "0.8*sin(2*pi*t) + 0.2*sin(4*pi*t)",
        "0.6*pi*cos(2*pi*t)",
        ScenarioConstants::new(2.0, 0.5, 0.3),
        &g,
    );
    let lp = berry_phase_loop(&energy_traj(&s, &g), &s, &g).unwrap();
    let herm = hermitian_berry_phase_loop(&s, &g).unwrap();
    let closed = closed_form_berry_41(&s, &g).unwrap();
    c.holds("dyson41 closed form", (closed - PI).abs() < 1e-12, format!("{closed:.12}"));
    let (mut vs_closed, mut vs_herm) = (0.0f64, 0.0f64);
    for n in 0..2 {
        vs_closed = vs_closed.max(angle_distance(lp.gamma[n], closed));
        vs_herm = vs_herm.max(angle_distance(lp.gamma[n], herm.gamma[n]));
    }
    max_im = max_im.max(lp.max_imag_rate);

    let g = grid(1.0, 10_000);
    let s = s42(
        "1 + 0.3*cos(2*pi*t)",
        "0.8 + 0.2*sin(2*pi*t)",
        "0.5*cos(2*pi*t)",
        ScenarioConstants::new(1.1, 0.0, 0.2),
        &g,
    );
    let lp = berry_phase_loop(&energy_traj(&s, &g), &s, &g).unwrap();
    let herm = hermitian_berry_phase_loop(&s, &g).unwrap();
    let closed = closed_form_berry_42(&s, &g).unwrap();
    for n in 0..2 {
        vs_closed = vs_closed.max(angle_distance(lp.gamma[n], closed));
        vs_herm = vs_herm.max(angle_distance(lp.gamma[n], herm.gamma[n]));
    }
    max_im = max_im.max(lp.max_imag_rate);
    c.le("|gamma - closed form|", vs_closed, 1e-6);
    c.le("|gamma - hermitian route|", vs_herm, 1e-7);

    let g = grid(1.0, 1000);
    let consts = ScenarioConstants::new(2.0, 1.0, 0.2);
    let circle = s41("cos(2*pi*t)", "sin(2*pi*t)", "0", consts, &g);
    let lp = berry_phase_loop(&energy_traj(&circle, &g), &circle, &g).unwrap();
    let pi_err = lp.gamma.iter().map(|x| angle_distance(*x, PI)).fold(0.0, f64::max);
    max_im = max_im.max(lp.max_imag_rate);
    c.le("unit circle |gamma - pi|", pi_err, 1e-6);

    let away = s41("2 + cos(2*pi*t)", "sin(2*pi*t)", "0", consts, &g);
    let lp = berry_phase_loop(&energy_traj(&away, &g), &away, &g).unwrap();
    let zero_err = lp.gamma.iter().map(|x| x.abs()).fold(0.0, f64::max);
    max_im = max_im.max(lp.max_imag_rate);
    c.le("non-enclosing |gamma|", zero_err, 1e-8);
    c.le("max|Im gamma^dot|", max_im, 1e-7);
    c
}

/// A loop of period T whose shape in t/T does not depend on T: τ_i scales
/// as 1/T so δ, and with it the energy gap, is a function of t/T only.
fn adiabatic_loop(period: f64, steps_per_unit: f64) -> (ScenarioSolution, TimeGrid) {
    let steps = (period * steps_per_unit).ceil() as usize;
    let g = grid(period, steps);
    let w = format!("(2*pi/{period})");
    let s = s41(
        &format!("1 + 0.2*cos({w}*t)"),
        &format!("0.2*sin({w}*t)"),
        &format!("{w}*0.5*cos({w}*t)"),
        ScenarioConstants::new(2.0, 1.0, 0.0),
        &g,
    );
    (s, g)
}

fn tdse_and_adiabaticity() -> Checks {
    let mut c = Checks::default();
    let coarse = grid(10.0, 1000);
    let s = s41(
        "1 + 0.3*sin(t)",
        "0.4*cos(2*t)",
        "0.9*cos(t)",
        ScenarioConstants::new(2.0, 1.0, 0.3),
        &coarse,
    );
    let g = grid(10.0, 100_000);
    let psi0 = nhphase::linalg::CVector(vec![c64(0.3, 0.1), c64(-0.2, 0.5)]);
    let traj = tdse_integrate(|t| s.hamiltonian(t), |t| s.metric(t), &psi0, &g).unwrap();
    c.le("rho-norm drift T=10", traj.norm_drift(), 1e-8);

    // gap of the shape; the same for every period
    let (shape, shape_grid) = adiabatic_loop(1.0, 400.0);
    let gap = shape_grid
        .times()
        .into_iter()
        .map(|t| {
            let f = OperatorFrame::build(&shape, t, None).unwrap();
            (f.energies()[0] - f.energies()[1]).norm()
        })
        .fold(f64::INFINITY, f64::min);
    let mut devs = Vec::new();
    for m in [25.0, 50.0, 100.0, 200.0] {
        let (s, g) = adiabatic_loop(m / gap, 40.0);
        let traj = energy_traj(&s, &g);
        let states = tdse_integrate(|t| s.hamiltonian(t), |t| s.metric(t), &traj.right[0][0], &g).unwrap();
        let dynamical = dynamical_phase(&traj).unwrap();
        let geo = geometric_phase(&traj, &s).unwrap();
        devs.push(adiabatic_decompose(&states, &traj, &dynamical, &geo).unwrap().deviation);
    }
    let listed: Vec<String> = devs.iter().map(|d| format!("{d:.2e}")).collect();
    c.holds(
        "deviation decreasing",
        devs.windows(2).all(|w| w[1] < w[0]),
        format!("[{}] at T*gap {{25,50,100,200}}, gap {gap:.3}", listed.join(", ")),
    );
    c.le("deviation at T*gap=200", *devs.last().unwrap(), 1e-2);
    c
}

fn parser_autodiff() -> Checks {
    let mut c = Checks::default();
    let mut r = rng(8);
    let (mut accepted, mut skipped, mut round_trip_failures, mut worst) = (0, 0, 0, 0.0f64);
    while accepted < 100 {
        let e = random_expr(&mut r, 5);
        let t = r.random_range(-2.0..2.0);
        if !round_trips(&e) {
            round_trip_failures += 1;
        }
        match derivative_check(&e, t) {
            DerivativeCheck::Checked { rel_error, .. } => {
                accepted += 1;
                worst = worst.max(rel_error);
            }
            DerivativeCheck::Skipped => skipped += 1,
        }
    }
    c.holds(
        "round trip",
        round_trip_failures == 0,
        format!("{round_trip_failures} failures over {} expressions", accepted + skipped),
    );
    c.le("derivative rel error (100 checked)", worst, 1e-5);
    c.parts.push(format!("{skipped} skipped outside their domain"));
    c
}

fn eigensolver() -> Checks {
    let mut c = Checks::default();
    let mut r = rng(9);
    let (mut ev, mut bi, mut comp) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = random_matrix(&mut r, 2, 1.0);
        let es = eig_biorthogonal(&m).unwrap();
        ev = ev.max(pair_distance([es.values[0], es.values[1]], quadratic_eigenvalues(&m)));
        bi = bi.max(es.biorthonormality_residual());
        comp = comp.max(es.completeness_residual());
    }
    c.le("eigenvalues vs quadratic formula", ev, 1e-10);
    c.le("biorthonormality", bi, 1e-10);
    c.le("completeness", comp, 1e-10);
    c
}

type Criterion = (&'static str, fn() -> Checks);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("reality mending", reality_mending),
        ("PTrel suite", ptrel_suite),
        ("metric identities", metric_identities),
        ("metric ODE oracle", metric_ode),
        ("operator algebra", operator_algebra),
        ("Berry phase", berry_phase),
        ("TDSE conservation and adiabaticity", tdse_and_adiabaticity),
        ("parser and autodiff", parser_autodiff),
        ("eigensolver oracle", eigensolver),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(checks) => (!checks.failed, checks.parts.join("; ")),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        failures += usize::from(!pass);
        println!(
            "{} {}. {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
