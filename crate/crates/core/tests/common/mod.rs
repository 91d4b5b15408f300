#![allow(dead_code)]

use nhphase::evolution::TimeGrid;
use nhphase::exprpath::{parse, BinaryOp, Expr, NamedConst, UnaryOp};
use nhphase::linalg::{c64, CMatrix, C64};
use nhphase::model::{
    build_scenario_41, build_scenario_42, Free41, Free42, ScenarioConstants, ScenarioSolution,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random expression tree of at most `depth` levels, built only from
/// nodes the parser can produce (non-negative literals, explicit Neg).
pub fn random_expr(rng: &mut StdRng, depth: usize) -> Expr {
    if depth <= 1 || rng.random_bool(0.25) {
        return match rng.random_range(0..4) {
            0 => Expr::Time,
            1 => Expr::Named(if rng.random_bool(0.5) { NamedConst::Pi } else { NamedConst::E }),
            2 => Expr::Const(rng.random_range(0..20) as f64 * 0.25),
            _ => Expr::Const(rng.random_range(0.0..5.0)),
        };
    }
    if rng.random_bool(0.4) {
        let op = if rng.random_bool(0.2) {
            UnaryOp::Neg
        } else {
            UnaryOp::FUNCTIONS[rng.random_range(0..UnaryOp::FUNCTIONS.len())]
        };
        Expr::unary(op, random_expr(rng, depth - 1))
    } else {
        let op = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow]
            [rng.random_range(0..5)];
        let rhs = if op == BinaryOp::Pow {
            // keep powers tame
            Expr::Const(rng.random_range(0..4) as f64)
        } else {
            random_expr(rng, depth - 1)
        };
        Expr::binary(op, random_expr(rng, depth - 1), rhs)
    }
}

/// Outcome of comparing the dual derivative with a five-point difference.
pub enum DerivativeCheck {
    /// Not evaluable or too steep near `t` for a finite-difference oracle.
    Skipped,
    Checked { dual: f64, fd: f64, rel_error: f64 },
}

pub fn derivative_check(e: &Expr, t: f64) -> DerivativeCheck {
    let h = 1e-3;
    let mut samples = [0.0; 5];
    for (k, s) in samples.iter_mut().enumerate() {
        match e.eval(t + (k as f64 - 2.0) * h) {
            Ok(v) if v.abs() < 1e4 => *s = v,
            _ => return DerivativeCheck::Skipped,
        }
    }
    // reject samples near singular behaviour: the stencil needs smoothness
    // on [t − 2h, t + 2h], checked through the fourth difference
    let fourth = samples[0] - 4.0 * samples[1] + 6.0 * samples[2] - 4.0 * samples[3] + samples[4];
    if fourth.abs() > 1e-6 * (1.0 + samples[2].abs()) {
        return DerivativeCheck::Skipped;
    }
    let dual = match e.eval_dual(t) {
        Ok(d) => d.deriv,
        Err(_) => return DerivativeCheck::Skipped,
    };
    let fd = (-samples[4] + 8.0 * samples[3] - 8.0 * samples[1] + samples[0]) / (12.0 * h);
    let rel_error = (fd - dual).abs() / dual.abs().max(1.0);
    DerivativeCheck::Checked { dual, fd, rel_error }
}

/// Round trip through the printer and parser.
pub fn round_trips(e: &Expr) -> bool {
    parse(&e.to_string()).as_ref() == Ok(e)
}

pub fn random_complex(rng: &mut StdRng, scale: f64) -> C64 {
    c64(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_matrix(rng: &mut StdRng, n: usize, scale: f64) -> CMatrix {
    let entries: Vec<C64> = (0..n * n).map(|_| random_complex(rng, scale)).collect();
    CMatrix::from_fn(n, |i, j| entries[i * n + j])
}

/// Roots of λ² − tr λ + det, from the quadratic formula.
pub fn quadratic_eigenvalues(m: &CMatrix) -> [C64; 2] {
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let root = (tr * tr - det * 4.0).sqrt();
    [(tr + root) * 0.5, (tr - root) * 0.5]
}

/// Smallest total distance between two unordered pairs.
pub fn pair_distance(a: [C64; 2], b: [C64; 2]) -> f64 {
    let same = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
    let swap = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
    same.min(swap)
}

/// A smooth random path parameter a + b·sin(wt + p) with |b| < a − margin.
pub fn positive_wave(rng: &mut StdRng, margin: f64) -> String {
    let a = rng.random_range(0.5..1.5);
    let b = rng.random_range(0.0..(a - margin).max(0.0));
    let w = rng.random_range(0.5..3.0);
    let p = rng.random_range(0.0..3.0);
    format!("{a} + {b}*sin({w}*t + {p})")
}

pub fn wave(rng: &mut StdRng, amp: f64) -> String {
    let a = rng.random_range(-amp..amp);
    let b = rng.random_range(0.0..amp);
    let w = rng.random_range(0.5..3.0);
    let p = rng.random_range(0.0..3.0);
    format!("{a} + {b}*cos({w}*t + {p})")
}

/// Random admissible first-scenario solution. With `broken`, τ_i swings
/// far enough that the frozen Hamiltonian is in the broken regime on part
/// of the grid, while δ = ∫τ_i stays bounded.
pub fn random_41(rng: &mut StdRng, grid: &TimeGrid, broken: bool) -> ScenarioSolution {
    let (c1, c2) = loop {
        let c1: f64 = rng.random_range(0.5..2.5);
        let c2: f64 = rng.random_range(-1.5..1.5);
        if (c1 * c1 - c2 * c2).abs() > 0.3 {
            break (c1, c2);
        }
    };
    let tau = if broken {
        let a = rng.random_range(3.0..4.5);
        let w = rng.random_range(2.0..4.0);
        format!("{a}*cos({w}*t + {})", rng.random_range(0.0..3.0))
    } else {
        wave(rng, 1.0)
    };
    build_scenario_41(
        Free41 {
            alpha_r: parse(&positive_wave(rng, 0.3)).unwrap(),
            mu_r: parse(&wave(rng, 0.8)).unwrap(),
            tau_i: parse(&tau).unwrap(),
        },
        ScenarioConstants::new(c1, c2, rng.random_range(-1.0..1.0)),
        grid,
    )
    .unwrap()
}

pub fn random_42(rng: &mut StdRng, grid: &TimeGrid) -> ScenarioSolution {
    build_scenario_42(
        Free42 {
            alpha_r: parse(&positive_wave(rng, 0.3)).unwrap(),
            mu_i: parse(&positive_wave(rng, 0.3)).unwrap(),
            tau_i: parse(&wave(rng, 1.0)).unwrap(),
        },
        ScenarioConstants::new(rng.random_range(0.5..2.0), 0.0, rng.random_range(-1.0..1.0)),
        grid,
    )
    .unwrap()
}
