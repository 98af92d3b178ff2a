//! The outer steepest-descent loop: explicit subgradient shift on the
//! balance term, implicit (proximal) step on the total variation, projection
//! onto the unit sphere. Each iteration can verify the estimates the scheme
//! is built on and appends a record to a convergence trace.

use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::functional::{balance, csum, mean, norm2, sign, total_variation, Signal};
use crate::graph::WeightedGraph;
use crate::tvprox::{solve_prox_warm, ProxProblem};

/// Outer-loop configuration.
#[derive(Debug, Clone)]
pub struct DescentConfig {
    /// Step constant of the explicit shift (`g = f + c v`).
    pub c: f64,
    /// Stop when the iterate increment falls below this.
    pub outer_tol: f64,
    pub max_outer_iter: usize,
    /// Duality-gap tolerance for the inner prox solves.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Verify the descent estimates every iteration. Costs one extra
    /// functional evaluation per step.
    pub check_lemmas: bool,
    /// Seed for the random initialization; recorded so a manifest fully
    /// determines a run.
    pub seed: u64,
}

// Energies below this are treated as an exact zero: the iterate separates
// the graph, which only happens on disconnected inputs. Any genuine cut has
// E orders of magnitude above it.
const ZERO_ENERGY_FLOOR: f64 = 1e-13;

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            c: 0.25,
            outer_tol: 1e-6,
            max_outer_iter: 1000,
            inner_tol: 1e-8,
            inner_max_iter: 1_000_000,
            check_lemmas: cfg!(debug_assertions),
            seed: 0,
        }
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy)]
pub struct IterateRecord {
    pub k: usize,
    /// Energy of the iterate the step started from.
    pub energy: f64,
    /// `|f_next - f|_2`.
    pub increment: f64,
    /// Duality gap certified by the inner solver.
    pub prox_gap: f64,
    /// Left minus right of the energy-descent inequality; nonnegative up to
    /// inner-solver slack.
    pub descent_slack: f64,
}

/// Everything one step produces.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// The shifted point `f + c v`.
    pub g_shift: Signal,
    /// The prox solution before renormalization.
    pub h: Signal,
    /// The next iterate `h / |h|_2`.
    pub f_next: Signal,
    pub record: IterateRecord,
    /// Energy of `f`, which is also the prox coupling used.
    pub lambda: f64,
    /// Step constant used, kept so the TV subgradient certificate can be
    /// reconstructed.
    pub c: f64,
    /// Per-edge dual variable of the inner solve; feeds the next warm start.
    pub dual: Vec<f64>,
}

impl StepOutcome {
    /// The certificate `lambda (g_shift - h) / c`, an (approximate) TV
    /// subgradient at `h`. At a fixed point it equals `E(f) v` for some `v`
    /// in the balance subdifferential, which is the criticality condition.
    pub fn tv_certificate(&self) -> Vec<f64> {
        let mu = self.lambda / self.c;
        self.g_shift
            .iter()
            .zip(self.h.iter())
            .map(|(g, h)| mu * (g - h))
            .collect()
    }
}

/// Result of a full descent run.
#[derive(Debug, Clone)]
pub struct DescentResult {
    /// Final iterate: unit norm, mean zero.
    pub f_star: Signal,
    pub trace: Vec<IterateRecord>,
    /// Whether the increment fell below `outer_tol` within the budget.
    pub converged: bool,
    /// Increment of the last executed step; small values certify
    /// approximate criticality.
    pub critical_residual: f64,
}

/// I.i.d. standard normal entries, projected to mean zero and normalized.
/// Deterministic for a given seed.
pub fn init_random(n: usize, seed: u64) -> Result<Signal> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let m = csum(raw.iter().copied()) / n as f64;
        let centered: Vec<f64> = raw.iter().map(|x| x - m).collect();
        let nrm = norm2(&centered);
        if nrm > 1e-12 {
            return Ok(Signal::from_raw(centered.iter().map(|x| x / nrm).collect()));
        }
        // All entries equal: astronomically unlikely; draw again.
    }
}

/// Eigenvector of the second-smallest eigenvalue of the unnormalized graph
/// Laplacian `L = D - W`, by power iteration on `s I - L` restricted to the
/// mean-zero subspace. The sign is fixed so the entry of largest magnitude
/// is positive.
pub fn init_spectral(g: &WeightedGraph) -> Result<Signal> {
    if !g.is_connected() {
        return Err(Error::Disconnected {
            components: g.connected_components(),
        });
    }
    let n = g.n();
    let shift = 2.0 * g.max_weighted_degree(); // >= lambda_max(L)
    let max_iter = 500_000;
    let tol = 1e-13;

    let mut v: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(0xF1ED);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    };
    project_and_normalize(&mut v);

    let mut lv = vec![0.0; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::EigenNotConverged(max_iter));
        }
        laplacian_apply(g, &v, &mut lv);
        let mut next: Vec<f64> = (0..n).map(|i| shift * v[i] - lv[i]).collect();
        project_and_normalize(&mut next);
        let delta = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = next;
        if delta < tol {
            break;
        }
    }

    fix_sign(&mut v);
    Ok(Signal::from_raw(v))
}

pub(crate) fn laplacian_apply(g: &WeightedGraph, v: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for e in g.edges() {
        let d = e.weight * (v[e.i] - v[e.j]);
        out[e.i] += d;
        out[e.j] -= d;
    }
}

fn project_and_normalize(v: &mut [f64]) {
    let m = csum(v.iter().copied()) / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
    let nrm = norm2(v);
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
}

// Anchor on the first entry whose magnitude is within rounding of the
// maximum, so symmetric graphs resolve the sign deterministically.
fn fix_sign(v: &mut [f64]) {
    let max_abs = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let anchor = v
        .iter()
        .position(|x| x.abs() >= max_abs * (1.0 - 1e-12))
        .unwrap_or(0);
    if v[anchor] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// One iteration of the scheme from a mean-zero, non-constant `f`:
/// sign subgradient, shift, prox, sphere projection.
pub fn step(g: &WeightedGraph, f: &Signal, cfg: &DescentConfig) -> Result<StepOutcome> {
    step_warm(g, f, cfg, None)
}

/// As [`step`], warm-starting the inner solver from a previous dual.
pub fn step_warm(
    g: &WeightedGraph,
    f: &Signal,
    cfg: &DescentConfig,
    warm_dual: Option<&[f64]>,
) -> Result<StepOutcome> {
    let n = g.n();
    if f.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if !cfg.c.is_finite() || cfg.c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "c must be positive, got {}",
            cfg.c
        )));
    }

    // w in sign(f) with sign(0) = 0; v = w - m(w) 1.
    let w: Vec<f64> = f.iter().map(|&x| sign(x)).collect();
    let mw = csum(w.iter().copied()) / n as f64;
    let v: Vec<f64> = w.iter().map(|x| x - mw).collect();

    let t = total_variation(g, f)?;
    let b = balance(f);
    if b == 0.0 {
        return Err(Error::UndefinedEnergy);
    }
    let lambda = t / b;
    if lambda == 0.0 {
        // T = 0 with B > 0 happens only on disconnected graphs.
        return Err(Error::Numerical(
            "zero energy for a non-constant signal; graph must be connected".into(),
        ));
    }

    let g_shift = Signal::from_raw(f.iter().zip(&v).map(|(x, vi)| x + cfg.c * vi).collect());

    if cfg.check_lemmas {
        check_norm_identity(f, &v, &g_shift, cfg.c, b)?;
    }

    let problem = ProxProblem {
        graph: g,
        target: &g_shift,
        lambda,
        c: cfg.c,
    };
    let sol = solve_prox_warm(&problem, cfg.inner_tol, cfg.inner_max_iter, warm_dual)?;
    if !sol.converged {
        return Err(Error::ProxNotConverged {
            gap: sol.primal_dual_gap,
            tol: cfg.inner_tol,
            iterations: sol.iterations,
        });
    }
    let h = sol.h;

    let hn = h.norm2();
    if hn == 0.0 || !hn.is_finite() {
        return Err(Error::Numerical("prox returned the zero signal".into()));
    }
    let f_next = Signal::from_raw(h.iter().map(|x| x / hn).collect());

    let b_h = balance(&h);
    let e_h = if b_h > 0.0 {
        total_variation(g, &h)? / b_h
    } else {
        f64::INFINITY
    };
    let diff_sq: f64 = csum(h.iter().zip(f.iter()).map(|(a, b)| (a - b) * (a - b)));
    let descent_slack = lambda - e_h - (lambda / b_h) * diff_sq / cfg.c;

    if cfg.check_lemmas {
        check_step_lemmas(f, &g_shift, &h, cfg, lambda, b_h, descent_slack)?;
    }

    let increment = norm2(
        &f_next
            .iter()
            .zip(f.iter())
            .map(|(a, b)| a - b)
            .collect::<Vec<f64>>(),
    );
    let record = IterateRecord {
        k: 0,
        energy: lambda,
        increment,
        prox_gap: sol.primal_dual_gap,
        descent_slack,
    };
    Ok(StepOutcome {
        g_shift,
        h,
        f_next,
        record,
        lambda,
        c: cfg.c,
        dual: sol.dual,
    })
}

// |g|^2 = |f|^2 + 2 c B(f) + c^2 |v|^2, exact because B is homogeneous of
// degree one. Checked to 1e-10 relative.
fn check_norm_identity(f: &Signal, v: &[f64], g_shift: &Signal, c: f64, b: f64) -> Result<()> {
    let g_sq = csum(g_shift.iter().map(|x| x * x));
    let f_sq = csum(f.iter().map(|x| x * x));
    let v_sq = csum(v.iter().map(|x| x * x));
    let rhs = f_sq + 2.0 * c * b + c * c * v_sq;
    if (g_sq - rhs).abs() > 1e-10 * g_sq.max(f64::MIN_POSITIVE) {
        return Err(Error::LemmaViolation(format!(
            "norm identity: |g|^2 = {g_sq} vs |f|^2 + 2cB + c^2|v|^2 = {rhs}"
        )));
    }
    Ok(())
}

fn check_step_lemmas(
    f: &Signal,
    g_shift: &Signal,
    h: &Signal,
    cfg: &DescentConfig,
    lambda: f64,
    b_h: f64,
    descent_slack: f64,
) -> Result<()> {
    let n = f.len() as f64;
    let f_norm = norm2(f);
    let g_norm = g_shift.norm2();
    let h_norm = h.norm2();
    let tol_norm = cfg.inner_tol * (1.0 + g_norm) + 1e-12;
    if h_norm > g_norm + tol_norm {
        return Err(Error::LemmaViolation(format!(
            "contraction: |h| = {h_norm} > |g| = {g_norm}"
        )));
    }
    if g_norm > f_norm + 2.0 * cfg.c * n.sqrt() + 1e-12 {
        return Err(Error::LemmaViolation(format!(
            "shift bound: |g| = {g_norm} > |f| + 2c sqrt(n) = {}",
            f_norm + 2.0 * cfg.c * n.sqrt()
        )));
    }
    let scale = 1e-10 * (1.0 + f_norm);
    let mg = mean(g_shift);
    if mg.abs() > scale {
        return Err(Error::LemmaViolation(format!(
            "shifted point lost mean zero: m(g) = {mg}"
        )));
    }
    let mh = mean(h);
    if mh.abs() > scale {
        return Err(Error::LemmaViolation(format!(
            "prox lost mean zero: m(h) = {mh}"
        )));
    }
    // Energy-descent inequality, with slack for the inexact inner solve.
    let slack = 10.0 * cfg.inner_tol * (1.0 + b_h);
    if descent_slack < -slack {
        return Err(Error::LemmaViolation(format!(
            "descent inequality violated: slack {descent_slack} < -{slack}; lambda = {lambda}"
        )));
    }
    Ok(())
}

/// Iterate [`step`] until the increment drops below `outer_tol` or the
/// budget runs out. `f0` is projected to mean zero and normalized first.
///
/// Connectivity is not required: on a disconnected graph the energy reaches
/// zero at a component split and the run stops there, converged.
pub fn run(g: &WeightedGraph, f0: &Signal, cfg: &DescentConfig) -> Result<DescentResult> {
    run_with_observer(g, f0, cfg, |_| {})
}

/// Per-iteration view handed to [`run_with_observer`] callbacks.
#[derive(Debug)]
pub struct IterateSnapshot<'a> {
    pub k: usize,
    /// The iterate the step started from.
    pub f: &'a Signal,
    pub outcome: &'a StepOutcome,
}

/// As [`run`], invoking `observe` after every step. Useful for conservation
/// checks and live diagnostics without retaining all iterates.
pub fn run_with_observer<F>(
    g: &WeightedGraph,
    f0: &Signal,
    cfg: &DescentConfig,
    mut observe: F,
) -> Result<DescentResult>
where
    F: FnMut(&IterateSnapshot<'_>),
{
    if f0.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: f0.len(),
        });
    }
    if cfg.max_outer_iter == 0 {
        return Err(Error::InvalidParameter(
            "max_outer_iter must be positive".into(),
        ));
    }
    let mut f = {
        let m = mean(f0);
        let centered: Vec<f64> = f0.iter().map(|x| x - m).collect();
        let nrm = norm2(&centered);
        if nrm == 0.0 {
            return Err(Error::UndefinedEnergy);
        }
        Signal::from_raw(centered.iter().map(|x| x / nrm).collect())
    };

    let mut trace: Vec<IterateRecord> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut converged = false;

    for k in 0..cfg.max_outer_iter {
        // On a disconnected graph the energy can reach zero: the iterate is
        // a (numerically) perfect split and a global minimum. Stop before
        // the prox coupling degenerates.
        let t = total_variation(g, &f)?;
        let b = balance(&f);
        if b == 0.0 {
            return Err(Error::UndefinedEnergy);
        }
        if t <= ZERO_ENERGY_FLOOR * b {
            trace.push(IterateRecord {
                k,
                energy: t / b,
                increment: 0.0,
                prox_gap: 0.0,
                descent_slack: 0.0,
            });
            converged = true;
            break;
        }
        let mut outcome = step_warm(g, &f, cfg, warm.as_deref())?;
        outcome.record.k = k;
        observe(&IterateSnapshot {
            k,
            f: &f,
            outcome: &outcome,
        });
        trace.push(outcome.record);
        warm = Some(std::mem::take(&mut outcome.dual));
        f = outcome.f_next;
        if outcome.record.increment < cfg.outer_tol {
            converged = true;
            break;
        }
    }

    let critical_residual = trace.last().map(|r| r.increment).unwrap_or(f64::NAN);
    Ok(DescentResult {
        f_star: f,
        trace,
        converged,
        critical_residual,
    })
}

/// Execute one step from `f` and return the iterate increment. A residual
/// below tolerance certifies approximate criticality, since fixed points of
/// the step map are critical points of the energy.
pub fn critical_residual(g: &WeightedGraph, f: &Signal, cfg: &DescentConfig) -> Result<f64> {
    Ok(step(g, f, cfg)?.record.increment)
}

/// Export a trace as CSV, one row per iteration.
pub fn write_trace_csv<W: Write>(trace: &[IterateRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,energy,increment,prox_gap,descent_slack")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.k, r.energy, r.increment, r.prox_gap, r.descent_slack
        )?;
    }
    Ok(())
}
