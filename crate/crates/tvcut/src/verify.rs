//! Small-graph verification battery: exhaustive tightness checks, the exact
//! norm identity, the energy-descent inequality, and an independent oracle
//! for the inner prox solver. The acceptance tests and the `verify` CLI
//! subcommand both run these.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::descent::{run, DescentConfig};
use crate::functional::{balance, csum, dot, norm2, subgrad_balance, Signal};
use crate::graph::WeightedGraph;
use crate::ratio_cut::verify_tightness;
use crate::tvprox::{solve_prox, ProxProblem};

/// Battery configuration. Defaults match the standard check set.
#[derive(Debug, Clone)]
pub struct BatteryConfig {
    /// Seeds driving the random instances.
    pub seeds: Vec<u64>,
    /// Enumeration bound for the tightness checks.
    pub n_max: usize,
    /// Inner tolerance used for the descent-inequality runs. The pass bar
    /// stays fixed, so loosening this makes violations visible.
    pub inner_tol: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            n_max: 8,
            inner_tol: 1e-10,
        }
    }
}

/// Outcome of one battery item.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// A random connected weighted graph: a random spanning tree plus extra
/// random edges, weights in (0.1, 1].
pub fn random_connected_graph(n: usize, extra_edges: usize, seed: u64) -> WeightedGraph {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.push((j, i, rng.random_range(0.1..=1.0)));
    }
    let mut attempts = 0;
    let mut added = 0;
    while added < extra_edges && attempts < 20 * extra_edges {
        attempts += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        if edges.iter().any(|&(x, y, _)| (x, y) == (i, j)) {
            continue;
        }
        edges.push((i, j, rng.random_range(0.1..=1.0)));
        added += 1;
    }
    WeightedGraph::new(n, &edges).expect("generated edges are valid")
}

/// Random mean-zero unit signal.
pub fn random_unit_signal(n: usize, rng: &mut ChaCha8Rng) -> Signal {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = csum(raw.iter().copied()) / n as f64;
        let centered: Vec<f64> = raw.iter().map(|x| x - m).collect();
        let nrm = norm2(&centered);
        if nrm > 1e-9 {
            return Signal::from_raw(centered.iter().map(|x| x / nrm).collect());
        }
    }
}

/// Reference solver for the prox subproblem, independent of the primal-dual
/// path: plain subgradient descent on the strongly convex objective with
/// the classical diminishing step, averaging the tail iterates to damp the
/// terminal oscillation.
pub fn subgradient_prox_oracle(
    g: &WeightedGraph,
    target: &[f64],
    lambda: f64,
    c: f64,
    iterations: usize,
) -> Vec<f64> {
    let n = g.n();
    let mu = lambda / c;
    let mut u: Vec<f64> = target.to_vec();
    let mut grad = vec![0.0; n];
    let tail_start = iterations - iterations / 5;
    let mut tail_sum = vec![0.0; n];
    let mut tail_count = 0usize;
    for k in 0..iterations {
        for x in grad.iter_mut() {
            *x = 0.0;
        }
        for e in g.edges() {
            let s = crate::functional::sign(u[e.i] - u[e.j]) * e.weight;
            grad[e.i] += s;
            grad[e.j] -= s;
        }
        for i in 0..n {
            grad[i] += mu * (u[i] - target[i]);
        }
        let alpha = 2.0 / (mu * (k + 2) as f64);
        for i in 0..n {
            u[i] -= alpha * grad[i];
        }
        if k >= tail_start {
            for i in 0..n {
                tail_sum[i] += u[i];
            }
            tail_count += 1;
        }
    }
    tail_sum.iter().map(|x| x / tail_count as f64).collect()
}

/// Run the full battery and return one outcome per check.
pub fn run_battery(cfg: &BatteryConfig) -> Vec<CheckOutcome> {
    vec![
        check_tightness(cfg),
        check_norm_identity(cfg),
        check_descent_inequality(cfg),
        check_prox_oracle(cfg),
    ]
}

fn check_tightness(cfg: &BatteryConfig) -> CheckOutcome {
    let mut graphs = 0;
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b9));
        for n in 3..=cfg.n_max.min(8) {
            let g = random_connected_graph(n, rng.random_range(0..=n), seed ^ (n as u64) << 32);
            graphs += 1;
            match verify_tightness(&g) {
                Ok(true) => {}
                Ok(false) => {
                    return CheckOutcome {
                        name: "tightness",
                        passed: false,
                        detail: format!("embedding/cut mismatch on n = {n}, seed {seed}"),
                    }
                }
                Err(e) => {
                    return CheckOutcome {
                        name: "tightness",
                        passed: false,
                        detail: format!("error on n = {n}, seed {seed}: {e}"),
                    }
                }
            }
        }
    }
    CheckOutcome {
        name: "tightness",
        passed: true,
        detail: format!("{graphs} random connected graphs, every embedding at RatioCut/2"),
    }
}

fn check_norm_identity(cfg: &BatteryConfig) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xabcd));
        for _ in 0..25 {
            let n = rng.random_range(3..=50);
            let f = random_unit_signal(n, &mut rng);
            let c = [0.1, 0.25, 1.0][checks % 3];
            let v = subgrad_balance(&f);
            let g_shift: Vec<f64> = f.iter().zip(v.iter()).map(|(x, vi)| x + c * vi).collect();
            let g_sq = dot(&g_shift, &g_shift);
            let rhs = dot(&f, &f) + 2.0 * c * balance(&f) + c * c * dot(&v, &v);
            let rel = (g_sq - rhs).abs() / g_sq;
            worst = worst.max(rel);
            checks += 1;
        }
    }
    CheckOutcome {
        name: "norm-identity",
        passed: worst <= 1e-10,
        detail: format!("{checks} signals, worst relative defect {worst:.3e}"),
    }
}

fn check_descent_inequality(cfg: &BatteryConfig) -> CheckOutcome {
    // Fixed pass bar (1e-7) independent of the configured inner_tol, so an
    // injected loose tolerance shows up as a failure.
    let mut worst_slack = f64::INFINITY;
    let mut worst_jump: f64 = 0.0;
    let mut iters = 0;
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x51ab));
        let n = rng.random_range(5..=30);
        let g = random_connected_graph(n, rng.random_range(n / 2..=2 * n), seed ^ 0xdead);
        let f0 = crate::descent::init_random(n, seed).expect("n >= 5");
        let dcfg = DescentConfig {
            inner_tol: cfg.inner_tol,
            check_lemmas: false,
            max_outer_iter: 300,
            ..DescentConfig::default()
        };
        match run(&g, &f0, &dcfg) {
            Ok(res) => {
                for r in &res.trace {
                    worst_slack = worst_slack.min(r.descent_slack);
                    iters += 1;
                }
                for w in res.trace.windows(2) {
                    worst_jump = worst_jump.max(w[1].energy - w[0].energy);
                }
            }
            Err(e) => {
                return CheckOutcome {
                    name: "descent-inequality",
                    passed: false,
                    detail: format!("run failed on seed {seed}: {e}"),
                }
            }
        }
    }
    let passed = worst_slack >= -1e-7 && worst_jump <= 1e-9;
    CheckOutcome {
        name: "descent-inequality",
        passed,
        detail: format!(
            "{iters} iterations, worst slack {worst_slack:.3e}, worst energy jump {worst_jump:.3e}"
        ),
    }
}

fn check_prox_oracle(cfg: &BatteryConfig) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let instances = cfg.seeds.len().clamp(1, 5);
    for (i, &seed) in cfg.seeds.iter().take(instances).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9a0c));
        let n = 2 + (i % 2);
        let g = random_connected_graph(n, 1, seed ^ 0xbeef);
        let target: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lambda = rng.random_range(0.5..2.0);
        let c = rng.random_range(0.25..1.0);
        let sig = Signal::new(target.clone()).expect("finite");
        let problem = ProxProblem {
            graph: &g,
            target: &sig,
            lambda,
            c,
        };
        let sol = match solve_prox(&problem, 1e-12, 2_000_000) {
            Ok(s) if s.converged => s,
            Ok(_) => {
                return CheckOutcome {
                    name: "prox-oracle",
                    passed: false,
                    detail: format!("solver hit the iteration budget on seed {seed}"),
                }
            }
            Err(e) => {
                return CheckOutcome {
                    name: "prox-oracle",
                    passed: false,
                    detail: format!("solver error on seed {seed}: {e}"),
                }
            }
        };
        let oracle = subgradient_prox_oracle(&g, &target, lambda, c, 1_000_000);
        let linf = sol
            .h
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(linf);
    }
    CheckOutcome {
        name: "prox-oracle",
        passed: worst <= 1e-4,
        detail: format!("{instances} instances, worst l-inf deviation {worst:.3e}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_yields_connected_graphs() {
        for seed in 0..20 {
            let g = random_connected_graph(2 + (seed as usize % 10), seed as usize % 7, seed);
            assert!(g.is_connected());
        }
    }

    #[test]
    fn oracle_agrees_with_two_vertex_closed_form() {
        let g = WeightedGraph::new(2, &[(0, 1, 1.0)]).unwrap();
        let h = subgradient_prox_oracle(&g, &[1.0, -1.0], 1.0, 1.0, 200_000);
        assert!(h[0].abs() < 1e-4 && h[1].abs() < 1e-4, "h = {h:?}");
        // Interior case: shrink by w/mu = 0.5 per side.
        let h = subgradient_prox_oracle(&g, &[2.0, -2.0], 0.5, 1.0, 200_000);
        assert!((h[0] - 0.0).abs() < 1e-3, "h = {h:?}");
    }

    #[test]
    fn default_battery_passes() {
        let cfg = BatteryConfig {
            seeds: (0..3).collect(),
            ..BatteryConfig::default()
        };
        let outcomes = run_battery(&cfg);
        assert_eq!(outcomes.len(), 4);
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }

    #[test]
    fn loose_inner_tolerance_is_detected() {
        let cfg = BatteryConfig {
            seeds: (0..3).collect(),
            inner_tol: 1e-1,
            ..BatteryConfig::default()
        };
        let outcomes = run_battery(&cfg);
        let descent = outcomes
            .iter()
            .find(|o| o.name == "descent-inequality")
            .expect("present");
        assert!(!descent.passed, "expected violations with inner_tol = 1e-1");
    }
}
