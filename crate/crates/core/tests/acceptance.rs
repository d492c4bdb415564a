//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use brancho::cycles::remove_quasi_cycle;
use brancho::flow::{check_good_decomposition, induce_flow};
use brancho::geometry::proper_crossing;
use brancho::optimize::{brute_force_optimal, local_improve};
use brancho::plan::Region;
use brancho::slicing::{check_slice_bounds, slice};
use brancho::stability::{run_experiment, ExperimentConfig};
use brancho::{AtomicMeasure, Error, PolyCurve, SliceFunction, TrafficPlan};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

/// 200 injected quasi-cycles: certificate holds and the boundary is exact.
fn shortcut_certificates() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let (mut certified, mut exact, mut errors) = (0, 0, Vec::new());
    let mut worst_excess = f64::NEG_INFINITY;
    for case in 0..200 {
        let c = injected_cycle(&mut rng);
        let alpha = rng.gen_range(0.1..1.0);
        match remove_quasi_cycle(&c.plan, &c.x, &c.y, c.eps0, alpha) {
            Ok(r) => {
                worst_excess = worst_excess.max(r.achieved - r.bound_rhs);
                certified += usize::from(r.certificate);
                let (minus, plus) = c.plan.marginals();
                let drift = r.flow.boundary().max_abs_difference(&plus.sub(&minus));
                exact += usize::from(drift <= 1e-9);
            }
            Err(e) => errors.push(format!("case {case}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let pass = certified == 200 && exact == 200 && within(elapsed, 60);
    outcome(
        pass,
        format!(
            "certified {certified}/200, exact boundary {exact}/200, max(achieved - bound) = {worst_excess:.3e}, \
             errors {:?}, {:.2?}",
            errors.iter().take(3).collect::<Vec<_>>(),
            elapsed
        ),
    )
}

/// 100 random plans: |θ⃗| ≤ Θ edgewise; E^α = M^α whenever A and B hold;
/// strict gap on the head-on fixture.
fn cancellation_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let (mut dominance_violations, mut identity_checked, mut identity_failures) = (0, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let plan = random_overlapping_plan(&mut rng);
        let alpha = rng.gen_range(0.1..1.0);
        let net = plan.network().unwrap();
        dominance_violations += net.edges().iter().filter(|e| e.theta_vec.abs() > e.full_theta).count();
        let good = check_good_decomposition(&plan).unwrap();
        if good.a_holds && good.b_holds {
            identity_checked += 1;
            let e = plan.alpha_energy(alpha).unwrap();
            let m = induce_flow(&plan).unwrap().alpha_mass(alpha, &Region::Full).unwrap();
            worst = worst.max((e - m).abs());
            identity_failures += usize::from((e - m).abs() > 1e-9);
        }
    }
    let head_on = plan(vec![(0.5, vec![p(0.0, 0.0), p(1.0, 0.0)]), (0.5, vec![p(1.0, 0.0), p(0.0, 0.0)])]);
    let e = head_on.alpha_energy(0.5).unwrap();
    let m = induce_flow(&head_on).unwrap().alpha_mass(0.5, &Region::Full).unwrap();
    let pass = dominance_violations == 0 && identity_failures == 0 && identity_checked > 0 && e - m > 0.0;
    outcome(
        pass,
        format!(
            "dominance violations {dominance_violations}, identity checked on {identity_checked}/100 with \
             max |E - M| = {worst:.3e}, head-on gap {:.6}",
            e - m
        ),
    )
}

fn random_slice_function(rng: &mut ChaCha8Rng) -> SliceFunction {
    if rng.gen_bool(0.5) {
        SliceFunction::distance(random_point(rng, 2.0))
    } else {
        let scale = rng.gen_range(0.5..2.0);
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        SliceFunction::affine(p(scale * a.cos(), scale * a.sin()), rng.gen_range(-1.0..1.0)).unwrap()
    }
}

fn measure_above(mu: &AtomicMeasure, f: &SliceFunction, level: f64) -> f64 {
    mu.atoms().iter().filter(|(q, _)| f.eval(q) > level).map(|(_, w)| w).sum()
}

/// Slice-energy inequalities on 100 random (plan, slab) pairs, and the flux
/// identity at 10 generic levels per pair.
fn slicing_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let (mut bound_failures, mut flux_failures) = (0, 0);
    let mut worst_flux = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let atoms = (0..n)
            .map(|_| (rng.gen_range(0.1..1.0), random_polyline(&mut rng, 5, 2.0)))
            .collect();
        let plan = TrafficPlan::from_polylines::<Vec<_>, _>(atoms).unwrap();
        let f = random_slice_function(&mut rng);
        let values: Vec<f64> = plan
            .atoms()
            .iter()
            .flat_map(|a| a.curve.vertices().iter().map(|v| f.eval(v)).collect::<Vec<_>>())
            .collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let u: f64 = rng.gen_range(0.0..1.0);
        let v = rng.gen_range(0.0..1.0);
        let (a, b) = (lo + (hi - lo) * u.min(v), lo + (hi - lo) * u.max(v));
        for alpha in [1.0, rng.gen_range(0.1..1.0)] {
            let r = check_slice_bounds(&plan, &f, a, b, alpha, 0).unwrap();
            bound_failures += usize::from(r.lhs > r.rhs + 1e-9);
        }
        let (minus, plus) = plan.marginals();
        let mut done = 0;
        while done < 10 {
            let level = rng.gen_range(lo..hi.max(lo + 1e-9));
            let s = match slice(&plan, &f, level) {
                Ok(s) => s,
                Err(Error::NonGenericLevel { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let expected = measure_above(&plus, &f, level) - measure_above(&minus, &f, level);
            let gap = (s.slice.total() - expected).abs();
            worst_flux = worst_flux.max(gap);
            flux_failures += usize::from(gap > 1e-12);
            done += 1;
        }
    }
    outcome(
        bound_failures == 0 && flux_failures == 0,
        format!(
            "slice bound failures {bound_failures}/200, flux failures {flux_failures}/1000 (max gap {worst_flux:.1e})"
        ),
    )
}

/// Y energy with branch point `b`, sources of mass 1/2.
fn y_energy(b: (f64, f64), s: &[(f64, f64); 2], t: (f64, f64), alpha: f64) -> f64 {
    let d = |u: (f64, f64), v: (f64, f64)| ((u.0 - v.0).powi(2) + (u.1 - v.1).powi(2)).sqrt();
    0.5f64.powf(alpha) * (d(b, s[0]) + d(b, s[1])) + d(b, t)
}

/// Grid search over branch points: a 400×400 grid, then a 400×400 grid over
/// the best cell's neighbourhood. Terminals are tried as branch points too.
fn grid_oracle(s: &[(f64, f64); 2], t: (f64, f64), alpha: f64) -> f64 {
    let xs = [s[0].0, s[1].0, t.0];
    let ys = [s[0].1, s[1].1, t.1];
    let mut x0 = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut x1 = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut y0 = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut y1 = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut best = [s[0], s[1], t]
        .iter()
        .map(|&q| (y_energy(q, s, t, alpha), q))
        .fold((f64::INFINITY, (0.0, 0.0)), |a, b| if b.0 < a.0 { b } else { a });
    for _ in 0..2 {
        let (hx, hy) = ((x1 - x0) / 399.0, (y1 - y0) / 399.0);
        for i in 0..400 {
            for j in 0..400 {
                let q = (x0 + i as f64 * hx, y0 + j as f64 * hy);
                let e = y_energy(q, s, t, alpha);
                if e < best.0 {
                    best = (e, q);
                }
            }
        }
        (x0, x1, y0, y1) = (best.1 .0 - 2.0 * hx, best.1 .0 + 2.0 * hx, best.1 .1 - 2.0 * hy, best.1 .1 + 2.0 * hy);
    }
    best.0
}

fn y_marginals() -> (AtomicMeasure, AtomicMeasure) {
    let (sources, sink) = y_instance();
    let minus = AtomicMeasure::from_atoms(sources.iter().map(|q| (q.clone(), 0.5)), false);
    let plus = AtomicMeasure::from_atoms([(sink, 1.0)], false);
    (minus, plus)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (sources, sink) = y_instance();
    let xy = |q: &brancho::Point| (q.coords()[0], q.coords()[1]);
    let s = [xy(&sources[0]), xy(&sources[1])];
    let t = xy(&sink);
    let (minus, plus) = y_marginals();
    let mut details = Vec::new();
    let mut pass = true;
    for alpha in [0.3, 0.5, 0.8] {
        let solver = brute_force_optimal(&minus, &plus, alpha).unwrap().energy;
        let oracle = grid_oracle(&s, t, alpha);
        pass &= (solver - oracle).abs() <= 1e-4;
        details.push(format!("α={alpha}: solver {solver:.9} oracle {oracle:.9}"));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 30);
    outcome(pass, format!("{}, {:.2?}", details.join("; "), elapsed))
}

fn stability_experiment() -> Outcome {
    let start = Instant::now();
    let (minus, plus) = y_marginals();
    let alpha = 0.5;
    let mut cfg = ExperimentConfig::new(minus, plus, (1..=12).collect(), alpha);
    cfg.radius = 2.0;
    let r = run_experiment(&cfg).unwrap();
    // Optimal energy is m^α-Lipschitz in each terminal, and snapping moves a
    // terminal by at most (√2/2)·R·2^{-n}.
    let lipschitz = 2.0 * 0.5f64.powf(alpha) + 1.0;
    let c_bound = lipschitz * std::f64::consts::FRAC_1_SQRT_2 * cfg.radius;
    let gap12 = r.levels.iter().find(|l| l.level == 12).unwrap().energy_gap.abs();
    let elapsed = start.elapsed();
    let pass = r.rate_constant <= c_bound + 1e-9 && gap12 <= 1e-3 && r.cancellation_free && within(elapsed, 120);
    outcome(
        pass,
        format!(
            "measured C = {:.4} (bound {c_bound:.4}), level-12 gap {gap12:.3e}, θ̄ ≡ 0: {}, {:.2?}",
            r.rate_constant, r.cancellation_free, elapsed
        ),
    )
}

fn local_improve_monotone() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, fixture) in [("square", square_cycle()), ("head-on", legged_head_on())] {
        let r = local_improve(&fixture, 0.5, 20).unwrap();
        let strict = r.energies.windows(2).all(|w| w[1] < w[0]);
        let good = check_good_decomposition(&r.plan).unwrap();
        let ok = strict && r.cycle_free && r.rounds > 0 && good.a_holds && good.b_holds && good.c_holds;
        pass &= ok;
        details.push(format!(
            "{name}: {} rounds, energies {:?}, cycle-free {}, A/B/C {}/{}/{}",
            r.rounds,
            r.energies.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>(),
            r.cycle_free,
            good.a_holds,
            good.b_holds,
            good.c_holds
        ));
    }
    outcome(pass, details.join("; "))
}

fn crossing_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let (mut curves, mut checks, mut violations) = (0, 0, 0);
    while curves < 50 {
        let curve = PolyCurve::new(random_polyline(&mut rng, 6, 1.0)).unwrap();
        let t0 = rng.gen_range(0.05..0.95) * curve.length();
        let s = rng.gen_range(0.05..0.95);
        let Ok(res) = proper_crossing(&curve, t0, 1e-3, s) else {
            continue;
        };
        curves += 1;
        for i in 1..=10 {
            let r = res.max_radius * i as f64 / 10.5;
            checks += 1;
            violations += usize::from(!proper_crossing(&curve, t0, r, s).unwrap().proper);
        }
    }
    outcome(violations == 0, format!("{violations} violations in {checks} sub-radius checks on {curves} curves"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 shortcut certificates", shortcut_certificates),
        ("2 cancellation identity", cancellation_identity),
        ("3 slicing inequalities and flux", slicing_suite),
        ("4 oracle equivalence", oracle_equivalence),
        ("5 stability experiment", stability_experiment),
        ("6 local-improve monotonicity", local_improve_monotone),
        ("7 proper-crossing monotonicity", crossing_monotonicity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        failed += usize::from(!o.pass);
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
