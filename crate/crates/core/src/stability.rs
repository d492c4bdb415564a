//! Discretize marginals on dyadic grids, solve each level exactly, and watch
//! energies, flows and cancellations converge to the limit instance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{cancellation_report, gamma_mass};
use crate::error::{check_alpha, Error, Result};
use crate::flow::{induce_flow, EulerFlow};
use crate::geometry::{eps_geom, Point};
use crate::measure::AtomicMeasure;
use crate::optimize::{brute_force_optimal_with, SolverOptions};
use crate::plan::TrafficPlan;
use crate::transport::{flat_distance_bounds, wasserstein1};

/// Snap every atom to the grid of step `radius · 2^{-n}` and merge coincident atoms.
pub fn discretize(mu: &AtomicMeasure, n: u32, radius: f64) -> AtomicMeasure {
    let h = radius * 0.5f64.powi(n as i32);
    AtomicMeasure::from_atoms(
        mu.atoms()
            .iter()
            .map(|(p, w)| (Point::new(p.coords().iter().map(|c| (c / h).round() * h)), *w)),
        mu.is_signed(),
    )
}

/// A pair of points whose quasi-cycle mass is tracked along the sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitoredPair {
    pub x: Point,
    pub y: Point,
    pub eps: f64,
}

fn default_radius() -> f64 {
    1.0
}

fn default_tolerance() -> f64 {
    1e-3
}

/// Input of [`run_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mu_minus: AtomicMeasure,
    pub mu_plus: AtomicMeasure,
    pub levels: Vec<u32>,
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Domain radius R; the grid step at level n is R · 2^{-n}.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Energy gap accepted at the finest level.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Bound on E^α(P_n) + ∫ T∞ dP_n, checked when present.
    #[serde(default)]
    pub uniform_bound: Option<f64>,
    #[serde(default)]
    pub monitored: Vec<MonitoredPair>,
}

impl ExperimentConfig {
    pub fn new(mu_minus: AtomicMeasure, mu_plus: AtomicMeasure, levels: Vec<u32>, alpha: f64) -> Self {
        ExperimentConfig {
            mu_minus,
            mu_plus,
            levels,
            alpha,
            seed: 0,
            radius: default_radius(),
            tolerance: default_tolerance(),
            uniform_bound: None,
            monitored: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig("at least one level is required".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {}", self.radius)));
        }
        let (a, b) = (self.mu_minus.total(), self.mu_plus.total());
        if (a - b).abs() > 1e-12 * a.max(b).max(1.0) {
            return Err(Error::MassMismatch { minus: a, plus: b });
        }
        let eps = eps_geom();
        for (p, _) in self.mu_minus.atoms() {
            if self.mu_plus.atoms().iter().any(|(q, _)| q.dist(p) <= eps) {
                return Err(Error::InvalidConfig(format!(
                    "marginals share the atom {:?}; supports must be disjoint",
                    p.coords()
                )));
            }
        }
        for (p, _) in self.mu_minus.atoms().iter().chain(self.mu_plus.atoms()) {
            if p.norm() > self.radius + eps {
                return Err(Error::OutsideDomain(p.coords().to_vec(), self.radius));
            }
        }
        Ok(())
    }
}

/// Diagnostics at one discretization level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: u32,
    pub energy: f64,
    /// E^α(P_n) − E^α(P_∞).
    pub energy_gap: f64,
    pub flat_upper: f64,
    pub flat_lower: f64,
    pub w1_minus: f64,
    pub w1_plus: f64,
    /// ∫ θ̄ dH¹ of P_n.
    pub theta_bar_integral: f64,
    /// min{P_n(Γ_ε(x,y)), P_n(Γ_ε(y,x))} for every monitored pair.
    pub quasi_cycle_mass: Vec<f64>,
    /// E^α(P_n) + ∫ T∞ dP_n.
    pub energy_plus_time: f64,
}

/// Output of [`run_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub limit_energy: f64,
    pub limit_theta_bar_integral: f64,
    pub levels: Vec<LevelReport>,
    /// max_n |gap_n| · 2^n.
    pub rate_constant: f64,
    pub final_gap: f64,
    /// |final gap| within the configured tolerance.
    pub energies_converge: bool,
    /// Flat-distance upper bounds never increase from one level to the next.
    pub flat_nonincreasing: bool,
    /// θ̄ ≡ 0 for the limit plan and every level.
    pub cancellation_free: bool,
    /// E^α(P_∞) ≤ energy at the finest level + tolerance.
    pub lower_semicontinuous: bool,
    pub max_energy_plus_time: f64,
    pub uniform_bound_holds: bool,
}

struct Solved {
    plan: TrafficPlan,
    energy: f64,
    flow: EulerFlow,
    theta_bar_integral: f64,
}

fn solve(minus: &AtomicMeasure, plus: &AtomicMeasure, alpha: f64, opts: &SolverOptions) -> Result<Solved> {
    let best = brute_force_optimal_with(minus, plus, alpha, opts)?;
    let flow = induce_flow(&best.plan)?;
    let theta_bar_integral = if best.plan.is_empty() {
        0.0
    } else {
        cancellation_report(&best.plan)?.theta_bar_integral
    };
    Ok(Solved {
        plan: best.plan,
        energy: best.energy,
        flow,
        theta_bar_integral,
    })
}

/// Solve the limit instance and every discretized level, and compare.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let opts = SolverOptions {
        seed: cfg.seed,
        ..SolverOptions::default()
    };
    let limit = solve(&cfg.mu_minus, &cfg.mu_plus, cfg.alpha, &opts)?;

    let levels: Vec<LevelReport> = cfg
        .levels
        .par_iter()
        .map(|&n| -> Result<LevelReport> {
            let minus = discretize(&cfg.mu_minus, n, cfg.radius);
            let plus = discretize(&cfg.mu_plus, n, cfg.radius);
            let s = solve(&minus, &plus, cfg.alpha, &opts)?;
            let flat = flat_distance_bounds(&s.flow, &limit.flow)?;
            let quasi_cycle_mass = cfg
                .monitored
                .iter()
                .map(|m| gamma_mass(&s.plan, &m.x, &m.y, m.eps).min(gamma_mass(&s.plan, &m.y, &m.x, m.eps)))
                .collect();
            Ok(LevelReport {
                level: n,
                energy: s.energy,
                energy_gap: s.energy - limit.energy,
                flat_upper: flat.upper,
                flat_lower: flat.lower,
                w1_minus: wasserstein1(&minus, &cfg.mu_minus)?,
                w1_plus: wasserstein1(&plus, &cfg.mu_plus)?,
                theta_bar_integral: s.theta_bar_integral,
                quasi_cycle_mass,
                energy_plus_time: s.energy + s.plan.total_time(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rate_constant = levels
        .iter()
        .map(|l| l.energy_gap.abs() * 2f64.powi(l.level as i32))
        .fold(0.0, f64::max);
    let finest = levels.iter().max_by_key(|l| l.level).expect("levels validated nonempty");
    let final_gap = finest.energy_gap;
    let mut by_level: Vec<&LevelReport> = levels.iter().collect();
    by_level.sort_by_key(|l| l.level);
    let flat_nonincreasing = by_level
        .windows(2)
        .all(|w| w[1].flat_upper <= w[0].flat_upper + 1e-12);
    let cancellation_free =
        limit.theta_bar_integral == 0.0 && levels.iter().all(|l| l.theta_bar_integral == 0.0);
    let max_energy_plus_time = levels.iter().map(|l| l.energy_plus_time).fold(0.0, f64::max);

    Ok(ConvergenceReport {
        limit_energy: limit.energy,
        limit_theta_bar_integral: limit.theta_bar_integral,
        rate_constant,
        final_gap,
        energies_converge: final_gap.abs() <= cfg.tolerance,
        flat_nonincreasing,
        cancellation_free,
        lower_semicontinuous: limit.energy <= finest.energy + cfg.tolerance,
        uniform_bound_holds: cfg.uniform_bound.is_none_or(|b| max_energy_plus_time <= b),
        max_energy_plus_time,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::xy(x, y)
    }

    #[test]
    fn discretize_examples() {
        let on_grid = AtomicMeasure::from_atoms([(p(0.25, -0.5), 1.0)], false);
        assert_eq!(discretize(&on_grid, 2, 1.0), on_grid);
        let third = AtomicMeasure::from_atoms([(p(1.0 / 3.0, 0.0), 0.7)], false);
        let d = discretize(&third, 2, 1.0);
        assert_eq!(d.atoms(), &[(p(0.25, 0.0), 0.7)]);
        for n in [4u32, 8, 12] {
            let h = 0.5f64.powi(n as i32);
            let d = discretize(&third, n, 1.0);
            let w = wasserstein1(&d, &third).unwrap();
            assert!(w <= 2f64.sqrt() * h * 0.7 + 1e-15);
        }
    }

    #[test]
    fn single_pair_converges() {
        let minus = AtomicMeasure::from_atoms([(p(-0.3, 0.1), 1.0)], false);
        let plus = AtomicMeasure::from_atoms([(p(0.4, 1.0 / 3.0), 1.0)], false);
        let cfg = ExperimentConfig::new(minus, plus, vec![4, 8, 12], 0.5);
        let r = run_experiment(&cfg).unwrap();
        let exact = p(-0.3, 0.1).dist(&p(0.4, 1.0 / 3.0));
        assert!((r.limit_energy - exact).abs() < 1e-12);
        assert!(r.energies_converge && r.cancellation_free);
        for l in &r.levels {
            assert!(l.energy_gap.abs() <= 2f64.sqrt() * 0.5f64.powi(l.level as i32) + 1e-12);
        }
    }

    #[test]
    fn rejects_overlapping_supports() {
        let mu = AtomicMeasure::from_atoms([(p(0.0, 0.0), 1.0)], false);
        let cfg = ExperimentConfig::new(mu.clone(), mu, vec![2], 0.5);
        assert!(matches!(run_experiment(&cfg), Err(Error::InvalidConfig(_))));
    }
}
