use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brancho::cycles::{find_lagrangian_cycles, remove_quasi_cycle, ShortcutResult};
use brancho::flow::{check_good_decomposition, induce_flow};
use brancho::geometry::set_eps_geom;
use brancho::io::{Marginals, PlanJson};
use brancho::optimize::{brute_force_optimal_with, local_improve, SolverOptions};
use brancho::slicing::{slice, slice_mass_profile};
use brancho::stability::{run_experiment, ConvergenceReport, ExperimentConfig};
use brancho::{Error, Point, SliceFunction, TrafficPlan};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "brancho", version, about = "Branched transport on polygonal traffic plans")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunConfig {
    /// Reject inputs with a vertex outside the ball of this radius.
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Override the geometric snapping tolerance.
    #[arg(long, global = true)]
    eps_geom: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write every output into this directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AlphaArg {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the α-energy of a plan.
    Energy {
        #[command(flatten)]
        alpha: AlphaArg,
        plan: PathBuf,
    },
    /// Print the flow induced by a plan.
    Induce { plan: PathBuf },
    /// Check the three good-decomposition conditions.
    CheckGood { plan: PathBuf },
    /// Slice a plan by a distance or affine function.
    Slice {
        plan: PathBuf,
        /// Slice by distance to this point (x,y,...).
        #[arg(long, value_parser = parse_point, conflicts_with = "normal")]
        center: Option<Point>,
        /// Slice by z ↦ normal·z + offset.
        #[arg(long, value_parser = parse_point, requires = "offset")]
        normal: Option<Point>,
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        level: f64,
        /// Tabulate M^α of the slice over [FROM, TO] as CSV.
        #[arg(long, num_args = 2, value_names = ["FROM", "TO"], allow_hyphen_values = true)]
        profile: Option<Vec<f64>>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        alpha: AlphaArg,
    },
    /// List Lagrangian cycles with their strengths.
    FindCycles {
        plan: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        min_strength: f64,
    },
    /// Shortcut the quasi-cycle between two points and certify the energy bound.
    RemoveCycle {
        plan: PathBuf,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x: Point,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        y: Point,
        #[arg(long)]
        eps0: f64,
        #[command(flatten)]
        alpha: AlphaArg,
    },
    /// Find an optimal plan between small atomic marginals.
    Optimize {
        marginals: PathBuf,
        #[command(flatten)]
        alpha: AlphaArg,
        /// Rounds of cycle removal applied to the result.
        #[arg(long, default_value_t = 0)]
        improve_rounds: usize,
    },
    /// Run a discretization experiment.
    Stability {
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> Result<Point, String> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("bad coordinate {c:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if coords.is_empty() {
        return Err("empty point".into());
    }
    Ok(Point::new(coords))
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

/// Write to stdout, ignoring a closed pipe.
fn print_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

struct Context {
    radius: Option<f64>,
    out_dir: Option<PathBuf>,
}

impl Context {
    fn read_plan(&self, path: &Path) -> Result<TrafficPlan, Failure> {
        let plan = TrafficPlan::try_from(read_json::<PlanJson>(path)?)?;
        if let Some(r) = self.radius {
            plan.check_domain(r)?;
        }
        Ok(plan)
    }

    fn write_file(&self, name: &str, contents: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.out_dir {
            fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Print `value` to stdout and mirror it to `name` in the output directory.
    fn emit<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
        print_stdout(&text);
        self.write_file(name, &text)
    }

    fn emit_csv(&self, name: &str, explicit: Option<&Path>, contents: &str) -> Result<(), Failure> {
        if let Some(path) = explicit {
            fs::write(path, contents).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        self.write_file(name, contents)
    }
}

#[derive(Serialize)]
struct Certificate {
    chosen_eps: f64,
    m: f64,
    m_x: f64,
    m_y: f64,
    family_mass: [f64; 4],
    removed_length: [f64; 2],
    energy_before: f64,
    residual_energy: f64,
    ball_energy: [f64; 2],
    slice_mass: [f64; 2],
    bound_rhs: f64,
    sharp_rhs: f64,
    achieved: f64,
    certificate: bool,
    boundary_error: f64,
}

impl From<&ShortcutResult> for Certificate {
    fn from(r: &ShortcutResult) -> Self {
        Certificate {
            chosen_eps: r.chosen_eps,
            m: r.m,
            m_x: r.m_x,
            m_y: r.m_y,
            family_mass: r.family_mass,
            removed_length: r.removed_length,
            energy_before: r.energy_before,
            residual_energy: r.residual_energy,
            ball_energy: r.ball_energy,
            slice_mass: r.slice_mass,
            bound_rhs: r.bound_rhs,
            sharp_rhs: r.sharp_rhs,
            achieved: r.achieved,
            certificate: r.certificate,
            boundary_error: r.boundary_error,
        }
    }
}

fn stability_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("level,energy,energy_gap,flat_upper,flat_lower,w1_minus,w1_plus\n");
    for l in &report.levels {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            l.level, l.energy, l.energy_gap, l.flat_upper, l.flat_lower, l.w1_minus, l.w1_plus
        )
        .unwrap();
    }
    out
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(eps) = cli.run.eps_geom {
        set_eps_geom(eps)?;
    }
    if let Some(r) = cli.run.radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Failure::Usage(format!("--radius must be positive, got {r}")));
        }
    }
    let ctx = Context {
        radius: cli.run.radius,
        out_dir: cli.run.out_dir,
    };
    match cli.command {
        Command::Energy { alpha, plan } => {
            let plan = ctx.read_plan(&plan)?;
            ctx.emit("energy.json", &json!({ "energy": plan.alpha_energy(alpha.alpha)? }))
        }
        Command::Induce { plan } => {
            let plan = ctx.read_plan(&plan)?;
            ctx.emit("flow.json", &induce_flow(&plan)?)
        }
        Command::CheckGood { plan } => {
            let plan = ctx.read_plan(&plan)?;
            ctx.emit("check_good.json", &check_good_decomposition(&plan)?)
        }
        Command::Slice {
            plan,
            center,
            normal,
            offset,
            level,
            profile,
            csv,
            alpha,
        } => {
            let plan = ctx.read_plan(&plan)?;
            let f = match (center, normal) {
                (Some(c), None) => SliceFunction::distance(c),
                (None, Some(n)) => SliceFunction::affine(n, offset.unwrap_or(0.0))?,
                _ => return Err(Failure::Usage("give exactly one of --center or --normal".into())),
            };
            let result = slice(&plan, &f, level)?;
            if let Some(range) = profile {
                let pieces = slice_mass_profile(&plan, &f, range[0], range[1], alpha.alpha)?;
                let mut out = String::from("level,mass\n");
                for p in &pieces {
                    // + 0.0 turns -0 into 0.
                    let v = p.value + 0.0;
                    writeln!(out, "{},{v}\n{},{v}", p.lo, p.hi).unwrap();
                }
                ctx.emit_csv("slice_profile.csv", csv.as_deref(), &out)?;
            }
            ctx.emit("slice.json", &result)
        }
        Command::FindCycles { plan, min_strength } => {
            let plan = ctx.read_plan(&plan)?;
            ctx.emit("cycles.json", &find_lagrangian_cycles(&plan, min_strength)?)
        }
        Command::RemoveCycle {
            plan,
            x,
            y,
            eps0,
            alpha,
        } => {
            let plan = ctx.read_plan(&plan)?;
            let r = remove_quasi_cycle(&plan, &x, &y, eps0, alpha.alpha)?;
            let cert = Certificate::from(&r);
            if ctx.out_dir.is_some() {
                let flow = serde_json::to_string_pretty(&r.flow).expect("flows serialize");
                ctx.write_file("flow.json", &(flow + "\n"))?;
                let c = serde_json::to_string_pretty(&cert).expect("reports serialize");
                ctx.write_file("certificate.json", &(c + "\n"))?;
            }
            let both = json!({ "flow": r.flow, "certificate": cert });
            print_stdout(&(serde_json::to_string_pretty(&both).expect("reports serialize") + "\n"));
            Ok(())
        }
        Command::Optimize {
            marginals,
            alpha,
            improve_rounds,
        } => {
            let m: Marginals = read_json(&marginals)?;
            let opts = SolverOptions {
                seed: cli.run.seed,
                ..SolverOptions::default()
            };
            let best = brute_force_optimal_with(&m.mu_minus, &m.mu_plus, alpha.alpha, &opts)?;
            let (plan, energy) = if improve_rounds > 0 {
                let imp = local_improve(&best.plan, alpha.alpha, improve_rounds)?;
                let e = *imp.energies.last().expect("initial energy recorded");
                (imp.plan, e)
            } else {
                (best.plan.clone(), best.energy)
            };
            if ctx.out_dir.is_some() {
                let p = serde_json::to_string_pretty(&plan).expect("plans serialize");
                ctx.write_file("plan.json", &(p + "\n"))?;
            }
            ctx.emit(
                "optimize.json",
                &json!({
                    "plan": plan,
                    "energy": energy,
                    "topology": best.topology,
                    "topologies_searched": best.topologies_searched,
                }),
            )
        }
        Command::Stability { config, csv } => {
            let mut cfg: ExperimentConfig = read_json(&config)?;
            if let Some(r) = ctx.radius {
                cfg.radius = r;
            }
            let report = run_experiment(&cfg)?;
            ctx.emit_csv("stability.csv", csv.as_deref(), &stability_csv(&report))?;
            ctx.emit("stability.json", &report)
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("BRANCHO_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", json!({ "error": "Usage", "message": msg }));
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
