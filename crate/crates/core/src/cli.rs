//! Command-line frontend.
//!
//! Exit codes: 0 solved / verified clean, 2 infeasible, 3 verification
//! found violations, 1 usage or I/O error. All output is deterministic
//! for fixed inputs, seeds, and flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::distance::build_distance_matrix;
use crate::export::{export_path, export_placement, export_schedule};
use crate::generate::{generate_instance, pick_depot, GenParams, InstanceKind};
use crate::grid::{parse_instance, render_instance, GridInstance};
use crate::io::{
    is_infeasible_json, path_from_json, path_to_json, placement_from_json, placement_to_json,
    schedule_from_json, schedule_to_json,
};
use crate::path::{solve_shortest_path, PathProblem};
use crate::placement::{solve_placement, PlacementProblem, DEFAULT_MAX_STATIONS};
use crate::render::{render_instance_image, render_path, render_placement, render_schedule, RenderSpec};
use crate::schedule::{solve_schedule, PickupPolicy, ScheduleProblem};
use crate::verify::{schedule_report, verify_path, verify_placement, verify_schedule, Violation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VIOLATIONS: i32 = 3;

#[derive(Parser)]
#[command(
    name = "dronegrid",
    version,
    about = "Exact drone-logistics optimization on 2D obstacle grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Placement,
    Path,
    Schedule,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// Restock at any warehouse.
    Any,
    /// Restock only at the start warehouse.
    Own,
}

impl From<PolicyArg> for PickupPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Any => PickupPolicy::AnyWarehouse,
            PolicyArg::Own => PickupPolicy::OwnWarehouse,
        }
    }
}

#[derive(Args)]
struct ScheduleOpts {
    /// Number of timesteps after the start instant.
    #[arg(long, default_value_t = 14)]
    horizon: usize,
    /// Drone count; defaults to one per warehouse.
    #[arg(long)]
    drones: Option<usize>,
    #[arg(long, value_enum, default_value_t = PolicyArg::Any)]
    policy: PolicyArg,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        cols: usize,
        /// Obstacle fraction, at most 0.5.
        #[arg(long, default_value_t = 0.15)]
        density: f64,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Station count (path instances).
        #[arg(long, default_value_t = 4)]
        stations: usize,
        /// Warehouse count (schedule instances).
        #[arg(long, default_value_t = 2)]
        warehouses: usize,
        /// Delivery-site count (schedule instances).
        #[arg(long, default_value_t = 3)]
        deliveries: usize,
        /// Comma-separated per-site demands, e.g. 2,1,1.
        #[arg(long, value_delimiter = ',')]
        demands: Option<Vec<u32>>,
        /// Demand bound when --demands is absent.
        #[arg(long, default_value_t = 2)]
        max_demand: u32,
        /// Single-charge travel distance.
        #[arg(long)]
        d_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve station placement for an instance.
    Place {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Depot seed when the instance fixes no depot.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STATIONS)]
        max_stations: usize,
    },
    /// Solve the battery-constrained shortest path.
    Route {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve multi-drone delivery scheduling.
    Schedule {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: ScheduleOpts,
    },
    /// Export a formulation as LP text.
    ExportLp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STATIONS)]
        max_stations: usize,
        #[command(flatten)]
        opts: ScheduleOpts,
    },
    /// Check a solution file against an instance.
    Verify {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sol: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Any)]
        policy: PolicyArg,
        #[arg(long)]
        drones: Option<usize>,
    },
    /// Draw an instance or a solution as portable pixmaps.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sol: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        cell_px: usize,
        #[arg(long, default_value_t = false)]
        legend: bool,
    },
}

/// Run the CLI on the given arguments (without the program name) and
/// return the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = std::iter::once("dronegrid".to_string())
        .chain(args.into_iter().map(Into::into))
        .collect();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful exits.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load_instance(path: &Path) -> Result<GridInstance, String> {
    let text = read_to_string(path)?;
    parse_instance(&text).map_err(|e| e.to_string())
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn depot_for(g: &GridInstance, seed: u64) -> Result<(crate::grid::CellCoord, u64), String> {
    match g.depot {
        Some(d) => Ok((d, 0)),
        None => pick_depot(g, seed)
            .map(|d| (d, seed))
            .ok_or_else(|| "instance has no traversable cell for a depot".to_string()),
    }
}

fn print_violations(violations: &[Violation]) {
    println!(
        "{}",
        serde_json::to_string_pretty(violations).expect("violations serialize")
    );
}

fn dispatch(cmd: Command) -> Result<i32, String> {
    match cmd {
        Command::Gen {
            seed,
            rows,
            cols,
            density,
            kind,
            stations,
            warehouses,
            deliveries,
            demands,
            max_demand,
            d_max,
            out,
        } => {
            let mut params = GenParams::new(
                match kind {
                    KindArg::Placement => InstanceKind::Placement,
                    KindArg::Path => InstanceKind::Path,
                    KindArg::Schedule => InstanceKind::Schedule,
                },
                seed,
                rows,
                cols,
                density,
            );
            params.stations = stations;
            params.warehouses = warehouses;
            params.deliveries = deliveries;
            params.demands = demands;
            params.max_demand = max_demand;
            if let Some(d) = d_max {
                params.d_max = d;
            }
            let g = generate_instance(&params).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &render_instance(&g))?;
            Ok(EXIT_OK)
        }
        Command::Place { input, out, seed, max_stations } => {
            let g = load_instance(&input)?;
            let dist = build_distance_matrix(&g);
            let (depot, used_seed) = depot_for(&g, seed)?;
            let mut problem =
                PlacementProblem::new(&g, &dist, depot).map_err(|e| e.to_string())?;
            problem.max_stations = max_stations;
            problem.depot_seed = used_seed;
            let outcome = solve_placement(&problem).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &placement_to_json(&outcome))?;
            Ok(if outcome.is_infeasible() { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::Route { input, out } => {
            let g = load_instance(&input)?;
            let dist = build_distance_matrix(&g);
            let problem = PathProblem::new(&g, &dist).map_err(|e| e.to_string())?;
            let outcome = solve_shortest_path(&problem).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &path_to_json(&outcome))?;
            Ok(if outcome.is_infeasible() { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::Schedule { input, out, opts } => {
            let g = load_instance(&input)?;
            let drones = opts.drones.unwrap_or(g.warehouses.len());
            let problem = ScheduleProblem::new(&g, drones, opts.horizon, opts.policy.into())
                .map_err(|e| e.to_string())?;
            let outcome = solve_schedule(&problem).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &schedule_to_json(&outcome))?;
            Ok(if outcome.is_infeasible() { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::ExportLp { input, kind, out, seed, max_stations, opts } => {
            let g = load_instance(&input)?;
            let text = match kind {
                KindArg::Placement => {
                    let dist = build_distance_matrix(&g);
                    let (depot, used_seed) = depot_for(&g, seed)?;
                    let mut problem =
                        PlacementProblem::new(&g, &dist, depot).map_err(|e| e.to_string())?;
                    problem.max_stations = max_stations;
                    problem.depot_seed = used_seed;
                    export_placement(&problem).to_lp_text()
                }
                KindArg::Path => {
                    let dist = build_distance_matrix(&g);
                    let problem = PathProblem::new(&g, &dist).map_err(|e| e.to_string())?;
                    export_path(&problem).to_lp_text()
                }
                KindArg::Schedule => {
                    let drones = opts.drones.unwrap_or(g.warehouses.len());
                    let problem =
                        ScheduleProblem::new(&g, drones, opts.horizon, opts.policy.into())
                            .map_err(|e| e.to_string())?;
                    export_schedule(&problem).map_err(|e| e.to_string())?.to_lp_text()
                }
            };
            emit(out.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
        Command::Verify { kind, input, sol, policy, drones } => {
            let g = load_instance(&input)?;
            let sol_text = read_to_string(&sol)?;
            if is_infeasible_json(&sol_text) {
                println!("solution file records infeasibility; nothing to verify");
                return Ok(EXIT_INFEASIBLE);
            }
            let violations = match kind {
                KindArg::Placement => {
                    let outcome = placement_from_json(&sol_text).map_err(|e| e.to_string())?;
                    let sol = outcome.feasible().expect("infeasible handled above");
                    verify_placement(&g, &sol)
                }
                KindArg::Path => {
                    let outcome = path_from_json(&sol_text).map_err(|e| e.to_string())?;
                    let sol = outcome.feasible().expect("infeasible handled above");
                    verify_path(&g, &sol)
                }
                KindArg::Schedule => {
                    let outcome = schedule_from_json(&sol_text).map_err(|e| e.to_string())?;
                    let sol = outcome.feasible().expect("infeasible handled above");
                    let horizon = sol
                        .traces
                        .first()
                        .map(|tr| tr.positions.len().saturating_sub(1))
                        .unwrap_or(1)
                        .max(1);
                    let drones = drones.unwrap_or(sol.traces.len()).max(1);
                    let problem = ScheduleProblem::new(&g, drones, horizon, policy.into())
                        .map_err(|e| e.to_string())?;
                    let violations = verify_schedule(&problem, &sol);
                    let report = schedule_report(&problem, &sol);
                    eprintln!(
                        "supply: effective {} / literal {} for demand {}; fleet ends at warehouses: {}",
                        report.effective_pickups,
                        report.literal_pickups,
                        report.total_demand,
                        report.drones_end_at_warehouses
                    );
                    violations
                }
            };
            if violations.is_empty() {
                println!("[]");
                Ok(EXIT_OK)
            } else {
                print_violations(&violations);
                Ok(EXIT_VIOLATIONS)
            }
        }
        Command::Render { input, sol, out, cell_px, legend } => {
            let g = load_instance(&input)?;
            let spec = RenderSpec { cell_px, legend };
            match sol {
                None => {
                    let ppm = render_instance_image(&g, spec).map_err(|e| e.to_string())?;
                    fs::write(&out, ppm)
                        .map_err(|e| format!("cannot write {}: {e}", out.display()))?;
                }
                Some(sol_path) => {
                    let text = read_to_string(&sol_path)?;
                    if is_infeasible_json(&text) {
                        return Err("cannot render an infeasible solution".to_string());
                    }
                    let images = detect_and_render(&g, &text, spec)?;
                    write_frames(&out, images)?;
                }
            }
            Ok(EXIT_OK)
        }
    }
}

/// Figure out which solution schema the file uses and render it.
fn detect_and_render(
    g: &GridInstance,
    sol_text: &str,
    spec: RenderSpec,
) -> Result<Vec<(String, Vec<u8>)>, String> {
    let value: serde_json::Value =
        serde_json::from_str(sol_text).map_err(|e| format!("solution JSON: {e}"))?;
    let keys = value.as_object().ok_or("solution JSON must be an object")?;
    if keys.contains_key("stations") {
        let sol = placement_from_json(sol_text)
            .map_err(|e| e.to_string())?
            .feasible()
            .ok_or("unexpected infeasible marker")?;
        let ppm = render_placement(g, &sol, spec).map_err(|e| e.to_string())?;
        Ok(vec![(String::new(), ppm)])
    } else if keys.contains_key("path") {
        let sol = path_from_json(sol_text)
            .map_err(|e| e.to_string())?
            .feasible()
            .ok_or("unexpected infeasible marker")?;
        let ppm = render_path(g, &sol, spec).map_err(|e| e.to_string())?;
        Ok(vec![(String::new(), ppm)])
    } else if keys.contains_key("traces") {
        let sol = schedule_from_json(sol_text)
            .map_err(|e| e.to_string())?
            .feasible()
            .ok_or("unexpected infeasible marker")?;
        let frames = render_schedule(g, &sol, spec).map_err(|e| e.to_string())?;
        Ok(frames.into_iter().map(|f| (f.label, f.ppm)).collect())
    } else {
        Err("solution file matches no known schema".to_string())
    }
}

/// Write one image to `out`, or a family `stem_label.ext` for schedules.
fn write_frames(out: &Path, images: Vec<(String, Vec<u8>)>) -> Result<(), String> {
    if images.len() == 1 && images[0].0.is_empty() {
        return fs::write(out, &images[0].1)
            .map_err(|e| format!("cannot write {}: {e}", out.display()));
    }
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or("output path needs a file name")?;
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("ppm");
    let dir = out.parent().unwrap_or_else(|| Path::new("."));
    for (label, bytes) in images {
        let path = dir.join(format!("{stem}_{label}.{ext}"));
        fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}
