use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rrdt_bench::experiment::{run_experiment, write_outputs, ExperimentSpec};
use rrdt_bench::metrics::{fmt_sig, read_metrics};
use rrdt_bench::summary::{summarize, write_summary};
use rrdt_bench::{render_svg, run_scenario, BenchError, PlanOptions};
use rrdt_core::planners::PlannerKind;

#[derive(Parser)]
#[command(name = "rrdt", version, about = "Sampling-based motion planning runs and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its metrics.
    Plan {
        /// Scenario file (`key = value` lines).
        scenario: PathBuf,
        /// rrdt_star, rrt_star, birrt_star, informed_rrt_star or prm_star.
        #[arg(long)]
        planner: Option<PlannerKind>,
        /// Replaces the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write an SVG of the final forest and path.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// `key=value` scenario setting, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run every planner × pair × repetition of an experiment file.
    Bench {
        /// Experiment file (`key = value` lines).
        experiment: PathBuf,
        /// Worker threads; outputs do not depend on this.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory, replacing the file's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print mean ± 2σ per planner and map for a metrics file.
    Summarize {
        /// A metrics.csv written by `bench`.
        metrics: PathBuf,
    },
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Plan {
            scenario,
            planner,
            seed,
            svg,
            overrides,
        } => {
            let opts = PlanOptions { planner, seed, overrides };
            let (sc, env, result) = run_scenario(&scenario, &opts)?;
            let s = &result.stats;
            println!("planner: {}", result.planner);
            println!("seed: {}", result.rng_seed);
            println!("nodes: {}", s.nodes_added);
            println!("iterations: {}{}", s.iterations, if s.capped { " (capped)" } else { "" });
            if result.planner == PlannerKind::PrmStar {
                println!("failed_connections: NA");
            } else {
                println!("failed_connections: {}", s.failed_connections);
            }
            println!("points_in_cobs: {}", s.samples_in_obstacle);
            println!("total_sampled: {}", s.total_sampled());
            println!("first_solution_node: {}", opt(s.first_solution_node));
            println!("final_cost: {}", s.best_cost.map_or_else(|| "NA".into(), |c| fmt_sig(c, 6)));
            println!("trees_created: {}", s.trees_created);
            if let Some(p) = &result.path {
                println!("waypoints: {}", p.waypoints.len());
            }
            if let Some(out) = svg {
                match render_svg(&env, &result.graph, result.path.as_ref(), &result.graph.arms) {
                    Ok(doc) => std::fs::write(&out, doc).map_err(|e| BenchError::Io(out.display().to_string(), e))?,
                    Err(e) => eprintln!("skipping render of {}: {e}", sc.map_path.display()),
                }
            }
        }
        Command::Bench { experiment, jobs, out } => {
            let spec = ExperimentSpec::load(&experiment)?;
            let dir = out
                .or_else(|| spec.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("bench_out"));
            let exp = run_experiment(&spec, jobs)?;
            for (i, why) in &exp.skipped {
                eprintln!("skipped pair {i}: {why}");
            }
            for run in exp.runs.iter().filter(|r| r.error.is_some()) {
                eprintln!("{} failed: {}", run.id, run.error.as_deref().unwrap_or(""));
            }
            write_outputs(&dir, &exp)?;
            print!("{}", std::fs::read_to_string(dir.join("summary.csv")).unwrap_or_default());
            eprintln!("{} runs written to {}", exp.runs.len(), dir.display());
        }
        Command::Summarize { metrics } => {
            let text =
                std::fs::read_to_string(&metrics).map_err(|e| BenchError::Io(metrics.display().to_string(), e))?;
            print!("{}", write_summary(&summarize(&read_metrics(&text)?)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
