use clap::{Parser, Subcommand};
use dirac_bench::corpus::run_corpus;
use dirac_bench::runner::{
    build_bundle, build_torus_geometry, load_scenario, run_scenario_file, RunConfig, EXIT_BOUND,
    EXIT_PASS, EXIT_SCHEMA, EXIT_SOLVER,
};
use dirac_bench::transversality::{sampled_verdict, summary_verdict};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical workbench for weighted estimates on Dolbeault-Dirac operators.
///
/// Thread count for the parallel build is controlled by the
/// `RAYON_NUM_THREADS` environment variable; results are identical at any
/// thread count.
#[derive(Parser)]
#[command(name = "dirac-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write its report files.
    ///
    /// Exit code 0 when every task passes, 1 when a verified bound or
    /// construction fails, 2 for unreadable or invalid scenarios, 3 when
    /// an iterative solver cannot reach its tolerance.
    Run {
        /// Scenario description (JSON).
        scenario: PathBuf,
        /// Override the scenario's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report files (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the absolute tolerance used by bound checks.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Evaluate the transversality criterion and print the verdict as JSON.
    ///
    /// Either give the topological data directly (--c1, --genus, optional
    /// --rank) or point at a scenario file whose geometry and bundle are
    /// sampled numerically.
    Transversality {
        /// First Chern number of the bundle.
        #[arg(long, allow_hyphen_values = true)]
        c1: Option<i64>,
        /// Bundle rank (the criterion is decisive only for rank 1).
        #[arg(long, default_value_t = 1)]
        rank: usize,
        /// Genus of the surface.
        #[arg(long)]
        genus: Option<i64>,
        /// Scenario file to sample instead of using --c1/--genus.
        #[arg(long, conflicts_with_all = ["c1", "genus"])]
        scenario: Option<PathBuf>,
    },
    /// Run the randomized inequality corpus and write corpus-report.json.
    ///
    /// Exit code 0 when every instance passes, 1 when any check fails,
    /// 3 when a solver breaks down.
    Corpus {
        /// Number of random instances.
        #[arg(long, default_value_t = 50)]
        count: u64,
        /// Base seed for the instance stream.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Random sections drawn per instance for the inequality checks.
        #[arg(long, default_value_t = 6)]
        sections: usize,
        /// Directory for the report file (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn transversality_cmd(
    c1: Option<i64>,
    rank: usize,
    genus: Option<i64>,
    scenario: Option<PathBuf>,
) -> i32 {
    let verdict = if let Some(path) = scenario {
        let s = match load_scenario(&path) {
            Ok(s) => s,
            Err(msg) => {
                eprintln!("error: {msg}");
                return EXIT_SCHEMA;
            }
        };
        let use_summary = s
            .transversality
            .as_ref()
            .is_some_and(|t| !t.sampled && t.c1.is_some() && t.genus.is_some());
        if use_summary {
            let t = s.transversality.as_ref().expect("checked above");
            summary_verdict(t.c1.expect("checked above"), t.rank, t.genus.expect("checked above"))
        } else {
            let Some(tb) = &s.geometry.torus else {
                eprintln!("error: sampled transversality needs a torus geometry");
                return EXIT_SCHEMA;
            };
            let Some(bb) = &s.bundle else {
                eprintln!("error: sampled transversality needs a bundle block");
                return EXIT_SCHEMA;
            };
            let geom = match build_torus_geometry(tb, s.seed) {
                Ok(g) => g,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_SOLVER;
                }
            };
            let bundle = match build_bundle(&geom, bb, s.seed) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_SOLVER;
                }
            };
            match sampled_verdict(&geom, &bundle) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_SOLVER;
                }
            }
        }
    } else {
        let (Some(c1), Some(genus)) = (c1, genus) else {
            eprintln!("error: give both --c1 and --genus, or --scenario");
            return EXIT_SCHEMA;
        };
        summary_verdict(c1, rank, genus)
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&verdict).expect("verdict serialization")
    );
    EXIT_PASS
}

fn corpus_cmd(count: u64, seed: u64, grid: usize, sections: usize, out: Option<PathBuf>) -> i32 {
    let report = match run_corpus(count, seed, grid, sections) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create output directory: {e}");
        return EXIT_SCHEMA;
    }
    let path = dir.join("corpus-report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serialization") + "\n";
    if let Err(e) = std::fs::write(&path, text) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return EXIT_SCHEMA;
    }
    println!(
        "{}: {} instances, {} sections checked, worst slack ratio {:.3e} ({})",
        if report.pass { "pass" } else { "FAIL" },
        report.count,
        report.sections_checked,
        report.worst_slack_ratio,
        path.display()
    );
    if report.pass {
        EXIT_PASS
    } else {
        EXIT_BOUND
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            tol,
        } => {
            let cfg = RunConfig {
                out_dir: out.unwrap_or_else(|| PathBuf::from(".")),
                seed_override: seed,
                tol_override: tol,
            };
            run_scenario_file(&scenario, &cfg)
        }
        Command::Transversality {
            c1,
            rank,
            genus,
            scenario,
        } => transversality_cmd(c1, rank, genus, scenario),
        Command::Corpus {
            count,
            seed,
            grid,
            sections,
            out,
        } => corpus_cmd(count, seed, grid, sections, out),
    };
    ExitCode::from(code as u8)
}
