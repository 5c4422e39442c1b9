//! `oht` — detect outlying sequences, evaluate the performance theory,
//! solve false-reject exponents, run Monte Carlo experiments, and reproduce
//! the acceptance suite.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oht_cli::io::{
    parse_grid_arg, parse_lambda_arg, parse_set_arg, read_panel, report_csv, ScenarioFile,
    SpecFile,
};
use oht_cli::suite::{run_all, summary_csv, SuiteCfg};
use oht_core::{
    estimate, false_reject_bound, false_reject_exponent, run_test, ExponentOptions, OrthantCfg,
    Scenario, TheoryProfile, Verdict,
};

#[derive(Parser)]
#[command(
    name = "oht",
    about = "Threshold-based outlier hypothesis testing on finite-alphabet sequence panels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the threshold test on a panel file and print the verdict as JSON.
    Detect {
        /// Panel file: one lowercase sequence per line, or a JSON array of
        /// integer arrays / strings.
        #[arg(long)]
        panel: PathBuf,
        /// Decision threshold (positive, in nats).
        #[arg(long)]
        lambda: f64,
        /// Alphabet size; inferred from the panel when omitted.
        #[arg(long)]
        alphabet_size: Option<usize>,
    },
    /// Print the theory profile of a hypothesis and a false-reject bound
    /// curve as CSV (columns: lambda, n, bound).
    Theory {
        /// Scenario JSON file (m, alphabet_size, nominal, anomalies).
        #[arg(long)]
        scenario: PathBuf,
        /// Outlier set, e.g. "2" or "1,3".
        #[arg(long)]
        set: String,
        /// Target false-reject level for the calibrated threshold.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Sequence lengths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "100,1000")]
        n: Vec<usize>,
        /// Threshold grid lo:hi:steps for the bound curve; defaults to
        /// 0 .. 2x the score floor in 41 steps.
        #[arg(long)]
        lambda_grid: Option<String>,
        /// Write the curve CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Monte Carlo budget for orthant evaluations.
        #[arg(long, default_value_t = 200_000)]
        mc_samples: usize,
    },
    /// Solve the false-reject exponent over a threshold grid; CSV columns:
    /// lambda, ld_value, achieving_pair, feasible.
    Exponent {
        #[arg(long)]
        scenario: PathBuf,
        /// True outlier set, e.g. "1".
        #[arg(long)]
        set: String,
        /// Threshold grid lo:hi:steps.
        #[arg(long)]
        lambda_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment from a spec file and emit the report CSV.
    Simulate {
        /// Experiment spec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Override the spec's trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the spec's threshold: a number or "auto:<epsilon>".
        #[arg(long)]
        lambda: Option<String>,
        /// Write the report CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full reproduction suite, writing per-check CSV artifacts and
    /// a summary into a directory. Nonzero exit if any criterion fails.
    PaperSuite {
        #[arg(long)]
        out: PathBuf,
        /// Reduced trial budgets, marked "smoke" in the summary.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// Honor OHT_THREADS as a cap on worker parallelism.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("OHT_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_scenario(path: &PathBuf) -> Result<Scenario, String> {
    let text = read_file(path)?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let scenario = file.into_scenario()?;
    for slot in scenario.degenerate_anomalies() {
        eprintln!("warning: anomaly {slot} equals the nominal distribution");
    }
    Ok(scenario)
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Detect {
            panel,
            lambda,
            alphabet_size,
        } => {
            let text = read_file(&panel)?;
            let (sequences, alphabet) = read_panel(&text, alphabet_size)?;
            let verdict =
                run_test(&sequences, alphabet, lambda).map_err(|e| format!("detect: {e}"))?;
            let json = match verdict {
                Verdict::Reject => serde_json::json!({ "verdict": "reject" }),
                Verdict::Outliers(set) => {
                    serde_json::json!({ "verdict": "outliers", "set": set.members() })
                }
            };
            println!("{json}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Theory {
            scenario,
            set,
            epsilon,
            n,
            lambda_grid,
            out,
            mc_samples,
        } => {
            let scenario = load_scenario(&scenario)?;
            let truth = parse_set_arg(&set, scenario.m())?;
            let profile = TheoryProfile::compute(&scenario, &truth)
                .map_err(|e| format!("profile: {e}"))?;
            let cfg = OrthantCfg {
                mc_samples,
                ..OrthantCfg::default()
            };
            let margin = profile
                .second_order_margin(epsilon, &cfg)
                .map_err(|e| format!("margin: {e}"))?;
            if margin.degenerate {
                eprintln!("warning: degenerate covariance block; margin set to 0");
            }
            let mut lambda_star = serde_json::Map::new();
            for &len in &n {
                let value = profile.calibrated_threshold(len, epsilon, &cfg).ok();
                lambda_star.insert(len.to_string(), serde_json::json!(value));
            }
            let rivals: Vec<Vec<usize>> = profile
                .rivals()
                .iter()
                .map(|r| r.members().to_vec())
                .collect();
            let json = serde_json::json!({
                "truth": truth.members(),
                "rivals": rivals,
                "scores": profile.scores(),
                "score_floor": profile.score_floor(),
                "floor_multiplicity": profile.floor_multiplicity(),
                "epsilon": epsilon,
                "margin": margin.value,
                "lambda_star": lambda_star,
                "covariance": profile.covariance().rows(),
            });
            println!("{json}");

            let grid = match lambda_grid {
                Some(spec) => parse_grid_arg(&spec)?,
                None => {
                    let hi = (2.0 * profile.score_floor()).max(0.1);
                    parse_grid_arg(&format!("0:{hi}:41"))?
                }
            };
            let mut csv = String::from("lambda,n,bound\n");
            for &len in &n {
                for &lambda in &grid {
                    let bound = false_reject_bound(&profile, lambda, len, &cfg)
                        .map_err(|e| format!("bound: {e}"))?;
                    csv.push_str(&format!("{lambda:.6},{len},{bound:.6e}\n"));
                }
            }
            write_or_print(out.as_ref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Exponent {
            scenario,
            set,
            lambda_grid,
            out,
        } => {
            let scenario = load_scenario(&scenario)?;
            let truth = parse_set_arg(&set, scenario.m())?;
            let grid = parse_grid_arg(&lambda_grid)?;
            let opts = ExponentOptions::default();
            let mut csv = String::from("lambda,ld_value,achieving_pair,feasible\n");
            for &lambda in &grid {
                let solution = false_reject_exponent(&truth, &scenario, lambda, &opts)
                    .map_err(|e| format!("exponent at lambda {lambda}: {e}"))?;
                let (c, d) = &solution.pair;
                csv.push_str(&format!(
                    "{lambda:.6},{:.6e},{c};{d},{}\n",
                    solution.value, solution.feasible
                ));
            }
            write_or_print(out.as_ref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            spec,
            trials,
            seed,
            lambda,
            out,
        } => {
            let text = read_file(&spec)?;
            let file: SpecFile =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", spec.display()))?;
            let mut experiment = file.into_spec()?;
            if let Some(trials) = trials {
                experiment.trials = trials;
            }
            if let Some(seed) = seed {
                experiment.seed = seed;
            }
            if let Some(lambda) = lambda {
                experiment.lambda = parse_lambda_arg(&lambda)?;
            }
            experiment.validate().map_err(|e| format!("spec: {e}"))?;
            let report = estimate(&experiment).map_err(|e| format!("simulate: {e}"))?;
            write_or_print(out.as_ref(), &report_csv(&report))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::PaperSuite { out, quick, seed } => {
            fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            let cfg = SuiteCfg { quick, seed };
            let results = run_all(&cfg);
            for result in &results {
                println!("{}", result.line());
                for (name, content) in &result.artifacts {
                    let path = out.join(name);
                    fs::write(&path, content).map_err(|e| format!("{}: {e}", path.display()))?;
                }
            }
            let summary = summary_csv(&results, &cfg);
            let path = out.join("summary.csv");
            fs::write(&path, summary).map_err(|e| format!("{}: {e}", path.display()))?;
            let failures = results.iter().filter(|r| !r.pass).count();
            if failures == 0 {
                println!("all {} criteria pass", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{failures} of {} criteria fail", results.len());
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
