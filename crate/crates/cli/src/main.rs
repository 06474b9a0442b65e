//! `cagg` — coded gradient-aggregation toolbox.
//!
//! Subcommands: `classify` (erasure-pattern classification table), `cost`
//! (exact / formula costs), `simulate` (seeded Monte Carlo), `tradeoff`
//! (edge-cost vs helper-cost sweep), `verify` (master-recovery checks).
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 exact computation infeasible. `CAGG_WORK_BUDGET` overrides the
//! exact-computation work budget.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cagg_core::analysis::{
    ceh, chm_amc_exact, chm_exhaustive, pyramid_cost_rows, tradeoff, CostRow, CostValue,
    FormulaVariant, Scheme, SystemParams, EXHAUSTIVE_GUARD,
};
use cagg_core::codes::PyramidCode;
use cagg_core::erasures::ClassTable;
use cagg_core::error::Error;
use cagg_core::field::FieldSpec;
use cagg_core::occupancy::DEFAULT_WORK_BUDGET;
use cagg_core::sim::{estimate_chm, sample_matrix, trial_rng, SimConfig, Strategy, WeightMode};
use cagg_core::strategies::verify_recovery;

#[derive(Parser)]
#[command(name = "cagg", version, about = "Coded gradient aggregation: costs, tables, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Naive,
    Amc,
    Pyramid,
    Arc,
    ArcGreedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    AsPrinted,
    Operational,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Exact,
    Upto,
}

#[derive(Args)]
struct SystemArgs {
    /// Number of edge nodes
    #[arg(long)]
    ne: usize,
    /// Number of helper nodes
    #[arg(long)]
    nh: usize,
    /// Straggling links per edge node
    #[arg(long)]
    s: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the erasure-pattern classification table of a pyramid code
    Classify {
        #[arg(long)]
        nh: usize,
        #[arg(long)]
        s: usize,
        /// Number of local codes
        #[arg(long)]
        t: usize,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Exact or formula-based communication costs
    Cost {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[command(flatten)]
        system: SystemArgs,
        /// Pyramid locality parameter
        #[arg(long)]
        t: Option<usize>,
        /// Number of maxima for the MDS scheme
        #[arg(long)]
        m: Option<usize>,
        /// Pyramid formula bookkeeping; both variants print when omitted
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// Trials for Monte Carlo moment fallback
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo cost estimation with reproducible seeds
    Simulate {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Row weight model: exactly s erasures, or uniform up to s
        #[arg(long, value_enum, default_value_t = WeightArg::Exact)]
        weight: WeightArg,
    },
    /// Edge-cost/helper-cost tradeoff rows for all schemes
    Tradeoff {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plan sampled matrices and check master recovery on every one
    Verify {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

const COST_HEADER: &str = "scheme,t_or_m,C_EH,C_HM,method,stderr,trials,seed";

fn work_budget() -> u64 {
    std::env::var("CAGG_WORK_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_WORK_BUDGET)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> cagg_core::Result<ExitCode> {
    match command {
        Command::Classify { nh, s, t, format } => run_classify(nh, s, t, format),
        Command::Cost { scheme, system, t, m, variant, trials, seed } => {
            run_cost(scheme, system, t, m, variant, trials, seed)
        }
        Command::Simulate { scheme, system, t, m, trials, seed, weight } => {
            run_simulate(scheme, system, t, m, trials, seed, weight)
        }
        Command::Tradeoff { system, trials, seed } => run_tradeoff(system, trials, seed),
        Command::Verify { scheme, system, t, m, trials, seed } => {
            run_verify(scheme, system, t, m, trials, seed)
        }
    }
}

fn run_classify(nh: usize, s: usize, t: usize, format: FormatArg) -> cagg_core::Result<ExitCode> {
    let code = PyramidCode::build(&FieldSpec::gf256(), nh, s, t)?;
    let table = ClassTable::build_with_guard(&code, work_budget())?;
    match format {
        FormatArg::Csv => print!("{}", table.to_csv()),
        FormatArg::Json => {
            let types: Vec<serde_json::Value> = table
                .types
                .iter()
                .map(|tc| {
                    serde_json::json!({
                        "type_u": tc.ty.u_string(),
                        "type_v": tc.ty.v_string(),
                        "S_size": tc.size,
                        "beta": tc.beta,
                        "mu": tc.mu,
                        "patterns": tc.f_rows.iter().map(|r| {
                            serde_json::json!({ "f": r.f, "N_f": r.count })
                        }).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = serde_json::json!({ "n_h": nh, "s": s, "t": t, "total": table.total, "types": types });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_cost_rows(rows: &[CostRow]) {
    println!("{COST_HEADER}");
    for row in rows {
        let opt = |x: Option<String>| x.unwrap_or_default();
        println!(
            "{},{},{},{},{},{},{},{}",
            row.scheme,
            opt(row.t_or_m.map(|v| v.to_string())),
            row.c_eh,
            row.c_hm.render(),
            row.method,
            opt(row.stderr.map(|v| v.to_string())),
            opt(row.trials.map(|v| v.to_string())),
            opt(row.seed.map(|v| v.to_string())),
        );
    }
}

fn run_cost(
    scheme: SchemeArg,
    system: SystemArgs,
    t: Option<usize>,
    m: Option<usize>,
    variant: Option<VariantArg>,
    trials: u64,
    seed: u64,
) -> cagg_core::Result<ExitCode> {
    let params = SystemParams::new(system.ne, system.nh, system.s)?;
    let budget = work_budget();
    let rows: Vec<CostRow> = match scheme {
        SchemeArg::Naive => vec![CostRow {
            scheme: "naive",
            t_or_m: None,
            c_eh: ceh(&params, &Scheme::Naive)?,
            c_hm: CostValue::Float(params.n_e as f64),
            method: "exact",
            stderr: None,
            trials: None,
            seed: None,
        }],
        SchemeArg::Amc => {
            let m = m.unwrap_or(1);
            let c_eh = ceh(&params, &Scheme::Amc { m })?;
            let c_hm = if m == 1 {
                chm_amc_exact(&params, budget).map_err(|e| match e {
                    Error::Infeasible(msg) => {
                        Error::Infeasible(format!("{msg}; try `cagg simulate --scheme amc`"))
                    }
                    other => other,
                })?
            } else {
                chm_exhaustive(&Strategy::amc(params.n_h, params.s, m)?, &params, EXHAUSTIVE_GUARD)
                    .map_err(|e| match e {
                        Error::Infeasible(msg) => Error::Infeasible(format!(
                            "{msg}; no closed form for m > 1, try `cagg simulate --scheme amc --m {m}`"
                        )),
                        other => other,
                    })?
            };
            vec![CostRow {
                scheme: "amc",
                t_or_m: Some(m),
                c_eh,
                c_hm: CostValue::Exact(c_hm),
                method: "exact",
                stderr: None,
                trials: None,
                seed: None,
            }]
        }
        SchemeArg::Pyramid => {
            let t = t.ok_or_else(|| Error::parameter("--t is required for the pyramid scheme"))?;
            let all = pyramid_cost_rows(&params, t, trials, seed, budget)?;
            match variant {
                None => all,
                Some(v) => {
                    let tag = match v {
                        VariantArg::AsPrinted => FormulaVariant::AsPrinted.method_tag(),
                        VariantArg::Operational => FormulaVariant::Operational.method_tag(),
                    };
                    all.into_iter().filter(|r| r.method == tag).collect()
                }
            }
        }
        SchemeArg::Arc | SchemeArg::ArcGreedy => {
            let (name, strategy): (&'static str, Strategy) = match scheme {
                SchemeArg::Arc => ("arc", Strategy::arc(params.n_h, params.s)?),
                _ => ("arc-greedy", Strategy::arc_greedy(params.n_h, params.s)?),
            };
            let c_hm =
                chm_exhaustive(&strategy, &params, EXHAUSTIVE_GUARD).map_err(|e| match e {
                    Error::Infeasible(msg) => Error::Infeasible(format!(
                        "{msg}; no closed form, try `cagg simulate --scheme {name}`"
                    )),
                    other => other,
                })?;
            vec![CostRow {
                scheme: name,
                t_or_m: None,
                c_eh: ceh(&params, &Scheme::Arc)?,
                c_hm: CostValue::Exact(c_hm),
                method: "exact",
                stderr: None,
                trials: None,
                seed: None,
            }]
        }
    };
    print_cost_rows(&rows);
    Ok(ExitCode::SUCCESS)
}

fn build_strategy(
    scheme: SchemeArg,
    params: &SystemParams,
    t: Option<usize>,
    m: Option<usize>,
) -> cagg_core::Result<Strategy> {
    match scheme {
        SchemeArg::Naive => Strategy::naive(params.n_h, params.s),
        SchemeArg::Amc => {
            let m = m.unwrap_or(1);
            if m == 0 {
                Strategy::naive(params.n_h, params.s)
            } else {
                Strategy::amc(params.n_h, params.s, m)
            }
        }
        SchemeArg::Pyramid => {
            let t = t.ok_or_else(|| Error::parameter("--t is required for the pyramid scheme"))?;
            Strategy::pyramid(&FieldSpec::gf256(), params.n_h, params.s, t)
        }
        SchemeArg::Arc => Strategy::arc(params.n_h, params.s),
        SchemeArg::ArcGreedy => Strategy::arc_greedy(params.n_h, params.s),
    }
}

fn scheme_of(strategy: &Strategy, t: Option<usize>, m: Option<usize>) -> (Scheme, Option<usize>) {
    match strategy {
        Strategy::Naive { .. } => (Scheme::Naive, m),
        Strategy::Amc { m, .. } => (Scheme::Amc { m: *m }, Some(*m)),
        Strategy::Pyramid { code } => (Scheme::Pyramid { t: code.t }, t),
        Strategy::Arc { .. } => (Scheme::Arc, None),
        Strategy::ArcGreedy { .. } => (Scheme::ArcGreedy, None),
    }
}

fn run_simulate(
    scheme: SchemeArg,
    system: SystemArgs,
    t: Option<usize>,
    m: Option<usize>,
    trials: u64,
    seed: u64,
    weight: WeightArg,
) -> cagg_core::Result<ExitCode> {
    let params = SystemParams::new(system.ne, system.nh, system.s)?;
    let strategy = build_strategy(scheme, &params, t, m)?;
    let mode = match weight {
        WeightArg::Exact => WeightMode::ExactS,
        WeightArg::Upto => WeightMode::UpToS,
    };
    let config =
        SimConfig::new(params.n_e, params.n_h, params.s, trials, seed)?.with_weight_mode(mode);
    let result = estimate_chm(&config, &strategy)?;
    let (scheme_id, t_or_m) = scheme_of(&strategy, t, m);
    let row = CostRow {
        scheme: strategy.name(),
        t_or_m,
        c_eh: ceh(&params, &scheme_id)?,
        c_hm: CostValue::Float(result.mean),
        method: "monte-carlo",
        stderr: Some(result.stderr),
        trials: Some(result.trials),
        seed: Some(result.seed),
    };
    print_cost_rows(&[row]);
    Ok(ExitCode::SUCCESS)
}

fn run_tradeoff(system: SystemArgs, trials: u64, seed: u64) -> cagg_core::Result<ExitCode> {
    let params = SystemParams::new(system.ne, system.nh, system.s)?;
    let rows = tradeoff(&params, trials, seed, work_budget())?;
    print_cost_rows(&rows);
    Ok(ExitCode::SUCCESS)
}

fn run_verify(
    scheme: SchemeArg,
    system: SystemArgs,
    t: Option<usize>,
    m: Option<usize>,
    trials: u64,
    seed: u64,
) -> cagg_core::Result<ExitCode> {
    let params = SystemParams::new(system.ne, system.nh, system.s)?;
    let strategy = build_strategy(scheme, &params, t, m)?;
    let config = SimConfig::new(params.n_e, params.n_h, params.s, trials, seed)?;
    let (field, generator) = strategy.client_code();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let matrix = sample_matrix(&config, &mut rng)?;
        let plan = strategy.plan(&matrix)?;
        if !verify_recovery(field, generator, &plan, params.n_e) {
            println!(
                "FAIL trial {trial}: master cannot recover the aggregate gradient; counterexample:"
            );
            let doc = serde_json::json!({
                "trial": trial,
                "matrix": &matrix,
                "plan": plan.describe(),
            });
            println!("{}", serde_json::to_string(&doc).expect("serializable"));
            return Ok(ExitCode::from(1));
        }
    }
    println!(
        "OK: {} recovery verified on {trials} sampled matrices (ne={}, nh={}, s={}, seed={seed})",
        strategy.name(),
        params.n_e,
        params.n_h,
        params.s
    );
    Ok(ExitCode::SUCCESS)
}
