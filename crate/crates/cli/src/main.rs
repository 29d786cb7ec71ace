//! Command-line driver for the trade-network analytics pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tradenet::centrality::{compute_all, CentralityOptions};
use tradenet::config::PipelineConfig;
use tradenet::country::Universe;
use tradenet::csvio::fmt_sig;
use tradenet::econ::{
    arellano_bond_ar, hansen_j, pooled_ols, system_gmm, wald_joint, CovMode, RegressionSpec,
};
use tradenet::error::Error;
use tradenet::flow::read_flows_csv;
use tradenet::graph::{build_yearly_graph, EdgeFilter};
use tradenet::panel::read_panel_csv;
use tradenet::pipeline::run_pipeline;
use tradenet::synth::{generate_synthetic, write_synthetic, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "tradenet",
    version,
    about = "Yearly trade-network indicators, panel assembly, and panel estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a pipeline config and its input files without computing.
    Validate {
        /// Path to the TOML config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full pipeline: networks, indicators, panel, estimators.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the first-quartile edge filter (on|off).
        #[arg(long)]
        filter: Option<String>,
    },
    /// Generate a deterministic synthetic input set.
    Synth(SynthArgs),
    /// Ad-hoc single-year centrality table from a flow file.
    Centrality(CentralityArgs),
    /// Estimate one model from an existing panel.csv.
    Estimate(EstimateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for flows/macro/memberships/tariffs CSVs.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 40)]
    countries: usize,
    #[arg(long, default_value_t = 2000)]
    year_start: i32,
    #[arg(long, default_value_t = 2019)]
    year_end: i32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct CentralityArgs {
    /// Flow CSV (origin,destination,year,value_kusd).
    #[arg(long)]
    flows: PathBuf,
    /// Universe file: one ISO alpha-3 code per line.
    #[arg(long)]
    universe: PathBuf,
    #[arg(long)]
    year: i32,
    /// Apply the first-quartile edge filter (on|off).
    #[arg(long, default_value = "on")]
    filter: String,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// A panel.csv produced by `run`.
    #[arg(long)]
    panel: PathBuf,
    /// Dependent measure column.
    #[arg(long)]
    dependent: String,
    /// Estimator: pooled_ols | system_gmm.
    #[arg(long, default_value = "system_gmm")]
    estimator: String,
    /// Comma-separated regressors.
    #[arg(long, default_value = "rgdpc,hc,pop,tc,infra,iqi,rta,fdi,ofr,crisis")]
    regressors: String,
    /// Comma-separated endogenous subset.
    #[arg(long, default_value = "")]
    endogenous: String,
    #[arg(long, default_value_t = true)]
    year_dummies: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn dispatch() -> Result<(), Error> {
    match Cli::parse().command {
        Command::Validate { config } => {
            let cfg = PipelineConfig::load(&config)?;
            cfg.validate()?;
            println!("config ok: {}", config.display());
            Ok(())
        }
        Command::Run { config, out_dir, seed, filter } => {
            let text = std::fs::read_to_string(&config).map_err(|source| Error::Io {
                path: config.display().to_string(),
                source,
            })?;
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(dir) = out_dir {
                cfg.output.dir = dir;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(filter) = filter {
                cfg.network.filter = filter;
            }
            let summary = run_pipeline(&cfg, &text)?;
            println!(
                "wrote {} artifacts to {} ({} countries x {} panel rows)",
                summary.files.len(),
                summary.out_dir.display(),
                summary.countries_retained,
                summary.panel_rows,
            );
            Ok(())
        }
        Command::Synth(args) => {
            let spec =
                SyntheticSpec::new(args.countries, args.year_start, args.year_end, args.seed);
            let data = generate_synthetic(&spec)?;
            write_synthetic(&data, &args.out_dir)?;
            println!(
                "wrote synthetic inputs for {} countries, {}-{} (seed {}) to {}",
                args.countries,
                args.year_start,
                args.year_end,
                args.seed,
                args.out_dir.display(),
            );
            Ok(())
        }
        Command::Centrality(args) => run_centrality(args),
        Command::Estimate(args) => run_estimate(args),
    }
}

fn run_centrality(args: CentralityArgs) -> Result<(), Error> {
    let universe_text =
        std::fs::read_to_string(&args.universe).map_err(|source| Error::Io {
            path: args.universe.display().to_string(),
            source,
        })?;
    let universe = Universe::from_lines(&universe_text)?;
    let flows = read_flows_csv(&args.flows, false)?;
    let year_flows: Vec<_> = flows.into_iter().filter(|f| f.year == args.year).collect();
    let filter = match args.filter.as_str() {
        "on" => EdgeFilter::PerYear,
        "off" => EdgeFilter::Off,
        other => {
            return Err(Error::Validation(format!("filter must be on|off, got {other}")))
        }
    };
    let graph = build_yearly_graph(&year_flows, args.year, &universe, filter)?;
    let records = compute_all(&graph, &CentralityOptions::default())?;

    let mut out = String::from(
        "country,year,k_in,k_out,s_in,s_out,pagerank,betweenness,betweenness_norm,rwb,closeness,clustering,kcore\n",
    );
    for r in &records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.country,
            r.year,
            r.k_in,
            r.k_out,
            fmt_sig(r.s_in),
            fmt_sig(r.s_out),
            fmt_sig(r.pagerank),
            fmt_sig(r.betweenness),
            fmt_sig(r.betweenness_norm),
            fmt_sig(r.rwb),
            fmt_sig(r.closeness),
            fmt_sig(r.clustering),
            r.kcore,
        ));
    }
    match args.out {
        Some(path) => tradenet::csvio::write_text(&path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> Result<(), Error> {
    let panel = read_panel_csv(&args.panel)?;
    let regressors: Vec<&str> =
        args.regressors.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let mut spec = RegressionSpec::new(&args.dependent, &regressors);
    spec.year_dummies = args.year_dummies;
    spec.endogenous = args
        .endogenous
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();

    match args.estimator.as_str() {
        "pooled_ols" => {
            let r = pooled_ols(&panel, &spec, CovMode::Clustered)?;
            println!("name,coef,se,p");
            for t in &r.terms {
                println!("{},{},{},{}", t.name, fmt_sig(t.coef), fmt_sig(t.se), fmt_sig(t.p));
            }
            let wald = wald_joint(&r)?;
            println!("wald_p,{}", fmt_sig(wald.p));
            if let Some(r2) = r.r2_adjusted {
                println!("r2_adjusted,{}", fmt_sig(r2));
            }
            println!("obs,{}", r.n_obs);
        }
        "system_gmm" => {
            spec.include_lagged_dependent = true;
            let r = system_gmm(&panel, &spec)?;
            println!("name,coef,se,p");
            for t in &r.base.terms {
                println!("{},{},{},{}", t.name, fmt_sig(t.coef), fmt_sig(t.se), fmt_sig(t.p));
            }
            let hansen = hansen_j(&r);
            println!("hansen_p,{}", fmt_sig(hansen.p));
            for order in [1usize, 2] {
                match arellano_bond_ar(&r, order) {
                    Ok(t) => println!("ar{order}_p,{}", fmt_sig(t.p)),
                    Err(e) => println!("ar{order}_p, ({e})"),
                }
            }
            println!("instruments,{}", r.instrument_count);
            println!("obs,{}", r.base.n_obs);
        }
        other => {
            return Err(Error::Validation(format!(
                "estimator must be pooled_ols|system_gmm, got {other}"
            )))
        }
    }
    Ok(())
}
