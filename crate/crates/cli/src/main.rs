use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use vavg::graph::load_edge_list;
use vavg::harness::{render, run_experiment, verify_solution, Algorithm, ExperimentConfig, Format, GraphSpec, SolutionData};

#[derive(Parser)]
#[command(name = "vavg", about = "Vertex-averaged distributed graph algorithms: runs, checks and reports")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated graph as an edge list.
    Gen {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one algorithm over seeds and ID permutations.
    Run(RunArgs),
    /// Run a JSON experiment config.
    Bench {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Fmt>,
    },
    /// Check a JSON solution file against an edge-list graph file.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// ring, forest-union, random, or a path to an edge-list file.
    #[arg(long)]
    graph: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    arboricity: Option<u64>,
}

impl GraphArgs {
    fn spec(&self) -> Result<GraphSpec> {
        let n = || self.n.context("--n is required for generated graphs");
        Ok(match self.graph.as_str() {
            "ring" => GraphSpec::Ring { n: n()? },
            "forest-union" => GraphSpec::ForestUnion {
                n: n()?,
                a: self.arboricity.context("--arboricity is required for forest-union")? as usize,
            },
            "random" => GraphSpec::Random { n: n()?, m: self.m.context("--m is required for random")? },
            path => GraphSpec::File { path: PathBuf::from(path) },
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: String,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "2")]
    epsilon: String,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long = "bigC", default_value_t = 8)]
    big_c: u64,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long = "id-perms", default_value_t = 8)]
    id_perms: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Fmt::Json)]
    format: Fmt,
    #[arg(long = "round-cap")]
    round_cap: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Csv,
    Svg,
}

impl From<Fmt> for Format {
    fn from(f: Fmt) -> Self {
        match f {
            Fmt::Json => Format::Json,
            Fmt::Csv => Format::Csv,
            Fmt::Svg => Format::Svg,
        }
    }
}

fn write_out(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn experiment(config: &ExperimentConfig, format: Format) -> Result<ExitCode> {
    let report = run_experiment(config)?;
    write_out(&render(&report, format)?, config.output.as_ref())?;
    eprintln!(
        "{} runs, mean avg {:.4}, max avg {:.4}, max worst {}, {}",
        report.aggregate.runs,
        report.aggregate.mean_avg,
        report.aggregate.max_avg,
        report.aggregate.max_worst,
        if report.valid { "all valid" } else { "INVALID" }
    );
    Ok(if report.valid { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Gen { graph, seed, out } => {
            let g = graph.spec()?.build(seed)?;
            write_out(&g.to_edge_list(), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run(args) => {
            let Some(algorithm) = Algorithm::parse(&args.algo) else {
                let names: Vec<String> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                bail!("unknown algorithm {:?}; expected one of {}", args.algo, names.join(", "));
            };
            let seeds = match args.seed {
                Some(s) => vec![s],
                None if args.seeds.is_empty() => vec![0],
                None => args.seeds,
            };
            let mut config = ExperimentConfig::new(algorithm, args.graph.spec()?, seeds);
            config.a = args.graph.arboricity;
            config.epsilon = args.epsilon;
            config.k = args.k;
            config.big_c = args.big_c;
            config.id_permutations = args.id_perms;
            config.round_cap = args.round_cap;
            config.output = args.out;
            config.format = Some(args.format.into());
            experiment(&config, args.format.into())
        }
        Cmd::Bench { config, out, format } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut config: ExperimentConfig = serde_json::from_str(&text)?;
            if out.is_some() {
                config.output = out;
            }
            let format = format.map(Format::from).or(config.format).unwrap_or(Format::Json);
            experiment(&config, format)
        }
        Cmd::Verify { graph, solution } => {
            let g = load_edge_list(&graph)?;
            let text = std::fs::read_to_string(&solution).with_context(|| format!("reading {}", solution.display()))?;
            let sol: SolutionData = serde_json::from_str(&text)?;
            let verdict = verify_solution(&g, &sol);
            println!("{}", serde_json::to_string_pretty(&verdict)?);
            Ok(if verdict.valid { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
