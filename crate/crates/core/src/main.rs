use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ssfind::graph::{audit_expansion, gen_biregular, Sampling, Side};
use ssfind::harness::{self, CampaignConfig, EpsilonChoice};
use ssfind::hgp::HgpCode;
use ssfind::io;
use ssfind::Rational;

#[derive(Parser)]
#[command(name = "ssfind", version, about = "Hypergraph product codes and small-set envelope decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random (deltaV, deltaC)-biregular bipartite graph.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta_v: usize,
        #[arg(long)]
        delta_c: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Report the worst vertex expansion per set size.
    Audit {
        graph: PathBuf,
        #[arg(long, default_value_t = 3)]
        s_max: usize,
        #[arg(long, value_enum, default_value_t = SideArg::Both)]
        side: SideArg,
        /// Sample this many random sets per size instead of enumerating.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        sample_seed: u64,
    },
    /// Print the size parameters of the hypergraph product code.
    BuildHgp { graph: PathBuf },
    /// Decode one error and write envelope, trace and verdict files.
    Decode {
        graph: PathBuf,
        error: PathBuf,
        /// A rational such as 1/20, or `audit` / `audit:S`.
        #[arg(long, default_value = "audit")]
        epsilon: EpsilonChoice,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recheck every cached score during the run.
        #[arg(long)]
        verify_cache: bool,
    },
    /// Run a Monte Carlo campaign described by a key=value config file.
    Montecarlo {
        config: PathBuf,
        /// Write the full per-trial report here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare decoding radii, e.g. `radius-table r=1/2 eps=1/20 delta_c=6`.
    RadiusTable {
        /// `r=..`, `eps=..` and `delta_c=..` assignments.
        #[arg(required = true)]
        params: Vec<String>,
    },
}

enum Outcome {
    Ok,
    DecodeFailure,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_code(path: &PathBuf) -> Result<HgpCode> {
    let g = io::parse_graph(&read(path)?).with_context(|| path.display().to_string())?;
    Ok(HgpCode::new(g))
}

fn fmt_profile(p: &ssfind::graph::ExpansionProfile) -> String {
    let mut out = format!(
        "side={:?} max_set_size={} certified={} max_epsilon={}\n",
        p.side,
        p.max_set_size,
        p.certified,
        p.max_epsilon()
    );
    for s in 1..=p.max_set_size {
        let e = p.worst_epsilon_by_size[s];
        out.push_str(&format!(
            "  size={} worst_epsilon={} ({:.6}) sets={}\n",
            s,
            e,
            harness::rational_to_f64(e),
            p.sets_examined[s]
        ));
    }
    out
}

fn radius_params(params: &[String]) -> Result<(Rational, Rational, usize)> {
    let (mut r, mut eps, mut dc) = (None, None, None);
    for p in params {
        let Some((k, v)) = p.split_once('=') else {
            bail!("expected key=value, got `{p}`");
        };
        match k {
            "r" => r = Some(harness::parse_rational(v).map_err(anyhow::Error::msg)?),
            "eps" | "epsilon" | "ε" => eps = Some(harness::parse_rational(v).map_err(anyhow::Error::msg)?),
            "delta_c" | "deltaC" | "Δ_C" => dc = Some(v.parse::<usize>().with_context(|| format!("bad degree `{v}`"))?),
            _ => bail!("unknown parameter `{k}`"),
        }
    }
    match (r, eps, dc) {
        (Some(r), Some(e), Some(d)) => Ok((r, e, d)),
        _ => bail!("radius-table needs r, eps and delta_c"),
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::GenGraph {
            n,
            delta_v,
            delta_c,
            seed,
            out,
        } => {
            let text = io::write_graph(&gen_biregular(n, delta_v, delta_c, seed)?);
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Audit {
            graph,
            s_max,
            side,
            samples,
            sample_seed,
        } => {
            let g = io::parse_graph(&read(&graph)?).with_context(|| graph.display().to_string())?;
            let sampling = samples.map(|t| Sampling {
                trials_per_size: t,
                seed: sample_seed,
            });
            let sides: &[Side] = match side {
                SideArg::Left => &[Side::Left],
                SideArg::Right => &[Side::Right],
                SideArg::Both => &[Side::Left, Side::Right],
            };
            for &s in sides {
                print!("{}", fmt_profile(&audit_expansion(&g, s, s_max, sampling)?));
            }
        }
        Command::BuildHgp { graph } => {
            let code = load_code(&graph)?;
            println!("N={}", code.num_qubits());
            println!("K={}", code.k());
            println!("checks={}", code.num_checks());
            println!("generators={}", code.num_generators());
            println!("n={} m={} deltaV={} deltaC={}", code.n(), code.m(), code.delta_v(), code.delta_c());
        }
        Command::Decode {
            graph,
            error,
            epsilon,
            out,
            verify_cache,
        } => {
            let d = harness::decode_once(&graph, &error, epsilon, verify_cache, out.as_deref())?;
            print!("{}", d.render_verdict());
            if !d.verdict.recovered() {
                return Ok(Outcome::DecodeFailure);
            }
        }
        Command::Montecarlo { config, out } => {
            let cfg = CampaignConfig::parse(&read(&config)?).with_context(|| config.display().to_string())?;
            let report = harness::montecarlo(&cfg)?;
            print!("{}", report.render_summary());
            if let Some(p) = out {
                std::fs::write(&p, report.render()).with_context(|| format!("writing {}", p.display()))?;
            }
            if !report.all_recovered() {
                return Ok(Outcome::DecodeFailure);
            }
        }
        Command::RadiusTable { params } => {
            let (r, eps, dc) = radius_params(&params)?;
            print!("{}", harness::render_radius_table(&harness::radius_table(r, eps, dc)?));
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::DecodeFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
