use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

mod catalog;
mod config;
mod sweep;
mod verify;

use config::ExperimentConfig;

/// Finite-window experiments on greedy approximation bases.
#[derive(Parser)]
#[command(name = "tgalab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a module's property checks; exits 1 on the first failure.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Skew the oracles so that checks must fail.
        #[arg(long)]
        corrupt_oracle: bool,
    },
    /// Evaluate one experiment over its grid and write CSV.
    Sweep {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(sweep::EXPERIMENTS))]
        experiment: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        basis: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dump a construction's tables and witnesses as CSV.
    Construct {
        #[arg(value_parser = ["kt", "perturbed", "blockwise"])]
        basis: String,
        /// Tables for kt; witnesses otherwise.
        #[arg(long)]
        out: PathBuf,
        /// Witness CSV for kt.
        #[arg(long)]
        witnesses: Option<PathBuf>,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Least-squares slope of log(y) against log(x) over a sweep CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Row filter `column=value`; repeatable.
        #[arg(long = "where")]
        filters: Vec<String>,
    },
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Verify {
            suite,
            config,
            seed,
            corrupt_oracle,
        } => {
            let cfg = ExperimentConfig::resolve(
                &format!("verify-{suite}"),
                config.as_deref(),
                &[("seed", opt(&seed))],
            )?;
            let mut ck = verify::Checker::new(corrupt_oracle, |line| println!("{line}"));
            match verify::run(&suite, &cfg, &mut ck)? {
                Ok(()) => {
                    println!("{suite}: {} checks passed", ck.passed);
                    Ok(ExitCode::SUCCESS)
                }
                Err(verify::Failed(name)) => {
                    println!(
                        "{suite}: failed at {name:?} after {} passing checks",
                        ck.passed
                    );
                    Ok(ExitCode::from(1))
                }
            }
        }
        Cmd::Sweep {
            experiment,
            out,
            m_max,
            seed,
            p,
            q,
            basis,
            trials,
            config,
        } => {
            let cfg = ExperimentConfig::resolve(
                &experiment,
                config.as_deref(),
                &[
                    ("m_max", opt(&m_max)),
                    ("seed", opt(&seed)),
                    ("p", opt(&p)),
                    ("q", opt(&q)),
                    ("basis", basis),
                    ("trials", opt(&trials)),
                ],
            )?;
            let result = sweep::run(&cfg)?;
            let checked = sweep::verify_spots(&result)?;
            sweep::write_csv(&out, &cfg, &result.rows)?;
            eprintln!(
                "{}: {} rows, {checked} witnesses re-evaluated, written to {}",
                cfg.experiment,
                result.rows.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Construct {
            basis,
            out,
            witnesses,
            m_max,
            p,
            q,
            config,
        } => {
            let cfg = ExperimentConfig::resolve(
                &format!("construct-{basis}"),
                config.as_deref(),
                &[
                    ("m_max", opt(&m_max)),
                    ("p", opt(&p)),
                    ("q", opt(&q)),
                    ("basis", Some(basis.clone())),
                ],
            )?;
            construct(&cfg, &out, witnesses.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Fit {
            input,
            x,
            y,
            filters,
        } => {
            let r = fit_csv(&input, &x, &y, &filters)?;
            println!(
                "slope={} intercept={} r_squared={} n={} x={} y={}",
                r.slope, r.intercept, r.r_squared, r.n, r.x_label, r.y_label
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn csv_out(path: &Path, cfg: &ExperimentConfig) -> Result<csv::Writer<std::fs::File>> {
    let mut file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    for line in cfg.header() {
        writeln!(file, "{line}")?;
    }
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

const WITNESS_COLUMNS: [&str; 6] = ["label", "kind", "set", "coefficients", "bound", "note"];

fn write_witness(w: &mut csv::Writer<std::fs::File>, r: &tgalab::WitnessRecord) -> Result<()> {
    w.write_record([
        r.label.clone(),
        r.kind.to_string(),
        r.set.to_cell(),
        r.coefficients.to_cell(),
        r.bound.map(|b| b.to_string()).unwrap_or_default(),
        r.note.clone(),
    ])?;
    Ok(())
}

fn construct(cfg: &ExperimentConfig, out: &Path, witnesses: Option<&Path>) -> Result<()> {
    match cfg.basis.as_str() {
        "kt" => {
            let (t, _, _) = tgalab::build_kt(cfg.p, cfg.m_max)?;
            let mut w = csv_out(out, cfg)?;
            w.write_record(["m", "k", "r", "s", "T", "i"])?;
            for m in 1..=t.max_block() {
                for k in 1..=m {
                    w.write_record([
                        m.to_string(),
                        k.to_string(),
                        t.r(m, k).to_string(),
                        t.s(m, k).to_string(),
                        t.t(m, k).to_string(),
                        t.i(m, k).to_string(),
                    ])?;
                }
            }
            w.flush()?;
            if let Some(path) = witnesses {
                let mut w = csv_out(path, cfg)?;
                w.write_record(WITNESS_COLUMNS)?;
                for m in 1..=t.max_block() {
                    write_witness(&mut w, &tgalab::kt_witness(&t, m)?)?;
                }
                w.flush()?;
            }
        }
        "perturbed" => {
            let w8 = std::sync::Arc::new(tgalab::Weight::power(cfg.p, cfg.window)?);
            let b =
                tgalab::build_perturbed(cfg.p, cfg.q, w8, tgalab::EtaMap::default(), cfg.window)?;
            let mut w = csv_out(out, cfg)?;
            w.write_record(WITNESS_COLUMNS)?;
            for m in 1..=cfg.m_max {
                let (f, u) = tgalab::perturbed_witness(&b, m)?;
                write_witness(&mut w, &f)?;
                write_witness(&mut w, &u)?;
            }
            w.flush()?;
        }
        "blockwise" => {
            let t =
                tgalab::blockwise_t(tgalab::bases::blockwise::default_block_target, cfg.blocks)?;
            let last = t[cfg.blocks];
            let wt = std::sync::Arc::new(tgalab::Weight::power(cfg.p, last)?);
            let b = tgalab::build_blockwise(cfg.p, cfg.q, wt, t, last)?;
            let mut w = csv_out(out, cfg)?;
            w.write_record(WITNESS_COLUMNS)?;
            for k in 1..=cfg.blocks {
                let c = tgalab::blockwise_witness(&b, k, &tgalab::BlockOrder::Identity)?;
                write_witness(&mut w, &c.g)?;
                write_witness(&mut w, &c.f)?;
            }
            w.flush()?;
        }
        other => bail!("no construction dump for {other:?}"),
    }
    Ok(())
}

fn fit_csv(path: &Path, x: &str, y: &str, filters: &[String]) -> Result<tgalab::FitResult> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column {name:?} in {}", path.display()))
    };
    let (xi, yi) = (col(x)?, col(y)?);
    let mut conds = Vec::new();
    for f in filters {
        let Some((k, v)) = f.split_once('=') else {
            bail!("filter {f:?} is not column=value");
        };
        conds.push((col(k)?, v.to_string()));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        if conds.iter().all(|(i, v)| rec.get(*i) == Some(v.as_str())) {
            xs.push(
                rec[xi]
                    .parse::<f64>()
                    .with_context(|| format!("column {x}: {:?}", &rec[xi]))?,
            );
            ys.push(
                rec[yi]
                    .parse::<f64>()
                    .with_context(|| format!("column {y}: {:?}", &rec[yi]))?,
            );
        }
    }
    Ok(tgalab::fit_loglog(&xs, &ys)?.with_labels(format!("log({x})"), format!("log({y})")))
}
