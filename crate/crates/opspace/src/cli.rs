//! Command-line surface: every campaign behind reproducible seeds and
//! machine-readable output.
//!
//! Exit codes: 0 when all checks pass, 1 for assertion failures, 2 for
//! parse/configuration errors, 3 for numerical failures. Every JSON
//! document embeds `{version, seed, config}` so a result can be traced
//! back to the invocation that produced it. `OPSPACE_THREADS` caps
//! internal parallelism (0 or unset = automatic); output bytes do not
//! depend on the thread count.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::matcore::{ComplexMatrix, PExponent};
use crate::opmatrix::BlockMatrix;
use crate::pnorm::{m1_norm_dual, mn_schatten_norm, OptimizerConfig};
use crate::witnesses::{Family, WitnessFamily};
use crate::{crplab, ohnorm, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "opspace", version, about = "Matrix norms over Schatten classes: exact values, certified bounds, verification campaigns")]
struct Cli {
    /// Seed for every randomized routine.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Ascent restarts per norm estimate.
    #[arg(long, global = true, default_value_t = 64)]
    restarts: usize,
    /// Iteration cap per ascent run.
    #[arg(long, global = true, default_value_t = 500)]
    max_iters: usize,
    /// Relative-improvement stopping tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Output format; defaults to JSON (the `schatten` command prints the
    /// bare value unless a format is requested).
    #[arg(long, global = true, value_enum)]
    output_format: Option<OutputFormat>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output_path: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct BlockInput {
    /// JSON file holding a block matrix.
    #[arg(long, conflicts_with = "family")]
    file: Option<PathBuf>,
    /// Witness family name: A, B, or cbt.
    #[arg(long, requires = "n")]
    family: Option<String>,
    /// Family size (with --family).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Schatten norm of a plain matrix from a JSON file.
    Schatten {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        p: String,
    },
    /// Certified estimate of the vector-valued norm at exponent p.
    MnNorm {
        #[command(flatten)]
        input: BlockInput,
        #[arg(long)]
        p: String,
    },
    /// Exact Gram-arrangement norm over S_2.
    OhNorm {
        #[command(flatten)]
        input: BlockInput,
    },
    /// Dual-pairing estimate of the p = 1 norm.
    M1Dual {
        #[command(flatten)]
        input: BlockInput,
    },
    /// Verification campaigns.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Certified transpose-ratio campaign over a size range.
    CrpRatio {
        #[arg(long)]
        p: String,
        /// Inclusive size range, e.g. 2..6.
        #[arg(long)]
        n_range: String,
    },
    /// Free-search probe between the growth floor and ceiling.
    Sandwich {
        #[arg(long)]
        p: String,
        #[arg(long)]
        n: usize,
    },
    /// Random matrix-vs-column campaign over S_2.
    CmpCheck {
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyTarget {
    /// Run every closed-form check up to --n-max across --p-grid.
    Lemmas {
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        /// Comma-separated exponents, e.g. 1,1.5,3,4,inf.
        #[arg(long, default_value = "1,1.5,3,4,inf")]
        p_grid: String,
        /// Random trials per size for the contraction property test.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::NonFinite(_) => 3,
        _ => 2,
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("OPSPACE_THREADS") {
        if let Ok(k) = v.trim().parse::<usize>() {
            if k > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

fn optimizer_config(cli: &Cli) -> OptimizerConfig {
    OptimizerConfig {
        restarts: cli.restarts,
        max_iters: cli.max_iters,
        tol: cli.tol,
        seed: cli.seed,
        ..OptimizerConfig::default()
    }
}

fn provenance(cli: &Cli, command: &str, extra: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "config": {
            "command": command,
            "restarts": cli.restarts,
            "max_iters": cli.max_iters,
            "tol": cli.tol,
            "extra": extra,
        },
    })
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output_path {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json_doc(mut doc: Value, payload_key: &str, payload: Value) -> String {
    doc[payload_key] = payload;
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

fn parse_p(s: &str) -> Result<PExponent> {
    PExponent::from_str(s)
}

fn parse_p_grid(s: &str) -> Result<Vec<PExponent>> {
    let grid = s
        .split(',')
        .map(|t| parse_p(t.trim()))
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty exponent grid".into()));
    }
    Ok(grid)
}

/// Inclusive range `a..b`.
fn parse_n_range(s: &str) -> Result<Vec<usize>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::InvalidConfig(format!("size range must look like a..b, got '{s}'")))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad range start in '{s}'")))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad range end in '{s}'")))?;
    if a == 0 || b < a {
        return Err(Error::InvalidConfig(format!("range '{s}' must satisfy 1 <= a <= b")));
    }
    Ok((a..=b).collect())
}

fn load_block_input(input: &BlockInput) -> Result<BlockMatrix> {
    match (&input.file, &input.family) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            Ok(serde_json::from_str(&text)?)
        }
        (None, Some(fam)) => {
            let n = input
                .n
                .ok_or_else(|| Error::InvalidConfig("--family requires --n".into()))?;
            let family: Family = fam.parse()?;
            Ok(WitnessFamily::build(family, n)?.payload)
        }
        _ => Err(Error::InvalidConfig(
            "provide exactly one of --file or --family".into(),
        )),
    }
}

fn require_json(cli: &Cli, command: &str) -> Result<()> {
    if cli.output_format == Some(OutputFormat::Csv) {
        return Err(Error::InvalidConfig(format!(
            "{command} has no CSV form; use --output-format json"
        )));
    }
    Ok(())
}

fn estimate_payload(
    est: &crate::pnorm::NormEstimate,
    p: PExponent,
    n: usize,
    m: usize,
    cli: &Cli,
) -> Value {
    let mut v = serde_json::to_value(est).expect("serializable");
    v["p"] = serde_json::to_value(p).expect("serializable");
    v["n"] = json!(n);
    v["m"] = json!(m);
    v["restarts"] = json!(cli.restarts);
    v["seed"] = json!(cli.seed);
    v
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Schatten { file, p } => {
            let p = parse_p(p)?;
            let text = std::fs::read_to_string(file)?;
            let matrix: ComplexMatrix = serde_json::from_str(&text)?;
            let value = matrix.schatten_norm(p)?;
            match cli.output_format {
                None => emit(cli, &format!("{value}\n"))?,
                Some(OutputFormat::Json) => {
                    let doc = provenance(cli, "schatten", json!({"p": p, "file": file.display().to_string()}));
                    emit(cli, &json_doc(doc, "result", json!({ "value": value })))?;
                }
                Some(OutputFormat::Csv) => {
                    return Err(Error::InvalidConfig("schatten has no CSV form".into()))
                }
            }
            Ok(0)
        }
        Command::MnNorm { input, p } => {
            require_json(cli, "mn-norm")?;
            let p = parse_p(p)?;
            let x = load_block_input(input)?;
            let cfg = optimizer_config(cli);
            let est = mn_schatten_norm(&x, p, &cfg)?;
            let payload = estimate_payload(&est, p, x.outer_rows().max(x.outer_cols()), x.inner_rows(), cli);
            let doc = provenance(cli, "mn-norm", json!({"p": p}));
            emit(cli, &json_doc(doc, "result", payload))?;
            Ok(0)
        }
        Command::OhNorm { input } => {
            require_json(cli, "oh-norm")?;
            let x = load_block_input(input)?;
            let value = ohnorm::oh_matrix_norm(&x)?;
            let doc = provenance(cli, "oh-norm", json!({}));
            emit(
                cli,
                &json_doc(
                    doc,
                    "result",
                    json!({"value": value, "n": x.outer_rows().max(x.outer_cols()), "m": x.inner_rows()}),
                ),
            )?;
            Ok(0)
        }
        Command::M1Dual { input } => {
            require_json(cli, "m1-dual")?;
            let x = load_block_input(input)?;
            let cfg = optimizer_config(cli);
            let est = m1_norm_dual(&x, &cfg)?;
            let payload = estimate_payload(
                &est,
                PExponent::Finite(1.0),
                x.outer_rows().max(x.outer_cols()),
                x.inner_rows(),
                cli,
            );
            let doc = provenance(cli, "m1-dual", json!({}));
            emit(cli, &json_doc(doc, "result", payload))?;
            Ok(0)
        }
        Command::Verify { target } => {
            let VerifyTarget::Lemmas { n_max, p_grid, trials } = target;
            require_json(cli, "verify lemmas")?;
            let grid = parse_p_grid(p_grid)?;
            if *n_max == 0 || *trials == 0 {
                return Err(Error::InvalidConfig("--n-max and --trials must be positive".into()));
            }
            let mut outcomes = Vec::new();
            for n in 1..=*n_max {
                for &p in &grid {
                    let (a, b) = crplab::verify_block_norms(n, p)?;
                    outcomes.push(a);
                    outcomes.push(b);
                }
            }
            for n in 1..=*n_max {
                outcomes.push(crplab::verify_oh_transpose(n)?);
                outcomes.push(crplab::verify_oh_consistency(n)?);
            }
            for n in 1..=*n_max {
                let s1 = crplab::verify_s1_contraction(n, *trials, cli.seed.wrapping_add(n as u64))?;
                outcomes.push(s1.to_outcome());
            }
            for n in 1..=*n_max {
                outcomes.push(crplab::verify_cb_transpose(n)?);
            }
            let all_pass = outcomes.iter().all(|o| o.pass);
            let doc = provenance(
                cli,
                "verify lemmas",
                json!({"n_max": n_max, "p_grid": p_grid, "trials": trials}),
            );
            let payload = json!({
                "outcomes": outcomes,
                "all_pass": all_pass,
            });
            emit(cli, &json_doc(doc, "result", payload))?;
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::CrpRatio { p, n_range } => {
            let p = parse_p(p)?;
            let ns = parse_n_range(n_range)?;
            let cfg = optimizer_config(cli);
            let report = crplab::crp_ratio_campaign(p, &ns, &cfg)?;
            match cli.output_format {
                Some(OutputFormat::Csv) => emit(cli, &report.to_csv())?,
                _ => {
                    let doc = provenance(cli, "crp-ratio", json!({"p": p, "n_range": n_range}));
                    emit(cli, &json_doc(doc, "result", serde_json::to_value(&report)?))?;
                }
            }
            Ok(0)
        }
        Command::Sandwich { p, n } => {
            require_json(cli, "sandwich")?;
            let p = parse_p(p)?;
            let cfg = optimizer_config(cli);
            let out = crplab::sandwich_probe(p, *n, &cfg)?;
            let doc = provenance(cli, "sandwich", json!({"p": p, "n": n}));
            emit(cli, &json_doc(doc, "result", serde_json::to_value(&out)?))?;
            Ok(0)
        }
        Command::CmpCheck { samples, n, m } => {
            require_json(cli, "cmp-check")?;
            let out = crplab::cmp_random_campaign(*n, *m, *samples, cli.seed)?;
            let doc = provenance(cli, "cmp-check", json!({"samples": samples, "n": n, "m": m}));
            let pass = out.pass;
            emit(cli, &json_doc(doc, "result", serde_json::to_value(&out)?))?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_range_parsing() {
        assert_eq!(parse_n_range("2..6").unwrap(), vec![2, 3, 4, 5, 6]);
        assert_eq!(parse_n_range("3..3").unwrap(), vec![3]);
        assert!(parse_n_range("6..2").is_err());
        assert!(parse_n_range("0..2").is_err());
        assert!(parse_n_range("2").is_err());
        assert!(parse_n_range("a..b").is_err());
    }

    #[test]
    fn p_grid_parsing() {
        let grid = parse_p_grid("1,1.5,3,4,inf").unwrap();
        assert_eq!(grid.len(), 5);
        assert_eq!(grid[4], PExponent::Infinity);
        assert!(parse_p_grid("1,zz").is_err());
    }

    #[test]
    fn unknown_arguments_exit_2() {
        assert_eq!(run(["opspace", "no-such-command"]), 2);
        assert_eq!(run(["opspace", "schatten", "--nope", "x"]), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(["opspace", "--help"]), 0);
    }

    #[test]
    fn ratio_at_p_two_exits_2() {
        assert_eq!(run(["opspace", "crp-ratio", "--p", "2", "--n-range", "2..4"]), 2);
    }

    #[test]
    fn missing_matrix_file_exits_2() {
        assert_eq!(
            run(["opspace", "schatten", "--file", "/nonexistent/m.json", "--p", "2"]),
            2
        );
    }

    #[test]
    fn block_input_requires_exactly_one_source() {
        let input = BlockInput {
            file: None,
            family: None,
            n: None,
        };
        assert!(load_block_input(&input).is_err());
        let input = BlockInput {
            file: None,
            family: Some("A".into()),
            n: Some(3),
        };
        let x = load_block_input(&input).unwrap();
        assert_eq!(x.outer_rows(), 3);
    }
}
