use clap::{Parser, Subcommand, ValueEnum};
use cpb_optomech::circuit::{self, DEFAULT_CK_GATE};
use cpb_optomech::fock;
use cpb_optomech::sweep::{
    self, compare_models, emit, eval_point, report_csv, report_json, report_summary,
    resolve_jobs, run_sweep, Format, SweepConfig, SweepError,
};
use cpb_optomech::BiasPoint;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 1;
const EXIT_FLAGS: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "cpb-optomech", version, about = "Cooper-pair-box optomechanical couplings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads, 0 for all cores. CPB_OPTOMECH_JOBS takes precedence.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Every configured model at one bias point.
    Point {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "n-g", allow_hyphen_values = true)]
        n_g: f64,
        #[arg(long, allow_hyphen_values = true)]
        f: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid sweep written as CSV or JSON.
    Sweep(Common),
    /// Ratio tables between models with a pass/fail against the tolerance bands.
    Compare(Common),
    /// Dressed levels and couplings from exact diagonalization at one point.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "n-g", allow_hyphen_values = true)]
        n_g: f64,
        #[arg(long, allow_hyphen_values = true)]
        f: f64,
    },
    /// Parse and check a config, print its fingerprint.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

struct Failure(u8, String);

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        let code = match e {
            SweepError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure(code, e.to_string())
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure(EXIT_IO, format!("i/o on {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn point(config: &Path, n_g: f64, f: f64, out: Option<&Path>) -> Result<u8, Failure> {
    let cfg = SweepConfig::load(config)?;
    let bias = BiasPoint::new(n_g, f);
    let mut sets = Vec::new();
    let mut flagged = false;
    for (ratio, v) in cfg.parameter_sets()? {
        let rows = eval_point(&v, &bias, &cfg.models, &cfg.fock);
        flagged |= rows.iter().any(|r| r.is_flagged());
        let ck = match circuit::effective_ck_hamiltonian(&v, &bias, DEFAULT_CK_GATE) {
            Ok(h) => json!(h),
            Err(e) => json!({ "unavailable": e.to_string() }),
        };
        sets.push(json!({ "ej_ec_ratio": ratio, "rows": rows, "cross_kerr": ck }));
    }
    let doc = json!({ "fingerprint": cfg.fingerprint(), "n_g": n_g, "f": f, "results": sets });
    write_or_print(out, &pretty(&doc))?;
    Ok(if flagged { EXIT_FLAGS } else { 0 })
}

fn sweep_cmd(c: &Common) -> Result<u8, Failure> {
    let cfg = SweepConfig::load(&c.config)?;
    let format = c
        .format
        .map(Format::from)
        .or(cfg.output.as_ref().map(|o| o.format))
        .unwrap_or(Format::Csv);
    let path = c.out.clone().or(cfg.output.as_ref().map(|o| o.path.clone()));
    if path.is_none() && format == Format::Csv && cfg.ej_ec_ratios.is_some() {
        return Err(Failure(
            EXIT_CONFIG,
            "ratio mode writes one CSV per ratio: give --out or an output path".into(),
        ));
    }
    let out = run_sweep(&cfg, resolve_jobs(c.jobs))?;
    match &path {
        Some(p) => {
            for written in emit(&out, p, format)? {
                eprintln!("wrote {}", written.display());
            }
        }
        None => match format {
            Format::Json => print!("{}", sweep::output_json(&out)),
            Format::Csv => print!("{}", sweep::table_csv(&out.tables[0])),
        },
    }
    eprintln!("fingerprint {}", out.fingerprint);
    let mut code = 0;
    for t in &out.tables {
        let frac = t.flagged_fraction();
        eprintln!(
            "{}{} rows, {:.2}% flagged",
            t.ej_ec_ratio.map_or_else(String::new, |r| format!("EJ/EC={r}: ")),
            t.rows.len(),
            100.0 * frac
        );
        if cfg.flag_gate.is_some_and(|g| frac > g) {
            code = EXIT_FLAGS;
        }
    }
    Ok(code)
}

fn compare_cmd(c: &Common) -> Result<u8, Failure> {
    let cfg = SweepConfig::load(&c.config)?;
    let report = compare_models(&cfg, resolve_jobs(c.jobs))?;
    let text = match c.format.map(Format::from).unwrap_or(Format::Csv) {
        Format::Csv => report_csv(&report),
        Format::Json => report_json(&report),
    };
    write_or_print(c.out.as_deref(), &text)?;
    eprint!("{}", report_summary(&report));
    Ok(if report.pass { 0 } else { EXIT_FLAGS })
}

fn oracle(config: &Path, n_g: f64, f: f64) -> Result<u8, Failure> {
    let cfg = SweepConfig::load(config)?;
    let bias = BiasPoint::new(n_g, f);
    let mut sets = Vec::new();
    let mut failed = false;
    for (ratio, v) in cfg.parameter_sets()? {
        let entry = match fock::extract_converged(&v, &bias, &cfg.fock) {
            Ok(r) => json!({ "ej_ec_ratio": ratio, "result": r }),
            Err(e) => {
                failed = true;
                json!({ "ej_ec_ratio": ratio, "error": e.to_string() })
            }
        };
        sets.push(entry);
    }
    print!("{}", pretty(&json!({ "n_g": n_g, "f": f, "fock": cfg.fock, "results": sets })));
    Ok(if failed { EXIT_FLAGS } else { 0 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Point { config, n_g, f, out } => point(&config, n_g, f, out.as_deref()),
        Command::Sweep(c) => sweep_cmd(&c),
        Command::Compare(c) => compare_cmd(&c),
        Command::Oracle { config, n_g, f } => oracle(&config, n_g, f),
        Command::ValidateConfig { config } => {
            let cfg = SweepConfig::load(&config)?;
            println!("{}", cfg.fingerprint());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
