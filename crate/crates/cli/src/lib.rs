//! Subcommand implementations for the `derivsamp` binary.
//!
//! Every command renders a deterministic CSV whose first line is
//! `# derivsamp v1,` followed by the serialized [`RunConfig`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_traits::Zero;
use rayon::prelude::*;

use derivsamp::kernel::{inv_symbol_coeffs, DEFAULT_KERNEL_TOL};
use derivsamp::laurent::DEFAULT_CIRCLE_TOL;
use derivsamp::sampler::{approx_error, frame_bounds, verify_sampling_inequality};
use derivsamp::signals::SignalSpec;
use derivsamp::smoothness::{fit_order, tau_default};
use derivsamp::symbol::{check_cis, parse_rational, scan_assumption1, table_polynomial};
use derivsamp::{Kappa, Rational, SplineOrder};

/// Largest `m` emitted by `tables`.
pub const TABLE_M_MAX: u32 = 9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] derivsamp::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("signal csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code: 1 not CIS, 2 usage, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use derivsamp::Error as E;
        match self {
            CliError::Usage(_) | CliError::Csv(_) | CliError::Io { .. } => 2,
            CliError::Core(E::NotCis(_)) => 1,
            CliError::Core(E::InvalidOrder { .. } | E::InvalidKappa(_) | E::Parse(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Tables,
    Check,
    KernelDump,
    Approx,
    Tau,
    Scan,
    Bounds,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Tables => "tables",
            Command::Check => "check",
            Command::KernelDump => "kernel-dump",
            Command::Approx => "approx",
            Command::Tau => "tau",
            Command::Scan => "scan",
            Command::Bounds => "bounds",
        }
    }
}

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(name = "derivsamp", version, about = "Derivative sampling in B-spline spaces")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Spline order.
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    /// Sample shift as `p/q`.
    #[arg(long, default_value = "0")]
    pub a: String,
    /// Number of derivative channels and sampling period.
    #[arg(long, default_value_t = 2)]
    pub rho: u32,
    /// Dilations, comma separated; entries may read `N*sqrt(7)`.
    #[arg(long = "W", default_value = "4,8,16,32,64")]
    pub w: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Catalog id (`f1`, `f2`, `f3`, `one`, `poly:c0;c1;...`).
    #[arg(long, default_value = "f1")]
    pub signal: String,
    /// Tabulated signal with header `t,f,f1,...`; overrides `--signal`.
    #[arg(long)]
    pub signal_csv: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Kernel truncation tolerance.
    #[arg(long, default_value_t = DEFAULT_KERNEL_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points per period for eigenvalue bounds.
    #[arg(long, default_value_t = 1024)]
    pub grid_n: usize,
    /// Order of the modulus of smoothness.
    #[arg(long, default_value_t = 1)]
    pub r: u32,
    /// Comma separated `delta` values for `tau`.
    #[arg(long, default_value = "0.2,0.1,0.05,0.025")]
    pub delta: String,
    /// Derivative of the signal fed to `tau`.
    #[arg(long, default_value_t = 0)]
    pub deriv: usize,
    #[arg(long, default_value_t = 9)]
    pub m_max: u32,
    #[arg(long, default_value_t = 4)]
    pub rho_max: u32,
    /// Random elements tested by `bounds`.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
}

impl RunConfig {
    /// Config with defaults for `command`.
    pub fn new(command: Command) -> Self {
        Self::parse_from(["derivsamp", command.name()])
    }

    /// Stable serialization of everything except the output path.
    pub fn serialize(&self) -> String {
        let signal = match &self.signal_csv {
            Some(path) => format!("csv:{}", path.display()),
            None => self.signal.clone(),
        };
        format!(
            "command={},m={},a={},rho={},W={},p={},signal={},tol={:e},seed={},grid_n={},r={},delta={},deriv={},m_max={},rho_max={},trials={}",
            self.command.name(),
            self.m,
            self.a,
            self.rho,
            self.w.replace(',', ";"),
            self.p,
            signal,
            self.tol,
            self.seed,
            self.grid_n,
            self.r,
            self.delta.replace(',', ";"),
            self.deriv,
            self.m_max,
            self.rho_max,
            self.trials,
        )
    }

    fn header(&self) -> String {
        format!("# derivsamp v1,{}\n", self.serialize())
    }

    pub fn kappa(&self) -> Result<Kappa, CliError> {
        let a = parse_rational(&self.a)?;
        Ok(Kappa::new(SplineOrder::new(self.m)?, a, self.rho)?)
    }

    pub fn signal(&self) -> Result<SignalSpec, CliError> {
        match &self.signal_csv {
            Some(path) => read_signal_csv(path),
            None => Ok(SignalSpec::by_id(&self.signal)?),
        }
    }
}

/// Parses one dilation: a number, `sqrt(7)`, or `N*sqrt(7)`.
pub fn parse_w(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let bad = || CliError::Usage(format!("bad --W entry `{s}`"));
    let sqrt_arg = |t: &str| -> Result<f64, CliError> {
        let inner = t.strip_prefix("sqrt(").and_then(|u| u.strip_suffix(')')).ok_or_else(bad)?;
        Ok(inner.trim().parse::<f64>().map_err(|_| bad())?.sqrt())
    };
    let w = match s.split_once('*') {
        Some((n, root)) => n.trim().parse::<f64>().map_err(|_| bad())? * sqrt_arg(root.trim())?,
        None if s.starts_with("sqrt(") => sqrt_arg(s)?,
        None => s.parse::<f64>().map_err(|_| bad())?,
    };
    if !(w > 0.0) || !w.is_finite() {
        return Err(bad());
    }
    Ok(w)
}

/// Parses a comma separated list of dilations.
pub fn parse_w_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_w).collect()
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v = t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad {flag} entry `{t}`")))?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(CliError::Usage(format!("{flag} entries must be positive")))
            }
        })
        .collect()
}

/// Reads a tabulated signal: header `t,f,f1,...`, one row per node.
pub fn read_signal_csv(path: &Path) -> Result<SignalSpec, CliError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let width = reader.headers()?.len();
    if width < 2 {
        return Err(CliError::Usage("signal csv needs columns t,f[,f1,...]".into()));
    }
    let mut t = Vec::new();
    let mut columns = vec![Vec::new(); width - 1];
    for record in reader.records() {
        let record = record?;
        let mut values = record.iter().map(|x| {
            x.parse::<f64>().map_err(|_| CliError::Usage(format!("non-numeric entry `{x}` in signal csv")))
        });
        t.push(values.next().ok_or_else(|| CliError::Usage("empty row in signal csv".into()))??);
        for col in columns.iter_mut() {
            col.push(values.next().ok_or_else(|| CliError::Usage("short row in signal csv".into()))??);
        }
    }
    let id = format!("csv:{}", path.display());
    Ok(SignalSpec::tabulated(id, t, columns)?)
}

/// Result of one command: the CSV body and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: String,
    pub code: i32,
}

/// Runs `cfg` and returns its CSV.
pub fn run(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.command {
        Command::Tables => cmd_tables(cfg),
        Command::Check => cmd_check(cfg),
        Command::KernelDump => cmd_kernel_dump(cfg),
        Command::Approx => cmd_approx(cfg),
        Command::Tau => cmd_tau(cfg),
        Command::Scan => cmd_scan(cfg),
        Command::Bounds => cmd_bounds(cfg),
    }
}

fn integer_coeffs(coeffs: &[Rational]) -> Vec<String> {
    coeffs.iter().map(|c| c.numer().to_string()).collect()
}

/// Exact table polynomials for `kappa = (Q_m, 0, 2)` (`table_id` 1) and
/// `(Q_m, 1/2, 2)` (`table_id` 2), constant coefficient first.
pub fn table_rows() -> Result<Vec<(u32, u32, Vec<String>)>, CliError> {
    let mut rows = Vec::new();
    for (table, a) in [(1u32, Rational::zero()), (2, Rational::new(1.into(), 2.into()))] {
        for m in 3..=TABLE_M_MAX {
            let kappa = Kappa::new(SplineOrder::new(m)?, a.clone(), 2)?;
            let poly = table_polynomial(&kappa)?;
            rows.push((table, m, integer_coeffs(poly.coeffs())));
        }
    }
    Ok(rows)
}

fn cmd_tables(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut csv = cfg.header();
    csv.push_str("table_id,m,degree,coefficients\n");
    for (table, m, coeffs) in table_rows()? {
        let _ = writeln!(csv, "{table},{m},{},{}", coeffs.len() - 1, coeffs.join(","));
    }
    Ok(Output { csv, code: 0 })
}

fn cmd_check(cfg: &RunConfig) -> Result<Output, CliError> {
    let kappa = cfg.kappa()?;
    let report = check_cis(&kappa, DEFAULT_CIRCLE_TOL);
    let bounds = frame_bounds(&kappa, cfg.grid_n);
    let cert = &report.certificate;
    let mut csv = cfg.header();
    csv.push_str("key,value\n");
    let rows: [(&str, String); 12] = [
        ("kappa", kappa.to_string()),
        ("det", report.det.to_string()),
        ("min_modulus", format!("{:e}", cert.min_modulus)),
        ("argmin_t", cert.argmin_t.to_string()),
        ("root_margin", format!("{:e}", cert.root_margin)),
        ("circle_roots", cert.circle_roots.to_string()),
        ("verdict", cert.verdict.to_string()),
        ("is_cis", report.is_cis.to_string()),
        ("a_kappa", bounds.a_kappa.to_string()),
        ("b_kappa", bounds.b_kappa.to_string()),
        ("riesz_lower", bounds.riesz_lower.to_string()),
        ("upper_frame", bounds.upper_frame.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(csv, "{k},\"{v}\"");
    }
    let code = if report.inconclusive() {
        3
    } else if report.is_cis {
        0
    } else {
        1
    };
    Ok(Output { csv, code })
}

fn cmd_kernel_dump(cfg: &RunConfig) -> Result<Output, CliError> {
    let table = inv_symbol_coeffs(&cfg.kappa()?, cfg.tol)?;
    let mut csv = cfg.header();
    let _ = writeln!(
        csv,
        "# radius={},tail_bound={:e},decay_ratio={},max_imag={:e},grid={}",
        table.radius, table.tail_bound, table.decay_ratio, table.max_imag, table.grid
    );
    csv.push_str(&table.to_csv());
    Ok(Output { csv, code: 0 })
}

fn undefined_hint(err: derivsamp::Error) -> CliError {
    match err {
        derivsamp::Error::UndefinedPoint { signal, order, t } => CliError::Usage(format!(
            "a sample node hits t={t}, where derivative {order} of `{signal}` is undefined; \
             choose an irrational dilation such as 3*sqrt(7)"
        )),
        other => other.into(),
    }
}

fn cmd_approx(cfg: &RunConfig) -> Result<Output, CliError> {
    let kappa = cfg.kappa()?;
    let signal = cfg.signal()?;
    let ws = parse_w_list(&cfg.w)?;
    let table = inv_symbol_coeffs(&kappa, cfg.tol)?;
    let errors: Vec<f64> = ws
        .par_iter()
        .map(|&w| approx_error(&table, &signal, w, cfg.p))
        .collect::<Result<_, _>>()
        .map_err(undefined_hint)?;
    let mut csv = cfg.header();
    csv.push_str("W,error,log10W,log10err\n");
    for (w, e) in ws.iter().zip(&errors) {
        let _ = writeln!(csv, "{w},{e:e},{},{}", w.log10(), e.log10());
    }
    if ws.len() >= 4 {
        let pairs: Vec<(f64, f64)> = ws.iter().zip(&errors).map(|(w, e)| (1.0 / w, *e)).collect();
        let (slope, r2) = fit_order(&pairs)?;
        let _ = writeln!(csv, "# slope={slope},r2={r2}");
    }
    Ok(Output { csv, code: 0 })
}

fn cmd_tau(cfg: &RunConfig) -> Result<Output, CliError> {
    let signal = cfg.signal()?;
    let deltas = parse_f64_list(&cfg.delta, "--delta")?;
    let taus: Vec<f64> = deltas
        .iter()
        .map(|&d| tau_default(&signal, cfg.deriv, cfg.r, d, cfg.p).map(|t| t.value))
        .collect::<Result<_, _>>()?;
    let mut csv = cfg.header();
    csv.push_str("delta,tau\n");
    for (d, t) in deltas.iter().zip(&taus) {
        let _ = writeln!(csv, "{d},{t:e}");
    }
    if deltas.len() >= 4 && taus.iter().all(|&t| t > 0.0) {
        let pairs: Vec<(f64, f64)> = deltas.iter().copied().zip(taus.iter().copied()).collect();
        let (slope, r2) = fit_order(&pairs)?;
        let _ = writeln!(csv, "# slope={slope},r2={r2}");
    }
    Ok(Output { csv, code: 0 })
}

fn cmd_scan(cfg: &RunConfig) -> Result<Output, CliError> {
    let rows = scan_assumption1(cfg.m_max, cfg.rho_max, DEFAULT_CIRCLE_TOL)?;
    let mut csv = cfg.header();
    csv.push_str("rho,m,a,verdict,is_cis,predicted,agrees\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.kappa.rho(),
            row.kappa.m().get(),
            row.kappa.a(),
            row.verdict,
            row.is_cis,
            row.predicted,
            row.agrees()
        );
    }
    Ok(Output { csv, code: 0 })
}

fn cmd_bounds(cfg: &RunConfig) -> Result<Output, CliError> {
    let kappa = cfg.kappa()?;
    let bounds = frame_bounds(&kappa, cfg.grid_n);
    let check = verify_sampling_inequality(&kappa, &bounds, cfg.trials, cfg.seed)?;
    let mut csv = cfg.header();
    csv.push_str("a_kappa,b_kappa,riesz_lower,upper_frame,min_ratio,max_ratio,violations,trials\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        bounds.a_kappa,
        bounds.b_kappa,
        bounds.riesz_lower,
        bounds.upper_frame,
        check.min_ratio,
        check.max_ratio,
        check.violations,
        check.trials
    );
    Ok(Output { csv, code: if check.violations == 0 { 0 } else { 3 } })
}

/// Writes `csv` to `out`, or stdout when `out` is `None`.
pub fn emit(csv: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
