//! The `vlf` command line: `capacity`, `compare`, `simulate`, `plot`.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a sweep or simulation
//! has no feasible point.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::bounds::{self, BoundsError, OptimizerSettings, SweepTable, VlfParams};
use crate::channel::{make_bec, make_bsc, Channel};
use crate::sim::{self, MessageMode, SimConfig};
use crate::to_bits;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vlf", version, about = "ATR bounds and simulation for variable-length stop-feedback codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print capacity, a0 and dispersion of a channel.
    Capacity(CapacityArgs),
    /// Tabulate the VLF bound, its approximation and the no-feedback rate against delay.
    Compare(CompareArgs),
    /// Monte Carlo run of the random-coding scheme.
    Simulate(SimulateArgs),
    /// Render a `compare` CSV as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ChannelArgs {
    /// Binary symmetric channel with this crossover probability.
    #[arg(long)]
    pub bsc: Option<f64>,
    /// Binary erasure channel with this erasure probability.
    #[arg(long)]
    pub bec: Option<f64>,
    /// Channel file (`|A| |B|` header, transition rows, optional `input` line).
    #[arg(long)]
    pub file: Option<PathBuf>,
}

impl ChannelArgs {
    pub fn load(&self) -> Result<Channel> {
        let ch = match (self.bsc, self.bec, &self.file) {
            (Some(q), _, _) => make_bsc(q)?,
            (_, Some(p), _) => make_bec(p)?,
            (_, _, Some(path)) => Channel::from_file(path)?,
            _ => bail!("one of --bsc, --bec or --file is required"),
        };
        Ok(ch)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Target block error probability.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Decoding periods, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub d: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub l_min: u64,
    #[arg(long, default_value_t = 10_000)]
    pub l_max: u64,
    /// Drop rows whose delay L = d*l exceeds this.
    #[arg(long)]
    pub max_delay: Option<u64>,
    /// Grid density of the log-spaced l grid.
    #[arg(long, default_value_t = 32)]
    pub per_decade: usize,
    /// Use every integer l in the range instead of a log grid.
    #[arg(long)]
    pub unit_step: bool,
    /// Report nats per channel use instead of b/s/Hz.
    #[arg(long)]
    pub nats: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long)]
    pub d: u64,
    #[arg(long)]
    pub l: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Codebook size (default: the bound's M at the optimal alpha).
    #[arg(long)]
    pub m: Option<u64>,
    /// Stopping threshold in nats (default: gamma at the optimal alpha).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Always send message 1 instead of a uniform message.
    #[arg(long)]
    pub fixed_w1: bool,
    /// Worker threads (default: all cores). Does not change results.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub nats: bool,
    /// Output CSV path (stdout when omitted; the summary goes to stderr then).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// CSV produced by `compare`.
    pub csv: PathBuf,
    /// Output SVG path (default: the CSV path with an .svg extension).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Formats with 10 significant digits, `.` as decimal separator.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..10).contains(&e) {
        format!("{:.*}", (9 - e).max(0) as usize, x)
    } else {
        format!("{x:.9e}")
    }
}

fn unit_suffix(nats: bool) -> &'static str {
    if nats {
        "nats"
    } else {
        "bits"
    }
}

fn convert(v: f64, nats: bool) -> f64 {
    if nats {
        v
    } else {
        to_bits(v)
    }
}

pub fn capacity_report(ch: &Channel) -> String {
    let info = ch.info();
    let mut s = String::new();
    let dist: Vec<String> = ch.input_dist().iter().map(|&p| fmt_num(p)).collect();
    writeln!(s, "input_dist        {}", dist.join(" ")).unwrap();
    writeln!(s, "capacity_bits     {}", fmt_num(to_bits(info.capacity_nats))).unwrap();
    writeln!(s, "capacity_nats     {}", fmt_num(info.capacity_nats)).unwrap();
    writeln!(s, "a0_nats           {}", fmt_num(info.a0_nats)).unwrap();
    writeln!(s, "dispersion_nats2  {}", fmt_num(info.dispersion_nats2)).unwrap();
    s
}

/// Builds the l grid for one decoding period.
fn l_grid(args: &CompareArgs, d: u64) -> Vec<u64> {
    let mut hi = args.l_max;
    if let Some(cap) = args.max_delay {
        hi = hi.min(cap / d);
    }
    if hi < args.l_min {
        return Vec::new();
    }
    if args.unit_step {
        (args.l_min..=hi).collect()
    } else {
        bounds::log_grid(args.l_min, hi, args.per_decade)
    }
}

pub const COMPARE_COLUMNS: [&str; 7] = [
    "L",
    "d",
    "atr_vlf",
    "atr_approx",
    "atr_nofb",
    "alpha_star",
    "feasible",
];

fn compare_header(nats: bool) -> Vec<String> {
    let u = unit_suffix(nats);
    COMPARE_COLUMNS
        .iter()
        .map(|c| if c.starts_with("atr_") { format!("{c}_{u}") } else { c.to_string() })
        .collect()
}

/// Writes sweep tables as the `compare` CSV.
pub fn compare_csv(tables: &[SweepTable], nats: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(compare_header(nats))?;
    for t in tables {
        for r in &t.rows {
            let (vlf, alpha) = match &r.vlf {
                Some(b) => (fmt_num(convert(b.atr_nats_per_symbol, nats)), fmt_num(b.alpha_star)),
                None => (String::new(), String::new()),
            };
            w.write_record([
                r.delay.to_string(),
                r.d.to_string(),
                vlf,
                fmt_num(convert(r.approx, nats)),
                fmt_num(convert(r.nofb, nats)),
                alpha,
                (r.feasible() as u8).to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Runs `compare`; returns the CSV and whether every row was infeasible.
pub fn run_compare(args: &CompareArgs) -> Result<(String, bool)> {
    let ch = args.channel.load()?;
    let info = ch.info();
    if args.d.is_empty() {
        bail!("--d needs at least one value");
    }
    let opt = OptimizerSettings::default();
    let mut tables = Vec::new();
    for &d in &args.d {
        if d == 0 {
            bail!("decoding period must be positive");
        }
        let grid = l_grid(args, d);
        if grid.is_empty() {
            continue;
        }
        tables.push(bounds::sweep(&info, args.eps, d, &grid, &opt)?);
    }
    if tables.is_empty() {
        bail!("empty l grid");
    }
    let all_infeasible = tables.iter().all(SweepTable::all_infeasible);
    Ok((compare_csv(&tables, args.nats)?, all_infeasible))
}

/// Output of `simulate`: a one-row CSV plus a human-readable summary.
pub struct SimulateReport {
    pub csv: String,
    pub summary: String,
}

pub fn run_simulate(args: &SimulateArgs) -> Result<SimulateReport> {
    let ch = args.channel.load()?;
    let info = ch.info();
    let p = VlfParams::new(args.d, args.l, args.eps)?;
    let bound = match bounds::theorem1_atr(&info, &p, &OptimizerSettings::default()) {
        Ok(b) => Some(b),
        Err(BoundsError::Infeasible { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let m = match (args.m, &bound) {
        (Some(m), _) => m,
        (None, Some(b)) if !b.m_star.saturated => b.m_star.m,
        (None, Some(_)) => bail!("bound codebook size exceeds 2^64; pass --m"),
        (None, None) => return Err(anyhow!(Infeasible)),
    };
    let gamma = match (args.gamma, &bound) {
        (Some(g), _) => g,
        (None, Some(b)) => b.gamma_nats,
        (None, None) => return Err(anyhow!(Infeasible)),
    };
    let mut cfg = SimConfig::new(ch, m, args.d, args.l, gamma, args.trials, args.seed);
    if args.fixed_w1 {
        cfg = cfg.with_message_mode(MessageMode::FixedW1);
    }
    let threads = args.threads.unwrap_or_else(rayon::current_num_threads);
    let stats = sim::with_threads(threads.max(1), || sim::run_sim(&cfg))?;

    let (err_lo, err_hi) = stats.error.wilson95();
    let (lemma1_log_m, etau_cap) = bound
        .map(|b| (b.m_star.log_m, b.etau_cap))
        .unwrap_or((f64::NAN, f64::NAN));
    let u = unit_suffix(args.nats);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "m".to_string(),
        "d".into(),
        "l".into(),
        "gamma_nats".into(),
        "epsilon".into(),
        "trials".into(),
        "seed".into(),
        "errors".into(),
        "error_rate".into(),
        "error_lo95".into(),
        "error_hi95".into(),
        "mean_tau_star".into(),
        "tau_se".into(),
        format!("atr_{u}"),
        "p_no_detect".into(),
        "bound_log_m".into(),
        "bound_etau_cap".into(),
        format!("bound_atr_{u}"),
    ])?;
    w.write_record([
        m.to_string(),
        args.d.to_string(),
        args.l.to_string(),
        fmt_num(gamma),
        fmt_num(args.eps),
        args.trials.to_string(),
        args.seed.to_string(),
        stats.error.count.to_string(),
        fmt_num(stats.error.estimate()),
        fmt_num(err_lo),
        fmt_num(err_hi),
        fmt_num(stats.mean_tau_star),
        fmt_num(stats.tau_std_err),
        fmt_num(convert(stats.atr_estimate, args.nats)),
        fmt_num(stats.no_detect.estimate()),
        fmt_num(lemma1_log_m),
        fmt_num(etau_cap),
        fmt_num(convert(bound.map_or(f64::NAN, |b| b.atr_nats_per_symbol), args.nats)),
    ])?;
    let csv = String::from_utf8(w.into_inner()?)?;

    let mut s = String::new();
    writeln!(s, "M = {m}, d = {}, l = {}, gamma = {} nats, trials = {}", args.d, args.l, fmt_num(gamma), args.trials)?;
    writeln!(
        s,
        "error_rate        {} (95% Wilson [{}, {}])",
        fmt_num(stats.error.estimate()),
        fmt_num(err_lo),
        fmt_num(err_hi)
    )?;
    writeln!(s, "mean_tau_star     {} (se {})", fmt_num(stats.mean_tau_star), fmt_num(stats.tau_std_err))?;
    writeln!(s, "atr_{u}          {}", fmt_num(convert(stats.atr_estimate, args.nats)))?;
    writeln!(s, "p_no_detect       {}", fmt_num(stats.no_detect.estimate()))?;
    if let Some(b) = bound {
        writeln!(s, "bound: ln M = {}, E[tau*] cap = {}, ATR = {} {u}", fmt_num(b.m_star.log_m), fmt_num(b.etau_cap), fmt_num(convert(b.atr_nats_per_symbol, args.nats)))?;
        let pass = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(s, "error_rate_upper95 <= epsilon: {}", pass(err_hi <= args.eps))?;
        writeln!(
            s,
            "mean_tau_star <= etau_cap + 3se: {}",
            pass(stats.mean_tau_star <= b.etau_cap + 3.0 * stats.tau_std_err)
        )?;
    } else {
        writeln!(s, "bound: infeasible at L = {}", p.delay())?;
    }
    Ok(SimulateReport { csv, summary: s })
}

#[derive(Debug)]
struct Infeasible;

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no admissible alpha at this delay; pass --m and --gamma")
    }
}

impl std::error::Error for Infeasible {}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Series {
    Vlf,
    Approx,
    Nofb,
}

impl Series {
    const ALL: [Series; 3] = [Series::Vlf, Series::Approx, Series::Nofb];

    fn label(self) -> &'static str {
        match self {
            Series::Vlf => "VLF bound",
            Series::Approx => "approximation",
            Series::Nofb => "no feedback",
        }
    }

    fn dash(self) -> &'static str {
        match self {
            Series::Vlf => "",
            Series::Approx => " stroke-dasharray=\"6 4\"",
            Series::Nofb => " stroke-dasharray=\"2 3\"",
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Curve {
    series: Series,
    d: u64,
    points: Vec<(f64, f64)>,
}

/// Parses a `compare` CSV into curves, one per `(series, d)`.
fn read_curves(text: &str) -> Result<(Vec<Curve>, String)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().context("reading CSV header")?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let unit = if col("atr_vlf_bits").is_some() { "bits" } else { "nats" };
    let need = |name: String| col(&name).ok_or_else(|| anyhow!("CSV is missing column `{name}`"));
    let i_l = need("L".into())?;
    let i_d = need("d".into())?;
    let i_series = [
        need(format!("atr_vlf_{unit}"))?,
        need(format!("atr_approx_{unit}"))?,
        need(format!("atr_nofb_{unit}"))?,
    ];

    let mut curves: Vec<Curve> = Vec::new();
    let mut rows = 0usize;
    for rec in r.records() {
        let rec = rec.context("reading CSV row")?;
        rows += 1;
        let big_l: f64 = rec[i_l].parse().with_context(|| format!("bad L `{}`", &rec[i_l]))?;
        let d: u64 = rec[i_d].parse().with_context(|| format!("bad d `{}`", &rec[i_d]))?;
        for (series, &i) in Series::ALL.iter().zip(&i_series) {
            let cell = rec[i].trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().with_context(|| format!("bad value `{cell}`"))?;
            if v.is_nan() || v < 0.0 {
                continue;
            }
            let pos = curves.iter().position(|c| c.series == *series && c.d == d);
            let curve = match pos {
                Some(p) => &mut curves[p],
                None => {
                    curves.push(Curve { series: *series, d, points: Vec::new() });
                    curves.last_mut().unwrap()
                }
            };
            curve.points.push((big_l, v));
        }
    }
    if rows == 0 {
        bail!("CSV has no data rows");
    }
    curves.sort_by_key(|c| (c.d, c.series));
    Ok((curves, unit.to_string()))
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let f = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    f * mag
}

/// Renders a `compare` CSV as a self-contained SVG (log-scaled delay axis).
pub fn render_svg(csv_text: &str) -> Result<String> {
    let (curves, unit) = read_curves(csv_text)?;
    let pts = || curves.iter().flat_map(|c| c.points.iter());
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_hi: f64 = 0.0;
    for &(x, y) in pts() {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() {
        bail!("CSV has no plottable values");
    }
    let (mut lx0, mut lx1) = (x_lo.max(1.0).log10().floor(), x_hi.max(1.0).log10().ceil());
    if lx1 <= lx0 {
        lx1 = lx0 + 1.0;
    }
    if lx0 < 0.0 {
        lx0 = 0.0;
    }
    let y_step = if y_hi > 0.0 { nice_step(y_hi) } else { 0.1 };
    let y_top = (y_hi / y_step).ceil().max(1.0) * y_step;

    let (w, h) = (780.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 210.0, 30.0, 50.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let sx = |x: f64| ml + (x.max(1.0).log10() - lx0) / (lx1 - lx0) * pw;
    let sy = |y: f64| mt + ph - (y / y_top).clamp(0.0, 1.0) * ph;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#)?;
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#)?;
    writeln!(s, r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##)?;

    let mut decade = lx0 as i32;
    while decade as f64 <= lx1 {
        let x = ml + (decade as f64 - lx0) / (lx1 - lx0) * pw;
        writeln!(s, r##"<line x1="{x:.2}" y1="{mt}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, mt + ph)?;
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{decade}</text>"#, mt + ph + 18.0)?;
        decade += 1;
    }
    let ticks = (y_top / y_step).round() as i32;
    for i in 0..=ticks {
        let v = i as f64 * y_step;
        let y = sy(v);
        writeln!(s, r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, ml + pw)?;
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 6.0, y + 4.0, fmt_tick(v))?;
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">delay L (channel uses)</text>"#, ml + pw / 2.0, h - 10.0)?;
    let ylabel = if unit == "bits" { "ATR (b/s/Hz)" } else { "ATR (nats/use)" };
    writeln!(s, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#, mt + ph / 2.0, mt + ph / 2.0)?;

    let mut ds: Vec<u64> = curves.iter().map(|c| c.d).collect();
    ds.dedup();
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[ds.iter().position(|&d| d == c.d).unwrap() % PALETTE.len()];
        let mut pts = c.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{} points="{}"/>"#,
            c.series.dash(),
            path.join(" ")
        )?;
        let ly = mt + 14.0 + 18.0 * k as f64;
        let lx = ml + pw + 12.0;
        writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{}/>"#,
            lx + 24.0,
            c.series.dash()
        )?;
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}, d={}</text>"#, lx + 30.0, ly + 4.0, c.series.label(), c.d)?;
    }
    writeln!(s, "</svg>")?;
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() { "0".to_string() } else { s.to_string() }
}

fn default_svg_path(csv: &Path) -> PathBuf {
    csv.with_extension("svg")
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => out.write_all(text.as_bytes()).context("writing output"),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Capacity(a) => {
            let ch = a.channel.load()?;
            out.write_all(capacity_report(&ch).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Compare(a) => {
            let (csv, all_infeasible) = run_compare(&a)?;
            write_or_print(a.out.as_deref(), &csv, out)?;
            if all_infeasible {
                writeln!(err, "no feasible row: epsilon <= exp(-C*L/2) at every point")?;
                Ok(EXIT_INFEASIBLE)
            } else {
                Ok(EXIT_OK)
            }
        }
        Command::Simulate(a) => {
            let report = run_simulate(&a)?;
            match &a.out {
                Some(p) => {
                    write_or_print(Some(p), &report.csv, out)?;
                    out.write_all(report.summary.as_bytes())?;
                }
                None => {
                    out.write_all(report.csv.as_bytes())?;
                    err.write_all(report.summary.as_bytes())?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Plot(a) => {
            let text = std::fs::read_to_string(&a.csv)
                .with_context(|| format!("reading {}", a.csv.display()))?;
            let svg = render_svg(&text)?;
            let path = a.out.clone().unwrap_or_else(|| default_svg_path(&a.csv));
            write_or_print(Some(&path), &svg, out)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) if e.is::<Infeasible>() => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INFEASIBLE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INPUT
        }
    }
}
