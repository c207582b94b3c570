//! Command-line front end: lattice configuration, dispatch, baselines and
//! report emission.
//!
//! Lattices start from the defaults in [`crate::sweeps`], then take keys from
//! the config file (a `[general]` section and a section named after the
//! target), then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::baseline::Baselines;
use crate::bessel::Order;
use crate::error::{Error, Result};
use crate::operators::{IntervalFamily, Piece};
use crate::report::{emit, Format, SweepReport};
use crate::sweeps::*;

#[derive(Debug, Parser)]
#[command(name = "gslab", version, about = "Numerical checks and sweeps for the radial Schrödinger maximal estimate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suite of one module.
    Check { target: CheckTarget },
    /// Run one sweep.
    Sweep { target: SweepTarget },
    /// Run sweeps and store their reports as baselines.
    FreezeBaseline {
        /// Sweeps to freeze; all of them when omitted.
        targets: Vec<BaselineTarget>,
    },
    /// Run one sweep and gate it against its frozen baseline.
    Compare { target: BaselineTarget },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckTarget {
    Bessel,
    Oscillatory,
    Phase,
    Operators,
    Maximal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepTarget {
    Norms,
    Bracket,
    Barcelo,
    Sharpness,
    Beta,
}

/// Sweeps that carry a frozen baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineTarget {
    Barcelo,
    Envelopes,
    Oscillatory,
    Phase,
    Norms,
    Sharpness,
    Beta,
}

impl BaselineTarget {
    pub const ALL: [BaselineTarget; 7] = [
        BaselineTarget::Barcelo,
        BaselineTarget::Envelopes,
        BaselineTarget::Oscillatory,
        BaselineTarget::Phase,
        BaselineTarget::Norms,
        BaselineTarget::Sharpness,
        BaselineTarget::Beta,
    ];

    fn name(self) -> &'static str {
        match self {
            BaselineTarget::Barcelo => "barcelo",
            BaselineTarget::Envelopes => "envelopes",
            BaselineTarget::Oscillatory => "oscillatory",
            BaselineTarget::Phase => "phase",
            BaselineTarget::Norms => "norms",
            BaselineTarget::Sharpness => "sharpness",
            BaselineTarget::Beta => "beta",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

/// Lattice and output flags. Lists are `a,b,c` or geometric `start:ratio:end`.
#[derive(Debug, Default, clap::Args)]
pub struct Flags {
    /// Orders ν: `a,b,…` or geometric `start:ratio:end`.
    #[arg(long, global = true)]
    pub nu: Option<String>,
    /// Decay exponents α, same list syntax.
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// Exponents β for the β-probe.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    /// Near-mode η values for the phase checks.
    #[arg(long, global = true)]
    pub eta: Option<String>,
    /// γ values for the phase checks.
    #[arg(long, global = true)]
    pub gamma: Option<String>,
    /// `full`, `t1`…`t6`, comma separated, or `all`.
    #[arg(long, global = true)]
    pub piece: Option<String>,
    /// `dyadic`, `lo:hi,…` (fixed) or `nu*lo:hi,…` (in units of ν).
    #[arg(long, global = true)]
    pub interval: Option<String>,
    /// Number of t-grid points.
    #[arg(long, global = true)]
    pub tgrid: Option<String>,
    /// Alternating-maximization rounds.
    #[arg(long, global = true)]
    pub rounds: Option<String>,
    /// Report path; `.csv` selects CSV unless --format says otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Baseline store (JSON).
    #[arg(long, global = true)]
    pub baseline: Option<PathBuf>,
    /// RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// `key = value` file with `[section]` headers; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Merged configuration keys for one target.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub values: BTreeMap<String, String>,
}

impl Settings {
    /// `[general]` keys, then keys of `[section]`, then flags.
    pub fn resolve(flags: &Flags, section: &str) -> Result<Settings> {
        let mut values = BTreeMap::new();
        if let Some(path) = &flags.config {
            let ini = ini::Ini::load_from_file(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            for name in [None, Some("general"), Some(section)] {
                if let Some(props) = ini.section(name) {
                    for (k, v) in props.iter() {
                        values.insert(k.trim().to_string(), v.trim().to_string());
                    }
                }
            }
        }
        let pairs = [
            ("nu", &flags.nu),
            ("alpha", &flags.alpha),
            ("beta", &flags.beta),
            ("eta", &flags.eta),
            ("gamma", &flags.gamma),
            ("piece", &flags.piece),
            ("interval", &flags.interval),
            ("tgrid", &flags.tgrid),
            ("rounds", &flags.rounds),
            ("seed", &flags.seed),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(Settings { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_list(v).map_err(|e| Error::Config(format!("--{key}: {e}")))).transpose()
    }

    fn orders(&self, key: &str) -> Result<Option<Vec<Order>>> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) => v
                .into_iter()
                .map(|x| Order::new(x).map_err(|e| Error::Config(format!("--{key}: {e}"))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn scalar(&self, key: &str) -> Result<Option<f64>> {
        Ok(self.list(key)?.map(|v| v[0]))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| v.parse::<usize>().map_err(|_| Error::Config(format!("--{key}: expected a nonnegative integer, got {v:?}"))))
            .transpose()
    }

    fn seed(&self) -> Result<Option<u64>> {
        self.get("seed")
            .map(|v| v.parse::<u64>().map_err(|_| Error::Config(format!("--seed: expected an unsigned integer, got {v:?}"))))
            .transpose()
    }
}

/// `a,b,c` or geometric `start:ratio:end` (inclusive of `end` up to rounding).
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty list".into());
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    let v = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, q, b] = parts[..] else { return Err(format!("range {s:?} is not start:ratio:end")) };
        let (a, q, b) = (num(a)?, num(q)?, num(b)?);
        if !(a > 0.0 && q > 1.0 && b >= a) {
            return Err(format!("range {s:?} needs start > 0, ratio > 1, end ≥ start"));
        }
        let mut out = Vec::new();
        let mut x = a;
        while x <= b * (1.0 + 1e-12) {
            out.push(x);
            x *= q;
        }
        out
    } else {
        s.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(v)
}

pub fn parse_pieces(s: &str) -> Result<Vec<Piece>> {
    if s.trim() == "all" {
        return Ok(Piece::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse::<Piece>()).collect()
}

/// `dyadic`, `lo:hi,…` or `nu*lo:hi,…`.
pub fn parse_interval(s: &str) -> Result<IntervalFamily> {
    let s = s.trim();
    if s == "dyadic" {
        return Ok(IntervalFamily::default());
    }
    let (scaled, body) = match s.strip_prefix("nu*") {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut v = Vec::new();
    for part in body.split(',') {
        let (a, b) = part.split_once(':').ok_or_else(|| Error::Config(format!("--interval: {part:?} is not lo:hi")))?;
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("--interval: not a number: {t:?}")));
        let (a, b) = (parse(a)?, parse(b)?);
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::Config(format!("--interval: need 0 < lo < hi < ∞, got {a}:{b}")));
        }
        v.push((a, b));
    }
    Ok(if scaled { IntervalFamily::Scaled(v) } else { IntervalFamily::Fixed(v) })
}

pub fn norm_lattice(s: &Settings) -> Result<NormLattice> {
    let mut l = NormLattice::default();
    if let Some(p) = s.get("piece") {
        l.pieces = parse_pieces(p)?;
    }
    if let Some(a) = s.scalar("alpha")? {
        l.alpha = a;
    }
    if let Some(nu) = s.orders("nu")? {
        l.nu = nu;
    }
    if let Some(i) = s.get("interval") {
        l.family = parse_interval(i)?;
    }
    if let Some(t) = s.count("tgrid")? {
        l.options.grids.t_points = t;
    }
    if let Some(r) = s.count("rounds")? {
        l.options.norm.rounds = r;
    }
    if let Some(r) = s.count("r_points")? {
        l.options.grids.r_points = r;
    }
    if let Some(o) = s.count("s_order")? {
        l.options.grids.s_order = o;
    }
    if let Some(seed) = s.seed()? {
        l.options.norm.seed = seed;
    }
    Ok(l)
}

pub fn sharpness_lattice(s: &Settings) -> Result<SharpnessLattice> {
    let mut l = SharpnessLattice::default();
    if let Some(a) = s.list("alpha")? {
        l.flat.retain(|x| a.contains(x));
        l.growing.retain(|x| a.contains(x));
        l.alpha = a;
    }
    if let Some(m) = s.list("m")? {
        l.m = m;
    }
    if let Some(nu) = s.orders("nu")? {
        l.nu = nu[0];
    }
    if let Some(t) = s.count("tgrid")? {
        l.options.grids.t_points = t;
    }
    if let Some(r) = s.count("rounds")? {
        l.options.norm.rounds = r;
    }
    if let Some(seed) = s.seed()? {
        l.options.norm.seed = seed;
    }
    Ok(l)
}

pub fn beta_lattice(s: &Settings) -> Result<BetaProbeLattice> {
    let mut l = BetaProbeLattice::default();
    if let Some(b) = s.list("beta")? {
        l.growing.retain(|x| b.contains(x));
        l.bounded.retain(|x| b.contains(x));
        l.beta = b;
    }
    if let Some(nu) = s.orders("nu")? {
        l.nu = nu;
    }
    Ok(l)
}

pub fn barcelo_lattice(s: &Settings) -> Result<BarceloLattice> {
    let mut l = BarceloLattice::default();
    if let Some(nu) = s.orders("nu")? {
        l.nu = nu;
    }
    if let Some(p) = s.count("points")? {
        l.points = p;
    }
    Ok(l)
}

pub fn envelope_lattice(s: &Settings) -> Result<EnvelopeLattice> {
    let mut l = EnvelopeLattice::default();
    if let Some(nu) = s.orders("nu")? {
        l.nu = nu;
    }
    Ok(l)
}

pub fn phase_lattice(s: &Settings) -> Result<PhaseLattice> {
    let mut l = PhaseLattice::default();
    if let Some(nu) = s.orders("nu")? {
        l.near_nu = nu;
    }
    if let Some(e) = s.list("eta")? {
        l.eta = e;
    }
    if let Some(g) = s.list("gamma")? {
        l.gamma = g;
    }
    if let Some(p) = s.count("points")? {
        l.points = p;
    }
    Ok(l)
}

pub fn bracket_lattice(s: &Settings) -> Result<BracketLattice> {
    let mut l = BracketLattice::default();
    // Flags replace the near cells by the product ν × η × γ.
    if s.get("nu").is_some() || s.get("eta").is_some() || s.get("gamma").is_some() {
        let nu = s.orders("nu")?.unwrap_or_else(|| l.near.iter().map(|c| c.0).collect());
        let eta = s.list("eta")?.unwrap_or_else(|| vec![0.5]);
        let gamma = s.list("gamma")?.unwrap_or_else(|| vec![0.1]);
        l.near.clear();
        for &n in &nu {
            for &e in &eta {
                for &g in &gamma {
                    l.near.push((n, e, g));
                }
            }
        }
    }
    if let Some(p) = s.count("points")? {
        l.a_points = p;
    }
    Ok(l)
}

fn decomposition_lattice(s: &Settings) -> Result<DecompositionLattice> {
    let mut l = DecompositionLattice::default();
    if let Some(seed) = s.seed()? {
        l.seed = seed;
    }
    Ok(l)
}

fn schur_lattice(s: &Settings) -> Result<SchurLattice> {
    let mut l = SchurLattice::default();
    if let Some(seed) = s.seed()? {
        l.seed = seed;
    }
    Ok(l)
}

/// Runs one baseline-carrying sweep with the resolved settings.
pub fn run_baseline_target(t: BaselineTarget, s: &Settings, store: Option<&Baselines>) -> Result<SweepReport> {
    match t {
        BaselineTarget::Barcelo => run_barcelo(&barcelo_lattice(s)?, store),
        BaselineTarget::Envelopes => run_envelopes(&envelope_lattice(s)?, store),
        BaselineTarget::Oscillatory => run_vdc(store),
        BaselineTarget::Phase => run_phase(&phase_lattice(s)?, store),
        BaselineTarget::Norms => run_norms(&norm_lattice(s)?, store),
        BaselineTarget::Sharpness => run_sharpness(&sharpness_lattice(s)?, store),
        BaselineTarget::Beta => run_beta(&beta_lattice(s)?, store),
    }
}

fn check_reports(t: CheckTarget, s: &Settings, store: Option<&Baselines>) -> Result<Vec<SweepReport>> {
    Ok(match t {
        CheckTarget::Bessel => vec![
            run_bessel(&BesselLattice::default())?,
            run_barcelo(&barcelo_lattice(s)?, store)?,
            run_envelopes(&envelope_lattice(s)?, store)?,
        ],
        CheckTarget::Oscillatory => vec![run_vdc(store)?],
        CheckTarget::Phase => vec![run_phase(&phase_lattice(s)?, store)?, run_bracket(&bracket_lattice(s)?)?],
        CheckTarget::Operators => vec![run_decomposition(&decomposition_lattice(s)?)?, run_schur(&schur_lattice(s)?)?],
        CheckTarget::Maximal => vec![run_crosscheck(&CrosscheckLattice::default())?],
    })
}

fn sweep_report(t: SweepTarget, s: &Settings, store: Option<&Baselines>) -> Result<SweepReport> {
    match t {
        SweepTarget::Norms => run_norms(&norm_lattice(s)?, store),
        SweepTarget::Bracket => run_bracket(&bracket_lattice(s)?),
        SweepTarget::Barcelo => run_barcelo(&barcelo_lattice(s)?, store),
        SweepTarget::Sharpness => run_sharpness(&sharpness_lattice(s)?, store),
        SweepTarget::Beta => run_beta(&beta_lattice(s)?, store),
    }
}

fn load_store(path: Option<&Path>) -> Result<Option<Baselines>> {
    match path {
        None => Ok(None),
        Some(p) if !p.exists() => Err(Error::Config(format!("baseline file {} does not exist", p.display()))),
        Some(p) => Baselines::load(p).map(Some),
    }
}

/// A comparison against a store without a matching entry is a
/// configuration error; the sweeps mark it with a gate named `baseline`.
fn require_entry(rep: &SweepReport) -> Result<()> {
    if rep.gates.iter().any(|g| g.name == "baseline" && !g.passed) {
        return Err(Error::Config(format!(
            "no baseline for {} with this lattice; run freeze-baseline with the same flags",
            rep.command
        )));
    }
    Ok(())
}

fn format_of(flags: &Flags) -> Format {
    match flags.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => match flags.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Json,
        },
    }
}

/// Writes one report to `out`, or several to `out` with the command name
/// inserted before the extension.
fn write_reports(reports: &[SweepReport], flags: &Flags) -> Result<()> {
    let Some(out) = &flags.out else { return Ok(()) };
    let format = format_of(flags);
    if reports.len() == 1 {
        return emit(&reports[0], format, out);
    }
    for r in reports {
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        let ext = out.extension().and_then(|s| s.to_str()).unwrap_or(if format == Format::Csv { "csv" } else { "json" });
        emit(r, format, &out.with_file_name(format!("{stem}.{}.{ext}", r.command)))?;
    }
    Ok(())
}

fn print_summary(reports: &[SweepReport]) {
    for r in reports {
        for g in &r.gates {
            println!("{} {} {}: {}", if g.passed { "PASS" } else { "FAIL" }, r.command, g.name, g.detail);
        }
        let failed = r.rows.iter().filter(|x| x.verdict == crate::report::Verdict::Fail).count();
        if failed > 0 {
            println!("FAIL {} rows: {failed} failing rows", r.command);
        }
    }
}

/// Executes a parsed command; `Ok(true)` when every gate passed.
pub fn run(cli: &Cli) -> Result<bool> {
    let flags = &cli.flags;
    let reports = match &cli.command {
        Command::Check { target } => {
            let name = format!("{target:?}").to_lowercase();
            let s = Settings::resolve(flags, &name)?;
            let store = load_store(flags.baseline.as_deref())?;
            let reports = check_reports(*target, &s, store.as_ref())?;
            reports.iter().try_for_each(require_entry)?;
            reports
        }
        Command::Sweep { target } => {
            let name = format!("{target:?}").to_lowercase();
            let s = Settings::resolve(flags, &name)?;
            let store = load_store(flags.baseline.as_deref())?;
            let rep = sweep_report(*target, &s, store.as_ref())?;
            require_entry(&rep)?;
            vec![rep]
        }
        Command::Compare { target } => {
            let path = flags.baseline.as_deref().ok_or_else(|| Error::Config("compare needs --baseline".into()))?;
            let s = Settings::resolve(flags, target.name())?;
            let store = load_store(Some(path))?;
            let mut rep = run_baseline_target(*target, &s, store.as_ref())?;
            require_entry(&rep)?;
            if let Some(b) = store.as_ref().and_then(|st| st.get(&rep.command, &rep.command_echo)) {
                let worst = record_drift(&mut rep, b);
                rep.summary.metrics.insert("baseline_drift".into(), worst);
            }
            vec![rep]
        }
        Command::FreezeBaseline { targets } => {
            let path = flags.baseline.clone().or_else(|| flags.out.clone()).unwrap_or_else(|| PathBuf::from("baselines.json"));
            let mut store = if path.exists() { Baselines::load(&path)? } else { Baselines::default() };
            let targets = if targets.is_empty() { BaselineTarget::ALL.to_vec() } else { targets.clone() };
            for t in targets {
                let s = Settings::resolve(flags, t.name())?;
                let rep = run_baseline_target(t, &s, None)?;
                println!("froze {} ({} rows)", rep.command, rep.rows.len());
                store.insert(&rep);
            }
            store.save(&path)?;
            return Ok(true);
        }
    };
    write_reports(&reports, flags)?;
    print_summary(&reports);
    Ok(reports.iter().all(SweepReport::passed))
}

/// Sizes the rayon pool from `GSLAB_THREADS`.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GSLAB_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Config(format!("GSLAB_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config("GSLAB_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

/// Exit code 0 when all gates pass, 2 when a gate fails, 1 on errors.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_geometric_ranges() {
        assert_eq!(parse_list("1,2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert_eq!(parse_list("0.5:2:256").unwrap().len(), 10);
        assert!(parse_list("1:1:4").is_err());
        assert!(parse_list("a").is_err());
        assert!(parse_list("").is_err());
    }

    #[test]
    fn intervals() {
        assert_eq!(parse_interval("dyadic").unwrap(), IntervalFamily::default());
        assert_eq!(parse_interval("1:2,4:8").unwrap(), IntervalFamily::Fixed(vec![(1.0, 2.0), (4.0, 8.0)]));
        assert_eq!(parse_interval("nu*0.5:4").unwrap(), IntervalFamily::Scaled(vec![(0.5, 4.0)]));
        assert!(parse_interval("2:1").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ini");
        std::fs::write(&path, "[general]\nseed = 7\nalpha = 0.2\n[norms]\nnu = 1,2\n").unwrap();
        let flags = Flags { config: Some(path), alpha: Some("0.25".into()), ..Flags::default() };
        let s = Settings::resolve(&flags, "norms").unwrap();
        let l = norm_lattice(&s).unwrap();
        assert_eq!(l.alpha, 0.25);
        assert_eq!(l.options.norm.seed, 7);
        assert_eq!(l.nu, vec![Order::from_two_nu(2), Order::from_two_nu(4)]);
        let other = Settings::resolve(&flags, "beta").unwrap();
        assert!(other.get("nu").is_none());
    }

    #[test]
    fn non_half_integer_order_is_config_error() {
        let flags = Flags { nu: Some("0.3".into()), ..Flags::default() };
        let s = Settings::resolve(&flags, "norms").unwrap();
        assert!(matches!(norm_lattice(&s), Err(Error::Config(_))));
    }
}
