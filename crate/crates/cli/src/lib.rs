//! Command implementations behind the `riskpath` binary.
//!
//! Every command renders its whole output to a string; `main` prints it or
//! writes it to `--out`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use riskpath::decoders::{
    self, alpha_interpolation_decode, all_minimizers, hybrid_decode, kblock_pvd_decode, viterbi_decode,
};
use riskpath::format::{fmt_num, parse_num};
use riskpath::labelling::label_decode;
use riskpath::sim::{estimate_risk_trajectories, sandwich_constant_sweep, sandwich_csv};
use riskpath::transform::{
    probe_csv, rescaling_distortion_probe, symbol_by_symbol_decode, transformed_forward_backward, Exponent,
};
use riskpath::{
    fixtures, forward_backward, io, DecodedPath, Decoder, Error, HmmModel, LabelMap, ObservationSequence,
    Objective, PosteriorSummary, RiskEvaluator, RiskReport, RiskWeights, StatePath,
};

#[derive(Debug, Parser)]
#[command(name = "riskpath", version, about = "Risk-based hidden path decoding for HMMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode a state path and report its risks.
    Decode(DecodeArgs),
    /// Evaluate the risks of a given path.
    Risk(RiskArgs),
    /// Decode over a grid of k, alpha or q values and emit CSV.
    Sweep(SweepArgs),
    /// Monte Carlo risk trajectories, or sandwich gaps when --k is given.
    Simulate(SimulateArgs),
    /// Run every decoder on the built-in four-state example.
    #[command(name = "paper-example")]
    Example(ExampleArgs),
}

#[derive(Debug, Args)]
pub struct Input {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Observation file. Optional for direct-likelihood models.
    #[arg(long)]
    pub obs: Option<PathBuf>,
    /// Write output to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "selector", required = true, multiple = false)]
pub struct Selector {
    /// Combined-risk weights `c1,c2,c3,c4`.
    #[arg(long, group = "selector")]
    pub weights: Option<String>,
    /// k-block decoder; `inf` selects Viterbi.
    #[arg(long, group = "selector")]
    pub k: Option<String>,
    /// Interpolation `(1-alpha) Rbar_inf + alpha Rbar_1`.
    #[arg(long, group = "selector")]
    pub alpha: Option<f64>,
    /// Power-transformed symbol-by-symbol decoding with exponent q (or `inf`).
    #[arg(long, group = "selector")]
    pub q: Option<String>,
    /// Named decoder: viterbi, pmap, cpmap, pvd, kblock:K, alpha:A, rabiner:K, hybrid:...
    #[arg(long, group = "selector")]
    pub decoder: Option<String>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub selector: Selector,
    /// Label file (`state label` lines).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta3: f64,
    /// Use rescaled tables with --q.
    #[arg(long)]
    pub rescaled: bool,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub input: Input,
    /// Path file (one-based states, one per line).
    #[arg(long)]
    pub path: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "grid", required = true, multiple = false)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: Input,
    /// k values: `1..T`, `a..b` or a comma list; `inf` adds Viterbi.
    #[arg(long, group = "grid")]
    pub k: Option<String>,
    /// Comma list of alpha values in [0, 1].
    #[arg(long, group = "grid")]
    pub alpha: Option<String>,
    /// Comma list of exponents (`inf` allowed); compares plain and rescaled tables.
    #[arg(long, group = "grid")]
    pub q: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model file (JSON); must be categorical or gaussian.
    #[arg(long)]
    pub model: PathBuf,
    /// Comma list of strictly increasing horizons.
    #[arg(long)]
    pub horizons: String,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma list of decoders (see `decode --decoder`).
    #[arg(long, default_value = "viterbi,pmap")]
    pub decoders: String,
    /// Comma list of k >= 2: report sandwich gaps instead of trajectories.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    /// Emission parameter of the example.
    #[arg(long = "A", default_value_t = 2.0)]
    pub a: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, with a stable code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    FileNotFound(PathBuf),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::FileNotFound(_) => "E_FILE_NOT_FOUND",
            CliError::Io(..) => "E_IO",
            CliError::Usage(_) => "E_USAGE",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::FileNotFound(p) => write!(f, "file not found: {}", p.display()),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::FileNotFound(path.to_path_buf()),
        _ => CliError::Io(path.to_path_buf(), e),
    })
}

fn load(input: &Input) -> CliResult<(HmmModel, ObservationSequence)> {
    let model = io::parse_model(&read(&input.model)?)?;
    let obs = match (&input.obs, model.emission()) {
        (Some(p), _) => io::parse_observations(&read(p)?, &model)?,
        (None, riskpath::Emission::DirectLikelihood { likelihoods }) => {
            ObservationSequence::positions(likelihoods.nrows())
        }
        (None, _) => return Err(CliError::Usage("--obs is required for this model".into())),
    };
    Ok((model, obs))
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(f).collect()
}

fn parse_usize(s: &str) -> CliResult<usize> {
    s.parse().map_err(|_| CliError::Core(Error::Parse(format!("invalid integer `{s}`"))))
}

fn parse_f64(s: &str) -> CliResult<f64> {
    Ok(parse_num(s)?)
}

fn parse_weights(s: &str, beta1: f64, beta3: f64) -> CliResult<RiskWeights> {
    match parse_list(s, parse_f64)?.as_slice() {
        [c1, c2, c3, c4] => Ok(RiskWeights::new(*c1, *c2, *c3, *c4, beta1, beta3)?),
        _ => Err(CliError::Core(Error::Parse(format!("--weights needs four numbers, got `{s}`")))),
    }
}

/// `None` stands for `inf`.
fn parse_k(s: &str) -> CliResult<Option<usize>> {
    if s == "inf" {
        Ok(None)
    } else {
        parse_usize(s).map(Some)
    }
}

/// Expands `a..b` (with `T` for the horizon) and comma lists of k values.
pub fn parse_k_grid(s: &str, horizon: usize) -> CliResult<Vec<Option<usize>>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..") {
            let end = |x: &str| if x == "T" { Ok(horizon) } else { parse_usize(x) };
            out.extend((end(a)?..=end(b)?).map(Some));
        } else {
            out.push(parse_k(item)?);
        }
    }
    Ok(out)
}

fn path_line(path: &StatePath) -> String {
    path.to_one_based().iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn decode_output(path: &StatePath, labels: Option<&LabelMap>, risks: &RiskReport) -> String {
    format!("{}---\n{}", io::format_path(path, labels), risks.to_record())
}

pub fn decode(args: &DecodeArgs) -> CliResult<String> {
    let (model, obs) = load(&args.input)?;
    let summary = forward_backward(&model, &obs)?;
    let labels = match &args.labels {
        Some(p) => Some(io::parse_labels(&read(p)?, model.num_states(), args.beta1)?),
        None => None,
    };
    let sel = &args.selector;
    let path = if let Some(w) = &sel.weights {
        let weights = parse_weights(w, args.beta1, args.beta3)?;
        match &labels {
            Some(l) => label_decode(&model, &summary, l, &weights)?.decoded.path,
            None => hybrid_decode(&model, &summary, &weights)?.path,
        }
    } else if let Some(k) = &sel.k {
        match parse_k(k)? {
            None => viterbi_decode(&model, &summary)?.path,
            Some(k) => kblock_pvd_decode(&model, &summary, k)?.path,
        }
    } else if let Some(a) = sel.alpha {
        alpha_interpolation_decode(&model, &summary, a)?.path
    } else if let Some(q) = &sel.q {
        let tables = transformed_forward_backward(&model, &obs, Exponent::parse(q)?, args.rescaled)?;
        symbol_by_symbol_decode(&tables)
    } else if let Some(d) = &sel.decoder {
        Decoder::parse(d)?.decode(&model, &summary)?.path
    } else {
        unreachable!("clap enforces one selector")
    };
    let risks = RiskEvaluator::new(&model, &summary).evaluate(&path)?;
    Ok(decode_output(&path, labels.as_ref(), &risks))
}

pub fn risk(args: &RiskArgs) -> CliResult<String> {
    let (model, obs) = load(&args.input)?;
    let summary = forward_backward(&model, &obs)?;
    let path = io::parse_path(&read(&args.path)?)?;
    Ok(RiskEvaluator::new(&model, &summary).evaluate(&path)?.to_record())
}

fn sweep_row(param: &str, value: &str, d: &DecodedPath, summary: &PosteriorSummary) -> String {
    // log p(path | x^T)
    let log_posterior = -(summary.horizon() as f64) * d.risks.rbarinf_posterior;
    format!(
        "{param},{value},{},{},{},{}\n",
        path_line(&d.path),
        fmt_num(d.objective),
        fmt_num(log_posterior),
        d.risks.to_csv_row()
    )
}

pub fn sweep(args: &SweepArgs) -> CliResult<String> {
    let (model, obs) = load(&args.input)?;
    if let Some(q) = &args.q {
        let qs = parse_list(q, |s| Ok(Exponent::parse(s)?))?;
        return Ok(probe_csv(&rescaling_distortion_probe(&model, &obs, &qs)?));
    }
    let summary = forward_backward(&model, &obs)?;
    let mut out = format!(
        "param,value,path,objective,log_posterior,{}\n",
        RiskReport::csv_header()
    );
    if let Some(k) = &args.k {
        for k in parse_k_grid(k, summary.horizon())? {
            let (value, d) = match k {
                None => ("inf".to_string(), viterbi_decode(&model, &summary)?),
                Some(k) => (k.to_string(), kblock_pvd_decode(&model, &summary, k)?),
            };
            out.push_str(&sweep_row("k", &value, &d, &summary));
        }
    } else if let Some(a) = &args.alpha {
        for a in parse_list(a, parse_f64)? {
            let d = alpha_interpolation_decode(&model, &summary, a)?;
            out.push_str(&sweep_row("alpha", &fmt_num(a), &d, &summary));
        }
    }
    Ok(out)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<String> {
    let model = io::parse_model(&read(&args.model)?)?;
    let horizons = parse_list(&args.horizons, parse_usize)?;
    if let Some(ks) = &args.k {
        let ks = parse_list(ks, parse_usize)?;
        let rows = sandwich_constant_sweep(&model, &horizons, &ks, args.replicates, args.seed)?;
        return Ok(sandwich_csv(&rows));
    }
    let decoders = parse_list(&args.decoders, |s| Ok(Decoder::parse(s)?))?;
    Ok(estimate_risk_trajectories(&model, &decoders, &horizons, args.replicates, args.seed)?.to_csv())
}

pub fn example(args: &ExampleArgs) -> CliResult<String> {
    let (model, obs) = fixtures::four_state_example(args.a);
    let summary = forward_backward(&model, &obs)?;
    let rows: Vec<(&str, DecodedPath)> = vec![
        ("rabiner k=2", decoders::rabiner_block_decode(&model, &summary, 2)?),
        ("pmap", decoders::pmap_decode(&model, &summary)?),
        ("constrained pmap", decoders::constrained_pmap_decode(&model, &summary)?),
        ("viterbi", viterbi_decode(&model, &summary)?),
        ("pvd", decoders::pvd_decode(&model, &summary)?),
        ("k=2 pvd", kblock_pvd_decode(&model, &summary, 2)?),
    ];
    let mut out = format!("A = {}\n", fmt_num(args.a));
    out.push_str(&format!(
        "{:<18} {:<10} {:<11} {:>16} {:>16}\n",
        "decoder", "path", "admissible", "objective", "posterior"
    ));
    for (name, d) in &rows {
        let posterior = (-(summary.horizon() as f64) * d.risks.rbarinf_posterior).exp();
        out.push_str(&format!(
            "{:<18} {:<10} {:<11} {:>16} {:>16}\n",
            name,
            d.path.to_string(),
            if d.admissible { "yes" } else { "no" },
            fmt_num(d.objective),
            fmt_num(posterior)
        ));
    }
    for (name, objective) in [("viterbi", Objective::Viterbi), ("k=2 pvd", Objective::KBlock(2))] {
        let (_, paths) = all_minimizers(&model, &summary, &objective)?;
        let list: Vec<String> = paths.iter().map(StatePath::to_string).collect();
        out.push_str(&format!("{name} optima: {}\n", list.join(" ")));
    }
    Ok(out)
}

/// Runs a parsed command and returns its output with the `--out` target.
pub fn run(cli: &Cli) -> CliResult<(String, Option<PathBuf>)> {
    Ok(match &cli.command {
        Command::Decode(a) => (decode(a)?, a.input.out.clone()),
        Command::Risk(a) => (risk(a)?, a.input.out.clone()),
        Command::Sweep(a) => (sweep(a)?, a.input.out.clone()),
        Command::Simulate(a) => (simulate(a)?, a.out.clone()),
        Command::Example(a) => (example(a)?, a.out.clone()),
    })
}

/// Writes `text` to `out` or standard output.
pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(p.to_path_buf(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
