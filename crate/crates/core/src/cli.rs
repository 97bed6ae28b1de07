//! The `phaseless` command line: lattice and threshold tables, phaseless
//! sampling, distinguishability, reconstruction, fitting and the
//! entire-function experiments. Every run writes a JSON report
//! `{config, version, result, runtime}`; only `runtime` varies between runs
//! with the same configuration and seed.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    jensen_check, AnalysisError, Counterexample, CounterexampleReport, EntireEval, JensenReport,
    SqrtSequence,
};
use crate::io::{fmt_f64, to_json_string, write_atomic};
use crate::lattices::{
    als_preset, gaussian_thresholds, integer_lattice, rect_thresholds, sl2_threshold, IndexKind,
    LatticeError, PointSet, Sl2Mat, Sl2Variant, SqrtLattice, TfPoint, ThresholdReport,
};
use crate::retrieval::{
    distinguish, fit_from_samples, phase_align, pipeline_spectrogram, reconstruct,
    reconstruction_window, FitConfig, FitReport, PipelineConfig, RetrievalError,
};
use crate::stft::{sample_phaseless, Signal, StftError};
use crate::windows::{GrowthEnvelope, WindowError, WindowSpec};
use crate::VERSION;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "PHASELESS_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 1 = usage, 2 = precondition, 3 = numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<WindowError> for CliError {
    fn from(e: WindowError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<StftError> for CliError {
    fn from(e: StftError) -> Self {
        match e {
            StftError::PoorRepresentation { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Stft(inner) => inner.into(),
            RetrievalError::DegenerateWindow | RetrievalError::NoAnchor(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::LogLogUndefined { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Precondition(format!("i/o: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "phaseless",
    version,
    about = "Phaseless STFT sampling on square-root lattices"
)]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent. CSV runs also write `<out>.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; `lattice` and `sample` default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Enumerate a square-root (or ordinary) lattice.
    Lattice(LatticeArgs),
    /// Sampling thresholds and admissibility.
    Thresholds(ThresholdArgs),
    /// Phaseless samples |V_w f| on a lattice.
    Sample(SampleArgs),
    /// Compare phaseless samples of two signals.
    Distinguish(DistinguishArgs),
    /// Reconstruct a signal from its full spectrogram.
    Reconstruct(ReconstructArgs),
    /// Fit Hermite coefficients to lattice samples.
    Fit(FitArgs),
    /// Weierstrass-product non-uniqueness witness.
    Counterexample(CounterexampleArgs),
    /// Jensen's formula for a polynomial with known roots.
    Jensen(JensenArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LatticeArgs {
    /// rect[:α] | rotate:θ | shear:σ | als
    #[arg(long = "lattice", visible_alias = "preset", default_value = "rect")]
    pub preset: String,
    /// Spacing α; overrides the value embedded in `rect:α`. Default 0.24.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Generating matrix `I` or `a,b,c,d` (row-major); replaces the preset.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Truncation radius.
    #[arg(long, default_value_t = 3.0)]
    pub radius: f64,
    /// Largest index n for the `als` preset.
    #[arg(long, default_value_t = 10)]
    pub nmax: u64,
    /// Use the ordinary lattice Aℤ² instead of A(√ℤ)².
    #[arg(long)]
    pub ordinary: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    /// Window, e.g. `gaussian`, `gaussian:3.14`, `hermite:2`.
    #[arg(long, default_value = "gaussian")]
    pub window: String,
    /// Explicit growth envelope `a,b`; replaces the window's envelope.
    #[arg(long)]
    pub envelope: Option<String>,
    /// rect | rotate:θ | shear:σ
    #[arg(long, visible_alias = "lattice", default_value = "rect")]
    pub family: String,
    /// Spacing to test against the bounds.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    /// Signal, e.g. `hermite:0+hermite:2*0,1`.
    #[arg(long = "f")]
    pub signal: String,
    #[arg(long, default_value = "hermite:0")]
    pub window: String,
    #[command(flatten)]
    pub lattice: LatticeArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistinguishArgs {
    #[arg(long = "f")]
    pub f: String,
    #[arg(long = "h")]
    pub h: String,
    #[arg(long, default_value = "hermite:0")]
    pub window: String,
    #[command(flatten)]
    pub lattice: LatticeArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReconstructArgs {
    #[arg(long = "f")]
    pub signal: String,
    /// Window; defaults to the reconstruction Gaussian e^{-8πt²}.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub eps_rel: Option<f64>,
    #[arg(long)]
    pub max_lag: Option<f64>,
    #[arg(long)]
    pub floor_rel: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Signal whose phaseless samples are fitted.
    #[arg(long)]
    pub truth: String,
    #[arg(long, default_value = "hermite:0")]
    pub window: String,
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 4)]
    pub nbasis: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-24)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long, default_value_t = 500)]
    pub kmax: usize,
    /// Radius of the disk for the growth certificate and CSV samples.
    #[arg(long, default_value_t = 5.0)]
    pub disk: f64,
    /// Split index K.
    #[arg(long, default_value_t = 1)]
    pub split: usize,
    /// Largest accepted tail bound disk⁴/(β⁴ k_max).
    #[arg(long, default_value_t = 0.1)]
    pub tail_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub nr: usize,
    #[arg(long, default_value_t = 128)]
    pub ntheta: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JensenArgs {
    /// Roots `re,im;re,im;...`.
    #[arg(long, default_value = "1,0;-1,0")]
    pub roots: String,
    /// Leading coefficient `re,im`.
    #[arg(long, default_value = "-1,0")]
    pub scale: String,
    #[arg(long = "radius", num_args = 1.., default_values_t = vec![0.5, 1.5, 2.0, 3.0])]
    pub radii: Vec<f64>,
}

#[derive(Serialize)]
struct RunConfig<'a> {
    seed: u64,
    format: Format,
    out: Option<&'a Path>,
    command: &'a Command,
}

#[derive(Serialize)]
struct Runtime {
    timestamp_unix: u64,
    elapsed_seconds: f64,
}

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    config: RunConfig<'a>,
    version: &'static str,
    result: R,
    runtime: Runtime,
}

/// What a subcommand produced: a JSON result and, for some commands, CSV data.
struct Output<R: Serialize> {
    result: R,
    csv: Option<String>,
}

/// Parse a number, accepting `pi`, `k*pi`, `pi/k` and `k*pi/m`.
pub fn parse_num(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let bad = || CliError::Usage(format!("cannot parse number `{s}`"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b.trim().parse::<f64>().map_err(|_| bad())?),
        None => (s, 1.0),
    };
    let num = num.trim();
    let k = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(pre) => pre
            .trim_end_matches('*')
            .trim()
            .parse::<f64>()
            .map_err(|_| bad())?,
        None => return Err(bad()),
    };
    Ok(k * PI / den)
}

fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("expected `re,im`, got `{s}`")))?;
    Ok(Complex64::new(parse_num(re)?, parse_num(im)?))
}

/// `gaussian[:γ]` | `hermite:n` | `poly:re,im;re,im;...@γ`.
pub fn parse_window(s: &str) -> Result<WindowSpec, CliError> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let w = match kind {
        "gaussian" if arg.is_empty() => WindowSpec::gaussian(PI)?,
        "gaussian" => WindowSpec::gaussian(parse_num(arg)?)?,
        "hermite" => WindowSpec::hermite(
            arg.parse()
                .map_err(|_| CliError::Usage(format!("bad Hermite index in `{s}`")))?,
        ),
        "poly" => {
            let (coeffs, gamma) = arg
                .split_once('@')
                .ok_or_else(|| CliError::Usage(format!("expected `poly:coeffs@γ`, got `{s}`")))?;
            let coeffs = coeffs
                .split(';')
                .map(parse_complex)
                .collect::<Result<Vec<_>, _>>()?;
            WindowSpec::poly_gaussian(coeffs, parse_num(gamma)?)?
        }
        _ => return Err(CliError::Usage(format!("unknown window `{s}`"))),
    };
    Ok(w)
}

enum Term {
    Coeffs(Vec<Complex64>),
    Gaussian(f64),
    File(Signal),
}

/// Terms joined by `+`: `hermite:n[*re,im]`, `gaussian:γ[*re,im]`,
/// `random:n[*re,im]` (unit-norm Hermite mixture drawn from the seed),
/// `file:path` (JSON signal) and the modifiers `phase:θ` and `shift:s`,
/// which act on the sum of the other terms. Sampled on the default grid.
pub fn parse_signal(spec: &str, seed: u64) -> Result<Signal, CliError> {
    let mut terms: Vec<(Term, Complex64)> = Vec::new();
    let mut phase = 0.0;
    let mut shift = 0.0;
    let mut n_random = 0u64;
    for raw in spec.split('+') {
        let raw = raw.trim();
        let (body, coef) = match raw.split_once('*') {
            Some((b, c)) if !raw.starts_with("file:") => (b, parse_complex(c)?),
            _ => (raw, Complex64::new(1.0, 0.0)),
        };
        let (kind, arg) = body
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("signal term `{raw}` needs `kind:value`")))?;
        let index = || {
            arg.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad index in `{raw}`")))
        };
        match kind {
            "hermite" => {
                let n = index()?;
                let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
                c[n] = Complex64::new(1.0, 0.0);
                terms.push((Term::Coeffs(c), coef));
            }
            "random" => {
                let n = index()?;
                if n == 0 {
                    return Err(CliError::Usage("random:n needs n ≥ 1".into()));
                }
                terms.push((
                    Term::Coeffs(random_coeffs(n, seed.wrapping_add(n_random))),
                    coef,
                ));
                n_random += 1;
            }
            "gaussian" => terms.push((Term::Gaussian(parse_num(arg)?), coef)),
            "file" => {
                let text = std::fs::read_to_string(arg)?;
                let s: Signal = serde_json::from_str(&text)
                    .map_err(|e| CliError::Precondition(format!("{arg}: {e}")))?;
                s.validate()?;
                terms.push((Term::File(s), coef));
            }
            "phase" => phase += parse_num(arg)?,
            "shift" => shift += parse_num(arg)?,
            _ => return Err(CliError::Usage(format!("unknown signal term `{raw}`"))),
        }
    }
    if terms.is_empty() {
        return Err(CliError::Usage(format!("signal `{spec}` has no terms")));
    }
    let tau = Complex64::from_polar(1.0, phase);
    let s = Signal::from_fn(Signal::default_grid(), |t| {
        let u = t - shift;
        let sum: Complex64 = terms
            .iter()
            .map(|(term, c)| {
                c * match term {
                    Term::Coeffs(k) => crate::windows::hermite_functions(k.len(), u)
                        .iter()
                        .zip(k)
                        .map(|(h, a)| a * h)
                        .sum(),
                    Term::Gaussian(g) => Complex64::new((-g * u * u).exp(), 0.0),
                    Term::File(f) => f.interp(u),
                }
            })
            .sum();
        sum * tau
    });
    s.validate()?;
    Ok(s)
}

/// Unit-norm complex Gaussian coefficient vector.
pub fn random_coeffs(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    c.into_iter().map(|v| v / norm).collect()
}

fn parse_matrix(s: &str) -> Result<[[f64; 2]; 2], CliError> {
    if s.trim() == "I" {
        return Ok([[1.0, 0.0], [0.0, 1.0]]);
    }
    let v = s.split(',').map(parse_num).collect::<Result<Vec<_>, _>>()?;
    match v[..] {
        [a, b, c, d] => Ok([[a, b], [c, d]]),
        _ => Err(CliError::Usage(format!(
            "matrix needs `I` or four entries, got `{s}`"
        ))),
    }
}

/// Symplectic family named by `rect`, `rotate:θ` or `shear:σ`.
fn parse_family(s: &str) -> Result<(Sl2Mat, Option<f64>), CliError> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "rect" if arg.is_empty() => Ok((Sl2Mat::identity(), None)),
        "rect" => Ok((Sl2Mat::identity(), Some(parse_num(arg)?))),
        "rotate" => Ok((Sl2Mat::rotation(parse_num(arg)?), None)),
        "shear" => Ok((Sl2Mat::shear(parse_num(arg)?), None)),
        _ => Err(CliError::Usage(format!("unknown lattice family `{s}`"))),
    }
}

pub fn build_points(args: &LatticeArgs) -> Result<PointSet, CliError> {
    const DEFAULT_ALPHA: f64 = 0.24;
    if let Some(m) = &args.matrix {
        let m = parse_matrix(m)?;
        return Ok(if args.ordinary {
            integer_lattice(m, args.radius)?
        } else {
            SqrtLattice::new(m, args.radius)?.generate()?
        });
    }
    if args.preset == "als" {
        return Ok(als_preset(args.nmax));
    }
    let (s, embedded) = parse_family(&args.preset)?;
    let alpha = args.alpha.or(embedded).unwrap_or(DEFAULT_ALPHA);
    let lat = SqrtLattice::deformed(&s, alpha, args.radius)?;
    Ok(if args.ordinary {
        integer_lattice(lat.matrix, args.radius)?
    } else {
        lat.generate()?
    })
}

#[derive(Serialize)]
struct LatticeSummary {
    kind: IndexKind,
    matrix: [[f64; 2]; 2],
    count: usize,
    points: Option<PointSet>,
}

fn cmd_lattice(args: &LatticeArgs, format: Format) -> Result<Output<LatticeSummary>, CliError> {
    let ps = build_points(args)?;
    let csv = (format == Format::Csv).then(|| ps.to_csv());
    let summary = LatticeSummary {
        kind: ps.kind,
        matrix: ps.matrix,
        count: ps.len(),
        points: (format == Format::Json).then_some(ps),
    };
    Ok(Output {
        result: summary,
        csv,
    })
}

#[derive(Serialize)]
struct Sl2Entry {
    alpha_max: Option<f64>,
    report: Option<ThresholdReport>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Sl2Thresholds {
    conservative: Sl2Entry,
    printed: Sl2Entry,
    differ: bool,
}

#[derive(Serialize)]
struct ThresholdResult {
    family: String,
    /// Rectangular bounds from the window's growth envelope.
    rect: Option<ThresholdReport>,
    /// Bounds for `α·S(√ℤ)²` with the standard Gaussian window.
    sl2: Option<Sl2Thresholds>,
    /// Whether `--alpha` is below every applicable bound.
    admissible: Option<bool>,
}

fn cmd_thresholds(args: &ThresholdArgs) -> Result<Output<ThresholdResult>, CliError> {
    let (s, embedded) = parse_family(&args.family)?;
    let alpha = args.alpha.or(embedded);
    let is_rect = args.family.starts_with("rect");
    let mut out = ThresholdResult {
        family: args.family.clone(),
        rect: None,
        sl2: None,
        admissible: None,
    };
    if is_rect {
        let rep = match &args.envelope {
            Some(e) => {
                let v = e.split(',').map(parse_num).collect::<Result<Vec<_>, _>>()?;
                let [a, b] = v[..] else {
                    return Err(CliError::Usage(format!("envelope needs `a,b`, got `{e}`")));
                };
                rect_thresholds(&GrowthEnvelope::scalar(a, b)?)
            }
            None => match parse_window(&args.window)? {
                WindowSpec::Gaussian { gamma } => gaussian_thresholds(gamma),
                w => rect_thresholds(&w.nominal_envelope()),
            },
        };
        let rep = match alpha {
            Some(a) => rep.check(&[a], &[a]),
            None => rep,
        };
        out.admissible = alpha.map(|_| rep.admissible);
        out.rect = Some(rep);
    } else {
        let entry = |variant| match sl2_threshold(&s, variant) {
            Ok(rep) => {
                let rep = match alpha {
                    Some(a) => rep.check(&[a], &[a]),
                    None => rep,
                };
                Sl2Entry {
                    alpha_max: rep.tau_max.first().copied(),
                    report: Some(rep),
                    error: None,
                }
            }
            Err(LatticeError::NotAdmissible(d)) => Sl2Entry {
                alpha_max: None,
                report: None,
                error: Some(LatticeError::NotAdmissible(d).to_string()),
            },
            Err(e) => Sl2Entry {
                alpha_max: None,
                report: None,
                error: Some(e.to_string()),
            },
        };
        let conservative = entry(Sl2Variant::Conservative);
        let printed = entry(Sl2Variant::Printed);
        let differ = match (conservative.alpha_max, printed.alpha_max) {
            (Some(a), Some(b)) => (a - b).abs() > 1e-12 * a.abs().max(b.abs()),
            (None, None) => false,
            _ => true,
        };
        out.admissible = match (&conservative.report, alpha) {
            (Some(rep), Some(_)) => Some(rep.admissible),
            (None, _) => Some(false),
            (Some(_), None) => None,
        };
        out.sl2 = Some(Sl2Thresholds {
            conservative,
            printed,
            differ,
        });
    }
    Ok(Output {
        result: out,
        csv: None,
    })
}

#[derive(Serialize)]
struct SampleResult {
    count: usize,
    samples: Option<crate::stft::TfSampleSet>,
}

fn cmd_sample(
    args: &SampleArgs,
    seed: u64,
    format: Format,
) -> Result<Output<SampleResult>, CliError> {
    let f = parse_signal(&args.signal, seed)?;
    let w = parse_window(&args.window)?;
    let ps = build_points(&args.lattice)?;
    let set = sample_phaseless(&f, &w, &ps.points)?;
    let csv = (format == Format::Csv).then(|| set.to_csv());
    Ok(Output {
        result: SampleResult {
            count: set.len(),
            samples: (format == Format::Json).then_some(set),
        },
        csv,
    })
}

#[derive(Serialize)]
struct DistinguishResult {
    n_points: usize,
    max_dev: f64,
    argmax: TfPoint,
    aligned_distance: f64,
}

fn cmd_distinguish(
    args: &DistinguishArgs,
    seed: u64,
) -> Result<Output<DistinguishResult>, CliError> {
    let f = parse_signal(&args.f, seed)?;
    let h = parse_signal(&args.h, seed)?;
    let w = parse_window(&args.window)?;
    let ps = build_points(&args.lattice)?;
    let r = distinguish(&f, &h, &w, &ps.points)?;
    Ok(Output {
        result: DistinguishResult {
            n_points: ps.len(),
            max_dev: r.max_dev,
            argmax: r.argmax,
            aligned_distance: r.aligned_distance,
        },
        csv: None,
    })
}

#[derive(Serialize)]
struct ReconstructResult {
    window: WindowSpec,
    pipeline: PipelineConfig,
    aligned_error: f64,
    /// `τ` with `f ≈ τ·f_rec`.
    global_phase: Complex64,
    input_norm: f64,
}

fn signal_csv(s: &Signal) -> String {
    let mut out = String::from("t,re,im\n");
    for (j, v) in s.values.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(s.t(j)),
            fmt_f64(v.re),
            fmt_f64(v.im)
        );
    }
    out
}

fn cmd_reconstruct(
    args: &ReconstructArgs,
    seed: u64,
    format: Format,
) -> Result<Output<ReconstructResult>, CliError> {
    let f = parse_signal(&args.signal, seed)?;
    let w = match &args.window {
        Some(s) => parse_window(s)?,
        None => reconstruction_window(),
    };
    let d = PipelineConfig::default();
    let cfg = PipelineConfig {
        eps_rel: args.eps_rel.unwrap_or(d.eps_rel),
        max_lag: args.max_lag.unwrap_or(d.max_lag),
        floor_rel: args.floor_rel.unwrap_or(d.floor_rel),
    };
    let (spec, xg, og) = pipeline_spectrogram(&f, &w)?;
    let rec = reconstruct(&spec, xg, og, &w, &cfg)?;
    let (tau, err) = phase_align(&f, &rec)?;
    let csv = (format == Format::Csv).then(|| signal_csv(&rec));
    Ok(Output {
        result: ReconstructResult {
            window: w,
            pipeline: cfg,
            aligned_error: err,
            global_phase: tau,
            input_norm: f.norm(),
        },
        csv,
    })
}

#[derive(Serialize)]
struct FitResult {
    n_samples: usize,
    config: FitConfig,
    fit: FitReport,
}

fn cmd_fit(args: &FitArgs, seed: u64, format: Format) -> Result<Output<FitResult>, CliError> {
    let truth = parse_signal(&args.truth, seed)?;
    let w = parse_window(&args.window)?;
    let ps = build_points(&args.lattice)?;
    let samples = sample_phaseless(&truth, &w, &ps.points)?;
    let cfg = FitConfig {
        n_basis: args.nbasis,
        restarts: args.restarts,
        max_iters: args.max_iters,
        tol: args.tol,
        seed,
        grid: truth.grid(),
        ..FitConfig::default()
    };
    let fit = fit_from_samples(&samples, &w, &cfg, Some(&truth))?;
    let csv = (format == Format::Csv).then(|| {
        let mut out = String::from("n,re,im\n");
        for (n, c) in fit.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{n},{},{}", fmt_f64(c.re), fmt_f64(c.im));
        }
        out
    });
    Ok(Output {
        result: FitResult {
            n_samples: samples.len(),
            config: cfg,
            fit,
        },
        csv,
    })
}

fn cmd_counterexample(
    args: &CounterexampleArgs,
    format: Format,
) -> Result<Output<CounterexampleReport>, CliError> {
    let seq = SqrtSequence::with_split(args.beta, args.split)?;
    let ce = Counterexample::build(seq, args.b, args.kmax, args.disk, args.tail_tol)?;
    if args.nr == 0 || args.ntheta == 0 {
        return Err(CliError::Usage("--nr and --ntheta must be positive".into()));
    }
    let rep = ce.report(args.nr, args.ntheta);
    let csv = (format == Format::Csv).then(|| ce.to_csv(&ce.disk_points(args.nr, args.ntheta)));
    Ok(Output { result: rep, csv })
}

fn cmd_jensen(args: &JensenArgs) -> Result<Output<Vec<JensenReport>>, CliError> {
    let roots = args
        .roots
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(parse_complex)
        .collect::<Result<Vec<_>, _>>()?;
    let p = EntireEval::polynomial(parse_complex(&args.scale)?, roots);
    let reps = args
        .radii
        .iter()
        .map(|&r| jensen_check(&p, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Output {
        result: reps,
        csv: None,
    })
}

fn emit<R: Serialize>(
    cli: &Cli,
    format: Format,
    out: Output<R>,
    start: Instant,
) -> Result<(), CliError> {
    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = Report {
        config: RunConfig {
            seed: cli.seed,
            format,
            out: cli.out.as_deref(),
            command: &cli.command,
        },
        version: VERSION,
        result: out.result,
        runtime: Runtime {
            timestamp_unix,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
    };
    let json = to_json_string(&report)
        .map_err(|e| CliError::Numerical(format!("serialising the report: {e}")))?;
    match (format, &cli.out, out.csv) {
        (Format::Csv, Some(path), Some(csv)) => {
            write_atomic(path, csv.as_bytes())?;
            let mut side = path.clone().into_os_string();
            side.push(".json");
            write_atomic(Path::new(&side), json.as_bytes())?;
        }
        (Format::Csv, None, Some(csv)) => std::io::stdout().write_all(csv.as_bytes())?,
        (Format::Csv, _, None) => {
            return Err(CliError::Usage(
                "this command has no CSV output; use --format json".into(),
            ))
        }
        (Format::Json, Some(path), _) => write_atomic(path, json.as_bytes())?,
        (Format::Json, None, _) => std::io::stdout().write_all(json.as_bytes())?,
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{v}`"
        ))
    })?;
    // A second initialisation in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let start = Instant::now();
    let csv_default = matches!(cli.command, Command::Lattice(_) | Command::Sample(_));
    let format = cli.format.unwrap_or(if csv_default {
        Format::Csv
    } else {
        Format::Json
    });
    match &cli.command {
        Command::Lattice(a) => emit(cli, format, cmd_lattice(a, format)?, start),
        Command::Thresholds(a) => emit(cli, format, cmd_thresholds(a)?, start),
        Command::Sample(a) => emit(cli, format, cmd_sample(a, cli.seed, format)?, start),
        Command::Distinguish(a) => emit(cli, format, cmd_distinguish(a, cli.seed)?, start),
        Command::Reconstruct(a) => emit(cli, format, cmd_reconstruct(a, cli.seed, format)?, start),
        Command::Fit(a) => emit(cli, format, cmd_fit(a, cli.seed, format)?, start),
        Command::Counterexample(a) => emit(cli, format, cmd_counterexample(a, format)?, start),
        Command::Jensen(a) => emit(cli, format, cmd_jensen(a)?, start),
    }
}

/// Parse `std::env::args`, run, and map failures to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phaseless: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
