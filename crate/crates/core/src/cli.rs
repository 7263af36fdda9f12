//! `ajlef` command-line interface.
//!
//! Every subcommand accepts `--config FILE`, a `key = value` file whose keys
//! are the subcommand's long flag names. Flags given on the command line
//! override the file. Exit status is 0 on success, 1 on a data error and 2
//! on a usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::features::{
    extract_at_level, extract_detailed, feature_histogram, gradient_face, lef, save_feature_png, weber_face,
    write_feature_csv, FeatureMap, Stage, DEFAULT_SMOOTH_SIGMA,
};
use crate::illum::{calibrate, classify_level, image_coefficient, CalibrationProfile, IlluminationLevel, DEFAULT_BETA};
use crate::imaging::{load_image, log_transform, save_image};
use crate::recognition::{
    arr_evaluate, export_report, load_manifest, load_manifest_images, parse_grid, sweep_images, write_manifest,
    write_sweep_csv, Method, MethodExtractor, SweepAxis,
};
use crate::synth::{epsilon_bound, quantize, SyntheticSet, PINNED_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "ajlef",
    version,
    about = "Illumination-level classification and illumination-invariant face features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute illumination coefficients over a manifest and write a profile.
    Calibrate(CalibrateArgs),
    /// Print the illumination level of each image.
    Classify(ClassifyArgs),
    /// Compute a feature map for one image.
    Extract(ExtractArgs),
    /// Run the rotating-gallery recognition protocol.
    Evaluate(EvaluateArgs),
    /// Evaluate over a grid of one parameter.
    Sweep(SweepArgs),
    /// Generate a synthetic Lambertian recognition set.
    Synth(SynthArgs),
    /// Histogram of a feature map's values.
    Hist(HistArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct CalibrateArgs {
    /// Reference set (`person_id,image_path` CSV).
    #[arg(long)]
    manifest: PathBuf,
    /// Profile file to write.
    #[arg(long)]
    out: PathBuf,
    /// Sigmoid slope applied to singular values.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// `key = value` file supplying defaults for these flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ClassifyArgs {
    #[arg(long)]
    profile: PathBuf,
    /// Also print the illumination coefficient.
    #[arg(long)]
    coefficient: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(required = true)]
    images: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    Ajlef,
    Jlef,
    Lef,
    Weber,
    Gradient,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ExtractArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, value_enum, default_value_t = StageArg::Ajlef)]
    stage: StageArg,
    /// Scale for `--stage lef`.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Use this level's parameters instead of classifying the image.
    #[arg(long)]
    level: Option<String>,
    /// Write values as CSV (one line per image row).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write an 8-bit rendering rescaled to [0, 255].
    #[arg(long)]
    png: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    image: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ajlef,
    Jlef,
    Weber,
    Gradient,
    Raw,
    Log,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ajlef => Method::Ajlef,
            MethodArg::Jlef => Method::Jlef,
            MethodArg::Weber => Method::Weber,
            MethodArg::Gradient => Method::Gradient,
            MethodArg::Raw => Method::Raw,
            MethodArg::Log => Method::Log,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct EvaluateArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Ajlef)]
    method: MethodArg,
    /// Report CSV to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    K,
    Sigma2,
    Delta,
    Beta,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::K => SweepAxis::K,
            AxisArg::Sigma2 => SweepAxis::Sigma2,
            AxisArg::Delta => SweepAxis::Delta,
            AxisArg::Beta => SweepAxis::Beta,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SweepArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Comma list (`1,2,3`) or inclusive range (`1:10`, `0.5:3:0.5`).
    #[arg(long)]
    grid: String,
    /// Level whose parameters are held fixed.
    #[arg(long, default_value = "L3")]
    level: String,
    /// Sweep CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// For `--axis k`: write a copy of the profile with the measured
    /// percentages stored as the level's performance vector.
    #[arg(long)]
    update_profile: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SynthArgs {
    /// Directory receiving images, sidecars and `manifest.csv`.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    identities: usize,
    #[arg(long, default_value_t = 8)]
    variants: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = PINNED_SEED)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct HistArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, value_enum, default_value_t = StageArg::Jlef)]
    stage: StageArg,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    level: Option<String>,
    #[arg(long, default_value_t = 64)]
    bins: usize,
    /// Histogram CSV to write; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    image: PathBuf,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(ConfigError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
        Err(ConfigError::Data(e)) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

enum ConfigError {
    Usage(String),
    Data(Error),
}

/// Settings read from a `--config` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| format!("config line {}: expected 'key = value'", i + 1))?;
            let key = k.trim().replace('_', "-");
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(format!("config line {}: duplicate key '{key}'", i + 1));
            }
        }
        Ok(Self { values })
    }
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

/// Splices config-file values in front of the subcommand's own arguments.
fn apply_config(argv: Vec<OsString>) -> std::result::Result<Vec<OsString>, ConfigError> {
    if argv.len() < 2 {
        return Ok(argv);
    }
    let Some(path) = find_config(&argv[2..]) else {
        return Ok(argv);
    };
    let text =
        fs::read_to_string(&path).map_err(|source| ConfigError::Data(Error::Read { path: path.clone(), source }))?;
    let config = RunConfig::parse(&text).map_err(|m| ConfigError::Usage(format!("{}: {m}", path.display())))?;

    let sub_name = argv[1].to_string_lossy().into_owned();
    let command = Cli::command();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok(argv);
    };
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in &config.values {
        if key == "config" {
            return Err(ConfigError::Usage("config files cannot set 'config'".into()));
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| ConfigError::Usage(format!("{}: '{key}' is not a flag of '{sub_name}'", path.display())))?;
        let is_switch = matches!(arg.get_action(), clap::ArgAction::SetTrue);
        if is_switch {
            match value.as_str() {
                "true" => injected.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(ConfigError::Usage(format!("'{key}' expects true or false, got '{other}'")));
                }
            }
        } else {
            injected.push(format!("--{key}").into());
            injected.push(value.into());
        }
    }
    let mut out = Vec::with_capacity(argv.len() + injected.len());
    out.extend_from_slice(&argv[..2]);
    out.extend(injected);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Hist(a) => cmd_hist(a),
    }
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let images = load_manifest_images(&manifest)?;
    let coefficients = {
        use rayon::prelude::*;
        images.par_iter().map(|(_, img)| image_coefficient(img, a.beta)).collect::<Result<Vec<_>>>()?
    };
    let profile = calibrate(&coefficients, a.beta)?;
    profile.save(&a.out)?;

    let mut counts = [0usize; 5];
    for &c in &coefficients {
        counts[classify_level(c, &profile)?.index()] += 1;
    }
    eprintln!(
        "calibrated {} images: min {} max {} step {}",
        coefficients.len(),
        profile.min_coefficient(),
        profile.max_coefficient(),
        profile.step()
    );
    for level in IlluminationLevel::ALL {
        eprintln!("  {level}: {}", counts[level.index()]);
    }
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let profile = CalibrationProfile::load(&a.profile)?;
    let mut stdout = std::io::stdout().lock();
    let many = a.images.len() > 1;
    for path in &a.images {
        let img = load_image(path)?;
        let c = image_coefficient(&img, profile.beta())?;
        let level = classify_level(c, &profile)?;
        let line = match (many, a.coefficient) {
            (false, false) => level.to_string(),
            (false, true) => format!("{level}\t{c}"),
            (true, false) => format!("{}\t{level}", path.display()),
            (true, true) => format!("{}\t{level}\t{c}", path.display()),
        };
        writeln!(stdout, "{line}").map_err(|source| Error::Write { path: "<stdout>".into(), source })?;
    }
    Ok(())
}

fn parse_level(level: Option<&str>) -> Result<Option<IlluminationLevel>> {
    level.map(str::parse).transpose()
}

fn compute_stage(
    image: &Path,
    profile_path: &Path,
    stage: StageArg,
    k: usize,
    level: Option<&str>,
) -> Result<FeatureMap> {
    let img = load_image(image)?;
    match stage {
        StageArg::Lef => lef(&log_transform(&img), k),
        StageArg::Weber => weber_face(&img, DEFAULT_SMOOTH_SIGMA),
        StageArg::Gradient => gradient_face(&img, DEFAULT_SMOOTH_SIGMA),
        StageArg::Ajlef | StageArg::Jlef => {
            let profile = CalibrationProfile::load(profile_path)?;
            let stage = if stage == StageArg::Ajlef { Stage::Ajlef } else { Stage::Jlef };
            let e = match parse_level(level)? {
                Some(l) => extract_at_level(&img, &profile, l, stage)?,
                None => extract_detailed(&img, &profile, stage)?,
            };
            eprintln!(
                "level {} k={} sigma2={} delta={} omega_g=[{}]",
                e.level,
                e.params.k,
                e.params.sigma2,
                e.params.delta,
                e.weights.omega_g().iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", ")
            );
            Ok(e.map)
        }
    }
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let map = compute_stage(&a.image, &a.profile, a.stage, a.k, a.level.as_deref())?;
    if let Some(p) = &a.csv {
        write_feature_csv(&map, p)?;
    }
    if let Some(p) = &a.png {
        save_feature_png(&map, p)?;
    }
    if a.csv.is_none() && a.png.is_none() {
        let mut stdout = std::io::stdout().lock();
        for row in map.values().chunks(map.width().max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(stdout, "{}", line.join(","))
                .map_err(|source| Error::Write { path: "<stdout>".into(), source })?;
        }
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let profile = CalibrationProfile::load(&a.profile)?;
    let manifest = load_manifest(&a.manifest)?;
    let report = arr_evaluate(&manifest, &MethodExtractor { method: a.method.into(), profile: &profile })?;
    export_report(&report, &a.out)?;
    eprintln!("{}: ARR {} over {} rounds", report.method(), report.arr(), report.rounds().len());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let profile = CalibrationProfile::load(&a.profile)?;
    let manifest = load_manifest(&a.manifest)?;
    let level: IlluminationLevel = a.level.parse()?;
    let grid = parse_grid(&a.grid)?;
    let axis: SweepAxis = a.axis.into();
    let images = load_manifest_images(&manifest)?;
    let rows = sweep_images(&images, &profile, axis, &grid, level)?;
    write_sweep_csv(&rows, &a.out)?;
    if let Some(path) = &a.update_profile {
        if axis != SweepAxis::K {
            return Err(Error::Parameter("--update-profile requires --axis k".into()));
        }
        let mut updated = profile.clone();
        updated.set_lef_performance(level, rows.iter().map(|r| r.arr * 100.0).collect())?;
        updated.save(path)?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let set =
        SyntheticSet { identities: a.identities, variants: a.variants, width: a.width, height: a.height, seed: a.seed };
    fs::create_dir_all(&a.out_dir).map_err(|source| Error::Write { path: a.out_dir.clone(), source })?;
    let mut rows = Vec::new();
    for (id, scenes) in set.generate()? {
        for (v, scene) in scenes.iter().enumerate() {
            let stem = format!("{id}_v{v}");
            let image_name = format!("{stem}.pgm");
            save_image(&quantize(&scene.image), a.out_dir.join(&image_name))?;

            let mut sidecar = format!(
                "seed = {}\nkind = {}\nillumination = {}\nstrength = {}\n",
                scene.spec.identity_seed,
                scene.spec.illumination.name(),
                scene.spec.illumination,
                scene.spec.strength
            );
            for radius in 1..=5 {
                sidecar.push_str(&format!("epsilon_max_r{radius} = {}\n", epsilon_bound(&scene.illumination, radius)?));
            }
            let sidecar_path = a.out_dir.join(format!("{stem}.txt"));
            fs::write(&sidecar_path, sidecar).map_err(|source| Error::Write { path: sidecar_path, source })?;
            rows.push((id.clone(), image_name));
        }
    }
    write_manifest(&rows, a.out_dir.join("manifest.csv"))?;
    eprintln!("wrote {} images to {}", rows.len(), a.out_dir.display());
    Ok(())
}

fn cmd_hist(a: HistArgs) -> Result<()> {
    let map = compute_stage(&a.image, &a.profile, a.stage, a.k, a.level.as_deref())?;
    let bins = feature_histogram(&map, a.bins)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin_center", "count"])?;
    for b in &bins {
        w.write_record([b.center.to_string(), b.count.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    match &a.out {
        Some(p) => fs::write(p, bytes).map_err(|source| Error::Write { path: p.clone(), source }),
        None => std::io::stdout().write_all(&bytes).map_err(|source| Error::Write { path: "<stdout>".into(), source }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let c = RunConfig::parse("# c\nmethod = weber\nout_dir = x\n").unwrap();
        assert_eq!(c.values["method"], "weber");
        assert_eq!(c.values["out-dir"], "x");
        assert!(RunConfig::parse("novalue\n").is_err());
        assert!(RunConfig::parse("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(["ajlef", "frobnicate"]), 2);
        assert_eq!(run(["ajlef", "classify", "--bogus"]), 2);
    }
}
