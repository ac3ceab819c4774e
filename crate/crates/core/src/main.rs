use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsdmas::beamform::{Beamformer, EvalMode};
use dsdmas::bench::{bench, BenchConfig};
use dsdmas::scenario::{
    shipped, write_config, write_image_outputs, write_manifest, write_metric_outputs, write_rf_output, Overrides,
    ScenarioConfig, SHIPPED,
};
use dsdmas::{io, Error, Result};

#[derive(Parser)]
#[command(name = "dsdmas", version, about = "Photoacoustic DAS / DMAS / DS-DMAS reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate RF data and write rf.parf.
    Simulate(Common),
    /// Beamform an RF file into images.
    Beamform(WithRf),
    /// Beamform an RF file and measure image quality.
    Metrics(WithRf),
    /// Simulate, beamform and measure in one go.
    Run(Common),
    /// Time the beamforming kernels against the element count.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file, or the name of a shipped scenario.
    #[arg(long)]
    config: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Noise seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Display dynamic range in dB.
    #[arg(long = "dynamic-range")]
    dynamic_range: Option<f64>,
}

#[derive(Args)]
struct WithRf {
    #[command(flatten)]
    common: Common,
    /// RF input; defaults to <out>/rf.parf.
    #[arg(long)]
    rf: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Writes bench.json here when given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    elements: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    repetitions: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Das,
    Dmas,
    Dsdmas,
    All,
}

impl MethodArg {
    fn beamformers(self) -> Vec<Beamformer> {
        match self {
            MethodArg::Das => vec![Beamformer::Das],
            MethodArg::Dmas => vec![Beamformer::Dmas],
            MethodArg::Dsdmas => vec![Beamformer::DsDmas],
            MethodArg::All => Beamformer::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Fast,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Naive => EvalMode::Naive,
            ModeArg::Fast => EvalMode::Fast,
        }
    }
}

fn load_config(c: &Common) -> Result<ScenarioConfig> {
    let path = Path::new(&c.config);
    let mut cfg = if !path.exists() && SHIPPED.iter().any(|(n, _)| *n == c.config) {
        shipped(&c.config)?
    } else {
        ScenarioConfig::load(path)?
    };
    Overrides {
        seed: c.seed,
        methods: c.method.map(MethodArg::beamformers),
        mode: c.mode.map(Into::into),
        dynamic_range_db: c.dynamic_range,
    }
    .apply(&mut cfg);
    Ok(cfg)
}

fn print_metrics(report: &dsdmas::metrics::MetricsReport) {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    for m in &report.methods {
        for t in &m.targets {
            println!(
                "{} target ({:.1}, {:.1}) mm: snr {} dB, fwhm {} mm, sidelobe {} dB, energy {}",
                m.method,
                t.lateral_mm,
                t.depth_mm,
                opt(t.snr_db),
                opt(t.fwhm_mm),
                opt(t.sidelobe_db),
                opt(t.energy_fraction)
            );
        }
        for c in &m.contrast {
            println!("{} contrast {}: {:.3} dB", m.method, c.label, c.cr_db);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load_config(&c)?;
            let scenario = cfg.resolve()?;
            let frame = scenario.simulate()?;
            let files = vec![write_config(&cfg, &c.out)?, write_rf_output(&frame, &c.out)?];
            write_manifest(&scenario, &files, &c.out)?;
            println!("wrote {}", files[1].display());
        }
        Command::Beamform(w) => {
            let (cfg, scenario, images) = reconstruct(&w)?;
            let mut files = vec![write_config(&cfg, &w.common.out)?];
            files.extend(write_image_outputs(&images, &w.common.out)?);
            write_manifest(&scenario, &manifest_files(&w, files.clone()), &w.common.out)?;
            for f in &files[1..] {
                println!("wrote {}", f.display());
            }
        }
        Command::Metrics(w) => {
            let (cfg, scenario, images) = reconstruct(&w)?;
            let report = scenario.evaluate(&images)?;
            let mut files = vec![write_config(&cfg, &w.common.out)?];
            files.extend(write_metric_outputs(&scenario, &images, &report, &w.common.out)?);
            write_manifest(&scenario, &manifest_files(&w, files), &w.common.out)?;
            print_metrics(&report);
        }
        Command::Run(c) => {
            let cfg = load_config(&c)?;
            let run = dsdmas::scenario::run_config(&cfg, &c.out)?;
            print_metrics(&run.report);
            println!("outputs in {}", c.out.display());
        }
        Command::Bench(b) => {
            let beamformers = b.method.unwrap_or(MethodArg::All).beamformers();
            let modes: Vec<EvalMode> = match b.mode {
                Some(m) => vec![m.into()],
                None => vec![EvalMode::Naive, EvalMode::Fast],
            };
            let config = BenchConfig {
                elements: b.elements,
                repetitions: b.repetitions,
                seed: b.seed,
                methods: beamformers
                    .iter()
                    .flat_map(|&bf| modes.iter().map(move |&m| dsdmas::beamform::BeamformMethod::new(bf, m)))
                    .collect(),
                ..BenchConfig::default()
            };
            let report = bench(&config)?;
            print!("{}", report.render());
            if let Some(dir) = b.out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                let p = dir.join("bench.json");
                let json = serde_json::to_string_pretty(&report).expect("bench report serialises");
                std::fs::write(&p, json + "\n").map_err(|e| Error::Io { path: p.clone(), source: e })?;
            }
        }
    }
    Ok(())
}

type Reconstructed = (ScenarioConfig, dsdmas::scenario::Scenario, Vec<dsdmas::scenario::MethodImage>);

/// Output files to hash, keeping an RF input that lives in the output
/// directory so the manifest still covers it.
fn manifest_files(w: &WithRf, mut files: Vec<PathBuf>) -> Vec<PathBuf> {
    let rf = w.rf.clone().unwrap_or_else(|| w.common.out.join("rf.parf"));
    if rf.starts_with(&w.common.out) {
        files.push(rf);
    }
    files
}

fn reconstruct(w: &WithRf) -> Result<Reconstructed> {
    let cfg = load_config(&w.common)?;
    let scenario = cfg.resolve()?;
    let rf = w.rf.clone().unwrap_or_else(|| w.common.out.join("rf.parf"));
    let frame = io::read_rf(&rf)?;
    let images = scenario.reconstruct(&frame)?;
    Ok((cfg, scenario, images))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), one_line(&e.to_string()));
            ExitCode::from(1)
        }
    }
}
