use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use sunqp_core::ingest::{write_daily_csv, write_wolf_csv, CarringtonCalendar, Hemisphere};
use sunqp_core::pipeline::{self, AnalysisConfig};
use sunqp_core::synth::{self, SolarDatasetSpec, SynthSpec};
use sunqp_core::timeseries::rotation_means;
use sunqp_core::{Error, Result};

/// Mid-term quasi-periodicity analysis of hemispheric sunspot areas.
#[derive(Debug, Parser)]
#[command(name = "sunqp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the input archives and write canonical CSVs plus rotation means.
    Ingest(Common),
    /// Fit the amplitude model per hemisphere and print it as JSON.
    Fit(Common),
    /// Run the full analysis and write report, CSVs and plots.
    Analyze(Common),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Render summary.md from an existing report.json.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` configuration file, applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    daily: Option<PathBuf>,
    #[arg(long)]
    wolf: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to the northern hemisphere.
    #[arg(long)]
    north: bool,
    /// Restrict to the southern hemisphere.
    #[arg(long)]
    south: bool,
    /// Force the stabilization window instead of selecting it.
    #[arg(long)]
    u: Option<usize>,
    #[arg(long)]
    max_lag: Option<usize>,
    /// Skip SVG output.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON `SynthSpec`; without it a daily-area/Wolf dataset is written.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Seed of the default daily-area/Wolf dataset.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "synth")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding report.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> Result<AnalysisConfig> {
        let mut c = AnalysisConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        if let Some(p) = &self.daily {
            c.daily = p.clone();
        }
        if let Some(p) = &self.wolf {
            c.wolf = p.clone();
        }
        if let Some(p) = &self.out {
            c.out = p.clone();
        }
        match (self.north, self.south) {
            (true, false) => c.hemispheres = vec![Hemisphere::North],
            (false, true) => c.hemispheres = vec![Hemisphere::South],
            (true, true) => c.hemispheres = Hemisphere::BOTH.to_vec(),
            (false, false) => {}
        }
        if self.u.is_some() {
            c.u = self.u;
        }
        if let Some(m) = self.max_lag {
            c.max_lag = m;
        }
        if self.no_plots {
            c.plots = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn ingest(args: &Common) -> Result<()> {
    let config = args.config()?;
    let inputs = pipeline::load_inputs(&config)?;
    let calendar = CarringtonCalendar::standard();
    write(&config.out.join("daily.csv"), &write_daily_csv(&inputs.daily))?;
    write(&config.out.join("wolf.csv"), &write_wolf_csv(&inputs.wolf))?;
    for &h in &config.hemispheres {
        let means = rotation_means(&inputs.daily, &calendar, h)?;
        write(&config.out.join(format!("mean_{}.csv", h.name())), &means.series.to_csv())?;
    }
    for f in &inputs.files {
        println!(
            "{}: {} records ({} missing, {} malformed dropped) sha256 {}",
            f.role, f.records, f.dropped_missing, f.dropped_malformed, f.sha256
        );
    }
    Ok(())
}

fn fit(args: &Common) -> Result<()> {
    let config = args.config()?;
    let inputs = pipeline::load_inputs(&config)?;
    let analysis = pipeline::analyze(&inputs, &config)?;
    let fits: Vec<serde_json::Value> = analysis
        .report
        .hemispheres
        .iter()
        .map(|h| {
            serde_json::json!({
                "hemisphere": h.hemisphere,
                "fit": h.fit,
                "u_candidates": h.u_candidates,
                "frac_means_in_1sigma": h.stationarity.frac_means_in_1sigma,
                "frac_stds_in_2sigma": h.stationarity.frac_stds_in_2sigma,
            })
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&fits)?);
    Ok(())
}

fn analyze(args: &Common) -> Result<()> {
    let config = args.config()?;
    let analysis = pipeline::run(&config)?;
    for f in &analysis.report.aggregates.decrease {
        println!("decrease {}: {}/{}", f.label, f.count, f.total);
    }
    println!("report: {}", pipeline::report_path(&config.out).display());
    Ok(())
}

fn synth_cmd(args: &SynthArgs) -> Result<()> {
    match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let spec: SynthSpec = serde_json::from_str(&text)?;
            write(&args.out.join("series.csv"), &synth::generate(&spec)?.to_csv())
        }
        None => {
            let spec = SolarDatasetSpec {
                seed: args.seed,
                ..SolarDatasetSpec::default()
            };
            let (daily, wolf) = synth::solar_dataset(&spec)?;
            write(&args.out.join("daily_areas.csv"), &write_daily_csv(&daily))?;
            write(&args.out.join("monthly_wolf.csv"), &write_wolf_csv(&wolf))
        }
    }
}

fn report(args: &ReportArgs) -> Result<()> {
    let report = pipeline::read_report(&pipeline::report_path(&args.out))?;
    write(&args.out.join("summary.md"), &pipeline::render_summary(&report))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Fit(a) => fit(a),
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sunqp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
