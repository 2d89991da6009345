use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use transmon_readout::config::{DiscriminatorKind, ExperimentConfig, Overrides};
use transmon_readout::experiments::{
    run_frequency_selection, run_shelving_decay, run_three_state, run_two_state, RunReport,
    RunSummary,
};
use transmon_readout::ReadoutError;

/// Multilevel dispersive readout simulator for a transmon.
#[derive(Parser)]
#[command(name = "transmon-readout", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state population after preparing |0>..|3>, with a decay-time fit.
    ShelvingDecay(Common),
    /// |0> vs not-|0> readout with and without shelving.
    TwoState(Common),
    /// |0>/|1>/|2> readout: two-tone truth table, FNN and single-tone baseline.
    ThreeState(Common),
    /// Per-level transmission and readout frequency selection.
    FreqSelect(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults to the reference device.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measurement shots per prepared state.
    #[arg(long)]
    shots: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// threshold, gaussian, truth-table or fnn.
    #[arg(long)]
    discriminator: Option<String>,
    #[arg(long)]
    no_shelving: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, ReadoutError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let discriminator = self
            .discriminator
            .as_deref()
            .map(str::parse::<DiscriminatorKind>)
            .transpose()?;
        config.apply(&Overrides {
            seed: self.seed,
            shots: self.shots,
            discriminator,
            no_shelving: self.no_shelving,
        });
        config.validate()?;
        Ok(config)
    }
}

fn print_summary(report: &RunReport) {
    println!("experiment   {}", report.experiment);
    println!("config hash  {}", report.config_hash);
    println!("seed         {}", report.seed);
    match &report.summary {
        RunSummary::ShelvingDecay(s) => {
            println!(
                "p0(tau_r)    |1> {:.4}%  |2> {:.4}%  |3> {:.5}%",
                100.0 * s.p0_at_readout_analytic[1],
                100.0 * s.p0_at_readout_analytic[2],
                100.0 * s.p0_at_readout_analytic[3]
            );
            if let Some(fit) = &report.fitted_rates {
                println!(
                    "fitted       T01 {:.3} us  T12 {:.3} us  T23 {:.3} us",
                    fit.rates.t01, fit.rates.t12, fit.rates.t23
                );
            }
        }
        RunSummary::TwoState(s) => {
            for v in [&s.shelved, &s.unshelved] {
                println!(
                    "{:<12} F_a {:.4}% (std {:.4}%)  F_id {:.4}%  SNR {:.3}",
                    if v.shelving { "shelved" } else { "unshelved" },
                    100.0 * v.fidelity.assignment_fidelity,
                    100.0 * v.assignment_fidelity_std,
                    100.0 * v.fidelity.ideal_fidelity.unwrap_or(f64::NAN),
                    v.fidelity.snr.unwrap_or(f64::NAN)
                );
            }
            println!("error reduction {:.1}%", 100.0 * s.error_reduction);
        }
        RunSummary::ThreeState(s) => {
            for (name, r) in [
                ("truth table", &s.truth_table),
                ("fnn", &s.fnn),
                ("single tone", &s.single_tone),
            ] {
                println!(
                    "{:<12} F_a {:.3}%  overall error {:.3}%  discarded {:.3}%",
                    name,
                    100.0 * r.fidelity.assignment_fidelity,
                    100.0 * r.overall_error,
                    100.0 * r.fidelity.overlap_discard_fraction
                );
            }
        }
        RunSummary::FrequencySelection(s) => {
            println!(
                "primary      {:.6} GHz\nsecondary    {:.6} GHz ({:.3} MHz apart)",
                s.selection.primary, s.selection.secondary, s.separation_mhz
            );
            println!(
                "photons      {:.2} of n_crit {:.2} ({})",
                s.total_photon_number,
                s.critical_photon_number,
                if s.photon_number_ok { "ok" } else { "exceeded" }
            );
        }
    }
    for name in &report.outputs {
        println!("wrote        {name}");
    }
    println!("wall clock   {:.2} s", report.wall_clock_s);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (
        &Common,
        fn(&ExperimentConfig, Option<&std::path::Path>) -> _,
    ) = match &cli.command {
        Command::ShelvingDecay(c) => (c, run_shelving_decay),
        Command::TwoState(c) => (c, run_two_state),
        Command::ThreeState(c) => (c, run_three_state),
        Command::FreqSelect(c) => (c, run_frequency_selection),
    };
    let result = common
        .load()
        .and_then(|config| run(&config, Some(common.out.as_path())));
    match result {
        Ok(report) => {
            print_summary(&report);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.category().exit_code() as u8)
        }
    }
}
