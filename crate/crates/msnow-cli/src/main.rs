//! Command-line front end: PN-set generation and verification, scenario
//! runs, parameter sweeps, and the analytical calculators.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use msnow::metrics::{
    scalability_estimate, scalability_estimate_paired, shannon_bitrate, spread_bitrate,
    MetricsReport,
};
use msnow::netsim::{
    parse_config, run_downlink, run_p2p, run_snow_baseline, run_uplink_convergecast, EventLog,
    ScenarioConfig, ScenarioKind,
};
use msnow::pnseq::{evaluation_sets, gold_bound, verify_three_valued, PnSet};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "msnow",
    about = "Gold-code concurrent PHY simulator for the SNOW LPWAN",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gold PN set and print one bitstring per line.
    GenPn(GenPnArgs),
    /// Verify the three-valued cross-correlation property of a PN set.
    VerifyPn(VerifyPnArgs),
    /// Run the uplink convergecast scenario.
    RunUplink(RunArgs),
    /// Run the concurrent downlink scenario.
    RunDownlink(RunArgs),
    /// Run the P2P-through-the-base-station scenario.
    RunP2p(RunArgs),
    /// Run the legacy comparator for the configured scenario kind.
    RunBaseline(RunArgs),
    /// Analytical calculators: Shannon/spread bitrates and scalability.
    Estimate(EstimateArgs),
    /// Sweep a parameter grid and emit one report per point plus a CSV table.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenPnArgs {
    /// LFSR degree n (sequence length 2^n - 1).
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// First register seed, MSB first.
    #[arg(long, default_value = "101")]
    seed1: String,
    /// Second register seed, MSB first.
    #[arg(long, default_value = "101")]
    seed2: String,
    /// Set label for exports.
    #[arg(long, default_value = "PNs1")]
    label: String,
    /// Write the set to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyPnArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value = "101")]
    seed1: String,
    #[arg(long, default_value = "101")]
    seed2: String,
    /// Verify a set loaded from a text dump instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario config file (key = value lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports and dumps.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's repetition count.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the noise switch.
    #[arg(long, value_parser = ["on", "off"])]
    noise: Option<String>,
    /// Write the event log CSV next to the report.
    #[arg(long)]
    dump_events: bool,
    /// Synthesize and dump baseband I/Q for the first active subcarrier
    /// (diagnostic; truncated to a few packets per sensor).
    #[arg(long)]
    dump_signal: bool,
}

#[derive(Args)]
struct EstimateArgs {
    /// Subcarrier bandwidth in Hz for the bitrate calculators.
    #[arg(long, default_value_t = 200e3)]
    bandwidth_hz: f64,
    /// Linear SNR ratio (not dB).
    #[arg(long, default_value_t = 3.0)]
    snr_ratio: f64,
    /// Spreading factor N.
    #[arg(long, default_value_t = 7)]
    spreading: usize,
    /// Scalability: TV white-space channels.
    #[arg(long, default_value_t = 1)]
    channels: u64,
    /// Scalability: subcarriers per channel.
    #[arg(long, default_value_t = 29)]
    subcarriers: u64,
    /// Scalability: concurrent sensors per subcarrier.
    #[arg(long, default_value_t = 9)]
    sensors_per_subcarrier: u64,
    /// Scalability: packet airtime in microseconds.
    #[arg(long, default_value_t = 2000)]
    airtime_us: u64,
    /// Scalability: packets per sensor per day.
    #[arg(long, default_value_t = 140)]
    packets_per_day: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Swept dimension.
    #[arg(long, value_parser = ["sensors", "pairs"])]
    kind: String,
    #[arg(long)]
    from: usize,
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Also run the legacy baseline at every grid point.
    #[arg(long)]
    baseline: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<(), (u8, String)>;

fn config_err<E: std::fmt::Display>(e: E) -> (u8, String) {
    (EXIT_CONFIG, e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> (u8, String) {
    (EXIT_RUNTIME, e.to_string())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::GenPn(args) => gen_pn(args),
        Command::VerifyPn(args) => verify_pn(args),
        Command::RunUplink(args) => run_scenario(args, Some(ScenarioKind::Uplink), false),
        Command::RunDownlink(args) => run_scenario(args, Some(ScenarioKind::Downlink), false),
        Command::RunP2p(args) => run_scenario(args, Some(ScenarioKind::P2p), false),
        Command::RunBaseline(args) => run_scenario(args, None, true),
        Command::Estimate(args) => estimate(args),
        Command::Sweep(args) => sweep(args),
    }
}

fn build_set(n: usize, seed1: &str, seed2: &str, label: &str) -> Result<PnSet, (u8, String)> {
    PnSet::from_seeds(n, seed1, seed2, label).map_err(config_err)
}

fn gen_pn(args: GenPnArgs) -> CmdResult {
    let set = build_set(args.n, &args.seed1, &args.seed2, &args.label)?;
    let text = set.to_text();
    match args.out {
        Some(path) => std::fs::write(&path, text).map_err(runtime_err)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn verify_pn(args: VerifyPnArgs) -> CmdResult {
    let set = match args.input {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(config_err)?;
            PnSet::from_text(&text, "imported").map_err(config_err)?
        }
        None => build_set(args.n, &args.seed1, &args.seed2, "PNs")?,
    };
    let report = verify_three_valued(&set);
    let t = gold_bound(set.degree());
    let verdict = if report.passes { "PASS" } else { "FAIL" };
    println!("three-valued: {verdict} {{{}, {}, {}}}", -t, -1, t - 2);
    println!("observed values: {:?}", report.values);
    if report.passes {
        Ok(())
    } else {
        Err((EXIT_RUNTIME, "cross-correlation property violated".into()))
    }
}

fn load_config(args: &RunArgs, kind: Option<ScenarioKind>) -> Result<ScenarioConfig, (u8, String)> {
    let mut config = match &args.config {
        Some(path) => parse_config(path).map_err(config_err)?,
        None => ScenarioConfig::default(),
    };
    config.apply_env_overrides().map_err(config_err)?;
    if let Some(kind) = kind {
        config.scenario = kind;
    }
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    if let Some(reps) = args.reps {
        config.repetitions = reps;
    }
    if let Some(noise) = &args.noise {
        config.noise = noise == "on";
    }
    config.validate().map_err(config_err)?;
    Ok(config)
}

fn write_artifacts(
    args: &RunArgs,
    name: &str,
    report: &MetricsReport,
    log: &EventLog,
) -> CmdResult {
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(runtime_err)?;
        std::fs::write(dir.join(format!("{name}.json")), report.to_json()).map_err(runtime_err)?;
        let mut csv = String::from(MetricsReport::csv_header());
        csv.push('\n');
        csv.push_str(&report.csv_row());
        csv.push('\n');
        std::fs::write(dir.join(format!("{name}_summary.csv")), csv).map_err(runtime_err)?;
        if args.dump_events {
            std::fs::write(dir.join(format!("{name}_events.csv")), log.to_csv())
                .map_err(runtime_err)?;
        }
    } else if args.dump_events {
        return Err((EXIT_USAGE, "--dump-events requires --out <dir>".to_string()));
    }
    Ok(())
}

fn dump_signal(args: &RunArgs, config: &ScenarioConfig, name: &str) -> CmdResult {
    use msnow::phy::{add_awgn, build_subcarrier_plan, place_transmission, synthesize_uplink};
    use msnow::spreadcodec::encode_packet;

    let Some(dir) = &args.out else {
        return Err((EXIT_USAGE, "--dump-signal requires --out <dir>".into()));
    };
    let plan = build_subcarrier_plan(
        config.band_start_hz,
        config.band_end_hz,
        config.subcarrier_bw_hz,
        config.overlap,
    )
    .map_err(config_err)?;
    let active = if config.active_subcarriers == 0 {
        (1..=plan.len()).collect::<Vec<_>>()
    } else {
        plan.centered_block(config.active_subcarriers)
            .map_err(config_err)?
    };
    let (pns1, pns2) = evaluation_sets();
    let profiles = msnow::netsim::assign_pn_sequences(
        &plan,
        &active[..1],
        config.sensors_per_subcarrier,
        (&pns1, &pns2),
    )
    .map_err(config_err)?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(config.rng_seed);
    let mut limited = config.clone();
    limited.packets_per_sensor = config.packets_per_sensor.min(4);
    let txs: Vec<_> = profiles
        .iter()
        .flat_map(|p| {
            msnow::netsim::generate_traffic(p, &limited, &mut rng, 0)
                .into_iter()
                .map(move |planned| {
                    place_transmission(
                        p.id,
                        p.subcarrier_index,
                        &p.pn,
                        encode_packet(&planned.packet, &p.pn).expect("non-empty packet"),
                        planned.start_chip,
                        planned.phase,
                    )
                })
        })
        .collect();
    let mut signal = synthesize_uplink(&txs, &plan, None).map_err(runtime_err)?;
    if limited.noise {
        add_awgn(&mut signal, limited.snr_db, &mut rng).map_err(runtime_err)?;
    }
    signal
        .dump_iq(&dir.join(format!("{name}.iq")))
        .map_err(runtime_err)?;
    Ok(())
}

fn run_scenario(args: RunArgs, kind: Option<ScenarioKind>, baseline: bool) -> CmdResult {
    let config = load_config(&args, kind)?;
    let (log, report) = if baseline {
        run_snow_baseline(&config).map_err(runtime_err)?
    } else {
        match config.scenario {
            ScenarioKind::Uplink => run_uplink_convergecast(&config).map_err(runtime_err)?,
            ScenarioKind::Downlink => run_downlink(&config).map_err(runtime_err)?,
            ScenarioKind::P2p => run_p2p(&config).map_err(runtime_err)?,
        }
    };
    println!("{}", summary_line(&report));
    let name = report.scenario.clone();
    write_artifacts(&args, &name, &report, &log)?;
    if args.dump_signal {
        dump_signal(&args, &config, &name)?;
    }
    Ok(())
}

fn summary_line(report: &MetricsReport) -> String {
    let mut line = format!(
        "{}: {} / {} packets delivered",
        report.scenario, report.delivered_packets, report.total_packets
    );
    if let Some(cdr) = report.average_cdr_percent {
        line.push_str(&format!(", avg CDR {cdr:.2}%"));
    }
    line.push_str(&format!(
        ", throughput {:.3} Mbps",
        report.throughput_bps / 1e6
    ));
    if let Some(latency) = report.mean_latency_s {
        line.push_str(&format!(", latency {:.3} ms", latency * 1e3));
    }
    if let Some(energy) = report.mean_energy_j {
        line.push_str(&format!(", energy {:.4} mJ", energy * 1e3));
    }
    if let Some(e2e) = report.mean_e2e_latency_s {
        line.push_str(&format!(", mean E2E {:.2} ms", e2e * 1e3));
    }
    line
}

fn estimate(args: EstimateArgs) -> CmdResult {
    let shannon = shannon_bitrate(args.bandwidth_hz, args.snr_ratio);
    let per_sensor = spread_bitrate(args.bandwidth_hz, args.snr_ratio, args.spreading);
    println!(
        "shannon capacity: {:.3} kbps over {:.0} kHz at SNR ratio {}",
        shannon / 1e3,
        args.bandwidth_hz / 1e3,
        args.snr_ratio
    );
    println!(
        "per-sensor spread bitrate (N = {}): {:.2} kbps",
        args.spreading,
        per_sensor / 1e3
    );
    println!(
        "subcarrier aggregate across {} sensors: {:.2} kbps",
        args.spreading + 2,
        per_sensor * (args.spreading + 2) as f64 / 1e3
    );
    let uplink_only = scalability_estimate(
        args.channels,
        args.subcarriers,
        args.sensors_per_subcarrier,
        args.airtime_us,
        args.packets_per_day,
    );
    let paired = scalability_estimate_paired(
        args.channels,
        args.subcarriers,
        args.sensors_per_subcarrier,
        args.airtime_us,
        args.packets_per_day,
    );
    println!("scalability (uplink only): {uplink_only} sensors");
    println!("scalability (uplink + downlink paired): {paired} sensors");
    Ok(())
}

fn sweep(args: SweepArgs) -> CmdResult {
    if args.from > args.to || args.step == 0 {
        return Err((EXIT_USAGE, "empty sweep grid".into()));
    }
    let base = load_config(&args.run, None)?;
    let mut rows = vec![MetricsReport::csv_header().to_string()];
    let mut any_err = false;
    let mut point = args.from;
    while point <= args.to {
        let mut config = base.clone();
        // Deterministic sub-seed per grid point.
        config.rng_seed = base
            .rng_seed
            .wrapping_add(point as u64)
            .wrapping_mul(0x9E37_79B9);
        match args.kind.as_str() {
            "sensors" => {
                if point % 64 != 0 || point == 0 {
                    return Err((
                        EXIT_USAGE,
                        format!("sensors grid points must be multiples of 64, got {point}"),
                    ));
                }
                config.scenario = ScenarioKind::Uplink;
                config.sensors_per_subcarrier = point / 64;
            }
            "pairs" => {
                config.scenario = ScenarioKind::P2p;
                config.pairs = point;
            }
            _ => unreachable!("clap enum"),
        }
        if let Err(e) = config.validate() {
            eprintln!("point {point}: {e}");
            any_err = true;
            point += args.step;
            continue;
        }
        let result = if args.baseline {
            run_snow_baseline(&config)
        } else {
            match config.scenario {
                ScenarioKind::Uplink => run_uplink_convergecast(&config),
                ScenarioKind::Downlink => run_downlink(&config),
                ScenarioKind::P2p => run_p2p(&config),
            }
        };
        match result {
            Ok((log, report)) => {
                println!("point {point}: {}", summary_line(&report));
                rows.push(report.csv_row());
                if let Some(dir) = &args.run.out {
                    std::fs::create_dir_all(dir).map_err(runtime_err)?;
                    let name = format!("{}_{point}", report.scenario);
                    std::fs::write(dir.join(format!("{name}.json")), report.to_json())
                        .map_err(runtime_err)?;
                    if args.run.dump_events {
                        std::fs::write(dir.join(format!("{name}_events.csv")), log.to_csv())
                            .map_err(runtime_err)?;
                    }
                }
            }
            Err(e) => {
                eprintln!("point {point}: {e}");
                any_err = true;
            }
        }
        point += args.step;
    }
    if let Some(dir) = &args.run.out {
        std::fs::create_dir_all(dir).map_err(runtime_err)?;
        std::fs::write(dir.join("sweep.csv"), rows.join("\n") + "\n").map_err(runtime_err)?;
    } else {
        println!("{}", rows.join("\n"));
    }
    if any_err {
        Err((EXIT_RUNTIME, "one or more sweep points failed".into()))
    } else {
        Ok(())
    }
}
