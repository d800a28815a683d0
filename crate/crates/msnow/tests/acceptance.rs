//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured values. Tolerances are pinned in code.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use msnow::metrics::{
    scalability_estimate, scalability_estimate_paired, spread_bitrate, MetricsReport,
};
use msnow::netsim::{
    run_downlink, run_p2p, run_snow_baseline, run_uplink_convergecast, ScenarioConfig,
    ScenarioKind,
};
use msnow::phy::{
    add_awgn, gfft_demux, place_transmission, synthesize_uplink, SubcarrierPlan,
};
use msnow::pnseq::{
    autocorrelation, evaluation_sets, generate_msequence,
    gold_bound, verify_three_valued, PnSet, Polynomial, Seed,
};
use msnow::spreadcodec::ChipStream;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PNS1: [&str; 9] = [
    "1011100", "1010011", "0001111", "1111011", "0010010", "1000001", "1100110", "0101000",
    "0110101",
];
const PNS2: [&str; 9] = [
    "0101110", "0100111", "0001001", "1100000", "0110011", "0010100", "1011010", "1000111",
    "1111101",
];

fn pass(criterion: &str, detail: String) {
    println!("criterion {criterion}: PASS — {detail}");
}

/// Criterion 1: the generator reproduces the two printed PN sets bit-exactly
/// from their seeds.
#[test]
fn criterion_01_pn_set_reproduction() {
    let set1 = PnSet::from_seeds(3, "101", "101", "PNs1").unwrap();
    let set2 = PnSet::from_seeds(3, "010", "010", "PNs2").unwrap();
    let got1: Vec<String> = set1.sequences().iter().map(|s| s.to_string()).collect();
    let got2: Vec<String> = set2.sequences().iter().map(|s| s.to_string()).collect();
    assert_eq!(got1, PNS1, "PNs1 mismatch");
    assert_eq!(got2, PNS2, "PNs2 mismatch");
    pass("1", "PNs1 and PNs2 reproduced bit-exactly from seeds 101/101 and 010/010".into());
}

/// Criterion 2: exhaustive three-valued cross-correlation for n = 3 and
/// n = 5, every pair of set members at every shift.
#[test]
fn criterion_02_gold_correlation_property() {
    for (n, seed) in [(3usize, "101"), (5, "10101")] {
        let set = PnSet::from_seeds(n, seed, seed, format!("G{n}")).unwrap();
        let report = verify_three_valued(&set);
        let t = gold_bound(n);
        assert!(
            report.passes,
            "n={n}: observed values {:?} exceed {{{}, -1, {}}}",
            report.values,
            -t,
            t - 2
        );
    }
    pass(
        "2",
        format!(
            "n=3 values in {{-5,-1,3}}, n=5 values in {{-9,-1,7}} over all pairs and shifts"
        ),
    );
}

/// Criterion 3: balance, run-length profile, and two-valued autocorrelation
/// for n in {3, 5, 6, 7}, exactly.
#[test]
fn criterion_03_msequence_properties() {
    for n in [3usize, 5, 6, 7] {
        let poly = Polynomial::primitive(n).unwrap();
        let mut seed_bits = vec![0u8; n];
        seed_bits[n - 1] = 1;
        let m = generate_msequence(&poly, &Seed::new(seed_bits).unwrap()).unwrap();
        let period = (1usize << n) - 1;
        assert_eq!(m.len(), period);
        let (ones, zeros) = m.balance();
        assert_eq!(ones, zeros + 1, "n={n} balance");
        assert!(m.has_msequence_run_profile(), "n={n} run profile");
        for tau in 0..period {
            let expect = if tau == 0 {
                Ratio::new(1, 1)
            } else {
                Ratio::new(-1, period as i64)
            };
            assert_eq!(autocorrelation(m.bits(), tau), expect, "n={n} tau={tau}");
        }
    }
    pass(
        "3",
        "balance, run profile, and {1, -1/N} autocorrelation exact for n in {3,5,6,7}".into(),
    );
}

/// Criterion 4: noise-free end-to-end identity at worst-case overlap:
/// 3 subcarriers x 9 sensors, zero-gap continuous trains with a 13-chip
/// deterministic stagger, AWGN off — 100% CDR uplink and downlink over
/// more than 1000 random packets.
#[test]
fn criterion_04_noise_free_identity() {
    let mut config = ScenarioConfig::default();
    config.active_subcarriers = 3;
    config.sensors_per_subcarrier = 9;
    config.packets_per_sensor = 40;
    config.repetitions = 1;
    config.noise = false;
    config.interval_min_ms = 0.0;
    config.interval_max_ms = 0.0;
    config.stagger_chips = 13;
    config.rng_seed = 99;

    let (_, up) = run_uplink_convergecast(&config).unwrap();
    assert!(up.total_packets >= 1000, "need >= 1000 packets");
    assert_eq!(up.average_cdr_percent, Some(100.0), "uplink CDR {:?}", up.average_cdr_percent);

    config.scenario = ScenarioKind::Downlink;
    let (_, down) = run_downlink(&config).unwrap();
    assert_eq!(
        down.average_cdr_percent,
        Some(100.0),
        "downlink CDR {:?}",
        down.average_cdr_percent
    );
    pass(
        "4",
        format!(
            "100% CDR uplink and downlink over {} + {} packets, noise-free worst-case overlap",
            up.total_packets, down.total_packets
        ),
    );
}

/// Criterion 5: RSS quantization bands: k in 0..=9 coherent concurrent
/// bit-1 senders, 50,000 demultiplexed samples per level, at least 99.9%
/// inside (k - 0.5, k + 0.5], at 6 dB SNR on the evaluation plan.
#[test]
fn criterion_05_rss_threshold_bands() {
    let plan = SubcarrierPlan::default_evaluation();
    let (p1, _) = evaluation_sets();
    let chips = 50_000usize;
    let subcarrier = 32;
    let mut worst = 100.0f64;
    for k in 0..=9usize {
        let txs: Vec<_> = (0..k)
            .map(|s| {
                place_transmission(
                    s as u64,
                    subcarrier,
                    &p1.sequences()[s],
                    ChipStream::from_chips(vec![1u8; chips], 7),
                    0,
                    num_complex::Complex64::new(1.0, 0.0),
                )
            })
            .collect();
        let mut signal = if k == 0 {
            // Empty level: an idle subcarrier next to one active sender.
            let tx = place_transmission(
                9,
                subcarrier + 4,
                &p1.sequences()[0],
                ChipStream::from_chips(vec![1u8; chips], 7),
                0,
                num_complex::Complex64::new(1.0, 0.0),
            );
            synthesize_uplink(&[tx], &plan, None).unwrap()
        } else {
            synthesize_uplink(&txs, &plan, None).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(500 + k as u64);
        add_awgn(&mut signal, 6.0, &mut rng).unwrap();
        let out = gfft_demux(&signal, &plan).unwrap();
        let row = &out.raw[subcarrier - 1];
        let in_band = row
            .iter()
            .take(chips)
            .filter(|&&m| {
                let m = f64::from(m);
                if k == 0 {
                    m <= 0.5
                } else {
                    m > k as f64 - 0.5 && m <= k as f64 + 0.5
                }
            })
            .count();
        let fraction = 100.0 * in_band as f64 / chips as f64;
        worst = worst.min(fraction);
        assert!(
            fraction >= 99.9,
            "level {k}: only {fraction:.3}% of samples in band"
        );
    }
    pass(
        "5",
        format!("all 10 levels hold their bands; worst level at {worst:.3}% in-band"),
    );
}

fn cdr_curve(direction: ScenarioKind, reps: usize) -> Vec<f64> {
    (1..=9)
        .map(|sensors| {
            let mut config = ScenarioConfig::default();
            config.scenario = direction;
            config.active_subcarriers = 3;
            config.sensors_per_subcarrier = sensors;
            config.packets_per_sensor = 100;
            config.repetitions = reps;
            config.rng_seed = 20260808;
            let (_, report) = match direction {
                ScenarioKind::Uplink => run_uplink_convergecast(&config).unwrap(),
                ScenarioKind::Downlink => run_downlink(&config).unwrap(),
                ScenarioKind::P2p => unreachable!(),
            };
            report.average_cdr_percent.expect("packets were sent")
        })
        .collect()
}

/// Criterion 6: uplink CDR on 3 subcarriers, 1-9 sensors each, 100 packets
/// x 20 repetitions: about 100% through 4 sensors, then within +-3
/// percentage points of 98.4 / 97.71 / 97.33 / 95.33 / 92.88.
#[test]
fn criterion_06_uplink_cdr_curve() {
    let targets = [98.4, 97.71, 97.33, 95.33, 92.88];
    let curve = cdr_curve(ScenarioKind::Uplink, 20);
    for (i, &cdr) in curve.iter().enumerate() {
        let sensors = i + 1;
        if sensors <= 4 {
            assert!(cdr >= 97.0, "{sensors} sensors: CDR {cdr:.2}% not ~100%");
        } else {
            let target = targets[sensors - 5];
            assert!(
                (cdr - target).abs() <= 3.0,
                "{sensors} sensors: CDR {cdr:.2}% vs target {target}"
            );
        }
    }
    pass(
        "6",
        format!(
            "uplink CDR curve {:?} within ±3pp of the reference sequence",
            curve.iter().map(|c| (c * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    );
}

/// Criterion 7: downlink CDR under the same setup: about 100% through 4
/// sensors, then within +-3 pp of 99 / 98.49 / 97.9 / 95.12 / 93.61.
#[test]
fn criterion_07_downlink_cdr_curve() {
    let targets = [99.0, 98.49, 97.9, 95.12, 93.61];
    let curve = cdr_curve(ScenarioKind::Downlink, 20);
    for (i, &cdr) in curve.iter().enumerate() {
        let sensors = i + 1;
        if sensors <= 4 {
            assert!(cdr >= 97.0, "{sensors} sensors: CDR {cdr:.2}% not ~100%");
        } else {
            let target = targets[sensors - 5];
            assert!(
                (cdr - target).abs() <= 3.0,
                "{sensors} sensors: CDR {cdr:.2}% vs target {target}"
            );
        }
    }
    pass(
        "7",
        format!(
            "downlink CDR curve {:?} within ±3pp of the reference sequence",
            curve.iter().map(|c| (c * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    );
}

struct SweepPoint {
    sensors: usize,
    msnow: MetricsReport,
    baseline: MetricsReport,
}

fn fig8_sweep() -> Vec<SweepPoint> {
    (1..=9)
        .map(|sensors_per_subcarrier| {
            let mut config = ScenarioConfig::default();
            config.sensors_per_subcarrier = sensors_per_subcarrier;
            config.packets_per_sensor = 20;
            config.interval_min_ms = 0.0;
            config.interval_max_ms = 0.0;
            config.repetitions = 1;
            config.rng_seed = 4242;
            let (_, msnow) = run_uplink_convergecast(&config).unwrap();
            // The baseline's latency/energy are queue-depth bound: run its
            // cheap event model at the full 100-packet trains.
            let mut baseline_config = config.clone();
            baseline_config.packets_per_sensor = 100;
            let (_, baseline) = run_snow_baseline(&baseline_config).unwrap();
            SweepPoint {
                sensors: 64 * sensors_per_subcarrier,
                msnow,
                baseline,
            }
        })
        .collect()
}

/// Criteria 8-10 share one sweep; the sweep itself is the expensive part.
#[test]
fn criterion_08_09_10_throughput_latency_energy() {
    let sweep = fig8_sweep();

    // Criterion 8: throughput scaling.
    let first = &sweep[0];
    let last = &sweep[sweep.len() - 1];
    let t64 = first.msnow.throughput_bps / 1e6;
    let t576 = last.msnow.throughput_bps / 1e6;
    assert!(
        (t64 - 2.56).abs() <= 0.256,
        "mSNOW throughput at 64 sensors: {t64:.3} Mbps vs 2.56 ± 10%"
    );
    let ratio = t576 / t64;
    assert!(
        (7.0..=9.5).contains(&ratio),
        "throughput ratio 576/64 = {ratio:.2} outside [7.0, 9.5]"
    );
    for p in &sweep {
        let tb = p.baseline.throughput_bps / 1e6;
        assert!(
            (1.9..=2.1).contains(&tb),
            "baseline throughput at {} sensors: {tb:.3} Mbps outside [1.9, 2.1]",
            p.sensors
        );
    }
    pass(
        "8",
        format!("mSNOW {t64:.2} -> {t576:.2} Mbps (ratio {ratio:.2}); baseline flat in [1.9, 2.1]"),
    );

    // Criterion 9: latency (±5% tolerance on the reference band).
    for p in &sweep {
        let ms = p.msnow.mean_latency_s.unwrap() * 1e3;
        assert!(
            (5.6 * 0.95..=6.03 * 1.05).contains(&ms),
            "mSNOW latency at {} sensors: {ms:.3} ms outside [5.6, 6.03] ± 5%",
            p.sensors
        );
    }
    for pair in sweep.windows(2) {
        let a = pair[0].baseline.mean_latency_s.unwrap();
        let b = pair[1].baseline.mean_latency_s.unwrap();
        assert!(
            b > a,
            "baseline latency not monotone: {:.1} -> {:.1} ms at {} sensors",
            a * 1e3,
            b * 1e3,
            pair[1].sensors
        );
    }
    let lat64 = sweep[0].msnow.mean_latency_s.unwrap() * 1e3;
    let lat576 = last.msnow.mean_latency_s.unwrap() * 1e3;
    pass(
        "9",
        format!("mSNOW latency {lat64:.2}..{lat576:.2} ms in band; baseline grows monotonically"),
    );

    // Criterion 10: energy (±5% tolerance on the reference band).
    for p in &sweep {
        let mj = p.msnow.mean_energy_j.unwrap() * 1e3;
        assert!(
            (0.2940 * 0.95..=0.3166 * 1.05).contains(&mj),
            "mSNOW energy at {} sensors: {mj:.4} mJ outside [0.2940, 0.3166] ± 5%",
            p.sensors
        );
    }
    let baseline_576 = last.baseline.mean_energy_j.unwrap();
    let msnow_576 = last.msnow.mean_energy_j.unwrap();
    assert!(
        baseline_576 >= 5.0 * msnow_576,
        "baseline energy at 576 sensors only {:.2}x mSNOW",
        baseline_576 / msnow_576
    );
    pass(
        "10",
        format!(
            "mSNOW energy in band across the sweep; baseline at 576 sensors {:.1}x mSNOW",
            baseline_576 / msnow_576
        ),
    );
}

/// Criterion 11: P2P end-to-end latency trend, 5..=25 pairs: endpoints at
/// 16.21 and 20.79 ms ± 10% with the calibrated forwarding path, and the
/// legacy baseline at least 2.5x slower at every point.
#[test]
fn criterion_11_p2p_e2e_trend() {
    let mut msnow_ms = Vec::new();
    let mut ratio_min = f64::INFINITY;
    for pairs in (5..=25).step_by(5) {
        let mut config = ScenarioConfig::default();
        config.scenario = ScenarioKind::P2p;
        config.pairs = pairs;
        config.packets_per_sensor = 100;
        config.repetitions = 1;
        config.rng_seed = 777;
        let (_, report) = run_p2p(&config).unwrap();
        let e2e = report.mean_e2e_latency_s.unwrap() * 1e3;
        let (_, baseline) = run_snow_baseline(&config).unwrap();
        let be2e = baseline.mean_e2e_latency_s.unwrap() * 1e3;
        assert!(
            be2e >= 2.5 * e2e,
            "{pairs} pairs: baseline {be2e:.2} ms < 2.5x mSNOW {e2e:.2} ms"
        );
        ratio_min = ratio_min.min(be2e / e2e);
        msnow_ms.push(e2e);
    }
    let five = msnow_ms[0];
    let twenty_five = msnow_ms[4];
    assert!(
        (five - 16.21).abs() <= 1.621,
        "5 pairs: {five:.2} ms vs 16.21 ± 10%"
    );
    assert!(
        (twenty_five - 20.79).abs() <= 2.079,
        "25 pairs: {twenty_five:.2} ms vs 20.79 ± 10%"
    );
    pass(
        "11",
        format!(
            "E2E {five:.2} ms at 5 pairs, {twenty_five:.2} ms at 25; baseline ≥ {ratio_min:.2}x"
        ),
    );
}

/// Criterion 12: analytical calculators, exact.
#[test]
fn criterion_12_analytical_calculators() {
    let per_sensor = spread_bitrate(200e3, 3.0, 7);
    assert!(
        (per_sensor - 57_140.0).abs() <= 10.0,
        "spread bitrate {per_sensor} Hz vs 57.14 kbps ± 0.01"
    );
    assert_eq!(scalability_estimate(1, 29, 9, 2000, 140), 80_537_118);
    assert_eq!(scalability_estimate_paired(1, 29, 9, 2000, 140), 40_268_559);
    pass(
        "12",
        "57.14 kbps per sensor; 80,537,118 uplink-only and 40.25M paired sensors, exact".into(),
    );
}

/// Criterion 13: identical configuration and seed produce byte-identical
/// reports and event logs.
#[test]
fn criterion_13_determinism() {
    let mut config = ScenarioConfig::default();
    config.active_subcarriers = 3;
    config.sensors_per_subcarrier = 5;
    config.packets_per_sensor = 30;
    config.repetitions = 2;
    config.rng_seed = 31337;
    let (log_a, report_a) = run_uplink_convergecast(&config).unwrap();
    let (log_b, report_b) = run_uplink_convergecast(&config).unwrap();
    assert_eq!(report_a.to_json(), report_b.to_json());
    assert_eq!(log_a.to_csv(), log_b.to_csv());

    config.scenario = ScenarioKind::P2p;
    config.pairs = 5;
    config.packets_per_sensor = 20;
    let (plog_a, preport_a) = run_p2p(&config).unwrap();
    let (plog_b, preport_b) = run_p2p(&config).unwrap();
    assert_eq!(preport_a.to_json(), preport_b.to_json());
    assert_eq!(plog_a.to_csv(), plog_b.to_csv());
    pass("13", "uplink and P2P reruns byte-identical (JSON and CSV)".into());
}
