//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (shown even when output is captured) and then asserts.
//!
//! Run alone with `cargo test --release -p coopkey --test acceptance`.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use coopkey::beacon::received_tone_into;
use coopkey::bounds::{coop_gain, BoundConfig, GainLimit};
use coopkey::estimator::crb_phase_variance;
use coopkey::harness::{
    bound_config, run_experiment, session_config, ExperimentConfig, ExperimentId,
};
use coopkey::protocol::{EveMode, LeakageAccumulator, SelectionPolicy};
use coopkey::reconciliation::{confirm, confirmation_tag, recover, sketch};
use coopkey::stats::{linear_fit, wrapped_error, Moments};
use coopkey::{BitVector, ChannelModel, Code, Error, SeedTree, Session, Stream, ToneEstimator};
use rand::Rng;

fn verdict(id: &str, pass: bool, started: Instant, detail: String) {
    let line = format!(
        "{id} {} {detail} [{:.1} s]",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(pass, "{line}");
}

/// Phase-error variance of the estimator over the CRB at 25 dB and
/// `N_s = 20250`, channel amplitude held fixed so every trial has the
/// nominal SNR.
#[test]
fn c01_estimator_variance_near_crb() {
    let started = Instant::now();
    let trials = 100_000u64;
    let (snr_db, ns) = (25.0, 20250);
    let mut cfg = ExperimentConfig::defaults(ExperimentId::RateVsQ);
    cfg.channel_model = ChannelModel::FixedAmplitude;
    let (sc, _) = session_config(&cfg, snr_db, ns, 0, 16, 1).unwrap();
    let spec = sc.beacon.with_start_time(sc.observation_start_s(1));
    let tree = SeedTree::new(1).child("c01");
    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || (ToneEstimator::new(sc.estimator), Vec::new()),
            |(est, buf), t| {
                let node = tree.child(t);
                let h = sc
                    .channel_model
                    .draw(&mut node.stream(Stream::Channel), &sc.channel);
                received_tone_into(&spec, &h, sc.sigma2, &mut node.stream(Stream::Noise), buf)
                    .unwrap();
                let e = est
                    .estimate_samples(buf, spec.sample_rate_hz, spec.start_time_s)
                    .unwrap();
                wrapped_error(e.theta_hat, h.phase)
            },
        )
        .collect();
    let m: Moments = errors.iter().copied().collect();
    let crb = crb_phase_variance(10f64.powf(snr_db / 10.0), ns).unwrap();
    let ratio = m.variance() / crb.var_theta_exact;
    // standard error of a Gaussian sample variance
    let se = ratio * (2.0 / (trials as f64 - 1.0)).sqrt();
    verdict(
        "C1",
        (1.0..=1.25).contains(&ratio),
        started,
        format!(
            "var/CRB = {ratio:.4} (se {se:.4}; var {:.4e}, CRB {:.4e}, mean error {:.2e}, {trials} trials, window [1.0, 1.25])",
            m.variance(),
            crb.var_theta_exact,
            m.mean()
        ),
    );
}

#[test]
fn c02_noiseless_keys_match() {
    let started = Instant::now();
    let cfg = ExperimentConfig::defaults(ExperimentId::E2eKeygen);
    let (mut sc, _) = session_config(&cfg, 25.0, 256, 1, 256, 256).unwrap();
    sc.sigma2 = 0.0;
    let mut session = Session::new(sc).unwrap();
    let tree = SeedTree::new(2).child("c02");
    let mut matched = 0;
    let mut len = 0;
    for s in 0..100u64 {
        let out = session.run(&tree.child(s)).unwrap();
        len = out.key_a.bits.len();
        matched += usize::from(out.key_a.bits == out.key_b.bits);
    }
    verdict(
        "C2",
        matched == 100 && len == 256,
        started,
        format!("{matched}/100 sessions with identical {len}-bit keys"),
    );
}

#[test]
fn c03_disagreement_matches_prediction() {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::defaults(ExperimentId::BerVsQ);
    cfg.q = vec![4, 16, 64];
    cfg.trials = 100_000;
    cfg.observation_samples = vec![256];
    let r = run_experiment(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for q in ["4", "16", "64"] {
        let at = [("q", q)];
        let sim = r.select("disagreement_sim", &at).next().unwrap();
        let oracle = r.select("disagreement_oracle", &at).next().unwrap();
        let analytic = r.value("disagreement_analytic", &at).unwrap();
        let rel = (sim.value - analytic) / analytic;
        let sigma = (sim.std_err.unwrap().powi(2) + oracle.std_err.unwrap().powi(2)).sqrt();
        let z = (sim.value - oracle.value) / sigma;
        pass &= rel.abs() <= 0.2 && z.abs() <= 3.0;
        parts.push(format!(
            "q={q}: sim {:.5} analytic {analytic:.5} ({:+.1}%) oracle {:.5} (z {z:+.2})",
            sim.value,
            100.0 * rel,
            oracle.value
        ));
    }
    verdict("C3", pass, started, parts.join("; "));
}

#[test]
fn c04_rate_vs_q_unimodal_and_simulated() {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::defaults(ExperimentId::RateVsQ);
    cfg.trials = 300;
    let r = run_experiment(&cfg).unwrap();
    let analytic: Vec<(u32, f64)> = cfg
        .q
        .iter()
        .map(|&q| (q, r.value("r_crb", &[("q", &q.to_string())]).unwrap()))
        .collect();
    let peak = analytic
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap()
        .0;
    let rising = analytic[..=peak].windows(2).all(|w| w[1].1 > w[0].1);
    let falling = analytic[peak..].windows(2).all(|w| w[1].1 < w[0].1);
    let interior = peak > 0 && peak + 1 < analytic.len();
    let mut worst = 0.0f64;
    for &(q, a) in analytic.iter().filter(|(q, _)| *q <= 64) {
        let sim = r.value("r_sim", &[("q", &q.to_string())]).unwrap();
        worst = worst.max(((sim - a) / a).abs());
    }
    verdict(
        "C4",
        rising && falling && interior && worst <= 0.2,
        started,
        format!(
            "analytic peak at q={} ({:.1} bit/s), rises {rising} falls {falling}; worst sim/analytic deviation for q<=64 {:.2}%",
            analytic[peak].0,
            analytic[peak].1,
            100.0 * worst
        ),
    );
}

#[test]
fn c05_cooperative_gain_limit() {
    let started = Instant::now();
    let cfg = ExperimentConfig::defaults(ExperimentId::BoundsVsN);
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1u32, 2, 4, 8] {
        let b: BoundConfig = bound_config(&cfg, 25.0, 20250.0, n, 16);
        // sweep P until the SNR reaches 1e9
        let max_p = b.power_p * 1e9 / b.snr();
        let g = coop_gain(
            &BoundConfig {
                guard_samples: 0.0,
                ..b
            },
            GainLimit::Power,
            max_p,
        )
        .unwrap();
        let target = (n + 1) as f64;
        let err = (g.extrapolated - target).abs() / target;
        pass &= err <= 0.01;
        parts.push(format!(
            "N={n}: limit {:.4} (ratio at SNR 1e9 {:.4})",
            g.extrapolated, g.last
        ));
    }
    verdict("C5", pass, started, parts.join("; "));
}

#[test]
fn c06_bound_ordering() {
    let started = Instant::now();
    let cfg = ExperimentConfig::defaults(ExperimentId::BoundsVsTo);
    let r = run_experiment(&cfg).unwrap();
    let mut points = 0;
    let mut violations = 0;
    for (crb, mi) in [("r_crb", "r_mi"), ("r_crb_coop", "r_mi_coop")] {
        for (c, m) in r.select(crb, &[]).zip(r.select(mi, &[])) {
            assert_eq!(c.params, m.params);
            points += 1;
            violations += usize::from(c.value > m.value);
        }
    }
    verdict(
        "C6",
        violations == 0 && points == 2 * 3 * 10 * 5,
        started,
        format!("R_CRB <= R_MI at {}/{points} grid points (3 SNR x 10 T_o x 5 N, single and cooperative)", points - violations),
    );
}

#[test]
fn c07_rate_linear_in_relays() {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::defaults(ExperimentId::RateVsNSim);
    cfg.observation_samples = vec![20250];
    cfg.trials = 200;
    let r = run_experiment(&cfg).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (1..=8)
        .map(|n: u32| {
            (
                n as f64,
                r.value("r_sim", &[("relays", &n.to_string())]).unwrap(),
            )
        })
        .unzip();
    let fit = linear_fit(&xs, &ys);
    verdict(
        "C7",
        fit.r_squared >= 0.99,
        started,
        format!(
            "R^2 = {:.5}, slope {:.1} bit/s per relay, rates {:?}",
            fit.r_squared,
            fit.slope,
            ys.iter().map(|y| y.round()).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn c08_reconciliation() {
    let started = Instant::now();
    let code = Code::default();
    let mut rng = SeedTree::new(8).rng();
    let mut patterns: Vec<Vec<usize>> = vec![vec![]];
    for a in 0..31 {
        patterns.push(vec![a]);
        for b in a + 1..31 {
            patterns.push(vec![a, b]);
            for c in b + 1..31 {
                patterns.push(vec![a, b, c]);
            }
        }
    }
    let mut exact = 0usize;
    for _ in 0..100 {
        let key: BitVector = (0..31).map(|_| rng.random::<bool>()).collect();
        let s = sketch(&key, &code, &mut rng).unwrap();
        for p in &patterns {
            let mut noisy = key.clone();
            p.iter().for_each(|&i| noisy.flip(i));
            exact += usize::from(recover(&noisy, &s, &code).as_ref() == Ok(&key));
        }
    }
    let total = 100 * patterns.len();

    let (mut flagged, mut caught, mut missed) = (0, 0, 0);
    for _ in 0..10_000 {
        let key: BitVector = (0..31).map(|_| rng.random::<bool>()).collect();
        let s = sketch(&key, &code, &mut rng).unwrap();
        let mut noisy = key.clone();
        let mut picked = Vec::new();
        while picked.len() < 4 {
            let i = rng.random_range(0..31);
            if !picked.contains(&i) {
                picked.push(i);
                noisy.flip(i);
            }
        }
        match recover(&noisy, &s, &code) {
            Err(Error::DecodeFailure) => flagged += 1,
            Ok(k) => match confirm(&k, confirmation_tag(&key)) {
                Err(Error::ConfirmationMismatch) => caught += 1,
                _ => missed += 1,
            },
            Err(e) => panic!("{e}"),
        }
    }
    verdict(
        "C8",
        exact == total && missed == 0,
        started,
        format!(
            "weight<=3: {exact}/{total} exact; weight 4: {flagged} flagged, {caught} caught by confirmation, {missed} missed of 10000"
        ),
    );
}

#[test]
fn c09_key_bits_pass_randomness_tests() {
    let started = Instant::now();
    let cfg = ExperimentConfig::defaults(ExperimentId::NistTable);
    let r = run_experiment(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for row in r.select("pass_count", &[]) {
        pass &= row.value >= 9.0;
        let mean = r
            .value(
                "mean_p_value",
                &[("test", &row.params[0]), ("sequence", "all")],
            )
            .unwrap();
        parts.push(format!(
            "{} {}/10 (mean p {mean:.3})",
            row.params[0], row.value
        ));
    }
    verdict("C9", pass && parts.len() == 8, started, parts.join("; "));
}

#[test]
fn c10_eavesdropper_leakage() {
    let started = Instant::now();
    let sessions = 100_000u64;
    let mut cfg = ExperimentConfig::defaults(ExperimentId::E2eKeygen);
    cfg.eavesdropper = EveMode::Independent;
    let (sc, _) = session_config(&cfg, 25.0, 256, 1, 8, 6).unwrap();
    assert_eq!(sc.rounds(), 1);
    let mut session = Session::new(sc).unwrap();
    let mut acc = LeakageAccumulator::new(8, SelectionPolicy::First);
    let tree = SeedTree::new(10).child("c10");
    for s in 0..sessions {
        acc.add_session(&session.run(&tree.child(s)).unwrap())
            .unwrap();
    }
    let report = acc.report().unwrap();
    let worst = report.max_corrected_bits();
    let parts: Vec<String> = report
        .roles
        .iter()
        .map(|r| {
            format!(
                "{}: {:.5} bits (plug-in {:.5})",
                r.role, r.corrected_bits, r.plug_in_bits
            )
        })
        .collect();
    verdict(
        "C10",
        worst <= 0.01,
        started,
        format!(
            "bias-corrected leakage over {sessions} sessions, q=8: {}",
            parts.join("; ")
        ),
    );
}
