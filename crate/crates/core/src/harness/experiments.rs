//! The experiment drivers behind each [`ExperimentId`].

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentId};
use super::output::ResultSet;
use super::scale::{scale_config, DeskScale};
use crate::beacon::{db_to_linear, snr_to_sigma2, BeaconSpec};
use crate::bits::BitVector;
use crate::bounds::{self, BoundConfig};
use crate::error::{Error, Result};
use crate::estimator::crb_phase_variance;
use crate::fading::ChannelParams;
use crate::protocol::{Node, Session, SessionConfig};
use crate::quantizer::{gray_encode, p_qia, p_qia_all_sectors, p_qia_monte_carlo, predicted_ber};
use crate::randomness::{run_suite, SuiteParams, TestReport};
use crate::reconciliation::{reconcile, ReconcileConfig};
use crate::rng::{SeedTree, Stream};
use crate::stats::{linear_fit, Moments};

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultSet> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentId::BoundsVsTo | ExperimentId::BoundsVsN => bounds_sweep(cfg),
        ExperimentId::RateVsQ => rate_vs_q(cfg),
        ExperimentId::BerVsQ | ExperimentId::BerVsTo => ber_sweep(cfg),
        ExperimentId::RateVsNSim => rate_vs_n(cfg),
        ExperimentId::NistTable => nist_table(cfg),
        ExperimentId::E2eKeygen => e2e_keygen(cfg),
    }
}

/// Analytic bound inputs at one grid point, in full-scale units.
pub fn bound_config(
    cfg: &ExperimentConfig,
    snr_db: f64,
    n_samples: f64,
    relays: u32,
    q: u32,
) -> BoundConfig {
    let power_p = cfg.amplitude * cfg.amplitude / 2.0;
    BoundConfig {
        sigma_h2: cfg.sigma_h2,
        sigma2: 2.0 * cfg.sigma_h2 * power_p / db_to_linear(snr_db),
        power_p,
        n_samples,
        coherence_time_s: cfg.physical.coherence_time_s,
        relays,
        q,
        guard_samples: cfg.physical.guard_samples(),
    }
}

/// Desk-scale session for one grid point.
pub fn session_config(
    cfg: &ExperimentConfig,
    snr_db: f64,
    n_samples: usize,
    relays: u32,
    q: u32,
    key_bits: usize,
) -> Result<(SessionConfig, DeskScale)> {
    let desk = scale_config(
        &cfg.physical,
        n_samples,
        cfg.desk_sample_rate_hz,
        cfg.sample_budget,
    )?;
    let beacon = BeaconSpec::new(
        cfg.amplitude,
        desk.carrier_freq_hz,
        desk.observation_s,
        desk.sample_rate_hz,
        0.0,
    )?;
    if beacon.n_samples() != n_samples {
        return Err(Error::invalid(
            "observation_samples",
            format!("{n_samples} samples do not map to a whole observation"),
        ));
    }
    let channel = ChannelParams::new(cfg.sigma_h2, desk.coherence_time_s)?;
    let sigma2 = snr_to_sigma2(&beacon, cfg.sigma_h2, db_to_linear(snr_db))?;
    let mut s = SessionConfig::new(relays, q, key_bits, beacon, channel, sigma2)?;
    s.guard_s = desk.guard_s;
    s.channel_model = cfg.channel_model;
    s.eavesdropper = cfg.eavesdropper;
    s.validate()?;
    Ok((s, desk))
}

/// Runs `trials` independent trials in parallel, trial `t` seeded from
/// `tree.child(t)`, and returns their outputs in trial order.
pub fn monte_carlo<T, F>(
    config: &SessionConfig,
    tree: &SeedTree,
    trials: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Session, &SeedTree) -> Result<T> + Sync,
{
    Session::new(config.clone())?;
    (0..trials as u64)
        .into_par_iter()
        .map_init(
            || Session::new(config.clone()).expect("validated above"),
            |session, t| f(session, &tree.child(t)),
        )
        .collect()
}

/// Means and standard errors of each column of per-trial metric rows.
fn reduce(rows: &[Vec<f64>], width: usize) -> Vec<Moments> {
    let mut m = vec![Moments::new(); width];
    for r in rows {
        for (acc, &x) in m.iter_mut().zip(r) {
            acc.push(x);
        }
    }
    m
}

fn label(parts: &[(&str, String)]) -> String {
    parts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn bounds_sweep(cfg: &ExperimentConfig) -> Result<ResultSet> {
    let mut out = ResultSet::new(
        cfg.experiment.name(),
        &["snr_db", "observation_samples", "relays", "q"],
    );
    for &snr in &cfg.snr_db {
        for &ns in &cfg.observation_samples {
            for &n in &cfg.relays {
                for &q in &cfg.q {
                    let b = bound_config(cfg, snr, ns as f64, n, q);
                    let r = bounds::bound_report(&b)?;
                    let p = [
                        snr.to_string(),
                        ns.to_string(),
                        n.to_string(),
                        q.to_string(),
                    ];
                    out.push_exact(&p, "r_mi", r.r_mi);
                    out.push_exact(&p, "r_crb", r.r_crb);
                    out.push_exact(&p, "r_mi_coop", r.r_mi_coop);
                    out.push_exact(&p, "r_crb_coop", r.r_crb_coop);
                    out.push_exact(&p, "p_qia", r.p_qia);
                    out.push_exact(&p, "coop_samples", b.coop_samples().max(0.0));
                }
            }
        }
    }
    Ok(out)
}

/// Agreement of the two ends' `K1` symbols in a single no-relay round.
fn k1_round(session: &mut Session, tree: &SeedTree) -> Result<(u32, u32)> {
    let r = session.run_round(1, tree)?;
    Ok((r.index(Node::A, Node::B)?, r.index(Node::B, Node::A)?))
}

fn rate_vs_q(cfg: &ExperimentConfig) -> Result<ResultSet> {
    let mut out = ResultSet::new(
        cfg.experiment.name(),
        &["snr_db", "observation_samples", "q"],
    );
    let root = SeedTree::new(cfg.seed);
    let t_c = cfg.physical.coherence_time_s;
    for &snr in &cfg.snr_db {
        for &ns in &cfg.observation_samples {
            for &q in &cfg.q {
                let p = [snr.to_string(), ns.to_string(), q.to_string()];
                let b = bound_config(cfg, snr, ns as f64, 0, q);
                out.push_exact(&p, "r_crb", bounds::rate_crb(&b)?);
                out.push_exact(&p, "r_mi", bounds::rate_mi(&b)?);
                let (sc, desk) = session_config(cfg, snr, ns, 0, q, 1)?;
                out.scale = Some(desk);
                let tree = root.child(label(&[
                    ("snr_db", p[0].clone()),
                    ("N_s", p[1].clone()),
                    ("q", p[2].clone()),
                ]));
                let bits = (q as f64).log2();
                let rows = monte_carlo(&sc, &tree, cfg.trials, |s, t| {
                    let (a, b) = k1_round(s, t)?;
                    let agree = f64::from(u8::from(a == b));
                    Ok(vec![agree, agree * bits / t_c])
                })?;
                let m = reduce(&rows, 2);
                out.push_estimate(&p, "agreement_sim", &m[0]);
                out.push_estimate(&p, "r_sim", &m[1]);
            }
        }
    }
    Ok(out)
}

fn ber_sweep(cfg: &ExperimentConfig) -> Result<ResultSet> {
    let mut out = ResultSet::new(
        cfg.experiment.name(),
        &["snr_db", "observation_samples", "q"],
    );
    let root = SeedTree::new(cfg.seed);
    for &snr in &cfg.snr_db {
        for &ns in &cfg.observation_samples {
            let var = crb_phase_variance(db_to_linear(snr), ns)?.var_theta_exact;
            for &q in &cfg.q {
                let p = [snr.to_string(), ns.to_string(), q.to_string()];
                let tree = root.child(label(&[
                    ("snr_db", p[0].clone()),
                    ("N_s", p[1].clone()),
                    ("q", p[2].clone()),
                ]));
                let dominant = p_qia(var, q)?;
                let all = p_qia_all_sectors(var, q)?;
                let (mc, mc_se) =
                    p_qia_monte_carlo(var, q, cfg.oracle_draws, &mut tree.stream(Stream::Oracle))?;
                out.push_exact(&p, "var_theta_crb", var);
                out.push_exact(&p, "disagreement_analytic", 1.0 - all);
                out.push_exact(&p, "disagreement_dominant", 1.0 - dominant);
                out.push(
                    &p,
                    "disagreement_oracle",
                    1.0 - mc,
                    Some(mc_se),
                    cfg.oracle_draws as usize,
                );
                out.push_exact(&p, "ber_predicted", predicted_ber(all, q, true)?);

                let (sc, desk) = session_config(cfg, snr, ns, 0, q, 1)?;
                out.scale = Some(desk);
                let width = (q as f64).log2();
                let rows = monte_carlo(&sc, &tree, cfg.trials, |s, t| {
                    let (a, b) = k1_round(s, t)?;
                    let flips = gray_encode(a, q)?.hamming_distance(&gray_encode(b, q)?)?;
                    Ok(vec![f64::from(u8::from(a != b)), flips as f64 / width])
                })?;
                let m = reduce(&rows, 2);
                out.push_estimate(&p, "disagreement_sim", &m[0]);
                out.push_estimate(&p, "ber_sim", &m[1]);
            }
        }
    }
    Ok(out)
}

/// Symbols on which A's and B's final keys agree.
pub fn agreed_symbols(a: &BitVector, b: &BitVector, bits_per_symbol: usize) -> usize {
    a.as_slice()
        .chunks(bits_per_symbol)
        .zip(b.as_slice().chunks(bits_per_symbol))
        .filter(|(x, y)| x == y)
        .count()
}

fn rate_vs_n(cfg: &ExperimentConfig) -> Result<ResultSet> {
    let mut out = ResultSet::new(
        cfg.experiment.name(),
        &["snr_db", "observation_samples", "relays", "q"],
    );
    let root = SeedTree::new(cfg.seed);
    let t_c = cfg.physical.coherence_time_s;
    for &snr in &cfg.snr_db {
        for &ns in &cfg.observation_samples {
            for &q in &cfg.q {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &n in &cfg.relays {
                    let p = [
                        snr.to_string(),
                        ns.to_string(),
                        n.to_string(),
                        q.to_string(),
                    ];
                    let (mut sc, desk) = session_config(cfg, snr, ns, n, q, 1)?;
                    sc.rounds = Some(1);
                    out.scale = Some(desk);
                    let w = sc.bits_per_symbol();
                    let tree = root.child(label(&[
                        ("snr_db", p[0].clone()),
                        ("N_s", p[1].clone()),
                        ("N", p[2].clone()),
                        ("q", p[3].clone()),
                    ]));
                    let rows = monte_carlo(&sc, &tree, cfg.trials, |s, t| {
                        let o = s.run(t)?;
                        let agreed = agreed_symbols(&o.key_a.bits, &o.key_b.bits, w);
                        let total = o.key_a.bits.len() / w;
                        Ok(vec![
                            (agreed * w) as f64 / t_c,
                            agreed as f64 / total as f64,
                        ])
                    })?;
                    let m = reduce(&rows, 2);
                    out.push_estimate(&p, "r_sim", &m[0]);
                    out.push_estimate(&p, "symbol_agreement", &m[1]);
                    xs.push(n as f64);
                    ys.push(m[0].mean());
                }
                if xs.len() >= 2 {
                    let fit = linear_fit(&xs, &ys);
                    let p = [
                        snr.to_string(),
                        ns.to_string(),
                        "fit".to_string(),
                        q.to_string(),
                    ];
                    out.push_exact(&p, "slope", fit.slope);
                    out.push_exact(&p, "intercept", fit.intercept);
                    out.push_exact(&p, "r_squared", fit.r_squared);
                }
            }
        }
    }
    Ok(out)
}

/// A's raw final keys from `sequences` sessions, each cut to
/// `sequence_bits`.
pub fn key_sequences(cfg: &ExperimentConfig) -> Result<Vec<BitVector>> {
    let (snr, ns, n, q) = (
        cfg.snr_db[0],
        cfg.observation_samples[0],
        cfg.relays[0],
        cfg.q[0],
    );
    let (sc, _) = session_config(cfg, snr, ns, n, q, cfg.sequence_bits)?;
    let tree = SeedTree::new(cfg.seed).child("sequence");
    monte_carlo(&sc, &tree, cfg.sequences, |s, t| {
        Ok(s.run(t)?.key_a.bits.slice(0, cfg.sequence_bits))
    })
}

fn nist_table(cfg: &ExperimentConfig) -> Result<ResultSet> {
    let mut out = ResultSet::new(cfg.experiment.name(), &["test", "sequence"]);
    let (_, desk) = session_config(
        cfg,
        cfg.snr_db[0],
        cfg.observation_samples[0],
        cfg.relays[0],
        cfg.q[0],
        cfg.sequence_bits,
    )?;
    out.scale = Some(desk);
    let reports: Vec<Vec<TestReport>> = key_sequences(cfg)?
        .iter()
        .map(|b| run_suite(b, SuiteParams::default()))
        .collect::<Result<_>>()?;
    let Some(first) = reports.first() else {
        return Ok(out);
    };
    for (i, test) in first.iter().enumerate() {
        let mut means = vec![Moments::new(); test.p_values.len()];
        let mut passes = 0;
        for (s, suite) in reports.iter().enumerate() {
            let r = &suite[i];
            let p = [r.name.clone(), (s + 1).to_string()];
            for (k, &pv) in r.p_values.iter().enumerate() {
                out.push_exact(&p, &p_name(k), pv);
                means[k].push(pv);
            }
            passes += usize::from(r.pass);
        }
        let p = [test.name.clone(), "all".to_string()];
        for (k, m) in means.iter().enumerate() {
            out.push_estimate(&p, &format!("mean_{}", p_name(k)), m);
        }
        out.push(&p, "pass_count", passes as f64, None, reports.len());
    }
    Ok(out)
}

fn p_name(k: usize) -> String {
    if k == 0 {
        "p_value".into()
    } else {
        format!("p_value_{}", k + 1)
    }
}

fn e2e_keygen(cfg: &ExperimentConfig) -> Result<ResultSet> {
    let mut out = ResultSet::new(
        cfg.experiment.name(),
        &["snr_db", "observation_samples", "relays", "q"],
    );
    let root = SeedTree::new(cfg.seed);
    let rc = ReconcileConfig {
        code: cfg.code.clone(),
        ..ReconcileConfig::default()
    };
    for &snr in &cfg.snr_db {
        for &ns in &cfg.observation_samples {
            for &n in &cfg.relays {
                for &q in &cfg.q {
                    let p = [
                        snr.to_string(),
                        ns.to_string(),
                        n.to_string(),
                        q.to_string(),
                    ];
                    let (sc, desk) = session_config(cfg, snr, ns, n, q, cfg.key_bits)?;
                    out.scale = Some(desk);
                    let tree = root.child(label(&[
                        ("snr_db", p[0].clone()),
                        ("N_s", p[1].clone()),
                        ("N", p[2].clone()),
                        ("q", p[3].clone()),
                    ]));
                    let rows = monte_carlo(&sc, &tree, cfg.trials, |s, t| {
                        let o = s.run(&t.child("session"))?;
                        let (a, b) = (&o.key_a.bits, &o.key_b.bits);
                        let raw = a.hamming_distance(b)? as f64 / a.len() as f64;
                        let (ok, decode, confirm, secret) =
                            match reconcile(a, b, &rc, &t.child("reconcile")) {
                                Ok(r) => (r.secret_a == r.secret_b, false, false, r.secret_a.len()),
                                Err(Error::DecodeFailure) => (false, true, false, 0),
                                Err(Error::ConfirmationMismatch) => (false, false, true, 0),
                                Err(e) => return Err(e),
                            };
                        Ok(vec![
                            a.len() as f64,
                            raw,
                            f64::from(u8::from(ok)),
                            f64::from(u8::from(decode)),
                            f64::from(u8::from(confirm)),
                            secret as f64,
                        ])
                    })?;
                    let m = reduce(&rows, 6);
                    let names = [
                        "raw_key_bits",
                        "raw_bit_disagreement",
                        "success",
                        "decode_failure",
                        "confirm_failure",
                        "secret_bits",
                    ];
                    for (name, m) in names.iter().zip(&m) {
                        out.push_estimate(&p, name, m);
                    }
                }
            }
        }
    }
    Ok(out)
}
