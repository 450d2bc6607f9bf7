//! Closed-form key-rate bounds: the mutual-information bound, the bound
//! obtained from the phase-estimation CRB, and their relay-assisted forms.
//!
//! Rates follow the conventional `ln(1 + x) / T_c` form for the MI bound and
//! `P_QIA log2 q / T_c` for the CRB bound.

use crate::error::{Error, Result};
use crate::quantizer;

/// Everything the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConfig {
    pub sigma_h2: f64,
    /// Per-sample noise variance.
    pub sigma2: f64,
    /// Transmit power `P = a^2 / 2`.
    pub power_p: f64,
    /// Samples per beacon observation without relays.
    pub n_samples: f64,
    pub coherence_time_s: f64,
    pub relays: u32,
    pub q: u32,
    /// Samples lost per timeslot to delay spread and propagation delay.
    pub guard_samples: f64,
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_h2 > 0.0 && self.sigma_h2.is_finite()) {
            return Err(Error::invalid("sigma_h2", "must be positive and finite"));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "must be finite and non-negative"));
        }
        if !(self.power_p >= 0.0 && self.power_p.is_finite()) {
            return Err(Error::invalid("power_p", "must be finite and non-negative"));
        }
        if !(self.n_samples > 0.0 && self.n_samples.is_finite()) {
            return Err(Error::invalid("n_samples", "must be positive"));
        }
        if !(self.coherence_time_s > 0.0 && self.coherence_time_s.is_finite()) {
            return Err(Error::invalid("coherence_time_s", "must be positive"));
        }
        if self.q < 2 {
            return Err(Error::invalid("q", "must be at least 2"));
        }
        if !(self.guard_samples >= 0.0 && self.guard_samples.is_finite()) {
            return Err(Error::invalid("guard_samples", "must be non-negative"));
        }
        Ok(())
    }

    /// `SNR = 2 sigma_h^2 P / sigma^2`.
    pub fn snr(&self) -> f64 {
        if self.sigma2 == 0.0 {
            return if self.power_p > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
        }
        2.0 * self.sigma_h2 * self.power_p / self.sigma2
    }

    /// Samples each link gets once the coherence time is split across
    /// `N + 2` slots, `2 (N_s + g) / (N + 2) - g`. With no guard this is
    /// `2 N_s / (N + 2)`, and with no relays it is `N_s`.
    pub fn coop_samples(&self) -> f64 {
        let g = self.guard_samples;
        2.0 * (self.n_samples + g) / (self.relays as f64 + 2.0) - g
    }

    pub fn with_relays(mut self, relays: u32) -> Self {
        self.relays = relays;
        self
    }

    pub fn with_q(mut self, q: u32) -> Self {
        self.q = q;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub r_mi: f64,
    pub r_mi_coop: f64,
    pub r_crb: f64,
    pub r_crb_coop: f64,
    pub p_qia: f64,
    pub p_qia_coop: f64,
    /// `r_mi_coop / r_mi` at this configuration.
    pub coop_gain: f64,
    pub var_theta: f64,
    pub var_theta_coop: f64,
}

/// `sigma_h^4 n^2 P^2 / (sigma^4 + 2 sigma^2 sigma_h^2 n P)`.
fn snr_term(cfg: &BoundConfig, n: f64) -> f64 {
    if n <= 0.0 || cfg.power_p == 0.0 {
        return 0.0;
    }
    let s = cfg.sigma_h2 * n * cfg.power_p;
    let den = cfg.sigma2 * cfg.sigma2 + 2.0 * cfg.sigma2 * s;
    if den == 0.0 {
        return f64::INFINITY;
    }
    s * s / den
}

/// Mutual information between the two ends' observations per coherence
/// interval, in nats.
pub fn mutual_information(cfg: &BoundConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(snr_term(cfg, cfg.n_samples).ln_1p())
}

pub fn rate_mi(cfg: &BoundConfig) -> Result<f64> {
    Ok(mutual_information(cfg)? / cfg.coherence_time_s)
}

pub fn rate_mi_coop(cfg: &BoundConfig) -> Result<f64> {
    cfg.validate()?;
    let n = cfg.coop_samples();
    let k = cfg.relays as f64 + 1.0;
    Ok(k * snr_term(cfg, n).ln_1p() / cfg.coherence_time_s)
}

/// Large-sample CRB `4 / (SNR n)` for a continuous sample budget.
pub fn var_theta(snr: f64, n: f64) -> f64 {
    if n <= 0.0 || snr == 0.0 {
        return f64::INFINITY;
    }
    4.0 / (snr * n)
}

/// `P_QIA` extended to the noiseless and pure-noise limits.
fn agreement(var: f64, q: u32) -> Result<f64> {
    if var == 0.0 {
        Ok(1.0)
    } else if var.is_infinite() {
        Ok(1.0 / (q as f64 * q as f64))
    } else {
        quantizer::p_qia(var, q)
    }
}

fn log2q(q: u32) -> f64 {
    (q as f64).log2()
}

pub fn rate_crb(cfg: &BoundConfig) -> Result<f64> {
    cfg.validate()?;
    let p = agreement(var_theta(cfg.snr(), cfg.n_samples), cfg.q)?;
    Ok(p * log2q(cfg.q) / cfg.coherence_time_s)
}

pub fn rate_crb_coop(cfg: &BoundConfig) -> Result<f64> {
    cfg.validate()?;
    let n = cfg.coop_samples();
    if n <= 0.0 {
        return Ok(0.0);
    }
    let p = agreement(var_theta(cfg.snr(), n), cfg.q)?;
    Ok((cfg.relays as f64 + 1.0) * p * log2q(cfg.q) / cfg.coherence_time_s)
}

pub fn bound_report(cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let snr = cfg.snr();
    let var = var_theta(snr, cfg.n_samples);
    let var_co = var_theta(snr, cfg.coop_samples());
    let r_mi = rate_mi(cfg)?;
    let r_mi_coop = rate_mi_coop(cfg)?;
    Ok(BoundReport {
        r_mi,
        r_mi_coop,
        r_crb: rate_crb(cfg)?,
        r_crb_coop: rate_crb_coop(cfg)?,
        p_qia: agreement(var, cfg.q)?,
        p_qia_coop: agreement(var_co, cfg.q)?,
        coop_gain: r_mi_coop / r_mi,
        var_theta: var,
        var_theta_coop: var_co,
    })
}

/// Which parameter grows when taking the cooperative-gain limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainLimit {
    Power,
    Samples,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainEstimate {
    /// `(parameter value, r_mi_coop / r_mi)` along the sweep.
    pub sweep: Vec<(f64, f64)>,
    /// The last ratio of the sweep.
    pub last: f64,
    /// Limit extrapolated to an infinite parameter.
    pub extrapolated: f64,
}

/// Cooperative gain `r_mi_coop / r_mi` as `P` or `N_s` grows geometrically
/// from its configured value to `max_value`, ten points per decade.
///
/// The ratio approaches `N + 1` only like `1 / ln x`, so the raw sweep
/// is still several percent short at `10^9`. The limit is therefore taken
/// by fitting a quadratic in `u = 1 / ln(1 + x)` through the last three
/// sweep points and evaluating it at `u = 0`.
pub fn coop_gain(cfg: &BoundConfig, limit: GainLimit, max_value: f64) -> Result<GainEstimate> {
    cfg.validate()?;
    let start = match limit {
        GainLimit::Power => cfg.power_p,
        GainLimit::Samples => cfg.n_samples,
    };
    if !(start > 0.0 && max_value > start) {
        return Err(Error::invalid(
            "max_value",
            "must exceed a positive starting value",
        ));
    }
    if cfg.sigma2 == 0.0 {
        return Err(Error::invalid("sigma2", "gain limit needs a noisy channel"));
    }
    let steps = ((max_value / start).log10() * 10.0).ceil().max(3.0) as usize;
    let mut sweep = Vec::with_capacity(steps + 1);
    let mut us = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let v = start * (max_value / start).powf(i as f64 / steps as f64);
        let c = match limit {
            GainLimit::Power => BoundConfig { power_p: v, ..*cfg },
            GainLimit::Samples => BoundConfig {
                n_samples: v,
                ..*cfg
            },
        };
        let single = rate_mi(&c)?;
        let ratio = if single > 0.0 {
            rate_mi_coop(&c)? / single
        } else {
            0.0
        };
        sweep.push((v, ratio));
        us.push(1.0 / snr_term(&c, c.n_samples).ln_1p());
    }
    let n = sweep.len();
    let last = sweep[n - 1].1;
    let extrapolated = lagrange_at_zero(&us[n - 3..], &[sweep[n - 3].1, sweep[n - 2].1, last]);
    Ok(GainEstimate {
        sweep,
        last,
        extrapolated,
    })
}

/// Value at 0 of the quadratic through three points.
fn lagrange_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    y[0] * (x1 * x2) / ((x0 - x1) * (x0 - x2))
        + y[1] * (x0 * x2) / ((x1 - x0) * (x1 - x2))
        + y[2] * (x0 * x1) / ((x2 - x0) * (x2 - x1))
}

/// The `q` in `q_range` with the largest cooperative CRB rate. Ties go to
/// the smaller `q`.
pub fn optimal_q(cfg: &BoundConfig, q_range: &[u32]) -> Result<u32> {
    let mut best: Option<(u32, f64)> = None;
    for &q in q_range {
        let r = rate_crb_coop(&cfg.with_q(q))?;
        match best {
            Some((bq, br)) if r < br || (r == br && q > bq) => {}
            _ => best = Some((q, r)),
        }
    }
    best.map(|(q, _)| q)
        .ok_or_else(|| Error::invalid("q_range", "must not be empty"))
}

/// Powers of two from `2^lo` to `2^hi` inclusive.
pub fn powers_of_two(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).map(|e| 1u32 << e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> BoundConfig {
        BoundConfig {
            sigma_h2: 0.5,
            sigma2: 3.162e-3,
            power_p: 1.0,
            n_samples: 18900.0,
            coherence_time_s: 14e-3,
            relays: 0,
            q: 16,
            guard_samples: 0.0,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // Frozen from an independent 50-digit evaluation of the same formulas.
    #[test]
    #[allow(clippy::excessive_precision)]
    fn golden_rates() {
        let c = golden();
        assert!(rel(rate_mi(&c).unwrap(), 1015.512420144811703) < 1e-12);
        assert!(rel(mutual_information(&c).unwrap(), 14.21717388202736385) < 1e-12);
        for (n, want) in [
            (1, 1973.101289267351137),
            (2, 2898.005829293975689),
            (4, 4685.200927559997946),
        ] {
            let got = rate_mi_coop(&c.with_relays(n)).unwrap();
            assert!(rel(got, want) < 1e-12, "N={n}: {got}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        let c = BoundConfig {
            power_p: 0.0,
            ..golden()
        };
        assert_eq!(rate_mi(&c).unwrap(), 0.0);
        assert!(BoundConfig { q: 1, ..golden() }.validate().is_err());
        assert!(BoundConfig {
            sigma_h2: 0.0,
            ..golden()
        }
        .validate()
        .is_err());
        let noiseless = BoundConfig {
            sigma2: 0.0,
            ..golden()
        };
        assert!(rate_mi(&noiseless).unwrap().is_infinite());
    }

    #[test]
    fn mi_grows_as_noise_falls() {
        let mut prev = 0.0;
        for e in 0..12 {
            let c = BoundConfig {
                sigma2: 10f64.powi(-e),
                ..golden()
            };
            let r = rate_mi(&c).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn mi_monotone_in_each_parameter() {
        let base = golden();
        let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
        let mut last = [0.0; 3];
        for &f in &grid {
            let r = [
                rate_mi(&BoundConfig { power_p: f, ..base }).unwrap(),
                rate_mi(&BoundConfig {
                    n_samples: 18900.0 * f,
                    ..base
                })
                .unwrap(),
                rate_mi(&BoundConfig {
                    sigma_h2: 0.5 * f,
                    ..base
                })
                .unwrap(),
            ];
            for i in 0..3 {
                assert!(r[i] > last[i]);
            }
            last = r;
        }
    }

    #[test]
    fn no_relays_reduces_to_single_link() {
        for g in [0.0, 5.0, 40.0] {
            let c = BoundConfig {
                guard_samples: g,
                ..golden()
            };
            assert_eq!(rate_mi_coop(&c).unwrap(), rate_mi(&c).unwrap());
            assert_eq!(rate_crb_coop(&c).unwrap(), rate_crb(&c).unwrap());
        }
    }

    #[test]
    fn rates_scale_inversely_with_coherence_time() {
        let c = golden().with_relays(3);
        let d = BoundConfig {
            coherence_time_s: 28e-3,
            ..c
        };
        for f in [rate_mi, rate_mi_coop, rate_crb, rate_crb_coop] {
            assert!(rel(f(&c).unwrap(), 2.0 * f(&d).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn crb_rate_noiseless_limit() {
        let c = BoundConfig {
            sigma2: 0.0,
            q: 2,
            ..golden()
        };
        assert!(rel(rate_crb(&c).unwrap(), 1.0 / 14e-3) < 1e-15);
    }

    #[test]
    fn gain_limits() {
        for n in [0u32, 1, 2, 4, 8] {
            let c = golden().with_relays(n);
            let g = coop_gain(&BoundConfig { power_p: 1e3, ..c }, GainLimit::Power, 1e9).unwrap();
            let want = n as f64 + 1.0;
            assert!(
                rel(g.extrapolated, want) < 0.01,
                "N={n}: {}",
                g.extrapolated
            );
            // the raw ratio climbs towards N + 1 from below
            for w in g.sweep.windows(2) {
                assert!(w[1].1 >= w[0].1 - 1e-12);
                assert!(w[1].1 <= want + 1e-12);
            }
            let s = coop_gain(&c, GainLimit::Samples, 1e8).unwrap();
            assert!(
                rel(s.extrapolated, want) < 0.01,
                "N={n}: {}",
                s.extrapolated
            );
        }
    }

    #[test]
    fn crb_rate_has_interior_maximum_in_q() {
        let c = BoundConfig {
            n_samples: 20250.0,
            ..golden()
        };
        let rates: Vec<f64> = powers_of_two(1, 16)
            .into_iter()
            .map(|q| rate_crb(&c.with_q(q)).unwrap())
            .collect();
        let peak = rates
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(peak > 0 && peak < rates.len() - 1);
        assert!(rates[..=peak].windows(2).all(|w| w[1] > w[0]));
        assert!(rates[peak..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn crb_rate_has_interior_maximum_in_relays_with_guard() {
        let c = BoundConfig {
            n_samples: 20250.0,
            guard_samples: 270.0,
            ..golden()
        };
        let rates: Vec<f64> = (0..160)
            .map(|n| rate_crb_coop(&c.with_relays(n)).unwrap())
            .collect();
        let peak = rates
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(peak > 0 && peak < rates.len() - 1, "peak at N={peak}");
        assert_eq!(*rates.last().unwrap(), 0.0);
    }

    #[test]
    fn optimal_q_extremes() {
        let qs = powers_of_two(1, 16);
        let quiet = BoundConfig {
            sigma2: 1e-30,
            ..golden()
        };
        assert_eq!(optimal_q(&quiet, &qs).unwrap(), 65536);
        let loud = BoundConfig {
            sigma2: 1e9,
            ..golden()
        };
        assert_eq!(optimal_q(&loud, &qs).unwrap(), 2);
        assert!(optimal_q(&golden(), &[]).is_err());
    }

    #[test]
    fn crb_rate_below_mi_rate() {
        for snr_db in [15.0, 25.0, 35.0] {
            for i in 1..=10 {
                let n_s = 2700.0 * i as f64;
                for n in [0u32, 1, 2, 4, 8] {
                    let c = BoundConfig {
                        sigma2: 1.0 / 10f64.powf(snr_db / 10.0),
                        n_samples: n_s,
                        relays: n,
                        ..golden()
                    };
                    let mi = rate_mi_coop(&c).unwrap();
                    for q in powers_of_two(1, 16) {
                        let crb = rate_crb_coop(&c.with_q(q)).unwrap();
                        assert!(crb <= mi, "snr {snr_db} Ns {n_s} N {n} q {q}: {crb} > {mi}");
                    }
                }
            }
        }
    }
}
