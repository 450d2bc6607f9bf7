//! Maximum-likelihood frequency and phase estimation for a real tone in
//! white Gaussian noise.
//!
//! The estimator runs in three steps: a zero-padded DFT picks the strongest
//! bin, a bracketed secant iteration refines the frequency inside that bin,
//! and the phase follows in closed form at the refined frequency.
//!
//! By default the refinement maximises the exact least-squares fit of a real
//! sinusoid. The plain periodogram `|R(w)|^2` is also available; it ignores
//! the negative-frequency image of a real tone and is therefore biased by
//! roughly `1/N_s` in phase, which matters at high SNR.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::beacon::{SampleVector, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::fading::wrap_phase;

/// Which objective the fine search maximises and how the phase is read off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ToneModel {
    /// Concentrated likelihood of `A cos(w t + phi)`: both quadratures are
    /// fitted jointly, so the image term is accounted for.
    #[default]
    RealTone,
    /// `|R(w)|^2` and `phi = -atan(sum r sin / sum r cos)`.
    Periodogram,
}

/// The clock frame in which the returned phase is expressed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ClockReference {
    /// `theta = phase of first sample - w_hat t_0`.
    #[default]
    EstimatedFrequency,
    /// `theta = phase of first sample - w_c t_0` for a nominal carrier that
    /// both ends of a link share. Frequency error then no longer scales
    /// with the slot start time.
    NominalCarrier { carrier_freq_hz: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    /// Zero-padded DFT length; `None` picks the smallest power of two at
    /// least `4 N_s`.
    pub dft_len: Option<usize>,
    pub max_iterations: usize,
    /// Stopping step, as a fraction of the `2 pi / N_s` bin width.
    pub tolerance_bins: f64,
    pub model: ToneModel,
    pub clock: ClockReference,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            dft_len: None,
            max_iterations: 50,
            tolerance_bins: 1e-4,
            model: ToneModel::RealTone,
            clock: ClockReference::EstimatedFrequency,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEstimate {
    /// rad/s.
    pub omega_hat: f64,
    /// In `[0, 2pi)`.
    pub theta_hat: f64,
    pub n_samples: usize,
    pub converged: bool,
}

/// Outcome of the secant refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FineSearch {
    /// rad/s.
    pub omega_hat: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Smallest power of two at least `4 n`.
pub fn default_dft_len(n_samples: usize) -> usize {
    (4 * n_samples).next_power_of_two()
}

/// Reusable estimator. Holds FFT plans and scratch buffers, so give each
/// worker thread its own.
pub struct ToneEstimator {
    config: EstimatorConfig,
    planner: FftPlanner<f64>,
    plan: Option<Arc<dyn Fft<f64>>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl std::fmt::Debug for ToneEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToneEstimator")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Default for ToneEstimator {
    fn default() -> Self {
        ToneEstimator::new(EstimatorConfig::default())
    }
}

impl ToneEstimator {
    pub fn new(config: EstimatorConfig) -> Self {
        ToneEstimator {
            config,
            planner: FftPlanner::new(),
            plan: None,
            buf: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn estimate(&mut self, obs: &SampleVector) -> Result<PhaseEstimate> {
        self.estimate_samples(obs.samples(), obs.sample_rate_hz(), obs.start_time_s())
    }

    /// Full pipeline on raw samples taken at `sample_rate_hz` from
    /// `start_time_s` on.
    pub fn estimate_samples(
        &mut self,
        samples: &[f64],
        sample_rate_hz: f64,
        start_time_s: f64,
    ) -> Result<PhaseEstimate> {
        let n = samples.len();
        if n < MIN_SAMPLES {
            return Err(if n == 0 {
                Error::EmptyObservation
            } else {
                Error::invalid("samples", format!("need at least {MIN_SAMPLES}"))
            });
        }
        let dft_len = self.config.dft_len.unwrap_or_else(|| default_dft_len(n));
        let k_hat = self.rough(samples, dft_len)?;
        let (nu, converged, _) = fine_search(samples, k_hat, dft_len, &self.config);
        let theta = phase_at(samples, nu, sample_rate_hz, start_time_s, &self.config)?;
        Ok(PhaseEstimate {
            omega_hat: nu * sample_rate_hz,
            theta_hat: theta,
            n_samples: n,
            converged,
        })
    }

    fn rough(&mut self, samples: &[f64], dft_len: usize) -> Result<usize> {
        check_dft_len(samples.len(), dft_len)?;
        if self.plan.as_ref().is_none_or(|p| p.len() != dft_len) {
            let plan = self.planner.plan_fft_forward(dft_len);
            self.scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
            self.plan = Some(plan);
        }
        self.buf.clear();
        self.buf
            .extend(samples.iter().map(|&x| Complex::new(x, 0.0)));
        self.buf.resize(dft_len, Complex::default());
        let plan = self.plan.as_ref().expect("plan set above");
        plan.process_with_scratch(&mut self.buf, &mut self.scratch);
        pick_peak(&self.buf, samples.len())
    }
}

fn check_dft_len(n: usize, dft_len: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyObservation);
    }
    if !dft_len.is_power_of_two() || dft_len <= n {
        return Err(Error::invalid(
            "dft_len",
            format!("must be a power of two above the {n} samples"),
        ));
    }
    Ok(())
}

/// Largest bin outside the DC and Nyquist main lobes. A tone cannot sit
/// there, so a noise maximum inside them is skipped rather than reported.
fn pick_peak(spectrum: &[Complex<f64>], n: usize) -> Result<usize> {
    let l = spectrum.len();
    let lobe = l.div_ceil(n);
    let (mut best, mut best_k) = (0.0, 0);
    for (k, x) in spectrum
        .iter()
        .enumerate()
        .take((l / 2).saturating_sub(lobe) + 1)
        .skip(lobe)
    {
        let p = x.norm_sqr();
        if p > best {
            best = p;
            best_k = k;
        }
    }
    if best == 0.0 {
        return Err(Error::NoSpectralPeak);
    }
    Ok(best_k)
}

/// Step 1: the zero-padded DFT bin with the largest magnitude in `(0, f_s/2)`
/// and its angular frequency in rad/s.
pub fn rough_frequency_search(obs: &SampleVector, dft_len: usize) -> Result<(usize, f64)> {
    let mut est = ToneEstimator::new(EstimatorConfig {
        dft_len: Some(dft_len),
        ..EstimatorConfig::default()
    });
    let k = est.rough(obs.samples(), dft_len)?;
    Ok((k, TAU * k as f64 / dft_len as f64 * obs.sample_rate_hz()))
}

/// Step 2 with the default configuration.
pub fn fine_frequency_search(
    obs: &SampleVector,
    k_hat: usize,
    dft_len: usize,
) -> Result<FineSearch> {
    fine_frequency_search_with(obs, k_hat, dft_len, &EstimatorConfig::default())
}

pub fn fine_frequency_search_with(
    obs: &SampleVector,
    k_hat: usize,
    dft_len: usize,
    config: &EstimatorConfig,
) -> Result<FineSearch> {
    check_dft_len(obs.len(), dft_len)?;
    if k_hat == 0 || 2 * k_hat >= dft_len {
        return Err(Error::invalid(
            "k_hat",
            "must lie strictly inside (0, dft_len/2)",
        ));
    }
    let (nu, converged, iterations) = fine_search(obs.samples(), k_hat, dft_len, config);
    Ok(FineSearch {
        omega_hat: nu * obs.sample_rate_hz(),
        converged,
        iterations,
    })
}

/// Step 3 with the default model, phase referenced to the common clock via
/// the supplied frequency.
pub fn estimate_phase(obs: &SampleVector, omega_hat: f64) -> Result<f64> {
    estimate_phase_with(obs, omega_hat, &EstimatorConfig::default())
}

pub fn estimate_phase_with(
    obs: &SampleVector,
    omega_hat: f64,
    config: &EstimatorConfig,
) -> Result<f64> {
    if !(omega_hat > 0.0 && omega_hat.is_finite()) {
        return Err(Error::invalid("omega_hat", "must be positive"));
    }
    let nu = omega_hat / obs.sample_rate_hz();
    phase_at(
        obs.samples(),
        nu,
        obs.sample_rate_hz(),
        obs.start_time_s(),
        config,
    )
}

/// Correlations of `r` against a tone at `nu` rad/sample on centred indices
/// `u = m - (N-1)/2`.
#[derive(Clone, Copy, Debug)]
struct Sums {
    /// `sum r cos(nu u)`
    c: f64,
    /// `sum r sin(nu u)`
    s: f64,
    /// `sum u r cos(nu u)`
    uc: f64,
    /// `sum u r sin(nu u)`
    us: f64,
}

const RESYNC: usize = 128;

fn sums(r: &[f64], nu: f64, with_derivative: bool) -> Sums {
    let n = r.len();
    let u0 = -0.5 * (n as f64 - 1.0);
    let (step_s, step_c) = nu.sin_cos();
    let mut out = Sums {
        c: 0.0,
        s: 0.0,
        uc: 0.0,
        us: 0.0,
    };
    for (b, block) in r.chunks(RESYNC).enumerate() {
        let ub = u0 + (b * RESYNC) as f64;
        let (mut sn, mut cs) = (nu * ub).sin_cos();
        let (mut c, mut s, mut uc, mut us) = (0.0, 0.0, 0.0, 0.0);
        for (i, &x) in block.iter().enumerate() {
            let xc = x * cs;
            let xs = x * sn;
            c += xc;
            s += xs;
            if with_derivative {
                let u = ub + i as f64;
                uc += u * xc;
                us += u * xs;
            }
            let next_c = cs * step_c - sn * step_s;
            sn = sn * step_c + cs * step_s;
            cs = next_c;
        }
        out.c += c;
        out.s += s;
        out.uc += uc;
        out.us += us;
    }
    out
}

/// `sum_u cos(2 nu u) = sin(N nu) / sin(nu)` and its derivative in `nu`.
fn dirichlet(n: usize, nu: f64) -> (f64, f64) {
    let nf = n as f64;
    let (sn, cn) = (nf * nu).sin_cos();
    let (s1, c1) = nu.sin_cos();
    (sn / s1, (nf * cn * s1 - sn * c1) / (s1 * s1))
}

/// Objective value and derivative at `nu`.
fn objective(r: &[f64], nu: f64, model: ToneModel) -> (f64, f64) {
    let t = sums(r, nu, true);
    // d/dnu of c and s
    let dc = -t.us;
    let ds = t.uc;
    match model {
        ToneModel::Periodogram => (t.c * t.c + t.s * t.s, 2.0 * (t.c * dc + t.s * ds)),
        ToneModel::RealTone => {
            let nf = r.len() as f64;
            let (d2, dd2) = dirichlet(r.len(), nu);
            let g11 = 0.5 * (nf + d2);
            let g22 = 0.5 * (nf - d2);
            let dg11 = 0.5 * dd2;
            let dg22 = -0.5 * dd2;
            let j = t.c * t.c / g11 + t.s * t.s / g22;
            let dj = 2.0 * t.c * dc / g11 - t.c * t.c * dg11 / (g11 * g11) + 2.0 * t.s * ds / g22
                - t.s * t.s * dg22 / (g22 * g22);
            (j, dj)
        }
    }
}

/// Illinois-modified secant on the objective's derivative over the bracket
/// one bin either side of `k_hat`. Returns `(nu, converged, iterations)`
/// with `nu` in rad/sample.
fn fine_search(
    r: &[f64],
    k_hat: usize,
    dft_len: usize,
    config: &EstimatorConfig,
) -> (f64, bool, usize) {
    let bin = TAU / dft_len as f64;
    let centre = bin * k_hat as f64;
    let mut lo = (centre - bin).max(0.5 * bin);
    let mut hi = (centre + bin).min(PI - 0.5 * bin);
    let tol = TAU * config.tolerance_bins / r.len() as f64;
    let (jl, mut fl) = objective(r, lo, config.model);
    let (jh, mut fh) = objective(r, hi, config.model);

    if !(fl > 0.0 && fh < 0.0) {
        // no interior stationary point: keep the best of the three knowns
        let (jc, _) = objective(r, centre, config.model);
        let nu = [(lo, jl), (centre, jc), (hi, jh)]
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(x, _)| x)
            .unwrap_or(centre);
        return (nu, false, 0);
    }

    // which endpoint was kept on the previous step: -1 low, +1 high
    let mut side = 0i8;
    let mut x = centre;
    for it in 1..=config.max_iterations {
        let mut next = (lo * fh - hi * fl) / (fh - fl);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        let (_, fx) = objective(r, x, config.model);
        if fx == 0.0 {
            return (x, true, it);
        }
        if fx > 0.0 {
            lo = x;
            fl = fx;
            if side == -1 {
                fh *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fh = fx;
            if side == 1 {
                fl *= 0.5;
            }
            side = 1;
        }
        if step < tol || hi - lo < tol {
            // one more secant step from the tightened bracket is nearly free
            // and takes the estimate well below the stopping tolerance
            let polish = (lo * fh - hi * fl) / (fh - fl);
            if polish > lo && polish < hi {
                x = polish;
            }
            return (x, true, it);
        }
    }
    (x, false, config.max_iterations)
}

/// Phase at `nu` rad/sample, referenced to the configured clock.
fn phase_at(
    r: &[f64],
    nu: f64,
    sample_rate_hz: f64,
    start_time_s: f64,
    config: &EstimatorConfig,
) -> Result<f64> {
    let t = sums(r, nu, false);
    let centred = match config.model {
        ToneModel::Periodogram => {
            if t.c == 0.0 && t.s == 0.0 {
                return Err(Error::DegenerateObservation);
            }
            (-t.s).atan2(t.c)
        }
        ToneModel::RealTone => {
            let nf = r.len() as f64;
            let (d2, _) = dirichlet(r.len(), nu);
            let a = t.c / (0.5 * (nf + d2));
            let b = t.s / (0.5 * (nf - d2));
            if !(a.is_finite() && b.is_finite()) || (a == 0.0 && b == 0.0) {
                return Err(Error::DegenerateObservation);
            }
            (-b).atan2(a)
        }
    };
    let first = centred - nu * 0.5 * (r.len() as f64 - 1.0);
    let ref_hz = match config.clock {
        ClockReference::EstimatedFrequency => nu * sample_rate_hz / TAU,
        ClockReference::NominalCarrier { carrier_freq_hz } => carrier_freq_hz,
    };
    let cycles = (ref_hz * start_time_s).fract();
    Ok(wrap_phase(first - TAU * cycles))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrbReport {
    /// Large-`N_s` form `4 / (SNR N_s)`, rad^2.
    pub var_theta_lower_bound: f64,
    /// Finite-`N_s` form `2 (2 N_s - 1) / (SNR N_s (N_s + 1))`, rad^2.
    pub var_theta_exact: f64,
    pub snr_linear: f64,
    pub n_samples: usize,
}

/// Cramer-Rao bound on the variance of the phase (referenced to the first
/// sample) when frequency and phase are estimated jointly.
pub fn crb_phase_variance(snr_linear: f64, n_samples: usize) -> Result<CrbReport> {
    if !(snr_linear > 0.0 && snr_linear.is_finite()) {
        return Err(Error::invalid("snr", "must be positive and finite"));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "n_samples",
            format!("must be at least {MIN_SAMPLES}"),
        ));
    }
    let n = n_samples as f64;
    Ok(CrbReport {
        var_theta_lower_bound: 4.0 / (snr_linear * n),
        var_theta_exact: 2.0 * (2.0 * n - 1.0) / (snr_linear * n * (n + 1.0)),
        snr_linear,
        n_samples,
    })
}

/// Cramer-Rao bound on angular frequency variance, rad^2/s^2.
pub fn crb_frequency_variance(
    snr_linear: f64,
    n_samples: usize,
    sample_rate_hz: f64,
) -> Result<f64> {
    crb_phase_variance(snr_linear, n_samples)?;
    let n = n_samples as f64;
    Ok(12.0 / (snr_linear * n * (n * n - 1.0)) * sample_rate_hz * sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beacon::{received_tone, BeaconSpec};
    use crate::fading::ChannelRealization;
    use crate::rng::{SeedTree, Stream};
    use crate::stats::{wrapped_error, Moments};
    use proptest::prelude::*;

    const FS: f64 = 2.7e6;
    const FC: f64 = 0.9e6;

    fn tone(n: usize, theta: f64, sigma2: f64, t0: f64, seed: u64) -> SampleVector {
        let spec = BeaconSpec::new(1.0, FC, n as f64 / FS, FS, t0).unwrap();
        let h = ChannelRealization::from_polar(1.0, theta);
        received_tone(
            &spec,
            &h,
            sigma2,
            &mut SeedTree::new(seed).stream(Stream::Noise),
        )
        .unwrap()
    }

    #[test]
    fn rough_peak_at_carrier() {
        let obs = tone(1024, 0.4, 0.0, 0.0, 0);
        let (k, omega) = rough_frequency_search(&obs, 4096).unwrap();
        let want = FC * 4096.0 / FS;
        assert!((k as f64 - want).abs() <= 1.0, "k={k}");
        assert!((omega - TAU * FC).abs() <= TAU * FS / 4096.0);
    }

    #[test]
    fn rough_skips_dc_and_rejects_zero() {
        let dc = SampleVector::new(vec![1.0; 1024], FS, 0.0).unwrap();
        let (k, _) = rough_frequency_search(&dc, 4096).unwrap();
        assert!((4..=2044).contains(&k), "k={k}");
        let zero = SampleVector::new(vec![0.0; 1024], FS, 0.0).unwrap();
        assert_eq!(
            rough_frequency_search(&zero, 4096),
            Err(Error::NoSpectralPeak)
        );
        let obs = tone(1024, 0.4, 0.0, 0.0, 0);
        assert!(rough_frequency_search(&obs, 1000).is_err());
        assert!(rough_frequency_search(&obs, 1024).is_err());
    }

    #[test]
    fn fine_search_is_exact_without_noise() {
        for &theta in &[0.0, 1.234, 3.0, 6.0] {
            let obs = tone(1024, theta, 0.0, 0.0, 0);
            let (k, _) = rough_frequency_search(&obs, 4096).unwrap();
            let f = fine_frequency_search(&obs, k, 4096).unwrap();
            assert!(f.converged);
            let rel = (f.omega_hat - TAU * FC).abs() / (TAU * FC);
            assert!(rel < 1e-9, "theta {theta}: rel err {rel:e}");
        }
    }

    #[test]
    fn fine_search_on_bin_centre() {
        // f = 1024/4096 of f_s lands exactly on bin 1024
        let n = 2048;
        let f0 = FS * 1024.0 / 4096.0;
        let r: Vec<f64> = (0..n)
            .map(|m| (TAU * f0 * m as f64 / FS + 0.3).cos())
            .collect();
        let obs = SampleVector::new(r, FS, 0.0).unwrap();
        let (k, _) = rough_frequency_search(&obs, 8192).unwrap();
        assert_eq!(k, 2048);
        let f = fine_frequency_search(&obs, k, 8192).unwrap();
        assert!((f.omega_hat / (TAU * f0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phase_with_exact_frequency() {
        for &theta in &[1.234, 0.0] {
            let obs = tone(1024, theta, 0.0, 0.0, 0);
            let th = estimate_phase(&obs, TAU * FC).unwrap();
            assert!(wrapped_error(th, theta).abs() < 1e-9, "{th} vs {theta}");
        }
    }

    #[test]
    fn periodogram_phase_carries_image_bias() {
        let obs = tone(1024, 1.234, 0.0, 0.0, 0);
        let cfg = EstimatorConfig {
            model: ToneModel::Periodogram,
            ..EstimatorConfig::default()
        };
        let th = estimate_phase_with(&obs, TAU * FC, &cfg).unwrap();
        let e = wrapped_error(th, 1.234).abs();
        assert!(e > 1e-6 && e < 1e-2, "periodogram bias {e:e}");
    }

    #[test]
    fn phase_is_referenced_to_the_common_clock() {
        let t0 = 3.7e-3;
        let obs = tone(1024, 2.5, 0.0, t0, 0);
        let th = estimate_phase(&obs, TAU * FC).unwrap();
        assert!(wrapped_error(th, 2.5).abs() < 1e-8);
        let mut est = ToneEstimator::new(EstimatorConfig {
            clock: ClockReference::NominalCarrier {
                carrier_freq_hz: FC,
            },
            ..EstimatorConfig::default()
        });
        let e = est.estimate(&obs).unwrap();
        assert!(wrapped_error(e.theta_hat, 2.5).abs() < 1e-6);
    }

    #[test]
    fn degenerate_phase() {
        let obs = SampleVector::new(vec![0.0; 64], FS, 0.0).unwrap();
        assert_eq!(
            estimate_phase(&obs, TAU * FC),
            Err(Error::DegenerateObservation)
        );
        assert!(estimate_phase(&obs, -1.0).is_err());
    }

    #[test]
    fn crb_scaling() {
        let a = crb_phase_variance(10f64.powf(2.5), 20250).unwrap();
        assert!((a.var_theta_lower_bound - 4.0 / (10f64.powf(2.5) * 20250.0)).abs() < 1e-20);
        assert!((a.var_theta_lower_bound - 6.2465e-7).abs() < 1e-10);
        let b = crb_phase_variance(2.0 * 10f64.powf(2.5), 20250).unwrap();
        assert!((b.var_theta_lower_bound * 2.0 - a.var_theta_lower_bound).abs() < 1e-20);
        let c = crb_phase_variance(10f64.powf(2.5), 40500).unwrap();
        assert!((c.var_theta_lower_bound * 2.0 - a.var_theta_lower_bound).abs() < 1e-20);
        assert!(a.var_theta_exact < a.var_theta_lower_bound);
        assert!(c.var_theta_exact < a.var_theta_exact);
        assert!(crb_phase_variance(0.0, 100).is_err());
        assert!(crb_phase_variance(1.0, 8).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn noiseless_pipeline_recovers_phase(
            theta in 0.0..TAU,
            alpha in 0.05f64..3.0,
            n in 64usize..3000,
            t0 in 0.0f64..1e-2,
        ) {
            let spec = BeaconSpec::new(1.0, FC, n as f64 / FS, FS, t0).unwrap();
            let h = ChannelRealization::from_polar(alpha, theta);
            let obs = received_tone(&spec, &h, 0.0, &mut SeedTree::new(0).rng()).unwrap();
            let mut est = ToneEstimator::new(EstimatorConfig {
                clock: ClockReference::NominalCarrier { carrier_freq_hz: FC },
                ..EstimatorConfig::default()
            });
            let e = est.estimate(&obs).unwrap();
            prop_assert!(e.theta_hat >= 0.0 && e.theta_hat < TAU);
            prop_assert!(wrapped_error(e.theta_hat, theta).abs() < 1e-6,
                "err {}", wrapped_error(e.theta_hat, theta));
            prop_assert!(e.omega_hat > 0.0);
        }
    }

    /// Monte Carlo oracle: error statistics at 25 dB against the CRBs.
    #[test]
    fn noisy_estimates_track_the_crb() {
        let n = 2048;
        let snr = 10f64.powf(2.5);
        let sigma2 = 0.5 / snr;
        let tree = SeedTree::new(77);
        let mut est = ToneEstimator::default();
        let mut ch = tree.stream(Stream::Channel);
        let (mut phase, mut freq) = (Moments::new(), Moments::new());
        let mut rough_hits = 0;
        let trials = 4000;
        for t in 0..trials {
            let theta = rand::Rng::random_range(&mut ch, 0.0..TAU);
            let obs = tone(n, theta, sigma2, 0.0, 1000 + t);
            let (_, omega_l) = rough_frequency_search(&obs, default_dft_len(n)).unwrap();
            if (omega_l - TAU * FC).abs() <= TAU * FS / default_dft_len(n) as f64 {
                rough_hits += 1;
            }
            let e = est.estimate(&obs).unwrap();
            phase.push(wrapped_error(e.theta_hat, theta));
            freq.push(e.omega_hat - TAU * FC);
        }
        assert_eq!(rough_hits, trials);
        let crb = crb_phase_variance(snr, n).unwrap().var_theta_exact;
        let ratio = phase.mean_square() / crb;
        // one-sided: variance at or above the bound within 3 standard errors
        let se = (2.0 / trials as f64).sqrt();
        assert!(
            ratio > 1.0 - 3.0 * se && ratio < 1.2,
            "phase var / CRB = {ratio}"
        );
        assert!(
            phase.mean().abs() < 3.0 * phase.std_err(),
            "bias {}",
            phase.mean()
        );
        let fcrb = crb_frequency_variance(snr, n, FS).unwrap();
        let fr = freq.mean_square() / fcrb;
        assert!(fr < 2.0 && fr > 0.8, "freq var / CRB = {fr}");
    }
}
