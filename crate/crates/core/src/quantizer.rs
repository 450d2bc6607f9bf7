//! Uniform phase quantization, Gray coding, and the probability that two
//! noisy estimates of the same phase land in the same sector.

use std::f64::consts::{SQRT_2, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::fading::wrap_phase;
use crate::stats::Proportion;

/// Number of quantization sectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantizerConfig {
    q: u32,
}

impl QuantizerConfig {
    /// `q` must be a power of two of at least 2 so each index maps to
    /// `log2 q` bits.
    pub fn new(q: u32) -> Result<Self> {
        if q < 2 || !q.is_power_of_two() {
            return Err(Error::invalid("q", "must be a power of two, at least 2"));
        }
        Ok(QuantizerConfig { q })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.q.trailing_zeros() as usize
    }

    pub fn quantize(&self, theta: f64) -> Result<u32> {
        quantize_phase(theta, self.q)
    }

    pub fn encode(&self, k: u32) -> Result<BitVector> {
        gray_encode(k, self.q)
    }
}

/// The index `k` in `1..=q` with `theta` in `[2pi(k-1)/q, 2pi k/q)`.
/// Finite angles are first reduced into `[0, 2pi)`.
pub fn quantize_phase(theta: f64, q: u32) -> Result<u32> {
    if q == 0 {
        return Err(Error::invalid("q", "must be positive"));
    }
    if !theta.is_finite() {
        return Err(Error::PhaseOutOfRange(theta));
    }
    let x = wrap_phase(theta);
    if !(0.0..TAU).contains(&x) {
        return Err(Error::PhaseOutOfRange(theta));
    }
    let qf = q as f64;
    let mut k = ((x * qf / TAU).floor() as u32 + 1).clamp(1, q);
    // the division above can round across a boundary; settle against the
    // boundaries exactly as they are defined
    while k < q && x >= TAU * k as f64 / qf {
        k += 1;
    }
    while k > 1 && x < TAU * (k - 1) as f64 / qf {
        k -= 1;
    }
    Ok(k)
}

fn bits_for(q: u32) -> Result<usize> {
    if q < 2 || !q.is_power_of_two() {
        return Err(Error::invalid("q", "must be a power of two, at least 2"));
    }
    Ok(q.trailing_zeros() as usize)
}

/// Reflected binary Gray code of `k - 1` in `log2 q` bits, MSB first.
pub fn gray_encode(k: u32, q: u32) -> Result<BitVector> {
    let width = bits_for(q)?;
    if k == 0 || k > q {
        return Err(Error::IndexOutOfRange { index: k, q });
    }
    let v = k - 1;
    Ok(BitVector::from_uint((v ^ (v >> 1)) as u64, width))
}

pub fn gray_decode(bits: &BitVector, q: u32) -> Result<u32> {
    let width = bits_for(q)?;
    if bits.len() != width {
        return Err(Error::LengthMismatch {
            expected: width,
            got: bits.len(),
        });
    }
    let mut g = bits.to_uint() as u32;
    let mut v = 0;
    while g != 0 {
        v ^= g;
        g >>= 1;
    }
    Ok(v + 1)
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Probability that `N(theta, sigma^2)` reduced mod `2pi` falls in
/// `[lo, hi)` with `0 <= hi - lo <= 2pi`.
fn wrapped_mass(lo: f64, hi: f64, theta: f64, sigma: f64) -> f64 {
    let reach = (10.0 * sigma / TAU).ceil() as i64 + 1;
    (-reach..=reach)
        .map(|j| {
            let shift = TAU * j as f64;
            norm_cdf((hi + shift - theta) / sigma) - norm_cdf((lo + shift - theta) / sigma)
        })
        .sum()
}

/// Beyond this spread the wrapped normal is uniform to within 1e-13.
const UNIFORM_SIGMA: f64 = 8.0;

fn check_sigma2(sigma_theta2: f64) -> Result<f64> {
    if !(sigma_theta2 > 0.0 && sigma_theta2.is_finite()) {
        return Err(Error::invalid(
            "sigma_theta2",
            "must be positive and finite",
        ));
    }
    Ok(sigma_theta2.sqrt())
}

/// Averages `f(theta)` over one sector `[0, w)`, exploiting the symmetry of
/// the integrands here about `w/2`. The edge region of width ~`sigma` is
/// integrated separately so the adaptive rule cannot step over it.
fn sector_average(w: f64, sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * w;
    let edge = (12.0 * sigma).min(half);
    let tol = 1e-9 * half;
    let mut integral = adaptive_simpson(&f, 0.0, edge, 0.5 * tol);
    if edge < half {
        integral += adaptive_simpson(&f, edge, half, 0.5 * tol);
    }
    (integral / half).clamp(0.0, 1.0)
}

/// Agreement probability from the true-sector term only: both estimates
/// land in the sector that holds the true phase.
pub fn p_qia(sigma_theta2: f64, q: u32) -> Result<f64> {
    let sigma = check_sigma2(sigma_theta2)?;
    if q == 0 {
        return Err(Error::invalid("q", "must be positive"));
    }
    if sigma > UNIFORM_SIGMA {
        return Ok(1.0 / (q as f64 * q as f64));
    }
    let w = TAU / q as f64;
    Ok(sector_average(w, sigma, |theta| {
        let p = wrapped_mass(0.0, w, theta, sigma);
        p * p
    }))
}

/// Agreement probability summed over every sector, so that two estimates
/// which both slip into the same neighbour also count as agreeing.
pub fn p_qia_all_sectors(sigma_theta2: f64, q: u32) -> Result<f64> {
    let sigma = check_sigma2(sigma_theta2)?;
    if q == 0 {
        return Err(Error::invalid("q", "must be positive"));
    }
    if sigma > UNIFORM_SIGMA {
        return Ok(1.0 / q as f64);
    }
    let w = TAU / q as f64;
    let reach = (10.0 * sigma / w).ceil() as i64 + 1;
    let q = q as i64;
    Ok(sector_average(w, sigma, |theta| {
        let mut folded = vec![0.0; q as usize];
        for d in -reach..=reach {
            let lo = d as f64 * w;
            let p = norm_cdf((lo + w - theta) / sigma) - norm_cdf((lo - theta) / sigma);
            folded[d.rem_euclid(q) as usize] += p;
        }
        folded.iter().map(|p| p * p).sum()
    }))
}

/// Monte Carlo agreement rate of two independent Gaussian-perturbed copies
/// of a uniform phase; returns the estimate and its standard error.
pub fn p_qia_monte_carlo<R: Rng + ?Sized>(
    sigma_theta2: f64,
    q: u32,
    draws: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let sigma = check_sigma2(sigma_theta2)?;
    if draws == 0 {
        return Err(Error::invalid("draws", "must be positive"));
    }
    let mut hits = 0;
    for _ in 0..draws {
        let theta = rng.random_range(0.0..TAU);
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let a = quantize_phase(theta + sigma * e1, q)?;
        let b = quantize_phase(theta + sigma * e2, q)?;
        hits += (a == b) as u64;
    }
    let p = Proportion {
        hits,
        trials: draws,
    };
    Ok((p.value(), p.std_err()))
}

/// Bit-error probability from the agreement probability. With Gray coding a
/// disagreement is assumed to hit an adjacent sector and so flip one of the
/// `log2 q` bits.
pub fn predicted_ber(p_qia: f64, q: u32, gray: bool) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_qia) {
        return Err(Error::invalid("p_qia", "must be a probability"));
    }
    let pe = 1.0 - p_qia;
    if gray {
        Ok(pe / bits_for(q)? as f64)
    } else {
        Ok(pe)
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // a few fixed panels first so narrow features are not stepped over
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, f1) = (f(x0), f(x1));
            let m = 0.5 * (x0 + x1);
            let fm = f(m);
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_step(f, x0, x1, f0, fm, f1, whole, tol / PANELS as f64, 48)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
