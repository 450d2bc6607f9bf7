//! Statistical tests from the NIST SP 800-22 suite, used to score key bits.

use std::fmt;
use std::io::{self, Write};

use rustfft::{num_complex::Complex, FftPlanner};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bits::BitVector;
use crate::error::{Error, Result};

pub const SIGNIFICANCE: f64 = 0.01;

/// Shortest sequence any test accepts.
pub const MIN_LEN: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub p_values: Vec<f64>,
    pub pass: bool,
    pub len: usize,
}

impl TestReport {
    fn new(name: impl Into<String>, p_values: Vec<f64>, len: usize) -> Self {
        let p_values: Vec<f64> = p_values.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        TestReport {
            name: name.into(),
            pass: p_values.iter().all(|&p| p > SIGNIFICANCE),
            p_values,
            len,
        }
    }

    pub fn min_p(&self) -> f64 {
        self.p_values.iter().copied().fold(1.0, f64::min)
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.p_values.iter().map(|p| format!("{p:.6}")).collect();
        write!(
            f,
            "{},{},{}",
            self.name,
            ps.join(";"),
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// Writes `test,p_value,pass` rows; multiple p-values are `;`-separated.
pub fn write_csv(out: &mut impl Write, reports: &[TestReport]) -> io::Result<()> {
    writeln!(out, "test,p_value,pass")?;
    for r in reports {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

fn need(test: &'static str, bits: &BitVector, min: usize) -> Result<usize> {
    if bits.len() < min {
        return Err(Error::SequenceTooShort {
            test,
            min,
            got: bits.len(),
        });
    }
    Ok(bits.len())
}

fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(a, x)
    }
}

fn plus_minus(bits: &BitVector) -> impl Iterator<Item = i64> + '_ {
    bits.iter().map(|b| if b { 1 } else { -1 })
}

pub fn monobit(bits: &BitVector) -> Result<TestReport> {
    let n = need("monobit", bits, MIN_LEN)?;
    let s: i64 = plus_minus(bits).sum();
    let s_obs = s.unsigned_abs() as f64 / (n as f64).sqrt();
    Ok(TestReport::new(
        "monobit",
        vec![erfc(s_obs / 2f64.sqrt())],
        n,
    ))
}

/// Frequency within `m`-bit blocks; trailing bits are dropped.
pub fn block_frequency(bits: &BitVector, m: usize) -> Result<TestReport> {
    let n = need("block_frequency", bits, MIN_LEN.max(m))?;
    if m < 2 {
        return Err(Error::invalid("m", "block length must be at least 2"));
    }
    let blocks = n / m;
    let chi2: f64 = bits.as_slice()[..blocks * m]
        .chunks(m)
        .map(|b| {
            let pi = b.iter().filter(|&&x| x).count() as f64 / m as f64;
            (pi - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    Ok(TestReport::new(
        "block_frequency",
        vec![igamc(blocks as f64 / 2.0, chi2 / 2.0)],
        n,
    ))
}

pub fn runs(bits: &BitVector) -> Result<TestReport> {
    let n = need("runs", bits, MIN_LEN)?;
    let nf = n as f64;
    let pi = bits.count_ones() as f64 / nf;
    // frequency prerequisite
    if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        return Ok(TestReport::new("runs", vec![0.0], n));
    }
    let s = bits.as_slice();
    let v = 1 + s.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * nf * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * nf).sqrt() * pi * (1.0 - pi);
    Ok(TestReport::new("runs", vec![erfc(num / den)], n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

pub fn cumulative_sums(bits: &BitVector, direction: Direction) -> Result<TestReport> {
    let n = need("cumulative_sums", bits, MIN_LEN)?;
    let steps: Vec<i64> = plus_minus(bits).collect();
    let mut s = 0i64;
    let mut z = 0i64;
    let mut visit = |x: i64| {
        s += x;
        z = z.max(s.abs());
    };
    match direction {
        Direction::Forward => steps.iter().for_each(|&x| visit(x)),
        Direction::Reverse => steps.iter().rev().for_each(|&x| visit(x)),
    }
    let name = match direction {
        Direction::Forward => "cumulative_sums_forward",
        Direction::Reverse => "cumulative_sums_reverse",
    };
    let (nf, zf) = (n as f64, z as f64);
    let phi = |x: f64| Normal::standard().cdf(x);
    let sq = nf.sqrt();
    let mut sum1 = 0.0;
    let mut k = ((-nf / zf + 1.0) / 4.0).trunc() as i64;
    while k <= ((nf / zf - 1.0) / 4.0).trunc() as i64 {
        let kf = k as f64;
        sum1 += phi((4.0 * kf + 1.0) * zf / sq) - phi((4.0 * kf - 1.0) * zf / sq);
        k += 1;
    }
    let mut sum2 = 0.0;
    let mut k = ((-nf / zf - 3.0) / 4.0).trunc() as i64;
    while k <= ((nf / zf - 1.0) / 4.0).trunc() as i64 {
        let kf = k as f64;
        sum2 += phi((4.0 * kf + 3.0) * zf / sq) - phi((4.0 * kf + 1.0) * zf / sq);
        k += 1;
    }
    Ok(TestReport::new(name, vec![1.0 - sum1 + sum2], n))
}

/// Counts of every overlapping `m`-bit pattern, the sequence wrapped
/// around its end.
fn pattern_counts(bits: &[bool], m: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        return counts;
    }
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut v = 0usize;
    for &b in &bits[..m - 1] {
        v = (v << 1) | usize::from(b);
    }
    for i in 0..n {
        v = ((v << 1) | usize::from(bits[(i + m - 1) % n])) & mask;
        counts[v] += 1;
    }
    counts
}

fn max_pattern_len(n: usize) -> usize {
    (n as f64).log2().floor() as usize - 2
}

pub fn approximate_entropy(bits: &BitVector, m: usize) -> Result<TestReport> {
    let n = need("approximate_entropy", bits, MIN_LEN)?;
    if m < 1 || m > max_pattern_len(n) {
        return Err(Error::invalid(
            "m",
            format!(
                "pattern length must be 1..={} for {n} bits",
                max_pattern_len(n)
            ),
        ));
    }
    let nf = n as f64;
    let phi = |m: usize| -> f64 {
        pattern_counts(bits.as_slice(), m)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                p * p.ln()
            })
            .sum()
    };
    let ap_en = phi(m) - phi(m + 1);
    let chi2 = 2.0 * nf * (std::f64::consts::LN_2 - ap_en);
    Ok(TestReport::new(
        "approximate_entropy",
        vec![igamc((1u64 << (m - 1)) as f64, chi2 / 2.0)],
        n,
    ))
}

/// Spectral test: counts DFT magnitudes of the +-1 sequence under the 95%
/// peak threshold over the first half of the spectrum.
pub fn dft_test(bits: &BitVector) -> Result<TestReport> {
    let n = need("dft", bits, MIN_LEN)?;
    let mut buf: Vec<Complex<f64>> = plus_minus(bits)
        .map(|x| Complex::new(x as f64, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let n1 = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let n0 = 0.95 * nf / 2.0;
    let d = (n1 - n0) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    Ok(TestReport::new("dft", vec![erfc(d.abs() / 2f64.sqrt())], n))
}

/// Returns the two p-values of the first and second differences of the
/// pattern statistic.
pub fn serial(bits: &BitVector, m: usize) -> Result<TestReport> {
    let n = need("serial", bits, MIN_LEN)?;
    if m < 2 || m > max_pattern_len(n) {
        return Err(Error::invalid(
            "m",
            format!(
                "pattern length must be 2..={} for {n} bits",
                max_pattern_len(n)
            ),
        ));
    }
    let nf = n as f64;
    let psi2 = |m: usize| -> f64 {
        if m == 0 {
            return 0.0;
        }
        let sum: f64 = pattern_counts(bits.as_slice(), m)
            .iter()
            .map(|&c| (c as f64).powi(2))
            .sum();
        (1u64 << m) as f64 / nf * sum - nf
    };
    let (p0, p1, p2) = (psi2(m), psi2(m - 1), psi2(m - 2));
    let d1 = p0 - p1;
    let d2 = p0 - 2.0 * p1 + p2;
    let pow = |e: i32| 2f64.powi(e);
    Ok(TestReport::new(
        "serial",
        vec![
            igamc(pow(m as i32 - 2), d1 / 2.0),
            igamc(pow(m as i32 - 3), d2 / 2.0),
        ],
        n,
    ))
}

/// Block length for block frequency and pattern length for serial and
/// approximate entropy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteParams {
    pub block_len: usize,
    pub pattern_len: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            block_len: 128,
            pattern_len: 2,
        }
    }
}

/// Every implemented test in table order.
pub fn run_suite(bits: &BitVector, params: SuiteParams) -> Result<Vec<TestReport>> {
    Ok(vec![
        dft_test(bits)?,
        monobit(bits)?,
        runs(bits)?,
        approximate_entropy(bits, params.pattern_len)?,
        cumulative_sums(bits, Direction::Forward)?,
        cumulative_sums(bits, Direction::Reverse)?,
        block_frequency(bits, params.block_len)?,
        serial(bits, params.pattern_len)?,
    ])
}
