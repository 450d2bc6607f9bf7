//! Binary cyclic codes with bounded-distance decoders: narrow-sense
//! primitive BCH codes (Hamming codes being the single-error case) and
//! odd-length repetition codes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::gf::Field;
use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Binary polynomial, index = degree.
type Poly = Vec<bool>;

fn degree(p: &[bool]) -> Option<usize> {
    p.iter().rposition(|&b| b)
}

fn poly_mul(a: &[bool], b: &[bool]) -> Poly {
    let mut out = vec![false; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= y;
            }
        }
    }
    out
}

/// `a mod g`, padded to `deg g` coefficients.
fn poly_rem(a: &[bool], g: &[bool]) -> Poly {
    let dg = degree(g).expect("nonzero divisor");
    let mut r = a.to_vec();
    for i in (dg..r.len()).rev() {
        if r[i] {
            for (j, &c) in g.iter().enumerate().take(dg + 1) {
                r[i - dg + j] ^= c;
            }
        }
    }
    r.resize(dg, false);
    r
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BchCode {
    field: Field,
    n: usize,
    k: usize,
    t: usize,
    generator: Poly,
}

impl BchCode {
    /// Narrow-sense primitive BCH code of length `2^m - 1` correcting `t`
    /// errors.
    pub fn new(m: u32, t: usize) -> Result<Self> {
        let field = Field::new(m)?;
        let n = field.order();
        if t == 0 || 2 * t >= n {
            return Err(Error::invalid("t", "must be between 1 and (n-1)/2"));
        }
        let mut covered = vec![false; n];
        let mut generator: Poly = vec![true];
        for i in (1..=2 * t).filter(|i| i % 2 == 1) {
            if covered[i] {
                continue;
            }
            // cyclotomic coset of i and its minimal polynomial
            let mut coset = Vec::new();
            let mut j = i;
            while !covered[j] {
                covered[j] = true;
                coset.push(j);
                j = (2 * j) % n;
            }
            let mut min_poly: Vec<u16> = vec![1];
            for &c in &coset {
                let root = field.alpha_pow(c as i64);
                let mut next = vec![0u16; min_poly.len() + 1];
                for (d, &coef) in min_poly.iter().enumerate() {
                    next[d + 1] ^= coef;
                    next[d] ^= field.mul(coef, root);
                }
                min_poly = next;
            }
            debug_assert!(min_poly.iter().all(|&c| c <= 1));
            let binary: Poly = min_poly.iter().map(|&c| c == 1).collect();
            generator = poly_mul(&generator, &binary);
        }
        let dg = degree(&generator).expect("generator is nonzero");
        if dg >= n {
            return Err(Error::invalid("t", "leaves no message bits"));
        }
        Ok(BchCode {
            field,
            n,
            k: n - dg,
            t,
            generator,
        })
    }

    pub fn generator(&self) -> &[bool] {
        &self.generator
    }

    fn syndromes(&self, word: &[bool]) -> Vec<u16> {
        (1..=2 * self.t)
            .map(|j| {
                word.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .fold(0u16, |acc, (i, _)| {
                        acc ^ self.field.alpha_pow((i * j) as i64)
                    })
            })
            .collect()
    }

    /// Berlekamp-Massey: shortest LFSR (error locator) for the syndromes.
    fn locator(&self, s: &[u16]) -> Vec<u16> {
        let f = &self.field;
        let mut c = vec![1u16];
        let mut b = vec![1u16];
        let (mut l, mut shift, mut last) = (0usize, 1usize, 1u16);
        for n in 0..s.len() {
            let mut d = s[n];
            for i in 1..=l.min(c.len() - 1) {
                d ^= f.mul(c[i], s[n - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = f.div(d, last);
            let mut next = c.clone();
            if next.len() < b.len() + shift {
                next.resize(b.len() + shift, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                next[i + shift] ^= f.mul(coef, bi);
            }
            if 2 * l <= n {
                b = std::mem::replace(&mut c, next);
                l = n + 1 - l;
                last = d;
                shift = 1;
            } else {
                c = next;
                shift += 1;
            }
        }
        c.truncate(l + 1);
        c.resize(l + 1, 0);
        c
    }

    fn decode_bits(&self, word: &[bool]) -> Result<Poly> {
        let s = self.syndromes(word);
        if s.iter().all(|&x| x == 0) {
            return Ok(word.to_vec());
        }
        let lambda = self.locator(&s);
        let l = lambda.len() - 1;
        if l > self.t {
            return Err(Error::DecodeFailure);
        }
        // Chien search: position i is in error when Lambda(alpha^-i) = 0
        let mut out = word.to_vec();
        let mut roots = 0;
        for (i, bit) in out.iter_mut().enumerate() {
            if self.field.eval(&lambda, self.field.alpha_pow(-(i as i64))) == 0 {
                *bit = !*bit;
                roots += 1;
            }
        }
        if roots != l {
            return Err(Error::DecodeFailure);
        }
        if poly_rem(&out, &self.generator).iter().any(|&b| b) {
            return Err(Error::DecodeFailure);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RepetitionCode {
    n: usize,
}

impl RepetitionCode {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::invalid(
                "n",
                "repetition length must be odd and at least 3",
            ));
        }
        Ok(RepetitionCode { n })
    }
}

/// A binary linear block code with a bounded-distance decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Code {
    Bch(BchCode),
    Repetition(RepetitionCode),
}

impl Default for Code {
    /// The (31, 16) BCH code correcting 3 errors.
    fn default() -> Self {
        Code::Bch(BchCode::new(5, 3).expect("(31,16,3) BCH code"))
    }
}

impl Code {
    pub fn bch(m: u32, t: usize) -> Result<Self> {
        Ok(Code::Bch(BchCode::new(m, t)?))
    }

    /// Hamming code of length `2^m - 1`.
    pub fn hamming(m: u32) -> Result<Self> {
        Self::bch(m, 1)
    }

    pub fn repetition(n: usize) -> Result<Self> {
        Ok(Code::Repetition(RepetitionCode::new(n)?))
    }

    pub fn n(&self) -> usize {
        match self {
            Code::Bch(c) => c.n,
            Code::Repetition(c) => c.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Code::Bch(c) => c.k,
            Code::Repetition(_) => 1,
        }
    }

    /// Guaranteed correctable errors per block.
    pub fn t(&self) -> usize {
        match self {
            Code::Bch(c) => c.t,
            Code::Repetition(c) => (c.n - 1) / 2,
        }
    }

    fn check_len(&self, len: usize, want: usize) -> Result<()> {
        if len != want {
            return Err(Error::LengthMismatch {
                expected: want,
                got: len,
            });
        }
        Ok(())
    }

    /// Maps `k` message bits to a codeword of `n` bits.
    pub fn encode(&self, msg: &BitVector) -> Result<BitVector> {
        self.check_len(msg.len(), self.k())?;
        Ok(match self {
            Code::Bch(c) => {
                let mut w = poly_mul(msg.as_slice(), &c.generator);
                w.resize(c.n, false);
                BitVector::from_bits(w)
            }
            Code::Repetition(c) => BitVector::from_bits(vec![msg.as_slice()[0]; c.n]),
        })
    }

    pub fn random_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        let msg: BitVector = (0..self.k()).map(|_| rng.random::<bool>()).collect();
        self.encode(&msg).expect("message has length k")
    }

    /// An `n - k` bit vector that is zero exactly on codewords and is
    /// linear in the word.
    pub fn syndrome(&self, word: &BitVector) -> Result<BitVector> {
        self.check_len(word.len(), self.n())?;
        Ok(match self {
            Code::Bch(c) => BitVector::from_bits(poly_rem(word.as_slice(), &c.generator)),
            Code::Repetition(_) => {
                let w = word.as_slice();
                w[1..].iter().map(|&b| b ^ w[0]).collect()
            }
        })
    }

    /// Nearest codeword within distance `t`, or [`Error::DecodeFailure`]
    /// when the decoder can tell there is none. Beyond `t` errors it may
    /// also return a wrong codeword.
    pub fn decode(&self, word: &BitVector) -> Result<BitVector> {
        self.check_len(word.len(), self.n())?;
        match self {
            Code::Bch(c) => c.decode_bits(word.as_slice()).map(BitVector::from_bits),
            Code::Repetition(c) => {
                let ones = word.count_ones();
                Ok(BitVector::from_bits(vec![2 * ones > c.n; c.n]))
            }
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Code::Bch(c) if c.t == 1 => write!(f, "hamming:{}", c.n),
            Code::Bch(c) => write!(f, "bch:{},{},{}", c.n, c.k, c.t),
            Code::Repetition(c) => write!(f, "repetition:{}", c.n),
        }
    }
}

fn field_degree(n: usize) -> Result<u32> {
    if !(n + 1).is_power_of_two() {
        return Err(Error::Config(format!("code length {n} is not 2^m - 1")));
    }
    Ok((n + 1).trailing_zeros())
}

impl FromStr for Code {
    type Err = Error;

    /// `bch:n,k,t`, `hamming:n` or `repetition:n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad code description {s:?}"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<usize> = args
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (kind.trim(), nums.as_slice()) {
            ("bch", &[n, k, t]) => {
                let code = Code::bch(field_degree(n)?, t)?;
                if code.k() != k {
                    return Err(Error::Config(format!(
                        "no BCH code with n={n}, t={t} has k={k} (it has k={})",
                        code.k()
                    )));
                }
                Ok(code)
            }
            ("hamming", &[n]) => Code::hamming(field_degree(n)?),
            ("repetition", &[n]) => Code::repetition(n),
            _ => Err(bad()),
        }
    }
}
