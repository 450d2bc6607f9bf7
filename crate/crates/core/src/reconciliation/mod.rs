//! Code-offset reconciliation of A's and B's raw keys, key confirmation and
//! Toeplitz-hash privacy amplification.
//!
//! A publishes `s = K xor c` block by block for random codewords `c`. B
//! decodes `K' xor s` back to `c` and shifts to recover `K`. Both then hash
//! the agreed key with a public Toeplitz matrix down to the bits the public
//! messages did not reveal.

pub mod code;
pub mod gf;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub use code::{BchCode, Code, RepetitionCode};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::rng::{SeedTree, Stream};

/// Length of the key-confirmation tag in bits.
pub const CONFIRM_BITS: usize = 32;

/// `2 log2(1/delta)` with `delta = 2^-20`.
pub const DEFAULT_MARGIN_BITS: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecureSketch {
    /// `K xor c`, zero-padded to whole blocks.
    pub s: BitVector,
    pub code: String,
    pub blocks: usize,
    /// Length of the sketched key before padding.
    pub key_len: usize,
}

impl fmt::Display for SecureSketch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.code, self.key_len, self.s.to_hex())
    }
}

impl SecureSketch {
    /// Parses the `code key_len hex` form written by `Display`.
    pub fn parse(line: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad sketch line {line:?}"));
        let mut parts = line.split_whitespace();
        let code: Code = parts.next().ok_or_else(bad)?.parse()?;
        let key_len: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let blocks = key_len.div_ceil(code.n());
        let s = BitVector::from_hex(parts.next().ok_or_else(bad)?, blocks * code.n())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(SecureSketch {
            s,
            code: code.to_string(),
            blocks,
            key_len,
        })
    }
}

fn padded(key: &BitVector, n: usize) -> BitVector {
    let mut bits = key.as_slice().to_vec();
    bits.resize(key.len().div_ceil(n) * n, false);
    BitVector::from_bits(bits)
}

/// Sketches `key` block by block, padding the last block with zeros.
pub fn sketch<R: Rng + ?Sized>(key: &BitVector, code: &Code, rng: &mut R) -> Result<SecureSketch> {
    if key.is_empty() {
        return Err(Error::invalid("key", "must not be empty"));
    }
    let n = code.n();
    let k = padded(key, n);
    let blocks = k.len() / n;
    let mut s = BitVector::new();
    for b in 0..blocks {
        let c = code.random_codeword(rng);
        s.extend_from(&(&k.slice(b * n, (b + 1) * n) ^ &c));
    }
    Ok(SecureSketch {
        s,
        code: code.to_string(),
        blocks,
        key_len: key.len(),
    })
}

/// Recovers the sketched key from a noisy copy. Fails with
/// [`Error::DecodeFailure`] when some block is detectably beyond the
/// code's radius.
pub fn recover(noisy: &BitVector, sketch: &SecureSketch, code: &Code) -> Result<BitVector> {
    if code.to_string() != sketch.code {
        return Err(Error::invalid(
            "code",
            format!("sketch was made with {}", sketch.code),
        ));
    }
    if noisy.len() != sketch.key_len {
        return Err(Error::LengthMismatch {
            expected: sketch.key_len,
            got: noisy.len(),
        });
    }
    let n = code.n();
    let k = padded(noisy, n);
    let mut out = BitVector::new();
    for b in 0..sketch.blocks {
        let s = sketch.s.slice(b * n, (b + 1) * n);
        let c = code.decode(&(&k.slice(b * n, (b + 1) * n) ^ &s))?;
        out.extend_from(&(&c ^ &s));
    }
    Ok(out.slice(0, sketch.key_len))
}

fn pack(bits: &BitVector) -> Vec<u8> {
    bits.as_slice()
        .chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
        })
        .collect()
}

/// Truncated SHA-256 of the key, exchanged to detect a miscorrection.
pub fn confirmation_tag(key: &BitVector) -> u32 {
    let mut h = Sha256::new();
    h.update(b"coopkey/confirm");
    h.update((key.len() as u64).to_le_bytes());
    h.update(pack(key));
    let d = h.finalize();
    u32::from_be_bytes([d[0], d[1], d[2], d[3]])
}

pub fn confirm(key: &BitVector, tag: u32) -> Result<()> {
    if confirmation_tag(key) == tag {
        Ok(())
    } else {
        Err(Error::ConfirmationMismatch)
    }
}

/// Bits of the public Toeplitz matrix needed to hash `input_len` bits to
/// `out_len`.
fn toeplitz_diagonals(seed: u64, input_len: usize, out_len: usize) -> Vec<bool> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..input_len + out_len - 1)
        .map(|_| rng.random::<bool>())
        .collect()
}

/// Hashes `key` to `out_len` bits with the Toeplitz matrix generated from
/// the public `seed`. Output bit `i` is the parity of `key` masked by row
/// `i`, whose entry `j` is diagonal `i - j + len - 1`.
pub fn privacy_amplify(key: &BitVector, seed: u64, out_len: usize) -> BitVector {
    if out_len == 0 {
        return BitVector::new();
    }
    let n = key.len();
    let diag = toeplitz_diagonals(seed, n, out_len);
    let k = key.as_slice();
    (0..out_len)
        .map(|i| {
            k.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .fold(false, |acc, (j, _)| acc ^ diag[i + n - 1 - j])
        })
        .collect()
}

/// Bits published about a key of `key_len` bits: `n - k` per block, the
/// confirmation tag and the safety margin.
pub fn leakage_budget(code: &Code, key_len: usize, margin_bits: usize) -> usize {
    key_len.div_ceil(code.n()) * (code.n() - code.k()) + CONFIRM_BITS + margin_bits
}

/// Longest amplified output the entropy accounting allows.
pub fn max_output_len(code: &Code, key_len: usize, margin_bits: usize) -> usize {
    key_len.saturating_sub(leakage_budget(code, key_len, margin_bits))
}

/// Checked amplification: rejects outputs longer than
/// [`max_output_len`].
pub fn privacy_amplify_checked(
    key: &BitVector,
    seed: u64,
    out_len: usize,
    code: &Code,
    margin_bits: usize,
) -> Result<BitVector> {
    let available = max_output_len(code, key.len(), margin_bits);
    if out_len > available {
        return Err(Error::OutputTooLong {
            requested: out_len,
            available,
        });
    }
    Ok(privacy_amplify(key, seed, out_len))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconcileConfig {
    pub code: Code,
    pub margin_bits: usize,
    /// Output length; `None` takes everything the budget allows.
    pub out_len: Option<usize>,
}

impl Default for ReconcileConfig {
    fn default() -> Self {
        ReconcileConfig {
            code: Code::default(),
            margin_bits: DEFAULT_MARGIN_BITS,
            out_len: None,
        }
    }
}

/// Public messages and both parties' results.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reconciled {
    pub sketch: SecureSketch,
    pub tag: u32,
    pub seed: u64,
    pub secret_a: BitVector,
    pub secret_b: BitVector,
    /// Bits of B's key changed by recovery.
    pub corrected: usize,
}

impl Reconciled {
    /// Public transcript lines: sketch, tag and amplification seed.
    pub fn transcript_lines(&self) -> Vec<(String, String)> {
        vec![
            ("sketch".into(), self.sketch.to_string()),
            ("confirm".into(), format!("{:08x}", self.tag)),
            ("pa-seed".into(), format!("{:016x}", self.seed)),
        ]
    }
}

/// A sketches its key, B recovers it, both confirm and amplify. Randomness
/// comes from the code-selection and amplification streams of `tree`.
pub fn reconcile(
    key_a: &BitVector,
    key_b: &BitVector,
    cfg: &ReconcileConfig,
    tree: &SeedTree,
) -> Result<Reconciled> {
    if key_a.len() != key_b.len() {
        return Err(Error::LengthMismatch {
            expected: key_a.len(),
            got: key_b.len(),
        });
    }
    let available = max_output_len(&cfg.code, key_a.len(), cfg.margin_bits);
    let out_len = cfg.out_len.unwrap_or(available);
    if out_len > available || out_len == 0 {
        return Err(Error::OutputTooLong {
            requested: out_len.max(1),
            available,
        });
    }
    let sketch = sketch(key_a, &cfg.code, &mut tree.stream(Stream::CodeSelection))?;
    let recovered = recover(key_b, &sketch, &cfg.code)?;
    let tag = confirmation_tag(key_a);
    confirm(&recovered, tag)?;
    let seed: u64 = tree.stream(Stream::Amplification).random();
    Ok(Reconciled {
        corrected: recovered.hamming_distance(key_b)?,
        secret_a: privacy_amplify(key_a, seed, out_len),
        secret_b: privacy_amplify(&recovered, seed, out_len),
        sketch,
        tag,
        seed,
    })
}
