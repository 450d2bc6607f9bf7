//! How much E's view says about the legitimate key symbols, measured as
//! plug-in mutual information over many sessions.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::LN_2;

use super::{Node, Role, RoundRecord, SelectionPolicy, SessionOutcome};
use crate::error::{Error, Result};
use crate::quantizer::gray_encode;

/// Joint counts of two discrete variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Contingency {
    joint: HashMap<(u64, u64), u64>,
    n: u64,
}

impl Contingency {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: u64, y: u64) {
        *self.joint.entry((x, y)).or_insert(0) += 1;
        self.n += 1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    fn marginals(&self) -> (HashMap<u64, u64>, HashMap<u64, u64>) {
        let mut px = HashMap::new();
        let mut py = HashMap::new();
        for (&(x, y), &c) in &self.joint {
            *px.entry(x).or_insert(0) += c;
            *py.entry(y).or_insert(0) += c;
        }
        (px, py)
    }

    /// Empirical mutual information in bits.
    pub fn plug_in_bits(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        let (px, py) = self.marginals();
        let mi: f64 = self
            .joint
            .iter()
            .map(|(&(x, y), &c)| {
                let c = c as f64;
                c / n * (c * n / (px[&x] as f64 * py[&y] as f64)).log2()
            })
            .sum();
        mi.max(0.0)
    }

    /// Plug-in estimate with the Miller-Madow correction applied to each of
    /// the three entropies, using occupied cell counts.
    pub fn corrected_bits(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let (px, py) = self.marginals();
        let (mx, my, mxy) = (px.len() as f64, py.len() as f64, self.joint.len() as f64);
        let bias = ((mx - 1.0) + (my - 1.0) - (mxy - 1.0)) / (2.0 * self.n as f64 * LN_2);
        self.plug_in_bits() + bias
    }
}

/// Plug-in mutual information in bits of paired samples.
pub fn plug_in_mutual_information(pairs: impl IntoIterator<Item = (u64, u64)>) -> f64 {
    let mut c = Contingency::new();
    for (x, y) in pairs {
        c.push(x, y);
    }
    c.plug_in_bits()
}

/// Mutual information in bits of a joint probability table.
pub fn exact_mutual_information(joint: &[Vec<f64>]) -> f64 {
    let px: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let cols = joint.first().map_or(0, Vec::len);
    let py: Vec<f64> = (0..cols)
        .map(|j| joint.iter().map(|row| row[j]).sum())
        .collect();
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    mi
}

/// `I(K_j1 xor K_j2 ; K_j1)` for a `K_j1` distributed as `p_first` over
/// `q` symbols and a uniform, independent `K_j2`, computed from the exact
/// joint table.
pub fn xor_leakage_exact(p_first: &[f64]) -> Result<f64> {
    let q = p_first.len();
    if !q.is_power_of_two() {
        return Err(Error::invalid("p_first", "length must be a power of two"));
    }
    // joint[m][a] = P(M = m, K_j1 = a) = p(a) P(K_j2 = m xor a) = p(a) / q
    let joint: Vec<Vec<f64>> = (0..q)
        .map(|m| {
            (0..q)
                .map(|a| {
                    let b = m ^ a;
                    debug_assert!(b < q);
                    p_first[a] / q as f64
                })
                .collect()
        })
        .collect();
    Ok(exact_mutual_information(&joint))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoleLeakage {
    pub role: Role,
    pub samples: u64,
    pub plug_in_bits: f64,
    pub corrected_bits: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeakageReport {
    pub q: u32,
    pub roles: Vec<RoleLeakage>,
}

impl LeakageReport {
    /// Largest bias-corrected leakage over the key's components.
    pub fn max_corrected_bits(&self) -> f64 {
        self.roles
            .iter()
            .map(|r| r.corrected_bits)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pairs each key symbol of A's final key with everything E saw that could
/// bear on it.
///
/// For `K1` that is E's indices of A's and B's beacons. For a relay
/// component it is E's indices of the keying node's beacon and the relay's
/// beacon, plus the relay's published XOR symbol for that round.
#[derive(Clone, Debug)]
pub struct LeakageAccumulator {
    q: u32,
    policy: SelectionPolicy,
    tables: BTreeMap<Role, Contingency>,
}

impl LeakageAccumulator {
    pub fn new(q: u32, policy: SelectionPolicy) -> Self {
        LeakageAccumulator {
            q,
            policy,
            tables: BTreeMap::new(),
        }
    }

    fn eve_index(&self, round: &RoundRecord, tx: Node) -> Result<u64> {
        round
            .reception(Node::Eve, tx)
            .map(|r| (r.index - 1) as u64)
            .ok_or_else(|| Error::invalid("session", "eavesdropper was not simulated"))
    }

    pub fn add_round(&mut self, round: &RoundRecord, relays: u32) -> Result<()> {
        let q = self.q as u64;
        let e_a = self.eve_index(round, Node::A)?;
        let e_b = self.eve_index(round, Node::B)?;
        let k1 = (round.index(Node::A, Node::B)? - 1) as u64;
        self.tables
            .entry(Role::K1)
            .or_default()
            .push(k1, e_a * q + e_b);
        for j in 1..=relays {
            let relay = Node::Relay(j);
            let first = round.index(relay, Node::A)?;
            let second = round.index(relay, Node::B)?;
            let xor = gray_encode(first, self.q)?
                .xor(&gray_encode(second, self.q)?)?
                .to_uint();
            let e_r = self.eve_index(round, relay)?;
            let (role, keyer, e_k) = match self.policy {
                SelectionPolicy::First => (Role::RelayFirst(j), Node::A, e_a),
                SelectionPolicy::Second => (Role::RelaySecond(j), Node::B, e_b),
            };
            let x = (round.index(keyer, relay)? - 1) as u64;
            self.tables
                .entry(role)
                .or_default()
                .push(x, (e_k * q + e_r) * q + xor);
        }
        Ok(())
    }

    pub fn add_session(&mut self, outcome: &SessionOutcome) -> Result<()> {
        let relays = outcome.shares.relays;
        for r in &outcome.rounds {
            self.add_round(r, relays)?;
        }
        Ok(())
    }

    /// Fails with [`Error::InsufficientTrials`] while any component has
    /// fewer than `100 q^2` samples.
    pub fn report(&self) -> Result<LeakageReport> {
        let min = 100 * (self.q as usize).pow(2);
        if self.tables.is_empty() {
            return Err(Error::InsufficientTrials { min, got: 0 });
        }
        let mut roles = Vec::new();
        for (&role, t) in &self.tables {
            if (t.count() as usize) < min {
                return Err(Error::InsufficientTrials {
                    min,
                    got: t.count() as usize,
                });
            }
            roles.push(RoleLeakage {
                role,
                samples: t.count(),
                plug_in_bits: t.plug_in_bits(),
                corrected_bits: t.corrected_bits(),
            });
        }
        Ok(LeakageReport { q: self.q, roles })
    }
}
