use std::collections::BTreeMap;
use std::fmt;

use super::{Node, Reception, Role, RoundRecord, SessionConfig};
use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::quantizer::gray_encode;

/// Which member of each relay pair goes into the final key.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectionPolicy {
    /// `K_j1`, the half shared with A.
    #[default]
    First,
    /// `K_j2`, the half shared with B.
    Second,
}

impl SelectionPolicy {
    pub fn pick(self, j: u32) -> Role {
        match self {
            SelectionPolicy::First => Role::RelayFirst(j),
            SelectionPolicy::Second => Role::RelaySecond(j),
        }
    }
}

impl std::str::FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SelectionPolicy::First),
            "second" => Ok(SelectionPolicy::Second),
            other => Err(Error::Config(format!("unknown selection policy {other:?}"))),
        }
    }
}

/// The two holders' copies of one component. They agree only when every
/// round's quantization indices agreed.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedComponent {
    pub role: Role,
    pub holders: (Node, Node),
    pub indices: (Vec<u32>, Vec<u32>),
    pub bits: (BitVector, BitVector),
}

impl SharedComponent {
    pub fn copy_of(&self, node: Node) -> Option<&BitVector> {
        if self.holders.0 == node {
            Some(&self.bits.0)
        } else if self.holders.1 == node {
            Some(&self.bits.1)
        } else {
            None
        }
    }

    /// Number of rounds whose indices differ between the two holders.
    pub fn index_disagreements(&self) -> usize {
        self.indices
            .0
            .iter()
            .zip(&self.indices.1)
            .filter(|(a, b)| a != b)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyShares {
    pub q: u32,
    pub relays: u32,
    pub k1: SharedComponent,
    /// `relay_pairs[j - 1] = (K_j1, K_j2)`.
    pub relay_pairs: Vec<(SharedComponent, SharedComponent)>,
}

impl KeyShares {
    pub fn component(&self, role: Role) -> Option<&SharedComponent> {
        match role {
            Role::K1 => Some(&self.k1),
            Role::RelayFirst(j) => self.relay_pairs.get(j as usize - 1).map(|p| &p.0),
            Role::RelaySecond(j) => self.relay_pairs.get(j as usize - 1).map(|p| &p.1),
        }
    }
}

fn gather(
    role: Role,
    holders: (Node, Node),
    rounds: &[RoundRecord],
    q: u32,
) -> Result<SharedComponent> {
    let (x, y) = holders;
    let mut ix = Vec::with_capacity(rounds.len());
    let mut iy = Vec::with_capacity(rounds.len());
    let mut bx = BitVector::new();
    let mut by = BitVector::new();
    for r in rounds {
        // each holder quantizes the beacon sent by the other one
        let kx = r.index(x, y)?;
        let ky = r.index(y, x)?;
        bx.extend_from(&gray_encode(kx, q)?);
        by.extend_from(&gray_encode(ky, q)?);
        ix.push(kx);
        iy.push(ky);
    }
    Ok(SharedComponent {
        role,
        holders,
        indices: (ix, iy),
        bits: (bx, by),
    })
}

/// Builds every component by concatenating Gray-coded indices round by
/// round.
pub fn accumulate_shares(config: &SessionConfig, rounds: &[RoundRecord]) -> Result<KeyShares> {
    let q = config.quantizer.q();
    let k1 = gather(Role::K1, (Node::A, Node::B), rounds, q)?;
    let relay_pairs = (1..=config.relays)
        .map(|j| {
            Ok((
                gather(Role::RelayFirst(j), (Node::A, Node::Relay(j)), rounds, q)?,
                gather(Role::RelaySecond(j), (Node::B, Node::Relay(j)), rounds, q)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyShares {
        q,
        relays: config.relays,
        k1,
        relay_pairs,
    })
}

/// Everything sent in the clear during a session.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PublicTranscript {
    /// `xor_messages[j - 1] = K_j1 xor K_j2` as held by relay `j`.
    pub xor_messages: Vec<BitVector>,
    /// `(round, slot, E's reception)` for every beacon E heard.
    pub eavesdropper: Vec<(usize, usize, Reception)>,
    /// Extra `key=value` records appended by later phases, such as
    /// reconciliation sketches.
    pub records: Vec<(String, String)>,
}

impl fmt::Display for PublicTranscript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, m) in self.xor_messages.iter().enumerate() {
            writeln!(
                f,
                "xor\trelay=R{}\tbits={}\thex={}",
                j + 1,
                m.len(),
                m.to_hex()
            )?;
        }
        for (round, slot, e) in &self.eavesdropper {
            writeln!(
                f,
                "eve\tround={round}\tslot={slot}\test={}\tidx={}",
                e.estimate, e.index
            )?;
        }
        for (k, v) in &self.records {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Each relay XORs its two halves and publishes the result.
pub fn relay_publish(shares: &KeyShares) -> Result<PublicTranscript> {
    let xor_messages = shares
        .relay_pairs
        .iter()
        .enumerate()
        .map(|(i, (first, second))| {
            let relay = Node::Relay(i as u32 + 1);
            let a = first.copy_of(relay).expect("relay holds K_j1");
            let b = second.copy_of(relay).expect("relay holds K_j2");
            a.xor(b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PublicTranscript {
        xor_messages,
        ..PublicTranscript::default()
    })
}

/// The component set one keying node holds after the XOR messages.
#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    pub holder: Node,
    pub relays: u32,
    pub parts: BTreeMap<Role, BitVector>,
}

/// A keeps `K1` and every `K_j1` and recovers `K_j2 = K_j1 xor m_j`; B
/// keeps `K1` and every `K_j2` and recovers `K_j1` the same way.
pub fn recover_components(
    holder: Node,
    shares: &KeyShares,
    transcript: &PublicTranscript,
) -> Result<Components> {
    if !matches!(holder, Node::A | Node::B) {
        return Err(Error::invalid("holder", "only A and B assemble keys"));
    }
    if transcript.xor_messages.len() != shares.relay_pairs.len() {
        return Err(Error::LengthMismatch {
            expected: shares.relay_pairs.len(),
            got: transcript.xor_messages.len(),
        });
    }
    let mut parts = BTreeMap::new();
    let own = |c: &SharedComponent| c.copy_of(holder).cloned();
    parts.insert(Role::K1, own(&shares.k1).expect("A and B hold K1"));
    for (i, ((first, second), msg)) in shares
        .relay_pairs
        .iter()
        .zip(&transcript.xor_messages)
        .enumerate()
    {
        let j = i as u32 + 1;
        let (mine, role_mine, role_other) = match holder {
            Node::A => (own(first), Role::RelayFirst(j), Role::RelaySecond(j)),
            _ => (own(second), Role::RelaySecond(j), Role::RelayFirst(j)),
        };
        let mine = mine.expect("keying node holds its relay half");
        parts.insert(role_other, mine.xor(msg)?);
        parts.insert(role_mine, mine);
    }
    Ok(Components {
        holder,
        relays: shares.relays,
        parts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinalKey {
    pub bits: BitVector,
    pub composition: Vec<Role>,
}

/// `K1 || pick(1) || ... || pick(N)`, exactly one half of each relay pair.
pub fn assemble_final_key(components: &Components, policy: SelectionPolicy) -> Result<FinalKey> {
    let composition: Vec<Role> = std::iter::once(Role::K1)
        .chain((1..=components.relays).map(|j| policy.pick(j)))
        .collect();
    let mut bits = BitVector::new();
    for role in &composition {
        let part = components
            .parts
            .get(role)
            .ok_or_else(|| Error::MissingComponent(role.to_string()))?;
        bits.extend_from(part);
    }
    Ok(FinalKey { bits, composition })
}
