//! Line-oriented session log: one tab-separated `key=value` line per slot.
//!
//! ```text
//! round=1 slot=1 tx=A rx=B,R1 true=0.52,4.1 est=0.5201,4.0998 idx=2,11
//! ```

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use super::{Node, Reception, SlotRecord};
use crate::error::{Error, Result};

fn join<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for SlotRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.receptions;
        write!(
            f,
            "round={}\tslot={}\ttx={}\trx={}\ttrue={}\test={}\tidx={}",
            self.round,
            self.slot,
            self.transmitter,
            join(r.iter().map(|x| x.receiver)),
            join(r.iter().map(|x| x.true_phase)),
            join(r.iter().map(|x| x.estimate)),
            join(r.iter().map(|x| x.index)),
        )
    }
}

fn parse_list<T: FromStr>(field: &str, s: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            x.parse()
                .map_err(|_| Error::Config(format!("trace field {field}: bad value {x:?}")))
        })
        .collect()
}

impl FromStr for SlotRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for part in line.trim_end_matches(['\r', '\n']).split('\t') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("trace: missing '=' in {part:?}")))?;
            if fields.insert(k, v).is_some() {
                return Err(Error::Config(format!("trace: duplicate field {k}")));
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("trace: missing field {k}")))
        };
        let number = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Config(format!("trace: bad {k}")))
        };
        let rx: Vec<Node> = parse_list("rx", get("rx")?)?;
        let truth: Vec<f64> = parse_list("true", get("true")?)?;
        let est: Vec<f64> = parse_list("est", get("est")?)?;
        let idx: Vec<u32> = parse_list("idx", get("idx")?)?;
        if truth.len() != rx.len() || est.len() != rx.len() || idx.len() != rx.len() {
            return Err(Error::Config("trace: list lengths differ".into()));
        }
        Ok(SlotRecord {
            round: number("round")?,
            slot: number("slot")?,
            transmitter: get("tx")?.parse()?,
            receptions: (0..rx.len())
                .map(|i| Reception {
                    receiver: rx[i],
                    true_phase: truth[i],
                    estimate: est[i],
                    index: idx[i],
                })
                .collect(),
        })
    }
}

pub fn write_trace<'a>(
    out: &mut impl Write,
    slots: impl IntoIterator<Item = &'a SlotRecord>,
) -> io::Result<()> {
    for s in slots {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

/// Reads slot lines back. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_trace(input: impl BufRead) -> Result<Vec<SlotRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse()?);
    }
    Ok(out)
}
