//! Arithmetic in GF(2^m) through log/antilog tables.

use crate::error::{Error, Result};

/// Primitive polynomials, bit `i` holding the coefficient of `x^i`.
const PRIMITIVE: [(u32, u32); 8] = [
    (3, 0b1011),
    (4, 0b1_0011),
    (5, 0b10_0101),
    (6, 0b100_0011),
    (7, 0b1000_1001),
    (8, 0b1_0001_1101),
    (9, 0b10_0001_0001),
    (10, 0b100_0000_1001),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    m: u32,
    /// `exp[i] = alpha^i`, doubled so products never need a reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Field {
    pub fn new(m: u32) -> Result<Self> {
        let poly = PRIMITIVE
            .iter()
            .find(|&&(d, _)| d == m)
            .map(|&(_, p)| p)
            .ok_or_else(|| Error::invalid("m", "supported field degrees are 3 to 10"))?;
        let order = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x = 1u32;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Field { m, exp, log })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Multiplicative group order `2^m - 1`.
    pub fn order(&self) -> usize {
        (1 << self.m) - 1
    }

    /// `alpha^i` for any integer `i`.
    pub fn alpha_pow(&self, i: i64) -> u16 {
        self.exp[i.rem_euclid(self.order() as i64) as usize]
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "zero has no inverse");
        self.exp[(self.order() - self.log[a as usize] as usize) % self.order()]
    }

    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    /// Evaluates a polynomial with coefficients in the field, lowest
    /// degree first.
    pub fn eval(&self, poly: &[u16], x: u16) -> u16 {
        poly.iter().rev().fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }
}
