//! Orderings η of commutator (−), anticommutator (+) and idle (0) slots.
//!
//! Entries are stored earliest time first, so `entries[0]` is η₁. The string
//! form follows the superscript of C^{η_N⋯η₁} and is written latest first:
//! `"+-"` is C⁺⁻, with η₂ = + and η₁ = −.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Eta {
    Plus,
    Minus,
    Zero,
}

impl Eta {
    pub fn symbol(self) -> char {
        match self {
            Eta::Plus => '+',
            Eta::Minus => '-',
            Eta::Zero => '0',
        }
    }

    /// The sensor-side partner η̄: + ↔ −, 0 ↔ 0.
    pub fn bar(self) -> Eta {
        match self {
            Eta::Plus => Eta::Minus,
            Eta::Minus => Eta::Plus,
            Eta::Zero => Eta::Zero,
        }
    }

    pub fn from_symbol(ch: char) -> Result<Self> {
        match ch {
            '+' => Ok(Eta::Plus),
            '-' | '−' => Ok(Eta::Minus),
            '0' => Ok(Eta::Zero),
            _ => Err(Error::InvalidOrdering(format!("bad character `{ch}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderingSequence {
    entries: Vec<Eta>,
}

impl OrderingSequence {
    /// From entries listed earliest first.
    pub fn from_earliest(entries: Vec<Eta>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidOrdering("empty sequence".into()));
        }
        Ok(Self { entries })
    }

    /// From entries listed latest first, as in the superscript.
    pub fn from_latest(mut entries: Vec<Eta>) -> Result<Self> {
        entries.reverse();
        Self::from_earliest(entries)
    }

    /// Earliest first.
    pub fn entries(&self) -> &[Eta] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Θ, the number of non-idle entries.
    pub fn theta(&self) -> usize {
        self.entries.iter().filter(|e| **e != Eta::Zero).count()
    }

    /// Sensor-side sequence η̄.
    pub fn bar(&self) -> Self {
        Self { entries: self.entries.iter().map(|e| e.bar()).collect() }
    }

    /// The latest non-idle entry.
    pub fn leading(&self) -> Option<Eta> {
        self.entries.iter().rev().copied().find(|e| *e != Eta::Zero)
    }

    /// All 3ᴺ sequences of length `n`, earliest slot varying fastest.
    pub fn enumerate(n: usize) -> Vec<OrderingSequence> {
        let all = [Eta::Zero, Eta::Plus, Eta::Minus];
        let total = 3usize.pow(n as u32);
        (0..total)
            .map(|mut k| {
                let mut e = Vec::with_capacity(n);
                for _ in 0..n {
                    e.push(all[k % 3]);
                    k /= 3;
                }
                OrderingSequence { entries: e }
            })
            .collect()
    }
}

impl FromStr for OrderingSequence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v = s.trim().chars().map(Eta::from_symbol).collect::<Result<Vec<_>>>()?;
        Self::from_latest(v)
    }
}

impl fmt::Display for OrderingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.entries.iter().rev() {
            write!(f, "{}", e.symbol())?;
        }
        Ok(())
    }
}

/// True iff the latest non-idle entry is a commutator, so the bath trace vanishes.
pub fn vanishing_correlation_filter(eta: &OrderingSequence) -> bool {
    eta.leading() == Some(Eta::Minus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_order() {
        let s: OrderingSequence = "+-".parse().unwrap();
        assert_eq!(s.entries(), &[Eta::Minus, Eta::Plus]);
        assert_eq!(s.to_string(), "+-");
        assert_eq!(s.theta(), 2);
        assert!("".parse::<OrderingSequence>().is_err());
        assert!("+x".parse::<OrderingSequence>().is_err());
    }

    #[test]
    fn filter_examples() {
        assert!(vanishing_correlation_filter(&"-+".parse().unwrap()));
        assert!(vanishing_correlation_filter(&"-++-".parse().unwrap()));
        assert!(!vanishing_correlation_filter(&"+-".parse().unwrap()));
        assert!(vanishing_correlation_filter(&"0-++".parse().unwrap()));
        assert!(!vanishing_correlation_filter(&"00".parse().unwrap()));
    }

    #[test]
    fn enumerate_counts() {
        let all = OrderingSequence::enumerate(3);
        assert_eq!(all.len(), 27);
        let vanishing = all.iter().filter(|s| vanishing_correlation_filter(s)).count();
        // 3⁰ + 3¹ + 3² sequences with a leading commutator.
        assert_eq!(vanishing, 13);
    }
}
