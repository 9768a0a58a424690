use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn as_char(self) -> char {
        match self {
            Phase::A => 'a',
            Phase::B => 'b',
            Phase::C => 'c',
        }
    }
}

/// Non-empty subset of `{a, b, c}`, always iterated in the order a < b < c.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);

    pub fn new(phases: &[Phase]) -> Option<Self> {
        let bits = phases.iter().fold(0u8, |acc, p| acc | p.bit());
        (bits != 0).then_some(PhaseSet(bits))
    }

    pub fn single(p: Phase) -> Self {
        PhaseSet(p.bit())
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, p: Phase) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn is_subset_of(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    /// Position of `p` in this set's canonical order.
    pub fn position(self, p: Phase) -> Option<usize> {
        self.iter().position(|q| q == p)
    }

    /// Positions of each of `sub`'s phases inside `self`.
    pub fn positions_of(self, sub: PhaseSet) -> Result<Vec<usize>> {
        if !sub.is_subset_of(self) {
            return Err(Error::PhaseSubset {
                src: self.to_string(),
                dst: sub.to_string(),
            });
        }
        Ok(sub.iter().filter_map(|p| self.position(p)).collect())
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhaseSet({self})")
    }
}

impl FromStr for PhaseSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut phases = Vec::new();
        for ch in s.chars() {
            let p = match ch.to_ascii_lowercase() {
                'a' => Phase::A,
                'b' => Phase::B,
                'c' => Phase::C,
                other => return Err(format!("unknown phase '{other}'")),
            };
            if phases.contains(&p) {
                return Err(format!("phase '{ch}' listed twice"));
            }
            phases.push(p);
        }
        PhaseSet::new(&phases).ok_or_else(|| "phase set is empty".to_string())
    }
}

fn check_dim(m: &CMatrix, phases: PhaseSet) -> Result<()> {
    if m.shape() != (phases.len(), phases.len()) {
        return Err(Error::ShapeMismatch {
            op: "phase operator",
            left: (phases.len(), phases.len()),
            right: m.shape(),
        });
    }
    Ok(())
}

/// Principal submatrix of `m` (indexed by `src`) on the phases of `dst`.
pub fn phase_project(m: &CMatrix, src: PhaseSet, dst: PhaseSet) -> Result<CMatrix> {
    check_dim(m, src)?;
    let idx = src.positions_of(dst)?;
    Ok(m.select(&idx, &idx))
}

/// Embeds `m` (indexed by `src`) into a zero matrix indexed by `dst`.
pub fn phase_lift(m: &CMatrix, src: PhaseSet, dst: PhaseSet) -> Result<CMatrix> {
    check_dim(m, src)?;
    let idx = dst.positions_of(src)?;
    let mut out = CMatrix::zeros(dst.len(), dst.len());
    for (r, &ir) in idx.iter().enumerate() {
        for (c, &ic) in idx.iter().enumerate() {
            out[(ir, ic)] = m[(r, c)];
        }
    }
    Ok(out)
}

pub fn phase_project_hermitian(
    m: &HermitianMatrix,
    src: PhaseSet,
    dst: PhaseSet,
) -> Result<HermitianMatrix> {
    if m.dim() != src.len() {
        return Err(Error::ShapeMismatch {
            op: "phase operator",
            left: (src.len(), src.len()),
            right: (m.dim(), m.dim()),
        });
    }
    Ok(m.principal(&src.positions_of(dst)?))
}
