use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_CANDIDATES: usize = 1_000_000;

/// Per-dimension polynomial degrees of one tensor-product basis term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(degrees: Vec<u32>) -> Self {
        Self(degrees)
    }

    pub fn zero(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_degree(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|d| *d == 0)
    }

    /// `(Σ d_i^q)^(1/q)`.
    pub fn q_norm(&self, q: f64) -> f64 {
        self.0
            .iter()
            .map(|&d| (d as f64).powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// Hyperbolic truncation set `{α : (Σ α_i^q)^(1/q) ≤ p_max}` in lexicographic order.
pub fn candidate_basis(m: usize, p_max: usize, q: f64) -> Result<Vec<MultiIndex>> {
    if m == 0 {
        return Err(Error::InvalidArgument("basis dimension must be positive".into()));
    }
    if p_max < 1 {
        return Err(Error::InvalidArgument("maximum degree must be at least 1".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidArgument(format!("hyperbolic exponent {q} outside (0, 1]")));
    }
    // compare Σ d^q against p^q, with slack for integer boundary cases like (1, 1) at q = 1
    let budget = (p_max as f64).powf(q) * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut current = vec![0u32; m];
    enumerate(0, budget, q, p_max as u32, &mut current, &mut out)?;
    Ok(out)
}

fn enumerate(
    dim: usize,
    remaining: f64,
    q: f64,
    p_max: u32,
    current: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) -> Result<()> {
    if dim == current.len() {
        if out.len() == MAX_CANDIDATES {
            return Err(Error::BasisTooLarge { limit: MAX_CANDIDATES });
        }
        out.push(MultiIndex(current.clone()));
        return Ok(());
    }
    let mut d = 0u32;
    loop {
        let cost = (d as f64).powf(q);
        if d > p_max || cost > remaining {
            break;
        }
        current[dim] = d;
        enumerate(dim + 1, remaining - cost, q, p_max, current, out)?;
        d += 1;
    }
    current[dim] = 0;
    Ok(())
}
