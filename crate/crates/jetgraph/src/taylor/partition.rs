//! Integer partitions with their Taylor-propagation multiplicities.
//!
//! A degree-k coefficient of a composition is a sum over the integer
//! partitions of k; each partition sigma contributes with multiplicity
//! nu(sigma) = k! / ((prod_s n_s!) * (prod_s s!)) where n_s counts how
//! often part s occurs. The multiplicities are exact integers for every
//! supported degree and are stored as such.

use std::fmt;
use std::sync::OnceLock;

/// Highest coefficient degree the engine propagates.
pub const MAX_DEGREE: usize = 8;

#[derive(Clone, PartialEq, Eq)]
pub struct Partition {
    /// Parts sorted in descending order; they sum to the degree.
    pub parts: Vec<u8>,
    /// Exact multiplicity of this partition's contraction term.
    pub nu: u64,
}

impl Partition {
    pub fn degree(&self) -> usize {
        self.parts.iter().map(|&p| p as usize).sum()
    }

    /// Number of factors, i.e. the derivative order of the contraction.
    pub fn order(&self) -> usize {
        self.parts.len()
    }

    /// The trivial partition {k} that carries the linear term.
    pub fn is_trivial(&self) -> bool {
        self.parts.len() == 1
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}:{}", self.nu)
    }
}

/// All partitions for every degree up to [`MAX_DEGREE`], built once.
pub struct PartitionTable {
    by_degree: Vec<Vec<Partition>>,
}

impl PartitionTable {
    fn build() -> PartitionTable {
        let by_degree = (1..=MAX_DEGREE).map(enumerate_degree).collect();
        PartitionTable { by_degree }
    }

    pub fn degree(&self, k: usize) -> Option<&[Partition]> {
        if k == 0 || k > MAX_DEGREE {
            return None;
        }
        Some(&self.by_degree[k - 1])
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn multiplicity(parts: &[u8]) -> u64 {
    let k: usize = parts.iter().map(|&p| p as usize).sum();
    let mut denom = 1u64;
    let mut run = 0usize;
    for (i, &p) in parts.iter().enumerate() {
        denom *= factorial(p as usize);
        run += 1;
        let last_of_run = i + 1 == parts.len() || parts[i + 1] != p;
        if last_of_run {
            denom *= factorial(run);
            run = 0;
        }
    }
    factorial(k) / denom
}

/// Enumerate partitions of `k`, each sorted descending, the list sorted
/// lexicographically (so the all-ones partition comes first and the
/// trivial partition {k} last).
fn enumerate_degree(k: usize) -> Vec<Partition> {
    fn rec(remaining: usize, max_part: usize, prefix: &mut Vec<u8>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            let parts = prefix.clone();
            let nu = multiplicity(&parts);
            out.push(Partition { parts, nu });
            return;
        }
        for p in 1..=remaining.min(max_part) {
            prefix.push(p as u8);
            rec(remaining - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, &mut Vec::new(), &mut out);
    out
}

static TABLE: OnceLock<PartitionTable> = OnceLock::new();

pub fn partition_table() -> &'static PartitionTable {
    TABLE.get_or_init(PartitionTable::build)
}

/// Partitions of degree `k` with multiplicities, 1 <= k <= [`MAX_DEGREE`].
pub fn partitions(k: usize) -> Result<&'static [Partition], super::TaylorError> {
    partition_table()
        .degree(k)
        .ok_or(super::TaylorError::DegreeOutOfRange(k))
}
