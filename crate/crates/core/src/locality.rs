//! Neighborhood structures: which groups of subsystems a local operator may
//! act on. Indices are 0-based here; [`NeighborhoodStructure::from_one_based`]
//! accepts the 1-based labels used in the file format.

use crate::error::{DqlsError, Result};
use crate::state::validate_index_set;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodStructure {
    n: usize,
    neighborhoods: Vec<Vec<usize>>,
}

impl NeighborhoodStructure {
    /// Each neighborhood must be a non-empty proper subset of `0..n` and
    /// together they must cover every subsystem. Repeated neighborhoods are
    /// dropped.
    pub fn new(n: usize, neighborhoods: Vec<Vec<usize>>) -> Result<Self> {
        if n < 2 {
            return Err(DqlsError::InvalidIndexSet(
                "a neighborhood structure needs at least two subsystems".into(),
            ));
        }
        if neighborhoods.is_empty() {
            return Err(DqlsError::InvalidIndexSet("no neighborhoods given".into()));
        }
        let mut sorted = Vec::with_capacity(neighborhoods.len());
        for mut nb in neighborhoods {
            validate_index_set(&nb, n)?;
            if nb.len() == n {
                return Err(DqlsError::InvalidIndexSet(
                    "a neighborhood may not contain every subsystem".into(),
                ));
            }
            nb.sort_unstable();
            if !sorted.contains(&nb) {
                sorted.push(nb);
            }
        }
        let ns = NeighborhoodStructure {
            n,
            neighborhoods: sorted,
        };
        let missing = ns.uncovered();
        if !missing.is_empty() {
            return Err(DqlsError::ConstructionError(format!(
                "subsystems {missing:?} belong to no neighborhood"
            )));
        }
        Ok(ns)
    }

    pub fn from_one_based(n: usize, neighborhoods: &[&[usize]]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(neighborhoods.len());
        for nb in neighborhoods {
            if nb.contains(&0) {
                return Err(DqlsError::InvalidIndexSet(
                    "labels are 1-based; 0 is not a subsystem".into(),
                ));
            }
            zero_based.push(nb.iter().map(|&i| i - 1).collect());
        }
        Self::new(n, zero_based)
    }

    /// Every pair `{i, j}`.
    pub fn all_pairs(n: usize) -> Result<Self> {
        let mut nbs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                nbs.push(vec![i, j]);
            }
        }
        Self::new(n, nbs)
    }

    /// Nearest-neighbor pairs on a ring.
    pub fn ring_pairs(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| vec![i, (i + 1) % n]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    pub fn len(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighborhoods.is_empty()
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.neighborhoods
            .iter()
            .map(|nb| nb.iter().map(|&i| i + 1).collect())
            .collect()
    }

    /// Subsystems outside neighborhood `j`.
    pub fn complement(&self, j: usize) -> Result<Vec<usize>> {
        let nb = self.neighborhoods.get(j).ok_or_else(|| {
            DqlsError::InvalidIndexSet(format!("neighborhood {j} does not exist"))
        })?;
        Ok((0..self.n).filter(|i| !nb.contains(i)).collect())
    }

    fn uncovered(&self) -> Vec<usize> {
        uncovered(&self.neighborhoods, self.n)
    }
}

/// Subsystems of `0..n` that none of the sets touches.
pub fn uncovered(sets: &[Vec<usize>], n: usize) -> Vec<usize> {
    (0..n)
        .filter(|i| !sets.iter().any(|nb| nb.contains(i)))
        .collect()
}

/// Whether every neighborhood of `fine` sits inside some neighborhood of
/// `coarse`.
pub fn is_coarse_graining(
    fine: &NeighborhoodStructure,
    coarse: &NeighborhoodStructure,
) -> Result<bool> {
    if fine.n != coarse.n {
        return Err(DqlsError::DimensionMismatch(format!(
            "structures on {} and {} subsystems",
            fine.n, coarse.n
        )));
    }
    Ok(fine.neighborhoods.iter().all(|f| {
        coarse
            .neighborhoods
            .iter()
            .any(|c| f.iter().all(|i| c.contains(i)))
    }))
}

/// Three blocks of subsystems `a`, `b`, `c`, meant to be paired with the
/// neighborhoods `a ∪ b` and `b ∪ c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripartiteGrouping {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

impl TripartiteGrouping {
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        vec![self.a.clone(), self.b.clone(), self.c.clone()]
    }

    /// `[a ∪ b, b ∪ c]`.
    pub fn neighborhoods(&self) -> Vec<Vec<usize>> {
        let mut ab: Vec<usize> = self.a.iter().chain(&self.b).copied().collect();
        let mut bc: Vec<usize> = self.b.iter().chain(&self.c).copied().collect();
        ab.sort_unstable();
        bc.sort_unstable();
        vec![ab, bc]
    }

    /// Merged dimensions `(d_a, d_b, d_c)` for local dimensions `dims`.
    pub fn dims(&self, dims: &[usize]) -> (usize, usize, usize) {
        let p = |g: &[usize]| g.iter().map(|&i| dims[i]).product::<usize>();
        (p(&self.a), p(&self.b), p(&self.c))
    }
}

/// Splits `n` qudits of dimension `d` into consecutive blocks so that the
/// two overlapping neighborhoods `a ∪ b`, `b ∪ c` each hold at most
/// `⌊(n + 3) / 2⌋` qudits and the tripartite dimensions admit a generic
/// DQLS state:
/// even `n` gives `(d^((n-2)/2), d^2, d^((n-2)/2))`, odd `n` with `d > 2`
/// gives `(d^((n-1)/2), d, d^((n-1)/2))`, and odd `n` with `d = 2` gives
/// `(2^((n-3)/2), 4, 2^((n-1)/2))`.
pub fn tripartite_grouping(n: usize, d: usize) -> Result<TripartiteGrouping> {
    if n <= 3 {
        return Err(DqlsError::InvalidParameter(format!(
            "grouping needs more than three qudits, got {n}"
        )));
    }
    if d < 2 {
        return Err(DqlsError::InvalidParameter(format!(
            "local dimension {d} below 2"
        )));
    }
    let (na, nb) = if n.is_multiple_of(2) {
        ((n - 2) / 2, 2)
    } else if d > 2 {
        ((n - 1) / 2, 1)
    } else {
        ((n - 3) / 2, 2)
    };
    Ok(TripartiteGrouping {
        a: (0..na).collect(),
        b: (na..na + nb).collect(),
        c: (na + nb..n).collect(),
    })
}

/// Grouping induced by two neighborhoods whose union is everything:
/// `(first \ second, first ∩ second, second \ first)`.
pub fn pair_grouping(first: &[usize], second: &[usize], n: usize) -> Result<TripartiteGrouping> {
    let covered = (0..n).all(|i| first.contains(&i) || second.contains(&i));
    if !covered {
        return Err(DqlsError::IncompleteNeighborhoods(
            "the two neighborhoods do not cover every subsystem".into(),
        ));
    }
    let a: Vec<usize> = first
        .iter()
        .copied()
        .filter(|i| !second.contains(i))
        .collect();
    let b: Vec<usize> = first
        .iter()
        .copied()
        .filter(|i| second.contains(i))
        .collect();
    let c: Vec<usize> = second
        .iter()
        .copied()
        .filter(|i| !first.contains(i))
        .collect();
    if a.is_empty() || c.is_empty() {
        return Err(DqlsError::InvalidIndexSet(
            "one neighborhood contains the other".into(),
        ));
    }
    Ok(TripartiteGrouping { a, b, c })
}

/// All ways of merging the given neighborhoods into two blocks (each block
/// the union of the neighborhoods assigned to it) such that both blocks are
/// proper subsets and together they cover `0..n`. Duplicates are removed.
pub fn two_block_coarse_grainings(
    neighborhoods: &[Vec<usize>],
    n: usize,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let m = neighborhoods.len();
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    if !(2..=20).contains(&m) {
        return out;
    }
    // Neighborhood 0 always goes to the first block to avoid mirror images.
    for mask in 0u32..(1u32 << (m - 1)) {
        let mut first = vec![false; n];
        let mut second = vec![false; n];
        let mut second_used = false;
        for (j, nb) in neighborhoods.iter().enumerate() {
            let in_second = j > 0 && (mask >> (j - 1)) & 1 == 1;
            let target = if in_second { &mut second } else { &mut first };
            second_used |= in_second;
            for &i in nb {
                target[i] = true;
            }
        }
        if !second_used {
            continue;
        }
        let a: Vec<usize> = (0..n).filter(|&i| first[i]).collect();
        let b: Vec<usize> = (0..n).filter(|&i| second[i]).collect();
        let covers = (0..n).all(|i| first[i] || second[i]);
        if !covers || a.len() == n || b.len() == n {
            continue;
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        if !out.contains(&key) {
            out.push(key);
        }
    }
    out
}
