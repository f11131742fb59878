//! Set partitions of the mode set `{1, .., k}` and the refinement lattice
//! they generate.
//!
//! Every unfolding of an order-`k` tensor is indexed by one of these
//! partitions: each block names the modes merged into a single mode of the
//! unfolded tensor. The canonical representation (blocks sorted by smallest
//! element, elements ascending) doubles as a restricted-growth string, which
//! gives a unique key and a stable enumeration order.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Enumeration guard: Bell(12) = 4,213,597 is the largest lattice we are
/// willing to materialize.
pub const MAX_ENUM_MODES: usize = 12;

/// Errors from partition construction and lattice operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("mode {mode} appears in more than one block")]
    Overlap { mode: usize },
    #[error("mode {mode} is not covered by any block")]
    Coverage { mode: usize },
    #[error("mode {mode} is outside 1..={k}")]
    Range { mode: usize, k: usize },
    #[error("partitions have different mode counts: {left} vs {right}")]
    Mismatch { left: usize, right: usize },
    #[error("mode count {k} outside supported range 1..={max}", max = MAX_ENUM_MODES)]
    Size { k: usize },
    #[error("level {level} outside 1..={k}")]
    Level { level: usize, k: usize },
    #[error("invalid block index {index} for a partition with {blocks} blocks")]
    BlockIndex { index: usize, blocks: usize },
    #[error("cannot parse partition from {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// A canonical set partition of the modes `{1, .., k}`.
///
/// Blocks are disjoint, nonempty, cover `{1, .., k}`, hold their elements in
/// ascending order, and are themselves ordered by smallest element. The
/// equivalent restricted-growth string (`rgs[i]` = index of the block
/// containing mode `i+1`) is kept alongside; the two representations are
/// mutually derivable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    k: usize,
    blocks: Vec<Vec<usize>>,
    rgs: Vec<usize>,
}

impl Partition {
    /// Canonicalizes `raw_blocks` into a [`Partition`] of `{1, .., k}`.
    ///
    /// Rejects blocks with out-of-range modes, duplicated modes, or missing
    /// modes. Idempotent on already-canonical input.
    pub fn canonicalize(k: usize, raw_blocks: &[Vec<usize>]) -> Result<Self, PartitionError> {
        if k == 0 {
            return Err(PartitionError::Size { k });
        }
        let mut seen = vec![false; k + 1];
        let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(raw_blocks.len());
        for raw in raw_blocks {
            if raw.is_empty() {
                continue;
            }
            let mut block = raw.clone();
            block.sort_unstable();
            for &mode in &block {
                if mode == 0 || mode > k {
                    return Err(PartitionError::Range { mode, k });
                }
                if seen[mode] {
                    return Err(PartitionError::Overlap { mode });
                }
                seen[mode] = true;
            }
            blocks.push(block);
        }
        for mode in 1..=k {
            if !seen[mode] {
                return Err(PartitionError::Coverage { mode });
            }
        }
        blocks.sort_by_key(|b| b[0]);
        let mut rgs = vec![0usize; k];
        for (idx, block) in blocks.iter().enumerate() {
            for &mode in block {
                rgs[mode - 1] = idx;
            }
        }
        Ok(Partition { k, blocks, rgs })
    }

    /// Builds a partition from a restricted-growth string.
    fn from_rgs(rgs: &[usize]) -> Self {
        let k = rgs.len();
        debug_assert!(k > 0);
        let nblocks = rgs.iter().copied().max().unwrap_or(0) + 1;
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        Partition {
            k,
            blocks,
            rgs: rgs.to_vec(),
        }
    }

    /// The all-singletons partition `{{1}, .., {k}}`, the least lattice element.
    pub fn finest(k: usize) -> Self {
        assert!(k > 0, "partition of an empty mode set");
        let rgs: Vec<usize> = (0..k).collect();
        Self::from_rgs(&rgs)
    }

    /// The single-block partition `{{1, .., k}}`, the greatest lattice element.
    pub fn coarsest(k: usize) -> Self {
        assert!(k > 0, "partition of an empty mode set");
        Self::from_rgs(&vec![0; k])
    }

    /// Number of modes `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Blocks in canonical order.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Restricted-growth string (`rgs[i]` = block index of mode `i+1`).
    pub fn rgs(&self) -> &[usize] {
        &self.rgs
    }

    /// Number of blocks; the partition's level in the lattice.
    pub fn level(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing `mode` (1-based mode).
    pub fn block_of(&self, mode: usize) -> usize {
        self.rgs[mode - 1]
    }

    pub fn is_finest(&self) -> bool {
        self.level() == self.k
    }

    pub fn is_coarsest(&self) -> bool {
        self.level() == 1
    }

    /// True iff `self` refines `other`: every block of `self` lies inside a
    /// block of `other`. This is the lattice partial order `self <= other`.
    pub fn is_refinement(&self, other: &Partition) -> Result<bool, PartitionError> {
        if self.k != other.k {
            return Err(PartitionError::Mismatch {
                left: self.k,
                right: other.k,
            });
        }
        for block in &self.blocks {
            let target = other.rgs[block[0] - 1];
            if block.iter().any(|&m| other.rgs[m - 1] != target) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Greatest lower bound under refinement: all nonempty pairwise block
    /// intersections.
    pub fn meet(&self, other: &Partition) -> Result<Partition, PartitionError> {
        if self.k != other.k {
            return Err(PartitionError::Mismatch {
                left: self.k,
                right: other.k,
            });
        }
        let mut raw = Vec::new();
        for b1 in &self.blocks {
            for b2 in &other.blocks {
                let inter: Vec<usize> = b1.iter().copied().filter(|m| b2.contains(m)).collect();
                if !inter.is_empty() {
                    raw.push(inter);
                }
            }
        }
        Partition::canonicalize(self.k, &raw)
    }

    /// Merges blocks `i` and `j` (0-based canonical indices) into one,
    /// producing the one-step coarsening.
    pub fn merge_blocks(&self, i: usize, j: usize) -> Result<Partition, PartitionError> {
        let n = self.blocks.len();
        if i >= n || j >= n || i == j {
            let bad = if i >= n { i } else { j };
            return Err(PartitionError::BlockIndex {
                index: bad,
                blocks: n,
            });
        }
        let mut raw: Vec<Vec<usize>> = Vec::with_capacity(n - 1);
        let mut merged = self.blocks[i].clone();
        merged.extend_from_slice(&self.blocks[j]);
        raw.push(merged);
        for (idx, block) in self.blocks.iter().enumerate() {
            if idx != i && idx != j {
                raw.push(block.clone());
            }
        }
        Partition::canonicalize(self.k, &raw)
    }

    /// All partitions `tau` with `self <= tau` and `tau` strictly below the
    /// single-block partition. Contains `self` unless `self` is coarsest;
    /// empty exactly when `self` is coarsest.
    pub fn upper_cone(&self) -> Result<Vec<Partition>, PartitionError> {
        let mut cone = Vec::new();
        for tau in enumerate_partitions(self.k)? {
            if !tau.is_coarsest() && self.is_refinement(&tau)? {
                cone.push(tau);
            }
        }
        Ok(cone)
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order by `(k, rgs)`, matching the enumeration order. This is *not*
/// the lattice partial order; use [`Partition::is_refinement`] for that.
impl Ord for Partition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k.cmp(&other.k).then_with(|| self.rgs.cmp(&other.rgs))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, mode) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{mode}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    /// Parses the canonical text form, e.g. `"1,2|3,4"`. Only the canonical
    /// rendering is accepted; aliases such as `"3,4|1,2"` are rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = |reason: &str| PartitionError::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        if s.is_empty() {
            return Err(parse_err("empty string"));
        }
        let mut raw: Vec<Vec<usize>> = Vec::new();
        let mut k = 0usize;
        for block_str in s.split('|') {
            if block_str.is_empty() {
                return Err(parse_err("empty block"));
            }
            let mut block = Vec::new();
            for elem in block_str.split(',') {
                let mode: usize = elem
                    .parse()
                    .map_err(|_| parse_err(&format!("invalid mode {elem:?}")))?;
                if mode == 0 {
                    return Err(parse_err("modes are 1-based"));
                }
                k = k.max(mode);
                block.push(mode);
            }
            raw.push(block);
        }
        let partition = Partition::canonicalize(k, &raw).map_err(|e| PartitionError::Parse {
            input: s.to_string(),
            reason: e.to_string(),
        })?;
        if partition.to_string() != s {
            return Err(parse_err("not in canonical form"));
        }
        Ok(partition)
    }
}

fn check_enum_guard(k: usize) -> Result<(), PartitionError> {
    if k == 0 || k > MAX_ENUM_MODES {
        return Err(PartitionError::Size { k });
    }
    Ok(())
}

/// All partitions of `{1, .., k}` in lexicographic restricted-growth-string
/// order; `Bell(k)` of them. The coarsest partition comes first (string
/// `00..0`), the finest last (`012..`).
pub fn enumerate_partitions(k: usize) -> Result<Vec<Partition>, PartitionError> {
    check_enum_guard(k)?;
    let mut out = Vec::with_capacity(bell(k) as usize);
    let mut rgs = vec![0usize; k];
    fn rec(pos: usize, max_so_far: usize, rgs: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if pos == rgs.len() {
            out.push(Partition::from_rgs(rgs));
            return;
        }
        for v in 0..=max_so_far + 1 {
            rgs[pos] = v;
            rec(pos + 1, max_so_far.max(v), rgs, out);
        }
    }
    if k == 1 {
        out.push(Partition::from_rgs(&rgs));
    } else {
        rec(1, 0, &mut rgs, &mut out);
    }
    Ok(out)
}

/// The level-`level` partitions of `{1, .., k}` in enumeration order;
/// `S(k, level)` of them (Stirling second kind).
pub fn enumerate_level(k: usize, level: usize) -> Result<Vec<Partition>, PartitionError> {
    check_enum_guard(k)?;
    if level == 0 || level > k {
        return Err(PartitionError::Level { level, k });
    }
    Ok(enumerate_partitions(k)?
        .into_iter()
        .filter(|p| p.level() == level)
        .collect())
}

/// All cover edges of the lattice on `{1, .., k}` as `(finer, coarser)`
/// pairs: the coarser partition merges exactly two blocks of the finer one.
pub fn cover_edges(k: usize) -> Result<Vec<(Partition, Partition)>, PartitionError> {
    check_enum_guard(k)?;
    let mut edges = Vec::new();
    for p in enumerate_partitions(k)? {
        let n = p.level();
        for i in 0..n {
            for j in i + 1..n {
                let coarser = p.merge_blocks(i, j).expect("valid block indices");
                edges.push((p.clone(), coarser));
            }
        }
    }
    Ok(edges)
}

/// Bell number `B(k)`: the number of partitions of a `k`-set.
pub fn bell(k: usize) -> u64 {
    // Bell triangle; B(k) is the last entry of the k-th row.
    let mut row = vec![1u64];
    for _ in 1..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    *row.last().unwrap()
}

/// Stirling number of the second kind `S(k, level)`.
pub fn stirling2(k: usize, level: usize) -> u64 {
    if level == 0 || level > k {
        return u64::from(k == 0 && level == 0);
    }
    let mut table = vec![vec![0u64; level + 1]; k + 1];
    table[0][0] = 1;
    for n in 1..=k {
        for l in 1..=level.min(n) {
            table[n][l] = table[n - 1][l - 1] + (l as u64) * table[n - 1][l];
        }
    }
    table[k][level]
}
