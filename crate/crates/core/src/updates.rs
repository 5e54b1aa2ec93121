//! The ordered collection of low-rank update pairs `{(Uₖ, Vₖ)}`.

use crate::error::{Result, SmwError};
use crate::matrix::DenseMatrix;

/// One update `U·Vᵀ`; `u` and `v` are both `n x m`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdatePair {
    u: DenseMatrix,
    v: DenseMatrix,
}

impl UpdatePair {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.shape() != v.shape() {
            return Err(SmwError::DimensionMismatch(format!(
                "U is {}x{} but V is {}x{}",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols()
            )));
        }
        Ok(Self { u, v })
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }
}

/// `N ≥ 0` update pairs sharing the base dimension `n`. Ranks may differ
/// between pairs; a pair can never have zero width since [`DenseMatrix`]
/// has no empty shape.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSet {
    n: usize,
    pairs: Vec<UpdatePair>,
    offsets: Vec<usize>,
}

impl UpdateSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            pairs: Vec::new(),
            offsets: vec![0],
        }
    }

    pub fn new(n: usize, pairs: Vec<(DenseMatrix, DenseMatrix)>) -> Result<Self> {
        let mut set = Self::empty(n);
        for (u, v) in pairs {
            set.push(u, v)?;
        }
        Ok(set)
    }

    /// Appends a pair after checking both factors have `n` rows and equal width.
    pub fn push(&mut self, u: DenseMatrix, v: DenseMatrix) -> Result<()> {
        let k = self.pairs.len() + 1;
        for (name, m) in [("U", &u), ("V", &v)] {
            if m.rows() != self.n {
                return Err(SmwError::DimensionMismatch(format!(
                    "{name}{k} has {} rows, base dimension is {}",
                    m.rows(),
                    self.n
                )));
            }
        }
        let pair = UpdatePair::new(u, v)
            .map_err(|e| SmwError::DimensionMismatch(format!("pair {k}: {e}")))?;
        self.offsets.push(self.total_rank() + pair.rank());
        self.pairs.push(pair);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pairs `N`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[UpdatePair] {
        &self.pairs
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.pairs.iter().map(UpdatePair::rank).collect()
    }

    /// `Σ mₖ`.
    pub fn total_rank(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Prefix sums of the ranks, `N + 1` entries starting at zero.
    pub fn block_offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// The same pairs in the order given by `order`, a permutation of `0..N`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len()
            || order.iter().any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(SmwError::DimensionMismatch(format!(
                "{order:?} is not a permutation of {} pairs",
                self.len()
            )));
        }
        Self::new(
            self.n,
            order
                .iter()
                .map(|&i| (self.pairs[i].u.clone(), self.pairs[i].v.clone()))
                .collect(),
        )
    }

    /// Merges consecutive pairs into wider ones. `group_sizes` counts how many
    /// original pairs go into each new pair and must sum to `N`.
    pub fn regrouped(&self, group_sizes: &[usize]) -> Result<Self> {
        if group_sizes.iter().sum::<usize>() != self.len() || group_sizes.contains(&0) {
            return Err(SmwError::DimensionMismatch(format!(
                "group sizes {group_sizes:?} do not partition {} pairs",
                self.len()
            )));
        }
        let mut out = Self::empty(self.n);
        let mut start = 0;
        for &size in group_sizes {
            let group = &self.pairs[start..start + size];
            let us: Vec<&DenseMatrix> = group.iter().map(|p| &p.u).collect();
            let vs: Vec<&DenseMatrix> = group.iter().map(|p| &p.v).collect();
            out.push(DenseMatrix::hcat(&us)?, DenseMatrix::hcat(&vs)?)?;
            start += size;
        }
        Ok(out)
    }
}

/// `B = [U₁ … U_N]` and `C = [V₁ … V_N]`, both `n x Σmₖ`, so that
/// `B·Cᵀ = Σ Uₖ·Vₖᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedPair {
    pub b: DenseMatrix,
    pub c: DenseMatrix,
}

/// Concatenates all update factors into a single rank-`Σmₖ` pair.
pub fn stack_updates(updates: &UpdateSet) -> Result<StackedPair> {
    if updates.is_empty() {
        return Err(SmwError::EmptyUpdates);
    }
    let us: Vec<&DenseMatrix> = updates.pairs().iter().map(UpdatePair::u).collect();
    let vs: Vec<&DenseMatrix> = updates.pairs().iter().map(UpdatePair::v).collect();
    Ok(StackedPair {
        b: DenseMatrix::hcat(&us)?,
        c: DenseMatrix::hcat(&vs)?,
    })
}
