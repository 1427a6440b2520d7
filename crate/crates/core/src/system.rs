//! System signatures of (m,n)-composites, parity sectors and factor
//! permutations.
//!
//! Every composite uses one canonical factor order: the `m` classical dits
//! first, then the `n` anti-classical anti-dits. All factors share the local
//! dimension `d`.

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::{self, ComplexOperator, ComplexVector};

/// Kind of a tensor factor, with its index among factors of that kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    Classical(usize),
    AntiClassical(usize),
}

impl FactorKind {
    pub fn is_classical(self) -> bool {
        matches!(self, FactorKind::Classical(_))
    }
}

/// Local dimension and factor counts of an (m,n)-composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemSignature {
    d: usize,
    m: usize,
    n: usize,
}

impl SystemSignature {
    pub fn new(d: usize, m: usize, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!("local dimension must be >= 2, got {d}")));
        }
        if m + n == 0 {
            return Err(Error::Domain("a composite needs at least one factor".into()));
        }
        Ok(Self { d, m, n })
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    /// Number of classical factors.
    pub fn classical(&self) -> usize {
        self.m
    }

    /// Number of anti-classical factors.
    pub fn anticlassical(&self) -> usize {
        self.n
    }

    pub fn num_factors(&self) -> usize {
        self.m + self.n
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.d; self.m + self.n]
    }

    /// `d^(m+n)`, saturating on overflow.
    pub fn total_dim(&self) -> usize {
        let mut acc: usize = 1;
        for _ in 0..self.num_factors() {
            acc = acc.saturating_mul(self.d);
        }
        acc
    }

    /// Number of dit/anti-dit pairs in the canonical pairing.
    pub fn paired(&self) -> usize {
        self.m.min(self.n)
    }

    pub fn factor_order(&self) -> Vec<FactorKind> {
        (0..self.m)
            .map(FactorKind::Classical)
            .chain((0..self.n).map(FactorKind::AntiClassical))
            .collect()
    }

    pub fn position(&self, kind: FactorKind) -> usize {
        match kind {
            FactorKind::Classical(i) => i,
            FactorKind::AntiClassical(j) => self.m + j,
        }
    }

    pub fn kind_at(&self, position: usize) -> FactorKind {
        if position < self.m {
            FactorKind::Classical(position)
        } else {
            FactorKind::AntiClassical(position - self.m)
        }
    }

    /// Signature of the subsystem formed by the listed factor positions.
    pub fn restrict(&self, positions: &[usize]) -> Result<Self> {
        if positions.iter().any(|&p| p >= self.num_factors()) {
            return Err(Error::Domain(format!(
                "factor set {positions:?} not within {} factors",
                self.num_factors()
            )));
        }
        let m = positions.iter().filter(|&&p| p < self.m).count();
        let n = positions.len() - m;
        Self::new(self.d, m, n)
    }
}

impl fmt::Display for SystemSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})-composite, d={}", self.m, self.n, self.d)
    }
}

/// Parity sector label `k` of a dit/anti-dit pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityIndex(usize);

impl ParityIndex {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::Domain(format!("parity {k} out of range for d={d}")));
        }
        Ok(Self(k))
    }

    pub fn value(self) -> usize {
        self.0
    }

    pub(crate) fn from_raw(k: usize) -> Self {
        Self(k)
    }
}

/// Permutations of the classical factors (`sigma`) and anti-classical
/// factors (`tau`). Entry `i` is the destination position of factor `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactorPermutation {
    pub sigma: Vec<usize>,
    pub tau: Vec<usize>,
}

fn is_bijection(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

impl FactorPermutation {
    pub fn new(sigma: Vec<usize>, tau: Vec<usize>) -> Result<Self> {
        if !is_bijection(&sigma) || !is_bijection(&tau) {
            return Err(Error::Domain(format!(
                "sigma {sigma:?} / tau {tau:?} are not permutations"
            )));
        }
        Ok(Self { sigma, tau })
    }

    pub fn identity(m: usize, n: usize) -> Self {
        Self {
            sigma: (0..m).collect(),
            tau: (0..n).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.sigma.iter().enumerate().all(|(i, &p)| i == p)
            && self.tau.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if self.sigma.len() != first.sigma.len() || self.tau.len() != first.tau.len() {
            return Err(Error::Domain("composing permutations of different sizes".into()));
        }
        Ok(Self {
            sigma: first.sigma.iter().map(|&i| self.sigma[i]).collect(),
            tau: first.tau.iter().map(|&j| self.tau[j]).collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            sigma: tensor::inverse_permutation(&self.sigma),
            tau: tensor::inverse_permutation(&self.tau),
        }
    }

    pub fn check(&self, sig: &SystemSignature) -> Result<()> {
        if self.sigma.len() != sig.classical() || self.tau.len() != sig.anticlassical() {
            return Err(Error::Domain(format!(
                "permutation sizes ({},{}) do not match {sig}",
                self.sigma.len(),
                self.tau.len()
            )));
        }
        Ok(())
    }

    /// The same permutation over all `m+n` canonical positions.
    pub fn full(&self) -> Vec<usize> {
        let m = self.sigma.len();
        self.sigma
            .iter()
            .copied()
            .chain(self.tau.iter().map(|&j| m + j))
            .collect()
    }
}

/// Every permutation of `0..n` in lexicographic order, identity first.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // Next lexicographic permutation.
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

/// `(j - i) mod d`: the sector `k` with `j = i ⊕ k`.
pub fn sector_of_basis_pair(d: usize, i: usize, j: usize) -> ParityIndex {
    debug_assert!(i < d && j < d);
    ParityIndex((j + d - i) % d)
}

/// Projector onto `Span{|i⟩|i⊕k⟩}` on a dit/anti-dit pair.
pub fn parity_projector(d: usize, k: usize) -> Result<ComplexOperator> {
    let k = ParityIndex::new(k, d)?.value();
    let mut p = ComplexOperator::zeros(d * d);
    for i in 0..d {
        let idx = i * d + (i + k) % d;
        p.set(idx, idx, tensor::ONE);
    }
    Ok(p)
}

/// Unitary permuting classical factors by `sigma` and anti-classical factors
/// by `tau` on the full `d^(m+n)` space.
pub fn embed_permutation(sig: &SystemSignature, perm: &FactorPermutation) -> Result<ComplexOperator> {
    perm.check(sig)?;
    tensor::permutation_operator(&sig.dims(), &perm.full())
}

/// Apply `embed_permutation` to a vector without forming the matrix.
pub fn permute_state(
    sig: &SystemSignature,
    perm: &FactorPermutation,
    v: &ComplexVector,
) -> Result<ComplexVector> {
    perm.check(sig)?;
    tensor::permute_vector(v, &sig.dims(), &perm.full())
}
