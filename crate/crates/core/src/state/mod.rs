//! States of (m,n)-composites: construction and validation of pure and mixed
//! states, marginals, purification, entanglement and the linear span of the
//! state space.

mod mixed;
mod pure;
mod purify;
mod sample;
mod separable;
mod span;

use std::fmt;

use crate::error::{Error, Result};
use crate::system::SystemSignature;

pub use mixed::{decomposition_operator, marginal_state, validate_mixed_state, DensityState};
pub use pure::{build_pure_state, spec_from_vector, validate_pure_state, PureStateSpec};
pub(crate) use mixed::{block_decomposition, cone_check, cross_block_defect, sector_groups, verify_certificate};
pub(crate) use pure::{distinct_pairings, sector_basis, sector_templates};
pub use purify::{purify_classical_state, PurifyOptions};
pub use sample::{random_density_state, random_pure_spec};
pub use separable::{build_separable, is_entangled, SeparableSpec};
pub use span::{span_dimensions, SpanDimensions};

/// Tolerances and search limits for membership checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    /// Max-abs-entry / residual-norm tolerance.
    pub tol: f64,
    /// Largest m and n for the exhaustive permutation search.
    pub max_per_kind: usize,
    /// Largest local dimension for the exhaustive search.
    pub max_local_dim: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_per_kind: 3,
            max_local_dim: 3,
        }
    }
}

impl ValidationConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// Signatures with at most one factor of each kind have no permutations
    /// to search and are always accepted.
    pub(crate) fn check_search_bound(&self, sig: &SystemSignature) -> Result<()> {
        let trivial = sig.classical() <= 1 && sig.anticlassical() <= 1;
        if trivial {
            return Ok(());
        }
        if sig.classical() > self.max_per_kind
            || sig.anticlassical() > self.max_per_kind
            || sig.local_dim() > self.max_local_dim
        {
            return Err(Error::Domain(format!(
                "{sig} exceeds the exhaustive-search bound (m,n <= {}, d <= {}); supply a certificate",
                self.max_per_kind, self.max_local_dim
            )));
        }
        Ok(())
    }
}

/// How a validity verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMethod {
    /// Exact decision (exhaustive search or a closed-form criterion).
    Exhaustive,
    /// A caller-supplied decomposition was verified.
    Certificate,
    /// Sound but incomplete test; a negative answer is NON-EXHAUSTIVE.
    Heuristic,
    /// Checked on random samples only.
    Sampled,
}

/// Evidence attached to a [`ValidityReport`].
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    None,
    Pure(PureStateSpec),
    Decomposition(Vec<(f64, PureStateSpec)>),
    Violation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub valid: bool,
    pub method: CheckMethod,
    pub witness: Witness,
    pub residual: f64,
}

impl ValidityReport {
    pub(crate) fn violation(method: CheckMethod, residual: f64, what: impl Into<String>) -> Self {
        Self {
            valid: false,
            method,
            witness: Witness::Violation(what.into()),
            residual,
        }
    }

    /// True when a negative verdict may be a false negative.
    pub fn non_exhaustive(&self) -> bool {
        !self.valid && matches!(self.method, CheckMethod::Heuristic | CheckMethod::Sampled)
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.valid { "valid" } else { "INVALID" };
        write!(f, "{verdict} ({:?}, residual {:.3e})", self.method, self.residual)?;
        if self.non_exhaustive() {
            write!(f, " NON-EXHAUSTIVE")?;
        }
        if let Witness::Violation(msg) = &self.witness {
            write!(f, ": {msg}")?;
        }
        Ok(())
    }
}
