use crate::error::{Error, Result};
use crate::system::SystemSignature;
use crate::tensor::{partial_trace, projector, unflatten, ComplexOperator, ComplexVector};

use super::pure::{sector_key_for, spec_from_vector};
use super::{
    build_pure_state, distinct_pairings, CheckMethod, PureStateSpec, ValidationConfig,
    ValidityReport, Witness,
};

/// Eigenvalues down to this are treated as zero.
const PSD_TOL: f64 = 1e-10;

/// A positive, unit-trace operator on the space of an (m,n)-composite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    sig: SystemSignature,
    matrix: ComplexOperator,
}

impl DensityState {
    pub fn new(sig: SystemSignature, matrix: ComplexOperator) -> Result<Self> {
        if matrix.dim() != sig.total_dim() {
            return Err(Error::Shape(format!(
                "matrix of dimension {} is not an operator on {sig}",
                matrix.dim()
            )));
        }
        let herm = matrix.hermiticity_defect();
        if herm > PSD_TOL {
            return Err(Error::DensityMatrix(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > PSD_TOL || tr.im.abs() > PSD_TOL {
            return Err(Error::DensityMatrix(format!("trace is {tr}")));
        }
        let min = matrix.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::DensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { sig, matrix })
    }

    /// Skips the eigenvalue check; for operators positive by construction.
    pub(crate) fn new_unchecked(sig: SystemSignature, matrix: ComplexOperator) -> Self {
        debug_assert_eq!(matrix.dim(), sig.total_dim());
        Self { sig, matrix }
    }

    pub fn from_pure(sig: SystemSignature, v: &ComplexVector) -> Result<Self> {
        if v.dim() != sig.total_dim() {
            return Err(Error::Shape(format!(
                "vector of dimension {} is not a state of {sig}",
                v.dim()
            )));
        }
        Ok(Self::new_unchecked(sig, projector(v)?))
    }

    pub fn from_spec(spec: &PureStateSpec) -> Self {
        let v = build_pure_state(spec);
        Self::new_unchecked(*spec.sig(), crate::tensor::outer(&v, &v))
    }

    /// Diagonal state with the given computational-basis weights.
    pub fn classical(sig: SystemSignature, probs: &[f64]) -> Result<Self> {
        if probs.len() != sig.total_dim() {
            return Err(Error::Shape(format!(
                "{} weights for a space of dimension {}",
                probs.len(),
                sig.total_dim()
            )));
        }
        check_distribution(probs)?;
        Ok(Self::new_unchecked(sig, ComplexOperator::diagonal(probs)))
    }

    /// Convex combination of states on one signature.
    pub fn mixture(parts: &[(f64, DensityState)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::Domain("empty mixture".into()));
        };
        let weights: Vec<f64> = parts.iter().map(|(w, _)| *w).collect();
        check_distribution(&weights)?;
        let mut acc = ComplexOperator::zeros(first.matrix.dim());
        for (w, s) in parts {
            if s.sig != first.sig {
                return Err(Error::Domain("mixture of states on different systems".into()));
            }
            acc = &acc + &s.matrix.scale(*w);
        }
        Ok(Self::new_unchecked(first.sig, acc))
    }

    pub fn sig(&self) -> &SystemSignature {
        &self.sig
    }

    pub fn matrix(&self) -> &ComplexOperator {
        &self.matrix
    }

    /// Eigenvalues, with values in `[-1e-10, 0)` clipped to zero.
    pub fn spectrum(&self) -> Vec<f64> {
        let (vals, _) = self.matrix.hermitian_eigen();
        vals.into_iter()
            .map(|x| if x < 0.0 && x >= -PSD_TOL { 0.0 } else { x })
            .collect()
    }
}

pub(crate) fn check_distribution(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|&w| !(w >= -PSD_TOL)) {
        return Err(Error::Domain(format!("negative weight in {weights:?}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// `Σ_j q_j |ψ_j⟩⟨ψ_j|` for a decomposition into pure-state specs.
pub fn decomposition_operator(parts: &[(f64, PureStateSpec)]) -> Result<ComplexOperator> {
    let Some((_, first)) = parts.first() else {
        return Err(Error::Domain("empty decomposition".into()));
    };
    let dim = first.sig().total_dim();
    let mut acc = ComplexOperator::zeros(dim);
    for (q, spec) in parts {
        if spec.sig() != first.sig() {
            return Err(Error::Domain("decomposition mixes signatures".into()));
        }
        let v = build_pure_state(spec);
        acc = &acc + &crate::tensor::outer(&v, &v).scale(*q);
    }
    Ok(acc)
}

/// Membership test for the mixed states of the theory.
///
/// Exact whenever the signature admits a single dit/anti-dit pairing (purely
/// classical or anti-classical systems, the (1,1) pair): valid iff the matrix
/// is block diagonal across the sectors of that pairing. Otherwise a supplied
/// certificate is verified, or sound heuristics are tried and a failure is
/// reported as NON-EXHAUSTIVE.
pub fn validate_mixed_state(
    rho: &DensityState,
    certificate: Option<&[(f64, PureStateSpec)]>,
    cfg: &ValidationConfig,
) -> Result<ValidityReport> {
    let tr = rho.matrix.trace();
    if (tr.re - 1.0).abs() > cfg.tol.max(PSD_TOL) {
        return Err(Error::DensityMatrix(format!("trace is {tr}")));
    }
    if let Some(parts) = certificate {
        return verify_certificate(rho.matrix(), rho.sig(), parts, cfg, true);
    }
    cone_check(&rho.matrix, &rho.sig, cfg)
}

/// Membership of a positive operator in the cone generated by valid pure
/// states, without any trace condition.
pub(crate) fn cone_check(
    op: &ComplexOperator,
    sig: &SystemSignature,
    cfg: &ValidationConfig,
) -> Result<ValidityReport> {
    cfg.check_search_bound(sig)?;
    let pairings = distinct_pairings(sig);
    let exact = pairings.len() == 1;
    let mut best_defect = f64::INFINITY;
    for perm in &pairings {
        let groups = sector_groups(sig, &perm.full());
        let defect = cross_block_defect(op, &groups);
        best_defect = best_defect.min(defect);
        if defect < cfg.tol {
            let parts = block_decomposition(op, sig, &groups, cfg)?;
            return Ok(ValidityReport {
                valid: true,
                method: if exact { CheckMethod::Exhaustive } else { CheckMethod::Heuristic },
                witness: Witness::Decomposition(parts),
                residual: defect,
            });
        }
    }
    if exact {
        return Ok(ValidityReport::violation(
            CheckMethod::Exhaustive,
            best_defect,
            format!("coherence between parity sectors of size {best_defect:.3e}"),
        ));
    }
    // Eigenvectors of a valid mixture need not be valid, so this is one-sided.
    let (vals, vecs) = op.hermitian_eigen();
    let mut parts = Vec::new();
    for (lambda, v) in vals.iter().zip(&vecs) {
        if *lambda <= cfg.tol {
            continue;
        }
        match spec_from_vector(v, sig, cfg) {
            Ok(spec) => parts.push((*lambda, spec)),
            Err(_) => {
                return Ok(ValidityReport::violation(
                    CheckMethod::Heuristic,
                    best_defect,
                    "no sector-block structure and an eigenvector is not a valid pure state",
                ))
            }
        }
    }
    Ok(ValidityReport {
        valid: true,
        method: CheckMethod::Heuristic,
        witness: Witness::Decomposition(parts),
        residual: 0.0,
    })
}

pub(crate) fn verify_certificate(
    op: &ComplexOperator,
    sig: &SystemSignature,
    parts: &[(f64, PureStateSpec)],
    cfg: &ValidationConfig,
    normalized: bool,
) -> Result<ValidityReport> {
    if parts.iter().any(|(q, s)| *q < 0.0 || s.sig() != sig) {
        return Ok(ValidityReport::violation(
            CheckMethod::Certificate,
            f64::INFINITY,
            "certificate has negative weights or foreign signatures",
        ));
    }
    if normalized {
        let total: f64 = parts.iter().map(|(q, _)| q).sum();
        if (total - 1.0).abs() > cfg.tol {
            return Ok(ValidityReport::violation(
                CheckMethod::Certificate,
                (total - 1.0).abs(),
                format!("certificate weights sum to {total}"),
            ));
        }
    }
    let rebuilt = if parts.is_empty() {
        ComplexOperator::zeros(op.dim())
    } else {
        decomposition_operator(parts)?
    };
    let err = rebuilt.max_abs_diff(op);
    if err >= cfg.tol {
        return Ok(ValidityReport::violation(
            CheckMethod::Certificate,
            err,
            format!("certificate reconstruction error {err:.3e}"),
        ));
    }
    Ok(ValidityReport {
        valid: true,
        method: CheckMethod::Certificate,
        witness: Witness::Decomposition(parts.to_vec()),
        residual: err,
    })
}

/// Basis indices grouped by sector key under the pairing `full`.
pub(crate) fn sector_groups(sig: &SystemSignature, full: &[usize]) -> Vec<Vec<usize>> {
    let dims = sig.dims();
    let mut keys: Vec<Vec<usize>> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in 0..sig.total_dim() {
        let key = sector_key_for(sig, &unflatten(idx, &dims), full);
        match keys.iter().position(|k| *k == key) {
            Some(g) => groups[g].push(idx),
            None => {
                keys.push(key);
                groups.push(vec![idx]);
            }
        }
    }
    groups
}

pub(crate) fn cross_block_defect(op: &ComplexOperator, groups: &[Vec<usize>]) -> f64 {
    let mut label = vec![0; op.dim()];
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            label[i] = g;
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..op.dim() {
        for j in 0..op.dim() {
            if label[i] != label[j] {
                worst = worst.max(op.get(i, j).norm());
            }
        }
    }
    worst
}

/// Eigen-decompose every diagonal block; each eigenvector lies in one sector
/// and is therefore a valid pure state.
pub(crate) fn block_decomposition(
    op: &ComplexOperator,
    sig: &SystemSignature,
    groups: &[Vec<usize>],
    cfg: &ValidationConfig,
) -> Result<Vec<(f64, PureStateSpec)>> {
    let mut parts = Vec::new();
    for members in groups {
        let block = ComplexOperator::from_fn(members.len(), |a, b| op.get(members[a], members[b]));
        if block.max_abs() <= cfg.tol {
            continue;
        }
        let (vals, vecs) = block.hermitian_eigen();
        for (lambda, u) in vals.into_iter().zip(vecs) {
            if lambda <= cfg.tol {
                continue;
            }
            let mut full = ComplexVector::zeros(op.dim());
            for (a, &idx) in members.iter().enumerate() {
                full.entries_mut()[idx] = u.entries()[a];
            }
            parts.push((lambda, spec_from_vector(&full.normalized()?, sig, cfg)?));
        }
    }
    Ok(parts)
}

/// Partial trace onto the listed factor positions.
pub fn marginal_state(rho: &DensityState, keep: &[usize]) -> Result<DensityState> {
    if keep.is_empty() {
        return Err(Error::Domain("marginal needs at least one kept factor".into()));
    }
    let sub = rho.sig.restrict(keep)?;
    let reduced = partial_trace(&rho.matrix, &rho.sig.dims(), keep)?;
    Ok(DensityState::new_unchecked(sub, reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::FactorPermutation;
    use num_complex::Complex64;

    fn sig(d: usize, m: usize, n: usize) -> SystemSignature {
        SystemSignature::new(d, m, n).unwrap()
    }

    fn cfg() -> ValidationConfig {
        ValidationConfig::default()
    }

    #[test]
    fn density_state_rejects_bad_matrices() {
        let s = sig(2, 1, 0);
        assert!(matches!(
            DensityState::new(s, ComplexOperator::diagonal(&[0.5, 0.6])),
            Err(Error::DensityMatrix(_))
        ));
        assert!(matches!(
            DensityState::new(s, ComplexOperator::diagonal(&[1.5, -0.5])),
            Err(Error::DensityMatrix(_))
        ));
        let mut m = ComplexOperator::diagonal(&[0.5, 0.5]);
        m.set(0, 1, Complex64::new(0.1, 0.0));
        assert!(matches!(DensityState::new(s, m), Err(Error::DensityMatrix(_))));
    }

    #[test]
    fn sector_zero_mixture_is_valid() {
        let p: f64 = 0.3;
        let rho = DensityState::classical(sig(2, 1, 1), &[p, 0.0, 0.0, 1.0 - p]).unwrap();
        let r = validate_mixed_state(&rho, None, &cfg()).unwrap();
        assert!(r.valid && r.method == CheckMethod::Exhaustive);
    }

    #[test]
    fn cross_sector_coherence_is_invalid() {
        let mut m = ComplexOperator::diagonal(&[0.5, 0.5, 0.0, 0.0]);
        m.set(0, 1, Complex64::new(0.25, 0.0));
        m.set(1, 0, Complex64::new(0.25, 0.0));
        let rho = DensityState::new(sig(2, 1, 1), m).unwrap();
        let r = validate_mixed_state(&rho, None, &cfg()).unwrap();
        assert!(!r.valid);
        assert!(!r.non_exhaustive());
        assert!((r.residual - 0.25).abs() < 1e-15);
    }

    #[test]
    fn entangled_pure_state_is_valid_mixed_state() {
        let h = 0.5f64.sqrt();
        let rho = DensityState::from_pure(sig(2, 1, 1), &ComplexVector::from_real(&[h, 0.0, 0.0, h])).unwrap();
        let r = validate_mixed_state(&rho, None, &cfg()).unwrap();
        assert!(r.valid);
        let Witness::Decomposition(parts) = r.witness else { panic!() };
        assert_eq!(parts.len(), 1);
        assert!((parts[0].0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_coherence_is_invalid() {
        let h = 0.5f64.sqrt();
        let rho = DensityState::from_pure(sig(2, 1, 0), &ComplexVector::from_real(&[h, h])).unwrap();
        assert!(!validate_mixed_state(&rho, None, &cfg()).unwrap().valid);
    }

    #[test]
    fn crossed_pairing_mixture_needs_certificate_or_heuristic() {
        // Mixture of a straight-paired and a cross-paired Bell product on (2,2).
        let s = sig(2, 2, 2);
        let h = 0.5f64.sqrt();
        let straight = PureStateSpec::new(
            s,
            FactorPermutation::identity(2, 2),
            vec![Complex64::new(h, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(h, 0.0)],
            vec![0, 0],
            vec![],
        )
        .unwrap();
        let crossed = PureStateSpec::new(
            s,
            FactorPermutation::new(vec![0, 1], vec![1, 0]).unwrap(),
            vec![Complex64::new(0.0, 0.0), Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(0.0, 0.0)],
            vec![1, 0],
            vec![],
        )
        .unwrap();
        let cert = vec![(0.4, straight), (0.6, crossed)];
        let rho = DensityState::new(s, decomposition_operator(&cert).unwrap()).unwrap();
        let r = validate_mixed_state(&rho, Some(&cert), &cfg()).unwrap();
        assert!(r.valid && r.method == CheckMethod::Certificate);
        let bad = vec![(0.5, cert[0].1.clone()), (0.5, cert[1].1.clone())];
        assert!(!validate_mixed_state(&rho, Some(&bad), &cfg()).unwrap().valid);
        // Without a certificate the heuristics still succeed: the eigenvectors
        // have distinct eigenvalues and coincide with the two components.
        let r = validate_mixed_state(&rho, None, &cfg()).unwrap();
        assert!(r.valid, "{r}");
    }

    #[test]
    fn marginal_examples() {
        let p: f64 = 0.3;
        let psi = ComplexVector::from_real(&[p.sqrt(), 0.0, 0.0, (1.0 - p).sqrt()]);
        let rho = DensityState::from_pure(sig(2, 1, 1), &psi).unwrap();
        let m = marginal_state(&rho, &[0]).unwrap();
        assert_eq!(*m.sig(), sig(2, 1, 0));
        assert!(m.matrix().max_abs_diff(&ComplexOperator::diagonal(&[p, 1.0 - p])) < 1e-15);
        assert!(validate_mixed_state(&m, None, &cfg()).unwrap().valid);

        let third = (1.0f64 / 3.0).sqrt();
        let mut v = ComplexVector::zeros(9);
        for i in 0..3 {
            v.entries_mut()[i * 3 + i] = Complex64::new(third, 0.0);
        }
        let rho = DensityState::from_pure(sig(3, 1, 1), &v).unwrap();
        let m = marginal_state(&rho, &[0]).unwrap();
        assert!(m.matrix().max_abs_diff(&ComplexOperator::diagonal(&[1.0 / 3.0; 3])) < 1e-15);

        let all = marginal_state(&rho, &[0, 1]).unwrap();
        assert_eq!(all, rho);
        assert!(matches!(marginal_state(&rho, &[]), Err(Error::Domain(_))));
    }
}
