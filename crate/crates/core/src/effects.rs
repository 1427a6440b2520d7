//! Effects, POVMs, the Born rule, conditional states and the entanglement
//! witness on a bit/anti-bit pair.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{
    build_separable, cone_check, cross_block_defect, decomposition_operator, distinct_pairings,
    block_decomposition, sector_groups, verify_certificate, CheckMethod, DensityState,
    PureStateSpec, SeparableSpec, ValidationConfig, ValidityReport,
};
use crate::system::{FactorPermutation, ParityIndex, SystemSignature};
use crate::tensor::{embed_operator, outer, partial_trace, ComplexOperator};

const BOUND_TOL: f64 = 1e-10;

/// Probabilities at or below this leave no conditional state.
pub const PROB_FLOOR: f64 = 1e-12;

/// A measurement operator `0 ≤ E ≤ I`, optionally with a decomposition into
/// weighted projectors on valid pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    sig: SystemSignature,
    op: ComplexOperator,
    certificate: Option<Vec<(f64, PureStateSpec)>>,
}

impl Effect {
    /// Uncertified effect; only shape and hermiticity are checked here.
    pub fn new(sig: SystemSignature, op: ComplexOperator) -> Result<Self> {
        if op.dim() != sig.total_dim() {
            return Err(Error::Shape(format!(
                "operator of dimension {} is not an effect on {sig}",
                op.dim()
            )));
        }
        let defect = op.hermiticity_defect();
        if defect > BOUND_TOL {
            return Err(Error::Domain(format!("effect is not Hermitian (defect {defect:.3e})")));
        }
        Ok(Self {
            sig,
            op,
            certificate: None,
        })
    }

    /// `Σ λ_j |ψ_j⟩⟨ψ_j|` built from its certificate.
    pub fn from_certificate(parts: Vec<(f64, PureStateSpec)>) -> Result<Self> {
        if parts.iter().any(|(l, _)| !(*l >= 0.0)) {
            return Err(Error::Domain("certificate weights must be non-negative".into()));
        }
        let op = decomposition_operator(&parts)?;
        Ok(Self {
            sig: *parts[0].1.sig(),
            op,
            certificate: Some(parts),
        })
    }

    /// Projector onto a valid pure state.
    pub fn pure(spec: &PureStateSpec) -> Self {
        let v = crate::state::build_pure_state(spec);
        Self {
            sig: *spec.sig(),
            op: outer(&v, &v),
            certificate: Some(vec![(1.0, spec.clone())]),
        }
    }

    /// The unit effect, certified by the computational basis.
    pub fn unit(sig: SystemSignature) -> Self {
        let dims = sig.dims();
        let parts = (0..sig.total_dim())
            .map(|idx| {
                let digits = crate::tensor::unflatten(idx, &dims);
                (1.0, PureStateSpec::basis_state(sig, &digits).expect("basis strings are valid"))
            })
            .collect();
        Self {
            sig,
            op: ComplexOperator::identity(sig.total_dim()),
            certificate: Some(parts),
        }
    }

    pub fn sig(&self) -> &SystemSignature {
        &self.sig
    }

    pub fn op(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn certificate(&self) -> Option<&[(f64, PureStateSpec)]> {
        self.certificate.as_deref()
    }

    /// `I - E`. A certificate is attached when the result is block diagonal
    /// across the sectors of some pairing.
    pub fn complement(&self, cfg: &ValidationConfig) -> Result<Self> {
        let op = &ComplexOperator::identity(self.op.dim()) - &self.op;
        Ok(Self {
            sig: self.sig,
            certificate: block_certificate(&op, &self.sig, cfg)?,
            op,
        })
    }

    /// Replaces the certificate with one read off the sector blocks, if any.
    pub fn certified(mut self, cfg: &ValidationConfig) -> Result<Self> {
        if self.certificate.is_none() {
            self.certificate = block_certificate(&self.op, &self.sig, cfg)?;
        }
        Ok(self)
    }
}

fn block_certificate(
    op: &ComplexOperator,
    sig: &SystemSignature,
    cfg: &ValidationConfig,
) -> Result<Option<Vec<(f64, PureStateSpec)>>> {
    if op.min_eigenvalue() < -BOUND_TOL {
        return Ok(None);
    }
    for perm in distinct_pairings(sig) {
        let groups = sector_groups(sig, &perm.full());
        if cross_block_defect(op, &groups) < cfg.tol {
            return Ok(Some(block_decomposition(op, sig, &groups, cfg)?));
        }
    }
    Ok(None)
}

/// Membership test for the effects of the theory.
///
/// A certificate is verified when present. Otherwise the operator must lie
/// between 0 and I and in the cone spanned by valid pure states; this is
/// exact for signatures with a single pairing and NON-EXHAUSTIVE otherwise.
pub fn validate_effect(e: &Effect, cfg: &ValidationConfig) -> Result<ValidityReport> {
    let defect = e.op.hermiticity_defect();
    if defect > BOUND_TOL {
        return Err(Error::Domain(format!("effect is not Hermitian (defect {defect:.3e})")));
    }
    let (lo, hi) = (e.op.min_eigenvalue(), e.op.max_eigenvalue());
    if lo < -BOUND_TOL || hi > 1.0 + BOUND_TOL {
        return Ok(ValidityReport::violation(
            CheckMethod::Exhaustive,
            (-lo).max(hi - 1.0),
            format!("spectrum [{lo:.3e}, {hi:.3e}] leaves [0, 1]"),
        ));
    }
    match &e.certificate {
        Some(parts) => verify_certificate(&e.op, &e.sig, parts, cfg, false),
        None => cone_check(&e.op, &e.sig, cfg),
    }
}

/// Effects on one signature that sum to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::Domain("a POVM needs at least one effect".into()));
        };
        let sig = first.sig;
        let mut total = ComplexOperator::zeros(sig.total_dim());
        for e in &effects {
            if e.sig != sig {
                return Err(Error::Domain("POVM effects act on different systems".into()));
            }
            total = &total + &e.op;
        }
        let err = total.max_abs_diff(&ComplexOperator::identity(sig.total_dim()));
        if err > BOUND_TOL {
            return Err(Error::Domain(format!(
                "effects sum to the identity only up to {err:.3e}"
            )));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn sig(&self) -> &SystemSignature {
        &self.effects[0].sig
    }
}

/// Checks every effect; returns the first failing report or the last one.
pub fn validate_povm(povm: &Povm, cfg: &ValidationConfig) -> Result<ValidityReport> {
    let mut last = None;
    for e in &povm.effects {
        let report = validate_effect(e, cfg)?;
        if !report.valid {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("a POVM is never empty"))
}

/// `p_i = Tr(P_i ρ)`.
pub fn born_probabilities(povm: &Povm, rho: &DensityState) -> Result<Vec<f64>> {
    if povm.sig() != rho.sig() {
        return Err(Error::Domain(format!(
            "POVM on {} applied to a state of {}",
            povm.sig(),
            rho.sig()
        )));
    }
    Ok(povm
        .effects
        .iter()
        .map(|e| e.op.trace_product(rho.matrix()).re)
        .collect())
}

/// Outcome of measuring an effect on part of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState {
    pub prob: f64,
    /// Normalized state of the unmeasured factors; absent when the outcome
    /// has probability at most [`PROB_FLOOR`] or nothing is left unmeasured.
    pub post: Option<DensityState>,
}

/// `targets[j]` is the position in `rho` of the effect's factor `j`; the
/// effect's classical factors must land on classical positions.
pub(crate) fn check_targets(sig: &SystemSignature, sub: &SystemSignature, targets: &[usize]) -> Result<()> {
    let mut seen = vec![false; sig.num_factors()];
    for &t in targets {
        if t >= sig.num_factors() || seen[t] {
            return Err(Error::Domain(format!(
                "{targets:?} is not a set of distinct factors of {sig}"
            )));
        }
        seen[t] = true;
    }
    if targets.len() != sub.num_factors() || sub.local_dim() != sig.local_dim() {
        return Err(Error::Domain(format!("an effect on {sub} cannot act on factors {targets:?}")));
    }
    for (j, &t) in targets.iter().enumerate() {
        if sub.kind_at(j).is_classical() != sig.kind_at(t).is_classical() {
            return Err(Error::Domain(format!(
                "factor {j} of {sub} and position {t} of {sig} differ in kind"
            )));
        }
    }
    Ok(())
}

/// Probability of `e` on the factors `targets` and the normalized state left
/// on the remaining factors.
pub fn conditional_state(rho: &DensityState, e: &Effect, targets: &[usize]) -> Result<ConditionalState> {
    let sig = rho.sig();
    check_targets(sig, &e.sig, targets)?;
    let dims = sig.dims();
    let applied = &embed_operator(&e.op, &dims, targets)? * rho.matrix();
    let prob = applied.trace().re;
    let rest: Vec<usize> = (0..sig.num_factors()).filter(|k| !targets.contains(k)).collect();
    if prob <= PROB_FLOOR || rest.is_empty() {
        return Ok(ConditionalState { prob, post: None });
    }
    let reduced = partial_trace(&applied, &dims, &rest)?;
    let hermitian = (&reduced + &reduced.adjoint()).scale(0.5 / prob);
    Ok(ConditionalState {
        prob,
        post: Some(DensityState::new(sig.restrict(&rest)?, hermitian)?),
    })
}

fn bit_pair() -> SystemSignature {
    SystemSignature::new(2, 1, 1).expect("(1,1) over bits")
}

/// `√p|0,k⟩ + √(1-p)|1,1⊕k⟩` as a spec.
pub fn witness_target(p: f64, parity: ParityIndex) -> Result<PureStateSpec> {
    check_witness_args(p, parity)?;
    PureStateSpec::new(
        bit_pair(),
        FactorPermutation::identity(1, 1),
        vec![Complex64::new(p.sqrt(), 0.0), Complex64::new((1.0 - p).sqrt(), 0.0)],
        vec![parity.value()],
        vec![],
    )
}

fn check_witness_args(p: f64, parity: ParityIndex) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("witness weight {p} is not in (0,1)")));
    }
    if parity.value() > 1 {
        return Err(Error::Domain(format!("parity {} is not a bit", parity.value())));
    }
    Ok(())
}

/// Two-outcome measurement `{P_yes, P_no}` with `P_yes` the projector on the
/// witness target state and `P_no = I - P_yes`.
pub fn witness_povm(p: f64, parity: ParityIndex) -> Result<Povm> {
    let target = witness_target(p, parity)?;
    let k = parity.value();
    let sig = bit_pair();
    let perp = PureStateSpec::new(
        sig,
        FactorPermutation::identity(1, 1),
        vec![Complex64::new((1.0 - p).sqrt(), 0.0), Complex64::new(-p.sqrt(), 0.0)],
        vec![k],
        vec![],
    )?;
    let no = Effect::from_certificate(vec![
        (1.0, perp),
        (1.0, PureStateSpec::basis_state(sig, &[0, (1 + k) % 2])?),
        (1.0, PureStateSpec::basis_state(sig, &[1, k % 2])?),
    ])?;
    Povm::new(vec![Effect::pure(&target), no])
}

/// Smallest `p(no)` over separable states of the bit/anti-bit pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub min_p_no: f64,
    pub argmin: SeparableSpec,
}

/// Sweeps `γ` over the simplex grid of step `grid_step` and minimizes the
/// probability of outcome "no" of the parity-0 witness.
pub fn worst_case_no_probability(p: f64, grid_step: f64) -> Result<WorstCase> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Domain(format!("grid step {grid_step} is not in (0, 0.1]")));
    }
    let povm = witness_povm(p, ParityIndex::new(0, 2)?)?;
    let no = povm.effects[1].op();
    let weights: Vec<f64> = (0..4).map(|i| no.get(i, i).re).collect();
    let steps = (1.0 / grid_step).round() as usize;
    let mut best = (f64::INFINITY, [0usize; 4]);
    for a in 0..=steps {
        for b in 0..=steps - a {
            for c in 0..=steps - a - b {
                let g = [a, b, c, steps - a - b - c];
                let value: f64 = g
                    .iter()
                    .zip(&weights)
                    .map(|(&gi, w)| gi as f64 / steps as f64 * w)
                    .sum();
                if value < best.0 {
                    best = (value, g);
                }
            }
        }
    }
    let gamma: Vec<f64> = best.1.iter().map(|&g| g as f64 / steps as f64).collect();
    let argmin = SeparableSpec::Diagonal(gamma);
    let sigma = build_separable(&argmin, &bit_pair())?;
    let min_p_no = born_probabilities(&povm, &sigma)?[1];
    Ok(WorstCase { min_p_no, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::build_pure_state;
    use crate::tensor::{projector, ComplexVector};

    fn cfg() -> ValidationConfig {
        ValidationConfig::default()
    }

    fn sig(d: usize, m: usize, n: usize) -> SystemSignature {
        SystemSignature::new(d, m, n).unwrap()
    }

    fn parity(k: usize) -> ParityIndex {
        ParityIndex::new(k, 2).unwrap()
    }

    #[test]
    fn effect_validity_examples() {
        let target = witness_target(0.3, parity(0)).unwrap();
        let yes = Effect::pure(&target);
        assert!(validate_effect(&yes, &cfg()).unwrap().valid);

        let povm = witness_povm(0.3, parity(0)).unwrap();
        let report = validate_effect(&povm.effects()[1], &cfg()).unwrap();
        assert!(report.valid);
        assert_eq!(report.method, CheckMethod::Certificate);

        let mut cross = ComplexOperator::zeros(4);
        cross.set(0, 1, Complex64::new(1.0, 0.0));
        cross.set(1, 0, Complex64::new(1.0, 0.0));
        let e = Effect::new(sig(2, 1, 1), cross).unwrap();
        assert!(!validate_effect(&e, &cfg()).unwrap().valid);

        let half = ComplexOperator::from_real_rows(
            4,
            &[0.5, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.5],
        );
        let e = Effect::new(sig(2, 1, 1), half).unwrap();
        let report = validate_effect(&e, &cfg()).unwrap();
        assert!(report.valid);
        assert_eq!(report.method, CheckMethod::Exhaustive);
    }

    #[test]
    fn non_hermitian_effect_is_a_domain_error() {
        let mut op = ComplexOperator::zeros(2);
        op.set(0, 1, Complex64::new(0.5, 0.0));
        assert!(matches!(Effect::new(sig(2, 1, 0), op), Err(Error::Domain(_))));
    }

    #[test]
    fn born_examples() {
        let s = sig(2, 1, 0);
        let povm = Povm::new(vec![
            Effect::pure(&PureStateSpec::basis_state(s, &[0]).unwrap()),
            Effect::pure(&PureStateSpec::basis_state(s, &[1]).unwrap()),
        ])
        .unwrap();
        let rho = DensityState::classical(s, &[0.3, 0.7]).unwrap();
        let p = born_probabilities(&povm, &rho).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12);

        let w = witness_povm(0.3, parity(0)).unwrap();
        let psi = DensityState::from_spec(&witness_target(0.3, parity(0)).unwrap());
        let p = born_probabilities(&w, &psi).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);

        let sep = build_separable(&SeparableSpec::Diagonal(vec![1.0, 0.0, 0.0, 0.0]), &sig(2, 1, 1)).unwrap();
        let p = born_probabilities(&w, &sep).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12);

        assert!(born_probabilities(&w, &rho).is_err());
    }

    #[test]
    fn witness_povm_shapes() {
        let w = witness_povm(0.5, parity(0)).unwrap();
        let phi = ComplexVector::from_real(&[1.0, 0.0, 0.0, 1.0]);
        assert!(w.effects()[0].op().max_abs_diff(&projector(&phi).unwrap()) < 1e-12);
        let odd = witness_povm(0.4, parity(1)).unwrap();
        for e in odd.effects() {
            assert!(validate_effect(e, &cfg()).unwrap().valid);
        }
        assert!(witness_povm(0.0, parity(0)).is_err());
        assert!(witness_povm(1.0, parity(0)).is_err());
    }

    #[test]
    fn worst_case_examples() {
        let w = worst_case_no_probability(0.5, 0.01).unwrap();
        assert!((w.min_p_no - 0.5).abs() < 1e-9);
        let w = worst_case_no_probability(0.1, 0.01).unwrap();
        assert!((w.min_p_no - 0.1).abs() < 1e-9);
        let w = worst_case_no_probability(0.9, 0.01).unwrap();
        assert!((w.min_p_no - 0.1).abs() < 1e-9);
        assert!(worst_case_no_probability(0.3, 0.2).is_err());
    }

    #[test]
    fn conditional_examples() {
        let s = sig(2, 1, 1);
        let phi = ComplexVector::from_real(&[1.0, 0.0, 0.0, 1.0]).normalized().unwrap();
        let rho = DensityState::from_pure(s, &phi).unwrap();
        let e0 = Effect::pure(&PureStateSpec::basis_state(sig(2, 1, 0), &[0]).unwrap());
        let out = conditional_state(&rho, &e0, &[0]).unwrap();
        assert!((out.prob - 0.5).abs() < 1e-12);
        let post = out.post.unwrap();
        assert_eq!(*post.sig(), sig(2, 0, 1));
        assert!(post.matrix().max_abs_diff(&ComplexOperator::diagonal(&[1.0, 0.0])) < 1e-12);

        let unit = Effect::unit(sig(2, 0, 1));
        let out = conditional_state(&rho, &unit, &[1]).unwrap();
        assert!((out.prob - 1.0).abs() < 1e-12);
        assert!(out.post.unwrap().matrix().max_abs_diff(&ComplexOperator::diagonal(&[0.5, 0.5])) < 1e-12);

        let e1 = Effect::pure(&PureStateSpec::basis_state(sig(2, 1, 0), &[1]).unwrap());
        let zero = DensityState::classical(s, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = conditional_state(&zero, &e1, &[0]).unwrap();
        assert!(out.prob.abs() < 1e-12 && out.post.is_none());

        assert!(conditional_state(&rho, &e0, &[1]).is_err());
        assert!(conditional_state(&rho, &e0, &[2]).is_err());
    }

    #[test]
    fn conditioning_a_pair_of_entangled_pairs() {
        // Φ on (D1,A1) and Φ on (D2,A2), measured with ⟨Φ| on (D1,A1).
        let s = sig(2, 2, 2);
        let spec = PureStateSpec::new(
            s,
            FactorPermutation::identity(2, 2),
            vec![Complex64::new(0.5, 0.0); 4],
            vec![0, 0],
            vec![],
        )
        .unwrap();
        let rho = DensityState::from_spec(&spec);
        let phi_pair = witness_target(0.5, parity(0)).unwrap();
        let e = Effect::pure(&phi_pair);
        let out = conditional_state(&rho, &e, &[0, 2]).unwrap();
        assert!((out.prob - 1.0).abs() < 1e-12);
        let expected = DensityState::from_spec(&phi_pair);
        assert!(out.post.unwrap().matrix().max_abs_diff(expected.matrix()) < 1e-12);
        let v = build_pure_state(&phi_pair);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complement_is_certified() {
        let target = witness_target(0.3, parity(1)).unwrap();
        let c = Effect::pure(&target).complement(&cfg()).unwrap();
        assert!(c.certificate().is_some());
        let report = validate_effect(&c, &cfg()).unwrap();
        assert_eq!(report.method, CheckMethod::Certificate);
        assert!(report.valid);
    }
}
