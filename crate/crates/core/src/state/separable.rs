use crate::error::{Error, Result};
use crate::system::SystemSignature;
use crate::tensor::{ComplexOperator, ComplexVector, TensorProduct};

use super::mixed::check_distribution;
use super::{marginal_state, validate_pure_state, DensityState, ValidationConfig};

/// Separable state of a classical/anti-classical composite.
#[derive(Debug, Clone, PartialEq)]
pub enum SeparableSpec {
    /// `Σ γ_ij |i⟩⟨i| ⊗ |j⟩⟨j|` on a (1,1) pair; `gamma[i * d + j]`.
    Diagonal(Vec<f64>),
    /// `Σ w |x⟩⟨x| ⊗ σ` with `x` a classical basis string and `σ` a state of
    /// the anti-classical factors.
    General(Vec<(f64, Vec<usize>, DensityState)>),
}

pub fn build_separable(spec: &SeparableSpec, sig: &SystemSignature) -> Result<DensityState> {
    match spec {
        SeparableSpec::Diagonal(gamma) => {
            if sig.classical() != 1 || sig.anticlassical() != 1 {
                return Err(Error::Domain(format!("diagonal separable form needs (1,1), got {sig}")));
            }
            DensityState::classical(*sig, gamma)
        }
        SeparableSpec::General(parts) => {
            let weights: Vec<f64> = parts.iter().map(|(w, _, _)| *w).collect();
            check_distribution(&weights)?;
            let d = sig.local_dim();
            let classical_dim = d.pow(sig.classical() as u32);
            let mut acc = ComplexOperator::zeros(sig.total_dim());
            for (w, x, sigma) in parts {
                let anti_sig = SystemSignature::new(d, 0, sig.anticlassical())?;
                if *sigma.sig() != anti_sig || x.len() != sig.classical() || x.iter().any(|&v| v >= d) {
                    return Err(Error::Domain(format!(
                        "component ({x:?}, {}) does not fit {sig}",
                        sigma.sig()
                    )));
                }
                let idx = crate::tensor::flatten(x, &vec![d; x.len()]);
                let ket = ComplexVector::basis(classical_dim, idx);
                let proj = crate::tensor::outer(&ket, &ket);
                acc = &acc + &proj.tensor(sigma.matrix()).scale(*w);
            }
            Ok(DensityState::new_unchecked(*sig, acc))
        }
    }
}

/// A valid (1,1) pure state is entangled iff its dit marginal has rank > 1.
pub fn is_entangled(v: &ComplexVector, sig: &SystemSignature) -> Result<bool> {
    if sig.classical() != 1 || sig.anticlassical() != 1 {
        return Err(Error::Domain(format!("entanglement test is for (1,1) pairs, got {sig}")));
    }
    let report = validate_pure_state(v, sig, &ValidationConfig::default())?;
    if !report.valid {
        return Err(Error::Validity(format!("not a pure state of the theory: {report}")));
    }
    let rho = DensityState::from_pure(*sig, v)?;
    let marginal = marginal_state(&rho, &[0])?;
    let rank = marginal.spectrum().iter().filter(|&&x| x > 1e-10).count();
    Ok(rank > 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{validate_mixed_state, CheckMethod};

    fn pair() -> SystemSignature {
        SystemSignature::new(2, 1, 1).unwrap()
    }

    #[test]
    fn diagonal_examples() {
        let s = pair();
        let r = build_separable(&SeparableSpec::Diagonal(vec![0.5, 0.0, 0.0, 0.5]), &s).unwrap();
        assert_eq!(r.matrix(), &ComplexOperator::diagonal(&[0.5, 0.0, 0.0, 0.5]));
        let r = build_separable(&SeparableSpec::Diagonal(vec![1.0, 0.0, 0.0, 0.0]), &s).unwrap();
        assert_eq!(r.matrix(), &ComplexOperator::diagonal(&[1.0, 0.0, 0.0, 0.0]));
        let r = build_separable(&SeparableSpec::Diagonal(vec![0.25; 4]), &s).unwrap();
        assert_eq!(r.matrix(), &ComplexOperator::identity(4).scale(0.25));
        let report = validate_mixed_state(&r, None, &ValidationConfig::default()).unwrap();
        assert!(report.valid && report.method == CheckMethod::Exhaustive);
        assert!(matches!(
            build_separable(&SeparableSpec::Diagonal(vec![0.5, 0.5, 0.5, 0.0]), &s),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn general_form_matches_diagonal_form() {
        let s = pair();
        let rho0 = DensityState::classical(SystemSignature::new(2, 0, 1).unwrap(), &[0.2, 0.8]).unwrap();
        let rho1 = DensityState::classical(SystemSignature::new(2, 0, 1).unwrap(), &[1.0, 0.0]).unwrap();
        let q = 0.25;
        let general =
            build_separable(&SeparableSpec::General(vec![(q, vec![0], rho0), (1.0 - q, vec![1], rho1)]), &s).unwrap();
        let diag = build_separable(&SeparableSpec::Diagonal(vec![q * 0.2, q * 0.8, 1.0 - q, 0.0]), &s).unwrap();
        assert!(general.matrix().max_abs_diff(diag.matrix()) < 1e-15);
    }

    #[test]
    fn entanglement_examples() {
        let s = pair();
        let h = 0.5f64.sqrt();
        assert!(is_entangled(&ComplexVector::from_real(&[h, 0.0, 0.0, h]), &s).unwrap());
        assert!(!is_entangled(&ComplexVector::basis(4, 1), &s).unwrap());
        let skewed = ComplexVector::from_real(&[0.99f64.sqrt(), 0.0, 0.0, 0.01f64.sqrt()]);
        assert!(is_entangled(&skewed, &s).unwrap());
        let invalid = ComplexVector::from_real(&[h, h, 0.0, 0.0]);
        assert!(matches!(is_entangled(&invalid, &s), Err(Error::Validity(_))));
    }
}
