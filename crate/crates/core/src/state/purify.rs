use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::{FactorPermutation, SystemSignature};

use super::{DensityState, PureStateSpec};

/// Free choices in a purification. Unset fields default to the identity
/// permutation, all-zero parities/tail and zero phases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PurifyOptions {
    /// Permutation of the `n` anti-dits (destination form).
    pub anti_perm: Option<Vec<usize>>,
    /// Parity of each of the `m` dit/anti-dit pairs.
    pub parity: Option<Vec<usize>>,
    /// Digits of the `n - m` unpaired anti-dits.
    pub tail: Option<Vec<usize>>,
    /// One phase per classical basis string, indexed like the diagonal of `rho`.
    pub phases: Option<Vec<f64>>,
}

/// Pure state of the (m,n)-composite whose marginal on the dits is the
/// classical state `rho` of an (m,0)-composite.
pub fn purify_classical_state(rho: &DensityState, n: usize, opts: &PurifyOptions) -> Result<PureStateSpec> {
    let sig = rho.sig();
    let (d, m) = (sig.local_dim(), sig.classical());
    if sig.anticlassical() != 0 {
        return Err(Error::Domain(format!("purification expects an (m,0) state, got {sig}")));
    }
    if n < m {
        return Err(Error::Domain(format!("need n >= m anti-dits, got n={n} < m={m}")));
    }
    let off = rho.matrix().off_diagonal_defect();
    if off > 1e-10 {
        return Err(Error::NotClassical(format!("off-diagonal entry of size {off:.3e}")));
    }
    let dim = sig.total_dim();
    let phases = opts.phases.clone().unwrap_or_else(|| vec![0.0; dim]);
    if phases.len() != dim {
        return Err(Error::Domain(format!("{} phases for {dim} basis strings", phases.len())));
    }
    let probs: Vec<f64> = (0..dim).map(|i| rho.matrix().get(i, i).re.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    let coeffs: Vec<Complex64> = probs
        .iter()
        .zip(&phases)
        .map(|(&p, &theta)| Complex64::from_polar((p / total).sqrt(), theta))
        .collect();
    let target = SystemSignature::new(d, m, n)?;
    let tau = opts.anti_perm.clone().unwrap_or_else(|| (0..n).collect());
    let perm = FactorPermutation::new((0..m).collect(), tau)?;
    let parity = opts.parity.clone().unwrap_or_else(|| vec![0; m]);
    let tail = opts.tail.clone().unwrap_or_else(|| vec![0; n - m]);
    PureStateSpec::new(target, perm, coeffs, parity, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{build_pure_state, marginal_state};
    use crate::tensor::{flatten, ComplexOperator, ComplexVector};

    fn sig(d: usize, m: usize, n: usize) -> SystemSignature {
        SystemSignature::new(d, m, n).unwrap()
    }

    #[test]
    fn bit_purification_is_the_canonical_entangled_pair() {
        let p: f64 = 0.3;
        let rho = DensityState::classical(sig(2, 1, 0), &[p, 1.0 - p]).unwrap();
        let spec = purify_classical_state(&rho, 1, &PurifyOptions::default()).unwrap();
        let v = build_pure_state(&spec);
        let expected = ComplexVector::from_real(&[p.sqrt(), 0.0, 0.0, (1.0 - p).sqrt()]);
        assert!(v.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn pure_input_gives_product() {
        let rho = DensityState::classical(sig(2, 1, 0), &[1.0, 0.0]).unwrap();
        let opts = PurifyOptions {
            parity: Some(vec![1]),
            ..Default::default()
        };
        let v = build_pure_state(&purify_classical_state(&rho, 1, &opts).unwrap());
        assert_eq!(v, ComplexVector::basis(4, 1));
    }

    #[test]
    fn qutrit_purification_with_tail() {
        let rho = DensityState::classical(sig(3, 1, 0), &[1.0 / 3.0; 3]).unwrap();
        let s = 1;
        let opts = PurifyOptions {
            parity: Some(vec![s]),
            tail: Some(vec![2]),
            ..Default::default()
        };
        let spec = purify_classical_state(&rho, 2, &opts).unwrap();
        let v = build_pure_state(&spec);
        let mut expected = ComplexVector::zeros(27);
        for j in 0..3 {
            expected.entries_mut()[flatten(&[j, (j + s) % 3, 2], &[3, 3, 3])] =
                Complex64::new((1.0f64 / 3.0).sqrt(), 0.0);
        }
        assert!(v.max_abs_diff(&expected) < 1e-15);
        let pure = DensityState::from_spec(&spec);
        let m = marginal_state(&pure, &[0]).unwrap();
        assert!(m.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn errors() {
        let rho = DensityState::classical(sig(2, 2, 0), &[0.25; 4]).unwrap();
        assert!(matches!(
            purify_classical_state(&rho, 1, &PurifyOptions::default()),
            Err(Error::Domain(_))
        ));
        let h = 0.5f64.sqrt();
        let coherent = DensityState::from_pure(sig(2, 1, 0), &ComplexVector::from_real(&[h, h])).unwrap();
        assert!(matches!(
            purify_classical_state(&coherent, 1, &PurifyOptions::default()),
            Err(Error::NotClassical(_))
        ));
        let pair = DensityState::new(sig(2, 1, 1), ComplexOperator::diagonal(&[0.25; 4])).unwrap();
        assert!(purify_classical_state(&pair, 1, &PurifyOptions::default()).is_err());
    }
}
