use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::system::{FactorPermutation, SystemSignature};

use super::{DensityState, PureStateSpec};

/// Random pure-state spec: uniform permutations, parities and tail, complex
/// Gaussian coefficients.
pub fn random_pure_spec<R: Rng + ?Sized>(sig: &SystemSignature, rng: &mut R) -> PureStateSpec {
    let d = sig.local_dim();
    let k = sig.paired();
    let mut sigma: Vec<usize> = (0..sig.classical()).collect();
    let mut tau: Vec<usize> = (0..sig.anticlassical()).collect();
    sigma.shuffle(rng);
    tau.shuffle(rng);
    let parity: Vec<usize> = (0..k).map(|_| rng.random_range(0..d)).collect();
    let tail: Vec<usize> = (0..sig.classical().abs_diff(sig.anticlassical()))
        .map(|_| rng.random_range(0..d))
        .collect();
    let mut coeffs: Vec<Complex64> = (0..d.pow(k as u32))
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|c| *c /= norm);
    PureStateSpec::new(*sig, FactorPermutation { sigma, tau }, coeffs, parity, tail)
        .expect("sampled spec satisfies its invariants")
}

/// Mixture of `rank` random pure states with uniformly drawn weights.
pub fn random_density_state<R: Rng + ?Sized>(sig: &SystemSignature, rank: usize, rng: &mut R) -> DensityState {
    let raw: Vec<f64> = (0..rank.max(1)).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let parts: Vec<(f64, DensityState)> = raw
        .iter()
        .map(|w| (w / total, DensityState::from_spec(&random_pure_spec(sig, rng))))
        .collect();
    DensityState::mixture(&parts).expect("weights form a distribution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{build_pure_state, validate_pure_state, ValidationConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_specs_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (d, m, n) in [(2, 1, 1), (2, 2, 3), (3, 2, 1), (3, 3, 3), (2, 0, 3)] {
            let sig = SystemSignature::new(d, m, n).unwrap();
            for _ in 0..20 {
                let v = build_pure_state(&random_pure_spec(&sig, &mut rng));
                assert!(validate_pure_state(&v, &sig, &ValidationConfig::default()).unwrap().valid);
            }
        }
    }
}
