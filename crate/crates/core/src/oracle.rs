//! Brute-force reference computations kept apart from the engine's kernels:
//! a seeded state sampler, a direct-index conditional-state contraction and
//! an exhaustive separable-state grid.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::effects::{conditional_state, Effect};
use crate::error::{Error, Result};
use crate::state::{validate_pure_state, DensityState, PureStateSpec, ValidationConfig};
use crate::system::{FactorPermutation, SystemSignature};
use crate::tensor::{ComplexVector, ComplexOperator};

/// Branches with squared norm at or below this are skipped.
const BRANCH_FLOOR: f64 = 1e-12;

/// A random pure-state spec drawn from a ChaCha8 stream seeded with `seed`.
pub fn random_valid_state(sig: &SystemSignature, seed: u64) -> PureStateSpec {
    sample_spec(sig, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Uniform permutations, parities and tail; complex Gaussian coefficients.
pub fn sample_spec<R: Rng + ?Sized>(sig: &SystemSignature, rng: &mut R) -> PureStateSpec {
    let d = sig.local_dim();
    let (m, n) = (sig.classical(), sig.anticlassical());
    let k = m.min(n);
    let mut sigma: Vec<usize> = (0..m).collect();
    let mut tau: Vec<usize> = (0..n).collect();
    sigma.shuffle(rng);
    tau.shuffle(rng);
    let parity = (0..k).map(|_| rng.random_range(0..d)).collect();
    let tail = (0..m.abs_diff(n)).map(|_| rng.random_range(0..d)).collect();
    let raw: Vec<Complex64> = (0..d.pow(k as u32))
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let coeffs = raw.into_iter().map(|c| c / norm).collect();
    PureStateSpec::new(*sig, FactorPermutation { sigma, tau }, coeffs, parity, tail)
        .expect("sampled spec satisfies its invariants")
}

/// Amplitude table of a spec, read entry by entry: each basis string is
/// pulled back through the permutation and tested against the pairing.
pub fn spec_amplitudes(spec: &PureStateSpec) -> Vec<Complex64> {
    let sig = spec.sig();
    let d = sig.local_dim();
    let (m, n) = (sig.classical(), sig.anticlassical());
    let k = m.min(n);
    let factors = m + n;
    let total = d.pow(factors as u32);
    let mut dest = Vec::with_capacity(factors);
    dest.extend(spec.perm().sigma.iter().copied());
    dest.extend(spec.perm().tau.iter().map(|&t| m + t));
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for (idx, amp) in out.iter_mut().enumerate() {
        let mut digits = vec![0; factors];
        let mut rest = idx;
        for p in (0..factors).rev() {
            digits[p] = rest % d;
            rest /= d;
        }
        let source: Vec<usize> = dest.iter().map(|&p| digits[p]).collect();
        let paired_ok = (0..k).all(|i| source[m + i] == (source[i] + spec.parity()[i].value()) % d);
        let tail_digits: &[usize] = if m > n { &source[k..m] } else { &source[m + k..] };
        if !paired_ok || tail_digits != spec.tail() {
            continue;
        }
        let x = source[..k].iter().fold(0, |acc, &v| acc * d + v);
        *amp = spec.coeffs()[x];
    }
    out
}

/// `(⟨e|_S ⊗ I)|ψ⟩` by looping over every basis string of the whole system.
fn branch(psi: &[Complex64], e: &[Complex64], d: usize, factors: usize, targets: &[usize]) -> Vec<Complex64> {
    let rest: Vec<usize> = (0..factors).filter(|p| !targets.contains(p)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); d.pow(rest.len() as u32)];
    for (idx, amp) in psi.iter().enumerate() {
        if *amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut digits = vec![0; factors];
        let mut r = idx;
        for p in (0..factors).rev() {
            digits[p] = r % d;
            r /= d;
        }
        let s = targets.iter().fold(0, |acc, &p| acc * d + digits[p]);
        let t = rest.iter().fold(0, |acc, &p| acc * d + digits[p]);
        out[t] += e[s].conj() * amp;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub trials: usize,
    /// Branches with nonzero weight that were validated.
    pub branches: usize,
    /// Branches that are not valid pure states.
    pub failures: usize,
    /// Largest entrywise gap to the unnormalized output of
    /// `effects::conditional_state`.
    pub max_engine_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EffectKind {
    Certified,
    CrossSector,
}

/// Random valid pure state, random certified effect on a random proper
/// subset of factors; every branch of the conditional state is validated.
pub fn brute_force_conditional_check(trials: usize, sig: &SystemSignature, seed: u64) -> Result<ConsistencyReport> {
    conditional_trials(trials, sig, seed, EffectKind::Certified)
}

/// Negative control: the effect is a projector on a superposition of two
/// basis strings that differ in one digit, which never lies in one sector.
pub fn corrupted_conditional_check(trials: usize, sig: &SystemSignature, seed: u64) -> Result<ConsistencyReport> {
    conditional_trials(trials, sig, seed, EffectKind::CrossSector)
}

fn conditional_trials(trials: usize, sig: &SystemSignature, seed: u64, kind: EffectKind) -> Result<ConsistencyReport> {
    let factors = sig.num_factors();
    if factors < 2 {
        return Err(Error::Domain(format!("{sig} has no proper sub-factor set to measure")));
    }
    let d = sig.local_dim();
    let cfg = ValidationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConsistencyReport {
        trials,
        branches: 0,
        failures: 0,
        max_engine_gap: 0.0,
    };
    for _ in 0..trials {
        let psi_spec = sample_spec(sig, &mut rng);
        let psi = spec_amplitudes(&psi_spec);

        let size = rng.random_range(1..factors);
        let mut positions: Vec<usize> = (0..factors).collect();
        positions.shuffle(&mut rng);
        let mut targets = positions[..size].to_vec();
        targets.sort_unstable();
        let sub = sig.restrict(&targets)?;
        let rest: Vec<usize> = (0..factors).filter(|p| !targets.contains(p)).collect();
        let rest_sig = sig.restrict(&rest)?;

        let parts: Vec<(f64, Vec<Complex64>)> = match kind {
            EffectKind::Certified => {
                let count = rng.random_range(1..=3);
                let raw: Vec<(f64, PureStateSpec)> = (0..count)
                    .map(|_| (rng.random::<f64>() + 0.05, sample_spec(&sub, &mut rng)))
                    .collect();
                let effect = Effect::from_certificate(raw.clone())?;
                let scale = 1.0 / effect.op().max_eigenvalue().max(1.0);
                raw.iter().map(|(w, s)| (w * scale, spec_amplitudes(s))).collect()
            }
            EffectKind::CrossSector => {
                let dim = sub.total_dim();
                let a = rng.random_range(0..dim / d);
                let stride = dim / d;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[a] = Complex64::new(h, 0.0);
                v[a + stride * rng.random_range(1..d)] = Complex64::new(h, 0.0);
                vec![(1.0, v)]
            }
        };

        let rest_dim = rest_sig.total_dim();
        let mut post = ComplexOperator::zeros(rest_dim);
        for (w, e) in &parts {
            let b = branch(&psi, e, d, factors, &targets);
            let weight: f64 = b.iter().map(|c| c.norm_sqr()).sum();
            for r in 0..rest_dim {
                for c in 0..rest_dim {
                    let v = post.get(r, c) + b[r] * b[c].conj() * *w;
                    post.set(r, c, v);
                }
            }
            if weight <= BRANCH_FLOOR {
                continue;
            }
            report.branches += 1;
            let v = ComplexVector::from_vec(b.iter().map(|c| c / weight.sqrt()).collect());
            if !validate_pure_state(&v, &rest_sig, &cfg)?.valid {
                report.failures += 1;
            }
        }

        if kind == EffectKind::Certified {
            let mut op = ComplexOperator::zeros(sub.total_dim());
            for (w, e) in &parts {
                for r in 0..e.len() {
                    for c in 0..e.len() {
                        op.set(r, c, op.get(r, c) + e[r] * e[c].conj() * *w);
                    }
                }
            }
            let rho = DensityState::from_spec(&psi_spec);
            let engine = conditional_state(&rho, &Effect::new(sub, op)?, &targets)?;
            let prob = post.trace().re;
            report.max_engine_gap = report.max_engine_gap.max((engine.prob - prob).abs());
            if let Some(state) = engine.post {
                let gap = state.matrix().scale(engine.prob).max_abs_diff(&post);
                report.max_engine_gap = report.max_engine_gap.max(gap);
            }
        }
    }
    Ok(report)
}

/// Axis-aligned grid: every parameter runs over `lo, lo + step, …` up to `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    pub ranges: Vec<(f64, f64)>,
}

impl GridSpec {
    /// `γ00, γ01, γ10` in [0,1]; `γ11` is the remainder.
    pub fn simplex(step: f64) -> Self {
        Self {
            step,
            ranges: vec![(0.0, 1.0); 3],
        }
    }

    fn axis(&self, i: usize) -> Vec<f64> {
        let (lo, hi) = self.ranges[i];
        let count = ((hi - lo) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|k| lo + k as f64 * self.step).collect()
    }
}

/// Minimum over the grid of `p(no|σ) = 1 - Σ γ_ij |⟨ij|Ψ⟩|²` with
/// `Ψ = √p|00⟩ + √(1-p)|11⟩`.
pub fn separable_grid_min(p: f64, grid: &GridSpec) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !(grid.step > 0.0) || grid.ranges.len() != 3 {
        return Err(Error::Domain("need 0 < p < 1, a positive step and three ranges".into()));
    }
    let psi = [p.sqrt(), 0.0, 0.0, (1.0 - p).sqrt()];
    let overlap: Vec<f64> = psi.iter().map(|a| a * a).collect();
    let mut best = f64::INFINITY;
    for &g00 in &grid.axis(0) {
        for &g01 in &grid.axis(1) {
            for &g10 in &grid.axis(2) {
                let g11 = 1.0 - g00 - g01 - g10;
                if g11 < -1e-12 {
                    continue;
                }
                let yes = g00 * overlap[0] + g01 * overlap[1] + g10 * overlap[2] + g11.max(0.0) * overlap[3];
                best = best.min(1.0 - yes);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::build_pure_state;

    fn sig(d: usize, m: usize, n: usize) -> SystemSignature {
        SystemSignature::new(d, m, n).unwrap()
    }

    #[test]
    fn sampler_is_deterministic() {
        let s = sig(2, 1, 1);
        assert_eq!(random_valid_state(&s, 0), random_valid_state(&s, 0));
        assert_ne!(random_valid_state(&s, 0), random_valid_state(&s, 1));
    }

    #[test]
    fn classical_samples_are_basis_states() {
        let s = sig(2, 2, 0);
        for seed in 0..20 {
            let amps = spec_amplitudes(&random_valid_state(&s, seed));
            let nonzero = amps.iter().filter(|a| a.norm() > 1e-12).count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn amplitudes_match_the_engine_builder() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d, m, n) in [(2, 2, 2), (3, 2, 1), (2, 1, 3), (3, 0, 2)] {
            let s = sig(d, m, n);
            for _ in 0..10 {
                let spec = sample_spec(&s, &mut rng);
                let engine = build_pure_state(&spec);
                let ours = ComplexVector::from_vec(spec_amplitudes(&spec));
                assert!(engine.max_abs_diff(&ours) < 1e-15);
            }
        }
    }

    #[test]
    fn consistency_and_negative_control() {
        let r = brute_force_conditional_check(100, &sig(2, 2, 2), 5).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.branches > 0);
        assert!(r.max_engine_gap < 1e-12);
        let bad = corrupted_conditional_check(50, &sig(2, 2, 2), 5).unwrap();
        assert!(bad.failures > 0);
    }

    #[test]
    fn grid_examples() {
        let g = GridSpec::simplex(0.01);
        assert!((separable_grid_min(0.5, &g).unwrap() - 0.5).abs() < 1e-12);
        assert!((separable_grid_min(0.25, &g).unwrap() - 0.25).abs() < 1e-12);
        assert!(separable_grid_min(1e-6, &g).unwrap() < 1e-5);
    }
}
