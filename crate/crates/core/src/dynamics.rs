//! Reversible transformations, conditional evolutions, classical channels and
//! sampled validity checks for linear maps.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::effects::{Effect, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::state::{
    cone_check, random_density_state, CheckMethod, DensityState, ValidationConfig, ValidityReport,
    Witness,
};
use crate::system::{embed_permutation, FactorPermutation, SystemSignature};
use crate::tensor::{embed_operator, outer, partial_trace, ComplexOperator, ComplexVector, TensorProduct};

/// `U = P ∘ X^s ∘ Z^v` on an (m,n)-composite, with `P` a permutation of dits
/// among themselves and anti-dits among themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleSpec {
    pub perm: FactorPermutation,
    /// One shift per factor in canonical order.
    pub x_shifts: Vec<usize>,
    /// One phase label per factor; `None` leaves out the phase layer.
    pub z_phases: Option<Vec<usize>>,
}

impl ReversibleSpec {
    pub fn identity(sig: &SystemSignature) -> Self {
        Self {
            perm: FactorPermutation::identity(sig.classical(), sig.anticlassical()),
            x_shifts: vec![0; sig.num_factors()],
            z_phases: None,
        }
    }
}

/// `X^j|s⟩ = |s ⊕ j⟩` on one factor.
pub fn shift_operator(d: usize, j: usize) -> ComplexOperator {
    let mut x = ComplexOperator::zeros(d);
    for s in 0..d {
        x.set((s + j) % d, s, Complex64::new(1.0, 0.0));
    }
    x
}

/// `Z^j|s⟩ = ω^(s ⊕ j)|s⟩` with `ω = e^(2πi/d)`.
pub fn phase_operator(d: usize, j: usize) -> ComplexOperator {
    let mut z = ComplexOperator::zeros(d);
    for s in 0..d {
        let k = (s + j) % d;
        z.set(s, s, Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64));
    }
    z
}

fn check_string(name: &str, s: &[usize], sig: &SystemSignature) -> Result<()> {
    if s.len() != sig.num_factors() {
        return Err(Error::Domain(format!(
            "{name} string of length {} for {} factors",
            s.len(),
            sig.num_factors()
        )));
    }
    if let Some(&bad) = s.iter().find(|&&x| x >= sig.local_dim()) {
        return Err(Error::Domain(format!("{name} entry {bad} out of range for d={}", sig.local_dim())));
    }
    Ok(())
}

pub fn build_reversible(spec: &ReversibleSpec, sig: &SystemSignature) -> Result<ComplexOperator> {
    let d = sig.local_dim();
    check_string("shift", &spec.x_shifts, sig)?;
    let shifts: Vec<ComplexOperator> = spec.x_shifts.iter().map(|&j| shift_operator(d, j)).collect();
    let mut u = crate::tensor::tensor_all(&shifts).expect("at least one factor");
    if let Some(v) = &spec.z_phases {
        check_string("phase", v, sig)?;
        let phases: Vec<ComplexOperator> = v.iter().map(|&j| phase_operator(d, j)).collect();
        u = &u * &crate::tensor::tensor_all(&phases).expect("at least one factor");
    }
    Ok(&embed_permutation(sig, &spec.perm)? * &u)
}

/// Where one factor of a conditional-evolution effect acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionPort {
    /// Factor of the input system A.
    Input(usize),
    /// Factor of the ancilla state σ_CB.
    Ancilla(usize),
}

/// `T(ρ) = Tr_AC[(ρ_A ⊗ σ_CB)(P_AC ⊗ I_B)]`.
///
/// `wiring[j]` says which input or ancilla factor effect factor `j` acts on.
/// Every input factor must be measured; the ancilla factors not measured form
/// the output system B.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEvolutionSpec {
    pub input: SystemSignature,
    pub ancilla: DensityState,
    pub effect: Effect,
    pub wiring: Vec<EvolutionPort>,
}

/// Result of one conditional evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    pub prob: f64,
    /// `T(ρ)/Tr T(ρ)`, absent below the probability floor.
    pub out: Option<DensityState>,
}

struct Layout {
    dims: Vec<usize>,
    targets: Vec<usize>,
    keep: Vec<usize>,
    out_sig: SystemSignature,
}

impl ConditionalEvolutionSpec {
    fn layout(&self) -> Result<Layout> {
        let a = self.input.num_factors();
        let anc = *self.ancilla.sig();
        if anc.local_dim() != self.input.local_dim() || self.effect.sig().local_dim() != self.input.local_dim() {
            return Err(Error::Domain("conditional evolution mixes local dimensions".into()));
        }
        if self.wiring.len() != self.effect.sig().num_factors() {
            return Err(Error::Domain(format!(
                "wiring lists {} factors, the effect acts on {}",
                self.wiring.len(),
                self.effect.sig().num_factors()
            )));
        }
        let mut targets = Vec::with_capacity(self.wiring.len());
        for (j, port) in self.wiring.iter().enumerate() {
            let (pos, classical) = match *port {
                EvolutionPort::Input(i) if i < a => (i, self.input.kind_at(i).is_classical()),
                EvolutionPort::Ancilla(i) if i < anc.num_factors() => (a + i, anc.kind_at(i).is_classical()),
                _ => return Err(Error::Domain(format!("wiring port {port:?} does not exist"))),
            };
            if classical != self.effect.sig().kind_at(j).is_classical() {
                return Err(Error::Domain(format!("effect factor {j} and {port:?} differ in kind")));
            }
            if targets.contains(&pos) {
                return Err(Error::Domain(format!("{port:?} is wired twice")));
            }
            targets.push(pos);
        }
        if (0..a).any(|i| !targets.contains(&i)) {
            return Err(Error::Domain("every input factor must be measured".into()));
        }
        let keep: Vec<usize> = (a..a + anc.num_factors()).filter(|p| !targets.contains(p)).collect();
        if keep.is_empty() {
            return Err(Error::Domain("no ancilla factor is left as output".into()));
        }
        let anc_keep: Vec<usize> = keep.iter().map(|p| p - a).collect();
        let mut dims = self.input.dims();
        dims.extend(anc.dims());
        Ok(Layout {
            dims,
            targets,
            keep,
            out_sig: anc.restrict(&anc_keep)?,
        })
    }

    pub fn output_sig(&self) -> Result<SystemSignature> {
        Ok(self.layout()?.out_sig)
    }

    /// Unnormalized `T(X)` for any operator `X` on the input space.
    pub fn apply(&self, x: &ComplexOperator) -> Result<ComplexOperator> {
        if x.dim() != self.input.total_dim() {
            return Err(Error::Shape(format!(
                "operator of dimension {} on input {}",
                x.dim(),
                self.input
            )));
        }
        let l = self.layout()?;
        let joint = x.tensor(self.ancilla.matrix());
        let p = embed_operator(self.effect.op(), &l.dims, &l.targets)?;
        partial_trace(&(&joint * &p), &l.dims, &l.keep)
    }

    /// The evolution as a linear map from the input to the output system.
    pub fn to_linear_map(&self) -> Result<LinearMap> {
        LinearMap::from_fn(self.input, self.output_sig()?, |x| {
            self.apply(x).expect("layout checked")
        })
    }
}

pub fn conditional_evolution(spec: &ConditionalEvolutionSpec, rho: &DensityState) -> Result<Evolved> {
    if *rho.sig() != spec.input {
        return Err(Error::Domain(format!(
            "evolution expects a state of {}, got {}",
            spec.input,
            rho.sig()
        )));
    }
    let out_sig = spec.output_sig()?;
    let t = spec.apply(rho.matrix())?;
    let prob = t.trace().re;
    if prob <= PROB_FLOOR {
        return Ok(Evolved { prob, out: None });
    }
    let hermitian = (&t + &t.adjoint()).scale(0.5 / prob);
    Ok(Evolved {
        prob,
        out: Some(DensityState::new(out_sig, hermitian)?),
    })
}

/// Stochastic map between classical strings: `cond[x][y] = p(y|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalChannel {
    sig_in: SystemSignature,
    sig_out: SystemSignature,
    cond: Vec<Vec<f64>>,
}

impl ClassicalChannel {
    pub fn new(sig_in: SystemSignature, sig_out: SystemSignature, cond: Vec<Vec<f64>>) -> Result<Self> {
        for s in [&sig_in, &sig_out] {
            if s.anticlassical() != 0 {
                return Err(Error::Domain(format!("classical channels act on (m,0) systems, got {s}")));
            }
        }
        if cond.len() != sig_in.total_dim() || cond.iter().any(|row| row.len() != sig_out.total_dim()) {
            return Err(Error::Shape(format!(
                "conditional table must be {} x {}",
                sig_in.total_dim(),
                sig_out.total_dim()
            )));
        }
        for (x, row) in cond.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-10 {
                return Err(Error::Domain(format!("p(.|{x}) is not a distribution: {row:?}")));
            }
        }
        Ok(Self { sig_in, sig_out, cond })
    }

    pub fn identity(sig: SystemSignature) -> Result<Self> {
        let n = sig.total_dim();
        let cond = (0..n)
            .map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(sig, sig, cond)
    }

    pub fn sig_in(&self) -> &SystemSignature {
        &self.sig_in
    }

    pub fn sig_out(&self) -> &SystemSignature {
        &self.sig_out
    }

    /// `cond[x][y] = p(y|x)`.
    pub fn table(&self) -> &[Vec<f64>] {
        &self.cond
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &ClassicalChannel) -> Result<Self> {
        if self.sig_out != next.sig_in {
            return Err(Error::Domain("channel outputs and inputs do not match".into()));
        }
        let cond = self
            .cond
            .iter()
            .map(|row| {
                (0..next.sig_out.total_dim())
                    .map(|z| row.iter().zip(&next.cond).map(|(p, r)| p * r[z]).sum())
                    .collect()
            })
            .collect();
        Ok(Self {
            sig_in: self.sig_in,
            sig_out: next.sig_out,
            cond,
        })
    }
}

/// `Σ_{x,y} p(y|x) |y⟩⟨y| ⟨x|ρ|x⟩`.
pub fn classical_channel_map(ch: &ClassicalChannel, rho: &DensityState) -> Result<DensityState> {
    if *rho.sig() != ch.sig_in {
        return Err(Error::Domain(format!(
            "channel expects a state of {}, got {}",
            ch.sig_in,
            rho.sig()
        )));
    }
    let off = rho.matrix().off_diagonal_defect();
    if off > 1e-10 {
        return Err(Error::NotClassical(format!("state has coherences of size {off:.3e}")));
    }
    let q: Vec<f64> = (0..ch.sig_out.total_dim())
        .map(|y| {
            ch.cond
                .iter()
                .enumerate()
                .map(|(x, row)| row[y] * rho.matrix().get(x, x).re)
                .sum()
        })
        .collect();
    Ok(DensityState::new_unchecked(ch.sig_out, ComplexOperator::diagonal(&q)))
}

/// A linear map on operators, stored as the images of the matrix units
/// `|i⟩⟨j|` of the input space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    sig_in: SystemSignature,
    sig_out: SystemSignature,
    images: Vec<ComplexOperator>,
}

impl LinearMap {
    /// Tabulates `f` on the matrix units and rejects it if it fails to be
    /// linear on a few fixed combinations.
    pub fn from_fn(
        sig_in: SystemSignature,
        sig_out: SystemSignature,
        f: impl Fn(&ComplexOperator) -> ComplexOperator,
    ) -> Result<Self> {
        let n = sig_in.total_dim();
        let mut images = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let unit = outer(&ComplexVector::basis(n, i), &ComplexVector::basis(n, j));
                let img = f(&unit);
                if img.dim() != sig_out.total_dim() {
                    return Err(Error::Shape(format!(
                        "image of dimension {} for output {sig_out}",
                        img.dim()
                    )));
                }
                images.push(img);
            }
        }
        let map = Self { sig_in, sig_out, images };
        let probes = [
            ComplexOperator::identity(n),
            ComplexOperator::from_fn(n, |r, c| Complex64::new((r + 2 * c) as f64 * 0.37 - 0.5, (r as f64 - c as f64) * 0.21)),
            ComplexOperator::from_fn(n, |r, c| Complex64::new(if r == c { 2.5 } else { 0.1 }, 0.0)),
        ];
        for x in &probes {
            let err = f(x).max_abs_diff(&map.apply(x)?);
            let scale = 1.0 + x.max_abs() * n as f64;
            if err > 1e-9 * scale {
                return Err(Error::Domain(format!("map is not linear (defect {err:.3e})")));
            }
        }
        Ok(map)
    }

    /// `X ↦ U X U†`.
    pub fn conjugation(sig: SystemSignature, u: &ComplexOperator) -> Result<Self> {
        let ud = u.adjoint();
        Self::from_fn(sig, sig, |x| &(u * x) * &ud)
    }

    pub fn sig_in(&self) -> &SystemSignature {
        &self.sig_in
    }

    pub fn sig_out(&self) -> &SystemSignature {
        &self.sig_out
    }

    pub fn apply(&self, x: &ComplexOperator) -> Result<ComplexOperator> {
        let n = self.sig_in.total_dim();
        if x.dim() != n {
            return Err(Error::Shape(format!("operator of dimension {} on input {}", x.dim(), self.sig_in)));
        }
        let mut acc = ComplexOperator::zeros(self.sig_out.total_dim());
        for i in 0..n {
            for j in 0..n {
                let c = x.get(i, j);
                if c != Complex64::new(0.0, 0.0) {
                    acc = &acc + &self.images[i * n + j].scale_complex(c);
                }
            }
        }
        Ok(acc)
    }

    /// `Σ_ij |i⟩⟨j| ⊗ T(|i⟩⟨j|)`.
    pub fn choi(&self) -> ComplexOperator {
        let n = self.sig_in.total_dim();
        let k = self.sig_out.total_dim();
        ComplexOperator::from_fn(n * k, |r, c| {
            let (i, a) = (r / k, r % k);
            let (j, b) = (c / k, c % k);
            self.images[i * n + j].get(a, b)
        })
    }
}

/// Complete positivity from the Choi matrix, then trace-non-increase and
/// validity of the output on `samples` random valid input states.
pub fn validate_transformation<R: Rng + ?Sized>(
    map: &LinearMap,
    samples: usize,
    rng: &mut R,
    cfg: &ValidationConfig,
) -> Result<ValidityReport> {
    let lo = map.choi().min_eigenvalue();
    if lo < -1e-9 {
        return Ok(ValidityReport::violation(
            CheckMethod::Exhaustive,
            -lo,
            format!("not completely positive: Choi eigenvalue {lo:.3e}"),
        ));
    }
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let rank = 1 + s % map.sig_in.total_dim().min(3);
        let rho = random_density_state(&map.sig_in, rank, rng);
        let out = map.apply(rho.matrix())?;
        let tr = out.trace().re;
        if tr > 1.0 + 1e-10 {
            return Ok(ValidityReport::violation(
                CheckMethod::Sampled,
                tr - 1.0,
                format!("trace increased to {tr} on sample {s}"),
            ));
        }
        if tr <= PROB_FLOOR {
            continue;
        }
        let normalized = (&out + &out.adjoint()).scale(0.5 / tr);
        let report = cone_check(&normalized, &map.sig_out, cfg)?;
        if !report.valid {
            return Ok(ValidityReport::violation(
                CheckMethod::Sampled,
                report.residual,
                format!("output of sample {s} is not a valid state"),
            ));
        }
        worst = worst.max(report.residual);
    }
    Ok(ValidityReport {
        valid: true,
        method: CheckMethod::Sampled,
        witness: Witness::None,
        residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{build_pure_state, PureStateSpec};
    use crate::tensor::projector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(d: usize, m: usize, n: usize) -> SystemSignature {
        SystemSignature::new(d, m, n).unwrap()
    }

    fn phi() -> ComplexVector {
        ComplexVector::from_real(&[1.0, 0.0, 0.0, 1.0]).normalized().unwrap()
    }

    #[test]
    fn reversible_examples() {
        let s = sig(2, 1, 1);
        let u = build_reversible(&ReversibleSpec::identity(&s), &s).unwrap();
        assert!(u.max_abs_diff(&ComplexOperator::identity(4)) < 1e-15);

        let flip = ReversibleSpec {
            x_shifts: vec![0, 1],
            ..ReversibleSpec::identity(&s)
        };
        let u = build_reversible(&flip, &s).unwrap();
        let psi = ComplexVector::from_real(&[0.0, 1.0, 1.0, 0.0]).normalized().unwrap();
        assert!(u.apply(&phi()).max_abs_diff(&psi) < 1e-15);

        let z = phase_operator(3, 1);
        assert!((z.get(2, 2) - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let bad = ReversibleSpec {
            x_shifts: vec![0],
            ..ReversibleSpec::identity(&s)
        };
        assert!(build_reversible(&bad, &s).is_err());
    }

    #[test]
    fn zero_phase_string_is_the_plain_phase_flip() {
        let z0 = phase_operator(2, 0);
        assert!(z0.max_abs_diff(&ComplexOperator::diagonal(&[1.0, -1.0])) < 1e-15);
        let z1 = phase_operator(2, 1);
        assert!(z1.max_abs_diff(&z0.scale(-1.0)) < 1e-15);
    }

    #[test]
    fn teleportation_like_contraction() {
        // σ = Φ on (C: anti-bit, B: bit), effect Φ on (A: bit, C: anti-bit).
        let s = sig(2, 1, 1);
        let spec = ConditionalEvolutionSpec {
            input: sig(2, 1, 0),
            ancilla: DensityState::from_pure(s, &phi()).unwrap(),
            effect: Effect::new(s, projector(&phi()).unwrap()).unwrap(),
            wiring: vec![EvolutionPort::Input(0), EvolutionPort::Ancilla(1)],
        };
        for x in 0..2 {
            let rho = DensityState::classical(sig(2, 1, 0), &[1.0 - x as f64, x as f64]).unwrap();
            let out = conditional_evolution(&spec, &rho).unwrap();
            assert!((out.prob - 0.25).abs() < 1e-12);
            assert!(out.out.unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
        let map = spec.to_linear_map().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = validate_transformation(&map, 20, &mut rng, &ValidationConfig::default()).unwrap();
        assert!(report.valid);
        assert_eq!(report.method, CheckMethod::Sampled);
    }

    #[test]
    fn prepare_and_discard_and_annihilation() {
        let b = sig(2, 1, 0);
        let sigma = DensityState::classical(b, &[1.0, 0.0]).unwrap();
        let spec = ConditionalEvolutionSpec {
            input: b,
            ancilla: sigma.clone(),
            effect: Effect::unit(b),
            wiring: vec![EvolutionPort::Input(0)],
        };
        let rho = DensityState::classical(b, &[0.3, 0.7]).unwrap();
        let out = conditional_evolution(&spec, &rho).unwrap();
        assert!((out.prob - 1.0).abs() < 1e-12);
        assert!(out.out.unwrap().matrix().max_abs_diff(sigma.matrix()) < 1e-12);

        let kill = ConditionalEvolutionSpec {
            effect: Effect::pure(&PureStateSpec::basis_state(b, &[1]).unwrap()),
            ..spec
        };
        let zero = DensityState::classical(b, &[1.0, 0.0]).unwrap();
        let out = conditional_evolution(&kill, &zero).unwrap();
        assert!(out.prob.abs() < 1e-15 && out.out.is_none());
    }

    #[test]
    fn wiring_errors() {
        let b = sig(2, 1, 0);
        let spec = ConditionalEvolutionSpec {
            input: b,
            ancilla: DensityState::classical(sig(2, 0, 1), &[1.0, 0.0]).unwrap(),
            effect: Effect::unit(b),
            wiring: vec![EvolutionPort::Ancilla(0)],
        };
        assert!(spec.output_sig().is_err());
    }

    #[test]
    fn classical_channel_examples() {
        let b = sig(2, 1, 0);
        let rho = DensityState::classical(b, &[0.3, 0.7]).unwrap();
        let id = ClassicalChannel::identity(b).unwrap();
        assert_eq!(classical_channel_map(&id, &rho).unwrap(), rho);
        let flip = ClassicalChannel::new(b, b, vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let out = classical_channel_map(&flip, &rho).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexOperator::diagonal(&[0.7, 0.3])) < 1e-15);
        let bsc = ClassicalChannel::new(b, b, vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let out = classical_channel_map(&bsc, &DensityState::classical(b, &[1.0, 0.0]).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexOperator::diagonal(&[0.9, 0.1])) < 1e-15);
        let plus = DensityState::from_pure(b, &ComplexVector::from_real(&[1.0, 1.0]).normalized().unwrap()).unwrap();
        assert!(matches!(classical_channel_map(&id, &plus), Err(Error::NotClassical(_))));
        assert!(ClassicalChannel::new(b, b, vec![vec![0.5, 0.4], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn transpose_is_not_completely_positive() {
        let s = sig(2, 1, 1);
        let map = LinearMap::from_fn(s, s, |x| x.transpose()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = validate_transformation(&map, 5, &mut rng, &ValidationConfig::default()).unwrap();
        assert!(!report.valid);
        assert_eq!(report.method, CheckMethod::Exhaustive);
    }

    #[test]
    fn nonlinear_maps_are_rejected() {
        let s = sig(2, 1, 0);
        let err = LinearMap::from_fn(s, s, |x| x * x).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn reversible_conjugation_is_valid() {
        let s = sig(3, 1, 1);
        let spec = ReversibleSpec {
            perm: FactorPermutation::identity(1, 1),
            x_shifts: vec![1, 2],
            z_phases: Some(vec![2, 1]),
        };
        let u = build_reversible(&spec, &s).unwrap();
        let map = LinearMap::conjugation(s, &u).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(validate_transformation(&map, 20, &mut rng, &ValidationConfig::default()).unwrap().valid);
        let v = build_pure_state(&PureStateSpec::basis_state(s, &[0, 0]).unwrap());
        assert!((u.apply(&v).norm() - 1.0).abs() < 1e-12);
    }
}
