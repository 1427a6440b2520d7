use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::{all_permutations, FactorPermutation, ParityIndex, SystemSignature};
use crate::tensor::{flatten, unflatten, ComplexVector};

use super::{CheckMethod, ValidationConfig, ValidityReport, Witness};

/// Constructive description of a pure state of an (m,n)-composite.
///
/// Before the factor permutation, dit `i` is paired with anti-dit `i` for
/// `i < min(m,n)` and carries `x_i` and `x_i ⊕ parity_i` respectively. The
/// `|m-n|` unpaired factors of the larger kind hold the fixed `tail` string.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateSpec {
    sig: SystemSignature,
    perm: FactorPermutation,
    coeffs: Vec<Complex64>,
    parity: Vec<ParityIndex>,
    tail: Vec<usize>,
}

impl PureStateSpec {
    /// `coeffs` is indexed by the flattened paired string `x ∈ [d]^min(m,n)`.
    pub fn new(
        sig: SystemSignature,
        perm: FactorPermutation,
        coeffs: Vec<Complex64>,
        parity: Vec<usize>,
        tail: Vec<usize>,
    ) -> Result<Self> {
        perm.check(&sig)?;
        let d = sig.local_dim();
        let k = sig.paired();
        let expected = d.pow(k as u32);
        if coeffs.len() != expected {
            return Err(Error::Domain(format!(
                "expected {expected} coefficients for {sig}, got {}",
                coeffs.len()
            )));
        }
        if parity.len() != k {
            return Err(Error::Domain(format!(
                "parity vector has length {}, expected {k}",
                parity.len()
            )));
        }
        let tail_len = sig.classical().abs_diff(sig.anticlassical());
        if tail.len() != tail_len {
            return Err(Error::Domain(format!(
                "tail has length {}, expected {tail_len}",
                tail.len()
            )));
        }
        if let Some(&bad) = tail.iter().find(|&&t| t >= d) {
            return Err(Error::Domain(format!("tail digit {bad} out of range for d={d}")));
        }
        let parity = parity
            .into_iter()
            .map(|p| ParityIndex::new(p, d))
            .collect::<Result<Vec<_>>>()?;
        let norm_sq: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-10 {
            return Err(Error::Normalization(format!(
                "coefficients have squared norm {norm_sq}"
            )));
        }
        Ok(Self {
            sig,
            perm,
            coeffs,
            parity,
            tail,
        })
    }

    /// Product basis state `|digits⟩` expressed as a spec, when it is one.
    pub fn basis_state(sig: SystemSignature, digits: &[usize]) -> Result<Self> {
        if digits.len() != sig.num_factors() || digits.iter().any(|&x| x >= sig.local_dim()) {
            return Err(Error::Domain(format!("{digits:?} is not a basis string of {sig}")));
        }
        let d = sig.local_dim();
        let (m, n, k) = (sig.classical(), sig.anticlassical(), sig.paired());
        let x: Vec<usize> = digits[..k].to_vec();
        let parity: Vec<usize> = (0..k).map(|i| (digits[m + i] + d - digits[i]) % d).collect();
        let tail: Vec<usize> = if m > n {
            digits[k..m].to_vec()
        } else {
            digits[m + k..].to_vec()
        };
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d.pow(k as u32)];
        coeffs[flatten(&x, &vec![d; k])] = Complex64::new(1.0, 0.0);
        Self::new(sig, FactorPermutation::identity(m, n), coeffs, parity, tail)
    }

    pub fn sig(&self) -> &SystemSignature {
        &self.sig
    }

    pub fn perm(&self) -> &FactorPermutation {
        &self.perm
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn parity(&self) -> &[ParityIndex] {
        &self.parity
    }

    pub fn tail(&self) -> &[usize] {
        &self.tail
    }

    /// Same spec with every coefficient multiplied by one phase.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let mut out = self.clone();
        let w = Complex64::from_polar(1.0, phase);
        out.coeffs.iter_mut().for_each(|c| *c *= w);
        out
    }

    /// Canonical-position digits of the basis vector labelled by paired string `x`.
    fn unpermuted_digits(&self, x: &[usize]) -> Vec<usize> {
        let d = self.sig.local_dim();
        let (m, n, k) = (self.sig.classical(), self.sig.anticlassical(), self.sig.paired());
        let mut digits = vec![0; m + n];
        for i in 0..k {
            digits[i] = x[i];
            digits[m + i] = (x[i] + self.parity[i].value()) % d;
        }
        let tail_start = if m > n { k } else { m + k };
        for (t, &r) in self.tail.iter().enumerate() {
            digits[tail_start + t] = r;
        }
        digits
    }
}

/// Realize `[U⊗W](Σ_x α_x |x⟩ ⊗ X^j|x⟩ ⊗ |tail⟩)` as a unit vector.
pub fn build_pure_state(spec: &PureStateSpec) -> ComplexVector {
    let sig = &spec.sig;
    let d = sig.local_dim();
    let k = sig.paired();
    let dims = sig.dims();
    let full = spec.perm.full();
    let mut out = ComplexVector::zeros(sig.total_dim());
    let pair_dims = vec![d; k];
    for (xi, &c) in spec.coeffs.iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let x = unflatten(xi, &pair_dims);
        let src = spec.unpermuted_digits(&x);
        let mut dst = vec![0; src.len()];
        for (pos, &digit) in src.iter().enumerate() {
            dst[full[pos]] = digit;
        }
        out.entries_mut()[flatten(&dst, &dims)] += c;
    }
    out
}

/// Exhaustive membership test for the pure states of `sig`.
///
/// For every candidate permutation pair the support of `v` is grouped by
/// sector key (parity of each pair, tail digits); the state is valid iff one
/// key carries all of its weight. The residual is the norm of the component
/// outside the best sector.
pub fn validate_pure_state(
    v: &ComplexVector,
    sig: &SystemSignature,
    cfg: &ValidationConfig,
) -> Result<ValidityReport> {
    if v.dim() != sig.total_dim() {
        return Err(Error::Shape(format!(
            "vector of dimension {} is not a state of {sig}",
            v.dim()
        )));
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > cfg.tol {
        return Err(Error::Normalization(format!("vector has norm {norm}")));
    }
    cfg.check_search_bound(sig)?;

    let d = sig.local_dim();
    let (m, n, k) = (sig.classical(), sig.anticlassical(), sig.paired());
    let dims = sig.dims();
    let support: Vec<(Vec<usize>, Complex64)> = v
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(idx, &c)| (unflatten(idx, &dims), c))
        .collect();

    let mut best: Option<(f64, FactorPermutation, Vec<usize>)> = None;
    'search: for sigma in all_permutations(m) {
        for tau in all_permutations(n) {
            let perm = FactorPermutation { sigma: sigma.clone(), tau };
            let full = perm.full();
            // Weight per sector key under this pairing.
            let mut sectors: Vec<(Vec<usize>, f64)> = Vec::new();
            for (digits, c) in &support {
                let key = sector_key(digits, &full, m, n, k, d);
                match sectors.iter_mut().find(|(kk, _)| *kk == key) {
                    Some((_, w)) => *w += c.norm_sqr(),
                    None => sectors.push((key, c.norm_sqr())),
                }
            }
            let Some(top) = (0..sectors.len()).max_by(|&a, &b| sectors[a].1.total_cmp(&sectors[b].1))
            else {
                continue;
            };
            let outside: f64 = sectors
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != top)
                .map(|(_, (_, w))| w)
                .sum();
            let residual = outside.sqrt();
            if best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
                best = Some((residual, perm, sectors[top].0.clone()));
            }
            if residual < cfg.tol {
                break 'search;
            }
        }
    }
    let (residual, perm, key) = best.expect("a unit vector has nonempty support");
    if residual >= cfg.tol {
        return Ok(ValidityReport {
            valid: false,
            method: CheckMethod::Exhaustive,
            witness: Witness::Violation(format!(
                "no permutation/parity/tail sector holds the state; best sector misses norm {residual:.3e}"
            )),
            residual,
        });
    }
    let spec = spec_in_sector(v, sig, &perm, &key)?;
    Ok(ValidityReport {
        valid: true,
        method: CheckMethod::Exhaustive,
        witness: Witness::Pure(spec),
        residual,
    })
}

/// Sector key of a basis string under the pairing induced by `full`:
/// the parity of every pair followed by the tail digits.
fn sector_key(digits: &[usize], full: &[usize], m: usize, n: usize, k: usize, d: usize) -> Vec<usize> {
    let mut key = Vec::with_capacity(m.max(n));
    for i in 0..k {
        let dit = digits[full[i]];
        let anti = digits[full[m + i]];
        key.push((anti + d - dit) % d);
    }
    let tail_positions = if m > n { k..m } else { m + k..m + n };
    for pos in tail_positions {
        key.push(digits[full[pos]]);
    }
    key
}

pub(crate) fn sector_key_for(sig: &SystemSignature, digits: &[usize], full: &[usize]) -> Vec<usize> {
    sector_key(
        digits,
        full,
        sig.classical(),
        sig.anticlassical(),
        sig.paired(),
        sig.local_dim(),
    )
}

/// Read the paired coefficients of `v` inside one sector and package them as
/// a normalized spec.
fn spec_in_sector(
    v: &ComplexVector,
    sig: &SystemSignature,
    perm: &FactorPermutation,
    key: &[usize],
) -> Result<PureStateSpec> {
    let d = sig.local_dim();
    let k = sig.paired();
    let parity = key[..k].to_vec();
    let tail = key[k..].to_vec();
    let mut probe = PureStateSpec {
        sig: *sig,
        perm: perm.clone(),
        coeffs: Vec::new(),
        parity: parity
            .iter()
            .map(|&p| ParityIndex::new(p, d))
            .collect::<Result<_>>()?,
        tail: tail.clone(),
    };
    let dims = sig.dims();
    let full = perm.full();
    let pair_dims = vec![d; k];
    let count = d.pow(k as u32);
    let mut coeffs = Vec::with_capacity(count);
    for xi in 0..count {
        let src = probe.unpermuted_digits(&unflatten(xi, &pair_dims));
        let mut dst = vec![0; src.len()];
        for (pos, &digit) in src.iter().enumerate() {
            dst[full[pos]] = digit;
        }
        coeffs.push(v.entries()[flatten(&dst, &dims)]);
    }
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|c| *c /= norm);
    probe.coeffs = coeffs;
    Ok(probe)
}

/// Spec of a vector already known to be valid, via the exhaustive search.
pub fn spec_from_vector(
    v: &ComplexVector,
    sig: &SystemSignature,
    cfg: &ValidationConfig,
) -> Result<PureStateSpec> {
    let report = validate_pure_state(v, sig, cfg)?;
    match report.witness {
        Witness::Pure(spec) if report.valid => Ok(spec),
        _ => Err(Error::Validity(format!(
            "vector is not a pure state of {sig} (residual {:.3e})",
            report.residual
        ))),
    }
}

/// Orthonormal basis of the sector subspace holding `spec`, excluding
/// nothing. Each element is a basis-state spec in that sector.
pub(crate) fn sector_basis(spec: &PureStateSpec) -> Vec<PureStateSpec> {
    let count = spec.coeffs.len();
    (0..count)
        .map(|xi| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); count];
            coeffs[xi] = Complex64::new(1.0, 0.0);
            PureStateSpec {
                coeffs,
                ..spec.clone()
            }
        })
        .collect()
}

/// Every sector of `sig` under the pairing of `perm`: one spec per
/// (parity vector, tail) with zero coefficients, to be filled by the caller.
pub(crate) fn sector_templates(sig: &SystemSignature, perm: &FactorPermutation) -> Vec<PureStateSpec> {
    let d = sig.local_dim();
    let k = sig.paired();
    let tail_len = sig.classical().abs_diff(sig.anticlassical());
    let key_dims = vec![d; k + tail_len];
    let keys: usize = key_dims.iter().product();
    (0..keys)
        .map(|ki| {
            let key = unflatten(ki, &key_dims);
            PureStateSpec {
                sig: *sig,
                perm: perm.clone(),
                coeffs: vec![Complex64::new(0.0, 0.0); d.pow(k as u32)],
                parity: key[..k].iter().map(|&p| ParityIndex::from_raw(p)).collect(),
                tail: key[k..].to_vec(),
            }
        })
        .collect()
}

/// Distinct dit/anti-dit pairings of `sig`, one representative permutation each.
pub(crate) fn distinct_pairings(sig: &SystemSignature) -> Vec<FactorPermutation> {
    let (m, n, k) = (sig.classical(), sig.anticlassical(), sig.paired());
    let mut seen: Vec<(Vec<(usize, usize)>, Vec<usize>)> = Vec::new();
    let mut reps = Vec::new();
    for sigma in all_permutations(m) {
        for tau in all_permutations(n) {
            let perm = FactorPermutation { sigma: sigma.clone(), tau };
            let full = perm.full();
            let mut pairs: Vec<(usize, usize)> = (0..k).map(|i| (full[i], full[m + i])).collect();
            pairs.sort_unstable();
            let tail_positions = if m > n { k..m } else { m + k..m + n };
            // Every tail string is enumerated downstream, so tail order is irrelevant.
            let mut tail: Vec<usize> = tail_positions.map(|p| full[p]).collect();
            tail.sort_unstable();
            let signature = (pairs, tail);
            if !seen.contains(&signature) {
                seen.push(signature);
                reps.push(perm);
            }
        }
    }
    reps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sig(d: usize, m: usize, n: usize) -> SystemSignature {
        SystemSignature::new(d, m, n).unwrap()
    }

    #[test]
    fn bell_pair_from_spec() {
        let s = sig(2, 1, 1);
        let h = 0.5f64.sqrt();
        let spec = PureStateSpec::new(s, FactorPermutation::identity(1, 1), vec![c(h), c(h)], vec![0], vec![])
            .unwrap();
        let v = build_pure_state(&spec);
        assert!(v.max_abs_diff(&ComplexVector::from_real(&[h, 0.0, 0.0, h])) < 1e-15);
    }

    #[test]
    fn classical_bit_from_spec() {
        let s = sig(2, 1, 0);
        let spec = PureStateSpec::new(s, FactorPermutation::identity(1, 0), vec![c(1.0)], vec![], vec![0])
            .unwrap();
        assert_eq!(build_pure_state(&spec), ComplexVector::basis(2, 0));
    }

    #[test]
    fn one_two_composite_expansion() {
        // √0.3|0⟩|1⟩|1⟩ + √0.7|1⟩|0⟩|1⟩, factor order D A1 A2.
        let s = sig(2, 1, 2);
        let spec = PureStateSpec::new(
            s,
            FactorPermutation::identity(1, 2),
            vec![c(0.3f64.sqrt()), c(0.7f64.sqrt())],
            vec![1],
            vec![1],
        )
        .unwrap();
        let v = build_pure_state(&spec);
        let mut expected = ComplexVector::zeros(8);
        expected.entries_mut()[0b011] = c(0.3f64.sqrt());
        expected.entries_mut()[0b101] = c(0.7f64.sqrt());
        assert!(v.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn spec_errors() {
        let s = sig(2, 1, 1);
        let id = FactorPermutation::identity(1, 1);
        assert!(matches!(
            PureStateSpec::new(s, id.clone(), vec![c(1.0), c(1.0)], vec![0], vec![]),
            Err(Error::Normalization(_))
        ));
        assert!(matches!(
            PureStateSpec::new(s, id.clone(), vec![c(1.0)], vec![0], vec![]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            PureStateSpec::new(s, id, vec![c(1.0), c(0.0)], vec![], vec![]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn validation_examples() {
        let cfg = ValidationConfig::default();
        let h = 0.5f64.sqrt();
        let s = sig(2, 1, 1);
        let phi = ComplexVector::from_real(&[h, 0.0, 0.0, h]);
        let r = validate_pure_state(&phi, &s, &cfg).unwrap();
        assert!(r.valid);
        match r.witness {
            Witness::Pure(spec) => assert_eq!(spec.parity()[0].value(), 0),
            other => panic!("unexpected witness {other:?}"),
        }
        let mixed_parity = ComplexVector::from_real(&[h, h, 0.0, 0.0]);
        assert!(!validate_pure_state(&mixed_parity, &s, &cfg).unwrap().valid);
        let superposed_bits = ComplexVector::from_real(&[h, h, 0.0, 0.0]);
        assert!(!validate_pure_state(&superposed_bits, &sig(2, 2, 0), &cfg).unwrap().valid);
        let unnormalized = ComplexVector::from_real(&[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            validate_pure_state(&unnormalized, &s, &cfg),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn validation_finds_crossed_pairing() {
        // (2,2): D1 paired with A2 and D2 with A1, both parity 0.
        let s = sig(2, 2, 2);
        let dims = s.dims();
        let mut v = ComplexVector::zeros(16);
        for (x0, x1, a) in [(0, 0, 0.6), (1, 0, 0.8)] {
            // digits D1 D2 A1 A2 with A2 = D1, A1 = D2.
            v.entries_mut()[flatten(&[x0, x1, x1, x0], &dims)] = c(a);
        }
        let r = validate_pure_state(&v, &s, &ValidationConfig::default()).unwrap();
        assert!(r.valid, "{r:?}");
        let Witness::Pure(spec) = r.witness else { panic!() };
        let rebuilt = build_pure_state(&spec);
        assert!(rebuilt.max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn basis_state_specs_rebuild() {
        let s = sig(3, 2, 1);
        let digits = [2, 1, 0];
        let spec = PureStateSpec::basis_state(s, &digits).unwrap();
        assert_eq!(
            build_pure_state(&spec),
            ComplexVector::basis(27, flatten(&digits, &s.dims()))
        );
    }

    #[test]
    fn search_bound_is_enforced() {
        let s = sig(2, 4, 1);
        let v = ComplexVector::basis(32, 0);
        assert!(validate_pure_state(&v, &s, &ValidationConfig::default()).is_err());
        let wide = ValidationConfig {
            max_per_kind: 4,
            ..ValidationConfig::default()
        };
        assert!(validate_pure_state(&v, &s, &wide).unwrap().valid);
    }

    #[test]
    fn pairings_are_deduplicated() {
        assert_eq!(distinct_pairings(&sig(2, 2, 2)).len(), 2);
        assert_eq!(distinct_pairings(&sig(2, 1, 1)).len(), 1);
        assert_eq!(distinct_pairings(&sig(2, 1, 3)).len(), 3);
    }
}
