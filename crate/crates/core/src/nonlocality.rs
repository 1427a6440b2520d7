//! Two copies of a dit/anti-dit pair measured across the rewired bipartition
//! Alice = (D1, A2), Bob = (D2, A1): regrouping, simulated quantum
//! statistics, CHSH values and activation of Bell nonlocality.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::effects::{validate_povm, Effect, Povm};
use crate::error::{Error, Result};
use crate::state::{validate_pure_state, PureStateSpec, ValidationConfig, Witness};
use crate::system::{FactorPermutation, ParityIndex, SystemSignature};
use crate::tensor::{inverse_permutation, permute_vector, ComplexOperator, ComplexVector, TensorProduct};

const UNIT_TOL: f64 = 1e-10;

/// `|φ_i^(j)⟩ = |i⟩|i ⊕ j⟩` on a dit/anti-dit pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairedBasis {
    pub i: usize,
    pub j: ParityIndex,
}

impl PairedBasis {
    pub fn new(d: usize, i: usize, j: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::Domain(format!("index {i} out of range for d={d}")));
        }
        Ok(Self {
            i,
            j: ParityIndex::new(j, d)?,
        })
    }

    pub fn vector(&self, d: usize) -> ComplexVector {
        ComplexVector::basis(d * d, self.i * d + (self.i + self.j.value()) % d)
    }
}

pub fn phi_vector(d: usize, i: usize, j: usize) -> Result<ComplexVector> {
    Ok(PairedBasis::new(d, i, j)?.vector(d))
}

/// Factor bookkeeping for two copies of a (1,1) pair.
///
/// Canonical order is `D1 D2 A1 A2`. The measurement layout is
/// `D1 A2 | D2 A1`, Alice's pair first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoCopyWiring {
    d: usize,
    /// Destination of each layout factor in canonical order.
    layout_to_canonical: Vec<usize>,
}

impl TwoCopyWiring {
    pub fn new(d: usize) -> Result<Self> {
        SystemSignature::new(d, 2, 2)?;
        Ok(Self {
            d,
            layout_to_canonical: vec![0, 3, 1, 2],
        })
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn sig(&self) -> SystemSignature {
        SystemSignature::new(self.d, 2, 2).expect("checked in new")
    }

    pub fn layout_to_canonical(&self) -> &[usize] {
        &self.layout_to_canonical
    }

    /// `|ψ⟩_{D1A1} ⊗ |ψ⟩_{D2A2}` in canonical order.
    pub fn two_copies(&self, psi: &ComplexVector) -> Result<ComplexVector> {
        let d = self.d;
        if psi.dim() != d * d {
            return Err(Error::Shape(format!("pair state of dimension {} for d={d}", psi.dim())));
        }
        permute_vector(&psi.tensor(psi), &[d; 4], &[0, 2, 1, 3])
    }

    pub fn from_layout(&self, v: &ComplexVector) -> Result<ComplexVector> {
        permute_vector(v, &[self.d; 4], &self.layout_to_canonical)
    }

    pub fn to_layout(&self, v: &ComplexVector) -> Result<ComplexVector> {
        permute_vector(v, &[self.d; 4], &inverse_permutation(&self.layout_to_canonical))
    }

    /// `P ⊗ Q` with `P` on Alice's pair and `Q` on Bob's, in canonical order.
    pub fn joint_operator(&self, alice: &ComplexOperator, bob: &ComplexOperator) -> Result<ComplexOperator> {
        crate::tensor::permute_operator(&alice.tensor(bob), &[self.d; 4], &self.layout_to_canonical)
    }

    /// `⟨Ψ|P ⊗ Q|Ψ⟩` for a canonical-order vector, contracting the d²×d²
    /// reshaping of `Ψ` instead of forming the product operator.
    pub fn expectation(&self, psi: &ComplexVector, alice: &ComplexOperator, bob: &ComplexOperator) -> Result<f64> {
        let n = self.d * self.d;
        if alice.dim() != n || bob.dim() != n {
            return Err(Error::Shape("local operators must act on one pair".into()));
        }
        let v = self.to_layout(psi)?;
        let m = nalgebra::DMatrix::from_row_slice(n, n, v.entries());
        let applied = alice.as_matrix() * &m * bob.as_matrix().transpose();
        Ok(m.iter().zip(applied.iter()).map(|(a, b)| (a.conj() * b).re).sum())
    }
}

/// Largest entry of `|ψ⟩⊗|ψ⟩ - Σ_{k,l} α_k α_j |φ_k^(l)⟩_{D1A2} |φ_j^(2r⊖l)⟩_{D2A1}`
/// with `j = k ⊕ l ⊖ r`.
pub fn regroup_check(psi: &ComplexVector, d: usize) -> Result<f64> {
    let (alphas, r) = pair_coefficients(psi, d)?;
    let wiring = TwoCopyWiring::new(d)?;
    let lhs = wiring.two_copies(psi)?;
    let mut rhs_layout = ComplexVector::zeros(d.pow(4));
    for k in 0..d {
        for l in 0..d {
            let j = (k + l + d - r) % d;
            let alice = phi_vector(d, k, l)?;
            let bob = phi_vector(d, j, (2 * r + d - l) % d)?;
            let term = alice.tensor(&bob).scale(alphas[k] * alphas[j]);
            rhs_layout = &rhs_layout + &term;
        }
    }
    Ok(lhs.max_abs_diff(&wiring.from_layout(&rhs_layout)?))
}

/// Coefficients `α_i` and parity `r` of a valid (1,1) pure state.
pub fn pair_coefficients(psi: &ComplexVector, d: usize) -> Result<(Vec<Complex64>, usize)> {
    let sig = SystemSignature::new(d, 1, 1)?;
    let report = validate_pure_state(psi, &sig, &ValidationConfig::default())?;
    match report.witness {
        Witness::Pure(spec) if report.valid => Ok((spec.coeffs().to_vec(), spec.parity()[0].value())),
        _ => Err(Error::Validity(format!("not a pure state of the pair: {report}"))),
    }
}

/// An orthonormal basis of C².
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    vectors: [[Complex64; 2]; 2],
}

impl LocalBasis {
    pub fn new(vectors: [[Complex64; 2]; 2]) -> Result<Self> {
        for (a, u) in vectors.iter().enumerate() {
            for (b, w) in vectors.iter().enumerate() {
                let ip = u[0].conj() * w[0] + u[1].conj() * w[1];
                let target = if a == b { 1.0 } else { 0.0 };
                if (ip - target).norm() > UNIT_TOL {
                    return Err(Error::Domain(format!("basis vectors {a},{b} have overlap {ip}")));
                }
            }
        }
        Ok(Self { vectors })
    }

    /// `{(cos t, sin t), (-sin t, cos t)}`.
    pub fn rotation(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        Self {
            vectors: [
                [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
                [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
            ],
        }
    }

    pub fn computational() -> Self {
        Self::rotation(0.0)
    }

    pub fn vectors(&self) -> &[[Complex64; 2]; 2] {
        &self.vectors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Alice,
    Bob,
}

fn bit_pair() -> SystemSignature {
    SystemSignature::new(2, 1, 1).expect("(1,1) over bits")
}

/// `Σ_l |V^(l)⟩⟨V^(l)|` for Alice with `V^(l) = u0|φ_0^(l)⟩ + u1|φ_1^(l)⟩`, or
/// `Σ_l |W^(l)⟩⟨W^(l)|` for Bob with `W^(l) = u0|φ_l^(l)⟩ + u1|φ_(l⊕1)^(l)⟩`.
pub fn side_effect(side: Side, u: [Complex64; 2]) -> Result<Effect> {
    let norm = u[0].norm_sqr() + u[1].norm_sqr();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("basis vector has squared norm {norm}")));
    }
    let sig = bit_pair();
    let mut parts = Vec::with_capacity(2);
    for l in 0..2 {
        // Coefficients indexed by the dit value x of |x⟩|x ⊕ l⟩.
        let coeffs = match side {
            Side::Alice => vec![u[0], u[1]],
            Side::Bob if l == 0 => vec![u[0], u[1]],
            Side::Bob => vec![u[1], u[0]],
        };
        let spec = PureStateSpec::new(sig, FactorPermutation::identity(1, 1), coeffs, vec![l], vec![])?;
        parts.push((1.0, spec));
    }
    Effect::from_certificate(parts)
}

/// Two-outcome measurement of one side in the given basis.
pub fn side_povm(side: Side, basis: &LocalBasis) -> Result<Povm> {
    Povm::new(
        basis
            .vectors
            .iter()
            .map(|u| side_effect(side, *u))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// `|v0 w0 + v1 w1|² / 2`.
pub fn p_quantum(v: [Complex64; 2], w: [Complex64; 2]) -> f64 {
    (v[0] * w[0] + v[1] * w[1]).norm_sqr() / 2.0
}

fn phi_plus() -> ComplexVector {
    ComplexVector::from_real(&[1.0, 0.0, 0.0, 1.0]).scale(Complex64::new(1.0 / SQRT_2, 0.0))
}

/// `p(a,b) = Tr[(P_a ⊗ Q_b)(Φ ⊗ Φ)]`, indexed `[a][b]`.
pub fn two_copy_distribution(alice: &LocalBasis, bob: &LocalBasis) -> Result<[[f64; 2]; 2]> {
    let wiring = TwoCopyWiring::new(2)?;
    let psi = wiring.two_copies(&phi_plus())?;
    let pa = side_povm(Side::Alice, alice)?;
    let qb = side_povm(Side::Bob, bob)?;
    let mut out = [[0.0; 2]; 2];
    for (a, p) in pa.effects().iter().enumerate() {
        for (b, q) in qb.effects().iter().enumerate() {
            out[a][b] = wiring.expectation(&psi, p.op(), q.op())?;
        }
    }
    Ok(out)
}

/// One measurement choice: a basis and the value assigned to each outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub basis: LocalBasis,
    pub values: [f64; 2],
}

impl Setting {
    pub fn rotation(t: f64) -> Self {
        Self {
            basis: LocalBasis::rotation(t),
            values: [1.0, -1.0],
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            values: [-self.values[0], -self.values[1]],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshSettings {
    pub alice: [Setting; 2],
    pub bob: [Setting; 2],
}

impl ChshSettings {
    /// Alice at rotations 0 and π/4, Bob at ±π/8.
    pub fn optimal() -> Self {
        use std::f64::consts::PI;
        Self {
            alice: [Setting::rotation(0.0), Setting::rotation(PI / 4.0)],
            bob: [Setting::rotation(PI / 8.0), Setting::rotation(-PI / 8.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshResult {
    /// `⟨A_i B_j⟩` indexed `[i][j]`.
    pub expectations: [[f64; 2]; 2],
    pub f: f64,
}

impl ChshResult {
    fn from_expectations(e: [[f64; 2]; 2]) -> Self {
        Self {
            expectations: e,
            f: e[0][0] + e[0][1] + e[1][0] - e[1][1],
        }
    }
}

pub fn chsh_value(settings: &ChshSettings) -> Result<ChshResult> {
    let mut e = [[0.0; 2]; 2];
    for (i, a) in settings.alice.iter().enumerate() {
        for (j, b) in settings.bob.iter().enumerate() {
            let p = two_copy_distribution(&a.basis, &b.basis)?;
            e[i][j] = (0..2)
                .flat_map(|x| (0..2).map(move |y| (x, y)))
                .map(|(x, y)| a.values[x] * b.values[y] * p[x][y])
                .sum();
        }
    }
    Ok(ChshResult::from_expectations(e))
}

/// Measurements that activate nonlocality in two copies of
/// `Σ_i α_i |i⟩|i ⊕ r⟩`, built on the two largest coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSetup {
    pub d: usize,
    pub r: ParityIndex,
    /// Indices of the coefficients playing the roles of 0 and 1.
    pub support: (usize, usize),
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub theta: f64,
    /// `A_0, A_1` on (D1, A2); outcome +1 first.
    pub alice: [Povm; 2],
    /// `B_0, B_1` on (D2, A1); outcome +1 first.
    pub bob: [Povm; 2],
}

pub fn activation_setup(alphas: &[Complex64], r: ParityIndex, d: usize) -> Result<ActivationSetup> {
    let sig = SystemSignature::new(d, 1, 1)?;
    if alphas.len() != d || r.value() >= d {
        return Err(Error::Domain(format!("{} coefficients and parity {} for d={d}", alphas.len(), r.value())));
    }
    let norm: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization(format!("coefficients have squared norm {norm}")));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| alphas[b].norm().total_cmp(&alphas[a].norm()).then(a.cmp(&b)));
    let (i0, i1) = (order[0].min(order[1]), order[0].max(order[1]));
    if alphas[i1].norm() <= UNIT_TOL || alphas[i0].norm() <= UNIT_TOL {
        return Err(Error::NotEntangled("fewer than two nonzero coefficients".into()));
    }
    let alpha_prime = alphas[i0].norm_sqr();
    let beta_prime = alphas[i1].norm_sqr();
    let theta = (2.0 * alpha_prime * beta_prime / (alpha_prime.powi(2) + beta_prime.powi(2))).atan();

    let cfg = ValidationConfig::default();
    let up_down = |c_up: f64, c_down: f64| -> Result<Effect> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d];
        // Terms carry the phases of the state's coefficients.
        coeffs[i0] = alphas[i0] / alphas[i0].norm() * c_up;
        coeffs[i1] = alphas[i1] / alphas[i1].norm() * c_down;
        let spec = PureStateSpec::new(sig, FactorPermutation::identity(1, 1), coeffs, vec![r.value()], vec![])?;
        Ok(Effect::pure(&spec))
    };
    let two_outcome = |plus: Effect| -> Result<Povm> {
        let minus = plus.complement(&cfg)?;
        Povm::new(vec![plus, minus])
    };
    let (half_s, half_c) = (theta / 2.0).sin_cos();
    let alice = [
        two_outcome(up_down(1.0, 0.0)?)?,
        two_outcome(up_down(1.0 / SQRT_2, 1.0 / SQRT_2)?)?,
    ];
    let bob = [
        two_outcome(up_down(half_c, half_s)?)?,
        two_outcome(up_down(half_c, -half_s)?)?,
    ];
    for povm in alice.iter().chain(&bob) {
        let report = validate_povm(povm, &cfg)?;
        if !report.valid {
            return Err(Error::Validity(format!("activation measurement rejected: {report}")));
        }
    }
    Ok(ActivationSetup {
        d,
        r,
        support: (i0, i1),
        alpha_prime,
        beta_prime,
        theta,
        alice,
        bob,
    })
}

/// `2 + 2(α'² + β'²)(√(1 + 4α'²β'²/(α'² + β'²)²) - 1)`.
pub fn activation_closed_form(alpha_prime: f64, beta_prime: f64) -> f64 {
    let n = alpha_prime.powi(2) + beta_prime.powi(2);
    if n == 0.0 {
        return 2.0;
    }
    let s = 2.0 * alpha_prime * beta_prime / n;
    2.0 + 2.0 * n * ((1.0 + s * s).sqrt() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationValue {
    pub simulated: ChshResult,
    pub closed: f64,
}

/// CHSH value of the setup on `|ψ⟩⊗|ψ⟩` by the Born rule, next to the
/// closed-form value.
pub fn activation_f(setup: &ActivationSetup, psi: &ComplexVector) -> Result<ActivationValue> {
    let wiring = TwoCopyWiring::new(setup.d)?;
    let state = wiring.two_copies(psi)?;
    let mut e = [[0.0; 2]; 2];
    for (i, a) in setup.alice.iter().enumerate() {
        for (j, b) in setup.bob.iter().enumerate() {
            let mut acc = 0.0;
            for (x, pa) in a.effects().iter().enumerate() {
                for (y, qb) in b.effects().iter().enumerate() {
                    let sign = if x == y { 1.0 } else { -1.0 };
                    acc += sign * wiring.expectation(&state, pa.op(), qb.op())?;
                }
            }
            e[i][j] = acc;
        }
    }
    Ok(ActivationValue {
        simulated: ChshResult::from_expectations(e),
        closed: activation_closed_form(setup.alpha_prime, setup.beta_prime),
    })
}

/// Setup and value for a pair state given as a vector.
pub fn activation_for_state(psi: &ComplexVector, d: usize) -> Result<(ActivationSetup, ActivationValue)> {
    let (alphas, r) = pair_coefficients(psi, d)?;
    let setup = activation_setup(&alphas, ParityIndex::new(r, d)?, d)?;
    let value = activation_f(&setup, psi)?;
    Ok((setup, value))
}

/// `Σ_i α_i |i⟩|i ⊕ r⟩`.
pub fn pair_state(alphas: &[Complex64], r: usize) -> Result<ComplexVector> {
    let d = alphas.len();
    let spec = PureStateSpec::new(
        SystemSignature::new(d, 1, 1)?,
        FactorPermutation::identity(1, 1),
        alphas.to_vec(),
        vec![r],
        vec![],
    )?;
    Ok(crate::state::build_pure_state(&spec))
}
