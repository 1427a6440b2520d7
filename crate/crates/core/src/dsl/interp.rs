use std::collections::HashMap;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::*;
use super::table::{ResultTable, TableMetadata};
use super::DslError;
use crate::dynamics::{build_reversible, classical_channel_map, ClassicalChannel, ReversibleSpec};
use crate::effects::{born_probabilities, conditional_state, witness_povm, worst_case_no_probability, Effect, Povm};
use crate::error::{Error, Result};
use crate::nonlocality::{
    activation_for_state, chsh_value, pair_state, regroup_check, side_povm, ChshSettings, LocalBasis, Setting, Side,
};
use crate::oracle::{brute_force_conditional_check, corrupted_conditional_check};
use crate::state::{
    build_pure_state, build_separable, marginal_state, purify_classical_state, random_density_state, random_pure_spec,
    span_dimensions, validate_mixed_state, validate_pure_state, DensityState, PureStateSpec, PurifyOptions,
    SeparableSpec, ValidationConfig,
};
use crate::system::{FactorPermutation, ParityIndex, SystemSignature};
use crate::tensor::{permute_operator, permute_vector, ComplexOperator, ComplexVector, TensorProduct};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest total dimension `d^(m+n)` a script may declare.
pub const SIZE_CAP: usize = 4096;

/// Largest total dimension for a full computational-basis measurement.
const BASIS_MEASURE_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Default tolerance of `assert` statements.
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertFailure {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub table: ResultTable,
    pub failures: Vec<AssertFailure>,
    /// Output requested by an `emit` statement.
    pub emit: Option<(Format, String)>,
}

#[derive(Debug, Clone)]
struct StateVal {
    rho: DensityState,
    /// State vector when the state is pure.
    pure: Option<ComplexVector>,
}

impl StateVal {
    fn pure(sig: SystemSignature, v: ComplexVector) -> Result<Self> {
        Ok(Self {
            rho: DensityState::from_pure(sig, &v)?,
            pure: Some(v),
        })
    }

    fn mixed(rho: DensityState) -> Self {
        Self { rho, pure: None }
    }
}

#[derive(Debug, Clone)]
enum TransformVal {
    Reversible(Ctor),
    Channel(Vec<Vec<f64>>),
}

struct Interp<'a> {
    cfg: &'a RunConfig,
    vcfg: ValidationConfig,
    rng: ChaCha8Rng,
    systems: HashMap<String, SystemSignature>,
    states: HashMap<String, StateVal>,
    measures: HashMap<String, Povm>,
    transforms: HashMap<String, TransformVal>,
    table: ResultTable,
    failures: Vec<AssertFailure>,
    emit: Option<(Format, String)>,
}

/// Executes the statements in order. Assertion failures are collected in the
/// outcome; any other problem stops the run with the statement's location.
pub fn run_script(script: &Script, cfg: &RunConfig) -> std::result::Result<RunOutcome, DslError> {
    let mut it = Interp {
        cfg,
        vcfg: ValidationConfig::default(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        systems: HashMap::new(),
        states: HashMap::new(),
        measures: HashMap::new(),
        transforms: HashMap::new(),
        table: ResultTable::new(TableMetadata {
            script: script.name.clone(),
            seed: cfg.seed,
            tolerance: cfg.tolerance,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }),
        failures: Vec::new(),
        emit: None,
    };
    for stmt in &script.statements {
        it.statement(stmt).map_err(|e| match e {
            Fail::Dsl(e) => e,
            Fail::Engine(e) => DslError::domain(stmt.span, e.to_string()),
        })?;
    }
    Ok(RunOutcome {
        table: it.table,
        failures: it.failures,
        emit: it.emit,
    })
}

enum Fail {
    Dsl(DslError),
    Engine(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Engine(e)
    }
}

impl From<DslError> for Fail {
    fn from(e: DslError) -> Self {
        Fail::Dsl(e)
    }
}

type Step<T> = std::result::Result<T, Fail>;

fn bad(span: Span, msg: impl Into<String>) -> Fail {
    Fail::Dsl(DslError::domain(span, msg))
}

fn arg<'v>(args: &'v [Arg], key: &str) -> Option<&'v Arg> {
    args.iter().find(|a| a.key.name == key)
}

fn as_f64(a: &Arg, v: &Value) -> Step<f64> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Float(x) => Ok(*x),
        Value::Angle { num, den } => Ok(num * std::f64::consts::PI / den),
        _ => Err(bad(a.span, format!("`{}` expects a number", a.key.name))),
    }
}

fn as_usize(a: &Arg, v: &Value) -> Step<usize> {
    match v {
        Value::Int(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(bad(a.span, format!("`{}` expects a non-negative integer", a.key.name))),
    }
}

fn as_list<'v>(a: &Arg, v: &'v Value) -> Step<&'v [Value]> {
    match v {
        Value::List(items) => Ok(items),
        _ => Err(bad(a.span, format!("`{}` expects a list", a.key.name))),
    }
}

fn num(args: &[Arg], key: &str) -> Step<Option<f64>> {
    arg(args, key).map(|a| as_f64(a, &a.value)).transpose()
}

fn int(args: &[Arg], key: &str) -> Step<Option<usize>> {
    arg(args, key).map(|a| as_usize(a, &a.value)).transpose()
}

fn nums(args: &[Arg], key: &str) -> Step<Option<Vec<f64>>> {
    arg(args, key)
        .map(|a| as_list(a, &a.value)?.iter().map(|v| as_f64(a, v)).collect())
        .transpose()
}

fn ints(args: &[Arg], key: &str) -> Step<Option<Vec<usize>>> {
    arg(args, key)
        .map(|a| as_list(a, &a.value)?.iter().map(|v| as_usize(a, v)).collect())
        .transpose()
}

fn matrix(args: &[Arg], key: &str) -> Step<Option<Vec<Vec<f64>>>> {
    arg(args, key)
        .map(|a| {
            as_list(a, &a.value)?
                .iter()
                .map(|row| as_list(a, row)?.iter().map(|v| as_f64(a, v)).collect())
                .collect()
        })
        .transpose()
}

fn word<'v>(args: &'v [Arg], key: &str) -> Step<Option<&'v str>> {
    arg(args, key)
        .map(|a| match &a.value {
            Value::Word(id) => Ok(id.name.as_str()),
            _ => Err(bad(a.span, format!("`{}` expects a name", a.key.name))),
        })
        .transpose()
}

fn flag(args: &[Arg], key: &str) -> Step<bool> {
    match arg(args, key) {
        None => Ok(false),
        Some(a) => match &a.value {
            Value::Word(id) if id.name == "true" => Ok(true),
            Value::Word(id) if id.name == "false" => Ok(false),
            Value::Int(0) => Ok(false),
            Value::Int(1) => Ok(true),
            _ => Err(bad(a.span, format!("`{}` expects true or false", a.key.name))),
        },
    }
}

fn required<T>(v: Option<T>, at: Span, key: &str) -> Step<T> {
    v.ok_or_else(|| bad(at, format!("missing `{key}`")))
}

fn normalized(coeffs: Vec<Complex64>, at: Span) -> Step<Vec<Complex64>> {
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return Err(bad(at, "coefficients are all zero"));
    }
    Ok(coeffs.into_iter().map(|c| c / norm).collect())
}

fn with_phases(amps: Vec<f64>, phases: Option<Vec<f64>>, at: Span) -> Step<Vec<Complex64>> {
    let phases = phases.unwrap_or_else(|| vec![0.0; amps.len()]);
    if phases.len() != amps.len() {
        return Err(bad(at, format!("{} phases for {} coefficients", phases.len(), amps.len())));
    }
    normalized(
        amps.iter().zip(&phases).map(|(&a, &t)| Complex64::from_polar(a, t)).collect(),
        at,
    )
}

fn bit_pair(sig: &SystemSignature, what: &str, at: Span) -> Step<()> {
    if *sig != SystemSignature::new(2, 1, 1)? {
        return Err(bad(at, format!("{what} needs a composite(d=2, bits=1, antibits=1), got {sig}")));
    }
    Ok(())
}

fn bool_value(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Interp<'_> {
    fn statement(&mut self, stmt: &Statement) -> Step<()> {
        let at = stmt.span;
        match &stmt.kind {
            StmtKind::System { id, ctor } => {
                let d = required(int(&ctor.args, "d")?, at, "d")?;
                let m = required(int(&ctor.args, "bits")?, at, "bits")?;
                let n = required(int(&ctor.args, "antibits")?, at, "antibits")?;
                let dim = (d as u128).checked_pow((m + n) as u32);
                if dim.is_none_or(|x| x > SIZE_CAP as u128) {
                    return Err(bad(
                        at,
                        format!("size cap: d^(m+n) = {d}^{} exceeds {SIZE_CAP}", m + n),
                    ));
                }
                self.systems.insert(id.name.clone(), SystemSignature::new(d, m, n)?);
            }
            StmtKind::State { id, init } => {
                let value = match init {
                    StateInit::Ctor { ctor, on } => {
                        let sig = self.systems[&on.name];
                        self.state(ctor, sig, at)?
                    }
                    StateInit::Product(a, b) => self.product(&self.states[&a.name], &self.states[&b.name], at)?,
                };
                self.states.insert(id.name.clone(), value);
            }
            StmtKind::Measure { id, ctor, on } => {
                let sig = self.systems[&on.name];
                let povm = self.measure(ctor, sig, at)?;
                self.measures.insert(id.name.clone(), povm);
            }
            StmtKind::Transform { id, ctor } => {
                let t = match ctor.name.name.as_str() {
                    "reversible" => TransformVal::Reversible(ctor.clone()),
                    _ => TransformVal::Channel(required(matrix(&ctor.args, "table")?, at, "table")?),
                };
                self.transforms.insert(id.name.clone(), t);
            }
            StmtKind::Run { kind, args, name } => {
                let label = Script::run_label(*kind, name);
                let rows = self.run(*kind, args, at)?;
                for (q, v) in rows {
                    self.table.push(&label, &q, v);
                }
            }
            StmtKind::Assert {
                lhs,
                cmp,
                expected,
                tol,
            } => {
                let Some(actual) = self.table.get(&lhs.run.name, &lhs.name.name) else {
                    return Err(bad(
                        lhs.name.span,
                        format!("run `{}` has no quantity `{}`", lhs.run.name, lhs.name.name),
                    ));
                };
                let tol = tol.unwrap_or(self.cfg.tolerance);
                let ok = match cmp {
                    Cmp::Eq => (actual - expected).abs() <= tol,
                    Cmp::Le => actual <= expected + tol,
                    Cmp::Ge => actual >= expected - tol,
                    Cmp::Lt => actual < *expected,
                    Cmp::Gt => actual > *expected,
                };
                if !ok {
                    self.failures.push(AssertFailure {
                        span: at,
                        message: format!(
                            "assertion failed: {}.{} = {actual:?}, expected {} {expected:?} (tol {tol:e})",
                            lhs.run.name,
                            lhs.name.name,
                            cmp.symbol()
                        ),
                    });
                }
            }
            StmtKind::Emit { format, path } => {
                self.emit = Some((*format, path.clone()));
            }
        }
        Ok(())
    }

    fn state(&mut self, ctor: &Ctor, sig: SystemSignature, at: Span) -> Step<StateVal> {
        let a = &ctor.args;
        let d = sig.local_dim();
        Ok(match ctor.name.name.as_str() {
            "entpair" => {
                bit_pair(&sig, "entpair", at)?;
                let p = required(num(a, "p")?, at, "p")?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(bad(at, format!("entpair weight p = {p} is out of range (0,1)")));
                }
                let k = int(a, "parity")?.unwrap_or(0);
                let spec = crate::effects::witness_target(p, ParityIndex::new(k, 2)?)?;
                StateVal::pure(sig, build_pure_state(&spec))?
            }
            "basis" => {
                let digits = required(ints(a, "digits")?, at, "digits")?;
                let spec = PureStateSpec::basis_state(sig, &digits)?;
                StateVal::pure(sig, build_pure_state(&spec))?
            }
            "pure" => {
                let spec = self.pure_spec(a, sig, at)?;
                StateVal::pure(sig, build_pure_state(&spec))?
            }
            "pair" => {
                let alphas = required(nums(a, "alphas")?, at, "alphas")?;
                if sig.classical() != 1 || sig.anticlassical() != 1 || alphas.len() != d {
                    return Err(bad(at, format!("pair needs a (1,1) composite with d = {} coefficients, got {sig}", alphas.len())));
                }
                let coeffs = with_phases(alphas, nums(a, "phases")?, at)?;
                StateVal::pure(sig, pair_state(&coeffs, int(a, "r")?.unwrap_or(0))?)?
            }
            "classical" => {
                let probs = required(nums(a, "probs")?, at, "probs")?;
                StateVal::mixed(DensityState::classical(sig, &probs)?)
            }
            "separable" => {
                let gamma = required(nums(a, "gamma")?, at, "gamma")?;
                StateVal::mixed(build_separable(&SeparableSpec::Diagonal(gamma), &sig)?)
            }
            _ => match int(a, "rank")? {
                None => StateVal::pure(sig, build_pure_state(&random_pure_spec(&sig, &mut self.rng)))?,
                Some(rank) => StateVal::mixed(random_density_state(&sig, rank, &mut self.rng)),
            },
        })
    }

    fn pure_spec(&self, a: &[Arg], sig: SystemSignature, at: Span) -> Step<PureStateSpec> {
        let coeffs = with_phases(required(nums(a, "coeffs")?, at, "coeffs")?, nums(a, "phases")?, at)?;
        let k = sig.paired();
        let sigma = ints(a, "sigma")?.unwrap_or_else(|| (0..sig.classical()).collect());
        let tau = ints(a, "tau")?.unwrap_or_else(|| (0..sig.anticlassical()).collect());
        let parity = ints(a, "parity")?.unwrap_or_else(|| vec![0; k]);
        let tail = ints(a, "tail")?.unwrap_or_else(|| vec![0; sig.classical().abs_diff(sig.anticlassical())]);
        Ok(PureStateSpec::new(sig, FactorPermutation::new(sigma, tau)?, coeffs, parity, tail)?)
    }

    /// `A ⊗ B` with the factors reordered to dits first.
    fn product(&self, a: &StateVal, b: &StateVal, at: Span) -> Step<StateVal> {
        let (sa, sb) = (*a.rho.sig(), *b.rho.sig());
        if sa.local_dim() != sb.local_dim() {
            return Err(bad(at, format!("cannot combine {sa} and {sb}: local dimensions differ")));
        }
        let (m1, n1, m2, n2) = (sa.classical(), sa.anticlassical(), sb.classical(), sb.anticlassical());
        let d = sa.local_dim();
        if (d as u128).pow((m1 + n1 + m2 + n2) as u32) > SIZE_CAP as u128 {
            return Err(bad(at, format!("size cap: product exceeds {SIZE_CAP}")));
        }
        let sig = SystemSignature::new(d, m1 + m2, n1 + n2)?;
        let perm: Vec<usize> = (0..m1)
            .chain((0..n1).map(|j| m1 + m2 + j))
            .chain((0..m2).map(|i| m1 + i))
            .chain((0..n2).map(|j| m1 + m2 + n1 + j))
            .collect();
        let dims = vec![d; perm.len()];
        Ok(match (&a.pure, &b.pure) {
            (Some(u), Some(v)) => StateVal::pure(sig, permute_vector(&u.tensor(v), &dims, &perm)?)?,
            _ => {
                let op = permute_operator(&a.rho.matrix().tensor(b.rho.matrix()), &dims, &perm)?;
                StateVal::mixed(DensityState::new(sig, op)?)
            }
        })
    }

    fn measure(&mut self, ctor: &Ctor, sig: SystemSignature, at: Span) -> Step<Povm> {
        let a = &ctor.args;
        Ok(match ctor.name.name.as_str() {
            "basis" => {
                let dim = sig.total_dim();
                if dim > BASIS_MEASURE_CAP {
                    return Err(bad(at, format!("basis measurement limited to dimension {BASIS_MEASURE_CAP}, {sig} has {dim}")));
                }
                let dims = sig.dims();
                let effects = (0..dim)
                    .map(|i| {
                        let digits = crate::tensor::unflatten(i, &dims);
                        Ok(Effect::pure(&PureStateSpec::basis_state(sig, &digits)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Povm::new(effects)?
            }
            "unit" => Povm::new(vec![Effect::unit(sig)])?,
            "witness" => {
                bit_pair(&sig, "witness", at)?;
                let p = required(num(a, "p")?, at, "p")?;
                witness_povm(p, ParityIndex::new(int(a, "parity")?.unwrap_or(0), 2)?)?
            }
            "projector" => {
                let e = Effect::pure(&self.pure_spec(a, sig, at)?);
                let rest = e.complement(&self.vcfg)?;
                Povm::new(vec![e, rest])?
            }
            _ => {
                bit_pair(&sig, "side", at)?;
                let side = match required(word(a, "side")?, at, "side")? {
                    "alice" => Side::Alice,
                    "bob" => Side::Bob,
                    other => return Err(bad(at, format!("side must be alice or bob, got `{other}`"))),
                };
                let t = required(num(a, "angle")?, at, "angle")?;
                side_povm(side, &LocalBasis::rotation(t))?
            }
        })
    }

    fn transformed(&self, rho: &DensityState, t: &TransformVal, at: Span) -> Step<DensityState> {
        let sig = *rho.sig();
        match t {
            TransformVal::Channel(table) => {
                let ch = ClassicalChannel::new(sig, sig, table.clone())?;
                Ok(classical_channel_map(&ch, rho)?)
            }
            TransformVal::Reversible(ctor) => {
                let a = &ctor.args;
                let id = ReversibleSpec::identity(&sig);
                let sigma = ints(a, "sigma")?.unwrap_or(id.perm.sigma.clone());
                let tau = ints(a, "tau")?.unwrap_or(id.perm.tau.clone());
                let spec = ReversibleSpec {
                    perm: FactorPermutation::new(sigma, tau)?,
                    x_shifts: ints(a, "x")?.unwrap_or(id.x_shifts),
                    z_phases: ints(a, "z")?,
                };
                let u = build_reversible(&spec, &sig).map_err(|e| match e {
                    Error::Shape(m) | Error::Domain(m) => bad(at, m),
                    e => Fail::Engine(e),
                })?;
                let out: ComplexOperator = &(&u * rho.matrix()) * &u.adjoint();
                Ok(DensityState::new(sig, out)?)
            }
        }
    }

    fn state_ref(&self, args: &[Arg], at: Span) -> Step<&StateVal> {
        let name = required(word(args, "state")?, at, "state")?;
        Ok(&self.states[name])
    }

    fn pure_pair(&self, args: &[Arg], at: Span, what: &str) -> Step<(ComplexVector, usize)> {
        let s = self.state_ref(args, at)?;
        let sig = s.rho.sig();
        match &s.pure {
            Some(v) if sig.classical() == 1 && sig.anticlassical() == 1 => Ok((v.clone(), sig.local_dim())),
            _ => Err(bad(at, format!("{what} needs a pure state of a (1,1) composite"))),
        }
    }

    fn run(&mut self, kind: RunKind, a: &[Arg], at: Span) -> Step<Vec<(String, f64)>> {
        let mut rows: Vec<(String, f64)> = Vec::new();
        let mut put = |q: &str, v: f64| rows.push((q.to_string(), v));
        match kind {
            RunKind::Born => {
                let mut rho = self.state_ref(a, at)?.rho.clone();
                if let Some(t) = word(a, "transform")? {
                    rho = self.transformed(&rho, &self.transforms[t], at)?;
                }
                let povm = &self.measures[required(word(a, "measure")?, at, "measure")?];
                for (i, p) in born_probabilities(povm, &rho)?.into_iter().enumerate() {
                    put(&format!("p{i}"), p);
                }
            }
            RunKind::Chsh => {
                let opt = ChshSettings::optimal();
                let setting = |key: &str, default: &Setting| -> Step<Setting> {
                    Ok(num(a, key)?.map(Setting::rotation).unwrap_or_else(|| default.clone()))
                };
                let settings = ChshSettings {
                    alice: [setting("alice0", &opt.alice[0])?, setting("alice1", &opt.alice[1])?],
                    bob: [setting("bob0", &opt.bob[0])?, setting("bob1", &opt.bob[1])?],
                };
                let r = chsh_value(&settings)?;
                for i in 0..2 {
                    for j in 0..2 {
                        put(&format!("E{i}{j}"), r.expectations[i][j]);
                    }
                }
                put("F", r.f);
            }
            RunKind::Activation => {
                let (psi, d) = self.pure_pair(a, at, "activation")?;
                let (setup, value) = activation_for_state(&psi, d)?;
                put("alpha_prime", setup.alpha_prime);
                put("beta_prime", setup.beta_prime);
                put("theta", setup.theta);
                put("F_simulated", value.simulated.f);
                put("F_closed", value.closed);
            }
            RunKind::Witness => {
                let p = required(num(a, "p")?, at, "p")?;
                let grid = num(a, "grid")?.unwrap_or(0.01);
                let worst = worst_case_no_probability(p, grid)?;
                put("min_p_no", worst.min_p_no);
                put("bound", p.min(1.0 - p));
                if let Some(name) = word(a, "state")? {
                    let rho = &self.states[name].rho;
                    bit_pair(rho.sig(), "witness", at)?;
                    let povm = witness_povm(p, ParityIndex::new(int(a, "parity")?.unwrap_or(0), 2)?)?;
                    let probs = born_probabilities(&povm, rho)?;
                    put("p_yes", probs[0]);
                    put("p_no", probs[1]);
                }
            }
            RunKind::Conditional => {
                let rho = self.state_ref(a, at)?.rho.clone();
                let povm = &self.measures[required(word(a, "measure")?, at, "measure")?];
                let targets = required(ints(a, "targets")?, at, "targets")?;
                for (i, e) in povm.effects().iter().enumerate() {
                    let c = conditional_state(&rho, e, &targets)?;
                    put(&format!("p{i}"), c.prob);
                    if let Some(post) = c.post {
                        let report = validate_mixed_state(&post, None, &self.vcfg)?;
                        put(&format!("valid{i}"), bool_value(report.valid));
                    }
                }
            }
            RunKind::Span => {
                let sig = self.systems[required(word(a, "system")?, at, "system")?];
                let dims = span_dimensions(&sig)?;
                put("product_dim", dims.product as f64);
                put("state_dim", dims.state as f64);
            }
            RunKind::Purify => {
                let rho = &self.state_ref(a, at)?.rho;
                let m = rho.sig().classical();
                let n = int(a, "antibits")?.unwrap_or(m);
                let spec = purify_classical_state(rho, n, &PurifyOptions::default())?;
                let v = build_pure_state(&spec);
                let whole = DensityState::from_spec(&spec);
                let keep: Vec<usize> = (0..m).collect();
                let marginal = marginal_state(&whole, &keep)?;
                put("marginal_error", marginal.matrix().max_abs_diff(rho.matrix()));
                put("valid", bool_value(validate_pure_state(&v, spec.sig(), &self.vcfg)?.valid));
            }
            RunKind::Consistency => {
                let sig = self.systems[required(word(a, "system")?, at, "system")?];
                let trials = int(a, "trials")?.unwrap_or(1000);
                let seed = self.rng.next_u64();
                let report = brute_force_conditional_check(trials, &sig, seed)?;
                put("trials", report.trials as f64);
                put("branches", report.branches as f64);
                put("failures", report.failures as f64);
                put("engine_gap", report.max_engine_gap);
                if flag(a, "control")? {
                    let control = corrupted_conditional_check(trials, &sig, self.rng.next_u64())?;
                    put("control_failures", control.failures as f64);
                }
            }
            RunKind::Regroup => {
                let (psi, d) = self.pure_pair(a, at, "regroup")?;
                put("residual", regroup_check(&psi, d)?);
            }
        }
        Ok(rows)
    }
}
