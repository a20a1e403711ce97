//! Pseudo-Boolean benchmark problems and their instance transformations.
//!
//! A problem instance returns `a * f(sigma(x xor z)) + b` to the algorithm.
//! Instance 1 is always the untransformed problem; instances 2..=50 apply an
//! XOR mask, instances 51..=100 a permutation, both followed by the
//! scale/shift pair. Higher instance ids are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rng::{mix_seed, tags, SeededGenerator};

pub const ONEMAX: u32 = 1;
pub const LEADING_ONES: u32 = 2;
pub const JUMP: u32 = 3;
pub const LINEAR: u32 = 4;

/// Gap size used by the built-in Jump problem.
pub const JUMP_GAP: usize = 1;

pub const MAX_INSTANCE: u32 = 100;
const LAST_XOR_INSTANCE: u32 = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuiteError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("entry {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("jump size {k} out of range 1..={n}")]
    JumpSize { k: usize, n: usize },
    #[error("invalid permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("unknown function id {0}")]
    UnknownFunction(u32),
    #[error("function id {0} is already registered")]
    DuplicateFunction(u32),
    #[error("instance id {0} out of range 1..={MAX_INSTANCE}")]
    InstanceOutOfRange(u32),
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

pub type Result<T> = std::result::Result<T, SuiteError>;

fn ones(x: &[u8]) -> usize {
    x.iter().filter(|&&b| b == 1).count()
}

/// Number of one-entries.
pub fn onemax(x: &[u8]) -> f64 {
    ones(x) as f64
}

/// Length of the longest all-ones prefix.
pub fn leading_ones(x: &[u8]) -> f64 {
    x.iter().take_while(|&&b| b == 1).count() as f64
}

/// Jump with gap size `k`: `k + |x|` at the optimum and for `|x| <= n - k`,
/// `n - |x|` inside the gap.
pub fn jump(x: &[u8], k: usize) -> Result<f64> {
    let n = x.len();
    if k < 1 || k > n {
        return Err(SuiteError::JumpSize { k, n });
    }
    let m = ones(x);
    Ok(if m == n || m <= n - k {
        (k + m) as f64
    } else {
        (n - m) as f64
    })
}

/// Weighted sum `sum_i w_i x_i`.
pub fn linear(x: &[u8], weights: &[f64]) -> Result<f64> {
    if weights.len() != x.len() {
        return Err(SuiteError::DimensionMismatch { expected: weights.len(), actual: x.len() });
    }
    Ok(x.iter().zip(weights).map(|(&b, &w)| if b == 1 { w } else { 0.0 }).sum())
}

/// Component-wise `(x_i + z_i) mod 2`.
pub fn xor_shift(x: &[u8], z: &[u8]) -> Result<Vec<u8>> {
    if x.len() != z.len() {
        return Err(SuiteError::DimensionMismatch { expected: z.len(), actual: x.len() });
    }
    Ok(x.iter().zip(z).map(|(&a, &b)| (a ^ b) & 1).collect())
}

pub fn is_permutation(sigma: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len()];
    for &s in sigma {
        if s >= sigma.len() || seen[s] {
            return false;
        }
        seen[s] = true;
    }
    true
}

/// Reorders `x` so that `y_i = x_{sigma(i)}`.
pub fn permute<T: Copy>(x: &[T], sigma: &[usize]) -> Result<Vec<T>> {
    if x.len() != sigma.len() {
        return Err(SuiteError::DimensionMismatch { expected: sigma.len(), actual: x.len() });
    }
    if !is_permutation(sigma) {
        return Err(SuiteError::InvalidPermutation(sigma.len()));
    }
    Ok(sigma.iter().map(|&s| x[s]).collect())
}

pub fn inverse_permutation(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; sigma.len()];
    for (i, &s) in sigma.iter().enumerate() {
        inv[s] = i;
    }
    inv
}

#[inline]
pub fn scale_and_shift(v: f64, a: f64, b: f64) -> f64 {
    a * v + b
}

pub type Evaluator = Arc<dyn Fn(&[u8]) -> f64 + Send + Sync>;
pub type ProblemFactory = Arc<dyn Fn(usize) -> Problem + Send + Sync>;

/// A named objective over `{0,1}^n`, maximized.
#[derive(Clone)]
pub struct Problem {
    pub function_id: u32,
    pub name: String,
    pub dimension: usize,
    evaluator: Evaluator,
    /// Largest attainable raw value, when known.
    pub optimum_value: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("function_id", &self.function_id)
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("optimum_value", &self.optimum_value)
            .finish()
    }
}

impl Problem {
    pub fn new(
        function_id: u32,
        name: impl Into<String>,
        dimension: usize,
        evaluator: Evaluator,
        optimum_value: Option<f64>,
    ) -> Self {
        Problem { function_id, name: name.into(), dimension, evaluator, optimum_value }
    }

    pub fn evaluate_raw(&self, x: &[u8]) -> Result<f64> {
        check_bits(x, self.dimension)?;
        Ok((self.evaluator)(x))
    }
}

fn check_bits(x: &[u8], dimension: usize) -> Result<()> {
    if x.len() != dimension {
        return Err(SuiteError::DimensionMismatch { expected: dimension, actual: x.len() });
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, &b)| b > 1) {
        return Err(SuiteError::NotBinary { index, value });
    }
    Ok(())
}

/// Weights of the built-in linear function for one dimension, uniform in `[0, 5)`.
pub fn linear_weights(dimension: usize) -> Vec<f64> {
    let mut g = SeededGenerator::new(mix_seed(&[tags::WEIGHTS, LINEAR as u64, dimension as u64]));
    (0..dimension).map(|_| g.range(0.0, 5.0)).collect()
}

/// The deterministic transformation tuple of one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub instance_id: u32,
    pub xor_mask: Vec<u8>,
    pub permutation: Vec<usize>,
    pub scale: f64,
    pub shift: f64,
}

impl InstanceSpec {
    pub fn identity(instance_id: u32, dimension: usize) -> Self {
        InstanceSpec {
            instance_id,
            xor_mask: vec![0; dimension],
            permutation: (0..dimension).collect(),
            scale: 1.0,
            shift: 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0
            && self.shift == 0.0
            && self.xor_mask.iter().all(|&b| b == 0)
            && self.permutation.iter().enumerate().all(|(i, &s)| i == s)
    }
}

/// Uniform draw in `[-1000, 1000)` keyed by `(function_id, key)`.
pub fn compute_fopt(function_id: u32, key: u32) -> f64 {
    let mut g = SeededGenerator::new(mix_seed(&[tags::FOPT, function_id as u64, key as u64]));
    g.range(-1000.0, 1000.0)
}

/// First `dimension` uniform draws of the search-space stream for
/// `(function_id, instance_id)`.
fn compute_xopt(function_id: u32, instance_id: u32, dimension: usize) -> Vec<f64> {
    let mut g = SeededGenerator::new(mix_seed(&[tags::XOPT, function_id as u64, instance_id as u64]));
    (0..dimension).map(|_| g.uniform()).collect()
}

/// Swap loop: for each draw `u_i`, exchange `sigma[0]` with `sigma[floor(u_i * n)]`.
fn permutation_from_draws(draws: &[f64]) -> Vec<usize> {
    let n = draws.len();
    let mut sigma: Vec<usize> = (0..n).collect();
    for &u in draws {
        let t = ((u * n as f64) as usize).min(n - 1);
        sigma.swap(0, t);
    }
    sigma
}

/// Builds the transformation tuple for `(function_id, instance_id, dimension)`.
pub fn instance_spec(function_id: u32, instance_id: u32, dimension: usize) -> Result<InstanceSpec> {
    if dimension == 0 {
        return Err(SuiteError::ZeroDimension);
    }
    if instance_id == 0 || instance_id > MAX_INSTANCE {
        return Err(SuiteError::InstanceOutOfRange(instance_id));
    }
    if instance_id == 1 {
        return Ok(InstanceSpec::identity(1, dimension));
    }
    let draws = compute_xopt(function_id, instance_id, dimension);
    let (xor_mask, permutation) = if instance_id <= LAST_XOR_INSTANCE {
        let z = draws.iter().map(|&u| (u * 2.0) as u8).collect();
        (z, (0..dimension).collect())
    } else {
        (vec![0; dimension], permutation_from_draws(&draws))
    };
    let scale = compute_fopt(function_id, instance_id + 100).abs() / 1000.0 * 4.8 + 0.2;
    let shift = compute_fopt(function_id, instance_id);
    Ok(InstanceSpec { instance_id, xor_mask, permutation, scale, shift })
}

/// A problem together with its instance transformation.
#[derive(Clone, Debug)]
pub struct InstancedProblem {
    pub problem: Problem,
    pub spec: InstanceSpec,
}

/// Raw and transformed value of one evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub raw: f64,
    pub transformed: f64,
}

impl InstancedProblem {
    pub fn dimension(&self) -> usize {
        self.problem.dimension
    }

    pub fn evaluate(&self, x: &[u8]) -> Result<Evaluation> {
        check_bits(x, self.problem.dimension)?;
        let shifted = xor_shift(x, &self.spec.xor_mask)?;
        let permuted = permute(&shifted, &self.spec.permutation)?;
        let raw = (self.problem.evaluator)(&permuted);
        Ok(Evaluation { raw, transformed: scale_and_shift(raw, self.spec.scale, self.spec.shift) })
    }
}

#[derive(Clone)]
struct Registration {
    name: String,
    factory: ProblemFactory,
}

/// Registry of addressable problems; ids 1-4 are pre-registered.
#[derive(Clone)]
pub struct Suite {
    name: String,
    problems: BTreeMap<u32, Registration>,
}

impl fmt::Debug for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Suite")
            .field("name", &self.name)
            .field("functions", &self.problems.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Default for Suite {
    fn default() -> Self {
        Suite::pbo()
    }
}

impl Suite {
    /// Empty suite without built-ins.
    pub fn empty(name: impl Into<String>) -> Self {
        Suite { name: name.into(), problems: BTreeMap::new() }
    }

    /// The PBO suite: OneMax, LeadingOnes, Jump (k = 1) and Linear.
    pub fn pbo() -> Self {
        let mut s = Suite::empty("PBO");
        s.register_factory(ONEMAX, "OneMax", |n| {
            Problem::new(ONEMAX, "OneMax", n, Arc::new(onemax), Some(n as f64))
        })
        .expect("fresh suite");
        s.register_factory(LEADING_ONES, "LeadingOnes", |n| {
            Problem::new(LEADING_ONES, "LeadingOnes", n, Arc::new(leading_ones), Some(n as f64))
        })
        .expect("fresh suite");
        s.register_factory(JUMP, "Jump", |n| {
            let k = JUMP_GAP.min(n);
            let eval = move |x: &[u8]| jump(x, k).expect("gap within dimension");
            Problem::new(JUMP, "Jump", n, Arc::new(eval), Some((n + k) as f64))
        })
        .expect("fresh suite");
        s.register_factory(LINEAR, "Linear", |n| {
            let w = linear_weights(n);
            let optimum = w.iter().sum();
            let eval = move |x: &[u8]| linear(x, &w).expect("length checked by problem");
            Problem::new(LINEAR, "Linear", n, Arc::new(eval), Some(optimum))
        })
        .expect("fresh suite");
        s
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn function_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.problems.keys().copied()
    }

    pub fn contains(&self, function_id: u32) -> bool {
        self.problems.contains_key(&function_id)
    }

    pub fn function_name(&self, function_id: u32) -> Option<&str> {
        self.problems.get(&function_id).map(|r| r.name.as_str())
    }

    /// Registers a dimension-dependent problem constructor.
    pub fn register_factory<F>(&mut self, function_id: u32, name: &str, factory: F) -> Result<()>
    where
        F: Fn(usize) -> Problem + Send + Sync + 'static,
    {
        if self.problems.contains_key(&function_id) {
            return Err(SuiteError::DuplicateFunction(function_id));
        }
        self.problems
            .insert(function_id, Registration { name: name.to_string(), factory: Arc::new(factory) });
        Ok(())
    }

    /// Registers a problem defined by a plain evaluator, valid for any dimension.
    pub fn register_problem<F>(&mut self, function_id: u32, name: &str, evaluator: F) -> Result<()>
    where
        F: Fn(&[u8]) -> f64 + Send + Sync + 'static,
    {
        let evaluator: Evaluator = Arc::new(evaluator);
        let owned = name.to_string();
        self.register_factory(function_id, name, move |n| {
            Problem::new(function_id, owned.clone(), n, evaluator.clone(), None)
        })
    }

    pub fn problem(&self, function_id: u32, dimension: usize) -> Result<Problem> {
        if dimension == 0 {
            return Err(SuiteError::ZeroDimension);
        }
        let reg = self.problems.get(&function_id).ok_or(SuiteError::UnknownFunction(function_id))?;
        Ok((reg.factory)(dimension))
    }

    pub fn make_instance(&self, function_id: u32, instance_id: u32, dimension: usize) -> Result<InstancedProblem> {
        let problem = self.problem(function_id, dimension)?;
        let spec = instance_spec(function_id, instance_id, dimension)?;
        Ok(InstancedProblem { problem, spec })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_points(n: usize) -> impl Iterator<Item = Vec<u8>> {
        (0u32..(1 << n)).map(move |m| (0..n).map(|i| ((m >> i) & 1) as u8).collect())
    }

    #[test]
    fn onemax_examples() {
        assert_eq!(onemax(&[1, 1, 1, 1]), 4.0);
        assert_eq!(onemax(&[0, 0, 0]), 0.0);
        assert_eq!(onemax(&[1, 0, 1, 1, 0]), 3.0);
    }

    #[test]
    fn leading_ones_examples() {
        assert_eq!(leading_ones(&[1, 1, 0, 1]), 2.0);
        assert_eq!(leading_ones(&[0, 1, 1, 1]), 0.0);
        assert_eq!(leading_ones(&[1, 1, 1]), 3.0);
    }

    #[test]
    fn jump_examples() {
        assert_eq!(jump(&[1, 1, 1, 1], 1).unwrap(), 5.0);
        assert_eq!(jump(&[0, 0, 0, 0], 1).unwrap(), 1.0);
        assert_eq!(jump(&[1, 1, 1, 1, 0], 2).unwrap(), 1.0);
        assert!(matches!(jump(&[1, 0], 3), Err(SuiteError::JumpSize { .. })));
        assert!(matches!(jump(&[1, 0], 0), Err(SuiteError::JumpSize { .. })));
    }

    #[test]
    fn jump_with_unit_gap_is_onemax_plus_one() {
        for x in all_points(6) {
            assert_eq!(jump(&x, 1).unwrap(), onemax(&x) + 1.0);
        }
    }

    #[test]
    fn linear_examples() {
        assert_eq!(linear(&[1, 0, 1], &[1.0, 1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(linear(&[0, 0, 0], &[3.3, 1.2, 4.4]).unwrap(), 0.0);
        assert!((linear(&[1, 0, 1], &[0.5, 2.0, 4.9]).unwrap() - 5.4).abs() < 1e-12);
        assert!(linear(&[1, 0], &[1.0]).is_err());
    }

    #[test]
    fn xor_examples() {
        assert_eq!(xor_shift(&[1, 0, 1], &[1, 1, 0]).unwrap(), vec![0, 1, 1]);
        assert_eq!(xor_shift(&[1, 0, 1], &[0, 0, 0]).unwrap(), vec![1, 0, 1]);
        let z = [1, 0, 1, 1];
        let x = [0, 0, 1, 1];
        assert_eq!(xor_shift(&xor_shift(&x, &z).unwrap(), &z).unwrap(), x.to_vec());
        assert!(xor_shift(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn permute_examples() {
        assert_eq!(permute(&[7, 8, 9], &[0, 1, 2]).unwrap(), vec![7, 8, 9]);
        assert_eq!(permute(&[7, 8, 9], &[2, 0, 1]).unwrap(), vec![9, 7, 8]);
        let sigma = [2, 0, 1];
        let y = permute(&[7, 8, 9], &sigma).unwrap();
        assert_eq!(permute(&y, &inverse_permutation(&sigma)).unwrap(), vec![7, 8, 9]);
        assert_eq!(permute(&[1, 2], &[0, 0]), Err(SuiteError::InvalidPermutation(2)));
    }

    #[test]
    fn scale_shift_examples() {
        assert_eq!(scale_and_shift(10.0, 2.0, 3.0), 23.0);
        assert_eq!(scale_and_shift(4.5, 1.0, 0.0), 4.5);
        assert_eq!(scale_and_shift(0.0, 5.0, -7.0), -7.0);
    }

    #[test]
    fn instance_one_is_identity() {
        let s = Suite::pbo();
        let ip = s.make_instance(1, 1, 100).unwrap();
        assert!(ip.spec.is_identity());
        assert_eq!(ip.spec, InstanceSpec::identity(1, 100));
    }

    #[test]
    fn instance_bands() {
        let xor = instance_spec(2, 7, 32).unwrap();
        assert!(xor.permutation.iter().enumerate().all(|(i, &s)| i == s));
        assert!(xor.xor_mask.contains(&1));
        let perm = instance_spec(2, 77, 32).unwrap();
        assert!(perm.xor_mask.iter().all(|&b| b == 0));
        assert!(is_permutation(&perm.permutation));
        assert!(matches!(instance_spec(1, 101, 4), Err(SuiteError::InstanceOutOfRange(101))));
        assert!(matches!(instance_spec(1, 0, 4), Err(SuiteError::InstanceOutOfRange(0))));
    }

    #[test]
    fn instance_ranges_and_determinism() {
        for f in 1..=4 {
            for i in 2..=100 {
                let a = instance_spec(f, i, 16).unwrap();
                assert!((0.2..=5.0).contains(&a.scale));
                assert!((-1000.0..=1000.0).contains(&a.shift));
                assert!(is_permutation(&a.permutation));
                assert_eq!(a, instance_spec(f, i, 16).unwrap());
            }
        }
    }

    #[test]
    fn dimension_one_supported() {
        let s = Suite::pbo();
        for f in 1..=4 {
            for i in [1, 2, 60] {
                let ip = s.make_instance(f, i, 1).unwrap();
                assert_eq!(ip.spec.permutation, vec![0]);
                ip.evaluate(&[1]).unwrap();
            }
        }
    }

    #[test]
    fn evaluate_instance_examples() {
        let p = Suite::pbo().problem(ONEMAX, 3).unwrap();
        let ip = InstancedProblem {
            problem: p,
            spec: InstanceSpec {
                instance_id: 2,
                xor_mask: vec![1, 1, 1],
                permutation: vec![0, 1, 2],
                scale: 1.0,
                shift: 0.0,
            },
        };
        assert_eq!(ip.evaluate(&[1, 1, 1]).unwrap().raw, 0.0);
        assert!(matches!(ip.evaluate(&[1, 1]), Err(SuiteError::DimensionMismatch { .. })));
        assert!(matches!(ip.evaluate(&[1, 2, 1]), Err(SuiteError::NotBinary { index: 1, value: 2 })));
    }

    #[test]
    fn instance_one_raw_equals_transformed() {
        let s = Suite::pbo();
        for f in 1..=4 {
            let ip = s.make_instance(f, 1, 6).unwrap();
            for x in all_points(6) {
                let e = ip.evaluate(&x).unwrap();
                assert_eq!(e.raw, e.transformed);
                assert_eq!(e.raw, ip.problem.evaluate_raw(&x).unwrap());
            }
        }
    }

    #[test]
    fn composition_exhaustive_n10() {
        let s = Suite::pbo();
        for f in 1..=4 {
            for i in [2, 3, 49, 51, 99] {
                let ip = s.make_instance(f, i, 10).unwrap();
                for x in all_points(10) {
                    let e = ip.evaluate(&x).unwrap();
                    assert_eq!(e.transformed, ip.spec.scale * e.raw + ip.spec.shift);
                }
            }
        }
    }

    #[test]
    fn landscape_isomorphism_n10() {
        let s = Suite::pbo();
        for f in 1..=4 {
            let base = s.problem(f, 10).unwrap();
            let mut reference: Vec<u64> =
                all_points(10).map(|x| base.evaluate_raw(&x).unwrap().to_bits()).collect();
            reference.sort_unstable();
            for i in [2, 30, 51, 100] {
                let ip = s.make_instance(f, i, 10).unwrap();
                let mut got: Vec<u64> = all_points(10).map(|x| ip.evaluate(&x).unwrap().raw.to_bits()).collect();
                got.sort_unstable();
                assert_eq!(got, reference, "f{f} i{i}");
            }
        }
    }

    #[test]
    fn maxima_exhaustive() {
        let s = Suite::pbo();
        for n in [1, 5, 12, 16] {
            for f in 1..=4 {
                let p = s.problem(f, n).unwrap();
                let best = all_points(n).map(|x| p.evaluate_raw(&x).unwrap()).fold(f64::MIN, f64::max);
                let opt = p.optimum_value.unwrap();
                assert!((best - opt).abs() <= 1e-9 * opt.abs().max(1.0), "f{f} n{n}: {best} vs {opt}");
            }
        }
    }

    #[test]
    fn linear_weights_in_range_and_fixed() {
        let w = linear_weights(50);
        assert!(w.iter().all(|&v| (0.0..=5.0).contains(&v)));
        assert_eq!(w, linear_weights(50));
    }

    #[test]
    fn registration() {
        let mut s = Suite::pbo();
        assert_eq!(s.register_problem(1, "dup", |_| 0.0), Err(SuiteError::DuplicateFunction(1)));
        s.register_problem(5, "Zeros", |x| x.iter().filter(|&&b| b == 0).count() as f64).unwrap();
        let ip = s.make_instance(5, 3, 8).unwrap();
        let e = ip.evaluate(&[0; 8]).unwrap();
        assert_eq!(e.transformed, ip.spec.scale * e.raw + ip.spec.shift);
        assert!(matches!(s.make_instance(9, 1, 8), Err(SuiteError::UnknownFunction(9))));
    }
}
