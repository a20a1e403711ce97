//! Reference algorithms: pure random search and the (1+lambda) EA with a
//! self-adaptive mutation rate.

use crate::runner::{Algorithm, AlgorithmContext, RunError};
use crate::rng::SeededGenerator;

/// Upper bound on resampling the flip count before giving up.
pub const MAX_FLIP_RESAMPLES: usize = 1_000_000;

/// Learning rate of the log-normal mutation-rate update.
pub const MUTATION_LEARNING_RATE: f64 = 0.22;

/// Samples uniform bit strings until the budget is spent.
///
/// Stages one parameter: the 1-based evaluation index.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomSearch;

impl Algorithm for RandomSearch {
    fn name(&self) -> &str {
        "random-search"
    }

    fn run(&self, ctx: &mut AlgorithmContext<'_>) -> Result<f64, RunError> {
        let n = ctx.dimension();
        let mut x = vec![0u8; n];
        let mut best = f64::NEG_INFINITY;
        while !ctx.should_stop() {
            for bit in x.iter_mut() {
                *bit = (ctx.random.uniform() * 2.0) as u8;
            }
            ctx.set_parameters(&[(ctx.evaluations() + 1) as f64]);
            best = best.max(ctx.evaluate(&x)?);
        }
        Ok(best)
    }
}

/// (1+lambda) EA whose mutation rate follows a log-normal self-adaptation,
/// clamped to `[1/n, 1/2]`.
///
/// Stages two parameters before each evaluation: the mutation rate and the
/// number of flipped bits `l` (0 for the initial parent).
#[derive(Clone, Copy, Debug)]
pub struct OnePlusLambdaEa {
    lambda: usize,
}

impl OnePlusLambdaEa {
    pub fn new(lambda: usize) -> Result<Self, RunError> {
        if lambda < 1 {
            return Err(RunError::Algorithm("lambda must be at least 1".into()));
        }
        Ok(OnePlusLambdaEa { lambda })
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    /// Like [`Algorithm::run`], calling `on_generation` with the parent's
    /// fitness and mutation rate at the start of every generation.
    pub fn run_observed(
        &self,
        ctx: &mut AlgorithmContext<'_>,
        on_generation: &mut dyn FnMut(Generation),
    ) -> Result<f64, RunError> {
        let n = ctx.dimension();
        let mut parent: Vec<u8> = (0..n).map(|_| (ctx.random.uniform() * 2.0) as u8).collect();
        let mut rate = clamp_rate(1.0 / n as f64, n);
        ctx.set_parameters(&[rate, 0.0]);
        let mut parent_value = ctx.evaluate(&parent)?;
        while !ctx.should_stop() {
            on_generation(Generation { parent_fitness: parent_value, mutation_rate: rate });
            let mut best: Option<(Vec<u8>, f64)> = None;
            for _ in 0..self.lambda {
                let mut offspring = parent.clone();
                let l = mutate(&mut offspring, rate, &mut ctx.random)?;
                ctx.set_parameters(&[rate, l as f64]);
                let v = ctx.evaluate(&offspring)?;
                if v > best.as_ref().map_or(parent_value, |b| b.1) {
                    best = Some((offspring, v));
                }
                if ctx.should_stop() {
                    break;
                }
            }
            if let Some((x, v)) = best {
                parent = x;
                parent_value = v;
            }
            let g = ctx.random.normal();
            rate = update_mutation_rate(rate, g, n);
        }
        Ok(parent_value)
    }
}

/// State of the (1+lambda) EA at the start of one generation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Generation {
    pub parent_fitness: f64,
    pub mutation_rate: f64,
}

/// `1 / (1 + (1 - r) / r * exp(0.22 g))`, clamped to `[1/n, 1/2]`.
pub fn update_mutation_rate(rate: f64, normal_draw: f64, dimension: usize) -> f64 {
    let next = 1.0 / (1.0 + (1.0 - rate) / rate * (MUTATION_LEARNING_RATE * normal_draw).exp());
    clamp_rate(next, dimension)
}

fn clamp_rate(rate: f64, dimension: usize) -> f64 {
    rate.max(1.0 / dimension as f64).min(0.5)
}

/// Flips `l ~ Bin(n, rate)` distinct bits, resampling `l` until it is positive.
pub fn mutate(x: &mut [u8], rate: f64, rng: &mut SeededGenerator) -> Result<usize, RunError> {
    let n = x.len();
    let mut l = 0;
    for _ in 0..MAX_FLIP_RESAMPLES {
        l = rng.binomial(n, rate);
        if l > 0 {
            break;
        }
    }
    if l == 0 {
        return Err(RunError::Algorithm(format!("flip count stayed 0 after {MAX_FLIP_RESAMPLES} draws")));
    }
    flip_distinct(x, l, rng);
    Ok(l)
}

/// Flips `l` distinct positions chosen by a partial Fisher-Yates shuffle.
pub fn flip_distinct(x: &mut [u8], l: usize, rng: &mut SeededGenerator) {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..l.min(n) {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
        x[idx[i]] ^= 1;
    }
}

impl Algorithm for OnePlusLambdaEa {
    fn name(&self) -> &str {
        "one-plus-lambda-ea"
    }

    fn run(&self, ctx: &mut AlgorithmContext<'_>) -> Result<f64, RunError> {
        self.run_observed(ctx, &mut |_| {})
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_draw_keeps_rate() {
        for &(r, n) in &[(0.1, 100usize), (0.25, 10), (0.01, 100)] {
            assert!((update_mutation_rate(r, 0.0, n) - r).abs() < 1e-15);
        }
    }

    #[test]
    fn rate_always_clamped() {
        let mut g = SeededGenerator::new(3);
        for n in [2usize, 10, 100] {
            let mut r = 1.0 / n as f64;
            for _ in 0..10_000 {
                r = update_mutation_rate(r, g.normal() * 5.0, n);
                assert!(r >= 1.0 / n as f64 && r <= 0.5);
            }
        }
    }

    #[test]
    fn flipping_all_bits_gives_complement() {
        let mut g = SeededGenerator::new(1);
        let parent = vec![1, 0, 0, 1, 1, 0, 1];
        let mut child = parent.clone();
        flip_distinct(&mut child, parent.len(), &mut g);
        let complement: Vec<u8> = parent.iter().map(|b| 1 - b).collect();
        assert_eq!(child, complement);
    }

    #[test]
    fn mutate_flips_exactly_l_bits() {
        let mut g = SeededGenerator::new(11);
        for _ in 0..500 {
            let parent = vec![0u8; 30];
            let mut child = parent.clone();
            let l = mutate(&mut child, 0.1, &mut g).unwrap();
            assert!(l >= 1);
            assert_eq!(child.iter().filter(|&&b| b == 1).count(), l);
        }
    }

    #[test]
    fn lambda_zero_rejected() {
        assert!(OnePlusLambdaEa::new(0).is_err());
        assert_eq!(OnePlusLambdaEa::new(5).unwrap().lambda(), 5);
    }
}
