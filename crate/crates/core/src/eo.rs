//! Equilibrium Optimizer (EO) over box-constrained real vectors.
//!
//! Agents ("concentrations") are pulled towards a randomly chosen member of
//! the equilibrium pool: the four best solutions found during the whole run
//! plus their arithmetic mean. An exponential term balances exploration and
//! exploitation, and a gated generation-rate term adds stochastic
//! exploitation. Lower fitness is better.
//!
//! The optimizer is deterministic for a fixed seed. Random numbers are drawn
//! from a single per-call generator in a fixed order: initial positions
//! (agent-major, coordinate-minor), then per iteration and per agent the pool
//! index, the `lambda` vector, the `R` vector, `r1` and `r2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of best agents kept in the equilibrium pool (the mean is a fifth candidate).
pub const POOL_SIZE: usize = 4;

/// Below this magnitude `lambda * V` is treated as zero in the update rule.
pub const LAMBDA_GUARD: f64 = 1e-12;

/// Smallest accepted population.
pub const MIN_POPULATION: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EoError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid bounds at coordinate {index}: lower {lower} > upper {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
    #[error("bounds at coordinate {0} are not finite")]
    NonFiniteBounds(usize),
    #[error("population_size must be >= {MIN_POPULATION}, got {0}")]
    PopulationTooSmall(usize),
    #[error("max_iterations must be >= 1")]
    NoIterations,
    #[error("volume V must be non-zero")]
    ZeroVolume,
    #[error("generation probability must lie in [0, 1], got {0}")]
    InvalidGenerationProbability(f64),
    #[error("{given} warm starts exceed the population size {population}")]
    TooManyWarmStarts { given: usize, population: usize },
    #[error("pool update needs at least {POOL_SIZE} agents, got {0}")]
    PopulationBelowPool(usize),
    #[error("agent {0} has not been evaluated")]
    MissingFitness(usize),
    #[error("population lengths differ: {current} vs {previous}")]
    LengthMismatch { current: usize, previous: usize },
}

/// A candidate solution with its cached fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchAgent {
    pub position: Vec<f64>,
    pub fitness: Option<f64>,
}

impl SearchAgent {
    pub fn new(position: Vec<f64>) -> Self {
        Self { position, fitness: None }
    }

    pub fn with_fitness(position: Vec<f64>, fitness: f64) -> Self {
        Self { position, fitness: Some(fitness) }
    }

    pub fn has_fitness(&self) -> bool {
        self.fitness.is_some()
    }

    /// Fitness, or `+inf` if the agent was never evaluated.
    pub fn fitness_or_worst(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }
}

/// Per-coordinate search box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, EoError> {
        if lower.len() != upper.len() {
            return Err(EoError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(EoError::NonFiniteBounds(index));
            }
            if lo > hi {
                return Err(EoError::InvalidBounds { index, lower: lo, upper: hi });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval on every coordinate.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, EoError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, position: &mut [f64]) {
        for ((x, &lo), &hi) in position.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(lo, hi);
        }
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position.len() == self.dim()
            && position
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x >= lo && x <= hi)
    }
}

/// Optimizer settings. Defaults are the multi-object tracking preset
/// (n = 14, 3 iterations, a1 = 2, a2 = 1, GP = 0.5, V = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EoParams {
    pub population_size: usize,
    pub max_iterations: usize,
    pub a1: f64,
    pub a2: f64,
    pub generation_probability: f64,
    pub volume: f64,
    pub rng_seed: Option<u64>,
}

impl Default for EoParams {
    fn default() -> Self {
        Self {
            population_size: 14,
            max_iterations: 3,
            a1: 2.0,
            a2: 1.0,
            generation_probability: 0.5,
            volume: 1.0,
            rng_seed: None,
        }
    }
}

impl EoParams {
    pub fn validate(&self) -> Result<(), EoError> {
        if self.population_size < MIN_POPULATION {
            return Err(EoError::PopulationTooSmall(self.population_size));
        }
        if self.max_iterations == 0 {
            return Err(EoError::NoIterations);
        }
        if self.volume == 0.0 {
            return Err(EoError::ZeroVolume);
        }
        let gp = self.generation_probability;
        if !(0.0..=1.0).contains(&gp) {
            return Err(EoError::InvalidGenerationProbability(gp));
        }
        Ok(())
    }
}

/// The four best agents seen so far (best first) and their mean position.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPool {
    members: Vec<SearchAgent>,
    average: Vec<f64>,
}

impl EquilibriumPool {
    /// Members sorted best-first.
    pub fn members(&self) -> &[SearchAgent] {
        &self.members
    }

    pub fn best(&self) -> &SearchAgent {
        &self.members[0]
    }

    /// Mean position of the four members.
    pub fn average(&self) -> &[f64] {
        &self.average
    }

    /// Candidate `index` in `0..5`: members 0..4, then the mean.
    pub fn candidate(&self, index: usize) -> &[f64] {
        if index < self.members.len() {
            &self.members[index].position
        } else {
            &self.average
        }
    }

    pub fn candidate_count(&self) -> usize {
        self.members.len() + 1
    }

    fn offer(&mut self, agent: &SearchAgent) {
        let fitness = agent.fitness_or_worst();
        if self.members.len() >= POOL_SIZE
            && self.members.iter().any(|m| m.position == agent.position)
        {
            return;
        }
        // ties go to the newcomer
        let slot = self
            .members
            .iter()
            .position(|m| fitness <= m.fitness_or_worst())
            .unwrap_or(self.members.len());
        if slot < POOL_SIZE {
            self.members.insert(slot, agent.clone());
            self.members.truncate(POOL_SIZE);
        }
    }

    fn recompute_average(&mut self) {
        let dim = self.members[0].position.len();
        let count = self.members.len() as f64;
        self.average = (0..dim)
            .map(|j| self.members.iter().map(|m| m.position[j]).sum::<f64>() / count)
            .collect();
    }
}

/// Outcome of an [`optimize`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct EoResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub evaluations: usize,
    /// `(iteration, best fitness so far)`, iterations counted from 1.
    pub history: Vec<(usize, f64)>,
}

/// Random initial population. Warm starts (clamped into `bounds`) take the
/// first slots; the rest are `lower + R * (upper - lower)`.
pub fn initialize_population<R: Rng + ?Sized>(
    params: &EoParams,
    bounds: &Bounds,
    warm_starts: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<SearchAgent>, EoError> {
    if warm_starts.len() > params.population_size {
        return Err(EoError::TooManyWarmStarts {
            given: warm_starts.len(),
            population: params.population_size,
        });
    }
    let dim = bounds.dim();
    let mut population = Vec::with_capacity(params.population_size);
    for start in warm_starts {
        if start.len() != dim {
            return Err(EoError::DimensionMismatch { expected: dim, got: start.len() });
        }
        let mut position = start.clone();
        bounds.clamp(&mut position);
        population.push(SearchAgent::new(position));
    }
    while population.len() < params.population_size {
        let position = bounds
            .lower
            .iter()
            .zip(&bounds.upper)
            .map(|(&lo, &hi)| lo + rng.random::<f64>() * (hi - lo))
            .collect();
        population.push(SearchAgent::new(position));
    }
    Ok(population)
}

/// `t = (1 - iter/iter_max)^(a2 * iter/iter_max)`.
pub fn time_coefficient(iter: usize, iter_max: usize, a2: f64) -> f64 {
    let ratio = iter as f64 / iter_max as f64;
    (1.0 - ratio).powf(a2 * ratio)
}

/// `sign(x)` with `sign(0) = +1`.
fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Exponential term `F[j] = a1 * sign(r[j] - 0.5) * (exp(-lambda[j] * t) - 1)`.
pub fn exponential_term(lambda: &[f64], t: f64, a1: f64, r: &[f64]) -> Vec<f64> {
    lambda.iter().zip(r).map(|(&l, &rj)| a1 * sign(rj - 0.5) * ((-l * t).exp() - 1.0)).collect()
}

/// Generation rate `Gr = GCP * (eq - lambda * agent) * F`, where the scalar
/// control parameter `GCP` is `0.5 * r1` when `r2 >= gp` and 0 otherwise.
pub fn generation_rate(
    eq_position: &[f64],
    agent_position: &[f64],
    lambda: &[f64],
    f: &[f64],
    gp: f64,
    r1: f64,
    r2: f64,
) -> Vec<f64> {
    let gcp = if r2 >= gp { 0.5 * r1 } else { 0.0 };
    eq_position
        .iter()
        .zip(agent_position)
        .zip(lambda.iter().zip(f))
        .map(|((&eq, &x), (&l, &fj))| gcp * (eq - l * x) * fj)
        .collect()
}

/// Moves an agent: `eq + (x - eq) * F + Gr / (lambda * V) * (1 - F)`,
/// then clamps to `bounds` and clears the cached fitness.
#[allow(clippy::too_many_arguments)]
pub fn update_agent(
    agent: &SearchAgent,
    eq_candidate: &[f64],
    lambda: &[f64],
    f: &[f64],
    gr: &[f64],
    volume: f64,
    bounds: &Bounds,
) -> SearchAgent {
    let mut position: Vec<f64> = (0..agent.position.len())
        .map(|j| {
            let eq = eq_candidate[j];
            let denom = lambda[j] * volume;
            let generation = if denom.abs() < LAMBDA_GUARD { 0.0 } else { gr[j] / denom };
            eq + (agent.position[j] - eq) * f[j] + generation * (1.0 - f[j])
        })
        .collect();
    bounds.clamp(&mut position);
    SearchAgent::new(position)
}

/// Folds an evaluated population into the pool. Members persist across
/// calls and are displaced only by agents at least as good; an agent whose
/// position is already in a full pool is skipped.
pub fn update_pool(
    pool: Option<EquilibriumPool>,
    population: &[SearchAgent],
) -> Result<EquilibriumPool, EoError> {
    if population.len() < POOL_SIZE {
        return Err(EoError::PopulationBelowPool(population.len()));
    }
    if let Some(i) = population.iter().position(|a| !a.has_fitness()) {
        return Err(EoError::MissingFitness(i));
    }
    let mut pool = pool.unwrap_or(EquilibriumPool { members: Vec::new(), average: Vec::new() });
    for agent in population {
        pool.offer(agent);
    }
    pool.recompute_average();
    Ok(pool)
}

/// Per-agent elitism: agent `i` reverts to `previous[i]` when that was
/// strictly better. Ties keep the current agent.
pub fn memory_save(current: &mut [SearchAgent], previous: &[SearchAgent]) -> Result<(), EoError> {
    if current.len() != previous.len() {
        return Err(EoError::LengthMismatch { current: current.len(), previous: previous.len() });
    }
    for (i, (cur, prev)) in current.iter_mut().zip(previous).enumerate() {
        let (Some(cf), Some(pf)) = (cur.fitness, prev.fitness) else {
            return Err(EoError::MissingFitness(i));
        };
        if pf < cf {
            *cur = prev.clone();
        }
    }
    Ok(())
}

fn make_rng(seed: Option<u64>) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.unwrap_or_else(rand::random))
}

/// Minimizes `objective` over `bounds`.
///
/// Each of the `max_iterations` iterations evaluates every agent once, so the
/// objective is called exactly `population_size * max_iterations` times.
/// Non-finite objective values count as `+inf`.
pub fn optimize<F>(
    mut objective: F,
    params: &EoParams,
    bounds: &Bounds,
    warm_starts: &[Vec<f64>],
) -> Result<EoResult, EoError>
where
    F: FnMut(&[f64]) -> f64,
{
    params.validate()?;
    let mut rng = make_rng(params.rng_seed);
    let dim = bounds.dim();
    let mut population = initialize_population(params, bounds, warm_starts, &mut rng)?;
    let mut previous: Option<Vec<SearchAgent>> = None;
    let mut pool: Option<EquilibriumPool> = None;
    let mut evaluations = 0;
    let mut history = Vec::with_capacity(params.max_iterations);

    for iter in 0..params.max_iterations {
        for agent in population.iter_mut() {
            let value = objective(&agent.position);
            evaluations += 1;
            agent.fitness = Some(if value.is_finite() { value } else { f64::INFINITY });
        }
        let current_pool = update_pool(pool.take(), &population)?;
        if let Some(prev) = &previous {
            memory_save(&mut population, prev)?;
        }
        previous = Some(population.clone());
        history.push((iter + 1, current_pool.best().fitness_or_worst()));

        let t = time_coefficient(iter, params.max_iterations, params.a2);
        for agent in population.iter_mut() {
            let pick = rng.random_range(0..current_pool.candidate_count());
            let lambda: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let eq = current_pool.candidate(pick);
            let f = exponential_term(&lambda, t, params.a1, &r);
            let gr = generation_rate(
                eq,
                &agent.position,
                &lambda,
                &f,
                params.generation_probability,
                r1,
                r2,
            );
            *agent = update_agent(agent, eq, &lambda, &f, &gr, params.volume, bounds);
        }
        pool = Some(current_pool);
    }

    let pool = pool.expect("at least one iteration ran");
    let best = pool.best();
    Ok(EoResult {
        best_position: best.position.clone(),
        best_fitness: best.fitness_or_worst(),
        evaluations,
        history,
    })
}
