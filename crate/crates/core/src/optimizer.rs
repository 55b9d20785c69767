//! Real-coded genetic algorithm over the nine segment dimensions with a
//! penalty-augmented fitness.
//!
//! Each generation: evaluate every new genome (in parallel), sort by
//! `(eval, genome)`, keep the elites, and breed the rest through tournament
//! selection, per-gene blend crossover and clamped Gaussian mutation. The RNG
//! is only touched on the coordinating thread, so a seed fixes the run
//! regardless of how many threads evaluate candidates.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LegGeometry;
use crate::metrics::{evaluate, Baseline, EvaluationSetup, MetricValues};

pub const GENES: usize = 9;

/// `[l₁, l₂, l₃, w₁, w₂, w₃, h₁, h₂, h₃]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(pub [f64; GENES]);

impl Genome {
    pub fn from_geometry(g: &LegGeometry) -> Self {
        let s = g.segments();
        Self([
            s[0].length,
            s[1].length,
            s[2].length,
            s[0].width,
            s[1].width,
            s[2].width,
            s[0].height,
            s[1].height,
            s[2].height,
        ])
    }

    /// Geometry with these dimensions and the template's wall thicknesses.
    pub fn to_geometry(&self, template: &LegGeometry) -> LegGeometry {
        let g = &self.0;
        template.with_dimensions([g[0], g[1], g[2]], [g[3], g[4], g[5]], [g[6], g[7], g[8]])
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// How per-joint ratios are combined into the scalar objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    HipOnly,
}

impl Aggregation {
    fn combine(self, ratios: &[f64; 3]) -> f64 {
        match self {
            Aggregation::Mean => ratios.iter().sum::<f64>() / 3.0,
            Aggregation::HipOnly => ratios[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneBounds {
    pub lower: [f64; GENES],
    pub upper: [f64; GENES],
}

impl GeneBounds {
    pub fn around(center: &Genome, fraction: f64) -> Self {
        Self {
            lower: center.0.map(|v| v * (1.0 - fraction)),
            upper: center.0.map(|v| v * (1.0 + fraction)),
        }
    }

    pub fn contains(&self, g: &Genome) -> bool {
        (0..GENES).all(|i| g.0[i] >= self.lower[i] && g.0[i] <= self.upper[i])
    }

    fn clamp(&self, i: usize, v: f64) -> f64 {
        v.clamp(self.lower[i], self.upper[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub seed: u64,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_sigma: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    /// Half-width of the default bounds relative to the initial genome.
    pub bound_fraction: f64,
    /// Explicit bounds; overrides `bound_fraction` when set.
    pub bounds: Option<GeneBounds>,
    /// Allowed relative loss of reach (λ).
    pub reach_tolerance: f64,
    /// Allowed relative loss of bending stiffness (μ).
    pub stiffness_tolerance: f64,
    pub penalty_coefficient: f64,
    pub torque_weight: f64,
    pub energy_weight: f64,
    pub aggregation: Aggregation,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 100,
            seed: 42,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            tournament_size: 3,
            elitism_count: 2,
            bound_fraction: 0.35,
            bounds: None,
            reach_tolerance: 0.05,
            stiffness_tolerance: 0.15,
            penalty_coefficient: 10_000.0,
            torque_weight: 0.5,
            energy_weight: 0.5,
            aggregation: Aggregation::Mean,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be >= 2, got {}",
                self.population_size
            ));
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("reach_tolerance", self.reach_tolerance),
            ("stiffness_tolerance", self.stiffness_tolerance),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.bound_fraction > 0.0 && self.bound_fraction < 1.0) {
            return bad(format!(
                "bound_fraction must be in (0, 1), got {}",
                self.bound_fraction
            ));
        }
        for (name, v) in [
            ("mutation_sigma", self.mutation_sigma),
            ("penalty_coefficient", self.penalty_coefficient),
            ("torque_weight", self.torque_weight),
            ("energy_weight", self.energy_weight),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1".into());
        }
        if self.elitism_count > self.population_size {
            return bad("elitism_count exceeds population_size".into());
        }
        Ok(())
    }
}

/// Objective, penalty terms and ratios for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    /// `objective + k_p·(torque + energy + reach + stiffness penalties)`
    pub eval: f64,
    pub objective: f64,
    pub torque_penalty: f64,
    pub energy_penalty: f64,
    pub reach_penalty: f64,
    pub stiffness_penalty: f64,
    pub torque_ratio: [f64; 3],
    pub energy_ratio: [f64; 3],
    pub feasible: bool,
}

impl FitnessReport {
    pub fn total_penalty(&self) -> f64 {
        self.torque_penalty + self.energy_penalty + self.reach_penalty + self.stiffness_penalty
    }
}

/// Scores metric values against the baseline.
pub fn score(values: &MetricValues, base: &Baseline, cfg: &GaConfig) -> FitnessReport {
    let ratios = values.ratios(base);
    let b = base.values();
    let torque = cfg.aggregation.combine(&ratios.peak_torque);
    let energy = cfg.aggregation.combine(&ratios.energy);
    let objective = cfg.torque_weight * torque + cfg.energy_weight * energy;

    let torque_penalty = (torque - 1.0).max(0.0);
    let energy_penalty = (energy - 1.0).max(0.0);
    let reach_penalty = ((1.0 - cfg.reach_tolerance) * b.reach - values.reach).max(0.0);
    let stiffness_penalty = (0..3)
        .map(|i| ((1.0 - cfg.stiffness_tolerance) * b.stiffness[i] - values.stiffness[i]).max(0.0))
        .sum::<f64>();
    let penalty = torque_penalty + energy_penalty + reach_penalty + stiffness_penalty;
    FitnessReport {
        eval: objective + cfg.penalty_coefficient * penalty,
        objective,
        torque_penalty,
        energy_penalty,
        reach_penalty,
        stiffness_penalty,
        torque_ratio: ratios.peak_torque,
        energy_ratio: ratios.energy,
        feasible: penalty == 0.0,
    }
}

pub fn fitness(
    geom: &LegGeometry,
    base: &Baseline,
    setup: &EvaluationSetup,
    cfg: &GaConfig,
) -> Result<FitnessReport> {
    Ok(score(&evaluate(geom, setup)?, base, cfg))
}

/// Fixed evaluation setup, the initial geometry and its frozen baseline.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub setup: EvaluationSetup,
    pub initial: LegGeometry,
    pub baseline: Baseline,
}

impl DesignProblem {
    pub fn new(initial: LegGeometry, setup: EvaluationSetup) -> Result<Self> {
        let baseline = Baseline::freeze(evaluate(&initial, &setup)?);
        Ok(Self {
            setup,
            initial,
            baseline,
        })
    }

    pub fn bounds(&self, cfg: &GaConfig) -> Result<GeneBounds> {
        let b = cfg.bounds.unwrap_or_else(|| {
            GeneBounds::around(&Genome::from_geometry(&self.initial), cfg.bound_fraction)
        });
        let t = self.initial.thicknesses();
        for i in 0..GENES {
            let (lo, hi) = (b.lower[i], b.upper[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "gene {i}: bounds [{lo}, {hi}] must be finite with lower < upper"
                )));
            }
            // Sections must stay valid: w, h ≥ 2t for the fixed wall.
            let min = if i < 3 { 0.0 } else { 2.0 * t[i % 3] };
            if lo <= 0.0 || lo < min {
                return Err(Error::InvalidConfig(format!(
                    "gene {i}: lower bound {lo} must be positive and at least {min}"
                )));
            }
        }
        Ok(b)
    }

    pub fn geometry(&self, genome: &Genome) -> LegGeometry {
        genome.to_geometry(&self.initial)
    }

    pub fn fitness(&self, genome: &Genome, cfg: &GaConfig) -> Result<FitnessReport> {
        fitness(&self.geometry(genome), &self.baseline, &self.setup, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genome: Genome,
    pub fitness: FitnessReport,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.fitness
        .eval
        .total_cmp(&b.fitness.eval)
        .then_with(|| a.genome.lex_cmp(&b.genome))
}

/// Best member of the population after each generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_eval: f64,
    pub best_objective: f64,
    pub torque_penalty: f64,
    pub energy_penalty: f64,
    pub reach_penalty: f64,
    pub stiffness_penalty: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Feasible,
    /// No feasible candidate was ever seen; `best` is the lowest eval.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaOutcome {
    pub best: Candidate,
    pub history: Vec<GenerationRecord>,
    pub status: RunStatus,
    /// First generation from which the best eval stays within 1e-6 of its
    /// final value.
    pub converged_at: usize,
    pub bounds: GeneBounds,
}

/// Index of the tournament winner in a population sorted best-first.
pub fn tournament_select<R: Rng>(population_len: usize, size: usize, rng: &mut R) -> usize {
    (0..size)
        .map(|_| rng.gen_range(0..population_len))
        .min()
        .unwrap_or(0)
}

/// Per-gene arithmetic blend with probability `rate`; identical parents give
/// identical children.
pub fn blend_crossover<R: Rng>(a: &Genome, b: &Genome, rate: f64, rng: &mut R) -> (Genome, Genome) {
    let (mut c1, mut c2) = (*a, *b);
    for i in 0..GENES {
        if rng.gen::<f64>() < rate {
            let alpha: f64 = rng.gen();
            c1.0[i] = b.0[i] + alpha * (a.0[i] - b.0[i]);
            c2.0[i] = a.0[i] + alpha * (b.0[i] - a.0[i]);
        }
    }
    (c1, c2)
}

/// Gaussian mutation with `σ = sigma·(upper − lower)`, clamped to bounds.
pub fn gaussian_mutate<R: Rng>(
    g: &mut Genome,
    bounds: &GeneBounds,
    rate: f64,
    sigma: f64,
    rng: &mut R,
) {
    for i in 0..GENES {
        if rng.gen::<f64>() < rate {
            let sd = sigma * (bounds.upper[i] - bounds.lower[i]);
            let step = Normal::new(0.0, sd).map(|n| n.sample(rng)).unwrap_or(0.0);
            g.0[i] = bounds.clamp(i, g.0[i] + step);
        }
    }
}

fn evaluate_all(
    problem: &DesignProblem,
    cfg: &GaConfig,
    genomes: Vec<Genome>,
) -> Result<Vec<Candidate>> {
    genomes
        .into_par_iter()
        .map(|genome| {
            problem
                .fitness(&genome, cfg)
                .map(|fitness| Candidate { genome, fitness })
        })
        .collect()
}

fn record(generation: usize, c: &Candidate) -> GenerationRecord {
    let f = &c.fitness;
    GenerationRecord {
        generation,
        best_eval: f.eval,
        best_objective: f.objective,
        torque_penalty: f.torque_penalty,
        energy_penalty: f.energy_penalty,
        reach_penalty: f.reach_penalty,
        stiffness_penalty: f.stiffness_penalty,
        feasible: f.feasible,
    }
}

/// Runs the GA from a population seeded with the initial genome plus uniform
/// draws inside the bounds.
pub fn run_ga(problem: &DesignProblem, cfg: &GaConfig) -> Result<GaOutcome> {
    cfg.validate()?;
    let bounds = problem.bounds(cfg)?;
    let initial = Genome::from_geometry(&problem.initial);
    if !bounds.contains(&initial) {
        return Err(Error::InvalidConfig(
            "bounds must contain the initial geometry".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population = Vec::with_capacity(cfg.population_size);
    population.push(initial);
    while population.len() < cfg.population_size {
        population.push(Genome(std::array::from_fn(|i| {
            rng.gen_range(bounds.lower[i]..=bounds.upper[i])
        })));
    }
    evolve(problem, cfg, bounds, population, rng)
}

/// Runs the GA from a caller-supplied initial population.
pub fn run_ga_with_population(
    problem: &DesignProblem,
    cfg: &GaConfig,
    population: Vec<Genome>,
) -> Result<GaOutcome> {
    cfg.validate()?;
    let bounds = problem.bounds(cfg)?;
    if population.len() != cfg.population_size {
        return Err(Error::InvalidConfig(format!(
            "initial population has {} genomes, expected {}",
            population.len(),
            cfg.population_size
        )));
    }
    if let Some(g) = population.iter().find(|g| !bounds.contains(g)) {
        return Err(Error::InvalidConfig(format!(
            "initial genome {g:?} outside bounds"
        )));
    }
    let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    evolve(problem, cfg, bounds, population, rng)
}

fn evolve(
    problem: &DesignProblem,
    cfg: &GaConfig,
    bounds: GeneBounds,
    initial: Vec<Genome>,
    mut rng: ChaCha8Rng,
) -> Result<GaOutcome> {
    let mut population = evaluate_all(problem, cfg, initial)?;
    population.sort_by(candidate_order);

    let mut history = vec![record(0, &population[0])];
    let mut best_any = population[0];
    let mut best_feasible = population.iter().find(|c| c.fitness.feasible).copied();

    for generation in 1..=cfg.generations {
        let elites = cfg.elitism_count.min(population.len());
        let mut children = Vec::with_capacity(cfg.population_size - elites);
        while elites + children.len() < cfg.population_size {
            let a = population[tournament_select(population.len(), cfg.tournament_size, &mut rng)];
            let b = population[tournament_select(population.len(), cfg.tournament_size, &mut rng)];
            let (mut c1, mut c2) =
                blend_crossover(&a.genome, &b.genome, cfg.crossover_rate, &mut rng);
            gaussian_mutate(
                &mut c1,
                &bounds,
                cfg.mutation_rate,
                cfg.mutation_sigma,
                &mut rng,
            );
            gaussian_mutate(
                &mut c2,
                &bounds,
                cfg.mutation_rate,
                cfg.mutation_sigma,
                &mut rng,
            );
            children.push(c1);
            if elites + children.len() < cfg.population_size {
                children.push(c2);
            }
        }
        let mut next: Vec<Candidate> = population[..elites].to_vec();
        next.extend(evaluate_all(problem, cfg, children)?);
        next.sort_by(candidate_order);
        population = next;

        let top = population[0];
        history.push(record(generation, &top));
        if candidate_order(&top, &best_any).is_lt() {
            best_any = top;
        }
        if let Some(f) = population.iter().find(|c| c.fitness.feasible) {
            if best_feasible.is_none_or(|b| candidate_order(f, &b).is_lt()) {
                best_feasible = Some(*f);
            }
        }
    }

    let final_eval = history.last().map(|r| r.best_eval).unwrap_or(f64::NAN);
    let converged_at = history
        .iter()
        .rposition(|r| (r.best_eval - final_eval).abs() >= 1e-6)
        .map_or(0, |k| k + 1);

    let (best, status) = match best_feasible {
        Some(b) => (b, RunStatus::Feasible),
        None => (best_any, RunStatus::Infeasible),
    };
    Ok(GaOutcome {
        best,
        history,
        status,
        converged_at,
        bounds,
    })
}
