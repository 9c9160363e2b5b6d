//! NSGA-III search over binary feature masks.
//!
//! The loop is binary tournament on front rank, single-point crossover,
//! per-bit flip mutation, empty-mask repair, evaluation and reference-point
//! survivor selection. Evaluations are cached by mask and only distinct model
//! trainings count toward the budget, which is never exceeded.

mod reference;
mod selection;
mod sort;

pub use reference::{generate_reference_points, ReferencePointSet};
pub use selection::environmental_selection;
pub use sort::{dominates, front_ranks, non_dominated_sort};

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DatasetFingerprint;
use crate::error::{ConfigError, EvalError};
use crate::mask::FeatureMask;
use crate::models::ClassifierKind;
use crate::objectives::{Evaluator, ObjectiveVector, DIRECTIONS, N_OBJECTIVES};

pub const DEFAULT_REFERENCE_DIVISIONS: usize = 3;

/// Consecutive generations without a single new evaluation before the search
/// gives up on the budget (small search spaces get exhausted).
pub const STALL_GENERATIONS: usize = 50;

/// `m + 1` for odd `m`, otherwise `m + 2`.
pub fn population_size_for(m: usize) -> usize {
    if m % 2 == 1 {
        m + 1
    } else {
        m + 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub mutation_prob: f64,
    pub crossover_prob: f64,
    pub max_evaluations: usize,
    pub reference_divisions: usize,
    pub seed: u64,
}

impl GaConfig {
    /// Defaults for `m` features: `p` from the sizing rule, mutation `1/m`,
    /// crossover 1, budget `2p²`.
    pub fn for_features(m: usize, seed: u64) -> Self {
        let p = population_size_for(m);
        Self {
            population_size: p,
            mutation_prob: 1.0 / m.max(1) as f64,
            crossover_prob: 1.0,
            max_evaluations: 2 * p * p,
            reference_divisions: DEFAULT_REFERENCE_DIVISIONS,
            seed,
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), ConfigError> {
        if m < 2 {
            return Err(ConfigError::TooFewFeatures(m));
        }
        if self.population_size <= m {
            return Err(ConfigError::PopulationTooSmall {
                p: self.population_size,
                m,
            });
        }
        if self.max_evaluations < self.population_size {
            return Err(ConfigError::BudgetTooSmall {
                max: self.max_evaluations,
                p: self.population_size,
            });
        }
        for (name, value) in [("mutation_prob", self.mutation_prob), ("crossover_prob", self.crossover_prob)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        if self.reference_divisions == 0 {
            return Err(ConfigError::Divisions);
        }
        Ok(())
    }
}

/// One chromosome, optionally with its cached score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mask: FeatureMask,
    pub objectives: Option<ObjectiveVector>,
}

impl Candidate {
    pub fn new(mask: FeatureMask) -> Self {
        Self { mask, objectives: None }
    }
}

/// `p` singleton masks: every feature once, the remaining slots random.
pub fn initial_population<R: Rng>(m: usize, p: usize, rng: &mut R) -> Vec<Candidate> {
    assert!(m >= 1 && p >= m);
    let mut pop: Vec<Candidate> = (0..m).map(|i| Candidate::new(FeatureMask::singleton(m, i))).collect();
    pop.extend((m..p).map(|_| Candidate::new(FeatureMask::singleton(m, rng.gen_range(0..m)))));
    pop
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub mask: FeatureMask,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub config: GaConfig,
    pub dataset: DatasetFingerprint,
    pub classifier: ClassifierKind,
    pub vif_cap: f64,
    pub crossover: String,
    pub parent_selection: String,
    pub evaluation_count: usize,
    pub generations: usize,
    /// Set when the budget was not reached because no new masks appeared.
    pub stalled: bool,
    /// Absent from reports so they stay byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// Deduplicated, mutually non-dominated solutions from the final population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub solutions: Vec<Solution>,
    pub provenance: RunProvenance,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn evaluation_count(&self) -> usize {
        self.provenance.evaluation_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Progress {
    pub evaluations_done: usize,
    pub max_evaluations: usize,
    pub generation: usize,
}

/// Full outcome of a search, including every evaluated mask.
#[derive(Debug, Clone)]
pub struct GaRun {
    pub front: SolutionSet,
    pub final_population: Vec<Solution>,
    /// Every distinct mask evaluated, in evaluation order.
    pub visited: Vec<Solution>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("evaluation failed: {error}")]
    Evaluation {
        error: EvalError,
        /// Front of the last complete population, if one existed.
        partial: Option<Box<SolutionSet>>,
    },
}

pub fn run(evaluator: &Evaluator<'_>, cfg: &GaConfig) -> Result<SolutionSet, RunError> {
    run_detailed(evaluator, cfg, |_| {}).map(|r| r.front)
}

/// Runs the search, reporting progress after the initial population and after
/// every generation.
pub fn run_detailed(
    evaluator: &Evaluator<'_>,
    cfg: &GaConfig,
    mut on_progress: impl FnMut(Progress),
) -> Result<GaRun, RunError> {
    let started = Instant::now();
    let ds = evaluator.dataset();
    let m = ds.n_features();
    cfg.validate(m)?;
    let p = cfg.population_size;
    let refs = generate_reference_points(N_OBJECTIVES, cfg.reference_divisions);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut archive = Archive::default();

    let mut provenance = RunProvenance {
        config: cfg.clone(),
        dataset: ds.fingerprint(),
        classifier: evaluator.kind(),
        vif_cap: evaluator.vif_cap(),
        crossover: "single_point".into(),
        parent_selection: "binary_tournament_on_front_rank".into(),
        evaluation_count: 0,
        generations: 0,
        stalled: false,
        wall_time_ms: None,
    };
    let fail = |error: EvalError, population: Option<&[Solution]>, archive: &Archive, prov: &RunProvenance| {
        let partial = population.map(|pop| {
            let mut prov = prov.clone();
            prov.evaluation_count = archive.len();
            Box::new(SolutionSet {
                solutions: final_front(pop, &archive.visited),
                provenance: prov,
            })
        });
        RunError::Evaluation { error, partial }
    };

    let initial: Vec<FeatureMask> = initial_population(m, p, &mut rng).into_iter().map(|c| c.mask).collect();
    if let Err(e) = archive.evaluate_new(evaluator, &initial, cfg.max_evaluations) {
        return Err(fail(e, None, &archive, &provenance));
    }
    let mut population: Vec<Solution> = initial.iter().map(|mk| archive.solution(mk)).collect();
    let mut progress = Progress {
        evaluations_done: archive.len(),
        max_evaluations: cfg.max_evaluations,
        generation: 0,
    };
    on_progress(progress);

    let mut stall = 0;
    while archive.len() < cfg.max_evaluations && stall < STALL_GENERATIONS {
        let points: Vec<[f64; N_OBJECTIVES]> = population.iter().map(|s| s.objectives.to_array()).collect();
        let ranks = front_ranks(&points, &DIRECTIONS);

        let mut offspring: Vec<FeatureMask> = Vec::with_capacity(p + 1);
        while offspring.len() < p {
            let a = &population[tournament(&ranks, &mut rng)].mask;
            let b = &population[tournament(&ranks, &mut rng)].mask;
            let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_prob {
                single_point_crossover(a, b, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            for child in [&mut c1, &mut c2] {
                mutate(child, cfg.mutation_prob, &mut rng);
                repair(child, &mut rng);
            }
            offspring.push(c1);
            if offspring.len() < p {
                offspring.push(c2);
            }
        }

        let before = archive.len();
        if let Err(e) = archive.evaluate_new(evaluator, &offspring, cfg.max_evaluations) {
            return Err(fail(e, Some(&population), &archive, &provenance));
        }
        stall = if archive.len() == before { stall + 1 } else { 0 };

        // Offspring that duplicate a parent or each other add nothing; those
        // left unevaluated by the budget are dropped.
        let mut seen: HashSet<&FeatureMask> = population.iter().map(|s| &s.mask).collect();
        let mut combined = population.clone();
        for mask in &offspring {
            if archive.contains(mask) && seen.insert(mask) {
                combined.push(archive.solution(mask));
            }
        }
        let points: Vec<[f64; N_OBJECTIVES]> = combined.iter().map(|s| s.objectives.to_array()).collect();
        let survivors = environmental_selection(&points, &DIRECTIONS, &refs, p, &mut rng);
        population = survivors.into_iter().map(|i| combined[i].clone()).collect();

        progress.generation += 1;
        progress.evaluations_done = archive.len();
        on_progress(progress);
    }

    provenance.evaluation_count = archive.len();
    provenance.generations = progress.generation;
    provenance.stalled = archive.len() < cfg.max_evaluations;
    provenance.wall_time_ms = Some(started.elapsed().as_millis() as u64);
    let solutions = final_front(&population, &archive.visited);
    Ok(GaRun {
        front: SolutionSet { solutions, provenance },
        final_population: population,
        visited: archive.visited,
    })
}

/// Non-dominated, deduplicated members of the population.
///
/// Members dominated by an earlier-visited mask that has since been lost are
/// dropped, unless that would leave nothing.
fn final_front(population: &[Solution], visited: &[Solution]) -> Vec<Solution> {
    let points: Vec<[f64; N_OBJECTIVES]> = population.iter().map(|s| s.objectives.to_array()).collect();
    let Some(first) = non_dominated_sort(&points, &DIRECTIONS).into_iter().next() else {
        return Vec::new();
    };
    let mut seen = HashSet::new();
    let front: Vec<Solution> = first
        .into_iter()
        .filter(|&i| seen.insert(population[i].mask.clone()))
        .map(|i| population[i].clone())
        .collect();
    let visited_points: Vec<[f64; N_OBJECTIVES]> = visited.iter().map(|s| s.objectives.to_array()).collect();
    let consistent: Vec<Solution> = front
        .iter()
        .filter(|s| {
            let a = s.objectives.to_array();
            !visited_points.iter().any(|v| dominates(v, &a, &DIRECTIONS))
        })
        .cloned()
        .collect();
    if consistent.is_empty() {
        log::warn!("every final-population solution is dominated by a lost visited mask");
        front
    } else {
        consistent
    }
}

fn tournament<R: Rng>(ranks: &[usize], rng: &mut R) -> usize {
    let a = rng.gen_range(0..ranks.len());
    let b = rng.gen_range(0..ranks.len());
    match ranks[a].cmp(&ranks[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => *[a, b].choose(rng).expect("two entries"),
    }
}

fn single_point_crossover<R: Rng>(a: &FeatureMask, b: &FeatureMask, rng: &mut R) -> (FeatureMask, FeatureMask) {
    let m = a.len();
    let cut = rng.gen_range(1..m);
    let child = |x: &FeatureMask, y: &FeatureMask| {
        FeatureMask::from_bits(x.bits()[..cut].iter().chain(&y.bits()[cut..]).copied().collect())
    };
    (child(a, b), child(b, a))
}

fn mutate<R: Rng>(mask: &mut FeatureMask, prob: f64, rng: &mut R) {
    for i in 0..mask.len() {
        if rng.gen::<f64>() < prob {
            mask.flip(i);
        }
    }
}

fn repair<R: Rng>(mask: &mut FeatureMask, rng: &mut R) {
    if mask.count() == 0 {
        let i = rng.gen_range(0..mask.len());
        mask.set(i, true);
    }
}

#[derive(Default)]
struct Archive {
    scores: HashMap<FeatureMask, ObjectiveVector>,
    visited: Vec<Solution>,
}

impl Archive {
    fn len(&self) -> usize {
        self.visited.len()
    }

    fn contains(&self, mask: &FeatureMask) -> bool {
        self.scores.contains_key(mask)
    }

    fn solution(&self, mask: &FeatureMask) -> Solution {
        Solution {
            mask: mask.clone(),
            objectives: self.scores[mask],
        }
    }

    /// Evaluates unseen masks in order, in parallel, without exceeding `budget`.
    fn evaluate_new(&mut self, evaluator: &Evaluator<'_>, masks: &[FeatureMask], budget: usize) -> Result<(), EvalError> {
        let mut fresh: Vec<&FeatureMask> = Vec::new();
        let mut queued = HashSet::new();
        for mask in masks {
            if !self.scores.contains_key(mask) && queued.insert(mask) {
                fresh.push(mask);
            }
        }
        fresh.truncate(budget.saturating_sub(self.len()));
        let results: Vec<Result<ObjectiveVector, EvalError>> =
            fresh.par_iter().map(|mask| evaluator.evaluate(mask)).collect();
        for (mask, result) in fresh.into_iter().zip(results) {
            let objectives = result?;
            self.scores.insert(mask.clone(), objectives);
            self.visited.push(Solution {
                mask: mask.clone(),
                objectives,
            });
        }
        Ok(())
    }
}
