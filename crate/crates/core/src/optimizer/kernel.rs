//! Bounded continuous swarm optimization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub population: usize,
    pub generations: usize,
    /// Pull of each member toward its own best position.
    pub exploration: f64,
    /// Pull of each member toward the herd best.
    pub exploitation: f64,
    /// Memory weight at the first and last generation.
    pub inertia_start: f64,
    pub inertia_end: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            population: 10,
            generations: 100,
            exploration: 0.6,
            exploitation: 0.5,
            inertia_start: 0.9,
            inertia_end: 0.4,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Input("swarm population must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::Input("swarm needs at least one generation".into()));
        }
        let coeffs = [
            self.exploration,
            self.exploitation,
            self.inertia_start,
            self.inertia_end,
        ];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Input("swarm coefficients must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelResult {
    pub best: Vec<f64>,
    /// `-inf` when every candidate was discarded.
    pub best_fitness: f64,
    /// Best fitness after initialization and after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Maximizes an objective over a box. Implementations must be deterministic
/// for a given seed, keep every evaluated point inside the box, and return a
/// non-decreasing best-fitness trace.
pub trait SwarmKernel {
    fn maximize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        bounds: &[(f64, f64)],
        seed: u64,
    ) -> Result<KernelResult>;
}

/// Herd-style optimizer. Each member carries a movement memory that decays
/// with an inertia weight and is pulled toward the herd best and its own
/// best. Every generation the worst member is scattered across the box and
/// one member grazes a shrinking neighbourhood of the herd best.
#[derive(Debug, Clone, Copy, Default)]
pub struct HerdOptimizer {
    pub config: SwarmConfig,
}

impl HerdOptimizer {
    pub fn new(config: SwarmConfig) -> Self {
        Self { config }
    }
}

/// Initial neighbourhood of the grazing move as a fraction of the box width.
const GRAZE_RADIUS: f64 = 0.1;

struct Member {
    pos: Vec<f64>,
    memory: Vec<f64>,
    fitness: f64,
    best: Vec<f64>,
    best_fitness: f64,
}

fn sample(bounds: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect()
}

fn clamp_into(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

struct Scorer<'a> {
    objective: &'a mut dyn FnMut(&[f64]) -> f64,
    evaluations: usize,
}

impl Scorer<'_> {
    fn score(&mut self, x: &[f64]) -> Option<f64> {
        self.evaluations += 1;
        let f = (self.objective)(x);
        if f.is_nan() {
            log::warn!("objective returned NaN at {x:?}; candidate discarded");
            None
        } else {
            Some(f)
        }
    }
}

impl SwarmKernel for HerdOptimizer {
    fn maximize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        bounds: &[(f64, f64)],
        seed: u64,
    ) -> Result<KernelResult> {
        let cfg = &self.config;
        cfg.validate()?;
        if let Some(&(lo, hi)) = bounds.iter().find(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo > hi) {
            return Err(Error::Input(format!("invalid search bound [{lo}, {hi}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scorer = Scorer { objective, evaluations: 0 };
        let dims = bounds.len();

        let mut herd: Vec<Member> = (0..cfg.population)
            .map(|_| {
                let pos = sample(bounds, &mut rng);
                let fitness = scorer.score(&pos).unwrap_or(f64::NEG_INFINITY);
                Member {
                    best: pos.clone(),
                    best_fitness: fitness,
                    memory: vec![0.0; dims],
                    pos,
                    fitness,
                }
            })
            .collect();

        let leader = |herd: &[Member]| {
            (0..herd.len()).fold(0, |b, i| if herd[i].best_fitness > herd[b].best_fitness { i } else { b })
        };
        let mut lead = leader(&herd);
        let mut best = herd[lead].best.clone();
        let mut best_fitness = herd[lead].best_fitness;
        let mut trace = Vec::with_capacity(cfg.generations + 1);
        trace.push(best_fitness);

        let span = cfg.generations.saturating_sub(1).max(1) as f64;
        for g in 0..cfg.generations {
            let progress = g as f64 / span;
            let inertia = cfg.inertia_start + (cfg.inertia_end - cfg.inertia_start) * progress;

            for m in herd.iter_mut() {
                let mut next = m.pos.clone();
                for d in 0..dims {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    m.memory[d] = inertia * m.memory[d]
                        + cfg.exploitation * r1 * (best[d] - m.pos[d])
                        + cfg.exploration * r2 * (m.best[d] - m.pos[d]);
                    next[d] += m.memory[d];
                }
                clamp_into(&mut next, bounds);
                if let Some(f) = scorer.score(&next) {
                    m.pos = next;
                    m.fitness = f;
                }
            }

            let worst = (0..herd.len()).fold(0, |w, i| if herd[i].fitness < herd[w].fitness { i } else { w });
            let pos = sample(bounds, &mut rng);
            if let Some(f) = scorer.score(&pos) {
                let m = &mut herd[worst];
                m.pos = pos;
                m.fitness = f;
                m.memory.iter_mut().for_each(|v| *v = 0.0);
            }

            let grazer = rng.random_range(0..herd.len());
            let radius = GRAZE_RADIUS * (1.0 - progress);
            let mut pos: Vec<f64> = best
                .iter()
                .zip(bounds)
                .map(|(b, &(lo, hi))| b + radius * (hi - lo) * rng.random_range(-1.0..=1.0))
                .collect();
            clamp_into(&mut pos, bounds);
            if let Some(f) = scorer.score(&pos) {
                let m = &mut herd[grazer];
                m.pos = pos;
                m.fitness = f;
            }

            for m in herd.iter_mut() {
                if m.fitness > m.best_fitness {
                    m.best_fitness = m.fitness;
                    m.best = m.pos.clone();
                }
            }
            lead = leader(&herd);
            if herd[lead].best_fitness > best_fitness {
                best_fitness = herd[lead].best_fitness;
                best = herd[lead].best.clone();
            }
            trace.push(best_fitness);
        }

        Ok(KernelResult {
            best,
            best_fitness,
            trace,
            evaluations: scorer.evaluations,
        })
    }
}
