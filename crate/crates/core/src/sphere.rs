//! Averages over the unit sphere of functions that depend on a direction only
//! through its squared mass in each block of coordinates.
//!
//! For a uniform unit vector in `R^d` the squared components follow a
//! Dirichlet(1/2, ..., 1/2) law, so the block masses `w_b` follow
//! Dirichlet(m_1/2, ..., m_B/2). Every rule here is a discrete probability
//! measure on that simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_spaces::RicciSpectrum;
use crate::quadrature::beta_rule;

/// Block counts up to which the deterministic Gauss-Jacobi product rule is used.
pub const MAX_EXACT_BLOCKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMode {
    ExactReduced,
    MonteCarlo,
}

fn default_fallback_samples() -> usize {
    1_000_000
}

/// How sphere averages are computed.
///
/// `nodes` is the Gauss-Jacobi order per simplex axis in exact-reduced mode
/// and the sample count in Monte Carlo mode. Exact-reduced requests with more
/// than three blocks fall back to Monte Carlo with `fallback_samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereQuadrature {
    pub mode: QuadratureMode,
    pub nodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_fallback_samples")]
    pub fallback_samples: usize,
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        Self::exact(64)
    }
}

impl SphereQuadrature {
    pub fn exact(nodes: usize) -> Self {
        Self {
            mode: QuadratureMode::ExactReduced,
            nodes,
            seed: 0,
            fallback_samples: default_fallback_samples(),
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self {
            mode: QuadratureMode::MonteCarlo,
            nodes: samples,
            seed,
            fallback_samples: samples,
        }
    }

    pub fn with_fallback(mut self, samples: usize, seed: u64) -> Self {
        self.fallback_samples = samples;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(Error::arg(format!(
                "sphere quadrature needs at least 8 nodes, got {}",
                self.nodes
            )));
        }
        if self.fallback_samples < 8 {
            return Err(Error::arg("Monte Carlo fallback needs at least 8 samples"));
        }
        Ok(())
    }
}

/// Discrete probability measure on the block-mass simplex.
#[derive(Debug, Clone)]
pub struct SimplexMeasure {
    blocks: usize,
    points: Vec<f64>,
    probs: Vec<f64>,
    monte_carlo: bool,
}

impl SimplexMeasure {
    /// Rule for block multiplicities `mults` (block dimension counts).
    pub fn new(mults: &[usize], quad: &SphereQuadrature) -> Result<Self> {
        quad.validate()?;
        if mults.is_empty() || mults.contains(&0) {
            return Err(Error::arg("block multiplicities must be positive"));
        }
        if mults.len() == 1 {
            return Ok(Self {
                blocks: 1,
                points: vec![1.0],
                probs: vec![1.0],
                monte_carlo: false,
            });
        }
        match quad.mode {
            QuadratureMode::ExactReduced if mults.len() <= MAX_EXACT_BLOCKS => {
                Self::gauss_jacobi(mults, quad.nodes)
            }
            QuadratureMode::ExactReduced => {
                Ok(Self::monte_carlo(mults, quad.fallback_samples, quad.seed))
            }
            QuadratureMode::MonteCarlo => Ok(Self::monte_carlo(mults, quad.nodes, quad.seed)),
        }
    }

    /// Stick-breaking: `w_1 ~ Beta(a_1, a_2 + ... + a_B)`, then the remainder is
    /// split recursively, each stage with its own Gauss-Jacobi rule.
    fn gauss_jacobi(mults: &[usize], nodes: usize) -> Result<Self> {
        let shapes: Vec<f64> = mults.iter().map(|&m| 0.5 * m as f64).collect();
        let blocks = shapes.len();
        let stages = (0..blocks - 1)
            .map(|b| beta_rule(nodes, shapes[b], shapes[b + 1..].iter().sum()))
            .collect::<Result<Vec<_>>>()?;

        let mut points = Vec::new();
        let mut probs = Vec::new();
        let mut index = vec![0usize; blocks - 1];
        loop {
            let mut remaining = 1.0;
            let mut prob = 1.0;
            for (stage, &i) in stages.iter().zip(&index) {
                let w = remaining * stage.nodes[i];
                points.push(w);
                remaining -= w;
                prob *= stage.weights[i];
            }
            points.push(remaining.max(0.0));
            probs.push(prob);

            // Odometer increment over the tensor-product index.
            let mut axis = 0;
            loop {
                if axis == index.len() {
                    return Ok(Self {
                        blocks,
                        points,
                        probs,
                        monte_carlo: false,
                    });
                }
                index[axis] += 1;
                if index[axis] < nodes {
                    break;
                }
                index[axis] = 0;
                axis += 1;
            }
        }
    }

    fn monte_carlo(mults: &[usize], samples: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = mults.len();
        let mut points = Vec::with_capacity(samples * blocks);
        let mut masses = vec![0.0; blocks];
        for _ in 0..samples {
            let mut total = 0.0;
            for (mass, &m) in masses.iter_mut().zip(mults) {
                *mass = (0..m)
                    .map(|_| {
                        let g: f64 = rng.sample(StandardNormal);
                        g * g
                    })
                    .sum();
                total += *mass;
            }
            points.extend(masses.iter().map(|m| m / total));
        }
        let p = 1.0 / samples as f64;
        Self {
            blocks,
            points,
            probs: vec![p; samples],
            monte_carlo: true,
        }
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_monte_carlo(&self) -> bool {
        self.monte_carlo
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.blocks..(i + 1) * self.blocks]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points
            .chunks_exact(self.blocks)
            .zip(self.probs.iter().copied())
    }

    /// `sum_i p_i f(w_i)`.
    pub fn expect<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(w, p)| p * f(w)).sum()
    }

    /// Linear functional `sum_b c_b w_b` evaluated at every node.
    pub fn linear_values(&self, coeffs: &[f64]) -> Vec<f64> {
        self.points
            .chunks_exact(self.blocks)
            .map(|w| w.iter().zip(coeffs).map(|(w, c)| w * c).sum())
            .collect()
    }
}

/// Distribution of the Ricci form value over uniformly random directions.
#[derive(Debug, Clone)]
pub struct RicciDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    monte_carlo: bool,
}

impl RicciDistribution {
    pub fn new(spectrum: &RicciSpectrum, quad: &SphereQuadrature) -> Result<Self> {
        let mults: Vec<usize> = spectrum.eigenvalues().iter().map(|p| p.1).collect();
        let lambdas: Vec<f64> = spectrum.eigenvalues().iter().map(|p| p.0).collect();
        let measure = SimplexMeasure::new(&mults, quad)?;
        let (lo, hi) = (spectrum.min(), spectrum.max());
        let values = measure
            .linear_values(&lambdas)
            .into_iter()
            .map(|x| x.clamp(lo, hi))
            .collect();
        Ok(Self {
            values,
            probs: measure.probs().to_vec(),
            monte_carlo: measure.is_monte_carlo(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_monte_carlo(&self) -> bool {
        self.monte_carlo
    }

    pub fn average<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(&x, p)| p * f(x))
            .sum()
    }

    /// Standard error of [`average`](Self::average) when the rule is a Monte
    /// Carlo sample; zero for deterministic rules.
    pub fn standard_error<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        if !self.monte_carlo {
            return 0.0;
        }
        let n = self.values.len() as f64;
        let mean = self.average(&f);
        let var = self
            .values
            .iter()
            .map(|&x| (f(x) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Average of `f(Ric(X, X))` over unit directions `X`.
pub fn sphere_average<F: Fn(f64) -> f64>(
    spectrum: &RicciSpectrum,
    f: F,
    quad: &SphereQuadrature,
) -> Result<f64> {
    Ok(RicciDistribution::new(spectrum, quad)?.average(f))
}
