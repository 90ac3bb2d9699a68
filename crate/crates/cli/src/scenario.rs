//! Scenario files: the spaces to study, the radial grid, and settings for
//! each suite. JSON, with defaults for everything except spaces and grid.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use ebg_core::model_spaces::{ProductSpace, SpaceFactor};
use ebg_core::sphere::{QuadratureMode, SphereQuadrature};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDecl {
    pub name: String,
    pub factors: Vec<SpaceFactor>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl TGrid {
    pub fn times(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureDecl {
    pub mode: QuadratureMode,
    pub nodes: usize,
    pub seed: Option<u64>,
    pub fallback_samples: Option<usize>,
}

impl Default for QuadratureDecl {
    fn default() -> Self {
        Self {
            mode: QuadratureMode::ExactReduced,
            nodes: 64,
            seed: None,
            fallback_samples: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JacobiSettings {
    pub horizon: f64,
    pub step: f64,
    pub trials: u64,
    pub seed: Option<u64>,
    pub p_list: Vec<f64>,
    /// Adds a monotonicity trial whose schedules are deliberately out of order.
    pub inject_reversed: bool,
}

impl Default for JacobiSettings {
    fn default() -> Self {
        Self {
            horizon: 3.0,
            step: 1e-3,
            trials: 1000,
            seed: None,
            p_list: vec![1.0, 2.0, 3.0, 5.0],
            inject_reversed: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicSettings {
    pub directions: usize,
    pub horizon: f64,
    pub step: f64,
    pub liouville_samples: usize,
    pub ratio_points: usize,
}

impl Default for GeodesicSettings {
    fn default() -> Self {
        Self {
            directions: 8,
            horizon: 3.0,
            step: 1e-3,
            liouville_samples: 400,
            ratio_points: 50,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticSettings {
    pub d: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub t_check: f64,
    pub nodes: usize,
}

impl Default for AsymptoticSettings {
    fn default() -> Self {
        Self {
            d: 4,
            t_min: 50.0,
            t_max: 200.0,
            points: 16,
            t_check: 100.0,
            nodes: 256,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    spaces: Vec<SpaceDecl>,
    t_grid: TGrid,
    #[serde(default)]
    quadrature: QuadratureDecl,
    #[serde(default)]
    jacobi: JacobiSettings,
    #[serde(default)]
    geodesic: GeodesicSettings,
    #[serde(default)]
    asymptotics: AsymptoticSettings,
    #[serde(default)]
    columns: Option<Vec<String>>,
    #[serde(default = "default_outputs")]
    outputs: PathBuf,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spaces: Vec<(String, ProductSpace)>,
    pub t_grid: TGrid,
    pub quadrature: SphereQuadrature,
    pub jacobi: JacobiSettings,
    pub geodesic: GeodesicSettings,
    pub asymptotics: AsymptoticSettings,
    pub columns: Vec<String>,
    pub outputs: PathBuf,
    pub seed: u64,
}

impl Scenario {
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        Self::parse(&text, seed).with_context(|| format!("in scenario {}", path.display()))
    }

    /// Parses and validates; `seed` overrides every seed in the file.
    pub fn parse(text: &str, seed: Option<u64>) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text)?;
        ensure!(!raw.spaces.is_empty(), "at least one space is required");
        let mut names = BTreeSet::new();
        let mut spaces = Vec::new();
        for decl in raw.spaces {
            ensure!(
                !decl.name.is_empty()
                    && decl
                        .name
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
                "space name {:?} must be non-empty and use only [A-Za-z0-9_-]",
                decl.name
            );
            ensure!(
                names.insert(decl.name.clone()),
                "duplicate space name {:?}",
                decl.name
            );
            let space = ProductSpace::new(decl.factors)
                .with_context(|| format!("space {:?}", decl.name))?;
            spaces.push((decl.name, space));
        }

        let g = raw.t_grid;
        ensure!(
            g.start >= 0.0 && g.start.is_finite(),
            "t_grid.start must be >= 0"
        );
        ensure!(g.points >= 2, "t_grid.points must be at least 2");
        ensure!(
            g.stop > g.start && g.stop.is_finite(),
            "t_grid.stop must exceed t_grid.start"
        );

        let j = &raw.jacobi;
        ensure!(
            j.horizon > 0.0 && j.step > 0.0 && j.step <= j.horizon,
            "jacobi needs 0 < step <= horizon"
        );
        ensure!(
            j.p_list.iter().all(|p| *p >= 1.0),
            "jacobi.p_list entries must be >= 1"
        );
        let jacobi_seed = match (seed, j.seed) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) if j.trials == 0 => 0,
            (None, None) => bail!("jacobi.seed is required when randomized trials are requested"),
        };

        let q = &raw.quadrature;
        let quad_seed = match (seed, q.seed) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) if q.mode == QuadratureMode::MonteCarlo => {
                bail!("quadrature.seed is required in monte-carlo mode")
            }
            (None, None) => 0,
        };
        let mut quadrature = SphereQuadrature::exact(q.nodes);
        quadrature.mode = q.mode;
        quadrature.seed = quad_seed;
        if let Some(n) = q.fallback_samples {
            quadrature.fallback_samples = n;
        }
        quadrature.validate()?;

        let geo = &raw.geodesic;
        ensure!(
            geo.horizon > 0.0 && geo.step > 0.0 && geo.step <= geo.horizon,
            "geodesic needs 0 < step <= horizon"
        );
        ensure!(
            geo.ratio_points >= 2,
            "geodesic.ratio_points must be at least 2"
        );
        let a = &raw.asymptotics;
        ensure!(
            a.d >= 3 && a.points >= 2 && 0.0 < a.t_min && a.t_min < a.t_max,
            "invalid asymptotics settings"
        );

        let columns = raw
            .columns
            .unwrap_or_else(|| ["volume", "ebg", "bg", "hr"].map(String::from).to_vec());
        for c in &columns {
            ebg_core::registry::volume_model(c)?;
        }
        let mut jacobi = raw.jacobi;
        jacobi.seed = Some(jacobi_seed);
        Ok(Self {
            spaces,
            t_grid: g,
            quadrature,
            jacobi,
            geodesic: raw.geodesic,
            asymptotics: raw.asymptotics,
            columns,
            outputs: raw.outputs,
            seed: jacobi_seed,
        })
    }
}
