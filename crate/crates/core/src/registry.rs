//! Named volume curves. The CLI picks columns by these names.

use crate::bounds::{bg_curve, EnhancedKernel};
use crate::error::{Error, Result};
use crate::model_spaces::{exact_ball_volume, model_ball_volume, ProductSpace};
use crate::sphere::SphereQuadrature;

pub trait VolumeModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Ball volumes at ascending `times`.
    fn curve(
        &self,
        space: &ProductSpace,
        times: &[f64],
        quad: &SphereQuadrature,
    ) -> Result<Vec<f64>>;
}

/// True geodesic-ball volume.
pub struct ExactVolume;

/// Direction-averaged comparison bound.
pub struct EnhancedBound;

/// Classical bound from the smallest Ricci eigenvalue.
pub struct ClassicalBound;

/// Constant-curvature space with the same scalar curvature (not a bound).
pub struct ScalarModel;

impl VolumeModel for ExactVolume {
    fn name(&self) -> &'static str {
        "volume"
    }

    fn curve(&self, space: &ProductSpace, times: &[f64], _: &SphereQuadrature) -> Result<Vec<f64>> {
        times.iter().map(|&t| exact_ball_volume(space, t)).collect()
    }
}

impl VolumeModel for EnhancedBound {
    fn name(&self) -> &'static str {
        "ebg"
    }

    fn curve(
        &self,
        space: &ProductSpace,
        times: &[f64],
        quad: &SphereQuadrature,
    ) -> Result<Vec<f64>> {
        EnhancedKernel::new(&space.ricci_spectrum(), quad)?.curve(times)
    }
}

impl VolumeModel for ClassicalBound {
    fn name(&self) -> &'static str {
        "bg"
    }

    fn curve(&self, space: &ProductSpace, times: &[f64], _: &SphereQuadrature) -> Result<Vec<f64>> {
        bg_curve(&space.ricci_spectrum(), times)
    }
}

impl VolumeModel for ScalarModel {
    fn name(&self) -> &'static str {
        "hr"
    }

    fn curve(&self, space: &ProductSpace, times: &[f64], _: &SphereQuadrature) -> Result<Vec<f64>> {
        let d = space.dim();
        let k = space.ricci_spectrum().scalar() / (d * (d - 1)) as f64;
        times.iter().map(|&t| model_ball_volume(d, k, t)).collect()
    }
}

pub fn volume_models() -> Vec<Box<dyn VolumeModel>> {
    vec![
        Box::new(ExactVolume),
        Box::new(EnhancedBound),
        Box::new(ClassicalBound),
        Box::new(ScalarModel),
    ]
}

pub fn volume_model(name: &str) -> Result<Box<dyn VolumeModel>> {
    volume_models()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::Unknown {
            what: "volume model",
            name: name.to_string(),
        })
}
