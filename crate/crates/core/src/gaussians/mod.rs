//! Gaussian cloud data model, pixel-aligned construction and colour
//! refinement.

mod construct;
mod refine;
pub mod sh;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

pub use construct::{pixel_aligned_cloud, pixel_angular_extent, PixelAlignedParams};
pub use refine::{color_loss_and_gradient, refine_colors, RefineOptions, RefineReport, RefineView};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian3D {
    pub position: Vector3<f64>,
    /// Per-axis standard deviations.
    pub scale: Vector3<f64>,
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub opacity: f64,
    /// SH coefficients laid out `[coefficient][channel]`.
    pub sh: Vec<f64>,
}

impl Gaussian3D {
    /// Isotropic Gaussian with a degree-0 colour.
    pub fn isotropic(position: Vector3<f64>, sigma: f64, opacity: f64, rgb: [f64; 3]) -> Self {
        Gaussian3D {
            position,
            scale: Vector3::repeat(sigma),
            rotation: [1.0, 0.0, 0.0, 0.0],
            opacity,
            sh: rgb.iter().map(|&c| sh::dc_from_color(c)).collect(),
        }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)).to_rotation_matrix().into_inner()
    }

    /// World-space covariance `R diag(s^2) R^T`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        let s2 = Matrix3::from_diagonal(&self.scale.component_mul(&self.scale));
        r * s2 * r.transpose()
    }

    pub fn validate(&self, index: usize, sh_degree: u32) -> Result<()> {
        let bad = |message: String| Error::InvalidGaussian { index, message };
        if self.scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(bad(format!("scale must be positive, got {:?}", self.scale)));
        }
        let qn = self.rotation.iter().map(|q| q * q).sum::<f64>().sqrt();
        if (qn - 1.0).abs() > 1e-6 {
            return Err(bad(format!("quaternion norm {qn}")));
        }
        if !(self.opacity > 0.0 && self.opacity <= 1.0) {
            return Err(bad(format!("opacity {} outside (0, 1]", self.opacity)));
        }
        if self.sh.len() != 3 * sh::coeffs_per_channel(sh_degree) {
            return Err(bad(format!(
                "{} SH coefficients for degree {sh_degree}",
                self.sh.len()
            )));
        }
        if self.position.iter().chain(self.sh.iter()).any(|x| !x.is_finite()) {
            return Err(bad("non-finite parameter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCloud {
    sh_degree: u32,
    gaussians: Vec<Gaussian3D>,
}

impl GaussianCloud {
    pub fn new(sh_degree: u32) -> Result<Self> {
        if sh_degree > sh::MAX_SH_DEGREE {
            return Err(Error::Unsupported(format!("SH degree {sh_degree}")));
        }
        Ok(GaussianCloud {
            sh_degree,
            gaussians: Vec::new(),
        })
    }

    pub fn from_gaussians(sh_degree: u32, gaussians: Vec<Gaussian3D>) -> Result<Self> {
        let mut cloud = Self::new(sh_degree)?;
        for (i, g) in gaussians.iter().enumerate() {
            g.validate(i, sh_degree)?;
        }
        cloud.gaussians = gaussians;
        Ok(cloud)
    }

    pub fn push(&mut self, g: Gaussian3D) -> Result<()> {
        g.validate(self.gaussians.len(), self.sh_degree)?;
        self.gaussians.push(g);
        Ok(())
    }

    /// Appends all Gaussians of `other`; SH degrees must agree.
    pub fn extend_from(&mut self, other: &GaussianCloud) -> Result<()> {
        if other.sh_degree != self.sh_degree {
            return Err(Error::ShapeMismatch(format!(
                "SH degree {} vs {}",
                self.sh_degree, other.sh_degree
            )));
        }
        self.gaussians.extend_from_slice(&other.gaussians);
        Ok(())
    }

    /// Concatenates clouds in order.
    pub fn unify<'a>(clouds: impl IntoIterator<Item = &'a GaussianCloud>) -> Result<Self> {
        let mut iter = clouds.into_iter();
        let first = match iter.next() {
            Some(c) => c.clone(),
            None => return GaussianCloud::new(0),
        };
        iter.try_fold(first, |mut acc, c| {
            acc.extend_from(c)?;
            Ok(acc)
        })
    }

    pub fn sh_degree(&self) -> u32 {
        self.sh_degree
    }
    pub fn len(&self) -> usize {
        self.gaussians.len()
    }
    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }
    pub fn gaussians(&self) -> &[Gaussian3D] {
        &self.gaussians
    }

    /// Mutable access for colour edits; callers keep the invariants.
    pub(crate) fn gaussians_mut(&mut self) -> &mut [Gaussian3D] {
        &mut self.gaussians
    }

    /// Replaces the SH coefficients of Gaussian `i`.
    pub fn set_sh(&mut self, i: usize, sh: &[f64]) -> Result<()> {
        let n = 3 * sh::coeffs_per_channel(self.sh_degree);
        if sh.len() != n || sh.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "expected {n} finite SH coefficients"
            )));
        }
        self.gaussians[i].sh.copy_from_slice(sh);
        Ok(())
    }

    /// Colour of Gaussian `i` seen from `eye`.
    pub fn color(&self, i: usize, eye: &Vector3<f64>) -> [f64; 3] {
        let g = &self.gaussians[i];
        let d = (g.position - eye).try_normalize(0.0).unwrap_or_else(Vector3::z);
        sh::eval_color(self.sh_degree, &g.sh, &d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_of_rotated_anisotropic() {
        let half = std::f64::consts::FRAC_PI_4;
        let g = Gaussian3D {
            position: Vector3::zeros(),
            scale: Vector3::new(2.0, 1.0, 0.5),
            // 90 degrees about z
            rotation: [half.cos(), 0.0, 0.0, half.sin()],
            opacity: 0.5,
            sh: vec![0.0; 3],
        };
        let c = g.covariance();
        assert!((c[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((c[(1, 1)] - 4.0).abs() < 1e-12);
        assert!((c[(2, 2)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let ok = Gaussian3D::isotropic(Vector3::zeros(), 0.1, 1.0, [0.1, 0.2, 0.3]);
        assert!(ok.validate(0, 0).is_ok());
        let mut bad = ok.clone();
        bad.opacity = 0.0;
        assert!(bad.validate(0, 0).is_err());
        let mut bad = ok.clone();
        bad.scale.x = -1.0;
        assert!(bad.validate(0, 0).is_err());
        assert!(ok.validate(0, 1).is_err());
        assert!(GaussianCloud::new(4).is_err());
    }

    #[test]
    fn unify_concatenates() {
        let g = Gaussian3D::isotropic(Vector3::zeros(), 0.1, 1.0, [0.1, 0.2, 0.3]);
        let a = GaussianCloud::from_gaussians(0, vec![g.clone()]).unwrap();
        let b = GaussianCloud::from_gaussians(0, vec![g.clone(), g]).unwrap();
        assert_eq!(GaussianCloud::unify([&a, &b]).unwrap().len(), 3);
    }
}
