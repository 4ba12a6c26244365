use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::sphere_geom::{yang_matrix, Direction};

/// Tolerance on orthonormality and determinant of stored rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Rigid camera pose. `rotation` maps world to camera axes and `translation`
/// is the camera centre in world coordinates: `x_cam = R (x_world - t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        Self::with_tolerance(rotation, translation, ROTATION_TOLERANCE)
    }

    /// Validates `rotation` to `tol`. Rotations off by more than
    /// [`ROTATION_TOLERANCE`] are re-orthonormalized so the stored value
    /// always satisfies the tight invariant.
    pub fn with_tolerance(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tol: f64,
    ) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        let err = orthonormality_error(&rotation);
        if err > tol {
            return Err(Error::InvalidPose(format!(
                "rotation is not orthonormal (max |R^T R - I| = {err:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > tol {
            return Err(Error::InvalidPose(format!(
                "rotation determinant is {det:.6}, expected +1"
            )));
        }
        let rotation = if err > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            nearest_rotation(&rotation)
        } else {
            rotation
        };
        Ok(Pose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_center(center: Vector3<f64>) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: center,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn center(&self) -> Vector3<f64> {
        self.translation
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.translation)
    }

    pub fn camera_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * p + self.translation
    }

    pub fn direction_to_world(&self, d: &Direction) -> Direction {
        d.rotated(&self.rotation.transpose())
    }

    /// Camera whose frame is the Yang-local frame of this one (rotation
    /// premultiplied by the Yang matrix).
    pub fn yang_pose(&self) -> Pose {
        Pose {
            rotation: yang_matrix() * self.rotation,
            translation: self.translation,
        }
    }

    /// The same camera after the world is moved by `x -> q x + s`.
    pub fn transformed(&self, q: &Matrix3<f64>, s: &Vector3<f64>) -> Pose {
        Pose {
            rotation: self.rotation * q.transpose(),
            translation: q * self.translation + s,
        }
    }
}

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

/// Gram-Schmidt on the rows, keeping the third row's handedness.
fn nearest_rotation(r: &Matrix3<f64>) -> Matrix3<f64> {
    let a = r.row(0).transpose().normalize();
    let b = r.row(1).transpose();
    let b = (b - a * a.dot(&b)).normalize();
    let c = a.cross(&b);
    Matrix3::from_rows(&[a.transpose(), b.transpose(), c.transpose()])
}

/// Rotation about a unit axis, used by tests and the scene generator.
pub fn axis_angle(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let unit = nalgebra::Unit::new_normalize(axis);
    *nalgebra::Rotation3::from_axis_angle(&unit, angle).matrix()
}
