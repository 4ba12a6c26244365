//! Directions on the unit sphere and the pixel grids laid over it.
//!
//! Conventions used throughout the crate:
//! * `theta` is elevation from the equator (positive towards +z), `phi` the
//!   azimuth `atan2(y, x)`, wrapped into `[-pi, pi)`.
//! * Equirect row 0 is the north edge, column 0 sits at `phi = -pi`.
//! * Pixel centres are at half-integer continuous coordinates, so pixel
//!   `(u, v)` covers `[u, u + 1) x [v, v + 1)`.
//! * Yin and Yang grids share one layout (`width = 3 * height`). A Yang pixel
//!   is computed in Yin-local coordinates and then mapped by [`YANG_MATRIX`].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::pose::Pose;

/// Half-width of the Yin patch in azimuth.
pub const YIN_PHI_MAX: f64 = 3.0 * FRAC_PI_4;
/// Half-height of the Yin patch in elevation.
pub const YIN_THETA_MAX: f64 = FRAC_PI_4;

/// The involutory Yin to Yang rotation.
pub const YANG_MATRIX: [[f64; 3]; 3] = [[-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]];

pub fn yang_matrix() -> Matrix3<f64> {
    let m = YANG_MATRIX;
    Matrix3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    )
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a - two_pi * ((a + PI) / two_pi).floor();
    if w >= PI {
        w -= two_pi;
    }
    if w < -PI {
        w += two_pi;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spherical {
    pub theta: f64,
    pub phi: f64,
}

impl Spherical {
    pub fn new(theta: f64, phi: f64) -> Self {
        Spherical {
            theta: theta.clamp(-FRAC_PI_2, FRAC_PI_2),
            phi: wrap_angle(phi),
        }
    }

    pub fn from_direction(d: &Direction) -> Self {
        let v = d.as_vector();
        let rho = v.x.hypot(v.y);
        Spherical {
            theta: v.z.atan2(rho),
            phi: wrap_angle(v.y.atan2(v.x)),
        }
    }

    pub fn to_direction(self) -> Direction {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Direction(Vector3::new(ct * cp, ct * sp, st))
    }
}

/// A unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vector3<f64>);

impl Direction {
    /// Normalizes `v`; returns `None` for a zero or non-finite vector.
    pub fn new(v: Vector3<f64>) -> Option<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Some(Direction(v / n))
        } else {
            None
        }
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Option<Self> {
        Self::new(Vector3::new(x, y, z))
    }

    /// Wraps a vector the caller guarantees to be unit length.
    pub fn from_unit(v: Vector3<f64>) -> Self {
        Direction(v)
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }
    pub fn y(&self) -> f64 {
        self.0.y
    }
    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn to_spherical(&self) -> Spherical {
        Spherical::from_direction(self)
    }

    /// Applies a rotation; the result is unit up to rounding.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Direction {
        Direction(r * self.0)
    }

    /// Angle between two directions, accurate for small and large angles.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        self.0.cross(&other.0).norm().atan2(self.0.dot(&other.0))
    }
}

/// `true` iff `s` lies in the closed Yin patch.
pub fn yin_contains(s: Spherical) -> bool {
    s.theta.abs() <= YIN_THETA_MAX && s.phi.abs() <= YIN_PHI_MAX
}

/// `true` iff the world direction `d` lies in the closed Yang patch.
pub fn yang_contains(d: &Direction) -> bool {
    yin_contains(yang_transform(d).to_spherical())
}

/// Multiplies by the Yang matrix. The matrix is a signed permutation, so the
/// result is exact and applying it twice returns the input bit for bit.
pub fn yang_transform(d: &Direction) -> Direction {
    Direction(Vector3::new(-d.0.x, d.0.z, d.0.y))
}

/// Angular distance from `s` to the boundary of the Yin patch, zero outside.
pub fn yin_boundary_distance(s: Spherical) -> f64 {
    if !yin_contains(s) {
        return 0.0;
    }
    // Latitude edges: the nearest point lies on the same meridian.
    let mut best = YIN_THETA_MAX - s.theta.abs();
    let d = s.to_direction();
    for &edge_phi in &[-YIN_PHI_MAX, YIN_PHI_MAX] {
        best = best.min(meridian_arc_distance(&d, edge_phi, YIN_THETA_MAX));
    }
    best.max(0.0)
}

/// Distance from `d` to the meridian arc at azimuth `phi0` spanning
/// `|theta| <= theta_max`.
fn meridian_arc_distance(d: &Direction, phi0: f64, theta_max: f64) -> f64 {
    let (sp, cp) = phi0.sin_cos();
    let v = d.as_vector();
    // Components in the meridian plane (along its horizontal axis and z) and
    // along the plane normal.
    let along = v.x * cp + v.y * sp;
    let normal = -v.x * sp + v.y * cp;
    let foot_theta = v.z.atan2(along);
    if along > 0.0 && foot_theta.abs() <= theta_max {
        normal.abs().asin()
    } else {
        let c = |theta: f64| Spherical { theta, phi: phi0 }.to_direction();
        d.angle_to(&c(theta_max)).min(d.angle_to(&c(-theta_max)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridFamily {
    Equirect,
    Yin,
    Yang,
    /// Perspective cube face, index 0..6 for +x, -x, +y, -y, +z, -z.
    CubeFace(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub family: GridFamily,
    pub height: usize,
    pub width: usize,
}

/// Continuous pixel coordinates of a direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
    pub inside: bool,
}

impl GridSpec {
    pub fn new(family: GridFamily, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidGrid(format!("empty {height}x{width} grid")));
        }
        let ok = match family {
            GridFamily::Equirect => width == 2 * height,
            GridFamily::Yin | GridFamily::Yang => width == 3 * height,
            GridFamily::CubeFace(f) => f < 6 && width == height,
        };
        if !ok {
            return Err(Error::InvalidGrid(format!(
                "{family:?} does not admit a {height}x{width} layout"
            )));
        }
        Ok(GridSpec {
            family,
            height,
            width,
        })
    }

    pub fn equirect(height: usize) -> Result<Self> {
        Self::new(GridFamily::Equirect, height, 2 * height)
    }

    pub fn yin(height: usize) -> Result<Self> {
        Self::new(GridFamily::Yin, height, 3 * height)
    }

    pub fn yang(height: usize) -> Result<Self> {
        Self::new(GridFamily::Yang, height, 3 * height)
    }

    pub fn cube_face(face: u8, resolution: usize) -> Result<Self> {
        Self::new(GridFamily::CubeFace(face), resolution, resolution)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn is_yin_yang(&self) -> bool {
        matches!(self.family, GridFamily::Yin | GridFamily::Yang)
    }

    /// Same layout with the Yin/Yang family swapped; other families unchanged.
    pub fn partner(&self) -> GridSpec {
        let family = match self.family {
            GridFamily::Yin => GridFamily::Yang,
            GridFamily::Yang => GridFamily::Yin,
            f => f,
        };
        GridSpec { family, ..*self }
    }

    pub fn pixel_to_direction(&self, u: usize, v: usize) -> Result<Direction> {
        if u >= self.width || v >= self.height {
            return Err(Error::PixelOutOfRange {
                u,
                v,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.direction_at(u as f64 + 0.5, v as f64 + 0.5))
    }

    /// Direction at continuous pixel coordinates (pixel centres at `+0.5`).
    pub fn direction_at(&self, u: f64, v: f64) -> Direction {
        let (h, w) = (self.height as f64, self.width as f64);
        match self.family {
            GridFamily::Equirect => Spherical {
                theta: FRAC_PI_2 - PI * v / h,
                phi: 2.0 * PI * u / w - PI,
            }
            .to_direction(),
            GridFamily::Yin => yin_local_direction(u, v, h, w),
            GridFamily::Yang => yang_transform(&yin_local_direction(u, v, h, w)),
            GridFamily::CubeFace(face) => {
                let a = 2.0 * u / w - 1.0;
                let b = 2.0 * v / h - 1.0;
                let r = cube_face_rotation(face);
                let cam = Vector3::new(a, b, 1.0);
                Direction::new(r.transpose() * cam).expect("nonzero cube ray")
            }
        }
    }

    pub fn direction_to_pixel(&self, d: &Direction) -> PixelCoord {
        let (h, w) = (self.height as f64, self.width as f64);
        match self.family {
            GridFamily::Equirect => {
                let s = d.to_spherical();
                PixelCoord {
                    u: (s.phi + PI) / (2.0 * PI) * w,
                    v: (FRAC_PI_2 - s.theta) / PI * h,
                    inside: true,
                }
            }
            GridFamily::Yin => yin_local_pixel(d.to_spherical(), h, w),
            GridFamily::Yang => yin_local_pixel(yang_transform(d).to_spherical(), h, w),
            GridFamily::CubeFace(face) => {
                let c = cube_face_rotation(face) * d.as_vector();
                if c.z <= 0.0 {
                    return PixelCoord {
                        u: -1.0,
                        v: -1.0,
                        inside: false,
                    };
                }
                let a = c.x / c.z;
                let b = c.y / c.z;
                PixelCoord {
                    u: (a + 1.0) * 0.5 * w,
                    v: (b + 1.0) * 0.5 * h,
                    inside: a.abs() <= 1.0 && b.abs() <= 1.0,
                }
            }
        }
    }

    /// Whether `d` falls inside the angular bounds of this grid.
    pub fn contains(&self, d: &Direction) -> bool {
        match self.family {
            GridFamily::Equirect => true,
            GridFamily::Yin => yin_contains(d.to_spherical()),
            GridFamily::Yang => yang_contains(d),
            GridFamily::CubeFace(_) => self.direction_to_pixel(d).inside,
        }
    }
}

fn yin_local_direction(u: f64, v: f64, h: f64, w: f64) -> Direction {
    Spherical {
        theta: YIN_THETA_MAX - FRAC_PI_2 * v / h,
        phi: 1.5 * PI * u / w - YIN_PHI_MAX,
    }
    .to_direction()
}

fn yin_local_pixel(s: Spherical, h: f64, w: f64) -> PixelCoord {
    PixelCoord {
        u: (s.phi + YIN_PHI_MAX) / (1.5 * PI) * w,
        v: (YIN_THETA_MAX - s.theta) / FRAC_PI_2 * h,
        inside: yin_contains(s),
    }
}

/// World-to-camera rotation of a cube face; camera axes are
/// (right, down, forward).
pub fn cube_face_rotation(face: u8) -> Matrix3<f64> {
    let (right, down, fwd): ([f64; 3], [f64; 3], [f64; 3]) = match face {
        0 => ([0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]),
        1 => ([0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [-1.0, 0.0, 0.0]),
        2 => ([1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]),
        3 => ([-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 0.0]),
        4 => ([0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        5 => ([0.0, -1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0]),
        _ => panic!("cube face index {face} out of range"),
    };
    Matrix3::new(
        right[0], right[1], right[2], down[0], down[1], down[2], fwd[0], fwd[1], fwd[2],
    )
}

/// Six 90-degree perspective faces of the cube circumscribing the unit sphere,
/// each with the pose of a camera at the origin looking through it.
pub fn cubemap_rig(face_resolution: usize) -> Result<Vec<(GridSpec, Pose)>> {
    if face_resolution == 0 {
        return Err(Error::InvalidArgument(
            "face resolution must be at least 1".into(),
        ));
    }
    (0..6u8)
        .map(|f| {
            let grid = GridSpec::cube_face(f, face_resolution)?;
            let pose = Pose::new(cube_face_rotation(f), Vector3::zeros())?;
            Ok((grid, pose))
        })
        .collect()
}
