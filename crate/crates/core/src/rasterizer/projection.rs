//! Spherical projections of camera-frame points onto grid pixel coordinates,
//! with their 2x3 Jacobians.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2x3, Vector3};

use crate::sphere_geom::{wrap_angle, YIN_PHI_MAX, YIN_THETA_MAX};

/// Angular layout of a grid: pixel coordinates are affine in (phi, theta).
#[derive(Debug, Clone, Copy)]
pub(crate) struct AngularLayout {
    u_scale: f64,
    u_offset: f64,
    v_scale: f64,
    v_offset: f64,
    pub wrap_width: Option<f64>,
}

impl AngularLayout {
    pub fn equirect(height: usize, width: usize) -> Self {
        AngularLayout {
            u_scale: width as f64 / (2.0 * PI),
            u_offset: PI,
            v_scale: height as f64 / PI,
            v_offset: FRAC_PI_2,
            wrap_width: Some(width as f64),
        }
    }

    /// Yin-local layout; Yang grids use it after rotating the camera.
    pub fn yin(height: usize, width: usize) -> Self {
        AngularLayout {
            u_scale: width as f64 / (1.5 * PI),
            u_offset: YIN_PHI_MAX,
            v_scale: height as f64 / FRAC_PI_2,
            v_offset: YIN_THETA_MAX,
            wrap_width: None,
        }
    }

    /// Pixel coordinates and Jacobian of the projection at camera-frame
    /// point `p`. `None` when `p` lies on the polar axis where azimuth is
    /// undefined.
    pub fn project(&self, p: &Vector3<f64>) -> Option<([f64; 2], Matrix2x3<f64>)> {
        let rho2 = p.x * p.x + p.y * p.y;
        let r2 = rho2 + p.z * p.z;
        let rho = rho2.sqrt();
        if !(rho > 1e-12 * r2.sqrt()) {
            return None;
        }
        let phi = wrap_angle(p.y.atan2(p.x));
        let theta = p.z.atan2(rho);
        let u = (phi + self.u_offset) * self.u_scale;
        let v = (self.v_offset - theta) * self.v_scale;
        // d phi / dp and d theta / dp
        let dphi = [-p.y / rho2, p.x / rho2, 0.0];
        let k = p.z / (r2 * rho);
        let dtheta = [-p.x * k, -p.y * k, rho / r2];
        let j = Matrix2x3::new(
            self.u_scale * dphi[0],
            self.u_scale * dphi[1],
            self.u_scale * dphi[2],
            -self.v_scale * dtheta[0],
            -self.v_scale * dtheta[1],
            -self.v_scale * dtheta[2],
        );
        Some(([u, v], j))
    }
}
