use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Pinhole camera in grid/world coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub forward: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub fov_y: f64,
    /// `[width, height]` in pixels.
    pub image_res: [usize; 2],
    pub near: f64,
    pub far: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        [
            self.origin[0] + t * self.dir[0],
            self.origin[1] + t * self.dir[1],
            self.origin[2] + t * self.dir[2],
        ]
    }
}

impl Camera {
    /// Camera at `position` looking at `target`; `up_hint` is orthogonalized.
    pub fn look_at(
        position: Vec3,
        target: Vec3,
        up_hint: Vec3,
        fov_y: f64,
        image_res: [usize; 2],
        near: f64,
        far: f64,
    ) -> Self {
        let forward = normalize([
            target[0] - position[0],
            target[1] - position[1],
            target[2] - position[2],
        ]);
        let right = normalize(cross(forward, up_hint));
        let up = cross(right, forward);
        Camera { position, forward, up, fov_y, image_res, near, far }
    }

    /// Camera on a horizontal circle around `center` (y is up). Azimuth 0
    /// sits on the +z side looking toward -z.
    pub fn orbit(
        center: Vec3,
        distance: f64,
        azimuth_deg: f64,
        fov_y: f64,
        image_res: [usize; 2],
        depth_margin: f64,
    ) -> Self {
        let a = azimuth_deg.to_radians();
        let position = [center[0] + distance * a.sin(), center[1], center[2] + distance * a.cos()];
        Camera::look_at(
            position,
            center,
            [0.0, 1.0, 0.0],
            fov_y,
            image_res,
            (distance - depth_margin).max(1e-3),
            distance + depth_margin,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.position.iter().chain(&self.forward).chain(&self.up).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("camera", "non-finite vector"));
        }
        if (norm(self.forward) - 1.0).abs() > 1e-9 || (norm(self.up) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("camera.forward/up", "must be unit length"));
        }
        if dot(self.forward, self.up).abs() > 1e-9 {
            return Err(Error::invalid("camera.up", "must be orthogonal to forward"));
        }
        if !(self.fov_y > 0.0 && self.fov_y < 180.0) {
            return Err(Error::invalid("camera.fov_y", format!("{} not in (0, 180)", self.fov_y)));
        }
        if !(self.near < self.far) || self.near < 0.0 {
            return Err(Error::invalid("camera.near/far", "need 0 <= near < far"));
        }
        if self.image_res[0] == 0 || self.image_res[1] == 0 {
            return Err(Error::invalid("camera.image_res", "empty image"));
        }
        Ok(())
    }

    pub fn right(&self) -> Vec3 {
        cross(self.forward, self.up)
    }

    pub fn width(&self) -> usize {
        self.image_res[0]
    }

    pub fn height(&self) -> usize {
        self.image_res[1]
    }

    /// Ray through the center of pixel `(px, py)`, `py = 0` at the top row.
    pub fn pixel_ray(&self, px: usize, py: usize) -> Ray {
        let (w, h) = (self.image_res[0] as f64, self.image_res[1] as f64);
        let half = (0.5 * self.fov_y).to_radians().tan();
        let sx = ((px as f64 + 0.5) / w * 2.0 - 1.0) * half * (w / h);
        let sy = (1.0 - (py as f64 + 0.5) / h * 2.0) * half;
        let r = self.right();
        let f = self.forward;
        let u = self.up;
        let dir = normalize([
            f[0] + sx * r[0] + sy * u[0],
            f[1] + sx * r[1] + sy * u[1],
            f[2] + sx * r[2] + sy * u[2],
        ]);
        Ray { origin: self.position, dir }
    }
}
