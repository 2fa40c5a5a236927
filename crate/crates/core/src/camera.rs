//! Pinhole camera with a rigid world-from-camera pose.
//!
//! Camera axes: x right, y down, z forward. Pixel centers sit at integer
//! coordinates plus one half.

use nalgebra::{Isometry3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// world <- camera
    pub pose: Isometry3<f64>,
}

/// Serializable pose: translation plus a rotation given as a scaled axis
/// (axis times angle in radians).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub translation: [f64; 3],
    #[serde(default)]
    pub rotation: [f64; 3],
}

impl Pose {
    pub fn translated(x: f64, y: f64, z: f64) -> Pose {
        Pose {
            translation: [x, y, z],
            rotation: [0.0; 3],
        }
    }

    pub fn to_isometry(self) -> Result<Isometry3<f64>> {
        if self
            .translation
            .iter()
            .chain(&self.rotation)
            .any(|v| !v.is_finite())
        {
            return Err(Error::input("pose has non-finite components"));
        }
        let r = UnitQuaternion::from_scaled_axis(Vector3::from(self.rotation));
        Ok(Isometry3::from_parts(Translation3::from(Vector3::from(self.translation)), r))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Pose {
        Pose {
            translation: iso.translation.vector.into(),
            rotation: iso.rotation.scaled_axis().into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    /// fx = fy = 0.8 * max(W, H), principal point at the image center.
    pub fn default_for(width: usize, height: usize) -> Intrinsics {
        let f = 0.8 * width.max(height) as f64;
        Intrinsics {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        }
    }
}

impl Camera {
    pub fn new(k: Intrinsics, pose: Isometry3<f64>) -> Result<Camera> {
        let cam = Camera {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            pose,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn default_for(width: usize, height: usize) -> Camera {
        let k = Intrinsics::default_for(width, height);
        Camera {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            pose: Isometry3::identity(),
        }
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
        }
    }

    pub fn with_pose(&self, pose: Isometry3<f64>) -> Camera {
        Camera { pose, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::config(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::config("principal point must be finite"));
        }
        let r: Rotation3<f64> = self.pose.rotation.to_rotation_matrix();
        let m = r.matrix();
        let err = (m.transpose() * m - nalgebra::Matrix3::identity()).abs().max();
        if err > 1e-6 || !self.pose.translation.vector.iter().all(|v| v.is_finite()) {
            return Err(Error::config("camera pose is not a rigid transform"));
        }
        Ok(())
    }

    /// Point in the reference frame of a pixel center at the given depth.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point3<f64> {
        let local = Point3::new(
            (u - self.cx) / self.fx * depth,
            (v - self.cy) / self.fy * depth,
            depth,
        );
        self.pose * local
    }

    /// World point to (u, v, camera-space depth).
    pub fn project(&self, p: &Point3<f64>) -> (f64, f64, f64) {
        let c = self.pose.inverse_transform_point(p);
        (
            self.fx * c.x / c.z + self.cx,
            self.fy * c.y / c.z + self.cy,
            c.z,
        )
    }

    pub fn to_camera(&self, p: &Point3<f64>) -> Point3<f64> {
        self.pose.inverse_transform_point(p)
    }
}

/// Depth from normalized disparity: 1 / (a * disp + b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthModel {
    pub a: f64,
    pub b: f64,
}

impl Default for DepthModel {
    fn default() -> Self {
        DepthModel { a: 0.9, b: 0.1 }
    }
}

impl DepthModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b >= 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::config(format!(
                "disparity-to-depth needs a > 0 and b >= 0, got a={} b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn depth(&self, disparity: f32) -> f64 {
        1.0 / (self.a * disparity as f64 + self.b)
    }
}
