//! Comparison metrics between images, density volumes, and velocity fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Image, ScalarGrid, VectorGrid};

/// Default mask threshold for [`epe`].
pub const MASK_THRESHOLD: f64 = 1e-3;

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

pub fn rmse_image(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape(format!(
            "image {}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    Ok(rmse(&a.data, &b.data))
}

pub fn rmse_volume(a: &ScalarGrid, b: &ScalarGrid) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::Shape(format!("volume {} vs {}", a.dims, b.dims)));
    }
    Ok(rmse(&a.data, &b.data))
}

/// Component-wise velocity RMSE.
pub fn u_rmse(u: &VectorGrid, u_ref: &VectorGrid) -> Result<f64> {
    if u.dims != u_ref.dims {
        return Err(Error::Shape(format!("velocity {} vs {}", u.dims, u_ref.dims)));
    }
    Ok(rmse(&u.data, &u_ref.data))
}

/// Mean endpoint error. With a mask only cells where `mask > threshold`
/// count; an empty support gives 0.
pub fn epe(u: &VectorGrid, u_ref: &VectorGrid, mask: Option<(&ScalarGrid, f64)>) -> Result<f64> {
    if u.dims != u_ref.dims {
        return Err(Error::Shape(format!("velocity {} vs {}", u.dims, u_ref.dims)));
    }
    if let Some((m, _)) = mask {
        if m.dims != u.dims {
            return Err(Error::Shape(format!("mask {} vs velocity {}", m.dims, u.dims)));
        }
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..u.dims.len() {
        if let Some((m, t)) = mask {
            if !(m.data[i] > t) {
                continue;
            }
        }
        let d: f64 = (0..3).map(|c| (u.data[3 * i + c] - u_ref.data[3 * i + c]).powi(2)).sum();
        sum += d.sqrt();
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Per-frame metrics between two scenes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub density_rmse: Vec<f64>,
    pub velocity_epe: Vec<f64>,
    pub velocity_epe_masked: Vec<f64>,
    pub velocity_rmse: Vec<f64>,
    /// `image_rmse[camera][frame]`.
    pub image_rmse: Vec<Vec<f64>>,
    pub mean_density_rmse: f64,
    pub mean_velocity_epe: f64,
    pub mean_image_rmse: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Compare `ours` against the reference scene, frame by frame. Velocity
/// masks use the reference density of the frame being advected.
pub fn compare_scenes(
    ours: (&[ScalarGrid], &[VectorGrid], &[Vec<Image>]),
    reference: (&[ScalarGrid], &[VectorGrid], &[Vec<Image>]),
) -> Result<MetricsTable> {
    let mut t = MetricsTable::default();
    if ours.0.len() != reference.0.len() {
        return Err(Error::Shape(format!("{} vs {} density frames", ours.0.len(), reference.0.len())));
    }
    for (a, b) in ours.0.iter().zip(reference.0) {
        t.density_rmse.push(rmse_volume(a, b)?);
    }
    for (i, (a, b)) in ours.1.iter().zip(reference.1).enumerate() {
        t.velocity_epe.push(epe(a, b, None)?);
        t.velocity_epe_masked.push(epe(a, b, Some((&reference.0[i], MASK_THRESHOLD)))?);
        t.velocity_rmse.push(u_rmse(a, b)?);
    }
    for (va, vb) in ours.2.iter().zip(reference.2) {
        t.image_rmse.push(va.iter().zip(vb).map(|(a, b)| rmse_image(a, b)).collect::<Result<_>>()?);
    }
    t.mean_density_rmse = mean(&t.density_rmse);
    t.mean_velocity_epe = mean(&t.velocity_epe);
    t.mean_image_rmse = mean(&t.image_rmse.iter().flatten().copied().collect::<Vec<_>>());
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Dims;

    #[test]
    fn constant_offsets() {
        let a = Image::filled(4, 3, 1, 0.2);
        let b = Image::filled(4, 3, 1, 0.3);
        assert!((rmse_image(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(rmse_image(&a, &a).unwrap(), 0.0);
        let d = Dims::new(3, 2, 2);
        let u = VectorGrid::uniform(d, [3.0, 4.0, 0.0]);
        assert!((epe(&u, &VectorGrid::zeros(d), None).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let a = ScalarGrid::zeros(Dims::new(2, 2, 2));
        let b = ScalarGrid::zeros(Dims::new(2, 2, 3));
        assert!(rmse_volume(&a, &b).is_err());
    }
}
