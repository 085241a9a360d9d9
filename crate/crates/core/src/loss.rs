//! Scalar objectives and their gradients.
//!
//! Image and volume losses are means. The CFL and smoothness terms sum over
//! the three components and average over cells, so weights do not depend on
//! the grid resolution.

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::grid::{check_same, Dims, Image, ScalarGrid, VectorGrid};
use crate::real::Real;
use crate::render::{adjoint_render, render, LightConfig, RenderOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_tar: f64,
    pub w_proxy: f64,
    pub w_disc: f64,
    pub w_center: f64,
    pub w_cfl: f64,
    pub w_smooth: f64,
}

impl LossWeights {
    /// Velocity-stage weights: target, prototype, discriminator, center, CFL,
    /// smoothness.
    pub const VELOCITY: LossWeights =
        LossWeights { w_tar: 1.0, w_proxy: 1e-3, w_disc: 2e-6, w_center: 1e-3, w_cfl: 0.1, w_smooth: 1e-4 };

    /// Density-stage weights: target, discriminator, center.
    pub const DENSITY: LossWeights =
        LossWeights { w_tar: 1.0, w_proxy: 0.0, w_disc: 2e-4, w_center: 1e-3, w_cfl: 0.0, w_smooth: 0.0 };

    pub const ZERO: LossWeights =
        LossWeights { w_tar: 0.0, w_proxy: 0.0, w_disc: 0.0, w_center: 0.0, w_cfl: 0.0, w_smooth: 0.0 };

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("w_tar", self.w_tar),
            ("w_proxy", self.w_proxy),
            ("w_disc", self.w_disc),
            ("w_center", self.w_center),
            ("w_cfl", self.w_cfl),
            ("w_smooth", self.w_smooth),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("weights.{name}"), format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights::VELOCITY
    }
}

/// Depth regularizer setup: `axis` is the primary view depth axis, `center`
/// the grid coordinate of the preferred depth plane, `extent` the full grid
/// resolution along that axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterSpec {
    pub axis: usize,
    pub center: f64,
    pub extent: f64,
}

impl CenterSpec {
    pub fn for_grid(dims: Dims, axis: usize) -> Self {
        let n = dims.axis(axis) as f64;
        CenterSpec { axis, center: 0.5 * n, extent: n }
    }

    /// Depth axis a camera mostly looks along.
    pub fn dominant_axis(cam: &Camera) -> usize {
        let f = cam.forward.map(f64::abs);
        if f[0] >= f[1] && f[0] >= f[2] {
            0
        } else if f[1] >= f[2] {
            1
        } else {
            2
        }
    }

    #[inline]
    pub fn weight(&self, dims: Dims, cell: usize) -> f64 {
        let p = dims.center(cell)[self.axis];
        let d = (self.center - p) * 2.0 / self.extent;
        d * d
    }
}

pub fn mse_image(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape("image MSE on different shapes".into()));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data.len() as f64)
}

#[allow(clippy::too_many_arguments)]
pub fn l_target(
    rho: &ScalarGrid,
    target: &Image,
    cam: &Camera,
    light: &LightConfig,
    background: Option<&Image>,
    opts: &RenderOptions,
) -> Result<f64> {
    let img = render(rho, light, cam, background, opts)?;
    mse_image(&img, target)
}

pub fn grad_l_target(
    rho: &ScalarGrid,
    target: &Image,
    cam: &Camera,
    light: &LightConfig,
    background: Option<&Image>,
    opts: &RenderOptions,
) -> Result<(f64, ScalarGrid)> {
    let img = render(rho, light, cam, background, opts)?;
    let value = mse_image(&img, target)?;
    let scale = 2.0 / img.data.len() as f64;
    let g = Image {
        data: img.data.iter().zip(&target.data).map(|(r, t)| scale * (r - t)).collect(),
        ..img
    };
    Ok((value, adjoint_render(&g, rho, light, cam, background, opts)?))
}

pub fn center_kernel<T: Real>(rho: &[T], dims: Dims, spec: &CenterSpec) -> T {
    let mut acc = T::cst(0.0);
    for (i, &r) in rho.iter().enumerate() {
        acc += (r * r).scale(spec.weight(dims, i));
    }
    acc
}

pub fn l_center(rho: &ScalarGrid, spec: &CenterSpec) -> Result<f64> {
    if !(spec.extent > 0.0) {
        return Err(Error::invalid("center.extent", "must be > 0"));
    }
    Ok(center_kernel(&rho.data, rho.dims, spec))
}

pub fn grad_l_center(rho: &ScalarGrid, spec: &CenterSpec) -> ScalarGrid {
    let data = rho.data.iter().enumerate().map(|(i, &r)| 2.0 * r * spec.weight(rho.dims, i)).collect();
    ScalarGrid { dims: rho.dims, data }
}

pub fn proxy_kernel<T: Real>(rho: &[T], proto: &[f64]) -> T {
    let mut acc = T::cst(0.0);
    for (&r, &p) in rho.iter().zip(proto) {
        let d = r - T::cst(p);
        acc += d * d;
    }
    acc.scale(1.0 / rho.len() as f64)
}

pub fn l_proxy(rho: &ScalarGrid, proto: &ScalarGrid) -> Result<f64> {
    check_same(rho.dims, proto.dims, "l_proxy")?;
    Ok(proxy_kernel(&rho.data, &proto.data))
}

pub fn grad_l_proxy(rho: &ScalarGrid, proto: &ScalarGrid) -> Result<ScalarGrid> {
    check_same(rho.dims, proto.dims, "l_proxy")?;
    let n = rho.data.len() as f64;
    Ok(ScalarGrid { dims: rho.dims, data: rho.data.iter().zip(&proto.data).map(|(r, p)| 2.0 * (r - p) / n).collect() })
}

pub fn cfl_kernel<T: Real>(vel: &[T]) -> T {
    let mut acc = T::cst(0.0);
    for &v in vel {
        if v.val() * v.val() > 1.0 {
            acc += v * v - T::cst(1.0);
        }
    }
    acc.scale(3.0 / vel.len() as f64)
}

/// Mean over cells of `sum_i max(u_i^2 - 1, 0)`.
pub fn l_cfl(u: &VectorGrid) -> f64 {
    cfl_kernel(&u.data)
}

pub fn grad_l_cfl(u: &VectorGrid) -> VectorGrid {
    let n = u.dims.len() as f64;
    let data = u.data.iter().map(|&v| if v * v > 1.0 { 2.0 * v / n } else { 0.0 }).collect();
    VectorGrid { dims: u.dims, data }
}

fn forward_neighbors(dims: Dims, cell: usize) -> [Option<usize>; 3] {
    let [x, y, z] = dims.coords(cell);
    [
        (x + 1 < dims.nx).then_some(cell + 1),
        (y + 1 < dims.ny).then_some(cell + dims.nx),
        (z + 1 < dims.nz).then_some(cell + dims.nx * dims.ny),
    ]
}

pub fn smooth_kernel<T: Real>(vel: &[T], dims: Dims) -> T {
    let mut acc = T::cst(0.0);
    for cell in 0..dims.len() {
        for next in forward_neighbors(dims, cell).into_iter().flatten() {
            for c in 0..3 {
                let d = vel[3 * next + c] - vel[3 * cell + c];
                acc += d * d;
            }
        }
    }
    acc.scale(1.0 / dims.len() as f64)
}

/// Forward-difference first-order smoothness, averaged over cells.
pub fn l_smooth(u: &VectorGrid) -> f64 {
    smooth_kernel(&u.data, u.dims)
}

pub fn grad_l_smooth(u: &VectorGrid) -> VectorGrid {
    let dims = u.dims;
    let s = 2.0 / dims.len() as f64;
    let mut g = vec![0.0; u.data.len()];
    for cell in 0..dims.len() {
        for next in forward_neighbors(dims, cell).into_iter().flatten() {
            for c in 0..3 {
                let d = s * (u.data[3 * next + c] - u.data[3 * cell + c]);
                g[3 * next + c] += d;
                g[3 * cell + c] -= d;
            }
        }
    }
    VectorGrid { dims, data: g }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Relativistic average least-squares objective over externally supplied
/// discriminator scores. `label` is `1` when training the discriminator and
/// `-1` when used as a generator loss.
pub fn ralsgan(scores_real: &[f64], scores_fake: &[f64], label: f64) -> Result<f64> {
    if scores_real.is_empty() || scores_fake.is_empty() {
        return Err(Error::invalid("scores", "ralsgan needs non-empty score lists"));
    }
    let (mr, mf) = (mean(scores_real), mean(scores_fake));
    let a = scores_real.iter().map(|s| (s - mf - label).powi(2)).sum::<f64>() / scores_real.len() as f64;
    let b = scores_fake.iter().map(|s| (s - mr + label).powi(2)).sum::<f64>() / scores_fake.len() as f64;
    Ok(a + b)
}

/// Gradient of [`ralsgan`] with respect to the fake scores.
pub fn grad_ralsgan_fake(scores_real: &[f64], scores_fake: &[f64], label: f64) -> Result<Vec<f64>> {
    if scores_real.is_empty() || scores_fake.is_empty() {
        return Err(Error::invalid("scores", "ralsgan needs non-empty score lists"));
    }
    let (mr, mf) = (mean(scores_real), mean(scores_fake));
    let (nr, nf) = (scores_real.len() as f64, scores_fake.len() as f64);
    let sum_a: f64 = scores_real.iter().map(|s| s - mf - label).sum();
    Ok(scores_fake
        .iter()
        .map(|s| {
            // d/ds_f of the real term through mean(fake), plus the fake term.
            -2.0 * sum_a / (nr * nf) + 2.0 * (s - mr + label) / nf
        })
        .collect())
}

/// Raw and weighted value of every term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub target: f64,
    pub proxy: f64,
    pub disc: f64,
    pub center: f64,
    pub cfl: f64,
    pub smooth: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn weighted(&self, w: &LossWeights) -> LossBreakdown {
        let mut out = LossBreakdown {
            target: w.w_tar * self.target,
            proxy: w.w_proxy * self.proxy,
            disc: w.w_disc * self.disc,
            center: w.w_center * self.center,
            cfl: w.w_cfl * self.cfl,
            smooth: w.w_smooth * self.smooth,
            total: 0.0,
        };
        out.total = out.target + out.proxy + out.disc + out.center + out.cfl + out.smooth;
        out
    }

    pub fn add(&mut self, o: &LossBreakdown) {
        self.target += o.target;
        self.proxy += o.proxy;
        self.disc += o.disc;
        self.center += o.center;
        self.cfl += o.cfl;
        self.smooth += o.smooth;
        self.total += o.total;
    }
}

/// What a single frame's objective sees. Absent parts contribute zero.
pub struct FrameState<'a> {
    pub rho: &'a ScalarGrid,
    pub target: Option<&'a Image>,
    pub camera: &'a Camera,
    pub light: &'a LightConfig,
    pub background: Option<&'a Image>,
    pub render: RenderOptions,
    pub center: Option<CenterSpec>,
    pub prototype: Option<&'a ScalarGrid>,
    pub velocity: Option<&'a VectorGrid>,
}

/// Weighted objective of one frame. Discriminator scores, when given, are
/// `(real, fake)` and enter as the generator loss (label -1).
pub fn total_loss(
    state: &FrameState<'_>,
    weights: &LossWeights,
    disc_scores: Option<(&[f64], &[f64])>,
) -> Result<(f64, LossBreakdown)> {
    weights.validate()?;
    let mut raw = LossBreakdown::default();
    if let Some(t) = state.target {
        if weights.w_tar != 0.0 {
            raw.target = l_target(state.rho, t, state.camera, state.light, state.background, &state.render)?;
        }
    }
    if let Some(p) = state.prototype {
        raw.proxy = l_proxy(state.rho, p)?;
    }
    if let Some((real, fake)) = disc_scores {
        raw.disc = ralsgan(real, fake, -1.0)?;
    }
    if let Some(c) = &state.center {
        raw.center = l_center(state.rho, c)?;
    }
    if let Some(u) = state.velocity {
        raw.cfl = l_cfl(u);
        raw.smooth = l_smooth(u);
    }
    let w = raw.weighted(weights);
    Ok((w.total, w))
}
