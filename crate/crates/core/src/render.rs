//! Differentiable emission-absorption ray marching with single scattering
//! and background compositing, plus the inverse projection (unproject).
//!
//! Per ray, samples are taken at segment midpoints of the part of
//! `[near, far]` that lies inside the box spanned by the outer cell centers.
//! With `e_k = exp(-sigma * rho_k * ds)` and `T_0 = 1`:
//!
//! ```text
//! pixel = sum_k T_k * L_k * (1 - e_k) + T_N * background,   T_{k+1} = T_k * e_k
//! ```
//!
//! The lighting volume `L = ambient + intensity * exp(-sigma * tau)` uses the
//! optical depth `tau` accumulated from each cell toward the light in unit
//! steps.

use serde::{Deserialize, Serialize};

use crate::camera::{normalize, Camera, Ray, Vec3};
use crate::error::{Error, Result};
use crate::grid::{sample_scalar, stencil, Dims, Image, ScalarGrid};
use crate::par;
use crate::real::{self, Dual, Real};

/// Directional light. `direction` is the direction the light travels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightConfig {
    pub direction: Vec3,
    pub intensity: f64,
    pub ambient: f64,
    /// Extinction per unit density and unit length.
    pub absorption: f64,
}

impl Default for LightConfig {
    fn default() -> Self {
        LightConfig { direction: [0.0, -1.0, 0.0], intensity: 0.8, ambient: 0.2, absorption: 1.0 }
    }
}

impl LightConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((n - 1.0).abs() < 1e-9) {
            return Err(Error::invalid("light.direction", "must be unit length"));
        }
        for (v, f) in [(self.intensity, "light.intensity"), (self.ambient, "light.ambient")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(f, format!("{v} must be >= 0")));
            }
        }
        if !(self.absorption > 0.0 && self.absorption.is_finite()) {
            return Err(Error::invalid("light.absorption", "must be > 0"));
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Self {
        self.direction = normalize(self.direction);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Ray-march step in cells.
    pub step: f64,
    /// Differentiate through the lighting volume. When false the lighting
    /// volume is treated as a constant during the backward pass.
    pub light_gradient: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { step: 0.5, light_gradient: true }
    }
}

const INSET_TOL: f64 = 1e-9;

#[inline]
fn inside_inset(dims: Dims, p: Vec3) -> bool {
    (0..3).all(|a| p[a] >= 0.5 - INSET_TOL && p[a] <= dims.axis(a) as f64 - 0.5 + INSET_TOL)
}

/// Sample positions from a cell toward the light, one cell apart.
fn light_path(dims: Dims, light_dir: Vec3, cell: usize) -> impl Iterator<Item = Vec3> {
    let c = dims.center(cell);
    let to_light = [-light_dir[0], -light_dir[1], -light_dir[2]];
    (1..)
        .map(move |k| {
            let k = k as f64;
            [c[0] + k * to_light[0], c[1] + k * to_light[1], c[2] + k * to_light[2]]
        })
        .take_while(move |p| inside_inset(dims, *p))
}

/// Grid axis and sign of the path toward the light when the light travels
/// exactly along an axis. The unit-step path then visits cell centers only
/// and the optical depth is a running sum along grid lines.
fn axis_path(light_dir: Vec3) -> Option<(usize, bool)> {
    let nonzero: Vec<usize> = (0..3).filter(|&a| light_dir[a] != 0.0).collect();
    match nonzero.as_slice() {
        &[a] if light_dir[a].abs() == 1.0 => Some((a, light_dir[a] < 0.0)),
        _ => None,
    }
}

/// Visit every grid line along `axis` as `(first cell, stride, length)`.
fn grid_lines(dims: Dims, axis: usize, mut f: impl FnMut(usize, usize, usize)) {
    let stride = match axis {
        0 => 1,
        1 => dims.nx,
        _ => dims.nx * dims.ny,
    };
    for cell in 0..dims.len() {
        if dims.coords(cell)[axis] == 0 {
            f(cell, stride, dims.axis(axis));
        }
    }
}

/// Exclusive running sum along each line; `toward_end` sums the cells with a
/// larger index.
fn line_sums<T: Real>(values: &[T], dims: Dims, axis: usize, toward_end: bool) -> Vec<T> {
    let mut out = vec![T::cst(0.0); values.len()];
    grid_lines(dims, axis, |base, stride, len| {
        let mut acc = T::cst(0.0);
        for j in 0..len {
            let j = if toward_end { len - 1 - j } else { j };
            let i = base + j * stride;
            out[i] = acc;
            acc += values[i];
        }
    });
    out
}

fn optical_depth<T: Real>(rho: &[T], dims: Dims, light: &LightConfig) -> Vec<T> {
    match axis_path(light.direction) {
        Some((axis, toward_end)) => line_sums(rho, dims, axis, toward_end),
        None => par::map(dims.len(), |i| {
            let mut tau = T::cst(0.0);
            for p in light_path(dims, light.direction, i) {
                tau += sample_scalar(rho, dims, p.map(T::cst));
            }
            tau
        }),
    }
}

pub fn light_kernel<T: Real>(rho: &[T], dims: Dims, light: &LightConfig) -> Vec<T> {
    optical_depth(rho, dims, light)
        .into_iter()
        .map(|tau| T::cst(light.ambient) + (tau.scale(-light.absorption)).exp().scale(light.intensity))
        .collect()
}

pub fn build_light_volume(rho: &ScalarGrid, light: &LightConfig) -> Result<ScalarGrid> {
    light.validate()?;
    Ok(ScalarGrid { dims: rho.dims, data: light_kernel(&rho.data, rho.dims, light) })
}

/// Transpose of the lighting-volume Jacobian: density gradient from a
/// lighting-volume gradient.
pub fn adjoint_light_volume(grad_light: &[f64], rho: &ScalarGrid, light: &LightConfig) -> Vec<f64> {
    let lv = light_kernel(&rho.data, rho.dims, light);
    adjoint_light_given(grad_light, &lv, rho.dims, light)
}

fn adjoint_light_given(grad_light: &[f64], lv: &[f64], dims: Dims, light: &LightConfig) -> Vec<f64> {
    let g_tau: Vec<f64> =
        grad_light.iter().zip(lv).map(|(g, l)| -light.absorption * (l - light.ambient) * g).collect();
    if let Some((axis, toward_end)) = axis_path(light.direction) {
        // Each cell feeds the optical depth of the cells behind it.
        return line_sums(&g_tau, dims, axis, !toward_end);
    }
    par::scatter(dims.len(), dims.len(), |i, push| {
        let g = g_tau[i];
        if g == 0.0 {
            return;
        }
        for p in light_path(dims, light.direction, i) {
            let st = stencil(dims, p);
            for k in 0..8 {
                push(st.idx[k], st.w[k] * g);
            }
        }
    })
}

/// Parametric interval of a ray inside the cell-center box, clipped to
/// `[near, far]`.
fn clip_ray(dims: Dims, ray: &Ray, near: f64, far: f64) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (near, far);
    for a in 0..3 {
        let lo = 0.5;
        let hi = dims.axis(a) as f64 - 0.5;
        let o = ray.origin[a];
        let d = ray.dir[a];
        if d.abs() < 1e-15 {
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let (mut a0, mut a1) = ((lo - o) / d, (hi - o) / d);
        if a0 > a1 {
            std::mem::swap(&mut a0, &mut a1);
        }
        t0 = t0.max(a0);
        t1 = t1.min(a1);
    }
    (t1 > t0).then_some((t0, t1))
}

/// Midpoint samples `(position)` and segment length along one pixel ray.
#[derive(Clone, Debug)]
pub struct RaySamples {
    pub points: Vec<Vec3>,
    pub ds: f64,
}

pub fn ray_samples(dims: Dims, cam: &Camera, px: usize, py: usize, step: f64) -> RaySamples {
    let ray = cam.pixel_ray(px, py);
    match clip_ray(dims, &ray, cam.near, cam.far) {
        None => RaySamples { points: Vec::new(), ds: 0.0 },
        Some((t0, t1)) => {
            let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
            let ds = (t1 - t0) / n as f64;
            let points = (0..n).map(|k| ray.at(t0 + (k as f64 + 0.5) * ds)).collect();
            RaySamples { points, ds }
        }
    }
}

fn check_background(cam: &Camera, bg: Option<&Image>) -> Result<usize> {
    match bg {
        None => Ok(1),
        Some(b) => {
            if b.width != cam.width() || b.height != cam.height() {
                return Err(Error::Shape(format!(
                    "background {}x{} vs camera {}x{}",
                    b.width,
                    b.height,
                    cam.width(),
                    cam.height()
                )));
            }
            Ok(b.channels)
        }
    }
}

/// Forward march for every pixel given density and lighting volume.
pub fn render_kernel<T: Real>(
    rho: &[T],
    light_volume: &[T],
    dims: Dims,
    cam: &Camera,
    background: Option<&Image>,
    absorption: f64,
    step: f64,
) -> Vec<T> {
    let (w, h) = (cam.width(), cam.height());
    let ch = background.map_or(1, |b| b.channels);
    let pixels: Vec<Vec<T>> = par::map(w * h, |pix| {
        let (px, py) = (pix % w, pix / w);
        let rs = ray_samples(dims, cam, px, py, step);
        let mut trans = T::cst(1.0);
        let mut radiance = T::cst(0.0);
        for p in &rs.points {
            let st = stencil(dims, *p);
            let mut r = T::cst(0.0);
            let mut l = T::cst(0.0);
            for k in 0..8 {
                r += rho[st.idx[k]].scale(st.w[k]);
                l += light_volume[st.idx[k]].scale(st.w[k]);
            }
            let e = (r.scale(-absorption * rs.ds)).exp();
            radiance += trans * l * (T::cst(1.0) - e);
            trans = trans * e;
        }
        (0..ch)
            .map(|c| {
                let b = background.map_or(0.0, |b| b.data[pix * ch + c]);
                radiance + trans.scale(b)
            })
            .collect()
    });
    pixels.into_iter().flatten().collect()
}

pub fn render(
    rho: &ScalarGrid,
    light: &LightConfig,
    cam: &Camera,
    background: Option<&Image>,
    opts: &RenderOptions,
) -> Result<Image> {
    light.validate()?;
    cam.validate()?;
    let ch = check_background(cam, background)?;
    let lv = light_kernel(&rho.data, rho.dims, light);
    let data = render_kernel(&rho.data, &lv, rho.dims, cam, background, light.absorption, opts.step);
    Image::from_vec(cam.width(), cam.height(), ch, data)
}

/// Exact vector-Jacobian product of [`render`] with respect to density.
pub fn adjoint_render(
    grad_img: &Image,
    rho: &ScalarGrid,
    light: &LightConfig,
    cam: &Camera,
    background: Option<&Image>,
    opts: &RenderOptions,
) -> Result<ScalarGrid> {
    let ch = check_background(cam, background)?;
    if grad_img.width != cam.width() || grad_img.height != cam.height() || grad_img.channels != ch {
        return Err(Error::Shape("adjoint_render gradient image does not match render output".into()));
    }
    let dims = rho.dims;
    let n = dims.len();
    let sigma = light.absorption;
    let lv = light_kernel(&rho.data, dims, light);
    let w = cam.width();
    // Output slots [0, n) collect density gradient, [n, 2n) lighting gradient.
    let both = par::scatter(2 * n, cam.width() * cam.height(), |pix, push| {
        let g = &grad_img.data[pix * ch..(pix + 1) * ch];
        let g_sum: f64 = g.iter().sum();
        let g_bg: f64 = match background {
            Some(b) => (0..ch).map(|c| g[c] * b.data[pix * ch + c]).sum(),
            None => 0.0,
        };
        if g_sum == 0.0 && g_bg == 0.0 {
            return;
        }
        let rs = ray_samples(dims, cam, pix % w, pix / w, opts.step);
        let m = rs.points.len();
        let mut stencils = Vec::with_capacity(m);
        let mut l_k = Vec::with_capacity(m);
        let mut e_k = Vec::with_capacity(m);
        let mut t_k = Vec::with_capacity(m);
        let mut trans = 1.0;
        for p in &rs.points {
            let st = stencil(dims, *p);
            let (mut r, mut l) = (0.0, 0.0);
            for k in 0..8 {
                r += st.w[k] * rho.data[st.idx[k]];
                l += st.w[k] * lv[st.idx[k]];
            }
            let e = (-sigma * r * rs.ds).exp();
            stencils.push(st);
            l_k.push(l);
            e_k.push(e);
            t_k.push(trans);
            trans *= e;
        }
        // Weighted suffix radiance, starting from the background term.
        let mut suffix = g_bg;
        for k in (0..m).rev() {
            let d_rho = t_k[k] * sigma * rs.ds * e_k[k] * (g_sum * l_k[k] - suffix);
            let d_light = g_sum * t_k[k] * (1.0 - e_k[k]);
            let st = &stencils[k];
            for j in 0..8 {
                push(st.idx[j], st.w[j] * d_rho);
                push(n + st.idx[j], st.w[j] * d_light);
            }
            suffix = g_sum * l_k[k] * (1.0 - e_k[k]) + e_k[k] * suffix;
        }
    });
    let mut grad = both[..n].to_vec();
    if opts.light_gradient {
        let from_light = adjoint_light_given(&both[n..], &lv, dims, light);
        for (a, b) in grad.iter_mut().zip(&from_light) {
            *a += b;
        }
    }
    Ok(ScalarGrid { dims, data: grad })
}

/// Jacobian-vector product of [`render`] by forward-mode differentiation,
/// including the lighting-volume dependence.
pub fn render_jvp(
    rho: &ScalarGrid,
    d_rho: &ScalarGrid,
    light: &LightConfig,
    cam: &Camera,
    background: Option<&Image>,
    opts: &RenderOptions,
) -> Result<Image> {
    let ch = check_background(cam, background)?;
    let r: Vec<Dual> = real::seed(&rho.data, &d_rho.data);
    let lv = if opts.light_gradient {
        light_kernel(&r, rho.dims, light)
    } else {
        real::lift(&light_kernel(&rho.data, rho.dims, light))
    };
    let out = render_kernel(&r, &lv, rho.dims, cam, background, light.absorption, opts.step);
    Image::from_vec(cam.width(), cam.height(), ch, real::tangent(&out))
}

/// Inverse ray marching: spread each pixel value along its ray with
/// trilinear weights and normalize by the accumulated weight per voxel.
/// Color images contribute their channel mean.
pub fn unproject(img: &Image, cam: &Camera, dims: Dims, step: f64) -> Result<ScalarGrid> {
    if img.width != cam.width() || img.height != cam.height() {
        return Err(Error::Shape(format!(
            "unproject image {}x{} vs camera {}x{}",
            img.width,
            img.height,
            cam.width(),
            cam.height()
        )));
    }
    dims.check_nonempty()?;
    let n = dims.len();
    let (w, ch) = (cam.width(), img.channels);
    let acc = par::scatter(2 * n, img.pixels(), |pix, push| {
        let v = img.data[pix * ch..(pix + 1) * ch].iter().sum::<f64>() / ch as f64;
        let rs = ray_samples(dims, cam, pix % w, pix / w, step);
        for p in &rs.points {
            let st = stencil(dims, *p);
            for k in 0..8 {
                if st.w[k] != 0.0 {
                    push(st.idx[k], st.w[k] * v);
                    push(n + st.idx[k], st.w[k]);
                }
            }
        }
    });
    let data = (0..n).map(|i| if acc[n + i] > 0.0 { acc[i] / acc[n + i] } else { 0.0 }).collect();
    Ok(ScalarGrid { dims, data })
}

/// Accumulated unproject weight per voxel; positive where rays reach.
pub fn unproject_weights(cam: &Camera, dims: Dims, step: f64) -> ScalarGrid {
    let w = cam.width();
    let data = par::scatter(dims.len(), cam.width() * cam.height(), |pix, push| {
        let rs = ray_samples(dims, cam, pix % w, pix / w, step);
        for p in &rs.points {
            let st = stencil(dims, *p);
            for k in 0..8 {
                if st.w[k] != 0.0 {
                    push(st.idx[k], st.w[k]);
                }
            }
        }
    });
    ScalarGrid { dims, data }
}
