//! Cell-centered field containers and trilinear sampling.
//!
//! Grid coordinates put the center of cell `(i, j, k)` at
//! `(i + 0.5, j + 0.5, k + 0.5)`. One cell is one world unit. Lookups outside
//! the domain clamp to the nearest boundary cell center.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Grid resolution in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis(&self, a: usize) -> usize {
        match a {
            0 => self.nx,
            1 => self.ny,
            _ => self.nz,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.ny + y) * self.nx + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let x = i % self.nx;
        let y = (i / self.nx) % self.ny;
        let z = i / (self.nx * self.ny);
        [x, y, z]
    }

    /// Grid-space position of a cell center.
    #[inline]
    pub fn center(&self, i: usize) -> [f64; 3] {
        let [x, y, z] = self.coords(i);
        [x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5]
    }

    pub fn scaled(&self, factor: usize) -> Dims {
        Dims::new(self.nx * factor, self.ny * factor, self.nz * factor)
    }

    pub fn is_interior(&self, i: usize) -> bool {
        let [x, y, z] = self.coords(i);
        x > 0 && y > 0 && z > 0 && x + 1 < self.nx && y + 1 < self.ny && z + 1 < self.nz
    }

    pub fn check_nonempty(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(Error::invalid("res", format!("empty grid {self:?}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// Scalar field such as density or the lighting volume.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(dims: Dims) -> Self {
        ScalarGrid { dims, data: vec![0.0; dims.len()] }
    }

    pub fn filled(dims: Dims, v: f64) -> Self {
        ScalarGrid { dims, data: vec![v; dims.len()] }
    }

    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::Shape(format!(
                "scalar grid {dims} needs {} values, got {}",
                dims.len(),
                data.len()
            )));
        }
        Ok(ScalarGrid { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        let data = (0..dims.len()).map(|i| f(dims.coords(i))).collect();
        ScalarGrid { dims, data }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.dims.index(x, y, z)]
    }

    pub fn sample(&self, p: [f64; 3]) -> f64 {
        sample_scalar(&self.data, self.dims, p)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn clamp_nonnegative(&mut self) {
        for v in &mut self.data {
            *v = v.max(0.0);
        }
    }
}

/// Three-component field such as velocity or a vector potential,
/// channel-interleaved (`data[3 * cell + c]`).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGrid {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl VectorGrid {
    pub fn zeros(dims: Dims) -> Self {
        VectorGrid { dims, data: vec![0.0; 3 * dims.len()] }
    }

    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * dims.len() {
            return Err(Error::Shape(format!(
                "vector grid {dims} needs {} values, got {}",
                3 * dims.len(),
                data.len()
            )));
        }
        Ok(VectorGrid { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut([usize; 3]) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * dims.len());
        for i in 0..dims.len() {
            data.extend_from_slice(&f(dims.coords(i)));
        }
        VectorGrid { dims, data }
    }

    pub fn uniform(dims: Dims, v: [f64; 3]) -> Self {
        Self::from_fn(dims, |_| v)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        let i = 3 * self.dims.index(x, y, z);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn sample(&self, p: [f64; 3]) -> [f64; 3] {
        let st = stencil(self.dims, p);
        let mut out = [0.0; 3];
        for k in 0..8 {
            for (c, o) in out.iter_mut().enumerate() {
                *o += st.w[k] * self.data[3 * st.idx[k] + c];
            }
        }
        out
    }

    pub fn component(&self, c: usize) -> ScalarGrid {
        ScalarGrid { dims: self.dims, data: self.data.iter().skip(c).step_by(3).copied().collect() }
    }

    pub fn max_abs_component(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn negated(&self) -> VectorGrid {
        VectorGrid { dims: self.dims, data: self.data.iter().map(|v| -v).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// 2D raster, row-major with the origin at the top-left pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Image { width, height, channels, data: vec![0.0; width * height * channels] }
    }

    pub fn filled(width: usize, height: usize, channels: usize, v: f64) -> Self {
        Image { width, height, channels, data: vec![v; width * height * channels] }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid("channels", format!("expected 1 or 3, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "image {width}x{height}x{channels} needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Image { width, height, channels, data })
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, o: &Image) -> bool {
        self.width == o.width && self.height == o.height && self.channels == o.channels
    }
}

/// Per-axis clamp-to-edge interpolation bracket: lower index, upper index,
/// fractional weight toward the upper index, and whether the fraction
/// depends on the coordinate (false when clamped).
#[inline]
fn bracket<T: Real>(p: T, n: usize) -> (usize, usize, T, bool) {
    if n == 1 {
        return (0, 0, T::cst(0.0), false);
    }
    let f = p - T::cst(0.5);
    let fv = f.val();
    let last = (n - 1) as f64;
    if fv < 0.0 {
        (0, 1, T::cst(0.0), false)
    } else if fv > last {
        (n - 2, n - 1, T::cst(1.0), false)
    } else {
        let i0 = (fv.floor() as usize).min(n - 2);
        (i0, i0 + 1, f - T::cst(i0 as f64), true)
    }
}

/// The eight corner cells and trilinear weights for a lookup.
#[derive(Clone, Copy, Debug)]
pub struct Stencil<T> {
    pub idx: [usize; 8],
    pub w: [T; 8],
    /// Partial derivatives of the weights with respect to the lookup
    /// position; only meaningful for `f64` lookups built by
    /// [`stencil_with_grad`].
    pub dw: [[f64; 3]; 8],
}

#[inline]
pub fn stencil<T: Real>(dims: Dims, p: [T; 3]) -> Stencil<T> {
    let (x0, x1, tx, _) = bracket(p[0], dims.nx);
    let (y0, y1, ty, _) = bracket(p[1], dims.ny);
    let (z0, z1, tz, _) = bracket(p[2], dims.nz);
    let one = T::cst(1.0);
    let wx = [one - tx, tx];
    let wy = [one - ty, ty];
    let wz = [one - tz, tz];
    let xs = [x0, x1];
    let ys = [y0, y1];
    let zs = [z0, z1];
    let mut idx = [0usize; 8];
    let mut w = [T::cst(0.0); 8];
    for k in 0..8 {
        let (a, b, c) = (k & 1, (k >> 1) & 1, (k >> 2) & 1);
        idx[k] = dims.index(xs[a], ys[b], zs[c]);
        w[k] = wx[a] * wy[b] * wz[c];
    }
    Stencil { idx, w, dw: [[0.0; 3]; 8] }
}

/// Stencil plus weight derivatives with respect to the lookup position.
#[inline]
pub fn stencil_with_grad(dims: Dims, p: [f64; 3]) -> Stencil<f64> {
    let bx = bracket(p[0], dims.nx);
    let by = bracket(p[1], dims.ny);
    let bz = bracket(p[2], dims.nz);
    let w1 = |b: &(usize, usize, f64, bool)| [1.0 - b.2, b.2];
    let d1 = |b: &(usize, usize, f64, bool)| if b.3 { [-1.0, 1.0] } else { [0.0, 0.0] };
    let (wx, wy, wz) = (w1(&bx), w1(&by), w1(&bz));
    let (dx, dy, dz) = (d1(&bx), d1(&by), d1(&bz));
    let xs = [bx.0, bx.1];
    let ys = [by.0, by.1];
    let zs = [bz.0, bz.1];
    let mut st = Stencil { idx: [0; 8], w: [0.0; 8], dw: [[0.0; 3]; 8] };
    for k in 0..8 {
        let (a, b, c) = (k & 1, (k >> 1) & 1, (k >> 2) & 1);
        st.idx[k] = dims.index(xs[a], ys[b], zs[c]);
        st.w[k] = wx[a] * wy[b] * wz[c];
        st.dw[k] = [dx[a] * wy[b] * wz[c], wx[a] * dy[b] * wz[c], wx[a] * wy[b] * dz[c]];
    }
    st
}

/// Gradient of the trilinear lookup with respect to the position.
///
/// Between cell centers this is the slope of the active cell pair. Exactly on
/// a center the lookup has a kink; there the two one-sided slopes (zero on a
/// clamped side) are averaged, which is what central differences see. This
/// makes the gradient of a zero-velocity lookup the central difference.
pub fn sample_gradient(data: &[f64], dims: Dims, p: [f64; 3]) -> [f64; 3] {
    let on_node = |a: usize| {
        let f = p[a] - 0.5;
        dims.axis(a) > 1 && f >= 0.0 && f <= (dims.axis(a) - 1) as f64 && f == f.floor()
    };
    if !(on_node(0) || on_node(1) || on_node(2)) {
        let st = stencil_with_grad(dims, p);
        let mut dp = [0.0; 3];
        for k in 0..8 {
            for (a, d) in dp.iter_mut().enumerate() {
                *d += st.dw[k][a] * data[st.idx[k]];
            }
        }
        return dp;
    }
    let at = |a: usize, j: usize| {
        let mut q = p;
        q[a] = j as f64 + 0.5;
        sample_scalar(data, dims, q)
    };
    std::array::from_fn(|a| {
        let n = dims.axis(a);
        let f = p[a] - 0.5;
        if n == 1 || f < 0.0 || f > (n - 1) as f64 {
            return 0.0;
        }
        let k = f.floor() as usize;
        if on_node(a) {
            let right = if k + 1 < n { at(a, k + 1) - at(a, k) } else { 0.0 };
            let left = if k > 0 { at(a, k) - at(a, k - 1) } else { 0.0 };
            0.5 * (left + right)
        } else {
            at(a, k + 1) - at(a, k)
        }
    })
}

/// Trilinear lookup into a flat scalar field.
#[inline]
pub fn sample_scalar<T: Real>(data: &[T], dims: Dims, p: [T; 3]) -> T {
    let st = stencil(dims, p);
    let mut acc = T::cst(0.0);
    for k in 0..8 {
        acc += st.w[k] * data[st.idx[k]];
    }
    acc
}

pub(crate) fn check_same(a: Dims, b: Dims, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_grid_reproduces_constant() {
        let g = ScalarGrid::filled(Dims::new(3, 4, 5), 7.0);
        for p in [[0.0, 0.0, 0.0], [1.3, 2.7, 4.9], [-5.0, 10.0, 2.0]] {
            assert_eq!(g.sample(p), 7.0);
        }
    }

    #[test]
    fn linear_ramp_midpoint() {
        let g = ScalarGrid::from_fn(Dims::new(5, 3, 3), |[x, _, _]| x as f64);
        assert!((g.sample([2.0, 1.5, 1.5]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn corner_weight_oracle_on_2x2x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = Dims::new(2, 2, 2);
        let g = ScalarGrid::from_fn(dims, |_| rng.random_range(-1.0..1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..1.5));
            let (tx, ty, tz) = (p[0] - 0.5, p[1] - 0.5, p[2] - 0.5);
            let mut expect = 0.0;
            for z in 0..2 {
                for y in 0..2 {
                    for x in 0..2 {
                        let wx = if x == 0 { 1.0 - tx } else { tx };
                        let wy = if y == 0 { 1.0 - ty } else { ty };
                        let wz = if z == 0 { 1.0 - tz } else { tz };
                        expect += wx * wy * wz * g.at(x, y, z);
                    }
                }
            }
            assert!((g.sample(p) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn cell_centers_are_exact_and_outside_clamps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = Dims::new(4, 3, 5);
        let g = ScalarGrid::from_fn(dims, |_| rng.random_range(0.0..1.0));
        for i in 0..dims.len() {
            assert_eq!(g.sample(dims.center(i)), g.data[i]);
        }
        for _ in 0..100 {
            let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-4.0..10.0));
            let clamped = [
                p[0].clamp(0.5, 3.5),
                p[1].clamp(0.5, 2.5),
                p[2].clamp(0.5, 4.5),
            ];
            assert!((g.sample(p) - g.sample(clamped)).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_gradient_matches_difference_quotient() {
        let dims = Dims::new(4, 4, 4);
        let p = [1.3, 2.2, 2.9];
        let st = stencil_with_grad(dims, p);
        for a in 0..3 {
            let mut q = p;
            q[a] += 1e-7;
            let st2 = stencil(dims, q);
            for k in 0..8 {
                assert_eq!(st.idx[k], st2.idx[k]);
                let fd = (st2.w[k] - st.w[k]) / 1e-7;
                assert!((fd - st.dw[k][a]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn vector_sample_per_channel() {
        let dims = Dims::new(3, 3, 3);
        let v = VectorGrid::from_fn(dims, |[x, y, z]| [x as f64, 2.0 * y as f64, -(z as f64)]);
        let s = v.sample([1.0, 2.0, 2.5]);
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[1] - 3.0).abs() < 1e-15);
        assert!((s[2] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(ScalarGrid::from_vec(Dims::new(2, 2, 2), vec![0.0; 7]).is_err());
        assert!(VectorGrid::from_vec(Dims::new(2, 2, 2), vec![0.0; 8]).is_err());
        assert!(Image::from_vec(2, 2, 2, vec![0.0; 8]).is_err());
    }
}
