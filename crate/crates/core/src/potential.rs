//! Divergence-free velocities from vector potentials.
//!
//! All operators here are linear, so each comes with an exact transpose
//! (`adjoint_*`). Derivatives use unit cell spacing: central differences in
//! the interior, one-sided differences on the outer layer. The stencils are
//! separable per axis, so mixed differences commute and the discrete
//! divergence of a discrete curl vanishes up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Dims, ScalarGrid, VectorGrid};

/// Common view over scalar and vector grids for channel-agnostic resampling.
pub trait Field: Sized {
    const CHANNELS: usize;
    fn dims(&self) -> Dims;
    fn data(&self) -> &[f64];
    fn from_parts(dims: Dims, data: Vec<f64>) -> Self;
}

impl Field for ScalarGrid {
    const CHANNELS: usize = 1;
    fn dims(&self) -> Dims {
        self.dims
    }
    fn data(&self) -> &[f64] {
        &self.data
    }
    fn from_parts(dims: Dims, data: Vec<f64>) -> Self {
        ScalarGrid { dims, data }
    }
}

impl Field for VectorGrid {
    const CHANNELS: usize = 3;
    fn dims(&self) -> Dims {
        self.dims
    }
    fn data(&self) -> &[f64] {
        &self.data
    }
    fn from_parts(dims: Dims, data: Vec<f64>) -> Self {
        VectorGrid { dims, data }
    }
}

#[inline]
fn stride(dims: Dims, axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => dims.nx,
        _ => dims.nx * dims.ny,
    }
}

/// Derivative of channel `c` (of `ch`) along `axis`, as a scalar field.
fn derivative(data: &[f64], dims: Dims, ch: usize, c: usize, axis: usize) -> Vec<f64> {
    let n = dims.axis(axis);
    let s = stride(dims, axis);
    (0..dims.len())
        .map(|cell| {
            let i = dims.coords(cell)[axis];
            let at = |k: usize| data[ch * k + c];
            if n == 1 {
                0.0
            } else if i == 0 {
                at(cell + s) - at(cell)
            } else if i == n - 1 {
                at(cell) - at(cell - s)
            } else {
                0.5 * (at(cell + s) - at(cell - s))
            }
        })
        .collect()
}

/// Transpose of [`derivative`]: accumulates `sign * D^T g` into channel `c`.
fn derivative_adjoint(g: &[f64], dims: Dims, out: &mut [f64], ch: usize, c: usize, axis: usize, sign: f64) {
    let n = dims.axis(axis);
    if n == 1 {
        return;
    }
    let s = stride(dims, axis);
    for (cell, &gv) in g.iter().enumerate() {
        let gv = sign * gv;
        let i = dims.coords(cell)[axis];
        if i == 0 {
            out[ch * (cell + s) + c] += gv;
            out[ch * cell + c] -= gv;
        } else if i == n - 1 {
            out[ch * cell + c] += gv;
            out[ch * (cell - s) + c] -= gv;
        } else {
            out[ch * (cell + s) + c] += 0.5 * gv;
            out[ch * (cell - s) + c] -= 0.5 * gv;
        }
    }
}

pub fn curl(p: &VectorGrid) -> VectorGrid {
    let d = p.dims;
    let dd = |c, a| derivative(&p.data, d, 3, c, a);
    let (dy_pz, dz_py) = (dd(2, 1), dd(1, 2));
    let (dz_px, dx_pz) = (dd(0, 2), dd(2, 0));
    let (dx_py, dy_px) = (dd(1, 0), dd(0, 1));
    let mut data = Vec::with_capacity(3 * d.len());
    for i in 0..d.len() {
        data.push(dy_pz[i] - dz_py[i]);
        data.push(dz_px[i] - dx_pz[i]);
        data.push(dx_py[i] - dy_px[i]);
    }
    VectorGrid { dims: d, data }
}

pub fn adjoint_curl(g: &VectorGrid) -> VectorGrid {
    let d = g.dims;
    let comp = |c: usize| -> Vec<f64> { g.data.iter().skip(c).step_by(3).copied().collect() };
    let (gx, gy, gz) = (comp(0), comp(1), comp(2));
    let mut out = vec![0.0; 3 * d.len()];
    // u_x = Dy Pz - Dz Py
    derivative_adjoint(&gx, d, &mut out, 3, 2, 1, 1.0);
    derivative_adjoint(&gx, d, &mut out, 3, 1, 2, -1.0);
    // u_y = Dz Px - Dx Pz
    derivative_adjoint(&gy, d, &mut out, 3, 0, 2, 1.0);
    derivative_adjoint(&gy, d, &mut out, 3, 2, 0, -1.0);
    // u_z = Dx Py - Dy Px
    derivative_adjoint(&gz, d, &mut out, 3, 1, 0, 1.0);
    derivative_adjoint(&gz, d, &mut out, 3, 0, 1, -1.0);
    VectorGrid { dims: d, data: out }
}

pub fn divergence(u: &VectorGrid) -> ScalarGrid {
    let d = u.dims;
    let dx = derivative(&u.data, d, 3, 0, 0);
    let dy = derivative(&u.data, d, 3, 1, 1);
    let dz = derivative(&u.data, d, 3, 2, 2);
    ScalarGrid { dims: d, data: (0..d.len()).map(|i| dx[i] + dy[i] + dz[i]).collect() }
}

/// Largest absolute divergence over interior cells.
pub fn max_interior_divergence(u: &VectorGrid) -> f64 {
    let div = divergence(u);
    (0..u.dims.len())
        .filter(|&i| u.dims.is_interior(i))
        .fold(0.0, |m, i| m.max(div.data[i].abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// Quadratic B-spline with the coarse cells as control points.
    BSpline2,
    Linear,
}

/// Taps `(coarse offset relative to m, weight)` for fine index `2m + parity`.
fn taps(kernel: Kernel, parity: usize) -> &'static [(isize, f64)] {
    // Fine center i sits at coarse coordinate i/2 - 0.25 (in cell-index units).
    const B_EVEN: [(isize, f64); 3] = [(-1, 0.28125), (0, 0.6875), (1, 0.03125)];
    const B_ODD: [(isize, f64); 3] = [(-1, 0.03125), (0, 0.6875), (1, 0.28125)];
    const L_EVEN: [(isize, f64); 2] = [(-1, 0.25), (0, 0.75)];
    const L_ODD: [(isize, f64); 2] = [(0, 0.75), (1, 0.25)];
    match (kernel, parity) {
        (Kernel::BSpline2, 0) => &B_EVEN,
        (Kernel::BSpline2, _) => &B_ODD,
        (Kernel::Linear, 0) => &L_EVEN,
        (Kernel::Linear, _) => &L_ODD,
    }
}

fn with_axis(d: Dims, axis: usize, n: usize) -> Dims {
    match axis {
        0 => Dims::new(n, d.ny, d.nz),
        1 => Dims::new(d.nx, n, d.nz),
        _ => Dims::new(d.nx, d.ny, n),
    }
}

/// Replace coordinate `axis` of `c`.
#[inline]
fn index_with(d: Dims, c: [usize; 3], axis: usize, v: usize) -> usize {
    let mut c = c;
    c[axis] = v;
    d.index(c[0], c[1], c[2])
}

fn upsample_pass(data: &[f64], dims: Dims, ch: usize, axis: usize, kernel: Kernel) -> (Vec<f64>, Dims) {
    let n = dims.axis(axis);
    let fine = with_axis(dims, axis, 2 * n);
    let mut out = vec![0.0; ch * fine.len()];
    for cell in 0..fine.len() {
        let c = fine.coords(cell);
        let m = (c[axis] / 2) as isize;
        for &(off, w) in taps(kernel, c[axis] % 2) {
            let j = (m + off).clamp(0, n as isize - 1) as usize;
            let src = index_with(dims, c, axis, j);
            for k in 0..ch {
                out[ch * cell + k] += w * data[ch * src + k];
            }
        }
    }
    (out, fine)
}

fn upsample_pass_adjoint(g: &[f64], coarse: Dims, ch: usize, axis: usize, kernel: Kernel) -> Vec<f64> {
    let n = coarse.axis(axis);
    let fine = with_axis(coarse, axis, 2 * n);
    let mut out = vec![0.0; ch * coarse.len()];
    for cell in 0..fine.len() {
        let c = fine.coords(cell);
        let m = (c[axis] / 2) as isize;
        for &(off, w) in taps(kernel, c[axis] % 2) {
            let j = (m + off).clamp(0, n as isize - 1) as usize;
            let dst = index_with(coarse, c, axis, j);
            for k in 0..ch {
                out[ch * dst + k] += w * g[ch * cell + k];
            }
        }
    }
    out
}

/// Factor-2 upsampling evaluated at the fine cell centers.
pub fn upsample<G: Field>(g: &G, kernel: Kernel) -> G {
    let (mut data, mut dims) = (g.data().to_vec(), g.dims());
    for axis in 0..3 {
        let (d, nd) = upsample_pass(&data, dims, G::CHANNELS, axis, kernel);
        data = d;
        dims = nd;
    }
    G::from_parts(dims, data)
}

pub fn upsample_bspline2<G: Field>(g: &G) -> G {
    upsample(g, Kernel::BSpline2)
}

pub fn upsample_linear<G: Field>(g: &G) -> G {
    upsample(g, Kernel::Linear)
}

/// Transpose of [`upsample`]; `grad` lives on the fine grid.
pub fn adjoint_upsample<G: Field>(grad: &G, kernel: Kernel) -> Result<G> {
    let fine = grad.dims();
    if !fine.nx.is_multiple_of(2) || !fine.ny.is_multiple_of(2) || !fine.nz.is_multiple_of(2) {
        return Err(Error::Shape(format!("adjoint_upsample needs even fine dims, got {fine}")));
    }
    let mut data = grad.data().to_vec();
    let mut dims = fine;
    for axis in (0..3).rev() {
        dims = with_axis(dims, axis, dims.axis(axis) / 2);
        data = upsample_pass_adjoint(&data, dims, G::CHANNELS, axis, kernel);
    }
    Ok(G::from_parts(dims, data))
}

/// Mean of each 2x2x2 block.
pub fn downsample_avg<G: Field>(g: &G) -> Result<G> {
    let d = g.dims();
    if !d.nx.is_multiple_of(2) || !d.ny.is_multiple_of(2) || !d.nz.is_multiple_of(2) {
        return Err(Error::Shape(format!("downsample_avg needs even dims, got {d}")));
    }
    let ch = G::CHANNELS;
    let coarse = Dims::new(d.nx / 2, d.ny / 2, d.nz / 2);
    let mut out = vec![0.0; ch * coarse.len()];
    for cell in 0..coarse.len() {
        let [x, y, z] = coarse.coords(cell);
        for k in 0..ch {
            let mut acc = 0.0;
            for dz in 0..2 {
                for dy in 0..2 {
                    for dx in 0..2 {
                        acc += g.data()[ch * d.index(2 * x + dx, 2 * y + dy, 2 * z + dz) + k];
                    }
                }
            }
            out[ch * cell + k] = acc / 8.0;
        }
    }
    Ok(G::from_parts(coarse, out))
}

/// Transpose of [`downsample_avg`]: each coarse gradient is spread as 1/8 to
/// its children.
pub fn adjoint_downsample<G: Field>(grad: &G) -> G {
    let c = grad.dims();
    let ch = G::CHANNELS;
    let fine = c.scaled(2);
    let mut out = vec![0.0; ch * fine.len()];
    for cell in 0..fine.len() {
        let [x, y, z] = fine.coords(cell);
        let src = c.index(x / 2, y / 2, z / 2);
        for k in 0..ch {
            out[ch * cell + k] = grad.data()[ch * src + k] / 8.0;
        }
    }
    G::from_parts(fine, out)
}

/// Residual potentials ordered coarsest first; each level doubles the
/// resolution of the previous one.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiScalePotential {
    pub levels: Vec<VectorGrid>,
}

/// Resolution ladder of `count` levels ending at `finest`.
pub fn ladder(finest: Dims, count: usize) -> Result<Vec<Dims>> {
    if count == 0 {
        return Err(Error::invalid("levels", "need at least one level"));
    }
    let f = 1usize << (count - 1);
    if !finest.nx.is_multiple_of(f) || !finest.ny.is_multiple_of(f) || !finest.nz.is_multiple_of(f) {
        return Err(Error::invalid(
            "levels",
            format!("{finest} is not divisible by {f} for a {count}-level ladder"),
        ));
    }
    Ok((0..count)
        .map(|l| {
            let s = 1usize << (count - 1 - l);
            Dims::new(finest.nx / s, finest.ny / s, finest.nz / s)
        })
        .collect())
}

impl MultiScalePotential {
    pub fn zeros(finest: Dims, count: usize) -> Result<Self> {
        Ok(MultiScalePotential { levels: ladder(finest, count)?.into_iter().map(VectorGrid::zeros).collect() })
    }

    pub fn finest_dims(&self) -> Dims {
        self.levels.last().map(|l| l.dims).unwrap_or(Dims::new(0, 0, 0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::invalid("levels", "empty potential ladder"));
        }
        for (l, pair) in self.levels.windows(2).enumerate() {
            if pair[1].dims != pair[0].dims.scaled(2) {
                return Err(Error::invalid(
                    "levels",
                    format!("level {} is {} but level {} is {}", l + 1, pair[1].dims, l, pair[0].dims),
                ));
            }
        }
        if self.levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("potential".into()));
        }
        Ok(())
    }
}

/// `P = ((P0 up + P1) up + P2) up ...` with quadratic B-spline upsampling.
pub fn compose_multiscale(msp: &MultiScalePotential) -> Result<VectorGrid> {
    compose_with(msp, Kernel::BSpline2)
}

pub fn compose_with(msp: &MultiScalePotential, kernel: Kernel) -> Result<VectorGrid> {
    msp.validate()?;
    let mut acc = msp.levels[0].clone();
    for level in &msp.levels[1..] {
        acc = upsample(&acc, kernel);
        for (a, b) in acc.data.iter_mut().zip(&level.data) {
            *a += b;
        }
    }
    Ok(acc)
}

/// Transpose of [`compose_with`]: per-level gradients given the gradient of
/// the composed finest potential.
pub fn adjoint_compose(grad: &VectorGrid, ladder_dims: &[Dims], kernel: Kernel) -> Result<Vec<VectorGrid>> {
    let last = *ladder_dims.last().ok_or_else(|| Error::invalid("levels", "empty ladder"))?;
    if grad.dims != last {
        return Err(Error::Shape(format!("adjoint_compose gradient {} vs finest {last}", grad.dims)));
    }
    let mut out = vec![grad.clone()];
    let mut g = grad.clone();
    for _ in 1..ladder_dims.len() {
        g = adjoint_upsample(&g, kernel)?;
        out.push(g.clone());
    }
    out.reverse();
    Ok(out)
}

/// Largest absolute second difference of any velocity component along any
/// axis, over interior cells. With factor-2 upsampling every fine cell borders
/// a former coarse-cell boundary.
pub fn roughness(u: &VectorGrid) -> f64 {
    let d = u.dims;
    let mut worst: f64 = 0.0;
    for cell in 0..d.len() {
        let c = d.coords(cell);
        for axis in 0..3 {
            let n = d.axis(axis);
            if c[axis] == 0 || c[axis] + 1 >= n {
                continue;
            }
            let s = stride(d, axis);
            for k in 0..3 {
                let v = u.data[3 * (cell + s) + k] - 2.0 * u.data[3 * cell + k] + u.data[3 * (cell - s) + k];
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(dims: Dims, seed: u64) -> VectorGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VectorGrid::from_fn(dims, |_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
    }

    fn dotp(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn curl_of_constant_is_zero() {
        let p = VectorGrid::uniform(Dims::new(4, 5, 3), [1.0, -2.0, 3.5]);
        assert!(curl(&p).data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn curl_of_bilinear_potential() {
        let dims = Dims::new(6, 6, 6);
        let p = VectorGrid::from_fn(dims, |[x, y, _]| {
            let (x, y) = (x as f64 + 0.5, y as f64 + 0.5);
            [0.0, 0.0, x * y]
        });
        let u = curl(&p);
        for i in 0..dims.len() {
            if !dims.is_interior(i) {
                continue;
            }
            let c = dims.center(i);
            let v = [u.data[3 * i], u.data[3 * i + 1], u.data[3 * i + 2]];
            assert!((v[0] - c[0]).abs() < 1e-12);
            assert!((v[1] + c[1]).abs() < 1e-12);
            assert_eq!(v[2], 0.0);
        }
    }

    #[test]
    fn divergence_of_ramp_and_constant() {
        let dims = Dims::new(5, 5, 5);
        let u = VectorGrid::from_fn(dims, |[x, _, _]| [x as f64, 0.0, 0.0]);
        let div = divergence(&u);
        for i in 0..dims.len() {
            assert!((div.data[i] - 1.0).abs() < 1e-15);
        }
        let c = VectorGrid::uniform(dims, [0.3, 0.2, 0.1]);
        assert!(divergence(&c).data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn curl_is_divergence_free() {
        let p = random_vec(Dims::new(7, 6, 8), 4);
        assert!(max_interior_divergence(&curl(&p)) < 1e-12);
    }

    #[test]
    fn upsample_reproduces_constants_and_ramps() {
        let dims = Dims::new(4, 5, 3);
        let c = ScalarGrid::filled(dims, 2.5);
        for k in [Kernel::BSpline2, Kernel::Linear] {
            assert!(upsample(&c, k).data.iter().all(|&v| (v - 2.5).abs() < 1e-15));
        }
        let ramp = ScalarGrid::from_fn(dims, |[x, y, z]| x as f64 + 2.0 * y as f64 - z as f64);
        for k in [Kernel::BSpline2, Kernel::Linear] {
            let up = upsample(&ramp, k);
            for i in 0..up.dims.len() {
                let [x, y, z] = up.dims.coords(i);
                // Away from the clamped outer taps.
                let interior = (2..6).contains(&x) && (2..8).contains(&y) && (2..4).contains(&z);
                if interior {
                    let f = |v: usize| v as f64 / 2.0 - 0.25;
                    let expect = f(x) + 2.0 * f(y) - f(z);
                    assert!((up.data[i] - expect).abs() < 1e-12, "{k:?}");
                }
            }
        }
    }

    fn bspline(t: f64) -> f64 {
        let a = t.abs();
        if a <= 0.5 {
            0.75 - a * a
        } else if a <= 1.5 {
            0.5 * (1.5 - a) * (1.5 - a)
        } else {
            0.0
        }
    }

    #[test]
    fn impulse_response_is_tensor_bspline() {
        let dims = Dims::new(5, 5, 5);
        let mut g = ScalarGrid::zeros(dims);
        g.data[dims.index(2, 2, 2)] = 1.0;
        let up = upsample_bspline2(&g);
        for i in 0..up.dims.len() {
            let c = up.dims.center(i);
            // Fine center in coarse units minus the impulse's coarse center.
            let w: f64 = c.iter().map(|&v| bspline(v / 2.0 - 2.5)).product();
            assert!((up.data[i] - w).abs() < 1e-15);
        }
    }

    #[test]
    fn downsample_mean_and_errors() {
        let g = ScalarGrid::from_vec(Dims::new(2, 2, 2), (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(downsample_avg(&g).unwrap().data, vec![3.5]);
        assert!(downsample_avg(&ScalarGrid::zeros(Dims::new(3, 2, 2))).is_err());
        let spread = adjoint_downsample(&ScalarGrid::filled(Dims::new(1, 1, 1), 8.0));
        assert!(spread.data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn adjoints_pass_dot_product() {
        let dims = Dims::new(4, 6, 4);
        let x = random_vec(dims, 1);
        let y = random_vec(dims, 2);
        let lhs = dotp(&curl(&x).data, &y.data);
        let rhs = dotp(&x.data, &adjoint_curl(&y).data);
        assert!((lhs - rhs).abs() < 1e-12);

        for k in [Kernel::BSpline2, Kernel::Linear] {
            let yf = random_vec(dims.scaled(2), 3);
            let lhs = dotp(&upsample(&x, k).data, &yf.data);
            let rhs = dotp(&x.data, &adjoint_upsample(&yf, k).unwrap().data);
            assert!((lhs - rhs).abs() < 1e-12);
        }

        let yc = random_vec(Dims::new(2, 3, 2), 4);
        let lhs = dotp(&downsample_avg(&x).unwrap().data, &yc.data);
        let rhs = dotp(&x.data, &adjoint_downsample(&yc).data);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn compose_single_level_is_identity() {
        let p = random_vec(Dims::new(3, 3, 3), 7);
        let msp = MultiScalePotential { levels: vec![p.clone()] };
        assert_eq!(compose_multiscale(&msp).unwrap(), p);
    }

    #[test]
    fn ladder_violations() {
        assert!(ladder(Dims::new(8, 12, 8), 3).is_ok());
        assert!(ladder(Dims::new(8, 12, 8), 4).is_err());
        let bad = MultiScalePotential {
            levels: vec![VectorGrid::zeros(Dims::new(2, 2, 2)), VectorGrid::zeros(Dims::new(4, 4, 5))],
        };
        assert!(compose_multiscale(&bad).is_err());
    }
}
