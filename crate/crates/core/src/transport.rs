//! Differentiable advection: semi-Lagrangian backtrace and MacCormack with
//! the interpolant-range limiter.
//!
//! Velocities are in cells per time unit. Out-of-domain lookups clamp to the
//! nearest boundary cell, which makes every boundary open.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{check_same, sample_gradient, sample_scalar, stencil, Dims, ScalarGrid, VectorGrid};
use crate::par;
use crate::potential::{compose_multiscale, curl, MultiScalePotential};
use crate::real::{self, Dual, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SemiLagrangian,
    MacCormack,
}

#[inline]
fn backtrace<T: Real>(dims: Dims, vel: &[T], i: usize, dt: f64) -> [T; 3] {
    let c = dims.center(i);
    [
        T::cst(c[0]) - vel[3 * i].scale(dt),
        T::cst(c[1]) - vel[3 * i + 1].scale(dt),
        T::cst(c[2]) - vel[3 * i + 2].scale(dt),
    ]
}

/// `out(x) = rho(x - dt * u(x))` at every cell center.
pub fn sl_kernel<T: Real>(rho: &[T], vel: &[T], dims: Dims, dt: f64) -> Vec<T> {
    par::map(dims.len(), |i| sample_scalar(rho, dims, backtrace(dims, vel, i, dt)))
}

/// MacCormack step with the limiter clamping each cell to the range of the
/// eight corner values of its first backtrace lookup.
pub fn maccormack_kernel<T: Real>(rho: &[T], vel: &[T], dims: Dims, dt: f64) -> Vec<T> {
    let fwd = sl_kernel(rho, vel, dims, dt);
    let back = sl_kernel(&fwd, vel, dims, -dt);
    par::map(dims.len(), |i| {
        let corrected = fwd[i] + (rho[i] - back[i]).scale(0.5);
        let st = stencil(dims, backtrace(dims, vel, i, dt));
        limit(corrected, rho, &st.idx)
    })
}

#[inline]
fn corner_range<T: Real>(rho: &[T], idx: &[usize; 8]) -> (usize, usize) {
    let (mut lo, mut hi) = (idx[0], idx[0]);
    for &k in &idx[1..] {
        if rho[k].val() < rho[lo].val() {
            lo = k;
        }
        if rho[k].val() > rho[hi].val() {
            hi = k;
        }
    }
    (lo, hi)
}

#[inline]
fn limit<T: Real>(value: T, rho: &[T], idx: &[usize; 8]) -> T {
    let (lo, hi) = corner_range(rho, idx);
    if value.val() < rho[lo].val() {
        rho[lo]
    } else if value.val() > rho[hi].val() {
        rho[hi]
    } else {
        value
    }
}

pub fn advect_sl(rho: &ScalarGrid, u: &VectorGrid, dt: f64) -> Result<ScalarGrid> {
    check_same(rho.dims, u.dims, "advect_sl density vs velocity")?;
    Ok(ScalarGrid { dims: rho.dims, data: sl_kernel(&rho.data, &u.data, rho.dims, dt) })
}

pub fn advect_maccormack(rho: &ScalarGrid, u: &VectorGrid, dt: f64) -> Result<ScalarGrid> {
    Ok(advect_maccormack_traced(rho, u, dt)?.0)
}

pub fn advect(scheme: Scheme, rho: &ScalarGrid, u: &VectorGrid, dt: f64) -> Result<ScalarGrid> {
    match scheme {
        Scheme::SemiLagrangian => advect_sl(rho, u, dt),
        Scheme::MacCormack => advect_maccormack(rho, u, dt),
    }
}

/// Multi-step transport: `rho[t+1] = MC(rho[t], curl(compose(potentials[t])))`.
/// Returns `[rho^1, ..., rho^T]`.
pub fn advect_sequence(
    rho0: &ScalarGrid,
    potentials: &[MultiScalePotential],
    dt: f64,
) -> Result<Vec<ScalarGrid>> {
    let mut frames = Vec::with_capacity(potentials.len());
    let mut cur = rho0.clone();
    for msp in potentials {
        let u = curl(&compose_multiscale(msp)?);
        cur = advect_maccormack(&cur, &u, dt)?;
        frames.push(cur.clone());
    }
    Ok(frames)
}

fn sl_adjoint_into(
    g: &[f64],
    rho: &[f64],
    vel: &[f64],
    dims: Dims,
    dt: f64,
    grad_vel: &mut [f64],
) -> Vec<f64> {
    let n = dims.len();
    let per_cell: Vec<[f64; 3]> = par::map(n, |i| {
        if g[i] == 0.0 {
            return [0.0; 3];
        }
        let c = dims.center(i);
        let p = [c[0] - dt * vel[3 * i], c[1] - dt * vel[3 * i + 1], c[2] - dt * vel[3 * i + 2]];
        let dp = sample_gradient(rho, dims, p);
        [-dt * g[i] * dp[0], -dt * g[i] * dp[1], -dt * g[i] * dp[2]]
    });
    for (i, d) in per_cell.iter().enumerate() {
        for a in 0..3 {
            grad_vel[3 * i + a] += d[a];
        }
    }
    par::scatter(n, n, |i, push| {
        if g[i] == 0.0 {
            return;
        }
        let st = stencil(dims, backtrace(dims, vel, i, dt));
        for k in 0..8 {
            push(st.idx[k], st.w[k] * g[i]);
        }
    })
}

/// Vector-Jacobian product of [`advect_sl`] with respect to density and velocity.
pub fn adjoint_advect_sl(
    grad_out: &ScalarGrid,
    rho: &ScalarGrid,
    u: &VectorGrid,
    dt: f64,
) -> Result<(ScalarGrid, VectorGrid)> {
    check_same(grad_out.dims, rho.dims, "adjoint_advect_sl gradient vs density")?;
    check_same(rho.dims, u.dims, "adjoint_advect_sl density vs velocity")?;
    let dims = rho.dims;
    let mut gv = vec![0.0; 3 * dims.len()];
    let gr = sl_adjoint_into(&grad_out.data, &rho.data, &u.data, dims, dt, &mut gv);
    Ok((ScalarGrid { dims, data: gr }, VectorGrid { dims, data: gv }))
}

/// Vector-Jacobian product of [`advect_maccormack`].
///
/// Cells where the limiter is active take the value of one corner of the
/// first lookup, so their gradient flows to that corner density.
pub fn adjoint_advect_maccormack(
    grad_out: &ScalarGrid,
    rho: &ScalarGrid,
    u: &VectorGrid,
    dt: f64,
) -> Result<(ScalarGrid, VectorGrid)> {
    check_same(grad_out.dims, rho.dims, "adjoint_advect_maccormack gradient vs density")?;
    check_same(rho.dims, u.dims, "adjoint_advect_maccormack density vs velocity")?;
    let fwd = sl_kernel(&rho.data, &u.data, rho.dims, dt);
    let back = sl_kernel(&fwd, &u.data, rho.dims, -dt);
    Ok(adjoint_maccormack_given(grad_out, rho, u, dt, &MacCormackTrace { fwd, back }))
}

/// Intermediate passes of a MacCormack step, kept for the adjoint.
#[derive(Clone, Debug)]
pub struct MacCormackTrace {
    pub fwd: Vec<f64>,
    pub back: Vec<f64>,
}

/// [`advect_maccormack`] that also returns its intermediate passes.
pub fn advect_maccormack_traced(rho: &ScalarGrid, u: &VectorGrid, dt: f64) -> Result<(ScalarGrid, MacCormackTrace)> {
    check_same(rho.dims, u.dims, "advect_maccormack density vs velocity")?;
    let dims = rho.dims;
    let fwd = sl_kernel(&rho.data, &u.data, dims, dt);
    let back = sl_kernel(&fwd, &u.data, dims, -dt);
    let out = par::map(dims.len(), |i| {
        let corrected = fwd[i] + 0.5 * (rho.data[i] - back[i]);
        let st = stencil(dims, backtrace(dims, &u.data, i, dt));
        limit(corrected, &rho.data, &st.idx)
    });
    Ok((ScalarGrid { dims, data: out }, MacCormackTrace { fwd, back }))
}

/// [`adjoint_advect_maccormack`] reusing the passes of the forward step.
pub fn adjoint_maccormack_given(
    grad_out: &ScalarGrid,
    rho: &ScalarGrid,
    u: &VectorGrid,
    dt: f64,
    trace: &MacCormackTrace,
) -> (ScalarGrid, VectorGrid) {
    let dims = rho.dims;
    let n = dims.len();
    let (r, v, g) = (&rho.data, &u.data, &grad_out.data);
    let (fwd, back) = (&trace.fwd, &trace.back);

    // Per cell: either the unclamped branch (gradient into fwd, rho, back)
    // or a clamped corner receiving the whole gradient.
    let branch: Vec<Option<usize>> = par::map(n, |i| {
        let corrected = fwd[i] + 0.5 * (r[i] - back[i]);
        let st = stencil(dims, backtrace(dims, v, i, dt));
        let (lo, hi) = corner_range(r, &st.idx);
        if corrected < r[lo] {
            Some(lo)
        } else if corrected > r[hi] {
            Some(hi)
        } else {
            None
        }
    });
    let mut g_fwd = vec![0.0; n];
    let mut g_back = vec![0.0; n];
    let mut g_rho = vec![0.0; n];
    for i in 0..n {
        match branch[i] {
            None => {
                g_fwd[i] = g[i];
                g_back[i] = -0.5 * g[i];
                g_rho[i] += 0.5 * g[i];
            }
            Some(k) => g_rho[k] += g[i],
        }
    }
    let mut g_vel = vec![0.0; 3 * n];
    let from_back = sl_adjoint_into(&g_back, fwd, v, dims, -dt, &mut g_vel);
    for (a, b) in g_fwd.iter_mut().zip(&from_back) {
        *a += b;
    }
    let from_fwd = sl_adjoint_into(&g_fwd, r, v, dims, dt, &mut g_vel);
    for (a, b) in g_rho.iter_mut().zip(&from_fwd) {
        *a += b;
    }
    (ScalarGrid { dims, data: g_rho }, VectorGrid { dims, data: g_vel })
}

/// Jacobian-vector product of an advection scheme by forward-mode
/// differentiation of the same kernel.
pub fn advect_jvp(
    scheme: Scheme,
    rho: &ScalarGrid,
    u: &VectorGrid,
    d_rho: &ScalarGrid,
    d_u: &VectorGrid,
    dt: f64,
) -> Result<ScalarGrid> {
    check_same(rho.dims, u.dims, "advect_jvp density vs velocity")?;
    check_same(rho.dims, d_rho.dims, "advect_jvp density tangent")?;
    check_same(u.dims, d_u.dims, "advect_jvp velocity tangent")?;
    let r: Vec<Dual> = real::seed(&rho.data, &d_rho.data);
    let v: Vec<Dual> = real::seed(&u.data, &d_u.data);
    let out = match scheme {
        Scheme::SemiLagrangian => sl_kernel(&r, &v, rho.dims, dt),
        Scheme::MacCormack => maccormack_kernel(&r, &v, rho.dims, dt),
    };
    Ok(ScalarGrid { dims: rho.dims, data: real::tangent(&out) })
}
