//! Adjoint checks for every differentiable operator: central differences
//! against the hand-written vector-Jacobian products, and dot-product tests
//! against forward-mode (dual number) or forward linear maps.
//!
//! Shared by the core test suite and the acceptance target.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smokeflow::camera::Camera;
use smokeflow::grid::{Dims, Image, ScalarGrid, VectorGrid};
use smokeflow::loss::{self, CenterSpec};
use smokeflow::optim::{gradcheck, GradCheckOptions};
use smokeflow::potential::{self, Kernel, MultiScalePotential};
use smokeflow::real::{self, Dual, Real};
use smokeflow::render::{self, LightConfig, RenderOptions};
use smokeflow::transport::{self, Scheme};

pub const FD_TOLERANCE: f64 = 1e-6;
pub const DOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct OpCheck {
    pub name: String,
    /// Largest relative error between adjoint and central differences.
    pub fd_rel: f64,
    pub checked: usize,
    pub skipped: usize,
    /// Relative mismatch of the dot-product identity.
    pub dot_rel: f64,
}

impl OpCheck {
    pub fn passes(&self) -> bool {
        self.fd_rel < FD_TOLERANCE && self.dot_rel < DOT_TOLERANCE && self.checked > 0
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

pub fn scalar(dims: Dims, lo: f64, hi: f64, seed: u64) -> ScalarGrid {
    ScalarGrid { dims, data: random_vec(dims.len(), lo, hi, seed) }
}

pub fn vector(dims: Dims, lo: f64, hi: f64, seed: u64) -> VectorGrid {
    VectorGrid { dims, data: random_vec(3 * dims.len(), lo, hi, seed) }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel(a: f64, b: f64) -> f64 {
    let d = a.abs().max(b.abs());
    if d == 0.0 {
        0.0
    } else {
        (a - b).abs() / d
    }
}

fn fd_options() -> GradCheckOptions {
    GradCheckOptions { h: 1e-4, samples: 400, ..Default::default() }
}

/// Gradient check of `x -> <y, f(x)>` given `f` and its transpose.
fn check_map(
    name: &str,
    x: &[f64],
    y: &[f64],
    forward: impl Fn(&[f64]) -> Vec<f64>,
    adjoint: impl Fn(&[f64], &[f64]) -> Vec<f64>,
    jvp: impl Fn(&[f64], &[f64]) -> Vec<f64>,
    delta: &[f64],
) -> OpCheck {
    let f = |x: &[f64]| Ok((dot(y, &forward(x)), adjoint(x, y)));
    let r = gradcheck(f, x, &fd_options()).expect("gradcheck");
    let lhs = dot(&jvp(x, delta), y);
    let rhs = dot(delta, &adjoint(x, y));
    OpCheck {
        name: name.to_string(),
        fd_rel: r.max_rel_error,
        checked: r.checked,
        skipped: r.skipped_kinks,
        dot_rel: rel(lhs, rhs),
    }
}

/// Scalar objective check: `value_grad` returns the value and gradient,
/// `directional` the forward-mode derivative along a direction.
fn check_scalar(
    name: &str,
    x: &[f64],
    value_grad: impl Fn(&[f64]) -> (f64, Vec<f64>),
    directional: impl Fn(&[f64], &[f64]) -> f64,
    delta: &[f64],
) -> OpCheck {
    let r = gradcheck(|x: &[f64]| Ok(value_grad(x)), x, &fd_options()).expect("gradcheck");
    let (_, g) = value_grad(x);
    OpCheck {
        name: name.to_string(),
        fd_rel: r.max_rel_error,
        checked: r.checked,
        skipped: r.skipped_kinks,
        dot_rel: rel(directional(x, delta), dot(&g, delta)),
    }
}

pub fn small_camera(dims: Dims, azimuth: f64, res: [usize; 2]) -> Camera {
    let c = [dims.nx as f64 / 2.0, dims.ny as f64 / 2.0, dims.nz as f64 / 2.0];
    let extent = dims.nx.max(dims.ny).max(dims.nz) as f64;
    Camera::orbit(c, 2.5 * extent, azimuth, 30.0, res, extent)
}

fn render_check(name: &str, light: LightConfig, background: Option<Image>, opts: RenderOptions) -> OpCheck {
    let dims = Dims::new(6, 6, 6);
    let cam = small_camera(dims, 30.0, [8, 8]);
    let x = random_vec(dims.len(), 0.05, 0.6, 11);
    let y = random_vec(64, -1.0, 1.0, 12);
    let delta = random_vec(dims.len(), -1.0, 1.0, 13);
    let bg = background.as_ref();
    let grid = |v: &[f64]| ScalarGrid { dims, data: v.to_vec() };
    let img = |v: &[f64]| Image { width: 8, height: 8, channels: 1, data: v.to_vec() };
    check_map(
        name,
        &x,
        &y,
        |x| render::render(&grid(x), &light, &cam, bg, &opts).unwrap().data,
        |x, y| render::adjoint_render(&img(y), &grid(x), &light, &cam, bg, &opts).unwrap().data,
        |x, d| render::render_jvp(&grid(x), &grid(d), &light, &cam, bg, &opts).unwrap().data,
        &delta,
    )
}

fn advect_check(scheme: Scheme) -> OpCheck {
    let dims = Dims::new(5, 5, 5);
    let n = dims.len();
    let mut x = random_vec(n, 0.0, 1.0, 21);
    x.extend(random_vec(3 * n, -0.9, 0.9, 22));
    let y = random_vec(n, -1.0, 1.0, 23);
    let delta = random_vec(4 * n, -1.0, 1.0, 24);
    let split = |v: &[f64]| {
        (ScalarGrid { dims, data: v[..n].to_vec() }, VectorGrid { dims, data: v[n..].to_vec() })
    };
    let name = match scheme {
        Scheme::SemiLagrangian => "advect_sl",
        Scheme::MacCormack => "advect_maccormack",
    };
    check_map(
        name,
        &x,
        &y,
        |x| {
            let (r, u) = split(x);
            transport::advect(scheme, &r, &u, 1.0).unwrap().data
        },
        |x, y| {
            let (r, u) = split(x);
            let g = ScalarGrid { dims, data: y.to_vec() };
            let (gr, gu) = match scheme {
                Scheme::SemiLagrangian => transport::adjoint_advect_sl(&g, &r, &u, 1.0).unwrap(),
                Scheme::MacCormack => transport::adjoint_advect_maccormack(&g, &r, &u, 1.0).unwrap(),
            };
            let mut out = gr.data;
            out.extend(gu.data);
            out
        },
        |x, d| {
            let (r, u) = split(x);
            let (dr, du) = split(d);
            transport::advect_jvp(scheme, &r, &u, &dr, &du, 1.0).unwrap().data
        },
        &delta,
    )
}

/// Linear operator: the forward map is its own directional derivative.
fn linear_check(
    name: &str,
    n_in: usize,
    n_out: usize,
    forward: impl Fn(&[f64]) -> Vec<f64>,
    adjoint: impl Fn(&[f64]) -> Vec<f64>,
) -> OpCheck {
    let x = random_vec(n_in, -1.0, 1.0, 31);
    let y = random_vec(n_out, -1.0, 1.0, 32);
    let delta = random_vec(n_in, -1.0, 1.0, 33);
    check_map(name, &x, &y, &forward, |_, y| adjoint(y), |_, d| forward(d), &delta)
}

fn vgrid(dims: Dims, v: &[f64]) -> VectorGrid {
    VectorGrid { dims, data: v.to_vec() }
}

fn sgrid(dims: Dims, v: &[f64]) -> ScalarGrid {
    ScalarGrid { dims, data: v.to_vec() }
}

fn potential_checks() -> Vec<OpCheck> {
    let d6 = Dims::new(6, 5, 6);
    let d3 = Dims::new(3, 3, 3);
    let d6c = Dims::new(6, 6, 6);
    let mut out = vec![linear_check(
        "curl",
        3 * d6.len(),
        3 * d6.len(),
        |x| potential::curl(&vgrid(d6, x)).data,
        |y| potential::adjoint_curl(&vgrid(d6, y)).data,
    )];
    for (kernel, label) in [(Kernel::BSpline2, "upsample_bspline2"), (Kernel::Linear, "upsample_linear")] {
        out.push(linear_check(
            label,
            3 * d3.len(),
            3 * d6c.len(),
            |x| potential::upsample(&vgrid(d3, x), kernel).data,
            |y| potential::adjoint_upsample(&vgrid(d6c, y), kernel).unwrap().data,
        ));
    }
    out.push(linear_check(
        "downsample_avg",
        d6c.len(),
        d3.len(),
        |x| potential::downsample_avg(&sgrid(d6c, x)).unwrap().data,
        |y| potential::adjoint_downsample(&sgrid(d3, y)).data,
    ));
    let ladder = potential::ladder(Dims::new(8, 8, 8), 3).unwrap();
    let sizes: Vec<usize> = ladder.iter().map(|d| 3 * d.len()).collect();
    let total: usize = sizes.iter().sum();
    let split = |x: &[f64]| {
        let mut levels = Vec::new();
        let mut off = 0;
        for (d, s) in ladder.iter().zip(&sizes) {
            levels.push(vgrid(*d, &x[off..off + s]));
            off += s;
        }
        MultiScalePotential { levels }
    };
    out.push(linear_check(
        "compose_multiscale",
        total,
        sizes[2],
        |x| potential::compose_multiscale(&split(x)).unwrap().data,
        |y| {
            potential::adjoint_compose(&vgrid(ladder[2], y), &ladder, Kernel::BSpline2)
                .unwrap()
                .into_iter()
                .flat_map(|g| g.data)
                .collect()
        },
    ));
    out
}

fn ralsgan_dual(real_s: &[Dual], fake: &[Dual], label: f64) -> Dual {
    let mean = |v: &[Dual]| {
        let mut a = Dual::cst(0.0);
        for &s in v {
            a += s;
        }
        a.scale(1.0 / v.len() as f64)
    };
    let (mr, mf) = (mean(real_s), mean(fake));
    let l = Dual::cst(label);
    let mut a = Dual::cst(0.0);
    for &s in real_s {
        let t = s - mf - l;
        a += t * t;
    }
    let mut b = Dual::cst(0.0);
    for &s in fake {
        let t = s - mr + l;
        b += t * t;
    }
    a.scale(1.0 / real_s.len() as f64) + b.scale(1.0 / fake.len() as f64)
}

fn loss_checks() -> Vec<OpCheck> {
    let dims = Dims::new(5, 6, 5);
    let n = dims.len();
    let mut out = Vec::new();

    // Target term through the renderer with a non-axis light.
    let d4 = Dims::new(6, 6, 6);
    let cam = small_camera(d4, 10.0, [6, 6]);
    let light = LightConfig { direction: normalize([0.3, -1.0, 0.2]), ..LightConfig::default() };
    let opts = RenderOptions::default();
    let bg = Image { width: 6, height: 6, channels: 1, data: random_vec(36, 0.0, 0.3, 40) };
    let target = Image { width: 6, height: 6, channels: 1, data: random_vec(36, 0.0, 1.0, 41) };
    let x = random_vec(d4.len(), 0.05, 0.6, 42);
    let delta = random_vec(d4.len(), -1.0, 1.0, 43);
    out.push(check_scalar(
        "l_target",
        &x,
        |x| {
            let (v, g) = loss::grad_l_target(&sgrid(d4, x), &target, &cam, &light, Some(&bg), &opts).unwrap();
            (v, g.data)
        },
        |x, d| {
            let r = render::render(&sgrid(d4, x), &light, &cam, Some(&bg), &opts).unwrap();
            let j = render::render_jvp(&sgrid(d4, x), &sgrid(d4, d), &light, &cam, Some(&bg), &opts).unwrap();
            let m = r.data.len() as f64;
            r.data.iter().zip(&target.data).zip(&j.data).map(|((a, t), dj)| 2.0 * (a - t) * dj / m).sum()
        },
        &delta,
    ));

    let spec = CenterSpec::for_grid(dims, 2);
    let x = random_vec(n, 0.0, 1.0, 50);
    let delta = random_vec(n, -1.0, 1.0, 51);
    out.push(check_scalar(
        "l_center",
        &x,
        |x| (loss::l_center(&sgrid(dims, x), &spec).unwrap(), loss::grad_l_center(&sgrid(dims, x), &spec).data),
        |x, d| loss::center_kernel(&real::seed(x, d), dims, &spec).d,
        &delta,
    ));

    let proto = scalar(dims, 0.0, 1.0, 52);
    out.push(check_scalar(
        "l_proxy",
        &x,
        |x| {
            let r = sgrid(dims, x);
            (loss::l_proxy(&r, &proto).unwrap(), loss::grad_l_proxy(&r, &proto).unwrap().data)
        },
        |x, d| loss::proxy_kernel(&real::seed(x, d), &proto.data).d,
        &delta,
    ));

    let u = random_vec(3 * n, -2.0, 2.0, 53);
    let du = random_vec(3 * n, -1.0, 1.0, 54);
    out.push(check_scalar(
        "l_cfl",
        &u,
        |u| (loss::l_cfl(&vgrid(dims, u)), loss::grad_l_cfl(&vgrid(dims, u)).data),
        |u, d| loss::cfl_kernel(&real::seed(u, d)).d,
        &du,
    ));
    out.push(check_scalar(
        "l_smooth",
        &u,
        |u| (loss::l_smooth(&vgrid(dims, u)), loss::grad_l_smooth(&vgrid(dims, u)).data),
        |u, d| loss::smooth_kernel(&real::seed(u, d), dims).d,
        &du,
    ));

    let scores_real = random_vec(7, -1.0, 1.0, 55);
    let fake = random_vec(5, -1.0, 1.0, 56);
    let dfake = random_vec(5, -1.0, 1.0, 57);
    for label in [1.0, -1.0] {
        let name = if label > 0.0 { "ralsgan(l=1)" } else { "ralsgan(l=-1)" };
        out.push(check_scalar(
            name,
            &fake,
            |f| {
                (
                    loss::ralsgan(&scores_real, f, label).unwrap(),
                    loss::grad_ralsgan_fake(&scores_real, f, label).unwrap(),
                )
            },
            |f, d| ralsgan_dual(&real::lift(&scores_real), &real::seed(f, d), label).d,
            &dfake,
        ));
    }
    out
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Every operator check, in a fixed order.
pub fn operator_checks() -> Vec<OpCheck> {
    let axis_light = LightConfig::default();
    let oblique = LightConfig { direction: normalize([0.4, -1.0, -0.3]), ..LightConfig::default() };
    let bg = Image { width: 8, height: 8, channels: 1, data: random_vec(64, 0.0, 0.5, 14) };
    let mut out = vec![
        render_check("render (axis light)", axis_light, None, RenderOptions::default()),
        render_check("render (oblique light, background)", oblique.clone(), Some(bg), RenderOptions::default()),
        render_check("render (step 0.25)", oblique, None, RenderOptions { step: 0.25, light_gradient: true }),
        advect_check(Scheme::SemiLagrangian),
        advect_check(Scheme::MacCormack),
    ];
    out.extend(potential_checks());
    out.extend(loss_checks());
    out
}
