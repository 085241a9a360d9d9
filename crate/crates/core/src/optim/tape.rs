//! Reverse-mode tape over flat `f64` buffers.
//!
//! Each recorded operation stores its output value and a closure mapping the
//! output gradient to gradients of its inputs. [`Tape::backward`] replays the
//! closures in reverse recording order.

use crate::camera::Camera;
use crate::grid::{Dims, Image, ScalarGrid, VectorGrid};
use crate::loss::{self, CenterSpec};
use crate::potential::{self, Kernel};
use crate::render::{self, LightConfig, RenderOptions};
use crate::transport::{self, Scheme};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

type Backward = Box<dyn Fn(&[f64]) -> Vec<(Var, Vec<f64>)>>;

struct Node {
    value: Vec<f64>,
    backward: Option<Backward>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar root with respect to every recorded value.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    lens: Vec<usize>,
}

impl Gradients {
    /// Gradient for `v`; zeros when `v` did not influence the root.
    pub fn get(&self, v: Var) -> Vec<f64> {
        self.grads[v.0].clone().unwrap_or_else(|| vec![0.0; self.lens[v.0]])
    }

    pub fn touched(&self, v: Var) -> bool {
        self.grads[v.0].is_some()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Vec<f64>) -> Var {
        self.nodes.push(Node { value, backward: None });
        Var(self.nodes.len() - 1)
    }

    pub fn push(&mut self, value: Vec<f64>, backward: Backward) -> Var {
        self.nodes.push(Node { value, backward: Some(backward) });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.nodes[root.0].value.len(), 1, "backward needs a scalar root");
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(vec![1.0]);
        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if let Some(bw) = &self.nodes[i].backward {
                for (input, gi) in bw(&g) {
                    match &mut grads[input.0] {
                        Some(acc) => {
                            for (a, b) in acc.iter_mut().zip(&gi) {
                                *a += b;
                            }
                        }
                        slot @ None => *slot = Some(gi),
                    }
                }
            }
            grads[i] = Some(g);
        }
        Gradients { grads, lens: self.nodes.iter().map(|n| n.value.len()).collect() }
    }

    // ---- elementwise -------------------------------------------------

    /// `log(1 + exp(x))`, evaluated stably.
    pub fn softplus(&mut self, x: Var) -> Var {
        let xs = self.value(x).to_vec();
        let out = xs.iter().map(|&v| softplus(v)).collect();
        self.push(
            out,
            Box::new(move |g| {
                vec![(x, g.iter().zip(&xs).map(|(g, &v)| g * sigmoid(v)).collect())]
            }),
        )
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let xs = self.value(x).to_vec();
        let out = xs.iter().map(|v| v.max(0.0)).collect();
        self.push(
            out,
            Box::new(move |g| vec![(x, g.iter().zip(&xs).map(|(g, &v)| if v > 0.0 { *g } else { 0.0 }).collect())]),
        )
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let out = self.value(x).iter().map(|v| s * v).collect();
        self.push(out, Box::new(move |g| vec![(x, g.iter().map(|v| s * v).collect())]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.value(a).len(), self.value(b).len());
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        self.push(out, Box::new(move |g| vec![(a, g.to_vec()), (b, g.to_vec())]))
    }

    /// Weighted sum of scalar values.
    pub fn weighted_sum(&mut self, terms: &[(Var, f64)]) -> Var {
        let total = terms.iter().map(|&(v, w)| w * self.scalar(v)).sum();
        let terms = terms.to_vec();
        self.push(vec![total], Box::new(move |g| terms.iter().map(|&(v, w)| (v, vec![w * g[0]])).collect()))
    }

    /// Sum of squares, a scalar.
    pub fn sum_squares(&mut self, x: Var) -> Var {
        let xs = self.value(x).to_vec();
        let out = xs.iter().map(|v| v * v).sum();
        self.push(vec![out], Box::new(move |g| vec![(x, xs.iter().map(|v| 2.0 * v * g[0]).collect())]))
    }

    // ---- field operators ---------------------------------------------

    pub fn curl(&mut self, p: Var, dims: Dims) -> Var {
        let grid = VectorGrid { dims, data: self.value(p).to_vec() };
        let out = potential::curl(&grid).data;
        self.push(
            out,
            Box::new(move |g| {
                vec![(p, potential::adjoint_curl(&VectorGrid { dims, data: g.to_vec() }).data)]
            }),
        )
    }

    pub fn upsample(&mut self, p: Var, dims: Dims, kernel: Kernel) -> Var {
        let grid = VectorGrid { dims, data: self.value(p).to_vec() };
        let out = potential::upsample(&grid, kernel).data;
        let fine = dims.scaled(2);
        self.push(
            out,
            Box::new(move |g| {
                let back = potential::adjoint_upsample(&VectorGrid { dims: fine, data: g.to_vec() }, kernel)
                    .expect("fine grid has even dims");
                vec![(p, back.data)]
            }),
        )
    }

    /// Residual composition over a ladder. `None` levels are zero residuals.
    pub fn compose(&mut self, levels: &[Option<Var>], ladder: &[Dims], kernel: Kernel) -> Var {
        assert_eq!(levels.len(), ladder.len());
        let mut acc = match levels[0] {
            Some(v) => v,
            None => self.leaf(vec![0.0; 3 * ladder[0].len()]),
        };
        for l in 1..ladder.len() {
            acc = self.upsample(acc, ladder[l - 1], kernel);
            if let Some(v) = levels[l] {
                acc = self.add(acc, v);
            }
        }
        acc
    }

    pub fn advect(&mut self, scheme: Scheme, rho: Var, vel: Var, dims: Dims, dt: f64) -> Var {
        let r = ScalarGrid { dims, data: self.value(rho).to_vec() };
        let u = VectorGrid { dims, data: self.value(vel).to_vec() };
        let (out, trace) = match scheme {
            Scheme::SemiLagrangian => (transport::advect_sl(&r, &u, dt), None),
            Scheme::MacCormack => match transport::advect_maccormack_traced(&r, &u, dt) {
                Ok((o, t)) => (Ok(o), Some(t)),
                Err(e) => (Err(e), None),
            },
        };
        let out = out.expect("shapes checked by construction").data;
        self.push(
            out,
            Box::new(move |g| {
                let go = ScalarGrid { dims, data: g.to_vec() };
                let (gr, gu) = match &trace {
                    None => transport::adjoint_advect_sl(&go, &r, &u, dt).expect("shapes checked by construction"),
                    Some(t) => transport::adjoint_maccormack_given(&go, &r, &u, dt, t),
                };
                vec![(rho, gr.data), (vel, gu.data)]
            }),
        )
    }

    // ---- losses (scalar outputs) -------------------------------------

    /// Image MSE between the rendering of `rho` and `target`.
    ///
    /// With `paper_backward` the density gradient is the normalized inverse
    /// projection of the image gradient instead of the exact adjoint.
    #[allow(clippy::too_many_arguments)]
    pub fn render_mse(
        &mut self,
        rho: Var,
        dims: Dims,
        target: &Image,
        cam: &Camera,
        light: &LightConfig,
        background: Option<&Image>,
        opts: RenderOptions,
        paper_backward: bool,
    ) -> Var {
        let r = ScalarGrid { dims, data: self.value(rho).to_vec() };
        let img = render::render(&r, light, cam, background, &opts).expect("validated scene");
        let n = img.data.len() as f64;
        let value = img.data.iter().zip(&target.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
        let residual: Vec<f64> = img.data.iter().zip(&target.data).map(|(a, b)| 2.0 * (a - b) / n).collect();
        let (cam, light, bg) = (cam.clone(), light.clone(), background.cloned());
        let shape = (img.width, img.height, img.channels);
        self.push(
            vec![value],
            Box::new(move |g| {
                let gi = Image {
                    width: shape.0,
                    height: shape.1,
                    channels: shape.2,
                    data: residual.iter().map(|v| v * g[0]).collect(),
                };
                let gr = if paper_backward {
                    render::unproject(&gi, &cam, dims, opts.step).expect("validated scene")
                } else {
                    render::adjoint_render(&gi, &r, &light, &cam, bg.as_ref(), &opts).expect("validated scene")
                };
                vec![(rho, gr.data)]
            }),
        )
    }

    pub fn center_loss(&mut self, rho: Var, dims: Dims, spec: CenterSpec) -> Var {
        let r = ScalarGrid { dims, data: self.value(rho).to_vec() };
        let value = loss::center_kernel(&r.data, dims, &spec);
        self.push(
            vec![value],
            Box::new(move |g| vec![(rho, loss::grad_l_center(&r, &spec).data.iter().map(|v| v * g[0]).collect())]),
        )
    }

    pub fn proxy_loss(&mut self, rho: Var, dims: Dims, proto: &ScalarGrid) -> Var {
        let r = ScalarGrid { dims, data: self.value(rho).to_vec() };
        let value = loss::proxy_kernel(&r.data, &proto.data);
        let proto = proto.clone();
        self.push(
            vec![value],
            Box::new(move |g| {
                let grad = loss::grad_l_proxy(&r, &proto).expect("same dims");
                vec![(rho, grad.data.iter().map(|v| v * g[0]).collect())]
            }),
        )
    }

    pub fn cfl_loss(&mut self, vel: Var, dims: Dims) -> Var {
        let u = VectorGrid { dims, data: self.value(vel).to_vec() };
        let value = loss::l_cfl(&u);
        self.push(
            vec![value],
            Box::new(move |g| vec![(vel, loss::grad_l_cfl(&u).data.iter().map(|v| v * g[0]).collect())]),
        )
    }

    pub fn smooth_loss(&mut self, vel: Var, dims: Dims) -> Var {
        let u = VectorGrid { dims, data: self.value(vel).to_vec() };
        let value = loss::l_smooth(&u);
        self.push(
            vec![value],
            Box::new(move |g| vec![(vel, loss::grad_l_smooth(&u).data.iter().map(|v| v * g[0]).collect())]),
        )
    }
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inverse of [`softplus`] for positive inputs.
pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}
