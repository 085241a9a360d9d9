//! Synthetic plume sequences with known density, velocity, and renders.
//!
//! Velocities are curls of a rising-motion potential plus band-limited
//! value noise, so they are divergence free by construction.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::grid::{Dims, Image, ScalarGrid, VectorGrid};
use crate::io;
use crate::potential::curl;
use crate::render::{render, LightConfig, RenderOptions};
use crate::transport::advect_maccormack;

#[inline]
fn bspline2(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        0.75 - a * a
    } else if a <= 1.5 {
        0.5 * (1.5 - a) * (1.5 - a)
    } else {
        0.0
    }
}

/// Band-limited vector value noise: quadratic B-spline evaluation of random
/// lattices, one per octave, lattice spacing halving and amplitude halving
/// per octave.
pub fn gen_potential_noise(dims: Dims, seed: u64, octaves: usize, amplitude: f64, base_spacing: f64) -> Result<VectorGrid> {
    if !(amplitude > 0.0) {
        return Err(Error::invalid("amplitude", "must be > 0"));
    }
    if !(base_spacing >= 1.0) {
        return Err(Error::invalid("base_spacing", "must be >= 1 cell"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = VectorGrid::zeros(dims);
    for o in 0..octaves {
        let spacing = (base_spacing / (1u64 << o) as f64).max(1.0);
        let amp = amplitude / (1u64 << o) as f64;
        let lat = Dims::new(
            (dims.nx as f64 / spacing).ceil() as usize + 3,
            (dims.ny as f64 / spacing).ceil() as usize + 3,
            (dims.nz as f64 / spacing).ceil() as usize + 3,
        );
        let values: Vec<f64> = (0..3 * lat.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for cell in 0..dims.len() {
            // Lattice coordinate, shifted by one so taps never go negative.
            let q = dims.center(cell).map(|v| v / spacing + 1.0);
            let base = q.map(|v| (v - 0.5).floor() as usize);
            let mut acc = [0.0; 3];
            for dz in 0..3 {
                let jz = base[2] + dz;
                let wz = bspline2(q[2] - (jz as f64 + 0.5) + 1.0 - 1.0);
                for dy in 0..3 {
                    let jy = base[1] + dy;
                    let wy = bspline2(q[1] - (jy as f64 + 0.5));
                    for dx in 0..3 {
                        let jx = base[0] + dx;
                        let wx = bspline2(q[0] - (jx as f64 + 0.5));
                        let w = wx * wy * wz;
                        if w == 0.0 {
                            continue;
                        }
                        let l = lat.index(jx.min(lat.nx - 1), jy.min(lat.ny - 1), jz.min(lat.nz - 1));
                        for c in 0..3 {
                            acc[c] += w * values[3 * l + c];
                        }
                    }
                }
            }
            for c in 0..3 {
                out.data[3 * cell + c] += amp * acc[c];
            }
        }
    }
    Ok(out)
}

/// Cameras placed on a horizontal circle around the domain center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    /// Degrees; 0 looks along -z from the +z side.
    pub azimuths: Vec<f64>,
    /// Camera distance in multiples of the largest grid extent.
    pub distance: f64,
    pub fov_y: f64,
    pub image_res: [usize; 2],
}

impl CameraRig {
    pub fn cameras(&self, dims: Dims) -> Vec<Camera> {
        let center = [dims.nx as f64 / 2.0, dims.ny as f64 / 2.0, dims.nz as f64 / 2.0];
        let extent = dims.nx.max(dims.ny).max(dims.nz) as f64;
        let dist = self.distance * extent;
        self.azimuths
            .iter()
            .map(|&a| Camera::orbit(center, dist, a, self.fov_y, self.image_res, extent))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlumeConfig {
    pub res: [usize; 3],
    /// Number of advection steps; the sequence has `steps + 1` frames.
    pub steps: usize,
    pub seed: u64,
    /// Upward velocity in cells per frame.
    pub rise_speed: f64,
    pub noise_amplitude: f64,
    pub noise_octaves: usize,
    pub noise_spacing: f64,
    /// Cap on any velocity component.
    pub max_speed: f64,
    /// Blob center as a fraction of the domain per axis.
    pub blob_center: [f64; 3],
    /// Gaussian standard deviation in cells.
    pub blob_radius: f64,
    pub blob_density: f64,
    pub rig: CameraRig,
    pub light: LightConfig,
    pub render_step: f64,
    /// Optional vertical gradient background `[top, bottom]`; black otherwise.
    pub background_gradient: Option<[f64; 2]>,
}

impl Default for PlumeConfig {
    fn default() -> Self {
        PlumeConfig {
            res: [32, 48, 32],
            steps: 5,
            seed: 1,
            rise_speed: 0.5,
            noise_amplitude: 0.6,
            noise_octaves: 2,
            noise_spacing: 8.0,
            max_speed: 1.0,
            blob_center: [0.5, 0.3, 0.5],
            blob_radius: 4.0,
            blob_density: 0.4,
            rig: CameraRig { azimuths: vec![0.0], distance: 2.5, fov_y: 30.0, image_res: [32, 48] },
            light: LightConfig::default(),
            render_step: 0.5,
            background_gradient: None,
        }
    }
}

impl PlumeConfig {
    pub fn dims(&self) -> Dims {
        Dims::new(self.res[0], self.res[1], self.res[2])
    }

    pub fn validate(&self) -> Result<()> {
        self.dims().check_nonempty()?;
        if !(self.max_speed > 0.0) {
            return Err(Error::invalid("max_speed", "must be > 0"));
        }
        if !(self.blob_radius > 0.0) || !(self.blob_density >= 0.0) {
            return Err(Error::invalid("blob_radius/blob_density", "radius > 0, density >= 0"));
        }
        if self.noise_amplitude < 0.0 {
            return Err(Error::invalid("noise_amplitude", "must be >= 0"));
        }
        if !(self.render_step > 0.0) {
            return Err(Error::invalid("render_step", "must be > 0"));
        }
        if self.rig.azimuths.is_empty() {
            return Err(Error::invalid("rig.azimuths", "need at least one camera"));
        }
        self.light.validate()?;
        for cam in self.rig.cameras(self.dims()) {
            cam.validate()?;
        }
        Ok(())
    }

    pub fn backgrounds(&self) -> Option<Image> {
        let [w, h] = self.rig.image_res;
        self.background_gradient.map(|[top, bottom]| {
            let data = (0..w * h)
                .map(|p| {
                    let t = (p / w) as f64 / (h.max(2) - 1) as f64;
                    top + t * (bottom - top)
                })
                .collect();
            Image { width: w, height: h, channels: 1, data }
        })
    }
}

/// Ground truth for a synthetic scene.
#[derive(Clone, Debug)]
pub struct PlumeSequence {
    pub dims: Dims,
    /// `steps + 1` densities.
    pub densities: Vec<ScalarGrid>,
    /// `steps` velocities; `velocities[t]` carries frame `t` to `t + 1`.
    pub velocities: Vec<VectorGrid>,
    pub potentials: Vec<VectorGrid>,
    pub cameras: Vec<Camera>,
    pub light: LightConfig,
    pub background: Option<Image>,
    pub render_step: f64,
    /// `views[camera][frame]`.
    pub views: Vec<Vec<Image>>,
}

pub fn gaussian_blob(dims: Dims, center: [f64; 3], radius: f64, peak: f64) -> ScalarGrid {
    let mut g = ScalarGrid::zeros(dims);
    for i in 0..dims.len() {
        let c = dims.center(i);
        let d2: f64 = (0..3).map(|a| (c[a] - center[a]).powi(2)).sum();
        g.data[i] = peak * (-d2 / (2.0 * radius * radius)).exp();
    }
    g
}

pub fn gen_plume_sequence(cfg: &PlumeConfig) -> Result<PlumeSequence> {
    cfg.validate()?;
    let dims = cfg.dims();
    let center = [
        cfg.blob_center[0] * dims.nx as f64,
        cfg.blob_center[1] * dims.ny as f64,
        cfg.blob_center[2] * dims.nz as f64,
    ];
    let rho0 = gaussian_blob(dims, center, cfg.blob_radius, cfg.blob_density);

    let noise = if cfg.noise_amplitude > 0.0 && cfg.steps > 0 {
        let a = gen_potential_noise(dims, cfg.seed, cfg.noise_octaves, cfg.noise_amplitude, cfg.noise_spacing)?;
        let b = gen_potential_noise(dims, cfg.seed.wrapping_add(7919), cfg.noise_octaves, cfg.noise_amplitude, cfg.noise_spacing)?;
        Some((a, b))
    } else {
        None
    };

    let mut densities = vec![rho0];
    let mut velocities = Vec::with_capacity(cfg.steps);
    let mut potentials = Vec::with_capacity(cfg.steps);
    for t in 0..cfg.steps {
        // Rising motion: P_z = -v x gives u_y = v.
        let mut p = VectorGrid::from_fn(dims, |[x, _, _]| [0.0, 0.0, -cfg.rise_speed * (x as f64 + 0.5)]);
        if let Some((a, b)) = &noise {
            let s = if cfg.steps > 1 { t as f64 / (cfg.steps - 1) as f64 } else { 0.0 };
            for (k, v) in p.data.iter_mut().enumerate() {
                *v += (1.0 - s) * a.data[k] + s * b.data[k];
            }
        }
        let mut u = curl(&p);
        let peak = u.max_abs_component();
        if peak > cfg.max_speed {
            let s = cfg.max_speed / peak;
            p.scale(s);
            u = curl(&p);
        }
        let next = advect_maccormack(densities.last().unwrap(), &u, 1.0)?;
        densities.push(next);
        velocities.push(u);
        potentials.push(p);
    }

    let cameras = cfg.rig.cameras(dims);
    let background = cfg.backgrounds();
    let opts = RenderOptions { step: cfg.render_step, light_gradient: true };
    let views = cameras
        .iter()
        .map(|cam| {
            densities
                .iter()
                .map(|rho| render(rho, &cfg.light, cam, background.as_ref(), &opts))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlumeSequence {
        dims,
        densities,
        velocities,
        potentials,
        cameras,
        light: cfg.light.clone(),
        background,
        render_step: cfg.render_step,
        views,
    })
}

/// `manifest.json` of a scene directory. Paths are relative to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub res: [usize; 3],
    pub frames: usize,
    pub densities: Vec<String>,
    #[serde(default)]
    pub velocities: Vec<String>,
    #[serde(default)]
    pub potentials: Vec<String>,
    pub cameras: Vec<Camera>,
    pub light: LightConfig,
    pub render_step: f64,
    /// `views[camera][frame]`, PFM files.
    pub views: Vec<Vec<String>>,
    #[serde(default)]
    pub background: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PlumeSequence {
    /// Write volumes, renders, and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, seed: Option<u64>) -> Result<SceneManifest> {
        let mut m = SceneManifest {
            res: [self.dims.nx, self.dims.ny, self.dims.nz],
            frames: self.densities.len(),
            densities: Vec::new(),
            velocities: Vec::new(),
            potentials: Vec::new(),
            cameras: self.cameras.clone(),
            light: self.light.clone(),
            render_step: self.render_step,
            views: Vec::new(),
            background: None,
            seed,
        };
        for (t, d) in self.densities.iter().enumerate() {
            let name = format!("density_{t:03}.vgrid");
            io::write_scalar(dir.join(&name), d)?;
            m.densities.push(name);
        }
        for (t, u) in self.velocities.iter().enumerate() {
            let name = format!("velocity_{t:03}.vgrid");
            io::write_vector(dir.join(&name), u)?;
            m.velocities.push(name);
        }
        for (t, p) in self.potentials.iter().enumerate() {
            let name = format!("potential_{t:03}.vgrid");
            io::write_vector(dir.join(&name), p)?;
            m.potentials.push(name);
        }
        for (c, frames) in self.views.iter().enumerate() {
            let mut names = Vec::new();
            for (t, img) in frames.iter().enumerate() {
                let name = format!("view{c}_frame{t:03}.pfm");
                io::write_pfm(dir.join(&name), img)?;
                io::write_png(dir.join(format!("view{c}_frame{t:03}.png")), img)?;
                names.push(name);
            }
            m.views.push(names);
        }
        if let Some(bg) = &self.background {
            io::write_pfm(dir.join("background.pfm"), bg)?;
            m.background = Some("background.pfm".into());
        }
        io::write_json(dir.join("manifest.json"), &m)?;
        Ok(m)
    }
}

/// A scene directory loaded back into memory.
#[derive(Clone, Debug)]
pub struct LoadedScene {
    pub manifest: SceneManifest,
    pub densities: Vec<ScalarGrid>,
    pub velocities: Vec<VectorGrid>,
    pub views: Vec<Vec<Image>>,
    pub background: Option<Image>,
}

impl LoadedScene {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: SceneManifest = io::read_json(dir.join("manifest.json"))?;
        let densities = manifest.densities.iter().map(|f| io::read_scalar(dir.join(f))).collect::<Result<Vec<_>>>()?;
        let velocities =
            manifest.velocities.iter().map(|f| io::read_vector(dir.join(f))).collect::<Result<Vec<_>>>()?;
        let views = manifest
            .views
            .iter()
            .map(|fs| fs.iter().map(|f| io::read_pfm(dir.join(f))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let background = manifest.background.as_ref().map(|f| io::read_pfm(dir.join(f))).transpose()?;
        Ok(LoadedScene { manifest, densities, velocities, views, background })
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.manifest.res[0], self.manifest.res[1], self.manifest.res[2])
    }
}

/// Density-weighted centroid in grid coordinates.
pub fn centroid(rho: &ScalarGrid) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut mass = 0.0;
    for (i, &r) in rho.data.iter().enumerate() {
        let c = rho.dims.center(i);
        for a in 0..3 {
            acc[a] += r * c[a];
        }
        mass += r;
    }
    acc.map(|v| v / mass)
}
