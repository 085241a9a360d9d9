mod common;

use smokeflow::potential::{curl, max_interior_divergence};
use smokeflow::synth::{centroid, gen_plume_sequence, gen_potential_noise, LoadedScene, PlumeConfig};
use smokeflow::Dims;

fn quiet(steps: usize) -> PlumeConfig {
    PlumeConfig { res: [16, 32, 16], steps, noise_amplitude: 0.0, blob_center: [0.5, 0.25, 0.5], blob_radius: 2.5, ..PlumeConfig::default() }
}

#[test]
fn noiseless_plume_rises_at_configured_speed() {
    for rise in [0.25, 0.5, 0.8] {
        let seq = gen_plume_sequence(&PlumeConfig { rise_speed: rise, ..quiet(6) }).unwrap();
        for w in seq.densities.windows(2) {
            let (a, b) = (centroid(&w[0]), centroid(&w[1]));
            assert!((b[1] - a[1] - rise).abs() <= 0.1, "rise {rise}: {} -> {}", a[1], b[1]);
            // The limiter's corner set leans toward +x/+z at exact cell
            // centers, which nudges the centroid sideways by a hair.
            assert!((b[0] - a[0]).abs() < 0.01 && (b[2] - a[2]).abs() < 0.01);
        }
    }
}

#[test]
fn interior_plume_keeps_its_mass() {
    // Ten MacCormack steps with noise; the blob stays clear of the walls.
    let cfg = PlumeConfig { res: [32, 48, 32], steps: 10, blob_center: [0.5, 0.25, 0.5], blob_radius: 3.0, ..PlumeConfig::default() };
    let seq = gen_plume_sequence(&cfg).unwrap();
    let m0 = seq.densities[0].sum();
    let worst = seq.densities.iter().map(|r| (r.sum() - m0).abs() / m0).fold(0.0, f64::max);
    println!("max relative mass drift over 10 steps: {worst:.3e}");
    assert!(worst < 0.02, "mass drift {worst}");
    // Pinned from the measured 2.6e-4 of this configuration.
    assert!(worst < 1e-3, "mass drift regressed: {worst}");
}

#[test]
fn velocities_are_divergence_free_and_capped() {
    let cfg = PlumeConfig { res: [16, 24, 16], steps: 4, noise_amplitude: 3.0, ..PlumeConfig::default() };
    let seq = gen_plume_sequence(&cfg).unwrap();
    assert_eq!(seq.velocities.len(), 4);
    for u in &seq.velocities {
        assert!(max_interior_divergence(u) < 1e-12);
        assert!(u.max_abs_component() <= cfg.max_speed + 1e-12);
    }
}

#[test]
fn sequences_reproduce_from_config_and_seed() {
    let cfg = PlumeConfig { res: [12, 16, 12], steps: 3, rig: smokeflow::synth::CameraRig { image_res: [12, 16], ..PlumeConfig::default().rig }, ..PlumeConfig::default() };
    let a = gen_plume_sequence(&cfg).unwrap();
    let b = gen_plume_sequence(&cfg).unwrap();
    for (x, y) in a.densities.iter().zip(&b.densities) {
        assert_eq!(x.data, y.data);
    }
    assert_eq!(a.views[0][3].data, b.views[0][3].data);
    let other = gen_plume_sequence(&PlumeConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(other.densities[3].data, a.densities[3].data);
}

#[test]
fn noise_curl_is_divergence_free() {
    let p = gen_potential_noise(Dims::new(12, 14, 10), 5, 3, 1.0, 6.0).unwrap();
    assert!(max_interior_divergence(&curl(&p)) < 1e-12);
}

#[test]
fn written_scene_loads_back_unchanged_after_quantization() {
    let cfg = PlumeConfig { res: [8, 12, 8], steps: 2, background_gradient: Some([0.1, 0.4]), rig: smokeflow::synth::CameraRig { azimuths: vec![0.0, 90.0], image_res: [8, 12], ..PlumeConfig::default().rig }, ..PlumeConfig::default() };
    let seq = gen_plume_sequence(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    seq.write(dir.path(), Some(cfg.seed)).unwrap();
    let scene = LoadedScene::load(dir.path()).unwrap();
    assert_eq!(scene.densities.len(), 3);
    assert_eq!(scene.views.len(), 2);
    for (a, b) in scene.densities.iter().zip(&seq.densities) {
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| (x - y).abs() <= 1e-7 * y.abs().max(1e-30)));
    }
    assert!(scene.background.is_some());
}
