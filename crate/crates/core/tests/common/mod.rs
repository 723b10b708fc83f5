#![allow(dead_code)]

use encctl::matkit::spectral_radius;
use encctl::{PlantModel, RealMatrix};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn example_plant() -> PlantModel {
    let a = RealMatrix::from_rows(&[
        [0.2, 0.6, 0.0, 0.0],
        [0.5, -0.5, -0.1, 0.2],
        [0.0, 0.0, 0.5, 0.0],
        [0.0, 0.0, 0.0, 0.3],
    ])
    .unwrap();
    let b = RealMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0], [0.5, 0.5], [1.0, 0.0]]).unwrap();
    PlantModel::new(a, b, 0.01).unwrap()
}

pub fn example_config_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.json")
}

pub fn uniform_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> RealMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RealMatrix::new(rows, cols, data).unwrap()
}

/// Random matrix rescaled to a spectral radius drawn from [0.05, 0.95].
pub fn random_stable(rng: &mut ChaCha20Rng, n: usize) -> RealMatrix {
    loop {
        let a = uniform_matrix(rng, n, n);
        let rho = spectral_radius(&a);
        if rho > 1e-3 {
            return a.scale(rng.gen_range(0.05..0.95) / rho);
        }
    }
}

pub fn random_controllable_plant(rng: &mut ChaCha20Rng, n: usize, m: usize) -> PlantModel {
    loop {
        let a = uniform_matrix(rng, n, n);
        let b = uniform_matrix(rng, n, m);
        let plant = PlantModel::new(a, b, 0.01).unwrap();
        if plant.is_controllable() {
            return plant;
        }
    }
}
