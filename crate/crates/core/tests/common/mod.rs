#![allow(dead_code)]

use irs_mixgamma::stats::{histogram_fd, Ecdf};
use irs_mixgamma::MixtureGamma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nakagami-m amplitude with unit mean power.
pub fn nakagami_amp(m: f64, rng: &mut ChaCha8Rng) -> f64 {
    Gamma::new(m, 1.0 / m).unwrap().sample(rng).sqrt()
}

/// MMSE between the mixture pdf and a Freedman-Diaconis histogram of the
/// samples over [q0.001, q0.999], both expressed for the variable divided by `scale`.
pub fn histogram_mmse(m: &MixtureGamma, samples: &[f64], scale: f64) -> f64 {
    let scaled: Vec<f64> = samples.iter().map(|x| x / scale).collect();
    let e = Ecdf::new(&scaled);
    let h = histogram_fd(&scaled, e.quantile(0.001), e.quantile(0.999)).unwrap();
    let n = h.centers.len() as f64;
    h.centers
        .iter()
        .zip(&h.density)
        .map(|(&x, &d)| {
            let p = scale * m.pdf(x * scale).unwrap();
            (p - d).powi(2)
        })
        .sum::<f64>()
        / n
}
