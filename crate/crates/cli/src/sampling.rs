//! Seeded sample points for the natural-map commands.

use natmap_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::scenario::Scenario;
use crate::CliError;

#[derive(Clone, Debug)]
pub struct Sample {
    /// Simplex the point was drawn from, when the scenario has a domain.
    pub simplex: Option<usize>,
    pub point: Point,
}

/// Attempts per requested sample before giving up.
const MAX_ATTEMPTS: usize = 10_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.sample(StandardNormal)).collect()
}

/// `count` points of the truncated fundamental domain (uniform simplex,
/// then uniform barycentric coordinates, rejecting points inside the
/// horoballs at height `truncation`). Without a domain: points within
/// distance 1 of the basepoint.
pub fn sample_points(
    scenario: &Scenario,
    count: usize,
    truncation: f64,
    seed: u64,
) -> Result<Vec<Sample>, CliError> {
    let mut rng = rng(seed);
    let k = scenario.k();
    let mut out = Vec::with_capacity(count);
    let Some(domain) = &scenario.domain else {
        while out.len() < count {
            let dir = gaussian_vector(&mut rng, k);
            let r: f64 = rng.random();
            if let Ok(point) = Point::from_polar(r, &dir) {
                out.push(Sample {
                    simplex: None,
                    point,
                });
            }
        }
        return Ok(out);
    };
    let simplices = domain.simplices.len();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > MAX_ATTEMPTS * count {
            return Err(CliError::Input(format!(
                "no sample points found below truncation height {truncation}"
            )));
        }
        let s = rng.random_range(0..simplices);
        let e: Vec<f64> = (0..=k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = e.iter().sum();
        let b: Vec<f64> = e.iter().map(|x| x / total).collect();
        if let Some(point) = domain.point_at(s, &b) {
            if domain.is_in_truncation(s, &point, truncation) {
                out.push(Sample {
                    simplex: Some(s),
                    point,
                });
            }
        }
    }
    Ok(out)
}
