//! Seeded synthetic benchmark in the fifteen-column schema.
//!
//! Each class draws temperature, humidity and oxygen independently from the
//! Gaussians below (rejection-sampled into the valid ranges, then rounded to
//! one decimal). The class means sit a Mahalanobis distance of about 3.29
//! apart, so the two class densities overlap by 10% and the Bayes-optimal
//! accuracy of the mixture is about 0.95. Classes are balanced.
//!
//! | class    | temp °C     | rh %         | oxy %          |
//! |----------|-------------|--------------|----------------|
//! | fire     | N(36, 5²)   | N(35, 12²)   | N(23.1, 1.25²) |
//! | not fire | N(26, 5²)   | N(60, 12²)   | N(21.0, 1.25²) |
//!
//! The other columns (date, wind, rain and the fire-weather indices) are
//! plausible filler and carry no extra signal beyond what the class implies.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Column, DatasetError, Label, RawRecord, OXY_RANGE, RH_RANGE, TEMP_RANGE};

pub const MIN_ROWS: usize = 50;

/// Mean and standard deviation of one predictor within one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

/// Generating distribution of the three predictors for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProfile {
    pub temp: Gaussian,
    pub rh: Gaussian,
    pub oxy: Gaussian,
}

pub const FIRE: ClassProfile = ClassProfile {
    temp: Gaussian { mean: 36.0, sd: 5.0 },
    rh: Gaussian { mean: 35.0, sd: 12.0 },
    oxy: Gaussian { mean: 23.1, sd: 1.25 },
};

pub const NOT_FIRE: ClassProfile = ClassProfile {
    temp: Gaussian { mean: 26.0, sd: 5.0 },
    rh: Gaussian { mean: 60.0, sd: 12.0 },
    oxy: Gaussian { mean: 21.0, sd: 1.25 },
};

pub fn profile(label: Label) -> ClassProfile {
    match label {
        Label::Fire => FIRE,
        Label::NotFire => NOT_FIRE,
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn draw_in<R: Rng>(rng: &mut R, g: Gaussian, (lo, hi): (f64, f64)) -> f64 {
    let dist = Normal::new(g.mean, g.sd).expect("finite positive sd");
    loop {
        let x = round1(dist.sample(rng));
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
}

/// Generates `n` balanced rows (fire gets the extra row when `n` is odd).
pub fn generate(n: usize, seed: u64) -> Result<Vec<RawRecord>, DatasetError> {
    if n < MIN_ROWS {
        return Err(DatasetError::InvalidN { n, min: MIN_ROWS });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_fire = n.div_ceil(2);
    let mut labels: Vec<Label> = (0..n)
        .map(|i| Label::from_bool(i < n_fire))
        .collect();
    labels.shuffle(&mut rng);

    let records = labels
        .into_iter()
        .map(|label| {
            let p = profile(label);
            let temp = draw_in(&mut rng, p.temp, TEMP_RANGE);
            let rh = draw_in(&mut rng, p.rh, RH_RANGE);
            let oxy = draw_in(&mut rng, p.oxy, OXY_RANGE);
            let fire = label.is_fire();

            let day = rng.random_range(1..=30) as f64;
            let mon = rng.random_range(6..=9) as f64;
            let ws = rng.random_range(6..=26) as f64;
            let rain = if fire || rng.random_bool(0.6) {
                0.0
            } else {
                round1(rng.random_range(0.1..8.0))
            };
            let ffmc = round1(if fire {
                rng.random_range(80.0..96.0)
            } else {
                rng.random_range(30.0..80.0)
            });
            let dmc = round1(rng.random_range(1.0..40.0));
            let dc = round1(rng.random_range(7.0..120.0));
            let isi = round1(if fire {
                rng.random_range(2.0..15.0)
            } else {
                rng.random_range(0.0..3.0)
            });
            let bui = round1(rng.random_range(1.0..40.0));
            let fwi = round1(if fire {
                rng.random_range(3.0..25.0)
            } else {
                rng.random_range(0.0..3.0)
            });

            let mut values = [0.0; 14];
            for (col, v) in [
                (Column::Day, day),
                (Column::Mon, mon),
                (Column::Yr, 2012.0),
                (Column::Temp, temp),
                (Column::Rh, rh),
                (Column::Ws, ws),
                (Column::Rain, rain),
                (Column::Oxy, oxy),
                (Column::Ffmc, ffmc),
                (Column::Dmc, dmc),
                (Column::Dc, dc),
                (Column::Isi, isi),
                (Column::Bui, bui),
                (Column::Fwi, fwi),
            ] {
                values[col as usize] = v;
            }
            RawRecord::from_values(values, label)
        })
        .collect();
    Ok(records)
}
