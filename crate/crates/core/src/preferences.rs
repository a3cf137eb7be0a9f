//! Preference labels under the deterministic and stochastic channels, and
//! labelled datasets.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::models::{ModelError, ModelFamily, SamplePair};
use crate::numerics::{sigmoid, RandomSource, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// z = sign(ℓ), with sign(0) = 0.
    Deterministic,
    /// z = +1 with probability σ(ℓ), −1 otherwise.
    Stochastic,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Deterministic => "deterministic",
            Channel::Stochastic => "stochastic",
        })
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" | "det" => Ok(Channel::Deterministic),
            "stochastic" | "sto" => Ok(Channel::Stochastic),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

/// Exact floating sign, with 0 for a tie.
pub fn deterministic_pref(ell: f64) -> i8 {
    if ell > 0.0 {
        1
    } else if ell < 0.0 {
        -1
    } else {
        0
    }
}

/// One uniform draw `u`; +1 when `u < σ(ℓ)`.
pub fn stochastic_pref(ell: f64, rng: &mut RandomSource) -> i8 {
    stochastic_from_uniform(ell, rng.uniform())
}

fn stochastic_from_uniform(ell: f64, u: f64) -> i8 {
    if u < sigmoid(ell) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub pair: SamplePair,
    pub z: i8,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub channel: Channel,
    pub triplets: Vec<Triplet>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// The first `n` triplets (all of them if `n` exceeds the length).
    pub fn prefix(&self, n: usize) -> &[Triplet] {
        &self.triplets[..n.min(self.triplets.len())]
    }

    /// CSV with header `i,x...,y...,z`; coordinates use 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.triplets.first().map_or(1, |t| t.pair.x.len());
        let mut header = vec!["i".to_string()];
        if d == 1 {
            header.push("x".into());
            header.push("y".into());
        } else {
            header.extend((1..=d).map(|k| format!("x{k}")));
            header.extend((1..=d).map(|k| format!("y{k}")));
        }
        header.push("z".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, t) in self.triplets.iter().enumerate() {
            let mut line = i.to_string();
            for v in t.pair.x.iter().chain(t.pair.y.iter()) {
                line.push(',');
                line.push_str(&format!("{v:.16e}"));
            }
            line.push_str(&format!(",{}", t.z));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads the format written by [`Dataset::write_csv`] for a family of dimension `dim`.
    pub fn read_csv<R: BufRead>(input: R, dim: usize, channel: Channel) -> Result<Self, String> {
        let mut triplets = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || lineno == 0 && line.starts_with('i') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 * dim + 2 {
                return Err(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    2 * dim + 2,
                    fields.len()
                ));
            }
            let nums: Result<Vec<f64>, _> =
                fields[1..=2 * dim].iter().map(|f| f.parse::<f64>()).collect();
            let nums = nums.map_err(|e| format!("line {}: {e}", lineno + 1))?;
            let z: i8 = fields[2 * dim + 1]
                .parse()
                .map_err(|e| format!("line {}: bad label: {e}", lineno + 1))?;
            if !(-1..=1).contains(&z) {
                return Err(format!("line {}: label {z} not in {{-1,0,1}}", lineno + 1));
            }
            triplets.push(Triplet {
                pair: SamplePair::new(
                    Vector::from_row_slice(&nums[..dim]),
                    Vector::from_row_slice(&nums[dim..]),
                ),
                z,
                channel,
            });
        }
        Ok(Self { channel, triplets })
    }
}

/// `n` i.i.d. triplets: a pair from p_θ*, then its label through `channel`.
///
/// Both channels consume one uniform per label, so the same seed yields the same pairs
/// regardless of channel.
pub fn generate_dataset(
    family: &ModelFamily,
    theta_star: &Vector,
    n: usize,
    channel: Channel,
    rng: &mut RandomSource,
) -> Result<Dataset, ModelError> {
    let (det, sto) = generate_both(family, theta_star, n, rng)?;
    Ok(match channel {
        Channel::Deterministic => det,
        Channel::Stochastic => sto,
    })
}

/// The deterministic and stochastic datasets that [`generate_dataset`] would produce from
/// the same stream state: identical pairs, labels from each channel.
pub fn generate_both(
    family: &ModelFamily,
    theta_star: &Vector,
    n: usize,
    rng: &mut RandomSource,
) -> Result<(Dataset, Dataset), ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyData);
    }
    family.check_param(theta_star)?;
    let mut det = Vec::with_capacity(n);
    let mut sto = Vec::with_capacity(n);
    for _ in 0..n {
        let pair = family.sample_pair(theta_star, rng)?;
        let ell = family.pref_value(theta_star, &pair)?;
        let u = rng.uniform();
        det.push(Triplet {
            pair: pair.clone(),
            z: deterministic_pref(ell),
            channel: Channel::Deterministic,
        });
        sto.push(Triplet {
            pair,
            z: stochastic_from_uniform(ell, u),
            channel: Channel::Stochastic,
        });
    }
    Ok((
        Dataset {
            channel: Channel::Deterministic,
            triplets: det,
        },
        Dataset {
            channel: Channel::Stochastic,
            triplets: sto,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_examples() {
        assert_eq!(deterministic_pref(2.3), 1);
        assert_eq!(deterministic_pref(0.0), 0);
        assert_eq!(deterministic_pref(-0.0), 0);
        assert_eq!(deterministic_pref(-1e-300), -1);
    }

    #[test]
    fn stochastic_frequencies() {
        let mut rng = RandomSource::seed_from_u64(4);
        let n = 100_000;
        let f0 = (0..n).filter(|_| stochastic_pref(0.0, &mut rng) == 1).count() as f64 / n as f64;
        assert!((f0 - 0.5).abs() <= 0.005);
        let f1 = (0..n).filter(|_| stochastic_pref(1.0, &mut rng) == 1).count() as f64 / n as f64;
        assert!((f1 - 0.7310586).abs() <= 0.005);
        assert!((0..1000).all(|_| stochastic_pref(1e6, &mut rng) == 1));
        assert!((0..1000).all(|_| stochastic_pref(-3.0, &mut rng) != 0));
    }

    #[test]
    fn deterministic_dataset_labels_match_sign() {
        let fam = ModelFamily::gaussian_identity(3).unwrap();
        let theta = Vector::from_vec(vec![0.5, -1.0, 2.0]);
        let mut rng = RandomSource::seed_from_u64(8);
        let ds = generate_dataset(&fam, &theta, 500, Channel::Deterministic, &mut rng).unwrap();
        for t in &ds.triplets {
            assert_eq!(t.z, deterministic_pref(fam.pref_value(&theta, &t.pair).unwrap()));
        }
    }

    #[test]
    fn gaussian_ties_do_not_occur() {
        let fam = ModelFamily::gaussian_identity(1).unwrap();
        let mut rng = RandomSource::seed_from_u64(10);
        let ds = generate_dataset(&fam, &Vector::zeros(1), 100_000, Channel::Deterministic, &mut rng)
            .unwrap();
        assert_eq!(ds.triplets.iter().filter(|t| t.z == 0).count(), 0);
    }

    #[test]
    fn channels_share_pairs() {
        let fam = ModelFamily::laplace(1.0).unwrap();
        let theta = Vector::from_element(1, 0.3);
        let det = generate_dataset(
            &fam,
            &theta,
            50,
            Channel::Deterministic,
            &mut RandomSource::seed_from_u64(1),
        )
        .unwrap();
        let sto = generate_dataset(
            &fam,
            &theta,
            50,
            Channel::Stochastic,
            &mut RandomSource::seed_from_u64(1),
        )
        .unwrap();
        for (a, b) in det.triplets.iter().zip(&sto.triplets) {
            assert_eq!(a.pair, b.pair);
        }
        assert!(sto.triplets.iter().all(|t| t.z != 0));
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let fam = ModelFamily::gaussian_identity(2).unwrap();
        let theta = Vector::from_vec(vec![1.0, 2.0]);
        let make = || {
            let mut rng = RandomSource::seed_from_u64(77);
            let ds = generate_dataset(&fam, &theta, 20, Channel::Deterministic, &mut rng).unwrap();
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).unwrap();
            (ds, buf)
        };
        let (ds, a) = make();
        let (_, b) = make();
        assert_eq!(a, b);
        let text = String::from_utf8(a.clone()).unwrap();
        assert!(text.starts_with("i,x1,x2,y1,y2,z\n"));
        let back = Dataset::read_csv(&a[..], 2, Channel::Deterministic).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn read_rejects_bad_rows() {
        let text = "i,x,y,z\n0,1.0,2.0,5\n";
        assert!(Dataset::read_csv(text.as_bytes(), 1, Channel::Deterministic).is_err());
        let text = "i,x,y,z\n0,1.0,2.0\n";
        assert!(Dataset::read_csv(text.as_bytes(), 1, Channel::Deterministic).is_err());
    }
}
