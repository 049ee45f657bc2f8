//! Seeded simulation harness for out-of-index and malformed-code rates.
//!
//! Each trial draws a true class index, encodes it under a scheme, corrupts
//! the code with a noise model, rounds every coordinate back to the nearer of
//! the two bit levels, and decodes. Binary codes can land on patterns with no
//! category (out of index); one-hot codes can lose their single set bit or
//! gain extra ones (malformed); residual-bit codes always decode to a valid
//! index, which the harness asserts outright rather than measures.
//!
//! All randomness flows from explicit seeds through a fixed-algorithm
//! generator, so reports are reproducible across runs, platforms, and thread
//! counts. Sweeps derive one independent seed per cell from the master seed,
//! making per-cell results independent of sweep shape and execution order.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::encoding::{
    decode_binary, decode_onehot, encode_binary, encode_onehot, BinaryCode, BinaryDecode,
    CategorySpace, EncodingError, OneHotCode, ResBitCode, Scheme,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("flip probability {0} is outside [0, 0.5]")]
    InvalidFlipProbability(f64),
    #[error("sigma {0} must be non-negative and finite")]
    InvalidSigma(f64),
    #[error("zipf exponent {0} must be positive and finite")]
    InvalidZipfExponent(f64),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("sweep requires at least one class count, scheme, and noise model")]
    EmptySweep,
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// How a code is corrupted before decoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Adds `N(0, sigma)` to each bit treated as a real value; coordinates are
    /// then rounded to the nearer bit level.
    GaussianOnBits { sigma: f64 },
    /// Replaces every coordinate with an independent uniform bit, ignoring the
    /// true code entirely.
    UniformRandomBits,
    /// Flips each bit independently with the given probability.
    BitFlip { flip_prob: f64 },
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::GaussianOnBits { .. } => "gaussian",
            NoiseKind::UniformRandomBits => "uniform",
            NoiseKind::BitFlip { .. } => "bitflip",
        }
    }

    /// The scalar parameter reported alongside the noise kind (0 for the
    /// parameterless uniform model).
    pub fn param(&self) -> f64 {
        match *self {
            NoiseKind::GaussianOnBits { sigma } => sigma,
            NoiseKind::UniformRandomBits => 0.0,
            NoiseKind::BitFlip { flip_prob } => flip_prob,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match *self {
            NoiseKind::GaussianOnBits { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(HarnessError::InvalidSigma(sigma));
                }
            }
            NoiseKind::UniformRandomBits => {}
            NoiseKind::BitFlip { flip_prob } => {
                if !(0.0..=0.5).contains(&flip_prob) {
                    return Err(HarnessError::InvalidFlipProbability(flip_prob));
                }
            }
        }
        Ok(())
    }
}

/// A validated noise model plus the seed of its random stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Result<Self, HarnessError> {
        kind.validate()?;
        Ok(Self { kind, seed })
    }
}

/// Distribution of the true index drawn each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IndexDistribution {
    Uniform,
    /// Zipf-distributed ranks over `[0, M)`, probing imbalanced vocabularies.
    Zipf { exponent: f64 },
}

impl IndexDistribution {
    fn validate(&self) -> Result<(), HarnessError> {
        if let IndexDistribution::Zipf { exponent } = *self {
            if !(exponent > 0.0 && exponent.is_finite()) {
                return Err(HarnessError::InvalidZipfExponent(exponent));
            }
        }
        Ok(())
    }
}

/// Tallies of one simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub scheme: Scheme,
    pub class_count: usize,
    pub noise: NoiseKind,
    pub trials: u64,
    pub out_of_index_count: u64,
    pub out_of_index_rate: f64,
    pub malformed_count: u64,
    pub malformed_rate: f64,
    /// Distinct valid decoded indices over the class count.
    pub coverage_ratio: f64,
    /// Decoded-index frequencies; together with the two sentinel counts these
    /// sum to `trials`.
    pub histogram: Vec<u64>,
}

impl SimulationReport {
    /// One CSV row matching [`sweep_csv_header`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.scheme,
            self.class_count,
            self.noise.name(),
            self.noise.param(),
            self.trials,
            self.out_of_index_rate,
            self.malformed_rate,
            self.coverage_ratio
        )
    }
}

pub fn sweep_csv_header() -> &'static str {
    "scheme,m,noise,param,trials,ooi_rate,malformed_rate,coverage_ratio"
}

/// Renders reports as the plot-ready CSV table.
pub fn reports_to_csv(reports: &[SimulationReport]) -> String {
    let mut out = String::from(sweep_csv_header());
    out.push('\n');
    for report in reports {
        out.push_str(&report.csv_row());
        out.push('\n');
    }
    out
}

/// Runs one simulation cell with a uniform true-index distribution.
pub fn run_ooi_sim(
    class_count: usize,
    scheme: Scheme,
    noise: &NoiseModel,
    trials: u64,
) -> Result<SimulationReport, HarnessError> {
    run_ooi_sim_with(
        class_count,
        scheme,
        noise,
        trials,
        IndexDistribution::Uniform,
    )
}

/// Runs one simulation cell with an explicit true-index distribution.
pub fn run_ooi_sim_with(
    class_count: usize,
    scheme: Scheme,
    noise: &NoiseModel,
    trials: u64,
    index_dist: IndexDistribution,
) -> Result<SimulationReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    noise.kind.validate()?;
    index_dist.validate()?;
    let space = CategorySpace::with_anonymous_labels(class_count)?;
    let width = space.width(scheme);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let gaussian = match noise.kind {
        NoiseKind::GaussianOnBits { sigma } => {
            Some(Normal::new(0.0, sigma).expect("validated sigma"))
        }
        _ => None,
    };
    let zipf = match index_dist {
        IndexDistribution::Uniform => None,
        IndexDistribution::Zipf { exponent } => Some(
            rand_distr::Zipf::new(class_count as u64, exponent)
                .expect("validated zipf parameters"),
        ),
    };

    let mut histogram = vec![0u64; class_count];
    let mut out_of_index = 0u64;
    let mut malformed = 0u64;
    let mut bits = vec![0u8; width];

    for _ in 0..trials {
        let index = match &zipf {
            None => rng.gen_range(0..class_count),
            Some(z) => z.sample(&mut rng) as usize - 1,
        };
        encode_into(&space, scheme, index, &mut bits)?;
        match noise.kind {
            NoiseKind::GaussianOnBits { .. } => {
                let normal = gaussian.as_ref().expect("gaussian model built");
                for bit in bits.iter_mut() {
                    let noisy = *bit as f64 + normal.sample(&mut rng);
                    // Nearest of the two trained bit levels.
                    *bit = if noisy >= 0.5 { 1 } else { 0 };
                }
            }
            NoiseKind::UniformRandomBits => {
                for bit in bits.iter_mut() {
                    *bit = rng.gen_range(0..2u8);
                }
            }
            NoiseKind::BitFlip { flip_prob } => {
                for bit in bits.iter_mut() {
                    if rng.gen::<f64>() < flip_prob {
                        *bit ^= 1;
                    }
                }
            }
        }
        match decode_outcome(&space, scheme, &bits)? {
            Outcome::Index(decoded) => histogram[decoded] += 1,
            Outcome::OutOfIndex => out_of_index += 1,
            Outcome::Malformed => malformed += 1,
        }
    }

    if scheme == Scheme::ResBit {
        // Residual decoding is total; a nonzero tally would be a codec bug,
        // not a simulation outcome.
        assert_eq!(out_of_index, 0, "residual decode produced an invalid index");
    }
    let tallied: u64 = histogram.iter().sum::<u64>() + out_of_index + malformed;
    assert_eq!(tallied, trials, "every trial must land in exactly one bucket");

    let covered = histogram.iter().filter(|&&c| c > 0).count();
    Ok(SimulationReport {
        scheme,
        class_count,
        noise: noise.kind,
        trials,
        out_of_index_count: out_of_index,
        out_of_index_rate: out_of_index as f64 / trials as f64,
        malformed_count: malformed,
        malformed_rate: malformed as f64 / trials as f64,
        coverage_ratio: covered as f64 / class_count as f64,
        histogram,
    })
}

enum Outcome {
    Index(usize),
    OutOfIndex,
    Malformed,
}

fn encode_into(
    space: &CategorySpace,
    scheme: Scheme,
    index: usize,
    bits: &mut [u8],
) -> Result<(), HarnessError> {
    let code = match scheme {
        Scheme::OneHot => encode_onehot(index, space.class_count())?.into_bits(),
        Scheme::Binary => encode_binary(index, space.class_count())?.into_bits(),
        Scheme::ResBit => space.encode_resbit(index)?.into_bits(),
    };
    bits.copy_from_slice(&code);
    Ok(())
}

fn decode_outcome(
    space: &CategorySpace,
    scheme: Scheme,
    bits: &[u8],
) -> Result<Outcome, HarnessError> {
    match scheme {
        Scheme::ResBit => {
            let code = ResBitCode::from_bits(bits.to_vec())?;
            Ok(Outcome::Index(space.decode_resbit(&code)?))
        }
        Scheme::Binary => {
            let code = BinaryCode::from_bits(bits.to_vec())?;
            match decode_binary(&code, space.class_count())? {
                BinaryDecode::Index(i) => Ok(Outcome::Index(i)),
                BinaryDecode::OutOfIndex(_) => Ok(Outcome::OutOfIndex),
            }
        }
        Scheme::OneHot => {
            let code = OneHotCode::from_bits(bits.to_vec())?;
            match decode_onehot(&code, space.class_count()) {
                Ok(i) => Ok(Outcome::Index(i)),
                Err(EncodingError::MalformedOneHot { .. }) => Ok(Outcome::Malformed),
                Err(other) => Err(other.into()),
            }
        }
    }
}

/// SplitMix64 step: one well-mixed per-cell seed from the master seed.
fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cross-product sweep over class counts, schemes, and noise models.
///
/// Every cell gets its own derived seed, and the report order follows the
/// nesting `class_counts -> schemes -> noise_grid` regardless of how many
/// threads execute the cells.
pub fn sweep(
    class_counts: &[usize],
    schemes: &[Scheme],
    noise_grid: &[NoiseKind],
    trials: u64,
    master_seed: u64,
    index_dist: IndexDistribution,
) -> Result<Vec<SimulationReport>, HarnessError> {
    if class_counts.is_empty() || schemes.is_empty() || noise_grid.is_empty() {
        return Err(HarnessError::EmptySweep);
    }
    let mut cells = Vec::new();
    for &m in class_counts {
        for &scheme in schemes {
            for &kind in noise_grid {
                let cell_index = cells.len() as u64;
                cells.push((m, scheme, kind, derive_seed(master_seed, cell_index)));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(m, scheme, kind, seed)| {
            let noise = NoiseModel::new(kind, seed)?;
            run_ooi_sim_with(m, scheme, &noise, trials, index_dist)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_noise(seed: u64) -> NoiseModel {
        NoiseModel::new(NoiseKind::UniformRandomBits, seed).unwrap()
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(NoiseKind::BitFlip { flip_prob: 0.6 }, 0).is_err());
        assert!(NoiseModel::new(NoiseKind::BitFlip { flip_prob: -0.1 }, 0).is_err());
        assert!(NoiseModel::new(NoiseKind::GaussianOnBits { sigma: -1.0 }, 0).is_err());
        assert!(NoiseModel::new(NoiseKind::GaussianOnBits { sigma: 0.0 }, 0).is_ok());
        assert!(NoiseModel::new(NoiseKind::BitFlip { flip_prob: 0.5 }, 0).is_ok());
    }

    #[test]
    fn binary_uniform_rate_matches_the_pattern_count() {
        // 14 of the 64 width-6 patterns have no category for M = 50, so the
        // uniform-bits rate concentrates near 14/64 = 0.21875.
        let report =
            run_ooi_sim(50, Scheme::Binary, &uniform_noise(1), 100_000).unwrap();
        let expected = 14.0 / 64.0;
        let sigma = (expected * (1.0 - expected) / 100_000f64).sqrt();
        assert!(
            (report.out_of_index_rate - expected).abs() < 3.0 * sigma,
            "rate {} vs {expected}",
            report.out_of_index_rate
        );
        assert_eq!(report.malformed_count, 0);
    }

    #[test]
    fn resbit_rate_is_identically_zero() {
        for kind in [
            NoiseKind::UniformRandomBits,
            NoiseKind::BitFlip { flip_prob: 0.5 },
            NoiseKind::GaussianOnBits { sigma: 3.0 },
        ] {
            let noise = NoiseModel::new(kind, 9).unwrap();
            let report = run_ooi_sim(50, Scheme::ResBit, &noise, 20_000).unwrap();
            assert_eq!(report.out_of_index_count, 0);
            assert_eq!(report.malformed_count, 0);
        }
    }

    #[test]
    fn zero_noise_round_trips_every_trial() {
        for scheme in Scheme::ALL {
            let noise = NoiseModel::new(NoiseKind::GaussianOnBits { sigma: 0.0 }, 3).unwrap();
            let report = run_ooi_sim(20, scheme, &noise, 20_000).unwrap();
            assert_eq!(report.out_of_index_count, 0, "{scheme}");
            assert_eq!(report.malformed_count, 0, "{scheme}");
            // With 20k uniform draws over 20 classes every index appears.
            assert_eq!(report.coverage_ratio, 1.0, "{scheme}");
        }
    }

    #[test]
    fn identical_seeds_reproduce_reports() {
        let a = run_ooi_sim(30, Scheme::Binary, &uniform_noise(77), 10_000).unwrap();
        let b = run_ooi_sim(30, Scheme::Binary, &uniform_noise(77), 10_000).unwrap();
        assert_eq!(a, b);
        let c = run_ooi_sim(30, Scheme::Binary, &uniform_noise(78), 10_000).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn histogram_and_sentinels_partition_the_trials() {
        let noise = NoiseModel::new(NoiseKind::BitFlip { flip_prob: 0.3 }, 5).unwrap();
        for scheme in Scheme::ALL {
            let report = run_ooi_sim_with(
                17,
                scheme,
                &noise,
                5_000,
                IndexDistribution::Uniform,
            )
            .unwrap();
            let total: u64 = report.histogram.iter().sum::<u64>()
                + report.out_of_index_count
                + report.malformed_count;
            assert_eq!(total, report.trials);
            assert_eq!(report.histogram.len(), 17);
        }
    }

    #[test]
    fn onehot_bitflip_malformed_rate_matches_the_exact_formula() {
        // P(valid) = (1-p)^M + (M-1) p^2 (1-p)^(M-2): either no bit flips, or
        // the hot bit flips off while exactly one cold bit flips on.
        let m = 12usize;
        let p = 0.08f64;
        let closed_form = 1.0 - ((1.0 - p).powi(m as i32)
            + (m as f64 - 1.0) * p * p * (1.0 - p).powi(m as i32 - 2));

        // Independent oracle: exhaustive enumeration over all flip masks.
        let mut enumerated = 0.0f64;
        for mask in 0u32..(1 << m) {
            let flips = mask.count_ones() as i32;
            let weight = p.powi(flips) * (1.0 - p).powi(m as i32 - flips);
            let code = 1u32 ^ mask; // hot bit at position 0, flipped by the mask
            if code.count_ones() != 1 {
                enumerated += weight;
            }
        }
        assert!(
            (closed_form - enumerated).abs() < 1e-12,
            "{closed_form} vs {enumerated}"
        );

        let noise = NoiseModel::new(NoiseKind::BitFlip { flip_prob: p }, 123).unwrap();
        let report = run_ooi_sim(m, Scheme::OneHot, &noise, 200_000).unwrap();
        let sigma = (closed_form * (1.0 - closed_form) / 200_000f64).sqrt();
        assert!(
            (report.malformed_rate - closed_form).abs() < 4.0 * sigma,
            "empirical {} vs exact {closed_form}",
            report.malformed_rate
        );
    }

    #[test]
    fn binary_rate_is_monotone_in_flip_probability() {
        let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let trials = 50_000u64;
        let mut previous = -1.0f64;
        for (i, &p) in grid.iter().enumerate() {
            let noise = NoiseModel::new(NoiseKind::BitFlip { flip_prob: p }, 40 + i as u64)
                .unwrap();
            let report = run_ooi_sim(50, Scheme::Binary, &noise, trials).unwrap();
            // Two-sigma statistical slack per comparison.
            let slack = 2.0 * (0.25 / trials as f64).sqrt();
            assert!(
                report.out_of_index_rate >= previous - slack,
                "rate dropped from {previous} to {} at p = {p}",
                report.out_of_index_rate
            );
            previous = report.out_of_index_rate;
        }
    }

    #[test]
    fn zipf_skews_the_histogram() {
        let noise = NoiseModel::new(NoiseKind::GaussianOnBits { sigma: 0.0 }, 21).unwrap();
        let report = run_ooi_sim_with(
            50,
            Scheme::ResBit,
            &noise,
            50_000,
            IndexDistribution::Zipf { exponent: 1.5 },
        )
        .unwrap();
        // Rank 0 dominates under Zipf(1.5).
        let max = *report.histogram.iter().max().unwrap();
        assert_eq!(report.histogram[0], max);
        assert!(report.histogram[0] > report.trials / 2);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let cells = sweep(
            &[10, 50],
            &[Scheme::Binary, Scheme::ResBit],
            &[
                NoiseKind::UniformRandomBits,
                NoiseKind::BitFlip { flip_prob: 0.1 },
            ],
            2_000,
            99,
            IndexDistribution::Uniform,
        )
        .unwrap();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].class_count, 10);
        assert_eq!(cells[0].scheme, Scheme::Binary);
        assert_eq!(cells[7].class_count, 50);
        assert_eq!(cells[7].scheme, Scheme::ResBit);

        let replay = sweep(
            &[10, 50],
            &[Scheme::Binary, Scheme::ResBit],
            &[
                NoiseKind::UniformRandomBits,
                NoiseKind::BitFlip { flip_prob: 0.1 },
            ],
            2_000,
            99,
            IndexDistribution::Uniform,
        )
        .unwrap();
        assert_eq!(cells, replay);
        assert_eq!(reports_to_csv(&cells), reports_to_csv(&replay));

        // Residual cells report a hard zero across the whole sweep.
        for cell in cells.iter().filter(|c| c.scheme == Scheme::ResBit) {
            assert_eq!(cell.out_of_index_count, 0);
        }
    }

    #[test]
    fn csv_shape() {
        let report = run_ooi_sim(4, Scheme::Binary, &uniform_noise(2), 100).unwrap();
        let csv = reports_to_csv(std::slice::from_ref(&report));
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), sweep_csv_header());
        let row = lines.next().unwrap();
        assert!(row.starts_with("binary,4,uniform,0,100,"));
    }
}
