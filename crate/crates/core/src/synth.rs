//! Synthetic spectrally sparse signals, observation masks and outlier injection.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HankelGeometry;
use crate::mask::ObservationMask;
use crate::{floor_count, C64};

const MAX_FREQUENCY_DRAWS: usize = 10_000;

/// `x_t = Σ_j d_j · exp(2πi f_j t)` for `t = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<C64>,
    pub n: usize,
}

/// Wrap-around distance on the unit circle `[0, 1)`.
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

impl SpectralModel {
    /// Draws `r` frequencies uniformly from `[0, 1)`, redrawing until every pair is at
    /// least `sep_min` apart, with amplitudes of uniform magnitude in `magnitudes` and
    /// uniform phase.
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        r: usize,
        sep_min: f64,
        magnitudes: (f64, f64),
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 || r == 0 {
            return Err(Error::InvalidParameter("n and r must be positive".into()));
        }
        if r as f64 * sep_min >= 1.0 {
            return Err(Error::InfeasibleSeparation(format!(
                "{r} frequencies cannot be {sep_min} apart on the unit circle"
            )));
        }
        let (lo, hi) = magnitudes;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidParameter(format!(
                "amplitude magnitudes must satisfy 0 < lo <= hi, got {magnitudes:?}"
            )));
        }
        let mut frequencies = None;
        for _ in 0..MAX_FREQUENCY_DRAWS {
            let draw: Vec<f64> = (0..r).map(|_| rng.random_range(0.0..1.0)).collect();
            let separated = draw.iter().enumerate().all(|(i, &a)| {
                draw[i + 1..]
                    .iter()
                    .all(|&b| wrapped_distance(a, b) >= sep_min)
            });
            if separated {
                frequencies = Some(draw);
                break;
            }
        }
        let frequencies = frequencies.ok_or_else(|| {
            Error::InfeasibleSeparation(format!(
                "no {r} frequencies {sep_min} apart after {MAX_FREQUENCY_DRAWS} draws"
            ))
        })?;
        let amplitudes = (0..r)
            .map(|_| {
                let mag = if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                };
                C64::from_polar(mag, rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        Ok(Self {
            frequencies,
            amplitudes,
            n,
        })
    }

    pub fn rank(&self) -> usize {
        self.frequencies.len()
    }

    /// Samples the model, unweighted domain.
    pub fn signal(&self) -> Vec<C64> {
        (1..=self.n)
            .map(|t| {
                self.frequencies
                    .iter()
                    .zip(&self.amplitudes)
                    .map(|(f, d)| d * C64::from_polar(1.0, 2.0 * PI * f * t as f64))
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Exactly `m` distinct indices.
    Uniform { m: usize },
    /// Each index independently with probability `p`.
    Bernoulli { p: f64 },
}

pub fn sample_mask<R: Rng + ?Sized>(
    n: usize,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Result<ObservationMask> {
    match scheme {
        SamplingScheme::Uniform { m } => {
            if m == 0 || m > n {
                return Err(Error::InvalidParameter(format!(
                    "cannot observe {m} of {n} entries"
                )));
            }
            ObservationMask::new(index::sample(rng, n, m).into_vec(), n)
        }
        SamplingScheme::Bernoulli { p } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "probability {p} outside (0, 1]"
                )));
            }
            loop {
                let picked: Vec<usize> = (0..n).filter(|_| rng.random_bool(p)).collect();
                if !picked.is_empty() {
                    return ObservationMask::new(picked, n);
                }
            }
        }
    }
}

/// Corrupts `⌊α·|Ω|⌋` observed entries chosen uniformly. Each outlier has real part
/// uniform on `[-scale·E|Re z|, scale·E|Re z|]` and imaginary part likewise, with the
/// means taken over all entries of `z_true`. Returns `(Π_Ω(z + s), s)`.
pub fn inject_outliers<R: Rng + ?Sized>(
    z_true: &[C64],
    mask: &ObservationMask,
    alpha: f64,
    scale: f64,
    rng: &mut R,
) -> Result<(Vec<C64>, Vec<C64>)> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} outside [0, 1)"
        )));
    }
    let n = z_true.len() as f64;
    let mean_re = z_true.iter().map(|v| v.re.abs()).sum::<f64>() / n;
    let mean_im = z_true.iter().map(|v| v.im.abs()).sum::<f64>() / n;
    let (half_re, half_im) = (scale * mean_re, scale * mean_im);

    let count = floor_count(alpha * mask.len() as f64);
    let mut s = vec![C64::new(0.0, 0.0); z_true.len()];
    for pick in index::sample(rng, mask.len(), count).into_iter() {
        let i = mask.indices()[pick];
        let re = if half_re > 0.0 {
            rng.random_range(-half_re..=half_re)
        } else {
            0.0
        };
        let im = if half_im > 0.0 {
            rng.random_range(-half_im..=half_im)
        } else {
            0.0
        };
        s[i] = C64::new(re, im);
    }
    let mut f = vec![C64::new(0.0, 0.0); z_true.len()];
    for &i in mask.indices() {
        f[i] = z_true[i] + s[i];
    }
    Ok((f, s))
}

/// Parameters of a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceSpec {
    pub n: usize,
    pub rank: usize,
    /// Observed entries.
    pub samples: usize,
    pub alpha: f64,
    pub outlier_scale: f64,
    /// Minimum wrap-around separation in units of `1/n`.
    pub separation_bins: f64,
    pub magnitudes: (f64, f64),
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            n: 125,
            rank: 3,
            samples: 50,
            alpha: 0.1,
            outlier_scale: 10.0,
            separation_bins: 1.5,
            magnitudes: (0.5, 1.5),
        }
    }
}

/// Ground truth and corrupted partial observations, all in the reweighted domain.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub z_true: Vec<C64>,
    pub f_obs: Vec<C64>,
    pub mask: ObservationMask,
    pub s_true: Vec<C64>,
    pub model: SpectralModel,
    pub seed: u64,
}

impl ProblemInstance {
    /// Signal, then mask, then outliers, from one ChaCha stream seeded by `seed`.
    pub fn generate(spec: &InstanceSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        HankelGeometry::new(spec.n)?;
        let model = SpectralModel::random(
            spec.n,
            spec.rank,
            spec.separation_bins / spec.n as f64,
            spec.magnitudes,
            &mut rng,
        )?;
        Self::complete(spec, model, &mut rng, seed)
    }

    /// Uses the given spectral model and draws only the mask and outliers from `seed`.
    pub fn with_model(spec: &InstanceSpec, model: SpectralModel, seed: u64) -> Result<Self> {
        if model.n != spec.n {
            return Err(Error::ShapeMismatch(format!(
                "model has length {}, spec asks for {}",
                model.n, spec.n
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::complete(spec, model, &mut rng, seed)
    }

    fn complete(
        spec: &InstanceSpec,
        model: SpectralModel,
        rng: &mut ChaCha8Rng,
        seed: u64,
    ) -> Result<Self> {
        let geom = HankelGeometry::new(spec.n)?;
        let z_true = geom.reweight(&model.signal());
        let mask = sample_mask(spec.n, SamplingScheme::Uniform { m: spec.samples }, rng)?;
        let (f_obs, s_true) = inject_outliers(&z_true, &mask, spec.alpha, spec.outlier_scale, rng)?;
        Ok(Self {
            z_true,
            f_obs,
            mask,
            s_true,
            model,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.z_true.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    #[test]
    fn constant_signal() {
        let model = SpectralModel {
            frequencies: vec![0.0],
            amplitudes: vec![C64::new(1.0, 0.0)],
            n: 3,
        };
        let x = model.signal();
        for v in &x {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let s = oracle::singular_values(&oracle::hankel_dense(2, 2, &x));
        assert!((s[0] - 2.0).abs() < 1e-12 && s[1] < 1e-12);
    }

    #[test]
    fn quarter_frequency_rank_one() {
        let model = SpectralModel {
            frequencies: vec![0.25],
            amplitudes: vec![C64::new(1.0, 0.0)],
            n: 5,
        };
        let s = oracle::singular_values(&oracle::hankel_dense(3, 3, &model.signal()));
        assert!(s[1] / s[0] <= 1e-12);
    }

    #[test]
    fn generated_signals_have_exact_rank() {
        for (n, r, seed) in [(125, 3, 1), (64, 5, 2), (256, 10, 3), (31, 1, 4)] {
            let mut rng = oracle::rng(seed);
            let model = SpectralModel::random(n, r, 1.5 / n as f64, (0.5, 1.5), &mut rng).unwrap();
            for i in 0..r {
                for j in i + 1..r {
                    assert!(
                        wrapped_distance(model.frequencies[i], model.frequencies[j])
                            >= 1.5 / n as f64
                    );
                }
            }
            assert!(model
                .amplitudes
                .iter()
                .all(|a| (0.5..=1.5).contains(&a.norm())));
            let g = HankelGeometry::new(n).unwrap();
            let s = oracle::singular_values(&oracle::hankel_dense(g.n1(), g.n2(), &model.signal()));
            assert!(s[r - 1] > 0.0);
            assert!(s[r] / s[r - 1] <= 1e-8, "n={n} r={r}: {}", s[r] / s[r - 1]);
        }
    }

    #[test]
    fn separation_errors() {
        let mut rng = oracle::rng(0);
        assert!(matches!(
            SpectralModel::random(100, 10, 0.1, (0.5, 1.5), &mut rng),
            Err(Error::InfeasibleSeparation(_))
        ));
        // feasible in principle but practically never drawn
        assert!(matches!(
            SpectralModel::random(100, 9, 0.109, (0.5, 1.5), &mut rng),
            Err(Error::InfeasibleSeparation(_))
        ));
        assert!(wrapped_distance(0.95, 0.05) - 0.1 < 1e-15);
    }

    #[test]
    fn mask_schemes() {
        let mut rng = oracle::rng(1);
        let full = sample_mask(10, SamplingScheme::Uniform { m: 10 }, &mut rng).unwrap();
        assert_eq!(full.indices(), (0..10).collect::<Vec<_>>().as_slice());
        let one = sample_mask(10, SamplingScheme::Uniform { m: 1 }, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert!(sample_mask(10, SamplingScheme::Uniform { m: 11 }, &mut rng).is_err());
        assert!(sample_mask(10, SamplingScheme::Uniform { m: 0 }, &mut rng).is_err());
        let b = sample_mask(1000, SamplingScheme::Bernoulli { p: 0.3 }, &mut rng).unwrap();
        assert!((b.len() as f64 - 300.0).abs() < 5.0 * (1000.0f64 * 0.21).sqrt());
    }

    #[test]
    fn uniform_inclusion_frequencies() {
        let (n, m, draws) = (125, 50, 10_000);
        let mut rng = oracle::rng(7);
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            for &i in sample_mask(n, SamplingScheme::Uniform { m }, &mut rng)
                .unwrap()
                .indices()
            {
                counts[i] += 1;
            }
        }
        let p = m as f64 / n as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 5.0 * sd);
        }
    }

    #[test]
    fn outlier_counts_and_support() {
        let spec = InstanceSpec::default();
        let inst = ProblemInstance::generate(&spec, 42).unwrap();
        let support: Vec<usize> = (0..inst.n())
            .filter(|&i| inst.s_true[i].norm() > 0.0)
            .collect();
        assert_eq!(support.len(), 5);
        assert!(support.iter().all(|&i| inst.mask.contains(i)));
        for i in 0..inst.n() {
            let expect = if inst.mask.contains(i) {
                inst.z_true[i] + inst.s_true[i]
            } else {
                C64::new(0.0, 0.0)
            };
            assert_eq!(inst.f_obs[i], expect);
        }

        let mut rng = oracle::rng(3);
        let (f, s) = inject_outliers(&inst.z_true, &inst.mask, 0.0, 10.0, &mut rng).unwrap();
        assert!(s.iter().all(|v| v.norm() == 0.0));
        assert_eq!(f, inst.mask.project(&inst.z_true));

        let (_, s) = inject_outliers(&inst.z_true, &inst.mask, 0.999, 10.0, &mut rng).unwrap();
        assert_eq!(s.iter().filter(|v| v.norm() > 0.0).count(), 49);
        let all = ObservationMask::new(vec![0, 1, 2, 3], inst.n()).unwrap();
        let (_, s) = inject_outliers(&inst.z_true, &all, 0.75, 10.0, &mut rng).unwrap();
        assert_eq!(s.iter().filter(|v| v.norm() > 0.0).count(), 3);
    }

    #[test]
    fn outlier_magnitude_moment() {
        let n = 100_000;
        let z: Vec<C64> = (0..n)
            .map(|i| C64::new(if i % 2 == 0 { 1.0 } else { -3.0 }, 0.5))
            .collect();
        let mask = ObservationMask::full(n);
        let mut rng = oracle::rng(11);
        let (_, s) = inject_outliers(&z, &mask, 0.999_999, 10.0, &mut rng).unwrap();
        let picked: Vec<&C64> = s.iter().filter(|v| v.norm() > 0.0).collect();
        let mean_re = picked.iter().map(|v| v.re.abs()).sum::<f64>() / picked.len() as f64;
        let mean_im = picked.iter().map(|v| v.im.abs()).sum::<f64>() / picked.len() as f64;
        // |U[-a, a]| has mean a/2
        assert!((mean_re / (10.0 * 2.0 / 2.0) - 1.0).abs() < 0.02);
        assert!((mean_im / (10.0 * 0.5 / 2.0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = InstanceSpec {
            n: 99,
            rank: 4,
            samples: 40,
            ..Default::default()
        };
        let a = ProblemInstance::generate(&spec, 5).unwrap();
        let b = ProblemInstance::generate(&spec, 5).unwrap();
        assert_eq!(a.z_true, b.z_true);
        assert_eq!(a.f_obs, b.f_obs);
        assert_eq!(a.mask, b.mask);
        let c = ProblemInstance::generate(&spec, 6).unwrap();
        assert_ne!(a.z_true, c.z_true);
    }
}
