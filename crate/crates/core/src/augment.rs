//! Noise-augmented training sets and noisy testing sets.
//!
//! Three augmentation schemes: a single law replicated several times, a list
//! of laws with a fixed number of copies each, and draws from a finite stable
//! mixture. Image-domain outputs are clipped element-wise to [0,1] after the
//! noise is added; series-domain outputs are never clipped.

use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, Domain};
use crate::stable_dist::{draw_mixture, draw_standard, RngStream, StableMixture, StableParams};
use crate::{Error, Result};

/// Default replication factor for single and mixture noise.
pub const DEFAULT_REPLICATION: usize = 10;
/// Default copies per law for multiple noise.
pub const DEFAULT_COPIES_PER_LAW: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Clean,
    Single {
        params: StableParams,
        replication: usize,
    },
    Multiple {
        laws: Vec<StableParams>,
        copies_per_law: usize,
    },
    Mixture {
        mix: StableMixture,
        replication: usize,
    },
}

/// A training-noise configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub include_clean: bool,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        Self {
            kind: NoiseKind::Clean,
            include_clean: true,
        }
    }

    pub fn single(params: StableParams) -> Self {
        Self {
            kind: NoiseKind::Single {
                params,
                replication: DEFAULT_REPLICATION,
            },
            include_clean: true,
        }
    }

    pub fn multiple(laws: Vec<StableParams>) -> Self {
        Self {
            kind: NoiseKind::Multiple {
                laws,
                copies_per_law: DEFAULT_COPIES_PER_LAW,
            },
            include_clean: true,
        }
    }

    pub fn mixture(mix: StableMixture) -> Self {
        Self {
            kind: NoiseKind::Mixture {
                mix,
                replication: DEFAULT_REPLICATION,
            },
            include_clean: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            NoiseKind::Clean => {
                if !self.include_clean {
                    return Err(Error::Parameter(
                        "clean spec with include_clean=false produces no samples".into(),
                    ));
                }
            }
            NoiseKind::Single { params, replication } => {
                StableParams::new(params.alpha, params.gamma, params.delta)?;
                if *replication < 1 {
                    return Err(Error::Parameter("replication must be >= 1".into()));
                }
            }
            NoiseKind::Multiple { laws, copies_per_law } => {
                if laws.is_empty() {
                    return Err(Error::Parameter("multiple noise needs at least one law".into()));
                }
                for p in laws {
                    StableParams::new(p.alpha, p.gamma, p.delta)?;
                }
                if *copies_per_law < 1 {
                    return Err(Error::Parameter("copies_per_law must be >= 1".into()));
                }
            }
            NoiseKind::Mixture { mix, replication } => {
                StableMixture::new(mix.components().to_vec(), mix.weights().to_vec())?;
                if *replication < 1 {
                    return Err(Error::Parameter("replication must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Number of noisy copies of the base set this spec materializes.
    pub fn noise_copies(&self) -> usize {
        match &self.kind {
            NoiseKind::Clean => 0,
            NoiseKind::Single { replication, .. } => *replication,
            NoiseKind::Multiple { laws, copies_per_law } => laws.len() * copies_per_law,
            NoiseKind::Mixture { replication, .. } => *replication,
        }
    }

    /// Total output sample count for a base set of `n` samples.
    pub fn expected_samples(&self, n: usize) -> usize {
        let clean = match self.kind {
            // the clean kind is the base set itself
            NoiseKind::Clean => 1,
            _ => usize::from(self.include_clean),
        };
        (self.noise_copies() + clean) * n
    }
}

/// A materialized augmented dataset together with the spec that built it.
#[derive(Debug, Clone)]
pub struct AugmentedDataset {
    pub base_name: String,
    pub spec: NoiseSpec,
    pub data: Dataset,
}

/// One noisy copy of the base features: adds an i.i.d. draw to every element,
/// clipping to [0,1] in the image domain.
fn push_noisy_copy(
    out: &mut Vec<f64>,
    base: &Dataset,
    clip: bool,
    mut draw: impl FnMut() -> f64,
) {
    for &x in base.features() {
        let v = x + draw();
        out.push(if clip { v.clamp(0.0, 1.0) } else { v });
    }
}

/// Build the augmented training set for `spec`. The clean block (if any)
/// comes first, then the noise blocks in spec order; each noisy copy uses its
/// own derived stream so copies are independent and the output does not
/// depend on scheduling.
pub fn augment(base: &Dataset, spec: &NoiseSpec, stream: RngStream) -> Result<AugmentedDataset> {
    spec.validate()?;
    let n = base.n_samples();
    let clip = base.domain() == Domain::Image;
    let total = spec.expected_samples(n);
    let mut features = Vec::with_capacity(total * base.n_features());
    let mut labels = Vec::with_capacity(total);

    let include_clean = matches!(spec.kind, NoiseKind::Clean) || spec.include_clean;
    if include_clean {
        features.extend_from_slice(base.features());
        labels.extend_from_slice(base.labels());
    }

    let mut copy_index = 0u64;
    let mut next_copy = |features: &mut Vec<f64>, labels: &mut Vec<usize>, law: CopyLaw| {
        let mut rng = stream.derive("copy", copy_index).rng();
        copy_index += 1;
        match law {
            CopyLaw::Params(p) => {
                let scale = p.scale();
                push_noisy_copy(features, base, clip, || {
                    p.delta + scale * draw_standard(p.alpha, &mut rng)
                });
            }
            CopyLaw::Mixture(m) => {
                push_noisy_copy(features, base, clip, || draw_mixture(m, &mut rng));
            }
        }
        labels.extend_from_slice(base.labels());
    };

    match &spec.kind {
        NoiseKind::Clean => {}
        NoiseKind::Single { params, replication } => {
            for _ in 0..*replication {
                next_copy(&mut features, &mut labels, CopyLaw::Params(*params));
            }
        }
        NoiseKind::Multiple { laws, copies_per_law } => {
            for law in laws {
                for _ in 0..*copies_per_law {
                    next_copy(&mut features, &mut labels, CopyLaw::Params(*law));
                }
            }
        }
        NoiseKind::Mixture { mix, replication } => {
            for _ in 0..*replication {
                next_copy(&mut features, &mut labels, CopyLaw::Mixture(mix));
            }
        }
    }

    let data = Dataset::new(
        format!("{}+aug", base.name()),
        features,
        base.shape().to_vec(),
        labels,
        base.n_classes(),
        base.domain(),
        base.label_map().map(|m| m.to_vec()),
    )?;
    Ok(AugmentedDataset {
        base_name: base.name().to_string(),
        spec: spec.clone(),
        data,
    })
}

enum CopyLaw<'a> {
    Params(StableParams),
    Mixture(&'a StableMixture),
}

/// Noisy testing sets: the clean set first, then one single-replication noisy
/// copy per `(alpha, gamma)` pair, labeled `alpha=<a>,gamma=<g>`.
pub fn make_test_suite(
    base: &Dataset,
    alphas: &[f64],
    gammas: &[f64],
    stream: RngStream,
) -> Result<Vec<(String, Dataset)>> {
    if alphas.is_empty() || gammas.is_empty() {
        return Err(Error::Parameter("test suite needs non-empty alpha and gamma lists".into()));
    }
    let clip = base.domain() == Domain::Image;
    let mut suite = vec![("clean".to_string(), base.clone())];
    let mut index = 0u64;
    for &alpha in alphas {
        for &gamma in gammas {
            let p = StableParams::new(alpha, gamma, 0.0)?;
            let mut rng = stream.derive("test-set", index).rng();
            index += 1;
            let scale = p.scale();
            let mut features = Vec::with_capacity(base.features().len());
            for &x in base.features() {
                let v = x + scale * draw_standard(alpha, &mut rng);
                features.push(if clip { v.clamp(0.0, 1.0) } else { v });
            }
            let label = format!("alpha={alpha},gamma={gamma}");
            let ds = Dataset::new(
                format!("{}+{label}", base.name()),
                features,
                base.shape().to_vec(),
                base.labels().to_vec(),
                base.n_classes(),
                base.domain(),
                base.label_map().map(|m| m.to_vec()),
            )?;
            suite.push((label, ds));
        }
    }
    Ok(suite)
}

/// Fraction of elements that were driven onto the clip boundary: `after` is
/// exactly 0 or 1 while `before` was strictly interior.
pub fn clip_fraction(before: &Dataset, after: &Dataset) -> Result<f64> {
    if before.n_samples() != after.n_samples() || before.shape() != after.shape() {
        return Err(Error::Parameter(format!(
            "shape mismatch: {:?}x{} vs {:?}x{}",
            before.shape(),
            before.n_samples(),
            after.shape(),
            after.n_samples()
        )));
    }
    let total = before.features().len();
    let clipped = before
        .features()
        .iter()
        .zip(after.features())
        .filter(|&(&b, &a)| (a == 0.0 || a == 1.0) && b != 0.0 && b != 1.0)
        .count();
    Ok(clipped as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_gaussians, synth_images};
    use proptest::prelude::*;

    fn base_images(n_per_class: usize) -> Dataset {
        synth_images(n_per_class, 2, &[5, 5, 1], 0.05, RngStream::new(100)).unwrap()
    }

    fn standard_alphas() -> Vec<f64> {
        vec![2.0, 1.9, 1.5, 1.3, 1.0, 0.9]
    }

    #[test]
    fn multiple_noise_sample_count() {
        let base = base_images(50); // N = 100
        let laws: Vec<StableParams> = standard_alphas()
            .iter()
            .map(|&a| StableParams::new(a, 0.1, 0.0).unwrap())
            .collect();
        let spec = NoiseSpec::multiple(laws);
        let out = augment(&base, &spec, RngStream::new(1)).unwrap();
        assert_eq!(out.data.n_samples(), 1300); // (2*6 + 1) * 100
    }

    #[test]
    fn single_noise_sample_count() {
        let base = base_images(50);
        let spec = NoiseSpec::single(StableParams::new(1.0, 0.1, 0.0).unwrap());
        let out = augment(&base, &spec, RngStream::new(2)).unwrap();
        assert_eq!(out.data.n_samples(), 1100); // (10 + 1) * 100
    }

    #[test]
    fn vanishing_noise_reproduces_base() {
        let base = synth_gaussians(10, 2, 4, 2.0, RngStream::new(3)).unwrap();
        let spec = NoiseSpec::single(StableParams::new(1.5, 1e-12, 0.0).unwrap());
        let out = augment(&base, &spec, RngStream::new(4)).unwrap();
        let n = base.n_samples();
        for copy in 1..=10 {
            for i in 0..n {
                let noisy = out.data.row(copy * n + i);
                for (a, b) in noisy.iter().zip(base.row(i)) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn clean_block_is_byte_identical_and_first() {
        let base = base_images(10);
        let spec = NoiseSpec::single(StableParams::new(1.0, 0.2, 0.0).unwrap());
        let out = augment(&base, &spec, RngStream::new(5)).unwrap();
        let n = base.n_samples();
        for i in 0..n {
            assert_eq!(out.data.row(i), base.row(i));
            assert_eq!(out.data.labels()[i], base.labels()[i]);
        }
    }

    #[test]
    fn clean_spec_passthrough() {
        let base = base_images(10);
        let out = augment(&base, &NoiseSpec::clean(), RngStream::new(6)).unwrap();
        assert_eq!(out.data.n_samples(), base.n_samples());
        assert_eq!(out.data.features(), base.features());
    }

    #[test]
    fn labels_replicated_in_lockstep() {
        let base = base_images(7);
        let spec = NoiseSpec::multiple(
            standard_alphas()
                .iter()
                .map(|&a| StableParams::new(a, 0.1, 0.0).unwrap())
                .collect(),
        );
        let out = augment(&base, &spec, RngStream::new(7)).unwrap();
        let n = base.n_samples();
        for block in 0..out.data.n_samples() / n {
            for i in 0..n {
                assert_eq!(out.data.labels()[block * n + i], base.labels()[i]);
            }
        }
    }

    #[test]
    fn augmentation_is_deterministic() {
        let base = base_images(5);
        let spec = NoiseSpec::single(StableParams::new(0.9, 0.1, 0.0).unwrap());
        let a = augment(&base, &spec, RngStream::new(8)).unwrap();
        let b = augment(&base, &spec, RngStream::new(8)).unwrap();
        assert_eq!(a.data.features(), b.data.features());
        let c = augment(&base, &spec, RngStream::new(9)).unwrap();
        assert_ne!(a.data.features(), c.data.features());
    }

    #[test]
    fn copies_use_independent_noise() {
        // gaussian noise on a long series row; correlation between the noise
        // of two copies should vanish
        let base = Dataset::new(
            "flat",
            vec![0.0; 100_000],
            vec![100_000, 1],
            vec![0],
            1,
            Domain::Series,
            None,
        )
        .unwrap();
        let mut spec = NoiseSpec::single(StableParams::new(2.0, 0.5, 0.0).unwrap());
        if let NoiseKind::Single { replication, .. } = &mut spec.kind {
            *replication = 2;
        }
        let out = augment(&base, &spec, RngStream::new(10)).unwrap();
        let a = out.data.row(1);
        let b = out.data.row(2);
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / n;
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum::<f64>() / n;
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() < 0.02, "correlation {rho}");
    }

    #[test]
    fn test_suite_counts_and_clean_entry() {
        let base = base_images(20);
        let alphas = [2.0, 1.9, 1.5, 1.3, 1.0, 0.9, 0.5];
        let suite = make_test_suite(&base, &alphas, &[0.283], RngStream::new(11)).unwrap();
        assert_eq!(suite.len(), 8); // clean + 7
        assert_eq!(suite[0].0, "clean");
        assert_eq!(suite[0].1.features(), base.features());
        assert_eq!(suite[1].0, "alpha=2,gamma=0.283");
        for (_, ds) in &suite {
            assert_eq!(ds.n_samples(), base.n_samples());
        }
    }

    #[test]
    fn image_outputs_respect_clip_bound() {
        let base = Dataset::new(
            "ones",
            vec![1.0; 64],
            vec![8, 8],
            vec![0],
            1,
            Domain::Image,
            None,
        )
        .unwrap();
        let suite = make_test_suite(&base, &[0.5], &[1.0], RngStream::new(12)).unwrap();
        assert!(suite[1].1.features().iter().all(|&x| x <= 1.0));
    }

    #[test]
    fn clip_fraction_cases() {
        let base = base_images(10);
        assert_eq!(clip_fraction(&base, &base).unwrap(), 0.0);

        // series data never clips
        let series = synth_gaussians(10, 2, 8, 2.0, RngStream::new(13)).unwrap();
        let spec = NoiseSpec::single(StableParams::new(0.9, 1.0, 0.0).unwrap());
        let out = augment(&series, &spec, RngStream::new(14)).unwrap();
        let n = series.n_samples();
        let copy1 = series
            .subset(&(0..n).collect::<Vec<_>>(), "c")
            .unwrap();
        let noisy1 = out.data.subset(&(n..2 * n).collect::<Vec<_>>(), "n").unwrap();
        let frac = clip_fraction(&copy1, &noisy1).unwrap();
        assert_eq!(frac, 0.0);

        let small = base_images(2);
        assert!(clip_fraction(&base, &small).is_err());
    }

    #[test]
    fn heavy_noise_clips_about_a_third_of_pixels() {
        // mid-range gamma, alpha below the recommended floor; record the value.
        // A series-domain twin fed the same stream yields the pre-clip values.
        let base = synth_images(20, 10, &[28, 28, 1], 0.1, RngStream::new(15)).unwrap();
        let twin = Dataset::new(
            "twin",
            base.features().to_vec(),
            base.shape().to_vec(),
            base.labels().to_vec(),
            base.n_classes(),
            Domain::Series,
            None,
        )
        .unwrap();
        let suite = make_test_suite(&base, &[0.4], &[0.19], RngStream::new(16)).unwrap();
        let unclipped = make_test_suite(&twin, &[0.4], &[0.19], RngStream::new(16)).unwrap();
        let frac = clip_fraction(&unclipped[1].1, &suite[1].1).unwrap();
        println!("clip fraction at alpha=0.4, gamma=0.19: {frac:.4}");
        assert!(
            (frac - 1.0 / 3.0).abs() < 0.15,
            "clip fraction {frac} not near 1/3"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn size_laws_hold(
            n_per_class in 1usize..25,
            scheme in 0u8..4,
            replication in 1usize..12,
            copies in 1usize..4,
            n_laws in 1usize..7,
            include_clean in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let base = synth_gaussians(n_per_class, 2, 3, 2.0, RngStream::new(seed)).unwrap();
            let laws: Vec<StableParams> = (0..n_laws)
                .map(|i| StableParams::new(0.5 + 0.25 * i as f64, 0.1, 0.0).unwrap())
                .collect();
            let spec = match scheme {
                0 => NoiseSpec::clean(),
                1 => NoiseSpec {
                    kind: NoiseKind::Single { params: laws[0], replication },
                    include_clean,
                },
                2 => NoiseSpec {
                    kind: NoiseKind::Multiple { laws: laws.clone(), copies_per_law: copies },
                    include_clean,
                },
                _ => NoiseSpec {
                    kind: NoiseKind::Mixture {
                        mix: StableMixture::new(
                            laws.clone(),
                            vec![1.0 / n_laws as f64; n_laws],
                        ).unwrap(),
                        replication,
                    },
                    include_clean,
                },
            };
            let out = augment(&base, &spec, RngStream::new(seed ^ 1)).unwrap();
            prop_assert_eq!(out.data.n_samples(), spec.expected_samples(base.n_samples()));
            // label preservation per block
            let n = base.n_samples();
            for (i, &l) in out.data.labels().iter().enumerate() {
                prop_assert_eq!(l, base.labels()[i % n]);
            }
        }
    }
}
