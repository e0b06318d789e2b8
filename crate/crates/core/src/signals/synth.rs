//! Synthetic stand-in for the measured T1R1 buried-object ensemble.
//!
//! Every trace is a ground-bounce wavelet, plus a class template, plus white
//! Gaussian noise. A class template mixes a shared soil-layering pattern with
//! the class's own echo pattern; the mixing weight is solved by bisection so
//! the mean pairwise Pearson correlation between class templates equals the
//! requested similarity (no shared part at all when it is 0).
//!
//! Traces of the same class differ by noise and by a per-trace gain on the
//! class's own echoes. The ground bounce sits at a fixed delay and amplitude
//! unless the optional surface jitters are switched on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ricker_wavelet, Ensemble, Signal, DEFAULT_DT, DEFAULT_SAMPLES};
use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::stats::pearson;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const GROUND_BOUNCE_DELAY: f64 = 2.0e-9;
const TEMPLATE_GAIN: f64 = 2.0;
const MIN_DEPTH_M: f64 = 0.10;
const MAX_DEPTH_M: f64 = 2.40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Material {
    Plastic,
    Aluminum,
    Rock,
    Nylon,
}

impl Material {
    /// Signed reflection strength of the top face.
    fn reflectivity(self) -> f64 {
        match self {
            Material::Plastic => 0.5,
            Material::Aluminum => -1.0,
            Material::Rock => 0.35,
            Material::Nylon => 0.45,
        }
    }

    /// Metal reflects everything at the top face.
    fn penetrable(self) -> bool {
        !matches!(self, Material::Aluminum)
    }
}

/// A buried target from the reference taxonomy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetKind {
    pub label: &'static str,
    pub material: Material,
    /// Vertical extent in centimetres.
    pub height_cm: f64,
}

/// The eleven buried targets, in reference order.
pub const TARGETS: [TargetKind; 11] = [
    TargetKind {
        label: "mine_a",
        material: Material::Plastic,
        height_cm: 9.2,
    },
    TargetKind {
        label: "mine_b",
        material: Material::Plastic,
        height_cm: 12.0,
    },
    TargetKind {
        label: "mine_c",
        material: Material::Plastic,
        height_cm: 11.3,
    },
    TargetKind {
        label: "mine_d",
        material: Material::Plastic,
        height_cm: 4.5,
    },
    TargetKind {
        label: "mine_e",
        material: Material::Plastic,
        height_cm: 2.0,
    },
    TargetKind {
        label: "mine_f",
        material: Material::Plastic,
        height_cm: 4.0,
    },
    TargetKind {
        label: "mine_simulant",
        material: Material::Plastic,
        height_cm: 3.8,
    },
    TargetKind {
        label: "sphere",
        material: Material::Aluminum,
        height_cm: 5.1,
    },
    TargetKind {
        label: "rock",
        material: Material::Rock,
        height_cm: 7.5,
    },
    TargetKind {
        label: "crushed_can",
        material: Material::Aluminum,
        height_cm: 3.0,
    },
    TargetKind {
        label: "cylinder",
        material: Material::Nylon,
        height_cm: 7.6,
    },
];

/// Label of the no-target class.
pub const VACANT: &str = "vacant";

/// Class labels for an `n`-class benchmark.
///
/// Up to eleven classes take the targets in order; the twelfth is
/// [`VACANT`]; any further classes are extra clutter objects.
pub fn class_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|k| match k {
            k if k < TARGETS.len() => TARGETS[k].label.to_string(),
            k if k == TARGETS.len() => VACANT.to_string(),
            k => format!("clutter_{k}"),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub n_classes: usize,
    pub traces_per_class: usize,
    /// Target mean pairwise correlation between class templates, in `[0, 1)`.
    pub similarity: f64,
    pub noise_sigma: f64,
    /// Relative per-trace amplitude variation of the class's own echoes.
    pub instance_jitter: f64,
    pub ground_bounce_amplitude: f64,
    /// Relative per-trace amplitude variation of the ground bounce.
    pub ground_bounce_jitter: f64,
    /// Per-trace ground-bounce delay variation in seconds (antenna height).
    pub ground_bounce_delay_jitter: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub dt: f64,
    /// Ricker peak frequency in Hz.
    pub center_frequency: f64,
    pub soil_permittivity: f64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            n_classes: 12,
            traces_per_class: 2,
            similarity: 0.95,
            noise_sigma: 0.005,
            instance_jitter: 0.2,
            ground_bounce_amplitude: 5.0,
            ground_bounce_jitter: 0.0,
            ground_bounce_delay_jitter: 0.0,
            seed: 2020,
            n_samples: DEFAULT_SAMPLES,
            dt: DEFAULT_DT,
            center_frequency: 1.0e9,
            soil_permittivity: 4.0,
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return domain("n_classes must be at least 2");
        }
        if self.traces_per_class < 2 {
            return domain("traces_per_class must be at least 2");
        }
        if !(0.0..1.0).contains(&self.similarity) {
            return domain("similarity must lie in [0, 1)");
        }
        if !(self.noise_sigma >= 0.0) || !(self.ground_bounce_amplitude >= 0.0) {
            return domain("noise_sigma and ground_bounce_amplitude must be >= 0");
        }
        if !(0.0..1.0).contains(&self.instance_jitter)
            || !(0.0..1.0).contains(&self.ground_bounce_jitter)
        {
            return domain("instance_jitter and ground_bounce_jitter must lie in [0, 1)");
        }
        if !(self.ground_bounce_delay_jitter >= 0.0)
            || self.ground_bounce_delay_jitter >= GROUND_BOUNCE_DELAY
        {
            return domain("ground_bounce_delay_jitter must lie in [0, 2 ns)");
        }
        if self.n_samples < 2 || !(self.dt > 0.0) || !(self.center_frequency > 0.0) {
            return domain("n_samples >= 2, dt > 0 and center_frequency > 0 required");
        }
        if !(self.soil_permittivity >= 1.0) {
            return domain("soil_permittivity must be >= 1");
        }
        Ok(())
    }

    /// Propagation speed in the soil.
    pub fn soil_speed(&self) -> f64 {
        SPEED_OF_LIGHT / self.soil_permittivity.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Echo {
    pub delay: f64,
    pub amplitude: f64,
}

/// Echoes produced by one class, drawn once per class from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPattern {
    pub label: String,
    pub echoes: Vec<Echo>,
}

fn rng_for(seed: u64, kind: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) ^ (a << 28) ^ b);
    rng
}

const STREAM_CLASS: u64 = 1;
const STREAM_SHARED: u64 = 2;
const STREAM_NOISE: u64 = 3;

fn class_pattern(spec: &BenchmarkSpec, class: usize, label: String) -> ClassPattern {
    let mut rng = rng_for(spec.seed, STREAM_CLASS, class as u64, 0);
    if label == VACANT {
        return ClassPattern {
            label,
            echoes: Vec::new(),
        };
    }
    let kind = TARGETS.get(class).copied().unwrap_or_else(|| TargetKind {
        label: "clutter",
        material: Material::Rock,
        height_cm: rng.random_range(2.0..15.0),
    });
    let v = spec.soil_speed();
    let depth = rng.random_range(MIN_DEPTH_M..MAX_DEPTH_M);
    let top = GROUND_BOUNCE_DELAY + 2.0 * depth / v;
    let amplitude = kind.material.reflectivity() * rng.random_range(0.8..1.2);
    let mut echoes = vec![Echo {
        delay: top,
        amplitude,
    }];
    if kind.material.penetrable() {
        echoes.push(Echo {
            delay: top + 2.0 * kind.height_cm * 1e-2 / v,
            amplitude: -0.7 * amplitude,
        });
    }
    ClassPattern { label, echoes }
}

fn render(spec: &BenchmarkSpec, echoes: &[Echo]) -> Vec<f64> {
    (0..spec.n_samples)
        .map(|i| {
            let t = i as f64 * spec.dt;
            echoes
                .iter()
                .map(|e| e.amplitude * ricker_wavelet(spec.center_frequency, t - e.delay))
                .sum()
        })
        .collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.into_iter().map(|x| x / norm).collect()
    } else {
        v
    }
}

fn mix(base: &[f64], own: &[f64], w: f64) -> Vec<f64> {
    base.iter()
        .zip(own)
        .map(|(b, s)| TEMPLATE_GAIN * (w * b + (1.0 - w) * s))
        .collect()
}

/// Mean off-diagonal Pearson correlation over templates with nonzero variance.
pub(crate) fn mean_pairwise_correlation(templates: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..templates.len() {
        for j in i + 1..templates.len() {
            if let Some(r) = pearson(&templates[i], &templates[j]) {
                sum += r;
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// A fully specified benchmark: class patterns and mixed templates.
#[derive(Debug, Clone)]
pub struct Benchmark {
    spec: BenchmarkSpec,
    patterns: Vec<ClassPattern>,
    templates: Vec<Vec<f64>>,
    /// Shared part of every template; `template - shared` is the class's own part.
    shared: Vec<f64>,
    mixing_weight: f64,
}

impl Benchmark {
    pub fn new(spec: BenchmarkSpec) -> Result<Self> {
        spec.validate()?;
        let patterns: Vec<_> = class_labels(spec.n_classes)
            .into_iter()
            .enumerate()
            .map(|(k, label)| class_pattern(&spec, k, label))
            .collect();

        let mut rng = rng_for(spec.seed, STREAM_SHARED, 0, 0);
        let window = spec.n_samples as f64 * spec.dt;
        let shared: Vec<Echo> = (0..3)
            .map(|_| Echo {
                delay: rng.random_range(0.08 * window..0.9 * window),
                amplitude: rng.random_range(0.3..1.0)
                    * if rng.random::<bool>() { 1.0 } else { -1.0 },
            })
            .collect();
        let base = unit(render(&spec, &shared));
        let own: Vec<Vec<f64>> = patterns
            .iter()
            .map(|p| unit(render(&spec, &p.echoes)))
            .collect();

        let build = |w: f64| -> Vec<Vec<f64>> { own.iter().map(|s| mix(&base, s, w)).collect() };
        let target = spec.similarity;
        let mixing_weight = if target <= 0.0 || mean_pairwise_correlation(&build(0.0)) >= target {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if mean_pairwise_correlation(&build(mid)) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let templates = build(mixing_weight);
        let shared = mix(&base, &vec![0.0; base.len()], mixing_weight);
        Ok(Self {
            spec,
            patterns,
            templates,
            shared,
            mixing_weight,
        })
    }

    pub fn spec(&self) -> &BenchmarkSpec {
        &self.spec
    }

    pub fn labels(&self) -> Vec<String> {
        self.patterns.iter().map(|p| p.label.clone()).collect()
    }

    pub fn patterns(&self) -> &[ClassPattern] {
        &self.patterns
    }

    /// Noise-free class template without the ground bounce.
    pub fn template(&self, class: usize) -> &[f64] {
        &self.templates[class]
    }

    /// Weight of the shared component in every template.
    pub fn mixing_weight(&self) -> f64 {
        self.mixing_weight
    }

    /// Mean off-diagonal Pearson correlation of the class templates.
    pub fn template_correlation(&self) -> f64 {
        mean_pairwise_correlation(&self.templates)
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.patterns.iter().position(|p| p.label == label)
    }

    /// Trace `instance` of class `class`. A pure function of the spec and indices.
    pub fn trace<T: Scalar>(&self, class: usize, instance: usize) -> Result<Signal<T>> {
        if class >= self.spec.n_classes {
            return domain(format!(
                "class index {class} out of range (n_classes = {})",
                self.spec.n_classes
            ));
        }
        let mut rng = rng_for(self.spec.seed, STREAM_NOISE, class as u64, instance as u64);
        let gain = 1.0 + self.spec.instance_jitter * rng.random_range(-1.0..=1.0);
        let surface = Echo {
            delay: GROUND_BOUNCE_DELAY
                + self.spec.ground_bounce_delay_jitter * rng.random_range(-1.0..=1.0),
            amplitude: self.spec.ground_bounce_amplitude
                * (1.0 + self.spec.ground_bounce_jitter * rng.random_range(-1.0..=1.0)),
        };
        let ground_bounce = render(&self.spec, &[surface]);
        let noise = (self.spec.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, self.spec.noise_sigma).expect("sigma validated"));
        let samples = self.templates[class]
            .iter()
            .zip(&self.shared)
            .zip(&ground_bounce)
            .map(|((&t, &c), &g)| {
                let n = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                T::c(g + c + gain * (t - c) + n)
            })
            .collect();
        let label = &self.patterns[class].label;
        Signal::new(
            format!("{label}_{instance}"),
            label.clone(),
            samples,
            T::c(self.spec.dt),
        )
    }

    /// One trace per class, all with the given instance index.
    pub fn ensemble<T: Scalar>(&self, instance: usize) -> Result<Ensemble<T>> {
        Ensemble::new(
            (0..self.spec.n_classes)
                .map(|k| self.trace(k, instance))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Reference ensemble (instance 0) and held-out ensemble (remaining instances, class-major).
    pub fn split<T: Scalar>(&self) -> Result<(Ensemble<T>, Ensemble<T>)> {
        let train = self.ensemble(0)?;
        let mut test = Vec::new();
        for k in 0..self.spec.n_classes {
            for i in 1..self.spec.traces_per_class {
                test.push(self.trace(k, i)?);
            }
        }
        Ok((train, Ensemble::new(test)?))
    }
}

/// Single trace from a fresh benchmark. Prefer [`Benchmark::trace`] in loops.
pub fn synth_trace<T: Scalar>(
    spec: &BenchmarkSpec,
    class_index: usize,
    instance_index: usize,
) -> Result<Signal<T>> {
    Benchmark::new(spec.clone())?.trace(class_index, instance_index)
}
