//! Radar traces, labeled ensembles, time gating and the synthetic benchmark.

mod csv_io;
mod synth;

pub use csv_io::{
    fmt_value, load_ensemble, read_ensemble, save_ensemble, save_matrix, write_ensemble,
    write_matrix,
};
pub use synth::{
    class_labels, synth_trace, Benchmark, BenchmarkSpec, ClassPattern, Echo, Material, TargetKind,
    TARGETS, VACANT,
};

use ndarray::Array2;

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Default sample interval: one sample per 1/(8 GHz).
pub const DEFAULT_DT: f64 = 0.125e-9;

/// Default trace length: 8 GHz swept in 20 MHz steps, endpoints included.
pub const DEFAULT_SAMPLES: usize = 401;

/// Ricker wavelet with peak frequency `fc` evaluated at time `t`.
///
/// `(1 - 2 pi^2 fc^2 t^2) exp(-pi^2 fc^2 t^2)`, peak value 1 at `t = 0`.
pub fn ricker_wavelet<T: Scalar>(fc: T, t: T) -> T {
    let pi = T::c(std::f64::consts::PI);
    let a = pi * pi * fc * fc * t * t;
    (T::one() - (a + a)) * (-a).exp()
}

/// One T1R1 time trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    pub id: String,
    pub label: String,
    samples: Vec<T>,
    dt: T,
}

impl<T: Scalar> Signal<T> {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        samples: Vec<T>,
        dt: T,
    ) -> Result<Self> {
        let id = id.into();
        if samples.len() < 2 {
            return domain(format!("signal {id}: needs at least 2 samples"));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return domain(format!("signal {id}: dt must be positive and finite"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return domain(format!("signal {id}: sample {i} is not finite"));
        }
        Ok(Self {
            id,
            label: label.into(),
            samples,
            dt,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> T {
        T::from_count(i) * self.dt
    }

    /// Same metadata, new samples. Samples must be finite and of equal length.
    pub fn with_samples(&self, samples: Vec<T>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return domain(format!(
                "signal {}: replacement has {} samples, expected {}",
                self.id,
                samples.len(),
                self.samples.len()
            ));
        }
        Self::new(self.id.clone(), self.label.clone(), samples, self.dt)
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|&v| v * c).collect())
    }
}

/// Rectangular time gate: keeps samples whose time lies in `[t_start, t_end)`.
pub fn time_gate<T: Scalar>(s: &Signal<T>, t_start: T, t_end: T) -> Result<Signal<T>> {
    if !(t_start >= T::zero()) || !(t_start < t_end) {
        return domain(format!(
            "time gate [{t_start}, {t_end}) is empty or starts before 0"
        ));
    }
    let gated = s
        .samples
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let t = s.time(i);
            if t >= t_start && t < t_end {
                v
            } else {
                T::zero()
            }
        })
        .collect();
    s.with_samples(gated)
}

/// Ordered set of `d` signals sharing length and sample interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    signals: Vec<Signal<T>>,
}

impl<T: Scalar> Ensemble<T> {
    pub fn new(signals: Vec<Signal<T>>) -> Result<Self> {
        let Some(first) = signals.first() else {
            return domain("ensemble needs at least one signal");
        };
        let (n, dt) = (first.len(), first.dt);
        for s in &signals[1..] {
            if s.len() != n {
                return domain(format!(
                    "signal {} has {} samples, ensemble has {n}",
                    s.id,
                    s.len()
                ));
            }
            if s.dt != dt {
                return domain(format!(
                    "signal {} has dt {}, ensemble has {dt}",
                    s.id, s.dt
                ));
            }
        }
        Ok(Self { signals })
    }

    pub fn signals(&self) -> &[Signal<T>] {
        &self.signals
    }

    pub fn into_signals(self) -> Vec<Signal<T>> {
        self.signals
    }

    /// Number of signals.
    pub fn d(&self) -> usize {
        self.signals.len()
    }

    /// Common sample count.
    pub fn n(&self) -> usize {
        self.signals[0].len()
    }

    pub fn dt(&self) -> T {
        self.signals[0].dt
    }

    pub fn labels(&self) -> Vec<String> {
        self.signals.iter().map(|s| s.label.clone()).collect()
    }

    /// Signals stacked as rows: a `d x n` matrix.
    pub fn matrix(&self) -> Array2<T> {
        let (d, n) = (self.d(), self.n());
        Array2::from_shape_fn((d, n), |(i, j)| self.signals[i].samples[j])
    }

    /// Replaces the samples of every signal by the rows of `values`, keeping ids and labels.
    pub fn with_matrix(&self, values: &Array2<T>) -> Result<Self> {
        if values.dim() != (self.d(), self.n()) {
            return domain(format!(
                "matrix is {:?}, ensemble is {}x{}",
                values.dim(),
                self.d(),
                self.n()
            ));
        }
        let signals = self
            .signals
            .iter()
            .zip(values.rows())
            .map(|(s, row)| s.with_samples(row.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { signals })
    }

    /// Appends a signal, checking it conforms.
    pub fn with_signal(&self, s: Signal<T>) -> Result<Self> {
        let mut signals = self.signals.clone();
        signals.push(s);
        Self::new(signals)
    }
}
