//! Windowed algebraic estimate of the lumped term `F` in `ẏ = F + α·u`.
//!
//! Over a window of length `τ` with local time `σ ∈ [0, τ]` (σ = 0 at the
//! oldest sample),
//!
//! ```text
//! F̂ = -(6/τ³) ∫₀^τ [ (τ - 2σ)·y(σ) + α·σ·(τ - σ)·u(σ) ] dσ
//! ```
//!
//! The integral is evaluated with a fixed quadrature over the uniform
//! samples. The `y` kernel integrates to zero, so constant offsets in `y`
//! never leak into `F̂`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Composite trapezoid. Under-weights the `σ(τ - σ)` kernel by a
    /// relative `(h/τ)²`, a steady bias of `+α·u·(h/τ)²`, and over-reads
    /// the slope of a ramp by a relative `2·(h/τ)²`.
    Trapezoid,
    /// Composite Simpson; exact for the kernel against affine signals.
    /// Needs an odd sample count.
    #[default]
    Simpson,
}

impl Quadrature {
    pub fn as_str(self) -> &'static str {
        match self {
            Quadrature::Trapezoid => "trapezoid",
            Quadrature::Simpson => "simpson",
        }
    }

    /// Quadrature weights for `n` uniform samples spaced `h` apart.
    pub fn weights(self, n: usize, h: f64) -> Vec<f64> {
        match self {
            Quadrature::Trapezoid => (0..n)
                .map(|j| if j == 0 || j == n - 1 { h / 2.0 } else { h })
                .collect(),
            Quadrature::Simpson => (0..n)
                .map(|j| {
                    let c = if j == 0 || j == n - 1 {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 3.0
                })
                .collect(),
        }
    }
}

impl std::str::FromStr for Quadrature {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "trapezoid" => Ok(Quadrature::Trapezoid),
            "simpson" => Ok(Quadrature::Simpson),
            other => Err(format!("expected `trapezoid` or `simpson`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Input gain of the ultra-local model.
    pub alpha: f64,
    pub window_samples: usize,
    /// Sample spacing `h`, hours.
    pub sample_interval: f64,
    pub quadrature: Quadrature,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            window_samples: 5,
            sample_interval: 1.0 / 60.0,
            quadrature: Quadrature::Simpson,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha == 0.0 {
            return Err(Error::invalid(
                "estimator alpha",
                format!("{} (must be finite, nonzero)", self.alpha),
            ));
        }
        if self.window_samples < 3 {
            return Err(Error::invalid(
                "estimator window",
                format!("{} samples (need at least 3)", self.window_samples),
            ));
        }
        if self.quadrature == Quadrature::Simpson && self.window_samples.is_multiple_of(2) {
            return Err(Error::invalid(
                "estimator window",
                format!(
                    "Simpson quadrature needs an odd sample count, got {}",
                    self.window_samples
                ),
            ));
        }
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return Err(Error::NonPositiveStep(self.sample_interval));
        }
        Ok(())
    }

    /// Window horizon `τ = (N - 1)·h`.
    pub fn horizon(&self) -> f64 {
        (self.window_samples - 1) as f64 * self.sample_interval
    }
}

/// Fixed-capacity ring of `(y, u)` samples, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    capacity: usize,
    samples: VecDeque<(f64, f64)>,
}

impl SampleWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity < 3 {
            return Err(Error::invalid(
                "sample window",
                format!("capacity {capacity} (need at least 3)"),
            ));
        }
        Ok(Self {
            capacity,
            samples: VecDeque::with_capacity(capacity),
        })
    }

    pub fn push(&mut self, y: f64, u: f64) -> Result<()> {
        if !y.is_finite() || !u.is_finite() {
            return Err(Error::NonFinite("estimator sample"));
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((y, u));
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fill_count(&self) -> usize {
        self.samples.len()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.samples.iter().copied()
    }
}

/// Precomputed discrete kernels: `F̂ = Σ y_j·wy_j + α·Σ u_j·wu_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub y: Vec<f64>,
    pub u: Vec<f64>,
}

impl KernelWeights {
    pub fn new(n: usize, h: f64, quadrature: Quadrature) -> Self {
        let tau = (n - 1) as f64 * h;
        let scale = -6.0 / tau.powi(3);
        let q = quadrature.weights(n, h);
        let y = (0..n)
            .map(|j| {
                let s = j as f64 * h;
                scale * q[j] * (tau - 2.0 * s)
            })
            .collect();
        let u = (0..n)
            .map(|j| {
                let s = j as f64 * h;
                scale * q[j] * s * (tau - s)
            })
            .collect();
        Self { y, u }
    }

    fn apply(&self, window: &SampleWindow, alpha: f64) -> f64 {
        let (mut fy, mut fu) = (0.0, 0.0);
        for ((y, u), (wy, wu)) in window.iter().zip(self.y.iter().zip(&self.u)) {
            fy += wy * y;
            fu += wu * u;
        }
        fy + alpha * fu
    }
}

/// One-shot estimate from a full window.
pub fn estimate_f(window: &SampleWindow, config: &EstimatorConfig) -> Result<f64> {
    config.validate()?;
    if !window.is_full() {
        return Err(Error::WarmingUp {
            filled: window.fill_count(),
            capacity: window.capacity(),
        });
    }
    if window.capacity() != config.window_samples {
        return Err(Error::invalid(
            "sample window",
            format!(
                "capacity {} differs from configured {}",
                window.capacity(),
                config.window_samples
            ),
        ));
    }
    let weights = KernelWeights::new(
        config.window_samples,
        config.sample_interval,
        config.quadrature,
    );
    Ok(weights.apply(window, config.alpha))
}

/// Streaming estimator: owns the window and caches the kernel weights.
#[derive(Debug, Clone)]
pub struct FEstimator {
    config: EstimatorConfig,
    window: SampleWindow,
    weights: KernelWeights,
}

impl FEstimator {
    pub fn new(config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            window: SampleWindow::new(config.window_samples)?,
            weights: KernelWeights::new(
                config.window_samples,
                config.sample_interval,
                config.quadrature,
            ),
            config,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn window(&self) -> &SampleWindow {
        &self.window
    }

    pub fn push(&mut self, y: f64, u: f64) -> Result<()> {
        self.window.push(y, u)
    }

    pub fn estimate(&self) -> Result<f64> {
        if !self.window.is_full() {
            return Err(Error::WarmingUp {
                filled: self.window.fill_count(),
                capacity: self.window.capacity(),
            });
        }
        Ok(self.weights.apply(&self.window, self.config.alpha))
    }
}
