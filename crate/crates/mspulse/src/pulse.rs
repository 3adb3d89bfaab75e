//! Fourier-series pulse envelopes and their scalar functionals.
//!
//! The amplitude envelope is
//!
//! ```text
//! Omega(t) = a0/2 + sum_{n=1}^{N} a_n cos(n xi0 t) + b_n sin(n xi0 t)
//! ```
//!
//! in units of the constant MS baseline (a0 = 2 gives Omega = 1). Physical
//! units enter only through the Lamb-Dicke parameter and the sideband
//! detuning carried by [`PhysicalParams`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trap and laser parameters: Lamb-Dicke parameter `eta`, sideband detuning
/// `xi0` (rad/s), and the derived gate time `T = 2 pi / xi0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub eta: f64,
    pub xi0: f64,
    pub gate_time: f64,
}

impl PhysicalParams {
    pub fn new(eta: f64, xi0: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config(format!("eta must be positive, got {eta}")));
        }
        if !(xi0 > 0.0 && xi0.is_finite()) {
            return Err(Error::config(format!("xi0 must be positive, got {xi0}")));
        }
        Ok(PhysicalParams {
            eta,
            xi0,
            gate_time: 2.0 * PI / xi0,
        })
    }

    /// Conversion factor between the normalized geometric phase and the
    /// physical one: `A(T) = phase_scale * normalized_phase`.
    pub fn phase_scale(&self) -> f64 {
        self.gate_time * self.eta * self.eta / self.xi0
    }
}

/// Truncated Fourier series for the pulse envelope.
///
/// The arrays `a` and `b` hold coefficients for n = 1..=N at index n-1;
/// `a0` is stored separately. Gate-ready (`closed`) pulses require
/// `a[0] == 0.0` and `b[0] == 0.0` exactly, since those coefficients
/// multiply secular terms in the phase-space trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPulse", into = "RawPulse")]
pub struct FourierPulse {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Wire format: `{"N": int, "a0": float, "a": [float; N], "b": [float; N]}`.
#[derive(Serialize, Deserialize)]
struct RawPulse {
    #[serde(rename = "N")]
    n_max: usize,
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<RawPulse> for FourierPulse {
    type Error = Error;
    fn try_from(raw: RawPulse) -> Result<Self> {
        if raw.a.len() != raw.n_max || raw.b.len() != raw.n_max {
            return Err(Error::config(format!(
                "pulse arrays must have length N = {}, got a: {}, b: {}",
                raw.n_max,
                raw.a.len(),
                raw.b.len()
            )));
        }
        FourierPulse::new(raw.a0, raw.a, raw.b)
    }
}

impl From<FourierPulse> for RawPulse {
    fn from(p: FourierPulse) -> RawPulse {
        RawPulse {
            n_max: p.a.len(),
            a0: p.a0,
            a: p.a,
            b: p.b,
        }
    }
}

impl FourierPulse {
    /// Build a pulse from `a0` and the coefficient arrays for n = 1..=N.
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::config(format!(
                "need N >= 1 with matching array lengths, got a: {}, b: {}",
                a.len(),
                b.len()
            )));
        }
        if !a0.is_finite() || a.iter().chain(b.iter()).any(|c| !c.is_finite()) {
            return Err(Error::config("pulse coefficients must be finite"));
        }
        Ok(FourierPulse { a0, a, b })
    }

    /// The constant-envelope MS baseline, `a0 = 2` (so `Omega(t) = 1`).
    pub fn ms_baseline() -> Self {
        FourierPulse {
            a0: 2.0,
            a: vec![0.0],
            b: vec![0.0],
        }
    }

    /// Cosine-only pulse over (a0, a2..aN), the layout produced by the
    /// optimizer. `a_tail[j]` is the coefficient of n = j + 2.
    pub fn from_cosine_coeffs(a0: f64, a_tail: &[f64]) -> Result<Self> {
        let n_max = a_tail.len() + 1;
        let mut a = vec![0.0; n_max.max(1)];
        for (j, &c) in a_tail.iter().enumerate() {
            a[j + 1] = c;
        }
        FourierPulse::new(a0, a, vec![0.0; n_max.max(1)])
    }

    pub fn truncation_order(&self) -> usize {
        self.a.len()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Coefficient of cos(n xi0 t), 1-based; zero beyond the truncation order.
    pub fn coeff_a(&self, n: usize) -> f64 {
        assert!(n >= 1, "coefficient index is 1-based");
        self.a.get(n - 1).copied().unwrap_or(0.0)
    }

    /// Coefficient of sin(n xi0 t), 1-based.
    pub fn coeff_b(&self, n: usize) -> f64 {
        assert!(n >= 1, "coefficient index is 1-based");
        self.b.get(n - 1).copied().unwrap_or(0.0)
    }

    /// Gate-ready pulses have a1 = b1 = 0 exactly.
    pub fn is_closed(&self) -> bool {
        self.a[0] == 0.0 && self.b[0] == 0.0
    }

    /// Evaluate the envelope at time `t` (t > T is allowed, for timing-error
    /// scans).
    pub fn envelope(&self, params: &PhysicalParams, t: f64) -> f64 {
        let xi0 = params.xi0;
        let mut value = 0.5 * self.a0;
        for (j, (&an, &bn)) in self.a.iter().zip(self.b.iter()).enumerate() {
            let phase = (j + 1) as f64 * xi0 * t;
            value += an * phase.cos() + bn * phase.sin();
        }
        value
    }

    /// k-th derivative of the envelope at the gate time T:
    ///
    /// even k: `delta_{k0} a0/2 + (-1)^{k/2} sum a_n (n xi0)^k`,
    /// odd k:  `(-1)^{(k-1)/2} sum b_n (n xi0)^k`.
    pub fn envelope_derivative_at_gate_time(&self, k: usize, xi0: f64) -> f64 {
        if k % 2 == 0 {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let base = if k == 0 { 0.5 * self.a0 } else { 0.0 };
            base + sign
                * self
                    .a
                    .iter()
                    .enumerate()
                    .map(|(j, &an)| an * ((j + 1) as f64 * xi0).powi(k as i32))
                    .sum::<f64>()
        } else {
            let sign = if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            sign * self
                .b
                .iter()
                .enumerate()
                .map(|(j, &bn)| bn * ((j + 1) as f64 * xi0).powi(k as i32))
                .sum::<f64>()
        }
    }

    /// Average power of the envelope over one period, relative to the MS
    /// baseline: `a0^2/4 + (1/2) sum_n (a_n^2 + b_n^2)`.
    pub fn normalized_power(&self) -> f64 {
        let mut p = 0.25 * self.a0 * self.a0;
        for (&an, &bn) in self.a.iter().zip(self.b.iter()) {
            p += 0.5 * (an * an + bn * bn);
        }
        p
    }

    /// Normalized geometric phase at the gate time:
    /// `-a0^2/4 + (1/2) sum_{n>=2} (a_n^2 + b_n^2)/(n^2 - 1)`.
    ///
    /// Rejects nonzero a1/b1: the n = 1 denominator vanishes, and closure
    /// forces those coefficients to zero anyway.
    pub fn normalized_phase(&self) -> Result<f64> {
        if !self.is_closed() {
            return Err(Error::config(
                "normalized phase is undefined for nonzero a1 or b1 (n = 1 is excluded)",
            ));
        }
        let mut phase = -0.25 * self.a0 * self.a0;
        for (j, (&an, &bn)) in self.a.iter().zip(self.b.iter()).enumerate().skip(1) {
            let n = (j + 1) as f64;
            phase += 0.5 * (an * an + bn * bn) / (n * n - 1.0);
        }
        Ok(phase)
    }

    /// Multiply every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        FourierPulse {
            a0: s * self.a0,
            a: self.a.iter().map(|c| s * c).collect(),
            b: self.b.iter().map(|c| s * c).collect(),
        }
    }

    /// Rescale so the physical geometric phase satisfies |A(T)| = pi/2,
    /// the condition for preparing the maximally entangled state.
    pub fn rescale_to_target_phase(&self, params: &PhysicalParams) -> Result<Self> {
        let phase = self.normalized_phase()?;
        if phase == 0.0 {
            return Err(Error::numerical(
                "phase-degenerate pulse cannot be rescaled",
            ));
        }
        let s = ((0.5 * PI) / (params.phase_scale() * phase.abs())).sqrt();
        Ok(self.scaled(s))
    }
}
