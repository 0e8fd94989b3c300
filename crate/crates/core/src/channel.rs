//! THz link budget between a RIS and a VR user: LoS channel gain with
//! molecular absorption, absorption noise, Shannon rate over the RIS
//! elements, and the per-slot service rate derived from it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid channel parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ChannelError {
    ChannelError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Hz
    pub bandwidth_w: f64,
    /// Hz
    pub freq_f: f64,
    /// W
    pub tx_power_p_ris: f64,
    /// Molecular absorption coefficient k(f), 1/m.
    pub absorption_kf: f64,
    /// K
    pub temp_t0: f64,
    /// RIS–user distance, m.
    pub distance_d: f64,
    pub los_flags: Vec<bool>,
    /// Channel phase per element, rad.
    pub phase_channel: Vec<f64>,
    /// Meta-surface phase shift per element, rad.
    pub phase_meta: Vec<f64>,
    pub n_elements: usize,
    /// Distances of the other RISs contributing absorption noise, m.
    #[serde(default)]
    pub interferer_distances: Vec<f64>,
    /// Slot duration, s.
    pub slot_tau0: f64,
    /// Object size, bits.
    pub object_size_o: f64,
}

fn positive(field: &'static str, v: f64) -> Result<(), ChannelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        positive("bandwidth_w", self.bandwidth_w)?;
        positive("freq_f", self.freq_f)?;
        positive("tx_power_p_ris", self.tx_power_p_ris)?;
        positive("temp_t0", self.temp_t0)?;
        positive("distance_d", self.distance_d)?;
        positive("slot_tau0", self.slot_tau0)?;
        positive("object_size_o", self.object_size_o)?;
        if !(self.absorption_kf.is_finite() && self.absorption_kf >= 0.0) {
            return Err(invalid("absorption_kf", "must be finite and >= 0"));
        }
        if self.n_elements == 0 {
            return Err(invalid("n_elements", "must be at least 1"));
        }
        for (field, len) in [
            ("los_flags", self.los_flags.len()),
            ("phase_channel", self.phase_channel.len()),
            ("phase_meta", self.phase_meta.len()),
        ] {
            if len != self.n_elements {
                return Err(invalid(
                    field,
                    format!("length {len} differs from n_elements {}", self.n_elements),
                ));
            }
        }
        if let Some(d) = self
            .interferer_distances
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return Err(invalid("interferer_distances", format!("bad distance {d}")));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, ChannelError> {
        let params: ChannelParams =
            serde_json::from_str(text).map_err(|e| invalid("json", e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

/// h = (c/(4πfd))²·e^{−k(f)d} with line of sight, 0 without.
pub fn channel_gain(distance: f64, freq: f64, absorption: f64, los: bool) -> f64 {
    if !los {
        return 0.0;
    }
    let spread = SPEED_OF_LIGHT / (4.0 * PI * freq * distance);
    spread * spread * (-absorption * distance).exp()
}

/// Thermal noise N₀ = (Wλ²/4π)·k_B·T₀ with λ = c/f.
pub fn thermal_noise(params: &ChannelParams) -> f64 {
    let wavelength = SPEED_OF_LIGHT / params.freq_f;
    params.bandwidth_w * wavelength * wavelength / (4.0 * PI) * BOLTZMANN * params.temp_t0
}

/// N₀ plus the molecular absorption noise P·A₀·d⁻²·(1 − e^{−k(f)d}) of
/// every interfering RIS, with A₀ = c²/(16π²f²).
pub fn noise_power(params: &ChannelParams) -> f64 {
    let a0 = SPEED_OF_LIGHT * SPEED_OF_LIGHT / (16.0 * PI * PI * params.freq_f * params.freq_f);
    let absorption: f64 = params
        .interferer_distances
        .iter()
        .map(|&d| params.tx_power_p_ris * a0 / (d * d) * (1.0 - (-params.absorption_kf * d).exp()))
        .sum();
    thermal_noise(params) + absorption
}

/// Σ_n |e^{j(φ_n − ψ_n)}|²·L_n, evaluated term by term.
pub fn element_sum(params: &ChannelParams) -> f64 {
    params
        .phase_channel
        .iter()
        .zip(&params.phase_meta)
        .zip(&params.los_flags)
        .map(|((&phi, &psi), &los)| {
            let term = Complex64::from_polar(1.0, phi - psi).norm_sqr();
            if los {
                term
            } else {
                0.0
            }
        })
        .sum()
}

/// Shannon rate in bit/s.
pub fn transmission_rate(params: &ChannelParams) -> Result<f64, ChannelError> {
    params.validate()?;
    let gain = channel_gain(params.distance_d, params.freq_f, params.absorption_kf, true);
    let snr = params.tx_power_p_ris * gain * element_sum(params) / noise_power(params);
    Ok(params.bandwidth_w * (1.0 + snr).log2())
}

/// Objects served per slot: C = rate·τ₀/O.
pub fn service_rate(rate: f64, slot_tau0: f64, object_size: f64) -> Result<f64, ChannelError> {
    positive("object_size_o", object_size)?;
    Ok(rate * slot_tau0 / object_size)
}

/// Everything the `channel` command reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkReport {
    pub gain: f64,
    pub noise: f64,
    pub rate: f64,
    pub service_rate: f64,
}

pub fn link_report(params: &ChannelParams) -> Result<LinkReport, ChannelError> {
    let rate = transmission_rate(params)?;
    Ok(LinkReport {
        gain: channel_gain(
            params.distance_d,
            params.freq_f,
            params.absorption_kf,
            params.los_flags.iter().any(|&l| l),
        ),
        noise: noise_power(params),
        rate,
        service_rate: service_rate(rate, params.slot_tau0, params.object_size_o)?,
    })
}
