//! Homogeneous connectivity mass and the network observables derived from it.
//!
//! In a homogeneous (boundary-free) system the connectivity mass
//!
//! ```text
//! M = (π Γ(3/η) / (η β^{3/η})) · S_η[G_i] · S_η[G_j]
//! ```
//!
//! determines the pair probability p₂ = M/V, the mean degree μ = ρM, and the
//! high-density full-connectivity probability P_fc = 1 − N e^{−ρM}.

use crate::gain::GainPattern;
use crate::specfn::{self, QuadratureSpec};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Path loss exponent η and attenuation constant β (units length^{−η}).
///
/// β sets the characteristic connection length r₀ = (β/GᵢGⱼ)^{−1/η}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub eta: f64,
    pub beta: f64,
}

impl PathLossModel {
    pub fn new(eta: f64, beta: f64) -> Result<Self> {
        let m = PathLossModel { eta, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter {
                field: "eta",
                message: format!("path loss exponent must be positive, got {}", self.eta),
            });
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter {
                field: "beta",
                message: format!("attenuation constant must be positive, got {}", self.beta),
            });
        }
        Ok(())
    }

    /// Γ(3/η) / (η β^{3/η}), the radial factor common to all 3D masses.
    pub fn radial_factor(&self) -> f64 {
        specfn::gamma_fn(3.0 / self.eta).expect("eta > 0") / (self.eta * self.beta.powf(3.0 / self.eta))
    }

    /// Truncation radius beyond which exp(−βr^η/g_max) < floor; used to cap
    /// improper radial integrals. Computed from the model and peak gain, not
    /// hard-coded.
    pub fn truncation_radius(&self, peak_gain_product: f64, floor: f64) -> f64 {
        ((peak_gain_product / self.beta) * (1.0 / floor).ln()).powf(1.0 / self.eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassMethod {
    Closed,
    Quadrature,
}

/// A connectivity mass value with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassResult {
    pub mass: f64,
    pub method: MassMethod,
    pub pattern_tx: String,
    pub pattern_rx: String,
    pub model: PathLossModel,
}

/// Homogeneous connectivity mass M for a transmit/receive pattern pair.
///
/// Uses closed-form S_η factors where available, quadrature otherwise; the
/// `method` field records which path produced the value.
pub fn homogeneous_mass(
    pattern_tx: &GainPattern,
    pattern_rx: &GainPattern,
    model: &PathLossModel,
) -> Result<MassResult> {
    model.validate()?;
    let spec = QuadratureSpec::tight();
    let mut method = MassMethod::Closed;
    let mut s_of = |p: &GainPattern| -> Result<f64> {
        match p.s_functional_closed(model.eta)? {
            Some(v) => Ok(v),
            None => {
                method = MassMethod::Quadrature;
                p.s_functional_quadrature(model.eta, &spec)
            }
        }
    };
    let s_tx = s_of(pattern_tx)?;
    let s_rx = s_of(pattern_rx)?;
    let mass = PI * model.radial_factor() * s_tx * s_rx;
    Ok(MassResult {
        mass,
        method,
        pattern_tx: pattern_tx.label(),
        pattern_rx: pattern_rx.label(),
        model: *model,
    })
}

/// Mean degree and pair probability in the homogeneous interpretation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DegreeSummary {
    /// μ = ρ M
    pub mean_degree: f64,
    /// p₂ = M / V
    pub pair_probability: f64,
    /// (N − 1) p₂, the finite-N mean degree
    pub mean_degree_finite_n: f64,
}

pub fn mean_degree_and_pair_probability(
    mass: &MassResult,
    rho: f64,
    volume: f64,
    n: usize,
) -> Result<DegreeSummary> {
    if !(rho > 0.0) || !(volume > 0.0) {
        return Err(Error::Domain(format!(
            "rho and volume must be positive, got rho = {rho}, volume = {volume}"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!("N must be at least 2, got {n}")));
    }
    let p2 = mass.mass / volume;
    Ok(DegreeSummary {
        mean_degree: rho * mass.mass,
        pair_probability: p2,
        mean_degree_finite_n: (n as f64 - 1.0) * p2,
    })
}

/// Unclamped 1 − N e^{−ρM}; goes negative at low density where the
/// asymptotic form breaks down. Exposed for diagnostics.
pub fn pfc_homogeneous_raw(n: usize, rho: f64, mass: &MassResult) -> f64 {
    1.0 - n as f64 * (-rho * mass.mass).exp()
}

/// Full-connectivity probability 1 − N e^{−ρM}, clamped to [0, 1].
pub fn pfc_homogeneous(n: usize, rho: f64, mass: &MassResult) -> f64 {
    pfc_homogeneous_raw(n, rho, mass).clamp(0.0, 1.0)
}

/// Connectivity mass of a boundary component of solid angle ω_B under
/// isotropic radiation: M_B = ω_B Γ(3/η) / (η β^{3/η}).
pub fn boundary_mass_isotropic(model: &PathLossModel, omega_b: f64) -> Result<f64> {
    model.validate()?;
    if !(omega_b > 0.0 && omega_b <= 4.0 * PI + 1e-12) {
        return Err(Error::Domain(format!(
            "omega_b must lie in (0, 4*pi], got {omega_b}"
        )));
    }
    Ok(omega_b * model.radial_factor())
}

/// Pattern families with a directional scaling limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingFamily {
    /// Donut with m → ∞
    Donut,
    /// Narrow lobe with λ → ∞
    NarrowLobe,
    /// Sector with ν → 0
    Sector,
}

impl ScalingFamily {
    fn build(&self, parameter: f64) -> GainPattern {
        match self {
            ScalingFamily::Donut => GainPattern::Donut { m: parameter },
            ScalingFamily::NarrowLobe => GainPattern::NarrowLobe { lambda: parameter },
            ScalingFamily::Sector => GainPattern::Sector { nu: parameter },
        }
    }
}

/// Least-squares slope of log S_η vs log ω over a parameter sweep, with ω
/// the measured half-maximum solid angle. The expected slope is 1 − 3/η in
/// the directional limit.
pub fn fit_scaling_exponent(
    family: ScalingFamily,
    eta: f64,
    parameters: &[f64],
) -> Result<f64> {
    if parameters.len() < 5 {
        return Err(Error::InsufficientPoints(format!(
            "scaling fit needs at least 5 sweep points, got {}",
            parameters.len()
        )));
    }
    let spec = QuadratureSpec::tight();
    let mut xs = Vec::with_capacity(parameters.len());
    let mut ys = Vec::with_capacity(parameters.len());
    for &p in parameters {
        let pattern = family.build(p);
        pattern.validate()?;
        let omega = pattern.half_max_solid_angle();
        let s = pattern.s_functional_quadrature(eta, &spec)?;
        xs.push(omega.ln());
        ys.push(s.ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    sxy / sxx
}
