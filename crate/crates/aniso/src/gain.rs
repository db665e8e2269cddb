//! Parametric antenna gain patterns, their normalization, and the
//! connectivity functional S_η[G].
//!
//! Every pattern is normalized so its integral over the sphere is 4π, which
//! keeps total radiated power fixed across families and makes comparisons
//! fair. The functional
//!
//! ```text
//! S_η[G] = ∫₀^π sin θ G(θ)^{3/η} dθ
//! ```
//!
//! is the angular factor of the homogeneous connectivity mass; closed forms
//! exist for the cardioid, donut and sector families and are cross-checked
//! against quadrature in the tests.

use crate::specfn::{self, QuadratureSpec};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A set of unit vectors giving the lobe directions of a multi-lobe pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrientationSet {
    vectors: Vec<[f64; 3]>,
}

impl OrientationSet {
    /// Build from raw vectors; each is normalized, near-zero vectors rejected.
    pub fn new(vectors: Vec<[f64; 3]>) -> Result<Self> {
        let mut out = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm < 1e-9 {
                return Err(Error::InvalidParameter {
                    field: "directions",
                    message: format!("direction {i} has near-zero norm"),
                });
            }
            out.push([v[0] / norm, v[1] / norm, v[2] / norm]);
        }
        Ok(OrientationSet { vectors: out })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.vectors.iter().enumerate() {
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter {
                    field: "directions",
                    message: format!("direction {i} is not unit norm (|v| = {norm})"),
                });
            }
        }
        Ok(())
    }
}

/// Parametric radiation pattern.
///
/// All rotationally symmetric variants have boresight +z in the body frame
/// and depend only on the polar angle θ. `MultiLobe` sums identical lobes
/// around explicit directions; with `sectorized: false` each lobe is a cosine
/// lobe, with `true` a constant-gain spherical cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GainPattern {
    Isotropic,
    Cardioid {
        epsilon: f64,
    },
    Donut {
        m: f64,
    },
    #[serde(rename = "narrow")]
    NarrowLobe {
        lambda: f64,
    },
    Sector {
        nu: f64,
    },
    MultiLobe {
        n: usize,
        lambda: f64,
        directions: OrientationSet,
        #[serde(default)]
        sectorized: bool,
    },
}

/// Amplitude of the cosine lobe 2(λ²−1)/(λ sin(π/2λ) − 1); both numerator
/// and denominator vanish linearly at λ=1, where the limit is 4.
fn narrow_amplitude(lambda: f64) -> f64 {
    if lambda <= 1.0 + 1e-9 {
        4.0
    } else {
        2.0 * (lambda * lambda - 1.0) / (lambda * (PI / (2.0 * lambda)).sin() - 1.0)
    }
}

fn donut_amplitude(m: f64) -> f64 {
    // gamma ratio in log space; the individual gammas overflow for large m
    let log_ratio = specfn::ln_gamma((3.0 + m) / 2.0) - specfn::ln_gamma((2.0 + m) / 2.0);
    2.0 * log_ratio.exp() / PI.sqrt()
}

fn sector_gain(nu: f64) -> f64 {
    let s = (nu * PI / 2.0).sin();
    1.0 / (s * s)
}

/// Single-lobe polar profile of a multi-lobe pattern: (gain at angle t from
/// the lobe axis, support half-angle).
#[derive(Debug, Clone, Copy)]
pub(crate) struct LobeProfile {
    pub amplitude: f64,
    pub lambda: f64,
    pub sectorized: bool,
    pub support: f64,
}

impl LobeProfile {
    fn new(n: usize, lambda: f64, sectorized: bool) -> Self {
        if sectorized {
            let s = (PI / (6.0 * lambda)).sin();
            LobeProfile {
                amplitude: 1.0 / (n as f64 * s * s),
                lambda,
                sectorized,
                support: PI / (3.0 * lambda),
            }
        } else {
            LobeProfile {
                amplitude: narrow_amplitude(lambda) / n as f64,
                lambda,
                sectorized,
                support: PI / (2.0 * lambda),
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.support {
            0.0
        } else if self.sectorized {
            self.amplitude
        } else {
            self.amplitude * (self.lambda * t).cos()
        }
    }
}

impl GainPattern {
    pub fn validate(&self) -> Result<()> {
        match self {
            GainPattern::Isotropic => Ok(()),
            GainPattern::Cardioid { epsilon } => {
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(Error::InvalidParameter {
                        field: "epsilon",
                        message: format!("cardioid epsilon must lie in [0, 1], got {epsilon}"),
                    });
                }
                Ok(())
            }
            GainPattern::Donut { m } => {
                if !(*m > 0.0) {
                    return Err(Error::InvalidParameter {
                        field: "m",
                        message: format!("donut m must be positive, got {m}"),
                    });
                }
                Ok(())
            }
            GainPattern::NarrowLobe { lambda } => {
                if !(*lambda >= 1.0) {
                    return Err(Error::InvalidParameter {
                        field: "lambda",
                        message: format!("narrow-lobe lambda must be >= 1, got {lambda}"),
                    });
                }
                Ok(())
            }
            GainPattern::Sector { nu } => {
                if !(*nu > 0.0 && *nu <= 1.0) {
                    return Err(Error::InvalidParameter {
                        field: "nu",
                        message: format!("sector nu must lie in (0, 1], got {nu}"),
                    });
                }
                Ok(())
            }
            GainPattern::MultiLobe {
                n,
                lambda,
                directions,
                ..
            } => {
                if *n < 1 {
                    return Err(Error::InvalidParameter {
                        field: "n",
                        message: "multilobe n must be at least 1".into(),
                    });
                }
                if directions.len() != *n {
                    return Err(Error::InvalidParameter {
                        field: "directions",
                        message: format!(
                            "expected {n} directions, got {}",
                            directions.len()
                        ),
                    });
                }
                directions.validate()?;
                let lambda_min = (*n as f64 * PI).sqrt() / 3.0;
                if !(*lambda >= 1.0 && *lambda >= lambda_min - 1e-12) {
                    return Err(Error::InvalidParameter {
                        field: "lambda",
                        message: format!(
                            "multilobe lambda must satisfy lambda >= max(1, sqrt(n*pi)/3) = {:.6}, got {lambda}",
                            lambda_min.max(1.0)
                        ),
                    });
                }
                // disjoint supports: pairwise angular separation above pi/lambda
                let min_sep = PI / lambda;
                let v = directions.vectors();
                for i in 0..v.len() {
                    for j in (i + 1)..v.len() {
                        let dot = v[i][0] * v[j][0] + v[i][1] * v[j][1] + v[i][2] * v[j][2];
                        let ang = dot.clamp(-1.0, 1.0).acos();
                        if ang <= min_sep {
                            return Err(Error::LobeOverlap(format!(
                                "lobes {i} and {j} are separated by {ang:.4} rad <= pi/lambda = {min_sep:.4}"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_rotationally_symmetric(&self) -> bool {
        !matches!(self, GainPattern::MultiLobe { .. })
    }

    /// Gain as a function of the polar angle θ from the boresight.
    ///
    /// Only meaningful for rotationally symmetric variants; returns `None`
    /// for `MultiLobe`.
    pub fn symmetric_profile(&self, theta: f64) -> Option<f64> {
        match self {
            GainPattern::Isotropic => Some(1.0),
            GainPattern::Cardioid { epsilon } => Some(1.0 + epsilon * theta.cos()),
            GainPattern::Donut { m } => Some(donut_amplitude(*m) * theta.sin().abs().powf(*m)),
            GainPattern::NarrowLobe { lambda } => {
                let support = PI / (2.0 * lambda);
                if theta >= 0.0 && theta < support {
                    Some(narrow_amplitude(*lambda) * (lambda * theta).cos())
                } else {
                    Some(0.0)
                }
            }
            GainPattern::Sector { nu } => {
                if theta >= 0.0 && theta < nu * PI {
                    Some(sector_gain(*nu))
                } else {
                    Some(0.0)
                }
            }
            GainPattern::MultiLobe { .. } => None,
        }
    }

    pub(crate) fn lobe_profile(&self) -> Option<LobeProfile> {
        match self {
            GainPattern::MultiLobe {
                n,
                lambda,
                sectorized,
                ..
            } => Some(LobeProfile::new(*n, *lambda, *sectorized)),
            _ => None,
        }
    }

    /// Evaluate the gain toward a unit direction in the pattern's body frame.
    pub fn gain_at(&self, direction: [f64; 3]) -> f64 {
        match self {
            GainPattern::MultiLobe { directions, .. } => {
                let profile = self.lobe_profile().expect("multilobe");
                let mut total = 0.0;
                for v in directions.vectors() {
                    let dot = v[0] * direction[0] + v[1] * direction[1] + v[2] * direction[2];
                    let t = dot.clamp(-1.0, 1.0).acos();
                    if t < profile.support {
                        total += profile.eval(t);
                    }
                }
                total
            }
            _ => {
                let theta = direction[2].clamp(-1.0, 1.0).acos();
                self.symmetric_profile(theta).expect("symmetric variant")
            }
        }
    }

    /// Peak gain of the pattern, used to size radial truncation.
    pub fn peak_gain(&self) -> f64 {
        match self {
            GainPattern::Isotropic => 1.0,
            GainPattern::Cardioid { epsilon } => 1.0 + epsilon,
            GainPattern::Donut { m } => donut_amplitude(*m),
            GainPattern::NarrowLobe { lambda } => narrow_amplitude(*lambda),
            GainPattern::Sector { nu } => sector_gain(*nu),
            GainPattern::MultiLobe { .. } => self.lobe_profile().expect("multilobe").amplitude,
        }
    }

    /// Edge of the pattern's support in θ, where the integrand must be split.
    fn support_edge(&self) -> f64 {
        match self {
            GainPattern::NarrowLobe { lambda } => PI / (2.0 * lambda),
            GainPattern::Sector { nu } => nu * PI,
            _ => PI,
        }
    }

    /// Spherical integral ∫ G dΩ by quadrature; the caller asserts ≈ 4π.
    ///
    /// Multi-lobe supports are disjoint, so the sphere integral is n times
    /// the per-lobe polar integral.
    pub fn verify_normalization(&self, spec: &QuadratureSpec) -> Result<f64> {
        self.validate()?;
        match self {
            GainPattern::MultiLobe { n, .. } => {
                let profile = self.lobe_profile().expect("multilobe");
                let one = specfn::integrate_1d(
                    |t| t.sin() * profile.eval(t),
                    0.0,
                    profile.support,
                    spec,
                )?;
                Ok(*n as f64 * 2.0 * PI * one)
            }
            _ => {
                let edge = self.support_edge();
                let body = specfn::integrate_1d(
                    |t| t.sin() * self.symmetric_profile(t).expect("symmetric"),
                    0.0,
                    edge,
                    spec,
                )?;
                Ok(2.0 * PI * body)
            }
        }
    }

    /// S_η[G] by quadrature, splitting the integral at support edges.
    ///
    /// For `MultiLobe` the lobes are disjoint, so the functional is the sum
    /// of per-lobe integrals over each lobe's own polar angle.
    pub fn s_functional_quadrature(&self, eta: f64, spec: &QuadratureSpec) -> Result<f64> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        self.validate()?;
        let p = 3.0 / eta;
        match self {
            GainPattern::MultiLobe { n, .. } => {
                let profile = self.lobe_profile().expect("multilobe");
                let one = specfn::integrate_1d(
                    |t| t.sin() * profile.eval(t).powf(p),
                    0.0,
                    profile.support,
                    spec,
                )?;
                Ok(*n as f64 * one)
            }
            _ => {
                let edge = self.support_edge();
                specfn::integrate_1d(
                    |t| t.sin() * self.symmetric_profile(t).expect("symmetric").powf(p),
                    0.0,
                    edge,
                    spec,
                )
            }
        }
    }

    /// Closed form for S_η[G] where one exists.
    ///
    /// Returns `Ok(None)` for the narrow-lobe family, whose printed closed
    /// form is not trusted; quadrature is authoritative there. The cosine
    /// multi-lobe closed form reduces to the single-lobe quadrature scaled by
    /// n^{1−3/η}.
    pub fn s_functional_closed(&self, eta: f64) -> Result<Option<f64>> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        self.validate()?;
        let p = 3.0 / eta;
        match self {
            GainPattern::Isotropic => Ok(Some(2.0)),
            GainPattern::Cardioid { epsilon } => {
                if *epsilon < 1e-12 {
                    return Ok(Some(2.0));
                }
                let e = *epsilon;
                let v = eta * ((1.0 + e).powf(1.0 + p) - (1.0 - e).powf(1.0 + p))
                    / (e * (eta + 3.0));
                Ok(Some(v))
            }
            GainPattern::Donut { m } => {
                let log_a = donut_amplitude(*m).ln();
                let log_v = p * log_a + 0.5 * PI.ln()
                    + specfn::ln_gamma(1.0 + 3.0 * m / (2.0 * eta))
                    - specfn::ln_gamma(3.0 * (m + eta) / (2.0 * eta));
                Ok(Some(log_v.exp()))
            }
            GainPattern::Sector { nu } => {
                Ok(Some(2.0 * (nu * PI / 2.0).sin().powf(2.0 - 2.0 * p)))
            }
            GainPattern::NarrowLobe { .. } => Ok(None),
            GainPattern::MultiLobe {
                n,
                lambda,
                sectorized,
                ..
            } => {
                let nf = *n as f64;
                if *sectorized {
                    let v = 2.0 * nf.powf(1.0 - p)
                        * (PI / (6.0 * lambda)).sin().powf(2.0 - 2.0 * p);
                    Ok(Some(v))
                } else {
                    let single = GainPattern::NarrowLobe { lambda: *lambda };
                    let base = single.s_functional_quadrature(eta, &QuadratureSpec::tight())?;
                    Ok(Some(nf.powf(1.0 - p) * base))
                }
            }
        }
    }

    /// Solid angle (steradians) over which the gain is at least half its peak,
    /// measured numerically on the polar profile.
    pub fn half_max_solid_angle(&self) -> f64 {
        match self {
            GainPattern::Isotropic => 4.0 * PI,
            GainPattern::MultiLobe { n, .. } => {
                let profile = self.lobe_profile().expect("multilobe");
                *n as f64 * profile_half_max_omega(|t| profile.eval(t), profile.support)
            }
            _ => {
                let edge = self.support_edge();
                profile_half_max_omega(|t| self.symmetric_profile(t).expect("symmetric"), edge)
            }
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            GainPattern::Isotropic => "isotropic".into(),
            GainPattern::Cardioid { epsilon } => format!("cardioid(eps={epsilon})"),
            GainPattern::Donut { m } => format!("donut(m={m})"),
            GainPattern::NarrowLobe { lambda } => format!("narrow(lambda={lambda})"),
            GainPattern::Sector { nu } => format!("sector(nu={nu})"),
            GainPattern::MultiLobe {
                n,
                lambda,
                sectorized,
                ..
            } => format!("multilobe(n={n},lambda={lambda:.4},sectorized={sectorized})"),
        }
    }
}

/// Measure 2π ∫ sinθ [G(θ) ≥ max/2] dθ on [0, edge] with bisection-refined
/// threshold crossings.
fn profile_half_max_omega<F: Fn(f64) -> f64>(g: F, edge: f64) -> f64 {
    const STEPS: usize = 20_000;
    let h = edge / STEPS as f64;
    let mut gmax = 0.0f64;
    for i in 0..=STEPS {
        gmax = gmax.max(g(i as f64 * h));
    }
    if gmax <= 0.0 {
        return 0.0;
    }
    let thr = 0.5 * gmax;
    let above = |t: f64| g(t) >= thr;
    // locate crossings, refine by bisection
    let mut omega = 0.0;
    let mut start: Option<f64> = if above(0.0) { Some(0.0) } else { None };
    for i in 0..STEPS {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let (fa, fb) = (above(a), above(b));
        if fa == fb {
            continue;
        }
        let mut lo = a;
        let mut hi = b;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if above(mid) == fa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let crossing = 0.5 * (lo + hi);
        if fa {
            // leaving the half-max region
            let s = start.take().unwrap_or(0.0);
            omega += 2.0 * PI * (s.cos() - crossing.cos());
        } else {
            start = Some(crossing);
        }
    }
    if let Some(s) = start {
        omega += 2.0 * PI * (s.cos() - edge.cos());
    }
    omega
}

/// Evenly spread axes for building multi-lobe test patterns without solving
/// the Thomson problem: n points of a Fibonacci sphere lattice.
pub fn fibonacci_sphere(n: usize) -> OrientationSet {
    let golden = PI * (3.0 - 5.0f64.sqrt());
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let z = if n == 1 {
            1.0
        } else {
            1.0 - 2.0 * i as f64 / (n - 1) as f64
        };
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden * i as f64;
        v.push([r * phi.cos(), r * phi.sin(), z]);
    }
    OrientationSet::new(v).expect("nonzero vectors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn multilobe(n: usize, lambda: f64, sectorized: bool) -> GainPattern {
        GainPattern::MultiLobe {
            n,
            lambda,
            directions: fibonacci_sphere(n),
            sectorized,
        }
    }

    #[test]
    fn gain_at_examples() {
        assert_eq!(GainPattern::Isotropic.gain_at([0.3, -0.5, 0.81]), 1.0);
        let c = GainPattern::Cardioid { epsilon: 1.0 };
        assert_relative_eq!(c.gain_at([0.0, 0.0, 1.0]), 2.0);
        assert_relative_eq!(c.gain_at([0.0, 0.0, -1.0]), 0.0);
        // narrow lobe support boundary: cos(lambda * pi/4) = 0 at lambda = 2
        let n = GainPattern::NarrowLobe { lambda: 2.0 };
        let theta = PI / 4.0;
        let d = [theta.sin(), 0.0, theta.cos()];
        assert!(n.gain_at(d).abs() < 1e-9);
    }

    #[test]
    fn normalization_examples() {
        let spec = spec();
        assert_relative_eq!(
            GainPattern::Isotropic.verify_normalization(&spec).unwrap(),
            4.0 * PI,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            GainPattern::Sector { nu: 0.5 }
                .verify_normalization(&spec)
                .unwrap(),
            4.0 * PI,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            GainPattern::NarrowLobe { lambda: 3.0 }
                .verify_normalization(&spec)
                .unwrap(),
            4.0 * PI,
            max_relative = 1e-9
        );
    }

    #[test]
    fn normalization_multilobe_both_profiles() {
        let spec = spec();
        for sectorized in [false, true] {
            let p = multilobe(6, 4.0, sectorized);
            assert_relative_eq!(
                p.verify_normalization(&spec).unwrap(),
                4.0 * PI,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn s_functional_isotropic_and_eta3() {
        let spec = spec();
        for eta in [2.0, 3.0, 4.5, 6.0] {
            assert_relative_eq!(
                GainPattern::Isotropic
                    .s_functional_quadrature(eta, &spec)
                    .unwrap(),
                2.0,
                max_relative = 1e-9
            );
        }
        // eta = 3: invariance across families
        for p in [
            GainPattern::Cardioid { epsilon: 0.7 },
            GainPattern::Donut { m: 3.0 },
            GainPattern::NarrowLobe { lambda: 2.5 },
            GainPattern::Sector { nu: 0.3 },
            multilobe(4, 3.0, false),
            multilobe(4, 3.0, true),
        ] {
            assert_relative_eq!(
                p.s_functional_quadrature(3.0, &spec).unwrap(),
                2.0,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn sector_closed_form_example() {
        // nu = 0.5, eta = 2: 2 sin(pi/4)^{-1} = 2 sqrt(2)
        let v = GainPattern::Sector { nu: 0.5 }
            .s_functional_closed(2.0)
            .unwrap()
            .unwrap();
        assert_relative_eq!(v, 2.0 * 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn cardioid_closed_form_examples() {
        let full = GainPattern::Cardioid { epsilon: 1.0 };
        let v = full.s_functional_closed(2.0).unwrap().unwrap();
        assert_relative_eq!(v, 2f64.powf(2.5) / 2.5, max_relative = 1e-12);
        let zero = GainPattern::Cardioid { epsilon: 0.0 };
        for eta in [2.0, 3.7, 6.0] {
            assert_relative_eq!(
                zero.s_functional_closed(eta).unwrap().unwrap(),
                2.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn donut_closed_form_example() {
        // frozen from the gamma-function expression at m = 2, eta = 2
        let v = GainPattern::Donut { m: 2.0 }
            .s_functional_closed(2.0)
            .unwrap()
            .unwrap();
        assert_relative_eq!(v, 2.164_302_838_398_146, max_relative = 1e-12);
    }

    #[test]
    fn narrow_lobe_closed_form_unsupported() {
        let r = GainPattern::NarrowLobe { lambda: 2.0 }
            .s_functional_closed(2.0)
            .unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn closed_vs_quadrature_grids() {
        let spec = QuadratureSpec::tight();
        let mut patterns = vec![];
        for eps in [0.2, 0.5, 0.8, 1.0] {
            patterns.push(GainPattern::Cardioid { epsilon: eps });
        }
        for m in [0.5, 1.0, 2.0, 5.0] {
            patterns.push(GainPattern::Donut { m });
        }
        for nu in [0.1, 0.3, 0.6, 1.0] {
            patterns.push(GainPattern::Sector { nu });
        }
        for p in &patterns {
            for eta in [2.0, 2.5, 3.0, 4.0, 6.0] {
                let closed = p.s_functional_closed(eta).unwrap().unwrap();
                let quad = p.s_functional_quadrature(eta, &spec).unwrap();
                assert!(
                    ((closed - quad) / quad).abs() <= 1e-8,
                    "{} eta={eta}: closed {closed} vs quad {quad}",
                    p.label()
                );
            }
        }
    }

    #[test]
    fn multilobe_scaling_matches_single_lobe() {
        let spec = QuadratureSpec::tight();
        for eta in [2.0, 3.0, 6.0] {
            let single = GainPattern::NarrowLobe { lambda: 4.5 }
                .s_functional_quadrature(eta, &spec)
                .unwrap();
            for n in [2usize, 4, 8] {
                let multi = multilobe(n, 4.5, false)
                    .s_functional_quadrature(eta, &spec)
                    .unwrap();
                let expected = (n as f64).powf(1.0 - 3.0 / eta) * single;
                assert!(
                    (multi - expected).abs() <= 1e-6,
                    "n={n} eta={eta}: {multi} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn sector_monotonicity_in_nu() {
        // exponent 2 - 6/eta: narrowing the sector raises S for eta < 3 and
        // lowers it for eta > 3
        let s = |nu: f64, eta: f64| {
            GainPattern::Sector { nu }
                .s_functional_closed(eta)
                .unwrap()
                .unwrap()
        };
        assert!(s(0.4, 2.0) > s(0.8, 2.0));
        assert!(s(0.4, 6.0) < s(0.8, 6.0));
    }

    #[test]
    fn half_max_examples() {
        assert_relative_eq!(
            GainPattern::Isotropic.half_max_solid_angle(),
            4.0 * PI
        );
        // narrow lobe lambda = 2: cutoff at theta = pi/6, omega = 4 pi sin^2(pi/12)
        let w = GainPattern::NarrowLobe { lambda: 2.0 }.half_max_solid_angle();
        assert_relative_eq!(
            w,
            4.0 * PI * (PI / 12.0).sin().powi(2),
            max_relative = 1e-6
        );
        // sector: constant over its support, so the whole cap counts
        let w = GainPattern::Sector { nu: 0.25 }.half_max_solid_angle();
        assert_relative_eq!(
            w,
            2.0 * PI * (1.0 - (0.25 * PI).cos()),
            max_relative = 1e-6
        );
        // donut, very high directivity: asymptotic sqrt(32 pi^2 ln2 / m)
        let m = 1.0e4;
        let w = GainPattern::Donut { m }.half_max_solid_angle();
        let asym = (32.0 * PI * PI * 2f64.ln() / m).sqrt();
        assert!((w - asym).abs() / asym < 0.05, "{w} vs {asym}");
    }

    #[test]
    fn multilobe_validation_rejects_overlap() {
        // two lobes 0.1 rad apart with lambda = 4 overlap
        let dirs = OrientationSet::new(vec![
            [0.0, 0.0, 1.0],
            [0.1f64.sin(), 0.0, 0.1f64.cos()],
        ])
        .unwrap();
        let p = GainPattern::MultiLobe {
            n: 2,
            lambda: 4.0,
            directions: dirs,
            sectorized: true,
        };
        assert!(matches!(p.validate(), Err(Error::LobeOverlap(_))));
    }

    #[test]
    fn parameter_validation() {
        assert!(GainPattern::Cardioid { epsilon: 1.2 }.validate().is_err());
        assert!(GainPattern::Donut { m: 0.0 }.validate().is_err());
        assert!(GainPattern::NarrowLobe { lambda: 0.8 }.validate().is_err());
        assert!(GainPattern::Sector { nu: 0.0 }.validate().is_err());
        assert!(GainPattern::Sector { nu: 1.0 }.validate().is_ok());
    }

    #[test]
    fn json_field_names_are_stable() {
        let p = GainPattern::Cardioid { epsilon: 0.5 };
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"type":"cardioid","epsilon":0.5}"#
        );
        let p: GainPattern = serde_json::from_str(r#"{"type":"narrow","lambda":2.0}"#).unwrap();
        assert_eq!(p, GainPattern::NarrowLobe { lambda: 2.0 });
        let p: GainPattern = serde_json::from_str(
            r#"{"type":"multilobe","n":2,"lambda":4.0,"directions":[[0,0,1],[0,0,-1]]}"#,
        )
        .unwrap();
        assert!(p.validate().is_ok());
        assert!(matches!(
            p,
            GainPattern::MultiLobe {
                sectorized: false,
                ..
            }
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn normalization_is_4pi_for_random_parameters(
            eps in 0.0f64..=1.0,
            m in 0.05f64..8.0,
            lambda in 1.05f64..8.0,
            nu in 0.05f64..=1.0,
            n in 2usize..8,
        ) {
            let spec = QuadratureSpec::default();
            // lambda sharp enough that no two lobe supports touch
            let dirs = fibonacci_sphere(n);
            let v = dirs.vectors();
            let mut min_sep = PI;
            for i in 0..v.len() {
                for j in (i + 1)..v.len() {
                    let d = v[i][0] * v[j][0] + v[i][1] * v[j][1] + v[i][2] * v[j][2];
                    min_sep = min_sep.min(d.clamp(-1.0, 1.0).acos());
                }
            }
            let ml_lambda = lambda
                .max((n as f64 * PI).sqrt() / 3.0 + 0.3)
                .max(PI / min_sep * 1.05);
            let patterns = [
                GainPattern::Cardioid { epsilon: eps },
                GainPattern::Donut { m },
                GainPattern::NarrowLobe { lambda },
                GainPattern::Sector { nu },
                GainPattern::MultiLobe {
                    n, lambda: ml_lambda,
                    directions: dirs.clone(),
                    sectorized: false,
                },
                GainPattern::MultiLobe {
                    n, lambda: ml_lambda,
                    directions: dirs.clone(),
                    sectorized: true,
                },
            ];
            for p in patterns {
                let v = p.verify_normalization(&spec).unwrap();
                prop_assert!(
                    ((v - 4.0 * PI) / (4.0 * PI)).abs() <= 1e-7,
                    "{}: {v}", p.label()
                );
                let s3 = p.s_functional_quadrature(3.0, &spec).unwrap();
                prop_assert!((s3 - 2.0).abs() <= 1e-7, "{}: S_3 = {s3}", p.label());
            }
        }

        #[test]
        fn serde_round_trip(eps in 0.0f64..=1.0, nu in 0.05f64..=1.0) {
            for p in [
                GainPattern::Isotropic,
                GainPattern::Cardioid { epsilon: eps },
                GainPattern::Sector { nu },
            ] {
                let json = serde_json::to_string(&p).unwrap();
                let back: GainPattern = serde_json::from_str(&json).unwrap();
                prop_assert_eq!(back, p);
            }
        }
    }
}
