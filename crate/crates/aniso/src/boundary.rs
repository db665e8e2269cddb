//! Bounded-domain geometry and corner connectivity masses.
//!
//! Near a right-angled corner the connectivity mass depends strongly on the
//! antenna orientation of the cornered node; this module computes the corner
//! gain integral, its minimum over orientations, truncated corner masses, and
//! the multi-sector corner masses in 2D and 3D whose lobes are placed on
//! Thomson-problem configurations.

use crate::analytic::PathLossModel;
use crate::gain::{GainPattern, OrientationSet};
use crate::par;
use crate::specfn::{self, QuadratureSpec};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Simulation/boundary domain: an axis-aligned cuboid or 2D rectangle, with
/// optional periodic (torus) identification of opposite faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Cuboid {
        lengths: [f64; 3],
        #[serde(default)]
        periodic: bool,
    },
    Square2d {
        lengths: [f64; 2],
        #[serde(default)]
        periodic: bool,
    },
}

impl Domain {
    pub fn cube(side: f64, periodic: bool) -> Self {
        Domain::Cuboid {
            lengths: [side; 3],
            periodic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Domain::Cuboid { lengths, .. } => lengths.iter().all(|&l| l > 0.0),
            Domain::Square2d { lengths, .. } => lengths.iter().all(|&l| l > 0.0),
        };
        if !ok {
            return Err(Error::InvalidParameter {
                field: "lengths",
                message: "all domain lengths must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn is_periodic(&self) -> bool {
        match self {
            Domain::Cuboid { periodic, .. } | Domain::Square2d { periodic, .. } => *periodic,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Cuboid { lengths, .. } => lengths.iter().product(),
            Domain::Square2d { lengths, .. } => lengths.iter().product(),
        }
    }

    fn lengths(&self) -> &[f64] {
        match self {
            Domain::Cuboid { lengths, .. } => lengths,
            Domain::Square2d { lengths, .. } => lengths,
        }
    }

    /// Distance from `origin` along `direction` to the first boundary face.
    ///
    /// Returns 0 when the direction points out of the domain. Not defined for
    /// periodic domains.
    pub fn ray_exit_distance(&self, origin: &[f64], direction: &[f64]) -> Result<f64> {
        if self.is_periodic() {
            return Err(Error::Domain(
                "ray_exit_distance is undefined for periodic domains".into(),
            ));
        }
        let lengths = self.lengths();
        if origin.len() != lengths.len() || direction.len() != lengths.len() {
            return Err(Error::Domain(format!(
                "expected dimension {}, got origin {} / direction {}",
                lengths.len(),
                origin.len(),
                direction.len()
            )));
        }
        let eps = 1e-9;
        let mut t_exit = f64::INFINITY;
        for ((&o, &d), &l) in origin.iter().zip(direction).zip(lengths) {
            if o < -eps || o > l + eps {
                return Err(Error::Domain(format!(
                    "origin component {o} outside [0, {l}]"
                )));
            }
            if d.abs() < 1e-15 {
                continue;
            }
            let t = if d > 0.0 { (l - o) / d } else { -o / d };
            t_exit = t_exit.min(t);
        }
        Ok(t_exit.max(0.0))
    }
}

/// A corner boundary component identified by its subtended solid angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerSpec {
    pub omega_b: f64,
}

impl CornerSpec {
    /// Right-angled 3D corner (π/2 steradians).
    pub fn right_corner_3d() -> Self {
        CornerSpec { omega_b: PI / 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_b > 0.0 && self.omega_b <= 4.0 * PI + 1e-12) {
            return Err(Error::InvalidParameter {
                field: "omega_b",
                message: format!("omega_b must lie in (0, 4*pi], got {}", self.omega_b),
            });
        }
        Ok(())
    }
}

/// Search grid over orientations: a latitude/longitude grid on the sphere for
/// rotationally symmetric patterns, or an Euler-angle grid over rotations for
/// multi-lobe configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum OrientationGrid {
    Sphere { theta_step: f64, phi_step: f64 },
    Euler { step: f64 },
}

impl OrientationGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            OrientationGrid::Sphere {
                theta_step,
                phi_step,
            } => *theta_step > 0.0 && *theta_step <= PI && *phi_step > 0.0 && *phi_step <= PI,
            OrientationGrid::Euler { step } => *step > 0.0 && *step <= PI,
        };
        if !ok {
            return Err(Error::InvalidParameter {
                field: "grid",
                message: "orientation grid steps must lie in (0, pi]".into(),
            });
        }
        Ok(())
    }
}

fn unit_from_angles(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Corner gain integral I over the positive octant:
/// ∫₀^{π/2}∫₀^{π/2} sinθ G(χ)^{3/η} dθ dφ, with χ the angle between the
/// node's orientation and the direction (θ, φ).
pub fn corner_gain_integral(
    pattern: &GainPattern,
    orientation: [f64; 3],
    eta: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !pattern.is_rotationally_symmetric() {
        return Err(Error::Domain(
            "corner_gain_integral requires a rotationally symmetric pattern".into(),
        ));
    }
    pattern.validate()?;
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    let v = normalize(orientation);
    let p = 3.0 / eta;
    specfn::integrate_patch(
        |theta, phi| {
            let r = unit_from_angles(theta, phi);
            let chi = dot(&v, &r).clamp(-1.0, 1.0).acos();
            theta.sin() * pattern.symmetric_profile(chi).expect("symmetric").powf(p)
        },
        (0.0, PI / 2.0),
        (0.0, PI / 2.0),
        spec,
    )
}

/// Minimum of the corner gain integral over an orientation grid, refined by
/// one local shrink step around the grid argmin.
pub fn min_corner_gain_integral(
    pattern: &GainPattern,
    eta: f64,
    grid: &OrientationGrid,
    spec: &QuadratureSpec,
) -> Result<(f64, [f64; 3])> {
    grid.validate()?;
    let (theta_step, phi_step) = match grid {
        OrientationGrid::Sphere {
            theta_step,
            phi_step,
        } => (*theta_step, *phi_step),
        OrientationGrid::Euler { .. } => {
            return Err(Error::Domain(
                "min_corner_gain_integral expects a sphere grid".into(),
            ))
        }
    };
    let eval_grid = |t0: f64, t1: f64, p0: f64, p1: f64, ts: f64, ps: f64| -> Result<(f64, f64, f64)> {
        let nt = ((t1 - t0) / ts).ceil() as usize + 1;
        let np = ((p1 - p0) / ps).ceil() as usize + 1;
        let values: Vec<Result<(f64, f64, f64)>> = par::map_range(nt * np, |idx| {
            let it = idx / np;
            let ip = idx % np;
            let theta = (t0 + it as f64 * ts).min(PI).min(t1);
            let phi = p0 + ip as f64 * ps;
            let i = corner_gain_integral(pattern, unit_from_angles(theta, phi), eta, spec)?;
            Ok((i, theta, phi))
        });
        let mut best: Option<(f64, f64, f64)> = None;
        for v in values {
            let v = v?;
            if best.map_or(true, |b| v.0 < b.0) {
                best = Some(v);
            }
        }
        Ok(best.expect("nonempty grid"))
    };
    let coarse = eval_grid(0.0, PI, 0.0, 2.0 * PI, theta_step, phi_step)?;
    // one shrink step around the coarse argmin
    let fine = eval_grid(
        (coarse.1 - theta_step).max(0.0),
        (coarse.1 + theta_step).min(PI),
        coarse.2 - phi_step,
        coarse.2 + phi_step,
        theta_step / 4.0,
        phi_step / 4.0,
    )?;
    let best = if fine.0 < coarse.0 { fine } else { coarse };
    Ok((best.0, unit_from_angles(best.1, best.2)))
}

/// Connectivity mass of a right-angled corner.
///
/// With `truncation: None` the radial integral extends to infinity and the
/// mass separates into (Γ(3/η)/(2ηβ^{3/η})) · I_{Gᵢ} · S_η[G_j]. A finite
/// truncation is the cube side: each radial integral is capped at the ray
/// exit distance from the corner of that cube, evaluated through the lower
/// incomplete gamma function.
pub fn corner_mass(
    pattern_i: &GainPattern,
    orientation_i: [f64; 3],
    pattern_j: &GainPattern,
    model: &PathLossModel,
    truncation: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    model.validate()?;
    pattern_j.validate()?;
    if !pattern_i.is_rotationally_symmetric() {
        return Err(Error::Domain(
            "corner_mass requires a rotationally symmetric pattern_i".into(),
        ));
    }
    let eta = model.eta;
    let p = 3.0 / eta;
    match truncation {
        None => {
            let i_g = corner_gain_integral(pattern_i, orientation_i, eta, spec)?;
            let s_j = match pattern_j.s_functional_closed(eta)? {
                Some(v) => v,
                None => pattern_j.s_functional_quadrature(eta, spec)?,
            };
            Ok(model.radial_factor() / 2.0 * i_g * s_j)
        }
        Some(side) => {
            if !(side > 0.0) {
                return Err(Error::Domain(format!(
                    "truncation cube side must be positive, got {side}"
                )));
            }
            let v = normalize(orientation_i);
            let s = 3.0 / eta;
            let gamma_of = |x: f64| {
                specfn::lower_incomplete_gamma(s, x).expect("valid incomplete gamma arguments")
            };
            let patch = |g_j: f64| -> Result<f64> {
                specfn::integrate_patch(
                    |theta, phi| {
                        let r = unit_from_angles(theta, phi);
                        let chi = dot(&v, &r).clamp(-1.0, 1.0).acos();
                        let g_i = pattern_i.symmetric_profile(chi).expect("symmetric");
                        let g = g_i * g_j;
                        if g <= 1e-300 {
                            return 0.0;
                        }
                        // exit distance from the corner along (theta, phi)
                        let max_c = r[0].max(r[1]).max(r[2]);
                        let exit = side / max_c;
                        let x = model.beta * exit.powf(eta) / g;
                        theta.sin() * g.powf(p) * gamma_of(x)
                    },
                    (0.0, PI / 2.0),
                    (0.0, PI / 2.0),
                    spec,
                )
            };
            let angular = if matches!(pattern_j, GainPattern::Isotropic) {
                2.0 * patch(1.0)?
            } else {
                let failure = std::cell::RefCell::new(None);
                let outer = specfn::integrate_1d(
                    |vt: f64| {
                        let g_j = pattern_j.symmetric_profile(vt).unwrap_or(0.0);
                        match patch(g_j) {
                            Ok(val) => vt.sin() * val,
                            Err(e) => {
                                failure.borrow_mut().get_or_insert(e);
                                0.0
                            }
                        }
                    },
                    0.0,
                    PI,
                    spec,
                );
                if let Some(e) = failure.into_inner() {
                    return Err(e);
                }
                outer?
            };
            Ok(angular / (2.0 * eta * model.beta.powf(p)))
        }
    }
}

/// Cap gain of the sectorized multi-lobe model: g = csc²(π/6λ)/n, with cap
/// half-angle π/(3λ) so that n caps integrate to 4π.
fn cap_gain(n: usize, lambda: f64) -> f64 {
    let s = (PI / (6.0 * lambda)).sin();
    1.0 / (n as f64 * s * s)
}

fn validate_multisector_3d(n: usize, lambda: f64, directions: &OrientationSet) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            field: "n",
            message: format!("multi-sector n must be at least 2, got {n}"),
        });
    }
    let lambda_min = (n as f64 * PI).sqrt() / 3.0;
    if lambda < lambda_min - 1e-12 {
        return Err(Error::LobeOverlap(format!(
            "lambda = {lambda} below the overlap bound sqrt(n*pi)/3 = {lambda_min:.6}"
        )));
    }
    if directions.len() != n {
        return Err(Error::InvalidParameter {
            field: "orientations",
            message: format!("expected {n} lobe directions, got {}", directions.len()),
        });
    }
    // centers must at least clear each other's caps
    let min_sep = PI / (3.0 * lambda);
    let v = directions.vectors();
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            let ang = dot(&v[i], &v[j]).clamp(-1.0, 1.0).acos();
            if ang <= min_sep {
                return Err(Error::LobeOverlap(format!(
                    "lobe centers {i} and {j} separated by {ang:.4} rad <= pi/(3*lambda) = {min_sep:.4}"
                )));
            }
        }
    }
    Ok(())
}

fn multisector_sum_3d(
    directions: &[[f64; 3]],
    s: f64,
    beta: f64,
    eta: f64,
    cube_side: f64,
    g: f64,
) -> f64 {
    let mut sum = 0.0;
    for d in directions {
        if d[0] < 0.0 || d[1] < 0.0 || d[2] < 0.0 {
            continue; // lobe points outside the domain: exit distance 0
        }
        let max_c = d[0].max(d[1]).max(d[2]);
        let l_hat = cube_side / max_c;
        let x = beta * l_hat.powf(eta) / (g * g);
        sum += specfn::lower_incomplete_gamma(s, x).expect("valid arguments");
    }
    sum
}

/// Corner connectivity mass of an n-lobe sectorized pattern at a cube corner:
/// (4π g^{6/η−2} / (n η β^{3/η})) Σₖ γ(3/η, β L̂ₖ^η / g²).
pub fn multisector_corner_mass_3d(
    n: usize,
    lambda: f64,
    orientations: &OrientationSet,
    model: &PathLossModel,
    cube_side: f64,
) -> Result<f64> {
    model.validate()?;
    validate_multisector_3d(n, lambda, orientations)?;
    if !(cube_side > 0.0) {
        return Err(Error::Domain(format!(
            "cube_side must be positive, got {cube_side}"
        )));
    }
    let eta = model.eta;
    let g = cap_gain(n, lambda);
    let sum = multisector_sum_3d(
        orientations.vectors(),
        3.0 / eta,
        model.beta,
        eta,
        cube_side,
        g,
    );
    let prefactor =
        4.0 * PI * g.powf(6.0 / eta - 2.0) / (n as f64 * eta * model.beta.powf(3.0 / eta));
    Ok(prefactor * sum)
}

/// Result of the rotation search for the minimal multi-sector corner mass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MultisectorMin {
    pub value: f64,
    /// z-y-z Euler angles of the argmin rotation applied to the base set.
    pub rotation: [f64; 3],
    /// Best signed clearance found: how far every lobe can simultaneously be
    /// kept out of the octant (negative when some lobe always points in).
    pub clearance: f64,
    /// Some rotation (grid point or refined witness) leaves every lobe
    /// pointing out of the octant.
    pub blind_spot: bool,
    /// Stronger geometric verdict: some rotation keeps every lobe clear of
    /// the octant by more than the cap-radius margin π/(2λ).
    pub margin_blind_spot: bool,
}

fn rot_z(v: [f64; 3], c: f64, s: f64) -> [f64; 3] {
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

fn rot_y(v: [f64; 3], c: f64, s: f64) -> [f64; 3] {
    [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
}

/// Angular distance from a unit vector to the closed positive octant of the
/// sphere: arccos of the norm of the componentwise-clamped vector.
fn octant_angular_distance(v: &[f64; 3]) -> f64 {
    let cx = v[0].max(0.0);
    let cy = v[1].max(0.0);
    let cz = v[2].max(0.0);
    let norm = (cx * cx + cy * cy + cz * cz).sqrt();
    if norm <= 0.0 {
        PI / 2.0
    } else {
        norm.min(1.0).acos()
    }
}

/// Minimum of [`multisector_corner_mass_3d`] over rigid rotations of the base
/// lobe configuration, searched on a z-y-z Euler grid.
pub fn min_multisector_corner_mass(
    n: usize,
    lambda: f64,
    model: &PathLossModel,
    cube_side: f64,
    euler_step: f64,
    base: &OrientationSet,
) -> Result<MultisectorMin> {
    model.validate()?;
    validate_multisector_3d(n, lambda, base)?;
    if !(euler_step > 0.0 && euler_step <= PI) {
        return Err(Error::InvalidParameter {
            field: "euler_step",
            message: format!("euler step must lie in (0, pi], got {euler_step}"),
        });
    }
    let eta = model.eta;
    let g = cap_gain(n, lambda);
    let s = 3.0 / eta;
    let prefactor =
        4.0 * PI * g.powf(6.0 / eta - 2.0) / (n as f64 * eta * model.beta.powf(3.0 / eta));
    let margin = PI / (2.0 * lambda);
    let na = (2.0 * PI / euler_step).ceil() as usize;
    let nb = (PI / euler_step).ceil() as usize + 1;
    let nc = (2.0 * PI / euler_step).ceil() as usize;
    let base_vectors: Vec<[f64; 3]> = base.vectors().to_vec();

    // R = Rz(alpha) Ry(beta) Rz(gamma); the alpha rotation is applied last so
    // the inner loop only re-rotates about z
    let partials: Vec<(f64, [f64; 3], f64, [f64; 3])> = par::map_range(nc, |ic| {
        let gamma = ic as f64 * euler_step;
        let (sg, cg) = gamma.sin_cos();
        let after_gamma: Vec<[f64; 3]> = base_vectors.iter().map(|&v| rot_z(v, cg, sg)).collect();
        let mut local_min = f64::INFINITY;
        let mut local_arg = [0.0f64; 3];
        let mut local_xi = f64::NEG_INFINITY;
        let mut local_xi_arg = [0.0f64; 3];
        let mut rotated: Vec<[f64; 3]> = vec![[0.0; 3]; base_vectors.len()];
        for ib in 0..nb {
            let beta_ang = (ib as f64 * euler_step).min(PI);
            let (sb, cb) = beta_ang.sin_cos();
            let after_beta: Vec<[f64; 3]> =
                after_gamma.iter().map(|&v| rot_y(v, cb, sb)).collect();
            for ia in 0..na {
                let alpha = ia as f64 * euler_step;
                let (sa, ca) = alpha.sin_cos();
                for (dst, &src) in rotated.iter_mut().zip(&after_beta) {
                    *dst = rot_z(src, ca, sa);
                }
                let sum = multisector_sum_3d(&rotated, s, model.beta, eta, cube_side, g);
                let value = prefactor * sum;
                if value < local_min {
                    local_min = value;
                    local_arg = [alpha, beta_ang, gamma];
                }
                let xi = config_clearance(&rotated);
                if xi > local_xi {
                    local_xi = xi;
                    local_xi_arg = [alpha, beta_ang, gamma];
                }
            }
        }
        (local_min, local_arg, local_xi, local_xi_arg)
    });

    let mut value = f64::INFINITY;
    let mut rotation = [0.0f64; 3];
    let mut best_xi = f64::NEG_INFINITY;
    let mut xi_arg = [0.0f64; 3];
    for (v, arg, xi, xarg) in partials {
        if v < value {
            value = v;
            rotation = arg;
        }
        if xi > best_xi {
            best_xi = xi;
            xi_arg = xarg;
        }
    }

    // the blind-spot set can be thinner than the grid: refine the clearance
    // maximum locally before giving a verdict
    let eval_xi = |angles: [f64; 3]| -> f64 {
        let (sa, ca) = angles[0].sin_cos();
        let (sb, cb) = angles[1].sin_cos();
        let (sg, cg) = angles[2].sin_cos();
        let rotated: Vec<[f64; 3]> = base_vectors
            .iter()
            .map(|&v| rot_z(rot_y(rot_z(v, cg, sg), cb, sb), ca, sa))
            .collect();
        config_clearance(&rotated)
    };
    let mut range = euler_step;
    for _ in 0..4 {
        let step = range / 4.0;
        let center = xi_arg;
        for da in -4..=4i32 {
            for db in -4..=4i32 {
                for dc in -4..=4i32 {
                    let cand = [
                        center[0] + da as f64 * step,
                        center[1] + db as f64 * step,
                        center[2] + dc as f64 * step,
                    ];
                    let xi = eval_xi(cand);
                    if xi > best_xi {
                        best_xi = xi;
                        xi_arg = cand;
                    }
                }
            }
        }
        range = step;
    }
    // a witness is only accepted when the whole configuration clears the
    // octant by a resolvable angle, not by floating-point hairs on the
    // octant boundary
    let clearance_floor = 1e-4;
    let blind_spot = value == 0.0 || best_xi > clearance_floor;
    if blind_spot && value > 0.0 {
        // witness rotation found only by refinement
        value = 0.0;
        rotation = xi_arg;
    }
    Ok(MultisectorMin {
        value,
        rotation,
        clearance: best_xi,
        blind_spot,
        margin_blind_spot: best_xi > margin,
    })
}

/// Signed clearance of a whole configuration from the positive octant:
/// positive when every lobe points outside it (minimum of the per-lobe
/// angular distances), negative when some lobe points inside (deepest
/// inward component).
fn config_clearance(directions: &[[f64; 3]]) -> f64 {
    let mut xi = f64::INFINITY;
    for d in directions {
        let out = octant_angular_distance(d);
        let z = if out > 0.0 {
            out
        } else {
            -d[0].min(d[1]).min(d[2]).clamp(-1.0, 1.0).asin()
        };
        xi = xi.min(z);
    }
    xi
}

/// 2D analogue at the right-angled corner of a square: lobes at angles
/// 2πk/n + x, sector gain g = 3λ/n of half-width π/(3λ).
pub fn multisector_corner_mass_2d(
    n: usize,
    lambda: f64,
    offset_x: f64,
    model: &PathLossModel,
    square_side: f64,
) -> Result<f64> {
    model.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter {
            field: "n",
            message: format!("multi-sector n must be at least 2, got {n}"),
        });
    }
    if lambda < 3.0 * n as f64 - 1e-12 {
        return Err(Error::LobeOverlap(format!(
            "2D lobes require lambda >= 3n = {}, got {lambda}",
            3 * n
        )));
    }
    if !(square_side > 0.0) {
        return Err(Error::Domain(format!(
            "square_side must be positive, got {square_side}"
        )));
    }
    let eta = model.eta;
    let g = 3.0 * lambda / n as f64;
    let s = 2.0 / eta;
    let mut sum = 0.0;
    for k in 0..n {
        let a = (2.0 * PI * k as f64 / n as f64 + offset_x).rem_euclid(2.0 * PI);
        let (sa, ca) = a.sin_cos();
        if ca < 0.0 || sa < 0.0 {
            continue; // lobe points outside the quadrant
        }
        let l_hat = square_side / ca.max(sa);
        let x = model.beta * l_hat.powf(eta) / (g * g);
        sum += specfn::lower_incomplete_gamma(s, x)?;
    }
    let prefactor =
        2.0 * PI * g.powf(4.0 / eta - 2.0) / (n as f64 * eta * model.beta.powf(2.0 / eta));
    Ok(prefactor * sum)
}

/// Minimum of the 2D multi-sector corner mass over the lobe offset
/// x ∈ [0, 2π/n), by dense grid plus local refinement.
pub fn min_multisector_corner_mass_2d(
    n: usize,
    lambda: f64,
    model: &PathLossModel,
    square_side: f64,
) -> Result<(f64, f64)> {
    const GRID: usize = 4096;
    let period = 2.0 * PI / n as f64;
    let step = period / GRID as f64;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..GRID {
        let x = i as f64 * step;
        let v = multisector_corner_mass_2d(n, lambda, x, model, square_side)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    // local refinement around the grid argmin
    let fine = step / 64.0;
    for i in 0..128 {
        let x = (best.1 - step + i as f64 * fine).rem_euclid(period);
        let v = multisector_corner_mass_2d(n, lambda, x, model, square_side)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    Ok(best)
}

/// Coulomb energy Σ_{i<j} 1/|xᵢ−xⱼ| of a point set on the unit sphere.
pub fn coulomb_energy(points: &OrientationSet) -> Result<f64> {
    let v = points.vectors();
    if v.len() < 2 {
        return Err(Error::Domain(
            "coulomb_energy requires at least 2 points".into(),
        ));
    }
    let mut energy = 0.0;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            let d = [v[i][0] - v[j][0], v[i][1] - v[j][1], v[i][2] - v[j][2]];
            let r = dot(&d, &d).sqrt();
            if r < 1e-9 {
                return Err(Error::Domain(format!("points {i} and {j} coincide")));
            }
            energy += 1.0 / r;
        }
    }
    Ok(energy)
}

fn thomson_energy_and_forces(x: &[[f64; 3]], forces: &mut [[f64; 3]]) -> f64 {
    for f in forces.iter_mut() {
        *f = [0.0; 3];
    }
    let mut energy = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let d = [x[i][0] - x[j][0], x[i][1] - x[j][1], x[i][2] - x[j][2]];
            let r2 = dot(&d, &d).max(1e-18);
            let r = r2.sqrt();
            energy += 1.0 / r;
            let coef = 1.0 / (r2 * r);
            for a in 0..3 {
                forces[i][a] += coef * d[a];
                forces[j][a] -= coef * d[a];
            }
        }
    }
    energy
}

/// One projected-gradient descent run from the given start configuration.
/// Returns (energy, max tangential force norm).
fn thomson_descend(x: &mut Vec<[f64; 3]>, tol: f64, max_iters: usize) -> (f64, f64) {
    let n = x.len();
    let mut forces = vec![[0.0f64; 3]; n];
    let mut energy = thomson_energy_and_forces(x, &mut forces);
    let mut step = 0.05;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..max_iters {
        // tangential components of the repulsive forces
        let mut tangents = vec![[0.0f64; 3]; n];
        grad_norm = 0.0;
        for i in 0..n {
            let radial = dot(&forces[i], &x[i]);
            for a in 0..3 {
                tangents[i][a] = forces[i][a] - radial * x[i][a];
            }
            grad_norm = grad_norm.max(dot(&tangents[i], &tangents[i]).sqrt());
        }
        if grad_norm <= tol {
            break;
        }
        // backtracking move along the tangential forces
        let mut accepted = false;
        while step > 1e-16 {
            let candidate: Vec<[f64; 3]> = (0..n)
                .map(|i| {
                    normalize([
                        x[i][0] + step * tangents[i][0],
                        x[i][1] + step * tangents[i][1],
                        x[i][2] + step * tangents[i][2],
                    ])
                })
                .collect();
            let mut cand_forces = vec![[0.0f64; 3]; n];
            let cand_energy = thomson_energy_and_forces(&candidate, &mut cand_forces);
            if cand_energy < energy {
                *x = candidate;
                forces = cand_forces;
                energy = cand_energy;
                step *= 1.2;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (energy, grad_norm)
}

/// Minimal-energy configuration of n repelling points on the unit sphere,
/// by projected gradient descent with random restarts. Deterministic for a
/// given seed regardless of worker count.
pub fn thomson_points(n: usize, restarts: usize, tol: f64, seed: u64) -> Result<OrientationSet> {
    if n < 2 {
        return Err(Error::Domain(format!("thomson_points requires n >= 2, got {n}")));
    }
    if restarts < 1 {
        return Err(Error::Domain("at least one restart is required".into()));
    }
    let runs: Vec<(f64, f64, Vec<[f64; 3]>)> = par::map_range(restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(r as u64 + 1)));
        let mut x: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                let rad = (1.0 - z * z).sqrt();
                [rad * phi.cos(), rad * phi.sin(), z]
            })
            .collect();
        let (energy, grad_norm) = thomson_descend(&mut x, tol, 60_000);
        (energy, grad_norm, x)
    });
    let mut best: Option<&(f64, f64, Vec<[f64; 3]>)> = None;
    for run in &runs {
        if run.1 <= tol && best.map_or(true, |b| run.0 < b.0) {
            best = Some(run);
        }
    }
    match best {
        Some((_, _, points)) => OrientationSet::new(points.clone()),
        None => Err(Error::OptimizationFailed(format!(
            "no restart reached gradient tolerance {tol} for n = {n}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const DIAG: f64 = 0.577_350_269_189_625_7; // 1/sqrt(3)

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn model(eta: f64, beta: f64) -> PathLossModel {
        PathLossModel { eta, beta }
    }

    #[test]
    fn ray_exit_examples() {
        let cube = Domain::cube(1.0, false);
        let corner = [0.0, 0.0, 0.0];
        assert_relative_eq!(
            cube.ray_exit_distance(&corner, &[1.0, 0.0, 0.0]).unwrap(),
            1.0
        );
        assert_relative_eq!(
            cube.ray_exit_distance(&corner, &[DIAG, DIAG, DIAG]).unwrap(),
            3f64.sqrt(),
            max_relative = 1e-12
        );
        assert_eq!(
            cube.ray_exit_distance(&corner, &[-1.0, 0.0, 0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn ray_exit_rejects_periodic_and_bad_origin() {
        let torus = Domain::cube(1.0, true);
        assert!(torus.ray_exit_distance(&[0.0; 3], &[1.0, 0.0, 0.0]).is_err());
        let cube = Domain::cube(1.0, false);
        assert!(cube.ray_exit_distance(&[2.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn ray_exit_octant_bounds_and_symmetry() {
        let cube = Domain::cube(1.0, false);
        let corner = [0.0; 3];
        for (a, b) in [(0.3, 0.9), (0.7, 0.2), (0.05, 0.05)] {
            let n = (1.0f64 + a * a + b * b).sqrt();
            let d = [1.0 / n, a / n, b / n];
            let l = cube.ray_exit_distance(&corner, &d).unwrap();
            assert!(l > 0.0 && l <= 3f64.sqrt() + 1e-12);
            // invariant under permuting the axes
            let d2 = [d[2], d[0], d[1]];
            let l2 = cube.ray_exit_distance(&corner, &d2).unwrap();
            assert_relative_eq!(l, l2, max_relative = 1e-12);
        }
    }

    #[test]
    fn corner_integral_isotropic() {
        let i = corner_gain_integral(&GainPattern::Isotropic, [0.0, 0.0, 1.0], 3.0, &spec())
            .unwrap();
        assert_relative_eq!(i, PI / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn corner_integral_cardioid_diagonal() {
        let c = GainPattern::Cardioid { epsilon: 1.0 };
        let outward = corner_gain_integral(&c, [-DIAG, -DIAG, -DIAG], 3.0, &spec()).unwrap();
        assert_relative_eq!(
            outward,
            PI / 2.0 - PI * 3f64.sqrt() / 4.0,
            max_relative = 1e-7
        );
        let inward = corner_gain_integral(&c, [DIAG, DIAG, DIAG], 3.0, &spec()).unwrap();
        assert!(inward > outward);
    }

    #[test]
    fn min_corner_integral_isotropic_is_constant() {
        let grid = OrientationGrid::Sphere {
            theta_step: PI / 4.0,
            phi_step: PI / 4.0,
        };
        let (v, _) =
            min_corner_gain_integral(&GainPattern::Isotropic, 3.0, &grid, &spec()).unwrap();
        assert_relative_eq!(v, PI / 2.0, max_relative = 1e-8);
    }

    #[test]
    fn min_corner_integral_cardioid_bound() {
        // pointwise bound: I >= (pi/2)(1-eps)^{3/eta}, strict on a finite grid
        let grid = OrientationGrid::Sphere {
            theta_step: PI / 8.0,
            phi_step: PI / 8.0,
        };
        let c = GainPattern::Cardioid { epsilon: 0.5 };
        let (v, _) = min_corner_gain_integral(&c, 2.0, &grid, &spec()).unwrap();
        let bound = (PI / 2.0) * 0.5f64.powf(1.5);
        assert!(v > bound, "min {v} vs bound {bound}");
    }

    #[test]
    fn min_corner_integral_cardioid_full_deformation() {
        let grid = OrientationGrid::Sphere {
            theta_step: PI / 12.0,
            phi_step: PI / 12.0,
        };
        let c = GainPattern::Cardioid { epsilon: 1.0 };
        let (v, arg) = min_corner_gain_integral(&c, 3.0, &grid, &spec()).unwrap();
        assert_relative_eq!(v, PI / 2.0 - PI * 3f64.sqrt() / 4.0, max_relative = 1e-2);
        // argmin near the inward diagonal's antipode
        assert!(arg[0] < 0.0 && arg[1] < 0.0 && arg[2] < 0.0, "argmin {arg:?}");
    }

    #[test]
    fn corner_mass_untruncated_examples() {
        let iso = GainPattern::Isotropic;
        let m = corner_mass(&iso, [0.0, 0.0, 1.0], &iso, &model(3.0, 1.0), None, &spec())
            .unwrap();
        assert_relative_eq!(m, PI / 6.0, max_relative = 1e-8);
    }

    #[test]
    fn corner_mass_separation_check() {
        // truncation None equals the explicit product of its factors
        let c = GainPattern::Cardioid { epsilon: 0.6 };
        let d = GainPattern::Donut { m: 2.0 };
        let mm = model(2.5, 0.8);
        let orient = [DIAG, -DIAG, DIAG];
        let m = corner_mass(&c, orient, &d, &mm, None, &spec()).unwrap();
        let i_g = corner_gain_integral(&c, orient, mm.eta, &spec()).unwrap();
        let s_j = d.s_functional_closed(mm.eta).unwrap().unwrap();
        assert_relative_eq!(m, mm.radial_factor() / 2.0 * i_g * s_j, max_relative = 1e-8);
    }

    #[test]
    fn corner_mass_truncation_monotone_and_convergent() {
        let iso = GainPattern::Isotropic;
        let mm = model(3.0, 1.0);
        let spec = spec();
        let m1 = corner_mass(&iso, [0.0, 0.0, 1.0], &iso, &mm, Some(0.5), &spec).unwrap();
        let m2 = corner_mass(&iso, [0.0, 0.0, 1.0], &iso, &mm, Some(1.0), &spec).unwrap();
        let m3 = corner_mass(&iso, [0.0, 0.0, 1.0], &iso, &mm, Some(2.0), &spec).unwrap();
        assert!(m1 < m2 && m2 < m3);
        // r0 = beta^{-1/eta} = 1; at 10 r0 the truncated mass reaches the
        // untruncated product form
        let far = corner_mass(&iso, [0.0, 0.0, 1.0], &iso, &mm, Some(10.0), &spec).unwrap();
        let inf = corner_mass(&iso, [0.0, 0.0, 1.0], &iso, &mm, None, &spec).unwrap();
        assert!((far - inf).abs() < 1e-6, "{far} vs {inf}");
    }

    #[test]
    fn multisector_octahedral_geometry() {
        // +-axis lobes at the corner: 3 lobes see the cube, 3 point outside
        let dirs = OrientationSet::new(vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ])
        .unwrap();
        let n = 6;
        let lambda = (30.0 * PI).sqrt() / 3.0;
        let mm = model(2.0, 1.0);
        let m = multisector_corner_mass_3d(n, lambda, &dirs, &mm, 1.0).unwrap();
        let g = cap_gain(n, lambda);
        let term = specfn::lower_incomplete_gamma(1.5, 1.0 / (g * g)).unwrap();
        let expected = 4.0 * PI * g.powf(1.0) / (n as f64 * 2.0) * 3.0 * term;
        assert_relative_eq!(m, expected, max_relative = 1e-12);
    }

    #[test]
    fn multisector_all_outside_is_zero() {
        let dirs = OrientationSet::new(vec![
            [-DIAG, -DIAG, -DIAG],
            [-1.0, 0.1, -0.2],
        ])
        .unwrap();
        let m = multisector_corner_mass_3d(2, 3.0, &dirs, &model(2.0, 1.0), 1.0).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn multisector_gamma_limit() {
        // huge cube: every incomplete gamma saturates at Gamma(3/eta)
        let dirs = OrientationSet::new(vec![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [DIAG, DIAG, DIAG],
        ])
        .unwrap();
        let n = 4;
        let lambda = 4.0;
        let mm = model(2.0, 1.0);
        let m = multisector_corner_mass_3d(n, lambda, &dirs, &mm, 1e6).unwrap();
        let g = cap_gain(n, lambda);
        let full = 4.0 * PI * g.powf(1.0) / (n as f64 * 2.0)
            * n as f64
            * specfn::gamma_fn(1.5).unwrap();
        assert_relative_eq!(m, full, max_relative = 1e-9);
    }

    #[test]
    fn multisector_overlap_rejected() {
        let dirs = fib(8);
        let r = multisector_corner_mass_3d(8, 1.0, &dirs, &model(2.0, 1.0), 1.0);
        assert!(matches!(r, Err(Error::LobeOverlap(_))));
    }

    fn fib(n: usize) -> OrientationSet {
        crate::gain::fibonacci_sphere(n)
    }

    #[test]
    fn multisector_2d_examples() {
        let mm = model(2.0, 1.0);
        // lobes at 3pi/4 and 7pi/4: both outside the positive quadrant
        let m = multisector_corner_mass_2d(2, 6.0, 3.0 * PI / 4.0, &mm, 1.0).unwrap();
        assert_eq!(m, 0.0);
        // n=4, x=pi/4: exactly one lobe inside the quadrant, along the diagonal
        let n = 4;
        let lambda = 12.0;
        let g = 3.0 * lambda / n as f64;
        let m = multisector_corner_mass_2d(n, lambda, PI / 4.0, &mm, 1.0).unwrap();
        let l_hat: f64 = 2f64.sqrt();
        let expected = 2.0 * PI * g.powf(0.0) / (n as f64 * 2.0)
            * specfn::lower_incomplete_gamma(1.0, l_hat.powi(2) / (g * g)).unwrap();
        assert_relative_eq!(m, expected, max_relative = 1e-12);
        // gamma -> Gamma limit
        let m = multisector_corner_mass_2d(n, lambda, PI / 4.0, &mm, 1e9).unwrap();
        let expected = 2.0 * PI / (n as f64 * 2.0) * specfn::gamma_fn(1.0).unwrap();
        assert_relative_eq!(m, expected, max_relative = 1e-9);
    }

    #[test]
    fn multisector_2d_overlap_rejected() {
        let r = multisector_corner_mass_2d(4, 10.0, 0.0, &model(2.0, 1.0), 1.0);
        assert!(matches!(r, Err(Error::LobeOverlap(_))));
    }

    #[test]
    fn thomson_antipodal_pair() {
        let pts = thomson_points(2, 4, 1e-6, 7).unwrap();
        let v = pts.vectors();
        assert_relative_eq!(dot(&v[0], &v[1]), -1.0, epsilon = 1e-7);
        assert_relative_eq!(coulomb_energy(&pts).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn thomson_tetrahedron() {
        let pts = thomson_points(4, 8, 1e-6, 11).unwrap();
        let energy = coulomb_energy(&pts).unwrap();
        assert_relative_eq!(energy, 3.674_234_614_174_767, epsilon = 1e-6);
        let v = pts.vectors();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_relative_eq!(dot(&v[i], &v[j]), -1.0 / 3.0, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn equatorial_square_beats_nothing() {
        // planar square has strictly higher energy than the tetrahedron
        let square = OrientationSet::new(vec![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ])
        .unwrap();
        let e = coulomb_energy(&square).unwrap();
        assert_relative_eq!(e, 2.0 * 2f64.sqrt() + 1.0, epsilon = 1e-12);
        assert!(e > 3.674_235);
    }

    #[test]
    fn coulomb_coincident_rejected() {
        let pts = OrientationSet::new(vec![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(coulomb_energy(&pts).is_err());
    }

    #[test]
    fn thomson_energy_rotation_invariant() {
        let pts = thomson_points(5, 6, 1e-6, 3).unwrap();
        let e = coulomb_energy(&pts).unwrap();
        let (sr, cr) = 0.7f64.sin_cos();
        let rotated = OrientationSet::new(
            pts.vectors().iter().map(|&v| rot_z(v, cr, sr)).collect(),
        )
        .unwrap();
        assert_relative_eq!(coulomb_energy(&rotated).unwrap(), e, max_relative = 1e-12);
    }

    #[test]
    fn euler_min_rediscovers_same_minimum_after_pre_rotation() {
        // coarse grid for speed; the minimum must be stable under pre-rotating
        // the base configuration
        let base = thomson_points(6, 6, 1e-6, 5).unwrap();
        let mm = model(2.0, 1.0);
        let lambda = (30.0 * PI).sqrt() / 3.0;
        let step = 12f64.to_radians();
        let a = min_multisector_corner_mass(6, lambda, &mm, 1.0, step, &base).unwrap();
        let (sr, cr) = 0.41f64.sin_cos();
        let pre = OrientationSet::new(
            base.vectors().iter().map(|&v| rot_y(v, cr, sr)).collect(),
        )
        .unwrap();
        let b = min_multisector_corner_mass(6, lambda, &mm, 1.0, step, &pre).unwrap();
        // n = 6 has a blind spot, so both searches should bottom out at zero
        assert_eq!(a.value, 0.0);
        assert_eq!(b.value, 0.0);
        assert!(a.blind_spot && b.blind_spot);
    }
}
