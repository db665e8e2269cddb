//! Seeded Monte Carlo simulator for soft-link random graphs.
//!
//! Each trial places nodes uniformly in the domain, draws independent random
//! orientations, links every unordered pair with probability
//! exp(−βr^η/(GᵢGⱼ)), and reports graph observables. Every trial is a pure
//! function of (master_seed, trial_index), so ensembles are reproducible
//! bit-for-bit regardless of the worker count.

use crate::analytic::PathLossModel;
use crate::boundary::Domain;
use crate::gain::GainPattern;
use crate::par;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Full configuration of a Monte Carlo ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub domain: Domain,
    pub n_nodes: usize,
    pub model: PathLossModel,
    pub pattern: GainPattern,
    /// Receive pattern when it differs from the transmit pattern.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_rx: Option<GainPattern>,
    pub trials: usize,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.model.validate()?;
        self.pattern.validate()?;
        if let Some(rx) = &self.pattern_rx {
            rx.validate()?;
        }
        if self.n_nodes < 2 {
            return Err(Error::InvalidParameter {
                field: "n_nodes",
                message: format!("need at least 2 nodes, got {}", self.n_nodes),
            });
        }
        if self.trials < 1 {
            return Err(Error::InvalidParameter {
                field: "trials",
                message: "need at least one trial".into(),
            });
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        self.n_nodes as f64 / self.domain.volume()
    }

    fn rx_pattern(&self) -> &GainPattern {
        self.pattern_rx.as_ref().unwrap_or(&self.pattern)
    }
}

/// Orientation state of one node: a boresight axis for rotationally
/// symmetric patterns, or a full body-frame rotation for multi-lobe sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeOrientation {
    Axis([f64; 3]),
    /// Row-major rotation matrix mapping world frame to body frame.
    Rotation([[f64; 3]; 3]),
}

impl NodeOrientation {
    /// Gain of `pattern` toward the world-frame unit direction `d`.
    fn gain_toward(&self, pattern: &GainPattern, d: [f64; 3]) -> f64 {
        match self {
            NodeOrientation::Axis(v) => {
                let c = (v[0] * d[0] + v[1] * d[1] + v[2] * d[2]).clamp(-1.0, 1.0);
                pattern.symmetric_profile(c.acos()).unwrap_or(0.0)
            }
            NodeOrientation::Rotation(r) => {
                let body = [
                    r[0][0] * d[0] + r[0][1] * d[1] + r[0][2] * d[2],
                    r[1][0] * d[0] + r[1][1] * d[1] + r[1][2] * d[2],
                    r[2][0] * d[0] + r[2][1] * d[1] + r[2][2] * d[2],
                ];
                pattern.gain_at(body)
            }
        }
    }
}

/// One placed network: positions and per-node orientations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSample {
    pub positions: Vec<Vec<f64>>,
    pub orientations: Vec<NodeOrientation>,
}

/// Undirected simple graph over n nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Observables of one sampled graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub mean_degree: f64,
    pub degree_histogram: Vec<usize>,
    pub isolated_fraction: f64,
    pub fully_connected: bool,
}

/// Trial-averaged observables with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub trials: usize,
    pub mean_degree: f64,
    pub mean_degree_stderr: f64,
    pub isolated_fraction: f64,
    pub isolated_fraction_stderr: f64,
    pub full_connectivity_probability: f64,
    pub full_connectivity_stderr: f64,
    /// Trial-summed degree histogram.
    pub degree_histogram: Vec<usize>,
}

const STREAM_POSITIONS: u64 = 0;
const STREAM_ORIENTATIONS: u64 = 1;
const STREAM_LINKS: u64 = 2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream RNG derived from (master_seed, trial, stream); any (trial, stream)
/// pair gets an independent generator, so trials can run in any order.
fn derive_rng(master_seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mixed = splitmix(splitmix(master_seed ^ trial.wrapping_mul(0xd134_2543_de82_ef95)) ^ stream);
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix(mixed.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn random_axis(rng: &mut impl Rng) -> [f64; 3] {
    let cos_t: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let sin_t = (1.0 - cos_t * cos_t).sqrt();
    [sin_t * phi.cos(), sin_t * phi.sin(), cos_t]
}

/// Uniform random rotation from a uniform unit quaternion.
fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let u1: f64 = rng.gen_range(0.0..1.0);
    let u2: f64 = rng.gen_range(0.0..2.0 * PI);
    let u3: f64 = rng.gen_range(0.0..2.0 * PI);
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let (w, x, y, z) = (a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos());
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn domain_lengths(domain: &Domain) -> Vec<f64> {
    match domain {
        Domain::Cuboid { lengths, .. } => lengths.to_vec(),
        Domain::Square2d { lengths, .. } => lengths.to_vec(),
    }
}

/// Place nodes and draw orientations for one trial.
pub fn sample_network(config: &SimConfig, trial_index: u64) -> Result<NetworkSample> {
    config.validate()?;
    let lengths = domain_lengths(&config.domain);
    let mut pos_rng = derive_rng(config.master_seed, trial_index, STREAM_POSITIONS);
    let positions: Vec<Vec<f64>> = (0..config.n_nodes)
        .map(|_| lengths.iter().map(|&l| pos_rng.gen_range(0.0..l)).collect())
        .collect();
    let mut orient_rng = derive_rng(config.master_seed, trial_index, STREAM_ORIENTATIONS);
    let multilobe = !config.pattern.is_rotationally_symmetric()
        || config
            .pattern_rx
            .as_ref()
            .map_or(false, |p| !p.is_rotationally_symmetric());
    let orientations: Vec<NodeOrientation> = (0..config.n_nodes)
        .map(|_| {
            if multilobe {
                NodeOrientation::Rotation(random_rotation(&mut orient_rng))
            } else {
                NodeOrientation::Axis(random_axis(&mut orient_rng))
            }
        })
        .collect();
    Ok(NetworkSample {
        positions,
        orientations,
    })
}

/// Displacement from node i to node j, minimum-image on periodic domains.
fn displacement(domain: &Domain, pi: &[f64], pj: &[f64]) -> Vec<f64> {
    let lengths = domain_lengths(domain);
    pi.iter()
        .zip(pj)
        .zip(&lengths)
        .map(|((&a, &b), &l)| {
            let mut d = b - a;
            if domain.is_periodic() {
                d -= l * (d / l).round();
            }
            d
        })
        .collect()
}

/// Soft-link probability exp(−βr^η/(GᵢGⱼ)) for one node pair.
pub fn link_probability(
    network: &NetworkSample,
    i: usize,
    j: usize,
    config: &SimConfig,
) -> f64 {
    let d = displacement(&config.domain, &network.positions[i], &network.positions[j]);
    let r2: f64 = d.iter().map(|x| x * x).sum();
    let r = r2.sqrt();
    if r == 0.0 {
        return 1.0;
    }
    let mut u = [0.0f64; 3];
    for (k, &v) in d.iter().enumerate().take(3) {
        u[k] = v / r;
    }
    let g_i = network.orientations[i].gain_toward(&config.pattern, u);
    let g_j = network.orientations[j].gain_toward(config.rx_pattern(), [-u[0], -u[1], -u[2]]);
    let gg = g_i * g_j;
    if gg <= 0.0 {
        return 0.0; // blind spot: the exponent diverges
    }
    (-config.model.beta * r.powf(config.model.eta) / gg).exp()
}

/// Bernoulli link sampling over all unordered pairs.
pub fn sample_graph(
    network: &NetworkSample,
    config: &SimConfig,
    trial_index: u64,
) -> AdjacencyGraph {
    let n = network.positions.len();
    let mut rng = derive_rng(config.master_seed, trial_index, STREAM_LINKS);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = link_probability(network, i, j, config);
            if p < 1e-12 {
                continue; // negligible pairs skipped, documented cutoff
            }
            if rng.gen_range(0.0..1.0) < p {
                edges.push((i, j));
            }
        }
    }
    AdjacencyGraph { n, edges }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Degree histogram, mean degree, isolation fraction, and single-component
/// check for one graph.
pub fn analyze(graph: &AdjacencyGraph) -> ConnectivityReport {
    let n = graph.n;
    let mut degrees = vec![0usize; n];
    let mut uf = UnionFind::new(n);
    for &(i, j) in &graph.edges {
        degrees[i] += 1;
        degrees[j] += 1;
        uf.union(i, j);
    }
    let max_deg = degrees.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0usize; max_deg + 1];
    for &d in &degrees {
        histogram[d] += 1;
    }
    let mean_degree = degrees.iter().sum::<usize>() as f64 / n as f64;
    let isolated_fraction = histogram[0] as f64 / n as f64;
    let root = uf.find(0);
    let fully_connected = (1..n).all(|i| uf.find(i) == root);
    ConnectivityReport {
        mean_degree,
        degree_histogram: histogram,
        isolated_fraction,
        fully_connected,
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run all trials (in parallel) and aggregate in trial order.
pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleReport> {
    config.validate()?;
    let reports: Vec<Result<ConnectivityReport>> = par::map_range(config.trials, |t| {
        let network = sample_network(config, t as u64)?;
        let graph = sample_graph(&network, config, t as u64);
        Ok(analyze(&graph))
    });
    let mut mean_degrees = Vec::with_capacity(config.trials);
    let mut isolated = Vec::with_capacity(config.trials);
    let mut full = Vec::with_capacity(config.trials);
    let mut histogram: Vec<usize> = Vec::new();
    for r in reports {
        let r = r?;
        mean_degrees.push(r.mean_degree);
        isolated.push(r.isolated_fraction);
        full.push(if r.fully_connected { 1.0 } else { 0.0 });
        if r.degree_histogram.len() > histogram.len() {
            histogram.resize(r.degree_histogram.len(), 0);
        }
        for (acc, &c) in histogram.iter_mut().zip(&r.degree_histogram) {
            *acc += c;
        }
    }
    let (mean_degree, mean_degree_stderr) = mean_and_stderr(&mean_degrees);
    let (isolated_fraction, isolated_fraction_stderr) = mean_and_stderr(&isolated);
    let (full_connectivity_probability, full_connectivity_stderr) = mean_and_stderr(&full);
    Ok(EnsembleReport {
        trials: config.trials,
        mean_degree,
        mean_degree_stderr,
        isolated_fraction,
        isolated_fraction_stderr,
        full_connectivity_probability,
        full_connectivity_stderr,
        degree_histogram: histogram,
    })
}

/// One row of the path-loss sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub pattern: String,
    pub mean_degree_over_rho: f64,
    pub stderr_over_rho: f64,
    pub analytic_mass: f64,
}

/// Ensemble per (η, pattern): simulated mean degree over density next to the
/// analytic homogeneous mass.
pub fn sweep_eta(
    base: &SimConfig,
    patterns: &[GainPattern],
    eta_values: &[f64],
) -> Result<Vec<SweepRow>> {
    if eta_values.is_empty() {
        return Err(Error::InvalidParameter {
            field: "eta_values",
            message: "need at least one eta value".into(),
        });
    }
    let rho = base.density();
    let mut rows = Vec::new();
    for &eta in eta_values {
        for pattern in patterns {
            let mut config = base.clone();
            config.model.eta = eta;
            config.pattern = pattern.clone();
            config.pattern_rx = None;
            let report = run_ensemble(&config)?;
            let mass =
                crate::analytic::homogeneous_mass(pattern, pattern, &config.model)?.mass;
            rows.push(SweepRow {
                eta,
                pattern: pattern.label(),
                mean_degree_over_rho: report.mean_degree / rho,
                stderr_over_rho: report.mean_degree_stderr / rho,
                analytic_mass: mass,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn torus_config(pattern: GainPattern, eta: f64, beta: f64) -> SimConfig {
        SimConfig {
            domain: Domain::cube(10.0, true),
            n_nodes: 100,
            model: PathLossModel { eta, beta },
            pattern,
            pattern_rx: None,
            trials: 4,
            master_seed: 42,
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let config = torus_config(GainPattern::Cardioid { epsilon: 0.7 }, 2.0, 1.0);
        let a = sample_network(&config, 3).unwrap();
        let b = sample_network(&config, 3).unwrap();
        assert_eq!(a, b);
        let ga = sample_graph(&a, &config, 3);
        let gb = sample_graph(&b, &config, 3);
        assert_eq!(ga, gb);
        let c = sample_network(&config, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn positions_and_orientations_are_uniform() {
        let mut config = torus_config(GainPattern::Isotropic, 2.0, 1.0);
        config.n_nodes = 40_000;
        let sample = sample_network(&config, 0).unwrap();
        let n = config.n_nodes as f64;
        let mean_x: f64 =
            sample.positions.iter().map(|p| p[0]).sum::<f64>() / n;
        // uniform on [0,10]: sd 10/sqrt(12)
        let tol = 3.0 * 10.0 / 12f64.sqrt() / n.sqrt();
        assert!((mean_x - 5.0).abs() < tol, "mean x {mean_x}");
        let mean_z: f64 = sample
            .orientations
            .iter()
            .map(|o| match o {
                NodeOrientation::Axis(v) => v[2],
                NodeOrientation::Rotation(_) => unreachable!(),
            })
            .sum::<f64>()
            / n;
        // z-component uniform in [-1,1]: sd 1/sqrt(3)
        let tol = 3.0 / (3.0 * n).sqrt();
        assert!(mean_z.abs() < tol, "mean z {mean_z}");
    }

    #[test]
    fn rotations_are_orthonormal() {
        let mut config = torus_config(
            GainPattern::MultiLobe {
                n: 4,
                lambda: 4.0,
                directions: crate::boundary::thomson_points(4, 4, 1e-6, 1).unwrap(),
                sectorized: false,
            },
            2.0,
            1.0,
        );
        config.n_nodes = 10;
        let sample = sample_network(&config, 0).unwrap();
        for o in &sample.orientations {
            let r = match o {
                NodeOrientation::Rotation(r) => r,
                NodeOrientation::Axis(_) => unreachable!(),
            };
            for a in 0..3 {
                for b in 0..3 {
                    let dot: f64 = (0..3).map(|k| r[a][k] * r[b][k]).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert_relative_eq!(dot, expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn link_probability_examples() {
        let config = SimConfig {
            domain: Domain::cube(10.0, false),
            n_nodes: 2,
            model: PathLossModel { eta: 2.0, beta: 1.0 },
            pattern: GainPattern::Isotropic,
            pattern_rx: None,
            trials: 1,
            master_seed: 0,
        };
        let net = NetworkSample {
            positions: vec![vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 1.0]],
            orientations: vec![
                NodeOrientation::Axis([0.0, 0.0, 1.0]),
                NodeOrientation::Axis([0.0, 0.0, 1.0]),
            ],
        };
        assert_relative_eq!(
            link_probability(&net, 0, 1, &config),
            (-1.0f64).exp(),
            max_relative = 1e-12
        );
        let coincident = NetworkSample {
            positions: vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]],
            orientations: net.orientations.clone(),
        };
        assert_eq!(link_probability(&coincident, 0, 1, &config), 1.0);
    }

    #[test]
    fn cardioid_blind_spot() {
        // j exactly behind i's boresight
        let config = SimConfig {
            domain: Domain::cube(10.0, false),
            n_nodes: 2,
            model: PathLossModel { eta: 2.0, beta: 1.0 },
            pattern: GainPattern::Cardioid { epsilon: 1.0 },
            pattern_rx: None,
            trials: 1,
            master_seed: 0,
        };
        let net = NetworkSample {
            positions: vec![vec![1.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]],
            orientations: vec![
                NodeOrientation::Axis([0.0, 0.0, 1.0]),
                NodeOrientation::Axis([0.0, 0.0, 1.0]),
            ],
        };
        assert_eq!(link_probability(&net, 0, 1, &config), 0.0);
    }

    #[test]
    fn minimum_image_wraps() {
        let config = torus_config(GainPattern::Isotropic, 2.0, 1.0);
        let net = NetworkSample {
            positions: vec![vec![0.5, 5.0, 5.0], vec![9.5, 5.0, 5.0]],
            orientations: vec![
                NodeOrientation::Axis([0.0, 0.0, 1.0]),
                NodeOrientation::Axis([0.0, 0.0, 1.0]),
            ],
        };
        // wrapped distance 1, not 9
        assert_relative_eq!(
            link_probability(&net, 0, 1, &config),
            (-1.0f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn beta_limits() {
        let mut config = torus_config(GainPattern::Isotropic, 2.0, 1e9);
        config.n_nodes = 30;
        let net = sample_network(&config, 0).unwrap();
        let empty = sample_graph(&net, &config, 0);
        assert!(empty.edges.is_empty());
        config.model.beta = 1e-12;
        let net = sample_network(&config, 0).unwrap();
        let complete = sample_graph(&net, &config, 0);
        assert_eq!(complete.edges.len(), 30 * 29 / 2);
    }

    #[test]
    fn analyze_examples() {
        let k5 = AdjacencyGraph {
            n: 5,
            edges: (0..5)
                .flat_map(|i| ((i + 1)..5).map(move |j| (i, j)))
                .collect(),
        };
        let r = analyze(&k5);
        assert_eq!(r.mean_degree, 4.0);
        assert!(r.fully_connected);
        assert_eq!(r.isolated_fraction, 0.0);

        let empty = AdjacencyGraph { n: 5, edges: vec![] };
        let r = analyze(&empty);
        assert_eq!(r.mean_degree, 0.0);
        assert_eq!(r.isolated_fraction, 1.0);
        assert!(!r.fully_connected);

        let two_triangles = AdjacencyGraph {
            n: 6,
            edges: vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)],
        };
        let r = analyze(&two_triangles);
        assert_eq!(r.mean_degree, 2.0);
        assert!(!r.fully_connected);
        assert_eq!(r.degree_histogram, vec![0, 0, 6]);
    }

    #[test]
    fn bernoulli_consistency() {
        // N=2 repeated: empirical link frequency matches link_probability
        let mut config = torus_config(GainPattern::Isotropic, 2.0, 0.05);
        config.n_nodes = 2;
        let trials = 20_000;
        let mut hits = 0usize;
        let mut psum = 0.0;
        for t in 0..trials {
            let net = sample_network(&config, t as u64).unwrap();
            let p = link_probability(&net, 0, 1, &config);
            psum += p;
            let g = sample_graph(&net, &config, t as u64);
            hits += g.edges.len();
        }
        let expected = psum / trials as f64;
        let freq = hits as f64 / trials as f64;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!(
            (freq - expected).abs() < 3.5 * sigma,
            "freq {freq} vs expected {expected} (sigma {sigma})"
        );
    }

    #[test]
    fn ensemble_matches_analytic_on_torus() {
        let mut config = torus_config(GainPattern::Isotropic, 3.0, 1.0);
        config.n_nodes = 200;
        config.trials = 30;
        let report = run_ensemble(&config).unwrap();
        let rho = config.density();
        let mass = 4.0 * PI / 3.0;
        let err = report.mean_degree_stderr / rho;
        assert!(
            (report.mean_degree / rho - mass).abs() < 3.0 * err.max(1e-3),
            "simulated {} vs analytic {mass} (stderr {err})",
            report.mean_degree / rho
        );
    }

    #[test]
    fn ensemble_deterministic_repeat() {
        let config = torus_config(GainPattern::Donut { m: 2.0 }, 2.5, 1.0);
        let a = run_ensemble(&config).unwrap();
        let b = run_ensemble(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_rows_cover_grid() {
        let mut base = torus_config(GainPattern::Isotropic, 2.0, 1.0);
        base.n_nodes = 50;
        base.trials = 2;
        let patterns = [GainPattern::Isotropic, GainPattern::Cardioid { epsilon: 1.0 }];
        let rows = sweep_eta(&base, &patterns, &[2.0, 3.0]).unwrap();
        assert_eq!(rows.len(), 4);
        // at eta = 3 the analytic masses coincide
        let eta3: Vec<&SweepRow> = rows.iter().filter(|r| r.eta == 3.0).collect();
        assert_relative_eq!(
            eta3[0].analytic_mass,
            eta3[1].analytic_mass,
            max_relative = 1e-9
        );
    }
}
