//! Synthetic `(η, ρ)`-clusterable streams with known ground truth, and a
//! validator for arbitrary labeled streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Re-draw budget for rejection-sampled centers.
pub const REJECTION_RETRIES: usize = 1000;

/// Floating point allowance on the alignment and separation checks.
pub const VALIDATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterMode {
    /// Gram–Schmidt on Gaussian draws; exactly separated (`ρ = 0`).
    Orthonormal,
    /// Random unit vectors, re-drawn until every pair is within `ρ`.
    RejectionSampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub k_star: usize,
    pub d: usize,
    pub eta: f64,
    pub rho: f64,
    pub center_mode: CenterMode,
}

impl ClusterSpec {
    pub fn orthonormal(k_star: usize, d: usize, eta: f64) -> Self {
        Self {
            k_star,
            d,
            eta,
            rho: 0.0,
            center_mode: CenterMode::Orthonormal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_star < 2 {
            return Err(Error::param(format!("k* must be >= 2, got {}", self.k_star)));
        }
        if self.d == 0 {
            return Err(Error::param("d must be >= 1"));
        }
        if self.center_mode == CenterMode::Orthonormal && self.k_star > self.d {
            return Err(Error::param(format!(
                "orthonormal centers need k* <= d, got k* = {} > d = {}",
                self.k_star, self.d
            )));
        }
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::param(format!("eta must be in [0, 1), got {}", self.eta)));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::param(format!("rho must be in [0, 1), got {}", self.rho)));
        }
        Ok(())
    }
}

/// `k*` unit-norm latent centers, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentCenters {
    pub centers: Vec<f64>,
    pub k: usize,
    pub d: usize,
    /// Largest off-diagonal `|<c_r, c_s>|`.
    pub realized_rho: f64,
}

impl LatentCenters {
    pub fn center(&self, r: usize) -> &[f64] {
        &self.centers[r * self.d..(r + 1) * self.d]
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedStream {
    /// `n x d`, row-major.
    pub vectors: Vec<f64>,
    /// Center index of each observation.
    pub assignment: Vec<usize>,
    pub centers: LatentCenters,
    pub spec: ClusterSpec,
    pub seed: u64,
}

impl GeneratedStream {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        let d = self.spec.d;
        &self.vectors[i * d..(i + 1) * d]
    }

    pub fn validate(&self) -> Result<ClusterReport> {
        validate_clusterable(
            &self.vectors,
            &self.assignment,
            &self.centers.centers,
            self.spec.d,
            self.spec.eta,
            self.spec.rho,
        )
    }

    /// Ground-truth sidecar, `index,center_id`.
    pub fn truth_csv(&self) -> String {
        let mut out = String::from("index,center_id\n");
        for (i, c) in self.assignment.iter().enumerate() {
            out.push_str(&format!("{i},{c}\n"));
        }
        out
    }

    pub fn truth_header(&self) -> Result<TruthHeader> {
        let report = self.validate()?;
        Ok(TruthHeader {
            spec: self.spec,
            seed: self.seed,
            n: self.len(),
            k_star: self.spec.k_star,
            realized_rho: self.centers.realized_rho,
            eta_hat: report.eta_hat,
        })
    }
}

/// JSON header written next to a generated stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthHeader {
    pub spec: ClusterSpec,
    pub seed: u64,
    pub n: usize,
    pub k_star: usize,
    pub realized_rho: f64,
    pub eta_hat: f64,
}

/// Independent seed for sub-stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn gaussian_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn max_cross(centers: &[f64], k: usize, d: usize) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..k {
        for s in r + 1..k {
            let ip = dot(&centers[r * d..(r + 1) * d], &centers[s * d..(s + 1) * d]);
            worst = worst.max(ip.abs());
        }
    }
    worst
}

pub fn make_centers(spec: &ClusterSpec, seed: u64) -> Result<LatentCenters> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, d) = (spec.k_star, spec.d);
    match spec.center_mode {
        CenterMode::Orthonormal => {
            let mut centers: Vec<f64> = Vec::with_capacity(k * d);
            for r in 0..k {
                let mut attempts = 0;
                let v = loop {
                    attempts += 1;
                    if attempts > 100 {
                        return Err(Error::Generation(format!(
                            "could not draw a direction independent of {r} previous centers"
                        )));
                    }
                    let mut v = gaussian_vec(&mut rng, d);
                    let scale = norm(&v);
                    // two passes of modified Gram–Schmidt
                    for _ in 0..2 {
                        for prev in centers.chunks(d) {
                            let ip = dot(&v, prev);
                            v.iter_mut().zip(prev).for_each(|(x, p)| *x -= ip * p);
                        }
                    }
                    let len = norm(&v);
                    if len > 1e-6 * scale {
                        v.iter_mut().for_each(|x| *x /= len);
                        break v;
                    }
                };
                centers.extend_from_slice(&v);
            }
            let realized_rho = max_cross(&centers, k, d);
            debug_assert!(realized_rho <= 1e-9);
            Ok(LatentCenters {
                centers,
                k,
                d,
                realized_rho,
            })
        }
        CenterMode::RejectionSampled => {
            let mut best = f64::INFINITY;
            for _ in 0..REJECTION_RETRIES {
                let mut centers = Vec::with_capacity(k * d);
                for _ in 0..k {
                    let mut v = gaussian_vec(&mut rng, d);
                    let len = norm(&v);
                    if len == 0.0 {
                        v[0] = 1.0;
                    } else {
                        v.iter_mut().for_each(|x| *x /= len);
                    }
                    centers.extend_from_slice(&v);
                }
                let realized_rho = max_cross(&centers, k, d);
                if realized_rho <= spec.rho {
                    return Ok(LatentCenters {
                        centers,
                        k,
                        d,
                        realized_rho,
                    });
                }
                best = best.min(realized_rho);
            }
            Err(Error::Generation(format!(
                "no center set with max |<c_r, c_s>| <= {} in {REJECTION_RETRIES} draws; \
                 best achieved {best:.4}",
                spec.rho
            )))
        }
    }
}

/// One observation in the spherical cap `<x, center> >= 1 - η/2`.
///
/// The alignment `u` is uniform on `[1 - η/2, 1]` and the tangent direction
/// uniform on the unit sphere orthogonal to `center`, so the constraint
/// holds by construction and `‖x - center‖² = 2(1 - u) <= η`.
pub fn sample_observation<R: Rng>(center: &[f64], eta: f64, rng: &mut R) -> Vec<f64> {
    let d = center.len();
    if eta == 0.0 || d == 1 {
        return center.to_vec();
    }
    let u = 1.0 - 0.5 * eta * rng.random::<f64>();
    let v = loop {
        let mut g = gaussian_vec(rng, d);
        for _ in 0..2 {
            let ip = dot(&g, center);
            g.iter_mut().zip(center).for_each(|(x, c)| *x -= ip * c);
        }
        let len = norm(&g);
        if len > 1e-9 {
            g.iter_mut().for_each(|x| *x /= len);
            break g;
        }
    };
    let s = (1.0 - u * u).max(0.0).sqrt();
    center.iter().zip(&v).map(|(c, t)| u * c + s * t).collect()
}

/// `n` observations: the first `k*` cover every center once, the rest pick a
/// center uniformly at random.
pub fn generate_stream(spec: &ClusterSpec, n: usize, seed: u64) -> Result<GeneratedStream> {
    spec.validate()?;
    if n < spec.k_star {
        return Err(Error::param(format!(
            "stream length n = {n} is below k* = {}",
            spec.k_star
        )));
    }
    let centers = make_centers(spec, derive_seed(seed, 0))?;
    generate_from_centers(spec, centers, n, seed)
}

/// Same as [`generate_stream`] over caller-supplied centers.
pub fn generate_from_centers(
    spec: &ClusterSpec,
    centers: LatentCenters,
    n: usize,
    seed: u64,
) -> Result<GeneratedStream> {
    if centers.k != spec.k_star || centers.d != spec.d {
        return Err(Error::input("centers do not match the cluster spec"));
    }
    if n < spec.k_star {
        return Err(Error::param(format!(
            "stream length n = {n} is below k* = {}",
            spec.k_star
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut vectors = Vec::with_capacity(n * spec.d);
    let mut assignment = Vec::with_capacity(n);
    for i in 0..n {
        let r = if i < spec.k_star {
            i
        } else {
            rng.random_range(0..spec.k_star)
        };
        vectors.extend(sample_observation(centers.center(r), spec.eta, &mut rng));
        assignment.push(r);
    }
    Ok(GeneratedStream {
        vectors,
        assignment,
        centers,
        spec: *spec,
        seed,
    })
}

/// Outcome of checking a labeled stream against `(η, ρ)`-clusterability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub n: usize,
    pub k: usize,
    /// `min_i <x_i, center_{r(i)}>`.
    pub worst_alignment: f64,
    /// `max_{r != s} |<c_r, c_s>|`.
    pub worst_cross: f64,
    /// `2 (1 - worst_alignment)`: the smallest `η` this stream satisfies.
    pub eta_hat: f64,
    pub rho_hat: f64,
    pub alignment_ok: bool,
    pub separation_ok: bool,
    pub pass: bool,
}

pub fn validate_clusterable(
    vectors: &[f64],
    assignment: &[usize],
    centers: &[f64],
    d: usize,
    eta: f64,
    rho: f64,
) -> Result<ClusterReport> {
    if d == 0 || vectors.len() != assignment.len() * d || !centers.len().is_multiple_of(d) {
        return Err(Error::input(format!(
            "shape mismatch: {} vector values, {} labels, {} center values, d = {d}",
            vectors.len(),
            assignment.len(),
            centers.len()
        )));
    }
    let k = centers.len() / d;
    if let Some(bad) = assignment.iter().find(|&&r| r >= k) {
        return Err(Error::input(format!("label {bad} out of range for {k} centers")));
    }
    let worst_alignment = vectors
        .chunks(d)
        .zip(assignment)
        .map(|(x, &r)| dot(x, &centers[r * d..(r + 1) * d]))
        .fold(f64::INFINITY, f64::min);
    let worst_cross = max_cross(centers, k, d);
    let alignment_ok = assignment.is_empty()
        || worst_alignment >= 1.0 - 0.5 * eta - VALIDATION_TOLERANCE;
    let separation_ok = worst_cross <= rho + VALIDATION_TOLERANCE;
    let eta_hat = if assignment.is_empty() {
        0.0
    } else {
        (2.0 * (1.0 - worst_alignment)).max(0.0)
    };
    Ok(ClusterReport {
        n: assignment.len(),
        k,
        worst_alignment,
        worst_cross,
        eta_hat,
        rho_hat: worst_cross,
        alignment_ok,
        separation_ok,
        pass: alignment_ok && separation_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_pair() {
        let spec = ClusterSpec::orthonormal(2, 2, 0.0);
        let c = make_centers(&spec, 3).unwrap();
        assert!(c.realized_rho <= 1e-9);
        for r in 0..2 {
            assert!((norm(c.center(r)) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejection_sampled_in_high_dimension() {
        let spec = ClusterSpec {
            k_star: 8,
            d: 512,
            eta: 1e-3,
            rho: 0.2,
            center_mode: CenterMode::RejectionSampled,
        };
        let c = make_centers(&spec, 17).unwrap();
        assert!(c.realized_rho <= 0.2);
        for r in 0..8 {
            assert!((norm(c.center(r)) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejection_cap_exhausted() {
        let spec = ClusterSpec {
            k_star: 10,
            d: 3,
            eta: 0.0,
            rho: 0.01,
            center_mode: CenterMode::RejectionSampled,
        };
        match make_centers(&spec, 1) {
            Err(Error::Generation(msg)) => assert!(msg.contains("best achieved")),
            other => panic!("expected generation failure, got {other:?}"),
        }
    }

    #[test]
    fn too_many_orthonormal_centers() {
        let spec = ClusterSpec::orthonormal(10, 4, 0.0);
        assert!(matches!(make_centers(&spec, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn zero_noise_observation_is_the_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = [0.6, 0.0, 0.8];
        assert_eq!(sample_observation(&c, 0.0, &mut rng), c.to_vec());
    }

    #[test]
    fn cap_sampling_identities() {
        let spec = ClusterSpec::orthonormal(3, 16, 0.3);
        let centers = make_centers(&spec, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..2000 {
            let c = centers.center(i % 3);
            let x = sample_observation(c, 0.3, &mut rng);
            let u = dot(&x, c);
            assert!((norm(&x) - 1.0).abs() < 1e-12);
            assert!((1.0 - 0.15 - 1e-12..=1.0 + 1e-12).contains(&u));
            let dist2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!((dist2 - 2.0 * (1.0 - u)).abs() < 1e-12);
            assert!(dist2 <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn coverage_floor() {
        let spec = ClusterSpec::orthonormal(2, 4, 0.01);
        let s = generate_stream(&spec, 2, 1).unwrap();
        assert_eq!(s.assignment, vec![0, 1]);
        assert!(generate_stream(&spec, 1, 1).is_err());
    }

    #[test]
    fn zero_noise_stream_has_k_distinct_vectors() {
        let spec = ClusterSpec::orthonormal(4, 8, 0.0);
        let s = generate_stream(&spec, 1000, 2).unwrap();
        let mut distinct: Vec<Vec<u64>> = s
            .vectors
            .chunks(8)
            .map(|v| v.iter().map(|x| x.to_bits()).collect())
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn generated_stream_validates() {
        let spec = ClusterSpec::orthonormal(8, 512, 1e-4);
        let s = generate_stream(&spec, 2000, 11).unwrap();
        let report = s.validate().unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.rho_hat <= 1e-9);
        assert!(report.eta_hat <= 1e-4 + 1e-12);
        let again = generate_stream(&spec, 2000, 11).unwrap();
        assert_eq!(s.vectors, again.vectors);
        assert_eq!(s.assignment, again.assignment);
    }

    #[test]
    fn perturbed_vector_fails_validation() {
        let spec = ClusterSpec::orthonormal(3, 6, 0.01);
        let mut s = generate_stream(&spec, 50, 4).unwrap();
        assert!(s.validate().unwrap().pass);
        // rotate observation 7 a bit further from its center than allowed
        let c = s.centers.center(s.assignment[7]).to_vec();
        let other = s.centers.center((s.assignment[7] + 1) % 3).to_vec();
        let u: f64 = 1.0 - 0.006;
        let t = (1.0 - u * u).sqrt();
        for j in 0..6 {
            s.vectors[7 * 6 + j] = u * c[j] + t * other[j];
        }
        let report = s.validate().unwrap();
        assert!(!report.alignment_ok && !report.pass);
        assert!((report.eta_hat - 0.012).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        assert!(validate_clusterable(&[1.0, 0.0], &[0, 0], &[1.0, 0.0], 2, 0.1, 0.0).is_err());
        assert!(validate_clusterable(&[1.0, 0.0], &[1], &[1.0, 0.0], 2, 0.1, 0.0).is_err());
    }

    #[test]
    fn truth_sidecars() {
        let spec = ClusterSpec::orthonormal(2, 3, 0.01);
        let s = generate_stream(&spec, 4, 8).unwrap();
        let csv = s.truth_csv();
        assert!(csv.starts_with("index,center_id\n0,0\n1,1\n"));
        assert_eq!(csv.lines().count(), 5);
        let h = s.truth_header().unwrap();
        assert_eq!(h.k_star, 2);
        assert_eq!(h.n, 4);
        let json = serde_json::to_string(&h).unwrap();
        assert!(json.contains("\"center_mode\":\"orthonormal\""));
    }
}
