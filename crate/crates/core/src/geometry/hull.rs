use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::simplex::{LpOutcome, StandardLp};
use super::{norm, GeometryError, PointCloud};

/// Feasibility tolerance used for hull certificates.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Barycentric representation of a hull point by at most `n + 1` cloud points.
#[derive(Debug, Clone, PartialEq)]
pub struct HullCertificate {
    /// Weights over the whole cloud; zero outside `support`.
    pub weights: Vec<f64>,
    pub support: Vec<usize>,
    /// Euclidean reconstruction error `|Σ λ_i p_i − z|`.
    pub residual: f64,
}

fn iteration_cap(cloud: &PointCloud) -> usize {
    10 * (cloud.len() + cloud.dim() + 1)
}

/// Builds the rows `Σ λ_i p_i (− t·dir) = z`, `Σ λ_i = 1`.
fn hull_system(z: &[f64], cloud: &PointCloud, dir: Option<&[f64]>) -> StandardLp {
    let n = cloud.dim();
    let k = cloud.len();
    let cols = k + usize::from(dir.is_some());
    let rows = n + 1;
    let mut a = vec![0.0; rows * cols];
    for (i, p) in cloud.points().enumerate() {
        for j in 0..n {
            a[j * cols + i] = p[j];
        }
        a[n * cols + i] = 1.0;
    }
    if let Some(d) = dir {
        for j in 0..n {
            a[j * cols + k] = -d[j];
        }
    }
    let mut b = z.to_vec();
    b.push(1.0);
    let c = dir.map(|_| {
        let mut c = vec![0.0; cols];
        c[k] = -1.0;
        c
    });
    StandardLp {
        rows,
        cols,
        a,
        b,
        c,
    }
}

/// Returns a certificate iff `z ∈ conv(cloud)` up to `tol`.
///
/// The certificate minimizes the L1 reconstruction residual over the
/// simplex of weights; a basic optimal solution has at most `n + 1`
/// non-zero weights.
pub fn hull_membership(
    z: &[f64],
    cloud: &PointCloud,
    tol: f64,
) -> Result<Option<HullCertificate>, GeometryError> {
    cloud.check_dim(z)?;
    if !(tol >= 0.0) {
        return Err(GeometryError::Precondition("tolerance must be ≥ 0".into()));
    }
    let lp = hull_system(z, cloud, None);
    let (mut weights, l1) = match lp.solve(iteration_cap(cloud)) {
        LpOutcome::Optimal { x, objective } => (x, objective),
        LpOutcome::IterationLimit | LpOutcome::Unstable => {
            return Err(GeometryError::Indeterminate)
        }
        LpOutcome::Infeasible { .. } | LpOutcome::Unbounded => {
            unreachable!("phase-one solves are always optimal or capped")
        }
    };
    if l1 > tol.max(1e-12) {
        return Ok(None);
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok(None);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    let mut recon = vec![0.0; cloud.dim()];
    let mut support = Vec::new();
    for (i, (w, p)) in weights.iter().zip(cloud.points()).enumerate() {
        if *w > 0.0 {
            support.push(i);
            for (r, pj) in recon.iter_mut().zip(p) {
                *r += w * pj;
            }
        }
    }
    let residual = recon
        .iter()
        .zip(z)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if residual > tol.max(1e-12) {
        return Ok(None);
    }
    Ok(Some(HullCertificate {
        weights,
        support,
        residual,
    }))
}

/// Largest `t ≥ 0` with `z + t·dir ∈ conv(cloud)`.
pub fn ray_reach(z: &[f64], dir: &[f64], cloud: &PointCloud) -> Result<f64, GeometryError> {
    cloud.check_dim(z)?;
    cloud.check_dim(dir)?;
    if norm(dir) == 0.0 {
        return Err(GeometryError::Precondition(
            "direction must be non-zero".into(),
        ));
    }
    let lp = hull_system(z, cloud, Some(dir));
    match lp.solve(iteration_cap(cloud)) {
        LpOutcome::Optimal { objective, .. } => Ok((-objective).max(0.0)),
        LpOutcome::Infeasible { .. } => Err(GeometryError::NotInHull),
        // a bounded hull has bounded reach, so unboundedness is roundoff
        LpOutcome::IterationLimit | LpOutcome::Unstable | LpOutcome::Unbounded => {
            Err(GeometryError::Indeterminate)
        }
    }
}

fn axis(n: usize, j: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = sign;
    e
}

/// Certified radius `r` with `B_r(z) ⊂ conv(cloud)`.
///
/// Computed as `s/√n` where `s` is the largest scale at which the
/// cross-polytope `{z ± s·e_j}` fits in the hull.
pub fn interior_margin(z: &[f64], cloud: &PointCloud) -> Result<f64, GeometryError> {
    cloud.check_dim(z)?;
    let n = cloud.dim();
    if hull_membership(z, cloud, FEASIBILITY_TOL)?.is_none() {
        return Err(GeometryError::NotInHull);
    }
    let mut s = f64::INFINITY;
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let reach = match ray_reach(z, &axis(n, j, sign), cloud) {
                Ok(r) => r,
                Err(GeometryError::NotInHull) => 0.0,
                Err(e) => return Err(e),
            };
            s = s.min(reach);
            if s == 0.0 {
                return Ok(0.0);
            }
        }
    }
    Ok(s / (n as f64).sqrt())
}

/// Decides `interior_margin(z, cloud) ≥ margin` with `2n` membership tests
/// instead of `2n` optimizations.
pub fn margin_at_least(z: &[f64], cloud: &PointCloud, margin: f64) -> Result<bool, GeometryError> {
    cloud.check_dim(z)?;
    let n = cloud.dim();
    let s = margin * (n as f64).sqrt();
    let (lo, hi) = cloud.bounding_box();
    // cheap rejection against the bounding box
    for j in 0..n {
        if z[j] - s < lo[j] - FEASIBILITY_TOL || z[j] + s > hi[j] + FEASIBILITY_TOL {
            return Ok(false);
        }
    }
    let mut probe = z.to_vec();
    for j in 0..n {
        for sign in [1.0, -1.0] {
            probe[j] = z[j] + sign * s;
            if hull_membership(&probe, cloud, FEASIBILITY_TOL)?.is_none() {
                return Ok(false);
            }
        }
        probe[j] = z[j];
    }
    Ok(true)
}

/// Candidate-direction search parameters for [`segment_direction`].
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSearch {
    /// Fraction of the symmetric reach used for the returned half-segment;
    /// must lie in `[1/2, 1)` so that the length bound holds and both
    /// endpoints stay interior.
    pub reach_fraction: f64,
    /// Cap on pairwise-difference candidates (taken in index order).
    pub max_pairs: usize,
    pub random_directions: usize,
    pub seed: u64,
}

impl Default for SegmentSearch {
    fn default() -> Self {
        Self {
            reach_fraction: 0.75,
            max_pairs: 256,
            random_directions: 16,
            seed: 0,
        }
    }
}

/// A certified half-segment `z̄` with `[z − z̄, z + z̄] ⊂ int conv(cloud)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChoice {
    pub zbar: Vec<f64>,
    /// `|z̄|·2n / dist(z, cloud)`; at least 1 on success.
    pub ratio: f64,
    /// Smaller of the interior margins of the two endpoints.
    pub endpoint_margin: f64,
}

/// Finds `z̄` with `[z − z̄, z + z̄] ⊂ int conv(cloud)` and
/// `|z̄| ≥ dist(z, cloud)/(2n)`.
///
/// Candidates, in order: directions from `z` to each cloud point, pairwise
/// differences of cloud points, coordinate axes, then seeded random unit
/// directions. The symmetric reach along each is computed exactly by a
/// ray-shooting program; the first candidate with the largest
/// `reach·|d|` wins.
pub fn segment_direction(
    z: &[f64],
    cloud: &PointCloud,
    search: &SegmentSearch,
) -> Result<SegmentChoice, GeometryError> {
    cloud.check_dim(z)?;
    if !(0.5..1.0).contains(&search.reach_fraction) {
        return Err(GeometryError::Precondition(
            "reach_fraction must lie in [0.5, 1)".into(),
        ));
    }
    let n = cloud.dim();
    let margin = interior_margin(z, cloud)?;
    if margin <= 0.0 {
        return Err(GeometryError::NotInterior);
    }

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for p in cloud.points() {
        candidates.push(p.iter().zip(z).map(|(a, b)| a - b).collect());
    }
    let mut pairs = 0;
    'outer: for i in 0..cloud.len() {
        for j in i + 1..cloud.len() {
            if pairs >= search.max_pairs {
                break 'outer;
            }
            let (p, q) = (cloud.point(i), cloud.point(j));
            candidates.push(q.iter().zip(p).map(|(a, b)| a - b).collect());
            pairs += 1;
        }
    }
    for j in 0..n {
        candidates.push(axis(n, j, 1.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.random_directions {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let len = norm(&v);
        candidates.push(v.iter().map(|x| x / len).collect());
    }

    let mut best: Option<(f64, f64, usize)> = None; // (score, reach, index)
    for (idx, d) in candidates.iter().enumerate() {
        let len = norm(d);
        if len <= 1e-14 {
            continue;
        }
        // candidates the solver cannot settle are skipped
        let reach = |dir: &[f64]| match ray_reach(z, dir, cloud) {
            Ok(r) => Ok(Some(r)),
            Err(GeometryError::Indeterminate) => Ok(None),
            Err(e) => Err(e),
        };
        let Some(forward) = reach(d)? else { continue };
        if let Some((score, _, _)) = best {
            if forward * len <= score {
                continue;
            }
        }
        let back: Vec<f64> = d.iter().map(|x| -x).collect();
        let Some(backward) = reach(&back)? else {
            continue;
        };
        let t = forward.min(backward);
        let score = t * len;
        if best.map_or(true, |(s, _, _)| score > s) {
            best = Some((score, t, idx));
        }
    }
    let dist = cloud.distance_to(z);
    let Some((_, t, idx)) = best else {
        return Err(GeometryError::BoundNotAchieved { ratio: 0.0 });
    };
    let scale = search.reach_fraction * t;
    let zbar: Vec<f64> = candidates[idx].iter().map(|x| x * scale).collect();
    let ratio = if dist > 0.0 {
        norm(&zbar) * 2.0 * n as f64 / dist
    } else {
        f64::INFINITY
    };
    if ratio < 1.0 {
        return Err(GeometryError::BoundNotAchieved { ratio });
    }
    let plus: Vec<f64> = z.iter().zip(&zbar).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = z.iter().zip(&zbar).map(|(a, b)| a - b).collect();
    let endpoint_margin = interior_margin(&plus, cloud)?.min(interior_margin(&minus, cloud)?);
    if endpoint_margin <= 0.0 {
        return Err(GeometryError::NotInterior);
    }
    Ok(SegmentChoice {
        zbar,
        ratio,
        endpoint_margin,
    })
}

/// Checks that every point of `c` stays strictly inside `conv(perturbed)`.
///
/// Precondition: every point of `c` has a positive interior margin with
/// respect to `reference`.
pub fn hull_stability_check(
    c: &PointCloud,
    reference: &PointCloud,
    perturbed: &PointCloud,
) -> Result<bool, GeometryError> {
    if c.dim() != reference.dim() || c.dim() != perturbed.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: c.dim(),
            found: if c.dim() != reference.dim() {
                reference.dim()
            } else {
                perturbed.dim()
            },
        });
    }
    for (i, p) in c.points().enumerate() {
        let inside = match interior_margin(p, reference) {
            Ok(m) => m > 0.0,
            Err(GeometryError::NotInHull) => false,
            Err(e) => return Err(e),
        };
        if !inside {
            return Err(GeometryError::Precondition(format!(
                "point {i} of C is not interior to conv(K)"
            )));
        }
    }
    for p in c.points() {
        match interior_margin(p, perturbed) {
            Ok(m) if m > 0.0 => {}
            Ok(_) | Err(GeometryError::NotInHull) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[&[f64]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn triangle() -> PointCloud {
        cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])
    }

    fn cross2() -> PointCloud {
        cloud(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]])
    }

    #[test]
    fn edge_midpoint_certificate() {
        let cert = hull_membership(&[0.5, 0.0], &triangle(), FEASIBILITY_TOL)
            .unwrap()
            .unwrap();
        assert!((cert.weights[0] - 0.5).abs() < 1e-12);
        assert!((cert.weights[1] - 0.5).abs() < 1e-12);
        assert!(cert.weights[2].abs() < 1e-12);
        assert!(cert.support.len() <= 3);
        assert!((cert.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_point_has_no_certificate() {
        assert!(hull_membership(&[2.0, 0.0], &triangle(), FEASIBILITY_TOL)
            .unwrap()
            .is_none());
        assert!(hull_membership(&[0.6, 0.6], &triangle(), FEASIBILITY_TOL)
            .unwrap()
            .is_none());
    }

    #[test]
    fn cross_polytope_margin() {
        let m = interior_margin(&[0.0, 0.0], &cross2()).unwrap();
        assert!((m - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(interior_margin(&[1.0, 0.0], &triangle()).unwrap(), 0.0);
        assert_eq!(
            interior_margin(&[3.0, 0.0], &triangle()),
            Err(GeometryError::NotInHull)
        );
    }

    #[test]
    fn margin_at_least_agrees_with_margin() {
        let k = cross2();
        let z = [0.1, -0.2];
        let m = interior_margin(&z, &k).unwrap();
        assert!(margin_at_least(&z, &k, 0.99 * m).unwrap());
        assert!(!margin_at_least(&z, &k, 1.01 * m).unwrap());
    }

    #[test]
    fn ray_reach_on_segment() {
        let k = cloud(&[&[-1.0], &[1.0]]);
        assert!((ray_reach(&[0.0], &[2.0], &k).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ray_reach(&[2.0], &[1.0], &k), Err(GeometryError::NotInHull));
    }

    #[test]
    fn segment_in_one_dimension() {
        let k = cloud(&[&[-1.0], &[1.0]]);
        let s = segment_direction(&[0.0], &k, &SegmentSearch::default()).unwrap();
        assert!(norm(&s.zbar) >= 0.5);
        assert!(s.ratio >= 1.0);
    }

    #[test]
    fn segment_in_cross_polytope_follows_an_axis() {
        let s = segment_direction(&[0.0, 0.0], &cross2(), &SegmentSearch::default()).unwrap();
        assert!(norm(&s.zbar) >= 0.25);
        let nonzero = s.zbar.iter().filter(|v| v.abs() > 1e-12).count();
        assert_eq!(nonzero, 1);
        assert!(s.endpoint_margin > 0.0);
    }

    #[test]
    fn segment_from_boundary_fails() {
        assert_eq!(
            segment_direction(&[1.0, 0.0], &cross2(), &SegmentSearch::default()),
            Err(GeometryError::NotInterior)
        );
    }

    #[test]
    fn stability_examples() {
        let k = cross2();
        let origin = cloud(&[&[0.0, 0.0]]);
        let shifted = cloud(&[&[1.01, 0.01], &[0.01, 1.01], &[-0.99, 0.01], &[0.01, -0.99]]);
        assert!(hull_stability_check(&origin, &k, &shifted).unwrap());
        assert!(hull_stability_check(&origin, &k, &k).unwrap());
        let c = cloud(&[&[0.5, 0.0]]);
        let shrunk = cloud(&[&[0.4, 0.0], &[0.0, 0.4], &[-0.4, 0.0], &[0.0, -0.4]]);
        assert!(!hull_stability_check(&c, &k, &shrunk).unwrap());
        let boundary = cloud(&[&[1.0, 0.0]]);
        assert!(matches!(
            hull_stability_check(&boundary, &k, &k),
            Err(GeometryError::Precondition(_))
        ));
    }
}
