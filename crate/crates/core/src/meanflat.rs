//! Mean flatness of discrete measures: second-moment plane fits, the
//! eigenvalue form of the k-th flatness coefficient, a brute-force search
//! oracle, the dyadic Jones sum, and the comparison against the frequency
//! pinching of a field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::field::AnalyticField;
use crate::frequency::{pinch_w, Grid};
use crate::geom;
use crate::quadrature::QuadratureScheme;
use crate::weight::WeightProfile;
use crate::{Error, Result};

/// A finite atomic measure sum w_j delta_{x_j} in R^m.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    m: usize,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Input("points and weights must have equal length".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Input("weights must be finite and nonnegative".into()));
        }
        let m = points.first().map_or(0, |p| p.len());
        if m == 0 && !points.is_empty() {
            return Err(Error::Input("points must have positive dimension".into()));
        }
        if points.iter().any(|p| p.len() != m) {
            return Err(Error::Input("all points must share one dimension".into()));
        }
        Ok(DiscreteMeasure { points, weights, m })
    }

    pub fn empty(m: usize) -> Self {
        DiscreteMeasure { points: Vec::new(), weights: Vec::new(), m }
    }

    pub fn unit_weights(points: Vec<Vec<f64>>) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::new(points, w)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Atoms strictly inside B_{r0}(x0).
    pub fn restrict(&self, x0: &[f64], r0: f64) -> Result<DiscreteMeasure> {
        if !(r0 > 0.0) {
            return Err(Error::Input("restriction radius must be positive".into()));
        }
        if x0.len() != self.m && !self.is_empty() {
            return Err(Error::Input("center dimension mismatch".into()));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (p, &w) in self.points.iter().zip(&self.weights) {
            if geom::dist(p, x0) < r0 {
                points.push(p.clone());
                weights.push(w);
            }
        }
        Ok(DiscreteMeasure { points, weights, m: self.m })
    }

    /// Parse the plain-text atom format: one atom per line, m coordinates
    /// then the weight, whitespace-separated; '#' starts a comment.
    pub fn parse(text: &str) -> Result<DiscreteMeasure> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: bad number {t:?}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if nums.len() < 2 {
                return Err(Error::Parse(format!(
                    "line {}: need at least one coordinate and a weight",
                    lineno + 1
                )));
            }
            let (coords, w) = nums.split_at(nums.len() - 1);
            points.push(coords.to_vec());
            weights.push(w[0]);
        }
        DiscreteMeasure::new(points, weights)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, w) in self.points.iter().zip(&self.weights) {
            for c in p {
                out.push_str(&format!("{c:.17} "));
            }
            out.push_str(&format!("{w:.17}\n"));
        }
        out
    }
}

/// Barycenter and sorted eigen-structure of the second-moment form of a
/// measure: b(v, w) = integral of ((x - xbar).v)((x - xbar).w).
#[derive(Debug, Clone)]
pub struct PlaneFit {
    pub base: Vec<f64>,
    /// all m eigenvectors, by descending eigenvalue
    pub basis: Vec<Vec<f64>>,
    /// lambda_1 >= ... >= lambda_m >= 0
    pub eigenvalues: Vec<f64>,
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns (values, vectors)
/// in descending order. Sizes here are tiny, so robustness beats speed.
fn sym_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[p][q]).atan2(a[p][p] - a[q][q]);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp + s * akq;
                    a[k][q] = -s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk + s * aqk;
                    a[q][k] = -s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp + s * vq;
                    row[q] = -s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let vals = order.iter().map(|&i| a[i][i].max(0.0)).collect();
    let vecs = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (vals, vecs)
}

fn moment_matrix(mu: &DiscreteMeasure, center: &[f64]) -> Vec<Vec<f64>> {
    let m = mu.dim();
    let mut s = vec![vec![0.0; m]; m];
    for (p, &w) in mu.points().iter().zip(mu.weights()) {
        let d = geom::sub(p, center);
        for i in 0..m {
            for j in i..m {
                s[i][j] += w * d[i] * d[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            s[i][j] = s[j][i];
        }
    }
    s
}

/// Fit the measure with its barycenter and moment eigen-frame.
pub fn plane_fit(mu: &DiscreteMeasure) -> Result<PlaneFit> {
    let mass = mu.total_mass();
    if mu.is_empty() || mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let m = mu.dim();
    let mut base = vec![0.0; m];
    for (p, &w) in mu.points().iter().zip(mu.weights()) {
        geom::axpy(&mut base, w, p);
    }
    for c in base.iter_mut() {
        *c /= mass;
    }
    let (eigenvalues, basis) = sym_eigen(moment_matrix(mu, &base));
    Ok(PlaneFit { base, basis, eigenvalues })
}

/// k-th mean flatness of mu in B_{r0}(x0): r0^{-k-2} times the eigenvalue
/// tail of the restricted moment form.
#[derive(Debug, Clone)]
pub struct BetaResult {
    pub x0: Vec<f64>,
    pub r0: f64,
    pub k: usize,
    pub value: f64,
    /// `None` when the restriction is empty (value 0 by convention).
    pub fit: Option<PlaneFit>,
}

pub fn beta_k(mu: &DiscreteMeasure, x0: &[f64], r0: f64, k: usize) -> Result<BetaResult> {
    if mu.dim() > 0 && k >= mu.dim() {
        return Err(Error::Input(format!("flatness order k={k} needs k < m={}", mu.dim())));
    }
    let local = mu.restrict(x0, r0)?;
    if local.is_empty() || local.total_mass() <= 0.0 {
        return Ok(BetaResult { x0: x0.to_vec(), r0, k, value: 0.0, fit: None });
    }
    let fit = plane_fit(&local)?;
    let tail: f64 = fit.eigenvalues[k..].iter().sum();
    let value = r0.powi(-(k as i32) - 2) * tail;
    Ok(BetaResult { x0: x0.to_vec(), r0, k, value, fit: Some(fit) })
}

/// Discretized infimum over affine k-planes of the normalized squared
/// distance integral, as an independent check on `beta_k`.
///
/// Orientations are explored with seeded random frames refined by pairwise
/// (Givens) coordinate ascent on the captured moment mass; `resolution`
/// controls the number of restarts. Optimal planes pass through the
/// barycenter, so offsets are only perturbed a little as a safety margin.
pub fn beta_bruteforce(
    mu: &DiscreteMeasure,
    x0: &[f64],
    r0: f64,
    k: usize,
    resolution: usize,
) -> Result<f64> {
    if mu.dim() > 0 && k >= mu.dim() {
        return Err(Error::Input(format!("flatness order k={k} needs k < m={}", mu.dim())));
    }
    let local = mu.restrict(x0, r0)?;
    if local.is_empty() || local.total_mass() <= 0.0 {
        return Ok(0.0);
    }
    let m = local.dim();
    let fit = plane_fit(&local)?;

    let objective = |center: &[f64], frame: &[Vec<f64>]| -> f64 {
        // sum w |x - c|^2 - sum_{l<k} ((x - c).v_l)^2
        local
            .points()
            .iter()
            .zip(local.weights())
            .map(|(p, &w)| {
                let d = geom::sub(p, center);
                let full = geom::dot(&d, &d);
                let along: f64 = frame[..k].iter().map(|v| geom::dot(&d, v).powi(2)).sum();
                w * (full - along)
            })
            .sum()
    };

    let refine = |frame: &mut Vec<Vec<f64>>, s: &[Vec<f64>]| {
        // rotate (v_i in plane, v_j out of plane) to maximize captured mass
        for _ in 0..30 {
            let mut moved = 0.0f64;
            for i in 0..k {
                for j in k..m {
                    let svi: Vec<f64> = (0..m).map(|r| geom::dot(&s[r], &frame[i])).collect();
                    let svj: Vec<f64> = (0..m).map(|r| geom::dot(&s[r], &frame[j])).collect();
                    let a = geom::dot(&frame[i], &svi);
                    let c = geom::dot(&frame[j], &svj);
                    let b = geom::dot(&frame[i], &svj);
                    let theta = 0.5 * (2.0 * b).atan2(a - c);
                    if theta.abs() < 1e-15 {
                        continue;
                    }
                    moved = moved.max(theta.abs());
                    let (sn, cs) = theta.sin_cos();
                    for r in 0..m {
                        let (fi, fj) = (frame[i][r], frame[j][r]);
                        frame[i][r] = cs * fi + sn * fj;
                        frame[j][r] = -sn * fi + cs * fj;
                    }
                }
            }
            if moved < 1e-14 {
                break;
            }
        }
    };

    let s = moment_matrix(&local, &fit.base);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6265_7461);
    let mut best = f64::INFINITY;
    for restart in 0..resolution.max(1) + 1 {
        let mut frame: Vec<Vec<f64>> = if restart == 0 {
            (0..m)
                .map(|i| {
                    let mut e = vec![0.0; m];
                    e[i] = 1.0;
                    e
                })
                .collect()
        } else {
            // random orthonormal frame by Gram-Schmidt on Gaussian vectors
            let mut f: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    (0..m)
                        .map(|_| {
                            let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
                            (-2.0 * u1.max(1e-300).ln()).sqrt()
                                * (std::f64::consts::TAU * u2).cos()
                        })
                        .collect()
                })
                .collect();
            for i in 0..m {
                for j in 0..i {
                    let proj = geom::dot(&f[i], &f[j]);
                    let fj = f[j].clone();
                    geom::axpy(&mut f[i], -proj, &fj);
                }
                let n = geom::norm(&f[i]);
                for c in f[i].iter_mut() {
                    *c /= n.max(1e-300);
                }
            }
            f
        };
        if k > 0 {
            refine(&mut frame, &s);
        }
        // barycenter plus tiny offset perturbations along the frame
        let mut centers = vec![fit.base.clone()];
        for v in &frame {
            for sgn in [-1.0, 1.0] {
                let mut c = fit.base.clone();
                geom::axpy(&mut c, sgn * 1e-3 * r0, v);
                centers.push(c);
            }
        }
        for c in &centers {
            best = best.min(objective(c, &frame));
        }
    }
    Ok(r0.powi(-(k as i32) - 2) * best)
}

/// Dyadic partial sum approximating the scale integral of the flatness:
/// sum over the given scales of beta_k(x0, s) * ln 2.
pub fn jones_integral(
    mu: &DiscreteMeasure,
    x0: &[f64],
    k: usize,
    scales: &[f64],
) -> Result<f64> {
    if scales.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Input("scales must be positive".into()));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("scales must be strictly descending".into()));
    }
    let mut sum = 0.0;
    for &s in scales {
        sum += beta_k(mu, x0, s, k)?.value * std::f64::consts::LN_2;
    }
    Ok(sum)
}

/// Flatness of a Q-point cloud against the summed pinching over the same
/// atoms; the ratio is recorded, not bounded (its constant is not explicit).
#[derive(Debug, Clone, Copy)]
pub struct MeanflatPinchingReport {
    /// (m-2)-flatness of mu in B_{r/8}(x0)
    pub flatness: f64,
    /// r^{-(m-2)} sum over atoms in B_{r/8}(x0) of W(x; r/8, 4r) w(x)
    pub pinching_sum: f64,
    pub ratio: f64,
}

/// Shared core with the pinching supplied as a function, so synthetic
/// oracles can stand in for field quadrature.
pub fn meanflat_vs_pinching_with(
    pinch: impl Fn(&[f64]) -> Result<f64> + Sync,
    mu: &DiscreteMeasure,
    x0: &[f64],
    r: f64,
    k: usize,
) -> Result<MeanflatPinchingReport> {
    let local = mu.restrict(x0, r / 8.0)?;
    if local.is_empty() {
        return Ok(MeanflatPinchingReport { flatness: 0.0, pinching_sum: 0.0, ratio: 0.0 });
    }
    let flatness = beta_k(mu, x0, r / 8.0, k)?.value;
    let terms: Vec<f64> = local
        .points()
        .par_iter()
        .zip(local.weights())
        .map(|(p, &w)| pinch(p).map(|v| v.max(0.0) * w))
        .collect::<Result<_>>()?;
    let pinching_sum = r.powi(-(k as i32)) * terms.iter().sum::<f64>();
    let ratio = if flatness.abs() <= 1e-12 && pinching_sum.abs() <= 1e-12 {
        0.0
    } else {
        flatness / pinching_sum.max(1e-300)
    };
    Ok(MeanflatPinchingReport { flatness, pinching_sum, ratio })
}

pub fn meanflat_vs_pinching_check(
    f: &AnalyticField,
    phi: &WeightProfile,
    mu: &DiscreteMeasure,
    x0: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<MeanflatPinchingReport> {
    let k = f.dim() - 2;
    meanflat_vs_pinching_with(
        |x| pinch_w(f, phi, x, r / 8.0, 4.0 * r, q),
        mu,
        x0,
        r,
        k,
    )
}

/// Discretize the zero set of a balanced field over a grid: an atom at every
/// grid node that is a Q-point, weighted by (cell diameter)^(m-2).
pub fn measure_from_qpoints(
    f: &AnalyticField,
    region: &Grid,
    tol: f64,
) -> Result<DiscreteMeasure> {
    let m = f.dim();
    if region.lo.len() != m {
        return Err(Error::Input("grid dimension does not match field".into()));
    }
    let spacing = region
        .lo
        .iter()
        .zip(&region.hi)
        .zip(&region.n)
        .map(|((lo, hi), &n)| if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 })
        .fold(0.0, f64::max);
    let diam = spacing * (m as f64).sqrt();
    let w = if m == 2 { 1.0 } else { diam.powi(m as i32 - 2) };
    let points: Vec<Vec<f64>> = region
        .points()
        .into_par_iter()
        .filter(|p| f.is_q_point(p, tol))
        .collect();
    let n = points.len();
    DiscreteMeasure::new(points, vec![w; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::builtin;

    fn mu2(pts: &[[f64; 2]]) -> DiscreteMeasure {
        DiscreteMeasure::unit_weights(pts.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn restrict_cases() {
        let mu = mu2(&[[0.0, 0.0], [0.5, 0.0], [2.0, 0.0], [-3.0, 1.0]]);
        assert_eq!(mu.restrict(&[0.0, 0.0], 10.0).unwrap(), mu);
        assert!(mu.restrict(&[50.0, 0.0], 1.0).unwrap().is_empty());
        // strict inequality: the point at distance exactly 2 stays out
        let half = mu.restrict(&[0.0, 0.0], 2.0).unwrap();
        assert_eq!(half.len(), 2);
    }

    #[test]
    fn parse_roundtrip_and_comments() {
        let text = "# atoms\n0.0 1.0 2.0  # one\n3.0 -1.0 0.5\n\n";
        let mu = DiscreteMeasure::parse(text).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.dim(), 2);
        assert_eq!(mu.weights(), &[2.0, 0.5]);
        let back = DiscreteMeasure::parse(&mu.to_text()).unwrap();
        assert_eq!(mu, back);
        assert!(DiscreteMeasure::parse("1.0\n").is_err());
    }

    #[test]
    fn plane_fit_two_points() {
        let mu = mu2(&[[1.0, 0.0], [-1.0, 0.0]]);
        let fit = plane_fit(&mu).unwrap();
        assert!(geom::norm(&fit.base) < 1e-15);
        assert!((fit.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!(fit.eigenvalues[1].abs() < 1e-12);
        assert!(fit.basis[0][0].abs() > 1.0 - 1e-12); // +-e1
    }

    #[test]
    fn plane_fit_on_plane_has_zero_tail() {
        let pts: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![(i % 3) as f64, (i / 3) as f64, 0.0])
            .collect();
        let fit = plane_fit(&DiscreteMeasure::unit_weights(pts).unwrap()).unwrap();
        assert!(fit.eigenvalues[1] > 0.0);
        assert!(fit.eigenvalues[2].abs() < 1e-10);
    }

    #[test]
    fn plane_fit_equilateral_triangle() {
        let pts: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / 3.0;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let fit = plane_fit(&DiscreteMeasure::unit_weights(pts).unwrap()).unwrap();
        assert!((fit.eigenvalues[0] - 1.5).abs() < 1e-12);
        assert!((fit.eigenvalues[1] - 1.5).abs() < 1e-12);
        // orthonormality and trace
        assert!((geom::dot(&fit.basis[0], &fit.basis[1])).abs() < 1e-12);
        let trace: f64 = fit.eigenvalues.iter().sum();
        assert!((trace - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_errors() {
        let mu = DiscreteMeasure::empty(2);
        assert!(matches!(plane_fit(&mu), Err(Error::ZeroMass)));
    }

    #[test]
    fn beta_examples() {
        let collinear = mu2(&[[0.0, 0.0], [1.0, 0.5], [2.0, 1.0], [-2.0, -1.0]]);
        let b = beta_k(&collinear, &[0.0, 0.0], 3.0, 1).unwrap();
        assert!(b.value < 1e-12);

        let two = mu2(&[[1.0, 0.0], [-1.0, 0.0]]);
        let b0 = beta_k(&two, &[0.0, 0.0], 2.0, 0).unwrap();
        assert!((b0.value - 0.5).abs() < 1e-12);

        let tri: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / 3.0;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let tri = DiscreteMeasure::unit_weights(tri).unwrap();
        // circumradius 1 puts the vertices on the boundary: widen slightly
        let b1 = beta_k(&tri, &[0.0, 0.0], 1.0 + 1e-12, 1).unwrap();
        assert!((b1.value - 1.5).abs() < 1e-9, "{}", b1.value);

        let empty = beta_k(&two, &[10.0, 0.0], 0.5, 0).unwrap();
        assert_eq!(empty.value, 0.0);
        assert!(empty.fit.is_none());
        assert!(beta_k(&two, &[0.0, 0.0], 1.0, 2).is_err());
    }

    #[test]
    fn bruteforce_matches_eigen_form() {
        let two = mu2(&[[1.0, 0.0], [-1.0, 0.0]]);
        let v = beta_bruteforce(&two, &[0.0, 0.0], 2.0, 0, 4).unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{v}");

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let mu = DiscreteMeasure::unit_weights(pts).unwrap();
        for k in 0..3 {
            let exact = beta_k(&mu, &[0.0, 0.0, 0.0], 2.0, k).unwrap().value;
            let brute = beta_bruteforce(&mu, &[0.0, 0.0, 0.0], 2.0, k, 8).unwrap();
            assert!(brute >= exact - 1e-6, "k={k}: {brute} < {exact}");
            assert!((brute - exact).abs() < 1e-4, "k={k}: {brute} vs {exact}");
        }
    }

    #[test]
    fn jones_on_a_line_vanishes() {
        let pts: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64 / 64.0, 0.0]).collect();
        let mu = DiscreteMeasure::unit_weights(pts).unwrap();
        let scales: Vec<f64> = (1..=6).map(|j| 0.5f64.powi(j)).collect();
        let s = jones_integral(&mu, &[0.5, 0.0], 1, &scales).unwrap();
        assert!(s.abs() < 1e-12);
        assert!(jones_integral(&mu, &[0.5, 0.0], 1, &[0.25, 0.5]).is_err());
    }

    #[test]
    fn jones_quarter_circle_bounded() {
        // arclength-weighted sample of a smooth curve: dyadic sums stay small
        let n = 256;
        let w = std::f64::consts::FRAC_PI_2 / n as f64;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let th = std::f64::consts::FRAC_PI_2 * (i as f64 + 0.5) / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let mu = DiscreteMeasure::new(pts, vec![w; n]).unwrap();
        let scales: Vec<f64> = (1..=8).map(|j| 0.5f64.powi(j)).collect();
        let x0 = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        let s = jones_integral(&mu, &x0, 1, &scales).unwrap();
        assert!(s > 0.0 && s < 0.05, "{s}");
        // additivity over scale blocks
        let a = jones_integral(&mu, &x0, 1, &scales[..4]).unwrap();
        let b = jones_integral(&mu, &x0, 1, &scales[4..]).unwrap();
        assert!((s - (a + b)).abs() < 1e-15);
    }

    #[test]
    fn qpoint_measure_on_spine() {
        let f = builtin("cyl3").unwrap();
        // dyadic grid lines so the axis is sampled exactly
        let h = 0.0625;
        let g = Grid::new(
            vec![-0.125, -0.125, 0.0],
            vec![0.125, 0.125, 1.0],
            vec![5, 5, 65],
        )
        .unwrap();
        let mu = measure_from_qpoints(&f, &g, 1e-9).unwrap();
        assert_eq!(mu.len(), 65);
        for p in mu.points() {
            assert!(p[0] == 0.0 && p[1] == 0.0, "atom off the spine: {p:?}");
        }
        // weight (cell diameter)^{m-2} per atom, 65 atoms on the segment
        let mass = mu.total_mass();
        assert!((mass - 65.0 * h * 3f64.sqrt()).abs() < 1e-12, "{mass}");
    }

    #[test]
    fn qpoint_measure_planar_and_empty() {
        let f = builtin("q2_branch").unwrap();
        let g = Grid::new(vec![-0.25, -0.25], vec![0.25, 0.25], vec![17, 17]).unwrap();
        let mu = measure_from_qpoints(&f, &g, 1e-9).unwrap();
        assert_eq!(mu.len(), 1);
        assert_eq!(mu.total_mass(), 1.0);
        let off = Grid::new(vec![1.0, 1.0], vec![1.5, 1.5], vec![9, 9]).unwrap();
        assert!(measure_from_qpoints(&f, &off, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn pinching_check_on_spine_vanishes() {
        let f = builtin("cyl3").unwrap();
        let phi = WeightProfile::Default;
        let q = QuadratureScheme::coarse();
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![0.0, 0.0, -0.1 + 0.025 * i as f64]).collect();
        let mu = DiscreteMeasure::unit_weights(pts).unwrap();
        let rep = meanflat_vs_pinching_check(&f, &phi, &mu, &[0.0, 0.0, 0.0], 1.0, &q).unwrap();
        assert!(rep.flatness < 1e-10, "flatness {}", rep.flatness);
        assert!(rep.pinching_sum < 1e-5, "pinching {}", rep.pinching_sum);
    }

    #[test]
    fn pinching_check_degenerate_cases() {
        let f = builtin("cyl3").unwrap();
        let phi = WeightProfile::Default;
        let q = QuadratureScheme::coarse();
        let single = DiscreteMeasure::unit_weights(vec![vec![0.0, 0.0, 0.0]]).unwrap();
        let rep = meanflat_vs_pinching_check(&f, &phi, &single, &[0.0, 0.0, 0.0], 1.0, &q).unwrap();
        assert_eq!(rep.flatness, 0.0);
        let empty = DiscreteMeasure::empty(3);
        let rep2 = meanflat_vs_pinching_check(&f, &phi, &empty, &[0.0, 0.0, 0.0], 1.0, &q).unwrap();
        assert_eq!(rep2.ratio, 0.0);
    }

    #[test]
    fn perturbed_spine_with_synthetic_pinching() {
        // atoms near a line with sigma = 0.01 normal noise; a synthetic
        // pinching proportional to squared distance from the line
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                vec![
                    0.01 * (rng.gen::<f64>() - 0.5),
                    0.01 * (rng.gen::<f64>() - 0.5),
                    -0.12 + 0.006 * i as f64,
                ]
            })
            .collect();
        let mu = DiscreteMeasure::unit_weights(pts).unwrap();
        let rep = meanflat_vs_pinching_with(
            |x| Ok(x[0] * x[0] + x[1] * x[1]),
            &mu,
            &[0.0, 0.0, 0.0],
            1.0,
            1,
        )
        .unwrap();
        assert!(rep.flatness > 0.0);
        assert!(rep.pinching_sum > 0.0);
        assert!(rep.ratio.is_finite());
    }

    #[test]
    fn beta_invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|_| vec![rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5])
            .collect();
        let mu = DiscreteMeasure::unit_weights(pts.clone()).unwrap();
        let v = beta_k(&mu, &[0.0, 0.0], 1.0, 1).unwrap().value;

        // rotation + translation
        let (s, c) = 0.7f64.sin_cos();
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| vec![c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.0])
            .collect();
        let mu2 = DiscreteMeasure::unit_weights(moved).unwrap();
        let v2 = beta_k(&mu2, &[3.0, -1.0], 1.0, 1).unwrap().value;
        assert!((v - v2).abs() < 1e-10);

        // joint dilation: value scales by lambda^{-k}
        let lam = 2.5;
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| geom::scale(p, lam)).collect();
        let mu3 = DiscreteMeasure::unit_weights(scaled).unwrap();
        let v3 = beta_k(&mu3, &[0.0, 0.0], lam, 1).unwrap().value;
        assert!((v3 * lam - v).abs() < 1e-10, "{v3} vs {v}");

        // eigenvalue tails nonincreasing in k
        let fit = plane_fit(&mu).unwrap();
        let t0: f64 = fit.eigenvalues.iter().sum();
        let t1: f64 = fit.eigenvalues[1..].iter().sum();
        assert!(t0 >= t1 && t1 >= 0.0);
    }
}
