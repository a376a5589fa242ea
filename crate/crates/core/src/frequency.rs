//! Smoothed Dirichlet energy, height, and frequency of a field around a
//! point, plus the identity/monotonicity checks built on them.
//!
//! With a cutoff profile phi and t = |y - x|:
//!
//!   D(x,r) = integral of |Du|^2 phi(t/r)
//!   H(x,r) = -integral of |u|^2 t^{-1} phi'(t/r)
//!   E(x,r) = -integral of |du/dnu|^2 t phi'(t/r)     (nu = radial direction)
//!   I(x,r) = r D(x,r) / H(x,r)
//!
//! For a field homogeneous of degree a about x, I(x, .) is constant equal
//! to a; in general it is nondecreasing in r. The checks below probe these
//! facts and the radial-derivative identities relating D, H, E.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::AnalyticField;
use crate::quadrature::{annulus_integral, gauss_legendre, Integral, QuadratureScheme};
use crate::weight::WeightProfile;
use crate::{Error, Result};

/// Point evaluation of the three functionals at one (x, r).
#[derive(Debug, Clone)]
pub struct FrequencyReport {
    pub x: Vec<f64>,
    pub r: f64,
    pub d: f64,
    pub h: f64,
    pub e: f64,
    pub i: f64,
    /// |I - I at halved node counts|; bumped when quadrature nodes hit the
    /// branch set and were dropped.
    pub est_error: f64,
}

/// Relative residuals of the radial identities at one (x, r).
#[derive(Debug, Clone, Copy)]
pub struct IdentityResiduals {
    /// D against the boundary pairing -(1/r) integral phi' (du/dnu . u)
    pub pairing: f64,
    /// d/dr D against (m-2)/r D + 2/r^2 E
    pub dirichlet_radial: f64,
    /// d/dr H against (m-1)/r H + 2D
    pub height_radial: f64,
    /// signed slack of r^2 D^2 <= H E, normalized by H E (<= 0 up to
    /// quadrature error; ~0 exactly for homogeneous fields)
    pub cauchy_schwarz: f64,
}

fn degenerate_threshold(f: &AnalyticField, r: f64) -> f64 {
    1e-14 * r.powf((f.dim() - 1) as f64 + 2.0 * f.alpha_max())
}

fn knots_abs(phi: &WeightProfile, r: f64) -> Vec<f64> {
    phi.knots().iter().map(|k| k * r).collect()
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Input(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

fn rel_c(rel: [f64; 2]) -> Complex64 {
    Complex64::new(rel[0], rel[1])
}

fn dirichlet_raw(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Integral {
    let b = f.base_branch();
    let c = f.planar_center();
    annulus_integral(
        f.dim(),
        x,
        Some(c),
        0.0,
        r * phi.support(),
        &knots_abs(phi, r),
        q,
        |abs, _| {
            let z = Complex64::new(abs[0] - c[0], abs[1] - c[1]);
            b.derivatives(z)
                .ok()
                .map(|ds| ds.iter().map(|d| 2.0 * d.norm_sqr()).sum::<f64>())
        },
        |v: &f64, t| v * phi.phi(t / r),
    )
}

fn height_raw(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Integral {
    let b = f.base_branch();
    let c = f.planar_center();
    let kn = phi.knots();
    annulus_integral(
        f.dim(),
        x,
        Some(c),
        r * kn[0],
        r * phi.support(),
        &knots_abs(phi, r),
        q,
        |abs, _| {
            let z = Complex64::new(abs[0] - c[0], abs[1] - c[1]);
            Some(b.values(z).iter().map(|u| u.norm_sqr()).sum::<f64>())
        },
        |v: &f64, t| v * (-phi.dphi(t / r)) / t,
    )
}

fn energy_raw(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Integral {
    let b = f.base_branch();
    let c = f.planar_center();
    let kn = phi.knots();
    annulus_integral(
        f.dim(),
        x,
        Some(c),
        r * kn[0],
        r * phi.support(),
        &knots_abs(phi, r),
        q,
        |abs, rel| {
            let z = Complex64::new(abs[0] - c[0], abs[1] - c[1]);
            let w = rel_c(rel);
            b.derivatives(z)
                .ok()
                .map(|ds| ds.iter().map(|d| (d * w).norm_sqr()).sum::<f64>())
        },
        // |du/dnu|^2 t (-phi') dy with du/dnu = J.(y-x)/t, so the planar
        // pairing above divided by t^2, times t, times -phi'
        |v: &f64, t| v * (-phi.dphi(t / r)) / t,
    )
}

/// Weighted Dirichlet energy D(x, r).
pub fn dirichlet_d(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<f64> {
    check_radius(r)?;
    f.planar_coord(x)?; // dimension check
    Ok(dirichlet_raw(f, phi, x, r, q).value)
}

/// Weighted boundary height H(x, r). Errors when the field vanishes on the
/// annulus carrying phi' (frequency undefined there).
pub fn height_h(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<f64> {
    check_radius(r)?;
    f.planar_coord(x)?;
    let h = height_raw(f, phi, x, r, q).value;
    if h <= degenerate_threshold(f, r) {
        return Err(Error::DegenerateHeight { d: f64::NAN, h });
    }
    Ok(h)
}

/// Weighted radial energy E(x, r).
pub fn energy_e(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<f64> {
    check_radius(r)?;
    f.planar_coord(x)?;
    Ok(energy_raw(f, phi, x, r, q).value)
}

fn frequency_once(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<(f64, f64, f64, f64, usize)> {
    let di = dirichlet_raw(f, phi, x, r, q);
    let hi = height_raw(f, phi, x, r, q);
    if hi.value <= degenerate_threshold(f, r) {
        return Err(Error::DegenerateHeight { d: di.value, h: hi.value });
    }
    let ei = energy_raw(f, phi, x, r, q);
    let i = r * di.value / hi.value;
    Ok((di.value, hi.value, ei.value, i, di.skipped + hi.skipped + ei.skipped))
}

/// Just I(x, r), skipping E and the error estimate; the covering algorithms
/// query frequencies heavily and only need the ratio.
pub fn frequency_value(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<f64> {
    check_radius(r)?;
    f.planar_coord(x)?;
    let di = dirichlet_raw(f, phi, x, r, q);
    let hi = height_raw(f, phi, x, r, q);
    if hi.value <= degenerate_threshold(f, r) {
        return Err(Error::DegenerateHeight { d: di.value, h: hi.value });
    }
    Ok(r * di.value / hi.value)
}

/// Full report (D, H, E, I) with an error estimate from node-count halving.
pub fn frequency_i(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<FrequencyReport> {
    check_radius(r)?;
    f.planar_coord(x)?;
    let (d, h, e, i, skipped) = frequency_once(f, phi, x, r, q)?;
    let est_error = match frequency_once(f, phi, x, r, &q.halved()) {
        Ok((_, _, _, i2, _)) => (i - i2).abs(),
        Err(_) => f64::INFINITY,
    };
    let est_error = if skipped > 0 { est_error.max(1e-9 * skipped as f64) } else { est_error };
    Ok(FrequencyReport { x: x.to_vec(), r, d, h, e, i, est_error })
}

/// Frequency pinching W(x; s, r) = I(x, r) - I(x, s), s <= r.
pub fn pinch_w(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    s: f64,
    r: f64,
    q: &QuadratureScheme,
) -> Result<f64> {
    check_radius(s)?;
    check_radius(r)?;
    if s > r {
        return Err(Error::Input(format!("pinching needs s <= r, got s={s}, r={r}")));
    }
    if s == r {
        return Ok(0.0);
    }
    let (_, _, _, ir, _) = frequency_once(f, phi, x, r, q)?;
    let (_, _, _, is, _) = frequency_once(f, phi, x, s, q)?;
    Ok(ir - is)
}

/// Relative residual of the height doubling identity
/// s^{1-m} H(x,s) = r^{1-m} H(x,r) exp(-2 int_s^r I(x,t) dt/t).
pub fn doubling_residual(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    s: f64,
    r: f64,
    q: &QuadratureScheme,
) -> Result<f64> {
    check_radius(s)?;
    check_radius(r)?;
    if s > r {
        return Err(Error::Input(format!("doubling needs s <= r, got s={s}, r={r}")));
    }
    if s == r {
        return Ok(0.0);
    }
    let m = f.dim() as f64;
    let hs = height_h(f, phi, x, s, q)?;
    let hr = height_h(f, phi, x, r, q)?;
    // int_s^r I dt/t in log-radius, panelled Gauss-Legendre; I is smooth in
    // log r so a few panels reach quadrature-noise level
    let (la, lb) = (s.ln(), r.ln());
    let n_panels = ((lb - la) / 0.7).ceil().max(1.0) as usize;
    let (gn, gw) = gauss_legendre(12);
    let mut int_i = 0.0;
    for p in 0..n_panels {
        let a = la + (lb - la) * p as f64 / n_panels as f64;
        let b = la + (lb - la) * (p + 1) as f64 / n_panels as f64;
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        for (k, &gx) in gn.iter().enumerate() {
            let t = (mid + half * gx).exp();
            let (_, _, _, it, _) = frequency_once(f, phi, x, t, q)?;
            int_i += gw[k] * half * it;
        }
    }
    let lhs = s.powf(1.0 - m) * hs;
    let rhs = r.powf(1.0 - m) * hr * (-2.0 * int_i).exp();
    Ok((lhs - rhs).abs() / lhs.max(rhs))
}

/// Radial derivative by central differences with one Richardson step.
fn d_dr(mut eval: impl FnMut(f64) -> Result<f64>, r: f64) -> Result<f64> {
    let h = 0.01 * r;
    let fd = |e: &mut dyn FnMut(f64) -> Result<f64>, h: f64| -> Result<f64> {
        Ok((e(r + h)? - e(r - h)?) / (2.0 * h))
    };
    let c1 = fd(&mut eval, h)?;
    let c2 = fd(&mut eval, 0.5 * h)?;
    Ok((4.0 * c2 - c1) / 3.0)
}

/// Residuals of the radial identities tying D, H, E together at (x, r).
pub fn identity_residuals(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<IdentityResiduals> {
    check_radius(r)?;
    f.planar_coord(x)?;
    let m = f.dim() as f64;
    let d = dirichlet_d(f, phi, x, r, q)?;
    let h = height_h(f, phi, x, r, q)?;
    let e = energy_e(f, phi, x, r, q)?;

    // boundary pairing form of D
    let b = f.base_branch();
    let c = f.planar_center();
    let kn = phi.knots();
    let pairing_val = annulus_integral(
        f.dim(),
        x,
        Some(c),
        r * kn[0],
        r * phi.support(),
        &knots_abs(phi, r),
        q,
        |abs, rel| {
            let z = Complex64::new(abs[0] - c[0], abs[1] - c[1]);
            let w = rel_c(rel);
            let us = b.values(z);
            b.derivatives(z).ok().map(|ds| {
                ds.iter()
                    .zip(&us)
                    .map(|(dz, u)| ((dz * w) * u.conj()).re)
                    .sum::<f64>()
            })
        },
        |v: &f64, t| v * (-phi.dphi(t / r)) / (r * t),
    )
    .value;
    let pairing = (d - pairing_val).abs() / d.abs().max(1e-300);

    let dd = d_dr(|t| dirichlet_d(f, phi, x, t, q), r)?;
    let dd_rhs = (m - 2.0) / r * d + 2.0 / (r * r) * e;
    let scale_d = dd.abs().max(dd_rhs.abs()).max(d / r);
    let dirichlet_radial = (dd - dd_rhs).abs() / scale_d;

    let dh = d_dr(|t| height_h(f, phi, x, t, q), r)?;
    let dh_rhs = (m - 1.0) / r * h + 2.0 * d;
    let scale_h = dh.abs().max(dh_rhs.abs()).max(h / r);
    let height_radial = (dh - dh_rhs).abs() / scale_h;

    let cauchy_schwarz = (r * r * d * d - h * e) / (h * e).max(1e-300);

    Ok(IdentityResiduals { pairing, dirichlet_radial, height_radial, cauchy_schwarz })
}

/// Reports along a sorted list of radii, with the smallest consecutive
/// increment of I (negative values beyond quadrature error flag
/// non-monotonicity).
#[derive(Debug, Clone)]
pub struct FrequencyProfile {
    pub reports: Vec<FrequencyReport>,
    pub min_step: f64,
}

pub fn frequency_profile(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    radii: &[f64],
    q: &QuadratureScheme,
) -> Result<FrequencyProfile> {
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("radii must be strictly ascending".into()));
    }
    let reports: Vec<FrequencyReport> = radii
        .par_iter()
        .map(|&r| frequency_i(f, phi, x, r, q))
        .collect::<Result<_>>()?;
    let min_step = reports
        .windows(2)
        .map(|w| w[1].i - w[0].i)
        .fold(f64::INFINITY, f64::min);
    Ok(FrequencyProfile { reports, min_step })
}

/// Uniform rectangular lattice; an axis with a single node sits at `lo`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != n.len() || lo.is_empty() {
            return Err(Error::Input("grid axes must agree in number".into()));
        }
        if n.iter().any(|&k| k == 0) || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Input("grid needs n >= 1 and lo <= hi per axis".into()));
        }
        Ok(Grid { lo, hi, n })
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let dims = self.lo.len();
        let total: usize = self.n.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; dims];
                for k in 0..dims {
                    let i = idx % self.n[k];
                    idx /= self.n[k];
                    p[k] = if self.n[k] == 1 {
                        self.lo[k]
                    } else {
                        self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (self.n[k] - 1) as f64
                    };
                }
                p
            })
            .collect()
    }
}

/// A grid point whose frequency at scale r dropped below eps even though a
/// zero of the field sits within r/4 of it.
#[derive(Debug, Clone)]
pub struct RegularityViolation {
    pub x: Vec<f64>,
    pub i: f64,
    pub q_point: Vec<f64>,
}

/// Scan a grid for low frequency next to multiple points. For fields with a
/// single sheet there is nothing to detect and the result is empty.
pub fn epsilon_regularity_scan(
    f: &AnalyticField,
    phi: &WeightProfile,
    region: &Grid,
    r: f64,
    eps: f64,
    q: &QuadratureScheme,
) -> Result<Vec<RegularityViolation>> {
    check_radius(r)?;
    if region.lo.len() != f.dim() {
        return Err(Error::Input("grid dimension does not match field".into()));
    }
    if f.q() < 2 {
        return Ok(Vec::new());
    }
    let m = f.dim();
    let n_sub = 9usize;
    let spacing = (r / 2.0) / (n_sub - 1) as f64;
    // a zero within one cell of a sub-node y forces |u(y)| below this
    let c_norm = (f.q() as f64).sqrt()
        * f.base_branch().terms().iter().map(|t| t.c.norm()).sum::<f64>();
    let tol = c_norm * (0.75 * spacing * (m as f64).sqrt()).powf(f.alpha_min());

    let hits: Vec<Option<RegularityViolation>> = region
        .points()
        .par_iter()
        .map(|x| {
            let i = match frequency_once(f, phi, x, r, q) {
                Ok((_, _, _, i, _)) => i,
                Err(_) => return None, // field vanishes on the annulus: no frequency to test
            };
            if i > eps {
                return None;
            }
            let sub = Grid {
                lo: x.iter().map(|c| c - r / 4.0).collect(),
                hi: x.iter().map(|c| c + r / 4.0).collect(),
                n: vec![n_sub; m],
            };
            for y in sub.points() {
                let dist2: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist2 > (r / 4.0) * (r / 4.0) {
                    continue;
                }
                if f.is_q_point(&y, tol) {
                    return Some(RegularityViolation { x: x.clone(), i, q_point: y });
                }
            }
            None
        })
        .collect();
    Ok(hits.into_iter().flatten().collect())
}

/// Sampled sup bounds of nearby height and frequency against the values at
/// the center at a larger scale; regression quantities, no fixed constants.
#[derive(Debug, Clone, Copy)]
pub struct UniformBoundReport {
    /// max over y in B_rho(x) of H(y, rho) / H(x, 4 rho)
    pub height_ratio: f64,
    /// max over y in B_{rho/4}(x) of I(y, rho) / (I(x, 16 rho) + 1)
    pub frequency_ratio: f64,
}

fn ball_samples(x: &[f64], rho: f64, m: usize) -> Vec<Vec<f64>> {
    let mut out = vec![x.to_vec()];
    for &scale in &[0.5, 1.0] {
        for j in 0..8 {
            let th = std::f64::consts::TAU * j as f64 / 8.0;
            let mut y = x.to_vec();
            y[0] += rho * scale * th.cos();
            y[1] += rho * scale * th.sin();
            out.push(y);
        }
        for k in 2..m {
            for sgn in [-1.0, 1.0] {
                let mut y = x.to_vec();
                y[k] += sgn * rho * scale;
                out.push(y);
            }
        }
    }
    out
}

pub fn uniform_bound_report(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    rho: f64,
    q: &QuadratureScheme,
) -> Result<UniformBoundReport> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Input("sampling radius must be positive (empty ball otherwise)".into()));
    }
    let m = f.dim();
    let h_base = height_h(f, phi, x, 4.0 * rho, q)?;
    let height_ratio = ball_samples(x, rho, m)
        .par_iter()
        .map(|y| height_h(f, phi, y, rho, q).map(|h| h / h_base))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    let (_, _, _, i_base, _) = frequency_once(f, phi, x, 16.0 * rho, q)?;
    let frequency_ratio = ball_samples(x, rho / 4.0, m)
        .par_iter()
        .map(|y| frequency_once(f, phi, y, rho, q).map(|t| t.3 / (i_base + 1.0)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(UniformBoundReport { height_ratio, frequency_ratio })
}

/// Chebyshev-Lobatto interpolant of t -> I(x, t) in log radius.
struct FreqInterp {
    la: f64,
    lb: f64,
    vals: Vec<f64>,
}

impl FreqInterp {
    fn build(
        f: &AnalyticField,
        phi: &WeightProfile,
        x: &[f64],
        t_lo: f64,
        t_hi: f64,
        n: usize,
        q: &QuadratureScheme,
    ) -> Result<FreqInterp> {
        let (la, lb) = (t_lo.ln(), t_hi.ln());
        let vals = (0..n)
            .into_par_iter()
            .map(|j| {
                let c = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
                let t = (0.5 * (la + lb) + 0.5 * (lb - la) * c).exp();
                frequency_once(f, phi, x, t, q).map(|t4| t4.3)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FreqInterp { la, lb, vals })
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.vals.len();
        let u = (2.0 * t.ln() - (self.la + self.lb)) / (self.lb - self.la);
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &v) in self.vals.iter().enumerate() {
            let xj = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
            let diff = u - xj;
            if diff.abs() < 1e-14 {
                return v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                w *= 0.5;
            }
            num += w / diff * v;
            den += w / diff;
        }
        num / den
    }
}

/// Homogeneity-defect integral paired with the frequency pinching.
#[derive(Debug, Clone, Copy)]
pub struct PinchingReport {
    /// integral over B_2(x) \ B_{1/4}(x) of sum_i |(z-x).Du_i - I(x,|z-x|) u_i|^2
    pub integral: f64,
    /// W(x; 1/8, 4)
    pub pinch: f64,
    /// integral / pinch (infinite when the pinching vanishes but the defect
    /// does not; 0 when both vanish)
    pub ratio: f64,
}

pub fn pinching_integral(
    f: &AnalyticField,
    phi: &WeightProfile,
    x: &[f64],
    q: &QuadratureScheme,
) -> Result<PinchingReport> {
    f.planar_coord(x)?;
    let interp = FreqInterp::build(f, phi, x, 0.25, 2.0, 17, q)?;
    let b = f.base_branch();
    let c = f.planar_center();
    let defect = annulus_integral(
        f.dim(),
        x,
        Some(c),
        0.25,
        2.0,
        &[],
        q,
        |abs, rel| {
            let z = Complex64::new(abs[0] - c[0], abs[1] - c[1]);
            let w = rel_c(rel);
            let us = b.values(z);
            b.derivatives(z).ok().map(|ds| {
                ds.iter()
                    .zip(us)
                    .map(|(dz, u)| (dz * w, u))
                    .collect::<Vec<(Complex64, Complex64)>>()
            })
        },
        |pairs: &Vec<(Complex64, Complex64)>, t| {
            let i_t = interp.eval(t);
            pairs.iter().map(|(a, u)| (a - i_t * u).norm_sqr()).sum()
        },
    )
    .value;
    let pinch = pinch_w(f, phi, x, 0.125, 4.0, q)?;
    let tol = 1e-9;
    let ratio = if defect.abs() <= tol && pinch.abs() <= tol {
        0.0
    } else {
        defect / pinch.max(0.0)
    };
    Ok(PinchingReport { integral: defect, pinch, ratio })
}

/// Sampled Lipschitz quotient of I(. , r) along a segment, against the
/// square-root pinching at its endpoints.
#[derive(Debug, Clone, Copy)]
pub struct VariationReport {
    /// max over sampled pairs of |I(z,r) - I(y,r)| / |z - y|
    pub lipschitz: f64,
    /// sqrt W(x1; r/8, 4r) + sqrt W(x2; r/8, 4r)
    pub pinch_bound: f64,
    pub ratio: f64,
}

pub fn frequency_variation_check(
    f: &AnalyticField,
    phi: &WeightProfile,
    x1: &[f64],
    x2: &[f64],
    r: f64,
    q: &QuadratureScheme,
) -> Result<VariationReport> {
    check_radius(r)?;
    if x1.len() != x2.len() || x1.len() != f.dim() {
        return Err(Error::Input("segment endpoints must match the field dimension".into()));
    }
    let gap: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if gap > r / 4.0 {
        return Err(Error::Input(format!("endpoints {gap:.3e} apart exceed r/4 = {:.3e}", r / 4.0)));
    }
    let w1 = pinch_w(f, phi, x1, r / 8.0, 4.0 * r, q)?;
    let w2 = pinch_w(f, phi, x2, r / 8.0, 4.0 * r, q)?;
    let pinch_bound = w1.max(0.0).sqrt() + w2.max(0.0).sqrt();

    if gap == 0.0 {
        return Ok(VariationReport { lipschitz: 0.0, pinch_bound, ratio: 0.0 });
    }
    let n_samples = 5;
    let pts: Vec<Vec<f64>> = (0..n_samples)
        .map(|k| {
            let s = k as f64 / (n_samples - 1) as f64;
            x1.iter().zip(x2).map(|(a, b)| a + s * (b - a)).collect()
        })
        .collect();
    let is: Vec<f64> = pts
        .par_iter()
        .map(|p| frequency_once(f, phi, p, r, q).map(|t| t.3))
        .collect::<Result<_>>()?;
    let mut lipschitz: f64 = 0.0;
    for a in 0..n_samples {
        for b in a + 1..n_samples {
            let d = gap * (b - a) as f64 / (n_samples - 1) as f64;
            lipschitz = lipschitz.max((is[a] - is[b]).abs() / d);
        }
    }
    let ratio = if lipschitz <= 1e-9 { 0.0 } else { lipschitz / pinch_bound };
    Ok(VariationReport { lipschitz, pinch_bound, ratio })
}
