//! Covering machinery for zero sets with almost-constant frequency: spine
//! spanning predicates, the scale-by-scale intermediate cover, the final
//! cover with its frequency-drop dichotomy, the drop-iteration driver, the
//! volume-bound hypothesis check for discrete ball measures, a packing
//! auditor, and grid Minkowski-content estimation.
//!
//! Everything here works on finite point sets; frequencies come through an
//! oracle that is either backed by field quadrature (with a cache) or by a
//! tabulated function, so the combinatorics can be exercised cheaply.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::field::AnalyticField;
use crate::frequency::{frequency_value, Grid};
use crate::geom::{self, AffinePlane};
use crate::meanflat::{beta_k, DiscreteMeasure};
use crate::quadrature::QuadratureScheme;
use crate::weight::WeightProfile;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Frequency oracles

/// Tabulated I(y, r) on a rectilinear grid with multilinear interpolation;
/// queries are clamped to the table's box.
#[derive(Debug, Clone)]
pub struct InterpTable {
    /// grid lines per axis: m spatial axes then the radius axis
    axes: Vec<Vec<f64>>,
    /// row-major values, last axis fastest
    values: Vec<f64>,
}

impl InterpTable {
    pub fn from_grid(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.len() < 2 {
            return Err(Error::Input("table needs at least one spatial axis and a radius axis".into()));
        }
        for ax in &axes {
            if ax.is_empty() || ax.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Input("table axes must be strictly increasing and nonempty".into()));
            }
        }
        let total: usize = axes.iter().map(|a| a.len()).product();
        if values.len() != total {
            return Err(Error::Input(format!(
                "table has {} values, axes imply {total}",
                values.len()
            )));
        }
        let t = InterpTable { axes, values };
        // frequencies are nondecreasing in the radius: check every r-line
        let nr = t.axes.last().unwrap().len();
        for chunk in t.values.chunks(nr) {
            if chunk.windows(2).any(|w| w[1] < w[0] - 1e-12) {
                return Err(Error::Input("table values must be nondecreasing in r".into()));
            }
        }
        Ok(t)
    }

    pub fn constant(m: usize, value: f64) -> Self {
        InterpTable { axes: vec![vec![0.0]; m + 1], values: vec![value] }
    }

    /// Build from a sampling function over given grid lines.
    pub fn tabulate(axes: Vec<Vec<f64>>, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let total: usize = axes.iter().map(|a| a.len()).product();
        let m = axes.len() - 1;
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let coords: Vec<f64> = idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
            values.push(f(&coords[..m], coords[m]));
            for k in (0..axes.len()).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::from_grid(axes, values)
    }

    /// Parse text rows `y... r I`, '#' comments; the rows must fill a full
    /// rectilinear grid.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: bad number {t:?}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            if nums.len() < 3 {
                return Err(Error::Parse(format!("line {}: need y..., r, I", lineno + 1)));
            }
            if let Some(first) = rows.first() {
                if first.len() != nums.len() {
                    return Err(Error::Parse(format!("line {}: ragged row", lineno + 1)));
                }
            }
            rows.push(nums);
        }
        if rows.is_empty() {
            return Err(Error::Parse("empty oracle table".into()));
        }
        let ncols = rows[0].len();
        let naxes = ncols - 1;
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); naxes];
        for row in &rows {
            for (k, ax) in axes.iter_mut().enumerate() {
                if !ax.iter().any(|v| (v - row[k]).abs() <= 1e-12) {
                    ax.push(row[k]);
                }
            }
        }
        for ax in axes.iter_mut() {
            ax.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let total: usize = axes.iter().map(|a| a.len()).product();
        if rows.len() != total {
            return Err(Error::Parse(format!(
                "{} rows do not fill the {total}-node rectilinear grid",
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; total];
        for row in &rows {
            let mut flat = 0usize;
            for (k, ax) in axes.iter().enumerate() {
                let i = ax
                    .iter()
                    .position(|v| (v - row[k]).abs() <= 1e-12)
                    .ok_or_else(|| Error::Parse("row off the grid".into()))?;
                flat = flat * ax.len() + i;
            }
            values[flat] = row[ncols - 1];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Parse("duplicate rows leave grid nodes unset".into()));
        }
        Self::from_grid(axes, values)
    }

    pub fn dim(&self) -> usize {
        self.axes.len() - 1
    }

    pub fn eval(&self, y: &[f64], r: f64) -> f64 {
        let naxes = self.axes.len();
        // per axis: bracketing indices and interpolation weight
        let mut lohi = Vec::with_capacity(naxes);
        for (k, ax) in self.axes.iter().enumerate() {
            let c = if k + 1 == naxes { r } else { y[k] };
            let c = c.clamp(ax[0], *ax.last().unwrap());
            let j = ax.partition_point(|&v| v <= c).min(ax.len() - 1).max(1) - 1;
            let (a, b) = (ax[j], ax[(j + 1).min(ax.len() - 1)]);
            let w = if b > a { (c - a) / (b - a) } else { 0.0 };
            lohi.push((j, (j + 1).min(ax.len() - 1), w));
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << naxes) {
            let mut flat = 0usize;
            let mut weight = 1.0;
            for (k, &(lo, hi, w)) in lohi.iter().enumerate() {
                let pick_hi = corner >> k & 1 == 1;
                let (i, wk) = if pick_hi { (hi, w) } else { (lo, 1.0 - w) };
                flat = flat * self.axes[k].len() + i;
                weight *= wk;
            }
            if weight != 0.0 {
                acc += weight * self.values[flat];
            }
        }
        acc
    }
}

/// Frequency source for the covering algorithms.
pub enum FrequencyOracle {
    FieldBacked {
        field: AnalyticField,
        phi: WeightProfile,
        scheme: QuadratureScheme,
        cache: Mutex<HashMap<Vec<i64>, f64>>,
    },
    Synthetic(InterpTable),
}

impl FrequencyOracle {
    pub fn field_backed(field: AnalyticField, phi: WeightProfile, scheme: QuadratureScheme) -> Self {
        FrequencyOracle::FieldBacked { field, phi, scheme, cache: Mutex::new(HashMap::new()) }
    }

    pub fn synthetic(table: InterpTable) -> Self {
        FrequencyOracle::Synthetic(table)
    }

    pub fn constant(m: usize, value: f64) -> Self {
        FrequencyOracle::Synthetic(InterpTable::constant(m, value))
    }

    pub fn query(&self, y: &[f64], r: f64) -> Result<f64> {
        match self {
            FrequencyOracle::Synthetic(t) => Ok(t.eval(y, r)),
            FrequencyOracle::FieldBacked { field, phi, scheme, cache } => {
                // covering loops re-query identical pairs heavily
                let key: Vec<i64> = y
                    .iter()
                    .chain(std::iter::once(&r))
                    .map(|v| (v / 1e-9).round() as i64)
                    .collect();
                if let Some(&v) = cache.lock().unwrap().get(&key) {
                    return Ok(v);
                }
                let v = frequency_value(field, phi, y, r, scheme)?;
                cache.lock().unwrap().insert(key, v);
                Ok(v)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Spine predicates

/// True iff each point after the first clears the previous points' affine
/// span by at least rho * r.
pub fn rho_linearly_independent(pts: &[Vec<f64>], rho: f64, r: f64) -> bool {
    if pts.is_empty() {
        return false;
    }
    let mut plane = AffinePlane { base: pts[0].clone(), basis: Vec::new() };
    for p in &pts[1..] {
        let (res, _) = plane.residual(p);
        if res < rho * r {
            return false;
        }
        plane.extend(p);
    }
    true
}

/// Greedy plane growth from a point set: repeatedly add the point with the
/// largest residual, while it is at least rho * r. Starts from the
/// lexicographically smallest point for reproducibility. Returns the plane
/// and the residual at which growth stopped.
fn greedy_span(f_pts: &[Vec<f64>], x: &[f64], rho: f64, r: f64, max_dim: usize) -> (AffinePlane, f64) {
    let base = f_pts
        .iter()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .cloned()
        .unwrap_or_else(|| x.to_vec());
    let mut plane = AffinePlane { base, basis: Vec::new() };
    let mut stopped_at = 0.0;
    while plane.dim() < max_dim {
        let best = f_pts
            .iter()
            .map(|p| (plane.residual(p).0, p))
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        match best {
            Some((res, p)) if res >= rho * r => plane.extend(p),
            Some((res, _)) => {
                stopped_at = res;
                break;
            }
            None => break,
        }
    }
    (plane, stopped_at)
}

/// The k-plane greedily rho*r-spanned by F inside B_r(x), if k+1 points with
/// large enough residuals exist.
pub fn spans_k_plane(
    f_pts: &[Vec<f64>],
    x: &[f64],
    r: f64,
    rho: f64,
    k: usize,
) -> Option<AffinePlane> {
    if f_pts.is_empty() {
        return None;
    }
    let (plane, _) = greedy_span(f_pts, x, rho, r, k);
    (plane.dim() == k).then_some(plane)
}

/// When F does not span a k-plane, the greedy maximal plane of dimension
/// <= k-1; F is verified to lie within rho * r of it.
pub fn tube_fallback(
    f_pts: &[Vec<f64>],
    x: &[f64],
    r: f64,
    rho: f64,
    k: usize,
) -> Result<AffinePlane> {
    if spans_k_plane(f_pts, x, r, rho, k).is_some() {
        return Err(Error::Input("tube fallback applies only when no k-plane is spanned".into()));
    }
    let (plane, _) = greedy_span(f_pts, x, rho, r, k.saturating_sub(1));
    let worst = f_pts
        .iter()
        .map(|p| plane.distance(p))
        .fold(0.0f64, f64::max);
    if worst >= rho * r {
        return Err(Error::InternalLogic(format!(
            "greedy tube misses a point by {worst:.3e} >= rho r = {:.3e}",
            rho * r
        )));
    }
    Ok(plane)
}

// ---------------------------------------------------------------------------
// Coverings

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallTag {
    /// frequency drop certified on its assigned set
    Good,
    /// kept because its high-frequency set stayed in a thin tube
    Bad,
    /// at or below the stopping scale
    Floor,
}

#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    /// scale exponent j for radius tau (10 rho)^j; -1 for substituted
    /// stopping-scale balls
    pub scale_index: i32,
    pub tag: BallTag,
}

#[derive(Debug)]
pub struct CoveringResult {
    pub balls: Vec<Ball>,
    /// per-ball assigned points (disjoint, union = input)
    pub assigned_sets: Vec<Vec<Vec<f64>>>,
    /// sum of radius^(m-2)
    pub packing_sum: f64,
    pub rounds: usize,
    /// frequency supremum at the start of each round
    pub drop_log: Vec<f64>,
    /// the covered input points
    pub input: Vec<Vec<f64>>,
    /// outer radius, for normalized packing
    pub r_outer: f64,
}

impl CoveringResult {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# center... radius scale_index tag\n");
        for b in &self.balls {
            for c in &b.center {
                out.push_str(&format!("{c:.12} "));
            }
            let tag = match b.tag {
                BallTag::Good => "good",
                BallTag::Bad => "bad",
                BallTag::Floor => "floor",
            };
            out.push_str(&format!("{:.12} {} {}\n", b.radius, b.scale_index, tag));
        }
        let audit = packing_verify(self);
        out.push_str(&format!(
            "# packing_sum {:.12}\n# rounds {}\n# audit {}\n",
            self.packing_sum,
            self.rounds,
            if audit.covered { "pass" } else { "FAIL" }
        ));
        out
    }
}

fn packing(balls: &[Ball], m: usize) -> f64 {
    balls.iter().map(|b| b.radius.powi(m as i32 - 2)).sum()
}

/// Deterministic greedy cover of `pts` by balls of fixed radius centered at
/// the points themselves, in lexicographic order; returns (centers, sets).
fn greedy_cover(pts: &[Vec<f64>], radius: f64) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let mut order: Vec<&Vec<f64>> = pts.iter().collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for p in &order {
        if !centers.iter().any(|c| geom::dist(c, p) <= radius) {
            centers.push((*p).clone());
        }
    }
    let mut sets: Vec<Vec<Vec<f64>>> = vec![Vec::new(); centers.len()];
    for p in &order {
        let i = centers
            .iter()
            .position(|c| geom::dist(c, p) <= radius)
            .expect("greedy cover covers its input");
        sets[i].push((*p).clone());
    }
    (centers, sets)
}

fn sup_frequency(oracle: &FrequencyOracle, pts: &[Vec<f64>], r: f64) -> Result<f64> {
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|p| oracle.query(p, r))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Scale-by-scale covering of D inside B_tau(x). At each scale, a ball's
/// high-frequency set F either spans an (m-2)-plane (the ball is refined by
/// smaller balls packed along the plane's tube) or stays in an (m-3)-tube
/// (the ball is kept). Points escaping the refinement get their own balls,
/// so coverage is unconditional.
pub fn intermediate_cover(
    d_pts: &[Vec<f64>],
    oracle: &FrequencyOracle,
    x: &[f64],
    tau: f64,
    sigma: f64,
    rho: f64,
    delta: f64,
) -> Result<CoveringResult> {
    let m = x.len();
    if !(rho > 0.0 && rho <= 0.01) {
        return Err(Error::Input(format!("tube parameter rho must be in (0, 1/100], got {rho}")));
    }
    if !(sigma > 0.0 && sigma < tau) {
        return Err(Error::Input(format!("need 0 < sigma < tau, got sigma={sigma}, tau={tau}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Input("frequency gap delta must be positive".into()));
    }
    if d_pts.is_empty() {
        return Ok(CoveringResult {
            balls: Vec::new(),
            assigned_sets: Vec::new(),
            packing_sum: 0.0,
            rounds: 0,
            drop_log: Vec::new(),
            input: Vec::new(),
            r_outer: tau,
        });
    }
    for p in d_pts {
        if geom::dist(p, x) > tau * (1.0 + 1e-12) {
            return Err(Error::Input("input points must lie in B_tau(x)".into()));
        }
    }

    // smallest kappa with tau (10 rho)^kappa <= sigma
    let mut kappa = 0usize;
    while tau * (10.0 * rho).powi(kappa as i32) > sigma {
        kappa += 1;
        if kappa > 4000 {
            return Err(Error::Input("scale ladder too deep; raise sigma or rho".into()));
        }
    }
    let radius_of = |j: usize| tau * (10.0 * rho).powi(j as i32);

    let u = sup_frequency(oracle, d_pts, tau)?;
    let mut balls = vec![Ball { center: x.to_vec(), radius: tau, scale_index: 0, tag: BallTag::Floor }];

    for k in 0..kappa {
        let r_k = radius_of(k);
        let r_next = radius_of(k + 1);
        let mut kept: Vec<Ball> = Vec::new();
        let mut tubes: Vec<(AffinePlane, Ball)> = Vec::new();
        for b in balls.drain(..) {
            if b.scale_index < k as i32 {
                kept.push(b);
                continue;
            }
            let inside: Vec<Vec<f64>> = d_pts
                .iter()
                .filter(|p| geom::dist(p, &b.center) <= b.radius)
                .cloned()
                .collect();
            let f_set: Vec<Vec<f64>> = inside
                .par_iter()
                .map(|p| oracle.query(p, rho * b.radius).map(|i| (p.clone(), i)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|(_, i)| *i > u - delta)
                .map(|(p, _)| p)
                .collect();
            match spans_k_plane(&f_set, &b.center, b.radius, rho, m - 2) {
                Some(v) => tubes.push((v, b)), // good: refine below
                None => {
                    // bad: keep; the high-frequency set must sit in a thin tube
                    tube_fallback(&f_set, &b.center, b.radius, rho, m - 2)?;
                    kept.push(Ball { tag: BallTag::Bad, ..b });
                }
            }
        }

        // pack new balls along the good tubes, centers in D, shrunken
        // concentric balls disjoint from everything kept
        let tube_rad = 8.0 * rho * r_k;
        let mut candidates: Vec<Vec<f64>> = d_pts
            .iter()
            .filter(|p| {
                tubes.iter().any(|(v, b)| {
                    geom::dist(p, &b.center) <= b.radius && v.distance(p) <= tube_rad
                })
            })
            .cloned()
            .collect();
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut fresh: Vec<Ball> = Vec::new();
        let disjoint_ok = |p: &[f64], kept: &[Ball], fresh: &[Ball]| {
            kept.iter()
                .chain(fresh.iter())
                .all(|b| geom::dist(p, &b.center) > (b.radius + r_next) / 5.0)
        };
        let covered = |p: &[f64], kept: &[Ball], fresh: &[Ball]| {
            kept.iter()
                .chain(fresh.iter())
                .any(|b| geom::dist(p, &b.center) <= b.radius)
        };
        for p in &candidates {
            if !covered(p, &kept, &fresh) && disjoint_ok(p, &kept, &fresh) {
                fresh.push(Ball {
                    center: p.clone(),
                    radius: r_next,
                    scale_index: (k + 1) as i32,
                    tag: BallTag::Floor,
                });
            }
        }
        // safety net: points of refined balls that fell outside every tube
        let mut strays: Vec<Vec<f64>> = d_pts
            .iter()
            .filter(|p| !covered(p, &kept, &fresh))
            .cloned()
            .collect();
        strays.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for p in &strays {
            if !covered(p, &kept, &fresh) {
                fresh.push(Ball {
                    center: p.clone(),
                    radius: r_next,
                    scale_index: (k + 1) as i32,
                    tag: BallTag::Floor,
                });
            }
        }
        kept.extend(fresh);
        balls = kept;
    }

    // assign each point to the first covering ball
    let mut assigned: Vec<Vec<Vec<f64>>> = vec![Vec::new(); balls.len()];
    for p in d_pts {
        let i = balls
            .iter()
            .position(|b| geom::dist(p, &b.center) <= b.radius)
            .ok_or_else(|| Error::Coverage(1))?;
        assigned[i].push(p.clone());
    }

    let packing_sum = packing(&balls, m);
    Ok(CoveringResult {
        balls,
        assigned_sets: assigned,
        packing_sum,
        rounds: kappa,
        drop_log: vec![u],
        input: d_pts.to_vec(),
        r_outer: tau,
    })
}

/// Covering with the frequency-drop dichotomy: every output set either sits
/// in a ball of the stopping radius s, or is certified (and re-audited) to
/// have frequency at most sup - delta at its own scale.
pub fn final_cover(
    d_pts: &[Vec<f64>],
    oracle: &FrequencyOracle,
    x: &[f64],
    r: f64,
    s: f64,
    delta: f64,
) -> Result<CoveringResult> {
    let m = x.len();
    if !(s > 0.0 && s < r) {
        return Err(Error::Input(format!("need 0 < s < r, got s={s}, r={r}")));
    }
    let c_m = 6f64.powi(m as i32); // tube covering constant, tunable
    let rho = (2.0 * c_m).recip().min(0.01);
    if d_pts.is_empty() {
        return Ok(CoveringResult {
            balls: Vec::new(),
            assigned_sets: Vec::new(),
            packing_sum: 0.0,
            rounds: 0,
            drop_log: Vec::new(),
            input: Vec::new(),
            r_outer: r,
        });
    }
    let u = sup_frequency(oracle, d_pts, r)?;
    let tube_ball_budget = (c_m * rho.powi(3 - m as i32)).ceil() as usize;

    let mut floor_pool: Vec<Vec<f64>> = Vec::new();
    let mut good: Vec<(Ball, Vec<Vec<f64>>)> = Vec::new();
    let mut queue: Vec<(Ball, Vec<Vec<f64>>)> = vec![(
        Ball { center: x.to_vec(), radius: r, scale_index: 0, tag: BallTag::Floor },
        d_pts.to_vec(),
    )];
    let mut rounds = 0usize;

    while let Some((b, pts)) = queue.pop() {
        if pts.is_empty() {
            continue;
        }
        if b.radius <= s {
            floor_pool.extend(pts);
            continue;
        }
        rounds = rounds.max(b.scale_index as usize);
        // dichotomy at this ball's own scale
        let scale = rho * b.radius;
        let flagged: Vec<(Vec<f64>, f64)> = pts
            .par_iter()
            .map(|p| oracle.query(p, scale).map(|i| (p.clone(), i)))
            .collect::<Result<_>>()?;
        let f_set: Vec<Vec<f64>> =
            flagged.iter().filter(|(_, i)| *i > u - delta).map(|(p, _)| p.clone()).collect();
        let dropped: Vec<Vec<f64>> =
            flagged.iter().filter(|(_, i)| *i <= u - delta).map(|(p, _)| p.clone()).collect();

        // dropped points leave the recursion: certified at scale rho r_i,
        // or pooled when that is already below the stopping radius
        if !dropped.is_empty() {
            if scale <= s {
                floor_pool.extend(dropped);
            } else {
                let (centers, sets) = greedy_cover(&dropped, scale);
                for (c, set) in centers.into_iter().zip(sets) {
                    // post-hoc audit with fresh oracle calls
                    let worst = sup_frequency(oracle, &set, scale)?;
                    if worst > u - delta + 1e-12 {
                        return Err(Error::InternalLogic(format!(
                            "drop audit failed: sup {worst} > {} on a certified set",
                            u - delta
                        )));
                    }
                    good.push((
                        Ball { center: c, radius: scale, scale_index: b.scale_index, tag: BallTag::Good },
                        set,
                    ));
                }
            }
        }

        if f_set.is_empty() {
            continue;
        }
        match spans_k_plane(&f_set, &b.center, b.radius, rho, m - 2) {
            Some(v) => {
                // refine along the spanned plane's tube at the next scale
                let r_next = 10.0 * rho * b.radius;
                let tube_rad = 8.0 * rho * b.radius;
                let mut order: Vec<Vec<f64>> = f_set.clone();
                order.sort_by(|a, c| a.partial_cmp(c).unwrap());
                let mut fresh: Vec<Ball> = Vec::new();
                // tube points first (Vitali selection), then a safety net
                // for everything the selection left uncovered
                for pass in 0..2 {
                    for p in &order {
                        if pass == 0 && v.distance(p) > tube_rad {
                            continue;
                        }
                        let covered =
                            fresh.iter().any(|fb| geom::dist(p, &fb.center) <= fb.radius);
                        let disjoint = fresh
                            .iter()
                            .all(|fb| geom::dist(p, &fb.center) > 2.0 * r_next / 5.0);
                        if !covered && (pass == 1 || disjoint) {
                            fresh.push(Ball {
                                center: p.clone(),
                                radius: r_next,
                                scale_index: b.scale_index + 1,
                                tag: BallTag::Floor,
                            });
                        }
                    }
                }
                let mut sets: Vec<Vec<Vec<f64>>> = vec![Vec::new(); fresh.len()];
                for p in &order {
                    let i = fresh
                        .iter()
                        .position(|fb| geom::dist(p, &fb.center) <= fb.radius)
                        .expect("safety net covers every point");
                    sets[i].push(p.clone());
                }
                queue.extend(fresh.into_iter().zip(sets));
            }
            None => {
                // thin tube: cover it by budgeted balls of radius 4 rho r_i
                tube_fallback(&f_set, &b.center, b.radius, rho, m - 2)?;
                let sub_radius = 4.0 * rho * b.radius;
                let (centers, sets) = greedy_cover(&f_set, sub_radius);
                if centers.len() > tube_ball_budget {
                    return Err(Error::InternalLogic(format!(
                        "tube of radius {:.3e} needed {} balls, budget {tube_ball_budget}",
                        sub_radius,
                        centers.len()
                    )));
                }
                for (c, set) in centers.into_iter().zip(sets) {
                    queue.push((
                        Ball {
                            center: c,
                            radius: sub_radius,
                            scale_index: b.scale_index + 1,
                            tag: BallTag::Floor,
                        },
                        set,
                    ));
                }
            }
        }
    }

    // substitute all below-scale material with stopping-radius balls
    let mut balls: Vec<Ball> = Vec::new();
    let mut assigned: Vec<Vec<Vec<f64>>> = Vec::new();
    let (centers, sets) = greedy_cover(&floor_pool, s);
    for (c, set) in centers.into_iter().zip(sets) {
        balls.push(Ball { center: c, radius: s, scale_index: -1, tag: BallTag::Floor });
        assigned.push(set);
    }
    for (b, set) in good {
        balls.push(b);
        assigned.push(set);
    }

    let packing_sum = packing(&balls, m);
    Ok(CoveringResult {
        balls,
        assigned_sets: assigned,
        packing_sum,
        rounds,
        drop_log: vec![u],
        input: d_pts.to_vec(),
        r_outer: r,
    })
}

/// Iterate the final cover on drop-certified sets until everything sits at
/// the target radius; the frequency supremum falls by delta per round, so
/// the rounds are bounded by floor(U0/delta) + 1.
pub fn minkowski_cover_driver(
    d_pts: &[Vec<f64>],
    oracle: &FrequencyOracle,
    rho_target: f64,
) -> Result<CoveringResult> {
    let delta = 0.05;
    if d_pts.is_empty() {
        return Err(Error::Input("empty point set".into()));
    }
    if !(rho_target > 0.0) {
        return Err(Error::Input("target radius must be positive".into()));
    }
    let m = d_pts[0].len();
    let mut lo = d_pts[0].clone();
    let mut hi = d_pts[0].clone();
    for p in d_pts {
        for k in 0..m {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let r0 = d_pts
        .iter()
        .map(|p| geom::dist(p, &center))
        .fold(0.0f64, f64::max)
        .max(2.0 * rho_target)
        * (1.0 + 1e-9);

    let u0 = sup_frequency(oracle, d_pts, r0)?;
    let kappa = (u0.max(0.0) / delta).floor() as usize + 1;

    let mut balls: Vec<Ball> = Vec::new();
    let mut assigned: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut drop_log = Vec::new();
    let mut pending: Vec<(Vec<f64>, f64, Vec<Vec<f64>>)> = vec![(center, r0, d_pts.to_vec())];
    let mut rounds = 0usize;

    while !pending.is_empty() {
        rounds += 1;
        if rounds > kappa {
            return Err(Error::InternalLogic(format!(
                "drop iteration ran past the {kappa}-round bound"
            )));
        }
        let mut round_sup = f64::NEG_INFINITY;
        let mut next = Vec::new();
        for (c, r, pts) in pending.drain(..) {
            round_sup = round_sup.max(sup_frequency(oracle, &pts, r)?);
            let cover = final_cover(&pts, oracle, &c, r, rho_target, delta)?;
            for (b, set) in cover.balls.into_iter().zip(cover.assigned_sets) {
                match b.tag {
                    BallTag::Good => next.push((b.center, b.radius, set)),
                    _ => {
                        balls.push(b);
                        assigned.push(set);
                    }
                }
            }
        }
        drop_log.push(round_sup);
        pending = next;
    }

    let packing_sum = packing(&balls, m);
    Ok(CoveringResult {
        balls,
        assigned_sets: assigned,
        packing_sum,
        rounds,
        drop_log,
        input: d_pts.to_vec(),
        r_outer: r0,
    })
}

// ---------------------------------------------------------------------------
// Verification utilities

#[derive(Debug, Clone)]
pub struct PackingReport {
    pub packing_sum: f64,
    /// packing_sum / r_outer^{m-2}
    pub normalized: f64,
    pub covered: bool,
    pub missed: Vec<Vec<f64>>,
}

/// Audit a covering result: coverage of the input set and packing sums.
pub fn packing_verify(result: &CoveringResult) -> PackingReport {
    let m = result.input.first().map_or(2, |p| p.len());
    let missed: Vec<Vec<f64>> = result
        .input
        .iter()
        .filter(|p| !result.balls.iter().any(|b| geom::dist(p, &b.center) <= b.radius))
        .cloned()
        .collect();
    PackingReport {
        packing_sum: result.packing_sum,
        normalized: result.packing_sum / result.r_outer.powi(m as i32 - 2),
        covered: missed.is_empty(),
        missed,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReifenbergReport {
    /// max over sampled (x, r) of the flatness double integral over r^k
    pub max_ratio: f64,
    pub threshold: f64,
    pub passes: bool,
}

/// Hypothesis check for the discrete volume bound: atoms carry weights
/// s_j^k from pairwise disjoint source balls, and the dyadic double
/// integral of the k-th flatness must stay below delta0^2 r^k.
pub fn reifenberg_hypothesis_check(
    mu: &DiscreteMeasure,
    k: usize,
    delta0_sq: f64,
) -> Result<ReifenbergReport> {
    if k == 0 || k > mu.dim() {
        return Err(Error::Input(format!("flatness order k={k} out of range")));
    }
    // weights are s_j^k: recover radii and check source-ball disjointness
    let radii: Vec<f64> = mu.weights().iter().map(|w| w.powf(1.0 / k as f64)).collect();
    for i in 0..mu.len() {
        for j in i + 1..mu.len() {
            let d = geom::dist(&mu.points()[i], &mu.points()[j]);
            if d < radii[i] + radii[j] {
                return Err(Error::Input(format!(
                    "source balls {i} and {j} overlap: gap {d:.3e} < {:.3e}",
                    radii[i] + radii[j]
                )));
            }
        }
    }
    if mu.len() <= 1 {
        return Ok(ReifenbergReport { max_ratio: 0.0, threshold: delta0_sq, passes: true });
    }

    let r_grid: Vec<f64> = (0..6).map(|j| 0.5f64.powi(j)).collect();
    let mut max_ratio = 0.0f64;
    for x in mu.points() {
        if geom::norm(x) > 1.0 {
            continue;
        }
        for &r in &r_grid {
            if geom::norm(x) + r > 2.0 {
                continue;
            }
            // dyadic scales below r
            let scales: Vec<f64> = (0..8).map(|j| r * 0.5f64.powi(j + 1)).collect();
            let inner: Vec<f64> = mu
                .points()
                .par_iter()
                .zip(mu.weights())
                .map(|(y, &w)| {
                    if geom::dist(y, x) >= r {
                        return Ok(0.0);
                    }
                    let mut acc = 0.0;
                    for &sc in &scales {
                        acc += beta_k(mu, y, sc, k)?.value * std::f64::consts::LN_2;
                    }
                    Ok(acc * w)
                })
                .collect::<Result<_>>()?;
            let val: f64 = inner.iter().sum();
            max_ratio = max_ratio.max(val / r.powi(k as i32));
        }
    }
    Ok(ReifenbergReport { max_ratio, threshold: delta0_sq, passes: max_ratio <= delta0_sq })
}

/// Max frequency deviation over sampled points of a plane patch and radii,
/// probing constancy of the frequency along an invariant spine.
pub fn spine_frequency_constancy(
    oracle: &FrequencyOracle,
    v: &AffinePlane,
    radii: (f64, f64),
    samples: usize,
) -> Result<f64> {
    let (r_lo, r_hi) = radii;
    if !(r_lo > 0.0 && r_hi >= r_lo) {
        return Err(Error::Input("bad radius range".into()));
    }
    let n = samples.max(2);
    let mut pts = Vec::new();
    if v.dim() == 0 {
        pts.push(v.base.clone());
    } else {
        // sample along each spine direction through the base point
        for dir in &v.basis {
            for i in 0..n {
                let t = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                let mut p = v.base.clone();
                geom::axpy(&mut p, t, dir);
                pts.push(p);
            }
        }
    }
    let rs: Vec<f64> =
        (0..n).map(|i| r_lo + (r_hi - r_lo) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = pts
        .par_iter()
        .flat_map(|p| rs.par_iter().map(move |&r| oracle.query(p, r)))
        .collect::<Result<_>>()?;
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

#[derive(Debug, Clone)]
pub struct MinkowskiReport {
    /// (rho, estimated volume of the rho-neighborhood of the zero set)
    pub volumes: Vec<(f64, f64)>,
    /// least-squares slope of log volume against log rho; NaN when no zeros
    /// were detected
    pub slope: f64,
    pub detected: usize,
}

/// Grid estimate of |{dist < rho to the detected zero set}| for each rho,
/// with the log-log growth slope.
pub fn minkowski_content_estimate(
    f: &AnalyticField,
    region: &Grid,
    rhos: &[f64],
) -> Result<MinkowskiReport> {
    let m = f.dim();
    if region.lo.len() != m {
        return Err(Error::Input("grid dimension does not match field".into()));
    }
    if rhos.is_empty() || rhos.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Input("need positive neighborhood radii".into()));
    }
    let pts = region.points();
    // grid lines carry ~1e-16 roundoff, amplified to ~1e-8 through the
    // Hoelder branch exponents; 1e-7 still separates cleanly from the
    // nearest off-set node at any usable grid spacing
    let detected: Vec<Vec<f64>> =
        pts.par_iter().filter(|p| f.is_q_point(p, 1e-7)).cloned().collect();
    if detected.is_empty() {
        return Ok(MinkowskiReport { volumes: Vec::new(), slope: f64::NAN, detected: 0 });
    }
    let cellvol: f64 = region
        .lo
        .iter()
        .zip(&region.hi)
        .zip(&region.n)
        .map(|((lo, hi), &n)| if n > 1 { (hi - lo) / (n - 1) as f64 } else { 1.0 })
        .product();
    let mut rho_sorted: Vec<f64> = rhos.to_vec();
    rho_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rho_max_sq = rho_sorted.last().unwrap().powi(2);
    // nearest squared distance to the detected set, capped at rho_max
    let dists: Vec<f64> = pts
        .par_iter()
        .map(|p| {
            let mut best = rho_max_sq;
            for q in &detected {
                let mut d = 0.0;
                for (a, b) in p.iter().zip(q) {
                    d += (a - b) * (a - b);
                    if d >= best {
                        break;
                    }
                }
                best = best.min(d);
            }
            best
        })
        .collect();
    let volumes: Vec<(f64, f64)> = rho_sorted
        .iter()
        .map(|&rho| {
            let count = dists.iter().filter(|&&d| d < rho * rho).count();
            (rho, count as f64 * cellvol)
        })
        .collect();
    // least squares on (ln rho, ln vol)
    let pairs: Vec<(f64, f64)> = volumes
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    let slope = if pairs.len() < 2 {
        f64::NAN
    } else {
        let n = pairs.len() as f64;
        let sx: f64 = pairs.iter().map(|p| p.0).sum();
        let sy: f64 = pairs.iter().map(|p| p.1).sum();
        let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    Ok(MinkowskiReport { volumes, slope, detected: detected.len() })
}
