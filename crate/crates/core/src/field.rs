//! Closed-form multivalued test fields: planar branched fields
//! sum_t c_t z^(p_t/Q) with their Q branches, cylindrical extensions that are
//! constant in the last m-2 coordinates, and domain translations.
//!
//! Branch values and per-branch holomorphic derivatives are exact; the branch
//! set (the planar origin of the base field) is the only place where the
//! gradient is undefined.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geom::AffinePlane;
use crate::multifield::MultiPoint;
use crate::{Error, Result};

/// One monomial c z^(p/Q) of a branched planar field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTerm {
    pub p: u32,
    pub c: Complex64,
}

/// A Q-branched planar field sum_t c_t z^(p_t/Q) on R^2 = C.
///
/// Requiring Q not to divide any power keeps the branch values summing to
/// zero, so eta of the field vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarBranch {
    q: usize,
    terms: Vec<BranchTerm>,
}

impl PlanarBranch {
    pub fn new(q: usize, terms: Vec<BranchTerm>) -> Result<Self> {
        if q == 0 {
            return Err(Error::Input("branching order Q must be >= 1".into()));
        }
        if terms.is_empty() {
            return Err(Error::Input("planar branch field needs at least one term".into()));
        }
        for t in &terms {
            if t.p == 0 {
                return Err(Error::Input("term powers must be positive".into()));
            }
            if q >= 2 && t.p as usize % q == 0 {
                return Err(Error::Input(
                    "term power divisible by Q would unbalance the field (eta != 0)".into(),
                ));
            }
        }
        Ok(PlanarBranch { q, terms })
    }

    pub fn single(q: usize, p: u32, c: f64) -> Result<Self> {
        Self::new(q, vec![BranchTerm { p, c: Complex64::new(c, 0.0) }])
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn terms(&self) -> &[BranchTerm] {
        &self.terms
    }

    /// Branch values at z, ordered by the Q-th root choice. Returns Q zeros
    /// at z = 0 (continuity).
    pub fn values(&self, z: Complex64) -> Vec<Complex64> {
        let q = self.q as i32;
        if z.norm() == 0.0 {
            return vec![Complex64::new(0.0, 0.0); self.q];
        }
        let root = z.powf(1.0 / q as f64); // principal Q-th root
        let omega = Complex64::from_polar(1.0, std::f64::consts::TAU / q as f64);
        let mut w = root;
        (0..self.q)
            .map(|_| {
                let v = self
                    .terms
                    .iter()
                    .map(|t| t.c * w.powi(t.p as i32))
                    .sum::<Complex64>();
                w *= omega;
                v
            })
            .collect()
    }

    /// Per-branch derivative d/dz, matched to the same branch ordering as
    /// `values`. Undefined at z = 0.
    pub fn derivatives(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let q = self.q as i32;
        if z.norm() == 0.0 {
            return Err(Error::SingularPoint);
        }
        let root = z.powf(1.0 / q as f64);
        let omega = Complex64::from_polar(1.0, std::f64::consts::TAU / q as f64);
        let mut w = root;
        Ok((0..self.q)
            .map(|_| {
                let d = self
                    .terms
                    .iter()
                    .map(|t| t.c * (t.p as f64 / q as f64) * w.powi(t.p as i32 - q))
                    .sum::<Complex64>();
                w *= omega;
                d
            })
            .collect())
    }

    pub fn alpha_min(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.p as f64 / self.q as f64)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn alpha_max(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.p as f64 / self.q as f64)
            .fold(0.0, f64::max)
    }
}

/// A closed-form Q-valued field on a ball in R^m.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticField {
    /// The planar field itself, m = 2.
    Planar(PlanarBranch),
    /// The planar field read on the first two coordinates, constant in the
    /// remaining m-2 (the spine directions).
    Cylinder { base: PlanarBranch, m: usize },
    /// A field translated in its domain.
    Shifted { base: Box<AnalyticField>, offset: Vec<f64> },
}

/// Exact per-branch Jacobian: a conformal 2x2 block in the first two domain
/// columns, zero in the invariant directions.
#[derive(Debug, Clone, Copy)]
pub struct BranchJacobian {
    /// Holomorphic derivative of the branch.
    pub dz: Complex64,
    /// Domain dimension m (number of columns).
    pub m: usize,
}

impl BranchJacobian {
    /// Dense n x m matrix (n = 2 rows).
    pub fn matrix(&self) -> [Vec<f64>; 2] {
        let mut r0 = vec![0.0; self.m];
        let mut r1 = vec![0.0; self.m];
        r0[0] = self.dz.re;
        r0[1] = -self.dz.im;
        r1[0] = self.dz.im;
        r1[1] = self.dz.re;
        [r0, r1]
    }

    /// Directional derivative Du . v as a point of R^2.
    pub fn apply(&self, v: &[f64]) -> [f64; 2] {
        let w = self.dz * Complex64::new(v[0], v[1]);
        [w.re, w.im]
    }

    /// Squared Frobenius norm of the Jacobian.
    pub fn frob_sq(&self) -> f64 {
        2.0 * self.dz.norm_sqr()
    }
}

impl AnalyticField {
    /// Domain dimension m.
    pub fn dim(&self) -> usize {
        match self {
            AnalyticField::Planar(_) => 2,
            AnalyticField::Cylinder { m, .. } => *m,
            AnalyticField::Shifted { base, .. } => base.dim(),
        }
    }

    pub fn q(&self) -> usize {
        self.base_branch().q()
    }

    /// The underlying planar branch field.
    pub fn base_branch(&self) -> &PlanarBranch {
        match self {
            AnalyticField::Planar(b) => b,
            AnalyticField::Cylinder { base, .. } => base,
            AnalyticField::Shifted { base, .. } => base.base_branch(),
        }
    }

    pub fn alpha_min(&self) -> f64 {
        self.base_branch().alpha_min()
    }

    pub fn alpha_max(&self) -> f64 {
        self.base_branch().alpha_max()
    }

    /// Planar coordinates of the branch point in domain coordinates.
    pub fn planar_center(&self) -> [f64; 2] {
        match self {
            AnalyticField::Planar(_) | AnalyticField::Cylinder { .. } => [0.0, 0.0],
            AnalyticField::Shifted { base, offset } => {
                let c = base.planar_center();
                [c[0] + offset[0], c[1] + offset[1]]
            }
        }
    }

    /// For cylindrical fields, the invariant (m-2)-dimensional spine through
    /// the branch point; `None` for purely planar fields.
    pub fn spine(&self) -> Option<AffinePlane> {
        let m = self.dim();
        if m < 3 {
            return None;
        }
        let c = self.planar_center();
        let mut base = vec![0.0; m];
        base[0] = c[0];
        base[1] = c[1];
        if let AnalyticField::Shifted { base: inner, offset } = self {
            // Axial components of the offset translate the spine base point.
            let mut b = inner.spine()?.base;
            for (bi, oi) in b.iter_mut().zip(offset) {
                *bi += oi;
            }
            base = b;
        }
        let basis = (2..m)
            .map(|k| {
                let mut e = vec![0.0; m];
                e[k] = 1.0;
                e
            })
            .collect();
        Some(AffinePlane { base, basis })
    }

    /// The planar complex coordinate of x relative to the branch point.
    pub fn planar_coord(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(Error::Input(format!(
                "point dimension {} does not match field dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let c = self.planar_center();
        Ok(Complex64::new(x[0] - c[0], x[1] - c[1]))
    }

    /// Branch values at x as complex numbers (n = 2).
    pub fn branch_values(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let z = self.planar_coord(x)?;
        Ok(self.base_branch().values(z))
    }

    /// Per-branch holomorphic derivatives at x, ordered as `branch_values`.
    pub fn branch_derivatives(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let z = self.planar_coord(x)?;
        self.base_branch().derivatives(z)
    }

    /// The Q branch values at x as an unordered tuple of points of R^2.
    pub fn evaluate(&self, x: &[f64]) -> Result<MultiPoint> {
        let vals = self.branch_values(x)?;
        MultiPoint::new(vals.iter().map(|v| vec![v.re, v.im]).collect())
    }

    /// Exact per-branch Jacobians, consistent with the branch ordering of
    /// `evaluate`. Errors on the branch set.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<BranchJacobian>> {
        let m = self.dim();
        Ok(self
            .branch_derivatives(x)?
            .into_iter()
            .map(|dz| BranchJacobian { dz, m })
            .collect())
    }

    /// True iff |u(x)| <= tol, where |T|^2 = sum_i |P_i|^2. Meaningful for
    /// balanced fields, where the Q-point set is exactly {u = Q[[0]]}.
    pub fn is_q_point(&self, x: &[f64], tol: f64) -> bool {
        match self.branch_values(x) {
            Ok(vals) => vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() <= tol,
            Err(_) => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Structured text format for field specs.

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FieldSpec {
    PlanarBranch {
        #[serde(rename = "Q")]
        q: usize,
        terms: Vec<TermSpec>,
    },
    Cylinder {
        base: Box<FieldSpec>,
        m: usize,
    },
    Shifted {
        base: Box<FieldSpec>,
        offset: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct TermSpec {
    p: u32,
    re: f64,
    #[serde(default)]
    im: f64,
}

fn from_spec(spec: FieldSpec) -> Result<AnalyticField> {
    match spec {
        FieldSpec::PlanarBranch { q, terms } => {
            let terms = terms
                .into_iter()
                .map(|t| BranchTerm { p: t.p, c: Complex64::new(t.re, t.im) })
                .collect();
            Ok(AnalyticField::Planar(PlanarBranch::new(q, terms)?))
        }
        FieldSpec::Cylinder { base, m } => {
            if m < 3 {
                return Err(Error::Input("cylinder requires ambient dimension m >= 3".into()));
            }
            match from_spec(*base)? {
                AnalyticField::Planar(b) => Ok(AnalyticField::Cylinder { base: b, m }),
                _ => Err(Error::Input("cylinder base must be a planar branch field".into())),
            }
        }
        FieldSpec::Shifted { base, offset } => {
            let inner = from_spec(*base)?;
            if offset.len() != inner.dim() {
                return Err(Error::Input(format!(
                    "shift offset has length {}, field dimension is {}",
                    offset.len(),
                    inner.dim()
                )));
            }
            Ok(AnalyticField::Shifted { base: Box::new(inner), offset })
        }
    }
}

fn to_spec(f: &AnalyticField) -> FieldSpec {
    match f {
        AnalyticField::Planar(b) => FieldSpec::PlanarBranch {
            q: b.q(),
            terms: b
                .terms()
                .iter()
                .map(|t| TermSpec { p: t.p, re: t.c.re, im: t.c.im })
                .collect(),
        },
        AnalyticField::Cylinder { base, m } => FieldSpec::Cylinder {
            base: Box::new(to_spec(&AnalyticField::Planar(base.clone()))),
            m: *m,
        },
        AnalyticField::Shifted { base, offset } => FieldSpec::Shifted {
            base: Box::new(to_spec(base)),
            offset: offset.clone(),
        },
    }
}

impl AnalyticField {
    /// Parse a field spec document, e.g.
    /// `{"kind":"planar_branch","Q":2,"terms":[{"p":1,"re":1.0,"im":0.0}]}`.
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: FieldSpec =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("field spec: {e}")))?;
        from_spec(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&to_spec(self)).expect("field spec serialization")
    }
}

/// Named built-in fields used throughout tests and experiments.
pub fn builtin(name: &str) -> Option<AnalyticField> {
    let f = match name {
        // u = z; the classical single-sheet linear field.
        "q1_linear" => AnalyticField::Planar(PlanarBranch::single(1, 1, 1.0).ok()?),
        // two-sheet square root branch, alpha = 1/2
        "q2_branch" => AnalyticField::Planar(PlanarBranch::single(2, 1, 1.0).ok()?),
        // alpha = 3/2
        "q2_p3" => AnalyticField::Planar(PlanarBranch::single(2, 3, 1.0).ok()?),
        // alpha = 1/3
        "q3_p1" => AnalyticField::Planar(PlanarBranch::single(3, 1, 1.0).ok()?),
        // alpha = 2/3
        "q3_p2" => AnalyticField::Planar(PlanarBranch::single(3, 2, 1.0).ok()?),
        // z^(1/2) + 0.2 z^(3/2): pinched, non-homogeneous
        "mixed" => AnalyticField::Planar(
            PlanarBranch::new(
                2,
                vec![
                    BranchTerm { p: 1, c: Complex64::new(1.0, 0.0) },
                    BranchTerm { p: 3, c: Complex64::new(0.2, 0.0) },
                ],
            )
            .ok()?,
        ),
        // square-root branch extended invariantly to R^3; spine = x3-axis
        "cyl3" => AnalyticField::Cylinder { base: PlanarBranch::single(2, 1, 1.0).ok()?, m: 3 },
        // mixed field extended to R^3
        "cyl3_mixed" => {
            let base = PlanarBranch::new(
                2,
                vec![
                    BranchTerm { p: 1, c: Complex64::new(1.0, 0.0) },
                    BranchTerm { p: 3, c: Complex64::new(0.2, 0.0) },
                ],
            )
            .ok()?;
            AnalyticField::Cylinder { base, m: 3 }
        }
        // mixed field with the branch point moved off the origin
        "mixed_shifted" => AnalyticField::Shifted {
            base: Box::new(builtin("mixed")?),
            offset: vec![0.03, 0.02],
        },
        _ => return None,
    };
    Some(f)
}

/// Names of all built-in fields, in a fixed order.
pub fn builtin_names() -> &'static [&'static str] {
    &[
        "q1_linear",
        "q2_branch",
        "q2_p3",
        "q3_p1",
        "q3_p2",
        "mixed",
        "cyl3",
        "cyl3_mixed",
        "mixed_shifted",
    ]
}
