//! Small dense-vector helpers and affine subspaces in R^m.

/// Euclidean dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// An affine subspace `base + span(basis)` with an orthonormal basis.
#[derive(Debug, Clone)]
pub struct AffinePlane {
    pub base: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl AffinePlane {
    /// The trivial 0-dimensional plane {base}.
    pub fn point(base: Vec<f64>) -> Self {
        AffinePlane { base, basis: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection of `p` onto the plane.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let mut out = self.base.clone();
        let d = sub(p, &self.base);
        for v in &self.basis {
            axpy(&mut out, dot(&d, v), v);
        }
        out
    }

    /// Distance of `p` to the plane.
    pub fn distance(&self, p: &[f64]) -> f64 {
        dist(p, &self.project(p))
    }

    /// Residual of `p` after removing the components along the current basis
    /// (the distance to the plane), together with the normalized residual
    /// direction when it is nonzero.
    pub fn residual(&self, p: &[f64]) -> (f64, Option<Vec<f64>>) {
        let mut d = sub(p, &self.base);
        for v in &self.basis {
            let c = dot(&d, v);
            axpy(&mut d, -c, v);
        }
        let n = norm(&d);
        if n > 0.0 {
            let dir = scale(&d, 1.0 / n);
            (n, Some(dir))
        } else {
            (n, None)
        }
    }

    /// Extend the basis by the residual direction of `p`. No-op when the
    /// residual vanishes.
    pub fn extend(&mut self, p: &[f64]) {
        if let (_, Some(dir)) = self.residual(p) {
            self.basis.push(dir);
        }
    }
}
