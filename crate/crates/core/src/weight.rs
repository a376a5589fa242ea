//! Cutoff profiles used to smooth the ball-averaged quantities.
//!
//! A profile is a nonincreasing Lipschitz function on [0, inf) that equals a
//! positive constant near 0 and vanishes from some point on. The default is
//! the piecewise-linear hat: 1 on [0, 1/2], 2(1 - t) on [1/2, 1], 0 after.

/// A cutoff profile together with its a.e. derivative and breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightProfile {
    /// 1 on [0, 1/2], linear down to 0 at 1.
    Default,
    /// 1 on [0, a], linear down to 0 at b. Requires 0 < a < b.
    Ramp { a: f64, b: f64 },
}

impl WeightProfile {
    pub fn ramp(a: f64, b: f64) -> crate::Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(crate::Error::Input(format!(
                "ramp profile needs 0 < a < b, got a={a}, b={b}"
            )));
        }
        Ok(WeightProfile::Ramp { a, b })
    }

    fn knots_ab(&self) -> (f64, f64) {
        match self {
            WeightProfile::Default => (0.5, 1.0),
            WeightProfile::Ramp { a, b } => (*a, *b),
        }
    }

    /// phi(t)
    pub fn phi(&self, t: f64) -> f64 {
        let (a, b) = self.knots_ab();
        if t <= a {
            1.0
        } else if t < b {
            (b - t) / (b - a)
        } else {
            0.0
        }
    }

    /// phi'(t), taken as the left/right constant on each linear piece (the
    /// value at the knots themselves is irrelevant for integration).
    pub fn dphi(&self, t: f64) -> f64 {
        let (a, b) = self.knots_ab();
        if t > a && t < b {
            -1.0 / (b - a)
        } else {
            0.0
        }
    }

    /// Breakpoints of phi in (0, support]: quadrature panels must not
    /// straddle these.
    pub fn knots(&self) -> Vec<f64> {
        let (a, b) = self.knots_ab();
        vec![a, b]
    }

    /// The end of the support of phi.
    pub fn support(&self) -> f64 {
        self.knots_ab().1
    }
}

impl Default for WeightProfile {
    fn default() -> Self {
        WeightProfile::Default
    }
}
