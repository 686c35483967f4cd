use std::fmt::Debug;

/// Interpolation functions `A(s)` and `B(s)` multiplying the driver and the
/// problem Hamiltonian.
pub trait Schedule: Send + Sync + Debug {
    fn a(&self, s: f64) -> f64;
    fn b(&self, s: f64) -> f64;

    fn da(&self, s: f64) -> f64 {
        central_difference(|x| self.a(x), s)
    }

    fn db(&self, s: f64) -> f64 {
        central_difference(|x| self.b(x), s)
    }

    /// Label stored in run records.
    fn name(&self) -> &str {
        "custom"
    }
}

fn central_difference(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    let h = 1e-6;
    (f(s + h) - f(s - h)) / (2.0 * h)
}

/// `A(s) = 1 - s`, `B(s) = s`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearSchedule;

impl Schedule for LinearSchedule {
    fn a(&self, s: f64) -> f64 {
        1.0 - s
    }
    fn b(&self, s: f64) -> f64 {
        s
    }
    fn da(&self, _s: f64) -> f64 {
        -1.0
    }
    fn db(&self, _s: f64) -> f64 {
        1.0
    }
    fn name(&self) -> &str {
        "linear"
    }
}

/// Envelope `s(1 - s)` of the trigger term. Vanishes at both ends.
#[inline]
pub fn trigger_envelope(s: f64) -> f64 {
    s * (1.0 - s)
}

#[inline]
pub fn trigger_envelope_derivative(s: f64) -> f64 {
    1.0 - 2.0 * s
}
