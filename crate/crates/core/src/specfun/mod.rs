//! Special functions and quadrature.

mod expint;
mod gamma;
mod quad;
mod xi;

pub use expint::{e1, e1_scaled, expint_ei};
pub use gamma::{gamma, gamma_p, gamma_q, ln_gamma, upper_gamma};
pub use quad::{integrate, try_integrate, QuadSpec};
pub use xi::{xi1, xi2};

/// ln(e^t − 1) without overflow for large t.
pub fn ln_expm1(t: f64) -> f64 {
    if t > 30.0 {
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}
