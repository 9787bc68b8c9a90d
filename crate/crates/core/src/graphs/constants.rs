use crate::error::{Error, Result};

/// Geometric mixing constants for products of push-sum matrices:
/// `|[A_{k:t}]_ij - phi_k^i| <= C lambda^(k-t)` and the row-sum floor `delta`.
///
/// `1 - lambda` is kept separately because in the general case it is
/// `n^(-nB)`-sized and vanishes when subtracted from one in `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConstants {
    pub c: f64,
    pub lambda: f64,
    /// `1 - lambda`, computed without cancellation.
    pub gap: f64,
    /// `ln(lambda)`, computed without cancellation.
    pub ln_lambda: f64,
    pub delta: f64,
    pub window: usize,
    pub regular: bool,
}

impl GraphConstants {
    /// `lambda^steps`
    pub fn lambda_pow(&self, steps: usize) -> f64 {
        if steps == 0 {
            1.0
        } else {
            (steps as f64 * self.ln_lambda).exp()
        }
    }

    /// Upper bound on `column_spread(A_{k:t})` with `steps = k - t`.
    pub fn spread_bound(&self, steps: usize) -> f64 {
        2.0 * self.c * self.lambda_pow(steps)
    }
}

/// General B-strongly-connected case: `C = 4`, `lambda = (1 - n^(-nB))^(1/B)`,
/// `delta = n^(-nB)`. Regular graphs with `B = 1`: `C = sqrt(2)`,
/// `lambda = 1 - 1/(4 n^3)`, `delta = 1`.
pub fn lemma_constants(n: usize, window: usize, regular: bool) -> Result<GraphConstants> {
    if n == 0 || window == 0 {
        return Err(Error::InvalidArgument(format!(
            "constants need n >= 1 and B >= 1, got n={n}, B={window}"
        )));
    }
    if regular && window > 1 {
        return Err(Error::InvalidArgument(format!(
            "regular-case constants require B = 1, got B={window}"
        )));
    }
    let c = if regular {
        std::f64::consts::SQRT_2
    } else {
        4.0
    };
    if n == 1 {
        return Ok(GraphConstants {
            c,
            lambda: 0.0,
            gap: 1.0,
            ln_lambda: f64::NEG_INFINITY,
            delta: 1.0,
            window,
            regular,
        });
    }
    let nf = n as f64;
    if regular {
        let gap = 1.0 / (4.0 * nf.powi(3));
        return Ok(GraphConstants {
            c,
            lambda: 1.0 - gap,
            gap,
            ln_lambda: (-gap).ln_1p(),
            delta: 1.0,
            window,
            regular,
        });
    }
    let b = window as f64;
    // n^(-nB) through logs so large n does not overflow
    let delta = (-(nf * b) * nf.ln()).exp();
    let ln_lambda = (-delta).ln_1p() / b;
    Ok(GraphConstants {
        c,
        lambda: ln_lambda.exp(),
        gap: -ln_lambda.exp_m1(),
        ln_lambda,
        delta,
        window,
        regular,
    })
}
