use ndarray::Array2;

use super::{Tape, Var};
use crate::error::Result;

/// Discrepancy between an analytic and a numeric derivative, relative to the
/// larger of the two and to `floor`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares reverse-mode gradients of `f` at `theta` against central
/// differences with spacing `step`, returning the worst coordinate error.
///
/// `f` receives a fresh tape plus one var per parameter and returns a scalar
/// loss. The relative error of each coordinate is floored at
/// `1e-6 * max(1, |f(theta)|)` so that coordinates whose true derivative is
/// zero are judged against the function's own scale rather than against zero.
pub fn finite_diff_check<F>(f: F, theta: &[Array2<f64>], step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = theta.iter().map(|t| tape.param(t.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let base = tape.scalar(loss);
    let grads = tape.backward(loss)?;
    let floor = 1e-6 * base.abs().max(1.0);

    let eval = |params: &[Array2<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = params.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.scalar(out))
    };

    let mut worst = 0.0f64;
    let mut work: Vec<Array2<f64>> = theta.to_vec();
    for (k, var) in vars.iter().enumerate() {
        let analytic = grads.wrt(*var);
        for idx in 0..theta[k].len() {
            let (r, c) = (idx / theta[k].ncols(), idx % theta[k].ncols());
            let orig = theta[k][[r, c]];
            work[k][[r, c]] = orig + step;
            let plus = eval(&work)?;
            work[k][[r, c]] = orig - step;
            let minus = eval(&work)?;
            work[k][[r, c]] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(analytic[[r, c]], numeric, floor));
        }
    }
    Ok(worst)
}
