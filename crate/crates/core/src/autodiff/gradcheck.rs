use super::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Compares the reverse-mode gradient of `f` at `x` against central finite
/// differences on every coordinate.
///
/// Returns `max |analytic - numeric| / max(1, |numeric|)`.
pub fn grad_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    let all: Vec<usize> = (0..x.numel()).collect();
    grad_check_coords(f, x, eps, &all)
}

/// [`grad_check`] restricted to the flat coordinates in `coords`.
pub fn grad_check_coords<F>(f: F, x: &Tensor, eps: f64, coords: &[usize]) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    if let Some(&c) = coords.iter().find(|&&c| c >= x.numel()) {
        return Err(Error::InvalidArgument(format!(
            "coordinate {c} out of range for {} values",
            x.numel()
        )));
    }

    let mut g = Graph::new();
    let xv = g.param(x.clone())?;
    let root = f(&mut g, xv)?;
    let analytic = g.backward(root)?.take(xv);

    let eval = |point: Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let xv = g.param(point)?;
        let root = f(&mut g, xv)?;
        g.value(root).item()
    };

    let mut worst: f64 = 0.0;
    for &c in coords {
        let mut plus = x.clone();
        plus.data_mut()[c] += eps;
        let mut minus = x.clone();
        minus.data_mut()[c] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        if !numeric.is_finite() {
            return Err(Error::NonFinite(format!(
                "finite difference at coordinate {c} is {numeric}"
            )));
        }
        let err = (analytic.data()[c] - numeric).abs() / numeric.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let x = Tensor::vector(vec![0.3, -1.2, 2.5, 0.0]);
        let err = grad_check(|g, x| g.reduce_sum(x, None), &x, 1e-5).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn zero_step_rejected() {
        let x = Tensor::vector(vec![1.0]);
        let r = grad_check(|g, x| g.reduce_sum(x, None), &x, 0.0);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
