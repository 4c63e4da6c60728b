use super::LossValue;
use crate::data::InteractionMatrix;
use crate::error::{Error, Result};

/// Weighted squared loss Σ_{x,y} w_{x,y}(o_{x,y} − r_{x,y})² with the WRMF
/// weights (α + 1 on positives, 1 elsewhere). `scores` is the dense M×N
/// score matrix in row-major order; the gradient has the same layout.
pub fn wsl_loss(
    matrix: &InteractionMatrix,
    scores: &[f64],
    alpha: f64,
    with_gradient: bool,
) -> Result<LossValue> {
    if !(alpha >= 0.0) {
        return Err(Error::precondition("WSL needs alpha >= 0"));
    }
    let (m, n) = (matrix.n_rows(), matrix.n_cols());
    if scores.len() != m * n {
        return Err(Error::dims(format!("{} scores for a {m}x{n} matrix", scores.len())));
    }
    super::check_finite(scores)?;
    let mut value = 0.0;
    let mut grad = with_gradient.then(|| vec![0.0; m * n]);
    for x in 0..m {
        let row = matrix.row(x);
        let mut next = 0;
        for y in 0..n {
            let positive = next < row.len() && row[next] as usize == y;
            if positive {
                next += 1;
            }
            let (w, r) = if positive { (alpha + 1.0, 1.0) } else { (1.0, 0.0) };
            let resid = scores[x * n + y] - r;
            value += w * resid * resid;
            if let Some(g) = grad.as_mut() {
                g[x * n + y] = 2.0 * w * resid;
            }
        }
    }
    Ok(LossValue::new(value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_matrix, InteractionSet};

    #[test]
    fn single_pair_values() {
        let m = build_matrix(&InteractionSet::new(1, 1, vec![(0, 0)]).unwrap()).unwrap();
        assert_eq!(wsl_loss(&m, &[1.0], 1.0, false).unwrap().value, 0.0);
        assert_eq!(wsl_loss(&m, &[0.0], 1.0, false).unwrap().value, 2.0);
        assert!(wsl_loss(&m, &[0.0], -1.0, false).is_err());
    }
}
