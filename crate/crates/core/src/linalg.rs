//! Small dense kernels on flat row-major buffers (K×K systems, K-vectors).

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// y += alpha * x
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lower triangle of `a` += alpha * v vᵀ.
#[inline]
pub fn syr_lower(alpha: f64, v: &[f64], a: &mut [f64], k: usize) {
    for i in 0..k {
        let s = alpha * v[i];
        let row = &mut a[i * k..i * k + i + 1];
        for (aij, vj) in row.iter_mut().zip(&v[..=i]) {
            *aij += s * vj;
        }
    }
}

/// Copies the lower triangle onto the upper one.
pub fn symmetrize_lower(a: &mut [f64], k: usize) {
    for i in 0..k {
        for j in 0..i {
            a[j * k + i] = a[i * k + j];
        }
    }
}

/// In-place Cholesky of the lower triangle; false if a pivot is not positive.
pub fn cholesky_lower(a: &mut [f64], k: usize) -> bool {
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= a[j * k + p] * a[j * k + p];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= a[i * k + p] * a[j * k + p];
            }
            a[i * k + j] = s / d;
        }
    }
    true
}

/// Solves L Lᵀ x = b given the factor from [`cholesky_lower`]; `b` becomes x.
pub fn cholesky_solve(l: &[f64], b: &mut [f64], k: usize) {
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * k + p] * b[p];
        }
        b[i] = s / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in i + 1..k {
            s -= l[p * k + i] * b[p];
        }
        b[i] = s / l[i * k + i];
    }
}

/// Factors symmetric A (lower triangle read) in place, refusing matrices
/// whose smallest eigenvalue is below `floor`. The guard factors A − floor·I
/// first: that succeeds exactly when λ_min(A) > floor.
pub fn guarded_factor(a: &mut [f64], k: usize, floor: f64, scratch: &mut Vec<f64>) -> bool {
    scratch.clear();
    scratch.extend_from_slice(a);
    for i in 0..k {
        scratch[i * k + i] -= floor;
    }
    cholesky_lower(scratch, k) && cholesky_lower(a, k)
}

/// Solves A x = b under the [`guarded_factor`] check; `b` becomes x.
pub fn spd_solve_guarded(
    a: &[f64],
    b: &mut [f64],
    k: usize,
    floor: f64,
    scratch: &mut Vec<f64>,
) -> Result<(), ()> {
    let mut l = a.to_vec();
    if !guarded_factor(&mut l, k, floor, scratch) {
        return Err(());
    }
    cholesky_solve(&l, b, k);
    Ok(())
}

/// Inverse of a symmetric positive-definite matrix (full buffer written).
pub fn spd_inverse(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    if !cholesky_lower(&mut l, k) {
        return None;
    }
    let mut inv = vec![0.0; k * k];
    let mut col = vec![0.0; k];
    for j in 0..k {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        cholesky_solve(&l, &mut col, k);
        for i in 0..k {
            inv[i * k + j] = col[i];
        }
    }
    Some(inv)
}

/// y = A x for a full row-major K×K matrix.
pub fn matvec(a: &[f64], x: &[f64], k: usize) -> Vec<f64> {
    (0..k).map(|i| dot(&a[i * k..(i + 1) * k], x)).collect()
}

/// Smallest eigenvalue of a full symmetric matrix.
pub fn min_eigenvalue(a: &[f64], k: usize) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(k, k, a);
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
