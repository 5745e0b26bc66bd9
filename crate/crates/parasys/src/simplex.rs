//! Small dense simplex solver for the positive-kernel-vector search.
//!
//! The only problem solved here is: maximize the smallest component of a
//! vector ranging over the unit box of a low-dimensional subspace. It is
//! rewritten as `maximize c.x subject to A x <= b, x >= 0` with b >= 0, so
//! a plain primal simplex from the slack basis suffices; Bland's rule
//! guards against cycling. Dimensions never exceed a few dozen.

const PIVOT_TOL: f64 = 1e-11;

/// Maximize `obj . x` subject to `a x <= b`, `x >= 0`, all `b[i] >= 0`.
/// Returns (optimal value, optimizer); `None` if the problem is unbounded.
pub fn simplex_max(a: &[Vec<f64>], b: &[f64], obj: &[f64]) -> Option<(f64, Vec<f64>)> {
    let m = a.len();
    let n = obj.len();
    debug_assert!(b.iter().all(|&x| x >= 0.0));

    // Tableau rows: m constraints + objective row; columns: n structural
    // variables, m slacks, rhs.
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -obj[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        // Entering variable: Bland's rule, smallest index with negative
        // reduced cost.
        let Some(pivot_col) = (0..n + m).find(|&j| t[m][j] < -PIVOT_TOL) else {
            break;
        };
        // Ratio test.
        let mut pivot_row = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][pivot_col] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][pivot_col];
                if ratio < best_ratio - PIVOT_TOL
                    || (ratio < best_ratio + PIVOT_TOL
                        && pivot_row.is_some_and(|r: usize| basis[i] < basis[r]))
                {
                    best_ratio = ratio;
                    pivot_row = Some(i);
                }
            }
        }
        let Some(r) = pivot_row else {
            return None; // unbounded
        };
        let pivot = t[r][pivot_col];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        for i in 0..=m {
            if i != r {
                let factor = t[i][pivot_col];
                if factor != 0.0 {
                    for j in 0..width {
                        t[i][j] -= factor * t[r][j];
                    }
                }
            }
        }
        basis[r] = pivot_col;
    }

    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = t[i][width - 1];
        }
    }
    Some((t[m][width - 1], x))
}

/// Maximize min_k (sum_i coeff_i * basis_i)[k] over |coeff_i| <= 1.
/// `columns` holds the basis vectors; returns (best min-component, the
/// combined vector).
pub fn max_min_combination(columns: &[Vec<f64>]) -> Option<(f64, Vec<f64>)> {
    let m = columns.len();
    let rows = columns.first()?.len();

    // Shift to nonnegative variables: u_i = coeff_i + 1 in [0, 2] and
    // s = t + t0 >= 0 with t0 large enough that the shift never binds.
    let t0 = (0..rows)
        .map(|k| columns.iter().map(|col| col[k].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;

    let mut a = Vec::with_capacity(rows + m);
    let mut b = Vec::with_capacity(rows + m);
    for k in 0..rows {
        // s - sum_i B_ki u_i <= t0 - sum_i B_ki
        let mut row = vec![0.0; m + 1];
        let mut shift = 0.0;
        for i in 0..m {
            row[i] = -columns[i][k];
            shift += columns[i][k];
        }
        row[m] = 1.0;
        a.push(row);
        b.push(t0 - shift);
    }
    for i in 0..m {
        let mut row = vec![0.0; m + 1];
        row[i] = 1.0;
        a.push(row);
        b.push(2.0);
    }
    let mut obj = vec![0.0; m + 1];
    obj[m] = 1.0;

    let (value, x) = simplex_max(&a, &b, &obj)?;
    let coeffs: Vec<f64> = (0..m).map(|i| x[i] - 1.0).collect();
    let mut combined = vec![0.0; rows];
    for (i, col) in columns.iter().enumerate() {
        for k in 0..rows {
            combined[k] += coeffs[i] * col[k];
        }
    }
    Some((value - t0, combined))
}
