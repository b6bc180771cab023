//! Gauss-Jordan elimination with full pivoting.

pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &y)| r.iter().copied().chain([y]).collect()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().take(n).skip(k) {
                if v.abs() > best {
                    (pr, pc, best) = (i, j, v.abs());
                }
            }
        }
        if best == 0.0 {
            return None;
        }
        m.swap(k, pr);
        for row in &mut m {
            row.swap(k, pc);
        }
        perm.swap(k, pc);
        let piv = m[k][k];
        for v in &mut m[k] {
            *v /= piv;
        }
        for i in 0..n {
            if i != k {
                let f = m[i][k];
                if f != 0.0 {
                    for j in k..=n {
                        m[i][j] -= f * m[k][j];
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in 0..n {
        x[perm[k]] = m[k][n];
    }
    Some(x)
}

/// Least squares with intercept via the normal equations; weights then
/// intercept.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = x[0].len() + 1;
    let rows: Vec<Vec<f64>> = x.iter().map(|r| r.iter().copied().chain([1.0]).collect()).collect();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (r, &yi) in rows.iter().zip(y) {
        for a in 0..p {
            xty[a] += r[a] * yi;
            for b in 0..p {
                xtx[a][b] += r[a] * r[b];
            }
        }
    }
    solve(&xtx, &xty)
}
