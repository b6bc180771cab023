//! Symmetric eigenvalues by a determinant sign scan with bisection,
//! eigenvectors by inverse iteration. Slow and simple; only for small matrices.

use super::gauss;

/// Sample covariance (divisor n - 1) of the rows of `x`.
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let p = x[0].len();
    let mean: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut c = vec![vec![0.0; p]; p];
    for (a, row) in c.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = x.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1) as f64;
        }
    }
    c
}

/// det(a - shift·I) by Gaussian elimination with partial pivoting.
fn char_det(a: &[Vec<f64>], shift: f64) -> f64 {
    let p = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let mut det = 1.0;
    for k in 0..p {
        let piv = (k..p).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        if m[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..p {
            let f = m[i][k] / m[k][k];
            for j in k..p {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    det
}

/// Eigenvalues in non-increasing order, found as sign changes of the
/// characteristic determinant on a grid over the Gershgorin interval,
/// refined by bisection. Assumes the eigenvalues are distinct.
pub fn eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let p = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, row) in a.iter().enumerate() {
        let r: f64 = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.abs()).sum();
        lo = lo.min(row[i] - r);
        hi = hi.max(row[i] + r);
    }
    lo -= 1e-3;
    hi += 1e-3;
    let mut steps = 4096;
    loop {
        let h = (hi - lo) / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = lo;
        let mut f0 = char_det(a, x0);
        for s in 1..=steps {
            let x1 = lo + h * s as f64;
            let f1 = char_det(a, x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0.signum() != f1.signum() && f1 != 0.0 {
                let (mut l, mut r, fl) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (l + r);
                    let fm = char_det(a, mid);
                    if fm == 0.0 {
                        l = mid;
                        r = mid;
                        break;
                    }
                    if fm.signum() == fl.signum() {
                        l = mid;
                    } else {
                        r = mid;
                    }
                }
                roots.push(0.5 * (l + r));
            }
            x0 = x1;
            f0 = f1;
        }
        if roots.len() == p {
            roots.reverse();
            return roots;
        }
        assert!(steps < 1 << 22, "could not separate {p} eigenvalues, found {}", roots.len());
        steps *= 4;
    }
}

/// Unit eigenvector for an isolated eigenvalue `lambda`.
pub fn eigenvector(a: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let p = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let shift = lambda + 1e-10 * scale;
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let mut v: Vec<f64> = (0..p).map(|i| 1.0 + 0.1 * i as f64).collect();
    for _ in 0..8 {
        let w = gauss::solve(&m, &v).expect("shifted matrix is invertible");
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    v
}
