//! Small dense solvers: Cholesky for symmetric positive definite systems and
//! Householder QR for least squares.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            debug_assert_eq!(r.len(), cols);
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular;

/// Solve `a x = b` for symmetric positive definite `a` (n×n).
/// A pivot at or below `1e-12 * max(1, max diag)` is reported as singular.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, Singular> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    let scale = (0..n).map(|i| a.get(i, i)).fold(1.0f64, f64::max);
    let tol = 1e-12 * scale;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > tol) {
            return Err(Singular);
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}

/// Least-squares solution of `a x ≈ b` (m×n, m ≥ n) by Householder QR.
/// Rank deficiency (|R_jj| ≤ 1e-12 · max|R_ii|) is reported as singular.
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, Singular> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return Err(Singular);
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    for j in 0..n {
        let norm = (j..m).map(|i| r.get(i, j).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r.get(j, j) > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| r.get(i, j)).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..n {
            let dot: f64 = (j..m).map(|i| v[i - j] * r.get(i, c)).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                r.set(i, c, r.get(i, c) - f * v[i - j]);
            }
        }
        let dot: f64 = (j..m).map(|i| v[i - j] * y[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in j..m {
            y[i] -= f * v[i - j];
        }
    }
    let max_diag = (0..n).map(|i| r.get(i, i).abs()).fold(0.0f64, f64::max);
    if max_diag == 0.0 {
        return Err(Singular);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let d = r.get(i, i);
        if d.abs() <= 1e-12 * max_diag {
            return Err(Singular);
        }
        let mut s = y[i];
        for k in i + 1..n {
            s -= r.get(i, k) * x[k];
        }
        x[i] = s / d;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_small_system() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]], 2);
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        // 4x+2y=2, 2x+3y=1 -> x=0.5, y=0
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn cholesky_detects_singularity() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], 2);
        assert_eq!(cholesky_solve(&a, &[1.0, 1.0]), Err(Singular));
    }

    #[test]
    fn lstsq_exact_fit() {
        // y = 1 + 2x
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let b: Vec<f64> = (0..5).map(|i| 1.0 + 2.0 * i as f64).collect();
        let x = lstsq(&Matrix::from_rows(&rows, 2), &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lstsq_rank_deficient() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        assert_eq!(lstsq(&Matrix::from_rows(&rows, 2), &[0.0, 1.0, 2.0, 3.0]), Err(Singular));
    }
}
