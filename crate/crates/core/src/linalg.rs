//! Sparse symmetric systems: assembly helpers and Jacobi-preconditioned CG.

use crate::{Error, Result};

/// Square matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries `(column, value)` of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `self + s·other` for matrices of equal size.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, s * v)));
        }
        csr_from_triplets(self.n, &t)
    }

    /// Principal submatrix on the rows and columns where `keep` is true,
    /// renumbered in increasing order.
    pub fn submatrix(&self, keep: &[bool]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        let mut m = 0;
        for (i, &k) in keep.iter().enumerate() {
            if k {
                map[i] = m;
                m += 1;
            }
        }
        let mut t = Vec::new();
        for i in (0..self.n).filter(|&i| keep[i]) {
            t.extend(self.row(i).filter(|&(j, _)| keep[j]).map(|(j, v)| (map[i], map[j], v)));
        }
        csr_from_triplets(m, &t)
    }
}

/// Sums duplicate triplets into a CSR matrix.
pub fn csr_from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
    let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
    sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut row_ptr = vec![0; n + 1];
    let mut cols = Vec::with_capacity(sorted.len());
    let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
    let mut last: Option<(usize, usize)> = None;
    for (i, j, v) in sorted {
        assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}×{n}");
        if last == Some((i, j)) {
            *vals.last_mut().unwrap() += v;
        } else {
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    CsrMatrix { n, row_ptr, cols, vals }
}

/// `y = A x`
pub fn spmv(a: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate().take(a.n) {
        *yi = a.row(i).map(|(j, v)| v * x[j]).sum();
    }
}

pub fn diagonal(a: &CsrMatrix) -> Vec<f64> {
    (0..a.n).map(|i| a.get(i, i)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stopping rule and iteration cap for [`pcg`].
#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual `‖b − Ax‖ / ‖b‖`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Solves the SPD system `A x = b` starting from the contents of `x`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: CgOptions) -> Result<CgReport> {
    let n = b.len();
    if a.nrows() != n || x.len() != n {
        return Err(Error::LengthMismatch { expected: a.nrows(), got: n.min(x.len()) });
    }
    let inv_diag: Vec<f64> = diagonal(a).iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport { iterations: 0, rel_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    spmv(a, x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / b_norm;
    for it in 0..opts.max_iter {
        if rel <= opts.rel_tol {
            return Ok(CgReport { iterations: it, rel_residual: rel });
        }
        spmv(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDiverged { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if !rel.is_finite() {
            return Err(Error::SolverDiverged { iterations: it + 1, residual: rel });
        }
    }
    if rel <= opts.rel_tol {
        Ok(CgReport { iterations: opts.max_iter, rel_residual: rel })
    } else {
        Err(Error::SolverDiverged { iterations: opts.max_iter, residual: rel })
    }
}

/// [`pcg`] with the span of `w` removed from the Krylov space and solved
/// exactly as a one-dimensional coarse problem.
///
/// Suited to operators with one isolated, nearly singular mode close to `w`,
/// such as a Neumann Laplacian with a weak Robin term and `w = 1`.
pub fn pcg_deflated(a: &CsrMatrix, b: &[f64], x: &mut [f64], w: &[f64], opts: CgOptions) -> Result<CgReport> {
    let n = b.len();
    if a.nrows() != n || x.len() != n || w.len() != n {
        return Err(Error::LengthMismatch { expected: a.nrows(), got: n.min(x.len()).min(w.len()) });
    }
    let mut aw = vec![0.0; n];
    spmv(a, w, &mut aw);
    let waw = dot(w, &aw);
    if !(waw > 0.0) {
        return Err(Error::SolverDiverged { iterations: 0, residual: f64::NAN });
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport { iterations: 0, rel_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = diagonal(a).iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    spmv(a, x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    // coarse correction: afterwards wᵀr = 0
    let c = dot(w, &r) / waw;
    for i in 0..n {
        x[i] += c * w[i];
        r[i] -= c * aw[i];
    }
    let project = |z: &mut [f64]| {
        let mu = dot(&aw, z) / waw;
        for i in 0..n {
            z[i] -= mu * w[i];
        }
    };
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / b_norm;
    for it in 0..opts.max_iter {
        if rel <= opts.rel_tol {
            return Ok(CgReport { iterations: it, rel_residual: rel });
        }
        spmv(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDiverged { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if !rel.is_finite() {
            return Err(Error::SolverDiverged { iterations: it + 1, residual: rel });
        }
    }
    if rel <= opts.rel_tol {
        Ok(CgReport { iterations: opts.max_iter, rel_residual: rel })
    } else {
        Err(Error::SolverDiverged { iterations: opts.max_iter, residual: rel })
    }
}
