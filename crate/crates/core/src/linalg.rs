//! Small dense linear-algebra kernels: complex LU solves for the network
//! matrix and a Jacobi eigenvalue sweep for symmetric real matrices.

use num_complex::Complex64;

/// LU factorization (partial pivoting) of a dense complex n-by-n matrix.
pub struct LuFactors {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

/// Factor `a` (row-major, n*n). Returns `None` when a pivot falls below
/// `scale * 1e-13`, i.e. the matrix is singular to working precision.
pub fn lu_factor(a: &[Complex64], n: usize) -> Option<LuFactors> {
    assert_eq!(a.len(), n * n, "matrix shape mismatch");
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let tiny = if scale > 0.0 {
        scale * 1e-13
    } else {
        f64::MIN_POSITIVE
    };

    for k in 0..n {
        // partial pivot on column k
        let mut p = k;
        let mut best = lu[k * n + k].norm();
        for i in (k + 1)..n {
            let v = lu[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < tiny {
            return None;
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let m = lu[i * n + k] / pivot;
            lu[i * n + k] = m;
            for j in (k + 1)..n {
                let upd = lu[k * n + j] * m;
                lu[i * n + j] -= upd;
            }
        }
    }
    Some(LuFactors { n, lu, perm })
}

impl LuFactors {
    /// Solve A x = b for a single right-hand side.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution (unit lower triangle)
        for i in 1..n {
            for j in 0..i {
                let upd = self.lu[i * n + j] * x[j];
                x[i] -= upd;
            }
        }
        // back substitution
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let upd = self.lu[i * n + j] * x[j];
                x[i] -= upd;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Eigenvalues of a symmetric real matrix (row-major, n*n) by cyclic Jacobi
/// rotations. Returns the eigenvalues sorted ascending.
pub fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "matrix shape mismatch");
    let mut m = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-15 * (1.0 + frobenius(&m, n)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // choose theta so the (p,q) entry of R^T M R vanishes
                let theta = 0.5 * (2.0 * apq).atan2(aqq - app);
                let c = theta.cos();
                let s = theta.sin();
                rotate_sym(&mut m, n, p, q, c, s);
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalue NaN"));
    eig
}

fn frobenius(m: &[f64], n: usize) -> f64 {
    m.iter().take(n * n).map(|v| v * v).sum::<f64>().sqrt()
}

/// In-place symmetric two-sided Givens rotation on rows/columns p, q.
fn rotate_sym(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let mkp = m[k * n + p];
        let mkq = m[k * n + q];
        m[k * n + p] = c * mkp - s * mkq;
        m[k * n + q] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[p * n + k];
        let mqk = m[q * n + k];
        m[p * n + k] = c * mpk - s * mqk;
        m[q * n + k] = s * mpk + c * mqk;
    }
}
