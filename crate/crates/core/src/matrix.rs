//! (N+2)x(N+2) coupling matrices over [S, 1..N, L] and the boolean topology
//! masks that constrain them.

use crate::error::{Error, Result};
use crate::linalg;

/// Symmetric real coupling matrix for a source, N resonators, and a load.
///
/// Index 0 is the source row S, indices 1..=N are resonators, index N+1 is
/// the load row L. The S and L diagonal entries are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    order: usize,
    values: Vec<f64>,
    labels: Vec<String>,
}

impl CouplingMatrix {
    /// Zero matrix of the given resonator count.
    pub fn new(order: usize) -> Self {
        let dim = order + 2;
        CouplingMatrix {
            order,
            values: vec![0.0; dim * dim],
            labels: default_labels(order),
        }
    }

    /// Build from a row-major (order+2)^2 slice, validating symmetry,
    /// finiteness, and zero S/L self-terms.
    pub fn from_values(order: usize, values: &[f64]) -> Result<Self> {
        let dim = order + 2;
        if values.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for order {}, got {}",
                dim * dim,
                order,
                values.len()
            )));
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite entry at flat index {idx}"
                )));
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = values[i * dim + j];
                let b = values[j * dim + i];
                if (a - b).abs() > 1e-9 {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
            }
        }
        if values[0] != 0.0 || values[dim * dim - 1] != 0.0 {
            return Err(Error::InvalidInput(
                "source and load self-couplings must be zero".into(),
            ));
        }
        let mut m = CouplingMatrix::new(order);
        for i in 0..dim {
            for j in i..dim {
                let v = 0.5 * (values[i * dim + j] + values[j * dim + i]);
                m.values[i * dim + j] = v;
                m.values[j * dim + i] = v;
            }
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.order + 2
    }

    /// Index of the source row.
    pub fn s_idx(&self) -> usize {
        0
    }

    /// Index of the load row.
    pub fn l_idx(&self) -> usize {
        self.order + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim() + j]
    }

    /// Set entry (i, j) and its mirror.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let dim = self.dim();
        self.values[i * dim + j] = v;
        self.values[j * dim + i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<()> {
        if labels.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "expected {} labels, got {}",
                self.dim(),
                labels.len()
            )));
        }
        self.labels = labels;
        Ok(())
    }

    /// Similarity transform by a Givens rotation on a resonator pivot.
    ///
    /// The pivot is a pair of 1-based resonator indices; the source and load
    /// rows are never valid pivots. The result is R^T M R, which preserves
    /// symmetry and the scattering response.
    pub fn apply_rotation(&self, pivot: (usize, usize), angle: f64) -> Result<CouplingMatrix> {
        let (i, j) = pivot;
        if i < 1 || j > self.order || i >= j {
            return Err(Error::InvalidInput(format!(
                "rotation pivot ({i},{j}) must satisfy 1 <= i < j <= {}",
                self.order
            )));
        }
        let dim = self.dim();
        let c = angle.cos();
        let s = angle.sin();
        let mut out = self.clone();
        // columns: M <- M R with R[i][i]=R[j][j]=c, R[i][j]=-s, R[j][i]=s
        for k in 0..dim {
            let mki = out.values[k * dim + i];
            let mkj = out.values[k * dim + j];
            out.values[k * dim + i] = c * mki + s * mkj;
            out.values[k * dim + j] = -s * mki + c * mkj;
        }
        // rows: M <- R^T M
        for k in 0..dim {
            let mik = out.values[i * dim + k];
            let mjk = out.values[j * dim + k];
            out.values[i * dim + k] = c * mik + s * mjk;
            out.values[j * dim + k] = -s * mik + c * mjk;
        }
        // re-symmetrize against rounding drift
        for a in 0..dim {
            for b in (a + 1)..dim {
                let v = 0.5 * (out.values[a * dim + b] + out.values[b * dim + a]);
                out.values[a * dim + b] = v;
                out.values[b * dim + a] = v;
            }
        }
        Ok(out)
    }

    /// Eigenvalues of the N-by-N resonator block, sorted ascending.
    pub fn resonator_eigenvalues(&self) -> Vec<f64> {
        let n = self.order;
        let dim = self.dim();
        let mut block = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                block[i * n + j] = self.values[(i + 1) * dim + (j + 1)];
            }
        }
        linalg::sym_eigenvalues(&block, n)
    }

    /// Largest |entry| at positions the mask forbids.
    pub fn max_abs_outside(&self, mask: &TopologyMask) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                if !mask.allowed(i, j) {
                    worst = worst.max(self.values[i * dim + j].abs());
                }
            }
        }
        worst
    }

    /// Flip resonator signs (diagonal +/-1 similarity) so that couplings are
    /// positive along a breadth-first spanning tree rooted at the source.
    /// This resolves the global sign freedom without changing the response.
    pub fn normalize_signs(&self) -> CouplingMatrix {
        let dim = self.dim();
        let mut sign = vec![0.0_f64; dim];
        sign[self.s_idx()] = 1.0;
        sign[self.l_idx()] = 1.0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(self.s_idx());
        while let Some(i) = queue.pop_front() {
            for j in 1..=self.order {
                if sign[j] == 0.0 && self.get(i, j).abs() > 1e-12 {
                    sign[j] = if sign[i] * self.get(i, j) >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    };
                    queue.push_back(j);
                }
            }
        }
        for s in sign.iter_mut() {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        // the load port sign is a free reference convention; use it to make
        // the dominant load coupling positive
        let mut k_star = 1;
        for k in 1..=self.order {
            if self.get(k, self.l_idx()).abs() > self.get(k_star, self.l_idx()).abs() {
                k_star = k;
            }
        }
        if sign[k_star] * self.get(k_star, self.l_idx()) < 0.0 {
            sign[self.l_idx()] = -1.0;
        }
        let mut out = self.clone();
        for i in 0..dim {
            for j in 0..dim {
                let v = sign[i] * sign[j] * self.values[i * dim + j];
                out.values[i * dim + j] = if v == 0.0 { 0.0 } else { v };
            }
        }
        out
    }
}

fn default_labels(order: usize) -> Vec<String> {
    let mut labels = Vec::with_capacity(order + 2);
    labels.push("S".to_string());
    for k in 1..=order {
        labels.push(k.to_string());
    }
    labels.push("L".to_string());
    labels
}

/// Boolean mask of permitted couplings, symmetric over [S, 1..N, L].
///
/// Resonator self-couplings are always permitted; the S and L diagonal never
/// are; the direct S-L entry only when explicitly enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyMask {
    order: usize,
    allowed: Vec<bool>,
}

impl TopologyMask {
    /// Mask with only the resonator diagonal enabled.
    pub fn diagonal_only(order: usize) -> Self {
        let dim = order + 2;
        let mut mask = TopologyMask {
            order,
            allowed: vec![false; dim * dim],
        };
        for k in 1..=order {
            mask.allowed[k * dim + k] = true;
        }
        mask
    }

    /// Every coupling except S-S, L-L, and (unless `source_load`) S-L.
    pub fn all_couplings(order: usize, source_load: bool) -> Self {
        let dim = order + 2;
        let mut mask = TopologyMask {
            order,
            allowed: vec![true; dim * dim],
        };
        mask.allowed[0] = false;
        mask.allowed[dim * dim - 1] = false;
        if !source_load {
            mask.allowed[dim - 1] = false;
            mask.allowed[(dim - 1) * dim] = false;
        }
        mask
    }

    /// Canonical transversal pattern: every resonator couples to S and L,
    /// no resonator-resonator couplings.
    pub fn transversal(order: usize) -> Self {
        let mut mask = TopologyMask::diagonal_only(order);
        for k in 1..=order {
            mask.permit(0, k);
            mask.permit(k, order + 1);
        }
        mask
    }

    /// Order-4 parallel-path pattern: chain S-1-2-3-L with resonator 4
    /// bridging 1 and 3. Realizes a single finite transmission zero.
    pub fn parallel_path_order4() -> Self {
        let mut mask = TopologyMask::diagonal_only(4);
        for &(i, j) in &[(0, 1), (1, 2), (2, 3), (3, 5), (1, 4), (3, 4)] {
            mask.permit(i, j);
        }
        mask
    }

    /// Build from explicit coupling pairs (matrix indices over [S,1..N,L]).
    pub fn from_pairs(order: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let dim = order + 2;
        let mut mask = TopologyMask::diagonal_only(order);
        for &(i, j) in pairs {
            if i >= dim || j >= dim {
                return Err(Error::InvalidInput(format!(
                    "mask pair ({i},{j}) out of range for order {order}"
                )));
            }
            if (i == 0 && j == 0) || (i == dim - 1 && j == dim - 1) {
                return Err(Error::InvalidInput(
                    "source/load self-couplings cannot be enabled".into(),
                ));
            }
            mask.permit(i, j);
        }
        Ok(mask)
    }

    pub fn permit(&mut self, i: usize, j: usize) {
        let dim = self.order + 2;
        self.allowed[i * dim + j] = true;
        self.allowed[j * dim + i] = true;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * (self.order + 2) + j]
    }

    /// True when every entry of `m` above the given magnitude is permitted.
    pub fn admits(&self, m: &CouplingMatrix, tol: f64) -> bool {
        if m.order() != self.order {
            return false;
        }
        let dim = self.order + 2;
        for i in 0..dim {
            for j in 0..dim {
                if !self.allowed(i, j) && m.get(i, j).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// True when the permitted couplings connect source to load.
    pub fn connects_source_to_load(&self) -> bool {
        let dim = self.order + 2;
        let mut seen = vec![false; dim];
        let mut queue = std::collections::VecDeque::new();
        seen[0] = true;
        queue.push_back(0);
        while let Some(i) = queue.pop_front() {
            for (j, seen_j) in seen.iter_mut().enumerate() {
                if i != j && self.allowed(i, j) && !*seen_j {
                    *seen_j = true;
                    queue.push_back(j);
                }
            }
        }
        seen[dim - 1]
    }

    /// Upper-triangle free positions, diagonal included, in row-major order.
    pub fn free_positions(&self) -> Vec<(usize, usize)> {
        let dim = self.order + 2;
        let mut out = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                if self.allowed(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}
