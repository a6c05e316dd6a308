//! JSON documents for coupling matrices, topology masks, and fit results.
//!
//! The matrix document is `{"order": N, "labels": ["S","1",...,"L"],
//! "matrix": [[row-major reals]], "plan": {"f0_hz": ..., "bw_hz": ...}}`
//! with the plan optional. Matrices must be symmetric on read (tolerance
//! 1e-9); writing re-emits exactly symmetric data. Masks are
//! `{"order": N, "couplings": [["S","1"], ["1","2"], ...]}` using the same
//! labels; resonator self-couplings are implicit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::FitResult;
use crate::matrix::{CouplingMatrix, TopologyMask};
use crate::response::FrequencyPlan;

#[derive(Debug, Serialize, Deserialize)]
struct PlanDoc {
    f0_hz: f64,
    bw_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixDoc {
    order: usize,
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<PlanDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FitDoc {
    cost: f64,
    iterations: usize,
    converged: bool,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskDoc {
    order: usize,
    couplings: Vec<(String, String)>,
}

/// Parse the shared matrix document.
pub fn read_matrix_json(text: &str) -> Result<(CouplingMatrix, Option<FrequencyPlan>)> {
    let doc: MatrixDoc = serde_json::from_str(text)?;
    matrix_from_doc(&doc)
}

fn matrix_from_doc(doc: &MatrixDoc) -> Result<(CouplingMatrix, Option<FrequencyPlan>)> {
    let dim = doc.order + 2;
    if doc.matrix.len() != dim || doc.matrix.iter().any(|row| row.len() != dim) {
        return Err(Error::InvalidInput(format!(
            "matrix must be {dim}x{dim} for order {}",
            doc.order
        )));
    }
    if !doc.labels.is_empty() && doc.labels.len() != dim {
        return Err(Error::InvalidInput(format!(
            "expected {dim} labels for order {}, got {}",
            doc.order,
            doc.labels.len()
        )));
    }
    let flat: Vec<f64> = doc.matrix.iter().flatten().copied().collect();
    let mut m = CouplingMatrix::from_values(doc.order, &flat)?;
    if !doc.labels.is_empty() {
        m.set_labels(doc.labels.clone())?;
    }
    let plan = match &doc.plan {
        Some(p) => Some(FrequencyPlan::new(p.f0_hz, p.bw_hz)?),
        None => None,
    };
    Ok((m, plan))
}

fn doc_from_matrix(m: &CouplingMatrix, plan: Option<&FrequencyPlan>) -> MatrixDoc {
    let dim = m.dim();
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| m.get(i, j)).collect())
        .collect();
    MatrixDoc {
        order: m.order(),
        labels: m.labels().to_vec(),
        matrix: rows,
        plan: plan.map(|p| PlanDoc {
            f0_hz: p.f0_hz(),
            bw_hz: p.bw_hz(),
        }),
        fit: None,
    }
}

/// Serialize a matrix (and optional plan) to the shared document.
/// Deterministic: re-reading and re-writing reproduces the bytes.
pub fn write_matrix_json(m: &CouplingMatrix, plan: Option<&FrequencyPlan>) -> String {
    let doc = doc_from_matrix(m, plan);
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable document");
    out.push('\n');
    out
}

/// Serialize a fit result: the shared matrix document plus a "fit" object.
pub fn write_fit_json(result: &FitResult, plan: Option<&FrequencyPlan>) -> String {
    let mut doc = doc_from_matrix(&result.matrix, plan);
    doc.fit = Some(FitDoc {
        cost: result.cost,
        iterations: result.iterations,
        converged: result.converged,
        seed: result.seed,
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable document");
    out.push('\n');
    out
}

/// Parse a topology-mask document.
pub fn read_mask_json(text: &str) -> Result<TopologyMask> {
    let doc: MaskDoc = serde_json::from_str(text)?;
    let dim = doc.order + 2;
    let label_index = |label: &str| -> Result<usize> {
        match label {
            "S" | "s" => Ok(0),
            "L" | "l" => Ok(dim - 1),
            other => {
                let k: usize = other
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("unknown node label {other:?}")))?;
                if k < 1 || k > doc.order {
                    return Err(Error::InvalidInput(format!(
                        "resonator label {k} out of range 1..={}",
                        doc.order
                    )));
                }
                Ok(k)
            }
        }
    };
    let mut pairs = Vec::with_capacity(doc.couplings.len());
    for (a, b) in &doc.couplings {
        pairs.push((label_index(a)?, label_index(b)?));
    }
    TopologyMask::from_pairs(doc.order, &pairs)
}

/// Serialize a topology mask (off-diagonal couplings only; the resonator
/// diagonal is always permitted).
pub fn write_mask_json(mask: &TopologyMask) -> String {
    let dim = mask.order() + 2;
    let label = |i: usize| -> String {
        if i == 0 {
            "S".to_string()
        } else if i == dim - 1 {
            "L".to_string()
        } else {
            i.to_string()
        }
    };
    let mut couplings = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            if mask.allowed(i, j) {
                couplings.push((label(i), label(j)));
            }
        }
    }
    let doc = MaskDoc {
        order: mask.order(),
        couplings,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable document");
    out.push('\n');
    out
}
