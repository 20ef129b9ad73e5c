use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse linear form `Σ coef · y[var]`, sorted by variable with no
/// duplicates or zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearForm {
    pub terms: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn single(var: usize) -> Self {
        Self {
            terms: vec![(var, 1.0)],
        }
    }

    pub fn from_terms(mut terms: Vec<(usize, f64)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Self { terms: out }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * y[v]).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Moment,
    Localizing,
}

/// One entry of the upper triangle (`row <= col`) of a symmetric block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub form: LinearForm,
}

/// A symmetric matrix whose entries are linear forms in `y`. Only the upper
/// triangle is stored, so symmetry holds by construction; missing entries
/// are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub label: String,
    pub size: usize,
    pub kind: BlockKind,
    pub entries: Vec<BlockEntry>,
}

impl Block {
    /// Entry `(row, col)` of the full symmetric matrix.
    pub fn entry(&self, row: usize, col: usize) -> Option<&LinearForm> {
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        self.entries
            .iter()
            .find(|e| e.row == r && e.col == c)
            .map(|e| &e.form)
    }

    /// Dense evaluation at `y`.
    pub fn eval(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.size]; self.size];
        for e in &self.entries {
            let v = e.form.eval(y);
            m[e.row][e.col] = v;
            m[e.col][e.row] = v;
        }
        m
    }
}

/// Sparse equality system `A y = rhs` in coordinate form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equalities {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl Equalities {
    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn push_row(&mut self, form: &LinearForm, rhs: f64) {
        let r = self.rhs.len();
        for &(v, c) in &form.terms {
            self.rows.push(r);
            self.cols.push(v);
            self.vals.push(c);
        }
        self.rhs.push(rhs);
    }

    /// Rows as linear forms.
    pub fn row_forms(&self) -> Vec<LinearForm> {
        let mut rows = vec![Vec::new(); self.n_rows()];
        for k in 0..self.vals.len() {
            rows[self.rows[k]].push((self.cols[k], self.vals[k]));
        }
        rows.into_iter().map(LinearForm::from_terms).collect()
    }

    /// `A y - rhs`.
    pub fn residual(&self, y: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for k in 0..self.vals.len() {
            out[self.rows[k]] += self.vals[k] * y[self.cols[k]];
        }
        out
    }
}

/// Solver-agnostic block SDP:
///
/// ```text
/// minimize    objective · y
/// subject to  Σ_i y_i A_{b,i} ⪰ 0   for every block b
///             equalities: A y = rhs
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSdp {
    pub y_count: usize,
    pub blocks: Vec<Block>,
    pub equalities: Equalities,
    pub objective: LinearForm,
}

impl BlockSdp {
    /// Check that every reference is in range and entries are upper
    /// triangular.
    pub fn validate(&self) -> Result<()> {
        let check_form = |f: &LinearForm, what: &str| -> Result<()> {
            match f
                .terms
                .iter()
                .find(|t| t.0 >= self.y_count || !t.1.is_finite())
            {
                Some(t) => Err(Error::MalformedSdp(format!(
                    "{what} references y{} invalidly",
                    t.0
                ))),
                None => Ok(()),
            }
        };
        for b in &self.blocks {
            if b.size == 0 {
                return Err(Error::MalformedSdp(format!("block {} is empty", b.label)));
            }
            for e in &b.entries {
                if e.row > e.col || e.col >= b.size {
                    return Err(Error::MalformedSdp(format!(
                        "block {} entry ({}, {}) outside upper triangle",
                        b.label, e.row, e.col
                    )));
                }
                check_form(&e.form, &b.label)?;
            }
        }
        let eq = &self.equalities;
        if eq.rows.len() != eq.cols.len() || eq.rows.len() != eq.vals.len() {
            return Err(Error::MalformedSdp(
                "equality arrays differ in length".into(),
            ));
        }
        if eq.rows.iter().any(|&r| r >= eq.n_rows()) || eq.cols.iter().any(|&c| c >= self.y_count) {
            return Err(Error::MalformedSdp("equality index out of range".into()));
        }
        if eq.vals.iter().chain(&eq.rhs).any(|v| !v.is_finite()) {
            return Err(Error::MalformedSdp("non-finite equality data".into()));
        }
        check_form(&self.objective, "objective")
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|b| b.size).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sdp: BlockSdp = serde_json::from_str(s)?;
        sdp.validate()?;
        Ok(sdp)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
