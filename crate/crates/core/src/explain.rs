//! Explanation exports: per-attribute piecewise-linear score functions and
//! per-attribute-pair interaction matrices.
//!
//! The score function of an attribute is the running sum of its block of
//! the marginal score vector, anchored at 0 on the first characteristic
//! point; the interaction grid between two attributes holds the factor-row
//! dot products of their sub-interval pairs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fm::ModelParams;

/// Cumulative score of one attribute at each characteristic point, plus the
/// max-minus-min importance measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFunctionTable {
    pub attribute: String,
    pub breakpoints: Vec<f64>,
    pub scores: Vec<f64>,
    pub importance: f64,
}

impl ScoreFunctionTable {
    /// Piecewise-linear interpolation of the table at `x`, clamped to the
    /// endpoint values outside the breakpoint range. This mirrors how
    /// out-of-range inputs clip during encoding.
    pub fn evaluate(&self, x: f64) -> f64 {
        let pts = &self.breakpoints;
        let last = pts.len() - 1;
        if x <= pts[0] {
            return self.scores[0];
        }
        if x >= pts[last] {
            return self.scores[last];
        }
        for kk in 1..=last {
            if x <= pts[kk] {
                let w = pts[kk] - pts[kk - 1];
                let t = if w > 0.0 { (x - pts[kk - 1]) / w } else { 0.0 };
                return self.scores[kk - 1] + t * (self.scores[kk] - self.scores[kk - 1]);
            }
        }
        self.scores[last]
    }
}

/// Interaction strengths between the sub-intervals of two attributes;
/// `grid[n1][n2]` is the dot product of the corresponding factor rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub attr1: String,
    pub attr2: String,
    pub grid: Vec<Vec<f64>>,
}

/// Score function of attribute `j`: scores are the running sums of its
/// increment block, starting at 0.
pub fn score_function(p: &ModelParams, j: usize) -> Result<ScoreFunctionTable> {
    if j >= p.disc.n_attrs() {
        return Err(Error::InvalidInput(format!(
            "attribute index {j} out of range ({} attributes)",
            p.disc.n_attrs()
        )));
    }
    let off = p.disc.offset(j);
    let g = p.disc.gammas()[j];
    let mut scores = Vec::with_capacity(g + 1);
    let mut acc = 0.0;
    scores.push(0.0);
    for n in off..off + g {
        acc += p.u[n];
        scores.push(acc);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ScoreFunctionTable {
        attribute: p.attr_names[j].clone(),
        breakpoints: p.disc.points(j).to_vec(),
        scores,
        importance: max - min,
    })
}

/// Interaction grid between two distinct attributes.
pub fn interaction_matrix(p: &ModelParams, j1: usize, j2: usize) -> Result<InteractionMatrix> {
    let m = p.disc.n_attrs();
    if j1 >= m || j2 >= m {
        return Err(Error::InvalidInput(format!(
            "attribute pair ({j1}, {j2}) out of range ({m} attributes)"
        )));
    }
    if j1 == j2 {
        return Err(Error::InvalidInput(format!(
            "interaction matrix needs two distinct attributes, got ({j1}, {j1})"
        )));
    }
    let (off1, g1) = (p.disc.offset(j1), p.disc.gammas()[j1]);
    let (off2, g2) = (p.disc.offset(j2), p.disc.gammas()[j2]);
    let mut grid = Vec::with_capacity(g1);
    for n1 in 0..g1 {
        let row1 = p.factor_row(off1 + n1);
        let mut row = Vec::with_capacity(g2);
        for n2 in 0..g2 {
            let row2 = p.factor_row(off2 + n2);
            row.push(row1.iter().zip(row2).map(|(a, b)| a * b).sum());
        }
        grid.push(row);
    }
    Ok(InteractionMatrix {
        attr1: p.attr_names[j1].clone(),
        attr2: p.attr_names[j2].clone(),
        grid,
    })
}

/// The full explanation document: every score function plus the requested
/// interaction grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub score_functions: Vec<ScoreFunctionTable>,
    pub interactions: Vec<InteractionMatrix>,
}

impl ExplanationReport {
    pub fn build(p: &ModelParams, pairs: &[(usize, usize)]) -> Result<Self> {
        let score_functions = (0..p.disc.n_attrs())
            .map(|j| score_function(p, j))
            .collect::<Result<Vec<_>>>()?;
        let interactions = pairs
            .iter()
            .map(|&(j1, j2)| interaction_matrix(p, j1, j2))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExplanationReport { score_functions, interactions })
    }

    /// Long-format CSVs next to the JSON document: one row per
    /// (attribute, breakpoint) and one per interaction cell.
    pub fn write_long_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let sf_path = dir.join("score_functions.csv");
        let mut sf = BufWriter::new(File::create(&sf_path).map_err(|e| Error::io(&sf_path, e))?);
        writeln!(sf, "attribute,breakpoint,score").map_err(|e| Error::io(&sf_path, e))?;
        for table in &self.score_functions {
            for (bp, s) in table.breakpoints.iter().zip(&table.scores) {
                writeln!(sf, "{},{},{}", table.attribute, bp, s)
                    .map_err(|e| Error::io(&sf_path, e))?;
            }
        }

        let ix_path = dir.join("interactions.csv");
        let mut ix = BufWriter::new(File::create(&ix_path).map_err(|e| Error::io(&ix_path, e))?);
        writeln!(ix, "attr1,attr2,interval1,interval2,strength")
            .map_err(|e| Error::io(&ix_path, e))?;
        for matrix in &self.interactions {
            for (n1, row) in matrix.grid.iter().enumerate() {
                for (n2, strength) in row.iter().enumerate() {
                    writeln!(
                        ix,
                        "{},{},{},{},{}",
                        matrix.attr1,
                        matrix.attr2,
                        n1 + 1,
                        n2 + 1,
                        strength
                    )
                    .map_err(|e| Error::io(&ix_path, e))?;
                }
            }
        }
        Ok(())
    }
}

/// Build and write the report as a JSON document.
pub fn export_report(p: &ModelParams, path: impl AsRef<Path>, pairs: &[(usize, usize)]) -> Result<()> {
    let path = path.as_ref();
    let report = ExplanationReport::build(p, pairs)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &report)
        .map_err(|e| Error::ModelFormat { path: path.into(), message: e.to_string() })?;
    Ok(())
}

/// Read a report document back.
pub fn load_report(path: impl AsRef<Path>) -> Result<ExplanationReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::ModelFormat { path: path.into(), message: e.to_string() })
}
