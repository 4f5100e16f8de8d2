//! Floating-point conic exports.
//!
//! Each constraint `xᵀAx + 2aᵀx + α ≤ 0` is written as
//! `‖Lx + p‖² + 2bᵀx + γ ≤ 0` with `A = LᵀL`, `Lᵀp + b = a` and `γ = α − |p|²`.
//! Its Schur complement `[[I, Lx + p], [(Lx + p)ᵀ, −2bᵀx − γ]] ⪰ 0` is the
//! matching linear matrix inequality.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadratic::{NumericQuadratic, QuadraticSystem};

/// Eigenvalues below this are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExportError {
    #[error("SDPA line {line}: {reason}")]
    SdpaSyntax { line: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocpConstraint {
    /// `r × n`, `r = rank A`.
    pub l: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub b: Vec<f64>,
    pub gamma: f64,
}

impl SocpConstraint {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let cone: f64 = self
            .l
            .iter()
            .zip(&self.p)
            .map(|(row, p)| {
                let y = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + p;
                y * y
            })
            .sum();
        let lin: f64 = self.b.iter().zip(x).map(|(a, b)| a * b).sum();
        cone + 2.0 * lin + self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocpForm {
    pub dim: usize,
    pub constraints: Vec<SocpConstraint>,
}

/// Rows of `L` with `LᵀL = A`: scaled unit rows for diagonal `A`, else
/// `√λ vᵀ` over eigenpairs sorted by decreasing eigenvalue.
fn factor_rows(q: &NumericQuadratic) -> Vec<Vec<f64>> {
    let n = q.dim();
    let diagonal = (0..n).all(|i| (0..n).all(|k| i == k || q.matrix[i][k] == 0.0));
    if diagonal {
        return (0..n)
            .filter(|&i| q.matrix[i][i] > EIGEN_CLAMP)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = q.matrix[i][i].sqrt();
                row
            })
            .collect();
    }
    let m = DMatrix::from_fn(n, n, |i, k| q.matrix[i][k]);
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // Fix the sign so the largest component is positive.
            let pivot =
                v.iter().copied().fold(
                    0.0_f64,
                    |best, x| if x.abs() > best.abs() { x } else { best },
                );
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (eig.eigenvalues[i], v)
        })
        .filter(|(lambda, _)| *lambda > EIGEN_CLAMP)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
        .into_iter()
        .map(|(lambda, v)| v.iter().map(|x| x * lambda.sqrt()).collect())
        .collect()
}

fn socp_constraint(q: &NumericQuadratic) -> SocpConstraint {
    let l = factor_rows(q);
    // Row k of L is √λ_k v_kᵀ, so p_k = v_kᵀ a / √λ_k = (row_k · a) / |row_k|².
    let p: Vec<f64> = l
        .iter()
        .map(|row| {
            let sq: f64 = row.iter().map(|x| x * x).sum();
            row.iter().zip(&q.linear).map(|(r, a)| r * a).sum::<f64>() / sq
        })
        .collect();
    let mut b = q.linear.clone();
    for (row, pk) in l.iter().zip(&p) {
        for (bi, r) in b.iter_mut().zip(row) {
            *bi -= r * pk;
        }
    }
    let gamma = q.constant - p.iter().map(|x| x * x).sum::<f64>();
    SocpConstraint { l, p, b, gamma }
}

pub fn export_socp(s: &QuadraticSystem) -> SocpForm {
    SocpForm {
        dim: s.dim(),
        constraints: s.numeric().iter().map(socp_constraint).collect(),
    }
}

/// SDPA sparse text with one LMI block of size `rank A + 1` per constraint and a zero objective.
pub fn export_sdpa(s: &QuadraticSystem) -> String {
    let socp = export_socp(s);
    let n = socp.dim;
    let mut out = String::new();
    writeln!(
        out,
        "\"convex quadratic system: {} constraints in dimension {n}",
        socp.constraints.len()
    )
    .unwrap();
    writeln!(out, "{n}").unwrap();
    writeln!(out, "{}", socp.constraints.len()).unwrap();
    let sizes: Vec<String> = socp
        .constraints
        .iter()
        .map(|c| (c.l.len() + 1).to_string())
        .collect();
    writeln!(out, "{}", sizes.join(" ")).unwrap();
    writeln!(out, "{}", vec!["0"; n].join(" ")).unwrap();
    let mut entry = |mat: usize, block: usize, i: usize, j: usize, v: f64| {
        if v != 0.0 {
            writeln!(out, "{mat} {block} {i} {j} {v:e}").unwrap();
        }
    };
    for (idx, c) in socp.constraints.iter().enumerate() {
        let block = idx + 1;
        let r = c.l.len();
        let last = r + 1;
        // F0 = −[[I, p], [pᵀ, −γ]]
        for k in 0..r {
            entry(0, block, k + 1, k + 1, -1.0);
            entry(0, block, k + 1, last, -c.p[k]);
        }
        entry(0, block, last, last, c.gamma);
        // F_i = [[0, L e_i], [(L e_i)ᵀ, −2 b_i]]
        for i in 0..n {
            for k in 0..r {
                entry(i + 1, block, k + 1, last, c.l[k][i]);
            }
            entry(i + 1, block, last, last, -2.0 * c.b[i]);
        }
    }
    out
}

/// Parsed SDPA sparse problem; matrices are stored per block as dense symmetric arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaProblem {
    pub variables: usize,
    pub block_sizes: Vec<usize>,
    /// `matrices[m][b]` is `F_m` restricted to block `b`.
    pub matrices: Vec<Vec<DMatrix<f64>>>,
}

impl SdpaProblem {
    /// `Σ x_i F_i − F_0` for one block.
    pub fn lmi_block(&self, block: usize, x: &[f64]) -> DMatrix<f64> {
        let mut m = -self.matrices[0][block].clone();
        for (i, xi) in x.iter().enumerate() {
            m += &self.matrices[i + 1][block] * *xi;
        }
        m
    }
}

pub fn parse_sdpa(text: &str) -> Result<SdpaProblem, ExportError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('"') && !l.starts_with('*'));
    let err = |line: usize, reason: &str| ExportError::SdpaSyntax {
        line: line + 1,
        reason: reason.to_string(),
    };
    let end = text.lines().count();
    let mut next_line = |what: &str| lines.next().ok_or_else(|| err(end, what));
    let (ln, l) = next_line("missing variable count")?;
    let variables: usize = l
        .trim()
        .parse()
        .map_err(|_| err(ln, "bad variable count"))?;
    let (ln, l) = next_line("missing block count")?;
    let nblocks: usize = l.trim().parse().map_err(|_| err(ln, "bad block count"))?;
    let (ln, l) = next_line("missing block structure")?;
    let block_sizes: Vec<usize> = l
        .split_whitespace()
        .map(|t| {
            t.trim_matches(|c| c == ',' || c == '{' || c == '}')
                .parse::<i64>()
                .map(|v| v.unsigned_abs() as usize)
        })
        .collect::<Result<_, _>>()
        .map_err(|_| err(ln, "bad block structure"))?;
    if block_sizes.len() != nblocks {
        return Err(err(ln, "block structure length differs from block count"));
    }
    let (ln, l) = next_line("missing objective")?;
    if l.split_whitespace().count() != variables {
        return Err(err(ln, "objective length differs from variable count"));
    }
    let mut matrices: Vec<Vec<DMatrix<f64>>> = (0..=variables)
        .map(|_| block_sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect())
        .collect();
    for (ln, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(err(ln, "entry needs five fields"));
        }
        let idx: Vec<usize> = parts[..4]
            .iter()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| err(ln, "bad index"))?;
        let value: f64 = parts[4].parse().map_err(|_| err(ln, "bad value"))?;
        let (mat, block, i, j) = (idx[0], idx[1], idx[2], idx[3]);
        if mat > variables || block == 0 || block > nblocks {
            return Err(err(ln, "matrix or block index out of range"));
        }
        let size = block_sizes[block - 1];
        if i == 0 || j == 0 || i > size || j > size {
            return Err(err(ln, "entry outside its block"));
        }
        let m = &mut matrices[mat][block - 1];
        m[(i - 1, j - 1)] = value;
        m[(j - 1, i - 1)] = value;
    }
    Ok(SdpaProblem {
        variables,
        block_sizes,
        matrices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_cylinder, build_theorem1, ConstructionParams};
    use crate::linalg::{int, RMatrix};
    use crate::quadratic::ConvexQuadratic;

    fn single(q: ConvexQuadratic) -> QuadraticSystem {
        QuadraticSystem::new(q.dim(), vec![q], None).unwrap()
    }

    #[test]
    fn ball_factor_is_identity() {
        let f = export_socp(&single(ConvexQuadratic::unit_ball(2)));
        let c = &f.constraints[0];
        assert_eq!(c.l, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(c.p, vec![0.0, 0.0]);
        assert_eq!(c.gamma, -1.0);
    }

    #[test]
    fn cylinder_completes_the_square() {
        let p = ConstructionParams::default();
        let f = export_socp(&single(build_cylinder(1, 3, &p).unwrap()));
        let c = &f.constraints[0];
        assert_eq!(c.l, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert!((c.p[0] - 0.7).abs() < 1e-15 && c.p[1] == 0.0);
        assert!((c.gamma + 2.56).abs() < 1e-12);
    }

    #[test]
    fn halfspace_is_affine() {
        let h = ConvexQuadratic::new(RMatrix::zeros(2, 2), vec![int(1), int(2)], int(-1)).unwrap();
        let f = export_socp(&single(h));
        let c = &f.constraints[0];
        assert!(c.l.is_empty());
        assert_eq!(c.b, vec![1.0, 2.0]);
    }

    #[test]
    fn dense_matrix_reconstructs() {
        let q = ConvexQuadratic::new(
            RMatrix::from_i64(&[&[2, 1, 0], &[1, 2, 0], &[0, 0, 0]]),
            vec![int(1), int(-1), int(3)],
            int(2),
        )
        .unwrap();
        let s = single(q.clone());
        let c = &export_socp(&s).constraints[0];
        assert_eq!(c.l.len(), 2);
        let nq = NumericQuadratic::from(&q);
        for x in [[0.3, -1.2, 4.0], [10.0, 2.0, -3.0], [0.0, 0.0, 0.0]] {
            let f = nq.value(&x);
            assert!((c.evaluate(&x) - f).abs() <= 1e-9 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn sdpa_blocks_and_lmi() {
        let p = ConstructionParams::default();
        let s = build_theorem1(&"0,2,3".parse().unwrap(), &p);
        let text = export_sdpa(&s);
        let parsed = parse_sdpa(&text).unwrap();
        assert_eq!(parsed.variables, 3);
        assert_eq!(parsed.block_sizes, vec![4, 2]);
        let quads = s.numeric();
        for x in [
            [0.0, 0.0, 0.0],
            [0.5, 0.5, 0.5],
            [0.0, 0.0, 0.95],
            [1.1, 0.0, 0.0],
        ] {
            for (b, q) in quads.iter().enumerate() {
                let min_eig = parsed.lmi_block(b, &x).symmetric_eigenvalues().min();
                assert_eq!(min_eig >= -1e-12, q.value(&x) <= 0.0, "x={x:?} block {b}");
            }
        }
    }

    #[test]
    fn empty_system_has_no_blocks() {
        let parsed = parse_sdpa(&export_sdpa(&QuadraticSystem::empty(2))).unwrap();
        assert!(parsed.block_sizes.is_empty());
        assert!(parse_sdpa("2\n1\n3\n0 0\n0 1 4 1 1.0\n").is_err());
    }
}
