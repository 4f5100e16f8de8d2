//! Exact dense linear algebra over the rationals.
//!
//! Everything here works on [`BigRational`] entries with no rounding. Rank is
//! computed by fraction-free (Bareiss) elimination on integer-scaled rows;
//! null spaces and particular solutions come from a reduced row echelon form.
//! The PSD test is a symmetrically pivoted LDLᵀ that returns its factor, so a
//! positive answer carries a certificate that can be re-multiplied.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use num::{BigInt, BigRational, FromPrimitive, Integer, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational scalar, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Dense exact vector.
pub type RVector = Vec<Rational>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("ragged matrix rows")]
    Ragged,
    #[error("invalid rational literal {0:?}")]
    ParseRational(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Only reachable for magnitudes beyond f64 range.
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact conversion of a finite float (every finite f64 is dyadic).
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_f64(x)
}

pub fn vec_to_f64(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

/// Parses `p/q`, a plain integer, or a finite decimal such as `-0.75`.
pub fn parse_rational(s: &str) -> Result<Rational, LinalgError> {
    let t = s.trim();
    let err = || LinalgError::ParseRational(s.to_string());
    if t.is_empty() {
        return Err(err());
    }
    if t.contains('/') {
        let q = Rational::from_str(t).map_err(|_| err())?;
        return Ok(q);
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let num = BigInt::from_str(&digits).map_err(|_| err())?;
        let den = num::pow(BigInt::from(10), frac.len());
        let q = Rational::new(num, den);
        return Ok(if neg { -q } else { q });
    }
    BigInt::from_str(t)
        .map(Rational::from_integer)
        .map_err(|_| err())
}

/// `p/q` with the denominator dropped when it is one.
pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

pub fn dot(u: &[Rational], v: &[Rational]) -> Rational {
    u.iter()
        .zip(v)
        .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn zero_vec(n: usize) -> RVector {
    vec![Rational::zero(); n]
}

pub fn unit_vec(n: usize, i: usize) -> RVector {
    let mut v = zero_vec(n);
    v[i] = Rational::one();
    v
}

/// Row-major dense rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn diagonal(diag: &[Rational]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, d.clone());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(LinalgError::Ragged);
        }
        Ok(RMatrix {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from small integers, mostly for tests.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&x| int(x)).collect())
            .collect();
        Self::from_rows(rows).expect("ragged literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| vec_to_f64(self.row(i))).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &RMatrix) -> Result<RMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<RVector, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[Rational]) -> Result<Rational, LinalgError> {
        let mx = self.mul_vec(x)?;
        Ok(dot(&mx, x))
    }

    /// Builds the matrix whose rows are the given vectors.
    pub fn from_vectors(ncols: usize, vectors: &[RVector]) -> Result<Self, LinalgError> {
        if let Some(bad) = vectors.iter().find(|v| v.len() != ncols) {
            return Err(LinalgError::DimensionMismatch {
                expected: ncols,
                found: bad.len(),
            });
        }
        Ok(RMatrix {
            rows: vectors.len(),
            cols: ncols,
            data: vectors.iter().flatten().cloned().collect(),
        })
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        self.get(i, j)
    }
}

impl fmt::Display for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(format_rational).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()
}

/// Rank over the rationals by Bareiss elimination.
///
/// Rows are first scaled to integers; every intermediate entry is then a minor
/// of the scaled matrix, so each division by the previous pivot is exact.
pub fn rank(m: &RMatrix) -> usize {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows()).map(|i| integer_row(m.row(i))).collect();
    let ncols = m.cols();
    let mut prev = BigInt::one();
    let mut r = 0;
    for col in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let (top, bottom) = rows.split_at_mut(r + 1);
        let pivot_row = &top[r];
        for row in bottom.iter_mut() {
            for j in col + 1..ncols {
                let v = &pivot_row[col] * &row[j] - &row[col] * &pivot_row[j];
                let (q, rem) = v.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                row[j] = q;
            }
            row[col] = BigInt::zero();
        }
        prev = rows[r][col].clone();
        r += 1;
    }
    r
}

/// Reduced row echelon form; returns the nonzero rows and their pivot columns.
fn rref(mut rows: Vec<RVector>, ncols: usize) -> (Vec<RVector>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][col].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x = &*x - &factor * p;
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

/// Basis of `{x : M x = 0}`; one vector per free column of the echelon form.
pub fn null_space_basis(m: &RMatrix) -> Subspace {
    let n = m.cols();
    let (reduced, pivots) = rref(m.to_rows(), n);
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let basis = (0..n)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = unit_vec(n, free);
            for (row, &pc) in reduced.iter().zip(&pivots) {
                v[pc] = -row[free].clone();
            }
            v
        })
        .collect();
    Subspace {
        ambient_dim: n,
        basis,
    }
}

/// Some `x` with `M x = b`, or `None` when the system is inconsistent.
pub fn solve(m: &RMatrix, b: &[Rational]) -> Result<Option<RVector>, LinalgError> {
    if b.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows(),
            found: b.len(),
        });
    }
    let n = m.cols();
    let augmented: Vec<RVector> = (0..m.rows())
        .map(|i| {
            let mut row = m.row(i).to_vec();
            row.push(b[i].clone());
            row
        })
        .collect();
    let (reduced, pivots) = rref(augmented, n + 1);
    if pivots.last() == Some(&n) {
        return Ok(None);
    }
    let mut x = zero_vec(n);
    for (row, &pc) in reduced.iter().zip(&pivots) {
        x[pc] = row[n].clone();
    }
    Ok(Some(x))
}

/// A linear subspace of `Q^n` given by an independent basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<RVector>,
}

impl Subspace {
    pub fn full(n: usize) -> Self {
        Subspace {
            ambient_dim: n,
            basis: (0..n).map(|i| unit_vec(n, i)).collect(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Subspace {
            ambient_dim: n,
            basis: Vec::new(),
        }
    }

    /// Span of arbitrary (possibly dependent) vectors.
    pub fn span(n: usize, vectors: &[RVector]) -> Result<Self, LinalgError> {
        let m = RMatrix::from_vectors(n, vectors)?;
        let (reduced, _) = rref(m.to_rows(), n);
        Ok(Subspace {
            ambient_dim: n,
            basis: reduced,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[RVector] {
        &self.basis
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        if v.len() != self.ambient_dim {
            return false;
        }
        let mut vectors = self.basis.clone();
        vectors.push(v.to_vec());
        let m = RMatrix::from_vectors(self.ambient_dim, &vectors).expect("lengths checked");
        rank(&m) == self.dim()
    }

    pub fn same_span(&self, other: &Subspace) -> bool {
        self.ambient_dim == other.ambient_dim
            && self.dim() == other.dim()
            && other.basis.iter().all(|v| self.contains(v))
    }

    pub fn orthogonal_complement(&self) -> Subspace {
        let m = RMatrix::from_vectors(self.ambient_dim, &self.basis).expect("lengths checked");
        null_space_basis(&m)
    }
}

/// Exact intersection; an empty list yields the whole of `Q^ambient_dim`.
pub fn intersect_subspaces(
    ambient_dim: usize,
    spaces: &[Subspace],
) -> Result<Subspace, LinalgError> {
    if let Some(bad) = spaces.iter().find(|s| s.ambient_dim != ambient_dim) {
        return Err(LinalgError::DimensionMismatch {
            expected: ambient_dim,
            found: bad.ambient_dim,
        });
    }
    let normals: Vec<RVector> = spaces
        .iter()
        .flat_map(|s| s.orthogonal_complement().basis)
        .collect();
    let m = RMatrix::from_vectors(ambient_dim, &normals)?;
    Ok(null_space_basis(&m))
}

/// Orthogonal projection of `v` onto `s`, via the normal equations `BᵀB c = Bᵀv`.
pub fn project_onto(v: &[Rational], s: &Subspace) -> Result<RVector, LinalgError> {
    if v.len() != s.ambient_dim {
        return Err(LinalgError::DimensionMismatch {
            expected: s.ambient_dim,
            found: v.len(),
        });
    }
    let k = s.dim();
    if k == 0 {
        return Ok(zero_vec(v.len()));
    }
    let mut gram = RMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram.set(i, j, dot(&s.basis[i], &s.basis[j]));
        }
    }
    let rhs: RVector = s.basis.iter().map(|b| dot(b, v)).collect();
    let coeffs = solve(&gram, &rhs)?.expect("Gram matrix of a basis is nonsingular");
    let mut out = zero_vec(v.len());
    for (c, b) in coeffs.iter().zip(&s.basis) {
        for (o, x) in out.iter_mut().zip(b) {
            *o = &*o + c * x;
        }
    }
    Ok(out)
}

/// `P M Pᵀ = L D Lᵀ` with `perm[k]` the original index of the k-th pivot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdltFactor {
    pub perm: Vec<usize>,
    pub lower: RMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LdltReport {
    pub is_psd: bool,
    /// Diagonal of `D` in pivot order (truncated where the test failed).
    pub pivots: Vec<Rational>,
    /// Present exactly when `is_psd`.
    pub factor: Option<LdltFactor>,
}

/// PSD test by symmetric (diagonal) pivoting.
///
/// At each step the largest remaining diagonal entry is the pivot. A negative
/// diagonal entry means not PSD; when every remaining diagonal entry is zero the
/// remaining Schur complement must vanish entirely, otherwise some 2×2 principal
/// block is indefinite.
pub fn psd_ldlt(m: &RMatrix) -> Result<LdltReport, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_symmetric() {
        return Err(LinalgError::NotSymmetric);
    }
    let n = m.rows();
    let mut schur = m.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    let mut pivots = Vec::with_capacity(n);
    // multipliers[i][k]: entry for original row i in column k of L.
    let mut multipliers = vec![vec![Rational::zero(); n]; n];
    let fail = |pivots: Vec<Rational>| LdltReport {
        is_psd: false,
        pivots,
        factor: None,
    };

    while !remaining.is_empty() {
        if remaining.iter().any(|&i| schur.get(i, i).is_negative()) {
            return Ok(fail(pivots));
        }
        let &best = remaining
            .iter()
            .max_by(|&&a, &&b| schur.get(a, a).cmp(schur.get(b, b)).then_with(|| b.cmp(&a)))
            .expect("nonempty");
        let d = schur.get(best, best).clone();
        if d.is_zero() {
            let all_zero = remaining
                .iter()
                .all(|&i| remaining.iter().all(|&j| schur.get(i, j).is_zero()));
            if !all_zero {
                return Ok(fail(pivots));
            }
            for &i in &remaining {
                perm.push(i);
                pivots.push(Rational::zero());
            }
            break;
        }
        let step = perm.len();
        remaining.retain(|&i| i != best);
        for &i in &remaining {
            let l = schur.get(i, best) / &d;
            multipliers[i][step] = l.clone();
            for &j in &remaining {
                let v = schur.get(i, j) - &l * schur.get(best, j);
                schur.set(i, j, v);
            }
        }
        perm.push(best);
        pivots.push(d);
    }

    let mut lower = RMatrix::identity(n);
    for a in 0..n {
        for (k, m) in multipliers[perm[a]].iter().enumerate().take(a) {
            lower.set(a, k, m.clone());
        }
    }
    Ok(LdltReport {
        is_psd: true,
        pivots,
        factor: Some(LdltFactor { perm, lower }),
    })
}
