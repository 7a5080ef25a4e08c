use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Square complex matrix stored by bands.
///
/// Row `i` keeps the entries of columns `i - lower ..= i + upper`; everything
/// outside the band is zero. Quadrature polynomials of degree `k` have
/// bandwidth `k`, so products and matrix-vector applications stay `O(D·k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    lower: usize,
    upper: usize,
    band: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self::with_band(dim, 0, 0)
    }

    fn with_band(dim: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(dim.saturating_sub(1));
        let upper = upper.min(dim.saturating_sub(1));
        let width = lower + upper + 1;
        Self { dim, lower, upper, band: vec![C64::new(0.0, 0.0); dim * width] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(dim, |_| C64::new(1.0, 0.0))
    }

    pub fn diagonal(dim: usize, f: impl Fn(usize) -> C64) -> Self {
        let mut op = Self::with_band(dim, 0, 0);
        for i in 0..dim {
            op.band[i] = f(i);
        }
        op
    }

    /// Operator whose only nonzero band is at column offset `offset`
    /// (`+1` is the first superdiagonal). `f(i)` gives the entry in row `i`.
    pub fn off_diagonal(dim: usize, offset: isize, f: impl Fn(usize) -> C64) -> Self {
        let (lower, upper) = if offset >= 0 { (0, offset as usize) } else { ((-offset) as usize, 0) };
        let mut op = Self::with_band(dim, lower, upper);
        for i in 0..dim {
            let j = i as isize + offset;
            if j >= 0 && (j as usize) < dim {
                op.set(i, j as usize, f(i));
            }
        }
        op
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let dim = m.nrows();
        let (mut lower, mut upper) = (0, 0);
        for i in 0..dim {
            for j in 0..dim {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    if i > j {
                        lower = lower.max(i - j);
                    } else {
                        upper = upper.max(j - i);
                    }
                }
            }
        }
        let mut op = Self::with_band(dim, lower, upper);
        for i in 0..dim {
            for j in i.saturating_sub(lower)..(i + upper + 1).min(dim) {
                op.set(i, j, m[(i, j)]);
            }
        }
        op
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in self.row_range(i) {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(lower, upper)` bandwidths.
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.dim)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j + self.lower < i || j > i + self.upper {
            return C64::new(0.0, 0.0);
        }
        self.band[i * self.width() + j + self.lower - i]
    }

    fn set(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(j + self.lower >= i && j <= i + self.upper);
        let w = self.width();
        self.band[i * w + j + self.lower - i] = v;
    }

    fn widened(&self, lower: usize, upper: usize) -> Self {
        let mut out = Self::with_band(self.dim, lower.max(self.lower), upper.max(self.upper));
        for i in 0..self.dim {
            for j in self.row_range(i) {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.band.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::with_band(self.dim, self.upper, self.lower);
        for i in 0..self.dim {
            for j in self.row_range(i) {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Matrix power by repeated banded multiplication; `pow(0)` is the identity.
    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.dim);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch in operator application");
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for j in self.row_range(i) {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Largest entrywise deviation from Hermiticity, `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in self.row_range(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.band.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_real(&self) -> bool {
        self.band.iter().all(|v| v.im == 0.0)
    }

    /// Largest entrywise difference to `other`, ignoring bandwidth layout.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        let lower = self.lower.max(other.lower);
        let upper = self.upper.max(other.upper);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i.saturating_sub(lower)..(i + upper + 1).min(self.dim) {
                worst = worst.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        worst
    }

    /// Same as [`max_abs_diff`](Self::max_abs_diff) restricted to the leading
    /// `k × k` block, away from the truncation edge.
    pub fn max_abs_diff_leading(&self, other: &Self, k: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..k.min(self.dim) {
            for j in 0..k.min(self.dim) {
                worst = worst.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        worst
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in operator sum");
        let mut out = self.widened(rhs.lower, rhs.upper);
        for i in 0..rhs.dim {
            for j in rhs.row_range(i) {
                let v = out.get(i, j) + rhs.get(i, j);
                out.set(i, j, v);
            }
        }
        out
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self + &(-rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in operator product");
        let dim = self.dim;
        let mut out = Operator::with_band(dim, self.lower + rhs.lower, self.upper + rhs.upper);
        for i in 0..dim {
            for k in self.row_range(i) {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in rhs.row_range(k) {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}
