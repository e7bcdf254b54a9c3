//! Dense complex linear algebra over truncated transmon ladders.
//!
//! Level labels are fixed everywhere: `g, e, f, h` are indices `0, 1, 2, 3`.
//! Composite systems are ordered left to right as they appear in `dims`, so the
//! basis index of `|l⟩⊗|m⟩⊗|s⟩` with `dims = [4, 4, 4]` is `16 l + 4 m + s`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default tolerance for exact-equality style comparisons of complex entries.
pub const EQ_TOL: f64 = 1e-10;
/// Default tolerance on state normalization.
pub const NORM_TOL: f64 = 1e-8;

/// Transmon level labels.
pub mod level {
    pub const G: usize = 0;
    pub const E: usize = 1;
    pub const F: usize = 2;
    pub const H: usize = 3;

    pub const LABELS: [char; 4] = ['g', 'e', 'f', 'h'];

    /// Parse a level label (`g`, `e`, `f`, `h`).
    pub fn from_char(c: char) -> Option<usize> {
        LABELS.iter().position(|&l| l == c)
    }
}

/// Flat basis index of a product state with per-subsystem levels `labels`.
pub fn basis_index(dims: &[usize], labels: &[usize]) -> Result<usize> {
    if dims.len() != labels.len() {
        return Err(Error::InvalidDimension(format!(
            "{} labels for {} subsystems",
            labels.len(),
            dims.len()
        )));
    }
    let mut index = 0;
    for (&d, &l) in dims.iter().zip(labels) {
        if l >= d {
            return Err(Error::InvalidDimension(format!("level {l} outside {d}-level subsystem")));
        }
        index = index * d + l;
    }
    Ok(index)
}

/// Parse a product-state label such as `"fgg"` into a basis index.
pub fn label_index(dims: &[usize], label: &str) -> Result<usize> {
    let labels = label
        .chars()
        .map(|c| level::from_char(c).ok_or_else(|| Error::InvalidParameter(format!("unknown level `{c}` in `{label}`"))))
        .collect::<Result<Vec<_>>>()?;
    basis_index(dims, &labels)
}

fn check_dims(n: usize, dims: &[usize]) -> Result<()> {
    let product: usize = dims.iter().product();
    if dims.is_empty() || product != n {
        return Err(Error::InvalidDimension(format!("dims {dims:?} do not multiply to {n}")));
    }
    Ok(())
}

/// A linear operator on a (possibly composite) Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
    dims: Vec<usize>,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dims(matrix.nrows(), &dims)?;
        Ok(Self { matrix, dims })
    }

    /// Wrap a square matrix as an operator on a single subsystem.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, vec![n])
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self { matrix: DMatrix::identity(n, n), dims: dims.to_vec() }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self { matrix: DMatrix::zeros(n, n), dims: dims.to_vec() }
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| if i == j { C64::from(values[i]) } else { ZERO });
        Self { matrix, dims: vec![n] }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), dims: self.dims.clone() }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { matrix: &self.matrix * factor, dims: self.dims.clone() }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_conforming(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, dims: self.dims.clone() })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.check_conforming(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, dims: self.dims.clone() })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_conforming(other)?;
        Ok(Self { matrix: &self.matrix * &other.matrix, dims: self.dims.clone() })
    }

    pub fn apply(&self, state: &StateVector) -> Result<DVector<C64>> {
        if state.len() != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "operator of dimension {} applied to state of length {}",
                self.dim(),
                state.len()
            )));
        }
        Ok(&self.matrix * state.amplitudes())
    }

    fn check_conforming(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDimension(format!(
                "operators of dimension {} and {} do not conform",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// Largest elementwise |A - A†|.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Operator norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        self.matrix.singular_values().max()
    }

    /// Lift an operator on subsystem `position` into the product space `dims`.
    pub fn embed(&self, position: usize, dims: &[usize]) -> Result<Self> {
        if position >= dims.len() || dims[position] != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "cannot embed {}-level operator at slot {position} of {dims:?}",
                self.dim()
            )));
        }
        let mut out: Option<Operator> = None;
        for (slot, &d) in dims.iter().enumerate() {
            let factor = if slot == position { self.clone() } else { Operator::identity(&[d]) };
            out = Some(match out {
                None => factor,
                Some(acc) => tensor(&acc, &factor),
            });
        }
        Ok(out.expect("dims is non-empty"))
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Ladder lowering operator with `√m` at `(m-1, m)`.
pub fn annihilation_op(levels: usize) -> Result<Operator> {
    if levels < 2 {
        return Err(Error::InvalidDimension(format!("annihilation operator needs at least 2 levels, got {levels}")));
    }
    let matrix = DMatrix::from_fn(levels, levels, |i, j| {
        if j == i + 1 {
            C64::from((j as f64).sqrt())
        } else {
            ZERO
        }
    });
    Ok(Operator { matrix, dims: vec![levels] })
}

/// `a†a`, diagonal `(0, 1, ..., levels-1)`.
pub fn number_op(levels: usize) -> Result<Operator> {
    let a = annihilation_op(levels)?;
    a.dagger().mul(&a)
}

/// Kronecker product. The result's dims are the concatenation of the operands'.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let matrix = a.matrix.kronecker(&b.matrix);
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator { matrix, dims }
}

pub fn dagger(a: &Operator) -> Operator {
    a.dagger()
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.mul(b)?.sub(&b.mul(a)?)
}

/// Anything an observable can be evaluated on.
pub trait QuantumState {
    fn dim(&self) -> usize;
    fn expectation_of(&self, op: &Operator) -> Result<C64>;
}

/// `⟨A⟩` on a pure or mixed state.
pub fn expectation<S: QuantumState + ?Sized>(op: &Operator, state: &S) -> Result<C64> {
    state.expectation_of(op)
}

/// A pure state over a truncated product space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    dims: Vec<usize>,
}

impl StateVector {
    /// Checked constructor: the amplitudes must already be normalized.
    pub fn new(amplitudes: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(amplitudes.len(), &dims)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Normalizing constructor.
    pub fn normalized(amplitudes: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(amplitudes.len(), &dims)?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self { amplitudes: amplitudes / C64::from(norm), dims })
    }

    pub(crate) fn from_raw(amplitudes: DVector<C64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(amplitudes.len(), dims.iter().product::<usize>());
        Self { amplitudes, dims }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dims: &[usize], index: usize) -> Result<Self> {
        let n: usize = dims.iter().product();
        if index >= n {
            return Err(Error::InvalidDimension(format!("basis index {index} outside dimension {n}")));
        }
        let mut amplitudes = DVector::zeros(n);
        amplitudes[index] = ONE;
        Ok(Self { amplitudes, dims: dims.to_vec() })
    }

    /// Product basis state from a label such as `"g"` or `"fgg"`.
    pub fn from_label(dims: &[usize], label: &str) -> Result<Self> {
        Self::basis(dims, label_index(dims, label)?)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.len() != other.len() {
            return Err(Error::InvalidDimension(format!(
                "inner product of states with lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let matrix = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { matrix, dims: self.dims.clone() }
    }

    /// Multiply by a global phase factor.
    pub fn with_phase(&self, phase: f64) -> Self {
        Self { amplitudes: &self.amplitudes * C64::from_polar(1.0, phase), dims: self.dims.clone() }
    }
}

impl QuantumState for StateVector {
    fn dim(&self) -> usize {
        self.len()
    }

    fn expectation_of(&self, op: &Operator) -> Result<C64> {
        let applied = op.apply(self)?;
        Ok(self.amplitudes.dotc(&applied))
    }
}

/// A mixed state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Checked constructor enforcing Hermiticity, unit trace and positivity.
    pub fn new(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidDimension("density matrix must be square".into()));
        }
        check_dims(matrix.nrows(), &dims)?;
        let rho = Self { matrix, dims };
        let herm = max_abs_diff(&rho.matrix, &rho.matrix.adjoint());
        if herm > EQ_TOL {
            return Err(Error::InvalidParameter(format!("density matrix not Hermitian (error {herm:e})")));
        }
        let trace = rho.trace();
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("density matrix trace {trace} differs from 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -NORM_TOL {
            return Err(Error::InvalidParameter(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(matrix: DMatrix<C64>, dims: Vec<usize>) -> Self {
        Self { matrix, dims }
    }

    pub fn from_pure(state: &StateVector) -> Self {
        state.to_density()
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        let matrix = DMatrix::identity(n, n) * C64::from(1.0 / n as f64);
        Self { matrix, dims: dims.to_vec() }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().min()
    }

    /// `⟨ψ|ρ|ψ⟩` (complex; the imaginary part vanishes for Hermitian ρ).
    pub fn overlap(&self, state: &StateVector) -> Result<C64> {
        if state.len() != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "state of length {} against density matrix of dimension {}",
                state.len(),
                self.dim()
            )));
        }
        let v = state.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)))
    }

    /// Convex combination `w ρ₁ + (1-w) ρ₂`.
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDimension("mixing density matrices of different dimension".into()));
        }
        let matrix = &self.matrix * C64::from(weight) + &other.matrix * C64::from(1.0 - weight);
        Ok(Self { matrix, dims: self.dims.clone() })
    }

    /// Trace distance `½‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDimension("trace distance of different dimensions".into()));
        }
        let diff = &self.matrix - &other.matrix;
        let herm = (&diff + diff.adjoint()) * C64::from(0.5);
        Ok(0.5 * herm.symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>())
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn expectation_of(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "operator of dimension {} on density matrix of dimension {}",
                op.dim(),
                self.dim()
            )));
        }
        Ok((&self.matrix * op.matrix()).trace())
    }
}

/// Raw column-major kernels used by the integrators.
pub(crate) mod kernel {
    use super::{C64, ZERO};

    /// Column-compressed view of a dense square matrix, skipping exact zeros.
    #[derive(Default)]
    pub struct SparseCols {
        pub n: usize,
        starts: Vec<usize>,
        rows: Vec<usize>,
        values: Vec<C64>,
    }

    impl SparseCols {
        pub fn with_capacity(n: usize) -> Self {
            Self { n, starts: Vec::with_capacity(n + 1), rows: Vec::with_capacity(n * n), values: Vec::with_capacity(n * n) }
        }

        /// Refill from a column-major dense buffer.
        pub fn refill(&mut self, dense: &[C64], n: usize) {
            self.n = n;
            self.starts.clear();
            self.rows.clear();
            self.values.clear();
            for col in 0..n {
                self.starts.push(self.rows.len());
                for row in 0..n {
                    let v = dense[col * n + row];
                    if v != ZERO {
                        self.rows.push(row);
                        self.values.push(v);
                    }
                }
            }
            self.starts.push(self.rows.len());
        }

        #[cfg(test)]
        pub fn from_dense(dense: &[C64], n: usize) -> Self {
            let mut out = Self::with_capacity(n);
            out.refill(dense, n);
            out
        }

        #[inline]
        fn column(&self, k: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
            let (a, b) = (self.starts[k], self.starts[k + 1]);
            self.rows[a..b].iter().copied().zip(self.values[a..b].iter().copied())
        }

        /// `out = factor * self * x` for a column-major `n x m` block `x`.
        pub fn mul_into(&self, x: &[C64], m: usize, factor: C64, out: &mut [C64]) {
            let n = self.n;
            out[..n * m].iter_mut().for_each(|v| *v = ZERO);
            for j in 0..m {
                let xcol = &x[j * n..(j + 1) * n];
                let ocol = &mut out[j * n..(j + 1) * n];
                for (k, &xk) in xcol.iter().enumerate() {
                    if xk == ZERO {
                        continue;
                    }
                    let s = xk * factor;
                    for (row, v) in self.column(k) {
                        ocol[row] += v * s;
                    }
                }
            }
        }
    }
}
