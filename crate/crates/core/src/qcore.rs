//! Dense complex linear algebra over small composite Hilbert spaces.
//!
//! Every state and operator carries a shared [`HilbertSpace`]; operations
//! between objects living on different spaces are rejected.
//!
//! Basis ordering: subsystems appear in declaration order with the first
//! subsystem most significant (standard Kronecker order), and the levels of
//! each subsystem are numbered from 0. For a space declared as
//! `[("atom1", 3), ("atom2", 3)]` the basis index of `|j k>` is `3 * j + k`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Default tolerance for Hermiticity, positivity and trace checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),
    #[error("subsystem `{0}` has zero dimension")]
    ZeroDimension(String),
    #[error("a Hilbert space needs at least one subsystem")]
    EmptySpace,
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("level {level} out of range for subsystem of dimension {dim}")]
    LevelOutOfRange { level: usize, dim: usize },
    #[error("non-finite entry")]
    NonFinite,
    #[error("squared norm {0} outside [0, 1 + tol]")]
    NormOutOfRange(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("trace {0} outside [0, 1 + tol]")]
    TraceOutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, QError>;

/// Ordered list of labelled subsystems.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
    labels: Vec<String>,
}

/// Shared handle to a Hilbert space.
pub type Space = Arc<HilbertSpace>;

impl HilbertSpace {
    pub fn new(subsystems: &[(&str, usize)]) -> Result<Space> {
        if subsystems.is_empty() {
            return Err(QError::EmptySpace);
        }
        let mut labels: Vec<String> = Vec::with_capacity(subsystems.len());
        let mut dims = Vec::with_capacity(subsystems.len());
        for &(label, dim) in subsystems {
            if labels.iter().any(|l| l == label) {
                return Err(QError::DuplicateLabel(label.to_string()));
            }
            if dim == 0 {
                return Err(QError::ZeroDimension(label.to_string()));
            }
            labels.push(label.to_string());
            dims.push(dim);
        }
        Ok(Arc::new(Self { dims, labels }))
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Concatenation of two spaces with disjoint labels.
    pub fn tensor(&self, other: &HilbertSpace) -> Result<Space> {
        if let Some(dup) = other.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(QError::DuplicateLabel(dup.clone()));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Arc::new(Self { dims, labels }))
    }

    /// Basis index of a product state given one level per subsystem.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(QError::LengthMismatch {
                expected: self.dims.len(),
                actual: levels.len(),
            });
        }
        let mut idx = 0;
        for (&level, &dim) in levels.iter().zip(&self.dims) {
            if level >= dim {
                return Err(QError::LevelOutOfRange { level, dim });
            }
            idx = idx * dim + level;
        }
        Ok(idx)
    }

    /// Inverse of [`HilbertSpace::index_of`].
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.dims.len()];
        for (slot, &dim) in levels.iter_mut().zip(&self.dims).rev() {
            *slot = index % dim;
            index /= dim;
        }
        levels
    }

    /// Human-readable ket label such as `|0,2>`.
    pub fn ket_label(&self, index: usize) -> String {
        let levels: Vec<String> = self.levels_of(index).iter().map(|l| l.to_string()).collect();
        format!("|{}>", levels.join(","))
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .labels
            .iter()
            .zip(&self.dims)
            .map(|(l, d)| format!("{l}[{d}]"))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

fn check_same(a: &Space, b: &Space) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(QError::SpaceMismatch {
            left: a.to_string(),
            right: b.to_string(),
        })
    }
}

fn check_finite(entries: &[C64]) -> Result<()> {
    if entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(QError::NonFinite)
    }
}

fn kron(a: &[C64], an: usize, b: &[C64], bn: usize) -> Vec<C64> {
    let n = an * bn;
    let mut out = vec![ZERO; n * n];
    for ar in 0..an {
        for ac in 0..an {
            let x = a[ar * an + ac];
            if x == ZERO {
                continue;
            }
            for br in 0..bn {
                for bc in 0..bn {
                    out[(ar * bn + br) * n + ac * bn + bc] = x * b[br * bn + bc];
                }
            }
        }
    }
    out
}

pub(crate) fn matmul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; n * n];
    matmul_into(a, b, n, &mut out);
    out
}

pub(crate) fn matmul_into(a: &[C64], b: &[C64], n: usize, out: &mut [C64]) {
    out.iter_mut().for_each(|z| *z = ZERO);
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == ZERO {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &y) in dst.iter_mut().zip(row) {
                *d += x * y;
            }
        }
    }
}

pub(crate) fn adjoint_of(a: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

fn hermitian_eigenvalues(entries: &[C64], n: usize) -> Vec<f64> {
    // Symmetrize first so round-off asymmetry does not leak into the solver.
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (entries[i * n + j] + entries[j * n + i].conj()));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Eigenvalues (ascending) and matching unit eigenvectors of a Hermitian
/// matrix.
pub(crate) fn hermitian_eigen(entries: &[C64], n: usize) -> Vec<(f64, Vec<C64>)> {
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (entries[i * n + j] + entries[j * n + i].conj()));
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs
}

/// Possibly unnormalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: Space,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(space: Space, amps: Vec<C64>) -> Result<Self> {
        Self::new_with_tolerance(space, amps, DEFAULT_TOLERANCE)
    }

    pub fn new_with_tolerance(space: Space, amps: Vec<C64>, tol: f64) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(QError::LengthMismatch {
                expected: space.dim(),
                actual: amps.len(),
            });
        }
        check_finite(&amps)?;
        let n2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if n2 > 1.0 + tol {
            return Err(QError::NormOutOfRange(n2));
        }
        Ok(Self { space, amps })
    }

    /// Constructor for internal propagation results whose norm is controlled
    /// by the caller.
    pub(crate) fn from_raw(space: Space, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), space.dim());
        Self { space, amps }
    }

    pub fn zero(space: Space) -> Self {
        let n = space.dim();
        Self { space, amps: vec![ZERO; n] }
    }

    pub fn basis(space: Space, index: usize) -> Result<Self> {
        let n = space.dim();
        if index >= n {
            return Err(QError::LevelOutOfRange { level: index, dim: n });
        }
        let mut amps = vec![ZERO; n];
        amps[index] = ONE;
        Ok(Self { space, amps })
    }

    /// Product basis state with one level per subsystem.
    pub fn from_levels(space: Space, levels: &[usize]) -> Result<Self> {
        let idx = space.index_of(levels)?;
        Self::basis(space, idx)
    }

    /// Normalized superposition `sum_k c_k |levels_k>`.
    pub fn superposition(space: Space, terms: &[(C64, &[usize])]) -> Result<Self> {
        let mut amps = vec![ZERO; space.dim()];
        for (c, levels) in terms {
            amps[space.index_of(levels)?] += *c;
        }
        let n2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if n2 > 0.0 {
            let s = 1.0 / n2.sqrt();
            amps.iter_mut().for_each(|z| *z *= s);
        }
        Self::new(space, amps)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, levels: &[usize]) -> Result<C64> {
        Ok(self.amps[self.space.index_of(levels)?])
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Unit-norm copy; a zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n2 = self.norm_squared();
        if n2 == 0.0 {
            return self.clone();
        }
        let s = 1.0 / n2.sqrt();
        Self {
            space: self.space.clone(),
            amps: self.amps.iter().map(|z| z * s).collect(),
        }
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_same(&self.space, &other.space)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2` for normalized inputs.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            space: self.space.clone(),
            amps: self.amps.iter().map(|z| z * c).collect(),
        }
    }

    /// `|self><self|`
    pub fn projector(&self) -> DensityMatrix {
        let n = self.dim();
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix { space: self.space.clone(), entries }
    }
}

/// Square operator on a Hilbert space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Space,
    entries: Vec<C64>,
}

impl Operator {
    pub fn new(space: Space, entries: Vec<C64>) -> Result<Self> {
        let n = space.dim();
        if entries.len() != n * n {
            return Err(QError::LengthMismatch {
                expected: n * n,
                actual: entries.len(),
            });
        }
        check_finite(&entries)?;
        Ok(Self { space, entries })
    }

    pub fn zeros(space: Space) -> Self {
        let n = space.dim();
        Self { space, entries: vec![ZERO; n * n] }
    }

    pub fn identity(space: Space) -> Self {
        let n = space.dim();
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            entries[i * n + i] = ONE;
        }
        Self { space, entries }
    }

    pub fn from_fn(space: Space, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let n = space.dim();
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self::new(space, entries)
    }

    /// `|row><col|` in the full basis.
    pub fn ket_bra(space: Space, row: usize, col: usize) -> Result<Self> {
        let n = space.dim();
        if row >= n || col >= n {
            return Err(QError::LevelOutOfRange { level: row.max(col), dim: n });
        }
        let mut op = Self::zeros(space);
        op.entries[row * n + col] = ONE;
        Ok(op)
    }

    /// Operator acting as `local` (row-major, `d x d`) on the named
    /// subsystem and as the identity elsewhere.
    pub fn local(space: Space, label: &str, local: &[C64]) -> Result<Self> {
        let pos = space
            .position(label)
            .ok_or_else(|| QError::UnknownSubsystem(label.to_string()))?;
        let d = space.dims()[pos];
        if local.len() != d * d {
            return Err(QError::LengthMismatch {
                expected: d * d,
                actual: local.len(),
            });
        }
        let n = space.dim();
        let mut entries = vec![ZERO; n * n];
        for col in 0..n {
            let levels = space.levels_of(col);
            let lc = levels[pos];
            for lr in 0..d {
                let x = local[lr * d + lc];
                if x == ZERO {
                    continue;
                }
                let mut out = levels.clone();
                out[pos] = lr;
                let row = space.index_of(&out)?;
                entries[row * n + col] += x;
            }
        }
        Self::new(space, entries)
    }

    /// `|to><from|` on one subsystem, identity elsewhere.
    pub fn local_transition(space: Space, label: &str, to: usize, from: usize) -> Result<Self> {
        let pos = space
            .position(label)
            .ok_or_else(|| QError::UnknownSubsystem(label.to_string()))?;
        let d = space.dims()[pos];
        if to >= d || from >= d {
            return Err(QError::LevelOutOfRange { level: to.max(from), dim: d });
        }
        let mut local = vec![ZERO; d * d];
        local[to * d + from] = ONE;
        Self::local(space, label, &local)
    }

    /// Truncated bosonic lowering operator on one subsystem.
    pub fn lowering(space: Space, label: &str) -> Result<Self> {
        let pos = space
            .position(label)
            .ok_or_else(|| QError::UnknownSubsystem(label.to_string()))?;
        let d = space.dims()[pos];
        let mut local = vec![ZERO; d * d];
        for n in 1..d {
            local[(n - 1) * d + n] = C64::new((n as f64).sqrt(), 0.0);
        }
        Self::local(space, label, &local)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            entries: adjoint_of(&self.entries, self.dim()),
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        check_same(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            entries: matmul(&self.entries, &other.entries, self.dim()),
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        check_same(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        check_same(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            space: self.space.clone(),
            entries: self.entries.iter().map(|z| z * c).collect(),
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_same(&self.space, &psi.space)?;
        let n = self.dim();
        let amps = (0..n)
            .map(|i| {
                self.entries[i * n..(i + 1) * n]
                    .iter()
                    .zip(&psi.amps)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(StateVector { space: self.space.clone(), amps })
    }

    /// `<psi|self|psi>`
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        psi.inner(&self.apply(psi)?)
    }

    /// `(A - A^dag) / 2`
    pub fn anti_hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self {
            space: self.space.clone(),
            entries: self.entries.iter().zip(&adj.entries).map(|(a, b)| 0.5 * (a - b)).collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).map(|d| d.max_abs() <= tol).unwrap_or(false)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries, self.dim())
    }
}

/// Possibly unnormalized density matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian, positive semidefinite and trace in
    /// `[0, 1 + tol]`.
    pub fn new(space: Space, entries: Vec<C64>) -> Result<Self> {
        Self::new_with_tolerance(space, entries, DEFAULT_TOLERANCE)
    }

    pub fn new_with_tolerance(space: Space, entries: Vec<C64>, tol: f64) -> Result<Self> {
        let n = space.dim();
        if entries.len() != n * n {
            return Err(QError::LengthMismatch {
                expected: n * n,
                actual: entries.len(),
            });
        }
        check_finite(&entries)?;
        let rho = Self { space, entries };
        rho.validate(tol)?;
        Ok(rho)
    }

    pub(crate) fn from_raw(space: Space, entries: Vec<C64>) -> Self {
        debug_assert_eq!(entries.len(), space.dim() * space.dim());
        Self { space, entries }
    }

    pub fn zero(space: Space) -> Self {
        let n = space.dim();
        Self { space, entries: vec![ZERO; n * n] }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_violation();
        if herm > tol {
            return Err(QError::NotHermitian(herm));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(QError::NotPositive(min));
        }
        let tr = self.trace();
        if !(-tol..=1.0 + tol).contains(&tr) {
            return Err(QError::TraceOutOfRange(tr));
        }
        Ok(())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    /// Matrix element between two product basis states.
    pub fn element(&self, row: &[usize], col: &[usize]) -> Result<C64> {
        Ok(self.get(self.space.index_of(row)?, self.space.index_of(col)?))
    }

    pub fn trace(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|i| self.entries[i * n + i].re).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &DensityMatrix) -> Result<Self> {
        check_same(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    /// `A rho A^dag`
    pub fn sandwich(&self, a: &Operator) -> Result<Self> {
        check_same(&self.space, &a.space)?;
        let n = self.dim();
        let left = matmul(&a.entries, &self.entries, n);
        Ok(Self {
            space: self.space.clone(),
            entries: matmul(&left, &adjoint_of(&a.entries, n), n),
        })
    }

    /// `<psi|rho|psi>`
    pub fn expectation_in(&self, psi: &StateVector) -> Result<f64> {
        check_same(&self.space, &psi.space)?;
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += psi.amps[i].conj() * self.entries[i * n + j] * psi.amps[j];
            }
        }
        Ok(acc.re)
    }

    pub fn hermiticity_violation(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[i * n + j] - self.entries[j * n + i].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries, self.dim())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `||rho - sigma||_1 / 2`
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        check_same(&self.space, &other.space)?;
        let diff: Vec<C64> = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(0.5 * hermitian_eigenvalues(&diff, self.dim()).iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// Kronecker product of two objects living on label-disjoint spaces.
pub trait TensorProduct: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl TensorProduct for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(Self { space, amps })
    }
}

impl TensorProduct for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        let entries = kron(&self.entries, self.dim(), &other.entries, other.dim());
        Ok(Self { space, entries })
    }
}

impl TensorProduct for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        let entries = kron(&self.entries, self.dim(), &other.entries, other.dim());
        Ok(Self { space, entries })
    }
}

pub fn tensor_product<T: TensorProduct>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Matrix-vector product; no normalization is applied.
pub fn apply(op: &Operator, psi: &StateVector) -> Result<StateVector> {
    op.apply(psi)
}

pub fn trace(rho: &DensityMatrix) -> f64 {
    rho.trace()
}

pub fn norm_squared(psi: &StateVector) -> f64 {
    psi.norm_squared()
}
