//! Dense multi-mode bosonic states on a truncated Fock space.
//!
//! Amplitudes are indexed row-major over per-mode occupation numbers: the
//! first label is the most significant digit in base `cutoff + 1`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown mode label {0:?}")]
    UnknownMode(String),
    #[error(
        "truncation risk: |gamma|^2 + 3|gamma| + 3 = {required:.3} exceeds cutoff {cutoff}"
    )]
    TruncationRisk { required: f64, cutoff: usize },
    #[error("state norm {0} exceeds 1 + 1e-9")]
    NormTooLarge(f64),
    #[error("singular parameter: {0}")]
    SingularParameter(String),
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Labels, cutoff and index arithmetic shared by pure and mixed states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    labels: Vec<String>,
    cutoff: usize,
}

impl FockSpace {
    pub fn new<S: AsRef<str>>(labels: &[S], cutoff: usize) -> Result<Self, FockError> {
        if labels.is_empty() {
            return Err(FockError::InvalidArgument("at least one mode is required".into()));
        }
        if cutoff == 0 {
            return Err(FockError::InvalidArgument("cutoff must be at least 1".into()));
        }
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(FockError::InvalidArgument(format!("duplicate mode label {l:?}")));
            }
        }
        Ok(Self { labels, cutoff })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn mode_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of basis states per mode.
    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dimension(&self) -> usize {
        self.levels().pow(self.mode_count() as u32)
    }

    pub fn mode_index(&self, label: &str) -> Result<usize, FockError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| FockError::UnknownMode(label.to_string()))
    }

    /// Index step between neighbouring occupations of `mode`.
    pub fn stride(&self, mode: usize) -> usize {
        self.levels().pow((self.mode_count() - 1 - mode) as u32)
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.levels()
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.mode_count()).map(|m| self.occupation(index, m)).collect()
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize, FockError> {
        if occupations.len() != self.mode_count() {
            return Err(FockError::InvalidArgument(format!(
                "expected {} occupations, got {}",
                self.mode_count(),
                occupations.len()
            )));
        }
        let mut idx = 0;
        for &n in occupations {
            if n > self.cutoff {
                return Err(FockError::InvalidArgument(format!(
                    "occupation {n} above cutoff {}",
                    self.cutoff
                )));
            }
            idx = idx * self.levels() + n;
        }
        Ok(idx)
    }

    /// Splits the space into kept and traced parts and returns, for every
    /// (kept, traced) pair, the full-space index.
    fn split(&self, keep: &[&str]) -> Result<(FockSpace, Vec<Vec<usize>>), FockError> {
        if keep.is_empty() {
            return Err(FockError::InvalidArgument("keep list is empty".into()));
        }
        let mut kept_modes = Vec::with_capacity(keep.len());
        for l in keep {
            let m = self.mode_index(l)?;
            if kept_modes.contains(&m) {
                return Err(FockError::InvalidArgument(format!("mode {l:?} listed twice")));
            }
            kept_modes.push(m);
        }
        let traced: Vec<usize> = (0..self.mode_count()).filter(|m| !kept_modes.contains(m)).collect();
        let kept_space = FockSpace::new(keep, self.cutoff)?;
        let d = self.levels();
        let dk = d.pow(kept_modes.len() as u32);
        let dt = d.pow(traced.len() as u32);
        let mut table = vec![vec![0usize; dt]; dk];
        for (k, row) in table.iter_mut().enumerate() {
            let mut base = 0;
            let mut rem = k;
            for &m in kept_modes.iter().rev() {
                base += (rem % d) * self.stride(m);
                rem /= d;
            }
            for (t, slot) in row.iter_mut().enumerate() {
                let mut idx = base;
                let mut rem = t;
                for &m in traced.iter().rev() {
                    idx += (rem % d) * self.stride(m);
                    rem /= d;
                }
                *slot = idx;
            }
        }
        Ok((kept_space, table))
    }
}

/// Pure state as a dense amplitude vector. `leakage` accumulates norm lost to
/// truncation by the operations that produced this state.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFockState {
    space: FockSpace,
    amplitudes: Vec<Complex64>,
    leakage: f64,
}

impl TruncatedFockState {
    pub fn vacuum<S: AsRef<str>>(labels: &[S], cutoff: usize) -> Result<Self, FockError> {
        let space = FockSpace::new(labels, cutoff)?;
        let mut amplitudes = vec![ZERO; space.dimension()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { space, amplitudes, leakage: 0.0 })
    }

    pub fn from_amplitudes(space: FockSpace, amplitudes: Vec<Complex64>) -> Result<Self, FockError> {
        if amplitudes.len() != space.dimension() {
            return Err(FockError::InvalidArgument(format!(
                "amplitude vector has length {}, space dimension is {}",
                amplitudes.len(),
                space.dimension()
            )));
        }
        let s = Self { space, amplitudes, leakage: 0.0 };
        let n = s.norm_sqr();
        if n > 1.0 + 1e-9 {
            return Err(FockError::NormTooLarge(n));
        }
        if n == 0.0 {
            return Err(FockError::InvalidArgument("zero state".into()));
        }
        Ok(s)
    }

    pub(crate) fn with_leakage(mut self, leakage: f64) -> Self {
        self.leakage = leakage;
        self
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        self.space.labels()
    }

    pub fn cutoff(&self) -> usize {
        self.space.cutoff()
    }

    pub fn mode_count(&self) -> usize {
        self.space.mode_count()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Result<Complex64, FockError> {
        Ok(self.amplitudes[self.space.index_of(occupations)?])
    }

    /// Rescales to unit norm, keeping the recorded leakage.
    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|a| *a /= n);
        out
    }

    /// Tensor product `self ⊗ other`; labels are concatenated.
    pub fn tensor(&self, other: &Self) -> Result<Self, FockError> {
        if self.cutoff() != other.cutoff() {
            return Err(FockError::InvalidArgument("tensor factors need equal cutoffs".into()));
        }
        let mut labels = self.labels().to_vec();
        labels.extend(other.labels().iter().cloned());
        let space = FockSpace::new(&labels, self.cutoff())?;
        let mut amplitudes = Vec::with_capacity(space.dimension());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(Self { space, amplitudes, leakage: self.leakage + other.leakage })
    }

    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self, FockError> {
        if labels.len() != self.mode_count() {
            return Err(FockError::InvalidArgument("relabel needs one label per mode".into()));
        }
        let mut out = self.clone();
        out.space = FockSpace::new(labels, self.cutoff())?;
        Ok(out)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<Complex64, FockError> {
        if self.space != other.space {
            return Err(FockError::InvalidArgument("states live on different spaces".into()));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn fidelity(&self, other: &Self) -> Result<f64, FockError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn mean_photon_number(&self, label: &str) -> Result<f64, FockError> {
        let m = self.space.mode_index(label)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * self.space.occupation(i, m) as f64)
            .sum())
    }

    pub fn total_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * self.space.occupations(i).iter().sum::<usize>() as f64)
            .sum()
    }

    /// Applies `exp(-i δ n̂)` on one mode.
    pub fn apply_phase(&self, label: &str, delta: f64) -> Result<Self, FockError> {
        let m = self.space.mode_index(label)?;
        let mut out = self.clone();
        for (i, a) in out.amplitudes.iter_mut().enumerate() {
            let n = self.space.occupation(i, m) as f64;
            *a *= Complex64::from_polar(1.0, -delta * n);
        }
        Ok(out)
    }

    /// Applies a single-mode operator given by its matrix on `levels` Fock
    /// levels (columns are inputs). Output levels above the cutoff are dropped
    /// and the lost norm is added to the leakage.
    pub(crate) fn apply_single_mode(&self, label: &str, op: &DMatrix<Complex64>) -> Result<Self, FockError> {
        let m = self.space.mode_index(label)?;
        let stride = self.space.stride(m);
        let levels = self.space.levels();
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let n = self.space.occupation(i, m);
            let base = i - n * stride;
            for k in 0..levels {
                out[base + k * stride] += op[(k, n)] * a;
            }
        }
        self.finish(out)
    }

    /// Applies `exp(φ (a†b − a b†))` to the mode pair `(a, b)`.
    pub fn apply_rotation(&self, mode_a: &str, mode_b: &str, phi: f64) -> Result<Self, FockError> {
        let ma = self.space.mode_index(mode_a)?;
        let mb = self.space.mode_index(mode_b)?;
        if ma == mb {
            return Err(FockError::InvalidArgument("beamsplitter modes must be distinct".into()));
        }
        let c = self.cutoff();
        let blocks: Vec<DMatrix<f64>> = (0..=2 * c).map(|n| rotation_block(n, phi)).collect();
        let sa = self.space.stride(ma);
        let sb = self.space.stride(mb);
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let na = self.space.occupation(i, ma);
            let nb = self.space.occupation(i, mb);
            let total = na + nb;
            let base = i - na * sa - nb * sb;
            let block = &blocks[total];
            let lo = total.saturating_sub(c);
            for p in lo..=total.min(c) {
                let u = block[(p, na)];
                if u != 0.0 {
                    out[base + p * sa + (total - p) * sb] += a * u;
                }
            }
        }
        self.finish(out)
    }

    fn finish(&self, amplitudes: Vec<Complex64>) -> Result<Self, FockError> {
        let before = self.norm_sqr();
        let after: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self {
            space: self.space.clone(),
            amplitudes,
            leakage: self.leakage + (before - after).max(0.0),
        })
    }

    /// |ψ⟩⟨ψ| on the full space.
    pub fn to_density(&self) -> DensityState {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityState { space: self.space.clone(), matrix: &v * v.adjoint() }
    }

    /// Reduced density matrix over `keep`, computed as ΨΨ† with Ψ the
    /// amplitude vector reshaped to (kept × traced).
    pub fn reduce(&self, keep: &[&str]) -> Result<DensityState, FockError> {
        let (kept, table) = self.space.split(keep)?;
        let dk = table.len();
        let dt = table[0].len();
        let psi = DMatrix::from_fn(dk, dt, |k, t| self.amplitudes[table[k][t]]);
        Ok(DensityState { space: kept, matrix: &psi * psi.adjoint() })
    }
}

/// Matrix of `exp(φ (a†b − a b†))` within the sector of `total` photons,
/// basis `|p, total − p⟩` indexed by `p`.
pub(crate) fn rotation_block(total: usize, phi: f64) -> DMatrix<f64> {
    let n = total;
    let mut g = DMatrix::<f64>::zeros(n + 1, n + 1);
    for p in 0..=n {
        let q = n - p;
        if q > 0 {
            g[(p + 1, p)] += (((p + 1) * q) as f64).sqrt();
        }
        if p > 0 {
            g[(p - 1, p)] -= ((p * (q + 1)) as f64).sqrt();
        }
    }
    (g * phi).exp()
}

/// Mixed state on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    space: FockSpace,
    matrix: DMatrix<Complex64>,
}

impl DensityState {
    pub fn from_matrix(space: FockSpace, matrix: DMatrix<Complex64>) -> Result<Self, FockError> {
        let d = space.dimension();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(FockError::InvalidArgument(format!(
                "density matrix must be {d}x{d}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        self.space.labels()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// max |ρ − ρ†| elementwise.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut worst = 0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Probability mass on basis states whose occupations satisfy `pred`.
    pub fn probability<P: Fn(&[usize]) -> bool>(&self, pred: P) -> f64 {
        (0..self.matrix.nrows())
            .filter(|&i| pred(&self.space.occupations(i)))
            .map(|i| self.matrix[(i, i)].re)
            .sum()
    }

    pub fn mean_photon_number(&self, label: &str) -> Result<f64, FockError> {
        let m = self.space.mode_index(label)?;
        Ok((0..self.matrix.nrows())
            .map(|i| self.matrix[(i, i)].re * self.space.occupation(i, m) as f64)
            .sum())
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with_pure(&self, psi: &TruncatedFockState) -> Result<f64, FockError> {
        if psi.space() != &self.space {
            return Err(FockError::InvalidArgument("state and density matrix spaces differ".into()));
        }
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)].re)
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityState, FockError> {
        let (kept, table) = self.space.split(keep)?;
        let dk = table.len();
        let dt = table[0].len();
        let mut out = DMatrix::<Complex64>::zeros(dk, dk);
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = ZERO;
                for t in 0..dt {
                    acc += self.matrix[(table[i][t], table[j][t])];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(DensityState { space: kept, matrix: out })
    }

    /// U ρ U† with U = exp(-i δ n̂) on one mode.
    pub fn apply_phase(&self, label: &str, delta: f64) -> Result<Self, FockError> {
        let m = self.space.mode_index(label)?;
        let d = self.matrix.nrows();
        let mut out = self.matrix.clone();
        for i in 0..d {
            let ni = self.space.occupation(i, m) as f64;
            for j in 0..d {
                let nj = self.space.occupation(j, m) as f64;
                out[(i, j)] *= Complex64::from_polar(1.0, -delta * (ni - nj));
            }
        }
        Ok(Self { space: self.space.clone(), matrix: out })
    }

    /// Pure-loss channel of transmission `eta` on one mode in Kraus form,
    /// `K_k = Σ_n sqrt(C(n,k) η^(n−k) (1−η)^k) |n−k⟩⟨n|`.
    pub fn apply_loss(&self, label: &str, eta: f64) -> Result<Self, FockError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(FockError::InvalidArgument(format!("transmission {eta} outside [0, 1]")));
        }
        let m = self.space.mode_index(label)?;
        let stride = self.space.stride(m);
        let c = self.space.cutoff();
        let kraus = loss_kraus_coefficients(c, eta);
        let d = self.matrix.nrows();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..d {
            let nj = self.space.occupation(j, m);
            for i in 0..d {
                let v = self.matrix[(i, j)];
                if v == ZERO {
                    continue;
                }
                let ni = self.space.occupation(i, m);
                for k in 0..=ni.min(nj) {
                    let w = kraus[ni][k] * kraus[nj][k];
                    if w != 0.0 {
                        out[(i - k * stride, j - k * stride)] += v * w;
                    }
                }
            }
        }
        Ok(Self { space: self.space.clone(), matrix: out })
    }
}

/// `coef[n][k] = sqrt(C(n,k) η^(n−k) (1−η)^k)`.
fn loss_kraus_coefficients(cutoff: usize, eta: f64) -> Vec<Vec<f64>> {
    let mut coef = vec![vec![0.0; cutoff + 1]; cutoff + 1];
    for (n, row) in coef.iter_mut().enumerate() {
        let mut binom = 1.0;
        for (k, slot) in row.iter_mut().enumerate().take(n + 1) {
            if k > 0 {
                binom = binom * (n + 1 - k) as f64 / k as f64;
            }
            *slot = (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt();
        }
    }
    coef
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let s = FockSpace::new(&["a", "b", "c"], 3).unwrap();
        for i in 0..s.dimension() {
            assert_eq!(s.index_of(&s.occupations(i)).unwrap(), i);
        }
        assert_eq!(s.index_of(&[1, 0, 0]).unwrap(), 16);
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(FockSpace::new(&["a", "a"], 2).is_err());
    }

    #[test]
    fn rotation_block_is_orthogonal() {
        for n in 0..7 {
            let u = rotation_block(n, 0.7);
            let err = (&u * u.transpose() - DMatrix::identity(n + 1, n + 1)).abs().max();

            assert!(err < 1e-13, "sector {n}: {err}");
        }
    }

    #[test]
    fn kraus_loss_on_single_photon() {
        let mut psi = TruncatedFockState::vacuum(&["a"], 2).unwrap();
        psi.amplitudes = vec![ZERO, Complex64::new(1.0, 0.0), ZERO];
        let rho = psi.to_density().apply_loss("a", 0.3).unwrap();
        assert!((rho.matrix()[(1, 1)].re - 0.3).abs() < 1e-15);
        assert!((rho.matrix()[(0, 0)].re - 0.7).abs() < 1e-15);
    }

    #[test]
    fn reduce_matches_partial_trace() {
        let space = FockSpace::new(&["a", "b"], 2).unwrap();
        let amps: Vec<Complex64> =
            (0..9).map(|i| Complex64::new(i as f64 + 1.0, 0.5 * i as f64)).collect();
        let psi = TruncatedFockState::from_amplitudes(space, amps.clone())
            .or_else(|_| {
                let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                TruncatedFockState::from_amplitudes(
                    FockSpace::new(&["a", "b"], 2).unwrap(),
                    amps.iter().map(|a| a / n).collect(),
                )
            })
            .unwrap();
        let a = psi.reduce(&["b"]).unwrap();
        let b = psi.to_density().partial_trace(&["b"]).unwrap();
        let diff = (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }
}
