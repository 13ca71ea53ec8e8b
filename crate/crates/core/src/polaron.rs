//! The polaron frame: renormalized system Hamiltonian and residual hopping channels.

use nalgebra::DMatrix;

use crate::bath::Bath;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::model::SystemSpec;

/// One residual hopping channel `S_mn = h_mn |m⟩⟨n|` with prefactor `d = c_m − c_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub m: usize,
    pub n: usize,
    pub op: CMatrix,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolaronFrame {
    /// `H̃_S`, including the onsite shifts.
    pub tilde_hs: CMatrix,
    pub channels: Vec<Channel>,
    pub kappa: DMatrix<f64>,
    /// Per-state shift `ξ_n`.
    pub shift: Vec<f64>,
}

impl PolaronFrame {
    pub fn new(sys: &SystemSpec, bath: &Bath) -> Result<Self> {
        let n = sys.dim();
        let cc = sys.coupling();
        let kappa = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { bath.kappa(cc[i] - cc[j]) });
        let shift: Vec<f64> = cc.iter().map(|&x| bath.xi(x)).collect();
        if let Some(i) = shift.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("onsite shift of state {i} is not finite")));
        }
        let hop = sys.hopping();
        let mut tilde_hs = CMatrix::zeros(n, n);
        let mut channels = Vec::new();
        for i in 0..n {
            tilde_hs[(i, i)] = c(sys.onsite()[i] + shift[i]);
            for j in 0..n {
                if i == j || hop[(i, j)].norm() == 0.0 {
                    continue;
                }
                tilde_hs[(i, j)] = hop[(i, j)] * kappa[(i, j)];
                let mut op = CMatrix::zeros(n, n);
                op[(i, j)] = hop[(i, j)];
                channels.push(Channel { m: i, n: j, op, d: cc[i] - cc[j] });
            }
        }
        Ok(Self { tilde_hs: linalg::hermitian_part(&tilde_hs), channels, kappa, shift })
    }

    pub fn dim(&self) -> usize {
        self.tilde_hs.nrows()
    }

    /// Mean of the per-state shifts `ξ_n`.
    pub fn common_shift(&self) -> f64 {
        self.shift.iter().sum::<f64>() / self.shift.len() as f64
    }
}

/// Eigen-decomposition of a system Hamiltonian with the gap table `δE_ij = E_i − E_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrame {
    pub energies: Vec<f64>,
    /// Columns are the eigenvectors `|ĩ⟩`.
    pub unitary: CMatrix,
}

/// Default degeneracy threshold relative to the spectral span.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

impl EigenFrame {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.energies[i] - self.energies[j]
    }

    /// `U† A U`.
    pub fn to_eigen(&self, a: &CMatrix) -> CMatrix {
        self.unitary.adjoint() * a * &self.unitary
    }

    /// `U A U†`.
    pub fn to_site(&self, a: &CMatrix) -> CMatrix {
        &self.unitary * a * self.unitary.adjoint()
    }

    /// `vec(U X U†) = T vec(X)`, with `T = conj(U) ⊗ U`.
    pub fn superoperator_transform(&self) -> CMatrix {
        linalg::kron(&self.unitary.conjugate(), &self.unitary)
    }
}

/// Diagonalizes `h`; eigenvector phases are fixed so the largest-magnitude component is real and positive.
pub fn diagonalize_hamiltonian(h: &CMatrix, threshold: f64) -> Result<EigenFrame> {
    let (energies, mut u) = linalg::hermitian_eigen(h)?;
    let n = energies.len();
    let span = energies[n - 1] - energies[0];
    for i in 1..n {
        let gap = energies[i] - energies[i - 1];
        if gap < threshold * span || span == 0.0 {
            return Err(Error::DegenerateSpectrum { i, j: i - 1, gap, threshold: threshold * span });
        }
    }
    for k in 0..n {
        let mut best = 0;
        for r in 0..n {
            if u[(r, k)].norm() > u[(best, k)].norm() + 1e-12 {
                best = r;
            }
        }
        let z = u[(best, k)];
        let phase = z.conj() / z.norm();
        for r in 0..n {
            u[(r, k)] *= phase;
        }
    }
    Ok(EigenFrame { energies, unitary: u })
}

pub fn diagonalize(frame: &PolaronFrame) -> Result<EigenFrame> {
    diagonalize_hamiltonian(&frame.tilde_hs, DEGENERACY_THRESHOLD)
}
