use nalgebra::Matrix3;

use crate::bath::{BathModel, NuclearSpin};
use crate::error::{Error, Result};
use crate::linalg::{spin_operators, CMat, C64};

/// A group of nuclei simulated exactly, with the couplings kept inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub spins: Vec<NuclearSpin>,
    /// `(i, j, T)` acting as `Σ_ab Iᵢᵃ T_ab Iⱼᵇ`, local indices.
    pub couplings: Vec<(usize, usize, Matrix3<f64>)>,
    /// G
    pub bz: f64,
    pub ms: i8,
}

impl ClusterModel {
    pub fn new(
        spins: Vec<NuclearSpin>,
        couplings: Vec<(usize, usize, Matrix3<f64>)>,
        bz: f64,
        ms: i8,
    ) -> Result<Self> {
        if ms != 1 && ms != -1 {
            return Err(Error::Domain(format!("m_s must be ±1, got {ms}")));
        }
        if couplings.iter().any(|&(i, j, _)| i == j || i >= spins.len() || j >= spins.len()) {
            return Err(Error::Domain("coupling indices out of range".into()));
        }
        Ok(Self { spins, couplings, bz, ms })
    }

    pub fn empty(bz: f64, ms: i8) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), bz, ms)
    }

    pub fn single(spin: NuclearSpin, bz: f64, ms: i8) -> Result<Self> {
        Self::new(vec![spin], Vec::new(), bz, ms)
    }

    /// Spins `indices` of `bath` with all pairwise couplings among them.
    pub fn from_bath(bath: &BathModel, indices: &[usize]) -> Result<Self> {
        let spins = indices.iter().map(|&i| bath.spins[i].clone()).collect();
        let mut couplings = Vec::new();
        for a in 0..indices.len() {
            for b in a + 1..indices.len() {
                let t = bath.coupling(indices[a], indices[b])?;
                if t != Matrix3::zeros() {
                    couplings.push((a, b, t));
                }
            }
        }
        Self::new(spins, couplings, bath.bz, bath.ms)
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.spins.len()
    }

    /// Nuclear Hamiltonians conditioned on the NV state: `(H₀, H₁)` for the
    /// NV in `|0⟩` and in `|m_s⟩`, rad/µs.
    pub fn conditional_hamiltonians(&self) -> (CMat, CMat) {
        let dim = self.dim();
        let ops = spin_operators(self.len());
        let re = |x: f64| C64::new(x, 0.0);
        let mut h0 = CMat::zeros(dim, dim);
        for (spin, op) in self.spins.iter().zip(&ops) {
            h0 -= &op[2] * re(spin.gamma * self.bz);
        }
        for (i, j, t) in &self.couplings {
            for a in 0..3 {
                for b in 0..3 {
                    if t[(a, b)] != 0.0 {
                        h0 += &ops[*i][a] * &ops[*j][b] * re(t[(a, b)]);
                    }
                }
            }
        }
        let mut h1 = h0.clone();
        let ms = f64::from(self.ms);
        for (spin, op) in self.spins.iter().zip(&ops) {
            for a in 0..3 {
                h1 += &op[a] * re(ms * spin.hyperfine[a]);
            }
        }
        (h0, h1)
    }
}
