//! The model interaction: dispersion tail with a hard inner wall, the
//! field-induced dipole coupling, and assembly of the symmetric coupling
//! matrix W(r) over a channel basis.
//!
//! The radial equations solved downstream are ψ'' = (W(r) - k² I) ψ with
//!
//!   W_ij(r) = 2μ [ V0(r) δ_ij - (C_E/r³) g_ij ] + δ_ij l_i(l_i+1)/r²,
//!
//! where g_ij = <Y_{l_i m}|P2|Y_{l_j m}> is r-independent and precomputed
//! once per basis. The wall enforces ψ(R_c) = 0; V0 is never evaluated at
//! or inside R_c.

use crate::channels::{p2_element, ChannelBasis};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Default dispersion model: sodium-like scales with the C8/C10 terms off.
pub const DEFAULT_C6: f64 = 3000.0;
pub const DEFAULT_REDUCED_MASS: f64 = 20962.0;
pub const DEFAULT_R_CUT: f64 = 23.0;

/// Dispersion potential -C6/r⁶ - C8/r⁸ - C10/r¹⁰ cut off by an infinite
/// hard wall at `r_cut`, plus the reduced mass of the pair. All in a.u.
///
/// Small changes of `r_cut` sweep the zero-field scattering length through
/// its full range, which is how models are calibrated to a target a_sc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub c6: f64,
    pub c8: f64,
    pub c10: f64,
    pub r_cut: f64,
    pub reduced_mass: f64,
}

impl PotentialModel {
    pub fn new(c6: f64, c8: f64, c10: f64, r_cut: f64, reduced_mass: f64) -> Result<Self> {
        if !(c6 > 0.0) {
            return Err(Error::invalid("c6", format!("must be > 0, got {c6}")));
        }
        if !(c8 >= 0.0) || !(c10 >= 0.0) {
            return Err(Error::invalid(
                "dispersion coefficients",
                format!("c8 and c10 must be >= 0, got c8 = {c8}, c10 = {c10}"),
            ));
        }
        if !(r_cut > 0.0) {
            return Err(Error::invalid("r_cut", format!("must be > 0, got {r_cut}")));
        }
        if !(reduced_mass > 0.0) {
            return Err(Error::invalid(
                "reduced_mass",
                format!("must be > 0, got {reduced_mass}"),
            ));
        }
        Ok(PotentialModel {
            c6,
            c8,
            c10,
            r_cut,
            reduced_mass,
        })
    }

    /// Default model with a caller-chosen cutoff radius.
    pub fn with_defaults(r_cut: f64) -> Result<Self> {
        Self::new(DEFAULT_C6, 0.0, 0.0, r_cut, DEFAULT_REDUCED_MASS)
    }

    pub fn with_r_cut(mut self, r_cut: f64) -> Result<Self> {
        if !(r_cut > 0.0) {
            return Err(Error::invalid("r_cut", format!("must be > 0, got {r_cut}")));
        }
        self.r_cut = r_cut;
        Ok(self)
    }

    /// Isotropic dispersion potential V0(r), valid only outside the wall.
    pub fn v0(&self, r: f64) -> Result<f64> {
        if r <= self.r_cut {
            return Err(Error::InsideHardWall {
                r,
                r_cut: self.r_cut,
            });
        }
        let inv_r2 = 1.0 / (r * r);
        let inv_r6 = inv_r2 * inv_r2 * inv_r2;
        Ok(-inv_r6 * (self.c6 + inv_r2 * (self.c8 + inv_r2 * self.c10)))
    }
}

/// Precomputed r-independent pieces of W(r) for one channel basis:
/// the P2 angular elements g_ij and the centrifugal factors l(l+1).
#[derive(Debug, Clone)]
pub struct CouplingTable {
    g: DMatrix<f64>,
    ls: Vec<u32>,
    l_terms: Vec<f64>,
    g_max_abs: f64,
}

impl CouplingTable {
    pub fn new(basis: &ChannelBasis) -> Result<Self> {
        let n = basis.len();
        let ch = basis.channels();
        let mut g = DMatrix::zeros(n, n);
        let mut g_max_abs = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let v = p2_element(ch[i].l, ch[j].l, ch[i].m)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
                g_max_abs = g_max_abs.max(v.abs());
            }
        }
        let ls: Vec<u32> = ch.iter().map(|c| c.l).collect();
        let l_terms = ls.iter().map(|&l| (l * (l + 1)) as f64).collect();
        Ok(CouplingTable {
            g,
            ls,
            l_terms,
            g_max_abs,
        })
    }

    /// Orbital quantum numbers of the channels, in basis order.
    pub fn ls(&self) -> &[u32] {
        &self.ls
    }

    pub fn dim(&self) -> usize {
        self.l_terms.len()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Largest |g_ij| in the block; zero means the field does not touch
    /// this basis at all (single s-wave channel).
    pub fn g_max_abs(&self) -> f64 {
        self.g_max_abs
    }

    pub fn l_terms(&self) -> &[f64] {
        &self.l_terms
    }

    /// Fill `w` with W(r). `w` must be dim x dim.
    pub fn fill_w(
        &self,
        model: &PotentialModel,
        c_e: f64,
        r: f64,
        w: &mut DMatrix<f64>,
    ) -> Result<()> {
        let n = self.dim();
        let v0 = model.v0(r)?;
        let two_mu = 2.0 * model.reduced_mass;
        let field = two_mu * c_e / (r * r * r);
        let inv_r2 = 1.0 / (r * r);
        for j in 0..n {
            for i in 0..n {
                w[(i, j)] = -field * self.g[(i, j)];
            }
            w[(j, j)] += two_mu * v0 + self.l_terms[j] * inv_r2;
        }
        Ok(())
    }

    /// Diagonal W_ii(r) only; used by the step-size control.
    pub fn fill_w_diagonal(
        &self,
        model: &PotentialModel,
        c_e: f64,
        r: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let v0 = model.v0(r)?;
        let two_mu = 2.0 * model.reduced_mass;
        let field = two_mu * c_e / (r * r * r);
        let inv_r2 = 1.0 / (r * r);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = two_mu * v0 - field * self.g[(i, i)] + self.l_terms[i] * inv_r2;
        }
        Ok(())
    }
}

/// Symmetric coupling matrix W(r) for a basis, allocated fresh.
pub fn coupling_matrix(
    model: &PotentialModel,
    c_e: f64,
    basis: &ChannelBasis,
    r: f64,
) -> Result<DMatrix<f64>> {
    let table = CouplingTable::new(basis)?;
    let mut w = DMatrix::zeros(basis.len(), basis.len());
    table.fill_w(model, c_e, r, &mut w)?;
    Ok(w)
}
