//! Cross sections, asymmetry parameter, effective scattering length, and the
//! zero-field scattering-length extraction.
//!
//! The total elastic cross section is σ = 8π Σ_{l,l'} Σ_{m,m'} |t_{lm}^{l'm'}|²
//! restricted to even (boson) or odd (fermion) partial waves. Azimuthal
//! symmetry about the field axis enforces m' = m, so the double m-sum reduces
//! to a sum over m-blocks; blocks at -m mirror those at +m exactly (the P2
//! elements are even in m), so only m >= 0 is solved and m > 0 counts twice.

use crate::channels::{build_basis, Statistics};
use crate::engine::{solve_block, NumericalParams};
use crate::error::{Error, Result};
use crate::matching::ScatteringSolution;
use crate::potential::PotentialModel;
use crate::propagator::{propagate, PropagationSettings, ScalarSystem, StepPolicy};
use serde::{Deserialize, Serialize};

/// Contribution of one m-block to σ, in a.u.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockContribution {
    pub m: i32,
    pub sigma: f64,
}

/// Assembled elastic observables at one (model, field, k) point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossSectionReport {
    pub statistics: Statistics,
    /// Total elastic cross section, a.u.
    pub sigma: f64,
    /// δ = 8π |t_00|²/σ. Bosons only; reported as 0 with
    /// `asymmetry_degenerate` set when σ = 0.
    pub asymmetry: Option<f64>,
    /// a_eff = -Re t_00, a.u. Bosons only.
    pub a_eff: Option<f64>,
    /// Im t_00, a.u.; bounded by k |t_00|² through unitarity.
    pub im_t00: Option<f64>,
    /// Per-m contributions, m = -m_max..m_max; they sum to σ exactly.
    pub per_block: Vec<BlockContribution>,
    pub k: f64,
    pub l_max: u32,
    pub m_max: u32,
    /// Largest matching radius used across blocks, a.u.
    pub r_match: f64,
    pub asymmetry_degenerate: bool,
}

/// Assemble σ (and the boson-only S-wave diagnostics) from per-block
/// scattering solutions covering m = 0..m_max.
pub fn cross_section(
    solutions: &[ScatteringSolution],
    statistics: Statistics,
) -> Result<CrossSectionReport> {
    if solutions.is_empty() {
        return Err(Error::IncompleteBlocks {
            why: "no m-blocks supplied".to_string(),
        });
    }
    let k = solutions[0].k;
    for s in solutions {
        if s.k != k {
            return Err(Error::MixedWavenumbers { k1: k, k2: s.k });
        }
        if s.basis.statistics() != statistics {
            return Err(Error::IncompleteBlocks {
                why: format!(
                    "block m = {} was built for {} statistics",
                    s.basis.m_block(),
                    s.basis.statistics()
                ),
            });
        }
    }
    let mut ms: Vec<i32> = solutions.iter().map(|s| s.basis.m_block()).collect();
    ms.sort_unstable();
    let m_max = *ms.last().unwrap();
    let expected: Vec<i32> = (0..=m_max).collect();
    if ms != expected {
        return Err(Error::IncompleteBlocks {
            why: format!("need one block per m = 0..{m_max}, got m = {ms:?}"),
        });
    }

    let eight_pi = 8.0 * std::f64::consts::PI;
    let mut per_block = Vec::new();
    let mut sigma = 0.0;
    let mut l_max = 0u32;
    let mut r_match = 0.0f64;
    // Fixed summation order by m keeps the reduction deterministic.
    let mut ordered = solutions.to_vec();
    ordered.sort_by_key(|s| s.basis.m_block());
    for sol in &ordered {
        let block = eight_pi * sol.t_norm_sqr();
        per_block.push(BlockContribution {
            m: sol.basis.m_block(),
            sigma: block,
        });
        sigma += if sol.basis.m_block() == 0 {
            block
        } else {
            2.0 * block
        };
        l_max = l_max.max(sol.basis.l_max());
        r_match = r_match.max(sol.diagnostics.r_match);
    }
    // Mirror blocks for the record: per_block covers -m_max..m_max and sums
    // to σ exactly.
    let mut mirrored: Vec<BlockContribution> = per_block
        .iter()
        .filter(|b| b.m > 0)
        .map(|b| BlockContribution {
            m: -b.m,
            sigma: b.sigma,
        })
        .collect();
    mirrored.reverse();
    mirrored.extend(per_block);
    let per_block = mirrored;

    let (asymmetry, a_eff, im_t00, degenerate) = match statistics {
        Statistics::Fermion => (None, None, None, false),
        Statistics::Boson => {
            let m0 = ordered
                .iter()
                .find(|s| s.basis.m_block() == 0)
                .expect("m = 0 block present by construction");
            debug_assert_eq!(m0.basis.channels()[0].l, 0);
            let t00 = m0.t(0, 0);
            if sigma > 0.0 {
                (
                    Some(eight_pi * t00.norm_sqr() / sigma),
                    Some(-t00.re),
                    Some(t00.im),
                    false,
                )
            } else {
                (Some(0.0), Some(-t00.re), Some(t00.im), true)
            }
        }
    };

    Ok(CrossSectionReport {
        statistics,
        sigma,
        asymmetry,
        a_eff,
        im_t00,
        per_block,
        k,
        l_max,
        m_max: m_max as u32,
        r_match,
        asymmetry_degenerate: degenerate,
    })
}

/// Scattering length extracted at two small wavenumbers and Richardson
/// extrapolated to k = 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScatteringLength {
    /// Extrapolated a_sc, a.u.
    pub a: f64,
    /// |a(k2) - a(k1)| / 3, the size of the k² correction removed.
    pub residual: f64,
    /// The two wavenumbers used, (k1, k2) = (k, k/2).
    pub k_pair: (f64, f64),
}

/// |a| beyond this is reported as a near zero-energy resonance rather than a
/// number.
pub const SCATTERING_LENGTH_LIMIT: f64 = 1e7;

const A_EXTRACT_K1: f64 = 1e-6;
const A_EXTRACT_K2: f64 = 5e-7;

/// Single-channel l = 0 phase at wavenumber k: a(k) = -tan δ0(k) / k.
fn a_of_k(model: &PotentialModel, k: f64, step: StepPolicy) -> Result<f64> {
    let basis = build_basis(Statistics::Boson, 0, 0)?;
    let mut params = NumericalParams::for_statistics(Statistics::Boson);
    params.k = k;
    params.l_max = 0;
    params.m_max = 0;
    params.step = step;
    let sol = solve_block(model, 0.0, &basis, &params)?;
    Ok(-sol.k_matrix[(0, 0)] / k)
}

/// Zero-field S-wave scattering length of the model, from solves at
/// k = 1e-6 and 5e-7 a.u.⁻¹, Richardson extrapolated in k².
pub fn zero_field_scattering_length(model: &PotentialModel) -> Result<ScatteringLength> {
    zero_field_scattering_length_with(model, StepPolicy::default())
}

pub fn zero_field_scattering_length_with(
    model: &PotentialModel,
    step: StepPolicy,
) -> Result<ScatteringLength> {
    let a1 = a_of_k(model, A_EXTRACT_K1, step)?;
    let a2 = a_of_k(model, A_EXTRACT_K2, step)?;
    // a(k) = a0 + c k²; with k1 = 2 k2 the k² term cancels in (4 a2 - a1)/3.
    let a = (4.0 * a2 - a1) / 3.0;
    let residual = (a2 - a1).abs() / 3.0;
    if !a.is_finite() || a.abs() > SCATTERING_LENGTH_LIMIT {
        return Err(Error::NearResonance {
            limit: SCATTERING_LENGTH_LIMIT,
        });
    }
    Ok(ScatteringLength {
        a,
        residual,
        k_pair: (A_EXTRACT_K1, A_EXTRACT_K2),
    })
}

/// Radius out to which bound-state nodes are counted: far enough that the
/// outermost node (near r = a for positive a) has entered, close enough that
/// no free-oscillation node at r ~ π/k has.
pub const NODE_COUNT_RADIUS: f64 = 2e4;

/// Count radial nodes of the zero-energy (k = 1e-6) single-channel l = 0
/// wavefunction out to `NODE_COUNT_RADIUS`. The count jumps by one exactly
/// where a_sc passes through ±∞, which is the pole detector used by the
/// calibration bracketing.
pub fn count_s_wave_nodes(model: &PotentialModel) -> Result<usize> {
    let k = A_EXTRACT_K1;
    let m = *model;
    let system = ScalarSystem {
        q: move |r: f64| Ok(2.0 * m.reduced_mass * m.v0(r)? - k * k),
    };
    let basis = build_basis(Statistics::Boson, 0, 0)?;
    let settings = PropagationSettings {
        r_start: model.r_cut,
        r_match: NODE_COUNT_RADIUS,
        step: StepPolicy::default(),
        k,
    };
    Ok(propagate(&system, &basis, &settings)?.node_upcrossings)
}

/// Count nodes of the lowest adiabatic potential curve of the boson m = 0
/// block (the l = 0 dominated curve) at field coefficient `c_e`. Used as the
/// bound-state oracle flanking a field-induced resonance.
pub fn count_adiabatic_nodes(model: &PotentialModel, c_e: f64, l_max: u32) -> Result<usize> {
    let k = A_EXTRACT_K1;
    let basis = build_basis(Statistics::Boson, 0, l_max)?;
    let table = crate::potential::CouplingTable::new(&basis)?;
    let m = *model;
    let n = basis.len();
    let system = ScalarSystem {
        q: move |r: f64| {
            let mut w = nalgebra::DMatrix::zeros(n, n);
            table.fill_w(&m, c_e, r, &mut w)?;
            let eig = nalgebra::SymmetricEigen::new(w);
            let min = eig
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            Ok(min - k * k)
        },
    };
    let single = build_basis(Statistics::Boson, 0, 0)?;
    let settings = PropagationSettings {
        r_start: model.r_cut,
        r_match: NODE_COUNT_RADIUS,
        step: StepPolicy::default(),
        k,
    };
    Ok(propagate(&system, &single, &settings)?.node_upcrossings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::build_basis;
    use crate::matching::{ScatteringSolution, SolutionDiagnostics};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn synthetic_block(
        statistics: Statistics,
        m: i32,
        l_max: u32,
        k: f64,
        t00: Option<Complex64>,
    ) -> ScatteringSolution {
        let basis = build_basis(statistics, m, l_max).unwrap();
        let n = basis.len();
        let mut t = DMatrix::<Complex64>::zeros(n, n);
        if let Some(v) = t00 {
            t[(0, 0)] = v;
        }
        ScatteringSolution {
            k,
            basis,
            k_matrix: DMatrix::zeros(n, n),
            s_matrix: DMatrix::identity(n, n),
            t_reduced: t,
            diagnostics: SolutionDiagnostics {
                r_match: 1e4,
                y_symmetry_defect: 0.0,
                k_symmetry_defect: 0.0,
                k_condition: 1.0,
                s_unitarity_defect: 0.0,
                s_symmetry_defect: 0.0,
                optical_defect: 0.0,
            },
        }
    }

    #[test]
    fn single_t00_gives_the_pinned_normalization() {
        // a_sc = 32 a.u. limit: only t_00 = -32 is nonzero, so
        // σ_B = 8π · 32² = 2.574e4 a.u.
        let sol = synthetic_block(
            Statistics::Boson,
            0,
            0,
            1e-6,
            Some(Complex64::new(-32.0, 0.0)),
        );
        let report = cross_section(&[sol], Statistics::Boson).unwrap();
        assert_relative_eq!(
            report.sigma,
            8.0 * std::f64::consts::PI * 1024.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(report.sigma, 2.574e4, max_relative = 1e-3);
        assert_relative_eq!(report.a_eff.unwrap(), 32.0, max_relative = 1e-14);
        assert_relative_eq!(report.asymmetry.unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn large_t00_matches_fig2_normalization() {
        let sol = synthetic_block(
            Statistics::Boson,
            0,
            0,
            1e-6,
            Some(Complex64::new(-2470.0, 0.0)),
        );
        let report = cross_section(&[sol], Statistics::Boson).unwrap();
        assert_relative_eq!(report.sigma, 1.5333e8, max_relative = 1e-3);
        assert_relative_eq!(report.asymmetry.unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_t_reports_degenerate_asymmetry() {
        let sol = synthetic_block(Statistics::Boson, 0, 2, 1e-6, None);
        let report = cross_section(&[sol], Statistics::Boson).unwrap();
        assert_eq!(report.sigma, 0.0);
        assert_eq!(report.asymmetry, Some(0.0));
        assert!(report.asymmetry_degenerate);
    }

    #[test]
    fn asymmetry_limits() {
        // t_00 zero but d-wave contributions present: δ -> 0.
        let basis = build_basis(Statistics::Boson, 0, 2).unwrap();
        let n = basis.len();
        let mut t = DMatrix::<Complex64>::zeros(n, n);
        t[(1, 1)] = Complex64::new(5.0, 0.0);
        let mut sol = synthetic_block(Statistics::Boson, 0, 2, 1e-6, None);
        sol.t_reduced = t;
        let report = cross_section(&[sol], Statistics::Boson).unwrap();
        assert_eq!(report.asymmetry, Some(0.0));
        assert!(!report.asymmetry_degenerate);
        assert!(report.sigma > 0.0);
    }

    #[test]
    fn blocks_sum_with_mirror_weights() {
        let k = 1e-6;
        let b0 = synthetic_block(Statistics::Boson, 0, 4, k, Some(Complex64::new(-2.0, 0.0)));
        let mut b1 = synthetic_block(Statistics::Boson, 1, 4, k, None);
        b1.t_reduced[(0, 0)] = Complex64::new(1.0, 0.0); // (l=2, m=1) element
        let mut b2 = synthetic_block(Statistics::Boson, 2, 4, k, None);
        b2.t_reduced[(1, 1)] = Complex64::new(0.5, 0.0);
        let report = cross_section(&[b0, b1, b2], Statistics::Boson).unwrap();
        let eight_pi = 8.0 * std::f64::consts::PI;
        assert_relative_eq!(
            report.sigma,
            eight_pi * (4.0 + 2.0 * 1.0 + 2.0 * 0.25),
            max_relative = 1e-14
        );
        let total: f64 = report.per_block.iter().map(|b| b.sigma).sum();
        assert_relative_eq!(report.sigma, total, max_relative = 1e-14);
        assert_eq!(report.per_block.len(), 5);
        assert_eq!(report.per_block[0].m, -2);
        assert_eq!(report.per_block[4].m, 2);
    }

    #[test]
    fn mixed_k_and_gaps_are_rejected() {
        let b0 = synthetic_block(Statistics::Boson, 0, 2, 1e-6, None);
        let b1 = synthetic_block(Statistics::Boson, 1, 2, 2e-6, None);
        assert!(matches!(
            cross_section(&[b0.clone(), b1], Statistics::Boson),
            Err(Error::MixedWavenumbers { .. })
        ));
        let b2 = synthetic_block(Statistics::Boson, 2, 2, 1e-6, None);
        assert!(matches!(
            cross_section(&[b0, b2], Statistics::Boson),
            Err(Error::IncompleteBlocks { .. })
        ));
    }

    #[test]
    fn statistics_mismatch_is_rejected() {
        let b0 = synthetic_block(Statistics::Fermion, 0, 3, 1e-6, None);
        assert!(cross_section(&[b0], Statistics::Boson).is_err());
    }

    #[test]
    fn hard_wall_scattering_length_is_r_cut() {
        // C6 -> 0 limit is modeled with a vanishingly small C6 (the type
        // requires c6 > 0): a_sc = R_c for a pure hard sphere.
        let model = PotentialModel::new(1e-20, 0.0, 0.0, 23.226, 20962.0).unwrap();
        let est = zero_field_scattering_length(&model).unwrap();
        assert_relative_eq!(est.a, 23.226, max_relative = 1e-6);
        assert!(est.residual < 1e-6);
    }

    #[test]
    fn near_pole_reports_resonance() {
        // Sweep R_c to find a pole bracket and then demand the error path.
        let mut prev = None;
        let mut hit = false;
        for i in 0..=60 {
            let rc = 20.0 + 0.1 * i as f64;
            let model = PotentialModel::with_defaults(rc).unwrap();
            match zero_field_scattering_length(&model) {
                Ok(est) => {
                    if let Some((_, pa)) = prev {
                        let _: f64 = pa;
                    }
                    prev = Some((rc, est.a));
                }
                Err(Error::NearResonance { .. }) => {
                    hit = true;
                    break;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        // Poles are narrow; scanning may or may not land inside one, but the
        // node count must increase across the scanned range (several bound
        // states enter as the well deepens).
        if !hit {
            let n_lo = count_s_wave_nodes(&PotentialModel::with_defaults(26.0).unwrap()).unwrap();
            let n_hi = count_s_wave_nodes(&PotentialModel::with_defaults(20.0).unwrap()).unwrap();
            assert!(n_hi > n_lo);
        }
    }

    #[test]
    fn node_count_jumps_across_a_pole() {
        // A pole of a(R_c) sits where the count jumps; locate one by scanning.
        let mut last = None;
        let mut jump = None;
        for i in 0..=80 {
            let rc = 20.0 + 0.05 * i as f64;
            let n = count_s_wave_nodes(&PotentialModel::with_defaults(rc).unwrap()).unwrap();
            if let Some((prc, pn)) = last {
                if n != pn {
                    jump = Some((prc, rc, pn, n));
                    break;
                }
            }
            last = Some((rc, n));
        }
        let (rc_lo, rc_hi, n_lo, n_hi) = jump.expect("no node-count jump in 4 a.u. of R_c");
        // Wells deepen as R_c decreases, so the count drops with increasing R_c.
        assert_eq!(n_lo, n_hi + 1);
        // a(R) flanking the jump must be huge with opposite signs.
        let a_lo = zero_field_scattering_length(&PotentialModel::with_defaults(rc_lo).unwrap());
        let a_hi = zero_field_scattering_length(&PotentialModel::with_defaults(rc_hi).unwrap());
        if let (Ok(lo), Ok(hi)) = (a_lo, a_hi) {
            assert!(
                lo.a > 0.0 || hi.a < 0.0,
                "pole flank signs wrong: {} {}",
                lo.a,
                hi.a
            );
        }
    }
}
