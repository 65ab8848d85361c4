//! Free-particle matching: convert the log-derivative at the matching radius
//! into K, S, and reduced T matrices.
//!
//! Conventions, fixed so the single-channel limit gives K = tan δ:
//!   - Riccati-Bessel pair ĵ_l(x) = x j_l(x), n̂_l(x) = x y_l(x), so
//!     ĵ_0 = sin x, n̂_0 = -cos x and the Wronskian ĵ n̂' - ĵ' n̂ = +1.
//!   - ψ = Ĵ - N̂ K  =>  K = (Y N̂ - N̂')⁻¹ (Y Ĵ - Ĵ').
//!   - S = (I + iK)(I - iK)⁻¹, T = (S - I)/(2i), t = T/k, so
//!     -Re t_00 -> a_sc as k -> 0 at zero field.
//!
//! The pipeline computes S directly from Y through the incoming/outgoing
//! combinations Ĥ± = -n̂ ± iĵ: S = (Y Ĥ⁺ - Ĥ⁺')⁻¹ (Y Ĥ⁻ - Ĥ⁻'). That solve
//! is algebraically identical to the Cayley transform of K but stays
//! well-conditioned at K-matrix poles, where (Y N̂ - N̂') is singular while a
//! real-k S matrix never is.

use crate::channels::ChannelBasis;
use crate::error::{Error, Result};
use crate::propagator::LogDerivative;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Riccati-Bessel pair (ĵ_l, n̂_l, ĵ'_l, n̂'_l) at x > 0; see [`crate::bessel`].
pub use crate::bessel::riccati_pair;

/// Diagnostics accumulated while turning a log-derivative into S and t.
#[derive(Debug, Clone, Copy)]
pub struct SolutionDiagnostics {
    pub r_match: f64,
    pub y_symmetry_defect: f64,
    /// ‖K - Kᵀ‖/‖K‖ before symmetrization.
    pub k_symmetry_defect: f64,
    /// 1-norm condition estimate of the K-extraction solve.
    pub k_condition: f64,
    /// ‖S S† - I‖_F.
    pub s_unitarity_defect: f64,
    /// ‖S - Sᵀ‖_F / ‖S‖_F.
    pub s_symmetry_defect: f64,
    /// max_j |Im t_jj - k Σ_i |t_ij|²| / max(|t_jj|, tiny).
    pub optical_defect: f64,
}

/// K, S, and reduced T matrices of one symmetry block at wavenumber `k`.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub k: f64,
    pub basis: ChannelBasis,
    pub k_matrix: DMatrix<f64>,
    pub s_matrix: DMatrix<Complex64>,
    /// Reduced T matrix t = (S - I)/(2ik); entries carry length units and
    /// stay finite as k -> 0.
    pub t_reduced: DMatrix<Complex64>,
    pub diagnostics: SolutionDiagnostics,
}

impl ScatteringSolution {
    /// Σ_{ij} |t_ij|² over the block.
    pub fn t_norm_sqr(&self) -> f64 {
        self.t_reduced.iter().map(|t| t.norm_sqr()).sum()
    }

    /// t element by channel indices within the block.
    pub fn t(&self, i: usize, j: usize) -> Complex64 {
        self.t_reduced[(i, j)]
    }
}

#[allow(clippy::type_complexity)]
fn diag_riccati(
    basis: &ChannelBasis,
    k: f64,
    r: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let x = k * r;
    let n = basis.len();
    let mut jv = vec![0.0; n];
    let mut nv = vec![0.0; n];
    let mut jd = vec![0.0; n];
    let mut nd = vec![0.0; n];
    for (i, c) in basis.channels().iter().enumerate() {
        let (j, nn, jp, np) = riccati_pair(c.l, x)?;
        jv[i] = j;
        nv[i] = nn;
        // d/dr f(kr) = k f'(x).
        jd[i] = k * jp;
        nd[i] = k * np;
    }
    Ok((jv, nv, jd, nd))
}

/// A = Y N̂ - N̂' and B = Y Ĵ - Ĵ' (channel-diagonal Riccati matrices at
/// x_i = k r_match).
fn matching_pair(y: &LogDerivative, k: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = y.basis.len();
    let (jv, nv, jd, nd) = diag_riccati(&y.basis, k, y.r)?;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] = y.y[(i, j)] * nv[j];
            b[(i, j)] = y.y[(i, j)] * jv[j];
        }
        a[(j, j)] -= nd[j];
        b[(j, j)] -= jd[j];
    }
    Ok((a, b))
}

/// Reactance matrix K = (Y N̂ - N̂')⁻¹ (Y Ĵ - Ĵ'), with a 1-norm condition
/// estimate of the solve. K is symmetrized after the (recorded) defect is
/// measured; the single-channel limit gives K = tan δ.
pub fn extract_k_matrix(y: &LogDerivative, k: f64) -> Result<(DMatrix<f64>, f64, f64)> {
    let (a, b) = matching_pair(y, k)?;
    let norm_a = a.abs().column_sum().max();
    let lu = a.lu();
    let k_mat = lu.solve(&b).ok_or(Error::SingularSolve {
        context: "K-matrix extraction",
        condition: f64::INFINITY,
    })?;
    let inv_norm = lu
        .try_inverse()
        .map(|inv| inv.abs().column_sum().max())
        .unwrap_or(f64::INFINITY);
    let condition = norm_a * inv_norm;

    let mut k_sym = k_mat.clone();
    let n = k_sym.nrows();
    let mut defect = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            let d = k_sym[(i, j)] - k_sym[(j, i)];
            defect += 2.0 * d * d;
            let s = 0.5 * (k_sym[(i, j)] + k_sym[(j, i)]);
            k_sym[(i, j)] = s;
            k_sym[(j, i)] = s;
        }
    }
    let norm = k_sym.norm();
    let rel_defect = if norm > 0.0 {
        defect.sqrt() / norm
    } else {
        0.0
    };
    if !k_sym.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularSolve {
            context: "K-matrix extraction",
            condition,
        });
    }
    Ok((k_sym, rel_defect, condition))
}

/// Cayley transform S = (I + iK)(I - iK)⁻¹ and the reduced T matrix
/// t = (S - I)/(2ik).
///
/// For real symmetric K the matrix (I - iK) has eigenvalues 1 - iλ with
/// |1 - iλ| >= 1, so the transform only fails when K itself carries
/// non-finite entries (an exact resonance pole hit); callers retry at a
/// perturbed k in that case.
pub fn s_and_t(
    k_matrix: &DMatrix<f64>,
    k: f64,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if !k_matrix.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularSolve {
            context: "Cayley transform of K",
            condition: f64::INFINITY,
        });
    }
    let n = k_matrix.nrows();
    let mut plus = DMatrix::<Complex64>::identity(n, n);
    let mut minus = DMatrix::<Complex64>::identity(n, n);
    for j in 0..n {
        for i in 0..n {
            let ik = Complex64::new(0.0, k_matrix[(i, j)]);
            plus[(i, j)] += ik;
            minus[(i, j)] -= ik;
        }
    }
    let s = minus.lu().solve(&plus).ok_or(Error::SingularSolve {
        context: "Cayley transform of K",
        condition: f64::INFINITY,
    })?;
    let t = t_from_s(&s, k);
    Ok((s, t))
}

fn t_from_s(s: &DMatrix<Complex64>, k: f64) -> DMatrix<Complex64> {
    let n = s.nrows();
    let two_ik = Complex64::new(0.0, 2.0 * k);
    DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        (s[(i, j)] - delta) / two_ik
    })
}

fn unitarity_defect(s: &DMatrix<Complex64>) -> f64 {
    let n = s.nrows();
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                acc += s[(i, m)] * s[(j, m)].conj();
            }
            if i == j {
                acc -= Complex64::new(1.0, 0.0);
            }
            defect += acc.norm_sqr();
        }
    }
    defect.sqrt()
}

fn symmetry_defect_c(s: &DMatrix<Complex64>) -> f64 {
    let n = s.nrows();
    let mut defect = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            defect += 2.0 * (s[(i, j)] - s[(j, i)]).norm_sqr();
        }
    }
    let norm = s.norm();
    if norm > 0.0 {
        defect.sqrt() / norm
    } else {
        0.0
    }
}

/// Optical-theorem defect of the reduced T matrix: per column j,
/// Im t_jj = k Σ_i |t_ij|², normalized by the column's t scale. This is the
/// working check that Im t vanishes at threshold while Re t stays finite.
pub fn optical_defect(t: &DMatrix<Complex64>, k: f64) -> f64 {
    let n = t.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        let sum: f64 = (0..n).map(|i| t[(i, j)].norm_sqr()).sum();
        let lhs = t[(j, j)].im;
        let scale = t[(j, j)].norm().max(1e-30);
        worst = worst.max((lhs - k * sum).abs() / scale);
    }
    worst
}

/// Full matching step: log-derivative in, K/S/t out.
///
/// S comes from the incoming/outgoing solve described in the module docs;
/// K comes from its own solve and is recorded with its condition number.
pub fn solution_from_log_derivative(
    y: &LogDerivative,
    k: f64,
    y_symmetry_defect: f64,
) -> Result<ScatteringSolution> {
    let (k_matrix, k_defect, k_condition) = extract_k_matrix(y, k)?;
    let (a, b) = matching_pair(y, k)?;

    // Ĥ± = -n̂ ± iĵ: (Y Ĥ⁺ - Ĥ⁺') = -A + iB, (Y Ĥ⁻ - Ĥ⁻') = -A - iB.
    let n = a.nrows();
    let mut lhs = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            lhs[(i, j)] = Complex64::new(-a[(i, j)], b[(i, j)]);
            rhs[(i, j)] = Complex64::new(-a[(i, j)], -b[(i, j)]);
        }
    }
    let s = lhs.lu().solve(&rhs).ok_or(Error::SingularSolve {
        context: "S-matrix extraction",
        condition: f64::INFINITY,
    })?;
    if !s.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::SingularSolve {
            context: "S-matrix extraction",
            condition: f64::INFINITY,
        });
    }
    let t = t_from_s(&s, k);

    let diagnostics = SolutionDiagnostics {
        r_match: y.r,
        y_symmetry_defect,
        k_symmetry_defect: k_defect,
        k_condition,
        s_unitarity_defect: unitarity_defect(&s),
        s_symmetry_defect: symmetry_defect_c(&s),
        optical_defect: optical_defect(&t, k),
    };

    Ok(ScatteringSolution {
        k,
        basis: y.basis.clone(),
        k_matrix,
        s_matrix: s,
        t_reduced: t,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{build_basis, Statistics};
    use crate::potential::{CouplingTable, PotentialModel};
    use crate::propagator::{propagate, CoupledSystem, PropagationSettings, StepPolicy};
    use approx::assert_relative_eq;

    #[test]
    fn riccati_l0_closed_forms() {
        let x = 0.5f64;
        let (j, n, jp, np) = riccati_pair(0, x).unwrap();
        assert_relative_eq!(j, x.sin(), max_relative = 1e-15);
        assert_relative_eq!(n, -x.cos(), max_relative = 1e-15);
        assert_relative_eq!(jp, x.cos(), max_relative = 1e-15);
        assert_relative_eq!(np, x.sin(), max_relative = 1e-15);
    }

    #[test]
    fn riccati_reference_values() {
        // Independent multiprecision references for x j_l(x), x y_l(x).
        let cases = [
            (
                1u32,
                2.0,
                0.87079554995998323,
                -0.7012240085521105,
                0.47389965184569008,
                0.76675884082319764,
            ),
            (
                5u32,
                10.0,
                -0.55534511621452181,
                0.93833541678691808,
                -0.77822029306965582,
                -0.48576701059209342,
            ),
            (
                10u32,
                10.0,
                0.64605154492564264,
                -1.7245367208805785,
                0.35491255055926312,
                0.60047882697009241,
            ),
            (
                3u32,
                2.7,
                0.33212274665695732,
                -1.7720774439058056,
                0.38399594186745013,
                0.96208241104112627,
            ),
            (
                2u32,
                1.0,
                0.062035052011373861,
                -3.605017566159969,
                0.17709857491700907,
                5.8282618416439017,
            ),
        ];
        for (l, x, j, n, jp, np) in cases {
            let (jj, nn, jjp, nnp) = riccati_pair(l, x).unwrap();
            assert_relative_eq!(jj, j, max_relative = 1e-12);
            assert_relative_eq!(nn, n, max_relative = 1e-12);
            assert_relative_eq!(jjp, jp, max_relative = 1e-12);
            assert_relative_eq!(nnp, np, max_relative = 1e-12);
        }
        // Strong decay/growth regime, l >> x.
        let (j, n, _, _) = riccati_pair(8, 0.7).unwrap();
        assert_relative_eq!(j, 1.1560344514077087e-9, max_relative = 1e-10);
        assert_relative_eq!(n, -35741864.93213851, max_relative = 1e-11);
    }

    #[test]
    fn wronskian_is_one_everywhere() {
        let w_ref = {
            let (j, n, jp, np) = riccati_pair(0, 0.1).unwrap();
            j * np - jp * n
        };
        assert_relative_eq!(w_ref, 1.0, max_relative = 1e-12);
        for (l, x) in [(3u32, 2.7), (5, 10.0), (12, 4.0), (8, 0.7), (20, 60.0)] {
            let (j, n, jp, np) = riccati_pair(l, x).unwrap();
            assert_relative_eq!(j * np - jp * n, w_ref, max_relative = 1e-10);
        }
    }

    #[test]
    fn upward_vs_downward_j_recurrence_cross_check() {
        // For x comfortably above l the upward recurrence is stable and
        // provides an independent route to ĵ_5(10).
        let x = 10.0f64;
        let mut prev = x.sin();
        let mut cur = x.sin() / x - x.cos();
        for l in 1..5 {
            let next = (2.0 * l as f64 + 1.0) / x * cur - prev;
            prev = cur;
            cur = next;
        }
        let (j, _, _, _) = riccati_pair(5, x).unwrap();
        assert_relative_eq!(j, cur, max_relative = 1e-10);
    }

    #[test]
    fn riccati_rejects_nonpositive_x() {
        assert!(riccati_pair(0, 0.0).is_err());
        assert!(riccati_pair(2, -1.0).is_err());
    }

    #[test]
    fn riccati_overflow_is_reported() {
        // n̂ grows like (2l-1)!!/x^l; far past f64 range the error names it.
        match riccati_pair(220, 1e-4) {
            Err(Error::BesselOverflow { .. }) => {}
            other => panic!("expected overflow report, got {other:?}"),
        }
    }

    fn hard_sphere_solution(r_cut: f64, k: f64) -> ScatteringSolution {
        let basis = build_basis(Statistics::Boson, 0, 0).unwrap();
        let system = crate::propagator::ScalarSystem {
            q: move |_r: f64| Ok(-k * k),
        };
        let settings = PropagationSettings {
            r_start: r_cut,
            r_match: r_cut + 30.0,
            step: StepPolicy::default(),
            k,
        };
        let prop = propagate(&system, &basis, &settings).unwrap();
        solution_from_log_derivative(&prop.log_derivative, k, prop.symmetry_defect).unwrap()
    }

    #[test]
    fn hard_sphere_k_matrix_is_tan_of_minus_k_rc() {
        for r_cut in [5.0, 23.226, 100.0] {
            let k = 1e-4;
            let sol = hard_sphere_solution(r_cut, k);
            assert_relative_eq!(
                sol.k_matrix[(0, 0)],
                (-k * r_cut).tan(),
                max_relative = 1e-9
            );
            // S = e^{2iδ} and |t| = |sin δ|/k.
            let delta = -k * r_cut;
            assert_relative_eq!(
                sol.s_matrix[(0, 0)].re,
                (2.0 * delta).cos(),
                max_relative = 1e-8
            );
            assert_relative_eq!(
                sol.s_matrix[(0, 0)].im,
                (2.0 * delta).sin(),
                max_relative = 1e-8
            );
            assert_relative_eq!(
                sol.t_reduced[(0, 0)].norm(),
                delta.sin().abs() / k,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn trivial_cayley_cases() {
        let k = 1e-3;
        let k0 = DMatrix::from_element(1, 1, 0.0);
        let (s, t) = s_and_t(&k0, k).unwrap();
        assert_eq!(s[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(t[(0, 0)], Complex64::new(0.0, 0.0));

        let delta = 0.7f64;
        let k1 = DMatrix::from_element(1, 1, delta.tan());
        let (s, t) = s_and_t(&k1, k).unwrap();
        assert_relative_eq!(s[(0, 0)].re, (2.0 * delta).cos(), max_relative = 1e-12);
        assert_relative_eq!(s[(0, 0)].im, (2.0 * delta).sin(), max_relative = 1e-12);
        assert_relative_eq!(
            t[(0, 0)].norm(),
            delta.sin().abs() / k,
            max_relative = 1e-12
        );
    }

    fn field_on_solution(k: f64, r_match: f64) -> ScatteringSolution {
        let model = PotentialModel::with_defaults(23.0).unwrap();
        let basis = build_basis(Statistics::Boson, 0, 6).unwrap();
        let table = CouplingTable::new(&basis).unwrap();
        let system = CoupledSystem {
            model: &model,
            c_e: 2e-4,
            table: &table,
            k,
        };
        let settings = PropagationSettings {
            r_start: model.r_cut,
            r_match,
            step: StepPolicy::default(),
            k,
        };
        let prop = propagate(&system, &basis, &settings).unwrap();
        solution_from_log_derivative(&prop.log_derivative, k, prop.symmetry_defect).unwrap()
    }

    #[test]
    fn multichannel_solution_is_unitary_symmetric_and_optical() {
        let k = 1e-4;
        let sol = field_on_solution(k, 4.0e6);
        assert!(sol.diagnostics.s_unitarity_defect < 1e-10);
        assert!(sol.diagnostics.s_symmetry_defect < 1e-8);
        assert!(sol.diagnostics.k_symmetry_defect < 1e-8);
        assert!(sol.diagnostics.optical_defect < 1e-6);
        // Time-reversal symmetry of t.
        let n = sol.basis.len();
        for i in 0..n {
            for j in 0..i {
                let d = (sol.t_reduced[(i, j)] - sol.t_reduced[(j, i)]).norm();
                assert!(d <= 1e-8 * sol.t_reduced[(i, j)].norm().max(1e-12));
            }
        }
    }

    #[test]
    fn zero_coupling_k_matrix_is_diagonal() {
        let model = PotentialModel::with_defaults(23.0).unwrap();
        let basis = build_basis(Statistics::Boson, 0, 4).unwrap();
        let table = CouplingTable::new(&basis).unwrap();
        let k = 1e-4;
        let system = CoupledSystem {
            model: &model,
            c_e: 0.0,
            table: &table,
            k,
        };
        let settings = PropagationSettings {
            r_start: model.r_cut,
            r_match: 3.0e4,
            step: StepPolicy::default(),
            k,
        };
        let prop = propagate(&system, &basis, &settings).unwrap();
        let sol =
            solution_from_log_derivative(&prop.log_derivative, k, prop.symmetry_defect).unwrap();
        let scale = sol.k_matrix[(0, 0)].abs();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i != j {
                    assert!(
                        sol.k_matrix[(i, j)].abs() <= 1e-10 * scale,
                        "K[{i}{j}] = {} leaks between decoupled channels",
                        sol.k_matrix[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn cayley_of_k_agrees_with_direct_s() {
        let k = 1e-4;
        let sol = field_on_solution(k, 4.0e6);
        let (s_from_k, _) = s_and_t(&sol.k_matrix, k).unwrap();
        let diff = (&s_from_k - &sol.s_matrix).norm() / sol.s_matrix.norm();
        assert!(
            diff < 1e-8,
            "Cayley route differs from direct route by {diff}"
        );
    }

    #[test]
    fn matching_radius_independence() {
        let k = 1e-4;
        let sol1 = field_on_solution(k, 4.0e6);
        let sol2 = field_on_solution(k, 6.5e6);
        let n = sol1.basis.len();
        for i in 0..n {
            for j in 0..n {
                let a = sol1.k_matrix[(i, j)];
                let b = sol2.k_matrix[(i, j)];
                assert!(
                    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()) + 1e-9,
                    "K[{i}{j}] drifts with r_match: {a} vs {b}"
                );
            }
        }
    }
}
