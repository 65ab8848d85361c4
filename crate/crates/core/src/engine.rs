//! Orchestration of single solves: matching-radius selection, one-block
//! pipeline (assemble W, propagate, match), and the multi-block solve with
//! convergence escalation in l_max and m_max.

use crate::channels::{build_basis, ChannelBasis, Statistics};
use crate::error::{Error, Result};
use crate::matching::{solution_from_log_derivative, ScatteringSolution};
use crate::observables::{cross_section, CrossSectionReport};
use crate::potential::{CouplingTable, PotentialModel};
use crate::propagator::{propagate, CoupledSystem, PropagationSettings, StepPolicy};

/// Default working wavenumber for "zero-energy" quantities, in a.u.⁻¹.
pub const DEFAULT_K: f64 = 1e-6;

/// Numerical controls for a solve. `r_match` is chosen automatically from
/// the potential tail unless pinned by `r_match_override`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalParams {
    pub k: f64,
    pub l_max: u32,
    pub m_max: u32,
    pub step: StepPolicy,
    /// Matching criterion: r_match is the smallest r with
    /// max_ij |2μ V_ij(r)| <= eps_match k².
    pub eps_match: f64,
    /// Cap on the criterion radius.
    pub r_match_cap: f64,
    /// With any 1/r³ coupling active the match also waits for
    /// k r >= x_min_tail, so the quasi-long-range phase is integrated rather
    /// than truncated.
    pub x_min_tail: f64,
    /// Multiplies the chosen r_match; convergence audits double it.
    pub r_match_scale: f64,
    /// Relative σ stability target for escalation.
    pub sigma_tol: f64,
}

impl NumericalParams {
    pub fn for_statistics(statistics: Statistics) -> Self {
        NumericalParams {
            k: DEFAULT_K,
            l_max: match statistics {
                Statistics::Boson => 8,
                Statistics::Fermion => 9,
            },
            m_max: 4,
            step: StepPolicy::default(),
            eps_match: 1e-6,
            r_match_cap: 1e6,
            x_min_tail: 60.0,
            r_match_scale: 1.0,
            sigma_tol: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if !(self.k > 0.0) {
            return Err(Error::invalid("k", format!("must be > 0, got {}", self.k)));
        }
        if self.m_max > self.l_max {
            return Err(Error::invalid(
                "m_max",
                format!(
                    "must be <= l_max, got m_max = {} > l_max = {}",
                    self.m_max, self.l_max
                ),
            ));
        }
        if !(self.eps_match > 0.0 && self.r_match_cap > 0.0 && self.r_match_scale > 0.0) {
            return Err(Error::invalid(
                "matching criterion",
                "eps_match, r_match_cap, r_match_scale must be > 0".to_string(),
            ));
        }
        Ok(())
    }
}

/// Matching radius for one block, plus the achieved |2μV|/k² ratio there.
///
/// The criterion radius solves max_ij |2μ V_ij| = eps k² analytically for
/// each tail term (1/r⁶, 1/r⁸, 1/r¹⁰ dispersion, 1/r³ field) and takes the
/// largest, capped at `r_match_cap`. On top of that, whenever the basis
/// feels the field at all, the match waits for k r >= x_min_tail: a 1/r³
/// tail contributes phase out to k r of order 10, and cutting it off at the
/// capped criterion radius would silently bias every l >= 1 threshold.
pub fn select_r_match(
    model: &PotentialModel,
    c_e: f64,
    table: &CouplingTable,
    params: &NumericalParams,
) -> (f64, f64) {
    let k2 = params.k * params.k;
    let bound = params.eps_match * k2;
    let two_mu = 2.0 * model.reduced_mass;

    let mut r = (two_mu * model.c6 / bound).powf(1.0 / 6.0);
    if model.c8 > 0.0 {
        r = r.max((two_mu * model.c8 / bound).powf(1.0 / 8.0));
    }
    if model.c10 > 0.0 {
        r = r.max((two_mu * model.c10 / bound).powf(1.0 / 10.0));
    }
    let field_scale = two_mu * c_e * table.g_max_abs();
    if field_scale > 0.0 {
        r = r.max((field_scale / bound).powf(1.0 / 3.0));
    }
    r = r.min(params.r_match_cap);
    if field_scale > 0.0 {
        r = r.max(params.x_min_tail / params.k);
    }
    r = (r * params.r_match_scale).max(model.r_cut + 1.0);

    let tail = two_mu * (model.c6 / r.powi(6) + model.c8 / r.powi(8) + model.c10 / r.powi(10))
        + field_scale / r.powi(3);
    (r, tail / k2)
}

/// Solve one symmetry block end to end: W(r) assembly, log-derivative
/// propagation from the wall, Riccati-Bessel matching.
pub fn solve_block(
    model: &PotentialModel,
    c_e: f64,
    basis: &ChannelBasis,
    params: &NumericalParams,
) -> Result<ScatteringSolution> {
    params.validate()?;
    let table = CouplingTable::new(basis)?;
    let (r_match, _ratio) = select_r_match(model, c_e, &table, params);
    let system = CoupledSystem {
        model,
        c_e,
        table: &table,
        k: params.k,
    };
    let settings = PropagationSettings {
        r_start: model.r_cut,
        r_match,
        step: params.step,
        k: params.k,
    };
    let prop = propagate(&system, basis, &settings)?;
    solution_from_log_derivative(&prop.log_derivative, params.k, prop.symmetry_defect)
}

/// Cross section at fixed l_max/m_max: solve blocks m = 0..m_max and
/// assemble. Blocks with negative m are mirror images of the positive ones
/// (the P2 elements are even in m) and are folded in by the assembly.
pub fn cross_section_at(
    model: &PotentialModel,
    c_e: f64,
    statistics: Statistics,
    params: &NumericalParams,
) -> Result<CrossSectionReport> {
    params.validate()?;
    let mut solutions = Vec::with_capacity(params.m_max as usize + 1);
    for m in 0..=params.m_max as i32 {
        let basis = match build_basis(statistics, m, params.l_max) {
            Ok(b) => b,
            // A block whose smallest parity-compatible l exceeds l_max
            // contributes nothing.
            Err(Error::EmptyBasis { .. }) => continue,
            Err(e) => return Err(e),
        };
        solutions.push(solve_block(model, c_e, &basis, params)?);
    }
    cross_section(&solutions, statistics)
}

/// How a converged solve got there.
#[derive(Debug, Clone, Copy)]
pub struct Convergence {
    pub l_max: u32,
    pub m_max: u32,
    pub r_match: f64,
    pub relative_change: f64,
    pub converged: bool,
}

pub const L_MAX_CEILING: u32 = 24;
pub const M_MAX_CEILING: u32 = 8;

/// Escalate l_max (+2), m_max (+1), and finally the matching radius (x2)
/// until σ is stable to `params.sigma_tol`, then report at the stable
/// settings. Ceilings keep pathological points (resonance poles) from
/// escalating forever; hitting one is reported as `converged = false`.
pub fn converged_cross_section(
    model: &PotentialModel,
    c_e: f64,
    statistics: Statistics,
    params: &NumericalParams,
) -> Result<(CrossSectionReport, Convergence)> {
    let mut p = *params;
    let mut report = cross_section_at(model, c_e, statistics, &p)?;
    let mut last_change = f64::INFINITY;

    loop {
        if p.l_max + 2 > L_MAX_CEILING {
            break;
        }
        let mut pl = p;
        pl.l_max += 2;
        let refined = cross_section_at(model, c_e, statistics, &pl)?;
        last_change = relative_change(refined.sigma, report.sigma);
        if last_change <= p.sigma_tol {
            break;
        }
        p = pl;
        report = refined;
    }
    loop {
        if p.m_max + 1 > M_MAX_CEILING || p.m_max + 1 > p.l_max {
            break;
        }
        let mut pm = p;
        pm.m_max += 1;
        let refined = cross_section_at(model, c_e, statistics, &pm)?;
        last_change = relative_change(refined.sigma, report.sigma);
        if last_change <= p.sigma_tol {
            break;
        }
        p = pm;
        report = refined;
    }
    // One audit of the matching radius; adopt the doubled radius if it moves σ.
    let mut converged = true;
    {
        let mut pr = p;
        pr.r_match_scale *= 2.0;
        let refined = cross_section_at(model, c_e, statistics, &pr)?;
        let change = relative_change(refined.sigma, report.sigma);
        if change > p.sigma_tol {
            p = pr;
            report = refined;
            converged = false;
            last_change = change;
        } else {
            last_change = last_change.min(change);
        }
    }
    if p.l_max + 2 > L_MAX_CEILING && last_change > p.sigma_tol {
        converged = false;
    }

    let conv = Convergence {
        l_max: p.l_max,
        m_max: p.m_max,
        r_match: report.r_match,
        relative_change: last_change,
        converged,
    };
    Ok((report, conv))
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
