//! Orchestration: calibrate the cutoff radius to a target scattering length,
//! sweep electric fields, locate field-induced zero-energy resonances, and
//! emit plot-ready datasets.

use crate::channels::Statistics;
use crate::engine::{converged_cross_section, NumericalParams};
use crate::error::{Error, Result};
use crate::observables::{count_s_wave_nodes, zero_field_scattering_length};
use crate::potential::PotentialModel;
use crate::units::{coupling_coefficient, field_to_au, FieldConfig, DEFAULT_POLARIZABILITY};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Everything identifying the physics of a run; stamped on every output.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelFingerprint {
    pub r_cut: f64,
    pub c6: f64,
    pub c8: f64,
    pub c10: f64,
    pub reduced_mass: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
}

impl ModelFingerprint {
    pub fn new(model: &PotentialModel, alpha_a: f64, alpha_b: f64) -> Self {
        ModelFingerprint {
            r_cut: model.r_cut,
            c6: model.c6,
            c8: model.c8,
            c10: model.c10,
            reduced_mass: model.reduced_mass,
            alpha_a,
            alpha_b,
        }
    }
}

/// One row of a field scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub field_kvcm: f64,
    pub field_au: f64,
    pub c_e_au: f64,
    pub statistics: Statistics,
    pub sigma_au: Option<f64>,
    pub log10_sigma: Option<f64>,
    pub asymmetry: Option<f64>,
    pub a_eff_au: Option<f64>,
    pub k_au: f64,
    pub l_max: u32,
    pub m_max: u32,
    pub r_match_au: Option<f64>,
    pub status: String,
    pub fingerprint: ModelFingerprint,
}

/// Exact column order of the CSV schema.
pub const CSV_COLUMNS: &str =
    "field_kvcm,field_au,c_e_au,statistics,sigma_au,log10_sigma,asymmetry,a_eff_au,k_au,l_max,m_max,r_match_au,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

/// Field grid in kV/cm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldGrid {
    pub start_kvcm: f64,
    pub stop_kvcm: f64,
    pub count: usize,
    pub scale: GridScale,
}

impl FieldGrid {
    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::invalid("field grid", "count must be >= 1"));
        }
        if !(self.start_kvcm >= 0.0) || !(self.stop_kvcm >= self.start_kvcm) {
            return Err(Error::invalid(
                "field grid",
                format!(
                    "need 0 <= start <= stop, got [{}, {}]",
                    self.start_kvcm, self.stop_kvcm
                ),
            ));
        }
        if self.scale == GridScale::Log && !(self.start_kvcm > 0.0) {
            return Err(Error::invalid("field grid", "log scale needs start > 0"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start_kvcm];
        }
        let n = self.count as f64 - 1.0;
        (0..self.count)
            .map(|i| match self.scale {
                GridScale::Linear => {
                    self.start_kvcm + (self.stop_kvcm - self.start_kvcm) * i as f64 / n
                }
                GridScale::Log => (self.start_kvcm.ln()
                    + (self.stop_kvcm.ln() - self.start_kvcm.ln()) * i as f64 / n)
                    .exp(),
            })
            .collect()
    }
}

/// Full description of one scan run: the model (explicit R_c or a target
/// a_sc to calibrate first), the field grid, and numerical overrides.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub model: PotentialModel,
    /// When set, R_c is calibrated to this zero-field scattering length
    /// before the scan.
    pub target_a: Option<f64>,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub statistics: Statistics,
    pub grid: FieldGrid,
    pub params: NumericalParams,
    pub workers: usize,
}

impl ScanConfig {
    pub fn new(statistics: Statistics) -> Self {
        ScanConfig {
            model: PotentialModel::with_defaults(crate::potential::DEFAULT_R_CUT)
                .expect("defaults are valid"),
            target_a: None,
            alpha_a: DEFAULT_POLARIZABILITY,
            alpha_b: DEFAULT_POLARIZABILITY,
            statistics,
            grid: FieldGrid {
                start_kvcm: 0.0,
                stop_kvcm: 1000.0,
                count: 11,
                scale: GridScale::Linear,
            },
            params: NumericalParams::for_statistics(statistics),
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.params.validate()?;
        FieldConfig::new(0.0, self.alpha_a, self.alpha_b)?;
        Ok(())
    }

    pub fn fingerprint(&self) -> ModelFingerprint {
        ModelFingerprint::new(&self.model, self.alpha_a, self.alpha_b)
    }
}

/// Calibration outcome.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Calibration {
    pub r_cut: f64,
    pub achieved_a: f64,
    pub residual: f64,
    pub nodes: usize,
    pub iterations: usize,
}

fn rc_tolerance(target: f64) -> f64 {
    (1e-3 * target.abs()).max(1e-2)
}

/// Calibrate the cutoff radius so the zero-field scattering length hits
/// `target_a`, by secant/bisection on one monotone branch of a(R_c).
///
/// The bracket must not straddle a pole of a(R_c). Poles are detected two
/// ways: the s-wave node count jumps across one, and — since the well only
/// shallows as R_c grows — a(R_c) is increasing within any branch, so a
/// decreasing bracket must contain a jump through ±∞ even when the
/// outermost node sits beyond the counting radius. Either detection
/// localizes the pole by bisection before the error is raised.
pub fn find_rc(model: &PotentialModel, target_a: f64, bracket: (f64, f64)) -> Result<Calibration> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::invalid(
            "bracket",
            format!("need 0 < lo < hi, got ({lo}, {hi})"),
        ));
    }
    let a_at =
        |rc: f64| -> Result<f64> { Ok(zero_field_scattering_length(&model.with_r_cut(rc)?)?.a) };
    let nodes_at = |rc: f64| -> Result<usize> { count_s_wave_nodes(&model.with_r_cut(rc)?) };

    let n_lo = nodes_at(lo)?;
    let n_hi = nodes_at(hi)?;
    if n_lo != n_hi {
        let (jl, jh) = bisect_jump(lo, hi, &|rc| Ok(nodes_at(rc)? == n_lo))?;
        return Err(Error::PoleInBracket {
            lo: jl,
            hi: jh,
            n_lo,
            n_hi,
        });
    }

    let mut a_lo = a_at(lo)?;
    let mut a_hi = a_at(hi)?;
    if a_lo > a_hi {
        // Same node count but decreasing a: the bracket straddles a pole
        // whose outer node hides beyond the counting radius.
        let (jl, jh) = bisect_jump(lo, hi, &|rc| Ok(a_at(rc)? >= a_lo))?;
        return Err(Error::PoleInBracket {
            lo: jl,
            hi: jh,
            n_lo,
            n_hi,
        });
    }
    if target_a < a_lo || target_a > a_hi {
        return Err(Error::TargetOutsideBranch {
            target: target_a,
            a_min: a_lo,
            a_max: a_hi,
            lo,
            hi,
        });
    }

    let tol = rc_tolerance(target_a);
    let mut best = (lo, a_lo);
    for iter in 0..200 {
        // Secant guess, safeguarded by bisection.
        let mut rc = if a_hi > a_lo {
            lo + (target_a - a_lo) * (hi - lo) / (a_hi - a_lo)
        } else {
            0.5 * (lo + hi)
        };
        if !(rc > lo && rc < hi) {
            rc = 0.5 * (lo + hi);
        }
        let a = a_at(rc)?;
        if (a - target_a).abs() < (best.1 - target_a).abs() {
            best = (rc, a);
        }
        if (a - target_a).abs() <= tol {
            return Ok(Calibration {
                r_cut: rc,
                achieved_a: a,
                residual: (a - target_a).abs(),
                nodes: n_lo,
                iterations: iter + 1,
            });
        }
        if a < target_a {
            lo = rc;
            a_lo = a;
        } else {
            hi = rc;
            a_hi = a;
        }
        if hi - lo < 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    if (best.1 - target_a).abs() <= tol {
        return Ok(Calibration {
            r_cut: best.0,
            achieved_a: best.1,
            residual: (best.1 - target_a).abs(),
            nodes: n_lo,
            iterations: 200,
        });
    }
    Err(Error::CalibrationStalled {
        iterations: 200,
        best: (best.1 - target_a).abs(),
    })
}

/// Bisect for the point in (lo, hi) where `left_side(rc)` first turns false,
/// returning the final sub-bracket.
fn bisect_jump(
    mut lo: f64,
    mut hi: f64,
    left_side: &dyn Fn(f64) -> Result<bool>,
) -> Result<(f64, f64)> {
    for _ in 0..40 {
        if hi - lo < 1e-6 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if left_side(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Scan R_c around the model's current cutoff for the branch of a(R_c) whose
/// range contains `target_a`, then hand a pole-free bracket to [`find_rc`].
///
/// Branches end in poles where |a| diverges, so targets larger than any
/// scanned sample are reached by walking the bracket end toward the adjacent
/// pole until the branch range covers the target.
pub fn calibrate_auto(model: &PotentialModel, target_a: f64) -> Result<Calibration> {
    let center = model.r_cut;
    let scan_lo = 0.75 * center;
    let scan_hi = 1.25 * center;
    let steps = 60usize;

    let a_at = |rc: f64| -> Result<Option<f64>> {
        match zero_field_scattering_length(&model.with_r_cut(rc)?) {
            Ok(est) => Ok(Some(est.a)),
            Err(Error::NearResonance { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut samples: Vec<(f64, Option<f64>)> = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let rc = scan_lo + (scan_hi - scan_lo) * i as f64 / steps as f64;
        samples.push((rc, a_at(rc)?));
    }

    let mut fallback: Option<Error> = None;
    for window in samples.windows(2) {
        let (r0, a0) = window[0];
        let (r1, a1) = window[1];
        let (Some(a0), Some(a1)) = (a0, a1) else {
            continue;
        };
        if a0 <= a1 {
            // Same branch (a increasing): direct hit or nothing.
            if target_a >= a0 && target_a <= a1 {
                match find_rc(model, target_a, (r0, r1)) {
                    Ok(c) => return Ok(c),
                    Err(e) => fallback = Some(e),
                }
            }
            continue;
        }
        // A pole sits inside (r0, r1): the branch through r0 climbs to +∞
        // just below it, and the branch through r1 falls to -∞ just above.
        if target_a >= a0 {
            if let Some(c) = try_branch_tail(model, target_a, r0, a0, r1, true)? {
                return Ok(c);
            }
        }
        if target_a <= a1 {
            if let Some(c) = try_branch_tail(model, target_a, r1, a1, r0, false)? {
                return Ok(c);
            }
        }
    }
    Err(fallback.unwrap_or_else(|| {
        let finite: Vec<f64> = samples.iter().filter_map(|&(_, a)| a).collect();
        Error::TargetOutsideBranch {
            target: target_a,
            a_min: finite.iter().cloned().fold(f64::INFINITY, f64::min),
            a_max: finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            lo: scan_lo,
            hi: scan_hi,
        }
    }))
}

/// Walk from `anchor` (where a = a_anchor, on the target's branch) toward the
/// pole hiding before `other_end` until the branch covers `target_a`, then
/// calibrate inside the walked bracket.
fn try_branch_tail(
    model: &PotentialModel,
    target_a: f64,
    anchor: f64,
    a_anchor: f64,
    other_end: f64,
    upward: bool,
) -> Result<Option<Calibration>> {
    let a_at = |rc: f64| -> Result<Option<f64>> {
        match zero_field_scattering_length(&model.with_r_cut(rc)?) {
            Ok(est) => Ok(Some(est.a)),
            Err(Error::NearResonance { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    // Geometrically approach the pole side of the panel.
    let mut frac = 0.5;
    for _ in 0..24 {
        let probe = anchor + (other_end - anchor) * frac;
        if let Some(a_probe) = a_at(probe)? {
            let on_branch = if upward {
                a_probe >= a_anchor
            } else {
                a_probe <= a_anchor
            };
            let covers = if upward {
                a_probe >= target_a
            } else {
                a_probe <= target_a
            };
            if on_branch && covers {
                let bracket = if upward {
                    (anchor, probe)
                } else {
                    (probe, anchor)
                };
                return find_rc(model, target_a, bracket).map(Some);
            }
            if !on_branch {
                // Jumped past the pole; tighten.
                frac *= 0.5;
                continue;
            }
        } else {
            // Near-resonance: beyond every finite target; pull back a touch
            // so the endpoint is evaluable.
            frac *= 0.9;
            continue;
        }
        // Still on the branch but short of the target: move closer to the pole.
        frac = 0.5 * (1.0 + frac);
    }
    Ok(None)
}

fn c_e_for(config: &ScanConfig, field_kvcm: f64) -> Result<f64> {
    let cfg = FieldConfig::new(field_to_au(field_kvcm)?, config.alpha_a, config.alpha_b)?;
    Ok(coupling_coefficient(&cfg))
}

fn record_for_point(config: &ScanConfig, model: &PotentialModel, field_kvcm: f64) -> SweepRecord {
    let fingerprint = ModelFingerprint::new(model, config.alpha_a, config.alpha_b);
    let field_au = field_kvcm * crate::units::KVCM_TO_AU;
    let c_e = match c_e_for(config, field_kvcm) {
        Ok(v) => v,
        Err(e) => {
            return SweepRecord {
                field_kvcm,
                field_au,
                c_e_au: f64::NAN,
                statistics: config.statistics,
                sigma_au: None,
                log10_sigma: None,
                asymmetry: None,
                a_eff_au: None,
                k_au: config.params.k,
                l_max: config.params.l_max,
                m_max: config.params.m_max,
                r_match_au: None,
                status: sanitize_status(&e.to_string()),
                fingerprint,
            }
        }
    };
    // An exact K-matrix pole hit makes a solve singular; one retry at a
    // slightly perturbed wavenumber steps off the pole.
    let mut outcome = converged_cross_section(model, c_e, config.statistics, &config.params);
    if matches!(outcome, Err(crate::error::Error::SingularSolve { .. })) {
        let mut nudged = config.params;
        nudged.k *= 1.0 + 1e-3;
        outcome = converged_cross_section(model, c_e, config.statistics, &nudged);
    }
    match outcome {
        Ok((report, conv)) => SweepRecord {
            field_kvcm,
            field_au,
            c_e_au: c_e,
            statistics: config.statistics,
            sigma_au: Some(report.sigma),
            log10_sigma: finite(report.sigma.log10()),
            asymmetry: report.asymmetry,
            a_eff_au: report.a_eff,
            k_au: report.k,
            l_max: conv.l_max,
            m_max: conv.m_max,
            r_match_au: Some(conv.r_match),
            status: if conv.converged {
                "ok".to_string()
            } else {
                format!("unconverged(delta={:.2e})", conv.relative_change)
            },
            fingerprint,
        },
        Err(e) => SweepRecord {
            field_kvcm,
            field_au,
            c_e_au: c_e,
            statistics: config.statistics,
            sigma_au: None,
            log10_sigma: None,
            asymmetry: None,
            a_eff_au: None,
            k_au: config.params.k,
            l_max: config.params.l_max,
            m_max: config.params.m_max,
            r_match_au: None,
            status: sanitize_status(&e.to_string()),
            fingerprint,
        },
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn sanitize_status(s: &str) -> String {
    s.replace(',', ";")
}

/// One record per grid point, in grid order. Per-point solver failures land
/// in the row's status column; they never abort the sweep. Grid points are
/// independent and run on `config.workers` threads (0 = rayon default).
pub fn sweep_field(config: &ScanConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let model = match config.target_a {
        Some(target) => {
            let cal = calibrate_auto(&config.model, target)?;
            config.model.with_r_cut(cal.r_cut)?
        }
        None => config.model,
    };
    let points = config.grid.points();
    let run = || -> Vec<SweepRecord> {
        points
            .par_iter()
            .map(|&f| record_for_point(config, &model, f))
            .collect()
    };
    let records = if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        pool.install(run)
    } else {
        run()
    };
    Ok(records)
}

/// Resonance search outcome: the field where a new bound state appears.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub field_kvcm: f64,
    /// a_eff on the flanks of the pole (below, above), a.u.
    pub a_eff_flanks: (f64, f64),
    /// Asymmetry parameter at the flanking points.
    pub asymmetry_flanks: (f64, f64),
    pub evaluations: usize,
}

/// Locate a zero-energy resonance: the field at which 1/a_eff crosses zero
/// with |a_eff| large on both flanks. Refining on 1/a_eff turns the pole of
/// a_eff into a bracketed root; sign changes of a_eff through *zero* (the
/// anisotropy window, where |a_eff| is small) are rejected as candidates.
pub fn find_resonance(
    model: &PotentialModel,
    statistics: Statistics,
    field_bracket_kvcm: (f64, f64),
    alpha_a: f64,
    alpha_b: f64,
    params: &NumericalParams,
) -> Result<ResonanceReport> {
    if statistics != Statistics::Boson {
        return Err(Error::invalid(
            "statistics",
            "the a_eff pole search is defined for the boson S-wave block",
        ));
    }
    let (lo, hi) = field_bracket_kvcm;
    if !(lo >= 0.0) || !(hi > lo) {
        return Err(Error::invalid(
            "field bracket",
            format!("need 0 <= lo < hi, got ({lo}, {hi})"),
        ));
    }
    let mut evaluations = 0usize;
    let mut eval = |field: f64| -> Result<(f64, f64)> {
        let cfg = FieldConfig::new(field_to_au(field)?, alpha_a, alpha_b)?;
        let c_e = coupling_coefficient(&cfg);
        let (report, _) = converged_cross_section(model, c_e, statistics, params)?;
        evaluations += 1;
        let a = report.a_eff.expect("boson report carries a_eff");
        Ok((a, report.asymmetry.unwrap_or(0.0)))
    };

    // Coarse scan, then pick the sign change of g = 1/a_eff with the largest
    // |a_eff| on its flanks (a pole, not a zero crossing).
    let panels = 24usize;
    let mut grid = Vec::with_capacity(panels + 1);
    for i in 0..=panels {
        let f = lo + (hi - lo) * i as f64 / panels as f64;
        let (a, d) = eval(f)?;
        grid.push((f, a, d));
    }
    let mut candidate: Option<(usize, f64)> = None;
    for i in 0..panels {
        let (_, a0, _) = grid[i];
        let (_, a1, _) = grid[i + 1];
        if a0.signum() != a1.signum() && a0 != 0.0 {
            let flank = a0.abs().min(a1.abs());
            if candidate.is_none_or(|(_, best)| flank > best) {
                candidate = Some((i, flank));
            }
        }
    }
    let (panel, flank) = candidate.ok_or(Error::NoResonanceFound)?;
    // A pole panel has large a_eff on both sides; a zero crossing has small.
    if flank < 1e2 {
        return Err(Error::NoResonanceFound);
    }

    let (mut f_lo, mut a_lo, mut d_lo) = grid[panel];
    let (mut f_hi, mut a_hi, mut d_hi) = grid[panel + 1];
    for _ in 0..60 {
        if a_lo.abs() > 1e5 && a_hi.abs() > 1e5 {
            break;
        }
        let mid = 0.5 * (f_lo + f_hi);
        if f_hi - f_lo < 1e-9 * f_hi.max(1.0) {
            break;
        }
        let (a_mid, d_mid) = eval(mid)?;
        // Bisect on the sign of 1/a_eff = sign of a_eff.
        if a_mid.signum() == a_lo.signum() {
            f_lo = mid;
            a_lo = a_mid;
            d_lo = d_mid;
        } else {
            f_hi = mid;
            a_hi = a_mid;
            d_hi = d_mid;
        }
    }
    if !(a_lo.abs() > 1e5 && a_hi.abs() > 1e5) {
        return Err(Error::NoResonanceFound);
    }
    Ok(ResonanceReport {
        field_kvcm: 0.5 * (f_lo + f_hi),
        a_eff_flanks: (a_lo, a_hi),
        asymmetry_flanks: (d_lo, d_hi),
        evaluations,
    })
}

/// Write records as CSV with a `#`-commented fingerprint header.
pub fn write_csv<W: Write>(
    out: &mut W,
    config: &ScanConfig,
    records: &[SweepRecord],
) -> std::io::Result<()> {
    let fp = config.fingerprint();
    writeln!(out, "# efield-scatter field sweep")?;
    writeln!(out, "# statistics = {}", config.statistics)?;
    writeln!(out, "# r_cut_au = {:.10e}", fp.r_cut)?;
    writeln!(out, "# c6_au = {:.10e}", fp.c6)?;
    writeln!(out, "# c8_au = {:.10e}", fp.c8)?;
    writeln!(out, "# c10_au = {:.10e}", fp.c10)?;
    writeln!(out, "# reduced_mass_au = {:.10e}", fp.reduced_mass)?;
    writeln!(out, "# alpha_a_au = {:.10e}", fp.alpha_a)?;
    writeln!(out, "# alpha_b_au = {:.10e}", fp.alpha_b)?;
    writeln!(out, "# k_au = {:.10e}", config.params.k)?;
    writeln!(
        out,
        "# grid_kvcm = {}:{}:{} ({:?})",
        config.grid.start_kvcm, config.grid.stop_kvcm, config.grid.count, config.grid.scale
    )?;
    writeln!(
        out,
        "# l_max_start = {} ; m_max_start = {} ; sigma_tol = {:.1e}",
        config.params.l_max, config.params.m_max, config.params.sigma_tol
    )?;
    writeln!(
        out,
        "# eta = {} ; h_max_au = {:.3e} ; h0_au = {:.3e}",
        config.params.step.eta, config.params.step.h_max, config.params.step.h0
    )?;
    writeln!(out, "{CSV_COLUMNS}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f(r.field_kvcm),
            fmt_f(r.field_au),
            fmt_f(r.c_e_au),
            r.statistics,
            fmt_opt(r.sigma_au),
            fmt_opt(r.log10_sigma),
            fmt_opt(r.asymmetry),
            fmt_opt(r.a_eff_au),
            fmt_f(r.k_au),
            r.l_max,
            r.m_max,
            fmt_opt(r.r_match_au),
            r.status
        )?;
    }
    Ok(())
}

/// Write records as JSON lines, one full record per line.
pub fn write_jsonl<W: Write>(out: &mut W, records: &[SweepRecord]) -> std::io::Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        String::new()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}
