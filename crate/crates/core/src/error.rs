use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid {what}: {why}")]
    InvalidInput { what: &'static str, why: String },

    #[error("r = {r} a.u. is at or inside the hard wall R_c = {r_cut} a.u.")]
    InsideHardWall { r: f64, r_cut: f64 },

    #[error("no channels for (statistics = {statistics}, m = {m}, l_max = {l_max})")]
    EmptyBasis {
        statistics: &'static str,
        m: i32,
        l_max: u32,
    },

    #[error("|m| = {m} exceeds l = {l}")]
    MagneticNumberOutOfRange { l: u32, m: i32 },

    #[error("sector size {h:.3e} a.u. fell below {min:.0e} a.u. at r = {r:.6e}; potential is pathological")]
    StepUnderflow { r: f64, h: f64, min: f64 },

    #[error("near-singular propagation sector at r = {r:.6e} a.u.")]
    SingularSector { r: f64 },

    #[error("singular linear solve in {context} (condition estimate {condition:.3e})")]
    SingularSolve {
        context: &'static str,
        condition: f64,
    },

    #[error("Riccati-Bessel overflow at l = {l}, x = {x:.3e} (need x of order l)")]
    BesselOverflow { l: u32, x: f64 },

    #[error("near zero-energy resonance: |a| exceeds {limit:.1e} a.u.")]
    NearResonance { limit: f64 },

    #[error("scattering-length pole inside bracket: node count jumps from {n_lo} to {n_hi} over R_c in [{lo:.6}, {hi:.6}]")]
    PoleInBracket {
        lo: f64,
        hi: f64,
        n_lo: usize,
        n_hi: usize,
    },

    #[error("target a = {target:.6e} outside branch range [{a_min:.6e}, {a_max:.6e}] for R_c in [{lo:.6}, {hi:.6}]")]
    TargetOutsideBranch {
        target: f64,
        a_min: f64,
        a_max: f64,
        lo: f64,
        hi: f64,
    },

    #[error("calibration stalled after {iterations} iterations (best |a - target| = {best:.3e})")]
    CalibrationStalled { iterations: usize, best: f64 },

    #[error("no resonance found: 1/a_eff has no admissible sign change in the field bracket")]
    NoResonanceFound,

    #[error("solutions carry mixed wavenumbers ({k1:.6e} vs {k2:.6e})")]
    MixedWavenumbers { k1: f64, k2: f64 },

    #[error("m-blocks incomplete: {why}")]
    IncompleteBlocks { why: String },
}

impl Error {
    pub fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            why: why.into(),
        }
    }
}
