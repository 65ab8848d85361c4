//! Partial-wave channel bases and the angular matrix elements of P2(cos θ).
//!
//! The induced dipole term is azimuthally symmetric about the field axis, so
//! m is conserved exactly and the solver works one m-block at a time. Within
//! a block the channels are the partial waves (l, m) of fixed parity: even l
//! for identical bosons, odd l for identical fermions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Exchange symmetry of the colliding pair, selecting the parity of l.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    /// Parity of allowed l: 0 for bosons, 1 for fermions.
    pub fn parity(self) -> u32 {
        match self {
            Statistics::Boson => 0,
            Statistics::Fermion => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" | "bosons" => Ok(Statistics::Boson),
            "fermion" | "fermions" => Ok(Statistics::Fermion),
            other => Err(Error::invalid(
                "statistics",
                format!("expected boson|fermion, got {other:?}"),
            )),
        }
    }
}

/// One partial wave (l, m), with m measured along the field axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub l: u32,
    pub m: i32,
}

impl Channel {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::MagneticNumberOutOfRange { l, m });
        }
        Ok(Channel { l, m })
    }
}

/// Ordered partial-wave basis for one symmetry block (fixed statistics, fixed m).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelBasis {
    statistics: Statistics,
    m_block: i32,
    channels: Vec<Channel>,
}

impl ChannelBasis {
    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn m_block(&self) -> i32 {
        self.m_block
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Largest l in the basis.
    pub fn l_max(&self) -> u32 {
        self.channels.last().map(|c| c.l).unwrap_or(0)
    }

    /// Test hook: build a block from an explicit channel list (shared m,
    /// any order). Propagation must be order-covariant, which the tests
    /// check by permuting channels through this constructor.
    #[cfg(test)]
    pub(crate) fn from_channels_unchecked(
        statistics: Statistics,
        m_block: i32,
        channels: Vec<Channel>,
    ) -> Self {
        ChannelBasis {
            statistics,
            m_block,
            channels,
        }
    }
}

/// Enumerate all (l, m_block) with the parity of `statistics`,
/// |m_block| <= l <= l_max, ascending in l.
pub fn build_basis(statistics: Statistics, m_block: i32, l_max: u32) -> Result<ChannelBasis> {
    let parity = statistics.parity();
    let m_abs = m_block.unsigned_abs();
    let l_start = if m_abs % 2 == parity % 2 {
        m_abs
    } else {
        m_abs + 1
    };
    let channels: Vec<Channel> = (l_start..=l_max)
        .step_by(2)
        .map(|l| Channel { l, m: m_block })
        .collect();
    if channels.is_empty() {
        return Err(Error::EmptyBasis {
            statistics: statistics.name(),
            m: m_block,
            l_max,
        });
    }
    Ok(ChannelBasis {
        statistics,
        m_block,
        channels,
    })
}

/// Ladder coefficient of cos θ on normalized spherical harmonics:
/// cos θ Y_lm = β(l+1) Y_{l+1,m} + β(l) Y_{l-1,m}.
fn beta(l: u32, m: i32) -> f64 {
    let l2 = (l as f64) * (l as f64);
    let m2 = (m as f64) * (m as f64);
    ((l2 - m2) / (4.0 * l2 - 1.0)).sqrt()
}

/// Exact matrix element <Y_{l_out,m} | P2(cos θ) | Y_{l_in,m}>.
///
/// Closed Clebsch-Gordan form via the cos θ ladder applied twice; identical
/// to the Wigner-3j Gaunt expression
/// (-1)^m sqrt((2l+1)(2l'+1)) (l' 2 l; 0 0 0)(l' 2 l; -m 0 m).
/// Zero unless |l_out - l_in| is 0 or 2, and always zero for l_out = l_in = 0.
/// Symmetric under l_out <-> l_in and under m -> -m.
pub fn p2_element(l_out: u32, l_in: u32, m: i32) -> Result<f64> {
    let l_min = l_out.min(l_in);
    let l_max = l_out.max(l_in);
    if m.unsigned_abs() > l_min {
        return Err(Error::MagneticNumberOutOfRange { l: l_min, m });
    }
    Ok(match l_max - l_min {
        // P2 = (3 cos²θ - 1)/2, so the diagonal element is
        // (3/2)(β(l+1)² + β(l)²) - 1/2.
        0 => 1.5 * (beta(l_min + 1, m).powi(2) + beta(l_min, m).powi(2)) - 0.5,
        2 => 1.5 * beta(l_max, m) * beta(l_max - 1, m),
        _ => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn boson_basis_enumeration() {
        let b = build_basis(Statistics::Boson, 0, 4).unwrap();
        let ls: Vec<u32> = b.channels().iter().map(|c| c.l).collect();
        assert_eq!(ls, vec![0, 2, 4]);
        assert!(b.channels().iter().all(|c| c.m == 0));
    }

    #[test]
    fn fermion_basis_enumeration() {
        let b = build_basis(Statistics::Fermion, 0, 5).unwrap();
        let ls: Vec<u32> = b.channels().iter().map(|c| c.l).collect();
        assert_eq!(ls, vec![1, 3, 5]);
    }

    #[test]
    fn basis_respects_m_floor() {
        let b = build_basis(Statistics::Boson, 3, 4).unwrap();
        assert_eq!(b.channels(), &[Channel { l: 4, m: 3 }]);
    }

    #[test]
    fn impossible_block_is_rejected() {
        assert!(build_basis(Statistics::Boson, 1, 1).is_err());
        assert!(build_basis(Statistics::Fermion, 0, 0).is_err());
    }

    #[test]
    fn channel_validates_m() {
        assert!(Channel::new(2, -2).is_ok());
        assert!(Channel::new(1, 2).is_err());
    }

    #[test]
    fn p2_textbook_values() {
        assert_eq!(p2_element(0, 0, 0).unwrap(), 0.0);
        assert_relative_eq!(
            p2_element(2, 0, 0).unwrap(),
            1.0 / 5f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(p2_element(1, 1, 0).unwrap(), 0.4, max_relative = 1e-15);
        assert_relative_eq!(p2_element(1, 1, 1).unwrap(), -0.2, max_relative = 1e-15);
        assert_relative_eq!(p2_element(1, 1, -1).unwrap(), -0.2, max_relative = 1e-15);
        // Wigner-3j cross-checks: 3 sqrt(21)/35, 6 sqrt(5)/35, 1/7, -2/7,
        // 3 sqrt(3990)/805, 2/17, -11/25.
        assert_relative_eq!(
            p2_element(3, 1, 0).unwrap(),
            0.392792202424786286,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p2_element(4, 2, 0).unwrap(),
            0.383325938999963948,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p2_element(2, 2, 1).unwrap(),
            1.0 / 7.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p2_element(2, 2, 2).unwrap(),
            -2.0 / 7.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p2_element(12, 10, 7).unwrap(),
            0.235402907289745443,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            p2_element(9, 9, 4).unwrap(),
            2.0 / 17.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p2_element(11, 11, 11).unwrap(),
            -11.0 / 25.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn p2_rejects_bad_m() {
        assert!(p2_element(2, 1, 2).is_err());
        assert!(p2_element(0, 2, 1).is_err());
    }

    proptest! {
        #[test]
        fn p2_selection_rules_and_symmetry(
            l_out in 0u32..=14,
            l_in in 0u32..=14,
            m_seed in 0u32..=14,
        ) {
            let l_min = l_out.min(l_in);
            let m = (m_seed % (l_min + 1)) as i32;
            let v = p2_element(l_out, l_in, m).unwrap();
            let dl = l_out.abs_diff(l_in);
            if dl != 0 && dl != 2 {
                prop_assert_eq!(v, 0.0);
            }
            if l_out == 0 && l_in == 0 {
                prop_assert_eq!(v, 0.0);
            }
            prop_assert_eq!(v, p2_element(l_in, l_out, m).unwrap());
            prop_assert_eq!(v, p2_element(l_out, l_in, -m).unwrap());
        }

        #[test]
        fn basis_parity_and_order(m in -6i32..=6, l_max in 0u32..=12) {
            prop_assume!(l_max >= m.unsigned_abs());
            for stats in [Statistics::Boson, Statistics::Fermion] {
                if let Ok(basis) = build_basis(stats, m, l_max) {
                    let ch = basis.channels();
                    prop_assert!(!ch.is_empty());
                    prop_assert!(ch.iter().all(|c| c.l % 2 == stats.parity()));
                    prop_assert!(ch.iter().all(|c| c.m == m && c.m.unsigned_abs() <= c.l));
                    prop_assert!(ch.windows(2).all(|w| w[0].l < w[1].l));
                    prop_assert!(ch.last().unwrap().l <= l_max);
                }
            }
        }
    }
}
