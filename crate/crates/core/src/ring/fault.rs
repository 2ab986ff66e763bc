//! Fault detection from the odd-even alternation.
//!
//! In a healthy ring neighbours are always in complementary states: one
//! computes (q) while the other waits (p), and the waiting module receives a
//! package from its right neighbour at the end of every phase in which that
//! neighbour computed. Each module watches its right neighbour.

use std::fmt;

use super::handshake::AState;
use super::priority::RingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultBehavior {
    Healthy,
    /// Stops reporting and sending from `from_phase` on.
    Silent {
        module: usize,
        from_phase: usize,
    },
    /// Reports the wrong state from `from_phase` on.
    WrongState {
        module: usize,
        from_phase: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub phase: usize,
    pub detector: usize,
    pub suspect: usize,
    pub reason: String,
}

impl fmt::Display for Detection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phase {}: module {} suspects module {} ({})", self.phase, self.detector, self.suspect, self.reason)
    }
}

/// State module `w` (1-based) should be in during `phase`.
pub fn expected_state(w: usize, phase: usize) -> AState {
    if (w % 2 == 1) == phase.is_multiple_of(2) {
        AState::Q
    } else {
        AState::P
    }
}

pub fn detect_fault(modules: usize, phases: usize, behavior: FaultBehavior) -> Result<Vec<Detection>, RingError> {
    if modules < 2 || modules % 2 == 1 {
        return Err(RingError::OddRing(modules));
    }
    if let FaultBehavior::Silent { module, .. } | FaultBehavior::WrongState { module, .. } = behavior {
        if module == 0 || module > modules {
            return Err(RingError::Config(format!("no module {module}")));
        }
    }
    let report = |w: usize, k: usize| -> Option<AState> {
        let s = expected_state(w, k);
        match behavior {
            FaultBehavior::Silent { module, from_phase } if module == w && k >= from_phase => None,
            FaultBehavior::WrongState { module, from_phase } if module == w && k >= from_phase => {
                Some(if s == AState::Q { AState::P } else { AState::Q })
            }
            _ => Some(s),
        }
    };
    let mut out = Vec::new();
    for k in 0..phases {
        for w in 1..=modules {
            let Some(own) = report(w, k) else { continue };
            let r = w % modules + 1;
            let reason = match report(r, k) {
                None if own == AState::P => Some("missing package"),
                Some(s) if s == own => Some("state mismatch"),
                _ => None,
            };
            if let Some(reason) = reason {
                out.push(Detection { phase: k, detector: w, suspect: r, reason: reason.into() });
            }
        }
    }
    Ok(out)
}
