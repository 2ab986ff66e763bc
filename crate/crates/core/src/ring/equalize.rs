//! Pairwise equalization of fragment sizes around the ring.
//!
//! Phases alternate between the pairings (1,2),(3,4),... and
//! (2n,1),(2,3),(4,5),... . A pair splits its joint count evenly; an odd
//! remainder goes to the left module, which for the wraparound pair is
//! module 2n.

use super::priority::RingError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    /// Modules paired in this phase (1-based, left first).
    pub pairs: Vec<(usize, usize)>,
    pub after: Vec<i64>,
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualizeTrace {
    pub start: Vec<i64>,
    pub phases: Vec<Phase>,
    pub converged: bool,
}

impl EqualizeTrace {
    pub fn last(&self) -> &[i64] {
        self.phases.last().map(|p| p.after.as_slice()).unwrap_or(&self.start)
    }

    pub fn changing_phases(&self) -> usize {
        self.phases.iter().filter(|p| p.changed).count()
    }
}

pub fn spread(v: &[i64]) -> i64 {
    v.iter().max().copied().unwrap_or(0) - v.iter().min().copied().unwrap_or(0)
}

pub fn pairing(modules: usize, phase: usize) -> Vec<(usize, usize)> {
    if phase.is_multiple_of(2) {
        (1..=modules).step_by(2).map(|l| (l, l + 1)).collect()
    } else {
        let mut out = vec![(modules, 1)];
        out.extend((2..modules).step_by(2).map(|l| (l, l + 1)));
        out
    }
}

/// Runs phases until max − min ≤ 1 or `max_phases` is reached.
pub fn equalize(counts: &[i64], max_phases: usize) -> Result<EqualizeTrace, RingError> {
    let m = counts.len();
    if m == 0 || m % 2 == 1 {
        return Err(RingError::OddRing(m));
    }
    let mut cur = counts.to_vec();
    let mut phases = Vec::new();
    while spread(&cur) > 1 && phases.len() < max_phases {
        let pairs = pairing(m, phases.len());
        let before = cur.clone();
        for &(l, r) in &pairs {
            let s = cur[l - 1] + cur[r - 1];
            cur[l - 1] = s.div_euclid(2) + s.rem_euclid(2);
            cur[r - 1] = s.div_euclid(2);
        }
        phases.push(Phase { pairs, changed: cur != before, after: cur.clone() });
    }
    Ok(EqualizeTrace { start: counts.to_vec(), converged: spread(&cur) <= 1, phases })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_modules_one_phase() {
        let t = equalize(&[0, 12], 10).unwrap();
        assert_eq!(t.phases.len(), 1);
        assert_eq!(t.last(), &[6, 6]);
    }

    #[test]
    fn equal_start_needs_nothing() {
        let t = equalize(&[5; 6], 10).unwrap();
        assert!(t.phases.is_empty());
        assert!(t.converged);
    }

    #[test]
    fn odd_remainder_goes_left() {
        let t = equalize(&[0, 7, 0, 0], 1).unwrap();
        assert_eq!(t.phases[0].after, vec![4, 3, 0, 0]);
        let p = pairing(4, 1);
        assert_eq!(p, vec![(4, 1), (2, 3)]);
    }

    #[test]
    fn odd_ring_rejected() {
        assert_eq!(equalize(&[1, 2, 3], 5), Err(RingError::OddRing(3)));
    }
}
