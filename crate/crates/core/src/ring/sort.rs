//! Odd-even merge-split sorting of ring fragments.
//!
//! Each module sorts its fragment, then phases alternate between the pairs
//! (1,2),(3,4),... and (2,3),(4,5),...; a pair merges its fragments and
//! the left module keeps the smallest elements. The wraparound pair is not
//! used because the sorted order runs from module 1 to module 2n.

use super::priority::RingError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortTrace {
    pub phases: Vec<Vec<Vec<i64>>>,
    /// Number of pairs whose contents changed, per phase.
    pub exchanges: Vec<usize>,
    pub sorted: bool,
}

impl SortTrace {
    pub fn result(&self) -> Vec<i64> {
        self.phases.last().map(|p| p.concat()).unwrap_or_default()
    }
}

fn is_sorted(frags: &[Vec<i64>]) -> bool {
    frags.concat().windows(2).all(|w| w[0] <= w[1])
}

pub fn ring_sort(fragments: &[Vec<i64>]) -> Result<SortTrace, RingError> {
    let m = fragments.len();
    if m == 0 || m % 2 == 1 {
        return Err(RingError::OddRing(m));
    }
    let mut cur: Vec<Vec<i64>> = fragments.to_vec();
    for f in &mut cur {
        f.sort();
    }
    let mut phases = Vec::new();
    let mut exchanges = Vec::new();
    // At least one phase runs, so a sorted start is verified, not assumed.
    while phases.is_empty() || (!is_sorted(&cur) && phases.len() < 2 * m + 2) {
        let first = if phases.len() % 2 == 0 { 0 } else { 1 };
        let mut changed = 0;
        let mut l = first;
        while l + 1 < m {
            let keep = cur[l].len();
            let mut merged = [cur[l].clone(), cur[l + 1].clone()].concat();
            merged.sort();
            let right = merged.split_off(keep);
            if merged != cur[l] {
                changed += 1;
            }
            cur[l] = merged;
            cur[l + 1] = right;
            l += 2;
        }
        phases.push(cur.clone());
        exchanges.push(changed);
    }
    Ok(SortTrace { sorted: is_sorted(&cur), phases, exchanges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_input_one_quiet_phase() {
        let t = ring_sort(&[vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(t.phases.len(), 1);
        assert_eq!(t.exchanges, vec![0]);
    }

    #[test]
    fn reverse_eight_by_four() {
        let frags: Vec<Vec<i64>> = (0..8).map(|m| (0..4).map(|k| 32 - (m * 4 + k)).collect()).collect();
        let t = ring_sort(&frags).unwrap();
        assert!(t.sorted);
        assert!(t.phases.len() <= 8);
        assert_eq!(t.result(), (1..=32).collect::<Vec<i64>>());
    }
}
