//! Execution diagrams for a ring of modules.
//!
//! Rows are modules, columns are time steps. In the shared-memory diagram
//! list B is split into contiguous blocks, one per module. In the
//! distributed diagram list C is split into fragments `C1..Cw` that travel
//! around the ring one hop per step; a module starts once `C1` reaches it.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagramCell {
    /// Shared memory: element `a` of A with element `b` of B, all of C, D.
    Shared {
        a: usize,
        b: usize,
    },
    /// Distributed: element pair processed with fragment `frag`.
    Busy {
        a: usize,
        b: usize,
        frag: usize,
    },
    /// Holding fragment `frag` without processing.
    Idle {
        frag: usize,
    },
    Empty,
}

impl fmt::Display for DiagramCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagramCell::Shared { a, b } => write!(f, "{a},{b},C,D"),
            DiagramCell::Busy { a, b, frag } => write!(f, "{a},{b},C{frag}"),
            DiagramCell::Idle { frag } => write!(f, "(C{frag})"),
            DiagramCell::Empty => write!(f, "-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionDiagram {
    /// `cells[w][t]` for module `w + 1` at time `t + 1`.
    pub cells: Vec<Vec<DiagramCell>>,
    /// Last step at which any module processes data.
    pub processing_steps: usize,
}

impl ExecutionDiagram {
    pub fn cell(&self, module: usize, time: usize) -> &DiagramCell {
        &self.cells[module - 1][time - 1]
    }

    pub fn steps(&self) -> usize {
        self.cells.first().map(Vec::len).unwrap_or(0)
    }

    /// Module holding each fragment at `time`.
    pub fn holders(&self, time: usize) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (w, row) in self.cells.iter().enumerate() {
            match row[time - 1] {
                DiagramCell::Busy { frag, .. } | DiagramCell::Idle { frag } => out.entry(frag).or_default().push(w + 1),
                _ => {}
            }
        }
        out
    }

    /// Aligned text table.
    pub fn render(&self) -> String {
        let texts: Vec<Vec<String>> = self.cells.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect();
        let width = texts.iter().flatten().map(String::len).max().unwrap_or(1).max(2);
        let mut s = format!("{:<6}", "time");
        for t in 1..=self.steps() {
            s.push_str(&format!(" {t:>width$}"));
        }
        s.push('\n');
        for (w, row) in texts.iter().enumerate() {
            s.push_str(&format!("{:<6}", format!("M{}", w + 1)));
            for c in row {
                s.push_str(&format!(" {c:>width$}"));
            }
            s.push('\n');
        }
        s
    }
}

fn block(b_len: usize, workers: usize) -> usize {
    b_len.div_ceil(workers.max(1))
}

/// B split into blocks; each module walks A outer, its block inner.
pub fn diagram_shared(workers: usize, a_len: usize, b_len: usize) -> ExecutionDiagram {
    let bs = block(b_len, workers);
    let steps = a_len * bs;
    let cells = (0..workers)
        .map(|w| {
            (0..steps)
                .map(|t| {
                    let b = w * bs + t % bs + 1;
                    if b <= b_len {
                        DiagramCell::Shared { a: t / bs + 1, b }
                    } else {
                        DiagramCell::Empty
                    }
                })
                .collect()
        })
        .collect();
    ExecutionDiagram { cells, processing_steps: steps }
}

/// Fragment held by module `w` (1-based) at time `t` (1-based): fragments
/// move one module to the right per step.
pub fn held_fragment(workers: usize, w: usize, t: usize) -> usize {
    let n = workers as i64;
    ((w as i64 - t as i64).rem_euclid(n) + 1) as usize
}

/// Fragments of C rotate around the ring; each module processes every
/// fragment once per (A, B) pair. Columns continue until every fragment is
/// back at its home module.
pub fn diagram_rotating(workers: usize, a_len: usize, b_len: usize) -> ExecutionDiagram {
    let bs = block(b_len, workers);
    let jobs: Vec<Vec<(usize, usize)>> = (0..workers)
        .map(|w| (1..=a_len).flat_map(|a| (w * bs + 1..=((w + 1) * bs).min(b_len)).map(move |b| (a, b))).collect())
        .collect();
    let last = (0..workers).map(|w| if jobs[w].is_empty() { 0 } else { w + jobs[w].len() * workers }).max().unwrap_or(0);
    // Rotation after step t brings fragments home when t is a multiple of
    // the ring size.
    let total = if workers == 0 { 0 } else { last.div_ceil(workers).max(1) * workers };
    let cells = (0..workers)
        .map(|w| {
            (1..=total)
                .map(|t| {
                    let frag = held_fragment(workers, w + 1, t);
                    let k = t as i64 - (w as i64 + 1);
                    match (k >= 0).then(|| jobs[w].get(k as usize / workers)).flatten() {
                        Some(&(a, b)) => DiagramCell::Busy { a, b, frag },
                        None => DiagramCell::Idle { frag },
                    }
                })
                .collect()
        })
        .collect();
    ExecutionDiagram { cells, processing_steps: last }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_rows() {
        let d = diagram_shared(4, 2, 16);
        let m1: Vec<String> = (1..=6).map(|t| d.cell(1, t).to_string()).collect();
        assert_eq!(m1, ["1,1,C,D", "1,2,C,D", "1,3,C,D", "1,4,C,D", "2,1,C,D", "2,2,C,D"]);
        assert_eq!(d.cell(2, 1).to_string(), "1,5,C,D");
        assert_eq!(d.cell(4, 6).to_string(), "2,14,C,D");
    }

    #[test]
    fn single_worker_is_sequential() {
        let d = diagram_shared(1, 2, 3);
        let order: Vec<String> = (1..=6).map(|t| d.cell(1, t).to_string()).collect();
        assert_eq!(order, ["1,1,C,D", "1,2,C,D", "1,3,C,D", "2,1,C,D", "2,2,C,D", "2,3,C,D"]);
        let r = diagram_rotating(1, 2, 3);
        let order: Vec<String> = (1..=6).map(|t| r.cell(1, t).to_string()).collect();
        assert_eq!(order, ["1,1,C1", "1,2,C1", "1,3,C1", "2,1,C1", "2,2,C1", "2,3,C1"]);
    }

    #[test]
    fn rotating_staircase() {
        let d = diagram_rotating(4, 2, 16);
        assert_eq!(d.cell(1, 1).to_string(), "1,1,C1");
        assert_eq!(d.cell(2, 1).to_string(), "(C2)");
        assert_eq!(d.cell(3, 1).to_string(), "(C3)");
        assert_eq!(d.cell(3, 2).to_string(), "(C2)");
        assert_eq!(d.cell(3, 3).to_string(), "1,9,C1");
        assert_eq!(d.cell(4, 4).to_string(), "1,13,C1");
        for w in 1..=4 {
            let idle = (1..=4).take_while(|&t| matches!(d.cell(w, t), DiagramCell::Idle { .. })).count();
            assert_eq!(idle, w - 1);
        }
        for t in 1..=d.steps() {
            assert!(d.holders(t).values().all(|m| m.len() == 1));
        }
    }
}
