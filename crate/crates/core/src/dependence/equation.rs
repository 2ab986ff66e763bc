//! Connection equations and their bounded solution.
//!
//! Degree-one systems are solved through an integer column echelon form:
//! the solution set is `x0 + N t`, and `t` is enumerated pivot by pivot so
//! that only feasible prefixes are visited. Higher degrees fall back to
//! enumerating the bounding box.

use std::fmt;

use num_integer::Integer;

use super::nest::{AccessSite, LoopNest};
use super::poly::{parse_poly, Poly};
use super::DepError;
use crate::text::{Cursor, ParseError};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub label: String,
    pub index: Vec<Poly>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionEquation {
    pub array: String,
    pub writer: Site,
    pub reader: Site,
    /// One `lhs = rhs` pair per array dimension, over suffixed counters.
    pub lhs: Vec<Poly>,
    pub rhs: Vec<Poly>,
    pub vars: Vec<String>,
    pub bounds: Vec<(i64, i64)>,
    pub opaque: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationClass {
    Linear,
    Diophantine,
    Opaque,
}

impl fmt::Display for EquationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquationClass::Linear => "linear",
            EquationClass::Diophantine => "Diophantine class",
            EquationClass::Opaque => "opaque",
        })
    }
}

impl ConnectionEquation {
    pub fn residuals(&self) -> Vec<Poly> {
        self.lhs.iter().zip(&self.rhs).map(|(l, r)| l.sub(r)).collect()
    }

    pub fn degree(&self) -> u32 {
        self.residuals().iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn class(&self) -> EquationClass {
        match (&self.opaque, self.degree()) {
            (Some(_), _) => EquationClass::Opaque,
            (None, 0 | 1) => EquationClass::Linear,
            _ => EquationClass::Diophantine,
        }
    }

    /// Equation from text: `lhs = rhs` pairs separated by `;`, with bounds
    /// such as `i=1..10, j=1..10` fixing the variable order.
    pub fn from_text(equations: &str, bounds: &str) -> Result<Self, ParseError> {
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        let mut c = Cursor::new(equations, 1)?;
        loop {
            lhs.push(parse_poly(&mut c)?);
            c.expect_sym("=")?;
            rhs.push(parse_poly(&mut c)?);
            if !c.eat_sym(";") || c.at_end() {
                break;
            }
        }
        c.expect_end()?;
        let mut vars = Vec::new();
        let mut bs = Vec::new();
        let mut b = Cursor::new(bounds, 1)?;
        while !b.at_end() {
            vars.push(b.ident()?);
            b.expect_sym("=")?;
            let lo = b.int()?;
            b.expect_sym("..")?;
            let hi = b.int()?;
            bs.push((lo, hi));
            if !b.eat_sym(",") {
                break;
            }
        }
        b.expect_end()?;
        let eq = ConnectionEquation {
            array: String::new(),
            writer: Site { label: String::new(), index: lhs.clone() },
            reader: Site { label: String::new(), index: rhs.clone() },
            lhs,
            rhs,
            vars,
            bounds: bs,
            opaque: None,
        };
        for r in eq.residuals() {
            if let Some(v) = r.vars().into_iter().find(|v| !eq.vars.contains(v)) {
                return Err(ParseError::new(1, 1, format!("variable `{v}` has no bounds")));
            }
        }
        Ok(eq)
    }
}

impl fmt::Display for ConnectionEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(why) = &self.opaque {
            return write!(f, "{}: {} -> {} opaque ({why})", self.array, self.writer.label, self.reader.label);
        }
        let parts: Vec<String> = self.lhs.iter().zip(&self.rhs).map(|(l, r)| format!("{l} = {r}")).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// One equation per (write site, read site) pair on a common array.
pub fn build_connection_equations(nest: &LoopNest) -> Result<Vec<ConnectionEquation>, DepError> {
    let sites = nest.access_sites()?;
    let mut out = Vec::new();
    for w in sites.iter().filter(|s| s.write) {
        for r in sites.iter().filter(|s| !s.write && s.array == w.array) {
            out.push(pair_equation(w, r));
        }
    }
    Ok(out)
}

fn pair_equation(w: &AccessSite, r: &AccessSite) -> ConnectionEquation {
    let mut vars = Vec::new();
    let mut bounds = Vec::new();
    for (suffix, site) in [("w", w), ("r", r)] {
        for (c, lo, hi) in &site.counters {
            vars.push(format!("{c}_{suffix}"));
            bounds.push((*lo, *hi));
        }
    }
    let (opaque, wi, ri) = match (&w.index, &r.index) {
        (Ok(a), Ok(b)) if a.len() == b.len() => (None, a.clone(), b.clone()),
        (Ok(_), Ok(_)) => (Some("dimension mismatch".to_string()), vec![], vec![]),
        (Err(e), _) | (_, Err(e)) => (Some(e.clone()), vec![], vec![]),
    };
    let lhs = wi.iter().map(|p| p.rename(|v| format!("{v}_w"))).collect();
    let rhs = ri.iter().map(|p| p.rename(|v| format!("{v}_r"))).collect();
    ConnectionEquation {
        array: w.array.clone(),
        writer: Site { label: w.label.clone(), index: wi },
        reader: Site { label: r.label.clone(), index: ri },
        lhs,
        rhs,
        vars,
        bounds,
        opaque,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveVerdict {
    /// Closed-form lattice solution restricted to the bounds.
    Exact,
    /// Enumerated within the bounds only.
    BoundedOnly,
    Unsolvable(String),
}

impl fmt::Display for SolveVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveVerdict::Exact => write!(f, "exact"),
            SolveVerdict::BoundedOnly => write!(f, "bounded-only"),
            SolveVerdict::Unsolvable(why) => write!(f, "unsolvable: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub verdict: SolveVerdict,
    /// Lexicographically sorted points in the order of `vars`.
    pub points: Vec<Vec<i64>>,
}

pub fn solve_connection(eq: &ConnectionEquation, budget: u64) -> Result<Solution, DepError> {
    if eq.opaque.is_some() {
        return Ok(Solution { verdict: SolveVerdict::Unsolvable("undecidable class".into()), points: vec![] });
    }
    if eq.bounds.iter().any(|(lo, hi)| lo > hi) {
        return Ok(Solution { verdict: SolveVerdict::Exact, points: vec![] });
    }
    if eq.degree() <= 1 {
        let mut points = solve_linear(eq, budget)?;
        points.sort();
        return Ok(Solution { verdict: SolveVerdict::Exact, points });
    }
    Ok(Solution { verdict: SolveVerdict::BoundedOnly, points: enumerate_box(eq, budget)? })
}

fn enumerate_box(eq: &ConnectionEquation, budget: u64) -> Result<Vec<Vec<i64>>, DepError> {
    let size = eq.bounds.iter().try_fold(1u128, |acc, (lo, hi)| acc.checked_mul((hi - lo + 1) as u128));
    match size {
        Some(s) if s <= budget as u128 => {}
        _ => return Err(DepError::Budget { budget }),
    }
    let res = eq.residuals();
    let mut out = Vec::new();
    let mut cur: Vec<i64> = eq.bounds.iter().map(|b| b.0).collect();
    loop {
        if res.iter().all(|r| r.eval_at(&eq.vars, &cur) == Some(0)) {
            out.push(cur.clone());
        }
        // Odometer, last variable fastest.
        let mut k = cur.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if cur[k] < eq.bounds[k].1 {
                cur[k] += 1;
                break;
            }
            cur[k] = eq.bounds[k].0;
        }
    }
}

type Mat = Vec<Vec<i128>>;

fn ovf() -> DepError {
    DepError::Overflow
}

/// `col[dst] -= q * col[src]` on every matrix.
fn col_axpy(ms: &mut [&mut Mat], dst: usize, src: usize, q: i128) -> Result<(), DepError> {
    for m in ms.iter_mut() {
        for row in m.iter_mut() {
            let d = row[src].checked_mul(q).ok_or_else(ovf)?;
            row[dst] = row[dst].checked_sub(d).ok_or_else(ovf)?;
        }
    }
    Ok(())
}

fn col_swap(ms: &mut [&mut Mat], a: usize, b: usize) {
    for m in ms.iter_mut() {
        for row in m.iter_mut() {
            row.swap(a, b);
        }
    }
}

/// Column echelon form of `ms[0]` by unimodular column operations applied
/// to every matrix; returns `(row, column)` pivots.
fn column_echelon(ms: &mut [&mut Mat], cols: usize) -> Result<Vec<(usize, usize)>, DepError> {
    let rows = ms[0].len();
    let mut pivots = Vec::new();
    let mut pc = 0;
    for r in 0..rows {
        if pc == cols {
            break;
        }
        loop {
            let nz: Vec<usize> = (pc..cols).filter(|&c| ms[0][r][c] != 0).collect();
            let Some(&best) = nz.iter().min_by_key(|&&c| ms[0][r][c].abs()) else { break };
            col_swap(ms, pc, best);
            if nz.len() == 1 {
                pivots.push((r, pc));
                pc += 1;
                break;
            }
            for c in pc + 1..cols {
                let q = Integer::div_floor(&ms[0][r][c], &ms[0][r][pc]);
                if q != 0 {
                    col_axpy(ms, c, pc, q)?;
                }
            }
        }
    }
    Ok(pivots)
}

fn solve_linear(eq: &ConnectionEquation, budget: u64) -> Result<Vec<Vec<i64>>, DepError> {
    let n = eq.vars.len();
    let res = eq.residuals();
    // A x = b with b = -constant term.
    let mut a: Mat = res.iter().map(|r| eq.vars.iter().map(|v| r.linear_coeff(v) as i128).collect()).collect();
    let b: Vec<i128> = res.iter().map(|r| -(r.constant_term() as i128)).collect();
    let mut u: Mat = (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect();
    let pivots = column_echelon(&mut [&mut a, &mut u], n)?;

    let mut y = vec![0i128; n];
    for &(r, c) in &pivots {
        let mut rem = b[r];
        for (k, yk) in y.iter().enumerate().take(c) {
            rem = rem.checked_sub(a[r][k].checked_mul(*yk).ok_or_else(ovf)?).ok_or_else(ovf)?;
        }
        if rem % a[r][c] != 0 {
            return Ok(vec![]);
        }
        y[c] = rem / a[r][c];
    }
    for (r, row) in a.iter().enumerate() {
        let mut s: i128 = 0;
        for (k, yk) in y.iter().enumerate() {
            s = s.checked_add(row[k].checked_mul(*yk).ok_or_else(ovf)?).ok_or_else(ovf)?;
        }
        if s != b[r] {
            return Ok(vec![]);
        }
    }
    let mut x0 = vec![0i128; n];
    for (i, xi) in x0.iter_mut().enumerate() {
        for (k, yk) in y.iter().enumerate() {
            *xi = xi.checked_add(u[i][k].checked_mul(*yk).ok_or_else(ovf)?).ok_or_else(ovf)?;
        }
    }
    let free = n - pivots.len();
    let mut kernel: Mat = (0..n).map(|i| u[i][pivots.len()..].to_vec()).collect();
    let kp = column_echelon(&mut [&mut kernel], free)?;
    debug_assert_eq!(kp.len(), free, "kernel basis has full column rank");

    let bounds: Vec<(i128, i128)> = eq.bounds.iter().map(|&(l, h)| (l as i128, h as i128)).collect();
    let mut out = Vec::new();
    let mut search = Lattice { kernel: &kernel, pivots: &kp, bounds: &bounds, budget, out: &mut out };
    let first_row = kp.first().map(|p| p.0).unwrap_or(n);
    if search.rows_ok(&x0, 0, first_row) {
        search.descend(0, x0)?;
    }
    Ok(out)
}

struct Lattice<'a> {
    kernel: &'a Mat,
    pivots: &'a [(usize, usize)],
    bounds: &'a [(i128, i128)],
    budget: u64,
    out: &'a mut Vec<Vec<i64>>,
}

impl Lattice<'_> {
    fn rows_ok(&self, x: &[i128], from: usize, to: usize) -> bool {
        (from..to).all(|r| self.bounds[r].0 <= x[r] && x[r] <= self.bounds[r].1)
    }

    fn descend(&mut self, level: usize, x: Vec<i128>) -> Result<(), DepError> {
        if level == self.pivots.len() {
            if self.out.len() as u64 >= self.budget {
                return Err(DepError::Budget { budget: self.budget });
            }
            self.out.push(x.iter().map(|&v| v as i64).collect());
            return Ok(());
        }
        let (r, c) = self.pivots[level];
        let a = self.kernel[r][c];
        let (lo, hi) = self.bounds[r];
        let (t_lo, t_hi) = if a > 0 {
            (Integer::div_ceil(&(lo - x[r]), &a), Integer::div_floor(&(hi - x[r]), &a))
        } else {
            (Integer::div_ceil(&(hi - x[r]), &a), Integer::div_floor(&(lo - x[r]), &a))
        };
        let next_row = self.pivots.get(level + 1).map(|p| p.0).unwrap_or(x.len());
        for t in t_lo..=t_hi {
            let mut y = x.clone();
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = yi.checked_add(self.kernel[i][c].checked_mul(t).ok_or_else(ovf)?).ok_or_else(ovf)?;
            }
            if self.rows_ok(&y, r, next_row) {
                self.descend(level + 1, y)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::dependence::nest::parse_loop_nest;

    fn solve(eqs: &str, bounds: &str) -> Solution {
        solve_connection(&ConnectionEquation::from_text(eqs, bounds).unwrap(), DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn shifted_chain() {
        let s = solve("m1 = m2 - 1", "m1=1..5, m2=1..5");
        assert_eq!(s.verdict, SolveVerdict::Exact);
        assert_eq!(s.points, vec![vec![1, 2], vec![2, 3], vec![3, 4], vec![4, 5]]);
    }

    #[test]
    fn square_equals_double() {
        let s = solve("i^2 = 2*j", "i=1..10, j=1..10");
        assert_eq!(s.verdict, SolveVerdict::BoundedOnly);
        assert_eq!(s.points, vec![vec![2, 2], vec![4, 8]]);
    }

    #[test]
    fn no_integer_solution() {
        assert!(solve("2*x = 2*y + 1", "x=0..9, y=0..9").points.is_empty());
    }

    #[test]
    fn free_variables_enumerate() {
        let s = solve("3*x + 6*y = 3*z", "x=0..3, y=0..3, z=0..4");
        let expect: Vec<Vec<i64>> =
            (0..=3).flat_map(|x| (0..=3).map(move |y| vec![x, y, x + 2 * y])).filter(|p| p[2] <= 4).collect();
        assert_eq!(s.points, expect);
    }

    #[test]
    fn budget_is_enforced() {
        let eq = ConnectionEquation::from_text("x^2 = y", "x=1..1000, y=1..1000").unwrap();
        assert_eq!(solve_connection(&eq, 1000), Err(DepError::Budget { budget: 1000 }));
    }

    const SHIFT_NEST: &str = "param N = 5\ncounter B i = 1..N\ndefine dec(x) = x - 1\n\
        start m0\nm0: i = 0 then m1\nm1: do B while lt(i, n) then m2\nm2: halt\n\
        proc B start b0\nb0: i = succ(i) then b1\nb1: a[i] = g(a[dec(i)]) then b2\nb2: halt";

    #[test]
    fn nest_with_shift() {
        let nest = parse_loop_nest(SHIFT_NEST, &BTreeMap::new()).unwrap();
        let eqs = build_connection_equations(&nest).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].to_string(), "i_w = i_r - 1");
        assert_eq!(eqs[0].degree(), 1);
        let s = solve_connection(&eqs[0], DEFAULT_BUDGET).unwrap();
        assert_eq!(s.points.len(), 4);
    }

    #[test]
    fn undefined_function_is_opaque() {
        let src = SHIFT_NEST.replace("a[dec(i)]", "a[hash(i)]");
        let nest = parse_loop_nest(&src, &BTreeMap::new()).unwrap();
        let eqs = build_connection_equations(&nest).unwrap();
        assert_eq!(eqs[0].class(), EquationClass::Opaque);
        let s = solve_connection(&eqs[0], DEFAULT_BUDGET).unwrap();
        assert_eq!(s.verdict.to_string(), "unsolvable: undecidable class");
        assert!(s.points.is_empty());
    }

    #[test]
    fn square_against_double_nest() {
        let src = "param N = 10\ncounter A i = 1..N\ncounter B j = 1..N\n\
            define sq(x) = x^2\ndefine dbl(x) = 2*x\n\
            start m0\nm0: i = 0 then m1\nm1: do A while lt(i, n) then m2\nm2: j = 0 then m3\n\
            m3: do B while lt(j, n) then m4\nm4: halt\n\
            proc A start a0\na0: i = succ(i) then a1\na1: a[sq(i)] = g(i) then a2\na2: halt\n\
            proc B start b0\nb0: j = succ(j) then b1\nb1: y = h(a[dbl(j)]) then b2\nb2: halt";
        let nest = parse_loop_nest(src, &BTreeMap::new()).unwrap();
        let eqs = build_connection_equations(&nest).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].to_string(), "i_w^2 = 2*j_r");
        assert_eq!(eqs[0].class(), EquationClass::Diophantine);
        let s = solve_connection(&eqs[0], DEFAULT_BUDGET).unwrap();
        assert_eq!(s.points, vec![vec![2, 2], vec![4, 8]]);
    }
}
