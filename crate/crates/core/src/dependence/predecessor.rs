//! Programs with predecessors and their wavefront schedules.
//!
//! ```text
//! array f
//! param N = 4
//! dims k = 1..N, i = 1..N, j = 1..N
//! kernel avg
//! read f[k, i-1, j]
//! read f[k-1, i, j+1]
//! boundary * = 0
//! boundary f[0, 1, 1] = 5
//! ```
//!
//! Each read names the iteration point whose result it consumes. Reads
//! outside the domain resolve through the boundary data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::poly::{parse_poly, Poly};
use super::DepError;
use crate::schema::interp::{parse_value, Cell, Memory, Semantics};
use crate::schema::Value;
use crate::text::{content_lines, Cursor, ParseError};

pub type IterationPoint = Vec<i64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PredecessorProgram {
    pub array: String,
    pub dims: Vec<(String, i64, i64)>,
    pub kernel: String,
    /// Index polynomials of each read, one per dimension.
    pub reads: Vec<Vec<Poly>>,
    pub boundary_default: Option<Value>,
    pub boundary: BTreeMap<IterationPoint, Value>,
}

pub fn parse_predecessor_program(src: &str, overrides: &BTreeMap<String, i64>) -> Result<PredecessorProgram, DepError> {
    let mut params: BTreeMap<String, i64> = BTreeMap::new();
    let mut array = None;
    let mut dims_src: Vec<(String, Poly, Poly, usize)> = Vec::new();
    let mut kernel = None;
    let mut reads = Vec::new();
    let mut boundary_default = None;
    let mut boundary = BTreeMap::new();
    for (line_no, line) in content_lines(src) {
        let mut c = Cursor::new(line, line_no)?;
        let kw = c.ident()?;
        match kw.as_str() {
            "array" => array = Some(c.ident()?),
            "param" => {
                let n = c.ident()?;
                c.expect_sym("=")?;
                params.insert(n, c.int()?);
            }
            "dims" => loop {
                let v = c.ident()?;
                c.expect_sym("=")?;
                let lo = parse_poly(&mut c)?;
                c.expect_sym("..")?;
                let hi = parse_poly(&mut c)?;
                dims_src.push((v, lo, hi, line_no));
                if !c.eat_sym(",") {
                    break;
                }
            },
            "kernel" => kernel = Some(c.ident()?),
            "read" => {
                let a = c.ident()?;
                if array.as_deref() != Some(a.as_str()) {
                    return Err(c.err(format!("read of `{a}` outside the program array")).into());
                }
                c.expect_sym("[")?;
                let mut idx = vec![parse_poly(&mut c)?];
                while c.eat_sym(",") {
                    idx.push(parse_poly(&mut c)?);
                }
                c.expect_sym("]")?;
                reads.push(idx);
            }
            "boundary" => {
                if c.eat_sym("*") {
                    c.expect_sym("=")?;
                    boundary_default = Some(parse_value(&mut c)?);
                } else {
                    c.ident()?;
                    c.expect_sym("[")?;
                    let mut p = vec![c.int()?];
                    while c.eat_sym(",") {
                        p.push(c.int()?);
                    }
                    c.expect_sym("]")?;
                    c.expect_sym("=")?;
                    boundary.insert(p, parse_value(&mut c)?);
                }
            }
            other => return Err(ParseError::new(line_no, 1, format!("unknown directive `{other}`")).into()),
        }
        c.eat_sym(";");
        c.expect_end()?;
    }
    params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    let mut dims = Vec::new();
    for (v, lo, hi, line) in dims_src {
        let ev = |p: &Poly| {
            p.eval(&params)
                .and_then(|x| i64::try_from(x).ok())
                .ok_or_else(|| DepError::Parse(ParseError::new(line, 1, format!("bound `{p}` is not a constant"))))
        };
        dims.push((v, ev(&lo)?, ev(&hi)?));
    }
    let array = array.ok_or_else(|| ParseError::new(1, 1, "missing `array` line"))?;
    let kernel = kernel.ok_or_else(|| ParseError::new(1, 1, "missing `kernel` line"))?;
    if dims.is_empty() {
        return Err(ParseError::new(1, 1, "missing `dims` line").into());
    }
    for r in &reads {
        if r.len() != dims.len() {
            return Err(ParseError::new(1, 1, format!("read has {} indices for {} dimensions", r.len(), dims.len())).into());
        }
    }
    Ok(PredecessorProgram { array, dims, kernel, reads, boundary_default, boundary })
}

impl PredecessorProgram {
    /// Constant offsets `d` with read point `p - d`.
    pub fn offsets(&self) -> Result<Vec<Vec<i64>>, DepError> {
        let mut out = Vec::new();
        for r in &self.reads {
            let mut off = Vec::new();
            for (k, p) in r.iter().enumerate() {
                let v = &self.dims[k].0;
                let shift = p.sub(&Poly::var(v));
                if shift.degree() > 0 {
                    return Err(DepError::Rejected(format!(
                        "read index `{p}` in dimension `{v}` is not `{v}` plus a constant; general polynomial predecessors are not supported"
                    )));
                }
                off.push(-shift.constant_term());
            }
            if !lex_positive(&off) {
                let edge = self.dims.iter().map(|d| d.1).collect::<Vec<_>>();
                let from: Vec<i64> = edge.iter().zip(&off).map(|(a, b)| a - b).collect();
                return Err(DepError::Cyclic { from: fmt_point(&from), to: fmt_point(&edge) });
            }
            out.push(off);
        }
        Ok(out)
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.len() == self.dims.len() && p.iter().zip(&self.dims).all(|(x, (_, lo, hi))| lo <= x && x <= hi)
    }

    fn boundary_value(&self, p: &[i64]) -> Result<Value, DepError> {
        self.boundary.get(p).or(self.boundary_default.as_ref()).cloned().ok_or_else(|| DepError::MissingBoundary(fmt_point(p)))
    }

    fn cell(&self, p: &[i64]) -> Cell {
        Cell::Indexed(self.array.clone(), p.iter().map(|&x| Value::int(x)).collect())
    }

    fn eval_point(&self, p: &[i64], offsets: &[Vec<i64>], mem: &Memory, sem: &dyn Semantics) -> Result<Value, DepError> {
        let mut args = Vec::with_capacity(offsets.len());
        for d in offsets {
            let q: Vec<i64> = p.iter().zip(d).map(|(a, b)| a - b).collect();
            if self.contains(&q) {
                let v = mem.get(&self.cell(&q)).ok_or_else(|| DepError::NotReady(fmt_point(&q), fmt_point(p)))?;
                args.push(v.clone());
            } else {
                args.push(self.boundary_value(&q)?);
            }
        }
        sem.apply(&self.kernel, &args).ok_or_else(|| DepError::Kernel(format!("`{}` undefined at {}", self.kernel, fmt_point(p))))
    }
}

fn lex_positive(d: &[i64]) -> bool {
    d.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

pub fn fmt_point(p: &[i64]) -> String {
    let parts: Vec<String> = p.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug)]
pub struct DependencePlan {
    pub dims: Vec<(String, i64, i64)>,
    /// Domain points in lexicographic order.
    pub points: Vec<IterationPoint>,
    pub offsets: Vec<Vec<i64>>,
    /// Immediate-predecessor edges as point indices.
    pub edges: Vec<(usize, usize)>,
    pub layer_of: Vec<usize>,
    pub layers: Vec<Vec<usize>>,
    /// `(n, c)` with `layer(p) = n·p + c` for every point, certified
    /// against every offset.
    pub normal: Option<(Vec<i64>, i64)>,
    preds: Vec<Vec<usize>>,
    cones: OnceLock<Vec<Vec<u64>>>,
}

pub fn ready_wavefronts(prog: &PredecessorProgram) -> Result<DependencePlan, DepError> {
    let offsets = prog.offsets()?;
    let mut points = Vec::new();
    let mut cur: Vec<i64> = prog.dims.iter().map(|d| d.1).collect();
    if prog.dims.iter().all(|d| d.1 <= d.2) {
        loop {
            points.push(cur.clone());
            let mut k = cur.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                if cur[k] < prog.dims[k].2 {
                    cur[k] += 1;
                    break false;
                }
                cur[k] = prog.dims[k].1;
            };
            if done {
                break;
            }
        }
    }
    let index: BTreeMap<&[i64], usize> = points.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let mut preds = vec![Vec::new(); points.len()];
    let mut edges = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for d in &offsets {
            let q: Vec<i64> = p.iter().zip(d).map(|(a, b)| a - b).collect();
            if let Some(&j) = index.get(q.as_slice()) {
                if !preds[i].contains(&j) {
                    preds[i].push(j);
                    edges.push((j, i));
                }
            }
        }
    }
    // Lexicographic order is topological since offsets are lex-positive.
    let mut layer_of = vec![0usize; points.len()];
    for i in 0..points.len() {
        layer_of[i] = preds[i].iter().map(|&j| layer_of[j] + 1).max().unwrap_or(0);
    }
    let count = layer_of.iter().max().map(|m| m + 1).unwrap_or(0);
    let mut layers = vec![Vec::new(); count];
    for (i, &l) in layer_of.iter().enumerate() {
        layers[l].push(i);
    }
    let normal = affine_normal(&points, &layer_of, &offsets);
    Ok(DependencePlan {
        dims: prog.dims.clone(),
        points,
        offsets,
        edges,
        layer_of,
        layers,
        normal,
        preds,
        cones: OnceLock::new(),
    })
}

fn affine_normal(points: &[IterationPoint], layer_of: &[usize], offsets: &[Vec<i64>]) -> Option<(Vec<i64>, i64)> {
    let first = points.first()?;
    let at: BTreeMap<&[i64], i64> = points.iter().zip(layer_of).map(|(p, &l)| (p.as_slice(), l as i64)).collect();
    let base = at[first.as_slice()];
    let mut n = vec![0i64; first.len()];
    for (k, nk) in n.iter_mut().enumerate() {
        let mut q = first.clone();
        q[k] += 1;
        if let Some(&l) = at.get(q.as_slice()) {
            *nk = l - base;
        }
    }
    let dot = |p: &[i64]| p.iter().zip(&n).map(|(a, b)| a * b).sum::<i64>();
    let c = base - dot(first);
    let affine = points.iter().zip(layer_of).all(|(p, &l)| dot(p) + c == l as i64);
    let separating = offsets.iter().all(|d| dot(d) > 0);
    (affine && separating).then_some((n, c))
}

impl DependencePlan {
    pub fn index_of(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.dims.len() {
            return None;
        }
        let mut idx = 0usize;
        for (x, (_, lo, hi)) in p.iter().zip(&self.dims) {
            if x < lo || x > hi {
                return None;
            }
            idx = idx * (hi - lo + 1) as usize + (x - lo) as usize;
        }
        Some(idx)
    }

    fn cone_bits(&self) -> &Vec<Vec<u64>> {
        self.cones.get_or_init(|| {
            let words = self.points.len().div_ceil(64);
            let mut cones: Vec<Vec<u64>> = Vec::with_capacity(self.points.len());
            for i in 0..self.points.len() {
                let mut bits = vec![0u64; words];
                for &j in &self.preds[i] {
                    bits[j / 64] |= 1 << (j % 64);
                    for (w, b) in bits.iter_mut().zip(&cones[j]) {
                        *w |= b;
                    }
                }
                cones.push(bits);
            }
            cones
        })
    }

    fn in_cone(&self, of: usize, q: usize) -> bool {
        self.cone_bits()[of][q / 64] >> (q % 64) & 1 == 1
    }

    pub fn cone(&self, p: &[i64]) -> Result<BTreeSet<IterationPoint>, DepError> {
        let i = self.index_of(p).ok_or_else(|| DepError::OutOfDomain(fmt_point(p)))?;
        Ok((0..self.points.len()).filter(|&q| self.in_cone(i, q)).map(|q| self.points[q].clone()).collect())
    }

    /// True iff no point lies in the cone of another.
    pub fn check_parallel_set(&self, points: &[IterationPoint]) -> Result<bool, DepError> {
        let mut idx = Vec::new();
        for p in points {
            idx.push(self.index_of(p).ok_or_else(|| DepError::OutOfDomain(fmt_point(p)))?);
        }
        Ok(idx.iter().all(|&a| idx.iter().all(|&b| !self.in_cone(a, b))))
    }

    pub fn layer_points(&self, t: usize) -> Vec<IterationPoint> {
        self.layers[t].iter().map(|&i| self.points[i].clone()).collect()
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let dims: Vec<String> = self.dims.iter().map(|(v, lo, hi)| format!("{v}={lo}..{hi}")).collect();
        let _ = writeln!(s, "dims {}", dims.join(", "));
        let offs: Vec<String> = self.offsets.iter().map(|d| fmt_point(d)).collect();
        let _ = writeln!(s, "offsets {}", offs.join(" "));
        let _ = writeln!(s, "points {}", self.points.len());
        let _ = writeln!(s, "edges {}", self.edges.len());
        let _ = writeln!(s, "layers {}", self.layers.len());
        for t in 0..self.layers.len() {
            let pts: Vec<String> = self.layers[t].iter().map(|&i| fmt_point(&self.points[i])).collect();
            let _ = writeln!(s, "layer {t} size {}: {}", pts.len(), pts.join(" "));
        }
        match &self.normal {
            Some((n, c)) => {
                let _ = writeln!(s, "normal {} offset {c}", fmt_point(n));
            }
            None => s.push_str("normal none\n"),
        }
        s
    }

    /// One `from to` line per immediate-predecessor edge.
    pub fn edge_list(&self) -> String {
        let mut s = String::new();
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "{} {}", fmt_point(&self.points[a]), fmt_point(&self.points[b]));
        }
        s
    }
}

pub fn dependence_cone(prog: &PredecessorProgram, p: &[i64]) -> Result<BTreeSet<IterationPoint>, DepError> {
    ready_wavefronts(prog)?.cone(p)
}

pub fn check_parallel_set(prog: &PredecessorProgram, points: &[IterationPoint]) -> Result<bool, DepError> {
    ready_wavefronts(prog)?.check_parallel_set(points)
}

/// Evaluates layer by layer; `shuffle` permutes the points of each layer.
pub fn execute_wavefront(
    prog: &PredecessorProgram,
    plan: &DependencePlan,
    sem: &dyn Semantics,
    shuffle: Option<u64>,
) -> Result<Memory, DepError> {
    let mut rng = shuffle.map(ChaCha8Rng::seed_from_u64);
    let mut mem = Memory::new();
    for layer in &plan.layers {
        let mut order = layer.clone();
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        // Evaluate against the memory of earlier layers only.
        let mut results = Vec::with_capacity(order.len());
        for &i in &order {
            let p = &plan.points[i];
            results.push((prog.cell(p), prog.eval_point(p, &plan.offsets, &mem, sem)?));
        }
        mem.extend(results);
    }
    Ok(mem)
}

/// Lexicographic evaluation, the sequential reference.
pub fn execute_sequential(prog: &PredecessorProgram, sem: &dyn Semantics) -> Result<Memory, DepError> {
    let plan = ready_wavefronts(prog)?;
    let mut mem = Memory::new();
    for p in &plan.points {
        let v = prog.eval_point(p, &plan.offsets, &mem, sem)?;
        mem.insert(prog.cell(p), v);
    }
    Ok(mem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Interpretation;

    const CHAIN: &str = "array a\nparam N = 5\ndims i = 1..N\nkernel succ\nread a[i-1]\nboundary a[0] = 0";

    fn prog(src: &str) -> PredecessorProgram {
        parse_predecessor_program(src, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn chain_layers_are_singletons() {
        let plan = ready_wavefronts(&prog(CHAIN)).unwrap();
        assert_eq!(plan.layers.len(), 5);
        assert!(plan.layers.iter().all(|l| l.len() == 1));
        assert_eq!(plan.normal, Some((vec![1], -1)));
    }

    #[test]
    fn chain_executes_to_counts() {
        let p = prog(CHAIN);
        let plan = ready_wavefronts(&p).unwrap();
        let mem = execute_wavefront(&p, &plan, &Interpretation::with_builtins(), None).unwrap();
        let vals: Vec<i64> = (1..=5).map(|i| mem[&p.cell(&[i])].as_i64().unwrap()).collect();
        assert_eq!(vals, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn missing_boundary_is_an_error() {
        let p = prog(&CHAIN.replace("boundary a[0] = 0", "boundary a[7] = 0"));
        let plan = ready_wavefronts(&p).unwrap();
        let err = execute_wavefront(&p, &plan, &Interpretation::with_builtins(), None).unwrap_err();
        assert_eq!(err, DepError::MissingBoundary("(0)".into()));
    }

    #[test]
    fn backward_read_is_cyclic() {
        let p = prog(&CHAIN.replace("a[i-1]", "a[i+1]"));
        assert!(matches!(ready_wavefronts(&p), Err(DepError::Cyclic { .. })));
        let p = prog(&CHAIN.replace("a[i-1]", "a[i]"));
        assert!(matches!(ready_wavefronts(&p), Err(DepError::Cyclic { .. })));
    }

    #[test]
    fn polynomial_predecessor_rejected() {
        let p = prog(&CHAIN.replace("a[i-1]", "a[2*i - 3]"));
        assert!(matches!(ready_wavefronts(&p), Err(DepError::Rejected(_))));
    }

    #[test]
    fn corner_cone_is_empty() {
        let plan = ready_wavefronts(&prog(CHAIN)).unwrap();
        assert!(plan.cone(&[1]).unwrap().is_empty());
        assert_eq!(plan.cone(&[3]).unwrap(), BTreeSet::from([vec![1], vec![2]]));
        assert!(matches!(plan.cone(&[9]), Err(DepError::OutOfDomain(_))));
        assert!(plan.check_parallel_set(&[vec![4]]).unwrap());
        assert!(!plan.check_parallel_set(&[vec![4], vec![2]]).unwrap());
    }
}
