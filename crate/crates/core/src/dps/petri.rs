//! Place/transition nets and their encoding as specifications.
//!
//! ```text
//! places buffer, free, done
//! marking buffer = 1, free = 0
//! transition consume: buffer -> done
//! transition batch: buffer*2 -> done, free
//! ```
//!
//! Places absent from the marking line start empty.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::Value;
use crate::setdef::{Family, SetName};
use crate::text::{content_lines, Cursor, ParseError};

use super::engine::{get, pick};
use super::{Dps, DpsError, DpsSystem, Guard, SetExpr, Strategy, Trigger};

pub type Marking = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    /// `(place, k(p, t))`
    pub inputs: Vec<(usize, u32)>,
    /// `(place, k(t, q))`
    pub outputs: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial: Marking,
}

impl PetriNet {
    pub fn place(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p == name)
    }

    pub fn is_allowed(&self, m: &Marking, t: usize) -> bool {
        self.transitions[t].inputs.iter().all(|&(p, k)| m[p] >= k)
    }

    /// Allowed transitions in declaration order.
    pub fn allowed(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len()).filter(|&t| self.is_allowed(m, t)).collect()
    }

    /// Change of each place's count when `t` fires.
    pub fn delta(&self, t: usize) -> Vec<i64> {
        let mut d = vec![0i64; self.places.len()];
        for &(p, k) in &self.transitions[t].inputs {
            d[p] -= k as i64;
        }
        for &(p, k) in &self.transitions[t].outputs {
            d[p] += k as i64;
        }
        d
    }

    /// The markings reached by firing one seeded choice per step, starting
    /// with `m`; the step numbering matches the single-step strategy.
    pub fn simulate(&self, m: &Marking, seed: u64, steps: usize) -> Vec<Marking> {
        let mut out = vec![m.clone()];
        let mut cur = m.clone();
        for step in 1..=steps {
            let allowed = self.allowed(&cur);
            if allowed.is_empty() {
                break;
            }
            let t = allowed[pick(seed, step, allowed.len())];
            cur = fire(self, &cur, t).expect("allowed");
            out.push(cur.clone());
        }
        out
    }
}

/// The marking after firing `t`, or `None` when `t` is not allowed.
pub fn fire(net: &PetriNet, m: &Marking, t: usize) -> Option<Marking> {
    if !net.is_allowed(m, t) {
        return None;
    }
    let mut next = m.clone();
    for &(p, k) in &net.transitions[t].inputs {
        next[p] -= k;
    }
    for &(p, k) in &net.transitions[t].outputs {
        next[p] += k;
    }
    Some(next)
}

fn arcs(c: &mut Cursor, places: &[String], end: Option<&str>) -> Result<Vec<(usize, u32)>, ParseError> {
    let mut out: Vec<(usize, u32)> = Vec::new();
    if c.at_end() || end.is_some_and(|e| c.is_sym(e)) {
        return Ok(out);
    }
    loop {
        let name = c.ident()?;
        let p = places.iter().position(|q| *q == name).ok_or_else(|| c.err(format!("unknown place `{name}`")))?;
        let k = if c.eat_sym("*") {
            u32::try_from(c.int()?).ok().filter(|&k| k > 0).ok_or_else(|| c.err("multiplicity must be positive"))?
        } else {
            1
        };
        match out.iter_mut().find(|(q, _)| *q == p) {
            Some((_, old)) => *old += k,
            None => out.push((p, k)),
        }
        if !c.eat_sym(",") {
            return Ok(out);
        }
    }
}

pub fn parse_petri(src: &str) -> Result<PetriNet, DpsError> {
    let mut places: Vec<String> = Vec::new();
    let mut marking: Vec<(usize, u32)> = Vec::new();
    let mut transitions = Vec::new();
    for (no, line) in content_lines(src) {
        let mut c = Cursor::new(line, no)?;
        if c.eat_kw("places") {
            loop {
                let p = c.ident()?;
                if places.contains(&p) {
                    return Err(c.err(format!("place `{p}` declared twice")).into());
                }
                places.push(p);
                if !c.eat_sym(",") {
                    break;
                }
            }
        } else if c.eat_kw("marking") {
            while !c.at_end() {
                let name = c.ident()?;
                let p = places.iter().position(|q| *q == name).ok_or_else(|| c.err(format!("unknown place `{name}`")))?;
                c.expect_sym("=")?;
                let n = u32::try_from(c.int()?).map_err(|_| c.err("marking must be nonnegative"))?;
                marking.push((p, n));
                if !c.eat_sym(",") {
                    break;
                }
            }
        } else if c.eat_kw("transition") {
            let name = c.ident()?;
            c.expect_sym(":")?;
            let inputs = arcs(&mut c, &places, Some("->"))?;
            c.expect_sym("->")?;
            let outputs = arcs(&mut c, &places, None)?;
            transitions.push(Transition { name, inputs, outputs });
        } else {
            return Err(c.err(format!("expected `places`, `marking` or `transition`, found {}", c.describe())).into());
        }
        c.expect_end()?;
    }
    let mut names: Vec<&String> = places.iter().chain(transitions.iter().map(|t| &t.name)).collect();
    names.sort();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(DpsError::Invalid(format!("name `{}` is used twice", w[0])));
    }
    let mut initial = vec![0; places.len()];
    for (p, n) in marking {
        initial[p] = n;
    }
    Ok(PetriNet { places, transitions, initial })
}

/// One set per place holding the counter tokens `1..=μ(p)`.
pub fn encode_marking(net: &PetriNet, m: &Marking) -> Family {
    net.places
        .iter()
        .zip(m)
        .filter(|(_, &n)| n > 0)
        .map(|(p, &n)| (SetName::plain(p), (1..=n as i64).map(Value::int).collect::<BTreeSet<_>>()))
        .collect()
}

pub fn decode_marking(net: &PetriNet, f: &Family) -> Marking {
    net.places.iter().map(|p| get(f, p).len() as u32).collect()
}

/// One system per transition, applicable exactly when the transition is
/// allowed. Steps fire one applicable system, chosen by `seed`.
pub fn petri_to_dps(net: &PetriNet, seed: u64) -> Dps {
    let systems = net
        .transitions
        .iter()
        .enumerate()
        .map(|(t, tr)| {
            let inputs: Vec<String> = tr.inputs.iter().map(|&(p, _)| net.places[p].clone()).collect();
            let guards = tr.inputs.iter().map(|&(p, k)| Guard::AtLeast(net.places[p].clone(), k as usize)).collect();
            let rules = net
                .delta(t)
                .into_iter()
                .enumerate()
                .filter(|&(_, d)| d != 0)
                .map(|(p, d)| (net.places[p].clone(), SetExpr::Count(net.places[p].clone(), d)))
                .collect();
            DpsSystem { name: tr.name.clone(), inputs, trigger: Trigger::Always, guards, rules }
        })
        .collect();
    let mut dps = Dps::new(systems, &[]);
    dps.start = net.places.clone();
    dps.strategy = Strategy::Single(Some(seed));
    dps
}

/// A seeded net whose transitions each consume from one or two places with
/// multiplicities up to 2.
pub fn random_net(places: usize, transitions: usize, seed: u64) -> PetriNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..places).map(|p| format!("p{p}")).collect();
    let draw = |rng: &mut ChaCha8Rng, n: usize| {
        let mut out: Vec<(usize, u32)> = Vec::new();
        for _ in 0..n {
            let p = rng.gen_range(0..places);
            if !out.iter().any(|&(q, _)| q == p) {
                out.push((p, rng.gen_range(1..=2)));
            }
        }
        out.sort();
        out
    };
    let transitions = (0..transitions)
        .map(|t| {
            let ni = rng.gen_range(1..=2);
            let no = rng.gen_range(0..=2);
            let inputs = draw(&mut rng, ni);
            let outputs = draw(&mut rng, no);
            Transition { name: format!("t{t}"), inputs, outputs }
        })
        .collect();
    let initial = (0..places).map(|_| rng.gen_range(0..=3)).collect();
    PetriNet { places: names, transitions, initial }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PC: &str = "places ready, done\nmarking ready = 1\ntransition work: ready -> done";

    #[test]
    fn parses_and_fires() {
        let net = parse_petri(PC).unwrap();
        assert_eq!(net.initial, vec![1, 0]);
        assert_eq!(fire(&net, &net.initial, 0), Some(vec![0, 1]));
        assert_eq!(fire(&net, &vec![0, 1], 0), None);
    }

    #[test]
    fn multiplicities_and_empty_sides() {
        let net = parse_petri("places a, b\ntransition t: a*2 -> \ntransition s: -> a, b*3").unwrap();
        assert_eq!(net.transitions[0].inputs, vec![(0, 2)]);
        assert!(net.transitions[0].outputs.is_empty());
        assert_eq!(net.delta(1), vec![1, 3]);
    }

    #[test]
    fn rejects_unknown_places() {
        assert!(parse_petri("places a\ntransition t: b -> a").is_err());
        assert!(parse_petri("places a\ntransition a: a -> a").is_err());
    }

    #[test]
    fn codec_round_trips() {
        let net = random_net(4, 3, 9);
        let m = vec![0, 3, 1, 2];
        assert_eq!(decode_marking(&net, &encode_marking(&net, &m)), m);
    }
}
