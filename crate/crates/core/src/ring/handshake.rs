//! Asynchronous odd-even handshaking as a discrete-event simulation.
//!
//! Every module repeats: receive a package `K` from the right neighbour
//! (state p), acknowledge it (state f), compute (state q), send the result
//! to the left neighbour. With flags, the acknowledgement is a flag `F`
//! carrying the sender's ID, and a module that still has an unacknowledged
//! package waits in state r before sending again. Odd modules start in q
//! with a package, even modules start in p.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use super::priority::RingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AState {
    P,
    Q,
    R,
    F,
}

impl fmt::Display for AState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AState::P => "p",
            AState::Q => "q",
            AState::R => "r",
            AState::F => "f",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    /// A package from the right neighbour.
    K,
    /// A flag carrying a module ID.
    Flag,
    /// End of the module's own computation.
    Done,
    /// No input: the state acts immediately.
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemSym {
    Any,
    /// No package of ours is waiting for a flag.
    Clear,
    Outstanding,
    OwnId,
    ForeignId,
    Unflagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Act {
    Accept,
    EmitFlag,
    StartCompute,
    SendK,
    NoteAck,
    Ignore,
    Wait,
}

/// One command `(q1, S, m) -> (D, q2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Command {
    pub from: AState,
    pub input: Input,
    pub mem: MemSym,
    pub act: Act,
    pub to: AState,
}

use AState::*;

pub const COMMANDS: [Command; 12] = [
    Command { from: P, input: Input::K, mem: MemSym::Any, act: Act::Accept, to: F },
    Command { from: F, input: Input::Tau, mem: MemSym::Any, act: Act::EmitFlag, to: Q },
    Command { from: F, input: Input::Tau, mem: MemSym::Unflagged, act: Act::StartCompute, to: Q },
    Command { from: Q, input: Input::Done, mem: MemSym::Clear, act: Act::SendK, to: P },
    Command { from: Q, input: Input::Done, mem: MemSym::Outstanding, act: Act::Wait, to: R },
    Command { from: R, input: Input::Flag, mem: MemSym::OwnId, act: Act::SendK, to: P },
    Command { from: R, input: Input::Flag, mem: MemSym::ForeignId, act: Act::Wait, to: R },
    Command { from: P, input: Input::Flag, mem: MemSym::OwnId, act: Act::NoteAck, to: P },
    Command { from: Q, input: Input::Flag, mem: MemSym::OwnId, act: Act::NoteAck, to: Q },
    Command { from: P, input: Input::Flag, mem: MemSym::ForeignId, act: Act::Ignore, to: P },
    Command { from: Q, input: Input::Flag, mem: MemSym::ForeignId, act: Act::Ignore, to: Q },
    Command { from: F, input: Input::Flag, mem: MemSym::Any, act: Act::Ignore, to: F },
];

fn lookup(from: AState, input: Input, mem: MemSym) -> Command {
    *COMMANDS
        .iter()
        .find(|c| c.from == from && c.input == input && (c.mem == mem || (c.mem == MemSym::Any && mem != MemSym::Unflagged)))
        .or_else(|| COMMANDS.iter().find(|c| c.from == from && c.input == input && c.mem == MemSym::Any))
        .expect("automaton command table is complete")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeConfig {
    pub costs: Vec<u64>,
    pub steps: usize,
    pub flags: bool,
    /// `(time, module, id)`: deliver a flag with `id` to `module`.
    pub injected_flags: Vec<(u64, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub time: u64,
    pub module: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModuleStats {
    /// Time spent in p or r.
    pub waiting: u64,
    pub longest_wait: u64,
    /// Longest time a package sat in the inbox before acceptance.
    pub max_latency: u64,
    pub max_backlog: usize,
    /// Completion time of each computation.
    pub done_at: Vec<u64>,
    pub sends_at: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeReport {
    pub modules: Vec<ModuleStats>,
    pub trace: Vec<TraceEntry>,
    pub deadlock: bool,
    pub end_time: u64,
}

impl HandshakeReport {
    pub fn max_latency(&self) -> u64 {
        self.modules.iter().map(|m| m.max_latency).max().unwrap_or(0)
    }

    pub fn max_backlog(&self) -> usize {
        self.modules.iter().map(|m| m.max_backlog).max().unwrap_or(0)
    }

    /// Spread of the completion times of the `s`-th computation.
    pub fn skew(&self, s: usize) -> u64 {
        let times: Vec<u64> = self.modules.iter().filter_map(|m| m.done_at.get(s).copied()).collect();
        times.iter().max().copied().unwrap_or(0) - times.iter().min().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Done(usize),
    Package(usize),
    Flag(usize, usize),
}

struct Module {
    state: AState,
    inbox: VecDeque<u64>,
    outstanding: bool,
    wait_since: Option<u64>,
    computed: usize,
}

struct Sim<'c> {
    cfg: &'c HandshakeConfig,
    mods: Vec<Module>,
    stats: Vec<ModuleStats>,
    queue: BinaryHeap<Reverse<(u64, u64, Event)>>,
    seq: u64,
    trace: Vec<TraceEntry>,
}

impl Sim<'_> {
    fn n(&self) -> usize {
        self.mods.len()
    }

    fn left(&self, w: usize) -> usize {
        (w + self.n() - 1) % self.n()
    }

    fn right(&self, w: usize) -> usize {
        (w + 1) % self.n()
    }

    fn push(&mut self, t: u64, e: Event) {
        self.seq += 1;
        self.queue.push(Reverse((t, self.seq, e)));
    }

    fn fire(&mut self, t: u64, w: usize, input: Input, mem: MemSym) -> Command {
        let c = lookup(self.mods[w].state, input, mem);
        self.trace.push(TraceEntry { time: t, module: w + 1, command: c });
        self.set_state(t, w, c.to);
        c
    }

    fn set_state(&mut self, t: u64, w: usize, s: AState) {
        let m = &mut self.mods[w];
        let waiting = matches!(s, AState::P | AState::R);
        match (m.wait_since, waiting) {
            (None, true) => m.wait_since = Some(t),
            (Some(since), false) => {
                m.wait_since = None;
                let st = &mut self.stats[w];
                st.waiting += t - since;
                st.longest_wait = st.longest_wait.max(t - since);
            }
            _ => {}
        }
        m.state = s;
    }

    fn send(&mut self, t: u64, w: usize) {
        self.stats[w].sends_at.push(t);
        if self.cfg.flags {
            self.mods[w].outstanding = true;
        }
        let l = self.left(w);
        self.push(t, Event::Package(l));
    }

    /// Accepts queued packages while in p.
    fn try_accept(&mut self, t: u64, w: usize) {
        if self.mods[w].state != AState::P {
            return;
        }
        let Some(arrived) = self.mods[w].inbox.pop_front() else { return };
        let st = &mut self.stats[w];
        st.max_latency = st.max_latency.max(t - arrived);
        self.fire(t, w, Input::K, MemSym::Any);
        let mem = if self.cfg.flags { MemSym::Any } else { MemSym::Unflagged };
        let c = self.fire(t, w, Input::Tau, mem);
        if c.act == Act::EmitFlag {
            let r = self.right(w);
            self.push(t, Event::Flag(r, r));
        }
        self.push(t + self.cfg.costs[w], Event::Done(w));
    }

    fn handle(&mut self, t: u64, e: Event) {
        match e {
            Event::Done(w) => {
                self.mods[w].computed += 1;
                self.stats[w].done_at.push(t);
                let mem = if self.mods[w].outstanding { MemSym::Outstanding } else { MemSym::Clear };
                let c = self.fire(t, w, Input::Done, mem);
                if c.act == Act::SendK {
                    self.send(t, w);
                    self.try_accept(t, w);
                }
            }
            Event::Package(w) => {
                self.mods[w].inbox.push_back(t);
                let b = self.mods[w].inbox.len();
                self.stats[w].max_backlog = self.stats[w].max_backlog.max(b);
                self.try_accept(t, w);
            }
            Event::Flag(w, id) => {
                let own = id == w;
                let c = self.fire(t, w, Input::Flag, if own { MemSym::OwnId } else { MemSym::ForeignId });
                match c.act {
                    Act::NoteAck => self.mods[w].outstanding = false,
                    Act::SendK => {
                        self.mods[w].outstanding = false;
                        self.send(t, w);
                        self.try_accept(t, w);
                    }
                    _ => {}
                }
            }
        }
    }
}

pub fn run_handshake(cfg: &HandshakeConfig) -> Result<HandshakeReport, RingError> {
    let n = cfg.costs.len();
    if n == 0 || n % 2 == 1 {
        return Err(RingError::OddRing(n));
    }
    let mut sim = Sim {
        cfg,
        mods: (0..n)
            .map(|_| Module { state: AState::Q, inbox: VecDeque::new(), outstanding: false, wait_since: None, computed: 0 })
            .collect(),
        stats: vec![ModuleStats::default(); n],
        queue: BinaryHeap::new(),
        seq: 0,
        trace: Vec::new(),
    };
    for w in 0..n {
        // Module numbers are 1-based: index 0 is module 1, which is odd.
        if w % 2 == 0 {
            sim.push(cfg.costs[w], Event::Done(w));
        } else {
            sim.set_state(0, w, AState::P);
        }
    }
    for &(t, m, id) in &cfg.injected_flags {
        if m == 0 || m > n {
            return Err(RingError::Config(format!("no module {m}")));
        }
        sim.push(t, Event::Flag(m - 1, id.wrapping_sub(1)));
    }
    let mut end = 0;
    while sim.mods.iter().any(|m| m.computed < cfg.steps) {
        let Some(Reverse((t, _, e))) = sim.queue.pop() else { break };
        end = t;
        sim.handle(t, e);
    }
    let deadlock = sim.mods.iter().any(|m| m.computed < cfg.steps);
    for w in 0..n {
        if let Some(since) = sim.mods[w].wait_since {
            let st = &mut sim.stats[w];
            st.waiting += end - since;
            st.longest_wait = st.longest_wait.max(end - since);
        }
    }
    Ok(HandshakeReport { modules: sim.stats, trace: sim.trace, deadlock, end_time: end })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(costs: Vec<u64>, flags: bool) -> HandshakeConfig {
        HandshakeConfig { costs, steps: 30, flags, injected_flags: vec![] }
    }

    #[test]
    fn uniform_costs_alternate_strictly() {
        let r = run_handshake(&cfg(vec![1; 8], true)).unwrap();
        assert!(!r.deadlock);
        assert!((0..30).all(|s| r.skew(s) == r.skew(0)));
        for (w, m) in r.modules.iter().enumerate() {
            // Module w + 1 sends at times of its own parity.
            assert!(m.sends_at.iter().all(|t| t % 2 == (w as u64 + 1) % 2), "module {}", w + 1);
        }
    }

    #[test]
    fn flags_bound_the_backlog() {
        let mut costs = vec![1; 8];
        costs[4] = 10;
        let flagged = run_handshake(&cfg(costs.clone(), true)).unwrap();
        let free = run_handshake(&cfg(costs, false)).unwrap();
        assert!(!flagged.deadlock && !free.deadlock);
        assert!(flagged.max_backlog() <= 1);
        assert!(free.max_latency() > flagged.max_latency());
    }

    #[test]
    fn foreign_flag_keeps_waiting() {
        let mut costs = vec![1; 8];
        costs[4] = 10;
        let mut c = cfg(costs, true);
        c.steps = 3;
        // Module 6 waits in r from time 4 to 10 for the flag from module 5; a flag
        // for module 3 arrives in between.
        c.injected_flags = vec![(6, 6, 3)];
        let r = run_handshake(&c).unwrap();
        let hit = r.trace.iter().find(|e| e.module == 6 && e.command.mem == MemSym::ForeignId).unwrap();
        assert_eq!(hit.command.from, AState::R);
        assert_eq!(hit.command.to, AState::R);
        let leave = r.trace.iter().find(|e| e.module == 6 && e.command.from == AState::R && e.command.to != AState::R).unwrap();
        assert_eq!(leave.time, 10);
    }

    #[test]
    fn unflagged_latency_grows_with_ring_size() {
        let lat = |m: usize, flags: bool| {
            let mut costs = vec![1; m];
            costs[m / 2] = 10;
            run_handshake(&cfg(costs, flags)).unwrap().max_latency()
        };
        assert_eq!([lat(4, true), lat(8, true), lat(16, true)], [8, 10, 10]);
        assert_eq!([lat(4, false), lat(8, false), lat(16, false)], [8, 24, 56]);
    }
}
