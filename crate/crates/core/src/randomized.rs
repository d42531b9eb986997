//! Randomized colorings with constant vertex-averaged complexity.

use rand::Rng;
use serde::Serialize;

use crate::engine::{run, Action, Ctx, EngineError, ExecutionResult, Incoming, RoundLedger, RunOptions, Timeline, VertexProgram};
use crate::graph::{max_degree, Graph, IdAssignment};
use crate::linial::ColorVector;
use crate::partition::{partition_phase, PartitionParams};

/// Waiting rule for the second phase of [`rand_a_loglogn`]: a vertex of
/// `H_j` starts once round `j` has passed and every neighbor in a later
/// H-set has a final color.
#[derive(Clone, Copy)]
pub struct Gate<'a> {
    pub index: &'a [u64],
    /// Global round before the program's first round.
    pub offset: u64,
}

/// Each round: flip a coin; on heads propose a uniform color from the
/// palette minus the neighbors' final colors, and keep it if no neighbor
/// proposed the same color. Two exchanges per counted round.
pub struct RandColorProgram<'a> {
    pub g: &'a Graph,
    pub lo: u64,
    pub hi: u64,
    pub gate: Option<Gate<'a>>,
}

pub struct RandState {
    finals: Vec<u64>,
    proposal: Option<u64>,
    /// Later-set neighbors still without a color.
    pending: usize,
    later: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Proposal(pub u64);

/// Output color; zero means the palette was exhausted at decision time.
pub const NO_COLOR: u64 = 0;

impl VertexProgram for RandColorProgram<'_> {
    type State = RandState;
    type Msg = Proposal;
    type Output = u64;

    fn init(&self, ctx: &mut Ctx<'_>) -> RandState {
        let later: Vec<bool> = match self.gate {
            Some(gate) => {
                let own = gate.index[ctx.index];
                self.g.neighbors(ctx.index).iter().map(|&u| gate.index[u] > own).collect()
            }
            None => vec![false; ctx.degree],
        };
        RandState { finals: Vec::new(), proposal: None, pending: later.iter().filter(|&&b| b).count(), later }
    }

    fn step(&self, st: &mut RandState, ctx: &mut Ctx<'_>, inbox: &[Incoming<Proposal, u64>]) -> Action<Proposal, u64> {
        if ctx.exchange == 0 {
            for item in inbox {
                if let Incoming::Final { port, output } = item {
                    st.finals.push(*output);
                    if st.later[*port] {
                        st.pending -= 1;
                    }
                }
            }
            st.proposal = None;
            if let Some(gate) = self.gate {
                if gate.offset + ctx.round <= gate.index[ctx.index] || st.pending > 0 {
                    return Action::idle();
                }
            }
            let free: Vec<u64> = (self.lo..=self.hi).filter(|c| !st.finals.contains(c)).collect();
            if free.is_empty() {
                return Action::Finish(NO_COLOR);
            }
            if !ctx.rng.random_bool(0.5) {
                return Action::idle();
            }
            let c = free[ctx.rng.random_range(0..free.len())];
            st.proposal = Some(c);
            return Action::broadcast(Proposal(c));
        }
        let Some(c) = st.proposal else {
            return Action::idle();
        };
        let clash = inbox.iter().any(|item| matches!(item, Incoming::Msg { msg: Proposal(x), .. } if *x == c));
        if clash {
            Action::idle()
        } else {
            Action::Finish(c)
        }
    }
}

/// Randomized `(max_degree + 1)`-coloring with colors `1..=max_degree+1`.
pub fn rand_delta_plus1(g: &Graph, ids: &IdAssignment, seed: u64) -> Result<(ColorVector, ExecutionResult<u64>), EngineError> {
    let program = RandColorProgram { g, lo: 1, hi: max_degree(g) as u64 + 1, gate: None };
    let opts = RunOptions { exchanges: 2, ..RunOptions::seeded(seed) };
    let res = run(g, ids, &program, &opts)?;
    Ok((ColorVector::plain(res.outputs.iter().copied()), res))
}

/// `floor(2 log2 log2 n)`.
pub fn loglog_iterations(n: usize) -> u64 {
    let ll = (n.max(2) as f64).log2().log2();
    (2.0 * ll).floor().max(0.0) as u64
}

#[derive(Clone, Debug, Serialize)]
pub struct RandALogLogReport {
    pub t: u64,
    pub ell: u64,
    pub big_a: u64,
    pub phase1: usize,
    pub phase2: usize,
}

/// Two-phase randomized coloring: H-sets `1..=t` each colored on formation
/// from `{1..=A+1}` as `[c, i]`; the rest colored from `{A+2..=2A+2}` as
/// `[c]`, later H-sets first.
pub fn rand_a_loglogn(
    g: &Graph,
    ids: &IdAssignment,
    pparams: &PartitionParams,
    seed: u64,
) -> Result<(ColorVector, ExecutionResult<Vec<u64>>, RandALogLogReport), EngineError> {
    let n = g.n();
    if n < 4 {
        return Err(EngineError::Contract(format!("n = {n} below 4")));
    }
    let big_a = pparams.big_a;
    let t = loglog_iterations(n);
    let mut tl = Timeline::new(g, ids, seed);
    let all: Vec<usize> = (0..n).collect();
    let part = partition_phase(&mut tl, &all, big_a, None, 0, false)?;
    let index: Vec<u64> = all.iter().map(|&v| part.output(v).index.expect("no budget")).collect();
    let ell = index.iter().copied().max().unwrap_or(0);
    let mut colors = vec![Vec::new(); n];

    let mut phase1 = 0;
    for i in 1..=t.min(ell) {
        let hset: Vec<usize> = all.iter().copied().filter(|&v| index[v] == i).collect();
        let program = RandColorProgram { g, lo: 1, hi: big_a + 1, gate: None };
        let phase = tl.run(&program, &hset, i, 2)?;
        for &v in &hset {
            let c = *phase.output(v);
            if c == NO_COLOR {
                return Err(EngineError::Contract(format!("vertex {v} found no free color")));
            }
            colors[v] = vec![c, i];
        }
        phase1 += hset.len();
    }

    let rest: Vec<usize> = all.iter().copied().filter(|&v| index[v] > t).collect();
    let program = RandColorProgram { g, lo: big_a + 2, hi: 2 * big_a + 2, gate: Some(Gate { index: &index, offset: t }) };
    let phase = tl.run(&program, &rest, t, 2)?;
    for &v in &rest {
        let c = *phase.output(v);
        if c == NO_COLOR {
            return Err(EngineError::Contract(format!("vertex {v} found no free color")));
        }
        colors[v] = vec![c];
    }
    let report = RandALogLogReport { t, ell, big_a, phase1, phase2: rest.len() };
    let cv = ColorVector { colors };
    Ok((cv.clone(), tl.into_result(cv.colors), report))
}

/// Per round `i`: `(n_i, n_i - n_{i+1})`, active vertices and how many of
/// them finish in round `i`.
pub fn termination_counts(ledger: &RoundLedger) -> Vec<(u64, u64)> {
    let worst = ledger.r.iter().copied().max().unwrap_or(0) as usize;
    let mut finishing = vec![0u64; worst + 1];
    for &r in &ledger.r {
        finishing[r as usize] += 1;
    }
    let mut active = ledger.r.len() as u64;
    let mut out = Vec::with_capacity(worst);
    for f in finishing.iter().skip(1) {
        out.push((active, *f));
        active -= f;
    }
    out
}

/// One pooled round of the termination-frequency check.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencyRow {
    pub round: usize,
    pub active: u64,
    pub frequency: f64,
    pub threshold: f64,
    pub ok: bool,
}

/// Pools [`termination_counts`] over runs and tests each round with at
/// least `min_active` active vertices against `p - 3 sigma`.
pub fn termination_frequency_check(counts: &[Vec<(u64, u64)>], p: f64, min_active: u64) -> Vec<FrequencyRow> {
    let rounds = counts.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..rounds)
        .filter_map(|i| {
            let (a, f) = counts
                .iter()
                .filter_map(|c| c.get(i))
                .fold((0u64, 0u64), |(a, f), &(x, y)| (a + x, f + y));
            if a < min_active {
                return None;
            }
            let frequency = f as f64 / a as f64;
            let threshold = p - 3.0 * (p * (1.0 - p) / a as f64).sqrt();
            Some(FrequencyRow { round: i + 1, active: a, frequency, threshold, ok: frequency >= threshold })
        })
        .collect()
}
