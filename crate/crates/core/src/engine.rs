//! Synchronous LOCAL-model executor with per-vertex round accounting.
//!
//! A vertex runs its program in lockstep with everyone else. When `step`
//! returns [`Action::Finish`], the vertex broadcasts its output to all
//! neighbors in that same round and becomes inert; that round is its entry
//! in the [`RoundLedger`].

use std::hash::{Hash, Hasher};

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{Graph, IdAssignment};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("round cap {cap} exceeded with {} active vertices (first: {:?})", active.len(), active.iter().take(8).collect::<Vec<_>>())]
    RoundCap { cap: u64, active: Vec<usize> },
    #[error("vertex {vertex} addressed port {port} but has degree {degree}")]
    Locality { vertex: usize, port: usize, degree: usize },
    #[error("{0}")]
    Contract(String),
}

/// Where a message goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    All,
    Port(usize),
}

/// One received item. `port` is the receiver's port toward the sender.
#[derive(Clone, Debug)]
pub enum Incoming<M, O> {
    Msg { port: usize, msg: M },
    Final { port: usize, output: O },
}

pub enum Action<M, O> {
    Continue(Vec<(Target, M)>),
    Finish(O),
}

impl<M, O> Action<M, O> {
    pub fn idle() -> Self {
        Action::Continue(Vec::new())
    }

    pub fn broadcast(msg: M) -> Self {
        Action::Continue(vec![(Target::All, msg)])
    }
}

/// What a vertex may see about itself.
pub struct Ctx<'a> {
    pub index: usize,
    pub id: u64,
    pub degree: usize,
    /// Number of vertices in the whole network.
    pub n: usize,
    /// Counted round, starting at 1. Zero during `init`.
    pub round: u64,
    /// Exchange within the counted round, `0..exchanges`.
    pub exchange: u64,
    pub rng: &'a mut ChaCha8Rng,
}

pub trait VertexProgram {
    type State;
    type Msg: Clone + Hash;
    type Output: Clone + Hash;

    fn init(&self, ctx: &mut Ctx<'_>) -> Self::State;

    fn step(
        &self,
        state: &mut Self::State,
        ctx: &mut Ctx<'_>,
        inbox: &[Incoming<Self::Msg, Self::Output>],
    ) -> Action<Self::Msg, Self::Output>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLedger {
    pub r: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg: Ratio<u64>,
    pub worst: u64,
    pub decay: Vec<u64>,
}

impl Metrics {
    pub fn from_ledger(ledger: &RoundLedger) -> Self {
        let worst = worst_case(ledger);
        let mut decay = vec![0u64; worst as usize];
        for &r in &ledger.r {
            for slot in decay.iter_mut().take(r as usize) {
                *slot += 1;
            }
        }
        Metrics { avg: vertex_averaged(ledger), worst, decay }
    }

    pub fn avg_f64(&self) -> f64 {
        *self.avg.numer() as f64 / *self.avg.denom() as f64
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExecutionResult<O> {
    pub outputs: Vec<O>,
    pub ledger: RoundLedger,
    pub metrics: Metrics,
    pub transcript: String,
}

pub fn vertex_averaged(ledger: &RoundLedger) -> Ratio<u64> {
    if ledger.r.is_empty() {
        return Ratio::from_integer(0);
    }
    Ratio::new(ledger.r.iter().sum(), ledger.r.len() as u64)
}

pub fn worst_case(ledger: &RoundLedger) -> u64 {
    ledger.r.iter().copied().max().unwrap_or(0)
}

/// `64 * (log2 n + 1)^2`, floored.
pub fn default_round_cap(n: usize) -> u64 {
    let l = (n.max(1) as f64).log2() + 1.0;
    (64.0 * l * l).floor() as u64
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub round_cap: Option<u64>,
    /// Message exchanges folded into one counted round.
    pub exchanges: u64,
    /// Separates rng streams of different runs under one seed.
    pub stream: u64,
    /// Network size reported to programs; defaults to `g.n()`.
    pub n: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0, round_cap: None, exchanges: 1, stream: 0, n: None }
    }
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        RunOptions { seed, ..Default::default() }
    }
}

/// Outcome of a run restricted to some participants.
#[derive(Clone, Debug)]
pub struct PartialRun<O> {
    pub outputs: Vec<Option<O>>,
    /// Counted rounds per vertex; zero for non-participants.
    pub rounds: Vec<u64>,
    pub digest: [u8; 32],
}

struct DigestHasher<'a>(&'a mut Sha256);

impl Hasher for DigestHasher<'_> {
    fn write(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }
    fn finish(&self) -> u64 {
        0
    }
}

fn vertex_rng(seed: u64, stream: u64, index: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"vertex-rng");
    h.update(seed.to_le_bytes());
    h.update(stream.to_le_bytes());
    h.update((index as u64).to_le_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

/// Runs `program` on every vertex.
pub fn run<P: VertexProgram>(
    g: &Graph,
    ids: &IdAssignment,
    program: &P,
    opts: &RunOptions,
) -> Result<ExecutionResult<P::Output>, EngineError> {
    let all = vec![true; g.n()];
    let part = run_on(g, ids, program, &all, opts)?;
    let ledger = RoundLedger { r: part.rounds };
    Ok(ExecutionResult {
        outputs: part.outputs.into_iter().map(|o| o.expect("every vertex finished")).collect(),
        metrics: Metrics::from_ledger(&ledger),
        ledger,
        transcript: hex::encode(part.digest),
    })
}

/// Runs `program` on the vertices flagged in `participants`. Others are inert
/// from the start and drop anything addressed to them.
pub fn run_on<P: VertexProgram>(
    g: &Graph,
    ids: &IdAssignment,
    program: &P,
    participants: &[bool],
    opts: &RunOptions,
) -> Result<PartialRun<P::Output>, EngineError> {
    let n = g.n();
    let net_n = opts.n.unwrap_or(n);
    let exchanges = opts.exchanges.max(1);
    let cap = opts.round_cap.unwrap_or_else(|| default_round_cap(net_n));
    let mut rngs: Vec<Option<ChaCha8Rng>> = (0..n)
        .map(|v| participants[v].then(|| vertex_rng(opts.seed, opts.stream, v)))
        .collect();
    let mut active: Vec<bool> = participants.to_vec();
    let mut states: Vec<Option<P::State>> = (0..n)
        .map(|v| {
            rngs[v].as_mut().map(|rng| {
                let mut ctx = Ctx { index: v, id: ids.id(v), degree: g.degree(v), n: net_n, round: 0, exchange: 0, rng };
                program.init(&mut ctx)
            })
        })
        .collect();
    let mut outputs: Vec<Option<P::Output>> = vec![None; n];
    let mut rounds = vec![0u64; n];
    let mut inbox: Vec<Vec<Incoming<P::Msg, P::Output>>> = vec![Vec::new(); n];
    let mut hasher = Sha256::new();
    let mut live: Vec<usize> = (0..n).filter(|&v| participants[v]).collect();
    let mut tick = 0u64;

    while !live.is_empty() {
        tick += 1;
        let round = (tick - 1) / exchanges + 1;
        let exchange = (tick - 1) % exchanges;
        if round > cap {
            return Err(EngineError::RoundCap { cap, active: live });
        }
        let mut sent: Vec<(usize, Target, P::Msg)> = Vec::new();
        let mut finished: Vec<usize> = Vec::new();
        for &v in &live {
            let rng = rngs[v].as_mut().expect("participant rng");
            let mut ctx = Ctx { index: v, id: ids.id(v), degree: g.degree(v), n: net_n, round, exchange, rng };
            let state = states[v].as_mut().expect("participant state");
            let items = std::mem::take(&mut inbox[v]);
            match program.step(state, &mut ctx, &items) {
                Action::Continue(out) => {
                    for (target, msg) in out {
                        if let Target::Port(p) = target {
                            if p >= g.degree(v) {
                                return Err(EngineError::Locality { vertex: v, port: p, degree: g.degree(v) });
                            }
                        }
                        sent.push((v, target, msg));
                    }
                }
                Action::Finish(out) => {
                    outputs[v] = Some(out);
                    rounds[v] = round;
                    finished.push(v);
                }
            }
        }
        for &v in &finished {
            active[v] = false;
            states[v] = None;
        }
        live.retain(|&v| active[v]);

        let mut deliver = |hasher: &mut Sha256, v: usize, p: usize, item: Incoming<P::Msg, P::Output>| {
            let u = g.neighbors(v)[p];
            if !active[u] {
                return;
            }
            let mut dh = DigestHasher(hasher);
            tick.hash(&mut dh);
            v.hash(&mut dh);
            p.hash(&mut dh);
            match &item {
                Incoming::Msg { msg, .. } => {
                    0u8.hash(&mut dh);
                    msg.hash(&mut dh);
                }
                Incoming::Final { output, .. } => {
                    1u8.hash(&mut dh);
                    output.hash(&mut dh);
                }
            }
            inbox[u].push(match item {
                Incoming::Msg { msg, .. } => Incoming::Msg { port: g.port(u, v).expect("symmetric"), msg },
                Incoming::Final { output, .. } => Incoming::Final { port: g.port(u, v).expect("symmetric"), output },
            });
        };
        for (v, target, msg) in sent {
            match target {
                Target::Port(p) => deliver(&mut hasher, v, p, Incoming::Msg { port: p, msg }),
                Target::All => {
                    for p in 0..g.degree(v) {
                        deliver(&mut hasher, v, p, Incoming::Msg { port: p, msg: msg.clone() });
                    }
                }
            }
        }
        for &v in &finished {
            let out = outputs[v].clone().expect("just finished");
            for p in 0..g.degree(v) {
                deliver(&mut hasher, v, p, Incoming::Final { port: p, output: out.clone() });
            }
        }
    }
    let mut digest = [0u8; 32];
    digest.copy_from_slice(&hasher.finalize());
    Ok(PartialRun { outputs, rounds, digest })
}

/// Global clock for algorithms built from several phases.
///
/// Each phase is an engine run over a subset of vertices whose first round
/// is `offset + 1` on the global clock. A vertex stays active until the last
/// phase it takes part in ends.
pub struct Timeline<'g> {
    pub g: &'g Graph,
    pub ids: &'g IdAssignment,
    seed: u64,
    round_cap: Option<u64>,
    finish: Vec<u64>,
    hasher: Sha256,
    streams: u64,
}

/// Result of one phase, indexed by global vertex.
#[derive(Clone, Debug)]
pub struct Phase<O> {
    pub outputs: Vec<Option<O>>,
    /// Global round in which each member finished; zero for non-members.
    pub end: Vec<u64>,
    /// Latest member finish, or the offset when there were no members.
    pub last: u64,
}

impl<O> Phase<O> {
    pub fn output(&self, v: usize) -> &O {
        self.outputs[v].as_ref().expect("vertex took part in this phase")
    }
}

impl<'g> Timeline<'g> {
    pub fn new(g: &'g Graph, ids: &'g IdAssignment, seed: u64) -> Self {
        Timeline { g, ids, seed, round_cap: None, finish: vec![0; g.n()], hasher: Sha256::new(), streams: 0 }
    }

    pub fn with_round_cap(mut self, cap: Option<u64>) -> Self {
        self.round_cap = cap;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn round_cap(&self) -> Option<u64> {
        self.round_cap
    }

    /// Runs one phase on `members`, starting after global round `offset`.
    pub fn run<P: VertexProgram>(
        &mut self,
        program: &P,
        members: &[usize],
        offset: u64,
        exchanges: u64,
    ) -> Result<Phase<P::Output>, EngineError> {
        let n = self.g.n();
        self.streams += 1;
        if members.is_empty() {
            return Ok(Phase { outputs: vec![None; n], end: vec![0; n], last: offset });
        }
        let mut flags = vec![false; n];
        for &v in members {
            flags[v] = true;
        }
        let opts = RunOptions {
            seed: self.seed,
            round_cap: self.round_cap,
            exchanges,
            stream: self.streams,
            n: Some(n),
        };
        let part = run_on(self.g, self.ids, program, &flags, &opts)?;
        self.hasher.update(self.streams.to_le_bytes());
        self.hasher.update(offset.to_le_bytes());
        self.hasher.update(part.digest);
        let mut end = vec![0u64; n];
        let mut last = offset;
        for &v in members {
            end[v] = offset + part.rounds[v];
            last = last.max(end[v]);
            self.finish[v] = self.finish[v].max(end[v]);
        }
        Ok(Phase { outputs: part.outputs, end, last })
    }

    /// Records that `v` is still active in global round `round`.
    pub fn touch(&mut self, v: usize, round: u64) {
        self.finish[v] = self.finish[v].max(round);
    }

    /// Mixes work simulated outside [`Timeline::run`] into the transcript.
    pub fn absorb(&mut self, bytes: &[u8]) {
        self.streams += 1;
        self.hasher.update(self.streams.to_le_bytes());
        self.hasher.update(bytes);
    }

    /// Next stream number, for runs on derived graphs.
    pub fn next_stream(&mut self) -> u64 {
        self.streams += 1;
        self.streams
    }

    pub fn finish_round(&self, v: usize) -> u64 {
        self.finish[v]
    }

    pub fn ledger(&self) -> RoundLedger {
        RoundLedger { r: self.finish.clone() }
    }

    pub fn transcript(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }

    pub fn into_result<O>(self, outputs: Vec<O>) -> ExecutionResult<O> {
        let ledger = self.ledger();
        debug_assert!(ledger.r.iter().all(|&r| r >= 1), "every vertex took part in some phase");
        ExecutionResult { outputs, metrics: Metrics::from_ledger(&ledger), ledger, transcript: self.transcript() }
    }
}

/// Runs with the identity ids plus `num_permutations` random bijections and
/// returns the metrics with the largest average.
pub fn sweep_ids<P: VertexProgram>(
    g: &Graph,
    program: &P,
    num_permutations: usize,
    seed: u64,
) -> Result<Metrics, EngineError> {
    sweep_ids_with(g.n(), num_permutations, seed, |ids| {
        run(g, ids, program, &RunOptions::seeded(seed)).map(|r| r.metrics)
    })
}

/// [`sweep_ids`] over an arbitrary measured procedure.
pub fn sweep_ids_with<E>(
    n: usize,
    num_permutations: usize,
    seed: u64,
    mut measure: impl FnMut(&IdAssignment) -> Result<Metrics, E>,
) -> Result<Metrics, E> {
    let mut worst = measure(&IdAssignment::identity(n))?;
    for i in 0..num_permutations.saturating_sub(1) {
        let ids = IdAssignment::random_permutation(n, seed.wrapping_add(i as u64 + 1));
        let m = measure(&ids)?;
        if m.avg > worst.avg {
            worst = m;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Immediate;
    impl VertexProgram for Immediate {
        type State = ();
        type Msg = ();
        type Output = u64;
        fn init(&self, _: &mut Ctx<'_>) {}
        fn step(&self, _: &mut (), _: &mut Ctx<'_>, _: &[Incoming<(), u64>]) -> Action<(), u64> {
            Action::Finish(0)
        }
    }

    struct IdleThenDegree;
    impl VertexProgram for IdleThenDegree {
        type State = ();
        type Msg = ();
        type Output = usize;
        fn init(&self, _: &mut Ctx<'_>) {}
        fn step(&self, _: &mut (), ctx: &mut Ctx<'_>, _: &[Incoming<(), usize>]) -> Action<(), usize> {
            if ctx.round == 1 {
                Action::idle()
            } else {
                Action::Finish(ctx.degree)
            }
        }
    }

    struct Rogue;
    impl VertexProgram for Rogue {
        type State = ();
        type Msg = u8;
        type Output = ();
        fn init(&self, _: &mut Ctx<'_>) {}
        fn step(&self, _: &mut (), ctx: &mut Ctx<'_>, _: &[Incoming<u8, ()>]) -> Action<u8, ()> {
            Action::Continue(vec![(Target::Port(ctx.degree), 7)])
        }
    }

    struct Forever;
    impl VertexProgram for Forever {
        type State = ();
        type Msg = ();
        type Output = ();
        fn init(&self, _: &mut Ctx<'_>) {}
        fn step(&self, _: &mut (), _: &mut Ctx<'_>, _: &[Incoming<(), ()>]) -> Action<(), ()> {
            Action::idle()
        }
    }

    #[test]
    fn immediate_finish_costs_one_round() {
        let g = Graph::complete(5);
        let res = run(&g, &IdAssignment::identity(5), &Immediate, &RunOptions::default()).unwrap();
        assert_eq!(res.ledger.r, vec![1; 5]);
        assert_eq!(res.metrics.avg, Ratio::from_integer(1));
    }

    #[test]
    fn idle_round_then_finish() {
        let g = Graph::path(3);
        let res = run(&g, &IdAssignment::identity(3), &IdleThenDegree, &RunOptions::default()).unwrap();
        assert_eq!(res.outputs, vec![1, 2, 1]);
        assert_eq!(res.metrics.avg, Ratio::from_integer(2));
    }

    #[test]
    fn locality_is_enforced() {
        let g = Graph::path(2);
        let err = run(&g, &IdAssignment::identity(2), &Rogue, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, EngineError::Locality { .. }));
    }

    #[test]
    fn round_cap_reports_active_set() {
        let g = Graph::path(3);
        let opts = RunOptions { round_cap: Some(5), ..Default::default() };
        match run(&g, &IdAssignment::identity(3), &Forever, &opts) {
            Err(EngineError::RoundCap { cap: 5, active }) => assert_eq!(active, vec![0, 1, 2]),
            other => panic!("unexpected {other:?}", other = other.map(|r| r.metrics)),
        }
    }

    #[test]
    fn default_cap_values() {
        assert_eq!(default_round_cap(1), 64);
        assert_eq!(default_round_cap(256), 64 * 81);
    }

    #[test]
    fn ledger_arithmetic() {
        let l = RoundLedger { r: vec![1, 1, 1, 1, 1, 2] };
        assert_eq!(vertex_averaged(&l), Ratio::new(7, 6));
        assert_eq!(vertex_averaged(&RoundLedger { r: vec![4; 3] }), Ratio::from_integer(4));
        assert_eq!(vertex_averaged(&RoundLedger { r: vec![1, 3] }), Ratio::from_integer(2));
        assert_eq!(worst_case(&RoundLedger { r: vec![1, 1, 2] }), 2);
        assert_eq!(worst_case(&RoundLedger { r: vec![5] }), 5);
        assert_eq!(worst_case(&RoundLedger { r: vec![1; 4] }), 1);
        let m = Metrics::from_ledger(&l);
        assert_eq!(m.decay, vec![6, 1]);
    }

    #[test]
    fn sweep_of_oblivious_program_is_flat() {
        let g = Graph::path(5);
        let m = sweep_ids(&g, &IdleThenDegree, 4, 1).unwrap();
        assert_eq!(m.avg, Ratio::from_integer(2));
        let single = sweep_ids(&g, &IdleThenDegree, 1, 1).unwrap();
        let direct = run(&g, &IdAssignment::identity(5), &IdleThenDegree, &RunOptions::seeded(1)).unwrap();
        assert_eq!(single, direct.metrics);
    }
}
