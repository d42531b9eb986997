//! Experiment configuration, solution checking, batch runs and reports.
//!
//! The checks in [`verify_solution`] work from the graph and the claimed
//! solution alone and share no code with the algorithms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::arbdefective::{legal_coloring, one_plus_eta_arb_col, EtaParams};
use crate::engine::{EngineError, Metrics, RunOptions};
use crate::extension::{delta_plus1_coloring, edge_coloring_2d1, maximal_matching, mis, Solution};
use crate::graph::{gen_forest_union, gen_random_graph, gen_ring, load_edge_list, max_degree, Graph, GraphError, IdAssignment};
use crate::linial::{ColorVector, FamilyKind};
use crate::partition::{parallelized_forest_decomposition, procedure_partition_with, PartitionParams};
use crate::randomized::{rand_a_loglogn, rand_delta_plus1};
use crate::schemes::{color_a2logn, color_ka, color_ka2};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Partition,
    ForestDecomposition,
    A2logn,
    Ka2,
    Ka,
    Legal,
    OnePlusEta,
    DeltaPlus1,
    Mis,
    EdgeColoring,
    Matching,
    RandDeltaPlus1,
    RandALoglogn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 13] = [
        Algorithm::Partition,
        Algorithm::ForestDecomposition,
        Algorithm::A2logn,
        Algorithm::Ka2,
        Algorithm::Ka,
        Algorithm::Legal,
        Algorithm::OnePlusEta,
        Algorithm::DeltaPlus1,
        Algorithm::Mis,
        Algorithm::EdgeColoring,
        Algorithm::Matching,
        Algorithm::RandDeltaPlus1,
        Algorithm::RandALoglogn,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }

    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }

    fn needs_arboricity(self) -> bool {
        self != Algorithm::RandDeltaPlus1
    }

    fn uses_k(self) -> bool {
        matches!(self, Algorithm::Ka2 | Algorithm::Ka)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GraphSpec {
    Ring { n: usize },
    /// Union of `a` random forests; generated with the run's seed.
    ForestUnion { n: usize, a: usize },
    /// `m` uniform random edges; generated with the run's seed.
    Random { n: usize, m: usize },
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph, GraphError> {
        match self {
            GraphSpec::Ring { n } => gen_ring(*n),
            GraphSpec::ForestUnion { n, a } => gen_forest_union(*n, *a, seed),
            GraphSpec::Random { n, m } => gen_random_graph(*n, *m, seed),
            GraphSpec::File { path } => load_edge_list(path),
        }
    }

    /// Arboricity bound implied by the generator, if any.
    pub fn promised_arboricity(&self) -> Option<u64> {
        match self {
            GraphSpec::Ring { .. } => Some(2),
            GraphSpec::ForestUnion { a, .. } => Some(*a as u64),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

fn default_epsilon() -> String {
    "2".into()
}

fn default_big_c() -> u64 {
    8
}

fn default_perms() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub graph: GraphSpec,
    /// Arboricity bound; defaults to the generator's promise.
    #[serde(default)]
    pub a: Option<u64>,
    /// Rational, as `"2"` or `"1/2"`.
    #[serde(default = "default_epsilon")]
    pub epsilon: String,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default = "default_big_c")]
    pub big_c: u64,
    pub seeds: Vec<u64>,
    /// Random ID permutations per seed, on top of the identity.
    #[serde(default = "default_perms")]
    pub id_permutations: usize,
    #[serde(default)]
    pub round_cap: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, graph: GraphSpec, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            algorithm,
            graph,
            a: None,
            epsilon: default_epsilon(),
            k: None,
            big_c: default_big_c(),
            seeds,
            id_permutations: default_perms(),
            round_cap: None,
            output: None,
            format: None,
        }
    }

    pub fn epsilon_ratio(&self) -> Result<Ratio<u64>, HarnessError> {
        self.epsilon
            .trim()
            .parse::<Ratio<u64>>()
            .map_err(|e| HarnessError::Config(format!("epsilon {:?}: {e}", self.epsilon)))
    }

    fn arboricity(&self) -> Option<u64> {
        self.a.or_else(|| self.graph.promised_arboricity())
    }

    /// Checks algorithm and parameter compatibility.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("no seeds".into()));
        }
        let eps = self.epsilon_ratio()?;
        if eps == Ratio::from_integer(0) || eps > Ratio::from_integer(2) {
            return Err(HarnessError::Config(format!("epsilon {eps} outside (0, 2]")));
        }
        if self.algorithm.needs_arboricity() && self.arboricity().is_none() {
            return Err(HarnessError::Config(format!("{} needs an arboricity bound", self.algorithm.name())));
        }
        if self.algorithm.uses_k() && self.k.is_none() {
            return Err(HarnessError::Config(format!("{} needs k", self.algorithm.name())));
        }
        if !self.algorithm.uses_k() && self.k.is_some() {
            return Err(HarnessError::Config(format!("{} takes no k", self.algorithm.name())));
        }
        if self.algorithm == Algorithm::OnePlusEta && self.big_c < 4 {
            return Err(HarnessError::Config(format!("C = {} below 4", self.big_c)));
        }
        if self.algorithm == Algorithm::Legal && self.big_c < 6 {
            return Err(HarnessError::Config(format!("C = {} below 6", self.big_c)));
        }
        Ok(())
    }
}

/// A claimed solution, in a form that can be checked against a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolutionData {
    /// Colors may be tuples; `max_color` requires single colors in `1..=max_color`.
    VertexColoring {
        colors: Vec<Vec<u64>>,
        #[serde(default)]
        max_color: Option<u64>,
    },
    Mis { members: Vec<usize> },
    EdgeColoring {
        colors: Vec<(usize, usize, u64)>,
        #[serde(default)]
        max_color: Option<u64>,
    },
    Matching { edges: Vec<(usize, usize)> },
    /// Every vertex has at most `bound` neighbors in its own or later sets.
    HPartition { index: Vec<u64>, bound: u64 },
    /// `(tail, head, label)`; each label class a forest with out-degree 1.
    ForestDecomposition { arcs: Vec<(usize, usize, u32)>, max_label: u64 },
}

impl SolutionData {
    pub fn kind(&self) -> &'static str {
        match self {
            SolutionData::VertexColoring { .. } => "vertex-coloring",
            SolutionData::Mis { .. } => "mis",
            SolutionData::EdgeColoring { .. } => "edge-coloring",
            SolutionData::Matching { .. } => "matching",
            SolutionData::HPartition { .. } => "h-partition",
            SolutionData::ForestDecomposition { .. } => "forest-decomposition",
        }
    }

    /// Colors used, solution size, H-sets or labels.
    pub fn size(&self) -> usize {
        match self {
            SolutionData::VertexColoring { colors, .. } => colors.iter().collect::<BTreeSet<_>>().len(),
            SolutionData::Mis { members } => members.len(),
            SolutionData::EdgeColoring { colors, .. } => colors.iter().map(|x| x.2).collect::<BTreeSet<_>>().len(),
            SolutionData::Matching { edges } => edges.len(),
            SolutionData::HPartition { index, .. } => index.iter().collect::<BTreeSet<_>>().len(),
            SolutionData::ForestDecomposition { arcs, .. } => arcs.iter().map(|x| x.2).collect::<BTreeSet<_>>().len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    pub failures: Vec<String>,
}

impl Verdict {
    fn from(failures: Vec<String>) -> Self {
        Verdict { valid: failures.is_empty(), failures }
    }
}

fn adjacency(g: &Graph) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); g.n()];
    for &(u, v) in g.edges() {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    adj
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Checks `solution` against `g` by direct enumeration.
pub fn verify_solution(g: &Graph, solution: &SolutionData) -> Verdict {
    let n = g.n();
    let adj = adjacency(g);
    let mut fail = Vec::new();
    match solution {
        SolutionData::VertexColoring { colors, max_color } => {
            if colors.len() != n {
                return Verdict::from(vec![format!("totality: {} colors for {n} vertices", colors.len())]);
            }
            for &(u, v) in g.edges() {
                if colors[u] == colors[v] {
                    fail.push(format!("conflict: {u} and {v} share {:?}", colors[u]));
                    break;
                }
            }
            if let Some(max) = max_color {
                if let Some(v) = (0..n).find(|&v| colors[v].len() != 1 || colors[v][0] == 0 || colors[v][0] > *max) {
                    fail.push(format!("palette: vertex {v} has {:?}, bound {max}", colors[v]));
                }
            }
        }
        SolutionData::Mis { members } => {
            let mut inset = vec![false; n];
            for &v in members {
                if v >= n {
                    return Verdict::from(vec![format!("totality: vertex {v} out of range")]);
                }
                inset[v] = true;
            }
            if let Some(&(u, v)) = g.edges().iter().find(|&&(u, v)| inset[u] && inset[v]) {
                fail.push(format!("independence: {u} and {v} both in"));
            }
            if let Some(v) = (0..n).find(|&v| !inset[v] && !adj[v].iter().any(|&u| inset[u])) {
                fail.push(format!("maximality: {v} could join"));
            }
        }
        SolutionData::EdgeColoring { colors, max_color } => {
            let mut given: HashMap<(usize, usize), u64> = HashMap::new();
            for &(u, v, c) in colors {
                if u >= n || v >= n || !adj[u].contains(&v) {
                    fail.push(format!("totality: ({u}, {v}) is not an edge"));
                    return Verdict::from(fail);
                }
                if given.insert(key(u, v), c).is_some() {
                    fail.push(format!("totality: ({u}, {v}) colored twice"));
                }
            }
            if given.len() != g.m() {
                fail.push(format!("totality: {} of {} edges colored", given.len(), g.m()));
            }
            'outer: for (v, nb) in adj.iter().enumerate() {
                let mut seen = BTreeMap::new();
                for &u in nb {
                    if let Some(&c) = given.get(&key(u, v)) {
                        if let Some(w) = seen.insert(c, u) {
                            fail.push(format!("conflict: edges ({v}, {w}) and ({v}, {u}) share {c}"));
                            break 'outer;
                        }
                    }
                }
            }
            if let Some(max) = max_color {
                if let Some(&(u, v, c)) = colors.iter().find(|x| x.2 == 0 || x.2 > *max) {
                    fail.push(format!("palette: ({u}, {v}) has {c}, bound {max}"));
                }
            }
        }
        SolutionData::Matching { edges } => {
            let mut matched = vec![0usize; n];
            for &(u, v) in edges {
                if u >= n || v >= n || !adj[u].contains(&v) {
                    return Verdict::from(vec![format!("totality: ({u}, {v}) is not an edge")]);
                }
                matched[u] += 1;
                matched[v] += 1;
            }
            if let Some(v) = (0..n).find(|&v| matched[v] > 1) {
                fail.push(format!("disjointness: {v} matched {} times", matched[v]));
            }
            if let Some(&(u, v)) = g.edges().iter().find(|&&(u, v)| matched[u] == 0 && matched[v] == 0) {
                fail.push(format!("maximality: ({u}, {v}) could be added"));
            }
        }
        SolutionData::HPartition { index, bound } => {
            if index.len() != n {
                return Verdict::from(vec![format!("totality: {} indices for {n} vertices", index.len())]);
            }
            if let Some(v) = (0..n).find(|&v| index[v] == 0) {
                fail.push(format!("totality: vertex {v} has index 0"));
            }
            if let Some(v) = (0..n).find(|&v| adj[v].iter().filter(|&&u| index[u] >= index[v]).count() as u64 > *bound) {
                fail.push(format!("degree: vertex {v} exceeds {bound}"));
            }
        }
        SolutionData::ForestDecomposition { arcs, max_label } => {
            let mut covered = BTreeSet::new();
            let mut out: HashMap<(usize, u32), usize> = HashMap::new();
            let mut classes: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
            for &(t, h, l) in arcs {
                if t >= n || h >= n || !adj[t].contains(&h) {
                    return Verdict::from(vec![format!("totality: ({t}, {h}) is not an edge")]);
                }
                if !covered.insert(key(t, h)) {
                    fail.push(format!("totality: ({t}, {h}) appears twice"));
                }
                if l == 0 || l as u64 > *max_label {
                    fail.push(format!("labels: ({t}, {h}) has label {l}, bound {max_label}"));
                }
                *out.entry((t, l)).or_default() += 1;
                classes.entry(l).or_default().push((t, h));
            }
            if covered.len() != g.m() {
                fail.push(format!("totality: {} of {} edges covered", covered.len(), g.m()));
            }
            if let Some((&(t, l), _)) = out.iter().find(|(_, &c)| c > 1) {
                fail.push(format!("out-degree: vertex {t} has several arcs labeled {l}"));
            }
            let mut indeg = vec![0usize; n];
            let mut succ = vec![Vec::new(); n];
            for &(t, h, _) in arcs {
                succ[t].push(h);
                indeg[h] += 1;
            }
            let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
            let mut seen = 0;
            while let Some(v) = queue.pop() {
                seen += 1;
                for &h in &succ[v] {
                    indeg[h] -= 1;
                    if indeg[h] == 0 {
                        queue.push(h);
                    }
                }
            }
            if seen < n {
                fail.push(format!("acyclicity: {} vertices lie on directed cycles", n - seen));
            }
            for (l, es) in classes {
                let mut parent: Vec<usize> = (0..n).collect();
                fn root(p: &mut [usize], mut x: usize) -> usize {
                    while p[x] != x {
                        p[x] = p[p[x]];
                        x = p[x];
                    }
                    x
                }
                for (t, h) in es {
                    let (a, b) = (root(&mut parent, t), root(&mut parent, h));
                    if a == b {
                        fail.push(format!("cycle: label {l} closes a cycle at ({t}, {h})"));
                        break;
                    }
                    parent[a] = b;
                }
            }
        }
    }
    Verdict::from(fail)
}

/// What one algorithm run produced.
pub struct Outcome {
    pub solution: SolutionData,
    pub metrics: Metrics,
    pub transcript: String,
    pub substitutions: Vec<String>,
}

fn coloring_data(cv: &ColorVector, max_color: Option<u64>) -> SolutionData {
    SolutionData::VertexColoring { colors: cv.colors.clone(), max_color }
}

/// Converts an extension output into checkable form.
pub fn extension_solution(g: &Graph, sol: &Solution) -> SolutionData {
    use crate::extension::ProblemKind as K;
    let edges = g.edges();
    match sol.kind {
        K::VertexColoring => SolutionData::VertexColoring {
            colors: sol.values.iter().map(|c| vec![c.unwrap_or(0)]).collect(),
            max_color: sol.palette,
        },
        K::Mis => SolutionData::Mis { members: sol.selected() },
        K::EdgeColoring => SolutionData::EdgeColoring {
            colors: edges.iter().zip(&sol.values).map(|(&(u, v), c)| (u, v, c.unwrap_or(0))).collect(),
            max_color: sol.palette,
        },
        K::Matching => SolutionData::Matching { edges: sol.selected().into_iter().map(|e| edges[e]).collect() },
    }
}

/// Runs one algorithm on one graph with one ID assignment.
pub fn run_algorithm(
    config: &ExperimentConfig,
    g: &Graph,
    ids: &IdAssignment,
    seed: u64,
) -> Result<Outcome, HarnessError> {
    let eps = config.epsilon_ratio()?;
    let a = config.arboricity().unwrap_or(1).max(1);
    let pparams = PartitionParams::new(a, eps).map_err(|e| HarnessError::Config(e.to_string()))?;
    let engine = |e: EngineError| HarnessError::Config(format!("engine: {e}"));
    let mut subs = Vec::new();
    let (solution, metrics, transcript) = match config.algorithm {
        Algorithm::Partition => {
            let opts = RunOptions { round_cap: config.round_cap, ..RunOptions::seeded(seed) };
            let (hp, res) = procedure_partition_with(g, ids, &pparams, &opts).map_err(engine)?;
            (SolutionData::HPartition { index: hp.index, bound: pparams.big_a }, res.metrics, res.transcript)
        }
        Algorithm::ForestDecomposition => {
            let (fd, _, res) = parallelized_forest_decomposition(g, ids, &pparams).map_err(engine)?;
            let arcs = fd.edges.iter().map(|x| (x.tail, x.head, x.label)).collect();
            (SolutionData::ForestDecomposition { arcs, max_label: pparams.big_a }, res.metrics, res.transcript)
        }
        Algorithm::A2logn => {
            let (cv, res, rep) = color_a2logn(g, ids, &pparams, FamilyKind::Best).map_err(engine)?;
            if rep.fallbacks > 0 {
                subs.push(format!("cff-fallbacks:{}", rep.fallbacks));
            }
            (coloring_data(&cv, None), res.metrics, res.transcript)
        }
        Algorithm::Ka2 | Algorithm::Ka => {
            let k = config.k.unwrap_or(2);
            let (sc, res, rep) = if config.algorithm == Algorithm::Ka2 {
                color_ka2(g, ids, &pparams, k)
            } else {
                color_ka(g, ids, &pparams, k)
            }
            .map_err(engine)?;
            if rep.fallbacks > 0 {
                subs.push(format!("cff-fallbacks:{}", rep.fallbacks));
            }
            if config.algorithm == Algorithm::Ka {
                subs.push("list-coloring-substitute".into());
            }
            (coloring_data(&sc.coloring, None), res.metrics, res.transcript)
        }
        Algorithm::Legal => {
            let (cv, res, _) = legal_coloring(g, ids, a, config.big_c).map_err(engine)?;
            subs.push("list-coloring-substitute".into());
            (coloring_data(&cv, None), res.metrics, res.transcript)
        }
        Algorithm::OnePlusEta => {
            let params = EtaParams::new(config.big_c).map_err(engine)?;
            let (cv, res, _) = one_plus_eta_arb_col(g, ids, a, params).map_err(engine)?;
            subs.push("list-coloring-substitute".into());
            (coloring_data(&cv, None), res.metrics, res.transcript)
        }
        Algorithm::DeltaPlus1 | Algorithm::Mis | Algorithm::EdgeColoring | Algorithm::Matching => {
            let f = match config.algorithm {
                Algorithm::DeltaPlus1 => delta_plus1_coloring,
                Algorithm::Mis => mis,
                Algorithm::EdgeColoring => edge_coloring_2d1,
                _ => maximal_matching,
            };
            let (sol, res, rep) = f(g, ids, &pparams).map_err(engine)?;
            if let Some(s) = rep.substitution {
                subs.push(s);
            }
            if !(rep.prefix_valid && rep.prefix_stable) {
                subs.push(format!("prefix-check-failed:{}", rep.first_failure.unwrap_or(0)));
            }
            (extension_solution(g, &sol), res.metrics, res.transcript)
        }
        Algorithm::RandDeltaPlus1 => {
            let (cv, res) = rand_delta_plus1(g, ids, seed).map_err(engine)?;
            (coloring_data(&cv, Some(max_degree(g) as u64 + 1)), res.metrics, res.transcript)
        }
        Algorithm::RandALoglogn => {
            let (cv, res, _) = rand_a_loglogn(g, ids, &pparams, seed).map_err(engine)?;
            (coloring_data(&cv, None), res.metrics, res.transcript)
        }
    };
    Ok(Outcome { solution, metrics, transcript, substitutions: subs })
}

/// One row of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: String,
    pub n: usize,
    pub m: usize,
    pub a: u64,
    pub epsilon: String,
    pub k: Option<u32>,
    pub seed: u64,
    pub perm: usize,
    pub avg_num: u64,
    pub avg_den: u64,
    pub avg_float: f64,
    pub worst: u64,
    pub decay: Vec<u64>,
    pub colors_or_size: usize,
    pub valid: bool,
    pub failures: Vec<String>,
    pub substitution_flags: Vec<String>,
    pub transcript_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub mean_avg: f64,
    pub max_avg: f64,
    pub max_worst: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
    pub valid: bool,
}

impl ExperimentReport {
    pub fn from_runs(config: ExperimentConfig, runs: Vec<RunRecord>) -> Self {
        let avgs: Vec<f64> = runs.iter().map(|r| r.avg_float).collect();
        let aggregate = Aggregate {
            runs: runs.len(),
            mean_avg: if avgs.is_empty() { 0.0 } else { avgs.iter().sum::<f64>() / avgs.len() as f64 },
            max_avg: avgs.iter().copied().fold(0.0, f64::max),
            max_worst: runs.iter().map(|r| r.worst).max().unwrap_or(0),
        };
        let valid = runs.iter().all(|r| r.valid);
        ExperimentReport { config, runs, aggregate, valid }
    }
}

/// Builds the report row for one outcome, checking its solution.
pub fn record(config: &ExperimentConfig, g: &Graph, seed: u64, perm: usize, outcome: Result<Outcome, HarnessError>) -> RunRecord {
    let mut rec = RunRecord {
        algo: config.algorithm.name(),
        n: g.n(),
        m: g.m(),
        a: config.arboricity().unwrap_or(0),
        epsilon: config.epsilon.clone(),
        k: config.k,
        seed,
        perm,
        avg_num: 0,
        avg_den: 1,
        avg_float: 0.0,
        worst: 0,
        decay: Vec::new(),
        colors_or_size: 0,
        valid: false,
        failures: Vec::new(),
        substitution_flags: Vec::new(),
        transcript_hash: String::new(),
    };
    match outcome {
        Ok(o) => {
            let verdict = verify_solution(g, &o.solution);
            rec.avg_num = *o.metrics.avg.numer();
            rec.avg_den = *o.metrics.avg.denom();
            rec.avg_float = o.metrics.avg_f64();
            rec.worst = o.metrics.worst;
            rec.decay = o.metrics.decay;
            rec.colors_or_size = o.solution.size();
            rec.valid = verdict.valid;
            rec.failures = verdict.failures;
            rec.substitution_flags = o.substitutions;
            rec.transcript_hash = o.transcript;
            if let Some(cap) = config.round_cap {
                if rec.worst > cap {
                    rec.valid = false;
                    rec.failures.push(format!("round cap: {} rounds, cap {cap}", rec.worst));
                }
            }
        }
        Err(e) => rec.failures.push(e.to_string()),
    }
    rec
}

fn permutation_seed(seed: u64, perm: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(perm as u64)
}

/// Runs every seed with the identity IDs and `id_permutations` random
/// bijections, checking each solution.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        let g = config.graph.build(seed)?;
        for perm in 0..=config.id_permutations {
            let ids = if perm == 0 {
                IdAssignment::identity(g.n())
            } else {
                IdAssignment::random_permutation(g.n(), permutation_seed(seed, perm))
            };
            let outcome = run_algorithm(config, &g, &ids, seed);
            runs.push(record(config, &g, seed, perm, outcome));
        }
    }
    Ok(ExperimentReport::from_runs(config.clone(), runs))
}

pub const CSV_COLUMNS: [&str; 16] = [
    "algo",
    "n",
    "m",
    "a",
    "epsilon",
    "k",
    "seed",
    "perm",
    "avg_num",
    "avg_den",
    "avg_float",
    "worst",
    "colors_or_size",
    "valid",
    "substitution_flags",
    "transcript_hash",
];

pub fn to_json(report: &ExperimentReport) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn to_csv(report: &ExperimentReport) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in &report.runs {
        w.write_record([
            r.algo.clone(),
            r.n.to_string(),
            r.m.to_string(),
            r.a.to_string(),
            r.epsilon.clone(),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            r.seed.to_string(),
            r.perm.to_string(),
            r.avg_num.to_string(),
            r.avg_den.to_string(),
            r.avg_float.to_string(),
            r.worst.to_string(),
            r.colors_or_size.to_string(),
            r.valid.to_string(),
            r.substitution_flags.join(";"),
            r.transcript_hash.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Line chart of the first run's decay curve `n_i` against `i`, log-scaled.
pub fn to_svg(report: &ExperimentReport) -> String {
    let decay: &[u64] = report.runs.first().map(|r| r.decay.as_slice()).unwrap_or(&[]);
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let top = decay.iter().copied().max().unwrap_or(1).max(2) as f64;
    let x = |i: usize| pad + (w - 2.0 * pad) * if decay.len() > 1 { i as f64 / (decay.len() - 1) as f64 } else { 0.5 };
    let y = |v: u64| h - pad - (h - 2.0 * pad) * ((v.max(1) as f64).ln() / top.ln());
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad
    );
    let title = report.runs.first().map(|r| format!("{} n={}", r.algo, r.n)).unwrap_or_default();
    let _ = writeln!(s, r#"<text x="{pad}" y="30" font-size="14">{title}: active vertices per round (log scale)</text>"#);
    let points: Vec<String> = decay.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v))).collect();
    if !points.is_empty() {
        let _ = writeln!(s, r#"<polyline points="{}" stroke="steelblue" fill="none"/>"#, points.join(" "));
    }
    for (i, &v) in decay.iter().enumerate() {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"><title>round {}: {v}</title></circle>"#, x(i), y(v), i + 1);
    }
    s.push_str("</svg>\n");
    s
}

pub fn render(report: &ExperimentReport, format: Format) -> Result<String, HarnessError> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
        Format::Svg => Ok(to_svg(report)),
    }
}

pub fn emit_report(report: &ExperimentReport, format: Format, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render(report, format)?)?;
    Ok(())
}

/// Parses CSV written by [`to_csv`] back into `(header, rows)`.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_config(algo: Algorithm) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(algo, GraphSpec::Ring { n: 12 }, vec![1]);
        c.id_permutations = 1;
        c
    }

    #[test]
    fn verify_examples() {
        let c6 = gen_ring(6).unwrap();
        let two = SolutionData::VertexColoring { colors: (0..6).map(|v| vec![v as u64 % 2]).collect(), max_color: None };
        assert!(verify_solution(&c6, &two).valid);
        let k2 = Graph::complete(2);
        let v = verify_solution(&k2, &SolutionData::Mis { members: vec![] });
        assert!(!v.valid && v.failures[0].starts_with("maximality"));
        let p3 = Graph::path(3);
        let v = verify_solution(&p3, &SolutionData::Matching { edges: vec![(0, 1), (1, 2)] });
        assert!(!v.valid && v.failures[0].starts_with("disjointness"));
    }

    #[test]
    fn verify_edge_and_forest_cases() {
        let p3 = Graph::path(3);
        let bad = SolutionData::EdgeColoring { colors: vec![(0, 1, 1), (1, 2, 1)], max_color: Some(3) };
        assert!(verify_solution(&p3, &bad).failures[0].starts_with("conflict"));
        let partial = SolutionData::EdgeColoring { colors: vec![(0, 1, 1)], max_color: None };
        assert!(!verify_solution(&p3, &partial).valid);
        let tri = Graph::complete(3);
        let cyc = SolutionData::ForestDecomposition { arcs: vec![(0, 1, 1), (1, 2, 1), (2, 0, 1)], max_label: 4 };
        let v = verify_solution(&tri, &cyc);
        assert!(v.failures.iter().any(|f| f.starts_with("acyclicity")));
        assert!(v.failures.iter().any(|f| f.starts_with("cycle")));
        let ok = SolutionData::ForestDecomposition { arcs: vec![(0, 1, 1), (1, 2, 1), (0, 2, 2)], max_label: 4 };
        assert!(verify_solution(&tri, &ok).valid);
        let hp = SolutionData::HPartition { index: vec![1, 1, 1], bound: 1 };
        assert!(!verify_solution(&tri, &hp).valid);
    }

    #[test]
    fn partition_on_ring() {
        let rep = run_experiment(&ring_config(Algorithm::Partition)).unwrap();
        assert!(rep.valid);
        assert_eq!(rep.runs.len(), 2);
        assert!(rep.runs.iter().all(|r| r.decay.len() <= 2));
    }

    #[test]
    fn every_algorithm_runs_valid() {
        for algo in Algorithm::ALL {
            let mut c = ExperimentConfig::new(algo, GraphSpec::ForestUnion { n: 200, a: 2 }, vec![3]);
            c.id_permutations = 1;
            if algo.uses_k() {
                c.k = Some(2);
            }
            let rep = run_experiment(&c).unwrap();
            assert!(rep.valid, "{algo:?}: {:?}", rep.runs[0].failures);
        }
    }

    #[test]
    fn injected_bug_fails_report() {
        let c = ring_config(Algorithm::Mis);
        let g = gen_ring(12).unwrap();
        let bogus = Outcome {
            solution: SolutionData::Mis { members: vec![0, 1] },
            metrics: Metrics::from_ledger(&crate::engine::RoundLedger { r: vec![1; 12] }),
            transcript: String::new(),
            substitutions: vec![],
        };
        let rep = ExperimentReport::from_runs(c.clone(), vec![record(&c, &g, 1, 0, Ok(bogus))]);
        assert!(!rep.valid);
    }

    #[test]
    fn config_errors() {
        assert!(run_experiment(&ExperimentConfig::new(Algorithm::Mis, GraphSpec::Ring { n: 5 }, vec![])).is_err());
        let c = ExperimentConfig::new(Algorithm::Mis, GraphSpec::Random { n: 5, m: 3 }, vec![1]);
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(Algorithm::Ka, GraphSpec::Ring { n: 5 }, vec![1]);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Algorithm::Mis, GraphSpec::Ring { n: 5 }, vec![1]);
        c.epsilon = "3".into();
        assert!(c.validate().is_err());
        c.epsilon = "1/2".into();
        assert!(c.validate().is_ok());
    }

    #[test]
    fn reports_are_reproducible() {
        let c = ring_config(Algorithm::RandDeltaPlus1);
        let a = to_json(&run_experiment(&c).unwrap()).unwrap();
        let b = to_json(&run_experiment(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_roundtrip_and_empty() {
        let rep = run_experiment(&ring_config(Algorithm::DeltaPlus1)).unwrap();
        let (header, rows) = read_csv(&to_csv(&rep).unwrap()).unwrap();
        assert_eq!(header, CSV_COLUMNS);
        for (row, run) in rows.iter().zip(&rep.runs) {
            let avg: f64 = row[10].parse().unwrap();
            assert!((avg - run.avg_float).abs() <= 1e-12 * run.avg_float.abs());
            assert_eq!(row[8].parse::<u64>().unwrap(), run.avg_num);
        }
        let empty = ExperimentReport::from_runs(rep.config.clone(), vec![]);
        let (_, rows) = read_csv(&to_csv(&empty).unwrap()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn svg_has_one_point_per_round() {
        let mut c = ExperimentConfig::new(Algorithm::Partition, GraphSpec::ForestUnion { n: 500, a: 2 }, vec![2]);
        c.id_permutations = 0;
        let rep = run_experiment(&c).unwrap();
        let svg = to_svg(&rep);
        assert_eq!(svg.matches("<circle").count(), rep.runs[0].decay.len());
    }

    #[test]
    fn config_json_defaults() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"algorithm":"one-plus-eta","graph":{"type":"forest-union","n":64,"a":3},"seeds":[1]}"#)
                .unwrap();
        assert_eq!((c.big_c, c.id_permutations, c.epsilon.as_str()), (8, 8, "2"));
        assert_eq!(Algorithm::parse("rand-a-loglogn"), Some(Algorithm::RandALoglogn));
        assert_eq!(Algorithm::OnePlusEta.name(), "one-plus-eta");
    }
}
