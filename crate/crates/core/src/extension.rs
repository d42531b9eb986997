//! Converting worst-case algorithms for problems of extension from any
//! partial solution into vertex-averaged ones, run H-set by H-set.

use serde::Serialize;

use crate::engine::{Action, Ctx, EngineError, ExecutionResult, Incoming, RunOptions, Timeline, VertexProgram, run_on};
use crate::graph::{max_degree, Graph, IdAssignment};
use crate::linial::{check_lists, FamilyKind, ListColorProgram, Lists};
use crate::partition::{assemble_forests, partition_phase, JoinInfo, PartitionParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    VertexColoring,
    Mis,
    EdgeColoring,
    Matching,
}

impl ProblemKind {
    pub fn on_edges(self) -> bool {
        matches!(self, ProblemKind::EdgeColoring | ProblemKind::Matching)
    }
}

/// A partial solution: one value per vertex, or per edge in
/// [`Graph::edges`] order. MIS uses 1 for "in" and 0 for "out"; matching
/// uses 1 for matched edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub kind: ProblemKind,
    pub values: Vec<Option<u64>>,
    /// Largest color allowed, where the kind has a palette.
    pub palette: Option<u64>,
}

impl Solution {
    fn new(g: &Graph, kind: ProblemKind, palette: Option<u64>) -> Self {
        let len = if kind.on_edges() { g.m() } else { g.n() };
        Solution { kind, values: vec![None; len], palette }
    }

    /// Values of the items that lie inside `prefix`; `None` elsewhere.
    pub fn restrict(&self, g: &Graph, prefix: &[bool]) -> Vec<Option<u64>> {
        if self.kind.on_edges() {
            g.edges()
                .iter()
                .zip(&self.values)
                .map(|(&(u, v), x)| if prefix[u] && prefix[v] { *x } else { None })
                .collect()
        } else {
            self.values.iter().enumerate().map(|(v, x)| if prefix[v] { *x } else { None }).collect()
        }
    }

    /// Vertex-side view: own value, or incident edge values in port order.
    pub fn per_vertex(&self, g: &Graph) -> Vec<Vec<u64>> {
        (0..g.n())
            .map(|v| {
                if self.kind.on_edges() {
                    g.neighbors(v)
                        .iter()
                        .map(|&u| self.values[g.edge_index(u, v).expect("edge")].unwrap_or(0))
                        .collect()
                } else {
                    vec![self.values[v].unwrap_or(0)]
                }
            })
            .collect()
    }

    /// The matched edges, or the MIS members.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] == Some(1)).collect()
    }
}

/// Checks the solution restricted to `G(prefix)`.
pub fn prefix_valid(g: &Graph, sol: &Solution, prefix: &[bool]) -> bool {
    let inside = |u: usize, v: usize| prefix[u] && prefix[v];
    let within = |c: u64| sol.palette.is_none_or(|p| (1..=p).contains(&c));
    match sol.kind {
        ProblemKind::VertexColoring => {
            (0..g.n()).all(|v| !prefix[v] || sol.values[v].is_some_and(within))
                && g.edges().iter().all(|&(u, v)| !inside(u, v) || sol.values[u] != sol.values[v])
        }
        ProblemKind::Mis => {
            let inm = |v: usize| sol.values[v] == Some(1);
            (0..g.n()).all(|v| !prefix[v] || sol.values[v].is_some())
                && g.edges().iter().all(|&(u, v)| !inside(u, v) || !(inm(u) && inm(v)))
                && (0..g.n()).all(|v| !prefix[v] || inm(v) || g.neighbors(v).iter().any(|&u| prefix[u] && inm(u)))
        }
        ProblemKind::EdgeColoring => {
            let edges = g.edges();
            if edges.iter().zip(&sol.values).any(|(&(u, v), c)| inside(u, v) && !c.is_some_and(within)) {
                return false;
            }
            (0..g.n()).filter(|&v| prefix[v]).all(|v| {
                let mut seen: Vec<u64> = g
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| prefix[u])
                    .map(|&u| sol.values[g.edge_index(u, v).expect("edge")].unwrap_or(0))
                    .collect();
                let len = seen.len();
                seen.sort_unstable();
                seen.dedup();
                seen.len() == len
            })
        }
        ProblemKind::Matching => {
            let mut matched = vec![0usize; g.n()];
            for (&(u, v), x) in g.edges().iter().zip(&sol.values) {
                if inside(u, v) && *x == Some(1) {
                    matched[u] += 1;
                    matched[v] += 1;
                }
            }
            matched.iter().all(|&c| c <= 1)
                && g.edges().iter().all(|&(u, v)| !inside(u, v) || matched[u] + matched[v] > 0)
        }
    }
}

/// What an iteration knows about its H-set.
pub struct Iteration<'a> {
    pub i: u64,
    pub hset: &'a [usize],
    /// H-set index per vertex.
    pub index: &'a [u64],
    /// Forest label per edge, from the tail's numbering.
    pub labels: &'a [u32],
    pub big_a: u64,
}

impl Iteration<'_> {
    /// Edges from `v` to earlier H-sets, as `(label, earlier endpoint, edge index)`.
    pub fn crossing(&self, g: &Graph, v: usize) -> Vec<(u32, usize, usize)> {
        let mut out: Vec<(u32, usize, usize)> = g
            .neighbors(v)
            .iter()
            .filter(|&&u| self.index[u] < self.index[v])
            .map(|&u| {
                let e = g.edge_index(u, v).expect("edge");
                (self.labels[e], u, e)
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Algorithm run on `G(H_i)`. It must not alter values outside `H_i` and
/// its in-set edges.
pub trait HSetSolver {
    fn kind(&self) -> ProblemKind;

    fn palette(&self, g: &Graph) -> Option<u64>;

    /// Extends `sol` over the H-set; returns the last global round used.
    fn solve(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError>;

    /// Charges rounds that depend on the finished solution.
    fn finish(&self, _tl: &mut Timeline<'_>, _sol: &Solution) {}
}

/// Algorithm for the edges between `H_i` and earlier H-sets, executed by the
/// vertices of `H_i`.
pub trait CrossingHandler {
    fn handle(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError>;
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IterationReport {
    pub i: u64,
    pub size: usize,
    pub start: u64,
    pub alg_a_end: u64,
    pub alg_b_end: u64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ExtensionReport {
    pub big_a: u64,
    pub iterations: Vec<IterationReport>,
    /// Every prefix solution passed the kind's oracle.
    pub prefix_valid: bool,
    /// No prefix value changed in a later iteration.
    pub prefix_stable: bool,
    pub first_failure: Option<u64>,
    /// Which cited routine the run replaces, if any.
    pub substitution: Option<String>,
}

/// Runs Partition with forest labels and, once `H_i` has formed and the
/// previous iteration is over, `alg_a` on `G(H_i)` followed by `alg_b` on the
/// edges to earlier sets.
pub fn extend_from_partial(
    g: &Graph,
    ids: &IdAssignment,
    pparams: &PartitionParams,
    alg_a: &dyn HSetSolver,
    alg_b: Option<&dyn CrossingHandler>,
) -> Result<(Solution, ExecutionResult<Vec<u64>>, ExtensionReport), EngineError> {
    let kind = alg_a.kind();
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..g.n()).collect();
    let part = partition_phase(&mut tl, &all, pparams.big_a, None, 0, true)?;
    let joins: Vec<JoinInfo> = part.outputs.into_iter().map(|o| o.expect("member")).collect();
    let index: Vec<u64> = joins.iter().map(|j| j.index.expect("no budget")).collect();
    let fd = assemble_forests(g, ids, &index, &joins);
    let labels: Vec<u32> = fd.edges.iter().map(|a| a.label).collect();
    let ell = index.iter().copied().max().unwrap_or(0);
    let mut hsets = vec![Vec::new(); ell as usize + 1];
    for v in 0..g.n() {
        hsets[index[v] as usize].push(v);
    }

    let mut sol = Solution::new(g, kind, alg_a.palette(g));
    let mut report = ExtensionReport {
        big_a: pparams.big_a,
        prefix_valid: true,
        prefix_stable: true,
        ..Default::default()
    };
    let mut prefix = vec![false; g.n()];
    let mut snapshot = sol.restrict(g, &prefix);
    let mut prev_end = 0;
    for i in 1..=ell {
        let hset = &hsets[i as usize];
        let it = Iteration { i, hset, index: &index, labels: &labels, big_a: pparams.big_a };
        let start = prev_end.max(i);
        let a_end = alg_a.solve(&mut tl, &it, &mut sol, start)?;
        let b_end = match alg_b {
            Some(b) if i >= 2 => b.handle(&mut tl, &it, &mut sol, a_end)?,
            _ => a_end,
        };
        prev_end = b_end;

        let now = sol.restrict(g, &prefix);
        if now != snapshot {
            report.prefix_stable = false;
            report.first_failure.get_or_insert(i);
        }
        for &v in hset {
            prefix[v] = true;
        }
        if !prefix_valid(g, &sol, &prefix) {
            report.prefix_valid = false;
            report.first_failure.get_or_insert(i);
        }
        snapshot = sol.restrict(g, &prefix);
        report.iterations.push(IterationReport { i, size: hset.len(), start, alg_a_end: a_end, alg_b_end: b_end });
    }
    alg_a.finish(&mut tl, &sol);
    let outputs = sol.per_vertex(g);
    Ok((sol, tl.into_result(outputs), report))
}

fn member_flags(n: usize, members: &[usize]) -> Vec<bool> {
    let mut f = vec![false; n];
    for &v in members {
        f[v] = true;
    }
    f
}

/// List coloring of `G(H_i)` with the given per-vertex lists.
fn list_color_hset(
    tl: &mut Timeline<'_>,
    hset: &[usize],
    lists: &[Vec<u64>],
    offset: u64,
) -> Result<(Vec<u64>, u64), EngineError> {
    let g = tl.g;
    let ids = tl.ids;
    let flags = member_flags(g.n(), hset);
    let max_deg = check_lists(g, hset, &flags, Lists::PerVertex(lists))?;
    let schedule = ListColorProgram::schedule_for(ids, max_deg, FamilyKind::Best);
    let program = ListColorProgram { g, ids, members: &flags, lists: Lists::PerVertex(lists), schedule: &schedule };
    let phase = tl.run(&program, hset, offset, 1)?;
    let mut colors = vec![0u64; g.n()];
    for &v in hset {
        colors[v] = *phase.output(v);
    }
    Ok((colors, phase.last))
}

/// Proper coloring with `max_degree + 1` colors.
pub struct DeltaPlus1 {
    pub delta: u64,
}

impl HSetSolver for DeltaPlus1 {
    fn kind(&self) -> ProblemKind {
        ProblemKind::VertexColoring
    }

    fn palette(&self, _g: &Graph) -> Option<u64> {
        Some(self.delta + 1)
    }

    fn solve(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError> {
        let g = tl.g;
        let mut lists = vec![Vec::new(); g.n()];
        for &v in it.hset {
            let taken: Vec<u64> = g.neighbors(v).iter().filter_map(|&u| sol.values[u]).collect();
            lists[v] = (1..=self.delta + 1).filter(|c| !taken.contains(c)).collect();
        }
        let (colors, last) = list_color_hset(tl, it.hset, &lists, offset)?;
        for &v in it.hset {
            sol.values[v] = Some(colors[v]);
        }
        Ok(last)
    }
}

/// Whether every uncolored vertex has more list colors than uncolored
/// neighbors, with lists `{1..=delta+1}` minus colored neighbors' colors.
pub fn list_invariant_holds(g: &Graph, colors: &[Option<u64>], delta: u64) -> bool {
    (0..g.n()).filter(|&v| colors[v].is_none()).all(|v| {
        let mut taken: Vec<u64> = g.neighbors(v).iter().filter_map(|&u| colors[u]).collect();
        taken.sort_unstable();
        taken.dedup();
        let free = delta + 1 - taken.len() as u64;
        let open = g.neighbors(v).iter().filter(|&&u| colors[u].is_none()).count() as u64;
        free > open
    })
}

/// MIS: color `G(H_i)` from `{1..=deg+1}`, then a vertex with color `j`
/// joins in loop round `j` unless a neighbor is already in.
pub struct MisSolver;

struct MisLoop<'a> {
    g: &'a Graph,
    color: &'a [u64],
    earlier_in: &'a [bool],
}

impl VertexProgram for MisLoop<'_> {
    type State = bool;
    type Msg = ();
    type Output = u64;

    fn init(&self, ctx: &mut Ctx<'_>) -> bool {
        self.g.neighbors(ctx.index).iter().any(|&u| self.earlier_in[u])
    }

    fn step(&self, blocked: &mut bool, ctx: &mut Ctx<'_>, inbox: &[Incoming<(), u64>]) -> Action<(), u64> {
        for item in inbox {
            if let Incoming::Final { output: 1, .. } = item {
                *blocked = true;
            }
        }
        if ctx.round < self.color[ctx.index] {
            return Action::idle();
        }
        Action::Finish(if *blocked { 0 } else { 1 })
    }
}

impl HSetSolver for MisSolver {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Mis
    }

    fn palette(&self, _g: &Graph) -> Option<u64> {
        None
    }

    fn solve(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError> {
        let g = tl.g;
        let flags = member_flags(g.n(), it.hset);
        let mut lists = vec![Vec::new(); g.n()];
        for &v in it.hset {
            let d = g.neighbors(v).iter().filter(|&&u| flags[u]).count() as u64;
            lists[v] = (1..=d + 1).collect();
        }
        let (colors, colored) = list_color_hset(tl, it.hset, &lists, offset)?;
        let earlier_in: Vec<bool> = sol.values.iter().map(|x| *x == Some(1)).collect();
        let program = MisLoop { g, color: &colors, earlier_in: &earlier_in };
        let phase = tl.run(&program, it.hset, colored, 1)?;
        for &v in it.hset {
            sol.values[v] = Some(*phase.output(v));
        }
        Ok(phase.last)
    }
}

/// Colors the line graph of `G(H_i)` with per-edge lists, charging one
/// round of `G` per line-graph round. Returns `(edge index, color, round)`.
/// `(label, earlier endpoint, edge index)`.
type Crossing = (u32, usize, usize);
/// `(edge index, color, round)`.
type EdgeDecision = (usize, u64, u64);

fn line_list_coloring(
    tl: &mut Timeline<'_>,
    hset: &[usize],
    list_for: impl Fn(usize, usize) -> Vec<u64>,
    offset: u64,
) -> Result<(Vec<EdgeDecision>, u64), EngineError> {
    let g = tl.g;
    let ids = tl.ids;
    let (sub, map) = g.induced(hset);
    if sub.m() == 0 {
        return Ok((Vec::new(), offset));
    }
    let line = sub.line_graph();
    let n = ids.max_id();
    let key = |a: usize, b: usize| {
        let (x, y) = (ids.id(map[a]).min(ids.id(map[b])), ids.id(map[a]).max(ids.id(map[b])));
        (x - 1) * n + y
    };
    let line_ids = IdAssignment::new(sub.edges().iter().map(|&(a, b)| key(a, b)).collect())
        .map_err(|e| EngineError::Contract(e.to_string()))?;
    let lists: Vec<Vec<u64>> = sub.edges().iter().map(|&(a, b)| list_for(map[a], map[b])).collect();
    let all: Vec<usize> = (0..line.n()).collect();
    let flags = vec![true; line.n()];
    let max_deg = check_lists(&line, &all, &flags, Lists::PerVertex(&lists))?;
    let schedule = linial_schedule_for_ids(&line_ids, max_deg);
    let program = ListColorProgram { g: &line, ids: &line_ids, members: &flags, lists: Lists::PerVertex(&lists), schedule: &schedule };
    let opts = RunOptions { seed: tl.seed(), round_cap: tl.round_cap(), exchanges: 1, stream: tl.next_stream(), n: Some(g.n()) };
    let run = run_on(&line, &line_ids, &program, &flags, &opts)?;
    tl.absorb(&run.digest);
    let mut out = Vec::with_capacity(sub.m());
    let mut last = offset;
    for (k, &(a, b)) in sub.edges().iter().enumerate() {
        let (u, v) = (map[a], map[b]);
        let t = offset + run.rounds[k];
        tl.touch(u, t);
        tl.touch(v, t);
        last = last.max(t);
        out.push((g.edge_index(u, v).expect("edge"), run.outputs[k].expect("colored"), t));
    }
    Ok((out, last))
}

fn linial_schedule_for_ids(ids: &IdAssignment, max_deg: u64) -> Vec<std::sync::Arc<crate::linial::CoverFreeFamily>> {
    ListColorProgram::schedule_for(ids, max_deg, FamilyKind::Best)
}

fn used_colors(g: &Graph, sol: &Solution, v: usize) -> Vec<u64> {
    g.neighbors(v).iter().filter_map(|&u| sol.values[g.edge_index(u, v).expect("edge")]).collect()
}

/// Edge coloring of `G(H_i)` from `{1..=2 delta - 1}`.
pub struct EdgeColoringSolver {
    pub delta: u64,
}

impl EdgeColoringSolver {
    fn top(&self) -> u64 {
        (2 * self.delta).saturating_sub(1).max(1)
    }
}

impl HSetSolver for EdgeColoringSolver {
    fn kind(&self) -> ProblemKind {
        ProblemKind::EdgeColoring
    }

    fn palette(&self, _g: &Graph) -> Option<u64> {
        Some(self.top())
    }

    fn solve(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError> {
        let g = tl.g;
        let top = self.top();
        let snapshot = sol.clone();
        let (colored, last) = line_list_coloring(
            tl,
            it.hset,
            |u, v| {
                let mut taken = used_colors(g, &snapshot, u);
                taken.extend(used_colors(g, &snapshot, v));
                (1..=top).filter(|c| !taken.contains(c)).collect()
            },
            offset,
        )?;
        for (e, c, _) in colored {
            sol.values[e] = Some(c);
        }
        Ok(last)
    }
}

/// The label loop on crossing edges: in sub-round `j` each vertex of `H_i`
/// colors its crossing edges labeled `j` one after another; the earlier
/// endpoints relay their updated color sets in the following round.
pub struct EdgeColoringCrossing {
    pub delta: u64,
}

impl CrossingHandler for EdgeColoringCrossing {
    fn handle(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError> {
        let g = tl.g;
        let top = (2 * self.delta).saturating_sub(1).max(1);
        let crossing: Vec<(usize, Vec<Crossing>)> =
            it.hset.iter().map(|&v| (v, it.crossing(g, v))).filter(|(_, c)| !c.is_empty()).collect();
        let labels = crossing.iter().flat_map(|(_, c)| c.iter().map(|x| x.0)).max().unwrap_or(0) as u64;
        let mut trace = Vec::new();
        for j in 1..=labels {
            let t = offset + 2 * j - 1;
            for (v, edges) in &crossing {
                for &(_, u, e) in edges.iter().filter(|x| x.0 as u64 == j) {
                    let mut taken = used_colors(g, sol, *v);
                    taken.extend(used_colors(g, sol, u));
                    let c = (1..=top)
                        .find(|c| !taken.contains(c))
                        .ok_or_else(|| EngineError::Contract(format!("no free color for edge {e}")))?;
                    sol.values[e] = Some(c);
                    tl.touch(*v, t);
                    tl.touch(u, t + 1);
                    trace.extend_from_slice(&(e as u64).to_le_bytes());
                    trace.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        tl.absorb(&trace);
        Ok(offset + 2 * labels)
    }
}

/// Maximal matching of `G(H_i)`: edge-color it, then sweep the color
/// classes, one round each, adding edges whose endpoints are both free.
pub struct MatchingSolver {
    pub delta: u64,
}

fn is_matched(g: &Graph, sol: &Solution, v: usize) -> bool {
    g.neighbors(v).iter().any(|&u| sol.values[g.edge_index(u, v).expect("edge")] == Some(1))
}

impl HSetSolver for MatchingSolver {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Matching
    }

    fn palette(&self, _g: &Graph) -> Option<u64> {
        None
    }

    fn solve(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError> {
        let g = tl.g;
        let free: Vec<usize> = it.hset.iter().copied().filter(|&v| !is_matched(g, sol, v)).collect();
        let flags = member_flags(g.n(), &free);
        let local_delta = free
            .iter()
            .map(|&v| g.neighbors(v).iter().filter(|&&u| flags[u]).count() as u64)
            .max()
            .unwrap_or(0);
        let top = (2 * local_delta).saturating_sub(1).max(1);
        let (mut colored, start) = line_list_coloring(tl, &free, |_, _| (1..=top).collect(), offset)?;
        colored.sort_by_key(|&(e, c, _)| (c, e));
        let classes = colored.iter().map(|x| x.1).max().unwrap_or(0);
        let mut trace = Vec::new();
        for &(e, c, _) in &colored {
            let (u, v) = g.edges()[e];
            if is_matched(g, sol, u) || is_matched(g, sol, v) {
                continue;
            }
            sol.values[e] = Some(1);
            tl.touch(u, start + c);
            tl.touch(v, start + c);
            trace.extend_from_slice(&(e as u64).to_le_bytes());
        }
        tl.absorb(&trace);
        Ok(start + classes)
    }

    /// A free vertex can stop once all its neighbors are matched.
    fn finish(&self, tl: &mut Timeline<'_>, sol: &Solution) {
        let g = tl.g;
        for v in 0..g.n() {
            if is_matched(g, sol, v) {
                continue;
            }
            let t = g.neighbors(v).iter().map(|&u| tl.finish_round(u) + 1).max().unwrap_or(0);
            tl.touch(v, t);
        }
    }
}

/// In sub-round `j`, each free vertex of `H_i` takes one crossing edge
/// labeled `j` whose earlier endpoint is still free.
pub struct MatchingCrossing;

impl CrossingHandler for MatchingCrossing {
    fn handle(&self, tl: &mut Timeline<'_>, it: &Iteration<'_>, sol: &mut Solution, offset: u64) -> Result<u64, EngineError> {
        let g = tl.g;
        let crossing: Vec<(usize, Vec<Crossing>)> =
            it.hset.iter().map(|&v| (v, it.crossing(g, v))).filter(|(_, c)| !c.is_empty()).collect();
        let labels = crossing.iter().flat_map(|(_, c)| c.iter().map(|x| x.0)).max().unwrap_or(0) as u64;
        let mut trace = Vec::new();
        for j in 1..=labels {
            let t = offset + 2 * j - 1;
            for (v, edges) in &crossing {
                if is_matched(g, sol, *v) {
                    continue;
                }
                let pick = edges.iter().find(|x| x.0 as u64 == j && !is_matched(g, sol, x.1));
                if let Some(&(_, u, e)) = pick {
                    sol.values[e] = Some(1);
                    tl.touch(*v, t);
                    tl.touch(u, t + 1);
                    trace.extend_from_slice(&(e as u64).to_le_bytes());
                }
            }
        }
        tl.absorb(&trace);
        Ok(offset + 2 * labels)
    }
}

const LIST_SUBSTITUTE: &str = "deg+1 list coloring: Linial then greedy";
const EDGE_SUBSTITUTE: &str = "edge coloring and matching: list coloring of the line graph";

fn with_substitution(res: Result<Extended, EngineError>, s: &str) -> Result<Extended, EngineError> {
    let (sol, r, mut rep) = res?;
    rep.substitution = Some(s.to_string());
    Ok((sol, r, rep))
}

pub type Extended = (Solution, ExecutionResult<Vec<u64>>, ExtensionReport);

/// `(max_degree + 1)`-coloring; colors start at 1.
pub fn delta_plus1_coloring(g: &Graph, ids: &IdAssignment, pparams: &PartitionParams) -> Result<Extended, EngineError> {
    let solver = DeltaPlus1 { delta: max_degree(g) as u64 };
    with_substitution(extend_from_partial(g, ids, pparams, &solver, None), LIST_SUBSTITUTE)
}

pub fn mis(g: &Graph, ids: &IdAssignment, pparams: &PartitionParams) -> Result<Extended, EngineError> {
    with_substitution(extend_from_partial(g, ids, pparams, &MisSolver, None), LIST_SUBSTITUTE)
}

/// `(2 max_degree - 1)`-edge-coloring; colors start at 1.
pub fn edge_coloring_2d1(g: &Graph, ids: &IdAssignment, pparams: &PartitionParams) -> Result<Extended, EngineError> {
    let delta = max_degree(g) as u64;
    let a = EdgeColoringSolver { delta };
    let b = EdgeColoringCrossing { delta };
    with_substitution(extend_from_partial(g, ids, pparams, &a, Some(&b)), EDGE_SUBSTITUTE)
}

pub fn maximal_matching(g: &Graph, ids: &IdAssignment, pparams: &PartitionParams) -> Result<Extended, EngineError> {
    let a = MatchingSolver { delta: max_degree(g) as u64 };
    with_substitution(extend_from_partial(g, ids, pparams, &a, Some(&MatchingCrossing)), EDGE_SUBSTITUTE)
}
