//! Procedure Partition (H-sets) and the forest decomposition built on it.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::engine::{
    run, Action, Ctx, EngineError, ExecutionResult, Incoming, Phase, RunOptions, Timeline, VertexProgram,
};
use crate::graph::{Graph, IdAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionParams {
    pub a: u64,
    pub epsilon: Ratio<u64>,
    /// Degree threshold `floor((2 + epsilon) * a)`.
    pub big_a: u64,
}

impl PartitionParams {
    pub fn new(a: u64, epsilon: Ratio<u64>) -> Result<Self, EngineError> {
        if a == 0 {
            return Err(EngineError::Contract("arboricity bound must be positive".into()));
        }
        if epsilon <= Ratio::from_integer(0) || epsilon > Ratio::from_integer(2) {
            return Err(EngineError::Contract(format!("epsilon {epsilon} outside (0, 2]")));
        }
        let big_a = ((Ratio::from_integer(2) + epsilon) * a).to_integer();
        Ok(PartitionParams { a, epsilon, big_a })
    }

    /// `a` with the default `epsilon = 2`, so `A = 4a`.
    pub fn with_default_epsilon(a: u64) -> Self {
        Self::new(a.max(1), Ratio::from_integer(2)).expect("valid defaults")
    }

    /// `floor((2 / epsilon) * log2 n)`.
    pub fn ell_cap(&self, n: usize) -> u64 {
        let c = 2.0 * *self.epsilon.denom() as f64 / *self.epsilon.numer() as f64;
        (c * (n.max(1) as f64).log2()).floor() as u64
    }

    /// `(2 + epsilon) / epsilon`, the bound on rounds per vertex.
    pub fn average_bound(&self) -> Ratio<u64> {
        (Ratio::from_integer(2) + self.epsilon) / self.epsilon
    }
}

/// H-set index per vertex, starting at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HPartition {
    pub index: Vec<u64>,
    pub ell: u64,
}

impl HPartition {
    pub fn from_index(index: Vec<u64>) -> Self {
        let ell = index.iter().copied().max().unwrap_or(0);
        HPartition { index, ell }
    }

    pub fn members(&self, i: u64) -> Vec<usize> {
        (0..self.index.len()).filter(|&v| self.index[v] == i).collect()
    }
}

impl Serialize for HPartition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Index<'a>(&'a [u64]);
        impl Serialize for Index<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (v, i) in self.0.iter().enumerate() {
                    m.serialize_entry(&v.to_string(), i)?;
                }
                m.end()
            }
        }
        let mut st = s.serialize_struct("HPartition", 2)?;
        st.serialize_field("ell", &self.ell)?;
        st.serialize_field("index", &Index(&self.index))?;
        st.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub label: u32,
}

/// One oriented, labeled arc per edge, in the order of [`Graph::edges`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForestDecomposition {
    pub edges: Vec<Arc>,
}

impl ForestDecomposition {
    /// Out-neighbors of every vertex.
    pub fn parents(&self, n: usize) -> Vec<Vec<usize>> {
        let mut p = vec![Vec::new(); n];
        for arc in &self.edges {
            p[arc.tail].push(arc.head);
        }
        p
    }

    pub fn num_labels(&self) -> usize {
        let mut labels: Vec<u32> = self.edges.iter().map(|a| a.label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }
}

/// Length of the longest directed path, or `None` if there is a cycle.
pub fn orientation_length(n: usize, parents: &[Vec<usize>]) -> Option<u64> {
    let order = topo_order(n, parents)?;
    let mut len = vec![0u64; n];
    for &v in order.iter().rev() {
        len[v] = parents[v].iter().map(|&u| len[u] + 1).max().unwrap_or(0);
    }
    Some(len.into_iter().max().unwrap_or(0))
}

/// [`orientation_length`] restricted to `members`; arcs leaving the set are
/// ignored. Cost is linear in the members and their arcs.
pub fn orientation_length_among(members: &[usize], parents: &[Vec<usize>]) -> Option<u64> {
    let local: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let k = members.len();
    let mut out = vec![0usize; k];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &v) in members.iter().enumerate() {
        for u in &parents[v] {
            if let Some(&j) = local.get(u) {
                out[i] += 1;
                children[j].push(i);
            }
        }
    }
    let mut len = vec![0u64; k];
    let mut stack: Vec<usize> = (0..k).filter(|&i| out[i] == 0).collect();
    let mut seen = 0;
    while let Some(j) = stack.pop() {
        seen += 1;
        for &i in &children[j] {
            len[i] = len[i].max(len[j] + 1);
            out[i] -= 1;
            if out[i] == 0 {
                stack.push(i);
            }
        }
    }
    (seen == k).then(|| len.into_iter().max().unwrap_or(0))
}

/// Vertices ordered so every arc goes forward, or `None` on a cycle.
pub fn topo_order(n: usize, parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut dg: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| dg.add_node(())).collect();
    for (v, ps) in parents.iter().enumerate() {
        for &u in ps {
            dg.add_edge(nodes[v], nodes[u], ());
        }
    }
    toposort(&dg, None).ok().map(|o| o.into_iter().map(|x| x.index()).collect())
}

/// Final broadcast of a vertex leaving the partition loop.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JoinInfo {
    /// H-set index, or `None` if the round budget ran out first.
    pub index: Option<u64>,
    pub id: u64,
    /// Ports still active when the vertex joined; label `i + 1` goes to `active[i]`.
    pub active: Vec<u32>,
}

/// Procedure Partition, optionally stopped after `budget` rounds. With
/// `groups`, a vertex only counts neighbors carrying its own group label.
pub struct PartitionProgram<'a> {
    pub g: &'a Graph,
    pub threshold: u64,
    pub groups: Option<&'a [u64]>,
    pub budget: Option<u64>,
    pub record_ports: bool,
}

pub struct PartitionState {
    alive: Vec<bool>,
    count: u64,
}

impl VertexProgram for PartitionProgram<'_> {
    type State = PartitionState;
    type Msg = ();
    type Output = JoinInfo;

    fn init(&self, ctx: &mut Ctx<'_>) -> PartitionState {
        let alive: Vec<bool> = match self.groups {
            Some(gr) => self.g.neighbors(ctx.index).iter().map(|&u| gr[u] == gr[ctx.index]).collect(),
            None => vec![true; ctx.degree],
        };
        let count = alive.iter().filter(|&&b| b).count() as u64;
        PartitionState { alive, count }
    }

    fn step(&self, st: &mut PartitionState, ctx: &mut Ctx<'_>, inbox: &[Incoming<(), JoinInfo>]) -> Action<(), JoinInfo> {
        for item in inbox {
            if let Incoming::Final { port, .. } = item {
                if st.alive[*port] {
                    st.alive[*port] = false;
                    st.count -= 1;
                }
            }
        }
        if st.count <= self.threshold {
            let active = if self.record_ports {
                (0..st.alive.len()).filter(|&p| st.alive[p]).map(|p| p as u32).collect()
            } else {
                Vec::new()
            };
            return Action::Finish(JoinInfo { index: Some(ctx.round), id: ctx.id, active });
        }
        if self.budget.is_some_and(|b| ctx.round >= b) {
            return Action::Finish(JoinInfo { index: None, id: ctx.id, active: Vec::new() });
        }
        Action::idle()
    }
}

/// Label used for vertices outside every group.
pub const NO_GROUP: u64 = u64::MAX;

/// Runs Procedure Partition on `G(members)` as a phase of a larger algorithm.
pub fn partition_phase(
    tl: &mut Timeline<'_>,
    members: &[usize],
    threshold: u64,
    budget: Option<u64>,
    offset: u64,
    record_ports: bool,
) -> Result<Phase<JoinInfo>, EngineError> {
    let mut groups = vec![NO_GROUP; tl.g.n()];
    for &v in members {
        groups[v] = 0;
    }
    partition_phase_grouped(tl, members, &groups, threshold, budget, offset, record_ports)
}

/// Like [`partition_phase`], with every group partitioned independently.
pub fn partition_phase_grouped(
    tl: &mut Timeline<'_>,
    members: &[usize],
    groups: &[u64],
    threshold: u64,
    budget: Option<u64>,
    offset: u64,
    record_ports: bool,
) -> Result<Phase<JoinInfo>, EngineError> {
    let program = PartitionProgram { g: tl.g, threshold, groups: Some(groups), budget, record_ports };
    tl.run(&program, members, offset, 1)
}

pub fn procedure_partition(
    g: &Graph,
    ids: &IdAssignment,
    params: &PartitionParams,
) -> Result<(HPartition, ExecutionResult<JoinInfo>), EngineError> {
    procedure_partition_with(g, ids, params, &RunOptions::default())
}

pub fn procedure_partition_with(
    g: &Graph,
    ids: &IdAssignment,
    params: &PartitionParams,
    opts: &RunOptions,
) -> Result<(HPartition, ExecutionResult<JoinInfo>), EngineError> {
    let program = PartitionProgram { g, threshold: params.big_a, groups: None, budget: None, record_ports: false };
    let res = run(g, ids, &program, opts)?;
    let hp = HPartition::from_index(res.outputs.iter().map(|o| o.index.expect("no budget")).collect());
    Ok((hp, res))
}

pub fn parallelized_forest_decomposition(
    g: &Graph,
    ids: &IdAssignment,
    params: &PartitionParams,
) -> Result<(ForestDecomposition, HPartition, ExecutionResult<JoinInfo>), EngineError> {
    let program = PartitionProgram { g, threshold: params.big_a, groups: None, budget: None, record_ports: true };
    let res = run(g, ids, &program, &RunOptions::default())?;
    let index: Vec<u64> = res.outputs.iter().map(|o| o.index.expect("no budget")).collect();
    let fd = assemble_forests(g, ids, &index, &res.outputs);
    Ok((fd, HPartition::from_index(index), res))
}

/// Orients every edge toward the endpoint with the larger `(index, id)` and
/// takes the label the tail gave that port when it joined.
pub fn assemble_forests(g: &Graph, ids: &IdAssignment, index: &[u64], joins: &[JoinInfo]) -> ForestDecomposition {
    let edges = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            let (tail, head) = if (index[u], ids.id(u)) < (index[v], ids.id(v)) { (u, v) } else { (v, u) };
            let port = g.port(tail, head).expect("edge") as u32;
            let pos = joins[tail].active.iter().position(|&p| p == port).expect("head was active at join");
            Arc { tail, head, label: pos as u32 + 1 }
        })
        .collect();
    ForestDecomposition { edges }
}

/// Vertices with more than `A` neighbors in the same or a later H-set.
pub fn verify_h_partition(g: &Graph, hp: &HPartition, params: &PartitionParams) -> Vec<(usize, usize)> {
    (0..g.n())
        .filter_map(|v| {
            let count = g.neighbors(v).iter().filter(|&&u| hp.index[u] >= hp.index[v]).count();
            (count as u64 > params.big_a).then_some((v, count))
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FdReport {
    /// An edge of the graph with no arc, or an arc that is not an edge.
    pub coverage: Option<(usize, usize)>,
    /// A vertex on a directed cycle.
    pub cycle: Option<usize>,
    /// `(vertex, out-degree)` above `A`.
    pub out_degree: Option<(usize, usize)>,
    /// `(vertex, label)` used twice on out-arcs of the vertex.
    pub label_clash: Option<(usize, u32)>,
    /// `(label, tail, head)` closing a cycle inside one label class.
    pub label_cycle: Option<(u32, usize, usize)>,
}

impl FdReport {
    pub fn is_valid(&self) -> bool {
        *self == FdReport::default()
    }
}

pub fn verify_forest_decomposition(g: &Graph, fd: &ForestDecomposition, params: &PartitionParams) -> FdReport {
    let mut rep = FdReport::default();
    let n = g.n();
    if fd.edges.len() != g.m() {
        rep.coverage = g.edges().get(fd.edges.len()).copied().or(Some((0, 0)));
    }
    for (k, arc) in fd.edges.iter().enumerate() {
        let e = (arc.tail.min(arc.head), arc.tail.max(arc.head));
        if rep.coverage.is_none() && g.edges().get(k) != Some(&e) {
            rep.coverage = Some(e);
        }
    }
    let parents = fd.parents(n);
    if topo_order(n, &parents).is_none() {
        rep.cycle = find_cycle_vertex(n, &parents);
    }
    if let Some(v) = (0..n).find(|&v| parents[v].len() as u64 > params.big_a) {
        rep.out_degree = Some((v, parents[v].len()));
    }
    let mut seen: BTreeMap<(usize, u32), ()> = BTreeMap::new();
    for arc in &fd.edges {
        if seen.insert((arc.tail, arc.label), ()).is_some() && rep.label_clash.is_none() {
            rep.label_clash = Some((arc.tail, arc.label));
        }
    }
    let mut by_label: BTreeMap<u32, UnionFind<usize>> = BTreeMap::new();
    for arc in &fd.edges {
        let uf = by_label.entry(arc.label).or_insert_with(|| UnionFind::new(n));
        if !uf.union(arc.tail, arc.head) && rep.label_cycle.is_none() {
            rep.label_cycle = Some((arc.label, arc.tail, arc.head));
        }
    }
    rep
}

fn find_cycle_vertex(n: usize, parents: &[Vec<usize>]) -> Option<usize> {
    // Repeatedly strip sinks; whatever survives lies on or leads into a cycle,
    // and following out-arcs from a survivor must revisit a vertex.
    let mut out: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (v, ps) in parents.iter().enumerate() {
        for &u in ps {
            children[u].push(v);
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| out[v] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(v) = stack.pop() {
        removed[v] = true;
        for &c in &children[v] {
            out[c] -= 1;
            if out[c] == 0 {
                stack.push(c);
            }
        }
    }
    let start = (0..n).find(|&v| !removed[v])?;
    let mut seen = vec![false; n];
    let mut v = start;
    while !seen[v] {
        seen[v] = true;
        v = *parents[v].iter().find(|&&u| !removed[u]).expect("survivor has a surviving parent");
    }
    Some(v)
}

/// Checks `n_i <= (2 / (2 + epsilon))^(i-1) * n` for every `i`, exactly.
pub fn decay_bound_holds(decay: &[u64], n: u64, epsilon: Ratio<u64>) -> bool {
    let (p, q) = (*epsilon.numer() as u128, *epsilon.denom() as u128);
    let (num, den) = (2 * q, 2 * q + p);
    let mut lhs_scale: u128 = 1;
    let mut rhs_scale: u128 = 1;
    for (i, &ni) in decay.iter().enumerate() {
        if i > 0 {
            match (lhs_scale.checked_mul(den), rhs_scale.checked_mul(num)) {
                (Some(l), Some(r)) => {
                    lhs_scale = l;
                    rhs_scale = r;
                }
                _ => return false,
            }
        }
        match (ni as u128).checked_mul(lhs_scale).zip((n as u128).checked_mul(rhs_scale)) {
            Some((l, r)) if l <= r => {}
            _ => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_ring;

    fn eps2(a: u64) -> PartitionParams {
        PartitionParams::new(a, Ratio::from_integer(2)).unwrap()
    }

    #[test]
    fn params() {
        let p = eps2(3);
        assert_eq!(p.big_a, 12);
        assert_eq!(p.average_bound(), Ratio::from_integer(2));
        assert_eq!(p.ell_cap(1024), 10);
        assert_eq!(PartitionParams::new(2, Ratio::new(1, 2)).unwrap().big_a, 5);
        assert!(PartitionParams::new(1, Ratio::from_integer(3)).is_err());
        assert!(PartitionParams::new(0, Ratio::from_integer(1)).is_err());
    }

    #[test]
    fn star_partition_and_ledger() {
        let g = Graph::star(5);
        let (hp, res) = procedure_partition(&g, &IdAssignment::identity(6), &eps2(1)).unwrap();
        assert_eq!(hp.index, vec![2, 1, 1, 1, 1, 1]);
        assert_eq!(res.ledger.r, vec![2, 1, 1, 1, 1, 1]);
        assert_eq!(res.metrics.avg, Ratio::new(7, 6));
    }

    #[test]
    fn k4_joins_at_once() {
        let (hp, _) = procedure_partition(&Graph::complete(4), &IdAssignment::identity(4), &eps2(2)).unwrap();
        assert_eq!(hp.index, vec![1; 4]);
        assert!(verify_h_partition(&Graph::complete(4), &hp, &eps2(2)).is_empty());
    }

    #[test]
    fn verifier_counts_violations() {
        let hp = HPartition::from_index(vec![1; 4]);
        let tight = PartitionParams { a: 1, epsilon: Ratio::from_integer(2), big_a: 2 };
        assert_eq!(verify_h_partition(&Graph::complete(4), &hp, &tight).len(), 4);
        assert!(verify_h_partition(&Graph::empty(1), &HPartition::from_index(vec![1]), &tight).is_empty());
    }

    #[test]
    fn path_orients_to_higher_id() {
        let g = Graph::path(3);
        let (fd, hp, _) = parallelized_forest_decomposition(&g, &IdAssignment::identity(3), &eps2(1)).unwrap();
        assert_eq!(hp.index, vec![1; 3]);
        assert_eq!(
            fd.edges,
            vec![Arc { tail: 0, head: 1, label: 1 }, Arc { tail: 1, head: 2, label: 2 }]
        );
        assert!(verify_forest_decomposition(&g, &fd, &eps2(1)).is_valid());
    }

    #[test]
    fn star_orients_leaves_to_center() {
        let g = Graph::star(5);
        let (fd, _, _) = parallelized_forest_decomposition(&g, &IdAssignment::identity(6), &eps2(1)).unwrap();
        assert!(fd.edges.iter().all(|a| a.head == 0 && a.label == 1));
        assert_eq!(fd.num_labels(), 1);
    }

    #[test]
    fn ring_decomposition_is_valid() {
        let g = gen_ring(6).unwrap();
        let (fd, _, _) = parallelized_forest_decomposition(&g, &IdAssignment::identity(6), &eps2(1)).unwrap();
        assert!(verify_forest_decomposition(&g, &fd, &eps2(1)).is_valid());
    }

    #[test]
    fn verifier_catches_cycles_and_clashes() {
        let g = Graph::complete(3);
        let tri = ForestDecomposition {
            edges: vec![
                Arc { tail: 0, head: 1, label: 1 },
                Arc { tail: 2, head: 0, label: 1 },
                Arc { tail: 1, head: 2, label: 1 },
            ],
        };
        let rep = verify_forest_decomposition(&g, &tri, &eps2(1));
        assert!(rep.cycle.is_some());
        assert_eq!(rep.label_cycle.map(|c| c.0), Some(1));
        let clash = ForestDecomposition {
            edges: vec![
                Arc { tail: 0, head: 1, label: 1 },
                Arc { tail: 0, head: 2, label: 1 },
                Arc { tail: 1, head: 2, label: 1 },
            ],
        };
        let rep = verify_forest_decomposition(&g, &clash, &eps2(1));
        assert_eq!(rep.label_clash, Some((0, 1)));
        assert!(rep.cycle.is_none());
    }

    #[test]
    fn json_shapes() {
        let g = Graph::path(3);
        let (fd, hp, _) = parallelized_forest_decomposition(&g, &IdAssignment::identity(3), &eps2(1)).unwrap();
        let hp_json = serde_json::to_value(&hp).unwrap();
        assert_eq!(hp_json["index"]["2"], 1);
        let fd_json = serde_json::to_value(&fd).unwrap();
        assert_eq!(fd_json["edges"][0]["tail"], 0);
        assert_eq!(fd_json["edges"][1]["label"], 2);
    }

    #[test]
    fn decay_bound_arithmetic() {
        assert!(decay_bound_holds(&[8, 4, 2, 1], 8, Ratio::from_integer(2)));
        assert!(!decay_bound_holds(&[8, 5], 8, Ratio::from_integer(2)));
        assert!(decay_bound_holds(&[10, 8], 10, Ratio::new(1, 2)));
        assert!(!decay_bound_holds(&[10, 9], 10, Ratio::new(1, 2)));
    }

    #[test]
    fn orientation_length_of_path() {
        let parents = vec![vec![1], vec![2], vec![]];
        assert_eq!(orientation_length(3, &parents), Some(2));
        assert_eq!(orientation_length(2, &[vec![1], vec![0]]), None);
        assert_eq!(orientation_length_among(&[0, 1, 2], &parents), Some(2));
        assert_eq!(orientation_length_among(&[1, 2], &parents), Some(1));
        assert_eq!(orientation_length_among(&[0, 1], &[vec![1], vec![0]]), None);
    }
}
