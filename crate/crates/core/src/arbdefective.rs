//! Arbdefective colorings, Legal-Coloring and the One-Plus-Eta recursion.
//!
//! Everything here uses `epsilon = 2`, so Partition thresholds are `4a`.

use std::sync::Arc;

use serde::Serialize;

use crate::engine::{Action, Ctx, EngineError, ExecutionResult, Incoming, Timeline, VertexProgram};
use crate::graph::{exact_arboricity, Graph, IdAssignment};
use crate::linial::{linial_schedule, schedule_palette, ColorVector, CoverFreeFamily, FamilyKind, LinialProgram};
use crate::partition::{orientation_length_among, partition_phase, PartitionParams};
use crate::schemes::{segmentation_in, Ka2Algorithms, KaAlgorithms};

/// `floor((2 + epsilon) * a)` for `epsilon = 2`.
fn big_a(a: u64) -> u64 {
    4 * a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EtaParams {
    /// Base-case threshold; recursion divides the arboricity by it.
    pub c: u64,
    /// `k = t = (3 + epsilon) C`.
    pub kt: u64,
    /// Parameter handed to Legal-Coloring.
    pub p_legal: u64,
}

impl EtaParams {
    pub fn new(c: u64) -> Result<Self, EngineError> {
        if c < 4 {
            return Err(EngineError::Contract(format!("C = {c} below 4")));
        }
        Ok(EtaParams { c, kt: 5 * c, p_legal: c * c })
    }

    /// `ceil(2 log2 log2 n)`, at least 1.
    pub fn r(&self, n: usize) -> u64 {
        let ll = (n.max(2) as f64).log2().log2();
        ((2.0 * ll).ceil() as u64).max(1)
    }

    pub fn eta(&self) -> f64 {
        6.0 / (self.c as f64).log2()
    }

    /// `ceil(log_C a) + 1`.
    pub fn depth_bound(&self, a: u64) -> u32 {
        let mut d = 0;
        let mut x = 1u64;
        while x < a {
            x = x.saturating_mul(self.c);
            d += 1;
        }
        d + 1
    }
}

impl Default for EtaParams {
    fn default() -> Self {
        EtaParams::new(8).expect("valid default")
    }
}

/// Orientation from Partial-Orientation: every edge of `G(members)` except
/// same-set, same-psi edges, directed toward the larger `(index, psi)`.
#[derive(Clone, Debug, Default)]
pub struct PartialOrientation {
    pub parents: Vec<Vec<usize>>,
    pub unoriented: Vec<(usize, usize)>,
    /// H-set index per member (relative to the start of the partition).
    pub index: Vec<u64>,
    pub psi: Vec<u64>,
    /// Number of psi colors.
    pub psi_palette: u64,
    /// Bound on same-psi neighbors inside an H-set.
    pub defect: u64,
}

/// Partial-Orientation on `G(members)` with a given H-partition (indices
/// relative to `offset`). Each H-set computes a proper coloring with
/// Arb-Linial as soon as it forms and reduces it modulo `psi_palette`.
fn partial_orientation_in(
    tl: &mut Timeline<'_>,
    members: &[usize],
    index: &[u64],
    a: u64,
    t: u64,
    offset: u64,
) -> Result<(PartialOrientation, u64), EngineError> {
    let g = tl.g;
    let ids = tl.ids;
    let n = g.n();
    let mut inside = vec![false; n];
    for &v in members {
        inside[v] = true;
    }
    let ell = members.iter().map(|&v| index[v]).max().unwrap_or(0);
    let mut hsets: Vec<Vec<usize>> = vec![Vec::new(); ell as usize + 1];
    for &v in members {
        hsets[index[v] as usize].push(v);
    }
    let schedule: Vec<Arc<CoverFreeFamily>> = linial_schedule(ids.max_id(), big_a(a), FamilyKind::Best);
    let m = schedule_palette(ids.max_id(), &schedule);
    let defect = a / t;
    let psi_palette = m.div_ceil(defect + 1);
    let init: Vec<u64> = ids.as_slice().iter().map(|&i| i - 1).collect();
    let mut intra = vec![Vec::new(); n];
    for &v in members {
        intra[v] = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| inside[u] && index[u] == index[v] && ids.id(u) > ids.id(v))
            .collect();
    }
    let mut psi = vec![0u64; n];
    let mut last = offset;
    for j in 1..=ell {
        let h = &hsets[j as usize];
        if h.is_empty() {
            continue;
        }
        let program = LinialProgram { g, init: &init, parents: &intra, schedule: &schedule };
        let phase = tl.run(&program, h, offset + j, 1)?;
        last = last.max(phase.last);
        for &v in h {
            psi[v] = phase.output(v).color % psi_palette;
        }
    }
    let mut parents = vec![Vec::new(); n];
    let mut unoriented = Vec::new();
    for &v in members {
        for &u in g.neighbors(v) {
            if !inside[u] {
                continue;
            }
            if index[u] == index[v] && psi[u] == psi[v] {
                if v < u {
                    unoriented.push((v, u));
                }
            } else if (index[u], psi[u]) > (index[v], psi[v]) {
                parents[v].push(u);
            }
        }
    }
    let po = PartialOrientation { parents, unoriented, index: index.to_vec(), psi, psi_palette, defect };
    Ok((po, last))
}

/// Waits for all parents, then takes the color in `0..k` used by the fewest
/// of them, smallest on ties.
pub struct MinUsageProgram<'a> {
    pub g: &'a Graph,
    pub parents: &'a [Vec<usize>],
    pub k: u64,
}

pub struct MinUsageState {
    is_parent: Vec<bool>,
    waiting: usize,
    usage: Vec<u64>,
}

impl VertexProgram for MinUsageProgram<'_> {
    type State = MinUsageState;
    type Msg = ();
    type Output = u64;

    fn init(&self, ctx: &mut Ctx<'_>) -> MinUsageState {
        let mut is_parent = vec![false; ctx.degree];
        for &u in &self.parents[ctx.index] {
            is_parent[self.g.port(ctx.index, u).expect("parent is a neighbor")] = true;
        }
        MinUsageState { is_parent, waiting: self.parents[ctx.index].len(), usage: vec![0; self.k as usize] }
    }

    fn step(&self, st: &mut MinUsageState, _ctx: &mut Ctx<'_>, inbox: &[Incoming<(), u64>]) -> Action<(), u64> {
        for item in inbox {
            if let Incoming::Final { port, output } = item {
                if st.is_parent[*port] {
                    st.waiting -= 1;
                    st.usage[*output as usize] += 1;
                }
            }
        }
        if st.waiting > 0 {
            return Action::idle();
        }
        let best = (0..self.k).min_by_key(|&c| (st.usage[c as usize], c)).expect("k >= 1");
        Action::Finish(best)
    }
}

/// An arbdefective coloring with the orientation that certifies it.
#[derive(Clone, Debug)]
pub struct Arbdefective {
    /// Class in `0..k` per member.
    pub class: Vec<u64>,
    pub orientation: PartialOrientation,
    /// Per member: same-class partial-orientation parents, plus same-set,
    /// same-psi, same-class neighbors with a larger ID.
    pub certificate: Vec<Vec<usize>>,
    /// `floor(a/t + (2+epsilon) a/k)`.
    pub b: u64,
    pub members: Vec<usize>,
    pub k: u64,
}

impl Arbdefective {
    /// Largest number of same-class parents, over members.
    pub fn max_class_parents(&self) -> usize {
        self.members
            .iter()
            .map(|&v| self.orientation.parents[v].iter().filter(|&&u| self.class[u] == self.class[v]).count())
            .max()
            .unwrap_or(0)
    }

    /// Members of class `j`.
    pub fn class_members(&self, j: u64) -> Vec<usize> {
        self.members.iter().copied().filter(|&v| self.class[v] == j).collect()
    }
}

/// `floor(a/t + 4a/k)` in exact arithmetic.
pub fn arbdefect_bound(a: u64, k: u64, t: u64) -> u64 {
    (a * k + 4 * a * t) / (t * k)
}

fn h_arbdefective_in(
    tl: &mut Timeline<'_>,
    members: &[usize],
    index: &[u64],
    a: u64,
    k: u64,
    t: u64,
    offset: u64,
) -> Result<(Arbdefective, u64), EngineError> {
    let (po, psi_done) = partial_orientation_in(tl, members, index, a, t, offset)?;
    let g = tl.g;
    let ids = tl.ids;
    let program = MinUsageProgram { g, parents: &po.parents, k };
    let phase = tl.run(&program, members, psi_done, 1)?;
    let mut class = vec![0u64; g.n()];
    for &v in members {
        class[v] = *phase.output(v);
    }
    let mut certificate = vec![Vec::new(); g.n()];
    for &v in members {
        certificate[v] = po.parents[v].iter().copied().filter(|&u| class[u] == class[v]).collect();
    }
    for &(u, v) in &po.unoriented {
        if class[u] == class[v] {
            let (lo, hi) = if ids.id(u) < ids.id(v) { (u, v) } else { (v, u) };
            certificate[lo].push(hi);
        }
    }
    let out = Arbdefective {
        class,
        orientation: po,
        certificate,
        b: arbdefect_bound(a, k, t),
        members: members.to_vec(),
        k,
    };
    Ok((out, phase.last.max(psi_done)))
}

fn arbdefective_in(
    tl: &mut Timeline<'_>,
    members: &[usize],
    a: u64,
    k: u64,
    t: u64,
    offset: u64,
) -> Result<(Arbdefective, u64), EngineError> {
    let part = partition_phase(tl, members, big_a(a), None, offset, false)?;
    let mut index = vec![0u64; tl.g.n()];
    for &v in members {
        index[v] = part.end[v] - offset;
    }
    h_arbdefective_in(tl, members, &index, a, k, t, offset)
}

/// Partial-Orientation on the whole graph with the given H-partition.
pub fn partial_orientation(
    g: &Graph,
    ids: &IdAssignment,
    index: &[u64],
    a: u64,
    t: u64,
) -> Result<PartialOrientation, EngineError> {
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..g.n()).collect();
    Ok(partial_orientation_in(&mut tl, &all, index, a, t, 0)?.0)
}

/// Arbdefective-Coloring: Partition, Partial-Orientation, then minimum-usage
/// colors along the orientation.
pub fn arbdefective_coloring(
    g: &Graph,
    ids: &IdAssignment,
    a: u64,
    k: u64,
    t: u64,
) -> Result<(Arbdefective, ExecutionResult<u64>), EngineError> {
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..g.n()).collect();
    let (ad, _) = arbdefective_in(&mut tl, &all, a.max(1), k, t, 0)?;
    let classes = ad.class.clone();
    Ok((ad, tl.into_result(classes)))
}

/// Like [`arbdefective_coloring`] with the H-partition supplied.
pub fn h_arbdefective_coloring(
    g: &Graph,
    ids: &IdAssignment,
    a: u64,
    k: u64,
    t: u64,
    index: &[u64],
) -> Result<(Arbdefective, ExecutionResult<u64>), EngineError> {
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..g.n()).collect();
    let ell = index.iter().copied().max().unwrap_or(0);
    for &v in &all {
        tl.touch(v, ell.min(index[v]));
    }
    let (ad, _) = h_arbdefective_in(&mut tl, &all, index, a.max(1), k, t, 0)?;
    let classes = ad.class.clone();
    Ok((ad, tl.into_result(classes)))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ArbdefectiveReport {
    /// `(class, vertex)` whose certificate out-degree exceeds `b`.
    pub out_degree: Option<(u64, usize)>,
    /// A class whose certificate has a cycle or leaves the class.
    pub bad_certificate: Option<u64>,
    /// `(class, arboricity)` for small classes whose exact arboricity exceeds `b`.
    pub exact: Option<(u64, usize)>,
    pub classes: usize,
    pub max_out_degree: usize,
}

impl ArbdefectiveReport {
    pub fn is_valid(&self) -> bool {
        self.out_degree.is_none() && self.bad_certificate.is_none() && self.exact.is_none()
    }
}

/// Checks that each class induces arboricity at most `b`: the certificate
/// must cover every in-class edge, stay acyclic and have out-degree at most
/// `b`. Classes of at most 14 vertices are also checked exactly.
pub fn verify_arbdefective(
    g: &Graph,
    members: &[usize],
    class: &[u64],
    certificate: &[Vec<usize>],
    b: u64,
) -> ArbdefectiveReport {
    let mut rep = ArbdefectiveReport::default();
    let mut by_class: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
    for &v in members {
        by_class.entry(class[v]).or_default().push(v);
    }
    rep.classes = by_class.len();
    let mut inside = vec![false; g.n()];
    for &v in members {
        inside[v] = true;
    }
    for (&c, vs) in &by_class {
        for &v in vs {
            let d = certificate[v].len();
            rep.max_out_degree = rep.max_out_degree.max(d);
            if d as u64 > b && rep.out_degree.is_none() {
                rep.out_degree = Some((c, v));
            }
            if certificate[v].iter().any(|&u| !inside[u] || class[u] != c || !g.has_edge(u, v)) {
                rep.bad_certificate.get_or_insert(c);
            }
        }
        let covered: usize = vs.iter().map(|&v| certificate[v].len()).sum();
        let edges: usize = vs
            .iter()
            .map(|&v| g.neighbors(v).iter().filter(|&&u| inside[u] && class[u] == c && u > v).count())
            .sum();
        if covered != edges || orientation_length_among(vs, certificate).is_none() {
            rep.bad_certificate.get_or_insert(c);
        }
        if vs.len() <= 14 {
            let (sub, _) = g.induced(vs);
            if let Ok(arb) = exact_arboricity(&sub) {
                if arb as u64 > b && rep.exact.is_none() {
                    rep.exact = Some((c, arb));
                }
            }
        }
    }
    rep
}

/// `floor(alpha/p + (2+epsilon) alpha/p)`.
pub fn legal_update(alpha: u64, p: u64) -> u64 {
    5 * alpha / p
}

/// Number of refinement iterations Legal-Coloring performs.
pub fn legal_iterations(a_bound: u64, p: u64) -> Option<u32> {
    let mut alpha = a_bound;
    let mut it = 0;
    while alpha > p {
        let next = legal_update(alpha, p);
        if next >= alpha {
            return None;
        }
        alpha = next;
        it += 1;
    }
    Some(it)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LegalReport {
    pub iterations: u32,
    pub final_alpha: u64,
    /// Palette size per subgraph, `floor((2+epsilon) alpha) + 1`.
    pub palette_per_subgraph: u64,
    pub subgraphs: usize,
    pub arbdefective_valid: bool,
}

fn legal_in(
    tl: &mut Timeline<'_>,
    members: &[usize],
    a_bound: u64,
    p: u64,
    offset: u64,
    colors: &mut [Vec<u64>],
    prefix: &[u64],
) -> Result<(u64, LegalReport), EngineError> {
    if members.is_empty() {
        return Ok((offset, LegalReport { arbdefective_valid: true, ..Default::default() }));
    }
    if p < 2 {
        return Err(EngineError::Contract(format!("legal coloring needs p >= 2, got {p}")));
    }
    let mut alpha = a_bound.max(1);
    let mut groups: Vec<(Vec<usize>, u64)> = vec![(members.to_vec(), offset)];
    let mut rep = LegalReport { arbdefective_valid: true, ..Default::default() };
    while alpha > p {
        let next = legal_update(alpha, p);
        if next >= alpha {
            return Err(EngineError::Contract(format!("p = {p} does not shrink arboricity {alpha}")));
        }
        let mut refined = Vec::with_capacity(groups.len() * p as usize);
        for (group, start) in &groups {
            if group.is_empty() {
                refined.extend((0..p).map(|_| (Vec::new(), *start)));
                continue;
            }
            let (ad, end) = arbdefective_in(tl, group, alpha, p, p, *start)?;
            let v = verify_arbdefective(tl.g, group, &ad.class, &ad.certificate, ad.b);
            rep.arbdefective_valid &= v.is_valid();
            for j in 0..p {
                refined.push((ad.class_members(j), end));
            }
        }
        groups = refined;
        alpha = next;
        rep.iterations += 1;
    }
    let pal = big_a(alpha) + 1;
    let pparams = PartitionParams::with_default_epsilon(alpha);
    let algs = KaAlgorithms::new(tl.ids, pparams.big_a);
    let mut last = offset;
    for (z, (group, start)) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let out = segmentation_in(tl, group, &pparams, 1, &algs, *start)?;
        last = last.max(out.last);
        for &v in group {
            let mut c = prefix.to_vec();
            c.push(z as u64 * pal + out.colors[v]);
            colors[v] = c;
        }
    }
    rep.final_alpha = alpha;
    rep.palette_per_subgraph = pal;
    rep.subgraphs = groups.len();
    Ok((last, rep))
}

/// Legal-Coloring: refine by arbdefective colorings while the arboricity
/// bound exceeds `p`, then color every part with its own palette.
pub fn legal_coloring(
    g: &Graph,
    ids: &IdAssignment,
    a_bound: u64,
    p: u64,
) -> Result<(ColorVector, ExecutionResult<u64>, LegalReport), EngineError> {
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..g.n()).collect();
    let mut colors = vec![Vec::new(); g.n()];
    let (_, rep) = legal_in(&mut tl, &all, a_bound, p, 0, &mut colors, &[])?;
    let flat: Vec<u64> = colors.iter().map(|c| c[0]).collect();
    Ok((ColorVector { colors }, tl.into_result(flat), rep))
}

/// One recursion level of One-Plus-Eta.
#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub depth: u32,
    pub a: u64,
    pub size: usize,
    pub base: bool,
    /// Vertices in the first `r` H-sets.
    pub h_size: usize,
    pub classes: usize,
    pub arbdefective: Option<ArbdefectiveReport>,
    pub b: u64,
    pub legal: Option<LegalReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaReport {
    pub params: EtaParams,
    pub r: u64,
    pub depth: u32,
    pub depth_bound: u32,
    pub levels: Vec<LevelReport>,
    pub palette: usize,
}

impl EtaReport {
    pub fn all_levels_valid(&self) -> bool {
        self.levels.iter().all(|l| {
            l.arbdefective.as_ref().is_none_or(|r| r.is_valid()) && l.legal.as_ref().is_none_or(|r| r.arbdefective_valid)
        })
    }
}

struct EtaCtx<'c> {
    params: EtaParams,
    r: u64,
    colors: &'c mut Vec<Vec<u64>>,
    levels: Vec<LevelReport>,
    depth_bound: u32,
}

#[allow(clippy::too_many_arguments)]
fn one_plus_eta_in(
    tl: &mut Timeline<'_>,
    cx: &mut EtaCtx<'_>,
    members: &[usize],
    a: u64,
    offset: u64,
    depth: u32,
    prefix: Vec<u64>,
) -> Result<(), EngineError> {
    if members.is_empty() {
        return Ok(());
    }
    if depth > cx.depth_bound {
        return Err(EngineError::Contract(format!("recursion depth {depth} exceeds {}", cx.depth_bound)));
    }
    let a = a.max(1);
    if a < cx.params.c {
        let pparams = PartitionParams::with_default_epsilon(a);
        let algs = Ka2Algorithms::new(tl.ids, pparams.big_a, FamilyKind::Best);
        let out = segmentation_in(tl, members, &pparams, 2, &algs, offset)?;
        for &v in members {
            let mut c = prefix.clone();
            c.push(out.colors[v]);
            cx.colors[v] = c;
        }
        cx.levels.push(LevelReport {
            depth,
            a,
            size: members.len(),
            base: true,
            h_size: 0,
            classes: 0,
            arbdefective: None,
            b: 0,
            legal: None,
        });
        return Ok(());
    }
    let r = cx.r;
    let part = partition_phase(tl, members, big_a(a), Some(r), offset, false)?;
    let mut index = vec![0u64; tl.g.n()];
    let mut h = Vec::new();
    let mut rest = Vec::new();
    for &v in members {
        match part.output(v).index {
            Some(i) => {
                index[v] = i;
                h.push(v);
            }
            None => rest.push(v),
        }
    }

    let mut p1 = prefix.clone();
    p1.push(1);
    let (_, legal) = legal_in(tl, &rest, a, cx.params.p_legal, offset + r, cx.colors, &p1)?;

    let kt = cx.params.kt;
    let (ad, end) = h_arbdefective_in(tl, &h, &index, a, kt, kt, offset)?;
    let check = verify_arbdefective(tl.g, &h, &ad.class, &ad.certificate, ad.b);
    let classes: Vec<Vec<usize>> = (0..kt).map(|j| ad.class_members(j)).collect();
    cx.levels.push(LevelReport {
        depth,
        a,
        size: members.len(),
        base: false,
        h_size: h.len(),
        classes: classes.iter().filter(|c| !c.is_empty()).count(),
        arbdefective: Some(check),
        b: ad.b,
        legal: Some(legal),
    });
    let next_a = a / cx.params.c;
    for (j, class) in classes.iter().enumerate() {
        let mut p2 = prefix.clone();
        p2.extend([2, j as u64 + 1]);
        one_plus_eta_in(tl, cx, class, next_a, end, depth + 1, p2)?;
    }
    Ok(())
}

/// One-Plus-Eta-Arb-Col with arboricity bound `a`.
pub fn one_plus_eta_arb_col(
    g: &Graph,
    ids: &IdAssignment,
    a: u64,
    params: EtaParams,
) -> Result<(ColorVector, ExecutionResult<Vec<u64>>, EtaReport), EngineError> {
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..g.n()).collect();
    let mut colors = vec![Vec::new(); g.n()];
    let r = params.r(g.n());
    let depth_bound = params.depth_bound(a.max(1));
    let mut cx = EtaCtx { params, r, colors: &mut colors, levels: Vec::new(), depth_bound };
    one_plus_eta_in(&mut tl, &mut cx, &all, a, 0, 1, Vec::new())?;
    let levels = cx.levels;
    let cv = ColorVector { colors };
    let report = EtaReport {
        params,
        r,
        depth: levels.iter().map(|l| l.depth).max().unwrap_or(0),
        depth_bound,
        levels,
        palette: cv.palette_size(),
    };
    Ok((cv.clone(), tl.into_result(cv.colors), report))
}
