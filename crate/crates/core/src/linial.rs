//! Cover-free families and the coloring primitives built on them.
//!
//! Colors and family elements are 0-based internally. The ID coloring of a
//! vertex is `id - 1`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::engine::{run_on, Action, Ctx, EngineError, Incoming, PartialRun, RunOptions, VertexProgram};
use crate::graph::{Graph, IdAssignment};

/// Largest index count the greedy builder accepts.
pub const GREEDY_LIMIT: u64 = 4096;

const GREEDY_SEED: u64 = 0x5eed_cff0;
const GREEDY_TRIES_PER_SET: usize = 64;
const GREEDY_DOUBLINGS: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Greedy,
    Polynomial,
    /// Whichever of the two has the smaller universe.
    Best,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CffError {
    #[error("greedy family limited to {limit} indices, got {num_ids}")]
    TooManyIds { num_ids: u64, limit: u64 },
    #[error("no cover-free family found; reached universe {m}")]
    Exhausted { m: u64 },
}

/// Sets indexed `0..num_ids()` over the universe `0..m`.
///
/// Every construction guarantees that distinct sets share at most `d`
/// elements while each set has more than `A * d` elements, so no set is
/// covered by `A` others.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverFreeFamily {
    pub m: u64,
    pub union_param: u64,
    pub max_intersection: u64,
    pub kind: FamilyKind,
    sets: Vec<Vec<u32>>,
}

impl CoverFreeFamily {
    pub fn num_ids(&self) -> u64 {
        self.sets.len() as u64
    }

    pub fn set(&self, index: u64) -> Option<&[u32]> {
        self.sets.get(index as usize).map(Vec::as_slice)
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    /// Least element of `F_own` outside the union of the given sets, or the
    /// fallback `m + own` (second value `true`) when there is none.
    pub fn escape(&self, own: u64, others: impl IntoIterator<Item = u64>) -> (u64, bool) {
        let Some(fs) = self.set(own) else {
            return (self.m + own, true);
        };
        let mut blocked: Vec<u32> = Vec::new();
        for c in others {
            if let Some(s) = self.set(c) {
                blocked.extend_from_slice(s);
            }
        }
        blocked.sort_unstable();
        match fs.iter().find(|x| blocked.binary_search(x).is_err()) {
            Some(&x) => (x as u64, false),
            None => (self.m + own, true),
        }
    }
}

impl Serialize for CoverFreeFamily {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Sets<'a>(&'a [Vec<u32>]);
        impl Serialize for Sets<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (i, set) in self.0.iter().enumerate() {
                    let one_based: Vec<u32> = set.iter().map(|x| x + 1).collect();
                    m.serialize_entry(&i.to_string(), &one_based)?;
                }
                m.end()
            }
        }
        let mut st = s.serialize_struct("CoverFreeFamily", 4)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("A", &self.union_param)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("sets", &Sets(&self.sets))?;
        st.end()
    }
}

fn ceil_log2(x: u64) -> f64 {
    (x.max(1) as f64).log2()
}

/// `max(1, 5 * ceil(A^2 * log2 num_ids))`.
pub fn greedy_universe(num_ids: u64, a: u64) -> u64 {
    let t = ((a * a) as f64 * ceil_log2(num_ids)).ceil() as u64;
    (5 * t).max(1)
}

/// Random greedy family: sets of size `A*d + 1` with pairwise intersections
/// at most `d`, for the least `d` that succeeds.
pub fn build_cff_greedy(num_ids: u64, a: u64) -> Result<CoverFreeFamily, CffError> {
    if num_ids > GREEDY_LIMIT {
        return Err(CffError::TooManyIds { num_ids, limit: GREEDY_LIMIT });
    }
    let num_ids = num_ids.max(1);
    let mut m = greedy_universe(num_ids, a);
    let mut rng = ChaCha8Rng::seed_from_u64(GREEDY_SEED ^ (num_ids << 20) ^ a);
    for _ in 0..=GREEDY_DOUBLINGS {
        if m >= num_ids {
            let sets = (0..num_ids as u32).map(|i| vec![i]).collect();
            return Ok(CoverFreeFamily { m, union_param: a, max_intersection: 0, kind: FamilyKind::Greedy, sets });
        }
        let mut d = 1u64;
        while a * d < m {
            if let Some(sets) = greedy_attempt(num_ids as usize, m, (a * d + 1) as usize, d as usize, &mut rng) {
                return Ok(CoverFreeFamily { m, union_param: a, max_intersection: d, kind: FamilyKind::Greedy, sets });
            }
            d += 1;
        }
        m *= 2;
    }
    Err(CffError::Exhausted { m: m / 2 })
}

fn greedy_attempt(num_ids: usize, m: u64, s: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<u32>>> {
    let mut holders: Vec<Vec<u32>> = vec![Vec::new(); m as usize];
    let mut sets: Vec<Vec<u32>> = Vec::with_capacity(num_ids);
    let mut shared = vec![0usize; num_ids];
    let mut touched: Vec<u32> = Vec::new();
    'next: for idx in 0..num_ids {
        for _ in 0..GREEDY_TRIES_PER_SET {
            let mut cand: Vec<u32> = sample(rng, m as usize, s).into_iter().map(|x| x as u32).collect();
            cand.sort_unstable();
            let mut ok = true;
            for &x in &cand {
                for &j in &holders[x as usize] {
                    if shared[j as usize] == 0 {
                        touched.push(j);
                    }
                    shared[j as usize] += 1;
                    if shared[j as usize] > d {
                        ok = false;
                    }
                }
            }
            for &j in &touched {
                shared[j as usize] = 0;
            }
            touched.clear();
            if ok {
                for &x in &cand {
                    holders[x as usize].push(idx as u32);
                }
                sets.push(cand);
                continue 'next;
            }
        }
        return None;
    }
    Some(sets)
}

fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|i| i * i <= q).all(|i| !q.is_multiple_of(i))
}

/// Smallest prime `q` and degree `d` with `q^(d+1) >= num_ids` and
/// `q >= A*d + 2`.
pub fn polynomial_params(num_ids: u64, a: u64) -> (u64, u64) {
    let num_ids = num_ids.max(1);
    let mut q = 2u64;
    loop {
        if is_prime(q) {
            let mut d = 0u64;
            let mut pow = q as u128;
            while pow < num_ids as u128 {
                pow *= q as u128;
                d += 1;
            }
            if q >= a * d + 2 {
                return (q, d);
            }
        }
        q += 1;
    }
}

/// Graphs of polynomials of degree at most `d` over GF(q).
pub fn build_cff_polynomial(num_ids: u64, a: u64) -> CoverFreeFamily {
    let (q, d) = polynomial_params(num_ids, a);
    let sets = (0..num_ids.max(1))
        .map(|p| {
            let mut coeffs = Vec::with_capacity(d as usize + 1);
            let mut rest = p;
            for _ in 0..=d {
                coeffs.push(rest % q);
                rest /= q;
            }
            (0..q)
                .map(|x| {
                    let y = coeffs.iter().rev().fold(0u64, |acc, &c| (acc * x + c) % q);
                    (x * q + y) as u32
                })
                .collect()
        })
        .collect();
    CoverFreeFamily { m: q * q, union_param: a, max_intersection: d, kind: FamilyKind::Polynomial, sets }
}

/// Cached families hold at most this many set elements in total; the cache
/// is emptied when an insertion would exceed it.
const CACHE_BUDGET: usize = 1 << 25;

#[derive(Default)]
struct FamilyCache {
    families: HashMap<(u64, u64, FamilyKind), Arc<CoverFreeFamily>>,
    elements: usize,
}

fn cache() -> &'static Mutex<FamilyCache> {
    static CACHE: OnceLock<Mutex<FamilyCache>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(FamilyCache::default()))
}

/// Memoized family for `num_ids` indices and union parameter `a`.
///
/// `Greedy` silently uses the polynomial construction above
/// [`GREEDY_LIMIT`] indices.
pub fn family(kind: FamilyKind, num_ids: u64, a: u64) -> Arc<CoverFreeFamily> {
    let num_ids = num_ids.max(1);
    let key = (num_ids, a, kind);
    if let Some(f) = cache().lock().expect("cache").families.get(&key) {
        return f.clone();
    }
    let f = match kind {
        FamilyKind::Polynomial => Arc::new(build_cff_polynomial(num_ids, a)),
        FamilyKind::Greedy => {
            Arc::new(build_cff_greedy(num_ids, a).unwrap_or_else(|_| build_cff_polynomial(num_ids, a)))
        }
        FamilyKind::Best => {
            let poly = family(FamilyKind::Polynomial, num_ids, a);
            if num_ids <= GREEDY_LIMIT && greedy_universe(num_ids, a) < poly.m {
                let greedy = family(FamilyKind::Greedy, num_ids, a);
                if greedy.m < poly.m { greedy } else { poly }
            } else {
                poly
            }
        }
    };
    let size: usize = f.sets.iter().map(Vec::len).sum();
    let mut c = cache().lock().expect("cache");
    if c.elements + size > CACHE_BUDGET {
        c.families.clear();
        c.elements = 0;
    }
    if kind != FamilyKind::Best {
        c.elements += size;
    }
    c.families.insert(key, f.clone());
    f
}

/// Every set escapes the union of every `A` other sets. Exponential; meant
/// for small families.
pub fn is_cover_free_exhaustive(f: &CoverFreeFamily) -> bool {
    let k = f.sets.len();
    let a = (f.union_param as usize).min(k.saturating_sub(1));
    fn rec(f: &CoverFreeFamily, own: usize, start: usize, left: usize, union: &mut Vec<u32>) -> bool {
        if left == 0 || start == f.sets.len() {
            return f.sets[own].iter().any(|x| !union.contains(x));
        }
        for j in start..f.sets.len() {
            if j == own {
                continue;
            }
            let before = union.len();
            union.extend_from_slice(&f.sets[j]);
            let ok = rec(f, own, j + 1, left - 1, union);
            union.truncate(before);
            if !ok {
                return false;
            }
        }
        true
    }
    (0..k).all(|own| rec(f, own, 0, a, &mut Vec::new()))
}

/// Largest intersection between two distinct sets.
pub fn max_pairwise_intersection(f: &CoverFreeFamily) -> usize {
    let mut best = 0;
    for i in 0..f.sets.len() {
        for j in i + 1..f.sets.len() {
            let c = f.sets[i].iter().filter(|x| f.sets[j].binary_search(x).is_ok()).count();
            best = best.max(c);
        }
    }
    best
}

/// A hierarchical color per vertex; plain colors have length one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ColorVector {
    pub colors: Vec<Vec<u64>>,
}

impl ColorVector {
    pub fn plain(colors: impl IntoIterator<Item = u64>) -> Self {
        ColorVector { colors: colors.into_iter().map(|c| vec![c]).collect() }
    }

    /// Edges whose endpoints share a color.
    pub fn conflicts(&self, g: &Graph) -> Vec<(usize, usize)> {
        g.edges().iter().copied().filter(|&(u, v)| self.colors[u] == self.colors[v]).collect()
    }

    pub fn is_proper(&self, g: &Graph) -> bool {
        self.conflicts(g).is_empty()
    }

    pub fn palette_size(&self) -> usize {
        let mut c: Vec<&Vec<u64>> = self.colors.iter().collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    /// First component of every color.
    pub fn heads(&self) -> Vec<u64> {
        self.colors.iter().map(|c| c[0]).collect()
    }
}

/// Ports of `v` leading to the listed global vertices.
fn ports_of(g: &Graph, v: usize, targets: &[usize]) -> Vec<usize> {
    targets.iter().map(|&u| g.port(v, u).expect("parent is a neighbor")).collect()
}

fn flags(n: usize, members: &[usize]) -> Vec<bool> {
    let mut f = vec![false; n];
    for &v in members {
        f[v] = true;
    }
    f
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundOutcome {
    pub colors: Vec<u64>,
    pub fallbacks: usize,
}

/// One Arb-Linial step computed centrally: each vertex escapes the sets of
/// its parents' colors.
pub fn arb_linial_round(current: &[u64], parents: &[Vec<usize>], cff: &CoverFreeFamily) -> RoundOutcome {
    let mut fallbacks = 0;
    let colors = (0..current.len())
        .map(|v| {
            let (x, fb) = cff.escape(current[v], parents[v].iter().map(|&u| current[u]));
            fallbacks += fb as usize;
            x
        })
        .collect();
    RoundOutcome { colors, fallbacks }
}

/// Families applied in order to shrink a palette of `palette` colors, stopping
/// once the next family would not shrink it.
pub fn linial_schedule(palette: u64, a: u64, kind: FamilyKind) -> Vec<Arc<CoverFreeFamily>> {
    let mut out = Vec::new();
    let mut p = palette.max(1);
    loop {
        let f = family(kind, p, a);
        if f.m >= p {
            return out;
        }
        p = f.m;
        out.push(f);
    }
}

/// Palette after running `schedule` from `initial` colors.
pub fn schedule_palette(initial: u64, schedule: &[Arc<CoverFreeFamily>]) -> u64 {
    schedule.last().map_or(initial, |f| f.m)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinialOut {
    pub color: u64,
    pub fallbacks: u32,
}

/// Arb-Linial iterations. Round `j` applies `schedule[j-1]` to the colors of
/// round `j-1`; the initial colors of parents are known from earlier phases.
pub struct LinialProgram<'a> {
    pub g: &'a Graph,
    pub init: &'a [u64],
    pub parents: &'a [Vec<usize>],
    pub schedule: &'a [Arc<CoverFreeFamily>],
}

pub struct LinialState {
    color: u64,
    slot: Vec<Option<usize>>,
    parent_colors: Vec<u64>,
    fallbacks: u32,
}

impl VertexProgram for LinialProgram<'_> {
    type State = LinialState;
    type Msg = u64;
    type Output = LinialOut;

    fn init(&self, ctx: &mut Ctx<'_>) -> LinialState {
        let v = ctx.index;
        let mut slot = vec![None; ctx.degree];
        for (i, p) in ports_of(self.g, v, &self.parents[v]).into_iter().enumerate() {
            slot[p] = Some(i);
        }
        let parent_colors = self.parents[v].iter().map(|&u| self.init[u]).collect();
        LinialState { color: self.init[v], slot, parent_colors, fallbacks: 0 }
    }

    fn step(&self, st: &mut LinialState, ctx: &mut Ctx<'_>, inbox: &[Incoming<u64, LinialOut>]) -> Action<u64, LinialOut> {
        for item in inbox {
            if let Incoming::Msg { port, msg } = item {
                if let Some(i) = st.slot[*port] {
                    st.parent_colors[i] = *msg;
                }
            }
        }
        let j = ctx.round as usize;
        if let Some(f) = self.schedule.get(j - 1) {
            let (x, fb) = f.escape(st.color, st.parent_colors.iter().copied());
            st.color = x;
            st.fallbacks += fb as u32;
        }
        if j >= self.schedule.len() {
            Action::Finish(LinialOut { color: st.color, fallbacks: st.fallbacks })
        } else {
            Action::broadcast(st.color)
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinialReport {
    pub coloring: ColorVector,
    /// Colors lie in `0..palette_bound`.
    pub palette_bound: u64,
    pub iterations: usize,
    pub fallbacks: usize,
    pub run: PartialRun<LinialOut>,
}

/// Arb-Linial from the ID coloring on `members`, with the given parents
/// (out-degree at most `a`). The schedule depends only on the largest ID.
pub fn arb_linial_full(
    g: &Graph,
    members: &[usize],
    parents: &[Vec<usize>],
    ids: &IdAssignment,
    a: u64,
    kind: FamilyKind,
) -> Result<LinialReport, EngineError> {
    check_out_degree(members, parents, a)?;
    let init: Vec<u64> = ids.as_slice().iter().map(|&i| i - 1).collect();
    let schedule = linial_schedule(ids.max_id(), a, kind);
    let program = LinialProgram { g, init: &init, parents, schedule: &schedule };
    let run = run_on(g, ids, &program, &flags(g.n(), members), &RunOptions::default())?;
    let mut colors = vec![0u64; g.n()];
    let mut fallbacks = 0;
    for &v in members {
        let o = run.outputs[v].as_ref().expect("member finished");
        colors[v] = o.color;
        fallbacks += o.fallbacks as usize;
    }
    Ok(LinialReport {
        coloring: ColorVector::plain(colors),
        palette_bound: schedule_palette(ids.max_id(), &schedule),
        iterations: schedule.len(),
        fallbacks,
        run,
    })
}

fn check_out_degree(members: &[usize], parents: &[Vec<usize>], bound: u64) -> Result<(), EngineError> {
    match members.iter().find(|&&v| parents[v].len() as u64 > bound) {
        Some(&v) => Err(EngineError::Contract(format!(
            "vertex {v} has {} parents, bound is {bound}",
            parents[v].len()
        ))),
        None => Ok(()),
    }
}

/// `phi mod p`.
pub fn defective_coloring_mod(proper: &[u64], p: u64) -> Vec<u64> {
    assert!(p >= 1, "modulus must be positive");
    proper.iter().map(|c| c % p).collect()
}

/// Largest number of same-colored neighbors over the vertices.
pub fn defect(g: &Graph, colors: &[u64]) -> usize {
    (0..g.n())
        .map(|v| g.neighbors(v).iter().filter(|&&u| colors[u] == colors[v]).count())
        .max()
        .unwrap_or(0)
}

/// Color lists, shared or per vertex.
#[derive(Clone, Copy)]
pub enum Lists<'a> {
    Uniform(&'a [u64]),
    PerVertex(&'a [Vec<u64>]),
}

impl<'a> Lists<'a> {
    pub fn get(&self, v: usize) -> &'a [u64] {
        match *self {
            Lists::Uniform(l) => l,
            Lists::PerVertex(ls) => &ls[v],
        }
    }
}

/// List coloring on the subgraph induced by `members`: Linial oriented toward
/// higher IDs, then a vertex takes the least free list color as soon as every
/// neighbor with a smaller Linial color has taken one.
pub struct ListColorProgram<'a> {
    pub g: &'a Graph,
    pub ids: &'a IdAssignment,
    pub members: &'a [bool],
    pub lists: Lists<'a>,
    pub schedule: &'a [Arc<CoverFreeFamily>],
}

impl ListColorProgram<'_> {
    /// Schedule for subgraphs of maximum degree at most `max_degree`.
    pub fn schedule_for(ids: &IdAssignment, max_degree: u64, kind: FamilyKind) -> Vec<Arc<CoverFreeFamily>> {
        linial_schedule(ids.max_id(), max_degree.max(1), kind)
    }
}

pub struct ListState {
    /// Member ports.
    sub: Vec<usize>,
    /// Position of each member port within `sub`.
    slot: Vec<Option<usize>>,
    linial: u64,
    fallbacks: u32,
    /// Linial color per member neighbor (current round's knowledge).
    nb_linial: Vec<u64>,
    done: Vec<bool>,
    used: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ListMsg {
    Linial(u64),
}

impl VertexProgram for ListColorProgram<'_> {
    type State = ListState;
    type Msg = ListMsg;
    type Output = u64;

    fn init(&self, ctx: &mut Ctx<'_>) -> ListState {
        let v = ctx.index;
        let nbrs = self.g.neighbors(v);
        let sub: Vec<usize> = (0..nbrs.len()).filter(|&p| self.members[nbrs[p]]).collect();
        let mut slot = vec![None; nbrs.len()];
        for (i, &p) in sub.iter().enumerate() {
            slot[p] = Some(i);
        }
        let nb_linial = sub.iter().map(|&p| self.ids.id(nbrs[p]) - 1).collect();
        ListState {
            done: vec![false; sub.len()],
            sub,
            slot,
            linial: ctx.id - 1,
            fallbacks: 0,
            nb_linial,
            used: Vec::new(),
        }
    }

    fn step(&self, st: &mut ListState, ctx: &mut Ctx<'_>, inbox: &[Incoming<ListMsg, u64>]) -> Action<ListMsg, u64> {
        let list = self.lists.get(ctx.index);
        if st.sub.is_empty() {
            return Action::Finish(*list.iter().min().expect("nonempty list"));
        }
        for item in inbox {
            match item {
                Incoming::Msg { port, msg: ListMsg::Linial(c) } => {
                    if let Some(i) = st.slot[*port] {
                        st.nb_linial[i] = *c;
                    }
                }
                Incoming::Final { port, output } => {
                    if let Some(i) = st.slot[*port] {
                        st.done[i] = true;
                        st.used.push(*output);
                    }
                }
            }
        }
        let j = ctx.round as usize;
        let stages = self.schedule.len();
        if j <= stages {
            let f = &self.schedule[j - 1];
            let own_id = ctx.id;
            let parents = (0..st.sub.len())
                .filter(|&i| self.ids.id(self.g.neighbors(ctx.index)[st.sub[i]]) > own_id)
                .map(|i| st.nb_linial[i]);
            let (x, fb) = f.escape(st.linial, parents.collect::<Vec<_>>());
            st.linial = x;
            st.fallbacks += fb as u32;
            return Action::broadcast(ListMsg::Linial(x));
        }
        let ready = (0..st.sub.len()).all(|i| st.done[i] || st.nb_linial[i] > st.linial);
        if !ready {
            return Action::idle();
        }
        let c = list
            .iter()
            .copied()
            .filter(|c| !st.used.contains(c))
            .min()
            .expect("list longer than member degree");
        Action::Finish(c)
    }
}

pub(crate) fn check_lists(g: &Graph, members: &[usize], member_flags: &[bool], lists: Lists<'_>) -> Result<u64, EngineError> {
    let mut max_deg = 0u64;
    for &v in members {
        let d = g.neighbors(v).iter().filter(|&&u| member_flags[u]).count();
        max_deg = max_deg.max(d as u64);
        let mut l = lists.get(v).to_vec();
        l.sort_unstable();
        l.dedup();
        if l.len() < d + 1 {
            return Err(EngineError::Contract(format!(
                "vertex {v} has list of {} colors but {d} neighbors",
                l.len()
            )));
        }
    }
    Ok(max_deg)
}

/// Proper coloring of `G(members)` with every vertex colored from its list.
pub fn deg_plus1_list_coloring(
    g: &Graph,
    members: &[usize],
    lists: &[Vec<u64>],
    ids: &IdAssignment,
) -> Result<(Vec<u64>, PartialRun<u64>), EngineError> {
    let member_flags = flags(g.n(), members);
    let max_deg = check_lists(g, members, &member_flags, Lists::PerVertex(lists))?;
    let schedule = ListColorProgram::schedule_for(ids, max_deg, FamilyKind::Best);
    let program = ListColorProgram { g, ids, members: &member_flags, lists: Lists::PerVertex(lists), schedule: &schedule };
    let run = run_on(g, ids, &program, &member_flags, &RunOptions::default())?;
    let colors = run.outputs.iter().map(|o| o.unwrap_or(0)).collect();
    Ok((colors, run))
}

/// A vertex waits until all its parents are colored, then takes the first
/// palette color none of them has. Sinks go first.
pub struct AcyclicProgram<'a> {
    pub g: &'a Graph,
    pub parents: &'a [Vec<usize>],
    pub palette: &'a [u64],
}

pub struct AcyclicState {
    slot: Vec<bool>,
    waiting: usize,
    used: Vec<u64>,
}

impl VertexProgram for AcyclicProgram<'_> {
    type State = AcyclicState;
    type Msg = ();
    type Output = u64;

    fn init(&self, ctx: &mut Ctx<'_>) -> AcyclicState {
        let mut slot = vec![false; ctx.degree];
        for p in ports_of(self.g, ctx.index, &self.parents[ctx.index]) {
            slot[p] = true;
        }
        AcyclicState { slot, waiting: self.parents[ctx.index].len(), used: Vec::new() }
    }

    fn step(&self, st: &mut AcyclicState, _ctx: &mut Ctx<'_>, inbox: &[Incoming<(), u64>]) -> Action<(), u64> {
        for item in inbox {
            if let Incoming::Final { port, output } = item {
                if st.slot[*port] {
                    st.waiting -= 1;
                    st.used.push(*output);
                }
            }
        }
        if st.waiting > 0 {
            return Action::idle();
        }
        let c = self.palette.iter().copied().find(|c| !st.used.contains(c)).expect("palette exceeds out-degree");
        Action::Finish(c)
    }
}

/// Greedy recoloring of `G(members)` along an acyclic orientation given by
/// `parents` (restricted to members).
pub fn acyclic_recolor(
    g: &Graph,
    members: &[usize],
    parents: &[Vec<usize>],
    palette: &[u64],
    ids: &IdAssignment,
) -> Result<(Vec<u64>, PartialRun<u64>), EngineError> {
    check_out_degree(members, parents, palette.len() as u64 - 1)?;
    let program = AcyclicProgram { g, parents, palette };
    let run = run_on(g, ids, &program, &flags(g.n(), members), &RunOptions::default())?;
    let colors = run.outputs.iter().map(|o| o.unwrap_or(0)).collect();
    Ok((colors, run))
}

/// Parents pointing toward the higher ID inside `members`.
pub fn orient_by_id(g: &Graph, members: &[usize], ids: &IdAssignment) -> Vec<Vec<usize>> {
    let f = flags(g.n(), members);
    let mut parents = vec![Vec::new(); g.n()];
    for &v in members {
        parents[v] = g.neighbors(v).iter().copied().filter(|&u| f[u] && ids.id(u) > ids.id(v)).collect();
    }
    parents
}
