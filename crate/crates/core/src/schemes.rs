//! The segmentation scheme and the colorings built from it.

use std::sync::Arc;

use num_rational::Ratio;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::engine::{EngineError, ExecutionResult, Timeline};
use crate::graph::{Graph, IdAssignment};
use crate::linial::{
    family, linial_schedule, schedule_palette, AcyclicProgram, ColorVector, CoverFreeFamily, FamilyKind,
    LinialProgram, ListColorProgram, Lists,
};
use crate::partition::{orientation_length_among, partition_phase, PartitionParams};

/// `log*` in base 2: zero for `x <= 1`.
pub fn log_star(n: f64) -> u32 {
    let mut x = n;
    let mut k = 0;
    while x > 1.0 {
        x = x.log2();
        k += 1;
    }
    k
}

/// `log2` applied `i` times; negative infinity once the argument drops to zero.
pub fn iterated_log(n: f64, i: u32) -> f64 {
    let mut x = n;
    for _ in 0..i {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        x = x.log2();
    }
    x
}

/// Largest `r` with `log^(r-1) n >= log* n`.
pub fn rho(n: u64) -> u32 {
    let ls = log_star(n as f64) as f64;
    let mut r = 1;
    while iterated_log(n as f64, r) >= ls {
        r += 1;
    }
    r
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SchemeParams {
    pub k: u32,
    /// `2 / epsilon`.
    pub c: Ratio<u64>,
    pub alpha: u64,
    /// Declared length bound of algorithm B's orientation, if any.
    pub lambda: Option<u64>,
}

/// Partition rounds per segment, listed for segments `k, k-1, ..., 2`.
/// Segment 1 takes whatever is left.
pub fn segment_lengths(n: usize, k: u32, c: Ratio<u64>) -> Vec<u64> {
    let cf = *c.numer() as f64 / *c.denom() as f64;
    (2..=k)
        .rev()
        .map(|i| {
            let l = iterated_log(n as f64, i);
            if l > 0.0 { ((cf * l).ceil() as u64).max(1) } else { 1 }
        })
        .collect()
}

/// Vertices are split into segments; a vertex in segment `i` has its color in
/// `[(i-1) alpha, i alpha)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentedColoring {
    pub segment: Vec<u32>,
    pub coloring: ColorVector,
}

impl Serialize for SegmentedColoring {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Entry<'a>(u32, &'a [u64]);
        impl Serialize for Entry<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut st = s.serialize_struct("Entry", 2)?;
                st.serialize_field("segment", &self.0)?;
                st.serialize_field("color", &self.1)?;
                st.end()
            }
        }
        let mut m = s.serialize_map(Some(self.segment.len()))?;
        for v in 0..self.segment.len() {
            m.serialize_entry(&v.to_string(), &Entry(self.segment[v], &self.coloring.colors[v]))?;
        }
        m.end()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentReport {
    pub segment: u32,
    pub size: usize,
    /// Partition rounds `(first, last)` of the segment window.
    pub window: (u64, u64),
    /// Vertices that had not joined an H-set when the window opened.
    pub entering: usize,
    /// Global round after which algorithm C started.
    pub c_offset: u64,
    pub orientation_length: u64,
    pub palette_used: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeReport {
    pub params: SchemeParams,
    pub big_a: u64,
    pub segments: Vec<SegmentReport>,
    /// Longest orientation produced by algorithm B inside one H-set.
    pub max_hset_length: u64,
    pub fallbacks: usize,
}

/// Algorithms A, B and C plugged into [`segmentation_run`].
pub trait SegmentAlgorithms {
    /// Runs A on a freshly formed H-set, starting after global round
    /// `offset`. Returns B's orientation key per member (the head of an
    /// intra-set edge is the endpoint with the larger `(key, id)`) and the
    /// global round in which A ended.
    fn alg_a(&self, tl: &mut Timeline<'_>, hset: &[usize], offset: u64) -> Result<(Vec<(usize, u64)>, u64), EngineError>;

    /// Colors `members` with colors in `0..alpha` given the union orientation.
    /// Returns colors indexed by global vertex, the last round and the number
    /// of fallbacks taken.
    fn alg_c(
        &self,
        tl: &mut Timeline<'_>,
        members: &[usize],
        parents: &[Vec<usize>],
        offset: u64,
    ) -> Result<(Vec<u64>, u64, usize), EngineError>;

    fn alpha(&self) -> u64;

    fn lambda(&self) -> Option<u64>;
}

fn check_k(n: usize, k: u32) -> Result<(), EngineError> {
    let top = rho(n as u64).max(2);
    if k < 2 || k > top {
        return Err(EngineError::Contract(format!("k = {k} outside [2, {top}]")));
    }
    Ok(())
}

pub fn segmentation_run<S: SegmentAlgorithms>(
    g: &Graph,
    ids: &IdAssignment,
    pparams: &PartitionParams,
    k: u32,
    algs: &S,
) -> Result<(SegmentedColoring, ExecutionResult<u64>, SchemeReport), EngineError> {
    check_k(g.n(), k)?;
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..g.n()).collect();
    let out = segmentation_in(&mut tl, &all, pparams, k, algs, 0)?;
    let coloring = SegmentedColoring { segment: out.segment, coloring: ColorVector::plain(out.colors.clone()) };
    Ok((coloring, tl.into_result(out.colors), out.report))
}

/// Result of [`segmentation_in`], indexed by global vertex.
pub struct SegmentationOutcome {
    pub colors: Vec<u64>,
    pub segment: Vec<u32>,
    pub report: SchemeReport,
    pub last: u64,
}

/// The scheme on `G(members)`, starting after global round `offset`.
/// `k = 1` gives a single segment covering the whole partition.
pub fn segmentation_in<S: SegmentAlgorithms>(
    tl: &mut Timeline<'_>,
    members: &[usize],
    pparams: &PartitionParams,
    k: u32,
    algs: &S,
    offset: u64,
) -> Result<SegmentationOutcome, EngineError> {
    let g = tl.g;
    let ids = tl.ids;
    let n = g.n();
    let big_a = pparams.big_a;
    let c = Ratio::from_integer(2) / pparams.epsilon;
    let part = partition_phase(tl, members, big_a, None, offset, false)?;
    // Indices are relative to `offset`.
    let mut index = vec![0u64; n];
    for &v in members {
        index[v] = part.end[v] - offset;
    }
    let ell = members.iter().map(|&v| index[v]).max().unwrap_or(0);

    // Windows of partition rounds, segment k first; segment 1 lasts until
    // the partition is exhausted.
    let lengths = segment_lengths(n, k, c);
    let mut windows: Vec<(u32, u64, u64)> = Vec::new();
    let mut start = 1u64;
    for (pos, &len) in lengths.iter().enumerate() {
        windows.push((k - pos as u32, start, start + len - 1));
        start += len;
    }
    windows.push((1, start, start.max(ell)));
    let segment_of = |i: u64| windows.iter().find(|w| i >= w.1 && i <= w.2).map(|w| w.0).expect("covered");
    let mut segment = vec![0u32; n];
    for &v in members {
        segment[v] = segment_of(index[v]);
    }

    let mut hsets: Vec<Vec<usize>> = vec![Vec::new(); ell as usize + 1];
    for &v in members {
        hsets[index[v] as usize].push(v);
    }
    let mut key = vec![0u64; n];
    let mut a_end = vec![0u64; ell as usize + 1];
    let mut max_hset_length = 0;
    for j in 1..=ell {
        let h = &hsets[j as usize];
        if h.is_empty() {
            continue;
        }
        let (keys, last) = algs.alg_a(tl, h, offset + j)?;
        a_end[j as usize] = last;
        for (v, kv) in keys {
            key[v] = kv;
        }
        let parents = orient(g, ids, h, &index, &key);
        if let Some(v) = h.iter().copied().find(|&v| parents[v].len() as u64 > big_a) {
            return Err(EngineError::Contract(format!("H-set {j}: vertex {v} has out-degree {}", parents[v].len())));
        }
        let len = orientation_length_among(h, &parents)
            .ok_or_else(|| EngineError::Contract(format!("H-set {j}: orientation has a cycle")))?;
        if algs.lambda().is_some_and(|l| len > l) {
            return Err(EngineError::Contract(format!("H-set {j}: orientation length {len} exceeds bound")));
        }
        max_hset_length = max_hset_length.max(len);
    }

    let alpha = algs.alpha();
    let mut colors = vec![0u64; n];
    let mut segments = Vec::new();
    let mut fallbacks = 0;
    let mut last = part.last;
    for &(s, lo, hi) in &windows {
        let seg_members: Vec<usize> = members.iter().copied().filter(|&v| segment[v] == s).collect();
        let entering = members.iter().filter(|&&v| index[v] >= lo).count();
        if seg_members.is_empty() {
            segments.push(SegmentReport {
                segment: s,
                size: 0,
                window: (lo, hi),
                entering,
                c_offset: offset + hi,
                orientation_length: 0,
                palette_used: 0,
            });
            continue;
        }
        let a_done = (lo..=hi.min(ell)).map(|j| a_end[j as usize]).max().unwrap_or(0);
        let c_offset = (offset + hi).max(a_done);
        let parents = orient(g, ids, &seg_members, &index, &key);
        let length = orientation_length_among(&seg_members, &parents)
            .ok_or_else(|| EngineError::Contract(format!("segment {s}: union orientation has a cycle")))?;
        let (local, c_last, fb) = algs.alg_c(tl, &seg_members, &parents, c_offset)?;
        last = last.max(c_last);
        fallbacks += fb;
        let mut used: Vec<u64> = seg_members.iter().map(|&v| local[v]).collect();
        used.sort_unstable();
        used.dedup();
        for &v in &seg_members {
            debug_assert!(local[v] < alpha);
            colors[v] = (s as u64 - 1) * alpha + local[v];
        }
        segments.push(SegmentReport {
            segment: s,
            size: seg_members.len(),
            window: (lo, hi),
            entering,
            c_offset,
            orientation_length: length,
            palette_used: used.len(),
        });
    }

    let report = SchemeReport {
        params: SchemeParams { k, c, alpha, lambda: algs.lambda() },
        big_a,
        segments,
        max_hset_length,
        fallbacks,
    };
    Ok(SegmentationOutcome { colors, segment, report, last })
}

/// Orientation of `G(members)`: toward the later H-set, then the larger key,
/// then the larger ID.
fn orient(g: &Graph, ids: &IdAssignment, members: &[usize], index: &[u64], key: &[u64]) -> Vec<Vec<usize>> {
    let mut inside = vec![false; g.n()];
    for &v in members {
        inside[v] = true;
    }
    let rank = |v: usize| (index[v], key[v], ids.id(v));
    let mut parents = vec![Vec::new(); g.n()];
    for &v in members {
        parents[v] = g.neighbors(v).iter().copied().filter(|&u| inside[u] && rank(u) > rank(v)).collect();
    }
    parents
}

/// A does nothing, B orients by ID, C is Arb-Linial.
pub struct Ka2Algorithms {
    schedule: Vec<Arc<CoverFreeFamily>>,
    init: Vec<u64>,
    alpha: u64,
}

impl Ka2Algorithms {
    pub fn new(ids: &IdAssignment, big_a: u64, kind: FamilyKind) -> Self {
        let schedule = linial_schedule(ids.max_id(), big_a, kind);
        let alpha = schedule_palette(ids.max_id(), &schedule);
        Ka2Algorithms { schedule, init: ids.as_slice().iter().map(|&i| i - 1).collect(), alpha }
    }
}

impl SegmentAlgorithms for Ka2Algorithms {
    fn alg_a(&self, tl: &mut Timeline<'_>, hset: &[usize], offset: u64) -> Result<(Vec<(usize, u64)>, u64), EngineError> {
        Ok((hset.iter().map(|&v| (v, tl.ids.id(v))).collect(), offset))
    }

    fn alg_c(
        &self,
        tl: &mut Timeline<'_>,
        members: &[usize],
        parents: &[Vec<usize>],
        offset: u64,
    ) -> Result<(Vec<u64>, u64, usize), EngineError> {
        let program = LinialProgram { g: tl.g, init: &self.init, parents, schedule: &self.schedule };
        let phase = tl.run(&program, members, offset, 1)?;
        let mut colors = vec![0u64; tl.g.n()];
        let mut fb = 0;
        for &v in members {
            colors[v] = phase.output(v).color;
            fb += phase.output(v).fallbacks as usize;
        }
        Ok((colors, phase.last, fb))
    }

    fn alpha(&self) -> u64 {
        self.alpha
    }

    fn lambda(&self) -> Option<u64> {
        None
    }
}

/// A is list coloring from `{0..A}`, B orients toward the larger A-color, C
/// recolors greedily along the orientation from `A + 1` colors.
pub struct KaAlgorithms {
    big_a: u64,
    schedule: Vec<Arc<CoverFreeFamily>>,
    palette: Vec<u64>,
}

impl KaAlgorithms {
    pub fn new(ids: &IdAssignment, big_a: u64) -> Self {
        let palette: Vec<u64> = (0..=big_a).collect();
        KaAlgorithms {
            big_a,
            schedule: ListColorProgram::schedule_for(ids, big_a, FamilyKind::Best),
            palette,
        }
    }
}

impl SegmentAlgorithms for KaAlgorithms {
    fn alg_a(&self, tl: &mut Timeline<'_>, hset: &[usize], offset: u64) -> Result<(Vec<(usize, u64)>, u64), EngineError> {
        let mut flags = vec![false; tl.g.n()];
        for &v in hset {
            flags[v] = true;
        }
        let program = ListColorProgram { g: tl.g, ids: tl.ids, members: &flags, lists: Lists::Uniform(&self.palette), schedule: &self.schedule };
        let phase = tl.run(&program, hset, offset, 1)?;
        Ok((hset.iter().map(|&v| (v, *phase.output(v))).collect(), phase.last))
    }

    fn alg_c(
        &self,
        tl: &mut Timeline<'_>,
        members: &[usize],
        parents: &[Vec<usize>],
        offset: u64,
    ) -> Result<(Vec<u64>, u64, usize), EngineError> {
        let program = AcyclicProgram { g: tl.g, parents, palette: &self.palette };
        let phase = tl.run(&program, members, offset, 1)?;
        let mut colors = vec![0u64; tl.g.n()];
        for &v in members {
            colors[v] = *phase.output(v);
        }
        Ok((colors, phase.last, 0))
    }

    fn alpha(&self) -> u64 {
        self.big_a + 1
    }

    fn lambda(&self) -> Option<u64> {
        Some(self.big_a)
    }
}

pub fn color_ka2(
    g: &Graph,
    ids: &IdAssignment,
    pparams: &PartitionParams,
    k: u32,
) -> Result<(SegmentedColoring, ExecutionResult<u64>, SchemeReport), EngineError> {
    segmentation_run(g, ids, pparams, k, &Ka2Algorithms::new(ids, pparams.big_a, FamilyKind::Best))
}

pub fn color_ka(
    g: &Graph,
    ids: &IdAssignment,
    pparams: &PartitionParams,
    k: u32,
) -> Result<(SegmentedColoring, ExecutionResult<u64>, SchemeReport), EngineError> {
    segmentation_run(g, ids, pparams, k, &KaAlgorithms::new(ids, pparams.big_a))
}

#[derive(Clone, Debug, Serialize)]
pub struct A2LognReport {
    pub family: FamilyKind,
    /// Universe size of the family; every color is below it.
    pub m: u64,
    pub fallbacks: usize,
}

/// Partition, and one Arb-Linial round from the ID coloring on every H-set
/// right after it forms.
pub fn color_a2logn(
    g: &Graph,
    ids: &IdAssignment,
    pparams: &PartitionParams,
    kind: FamilyKind,
) -> Result<(ColorVector, ExecutionResult<u64>, A2LognReport), EngineError> {
    let n = g.n();
    let mut tl = Timeline::new(g, ids, 0);
    let all: Vec<usize> = (0..n).collect();
    let part = partition_phase(&mut tl, &all, pparams.big_a, None, 0, false)?;
    let index: Vec<u64> = (0..n).map(|v| part.output(v).index.expect("no budget")).collect();
    let ell = index.iter().copied().max().unwrap_or(0);
    let fam = family(kind, ids.max_id(), pparams.big_a);
    let schedule = vec![fam.clone()];
    let init: Vec<u64> = ids.as_slice().iter().map(|&i| i - 1).collect();
    let parents = orient(g, ids, &all, &index, &vec![0; n]);
    let program = LinialProgram { g, init: &init, parents: &parents, schedule: &schedule };
    let mut colors = vec![0u64; n];
    let mut fallbacks = 0;
    for j in 1..=ell {
        let h: Vec<usize> = (0..n).filter(|&v| index[v] == j).collect();
        let phase = tl.run(&program, &h, j, 1)?;
        for &v in &h {
            colors[v] = phase.output(v).color;
            fallbacks += phase.output(v).fallbacks as usize;
        }
    }
    let report = A2LognReport { family: fam.kind, m: fam.m, fallbacks };
    Ok((ColorVector::plain(colors.clone()), tl.into_result(colors), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_forest_union, gen_ring};

    fn eps2(a: u64) -> PartitionParams {
        PartitionParams::with_default_epsilon(a)
    }

    #[test]
    fn iterated_logs() {
        assert_eq!(log_star(16.0), 3);
        assert_eq!(log_star(2.0), 1);
        assert_eq!(log_star(1.0), 0);
        assert_eq!(log_star(65536.0), 4);
        assert_eq!(iterated_log(65536.0, 2), 4.0);
        assert_eq!(iterated_log(7.0, 0), 7.0);
        assert_eq!(rho(65536), 3);
        assert_eq!(rho(256), 2);
        assert_eq!(rho(1024), 2);
        assert_eq!(rho(3), 1);
    }

    #[test]
    fn segment_lengths_clamp() {
        assert_eq!(segment_lengths(2, 2, Ratio::from_integer(1)), vec![1]);
        assert_eq!(segment_lengths(65536, 3, Ratio::from_integer(1)), vec![2, 4]);
        assert_eq!(segment_lengths(256, 2, Ratio::from_integer(2)), vec![6]);
    }

    #[test]
    fn ka2_ring() {
        let g = gen_ring(64).unwrap();
        let ids = IdAssignment::identity(64);
        let (sc, res, rep) = color_ka2(&g, &ids, &eps2(2), 2).unwrap();
        assert!(sc.coloring.is_proper(&g));
        for v in 0..64 {
            let c = sc.coloring.colors[v][0];
            let s = sc.segment[v] as u64;
            assert!(c >= (s - 1) * rep.params.alpha && c < s * rep.params.alpha);
        }
        assert_eq!(res.outputs.len(), 64);
        assert_eq!(rep.fallbacks, 0);
    }

    #[test]
    fn ka2_k2_graph() {
        let g = Graph::complete(2);
        let (sc, _, _) = color_ka2(&g, &IdAssignment::identity(2), &eps2(1), 2).unwrap();
        assert_eq!(sc.segment, vec![2, 2]);
        assert!(sc.coloring.is_proper(&g));
    }

    #[test]
    fn single_vertex_segment() {
        let g = Graph::empty(1);
        let (sc, _, rep) = color_ka2(&g, &IdAssignment::identity(1), &eps2(1), 2).unwrap();
        assert_eq!(sc.segment, vec![2]);
        assert_eq!(sc.coloring.colors[0], vec![rep.params.alpha]);
    }

    #[test]
    fn ka_forest() {
        let g = gen_forest_union(256, 1, 5).unwrap();
        let ids = IdAssignment::identity(256);
        let (sc, _, rep) = color_ka(&g, &ids, &eps2(1), 2).unwrap();
        assert!(sc.coloring.is_proper(&g));
        assert!(sc.coloring.palette_size() <= 10);
        assert!(rep.max_hset_length <= 4);
    }

    #[test]
    fn ka_triangle() {
        let g = Graph::complete(3);
        let (sc, _, _) = color_ka(&g, &IdAssignment::identity(3), &eps2(2), 2).unwrap();
        assert!(sc.coloring.is_proper(&g));
        assert_eq!(sc.segment, vec![2; 3]);
    }

    #[test]
    fn bad_k_rejected() {
        let g = Graph::path(4);
        assert!(color_ka2(&g, &IdAssignment::identity(4), &eps2(1), 1).is_err());
        assert!(color_ka2(&g, &IdAssignment::identity(4), &eps2(1), 5).is_err());
    }

    #[test]
    fn a2logn_ring_rounds() {
        let g = gen_ring(12).unwrap();
        let ids = IdAssignment::identity(12);
        let (cv, res, _) = color_a2logn(&g, &ids, &eps2(2), FamilyKind::Best).unwrap();
        assert!(cv.is_proper(&g));
        assert!(res.ledger.r.iter().all(|&r| r == 2));
    }

    #[test]
    fn a2logn_forest_greedy_palette() {
        let g = gen_forest_union(128, 1, 9).unwrap();
        let ids = IdAssignment::identity(128);
        let (cv, _, rep) = color_a2logn(&g, &ids, &eps2(1), FamilyKind::Greedy).unwrap();
        assert!(cv.is_proper(&g));
        assert_eq!(rep.m, 560);
        assert!(cv.heads().iter().all(|&c| c < 560));
        assert_eq!(rep.fallbacks, 0);
    }

    #[test]
    fn a2logn_single_vertex() {
        let (_, res, _) = color_a2logn(&Graph::empty(1), &IdAssignment::identity(1), &eps2(1), FamilyKind::Best).unwrap();
        assert_eq!(res.ledger.r, vec![2]);
    }

    #[test]
    fn segmented_json() {
        let g = Graph::complete(2);
        let (sc, _, _) = color_ka(&g, &IdAssignment::identity(2), &eps2(1), 2).unwrap();
        let v = serde_json::to_value(&sc).unwrap();
        assert_eq!(v["1"]["segment"], 2);
        assert!(v["0"]["color"].is_array());
    }
}
