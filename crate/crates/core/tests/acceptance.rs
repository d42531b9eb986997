//! One PASS/FAIL line per acceptance criterion. Tolerances are the constants
//! below; nothing is tuned per run.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vavg::arbdefective::{one_plus_eta_arb_col, EtaParams};
use vavg::extension::{delta_plus1_coloring, edge_coloring_2d1, maximal_matching, mis, Extended};
use vavg::graph::{exact_arboricity, gen_forest_union, gen_random_graph, gen_ring, max_degree, Graph, IdAssignment};
use vavg::harness::{extension_solution, verify_solution, SolutionData};
use vavg::linial::FamilyKind;
use vavg::partition::{
    decay_bound_holds, parallelized_forest_decomposition, procedure_partition, verify_forest_decomposition,
    verify_h_partition, PartitionParams,
};
use vavg::randomized::{rand_a_loglogn, rand_delta_plus1, termination_counts, termination_frequency_check};
use vavg::schemes::{color_a2logn, color_ka, color_ka2, rho};

const CORPUS_SIZES: [usize; 4] = [1 << 8, 1 << 10, 1 << 12, 1 << 14];
const CORPUS_ARBORICITY: [usize; 3] = [1, 2, 4];
const CORPUS_SEEDS: u64 = 10;
const PARTITION_TIME_LIMIT: Duration = Duration::from_secs(60);
const A2LOGN_AVG_LIMIT: u64 = 5;
const A2LOGN_GREEDY_FACTOR: u64 = 5;
const KA2_GROWTH_LIMIT: f64 = 3.0;
const RAND_DELTA_AVG_LIMIT: f64 = 8.0;
const RAND_DELTA_P: f64 = 0.25;
const RAND_DELTA_MIN_ACTIVE: u64 = 1000;
const RAND_LOGLOG_AVG_LIMIT: f64 = 10.0;
const RANDOM_SEEDS: u64 = 20;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn corpus() -> impl Iterator<Item = (usize, usize, u64, Graph)> {
    CORPUS_SIZES.into_iter().flat_map(|n| {
        CORPUS_ARBORICITY.into_iter().flat_map(move |a| {
            (0..CORPUS_SEEDS).map(move |s| (n, a, s, gen_forest_union(n, a, s).expect("corpus graph")))
        })
    })
}

fn eps2() -> Ratio<u64> {
    Ratio::from_integer(2)
}

fn partition_corpus() -> (Outcome, Outcome) {
    let start = Instant::now();
    let bound = Ratio::from_integer(3);
    let (mut worst_avg, mut avg_ok, mut decay_ok, mut runs) = (Ratio::from_integer(0), true, true, 0);
    for (n, a, _, g) in corpus() {
        let params = PartitionParams::new(a as u64, eps2()).unwrap();
        let (_, res) = procedure_partition(&g, &IdAssignment::identity(n), &params).unwrap();
        worst_avg = worst_avg.max(res.metrics.avg);
        avg_ok &= res.metrics.avg <= bound;
        decay_ok &= decay_bound_holds(&res.metrics.decay, n as u64, eps2());
        runs += 1;
    }
    let elapsed = start.elapsed();
    (
        outcome(
            avg_ok && elapsed < PARTITION_TIME_LIMIT,
            format!("{runs} graphs, max avg {worst_avg} <= 3, {:.1}s", elapsed.as_secs_f64()),
        ),
        outcome(decay_ok, format!("{runs} graphs, n_i <= (1/2)^(i-1) n")),
    )
}

fn criterion3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut small, mut bad) = (0, Vec::new());
    for i in 0..1000u64 {
        let n = if i % 4 == 0 { rng.random_range(2..=14) } else { 1usize << rng.random_range(1..=12) };
        let n = if i % 4 == 0 { n } else { rng.random_range(n / 2 + 1..=n).max(2) };
        let a = rng.random_range(1..=4usize);
        let g = gen_forest_union(n, a, i).unwrap();
        let ids = IdAssignment::random_permutation(n, i);
        let params = PartitionParams::new(a as u64, eps2()).unwrap();
        let (fd, hp, _) = parallelized_forest_decomposition(&g, &ids, &params).unwrap();
        let mut ok = verify_h_partition(&g, &hp, &params).is_empty() && verify_forest_decomposition(&g, &fd, &params).is_valid();
        if n <= 14 {
            small += 1;
            ok &= fd.num_labels() <= 4 * a && exact_arboricity(&g).unwrap() <= 4 * a;
        }
        if !ok {
            bad.push(i);
        }
    }
    outcome(bad.is_empty(), format!("1000 instances ({small} with n <= 14), failures {bad:?}"))
}

fn criterion4() -> Outcome {
    let (mut proper, mut max_avg, mut runs) = (true, Ratio::from_integer(0), 0);
    for (n, a, _, g) in corpus() {
        let params = PartitionParams::new(a as u64, eps2()).unwrap();
        let (cv, res, _) = color_a2logn(&g, &IdAssignment::identity(n), &params, FamilyKind::Best).unwrap();
        proper &= cv.is_proper(&g);
        max_avg = max_avg.max(res.metrics.avg);
        runs += 1;
    }
    let mut palette_ok = true;
    let mut palette_detail = String::new();
    for n in [1usize << 8, 1 << 10] {
        for a in CORPUS_ARBORICITY {
            let g = gen_forest_union(n, a, 4).unwrap();
            let params = PartitionParams::new(a as u64, eps2()).unwrap();
            let (cv, res, _) = color_a2logn(&g, &IdAssignment::identity(n), &params, FamilyKind::Greedy).unwrap();
            let limit = A2LOGN_GREEDY_FACTOR * (params.big_a * params.big_a * (n as f64).log2().ceil() as u64);
            proper &= cv.is_proper(&g);
            max_avg = max_avg.max(res.metrics.avg);
            palette_ok &= cv.palette_size() as u64 <= limit;
            palette_detail += &format!(" n={n},a={a}:{}/{limit}", cv.palette_size());
        }
    }
    let avg_ok = max_avg <= Ratio::from_integer(A2LOGN_AVG_LIMIT);
    outcome(
        proper && palette_ok && avg_ok,
        format!("{runs} corpus graphs proper={proper}, max avg {max_avg}, greedy palettes{palette_detail}"),
    )
}

fn criterion5() -> Outcome {
    let mut ok = true;
    let mut k3_runs = 0;
    // rho(n) first reaches 3 at n = 2^16
    let large = CORPUS_ARBORICITY.into_iter().map(|a| (1usize << 16, a, 0u64, gen_forest_union(1 << 16, a, 0).unwrap()));
    for (n, a, s, g) in corpus().filter(|x| x.2 < 3).chain(large) {
        let params = PartitionParams::new(a as u64, eps2()).unwrap();
        let ids = IdAssignment::random_permutation(n, s);
        for k in [2u32, 3] {
            if k > rho(n as u64).max(2) {
                continue;
            }
            k3_runs += (k == 3) as usize;
            for ka in [false, true] {
                let (sc, _, rep) = if ka { color_ka(&g, &ids, &params, k) } else { color_ka2(&g, &ids, &params, k) }.unwrap();
                let alpha = rep.params.alpha;
                ok &= sc.coloring.is_proper(&g);
                ok &= (0..n).all(|v| {
                    let seg = sc.segment[v] as u64;
                    let c = sc.coloring.colors[v][0];
                    (1..=k as u64).contains(&seg) && c >= (seg - 1) * alpha && c < seg * alpha
                });
                if ka {
                    ok &= alpha == params.big_a + 1 && sc.coloring.palette_size() as u64 <= k as u64 * (params.big_a + 1);
                }
            }
        }
    }
    let mean_avg = |n: usize| {
        let runs: Vec<f64> = (0..5)
            .map(|s| {
                let g = gen_forest_union(n, 2, s).unwrap();
                let params = PartitionParams::new(2, eps2()).unwrap();
                color_ka2(&g, &IdAssignment::identity(n), &params, 2).unwrap().1.metrics.avg_f64()
            })
            .collect();
        runs.iter().sum::<f64>() / runs.len() as f64
    };
    let (lo, hi) = (mean_avg(1 << 8), mean_avg(1 << 16));
    let ratio = hi / lo;
    outcome(
        ok && k3_runs > 0 && ratio <= KA2_GROWTH_LIMIT,
        format!("segments and palettes ok={ok} ({k3_runs} k=3 graphs); avg 2^8 {lo:.3}, 2^16 {hi:.3}, ratio {ratio:.3}"),
    )
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = Vec::new();
    let mut max_depth = 0;
    for i in 0..200u64 {
        let a = rng.random_range(1..=16u64);
        let n = rng.random_range(16..=1024usize);
        let g = gen_forest_union(n, a as usize, i).unwrap();
        let ids = IdAssignment::random_permutation(n, i);
        let (cv, _, rep) = one_plus_eta_arb_col(&g, &ids, a, EtaParams::new(8).unwrap()).unwrap();
        // ceil(log_8 a) + 1
        let mut bound = 1;
        while 8u64.pow(bound - 1) < a {
            bound += 1;
        }
        max_depth = max_depth.max(rep.depth);
        if !(cv.is_proper(&g) && rep.depth <= bound && rep.all_levels_valid()) {
            bad.push(i);
        }
    }
    outcome(bad.is_empty(), format!("200 instances, max depth {max_depth}, failures {bad:?}"))
}

fn random_instance(rng: &mut ChaCha8Rng, i: u64) -> (Graph, u64) {
    let n = rng.random_range(2..=300usize);
    if i.is_multiple_of(2) {
        let a = rng.random_range(1..=4usize);
        (gen_forest_union(n, a, i).unwrap(), a as u64)
    } else {
        let m = rng.random_range(0..=(2 * n).min(n * (n - 1) / 2));
        let g = gen_random_graph(n, m, i).unwrap();
        // the degeneracy bounds the arboricity
        let a = degeneracy(&g).max(1) as u64;
        (g, a)
    }
}

fn degeneracy(g: &Graph) -> usize {
    let mut deg: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; g.n()];
    let mut best = 0;
    for _ in 0..g.n() {
        let v = (0..g.n()).filter(|&v| !removed[v]).min_by_key(|&v| deg[v]).unwrap();
        best = best.max(deg[v]);
        removed[v] = true;
        for &u in g.neighbors(v) {
            if !removed[u] {
                deg[u] -= 1;
            }
        }
    }
    best
}

fn criterion7() -> Outcome {
    type Run = fn(&Graph, &IdAssignment, &PartitionParams) -> Result<Extended, vavg::engine::EngineError>;
    let kinds: [(&str, Run); 4] =
        [("delta+1", delta_plus1_coloring), ("mis", mis), ("edge", edge_coloring_2d1), ("matching", maximal_matching)];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    for (name, f) in kinds {
        for i in 0..500u64 {
            let (g, a) = random_instance(&mut rng, i);
            let ids = IdAssignment::random_permutation(g.n(), i);
            let params = PartitionParams::new(a, eps2()).unwrap();
            let (sol, _, rep) = f(&g, &ids, &params).unwrap();
            let delta = max_degree(&g) as u64;
            let data = match extension_solution(&g, &sol) {
                SolutionData::VertexColoring { colors, .. } => SolutionData::VertexColoring { colors, max_color: Some(delta + 1) },
                SolutionData::EdgeColoring { colors, .. } => {
                    SolutionData::EdgeColoring { colors, max_color: Some((2 * delta).saturating_sub(1).max(1)) }
                }
                other => other,
            };
            let verdict = verify_solution(&g, &data);
            if !(verdict.valid && rep.prefix_valid && rep.prefix_stable) {
                failures.push(format!("{name}#{i}:{:?}", verdict.failures));
            }
        }
    }
    outcome(failures.is_empty(), format!("4 x 500 instances, failures {failures:?}"))
}

fn criterion8() -> Outcome {
    let mut proper = true;
    let mut avgs = Vec::new();
    let mut counts = Vec::new();
    for seed in 0..RANDOM_SEEDS {
        let g = gen_random_graph(10_000, 50_000, seed).unwrap();
        let (cv, res) = rand_delta_plus1(&g, &IdAssignment::identity(g.n()), seed).unwrap();
        let top = max_degree(&g) as u64 + 1;
        proper &= cv.is_proper(&g) && cv.colors.iter().all(|c| (1..=top).contains(&c[0]));
        avgs.push(res.metrics.avg_f64());
        counts.push(termination_counts(&res.ledger));
    }
    let mean = avgs.iter().sum::<f64>() / avgs.len() as f64;
    let rows = termination_frequency_check(&counts, RAND_DELTA_P, RAND_DELTA_MIN_ACTIVE);
    let freq_ok = !rows.is_empty() && rows.iter().all(|r| r.ok);
    let min_freq = rows.iter().map(|r| r.frequency).fold(f64::INFINITY, f64::min);
    outcome(
        proper && mean <= RAND_DELTA_AVG_LIMIT && freq_ok,
        format!("proper={proper}, mean avg {mean:.3}, {} pooled rounds, min termination frequency {min_freq:.3}", rows.len()),
    )
}

fn criterion9() -> Outcome {
    let (mut ok, mut total, mut runs, mut max_mean) = (true, 0.0, 0, 0.0f64);
    for n in CORPUS_SIZES {
        for a in CORPUS_ARBORICITY {
            let mut sum = 0.0;
            for seed in 0..RANDOM_SEEDS {
                let g = gen_forest_union(n, a, seed).unwrap();
                let params = PartitionParams::new(a as u64, eps2()).unwrap();
                let (cv, res, rep) = rand_a_loglogn(&g, &IdAssignment::identity(n), &params, seed).unwrap();
                ok &= cv.is_proper(&g) && cv.palette_size() as u64 <= (params.big_a + 1) * (rep.t + 1);
                sum += res.metrics.avg_f64();
                runs += 1;
            }
            let mean = sum / RANDOM_SEEDS as f64;
            max_mean = max_mean.max(mean);
            total += sum;
        }
    }
    outcome(
        ok && max_mean <= RAND_LOGLOG_AVG_LIMIT,
        format!("{runs} runs, proper and in palette={ok}, overall mean avg {:.3}, worst per-graph mean {max_mean:.3}", total / runs as f64),
    )
}

fn criterion10() -> Outcome {
    let mut checks = vec![
        ("path", exact_arboricity(&Graph::path(10)).unwrap(), 1),
        ("star", exact_arboricity(&Graph::star(9)).unwrap(), 1),
        ("tree", exact_arboricity(&gen_forest_union(14, 1, 10).unwrap()).unwrap(), 1),
        ("C6", exact_arboricity(&gen_ring(6).unwrap()).unwrap(), 2),
        ("K4", exact_arboricity(&Graph::complete(4)).unwrap(), 2),
        ("K5", exact_arboricity(&Graph::complete(5)).unwrap(), 3),
    ];
    let hand_ok = checks.iter().all(|c| c.1 == c.2);
    let mut promise_ok = true;
    for n in 3..=14 {
        promise_ok &= exact_arboricity(&gen_ring(n).unwrap()).unwrap() <= 2;
        for a in 1..=4 {
            for seed in 0..10 {
                promise_ok &= exact_arboricity(&gen_forest_union(n, a, seed).unwrap()).unwrap() <= a;
            }
        }
    }
    checks.retain(|c| c.1 != c.2);
    outcome(hand_ok && promise_ok, format!("hand mismatches {checks:?}, generator promises hold={promise_ok}"))
}

fn report(i: u32, name: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = check();
    println!("{} criterion {i}: {name}: {} [{:.1}s]", if o.ok { "PASS" } else { "FAIL" }, o.detail, start.elapsed().as_secs_f64());
    o.ok
}

fn main() -> ExitCode {
    let (c1, c2) = partition_corpus();
    let mut all = report(1, "partition average <= 3", || c1);
    all &= report(2, "partition decay bound", || c2);
    all &= report(3, "H-partition and forest decomposition validity", criterion3);
    all &= report(4, "O(a^2 log n) coloring", criterion4);
    all &= report(5, "k-segment schemes", criterion5);
    all &= report(6, "one-plus-eta coloring", criterion6);
    all &= report(7, "extension instantiations", criterion7);
    all &= report(8, "randomized delta+1", criterion8);
    all &= report(9, "randomized O(a log log n)", criterion9);
    all &= report(10, "exact arboricity oracle", criterion10);
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
