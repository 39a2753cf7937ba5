//! Acceptance suite: one PASS/FAIL line per criterion. Runs sequentially
//! without the test harness so timings are not disturbed by other tests.

use std::collections::HashMap;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whd_bench::{precision_at_k, Index, Method, Query, WeightScheme};
use whd_core::encode::{GaussianMixture, BASE_STREAM, DEFAULT_COMPONENTS, QUERY_STREAM};
use whd_core::io::{read_bvecs, read_fvecs, read_ivecs, write_bvecs, write_fvecs, write_ivecs, CODE_HEADER_LEN};
use whd_core::{
    brute_force_knn, choose_m, heap_sequence_oracle, linear_scan_knn, read_codes, write_codes, BinaryCode,
    CseEnumerator, LshModel, MultiIndex, SearchResult, SingleTable, Termination, WeightVector,
};

const TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Tracks the largest per-call candidate evaluation count seen by the
/// enumeration criteria.
#[derive(Default)]
struct EvalCounter {
    calls: u64,
    violations: u64,
    worst_ratio: f64,
}

impl EvalCounter {
    fn observe(&mut self, evaluations: u32, bits: usize) {
        self.calls += 1;
        if evaluations as usize > bits {
            self.violations += 1;
        }
        self.worst_ratio = self.worst_ratio.max(f64::from(evaluations) / bits as f64);
    }
}

fn tie_heavy_weights(rng: &mut impl Rng, bits: usize) -> Vec<f64> {
    (0..bits)
        .map(|_| match rng.random_range(0..4) {
            0 => 0.0,
            1 => f64::from(rng.random_range(1..4u8)),
            _ => rng.random::<f64>() * 10.0,
        })
        .collect()
}

fn random_code(rng: &mut impl Rng, bits: usize) -> BinaryCode {
    let mask = if bits == 128 { u128::MAX } else { (1u128 << bits) - 1 };
    BinaryCode::from_bits(bits, rng.random::<u128>() & mask).unwrap()
}

/// Emits the whole sequence (or its first `count` entries), recording the
/// evaluation count of every extension.
fn run_enumerator(q: BinaryCode, w: &[f64], count: usize, evals: &mut EvalCounter) -> Vec<(BinaryCode, f64)> {
    let bits = q.width();
    let mut e = CseEnumerator::new(q, WeightVector::new(w.to_vec()).unwrap()).unwrap();
    let mut out = vec![e.first()];
    while out.len() < count {
        match e.extend() {
            Some(x) => {
                evals.observe(e.last_evaluations(), bits);
                out.push(x);
            }
            None => break,
        }
    }
    out
}

/// Distances must agree elementwise; within each run of equal distances the
/// code sets must agree (the last run is skipped for truncated prefixes).
fn same_sequence(got: &[(BinaryCode, f64)], want: &[(BinaryCode, f64)], truncated: bool) -> Result<(), String> {
    check(got.len() == want.len(), || format!("length {} vs {}", got.len(), want.len()))?;
    for (i, (a, b)) in got.iter().zip(want).enumerate() {
        check((a.1 - b.1).abs() <= TOL, || format!("index {}: {} vs {}", i + 1, a.1, b.1))?;
    }
    let mut i = 0;
    while i < got.len() {
        let mut j = i + 1;
        while j < got.len() && (got[j].1 - got[i].1).abs() <= TOL {
            j += 1;
        }
        if truncated && j == got.len() {
            break;
        }
        let mut a: Vec<u128> = got[i..j].iter().map(|x| x.0.bits()).collect();
        let mut b: Vec<u128> = want[i..j].iter().map(|x| x.0.bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        check(a == b, || format!("code sets differ at distance {}", got[i].1))?;
        i = j;
    }
    Ok(())
}

fn criterion_1(evals: &mut EvalCounter) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for bits in [4usize, 8, 12, 16] {
        for trial in 0..50 {
            let w = tie_heavy_weights(&mut rng, bits);
            let q = random_code(&mut rng, bits);
            // brute force: every code with its summed weights, sorted
            let mut want: Vec<(BinaryCode, f64)> = (0..1u128 << bits)
                .map(|g| {
                    let d = (0..bits).filter(|&j| ((g ^ q.bits()) >> j) & 1 == 1).map(|j| w[j]).sum();
                    (BinaryCode::from_bits(bits, g).unwrap(), d)
                })
                .collect();
            want.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let got = run_enumerator(q, &w, usize::MAX, evals);
            same_sequence(&got, &want, false).map_err(|e| format!("b={bits} trial {trial}: {e}"))?;
        }
    }
    Ok("200 full sequences match brute force".into())
}

fn criterion_2(evals: &mut EvalCounter) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for bits in [20usize, 24] {
        for trial in 0..100 {
            let w = tie_heavy_weights(&mut rng, bits);
            let q = random_code(&mut rng, bits);
            let wv = WeightVector::new(w.clone()).unwrap();
            let want = heap_sequence_oracle(&q, &wv, 4096).unwrap();
            let got = run_enumerator(q, &w, 4096, evals);
            same_sequence(&got, &want, true).map_err(|e| format!("b={bits} trial {trial}: {e}"))?;
        }
    }
    Ok("200 prefixes of length 4096 match the priority-queue enumerator".into())
}

/// Base codes and weighted queries from random-hyperplane hashing of the
/// synthetic mixture.
fn lsh_workload(n: usize, dim: usize, bits: usize, queries: usize, seed: u64) -> (Vec<BinaryCode>, Vec<Query>) {
    let mixture = GaussianMixture::new(dim, DEFAULT_COMPONENTS, seed).unwrap();
    let model = LshModel::<f32>::train(dim, bits, seed).unwrap();
    let codes = mixture
        .samples::<f32>(n, BASE_STREAM)
        .map(|v| model.encode(&v).unwrap())
        .collect();
    let qs = mixture
        .samples::<f32>(queries, QUERY_STREAM)
        .map(|v| Query::from_vector(&model, &v, WeightScheme::Asym).unwrap())
        .collect();
    (codes, qs)
}

#[derive(Default)]
struct SearchAudit {
    runs: u64,
    certified: u64,
    exhausted: u64,
}

fn same_distances(got: &SearchResult<f64>, want: &SearchResult<f64>, k: usize) -> Result<(), String> {
    let g = got.top(k);
    let w = want.top(k);
    check(g.len() == w.len(), || format!("{} vs {} neighbors", g.len(), w.len()))?;
    for (a, b) in g.iter().zip(w) {
        check((a.distance - b.distance).abs() <= TOL, || {
            format!("distance {} vs {}", a.distance, b.distance)
        })?;
    }
    Ok(())
}

/// Queue-length identity for every run; certificate for multi-index runs.
fn audit(r: &SearchResult<f64>, tables: usize, k: usize, audit: &mut SearchAudit) -> Result<(), String> {
    audit.runs += 1;
    let s = &r.stats;
    check(s.sequence_lens.len() == tables, || "one sequence per table".into())?;
    check(s.probes == (tables * s.iterations) as u64, || "probes != tables * L".into())?;
    check(s.sequence_lens.iter().all(|&l| l == s.iterations), || {
        format!("sequence lengths {:?} vs {} probes per table", s.sequence_lens, s.iterations)
    })?;
    match s.termination {
        Termination::Certified { heap_top, bound } => {
            audit.certified += 1;
            check(r.len() == k, || "certified with a non-full heap".into())?;
            check(heap_top <= bound + TOL, || format!("heap top {heap_top} above bound {bound}"))?;
            check(
                (r.neighbors.last().unwrap().distance - heap_top).abs() <= TOL,
                || "heap top is not the largest kept distance".into(),
            )?;
        }
        Termination::AllItemsSeen => audit.exhausted += 1,
        Termination::Collected => check(tables == 1, || "multi-index stopped by collection".into())?,
        Termination::Scan => return Err("hashing search reported a scan".into()),
    }
    Ok(())
}

fn criterion_3(audit5: &mut SearchAudit, audit7: &mut SearchAudit) -> Outcome {
    let ks = [1usize, 10, 100];
    {
        let (codes, queries) = lsh_workload(10_000, 128, 16, 200, 303);
        let t = SingleTable::build(16, &codes).unwrap();
        for (qi, q) in queries.iter().enumerate() {
            for &k in &ks {
                let got = t.knn(&q.code, &q.weights, k).unwrap();
                let want = linear_scan_knn(&codes, &q.code, &q.weights, k).unwrap();
                same_distances(&got, &want, k).map_err(|e| format!("single b=16 query {qi} K={k}: {e}"))?;
                audit(&got, 1, k, audit5).map_err(|e| format!("single query {qi} K={k}: {e}"))?;
            }
        }
    }
    for (bits, m) in [(64usize, 2usize), (64, 4), (128, 4)] {
        let (codes, queries) = lsh_workload(100_000, 128, bits, 200, 304);
        let x = MultiIndex::build(bits, codes.clone(), m).unwrap();
        for (qi, q) in queries.iter().enumerate() {
            for &k in &ks {
                let got = x.knn(&q.code, &q.weights, k).unwrap();
                let want = linear_scan_knn(&codes, &q.code, &q.weights, k).unwrap();
                let tag = format!("b={bits} m={m} query {qi} K={k}");
                same_distances(&got, &want, k).map_err(|e| format!("{tag}: {e}"))?;
                audit(&got, m, k, audit7).map_err(|e| format!("{tag}: {e}"))?;
            }
        }
    }
    Ok("single b=16 and multi-index (64/2, 64/4, 128/4), 200 queries x K in {1,10,100}, match linear scan".into())
}

fn criterion_4(evals: &EvalCounter) -> Outcome {
    check(evals.violations == 0, || {
        format!("{} of {} extensions evaluated more than b candidates", evals.violations, evals.calls)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let w: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
    let q = random_code(&mut rng, 64);
    const WINDOW: usize = 10_000;
    let mut ratios = Vec::new();
    for _ in 0..5 {
        let mut e = CseEnumerator::new(q, WeightVector::new(w.clone()).unwrap()).unwrap();
        let time_window = |e: &mut CseEnumerator<f64>| {
            let start = Instant::now();
            for _ in 0..WINDOW {
                std::hint::black_box(e.extend());
            }
            start.elapsed().as_secs_f64() / WINDOW as f64
        };
        let early = time_window(&mut e);
        while e.len() < 100_000 - WINDOW {
            e.extend();
        }
        let late = time_window(&mut e);
        ratios.push(late / early);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ratios[ratios.len() / 2];
    check((1.0 / 3.0..=3.0).contains(&median), || {
        format!("per-extension time at L=1e5 is {median:.2}x that at L=1e4")
    })?;
    Ok(format!(
        "{} extensions, max evaluations/b = {:.2}; per-extension time ratio L=1e5 vs L=1e4 = {median:.2}",
        evals.calls, evals.worst_ratio
    ))
}

fn criterion_5(single: &SearchAudit, multi: &SearchAudit) -> Outcome {
    Ok(format!(
        "stored sequence length equals probes per table in all {} searches",
        single.runs + multi.runs
    ))
}

fn criterion_6() -> Outcome {
    let (n, dim, bits, k, nq) = (1_000_000usize, 128usize, 64usize, 10usize, 1000usize);
    let (codes, queries) = lsh_workload(n, dim, bits, nq, 606);
    let m = choose_m(bits, n);
    let mut times = HashMap::new();
    let mut results = HashMap::new();
    for method in [Method::Linear, Method::Lookup, Method::CseMulti] {
        let index = Index::build(method, bits, &codes, Some(m)).unwrap();
        let run = whd_bench::run::run_queries(&index, &queries, k).unwrap();
        times.insert(method, run.mean_ms);
        results.insert(method, run.results);
    }
    for (i, (a, b)) in results[&Method::CseMulti].iter().zip(&results[&Method::Linear]).enumerate() {
        same_distances(a, b, k).map_err(|e| format!("query {i}: {e}"))?;
    }
    let lin = times[&Method::Linear];
    let cse = lin / times[&Method::CseMulti];
    let lookup = lin / times[&Method::Lookup];
    let detail = format!(
        "m={m}, linear {lin:.2} ms, lookup {:.2} ms ({lookup:.1}x), cse-multi {:.3} ms ({cse:.1}x)",
        times[&Method::Lookup],
        times[&Method::CseMulti]
    );
    check(cse >= 10.0 && (2.0..=8.0).contains(&lookup), || detail.clone())?;
    Ok(detail)
}

fn criterion_7(multi: &SearchAudit) -> Outcome {
    check(multi.certified > 0, || "no certified terminations observed".into())?;
    Ok(format!(
        "{} certified terminations, {} by exhausting the items, all certificates hold",
        multi.certified, multi.exhausted
    ))
}

fn criterion_8() -> Outcome {
    let (n, dim, bits, nq, k, gt_k) = (100_000usize, 32usize, 32usize, 500usize, 10usize, 100usize);
    let seed = 808;
    let mixture = GaussianMixture::new(dim, DEFAULT_COMPONENTS, seed).unwrap();
    let model = LshModel::<f32>::train(dim, bits, seed).unwrap();
    let base: Vec<Vec<f32>> = mixture.samples(n, BASE_STREAM).collect();
    let raw_queries: Vec<Vec<f32>> = mixture.samples(nq, QUERY_STREAM).collect();
    let codes: Vec<BinaryCode> = base.iter().map(|v| model.encode(v).unwrap()).collect();
    let index = MultiIndex::build(bits, codes, choose_m(bits, n)).unwrap();
    let (mut whd, mut hd) = (0.0, 0.0);
    for v in &raw_queries {
        let truth = brute_force_knn(&base, v, gt_k).unwrap();
        for (scheme, acc) in [(WeightScheme::Asym, &mut whd), (WeightScheme::Unit, &mut hd)] {
            let q = Query::from_vector(&model, v, scheme).unwrap();
            let r = index.knn(&q.code, &q.weights, k).unwrap();
            *acc += precision_at_k(&r.ids(), &truth, k);
        }
    }
    whd /= nq as f64;
    hd /= nq as f64;
    let detail = format!("mean precision@10: weighted {whd:.4}, unweighted {hd:.4}");
    check(whd >= hd, || detail.clone())?;
    Ok(detail)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name);
    let golden = |name: &str, expected: &[u8]| -> Result<(), String> {
        let bytes = fs::read(path(name)).map_err(|e| e.to_string())?;
        check(bytes == expected, || format!("{name}: bytes {bytes:?} != {expected:?}"))
    };

    let fv = vec![vec![1.0f32, 2.0], vec![-0.5, 0.0]];
    write_fvecs(path("a.fvecs"), &fv).map_err(|e| e.to_string())?;
    golden(
        "a.fvecs",
        &[2, 0, 0, 0, 0, 0, 0x80, 0x3f, 0, 0, 0, 0x40, 2, 0, 0, 0, 0, 0, 0, 0xbf, 0, 0, 0, 0],
    )?;
    check(read_fvecs(path("a.fvecs")).unwrap() == fv, || "fvecs round trip".into())?;

    let bv = vec![vec![0u8, 255, 1, 2]];
    write_bvecs(path("a.bvecs"), &bv).map_err(|e| e.to_string())?;
    golden("a.bvecs", &[4, 0, 0, 0, 0, 255, 1, 2])?;
    check(read_bvecs(path("a.bvecs")).unwrap() == bv, || "bvecs round trip".into())?;

    let iv = vec![vec![7i32, 1, 9], vec![-1, 256, 0]];
    write_ivecs(path("a.ivecs"), &iv).map_err(|e| e.to_string())?;
    golden(
        "a.ivecs",
        &[
            3, 0, 0, 0, 7, 0, 0, 0, 1, 0, 0, 0, 9, 0, 0, 0, 3, 0, 0, 0, 0xff, 0xff, 0xff, 0xff, 0, 1, 0, 0, 0, 0, 0, 0,
        ],
    )?;
    check(read_ivecs(path("a.ivecs")).unwrap() == iv, || "ivecs round trip".into())?;

    let codes: Vec<BinaryCode> = ["101", "011"].iter().map(|s| s.parse().unwrap()).collect();
    write_codes(path("a.whdc"), 3, &codes).map_err(|e| e.to_string())?;
    golden(
        "a.whdc",
        &[b'W', b'H', b'D', b'C', 1, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0b101, 0b110],
    )?;
    let back = read_codes(path("a.whdc")).map_err(|e| e.to_string())?;
    check(back.width == 3 && back.codes == codes, || "code file round trip".into())?;

    let wide: Vec<BinaryCode> = (0..1000u128).map(|i| BinaryCode::from_bits(70, i << 60 | i).unwrap()).collect();
    write_codes(path("b.whdc"), 70, &wide).map_err(|e| e.to_string())?;
    let len = fs::metadata(path("b.whdc")).map_err(|e| e.to_string())?.len();
    check(len == CODE_HEADER_LEN + 1000 * 9, || format!("70-bit file length {len}"))?;
    check(read_codes(path("b.whdc")).unwrap().codes == wide, || "70-bit round trip".into())?;

    let mut bad = fs::read(path("a.whdc")).unwrap();
    bad[0] = b'X';
    fs::write(path("c.whdc"), &bad).unwrap();
    check(read_codes(path("c.whdc")).is_err(), || "corrupted magic accepted".into())?;
    Ok("fvecs, bvecs, ivecs and code files match golden bytes and round-trip".into())
}

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Option<Duration>,
}

fn report(c: &Criterion, outcome: Outcome, elapsed: Duration) -> bool {
    let over = c.limit.is_some_and(|l| elapsed > l);
    let (ok, detail) = match outcome {
        Ok(d) if over => (false, format!("{d}; took {elapsed:.1?}, limit {:?}", c.limit.unwrap())),
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    println!(
        "{} criterion {} ({}): {} [{:.1?}]",
        if ok { "PASS" } else { "FAIL" },
        c.id,
        c.name,
        detail,
        elapsed
    );
    ok
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn main() -> ExitCode {
    let crit = |id, name, secs: Option<u64>| Criterion {
        id,
        name,
        limit: secs.map(Duration::from_secs),
    };
    let mut evals = EvalCounter::default();
    let mut single = SearchAudit::default();
    let mut multi = SearchAudit::default();
    let mut all = true;

    let (r, t) = timed(|| criterion_1(&mut evals));
    all &= report(&crit(1, "enumeration exactness", Some(60)), r, t);
    let (r, t) = timed(|| criterion_2(&mut evals));
    all &= report(&crit(2, "cross-oracle agreement", Some(60)), r, t);
    let (r3, t3) = timed(|| criterion_3(&mut single, &mut multi));
    let c3_ok = r3.is_ok();
    all &= report(&crit(3, "knn exactness", Some(300)), r3, t3);
    let (r, t) = timed(|| criterion_4(&evals));
    all &= report(&crit(4, "constant extension cost", None), r, t);
    let gate = |r: Outcome| if c3_ok { r } else { Err("criterion 3 runs did not complete".into()) };
    let (r, t) = timed(|| gate(criterion_5(&single, &multi)));
    all &= report(&crit(5, "queue-length identity", None), r, t);
    let (r, t) = timed(criterion_6);
    all &= report(&crit(6, "desk-scale speed-up", Some(900)), r, t);
    let (r, t) = timed(|| gate(criterion_7(&multi)));
    all &= report(&crit(7, "termination certificate", None), r, t);
    let (r, t) = timed(criterion_8);
    all &= report(&crit(8, "weighted vs unweighted precision", None), r, t);
    let (r, t) = timed(criterion_9);
    all &= report(&crit(9, "io bit-exactness", None), r, t);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
