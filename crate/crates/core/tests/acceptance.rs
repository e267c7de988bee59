//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails. Criterion 9 reruns 1-8 and
//! compares the JSON reports byte for byte.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use sequenceable::corpus::Corpus;
use sequenceable::fpseq::{graham_bound, sequence_mod_p};
use sequenceable::groups::{Element, Group, GroupSpec};
use sequenceable::productseq::{sequence_product, Layout};
use sequenceable::rectify::{find_dilation, freiman_verify, lev_bound};
use sequenceable::search::{backtrack_order, count_valid_orderings, sweep, Engine, SearchLimits};
use sequenceable::zseq::{pair_sequence, sequence_integers, split_signs, PairOrdering};
use sequenceable::{Method, Ordering};

struct Outcome {
    passed: bool,
    detail: String,
    report: Value,
}

fn outcome(passed: bool, detail: String, report: Value) -> Outcome {
    Outcome { passed, detail, report }
}

/// FNV-1a, for compact digests of large outputs inside the reports.
fn fnv1a(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn ints(o: &Ordering) -> Vec<i128> {
    o.elems().iter().map(|e| e.coords()[0]).collect()
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

const CORPUS_1: u64 = 1_000_000;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut corpus = Corpus::new(CORPUS_1);
    let (mut valid, mut split, mut two_sided) = (0, 0, 0);
    let mut digest = String::new();
    for _ in 0..10_000 {
        let set = corpus.integer_set(50, 1_000_000_000);
        let o = sequence_integers(&set).expect("sequence_integers");
        let xs = ints(&o);
        let report = o.analyze();
        valid += report.valid as u32;
        two_sided += report.two_sided as u32;
        let first_neg = xs.iter().position(|&x| x < 0).unwrap_or(xs.len());
        split += (xs.len() == set.len() && xs[first_neg..].iter().all(|&x| x < 0)) as u32;
        digest.push_str(&format!("{xs:?}\n"));
    }
    let elapsed = start.elapsed();
    let passed = valid == 10_000 && split == 10_000 && two_sided == 10_000 && within(elapsed, 10);
    outcome(
        passed,
        format!("valid {valid}/10000, positives-first {split}/10000, two-sided {two_sided}/10000, {elapsed:.2?} (< 10s)"),
        json!({"valid": valid, "positives_first": split, "two_sided": two_sided, "digest": fnv1a(digest.as_bytes())}),
    )
}

/// Quadratic prefix check, written independently of `PairOrdering::is_prefix_disjoint`.
fn prefix_disjoint(pair: &PairOrdering) -> bool {
    let prefixes = |xs: &[i128]| {
        let mut acc = 0;
        std::iter::once(0).chain(xs.iter().map(move |x| {
            acc += x;
            acc
        }))
        .collect::<Vec<i128>>()
    };
    let (q, w) = (prefixes(&pair.p_order), prefixes(&pair.n_order));
    let ends = (pair.p_order.len(), pair.n_order.len());
    q.iter().enumerate().all(|(i, qi)| {
        w.iter().enumerate().all(|(j, wj)| qi != wj || (i, j) == (0, 0) || (i, j) == ends)
    })
}

fn criterion_2() -> Outcome {
    let mut corpus = Corpus::new(CORPUS_1);
    let (mut ok, mut ok_lib) = (0, 0);
    for _ in 0..10_000 {
        let set = corpus.integer_set(50, 1_000_000_000);
        let s = split_signs(&set).expect("split");
        let pair = pair_sequence(&s.positives, &s.negatives).expect("pair");
        ok += prefix_disjoint(&pair) as u32;
        ok_lib += pair.is_prefix_disjoint() as u32;
    }
    outcome(
        ok == 10_000 && ok_lib == 10_000,
        format!("prefix-disjoint {ok}/10000 (library checker {ok_lib}/10000)"),
        json!({"prefix_disjoint": ok, "library_checker": ok_lib}),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut configs = Vec::new();
    let mut all_ok = true;
    let mut failures = Vec::new();
    for (i, p) in [101u64, 1009, 10007].into_iter().enumerate() {
        for ell in 2u64..=4 {
            let bound = lev_bound(p, ell).unwrap() as usize;
            let mut corpus = Corpus::new(3_000_000 + 10 * i as u64 + ell);
            let (mut found, mut structural, mut verified, mut verifiable) = (0, 0, 0, 0);
            let mut lambdas = Vec::new();
            for _ in 0..1000 {
                let size = rand::Rng::gen_range(corpus.rng(), 1..=bound);
                let mut set = vec![0];
                set.extend(corpus.residue_set(p, size - 1));
                match find_dilation(&set, p, ell).expect("find_dilation") {
                    Some(c) => {
                        found += 1;
                        lambdas.push(c.lambda());
                        let no_wrap = (ell as u128) * (c.width() as u128) < p as u128;
                        if no_wrap && c.apply_iso(0) == Ok(0) && c.check_structure().is_ok() {
                            structural += 1;
                        }
                        if set.len() <= 5 {
                            verifiable += 1;
                            verified += freiman_verify(&c, ell).expect("feasible") as u32;
                        }
                    }
                    None => failures.push(json!({"p": p, "ell": ell, "set": set})),
                }
            }
            let ok = found == 1000 && structural == found && verified == verifiable;
            all_ok &= ok;
            configs.push(json!({
                "p": p, "ell": ell, "lev_bound": bound, "found": found, "structural_ok": structural,
                "freiman_verified": verified, "freiman_checked": verifiable,
                "lambda_digest": fnv1a(format!("{lambdas:?}").as_bytes()),
            }));
        }
    }
    let elapsed = start.elapsed();
    let found_total: u64 = configs.iter().map(|c| c["found"].as_u64().unwrap()).sum();
    let mut detail = format!("{found_total}/9000 rectified across 9 configurations, {elapsed:.2?} (< 60s)");
    if !failures.is_empty() {
        detail.push_str(&format!("; no strict dilation for {}", Value::Array(failures.clone())));
    }
    outcome(all_ok && within(elapsed, 60), detail, json!({"configs": configs, "not_found": failures}))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut all_ok = true;
    for (i, p) in [1009u64, 10007, 100003].into_iter().enumerate() {
        let g = graham_bound(p).unwrap() as usize;
        let mut corpus = Corpus::new(4_000_000 + i as u64);
        let (mut rectified, mut valid) = (0, 0);
        let mut digest = String::new();
        for _ in 0..1000 {
            let size = rand::Rng::gen_range(corpus.rng(), 3..=g);
            let set = corpus.residue_set(p, size);
            let r = sequence_mod_p(&set, p).expect("sequence_mod_p");
            rectified += (r.method == Method::RectifiedPullback) as u32;
            valid += (r.verified && r.ordering.is_valid()) as u32;
            digest.push_str(&format!("{:?}\n", ints(&r.ordering)));
        }
        all_ok &= rectified == 1000 && valid == 1000;
        rows.push(json!({"p": p, "graham_bound": g, "rectified_pullback": rectified, "valid": valid,
                         "digest": fnv1a(digest.as_bytes())}));
    }
    let elapsed = start.elapsed();
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("p={} {}/1000", r["p"], r["rectified_pullback"]))
        .collect();
    outcome(
        all_ok && within(elapsed, 60),
        format!("rectified-pullback and valid: {}, {elapsed:.2?} (< 60s)", summary.join(", ")),
        json!({"primes": rows}),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut all_ok = true;
    for p in [2u64, 3, 5, 7, 11, 13] {
        let r = sweep(p, p as usize - 1, Engine::Backtracking, &SearchLimits::default()).expect("sweep");
        let expected = (1u64 << (p - 1)) - 1;
        all_ok &= r.counterexamples.is_empty() && r.subset_total() == expected;
        rows.push(serde_json::to_value(&r).unwrap());
    }
    let elapsed = start.elapsed();
    let total: u64 = rows.iter().flat_map(|r| r["per_size"].as_object().unwrap().values()).map(|s| s["subset_count"].as_u64().unwrap()).sum();
    let counter: usize = rows.iter().map(|r| r["counterexamples"].as_array().unwrap().len()).sum();
    outcome(
        all_ok && within(elapsed, 300),
        format!("{total} subsets swept over p in {{2,3,5,7,11,13}}, {counter} counterexamples, {elapsed:.2?} (< 300s)"),
        json!({"sweeps": rows}),
    )
}

fn criterion_6() -> Outcome {
    let groups = [
        Group::integers(),
        Group::prime_field(11).unwrap(),
        Group::cyclic(12).unwrap(),
        Group::lattice(2).unwrap(),
    ];
    let mut corpus = Corpus::new(6_000_000);
    let (mut agree, mut two_sided, mut with_blocks) = (0, 0, 0);
    for i in 0..10_000 {
        let g = &groups[i % groups.len()];
        let size = rand::Rng::gen_range(corpus.rng(), 0..=10);
        let elems = corpus.set_in(g, size, 4);
        let r = Ordering::new(g.clone(), elems).unwrap().analyze();
        agree += (r.two_sided == r.zero_blocks.is_empty()) as u32;
        two_sided += r.two_sided as u32;
        with_blocks += !r.zero_blocks.is_empty() as u32;
    }
    outcome(
        agree == 10_000,
        format!("two_sided <=> no zero blocks on {agree}/10000 ({two_sided} two-sided, {with_blocks} with zero blocks)"),
        json!({"agree": agree, "two_sided": two_sided, "with_zero_blocks": with_blocks}),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let z2 = Group::new(GroupSpec::lattice(2)).unwrap();
    let points: Vec<Element> = (-2..=2)
        .flat_map(|x| (-2..=2).map(move |y| [x, y]))
        .filter(|c| c != &[0, 0])
        .map(|c| z2.canonicalize(&c).unwrap())
        .collect();
    let mut layouts: BTreeMap<String, u64> = BTreeMap::new();
    let (mut sets, mut valid) = (0u64, 0u64);
    let mut subset = Vec::new();
    fn walk(
        points: &[Element],
        from: usize,
        subset: &mut Vec<Element>,
        z2: &Group,
        f: &mut dyn FnMut(&[Element], &Group),
    ) {
        if !subset.is_empty() {
            f(subset, z2);
        }
        if subset.len() == 5 {
            return;
        }
        for i in from..points.len() {
            subset.push(points[i].clone());
            walk(points, i + 1, subset, z2, f);
            subset.pop();
        }
    }
    walk(&points, 0, &mut subset, &z2, &mut |set, g| {
        sets += 1;
        let r = sequence_product(set, g).expect("sequence_product");
        let ok = r.verified && r.ordering.is_valid() && r.ordering.len() == set.len();
        valid += ok as u64;
        let key = match (r.method, r.layout) {
            (_, Some(l)) => l.to_string(),
            (m, None) => m.as_str().to_string(),
        };
        *layouts.entry(key).or_default() += 1;
    });
    let special = z2.parse_set("(0,1);(1,0);(-1,0)").unwrap();
    let r = sequence_product(&special, &z2).expect("special set");
    let special_ok = r.ordering.is_valid() && r.layout.is_some() && r.layout != Some(Layout::Pmn);
    let special_layout = r.layout.map(|l| l.to_string()).unwrap_or_else(|| r.method.as_str().to_string());
    let elapsed = start.elapsed();
    outcome(
        valid == sets && sets == 55_454 && special_ok && within(elapsed, 120),
        format!(
            "{valid}/{sets} subsets ordered validly, layouts {layouts:?}; {{(0,1),(1,0),(-1,0)}} via {special_layout}, {elapsed:.2?} (< 120s)"
        ),
        json!({"subsets": sets, "valid": valid, "layouts": layouts, "special_layout": special_layout}),
    )
}

fn criterion_8() -> Outcome {
    let f7 = Group::prime_field(7).unwrap();
    let (mut subsets, mut agree, mut pipeline_ok) = (0, 0, 0);
    let mut counts = Vec::new();
    for mask in 1u32..64 {
        let residues: Vec<u64> = (1..7).filter(|a| mask >> (a - 1) & 1 == 1).collect();
        let elems: Vec<Element> = residues.iter().map(|&a| f7.canonicalize(&[a as i128]).unwrap()).collect();
        let found = backtrack_order(&elems, &f7).expect("backtrack");
        let count = count_valid_orderings(&elems, &f7).expect("count");
        subsets += 1;
        agree += (found.is_some() == (count > 0)) as u32;
        counts.push(count);
        let r = sequence_mod_p(&residues, 7).expect("pipeline");
        let recheck = Ordering::new(f7.clone(), r.ordering.elems().to_vec()).map(|o| o.is_valid()).unwrap_or(false);
        let distinct: HashSet<_> = r.ordering.elems().iter().collect();
        pipeline_ok += (recheck && distinct.len() == residues.len()) as u32;
    }
    outcome(
        subsets == 63 && agree == 63 && pipeline_ok == 63,
        format!("oracle agreement {agree}/63, pipeline verified {pipeline_ok}/63"),
        json!({"subsets": subsets, "agree": agree, "pipeline_verified": pipeline_ok, "counts": counts}),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    ("integer construction on 10,000 seeded sets", criterion_1),
    ("pair prefix-disjointness on the same corpus", criterion_2),
    ("rectification certificates under the Lev bound", criterion_3),
    ("F_p pipeline never falls back in the guarantee regime", criterion_4),
    ("exhaustive sweep of F_p for p <= 13", criterion_5),
    ("two-sided <=> no zero-sum proper block", criterion_6),
    ("product sequencer on all small subsets of Z^2", criterion_7),
    ("oracle agreement on F_7", criterion_8),
];

fn main() {
    let mut failed = 0;
    let mut first_run = Vec::new();
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let o = run();
        println!("criterion {}: {} - {name}: {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.passed as u32;
        first_run.push(serde_json::to_string(&o.report).unwrap());
    }

    let mut differing = Vec::new();
    for (i, (_, run)) in CRITERIA.iter().enumerate() {
        if serde_json::to_string(&run().report).unwrap() != first_run[i] {
            differing.push(i + 1);
        }
    }
    let det_ok = differing.is_empty();
    println!(
        "criterion 9: {} - determinism: {}",
        if det_ok { "PASS" } else { "FAIL" },
        if det_ok { "reports of criteria 1-8 byte-identical on rerun".to_string() } else { format!("criteria {differing:?} differ") }
    );
    failed += !det_ok as u32;

    if let Some(dir) = option_env!("CARGO_TARGET_TMPDIR") {
        let combined = format!("[{}]\n", first_run.join(",\n"));
        let _ = std::fs::write(std::path::Path::new(dir).join("acceptance-report.json"), combined);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
