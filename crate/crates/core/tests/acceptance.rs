//! Acceptance criteria, run sequentially so timing checks are not disturbed
//! by other tests. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fvs::corpus::{Corpus, QrelSet, TokenizerConfig};
use fvs::eval::{
    average_precision, evaluate, precision_at_k, r_precision, Diagnostics, EvalOptions,
};
use fvs::expansion::{candidate_terms, expanded_search, ExpansionConfig, ExpansionParams};
use fvs::index::Index;
use fvs::objective::parse_objective;
use fvs::retrieval::{fvs_rerank, tfidf_search, Query, RankedDoc, RankedList};
use fvs::spectral::{
    compute_spectral, cosine_sim, dot, reconstruct, SpectralVector, TermPositions,
};
use fvs::synth::{
    generate, presets, DocGroup, Placement, Plant, SplitMix64, SynthCorpus, SynthSpec,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn build(corpus: &SynthCorpus) -> (Corpus, Index) {
    let cfg = TokenizerConfig::default();
    let c = Corpus::from_documents(&corpus.documents, &cfg).expect("tokenize");
    let idx = Index::build(c.streams(), 3, cfg.fingerprint()).expect("index");
    (c, idx)
}

fn term_query(term: &str) -> Query {
    Query::new([(term, 1.0)]).expect("query")
}

/// Trapezoid rule over `[0, L]` of the product of two reconstructions.
fn overlap_quadrature(a: &SpectralVector, b: &SpectralVector, panels: usize) -> f64 {
    let len = a.length();
    let h = len / panels as f64;
    let f = |x: f64| reconstruct(a, x).unwrap() * reconstruct(b, x).unwrap();
    let mut acc = 0.5 * (f(0.0) + f(len));
    for i in 1..panels {
        acc += f(i as f64 * h);
    }
    acc * h
}

fn random_positions(rng: &mut SplitMix64, len: u32) -> TermPositions {
    let max_tf = (len / 5).max(1);
    let tf = 1 + rng.below(u64::from(max_tf)) as u32;
    let mut pool: Vec<u32> = (1..=len).collect();
    let mut picked = Vec::new();
    for _ in 0..tf {
        let i = rng.below(pool.len() as u64) as usize;
        picked.push(pool.swap_remove(i));
    }
    picked.sort_unstable();
    TermPositions::new(picked, len).unwrap()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xAC1);
    let mut worst = 0.0f64;
    let cases = 120;
    for case in 0..cases {
        let len = 10 + rng.below(491) as u32;
        let n = 1 + rng.below(16) as usize;
        let a = compute_spectral(&random_positions(&mut rng, len), n);
        let b = compute_spectral(&random_positions(&mut rng, len), n);
        let d = dot(&a, &b);
        let q = overlap_quadrature(&a, &b, 10_000);
        // Relative to the product of norms when the overlap itself is ~0.
        let scale = d.abs().max(q.abs()).max(1e-9 * a.norm() * b.norm());
        let rel = (d - q).abs() / scale;
        worst = worst.max(rel);
        ensure(rel <= 1e-4, || {
            format!("case {case}: L={len} n={n} dot={d} quad={q}")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{cases} cases, worst rel err {worst:.2e}, {elapsed:.2?}"
    ))
}

fn ac2() -> Outcome {
    let spec = SynthSpec {
        groups: vec![DocGroup {
            fraction: 0.5,
            topic: None,
            plants: vec![Plant::new("anchor", Placement::Uniform, 6)],
        }],
        ..SynthSpec::new(2, 1000)
    };
    let (corpus, index) = build(&generate(&spec).unwrap());
    let mut checked = 0usize;
    for (d, stream) in corpus.streams().iter().enumerate() {
        let len = f64::from(stream.len());
        let truth = stream.term_positions();
        let mut seen = 0;
        for (t, c) in index.doc_terms(d as u32) {
            let tf = truth[index.term(t)].len() as u32;
            let expect = f64::from(tf) / len.sqrt();
            ensure((c[0] - expect).abs() <= 1e-12, || {
                format!(
                    "{} / {}: a0={} expected {expect}",
                    stream.docno,
                    index.term(t),
                    c[0]
                )
            })?;
            ensure(index.tf(d as u32, c) == tf, || {
                format!("tf round-trip failed in {}", stream.docno)
            })?;
            seen += 1;
            checked += 1;
        }
        ensure(seen == truth.len(), || {
            format!("{} misses postings", stream.docno)
        })?;
    }
    Ok(format!(
        "{checked} postings over {} docs",
        index.doc_count()
    ))
}

fn ac3() -> Outcome {
    let full = parse_objective("1|1").unwrap();
    let mut cases = 0;
    for len in [1u32, 2, 7, 50, 333, 1000] {
        for n in [1usize, 3, 8, 16, 32] {
            let sv = compute_spectral(&TermPositions::full(len).unwrap(), n);
            let l = f64::from(len);
            ensure((sv.a0() - l.sqrt()).abs() < 1e-9, || {
                format!("L={len} n={n}: a0={}", sv.a0())
            })?;
            let resid = sv.coeffs()[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            ensure(resid < 1e-9, || {
                format!("L={len} n={n}: residual {resid:e}")
            })?;
            let cos = cosine_sim(&sv, &full.spectral(l, n).unwrap());
            ensure((cos - 1.0).abs() < 1e-9, || {
                format!("L={len} n={n}: cosine {cos}")
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (L, n) pairs"))
}

fn inversions(ranked: &RankedList, upper: &dyn Fn(&str) -> bool) -> usize {
    let mut lower_seen = 0;
    let mut inv = 0;
    for e in ranked.entries() {
        if upper(&e.docno) {
            inv += lower_seen;
        } else {
            lower_seen += 1;
        }
    }
    inv
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let synth = generate(&presets::region_pair(4)).unwrap();
    let (_, index) = build(&synth);
    let head: std::collections::BTreeSet<&str> = synth.group_members(0).collect();
    let q = term_query("target");
    let cands = tfidf_search(&index, &q, 1000).unwrap();
    ensure(cands.len() == 200, || format!("{} candidates", cands.len()))?;
    let by_head = fvs_rerank(&index, &q, &parse_objective("1|3").unwrap(), &cands, 1000).unwrap();
    let by_tail = fvs_rerank(&index, &q, &parse_objective("3|3").unwrap(), &cands, 1000).unwrap();
    let inv_head = inversions(&by_head, &|d| head.contains(d));
    let inv_tail = inversions(&by_tail, &|d| !head.contains(d));
    let elapsed = start.elapsed();
    ensure(inv_head == 0 && inv_tail == 0, || {
        format!("inversions 1|3: {inv_head}, 3|3: {inv_tail}")
    })?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("0 inversions both ways, {elapsed:.2?}"))
}

struct ObjectiveRuns {
    baseline: Option<(f64, f64)>,
    head: Option<(f64, f64)>,
    tail: Option<(f64, f64)>,
}

fn objective_runs(seed: u64) -> ObjectiveRuns {
    let synth = generate(&presets::objective_benchmark(seed)).unwrap();
    let (corpus, index) = build(&synth);
    let cfg = TokenizerConfig::default();
    let queries: BTreeMap<u32, Query> = synth
        .topics
        .iter()
        .map(|t| (t.id, Query::parse(&t.title, &cfg).unwrap()))
        .collect();
    let head = parse_objective("1|3").unwrap();
    let tail = parse_objective("3|3").unwrap();
    let mut runs = vec![
        ("baseline".to_string(), BTreeMap::new()),
        ("head".to_string(), BTreeMap::new()),
        ("tail".to_string(), BTreeMap::new()),
    ];
    for (&topic, q) in &queries {
        let base = tfidf_search(&index, q, 1000).unwrap();
        runs[1]
            .1
            .insert(topic, fvs_rerank(&index, q, &head, &base, 1000).unwrap());
        runs[2]
            .1
            .insert(topic, fvs_rerank(&index, q, &tail, &base, 1000).unwrap());
        runs[0].1.insert(topic, base);
    }
    let options = EvalOptions {
        objective: Some(head),
        ..EvalOptions::default()
    };
    let diag = Diagnostics {
        corpus: &corpus,
        queries: &queries,
    };
    let report = evaluate(&runs, &synth.qrels, Some(&diag), &options).unwrap();
    let pick = |i: usize| {
        let s = &report.summaries[i];
        s.mean_skewness.zip(s.mean_fitting_rate)
    };
    ObjectiveRuns {
        baseline: pick(0),
        head: pick(1),
        tail: pick(2),
    }
}

fn ac5(runs: &ObjectiveRuns) -> Outcome {
    let (Some((b, _)), Some((h, _)), Some((t, _))) = (runs.baseline, runs.head, runs.tail) else {
        return Err("skewness undefined".into());
    };
    let detail = format!("baseline {b:+.3}, 1|3 {h:+.3}, 3|3 {t:+.3}");
    ensure(h > 0.3 && t < -0.3 && b.abs() <= 0.2, || detail.clone())?;
    Ok(detail)
}

fn ac6(runs: &ObjectiveRuns) -> Outcome {
    let (Some((_, b)), Some((_, h))) = (runs.baseline, runs.head) else {
        return Err("fitting rate undefined".into());
    };
    let detail = format!("baseline {b:.3}, 1|3 re-ranked {h:.3}");
    ensure(h >= 0.60 && (b - 1.0 / 3.0).abs() <= 0.05, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn ac7() -> Outcome {
    let seeds = 20u64;
    let (mut in_top3, mut alpha_sum, mut beta_sum) = (0, 0.0, 0.0);
    for seed in 0..seeds {
        let synth = generate(&presets::colocation(seed)).unwrap();
        let (_, index) = build(&synth);
        let q = term_query("query");
        let top = tfidf_search(&index, &q, 1000).unwrap();
        let cfg = ExpansionConfig::default();
        let best = candidate_terms(&index, &q, &top, 10, 40, &cfg).unwrap();
        if best.position("alpha").is_some_and(|p| p < 3) {
            in_top3 += 1;
        }
        let all = candidate_terms(&index, &q, &top, 10, index.vocabulary_size(), &cfg).unwrap();
        alpha_sum += all.score("alpha").unwrap_or(0.0);
        beta_sum += all.score("beta").unwrap_or(0.0);
    }
    let share = f64::from(in_top3) / seeds as f64;
    let (alpha, beta) = (alpha_sum / seeds as f64, beta_sum / seeds as f64);
    let detail =
        format!("alpha top-3 in {in_top3}/{seeds} seeds, mean sim alpha {alpha:.4} beta {beta:.4}");
    ensure(share >= 0.95 && alpha > 0.0 && alpha >= 5.0 * beta, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn ac8() -> Outcome {
    let synth = generate(&presets::planted_topics(8)).unwrap();
    let (_, index) = build(&synth);
    let cfg = TokenizerConfig::default();
    let params = ExpansionParams::default();
    let (mut base, mut expanded) = (0.0, 0.0);
    for t in &synth.topics {
        let q = Query::parse(&t.title, &cfg).unwrap();
        let b = tfidf_search(&index, &q, 1000).unwrap();
        let e = expanded_search(&index, &q, &params, 1000).unwrap().ranked;
        base += precision_at_k(&b, &synth.qrels, t.id, 10).unwrap();
        expanded += precision_at_k(&e, &synth.qrels, t.id, 10).unwrap();
    }
    let n = synth.topics.len() as f64;
    let (base, expanded) = (base / n, expanded / n);
    let uplift = (expanded - base) / base;
    let detail = format!(
        "P@10 baseline {base:.3}, expanded {expanded:.3} ({:+.1}%)",
        100.0 * uplift
    );
    ensure(base > 0.0 && uplift >= 0.10, || detail.clone())?;
    Ok(detail)
}

fn min_time(reps: usize, mut f: impl FnMut()) -> Duration {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn ac9() -> Outcome {
    // Coefficient computation: O(tf * n).
    let len = 20_000u32;
    let positions = TermPositions::new((1..=len).step_by(5).collect(), len).unwrap();
    let coeff_time = |n: usize| {
        min_time(15, || {
            std::hint::black_box(compute_spectral(std::hint::black_box(&positions), n));
        })
    };
    let (t8, t16) = (coeff_time(8), coeff_time(16));
    let coeff_ratio = t16.as_secs_f64() / t8.as_secs_f64();
    ensure((1.5..=2.5).contains(&coeff_ratio), || {
        format!("coefficient time n=8 {t8:?}, n=16 {t16:?}, ratio {coeff_ratio:.2}")
    })?;

    // Candidate generation: linear in the number of feedback documents.
    let spec = SynthSpec {
        min_len: 400,
        max_len: 400,
        vocab_size: 20_000,
        skew: 1.0,
        groups: vec![DocGroup {
            fraction: 1.0,
            topic: None,
            plants: vec![Plant::new("probe", Placement::Uniform, 4)],
        }],
        ..SynthSpec::new(9, 400)
    };
    let (_, index) = build(&generate(&spec).unwrap());
    let q = term_query("probe");
    let top = tfidf_search(&index, &q, 1000).unwrap();
    let cfg = ExpansionConfig::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let cand_time = |r: usize| {
        pool.install(|| {
            min_time(9, || {
                std::hint::black_box(candidate_terms(&index, &q, &top, r, 40, &cfg).unwrap());
            })
        })
    };
    let (t100, t200) = (cand_time(100), cand_time(200));
    let cand_ratio = t200.as_secs_f64() / t100.as_secs_f64();
    ensure((1.5..=2.5).contains(&cand_ratio), || {
        format!("candidate time r=100 {t100:?}, r=200 {t200:?}, ratio {cand_ratio:.2}")
    })?;

    // Indexing 10k documents.
    let docs = generate(&SynthSpec::new(10, 10_000)).unwrap().documents;
    let start = Instant::now();
    let cfg = TokenizerConfig::default();
    let corpus = Corpus::from_documents(&docs, &cfg).unwrap();
    let index = Index::build(corpus.streams(), 3, cfg.fingerprint()).unwrap();
    let index_time = start.elapsed();
    ensure(index.doc_count() == 10_000, || "lost documents".into())?;
    ensure(index_time < Duration::from_secs(60), || {
        format!("indexing took {index_time:?}")
    })?;
    Ok(format!(
        "coeff ratio {coeff_ratio:.2}, candidate ratio {cand_ratio:.2}, 10k docs indexed in {index_time:.2?}"
    ))
}

fn brute_precision(ranked: &[String], rel: &dyn Fn(&str) -> bool, k: usize) -> f64 {
    let mut hits = 0;
    for i in 0..k {
        if i < ranked.len() && rel(&ranked[i]) {
            hits += 1;
        }
    }
    hits as f64 / k as f64
}

fn ac10() -> Outcome {
    // Persistence.
    let synth = generate(&presets::planted_topics(10)).unwrap();
    let (_, index) = build(&synth);
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.fvsi"), dir.path().join("b.fvsi"));
    index.save(&p1).unwrap();
    Index::load(&p1).unwrap().save(&p2).unwrap();
    let (b1, b2) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    ensure(b1 == b2, || "save-load-save bytes differ".into())?;

    // Metrics against brute force.
    let mut rng = SplitMix64::new(0xAC10);
    let trials = 300;
    for trial in 0..trials {
        let pool = 5 + rng.below(20) as usize;
        let mut qrels = QrelSet::default();
        let mut relevant = Vec::new();
        for d in 0..pool {
            let grade = rng.below(3) as u32;
            qrels.insert(1, format!("d{d}"), grade).unwrap();
            if grade > 0 {
                relevant.push(format!("d{d}"));
            }
        }
        let mut docs: Vec<String> = (0..pool + 5).map(|d| format!("d{d}")).collect();
        for i in (1..docs.len()).rev() {
            docs.swap(i, rng.below(i as u64 + 1) as usize);
        }
        docs.truncate(1 + rng.below(docs.len() as u64) as usize);
        let n = docs.len();
        let ranked = RankedList::from_unsorted(
            docs.iter()
                .enumerate()
                .map(|(i, d)| RankedDoc {
                    docno: d.clone(),
                    score: (n - i) as f64,
                    baseline: 0.0,
                })
                .collect(),
        );
        let is_rel = |d: &str| relevant.iter().any(|r| r == d);
        let r = relevant.len();
        for k in 1..=12 {
            let got = precision_at_k(&ranked, &qrels, 1, k).unwrap();
            let want = brute_precision(&docs, &is_rel, k);
            ensure(got == want, || {
                format!("trial {trial}: P@{k} {got} vs {want}")
            })?;
        }
        let mut ap = 0.0;
        for (i, d) in docs.iter().enumerate() {
            if is_rel(d) {
                ap += docs[..=i].iter().filter(|x| is_rel(x)).count() as f64 / (i + 1) as f64;
            }
        }
        let want_ap = if r == 0 { 0.0 } else { ap / r as f64 };
        let got_ap = average_precision(&ranked, &qrels, 1).unwrap();
        ensure((got_ap - want_ap).abs() <= 1e-15, || {
            format!("trial {trial}: AP {got_ap} vs {want_ap}")
        })?;
        let want_rp = if r == 0 {
            0.0
        } else {
            brute_precision(&docs, &is_rel, r)
        };
        let got_rp = r_precision(&ranked, &qrels, 1).unwrap();
        ensure(got_rp == want_rp, || {
            format!("trial {trial}: R-prec {got_rp} vs {want_rp}")
        })?;
    }
    Ok(format!(
        "{} byte index stable, {trials} metric trials exact",
        b1.len()
    ))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {name}: {detail}");
        results.push((name, outcome));
    };
    run("AC1 spectral oracle equivalence", &ac1);
    run("AC2 a0 exactness and tf recovery", &ac2);
    run("AC3 constant-function identity", &ac3);
    run("AC4 objective re-ranking order", &ac4);
    let objective = objective_runs(5);
    run("AC5 skewness sign", &|| ac5(&objective));
    run("AC6 fitting-rate uplift", &|| ac6(&objective));
    run("AC7 expansion neighborhood sensitivity", &ac7);
    run("AC8 expansion end-to-end uplift", &ac8);
    run("AC9 complexity checks", &ac9);
    run("AC10 persistence and metric references", &ac10);
    let failed = results.iter().filter(|(_, o)| o.is_err()).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
