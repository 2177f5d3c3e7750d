//! Acceptance criteria, one line each. Runs as a plain binary so every
//! verdict is printed, and exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Barrier;
use std::thread;
use std::time::Instant;

use hashkeeper::bench::{
    self, build_table, expand, fill, BenchConfig, SetTable, SweepConfig, TableKind, Workload,
    CSV_HEADER, DEFAULT_DUPLICATIONS,
};
use hashkeeper_core::bucket::FrameState;
use hashkeeper_core::cuckoo::{CuckooOptions, CuckooTable, EMPTY};
use hashkeeper_core::trace::{encode, explore, Automaton, Model};
use hashkeeper_core::{BucketTable, HashFamily, Status};
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

type Verdict = Result<String, String>;
type Check = fn() -> Verdict;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("single eviction chain", single_eviction),
        ("vector frame and duplicate race", vector_frame),
        ("cuckoo load tolerance", load_tolerance),
        ("torn-read freedom", torn_reads),
        ("trace correctness", trace_correctness),
        ("methodology reproduction", methodology),
        ("non-random workload replay", replay),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = check();
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} [PRIMARY] {name}: {tag} ({secs:.1}s) {detail}",
            i + 1
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn bench_config(table: TableKind, hash_seed: u64) -> BenchConfig {
    BenchConfig {
        table,
        hash_seed,
        ..BenchConfig::default()
    }
}

/// Criterion 1: Every run's final set equals the reference set and inserted equals
/// unique. Runs that report a full table are counted separately from
/// correctness violations (wrong or duplicated contents).
fn oracle_equivalence() -> Verdict {
    let mut summary = Vec::new();
    let mut ok = true;
    for table in [TableKind::Cuckoo, TableKind::Bucket] {
        let (mut runs, mut exact, mut full, mut wrong) = (0, 0, 0, Vec::new());
        for d in [1.0, 2.0, 5.0, 10.0, 100.0, 1000.0] {
            for seed in 0..20u64 {
                let w = Workload::random(100_000, d, seed).map_err(|e| e.to_string())?;
                let reference: HashSet<u32> = w.codes().iter().copied().collect();
                for workers in [1, 2, 4, 8] {
                    runs += 1;
                    let t = build_table(&bench_config(table, seed), w.unique())
                        .map_err(|e| e.to_string())?;
                    let (counts, _) = fill(&t, w.codes(), workers);
                    let stored = t.stored();
                    let set: HashSet<u32> = stored.iter().copied().collect();
                    let sound = set.len() == stored.len()
                        && counts.inserted == stored.len()
                        && set.is_subset(&reference)
                        && counts.inserted + counts.found + counts.rejected == w.len();
                    if !sound || (counts.rejected == 0 && set != reference) {
                        wrong.push(format!("d={d} seed={seed} workers={workers}"));
                    } else if counts.rejected > 0 {
                        full += 1;
                    } else if counts.inserted == w.unique() {
                        exact += 1;
                    }
                }
            }
        }
        ok &= exact == runs;
        summary.push(format!(
            "{table}: {exact}/{runs} exact, {full} table-full, {} violations{}",
            wrong.len(),
            wrong
                .first()
                .map(|w| format!(" (first: {w})"))
                .unwrap_or_default()
        ));
    }
    let line = summary.join("; ");
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

/// Criterion 2: Inserting 18 into the slot of an already displaced 26 evicts 26 once,
/// onto its next function's slot.
fn single_eviction() -> Verdict {
    const M: usize = 8;
    let (family, blocker) = (0u64..10_000)
        .find_map(|seed| {
            let f = HashFamily::generate(seed, 3).ok()?;
            let h = |i, k| f.hash(i, k, M).unwrap();
            let (a, b, c) = (h(0, 26), h(1, 26), h(2, 26));
            if a == b || a == c || b == c || h(0, 18) != b {
                return None;
            }
            let y = (0..1000u32).find(|&y| y != 26 && y != 18 && h(0, y) == a)?;
            Some((f, y))
        })
        .ok_or("no hash seed reproduces the scenario")?;
    let h = |i, k| family.hash(i, k, M).unwrap();
    let table = CuckooTable::with_slots(M, family.clone(), None, 4).map_err(|e| e.to_string())?;
    let step = |k| table.find_or_insert(k).map_err(|e| e.to_string());
    step(26)?;
    step(blocker)?;
    if table.slot_snapshot()[h(1, 26)] != 26 {
        return Err("setup did not move 26 to its second slot".into());
    }
    let outcome = step(18)?;
    let slots = table.slot_snapshot();
    let detail = format!(
        "status {:?}, evictions {}, 26 now at h2 slot {}",
        outcome.status,
        outcome.evictions,
        h(2, 26)
    );
    if outcome.status == Status::Inserted
        && outcome.evictions == 1
        && slots[h(1, 26)] == 18
        && slots[h(2, 26)] == 26
        && table.contains(18)
        && table.contains(26)
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 3: A 3-word vector lands in one aligned frame, and 8 workers racing to
/// insert the same vector produce exactly one insertion, 10^4 times over.
fn vector_frame() -> Verdict {
    const WORKERS: usize = 8;
    let mut bad = 0;
    for rep in 0..10_000u64 {
        let table = BucketTable::new(64, 3, HashFamily::generate(rep, 4).unwrap()).unwrap();
        let v = [rep as u32 * 3 + 1, 0xABCD, rep as u32];
        let barrier = Barrier::new(WORKERS);
        let inserted: usize = thread::scope(|s| {
            let hs: Vec<_> = (0..WORKERS)
                .map(|_| {
                    s.spawn(|| {
                        barrier.wait();
                        (table.find_or_insert(&v).unwrap().status == Status::Inserted) as usize
                    })
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).sum()
        });
        let entries = table.entries();
        let aligned = entries.len() == 1 && {
            let (b, f, words) = &entries[0];
            words[..] == v && table.bucket_words(*b)[f * 3..f * 3 + 3] == v
        };
        if inserted != 1 || !aligned {
            bad += 1;
        }
    }
    let detail = format!("{bad} of 10000 repetitions deviated");
    if bad == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 4: c = 4, 1.25n slots, n = 10^5, stash 101: at least 95 of 100 seeds
/// insert every key without a full table.
fn load_tolerance() -> Verdict {
    const N: usize = 100_000;
    let mut clean = 0;
    let mut stash_peak = 0;
    for seed in 0..100u64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut seen = HashSet::with_capacity(N);
        let table = CuckooTable::with_options(
            N,
            HashFamily::generate(seed, 4).unwrap(),
            CuckooOptions::default(),
        )
        .unwrap();
        let mut full = false;
        while seen.len() < N {
            let k = rng.next_u32();
            if k == EMPTY || !seen.insert(k) {
                continue;
            }
            if table.find_or_insert(k).unwrap().status == Status::TableFull {
                full = true;
                break;
            }
        }
        if !full {
            clean += 1;
        }
        stash_peak = stash_peak.max(table.stash_snapshot().len());
    }
    let detail = format!("{clean}/100 seeds without TableFull, largest stash {stash_peak}");
    if clean >= 95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 5: While 8 workers push 10^6 four-word vectors, a scanner reading frames
/// the way lookups do never sees a published frame with a foreign tail.
fn torn_reads() -> Verdict {
    const WIDTH: usize = 4;
    let w = Workload::random(1_000_000, 10.0, 99).unwrap();
    let table = BucketTable::new(w.unique(), WIDTH, HashFamily::generate(99, 4).unwrap()).unwrap();
    let done = AtomicBool::new(false);
    let block = w.len().div_ceil(8);
    let (scanned, partial, claimed, rejected) = thread::scope(|s| {
        let scanner = s.spawn(|| {
            let (mut scanned, mut partial, mut claimed) = (0u64, 0u64, 0u64);
            let mut expect = [0u32; WIDTH];
            loop {
                let last = done.load(Ordering::Acquire);
                for b in 0..table.bucket_count() {
                    for f in 0..table.frames_per_bucket() {
                        match table.frame_state(b, f) {
                            FrameState::Occupied(words) => {
                                scanned += 1;
                                expand(words[0], &mut expect);
                                if words[..] != expect {
                                    partial += 1;
                                }
                            }
                            FrameState::Claimed => claimed += 1,
                            FrameState::Empty => {}
                        }
                    }
                }
                if last {
                    return (scanned, partial, claimed);
                }
            }
        });
        let workers: Vec<_> = w
            .codes()
            .chunks(block)
            .map(|part| {
                let table = &table;
                s.spawn(move || {
                    let mut words = [0u32; WIDTH];
                    let mut rejected = 0;
                    for &c in part {
                        expand(c, &mut words);
                        if table.find_or_insert(&words).unwrap().status == Status::TableFull {
                            rejected += 1;
                        }
                    }
                    rejected
                })
            })
            .collect();
        let rejected: usize = workers.into_iter().map(|h| h.join().unwrap()).sum();
        done.store(true, Ordering::Release);
        let (scanned, partial, claimed) = scanner.join().unwrap();
        (scanned, partial, claimed, rejected)
    });
    let detail = format!(
        "{partial} partial frames in {scanned} published-frame reads ({claimed} mid-claim frames seen, {rejected} table-full calls)"
    );
    if partial == 0 && scanned > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Reachable composite states and edge targets, built from explicit
/// vectors without the explorer's encoder or successor generator.
fn brute_force(model: &Model) -> (usize, BTreeSet<Vec<u32>>) {
    let procs = model.processes();
    let mut participants: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (i, p) in procs.iter().enumerate() {
        for t in &p.transitions {
            participants.entry(&t.label).or_default().insert(i);
        }
    }
    let initial: Vec<u32> = procs.iter().map(|p| p.initial).collect();
    let mut seen = BTreeSet::from([initial.clone()]);
    let mut entered = BTreeSet::new();
    let mut stack = vec![initial];
    while let Some(state) = stack.pop() {
        for (label, who) in &participants {
            let mut partial = vec![state.clone()];
            for &p in who {
                let mut next = Vec::new();
                for s in &partial {
                    for t in &procs[p].transitions {
                        if t.label == *label && t.source == state[p] {
                            let mut n = s.clone();
                            n[p] = t.target;
                            next.push(n);
                        }
                    }
                }
                partial = next;
            }
            for n in partial {
                entered.insert(n.clone());
                if seen.insert(n.clone()) {
                    stack.push(n);
                }
            }
        }
    }
    (seen.len(), entered)
}

fn random_model(rng: &mut Xoshiro256PlusPlus) -> Model {
    // Mostly private moves keep the state space open; a few shared labels
    // add synchronization.
    const SHARED: [&str; 3] = ["a", "b", "c"];
    loop {
        let count = 2 + rng.next_u32() as usize % 4;
        let mut space = 1u64;
        let mut processes = Vec::new();
        for i in 0..count {
            let states = 2 + rng.next_u32() % 9;
            space *= u64::from(states);
            let mut p = Automaton::new(format!("p{i}"), states, rng.next_u32() % states);
            // A private cycle through every state, unless the process is
            // meant to be stuck somewhere.
            if !rng.next_u32().is_multiple_of(4) {
                for s in 0..states {
                    p = p.transition(s, format!("step{i}"), (s + 1) % states);
                }
            }
            for _ in 0..states * (1 + rng.next_u32() % 2) {
                let label = if rng.next_u32().is_multiple_of(4) {
                    SHARED[rng.next_u32() as usize % SHARED.len()].to_string()
                } else {
                    format!("l{i}_{}", rng.next_u32() % 4)
                };
                p = p.transition(rng.next_u32() % states, label, rng.next_u32() % states);
            }
            processes.push(p);
        }
        if space <= 10_000 {
            return Model::new(processes).unwrap();
        }
    }
}

/// Criterion 6: On 50 random models the explorer agrees with a brute-force product
/// graph: same reachable count, and unique_count equals the number of
/// distinct states entered by some transition.
fn trace_correctness() -> Verdict {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0xACCE);
    let mut mismatches = Vec::new();
    let mut total_states = 0;
    for case in 0..50 {
        let model = random_model(&mut rng);
        let trace = explore(&model).map_err(|e| e.to_string())?;
        let (reachable, entered) = brute_force(&model);
        total_states += reachable;
        let codes: BTreeSet<u32> = entered.iter().map(|v| encode(&model, v).unwrap()).collect();
        let seen: BTreeSet<u32> = trace.codes().iter().copied().collect();
        if trace.reachable_states() != reachable
            || trace.unique_count() != entered.len()
            || seen != codes
        {
            mismatches.push(format!(
                "case {case}: explorer {}/{}, brute force {reachable}/{}",
                trace.reachable_states(),
                trace.unique_count(),
                entered.len()
            ));
        }
    }
    let detail = format!(
        "{} of 50 models disagree ({total_states} reachable states in total){}",
        mismatches.len(),
        mismatches
            .first()
            .map(|m| format!("; {m}"))
            .unwrap_or_default()
    );
    if mismatches.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 7: Default sweep at length 10^6 with 10 repetitions: well-formed CSV,
/// identical inserted counts across tables for every d, and each row's mean
/// is the mean of 10 freshly built tables.
fn methodology() -> Verdict {
    let config = SweepConfig {
        lengths: vec![1_000_000],
        duplications: DEFAULT_DUPLICATIONS.to_vec(),
        tables: vec![TableKind::Cuckoo, TableKind::Bucket],
        seed: 1,
        bench: BenchConfig {
            workers: 4,
            reps: 10,
            ..BenchConfig::default()
        },
    };
    let reports = bench::sweep(&config).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    bench::write_csv(&mut buf, &reports).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_reader(&buf[..]);
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().unwrap();
    let mut problems = Vec::new();
    if header != CSV_HEADER {
        problems.push("header mismatch".to_string());
    }
    if rows.len() != 24 || rows.iter().any(|r| r.len() != CSV_HEADER.len()) {
        problems.push(format!("{} rows", rows.len()));
    }
    for r in &rows {
        let numeric = (1..13).all(|i| r[i].parse::<f64>().is_ok());
        if !numeric || !matches!(&r[13], "true" | "false") {
            problems.push(format!("malformed row {r:?}"));
        }
    }
    for r in &reports {
        let mean = r.rep_ms.iter().sum::<f64>() / r.rep_ms.len() as f64;
        if r.tables_built != 10 || r.rep_ms.len() != 10 || (mean - r.mean_ms).abs() > 1e-9 {
            problems.push(format!(
                "{} d={:.0}: {} tables",
                r.table, r.duplication, r.tables_built
            ));
        }
    }
    let (cuckoo, bucket) = reports.split_at(12);
    let mut differing = Vec::new();
    // Rows follow the (already ascending) duplication axis.
    for ((c, b), d) in cuckoo.iter().zip(bucket).zip(DEFAULT_DUPLICATIONS) {
        if c.inserted != b.inserted {
            differing.push(format!(
                "d={d} cuckoo {} vs bucket {}{}",
                c.inserted,
                b.inserted,
                if b.table_full {
                    " (bucket table full)"
                } else {
                    ""
                }
            ));
        }
    }
    let detail = format!(
        "24 rows, 10 fresh tables per row; inserted differs at {} of 12 d{}{}",
        differing.len(),
        differing
            .iter()
            .map(|d| format!("; {d}"))
            .collect::<String>(),
        problems
            .iter()
            .map(|p| format!("; {p}"))
            .collect::<String>()
    );
    if problems.is_empty() && differing.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 8: Each shipped model's trace, replayed through both tables, inserts
/// exactly unique_count codes and finds the rest.
fn replay() -> Verdict {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "net"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err("no models shipped".into());
    }
    let mut ok = true;
    let mut lines = Vec::new();
    for path in &paths {
        let model = Model::parse(&std::fs::read_to_string(path).unwrap())
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let trace = explore(&model).map_err(|e| e.to_string())?;
        let w = Workload::new(trace.codes().to_vec()).map_err(|e| e.to_string())?;
        let mut mops = Vec::new();
        for table in [TableKind::Cuckoo, TableKind::Bucket] {
            let cfg = BenchConfig {
                workers: 4,
                reps: 3,
                ..bench_config(table, 0x5eed)
            };
            let r = bench::run(&w, &cfg).map_err(|e| e.to_string())?;
            let good =
                r.inserted == trace.unique_count() && r.found == trace.len() - trace.unique_count();
            ok &= good;
            if !good {
                lines.push(format!(
                    "{table} inserted {} found {}{}",
                    r.inserted,
                    r.found,
                    if r.table_full { " (table full)" } else { "" }
                ));
            }
            mops.push(r.throughput_mops);
        }
        lines.push(format!(
            "{}: {} codes, {} unique, multiplicity {:.2}, cuckoo/bucket throughput {:.2}",
            path.file_stem().unwrap().to_string_lossy(),
            trace.len(),
            trace.unique_count(),
            trace.mean_multiplicity(),
            mops[0] / mops[1]
        ));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}
