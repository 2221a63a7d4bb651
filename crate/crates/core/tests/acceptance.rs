//! Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
//! exits nonzero if any criterion fails or exceeds its time budget.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use breplay::harness::{run_grid, GridConfig, GridReport, Method, ScoreChoice};
use breplay::memory::MemoryEntry;
use breplay::metrics::mean_std;
use breplay::model::{LogisticRegression, TanhMlp};
use breplay::scoring::{
    score_bregman_information, score_entropy, score_least_confidence, score_ratio_confidence,
    score_rm_agreement, score_smallest_margin, softmax, LogitMatrix, ProbabilityVector,
};
use breplay::{
    relative_improvement, AccuracyMatrix, LogitModel, ReplayMemory, Retention, Sample, ScoreKind, Strategy,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Name, time budget in seconds, and the check itself.
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// BI([[0, 0], [2, 0]]) evaluated with 40-digit arithmetic.
const BI_WORKED_EXAMPLE: f64 = 0.096_775_908_283_236_07;

fn random_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let p = rng.random_range(1..=8);
    let c = rng.random_range(2..=10);
    let scale = [0.1, 1.0, 10.0, 50.0][rng.random_range(0..4)];
    (0..p)
        .map(|_| (0..c).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn bi(rows: Vec<Vec<f64>>) -> f64 {
    score_bregman_information(&LogitMatrix::new(rows).expect("finite matrix")).value
}

fn bi_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_shift = 0.0f64;
    for i in 0..1000 {
        let z = random_matrix(&mut rng);
        let b = bi(z.clone());
        ensure(b >= -1e-12, || format!("draw {i}: BI = {b}"))?;

        let dup = vec![z[0].clone(); z.len()];
        let bd = bi(dup);
        ensure(bd.abs() <= 1e-12, || format!("draw {i}: duplicated rows give BI = {bd}"))?;

        let c = rng.random_range(-100.0..100.0);
        let shifted: Vec<Vec<f64>> = z.iter().map(|r| r.iter().map(|v| v + c).collect()).collect();
        let gap = (bi(shifted) - b).abs();
        ensure(gap <= 1e-9 * (1.0 + c.abs()), || format!("draw {i}: shift {c} moves BI by {gap}"))?;
        worst_shift = worst_shift.max(gap / (1.0 + c.abs()));
    }
    let ex = bi(vec![vec![0.0, 0.0], vec![2.0, 0.0]]);
    let err = (ex - BI_WORKED_EXAMPLE).abs();
    ensure(err <= 1e-9, || format!("worked example {ex} differs from {BI_WORKED_EXAMPLE} by {err}"))?;
    Ok(format!("1000 matrices; worst shift drift {worst_shift:.1e}; worked example {ex:.12}"))
}

fn score_ranges() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1000 {
        let c = rng.random_range(2..=10);
        let scale = [0.1, 1.0, 5.0, 30.0][rng.random_range(0..4)];
        let z: Vec<f64> = (0..c).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let p = softmax(&z).map_err(|e| e.to_string())?;
        let cf = c as f64;
        let en = score_entropy(&p).value;
        let lc = score_least_confidence(&p).value;
        let sm = score_smallest_margin(&p).value;
        let rc = score_ratio_confidence(&p).value;
        ensure((0.0..=cf.ln() + 1e-12).contains(&en), || format!("draw {i}: EN {en} for C={c}"))?;
        ensure((0.0..=1.0 - 1.0 / cf + 1e-12).contains(&lc), || format!("draw {i}: LC {lc} for C={c}"))?;
        ensure((0.0..=1.0).contains(&sm), || format!("draw {i}: SM {sm}"))?;
        ensure((0.0..=1.0).contains(&rc), || format!("draw {i}: RC {rc}"))?;

        let views = rng.random_range(1..=8);
        let votes: Vec<usize> = (0..views).map(|_| rng.random_range(0..c)).collect();
        let rm = score_rm_agreement(&votes).map_err(|e| e.to_string())?.value;
        let pf = views as f64;
        ensure((0.0..=1.0 - 1.0 / pf + 1e-12).contains(&rm), || format!("draw {i}: RM {rm} for P={views}"))?;
    }

    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    for c in 2..=10usize {
        let cf = c as f64;
        let mut onehot = vec![0.0; c];
        onehot[c / 2] = 1.0;
        let p = ProbabilityVector::new(onehot).map_err(|e| e.to_string())?;
        for (name, v) in [
            ("LC", score_least_confidence(&p).value),
            ("SM", score_smallest_margin(&p).value),
            ("RC", score_ratio_confidence(&p).value),
            ("EN", score_entropy(&p).value),
        ] {
            ensure(close(v, 0.0), || format!("one-hot C={c}: {name} = {v}"))?;
        }
        let u = ProbabilityVector::new(vec![1.0 / cf; c]).map_err(|e| e.to_string())?;
        for (name, v, want) in [
            ("LC", score_least_confidence(&u).value, 1.0 - 1.0 / cf),
            ("SM", score_smallest_margin(&u).value, 1.0),
            ("RC", score_ratio_confidence(&u).value, 1.0),
            ("EN", score_entropy(&u).value, cf.ln()),
        ] {
            ensure(close(v, want), || format!("uniform C={c}: {name} = {v}, want {want}"))?;
        }
    }
    for views in 1..=8usize {
        let agree = score_rm_agreement(&vec![3; views]).map_err(|e| e.to_string())?.value;
        ensure(close(agree, 0.0), || format!("full agreement P={views}: RM = {agree}"))?;
        let distinct: Vec<usize> = (0..views).collect();
        let spread = score_rm_agreement(&distinct).map_err(|e| e.to_string())?.value;
        let want = 1.0 - 1.0 / views as f64;
        ensure(close(spread, want), || format!("all-distinct P={views}: RM = {spread}, want {want}"))?;
    }
    Ok("1000 random inputs in range; one-hot, uniform and agreement boundaries exact".into())
}

fn finite_difference_error(model: &mut dyn LogitModel, batch: &[(Vec<f64>, usize)]) -> Result<f64, String> {
    let examples: Vec<(&[f64], usize)> = batch.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
    let (_, grad) = model.loss_and_grad(&examples).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..grad.len() {
        let orig = model.params()[k];
        model.params_mut()[k] = orig + h;
        let (up, _) = model.loss_and_grad(&examples).map_err(|e| e.to_string())?;
        model.params_mut()[k] = orig - h;
        let (down, _) = model.loss_and_grad(&examples).map_err(|e| e.to_string())?;
        model.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn gradient_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 2];
    let draws = 25;
    for i in 0..draws {
        let dim = rng.random_range(1..=6);
        let classes = rng.random_range(2..=5);
        let hidden = rng.random_range(1..=6);
        let n = rng.random_range(1..=8);
        let batch: Vec<(Vec<f64>, usize)> = (0..n)
            .map(|_| {
                let x = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                (x, rng.random_range(0..classes))
            })
            .collect();

        let count = classes * dim + classes;
        let theta = (0..count).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut lr = LogisticRegression::from_flat(dim, classes, theta).map_err(|e| e.to_string())?;
        let e = finite_difference_error(&mut lr, &batch)?;
        ensure(e < 1e-4, || format!("draw {i}: logreg relative error {e:.2e}"))?;
        worst[0] = worst[0].max(e);

        let count = TanhMlp::parameter_count(dim, hidden, classes);
        let theta = (0..count).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut mlp = TanhMlp::from_flat(dim, hidden, classes, theta).map_err(|e| e.to_string())?;
        let e = finite_difference_error(&mut mlp, &batch)?;
        ensure(e < 1e-4, || format!("draw {i}: mlp relative error {e:.2e}"))?;
        worst[1] = worst[1].max(e);
    }
    Ok(format!(
        "{draws} draws per model; worst relative error logreg {:.1e}, mlp {:.1e}",
        worst[0], worst[1]
    ))
}

/// All compositions of at most `max_total` candidates over 1..=3 classes.
fn class_layouts(max_total: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 1..=max_total {
        out.push(vec![a]);
        for b in 1..=max_total - a {
            out.push(vec![a, b]);
            for c in 1..=max_total - a - b {
                out.push(vec![a, b, c]);
            }
        }
    }
    out
}

type Key = (f64, u64, u64);

/// Brute-force best subset of size `m`: extreme total score, ties resolved
/// by the lexicographic order of the sorted keys.
fn brute_force(keys: &[Key], m: usize, strategy: Strategy) -> BTreeSet<u64> {
    let n = keys.len();
    if m >= n {
        return keys.iter().map(|k| k.2).collect();
    }
    let mut best: Option<(f64, Vec<Key>)> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let mut chosen: Vec<Key> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| keys[i]).collect();
        chosen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let total: f64 = chosen.iter().map(|k| k.0).sum();
        let better = match &best {
            None => true,
            Some((bt, bk)) => match strategy {
                Strategy::BottomK => total < *bt || (total == *bt && chosen < *bk),
                Strategy::TopK => total > *bt || (total == *bt && chosen > *bk),
                Strategy::StepSize => unreachable!(),
            },
        };
        if better {
            best = Some((total, chosen));
        }
    }
    best.expect("m < n").1.iter().map(|k| k.2).collect()
}

fn stub(id: u64, label: usize) -> Sample {
    Sample {
        id,
        features: Vec::new(),
        label,
        task: label,
    }
}

fn retained_ids(mem: &ReplayMemory, class: usize) -> BTreeSet<u64> {
    mem.class_entries(class).iter().map(|e| e.sample.id).collect()
}

fn memory_oracle_exhaustive() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0usize;
    for layout in class_layouts(12) {
        let total: usize = layout.iter().sum();
        let labels: Vec<usize> = layout.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
        // dyadic scores keep subset sums exact; the coarse grid forces ties
        let mut distinct: Vec<f64> = (0..total).map(|i| i as f64 / 64.0).collect();
        distinct.shuffle(&mut rng);
        let tied: Vec<f64> = (0..total).map(|_| rng.random_range(0..4) as f64 / 4.0).collect();
        let mut ids: Vec<u64> = (0..total as u64).map(|i| 100 + 7 * i).collect();
        ids.shuffle(&mut rng);

        for scores in [&distinct, &tied] {
            let table: HashMap<u64, f64> = ids.iter().copied().zip(scores.iter().copied()).collect();
            let scorer = |s: &Sample| Ok(table[&s.id]);
            let samples: Vec<Sample> = ids.iter().zip(&labels).map(|(&id, &c)| stub(id, c)).collect();

            for capacity in 0..=8usize {
                for strategy in Strategy::ALL {
                    let retention = Retention::Ranked {
                        kind: ScoreKind::Lc,
                        strategy,
                    };
                    // one batch, then the same candidates split over two batches
                    let splits: Vec<Vec<Vec<Sample>>> = if strategy == Strategy::StepSize {
                        vec![vec![samples.clone()]]
                    } else {
                        let (a, b): (Vec<_>, Vec<_>) = samples.iter().cloned().enumerate().partition(|(i, _)| i % 2 == 0);
                        let mut two = vec![a.into_iter().map(|x| x.1).collect::<Vec<_>>()];
                        let b: Vec<Sample> = b.into_iter().map(|x| x.1).collect();
                        if !b.is_empty() {
                            two.push(b);
                        }
                        vec![vec![samples.clone()], two]
                    };
                    for batches in splits {
                        let mut mem = ReplayMemory::new(capacity, retention);
                        let mut stamp_of: HashMap<u64, u64> = HashMap::new();
                        for (b, batch) in batches.iter().enumerate() {
                            mem.update(batch, &scorer).map_err(|e| e.to_string())?;
                            for s in batch {
                                stamp_of.insert(s.id, b as u64 + 1);
                            }
                        }
                        // remainder slots go to classes by first appearance,
                        // ascending label within a batch
                        let mut classes: Vec<usize> = Vec::new();
                        for batch in &batches {
                            let fresh: BTreeSet<usize> = batch.iter().map(|s| s.label).filter(|c| !classes.contains(c)).collect();
                            classes.extend(fresh);
                        }
                        let k = classes.len();
                        let quotas: HashMap<usize, usize> = classes
                            .iter()
                            .enumerate()
                            .map(|(i, &c)| (c, capacity / k + usize::from(i < capacity % k)))
                            .collect();
                        ensure(mem.len() <= capacity, || format!("{layout:?} cap {capacity}: size {}", mem.len()))?;
                        for &c in &classes {
                            let mut keys: Vec<Key> = samples
                                .iter()
                                .filter(|s| s.label == c)
                                .map(|s| (table[&s.id], stamp_of[&s.id], s.id))
                                .collect();
                            let quota = quotas[&c];
                            let want: BTreeSet<u64> = match strategy {
                                Strategy::StepSize => {
                                    keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
                                    let n = keys.len();
                                    if n <= quota {
                                        keys.iter().map(|k| k.2).collect()
                                    } else {
                                        (0..quota).map(|i| keys[(i * n) / quota].2).collect()
                                    }
                                }
                                _ => brute_force(&keys, quota, strategy),
                            };
                            let got = retained_ids(&mem, c);
                            ensure(got == want, || {
                                format!(
                                    "{layout:?} cap {capacity} {strategy} over {} batch(es), class {c}: got {got:?}, want {want:?}",
                                    batches.len()
                                )
                            })?;
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(checked)
}

fn memory_soak() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut next_id = 0u64;
    let mut steps = 0usize;
    let mut episode = 0u64;
    while steps < 10_000 {
        episode += 1;
        let capacity = rng.random_range(0..=60);
        let class_pool = rng.random_range(1..=10);
        let retention = match rng.random_range(0..4) {
            0 => Retention::Random,
            k => Retention::Ranked {
                kind: ScoreKind::Bi,
                strategy: Strategy::ALL[k - 1],
            },
        };
        let mut mem = ReplayMemory::new(capacity, retention);
        let mut observed: BTreeMap<usize, usize> = BTreeMap::new();
        let mut evicted: BTreeSet<u64> = BTreeSet::new();
        let mut ret_rng = ChaCha8Rng::seed_from_u64(episode);
        for _ in 0..500 {
            let active = rng.random_range(1..=class_pool);
            let n = rng.random_range(1..=10);
            let batch: Vec<Sample> = (0..n)
                .map(|_| {
                    next_id += 1;
                    stub(next_id, rng.random_range(0..active))
                })
                .collect();
            for s in &batch {
                *observed.entry(s.label).or_default() += 1;
            }
            let salt: u64 = rng.random();
            let before: BTreeSet<u64> = mem.entries().map(|e| e.sample.id).collect();
            let scorer = move |s: &Sample| Ok(((s.id.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt) % 1000) as f64 / 1000.0);
            match retention {
                Retention::Random => mem.update_random(&batch, &mut ret_rng),
                Retention::Ranked { .. } => mem.update(&batch, &scorer),
            }
            .map_err(|e| e.to_string())?;
            steps += 1;

            ensure(mem.len() <= capacity, || format!("step {steps}: {} entries over capacity {capacity}", mem.len()))?;
            let quotas = mem.quotas();
            let full: Vec<usize> = quotas
                .iter()
                .filter(|(c, &q)| observed[c] >= q)
                .map(|(c, _)| mem.class_entries(*c).len())
                .collect();
            if let (Some(lo), Some(hi)) = (full.iter().min(), full.iter().max()) {
                ensure(hi - lo <= 1, || format!("step {steps}: full classes hold {lo}..{hi} entries"))?;
            }
            for (c, &q) in &quotas {
                let held = mem.class_entries(*c);
                ensure(held.len() == q.min(observed[c]), || {
                    format!("step {steps}: class {c} holds {} with quota {q}, observed {}", held.len(), observed[c])
                })?;
                if let Retention::Ranked { .. } = retention {
                    let sorted = held.windows(2).all(|w| key(&w[0]) <= key(&w[1]));
                    ensure(sorted, || format!("step {steps}: class {c} entries out of order"))?;
                }
            }
            let after: BTreeSet<u64> = mem.entries().map(|e| e.sample.id).collect();
            ensure(after.is_disjoint(&evicted), || format!("step {steps}: an evicted sample came back"))?;
            evicted.extend(before.difference(&after));
            if steps == 10_000 {
                break;
            }
        }
    }
    Ok(steps)
}

fn key(e: &MemoryEntry) -> (f64, u64, u64) {
    (e.score, e.inserted_at, e.sample.id)
}

fn memory_oracle() -> Check {
    let checked = memory_oracle_exhaustive()?;
    let steps = memory_soak()?;
    Ok(format!("{checked} class selections match the oracle; {steps}-step soak kept capacity and balance"))
}

fn forgetting_stats(report: &GridReport, method: Method, memory: usize) -> Result<(f64, f64, usize), String> {
    let cell = report
        .cell(method, memory)
        .ok_or_else(|| format!("missing cell {method} m={memory}"))?;
    if !cell.failures.is_empty() {
        return Err(format!("{method} m={memory}: failed runs {:?}", cell.failures));
    }
    let f = cell.forgettings();
    let (mean, std) = mean_std(&f);
    Ok((mean, std, f.len()))
}

/// `(gap, pooled standard error)` for `F(worse) - F(better)`.
fn gap(worse: (f64, f64, usize), better: (f64, f64, usize)) -> (f64, f64) {
    let se = (worse.1.powi(2) / worse.2 as f64 + better.1.powi(2) / better.2 as f64).sqrt();
    (worse.0 - better.0, se)
}

fn trend_reproduction() -> Check {
    let grid = GridConfig {
        seeds: (0..5).collect(),
        strategies: vec![Strategy::TopK, Strategy::BottomK],
        ..GridConfig::default()
    };
    let report = run_grid(&grid, None).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for &memory in &grid.memory {
        let er = forgetting_stats(&report, Method::ErRandom, memory)?;
        for choice in &grid.scores {
            let ScoreChoice::Score(score) = *choice else { continue };
            let at = |strategy| forgetting_stats(&report, Method::Uncertainty { score, strategy }, memory);
            let (bottom, top) = (at(Strategy::BottomK)?, at(Strategy::TopK)?);
            let (g, se) = gap(top, bottom);
            let ok = g > se;
            lines.push(format!(
                "    m={memory} {score}: F(bottom)={:.4} F(top)={:.4} gap={g:+.4} se={se:.4} {}",
                bottom.0,
                top.0,
                if ok { "ok" } else { "VIOLATED" }
            ));
            if !ok {
                failures.push(format!("m={memory} {score} bottom<top"));
            }
            let (g, se) = gap(er, bottom);
            let ok = g > se;
            let note = if score == ScoreKind::Bi { "" } else { " (informational)" };
            lines.push(format!(
                "    m={memory} {score}: F(bottom)={:.4} F(er)={:.4} gap={g:+.4} se={se:.4} {}{note}",
                bottom.0,
                er.0,
                if ok { "ok" } else { "VIOLATED" }
            ));
            if !ok && score == ScoreKind::Bi {
                failures.push(format!("m={memory} bi bottom<er"));
            }
        }
    }
    let detail = lines.join("\n");
    if failures.is_empty() {
        Ok(format!("5 seeds, all comparisons clear one pooled SE\n{detail}"))
    } else {
        Err(format!("{} comparison(s) violated: {}\n{detail}", failures.len(), failures.join(", ")))
    }
}

fn relative_improvement_arithmetic() -> Check {
    let r = relative_improvement(74.92, 43.03).map_err(|e| e.to_string())?;
    ensure((r - 0.4257).abs() <= 1e-4, || format!("got {r}"))?;
    Ok(format!("(74.92 - 43.03) / 74.92 = {r:.6}"))
}

fn dir_bytes(root: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn determinism() -> Check {
    let grid = GridConfig::default();
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = run_grid(&grid, Some(&dir.path().join("runs"))).map_err(|e| e.to_string())?;
        let table = fs::File::create(dir.path().join("grid.csv")).map_err(|e| e.to_string())?;
        report.write_csv(table).map_err(|e| e.to_string())?;
        snapshots.push(dir_bytes(dir.path())?);
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    ensure(a.keys().eq(b.keys()), || "the two runs wrote different file sets".into())?;
    if let Some(name) = a.keys().find(|k| a[*k] != b[*k]) {
        return Err(format!("{name} differs between runs"));
    }
    Ok(format!("{} files byte-identical across two grid executions", a.len()))
}

fn metric_definitions() -> Check {
    let m = AccuracyMatrix::from_rows(vec![vec![0.9], vec![0.8, 0.7]]).map_err(|e| e.to_string())?;
    let a = m.last_accuracy().map_err(|e| e.to_string())?;
    let f = m.last_forgetting().map_err(|e| e.to_string())?;
    ensure(a == 0.75, || format!("A = {a}"))?;
    // 0.9 - 0.8 rounds to one ulp below 0.1 in binary floating point
    ensure((f - 0.1).abs() <= f64::EPSILON, || format!("F = {f}"))?;
    ensure(f == 0.9 - 0.8, || format!("F = {f} is not the rounded difference"))?;
    Ok(format!("A = {a}, F = {f}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("bregman information correctness", 1, bi_correctness),
        ("score ranges and boundaries", 1, score_ranges),
        ("gradient finite differences", 5, gradient_oracle),
        ("replay memory oracle and soak", 30, memory_oracle),
        ("bottom-k below top-k forgetting trend", 120, trend_reproduction),
        ("relative improvement arithmetic", 1, relative_improvement_arithmetic),
        ("grid determinism", 120, determinism),
        ("last accuracy and forgetting", 1, metric_definitions),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", p.downcast_ref::<String>().cloned().unwrap_or_default())));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > Duration::from_secs(budget) => {
                Err(format!("took {:.2} s, budget {budget} s", elapsed.as_secs_f64()))
            }
            r => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] criterion {} {name} ({:.2} s): {detail}", i + 1, elapsed.as_secs_f64());
        failed += usize::from(result.is_err());
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
