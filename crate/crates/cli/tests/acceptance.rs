//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use harmonagg::aggregation::{
    aggregate, brute_force_optimum, combined_objective, satisfaction, score_clustered_kemeny,
    score_kemeny, score_pav, score_plurality, solve_clustered_for_partition,
    solve_clustered_kemeny, solve_kemeny, solve_kemeny_2gram_dp, solve_pav, solve_plurality,
    solve_plurality_2gram_dp, AggregateOptions, BaseRule, ClusterAssignment, ClusterMode,
    ClusterOptions, Direction, ObjectiveWeights, Profile, Rule, SearchSpace, SectionPartition,
};
use harmonagg::corpus::Song;
use harmonagg::rng::{rng_from_seed, SimRng};
use harmonagg::simulation::{
    make_profile, run_experiment, song_similarity, synthetic_corpus, ErrorRange,
    ExperimentConfig, JaccardReplacement,
};
use harmonagg::transition::{load_model, save_model};
use harmonagg::{
    jaccard, neg_log_likelihood, parse_chord, train, AnnealingConfig, ChordId, Corpus,
    DistanceMatrix, TransitionModel,
};
use rand::seq::IndexedRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn seq(symbols: &str) -> Vec<ChordId> {
    symbols.split_whitespace().map(|s| s.parse().unwrap()).collect()
}

fn toy_profile() -> Profile {
    Profile::new(vec![
        seq("CMaj7 Dm7 G7 CMaj7"),
        seq("Am7 Dm7 E7 Am7"),
        seq("CMaj7 FMaj7 G7 Am7"),
    ])
    .unwrap()
}

fn random_space(rng: &mut SimRng, size: usize) -> SearchSpace {
    let all: Vec<ChordId> = ChordId::all().collect();
    SearchSpace::restricted(all.choose_multiple(rng, size).copied()).unwrap()
}

fn random_profile(rng: &mut SimRng, space: &SearchSpace, n: usize, k: usize) -> Profile {
    let rows = (0..n)
        .map(|_| (0..k).map(|_| *space.chords().choose(rng).unwrap()).collect())
        .collect();
    Profile::new(rows).unwrap()
}

fn random_model(rng: &mut SimRng) -> TransitionModel {
    let rows = (0..120)
        .map(|_| {
            let raw: Vec<f64> = (0..120).map(|_| 0.01 + rng.random::<f64>().powi(3)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    TransitionModel::from_rows(rows, 1.0, "random").unwrap()
}

fn weights_with(rule: BaseRule, x: f64) -> ObjectiveWeights {
    let mut w = ObjectiveWeights::base_only();
    match rule {
        BaseRule::Plurality => w.plurality = x,
        BaseRule::Kemeny => w.kemeny = x,
        BaseRule::Pav => w.pav = x,
        BaseRule::Clustered => w.clustered = x,
    }
    w
}

fn jaccard_fixtures() -> Outcome {
    let c = parse_chord("CMaj7").unwrap();
    let f = parse_chord("FMaj7").unwrap();
    let a = parse_chord("Am7").unwrap();
    let cf = jaccard(c, f);
    ensure!((cf - 2.0 / 3.0).abs() < 1e-12, "d(CMaj7, FMaj7) = {cf}");
    let ca = jaccard(parse_chord("Cmaj7").unwrap(), a);
    ensure!((ca - 0.4).abs() < 1e-12, "d(Cmaj7, Am7) = {ca}");
    let d = DistanceMatrix::global();
    let nonzero = ChordId::all().filter(|&x| d.get(x, x) != 0.0).count();
    ensure!(nonzero == 0, "{nonzero} non-zero diagonal entries");
    Ok(format!("d(CMaj7,FMaj7)={cf:.12}, d(Cmaj7,Am7)={ca}, 120 zero diagonal entries"))
}

fn satisfaction_fixture() -> Outcome {
    let profile = Profile::new(vec![
        seq("CMaj7 Dm7 Db7 CMaj7"),
        seq("Am7 Dm7 E7 Am7"),
        seq("CMaj7 FMaj7 G7 Am7"),
    ])
    .unwrap();
    let w = seq("CMaj7 Dm7 E7 Am7");
    let sats: Vec<f64> = (0..3).map(|i| satisfaction(&profile, i, &w).unwrap()).collect();
    for (got, want) in sats.iter().zip([1.0667, 0.4, 1.0667]) {
        ensure!((got - want).abs() < 5e-4, "agent satisfaction {got} vs {want}");
    }
    let total: f64 = sats.iter().sum();
    ensure!((total - 2.53334).abs() < 5e-4, "total {total}");
    Ok(format!("agents {:.4} {:.4} {:.4}, total {total:.5}", sats[0], sats[1], sats[2]))
}

fn toy_plurality() -> Outcome {
    let w = solve_plurality(&toy_profile(), &SearchSpace::full());
    ensure!(w.chords == seq("CMaj7 Dm7 G7 Am7"), "got {w}");
    Ok(format!("W = {w}"))
}

fn toy_kemeny() -> Outcome {
    let p = toy_profile();
    let w = solve_kemeny(&p, &SearchSpace::full());
    let score = score_kemeny(&p, &w.chords).unwrap();
    let space = SearchSpace::restricted(p.chords_used()).unwrap();
    let (_, oracle) = brute_force_optimum(
        |s| score_kemeny(&p, s).unwrap(),
        Direction::Minimize,
        &space,
        4,
        1_000_000,
    )
    .unwrap();
    // Per-column optimum over the whole alphabet, independently of the solver.
    let d = DistanceMatrix::global();
    let column_optimum: f64 = (0..4)
        .map(|j| {
            ChordId::all()
                .map(|c| p.column(j).map(|b| d.get(b, c)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    ensure!((score - oracle).abs() < 1e-9, "solver {score} vs brute force {oracle}");
    ensure!((score - column_optimum).abs() < 1e-9, "solver {score} vs column optimum {column_optimum}");
    ensure!((score - 28.0 / 15.0).abs() < 1e-9, "score {score} vs 28/15");
    Ok(format!("W = {w}, K = {score:.9} = 28/15"))
}

fn toy_clustered() -> Outcome {
    let p = toy_profile();
    let space = SearchSpace::full();
    let options = ClusterOptions {
        x_max: 3,
        off_section_weight: 0.0,
        mode: ClusterMode::Exact,
        ..ClusterOptions::default()
    };
    let exact = solve_clustered_kemeny(&p, &options, None, &AnnealingConfig::default(), &space)
        .map_err(|e| e.to_string())?;
    ensure!(exact.score.abs() < 1e-12, "exact optimum scored {}", exact.score);

    // {CMaj7}, {Dm7, G7}, {Am7}: agent 1 -> middle, agent 2 -> last, agent 3 -> first.
    let partition = SectionPartition::new(4, vec![0, 1, 3], 3).unwrap();
    let assignment = ClusterAssignment::new(vec![1, 2, 0], 0.0).unwrap();
    let w = seq("CMaj7 Dm7 G7 Am7");
    let quoted = score_clustered_kemeny(&p, &w, &partition, &assignment).unwrap();
    ensure!(quoted.abs() < 1e-12, "quoted partition scores {quoted}");
    let fixed = solve_clustered_for_partition(&p, &partition, &options, None, &space)
        .map_err(|e| e.to_string())?;
    ensure!(fixed.score.abs() < 1e-12, "best on quoted partition scores {}", fixed.score);
    Ok(format!(
        "exact score 0 (W = {}), quoted partition starts [0,1,3] also scores 0",
        exact.solution
    ))
}

fn g_fixture() -> Outcome {
    let w = seq("CMaj7 Dm7 G7 Am7");
    let injected = [(w[0], w[1], 0.0252903), (w[1], w[2], 0.199777), (w[2], w[3], 0.0053198)];
    let rows = ChordId::all()
        .map(|from| {
            let fixed = injected.iter().find(|t| t.0 == from);
            ChordId::all()
                .map(|to| match fixed {
                    Some(&(_, target, p)) if to == target => p,
                    Some(&(_, _, p)) => (1.0 - p) / 119.0,
                    None => 1.0 / 120.0,
                })
                .collect()
        })
        .collect();
    let model = TransitionModel::from_rows(rows, 1e-6, "fixture").unwrap();
    let g = neg_log_likelihood(&model, &w).map_err(|e| e.to_string())?;
    ensure!((g - 10.524207).abs() < 1e-4, "G = {g}");
    Ok(format!("G = {g:.6}"))
}

fn dp_exactness() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_from_seed(2024);
    let weights = [0.0, 0.5, 0.9, 1.0];
    let instances = 250;
    for instance in 0..instances {
        let size = rng.random_range(2..=6);
        let space = random_space(&mut rng, size);
        let n = rng.random_range(1..=5);
        let k = rng.random_range(1..=6);
        let p = random_profile(&mut rng, &space, n, k);
        let model = random_model(&mut rng);
        let x = weights[instance % weights.len()];
        for rule in [BaseRule::Kemeny, BaseRule::Plurality] {
            let wts = weights_with(rule, x);
            let objective = |s: &[ChordId]| combined_objective(rule, &p, s, &wts, &model, None).unwrap();
            let dp = match rule {
                BaseRule::Kemeny => solve_kemeny_2gram_dp(&p, x, &model, &space),
                _ => solve_plurality_2gram_dp(&p, x, &model, &space),
            };
            let (_, best) = brute_force_optimum(objective, rule.direction(), &space, k, 1_000_000)
                .map_err(|e| e.to_string())?;
            let got = objective(&dp.chords);
            ensure!(
                (got - best).abs() <= 1e-9,
                "instance {instance} {rule:?} x={x}: dp {got} vs brute force {best}"
            );
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("{instances} instances x 2 rules agree, {secs:.2}s"))
}

fn endpoint_reductions() -> Outcome {
    let mut rng = rng_from_seed(8);
    let weights = ObjectiveWeights::base_only();
    let instances = 50;
    for i in 0..instances {
        let space = random_space(&mut rng, 6);
        let n = rng.random_range(1..=5);
        let k = rng.random_range(2..=8);
        let p = random_profile(&mut rng, &space, n, k);
        let w = random_profile(&mut rng, &space, 1, k).row(0).to_vec();
        let model = random_model(&mut rng);
        let partition = SectionPartition::even(k, 2, 3).unwrap();
        let assignment = ClusterAssignment::new((0..n).map(|a| a % 2).collect(), 0.25).unwrap();
        let base = [
            (BaseRule::Plurality, score_plurality(&p, &w).unwrap() as f64),
            (BaseRule::Kemeny, score_kemeny(&p, &w).unwrap()),
            (BaseRule::Pav, score_pav(&p, &w).unwrap()),
            (BaseRule::Clustered, score_clustered_kemeny(&p, &w, &partition, &assignment).unwrap()),
        ];
        for (rule, expected) in base {
            let got = combined_objective(rule, &p, &w, &weights, &model, Some((&partition, &assignment)))
                .map_err(|e| e.to_string())?;
            ensure!(got.to_bits() == expected.to_bits(), "instance {i} {rule:?}: {got} vs {expected}");
        }
    }
    Ok(format!("{instances} instances x 4 rules reduce exactly"))
}

fn annealing_quality() -> Outcome {
    let mut rng = rng_from_seed(31);
    let weights = ObjectiveWeights::default();
    let mut matched = 0;
    for seed in 0..100u64 {
        let size = rng.random_range(4..=6);
        let space = random_space(&mut rng, size);
        let p = random_profile(&mut rng, &space, 3, 4);
        let (_, optimum) = brute_force_optimum(
            |s| score_pav(&p, s).unwrap(),
            Direction::Maximize,
            &space,
            4,
            1_000_000,
        )
        .map_err(|e| e.to_string())?;
        let config = AnnealingConfig::default().with_seed(seed);
        let (solution, trace) = solve_pav(&p, &weights, None, &config, &space).map_err(|e| e.to_string())?;
        ensure!(trace.is_monotone(), "run {seed}: best-so-far decreased");
        ensure!(trace.best_scores.len() == 1000, "run {seed}: {} iterations", trace.best_scores.len());
        if (score_pav(&p, &solution.chords).unwrap() - optimum).abs() < 1e-9 {
            matched += 1;
        }
    }
    ensure!(matched >= 90, "{matched}/100 runs reached the optimum");
    Ok(format!("{matched}/100 runs optimal, all traces monotone"))
}

fn random_corpus(rng: &mut SimRng) -> Corpus {
    let songs = (0..rng.random_range(1..20))
        .map(|i| {
            let bars = (0..rng.random_range(1..40))
                .map(|_| {
                    (0..rng.random_range(1..=2))
                        .map(|_| ChordId::new(rng.random_range(0..120)).unwrap())
                        .collect()
                })
                .collect();
            Song::new(format!("song {i}"), bars).unwrap()
        })
        .collect();
    Corpus::from_songs(songs)
}

fn model_training() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(10);
    let corpora = 20;
    for c in 0..corpora {
        let corpus = random_corpus(&mut rng);
        for alpha in [1e-6, 1.0] {
            let model = train(&corpus, alpha).map_err(|e| e.to_string())?;
            for from in ChordId::all() {
                let sum: f64 = model.row(from).iter().sum();
                ensure!((sum - 1.0).abs() < 1e-9, "corpus {c} alpha {alpha}: row {from} sums to {sum}");
            }
            let again = train(&corpus, alpha).map_err(|e| e.to_string())?;
            ensure!(again == model, "corpus {c}: retraining differs");
            let path = dir.path().join(format!("m{c}-{alpha}.json"));
            save_model(&model, &path).map_err(|e| e.to_string())?;
            let loaded = load_model(&path).map_err(|e| e.to_string())?;
            ensure!(loaded == model, "corpus {c}: round trip not bit-exact");
            let bits_equal = ChordId::all().all(|a| {
                ChordId::all().all(|b| loaded.probability(a, b).to_bits() == model.probability(a, b).to_bits())
            });
            ensure!(bits_equal, "corpus {c}: probability bits changed");
        }
    }
    Ok(format!("{corpora} corpora x 2 alphas: stochastic rows, deterministic, bit-exact round trip"))
}

fn trend_reproduction() -> Outcome {
    let started = Instant::now();
    let songs = synthetic_corpus(60, 2);
    let model = train(&synthetic_corpus(400, 1), 1e-6).map_err(|e| e.to_string())?;
    let rules: Vec<Rule> = vec!["plurality".parse().unwrap(), "kemeny".parse().unwrap()];
    let config = ExperimentConfig {
        agent_counts: vec![8],
        error_ranges: ErrorRange::standard(),
        rules: rules.clone(),
        seed: 7,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&config, &songs.songs, &model, None).map_err(|e| e.to_string())?;
    ensure!(report.failures.is_empty(), "failed cells: {:?}", report.failures);
    let averages = report.cell_averages(&config);
    let mut summary = Vec::new();
    for rule in rules {
        let cells: Vec<_> = averages.iter().filter(|c| c.rule == rule).collect();
        ensure!(cells.len() == 4, "{rule}: {} cells", cells.len());
        ensure!(cells.iter().all(|c| c.songs == 60), "{rule}: missing songs");
        for pair in cells.windows(2) {
            ensure!(
                pair[1].song_similarity_mean > pair[0].song_similarity_mean,
                "{rule}: song similarity {} -> {} not increasing",
                pair[0].song_similarity_mean,
                pair[1].song_similarity_mean
            );
            ensure!(
                pair[1].musical_coherence < pair[0].musical_coherence,
                "{rule}: musical coherence {} -> {} not decreasing",
                pair[0].musical_coherence,
                pair[1].musical_coherence
            );
        }
        let sim: Vec<String> = cells.iter().map(|c| format!("{:.4}", c.song_similarity_mean)).collect();
        let mc: Vec<String> = cells.iter().map(|c| format!("{:.4}", c.musical_coherence)).collect();
        summary.push(format!("{rule}: similarity {} coherence {}", sim.join("<"), mc.join(">")));
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 600.0, "took {secs:.0}s");
    Ok(format!("60 songs, {}; {secs:.1}s", summary.join("; ")))
}

fn zero_perturbation() -> Outcome {
    let songs = synthetic_corpus(20, 3);
    let model = train(&synthetic_corpus(200, 4), 1e-6).map_err(|e| e.to_string())?;
    let range = ErrorRange::new(0.0, 1e-9).unwrap();
    let perturbation = JaccardReplacement::new();
    let options = AggregateOptions {
        cluster: ExperimentConfig::default().cluster,
        ..AggregateOptions::default()
    };
    let mut rng = rng_from_seed(5);
    let base_rules: Vec<Rule> = Rule::ALL.into_iter().filter(|r| !r.two_gram).collect();
    for (s, song) in songs.songs.iter().enumerate() {
        let original = song.normalized();
        let p = make_profile(&perturbation, &original, 8, range, &mut rng).map_err(|e| e.to_string())?;
        for &rule in &base_rules {
            let out = aggregate(rule, &p, Some(&model), &options).map_err(|e| e.to_string())?;
            ensure!(out.solution.chords == original, "song {s} {rule}: not recovered");
            let (sum, _) = song_similarity(&out.solution.chords, &original).map_err(|e| e.to_string())?;
            ensure!(sum == 0.0, "song {s} {rule}: similarity {sum}");
        }
    }
    Ok(format!("{} songs x 4 base rules recovered exactly", songs.len()))
}

fn simulate_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, threads: Option<&str>| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_harmonagg"));
        cmd.args(["-q", "simulate", "--synthetic", "6", "--agents", "8", "--ranges", "0,1;3,4", "--seed", "11", "--out"])
            .arg(&out);
        if let Some(t) = threads {
            cmd.env("HARMONAGG_THREADS", t);
        }
        let status = cmd.output().map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("simulate failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let a = run("a.csv", None)?;
    let b = run("b.csv", None)?;
    let c = run("c.csv", Some("1"))?;
    ensure!(a == b, "two identical runs differ");
    ensure!(a == c, "single-threaded run differs");
    let rows = a.iter().filter(|&&b| b == b'\n').count() - 1;
    ensure!(rows == 6 * 2 * 8, "{rows} rows");
    Ok(format!("{rows}-row CSV identical across 3 runs ({} bytes)", a.len()))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("Jaccard fixtures", jaccard_fixtures),
        ("worked satisfaction example", satisfaction_fixture),
        ("toy plurality", toy_plurality),
        ("toy Kemeny", toy_kemeny),
        ("toy clustered Kemeny", toy_clustered),
        ("2-gram likelihood fixture", g_fixture),
        ("DP exactness vs brute force", dp_exactness),
        ("x = 1 endpoint reductions", endpoint_reductions),
        ("PAV annealing quality", annealing_quality),
        ("model training", model_training),
        ("trend reproduction", trend_reproduction),
        ("zero-perturbation recovery", zero_perturbation),
        ("simulate determinism", simulate_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
