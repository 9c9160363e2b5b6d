//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the test harness.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mofs_cli::matrix::{load_matrix, LabelledMatrix};
use mofs_core::interpret::contribution::{shapley_for_model, ContributionOptions};
use mofs_core::interpret::{compare_weight_schemes, compute_weights, topsis_rank, topsis_scores, ObjectiveMatrix, WeightScheme};
use mofs_core::models::train;
use mofs_core::moea::{dominates, non_dominated_sort, run_detailed, GaConfig};
use mofs_core::objectives::{equalised_odds, statistical_parity, vif_score, Evaluator, Objective, DEFAULT_VIF_CAP};
use mofs_core::pipeline::{run_pipeline, PipelineConfig};
use mofs_core::synth::{credit_like_csv, credit_spec, separable_csv, separable_spec, CREDIT_ROWS};
use mofs_core::{read_csv, stratified_split, ClassifierKind, CsvSpec, Direction, FeatureMask, DIRECTIONS};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> LabelledMatrix {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    load_matrix(&path).expect("fixture")
}

/// Published objective weights in column order, rounded as printed.
const DIABETES_WEIGHTS: [f64; 6] = [0.1973, 0.1588, 0.165, 0.1904, 0.1517, 0.1367];
const GERMAN_WEIGHTS: [f64; 6] = [0.17503, 0.15536, 0.15542, 0.20135, 0.15368, 0.15916];

fn check_weights(name: &str, expected: [f64; 6], order: [Objective; 6], budget: Duration) -> Outcome {
    let start = Instant::now();
    let lm = fixture(name);
    let w = compute_weights(&lm.matrix, &DIRECTIONS, &WeightScheme::RangeOverStd).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(w.rank_of_objectives == order, "objective order {:?}", w.rank_of_objectives);
    let worst = w.values.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(worst <= 0.005, "max weight deviation {worst:.5}");
    ensure!(elapsed < budget, "took {elapsed:?}");
    Ok(format!("{} solutions, max deviation {worst:.5}, {elapsed:?}", lm.matrix.len()))
}

fn criterion_1() -> Outcome {
    use Objective::*;
    check_weights(
        "diabetes_front.csv",
        DIABETES_WEIGHTS,
        [SubsetSize, Vif, F1Score, BalancedAccuracy, StatisticalParity, EqualisedOdds],
        Duration::from_secs(1),
    )
}

fn criterion_2() -> Outcome {
    use Objective::*;
    let detail = check_weights(
        "german_front.csv",
        GERMAN_WEIGHTS,
        [Vif, SubsetSize, EqualisedOdds, F1Score, BalancedAccuracy, StatisticalParity],
        Duration::from_secs(1),
    )?;
    let lm = fixture("german_front.csv");
    let w = compute_weights(&lm.matrix, &DIRECTIONS, &WeightScheme::RangeOverStd).unwrap();
    ensure!((w.values[3] - 0.20135).abs() <= 0.005, "VIF weight {}", w.values[3]);
    Ok(format!("{detail}, VIF weight {:.5}", w.values[3]))
}

fn criterion_3() -> Outcome {
    let lm = fixture("german_front.csv");
    let table = compare_weight_schemes(&lm.matrix, &DIRECTIONS, &WeightScheme::presets()).map_err(|e| e.to_string())?;
    let mut firsts = Vec::new();
    for column in &table.columns {
        let top = &lm.labels[column.top[0]];
        ensure!(top == "soln3", "{} ranks {top} first", column.scheme);
        firsts.push(format!("{}={top}", column.scheme));
    }
    Ok(firsts.join(" "))
}

fn brute_force_fronts(points: &[Vec<f64>], dirs: &[Direction]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i], dirs)))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..200 {
        let n = rng.gen_range(1..=60);
        // A coarse grid forces ties and duplicates.
        let levels = rng.gen_range(2..=6);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..6).map(|_| rng.gen_range(0..levels) as f64).collect())
            .collect();
        let dirs: Vec<Direction> = (0..6).map(|_| if rng.gen() { Direction::Max } else { Direction::Min }).collect();
        let fast = non_dominated_sort(&points, &dirs);
        let slow = brute_force_fronts(&points, &dirs);
        ensure!(fast == slow, "case {case}: fronts differ");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("200 sets identical, {elapsed:?}"))
}

fn criterion_5() -> Outcome {
    // Benefit column, cost column; weights 0.6/0.4.
    let rows = vec![[2.0, 3.0], [4.0, 1.0], [1.0, 2.0]];
    let t = topsis_scores(&rows, &[Direction::Max, Direction::Min], &[0.6, 0.4]);
    let expected = [0.2791745113185196, 1.0, 0.2079915965134781];
    for (got, want) in t.scores.iter().zip(expected) {
        ensure!((got - want).abs() < 1e-9, "score {got} vs {want}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<[f64; 6]> = (0..25)
        .map(|_| {
            [
                rng.gen_range(1..15) as f64,
                rng.gen_range(0.5..0.8),
                rng.gen_range(0.3..0.9),
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.6..1.0),
                rng.gen_range(0.3..1.0),
            ]
        })
        .collect();
    let matrix = ObjectiveMatrix::from_rows(rows).unwrap();
    let raw: Vec<f64> = (0..6).map(|_| rng.gen_range(0.05..1.0)).collect();
    let reference = rank_order(&matrix, &raw);
    for _ in 0..100 {
        let k = rng.gen_range(0.001..1000.0);
        let scaled: Vec<f64> = raw.iter().map(|w| w * k).collect();
        ensure!(rank_order(&matrix, &scaled) == reference, "order changed at scale {k}");
    }
    Ok("oracle within 1e-9, order stable over 100 scalings".into())
}

fn rank_order(matrix: &ObjectiveMatrix, raw: &[f64]) -> Vec<usize> {
    let w = compute_weights(matrix, &DIRECTIONS, &WeightScheme::Custom(raw.to_vec())).unwrap();
    topsis_rank(matrix, &DIRECTIONS, &w).unwrap().order
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let ds = read_csv(separable_csv(300, 6).as_bytes(), "separable", &separable_spec()).map_err(|e| e.to_string())?;
    let m = ds.n_features();
    ensure!(m == 10, "expected 10 features, found {m}");
    let signal = ds.feature_names.iter().position(|n| n == "signal").unwrap();
    let split = stratified_split(&ds, 0.3, 6).map_err(|e| e.to_string())?;
    let evaluator = Evaluator::new(&ds, &split, ClassifierKind::LogisticRegression, DEFAULT_VIF_CAP);

    // Exhaustive oracle over every non-empty mask.
    let all: Vec<(FeatureMask, [f64; 6])> = (1u32..1 << m)
        .map(|bits| {
            let idx: Vec<usize> = (0..m).filter(|i| bits >> i & 1 == 1).collect();
            let mask = FeatureMask::from_indices(m, &idx);
            let o = evaluator.evaluate(&mask).expect("evaluation").to_array();
            (mask, o)
        })
        .collect();
    ensure!(all.len() == 1023, "oracle size {}", all.len());
    let singleton = FeatureMask::singleton(m, signal);
    let signal_obj = all.iter().find(|(k, _)| *k == singleton).unwrap().1;
    ensure!(
        !all.iter().any(|(_, o)| dominates(o, &signal_obj, &DIRECTIONS)),
        "the signal singleton is dominated in the exhaustive front"
    );

    let mut hits = 0;
    for seed in 0..10 {
        let run = run_detailed(&evaluator, &GaConfig::for_features(m, seed), |_| {}).map_err(|e| e.to_string())?;
        let visited: Vec<[f64; 6]> = run.visited.iter().map(|s| s.objectives.to_array()).collect();
        for s in &run.front.solutions {
            let o = s.objectives.to_array();
            let oracle = all.iter().find(|(k, _)| *k == s.mask).unwrap().1;
            ensure!(o == oracle, "seed {seed}: objectives differ from the oracle");
            ensure!(
                !visited.iter().any(|v| dominates(v, &o, &DIRECTIONS)),
                "seed {seed}: a front solution is dominated within the visited set"
            );
        }
        if run.front.solutions.iter().any(|s| s.mask == singleton) {
            hits += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(hits >= 9, "signal singleton in {hits}/10 fronts");
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("signal singleton in {hits}/10 fronts, {elapsed:?}"))
}

fn credit(seed: u64) -> mofs_core::Dataset {
    read_csv(credit_like_csv(CREDIT_ROWS, seed).as_bytes(), "credit", &credit_spec()).unwrap()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let ds = credit(1);
    let cfg = PipelineConfig {
        seed: 1,
        ..Default::default()
    };
    let ga = cfg.ga_config(ds.n_features());
    ensure!(ga.population_size == 22 && ga.max_evaluations == 968, "sizing {ga:?}");
    let out = run_pipeline(&ds, &cfg, |_| {}).map_err(|e| e.to_string())?;
    let distinct: HashSet<_> = out.run.visited.iter().map(|s| s.mask.clone()).collect();
    let count = out.run.front.evaluation_count();
    let elapsed = start.elapsed();
    ensure!(count <= 968 && distinct.len() <= 968, "{count} evaluations, {} distinct", distinct.len());
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("{count} distinct evaluations, {} on the front, {elapsed:?}", out.run.front.len()))
}

fn criterion_8() -> Outcome {
    let groups = [0, 0, 0, 0, 1, 1, 1, 1];
    let pred = [1, 0, 1, 0, 1, 0, 1, 0];
    let sp = statistical_parity(&pred, &groups).unwrap();
    ensure!(sp == 1.0, "statistical parity {sp}");

    let truth = [1, 1, 0, 0, 1, 1, 0, 0];
    let pred = [1, 0, 0, 1, 1, 0, 0, 1];
    let eo = equalised_odds(&truth, &pred, &groups).unwrap();
    ensure!(eo == 1.0, "equalised odds {eo}");

    let mut csv = String::from("a,b,a_copy,g,y\n");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..60 {
        let a: f64 = rng.gen_range(-3.0..3.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        csv.push_str(&format!("{a},{b},{a},{},{}\n", i % 2, u8::from(a + b > 0.0)));
    }
    let spec = CsvSpec {
        target: "y".into(),
        sensitive: "g".into(),
        positive_label: "1".into(),
    };
    let ds = read_csv(csv.as_bytes(), "dup", &spec).unwrap();
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let single = vif_score(&ds, &rows, &[0], DEFAULT_VIF_CAP);
    let dup = vif_score(&ds, &rows, &[0, 2], DEFAULT_VIF_CAP);
    ensure!(single == 0.0, "singleton VIF {single}");
    ensure!(dup == 10.0, "duplicated-column VIF {dup}");
    Ok("SP=1, EO=1, VIF singleton 0, duplicate 10".into())
}

fn criterion_9() -> Outcome {
    let mut csv = String::from("x1,x2,g,y\n");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..600 {
        let x1: f64 = rng.gen_range(-2.0..2.0);
        let x2: f64 = rng.gen_range(0.0..5.0);
        let z = 1.2 * x1 - 0.7 * (x2 - 2.5);
        let y = u8::from(rng.gen::<f64>() < 1.0 / (1.0 + (-z).exp()));
        csv.push_str(&format!("{x1},{x2},{},{y}\n", i % 2));
    }
    let spec = CsvSpec {
        target: "y".into(),
        sensitive: "g".into(),
        positive_label: "1".into(),
    };
    let ds = read_csv(csv.as_bytes(), "additive", &spec).unwrap();
    let split = stratified_split(&ds, 0.3, 9).unwrap();
    let model = train(&ds, &split, &[0, 1], ClassifierKind::LogisticRegression).map_err(|e| e.to_string())?;
    let mofs_core::models::ModelParams::LogisticRegression(p) = &model.params else {
        return Err("expected a logistic model".into());
    };
    let eval: Vec<usize> = split.test.iter().copied().take(200).collect();
    let opts = ContributionOptions {
        samples: 500,
        seed: 9,
        ..Default::default()
    };
    let c = shapley_for_model(&model, &ds, &split.train, &eval, &opts).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for col in 0..2 {
        // Exact attribution of a linear log-odds model against a background
        // set: slope times the deviation from the background mean.
        let slope = p.weights[col] / p.scales[col];
        let mean = split.train.iter().map(|&r| ds.value(r, col)).sum::<f64>() / split.train.len() as f64;
        let exact = eval.iter().map(|&r| (slope * (ds.value(r, col) - mean)).abs()).sum::<f64>() / eval.len() as f64;
        let rel = (c.values[col] - exact).abs() / exact;
        worst = worst.max(rel);
        ensure!(rel < 0.1, "feature {col}: {} vs exact {exact}", c.values[col]);
    }
    Ok(format!("max relative error {:.4} at 500 samples", worst))
}

fn criterion_10() -> Outcome {
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..5 {
        let ds = credit(100 + seed);
        let cfg = PipelineConfig {
            seed,
            ..Default::default()
        };
        let out = run_pipeline(&ds, &cfg, |_| {}).map_err(|e| e.to_string())?;
        let base = out.report.baseline.as_ref().unwrap().objectives;
        let better = out
            .run
            .front
            .solutions
            .iter()
            .filter(|s| {
                s.objectives.statistical_parity > base.statistical_parity && s.objectives.equalised_odds > base.equalised_odds
            })
            .count();
        if better > 0 {
            wins += 1;
        }
        lines.push(format!("seed {seed}: {better}/{}", out.run.front.len()));
    }
    ensure!(wins >= 4, "{wins}/5 seeds ({})", lines.join(", "));
    Ok(format!("{wins}/5 seeds ({})", lines.join(", ")))
}

fn criterion_11() -> Outcome {
    let dir = std::env::temp_dir().join(format!("mofs-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let data = dir.join("credit.csv");
    std::fs::write(&data, credit_like_csv(CREDIT_ROWS, 11)).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out: PathBuf = dir.join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_mofs"))
            .args(["run", "--data"])
            .arg(&data)
            .args(["--target", "credit_risk", "--sensitive", "Sex", "--positive", "good", "--classifier", "lr", "--seed", "7", "--out"])
            .arg(&out)
            .env("RUST_LOG", "warn")
            .status()
            .map_err(|e| e.to_string())?;
        ensure!(status.success(), "mofs run exited with {status}");
        reports.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure!(reports[0] == reports[1], "report.json differs between runs");
    Ok(format!("{} identical bytes", reports[0].len()))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 11] = [
        (1, "range/std weights on the Diabetes front", criterion_1),
        (2, "range/std weights on the German credit front", criterion_2),
        (3, "soln3 first under every weight scheme", criterion_3),
        (4, "non-dominated sort matches brute force", criterion_4),
        (5, "TOPSIS oracle and scale invariance", criterion_5),
        (6, "front validity against the exhaustive oracle", criterion_6),
        (7, "evaluation budget at German credit scale", criterion_7),
        (8, "fairness and VIF identities", criterion_8),
        (9, "Monte-Carlo Shapley on an additive model", criterion_9),
        (10, "fair solutions beat the drop-sensitive baseline", criterion_10),
        (11, "byte-identical reports from the CLI", criterion_11),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {id}: {name} ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id}: {name} ({detail})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
