use smbo_cli::{
    aggregate_ranks, derive_seed, read_csv, run_benchmark, shared_design, write_csv, BenchConfig, BenchRow, Budget,
    EngineSettings, OptimizerSpec,
};
use smbo_core::{problem, CriterionSpec, FocusConfig, SurrogateChoice};

fn quick_engine() -> EngineSettings {
    EngineSettings {
        focus: FocusConfig {
            n_restart: 1,
            n_iters: 3,
            n_points: 200,
        },
        refit_interval: 1,
    }
}

fn small_config() -> BenchConfig {
    BenchConfig {
        problems: vec!["sphere2".into()],
        optimizers: vec!["random".into(), "mbo".into()],
        init: 10,
        iters: 10,
        seeds: 3,
        base_seed: 7,
        workers: 1,
        timing: false,
        engine: quick_engine(),
    }
}

fn final_row(problem: &str, optimizer: &str, seed: u64, value: Option<f64>) -> BenchRow {
    BenchRow {
        problem: problem.into(),
        optimizer: optimizer.into(),
        seed,
        eval_index: if value.is_some() { 5 } else { 0 },
        best_so_far: value,
        failure: value.is_none().then(|| "crashed".to_string()),
        wall_seconds: None,
    }
}

#[test]
fn row_count_order_and_monotone_traces() {
    let outcomes = run_benchmark(&small_config()).unwrap();
    assert_eq!(outcomes.len(), 6);
    let rows: Vec<BenchRow> = outcomes.iter().flat_map(|o| o.rows.clone()).collect();
    assert_eq!(rows.len(), 2 * 3 * 20);
    for (k, o) in outcomes.iter().enumerate() {
        assert!(!o.failed);
        let expected_opt = if k < 3 { "random" } else { "mbo" };
        assert!(o
            .rows
            .iter()
            .all(|r| r.optimizer == expected_opt && r.seed == (k % 3) as u64));
        let idx: Vec<usize> = o.rows.iter().map(|r| r.eval_index).collect();
        assert_eq!(idx, (1..=20).collect::<Vec<_>>());
        for w in o.rows.windows(2) {
            assert!(w[1].best_so_far.unwrap() <= w[0].best_so_far.unwrap());
        }
    }
}

#[test]
fn optimizers_share_the_initial_design() {
    let outcomes = run_benchmark(&small_config()).unwrap();
    for seed in 0..3 {
        let random = &outcomes[seed].rows;
        let model = &outcomes[3 + seed].rows;
        // identical first 10 evaluations give identical running minima
        for i in 0..10 {
            assert_eq!(random[i].best_so_far, model[i].best_so_far, "seed {seed}, eval {i}");
        }
    }
    let p = problem("sphere2").unwrap();
    let design = shared_design(&p.space(), "sphere2", 10, 7, 0).unwrap();
    let first = design.points.iter().map(|a| {
        let x: Vec<f64> = a.values().iter().map(|v| v.unwrap().as_f64()).collect();
        p.eval(&x)
    });
    let best = first.fold(f64::INFINITY, f64::min);
    assert_eq!(outcomes[0].rows[9].best_so_far, Some(best));
}

#[test]
fn identical_configs_give_identical_rows() {
    let text = |workers| {
        let mut config = small_config();
        config.workers = workers;
        let rows: Vec<BenchRow> = run_benchmark(&config)
            .unwrap()
            .into_iter()
            .flat_map(|o| o.rows)
            .collect();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf, false).unwrap();
        buf
    };
    let a = text(1);
    assert_eq!(a, text(1));
    assert_eq!(a, text(3));
}

#[test]
fn seeds_are_distinct_streams() {
    assert_ne!(derive_seed(1, "run/a/mbo", 0), derive_seed(1, "run/a/mbo", 1));
    assert_ne!(derive_seed(1, "run/a/mbo", 0), derive_seed(2, "run/a/mbo", 0));
    assert_ne!(derive_seed(1, "run/a/mbo", 0), derive_seed(1, "run/b/mbo", 0));
    assert_eq!(derive_seed(5, "x", 3), derive_seed(5, "x", 3));
}

#[test]
fn csv_round_trip() {
    let rows = vec![
        final_row("ackley5", "mbo:ei", 0, Some(1.25)),
        final_row("ackley5", "random", 0, None),
        BenchRow {
            wall_seconds: Some(0.5),
            ..final_row("rosenbrock5", "mbo", 1, Some(-3.0e-7))
        },
    ];
    for timing in [false, true] {
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf, timing).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        let expected: Vec<BenchRow> = rows
            .iter()
            .cloned()
            .map(|mut r| {
                if !timing {
                    r.wall_seconds = None;
                }
                r
            })
            .collect();
        assert_eq!(back, expected);
    }
    assert!(read_csv("problem,seed\nx,1\n".as_bytes()).is_err());
}

#[test]
fn ranks_two_optimizers() {
    let rows = vec![
        final_row("p", "a", 0, Some(1.0)),
        final_row("p", "b", 0, Some(2.0)),
        final_row("p", "a", 1, Some(0.5)),
        final_row("p", "b", 1, Some(3.0)),
    ];
    let ranks = aggregate_ranks(&rows).unwrap();
    assert_eq!(ranks[0].optimizer, "a");
    assert_eq!(ranks[0].mean_rank, 1.0);
    assert_eq!(ranks[1].mean_rank, 2.0);
    assert_eq!(ranks[1].cells, 2);
}

#[test]
fn ties_share_the_mid_rank() {
    let rows = vec![final_row("p", "a", 0, Some(1.0)), final_row("p", "b", 0, Some(1.0))];
    let ranks = aggregate_ranks(&rows).unwrap();
    assert_eq!(ranks[0].mean_rank, 1.5);
    assert_eq!(ranks[1].mean_rank, 1.5);
}

#[test]
fn ranks_three_optimizers_by_hand() {
    // cell (p,0): a=1, b=3, c=2          -> a 1, b 3, c 2
    // cell (p,1): a=2, b=2, c=failed     -> a 1.5, b 1.5, c 3
    // cell (q,0): a=5, b=4, c=4          -> a 3, b 1.5, c 1.5
    let rows = vec![
        final_row("p", "a", 0, Some(1.0)),
        final_row("p", "b", 0, Some(3.0)),
        final_row("p", "c", 0, Some(2.0)),
        final_row("p", "a", 1, Some(2.0)),
        final_row("p", "b", 1, Some(2.0)),
        final_row("p", "c", 1, None),
        final_row("q", "a", 0, Some(5.0)),
        final_row("q", "b", 0, Some(4.0)),
        final_row("q", "c", 0, Some(4.0)),
    ];
    let ranks = aggregate_ranks(&rows).unwrap();
    let got: Vec<(String, f64)> = ranks.iter().map(|r| (r.optimizer.clone(), r.mean_rank)).collect();
    let want = [("a", 5.5 / 3.0), ("b", 6.0 / 3.0), ("c", 6.5 / 3.0)];
    for ((name, rank), (wname, wrank)) in got.iter().zip(want) {
        assert_eq!(name, wname);
        assert!((rank - wrank).abs() < 1e-12, "{name}: {rank} vs {wrank}");
    }
}

#[test]
fn ranking_uses_the_last_row_of_each_trace() {
    let mut rows = vec![final_row("p", "a", 0, Some(5.0)), final_row("p", "a", 0, Some(0.1))];
    rows.push(final_row("p", "b", 0, Some(1.0)));
    let ranks = aggregate_ranks(&rows).unwrap();
    assert_eq!(ranks[0].mean_rank, 1.0);
    assert!(aggregate_ranks(&rows[..2]).is_err());
}

#[test]
fn optimizer_specs() {
    assert_eq!("random".parse::<OptimizerSpec>().unwrap(), OptimizerSpec::Random);
    let spec: OptimizerSpec = "mbo-rf:lcb:2".parse().unwrap();
    assert_eq!(
        spec,
        OptimizerSpec::Mbo {
            criterion: Some(CriterionSpec::Lcb { lambda: 2.0 }),
            surrogate: SurrogateChoice::Forest
        }
    );
    assert!("mbo:bogus".parse::<OptimizerSpec>().is_err());
    assert!("grid".parse::<OptimizerSpec>().is_err());
}

#[test]
fn budgets() {
    assert_eq!("44d".parse::<Budget>().unwrap().resolve(5), 220);
    assert_eq!("30".parse::<Budget>().unwrap().resolve(5), 30);
    assert!("d".parse::<Budget>().is_err());
}

#[test]
fn unknown_problem_is_an_error() {
    let mut config = small_config();
    config.problems = vec!["nosuch3".into()];
    assert!(run_benchmark(&config).is_err());
}
