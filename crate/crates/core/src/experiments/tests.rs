use approx::assert_abs_diff_eq;

use super::*;
use crate::rl::{train, TrainConfig};

#[test]
fn bootstrap_single_entry() {
    let team = bootstrap_team(&[StermanParams::GENERAL], &mut seed::stream(0, "b", &[])).unwrap();
    assert_eq!(team, [StermanParams::GENERAL; 3]);
    assert!(matches!(bootstrap_team(&[], &mut seed::stream(0, "b", &[])), Err(Error::EmptyRoster)));
}

#[test]
fn bootstrap_frequencies() {
    let roster: Vec<StermanParams> = (0..11)
        .map(|k| StermanParams::new(0.5, 0.5, 0.5, k as f64).unwrap())
        .collect();
    let mut rng = seed::stream(1, "b", &[]);
    let mut counts = [0usize; 11];
    for _ in 0..10_000 {
        for p in bootstrap_team(&roster, &mut rng).unwrap() {
            counts[p.s_prime as usize] += 1;
        }
    }
    let n: f64 = 30_000.0;
    let p = 1.0 / 11.0;
    let sd = (n * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n * p).abs() < 3.0 * sd, "{counts:?}");
    }
    let a = bootstrap_team(&roster, &mut seed::stream(2, "b", &[])).unwrap();
    let b = bootstrap_team(&roster, &mut seed::stream(2, "b", &[])).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noise_injection() {
    let mut rng = seed::stream(3, "n", &[]);
    assert_eq!(inject_noise(7.5, 0.0, &mut rng).unwrap(), 7.5);
    assert_eq!(crate::policies::perturb(2.0, -5.0), 0.0);
    assert!(inject_noise(1.0, -1.0, &mut rng).is_err());
    let n = 100_000;
    let mean = (0..n).map(|_| inject_noise(50.0, 3.0, &mut rng).unwrap() - 50.0).sum::<f64>() / n as f64;
    assert_abs_diff_eq!(mean, 0.0, epsilon = 0.05);
}

#[test]
fn grid_helper() {
    let g = sigma_grid(15.0, 0.5);
    assert_eq!(g.len(), 31);
    assert_eq!(g[0], 0.0);
    assert_eq!(g[30], 15.0);
}

fn untrained(position: usize) -> AgentBundle {
    let env = EnvConfig {
        agent_position: position,
        ..EnvConfig::default()
    };
    let tc = TrainConfig {
        total_env_steps: 0,
        hidden: vec![8, 8, 8],
        ..TrainConfig::default()
    };
    let out = train(&env, &tc).unwrap();
    AgentBundle::new(out.net, out.adam, env, &tc).unwrap()
}

fn small_sweep() -> SweepConfig {
    let mut c = SweepConfig::new(vec![StermanParams::GENERAL], 42);
    c.sigma_grid = vec![0.0];
    c.reps_per_cell = 1;
    for p in 0..4 {
        c.model_based.insert(p, StermanParams::GENERAL);
        c.model_free.insert(p, untrained(p));
    }
    c
}

#[test]
fn sweep_cardinality_and_determinism() {
    let c = small_sweep();
    let a = run_sweep(&c, Execution::Sequential).unwrap();
    assert_eq!(a.len(), 4 * 2);
    assert_eq!(a, run_sweep(&c, Execution::Parallel).unwrap());
    let mut c = c;
    c.sigma_grid = vec![0.0, 2.0, 4.0];
    c.reps_per_cell = 3;
    c.positions = vec![1, 2];
    assert_eq!(run_sweep(&c, Execution::Sequential).unwrap().len(), 3 * 2 * 2 * 3);
}

#[test]
fn missing_agent_is_reported() {
    let mut c = small_sweep();
    c.model_free.remove(&3);
    assert!(matches!(run_sweep(&c, Execution::Sequential), Err(Error::MissingArtifact(_))));
    let mut c = small_sweep();
    c.model_free.insert(2, untrained(1));
    assert!(matches!(run_sweep(&c, Execution::Sequential), Err(Error::MissingArtifact(_))));
}

#[test]
fn distributor_published_row_at_zero_noise() {
    let mut c = small_sweep();
    c.positions = vec![2];
    c.kinds = vec![AgentKind::ModelBased];
    c.baseline_seat = BaselineSeat::Params(StermanParams::GENERAL);
    c.model_based.insert(2, StermanParams::new(0.747, 0.094, 0.784, 73.721).unwrap());
    let r = run_sweep(&c, Execution::Sequential).unwrap();
    assert_abs_diff_eq!(r[0].reduction_pct, -67.68, epsilon = 1.0);
}

#[test]
fn paired_arms_share_teammate_noise() {
    let mut c = small_sweep();
    c.sigma_grid = vec![0.0, 3.0];
    c.roster = (0..5).map(|k| StermanParams::new(0.3, 0.3, 0.3, 10.0 + k as f64).unwrap()).collect();
    for kind in AgentKind::ALL {
        for p in 0..4 {
            for rep in 0..3 {
                let o = run_rep(&c, 1, p, kind, rep).unwrap();
                for i in (0..4).filter(|i| *i != p) {
                    assert_eq!(o.agent_fingerprints[i], o.baseline_fingerprints[i]);
                }
                let rec = &o.record;
                let recomputed = 100.0 * (rec.cost_with_agent - rec.cost_baseline) / rec.cost_baseline;
                assert!((recomputed - rec.reduction_pct).abs() <= 1e-9 * recomputed.abs().max(1.0));
            }
        }
    }
}

#[test]
fn zero_noise_single_roster_has_no_variance() {
    let mut c = small_sweep();
    c.reps_per_cell = 5;
    let rows = summarize(&run_sweep(&c, Execution::Sequential).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.stderr == 0.0 && r.n == 5), "{rows:?}");
}

fn row(sigma: f64, position: usize, kind: AgentKind, mean: f64) -> SummaryRow {
    SummaryRow {
        sigma,
        position,
        agent_kind: kind,
        mean_reduction_pct: mean,
        stderr: 0.0,
        n: 1,
    }
}

fn record(sigma: f64, reduction_pct: f64) -> SweepRecord {
    SweepRecord {
        sigma,
        position: 0,
        agent_kind: AgentKind::ModelBased,
        rep: 0,
        seed: 0,
        cost_with_agent: 100.0 + reduction_pct,
        cost_baseline: 100.0,
        reduction_pct,
    }
}

#[test]
fn summary_means() {
    assert!(matches!(summarize(&[]), Err(Error::EmptyInput)));
    let s = summarize(&[record(0.0, -40.0)]).unwrap();
    assert_eq!(s[0].mean_reduction_pct, -40.0);
    let s = summarize(&[record(0.0, -30.0), record(0.0, -50.0), record(1.0, 5.0)]).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].mean_reduction_pct, -40.0);
    assert_eq!(s[0].n, 2);
    assert_abs_diff_eq!(s[0].stderr, 10.0, epsilon = 1e-12);
}

#[test]
fn advantage_examples() {
    let summary = vec![
        row(0.0, 0, AgentKind::ModelBased, -46.0),
        row(0.0, 0, AgentKind::ModelFree, -34.0),
        row(15.0, 1, AgentKind::ModelBased, 40.0),
        row(15.0, 1, AgentKind::ModelFree, -16.0),
    ];
    let adv = relative_advantage(&summary).unwrap();
    assert_eq!(adv[0].position, 0);
    assert_abs_diff_eq!(adv[0].advantage_pct_points, 12.0, epsilon = 1e-12);
    assert_eq!(adv[1].position, 1);
    assert_abs_diff_eq!(adv[1].advantage_pct_points, -56.0, epsilon = 1e-12);
    let same = vec![row(0.0, 2, AgentKind::ModelBased, -5.0), row(0.0, 2, AgentKind::ModelFree, -5.0)];
    assert_eq!(relative_advantage(&same).unwrap()[0].advantage_pct_points, 0.0);
    assert!(matches!(
        relative_advantage(&summary[..3]),
        Err(Error::UnmatchedCell(_))
    ));
}

#[test]
fn crossover_detection() {
    let mut summary = Vec::new();
    for (k, s) in [0.0, 1.0, 2.0, 3.0].into_iter().enumerate() {
        summary.push(row(s, 1, AgentKind::ModelBased, -50.0 + 30.0 * k as f64));
        summary.push(row(s, 1, AgentKind::ModelFree, -30.0));
    }
    assert_eq!(crossover_sigma(&summary, 1), Some(1.0));
    assert_eq!(crossover_sigma(&summary, 0), None);
}

#[test]
fn spearman_values() {
    assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 25.0, 90.0]), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0, epsilon = 1e-12);
    // tied ranks: x ranks (1,2,3,4), y ranks (1,2.5,2.5,4)
    assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 5.0, 5.0, 9.0]), 0.9486832980505138, epsilon = 1e-12);
    assert!(spearman(&[1.0, 2.0], &[3.0, 3.0]).is_nan());
}

#[test]
fn lineplot_contents() {
    assert!(matches!(render_lineplot_svg(&[]), Err(Error::EmptyInput)));
    let summary = vec![
        row(0.0, 1, AgentKind::ModelBased, -40.0),
        row(1.0, 1, AgentKind::ModelBased, -20.0),
        row(0.0, 1, AgentKind::ModelFree, -30.0),
        row(1.0, 1, AgentKind::ModelFree, -35.0),
    ];
    let svg = render_lineplot_svg(&summary).unwrap();
    let polylines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<polyline")).collect();
    assert_eq!(polylines.len(), 2);
    for p in polylines {
        let points = p.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), 2);
    }
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    render_lineplot(&summary, &a).unwrap();
    render_lineplot(&summary, &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn csv_round_trips() {
    let recs = vec![record(0.5, -12.25), record(1.0, 3.5)];
    let mut buf = Vec::new();
    write_sweep_csv(&recs, &mut buf).unwrap();
    assert!(String::from_utf8(buf.clone())
        .unwrap()
        .starts_with("sigma,position,agent_kind,rep,seed,cost_with_agent,cost_baseline,reduction_pct\n"));
    assert_eq!(read_sweep_csv(&buf[..]).unwrap(), recs);
    let summary = summarize(&recs).unwrap();
    let mut buf = Vec::new();
    write_summary_csv(&summary, &mut buf).unwrap();
    assert!(String::from_utf8(buf.clone())
        .unwrap()
        .starts_with("sigma,position,agent_kind,mean_reduction_pct,stderr,n\n"));
    assert_eq!(read_summary_csv(&buf[..]).unwrap(), summary);
}
