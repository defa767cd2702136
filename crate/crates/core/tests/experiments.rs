use std::fs;
use std::path::Path;
use std::sync::Arc;

use irl_core::advice::{run_episode, AgentRngs, LoopSettings};
use irl_core::experiment::{
    read_episodes, run_condition, run_condition_with, summarize, train_trainer, Resources, TrainerOptions, ADVICE_FILE,
    CONFIG_FILE, EPISODES_FILE, SUMMARY_FILE,
};
use irl_core::{
    AdviceKind, Condition, Dictionary, Error, ExperimentConfig, QTable, ReportFormat, RunSummary, Scenario,
    SimulatedTrainer, Trainer,
};

fn small(scenario: &str, condition: Condition, agents: usize, episodes: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::standard(scenario, condition, None);
    cfg.n_agents = agents;
    cfg.n_episodes = episodes;
    cfg.master_seed = seed;
    cfg
}

fn trainer_for(scenario: &Scenario) -> QTable {
    let opts = TrainerOptions { seed: 5, extend_up_to: Some(300), ..TrainerOptions::default() };
    let t = train_trainer(scenario, &opts).unwrap();
    assert!(t.rollout.reached_goal);
    t.table
}

fn without_wall_time(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn repeated_small_run_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("open", Condition::Autonomous, 2, 3, 42);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_condition(&cfg, Some(&a)).unwrap();
    run_condition(&cfg, Some(&b)).unwrap();
    assert_eq!(without_wall_time(&a.join(EPISODES_FILE)), without_wall_time(&b.join(EPISODES_FILE)));
    assert_eq!(fs::read(a.join(ADVICE_FILE)).unwrap(), fs::read(b.join(ADVICE_FILE)).unwrap());
    assert_eq!(fs::read(a.join(CONFIG_FILE)).unwrap(), fs::read(b.join(CONFIG_FILE)).unwrap());

    let header = fs::read_to_string(a.join(EPISODES_FILE)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "run_id,condition,scenario,agent,episode,steps,total_reward,terminal,\
         policy_advice_count,reward_advice_count,wall_time_s"
    );
    assert_eq!(read_episodes(a.join(EPISODES_FILE)).unwrap().len(), 6);
    assert!(fs::read(a.join(ADVICE_FILE)).unwrap().is_empty());
}

#[test]
fn summarize_recomputes_written_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::builtin("obstacles").unwrap();
    let trainer = dir.path().join("trainer.json");
    trainer_for(&scenario).save(&trainer).unwrap();

    let mut dirs = Vec::new();
    for c in Condition::ALL {
        let mut cfg = small("obstacles", c, 4, 5, 9);
        if c != Condition::Autonomous {
            cfg.trainer_table = Some(trainer.clone());
        }
        let out = dir.path().join(c.name());
        let run = run_condition(&cfg, Some(&out)).unwrap();
        let written: RunSummary = serde_json::from_str(&fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
        assert_eq!(written, run.summary);
        dirs.push(out);
    }

    let report = summarize(&dirs).unwrap();
    assert_eq!(report.runs.len(), 4);
    assert_eq!(report.orderings.len(), 1);
    for (dir, summary) in dirs.iter().zip(&report.runs) {
        let written: RunSummary = serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_FILE)).unwrap()).unwrap();
        assert_eq!(&written, summary);
    }
    let table = report.render(ReportFormat::Table).unwrap();
    assert!(table.contains("obstacles: policy highest = "));
    assert!(table.contains("obstacles: both lowest std dev = "));
    let structured: serde_json::Value =
        serde_json::from_str(&report.render(ReportFormat::Structured).unwrap()).unwrap();
    assert_eq!(structured["runs"].as_array().unwrap().len(), 4);
}

#[test]
fn summary_matches_independent_aggregation() {
    let run = run_condition(&small("open", Condition::Autonomous, 6, 7, 3), None).unwrap();
    let s = &run.summary;
    let per_agent: Vec<f64> =
        (0..6).map(|a| run.rows.iter().filter(|r| r.agent == a).map(|r| r.total_reward).sum::<f64>() / 7.0).collect();
    let mean = per_agent.iter().sum::<f64>() / 6.0;
    let var = per_agent.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
    assert!((s.mean_total_reward - mean).abs() < 1e-9);
    assert!((s.std_total_reward - var.sqrt()).abs() < 1e-9);
    for (got, want) in s.per_agent_totals.iter().zip(&per_agent) {
        assert!((got - want).abs() < 1e-9);
    }
    for e in 0..7 {
        let want = run.rows.iter().filter(|r| r.episode == e).map(|r| r.total_reward).sum::<f64>() / 6.0;
        assert!((s.per_episode_mean[e] - want).abs() < 1e-9);
    }
    let goals = run.rows.iter().filter(|r| r.terminal).count() as f64 / run.rows.len() as f64;
    assert!((s.goal_rate - goals).abs() < 1e-12);
    let wall: f64 = run.rows.iter().map(|r| r.wall_time_s).sum();
    assert!((s.wall_time_s - wall).abs() < 1e-9);
    assert_eq!(s.run_id, "open-autonomous-s3");
}

#[test]
fn permuting_agent_seeds_permutes_results() {
    // master seeds 4 and 5 give agent seeds {4, 5, 6, 7} and {5, 4, 7, 6}.
    let a = run_condition(&small("obstacles", Condition::Autonomous, 4, 4, 4), None).unwrap();
    let b = run_condition(&small("obstacles", Condition::Autonomous, 4, 4, 5), None).unwrap();
    let mut ta = a.summary.per_agent_totals.clone();
    let mut tb = b.summary.per_agent_totals.clone();
    assert_eq!(ta[0], tb[1]);
    assert_eq!(ta[2], tb[3]);
    ta.sort_by(f64::total_cmp);
    tb.sort_by(f64::total_cmp);
    assert_eq!(ta, tb);
}

#[test]
fn incomplete_runs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_condition(&small("open", Condition::Autonomous, 2, 2, 1), Some(&out)).unwrap();

    let csv = fs::read_to_string(out.join(EPISODES_FILE)).unwrap();
    let truncated: Vec<&str> = csv.lines().take(3).collect();
    fs::write(out.join(EPISODES_FILE), truncated.join("\n") + "\n").unwrap();
    assert!(matches!(summarize(&[&out]), Err(Error::IncompleteRun { .. })));

    fs::remove_file(out.join(EPISODES_FILE)).unwrap();
    assert!(matches!(summarize(&[&out]), Err(Error::IncompleteRun { .. })));
    assert!(summarize::<&Path>(&[]).is_err());
}

#[test]
fn advised_conditions_need_a_trainer() {
    for c in [Condition::Policy, Condition::Reward, Condition::Both] {
        assert!(run_condition(&small("open", c, 1, 1, 0), None).is_err());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.json");
    trainer_for(&Scenario::builtin("open").unwrap()).save(&path).unwrap();
    let mut cfg = small("obstacles", Condition::Policy, 1, 1, 0);
    cfg.trainer_table = Some(path);
    assert!(matches!(run_condition(&cfg, None), Err(Error::ScenarioMismatch { .. })));
}

#[test]
fn simulated_policy_advice_follows_the_trainer_table() {
    let scenario = Scenario::builtin("obstacles").unwrap();
    let table = Arc::new(trainer_for(&scenario));
    let dictionary = Arc::new(Dictionary::default_bilingual());
    let cfg = small("obstacles", Condition::Policy, 1, 10, 0);
    let settings = LoopSettings {
        scenario: &scenario,
        dictionary: &dictionary,
        hp: cfg.hp,
        advice: cfg.advice,
        step_cap: cfg.step_cap,
    };
    let mut trainer = SimulatedTrainer::new(table.clone(), dictionary.clone());
    let mut q = QTable::new(&scenario, 0.0);
    let mut rngs = AgentRngs::from_seed(77);
    let mut advised = 0;
    for _ in 0..10 {
        let log = run_episode(&settings, &mut q, Some(&mut trainer as &mut dyn Trainer), &mut rngs, true).unwrap();
        for rec in &log.trace {
            assert!(rec.reward_advice.is_none());
            let Some(ev) = &rec.policy_advice else {
                assert_eq!(rec.action, rec.agent_action);
                continue;
            };
            advised += 1;
            assert_eq!(ev.kind, AdviceKind::Policy);
            assert_eq!(ev.distance, 0);
            let action = ev.parsed_class.as_action().unwrap();
            assert_eq!(rec.action, action);
            let idx = scenario.state_index(&rec.state).unwrap();
            assert!(table.argmax_set(idx).contains(&action));
        }
    }
    assert!(advised > 0);
}

#[test]
fn corrupted_trainer_phrases_still_parse() {
    let scenario = Arc::new(Scenario::builtin("open").unwrap());
    let table = Arc::new(trainer_for(&scenario));
    let res = Resources { scenario, dictionary: Arc::new(Dictionary::default_bilingual()), trainer: Some(table) };
    let mut cfg = small("open", Condition::Both, 2, 5, 8);
    cfg.corruption_rate = 1.0;
    let run = run_condition_with(&cfg, &res).unwrap();
    let records = run.advice_records();
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r.event.distance <= 1));
    assert!(records.iter().filter(|r| r.event.distance == 1).count() * 2 > records.len());
}

#[test]
fn trainer_table_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::builtin("obstacles").unwrap();
    let table = trainer_for(&scenario);
    let path = dir.path().join("t.json");
    table.save(&path).unwrap();
    let back = QTable::load_for(&path, &scenario).unwrap();
    assert_eq!(back, table);
    assert!(back.values().iter().zip(table.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(QTable::load_for(&path, &Scenario::builtin("open").unwrap()).is_err());
}
