use std::sync::Arc;
use std::time::{Duration, Instant};

use irl_core::advice::{run_episode, AgentRngs, LoopSettings, StepRecord};
use irl_core::{
    Action, AdviceConfig, AdviceInbox, AdviceKind, AdviceSource, CommandClass, Dictionary, GridState, Heading,
    HumanTrainer, Hyperparams, QTable, RewardClass, Scenario, DEFAULT_STEP_CAP,
};
use irl_live::{Command, SessionConfig, SessionError, SessionManager, Status};

fn manager() -> SessionManager {
    SessionManager::new(Arc::new(Dictionary::default_bilingual()))
}

fn cfg(interval_ms: u64, seed: u64) -> SessionConfig {
    SessionConfig { step_interval_ms: interval_ms, seed, ..SessionConfig::default() }
}

fn wait_for(mut cond: impl FnMut() -> bool) {
    let deadline = Instant::now() + Duration::from_secs(20);
    while !cond() {
        assert!(Instant::now() < deadline, "timed out");
        std::thread::sleep(Duration::from_millis(2));
    }
}

fn wait_finished(mgr: &SessionManager, id: u64) {
    wait_for(|| mgr.state(id).unwrap().status == Status::Finished);
}

#[tokio::test]
async fn start_publishes_initial_snapshot() {
    let mgr = manager();
    let id = mgr.start(cfg(10_000, 1)).unwrap();
    let s = mgr.state(id).unwrap();
    assert_eq!(s.status, Status::Running);
    assert_eq!(s.step, 0);
    assert_eq!(s.episode, 0);
    assert_eq!(s.cumulative_reward, 0.0);
    assert_eq!(s.agent_pose, GridState::new(0, 0, Heading::North, irl_core::Altitude::DEFAULT));
    assert!(matches!(mgr.start(cfg(10, 2)), Err(SessionError::AlreadyActive(x)) if x == id));
    mgr.control(id, Command::Stop).await.unwrap();
}

#[tokio::test]
async fn human_policy_advice_overrides_next_action() {
    let mgr = manager();
    let id = mgr.start(cfg(150, 3)).unwrap();
    let ack = mgr.post_advice(id, AdviceKind::Policy, "go left").unwrap();
    assert_eq!(ack.parsed_class, CommandClass::Action(Action::GoLeft));
    assert_eq!(ack.distance, 0);
    assert!(!ack.superseded);

    wait_for(|| !mgr.advice_log(id).unwrap().is_empty());
    let log = mgr.advice_log(id).unwrap();
    assert_eq!(log.len(), 1);
    let event = &log[0].event;
    assert_eq!(event.source, AdviceSource::Human);
    assert_eq!(event.kind, AdviceKind::Policy);
    let trace = mgr.episode_trace(id).unwrap();
    let rec = trace.iter().find(|r| r.step == event.step).expect("advised step in trace");
    assert_eq!(rec.action, Action::GoLeft);
    assert_eq!(rec.policy_advice.as_ref(), Some(event));
    mgr.control(id, Command::Stop).await.unwrap();
}

#[tokio::test]
async fn human_reward_advice_is_accent_insensitive() {
    let mgr = manager();
    let id = mgr.start(cfg(150, 4)).unwrap();
    let ack = mgr.post_advice(id, AdviceKind::Reward, "muy mal").unwrap();
    assert_eq!(ack.parsed_class, CommandClass::Reward(RewardClass::VeryBad));

    wait_for(|| !mgr.advice_log(id).unwrap().is_empty());
    let event = mgr.advice_log(id).unwrap()[0].event.clone();
    let trace = mgr.episode_trace(id).unwrap();
    let rec = trace.iter().find(|r| r.step == event.step).unwrap();
    assert_eq!(rec.reward, -10.0);
    assert!(rec.reward_advice.is_some());
    assert!(rec.policy_advice.is_none());

    let ack = mgr.post_advice(id, AdviceKind::Reward, "PERFECTÓ").unwrap();
    assert_eq!(ack.parsed_class, CommandClass::Reward(RewardClass::Perfect));
    mgr.control(id, Command::Stop).await.unwrap();
}

#[tokio::test]
async fn newest_advice_wins() {
    let mgr = manager();
    let id = mgr.start(cfg(300, 5)).unwrap();
    assert!(!mgr.post_advice(id, AdviceKind::Policy, "go left").unwrap().superseded);
    assert!(mgr.post_advice(id, AdviceKind::Policy, "derecha").unwrap().superseded);

    wait_for(|| !mgr.advice_log(id).unwrap().is_empty());
    std::thread::sleep(Duration::from_millis(400));
    let log = mgr.advice_log(id).unwrap();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].event.parsed_class, CommandClass::Action(Action::GoRight));
    mgr.control(id, Command::Stop).await.unwrap();
}

#[tokio::test]
async fn empty_advice_is_rejected() {
    let mgr = manager();
    let id = mgr.start(cfg(10_000, 5)).unwrap();
    assert!(matches!(mgr.post_advice(id, AdviceKind::Policy, "  "), Err(SessionError::EmptyPhrase)));
    mgr.control(id, Command::Stop).await.unwrap();
}

#[tokio::test]
async fn pause_freezes_the_session() {
    let mgr = manager();
    let id = mgr.start(cfg(5, 6)).unwrap();
    wait_for(|| mgr.state(id).unwrap().step >= 3);
    assert_eq!(mgr.control(id, Command::Pause).await.unwrap(), Status::Paused);
    let frozen = mgr.state(id).unwrap();
    assert_eq!(frozen.status, Status::Paused);
    std::thread::sleep(Duration::from_millis(60));
    assert_eq!(mgr.state(id).unwrap(), frozen);

    assert!(matches!(mgr.post_advice(id, AdviceKind::Policy, "stop"), Err(SessionError::NotRunning(Status::Paused))));
    assert!(matches!(
        mgr.control(id, Command::Pause).await,
        Err(SessionError::InvalidTransition { from: Status::Paused, command: Command::Pause })
    ));
    assert_eq!(mgr.control(id, Command::Resume).await.unwrap(), Status::Running);
    wait_for(|| {
        let s = mgr.state(id).unwrap();
        s.step > frozen.step || s.status == Status::Finished
    });
    mgr.control(id, Command::Stop).await.unwrap();
}

#[tokio::test]
async fn finished_session_only_accepts_reset_and_stop() {
    let mgr = manager();
    let id = mgr.start(cfg(0, 7)).unwrap();
    wait_finished(&mgr, id);
    for command in [Command::Resume, Command::Pause] {
        assert!(matches!(
            mgr.control(id, command).await,
            Err(SessionError::InvalidTransition { from: Status::Finished, .. })
        ));
    }
    assert!(matches!(mgr.post_advice(id, AdviceKind::Reward, "bien"), Err(SessionError::NotRunning(_))));
    assert_eq!(mgr.control(id, Command::Reset).await.unwrap(), Status::Running);
    mgr.control(id, Command::Stop).await.unwrap();
}

#[tokio::test]
async fn stop_releases_the_session() {
    let mgr = manager();
    let id = mgr.start(cfg(10, 8)).unwrap();
    assert_eq!(mgr.control(id, Command::Stop).await.unwrap(), Status::Finished);
    assert!(matches!(mgr.state(id), Err(SessionError::UnknownSession(_))));
    assert!(matches!(mgr.control(id, Command::Stop).await, Err(SessionError::UnknownSession(_))));
    assert_eq!(mgr.active(), None);
    let next = mgr.start(cfg(10, 8)).unwrap();
    assert_ne!(next, id);
    mgr.control(next, Command::Stop).await.unwrap();
}

/// Replay `episodes` episodes headlessly on one table with an empty inbox.
fn headless(seed: u64, episodes: usize) -> Vec<Vec<StepRecord>> {
    let scenario = Scenario::builtin("open").unwrap();
    let dictionary = Dictionary::default_bilingual();
    let settings = LoopSettings {
        scenario: &scenario,
        dictionary: &dictionary,
        hp: Hyperparams::default(),
        advice: AdviceConfig::NONE,
        step_cap: DEFAULT_STEP_CAP,
    };
    let mut q = QTable::new(&scenario, 0.0);
    let mut rngs = AgentRngs::from_seed(seed);
    let mut trainer = HumanTrainer::new(AdviceInbox::new(), None);
    (0..episodes).map(|_| run_episode(&settings, &mut q, Some(&mut trainer), &mut rngs, true).unwrap().trace).collect()
}

#[tokio::test]
async fn unattended_session_matches_headless_run_across_reset() {
    let seed = 11;
    let expected = headless(seed, 2);
    let mgr = manager();
    let id = mgr.start(cfg(0, seed)).unwrap();
    let mut rx = mgr.subscribe(id).unwrap();

    let mut got = Vec::new();
    for episode in 0..2 {
        let mut last_step = 0;
        loop {
            let s = rx.borrow_and_update().clone();
            assert_eq!(s.episode, episode);
            assert!(s.step >= last_step, "step went backwards");
            last_step = s.step;
            if s.status == Status::Finished {
                break;
            }
            rx.changed().await.unwrap();
        }
        let trace = mgr.episode_trace(id).unwrap();
        let s = mgr.state(id).unwrap();
        assert_eq!(s.step, trace.len());
        assert!((s.cumulative_reward - trace.iter().map(|r| r.reward).sum::<f64>()).abs() < 1e-9);
        assert_eq!(s.agent_pose, trace.last().unwrap().next);
        got.push(trace);
        if episode == 0 {
            assert_eq!(mgr.control(id, Command::Reset).await.unwrap(), Status::Running);
            rx.borrow_and_update();
        }
    }
    assert_eq!(got, expected);
    assert!(mgr.advice_log(id).unwrap().is_empty());
    mgr.control(id, Command::Stop).await.unwrap();
}
