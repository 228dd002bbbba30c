//! End-to-end acceptance checks. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion; the process fails if any criterion fails.
//!
//! Criteria 7 to 10 train five seeds per scenario at reduced scale, which takes a while
//! on a single core.

use std::time::Instant;

use qqn_core::qnet::{Head, NetShape, QuadraticQNet};
use qqn_core::reward::{terminal_penalty, total_reward, RewardInputs};
use qqn_core::trainer::{evaluate_checkpoint, EvalSummary, ReplayBuffer, Transition};
use qqn_core::vehicle::{idm_acceleration, no_leader_acceleration, IdmParams};
use qqn_core::world::obs_dim;
use qqn_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = fn() -> Verdict;
type RunCheck = fn(&[Run]) -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn random_obs(s: Scenario, rng: &mut impl Rng) -> Observation<f64> {
    Observation((0..obs_dim(s)).map(|_| rng.random_range(-2.0..2.0)).collect())
}

fn bound(s: Scenario) -> f64 {
    ScenarioConfig::<f64>::for_scenario(s).action_bound()
}

fn random_net(s: Scenario, shape: NetShape, rng: &mut ChaCha8Rng) -> QuadraticQNet<f64> {
    QuadraticQNet::new(s, bound(s), shape, rng)
}

// ---------------------------------------------------------------- criterion 1

fn loss(net: &QuadraticQNet<f64>, s: &[f64], a: &[f64], y: &[f64], freeze: bool) -> f64 {
    net.loss_and_gradients(s, a, y, freeze).unwrap().loss
}

fn c1_gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let shape = NetShape {
        value_hidden: 7,
        action_hidden: 5,
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let s = Scenario::ALL[trial % 2];
        let net = random_net(s, shape, &mut rng);
        let b = 1 + trial % 4;
        let states: Vec<f64> = (0..b).flat_map(|_| random_obs(s, &mut rng).0).collect();
        let range = ScenarioConfig::<f64>::for_scenario(s).action_range();
        let actions: Vec<f64> = (0..b).map(|_| rng.random_range(range.lo..range.hi)).collect();
        // targets within a unit of the current Q keep the loss O(1), so finite-difference
        // round-off stays well below the tolerance
        let targets: Vec<f64> = (0..b)
            .map(|i| {
                let obs = Observation(states[i * obs_dim(s)..(i + 1) * obs_dim(s)].to_vec());
                net.q_value(&obs, actions[i]).unwrap() + rng.random_range(-1.0..1.0)
            })
            .collect();
        for freeze in [false, true] {
            let grads = net.loss_and_gradients(&states, &actions, &targets, freeze).unwrap().grads;
            for head in Head::ALL {
                let g = grads.get(head);
                for k in 0..g.len() {
                    let numeric = if freeze && head.is_action_head() {
                        0.0
                    } else {
                        let mut p = net.clone();
                        p.net_mut(head).params_mut()[k] += h;
                        let up = loss(&p, &states, &actions, &targets, freeze);
                        p.net_mut(head).params_mut()[k] -= 2.0 * h;
                        let down = loss(&p, &states, &actions, &targets, freeze);
                        (up - down) / (2.0 * h)
                    };
                    let err = (g[k] - numeric).abs() / g[k].abs().max(numeric.abs()).max(1e-6);
                    worst = worst.max(err);
                }
            }
        }
    }
    verdict(worst < 1e-4, format!("max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 2

fn c2_greedy_optimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let step = 1e-3;
    let (mut worst_excess, mut worst_dist): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    let mut nets = [0, 1].map(|k| random_net(Scenario::ALL[k], NetShape::default(), &mut rng));
    for i in 0..1000 {
        let s = Scenario::ALL[i % 2];
        if i % 20 < 2 {
            nets[i % 2] = random_net(s, NetShape::default(), &mut rng);
        }
        let net = &nets[i % 2];
        let obs = random_obs(s, &mut rng);
        let heads = net.heads(&obs).unwrap();
        let q_star = net.q_value(&obs, heads.mu).unwrap();
        let range = ScenarioConfig::<f64>::for_scenario(s).action_range();
        let n = ((range.hi - range.lo) / step).round() as usize;
        let (mut best_a, mut best_q) = (range.lo, f64::NEG_INFINITY);
        for j in 0..=n {
            let a = range.lo + j as f64 * step;
            let d = heads.mu - a;
            let q = heads.m * d * d + heads.v;
            if q > best_q {
                best_q = q;
                best_a = a;
            }
        }
        worst_excess = worst_excess.max(best_q - q_star);
        worst_dist = worst_dist.max((best_a - heads.mu).abs());
    }
    verdict(
        worst_excess <= 1e-9 && worst_dist <= step,
        format!("max Q excess {worst_excess:.2e}, max |argmax - mu| {worst_dist:.2e}"),
    )
}

// ---------------------------------------------------------------- criterion 3

fn c3_quadratic_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = NetShape {
        value_hidden: 16,
        action_hidden: 8,
    };
    let (mut worst_gap, mut max_m): (f64, f64) = (0.0, f64::NEG_INFINITY);
    let mut nets = [0, 1].map(|k| random_net(Scenario::ALL[k], shape, &mut rng));
    for i in 0..100_000 {
        let s = Scenario::ALL[i % 2];
        if i % 500 < 2 {
            nets[i % 2] = random_net(s, shape, &mut rng);
        }
        let net = &nets[i % 2];
        let obs = random_obs(s, &mut rng);
        let heads = net.heads(&obs).unwrap();
        let q = net.q_value(&obs, heads.mu).unwrap();
        worst_gap = worst_gap.max((q - heads.v).abs());
        max_m = max_m.max(heads.m);
    }
    verdict(
        worst_gap <= 1e-10 && max_m <= 0.0,
        format!("max |Q(s,mu)-V| {worst_gap:.2e}, max M {max_m:.3e}"),
    )
}

// ---------------------------------------------------------------- criterion 4

fn c4_idm() -> Verdict {
    let p = IdmParams::with_desired_speed(30.0);
    let free = idm_acceleration(30.0, 0.0, 1e6, &p).unwrap();
    let standstill = idm_acceleration(0.0, 0.0, p.s0, &p).unwrap();
    let no_leader = no_leader_acceleration(30.0, &p);
    let mut monotone = true;
    let speeds: Vec<f64> = (0..=30).map(|i| i as f64).collect();
    let gaps: Vec<f64> = (1..=40).map(|i| i as f64 * 2.5).collect();
    let dvs: Vec<f64> = (-10..=10).map(|i| i as f64).collect();
    for &v in &speeds {
        for &dv in &dvs {
            for w in gaps.windows(2) {
                let (a0, a1) = (idm_acceleration(v, dv, w[0], &p).unwrap(), idm_acceleration(v, dv, w[1], &p).unwrap());
                monotone &= a1 >= a0;
            }
        }
        for &s in &gaps {
            for w in dvs.windows(2) {
                let (a0, a1) = (idm_acceleration(v, w[0], s, &p).unwrap(), idm_acceleration(v, w[1], s, &p).unwrap());
                monotone &= a1 <= a0;
            }
        }
    }
    for &s in &gaps {
        for &dv in &dvs {
            for w in speeds.windows(2) {
                let (a0, a1) = (idm_acceleration(w[0], dv, s, &p).unwrap(), idm_acceleration(w[1], dv, s, &p).unwrap());
                monotone &= a1 <= a0;
            }
        }
    }
    let bounded = speeds.iter().all(|&v| idm_acceleration(v, 0.0, 50.0, &p).unwrap() <= p.a_max);
    verdict(
        free == 0.0 && standstill == 0.0 && no_leader == 0.0 && monotone && bounded,
        format!("free {free}, standstill {standstill}, monotone {monotone}, bounded {bounded}"),
    )
}

// ---------------------------------------------------------------- criterion 5

fn c5_reward() -> Verdict {
    let lc = RewardConfig::<f64>::for_scenario(Scenario::LaneChange);
    let inputs = RewardInputs {
        delta_d_lt: 1.85,
        a_lt: 0.5,
        omega: 0.1,
        ..RewardInputs::zeroed(0.1)
    };
    let worked = total_reward(&inputs, &lc);
    // 0.05·1.85 + 0.5·0.5 + 2·0.1 + 0.05·0.1
    let expected = -(0.0925 + 0.25 + 0.2 + 0.005);
    let worked_ok = (worked - expected).abs() <= 1e-12 && (worked + 0.5475).abs() <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut max_total = f64::NEG_INFINITY;
    for i in 0..100_000 {
        let cfg = RewardConfig::<f64>::for_scenario(Scenario::ALL[i % 2]);
        let inputs = RewardInputs {
            delta_d_lt: rng.random_range(-20.0..20.0),
            gap_clearances: [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)],
            a_lt: rng.random_range(-5.0..5.0),
            a_lg: rng.random_range(-5.0..5.0),
            omega: rng.random_range(-2.0..2.0),
            dt: rng.random_range(0.0..1.0),
        };
        let r = total_reward(&inputs, &cfg) + terminal_penalty(rng.random_bool(0.5), &cfg);
        max_total = max_total.max(r);
    }
    verdict(
        worked_ok && max_total <= 0.0,
        format!("worked example {worked:.15}, max random reward {max_total:.3e}"),
    )
}

// ---------------------------------------------------------------- criterion 6

fn small_config(s: Scenario) -> (TrainConfig<f64>, ScenarioConfig<f64>, RewardConfig<f64>) {
    let sc = ScenarioConfig::for_scenario(s);
    let mut tc = TrainConfig::for_scenario(&sc);
    tc.shape = NetShape {
        value_hidden: 8,
        action_hidden: 6,
    };
    tc.episodes = 6;
    tc.pretrain_episodes = 3;
    tc.batch_size = 16;
    tc.target_sync = 50;
    (tc, sc, RewardConfig::for_scenario(s))
}

fn checkpoint_bytes(c: &Checkpoint<f64>) -> Vec<u8> {
    let mut out = Vec::new();
    c.write_to(&mut out).unwrap();
    out
}

fn c6_mechanics() -> Verdict {
    let mut notes = Vec::new();

    // FIFO: a full buffer drops its oldest transition on each push.
    let mut buf = ReplayBuffer::new(5);
    let tr = |i: usize| Transition {
        s: Observation(vec![i as f64]),
        a: 0.0,
        s_next: Observation(vec![0.0]),
        r: i as f64,
        terminal: false,
    };
    for i in 0..12 {
        buf.push(tr(i));
    }
    let kept: Vec<f64> = buf.iter().map(|t| t.r).collect();
    let fifo = kept == [7.0, 8.0, 9.0, 10.0, 11.0] && buf.len() == 5;
    notes.push(format!("fifo {fifo}"));

    let mut frozen = true;
    let mut target_ok = true;
    let mut syncs = 0;
    let mut deterministic = true;
    for s in Scenario::ALL {
        let (tc, sc, rc) = small_config(s);
        let pretrain = tc.pretrain_episodes;
        let mut t = Trainer::new(tc.clone(), sc.clone(), rc, 21).unwrap();
        let start = t.online().clone();
        let mut target = t.target().clone();
        target_ok &= target == start;
        while !t.is_finished() {
            let r = t.step().unwrap();
            if r.synced {
                syncs += 1;
                target_ok &= t.target() == t.online();
                target = t.target().clone();
            } else {
                target_ok &= *t.target() == target;
            }
            if t.episode() < pretrain || (t.episode() == pretrain && r.finished.is_some()) {
                for h in Head::ALL.into_iter().filter(|h| h.is_action_head()) {
                    frozen &= t
                        .online()
                        .net(h)
                        .params()
                        .iter()
                        .zip(start.net(h).params())
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                }
            }
        }
        let moved = Head::ALL
            .into_iter()
            .filter(|h| h.is_action_head())
            .any(|h| t.online().net(h).params() != start.net(h).params());
        frozen &= moved;

        let a = t.into_output().checkpoints;
        let b = trainer::train(tc, sc, rc, 21).unwrap().checkpoints;
        deterministic &= a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| checkpoint_bytes(x) == checkpoint_bytes(y));
    }
    target_ok &= syncs > 0;
    notes.push(format!("mu frozen in pretraining {frozen}"));
    notes.push(format!("target sync {target_ok} ({syncs} syncs)"));
    notes.push(format!("bitwise determinism {deterministic}"));
    verdict(fifo && frozen && target_ok && deterministic, notes.join(", "))
}

// ---------------------------------------------------------- criteria 7 to 10

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Run {
    scenario: Scenario,
    first100: f64,
    last100: f64,
    first_ckpt: EvalSummary<f64>,
    last_ckpt: EvalSummary<f64>,
}

fn reduced_episodes(s: Scenario) -> usize {
    match s {
        Scenario::LaneChange => 1500,
        Scenario::RampMerge => 1000,
    }
}

fn train_and_evaluate(s: Scenario, seed: u64) -> Run {
    let started = Instant::now();
    let sc = ScenarioConfig::for_scenario(s);
    let rc = RewardConfig::for_scenario(s);
    let mut tc = TrainConfig::for_scenario(&sc);
    tc.episodes = reduced_episodes(s);
    let out = trainer::train(tc.clone(), sc.clone(), rc, seed).expect("training succeeds");
    let mean = |rows: &[trainer::EpisodeLog<f64>]| rows.iter().map(|r| r.total_reward).sum::<f64>() / rows.len() as f64;
    let n = out.log.len();
    let eval = |c: &Checkpoint<f64>| evaluate_checkpoint(c, &sc, &rc, tc.gamma, tc.eval_episodes, seed).unwrap();
    let run = Run {
        scenario: s,
        first100: mean(&out.log[..100]),
        last100: mean(&out.log[n - 100..]),
        first_ckpt: eval(&out.checkpoints[0]),
        last_ckpt: eval(out.checkpoints.last().unwrap()),
    };
    eprintln!(
        "  {s} seed {seed}: first100 {:.2}, last100 {:.2}, ckpt1 {:.2} (succ {:.2}), ckpt12 {:.2} (succ {:.2}, coll {:.2}) in {:.0}s",
        run.first100,
        run.last100,
        run.first_ckpt.mean_reward,
        run.first_ckpt.success_rate,
        run.last_ckpt.mean_reward,
        run.last_ckpt.success_rate,
        run.last_ckpt.collision_rate,
        started.elapsed().as_secs_f64()
    );
    run
}

/// Mean and standard error of the union of several equally sized evaluation samples.
fn pooled(summaries: &[&EvalSummary<f64>]) -> (f64, f64) {
    let n = summaries[0].episodes as f64;
    let total = n * summaries.len() as f64;
    let mean = summaries.iter().map(|s| s.mean_reward).sum::<f64>() / summaries.len() as f64;
    let ss: f64 = summaries
        .iter()
        .map(|s| (n - 1.0) * s.std_reward.powi(2) + n * (s.mean_reward - mean).powi(2))
        .sum();
    (mean, (ss / (total - 1.0)).sqrt() / total.sqrt())
}

fn c7(runs: &[Run]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in Scenario::ALL {
        let improved = runs
            .iter()
            .filter(|r| r.scenario == s && r.last100 > r.first100)
            .count();
        pass &= improved >= 4;
        parts.push(format!("{s}: {improved}/5 seeds improved"));
    }
    verdict(pass, parts.join("; "))
}

fn c8(runs: &[Run]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in Scenario::ALL {
        let first: Vec<_> = runs.iter().filter(|r| r.scenario == s).map(|r| &r.first_ckpt).collect();
        let last: Vec<_> = runs.iter().filter(|r| r.scenario == s).map(|r| &r.last_ckpt).collect();
        let (m1, se1) = pooled(&first);
        let (m12, se12) = pooled(&last);
        let se = (se1 * se1 + se12 * se12).sqrt();
        let ok = m12 - m1 >= 3.0 * se;
        pass &= ok;
        parts.push(format!("{s}: ckpt12 {m12:.3} vs ckpt1 {m1:.3}, 3*SE {:.3}", 3.0 * se));
    }
    verdict(pass, parts.join("; "))
}

fn c9(runs: &[Run]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in Scenario::ALL {
        let mean = |f: &dyn Fn(&Run) -> f64| {
            let v: Vec<f64> = runs.iter().filter(|r| r.scenario == s).map(f).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let first = mean(&|r| r.first_ckpt.mean_roughness);
        let last = mean(&|r| r.last_ckpt.mean_roughness);
        pass &= last < first;
        parts.push(format!("{s}: roughness {last:.4} vs {first:.4}"));
    }
    verdict(pass, parts.join("; "))
}

fn c10(runs: &[Run]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in Scenario::ALL {
        let rates: Vec<f64> = runs
            .iter()
            .filter(|r| r.scenario == s)
            .map(|r| r.last_ckpt.collision_rate)
            .collect();
        let worst = rates.iter().cloned().fold(0.0, f64::max);
        pass &= worst <= 0.05;
        parts.push(format!("{s}: worst seed {:.0}%, per seed {:?}", 100.0 * worst, rates));
    }
    verdict(pass, parts.join("; "))
}

// --------------------------------------------------------------------- driver

fn report(id: usize, name: &str, started: Instant, v: &Verdict) -> bool {
    println!(
        "criterion {id:2} {}: {name}: {} [{:.1}s]",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        started.elapsed().as_secs_f64()
    );
    v.pass
}

fn main() {
    // `cargo test -- --list` and similar harness probes
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let quick: [(&str, Check); 6] = [
        ("gradient correctness", c1_gradients),
        ("closed-form greedy optimality", c2_greedy_optimality),
        ("quadratic-form identities", c3_quadratic_identities),
        ("IDM equilibria and monotonicity", c4_idm),
        ("reward arithmetic", c5_reward),
        ("training mechanics", c6_mechanics),
    ];
    let mut all = true;
    for (i, (name, f)) in quick.into_iter().enumerate() {
        let t = Instant::now();
        let v = f();
        all &= report(i + 1, name, t, &v);
    }

    let t = Instant::now();
    eprintln!("training {} runs for criteria 7-10", 2 * SEEDS.len());
    let jobs: Vec<(Scenario, u64)> = Scenario::ALL
        .into_iter()
        .flat_map(|s| SEEDS.map(|seed| (s, seed)))
        .collect();
    let runs: Vec<Run> = jobs.par_iter().map(|&(s, seed)| train_and_evaluate(s, seed)).collect();
    let slow: [(&str, RunCheck); 4] = [
        ("training trend", c7),
        ("checkpoint evaluation trend", c8),
        ("smoothness improvement", c9),
        ("safety envelope", c10),
    ];
    for (i, (name, f)) in slow.into_iter().enumerate() {
        all &= report(i + 7, name, t, &f(&runs));
    }
    if !all {
        std::process::exit(1);
    }
}
