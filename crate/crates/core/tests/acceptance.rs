//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Criterion 9 needs the inD dataset; point `VRU_RISK_IND_DIR` at the
//! directory holding the `XX_tracks.csv` files to enable it.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use vru_risk::dataset::{AgentId, Frame};
use vru_risk::geometry::Vec2;
use vru_risk::report::{self, summarize};
use vru_risk::risk::{evaluate_pair, risk_factor, EgoContext, RiskParams};
use vru_risk::sensing::{sense, Detection, SensorConfig};
use vru_risk::sim::{self, run, RunResult, SimConfig, Simulation};
use vru_risk::synth::{intersection_scene, occlusion_scene};
use vru_risk::v2x::{deliver, fuse, generate_messages, LocalEnvModel, Source, V2xMessage};

use common::*;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn main() {
    let criteria: [(u32, &str, Check); 9] = [
        (1, "sigmoid anchor points", sigmoid_anchors),
        (
            2,
            "risk time matches brute-force oracle",
            rt_oracle_equivalence,
        ),
        (
            3,
            "detections match dense visibility oracle",
            occlusion_oracle,
        ),
        (4, "CPS moves the event earlier with lower RF", cps_benefit),
        (
            5,
            "messages arrive exactly one frame later",
            message_latency,
        ),
        (
            6,
            "EAR rises and RF falls with penetration",
            penetration_monotonicity,
        ),
        (
            7,
            "byte-identical events across runs and threads",
            determinism,
        ),
        (
            8,
            "summary statistics match reference oracle",
            statistics_oracle,
        ),
        (9, "inD figures (dataset-gated)", dataset_figures),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] criterion {n}: {name} ({secs:.1} s): {detail}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn sigmoid_anchors() -> Outcome {
    let p = RiskParams::default();
    let at = |rt| risk_factor(rt, &p);
    let (a, b, c) = (at(2.5), at(1.0), at(2.0));
    check(
        (a - 0.5).abs() <= 1e-9 && (b - 0.9047).abs() <= 1e-3 && (c - 0.6792).abs() <= 1e-3,
        format!("RF(2.5)={a:.9} RF(1)={b:.4} RF(2)={c:.4}"),
    )
}

fn rt_oracle_equivalence() -> Outcome {
    const PAIRS: usize = 1000;
    const CELL: f64 = 0.05;
    let params = RiskParams::default();
    let mut r = rng(20_240_601);
    let mut agree = 0;
    let mut risky = 0;
    let mut unbounded = Vec::new();
    let mut split = 0;
    for i in 0..PAIRS {
        let scene = random_pair(&mut r);
        let ego = EgoContext::new(
            scene.ego_meta.clone(),
            scene.ego_state,
            scene.path.sampled(),
        )
        .expect("ego context");
        let eval =
            evaluate_pair(&ego, &scene.vru_meta, &scene.vru_state, &params).expect("pipeline");
        let oracle = rt_oracle(&scene, &params, CELL);
        let pipeline_rt = (eval.risk_time < params.rt_infinity).then_some(eval.risk_time);
        if oracle.rt != oracle.rt_cellwise {
            split += 1;
        }
        if pipeline_rt.is_some() {
            risky += 1;
        }
        let ok = match (pipeline_rt, oracle.rt) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 0.1,
            _ => false,
        };
        if ok {
            agree += 1;
            continue;
        }
        // one grid cell of slack, expressed in time for the slower mover
        let slowest = scene
            .ego_state
            .speed
            .min(if scene.vru_state.speed < params.v_stationary {
                f64::INFINITY
            } else {
                scene.vru_state.speed
            });
        let cell_time = CELL * 2f64.sqrt() / slowest + 0.01;
        let bounded = match (pipeline_rt, oracle.rt) {
            (Some(a), Some(b)) => (a - b).abs() <= 0.1 + cell_time,
            // one side found a sliver the other missed
            (Some(_), None) => {
                eval.overlap.iter().map(|p| p.area()).sum::<f64>() <= 4.0 * CELL * CELL
                    || window_gap(&eval) <= cell_time
            }
            (None, Some(_)) => oracle.cells <= 4 || window_gap(&eval) <= cell_time,
            (None, None) => true,
        };
        if !bounded {
            unbounded.push(format!(
                "pair {i}: pipeline {pipeline_rt:?} oracle {:?}",
                oracle.rt
            ));
        }
    }
    let rate = agree as f64 / PAIRS as f64;
    check(
        rate >= 0.99 && unbounded.is_empty(),
        format!(
            "{agree}/{PAIRS} agree ({:.1}%), {risky} with finite RT, {} beyond one cell, \
             {split} split overlaps where cellwise contact differs{}",
            rate * 100.0,
            unbounded.len(),
            unbounded
                .first()
                .map(|s| format!(", first: {s}"))
                .unwrap_or_default()
        ),
    )
}

/// How far apart the two windows are, or 0 when they touch.
fn window_gap(eval: &vru_risk::risk::PairEvaluation) -> f64 {
    match (eval.av_window, eval.vru_window) {
        (Some(a), Some(v)) => (a.t_min.max(v.t_min) - a.t_max.min(v.t_max)).max(0.0),
        _ => f64::INFINITY,
    }
}

fn occlusion_oracle() -> Outcome {
    let mut r = rng(77);
    let mut decisions = 0;
    let mut mismatches = Vec::new();
    for i in 0..100 {
        let scene = random_sensor_scene(&mut r);
        let config = SensorConfig {
            vrus_occlude: i % 4 == 3,
            ..SensorConfig::default()
        };
        let views: Vec<_> = scene
            .iter()
            .map(|(m, s)| vru_risk::dataset::AgentView { meta: m, state: s })
            .collect();
        let got: Vec<AgentId> = sense(views[0], &views[1..], &config, 0)
            .expect("sense")
            .into_iter()
            .map(|d| d.agent_id)
            .collect();
        let want = visibility_oracle(&scene, &config, 0.002);
        decisions += scene.len() - 1;
        if got != want {
            mismatches.push(format!("scene {i}: sensor {got:?} oracle {want:?}"));
        }
    }
    check(
        mismatches.is_empty(),
        format!(
            "100 scenes, {decisions} decisions, {} scenes differ{}",
            mismatches.len(),
            mismatches
                .first()
                .map(|s| format!(", first: {s}"))
                .unwrap_or_default()
        ),
    )
}

fn cps_benefit() -> Outcome {
    let (rec, ids) = occlusion_scene(1).expect("scene");
    let cfg = SimConfig::default();
    let event = |rate: f64| {
        run(&rec, rate, 0, &cfg)
            .expect("run")
            .events
            .into_iter()
            .find(|e| e.ego_id == ids.ego && e.vru_id == ids.pedestrian)
    };
    match (event(0.0), event(1.0)) {
        (Some(without), Some(with)) => check(
            with.frame < without.frame && with.risk_factor < without.risk_factor,
            format!(
                "without CPS frame {} RF {:.4}, with CPS frame {} RF {:.4}",
                without.frame, without.risk_factor, with.frame, with.risk_factor
            ),
        ),
        (a, b) => Outcome::Fail(format!("missing event: without {a:?}, with {b:?}")),
    }
}

fn message_latency() -> Outcome {
    let mut problems = Vec::new();

    // chain A -> B -> C where C only hears B
    let (a, b, c, x) = (AgentId(1), AgentId(2), AgentId(3), AgentId(9));
    let state = |px: f64| {
        vru_risk::dataset::KinematicState::new(Vec2::new(px, 0.0), 0.0, Vec2::new(1.0, 0.0))
    };
    let mut lems = [a, b, c].map(LocalEnvModel::new);
    let n: Frame = 40;
    let mut links: Vec<(AgentId, BTreeSet<AgentId>)> =
        vec![(a, [b].into()), (b, [a, c].into()), (c, [b].into())];
    links.sort();
    let mut in_flight: Vec<V2xMessage> = Vec::new();
    for frame in n..n + 4 {
        let mut inboxes: std::collections::BTreeMap<AgentId, Vec<V2xMessage>> = Default::default();
        for m in &in_flight {
            let hearers = &links.iter().find(|(s, _)| *s == m.sender()).unwrap().1;
            for (id, msgs) in deliver(std::slice::from_ref(m), hearers) {
                inboxes.entry(id).or_default().extend(msgs);
            }
        }
        let mut out = Vec::new();
        for lem in lems.iter_mut() {
            let own = lem.owner();
            let dets: Vec<Detection> = if own == a && frame == n {
                vec![Detection {
                    agent_id: x,
                    observed_state: state(5.0),
                    frame,
                }]
            } else {
                Vec::new()
            };
            fuse(
                lem,
                &dets,
                inboxes.get(&own).map_or(&[][..], |v| v),
                frame,
                12,
            );
            let (cam, cpm) = generate_messages(own, lem, &state(0.0), frame, true);
            out.push(V2xMessage::Cam(cam));
            out.push(V2xMessage::Cpm(cpm));
        }
        in_flight = out;
        let has = |i: usize| lems[i].contains(x);
        let expect = [true, frame > n, frame > n + 1];
        for (i, &want) in expect.iter().enumerate() {
            if has(i) != want {
                problems.push(format!("frame {frame}: LEM {} has x = {}", i + 1, has(i)));
            }
        }
        if frame == n + 2 {
            let e = lems[2].get(x).unwrap();
            if e.last_update_frame != n || e.source != Source::V2x {
                problems.push(format!("relayed entry {e:?}"));
            }
        }
    }

    // the same property inside the full loop: a pedestrian seen only by the
    // helper vehicle reaches the ego exactly one frame later
    let (rec, ids) = occlusion_scene(1).expect("scene");
    let cfg = SimConfig::default();
    let mut sim = Simulation::new(&rec, 1.0, 0, &cfg).expect("sim");
    let mut first_helper = None;
    let mut first_ego = None;
    while sim.next_frame() < 120 {
        let f = sim.next_frame();
        sim.step().expect("step");
        let helper = sim
            .lem(ids.helper)
            .and_then(|l| l.get(ids.pedestrian))
            .copied();
        let ego = sim
            .lem(ids.ego)
            .and_then(|l| l.get(ids.pedestrian))
            .copied();
        if first_helper.is_none() && helper.is_some_and(|e| e.source == Source::Sensed) {
            first_helper = Some(f);
        }
        if first_ego.is_none() {
            if let Some(e) = ego {
                first_ego = Some(f);
                if e.source != Source::V2x || e.last_update_frame + 1 != f {
                    problems.push(format!("ego entry at frame {f}: {e:?}"));
                }
            }
        }
    }
    match (first_helper, first_ego) {
        (Some(h), Some(e)) if e == h + 1 => {}
        other => problems.push(format!("helper/ego first frames {other:?}")),
    }

    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "direct hop at n+1, relay at n+2, in-loop helper frame {} ego frame {}",
                first_helper.unwrap(),
                first_ego.unwrap()
            )
        } else {
            problems.join("; ")
        },
    )
}

const RATES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn penetration_monotonicity() -> Outcome {
    let cfg = SimConfig::default();
    let mut ear = [(0.0, 0usize); 5];
    let mut rf = [(0.0, 0usize); 5];
    for scene in 0..20u64 {
        let rec = intersection_scene(100 + scene as u32, scene).expect("scene");
        for (k, &rate) in RATES.iter().enumerate() {
            let r = run(&rec, rate, scene, &cfg).expect("run");
            ear[k].0 += r.ear_samples.iter().map(|s| s.value).sum::<f64>();
            ear[k].1 += r.ear_samples.len();
            rf[k].0 += r.events.iter().map(|e| e.risk_factor).sum::<f64>();
            rf[k].1 += r.events.len();
        }
    }
    let ear: Vec<f64> = ear.iter().map(|(s, n)| s / *n as f64).collect();
    let rf: Vec<f64> = rf.iter().map(|(s, n)| s / *n as f64).collect();
    let ear_ok = ear.windows(2).all(|w| w[1] >= w[0]);
    let rf_ok = rf.windows(2).all(|w| w[1] <= w[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    check(
        ear_ok && rf_ok,
        format!("mean EAR [{}], mean RF [{}]", fmt(&ear), fmt(&rf)),
    )
}

fn events_csv(results: &[RunResult]) -> Vec<u8> {
    let dir = tempfile::tempdir().expect("tempdir");
    let p = dir.path().join("events.csv");
    report::write_events_csv(&p, &report::all_events(results)).expect("write");
    std::fs::read(p).expect("read")
}

fn determinism() -> Outcome {
    let recs = vec![
        intersection_scene(201, 5).expect("scene"),
        occlusion_scene(202).expect("scene").0,
    ];
    let cfg = SimConfig {
        penetration_rates: vec![0.5],
        seeds: vec![3],
        ..SimConfig::default()
    };
    let sweep_with = |threads| {
        let out = sim::with_threads(Some(threads), || sim::sweep(&recs, &cfg))
            .expect("pool")
            .expect("sweep");
        assert!(out.failures.is_empty());
        out.results
    };
    let a = events_csv(&sweep_with(1));
    let b = events_csv(&sweep_with(1));
    let c = events_csv(&sweep_with(4));
    let rows = a.iter().filter(|&&c| c == b'\n').count() - 1;
    check(
        a == b && a == c && rows > 0,
        format!(
            "{rows} events, {} bytes, identical at 1 and 4 threads",
            a.len()
        ),
    )
}

fn statistics_oracle() -> Outcome {
    let mut r = rng(8);
    let mut bad = Vec::new();
    for i in 0..100 {
        use rand::Rng;
        let n = if i < 5 {
            i + 1
        } else {
            r.gen_range(1..=10_000)
        };
        let values: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let s = summarize(&values).expect("non-empty");
        let (mean, stdev) = reference_mean_stdev(&values);
        let exact = s.count == n
            && s.q1 == reference_quantile(&values, 0.25)
            && s.median == reference_quantile(&values, 0.5)
            && s.q3 == reference_quantile(&values, 0.75)
            && s.mean == mean
            && s.stdev == stdev;
        if !exact {
            bad.push(i);
        }
    }
    check(
        bad.is_empty(),
        format!(
            "100 lists up to 10^4 values, {} mismatches {bad:?}",
            bad.len()
        ),
    )
}

fn dataset_figures() -> Outcome {
    let Some(dir) = std::env::var_os("VRU_RISK_IND_DIR") else {
        return Outcome::Skip("VRU_RISK_IND_DIR not set".into());
    };
    let dir = std::path::PathBuf::from(dir);
    if !dir.is_dir() {
        return Outcome::Skip(format!("{} not found", dir.display()));
    }
    let cfg = SimConfig {
        penetration_rates: vec![0.0, 1.0],
        ..SimConfig::default()
    };
    let out = match sim::sweep_dir(&dir, &cfg) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(e.chain()),
    };
    if !out.failures.is_empty() {
        return Outcome::Fail(format!("{} runs failed", out.failures.len()));
    }
    let stats = report::rate_stats(&out.results);
    let at = |rate: f64| stats.iter().find(|s| s.rate == rate);
    let (Some(zero), Some(full)) = (at(0.0), at(1.0)) else {
        return Outcome::Fail("missing rate".into());
    };
    let mut problems = Vec::new();
    let near = |v: Option<f64>, want: f64, tol: f64| v.is_some_and(|v| (v - want).abs() <= tol);
    if !near(zero.rf.map(|s| s.median), 0.61, 0.05) || !near(full.rf.map(|s| s.median), 0.34, 0.05)
    {
        problems.push(format!(
            "RF medians {:?} -> {:?}",
            zero.rf.map(|s| s.median),
            full.rf.map(|s| s.median)
        ));
    }
    if !near(zero.ear.map(|s| s.median), 0.96, 0.01)
        || !near(full.ear.map(|s| s.median), 0.99, 0.01)
        || !near(zero.ear.map(|s| s.q1), 0.865, 0.02)
        || !near(full.ear.map(|s| s.q1), 0.97, 0.02)
    {
        problems.push(format!(
            "EAR median/q1 {:?}/{:?} -> {:?}/{:?}",
            zero.ear.map(|s| s.median),
            zero.ear.map(|s| s.q1),
            full.ear.map(|s| s.median),
            full.ear.map(|s| s.q1)
        ));
    }
    let table = [
        (1, 236, 0.4115),
        (2, 534, 0.5901),
        (3, 13, 0.5386),
        (4, 27, 0.7342),
    ];
    let zero_rate: Vec<RunResult> = out
        .results
        .iter()
        .filter(|r| r.meta.rate == 0.0)
        .cloned()
        .collect();
    let rows = report::location_summaries(&zero_rate);
    for (loc, count, mean) in table {
        let Some(row) = rows.iter().find(|r| r.location_id == loc) else {
            problems.push(format!("location {loc} missing"));
            continue;
        };
        let count_ok = (row.incidences as f64 - count as f64).abs() <= 0.15 * count as f64;
        let mean_ok = near(row.mean_rf, mean, 0.05);
        if !count_ok || !mean_ok {
            problems.push(format!(
                "location {loc}: {} incidences mean {:?} (want {count}, {mean})",
                row.incidences, row.mean_rf
            ));
        }
    }
    check(problems.is_empty(), problems.join("; "))
}
