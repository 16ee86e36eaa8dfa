//! End-to-end acceptance suite. Every criterion runs at its full size and
//! tolerance, prints one PASS/FAIL line to stderr, and the test fails if any
//! criterion does.
//!
//! Run alone with `cargo test --release -p mapf-bench --test acceptance`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use mapf_bench::{replay_solution, run_benchmark, Algorithm, BenchReport, BenchmarkSpec};
use mapf_core::deadlock::{BankersState, DeadlockMonitor, ResourceAllocationGraph};
use mapf_core::episode::{episode_reward, EpisodeConfig, EpisodeState};
use mapf_core::grid::{manhattan, CollisionModel, GridLayout, Position};
use mapf_core::layouts::{resolve_layout, Task, TaskSet, VariantParams};
use mapf_core::rng_from_seed;
use mapf_core::solvers::{
    joint_bfs_oracle, random_policy, solve_cbs, solve_ma_astar, OracleOutcome, SolverBudget, DEFAULT_ORACLE_CAP,
};

const FAMILY_GRID: &str = "....\n.##.\n.#..\n....\n";
const PLANNER_BUDGET_MS: u64 = 60_000;
const SWEEP_BUDGET_MS: u64 = 5_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, name: &str, started: Instant, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {id:>2} {verdict} {name}: {} ({:.1} s)\n",
        o.detail,
        started.elapsed().as_secs_f64()
    );
    // Written straight to the process stderr so the lines survive output
    // capture.
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn layout(family: &str, variant: Option<&str>) -> mapf_core::layouts::BuiltLayout {
    resolve_layout(family, variant, &VariantParams::default(), None).unwrap()
}

// ---------------------------------------------------------------- oracles

/// Smallest number of joint steps (vertex and swap conflicts forbidden)
/// taking both agents from their starts to their goals.
fn pair_makespan(grid: &GridLayout, tasks: &TaskSet) -> Option<usize> {
    let start = (tasks.0[0].start, tasks.0[1].start);
    let goal = (tasks.0[0].goal, tasks.0[1].goal);
    let mut dist = HashMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some((a, b)) = queue.pop_front() {
        let d = dist[&(a, b)];
        if (a, b) == goal {
            return Some(d);
        }
        for na in moves(grid, a) {
            for nb in moves(grid, b) {
                if na == nb || (na == b && nb == a) || dist.contains_key(&(na, nb)) {
                    continue;
                }
                dist.insert((na, nb), d + 1);
                queue.push_back((na, nb));
            }
        }
    }
    None
}

/// Optimal sum of costs by Dijkstra over (cell, cell, parked, parked): an
/// unparked agent pays one per step, and may park only on its goal, after
/// which it stays there forever.
fn pair_sum_of_costs(grid: &GridLayout, tasks: &TaskSet) -> Option<usize> {
    type State = (Position, Position, bool, bool);
    let (ga, gb) = (tasks.0[0].goal, tasks.0[1].goal);
    let start: State = (tasks.0[0].start, tasks.0[1].start, false, false);
    let mut best: HashMap<State, usize> = HashMap::from([(start, 0)]);
    let mut heap = BinaryHeap::from([Reverse((0usize, start))]);
    while let Some(Reverse((cost, s))) = heap.pop() {
        if best[&s] < cost {
            continue;
        }
        let (a, b, pa, pb) = s;
        if pa && pb {
            return Some(cost);
        }
        let mut relax = |next: State, c: usize| {
            if best.get(&next).map_or(true, |&old| c < old) {
                best.insert(next, c);
                heap.push(Reverse((c, next)));
            }
        };
        if !pa && a == ga {
            relax((a, b, true, pb), cost);
        }
        if !pb && b == gb {
            relax((a, b, pa, true), cost);
        }
        let step_cost = usize::from(!pa) + usize::from(!pb);
        let ma = if pa { vec![a] } else { moves(grid, a) };
        let mb = if pb { vec![b] } else { moves(grid, b) };
        for &na in &ma {
            for &nb in &mb {
                if na == nb || (na == b && nb == a) {
                    continue;
                }
                relax((na, nb, pa, pb), cost + step_cost);
            }
        }
    }
    None
}

fn moves(grid: &GridLayout, p: Position) -> Vec<Position> {
    let mut v = vec![p];
    v.extend(grid.neighbors(p));
    v
}

/// Every 2-agent instance on the family grid with distinct starts, distinct
/// goals and no agent starting on its own goal.
fn family_instances(grid: &GridLayout) -> Vec<TaskSet> {
    let free = grid.free_cells();
    let mut out = Vec::new();
    for &s0 in &free {
        for &s1 in &free {
            for &g0 in &free {
                for &g1 in &free {
                    if s0 != s1 && g0 != g1 && s0 != g0 && s1 != g1 {
                        out.push(TaskSet(vec![Task { start: s0, goal: g0 }, Task { start: s1, goal: g1 }]));
                    }
                }
            }
        }
    }
    out
}

fn bankers_by_permutation(state: &BankersState) -> bool {
    let n = state.max.len();
    let need: Vec<Vec<u64>> = (0..n)
        .map(|i| state.max[i].iter().zip(&state.allocation[i]).map(|(m, a)| m - a).collect())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let mut work = state.available.clone();
        let ok = perm.iter().all(|&p| {
            let fits = need[p].iter().zip(&work).all(|(n, w)| n <= w);
            if fits {
                for (w, a) in work.iter_mut().zip(&state.allocation[p]) {
                    *w += a;
                }
            }
            fits
        });
        if ok {
            return true;
        }
        let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return false;
        };
        let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
}

fn has_cycle_by_closure(rag: &ResourceAllocationGraph) -> bool {
    let n = rag.n_processes();
    let k = n + rag.n_resources();
    let mut reach = vec![vec![false; k]; k];
    for (p, r) in rag.request_edges() {
        reach[p][n + r] = true;
    }
    for (r, p) in rag.allocation_edges() {
        reach[n + r][p] = true;
    }
    for via in 0..k {
        for a in 0..k {
            if reach[a][via] {
                for b in 0..k {
                    if reach[via][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
    }
    (0..k).any(|i| reach[i][i])
}

/// Heat-map total must equal the sum over successful runs of
/// `(T_end + 1) * n`.
fn heatmaps_conserved(report: &BenchReport, n: usize) -> Result<(), String> {
    for (algorithm, map) in &report.heatmaps {
        let expected: u64 = report
            .records
            .iter()
            .filter(|r| r.algorithm == *algorithm && r.is_success())
            .map(|r| (r.timesteps.expect("successful runs have a length") as u64 + 1) * n as u64)
            .sum();
        if map.total() != expected {
            return Err(format!("{algorithm}: total {} expected {expected}", map.total()));
        }
    }
    Ok(())
}

// ------------------------------------------------------------- criteria

fn reward_calibration() -> Outcome {
    let built = layout("rm1.1", Some("basic"));
    let tasks = built.default_tasks.unwrap();
    let grid = Arc::new(built.grid);
    let solution = solve_cbs(&grid, &tasks, &SolverBudget::default()).unwrap();
    match replay_solution(&grid, &tasks, &solution, 100, &mut DeadlockMonitor::default()) {
        Ok(state) => {
            let reward = episode_reward(state.trace()).total;
            outcome(
                reward == 3.0 && state.t() == 9 && solution.makespan == 9,
                format!("reward {reward}, makespan {}", state.t()),
            )
        }
        Err(e) => outcome(false, e),
    }
}

fn family_optimality() -> (Outcome, Outcome) {
    let grid = GridLayout::from_text("family", FAMILY_GRID).unwrap();
    let family = family_instances(&grid);
    let budget = SolverBudget::default();
    let (mut cbs_ok, mut ma_ok, mut oracle_ok) = (0, 0, 0);
    let mut solvable = 0;
    for tasks in &family {
        let makespan = pair_makespan(&grid, tasks);
        let soc = pair_sum_of_costs(&grid, tasks);
        let library = joint_bfs_oracle(&grid, tasks, DEFAULT_ORACLE_CAP).unwrap();
        let cbs = solve_cbs(&grid, tasks, &budget).unwrap();
        let ma = solve_ma_astar(&grid, tasks, &budget).unwrap();
        match (&library, makespan, soc) {
            (OracleOutcome::Solved(opt), Some(m), Some(s)) => {
                solvable += 1;
                oracle_ok += usize::from(opt.makespan == m && opt.sum_of_costs == s);
                cbs_ok += usize::from(cbs.is_solved() && cbs.sum_of_costs == s);
                ma_ok += usize::from(ma.is_solved() && ma.makespan == m);
            }
            (OracleOutcome::Infeasible, None, None) => {
                oracle_ok += 1;
                cbs_ok += usize::from(!cbs.is_solved());
                ma_ok += usize::from(!ma.is_solved());
            }
            _ => {}
        }
    }
    let total = family.len();
    let size_ok = total == 20_748;
    let cbs = outcome(
        size_ok && cbs_ok == total && oracle_ok == total,
        format!("{cbs_ok}/{total} match ({solvable} solvable, oracles agree on {oracle_ok})"),
    );
    let ma = outcome(size_ok && ma_ok == total && oracle_ok == total, format!("{ma_ok}/{total} match"));
    (cbs, ma)
}

fn bankers_correctness() -> Outcome {
    let mut rng = rng_from_seed(4);
    let mut agree = 0;
    let mut safe = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=4);
        let max: Vec<Vec<u64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(0..6)).collect()).collect();
        let allocation: Vec<Vec<u64>> =
            max.iter().map(|row| row.iter().map(|&x| rng.gen_range(0..=x)).collect()).collect();
        let available = (0..m).map(|_| rng.gen_range(0..5)).collect();
        let state = BankersState::new(available, max, allocation).unwrap();
        let expected = bankers_by_permutation(&state);
        safe += usize::from(expected);
        agree += usize::from(state.is_safe().unwrap().safe == expected);
    }
    outcome(agree == 10_000, format!("{agree}/10000 agree ({safe} safe)"))
}

fn rag_cycles() -> Outcome {
    let mut rng = rng_from_seed(5);
    let mut agree = 0;
    let mut cyclic = 0;
    for _ in 0..1_000 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=5);
        let instances: Vec<u64> = (0..m).map(|_| rng.gen_range(1..=3)).collect();
        let mut rag = ResourceAllocationGraph::new(n, instances.clone());
        for r in 0..m {
            for _ in 0..instances[r] {
                if rng.gen_bool(0.6) {
                    let _ = rag.allocate(rng.gen_range(0..n), r);
                }
            }
        }
        for p in 0..n {
            for r in 0..m {
                if rng.gen_bool(0.3) {
                    let _ = rag.add_request(p, r);
                }
            }
        }
        let expected = has_cycle_by_closure(&rag);
        cyclic += usize::from(expected);
        agree += usize::from(rag.detect_cycle().is_some() == expected);
    }
    outcome(agree == 1_000, format!("{agree}/1000 agree ({cyclic} cyclic)"))
}

fn episode_violations(state: &EpisodeState) -> Vec<&'static str> {
    let n = state.n_agents();
    let mut errors = Vec::new();
    let mut flags = vec![false; n];
    let mut prev = state.tasks().starts();
    let mut collided = vec![false; n];
    for rec in state.trace() {
        if rec.positions.iter().collect::<HashSet<_>>().len() != n {
            errors.push("positions not distinct");
        }
        for i in 0..n {
            if flags[i] && !rec.flags[i] {
                errors.push("reached flag cleared");
            }
            if manhattan(rec.positions[i], prev[i]) > 1 {
                errors.push("non-adjacent move");
            }
        }
        for &c in &rec.collisions {
            collided[c] = true;
        }
        flags = rec.flags.clone();
        prev = rec.positions.clone();
    }
    if state.terminated() == state.truncated() {
        errors.push("terminated and truncated not exclusive");
    }
    let returns = episode_reward(state.trace()).per_agent;
    for i in 0..n {
        if returns[i] > 1.5 + 1e-12 {
            errors.push("return above 1.5");
        }
        let full = (returns[i] - 1.5).abs() < 1e-12;
        if full != (state.terminated() && !collided[i]) {
            errors.push("full return without clean termination or vice versa");
        }
    }
    errors
}

fn episode_properties() -> Outcome {
    const LAYOUTS: [(&str, &str); 4] = [("rm1.1", "basic"), ("rm2.1", "block"), ("rm2.1", "dead-ends"), ("rm3.1", "basic")];
    let grids: Vec<Arc<GridLayout>> = LAYOUTS.iter().map(|(f, v)| Arc::new(layout(f, Some(v)).grid)).collect();
    let mut params = rng_from_seed(6);
    let mut failures: HashMap<&str, usize> = HashMap::new();
    for episode in 0..10_000u64 {
        let mut cfg = EpisodeConfig::new(Arc::clone(&grids[params.gen_range(0..grids.len())]), params.gen_range(1..=4));
        cfg.t_max = params.gen_range(1..=100);
        cfg.action_mask = params.gen_bool(0.5);
        cfg.collision = if params.gen_bool(0.5) { CollisionModel::Strict } else { CollisionModel::Standard };
        let cfg = Arc::new(cfg);
        let seed = params.gen();
        let run = || {
            let mut state = EpisodeState::reset(Arc::clone(&cfg), seed).unwrap();
            let mut rng = rng_from_seed(seed ^ episode);
            while !state.is_finished() {
                let joint = random_policy(&state, &mut rng);
                state.step(&joint).unwrap();
            }
            state
        };
        let first = run();
        for e in episode_violations(&first) {
            *failures.entry(e).or_default() += 1;
        }
        if run().trace() != first.trace() {
            *failures.entry("seed determinism").or_default() += 1;
        }
    }
    outcome(failures.is_empty(), format!("10000 episodes, violations {failures:?}"))
}

fn directional(reports: &mut Vec<(BenchReport, usize)>) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (family, variant) in [("rm2.1", Some("dead-ends")), ("rm3.1", None)] {
        let mut spec = BenchmarkSpec::for_layout(family, variant, 4, 100, vec![Algorithm::Cbs, Algorithm::MaAstar]).unwrap();
        spec.budget = SolverBudget::with_wall_ms(PLANNER_BUDGET_MS);
        let report = run_benchmark(&spec).unwrap();
        let cbs = report.summary(Algorithm::Cbs).unwrap().successes;
        let ma = report.summary(Algorithm::MaAstar).unwrap().successes;
        pass &= cbs >= ma;
        parts.push(format!("{family} {}: CBS {cbs}% vs MA-A* {ma}%", variant.unwrap_or("basic")));
        reports.push((report, 4));
    }
    outcome(pass, parts.join("; "))
}

fn random_baseline(reports: &mut Vec<(BenchReport, usize)>) -> Outcome {
    let mut spec = BenchmarkSpec::for_layout("rm2.1", Some("block"), 4, 100, vec![Algorithm::Random]).unwrap();
    spec.t_max = 100;
    let report = run_benchmark(&spec).unwrap();
    let rate = report.summary(Algorithm::Random).unwrap().success_rate;
    reports.push((report, 4));
    outcome(rate <= 0.01, format!("success rate {:.0}%", rate * 100.0))
}

fn scalability(reports: &mut Vec<(BenchReport, usize)>) -> Outcome {
    let mut rates = Vec::new();
    for n in 2..=12 {
        let mut spec = BenchmarkSpec::for_layout("rm2.1", None, n, 50, vec![Algorithm::Cbs]).unwrap();
        spec.budget = SolverBudget::with_wall_ms(SWEEP_BUDGET_MS);
        let report = run_benchmark(&spec).unwrap();
        rates.push((n, report.summary(Algorithm::Cbs).unwrap().successes));
        reports.push((report, n));
    }
    let at = |n: usize| rates.iter().find(|r| r.0 == n).unwrap().1;
    let curve: Vec<String> = rates.iter().map(|(n, s)| format!("{n}:{s}")).collect();
    outcome(at(12) <= at(4), format!("successes of 50 by agents {}", curve.join(" ")))
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<(usize, bool)> = Vec::new();
    let mut record = |id: usize, name: &str, started: Instant, o: Outcome| {
        report(id, name, started, &o);
        results.push((id, o.pass));
    };

    let t = Instant::now();
    record(1, "reward calibration", t, reward_calibration());

    let t = Instant::now();
    let (cbs, ma) = family_optimality();
    record(2, "CBS sum of costs equals the oracle", t, cbs);
    record(3, "MA-A* makespan equals the oracle", t, ma);

    let t = Instant::now();
    record(4, "Banker's safety equals the permutation oracle", t, bankers_correctness());

    let t = Instant::now();
    record(5, "RAG cycles equal the closure oracle", t, rag_cycles());

    let t = Instant::now();
    record(6, "episode property suite", t, episode_properties());

    let mut reports = Vec::new();
    let t = Instant::now();
    record(7, "CBS succeeds at least as often as MA-A*", t, directional(&mut reports));

    let t = Instant::now();
    record(8, "random baseline on rm2.1 block", t, random_baseline(&mut reports));

    let t = Instant::now();
    let sweep = scalability(&mut reports);

    let t9 = Instant::now();
    let conservation: Vec<String> = reports.iter().filter_map(|(r, n)| heatmaps_conserved(r, *n).err()).collect();
    record(
        9,
        "heat-map conservation",
        t9,
        outcome(
            conservation.is_empty(),
            format!("{} bench runs checked, {} mismatches {conservation:?}", reports.len(), conservation.len()),
        ),
    );
    record(10, "CBS success does not grow with agents", t, sweep);

    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
