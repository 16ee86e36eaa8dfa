#![allow(dead_code)]

use rand::Rng;

use mapf_core::deadlock::{BankersState, ResourceAllocationGraph};

/// Safe iff some ordering of all processes lets each finish in turn.
pub fn bankers_by_permutation(state: &BankersState) -> bool {
    let n = state.max.len();
    let need: Vec<Vec<u64>> = (0..n)
        .map(|i| state.max[i].iter().zip(&state.allocation[i]).map(|(m, a)| m - a).collect())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let mut work = state.available.clone();
        let ok = perm.iter().all(|&p| {
            if need[p].iter().zip(&work).all(|(n, w)| n <= w) {
                for (w, a) in work.iter_mut().zip(&state.allocation[p]) {
                    *w += a;
                }
                true
            } else {
                false
            }
        });
        if ok {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub fn random_bankers<R: Rng>(rng: &mut R, n: usize, m: usize) -> BankersState {
    let max: Vec<Vec<u64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(0..6)).collect()).collect();
    let allocation: Vec<Vec<u64>> = max
        .iter()
        .map(|row| row.iter().map(|&x| rng.gen_range(0..=x)).collect())
        .collect();
    let available = (0..m).map(|_| rng.gen_range(0..5)).collect();
    BankersState::new(available, max, allocation).expect("valid by construction")
}

/// Node `i < n` is process i, node `n + r` is resource r. Cycle iff some
/// node reaches itself in the transitive closure.
pub fn has_cycle_by_closure(rag: &ResourceAllocationGraph) -> bool {
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

pub fn random_rag<R: Rng>(rng: &mut R) -> ResourceAllocationGraph {
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
    rag
}
