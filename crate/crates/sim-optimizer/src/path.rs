use moma_builder::SystemModel;
use rand::Rng;

/// One simulated trajectory over a single operating cycle: the visited states
/// and the corresponding jump times (strictly increasing, all within the
/// horizon). `states[0]` is the initial state; `jump_times[k]` is when the
/// chain entered `states[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub states: Vec<usize>,
    pub jump_times: Vec<f64>,
}

impl SamplePath {
    pub fn final_state(&self) -> usize {
        *self.states.last().expect("non-empty path")
    }

    pub fn last_jump_time(&self) -> Option<f64> {
        self.jump_times.last().copied()
    }
}

/// Jump-chain tables precomputed from a system generator: per-state exit rate
/// and the cumulative distribution of the embedded chain.
#[derive(Debug, Clone)]
pub struct JumpTables {
    exit_rate: Vec<f64>,
    /// Per state: (cumulative probability, target) pairs.
    jumps: Vec<Vec<(f64, usize)>>,
}

impl JumpTables {
    pub fn new(system: &SystemModel) -> Self {
        let q = system.q_sys();
        let n = q.rows();
        let mut exit_rate = vec![0.0; n];
        let mut jumps = Vec::with_capacity(n);
        for s in 0..n {
            let total = -q.get(s, s);
            exit_rate[s] = total;
            let mut row = Vec::new();
            if total > 0.0 {
                let mut cum = 0.0;
                for t in 0..n {
                    if t == s {
                        continue;
                    }
                    let rate = q.get(s, t);
                    if rate > 0.0 {
                        cum += rate / total;
                        row.push((cum, t));
                    }
                }
                if let Some(last) = row.last_mut() {
                    last.0 = 1.0;
                }
            }
            jumps.push(row);
        }
        JumpTables { exit_rate, jumps }
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.exit_rate[state] == 0.0
    }

    fn next_state(&self, state: usize, u: f64) -> usize {
        let row = &self.jumps[state];
        let idx = row.partition_point(|(cum, _)| *cum < u);
        row[idx.min(row.len() - 1)].1
    }
}

/// Samples the initial state from a probability vector.
pub fn sample_initial(alpha: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (s, &p) in alpha.iter().enumerate() {
        cum += p;
        if u < cum {
            return s;
        }
    }
    alpha.len() - 1
}

/// Standard CTMC path simulation: exponential holding times from the diagonal
/// and jumps from the embedded chain, stopped at absorption or at the first
/// jump that would pass the horizon.
pub fn sample_path(
    tables: &JumpTables,
    alpha: &[f64],
    horizon: f64,
    rng: &mut impl Rng,
) -> SamplePath {
    let start = sample_initial(alpha, rng);
    sample_path_from(tables, start, horizon, rng)
}

/// Same, starting from a fixed state (the multi-cycle simulation starts each
/// cycle from the maintained state rather than from a law).
pub fn sample_path_from(
    tables: &JumpTables,
    start: usize,
    horizon: f64,
    rng: &mut impl Rng,
) -> SamplePath {
    let mut state = start;
    let mut states = vec![state];
    let mut jump_times = Vec::new();
    let mut t = 0.0;
    while !tables.is_absorbing(state) {
        let rate = tables.exit_rate[state];
        let u: f64 = rng.gen();
        let holding = -(1.0 - u).ln() / rate;
        if t + holding > horizon {
            break;
        }
        t += holding;
        state = tables.next_state(state, rng.gen());
        states.push(state);
        jump_times.push(t);
    }
    SamplePath { states, jump_times }
}
