//! Synthetic tasks: pendulum next-state regression and the adding problem.

use rand::Rng;

use crate::autodiff::Target;
use crate::cell::Sequence;
use crate::data::{LabeledSequenceSet, Split};
use crate::rng::{item_rng, stream};

/// One RK2 step of the pendulum θ̈ = −sin θ, state (θ, θ̇).
fn pendulum_step(state: [f64; 2], dt: f64) -> [f64; 2] {
    let f = |s: [f64; 2]| [s[1], -s[0].sin()];
    let k1 = f(state);
    let mid = [state[0] + 0.5 * dt * k1[0], state[1] + 0.5 * dt * k1[1]];
    let k2 = f(mid);
    [state[0] + dt * k2[0], state[1] + dt * k2[1]]
}

/// Simulated pendulum states from a given start; returns steps+1 states
/// including the initial one.
pub fn pendulum_rollout(theta0: f64, omega0: f64, dt: f64, steps: usize) -> Vec<[f64; 2]> {
    let mut states = Vec::with_capacity(steps + 1);
    let mut s = [theta0, omega0];
    states.push(s);
    for _ in 0..steps {
        s = pendulum_step(s, dt);
        states.push(s);
    }
    states
}

/// Next-state prediction task: each sample is the observed state sequence
/// (θ_t, θ̇_t) for t < steps, with regression target the state at t = steps.
/// Starts are uniform over [−π/2, π/2]².
pub fn pendulum_trajectories(n: usize, dt: f64, steps: usize, seed: u64) -> LabeledSequenceSet {
    let mut sequences = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = item_rng(seed, stream::TASK_GEN, i as u64);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let theta0 = rng.gen_range(-half_pi..half_pi);
        let omega0 = rng.gen_range(-half_pi..half_pi);
        let states = pendulum_rollout(theta0, omega0, dt, steps);
        let mut data = Vec::with_capacity(steps * 2);
        for s in &states[..steps] {
            data.push(s[0]);
            data.push(s[1]);
        }
        sequences.push(Sequence::new(2, data));
        targets.push(Target::Vector(vec![states[steps][0], states[steps][1]]));
    }
    LabeledSequenceSet {
        sequences,
        targets,
        p: 2,
        split: Split::Train,
    }
}

/// The adding problem: p=2 inputs per step, channel 0 a uniform value in
/// [0,1], channel 1 a marker that is 1.0 at exactly two positions (one per
/// half of the sequence). Target: the sum of the two marked values.
pub fn adding_task(n: usize, t_len: usize, seed: u64) -> LabeledSequenceSet {
    assert!(t_len >= 2, "adding task needs T >= 2");
    let mut sequences = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = item_rng(seed, stream::TASK_GEN, i as u64);
        let values: Vec<f64> = (0..t_len).map(|_| rng.gen_range(0.0..1.0)).collect();
        let first = rng.gen_range(0..t_len / 2);
        let second = rng.gen_range(t_len / 2..t_len);
        let mut data = Vec::with_capacity(t_len * 2);
        for (t, &v) in values.iter().enumerate() {
            data.push(v);
            data.push(if t == first || t == second { 1.0 } else { 0.0 });
        }
        sequences.push(Sequence::new(2, data));
        targets.push(Target::Vector(vec![values[first] + values[second]]));
    }
    LabeledSequenceSet {
        sequences,
        targets,
        p: 2,
        split: Split::Train,
    }
}
