//! Discrete closed-population epidemic simulator with susceptible, infected,
//! and recovered compartments, plus the lagged transition targets used to
//! train next-state metamodels.
//!
//! The one-step map moves `beta*s*i` from susceptible to infected and
//! `gamma*i` from infected to recovered, so the compartment sum is conserved
//! and trajectories stay on the probability simplex. Increasing the lag
//! composes the map with itself, which raises the polynomial order of the
//! transition while shrinking the number of modeled time steps.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Allowed drift of the compartment sum away from 1.
pub const STATE_SUM_TOL: f64 = 1e-12;

/// Population fractions at one time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl SirState {
    /// Builds a state and checks the simplex invariants: every compartment
    /// in [0, 1], summing to 1 within [`STATE_SUM_TOL`].
    pub fn new(s: f64, i: f64, r: f64) -> Result<Self> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(s) && in_unit(i) && in_unit(r)) {
            return Err(Error::domain(format!(
                "compartments must be fractions in [0, 1], got ({s}, {i}, {r})"
            )));
        }
        if ((s + i + r) - 1.0).abs() > STATE_SUM_TOL {
            return Err(Error::domain(format!(
                "compartments must sum to 1, got {}",
                s + i + r
            )));
        }
        Ok(SirState { s, i, r })
    }

    /// Normalizes three nonnegative weights into a state, interpreting their
    /// sum as the population size.
    pub fn from_weights(ws: f64, wi: f64, wr: f64) -> Result<Self> {
        if !(ws >= 0.0 && wi >= 0.0 && wr >= 0.0) {
            return Err(Error::domain(format!(
                "weights must be nonnegative, got ({ws}, {wi}, {wr})"
            )));
        }
        let total = ws + wi + wr;
        if total <= 0.0 {
            return Err(Error::domain("weights sum to zero"));
        }
        SirState::new(ws / total, wi / total, wr / total)
    }

    pub fn sum(&self) -> f64 {
        self.s + self.i + self.r
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s, self.i, self.r]
    }
}

/// Parameters of one simulated run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub beta: f64,
    pub gamma: f64,
    /// Number of one-step updates; the trajectory has `duration + 1` states.
    pub duration: usize,
    /// Stride between supervised input and target states.
    pub lag: usize,
}

impl SirParams {
    pub fn new(beta: f64, gamma: f64, duration: usize, lag: usize) -> Result<Self> {
        if !(beta > 0.0) || !(gamma > 0.0) {
            return Err(Error::contract(format!(
                "rates must be positive, got beta={beta}, gamma={gamma}"
            )));
        }
        if duration < 2 {
            return Err(Error::contract(format!(
                "duration must be at least 2, got {duration}"
            )));
        }
        if lag == 0 {
            return Err(Error::contract("lag must be at least 1"));
        }
        if duration / lag <= 1 {
            return Err(Error::contract(format!(
                "duration {duration} at lag {lag} models {} step(s); need more than 1",
                duration / lag
            )));
        }
        Ok(SirParams {
            beta,
            gamma,
            duration,
            lag,
        })
    }

    /// Number of modeled time steps, integer division.
    pub fn modeled_steps(&self) -> usize {
        self.duration / self.lag
    }
}

/// Advances one time step. Both transition terms are computed once and moved
/// between compartments, so the sum is conserved up to rounding.
pub fn step(state: SirState, beta: f64, gamma: f64) -> Result<SirState> {
    let newly_infected = beta * state.s * state.i;
    let newly_recovered = gamma * state.i;
    let s = state.s - newly_infected;
    let i = state.i + newly_infected - newly_recovered;
    let r = state.r + newly_recovered;
    if s < 0.0 || i < 0.0 || r < 0.0 {
        return Err(Error::domain(format!(
            "step left the simplex (s={s}, i={i}, r={r}): rates beta={beta}, gamma={gamma} \
             are too large for fraction-valued states"
        )));
    }
    Ok(SirState { s, i, r })
}

/// Runs the map for `params.duration` updates, returning every state with
/// the initial one first.
pub fn simulate(state0: SirState, params: &SirParams) -> Result<Vec<SirState>> {
    let mut trajectory = Vec::with_capacity(params.duration + 1);
    trajectory.push(state0);
    let mut current = state0;
    for _ in 0..params.duration {
        current = step(current, params.beta, params.gamma)?;
        trajectory.push(current);
    }
    Ok(trajectory)
}

/// Supervised transitions at stride `lag`: (x_0, x_L), (x_L, x_2L), and so
/// on. A trajectory with T updates models T/L time steps (integer division),
/// and each modeled step after the first supplies one target, giving
/// T/L - 1 pairs; any tail states beyond the last strided one are unused.
pub fn lagged_pairs(trajectory: &[SirState], lag: usize) -> Result<Vec<(SirState, SirState)>> {
    if lag == 0 {
        return Err(Error::contract("lag must be at least 1"));
    }
    if trajectory.is_empty() {
        return Err(Error::contract("empty trajectory"));
    }
    let steps = (trajectory.len() - 1) / lag;
    if steps < 2 {
        return Err(Error::contract(format!(
            "trajectory of {} states models {steps} step(s) at lag {lag}; need more than 1",
            trajectory.len()
        )));
    }
    Ok((0..steps - 1)
        .map(|k| (trajectory[k * lag], trajectory[(k + 1) * lag]))
        .collect())
}

/// Polynomial order of the lag-L transition map. Composing the cubic
/// one-step map with itself doubles the order and adds one, so the order at
/// lag L is 3, 7, 15, 31, 63, ... = 2^(L+1) - 1.
pub fn polynomial_order_for_lag(lag: usize) -> Result<usize> {
    if lag == 0 {
        return Err(Error::contract("lag must be at least 1"));
    }
    let mut order = 3usize;
    for _ in 1..lag {
        order = 2 * order + 1;
    }
    Ok(order)
}

/// Draws a starting state: three weights uniform on (0, 100) normalized by
/// their sum. A zero sum has probability zero but draws again if it happens.
pub fn sample_initial_state(rng: &mut Rng) -> SirState {
    loop {
        let ws = rng.gen_range(0.0..100.0);
        let wi = rng.gen_range(0.0..100.0);
        let wr = rng.gen_range(0.0..100.0);
        if let Ok(state) = SirState::from_weights(ws, wi, wr) {
            return state;
        }
    }
}

/// Which rate distribution a simulation draws from. The train and test
/// intervals do not overlap, so test-regime rates are out of distribution
/// for anything fit on train-regime runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateRegime {
    Train,
    Test,
}

/// (beta interval, gamma interval) for a regime.
pub fn rate_ranges(regime: RateRegime) -> ((f64, f64), (f64, f64)) {
    match regime {
        RateRegime::Train => ((0.02, 0.09), (0.002, 0.01)),
        RateRegime::Test => ((0.1, 0.25), (0.05, 0.1)),
    }
}

/// Draws (beta, gamma) for a regime. The worst case beta of 0.25 keeps
/// beta*s*i strictly below s, so sampled rates can never step a valid state
/// off the simplex.
pub fn sample_rates(regime: RateRegime, rng: &mut Rng) -> (f64, f64) {
    let ((b_lo, b_hi), (g_lo, g_hi)) = rate_ranges(regime);
    (rng.gen_range(b_lo..b_hi), rng.gen_range(g_lo..g_hi))
}

/// One simulated run with its drawn parameters.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub id: usize,
    pub beta: f64,
    pub gamma: f64,
    pub trajectory: Vec<SirState>,
}

/// Generates runs with per-run initial states and rates. Each run draws from
/// its own stream keyed by (seed, run index), so a subset of runs is
/// reproducible without generating the rest, and the draws do not depend on
/// the duration.
pub fn generate_simulations(
    regime: RateRegime,
    n_sims: usize,
    duration: usize,
    seed: u64,
) -> Result<Vec<Simulation>> {
    if n_sims == 0 {
        return Err(Error::contract("need at least one simulation"));
    }
    let mut sims = Vec::with_capacity(n_sims);
    for id in 0..n_sims {
        let mut r = rng::stream_rng(seed, &format!("sim{id}"));
        let state0 = sample_initial_state(&mut r);
        let (beta, gamma) = sample_rates(regime, &mut r);
        let params = SirParams::new(beta, gamma, duration, 1)?;
        let trajectory = simulate(state0, &params)?;
        sims.push(Simulation {
            id,
            beta,
            gamma,
            trajectory,
        });
    }
    Ok(sims)
}

/// CSV of whole trajectories, one row per state.
pub fn trajectories_csv(sims: &[Simulation]) -> String {
    let mut out = String::from("sim_id,t,s,i,r,beta,gamma\n");
    for sim in sims {
        for (t, state) in sim.trajectory.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sim.id, t, state.s, state.i, state.r, sim.beta, sim.gamma
            ));
        }
    }
    out
}

/// CSV of strided supervised transitions, one row per pair.
pub fn lag_pairs_csv(sims: &[Simulation], lag: usize) -> Result<String> {
    let mut out = String::from("sim_id,k,s_in,i_in,r_in,beta,gamma,s_out,i_out,r_out\n");
    for sim in sims {
        for (k, (from, to)) in lagged_pairs(&sim.trajectory, lag)?.into_iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                sim.id, k, from.s, from.i, from.r, sim.beta, sim.gamma, to.s, to.i, to.r
            ));
        }
    }
    Ok(out)
}
