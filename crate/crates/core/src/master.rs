//! Continuous-time ensemble dynamics.
//!
//! The ensemble state is the weighted collection of sector blocks
//! (p_m, w_m, u_m). Weights obey a pure-death cascade with per-qubit rate
//! gamma, whose solution is a binomial distribution; each sector Bloch pair
//! (w, 2u) rotates continuously with the small-angle step rate 2/sqrt(M)
//! and receives loss feeds from the sector above through the single-loss
//! constants A_m, B_m. A fixed-step fourth-order integrator keeps runs
//! bit-reproducible.

use std::io::Write;

use crate::block::{Block, BlockState, BLOCK_SLACK, TRACE_TOLERANCE};
use crate::error::{Error, Result};
use crate::subspace::{grover_rate, single_loss_constants};

/// Integration grid and physical parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeParams {
    pub n: usize,
    pub gamma: f64,
    /// Step size in search-step time units.
    pub dt: f64,
    pub t_end: f64,
}

/// Default integration step.
pub const DEFAULT_DT: f64 = 0.1;

/// Stability guard for the fixed-step integrator.
pub const MAX_DT: f64 = 0.5;

impl OdeParams {
    pub fn new(n: usize, gamma: f64, dt: f64, t_end: f64) -> Result<Self> {
        let params = OdeParams {
            n,
            gamma,
            dt,
            t_end,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.n > crate::config::MAX_REGISTER_QUBITS {
            return Err(Error::InvalidConfig(format!("unsupported n = {}", self.n)));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidConfig(format!(
                "dt = {} outside (0, {MAX_DT}]",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig(format!("bad t_end = {}", self.t_end)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig(format!("bad gamma = {}", self.gamma)));
        }
        Ok(())
    }
}

/// Time derivative of every sector. The m = 0 entry holds only the weight
/// inflow; sector n has no feed from above.
pub fn derivative(state: &BlockState, params: &OdeParams) -> Vec<Block> {
    let n = params.n;
    let gamma = params.gamma;
    let blocks = state.blocks();
    let mut rates = vec![Block::default(); n + 1];

    if n >= 1 {
        rates[0].p = gamma * blocks[1].p;
    }
    for m in 1..=n {
        let b = blocks[m];
        let omega = grover_rate(m);
        let mg = m as f64 * gamma;
        let mut dp = -mg * b.p;
        // rotation of the Bloch pair (w, 2u) at angular rate 2 omega_m;
        // this pairing keeps w^2 + 4u^2 constant and the block positive
        let mut dw = 4.0 * omega * b.u - mg * b.w;
        let mut du = -omega * b.w - mg * b.u;
        if m < n {
            let above = blocks[m + 1];
            let feed = (m + 1) as f64 * gamma;
            let (a, bb) = single_loss_constants(m);
            let big_m = (m as f64).exp2();
            let cross = bb / (2.0 * (2.0 * big_m - 1.0).sqrt());
            dp += feed * above.p;
            dw += feed * ((1.0 - a) * above.w + a * above.p);
            du += feed * (bb * above.u - cross * (above.w - above.p));
        }
        rates[m] = Block::new(dp, dw, du);
    }
    rates
}

/// A fixed-grid trajectory of block states.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<BlockState>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &BlockState {
        self.states.last().expect("series is never empty")
    }
}

/// Relative Bloch-radius overshoot treated as integrator error and
/// projected back onto the positivity boundary.
const PROJECTION_BUDGET: f64 = 1e-6;

/// The exact flow never moves a sector outside its Bloch ball (rotations
/// preserve the radius, decay is uniform, loss feeds add positive weight),
/// but the fixed-step integrator can overshoot a pure-state boundary by its
/// truncation error. Rescale such sectors back onto the ball; anything
/// beyond the error budget is left for the stability guard to report.
fn project_positive(block: Block) -> Block {
    if block.p <= 0.0 {
        return block;
    }
    let radius = block.bloch_length_sq().sqrt();
    if radius > block.p && radius <= block.p * (1.0 + PROJECTION_BUDGET) {
        let scale = block.p / radius;
        return Block::new(block.p, block.w * scale, block.u * scale);
    }
    block
}

fn advance(state: &BlockState, params: &OdeParams, dt: f64) -> BlockState {
    let shifted = |base: &BlockState, rate: &[Block], h: f64| {
        let blocks = base
            .blocks()
            .iter()
            .zip(rate)
            .map(|(b, r)| Block::new(b.p + h * r.p, b.w + h * r.w, b.u + h * r.u))
            .collect();
        BlockState::from_blocks(blocks)
    };

    let k1 = derivative(state, params);
    let k2 = derivative(&shifted(state, &k1, 0.5 * dt), params);
    let k3 = derivative(&shifted(state, &k2, 0.5 * dt), params);
    let k4 = derivative(&shifted(state, &k3, dt), params);

    let blocks = state
        .blocks()
        .iter()
        .enumerate()
        .map(|(m, b)| {
            let sixth = dt / 6.0;
            project_positive(Block::new(
                b.p + sixth * (k1[m].p + 2.0 * k2[m].p + 2.0 * k3[m].p + k4[m].p),
                b.w + sixth * (k1[m].w + 2.0 * k2[m].w + 2.0 * k3[m].w + k4[m].w),
                b.u + sixth * (k1[m].u + 2.0 * k2[m].u + 2.0 * k3[m].u + k4[m].u),
            ))
        })
        .collect();
    BlockState::from_blocks(blocks)
}

/// Integrates the master dynamics, handing every grid state to `observer`.
/// The final grid point lands exactly on `t_end`. Aborts when the total
/// trace drifts beyond the accumulated-integration tolerance.
pub fn integrate_with<F>(s0: &BlockState, params: &OdeParams, mut observer: F) -> Result<BlockState>
where
    F: FnMut(f64, &BlockState) -> Result<()>,
{
    params.validate()?;
    if s0.n() != params.n {
        return Err(Error::InvalidConfig(format!(
            "initial state has {} sectors, parameters expect {}",
            s0.n() + 1,
            params.n + 1
        )));
    }

    let mut state = s0.clone();
    let mut t = 0.0;
    observer(t, &state)?;

    let steps = (params.t_end / params.dt).ceil() as usize;
    for k in 0..steps {
        let next_t = ((k + 1) as f64 * params.dt).min(params.t_end);
        let dt = next_t - t;
        if dt <= 0.0 {
            break;
        }
        state = advance(&state, params, dt);
        t = next_t;
        let drift = (state.total_trace() - 1.0).abs();
        if drift > TRACE_TOLERANCE {
            return Err(Error::Instability { t, drift });
        }
        observer(t, &state)?;
    }
    Ok(state)
}

/// Integrates and stores the whole grid trajectory.
pub fn integrate(s0: &BlockState, params: &OdeParams) -> Result<TimeSeries> {
    let mut series = TimeSeries {
        times: Vec::new(),
        states: Vec::new(),
    };
    integrate_with(s0, params, |t, state| {
        series.times.push(t);
        series.states.push(state.clone());
        Ok(())
    })?;
    Ok(series)
}

/// Closed-form sector weights of the pure-death loss cascade:
/// p_m(t) = C(n, m) e^(-m gamma t) (1 - e^(-gamma t))^(n - m).
pub fn binomial_weights(n: usize, gamma: f64, t: f64) -> Vec<f64> {
    let survive = (-gamma * t).exp();
    let lost = 1.0 - survive;
    let mut binom = 1.0f64;
    (0..=n)
        .map(|m| {
            if m > 0 {
                binom *= (n - m + 1) as f64 / m as f64;
            }
            binom * survive.powi(m as i32) * lost.powi((n - m) as i32)
        })
        .collect()
}

/// Mean surviving-qubit count n e^(-gamma t).
pub fn mean_survivors(n: usize, gamma: f64, t: f64) -> f64 {
    n as f64 * (-gamma * t).exp()
}

/// Which dephasing-rate expression the reduced two-level model uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DephasingForm {
    /// Sector coefficients evaluated at the running mean survivor count:
    /// Gamma = (mbar - (mbar + 1) B(mbar)) gamma.
    #[default]
    Exact,
    /// Large-register expansion gamma/sqrt(2) + (1 - 1/sqrt(2)) n gamma e^(-gamma t).
    Approximate,
}

/// The two summed sector variables of the reduced two-level model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragedModelState {
    pub w_bar: f64,
    pub u_bar: f64,
}

/// A trajectory of the reduced two-level model.
#[derive(Clone, Debug)]
pub struct AveragedSeries {
    pub times: Vec<f64>,
    pub states: Vec<AveragedModelState>,
}

fn dephasing_rate(n: usize, gamma: f64, t: f64, form: DephasingForm) -> f64 {
    match form {
        DephasingForm::Exact => {
            let mbar = mean_survivors(n, gamma, t);
            let big_m = mbar.exp2();
            let b = ((big_m - 1.0) / (2.0 * big_m - 1.0)).sqrt();
            (mbar - (mbar + 1.0) * b) * gamma
        }
        DephasingForm::Approximate => {
            let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
            gamma * inv_sqrt2 + (1.0 - inv_sqrt2) * n as f64 * gamma * (-gamma * t).exp()
        }
    }
}

/// Integrates the reduced two-level model with time-dependent rotation rate
/// omega(t) = 2^(-(mbar(t) - 2)/2) and the selected dephasing form.
pub fn averaged_model(params: &OdeParams, form: DephasingForm) -> Result<AveragedSeries> {
    params.validate()?;
    let big_n = (params.n as f64).exp2();
    let mut w = 2.0 / big_n - 1.0;
    let mut u = (big_n - 1.0).sqrt() / big_n;

    let rates = |t: f64, w: f64, u: f64| {
        let mbar = mean_survivors(params.n, params.gamma, t);
        let omega = (-(mbar - 2.0) / 2.0).exp2();
        let gamma_t = dephasing_rate(params.n, params.gamma, t, form);
        (4.0 * omega * u, -omega * w - gamma_t * u)
    };

    let mut series = AveragedSeries {
        times: vec![0.0],
        states: vec![AveragedModelState { w_bar: w, u_bar: u }],
    };
    let steps = (params.t_end / params.dt).ceil() as usize;
    let mut t = 0.0;
    for k in 0..steps {
        let next_t = ((k + 1) as f64 * params.dt).min(params.t_end);
        let dt = next_t - t;
        if dt <= 0.0 {
            break;
        }
        let (k1w, k1u) = rates(t, w, u);
        let (k2w, k2u) = rates(t + 0.5 * dt, w + 0.5 * dt * k1w, u + 0.5 * dt * k1u);
        let (k3w, k3u) = rates(t + 0.5 * dt, w + 0.5 * dt * k2w, u + 0.5 * dt * k2u);
        let (k4w, k4u) = rates(t + dt, w + dt * k3w, u + dt * k3u);
        w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        t = next_t;
        series.times.push(t);
        series.states.push(AveragedModelState { w_bar: w, u_bar: u });
    }
    Ok(series)
}

/// Writes the trajectory as CSV with columns
/// `t, p_0..p_n, F_1..F_n, F_weighted, w_bar, u_bar`.
/// Sector fractions are left blank wherever the sector weight is below the
/// positivity slack.
pub fn write_series_csv<W: Write>(series: &TimeSeries, out: &mut W) -> Result<()> {
    let n = series
        .states
        .first()
        .map(|s| s.n())
        .ok_or_else(|| Error::InvalidConfig("empty time series".into()))?;

    write!(out, "t")?;
    for m in 0..=n {
        write!(out, ",p_{m}")?;
    }
    for m in 1..=n {
        write!(out, ",F_{m}")?;
    }
    writeln!(out, ",F_weighted,w_bar,u_bar")?;

    for (t, state) in series.times.iter().zip(&series.states) {
        write!(out, "{}", fmt_sig(*t))?;
        for block in state.blocks() {
            write!(out, ",{}", fmt_sig(block.p))?;
        }
        for m in 1..=n {
            let block = state.block(m);
            if block.p > BLOCK_SLACK {
                write!(out, ",{}", fmt_sig(block.target_population() / block.p))?;
            } else {
                write!(out, ",")?;
            }
        }
        writeln!(
            out,
            ",{},{},{}",
            fmt_sig(state.weighted_target_probability()),
            fmt_sig(state.sum_w()),
            fmt_sig(state.sum_u())
        )?;
    }
    Ok(())
}

/// Formats with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn derivative_conserves_weight_flow() {
        let params = OdeParams::new(6, 2e-3, 0.1, 1.0).unwrap();
        let state = BlockState::symmetric_init(6);
        let rates = derivative(&state, &params);
        let total: f64 = rates.iter().map(|r| r.p).sum();
        assert!(total.abs() < 1e-15 * 6.0);
    }

    #[test]
    fn lossless_derivative_freezes_weights() {
        let params = OdeParams::new(4, 0.0, 0.1, 1.0).unwrap();
        let state = BlockState::symmetric_init(4);
        let rates = derivative(&state, &params);
        assert!(rates.iter().all(|r| r.p == 0.0));
        // rotation still moves the sector variables
        assert!(rates[4].u.abs() > 0.0);
    }

    #[test]
    fn pure_target_rotates_out_of_fixed_point() {
        let n = 3;
        let params = OdeParams::new(n, 0.0, 0.1, 1.0).unwrap();
        let mut blocks = vec![Block::default(); n + 1];
        blocks[n] = Block::new(1.0, 1.0, 0.0);
        let state = BlockState::from_blocks(blocks);
        let rates = derivative(&state, &params);
        assert!(rates[n].w.abs() < TOL);
        assert!((rates[n].u - (-grover_rate(n))).abs() < TOL);
    }

    #[test]
    fn loss_feed_matches_single_loss_map() {
        // complement sector above feeds w and u with the same constants the
        // discrete loss map uses: dw_1 = -2 gamma / 3, du_1 = +2 gamma / 3
        let gamma = 1e-3;
        let params = OdeParams::new(2, gamma, 0.1, 1.0).unwrap();
        let mut blocks = vec![Block::default(); 3];
        blocks[2] = Block::new(1.0, -1.0, 0.0);
        let state = BlockState::from_blocks(blocks);
        let rates = derivative(&state, &params);
        assert!((rates[1].w - (-2.0 * gamma / 3.0)).abs() < TOL);
        assert!((rates[1].u - 2.0 * gamma / 3.0).abs() < TOL);
    }

    #[test]
    fn lossless_integration_reaches_target() {
        let n = 12;
        let params = OdeParams::new(n, 0.0, DEFAULT_DT, 50.0).unwrap();
        let series = integrate(&BlockState::symmetric_init(n), &params).unwrap();
        let f = series.last_state().weighted_target_probability();
        assert!(f >= 0.999, "F = {f}");
    }

    #[test]
    fn integrated_weights_match_binomial_law() {
        let n = 8;
        let gamma = 2e-3;
        let params = OdeParams::new(n, gamma, DEFAULT_DT, 400.0).unwrap();
        integrate_with(&BlockState::symmetric_init(n), &params, |t, state| {
            let closed = binomial_weights(n, gamma, t);
            for m in 0..=n {
                assert!(
                    (state.block(m).p - closed[m]).abs() < 1e-8,
                    "t = {t}, m = {m}"
                );
            }
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn integration_states_stay_valid() {
        let params = OdeParams::new(6, 5e-3, DEFAULT_DT, 200.0).unwrap();
        integrate_with(&BlockState::symmetric_init(6), &params, |t, state| {
            let violations = state.validate();
            assert!(violations.is_empty(), "t = {t}: {violations:?}");
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn instability_is_reported() {
        // a loss rate far outside the stability region blows up the trace
        let params = OdeParams::new(30, 20.0, 0.5, 50.0).unwrap();
        let result = integrate(&BlockState::symmetric_init(30), &params);
        assert!(matches!(result, Err(Error::Instability { .. })));
    }

    #[test]
    fn binomial_weights_examples() {
        let at_zero = binomial_weights(5, 1e-3, 0.0);
        assert!((at_zero[5] - 1.0).abs() < TOL);
        assert!(at_zero[..5].iter().all(|&p| p.abs() < TOL));

        // survival probability 1/2 per qubit
        let half_life = 2f64.ln() / 1e-3;
        let fair = binomial_weights(2, 1e-3, half_life);
        assert!((fair[0] - 0.25).abs() < 1e-12);
        assert!((fair[1] - 0.5).abs() < 1e-12);
        assert!((fair[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn binomial_weights_normalize_and_average() {
        for (n, gamma, t) in [(4, 1e-3, 100.0), (24, 4e-4, 1500.0), (24, 4e-4, 9000.0)] {
            let weights = binomial_weights(n, gamma, t);
            let sum: f64 = weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(weights.iter().all(|&p| p >= 0.0));
            let mean: f64 = weights
                .iter()
                .enumerate()
                .map(|(m, p)| m as f64 * p)
                .sum();
            assert!((mean - mean_survivors(n, gamma, t)).abs() < 1e-8);
        }
    }

    #[test]
    fn averaged_model_is_undamped_without_loss() {
        let params = OdeParams::new(10, 0.0, DEFAULT_DT, 200.0).unwrap();
        let series = averaged_model(&params, DephasingForm::Exact).unwrap();
        let radius = |s: &AveragedModelState| (s.w_bar * s.w_bar + 4.0 * s.u_bar * s.u_bar).sqrt();
        let r0 = radius(&series.states[0]);
        for s in &series.states {
            assert!((radius(s) - r0).abs() < 1e-9);
        }
    }

    #[test]
    fn averaged_model_initial_condition() {
        let n = 24;
        let params = OdeParams::new(n, 4e-4, DEFAULT_DT, 1.0).unwrap();
        let series = averaged_model(&params, DephasingForm::Exact).unwrap();
        let big_n = (n as f64).exp2();
        assert!((series.states[0].w_bar - (2.0 / big_n - 1.0)).abs() < TOL);
    }

    #[test]
    fn averaged_model_tracks_full_sum_at_early_times() {
        // the single-frequency reduction is quantitative while the sector
        // distribution is still narrow (mbar near n); it cannot follow the
        // inter-sector dephasing that damps the full sum at later times
        let params = OdeParams::new(24, 4e-4, DEFAULT_DT, 250.0).unwrap();
        let series = integrate(&BlockState::symmetric_init(24), &params).unwrap();
        for form in [DephasingForm::Exact, DephasingForm::Approximate] {
            let avg = averaged_model(&params, form).unwrap();
            let w_full = series.last_state().sum_w();
            let w_avg = avg.states.last().unwrap().w_bar;
            assert!(
                (w_full - w_avg).abs() <= 0.03 * w_full.abs(),
                "{form:?}: {w_full} vs {w_avg}"
            );
        }
    }

    #[test]
    fn averaged_model_envelope_decays() {
        let params = OdeParams::new(24, 4e-4, DEFAULT_DT, 3000.0).unwrap();
        let series = averaged_model(&params, DephasingForm::Exact).unwrap();
        let early: f64 = series.states[..500]
            .iter()
            .map(|s| s.w_bar.abs())
            .fold(0.0, f64::max);
        let late: f64 = series.states[series.states.len() - 500..]
            .iter()
            .map(|s| s.w_bar.abs())
            .fold(0.0, f64::max);
        assert!(late < 0.5 * early, "early {early}, late {late}");
    }

    #[test]
    fn csv_schema_has_expected_columns() {
        let params = OdeParams::new(2, 1e-3, 0.1, 0.3).unwrap();
        let series = integrate(&BlockState::symmetric_init(2), &params).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&series, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,p_0,p_1,p_2,F_1,F_2,F_weighted,w_bar,u_bar"
        );
        // empty sectors emit blank fractions
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[4], "");
    }
}
