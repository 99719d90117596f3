//! Single excitable node driven by the time-multiplexed signal.
//!
//! The node is a leaky integrate-and-fire surrogate,
//! `τ dv/dt = -v + g·u(t) + b`, with an absolute refractory period after
//! every spike. Its spike train is cut into θ-long slots; a slot reads 1 if
//! it contains at least one spike.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::DriveSignal;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Closed-form update for piecewise-constant drive; threshold crossings
    /// are located analytically inside the step.
    #[default]
    Exact,
    /// Forward Euler with linear interpolation of the crossing time.
    Euler,
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Exact => "exact",
            Integrator::Euler => "euler",
        })
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Integrator::Exact),
            "euler" => Ok(Integrator::Euler),
            other => Err(Error::param(format!("unknown integrator {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuronParams {
    pub tau_s: f64,
    pub threshold: f64,
    /// Potential immediately after a spike and throughout the refractory time.
    pub reset_value: f64,
    /// Potential at the start of every datapoint.
    pub rest_value: f64,
    pub refractory_s: f64,
    /// Width of the emitted pulse in the rendered output trace.
    pub spike_width_s: f64,
    pub dt_s: f64,
    /// Negative values make the node fire on drops of the drive.
    pub input_gain: f64,
    pub bias: f64,
    /// Standard deviation of Gaussian noise added to the drive at every step.
    pub noise_sigma: f64,
    pub integrator: Integrator,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams {
            tau_s: 1e-9,
            threshold: 0.5,
            reset_value: 0.0,
            rest_value: 0.0,
            refractory_s: 1e-9,
            spike_width_s: 150e-12,
            dt_s: 25e-12,
            input_gain: 1.0,
            bias: 0.0,
            noise_sigma: 0.0,
            integrator: Integrator::Exact,
        }
    }
}

impl NeuronParams {
    /// Number of integration steps per virtual node.
    pub fn steps_per_node(&self, theta_s: f64) -> Result<usize> {
        let ratio = theta_s / self.dt_s;
        let n = ratio.round();
        if !(n >= 1.0 && (ratio - n).abs() <= 1e-9 * n) {
            return Err(Error::param(format!(
                "dt_s = {} does not divide theta_s = {}",
                self.dt_s, theta_s
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self, theta_s: f64) -> Result<()> {
        let finite = [
            self.tau_s,
            self.threshold,
            self.reset_value,
            self.rest_value,
            self.refractory_s,
            self.spike_width_s,
            self.dt_s,
            self.input_gain,
            self.bias,
            self.noise_sigma,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("neuron parameters must be finite"));
        }
        if self.dt_s <= 0.0 {
            return Err(Error::param("dt_s must be positive"));
        }
        self.steps_per_node(theta_s)?;
        if self.dt_s >= self.spike_width_s {
            return Err(Error::param("dt_s must be smaller than spike_width_s"));
        }
        if self.tau_s <= self.dt_s {
            return Err(Error::param("tau_s must exceed dt_s"));
        }
        if self.refractory_s < 0.0 {
            return Err(Error::param("refractory_s must be >= 0"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::param("noise_sigma must be >= 0"));
        }
        if self.reset_value >= self.threshold {
            return Err(Error::param("reset_value must lie below threshold"));
        }
        Ok(())
    }
}

/// Result of simulating one datapoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub dt_s: f64,
    /// Membrane value at `t = k·dt` for `k = 0..=steps`.
    pub trace: Vec<f64>,
    /// Spike instants in seconds from the start of the datapoint.
    pub spike_times: Vec<f64>,
}

/// Simulate one datapoint from rest.
///
/// `noise_seed` only matters when `noise_sigma > 0`.
pub fn simulate(
    signal: &DriveSignal,
    params: &NeuronParams,
    noise_seed: u64,
) -> Result<Simulation> {
    let mut trace = Vec::new();
    let spike_times = run_node(signal, params, noise_seed, Some(&mut trace))?;
    Ok(Simulation {
        dt_s: params.dt_s,
        trace,
        spike_times,
    })
}

/// Spike times only; skips recording the analog trace.
pub fn spike_times(
    signal: &DriveSignal,
    params: &NeuronParams,
    noise_seed: u64,
) -> Result<Vec<f64>> {
    run_node(signal, params, noise_seed, None)
}

fn run_node(
    signal: &DriveSignal,
    params: &NeuronParams,
    noise_seed: u64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::param("cannot simulate an empty drive signal"));
    }
    params.validate(signal.theta_s)?;
    if let Some(bad) = signal.node_values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!(
            "non-finite drive value at node {bad}"
        )));
    }

    let steps_per_node = params.steps_per_node(signal.theta_s)?;
    let dt = params.dt_s;
    let tau = params.tau_s;
    let thr = params.threshold;
    let reset = params.reset_value;
    let refractory = params.refractory_s;
    let full_decay = (-dt / tau).exp();
    let mut rng = (params.noise_sigma > 0.0).then(|| seed::rng(noise_seed));

    let mut v = params.rest_value;
    let mut refractory_end = f64::NEG_INFINITY;
    let mut spikes = Vec::new();
    if let Some(t) = trace.as_deref_mut() {
        t.clear();
        t.reserve(signal.len() * steps_per_node + 1);
        t.push(v);
    }

    for (node, &u) in signal.node_values.iter().enumerate() {
        let base_drive = params.input_gain * u + params.bias;
        for sub in 0..steps_per_node {
            let k = node * steps_per_node + sub;
            let t0 = k as f64 * dt;
            let t1 = (k + 1) as f64 * dt;
            let drive = match rng.as_mut() {
                Some(r) => {
                    let z: f64 = StandardNormal.sample(r);
                    base_drive + params.noise_sigma * z
                }
                None => base_drive,
            };
            match params.integrator {
                Integrator::Exact => exact_step(
                    &mut v,
                    &mut refractory_end,
                    &mut spikes,
                    (t0, t1),
                    drive,
                    tau,
                    thr,
                    reset,
                    refractory,
                    full_decay,
                ),
                Integrator::Euler => {
                    if t0 < refractory_end {
                        v = reset;
                    } else if v >= thr {
                        spikes.push(t0);
                        v = reset;
                        refractory_end = t0 + refractory;
                    } else {
                        let next = v + dt / tau * (drive - v);
                        if next >= thr {
                            let t = t0 + dt * (thr - v) / (next - v);
                            spikes.push(t);
                            v = reset;
                            refractory_end = t + refractory;
                        } else {
                            v = next;
                        }
                    }
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(v);
            }
        }
    }
    Ok(spikes)
}

#[allow(clippy::too_many_arguments)]
fn exact_step(
    v: &mut f64,
    refractory_end: &mut f64,
    spikes: &mut Vec<f64>,
    (t0, t1): (f64, f64),
    drive: f64,
    tau: f64,
    thr: f64,
    reset: f64,
    refractory: f64,
    full_decay: f64,
) {
    let mut cur = t0;
    loop {
        if cur < *refractory_end {
            *v = reset;
            if *refractory_end >= t1 {
                return;
            }
            cur = *refractory_end;
        }
        if *v >= thr {
            spikes.push(cur);
            *v = reset;
            *refractory_end = cur + refractory;
            if refractory > 0.0 {
                continue;
            }
        }
        let decay = if cur == t0 {
            full_decay
        } else {
            (-(t1 - cur) / tau).exp()
        };
        let next = drive + (*v - drive) * decay;
        if next < thr {
            *v = next;
            return;
        }
        // v < thr <= next, so the trajectory is rising towards drive > thr.
        let t_cross = (cur + tau * ((*v - drive) / (thr - drive)).ln()).clamp(cur, t1);
        spikes.push(t_cross);
        *v = reset;
        *refractory_end = t_cross + refractory;
        if refractory == 0.0 && (t_cross >= t1 || t_cross <= cur) {
            return;
        }
        cur = t_cross;
    }
}

/// Slot readout: `S[i] = 1` iff some spike falls in `[i·θ, (i+1)·θ)` for a
/// non-padding slot `i`.
pub fn binarize(spike_times: &[f64], signal: &DriveSignal) -> Vec<u8> {
    let n_v = signal.n_v();
    let mut s = vec![0u8; n_v];
    for &t in spike_times {
        if t < 0.0 {
            continue;
        }
        let slot = (t / signal.theta_s).floor() as usize;
        if slot < n_v {
            s[slot] = 1;
        }
    }
    s
}

/// Pulse train of the emitted spikes sampled at `dt`: 1 within
/// `spike_width_s` after each spike, 0 elsewhere.
pub fn render_output(spike_times: &[f64], duration_s: f64, params: &NeuronParams) -> Vec<f64> {
    let n = (duration_s / params.dt_s).round() as usize;
    let mut out = vec![0.0; n];
    for &t in spike_times {
        let start = (t / params.dt_s).ceil().max(0.0) as usize;
        let end = ((t + params.spike_width_s) / params.dt_s).ceil() as usize;
        for x in out.iter_mut().take(end.min(n)).skip(start) {
            *x = 1.0;
        }
    }
    out
}

/// Binary `P × N_v` matrix of slot readouts, row-major.
///
/// Equality compares the bits only, not the attached spike times.
#[derive(Clone, Debug)]
pub struct SpikeRaster {
    n_rows: usize,
    n_v: usize,
    bits: Vec<u8>,
    /// Per-datapoint spike instants, when the raster came from a simulation.
    pub spike_times: Option<Vec<Vec<f64>>>,
}

impl PartialEq for SpikeRaster {
    fn eq(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows && self.n_v == other.n_v && self.bits == other.bits
    }
}

impl Eq for SpikeRaster {}

impl SpikeRaster {
    pub fn zeros(n_rows: usize, n_v: usize) -> Self {
        SpikeRaster {
            n_rows,
            n_v,
            bits: vec![0; n_rows * n_v],
            spike_times: None,
        }
    }

    /// Build from rows of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n_v = rows.first().map_or(0, |r| r.as_ref().len());
        let mut bits = Vec::with_capacity(rows.len() * n_v);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_v {
                return Err(Error::param(format!(
                    "raster row {i} has {} nodes, expected {n_v}",
                    r.len()
                )));
            }
            if let Some(&b) = r.iter().find(|&&b| b > 1) {
                return Err(Error::param(format!("raster row {i} contains value {b}")));
            }
            bits.extend_from_slice(r);
        }
        Ok(SpikeRaster {
            n_rows: rows.len(),
            n_v,
            bits,
            spike_times: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.n_v..(i + 1) * self.n_v]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, node: usize) -> u8 {
        self.bits[i * self.n_v + node]
    }

    pub fn set(&mut self, i: usize, node: usize, value: bool) {
        self.bits[i * self.n_v + node] = value as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Fraction of ones over the whole raster.
    pub fn density(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count_ones() as f64 / self.bits.len() as f64
        }
    }

    /// New raster made of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> SpikeRaster {
        let mut bits = Vec::with_capacity(indices.len() * self.n_v);
        for &i in indices {
            bits.extend_from_slice(self.row(i));
        }
        SpikeRaster {
            n_rows: indices.len(),
            n_v: self.n_v,
            bits,
            spike_times: self
                .spike_times
                .as_ref()
                .map(|st| indices.iter().map(|&i| st[i].clone()).collect()),
        }
    }

    /// Number of differing bits; rasters must share a shape.
    pub fn hamming(&self, other: &SpikeRaster) -> usize {
        assert_eq!((self.n_rows, self.n_v), (other.n_rows, other.n_v));
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Headerless CSV of 0/1, one row per datapoint.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for r in self.rows() {
            w.write_record(r.iter().map(|b| if *b == 1 { "1" } else { "0" }))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::format(path, format!("{other:?}")),
            })?;
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| match f.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::format(
                        path,
                        format!("row {}: expected 0 or 1, got {other:?}", i + 1),
                    )),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        SpikeRaster::from_rows(&rows).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Simulate every datapoint from rest and stack the slot readouts.
///
/// Datapoints run in parallel; each draws its drive noise from a sub-seed of
/// `noise_seed` keyed by its row index, so the result does not depend on the
/// thread schedule.
pub fn run_reservoir(
    signals: &[DriveSignal],
    params: &NeuronParams,
    noise_seed: u64,
) -> Result<SpikeRaster> {
    let Some(first) = signals.first() else {
        return Ok(SpikeRaster::zeros(0, 0));
    };
    let n_v = first.n_v();
    if let Some(i) = signals
        .iter()
        .position(|s| s.n_v() != n_v || s.theta_s != first.theta_s)
    {
        return Err(Error::param(format!(
            "signal {i} differs in node count or theta from signal 0"
        )));
    }
    params.validate(first.theta_s)?;

    let times: Vec<Vec<f64>> = signals
        .par_iter()
        .enumerate()
        .map(|(i, s)| spike_times(s, params, datapoint_noise_seed(noise_seed, i)))
        .collect::<Result<_>>()?;

    let mut raster = SpikeRaster::zeros(signals.len(), n_v);
    for (i, (t, s)) in times.iter().zip(signals).enumerate() {
        raster.bits[i * n_v..(i + 1) * n_v].copy_from_slice(&binarize(t, s));
    }
    raster.spike_times = Some(times);
    Ok(raster)
}

pub fn datapoint_noise_seed(noise_seed: u64, index: usize) -> u64 {
    seed::derive_indexed(noise_seed, "neuron-noise", &[index as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub density: f64,
    pub iterations: usize,
    pub target_density: f64,
    pub window: (f64, f64),
    pub within_window: bool,
}

/// Bisect the firing threshold until the raster's spike density on `signals`
/// is close to `target`. Density falls as the threshold rises.
pub fn calibrate_threshold(
    signals: &[DriveSignal],
    params: &NeuronParams,
    noise_seed: u64,
    target: f64,
    window: (f64, f64),
) -> Result<Calibration> {
    if signals.is_empty() {
        return Err(Error::param("calibration needs at least one signal"));
    }
    if !(window.0 <= target && target <= window.1) {
        return Err(Error::param(
            "calibration target must lie inside its window",
        ));
    }
    let max_drive = signals
        .iter()
        .flat_map(|s| s.node_values.iter())
        .map(|&u| params.input_gain * u + params.bias)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = (max_drive - params.reset_value).abs().max(1e-12);
    let mut lo = params.reset_value + 1e-9 * span;
    let mut hi = max_drive.max(lo) + 1e-9 * span;

    let density_at = |thr: f64| -> Result<f64> {
        let p = NeuronParams {
            threshold: thr,
            ..params.clone()
        };
        Ok(run_reservoir(signals, &p, noise_seed)?.density())
    };

    let mut best = (hi, density_at(hi)?);
    let mut iterations = 0;
    for _ in 0..60 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let d = density_at(mid)?;
        if (d - target).abs() < (best.1 - target).abs() {
            best = (mid, d);
        }
        if (d - target).abs() <= 0.005 {
            break;
        }
        if d > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration {
        threshold: best.0,
        density: best.1,
        iterations,
        target_density: target,
        window,
        within_window: window.0 <= best.1 && best.1 <= window.1,
    })
}

/// `time_s,value` CSV of an analog trace sampled every `dt_s`.
pub fn write_trace_csv(path: &Path, dt_s: f64, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_s", "value"])?;
    for (k, v) in values.iter().enumerate() {
        w.write_record([(k as f64 * dt_s).to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::DriveScale;

    const THETA: f64 = 250e-12;

    fn signal(values: Vec<f64>, n_pad: usize) -> DriveSignal {
        let mut node_values = values;
        node_values.extend(std::iter::repeat_n(0.0, n_pad));
        DriveSignal {
            node_values,
            theta_s: THETA,
            n_pad,
            scale: DriveScale::IDENTITY,
        }
    }

    #[test]
    fn quiescent_node() {
        let sim = simulate(&signal(vec![0.0; 16], 8), &NeuronParams::default(), 0).unwrap();
        assert!(sim.spike_times.is_empty());
        assert!(sim.trace.iter().all(|&v| v == 0.0));
        assert_eq!(sim.trace.len(), 24 * 10 + 1);
    }

    #[test]
    fn first_passage_matches_closed_form() {
        // g·u + b = 2·threshold, so v(t) = 2θ(1 - e^{-t/τ}) reaches θ at τ ln 2.
        for integrator in [Integrator::Exact, Integrator::Euler] {
            let p = NeuronParams {
                threshold: 0.5,
                integrator,
                ..Default::default()
            };
            let sim = simulate(&signal(vec![1.0; 12], 0), &p, 0).unwrap();
            let expect = 1e-9 * 2f64.ln();
            let first = sim.spike_times[0];
            assert!(
                (first - expect).abs() <= p.dt_s,
                "{integrator}: {first} vs {expect}"
            );
        }
    }

    #[test]
    fn refractory_swallows_second_pulse() {
        // Each pulse alone crosses threshold; the second starts 0.5 ns after
        // the first spike, well inside the 1 ns refractory window.
        let p = NeuronParams {
            threshold: 0.5,
            ..Default::default()
        };
        let strong = 50.0;
        let mut values = vec![0.0; 12];
        values[0] = strong;
        values[2] = strong;
        let sim = simulate(&signal(values, 0), &p, 0).unwrap();
        assert_eq!(sim.spike_times.len(), 1);
    }

    #[test]
    fn spacing_never_below_refractory() {
        let p = NeuronParams {
            threshold: 0.3,
            ..Default::default()
        };
        let sim = simulate(&signal(vec![5.0; 200], 0), &p, 0).unwrap();
        assert!(sim.spike_times.len() > 10);
        for w in sim.spike_times.windows(2) {
            assert!(w[1] - w[0] >= p.refractory_s * (1.0 - 1e-12));
        }
    }

    #[test]
    fn binarize_single_bin() {
        let s = signal(vec![0.0; 8], 8);
        assert_eq!(binarize(&[], &s), vec![0; 8]);
        let b = binarize(&[3.1 * THETA], &s);
        assert_eq!(b, vec![0, 0, 0, 1, 0, 0, 0, 0]);
        // Padding slots are dropped from the readout.
        assert_eq!(binarize(&[9.5 * THETA], &s), vec![0; 8]);
    }

    #[test]
    fn non_finite_drive_is_input_error() {
        let err =
            simulate(&signal(vec![0.0, f64::NAN], 0), &NeuronParams::default(), 0).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn invalid_params() {
        let s = signal(vec![0.0; 4], 0);
        for p in [
            NeuronParams {
                dt_s: 30e-12,
                ..Default::default()
            },
            NeuronParams {
                dt_s: 125e-12,
                spike_width_s: 100e-12,
                ..Default::default()
            },
            NeuronParams {
                refractory_s: -1.0,
                ..Default::default()
            },
            NeuronParams {
                threshold: 0.0,
                ..Default::default()
            },
        ] {
            assert!(
                matches!(simulate(&s, &p, 0), Err(Error::Parameter(_))),
                "{p:?}"
            );
        }
    }

    #[test]
    fn noise_is_seeded() {
        let p = NeuronParams {
            noise_sigma: 0.3,
            ..Default::default()
        };
        let s = signal(vec![0.45; 64], 8);
        let a = simulate(&s, &p, 5).unwrap();
        let b = simulate(&s, &p, 5).unwrap();
        let c = simulate(&s, &p, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn rendered_pulses_have_spike_width() {
        let p = NeuronParams::default();
        let out = render_output(&[1e-9], 2e-9, &p);
        assert_eq!(out.len(), 80);
        assert_eq!(out.iter().filter(|&&x| x == 1.0).count(), 6);
        assert_eq!(out[40], 1.0);
        assert_eq!(out[39], 0.0);
    }

    #[test]
    fn zero_drive_raster_is_empty() {
        let signals: Vec<_> = (0..5).map(|_| signal(vec![0.0; 32], 8)).collect();
        let r = run_reservoir(&signals, &NeuronParams::default(), 0).unwrap();
        assert_eq!((r.n_rows(), r.n_v()), (5, 32));
        assert_eq!(r.count_ones(), 0);
    }

    #[test]
    fn raster_csv_round_trip() {
        let r = SpikeRaster::from_rows(&[vec![0, 1, 1], vec![1, 0, 0]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        r.write_csv(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "0,1,1\n1,0,0\n");
        assert_eq!(SpikeRaster::read_csv(&path).unwrap(), r);
    }

    #[test]
    fn calibration_lands_in_window() {
        let signals: Vec<_> = (0..8)
            .map(|i| {
                let vals = (0..128)
                    .map(|j| ((i * 37 + j * 11) % 17) as f64 / 16.0)
                    .collect();
                signal(vals, 8)
            })
            .collect();
        let cal =
            calibrate_threshold(&signals, &NeuronParams::default(), 0, 0.15, (0.05, 0.25)).unwrap();
        assert!(cal.within_window, "{cal:?}");
    }
}
