//! Post-processing of simulated series: transient removal, segmented
//! periodograms, regime labels, oscillation stages and network metrics.

use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bifurcation;
use crate::ensemble::{self, EnsembleSpec};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Scenario};
use crate::network::NetworkState;
use crate::sim::{InitSpec, Sample, SimConfig, TimeSeries};

pub const SEGMENT_LEN: usize = 1 << 13;
pub const MIN_SEGMENTS: usize = 4;
/// Post-transient samples required before a run is analysed spectrally.
pub const MIN_STATIONARY: usize = 1 << 15;
pub const DEFAULT_FILTER_WINDOW: usize = 101;

/// Centered moving average; the window shrinks symmetrically at the ends.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientOptions {
    pub segment_len: usize,
    pub window: usize,
    /// Half-width of the acceptance tube in units of the tail σ.
    pub tube: f64,
}

impl Default for TransientOptions {
    fn default() -> Self {
        TransientOptions { segment_len: SEGMENT_LEN, window: DEFAULT_FILTER_WINDOW, tube: 0.05 }
    }
}

/// Start of the stationary part of `series`.
///
/// The final segment fixes the reference mean and σ after a
/// pseudo-stationarity screen (its halves must agree to 0.2σ in mean and
/// 50% in variance). The start is the first index at which the low-passed
/// series comes within `tube·σ` of that mean.
pub fn remove_transient(series: &[f64], opts: &TransientOptions) -> Result<usize> {
    let seg = opts.segment_len;
    if series.len() < 2 * seg {
        return Err(Error::TooShort { needed: 2 * seg, have: series.len() });
    }
    let tail = &series[series.len() - seg..];
    let (mean, var) = mean_var(tail);
    let sd = var.sqrt();
    let (m1, v1) = mean_var(&tail[..seg / 2]);
    let (m2, v2) = mean_var(&tail[seg / 2..]);
    if (m1 - m2).abs() >= 0.2 * sd {
        return Err(Error::NoStationaryTail(format!(
            "half means {m1:.4} and {m2:.4} differ by more than 0.2 sd ({sd:.4})"
        )));
    }
    if (v1 - v2).abs() >= 0.5 * v1.max(v2) {
        return Err(Error::NoStationaryTail(format!("half variances {v1:.4} and {v2:.4}")));
    }
    let filtered = moving_average(series, opts.window);
    let tol = opts.tube * sd;
    Ok(filtered.iter().position(|f| (f - mean).abs() <= tol).unwrap_or(series.len() - seg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// One-sided bins `k / (segment_len · dt)` for `k = 0..=segment_len/2`.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub n_segments: usize,
    pub segment_len: usize,
    pub sample_dt: f64,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub peak_index: usize,
    pub peak_freq: f64,
    pub peak_power: f64,
}

/// Multiplicative factors `(lo, hi)` such that `[P̂·lo, P̂·hi]` covers the
/// true spectrum with probability `1 - alpha` for an average of
/// `n_segments` periodograms (`2L·P̂/P ~ χ²(2L)`).
pub fn chi2_ci_factors(n_segments: usize, alpha: f64) -> (f64, f64) {
    let dof = 2.0 * n_segments as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    (dof / chi.inverse_cdf(1.0 - alpha / 2.0), dof / chi.inverse_cdf(alpha / 2.0))
}

/// Upper `1 - alpha` quantile of the averaged periodogram of a flat
/// spectrum at `level`, Bonferroni-corrected over `n_bins` bins.
pub fn flat_upper_bound(level: f64, n_segments: usize, n_bins: usize, alpha: f64) -> f64 {
    let dof = 2.0 * n_segments as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    level * chi.inverse_cdf(1.0 - alpha / n_bins.max(1) as f64) / dof
}

/// Averaged periodogram over non-overlapping segments of every series.
///
/// Each segment has its mean removed, is FFT'd, and contributes
/// `|X_k|² / L`; leftover samples at the end of a series are dropped.
pub fn pooled_periodogram(
    series: &[&[f64]],
    segment_len: usize,
    sample_dt: f64,
    taper: Taper,
) -> Result<SpectrumEstimate> {
    if !segment_len.is_power_of_two() || segment_len < 4 {
        return Err(Error::InvalidParams("segment length must be a power of two >= 4".into()));
    }
    let n_segments: usize = series.iter().map(|s| s.len() / segment_len).sum();
    if n_segments < MIN_SEGMENTS {
        let have = series.iter().map(|s| s.len()).sum();
        return Err(Error::TooShort { needed: MIN_SEGMENTS * segment_len, have });
    }
    let window: Vec<f64> = match taper {
        Taper::Rectangular => vec![1.0; segment_len],
        Taper::Hann => {
            // normalized to unit mean square so power levels stay comparable
            let w: Vec<f64> = (0..segment_len)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / segment_len as f64).cos())
                .collect();
            let ms = (w.iter().map(|v| v * v).sum::<f64>() / segment_len as f64).sqrt();
            w.iter().map(|v| v / ms).collect()
        }
    };
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment_len);
    let n_bins = segment_len / 2 + 1;
    let mut power = vec![0.0; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); segment_len];
    for s in series {
        for chunk in s.chunks_exact(segment_len) {
            let m = chunk.iter().sum::<f64>() / segment_len as f64;
            for ((b, &x), w) in buf.iter_mut().zip(chunk).zip(&window) {
                *b = Complex::new((x - m) * w, 0.0);
            }
            fft.process(&mut buf);
            for (p, b) in power.iter_mut().zip(&buf) {
                *p += b.norm_sqr() / segment_len as f64;
            }
        }
    }
    for p in &mut power {
        *p /= n_segments as f64;
    }
    let (lo, hi) = chi2_ci_factors(n_segments, 0.05);
    let bin = 1.0 / (segment_len as f64 * sample_dt);
    let peak_index = (1..n_bins).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
    Ok(SpectrumEstimate {
        frequencies: (0..n_bins).map(|k| k as f64 * bin).collect(),
        ci_lower: power.iter().map(|p| p * lo).collect(),
        ci_upper: power.iter().map(|p| p * hi).collect(),
        peak_index,
        peak_freq: peak_index as f64 * bin,
        peak_power: power[peak_index],
        power,
        n_segments,
        segment_len,
        sample_dt,
    })
}

pub fn periodogram(series: &[f64], segment_len: usize, sample_dt: f64) -> Result<SpectrumEstimate> {
    pooled_periodogram(&[series], segment_len, sample_dt, Taper::Rectangular)
}

impl SpectrumEstimate {
    /// Mean of the two-sided periodogram over all `L` bins; equals the
    /// average per-segment variance for an untapered estimate.
    pub fn two_sided_mean(&self) -> f64 {
        let l = self.segment_len;
        let last = self.power.len() - 1;
        let inner: f64 = self.power[1..last].iter().sum();
        (self.power[0] + self.power[last] + 2.0 * inner) / l as f64
    }

    /// Median power over non-zero bins, excluding `±exclude` bins around
    /// the peak.
    pub fn baseline(&self, exclude: usize) -> f64 {
        let mut v: Vec<f64> = (1..self.power.len())
            .filter(|&k| k.abs_diff(self.peak_index) > exclude)
            .map(|k| self.power[k])
            .collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    /// The peak is significant when it exceeds the Bonferroni upper bound
    /// of a flat spectrum at the baseline level.
    pub fn peak_significant(&self, alpha: f64) -> bool {
        let bound = flat_upper_bound(self.baseline(3), self.n_segments, self.power.len() - 1, alpha);
        self.peak_power > bound
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "freq,power,ci_lo,ci_hi")?;
        for k in 0..self.power.len() {
            writeln!(w, "{},{},{},{}", self.frequencies[k], self.power[k], self.ci_lower[k], self.ci_upper[k])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    DiedOut,
    Endemic,
    Oscillatory,
}

impl RegimeLabel {
    pub fn label(self) -> &'static str {
        match self {
            RegimeLabel::DiedOut => "died_out",
            RegimeLabel::Endemic => "endemic",
            RegimeLabel::Oscillatory => "oscillatory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub transient: TransientOptions,
    /// Peak frequency above which a significant peak counts as oscillation.
    pub freq_threshold: f64,
    pub alpha: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { transient: TransientOptions::default(), freq_threshold: 0.5, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunClassification {
    pub label: RegimeLabel,
    pub died_out: Option<f64>,
    pub transient_end: Option<usize>,
    pub peak_freq: Option<f64>,
    pub peak_power: Option<f64>,
    pub significant: bool,
}

/// Stationary part of a surviving run's prevalence.
pub fn stationary_prevalence(ts: &TimeSeries, opts: &TransientOptions) -> Result<Vec<f64>> {
    let prev = ts.prevalence();
    let start = remove_transient(&prev, opts)?;
    let kept = prev.len() - start;
    if kept < MIN_STATIONARY {
        return Err(Error::InsufficientData(format!(
            "{kept} post-transient samples, need {MIN_STATIONARY}"
        )));
    }
    Ok(prev[start..].to_vec())
}

pub fn classify_run(ts: &TimeSeries, opts: &ClassifyOptions) -> Result<RunClassification> {
    if let Some(t) = ts.died_out {
        return Ok(RunClassification {
            label: RegimeLabel::DiedOut,
            died_out: Some(t),
            transient_end: None,
            peak_freq: None,
            peak_power: None,
            significant: false,
        });
    }
    let prev = ts.prevalence();
    let start = remove_transient(&prev, &opts.transient)?;
    if prev.len() - start < MIN_STATIONARY {
        return Err(Error::InsufficientData(format!(
            "{} post-transient samples, need {MIN_STATIONARY}",
            prev.len() - start
        )));
    }
    let est = periodogram(&prev[start..], opts.transient.segment_len, ts.sample_dt)?;
    let significant = est.peak_significant(opts.alpha);
    let label = if significant && est.peak_freq > opts.freq_threshold {
        RegimeLabel::Oscillatory
    } else {
        RegimeLabel::Endemic
    };
    Ok(RunClassification {
        label,
        died_out: None,
        transient_end: Some(start),
        peak_freq: Some(est.peak_freq),
        peak_power: Some(est.peak_power),
        significant,
    })
}

pub fn classify_regimes(runs: &[TimeSeries], opts: &ClassifyOptions) -> Result<Vec<RunClassification>> {
    if runs.len() < 2 {
        return Err(Error::InsufficientData("need at least two runs".into()));
    }
    runs.par_iter().map(|r| classify_run(r, opts)).collect()
}

/// Pooled spectrum of the stationary parts of the surviving runs. Runs
/// whose tail fails the stationarity screen are left out and counted.
#[derive(Debug, Clone)]
pub struct EnsembleSpectrum {
    pub estimate: SpectrumEstimate,
    pub n_used: usize,
    pub n_died_out: usize,
    pub n_rejected: usize,
}

pub fn ensemble_spectrum(runs: &[TimeSeries], opts: &TransientOptions) -> Result<EnsembleSpectrum> {
    let mut parts = Vec::new();
    let (mut n_died_out, mut n_rejected) = (0, 0);
    for r in runs {
        if r.died_out.is_some() {
            n_died_out += 1;
            continue;
        }
        match stationary_prevalence(r, opts) {
            Ok(p) => parts.push(p),
            Err(Error::NoStationaryTail(_)) => n_rejected += 1,
            Err(e) => return Err(e),
        }
    }
    let dt = runs.first().map(|r| r.sample_dt).unwrap_or(1.0);
    let refs: Vec<&[f64]> = parts.iter().map(|v| v.as_slice()).collect();
    let estimate = pooled_periodogram(&refs, opts.segment_len, dt, Taper::Rectangular)?;
    Ok(EnsembleSpectrum { estimate, n_used: parts.len(), n_died_out, n_rejected })
}

/// Die-out fraction along a scan line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DieOutScan {
    pub omegas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub n_runs: usize,
}

impl DieOutScan {
    /// `(largest ω with no die-out, smallest ω with complete die-out)`.
    pub fn boundaries(&self) -> (Option<f64>, Option<f64>) {
        let lower = self
            .omegas
            .iter()
            .zip(&self.fractions)
            .filter(|(_, &f)| f == 0.0)
            .map(|(&w, _)| w)
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.max(w))));
        let upper = self
            .omegas
            .iter()
            .zip(&self.fractions)
            .filter(|(_, &f)| f == 1.0)
            .map(|(&w, _)| w)
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.min(w))));
        (lower, upper)
    }

    /// Non-decreasing up to three binomial standard errors between every
    /// ordered pair of scan points.
    pub fn is_monotone(&self) -> bool {
        let se = |f: f64| (f * (1.0 - f) / self.n_runs as f64).sqrt();
        let k = self.fractions.len();
        (0..k).all(|i| {
            (i + 1..k).all(|j| {
                let (a, b) = (self.fractions[i], self.fractions[j]);
                let s = (se(a).powi(2) + se(b).powi(2)).sqrt().max(0.5 / self.n_runs as f64);
                a - b <= 3.0 * s
            })
        })
    }
}

/// Fraction of runs that die out before `sim.t_max` at each ω_SI.
pub fn die_out_scan(
    base: &ModelParams,
    omegas: &[f64],
    init: Option<&InitSpec>,
    sim: &SimConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<DieOutScan> {
    let sim = SimConfig { stop_on_extinction: true, track_components: false, ..*sim };
    let mut fractions = Vec::with_capacity(omegas.len());
    for (i, &w) in omegas.iter().enumerate() {
        let params = ModelParams { omega_si: w, ..*base };
        let init = match init {
            Some(s) => s.clone(),
            None => InitSpec::default_for(&params)?,
        };
        let spec = EnsembleSpec {
            params,
            init,
            sim,
            n_runs,
            base_seed: base_seed.wrapping_add((i as u64) << 32),
        };
        let died = ensemble::ensemble_map(&spec, |_, ts| ts.died_out.is_some())?;
        fractions.push(died.iter().filter(|&&d| d).count() as f64 / n_runs as f64);
    }
    Ok(DieOutScan { omegas: omegas.to_vec(), fractions, n_runs })
}

/// Signs of `(A - B, C - D)`: the net growth of `[I]` and of the mean
/// degree. `si`/`ss` are ordered-pair counts as stored in [`Sample`].
pub fn stage_drivers(s: &Sample, p: &ModelParams) -> (f64, f64) {
    let n = p.n_nodes as f64;
    let i = s.infected as f64;
    let sus = n - i;
    let si_edges = s.si as f64 / 2.0;
    let ss = s.ss as f64;
    let ab = p.tau * si_edges - p.gamma * i;
    let cd = p.alpha_ss * (sus * (sus - 1.0) - ss) - 2.0 * p.omega_si * si_edges;
    (ab, cd)
}

fn stage_of(ab: f64, cd: f64, prev: u8) -> u8 {
    if ab == 0.0 || cd == 0.0 {
        return prev;
    }
    match (ab > 0.0, cd > 0.0) {
        (true, true) => 1,
        (true, false) => 2,
        (false, false) => 3,
        (false, true) => 4,
    }
}

/// Per-sample oscillation stage in `1..=4`. Both driver expressions are
/// smoothed with a centered moving average of `window` samples before their
/// signs are taken; `window = 1` uses the raw signs. Exact zeros inherit the
/// previous stage (stage 4 at the start, the state a decline ends in).
pub fn stage_labels(samples: &[Sample], p: &ModelParams, window: usize) -> Result<Vec<u8>> {
    p.require(Scenario::A)?;
    let (ab, cd): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| stage_drivers(s, p)).unzip();
    let ab = moving_average(&ab, window.max(1));
    let cd = moving_average(&cd, window.max(1));
    let mut prev = 4;
    Ok(ab
        .iter()
        .zip(&cd)
        .map(|(&a, &c)| {
            prev = stage_of(a, c, prev);
            prev
        })
        .collect())
}

/// Stage path with repeats collapsed and excursions that return to the
/// stage they left (`a → b → a`) cancelled, so noise-driven flicker around
/// a zero crossing does not count as movement around the cycle.
pub fn stage_path(labels: &[u8]) -> Vec<u8> {
    let mut path: Vec<u8> = Vec::new();
    for &x in labels {
        if path.last() == Some(&x) {
            continue;
        }
        if path.len() >= 2 && path[path.len() - 2] == x {
            path.pop();
        } else {
            path.push(x);
        }
    }
    path
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct StageCycleStats {
    pub transitions: usize,
    pub forward: usize,
    /// Counts `[from-1][to-1]`.
    pub matrix: [[usize; 4]; 4],
}

impl StageCycleStats {
    pub fn add(&mut self, labels: &[u8]) {
        for w in labels.windows(2) {
            if w[0] != w[1] {
                self.transitions += 1;
                self.matrix[w[0] as usize - 1][w[1] as usize - 1] += 1;
                if w[1] == w[0] % 4 + 1 {
                    self.forward += 1;
                }
            }
        }
    }

    /// Share of stage changes that follow `1 → 2 → 3 → 4 → 1`.
    pub fn forward_fraction(&self) -> f64 {
        if self.transitions == 0 {
            0.0
        } else {
            self.forward as f64 / self.transitions as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub n_components: usize,
    pub degree_histogram: Vec<usize>,
    pub average_degree: f64,
}

pub fn network_metrics(state: &NetworkState) -> NetworkMetrics {
    let hist = state.degree_histogram();
    let total: usize = hist.iter().enumerate().map(|(k, c)| k * c).sum();
    NetworkMetrics {
        n_components: state.n_components(),
        average_degree: total as f64 / state.n().max(1) as f64,
        degree_histogram: hist,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetmapOptions {
    pub taus: Vec<f64>,
    pub omegas: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub n_nodes: usize,
    pub n_runs: usize,
    pub t_max: f64,
    pub sample_dt: f64,
    /// Fraction of the run at its end used for the late-window averages.
    pub late_fraction: f64,
    pub base_seed: u64,
}

impl Default for NetmapOptions {
    fn default() -> Self {
        NetmapOptions {
            taus: vec![0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75],
            omegas: vec![0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75],
            alpha: 0.01,
            gamma: 1.0,
            n_nodes: 200,
            n_runs: 4,
            t_max: 200.0,
            sample_dt: 0.5,
            late_fraction: 0.2,
            base_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetmapCell {
    pub tau: f64,
    pub omega: f64,
    pub mean_prevalence: f64,
    pub mean_components: f64,
    pub epidemic: bool,
    pub disconnected: bool,
    /// `None` when the threshold does not exist for the cell's rates.
    pub tau_c: Option<f64>,
    pub tau_c_printed: Option<f64>,
    pub tau_pc: f64,
}

impl NetmapCell {
    pub fn label(&self) -> &'static str {
        match (self.disconnected, self.epidemic) {
            (false, true) => "connected_epidemic",
            (false, false) => "connected_no_epidemic",
            (true, true) => "disconnected_epidemic",
            (true, false) => "disconnected_no_epidemic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetmapResult {
    pub cells: Vec<NetmapCell>,
    pub omega_star: f64,
    pub misclassified_tau_c: usize,
    pub misclassified_tau_c_printed: usize,
    pub misclassified_tau_pc: usize,
}

impl NetmapResult {
    pub fn labels_present(&self) -> Vec<&'static str> {
        let mut v: Vec<&'static str> = self.cells.iter().map(|c| c.label()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Midpoint between the largest connected and the smallest disconnected
    /// ω on the grid, taken over all τ.
    pub fn connectivity_boundary(&self) -> Option<f64> {
        let conn = self.cells.iter().filter(|c| !c.disconnected).map(|c| c.omega).fold(f64::NAN, f64::max);
        let disc = self.cells.iter().filter(|c| c.disconnected).map(|c| c.omega).fold(f64::NAN, f64::min);
        (conn.is_finite() && disc.is_finite()).then_some(0.5 * (conn + disc))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(w, "tau,omega,mean_prevalence,mean_components,epidemic,disconnected,label,tau_c,tau_c_printed,tau_pc")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                c.tau,
                c.omega,
                c.mean_prevalence,
                c.mean_components,
                c.epidemic as u8,
                c.disconnected as u8,
                c.label(),
                opt(c.tau_c),
                opt(c.tau_c_printed),
                c.tau_pc
            )?;
        }
        Ok(())
    }
}

/// Simulates one scenario-B cell and reduces it to late-window averages.
pub fn netmap_cell(opts: &NetmapOptions, tau: f64, omega: f64, seed: u64) -> Result<NetmapCell> {
    let params = ModelParams::scenario_b(tau, opts.gamma, opts.alpha, omega, opts.n_nodes);
    let spec = EnsembleSpec {
        params,
        init: InitSpec::default_for(&params)?,
        sim: SimConfig {
            t_max: opts.t_max,
            sample_dt: opts.sample_dt,
            stop_on_extinction: false,
            track_components: true,
        },
        n_runs: opts.n_runs,
        base_seed: seed,
    };
    let per_run = ensemble::ensemble_map(&spec, |_, ts| {
        let len = ts.samples.len();
        let from = len - ((len as f64 * opts.late_fraction).ceil() as usize).clamp(1, len);
        let late = &ts.samples[from..];
        let k = late.len() as f64;
        let prev = late.iter().map(|s| s.infected as f64).sum::<f64>() / k;
        let comps = late.iter().map(|s| s.n_components.unwrap_or(0) as f64).sum::<f64>() / k;
        (prev, comps)
    })?;
    let r = per_run.len() as f64;
    let mean_prevalence = per_run.iter().map(|x| x.0).sum::<f64>() / r;
    let mean_components = per_run.iter().map(|x| x.1).sum::<f64>() / r;
    let threshold = (0.01 * opts.n_nodes as f64).max(1.0);
    Ok(NetmapCell {
        tau,
        omega,
        mean_prevalence,
        mean_components,
        epidemic: mean_prevalence > threshold,
        disconnected: mean_components >= 3.0,
        tau_c: bifurcation::tau_c_scenario_b(&params).ok(),
        tau_c_printed: bifurcation::tau_c_printed(&params).ok(),
        tau_pc: bifurcation::tau_pc_meanfield(&params)?,
    })
}

pub fn netmap_result(cells: Vec<NetmapCell>, opts: &NetmapOptions) -> Result<NetmapResult> {
    // a missing threshold predicts no epidemic
    let miss = |f: fn(&NetmapCell) -> Option<f64>| {
        cells.iter().filter(|c| f(c).is_some_and(|t| c.tau > t) != c.epidemic).count()
    };
    Ok(NetmapResult {
        omega_star: bifurcation::omega_star_connectivity(opts.alpha, opts.n_nodes)?,
        misclassified_tau_c: miss(|c| c.tau_c),
        misclassified_tau_c_printed: miss(|c| c.tau_c_printed),
        misclassified_tau_pc: miss(|c| Some(c.tau_pc)),
        cells,
    })
}

/// Scenario-B network bifurcation map over the `(τ, ω)` grid.
pub fn network_bifurcation_map(opts: &NetmapOptions) -> Result<NetmapResult> {
    if opts.taus.is_empty() || opts.omegas.is_empty() {
        return Err(Error::config("scan", "empty grid"));
    }
    let mut cells = Vec::with_capacity(opts.taus.len() * opts.omegas.len());
    for (i, &tau) in opts.taus.iter().enumerate() {
        for (j, &omega) in opts.omegas.iter().enumerate() {
            let seed = opts.base_seed.wrapping_add(((i * opts.omegas.len() + j) as u64) << 20);
            cells.push(netmap_cell(opts, tau, omega, seed)?);
        }
    }
    netmap_result(cells, opts)
}
