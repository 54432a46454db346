//! Exact event-driven (Gillespie) simulation of SIS dynamics on an adaptive
//! network.
//!
//! Four Poisson process classes drive the state: infection across SI edges,
//! recovery of infected nodes, activation of absent links and deletion of
//! existing links, the last two with rates depending on the link type.

use std::io::Write;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinkType, ModelParams, Scenario};
use crate::network::NetworkState;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EdgeInit {
    ErdosRenyi(f64),
    Complete,
    EdgeList(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialInfected {
    Count(usize),
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub edges: EdgeInit,
    pub infected: InitialInfected,
}

impl InitSpec {
    /// Default initial condition: an Erdős–Rényi graph at the link density
    /// the activation/deletion process relaxes to, with 10% of nodes infected.
    pub fn default_for(params: &ModelParams) -> Result<Self> {
        let scenario = params.validate()?;
        let ratio = |a: f64, w: f64| if a + w > 0.0 { a / (a + w) } else { 0.0 };
        let p = match scenario {
            Scenario::A => ratio(params.alpha_ss, params.omega_si),
            Scenario::B => ratio(params.alpha_ss, params.omega_ss),
            Scenario::General => {
                let a = (params.alpha_ss + params.alpha_si + params.alpha_ii) / 3.0;
                let w = (params.omega_ss + params.omega_si + params.omega_ii) / 3.0;
                ratio(a, w)
            }
        };
        let count = ((params.n_nodes as f64) * 0.1).round().max(1.0) as usize;
        Ok(InitSpec {
            edges: EdgeInit::ErdosRenyi(p),
            infected: InitialInfected::Count(count.min(params.n_nodes)),
        })
    }
}

/// Builds an initial network. Infected nodes given as a count are drawn
/// uniformly without replacement.
pub fn init_network<R: Rng + ?Sized>(n: usize, spec: &InitSpec, rng: &mut R) -> Result<NetworkState> {
    let infected: Vec<usize> = match &spec.infected {
        InitialInfected::Count(c) => {
            if *c > n {
                return Err(Error::InvalidParams(format!("{c} initial infected exceeds N = {n}")));
            }
            let mut v = sample_indices(rng, n, *c).into_vec();
            v.sort_unstable();
            v
        }
        InitialInfected::Nodes(v) => v.clone(),
    };
    match &spec.edges {
        EdgeInit::EdgeList(edges) => NetworkState::from_edges(n, edges, &infected),
        EdgeInit::Complete => {
            let mut st = NetworkState::from_edges(n, &[], &infected)?;
            for u in 0..n {
                for v in u + 1..n {
                    st.add_edge(u, v);
                }
            }
            Ok(st)
        }
        EdgeInit::ErdosRenyi(p) => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidParams(format!("edge probability {p} outside [0,1]")));
            }
            let mut st = NetworkState::from_edges(n, &[], &infected)?;
            if *p > 0.0 {
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.random::<f64>() < *p {
                            st.add_edge(u, v);
                        }
                    }
                }
            }
            Ok(st)
        }
    }
}

/// Total rates of the event classes in a given state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassRates {
    pub infection: f64,
    pub recovery: f64,
    /// Indexed by [`LinkType`] (SS, SI, II).
    pub activation: [f64; 3],
    pub deletion: [f64; 3],
}

impl ClassRates {
    pub fn total(&self) -> f64 {
        self.infection
            + self.recovery
            + self.activation.iter().sum::<f64>()
            + self.deletion.iter().sum::<f64>()
    }

    /// Rates flattened in [`EventClass::index`] order.
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.infection,
            self.recovery,
            self.activation[0],
            self.activation[1],
            self.activation[2],
            self.deletion[0],
            self.deletion[1],
            self.deletion[2],
        ]
    }
}

pub fn total_rates(state: &NetworkState, params: &ModelParams) -> ClassRates {
    let c = state.counts();
    let mut r = ClassRates {
        infection: params.tau * c.edges_of(LinkType::SI) as f64,
        recovery: params.gamma * c.i as f64,
        ..ClassRates::default()
    };
    for t in LinkType::ALL {
        r.activation[t as usize] = params.alpha(t) * c.non_edges_of(t) as f64;
        r.deletion[t as usize] = params.omega(t) * c.edges_of(t) as f64;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventClass {
    Infection,
    Recovery,
    Activation(LinkType),
    Deletion(LinkType),
}

impl EventClass {
    pub const ALL: [EventClass; 8] = [
        EventClass::Infection,
        EventClass::Recovery,
        EventClass::Activation(LinkType::SS),
        EventClass::Activation(LinkType::SI),
        EventClass::Activation(LinkType::II),
        EventClass::Deletion(LinkType::SS),
        EventClass::Deletion(LinkType::SI),
        EventClass::Deletion(LinkType::II),
    ];

    pub fn index(self) -> usize {
        match self {
            EventClass::Infection => 0,
            EventClass::Recovery => 1,
            EventClass::Activation(t) => 2 + t as usize,
            EventClass::Deletion(t) => 5 + t as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Infect(usize),
    Recover(usize),
    Activate(usize, usize),
    Delete(usize, usize),
}

impl EventKind {
    pub fn class(&self, state_before: &NetworkState) -> EventClass {
        match *self {
            EventKind::Infect(_) => EventClass::Infection,
            EventKind::Recover(_) => EventClass::Recovery,
            EventKind::Activate(u, v) => EventClass::Activation(LinkType::of(
                state_before.is_infected(u),
                state_before.is_infected(v),
            )),
            EventKind::Delete(u, v) => EventClass::Deletion(LinkType::of(
                state_before.is_infected(u),
                state_before.is_infected(v),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub class: EventClass,
    pub time: f64,
}

// Below this fraction of absent links among candidate pairs, rejection
// sampling gives way to enumeration.
const ENUMERATION_DENSITY: f64 = 0.01;

fn sample_non_edge<R: Rng + ?Sized>(state: &NetworkState, t: LinkType, rng: &mut R) -> (usize, usize) {
    let c = state.counts();
    let sus = state.susceptible_nodes();
    let inf = state.infected_nodes();
    let (a, b) = match t {
        LinkType::SS => (sus, sus),
        LinkType::SI => (sus, inf),
        LinkType::II => (inf, inf),
    };
    let same = t != LinkType::SI;
    let pairs = if same {
        (a.len() * a.len().saturating_sub(1) / 2) as u64
    } else {
        (a.len() * b.len()) as u64
    };
    let absent = c.non_edges_of(t);
    debug_assert!(absent > 0);
    if (absent as f64) < ENUMERATION_DENSITY * pairs as f64 {
        let mut k = rng.random_range(0..absent);
        for (ia, &u) in a.iter().enumerate() {
            let start = if same { ia + 1 } else { 0 };
            for &v in &b[start..] {
                if !state.has_edge(u, v) {
                    if k == 0 {
                        return (u, v);
                    }
                    k -= 1;
                }
            }
        }
        unreachable!("absent-link count out of sync with adjacency");
    }
    loop {
        let (u, v) = if same {
            let i = rng.random_range(0..a.len());
            let mut j = rng.random_range(0..a.len() - 1);
            if j >= i {
                j += 1;
            }
            (a[i], a[j])
        } else {
            (a[rng.random_range(0..a.len())], b[rng.random_range(0..b.len())])
        };
        if !state.has_edge(u, v) {
            return (u, v);
        }
    }
}

fn sample_edge<R: Rng + ?Sized>(state: &NetworkState, t: LinkType, rng: &mut R) -> (usize, usize) {
    let total = state.edge_endpoint_total(t);
    let u = state.pick_edge_endpoint(t, rng.random_range(0..total));
    let (want_infected, count) = match t {
        LinkType::SI | LinkType::II => (true, state.infected_neighbours(u)),
        LinkType::SS => (false, state.degree(u) - state.infected_neighbours(u)),
    };
    let k = rng.random_range(0..count);
    let v = state
        .kth_neighbour_with_status(u, want_infected, k)
        .expect("neighbour count out of sync with adjacency");
    (u, v)
}

fn waiting_time<R: Rng + ?Sized>(total: f64, rng: &mut R) -> f64 {
    rng.sample::<f64, _>(Exp1) / total
}

/// Chooses an event class with probability proportional to its rate, then a
/// uniform target within the class, and applies it at time `t_event`.
fn fire<R: Rng + ?Sized>(
    state: &mut NetworkState,
    rates: &ClassRates,
    t_event: f64,
    rng: &mut R,
) -> Event {
    let flat = rates.as_array();
    let mut target = rng.random::<f64>() * rates.total();
    let mut chosen = None;
    for (idx, &r) in flat.iter().enumerate() {
        if r > 0.0 {
            chosen = Some(idx);
            if target < r {
                break;
            }
            target -= r;
        }
    }
    let class = EventClass::ALL[chosen.expect("positive total rate")];
    let kind = match class {
        EventClass::Infection => {
            let r = rng.random_range(0..state.si_edge_weight_total());
            EventKind::Infect(state.pick_si_susceptible(r))
        }
        EventClass::Recovery => {
            let inf = state.infected_nodes();
            EventKind::Recover(inf[rng.random_range(0..inf.len())])
        }
        EventClass::Activation(t) => {
            let (u, v) = sample_non_edge(state, t, rng);
            EventKind::Activate(u, v)
        }
        EventClass::Deletion(t) => {
            let (u, v) = sample_edge(state, t, rng);
            EventKind::Delete(u, v)
        }
    };
    match kind {
        EventKind::Infect(u) => state.infect(u),
        EventKind::Recover(u) => state.recover(u),
        EventKind::Activate(u, v) => state.add_edge(u, v),
        EventKind::Delete(u, v) => state.remove_edge(u, v),
    }
    state.time = t_event;
    Event {
        kind,
        class,
        time: t_event,
    }
}

/// Performs one event: draws the waiting time and the event, applies it and
/// advances `state.time`. Returns the event and the waiting time.
pub fn step<R: Rng + ?Sized>(
    state: &mut NetworkState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<(Event, f64)> {
    let rates = total_rates(state, params);
    let total = rates.total();
    if !(total > 0.0) {
        return Err(Error::AbsorbedState);
    }
    let dt = waiting_time(total, rng);
    let t_event = state.time + dt;
    Ok((fire(state, &rates, t_event, rng), dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_max: f64,
    pub sample_dt: f64,
    pub stop_on_extinction: bool,
    /// Record the number of connected components at every sample.
    pub track_components: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_max: 1320.0,
            sample_dt: 0.01,
            stop_on_extinction: false,
            track_components: true,
        }
    }
}

/// One resampled observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub infected: u32,
    pub edges: u32,
    pub ss: u32,
    pub si: u32,
    pub ii: u32,
    pub n_components: Option<u32>,
}

impl Sample {
    fn observe(state: &NetworkState, track_components: bool) -> Self {
        let c = state.counts();
        Sample {
            infected: c.i as u32,
            edges: c.edges() as u32,
            ss: c.ss as u32,
            si: c.si as u32,
            ii: c.ii as u32,
            n_components: track_components.then(|| state.n_components() as u32),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub sample_dt: f64,
    pub n_nodes: usize,
    pub seed: u64,
    pub samples: Vec<Sample>,
    /// Time at which prevalence first hit zero.
    pub died_out: Option<f64>,
    pub n_events: u64,
}

impl TimeSeries {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.sample_dt
    }

    pub fn prevalence(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.infected as f64).collect()
    }

    pub fn avg_degree(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| 2.0 * s.edges as f64 / self.n_nodes as f64)
            .collect()
    }

    /// CSV with columns `t, I, avg_degree, SS, SI, II, n_components`. Pair
    /// columns use the ordered-pair convention; `n_components` is empty when
    /// components were not tracked.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,I,avg_degree,SS,SI,II,n_components")?;
        for (k, s) in self.samples.iter().enumerate() {
            let comps = s.n_components.map(|c| c.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_time(self.time(k)),
                s.infected,
                2.0 * s.edges as f64 / self.n_nodes as f64,
                s.ss,
                s.si,
                s.ii,
                comps
            )?;
        }
        Ok(())
    }
}

pub(crate) fn fmt_time(t: f64) -> String {
    // trims binary noise from k * dt so CSVs stay readable
    let r = (t * 1e9).round() / 1e9;
    format!("{r}")
}

/// Runs the simulation until `t_max`, absorption, or (optionally) extinction.
///
/// Samples are taken on the grid `k * sample_dt`, each holding the state
/// left by the most recent event at or before the sample time. When the
/// run stops on extinction the series ends at the extinction time.
/// `observer` sees the state after every event.
pub fn simulate_with<R, F>(
    state: &mut NetworkState,
    params: &ModelParams,
    cfg: &SimConfig,
    seed: u64,
    rng: &mut R,
    mut observer: F,
) -> Result<TimeSeries>
where
    R: Rng + ?Sized,
    F: FnMut(&NetworkState, &Event, f64),
{
    params.validate()?;
    if !(cfg.t_max > 0.0) || !(cfg.sample_dt > 0.0) {
        return Err(Error::InvalidParams("t_max and sample_dt must be positive".into()));
    }
    let n_samples = (cfg.t_max / cfg.sample_dt + 1e-9).floor() as usize + 1;
    let t0 = state.time;
    let mut ts = TimeSeries {
        sample_dt: cfg.sample_dt,
        n_nodes: state.n(),
        seed,
        samples: Vec::with_capacity(n_samples),
        died_out: None,
        n_events: 0,
    };
    let sample_time = |k: usize| t0 + k as f64 * cfg.sample_dt;
    if state.n_infected() == 0 {
        ts.died_out = Some(t0);
        if cfg.stop_on_extinction {
            ts.samples.push(Sample::observe(state, cfg.track_components));
            return Ok(ts);
        }
    }
    let t_end = t0 + cfg.t_max;
    let mut current: Option<Sample> = None;
    loop {
        let rates = total_rates(state, params);
        let total = rates.total();
        if !(total > 0.0) {
            break;
        }
        let dt = waiting_time(total, rng);
        let t_event = state.time + dt;
        // samples in [t_prev, t_event) see the pre-event state
        while ts.samples.len() < n_samples && sample_time(ts.samples.len()) < t_event {
            let s = *current.get_or_insert_with(|| Sample::observe(state, cfg.track_components));
            ts.samples.push(s);
        }
        if t_event > t_end {
            break;
        }
        let event = fire(state, &rates, t_event, rng);
        current = None;
        ts.n_events += 1;
        observer(state, &event, dt);
        if state.n_infected() == 0 && ts.died_out.is_none() {
            ts.died_out = Some(t_event);
            if cfg.stop_on_extinction {
                return Ok(ts);
            }
        }
    }
    let last = Sample::observe(state, cfg.track_components);
    while ts.samples.len() < n_samples {
        ts.samples.push(last);
    }
    Ok(ts)
}

pub fn simulate(
    mut initial: NetworkState,
    params: &ModelParams,
    cfg: &SimConfig,
    seed: u64,
) -> Result<TimeSeries> {
    let mut rng = rng_from_seed(seed);
    simulate_with(&mut initial, params, cfg, seed, &mut rng, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scen_a() -> ModelParams {
        ModelParams::scenario_a(0.7, 1.3, 0.04, 2.1, 3)
    }

    #[test]
    fn class_rates_for_small_states() {
        let mut p = scen_a();
        // complete graph, nobody infected
        let full = NetworkState::from_edges(3, &[(0, 1), (0, 2), (1, 2)], &[]).unwrap();
        assert_eq!(total_rates(&full, &p).total(), 0.0);

        // (S, S, I) with the single edge {1, 3}
        let st = NetworkState::from_edges(3, &[(0, 2)], &[2]).unwrap();
        let r = total_rates(&st, &p);
        assert_eq!(r.infection, 0.7);
        assert_eq!(r.recovery, 1.3);
        assert_eq!(r.deletion, [0.0, 2.1, 0.0]);
        assert_eq!(r.activation, [0.04, 0.0, 0.0]);

        p.n_nodes = 2;
        let pair = NetworkState::from_edges(2, &[(0, 1)], &[1]).unwrap();
        assert_eq!(pair.counts().si, 2);
        let r = total_rates(&pair, &p);
        assert_eq!((r.infection, r.recovery, r.deletion[1]), (0.7, 1.3, 2.1));
        assert_eq!(r.activation, [0.0; 3]);
    }

    #[test]
    fn absorbed_state_is_an_error() {
        let p = scen_a();
        let mut st = NetworkState::from_edges(3, &[(0, 1), (0, 2), (1, 2)], &[]).unwrap();
        let err = step(&mut st, &p, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::AbsorbedState));
    }

    #[test]
    fn three_events_of_an_si_pair_are_equally_likely() {
        let p = ModelParams::scenario_a(1.0, 1.0, 0.0, 1.0, 2);
        let start = NetworkState::from_edges(2, &[(0, 1)], &[1]).unwrap();
        let mut rng = rng_from_seed(11);
        let draws = 100_000;
        let mut counts = [0usize; 8];
        let mut dt_sum = 0.0;
        for _ in 0..draws {
            let mut st = start.clone();
            let (ev, dt) = step(&mut st, &p, &mut rng).unwrap();
            counts[ev.class.index()] += 1;
            dt_sum += dt;
        }
        let q = 1.0 / 3.0;
        let sd = (draws as f64 * q * (1.0 - q)).sqrt();
        for class in [EventClass::Infection, EventClass::Recovery, EventClass::Deletion(LinkType::SI)] {
            let c = counts[class.index()] as f64;
            assert!((c - draws as f64 * q).abs() < 3.0 * sd, "{class:?}: {c}");
        }
        assert_eq!(counts.iter().sum::<usize>(), draws);
        // waiting times are Exp(3): mean 1/3, standard error (1/3)/sqrt(draws)
        let mean = dt_sum / draws as f64;
        assert!((mean - q).abs() < 3.0 * q / (draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn samples_hold_the_state_of_the_last_event() {
        // recovery only: one infected node, no links
        let p = ModelParams::scenario_a(0.0, 1.0, 0.0, 1.0, 2);
        let st = NetworkState::from_edges(2, &[], &[0]).unwrap();
        let cfg = SimConfig { t_max: 5.0, sample_dt: 0.25, stop_on_extinction: false, track_components: true };
        let ts = simulate(st, &p, &cfg, 3).unwrap();
        assert_eq!(ts.samples.len(), 21);
        let t_ext = ts.died_out.expect("lone infection recovers eventually");
        for (k, s) in ts.samples.iter().enumerate() {
            let expect = u32::from(ts.time(k) < t_ext);
            assert_eq!(s.infected, expect, "sample {k} at {}", ts.time(k));
            assert_eq!(s.n_components, Some(2));
        }
    }

    #[test]
    fn stopping_on_extinction_truncates() {
        let p = ModelParams::scenario_a(0.0, 1.0, 0.0, 1.0, 2);
        let st = NetworkState::from_edges(2, &[], &[0, 1]).unwrap();
        let cfg = SimConfig { t_max: 1000.0, sample_dt: 0.1, stop_on_extinction: true, track_components: false };
        let ts = simulate(st, &p, &cfg, 5).unwrap();
        let t_ext = ts.died_out.unwrap();
        assert_eq!(ts.samples.len(), (t_ext / 0.1).floor() as usize + 1);
        assert_eq!(ts.n_events, 2);
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let p = scen_a();
        let st = NetworkState::from_edges(3, &[(0, 2)], &[2]).unwrap();
        let cfg = SimConfig { t_max: 1.0, sample_dt: 0.1, stop_on_extinction: false, track_components: false };
        let ts = simulate(st, &p, &cfg, 9).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert_eq!(lines[0], "t,I,avg_degree,SS,SI,II,n_components");
        assert!(lines[1].starts_with("0,1,0.6666666666666666,0,2,0,"));
        assert!(lines[11].starts_with("1,"));
    }

    #[test]
    fn default_init_uses_the_relaxed_link_density() {
        let p = ModelParams::scenario_a(1.0, 1.0, 0.04, 0.36, 200);
        let spec = InitSpec::default_for(&p).unwrap();
        match spec.edges {
            EdgeInit::ErdosRenyi(q) => assert!((q - 0.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(spec.infected, InitialInfected::Count(20));
    }

    #[test]
    fn init_rejects_bad_input() {
        let mut rng = rng_from_seed(0);
        let too_many = InitSpec { edges: EdgeInit::Complete, infected: InitialInfected::Count(4) };
        assert!(init_network(3, &too_many, &mut rng).is_err());
        let bad_p = InitSpec { edges: EdgeInit::ErdosRenyi(1.5), infected: InitialInfected::Count(0) };
        assert!(init_network(3, &bad_p, &mut rng).is_err());
        let self_loop = InitSpec { edges: EdgeInit::EdgeList(vec![(1, 1)]), infected: InitialInfected::Count(0) };
        assert!(init_network(3, &self_loop, &mut rng).is_err());
        let dup = InitSpec { edges: EdgeInit::EdgeList(vec![(0, 1), (1, 0)]), infected: InitialInfected::Count(0) };
        assert!(init_network(3, &dup, &mut rng).is_err());
    }
}
