//! Event-driven simulation of the controlled queue in continuous time.
//!
//! Arrivals form a merged Poisson stream whose class labels are drawn with
//! probabilities `lambda_i(s) / Lambda(s)`; departures occur at rate
//! `min(s, c) mu`. After each event the competing exponential clocks are
//! redrawn, which leaves the law of the process unchanged.

mod regret;

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::model::{Policy, QueueModel, RateField, RewardTable};

pub use regret::{accumulate_regret, RegretAccumulator, RegretSeries};

/// Generator for episode `episode` of the run seeded with `seed`. Each
/// episode reads its own ChaCha stream, so episodes can be replayed
/// independently.
pub fn rng_for(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EventKind {
    Arrival { class: usize, accepted: bool },
    Departure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    /// Time since the start of the episode.
    pub time: f64,
    pub kind: EventKind,
    pub state_before: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub duration: f64,
    pub initial_state: usize,
    pub final_state: usize,
    pub events: Vec<Event>,
    /// Time spent in each state `0..=S`.
    pub sojourn: Vec<f64>,
    /// `admissions[s][i]`
    pub admissions: Vec<Vec<u64>>,
    /// Arrivals of each class, admitted or not.
    pub arrivals_by_class: Vec<u64>,
    /// Gap before every arrival; the first one is measured from the episode
    /// start.
    pub inter_arrivals: Vec<f64>,
    /// Class of each arrival, aligned with `inter_arrivals`.
    pub arrival_classes: Vec<usize>,
    pub reward_collected: f64,
}

impl EpisodeLog {
    pub fn total_arrivals(&self) -> usize {
        self.inter_arrivals.len()
    }

    /// Admission instants with the expected reward charged at each.
    pub fn admission_rewards<'a>(&'a self, table: &'a RewardTable) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.events.iter().filter_map(move |e| match e.kind {
            EventKind::Arrival { class, accepted: true } => Some((e.time, table.reward(class, e.state_before))),
            _ => None,
        })
    }

    /// Writes `time,kind,class,state_before,accepted` rows.
    pub fn write_events_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["time", "kind", "class", "state_before", "accepted"])?;
        for e in &self.events {
            let (kind, class, accepted) = match e.kind {
                EventKind::Arrival { class, accepted } => ("arrival", class.to_string(), accepted.to_string()),
                EventKind::Departure => ("departure", String::new(), String::new()),
            };
            out.write_record([e.time.to_string(), kind.into(), class, e.state_before.to_string(), accepted])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Simulates `duration` time units of the queue under `policy`, starting in
/// `initial_state`.
pub fn simulate<R: Rng + ?Sized>(
    model: &QueueModel,
    rates: &RateField,
    policy: &Policy,
    table: &RewardTable,
    duration: f64,
    initial_state: usize,
    rng: &mut R,
) -> EpisodeLog {
    assert!(duration > 0.0, "duration must be positive");
    assert!(initial_state <= model.capacity, "initial state beyond capacity");
    let capacity = model.capacity;
    let m = model.num_classes();
    let mut log = EpisodeLog {
        duration,
        initial_state,
        final_state: initial_state,
        events: Vec::new(),
        sojourn: vec![0.0; capacity + 1],
        admissions: vec![vec![0; m]; capacity + 1],
        arrivals_by_class: vec![0; m],
        inter_arrivals: Vec::new(),
        arrival_classes: Vec::new(),
        reward_collected: 0.0,
    };

    let mut state = initial_state;
    let mut now = 0.0;
    let mut last_arrival = 0.0;
    loop {
        let arrival_rate = rates.global(state);
        let service = model.service_rate_at(state);
        let total = arrival_rate + service;
        if total <= 0.0 {
            log.sojourn[state] += duration - now;
            break;
        }
        let wait = Exp::new(total).expect("positive rate").sample(rng);
        if now + wait >= duration {
            log.sojourn[state] += duration - now;
            break;
        }
        log.sojourn[state] += wait;
        now += wait;

        let pick = rng.random::<f64>() * total;
        if pick < arrival_rate {
            let class = pick_class(rates.rates_at(state), pick);
            let accepted = state < capacity && policy.accepts(state, class);
            log.events.push(Event {
                time: now,
                kind: EventKind::Arrival { class, accepted },
                state_before: state,
            });
            log.inter_arrivals.push(now - last_arrival);
            log.arrival_classes.push(class);
            log.arrivals_by_class[class] += 1;
            last_arrival = now;
            if accepted {
                log.admissions[state][class] += 1;
                log.reward_collected += table.reward(class, state);
                state += 1;
            }
        } else {
            log.events.push(Event {
                time: now,
                kind: EventKind::Departure,
                state_before: state,
            });
            state -= 1;
        }
    }
    log.final_state = state;
    log
}

/// Class whose cumulative-rate bucket contains `pick`.
fn pick_class(rates: &[f64], pick: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &rate) in rates.iter().enumerate() {
        if rate > 0.0 {
            acc += rate;
            last = i;
            if pick < acc {
                return i;
            }
        }
    }
    // rounding pushed the pick past the last bucket
    last
}
