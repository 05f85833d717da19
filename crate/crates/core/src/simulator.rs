//! Discrete-time simulation of a sampler feeding a FIFO single-server queue.
//!
//! Each step `n = 0, 1, ..., N` is processed in a fixed order:
//!
//! 1. the sample in service completes if its service ends at `n`;
//! 2. a new sample is generated if one is scheduled for `n`, drawing its
//!    service time at generation;
//! 3. an idle server starts the oldest queued sample;
//! 4. the age `n - U_n` is recorded, where `U_n` is the generation time of
//!    the freshest delivered sample (`delta0 + n` before any delivery).
//!
//! The first sample is generated at `n = 0`. Time averages run over
//! `n = 1..=N`. Service times come from a ChaCha8 generator seeded with
//! the run seed, or from a forced sequence in [`replay`].

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::policy::{NextSample, SamplingPolicy};
use crate::report::fmt_sig;
use crate::service::ServiceTimeDist;
use crate::sources::{AgePenalty, MarkovSourceModel};

/// Abort threshold for samples waiting behind the server.
pub const MAX_QUEUED: usize = 1_000_000;

pub const DEFAULT_DELTA0: u64 = 1;

/// The per-step quantity averaged over the run.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Penalty(AgePenalty),
    MutualInformation(MarkovSourceModel),
}

impl Metric {
    pub fn value(&self, delta: u64) -> f64 {
        match self {
            Self::Penalty(p) => p.value(delta),
            Self::MutualInformation(m) => m.mutual_information(delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Generated,
    ServiceStart,
    Delivered,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Generated => "gen",
            Self::ServiceStart => "start",
            Self::Delivered => "deliver",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    /// 1-based sample index.
    pub sample: u64,
    pub time: u64,
}

/// Lifecycle of one sample: `generated <= started`, `delivered = started + service`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRecord {
    pub index: u64,
    pub generated: u64,
    pub service: u64,
    pub started: Option<u64>,
    pub delivered: Option<u64>,
}

/// Step-by-step record of a run, indexed by `n = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub horizon: u64,
    pub delta0: u64,
    pub ages: Vec<u64>,
    pub metric: Vec<f64>,
    /// Samples waiting behind the server at the end of each step.
    pub queue_len: Vec<usize>,
    /// `U_n`, the generation time of the freshest delivered sample.
    pub freshest: Vec<Option<u64>>,
    pub events: Vec<Event>,
    pub samples: Vec<SampleRecord>,
}

impl SimulationTrace {
    /// `(Y_i, S_{i+1} - D_i)` for every delivered sample that has a
    /// successor generated within the horizon.
    pub fn waits_after_delivery(&self) -> Vec<(u64, i64)> {
        self.samples
            .windows(2)
            .filter_map(|w| {
                let delivered = w[0].delivered?;
                Some((w[0].service, w[1].generated as i64 - delivered as i64))
            })
            .collect()
    }

    /// CSV with header `n,delta,metric,queue_len,event`; simultaneous events
    /// are joined with `|` in processing order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,delta,metric,queue_len,event\n");
        let mut events = self.events.iter().peekable();
        for n in 0..=self.horizon {
            let idx = n as usize;
            let mut labels = Vec::new();
            while let Some(e) = events.next_if(|e| e.time == n) {
                labels.push(format!("{}:{}", e.kind, e.sample));
            }
            let _ = writeln!(
                out,
                "{n},{},{},{},{}",
                self.ages[idx],
                fmt_sig(self.metric[idx]),
                self.queue_len[idx],
                labels.join("|")
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    /// `(1/N) sum_{n=1}^{N} metric(age_n)`.
    pub time_average: f64,
    pub samples_generated: u64,
    pub samples_delivered: u64,
    /// Mean steps between generation and service start.
    pub mean_queue_wait: f64,
    /// `None` for forced-service replays.
    pub seed: Option<u64>,
}

impl RunSummary {
    pub const CSV_HEADER: &'static str = "seed,time_average,samples_generated,samples_delivered,mean_queue_wait";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            fmt_sig(self.time_average),
            self.samples_generated,
            self.samples_delivered,
            fmt_sig(self.mean_queue_wait)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

trait ServiceSource {
    fn next_service(&mut self, index: u64) -> Result<u64>;
}

struct Drawn<'a> {
    dist: &'a ServiceTimeDist,
    rng: ChaCha8Rng,
}

impl ServiceSource for Drawn<'_> {
    fn next_service(&mut self, _index: u64) -> Result<u64> {
        Ok(self.dist.sample(&mut self.rng))
    }
}

struct Forced<'a> {
    services: &'a [u64],
}

impl ServiceSource for Forced<'_> {
    fn next_service(&mut self, index: u64) -> Result<u64> {
        self.services
            .get(index as usize - 1)
            .copied()
            .ok_or(Error::SequenceExhausted { needed: index as usize, provided: self.services.len() })
    }
}

struct MetricCache<'a> {
    metric: &'a Metric,
    values: Vec<f64>,
}

impl MetricCache<'_> {
    fn get(&mut self, delta: u64) -> f64 {
        let idx = delta as usize;
        while self.values.len() <= idx {
            let v = self.metric.value(self.values.len() as u64);
            self.values.push(v);
        }
        self.values[idx]
    }
}

struct InService {
    index: u64,
    generated: u64,
    completes: u64,
    after: NextSample,
}

struct Queued {
    index: u64,
    generated: u64,
    service: u64,
    after: NextSample,
}

fn run(
    policy: &dyn SamplingPolicy,
    metric: &Metric,
    horizon: u64,
    delta0: u64,
    source: &mut dyn ServiceSource,
    record: bool,
) -> Result<(Option<SimulationTrace>, RunSummary)> {
    if horizon == 0 {
        return Err(Error::OutOfRange("simulation horizon must be at least 1".into()));
    }
    if delta0 == 0 {
        return Err(Error::OutOfRange("initial age delta0 must be at least 1".into()));
    }

    let mut trace = record.then(|| SimulationTrace {
        horizon,
        delta0,
        ages: Vec::with_capacity(horizon as usize + 1),
        metric: Vec::with_capacity(horizon as usize + 1),
        queue_len: Vec::with_capacity(horizon as usize + 1),
        freshest: Vec::with_capacity(horizon as usize + 1),
        events: Vec::new(),
        samples: Vec::new(),
    });
    let mut cache = MetricCache { metric, values: Vec::new() };

    let mut queue: VecDeque<Queued> = VecDeque::new();
    let mut server: Option<InService> = None;
    let mut next_generation = Some(0u64);
    let mut freshest: Option<u64> = None;
    let mut generated = 0u64;
    let mut delivered = 0u64;
    let mut started = 0u64;
    let mut total_wait = 0u64;
    let mut sum = 0.0;

    for n in 0..=horizon {
        if let Some(s) = server.as_ref().filter(|s| s.completes == n) {
            delivered += 1;
            freshest = Some(s.generated);
            if let NextSample::AfterDelivery(wait) = s.after {
                next_generation = Some(n + wait);
            }
            if let Some(t) = trace.as_mut() {
                t.events.push(Event { kind: EventKind::Delivered, sample: s.index, time: n });
                t.samples[s.index as usize - 1].delivered = Some(n);
            }
            server = None;
        }

        if next_generation == Some(n) {
            generated += 1;
            let service = source.next_service(generated)?;
            let after = policy.next_sample(service)?;
            next_generation = match after {
                NextSample::AfterGeneration(period) => Some(n + period),
                NextSample::AfterDelivery(_) => None,
            };
            queue.push_back(Queued { index: generated, generated: n, service, after });
            if let Some(t) = trace.as_mut() {
                t.events.push(Event { kind: EventKind::Generated, sample: generated, time: n });
                t.samples.push(SampleRecord {
                    index: generated,
                    generated: n,
                    service,
                    started: None,
                    delivered: None,
                });
            }
        }

        if server.is_none() {
            if let Some(s) = queue.pop_front() {
                started += 1;
                total_wait += n - s.generated;
                if let Some(t) = trace.as_mut() {
                    t.events.push(Event { kind: EventKind::ServiceStart, sample: s.index, time: n });
                    t.samples[s.index as usize - 1].started = Some(n);
                }
                server = Some(InService { index: s.index, generated: s.generated, completes: n + s.service, after: s.after });
            }
        }
        if queue.len() > MAX_QUEUED {
            return Err(Error::QueueOverflow { limit: MAX_QUEUED, step: n });
        }

        let age = match freshest {
            Some(u) => n - u,
            None => delta0 + n,
        };
        let value = cache.get(age);
        if n >= 1 {
            sum += value;
        }
        if let Some(t) = trace.as_mut() {
            t.ages.push(age);
            t.metric.push(value);
            t.queue_len.push(queue.len());
            t.freshest.push(freshest);
        }
    }

    let summary = RunSummary {
        time_average: sum / horizon as f64,
        samples_generated: generated,
        samples_delivered: delivered,
        mean_queue_wait: if started == 0 { 0.0 } else { total_wait as f64 / started as f64 },
        seed: None,
    };
    Ok((trace, summary))
}

/// Simulates `horizon` steps with service times drawn from `dist`.
pub fn simulate(
    policy: &dyn SamplingPolicy,
    metric: &Metric,
    dist: &ServiceTimeDist,
    horizon: u64,
    seed: u64,
    delta0: u64,
) -> Result<(SimulationTrace, RunSummary)> {
    let mut source = Drawn { dist, rng: ChaCha8Rng::seed_from_u64(seed) };
    let (trace, mut summary) = run(policy, metric, horizon, delta0, &mut source, true)?;
    summary.seed = Some(seed);
    Ok((trace.expect("trace recorded"), summary))
}

/// [`simulate`] without storing the trace.
pub fn simulate_summary(
    policy: &dyn SamplingPolicy,
    metric: &Metric,
    dist: &ServiceTimeDist,
    horizon: u64,
    seed: u64,
    delta0: u64,
) -> Result<RunSummary> {
    let mut source = Drawn { dist, rng: ChaCha8Rng::seed_from_u64(seed) };
    let (_, mut summary) = run(policy, metric, horizon, delta0, &mut source, false)?;
    summary.seed = Some(seed);
    Ok(summary)
}

/// Like [`simulate`], but sample `i` takes `forced_services[i - 1]` steps.
pub fn replay(
    policy: &dyn SamplingPolicy,
    metric: &Metric,
    dist: &ServiceTimeDist,
    forced_services: &[u64],
    horizon: u64,
    delta0: u64,
) -> Result<(SimulationTrace, RunSummary)> {
    if let Some(&y) = forced_services.iter().find(|&&y| !dist.contains(y)) {
        return Err(Error::ServiceNotInSupport(y));
    }
    let mut source = Forced { services: forced_services };
    let (trace, summary) = run(policy, metric, horizon, delta0, &mut source, true)?;
    Ok((trace.expect("trace recorded"), summary))
}

/// Mean and standard error of the time average across independent seeds,
/// run in parallel.
pub fn estimate_time_average(
    policy: &dyn SamplingPolicy,
    metric: &Metric,
    dist: &ServiceTimeDist,
    horizon: u64,
    seeds: &[u64],
    delta0: u64,
) -> Result<Estimate> {
    if seeds.len() < 2 {
        return Err(Error::OutOfRange("a standard error needs at least two seeds".into()));
    }
    let averages = seeds
        .par_iter()
        .map(|&seed| simulate_summary(policy, metric, dist, horizon, seed, delta0).map(|s| s.time_average))
        .collect::<Result<Vec<f64>>>()?;
    let k = averages.len() as f64;
    let mean = averages.iter().sum::<f64>() / k;
    let var = averages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(Estimate { mean, std_error: (var / k).sqrt() })
}
