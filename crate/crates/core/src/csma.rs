//! Discrete-event simulation of 802.11p-style broadcast CSMA/CA with `κ`
//! repetitions per packet over an erasure channel.
//!
//! Every user hears every other user (no hidden terminals) and sensing is
//! instantaneous, so two transmissions can only overlap when they start at
//! the same instant; such collisions destroy both packets. Collision-free
//! packets are erased independently at the receiver.
//!
//! Channel access per attempt: sense for AIFS; if the channel is or becomes
//! busy, draw a backoff counter uniformly from `0..=cw` once. The counter
//! then counts down one CSMA slot at a time while the channel has been idle
//! for at least AIFS, freezes while it is busy, and the user transmits when
//! it reaches zero. There are no acknowledgements, retransmissions or
//! post-transmission backoff.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, domain, Result};
use crate::graph::frame_rng;
use crate::montecarlo::{plr_from_counts, Estimate};

/// Nanoseconds.
pub type Nanos = u64;

const US: Nanos = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsmaConfig {
    pub data_rate_mbps: f64,
    pub preamble: Nanos,
    pub csma_slot: Nanos,
    pub aifs: Nanos,
    pub frame: Nanos,
    pub guard: Nanos,
    pub packet_bytes: usize,
    /// Air time of one packet.
    pub packet_length: Nanos,
    /// Largest backoff counter.
    pub contention_window: u32,
    pub kappa: usize,
    pub eps: f64,
    /// Neighbors of the observed user; `m + 1` users contend.
    pub m: usize,
    /// Independent draws of the users' offsets.
    pub runs: u64,
    pub seed: u64,
}

impl CsmaConfig {
    /// The 6 Mbit/s, 100 ms parameter set with 200- or 400-byte packets.
    pub fn table_ii(packet_bytes: usize, kappa: usize, eps: f64, m: usize) -> Result<Self> {
        let packet_length = match packet_bytes {
            200 => 312 * US,
            400 => 576 * US,
            other => return domain(format!("packet size must be 200 or 400 bytes, got {other}")),
        };
        Ok(CsmaConfig {
            data_rate_mbps: 6.0,
            preamble: 40 * US,
            csma_slot: 13 * US,
            aifs: 58 * US,
            frame: 100_000 * US,
            guard: 5 * US,
            packet_bytes,
            packet_length,
            contention_window: 511,
            kappa,
            eps,
            m,
            runs: 1000,
            seed: 1,
        })
    }

    /// Slot length used to compare with slotted schemes: packet plus guard.
    pub fn slot(&self) -> Nanos {
        self.packet_length + self.guard
    }

    /// Slots per frame, `floor(t_frame / t_slot)`.
    pub fn n(&self) -> usize {
        (self.frame / self.slot()) as usize
    }

    pub fn load(&self) -> f64 {
        (self.m + 1) as f64 / self.n() as f64
    }

    /// Neighbor count whose load is closest to `g`.
    pub fn neighbors_for_load(&self, g: f64) -> usize {
        ((g * self.n() as f64).round() as usize).saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("erasure probability", self.eps)?;
        if self.kappa == 0 {
            return domain("at least one transmission attempt per packet is needed");
        }
        if [self.preamble, self.csma_slot, self.aifs, self.frame, self.packet_length].contains(&0) {
            return domain("all durations must be positive");
        }
        if self.packet_length >= self.frame / self.kappa as u64 {
            return domain("packets must be shorter than the spacing between attempts");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsmaResult {
    /// Loss rate of the observed user's neighbors' packets; `None` without
    /// neighbors.
    pub plr: Option<Estimate>,
    pub load: f64,
    pub counts: CsmaCounts,
}

/// Counters over all runs and the whole simulated horizon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsmaCounts {
    /// Attempts that became due.
    pub attempts: u64,
    /// Attempts discarded at their packet's deadline.
    pub dropped: u64,
    pub transmissions: u64,
    pub collided: u64,
    /// Collision-free transmissions the observed user failed to decode.
    pub erased: u64,
    /// Measured packets (one per neighbor and run) and how many were lost.
    pub measured: u64,
    pub lost: u64,
}

impl CsmaCounts {
    fn add(mut self, o: &CsmaCounts) -> Self {
        self.attempts += o.attempts;
        self.dropped += o.dropped;
        self.transmissions += o.transmissions;
        self.collided += o.collided;
        self.erased += o.erased;
        self.measured += o.measured;
        self.lost += o.lost;
        self
    }
}

pub fn csma_simulate(config: &CsmaConfig) -> Result<CsmaResult> {
    config.validate()?;
    let counts = (0..config.runs)
        .into_par_iter()
        .map(|run| Run::new(config, frame_rng(config.seed, run)).simulate())
        .reduce(CsmaCounts::default, |a, b| a.add(&b));
    Ok(CsmaResult { plr: plr_from_counts(counts.lost, counts.measured)?, load: config.load(), counts })
}

/// Packets are numbered from 0; the one generated in `[2 t_frame, 3 t_frame)`
/// is measured.
const MEASURED_PACKET: usize = 2;
/// Simulated horizon in frames: the measured packet's deadline is before it.
const HORIZON_FRAMES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Attempt { user: usize, packet: usize },
    Deadline { user: usize, packet: usize },
    AifsDone { user: usize, token: u64 },
    CountdownDone { user: usize, token: u64 },
    TxEnd { tx: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    /// Waiting for the channel to become idle.
    Deferring,
    Sensing { until: Nanos },
    CountingDown { since: Nanos, until: Nanos },
    Transmitting,
}

struct User {
    phase: Phase,
    /// Packet of the attempt in progress.
    current: Option<usize>,
    /// `None` until the attempt first finds the channel busy.
    backoff: Option<u32>,
    /// Invalidates timer events scheduled before the last interruption.
    token: u64,
    queue: VecDeque<usize>,
}

struct Tx {
    user: usize,
    packet: usize,
    collided: bool,
}

struct Run<'a> {
    cfg: &'a CsmaConfig,
    rng: ChaCha8Rng,
    now: Nanos,
    seq: u64,
    events: BinaryHeap<Reverse<(Nanos, u64, Event)>>,
    users: Vec<User>,
    active: Vec<usize>,
    txs: Vec<Tx>,
    /// Whether the observed user (user 0) received the measured packet of
    /// each neighbor.
    received: Vec<bool>,
    counts: CsmaCounts,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a CsmaConfig, rng: ChaCha8Rng) -> Self {
        let n_users = cfg.m + 1;
        let mut run = Run {
            cfg,
            now: 0,
            seq: 0,
            events: BinaryHeap::new(),
            users: (0..n_users)
                .map(|_| User { phase: Phase::Idle, current: None, backoff: None, token: 0, queue: VecDeque::new() })
                .collect(),
            active: Vec::new(),
            txs: Vec::new(),
            received: vec![false; n_users],
            counts: CsmaCounts::default(),
            rng,
        };
        let horizon = HORIZON_FRAMES * cfg.frame;
        let spacing = cfg.frame / cfg.kappa as u64;
        for user in 0..n_users {
            let offset = run.rng.gen_range(0..cfg.frame);
            for packet in 0.. {
                let generated = offset + packet as u64 * cfg.frame;
                if generated >= horizon {
                    break;
                }
                for k in 0..cfg.kappa as u64 {
                    run.schedule(generated + k * spacing, Event::Attempt { user, packet });
                }
                run.schedule(generated + cfg.frame, Event::Deadline { user, packet });
            }
        }
        run
    }

    fn schedule(&mut self, at: Nanos, event: Event) {
        self.seq += 1;
        self.events.push(Reverse((at, self.seq, event)));
    }

    fn channel_busy(&self) -> bool {
        !self.active.is_empty()
    }

    fn simulate(mut self) -> CsmaCounts {
        let horizon = HORIZON_FRAMES * self.cfg.frame;
        while let Some(Reverse((at, _, event))) = self.events.pop() {
            if at >= horizon {
                break;
            }
            self.now = at;
            match event {
                Event::Attempt { user, packet } => self.on_attempt(user, packet),
                Event::Deadline { user, packet } => self.on_deadline(user, packet),
                Event::AifsDone { user, token } if self.users[user].token == token => self.on_aifs_done(user),
                Event::CountdownDone { user, token } if self.users[user].token == token => self.transmit(user),
                Event::TxEnd { tx } => self.on_tx_end(tx),
                _ => {}
            }
        }
        let mut counts = self.counts;
        counts.measured = self.cfg.m as u64;
        counts.lost = self.received[1..].iter().filter(|r| !**r).count() as u64;
        counts
    }

    fn on_attempt(&mut self, user: usize, packet: usize) {
        self.counts.attempts += 1;
        let u = &mut self.users[user];
        if u.phase == Phase::Idle {
            self.begin(user, packet);
        } else {
            u.queue.push_back(packet);
        }
    }

    fn begin(&mut self, user: usize, packet: usize) {
        let busy = self.channel_busy();
        let backoff = busy.then(|| self.draw_backoff());
        let aifs = self.cfg.aifs;
        let now = self.now;
        let u = &mut self.users[user];
        u.current = Some(packet);
        u.backoff = backoff;
        u.token += 1;
        if busy {
            u.phase = Phase::Deferring;
        } else {
            u.phase = Phase::Sensing { until: now + aifs };
            let token = u.token;
            self.schedule(now + aifs, Event::AifsDone { user, token });
        }
    }

    fn draw_backoff(&mut self) -> u32 {
        self.rng.gen_range(0..=self.cfg.contention_window)
    }

    fn start_next(&mut self, user: usize) {
        let u = &mut self.users[user];
        u.phase = Phase::Idle;
        u.current = None;
        u.backoff = None;
        u.token += 1;
        if let Some(packet) = u.queue.pop_front() {
            self.begin(user, packet);
        }
    }

    fn on_deadline(&mut self, user: usize, packet: usize) {
        let u = &mut self.users[user];
        let before = u.queue.len();
        u.queue.retain(|&p| p != packet);
        self.counts.dropped += (before - u.queue.len()) as u64;
        if u.current == Some(packet) && u.phase != Phase::Transmitting {
            self.counts.dropped += 1;
            self.start_next(user);
        }
    }

    fn on_aifs_done(&mut self, user: usize) {
        let now = self.now;
        let slot = self.cfg.csma_slot;
        let busy = self.channel_busy();
        let u = &mut self.users[user];
        match u.backoff {
            None | Some(0) => self.transmit(user),
            // Someone started transmitting at this very instant.
            Some(_) if busy => {
                u.phase = Phase::Deferring;
                u.token += 1;
            }
            Some(c) => {
                let until = now + c as u64 * slot;
                u.phase = Phase::CountingDown { since: now, until };
                let token = u.token;
                self.schedule(until, Event::CountdownDone { user, token });
            }
        }
    }

    fn transmit(&mut self, user: usize) {
        let was_idle = !self.channel_busy();
        let packet = self.users[user].current.expect("transmitting user has an attempt");
        let collided = !was_idle;
        for &t in &self.active {
            self.txs[t].collided = true;
        }
        let tx = self.txs.len();
        self.txs.push(Tx { user, packet, collided });
        self.active.push(tx);
        self.counts.transmissions += 1;
        let u = &mut self.users[user];
        u.phase = Phase::Transmitting;
        u.token += 1;
        self.schedule(self.now + self.cfg.packet_length, Event::TxEnd { tx });
        if was_idle {
            self.freeze_others(user);
        }
    }

    /// The channel just became busy. Users whose timer expires at this very
    /// instant have already committed to transmitting and are left alone.
    fn freeze_others(&mut self, transmitter: usize) {
        let now = self.now;
        let slot = self.cfg.csma_slot;
        for j in 0..self.users.len() {
            if j == transmitter {
                continue;
            }
            match self.users[j].phase {
                Phase::Sensing { until } if until > now => {
                    if self.users[j].backoff.is_none() {
                        let b = self.draw_backoff();
                        self.users[j].backoff = Some(b);
                    }
                }
                Phase::CountingDown { since, until } if until > now => {
                    let elapsed = ((now - since) / slot) as u32;
                    let u = &mut self.users[j];
                    u.backoff = u.backoff.map(|b| b - elapsed);
                }
                _ => continue,
            }
            let u = &mut self.users[j];
            u.phase = Phase::Deferring;
            u.token += 1;
        }
    }

    fn on_tx_end(&mut self, tx: usize) {
        self.active.retain(|&t| t != tx);
        let Tx { user, packet, collided } = self.txs[tx];
        if collided {
            self.counts.collided += 1;
        } else if user != 0 {
            if self.rng.gen::<f64>() < self.cfg.eps {
                self.counts.erased += 1;
            } else if packet == MEASURED_PACKET {
                self.received[user] = true;
            }
        }
        if !self.channel_busy() {
            let now = self.now;
            let aifs = self.cfg.aifs;
            for j in 0..self.users.len() {
                if self.users[j].phase == Phase::Deferring {
                    let u = &mut self.users[j];
                    u.phase = Phase::Sensing { until: now + aifs };
                    u.token += 1;
                    let token = u.token;
                    self.schedule(now + aifs, Event::AifsDone { user: j, token });
                }
            }
        }
        self.start_next(user);
    }
}
