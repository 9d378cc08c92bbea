//! The Hamming-cube MDP: states, flip/terminate actions, margin rewards,
//! and the greedy expert used for guided exploration.
//!
//! Actions 0..b flip the corresponding bit; action b terminates the
//! episode. Flip rewards follow the margin difference
//! `(d_pos - d_neg) - (d_pos' - d_neg')`; the terminate action earns
//! `+sigma` when `d_pos <= eta`, else `-sigma`.

use crate::codebook::Codebook;
use crate::hamming::{self, BinaryCode, LabelSet};
use crate::rng::{self, domain};
use std::collections::VecDeque;
use thiserror::Error;

/// Number of past actions carried in the state.
pub const HISTORY_DEPTH: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("episode already done")]
    EpisodeAlreadyDone,
    #[error("action {action} out of range for {num_actions} actions")]
    ActionOutOfRange { action: usize, num_actions: usize },
    #[error("feature dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Episode parameters: termination threshold η, termination reward σ,
/// and the step cap M.
#[derive(Debug, Clone, Copy)]
pub struct EnvConfig {
    pub eta: usize,
    pub sigma: f64,
    pub max_steps: usize,
}

impl EnvConfig {
    /// Defaults for a codebook: η = ⌊R/2⌋, σ = 5.0, M = b.
    pub fn for_codebook(book: &Codebook) -> Self {
        EnvConfig {
            eta: book.default_eta(),
            sigma: 5.0,
            max_steps: book.width(),
        }
    }

    pub fn validate(&self, book: &Codebook) -> Result<(), String> {
        if self.eta > book.radius() {
            return Err(format!(
                "eta {} exceeds codebook radius {}",
                self.eta,
                book.radius()
            ));
        }
        if self.sigma <= 0.0 {
            return Err("sigma must be positive".into());
        }
        if self.max_steps == 0 {
            return Err("max_steps must be at least 1".into());
        }
        Ok(())
    }
}

/// Agent state: the item feature, the current code e_t, the rolling
/// window of the last [`HISTORY_DEPTH`] non-terminate actions (most
/// recent last), and the step counter.
#[derive(Debug, Clone)]
pub struct State {
    feature: Vec<f64>,
    code: BinaryCode,
    history: VecDeque<u16>,
    step_index: usize,
    done: bool,
}

impl State {
    pub fn feature(&self) -> &[f64] {
        &self.feature
    }

    pub fn code(&self) -> &BinaryCode {
        &self.code
    }

    /// Action indices of the recorded history, oldest first.
    pub fn history(&self) -> impl Iterator<Item = usize> + '_ {
        self.history.iter().map(|&a| a as usize)
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Flattened state vector `[f ∥ e_t ∥ h_t]` of length
    /// `d_f + b + 10*b`. History rows are one-hot over the flip actions,
    /// zero-padded at the front; the most recent action sits in row 9.
    pub fn encode_vector(&self) -> Vec<f64> {
        let b = self.code.width();
        let d_f = self.feature.len();
        let mut v = vec![0.0; d_f + b + HISTORY_DEPTH * b];
        v[..d_f].copy_from_slice(&self.feature);
        for i in 0..b {
            if self.code.bit(i) {
                v[d_f + i] = 1.0;
            }
        }
        let h = self.history.len();
        for (i, &action) in self.history.iter().enumerate() {
            let row = HISTORY_DEPTH - h + i;
            v[d_f + b + row * b + action as usize] = 1.0;
        }
        v
    }
}

/// Length of the encoded state vector for a feature dimension and code
/// width.
pub fn state_dim(d_f: usize, b: usize) -> usize {
    d_f + (HISTORY_DEPTH + 1) * b
}

/// One step result: successor state, reward, episode-done flag, and the
/// action that produced it.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: State,
    pub reward: f64,
    pub done: bool,
    pub action_taken: usize,
}

/// The MDP over one codebook. Instances are cheap views; episodes for
/// different items can run concurrently as long as each drives its own
/// `State`.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    config: EnvConfig,
    book: &'a Codebook,
}

impl<'a> Environment<'a> {
    pub fn new(config: EnvConfig, book: &'a Codebook) -> Self {
        debug_assert!(config.validate(book).is_ok());
        Environment { config, book }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn codebook(&self) -> &Codebook {
        self.book
    }

    pub fn num_actions(&self) -> usize {
        self.book.width() + 1
    }

    /// Index of the terminate action.
    pub fn terminate_action(&self) -> usize {
        self.book.width()
    }

    /// Fresh state with e_0 drawn from a stream seeded by
    /// `(run_seed, item_id)`. Used at encoding time.
    pub fn reset(&self, feature: Vec<f64>, item_id: u64, run_seed: u64) -> State {
        let mut r = rng::stream(&[domain::CODE_INIT, run_seed, item_id]);
        self.fresh_state(feature, BinaryCode::random(self.book.width(), &mut r))
    }

    /// Training-time reset, reseeded per epoch for exploration diversity.
    pub fn reset_for_epoch(
        &self,
        feature: Vec<f64>,
        item_id: u64,
        epoch: u64,
        run_seed: u64,
    ) -> State {
        let mut r = rng::stream(&[domain::CODE_INIT_EPOCH, run_seed, epoch, item_id]);
        self.fresh_state(feature, BinaryCode::random(self.book.width(), &mut r))
    }

    /// Fresh state at an explicit starting code (oracle probes, tests).
    pub fn reset_at(&self, feature: Vec<f64>, code: BinaryCode) -> State {
        assert_eq!(code.width(), self.book.width());
        self.fresh_state(feature, code)
    }

    fn fresh_state(&self, feature: Vec<f64>, code: BinaryCode) -> State {
        State {
            feature,
            code,
            history: VecDeque::with_capacity(HISTORY_DEPTH),
            step_index: 0,
            done: false,
        }
    }

    /// Margin d_pos − d_neg of a code under the item labels.
    pub fn margin(&self, code: &BinaryCode, labels: &LabelSet) -> f64 {
        let pos = hamming::d_pos(code, labels, self.book) as f64;
        let neg = hamming::d_neg(code, labels, self.book)
            .expect("labels must leave at least one negative class");
        pos - neg
    }

    /// Margin-difference reward for one flip transition.
    pub fn reward_flip(&self, before: &State, after: &State, labels: &LabelSet) -> f64 {
        self.margin(&before.code, labels) - self.margin(&after.code, labels)
    }

    /// Terminate reward: +σ iff d_pos <= η, else −σ.
    pub fn reward_terminate(&self, state: &State, labels: &LabelSet) -> f64 {
        if hamming::d_pos(&state.code, labels, self.book) <= self.config.eta {
            self.config.sigma
        } else {
            -self.config.sigma
        }
    }

    /// Applies an action. Flips update the code and roll the history;
    /// terminate leaves both untouched and ends the episode. A flip that
    /// exhausts the step cap ends the episode without a terminal reward.
    pub fn step(
        &self,
        state: &State,
        action: usize,
        labels: &LabelSet,
    ) -> Result<StepOutcome, EnvError> {
        if state.done || state.step_index >= self.config.max_steps {
            return Err(EnvError::EpisodeAlreadyDone);
        }
        let b = self.book.width();
        if action > b {
            return Err(EnvError::ActionOutOfRange {
                action,
                num_actions: b + 1,
            });
        }
        if action == b {
            let mut next = state.clone();
            next.done = true;
            return Ok(StepOutcome {
                reward: self.reward_terminate(state, labels),
                next_state: next,
                done: true,
                action_taken: action,
            });
        }
        let mut next = state.clone();
        next.code = hamming::flip_bit(&state.code, action);
        if next.history.len() == HISTORY_DEPTH {
            next.history.pop_front();
        }
        next.history.push_back(action as u16);
        next.step_index += 1;
        let done = next.step_index >= self.config.max_steps;
        next.done = done;
        Ok(StepOutcome {
            reward: self.reward_flip(state, &next, labels),
            next_state: next,
            done,
            action_taken: action,
        })
    }

    /// Reward-free transition for the encoding path, where no labels are
    /// available and none are needed. Terminate is handled by the caller
    /// (it would not change the state anyway).
    pub fn step_unrewarded(&self, state: &State, action: usize) -> Result<State, EnvError> {
        if state.done || state.step_index >= self.config.max_steps {
            return Err(EnvError::EpisodeAlreadyDone);
        }
        let b = self.book.width();
        if action >= b {
            return Err(EnvError::ActionOutOfRange {
                action,
                num_actions: b + 1,
            });
        }
        let mut next = state.clone();
        next.code = hamming::flip_bit(&state.code, action);
        if next.history.len() == HISTORY_DEPTH {
            next.history.pop_front();
        }
        next.history.push_back(action as u16);
        next.step_index += 1;
        next.done = next.step_index >= self.config.max_steps;
        Ok(next)
    }

    /// The demonstrator for guided exploration: the flip with the largest
    /// positive margin reward (ties to the smallest index), or terminate
    /// when no flip improves the margin.
    pub fn expert_action(&self, state: &State, labels: &LabelSet) -> usize {
        let b = self.book.width();
        let classes = self.book.num_classes();
        let dists: Vec<isize> = (0..classes)
            .map(|c| hamming::hamming_distance(&state.code, self.book.codeword(c)) as isize)
            .collect();
        let neg_count = (classes - labels.len()) as f64;
        let base_pos = labels
            .classes()
            .iter()
            .map(|&c| dists[c as usize])
            .min()
            .expect("nonempty labels") as f64;
        let base_neg_sum: isize = (0..classes)
            .filter(|&c| !labels.contains(c as u32))
            .map(|c| dists[c])
            .sum();
        let base_margin = base_pos - base_neg_sum as f64 / neg_count;

        let mut best: Option<(usize, f64)> = None;
        for k in 0..b {
            let bit = state.code.bit(k);
            // Flipping bit k moves distance to class c by +1 when the bit
            // currently matches that codeword, by -1 otherwise.
            let mut new_pos = isize::MAX;
            let mut new_neg_sum = 0isize;
            for c in 0..classes {
                let delta = if self.book.codeword(c).bit(k) == bit {
                    1
                } else {
                    -1
                };
                let nd = dists[c] + delta;
                if labels.contains(c as u32) {
                    new_pos = new_pos.min(nd);
                } else {
                    new_neg_sum += nd;
                }
            }
            let new_margin = new_pos as f64 - new_neg_sum as f64 / neg_count;
            let reward = base_margin - new_margin;
            if reward > 0.0 && best.map_or(true, |(_, r)| reward > r) {
                best = Some((k, reward));
            }
        }
        match best {
            Some((k, _)) => k,
            None => b,
        }
    }
}
