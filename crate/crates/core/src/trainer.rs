//! Q-learning driver: replay memory, the ε-greedy schedule with guided
//! exploration, bootstrap targets against a periodically synced target
//! network, and the epoch loop.
//!
//! The loop is strictly single-threaded and fully seeded; two runs with
//! the same configuration produce identical parameters and identical log
//! lines (timing column aside).

use crate::codebook::Codebook;
use crate::data::Dataset;
use crate::env::{state_dim, EnvConfig, Environment, EnvError, State};
use crate::hamming::{self, LabelSet};
use crate::qnet::{argmax, ForwardMode, QNetError, QNetwork};
use crate::rng::{self, domain};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("config: {0}")]
    Config(String),
    #[error("dataset has no training items")]
    EmptyDataset,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    QNet(#[from] QNetError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {value:?}")]
    BadValue { key: String, value: String },
    #[error("malformed config line {0:?} (expected 'key = value')")]
    MalformedLine(String),
}

/// One experience record: encoded state, action, reward, encoded
/// successor, and whether the transition was terminal for bootstrapping.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state_vec: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state_vec: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    ring: Vec<Transition>,
    next: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            ring: Vec::with_capacity(capacity.min(1 << 20)),
            next: 0,
            inserted: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Inserts a transition, evicting the oldest once full.
    pub fn push(&mut self, t: Transition) {
        if self.ring.len() < self.capacity {
            self.ring.push(t);
        } else {
            self.ring[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
        self.inserted += 1;
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.ring[index]
    }

    /// Uniform batch of indices (with replacement).
    pub fn sample_indices<R: Rng>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        (0..batch).map(|_| rng.gen_range(0..self.ring.len())).collect()
    }

    /// Indices in insertion order, oldest first. Test/debug helper for
    /// the FIFO contract.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &Transition> {
        let (tail, head) = self.ring.split_at(self.next.min(self.ring.len()));
        head.iter().chain(tail.iter())
    }
}

/// Training hyperparameters. `Default` carries the documented values;
/// the flat `key = value` config file overrides individual fields and
/// rejects unknown keys.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_epochs: usize,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learning_rate: f64,
    pub target_sync_interval: usize,
    pub expert_prob: f64,
    pub seed: u64,
    pub hidden_dims: Vec<usize>,
    pub dropout_rate: f64,
    /// Termination threshold override; defaults to ⌊R/2⌋ of the codebook.
    pub eta: Option<usize>,
    pub sigma: f64,
    /// Step cap override; defaults to the code width b.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 25,
            eps_start: 1.0,
            eps_end: 0.1,
            eps_decay_epochs: 15,
            gamma: 0.9,
            batch_size: 64,
            buffer_capacity: 50_000,
            learning_rate: 1e-3,
            target_sync_interval: 500,
            expert_prob: 0.5,
            seed: 0,
            hidden_dims: vec![64, 64],
            dropout_rate: 0.2,
            eta: None,
            sigma: 5.0,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    /// Parses the flat `key = value` config format. Missing keys keep
    /// their defaults; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = TrainConfig::default();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::MalformedLine(raw.to_string()));
            };
            let key = key.trim();
            let value = value.trim();
            let bad = || ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "epochs" => cfg.epochs = value.parse().map_err(|_| bad())?,
                "eps_start" => cfg.eps_start = value.parse().map_err(|_| bad())?,
                "eps_end" => cfg.eps_end = value.parse().map_err(|_| bad())?,
                "eps_decay_epochs" => cfg.eps_decay_epochs = value.parse().map_err(|_| bad())?,
                "gamma" => cfg.gamma = value.parse().map_err(|_| bad())?,
                "batch_size" => cfg.batch_size = value.parse().map_err(|_| bad())?,
                "buffer_capacity" => cfg.buffer_capacity = value.parse().map_err(|_| bad())?,
                "learning_rate" => cfg.learning_rate = value.parse().map_err(|_| bad())?,
                "target_sync_interval" => {
                    cfg.target_sync_interval = value.parse().map_err(|_| bad())?
                }
                "expert_prob" => cfg.expert_prob = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "hidden_dims" => {
                    cfg.hidden_dims = value
                        .split(',')
                        .map(|v| v.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad())?
                }
                "dropout_rate" => cfg.dropout_rate = value.parse().map_err(|_| bad())?,
                "eta" => cfg.eta = Some(value.parse().map_err(|_| bad())?),
                "sigma" => cfg.sigma = value.parse().map_err(|_| bad())?,
                "max_steps" => cfg.max_steps = Some(value.parse().map_err(|_| bad())?),
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.epochs == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err("epochs, batch_size and buffer_capacity must be positive".into());
        }
        if self.eps_end > self.eps_start {
            return Err("eps_end must not exceed eps_start".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err("gamma must lie in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.expert_prob) {
            return Err("expert_prob must lie in [0, 1]".into());
        }
        if self.learning_rate <= 0.0 {
            return Err("learning_rate must be positive".into());
        }
        if self.target_sync_interval == 0 {
            return Err("target_sync_interval must be positive".into());
        }
        if self.hidden_dims.is_empty() {
            return Err("hidden_dims must name at least one layer".into());
        }
        Ok(())
    }

    /// Environment parameters for a codebook, applying the overrides.
    pub fn env_config(&self, book: &Codebook) -> EnvConfig {
        EnvConfig {
            eta: self.eta.unwrap_or_else(|| book.default_eta()),
            sigma: self.sigma,
            max_steps: self.max_steps.unwrap_or_else(|| book.width()),
        }
    }

    /// Stable `# key = value` echo of every resolved field.
    pub fn echo_lines(&self, env: &EnvConfig) -> String {
        let hidden = self
            .hidden_dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut s = String::new();
        let _ = writeln!(s, "# epochs = {}", self.epochs);
        let _ = writeln!(s, "# eps_start = {}", self.eps_start);
        let _ = writeln!(s, "# eps_end = {}", self.eps_end);
        let _ = writeln!(s, "# eps_decay_epochs = {}", self.eps_decay_epochs);
        let _ = writeln!(s, "# gamma = {}", self.gamma);
        let _ = writeln!(s, "# batch_size = {}", self.batch_size);
        let _ = writeln!(s, "# buffer_capacity = {}", self.buffer_capacity);
        let _ = writeln!(s, "# learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "# target_sync_interval = {}", self.target_sync_interval);
        let _ = writeln!(s, "# expert_prob = {}", self.expert_prob);
        let _ = writeln!(s, "# seed = {}", self.seed);
        let _ = writeln!(s, "# hidden_dims = {hidden}");
        let _ = writeln!(s, "# dropout_rate = {}", self.dropout_rate);
        let _ = writeln!(s, "# eta = {}", env.eta);
        let _ = writeln!(s, "# sigma = {}", env.sigma);
        let _ = writeln!(s, "# max_steps = {}", env.max_steps);
        s
    }
}

/// ε at a given epoch: linear from `eps_start` to `eps_end` across the
/// first `eps_decay_epochs` epochs (endpoints at epoch 0 and epoch
/// `eps_decay_epochs - 1`), constant afterwards.
pub fn epsilon_at(epoch: usize, config: &TrainConfig) -> f64 {
    let decay = config.eps_decay_epochs;
    if epoch + 1 >= decay {
        return config.eps_end;
    }
    let slope = (config.eps_start - config.eps_end) / (decay - 1) as f64;
    config.eps_start - epoch as f64 * slope
}

/// ε-greedy action choice with guided exploration: exploit the argmax
/// Q-value with probability 1−ε; otherwise follow the expert with
/// probability `expert_prob`, else act uniformly over the b+1 actions.
pub fn select_action(
    net: &QNetwork,
    state: &State,
    epsilon: f64,
    config: &TrainConfig,
    env: &Environment,
    labels: &LabelSet,
    rng: &mut ChaCha8Rng,
) -> usize {
    let explore: f64 = rng.gen();
    if explore < epsilon {
        let guided: f64 = rng.gen();
        if guided < config.expert_prob {
            env.expert_action(state, labels)
        } else {
            rng.gen_range(0..env.num_actions())
        }
    } else {
        let q = net
            .forward_eval(&state.encode_vector())
            .expect("network dims fixed at loop start");
        argmax(&q)
    }
}

/// One-step bootstrap targets: `r` for terminal transitions, else
/// `r + gamma * max_a Q_target(s', a)`. The squared-error loss applies
/// to the taken action's Q-value only (handled by the caller's `dq`).
pub fn q_targets(
    batch: &[&Transition],
    target_net: &QNetwork,
    gamma: f64,
) -> Result<Vec<f64>, QNetError> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                Ok(t.reward)
            } else {
                let q = target_net.forward_eval(&t.next_state_vec)?;
                let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok(t.reward + gamma * best)
            }
        })
        .collect()
}

/// Per-epoch summary, one log line each.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub epsilon: f64,
    pub mean_reward: f64,
    pub mean_len: f64,
    pub mean_terminal_dpos: f64,
    pub wall_seconds: f64,
}

impl EpochStats {
    fn log_line(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.3}",
            self.epoch,
            self.epsilon,
            self.mean_reward,
            self.mean_len,
            self.mean_terminal_dpos,
            self.wall_seconds
        )
    }
}

/// A trained network plus the full training log text.
#[derive(Debug)]
pub struct TrainResult {
    pub network: QNetwork,
    pub epochs: Vec<EpochStats>,
    pub log: String,
}

/// Runs the full Q-learning loop over the dataset's training items.
///
/// Every epoch walks the items in a seeded shuffle, rolls out one
/// episode per item (pushing every transition into the replay buffer),
/// and takes one SGD step per environment step once the buffer holds a
/// batch. The target network hard-syncs every `target_sync_interval`
/// updates.
pub fn run_training(
    dataset: &Dataset,
    book: &Codebook,
    config: &TrainConfig,
) -> Result<TrainResult, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    let env_cfg = config.env_config(book);
    env_cfg.validate(book).map_err(TrainError::Config)?;
    let items = dataset.train_indices();
    if items.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    dataset
        .check_labels_fit(book.num_classes())
        .map_err(TrainError::Config)?;

    let b = book.width();
    let d_f = dataset.feature_dim();
    let in_dim = state_dim(d_f, b);
    let specs = QNetwork::default_specs(in_dim, b + 1, &config.hidden_dims, config.dropout_rate);
    let mut net = QNetwork::init(&specs, config.seed)?;
    let mut target = net.clone();
    let env = Environment::new(env_cfg, book);

    let mut shuffle_rng = rng::stream(&[domain::SHUFFLE, config.seed]);
    let mut action_rng = rng::stream(&[domain::ACTION, config.seed]);
    let mut replay_rng = rng::stream(&[domain::REPLAY_SAMPLE, config.seed]);
    let mut mask_rng = rng::stream(&[domain::MASK_SEQUENCE, config.seed]);

    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut grads = net.zero_gradients();
    let mut updates: u64 = 0;

    let mut log = String::from("# drlh-train v1\n");
    log.push_str(&config.echo_lines(&env_cfg));
    let _ = writeln!(log, "# train_items = {}", items.len());
    let _ = writeln!(log, "# state_dim = {in_dim}");
    let _ = writeln!(log, "# actions = {}", b + 1);
    log.push_str("# epoch\tepsilon\tmean_reward\tmean_len\tmean_terminal_dpos\twall_seconds\n");

    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let t0 = Instant::now();
        let epsilon = epsilon_at(epoch, config);
        let mut order = items.clone();
        order.shuffle(&mut shuffle_rng);

        let mut reward_sum = 0.0;
        let mut len_sum = 0usize;
        let mut dpos_sum = 0usize;
        for &item in &order {
            let labels = dataset.labels(item);
            let mut state = env.reset_for_epoch(
                dataset.feature(item).to_vec(),
                item as u64,
                epoch as u64,
                config.seed,
            );
            loop {
                let action =
                    select_action(&net, &state, epsilon, config, &env, labels, &mut action_rng);
                let out = env.step(&state, action, labels)?;
                // A flip that merely exhausts the step cap is stored as
                // non-terminal: no terminal reward was granted, so the
                // successor still bootstraps.
                let stored_done = out.done && action == env.terminate_action();
                buffer.push(Transition {
                    state_vec: state.encode_vector(),
                    action,
                    reward: out.reward,
                    next_state_vec: out.next_state.encode_vector(),
                    done: stored_done,
                });
                reward_sum += out.reward;
                len_sum += 1;
                if buffer.len() >= config.batch_size {
                    learn_step(
                        &mut net,
                        &mut target,
                        &buffer,
                        config,
                        &mut grads,
                        &mut replay_rng,
                        &mut mask_rng,
                        &mut updates,
                    )?;
                }
                state = out.next_state;
                if out.done {
                    break;
                }
            }
            dpos_sum += hamming::d_pos(state.code(), labels, book);
        }

        let n = order.len() as f64;
        let stats = EpochStats {
            epoch,
            epsilon,
            mean_reward: reward_sum / n,
            mean_len: len_sum as f64 / n,
            mean_terminal_dpos: dpos_sum as f64 / n,
            wall_seconds: t0.elapsed().as_secs_f64(),
        };
        log.push_str(&stats.log_line());
        log.push('\n');
        epochs.push(stats);
    }

    Ok(TrainResult {
        network: net,
        epochs,
        log,
    })
}

#[allow(clippy::too_many_arguments)]
fn learn_step(
    net: &mut QNetwork,
    target: &mut QNetwork,
    buffer: &ReplayBuffer,
    config: &TrainConfig,
    grads: &mut crate::qnet::Gradients,
    replay_rng: &mut ChaCha8Rng,
    mask_rng: &mut ChaCha8Rng,
    updates: &mut u64,
) -> Result<(), TrainError> {
    let indices = buffer.sample_indices(config.batch_size, replay_rng);
    let batch: Vec<&Transition> = indices.iter().map(|&i| buffer.get(i)).collect();
    let targets = q_targets(&batch, target, config.gamma)?;

    grads.zero();
    let inv_batch = 1.0 / config.batch_size as f64;
    let mut dq = vec![0.0; net.output_dim()];
    for (t, &y) in batch.iter().zip(&targets) {
        let mask_seed: u64 = mask_rng.gen();
        let (q, cache) = net.forward(&t.state_vec, ForwardMode::Train { mask_seed })?;
        dq.fill(0.0);
        dq[t.action] = 2.0 * (q[t.action] - y) * inv_batch;
        net.backward_into(&cache, &dq, grads)?;
    }
    net.sgd_update(grads, config.learning_rate)?;
    *updates += 1;
    if *updates % config.target_sync_interval as u64 == 0 {
        *target = net.clone();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;

    #[test]
    fn epsilon_schedule_endpoints_and_midpoint() {
        let cfg = TrainConfig::default();
        assert_eq!(epsilon_at(0, &cfg), 1.0);
        assert!((epsilon_at(7, &cfg) - 0.55).abs() < 1e-12);
        assert!((epsilon_at(14, &cfg) - 0.1).abs() < 1e-12);
        for epoch in 15..25 {
            assert_eq!(epsilon_at(epoch, &cfg), 0.1);
        }
    }

    #[test]
    fn epsilon_degenerate_decay() {
        let cfg = TrainConfig {
            eps_decay_epochs: 1,
            ..TrainConfig::default()
        };
        assert_eq!(epsilon_at(0, &cfg), 0.1);
    }

    #[test]
    fn replay_buffer_fifo_eviction() {
        let mut buf = ReplayBuffer::new(5);
        let t = |r: f64| Transition {
            state_vec: vec![],
            action: 0,
            reward: r,
            next_state_vec: vec![],
            done: false,
        };
        for i in 0..8 {
            buf.push(t(i as f64));
        }
        assert_eq!(buf.len(), 5);
        assert_eq!(buf.inserted(), 8);
        // After capacity + K insertions the oldest K are gone.
        let rewards: Vec<f64> = buf.iter_fifo().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn q_target_cases() {
        let net = QNetwork::init(&QNetwork::default_specs(2, 3, &[4], 0.0), 0).unwrap();
        let done = Transition {
            state_vec: vec![0.0; 2],
            action: 1,
            reward: 5.0,
            next_state_vec: vec![0.0; 2],
            done: true,
        };
        assert_eq!(q_targets(&[&done], &net, 0.9).unwrap(), vec![5.0]);

        let live = Transition {
            state_vec: vec![0.0; 2],
            action: 0,
            reward: 1.0,
            next_state_vec: vec![0.3, -0.2],
            done: false,
        };
        // gamma = 0 collapses to the reward.
        assert_eq!(q_targets(&[&live], &net, 0.0).unwrap(), vec![1.0]);
        // gamma = 0.9 bootstraps the max target-net Q-value.
        let q = net.forward_eval(&live.next_state_vec).unwrap();
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let got = q_targets(&[&live], &net, 0.9).unwrap();
        assert!((got[0] - (1.0 + 0.9 * best)).abs() < 1e-15);
    }

    #[test]
    fn q_target_arithmetic_rule() {
        // r=1, gamma=0.9, max next Q = 2 -> 2.8; check with a crafted
        // single-weight network whose outputs are (0, 2).
        let specs = vec![crate::qnet::LayerSpec {
            input_dim: 1,
            output_dim: 2,
            activation: crate::qnet::Activation::Linear,
            dropout_rate: 0.0,
        }];
        let mut net = QNetwork::init(&specs, 0).unwrap();
        let mut grads = net.zero_gradients();
        // Zero out, then set w[0][1] so forward([1]) = (0, 2).
        grads.d_weights[0].copy_from_slice(net.layer_weights(0));
        net.sgd_update(&grads, 1.0).unwrap();
        grads.d_weights[0].copy_from_slice(&[0.0, -2.0]);
        net.sgd_update(&grads, 1.0).unwrap();
        assert_eq!(net.forward_eval(&[1.0]).unwrap(), vec![0.0, 2.0]);
        let t = Transition {
            state_vec: vec![1.0],
            action: 0,
            reward: 1.0,
            next_state_vec: vec![1.0],
            done: false,
        };
        let got = q_targets(&[&t], &net, 0.9).unwrap();
        assert!((got[0] - 2.8).abs() < 1e-15);
    }

    #[test]
    fn config_parse_defaults_and_overrides() {
        let cfg = TrainConfig::parse("").unwrap();
        assert_eq!(cfg, TrainConfig::default());
        let cfg = TrainConfig::parse("gamma = 0.8\nepochs=3\nhidden_dims = 32, 16\n").unwrap();
        assert_eq!(cfg.gamma, 0.8);
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.hidden_dims, vec![32, 16]);
        // comments and blank lines pass through
        let cfg = TrainConfig::parse("# comment\n\nseed = 9\n").unwrap();
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn config_parse_rejects_unknown_and_malformed() {
        let err = TrainConfig::parse("gama = 0.9").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("gama".into()));
        let err = TrainConfig::parse("gamma 0.9").unwrap_err();
        assert!(matches!(err, ConfigError::MalformedLine(_)));
        let err = TrainConfig::parse("gamma = fast").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { .. }));
    }

    #[test]
    fn select_action_exploit_is_deterministic() {
        let book = Codebook::build(4, 8, 1).unwrap();
        let env = Environment::new(EnvConfig::for_codebook(&book), &book);
        let cfg = TrainConfig::default();
        let net = QNetwork::init(
            &QNetwork::default_specs(state_dim(2, 8), 9, &[8], 0.0),
            3,
        )
        .unwrap();
        let labels = LabelSet::single(0);
        let state = env.reset(vec![0.5, -0.5], 0, 0);
        let mut rng = rng::stream(&[domain::ACTION, 1]);
        let first = select_action(&net, &state, 0.0, &cfg, &env, &labels, &mut rng);
        for _ in 0..10 {
            assert_eq!(
                select_action(&net, &state, 0.0, &cfg, &env, &labels, &mut rng),
                first
            );
        }
    }

    #[test]
    fn select_action_expert_fallback_at_target() {
        let book = Codebook::build(4, 8, 1).unwrap();
        let env = Environment::new(EnvConfig::for_codebook(&book), &book);
        let cfg = TrainConfig {
            expert_prob: 1.0,
            ..TrainConfig::default()
        };
        let net = QNetwork::init(
            &QNetwork::default_specs(state_dim(1, 8), 9, &[4], 0.0),
            3,
        )
        .unwrap();
        let labels = LabelSet::single(2);
        let state = env.reset_at(vec![0.0], book.codeword(2).clone());
        let mut rng = rng::stream(&[domain::ACTION, 2]);
        // epsilon = 1 and expert_prob = 1: always the expert, which
        // terminates at the target codeword.
        for _ in 0..5 {
            assert_eq!(
                select_action(&net, &state, 1.0, &cfg, &env, &labels, &mut rng),
                env.terminate_action()
            );
        }
    }

    #[test]
    fn select_action_uniform_exploration_frequencies() {
        let book = Codebook::build(2, 7, 1).unwrap();
        let env = Environment::new(EnvConfig::for_codebook(&book), &book);
        let cfg = TrainConfig {
            expert_prob: 0.0,
            ..TrainConfig::default()
        };
        let net = QNetwork::init(
            &QNetwork::default_specs(state_dim(1, 7), 8, &[4], 0.0),
            3,
        )
        .unwrap();
        let labels = LabelSet::single(0);
        let state = env.reset(vec![0.0], 0, 0);
        let mut rng = rng::stream(&[domain::ACTION, 3]);
        let draws = 100_000usize;
        let mut counts = vec![0usize; 8];
        for _ in 0..draws {
            counts[select_action(&net, &state, 1.0, &cfg, &env, &labels, &mut rng)] += 1;
        }
        for (a, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 0.125).abs() < 0.01,
                "action {a} frequency {freq} strays from uniform"
            );
        }
    }

    #[test]
    fn frozen_net_rollouts_are_identical() {
        let book = Codebook::build(4, 8, 1).unwrap();
        let env = Environment::new(EnvConfig::for_codebook(&book), &book);
        let cfg = TrainConfig::default();
        let net = QNetwork::init(
            &QNetwork::default_specs(state_dim(2, 8), 9, &[8], 0.0),
            3,
        )
        .unwrap();
        let labels = LabelSet::single(1);
        let rollout = || {
            let mut rng = rng::stream(&[domain::ACTION, 4]);
            let mut s = env.reset(vec![0.1, 0.9], 7, 11);
            let mut trace = Vec::new();
            while !s.is_done() {
                let a = select_action(&net, &s, 0.0, &cfg, &env, &labels, &mut rng);
                let out = env.step(&s, a, &labels).unwrap();
                trace.push((a, out.reward.to_bits()));
                s = out.next_state;
            }
            trace
        };
        assert_eq!(rollout(), rollout());
    }

    #[test]
    fn discounted_return_prefers_shorter_expert_path() {
        // Two flip paths from the same start to the same terminal code;
        // the detour revisits a bit. With gamma < 1 the shorter path's
        // discounted return is at least the longer one's.
        let book = Codebook::from_codewords(vec![
            crate::hamming::BinaryCode::from_text("000000").unwrap(),
            crate::hamming::BinaryCode::from_text("111111").unwrap(),
        ])
        .unwrap();
        let env = Environment::new(
            EnvConfig {
                eta: 0,
                sigma: 5.0,
                max_steps: 10,
            },
            &book,
        );
        let labels = LabelSet::single(0);
        let gamma = 0.9;
        let discounted = |actions: &[usize]| -> f64 {
            let mut s = env.reset_at(vec![0.0], crate::hamming::BinaryCode::from_text("110000").unwrap());
            let mut ret = 0.0;
            let mut g = 1.0;
            for &a in actions {
                let out = env.step(&s, a, &labels).unwrap();
                ret += g * out.reward;
                g *= gamma;
                s = out.next_state;
            }
            ret
        };
        let term = env.terminate_action();
        let direct = discounted(&[0, 1, term]);
        let detour = discounted(&[0, 2, 2, 1, term]);
        assert!(direct >= detour, "direct {direct} < detour {detour}");
    }

    #[test]
    fn degenerate_one_item_run_terminates_immediately() {
        // A single item whose e_0 equals its codeword: after training,
        // the greedy policy terminates at step 1 with reward +sigma.
        let book = Codebook::build(2, 4, 3).unwrap();
        let feature = vec![1.0, 0.0];
        // Find a run seed whose item-0 initial code is the class codeword.
        let probe_env = Environment::new(EnvConfig::for_codebook(&book), &book);
        let seed = (0..500u64)
            .find(|&s| probe_env.reset(feature.clone(), 0, s).code() == book.codeword(0))
            .expect("some seed hits the codeword");
        let dataset = Dataset::from_parts(
            feature.clone(),
            2,
            vec![LabelSet::single(0)],
            "one-item".into(),
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 60,
            eps_decay_epochs: 30,
            batch_size: 4,
            buffer_capacity: 256,
            seed,
            hidden_dims: vec![8],
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let result = run_training(&dataset, &book, &cfg).unwrap();
        let env = Environment::new(cfg.env_config(&book), &book);
        let state = env.reset(feature, 0, seed);
        let q = result.network.forward_eval(&state.encode_vector()).unwrap();
        let action = argmax(&q);
        assert_eq!(action, env.terminate_action());
        let out = env.step(&state, action, &LabelSet::single(0)).unwrap();
        assert_eq!(out.reward, 5.0);
        assert!(out.done);
    }

    #[test]
    fn training_is_deterministic_given_seeds() {
        let book = Codebook::build(2, 4, 3).unwrap();
        let dataset = crate::data::synth_gaussian(2, 6, 3, 0.05, 17);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            buffer_capacity: 128,
            hidden_dims: vec![8],
            seed: 5,
            ..TrainConfig::default()
        };
        let a = run_training(&dataset, &book, &cfg).unwrap();
        let b = run_training(&dataset, &book, &cfg).unwrap();
        for l in 0..a.network.num_layers() {
            assert_eq!(a.network.layer_weights(l), b.network.layer_weights(l));
        }
        // Logs match apart from the timing column.
        let strip = |log: &str| -> Vec<String> {
            log.lines()
                .map(|l| match l.rsplit_once('\t') {
                    Some((rest, _)) if !l.starts_with('#') => rest.to_string(),
                    _ => l.to_string(),
                })
                .collect()
        };
        assert_eq!(strip(&a.log), strip(&b.log));
        assert_eq!(a.epochs.len(), 2);
    }
}
