"""Training loop: initialization, RMSprop with gradient noise and clipping, dropout, UAS."""
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import compute_gradients
from .decoder import decode
from .encoder import (DIRECTIONS, GATES, LayerParams, LstmParams, ModelParams,
                      apply_dropout, score_sentence)
from .errors import ConfigError, NumericError
from .losses import cross_entropy_loss, mse_loss

__all__ = ["TrainConfig", "OptimizerState", "Example", "EpochMetrics", "TrainResult",
           "glorot_init", "init_model", "clip_gradients", "add_gradient_noise",
           "rmsprop_step", "apply_dropout", "train", "evaluate_uas", "attachment_score",
           "default_epochs"]

log = logging.getLogger(__name__)

LOSS_MODES = ("xent", "mse")


def default_epochs(loss_mode):
    """Fixed cross-lingual epoch counts: 6 for cross-entropy, 5 for MSE."""
    return {"xent": 6, "mse": 5}[loss_mode]


@dataclass
class TrainConfig:
    loss_mode: str = "xent"
    learning_rate: float = 0.1
    decay: float = 0.9
    epsilon: float = 1e-8
    batch_size: int = 64
    noise_exponent: float = 0.55
    noise_scale: float = 1.0  # variance at t = 0; 0 disables gradient noise
    clip: float = 15.0
    dropout_hidden: float = 0.5
    dropout_input: float = 0.2
    hidden: int = 100
    layers: int = 4
    epochs: int = None  # None: early stopping on the dev set
    patience: int = 5
    max_epochs: int = 100
    seed: int = 0
    subsample: int = None
    stop_on_perfect_train: bool = False

    def validate(self):
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        if self.learning_rate <= 0 or not 0 <= self.decay < 1 or self.epsilon <= 0:
            raise ConfigError("RMSprop needs learning_rate > 0, 0 <= decay < 1, epsilon > 0")
        for name in ("dropout_hidden", "dropout_input"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must be in [0, 1)")
        if self.batch_size < 1 or self.hidden < 1 or self.layers < 1:
            raise ConfigError("batch_size, hidden and layers must be positive")
        if self.clip <= 0 or self.noise_scale < 0:
            raise ConfigError("clip must be positive and noise_scale non-negative")
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.patience < 1 or self.max_epochs < 1:
            raise ConfigError("patience and max_epochs must be positive")


@dataclass
class OptimizerState:
    mean_square: dict
    t: int = 0

    @classmethod
    def fresh(cls, params):
        return cls({k: np.zeros_like(v) for k, v in params.items()})


@dataclass
class Example:
    """One training sentence: features plus either gold heads or a target score matrix."""

    features: np.ndarray
    heads: list = None
    target: np.ndarray = None


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    dev_uas: float = None
    train_uas: float = None
    wall_time: float = 0.0

    def as_record(self):
        rec = {"epoch": self.epoch, "train_loss": self.train_loss, "wall_time": self.wall_time}
        if self.dev_uas is not None:
            rec["dev_uas"] = self.dev_uas
        if self.train_uas is not None:
            rec["train_uas"] = self.train_uas
        return rec


@dataclass
class TrainResult:
    params: ModelParams
    metrics: list = field(default_factory=list)
    best_epoch: int = None


def _rng(seed):
    return np.random.default_rng(seed)


def glorot_init(shape, fan_in, fan_out, seed):
    """Uniform on ``+-sqrt(6 / (fan_in + fan_out))``."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fans must be at least 1")
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return _rng(seed).uniform(-bound, bound, size=shape)


def init_model(features, hidden, layers, seed):
    """Glorot-initialized weights; zero biases except the forget-gate bias, which is 1."""
    rng = _rng(seed)
    stacked = []
    for k in range(layers):
        width = 2 * features + 1 if k == 0 else 4 * hidden
        dirs = []
        for _ in DIRECTIONS:
            ws = [glorot_init((hidden, width + hidden), width + hidden, hidden, rng)
                  for _ in GATES]
            bs = [np.zeros(hidden), np.ones(hidden), np.zeros(hidden), np.zeros(hidden)]
            dirs.append(LstmParams(*ws, *bs))
        stacked.append(LayerParams(*dirs))
    out_w = glorot_init((4 * hidden,), 4 * hidden, 1, rng)
    return ModelParams(stacked, out_w, np.zeros(1))


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_gradients(grads, threshold=15.0):
    """Rescale all gradients together when their global L2 norm exceeds ``threshold``."""
    norm = global_norm(grads)
    if norm <= threshold:
        return grads
    scale = threshold / norm
    return {k: g * scale for k, g in grads.items()}


def add_gradient_noise(grads, t, seed, scale=1.0, exponent=0.55):
    """Add Gaussian noise with variance ``scale / (1 + t) ** exponent`` to every component."""
    if t < 0:
        raise ValueError("update counter must be non-negative")
    if scale == 0:
        return grads
    rng = _rng(seed)
    std = math.sqrt(scale / (1.0 + t) ** exponent)
    return {k: g + rng.normal(0.0, std, size=g.shape) for k, g in grads.items()}


def rmsprop_step(params, grads, state, learning_rate=0.1, decay=0.9, epsilon=1e-8):
    """One RMSprop update; mutates ``state`` and returns new parameter arrays."""
    out = {}
    for k, theta in params.items():
        g = grads[k]
        ms = decay * state.mean_square[k] + (1.0 - decay) * g * g
        with np.errstate(over="ignore", invalid="ignore"):
            new = theta - learning_rate * g / np.sqrt(ms + epsilon)
        if not np.all(np.isfinite(new)):
            raise NumericError(f"non-finite RMSprop update for {k}", op="rmsprop")
        state.mean_square[k] = ms
        out[k] = new
    state.t += 1
    return out


def attachment_score(gold, predicted):
    """Fraction of tokens whose predicted head equals the gold head (all tokens counted)."""
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold sentences but {len(predicted)} predictions")
    total = correct = 0
    for g, p in zip(gold, predicted):
        if len(g) != len(p):
            raise ValueError("sentence length mismatch between gold and prediction")
        total += len(g)
        correct += sum(int(a) == int(b) for a, b in zip(g, p))
    if total == 0:
        raise ValueError("cannot score an empty treebank")
    return correct / total


def evaluate_uas(params, examples):
    """Decode every example and compare against its gold heads."""
    gold = [ex.heads for ex in examples]
    predicted = [decode(score_sentence(ex.features, params)) for ex in examples]
    return attachment_score(gold, predicted)


def _sentence_loss(ex, cfg, rng):
    def build(p):
        scores = score_sentence(ex.features, ModelParams.from_flat(p), train_mode=True, rng=rng,
                                input_dropout=cfg.dropout_input,
                                hidden_dropout=cfg.dropout_hidden)
        if cfg.loss_mode == "xent":
            return cross_entropy_loss(scores, ex.heads)
        return mse_loss(scores, ex.target)
    return build


def _check_data(data, cfg):
    if not data:
        raise ConfigError("training data is empty")
    widths = {ex.features.shape[1] for ex in data}
    if len(widths) != 1:
        raise ConfigError(f"inconsistent feature widths {sorted(widths)}")
    for k, ex in enumerate(data):
        if cfg.loss_mode == "xent" and ex.heads is None:
            raise ConfigError(f"example {k} has no heads; cross-entropy needs trees")
        if cfg.loss_mode == "mse" and ex.target is None:
            raise ConfigError(f"example {k} has no target score matrix")
    return widths.pop()


def train(data, dev_data=None, cfg=None, init=None, on_epoch=None):
    """Train on ``data`` (a list of :class:`Example`).

    With ``cfg.epochs`` unset, training stops when dev UAS has not improved for
    ``cfg.patience`` epochs and the best-dev parameters are returned; this
    requires a non-empty ``dev_data``. Otherwise exactly ``cfg.epochs`` epochs
    run and the final parameters are returned.

    Each update: minibatch-mean gradient, clip, add noise, RMSprop.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    features = _check_data(data, cfg)
    early_stop = cfg.epochs is None
    if early_stop and not dev_data:
        raise ConfigError("early stopping needs a non-empty development set")

    rng = _rng(cfg.seed)
    if cfg.subsample is not None:
        order = rng.permutation(len(data))[:cfg.subsample]
        data = [data[i] for i in order]
    params = init if init is not None else init_model(features, cfg.hidden, cfg.layers, rng)
    flat = {k: np.array(v, dtype=np.float64) for k, v in params.flatten().items()}
    state = OptimizerState.fresh(flat)

    result = TrainResult(ModelParams.from_flat(flat))
    best_uas, stale = -1.0, 0
    n_epochs = cfg.max_epochs if early_stop else cfg.epochs
    for epoch in range(1, n_epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(data))
        total_loss = 0.0
        for b0 in range(0, len(order), cfg.batch_size):
            batch = order[b0:b0 + cfg.batch_size]
            summed = {k: np.zeros_like(v) for k, v in flat.items()}
            for idx in batch:
                try:
                    ctx = compute_gradients(_sentence_loss(data[idx], cfg, rng), flat)
                except NumericError as exc:
                    raise NumericError(f"training diverged at epoch {epoch}, update "
                                       f"{state.t}, example {idx}: {exc}", op=exc.op) from exc
                total_loss += ctx.loss
                for k, g in ctx.gradients.items():
                    summed[k] += g
            grads = {k: g / len(batch) for k, g in summed.items()}
            grads = clip_gradients(grads, cfg.clip)
            grads = add_gradient_noise(grads, state.t, rng, cfg.noise_scale, cfg.noise_exponent)
            flat = rmsprop_step(flat, grads, state, cfg.learning_rate, cfg.decay, cfg.epsilon)

        current = ModelParams.from_flat(flat)
        metrics = EpochMetrics(epoch, total_loss / len(data))
        if dev_data:
            metrics.dev_uas = evaluate_uas(current, dev_data)
        if cfg.stop_on_perfect_train or on_epoch is not None:
            if all(ex.heads is not None for ex in data):
                metrics.train_uas = evaluate_uas(current, data)
        metrics.wall_time = time.perf_counter() - started
        result.metrics.append(metrics)
        log.info("epoch %d loss %.6f dev_uas %s", epoch, metrics.train_loss, metrics.dev_uas)
        if on_epoch is not None:
            on_epoch(metrics)

        if early_stop:
            if metrics.dev_uas > best_uas:
                best_uas, stale = metrics.dev_uas, 0
                result.params, result.best_epoch = current, epoch
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
        else:
            result.params, result.best_epoch = current, epoch
        if cfg.stop_on_perfect_train and metrics.train_uas == 1.0:
            result.params, result.best_epoch = current, epoch
            break
    return result
