"""Training loops, evaluation, and the finite-difference gradient harness.

Training is single-threaded, full-batch, and deterministic for a fixed
(seed, config, dataset). The three encoder regimes mirror the
transfer-learning workflow: scratch (no transfer), frozen (transferred
encoder fixed), finetune (transferred encoder trainable).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .losses import cgan_grads, classification_grads, reconstruction_grads
from .model import ENCODER_KEYS, ModelDims, Params, ToyModel, classify, init_model

__all__ = [
    "TrainConfig",
    "MetricRecord",
    "train",
    "pretrain",
    "evaluate",
    "grad_check",
]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0001
    optimizer: str = "adam"  # "adam" | "sgd"
    epochs: int = 30
    batch_size: int = 0  # 0 = full batch
    seed: int = 42
    encoder_mode: str = "scratch"  # "scratch" | "frozen" | "finetune"
    loss: str = "reconstruction_l2"  # pretraining objective: "reconstruction_l2" | "cgan"
    use_lstm: bool = True
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    saturating_gan: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.encoder_mode not in ("scratch", "frozen", "finetune"):
            raise ValueError(f"unknown encoder_mode {self.encoder_mode!r}")
        if self.loss not in ("reconstruction_l2", "cgan"):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass(frozen=True)
class MetricRecord:
    epoch: int
    split: str
    loss: float
    accuracy: float


class _Optimizer:
    """Adam (default) or plain SGD over a fixed set of parameter names."""

    def __init__(self, cfg: TrainConfig, names: Sequence[str]):
        self.cfg = cfg
        self.names = list(names)
        self.step_count = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Params, grads: Params) -> None:
        cfg = self.cfg
        self.step_count += 1
        for name in self.names:
            if name not in grads:
                continue
            g = grads[name]
            if cfg.optimizer == "sgd":
                params[name] = params[name] - cfg.learning_rate * g
                continue
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = cfg.adam_beta1 * self.m[name] + (1 - cfg.adam_beta1) * g
            self.v[name] = cfg.adam_beta2 * self.v[name] + (1 - cfg.adam_beta2) * g * g
            m_hat = self.m[name] / (1 - cfg.adam_beta1**self.step_count)
            v_hat = self.v[name] / (1 - cfg.adam_beta2**self.step_count)
            params[name] = params[name] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> Iterable[np.ndarray]:
    if batch_size <= 0 or batch_size >= n:
        yield np.arange(n)
        return
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def pretrain(
    pairs: Tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
    dims: ModelDims = ModelDims(),
) -> Tuple[ToyModel, List[MetricRecord]]:
    """Train encoder+decoder on (representation, target frame) pairs.

    `pairs` is (X [N, input_dim] in [0,1], Y [N, image_dim] in (-1,1)).
    cfg.loss picks plain L2 reconstruction or the adversarial objective.
    """
    x, y = pairs
    model = init_model(cfg.seed, dims)
    gen_names = [k for k in model.params if k.startswith(("enc.", "dec."))]
    disc_names = [k for k in model.params if k.startswith("disc.")]
    gen_opt = _Optimizer(cfg, gen_names)
    disc_opt = _Optimizer(cfg, disc_names)
    rng = np.random.Generator(np.random.PCG64(cfg.seed + 1))
    history: List[MetricRecord] = []
    for epoch in range(cfg.epochs):
        losses = []
        for idx in _batches(x.shape[0], cfg.batch_size, rng):
            if cfg.loss == "reconstruction_l2":
                loss, grads = reconstruction_grads(model, x[idx], y[idx])
                gen_opt.step(model.params, grads)
            else:
                gen_loss, disc_loss, gen_grads, disc_grads = cgan_grads(
                    model, x[idx], y[idx], saturating=cfg.saturating_gan
                )
                disc_opt.step(model.params, disc_grads)
                gen_opt.step(model.params, gen_grads)
                loss = gen_loss
            losses.append(loss)
        history.append(MetricRecord(epoch, "train", float(np.mean(losses)), float("nan")))
    return model, history


def train(
    dataset: Tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
    pretrained: Optional[ToyModel] = None,
    dims: ModelDims = ModelDims(),
    val_dataset: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Tuple[ToyModel, List[MetricRecord]]:
    """Cross-entropy classifier training under one of the three regimes.

    `dataset` is (X, labels) with X shaped [N, seq, input_dim] when
    cfg.use_lstm else [N, input_dim]. frozen/finetune take their encoder
    weights from `pretrained`; frozen additionally excludes them from the
    update step.
    """
    x, labels = dataset
    if cfg.encoder_mode in ("frozen", "finetune") and pretrained is None:
        raise ValueError(f"encoder_mode {cfg.encoder_mode!r} requires a pretrained encoder")
    model = init_model(cfg.seed, dims)
    if pretrained is not None and cfg.encoder_mode in ("frozen", "finetune"):
        for k in ENCODER_KEYS:
            model.params[k] = pretrained.params[k].copy()
    trainable = [k for k in model.params if not k.startswith(("dec.", "disc."))]
    if cfg.encoder_mode == "frozen":
        trainable = [k for k in trainable if k not in ENCODER_KEYS]
    if not cfg.use_lstm:
        trainable = [k for k in trainable if not k.startswith("lstm.")]
    opt = _Optimizer(cfg, trainable)
    rng = np.random.Generator(np.random.PCG64(cfg.seed + 2))
    train_encoder = cfg.encoder_mode != "frozen"
    history: List[MetricRecord] = []
    for epoch in range(cfg.epochs):
        losses = []
        for idx in _batches(x.shape[0], cfg.batch_size, rng):
            loss, grads = classification_grads(
                model, x[idx], labels[idx], use_lstm=cfg.use_lstm, train_encoder=train_encoder
            )
            opt.step(model.params, grads)
            losses.append(loss)
        acc, _ = evaluate(model, dataset, use_lstm=cfg.use_lstm, num_classes=dims.classes)
        history.append(MetricRecord(epoch, "train", float(np.mean(losses)), acc))
        if val_dataset is not None:
            val_acc, _ = evaluate(model, val_dataset, use_lstm=cfg.use_lstm, num_classes=dims.classes)
            val_loss, _ = classification_grads(
                model, val_dataset[0], val_dataset[1], use_lstm=cfg.use_lstm, train_encoder=False
            )
            history.append(MetricRecord(epoch, "val", val_loss, val_acc))
    return model, history


def evaluate(
    model: ToyModel,
    dataset: Tuple[np.ndarray, np.ndarray],
    use_lstm: bool = True,
    num_classes: Optional[int] = None,
) -> Tuple[float, np.ndarray]:
    """Top-1 accuracy and row-normalized confusion matrix (rows = truth)."""
    x, labels = dataset
    if len(labels) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    k = num_classes or model.dims.classes
    probs = classify(model, x, use_lstm=use_lstm)
    pred = probs.argmax(axis=1)
    accuracy = float(np.mean(pred == labels))
    confusion = np.zeros((k, k))
    np.add.at(confusion, (labels, pred), 1.0)
    row_sums = confusion.sum(axis=1, keepdims=True)
    normalized = np.divide(confusion, row_sums, out=np.zeros_like(confusion), where=row_sums > 0)
    return accuracy, normalized


def _flatten_index(params: Params, names: Sequence[str]) -> List[Tuple[str, int]]:
    out = []
    for name in names:
        out.extend((name, i) for i in range(params[name].size))
    return out


def grad_check(
    model: ToyModel,
    sample: dict,
    eps: float = 1e-5,
    n_params: int = 100,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    `sample` needs keys 'x' (input batch), 'y' (reconstruction targets),
    'images'/'labels' (classification batch). Checks all three losses over
    a random n_params-parameter subset.
    """
    rng = np.random.Generator(np.random.PCG64(seed))

    def rel_err(a: float, n: float) -> float:
        # the 1e-6 floor keeps central-difference roundoff noise (~1e-11
        # for unit-scale losses) from dominating near-zero gradients
        denom = max(abs(a), abs(n), 1e-6)
        return abs(a - n) / denom

    worst = 0.0

    def check(loss_fn, grads: Params, names: Sequence[str]) -> None:
        nonlocal worst
        flat = _flatten_index(model.params, [n for n in names if n in grads])
        if not flat:
            return
        mid = loss_fn()
        pick = rng.choice(len(flat), size=min(n_params, len(flat)), replace=False)
        for j in pick:
            name, i = flat[int(j)]
            arr = model.params[name]
            orig = arr.flat[i]
            arr.flat[i] = orig + eps
            plus = loss_fn()
            arr.flat[i] = orig - eps
            minus = loss_fn()
            arr.flat[i] = orig
            a = float(grads[name].flat[i])
            err = rel_err(a, (plus - minus) / (2 * eps))
            if err > 1e-5:
                # a step that straddles an activation kink invalidates the
                # central difference; the analytic value is a one-sided
                # slope there, so accept whichever side it matches
                err = min(err, rel_err(a, (plus - mid) / eps), rel_err(a, (mid - minus) / eps))
            worst = max(worst, err)

    x = np.atleast_2d(sample["x"])
    y = np.atleast_2d(sample["y"])
    images = sample["images"]
    labels = np.asarray(sample["labels"])

    loss, grads = reconstruction_grads(model, x, y)
    check(lambda: reconstruction_grads(model, x, y)[0], grads, sorted(grads))

    _, _, gen_grads, disc_grads = cgan_grads(model, x, y)
    check(lambda: cgan_grads(model, x, y)[0], gen_grads, sorted(gen_grads))
    check(lambda: cgan_grads(model, x, y)[1], disc_grads, sorted(disc_grads))

    _, cls_grads = classification_grads(model, images, labels, use_lstm=True)
    check(
        lambda: classification_grads(model, images, labels, use_lstm=True)[0],
        cls_grads,
        sorted(cls_grads),
    )
    return worst
