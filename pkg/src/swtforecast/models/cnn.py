"""Small 1-D convolutional forecaster in plain numpy.

Two topologies are supported.  The channels topology ("mc") stacks all
coefficient bands as input channels of the first convolution; the branches
topology ("mi") gives every band its own first convolution, concatenates
the learned feature maps along the channel axis, and continues with a
shared convolution.  Both end in flatten + linear dense output.

Everything runs in fp64 with analytic gradients, full-batch Adam, and
early stopping on validation loss with best-weight restore, so training is
a pure function of (data, config, seed) and the gradients can be checked
against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DivergenceError, ShapeError


@dataclass(frozen=True)
class CnnConfig:
    filters: int = 32
    kernel: int = 5
    out_steps: int = 27
    topology: str = "mc"
    max_epochs: int = 200
    patience: int = 20
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.topology not in ("mc", "mi"):
            raise ValueError(f"topology must be 'mc' or 'mi', got {self.topology!r}")
        if self.kernel % 2 != 1:
            raise ValueError("kernel size must be odd for same padding")


@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0


def _glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Same-padded 1-D convolution; x (S, L, Cin), w (K, Cin, Cout)."""
    k = w.shape[0]
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    windows = sliding_window_view(xp, k, axis=1)  # (S, L, Cin, K)
    out = np.einsum("slck,kcf->slf", windows, w) + b
    return out, (windows, xp.shape, pad)


def _conv_backward(d_out: np.ndarray, w: np.ndarray, cache):
    windows, xp_shape, pad = cache
    k = w.shape[0]
    length = d_out.shape[1]
    d_w = np.einsum("slck,slf->kcf", windows, d_out)
    d_b = d_out.sum(axis=(0, 1))
    contrib = np.einsum("slf,kcf->slkc", d_out, w)
    d_xp = np.zeros(xp_shape)
    for j in range(k):
        d_xp[:, j : j + length, :] += contrib[:, :, j, :]
    d_x = d_xp[:, pad : pad + length, :]
    return d_x, d_w, d_b


class ConvNet:
    """Convolutional MIMO forecaster with a uniform predict interface."""

    kind = "cnn"
    fitted_model_count = 1

    def __init__(self, n_steps: int, n_coeff: int, config: CnnConfig, seed: int = 0):
        self.n_steps = n_steps
        self.n_coeff = n_coeff
        self.config = config
        self.seed = seed
        self._params: list[np.ndarray] = []
        self._names: list[str] = []
        self._init_params(np.random.default_rng(seed))

    @property
    def concat_channels(self) -> int:
        """Channel count entering the shared convolution (filters * n_coeff for mi)."""
        if self.config.topology == "mi":
            return self.config.filters * self.n_coeff
        return self.config.filters

    @property
    def parameter_count(self) -> int:
        return int(sum(p.size for p in self._params))

    def _init_params(self, rng: np.random.Generator) -> None:
        cfg = self.config
        k, f = cfg.kernel, cfg.filters

        def conv_pair(c_in: int, c_out: int, name: str):
            self._names += [f"{name}.w", f"{name}.b"]
            self._params += [
                _glorot_uniform(rng, (k, c_in, c_out), k * c_in, k * c_out),
                np.zeros(c_out),
            ]

        if cfg.topology == "mc":
            conv_pair(self.n_coeff, f, "conv1")
        else:
            for i in range(self.n_coeff):
                conv_pair(1, f, f"branch{i}")
        conv_pair(self.concat_channels, f, "conv2")
        dense_in = self.n_steps * f
        self._names += ["dense.w", "dense.b"]
        self._params += [
            _glorot_uniform(rng, (dense_in, cfg.out_steps), dense_in, cfg.out_steps),
            np.zeros(cfg.out_steps),
        ]

    def _check_input(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[1] != self.n_steps or arr.shape[2] != self.n_coeff:
            raise ShapeError(
                f"expected input shape (S, {self.n_steps}, {self.n_coeff}), got {arr.shape}"
            )
        return arr

    def _forward(self, x: np.ndarray, params: list[np.ndarray]):
        cfg = self.config
        caches = []
        if cfg.topology == "mc":
            z1, cache = _conv_forward(x, params[0], params[1])
            h1 = np.maximum(z1, 0.0)
            caches.append(("conv", 0, cache, z1))
        else:
            branch_out = []
            for i in range(self.n_coeff):
                z, cache = _conv_forward(x[:, :, i : i + 1], params[2 * i], params[2 * i + 1])
                branch_out.append(np.maximum(z, 0.0))
                caches.append(("conv", 2 * i, cache, z))
            h1 = np.concatenate(branch_out, axis=2)
        base = 2 if cfg.topology == "mc" else 2 * self.n_coeff
        z2, cache2 = _conv_forward(h1, params[base], params[base + 1])
        h2 = np.maximum(z2, 0.0)
        caches.append(("conv", base, cache2, z2))
        flat = h2.reshape(h2.shape[0], -1)
        out = flat @ params[base + 2] + params[base + 3]
        caches.append(("dense", base + 2, flat, h2.shape))
        return out, caches

    def predict(self, features) -> np.ndarray:
        x = self._check_input(features)
        out, _ = self._forward(x, self._params)
        return out

    def loss(self, features, targets, params: list[np.ndarray] | None = None) -> float:
        x = self._check_input(features)
        y = np.asarray(targets, dtype=float)
        pred, _ = self._forward(x, params if params is not None else self._params)
        return float(np.mean((pred - y) ** 2))

    def loss_and_grads(self, features, targets):
        """MSE loss and its analytic gradient for every parameter array."""
        x = self._check_input(features)
        y = np.asarray(targets, dtype=float)
        params = self._params
        pred, caches = self._forward(x, params)
        diff = pred - y
        loss = float(np.mean(diff**2))
        grads = [np.zeros_like(p) for p in params]

        d_pred = 2.0 * diff / diff.size
        kind, idx, flat, h2_shape = caches[-1]
        grads[idx] = flat.T @ d_pred
        grads[idx + 1] = d_pred.sum(axis=0)
        d_flat = d_pred @ params[idx].T
        d_h = d_flat.reshape(h2_shape)

        kind, idx, cache, z = caches[-2]
        d_z = d_h * (z > 0)
        d_in, grads[idx], grads[idx + 1] = _conv_backward(d_z, params[idx], cache)

        if self.config.topology == "mc":
            kind, idx, cache, z = caches[0]
            d_z = d_in * (z > 0)
            _, grads[idx], grads[idx + 1] = _conv_backward(d_z, params[idx], cache)
        else:
            f = self.config.filters
            for i in range(self.n_coeff):
                kind, idx, cache, z = caches[i]
                d_branch = d_in[:, :, i * f : (i + 1) * f]
                d_z = d_branch * (z > 0)
                _, grads[idx], grads[idx + 1] = _conv_backward(d_z, params[idx], cache)
        return loss, grads

    def get_flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self._params])

    def set_flat_params(self, flat: np.ndarray) -> None:
        offset = 0
        for i, p in enumerate(self._params):
            self._params[i] = flat[offset : offset + p.size].reshape(p.shape).copy()
            offset += p.size

    def fit(self, train_x, train_y, val_x, val_y) -> TrainingHistory:
        """Full-batch Adam with early stopping on validation loss.

        Stops after `patience` epochs without improvement (or at max_epochs)
        and restores the best weights seen.  Raises DivergenceError if the
        loss goes non-finite.
        """
        cfg = self.config
        tx = self._check_input(train_x)
        ty = np.asarray(train_y, dtype=float)
        vx = self._check_input(val_x)
        vy = np.asarray(val_y, dtype=float)
        if vx.shape[0] == 0:
            raise ShapeError("validation set must be nonempty")

        m = [np.zeros_like(p) for p in self._params]
        v = [np.zeros_like(p) for p in self._params]
        history = TrainingHistory()
        history.train_loss.append(self.loss(tx, ty))
        history.val_loss.append(self.loss(vx, vy))
        best_val = history.val_loss[0]
        best_params = [p.copy() for p in self._params]
        best_epoch = 0
        since_best = 0

        for epoch in range(1, cfg.max_epochs + 1):
            loss, grads = self.loss_and_grads(tx, ty)
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            for i, g in enumerate(grads):
                m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g
                v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g
                m_hat = m[i] / (1 - cfg.beta1**epoch)
                v_hat = v[i] / (1 - cfg.beta2**epoch)
                self._params[i] = self._params[i] - cfg.learning_rate * m_hat / (
                    np.sqrt(v_hat) + cfg.eps
                )
            train_loss = self.loss(tx, ty)
            val_loss = self.loss(vx, vy)
            if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
                raise DivergenceError(epoch)
            history.train_loss.append(train_loss)
            history.val_loss.append(val_loss)
            if val_loss < best_val:
                best_val = val_loss
                best_params = [p.copy() for p in self._params]
                best_epoch = epoch
                since_best = 0
            else:
                since_best += 1
                if since_best >= cfg.patience:
                    break
        self._params = best_params
        history.best_epoch = best_epoch
        history.stopped_epoch = len(history.train_loss) - 1
        return history

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "n_coeff": self.n_coeff,
            "seed": self.seed,
            "config": {k: getattr(self.config, k) for k in CnnConfig.__dataclass_fields__},
            "params": {n: p.tolist() for n, p in zip(self._names, self._params)},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ConvNet":
        model = cls(
            int(payload["n_steps"]),
            int(payload["n_coeff"]),
            CnnConfig(**payload["config"]),
            seed=int(payload["seed"]),
        )
        for i, name in enumerate(model._names):
            model._params[i] = np.asarray(payload["params"][name], dtype=float)
        return model


def fit_cnn(
    config: CnnConfig,
    train: tuple[np.ndarray, np.ndarray],
    val: tuple[np.ndarray, np.ndarray],
    seed: int = 0,
) -> tuple[ConvNet, TrainingHistory]:
    """Build and train a network; shapes are taken from the training tensor."""
    train_x = np.asarray(train[0], dtype=float)
    if train_x.ndim == 2:
        train_x = train_x[:, :, None]
    model = ConvNet(train_x.shape[1], train_x.shape[2], config, seed=seed)
    history = model.fit(train_x, train[1], val[0], val[1])
    return model, history


def gradient_check(
    model: ConvNet,
    features,
    targets,
    step: float = 1e-6,
    max_checks: int | None = None,
    seed: int = 0,
) -> float:
    """Max scaled difference between analytic and central-difference gradients.

    With `max_checks` set, a seeded random subset of parameter indices is
    checked (the full parameter count makes an exhaustive check slow for the
    production layer widths).  The comparison scale guards against indices
    whose true gradient is zero.
    """
    _, grads = model.loss_and_grads(features, targets)
    analytic = np.concatenate([g.ravel() for g in grads])
    flat = model.get_flat_params()
    indices = np.arange(flat.size)
    if max_checks is not None and max_checks < flat.size:
        rng = np.random.default_rng(seed)
        indices = rng.choice(flat.size, size=max_checks, replace=False)
    scale = max(np.abs(analytic).max(), 1e-12)
    worst = 0.0
    for i in indices:
        original = flat[i]
        flat[i] = original + step
        model.set_flat_params(flat)
        up = model.loss(features, targets)
        flat[i] = original - step
        model.set_flat_params(flat)
        down = model.loss(features, targets)
        flat[i] = original
        numeric = (up - down) / (2.0 * step)
        denom = max(abs(analytic[i]), abs(numeric), 1e-3 * scale)
        worst = max(worst, abs(analytic[i] - numeric) / denom)
    model.set_flat_params(flat)
    return worst
