"""Shallow neural networks between joint space and sensor space.

A model is one hidden layer with a squashing activation and a linear output,
``y = W2 @ act(W1 @ x + b1) + b2``, operating on globally scaled data. Scalers
are fitted on the training split only. Training is mini-batch Adam on mean
squared error in scaled space with early stopping on the validation split.
"""

from __future__ import annotations

import enum
import itertools
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tendon import TENDON_NAMES

JOINT_NAMES = ("theta_deg", "phi_deg")


class DegenerateScaleError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, subset=None):
        self.epoch = epoch
        self.subset = subset
        where = f" for sensors {','.join(subset)}" if subset else ""
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}{where}")


class Direction(enum.Enum):
    FORWARD = "fwd"
    INVERSE = "inv"

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, Direction):
            return value
        v = str(value).lower()
        aliases = {"forward": "fwd", "inverse": "inv"}
        try:
            return cls(aliases.get(v, v))
        except ValueError:
            raise ValueError(f"direction must be 'fwd' or 'inv', got {value!r}") from None


class Activation(enum.Enum):
    TANH = "tanh"
    SIGMOID = "sigmoid"
    RELU = "relu"
    LINEAR = "linear"

    def __call__(self, z):
        if self is Activation.TANH:
            return np.tanh(z)
        if self is Activation.SIGMOID:
            return 0.5 * (1.0 + np.tanh(0.5 * z))
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        return z

    def grad_from_output(self, a, z):
        if self is Activation.TANH:
            return 1.0 - a * a
        if self is Activation.SIGMOID:
            return a * (1.0 - a)
        if self is Activation.RELU:
            return (z > 0).astype(float)
        return np.ones_like(a)


# --- scaling ------------------------------------------------------------------


@dataclass(frozen=True)
class Scaler:
    """Per-column affine map of ``[lo, hi]`` onto ``[-1, 1]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if np.any(hi <= lo):
            bad = np.flatnonzero(hi <= lo).tolist()
            raise DegenerateScaleError(f"columns {bad} are constant; cannot scale")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def center(self):
        return 0.5 * (self.hi + self.lo)

    @property
    def half_range(self):
        return 0.5 * (self.hi - self.lo)

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.half_range

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.half_range + self.center


def scale_fit(data) -> Scaler:
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return Scaler(x.min(axis=0), x.max(axis=0))


def scale_apply(scaler: Scaler, x):
    return scaler.apply(x)


def scale_invert(scaler: Scaler, z):
    return scaler.invert(z)


# --- model ----------------------------------------------------------------------


@dataclass
class MlpModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    hidden_activation: Activation = Activation.TANH
    input_scaler: Scaler | None = None
    output_scaler: Scaler | None = None
    direction: Direction = Direction.INVERSE
    sensors: tuple[str, ...] = TENDON_NAMES

    def __post_init__(self):
        self.hidden_activation = Activation(self.hidden_activation)
        self.direction = Direction.parse(self.direction)
        self.sensors = tuple(self.sensors)
        h, n_in = self.W1.shape
        n_out, h2 = self.W2.shape
        if h2 != h or self.b1.shape != (h,) or self.b2.shape != (n_out,):
            raise ValueError(
                f"inconsistent layer shapes W1{self.W1.shape} b1{self.b1.shape} W2{self.W2.shape} b2{self.b2.shape}"
            )
        for sc, n, what in ((self.input_scaler, n_in, "input"), (self.output_scaler, n_out, "output")):
            if sc is not None and sc.lo.shape != (n,):
                raise ValueError(f"{what} scaler has {sc.lo.shape[0]} columns, layer has {n}")

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        return (self.W1.shape[1], self.W1.shape[0], self.W2.shape[0])

    @classmethod
    def initialize(cls, layer_sizes, seed=0, activation=Activation.TANH, **kw) -> "MlpModel":
        """Uniform init in ``+-1/sqrt(fan_in)``, zero biases."""
        n_in, h, n_out = layer_sizes
        rng = np.random.default_rng(seed)
        W1 = rng.uniform(-1, 1, (h, n_in)) / np.sqrt(n_in)
        W2 = rng.uniform(-1, 1, (n_out, h)) / np.sqrt(h)
        return cls(W1, np.zeros(h), W2, np.zeros(n_out), activation, **kw)

    def copy(self) -> "MlpModel":
        return MlpModel(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(), self.hidden_activation,
                        self.input_scaler, self.output_scaler, self.direction, self.sensors)

    def forward_scaled(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.layer_sizes[0]:
            raise ValueError(f"model expects {self.layer_sizes[0]} inputs, got {x.shape[-1]}")
        a = self.hidden_activation(x @ self.W1.T + self.b1)
        return a @ self.W2.T + self.b2

    def predict(self, x):
        """Map inputs in original units (mm or deg) to outputs in original units."""
        x = np.asarray(x, dtype=float)
        z = self.forward_scaled(self.input_scaler.apply(x) if self.input_scaler else x)
        return self.output_scaler.invert(z) if self.output_scaler else z

    # flat parameter vector views, used by the optimiser and gradient check
    def _shapes(self):
        return [p.shape for p in (self.W1, self.b1, self.W2, self.b2)]

    def get_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in (self.W1, self.b1, self.W2, self.b2)])

    def set_params(self, flat):
        out, i = [], 0
        for shp in self._shapes():
            n = int(np.prod(shp))
            out.append(np.asarray(flat[i:i + n], dtype=float).reshape(shp).copy())
            i += n
        self.W1, self.b1, self.W2, self.b2 = out


def forward(model: MlpModel, x, scaled: bool = False):
    return model.forward_scaled(x) if scaled else model.predict(x)


def loss_and_grad(model: MlpModel, x, y):
    """Mean squared error (averaged over rows and outputs) and its flat gradient."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    z1 = x @ model.W1.T + model.b1
    a1 = model.hidden_activation(z1)
    out = a1 @ model.W2.T + model.b2
    err = out - y
    n = err.size
    loss = float(np.sum(err * err) / n)
    d_out = 2.0 * err / n
    gW2 = d_out.T @ a1
    gb2 = d_out.sum(axis=0)
    d_a1 = d_out @ model.W2
    d_z1 = d_a1 * model.hidden_activation.grad_from_output(a1, z1)
    gW1 = d_z1.T @ x
    gb1 = d_z1.sum(axis=0)
    return loss, np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])


def gradient_check(model: MlpModel, x, y, step: float = 1e-5, *, details: bool = False):
    """Largest relative gap between backprop and central-difference gradients.

    Relative error per parameter is ``|g_a - g_n| / (|g_a| + |g_n|)``; the denominator
    is floored at 1e-7 times the largest gradient magnitude so entries that are
    numerically zero do not dominate. Returns 0 when both gradients vanish.
    """
    _, g_a = loss_and_grad(model, x, y)
    theta = model.get_params()
    probe = model.copy()
    g_n = np.empty_like(theta)
    for i in range(theta.size):
        t = theta.copy()
        t[i] += step
        probe.set_params(t)
        lp, _ = loss_and_grad(probe, x, y)
        t[i] -= 2 * step
        probe.set_params(t)
        lm, _ = loss_and_grad(probe, x, y)
        g_n[i] = (lp - lm) / (2 * step)
    diff = np.abs(g_a - g_n)
    scale = max(np.abs(g_a).max(initial=0.0), np.abs(g_n).max(initial=0.0))
    if scale == 0.0:
        rel = 0.0
    else:
        rel = float(np.max(diff / np.maximum(np.abs(g_a) + np.abs(g_n), 1e-7 * scale)))
    if details:
        return rel, g_a, g_n
    return rel


# --- training -------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    split: tuple[float, float, float] = (0.65, 0.15, 0.20)
    shuffle_seed: int = 0
    init_seed: int = 0
    learning_rate: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 2000
    early_stop_patience: int = 50
    hidden: int | None = None
    activation: str = "tanh"
    # scale azimuth errors by sin(elevation) when reporting, so the undefined azimuth at the pole counts for nothing
    weight_azimuth_by_sin_phi: bool = False

    def __post_init__(self):
        object.__setattr__(self, "split", tuple(float(s) for s in self.split))
        if len(self.split) != 3 or abs(sum(self.split) - 1.0) > 1e-9 or min(self.split) <= 0:
            raise ValueError(f"split must be three positive fractions summing to 1, got {self.split}")
        if self.batch_size < 1 or self.max_epochs < 1 or self.early_stop_patience < 1:
            raise ValueError("batch_size, max_epochs and early_stop_patience must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        Activation(self.activation)


DEFAULT_HIDDEN = {Direction.FORWARD: 8, Direction.INVERSE: 25}


@dataclass
class TrainReport:
    direction: str
    sensors: tuple[str, ...]
    layer_sizes: tuple[int, int, int]
    n_train: int
    n_val: int
    n_test: int
    epochs_run: int
    best_epoch: int
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    output_names: tuple[str, ...] = ()
    test_rmse: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["sensors"] = list(self.sensors)
        d["layer_sizes"] = list(self.layer_sizes)
        d["output_names"] = list(self.output_names)
        d["test_rmse"] = list(self.test_rmse)
        return d


def split_indices(n: int, cfg: TrainConfig):
    """Shuffled train/validation/test row indices."""
    n_train = int(np.floor(cfg.split[0] * n))
    n_val = int(np.floor(cfg.split[1] * n))
    if n_train < 1 or n_val < 1 or n - n_train - n_val < 1:
        raise ValueError(f"{n} rows are too few for split {cfg.split}")
    perm = np.random.default_rng(cfg.shuffle_seed).permutation(n)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def _check_subset(sensors) -> tuple[str, ...]:
    sensors = tuple(sensors)
    if not sensors:
        raise ValueError("sensor subset must be non-empty")
    bad = [s for s in sensors if s not in TENDON_NAMES]
    if bad or len(set(sensors)) != len(sensors):
        raise ValueError(f"invalid sensor subset {sensors}; choose distinct names from {TENDON_NAMES}")
    return tuple(s for s in TENDON_NAMES if s in sensors)


def io_arrays(joints, sensors, direction: Direction, subset):
    cols = [TENDON_NAMES.index(s) for s in subset]
    S = np.asarray(sensors, dtype=float)[:, cols]
    q = np.asarray(joints, dtype=float)
    return (S, q) if direction is Direction.INVERSE else (q, S)


def rmse(pred, target) -> np.ndarray:
    return np.sqrt(np.mean((np.asarray(pred) - np.asarray(target)) ** 2, axis=0))


def joint_rmse(pred, target, weight_azimuth_by_sin_phi: bool = False) -> np.ndarray:
    """Per-DoF RMSE of ``(theta, phi)`` predictions in degrees.

    With the weighting on, each azimuth error is multiplied by the sine of the true
    elevation, which turns it into an arc length on the unit sphere of arm directions.
    """
    err = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    if weight_azimuth_by_sin_phi:
        err = err.copy()
        err[:, 0] *= np.sin(np.radians(np.asarray(target, dtype=float)[:, 1]))
    return np.sqrt(np.mean(err**2, axis=0))


def train(joints, sensors, direction="inv", sensor_subset=TENDON_NAMES, cfg: TrainConfig = TrainConfig(),
          split=None):
    """Fit a model on paired joint angles ``(n, 2)`` and sensor values ``(n, 4)``.

    Returns ``(model, report)``. ``split`` may supply precomputed index arrays.
    """
    direction = Direction.parse(direction)
    subset = _check_subset(sensor_subset)
    X, Y = io_arrays(joints, sensors, direction, subset)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("training data contains non-finite values")
    tr, va, te = split if split is not None else split_indices(len(X), cfg)
    in_sc, out_sc = scale_fit(X[tr]), scale_fit(Y[tr])
    Xs, Ys = in_sc.apply(X), out_sc.apply(Y)
    Xtr, Ytr, Xva, Yva = Xs[tr], Ys[tr], Xs[va], Ys[va]

    hidden = cfg.hidden or DEFAULT_HIDDEN[direction]
    model = MlpModel.initialize((X.shape[1], hidden, Y.shape[1]), cfg.init_seed, Activation(cfg.activation),
                                input_scaler=in_sc, output_scaler=out_sc, direction=direction, sensors=subset)
    out_names = JOINT_NAMES if direction is Direction.INVERSE else tuple(f"dl_{s}_mm" for s in subset)
    report = _adam(model, Xtr, Ytr, Xva, Yva, cfg, subset)
    pred = model.predict(X[te])
    report.direction = direction.value
    report.sensors = subset
    report.layer_sizes = model.layer_sizes
    report.n_train, report.n_val, report.n_test = len(tr), len(va), len(te)
    report.output_names = out_names
    if direction is Direction.INVERSE:
        err = joint_rmse(pred, Y[te], cfg.weight_azimuth_by_sin_phi)
    else:
        err = rmse(pred, Y[te])
    report.test_rmse = tuple(float(v) for v in err)
    return model, report


def _bind_flat(model: MlpModel) -> np.ndarray:
    """Re-seat the model weights as views into one flat vector and return it."""
    theta = model.get_params()
    i = 0
    views = []
    for shp in model._shapes():
        n = int(np.prod(shp))
        views.append(theta[i:i + n].reshape(shp))
        i += n
    model.W1, model.b1, model.W2, model.b2 = views
    return theta


def _adam(model: MlpModel, Xtr, Ytr, Xva, Yva, cfg: TrainConfig, subset, beta1=0.9, beta2=0.999, eps=1e-8):
    # overflow is caught below as a non-finite loss
    with np.errstate(over="ignore", invalid="ignore"):
        return _adam_loop(model, Xtr, Ytr, Xva, Yva, cfg, subset, beta1, beta2, eps)


def _adam_loop(model, Xtr, Ytr, Xva, Yva, cfg, subset, beta1, beta2, eps):
    rng = np.random.default_rng([cfg.init_seed, 1])
    theta = _bind_flat(model)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    denom = np.empty_like(theta)
    best_loss, best_theta, best_epoch = np.inf, theta.copy(), 0
    report = TrainReport("", subset, model.layer_sizes, 0, 0, 0, 0, 0)
    n = len(Xtr)
    bs = min(cfg.batch_size, n)
    t = 0
    since_best = 0
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        Xe, Ye = Xtr[order], Ytr[order]
        total = 0.0
        for start in range(0, n, bs):
            xb, yb = Xe[start:start + bs], Ye[start:start + bs]
            loss, g = loss_and_grad(model, xb, yb)
            total += loss * len(xb)
            t += 1
            m *= beta1
            m += (1 - beta1) * g
            v *= beta2
            v += (1 - beta2) * (g * g)
            step = cfg.learning_rate * np.sqrt(1 - beta2**t) / (1 - beta1**t)
            np.sqrt(v, out=denom)
            denom += eps
            theta -= step * m / denom
        train_loss = total / n
        val_loss = float(np.mean((model.forward_scaled(Xva) - Yva) ** 2))
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(epoch, subset)
        report.train_loss.append(train_loss)
        report.val_loss.append(val_loss)
        if val_loss < best_loss:
            best_loss, best_epoch = val_loss, epoch
            best_theta[:] = theta
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.early_stop_patience:
                break
    theta[:] = best_theta
    model.set_params(theta)
    report.epochs_run = epoch
    report.best_epoch = best_epoch
    return report


# --- serialisation ----------------------------------------------------------------

MODEL_MAGIC = b"TSMLP\x00"
MODEL_VERSION = 1


def save_model(model: MlpModel, path) -> None:
    """Write ``model`` in the versioned binary format.

    Layout: 6-byte magic ``TSMLP\\0``, little-endian uint16 version, uint32 header
    length, UTF-8 JSON header (sorted keys), then float64 little-endian arrays in
    order W1 (hidden x in, row-major), b1, W2 (out x hidden, row-major), b2,
    input lo, input hi, output lo, output hi.
    """
    header = {
        "layer_sizes": list(model.layer_sizes),
        "activation": model.hidden_activation.value,
        "output_activation": "linear",
        "direction": model.direction.value,
        "sensors": list(model.sensors),
        "byte_order": "little",
        "dtype": "float64",
    }
    hb = json.dumps(header, sort_keys=True).encode()
    if model.input_scaler is None or model.output_scaler is None:
        raise ValueError("only models with fitted input and output scalers can be saved")
    arrays = [model.W1, model.b1, model.W2, model.b2, model.input_scaler.lo, model.input_scaler.hi,
              model.output_scaler.lo, model.output_scaler.hi]
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC + struct.pack("<HI", MODEL_VERSION, len(hb)) + hb)
        for a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


class ModelFormatError(ValueError):
    pass


def load_model(path) -> MlpModel:
    raw = Path(path).read_bytes()
    if not raw.startswith(MODEL_MAGIC):
        raise ModelFormatError(f"{path}: not a tendonsense model file")
    off = len(MODEL_MAGIC)
    version, hlen = struct.unpack_from("<HI", raw, off)
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported model version {version}")
    off += 6
    header = json.loads(raw[off:off + hlen])
    off += hlen
    n_in, h, n_out = header["layer_sizes"]
    sizes = [(h, n_in), (h,), (n_out, h), (n_out,), (n_in,), (n_in,), (n_out,), (n_out,)]
    arrays = []
    for shp in sizes:
        cnt = int(np.prod(shp))
        arrays.append(np.frombuffer(raw, dtype="<f8", count=cnt, offset=off).reshape(shp).astype(float))
        off += 8 * cnt
    if off != len(raw):
        raise ModelFormatError(f"{path}: {len(raw) - off} trailing bytes")
    W1, b1, W2, b2, ilo, ihi, olo, ohi = arrays
    return MlpModel(W1, b1, W2, b2, Activation(header["activation"]), Scaler(ilo, ihi), Scaler(olo, ohi),
                    Direction.parse(header["direction"]), tuple(header["sensors"]))


def sensor_subsets(min_size: int = 2):
    """All subsets of the four tendons with at least ``min_size`` members, smallest first."""
    out = []
    for k in range(min_size, len(TENDON_NAMES) + 1):
        out.extend(itertools.combinations(TENDON_NAMES, k))
    return out
