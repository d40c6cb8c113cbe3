"""Fully-connected networks with hand-written backprop, Adam, replay buffer
and a flat binary checkpoint format."""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

OUT_ACTIVATIONS = ("identity", "tanh", "sigmoid")
CHECKPOINT_FORMAT = "uavcrew-checkpoint"
CHECKPOINT_VERSION = 1


class ShapeError(ValueError):
    pass


class BufferNotReady(RuntimeError):
    pass


class ChecksumError(ValueError):
    pass


class Gradients(NamedTuple):
    params: list  # matches Mlp.params order
    input: np.ndarray


class Mlp:
    """ReLU hidden layers with an identity, tanh or sigmoid output layer.

    Weights are drawn uniformly within +-1/sqrt(fan_in); ``final_scale``
    narrows the last layer's range, as usual for actor and critic heads.
    """

    def __init__(self, sizes: Sequence[int], out_activation: str = "identity", seed: int = 0,
                 final_scale: Optional[float] = None):
        if len(sizes) < 2 or min(sizes) < 1:
            raise ShapeError(f"invalid layer sizes {sizes}")
        if out_activation not in OUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {out_activation!r}")
        self.sizes = tuple(int(s) for s in sizes)
        self.out_activation = out_activation
        self.seed = int(seed)
        self.final_scale = final_scale
        rng = np.random.default_rng(self.seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            if i == n_layers - 1 and final_scale is not None:
                bound = final_scale
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def _check_input(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0] or x.ndim > 2:
            raise ShapeError(f"expected input of width {self.sizes[0]}, got shape {x.shape}")
        return x

    def forward(self, x):
        x = self._check_input(x)
        return self._forward(x)[0]

    def _forward(self, x):
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i < last:
                h = np.maximum(z, 0.0)
            elif self.out_activation == "tanh":
                h = np.tanh(z)
            elif self.out_activation == "sigmoid":
                h = 1.0 / (1.0 + np.exp(-z))
            else:
                h = z
            acts.append(h)
        return h, acts

    def preactivation(self, x) -> np.ndarray:
        """Output layer values before the output activation."""
        x = self._check_input(x)
        acts = self._forward(x)[1]
        return acts[-2] @ self.weights[-1] + self.biases[-1]

    def backward(self, x, upstream, pre_upstream=None) -> Gradients:
        """Reverse-mode gradients of ``sum(upstream * forward(x))``, plus
        ``sum(pre_upstream * preactivation(x))`` when given."""
        x = self._check_input(x)
        y, acts = self._forward(x)
        upstream = np.asarray(upstream, dtype=float)
        if upstream.shape != y.shape:
            raise ShapeError(f"upstream gradient shape {upstream.shape} != output shape {y.shape}")
        if self.out_activation == "tanh":
            delta = upstream * (1.0 - y * y)
        elif self.out_activation == "sigmoid":
            delta = upstream * y * (1.0 - y)
        else:
            delta = upstream
        if pre_upstream is not None:
            pre_upstream = np.asarray(pre_upstream, dtype=float)
            if pre_upstream.shape != y.shape:
                raise ShapeError(f"pre-activation gradient shape {pre_upstream.shape} != output shape {y.shape}")
            delta = delta + pre_upstream
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = acts[i]
            if a_in.ndim == 1:
                grads[2 * i] = np.outer(a_in, delta)
                grads[2 * i + 1] = delta.copy()
            else:
                grads[2 * i] = a_in.T @ delta
                grads[2 * i + 1] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (acts[i] > 0.0)
        return Gradients(grads, delta)

    def copy(self) -> "Mlp":
        twin = Mlp.__new__(Mlp)
        twin.sizes = self.sizes
        twin.out_activation = self.out_activation
        twin.seed = self.seed
        twin.final_scale = self.final_scale
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def load_flat(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.size != self.n_params:
            raise ShapeError(f"expected {self.n_params} parameters, got {values.size}")
        offset = 0
        for p in self.params:
            p[...] = values[offset:offset + p.size].reshape(p.shape)
            offset += p.size

    def same_architecture(self, other: "Mlp") -> bool:
        return self.sizes == other.sizes and self.out_activation == other.out_activation


class Adam:
    def __init__(self, params: Sequence[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        """In-place update of ``params``."""
        if len(params) != len(self.m) or len(grads) != len(params):
            raise ShapeError("parameter/gradient/moment lists differ in length")
        for p, g, m in zip(params, grads, self.m):
            if p.shape != g.shape or p.shape != m.shape:
                raise ShapeError(f"shape mismatch {p.shape} / {g.shape} / {m.shape}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def soft_update(target: Mlp, online: Mlp, tau: float) -> None:
    if not target.same_architecture(online):
        raise ShapeError(f"architecture mismatch {target.sizes} vs {online.sizes}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    for pt, po in zip(target.params, online.params):
        pt *= 1.0 - tau
        pt += tau * po


@dataclass
class Transition:
    state: np.ndarray
    action: object  # vector for continuous agents, int for discrete ones
    reward: float
    next_state: np.ndarray
    terminal: bool
    tag: int = 0  # producer id: worker index or environment copy


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    tags: np.ndarray


class ReplayBuffer:
    """Bounded FIFO store. Pushes are serialized by a lock so several
    producer threads may feed one sampling consumer."""

    def __init__(self, capacity: int, state_dim: int, action_dim: Optional[int] = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.state_dim = state_dim
        self.discrete = action_dim is None
        self._s = np.zeros((capacity, state_dim))
        self._s2 = np.zeros((capacity, state_dim))
        self._a = np.zeros(capacity, dtype=np.int64) if self.discrete else np.zeros((capacity, action_dim))
        self._r = np.zeros(capacity)
        self._d = np.zeros(capacity)
        self._tag = np.zeros(capacity, dtype=np.int64)
        self.inserted = 0
        self._lock = threading.Lock()

    def __len__(self):
        return min(self.inserted, self.capacity)

    def push(self, t: Transition) -> None:
        if len(t.state) != self.state_dim or len(t.next_state) != self.state_dim:
            raise ShapeError(f"transition state width != {self.state_dim}")
        with self._lock:
            i = self.inserted % self.capacity
            self._s[i] = t.state
            self._s2[i] = t.next_state
            self._a[i] = t.action
            self._r[i] = t.reward
            self._d[i] = float(t.terminal)
            self._tag[i] = t.tag
            self.inserted += 1

    def sample(self, batch: int, rng: np.random.Generator) -> Batch:
        with self._lock:
            n = len(self)
            if n < batch:
                raise BufferNotReady(f"buffer holds {n} transitions, batch needs {batch}")
            idx = rng.integers(0, n, size=batch)
            return Batch(self._s[idx], self._a[idx], self._r[idx], self._s2[idx], self._d[idx],
                         self._tag[idx])

    def transitions(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        with self._lock:
            n = len(self)
            start = self.inserted - n
            out = []
            for k in range(start, self.inserted):
                i = k % self.capacity
                action = int(self._a[i]) if self.discrete else self._a[i].copy()
                out.append(Transition(self._s[i].copy(), action, float(self._r[i]),
                                      self._s2[i].copy(), bool(self._d[i]), int(self._tag[i])))
            return out

    def tags(self) -> np.ndarray:
        return self._tag[:len(self)].copy()


def save_checkpoint(path, nets: dict, meta: Optional[dict] = None) -> None:
    """Write ``manifest.json`` plus ``params.bin`` (little-endian float64)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    chunks = []
    offset = 0
    for name in sorted(nets):
        net = nets[name]
        flat = net.flat()
        entries.append({"name": name, "sizes": list(net.sizes), "out_activation": net.out_activation,
                        "seed": net.seed, "offset": offset, "count": int(flat.size)})
        chunks.append(flat)
        offset += flat.size
    blob = np.concatenate(chunks).astype("<f8").tobytes() if chunks else b""
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "nets": entries,
        "meta": meta or {},
        "params_file": "params.bin",
        "params_sha256": hashlib.sha256(blob).hexdigest(),
    }
    (path / "params.bin").write_bytes(blob)
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path) -> tuple[dict, dict]:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ChecksumError(f"unreadable checkpoint manifest in {path}: {exc}") from exc
    if manifest.get("format") != CHECKPOINT_FORMAT or manifest.get("version") != CHECKPOINT_VERSION:
        raise ChecksumError(f"unsupported checkpoint format in {path}")
    blob = (path / manifest["params_file"]).read_bytes()
    digest = hashlib.sha256(blob).hexdigest()
    if digest != manifest["params_sha256"]:
        raise ChecksumError(f"checksum mismatch for {path / manifest['params_file']}: "
                            f"expected {manifest['params_sha256']}, found {digest}")
    values = np.frombuffer(blob, dtype="<f8")
    nets = {}
    for e in manifest["nets"]:
        net = Mlp(e["sizes"], e["out_activation"], seed=e["seed"])
        net.load_flat(values[e["offset"]:e["offset"] + e["count"]])
        nets[e["name"]] = net
    return nets, manifest["meta"]
