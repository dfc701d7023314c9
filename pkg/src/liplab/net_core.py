"""ReLU network data model: forward pass, activation patterns, gradients.

A network maps R^d -> R as

    Phi(x) = W[L] relu(W[L-1] ... relu(W[0] x + b[0]) ... + b[L-1]) + b[L]

with hidden widths ``hidden_widths[0..L-1]``.  A neuron is "on" iff its
pre-activation is strictly positive; at exactly zero it is off.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when weights, biases, vectors or patterns do not chain."""


@dataclass(frozen=True)
class NetworkParams:
    d: int
    hidden_widths: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        widths = tuple(int(n) for n in self.hidden_widths)
        if self.d < 1 or len(widths) < 1 or min(widths) < 1:
            raise ShapeError("need d >= 1, L >= 1 and all widths >= 1")
        L = len(widths)
        if len(self.weights) != L + 1 or len(self.biases) != L + 1:
            raise ShapeError(f"expected {L + 1} weight matrices and bias vectors")
        dims = (self.d,) + widths + (1,)
        ws, bs = [], []
        for ell, (W, b) in enumerate(zip(self.weights, self.biases)):
            W = np.array(W, dtype=np.float64)
            if W.ndim < 2:
                W = W.reshape(dims[ell + 1], -1)
            b = np.array(b, dtype=np.float64).reshape(-1)
            if W.shape != (dims[ell + 1], dims[ell]):
                raise ShapeError(f"W^({ell}) has shape {W.shape}, expected {(dims[ell + 1], dims[ell])}")
            if b.shape != (dims[ell + 1],):
                raise ShapeError(f"b^({ell}) has shape {b.shape}, expected {(dims[ell + 1],)}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ShapeError(f"layer {ell} has non-finite entries")
            W.setflags(write=False)
            b.setflags(write=False)
            ws.append(W)
            bs.append(b)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "hidden_widths", widths)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def L(self) -> int:
        return len(self.hidden_widths)

    @property
    def constant_width(self) -> int | None:
        """The common hidden width, or None when widths differ."""
        widths = set(self.hidden_widths)
        return widths.pop() if len(widths) == 1 else None

    def __eq__(self, other):
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return (
            self.d == other.d
            and self.hidden_widths == other.hidden_widths
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )

    __hash__ = None

    def with_last_layer_scaled(self, alpha: float) -> "NetworkParams":
        ws = list(self.weights)
        bs = list(self.biases)
        ws[-1] = alpha * ws[-1]
        bs[-1] = alpha * bs[-1]
        return NetworkParams(self.d, self.hidden_widths, tuple(ws), tuple(bs))

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "hidden_widths": list(self.hidden_widths),
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "NetworkParams":
        unknown = set(obj) - {"d", "hidden_widths", "weights", "biases"}
        if unknown:
            raise ShapeError(f"unknown network keys: {sorted(unknown)}")
        return cls(
            d=int(obj["d"]),
            hidden_widths=tuple(int(n) for n in obj["hidden_widths"]),
            weights=tuple(np.array(W, dtype=np.float64) for W in obj["weights"]),
            biases=tuple(np.array(b, dtype=np.float64) for b in obj["biases"]),
        )

    def to_json(self) -> str:
        # json emits floats with repr(), the shortest round-trip decimal form
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "NetworkParams":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "NetworkParams":
        return cls.from_json(Path(path).read_text())


def make_network(weights: Sequence, biases: Sequence | None = None) -> NetworkParams:
    """Build a network from nested lists; biases default to zero."""
    ws = [np.atleast_2d(np.asarray(W, dtype=np.float64)) for W in weights]
    d = ws[0].shape[1]
    widths = tuple(W.shape[0] for W in ws[:-1])
    if biases is None:
        biases = [np.zeros(W.shape[0]) for W in ws]
    return NetworkParams(d, widths, tuple(ws), tuple(np.asarray(b, dtype=np.float64) for b in biases))


@dataclass(frozen=True)
class ActivationPattern:
    """One 0/1 vector per hidden layer (bit 1 = pre-activation > 0)."""

    bits: tuple[tuple[int, ...], ...]

    @classmethod
    def from_arrays(cls, layers: Sequence) -> "ActivationPattern":
        out = []
        for s in layers:
            arr = np.asarray(s).astype(int).reshape(-1)
            if not np.all((arr == 0) | (arr == 1)):
                raise ShapeError("pattern entries must be 0 or 1")
            out.append(tuple(int(v) for v in arr))
        return cls(tuple(out))

    @classmethod
    def from_flat(cls, flat: Sequence[int], widths: Sequence[int]) -> "ActivationPattern":
        flat = list(flat)
        if len(flat) != sum(widths):
            raise ShapeError("flat pattern length does not match widths")
        layers, i = [], 0
        for n in widths:
            layers.append(flat[i : i + n])
            i += n
        return cls.from_arrays(layers)

    @classmethod
    def constant(cls, widths: Sequence[int], bit: int) -> "ActivationPattern":
        return cls(tuple((bit,) * n for n in widths))

    @property
    def flat(self) -> tuple[int, ...]:
        return tuple(b for layer in self.bits for b in layer)

    def widths(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.bits)

    def flip(self, layer: int, neuron: int) -> "ActivationPattern":
        bits = [list(s) for s in self.bits]
        bits[layer][neuron] = 1 - bits[layer][neuron]
        return ActivationPattern(tuple(tuple(s) for s in bits))

    def __str__(self):
        return "|".join("".join(str(b) for b in layer) for layer in self.bits)


@dataclass(frozen=True)
class LayerTrace:
    post: tuple[np.ndarray, ...]  # x^(0) .. x^(L), x^(0) = input
    pre: tuple[np.ndarray, ...]  # z^(0) .. z^(L-1) hidden pre-activations
    pattern: ActivationPattern
    boundary_margin: float


def forward(net: NetworkParams, x) -> tuple[float, LayerTrace]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (net.d,):
        raise ShapeError(f"input has length {x.shape[0]}, network expects {net.d}")
    post = [x]
    pre = []
    h = x
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        z = W @ h + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        post.append(h)
    out = float(net.weights[-1][0] @ h + net.biases[-1][0])
    pattern = ActivationPattern.from_arrays([z > 0 for z in pre])
    margin = float(min(np.min(np.abs(z)) for z in pre))
    return out, LayerTrace(tuple(post), tuple(pre), pattern, margin)


def evaluate(net: NetworkParams, x) -> float:
    return forward(net, x)[0]


def pattern_gradient(net: NetworkParams, pattern: ActivationPattern) -> np.ndarray:
    """(W[L] diag(s[L-1]) W[L-1] ... diag(s[0]) W[0])^T, built right to left."""
    if pattern.widths() != net.hidden_widths:
        raise ShapeError(f"pattern widths {pattern.widths()} != network widths {net.hidden_widths}")
    # row vector v = W[L] D[L-1] W[L-1] ... ; apply as v <- (v * s) @ W
    v = net.weights[-1][0].copy()
    for ell in range(net.L - 1, -1, -1):
        v = (v * np.asarray(pattern.bits[ell], dtype=np.float64)) @ net.weights[ell]
    return v


def gradient_at(net: NetworkParams, x) -> tuple[np.ndarray, float]:
    """Pattern-induced gradient at x and the trace's boundary margin.

    The vector is the true gradient whenever the margin is positive; on a
    boundary it is the one-sided selection made by the ``> 0`` convention.
    """
    _, trace = forward(net, x)
    return pattern_gradient(net, trace.pattern), trace.boundary_margin


def linear_collapse(net: NetworkParams) -> tuple[np.ndarray, float]:
    """Product W[L] ... W[0] (a 1 x d row) and its Euclidean norm."""
    M = net.weights[-1]
    for W in reversed(net.weights[:-1]):
        M = M @ W
    return M, float(np.linalg.norm(M))


# -- batched helpers ---------------------------------------------------------


def batch_patterns(net: NetworkParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flattened on/off patterns (n x sum(widths), bool) and margins for rows of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.d:
        raise ShapeError(f"expected an (n, {net.d}) batch")
    H = X
    bits = []
    margin = np.full(X.shape[0], np.inf)
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        Z = H @ W.T + b
        bits.append(Z > 0)
        margin = np.minimum(margin, np.min(np.abs(Z), axis=1))
        H = np.maximum(Z, 0.0)
    return np.concatenate(bits, axis=1), margin


def batch_forward(net: NetworkParams, X: np.ndarray) -> np.ndarray:
    H = np.asarray(X, dtype=np.float64)
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        H = np.maximum(H @ W.T + b, 0.0)
    return (H @ net.weights[-1].T + net.biases[-1])[:, 0]
