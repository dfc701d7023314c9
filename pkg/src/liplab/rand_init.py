"""Random networks under the generalized He initialization.

Hidden-layer weights are i.i.d. N(0, 2/N) (N = width of the layer's output),
output weights are i.i.d. N(0, 1), and biases follow a per-layer BiasSpec.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .net_core import NetworkParams

BIAS_KINDS = ("zero", "gaussian", "uniform", "rademacher", "table", "constant")


@dataclass(frozen=True)
class BiasSpec:
    """Distribution of the bias entries.

    ``gaussian`` uses ``sigma``, ``uniform`` draws from [-m, m], ``rademacher``
    draws +-scale, ``table`` resamples ``table`` with a random sign flip.
    ``constant`` puts every bias at ``value``; it is asymmetric unless the value
    is 0 and exists only for negative-control runs.  ``per_layer`` maps a layer
    index to a BiasSpec overriding this one.
    """

    kind: str = "zero"
    sigma: float = 1.0
    m: float = 1.0
    scale: float = 1.0
    value: float = 0.0
    table: tuple[float, ...] = ()
    per_layer: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in BIAS_KINDS:
            raise ValueError(f"unknown bias kind {self.kind!r}; choose from {BIAS_KINDS}")
        if min(self.sigma, self.m, self.scale) < 0:
            raise ValueError("bias parameters must be non-negative")
        if self.kind == "table" and len(self.table) == 0:
            raise ValueError("table bias needs at least one sample")
        object.__setattr__(self, "table", tuple(float(v) for v in self.table))

    @property
    def symmetric(self) -> bool:
        own = self.kind != "constant" or self.value == 0.0
        return own and all(s.symmetric for s in self.per_layer.values())

    @property
    def continuous(self) -> bool:
        """True when no bias law has an atom (then x0-differentiability is a.s.)."""
        own = self.kind == "gaussian" and self.sigma > 0 or self.kind == "uniform" and self.m > 0
        return own and all(s.continuous for s in self.per_layer.values())

    def for_layer(self, ell: int) -> "BiasSpec":
        return self.per_layer.get(ell, self)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(n)
        if self.kind == "gaussian":
            return self.sigma * rng.standard_normal(n)
        if self.kind == "uniform":
            return rng.uniform(-self.m, self.m, n)
        if self.kind == "rademacher":
            return self.scale * rng.choice(np.array([-1.0, 1.0]), n)
        if self.kind == "constant":
            return np.full(n, float(self.value))
        draws = rng.choice(np.asarray(self.table), n)
        return draws * rng.choice(np.array([-1.0, 1.0]), n)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "gaussian":
            out["sigma"] = self.sigma
        elif self.kind == "uniform":
            out["m"] = self.m
        elif self.kind == "rademacher":
            out["scale"] = self.scale
        elif self.kind == "constant":
            out["value"] = self.value
        elif self.kind == "table":
            out["table"] = list(self.table)
        if self.per_layer:
            out["per_layer"] = {str(k): v.to_dict() for k, v in sorted(self.per_layer.items())}
        return out

    @classmethod
    def from_dict(cls, obj: dict | str) -> "BiasSpec":
        if isinstance(obj, str):
            return cls(kind=obj)
        allowed = {"kind", "sigma", "m", "scale", "value", "table", "per_layer"}
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown bias keys: {sorted(unknown)}")
        kw = dict(obj)
        per_layer = {int(k): cls.from_dict(v) for k, v in kw.pop("per_layer", {}).items()}
        if "table" in kw:
            kw["table"] = tuple(kw["table"])
        return cls(per_layer=per_layer, **kw)


@dataclass(frozen=True)
class InitConfig:
    d: int
    N: int
    L: int
    bias: BiasSpec = BiasSpec()
    seed: int = 0

    def __post_init__(self):
        if min(self.d, self.N, self.L) < 1:
            raise ValueError("d, N, L must all be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {"d": self.d, "N": self.N, "L": self.L, "bias": self.bias.to_dict(), "seed": self.seed}

    @classmethod
    def from_dict(cls, obj: dict) -> "InitConfig":
        unknown = set(obj) - {"d", "N", "L", "bias", "seed"}
        if unknown:
            raise ValueError(f"unknown init keys: {sorted(unknown)}")
        return cls(
            d=int(obj["d"]),
            N=int(obj["N"]),
            L=int(obj["L"]),
            bias=BiasSpec.from_dict(obj.get("bias", "zero")),
            seed=int(obj.get("seed", 0)),
        )


def derive_trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent PCG64 stream for one trial.

    The (master_seed, trial_index) pair goes through numpy's SeedSequence hash,
    so a trial's stream depends only on those two integers and never on worker
    count or scheduling order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), int(trial_index)])))


def sample_network(cfg: InitConfig, rng: np.random.Generator | None = None) -> NetworkParams:
    """Draw a network; with ``rng`` omitted the stream is seeded from ``cfg.seed``."""
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    return sample_network_widths(cfg.d, (cfg.N,) * cfg.L, cfg.bias, rng)


def sample_network_widths(
    d: int, widths: Sequence[int], bias: BiasSpec, rng: np.random.Generator
) -> NetworkParams:
    dims = (d,) + tuple(widths) + (1,)
    weights, biases = [], []
    L = len(widths)
    for ell in range(L + 1):
        n_out, n_in = dims[ell + 1], dims[ell]
        std = 1.0 if ell == L else np.sqrt(2.0 / n_out)
        weights.append(std * rng.standard_normal((n_out, n_in)))
        biases.append(bias.for_layer(ell).sample(rng, n_out))
    return NetworkParams(d, tuple(widths), tuple(weights), tuple(biases))
