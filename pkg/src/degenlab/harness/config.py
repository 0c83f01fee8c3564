"""Experiment configuration read from TOML files."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..lattice import Grid, build_grid
from ..weights import Weight

__all__ = ["ExperimentConfig", "load_config", "derived_alpha", "coefficient_from_config"]

EXPERIMENTS = ("weights", "assemble", "scaling", "hls", "lorentz", "sharpness",
               "calculus", "coeff", "riesz", "gaussian")


def _num(v):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    return float(v)


def derived_alpha(n, p, q):
    """``alpha = (n/2)(1/p - 1/q)``."""
    return 0.5 * n * (1.0 / p - (0.0 if math.isinf(q) else 1.0 / q))


def coefficient_from_config(spec):
    """Real coefficient field from ``{kind, ...}``.

    ``constant``: ``a = value``; ``sine``: ``a(x) = mean + amplitude *
    sin(frequency * pi * x_1)``.  Returns ``(coeff, (nu, M))``.
    """
    if not spec:
        return None, (1.0, 1.0)
    kind = spec.get("kind", "constant")
    if kind == "constant":
        a = float(spec["value"])
        return a, (a, a)
    if kind == "sine":
        mean = float(spec.get("mean", 2.0))
        amp = float(spec.get("amplitude", 1.0))
        freq = float(spec.get("frequency", 1.0))

        def a(x):
            x1 = x if np.ndim(x) == 1 else x[:, 0]
            return mean + amp * np.sin(freq * np.pi * x1)

        return a, (mean - abs(amp), mean + abs(amp))
    raise ValueError(f"unknown coefficient kind {kind!r}")


@dataclass
class ExperimentConfig:
    """Everything an experiment needs; ``alpha`` is always derived."""

    experiment: str
    weight: dict
    grid: dict
    p: float = 2.0
    q: float = 4.0
    epsilon: list = field(default_factory=lambda: [0.0])
    epsilon_interval: tuple = (-0.25, 0.25)
    refine: int = 2
    extend: int = 1
    t_window: dict = field(default_factory=lambda: {"lo": 10.0, "hi": 0.1, "count": 12})
    corpus: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    coeff: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "reports"
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        self.p, self.q = _num(self.p), _num(self.q)
        if self.p < 1 or self.q < self.p:
            raise ValueError("need 1 <= p <= q <= inf")
        lo, hi = self.epsilon_interval
        for e in self.epsilon:
            if not lo < e < hi:
                raise ValueError(f"epsilon {e} outside the admissible interval {self.epsilon_interval}")
        if self.refine < 0 or self.extend < 0:
            raise ValueError("refine and extend must be nonnegative")
        self.weight_obj()
        self.base_grid()

    @property
    def dimension(self):
        return int(self.grid.get("dim", self.weight.get("dimension", 1)))

    @property
    def alpha(self):
        return derived_alpha(self.dimension, self.p, self.q)

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))

    def weight_obj(self):
        spec = dict(self.weight)
        spec.setdefault("dimension", self.dimension)
        return Weight.from_config(spec)

    def base_grid(self) -> Grid:
        g = self.grid
        return build_grid(self.dimension, float(g.get("extent", 1.0)),
                          int(g.get("points", 128)), g.get("bc", "dirichlet"))

    def ladder(self):
        """``(h, h/2, ..., h/2^refine) x (X, 2X, ..., 2^extend X)`` at fixed h-ratio."""
        base = self.base_grid()
        out = []
        for e in range(self.extend + 1):
            for r in range(self.refine + 1):
                f = 2 ** e
                out.append(Grid(base.dimension, base.extent * f, base.points * f * 2 ** r,
                                base.bc))
        return out

    def coefficient(self):
        return coefficient_from_config(self.coeff)

    def echo(self):
        d = copy.deepcopy(self.raw) if self.raw else {}
        d.update({"experiment": self.experiment, "weight": self.weight, "grid": self.grid,
                  "p": self.p if math.isfinite(self.p) else "inf",
                  "q": self.q if math.isfinite(self.q) else "inf",
                  "alpha": self.alpha, "epsilon": self.epsilon, "refine": self.refine,
                  "extend": self.extend, "seed": self.seed})
        return d

    @classmethod
    def from_dict(cls, d, **overrides):
        d = copy.deepcopy(d)
        d.update({k: v for k, v in overrides.items() if v is not None})
        if "alpha" in d:
            n = int(d.get("grid", {}).get("dim", d.get("weight", {}).get("dimension", 1)))
            a = derived_alpha(n, _num(d.get("p", 2.0)), _num(d.get("q", 4.0)))
            if abs(float(d["alpha"]) - a) > 1e-12:
                raise ValueError(f"alpha = {d['alpha']} is inconsistent with "
                                 f"(n/2)(1/p - 1/q) = {a}")
        known = {"experiment", "weight", "grid", "p", "q", "epsilon", "epsilon_interval",
                 "refine", "extend", "t_window", "corpus", "tolerances", "coeff", "params",
                 "seed", "out"}
        kwargs = {k: v for k, v in d.items() if k in known}
        if "epsilon" in kwargs and not isinstance(kwargs["epsilon"], list):
            kwargs["epsilon"] = [float(kwargs["epsilon"])]
        if "epsilon_interval" in kwargs:
            kwargs["epsilon_interval"] = tuple(kwargs["epsilon_interval"])
        return cls(raw=d, **kwargs)


def load_config(path, **overrides):
    with open(path, "rb") as fh:
        return ExperimentConfig.from_dict(tomllib.load(fh), **overrides)
