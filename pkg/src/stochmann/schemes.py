"""Fixed-point iteration schemes.

Five update rules on a common interface:

    picard          x' = F(x)
    krasnoselskii   x' = (F(x) + x)/2
    mann            x' = (1 - a_n) x + a_n F(x),          a_n = a/n
    ishikawa        y  = (1 - b_n) x + b_n F(x)
                    x' = (1 - a_n) x + a_n F(y),          a_n = a, b_n = g/(n+1)
    stochastic_mann x' = (1 - a_n) x + a_n F(x) + b_n xi_n,
                    a_n = a/n, b_n = a/n^2

Iterates are indexed from 1 with x_1 the user's initial point, so the step
counter n in the update rule and in the error bounds line up index for
index.  step() accepts batched states of shape (..., d) and is bitwise
consistent with the scalar path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import noise as noise_mod
from .errors import DivergedError, ValidationError
from .spaces import as_point, dimension, eval_map, norm

SCHEME_KINDS = ("picard", "krasnoselskii", "mann", "ishikawa", "stochastic_mann")

__all__ = ["SCHEME_KINDS", "StepSequences", "SchemeConfig", "Trajectory",
           "step_sizes", "step", "run"]


@dataclass(frozen=True)
class StepSequences:
    """Gain a of the damped step sequences a_n = a/n and b_n = a/n^2.

    The constraint 0 < a < 1 keeps every convex weight valid and puts the
    pair in the regime sum a_n = inf, sum a_n b_n < inf that the
    convergence analysis requires.
    """

    a: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.a) and 0.0 < self.a < 1.0):
            raise ValidationError("steps.a: must satisfy 0 < a < 1")


def step_sizes(steps, n):
    """(a_n, b_n) = (a/n, a/n^2) for 1-based step index n."""
    if n < 1:
        raise ValidationError("n: step index is 1-based")
    return steps.a / n, steps.a / (n * n)


@dataclass(frozen=True)
class SchemeConfig:
    kind: str
    map_spec: object
    x0: np.ndarray
    steps: StepSequences = field(default_factory=StepSequences)
    noise: object | None = None
    horizon: int = 1000
    seed: int = 0
    norm_kind: str = "euclidean"
    ishikawa_b: float = 1.0  # b_n = ishikawa_b/(n+1), keeps b_1 < 1

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValidationError(f"scheme.kind: unknown kind {self.kind!r}")
        d = dimension(self.map_spec)
        object.__setattr__(self, "x0", as_point(self.x0, d, name="scheme.x0"))
        if not (isinstance(self.horizon, (int, np.integer)) and self.horizon >= 1):
            raise ValidationError("scheme.horizon: must be an integer >= 1")
        if self.kind == "stochastic_mann":
            if self.noise is None:
                raise ValidationError(
                    "scheme.noise: required when scheme.kind == 'stochastic_mann'")
            if self.noise.dim != d:
                raise ValidationError(
                    f"scheme.noise: model dimension {self.noise.dim} != map dimension {d}")
        elif self.noise is not None:
            raise ValidationError("scheme.noise: only stochastic_mann takes a noise model")
        if self.kind == "ishikawa" and not (0.0 < self.ishikawa_b <= 1.0):
            raise ValidationError("scheme.ishikawa_b: must lie in (0, 1]")


@dataclass(frozen=True)
class Trajectory:
    """Realized path of one run.

    iterates      (horizon+1, d); row k holds x_{k+1}, i.e. row 0 is the
                  initial point x_1 and row `horizon` is x_{horizon+1}
    noise_norms   (horizon,); ||xi_n|| for n = 1..horizon, empty for
                  deterministic schemes
    errors_to_ref (horizon+1,) distances ||x_n - x*|| when a reference
                  point was supplied, else None
    """

    iterates: np.ndarray
    noise_norms: np.ndarray
    errors_to_ref: np.ndarray | None
    norm_kind: str

    def _index(self, n):
        if not 1 <= n <= self.iterates.shape[0]:
            raise ValidationError(
                f"iterate index {n} outside 1..{self.iterates.shape[0]}")
        return n - 1

    def iterate(self, n):
        """x_n with the 1-based indexing of the analysis (x_1 = initial)."""
        return self.iterates[self._index(n)]

    def error(self, n):
        if self.errors_to_ref is None:
            raise ValidationError("trajectory has no reference errors")
        return float(self.errors_to_ref[self._index(n)])

    def __len__(self):
        return self.iterates.shape[0]


def step(kind, x, n, cfg, noise_draw=None):
    """One update x_{n+1} from x_n = x at 1-based step index n.

    x may carry leading batch axes; all arithmetic is elementwise, so a
    batched call agrees bitwise with per-element scalar calls.
    """
    fx = eval_map(cfg.map_spec, x)
    if kind == "picard":
        return fx
    if kind == "krasnoselskii":
        return 0.5 * (fx + x)
    if kind == "mann":
        a_n, _ = step_sizes(cfg.steps, n)
        return (1.0 - a_n) * x + a_n * fx
    if kind == "stochastic_mann":
        a_n, b_n = step_sizes(cfg.steps, n)
        return (1.0 - a_n) * x + a_n * fx + b_n * noise_draw
    if kind == "ishikawa":
        b_n = cfg.ishikawa_b / (n + 1)
        a_n = cfg.steps.a
        y = (1.0 - b_n) * x + b_n * fx
        return (1.0 - a_n) * x + a_n * eval_map(cfg.map_spec, y)
    raise ValidationError(f"scheme.kind: unknown kind {kind!r}")


def run(cfg, x_star=None):
    """Run the configured scheme for cfg.horizon steps.

    Noise draws come from the substream (cfg.seed, n), so the trajectory is
    a pure function of the config; identical configs give bitwise identical
    trajectories.  A non-finite iterate raises DivergedError carrying the
    last finite 1-based iterate index.
    """
    d = dimension(cfg.map_spec)
    horizon = cfg.horizon
    stochastic = cfg.kind == "stochastic_mann"
    if stochastic:
        draws = noise_mod.sample_block(cfg.noise, d, cfg.seed,
                                       np.arange(1, horizon + 1, dtype=np.uint64))
        noise_norms = norm(draws, cfg.norm_kind)
    else:
        draws = None
        noise_norms = np.empty(0, dtype=np.float64)
    iterates = np.empty((horizon + 1, d), dtype=np.float64)
    x = cfg.x0.copy()
    iterates[0] = x
    for n in range(1, horizon + 1):
        x = step(cfg.kind, x, n, cfg, draws[n - 1] if stochastic else None)
        if not np.all(np.isfinite(x)):
            raise DivergedError(
                f"iterate x_{n + 1} left the representable range",
                last_finite_index=n)
        iterates[n] = x
    errors = None
    if x_star is not None:
        x_star = as_point(x_star, d, name="x_star")
        errors = norm(iterates - x_star, cfg.norm_kind)
    return Trajectory(iterates=iterates, noise_norms=noise_norms,
                      errors_to_ref=errors, norm_kind=cfg.norm_kind)
