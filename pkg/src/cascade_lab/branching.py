"""Multi-type branching analysis: mean matrix, criticality, extinction.

The failure process is a branching process over ``2n`` agent types. Its mean
matrix collects the expected children counts per type; the process can
sustain an epidemic iff the spectral radius exceeds 1, and the per-type
die-out probabilities form the minimal fixed point of the offspring
generating functions, reached by monotone iteration from zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .children import ChildrenPmf, build_children
from .model import SystemModel

# Entries below this are treated as structural zeros by the regularity check.
STRUCTURAL_ZERO = 1e-15
# Half-width of the band around spectral radius 1 treated as critical.
CRITICAL_BAND = 1e-9

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge; carries the trailing estimates."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True, eq=False)
class MeanMatrix:
    """Expected-children matrix: entry (i, j) is the mean number of type-j
    children of a failing type-i agent.

    Structural facts checked at construction: a CS-i agent never produces
    fresh type-i children nor internally-infected children of another CS, and
    removing one internal neighbor cannot raise the internal children mean.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("mean matrix must be square")
        if values.shape[0] % 2 != 0 or values.shape[0] < 4:
            raise ValueError("mean matrix order must be an even number >= 4")
        if np.any(values < 0):
            raise ValueError("mean matrix entries must be nonnegative")
        n = values.shape[0] // 2
        for i in range(n):
            for row in (i, n + i):
                if values[row, i] > STRUCTURAL_ZERO:
                    raise ValueError(f"entry ({row}, {i}) must be a structural zero")
            for j in range(n):
                if j != i and values[i, n + j] > STRUCTURAL_ZERO:
                    raise ValueError(f"entry ({i}, {n + j}) must be a structural zero")
            if values[i, n + i] < values[n + i, n + i] - 1e-12:
                raise ValueError(
                    f"internal children mean of type {n + i} exceeds that of type {i}"
                )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        return self.values.shape[0]

    @property
    def n_systems(self) -> int:
        return self.order // 2


def mean_matrix(children: Sequence[ChildrenPmf]) -> MeanMatrix:
    """Stack the per-type expected children counts into the mean matrix."""
    if not children:
        raise ValueError("no children distributions given")
    n_types = children[0].n_types
    if len(children) != n_types:
        raise ValueError(f"expected {n_types} children distributions, got {len(children)}")
    rows = np.zeros((n_types, n_types))
    for idx, h in enumerate(children):
        if h.origin_type != idx:
            raise ValueError(f"children distribution {idx} has origin_type {h.origin_type}")
        rows[idx] = h.mean()
    return MeanMatrix(rows)


def _pattern(values: np.ndarray) -> np.ndarray:
    return values > STRUCTURAL_ZERO


def is_positively_regular(m: MeanMatrix | np.ndarray) -> bool:
    """True iff some power of the matrix is entrywise positive (primitivity).

    Works on the boolean positivity pattern only; by Wielandt's bound a
    primitive n x n matrix has an all-positive power at exponent
    n^2 - 2n + 2, so only exponents up to that need checking.
    """
    values = m.values if isinstance(m, MeanMatrix) else np.asarray(m, dtype=np.float64)
    pattern = _pattern(values)
    n = pattern.shape[0]
    power = pattern.copy()
    limit = n * n - 2 * n + 2
    for _ in range(limit):
        if power.all():
            return True
        power = (power.astype(np.int64) @ pattern.astype(np.int64)) > 0
    return bool(power.all())


def spectral_radius(
    m: MeanMatrix | np.ndarray,
    rtol: float = 1e-10,
    max_iter: int = 100_000,
) -> float:
    """Spectral radius of a nonnegative matrix by power iteration.

    Starts from the all-ones vector. While the iterate stays strictly
    positive the Collatz-Wielandt ratios bracket the radius and the bracket
    width is the stopping test; otherwise successive norm-growth estimates
    are compared. Raises PowerIterationError with the trailing estimates if
    neither test converges within ``max_iter`` iterations.
    """
    values = m.values if isinstance(m, MeanMatrix) else np.asarray(m, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(values < 0):
        raise ValueError("matrix must be nonnegative")
    x = np.ones(values.shape[0])
    estimate = 0.0
    history: list[float] = []
    for _ in range(max_iter):
        y = values @ x
        norm = float(y.sum())
        if norm == 0.0:
            return 0.0
        if np.all(x > 0.0):
            ratios = y / x
            lo, hi = float(ratios.min()), float(ratios.max())
            if hi - lo <= rtol * max(hi, 1e-300):
                return 0.5 * (lo + hi)
        new_estimate = norm / float(x.sum())
        history.append(new_estimate)
        if len(history) > 12:
            history.pop(0)
        if abs(new_estimate - estimate) <= rtol * max(abs(new_estimate), 1e-300) and len(
            history
        ) >= 3:
            return new_estimate
        estimate = new_estimate
        x = y / norm
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} iterations", history
    )


def evaluate_generating_function(h: ChildrenPmf, s: np.ndarray) -> float:
    """Probability generating function of the children vector at ``s``,
    with the convention 0**0 == 1."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (h.n_types,):
        raise ValueError(f"argument must have length {h.n_types}")
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
        raise ValueError("generating function argument must lie in [0, 1]")
    s = np.clip(s, 0.0, 1.0)
    return float(h.mass @ np.prod(s ** h.support, axis=1))


def _gf_vector(children: Sequence[ChildrenPmf], s: np.ndarray) -> np.ndarray:
    return np.array(
        [float(h.mass @ np.prod(s ** h.support, axis=1)) for h in children]
    )


def _is_degenerate_single_child(children: Sequence[ChildrenPmf]) -> bool:
    """True iff every type produces exactly one child with probability one."""
    for h in children:
        totals = h.support.sum(axis=1)
        if abs(float(h.mass[totals == 1].sum()) - 1.0) > 1e-12:
            return False
    return True


@dataclass(frozen=True)
class PoEVector:
    """Per-type die-out probabilities with solver metadata.

    ``values[i]`` is the probability that the failure cascade seeded by one
    type-i agent dies out. ``regime`` classifies the process by the spectral
    radius of the mean matrix; ``converged`` is False only when the iteration
    budget ran out (the best iterate is still returned).
    """

    values: np.ndarray
    spectral_radius_value: float
    regime: str
    iterations: int
    residual: float
    converged: bool

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def supercritical(self) -> bool:
        return self.spectral_radius_value > 1.0

    def cascade_probabilities(self) -> np.ndarray:
        return 1.0 - self.values

    def to_dict(self) -> dict:
        return {
            "poe": [float(v) for v in self.values],
            "pocf": [float(1.0 - v) for v in self.values],
            "spectral_radius": float(self.spectral_radius_value),
            "regime": self.regime,
            "iterations": self.iterations,
            "residual": float(self.residual),
            "converged": self.converged,
        }


def solve_extinction(
    children: Sequence[ChildrenPmf],
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> PoEVector:
    """Minimal fixed point of the offspring generating functions.

    Iterates s <- f(s) from s = 0; the iterates increase monotonically to the
    extinction-probability vector. Starting anywhere above would risk landing
    on the trivial all-ones fixed point, so the start at zero is load-bearing.
    In the critical regime (spectral radius within CRITICAL_BAND of 1) with a
    non-degenerate offspring law the answer is the all-ones vector and the
    iteration, which would stall, is skipped.
    """
    rho = spectral_radius(mean_matrix(children))
    if rho > 1.0 + CRITICAL_BAND:
        regime = SUPERCRITICAL
    elif rho < 1.0 - CRITICAL_BAND:
        regime = SUBCRITICAL
    else:
        regime = CRITICAL
    n_types = children[0].n_types
    if regime == CRITICAL and not _is_degenerate_single_child(children):
        return PoEVector(
            values=np.ones(n_types),
            spectral_radius_value=rho,
            regime=regime,
            iterations=0,
            residual=0.0,
            converged=True,
        )
    s = np.zeros(n_types)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        s_next = _gf_vector(children, s)
        if __debug__:
            assert np.all(s_next >= s - 1e-15), "fixed-point iteration not monotone"
            assert np.all(s_next <= 1.0 + 1e-12), "fixed-point iterate escaped [0, 1]"
        residual = float(np.max(np.abs(s_next - s)))
        s = s_next
        if residual < tol:
            return PoEVector(
                values=np.clip(s, 0.0, 1.0),
                spectral_radius_value=rho,
                regime=regime,
                iterations=iteration,
                residual=residual,
                converged=True,
            )
    return PoEVector(
        values=np.clip(s, 0.0, 1.0),
        spectral_radius_value=rho,
        regime=regime,
        iterations=max_iter,
        residual=residual,
        converged=False,
    )


def extinction_probabilities(
    model: SystemModel, tol: float = 1e-12, max_iter: int = 1_000_000
) -> PoEVector:
    """Die-out probabilities of the cascade seeded in each type of ``model``."""
    return solve_extinction(build_children(model), tol=tol, max_iter=max_iter)


def cascade_probability(model: SystemModel, seed_cs: int, tol: float = 1e-12) -> float:
    """Probability that a single random failure in CS ``seed_cs`` sets off an
    unending cascade (one minus the die-out probability of the fresh type)."""
    if not 0 <= seed_cs < model.n_systems:
        raise IndexError(f"seed_cs {seed_cs} out of range")
    poe = extinction_probabilities(model, tol=tol)
    return float(1.0 - poe.values[seed_cs])
