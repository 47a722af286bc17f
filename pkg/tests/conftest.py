"""Shared test fixtures: benchmark models, random generators, oracles."""

from __future__ import annotations

from itertools import product

import numpy as np
import pytest

from cascade_lab import (
    JointPmf,
    SystemModel,
    VulnerabilityProfile,
    constant_profile,
)
from cascade_lab.pmf import MarginalPmf, product_pmf

# Corrected benchmark tables: entry (3, 0) of TABLE_P1 restores unit mass and
# the product form (its widely printed value 0.01200 does neither).
TABLE_P1 = {
    (0, 0): 0.40000, (1, 0): 0.12000, (2, 0): 0.16000, (3, 0): 0.12000,
    (0, 1): 0.03750, (1, 1): 0.01125, (2, 1): 0.01500, (3, 1): 0.01125,
    (0, 2): 0.05000, (1, 2): 0.01500, (2, 2): 0.02000, (3, 2): 0.01500,
    (0, 3): 0.01250, (1, 3): 0.00375, (2, 3): 0.00500, (3, 3): 0.00375,
}
TABLE_P2 = {
    (0, 0): 0.40000, (1, 0): 0.04000, (2, 0): 0.32000, (3, 0): 0.04000,
    (0, 1): 0.02500, (1, 1): 0.00250, (2, 1): 0.02000, (3, 1): 0.00250,
    (0, 2): 0.07500, (1, 2): 0.00750, (2, 2): 0.06000, (3, 2): 0.00750,
}
TABLE_P3 = {
    (0, 0): 0.40000, (1, 0): 0.04700, (2, 0): 0.32000, (3, 0): 0.03300,
    (0, 1): 0.02500, (1, 1): 0.00250, (2, 1): 0.02000, (3, 1): 0.00250,
    (0, 2): 0.07500, (1, 2): 0.00050, (2, 2): 0.06000, (3, 2): 0.01450,
}

MU_P1 = (0.9646, 0.9646, 0.9761, 0.9761)
MU_P2 = (0.9586, 0.9586, 0.9720, 0.9720)
MU_P3 = (0.9604, 0.9604, 0.9732, 0.9732)


def mirrored(entries: dict) -> dict:
    return {(b, a): m for (a, b), m in entries.items()}


def symmetric_children_model(entries: dict, name: str = "") -> SystemModel:
    """Two symmetric CSes, unit transmission, offspring-count reading."""
    return SystemModel(
        degree_dists=(JointPmf.from_dict(entries), JointPmf.from_dict(mirrored(entries))),
        infection=[[np.nan, 1.0], [1.0, np.nan]],
        vulnerability=(constant_profile(1.0), constant_profile(1.0)),
        internal_degree_floor=False,
        name=name,
    )


@pytest.fixture(scope="session")
def model_p1() -> SystemModel:
    return symmetric_children_model(TABLE_P1, "example1_p1")


@pytest.fixture(scope="session")
def model_p2() -> SystemModel:
    return symmetric_children_model(TABLE_P2, "example1_p2")


@pytest.fixture(scope="session")
def model_p3() -> SystemModel:
    return symmetric_children_model(TABLE_P3, "example2_p3")


def example1_analog() -> SystemModel:
    """Degree-mode symmetric benchmark for the finite-graph checks.

    With the vulnerability profile 1/d the size bias of a random internal
    neighbor cancels exactly against its vulnerability, so the offspring laws
    used by the analytics describe the graph exploration without the usual
    infected-degree approximation error; the skewed external degrees give a
    decisively supercritical process whose epidemics occupy a macroscopic
    share of agents while die-outs stay tiny.
    """
    internal = MarginalPmf(np.array([1, 3]), np.array([0.85, 0.15]))
    external = MarginalPmf(np.array([0, 12]), np.array([0.94, 0.06]))
    return SystemModel(
        degree_dists=(product_pmf(internal, external), product_pmf(external, internal)),
        infection=[[np.nan, 1.0], [1.0, np.nan]],
        vulnerability=(VulnerabilityProfile(kind="power-law", scale=1.0, exponent=1.0),) * 2,
        internal_degree_floor=True,
        name="example1-analog",
    )


@pytest.fixture(scope="session")
def analog_model() -> SystemModel:
    return example1_analog()


# ---------------------------------------------------------------------------
# Randomized model generation


def random_marginal(rng: np.random.Generator, max_degree: int = 4, min_degree: int = 0,
                    max_points: int = 5) -> MarginalPmf:
    degrees = np.arange(min_degree, max_degree + 1)
    k = int(rng.integers(2, min(max_points, degrees.size) + 1))
    support = np.sort(rng.choice(degrees, size=k, replace=False))
    mass = rng.dirichlet(np.ones(k))
    return MarginalPmf(support, mass)


def random_joint(rng: np.random.Generator, dimension: int, internal_axis: int | None = None,
                 max_degree: int = 4, dependent: bool = False) -> JointPmf:
    """Random finite joint pmf; ``internal_axis`` gets a degree floor of 1."""
    margs = []
    for axis in range(dimension):
        lo = 1 if axis == internal_axis else 0
        margs.append(random_marginal(rng, max_degree=max_degree, min_degree=lo))
    joint = product_pmf(*margs)
    if not dependent:
        return joint
    # Tilt the product form without touching the support.
    mass = joint.mass * (0.5 + rng.random(joint.n_points))
    return JointPmf(joint.support, mass / mass.sum())


def random_model(rng: np.random.Generator, n_systems: int | None = None,
                 max_degree: int = 4, dependent: bool = False) -> SystemModel:
    n = int(n_systems if n_systems is not None else rng.integers(2, 4))
    dists = tuple(
        random_joint(rng, n, internal_axis=i, max_degree=max_degree, dependent=dependent)
        for i in range(n)
    )
    infection = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if i != j:
                infection[i, j] = float(rng.uniform(0.3, 1.0))
    profiles = tuple(
        VulnerabilityProfile(
            kind="power-law",
            scale=float(rng.uniform(0.4, 1.0)),
            exponent=float(rng.uniform(0.0, 1.0)),
        )
        for _ in range(n)
    )
    return SystemModel(
        degree_dists=dists,
        infection=infection,
        vulnerability=profiles,
        internal_degree_floor=True,
    )


# ---------------------------------------------------------------------------
# Ordered-pair constructions (explicit couplings)


def mean_preserving_spread(rng: np.random.Generator, joint: JointPmf,
                           keep_floor_axis: int | None = None) -> JointPmf | None:
    """Move mass delta/2 from one support point to its two axis neighbors.

    The result has the same mean vector and is smaller in the increasing
    directionally-concave order (componentwise concavity alone gives the
    two-point comparison). Returns None when no eligible point exists.
    """
    entries = joint.as_dict()
    candidates = []
    for vec, m in entries.items():
        if m <= 1e-9:
            continue
        for axis in range(joint.dimension):
            lo = 2 if axis == keep_floor_axis else 1
            if vec[axis] >= lo:
                candidates.append((vec, axis))
    if not candidates:
        return None
    vec, axis = candidates[int(rng.integers(0, len(candidates)))]
    delta = entries[vec] * float(rng.uniform(0.2, 0.8))
    down = tuple(v - 1 if k == axis else v for k, v in enumerate(vec))
    up = tuple(v + 1 if k == axis else v for k, v in enumerate(vec))
    entries[vec] -= delta
    entries[down] = entries.get(down, 0.0) + delta / 2
    entries[up] = entries.get(up, 0.0) + delta / 2
    return JointPmf.from_dict({k: v for k, v in entries.items() if v > 0})


def concordance_transfer(rng: np.random.Generator, joint: JointPmf) -> JointPmf | None:
    """Move mass from two incomparable support points onto their meet and
    join; marginals are untouched and the result is larger in the
    supermodular order. Returns None when no incomparable pair has mass."""
    entries = joint.as_dict()
    keys = [k for k, v in entries.items() if v > 1e-9]
    pairs = []
    for a, b in product(keys, keys):
        if any(x < y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b)):
            pairs.append((a, b))
    if not pairs:
        return None
    a, b = pairs[int(rng.integers(0, len(pairs)))]
    delta = min(entries[a], entries[b]) * float(rng.uniform(0.2, 0.8))
    meet = tuple(min(x, y) for x, y in zip(a, b))
    join = tuple(max(x, y) for x, y in zip(a, b))
    entries[a] -= delta
    entries[b] -= delta
    entries[meet] = entries.get(meet, 0.0) + delta
    entries[join] = entries.get(join, 0.0) + delta
    return JointPmf.from_dict({k: v for k, v in entries.items() if v > 0})


# ---------------------------------------------------------------------------
# Independent oracles


def brute_force_children(model: SystemModel, cs: int, drop_internal: bool) -> dict:
    """Offspring law by explicit enumeration of every per-edge outcome.

    Walks all 2^(number of potential children) infection patterns with
    per-edge Bernoulli weights; no binomial formulas shared with the
    implementation.
    """
    from cascade_lab.children import thinning_probabilities

    n = model.n_systems
    probs = thinning_probabilities(model, cs)
    acc: dict[tuple, float] = {}
    pmf = model.degree_dists[cs]
    for d_vec, mass in zip(pmf.support, pmf.mass):
        d = [int(x) for x in d_vec]
        if drop_internal:
            d[cs] = max(d[cs] - 1, 0)
        edge_cs = [j for j in range(n) for _ in range(d[j])]
        for pattern in product((0, 1), repeat=len(edge_cs)):
            weight = float(mass)
            counts = [0] * (2 * n)
            for j, bit in zip(edge_cs, pattern):
                weight *= probs[j] if bit else (1.0 - probs[j])
                if bit:
                    counts[n + cs if j == cs else j] += 1
            if weight > 0.0:
                key = tuple(counts)
                acc[key] = acc.get(key, 0.0) + weight
    return acc


def charpoly_spectral_radius(a: np.ndarray) -> float:
    """Largest root modulus of the characteristic polynomial, with the
    coefficients produced by the Faddeev-LeVerrier recursion."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    coeffs = [1.0]
    mk = np.zeros_like(a)
    identity = np.eye(n)
    for k in range(1, n + 1):
        mk = a @ mk + coeffs[-1] * identity
        coeffs.append(float(-np.trace(a @ mk) / k))
    return float(np.max(np.abs(np.roots(coeffs))))


def random_supermodular_function(rng: np.random.Generator, axes: list[np.ndarray]):
    """Nonnegative mix of upper-orthant indicators plus modular terms; both
    pieces are supermodular, so the sum is a valid test function."""
    thresholds = [
        tuple(rng.choice(axis) for axis in axes) for _ in range(int(rng.integers(1, 5)))
    ]
    alphas = rng.uniform(0.1, 1.0, size=len(thresholds))
    modular = [rng.uniform(-1.0, 1.0, size=len(axis)) for axis in axes]
    lookup = [dict(zip(axis.tolist(), g)) for axis, g in zip(axes, modular)]

    def fn(v: tuple) -> float:
        value = sum(
            alpha
            for alpha, t in zip(alphas, thresholds)
            if all(x >= y for x, y in zip(v, t))
        )
        value += sum(lookup[j][v[j]] for j in range(len(v)))
        return float(value)

    return fn


def random_idcv_function(rng: np.random.Generator, dimension: int):
    """Minimum of increasing affine functions plus increasing-concave
    marginal terms: increasing, componentwise concave, and submodular."""
    planes = rng.uniform(0.0, 1.0, size=(int(rng.integers(2, 5)), dimension))
    offsets = rng.uniform(-1.0, 1.0, size=planes.shape[0])
    concs = rng.uniform(0.1, 1.0, size=dimension)

    def fn(v: tuple) -> float:
        x = np.asarray(v, dtype=np.float64)
        return float(np.min(planes @ x + offsets) + np.sum(concs * np.sqrt(x + 1.0)))

    return fn


def expectation(pmf, fn) -> float:
    return float(
        sum(m * fn(tuple(int(x) for x in v)) for v, m in zip(pmf.support, pmf.mass))
    )
