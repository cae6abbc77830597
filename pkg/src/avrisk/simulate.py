"""Seeded Monte Carlo realization of scenario outcomes.

Episodes draw one uniform per independent outcome and one per exclusive
group. Uniforms come from fixed 4096-episode chunks, each on its own
PCG64 substream spawned from (seed, chunk index), so estimates are
bit-identical for a given seed regardless of worker count, and any single
episode can be reconstructed from (seed, episode index).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from . import _kernels
from .engine import apply_modifiers, cumulative_risk
from .errors import UnassignedOutcomeWarning
from .model import Action, Interval, Scenario, ENVIRONMENT_PARTY

__all__ = [
    "CHUNK",
    "SimulationEstimate",
    "Episode",
    "sample_episode",
    "episode_cost",
    "simulate",
    "ConsistencyRow",
    "ConsistencyReport",
    "consistency_check",
    "party_exposure",
]

CHUNK = 4096

# |z| bound for agreement between analytic and empirical means.
Z_LIMIT = 4.0


@dataclass(frozen=True, slots=True)
class SimulationEstimate:
    n: int
    mean: float
    stderr: float
    ci95: Interval
    seed: int


@dataclass(frozen=True, slots=True)
class Episode:
    realized: tuple[str, ...]
    cost: float


@dataclass(frozen=True, slots=True)
class _Layout:
    """Kernel-ready column layout of an action's outcomes.

    Independent outcomes occupy one uniform column each, in declaration
    order; each exclusive group takes one further column, groups ordered by
    first appearance, members in declaration order.
    """

    ind_ids: tuple[str, ...]
    ind_p: np.ndarray
    ind_m: np.ndarray
    grp_ids: tuple[tuple[str, ...], ...]
    grp_off: np.ndarray
    grp_p: np.ndarray
    grp_m: np.ndarray

    @property
    def n_cols(self) -> int:
        return len(self.ind_ids) + len(self.grp_ids)


def _layout(action: Action) -> _Layout:
    ind_ids: list[str] = []
    ind_p: list[float] = []
    ind_m: list[float] = []
    groups: dict[str, list[tuple[str, float, float]]] = {}
    for o in action.outcomes:
        if o.exclusive_group is None:
            ind_ids.append(o.id)
            ind_p.append(o.probability)
            ind_m.append(o.magnitude)
        else:
            groups.setdefault(o.exclusive_group, []).append((o.id, o.probability, o.magnitude))

    grp_ids: list[tuple[str, ...]] = []
    grp_off = [0]
    grp_p: list[float] = []
    grp_m: list[float] = []
    for members in groups.values():
        grp_ids.append(tuple(oid for oid, _, _ in members))
        grp_p.extend(p for _, p, _ in members)
        grp_m.extend(m for _, _, m in members)
        grp_off.append(len(grp_p))

    return _Layout(
        ind_ids=tuple(ind_ids),
        ind_p=np.asarray(ind_p, dtype=np.float64),
        ind_m=np.asarray(ind_m, dtype=np.float64),
        grp_ids=tuple(grp_ids),
        grp_off=np.asarray(grp_off, dtype=np.int64),
        grp_p=np.asarray(grp_p, dtype=np.float64),
        grp_m=np.asarray(grp_m, dtype=np.float64),
    )


def _substream(seed: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,))
    return np.random.Generator(np.random.PCG64(ss))


def sample_episode(action: Action, rng: np.random.Generator) -> Episode:
    """Realize the action's outcomes once, drawing from `rng`.

    The cost accumulation mirrors the kernels bit for bit: independent
    outcomes first, then group picks, one add per column.
    """
    lay = _layout(action)
    u = rng.random(lay.n_cols)
    realized: list[str] = []
    cost = 0.0
    for j, oid in enumerate(lay.ind_ids):
        if u[j] < lay.ind_p[j]:
            realized.append(oid)
            cost = cost + lay.ind_m[j]
        else:
            cost = cost + 0.0
    n_ind = len(lay.ind_ids)
    for g, member_ids in enumerate(lay.grp_ids):
        ug = u[n_ind + g]
        add = 0.0
        acc = 0.0
        for k in range(lay.grp_off[g], lay.grp_off[g + 1]):
            acc = acc + lay.grp_p[k]
            if ug < acc:
                add = lay.grp_m[k]
                realized.append(member_ids[k - lay.grp_off[g]])
                break
        cost = cost + add
    return Episode(tuple(realized), float(cost))


def episode_cost(action: Action, seed: int, index: int) -> Episode:
    """Reconstruct episode `index` of a simulation run with `seed`."""
    if index < 0:
        raise ValueError("index must be >= 0")
    lay = _layout(action)
    rng = _substream(seed, index // CHUNK)
    row = index % CHUNK
    if row and lay.n_cols:
        rng.random((row, lay.n_cols))  # skip earlier rows of the chunk
    return sample_episode(action, rng)


def _chunk_plan(n: int) -> list[tuple[int, int]]:
    chunks = []
    done = 0
    index = 0
    while done < n:
        rows = min(CHUNK, n - done)
        chunks.append((index, rows))
        done += rows
        index += 1
    return chunks


def simulate(action: Action, n: int, seed: int = 0, workers: int = 1) -> SimulationEstimate:
    """Estimate the action's expected cost from n seeded episodes.

    Identical (action, n, seed) gives a bit-identical estimate at any
    worker count: each chunk's statistics depend only on its substream, and
    the reduction runs in chunk order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    lay = _layout(action)

    def job(item: tuple[int, int]) -> tuple[float, float]:
        index, rows = item
        u = _substream(seed, index).random((rows, lay.n_cols))
        costs = _kernels.episode_costs(u, lay.ind_p, lay.ind_m, lay.grp_off, lay.grp_p, lay.grp_m)
        return float(np.sum(costs)), float(np.sum(costs * costs))

    plan = _chunk_plan(n)
    if workers == 1:
        parts = [job(item) for item in plan]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, plan))

    total = math.fsum(s for s, _ in parts)
    total_sq = math.fsum(q for _, q in parts)
    mean = total / n
    if n == 1:
        stderr = 0.0
    else:
        var = max((total_sq - n * mean * mean) / (n - 1), 0.0)
        stderr = math.sqrt(var / n)
    return SimulationEstimate(
        n=n,
        mean=mean,
        stderr=stderr,
        ci95=Interval(mean - 1.96 * stderr, mean + 1.96 * stderr),
        seed=seed,
    )


@dataclass(frozen=True, slots=True)
class ConsistencyRow:
    action_id: str
    analytic: float
    empirical: float
    stderr: float
    z_score: float
    passed: bool


@dataclass(frozen=True, slots=True)
class ConsistencyReport:
    rows: tuple[ConsistencyRow, ...]
    n: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _z(mean: float, analytic: float, stderr: float) -> float:
    diff = mean - analytic
    # Degenerate actions make stderr collapse to float noise; treat
    # differences inside the noise floor as exact agreement.
    noise = 1e-9 * max(abs(mean), abs(analytic)) + 1e-12
    if abs(diff) <= noise:
        return 0.0
    if stderr == 0.0:
        return math.copysign(math.inf, diff)
    return diff / stderr


def consistency_check(
    scenario: Scenario,
    n: int,
    seed: int = 0,
    workers: int = 1,
    analytic_override: Optional[Mapping[str, float]] = None,
) -> ConsistencyReport:
    """Compare analytic cumulative risk against the empirical mean per
    action; passes iff |z| <= 4 everywhere.

    Probabilities are adjusted for true party attributes internally, on
    both sides, so pass the scenario as parsed. `analytic_override` swaps
    in foreign analytic values and exists for negative-control testing.
    """
    adjusted, _ = apply_modifiers(scenario)
    override = analytic_override or {}
    rows = []
    for action in adjusted.actions:
        analytic = override.get(action.id, cumulative_risk(action).penalty)
        est = simulate(action, n, seed, workers)
        z = _z(est.mean, analytic, est.stderr)
        rows.append(
            ConsistencyRow(
                action_id=action.id,
                analytic=analytic,
                empirical=est.mean,
                stderr=est.stderr,
                z_score=z,
                passed=abs(z) <= Z_LIMIT,
            )
        )
    return ConsistencyReport(rows=tuple(rows), n=n, seed=seed)


def party_exposure(
    scenario: Scenario,
    action: Union[Action, str],
    n: int,
    seed: int = 0,
    workers: int = 1,
) -> dict[str, float]:
    """Empirical expected harm per party under one action.

    Outcomes without a party are pooled under 'environment' with a
    warning. Realization counts are integers, so the per-party figures are
    exactly worker-invariant.
    """
    adjusted, _ = apply_modifiers(scenario)
    act = adjusted.action(action) if isinstance(action, str) else adjusted.action(action.id)
    if n < 1:
        raise ValueError("n must be >= 1")
    lay = _layout(act)

    def job(item: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        index, rows = item
        u = _substream(seed, index).random((rows, lay.n_cols))
        ind_counts = np.zeros(len(lay.ind_ids), dtype=np.int64)
        for j in range(len(lay.ind_ids)):
            ind_counts[j] = np.count_nonzero(u[:, j] < lay.ind_p[j])
        grp_counts = np.zeros(len(lay.grp_p), dtype=np.int64)
        n_ind = len(lay.ind_ids)
        for g in range(len(lay.grp_ids)):
            lo = int(lay.grp_off[g])
            hi = int(lay.grp_off[g + 1])
            cum = np.cumsum(lay.grp_p[lo:hi])
            idx = np.searchsorted(cum, u[:, n_ind + g], side="right")
            picked = idx[idx < (hi - lo)]
            grp_counts[lo:hi] += np.bincount(picked, minlength=hi - lo)
        return ind_counts, grp_counts

    plan = _chunk_plan(n)
    if workers == 1:
        parts = [job(item) for item in plan]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, plan))

    ind_counts = np.zeros(len(lay.ind_ids), dtype=np.int64)
    grp_counts = np.zeros(len(lay.grp_p), dtype=np.int64)
    for ic, gc in parts:
        ind_counts += ic
        grp_counts += gc

    counts: dict[str, int] = {}
    for j, oid in enumerate(lay.ind_ids):
        counts[oid] = int(ind_counts[j])
    for g, member_ids in enumerate(lay.grp_ids):
        for k, oid in enumerate(member_ids):
            counts[oid] = int(grp_counts[int(lay.grp_off[g]) + k])

    exposure: dict[str, float] = {p.id: 0.0 for p in adjusted.parties}
    unassigned: list[str] = []
    for o in act.outcomes:
        share = o.magnitude * counts[o.id] / n
        if o.affected_party is None:
            unassigned.append(o.id)
            exposure[ENVIRONMENT_PARTY] = exposure.get(ENVIRONMENT_PARTY, 0.0) + share
        else:
            exposure[o.affected_party] += share
    if unassigned:
        warnings.warn(
            f"outcomes with no affected party pooled under '{ENVIRONMENT_PARTY}': {', '.join(unassigned)}",
            UnassignedOutcomeWarning,
        )
    return exposure
