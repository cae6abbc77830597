"""Episode-cost kernels with two interchangeable backends.

The numba backend compiles the per-episode loop; the numpy backend runs a
vectorized twin. Both accumulate in the same order (independent outcome
columns in declaration order, then exclusive groups, always adding 0.0 for
unrealized outcomes), so their results are bit-identical, not merely close.
Select with AVRISK_BACKEND=numba|numpy; numba is the default and falls back
to numpy when unavailable.
"""

from __future__ import annotations

import importlib.util
import os
import warnings

import numpy as np

__all__ = ["BACKEND", "episode_costs", "episode_costs_numba", "episode_costs_numpy"]


def _pick_backend() -> str:
    requested = os.environ.get("AVRISK_BACKEND", "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"AVRISK_BACKEND must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and importlib.util.find_spec("numba") is None:
        warnings.warn("numba not importable; falling back to the numpy backend", RuntimeWarning)
        return "numpy"
    return requested


BACKEND = _pick_backend()


def _episode_costs_loop(u, ind_p, ind_m, grp_off, grp_p, grp_m):
    n = u.shape[0]
    n_ind = ind_p.shape[0]
    n_grp = grp_off.shape[0] - 1
    out = np.zeros(n)
    for i in range(n):
        c = 0.0
        for j in range(n_ind):
            c = c + (ind_m[j] if u[i, j] < ind_p[j] else 0.0)
        for g in range(n_grp):
            ug = u[i, n_ind + g]
            add = 0.0
            acc = 0.0
            for k in range(grp_off[g], grp_off[g + 1]):
                acc = acc + grp_p[k]
                if ug < acc:
                    add = grp_m[k]
                    break
            c = c + add
        out[i] = c
    return out


_numba_compiled = None


def episode_costs_numba(u, ind_p, ind_m, grp_off, grp_p, grp_m):
    global _numba_compiled
    if _numba_compiled is None:
        from numba import njit

        _numba_compiled = njit(cache=True, nogil=True)(_episode_costs_loop)
    return _numba_compiled(u, ind_p, ind_m, grp_off, grp_p, grp_m)


def episode_costs_numpy(u, ind_p, ind_m, grp_off, grp_p, grp_m):
    n = u.shape[0]
    n_ind = ind_p.shape[0]
    costs = np.zeros(n)
    for j in range(n_ind):
        costs += np.where(u[:, j] < ind_p[j], ind_m[j], 0.0)
    for g in range(grp_off.shape[0] - 1):
        lo = grp_off[g]
        hi = grp_off[g + 1]
        # cumsum partial sums match the scalar scan's accumulation exactly
        cum = np.cumsum(grp_p[lo:hi])
        ug = u[:, n_ind + g]
        idx = np.searchsorted(cum, ug, side="right")
        realized = idx < (hi - lo)
        mg = grp_m[lo:hi]
        costs += np.where(realized, mg[np.minimum(idx, hi - lo - 1)], 0.0)
    return costs


def episode_costs(u, ind_p, ind_m, grp_off, grp_p, grp_m):
    if BACKEND == "numba":
        return episode_costs_numba(u, ind_p, ind_m, grp_off, grp_p, grp_m)
    return episode_costs_numpy(u, ind_p, ind_m, grp_off, grp_p, grp_m)
