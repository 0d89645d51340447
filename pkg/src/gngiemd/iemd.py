"""Order-penalized Earth Mover's Distance between signatures.

Costs are ``||w_pi - w_qj||`` on the diagonal and ``i * j * ||w_pi - w_qj||``
off it (1-based cluster indices). Every cluster, real or virtual, carries
unit mass, so the transportation problem is balanced with total flow 6 and
reduces to an assignment problem. The distance is the optimal cost divided
by the total flow.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .features import N_CLUSTERS, Signature

_IDX = np.arange(1, N_CLUSTERS + 1, dtype=float)
PENALTY = np.where(np.eye(N_CLUSTERS, dtype=bool), 1.0, np.outer(_IDX, _IDX))


def _weights(s) -> np.ndarray:
    return s.clusters if isinstance(s, Signature) else np.asarray(s, dtype=float)


def cost_matrix(p, q) -> np.ndarray:
    wp, wq = _weights(p), _weights(q)
    diff = np.linalg.norm(wp[:, None, :] - wq[None, :, :], axis=2)
    return PENALTY * diff


def unit_mass(s=None) -> np.ndarray:
    """Default cluster mass: 1 per cluster."""
    return np.ones(N_CLUSTERS)


def l1_mass(s) -> np.ndarray:
    """Alternative reading: each cluster's mass is the L1 norm of its weights."""
    return np.abs(_weights(s)).sum(axis=1)


def solve_flow(cost, supply, demand) -> np.ndarray:
    """Minimum-cost flow under the transportation constraints.

    Row sums stay within ``supply``, column sums within ``demand``, and the
    total equals the smaller of the two totals. Equal uniform masses are
    solved as an assignment problem, anything else as a linear program.
    """
    c = np.asarray(cost, dtype=float)
    s = np.asarray(supply, dtype=float)
    t = np.asarray(demand, dtype=float)
    if c.shape != (len(s), len(t)):
        raise ValueError("cost shape does not match masses")
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("infeasible: negative mass")
    if len(s) == len(t) and np.all(s == s[0]) and np.all(t == s[0]):
        rows, cols = linear_sum_assignment(c)
        f = np.zeros_like(c)
        f[rows, cols] = s[0]
        return f

    m, n = c.shape
    total = min(s.sum(), t.sum())
    a_ub = np.zeros((m + n, m * n))
    for i in range(m):
        a_ub[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        a_ub[m + j, j::n] = 1.0
    res = linprog(c.ravel(), A_ub=a_ub, b_ub=np.concatenate([s, t]),
                  A_eq=np.ones((1, m * n)), b_eq=[total], bounds=(0, None), method="highs")
    if res.status != 0:
        raise ValueError(f"transportation problem failed: {res.message}")
    return res.x.reshape(m, n)


def iemd(p, q, mass=unit_mass) -> float:
    f = solve_flow(cost_matrix(p, q), mass(p), mass(q))
    total = f.sum()
    if total == 0:
        return 0.0
    return float((cost_matrix(p, q) * f).sum() / total)


_PERMS = np.array(list(itertools.permutations(range(N_CLUSTERS))))


def brute_force_iemd(p, q) -> float:
    """Minimum over all 720 cluster permutations of the mean matched cost."""
    c = cost_matrix(p, q)
    return float(c[np.arange(N_CLUSTERS), _PERMS].sum(axis=1).min() / N_CLUSTERS)


def _stack(sigs) -> np.ndarray:
    return np.stack([_weights(s) for s in sigs]) if len(sigs) else np.zeros((0, N_CLUSTERS, 7))


def iemd_matrix(ps, qs=None) -> np.ndarray:
    """Pairwise unit-mass distances; symmetric input evaluates each pair once."""
    P = _stack(ps)
    sym = qs is None
    Q = P if sym else _stack(qs)
    out = np.zeros((len(P), len(Q)))
    rows = np.arange(N_CLUSTERS)
    for a in range(len(P)):
        lo = a + 1 if sym else 0
        if lo >= len(Q):
            continue
        diff = np.linalg.norm(P[a][None, :, None, :] - Q[lo:, None, :, :], axis=3)
        costs = PENALTY * diff
        for k, c in enumerate(costs):
            _, cols = linear_sum_assignment(c)
            out[a, lo + k] = c[rows, cols].sum() / N_CLUSTERS
    if sym:
        out = out + out.T
    return out


def write_distance_csv(d: np.ndarray, path: str | Path) -> None:
    lines = [",".join(repr(float(x)) for x in row) for row in d]
    Path(path).write_text("\n".join(lines) + "\n")
