"""Adaptive tensor Gauss-Legendre quadrature with singularity-aware splitting.

Cells start from the integration box split at declared singular coordinates;
an error-ordered heap then bisects the worst cells (batched, so the
integrand is called on large point blocks).  Cells narrower than the width
floor are frozen with their error contribution reported, which gives
oscillatory integrands geometric refinement toward the singularity with an
honest final bound instead of an endless subdivision.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_floor: float = 1e-14
    max_cells: int = 2 ** 20
    min_width: float = 1e-13
    gl_order: int = 16
    gl_order_low: int = 10
    batch: int = 64


class QuadratureNonConvergence(RuntimeError):
    """Cell budget exhausted above tolerance; carries best value and bound."""

    def __init__(self, value: float, error_bound: float, cells: int):
        self.value = value
        self.error_bound = error_bound
        self.cells = cells
        super().__init__(
            f"quadrature budget exhausted: value={value!r}, bound={error_bound!r}, cells={cells}")


@lru_cache(maxsize=None)
def _gl_nodes(order: int, n: int):
    """Tensor Gauss-Legendre nodes and weights on the unit cube [0,1]^n."""
    x, w = np.polynomial.legendre.leggauss(order)
    x01, w01 = (x + 1.0) / 2.0, w / 2.0
    grids = np.meshgrid(*([x01] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([w01] * n), indexing="ij")
    wts = np.ones(pts.shape[0])
    for g in wgrids:
        wts = wts * g.ravel()
    return pts, wts


def _batch_values(f, lows: np.ndarray, highs: np.ndarray, order: int) -> np.ndarray:
    """Gauss-Legendre value of f over each box; one call to f."""
    nb, n = lows.shape
    ref, wts = _gl_nodes(order, n)
    widths = highs - lows
    pts = lows[:, None, :] + ref[None, :, :] * widths[:, None, :]
    vals = np.asarray(f(pts.reshape(-1, n)), dtype=float).reshape(nb, -1)
    vols = np.prod(widths, axis=1)
    return (vals * wts[None, :]).sum(axis=1) * vols


def _initial_boxes(lo: np.ndarray, hi: np.ndarray,
                   split_coords: Sequence[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]:
    axes = []
    for j in range(len(lo)):
        cuts = [c for c in (split_coords[j] if split_coords else []) if lo[j] < c < hi[j]]
        axes.append(np.array(sorted({float(lo[j]), float(hi[j]), *map(float, cuts)})))
    los, his = [], []
    for combo in itertools.product(*[range(len(a) - 1) for a in axes]):
        los.append([axes[j][c] for j, c in enumerate(combo)])
        his.append([axes[j][c + 1] for j, c in enumerate(combo)])
    return np.asarray(los, dtype=float), np.asarray(his, dtype=float)


def integrate_box(f: Callable[[np.ndarray], np.ndarray], lo, hi,
                  split_coords: Sequence[Sequence[float]] = (),
                  config: QuadratureConfig = QuadratureConfig(),
                  strict: bool = True) -> Tuple[float, float, int]:
    """Integrate f over the box [lo, hi]; returns (value, error_bound, cells)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    if np.any(hi <= lo):
        return 0.0, 0.0, 0
    los, his = _initial_boxes(lo, hi, split_coords or [[]] * n)

    def children_of(lws, hws):
        """Bisect each box along its widest axis; return children and GL values."""
        widths = hws - lws
        axes = np.argmax(widths, axis=1)
        mid = (lws + hws) / 2.0
        c_lo = np.repeat(lws, 2, axis=0)
        c_hi = np.repeat(hws, 2, axis=0)
        for i, ax in enumerate(axes):
            c_hi[2 * i, ax] = mid[i, ax]
            c_lo[2 * i + 1, ax] = mid[i, ax]
        vals = _batch_values(f, c_lo, c_hi, config.gl_order)
        return c_lo, c_hi, vals

    # entry: id -> (lo, hi, refined_value, err, child boxes and their coarse values)
    entries = {}
    heap: List[Tuple[float, int]] = []
    counter = itertools.count()
    total_v = 0.0
    total_e = 0.0
    total_a = 0.0  # sum of |cell integrals|: sets the roundoff resolution
    ncells = los.shape[0]

    def push(lws, hws, coarse_vals):
        nonlocal total_v, total_e, total_a
        c_lo, c_hi, c_vals = children_of(lws, hws)
        # embedded low-order values catch error in directions the widest-axis
        # bisection cannot see (e.g. integrands constant along the split axis)
        low_vals = _batch_values(f, lws, hws, config.gl_order_low)
        for i in range(lws.shape[0]):
            rv = c_vals[2 * i] + c_vals[2 * i + 1]
            err = max(abs(rv - coarse_vals[i]), abs(coarse_vals[i] - low_vals[i]))
            ident = next(counter)
            entries[ident] = (lws[i], hws[i], rv, err,
                              c_lo[2 * i:2 * i + 2].copy(), c_hi[2 * i:2 * i + 2].copy(),
                              c_vals[2 * i:2 * i + 2].copy())
            total_v += rv
            total_e += err
            total_a += abs(rv)
            heapq.heappush(heap, (-err, ident))

    push(los, his, _batch_values(f, los, his, config.gl_order))
    budget_hit = False
    while heap:
        tol = max(config.abs_floor, config.rel_tol * abs(total_v),
                  64 * np.finfo(float).eps * total_a)
        if total_e <= tol:
            break
        batch_ids = []
        while heap and len(batch_ids) < config.batch:
            neg_err, ident = heapq.heappop(heap)
            if -neg_err <= tol / (2 * max(len(entries), 1)):
                break  # remaining cells are individually negligible
            batch_ids.append(ident)
        if not batch_ids:
            break
        split_lo, split_hi, split_coarse = [], [], []
        for ident in batch_ids:
            blo, bhi, rv, err, c_lo, c_hi, c_vals = entries[ident]
            width = float(np.max(bhi - blo))
            if width / 2.0 < config.min_width:
                continue  # frozen at the width floor; err stays in the bound
            if ncells >= config.max_cells:
                budget_hit = True
                continue
            del entries[ident]
            total_v -= rv
            total_e -= err
            total_a -= abs(rv)
            split_lo.append(c_lo)
            split_hi.append(c_hi)
            split_coarse.append(c_vals)
            ncells += 2
        if not split_lo:
            break
        push(np.concatenate(split_lo), np.concatenate(split_hi),
             np.concatenate(split_coarse))
    tol = max(config.abs_floor, config.rel_tol * abs(total_v),
              64 * np.finfo(float).eps * total_a)
    if budget_hit and total_e > tol and strict:
        raise QuadratureNonConvergence(total_v, total_e, ncells)
    return float(total_v), float(total_e), ncells
