"""Compactly supported smooth test functions with exact derivatives.

A TestFn is a finite sum of core atoms (bump, bump-times-monomial, or
tensor-product core), each translated, dilated, and weighted by a vector
coefficient in R^d.  Derivatives up to ``max_deriv_order`` evaluate through
the closed-form prefactor recursion in :mod:`ptdiff.cores`, so integration
by parts downstream is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import cores
from .cores import UnsupportedOrderError
from .tensor import MultiIndex, SymTensor, opnorm_bounds, xi_set, zero_index

DEFAULT_MAX_DERIV_ORDER = 6


@dataclass(frozen=True)
class CoreAtom:
    """coeff * core((x - center) / radius); support B(center, radius)."""

    kind: str
    core_xi: Optional[Tuple[int, ...]]
    center: Tuple[float, ...]
    radius: float
    coeff: Tuple[float, ...]


@dataclass(frozen=True)
class TestFn:
    n: int
    d: int
    atoms: Tuple[CoreAtom, ...]
    support_center: Tuple[float, ...]
    support_radius: float
    max_deriv_order: int = DEFAULT_MAX_DERIV_ORDER
    label: str = ""

    @property
    def deriv_offset(self) -> MultiIndex:
        return zero_index(self.n)

    def eval_deriv(self, xi: MultiIndex, x) -> np.ndarray:
        """D^xi phi at points (npts, n) or a single point (n,); values in R^d."""
        if xi.order > self.max_deriv_order:
            raise UnsupportedOrderError(
                f"derivative order {xi.order} exceeds configured bound {self.max_deriv_order}")
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        pts = x.reshape(-1, self.n)
        out = np.zeros((pts.shape[0], self.d))
        for a in self.atoms:
            u = (pts - np.asarray(a.center)) / a.radius
            vals = cores.core_eval(self.n, a.kind, a.core_xi, xi, u)
            scale = a.radius ** (-xi.order)
            out += (scale * vals)[:, None] * np.asarray(a.coeff)[None, :]
        return out[0] if single else out

    def __call__(self, x) -> np.ndarray:
        return self.eval_deriv(zero_index(self.n), x)

    def rescale(self, a, r: float) -> "TestFn":
        """x -> phi((x - a) / r); derivatives pick up the exact r^{-|xi|}."""
        if r <= 0:
            raise ValueError("rescale radius must be positive")
        a = np.asarray(a, dtype=float).reshape(self.n)
        atoms = tuple(
            replace(t, center=tuple(a + r * np.asarray(t.center)), radius=r * t.radius)
            for t in self.atoms)
        return replace(
            self, atoms=atoms,
            support_center=tuple(a + r * np.asarray(self.support_center)),
            support_radius=r * self.support_radius)

    def scaled_by(self, c: float) -> "TestFn":
        atoms = tuple(replace(t, coeff=tuple(c * np.asarray(t.coeff))) for t in self.atoms)
        return replace(self, atoms=atoms)

    def derivative_view(self, xi: MultiIndex) -> "DerivedTestFn":
        return DerivedTestFn(self, xi)

    def plus(self, other: "TestFn") -> "TestFn":
        if (self.n, self.d) != (other.n, other.d):
            raise ValueError("incompatible test functions")
        sc = np.asarray(self.support_center)
        oc = np.asarray(other.support_center)
        # smallest ball containing both support balls
        dist = float(np.linalg.norm(sc - oc))
        if dist < 1e-15:
            center, radius = sc, max(self.support_radius, other.support_radius)
        else:
            lo = min(-self.support_radius, dist - other.support_radius)
            hi = max(self.support_radius, dist + other.support_radius)
            center = sc + (oc - sc) / dist * (lo + hi) / 2
            radius = (hi - lo) / 2
        return replace(self, atoms=self.atoms + other.atoms,
                       support_center=tuple(center), support_radius=radius,
                       max_deriv_order=min(self.max_deriv_order, other.max_deriv_order))


@dataclass(frozen=True)
class DerivedTestFn:
    """View of D^offset phi, itself usable as a test function."""

    base: TestFn
    offset: MultiIndex

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def support_center(self):
        return self.base.support_center

    @property
    def support_radius(self) -> float:
        return self.base.support_radius

    @property
    def max_deriv_order(self) -> int:
        return self.base.max_deriv_order - self.offset.order

    @property
    def label(self) -> str:
        return f"D^{self.offset.entries} {self.base.label}"

    def eval_deriv(self, xi: MultiIndex, x) -> np.ndarray:
        return self.base.eval_deriv(xi + self.offset, x)

    def __call__(self, x) -> np.ndarray:
        return self.eval_deriv(zero_index(self.n), x)

    def derivative_view(self, xi: MultiIndex) -> "DerivedTestFn":
        return DerivedTestFn(self.base, self.offset + xi)


def standard_bump(n: int, d: int = 1, direction: int = 0,
                  max_deriv_order: int = DEFAULT_MAX_DERIV_ORDER, label: str = "bump") -> TestFn:
    coeff = tuple(1.0 if j == direction else 0.0 for j in range(d))
    atom = CoreAtom(cores.BUMP, None, (0.0,) * n, 1.0, coeff)
    return TestFn(n, d, (atom,), (0.0,) * n, 1.0, max_deriv_order, label)


def bump_monomial(n: int, xi: Tuple[int, ...], d: int = 1, direction: int = 0,
                  max_deriv_order: int = DEFAULT_MAX_DERIV_ORDER) -> TestFn:
    coeff = tuple(1.0 if j == direction else 0.0 for j in range(d))
    atom = CoreAtom(cores.BUMP_MONOMIAL, tuple(xi), (0.0,) * n, 1.0, coeff)
    return TestFn(n, d, (atom,), (0.0,) * n, 1.0, max_deriv_order, f"bump*x^{tuple(xi)}")


def _sum_of_bumps(n: int, d: int, terms: Sequence[Tuple[np.ndarray, float, float]],
                  direction: int, label: str) -> TestFn:
    atoms = []
    for center, radius, weight in terms:
        coeff = tuple(weight if j == direction else 0.0 for j in range(d))
        atoms.append(CoreAtom(cores.BUMP, None, tuple(np.asarray(center, float)), radius, coeff))
    return TestFn(n, d, tuple(atoms), (0.0,) * n, 1.0, DEFAULT_MAX_DERIV_ORDER, label)


def _plateau_terms(n: int, width: float, signed_axis: Optional[int] = None):
    """Overlapping bump translates approximating a plateau on B(0, 1)."""
    step = width / 2.0
    reach = 1.0 - width
    grid_1d = np.arange(-reach, reach + step / 2, step)
    terms = []
    for center in itertools.product(grid_1d, repeat=n):
        c = np.asarray(center)
        if np.linalg.norm(c) + width > 1.0:
            continue
        w = 1.0
        if signed_axis is not None:
            if abs(c[signed_axis]) < width / 2:
                continue
            w = 1.0 if c[signed_axis] > 0 else -1.0
        terms.append((c, width, w))
    return terms


def seminorm(phi, i: int, K: Optional[Tuple[Sequence[float], float]] = None,
             grid_points: int = 512, rel_tol: float = 1e-4) -> float:
    """sup over K of the operator norm of D^i phi.

    Dense grid scan (>= grid_points per axis over the relevant box) followed
    by local refinement; the result is certified from below at the stated
    relative tolerance.  K defaults to the support ball.
    """
    n = phi.n
    if i > phi.max_deriv_order:
        raise UnsupportedOrderError(f"seminorm order {i} above derivative bound")
    sc = np.asarray(phi.support_center, float)
    sr = phi.support_radius
    if K is None:
        lo, hi = sc - sr, sc + sr
    else:
        kc = np.asarray(K[0], float).reshape(n)
        kr = float(K[1])
        lo = np.maximum(sc - sr, kc - kr)
        hi = np.minimum(sc + sr, kc + kr)
        if np.any(lo >= hi):
            return 0.0
    axes = [np.linspace(lo[j], hi[j], max(grid_points, 8) + 1) for j in range(n)]
    if n == 1:
        pts = axes[0][:, None]
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    indices = xi_set(n, i)
    values = {xi: phi.eval_deriv(xi, pts) for xi in indices}
    norms = _pointwise_opnorm(n, i, values, pts.shape[0], phi.d)
    best_idx = int(np.argmax(norms))
    best = float(norms[best_idx])
    # local refinement around the grid argmax
    center = pts[best_idx]
    width = float(np.max((hi - lo))) / max(grid_points, 8)
    for _ in range(8):
        local_axes = [np.linspace(max(lo[j], center[j] - width),
                                  min(hi[j], center[j] + width), 17) for j in range(n)]
        if n == 1:
            lpts = local_axes[0][:, None]
        else:
            mesh = np.meshgrid(*local_axes, indexing="ij")
            lpts = np.stack([m.ravel() for m in mesh], axis=1)
        lvals = {xi: phi.eval_deriv(xi, lpts) for xi in indices}
        lnorms = _pointwise_opnorm(n, i, lvals, lpts.shape[0], phi.d)
        j = int(np.argmax(lnorms))
        new_best = float(lnorms[j])
        improved = new_best > best
        if improved:
            center = lpts[j]
        if new_best <= best * (1 + rel_tol):
            best = max(best, new_best)
            break
        best = new_best
        width /= 8.0
    return best


def _pointwise_opnorm(n: int, degree: int, values, npts: int, d: int) -> np.ndarray:
    """Operator norm of the degree-i derivative tensor at each point."""
    if degree == 0:
        return np.linalg.norm(values[zero_index(n)], axis=1)
    if n == 1:
        return np.linalg.norm(values[MultiIndex((degree,))], axis=1)
    if n == 2:
        from .tensor import multinomial
        thetas = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
        best = np.zeros(npts)
        for t in thetas:
            c, s = np.cos(t), np.sin(t)
            acc = np.zeros((npts, d))
            for xi, v in values.items():
                acc += (multinomial(xi) * c ** xi.entries[0] * s ** xi.entries[1]) * v
            best = np.maximum(best, np.linalg.norm(acc, axis=1))
        return best
    # higher n: weighted l1 upper bound per point (documented fallback)
    from .tensor import multinomial
    acc = np.zeros(npts)
    for xi, v in values.items():
        acc += multinomial(xi) * np.linalg.norm(v, axis=1)
    return acc


@dataclass(frozen=True)
class ProbeDictionary:
    """Finite, reproducible surrogate for the unit ball {nu^i(phi) <= 1}.

    All members are supported in B(0, 1) and normalized so that the order-i
    seminorm is 1 within the seminorm tolerance.  Deterministic given
    (n, d, i, size, seed); the member list is prefix-stable in size.
    """

    n: int
    d: int
    i: int
    size: int
    seed: int
    members: Tuple[TestFn, ...]

    def spec(self) -> dict:
        return {"n": self.n, "d": self.d, "i": self.i, "size": self.size, "seed": self.seed}


def _candidate_stream(n: int, d: int, seed: int):
    """Deterministic families first, then seeded random convex combinations."""
    for direction in range(d):
        yield standard_bump(n, d, direction)
    for order in range(1, 4):
        for xi in xi_set(n, order):
            yield bump_monomial(n, xi.entries, d)
    for j in range(n):  # one-sided half-support bumps per axis
        for sign in (+1.0, -1.0):
            c = np.zeros(n)
            c[j] = 0.5 * sign
            b = standard_bump(n, d)
            yield replace(b.rescale(c, 0.5), label=f"half_axis{j}{'+' if sign > 0 else '-'}",
                          support_center=tuple(c), support_radius=0.5)
    for width in (0.2, 0.1, 0.05):
        terms = _plateau_terms(n, width)
        if terms:
            yield _sum_of_bumps(n, d, terms, 0, f"plateau_w{width}")
    for j in range(n):
        for width in (0.2, 0.1):
            terms = _plateau_terms(n, width, signed_axis=j)
            if terms:
                yield _sum_of_bumps(n, d, terms, 0, f"odd_plateau_axis{j}_w{width}")
    rng = np.random.default_rng(seed)
    idx = 0
    while True:
        m = int(rng.integers(3, 9))
        weights = rng.dirichlet(np.ones(m))
        terms = []
        for w in weights:
            radius = float(rng.uniform(0.1, 0.45))
            center = rng.uniform(-1.0, 1.0, size=n)
            nc = np.linalg.norm(center)
            if nc + radius > 1.0:
                center = center / max(nc, 1e-12) * (1.0 - radius) * rng.uniform(0.0, 1.0)
            terms.append((center, radius, float(w)))
        direction = idx % d
        yield _sum_of_bumps(n, d, terms, direction, f"random_{idx}")
        idx += 1


def make_dictionary(n: int, d: int, i: int, size: int, seed: int) -> ProbeDictionary:
    if size < 4:
        raise ValueError("dictionary size must be >= 4")
    members: List[TestFn] = []
    stream = _candidate_stream(n, d, seed)
    while len(members) < size:
        cand = next(stream)
        nu = seminorm(cand, i)
        if nu <= 0:
            continue
        members.append(replace(cand.scaled_by(1.0 / nu), label=cand.label))
    return ProbeDictionary(n, d, i, size, seed, tuple(members))
