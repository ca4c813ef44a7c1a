"""Multi-index combinatorics, symmetric tensors, and polynomial jets.

Coefficients of a degree-m symmetric tensor are stored per multi-index of
order m: ``coeffs[xi]`` is the tensor's value on the basis monomial
``e^xi = e_1^{xi_1} (.) ... (.) e_n^{xi_n}``.  Multinomial weights are
applied on evaluation, so for a jet the coefficient at ``xi`` is exactly
the partial derivative ``D^xi P(a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np


@dataclass(frozen=True, order=True)
class MultiIndex:
    """An n-termed sequence of nonnegative integers."""

    entries: Tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) < 1:
            raise ValueError("multi-index needs dimension >= 1")
        if any(e < 0 or int(e) != e for e in self.entries):
            raise ValueError(f"entries must be nonnegative integers: {self.entries}")
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> int:
        return sum(self.entries)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        self._check_dim(other)
        return MultiIndex(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "MultiIndex") -> "MultiIndex":
        self._check_dim(other)
        return MultiIndex(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def dominates(self, other: "MultiIndex") -> bool:
        """Componentwise ``other <= self``."""
        self._check_dim(other)
        return all(a >= b for a, b in zip(self.entries, other.entries))

    def factorial(self) -> int:
        out = 1
        for e in self.entries:
            out *= math.factorial(e)
        return out

    def _check_dim(self, other: "MultiIndex") -> None:
        if self.n != other.n:
            raise ValueError("dimension mismatch between multi-indices")

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, j):
        return self.entries[j]


def unit_index(n: int, j: int) -> MultiIndex:
    """The multi-index e_j in dimension n (0-based axis j)."""
    e = [0] * n
    e[j] = 1
    return MultiIndex(tuple(e))


def zero_index(n: int) -> MultiIndex:
    return MultiIndex((0,) * n)


@lru_cache(maxsize=None)
def xi_set(n: int, m: int) -> Tuple[MultiIndex, ...]:
    """All multi-indices of order m in dimension n, reverse-lexicographic.

    The order is deterministic:  (2,0), (1,1), (0,2)  for n=2, m=2.
    Cardinality is binomial(m+n-1, n-1).
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if m < 0:
        raise ValueError("order must be >= 0")
    if n == 1:
        return (MultiIndex((m,)),)
    out = []
    for first in range(m, -1, -1):
        for rest in xi_set(n - 1, m - first):
            out.append(MultiIndex((first,) + rest.entries))
    return tuple(out)


def multinomial(xi: MultiIndex) -> int:
    """order! / xi! — the number of arrangements of the monomial e^xi."""
    return math.factorial(xi.order) // xi.factorial()


@dataclass(frozen=True)
class SymTensor:
    """Element of the m-fold symmetric power with values in R^d."""

    n: int
    degree: int
    target_dim: int
    coeffs: Mapping[MultiIndex, np.ndarray]

    def __post_init__(self):
        expected = xi_set(self.n, self.degree)
        coeffs = {}
        for xi in expected:
            v = np.asarray(self.coeffs.get(xi, np.zeros(self.target_dim)), dtype=float)
            v = np.atleast_1d(v)
            if v.shape != (self.target_dim,):
                raise ValueError(f"coefficient at {xi.entries} has wrong shape {v.shape}")
            coeffs[xi] = v
        if len(self.coeffs) > len(expected):
            extra = set(self.coeffs) - set(expected)
            raise ValueError(f"unexpected multi-indices: {sorted(e.entries for e in extra)}")
        object.__setattr__(self, "coeffs", coeffs)

    @staticmethod
    def zero(n: int, degree: int, target_dim: int = 1) -> "SymTensor":
        return SymTensor(n, degree, target_dim, {})

    @staticmethod
    def from_scalar_map(n: int, degree: int, values: Mapping[Tuple[int, ...], float]) -> "SymTensor":
        return SymTensor(n, degree, 1, {MultiIndex(k): np.array([v]) for k, v in values.items()})

    def __getitem__(self, xi) -> np.ndarray:
        if not isinstance(xi, MultiIndex):
            xi = MultiIndex(tuple(xi))
        return self.coeffs[xi]

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._compat(other)
        return SymTensor(self.n, self.degree, self.target_dim,
                         {xi: self.coeffs[xi] + other.coeffs[xi] for xi in self.coeffs})

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        return self + other.scale(-1.0)

    def scale(self, c: float) -> "SymTensor":
        return SymTensor(self.n, self.degree, self.target_dim,
                         {xi: c * v for xi, v in self.coeffs.items()})

    def _compat(self, other: "SymTensor") -> None:
        if (self.n, self.degree, self.target_dim) != (other.n, other.degree, other.target_dim):
            raise ValueError("incompatible symmetric tensors")

    def eval_diagonal(self, v: np.ndarray) -> np.ndarray:
        """psi(v, ..., v) = sum_xi (m!/xi!) v^xi coeffs[xi], in R^d."""
        v = np.asarray(v, dtype=float)
        out = np.zeros(self.target_dim)
        for xi, c in self.coeffs.items():
            mono = 1.0
            for vj, ej in zip(v, xi.entries):
                mono *= vj ** ej
            out += multinomial(xi) * mono * c
        return out

    def max_coeff_norm(self) -> float:
        return max((float(np.linalg.norm(v)) for v in self.coeffs.values()), default=0.0)

    def l1_bound(self) -> float:
        """Upper bound for the operator norm: multinomially weighted l1."""
        return float(sum(multinomial(xi) * np.linalg.norm(v) for xi, v in self.coeffs.items()))


def interior_mult(o: MultiIndex, psi: SymTensor) -> SymTensor:
    """Interior multiplication o -| psi: result[zeta] = psi[zeta + o]."""
    if o.n != psi.n:
        raise ValueError("dimension mismatch")
    if o.order > psi.degree:
        raise ValueError(f"order of {o.entries} exceeds tensor degree {psi.degree}")
    deg = psi.degree - o.order
    return SymTensor(psi.n, deg, psi.target_dim,
                     {zeta: psi.coeffs[zeta + o] for zeta in xi_set(psi.n, deg)})


def tensor_opnorm(psi: SymTensor, rel_tol: float = 1e-6) -> float:
    """Sup of |psi(v, ..., v)| over unit vectors v.

    Exact path for n = 1; for n = 2 a deterministic angular grid refined to
    the requested relative tolerance (an approximation of the multilinear
    sup from below, with the weighted coefficient-l1 value as an upper
    bound).  Higher n falls back to the l1 upper bound.
    """
    val, _exact = opnorm_bounds(psi, rel_tol)
    return val


def opnorm_bounds(psi: SymTensor, rel_tol: float = 1e-6) -> Tuple[float, bool]:
    """Return (value, exact_path).  exact_path is False for the n>2 fallback."""
    if psi.degree == 0:
        return float(np.linalg.norm(psi.coeffs[zero_index(psi.n)])), True
    if psi.n == 1:
        # psi(v..v) = v^m * c; sup over v = +-1 is |c|.
        return float(np.linalg.norm(psi.coeffs[MultiIndex((psi.degree,))])), True
    if psi.n == 2:
        return _opnorm_angular(psi, rel_tol), True
    return psi.l1_bound(), False


def _opnorm_angular(psi: SymTensor, rel_tol: float) -> float:
    def value(thetas: np.ndarray) -> np.ndarray:
        v1, v2 = np.cos(thetas), np.sin(thetas)
        acc = np.zeros((len(thetas), psi.target_dim))
        for xi, c in psi.coeffs.items():
            mono = multinomial(xi) * v1 ** xi.entries[0] * v2 ** xi.entries[1]
            acc += mono[:, None] * c[None, :]
        return np.linalg.norm(acc, axis=1)

    thetas = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
    vals = value(thetas)
    best = float(vals.max())
    center = thetas[int(vals.argmax())]
    width = 2 * np.pi / 720
    while width > 1e-14:
        local = np.linspace(center - width, center + width, 33)
        lv = value(local)
        new_best = float(lv.max())
        center = local[int(lv.argmax())]
        if new_best - best <= rel_tol * max(new_best, 1e-300):
            best = max(best, new_best)
            break
        best = max(best, new_best)
        width /= 8.0
    return best


@dataclass(frozen=True)
class PolyJet:
    """Polynomial of degree <= k stored through its derivatives at a center.

    ``derivs[m]`` is the degree-m symmetric tensor of m-th derivatives at
    ``center``; evaluation is the exact Taylor form
    ``P(x) = sum_m < (x-a)^m / m!, D^m P(a) >``.  ``degree_bound = -1``
    encodes the zero polynomial.
    """

    n: int
    target_dim: int
    center: np.ndarray
    degree_bound: int
    derivs: Mapping[int, SymTensor] = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(self.n)
        object.__setattr__(self, "center", c)
        if self.degree_bound < -1:
            raise ValueError("degree bound must be >= -1")
        ders: Dict[int, SymTensor] = {}
        for m in range(0, self.degree_bound + 1):
            t = self.derivs.get(m)
            if t is None:
                t = SymTensor.zero(self.n, m, self.target_dim)
            if (t.n, t.degree, t.target_dim) != (self.n, m, self.target_dim):
                raise ValueError(f"derivative tensor at order {m} is malformed")
            ders[m] = t
        if self.degree_bound == -1 and self.derivs:
            raise ValueError("the zero jet carries no derivative tensors")
        object.__setattr__(self, "derivs", ders)

    @staticmethod
    def zero(n: int, target_dim: int = 1, center=None) -> "PolyJet":
        c = np.zeros(n) if center is None else center
        return PolyJet(n, target_dim, c, -1)

    @staticmethod
    def from_coeff_map(n: int, center, coeffs: Mapping[Tuple[int, ...], float], target_dim: int = 1) -> "PolyJet":
        """Build from a map multi-index -> D^xi P(center) (scalars for d=1)."""
        by_order: Dict[int, Dict[MultiIndex, np.ndarray]] = {}
        k = -1
        for key, v in coeffs.items():
            xi = MultiIndex(tuple(key))
            arr = np.atleast_1d(np.asarray(v, dtype=float))
            by_order.setdefault(xi.order, {})[xi] = arr
            k = max(k, xi.order)
        derivs = {m: SymTensor(n, m, target_dim, by_order.get(m, {})) for m in range(k + 1)}
        return PolyJet(n, target_dim, center, k, derivs)

    def coefficient(self, xi: MultiIndex) -> np.ndarray:
        """D^xi P(center); zero beyond the degree bound."""
        if xi.order > self.degree_bound:
            return np.zeros(self.target_dim)
        return self.derivs[xi.order][xi]

    def __call__(self, x) -> np.ndarray:
        return self.eval(x)

    def eval(self, x) -> np.ndarray:
        """Evaluate at a point (n,) or batch (npts, n); returns (d,) or (npts, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x.reshape(-1, self.n) - self.center
        out = np.zeros((pts.shape[0], self.target_dim))
        for m in range(0, self.degree_bound + 1):
            t = self.derivs[m]
            for xi, c in t.coeffs.items():
                mono = np.ones(pts.shape[0])
                for j, e in enumerate(xi.entries):
                    if e:
                        mono = mono * pts[:, j] ** e
                out += (mono / xi.factorial())[:, None] * c[None, :]
        return out[0] if single else out

    def derivative(self, xi: MultiIndex) -> "PolyJet":
        """The jet of D^xi P: degree drops by |xi|, coefficients shift."""
        if xi.n != self.n:
            raise ValueError("dimension mismatch")
        m0 = xi.order
        k = max(self.degree_bound - m0, -1)
        derivs = {m: interior_mult(xi, self.derivs[m + m0]) for m in range(k + 1)}
        return PolyJet(self.n, self.target_dim, self.center, k, derivs)

    def recenter(self, new_center) -> "PolyJet":
        """Same polynomial function, derivatives re-expanded at new_center."""
        if self.degree_bound == -1:
            return PolyJet.zero(self.n, self.target_dim, new_center)
        b = np.asarray(new_center, dtype=float).reshape(self.n)
        h = b - self.center
        derivs: Dict[int, SymTensor] = {}
        for m in range(0, self.degree_bound + 1):
            coeffs = {}
            for xi in xi_set(self.n, m):
                acc = np.zeros(self.target_dim)
                for mm in range(m, self.degree_bound + 1):
                    for zeta in xi_set(self.n, mm - m):
                        mono = 1.0
                        for hj, ej in zip(h, zeta.entries):
                            mono *= hj ** ej
                        acc += mono / zeta.factorial() * self.derivs[mm][xi + zeta]
                coeffs[xi] = acc
            derivs[m] = SymTensor(self.n, m, self.target_dim, coeffs)
        return PolyJet(self.n, self.target_dim, b, self.degree_bound, derivs)

    def truncate(self, k: int) -> "PolyJet":
        """Keep derivatives of order <= k."""
        k = min(k, self.degree_bound)
        if k <= -1:
            return PolyJet.zero(self.n, self.target_dim, self.center)
        return PolyJet(self.n, self.target_dim, self.center, k,
                       {m: self.derivs[m] for m in range(k + 1)})

    def __add__(self, other: "PolyJet") -> "PolyJet":
        if (self.n, self.target_dim) != (other.n, other.target_dim):
            raise ValueError("incompatible jets")
        other = other.recenter(self.center)
        k = max(self.degree_bound, other.degree_bound)
        derivs = {}
        for m in range(k + 1):
            a = self.derivs.get(m, SymTensor.zero(self.n, m, self.target_dim))
            b = other.derivs.get(m, SymTensor.zero(self.n, m, self.target_dim))
            derivs[m] = a + b
        return PolyJet(self.n, self.target_dim, self.center, k, derivs)

    def scale(self, c: float) -> "PolyJet":
        return PolyJet(self.n, self.target_dim, self.center, self.degree_bound,
                       {m: t.scale(c) for m, t in self.derivs.items()})

    def coeff_map(self) -> Dict[Tuple[int, ...], np.ndarray]:
        out = {}
        for m in range(0, self.degree_bound + 1):
            for xi, v in self.derivs[m].coeffs.items():
                out[xi.entries] = v
        return out
