"""Distributions as finite sums of atoms, and the certified pairing engine.

Integration by parts is applied eagerly: a DerivativeAtom never
differentiates the function data, only the (smooth by construction) test
function.  Polynomial atoms met at the same nesting level are merged into
a single jet before quadrature so that jet subtraction cancels at the
coefficient level rather than between separately integrated atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .funcexpr import ExprAST, SingularitySet, eval_expr, parse
from .quadrature import QuadratureConfig, integrate_box
from .tensor import MultiIndex, PolyJet, zero_index
from .testfn import ProbeDictionary, TestFn, seminorm

MAX_DERIVATIVE_DEPTH = 8


@dataclass(frozen=True)
class FunctionAtom:
    """Locally integrable function given per target coordinate."""

    exprs: Tuple[ExprAST, ...]
    singularities: SingularitySet = SingularitySet()
    limits: Tuple[Tuple[Tuple[float, ...], float], ...] = ()

    @staticmethod
    def from_text(texts: Union[str, Sequence[str]], dims: Optional[int] = None,
                  limits: Sequence[Tuple[Sequence[float], float]] = ()) -> "FunctionAtom":
        if isinstance(texts, str):
            texts = [texts]
        asts = []
        sing = SingularitySet()
        for t in texts:
            ast, s = parse(t, dims)
            asts.append(ast)
            sing = sing.merged(s)
        lims = tuple((tuple(map(float, p)), float(v)) for p, v in limits)
        return FunctionAtom(tuple(asts), sing, lims)

    def eval(self, pts: np.ndarray) -> np.ndarray:
        return np.stack([eval_expr(ast, pts, limits=self.limits) for ast in self.exprs], axis=1)


@dataclass(frozen=True)
class DeltaAtom:
    """c * D^xi delta_a; pairs to (-1)^{|xi|} <c, D^xi phi(a)>."""

    location: Tuple[float, ...]
    xi: Tuple[int, ...]
    coeff: Tuple[float, ...]


@dataclass(frozen=True)
class DerivativeAtom:
    xi: Tuple[int, ...]
    inner: "Distribution"


@dataclass(frozen=True)
class PolynomialAtom:
    jet: PolyJet


Atom = Union[FunctionAtom, DeltaAtom, DerivativeAtom, PolynomialAtom]


@dataclass(frozen=True)
class Distribution:
    n: int
    d: int
    atoms: Tuple[Atom, ...]

    def __post_init__(self):
        if self.d < 1 or self.d > 8:
            raise ValueError("target dimension must be between 1 and 8")
        if _depth(self) > MAX_DERIVATIVE_DEPTH:
            raise ValueError(f"derivative nesting deeper than {MAX_DERIVATIVE_DEPTH}")


def _depth(T: Distribution) -> int:
    best = 0
    for a in T.atoms:
        if isinstance(a, DerivativeAtom):
            best = max(best, 1 + _depth(a.inner))
    return best


@dataclass(frozen=True)
class PairingResult:
    value: float
    abs_error_bound: float
    quadrature_cells: int


def function_distribution(n: int, texts, d: int = 1, limits=()) -> Distribution:
    atom = FunctionAtom.from_text(texts if not isinstance(texts, str) else [texts] * d,
                                  dims=n, limits=limits)
    return Distribution(n, d, (atom,))


def delta_distribution(n: int, location, xi=None, coeff=None, d: int = 1) -> Distribution:
    xi = tuple(xi) if xi is not None else (0,) * n
    coeff = tuple(coeff) if coeff is not None else (1.0,) + (0.0,) * (d - 1)
    loc = tuple(float(v) for v in np.asarray(location, dtype=float).reshape(n))
    return Distribution(n, d, (DeltaAtom(loc, xi, coeff),))


def polynomial_distribution(jet: PolyJet) -> Distribution:
    return Distribution(jet.n, jet.target_dim, (PolynomialAtom(jet),))


def derivative(T: Distribution, xi) -> Distribution:
    """D^xi T; pairing satisfies pair(D^xi T, phi) = (-1)^{|xi|} pair(T, D^xi phi)."""
    xi = xi if isinstance(xi, MultiIndex) else MultiIndex(tuple(xi))
    if xi.order == 0:
        return T
    if all(isinstance(a, PolynomialAtom) for a in T.atoms):
        # differentiate polynomial atoms in closed form; flipping the
        # derivative onto the test function would amplify quadrature error
        # by r^{-|xi|} on rescaled probes for no gain
        return Distribution(T.n, T.d, tuple(
            PolynomialAtom(a.jet.derivative(xi)) for a in T.atoms))
    return Distribution(T.n, T.d, (DerivativeAtom(xi.entries, T),))


def subtract_jet(T: Distribution, P: PolyJet) -> Distribution:
    """T - S where S(phi) = integral <phi, P>."""
    if (P.n, P.target_dim) != (T.n, T.d):
        raise ValueError("jet incompatible with distribution")
    if P.degree_bound == -1:
        return T
    return Distribution(T.n, T.d, T.atoms + (PolynomialAtom(P.scale(-1.0)),))


def _support_box(phi) -> Tuple[np.ndarray, np.ndarray]:
    c = np.asarray(phi.support_center, dtype=float)
    r = phi.support_radius
    return c - r, c + r


def pair(T: Distribution, phi, config: QuadratureConfig = QuadratureConfig(),
         strict: bool = True) -> PairingResult:
    """T(phi) with a certified quadrature error bound.

    phi is a TestFn or a derivative view of one; it must carry enough exact
    derivative orders for any DerivativeAtom nesting in T.
    """
    if (phi.n, phi.d) != (T.n, T.d):
        raise ValueError("test function incompatible with distribution")
    value = 0.0
    err = 0.0
    cells = 0
    lo, hi = _support_box(phi)

    merged_jet: Optional[PolyJet] = None
    for atom in T.atoms:
        if isinstance(atom, DeltaAtom):
            xi = MultiIndex(atom.xi)
            dval = phi.eval_deriv(xi, np.asarray(atom.location))
            value += (-1.0) ** xi.order * float(np.dot(np.asarray(atom.coeff), dval))
        elif isinstance(atom, DerivativeAtom):
            xi = MultiIndex(atom.xi)
            sub = pair(atom.inner, phi.derivative_view(xi), config, strict)
            value += (-1.0) ** xi.order * sub.value
            err += sub.abs_error_bound
            cells += sub.quadrature_cells
        elif isinstance(atom, PolynomialAtom):
            merged_jet = atom.jet if merged_jet is None else merged_jet + atom.jet
        elif isinstance(atom, FunctionAtom):
            def integrand(pts, atom=atom):
                fv = atom.eval(pts)
                pv = phi.eval_deriv(zero_index(T.n), pts)
                return np.einsum("ij,ij->i", fv, pv)
            splits = [atom.singularities.axis_coordinates(j) for j in range(T.n)]
            v, e, c = integrate_box(integrand, lo, hi, splits, config, strict)
            value += v
            err += e
            cells += c
        else:
            raise TypeError(f"unknown atom {atom!r}")
    if merged_jet is not None and merged_jet.degree_bound >= 0:
        def poly_integrand(pts):
            pv = phi.eval_deriv(zero_index(T.n), pts)
            jv = np.atleast_2d(merged_jet.eval(pts))
            return np.einsum("ij,ij->i", jv, pv)
        v, e, c = integrate_box(poly_integrand, lo, hi, (), config, strict)
        value += v
        err += e
        cells += c
    return PairingResult(value, err, cells)


def dual_norm(T: Distribution, K: Tuple[Sequence[float], float], i: int,
              probes: ProbeDictionary,
              config: QuadratureConfig = QuadratureConfig()) -> float:
    """Certified lower bound of sup{ T(phi) : phi in D_K, nu^i_K(phi) <= 1 }.

    Dictionary members (normalized to nu^i <= 1 on B(0,1)) are rescaled
    into K; rescaling multiplies the order-i seminorm by radius^{-i}, so
    members are rescaled back by radius^i to stay admissible.
    """
    center = np.asarray(K[0], dtype=float).reshape(T.n)
    radius = float(K[1])
    best = 0.0
    for member in probes.members:
        cand = member.rescale(center, radius).scaled_by(radius ** i)
        res = pair(T, cand, config)
        best = max(best, abs(res.value))
    return best
