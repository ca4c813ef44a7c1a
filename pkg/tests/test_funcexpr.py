"""Expression parser and evaluator: grammar, singularities, evaluation."""

import math

import numpy as np
import pytest

from ptdiff import parse
from ptdiff.funcexpr import DomainError, ExprError, eval_expr, pretty


class TestParse:
    def test_sqrt_abs_singularity(self):
        ast, sing = parse("abs(x1)^(1/2)")
        assert (0, 0.0) in sing.hyperplanes or (0.0,) in sing.points

    def test_oscillatory_divisor_zero(self):
        ast, sing = parse("x1^2*sin(1/x1)")
        assert 0.0 in sing.axis_coordinates(0)

    def test_syntax_error_position(self):
        with pytest.raises(ExprError) as exc:
            parse("sin(")
        assert exc.value.position is not None

    def test_unknown_identifier(self):
        with pytest.raises(ExprError):
            parse("tan(x1)")

    def test_sing_annotation(self):
        ast, sing = parse("x1 @sing(0.5)")
        assert (0.5,) in sing.points

    def test_dimension_check(self):
        with pytest.raises(ExprError):
            parse("x3", dims=2)


class TestEval:
    def test_sqrt_value(self):
        ast, _ = parse("abs(x1)^(1/2)")
        assert eval_expr(ast, [0.25]) == pytest.approx(0.5, abs=1e-15)

    def test_heaviside_convention(self):
        ast, _ = parse("heaviside(x1)")
        assert eval_expr(ast, [-1.0]) == 0.0
        assert eval_expr(ast, [0.0]) == 1.0
        assert eval_expr(ast, [2.0]) == 1.0

    def test_declared_limit(self):
        ast, _ = parse("x1^2*sin(1/x1)")
        assert eval_expr(ast, [0.0], limits=[([0.0], 0.0)]) == 0.0

    def test_undeclared_singularity_raises(self):
        ast, _ = parse("1/x1")
        with pytest.raises(DomainError):
            eval_expr(ast, [0.0])

    def test_roundtrip_structural(self):
        for text in ("abs(x1)^(1/2)", "x1^2*sin(1/x1)", "heaviside(x1)",
                     "exp(-x1)", "piecewise(x1-0.5, 1, 0)", "min(x1, x2)",
                     "x1^3+2*x1", "sin(x1/4)"):
            ast, _ = parse(text)
            ast2, _ = parse(pretty(ast.root))
            assert pretty(ast.root) == pretty(ast2.root)

    def test_reference_table(self, corpus):
        """Every corpus function agrees with an independent numpy evaluation."""
        H = lambda x: np.where(x >= 0, 1.0, 0.0)
        refs = {
            "heaviside": lambda x: H(x[:, 0]),
            "abs_sqrt": lambda x: np.abs(x[:, 0]) ** 0.5,
            "osc": lambda x: np.where(x[:, 0] == 0, 0.0,
                                      x[:, 0] ** 2 * np.sin(1.0 / np.where(x[:, 0] == 0, 1.0, x[:, 0]))),
            "exp": lambda x: np.exp(x[:, 0]),
            "exp_neg": lambda x: np.exp(-x[:, 0]),
            "sq": lambda x: x[:, 0] ** 2,
            "cubic": lambda x: x[:, 0] ** 3 + 2 * x[:, 0],
            "sin4": lambda x: np.sin(x[:, 0] / 4.0),
            "cos4": lambda x: np.cos(x[:, 0] / 4.0),
            "gauss2d": lambda x: np.exp(-x[:, 0] ** 2 - x[:, 1] ** 2),
        }
        rng = np.random.default_rng(11)
        for iid, ref in refs.items():
            item = corpus[iid]
            atom = item.build().atoms[0]
            pts = rng.uniform(-1.5, 1.5, size=(20, item.n))
            got = atom.eval(pts)[:, 0]
            np.testing.assert_allclose(got, ref(pts), rtol=1e-12, atol=1e-12,
                                       err_msg=iid)

    def test_singularity_audit(self, corpus):
        """Declared singularities cover actual kinks of each corpus function.

        Between consecutive declared coordinates the function must be smooth:
        second central differences stay bounded by a smoothness budget.
        """
        for iid in ("heaviside", "abs_sqrt", "osc", "annuli"):
            item = corpus[iid]
            atom = item.build().atoms[0]
            cuts = sorted(set(atom.singularities.axis_coordinates(0)) | {-1.2, 1.2})
            for lo, hi in zip(cuts, cuts[1:]):
                if hi - lo < 1e-3:
                    continue
                xs = np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 41)
                h = (xs[1] - xs[0])
                vals = atom.eval(xs[:, None])[:, 0]
                second = np.abs(vals[2:] - 2 * vals[1:-1] + vals[:-2]) / h ** 2
                # smooth pieces have bounded curvature; a jump or kink inside
                # the cell would blow the ratio up by orders of magnitude
                assert np.max(second) < 1e4, (iid, lo, hi)
