import numpy as np
import pytest

from lindyn.criteria import (
    CompactWindow,
    CriterionKind,
    TrimPolicy,
    evaluate,
    implication_check,
    product_factors,
    quantity,
    segal_factors,
    sweep_factors,
)
from lindyn.errors import SegalIncompatibleError
from lindyn.funcspace import (
    Grid,
    PiecewiseMap,
    Translation,
)
from lindyn.operators import CompositionOperator
from lindyn.presets import build_preset

RNG = np.random.default_rng(7)
GRID = Grid(64.0, 0.25)
K0 = CompactWindow.singleton(0.0)

OP_UNIT = CompositionOperator(Translation(-1.0),
                              PiecewiseMap.constant(1.0, positive=True))
OP_DOUBLE = CompositionOperator(Translation(-1.0),
                                PiecewiseMap.constant(2.0, positive=True))


def random_translation_operator(rng=RNG, max_nodes=4):
    shift = float(rng.choice([-1.0, 1.0, -0.5, 0.5]))
    n_nodes = int(rng.integers(2, max_nodes + 1))
    xs = np.sort(rng.uniform(-6, 6, n_nodes))
    xs += np.arange(n_nodes) * 1e-3  # keep strictly increasing
    ys = rng.uniform(0.2, 5.0, n_nodes)
    return CompositionOperator(Translation(shift),
                               PiecewiseMap(xs, ys, positive=True))


class TestProductFactors:
    def test_bridge_2_left(self):
        op = build_preset("ex3.5")
        p_minus, p_plus = product_factors(op, K0, 4)
        assert p_minus == pytest.approx(1.0 / 12.0, rel=1e-12)
        assert p_plus == 1.0

    def test_telescoping(self):
        op = build_preset("ex3.8", depth=40)
        p_minus, p_plus = product_factors(op, K0, 5)
        assert p_minus == pytest.approx(0.4, rel=1e-13)
        assert p_plus == 2.0 ** -5

    def test_unit_weight(self):
        assert product_factors(OP_UNIT, K0, 17) == (1.0, 1.0)

    def test_telescoping_oracle_long(self):
        op = build_preset("ex3.8", depth=1100)
        p_minus, _ = sweep_factors(op, K0, 1000)
        n = np.arange(1, 1001)
        assert np.max(np.abs(p_minus * n / 2.0 - 1.0)) <= 1e-12
        assert np.max(np.abs(n * p_minus - 2.0)) <= 2e-12


class TestSegalFactors:
    def test_constant_weight(self):
        q_back, q_inv = segal_factors(OP_DOUBLE, K0, 3)
        assert (q_back, q_inv) == (8.0, 0.125)

    def test_bridge_instance(self):
        op = build_preset("ex3.6")
        q_back, _ = segal_factors(op, K0, 3)
        assert q_back == pytest.approx(0.125, rel=1e-13)

    def test_unit_weight(self):
        assert segal_factors(OP_UNIT, K0, 9) == (1.0, 1.0)

    def test_matches_backward_reindexing(self):
        # literal product over w(alpha^{j-n}) equals the backward leg
        window = CompactWindow.from_grid(GRID, 2.0)
        for name in ("ex3.5", "ex3.6", "ex3.7"):
            op = build_preset(name)
            for n in (1, 2, 7, 23):
                q_back, q_inv = segal_factors(op, window, n)
                p_minus, p_plus = product_factors(op, window, n)
                assert q_back == pytest.approx(p_plus, rel=1e-12)
                assert q_inv == pytest.approx(p_minus, rel=1e-12)

    def test_tau_gate(self):
        op = build_preset("ex3.5")
        win = CompactWindow.from_grid(GRID, 2.0, segal_eps=0.5)
        tau_bad = PiecewiseMap([-1.0, 1.0], [0.0, 0.45])
        with pytest.raises(SegalIncompatibleError):
            segal_factors(op, win, 3, tau=tau_bad, grid=GRID)
        tau_ok = PiecewiseMap.constant(0.25)
        q_back, q_inv = segal_factors(op, win, 3, tau=tau_ok, grid=GRID)
        assert q_back > 0 and q_inv > 0
        win_tight = CompactWindow.from_grid(GRID, 2.0, segal_eps=0.1)
        with pytest.raises(SegalIncompatibleError):
            segal_factors(op, win_tight, 3, tau=tau_ok, grid=GRID)


class TestQuantity:
    def test_telescoping_cesaro_is_two(self):
        op = build_preset("ex3.8", depth=600)
        for n in (1, 5, 50, 500):
            q = quantity(CriterionKind.CESARO_SOLID, op, K0, n)
            assert q == pytest.approx(2.0, rel=1e-12)

    def test_bridge_supercyclic_value(self):
        op = build_preset("ex3.6")
        q = quantity(CriterionKind.SUPERCYCLIC_SOLID, op, K0, 3)
        assert q == pytest.approx(1.0 / 6.0, rel=1e-12)

    def test_unit_weight_cesaro_grows(self):
        for n in (1, 4, 9):
            q = quantity(CriterionKind.CESARO_SOLID, OP_UNIT, K0, n)
            assert q == float(n)

    def test_c0_matches_solid_products(self):
        # the C0 quantity uses the re-indexed backward leg: same value
        op = build_preset("ex3.5")
        win = CompactWindow.from_grid(GRID, 2.0)
        for n in (1, 3, 10):
            a = quantity(CriterionKind.SUPERCYCLIC_SOLID, op, win, n)
            b = quantity(CriterionKind.SUPERCYCLIC_C0, op, win, n)
            assert a == b

    def test_adjoint_quantities(self):
        op = build_preset("ex4.3b")
        # forward products decay, backward leg is 1
        q = quantity(CriterionKind.ADJOINT_SUPER, op, K0, 10)
        assert q == pytest.approx(0.75 * 2.0 ** -9, rel=1e-12)
        qc = quantity(CriterionKind.ADJOINT_CESARO, op, K0, 10)
        assert qc == pytest.approx(10.0, rel=1e-12)


class TestEvaluate:
    def test_record_minimum_witness(self):
        op = build_preset("ex3.5")
        win = CompactWindow.from_grid(GRID, 2.0)
        v = evaluate(CriterionKind.SUPERCYCLIC_SOLID, op, win, 60, 1e-6)
        assert v.satisfied
        qs = [q for _, q in v.witness]
        assert all(a > b for a, b in zip(qs, qs[1:]))
        ns = [n for n, _ in v.witness]
        assert all(a < b for a, b in zip(ns, ns[1:]))
        assert v.witness[-1][1] == v.trace.min()

    def test_determinism_bit_identical(self):
        op = build_preset("ex3.6")
        win = CompactWindow.from_grid(GRID, 1.0)
        a = evaluate(CriterionKind.CESARO_SOLID, op, win, 100, 1e-2)
        b = evaluate(CriterionKind.CESARO_SOLID, op, win, 100, 1e-2)
        assert np.array_equal(a.trace, b.trace)
        assert a.witness == b.witness and a.status == b.status
        assert a.to_jsonl() == b.to_jsonl()

    def test_window_monotonicity(self):
        op = build_preset("ex3.7")
        small = CompactWindow.from_grid(GRID, 1.0)
        large = CompactWindow.from_grid(GRID, 3.0)
        for kind in (CriterionKind.SUPERCYCLIC_SOLID,
                     CriterionKind.CESARO_SOLID,
                     CriterionKind.HYPERCYCLIC_SOLID,
                     CriterionKind.ADJOINT_SUPER):
            for n in (1, 4, 12):
                assert quantity(kind, op, small, n) <= \
                    quantity(kind, op, large, n) * (1 + 1e-12)

    def test_inverse_mode_matches_brute_force(self):
        # S = T^{-1} is the composition pair (beta, v) with beta = alpha^{-1}
        # and v(t) = 1/w(alpha^{-1}(t)); evaluate its product legs directly.
        op = build_preset("ex3.6")
        win = CompactWindow.from_grid(GRID, 1.5)
        pts = win.points
        shift = op.alpha.shift

        def v(t):
            return 1.0 / op.weight(t - shift)

        def beta_pow(t, j):
            return t - j * shift

        for n in (1, 2, 5, 11):
            mine = quantity(CriterionKind.SUPERCYCLIC_SOLID, op, win, n,
                            inverse=True)
            inv_fwd = np.ones(pts.size)  # prod (v o beta^j)^{-1}
            bwd = np.ones(pts.size)      # prod  v o beta^{-j}
            for j in range(n):
                inv_fwd *= 1.0 / v(beta_pow(pts, j))
                bwd *= v(beta_pow(pts, -(j + 1)))
            brute = inv_fwd.max() * bwd.max()
            assert mine == pytest.approx(brute, rel=1e-11)


class TestTrim:
    def test_trimming_reduces_quantity(self):
        # weight with a dip inside the window: the dip point carries the
        # worst inverse forward product, so dropping it helps
        w = PiecewiseMap([-2.0, -1.0, 0.0, 1.0, 2.0],
                         [1.0, 1.0, 1.0 / 6.0, 1.0, 1.0], positive=True)
        op = CompositionOperator(Translation(-8.0), w)
        win = CompactWindow.from_grid(Grid(8.0, 0.25), 2.0)
        q_raw = quantity(CriterionKind.SUPERCYCLIC_SOLID, op, win, 1)
        q_trim = quantity(CriterionKind.SUPERCYCLIC_SOLID, op, win, 1,
                          TrimPolicy(2))
        assert q_raw == pytest.approx(6.0, rel=1e-12)
        assert q_trim < q_raw

    def test_trim_never_empties_window(self):
        q = quantity(CriterionKind.SUPERCYCLIC_SOLID, OP_DOUBLE, K0, 3,
                     TrimPolicy(5))
        assert q == quantity(CriterionKind.SUPERCYCLIC_SOLID, OP_DOUBLE,
                             K0, 3)

    def test_trim_report(self):
        w = PiecewiseMap([-2.0, -1.0, 0.0, 1.0, 2.0],
                         [1.0, 1.0, 6.0, 1.0, 1.0], positive=True)
        op = CompositionOperator(Translation(-8.0), w)
        win = CompactWindow.from_grid(Grid(8.0, 0.25), 2.0)
        v = evaluate(CriterionKind.SUPERCYCLIC_SOLID, op, win, 5, 1e-6,
                     TrimPolicy(2))
        assert v.trimmed is not None and len(v.trimmed) == 5
        assert all(0 <= d <= 2 for d in v.trimmed)


class TestImplication:
    def test_cesaro_positive_instance(self):
        op = build_preset("ex3.5")
        win = CompactWindow.from_grid(GRID, 1.0)
        report = implication_check(op, win, 200, 1e-2)
        assert report.cesaro.satisfied and report.supercyclic.satisfied
        assert report.ok

    def test_supercyclic_only_instance(self):
        op = build_preset("ex3.6")
        win = CompactWindow.from_grid(GRID, 1.0)
        report = implication_check(op, win, 200, 1e-2)
        assert report.supercyclic.satisfied
        assert not report.cesaro.satisfied
        assert report.ok

    def test_unit_weight_vacuous(self):
        win = CompactWindow.from_grid(GRID, 1.0)
        report = implication_check(OP_UNIT, win, 50, 1e-6)
        assert not report.cesaro.satisfied
        assert not report.supercyclic.satisfied
        assert report.ok

    def test_square_identity_random_instances(self):
        win = CompactWindow.from_interval(1.0, 0.25)
        for _ in range(25):
            op = random_translation_operator()
            for n in (1, 3, 8, 20):
                qc = quantity(CriterionKind.CESARO_SOLID, op, win, n)
                qs = quantity(CriterionKind.SUPERCYCLIC_SOLID, op, win, n)
                if qc <= 1.0:
                    assert qs <= qc * qc + 1e-10


class TestAdjointForwardDuality:
    def test_products_reindex_brute_force(self):
        # adjoint legs of (alpha, w) match the forward legs of
        # (alpha^{-1}, w o alpha^{-1}): brute products up to n = 20
        for _ in range(10):
            op = random_translation_operator()
            shift = op.alpha.shift
            flipped = CompositionOperator(
                Translation(-shift),
                PiecewiseMap(op.weight.breakpoints + shift, op.weight.values,
                             positive=True))
            pts = np.array([0.0, 0.5, -1.25])
            win = CompactWindow(2.0, pts)
            for n in (1, 2, 5, 11, 20):
                q_adj = quantity(CriterionKind.ADJOINT_SUPER, op, win, n)
                q_fwd = quantity(CriterionKind.SUPERCYCLIC_SOLID, flipped,
                                 win, n)
                assert q_adj == pytest.approx(q_fwd, rel=1e-11)
                # independent brute force of the adjoint product legs
                fwd = np.ones(pts.size)
                cur = pts.copy()
                for _ in range(n):
                    fwd *= op.weight(cur)
                    cur = cur + shift
                bwd = np.ones(pts.size)
                cur = pts.copy()
                for _ in range(n):
                    cur = cur - shift
                    bwd *= 1.0 / op.weight(cur)
                assert q_adj == pytest.approx(fwd.max() * bwd.max(),
                                              rel=1e-11)
