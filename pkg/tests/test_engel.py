import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from carnot_curves.engel import (
    K_MAX,
    ControlWord,
    CounterexampleSpec,
    EPoint,
    ObstructionHypothesisError,
    PolynomialControlCurve,
    ShiftedLine,
    WordCurve,
    agreement_measure,
    apply_word,
    bch_mul,
    bch_mul_step3,
    bracket,
    build_counterexample,
    comparison_corpus,
    contradiction_window,
    dyadic_rationals,
    engel_frame,
    engel_inv,
    engel_mul,
    flow,
    from_exp,
    left_differential,
    make_spiral,
    obstruction_check,
    spiral_endpoint,
    to_exp,
)
from oracles import engel_product_matrix, engel_product_second_kind, integrate_word, rk4

coord = st.floats(-3.0, 3.0)
point = st.tuples(coord, coord, coord, coord).map(np.array)
legs = st.lists(
    st.tuples(st.sampled_from(["X1", "X2"]), st.floats(-2.0, 2.0), st.floats(0.01, 0.5)), min_size=1, max_size=6
)


@pytest.fixture(scope="module")
def gamma():
    return build_counterexample(CounterexampleSpec.from_budget(0.09, 20, profile="uniform"))


class TestFrame:
    def test_brackets_symbolic(self):
        x = sp.symbols("x1:5")
        fields = [sp.Matrix(row) for row in [[1, 0, 0, 0], [0, 1, x[0], x[0] ** 2 / 2], [0, 0, 1, x[0]], [0, 0, 0, 1]]]

        def lie(u, v):
            ju = u.jacobian(x)
            jv = v.jacobian(x)
            return sp.simplify(jv * u - ju * v)

        X1, X2, X3, X4 = fields
        assert lie(X1, X2) == X3
        assert lie(X1, X3) == X4
        assert lie(X2, X3) == sp.zeros(4, 1)
        assert lie(X1, X4) == sp.zeros(4, 1)

    def test_numeric_frame(self):
        rows = engel_frame([2.0, 5.0, -1.0, 7.0])
        assert np.array_equal(rows[1], [0, 1, 2, 2])
        assert np.array_equal(rows[2], [0, 0, 1, 2])

    def test_algebra_bracket(self):
        e = np.eye(4)
        assert np.array_equal(bracket(e[0], e[1]), e[2])
        assert np.array_equal(bracket(e[0], e[2]), e[3])
        assert np.array_equal(bracket(e[1], e[2]), np.zeros(4))

    def test_point_validation(self):
        with pytest.raises(ValueError):
            EPoint([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            EPoint([0.0, np.inf, 0.0, 0.0])
        assert EPoint.origin() == EPoint(np.zeros(4))


class TestGroup:
    @given(point, point, point)
    def test_laws(self, p, q, r):
        scale = max(1.0, float(np.max(np.abs(engel_mul(engel_mul(p, q), r)))))
        assert np.max(np.abs(engel_mul(engel_mul(p, q), r) - engel_mul(p, engel_mul(q, r)))) <= 1e-12 * scale
        assert np.allclose(engel_mul(p, engel_inv(p)), 0, atol=1e-12)
        assert np.allclose(engel_mul(engel_inv(p), p), 0, atol=1e-12)
        assert np.array_equal(engel_mul(p, np.zeros(4)), p)

    @given(point, point)
    def test_matches_hand_written_law(self, p, q):
        assert np.allclose(engel_mul(p, q), engel_product_second_kind(p, q), atol=1e-12)

    @settings(max_examples=50)
    @given(point, point)
    def test_matches_matrix_representation(self, p, q):
        assert np.allclose(engel_mul(p, q), engel_product_matrix(p, q), atol=1e-10)

    @given(point, point)
    def test_lie_algebra_route(self, p, q):
        assert np.allclose(bch_mul(p, q), engel_mul(p, q), atol=1e-11)

    @given(point)
    def test_coordinate_maps_invert(self, p):
        assert np.allclose(from_exp(to_exp(p)), p, atol=1e-12)

    def test_bch_known_values(self):
        e = np.eye(4)
        # log(exp X1 exp X2) = X1 + X2 + X3/2 + X4/12
        assert np.allclose(bch_mul_step3(e[0], e[1]), [1, 1, 0.5, 1 / 12])
        assert np.allclose(bch_mul_step3(e[1], e[0]), [1, 1, -0.5, 1 / 12])

    @given(point, st.floats(-2, 2), st.floats(-2, 2))
    def test_vertical_shift(self, p, c3, c4):
        # X4 is central; on the left, (0, 0, c3, c4) only adds
        shifted = engel_mul(p, np.array([0.0, 0.0, 0.0, c4]))
        assert np.array_equal(shifted, p + np.array([0, 0, 0, c4]))
        assert np.array_equal(engel_mul(np.array([0.0, 0.0, 0.0, c4]), p), p + np.array([0, 0, 0, c4]))
        left = engel_mul(np.array([0.0, 0.0, c3, c4]), p)
        assert np.array_equal(left, p + np.array([0, 0, c3, c4]))

    @settings(max_examples=50)
    @given(point, point, st.integers(0, 3))
    def test_left_differential_fd(self, p, q, k):
        v = np.eye(4)[k]
        h = 1e-6
        fd = (engel_mul(p, q + h * v) - engel_mul(p, q - h * v)) / (2 * h)
        assert np.allclose(fd, left_differential(p, v), atol=1e-6)

    @given(point, point)
    def test_frame_is_left_invariant(self, p, q):
        moved = left_differential(p, engel_frame(q))
        assert np.allclose(moved, engel_frame(engel_mul(p, q)), atol=1e-10)

    @given(point, st.sampled_from(["X1", "X2"]), st.floats(-2, 2), st.floats(0, 2))
    def test_flow_is_right_translation(self, p, gen, c, t):
        step = np.array([c * t, 0, 0, 0]) if gen == "X1" else np.array([0, c * t, 0, 0])
        assert np.allclose(flow(p, gen, c, t), engel_mul(p, step), atol=1e-12)
        back = flow(flow(p, gen, c, t), gen, -c, t)
        assert np.allclose(back, p, atol=1e-12)

    def test_flow_unknown_generator(self):
        with pytest.raises(ValueError):
            flow(np.zeros(4), "X3", 1.0, 1.0)


class TestWords:
    def test_commutator_word(self):
        s = 0.3
        word = ControlWord((("X1", s, 1.0), ("X2", s, 1.0), ("X1", -s, 1.0), ("X2", -s, 1.0)))
        end, _ = apply_word(np.zeros(4), word)
        assert np.allclose(end, [0, 0, s * s, s**3 / 2], atol=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(legs, point)
    def test_against_rk4(self, spec, x0):
        word = ControlWord(tuple(spec))
        end, curve = apply_word(x0, word)
        assert np.allclose(end, integrate_word(word.legs, x0, h=1e-3), atol=1e-10)
        mid = 0.5 * word.duration
        k = int(curve._leg(mid))
        partial = list(word.legs[:k]) + [(word.legs[k][0], word.legs[k][1], mid - curve._breaks[k])]
        assert np.allclose(curve.position(mid), integrate_word(partial, x0, h=1e-3), atol=1e-10)

    @given(legs, point)
    def test_reversed_returns(self, spec, x0):
        word = ControlWord(tuple(spec))
        end, _ = apply_word(x0, word)
        back, _ = apply_word(end, word.reversed())
        assert np.allclose(back, x0, atol=1e-10)

    def test_derivative_is_horizontal_and_matches_fd(self):
        word = ControlWord((("X1", 1.0, 0.3), ("X2", -2.0, 0.4), ("X1", 0.5, 0.2)))
        curve = WordCurve(word, [0.1, 0.2, 0.3, 0.4], t0=1.0)
        for t in (1.1, 1.5, 1.8):
            h = 1e-6
            fd = (curve.position(t + h) - curve.position(t - h)) / (2 * h)
            assert np.allclose(fd, curve.derivative(t), atol=1e-7)

    def test_validation(self):
        with pytest.raises(ValueError):
            ControlWord((("X3", 1.0, 1.0),))
        with pytest.raises(ValueError):
            ControlWord((("X1", 1.0, 0.0),))
        word = ControlWord((("X1", 1.0, 0.5),))
        assert ControlWord.from_dict(word.to_dict()) == word


class TestSpiral:
    @pytest.mark.parametrize("delta", [1e-1, 1e-2, 1e-3, 0.7])
    @pytest.mark.parametrize("K", [K_MAX, K_MAX / 2, 1e-6])
    def test_endpoint_duration_speed(self, delta, K):
        word = make_spiral(delta, K)
        end = spiral_endpoint(delta, K)
        target = K * delta**6
        assert np.max(np.abs(end[:3])) <= 1e-12 * delta
        assert end[3] == pytest.approx(-target, rel=1e-12)
        assert word.duration == pytest.approx(delta, rel=1e-15)
        assert word.speed <= delta * (1 + 1e-12)

    def test_rk4_agreement(self):
        delta = 0.1
        word = make_spiral(delta, K_MAX)
        ref = integrate_word(word.legs, np.zeros(4), h=delta / 800)
        assert np.allclose(ref, spiral_endpoint(delta, K_MAX), atol=1e-14)

    def test_too_tall(self):
        with pytest.raises(ValueError, match="K_max"):
            make_spiral(0.1, 2 * K_MAX)
        with pytest.raises(ValueError):
            make_spiral(-1.0, K_MAX)


class TestCounterexample:
    def test_dyadics(self):
        assert dyadic_rationals(5) == [0.5, 0.25, 0.75, 0.125, 0.375]
        assert min(dyadic_rationals(20)) == 1 / 32

    def test_spec_widths(self):
        spec = CounterexampleSpec.from_budget(0.09, 20, profile="uniform")
        assert spec.total_width < 0.1
        geo = CounterexampleSpec.from_budget(0.09, 20)
        assert geo.total_width < 0.09
        with pytest.raises(ValueError, match="overlap"):
            CounterexampleSpec(((0.5, 0.2), (0.6, 0.1)), K_MAX)
        with pytest.raises(ValueError):
            CounterexampleSpec(((0.5, 0.1),), 1.0)
        assert CounterexampleSpec.from_dict(spec.to_dict()) == spec

    def test_before_first_site(self, gamma):
        t = np.linspace(0, 1 / 32, 17)
        expect = np.stack([0 * t, t, 0 * t, 0 * t], axis=1)
        assert np.array_equal(gamma.position(t), expect)

    def test_continuity_at_spiral_ends(self, gamma):
        for q, e in zip(gamma.q, gamma.eps):
            for t in (q, q + e):
                lo, hi = gamma.position(np.array([t - 1e-13, t + 1e-13]))
                assert np.max(np.abs(lo - hi)) <= 1e-12

    def test_displacement_per_spiral(self, gamma):
        for k, (q, e) in enumerate(zip(gamma.q, gamma.eps)):
            start = gamma.base_point(k)
            end = gamma.spirals[k].end
            assert end[3] == pytest.approx(-gamma.spec.K * e**6, rel=1e-12)
            assert np.max(np.abs(end[:3])) <= 1e-15
            after = gamma.position(q + e)
            assert np.allclose(after - start, [0, 0, 0, -gamma.spec.K * e**6], rtol=0, atol=1e-14)

    def test_fourth_coordinate_decreases(self, gamma):
        comps = gamma.complement_components()
        mids = [0.5 * (lo + hi) for lo, hi in comps]
        x4 = gamma.position(np.array(mids))[:, 3]
        assert np.all(np.diff(x4) < 0)

    def test_derivative_off_spirals(self, gamma):
        for lo, hi in gamma.complement_components():
            t = 0.5 * (lo + hi)
            h = 1e-4 * (hi - lo)
            fd = (gamma.position(t + h) - gamma.position(t - h)) / (2 * h)
            assert np.allclose(fd, [0, 1, 0, 0], atol=1e-9)
            assert np.array_equal(gamma.derivative(t), [0, 1, 0, 0])


class TestObstruction:
    def test_x2_line(self):
        assert obstruction_check(ShiftedLine(0.0, 0.0), 0.1, 0.5)

    def test_cubic_height(self):
        c = PolynomialControlCurve([1.0], [1.0], 0.0, np.zeros(4))
        t = np.linspace(0, 1, 11)
        assert np.allclose(c.position(t)[:, 3], t**3 / 6, atol=1e-15)
        assert obstruction_check(c, 0.0, 1.0)

    def test_counterexample_violates_hypothesis(self, gamma):
        q, e = gamma.q[0], gamma.eps[0]
        with pytest.raises(ObstructionHypothesisError):
            obstruction_check(gamma, q - 0.001, 2 * e)

    def test_polynomial_curve_matches_rk4(self):
        c = PolynomialControlCurve([0.3, -1.0, 0.5], [1.0, 0.2], 0.2, [0.1, 0.0, -0.2, 0.3])

        def field(t, x):
            a, b = c.controls(t)
            return np.array([a, b, b * x[0], b * x[0] ** 2 / 2])

        ref = rk4(field, c.position(0.2), 0.2, 0.9, 1e-3)
        assert np.allclose(ref, c.position(0.9), atol=1e-11)
        assert np.allclose(c.position(0.2), [0.1, 0.0, -0.2, 0.3])


class TestAgreement:
    def test_identity(self, gamma):
        assert agreement_measure(gamma, gamma, resolution=20_000) == 1.0

    def test_flat_line(self, gamma):
        assert agreement_measure(gamma, ShiftedLine(0.0, 0.0)) == pytest.approx(1 / 32, abs=1e-4)

    def test_resolution_guard(self, gamma):
        with pytest.raises(ValueError):
            agreement_measure(gamma, gamma, resolution=5)

    def test_corpus(self, gamma):
        corpus = comparison_corpus(gamma, size=50, seed=3)
        assert len(corpus) == 50
        for curve, t0 in corpus:
            assert np.allclose(curve.position(t0), gamma.position(t0), atol=1e-15)
            assert agreement_measure(gamma, curve, resolution=20_000) < 0.1

    def test_contradiction_window_is_empty(self, gamma):
        for curve, t0 in comparison_corpus(gamma, size=12, seed=1):
            assert contradiction_window(gamma, curve, t0, 0.3).size == 0
