import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carnot_curves.curves import (
    SEGMENT_KINDS,
    BackAndForth,
    CircleLoop,
    Constant,
    HermiteCubic,
    Line,
    PiecewiseCurve,
    Segment,
    SineBump,
    rotation_to,
    single,
)
from oracles import cross_by_quadrature

dur = st.floats(0.05, 5.0)
val = st.floats(-5.0, 5.0)
vec = st.tuples(val, val)


def locals_strategy():
    return st.one_of(
        st.builds(HermiteCubic, dur, vec, vec, vec),
        st.builds(CircleLoop, dur, st.floats(0.05, 3.0), st.floats(0.0, 5.0), st.sampled_from([1, -1])),
        st.builds(SineBump, dur, st.floats(0.01, 5.0), val),
        st.builds(Line.from_velocity, dur, vec),
        st.builds(BackAndForth, dur, vec),
        st.builds(Constant, dur),
    )


class TestLocalSegments:
    @given(locals_strategy())
    def test_starts_at_origin(self, local):
        assert np.all(local.position(0.0) == 0)
        assert local.cross(0.0) == 0

    @settings(max_examples=60, deadline=None)
    @given(locals_strategy(), st.floats(0.1, 0.9))
    def test_derivative_matches_difference(self, local, u):
        tau = u * local.T
        h = 1e-6 * local.T
        fd = (local.position(tau + h) - local.position(tau - h)) / (2 * h)
        scale = max(1.0, float(np.max(np.abs(local.derivative(tau)))))
        assert np.allclose(fd, local.derivative(tau), atol=1e-5 * scale)

    @settings(max_examples=40, deadline=None)
    @given(locals_strategy(), st.floats(0.0, 1.0))
    def test_cross_matches_quadrature(self, local, u):
        seg = single(local)
        t = u * local.T
        ref = cross_by_quadrature(seg, t)
        assert float(local.cross(t)) == pytest.approx(ref, rel=1e-9, abs=1e-10)

    def test_cubic_boundary_identities(self):
        f = HermiteCubic(1.0, (1.0, 0.0), (0.0, 1.0), (1.0, 0.0))
        assert np.array_equal(f.position(0.0), [0, 0])
        assert np.allclose(f.position(1.0), [1, 0], atol=1e-15)
        assert np.array_equal(f.derivative(0.0), [0, 1])
        assert np.allclose(f.derivative(1.0), [1, 0], atol=1e-15)

    def test_cubic_straight_degeneracy(self):
        f = HermiteCubic(2.0, (4.0, 2.0), (2.0, 1.0), (2.0, 1.0))
        assert np.allclose(f.c2, 0) and np.allclose(f.c3, 0)

    def test_cubic_rejects_bad_duration(self):
        with pytest.raises(ValueError):
            HermiteCubic(0.0, (1, 0), (1, 0), (1, 0))

    def test_sine_bump_full_cross(self):
        # over the whole bump the chord area is -amplitude * length / 2
        for length, lam, T in [(1.0, 0.3, 1.0), (0.2, -2.0, 0.1), (7.0, 1e-3, 3.0)]:
            assert SineBump(T, length, lam).cross(T) == pytest.approx(-lam * length, rel=1e-12)

    def test_circle_area_and_velocity(self):
        loop = CircleLoop(1.5, 0.7, 2.0, 1)
        assert 0.5 * loop.cross(1.5) == pytest.approx(np.pi * 0.49, rel=1e-12)
        assert np.allclose(loop.derivative(0.0), [0, 1.4])
        assert np.allclose(loop.derivative(1.5), [0, 1.4])
        mirrored = CircleLoop(1.5, 0.7, 2.0, -1)
        assert 0.5 * mirrored.cross(1.5) == pytest.approx(-np.pi * 0.49, rel=1e-12)
        assert np.allclose(mirrored.derivative(0.0), [0, 1.4])

    def test_params_roundtrip(self):
        for local in [
            HermiteCubic(1.0, (1, 2), (3, 4), (5, 6)),
            CircleLoop(1.0, 0.5, 2.0, -1),
            SineBump(1.0, 2.0, 0.5),
            Line(1.0, (0.6, 0.8), 2.0),
            BackAndForth(1.0, (1.0, -1.0)),
            Constant(2.0),
        ]:
            again = SEGMENT_KINDS[local.kind].from_params(local.params())
            tau = np.linspace(0, local.T, 7)
            assert np.array_equal(again.position(tau), local.position(tau))


class TestPiecewise:
    def _two(self):
        s1 = Segment(0.0, HermiteCubic(1.0, (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)))
        line = Line.from_velocity(0.5, s1.derivative(1.0))
        s2 = Segment(1.0, line, (1.0, 0.0), tuple(s1.position(1.0)))
        return PiecewiseCurve((s1, s2))

    def test_contiguity(self):
        with pytest.raises(ValueError):
            PiecewiseCurve((Segment(0.0, Constant(1.0)), Segment(1.5, Constant(1.0))))
        with pytest.raises(ValueError):
            PiecewiseCurve(())

    def test_join_and_evaluation(self):
        c = self._two()
        assert c.interval == (0.0, 1.5)
        pos, der = c.join_mismatch()
        assert pos <= 1e-15 and der <= 1e-15
        assert np.allclose(c.position(1.5), [1.0, 1.5])
        assert c.position(np.array([[0.0, 1.0], [1.25, 1.5]])).shape == (2, 2, 2)

    def test_cross_accumulates(self):
        c = self._two()
        for t in (0.3, 1.0, 1.2, 1.5):
            assert float(c.cross_integral(t)) == pytest.approx(cross_by_quadrature(c, t), rel=1e-10, abs=1e-13)

    def test_frame_rotation(self):
        seg = Segment(0.0, Line.from_velocity(1.0, (1.0, 0.0)), rotation_to((0.0, 2.0)), (1.0, 1.0))
        assert np.allclose(seg.position(1.0), [1.0, 2.0])
        assert np.allclose(seg.derivative(0.5), [0.0, 1.0])

    def test_then_and_roundtrip(self):
        c = self._two()
        rest = single(Constant(1.0), 1.5, translation=tuple(c.position(1.5)))
        joined = c.then(rest)
        assert joined.interval == (0.0, 2.5)
        again = PiecewiseCurve.from_dict(joined.to_dict())
        t = np.linspace(0, 2.5, 13)
        assert np.array_equal(again.position(t), joined.position(t))
        assert again.to_dict() == joined.to_dict()
