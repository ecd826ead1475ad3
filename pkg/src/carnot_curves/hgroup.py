"""Heisenberg group arithmetic on R^{2n+1} and horizontal lifts of planar curves.

Coordinates are flat vectors ``(x_1..x_n, y_1..y_n, t)``.  The group law is

    (x, y, t) . (x', y', t') = (x + x', y + y', t + t' + 2 sum(y_i x_i' - x_i y_i'))

with left-invariant horizontal fields ``X_i = d_{x_i} + 2 y_i d_t`` and
``Y_i = d_{y_i} - 2 x_i d_t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import PiecewiseCurve, _groups

DEFAULT_HORIZONTAL_TOL = 1e-9


def _dim_to_n(size):
    if size < 3 or size % 2 == 0:
        raise ValueError(f"coordinate vector of length {size} is not 2n+1 with n >= 1")
    return (size - 1) // 2


@dataclass(frozen=True, eq=False)
class HPoint:
    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float).reshape(-1)
        _dim_to_n(arr.size)
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @classmethod
    def origin(cls, n):
        return cls(np.zeros(2 * n + 1))

    @classmethod
    def from_parts(cls, x, y, t):
        return cls(np.concatenate([np.atleast_1d(x), np.atleast_1d(y), [t]]))

    @property
    def n(self):
        return (self.coords.size - 1) // 2

    @property
    def x(self):
        return self.coords[: self.n]

    @property
    def y(self):
        return self.coords[self.n : 2 * self.n]

    @property
    def t(self):
        return float(self.coords[-1])

    def __eq__(self, other):
        return isinstance(other, HPoint) and np.array_equal(self.coords, other.coords)

    def __repr__(self):
        return f"HPoint({self.coords.tolist()})"


@dataclass(frozen=True, eq=False)
class HVector:
    base: HPoint
    components: np.ndarray

    def __post_init__(self):
        arr = np.array(self.components, dtype=float).reshape(-1)
        if arr.size != self.base.coords.size:
            raise ValueError("vector and base point dimensions differ")
        arr.setflags(write=False)
        object.__setattr__(self, "components", arr)


def mul_coords(p, q):
    """Group law on raw coordinate arrays, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError("dimension mismatch in group product")
    n = _dim_to_n(p.shape[-1])
    out = p + q
    px, py = p[..., :n], p[..., n : 2 * n]
    qx, qy = q[..., :n], q[..., n : 2 * n]
    out[..., -1] = p[..., -1] + q[..., -1] + 2.0 * np.sum(py * qx - px * qy, axis=-1)
    return out


def h_mul(p: HPoint, q: HPoint) -> HPoint:
    if p.n != q.n:
        raise ValueError(f"cannot multiply points of H^{p.n} and H^{q.n}")
    return HPoint(mul_coords(p.coords, q.coords))


def h_inv(p: HPoint) -> HPoint:
    return HPoint(-p.coords)


def horizontal_frame(p: HPoint):
    """X_1..X_n, Y_1..Y_n at ``p`` as coordinate vectors."""
    n = p.n
    frame = []
    for i in range(n):
        v = np.zeros(2 * n + 1)
        v[i] = 1.0
        v[-1] = 2.0 * p.y[i]
        frame.append(HVector(p, v))
    for i in range(n):
        v = np.zeros(2 * n + 1)
        v[n + i] = 1.0
        v[-1] = -2.0 * p.x[i]
        frame.append(HVector(p, v))
    return frame


def horizontal_speed(points, derivs):
    """The vertical derivative a horizontal curve must have: 2 sum(x_i' y_i - y_i' x_i)."""
    points = np.asarray(points, dtype=float)
    derivs = np.asarray(derivs, dtype=float)
    n = _dim_to_n(points.shape[-1])
    return 2.0 * np.sum(
        derivs[..., :n] * points[..., n : 2 * n] - derivs[..., n : 2 * n] * points[..., :n], axis=-1
    )


def horizontality_residual(points, derivs):
    """|v_{2n+1} - 2 sum(v_i p_{n+i} - v_{n+i} p_i)| row by row."""
    derivs = np.asarray(derivs, dtype=float)
    return np.abs(derivs[..., -1] - horizontal_speed(points, derivs))


def horizontal_scale(points, derivs):
    points = np.asarray(points, dtype=float)
    derivs = np.asarray(derivs, dtype=float)
    return np.maximum(1.0, np.max(np.abs(points), axis=-1)) * np.maximum(
        1.0, np.max(np.abs(derivs), axis=-1)
    )


def is_horizontal(v: HVector, tol=None) -> bool:
    """Horizontality test; the default budget is 1e-9 scaled by coordinate magnitude."""
    if tol is None:
        tol = DEFAULT_HORIZONTAL_TOL * float(horizontal_scale(v.base.coords, v.components))
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    return bool(horizontality_residual(v.base.coords, v.components) <= tol)


def project_horizontal(points, derivs):
    """Replace the vertical component by the value horizontality requires."""
    out = np.array(derivs, dtype=float, copy=True)
    out[..., -1] = horizontal_speed(points, out)
    return out


def translation_differential(p, derivs):
    """Push tangent vectors through the left translation q -> p.q."""
    p = np.asarray(p, dtype=float)
    out = np.array(derivs, dtype=float, copy=True)
    n = _dim_to_n(p.shape[-1])
    out[..., -1] = out[..., -1] + 2.0 * np.sum(
        p[n : 2 * n] * out[..., :n] - p[:n] * out[..., n : 2 * n], axis=-1
    )
    return out


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Samples of a curve in H^n at strictly increasing times in [0, 1]."""

    times: np.ndarray
    points: np.ndarray
    derivatives: np.ndarray | None = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        points = np.array(self.points, dtype=float)
        if points.ndim != 2 or points.shape[0] != times.size:
            raise ValueError("points must be an array of shape (len(times), 2n+1)")
        _dim_to_n(points.shape[1])
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        if self.derivatives is not None:
            derivs = np.array(self.derivatives, dtype=float)
            if derivs.shape != points.shape:
                raise ValueError("derivative samples must match point samples")
            object.__setattr__(self, "derivatives", derivs)

    @property
    def n(self):
        return (self.points.shape[1] - 1) // 2

    def __len__(self):
        return self.times.size

    def point(self, k) -> HPoint:
        return HPoint(self.points[k])


def sample(curve, times, with_derivatives=True) -> SampledCurve:
    times = np.asarray(times, dtype=float)
    derivs = curve.derivative(times) if with_derivatives else None
    return SampledCurve(times, curve.position(times), derivs)


class HorizontalCurve:
    """Horizontal curve whose projection onto each (x_i, y_i) plane is a planar curve.

    The planar curve for pair ``i`` is added to ``start``'s ``(x_i, y_i)``; the
    last coordinate is ``start.t`` plus the lift integral, evaluated in closed
    form from each planar curve's cross integral.
    """

    def __init__(self, planar, start: HPoint):
        planar = tuple(planar)
        if len(planar) != start.n:
            raise ValueError(f"need {start.n} planar curves, got {len(planar)}")
        a, b = planar[0].interval
        for c in planar[1:]:
            ca, cb = c.interval
            if abs(ca - a) > 1e-12 or abs(cb - b) > 1e-12:
                raise ValueError("planar curves must share one time interval")
        self.planar = planar
        self.start = start
        self.interval = (a, b)
        self.n = start.n
        self._origins = [c.position(a) for c in planar]

    def position(self, t):
        t = np.asarray(t, dtype=float)
        n = self.n
        s = self.start.coords
        out = np.empty(t.shape + (2 * n + 1,))
        vertical = np.full(t.shape, s[-1])
        for i, c in enumerate(self.planar):
            sig = c.position(t)
            out[..., i] = s[i] + sig[..., 0]
            out[..., n + i] = s[n + i] + sig[..., 1]
            sig0 = self._origins[i]
            # x'y - y'x = -(sigma x sigma') + s_y sigma_1' - s_x sigma_2'
            vertical = vertical + 2.0 * (
                -c.cross_integral(t)
                + s[n + i] * (sig[..., 0] - sig0[0])
                - s[i] * (sig[..., 1] - sig0[1])
            )
        out[..., -1] = vertical
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        n = self.n
        s = self.start.coords
        out = np.empty(t.shape + (2 * n + 1,))
        base = np.zeros(t.shape + (2 * n + 1,))
        for i, c in enumerate(self.planar):
            d = c.derivative(t)
            sig = c.position(t)
            out[..., i] = d[..., 0]
            out[..., n + i] = d[..., 1]
            base[..., i] = s[i] + sig[..., 0]
            base[..., n + i] = s[n + i] + sig[..., 1]
        out[..., -1] = horizontal_speed(base, out)
        return out

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "start": self.start.coords.tolist(),
            "planar": [c.to_dict() for c in self.planar],
        }

    @classmethod
    def from_dict(cls, d):
        return cls([PiecewiseCurve.from_dict(c) for c in d["planar"]], HPoint(d["start"]))


def lift(planar, start: HPoint) -> HorizontalCurve:
    """Horizontal lift of n planar curves sharing one time interval."""
    return HorizontalCurve(planar, start)


def signed_area(sigma: PiecewiseCurve, tol=1e-12) -> float:
    """Signed area between ``sigma`` and the chord from 0 to its endpoint."""
    a, _ = sigma.interval
    if np.max(np.abs(sigma.position(a))) > tol:
        raise ValueError("signed area needs a curve starting at the origin")
    return 0.5 * sigma.total_cross()


class TranslatedCurve:
    """Pointwise left translation ``t -> p . c(t)`` of a curve in H^n."""

    def __init__(self, p: HPoint, curve):
        if p.n != curve.n:
            raise ValueError("dimension mismatch between point and curve")
        self.p = p
        self.curve = curve
        self.interval = curve.interval
        self.n = curve.n

    def position(self, t):
        return mul_coords(self.p.coords, self.curve.position(t))

    def derivative(self, t):
        return translation_differential(self.p.coords, self.curve.derivative(t))


def left_translate_curve(p: HPoint, curve):
    if isinstance(curve, SampledCurve):
        if p.n != curve.n:
            raise ValueError("dimension mismatch between point and curve")
        derivs = None
        if curve.derivatives is not None:
            derivs = translation_differential(p.coords, curve.derivatives)
        return SampledCurve(curve.times, mul_coords(p.coords, curve.points), derivs)
    return TranslatedCurve(p, curve)


class HorizontalPath:
    """Concatenation of horizontal pieces over consecutive intervals."""

    def __init__(self, pieces):
        pieces = tuple(pieces)
        if not pieces:
            raise ValueError("empty path")
        self.pieces = pieces
        self.n = pieces[0].n
        self.interval = (pieces[0].interval[0], pieces[-1].interval[1])
        self._starts = np.array([p.interval[0] for p in pieces])

    def _evaluate(self, t, name):
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        idx = np.clip(np.searchsorted(self._starts, flat, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty(flat.shape + (2 * self.n + 1,))
        for k, sel in _groups(idx):
            out[sel] = getattr(self.pieces[k], name)(flat[sel])
        return out.reshape(t.shape + (2 * self.n + 1,))

    def position(self, t):
        return self._evaluate(t, "position")

    def derivative(self, t):
        return self._evaluate(t, "derivative")

    def joints(self):
        """(time, position jump, derivative jump) at each interior joint."""
        rows = []
        for left, right in zip(self.pieces, self.pieces[1:]):
            t = right.interval[0]
            dp = float(np.max(np.abs(left.position(t) - right.position(t))))
            dd = float(np.max(np.abs(left.derivative(t) - right.derivative(t))))
            rows.append((t, dp, dd))
        return rows

    def to_dict(self):
        return {"pieces": [p.to_dict() for p in self.pieces]}

    @classmethod
    def from_dict(cls, d):
        return cls([HorizontalCurve.from_dict(p) for p in d["pieces"]])
