"""Closed-form planar curve segments and their piecewise concatenation.

Every segment is a local curve ``l(tau)`` on ``[0, T]`` with ``l(0) = 0``,
placed in the plane by a rigid frame ``c + R l(tau)``.  Besides position and
derivative, each local curve knows its cross integral

    X(tau) = int_0^tau (l_1 l_2' - l_2 l_1'),

in closed form, which is all the Heisenberg lift and the signed area need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def cross2(a, b):
    """Scalar cross product of 2-vectors, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _as_vec(x, dim=None):
    arr = np.array(x, dtype=float).reshape(-1)
    if dim is not None and arr.shape != (dim,):
        raise ValueError(f"expected a vector of length {dim}, got shape {arr.shape}")
    return arr


class HermiteCubic:
    """The cubic ``f(t) = tV + t^2/T^2 (3P-2TV-TW) + t^3/T^3 (-2P+TV+TW)``.

    Satisfies f(0)=0, f(T)=P, f'(0)=V, f'(T)=W and works in any dimension,
    including the scalar case used for angle and back-and-forth profiles.
    """

    kind = "cubic_hermite"

    def __init__(self, T, P, V, W):
        T = float(T)
        if not T > 0:
            raise ValueError(f"duration must be positive, got {T}")
        self.T = T
        self.P = _as_vec(P)
        self.V = _as_vec(V, self.P.size)
        self.W = _as_vec(W, self.P.size)
        self.dim = self.P.size
        self.c1 = self.V
        self.c2 = (3.0 * self.P - 2.0 * T * self.V - T * self.W) / T**2
        self.c3 = (-2.0 * self.P + T * self.V + T * self.W) / T**3

    def position(self, tau):
        tau = np.asarray(tau, dtype=float)[..., None]
        return tau * (self.c1 + tau * (self.c2 + tau * self.c3))

    def derivative(self, tau):
        tau = np.asarray(tau, dtype=float)[..., None]
        return self.c1 + tau * (2.0 * self.c2 + 3.0 * tau * self.c3)

    def cross(self, tau):
        if self.dim != 2:
            raise ValueError("cross integral is defined for planar cubics only")
        tau = np.asarray(tau, dtype=float)
        k12 = cross2(self.c1, self.c2)
        k13 = cross2(self.c1, self.c3)
        k23 = cross2(self.c2, self.c3)
        return tau**3 * (k12 / 3.0 + tau * (k13 / 2.0 + tau * k23 / 5.0))

    def params(self):
        return {"T": self.T, "P": self.P.tolist(), "V": self.V.tolist(), "W": self.W.tolist()}

    @classmethod
    def from_params(cls, d):
        return cls(d["T"], d["P"], d["V"], d["W"])


class CircleLoop:
    """Loop ``(o r (cos th - 1), r sin th)`` around a circle through the origin.

    ``o = +1`` is the counterclockwise circle centred at ``(-r, 0)``; ``o = -1``
    mirrors it to the clockwise circle centred at ``(r, 0)``.  Both leave the
    origin with velocity ``(0, r th'(0))``.  The angle ``th`` is a scalar
    Hermite cubic from 0 to 2 pi with end slopes ``spin``.
    """

    kind = "circle_loop"

    def __init__(self, T, radius, spin, orientation=1):
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.T = float(T)
        self.radius = float(radius)
        self.spin = float(spin)
        self.orientation = int(orientation)
        self.theta = HermiteCubic(T, [TWO_PI], [spin], [spin])

    def position(self, tau):
        th = self.theta.position(tau)[..., 0]
        r, o = self.radius, self.orientation
        return np.stack([o * r * (np.cos(th) - 1.0), r * np.sin(th)], axis=-1)

    def derivative(self, tau):
        th = self.theta.position(tau)[..., 0]
        dth = self.theta.derivative(tau)[..., 0]
        r, o = self.radius, self.orientation
        return np.stack([-o * r * np.sin(th) * dth, r * np.cos(th) * dth], axis=-1)

    def cross(self, tau):
        # integrand is o r^2 th' (1 - cos th)
        th = self.theta.position(tau)[..., 0]
        return self.orientation * self.radius**2 * (th - np.sin(th))

    def params(self):
        return {
            "T": self.T,
            "radius": self.radius,
            "spin": self.spin,
            "orientation": self.orientation,
        }

    @classmethod
    def from_params(cls, d):
        return cls(d["T"], d["radius"], d["spin"], d["orientation"])


class SineBump:
    """``h(t) = ((L/T) t, lam sin^2(pi t / T))``: travel ``L`` along the axis."""

    kind = "sine_bump"

    def __init__(self, T, length, amplitude):
        self.T = float(T)
        if not self.T > 0:
            raise ValueError("duration must be positive")
        self.length = float(length)
        self.amplitude = float(amplitude)

    def position(self, tau):
        tau = np.asarray(tau, dtype=float)
        k = self.length / self.T
        return np.stack(
            [k * tau, self.amplitude * np.sin(math.pi * tau / self.T) ** 2], axis=-1
        )

    def derivative(self, tau):
        tau = np.asarray(tau, dtype=float)
        k = self.length / self.T
        second = (math.pi * self.amplitude / self.T) * np.sin(TWO_PI * tau / self.T)
        return np.stack([np.full_like(tau, k), second], axis=-1)

    def cross(self, tau):
        tau = np.asarray(tau, dtype=float)
        T = self.T
        k = self.length / T
        om = TWO_PI / T
        wt = om * tau
        return k * self.amplitude * (
            T / (4.0 * math.pi) * (2.0 * np.sin(wt) - wt * np.cos(wt)) - tau / 2.0
        )

    def params(self):
        return {"T": self.T, "length": self.length, "amplitude": self.amplitude}

    @classmethod
    def from_params(cls, d):
        return cls(d["T"], d["length"], d["amplitude"])


class Line:
    """Uniform motion ``tau * speed * direction``."""

    kind = "line"

    def __init__(self, T, direction, speed):
        self.T = float(T)
        if not self.T > 0:
            raise ValueError("duration must be positive")
        self.direction = _as_vec(direction, 2)
        self.speed = float(speed)

    @classmethod
    def from_velocity(cls, T, velocity):
        velocity = _as_vec(velocity, 2)
        speed = float(np.hypot(*velocity))
        direction = velocity / speed if speed > 0 else np.array([1.0, 0.0])
        return cls(T, direction, speed)

    @property
    def velocity(self):
        return self.speed * self.direction

    def position(self, tau):
        return np.asarray(tau, dtype=float)[..., None] * self.velocity

    def derivative(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.broadcast_to(self.velocity, tau.shape + (2,)).copy()

    def cross(self, tau):
        return np.zeros_like(np.asarray(tau, dtype=float))

    def params(self):
        return {"T": self.T, "direction": self.direction.tolist(), "speed": self.speed}

    @classmethod
    def from_params(cls, d):
        return cls(d["T"], d["direction"], d["speed"])


class BackAndForth:
    """``s(tau) w`` with the scalar profile s(0)=s(T)=0, s'(0)=s'(T)=1.

    Encloses no area because it never leaves the line spanned by ``w``.
    """

    kind = "back_and_forth"

    def __init__(self, T, direction):
        self.T = float(T)
        self.direction = _as_vec(direction, 2)
        self.profile = HermiteCubic(T, [0.0], [1.0], [1.0])

    def position(self, tau):
        return self.profile.position(tau) * self.direction

    def derivative(self, tau):
        return self.profile.derivative(tau) * self.direction

    def cross(self, tau):
        return np.zeros_like(np.asarray(tau, dtype=float))

    def params(self):
        return {"T": self.T, "direction": self.direction.tolist()}

    @classmethod
    def from_params(cls, d):
        return cls(d["T"], d["direction"])


class Constant:
    kind = "constant"

    def __init__(self, T):
        self.T = float(T)

    def position(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.zeros(tau.shape + (2,))

    derivative = position

    def cross(self, tau):
        return np.zeros_like(np.asarray(tau, dtype=float))

    def params(self):
        return {"T": self.T}

    @classmethod
    def from_params(cls, d):
        return cls(d["T"])


SEGMENT_KINDS = {
    cls.kind: cls for cls in (HermiteCubic, CircleLoop, SineBump, Line, BackAndForth, Constant)
}


@dataclass(frozen=True)
class Segment:
    """A local curve placed on ``[t0, t0 + T]`` by rotation ``(cos, sin)`` and translation."""

    t0: float
    local: object
    rotation: tuple = (1.0, 0.0)
    translation: tuple = (0.0, 0.0)

    @property
    def t1(self):
        return self.t0 + self.local.T

    def _rotate(self, vec):
        c, s = self.rotation
        return np.stack([c * vec[..., 0] - s * vec[..., 1], s * vec[..., 0] + c * vec[..., 1]], axis=-1)

    def _tau(self, t):
        # snap to the exact ends so adjoining segments meet without cancellation error
        t = np.asarray(t, dtype=float)
        tau = t - self.t0
        T = self.local.T
        slack = _SNAP * np.maximum(1.0, np.abs(t))
        tau = np.where(np.abs(tau) <= slack, 0.0, tau)
        return np.where(np.abs(tau - T) <= slack, T, tau)

    def position(self, t):
        return np.asarray(self.translation) + self._rotate(self.local.position(self._tau(t)))

    def derivative(self, t):
        return self._rotate(self.local.derivative(self._tau(t)))

    def cross(self, t):
        """int_{t0}^t (s_1 s_2' - s_2 s_1') for s = c + R l; rotations preserve the cross product."""
        tau = self._tau(t)
        return cross2(self.translation, self._rotate(self.local.position(tau))) + self.local.cross(tau)

    def to_dict(self):
        return {
            "interval": [self.t0, self.t1],
            "kind": self.local.kind,
            "params": self.local.params(),
            "frame": {"rotation": list(self.rotation), "translation": list(self.translation)},
        }

    @classmethod
    def from_dict(cls, d):
        local = SEGMENT_KINDS[d["kind"]].from_params(d["params"])
        frame = d.get("frame", {})
        return cls(
            float(d["interval"][0]),
            local,
            tuple(float(x) for x in frame.get("rotation", (1.0, 0.0))),
            tuple(float(x) for x in frame.get("translation", (0.0, 0.0))),
        )


_SNAP = 8.0 * float(np.finfo(float).eps)


def _groups(idx):
    """(value, index array) for each distinct entry of ``idx``; contiguous runs fast-pathed."""
    if idx.size and np.all(idx[1:] >= idx[:-1]):
        cuts = np.flatnonzero(np.diff(idx)) + 1
        bounds = np.concatenate([[0], cuts, [idx.size]])
        return [(int(idx[lo]), slice(lo, hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
    return [(int(k), idx == k) for k in np.unique(idx)]


def rotation_to(direction):
    """Rotation ``(cos, sin)`` taking ``e_1`` to the direction of ``direction``."""
    d = _as_vec(direction, 2)
    norm = float(np.hypot(*d))
    if norm == 0.0:
        return (1.0, 0.0)
    return (float(d[0] / norm), float(d[1] / norm))


@dataclass(frozen=True)
class PiecewiseCurve:
    """Contiguous concatenation of closed-form planar segments."""

    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("a piecewise curve needs at least one segment")
        for left, right in zip(segs, segs[1:]):
            if abs(left.t1 - right.t0) > 1e-12 * max(1.0, abs(right.t0)):
                raise ValueError(f"segments are not contiguous at t={right.t0}")
        object.__setattr__(self, "segments", segs)
        starts = np.array([s.t0 for s in segs])
        object.__setattr__(self, "_starts", starts)
        totals = [0.0]
        for s in segs[:-1]:
            totals.append(totals[-1] + float(s.cross(s.t1)))
        object.__setattr__(self, "_cross_before", np.array(totals))

    @property
    def interval(self):
        return (self.segments[0].t0, self.segments[-1].t1)

    def _locate(self, t):
        idx = np.searchsorted(self._starts, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def _evaluate(self, t, method, width):
        t = np.asarray(t, dtype=float)
        if len(self.segments) == 1:
            return np.asarray(method(0, self.segments[0], t), dtype=float)
        flat = t.reshape(-1)
        idx = self._locate(flat)
        out = np.empty(flat.shape + width)
        for k, sel in _groups(idx):
            out[sel] = method(k, self.segments[k], flat[sel])
        return out.reshape(t.shape + width)

    def position(self, t):
        return self._evaluate(t, lambda k, s, x: s.position(x), (2,))

    def derivative(self, t):
        return self._evaluate(t, lambda k, s, x: s.derivative(x), (2,))

    def cross_integral(self, t):
        """int_a^t (s_1 s_2' - s_2 s_1'), exact per segment."""
        return self._evaluate(
            t, lambda k, s, x: self._cross_before[k] + s.cross(x), ()
        )

    def total_cross(self):
        last = self.segments[-1]
        return float(self._cross_before[-1] + last.cross(last.t1))

    def join_mismatch(self):
        """Largest position and derivative jump across interior joins."""
        pos = der = 0.0
        for left, right in zip(self.segments, self.segments[1:]):
            t = right.t0
            pos = max(pos, float(np.max(np.abs(left.position(t) - right.position(t)))))
            der = max(der, float(np.max(np.abs(left.derivative(t) - right.derivative(t)))))
        return pos, der

    def then(self, other):
        return PiecewiseCurve(self.segments + other.segments)

    def to_dict(self):
        return {"segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Segment.from_dict(s) for s in d["segments"]))


def single(local, t0=0.0, rotation=(1.0, 0.0), translation=(0.0, 0.0)):
    """Wrap one local curve as a one-segment PiecewiseCurve."""
    return PiecewiseCurve((Segment(float(t0), local, tuple(rotation), tuple(map(float, translation))),))
