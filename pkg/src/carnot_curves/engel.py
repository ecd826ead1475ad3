"""The Engel group on R^4 and a horizontal curve no C^1 horizontal curve can follow.

Points are ``(x1, x2, x3, x4)`` with left-invariant frame

    X1 = d1,  X2 = d2 + x1 d3 + x1^2/2 d4,  X3 = d3 + x1 d4,  X4 = d4

and brackets ``[X1, X2] = X3``, ``[X1, X3] = X4``.  These are exponential
coordinates of the second kind, ``x <-> exp(x2 X2 + x3 X3 + x4 X4) exp(x1 X1)``;
``engel_mul`` converts to first-kind coordinates, multiplies there with the
truncated BCH formula, and converts back.

Horizontal curves come from piecewise-constant controls along X1 and X2
(``ControlWord``) or from polynomial controls (``PolynomialControlCurve``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

# s = cbrt(K) delta^2 and the spiral's control speed is 8 s / delta, so speed <= delta iff K <= 1/512.
K_MAX = 1.0 / 512.0
GENERATORS = ("X1", "X2")


class ObstructionHypothesisError(ValueError):
    """The curve's second coordinate is not nondecreasing on the window."""


@dataclass(frozen=True, eq=False)
class EPoint:
    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float).reshape(-1)
        if arr.size != 4:
            raise ValueError("an Engel point has four coordinates")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @classmethod
    def origin(cls):
        return cls(np.zeros(4))

    def __eq__(self, other):
        return isinstance(other, EPoint) and np.array_equal(self.coords, other.coords)

    def __repr__(self):
        return f"EPoint({self.coords.tolist()})"


def _coords(p):
    return p.coords if isinstance(p, EPoint) else np.asarray(p, dtype=float)


def engel_frame(p):
    """X1..X4 at ``p`` as coordinate vectors (rows of a 4x4 array)."""
    x1 = float(_coords(p)[0])
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, x1, 0.5 * x1 * x1],
            [0.0, 0.0, 1.0, x1],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def horizontal_field(points, a, b):
    """``a X1 + b X2`` along an array of points."""
    points = np.asarray(points, dtype=float)
    x1 = points[..., 0]
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return np.stack([a + 0 * x1, b + 0 * x1, b * x1, 0.5 * b * x1 * x1], axis=-1)


def bracket(u, v):
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    out = np.zeros(np.broadcast_shapes(u.shape, v.shape))
    out[..., 2] = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    out[..., 3] = u[..., 0] * v[..., 2] - u[..., 2] * v[..., 0]
    return out


def bch_mul_step3(u, v):
    """log(exp u exp v); the cubic truncation is exact because the algebra is 3-step."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    uv = bracket(u, v)
    return u + v + 0.5 * uv + (bracket(u, uv) + bracket(v, bracket(v, u))) / 12.0


def to_exp(x):
    """Second-kind coordinates to first-kind (Lie algebra) coordinates."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3, x4 = (x[..., k] for k in range(4))
    return np.stack([x1, x2, x3 - 0.5 * x1 * x2, x4 - 0.5 * x1 * x3 + x1 * x1 * x2 / 12.0], axis=-1)


def from_exp(z):
    z = np.asarray(z, dtype=float)
    z1, z2, z3, z4 = (z[..., k] for k in range(4))
    return np.stack([z1, z2, z3 + 0.5 * z1 * z2, z4 + 0.5 * z1 * z3 + z1 * z1 * z2 / 6.0], axis=-1)


def bch_mul(p, q):
    """The product computed through the Lie algebra; agrees with ``engel_mul`` up to rounding."""
    return from_exp(bch_mul_step3(to_exp(_coords(p)), to_exp(_coords(q))))


def engel_mul(p, q):
    # polynomial law of the second-kind chart; a fixed x1 keeps vertical shifts exact
    a, b = _coords(p), _coords(q)
    p1 = a[..., 0]
    out = np.stack(
        [
            p1 + b[..., 0],
            a[..., 1] + b[..., 1],
            a[..., 2] + b[..., 2] + p1 * b[..., 1],
            a[..., 3] + b[..., 3] + p1 * b[..., 2] + 0.5 * p1 * p1 * b[..., 1],
        ],
        axis=-1,
    )
    return EPoint(out) if isinstance(p, EPoint) else out


def engel_inv(p):
    x = _coords(p)
    x1, x2, x3, x4 = (x[..., k] for k in range(4))
    out = np.stack([-x1, -x2, x1 * x2 - x3, x1 * x3 - 0.5 * x1 * x1 * x2 - x4], axis=-1)
    return EPoint(out) if isinstance(p, EPoint) else out


def left_differential(p, vectors):
    """Push tangent vectors at q through q -> p.q (independent of q)."""
    p1 = float(_coords(p)[0])
    v = np.array(vectors, dtype=float, copy=True)
    v[..., 3] = v[..., 3] + p1 * v[..., 2] + 0.5 * p1 * p1 * v[..., 1]
    v[..., 2] = v[..., 2] + p1 * v[..., 1]
    return v


def flow(p, gen, c, t):
    """Exact flow of ``c * gen`` for time ``t``; broadcasts over ``t``."""
    x = _coords(p)
    ct = c * np.asarray(t, dtype=float)
    x = np.broadcast_to(x, ct.shape + (4,)).copy()
    if gen == "X1":
        x[..., 0] += ct
    elif gen == "X2":
        x1 = x[..., 0]
        x[..., 1] += ct
        x[..., 2] += x1 * ct
        x[..., 3] += 0.5 * x1 * x1 * ct
    else:
        raise ValueError(f"unknown generator {gen!r}")
    return EPoint(x) if isinstance(p, EPoint) and ct.ndim == 0 else x


@dataclass(frozen=True)
class ControlWord:
    """Piecewise-constant controls: legs ``(generator, coefficient, duration)``."""

    legs: tuple = ()

    def __post_init__(self):
        legs = []
        for gen, c, d in self.legs:
            if gen not in GENERATORS:
                raise ValueError(f"unknown generator {gen!r}")
            if not d > 0:
                raise ValueError("leg durations must be positive")
            legs.append((gen, float(c), float(d)))
        object.__setattr__(self, "legs", tuple(legs))

    @property
    def duration(self):
        return math.fsum(d for _, _, d in self.legs)

    @property
    def speed(self):
        return max((abs(c) for _, c, _ in self.legs), default=0.0)

    def reversed(self):
        return ControlWord(tuple((g, -c, d) for g, c, d in reversed(self.legs)))

    def to_dict(self):
        return {"legs": [[g, c, d] for g, c, d in self.legs]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple((str(g), float(c), float(t)) for g, c, t in d["legs"]))


class WordCurve:
    """The horizontal curve a control word traces from ``start``, on ``[t0, t0 + duration]``."""

    def __init__(self, word: ControlWord, start=None, t0=0.0):
        self.word = word
        self.start = np.zeros(4) if start is None else np.array(_coords(start), dtype=float)
        self.t0 = float(t0)
        self.interval = (self.t0, self.t0 + word.duration)
        self._breaks = self.t0 + np.concatenate([[0.0], np.cumsum([d for _, _, d in word.legs])])
        states = [self.start]
        for gen, c, d in word.legs:
            states.append(flow(states[-1], gen, c, d))
        self._states = np.array(states)

    @property
    def end(self):
        return self._states[-1]

    def _leg(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(np.searchsorted(self._breaks, t, side="right") - 1, 0, max(len(self.word.legs) - 1, 0))

    def position(self, t):
        t = np.asarray(t, dtype=float)
        if not self.word.legs:
            return np.broadcast_to(self.start, t.shape + (4,)).copy()
        k = self._leg(t)
        out = np.empty(t.shape + (4,))
        for j, (gen, c, _) in enumerate(self.word.legs):
            sel = k == j
            if np.any(sel):
                out[sel] = flow(self._states[j], gen, c, t[sel] - self._breaks[j])
        return out

    def controls(self, t):
        """``(a, b)`` with derivative ``a X1 + b X2``; right-continuous at leg breaks."""
        k = self._leg(t)
        a = np.array([c if g == "X1" else 0.0 for g, c, _ in self.word.legs])
        b = np.array([c if g == "X2" else 0.0 for g, c, _ in self.word.legs])
        return a[k], b[k]

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self.controls(t)
        return horizontal_field(self.position(t), a, b)


def apply_word(p, word: ControlWord):
    """Endpoint and evaluator of the word traced from ``p``."""
    curve = WordCurve(word, p)
    end = curve.end
    return (EPoint(end) if isinstance(p, EPoint) else end), curve


def make_spiral(delta, K):
    """Word on ``[0, delta]`` with speed ``<= delta`` ending at ``(0, 0, 0, -K delta^6)``.

    Two commutator rectangles of side ``s = cbrt(K) delta^2``: the first
    leaves ``(0, 0, s^2, -s^3/2)``, the second cancels ``s^2`` in ``x3`` and
    adds another ``-s^3/2`` in ``x4``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not K > 0:
        raise ValueError("K must be positive")
    if K > K_MAX * (1 + 1e-12):
        raise ValueError(
            f"K = {K} exceeds K_max = {K_MAX}; the largest reachable |x4| at speed {delta} is {K_MAX * delta**6}"
        )
    s = float(np.cbrt(K)) * delta * delta
    c = 8.0 * s / delta
    d = delta / 8.0
    pattern = [("X2", 1), ("X1", -1), ("X2", -1), ("X1", 1), ("X2", 1), ("X1", 1), ("X2", -1), ("X1", -1)]
    return ControlWord(tuple((g, sign * c, d) for g, sign in pattern))


def spiral_endpoint(delta, K):
    return apply_word(np.zeros(4), make_spiral(delta, K))[0]


# -- counterexample -----------------------------------------------------------


def dyadic_rationals(N):
    """1/2, 1/4, 3/4, 1/8, 3/8, ... (the first ``N``)."""
    out, level = [], 1
    while len(out) < N:
        den = 2**level
        for num in range(1, den, 2):
            out.append(num / den)
            if len(out) == N:
                break
        level += 1
    return out


@dataclass(frozen=True)
class CounterexampleSpec:
    """Spiral sites ``q_i`` with widths ``eps_i`` and the height constant ``K``."""

    pairs: tuple
    K: float

    def __post_init__(self):
        pairs = tuple((float(q), float(e)) for q, e in self.pairs)
        if not pairs:
            raise ValueError("need at least one spiral")
        for q, e in pairs:
            if not (0.0 < q < 1.0 and e > 0.0 and q + e <= 1.0):
                raise ValueError(f"spiral ({q}, {e}) does not fit in (0, 1)")
        ordered = sorted(pairs)
        for (q0, e0), (q1, _) in zip(ordered, ordered[1:]):
            if q0 + e0 > q1:
                raise ValueError(f"spiral intervals ({q0}, {q0 + e0}) and ({q1}, ...) overlap")
        if not 0 < self.K <= K_MAX * (1 + 1e-12):
            raise ValueError(f"K must lie in (0, {K_MAX}]")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "K", float(self.K))

    @classmethod
    def from_budget(cls, eps, N, K=K_MAX / 2, profile="geometric"):
        """``N`` dyadic sites; widths ``eps 2^(-i-1)`` or ``eps/(N+1)``, halved gaps enforce disjointness."""
        qs = dyadic_rationals(N)
        ordered = sorted(qs)
        nxt = {q: (ordered[k + 1] if k + 1 < len(ordered) else 1.0) for k, q in enumerate(ordered)}
        pairs = []
        for i, q in enumerate(qs, start=1):
            if profile == "geometric":
                e = eps * 2.0 ** (-i - 1)
            elif profile == "uniform":
                e = eps / (N + 1)
            else:
                raise ValueError(f"unknown profile {profile!r}")
            pairs.append((q, min(e, 0.5 * (nxt[q] - q))))
        return cls(tuple(pairs), K)

    @property
    def total_width(self):
        return math.fsum(e for _, e in self.pairs)

    def to_dict(self):
        return {"K": self.K, "pairs": [[q, e] for q, e in self.pairs]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple((float(q), float(e)) for q, e in d["pairs"]), float(d["K"]))


class CounterexampleCurve:
    """Off the spirals ``(0, t - H(t), 0, -V(t))``; on spiral ``i`` the base point times the spiral."""

    def __init__(self, spec: CounterexampleSpec):
        self.spec = spec
        self.interval = (0.0, 1.0)
        order = sorted(range(len(spec.pairs)), key=lambda k: spec.pairs[k][0])
        self.q = np.array([spec.pairs[k][0] for k in order])
        self.eps = np.array([spec.pairs[k][1] for k in order])
        self.drop = spec.K * self.eps**6
        self._H = np.concatenate([[0.0], np.cumsum(self.eps)])
        self._V = np.concatenate([[0.0], np.cumsum(self.drop)])
        self.spirals = [WordCurve(make_spiral(e, spec.K), None, q) for q, e in zip(self.q, self.eps)]

    def H(self, t):
        return self._H[np.searchsorted(self.q, t, side="left")]

    def V(self, t):
        return self._V[np.searchsorted(self.q, t, side="left")]

    def spiral_index(self, t):
        """Index of the open spiral interval containing ``t``, or -1."""
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.q, t, side="right") - 1
        inside = (k >= 0) & (t < self.q[np.maximum(k, 0)] + self.eps[np.maximum(k, 0)]) & (t > self.q[np.maximum(k, 0)])
        return np.where(inside, k, -1)

    def in_S(self, t):
        return self.spiral_index(t) >= 0

    def base_point(self, k):
        q = self.q[k]
        return np.array([0.0, q - self._H[k], 0.0, -self._V[k]])

    def position(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (4,))
        out[..., 1] = t - self.H(t)
        out[..., 3] = -self.V(t)
        idx = self.spiral_index(t)
        for k in np.unique(idx[idx >= 0]):
            sel = idx == k
            # base has x1 = 0, so the product is plain addition
            out[sel] = self.base_point(k) + self.spirals[k].position(t[sel])
        return out

    def derivative(self, t):
        """``(0, 1, 0, 0)`` off the spirals; the spiral's velocity on them."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (4,))
        out[..., 1] = 1.0
        idx = self.spiral_index(t)
        for k in np.unique(idx[idx >= 0]):
            sel = idx == k
            out[sel] = self.spirals[k].derivative(t[sel])
        return out

    def complement_components(self):
        """Maximal intervals of ``[0, 1]`` outside the open spiral intervals."""
        comps, left = [], 0.0
        for q, e in zip(self.q, self.eps):
            comps.append((left, float(q)))
            left = float(q + e)
        comps.append((left, 1.0))
        return comps


def build_counterexample(spec: CounterexampleSpec) -> CounterexampleCurve:
    return CounterexampleCurve(spec)


# -- C^1 comparison curves ------------------------------------------------------


class PolynomialControlCurve:
    """Horizontal curve with polynomial controls ``a, b`` passing through ``anchor`` at ``t0``."""

    def __init__(self, a, b, t0, anchor, interval=(0.0, 1.0)):
        self.a = Polynomial(np.atleast_1d(np.asarray(a, dtype=float)))
        self.b = Polynomial(np.atleast_1d(np.asarray(b, dtype=float)))
        self.t0 = float(t0)
        self.anchor = np.array(_coords(anchor), dtype=float)
        self.interval = tuple(float(x) for x in interval)
        x1 = self.a.integ(lbnd=self.t0) + self.anchor[0]
        x2 = self.b.integ(lbnd=self.t0) + self.anchor[1]
        x3 = (x1 * self.b).integ(lbnd=self.t0) + self.anchor[2]
        x4 = (0.5 * x1 * x1 * self.b).integ(lbnd=self.t0) + self.anchor[3]
        self.components = (x1, x2, x3, x4)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([c(t) for c in self.components], axis=-1)

    def controls(self, t):
        t = np.asarray(t, dtype=float)
        return self.a(t), self.b(t)

    def derivative(self, t):
        a, b = self.controls(t)
        return horizontal_field(self.position(t), a, b)

    def to_dict(self):
        return {
            "a": self.a.coef.tolist(),
            "b": self.b.coef.tolist(),
            "t0": self.t0,
            "anchor": self.anchor.tolist(),
            "interval": list(self.interval),
        }


class ShiftedLine:
    """The X2 line ``(0, t - c, 0, h)``: the counterexample's shape on one complementary component."""

    def __init__(self, shift, height):
        self.shift = float(shift)
        self.height = float(height)
        self.interval = (0.0, 1.0)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (4,))
        out[..., 1] = t - self.shift
        out[..., 3] = self.height
        return out

    def controls(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros_like(t), np.ones_like(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (4,))
        out[..., 1] = 1.0
        return out


def comparison_corpus(gamma: CounterexampleCurve, size=50, seed=0, lines=10, degree=3):
    """Seeded C^1 horizontal curves through points of ``gamma`` off the spirals.

    The first ``lines`` members are X2 lines matching ``gamma`` on its longest
    complementary components; the rest have random polynomial controls with
    ``b > 0`` on [0, 1], anchored at a random off-spiral time.
    Returns a list of ``(curve, t0)``.
    """
    rng = np.random.default_rng(seed)
    comps = sorted(gamma.complement_components(), key=lambda c: c[0] - c[1])
    out = []
    for lo, hi in comps[: min(lines, size)]:
        t0 = 0.5 * (lo + hi)
        p = gamma.position(t0)
        out.append((ShiftedLine(t0 - p[1], p[3]), t0))
    grid = np.linspace(0.0, 1.0, 201)
    while len(out) < size:
        t0 = float(rng.uniform(0.0, 0.9))
        if gamma.in_S(t0):
            continue
        a = rng.normal(0.0, 1.0, degree + 1)
        b = rng.normal(0.0, 0.5, degree + 1)
        b[0] = rng.uniform(0.2, 2.0)
        curve = PolynomialControlCurve(a, b, t0, gamma.position(t0))
        if np.min(curve.b(grid)) <= 0.05:
            continue
        out.append((curve, t0))
    return out


def agreement_measure(gamma, Gamma, match_tol=1e-9, resolution=100_000, chunk=20_000):
    """Grid estimate of the measure of ``{t in [0, 1] : |gamma(t) - Gamma(t)|_max <= match_tol}``."""
    if resolution < 10:
        raise ValueError("resolution must be at least 10")
    hits = 0
    for lo in range(0, resolution, chunk):
        k = np.arange(lo, min(resolution, lo + chunk))
        t = (k + 0.5) / resolution
        diff = np.max(np.abs(gamma.position(t) - Gamma.position(t)), axis=-1)
        hits += int(np.count_nonzero(diff <= match_tol))
    return hits / resolution


def obstruction_check(Gamma, t0, delta, tol=1e-12, samples=2001):
    """Second coordinate nondecreasing on ``(t0, t0 + delta)`` forces the fourth to stay above its start.

    Raises ``ObstructionHypothesisError`` when a sampled ``Gamma_2'`` is
    negative.  When the curve exposes ``controls``, the mechanism
    ``Gamma_4' = b Gamma_1^2 / 2 >= 0`` is checked as well.
    """
    t = np.linspace(t0, t0 + delta, samples)[1:]
    d = Gamma.derivative(t)
    if np.any(d[:, 1] < -tol):
        k = int(np.argmin(d[:, 1]))
        raise ObstructionHypothesisError(f"second coordinate decreases near t = {t[k]} (rate {d[k, 1]:.3g})")
    x4 = Gamma.position(t)[:, 3]
    start = float(Gamma.position(np.array([t0]))[0, 3])
    ok = bool(np.min(x4 - start) >= -tol * max(1.0, abs(start)))
    if hasattr(Gamma, "controls"):
        _, b = Gamma.controls(t)
        x1 = Gamma.position(t)[:, 0]
        ok = ok and bool(np.min(0.5 * b * x1 * x1) >= -tol)
    return ok


def contradiction_window(gamma: CounterexampleCurve, Gamma, t0, delta, tol=None, samples=4001):
    """Times past the first spiral after ``t0``, within ``delta``, where ``Gamma`` meets ``gamma``.

    For ``Gamma(t0) = gamma(t0)`` with ``Gamma_2' >= 0`` the fourth coordinate
    of ``Gamma`` cannot drop while ``gamma``'s has dropped by at least one
    spiral height, so the result should be empty.  The default ``tol`` is
    half the smallest spiral height.
    """
    if tol is None:
        tol = 0.5 * float(np.min(gamma.drop))
    k = int(np.searchsorted(gamma.q, t0, side="right"))
    if k >= gamma.q.size:
        return np.array([])
    lo = gamma.q[k] + gamma.eps[k]
    hi = t0 + delta
    if lo >= hi:
        return np.array([])
    t = np.linspace(lo, hi, samples)
    t = t[~gamma.in_S(t)]
    diff = np.max(np.abs(gamma.position(t) - Gamma.position(t)), axis=-1)
    return t[diff <= tol]
