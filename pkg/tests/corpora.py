"""Seeded random inputs shared by unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from carnot_curves.curves import CircleLoop, HermiteCubic, Line, PiecewiseCurve, Segment, SineBump, rotation_to
from carnot_curves.planar import PlaneProblem


def unit(rng):
    ang = rng.uniform(0, 2 * np.pi)
    return np.array([np.cos(ang), np.sin(ang)])


def random_problem(rng, branch=None, shrink=0.999):
    """Admissible plane problem; ``branch`` forces ``small-v`` or ``large-v``."""
    eta = 10 ** rng.uniform(-3, 0)
    if branch is None:
        branch = "small-v" if rng.random() < 0.5 else "large-v"
    if branch == "small-v":
        speed = rng.uniform(0, 2 * eta)
    else:
        speed = rng.uniform(2 * eta * 1.0001, 10.0) if 2 * eta < 10 else 10.0
    v = speed * unit(rng)
    L = 10 ** rng.uniform(-2, 0.5)
    a = rng.uniform(-1, 1)
    w = v + shrink * eta * rng.random() * unit(rng)
    p = L * v + shrink * eta * L * rng.random() * unit(rng)
    area = shrink * rng.uniform(-1, 1) * eta * (eta + speed) * L**2
    return PlaneProblem(a, a + L, eta, p, v, w, area)


def random_loop(rng, t0=0.0):
    """Closed piecewise-analytic planar curve from 0: a few segments, then a cubic home."""
    segs = []
    t = t0
    pos = np.zeros(2)
    vel = rng.normal(size=2)
    for _ in range(rng.integers(1, 4)):
        T = rng.uniform(0.2, 1.0)
        kind = rng.integers(0, 3)
        if kind == 0:
            P = rng.normal(size=2)
            W = rng.normal(size=2)
            local = HermiteCubic(T, P, vel, W)
            rot = (1.0, 0.0)
        elif kind == 1:
            r = rng.uniform(0.1, 1.0)
            spd = float(np.hypot(*vel))
            local = CircleLoop(T, r, spd / r, int(rng.choice([-1, 1])))
            # local loop leaves along (0, speed); rotate so that matches vel
            rot = rotation_to((vel[1], -vel[0]))
        else:
            local = SineBump(T, rng.uniform(0.1, 2.0), rng.normal())
            rot = rotation_to(vel)
        seg = Segment(t, local, rot, tuple(pos))
        segs.append(seg)
        pos = seg.position(seg.t1)
        vel = seg.derivative(seg.t1)
        t = seg.t1
    T = rng.uniform(0.2, 1.0)
    home = HermiteCubic(T, -pos, vel, rng.normal(size=2))
    segs.append(Segment(t, home, (1.0, 0.0), tuple(pos)))
    return PiecewiseCurve(tuple(segs))


def random_open_curve(rng, t0=0.0):
    """Open planar curve from 0 built from a cubic and a line."""
    T1, T2 = rng.uniform(0.2, 1.0, 2)
    V = rng.normal(size=2)
    cubic = HermiteCubic(T1, rng.normal(size=2), V, rng.normal(size=2))
    s1 = Segment(t0, cubic)
    line = Line.from_velocity(T2, s1.derivative(s1.t1))
    s2 = Segment(s1.t1, line, (1.0, 0.0), tuple(s1.position(s1.t1)))
    return PiecewiseCurve((s1, s2))
