"""C^1 horizontal approximation of sampled horizontal curves in H^n.

Pipeline: ``select_K`` keeps the well-behaved samples as runs of closed
intervals, ``gap_params`` turns each interval between kept samples into n
plane problems, ``interpolate_gap`` solves them and lifts, and ``assemble``
glues the pieces (plus straight horizontal extensions to [0, 1]) into one
C^1 horizontal path that passes through every kept sample with the sampled
derivative.  ``verify`` measures the result.

Between two consecutive kept samples the path is the same plane-problem
interpolant as across a gap, so "Gamma = gamma on K" holds at sample
resolution.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .curves import Line, single
from .hgroup import (
    HorizontalCurve,
    HorizontalPath,
    HPoint,
    SampledCurve,
    horizontal_scale,
    horizontality_residual,
    mul_coords,
    project_horizontal,
)
from .planar import PlaneProblem, construct_sigma

log = logging.getLogger(__name__)

# sup|psi' - gamma'(a)| <= C eps on unit-scale data; frozen from the corpus.
INTERPOLATION_CONSTANT = 400.0
_SLACK = 1.0 + 1e-9


class KSelectionError(ValueError):
    """No admissible K exists at the sampling resolution."""


class AdmissibilityError(ValueError):
    """Gap data violate the plane-problem hypotheses."""


@dataclass(frozen=True)
class Gap:
    a: float
    b: float
    eps: float
    ia: int
    ib: int


@dataclass(frozen=True)
class KSelection:
    """K as runs of kept samples; ``curve`` carries the horizontal derivatives used on K."""

    curve: SampledCurve
    kept: np.ndarray
    runs: tuple
    gaps: tuple
    gap_mass: float
    profile: tuple
    excluded_nonhorizontal: int = 0
    excluded_oscillation: int = 0

    @property
    def m(self):
        return float(self.curve.times[self.runs[0][0]])

    @property
    def M(self):
        return float(self.curve.times[self.runs[-1][1]])

    @property
    def intervals(self):
        t = self.curve.times
        return [(float(t[i]), float(t[j])) for i, j in self.runs]


@dataclass(frozen=True)
class GapParams:
    a: float
    b: float
    eps: float
    J: int  # 0-based pair index carrying the vertical correction
    problems: tuple
    start: HPoint
    phi_end: HPoint
    gamma_a: np.ndarray = field(repr=False)
    gamma_b: np.ndarray = field(repr=False)
    dgamma_a: np.ndarray = field(repr=False)
    dgamma_b: np.ndarray = field(repr=False)


def _osc_windows(r_max):
    r, out = 1, []
    while r <= r_max:
        out.append(r)
        r *= 2
    return out or [1]


def _oscillation(D, r):
    """Mean of |D_j - D_k| over the clipped window |j - k| <= r, for every k."""
    N = D.shape[0]
    out = np.zeros(N)
    counts = np.zeros(N)
    for shift in range(-r, r + 1):
        lo, hi = max(0, -shift), min(N, N - shift)
        diff = np.linalg.norm(D[lo + shift : hi + shift] - D[lo:hi], axis=1)
        out[lo:hi] += diff
        counts[lo:hi] += 1
    return out / counts


def _runs(mask, min_run):
    runs, k, N = [], 0, mask.size
    while k < N:
        if mask[k]:
            j = k
            while j + 1 < N and mask[j + 1]:
                j += 1
            if j - k + 1 >= min_run:
                runs.append((k, j))
            k = j + 1
        else:
            k += 1
    return runs


def _mass(times, runs):
    return 1.0 - sum(float(times[j] - times[i]) for i, j in runs)


def minimal_epsilon(pa, pb, da, db, L):
    """Smallest eps for which the gap inequalities of the interpolation step hold.

    Positions ``pa, pb`` and horizontal derivatives ``da, db`` at the ends of an
    interval of length ``L``; also enforces ``L <= eps``.
    """
    n = (pa.size - 1) // 2
    phi = mul_coords(-pa, pb)
    flat = np.concatenate([da[: 2 * n], [0.0]])
    c1 = float(np.linalg.norm(db - da))
    c2 = float(np.linalg.norm(pb - pa - L * da)) / L
    c3 = float(np.linalg.norm(phi - L * flat)) / L
    q = abs(float(phi[-1])) / L**2
    S = float(np.sum(np.abs(da[: 2 * n])))
    c4 = 2.0 * q / (S + math.sqrt(S * S + 4.0 * q)) if q > 0 else 0.0
    return max(c1, c2, c3, c4, L) * _SLACK


def select_K(gamma: SampledCurve, eps, horiz_tol=None, osc_tol=0.2, window=None, min_run=3):
    """Choose the kept samples K with gap mass below ``eps``.

    Samples are dropped when their (finite-difference) derivative is not
    horizontal within ``horiz_tol`` or when the windowed mean deviation
    ``mean |D_j - D_k|`` over ``|t_j - t_k| <= window`` exceeds
    ``osc_tol (1 + |D_k|)`` for some dyadic window.  If that removes too much,
    the least oscillating exclusions are restored; horizontality failures are
    never restored.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    N = len(gamma)
    if N < 3:
        raise KSelectionError("need at least three samples")
    times, P = gamma.times, gamma.points
    supplied = gamma.derivatives is not None
    D = gamma.derivatives if supplied else np.gradient(P, times, axis=0, edge_order=2)
    if horiz_tol is None:
        horiz_tol = 1e-8 if supplied else 1e-3

    residual = horizontality_residual(P, D) / horizontal_scale(P, D)
    horizontal = residual <= horiz_tol
    if not np.any(horizontal):
        raise KSelectionError(
            f"no sample is horizontal within {horiz_tol} (smallest scaled residual {residual.min():.3g})"
        )

    h = float(np.median(np.diff(times)))
    if window is None:
        window = eps / 4.0
    windows = _osc_windows(max(1, int(window / h)))
    thresh = osc_tol * (1.0 + np.linalg.norm(D, axis=1))
    osc = {r: _oscillation(D, r) for r in windows}
    badness = np.max([osc[r] / thresh for r in windows], axis=0)

    def attempt(tau):
        keep = horizontal & (badness <= tau)
        runs = _runs(keep, min_run)
        return runs, _mass(times, runs)

    runs, mass = attempt(1.0)
    if mass >= eps:
        floor_runs, floor_mass = attempt(np.inf)
        if floor_mass >= eps:
            raise KSelectionError(
                f"cannot reach gap mass < {eps}: horizontality failures alone leave {floor_mass:.6g}"
            )
        levels = np.unique(badness[horizontal & (badness > 1.0)])
        lo, hi = 0, levels.size - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if attempt(levels[mid])[1] < eps:
                hi = mid
            else:
                lo = mid + 1
        runs, mass = attempt(levels[lo])
        if mass >= eps:
            runs, mass = floor_runs, floor_mass
        log.info("oscillation exclusions trimmed to meet the budget")
    if not runs:
        raise KSelectionError("no run of kept samples is long enough")

    kept = np.zeros(N, dtype=bool)
    Dk = np.zeros_like(P)
    for i, j in runs:
        kept[i : j + 1] = True
        if supplied:
            Dk[i : j + 1] = D[i : j + 1]
        else:
            # one-sided at the run ends: derivatives never look across a gap
            Dk[i : j + 1] = np.gradient(P[i : j + 1], times[i : j + 1], axis=0, edge_order=2)
    Dk = project_horizontal(P, Dk)
    curve = SampledCurve(times, P, Dk)

    gaps = []
    for (_, j), (i, _) in zip(runs, runs[1:]):
        L = float(times[i] - times[j])
        gaps.append(Gap(float(times[j]), float(times[i]), minimal_epsilon(P[j], P[i], Dk[j], Dk[i], L), j, i))
    # eps_i nonincreasing in gap length: raise each to the largest eps among no-longer gaps
    order = sorted(range(len(gaps)), key=lambda g: gaps[g].b - gaps[g].a)
    running = 0.0
    adjusted = list(gaps)
    for g in order:
        running = max(running, gaps[g].eps)
        old = gaps[g]
        adjusted[g] = Gap(old.a, old.b, running, old.ia, old.ib)

    profile = []
    worst = 0.0
    for r in windows:
        worst = max(worst, float(np.max(osc[r][kept])))
        profile.append((worst, r * h))

    return KSelection(
        curve=curve,
        kept=kept,
        runs=tuple(runs),
        gaps=tuple(adjusted),
        gap_mass=float(mass),
        profile=tuple(profile),
        excluded_nonhorizontal=int(np.sum(~horizontal)),
        excluded_oscillation=int(np.sum(horizontal & ~kept)),
    )


def _index_of(times, t):
    k = int(np.searchsorted(times, t))
    if k >= times.size or times[k] != t:
        raise ValueError(f"time {t} is not a sample time")
    return k


def gap_params(curve: SampledCurve, gap) -> GapParams:
    """Normalised plane problems for the interval ``gap = (a, b, eps)``.

    ``curve`` must carry horizontal derivatives at both ends.
    """
    a, b, eps = (float(x) for x in tuple(gap)[:3])
    if curve.derivatives is None:
        raise ValueError("gap parameters need derivative samples")
    ia, ib = _index_of(curve.times, a), _index_of(curve.times, b)
    n = curve.n
    pa, pb = curve.points[ia], curve.points[ib]
    da, db = curve.derivatives[ia], curve.derivatives[ib]
    L = b - a
    phi = mul_coords(-pa, pb)

    flat = np.concatenate([da[: 2 * n], [0.0]])
    checks = [
        ("|gamma'(b)-gamma'(a)| <= eps", np.linalg.norm(db - da), eps),
        ("|gamma(b)-gamma(a)-(b-a)gamma'(a)| <= eps(b-a)", np.linalg.norm(pb - pa - L * da), eps * L),
        ("|phi(b)-(b-a)(v,0)| <= eps(b-a)", np.linalg.norm(phi - L * flat), eps * L),
        (
            "|phi_{2n+1}(b)| <= eps(eps+sum|gamma_k'(a)|)(b-a)^2",
            abs(phi[-1]),
            eps * (eps + np.sum(np.abs(da[: 2 * n]))) * L**2,
        ),
    ]
    for name, lhs, rhs in checks:
        if lhs > rhs * (1 + 1e-12):
            raise AdmissibilityError(f"gap ({a}, {b}): {name} fails ({lhs:.6g} > {rhs:.6g})")

    sums = np.abs(da[:n]) + np.abs(da[n : 2 * n])
    J = int(np.argmax(sums))
    problems = []
    for j in range(n):
        p = (pb[j] - pa[j], pb[n + j] - pa[n + j])
        v = (da[j], da[n + j])
        w = (db[j], db[n + j])
        if j == J:
            prob = PlaneProblem(a, b, 2 * n * eps, p, v, w, -0.25 * float(phi[-1]))
        else:
            prob = PlaneProblem(a, b, eps, p, v, w, 0.0)
        bad = prob.violations()
        if bad:
            raise AdmissibilityError(f"gap ({a}, {b}), pair {j}: " + "; ".join(bad))
        problems.append(prob)

    return GapParams(a, b, eps, J, tuple(problems), HPoint(pa), HPoint(phi), pa, pb, da, db)


def interpolate_gap(gp: GapParams) -> HorizontalCurve:
    """C^1 horizontal curve from gamma(a) to gamma(b) matching both derivatives."""
    planar = [construct_sigma(prob, measure=False)[0] for prob in gp.problems]
    return HorizontalCurve(planar, gp.start)


def _extension(point, deriv, t0, t1, forward):
    """Straight horizontal segment through ``point`` with velocity ``deriv``."""
    n = (point.size - 1) // 2
    L = t1 - t0
    planar = [single(Line.from_velocity(L, (deriv[j], deriv[n + j])), t0) for j in range(n)]
    if forward:
        start = point
    else:
        step = np.concatenate([-L * deriv[: 2 * n], [0.0]])
        start = mul_coords(point, step)
    return HorizontalCurve(planar, HPoint(start))


def _workers(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CARNOT_CURVES_THREADS")
    return max(1, int(env)) if env else 1


def assemble(ks: KSelection, pieces=None, workers=None) -> HorizontalPath:
    """Glue interpolants on every cell of K and every gap, then extend to [0, 1].

    ``pieces`` may supply gap interpolants keyed by gap index; missing ones are
    built here.  Work items are independent and merged in time order.
    """
    curve = ks.curve
    t = curve.times
    items = []
    for i, j in ks.runs:
        for k in range(i, j):
            L = float(t[k + 1] - t[k])
            e = minimal_epsilon(curve.points[k], curve.points[k + 1], curve.derivatives[k], curve.derivatives[k + 1], L)
            items.append(("cell", (t[k], t[k + 1], e)))
    for g, gap in enumerate(ks.gaps):
        if pieces is not None and g in pieces:
            items.append(("given", pieces[g]))
        else:
            items.append(("gap", (gap.a, gap.b, gap.eps)))

    def build(item):
        kind, payload = item
        if kind == "given":
            return payload
        return interpolate_gap(gap_params(curve, payload))

    n_workers = _workers(workers)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            built = list(pool.map(build, items))
    else:
        built = [build(item) for item in items]
    built.sort(key=lambda piece: piece.interval[0])

    i0, i1 = ks.runs[0][0], ks.runs[-1][1]
    if t[i0] > 0.0:
        built.insert(0, _extension(curve.points[i0], curve.derivatives[i0], 0.0, float(t[i0]), False))
    if t[i1] < 1.0:
        built.append(_extension(curve.points[i1], curve.derivatives[i1], float(t[i1]), 1.0, True))
    return HorizontalPath(built)


def lusin_approximation(gamma: SampledCurve, eps, workers=None, **select_kwargs):
    """Run the whole pipeline; returns ``(Gamma, ks, report)``."""
    ks = select_K(gamma, eps, **select_kwargs)
    Gamma = assemble(ks, workers=workers)
    return Gamma, ks, verify(Gamma, gamma, ks)


def verify(Gamma, gamma: SampledCurve, ks: KSelection, tol=1e-8, per_piece=9):
    """Residuals and agreement statistics of an assembled curve."""
    curve = ks.curve
    t = curve.times
    kept = ks.kept

    pieces = getattr(Gamma, "pieces", (Gamma,))
    grid = np.concatenate([np.linspace(*p.interval, per_piece) for p in pieces])
    pos, der = Gamma.position(grid), Gamma.derivative(grid)
    horiz = float(np.max(horizontality_residual(pos, der) / horizontal_scale(pos, der)))

    joints = Gamma.joints() if hasattr(Gamma, "joints") else []
    c1_jump = max([max(dp, dd) for _, dp, dd in joints], default=0.0)

    tk = t[kept]
    pos_err = np.max(np.abs(Gamma.position(tk) - curve.points[kept]), axis=1)
    der_err = np.max(np.abs(Gamma.derivative(tk) - curve.derivatives[kept]), axis=1)
    scale = np.maximum(1.0, np.max(np.abs(curve.points[kept]), axis=1))
    bad = (pos_err > tol * scale) | (der_err > tol * scale)
    extra = 0.0
    if np.any(bad):
        idx = np.flatnonzero(kept)[bad]
        cells = set()
        for k in idx:
            for c in (k - 1, k):
                if 0 <= c < t.size - 1 and kept[c] and kept[c + 1]:
                    cells.add(c)
        extra = float(sum(t[c + 1] - t[c] for c in cells))

    per_gap = []
    for gap in ks.gaps:
        gp = gap_params(curve, (gap.a, gap.b, gap.eps))
        psi = Gamma
        s = np.linspace(gap.a, gap.b, 65)
        dev = float(np.max(np.linalg.norm(psi.derivative(s) - gp.dgamma_a, axis=1)))
        L = gap.b - gap.a
        v = gp.dgamma_a[: 2 * curve.n]
        per_gap.append(
            {
                "a": gap.a,
                "b": gap.b,
                "eps": gap.eps,
                "J": gp.J,
                "sup_dev_over_eps": dev / gap.eps,
                "linear_dev_over_len": float(np.linalg.norm(gp.gamma_b - gp.gamma_a - L * gp.dgamma_a)) / L,
                "vertical_over_quadratic": abs(float(gp.phi_end.t))
                / ((float(np.linalg.norm(v)) + gap.eps) * L**2),
            }
        )

    return {
        "gap_mass": ks.gap_mass,
        "disagreement_measure": ks.gap_mass + extra,
        "max_horiz_residual": horiz,
        "max_c1_jump": float(c1_jump),
        "max_sample_position_error": float(pos_err.max(initial=0.0)),
        "max_sample_derivative_error": float(der_err.max(initial=0.0)),
        "kept_samples": int(kept.sum()),
        "excluded_nonhorizontal": ks.excluded_nonhorizontal,
        "excluded_oscillation": ks.excluded_oscillation,
        "profile": [list(row) for row in ks.profile],
        "per_gap": per_gap,
    }


# -- sampled corpus -----------------------------------------------------------


def _grid(samples):
    return np.linspace(0.0, 1.0, samples)


def corner_curve(samples=2001) -> SampledCurve:
    """n = 1: x = s, y = |s - 1/2| + s^2/4, derivative jump at s = 1/2."""
    s = _grid(samples)
    x = s
    y = np.abs(s - 0.5) + 0.25 * s**2
    left = s - s**3 / 6.0
    right = 0.5 - 1.0 / 48.0 - (s - 0.5) - (s**3 - 0.125) / 6.0
    t = np.where(s <= 0.5, left, right)
    return SampledCurve(s, np.stack([x, y, t], axis=1))


def spiral_curve(samples=2001, rho=0.01, omega=40.0) -> SampledCurve:
    """n = 1: the line (s, 0) perturbed by a small circle wound ``omega / 2 pi`` times."""
    s = _grid(samples)
    ws = omega * s
    x = s + rho * (np.cos(ws) - 1.0)
    y = rho * np.sin(ws)
    t = 2.0 * (
        2.0 * rho * (1.0 - np.cos(ws)) / omega
        - rho * s * np.sin(ws)
        - rho**2 * omega * s
        + rho**2 * np.sin(ws)
    )
    return SampledCurve(s, np.stack([x, y, t], axis=1))


def _pairs_two(s):
    x1, dx1 = s, np.ones_like(s)
    y1, dy1 = 0.3 * np.sin(2 * np.pi * s), 0.6 * np.pi * np.cos(2 * np.pi * s)
    x2, dx2 = 0.5 * np.cos(3 * s), -1.5 * np.sin(3 * s)
    y2, dy2 = 0.8 * np.abs(s - 0.37), 0.8 * np.sign(s - 0.37)
    return (x1, y1, dx1, dy1), (x2, y2, dx2, dy2)


def two_pair_curve(samples=2001) -> SampledCurve:
    """n = 2 with a kink in y_2 at the sample s = 0.37; height by Gauss-Legendre."""
    s = _grid(samples)
    nodes, weights = leggauss(10)
    lo, hi = s[:-1], s[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    q = mid[:, None] + half[:, None] * nodes[None, :]
    q = np.clip(q, lo[:, None] + 1e-15, hi[:, None] - 1e-15)
    integrand = np.zeros_like(q)
    for x, y, dx, dy in _pairs_two(q):
        integrand += 2.0 * (dx * y - dy * x)
    inc = half * (integrand @ weights)
    t = np.concatenate([[0.0], np.cumsum(inc)])
    (x1, y1, _, _), (x2, y2, _, _) = _pairs_two(s)
    return SampledCurve(s, np.stack([x1, x2, y1, y2, t], axis=1))


def acceptance_corpus():
    return {"corner": corner_curve(), "spiral": spiral_curve(), "two_pair": two_pair_curve()}
