"""Sigmoid-loss minimisation as a sigmoidal program, solved by branch and bound.

Program variables are rating differences ``x_ab = theta_a - theta_b`` for
every ordered pair.  The objective ``sum N(a,b) * sigma(-x_ab / tau)`` is a
sum of functions that are concave then convex (inflection at 0), so each
term is under-estimated on an interval by its convex envelope.  Node bounds
come from an LP over tangent cuts of those envelopes.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit

from .core import PreferenceProfile, Ranking, preference_matrix, ranking_from_scores
from .sgd import Ratings

MAX_M = 8


@dataclass(frozen=True)
class SigmoidalProgram:
    m: int
    variables: tuple[tuple[int, int], ...]
    lower: np.ndarray
    upper: np.ndarray
    equalities: tuple[tuple[dict[int, float], float], ...]
    weights: np.ndarray
    temperature: float = 1.0

    def index(self, a: int, b: int) -> int:
        # variables are enumerated row-major over ordered pairs, skipping a == b
        return a * (self.m - 1) + (b if b < a else b - 1)

    def objective(self, x: np.ndarray) -> float:
        return float(np.dot(self.weights, expit(-np.asarray(x) / self.temperature)))

    def residual(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for row, rhs in self.equalities:
            val = sum(c * x[k] for k, c in row.items()) - rhs
            worst = max(worst, abs(val))
        return worst

    def from_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        a = np.array([p[0] for p in self.variables])
        b = np.array([p[1] for p in self.variables])
        return theta[a] - theta[b]


def build_program(
    profile: PreferenceProfile,
    bounds: tuple[float, float] = (0.0, 100.0),
    temperature: float = 1.0,
) -> SigmoidalProgram:
    """One variable per ordered pair, antisymmetry and transitivity rows.

    Transitivity is encoded only for index-ordered triples ``a < b < c``
    (``x_ab + x_bc - x_ac = 0``); with antisymmetry these imply the rest.
    """
    m = profile.m
    if m < 2:
        raise ValueError("a sigmoidal program needs at least two alternatives")
    width = bounds[1] - bounds[0]
    variables = tuple((a, b) for a in range(m) for b in range(m) if a != b)
    N = preference_matrix(profile).toarray()
    weights = np.array([N[a, b] for a, b in variables], dtype=float)
    prog = SigmoidalProgram(
        m, variables, np.full(len(variables), -width), np.full(len(variables), width),
        (), weights, temperature,
    )
    rows = []
    for a, b in itertools.combinations(range(m), 2):
        rows.append(({prog.index(a, b): 1.0, prog.index(b, a): 1.0}, 0.0))
    for a, b, c in itertools.combinations(range(m), 3):
        rows.append(({prog.index(a, b): 1.0, prog.index(b, c): 1.0, prog.index(a, c): -1.0}, 0.0))
    return SigmoidalProgram(m, variables, prog.lower, prog.upper, tuple(rows), weights, temperature)


def export_program(program: SigmoidalProgram) -> str:
    """Plain-text listing of a program.

    ::

        sigmoidal-program m=<m> temperature=<tau>
        var <k> x(<a>,<b>) lower=<l> upper=<u> weight=<N(a,b)>
        eq <r> rhs=<d> : <coef>*x<k> ...
        objective minimize sum_k weight_k * sigma(-x_k / tau)
    """
    lines = [f"sigmoidal-program m={program.m} temperature={program.temperature:g}"]
    for k, (a, b) in enumerate(program.variables):
        lines.append(
            f"var {k} x({a},{b}) lower={program.lower[k]:g} upper={program.upper[k]:g} "
            f"weight={program.weights[k]:g}"
        )
    for r, (row, rhs) in enumerate(program.equalities):
        terms = " ".join(f"{c:+g}*x{k}" for k, c in sorted(row.items()))
        lines.append(f"eq {r} rhs={rhs:g} : {terms}")
    lines.append("objective minimize sum_k weight_k * sigma(-x_k / tau)")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# one-dimensional pieces: h(y) = sigma(-y / tau), concave for y < 0, convex for y > 0


def _h(y, tau):
    return expit(-np.asarray(y, dtype=float) / tau)


def _dh(y, tau):
    s = expit(-np.asarray(y, dtype=float) / tau)
    return -s * (1.0 - s) / tau


@dataclass(frozen=True)
class Envelope:
    """Convex envelope of ``h`` on ``[lo, hi]``: a line up to ``knot``, h after."""

    lo: float
    hi: float
    knot: float
    slope: float
    intercept: float

    def __call__(self, y, tau):
        y = np.asarray(y, dtype=float)
        return np.where(y <= self.knot, self.intercept + self.slope * y, _h(y, tau))


def convex_envelope(lo: float, hi: float, tau: float, tol: float = 1e-10) -> Envelope:
    h_lo = float(_h(lo, tau))
    if hi - lo <= 0:
        return Envelope(lo, hi, hi, 0.0, h_lo)
    if lo >= 0:
        # convex throughout: envelope is h; knot below lo
        return Envelope(lo, hi, lo, float(_dh(lo, tau)), float(_h(lo, tau) - _dh(lo, tau) * lo))

    def phi(t):
        return float(_dh(t, tau)) * (t - lo) - (float(_h(t, tau)) - h_lo)

    if hi <= 0 or phi(hi) <= 0:
        slope = (float(_h(hi, tau)) - h_lo) / (hi - lo)
        return Envelope(lo, hi, hi, slope, h_lo - slope * lo)
    a, b = 0.0, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if phi(mid) <= 0:
            a = mid
        else:
            b = mid
    t = b
    slope = float(_dh(t, tau))
    return Envelope(lo, hi, t, slope, float(_h(t, tau)) - slope * t)


# --------------------------------------------------------------------------
# branch and bound


@dataclass(frozen=True)
class BnbConfig:
    tolerance: float = 1e-4
    max_iterations: int = 10_000
    max_m: int = MAX_M
    cut_rounds: int = 30

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class BnbResult:
    x: np.ndarray
    objective: float
    lower_bound: float
    nodes: int
    converged: bool
    theta: np.ndarray = field(repr=False, default=None)

    @property
    def gap(self) -> float:
        return max(0.0, self.objective - self.lower_bound)


class _Reduced:
    """Canonical pair variables y_k = theta_a - theta_b (a < b), theta_{m-1} = 0.

    Each unordered pair contributes ``const_k + w_k * h(s_k * y_k)`` with
    ``w_k >= 0``.
    """

    def __init__(self, program: SigmoidalProgram):
        self.m = m = program.m
        self.tau = program.temperature
        self.u = float(program.upper.max())
        self.pairs = list(itertools.combinations(range(m), 2))
        self.P = len(self.pairs)
        self.pair_index = {p: k for k, p in enumerate(self.pairs)}
        w_ab = np.array([program.weights[program.index(a, b)] for a, b in self.pairs])
        w_ba = np.array([program.weights[program.index(b, a)] for a, b in self.pairs])
        margin = w_ab - w_ba
        # N(a,b) h(y) + N(b,a) h(-y) = N(b,a) + (N(a,b) - N(b,a)) h(y)
        self.sign = np.where(margin >= 0, 1.0, -1.0)
        self.w = np.abs(margin)
        self.const = float(np.where(margin >= 0, w_ba, w_ab).sum())
        self.active = np.nonzero(self.w > 0)[0]
        self.triples = list(itertools.combinations(range(m), 3))
        self.program = program

    def theta_to_y(self, theta):
        a = np.array([p[0] for p in self.pairs])
        b = np.array([p[1] for p in self.pairs])
        return theta[a] - theta[b]

    def value(self, theta) -> float:
        y = self.theta_to_y(theta)
        return self.const + float(np.dot(self.w, _h(self.sign * y, self.tau)))

    def propagate(self, lo, hi) -> bool:
        """Tighten intervals via x_ac = x_ab + x_bc; False if empty."""
        lo, hi = lo, hi
        pi = self.pair_index
        for _ in range(2 * self.m):
            changed = False
            for a, b, c in self.triples:
                ab, bc, ac = pi[a, b], pi[b, c], pi[a, c]
                for k, nlo, nhi in (
                    (ac, lo[ab] + lo[bc], hi[ab] + hi[bc]),
                    (ab, lo[ac] - hi[bc], hi[ac] - lo[bc]),
                    (bc, lo[ac] - hi[ab], hi[ac] - lo[ab]),
                ):
                    if nlo > lo[k] + 1e-12:
                        lo[k] = nlo
                        changed = True
                    if nhi < hi[k] - 1e-12:
                        hi[k] = nhi
                        changed = True
            if np.any(lo > hi + 1e-9):
                return False
            if not changed:
                break
        return True

    def oriented(self, k, lo, hi):
        if self.sign[k] > 0:
            return lo[k], hi[k]
        return -hi[k], -lo[k]

    def relax(self, lo, hi, rounds: int, tol: float):
        """Lower bound of the node via tangent-cut LP.  Returns (bound, theta)."""
        m, P = self.m, self.P
        nth = m - 1
        act = self.active
        nt = len(act)
        envs = [convex_envelope(*self.oriented(k, lo, hi), self.tau) for k in act]
        # per-pair row: y_k as a function of the free thetas
        coef = np.zeros((P, nth))
        for k, (a, b) in enumerate(self.pairs):
            if a < nth:
                coef[k, a] += 1.0
            if b < nth:
                coef[k, b] -= 1.0
        A_box = np.vstack([coef, -coef])
        A_box = np.hstack([A_box, np.zeros((2 * P, nt))])
        b_box = np.concatenate([hi, -lo])
        cuts: list[tuple[int, float, float]] = []  # (term, slope, intercept) in oriented var
        for r, (k, env) in enumerate(zip(act, envs)):
            cuts.append((r, env.slope, env.intercept))
            for z in np.linspace(max(env.knot, env.lo), env.hi, 4):
                cuts.append((r, float(_dh(z, self.tau)), float(_h(z, self.tau) - _dh(z, self.tau) * z)))
        cost = np.concatenate([np.zeros(nth), self.w[act]])
        bounds = [(-self.u, self.u)] * nth + [(None, None)] * nt
        best = None
        for _ in range(rounds):
            A_cut = np.zeros((len(cuts), nth + nt))
            b_cut = np.zeros(len(cuts))
            for i, (r, s, c) in enumerate(cuts):
                k = act[r]
                # t_r >= s * (sign_k * y_k) + c
                A_cut[i, :nth] = s * self.sign[k] * coef[k]
                A_cut[i, nth + r] = -1.0
                b_cut[i] = -c
            res = linprog(
                cost,
                A_ub=np.vstack([A_box, A_cut]) if nt else A_box,
                b_ub=np.concatenate([b_box, b_cut]) if nt else b_box,
                bounds=bounds,
                method="highs",
            )
            if res.status != 0:
                return None
            theta = np.append(res.x[:nth], 0.0)
            tvals = res.x[nth:]
            best = (self.const + float(res.fun), theta)
            if nt == 0:
                break
            y = self.sign[act] * self.theta_to_y(theta)[act]
            env_vals = np.array([float(e(yv, self.tau)) for e, yv in zip(envs, y)])
            slack = self.w[act] * (env_vals - tvals)
            if slack.sum() <= tol * 1e-2:
                break
            for r in np.nonzero(slack > tol * 1e-3)[0]:
                z = max(y[r], envs[r].knot)
                cuts.append((r, float(_dh(z, self.tau)), float(_h(z, self.tau) - _dh(z, self.tau) * z)))
        return best, envs


def solve_branch_and_bound(program: SigmoidalProgram, config: BnbConfig = BnbConfig()) -> BnbResult:
    """Globally minimise the program objective to within ``config.tolerance``.

    Best-first search over boxes of pair differences.  The result's
    ``converged`` flag is False when the node budget ran out first; the
    incumbent and its certified gap are still returned.
    """
    if program.m > config.max_m:
        raise ValueError(f"m = {program.m} exceeds the solver limit {config.max_m}")
    red = _Reduced(program)
    tol = config.tolerance
    lo0 = np.full(red.P, -red.u)
    hi0 = np.full(red.P, red.u)
    red.propagate(lo0, hi0)

    inc_theta = np.zeros(red.m)
    inc_val = red.value(inc_theta)
    counter = itertools.count()
    heap = []

    def push(lo, hi):
        nonlocal inc_theta, inc_val
        if not red.propagate(lo, hi):
            return
        out = red.relax(lo, hi, config.cut_rounds, tol)
        if out is None or out[0] is None:
            return
        (bound, theta), envs = out
        val = red.value(theta)
        if val < inc_val:
            inc_val, inc_theta = val, theta
        if bound < inc_val - tol:
            heapq.heappush(heap, (bound, next(counter), lo, hi, theta, envs))

    push(lo0, hi0)
    nodes = 1
    converged = True
    while heap:
        bound, _, lo, hi, theta, envs = heap[0]
        if bound >= inc_val - tol:
            break
        if nodes >= config.max_iterations:
            converged = False
            break
        heapq.heappop(heap)
        # branch on the active term whose envelope is furthest below h
        y = red.sign * red.theta_to_y(theta)
        gaps = np.zeros(red.P)
        for r, k in enumerate(red.active):
            gaps[k] = red.w[k] * (float(_h(y[k], red.tau)) - float(envs[r](y[k], red.tau)))
        if len(red.active):
            k = int(red.active[np.argmax(gaps[red.active])])
        else:
            k = 0
        if gaps[k] <= 0:
            # relaxation exact at this point; split the widest interval instead
            k = int(np.argmax(hi - lo))
        split_at = red.sign[k] * y[k]  # back to canonical orientation
        width = hi[k] - lo[k]
        if not (lo[k] + 0.1 * width < split_at < hi[k] - 0.1 * width):
            split_at = 0.5 * (lo[k] + hi[k])
        left_hi, right_lo = hi.copy(), lo.copy()
        left_hi[k] = split_at
        right_lo[k] = split_at
        push(lo.copy(), left_hi)
        push(right_lo, hi.copy())
        nodes += 2
        # drop nodes the new incumbent dominates
        heap = [item for item in heap if item[0] < inc_val - tol]
        heapq.heapify(heap)

    lower = min([heap[0][0]] if heap else [inc_val], default=inc_val)
    lower = min(lower, inc_val)
    x = program.from_theta(inc_theta)
    return BnbResult(x, program.objective(x), lower, nodes, converged, inc_theta)


class InconsistentSolution(ValueError):
    pass


def recover_ratings(
    x: np.ndarray,
    program: SigmoidalProgram,
    bounds: tuple[float, float] = (0.0, 100.0),
    tolerance: float = 1e-4,
) -> Ratings:
    """Ratings whose pairwise differences reproduce ``x``.

    The last alternative is anchored at the box midpoint, the others are
    placed at ``mid + x[a, m-1]``, and the whole vector is shifted so its
    range is centred in the box before clipping.
    """
    x = np.asarray(x, dtype=float)
    if program.residual(x) > 10 * tolerance:
        raise InconsistentSolution("x violates the antisymmetry/transitivity rows")
    m = program.m
    lo, hi = bounds
    mid = 0.5 * (lo + hi)
    theta = np.full(m, mid)
    for a in range(m - 1):
        theta[a] = mid + x[program.index(a, m - 1)]
    theta += mid - 0.5 * (theta.min() + theta.max())
    return Ratings(np.clip(theta, lo, hi), lo, hi)


def solve_profile(
    profile: PreferenceProfile,
    bounds: tuple[float, float] = (0.0, 100.0),
    temperature: float = 1.0,
    config: BnbConfig = BnbConfig(),
) -> tuple[Ranking, BnbResult]:
    """Build, solve and rank in one call."""
    prog = build_program(profile, bounds, temperature)
    res = solve_branch_and_bound(prog, config)
    ratings = recover_ratings(res.x, prog, bounds, config.tolerance)
    return ranking_from_scores(ratings.theta), res
