"""Ordered exponentials of trace-free symmetric 2x2 generators.

Covers iterated integrals, the time-ordered series for X' = A X, the Gram
determinant F_A(s) = det int_0^1 X_{sA} X_{sA}^T dt, its Taylor coefficients
by the structural (matrix) route and by explicit low-order formulas, and the
variation statistics (mean, variation, derivative norm, gamma) used by the
smallness bounds on iterated integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson, solve_ivp

from .kernel import OdeStepError, SeriesTailWarning

N_GRID = 4097

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _grid(n: int) -> np.ndarray:
    if n % 2 == 0:
        n += 1
    return np.linspace(0.0, 1.0, n)


def _cum(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return cumulative_simpson(y, x=x, initial=0.0, axis=0)


@dataclass
class CoeffPair:
    """Pair of real functions (p, q) on [0, 1] generating A = ((-q, p), (p, q)).

    ``g_p`` and ``g_q`` are the antiderivatives vanishing at 0.
    """

    p: Callable
    q: Callable
    n_grid: int = N_GRID
    _tab: tuple | None = field(default=None, repr=False)

    def _tables(self):
        if self._tab is None:
            x = _grid(self.n_grid)
            pv = np.broadcast_to(np.asarray(self.p(x), dtype=float), x.shape).copy()
            qv = np.broadcast_to(np.asarray(self.q(x), dtype=float), x.shape).copy()
            self._tab = (x, pv, qv, _cum(pv, x), _cum(qv, x))
        return self._tab

    @property
    def p_is_zero(self) -> bool:
        _, pv, _, _, _ = self._tables()
        return bool(np.max(np.abs(pv)) == 0.0)

    @property
    def q_is_zero(self) -> bool:
        _, _, qv, _, _ = self._tables()
        return bool(np.max(np.abs(qv)) == 0.0)

    def g_p(self, t):
        x, _, _, gp, _ = self._tables()
        return np.interp(t, x, gp)

    def g_q(self, t):
        x, _, _, _, gq = self._tables()
        return np.interp(t, x, gq)

    def matrix(self, t) -> np.ndarray:
        pv = float(self.p(np.asarray(t, dtype=float)))
        qv = float(self.q(np.asarray(t, dtype=float)))
        return np.array([[-qv, pv], [pv, qv]])

    def scaled(self, s: float) -> "CoeffPair":
        return CoeffPair(lambda t, f=self.p: s * np.asarray(f(t)),
                         lambda t, f=self.q: s * np.asarray(f(t)),
                         n_grid=self.n_grid)

    @classmethod
    def constant(cls, p0: float, q0: float, n_grid: int = N_GRID) -> "CoeffPair":
        return cls(lambda t: np.full_like(np.asarray(t, dtype=float), p0),
                   lambda t: np.full_like(np.asarray(t, dtype=float), q0),
                   n_grid=n_grid)


@dataclass
class MatrixPath:
    """2x2 matrix values along a t-grid on [0, 1], X(0) = identity."""

    t_grid: np.ndarray
    values: np.ndarray


@dataclass
class VariationStats:
    """Mean, variation, derivative L2 norm, and gamma = sqrt(eps) +
    eps^{1/4} sqrt(delta) of a function on [0, 1] vanishing at 0."""

    mean: float
    variation: float
    delta: float
    gamma: float


def iterated_integral(fs: Sequence, t: float, n_grid: int = N_GRID) -> float:
    """(f_1 ... f_n)_t: nested simplex integral, outermost function first.

    Accepts callables on [0, 1] or arrays already sampled on the shared grid.
    """
    if len(fs) == 0:
        raise ValueError("need at least one function")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    x = _grid(n_grid)
    vals = []
    for f in fs:
        v = np.asarray(f if isinstance(f, np.ndarray) else f(x), dtype=float)
        if v.shape != x.shape:
            raise ValueError("sampled function does not match the grid")
        vals.append(v)
    acc = _cum(vals[-1], x)
    for v in vals[-2::-1]:
        acc = _cum(v * acc, x)
    return float(np.interp(t, x, acc))


def _chain_mean(vals: list[np.ndarray], x: np.ndarray) -> float:
    """int_0^1 (f_1 ... f_n)_t dt for pre-sampled functions."""
    acc = _cum(vals[-1], x)
    for v in vals[-2::-1]:
        acc = _cum(v * acc, x)
    return float(simpson(acc, x=x))


def _series_terms(A: CoeffPair, n_terms: int):
    """Time-ordered series terms M_k(t) on the shared grid, k = 0..n_terms."""
    x, pv, qv, _, _ = A._tables()
    n = x.size
    Av = np.empty((n, 2, 2))
    Av[:, 0, 0] = -qv
    Av[:, 0, 1] = pv
    Av[:, 1, 0] = pv
    Av[:, 1, 1] = qv
    terms = [np.broadcast_to(np.eye(2), (n, 2, 2)).copy()]
    for _ in range(n_terms):
        integrand = np.einsum("nij,njk->nik", Av, terms[-1])
        terms.append(_cum(integrand, x))
    return x, terms


def ordered_exp(A: CoeffPair, t: float, mode: str = "ode", n_terms: int = 12,
                tol: float = 1e-10, tail_tol: float = 1e-8,
                n_grid: int | None = None) -> np.ndarray:
    """X_A(t): fundamental solution of X' = A X at time t.

    ``mode='series'`` sums the time-ordered series to ``n_terms`` (a warning
    is attached when the tail estimate exceeds ``tail_tol``); ``mode='ode'``
    integrates with the adaptive stepper at tolerance ``tol``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if n_grid is not None:
        A = CoeffPair(A.p, A.q, n_grid=n_grid)
    if mode == "series":
        x, terms = _series_terms(A, n_terms)
        idx = np.searchsorted(x, t)
        stack = np.array([np.array([[np.interp(t, x, M[:, i, j]) for j in (0, 1)]
                                    for i in (0, 1)]) for M in terms])
        X = stack.sum(axis=0)
        last = np.max(np.abs(stack[-1]))
        prev = np.max(np.abs(stack[-2])) if n_terms >= 2 else math.inf
        ratio = last / prev if prev > 0 else 0.0
        tail = last * ratio / (1.0 - ratio) if 0 < ratio < 1 else last
        if tail > tail_tol:
            warnings.warn(f"series tail estimate {tail:.2e} exceeds {tail_tol:.1e}",
                          SeriesTailWarning)
        return X
    if mode == "ode":
        return ordered_exp_path(A, np.array([0.0, t]) if t > 0 else np.array([0.0]),
                                tol=tol).values[-1]
    raise ValueError("mode must be 'series' or 'ode'")


def ordered_exp_path(A: CoeffPair, t_grid=None, tol: float = 1e-10) -> MatrixPath:
    """X_A on a grid of times in [0, 1] via the adaptive stepper."""
    ts = _grid(1025) if t_grid is None else np.asarray(t_grid, dtype=float)

    def rhs(t, y):
        pv = float(A.p(t))
        qv = float(A.q(t))
        X = y.reshape(2, 2)
        return (np.array([[-qv, pv], [pv, qv]]) @ X).ravel()

    if ts.size == 1:
        return MatrixPath(ts, np.eye(2)[None, :, :].copy())
    sol = solve_ivp(rhs, (ts[0], ts[-1]), np.eye(2).ravel(), method="DOP853",
                    t_eval=ts, rtol=max(tol, 1e-13), atol=tol * 1e-2)
    if sol.status != 0:
        raise OdeStepError(f"ordered exponential stepper failed: {sol.message}",
                           sol.t[-1] if sol.t.size else ts[0], None)
    return MatrixPath(ts, sol.y.T.reshape(-1, 2, 2))


def f_of_s(A: CoeffPair, s: complex, n_grid: int | None = None,
           ode_tol: float = 1e-11):
    """F_A(s) = det int_0^1 X_{sA}(t) X_{sA}(t)^T dt (plain transpose).

    Real for real s; accepts complex s for analytic continuation (used by the
    circle-sampling coefficient route). Commuting generators (p or q
    identically zero) use exact closed-form paths on a fine grid; the general
    case integrates the matrix ODE.
    """
    if n_grid is not None and n_grid != A.n_grid:
        A = CoeffPair(A.p, A.q, n_grid=n_grid)
    x, pv, qv, gp, gq = A._tables()

    if A.p_is_zero and A.q_is_zero:
        return 1.0
    if A.p_is_zero:
        g = gq
        plus = simpson(np.exp(2.0 * s * g), x=x)
        minus = simpson(np.exp(-2.0 * s * g), x=x)
        out = plus * minus
        return float(out.real) if not np.iscomplexobj(np.asarray(out)) else complex(out)
    if A.q_is_zero:
        g = gp
        ch = simpson(np.cosh(2.0 * s * g), x=x)
        sh = simpson(np.sinh(2.0 * s * g), x=x)
        out = ch * ch - sh * sh
        return float(out.real) if not np.iscomplexobj(np.asarray(out)) else complex(out)

    is_complex = np.iscomplexobj(np.asarray(s)) and complex(s).imag != 0.0
    s = complex(s) if is_complex else float(np.real(s))

    def rhs(t, y):
        pv = float(A.p(t))
        qv = float(A.q(t))
        X = y.reshape(2, 2)
        return (s * np.array([[-qv, pv], [pv, qv]]) @ X).ravel()

    y0 = np.eye(2).ravel().astype(complex if is_complex else float)
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", t_eval=x,
                    rtol=ode_tol, atol=ode_tol * 1e-2)
    if sol.status != 0:
        raise OdeStepError(f"ordered exponential stepper failed: {sol.message}",
                           sol.t[-1] if sol.t.size else 0.0, None)
    X = sol.y.T.reshape(-1, 2, 2)
    gram = simpson(np.einsum("nij,nkj->nik", X, X), x=x, axis=0)
    out = gram[0, 0] * gram[1, 1] - gram[0, 1] * gram[1, 0]
    return complex(out) if is_complex else float(np.real(out))


def mixed_det(M: np.ndarray, N: np.ndarray) -> float:
    """det(M + N) - det(M) - det(N), the polarization of det on 2x2 matrices."""
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    return float(np.linalg.det(M + N) - np.linalg.det(M) - np.linalg.det(N))


def taylor_a(A: CoeffPair, n_max: int = 8) -> np.ndarray:
    """Taylor coefficients a_0..a_{n_max} of F_A via the structural route.

    Builds the series terms M_k, the Gram terms N_k = sum_m M_m M_{k-m}^T,
    their time averages L_k, and assembles even coefficients from det and
    mixed-det of the L's. Odd coefficients vanish identically and are
    returned as exact zeros.
    """
    if n_max > 8:
        raise ValueError("structural route capped at n_max = 8; "
                         "use circle sampling of f_of_s beyond")
    x, terms = _series_terms(A, n_max)
    L = []
    for k in range(n_max + 1):
        Nk = np.zeros((x.size, 2, 2))
        for m in range(k + 1):
            Nk += np.einsum("nij,nkj->nik", terms[m], terms[k - m])
        L.append(simpson(Nk, x=x, axis=0))
    out = np.zeros(n_max + 1)
    out[0] = 1.0
    for n in range(1, n_max // 2 + 1):
        val = float(np.linalg.det(L[n]))
        for k in range(n):
            val += mixed_det(L[k], L[2 * n - k])
        out[2 * n] = val
    return out


def diagonal_a_n(g: Callable, n: int, n_grid: int = 2049) -> float:
    """Coefficient a_n for a diagonal generator with antiderivative g:
    (2^n / n!) * double integral of (g(x) - g(y))^n over the unit square."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = _grid(n_grid)
    gv = np.asarray(g(x), dtype=float)
    h = (x[-1] - x[0]) / (x.size - 1)
    w = np.ones(x.size)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= h / 3.0
    diff = gv[:, None] - gv[None, :]
    total = float(w @ (diff ** n) @ w)
    return 2.0 ** n / math.factorial(n) * total


def a2_variation(A: CoeffPair) -> float:
    """a_2 = 4 D(g_p) + 4 D(g_q) with D the variation functional."""
    x, _, _, gp, gq = A._tables()

    def D(g):
        return simpson(g * g, x=x) - simpson(g, x=x) ** 2

    return float(4.0 * D(gp) + 4.0 * D(gq))


def a4_explicit(A: CoeffPair) -> float:
    """a_4 from the eleven explicit simplex-integral terms."""
    x, pv, qv, _, _ = A._tables()

    def C(*names):
        vals = [qv if nm == "q" else pv for nm in names]
        return _chain_mean(vals, x)

    bracket = (
        2.0 * C("q", "q", "q", "q")
        - 2.0 * C("q", "q", "q") * C("q")
        + C("q", "q") ** 2
        + 2.0 * C("p", "p", "p", "p")
        - 2.0 * C("p", "p", "p") * C("p")
        + C("p", "p") ** 2
        + 2.0 * C("q", "q", "p", "p")
        + 2.0 * C("p", "p", "q", "q")
        + 2.0 * C("q", "q") * C("p", "p")
        - 2.0 * C("q") * C("q", "p", "p")
        - 2.0 * C("p") * C("p", "q", "q")
    )
    return float(16.0 * bracket)


def gamma_stats(F: Callable, n_grid: int = N_GRID) -> VariationStats:
    """Mean, variation, ||F'||_L2, and gamma for F on [0,1] with F(0) = 0."""
    x = _grid(n_grid)
    Fv = np.broadcast_to(np.asarray(F(x), dtype=float), x.shape)
    mean = float(simpson(Fv, x=x))
    var = float(max(simpson(Fv * Fv, x=x) - mean ** 2, 0.0))
    h = x[1] - x[0]
    d = np.empty_like(Fv)
    d[2:-2] = (Fv[:-4] - 8 * Fv[1:-3] + 8 * Fv[3:-1] - Fv[4:]) / (12 * h)
    # one-sided 4th-order stencils at the edges
    edge = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
    d[0] = edge @ Fv[:5]
    d[1] = edge @ Fv[1:6]
    d[-1] = -(edge @ Fv[-1:-6:-1])
    d[-2] = -(edge @ Fv[-2:-7:-1])
    delta = float(math.sqrt(max(simpson(d * d, x=x), 0.0)))
    gamma = math.sqrt(var) + var ** 0.25 * math.sqrt(delta)
    return VariationStats(mean=mean, variation=var, delta=delta, gamma=gamma)


# ---------------------------------------------------------------------------
# seeded random families for property tests
# ---------------------------------------------------------------------------

def _trig_poly(rng: np.random.Generator, n_modes: int, norm: float) -> Callable:
    """Random trigonometric polynomial with exact L2([0,1]) norm ``norm``."""
    a0 = rng.normal()
    ak = rng.normal(size=n_modes)
    bk = rng.normal(size=n_modes)
    raw = math.sqrt(a0 ** 2 + 0.5 * float(np.sum(ak ** 2 + bk ** 2)))
    scale = norm / raw if raw > 0 else 0.0

    def f(t, a0=a0 * scale, ak=ak * scale, bk=bk * scale):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, a0)
        for k in range(ak.size):
            out = out + ak[k] * np.cos(2 * np.pi * (k + 1) * t) \
                      + bk[k] * np.sin(2 * np.pi * (k + 1) * t)
        return out

    return f


def random_coeff_pair(rng: np.random.Generator, n_modes: int = 3,
                      norm_lo: float = 0.3, norm_hi: float = 0.95) -> CoeffPair:
    """Seeded smooth pair with ||p||, ||q|| drawn in [norm_lo, norm_hi]."""
    np_norm = rng.uniform(norm_lo, norm_hi)
    nq_norm = rng.uniform(norm_lo, norm_hi)
    return CoeffPair(_trig_poly(rng, n_modes, np_norm),
                     _trig_poly(rng, n_modes, nq_norm))


def random_admissible_family(rng: np.random.Generator, count: int,
                             delta_lo: float = 0.02,
                             delta_hi: float = 0.1) -> list[Callable]:
    """Seeded functions whose antiderivatives share small (eps, delta) stats;
    ||f|| <= delta_hi forces sup|F| <= delta_hi and eps <= delta_hi^2."""
    return [_trig_poly(rng, rng.integers(1, 4), rng.uniform(delta_lo, delta_hi))
            for _ in range(count)]


def family_gamma(fs: Sequence[Callable], n_grid: int = N_GRID) -> float:
    """Shared gamma for a family: worst-case variation and derivative norm."""
    x = _grid(n_grid)
    eps = 0.0
    delta = 0.0
    for f in fs:
        fv = np.asarray(f(x), dtype=float)
        Fv = _cum(fv, x)
        mean = simpson(Fv, x=x)
        eps = max(eps, float(simpson(Fv * Fv, x=x) - mean ** 2))
        delta = max(delta, float(math.sqrt(simpson(fv * fv, x=x))))
    return math.sqrt(max(eps, 0.0)) + max(eps, 0.0) ** 0.25 * math.sqrt(delta)
