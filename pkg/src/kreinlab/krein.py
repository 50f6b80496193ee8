"""Krein system solver and its identity probes.

Integrates the coupled system

    dP/dr  = i lam P - conj(a) P*,   P(0)  = 1,
    dP*/dr = -a P,                   P*(0) = 1,

evaluates the reflection and Christoffel-Darboux identities, Christoffel-type
functions and reproducing kernels, the large-r limit of P* (the inverse Szego
function up to a unimodular phase), zeros of that limit (resonances), and the
decay probe for P at a resonance-conjugate point.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .kernel import DecayFit, Grid, KernelError, OdeStepError, adaptive_quad, fit_decay
from .potentials import Potential


class ZeroSearchError(KernelError):
    """Zero search did not converge; carries the iterate trace."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class SzegoConvergenceWarning(UserWarning):
    """Half-horizon comparison exceeds the requested tolerance."""


@dataclass
class KreinPath:
    """P and P* along an r-grid for one spectral parameter, with the
    accumulated mass cum_P2(r) = int_0^r |P|^2."""

    lam: complex
    r_grid: Grid
    P: np.ndarray
    P_star: np.ndarray
    cum_P2: np.ndarray


@dataclass
class SzegoValue:
    """Large-r value of P*(., lam) with a half-horizon error estimate."""

    lam: complex
    value: complex
    horizon: float
    est_error: float
    converged: bool


def _segments(p: Potential, t0: float, t1: float):
    cuts = [t0] + [b for b in p.breakpoints() if t0 < b < t1] + [t1]
    return list(zip(cuts[:-1], cuts[1:]))


def _solve_many(p: Potential, lams: np.ndarray, grid: Grid, tol: float,
                with_cum: bool):
    """Vectorized Krein solve over a batch of spectral parameters.

    Integration is split at the potential's breakpoints so that piecewise
    coefficients keep full stepper order. Returns (P, P_star, cum) arrays of
    shape (n_grid, n_lam); cum is None unless requested.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    k = lams.size
    ts = grid.points

    def rhs(t, y):
        a = p(t)
        P = y[:k]
        Ps = y[k:2 * k]
        dP = 1j * lams * P - np.conj(a) * Ps
        dPs = -a * P
        if with_cum:
            return np.concatenate([dP, dPs, np.abs(P) ** 2 + 0j])
        return np.concatenate([dP, dPs])

    dim = 3 * k if with_cum else 2 * k
    y = np.ones(dim, dtype=complex)
    if with_cum:
        y[2 * k:] = 0.0

    out = np.empty((ts.size, dim), dtype=complex)
    out[0] = y
    done = 1
    for lo, hi in _segments(p, ts[0], ts[-1]):
        inner = ts[(ts > lo) & (ts <= hi)]
        t_eval = np.concatenate([inner, [hi]]) if inner.size == 0 or inner[-1] != hi \
            else inner
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853", t_eval=t_eval,
                        rtol=max(tol, 1e-13), atol=tol * 1e-2 + 1e-300)
        if sol.status != 0:
            raise OdeStepError(f"Krein stepper failed: {sol.message}",
                               sol.t[-1] if sol.t.size else lo, y)
        y = sol.y[:, -1].copy()
        n_inner = inner.size
        if n_inner:
            out[done:done + n_inner] = sol.y[:, :n_inner].T
            done += n_inner
    assert done == ts.size
    P = out[:, :k]
    Ps = out[:, k:2 * k]
    cum = out[:, 2 * k:].real if with_cum else None
    return P, Ps, cum


def solve_krein(p: Potential, lam: complex, r_grid, tol: float = 1e-10) -> KreinPath:
    """Integrate the Krein system for one lambda over a grid starting at 0."""
    grid = Grid.coerce(r_grid)
    if grid.points[0] != 0.0:
        raise ValueError("Krein grids must start at r = 0 (unit initial data)")
    P, Ps, cum = _solve_many(p, np.array([lam]), grid, tol, with_cum=True)
    return KreinPath(lam=complex(lam), r_grid=grid, P=P[:, 0],
                     P_star=Ps[:, 0], cum_P2=cum[:, 0])


def _solve_pair_cross(p: Potential, lam: complex, mu: complex, r: float,
                      tol: float):
    """Joint solve for two parameters plus the cross mass
    int_0^r P(s, lam) conj(P(s, mu)) ds."""

    def rhs(t, y):
        a = p(t)
        P1, Ps1, P2, Ps2, _ = y
        return np.array([
            1j * lam * P1 - np.conj(a) * Ps1,
            -a * P1,
            1j * mu * P2 - np.conj(a) * Ps2,
            -a * P2,
            P1 * np.conj(P2),
        ])

    y = np.array([1, 1, 1, 1, 0], dtype=complex)
    for lo, hi in _segments(p, 0.0, r):
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853",
                        rtol=max(tol, 1e-13), atol=tol * 1e-2 + 1e-300)
        if sol.status != 0:
            raise OdeStepError(f"Krein stepper failed: {sol.message}",
                               sol.t[-1] if sol.t.size else lo, y)
        y = sol.y[:, -1]
    return y


def reflection_residual(p: Potential, z: complex, r: float,
                        tol: float = 1e-10) -> float:
    """|P(r,z) - e^{izr} conj(P*(r, conj z))| from two independent solves."""
    return float(reflection_residual_batch(p, np.array([z]), r, tol)[0])


def reflection_residual_batch(p: Potential, zs, r: float,
                              tol: float = 1e-10) -> np.ndarray:
    """Reflection-identity residuals for a batch of points in one solve."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    grid = Grid(np.array([0.0, r]))
    lams = np.concatenate([zs, np.conj(zs)])
    P, Ps, _ = _solve_many(p, lams, grid, tol, with_cum=False)
    k = zs.size
    return np.abs(P[-1, :k] - np.exp(1j * zs * r) * np.conj(Ps[-1, k:]))


def christoffel_darboux_residual(p: Potential, lam: complex, mu: complex,
                                 r: float, tol: float = 1e-10) -> float:
    """Absolute defect of the Christoffel-Darboux formula at (lam, mu, r)."""
    P1, Ps1, P2, Ps2, cross = _solve_pair_cross(p, lam, mu, r, tol)
    lhs = P1 * np.conj(P2) - Ps1 * np.conj(Ps2)
    rhs = 1j * (lam - np.conj(mu)) * cross
    return float(abs(lhs - rhs))


def christoffel_m(p: Potential, z: complex, r: float, tol: float = 1e-10) -> float:
    """Christoffel-type function: inverse of the accumulated |P|^2 mass."""
    if r <= 0:
        raise ValueError("christoffel_m needs r > 0")
    path = solve_krein(p, z, Grid(np.array([0.0, r])), tol)
    mass = path.cum_P2[-1]
    if mass <= 0:
        raise ValueError("accumulated mass vanishes")
    return 1.0 / mass


def reproducing_kernel(p: Potential, z: complex, r: float, eval_at: complex,
                       tol: float = 1e-10) -> complex:
    """k_{r,z}(eval_at) = (1/2pi) int_0^r P(s, eval_at) conj(P(s, z)) ds."""
    if r <= 0:
        raise ValueError("reproducing_kernel needs r > 0")
    _, _, _, _, cross = _solve_pair_cross(p, eval_at, z, r, tol)
    return complex(cross / (2.0 * math.pi))


def szego_limit(p: Potential, lam: complex, horizon: float = 40.0,
                tol: float = 1e-6, ode_tol: float = 1e-10) -> SzegoValue:
    """P*(horizon, lam) with a half-horizon convergence estimate.

    The limit exists for square-integrable coefficients; the value equals the
    inverse Szego function up to a unimodular phase that is never computed.
    """
    if not math.isfinite(p.l2_norm):
        raise ValueError("szego limit requires a square-integrable coefficient")
    grid = Grid(np.array([0.0, horizon / 2.0, horizon]))
    _, Ps, _ = _solve_many(p, np.array([lam]), grid, ode_tol, with_cum=False)
    est = float(abs(Ps[-1, 0] - Ps[-2, 0]))
    converged = est <= tol
    if not converged:
        warnings.warn(
            f"P* half-horizon drift {est:.3e} exceeds {tol:.1e} at lam={lam}",
            SzegoConvergenceWarning)
    return SzegoValue(lam=complex(lam), value=complex(Ps[-1, 0]),
                      horizon=float(horizon), est_error=est, converged=converged)


def pi_modulus_check(p: Potential, lam: complex, horizon: float = 40.0,
                     ode_tol: float = 1e-10) -> float:
    """Relative defect of |Pi(lam)|^2 = 2 Im(lam) int_0^inf |P|^2."""
    if lam.imag <= 0:
        raise ValueError("modulus identity requires Im lam > 0")
    path = solve_krein(p, lam, Grid(np.array([0.0, horizon])), ode_tol)
    pi2 = abs(path.P_star[-1]) ** 2
    return float(abs(pi2 - 2.0 * lam.imag * path.cum_P2[-1]) / pi2)


def _pstar_at(p: Potential, lam: complex, r_end: float, tol: float) -> complex:
    _, Ps, _ = _solve_many(p, np.array([lam]), Grid(np.array([0.0, r_end])),
                           tol, with_cum=False)
    return complex(Ps[-1, 0])


def find_pi_zero(p: Potential, seed: complex | None = None,
                 horizon: float = 40.0,
                 rect: tuple[float, float, float, float] = (-10.0, 10.0, -5.0, 0.0),
                 n_scan: tuple[int, int] = (200, 100),
                 residual_tol: float = 1e-10, ode_tol: float = 1e-12) -> complex:
    """Locate a zero of the entire extension of the Szego limit (a resonance).

    Requires a superexponentially small tail (compact support or gaussian
    class). Without a seed, scans |P*(r_eff, .)| on the rectangle and runs a
    Newton iteration (secant derivative) from the best cells. The returned
    point lies in the closed lower half-plane; its conjugate is the decay
    point of P.
    """
    r_eff = p.effective_support(1e-15)
    if r_eff is None:
        raise ValueError(
            "zero search needs a superexponentially small tail "
            "(compactly supported or gaussian-class coefficient)")
    r_eff = min(horizon, max(r_eff, 1e-3))

    def f(z):
        return _pstar_at(p, z, r_eff, ode_tol)

    candidates = []
    if seed is not None:
        candidates = [complex(seed)]
    else:
        x = np.linspace(rect[0], rect[1], n_scan[0])
        y = np.linspace(rect[2], rect[3], n_scan[1])
        Z = (x[None, :] + 1j * y[:, None]).ravel()
        _, Ps, _ = _solve_many(p, Z, Grid(np.array([0.0, r_eff])), 1e-8,
                               with_cum=False)
        mags = np.abs(Ps[-1])
        order = np.argsort(mags)
        candidates = [complex(Z[i]) for i in order[:3]]
        if mags[order[0]] > 0.9:
            raise ZeroSearchError(
                f"no zero located: min |P*| on scan rectangle is "
                f"{mags[order[0]]:.3f}", trace=[])

    h = 1e-6
    last_trace = []
    for z in candidates:
        trace = [z]
        fz = f(z)
        ok = False
        for _ in range(60):
            if abs(fz) < residual_tol:
                ok = True
                break
            d = (f(z + h) - f(z - h)) / (2.0 * h)
            if d == 0:
                break
            step = fz / d
            if not np.isfinite(step) or abs(step) > 10.0:
                break
            z = z - step
            fz = f(z)
            trace.append(z)
        last_trace = trace
        if ok:
            if z.imag > 1e-12:
                raise ZeroSearchError(
                    f"converged into the upper half-plane at {z} "
                    "(not a valid zero of a Szego-class limit)", trace)
            return complex(z)
    raise ZeroSearchError(
        f"Newton did not reach residual {residual_tol:.1e}", last_trace)


def decay_probe_D(p: Potential, z0: complex, window,
                  floor: float = 1e-13, ode_tol: float = 1e-12) -> DecayFit:
    """Decay-class fit of |P(r, z0)| over the window (z0 in the upper
    half-plane, typically the conjugate of a located zero)."""
    window = Grid.coerce(window)
    if window.points[0] <= 0:
        raise ValueError("probe window must start at r > 0")
    full = Grid(np.concatenate([[0.0], window.points]))
    P, _, _ = _solve_many(p, np.array([z0]), full, ode_tol, with_cum=False)
    mags = np.abs(P[1:, 0])
    return fit_decay(np.column_stack([window.points, mags]), floor=floor)


def probe_magnitudes(p: Potential, z0: complex, window,
                     ode_tol: float = 1e-12) -> np.ndarray:
    """|P(r, z0)| on the window (the raw data behind decay_probe_D)."""
    window = Grid.coerce(window)
    full = Grid(np.concatenate([[0.0], window.points]))
    P, _, _ = _solve_many(p, np.array([z0]), full, ode_tol, with_cum=False)
    return np.abs(P[1:, 0])


def l1_norm_to(p: Potential, r: float) -> float:
    """||a||_{L1([0, r])}, used by the P* growth bound."""
    hi = min(r, p.support_bound) if p.support_bound is not None else r
    if hi <= 0:
        return 0.0
    return float(adaptive_quad(lambda x: np.abs(p(x)), 0.0, hi, 1e-10))


def dump_krein_csv(path, kp: KreinPath) -> None:
    """Write a KreinPath as CSV: r,ReP,ImP,RePstar,ImPstar,cumP2."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "ReP", "ImP", "RePstar", "ImPstar", "cumP2"])
        for r, P, Ps, c2 in zip(kp.r_grid.points, kp.P, kp.P_star, kp.cum_P2):
            writer.writerow([f"{r:.17g}", f"{P.real:.17g}", f"{P.imag:.17g}",
                             f"{Ps.real:.17g}", f"{Ps.imag:.17g}", f"{c2:.17g}"])
