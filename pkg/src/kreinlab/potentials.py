"""Coefficient catalog: families of a in L2(R+), tail antiderivatives, and
oscillation-compensated decay classification.

A potential is a complex-valued coefficient on [0, r_max] with enough
metadata (support bound, L2 norm, local oscillation rate) for the solvers
to pick resolvable discretizations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc

from .kernel import (
    DecayFit,
    Grid,
    KernelError,
    adaptive_quad,
    exp_phase_integral,
    exp_phase_tail,
    fit_decay,
)

DEFAULT_R_MAX = 40.0


@dataclass
class Potential:
    """A coefficient a on [0, r_max], closed-form or sampled."""

    kind: str                      # "closed-form" or "sampled"
    family: str
    evaluator: Callable            # vectorized, no support clipping
    support_bound: float | None
    l2_norm: float
    r_max: float = DEFAULT_R_MAX
    is_real: bool = True
    params: tuple = ()
    sample_grid: np.ndarray | None = None
    sample_values: np.ndarray | None = None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        vals = np.asarray(self.evaluator(r))
        if self.support_bound is not None:
            vals = np.where(r >= self.support_bound, 0.0, vals)
        return vals if vals.ndim else vals[()]

    def breakpoints(self) -> tuple[float, ...]:
        """Interior points where a is not smooth (for panelized quadrature)."""
        if self.family in ("box", "constant") and self.support_bound is not None:
            return (self.support_bound,)
        if self.kind == "sampled":
            return tuple(self.sample_grid[1:-1])
        return ()

    def osc_rate(self, x: float) -> float:
        """Local phase rate of a near x (0 for non-oscillating families)."""
        if self.family == "figure1":
            return math.exp(x)
        return 0.0

    def tail_sup(self, r: float) -> float | None:
        """Upper bound for sup_{x >= r} |int_x^inf a|, or None if unknown."""
        if self.support_bound is not None:
            if r >= self.support_bound:
                return 0.0
            return None
        if self.family == "zero":
            return 0.0
        if self.family == "gaussian":
            c, scale = self.params
            return abs(c) * scale * math.sqrt(math.pi) / 2.0 * float(erfc(r / scale))
        if self.family == "figure1":
            # integration-by-parts envelope e^{-r}/(1+r) with a safety factor
            if r < 2.0:
                return 0.7
            return 1.5 * math.exp(-r) / (1.0 + r)
        return None

    def effective_support(self, mass_tol: float = 1e-15) -> float | None:
        """Point beyond which the remaining L2 mass is below mass_tol.

        None when no such point exists within r_max (slowly decaying or
        non-integrable families).
        """
        if self.support_bound is not None:
            return self.support_bound
        if self.family == "zero":
            return 0.0
        if self.family == "gaussian":
            c, scale = self.params
            r = scale
            while r < self.r_max:
                rest = abs(c) ** 2 * scale * math.sqrt(math.pi / 8.0) * float(
                    erfc(math.sqrt(2.0) * r / scale))
                if rest < mass_tol ** 2:
                    return r
                r += 0.25 * scale
            return self.r_max
        return None


@dataclass
class TailProfile:
    """Tail antiderivative A(r) = int_r^inf a on a grid, with its decay fit."""

    grid: Grid
    values: np.ndarray
    fit: DecayFit


def _segment_l2(grid: np.ndarray, vals: np.ndarray) -> float:
    """Exact integral of |a|^2 for a piecewise-linear a."""
    u = vals[:-1]
    v = vals[1:]
    seg = (np.abs(u) ** 2 + np.real(np.conj(u) * v) + np.abs(v) ** 2) / 3.0
    return float(np.sum(np.diff(grid) * seg))


def build_potential(family: str, *params, r_max: float = DEFAULT_R_MAX) -> Potential:
    """Construct a catalog potential.

    Families: zero | constant(c, cutoff) | box(c, length) | gaussian(c, scale)
    | figure1 | sampled(grid, values). ``constant`` with cutoff=None is
    deliberately non-L2 and only intended for closed-form oracle checks.
    """
    if family == "zero":
        return Potential("closed-form", "zero", lambda r: np.zeros_like(r),
                         support_bound=0.0, l2_norm=0.0, r_max=r_max)

    if family in ("constant", "box"):
        if family == "box":
            c, length = params
            cutoff = float(length)
        else:
            c = params[0]
            cutoff = params[1] if len(params) > 1 else None
            cutoff = None if cutoff is None else float(cutoff)
        c = complex(c)
        is_real = c.imag == 0.0
        if is_real:
            c = c.real
        if cutoff is None:
            l2 = math.inf
        else:
            l2 = abs(c) * math.sqrt(cutoff)
        return Potential("closed-form", family,
                         lambda r, c=c: np.full_like(r, c, dtype=complex if not is_real else float),
                         support_bound=cutoff, l2_norm=l2, r_max=r_max,
                         is_real=is_real, params=(c, cutoff))

    if family == "gaussian":
        c, scale = params
        c = complex(c)
        is_real = c.imag == 0.0
        if is_real:
            c = c.real
        scale = float(scale)
        if scale <= 0:
            raise ValueError("gaussian scale must be positive")
        l2 = abs(c) * math.sqrt(scale) * (math.pi / 8.0) ** 0.25
        return Potential("closed-form", "gaussian",
                         lambda r, c=c, s=scale: c * np.exp(-((r / s) ** 2)),
                         support_bound=None, l2_norm=l2, r_max=r_max,
                         is_real=is_real, params=(c, scale))

    if family == "figure1":
        # oscillating coefficient sin(e^r)/(1+r); L2 norm over [0, r_max]
        half = 0.5 * (1.0 - 1.0 / (1.0 + r_max))
        osc = 0.5 * exp_phase_integral(lambda x: (1.0 + x) ** -2, 0.0, r_max,
                                       omega=2.0, kind="cos")
        return Potential("closed-form", "figure1",
                         lambda r: np.sin(np.exp(r)) / (1.0 + r),
                         support_bound=None, l2_norm=math.sqrt(half - osc),
                         r_max=r_max)

    if family == "sampled":
        grid, values = params
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("sample grid must have at least two points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("sample grid must be strictly increasing")
        if np.any(~np.isfinite(grid)) or np.any(~np.isfinite(values)):
            raise ValueError("samples must be finite")
        is_real = bool(np.all(np.imag(values) == 0))
        vals = values.real if is_real else values.astype(complex)

        def evaluator(r, g=grid, v=vals):
            re = np.interp(r, g, v.real, left=0.0, right=0.0)
            if np.iscomplexobj(v):
                return re + 1j * np.interp(r, g, v.imag, left=0.0, right=0.0)
            return re

        return Potential("sampled", "sampled", evaluator,
                         support_bound=float(grid[-1]),
                         l2_norm=math.sqrt(_segment_l2(grid, vals)),
                         r_max=r_max, is_real=is_real,
                         sample_grid=grid, sample_values=vals)

    raise ValueError(f"unknown potential family: {family!r}")


def read_potential_csv(path, r_max: float = DEFAULT_R_MAX) -> Potential:
    """Ingest a sampled potential from CSV with header exactly 'r,re,im'."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["r", "re", "im"]:
            raise ValueError("expected CSV header 'r,re,im'")
        rows = []
        for row in reader:
            if len(row) != 3:
                raise ValueError(f"malformed CSV row: {row!r}")
            rows.append([float(x) for x in row])
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        raise ValueError("empty potential CSV")
    if np.any(~np.isfinite(arr)):
        raise ValueError("NaN or infinity in potential CSV")
    return build_potential("sampled", arr[:, 0], arr[:, 1] + 1j * arr[:, 2],
                           r_max=r_max)


def tail_integral(p: Potential, r: float):
    """A(r) = int_r^inf a(x) dx."""
    r = float(r)
    if r < 0:
        raise ValueError("r must be >= 0")

    if p.support_bound is not None and r >= p.support_bound:
        return 0.0 if p.is_real else 0.0 + 0.0j

    if p.family == "figure1":
        return exp_phase_tail(lambda x: 1.0 / (1.0 + x), r)

    if p.family == "gaussian":
        c, scale = p.params
        return c * scale * math.sqrt(math.pi) / 2.0 * float(erfc(r / scale))

    if p.family == "constant" and p.support_bound is None:
        raise KernelError("tail integral of an un-truncated constant diverges")

    if p.kind == "sampled":
        g, v = p.sample_grid, p.sample_values
        # exact piecewise-linear integral from max(r, g[0]) to g[-1]
        lo = max(r, float(g[0]))
        mask = g > lo
        xs = np.concatenate([[lo], g[mask]])
        ys = np.concatenate([[p(lo)], v[mask]])
        val = np.trapezoid(ys, xs)
        return complex(val) if not p.is_real else float(np.real(val))

    # remaining families are supported on [0, support_bound]
    return adaptive_quad(p, r, p.support_bound, 1e-12)


def oscillation_classify(p: Potential, window, floor: float = 1e-13) -> TailProfile:
    """Tail-decay classification of |A| on the window.

    Support-bounded potentials produce the identically-zero-tail flag past
    their support, reported via the fit (membership in every decay class).
    """
    window = Grid.coerce(window)
    values = np.asarray([tail_integral(p, r) for r in window.points])
    fit = fit_decay(np.column_stack([window.points, np.abs(values)]), floor=floor)
    return TailProfile(grid=window, values=values, fit=fit)
