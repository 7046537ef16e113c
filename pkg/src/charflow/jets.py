"""Truncated jet-space engine for the 1D isentropic gas dynamics system.

Jet coordinates are (t, x, u, rho, u_x, rho_x, u_xx, rho_xx, u_xxx, rho_xxx),
treated as independent. The module provides the total derivatives due to the
system, the characteristic derivations X+/X-, residual testing of claimed
invariants, and the shift operator (1/r_x) D_x that raises the order of an
invariant by one.

Functions of jet coordinates are plain callables acting on a JetPoint whose
fields may be floats, numpy arrays (a batch of points) or Dual scalars; all
partial derivatives are obtained by derivative-carrying arithmetic, exact to
round-off.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dualnum import Dual

__all__ = [
    "COORDS", "JetPoint", "JetFunction", "JetOrderError",
    "value_and_partials", "total_dx", "total_dt", "characteristic_apply",
    "dx_function", "dt_function", "char_function",
    "invariance_residual", "shift_invariant", "sample_jet_points",
    "flip_point", "stack_points",
]

COORDS = ("t", "x", "u", "rho", "ux", "rhox", "uxx", "rhoxx", "uxxx", "rhoxxx")
_IT, _IX, _IU, _IRHO, _IUX, _IRHOX, _IUXX, _IRHOXX, _IUXXX, _IRHOXXX = range(10)

MAX_JET_ORDER = 3


class JetOrderError(ValueError):
    """An operator needed jet coordinates beyond the order-3 truncation."""


@dataclass(frozen=True)
class JetPoint:
    """One jet point, or a batch of them when the fields are arrays."""

    t: object = 0.0
    x: object = 0.0
    u: object = 0.0
    rho: object = 1.0
    ux: object = 0.0
    rhox: object = 0.0
    uxx: object = 0.0
    rhoxx: object = 0.0
    uxxx: object = 0.0
    rhoxxx: object = 0.0

    def as_tuple(self):
        return tuple(getattr(self, name) for name in COORDS)


@dataclass(frozen=True)
class JetFunction:
    """A function of jet coordinates up to `order` spatial derivatives."""

    order: int
    fn: Callable[[JetPoint], object]

    def __call__(self, p):
        return self.fn(p)


def _as_jetfunction(f, order=None):
    if isinstance(f, JetFunction):
        return f
    if order is None:
        raise TypeError("plain callables need an explicit jet order")
    return JetFunction(order, f)


def _seeded(p):
    vals = p.as_tuple()
    fields = []
    for i, v in enumerate(vals):
        parts = [0.0] * 10
        parts[i] = 1.0
        fields.append(Dual(v, parts))
    return JetPoint(*fields)


def value_and_partials(f, p):
    """Value of f at p and its partials with respect to all 10 coordinates."""
    f = _as_jetfunction(f, order=MAX_JET_ORDER)
    out = f.fn(_seeded(p))
    if isinstance(out, Dual):
        return out.val, out.parts
    return out, (0.0,) * 10


def flip_point(p):
    """The (t, u) -> (-t, -u) reflection, mapping one characteristic family
    onto the other."""
    return JetPoint(-p.t, p.x, -p.u, p.rho, -p.ux, p.rhox,
                    -p.uxx, p.rhoxx, -p.uxxx, p.rhoxxx)


def stack_points(points):
    """Stack scalar JetPoints into one batched JetPoint."""
    return JetPoint(*(np.asarray([getattr(p, n) for p in points], dtype=float)
                      for n in COORDS))


# total derivatives due to the system

def dx_function(f):
    """Operator form of the total x-derivative due to the system."""
    f = _as_jetfunction(f)
    if f.order >= MAX_JET_ORDER:
        raise JetOrderError(
            f"D_x of an order-{f.order} function exceeds the order-3 truncation")

    def fn(p):
        _, g = value_and_partials(f, p)
        out = g[_IX]
        out = out + p.ux * g[_IU] + p.rhox * g[_IRHO]
        out = out + p.uxx * g[_IUX] + p.rhoxx * g[_IRHOX]
        out = out + p.uxxx * g[_IUXX] + p.rhoxxx * g[_IRHOXX]
        return out

    return JetFunction(f.order + 1, fn)


def _flux_functions(law):
    # right-hand sides solved for the t-derivatives: u_t = -A, rho_t = -B
    def A(p):
        return p.u * p.ux + law.csq_over_rho_lifted(p.rho) * p.rhox

    def B(p):
        return p.u * p.rhox + p.rho * p.ux

    return JetFunction(1, A), JetFunction(1, B)


_law_cache = {}


def _dt_coefficients(law):
    key = law
    try:
        return _law_cache[key]
    except (KeyError, TypeError):
        pass
    A, B = _flux_functions(law)
    coeffs = (A, B, dx_function(A), dx_function(B),
              dx_function(dx_function(A)), dx_function(dx_function(B)))
    try:
        _law_cache[key] = coeffs
    except TypeError:
        pass
    return coeffs


def dt_function(f, law):
    """Operator form of the total t-derivative due to the system."""
    f = _as_jetfunction(f)
    if f.order > 2:
        raise JetOrderError(
            f"D_t of an order-{f.order} function exceeds the order-3 truncation")
    A, B, A1, B1, A2, B2 = _dt_coefficients(law)
    order = f.order

    def fn(p):
        _, g = value_and_partials(f, p)
        out = g[_IT] - A.fn(p) * g[_IU] - B.fn(p) * g[_IRHO]
        if order >= 1:
            out = out - A1.fn(p) * g[_IUX] - B1.fn(p) * g[_IRHOX]
        if order >= 2:
            out = out - A2.fn(p) * g[_IUXX] - B2.fn(p) * g[_IRHOXX]
        return out

    return JetFunction(f.order + 1, fn)


def char_function(side, f, law):
    """X(f) for the characteristic derivation of the given side."""
    sign = {"plus": 1.0, "minus": -1.0}[side]
    f = _as_jetfunction(f)
    dtf = dt_function(f, law)
    dxf = dx_function(f)

    def fn(p):
        c = law.sound_speed_lifted(p.rho)
        return dtf.fn(p) + (p.u + sign * c) * dxf.fn(p)

    return JetFunction(f.order + 1, fn)


def total_dx(f, p):
    """D_x(f) evaluated at p."""
    return dx_function(f).fn(p)


def total_dt(f, p, law):
    """D_t(f) due to the system, evaluated at p."""
    return dt_function(f, law).fn(p)


def characteristic_apply(side, f, p, law):
    """X_side(f) evaluated at p."""
    return char_function(side, f, law).fn(p)


# invariant testing

def invariance_residual(spec, law, samples):
    """Scale-relative residual max |X(f)| / (1 + |D_x f| + |D_t f|).

    `samples` is a batched JetPoint (or a sequence of scalar ones).
    """
    if not isinstance(samples, JetPoint):
        samples = stack_points(samples)
    f = JetFunction(spec.order, spec.fn)
    num = np.abs(char_function(spec.side, f, law).fn(samples))
    dx = np.abs(dx_function(f).fn(samples))
    dt = np.abs(dt_function(f, law).fn(samples))
    return float(np.max(num / (1.0 + dx + dt)))


def shift_invariant(spec, law):
    """New invariant (1/r_x) D_x(f) (plus side) or (1/k_x) D_x(f) (minus)."""
    if spec.order > 1:
        raise JetOrderError("shift of an order-2 invariant leaves the truncation")
    sign = {"plus": 1.0, "minus": -1.0}[spec.side]
    dxf = dx_function(JetFunction(spec.order, spec.fn))

    def denom(p):
        return p.ux + sign * law.phi_prime_lifted(p.rho) * p.rhox

    def fn(p):
        return dxf.fn(p) / denom(p)

    return dataclasses.replace(
        spec,
        name=f"shift({spec.name})",
        order=spec.order + 1,
        required_jet_order=spec.order + 1,
        fn=fn,
        guards=tuple(spec.guards) + (denom,),
    )


# sample generation

def sample_jet_points(law, n, rng, specs=(), guard_floor=1e-6,
                      rho_bounds=(0.1, 10.0), max_reject_ratio=0.9):
    """Random admissible jet points for residual sweeps.

    Draws rho in rho_bounds (clipped to the law's admissible range), u in
    [-3, 3], t in [-2, 2], x in [-3, 3] and all spatial derivatives in
    [-2, 2], rejecting points where any guard of the given invariant specs
    falls below guard_floor in magnitude.
    """
    lo = max(rho_bounds[0], law.rho_range[0])
    hi = min(rho_bounds[1], law.rho_range[1])
    if not lo < hi:
        raise ValueError("law admits no density inside the sampling bounds")
    guards = []
    for s in specs:
        guards.extend(s.guards)

    kept = []
    total_drawn = 0
    total_kept = 0
    while total_kept < n:
        m = max(2 * (n - total_kept), 64)
        batch = JetPoint(
            t=rng.uniform(-2.0, 2.0, m),
            x=rng.uniform(-3.0, 3.0, m),
            u=rng.uniform(-3.0, 3.0, m),
            rho=rng.uniform(lo, hi, m),
            ux=rng.uniform(-2.0, 2.0, m),
            rhox=rng.uniform(-2.0, 2.0, m),
            uxx=rng.uniform(-2.0, 2.0, m),
            rhoxx=rng.uniform(-2.0, 2.0, m),
            uxxx=rng.uniform(-2.0, 2.0, m),
            rhoxxx=rng.uniform(-2.0, 2.0, m),
        )
        ok = np.ones(m, dtype=bool)
        for guard in guards:
            val = np.asarray(guard(batch), dtype=float)
            ok &= np.isfinite(val) & (np.abs(val) >= guard_floor)
        total_drawn += m
        total_kept += int(np.sum(ok))
        kept.append(JetPoint(*(np.asarray(getattr(batch, c))[ok] for c in COORDS)))
        if total_drawn >= 64 and total_kept < (1.0 - max_reject_ratio) * total_drawn:
            raise RuntimeError(
                f"jet sampling rejection rate above {max_reject_ratio:.0%}: "
                f"kept {total_kept} of {total_drawn}")
    merged = JetPoint(*(np.concatenate([np.atleast_1d(getattr(b, c)) for b in kept])[:n]
                        for c in COORDS))
    return merged
