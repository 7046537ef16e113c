"""Equation-of-state layer and the catalog of invariants of characteristics.

A barotropy supplies the potential phi(rho) with phi' > 0, the sound speed
c = rho*phi'(rho), the pressure, and the Riemann-variable transforms
r = u + phi, k = u - phi. The classified laws carry additional functions of
jet coordinates that are annihilated identically by one characteristic
derivation; `catalog` returns them as InvariantSpec records that
`jets.invariance_residual` can test.

Classified laws:

* Case 1: phi = rho                      (polytropic gamma = 3)
* Case 2: phi = -1/(rho + C)
* Case 3: phi = 3*(rho + C)^(1/3)        (C = 0 is polytropic gamma = 5/3)
* Case 4: phi implicit, exponential family (C1 > 0, C2 != 0)
* Case 5: phi implicit, trigonometric family (C1 > 0)
* Case 6: polytropic gamma = 1/3, second-order invariant b/a^3
* Case 7: polytropic gamma = 7/5, second-order invariant

For any other law only the Riemann invariants are guaranteed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import dualnum as d
from .dualnum import apply_chain
from .jets import JetFunction, dx_function, flip_point

__all__ = [
    "BarotropyError", "VacuumError", "ImplicitSolveError", "BranchAmbiguityError",
    "Polytropic", "Case2", "Case3", "Case4", "Case5",
    "InvariantSpec", "catalog",
    "phi", "sound_speed", "pressure",
    "riemann_from_state", "state_from_riemann",
    "case3_classic_invariant", "case7_ab_invariant", "corrupted_riemann",
    "DEFAULT_RHO_MIN", "CLASSIFIED_GAMMAS",
]

DEFAULT_RHO_MIN = 1e-12
CLASSIFIED_GAMMAS = (3.0, 5.0 / 3.0, 7.0 / 5.0, 1.0 / 3.0)

_NDERIV = 7


class BarotropyError(ValueError):
    pass


class VacuumError(BarotropyError):
    """State transform hit vacuum or an invalid Riemann-invariant gap."""


class ImplicitSolveError(BarotropyError):
    pass


class BranchAmbiguityError(ImplicitSolveError):
    pass


def _gamma_is(g, target):
    return math.isclose(g, target, rel_tol=1e-12, abs_tol=0.0)


def _falling(alpha, j):
    out = 1.0
    for i in range(j):
        out *= alpha - i
    return out


def _power_chain(K, alpha, shift=0.0, nderiv=_NDERIV):
    """Derivative chain of K*(rho+shift)**alpha (positive base assumed)."""
    funcs = []
    for j in range(nderiv):
        coef = K * _falling(alpha, j)
        expo = alpha - j

        def f(r, coef=coef, expo=expo):
            r = np.asarray(r, dtype=float)
            if coef == 0.0:
                return np.zeros_like(r)
            return coef * (r + shift) ** expo

        funcs.append(f)
    return tuple(funcs)


class _LawBase:
    """Shared behaviour; concrete laws define phi_chain, pressure, rho_range."""

    def phi_chain(self):
        raise NotImplementedError

    @property
    def rho_range(self):
        raise NotImplementedError

    def _check_rho(self, rho):
        rho = np.asarray(rho, dtype=float)
        lo, hi = self.rho_range
        if np.any(rho <= lo) or np.any(rho >= hi):
            raise BarotropyError(
                f"density outside admissible range ({lo:g}, {hi:g}) for {self}")
        return rho

    def phi(self, rho):
        return self.phi_chain()[0](self._check_rho(rho))

    def phi_prime(self, rho):
        return self.phi_chain()[1](self._check_rho(rho))

    def sound_speed(self, rho):
        rho = self._check_rho(rho)
        return rho * self.phi_chain()[1](rho)

    # lifted variants accept Dual arguments from the jet engine
    def phi_lifted(self, x):
        return apply_chain(x, self.phi_chain())

    def phi_prime_lifted(self, x):
        return apply_chain(x, self.phi_chain()[1:])

    def sound_speed_lifted(self, x):
        return x * self.phi_prime_lifted(x)

    def csq_over_rho_lifted(self, x):
        p1 = self.phi_prime_lifted(x)
        return x * p1 * p1

    def phi_inverse(self, y):
        raise NotImplementedError


@dataclass(frozen=True)
class Polytropic(_LawBase):
    """p = rho**gamma / gamma, c = rho**((gamma-1)/2)."""

    gamma: float

    def __post_init__(self):
        if self.gamma == 1.0:
            raise BarotropyError("gamma = 1 is excluded (isothermal)")
        g = self.gamma
        object.__setattr__(self, "_phi_chain",
                           _power_chain(2.0 / (g - 1.0), (g - 1.0) / 2.0))
        object.__setattr__(self, "_c_chain", _power_chain(1.0, (g - 1.0) / 2.0))
        object.__setattr__(self, "_s_chain", _power_chain(1.0, g - 2.0))

    def phi_chain(self):
        return self._phi_chain

    @property
    def rho_range(self):
        return (0.0, math.inf)

    def pressure(self, rho):
        rho = self._check_rho(rho)
        return rho ** self.gamma / self.gamma

    def sound_speed_lifted(self, x):
        return apply_chain(x, self._c_chain)

    def csq_over_rho_lifted(self, x):
        return apply_chain(x, self._s_chain)

    def phi_inverse(self, y):
        y = np.asarray(y, dtype=float)
        g = self.gamma
        t = (g - 1.0) * y / 2.0
        if np.any(t <= 0.0):
            raise VacuumError("Riemann gap outside the range of phi (vacuum or invalid)")
        return t ** (2.0 / (g - 1.0))


@dataclass(frozen=True)
class Case2(_LawBase):
    """phi = -1/(rho + C)."""

    C: float

    def phi_chain(self):
        C = self.C
        funcs = []
        for j in range(_NDERIV):
            coef = -((-1.0) ** j) * math.factorial(j)

            def f(r, coef=coef, j=j, C=C):
                return coef * (np.asarray(r, dtype=float) + C) ** (-(j + 1))

            funcs.append(f)
        return tuple(funcs)

    @property
    def rho_range(self):
        if self.C >= 0.0:
            return (0.0, math.inf)
        return (-self.C, math.inf)

    def pressure(self, rho):
        rho = self._check_rho(rho)
        C = self.C
        return -(3 * rho ** 2 + 3 * C * rho + C ** 2) / (3 * (rho + C) ** 3)

    def phi_inverse(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y == 0.0):
            raise VacuumError("phi = 0 is not attained by this law")
        rho = -1.0 / y - self.C
        lo, hi = self.rho_range
        if np.any(rho <= lo) or np.any(rho >= hi):
            raise VacuumError("Riemann gap outside the range of phi (vacuum or invalid)")
        return rho


@dataclass(frozen=True)
class Case3(_LawBase):
    """phi = 3*(rho + C)^(1/3), real cube root, rho + C != 0."""

    C: float

    def phi_chain(self):
        C = self.C
        funcs = []
        for j in range(_NDERIV):
            coef = 3.0 * _falling(1.0 / 3.0, j)

            def f(r, coef=coef, j=j, C=C):
                s = np.cbrt(np.asarray(r, dtype=float) + C)
                return coef * s ** (1 - 3 * j)

            funcs.append(f)
        return tuple(funcs)

    @property
    def rho_range(self):
        if self.C >= 0.0:
            return (0.0, math.inf)
        return (-self.C, math.inf)

    def pressure(self, rho):
        rho = self._check_rho(rho)
        C = self.C
        return 0.6 * (rho ** 2 - 3 * C * rho - 9 * C ** 2) / np.cbrt(rho + C)

    def phi_inverse(self, y):
        y = np.asarray(y, dtype=float)
        rho = (y / 3.0) ** 3 - self.C
        lo, hi = self.rho_range
        if np.any(rho <= lo) or np.any(rho >= hi):
            raise VacuumError("Riemann gap outside the range of phi (vacuum or invalid)")
        return rho


class _TaylorCalc:
    """Truncated univariate Taylor arithmetic used to differentiate the
    implicitly defined phi of Cases 4 and 5."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = list(coeffs)

    @classmethod
    def const(cls, v, order, like):
        z = np.zeros_like(like)
        return cls([v + z] + [z.copy() for _ in range(order - 1)])

    def __add__(self, o):
        if isinstance(o, _TaylorCalc):
            return _TaylorCalc([a + b for a, b in zip(self.c, o.c)])
        out = [ci.copy() for ci in self.c]
        out[0] = out[0] + o
        return _TaylorCalc(out)

    __radd__ = __add__

    def __sub__(self, o):
        return self + (o * -1.0 if isinstance(o, _TaylorCalc) else -o)

    def __rsub__(self, o):
        return (self * -1.0) + o

    def __mul__(self, o):
        if isinstance(o, _TaylorCalc):
            n = len(self.c)
            out = []
            for m in range(n):
                s = self.c[0] * o.c[m]
                for k in range(1, m + 1):
                    s = s + self.c[k] * o.c[m - k]
                out.append(s)
            return _TaylorCalc(out)
        return _TaylorCalc([ci * o for ci in self.c])

    __rmul__ = __mul__

    def recip(self):
        n = len(self.c)
        out = [1.0 / self.c[0]]
        for m in range(1, n):
            s = self.c[1] * out[m - 1]
            for k in range(2, m + 1):
                s = s + self.c[k] * out[m - k]
            out.append(-s / self.c[0])
        return _TaylorCalc(out)

    def exp(self):
        n = len(self.c)
        out = [np.exp(self.c[0])]
        for m in range(1, n):
            s = 1.0 * self.c[1] * out[m - 1]
            for k in range(2, m + 1):
                s = s + k * self.c[k] * out[m - k]
            out.append(s / m)
        return _TaylorCalc(out)

    def sincos(self):
        n = len(self.c)
        s_out = [np.sin(self.c[0])]
        c_out = [np.cos(self.c[0])]
        for m in range(1, n):
            ps = 1.0 * self.c[1] * c_out[m - 1]
            pc = 1.0 * self.c[1] * s_out[m - 1]
            for k in range(2, m + 1):
                ps = ps + k * self.c[k] * c_out[m - k]
                pc = pc + k * self.c[k] * s_out[m - k]
            s_out.append(ps / m)
            c_out.append(-pc / m)
        return _TaylorCalc(s_out), _TaylorCalc(c_out)


class _ImplicitLaw(_LawBase):
    """Shared machinery for the implicitly defined laws (Cases 4 and 5).

    The defining relation F(rho, phi) = 0 is solved on the branch through
    (branch_ref_rho, phi_ref) found at construction; a continuation table
    seeds vectorized Newton solves, and derivative chains come from Newton
    iteration lifted to truncated Taylor arithmetic.
    """

    _PHI_SCAN = (-8.0, 8.0)

    def _F(self, rho, phi):
        raise NotImplementedError

    def _F_phi(self, rho, phi):
        raise NotImplementedError

    def _build_branch(self, ref_rho, phi_ref, rho_lo, rho_hi):
        scan = np.linspace(self._PHI_SCAN[0], self._PHI_SCAN[1], 4001)
        vals = self._F(ref_rho, scan)
        roots = []
        for i in range(len(scan) - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0.0:
                roots.append(scan[i])
            elif a * b < 0.0:
                roots.append(brentq(lambda pv: self._F(ref_rho, pv), scan[i], scan[i + 1]))
        # collapse near-duplicates
        uniq = []
        for rt in roots:
            if not uniq or abs(rt - uniq[-1]) > 1e-8:
                uniq.append(rt)
        if not uniq:
            raise ImplicitSolveError(
                f"no branch of {type(self).__name__} found at rho = {ref_rho}")
        if phi_ref is None:
            if len(uniq) > 1:
                raise BranchAmbiguityError(
                    f"multiple branches at rho = {ref_rho}: phi in {uniq}; "
                    "pass phi_ref to select one")
            phi0 = uniq[0]
        else:
            phi0 = min(uniq, key=lambda rt: abs(rt - phi_ref))

        def march(direction):
            rhos, phis = [], []
            rho, pv = ref_rho, phi0
            factor = 1.03 if direction > 0 else 1.0 / 1.03
            limit = rho_hi if direction > 0 else rho_lo
            while (rho < limit) if direction > 0 else (rho > limit):
                nxt = rho * factor
                if (direction > 0 and nxt > limit) or (direction < 0 and nxt < limit):
                    nxt = limit
                ok, pv_new = self._newton_scalar(nxt, pv)
                if not ok:
                    break
                # reject the step if the branch degenerates
                if abs(self._F_phi(nxt, pv_new)) < 1e-10:
                    break
                rho, pv = nxt, pv_new
                rhos.append(rho)
                phis.append(pv)
                if rho == limit:
                    break
            return rhos, phis

        up_r, up_p = march(+1)
        dn_r, dn_p = march(-1)
        rho_tab = np.array(dn_r[::-1] + [ref_rho] + up_r)
        phi_tab = np.array(dn_p[::-1] + [phi0] + up_p)
        return rho_tab, phi_tab, phi0

    def _newton_scalar(self, rho, phi0):
        pv = phi0
        for _ in range(80):
            fp = self._F_phi(rho, pv)
            if fp == 0.0:
                return False, pv
            step = self._F(rho, pv) / fp
            pv -= step
            if abs(step) <= 1e-15 * (1.0 + abs(pv)):
                return True, pv
        return abs(self._F(rho, pv)) < 1e-10, pv

    @property
    def rho_range(self):
        return (self._rho_tab[0], self._rho_tab[-1])

    def _solve_phi(self, rho):
        rho = np.asarray(rho, dtype=float)
        pv = np.interp(rho, self._rho_tab, self._phi_tab)
        for _ in range(60):
            fp = self._F_phi(rho, pv)
            if np.any(fp == 0.0):
                raise ImplicitSolveError("degenerate branch point in phi solve")
            step = self._F(rho, pv) / fp
            pv = pv - step
            if np.max(np.abs(step)) <= 1e-15 * (1.0 + np.max(np.abs(pv))):
                break
        res = np.max(np.abs(self._F(rho, pv)))
        if not np.isfinite(res) or res > 1e-9:
            raise ImplicitSolveError(f"phi solve did not converge (residual {res:g})")
        return pv

    def _taylor_phi(self, rho):
        """Coefficient arrays of phi around each entry of rho, to _NDERIV."""
        rho = np.asarray(rho, dtype=float)
        key = (rho.shape, rho.tobytes())
        cached = self._taylor_cache.get(key)
        if cached is not None:
            return cached
        phi0 = self._solve_phi(rho)
        z = np.zeros_like(rho)
        one = np.ones_like(rho)
        rho_t = _TaylorCalc([rho.copy(), one] + [z.copy() for _ in range(_NDERIV - 2)])
        phi_t = _TaylorCalc([phi0] + [z.copy() for _ in range(_NDERIV - 1)])
        for _ in range(5):
            fval = self._F_taylor(rho_t, phi_t)
            fphi = self._F_phi_taylor(rho_t, phi_t)
            phi_t = phi_t - fval * fphi.recip()
        derivs = [phi_t.c[j] * math.factorial(j) for j in range(_NDERIV)]
        if len(self._taylor_cache) > 8:
            self._taylor_cache.clear()
        self._taylor_cache[key] = derivs
        return derivs

    def phi_chain(self):
        funcs = []
        for j in range(_NDERIV):
            def f(r, j=j):
                scalar = np.isscalar(r) or np.ndim(r) == 0
                arr = np.atleast_1d(np.asarray(r, dtype=float))
                out = self._taylor_phi(arr)[j]
                return float(out[0]) if scalar else out

            funcs.append(f)
        return tuple(funcs)

    def pressure(self, rho):
        """Pressure from c^2 = p'(rho), anchored to p(branch_ref_rho) = 0."""
        def integrand(s):
            p1 = float(self.phi_chain()[1](s))
            return (s * p1) ** 2

        rho = self._check_rho(rho)
        scalar = np.isscalar(rho) or np.ndim(rho) == 0
        arr = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.array([quad(integrand, self.branch_ref_rho, r, limit=200)[0]
                        for r in arr])
        return float(out[0]) if scalar else out

    def phi_inverse(self, y):
        y = np.asarray(y, dtype=float)
        ptab = self._phi_tab
        if np.any(y <= ptab[0]) or np.any(y >= ptab[-1]):
            raise VacuumError("Riemann gap outside the range of phi (vacuum or invalid)")
        rho = np.interp(y, ptab, self._rho_tab)
        for _ in range(60):
            err = self._solve_phi(rho) - y
            rho = rho - err / self.phi_chain()[1](rho)
            if np.max(np.abs(err)) <= 1e-14 * (1.0 + np.max(np.abs(y))):
                break
        return rho


@dataclass(frozen=True)
class Case4(_ImplicitLaw):
    """phi defined by C1*rho*(e^-phi + C2*e^phi) = (phi+1)e^-phi + C2*(phi-1)e^phi."""

    C1: float
    C2: float
    branch_ref_rho: float = 1.0
    phi_ref: float | None = None
    rho_lo: float = 1e-3
    rho_hi: float = 1e3

    def __post_init__(self):
        if self.C1 <= 0.0 or self.C2 == 0.0:
            raise BarotropyError("Case 4 needs C1 > 0 and C2 != 0")
        tab = self._build_branch(self.branch_ref_rho, self.phi_ref,
                                 self.rho_lo, self.rho_hi)
        object.__setattr__(self, "_rho_tab", tab[0])
        object.__setattr__(self, "_phi_tab", tab[1])
        object.__setattr__(self, "_taylor_cache", {})

    def __hash__(self):
        return hash(("Case4", self.C1, self.C2, self.branch_ref_rho, self.phi_ref))

    def _F(self, rho, phi):
        C1, C2 = self.C1, self.C2
        em, ep = np.exp(-phi), np.exp(phi)
        return C1 * rho * (em + C2 * ep) - (phi + 1.0) * em - C2 * (phi - 1.0) * ep

    def _F_phi(self, rho, phi):
        C1, C2 = self.C1, self.C2
        em, ep = np.exp(-phi), np.exp(phi)
        return (C2 * ep - em) * (C1 * rho - phi)

    def _F_taylor(self, rho_t, phi_t):
        C1, C2 = self.C1, self.C2
        em = (phi_t * -1.0).exp()
        ep = phi_t.exp()
        return (rho_t * (em + ep * C2)) * C1 - (phi_t + 1.0) * em - (phi_t - 1.0) * ep * C2

    def _F_phi_taylor(self, rho_t, phi_t):
        C1, C2 = self.C1, self.C2
        em = (phi_t * -1.0).exp()
        ep = phi_t.exp()
        return (ep * C2 - em) * (rho_t * C1 - phi_t)


@dataclass(frozen=True)
class Case5(_ImplicitLaw):
    """phi defined by C1*rho*(cos phi - C2 sin phi)
    = (C2*phi+1) sin phi + (C2-phi) cos phi."""

    C1: float
    C2: float
    branch_ref_rho: float = 1.0
    phi_ref: float | None = None
    rho_lo: float = 1e-3
    rho_hi: float = 1e3

    _PHI_SCAN = (-1.5, 1.5)

    def __post_init__(self):
        if self.C1 <= 0.0:
            raise BarotropyError("Case 5 needs C1 > 0")
        tab = self._build_branch(self.branch_ref_rho, self.phi_ref,
                                 self.rho_lo, self.rho_hi)
        object.__setattr__(self, "_rho_tab", tab[0])
        object.__setattr__(self, "_phi_tab", tab[1])
        object.__setattr__(self, "_taylor_cache", {})

    def __hash__(self):
        return hash(("Case5", self.C1, self.C2, self.branch_ref_rho, self.phi_ref))

    def _F(self, rho, phi):
        C1, C2 = self.C1, self.C2
        s, c = np.sin(phi), np.cos(phi)
        return C1 * rho * (c - C2 * s) - (C2 * phi + 1.0) * s - (C2 - phi) * c

    def _F_phi(self, rho, phi):
        C1, C2 = self.C1, self.C2
        s, c = np.sin(phi), np.cos(phi)
        return -(C1 * rho + phi) * (s + C2 * c)

    def _F_taylor(self, rho_t, phi_t):
        C1, C2 = self.C1, self.C2
        s, c = phi_t.sincos()
        return (rho_t * (c - s * C2)) * C1 - (phi_t * C2 + 1.0) * s - (phi_t * -1.0 + C2) * c

    def _F_phi_taylor(self, rho_t, phi_t):
        C1, C2 = self.C1, self.C2
        s, c = phi_t.sincos()
        return (rho_t * C1 + phi_t) * (s + c * C2) * -1.0


# state transforms

def phi(law, rho):
    return law.phi(rho)


def sound_speed(law, rho):
    return law.sound_speed(rho)


def pressure(law, rho):
    return law.pressure(rho)


def riemann_from_state(law, u, rho, rho_min=DEFAULT_RHO_MIN):
    """(r, k) = (u + phi, u - phi). The density must clear the vacuum guard."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < rho_min):
        raise VacuumError(f"density below the vacuum guard {rho_min:g}")
    ph = law.phi(rho)
    return u + ph, u - ph


def state_from_riemann(law, r, k, rho_min=DEFAULT_RHO_MIN):
    """Invert the Riemann transforms: u = (r+k)/2, rho = phi^-1((r-k)/2)."""
    r = np.asarray(r, dtype=float)
    k = np.asarray(k, dtype=float)
    rho = law.phi_inverse((r - k) / 2.0)
    if np.any(rho < rho_min):
        raise VacuumError(f"implied density below the vacuum guard {rho_min:g}")
    return (r + k) / 2.0, rho


# invariant catalog

@dataclass(frozen=True)
class InvariantSpec:
    """A catalogued invariant of one characteristic family."""

    name: str
    side: str  # "plus" | "minus"
    order: int
    fn: Callable
    guards: tuple = ()
    required_jet_order: int = 0


def _riemann_entries(law):
    def r_fn(p):
        return p.u + law.phi_lifted(p.rho)

    def k_fn(p):
        return p.u - law.phi_lifted(p.rho)

    return (InvariantSpec("Riemann.r", "plus", 0, r_fn),
            InvariantSpec("Riemann.k", "minus", 0, k_fn))


def _rx_fn(law):
    def fn(p):
        return p.ux + law.phi_prime_lifted(p.rho) * p.rhox
    return fn


def _kx_fn(law):
    def fn(p):
        return p.ux - law.phi_prime_lifted(p.rho) * p.rhox
    return fn


def _rxx_fn(law, sign=1.0):
    def fn(p):
        p1 = law.phi_prime_lifted(p.rho)
        p2 = apply_chain(p.rho, law.phi_chain()[2:])
        return p.uxx + sign * (p1 * p.rhoxx + p2 * p.rhox * p.rhox)
    return fn


def _flipped(spec):
    plus_fn = spec.fn

    def fn(p):
        return plus_fn(flip_point(p))

    guards = tuple((lambda g: (lambda p: g(flip_point(p))))(g) for g in spec.guards)
    return replace(spec, side="minus", fn=fn, guards=guards)


def _case1_entries(law):
    rx, kx = _rx_fn(law), _kx_fn(law)

    def i1p(p):
        return p.x - (p.u + law.phi_lifted(p.rho)) * p.t

    def i1m(p):
        return p.x - (p.u - law.phi_lifted(p.rho)) * p.t

    def i2p(p):
        return 1.0 / rx(p) - p.t

    def i2m(p):
        return 1.0 / kx(p) - p.t

    return (InvariantSpec("Case1.I1", "plus", 0, i1p),
            InvariantSpec("Case1.I2", "plus", 1, i2p, guards=(rx,), required_jet_order=1),
            InvariantSpec("Case1.I1", "minus", 0, i1m),
            InvariantSpec("Case1.I2", "minus", 1, i2m, guards=(kx,), required_jet_order=1))


def _case3_riemann_entries(law):
    rx, kx = _rx_fn(law), _kx_fn(law)

    def ip(p):
        ph = law.phi_lifted(p.rho)
        r = p.u + ph
        k = p.u - ph
        return p.x - r * p.t + (r - k) / (2.0 * rx(p))

    def im(p):
        ph = law.phi_lifted(p.rho)
        r = p.u + ph
        k = p.u - ph
        return p.x - k * p.t + (k - r) / (2.0 * kx(p))

    return (InvariantSpec("Case3.I", "plus", 1, ip, guards=(rx,), required_jet_order=1),
            InvariantSpec("Case3.I", "minus", 1, im, guards=(kx,), required_jet_order=1))


def _case7_entries(law):
    rx, kx = _rx_fn(law), _kx_fn(law)
    rxx, kxx = _rxx_fn(law, 1.0), _rxx_fn(law, -1.0)

    def ip(p):
        ph = law.phi_lifted(p.rho)
        r, k = p.u + ph, p.u - ph
        rxv, kxv = rx(p), kx(p)
        num = 2.0 * rxv * (4.0 * rxv - kxv) - (r - k) * rxx(p)
        return p.x - r * p.t + (r - k) * num / (12.0 * rxv ** 3)

    def im(p):
        ph = law.phi_lifted(p.rho)
        r, k = p.u + ph, p.u - ph
        rxv, kxv = rx(p), kx(p)
        num = 2.0 * kxv * (4.0 * kxv - rxv) - (k - r) * kxx(p)
        return p.x - k * p.t + (k - r) * num / (12.0 * kxv ** 3)

    return (InvariantSpec("Case7.I", "plus", 2, ip, guards=(rx,), required_jet_order=2),
            InvariantSpec("Case7.I", "minus", 2, im, guards=(kx,), required_jet_order=2))


def _ab_functions(gamma):
    """The auxiliary quantities a and b of the second-order classification."""
    q = (gamma - 3.0) / 4.0
    k2 = (gamma ** 2 - 2.0 * gamma - 3.0) / (16.0 * (gamma - 1.0))

    def a_fn(p):
        return d.powc(p.rho, q) * p.ux + d.powc(p.rho, 3.0 * q) * p.rhox

    a_jet = JetFunction(1, a_fn)
    ax = dx_function(a_jet)

    def b_fn(p):
        w = p.ux + d.powc(p.rho, 2.0 * q) * p.rhox
        return d.powc(p.rho, q) * ax.fn(p) + (k2 / p.rho) * w * w

    return a_fn, b_fn


def _case6_entries(law):
    gamma = law.gamma
    a_fn, b_fn = _ab_functions(gamma)
    rx, kx = _rx_fn(law), _kx_fn(law)
    rxx, kxx = _rxx_fn(law, 1.0), _rxx_fn(law, -1.0)

    def iab(p):
        a = a_fn(p)
        return b_fn(p) / (a * a * a)

    spec_ab_p = InvariantSpec("Case6.I", "plus", 2, iab, guards=(a_fn,),
                              required_jet_order=2)
    spec_ab_m = _flipped(spec_ab_p)

    def gap(p):
        return 2.0 * law.phi_lifted(p.rho)

    def jp(p):
        ph = law.phi_lifted(p.rho)
        r, k = p.u + ph, p.u - ph
        rxv = rx(p)
        return (rxx(p) * (k - r) + 2.0 * rxv * kx(p)) / ((k - r) ** 3 * rxv ** 3)

    def jm(p):
        ph = law.phi_lifted(p.rho)
        r, k = p.u + ph, p.u - ph
        kxv = kx(p)
        return (kxx(p) * (r - k) + 2.0 * kxv * rx(p)) / ((r - k) ** 3 * kxv ** 3)

    spec_j_p = InvariantSpec("Case6.Iriem", "plus", 2, jp, guards=(rx, gap),
                             required_jet_order=2)
    spec_j_m = InvariantSpec("Case6.Iriem", "minus", 2, jm, guards=(kx, gap),
                             required_jet_order=2)
    return (spec_ab_p, spec_ab_m, spec_j_p, spec_j_m)


def _case2_entries(law):
    C = law.C

    def denom(p):
        s = p.rho + C
        return p.rhox + s * s * p.ux

    def shifted_rho(p):
        return p.rho + C

    def ip(p):
        s = p.rho + C
        return C * p.t - s * s * s / (p.rhox + s * s * p.ux)

    spec_p = InvariantSpec("Case2.I", "plus", 1, ip, guards=(denom, shifted_rho),
                           required_jet_order=1)
    return (spec_p, _flipped(spec_p))


def _case3_classic_entries(law):
    C = law.C

    def denom(p):
        s23 = d.cbrt(p.rho + C) ** 2
        return p.rhox + s23 * p.ux

    def ip(p):
        s = p.rho + C
        ph = 3.0 * d.cbrt(s)
        return p.x - (p.u + ph) * p.t + 3.0 * s / (p.rhox + d.cbrt(s) ** 2 * p.ux)

    spec_p = InvariantSpec("Case3.I", "plus", 1, ip, guards=(denom,),
                           required_jet_order=1)
    return (spec_p, _flipped(spec_p))


def _case4_entries(law):
    C1 = law.C1

    def nu(p):
        return law.phi_lifted(p.rho) - C1 * p.rho

    def denom(p):
        n = nu(p)
        return C1 * p.rhox + n * n * p.ux

    def ip(p):
        ph = law.phi_lifted(p.rho)
        n = ph - C1 * p.rho
        return p.x - (p.u + ph) * p.t + n ** 3 / (C1 * p.rhox + n * n * p.ux)

    spec_p = InvariantSpec("Case4.I", "plus", 1, ip, guards=(denom, nu),
                           required_jet_order=1)
    return (spec_p, _flipped(spec_p))


def _case5_entries(law):
    C1 = law.C1

    def w(p):
        return law.phi_lifted(p.rho) + C1 * p.rho

    def denom(p):
        wv = w(p)
        return C1 * p.rhox + wv * wv * p.ux

    def ip(p):
        ph = law.phi_lifted(p.rho)
        wv = ph + C1 * p.rho
        return p.x - (p.u + ph) * p.t + wv ** 3 / (C1 * p.rhox + wv * wv * p.ux)

    spec_p = InvariantSpec("Case5.I", "plus", 1, ip, guards=(denom, w),
                           required_jet_order=1)
    return (spec_p, _flipped(spec_p))


def catalog(law):
    """All catalogued invariants of the law, Riemann invariants first.

    Unclassified laws get only the Riemann invariants.
    """
    specs = list(_riemann_entries(law))
    if isinstance(law, Polytropic):
        g = law.gamma
        if _gamma_is(g, 3.0):
            specs.extend(_case1_entries(law))
        elif _gamma_is(g, 5.0 / 3.0):
            specs.extend(_case3_riemann_entries(law))
        elif _gamma_is(g, 7.0 / 5.0):
            specs.extend(_case7_entries(law))
        elif _gamma_is(g, 1.0 / 3.0):
            specs.extend(_case6_entries(law))
    elif isinstance(law, Case2):
        specs.extend(_case2_entries(law))
    elif isinstance(law, Case3):
        specs.extend(_case3_classic_entries(law))
    elif isinstance(law, Case4):
        specs.extend(_case4_entries(law))
    elif isinstance(law, Case5):
        specs.extend(_case5_entries(law))
    return tuple(specs)


def case3_classic_invariant(C=0.0):
    """The first-order invariant of the phi = 3*(rho+C)^(1/3) law in
    (u, rho, u_x, rho_x) form, for cross-checking the Riemann form."""
    return _case3_classic_entries(Case3(C))[0]


def case7_ab_invariant(law):
    """gamma = 7/5 second-order invariant in (a, b) form, for cross-checking."""
    a_fn, b_fn = _ab_functions(law.gamma)

    def fn(p):
        a = a_fn(p)
        return p.x - (p.u + 5.0 * d.powc(p.rho, 0.2)) * p.t \
            - 25.0 * b_fn(p) / (3.0 * a ** 3)

    return InvariantSpec("Case7.I.ab", "plus", 2, fn, guards=(a_fn,),
                         required_jet_order=2)


def corrupted_riemann(law, eps=0.01):
    """A deliberately broken Riemann invariant, for detection-power tests."""
    def fn(p):
        return p.u + (1.0 + eps) * law.phi_lifted(p.rho)

    return InvariantSpec(f"corrupt.r[{eps}]", "plus", 0, fn)
