"""Cumulant function of a growth-fragmentation model and derived analytics.

The model is the quadruple (a, b, alpha, K): a >= 0 multiplies the second
order (Gaussian) part, b the first order part, alpha is the self-similarity
exponent, and K is a binary dislocation measure on [1/2, 1).  Everything in
this module is driven by the cumulant function

    kappa(q) = a q^2 + (b - a) q
               + int (y^q + (1-y)^q - 1 + q(1-y)) K(dy),       q >= 0,

which is convex, finite exactly where int (1-y)^q K(dy) converges, and always
finite on [2, inf).  Shifting it by omega in its domain,

    Phi_omega(q) = kappa(omega + q) - kappa(omega),

yields the Laplace exponent of a spectrally negative Levy process; when
kappa(omega) < 0 the unshifted kappa(omega + .) is the exponent of the same
process killed at rate -kappa(omega).  ``levy_characteristics`` materialises
that triplet (Gaussian variance 2a, a linear drift, and the log-size jump
measure) in simulable form.

Atoms are handled in closed form; an optional power-law density
C (1-y)^(-beta) on [1/2, 1) is handled by splitting off the exactly
integrable singular factor and integrating the smooth remainder with an
algebraic-weight adaptive quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import (
    DomainTooSmall,
    HypothesisFailed,
    InvalidDislocation,
    KillRateNegative,
    NegativeOrder,
    OutsideDomain,
    PureFragmentationExcluded,
    SlopeUnattainable,
)

ROOT_TOL = 1e-12          # |kappa| at reported roots
DEGENERATE_TOL = 1e-12    # inf kappa within this of 0 counts as a double root
_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
_LOG_HALF = math.log(0.5)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawDensity:
    """Density C * (1-y)^(-beta) on [1/2, 1)."""

    coefficient: float
    beta: float

    def __post_init__(self):
        if not (self.coefficient >= 0.0) or not math.isfinite(self.coefficient):
            raise InvalidDislocation(
                f"density coefficient must be finite and >= 0, got {self.coefficient}"
            )
        if not (self.beta < 3.0):
            raise InvalidDislocation(
                f"density exponent beta must be < 3 for a finite second moment, got {self.beta}"
            )


@dataclass(frozen=True)
class DislocationMeasure:
    """Binary dislocation measure: atoms plus an optional power-law density.

    A dislocation of a mass x by a fraction y in [1/2, 1) produces the pair
    {y x, (1-y) x}.  The second moment int (1-y)^2 K(dy) is finite by
    construction (finitely many atoms; density requires beta < 3); the total
    mass may be infinite (density with beta >= 1).
    """

    atoms: tuple[tuple[float, float], ...] = ()
    density: PowerLawDensity | None = None

    def __post_init__(self):
        atoms = tuple((float(y), float(w)) for y, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        for y, w in atoms:
            if not (0.5 <= y < 1.0):
                raise InvalidDislocation(f"atom location {y} outside [1/2, 1)")
            if not (w > 0.0) or not math.isfinite(w):
                raise InvalidDislocation(f"atom mass {w} must be finite and > 0")

    # -- basic integrals ----------------------------------------------------

    @property
    def has_density(self) -> bool:
        return self.density is not None and self.density.coefficient > 0.0

    def total_mass(self) -> float:
        """|K| = int K(dy); +inf when the density has beta >= 1."""
        m = sum(w for _, w in self.atoms)
        if self.has_density:
            m += self.density.coefficient * _tail_power_integral(-self.density.beta)
        return m

    def first_moment(self) -> float:
        """int (1-y) K(dy); +inf when the density has beta >= 2."""
        m = sum(w * (1.0 - y) for y, w in self.atoms)
        if self.has_density:
            m += self.density.coefficient * _tail_power_integral(1.0 - self.density.beta)
        return m

    def second_moment(self) -> float:
        """int (1-y)^2 K(dy); always finite by the type invariants."""
        m = sum(w * (1.0 - y) ** 2 for y, w in self.atoms)
        if self.has_density:
            m += self.density.coefficient * _tail_power_integral(2.0 - self.density.beta)
        return m

    def finite_below(self) -> float:
        """Infimum of {q : int (1-y)^q K(dy) < inf}; domain of kappa is (., inf)."""
        if self.has_density and self.density.beta >= 1.0:
            return self.density.beta - 1.0
        return 0.0

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"atoms": [[y, w] for y, w in self.atoms]}
        if self.density is not None:
            out["density"] = {"C": self.density.coefficient, "beta": self.density.beta}
        return out

    @staticmethod
    def from_json(obj: dict) -> "DislocationMeasure":
        atoms = tuple((float(y), float(w)) for y, w in obj.get("atoms", []))
        density = None
        if "density" in obj and obj["density"] is not None:
            d = obj["density"]
            density = PowerLawDensity(float(d["C"]), float(d["beta"]))
        return DislocationMeasure(atoms=atoms, density=density)


@dataclass(frozen=True)
class ModelParams:
    """Model quadruple (a, b, alpha, K)."""

    a: float
    b: float
    alpha: float
    K: DislocationMeasure

    def __post_init__(self):
        if not (self.a >= 0.0) or not math.isfinite(self.a):
            raise InvalidDislocation(f"quadratic coefficient a must be >= 0, got {self.a}")
        if not math.isfinite(self.b) or not math.isfinite(self.alpha):
            raise InvalidDislocation("b and alpha must be finite")

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "alpha": self.alpha, "K": self.K.to_json()}

    @staticmethod
    def from_json(obj: dict) -> "ModelParams":
        return ModelParams(
            a=float(obj["a"]),
            b=float(obj["b"]),
            alpha=float(obj["alpha"]),
            K=DislocationMeasure.from_json(obj["K"]),
        )


def load_model(path: str) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        return ModelParams.from_json(json.load(fh))


@dataclass(frozen=True)
class CumulantReport:
    """kappa and its first two derivatives at a single point.

    ``value`` is +inf exactly when int (1-y)^q K(dy) diverges; the
    derivatives are None there and at boundary points of the domain.
    """

    q: float
    value: float
    first_derivative: float | None
    second_derivative: float | None

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "value": _json_float(self.value),
            "first_derivative": _json_float(self.first_derivative),
            "second_derivative": _json_float(self.second_derivative),
        }


def _json_float(x):
    if x is None:
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_model(p: ModelParams) -> ModelParams:
    """Check the model invariants; reject the pure-fragmentation regime.

    For alpha != 0 the combination a = 0, int (1-y) K(dy) < inf and
    b + int (1-y) K(dy) <= 0 makes kappa non-increasing; that regime is a
    classical pure fragmentation and is rejected here.
    """
    # reconstructing re-runs the type invariants
    ModelParams(p.a, p.b, p.alpha, DislocationMeasure(p.K.atoms, p.K.density))
    if p.alpha != 0.0 and p.a == 0.0:
        m1 = p.K.first_moment()
        if math.isfinite(m1) and p.b + m1 <= 0.0:
            raise PureFragmentationExcluded(
                f"alpha={p.alpha} with non-increasing cumulant "
                f"(a=0, b + int(1-y)K = {p.b + m1:.6g} <= 0)"
            )
    return p


# ---------------------------------------------------------------------------
# stable integrand pieces for the density component (u = 1 - y)
# ---------------------------------------------------------------------------

_SERIES_CUT = 1e-4
_SERIES_TERMS = 10


def _binom_signs(q: float, n: int) -> list[float]:
    # c_j = (-1)^j binom(q, j), i.e. (1-u)^q = sum c_j u^j
    c = [1.0]
    for j in range(1, n):
        c.append(-c[-1] * (q - j + 1) / j)
    return c


def _g0(u: float, q: float) -> float:
    # ((1-u)^q - 1 + q u) / u^2, smooth on [0, 1/2]
    if u < _SERIES_CUT:
        c = _binom_signs(q, _SERIES_TERMS)
        return sum(c[j] * u ** (j - 2) for j in range(2, _SERIES_TERMS))
    return (math.expm1(q * math.log1p(-u)) + q * u) / (u * u)


def _g1(u: float, q: float) -> float:
    # ((1-u)^q ln(1-u) + u) / u^2
    if u < _SERIES_CUT:
        c = _binom_signs(q, _SERIES_TERMS)
        out = 0.0
        for m in range(2, _SERIES_TERMS):
            a_m = -sum(c[m - k] / k for k in range(1, m + 1))
            out += a_m * u ** (m - 2)
        return out
    lg = math.log1p(-u)
    return (math.exp(q * lg) * lg + u) / (u * u)


def _g2(u: float, q: float) -> float:
    # (1-u)^q ln(1-u)^2 / u^2; no cancellation, stable in ratio form
    if u <= 0.0:
        return 1.0
    lg = math.log1p(-u)
    r = lg / u
    return math.exp(q * lg) * r * r


def _tail_power_integral(s: float, deriv: int = 0) -> float:
    """int_0^{1/2} u^s du and its derivatives in s; +inf for s <= -1."""
    if s <= -1.0:
        return math.inf
    val = math.exp(_LOG_HALF * (s + 1.0)) / (s + 1.0)
    if deriv == 0:
        return val
    dlog = _LOG_HALF - 1.0 / (s + 1.0)
    if deriv == 1:
        return val * dlog
    return val * (dlog * dlog + 1.0 / (s + 1.0) ** 2)


@lru_cache(maxsize=256)
def _atom_arrays(atoms: tuple[tuple[float, float], ...]):
    y = np.array([a[0] for a in atoms])
    w = np.array([a[1] for a in atoms])
    return y, w, np.log(y), np.log1p(-y), 1.0 - y


def _kappa_eval(p: ModelParams, q: float, order: int = 2):
    """(value, d1, d2); value may be +inf, in which case d1 = d2 = None."""
    if q < 0.0:
        raise NegativeOrder(f"kappa is defined for q >= 0, got q = {q}")
    q = float(q)
    val = p.a * q * q + (p.b - p.a) * q
    d1 = 2.0 * p.a * q + (p.b - p.a)
    d2 = 2.0 * p.a

    if p.K.atoms:
        y, w, ly, l1y, omy = _atom_arrays(p.K.atoms)
        yq = np.exp(q * ly)
        my_q = np.exp(q * l1y)
        val += float(np.dot(w, yq + my_q - 1.0 + q * omy))
        if order >= 1:
            d1 += float(np.dot(w, yq * ly + my_q * l1y + omy))
        if order >= 2:
            d2 += float(np.dot(w, yq * ly * ly + my_q * l1y * l1y))

    if p.K.has_density:
        dens = p.K.density
        C, beta = dens.coefficient, dens.beta
        if q <= beta - 1.0:
            return math.inf, None, None
        wexp = 2.0 - beta  # weight exponent of the smooth part, > -1
        val += C * (_tail_power_integral(q - beta)
                    + _quad_alg(lambda u: _g0(u, q), wexp))
        if order >= 1:
            d1 += C * (_tail_power_integral(q - beta, deriv=1)
                       + _quad_alg(lambda u: _g1(u, q), wexp))
        if order >= 2:
            d2 += C * (_tail_power_integral(q - beta, deriv=2)
                       + _quad_alg(lambda u: _g2(u, q), wexp))
    return val, (d1 if order >= 1 else None), (d2 if order >= 2 else None)


def _quad_alg(f, weight_exponent: float) -> float:
    out, _ = integrate.quad(
        f, 0.0, 0.5, weight="alg", wvar=(weight_exponent, 0.0), **_QUAD_OPTS
    )
    return out


def kappa(p: ModelParams, q: float) -> CumulantReport:
    """Evaluate the cumulant function with exact atom calculus.

    Derivatives come from differentiation under the integral sign; for the
    density part the singular factor is integrated in closed form and the
    smooth remainder by adaptive quadrature with an algebraic weight.
    """
    val, d1, d2 = _kappa_eval(p, q)
    return CumulantReport(q=float(q), value=val, first_derivative=d1, second_derivative=d2)


def kappa_value(p: ModelParams, q: float) -> float:
    return _kappa_eval(p, q, order=0)[0]


def _kappa_d1(p: ModelParams, q: float) -> float:
    v, d1, _ = _kappa_eval(p, q, order=1)
    if d1 is None:
        raise OutsideDomain(f"kappa'({q}) undefined: kappa infinite there")
    return d1


def domain_lower_edge(p: ModelParams) -> float:
    """Infimum of the finiteness domain of kappa (0 unless the density forces more)."""
    return p.K.finite_below()


def drift_d(p: ModelParams) -> float:
    """Support growth speed d = b + int (1-y) K(dy) when a = 0 and that
    integral converges; +inf otherwise.  Equals lim kappa(q)/q."""
    if p.a > 0.0:
        return math.inf
    m1 = p.K.first_moment()
    if not math.isfinite(m1):
        return math.inf
    return p.b + m1


# ---------------------------------------------------------------------------
# convex machinery: argmin, roots, Legendre transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MalthusRoots:
    omega_minus: float | None
    omega_plus: float | None
    inf_value: float
    argmin: float
    degenerate_root: bool = False

    def to_json(self) -> dict:
        return {
            "omega_minus": self.omega_minus,
            "omega_plus": self.omega_plus,
            "inf_value": _json_float(self.inf_value),
            "argmin": _json_float(self.argmin),
            "degenerate_root": self.degenerate_root,
        }


def _argmin_kappa(p: ModelParams) -> tuple[float, float]:
    """(argmin, inf value) of the convex kappa over its domain."""
    lo_edge = domain_lower_edge(p)
    open_left = p.K.has_density and p.K.density.beta >= 1.0

    # left evaluation point just inside the domain
    q_left = lo_edge + 1e-9 if open_left else lo_edge

    # find a finite slope probe
    step = 1.0
    q_hi = max(q_left + step, 2.0)
    guard = 0
    while _kappa_d1(p, q_hi) < 0.0:
        q_hi = q_left + 2.0 * (q_hi - q_left)
        guard += 1
        if guard > 200 or q_hi > 1e9:
            # non-increasing kappa (possible only for alpha = 0 models)
            d = drift_d(p)
            inf_val = -math.inf if d < 0.0 else kappa_limit_nonincreasing(p)
            return math.inf, inf_val
    if not open_left and _kappa_d1(p, q_left) >= 0.0:
        return q_left, kappa_value(p, q_left)

    # golden-section bracket [q_left, q_hi] down to a small width, then
    # polish with Newton on kappa'
    a, b = q_left, q_hi
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc, fd = kappa_value(p, c), kappa_value(p, d_)
    for _ in range(200):
        if b - a < 1e-8:
            break
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - invphi * (b - a)
            fc = kappa_value(p, c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + invphi * (b - a)
            fd = kappa_value(p, d_)
    x = 0.5 * (a + b)
    for _ in range(60):
        v, d1, d2 = _kappa_eval(p, x)
        if d2 is None or d2 <= 0.0:
            break
        nx = x - d1 / d2
        if not (q_left < nx < q_hi):
            break
        if abs(nx - x) < 1e-14 * max(1.0, abs(x)):
            x = nx
            break
        x = nx
    return x, kappa_value(p, x)


def kappa_limit_nonincreasing(p: ModelParams) -> float:
    # with a = 0 and d = 0: kappa decreases to b*0 ... the atom/density power
    # terms vanish at infinity, so the limit is -|K| + lim q*d = -|K|
    return -p.K.total_mass()


def _bisect_newton(p: ModelParams, lo: float, hi: float, f_lo: float, f_hi: float) -> float:
    """Root of kappa on a bracket [lo, hi] with kappa(lo)*kappa(hi) < 0.

    Bisection to width 1e-6 (certain, by convexity), then Newton polish with
    the analytic derivative; falls back to more bisection when Newton leaves
    the bracket.
    """
    assert f_lo * f_hi <= 0.0
    for _ in range(200):
        if hi - lo < 1e-6:
            break
        mid = 0.5 * (lo + hi)
        fm = kappa_value(p, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
    x = 0.5 * (lo + hi)
    for _ in range(100):
        v, d1, _ = _kappa_eval(p, x, order=1)
        if abs(v) <= ROOT_TOL:
            return x
        if d1 is None or d1 == 0.0:
            break
        nx = x - v / d1
        if not (lo - 1e-6 <= nx <= hi + 1e-6):
            nx = 0.5 * (lo + hi)
        x = nx
    if abs(kappa_value(p, x)) > 10 * ROOT_TOL:
        raise DomainTooSmall(f"root polish failed near q = {x}")
    return x


def malthus_roots(p: ModelParams) -> MalthusRoots:
    """Roots of kappa and its infimum.

    When inf kappa < 0 there is a unique root with positive slope
    (the Malthusian exponent omega_plus) and, when kappa is positive near the
    left edge of its domain, a second root omega_minus below the argmin.  An
    infimum equal to zero (within tolerance) is reported as a degenerate
    double root.
    """
    validate_model(p)
    argmin, inf_val = _argmin_kappa(p)

    if not math.isfinite(argmin):
        return MalthusRoots(None, None, inf_value=inf_val, argmin=argmin)

    if abs(inf_val) <= DEGENERATE_TOL:
        return MalthusRoots(argmin, argmin, inf_value=inf_val, argmin=argmin,
                            degenerate_root=True)
    if inf_val > 0.0:
        return MalthusRoots(None, None, inf_value=inf_val, argmin=argmin)

    # omega_plus: bracket by doubling to the right of the argmin
    hi = argmin + 1.0
    f_hi = kappa_value(p, hi)
    guard = 0
    while f_hi <= 0.0:
        hi = argmin + 2.0 * (hi - argmin)
        f_hi = kappa_value(p, hi)
        guard += 1
        if guard > 200:
            raise DomainTooSmall("could not bracket omega_plus")
    omega_plus = _bisect_newton(p, argmin, hi, inf_val, f_hi)

    # omega_minus: only when kappa is positive somewhere left of the argmin
    lo_edge = domain_lower_edge(p)
    open_left = p.K.has_density and p.K.density.beta >= 1.0
    omega_minus = None
    if not open_left:
        f_edge = kappa_value(p, lo_edge)
        if f_edge == 0.0:
            omega_minus = lo_edge
        elif f_edge > 0.0:
            omega_minus = _bisect_newton(p, lo_edge, argmin, f_edge, inf_val)
    else:
        # kappa -> +inf at the open left edge, so a bracket always exists
        lo = argmin
        width = 0.5 * (argmin - lo_edge)
        guard = 0
        f_lo = inf_val
        while f_lo <= 0.0:
            lo = argmin - width
            width *= 0.5
            if lo <= lo_edge or guard > 500:
                raise DomainTooSmall("could not bracket omega_minus near the domain edge")
            f_lo = kappa_value(p, lo)
            guard += 1
        omega_minus = _bisect_newton(p, lo, argmin, f_lo, inf_val)

    return MalthusRoots(omega_minus, omega_plus, inf_value=inf_val, argmin=argmin)


@dataclass(frozen=True)
class LegendrePoint:
    theta: float
    kappa_star: float

    def to_json(self) -> dict:
        return {"theta": self.theta, "kappa_star": self.kappa_star}


def legendre(p: ModelParams, r: float) -> LegendrePoint:
    """Solve kappa'(theta) = r and return the Legendre transform
    kappa*(r) = r theta - kappa(theta)."""
    lo_edge = domain_lower_edge(p)
    open_left = p.K.has_density and p.K.density.beta >= 1.0

    # attainable slope range
    if p.a == 0.0 and math.isfinite(p.K.first_moment()):
        slope_sup = drift_d(p)
        if r >= slope_sup:
            raise SlopeUnattainable(
                f"r = {r} is not below the limiting slope d = {slope_sup:.6g}"
            )
    q_left = lo_edge + 1e-9 if open_left else lo_edge
    if not open_left:
        slope_inf = _kappa_d1(p, q_left)
        if r < slope_inf:
            raise SlopeUnattainable(
                f"r = {r} is below kappa'({q_left:.6g}) = {slope_inf:.6g}"
            )
        if r == slope_inf:
            return LegendrePoint(q_left, r * q_left - kappa_value(p, q_left))

    # bracket kappa'(q) = r by doubling
    lo, hi = q_left, max(q_left + 1.0, 2.0)
    guard = 0
    while _kappa_d1(p, hi) < r:
        lo = hi
        hi = q_left + 2.0 * (hi - q_left)
        guard += 1
        if guard > 200:
            raise SlopeUnattainable(f"kappa' never reaches r = {r}")
    # shrink lo upward until slope below r (open-left case starts at -inf slope)
    while _kappa_d1(p, lo) > r:
        step = 0.5 * (lo - q_left)
        if step <= 0.0:
            break
        lo = q_left + step

    x = 0.5 * (lo + hi)
    f_lo = _kappa_d1(p, lo) - r
    for _ in range(200):
        if hi - lo < 1e-6:
            break
        mid = 0.5 * (lo + hi)
        fm = _kappa_d1(p, mid) - r
        if (fm < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(100):
        v, d1, d2 = _kappa_eval(p, x)
        g = d1 - r
        if abs(g) <= 1e-12 * max(1.0, abs(r)):
            break
        if d2 is None or d2 == 0.0:
            break
        x = min(max(x - g / d2, lo - 1e-6), hi + 1e-6)
    return LegendrePoint(theta=x, kappa_star=r * x - kappa_value(p, x))


@dataclass(frozen=True)
class CltProfile:
    theta0: float
    kappa_at_theta0: float
    kappa_pp: float

    def to_json(self) -> dict:
        return {
            "theta0": self.theta0,
            "kappa_at_theta0": self.kappa_at_theta0,
            "kappa_pp": self.kappa_pp,
        }


def clt_profile(p: ModelParams) -> CltProfile:
    """Saddle point data (theta0, kappa(theta0), kappa''(theta0)) for the
    local-central-limit asymptotics of exponentially growing models."""
    cond = p.a > 0.0 or not math.isfinite(p.K.first_moment())
    if not cond:
        raise HypothesisFailed(
            "requires a > 0 or an infinite first dislocation moment "
            "(otherwise the slope of kappa is bounded)"
        )
    argmin, _ = _argmin_kappa(p)
    if not math.isfinite(argmin):
        raise HypothesisFailed("kappa' never becomes positive")
    lo_edge = domain_lower_edge(p)
    open_left = p.K.has_density and p.K.density.beta >= 1.0
    if not open_left and argmin <= lo_edge + 1e-12:
        raise HypothesisFailed("kappa' is nonnegative on the whole domain")
    v, d1, d2 = _kappa_eval(p, argmin)
    return CltProfile(theta0=argmin, kappa_at_theta0=v, kappa_pp=d2)


# ---------------------------------------------------------------------------
# Levy characteristics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityJumpComponent:
    """Epsilon-truncated jump part contributed by the power-law density.

    Log-jumps x = ln y with |x| < eps are dropped; the (1-y)-side jumps
    x = ln(1-y) <= -ln 2 are never in the truncation window.  The dropped
    first moment is restored through the characteristics' truncation drift.
    """

    coefficient: float
    beta: float
    omega: float
    eps: float
    y_side_rate: float
    one_minus_side_rate: float

    @property
    def rate(self) -> float:
        return self.y_side_rate + self.one_minus_side_rate

    def _s(self) -> float:
        return self.omega - self.beta + 1.0

    def phi(self, q) -> float:
        """int (e^{q x} - 1) over the retained jump measure."""
        q = np.asarray(q, dtype=float)
        s = self._s()
        one_minus = self.coefficient * (
            np.exp(_LOG_HALF * (s + q)) / (s + q) - 0.5 ** s / s
        )
        u_eps = -math.expm1(-self.eps)

        def f(u, qq):
            return ((1.0 - u) ** qq - 1.0) * (1.0 - u) ** self.omega * u ** (-self.beta)

        if q.ndim == 0:
            y_side, _ = integrate.quad(lambda u: f(u, float(q)), u_eps, 0.5, **_QUAD_OPTS)
            return float(one_minus + self.coefficient * y_side)
        out = np.empty(q.shape)
        for i, qq in np.ndenumerate(q):
            y_side, _ = integrate.quad(lambda u: f(u, qq), u_eps, 0.5, **_QUAD_OPTS)
            out[i] = one_minus[i] + self.coefficient * y_side
        return out

    def mean_jump_integral(self) -> float:
        """int x over the retained jump measure."""
        s = self._s()
        one_minus = -self.coefficient * 0.5 ** s * (math.log(2.0) / s + 1.0 / (s * s))
        u_eps = -math.expm1(-self.eps)
        y_side, _ = integrate.quad(
            lambda u: math.log1p(-u) * (1.0 - u) ** self.omega * u ** (-self.beta),
            u_eps, 0.5, **_QUAD_OPTS,
        )
        return one_minus + self.coefficient * y_side

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        """Draw n retained log-jump sizes (exact inverse-CDF / rejection)."""
        s = self._s()
        out = np.empty(n)
        pick_one_minus = gen.random(n) * self.rate < self.one_minus_side_rate
        n1 = int(pick_one_minus.sum())
        # (1-y) side: density prop. to e^{s x} on (-inf, -ln 2]
        out[pick_one_minus] = -math.log(2.0) + np.log(gen.random(n1)) / s
        # y side: u = 1-y on [u_eps, 1/2], proposal prop. to u^{-beta},
        # accepted with probability (1-u)^omega
        need = np.flatnonzero(~pick_one_minus)
        u_eps = -math.expm1(-self.eps)
        while need.size:
            v = gen.random(need.size)
            if self.beta == 1.0:
                u = u_eps * (0.5 / u_eps) ** v
            else:
                e = 1.0 - self.beta
                u = (u_eps ** e + v * (0.5 ** e - u_eps ** e)) ** (1.0 / e)
            acc = gen.random(need.size) < (1.0 - u) ** self.omega
            out[need[acc]] = np.log1p(-u[acc])
            need = need[~acc]
        return out


@dataclass(frozen=True)
class LevyCharacteristics:
    """Triplet of a (possibly killed) spectrally negative Levy process.

    The Laplace exponent with the kill term included equals
    kappa(omega + q) - kappa(omega) - killing_rate which, for a killed
    process (killing_rate = -kappa(omega)), is kappa(omega + q).
    """

    gaussian_variance: float
    linear_drift: float
    jump_table: tuple[tuple[float, float], ...]
    truncation_drift: float = 0.0
    killing_rate: float = 0.0
    density_jumps: DensityJumpComponent | None = None

    @property
    def total_drift(self) -> float:
        return self.linear_drift + self.truncation_drift

    @property
    def total_jump_rate(self) -> float:
        rate = sum(r for _, r in self.jump_table)
        if self.density_jumps is not None:
            rate += self.density_jumps.rate
        return rate

    def laplace_exponent(self, q, include_kill: bool = True):
        """Evaluate the Laplace exponent from the stored fields."""
        q = np.asarray(q, dtype=float)
        out = self.total_drift * q + 0.5 * self.gaussian_variance * q * q
        for size, rate in self.jump_table:
            out = out + rate * np.expm1(q * size)
        if self.density_jumps is not None:
            out = out + self.density_jumps.phi(q)
        if include_kill:
            out = out - self.killing_rate
        return float(out) if out.ndim == 0 else out

    def sample_jump_sizes(self, n: int, gen: np.random.Generator) -> np.ndarray:
        rates = np.array([r for _, r in self.jump_table], dtype=float)
        sizes = np.array([s for s, _ in self.jump_table], dtype=float)
        dens_rate = self.density_jumps.rate if self.density_jumps is not None else 0.0
        total = rates.sum() + dens_rate
        if total <= 0.0:
            raise ValueError("no jump component to sample from")
        u = gen.random(n) * total
        out = np.empty(n)
        cum = np.concatenate([np.cumsum(rates), [total]])
        idx = np.searchsorted(cum, u, side="right")
        from_table = idx < len(sizes)
        out[from_table] = sizes[idx[from_table]]
        n_dens = int((~from_table).sum())
        if n_dens:
            out[~from_table] = self.density_jumps.sample(n_dens, gen)
        return out

    def to_json(self) -> dict:
        out = {
            "gaussian_variance": self.gaussian_variance,
            "linear_drift": self.linear_drift,
            "jump_table": [[s, r] for s, r in self.jump_table],
            "truncation_drift": self.truncation_drift,
            "killing_rate": self.killing_rate,
        }
        if self.density_jumps is not None:
            d = self.density_jumps
            out["density_jumps"] = {
                "C": d.coefficient, "beta": d.beta, "omega": d.omega, "eps": d.eps,
                "y_side_rate": d.y_side_rate, "one_minus_side_rate": d.one_minus_side_rate,
            }
        return out


def levy_characteristics(
    p: ModelParams, omega: float, killed: bool = False, eps: float = 1e-4
) -> LevyCharacteristics:
    """Simulable triplet of the omega-shifted Levy process.

    Finite-activity dislocation atoms (y, w) contribute jump-rate pairs
    (ln y, w y^omega) and (ln(1-y), w (1-y)^omega); the drift is
    b - a + 2 a omega + int (1-y) K(dy).  A density component is
    eps-truncated (log-jumps smaller than eps dropped) with first-moment
    compensation folded into ``truncation_drift`` so that the mean of the
    simulated process matches kappa'(omega) exactly.
    """
    val, d1, _ = _kappa_eval(p, omega, order=1)
    if not math.isfinite(val):
        raise OutsideDomain(f"omega = {omega} is outside the domain of kappa")
    killing_rate = 0.0
    if killed:
        if val > ROOT_TOL:
            raise KillRateNegative(
                f"killed process needs kappa(omega) <= 0, got {val:.6g}"
            )
        killing_rate = max(-val, 0.0)

    entries: dict[float, float] = {}
    for y, w in p.K.atoms:
        for size, rate in ((math.log(y), w * y ** omega),
                           (math.log1p(-y), w * (1.0 - y) ** omega)):
            entries[size] = entries.get(size, 0.0) + rate
    jump_table = sorted(entries.items())

    density_jumps = None
    linear_drift = p.b - p.a + 2.0 * p.a * omega
    truncation_drift = 0.0
    m1 = p.K.first_moment()
    if p.K.has_density:
        dens = p.K.density
        C, beta = dens.coefficient, dens.beta
        s = omega - beta + 1.0
        u_eps = -math.expm1(-eps)
        one_minus_rate = C * 0.5 ** s / s
        y_rate, _ = integrate.quad(
            lambda u: (1.0 - u) ** omega * u ** (-beta), u_eps, 0.5, **_QUAD_OPTS
        )
        density_jumps = DensityJumpComponent(
            coefficient=C, beta=beta, omega=omega, eps=eps,
            y_side_rate=C * y_rate, one_minus_side_rate=one_minus_rate,
        )
        retained_mean = (
            sum(r * x for x, r in jump_table) + density_jumps.mean_jump_integral()
        )
        if math.isfinite(m1):
            linear_drift += m1
        else:
            linear_drift = 0.0
        truncation_drift = (d1 - retained_mean) - linear_drift
    else:
        linear_drift += m1

    return LevyCharacteristics(
        gaussian_variance=2.0 * p.a,
        linear_drift=linear_drift,
        jump_table=tuple(jump_table),
        truncation_drift=truncation_drift,
        killing_rate=killing_rate,
        density_jumps=density_jumps,
    )
