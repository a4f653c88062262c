"""Closed-form solution identities and their Monte Carlo verifiers.

Homogeneous case (alpha = 0): the unique solution from a unit mass has
power moments <mu_t, x^q> = exp(t kappa(q)), and admits the one-particle
("spine") representation

    <mu_t, f> = e^{t kappa(omega)} E[ f(e^{xi_omega(t)}) e^{-omega xi_omega(t)} ]

for any omega in the domain, which is what ``spine_estimator`` samples.

Self-similar case (alpha < 0, Malthusian root omega_plus): the moments of
orders omega_plus - k alpha are explicit polynomials in t
(``t2_moment``), and there is a second, spontaneously generated solution
whose moments are single monomials (``gamma_moment``).  Both families are
laws of the associated self-similar Markov process: started at 1 for the
polynomial family, and from 0+ (entrance law) for the monomial family,
which gives the Monte Carlo cross-checks ``verify_t2`` and
``rescaling_check``.

Tail estimates use an exponentially tilted spine: to estimate the mass
above e^{rt}, the driving process is sampled at the shift theta(r) solving
kappa'(theta) = r, which centres the sampled paths on the dominating point
of the integral; the weighted estimator is unbiased for every shift, the
tilt only controls its variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .branching import SimCaps, empirical_moment, simulate_population
from .errors import (
    HypothesisFailed,
    NotHomogeneous,
    OutsideDomain,
    WrongSign,
)
from .kappa_core import (
    ModelParams,
    clt_profile,
    kappa_value,
    legendre,
    levy_characteristics,
    malthus_roots,
)
from .levy_sim import MCEstimate, estimate_from_samples, sample_endpoints
from .pssmp import endpoint_samples, entrance_samples
from .rng import RngStream


# ---------------------------------------------------------------------------
# declarative test functions (stable to serialise, easy to integrate)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Indicator:
    lo: float
    hi: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return ((x >= self.lo) & (x <= self.hi)).astype(float)

    def power_integral(self, theta: float) -> float:
        """int_lo^hi x^(theta-1) dx, exact."""
        if theta == 0.0:
            return math.log(self.hi / self.lo)
        return (self.hi ** theta - self.lo ** theta) / theta

    def to_json(self) -> dict:
        return {"kind": "indicator", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class ClippedPower:
    """x -> min(x^power, cap); min(x, 1) is ClippedPower(1, 1)."""

    power: float
    cap: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.asarray(x, dtype=float) ** self.power, self.cap)

    def to_json(self) -> dict:
        return {"kind": "clipped_power", "power": self.power, "cap": self.cap}


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def to_json(self) -> dict:
        return {"kind": "constant", "value": self.value}


def test_function_from_json(obj: dict):
    kind = obj.get("kind")
    if kind == "indicator":
        return Indicator(float(obj["lo"]), float(obj["hi"]))
    if kind == "clipped_power":
        return ClippedPower(float(obj["power"]), float(obj["cap"]))
    if kind == "constant":
        return Constant(float(obj.get("value", 1.0)))
    raise ValueError(f"unknown test function kind: {kind!r}")


@dataclass(frozen=True)
class WeightedSample:
    """Discrete representation of a measure: integrate(f) = sum w_i f(x_i)."""

    points: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


# ---------------------------------------------------------------------------
# homogeneous identities
# ---------------------------------------------------------------------------

def homogeneous_mellin(p: ModelParams, q: float, t: float) -> float:
    """<mu_t, x^q> = exp(t kappa(q)) for the homogeneous solution."""
    if p.alpha != 0.0:
        raise NotHomogeneous(f"requires alpha = 0, got {p.alpha}")
    val = kappa_value(p, q)
    if math.isinf(val):
        raise OutsideDomain(f"q = {q} outside the domain of kappa")
    return math.exp(t * val)


def spine_weighted_sample(
    p: ModelParams, omega: float, t: float, n: int, rng: RngStream
) -> WeightedSample:
    """One-particle weighted sample representing mu_t (homogeneous case)."""
    if p.alpha != 0.0:
        raise NotHomogeneous(f"requires alpha = 0, got {p.alpha}")
    chars = levy_characteristics(p, omega, killed=False)
    xi, _ = sample_endpoints(chars, 0.0, t, n, rng)
    log_w = t * kappa_value(p, omega) - omega * xi
    return WeightedSample(points=np.exp(xi), weights=np.exp(log_w) / n)


def spine_estimator(
    p: ModelParams, omega: float, f, t: float, n: int, rng: RngStream
) -> MCEstimate:
    """Monte Carlo <mu_t, f> through the weighted one-particle expectation."""
    ws = spine_weighted_sample(p, omega, t, n, rng)
    return estimate_from_samples(n * ws.weights * f(ws.points))


# ---------------------------------------------------------------------------
# self-similar moment polynomials (alpha < 0)
# ---------------------------------------------------------------------------

def _omega_plus(p: ModelParams) -> float:
    roots = malthus_roots(p)
    if roots.omega_plus is None or roots.degenerate_root:
        raise HypothesisFailed("inf kappa < 0 (Malthusian root) required")
    return roots.omega_plus


def t2_moment(p: ModelParams, k: int, t: float) -> float:
    """<mu_t, x^(omega_plus - k alpha)>: degree-k polynomial in t.

    The coefficient of t^l is the descending product
    kappa(omega_plus - alpha k) ... kappa(omega_plus - alpha (k-l+1)) / l!.
    """
    if p.alpha >= 0.0:
        raise WrongSign(f"requires alpha < 0, got {p.alpha}")
    if k < 0 or k != int(k):
        raise ValueError("k must be a nonnegative integer")
    w = _omega_plus(p)
    out = 1.0
    prod = 1.0
    for ell in range(1, int(k) + 1):
        prod *= kappa_value(p, w - p.alpha * (k - ell + 1))
        out += prod * t ** ell / math.factorial(ell)
    return out


def gamma_moment(p: ModelParams, k: int, t: float) -> float:
    """<gamma_t, x^(omega_plus - k alpha)> for the spontaneously generated
    solution: t^k kappa(omega_plus - alpha) ... kappa(omega_plus - alpha k) / k!."""
    if p.alpha >= 0.0:
        raise WrongSign(f"requires alpha < 0, got {p.alpha}")
    if k < 0 or k != int(k):
        raise ValueError("k must be a nonnegative integer")
    w = _omega_plus(p)
    if k == 0:
        return 1.0
    prod = 1.0
    for j in range(1, int(k) + 1):
        prod *= kappa_value(p, w - p.alpha * j)
    return prod * t ** k / math.factorial(k)


def verify_t2(
    p: ModelParams,
    k_max: int,
    t: float,
    n: int,
    grid_step: float = 1e-3,
    rng: RngStream | None = None,
    x0: float = 1.0,
) -> list[dict]:
    """Compare t2_moment(k, t) with E[X(t)^(-k alpha)] from the simulated
    self-similar process started at x0 = 1, for k = 0..k_max."""
    w = _omega_plus(p)
    samples = endpoint_samples(p, w, x0, [t], n, grid_step, rng)[0]
    rows = []
    for k in range(k_max + 1):
        formula = t2_moment(p, k, t)
        if k == 0:
            est = MCEstimate(mean=1.0, stderr=0.0, n=n)
            z = 0.0
        else:
            est = estimate_from_samples(samples ** (-k * p.alpha))
            z = est.z_against(formula)
        rows.append({
            "k": k, "t": t, "formula": formula,
            "mc_mean": est.mean, "mc_stderr": est.stderr, "n": n, "z": z,
        })
    return rows


def entrance_moment_trend(
    p: ModelParams,
    k: int,
    t: float,
    x_smalls,
    n: int,
    grid_step: float = 1e-3,
    rng: RngStream | None = None,
) -> list[dict]:
    """Entrance-law approximation of <gamma_t, x^(-k alpha)> moments.

    Runs the process from each start in ``x_smalls`` and reports the
    estimate next to the gamma_moment target; the caller checks the
    monotone trend (no convergence rate is known)."""
    target = gamma_moment(p, k, t)
    rows = []
    for i, xs in enumerate(x_smalls):
        samples = entrance_samples(
            p, t, xs, n, grid_step, rng.substream("xsmall", i)
        )
        est = estimate_from_samples(
            samples ** (-k * p.alpha),
            bias_note=f"entrance law approximated from start {xs}",
        )
        rows.append({
            "k": k, "t": t, "x_small": xs, "target": target,
            "mc_mean": est.mean, "mc_stderr": est.stderr, "n": n,
            "z": est.z_against(target),
        })
    return rows


# ---------------------------------------------------------------------------
# rescaling convergence (alpha < 0)
# ---------------------------------------------------------------------------

def rescaling_check(
    p: ModelParams,
    t_list,
    f,
    n: int,
    grid_step: float = 1e-3,
    rng: RngStream | None = None,
    x_small: float = 0.01,
) -> dict:
    """E_1[f(t^(-1/|alpha|) X(t))] across t_list against the entrance target
    E_0[f(X(1))], approximated from a small start."""
    if p.alpha >= 0.0:
        raise WrongSign(f"requires alpha < 0, got {p.alpha}")
    w = _omega_plus(p)
    t_list = sorted(float(t) for t in t_list)

    tgt_samples = entrance_samples(p, 1.0, x_small, n, grid_step, rng.substream("target"))
    target = estimate_from_samples(
        f(tgt_samples), bias_note=f"entrance target from start {x_small}"
    )

    values = endpoint_samples(p, w, 1.0, t_list, n, grid_step, rng.substream("left"))
    rows = []
    for t, vals in zip(t_list, values):
        scale = t ** (-1.0 / abs(p.alpha))
        est = estimate_from_samples(f(scale * vals))
        gap = est.mean - target.mean
        comb = math.hypot(est.stderr, target.stderr)
        rows.append({
            "t": t, "mc_mean": est.mean, "mc_stderr": est.stderr,
            "gap": gap, "combined_stderr": comb,
            "z": gap / comb if comb > 0.0 else 0.0,
        })
    return {
        "target_mean": target.mean,
        "target_stderr": target.stderr,
        "x_small": x_small,
        "n": n,
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# tails and local CLT (homogeneous, unbounded slope)
# ---------------------------------------------------------------------------

def tail_estimate(
    p: ModelParams,
    r: float,
    t: float,
    n: int,
    rng: RngStream,
    tilt: float | None = None,
) -> dict:
    """Importance-sampled t^-1 log of the solution mass above e^{rt}.

    The spine identity gives, for any omega in the domain,
    mass = e^{t kappa(omega)} E[1{xi_omega(t) > rt} e^{-omega xi_omega(t)}];
    sampling at omega = theta(r) puts the mode of the weighted integrand at
    the boundary rt, which is the classical variance-optimal exponential
    tilt.  Reports the normalised log-mass and the analytic limit
    -kappa*(r).
    """
    if p.alpha != 0.0:
        raise NotHomogeneous(f"requires alpha = 0, got {p.alpha}")
    lp = legendre(p, r)  # raises SlopeUnattainable when theta(r) does not exist
    omega = lp.theta if tilt is None else tilt
    chars = levy_characteristics(p, omega, killed=False)
    xi, _ = sample_endpoints(chars, 0.0, t, n, rng)
    w = np.where(xi > r * t, np.exp(t * kappa_value(p, omega) - omega * xi), 0.0)
    est = estimate_from_samples(w, bias_note="finite-t bias of order log(t)/t")
    log_mass = math.log(est.mean) if est.mean > 0.0 else -math.inf
    return {
        "r": r, "t": t, "n": n, "tilt": omega,
        "mass_mean": est.mean, "mass_stderr": est.stderr,
        "normalized_log_tail": log_mass / t,
        "normalized_log_stderr": (est.stderr / est.mean / t) if est.mean > 0.0 else math.inf,
        "target": -lp.kappa_star,
    }


def clt_check(
    p: ModelParams, f: Indicator, t: float, n: int, rng: RngStream
) -> dict:
    """Spine estimate of <mu_t, f> against the saddle-point asymptotics
    e^{t kappa(theta0)} (2 pi t kappa''(theta0))^(-1/2) int f(x) x^(theta0-1) dx."""
    prof = clt_profile(p)
    est = spine_estimator(p, prof.theta0, f, t, n, rng)
    target = (
        math.exp(t * prof.kappa_at_theta0)
        / math.sqrt(2.0 * math.pi * t * prof.kappa_pp)
        * f.power_integral(prof.theta0)
    )
    return {
        "t": t, "n": n, "theta0": prof.theta0,
        "mc_mean": est.mean, "mc_stderr": est.stderr,
        "target": target,
        "ratio": est.mean / target,
    }


# ---------------------------------------------------------------------------
# branching-side moment estimator (homogeneous triangle)
# ---------------------------------------------------------------------------

def branching_moment_estimate(
    p: ModelParams,
    q: float,
    t: float,
    n_runs: int,
    rng: RngStream,
    caps: SimCaps | None = None,
    x0: float = 1.0,
) -> MCEstimate:
    """Mean over runs of sum_i Z_i(t)^q from the particle system."""
    if caps is None:
        caps = SimCaps(max_events=1_000_000, min_size=1e-12, horizon=t)
    vals = np.empty(n_runs)
    for i in range(n_runs):
        trace = simulate_population(p, x0, caps, rng.substream("run", i))
        vals[i] = empirical_moment(trace, t, q)
    return estimate_from_samples(vals)
