"""Lamperti time change: Levy paths to positive self-similar Markov processes.

For a driving path xi started at ln x0 and self-similarity exponent alpha,
the additive functional A(s) = int_0^s exp(-alpha xi(u)) du is strictly
increasing and continuous; its inverse S turns xi into the index -alpha
process X(t) = exp(xi(S(t))).  A is computed by trapezoid panels that are
split exactly at jump instants (the integrand uses left limits up to the
jump), and inverted piecewise-linearly, so the only error is quadrature of
order grid_step^2 between sample points.

Killed driving paths absorb X at time A(zeta): at +infinity for alpha > 0
(the process leaves by a jump) and at 0 for alpha <= 0.  Saturation of A
(the integrand collapsing because xi drifts away) is detected and reported
with the same state convention.

Batch samplers used by the verification suites vectorise the
pure-diffusion case across replicas and fall back to per-path simulation
when the driving process has jumps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisFailed, NotAbsorbed, OutsideDomain, WrongSign
from .kappa_core import (
    LevyCharacteristics,
    ModelParams,
    kappa_value,
    levy_characteristics,
    malthus_roots,
    validate_model,
)
from .levy_sim import (
    LevyPath,
    sample_endpoints as levy_sample_endpoints,
    sample_exp_time_integrals,
    sample_running_max,
    simulate_levy,
)
from .rng import RngStream

_KILL_TOL = 1e-12
_BATCH = 2048
_CHUNK_STEPS = 2048


@dataclass(frozen=True)
class Absorption:
    time: float
    state: str  # "zero" | "infinity"


@dataclass(frozen=True)
class PssmpPath:
    """X sampled on the covered prefix of the requested time grid."""

    times: np.ndarray
    values: np.ndarray
    absorbed: Absorption | None = None

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "X", "absorbed"])
            for t, v in zip(self.times, self.values):
                writer.writerow([repr(float(t)), repr(float(v)), ""])
            if self.absorbed is not None:
                writer.writerow([repr(self.absorbed.time), "", self.absorbed.state])


def _lamperti_panels(levy: LevyPath, alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A at path times, integrand left values, integrand right-limit values)."""
    f_left_of_panel = np.exp(-alpha * levy.values[:-1])
    f_right_of_panel = np.exp(-alpha * levy.left_values()[1:])
    dt = np.diff(levy.times)
    panels = 0.5 * (f_left_of_panel + f_right_of_panel) * dt
    a = np.concatenate([[0.0], np.cumsum(panels)])
    return a, f_left_of_panel, f_right_of_panel


def lamperti_forward(levy: LevyPath, alpha: float, t_grid) -> PssmpPath:
    """Time-change a Levy path into the index -alpha self-similar process.

    Returns values on the part of ``t_grid`` covered by the path; absorption
    (from killing) is data, not an error.  Grid points beyond the covered
    range of an unkilled path are simply not returned -- the caller decides
    whether to extend the driving path.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")

    if alpha == 0.0:
        covered = t_grid <= levy.times[-1] * (1.0 + 1e-15)
        t_cov = t_grid[covered]
        vals = np.exp(np.interp(t_cov, levy.times, levy.values))
        absorbed = None
        if levy.kill_time is not None:
            absorbed = Absorption(time=float(levy.kill_time), state="zero")
        return PssmpPath(times=t_cov, values=vals, absorbed=absorbed)

    a, f_left, f_right = _lamperti_panels(levy, alpha)
    a_end = a[-1]
    absorbed = None
    if levy.kill_time is not None:
        absorbed = Absorption(
            time=float(a_end), state="infinity" if alpha > 0.0 else "zero"
        )

    covered = t_grid <= a_end * (1.0 + 1e-15)
    t_cov = np.minimum(t_grid[covered], a_end)
    k = np.searchsorted(a, t_cov, side="right") - 1
    k = np.clip(k, 0, len(a) - 2)
    da = a[k + 1] - a[k]
    frac = np.where(da > 0.0, (t_cov - a[k]) / np.where(da > 0.0, da, 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    xi_left = levy.values[k]
    xi_right = levy.left_values()[k + 1]
    vals = np.exp(xi_left + frac * (xi_right - xi_left))
    return PssmpPath(times=t_grid[covered], values=vals, absorbed=absorbed)


def _auto_characteristics(p: ModelParams, omega: float) -> LevyCharacteristics:
    val = kappa_value(p, omega)
    if math.isinf(val):
        raise OutsideDomain(f"omega = {omega} outside the domain of kappa")
    killed = val < -_KILL_TOL
    return levy_characteristics(p, omega, killed=killed)


def simulate_pssmp(
    p: ModelParams,
    omega: float,
    x0: float,
    t_grid,
    grid_step: float = 1e-3,
    rng: RngStream | None = None,
) -> PssmpPath:
    """Simulate X on ``t_grid`` from X(0) = x0.

    The driving process is the omega-shifted Levy process, killed
    automatically when kappa(omega) < 0.  The Levy horizon is extended by
    doubling (continuing the same path, so no selection bias) until the
    requested grid is covered or the path is absorbed.
    """
    if rng is None:
        raise ValueError("an RngStream is required")
    if x0 <= 0.0:
        raise ValueError("x0 must be positive")
    validate_model(p)
    chars = _auto_characteristics(p, omega)
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    target = float(t_grid[-1])
    x0_log = math.log(x0)

    levy, saturated = _grow_levy_until(chars, x0_log, grid_step, rng, p.alpha, target)
    out = lamperti_forward(levy, p.alpha, t_grid)
    if saturated and out.absorbed is None:
        a_end = _lamperti_panels(levy, p.alpha)[0][-1]
        out = PssmpPath(
            times=out.times,
            values=out.values,
            absorbed=Absorption(
                time=float(a_end), state="infinity" if p.alpha > 0.0 else "zero"
            ),
        )
    return out


def _grow_levy_until(
    chars: LevyCharacteristics,
    x0_log: float,
    grid_step: float,
    rng: RngStream,
    alpha: float,
    target_a: float,
    max_chunks: int = 40,
) -> tuple[LevyPath, bool]:
    """Concatenate path chunks until the Lamperti functional covers target_a.

    Chunk k draws from substream ("chunk", k), so a longer simulation is a
    bit-exact extension of a shorter one.  Kill is drawn once up front.
    Returns (path, saturated): saturated means the functional stopped
    growing before reaching the target (the integrand collapsed).
    """
    kill_time = None
    if chars.killing_rate > 0.0:
        kill_time = float(
            rng.substream("kill").generator().exponential(1.0 / chars.killing_rate)
        )

    pieces: list[LevyPath] = []
    t0 = 0.0
    v0 = x0_log
    a_total = 0.0
    saturated = False
    horizon = max(1.0, 16.0 * grid_step)
    for k in range(max_chunks):
        end = t0 + horizon
        if (end - t0) / grid_step > 2e7:
            raise RuntimeError(
                "driving-path horizon exploded before the time change covered "
                "the grid; the requested times are likely unreachable"
            )
        chunk_kill = None
        if kill_time is not None and kill_time <= end:
            end = kill_time
            chunk_kill = kill_time
        # strip the kill from the chunk characteristics; kill handled here
        chunk = simulate_levy(
            LevyCharacteristics(
                gaussian_variance=chars.gaussian_variance,
                linear_drift=chars.linear_drift,
                jump_table=chars.jump_table,
                truncation_drift=chars.truncation_drift,
                killing_rate=0.0,
                density_jumps=chars.density_jumps,
            ),
            0.0,
            end - t0,
            grid_step,
            rng.substream("chunk", k),
        )
        piece = LevyPath(
            times=chunk.times + t0,
            values=chunk.values + v0,
            jump_flags=chunk.jump_flags,
            jump_sizes=chunk.jump_sizes,
            kill_time=chunk_kill,
        )
        pieces.append(piece)
        a_piece, _, _ = _lamperti_panels(piece, alpha)
        a_total += a_piece[-1]
        t0 = float(piece.times[-1])
        v0 = float(piece.values[-1])
        if chunk_kill is not None or (alpha == 0.0 and t0 >= target_a):
            break
        if alpha != 0.0 and a_total >= target_a:
            break
        if alpha != 0.0 and a_piece[-1] < 1e-12 * max(a_total, 1.0):
            saturated = True  # the integrand has collapsed
            break
        horizon *= 2.0
    else:
        saturated = True
    return _concat_paths(pieces), saturated


def _concat_paths(pieces: list[LevyPath]) -> LevyPath:
    if len(pieces) == 1:
        return pieces[0]
    times = [pieces[0].times]
    values = [pieces[0].values]
    flags = [pieces[0].jump_flags]
    sizes = [pieces[0].jump_sizes]
    for piece in pieces[1:]:
        times.append(piece.times[1:])
        values.append(piece.values[1:])
        flags.append(piece.jump_flags[1:])
        sizes.append(piece.jump_sizes[1:])
    return LevyPath(
        times=np.concatenate(times),
        values=np.concatenate(values),
        jump_flags=np.concatenate(flags),
        jump_sizes=np.concatenate(sizes),
        kill_time=pieces[-1].kill_time,
    )


# ---------------------------------------------------------------------------
# path functionals
# ---------------------------------------------------------------------------

def path_sup(path: PssmpPath) -> float:
    """Supremum of the sampled values (jump instants are grid points)."""
    return float(np.max(path.values))


def path_power_integral(path: PssmpPath, power: float) -> float:
    """Trapezoid integral of X^power up to absorption."""
    if path.absorbed is None:
        raise NotAbsorbed("the lifetime integral needs an absorbed path")
    f = path.values ** power
    out = float(np.trapezoid(f, path.times)) if len(path.times) > 1 else 0.0
    tail = path.absorbed.time - float(path.times[-1])
    if tail > 0.0:
        out += float(f[-1]) * tail
    return out


# ---------------------------------------------------------------------------
# vectorised samplers (diffusion fast path, general fallback)
# ---------------------------------------------------------------------------

def endpoint_samples(
    p: ModelParams,
    omega: float,
    x0: float,
    t_points,
    n: int,
    grid_step: float = 1e-3,
    rng: RngStream | None = None,
) -> np.ndarray:
    """X(t) samples, shape (len(t_points), n), for an unkilled driving process.

    Pure-diffusion characteristics use a chunked vectorised engine; jumpy
    ones fall back to per-path simulation.
    """
    if rng is None:
        raise ValueError("an RngStream is required")
    validate_model(p)
    chars = _auto_characteristics(p, omega)
    if chars.killing_rate > 0.0:
        raise HypothesisFailed(
            "endpoint_samples expects an unkilled driving process "
            "(kappa(omega) = 0); use simulate_pssmp for killed paths"
        )
    t_points = np.atleast_1d(np.asarray(t_points, dtype=float))
    if np.any(np.diff(t_points) <= 0.0) or np.any(t_points <= 0.0):
        raise ValueError("t_points must be positive and strictly increasing")

    if p.alpha == 0.0:
        # identity time change: X(t) = exp(xi(t)) exactly, no grid needed
        out = np.empty((t_points.size, n))
        for j, t in enumerate(t_points):
            vals, _ = levy_sample_endpoints(
                chars, math.log(x0), float(t), n, rng.substream("t", j)
            )
            out[j] = np.exp(vals)
        return out

    if chars.total_jump_rate == 0.0:
        out = np.empty((t_points.size, n))
        for start in range(0, n, _BATCH):
            m = min(_BATCH, n - start)
            out[:, start:start + m] = _endpoint_batch_diffusion(
                chars, math.log(x0), p.alpha, t_points, m,
                grid_step, rng.substream("batch", start).generator(),
            )
        return out

    out = np.empty((t_points.size, n))
    for i in range(n):
        path = simulate_pssmp(p, omega, x0, t_points, grid_step, rng.substream("path", i))
        if path.times.size != t_points.size:
            raise RuntimeError("driving path not extendable to cover the grid")
        out[:, i] = path.values
    return out


def _endpoint_batch_diffusion(
    chars: LevyCharacteristics,
    x0_log: float,
    alpha: float,
    t_points: np.ndarray,
    n: int,
    h: float,
    gen: np.random.Generator,
    max_chunks: int = 5000,
) -> np.ndarray:
    mu = chars.total_drift
    sigma = math.sqrt(chars.gaussian_variance)
    n_t = t_points.size
    out = np.full((n_t, n), np.nan)
    xi = np.full(n, x0_log)
    a_cur = np.zeros(n)
    pending = np.zeros(n, dtype=int)  # index of next target time

    for _ in range(max_chunks):
        idx = np.flatnonzero(pending < n_t)
        if idx.size == 0:
            return out
        m = idx.size
        z = gen.standard_normal((m, _CHUNK_STEPS))
        vals = xi[idx, None] + np.cumsum(mu * h + sigma * math.sqrt(h) * z, axis=1)
        vals = np.concatenate([xi[idx, None], vals], axis=1)
        f = np.exp(-alpha * vals)
        a_grid = a_cur[idx, None] + np.concatenate(
            [np.zeros((m, 1)), np.cumsum(0.5 * (f[:, :-1] + f[:, 1:]) * h, axis=1)],
            axis=1,
        )
        for _ in range(n_t):
            rows = np.flatnonzero(pending[idx] < n_t)
            if rows.size == 0:
                break
            targets = t_points[pending[idx[rows]]]
            reached = a_grid[rows, -1] >= targets
            rows = rows[reached]
            if rows.size == 0:
                break
            targets = t_points[pending[idx[rows]]]
            k = (a_grid[rows] < targets[:, None]).sum(axis=1) - 1
            k = np.clip(k, 0, _CHUNK_STEPS - 1)
            da = a_grid[rows, k + 1] - a_grid[rows, k]
            frac = np.where(da > 0.0, (targets - a_grid[rows, k]) / np.where(da > 0.0, da, 1.0), 0.0)
            xi_t = vals[rows, k] + np.clip(frac, 0.0, 1.0) * (vals[rows, k + 1] - vals[rows, k])
            out[pending[idx[rows]], idx[rows]] = np.exp(xi_t)
            pending[idx[rows]] += 1
        xi[idx] = vals[:, -1]
        a_cur[idx] = a_grid[:, -1]
    raise RuntimeError("Lamperti functional failed to cover the requested times")


# ---------------------------------------------------------------------------
# entrance approximations and killed-path laws
# ---------------------------------------------------------------------------

def _entrance_omega(p: ModelParams, omega: float | None) -> float:
    roots = malthus_roots(p)
    if p.alpha < 0.0:
        if omega is not None:
            return omega
        if roots.omega_plus is None:
            raise HypothesisFailed("entrance from 0 needs the Malthusian root omega_plus")
        return roots.omega_plus
    if p.alpha > 0.0:
        if omega is not None:
            return omega
        if roots.omega_minus is None or roots.omega_plus is None or roots.degenerate_root:
            raise HypothesisFailed(
                "entrance from infinity needs two distinct roots of kappa"
            )
        return roots.omega_minus
    raise WrongSign("entrance laws are only defined for alpha != 0")


def entrance_samples(
    p: ModelParams,
    t,
    x_small: float,
    n: int,
    grid_step: float = 1e-3,
    rng: RngStream | None = None,
    omega: float | None = None,
) -> np.ndarray:
    """Samples of the entrance-law approximation at time(s) t.

    alpha < 0: the process started at x_small approximates entrance from 0;
    alpha > 0: the process started at 1/x_small approximates entrance from
    infinity.  The caller drives x_small downward and checks the trend; no
    convergence rate is claimed.  A list of times shares driving paths and
    returns a (len(t), n) array.
    """
    if not (0.0 < x_small < 1.0):
        raise ValueError("x_small must lie in (0, 1)")
    w = _entrance_omega(p, omega)
    x0 = x_small if p.alpha < 0.0 else 1.0 / x_small
    scalar = np.isscalar(t)
    t_points = [float(t)] if scalar else list(t)
    out = endpoint_samples(p, w, x0, t_points, n, grid_step, rng)
    return out[0] if scalar else out


def entrance_sample(
    p: ModelParams,
    t: float,
    x_small: float,
    rng: RngStream,
    grid_step: float = 1e-3,
    omega: float | None = None,
) -> float:
    return float(entrance_samples(p, t, x_small, 1, grid_step, rng, omega)[0])


def killed_sup_samples(
    p: ModelParams, omega: float, n: int, rng: RngStream
) -> np.ndarray:
    """Exact samples of sup X over the lifetime of the killed process.

    The supremum is invariant under the Lamperti time change, so it is drawn
    on the Levy side from segment-wise Brownian-bridge maxima: no grid bias.
    """
    chars = levy_characteristics(p, omega, killed=True)
    if chars.killing_rate <= 0.0:
        raise NotAbsorbed("kappa(omega) = 0: the process is not killed")
    return np.exp(sample_running_max(chars, n, rng, horizon=None))


def killed_power_integral_samples(
    p: ModelParams,
    omega: float,
    power: float,
    n: int,
    rng: RngStream,
    grid_step: float = 1e-3,
) -> np.ndarray:
    """Samples of int_0^absorption X(u)^power du for the killed process.

    Uses the time-change identity: the integral equals
    int_0^zeta e^{(power - alpha) xi(s)} ds on the Levy side.  Finiteness of
    the mean needs kappa(power - alpha + omega) < 0.
    """
    c = power - p.alpha
    if kappa_value(p, c + omega) >= 0.0:
        raise HypothesisFailed(
            f"kappa({c + omega:.6g}) >= 0: the lifetime integral has no finite mean"
        )
    chars = levy_characteristics(p, omega, killed=True)
    return sample_exp_time_integrals(chars, c, n, rng, grid_step)
