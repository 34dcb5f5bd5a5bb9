"""
Brute-force stationary Schrodinger solver used to cross-check the analytic
transfer matrices.

Integrates ``psi'' = (2m/hbar^2) (V - E) psi`` with classical fixed-step RK4,
interval by interval between the barrier's breakpoints, and applies delta
spikes as exact jumps of ``psi'``. Nothing here touches :mod:`.transfer`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import PotentialSpec, UnitsConfig, evaluate

DEFAULT_PPW = 1000  # RK4 steps per shortest local wavelength
MIN_PPW = 40


class OracleError(RuntimeError):
    pass


class StepSizeError(OracleError):
    pass


@dataclass(frozen=True)
class OracleTransfer:
    q: complex | np.ndarray
    p: complex | np.ndarray
    k: float | np.ndarray
    wronskian_drift: float
    condition: float
    steps: int


@dataclass(frozen=True)
class OracleSolution:
    x_grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    wronskian_drift: float
    extracted: OracleTransfer | None = None


def _pieces(spec: PotentialSpec):
    """Intervals ``(a, b, V)`` between breakpoints and the spike table."""
    cuts = {spec.x1, spec.x2}
    for s in spec.segments:
        cuts.update((s.x_start, s.x_end))
    spikes: dict[float, float] = {}
    for d in spec.deltas:
        cuts.add(d.position)
        spikes[d.position] = spikes.get(d.position, 0.0) + d.strength
    cuts = sorted(cuts)
    pieces = [(a, b, float(evaluate(spec, 0.5 * (a + b)))) for a, b in zip(cuts, cuts[1:])]
    return pieces, spikes


def _max_wavenumber(spec, kmax, g):
    local = [abs(kmax)]
    for s in spec.segments:
        local.append(math.sqrt(abs(kmax * kmax - g * s.height)))
    return max(local)


def _step_size(spec, k, g, step, ppw):
    kmax = _max_wavenumber(spec, float(np.max(np.abs(k))), g)
    wavelength = 2 * math.pi / max(kmax, 1e-12)
    if step is None:
        return min(wavelength / ppw, spec.width)
    if step > wavelength / MIN_PPW:
        raise StepSizeError(
            f"step {step:g} exceeds wavelength/{MIN_PPW} = {wavelength / MIN_PPW:g}"
        )
    return step


def _rk4_interval(state, w, h, n, record=None):
    """Advance ``state[..., 0, :] = psi``, ``state[..., 1, :] = psi'`` by ``n``
    steps of signed size ``h`` for ``psi'' = w psi``. ``w`` broadcasts over
    the leading axes."""
    for _ in range(n):
        y0, d0 = state[..., 0, :], state[..., 1, :]
        k1y, k1d = d0, w * y0
        k2y, k2d = d0 + 0.5 * h * k1d, w * (y0 + 0.5 * h * k1y)
        k3y, k3d = d0 + 0.5 * h * k2d, w * (y0 + 0.5 * h * k2y)
        k4y, k4d = d0 + h * k3d, w * (y0 + h * k3y)
        state = np.stack(
            [y0 + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y),
             d0 + h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)],
            axis=-2,
        )
        if record is not None:
            record.append(state)
    return state


def _integrate(spec, k, state, leftward, units, step, ppw, record=None, xs=None):
    g = units.coupling
    h = _step_size(spec, k, g, step, ppw)
    pieces, spikes = _pieces(spec)
    order = reversed(pieces) if leftward else pieces
    k2 = np.asarray(k, dtype=float) ** 2
    total = 0
    done_spikes = set()

    def kick(pos, state):
        if pos in spikes and pos not in done_spikes:
            done_spikes.add(pos)
            jump = g * spikes[pos] * state[..., 0, :]
            d = state[..., 1, :] + (-jump if leftward else jump)
            state = np.stack([state[..., 0, :], d], axis=-2)
            if record is not None:
                record[-1] = state
        return state

    for a, b, v in order:
        start, end = (b, a) if leftward else (a, b)
        state = kick(start, state)
        n = max(1, math.ceil((b - a) / h))
        hh = (end - start) / n
        w = np.asarray(g * v - k2)
        if record is not None:
            xs.extend(start + hh * np.arange(1, n + 1))
        state = _rk4_interval(state, w, hh, n, record)
        total += n
    edge = spec.x1 if leftward else spec.x2
    state = kick(edge, state)
    return state, total


def oracle_transfer_matrix(spec: PotentialSpec, k, units: UnitsConfig = UnitsConfig(),
                           step: float | None = None, ppw: int = DEFAULT_PPW,
                           max_condition: float = 1e8) -> OracleTransfer:
    """Transfer matrix by integrating a fundamental matrix from ``x2`` to ``x1``
    and fitting plane waves on both sides. Vectorized over ``k``."""
    k = np.asarray(k, dtype=float)
    kk = np.atleast_1d(k)
    if np.any(kk <= 0):
        raise OracleError("oracle needs k > 0")
    n = len(kk)
    phi = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    # k as a column so the coefficient broadcasts over both fundamental solutions
    phi, steps = _integrate(spec, kk[:, None], phi, True, units, step, ppw)
    drift = float(np.max(np.abs(np.linalg.det(phi) - 1.0)))

    def waves(x):
        e = np.exp(1j * kk * x)
        m = np.empty((n, 2, 2), dtype=complex)
        m[:, 0, 0], m[:, 0, 1] = e, 1 / e
        m[:, 1, 0], m[:, 1, 1] = 1j * kk * e, -1j * kk / e
        return m

    left, right = waves(spec.x1), waves(spec.x2)
    cond = float(np.max(np.linalg.cond(left)))
    if cond > max_condition:
        raise OracleError(f"plane-wave fit ill-conditioned (cond = {cond:.3g})")
    Y = np.linalg.solve(left, phi @ right)
    q, p = Y[:, 0, 0], Y[:, 0, 1]
    if k.ndim == 0:
        return OracleTransfer(complex(q[0]), complex(p[0]), float(k), drift, cond, steps)
    return OracleTransfer(q, p, k, drift, cond, steps)


def integrate_stationary(spec: PotentialSpec, k: float, initial: tuple[complex, complex],
                         direction: str = "leftward", units: UnitsConfig = UnitsConfig(),
                         step: float | None = None, ppw: int = DEFAULT_PPW) -> OracleSolution:
    """Integrate one solution across the support.

    ``initial`` is ``(psi, psi')`` at ``x2`` for ``direction="leftward"`` and
    at ``x1`` for ``"rightward"``. Samples come back sorted by ``x``. The
    Wronskian drift is measured on a companion solution started from the
    orthogonal initial vector.
    """
    if direction not in ("leftward", "rightward"):
        raise ValueError("direction must be 'leftward' or 'rightward'")
    if k <= 0:
        raise OracleError("oracle needs k > 0")
    leftward = direction == "leftward"
    psi0, d0 = complex(initial[0]), complex(initial[1])
    state = np.array([[psi0, -np.conj(d0)], [d0, np.conj(psi0)]], dtype=complex)
    # second column is an independent companion with Wronskian |psi0|^2 + |d0|^2
    w0 = abs(psi0) ** 2 + abs(d0) ** 2
    record = [state]
    xs = [spec.x2 if leftward else spec.x1]
    _integrate(spec, k, state, leftward, units, step, ppw, record, xs)
    states = np.array(record)
    xs = np.array(xs)
    wr = states[:, 0, 0] * states[:, 1, 1] - states[:, 0, 1] * states[:, 1, 0]
    drift = float(np.max(np.abs(wr - w0)) / w0) if w0 else 0.0
    order = np.argsort(xs, kind="stable")
    return OracleSolution(xs[order], states[order, 0, 0], states[order, 1, 0], drift)
