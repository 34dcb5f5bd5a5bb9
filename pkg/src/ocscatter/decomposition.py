"""
Splitting a left-incident stationary state into transmission and reflection
parts.

For the state with unit incoming amplitude from the left,

    A_tr = sqrt(T) (sqrt(T) - i mu sqrt(R)),   A_ref = sqrt(R) (sqrt(R) + i mu sqrt(T)),

with ``mu = sign(cos F)``. ``Psi_ref`` is the full solution with left-side
amplitudes ``(A_ref, p*/q)``; it carries zero net current, so it is a
global phase times a real function. Its real zero closest to the barrier
midpoint is the crossing point ``x_c``; the reflected part is ``Psi_ref``
cut off at ``x_c`` and the transmitted part is the remainder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .potential import PotentialSpec, UnitsConfig, is_symmetric, max_local_wavenumber, regions
from .transfer import (
    DEFAULT_UNITS,
    BoundaryAmplitudes,
    ScatteringParams,
    barrier_transfer_matrix,
    scattering_params,
)

SAMPLES_PER_WAVELENGTH = 40
DEPHASE_TOL = 1e-8


class DecompositionError(RuntimeError):
    pass


class NoNodeError(DecompositionError):
    pass


@dataclass(frozen=True)
class SubprocessAmplitudes:
    a_tr_l_in: complex | np.ndarray
    a_ref_l_in: complex | np.ndarray
    mu: int | np.ndarray
    k: float | np.ndarray
    degenerate: bool | np.ndarray = False


@dataclass(frozen=True)
class StationarySolution:
    x_grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    amplitudes: BoundaryAmplitudes
    k: float


@dataclass(frozen=True)
class XcResult:
    x_c: float
    quality: float
    imag_residual: float
    phase: float


@dataclass(frozen=True)
class SubprocessPair:
    k: float
    x_grid: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    psi_tr: np.ndarray
    dpsi_tr: np.ndarray
    psi_ref: np.ndarray
    dpsi_ref: np.ndarray
    x_c: float
    mu: int
    amplitudes: SubprocessAmplitudes
    quality: float


def propagate(spec: PotentialSpec, k, a_l_in, a_l_out, x, units: UnitsConfig = DEFAULT_UNITS):
    """Stationary solution with left amplitudes ``(a_l_in, a_l_out)`` at ``x``.

    The left exterior uses plane waves, the interior is carried through the
    barrier piece by piece in ``(psi, psi')`` form, and the right exterior uses
    the plane-wave amplitudes obtained from the transfer matrix. For array
    ``k`` of shape ``(nk,)`` the result has shape ``(nk, nx)``.
    Returns ``(psi, dpsi)``.
    """
    scalar = np.ndim(k) == 0
    kk = np.atleast_1d(np.asarray(k, dtype=float))[:, None]
    a = np.broadcast_to(np.asarray(a_l_in, dtype=complex).reshape(-1, 1), kk.shape)
    b = np.broadcast_to(np.asarray(a_l_out, dtype=complex).reshape(-1, 1), kk.shape)
    xs = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    g = units.coupling

    shape = (kk.shape[0], xs.shape[1])
    psi = np.zeros(shape, dtype=complex)
    dpsi = np.zeros(shape, dtype=complex)

    def waves(amp_plus, amp_minus, xm):
        e = np.exp(1j * kk * xm)
        return amp_plus * e + amp_minus / e, 1j * kk * (amp_plus * e - amp_minus / e)

    left = xs[0] < spec.x1
    if left.any():
        psi[:, left], dpsi[:, left] = waves(a, b, xs[:, left])

    right = xs[0] >= spec.x2
    if right.any():
        Y = barrier_transfer_matrix(spec, kk[:, 0], units)
        c, dd = Y.inverse_apply(a[:, 0], b[:, 0])
        psi[:, right], dpsi[:, right] = waves(c[:, None], dd[:, None], xs[:, right])

    e1 = np.exp(1j * kk * spec.x1)
    y0 = a * e1 + b / e1
    d0 = 1j * kk * (a * e1 - b / e1)
    for reg in regions(spec):
        if reg.kind == "delta":
            d0 = d0 + g * reg.value * y0
            continue
        kap2 = (kk * kk - g * reg.value).astype(complex)
        kap = np.sqrt(kap2)
        inside = (xs[0] >= reg.x_start) & (xs[0] < reg.x_end)
        if inside.any():
            dx = xs[:, inside] - reg.x_start
            c, s = np.cos(kap * dx), dx * np.sinc(kap * dx / np.pi)
            psi[:, inside] = c * y0 + s * d0
            dpsi[:, inside] = -kap2 * s * y0 + c * d0
        length = reg.x_end - reg.x_start
        c, s = np.cos(kap * length), length * np.sinc(kap * length / np.pi)
        y0, d0 = c * y0 + s * d0, -kap2 * s * y0 + c * d0

    if scalar:
        return psi[0], dpsi[0]
    return psi, dpsi


def probability_current(psi, dpsi, units: UnitsConfig = DEFAULT_UNITS):
    """``j = (hbar/m) Im(psi* psi')``."""
    return units.hbar / units.mass * np.imag(np.conj(psi) * dpsi)


def solution_grid(spec: PotentialSpec, k: float, units: UnitsConfig = DEFAULT_UNITS,
                  pad: float | None = None, samples: int = SAMPLES_PER_WAVELENGTH) -> np.ndarray:
    """Uniform grid covering the support, the ``2 pi / k`` window around the
    midpoint and ``pad`` on either side, with at least ``samples`` points per
    shortest local wavelength. The midpoint is always a grid node."""
    mid = spec.midpoint
    window = 2 * np.pi / k
    pad = 2 * np.pi / k if pad is None else pad
    lo = min(spec.x1, mid - window) - pad
    hi = max(spec.x2, mid + window) + pad
    h = 2 * np.pi / max_local_wavenumber(spec, k, units) / samples
    n_left = int(np.ceil((mid - lo) / h))
    n_right = int(np.ceil((hi - mid) / h))
    return mid + h * np.arange(-n_left, n_right + 1)


def solve_left_incident(spec: PotentialSpec, k: float, x_grid=None,
                        units: UnitsConfig = DEFAULT_UNITS) -> StationarySolution:
    """``Psi`` with ``A_L,in = 1``, ``A_R,in = 0``."""
    Y = barrier_transfer_matrix(spec, k, units)
    x = solution_grid(spec, k, units) if x_grid is None else np.asarray(x_grid, dtype=float)
    b = np.conj(Y.p) / Y.q
    psi, dpsi = propagate(spec, k, 1.0, b, x, units)
    return StationarySolution(x, psi, dpsi, BoundaryAmplitudes(1.0, b, 1 / Y.q, 0.0), k)


def subprocess_amplitudes(params: ScatteringParams, mu=None) -> SubprocessAmplitudes:
    """Incoming amplitudes of the two subprocesses.

    ``mu`` defaults to ``sign(cos F)``. Where ``F`` is undefined (``R = 0``)
    the split degenerates to ``(1, 0)`` with ``mu = 0``.
    """
    T = np.asarray(params.T, dtype=float)
    R = np.asarray(params.R, dtype=float)
    defined = np.asarray(params.F_defined, dtype=bool)
    m = np.asarray(params.mu if mu is None else mu)
    m = np.where(defined, m, 0)
    st, sr = np.sqrt(T), np.sqrt(R)
    a_tr = np.where(defined, st * (st - 1j * m * sr), 1.0 + 0j)
    a_ref = np.where(defined, sr * (sr + 1j * m * st), 0j)
    if T.ndim == 0:
        return SubprocessAmplitudes(complex(a_tr), complex(a_ref), int(m), float(params.k),
                                    bool(~defined))
    return SubprocessAmplitudes(a_tr, a_ref, m.astype(int), params.k, ~defined)


def _params(spec, k, units):
    Y = barrier_transfer_matrix(spec, k, units)
    return Y, scattering_params(Y, k, spec.x1, spec.x2)


def reflection_full_solution(spec: PotentialSpec, k: float, x_grid=None, mu: int | None = None,
                             units: UnitsConfig = DEFAULT_UNITS) -> StationarySolution:
    """``Psi_ref``: left amplitudes ``(A_ref, p*/q)``, continued across the
    barrier. ``mu`` overrides the root choice (used to exhibit the rejected
    even solution of symmetric barriers)."""
    Y, par = _params(spec, k, units)
    if not par.F_defined:
        raise DecompositionError(f"R = 0 at k = {k}: no reflection subprocess")
    amps = subprocess_amplitudes(par, mu)
    x = solution_grid(spec, k, units) if x_grid is None else np.asarray(x_grid, dtype=float)
    b = np.conj(Y.p) / Y.q
    psi, dpsi = propagate(spec, k, amps.a_ref_l_in, b, x, units)
    c, d = Y.inverse_apply(amps.a_ref_l_in, b)
    return StationarySolution(x, psi, dpsi, BoundaryAmplitudes(amps.a_ref_l_in, b, c, d), k)


def find_xc(spec: PotentialSpec, k: float, units: UnitsConfig = DEFAULT_UNITS,
            mu: int | None = None, near: float | None = None) -> XcResult:
    """Crossing point of the reflection subprocess.

    ``Psi_ref`` is de-phased by the argument of its largest sample; the zero of
    the resulting real function closest to the midpoint (or to ``near``, used
    to follow one node continuously in ``k``), searched within
    ``|x - midpoint| <= 2 pi / k``, is bracketed on the grid and refined by
    bisection. For mirror-symmetric barriers the node is snapped to the
    midpoint once bisection has confirmed it.
    """
    mid = spec.midpoint
    window = 2 * np.pi / k
    sol = reflection_full_solution(spec, k, solution_grid(spec, k, units, pad=0.0), mu, units)
    x, psi = sol.x_grid, sol.values
    peak = np.max(np.abs(psi))
    phase = float(np.angle(psi[np.argmax(np.abs(psi))]))
    rot = psi * np.exp(-1j * phase)
    imag_residual = float(np.max(np.abs(rot.imag)) / peak)
    if imag_residual > DEPHASE_TOL:
        raise DecompositionError(
            f"Psi_ref is not a phase times a real function (residual {imag_residual:.2e})"
        )
    u = rot.real
    a_ref, b = sol.amplitudes.a_l_in, sol.amplitudes.a_l_out

    def real_part(xx):
        v, _ = propagate(spec, k, a_ref, b, np.array([xx]), units)
        return float((v[0] * np.exp(-1j * phase)).real)

    inwin = np.abs(x - mid) <= window
    candidates = []
    for i in np.flatnonzero(inwin):
        if u[i] == 0.0:
            candidates.append((x[i], x[i]))
        elif i + 1 < len(x) and inwin[i + 1] and u[i] * u[i + 1] < 0:
            candidates.append((x[i], x[i + 1]))
    if not candidates:
        raise NoNodeError(f"no node of Psi_ref within 2 pi/k of the midpoint at k = {k}")
    target = mid if near is None else near
    lo, hi = min(candidates, key=lambda c: abs(0.5 * (c[0] + c[1]) - target))
    xc = lo if lo == hi else bisect(real_part, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    sym, _ = is_symmetric(spec)
    if sym and abs(xc - mid) <= 1e-8 * max(1.0, spec.width):
        xc = mid
    v, _ = propagate(spec, k, a_ref, b, np.array([xc]), units)
    return XcResult(float(xc), float(abs(v[0]) / peak), imag_residual, phase)


def decompose(spec: PotentialSpec, k: float, x_grid=None,
              units: UnitsConfig = DEFAULT_UNITS) -> SubprocessPair:
    """Transmission and reflection wave functions on ``x_grid``."""
    Y, par = _params(spec, k, units)
    if not par.F_defined or par.T <= 0:
        raise DecompositionError(f"R(k) must lie in (0, 1) for a decomposition (k = {k})")
    amps = subprocess_amplitudes(par)
    xc = find_xc(spec, k, units)
    x = solution_grid(spec, k, units) if x_grid is None else np.asarray(x_grid, dtype=float)
    b = np.conj(Y.p) / Y.q
    psi, dpsi = propagate(spec, k, 1.0, b, x, units)
    full_ref, dfull_ref = propagate(spec, k, amps.a_ref_l_in, b, x, units)
    keep = x < xc.x_c
    psi_ref = np.where(keep, full_ref, 0)
    dpsi_ref = np.where(keep, dfull_ref, 0)
    return SubprocessPair(k, x, psi, dpsi, psi - psi_ref, dpsi - dpsi_ref, psi_ref, dpsi_ref,
                          xc.x_c, amps.mu, amps, xc.quality)


@dataclass(frozen=True)
class CrossingReport:
    x_c: float
    incident_current: float
    current_jump_tr: float
    current_jump_ref: float
    value_jump_ref: float
    value_jump_tr: float
    derivative_jump: float
    scale: float


def crossing_diagnostics(spec: PotentialSpec, k: float, units: UnitsConfig = DEFAULT_UNITS,
                         x_c: float | None = None) -> CrossingReport:
    """One-sided limits of both subprocess functions at ``x_c``.

    ``scale`` is ``k * max|Psi|`` on the standard grid, the natural size of a
    derivative; the derivative jump is the same for both parts.
    """
    Y, par = _params(spec, k, units)
    amps = subprocess_amplitudes(par)
    xc = find_xc(spec, k, units).x_c if x_c is None else x_c
    b = np.conj(Y.p) / Y.q
    pt = np.array([xc])
    psi, dpsi = propagate(spec, k, 1.0, b, pt, units)
    ref, dref = propagate(spec, k, amps.a_ref_l_in, b, pt, units)
    j = lambda v, d: float(probability_current(v, d, units)[0])  # noqa: E731
    tr_left, tr_right = j(psi - ref, dpsi - dref), j(psi, dpsi)
    ref_left, ref_right = j(ref, dref), 0.0
    grid = solution_grid(spec, k, units)
    full, _ = propagate(spec, k, 1.0, b, grid, units)
    return CrossingReport(
        x_c=xc,
        incident_current=float(units.velocity(k)),
        current_jump_tr=abs(tr_left - tr_right),
        current_jump_ref=abs(ref_left - ref_right),
        value_jump_ref=float(abs(ref[0])),
        value_jump_tr=float(abs(ref[0])),
        derivative_jump=float(abs(dref[0])),
        scale=float(k * np.max(np.abs(full))),
    )


@dataclass(frozen=True)
class ParityReport:
    mu_selected: int
    odd_residual: float       # max |Psi_ref(m + y) + Psi_ref(m - y)| / max |Psi_ref|, chosen root
    even_residual: float      # max |Psi_ref(m + y) - Psi_ref(m - y)| / max |Psi_ref|, other root
    even_slope_at_mid: float  # |Psi'_ref(m)| / (k max|Psi_ref|), other root
    even_density_jump: float  # |Psi_ref(m)|^2 / max|Psi_ref|^2, other root


def parity_dichotomy(spec: PotentialSpec, k: float, units: UnitsConfig = DEFAULT_UNITS,
                     n: int = 801) -> ParityReport:
    """Compare the two roots ``mu = +-sign(cos F)`` on a mirror-symmetric barrier."""
    sym, mid = is_symmetric(spec)
    if not sym:
        raise DecompositionError("parity check needs a mirror-symmetric barrier")
    _, par = _params(spec, k, units)
    mu = par.mu
    half = max(spec.width, 4 * np.pi / k)
    y = np.linspace(0.0, half, n)
    grid = np.concatenate([mid - y[::-1], mid + y[1:]])
    good = reflection_full_solution(spec, k, grid, mu, units)
    bad = reflection_full_solution(spec, k, grid, -mu, units)
    left = lambda v: v[: n][::-1]  # noqa: E731
    right = lambda v: v[n - 1:]  # noqa: E731
    gpk = np.max(np.abs(good.values))
    bpk = np.max(np.abs(bad.values))
    odd = np.max(np.abs(left(good.values) + right(good.values))) / gpk
    even = np.max(np.abs(left(bad.values) - right(bad.values))) / bpk
    vm, dm = propagate(spec, k, bad.amplitudes.a_l_in, bad.amplitudes.a_l_out,
                       np.array([mid]), units)
    return ParityReport(int(mu), float(odd), float(even), float(abs(dm[0]) / (k * bpk)),
                        float(abs(vm[0]) ** 2 / bpk**2))


@dataclass(frozen=True)
class OpaqueRow:
    W: float
    discrepancy: float      # max |A_ref Psi_W - psi_ref| / max |psi_ref| on x < midpoint
    raw_discrepancy: float  # same without rescaling the incident amplitude
    T_modified: float


def opaque_delta_check(spec: PotentialSpec, k: float, w_values, units: UnitsConfig = DEFAULT_UNITS,
                       x_grid=None) -> list[OpaqueRow]:
    """Insert ``W delta(x - midpoint)`` into a symmetric barrier and compare the
    left-incident solution of the modified problem with ``psi_ref``.

    The modified solution is rescaled to the reflection subprocess's incoming
    amplitude ``A_ref`` before comparison; as ``W`` grows it converges to
    ``psi_ref`` on the left half.
    """
    sym, mid = is_symmetric(spec)
    if not sym:
        raise DecompositionError("opaque-delta check needs a mirror-symmetric barrier")
    Y, par = _params(spec, k, units)
    if not par.F_defined:
        raise DecompositionError("R = 0: nothing to compare against")
    x = solution_grid(spec, k, units) if x_grid is None else np.asarray(x_grid, dtype=float)
    x = x[x < mid]
    pair = decompose(spec, k, x, units)
    scale = np.max(np.abs(pair.psi_ref))
    a_ref = pair.amplitudes.a_ref_l_in
    rows = []
    for w in w_values:
        mod = spec.with_delta(mid, float(w))
        sol = solve_left_incident(mod, k, x, units)
        rows.append(OpaqueRow(
            float(w),
            float(np.max(np.abs(a_ref * sol.values - pair.psi_ref)) / scale),
            float(np.max(np.abs(sol.values - pair.psi_ref)) / scale),
            float(1.0 / abs(barrier_transfer_matrix(mod, k, units).q) ** 2),
        ))
    return rows
