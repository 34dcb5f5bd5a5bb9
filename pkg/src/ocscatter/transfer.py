"""
Transfer matrices in the global plane-wave convention.

Outside the support the stationary state reads

    psi = a_l_in e^{ikx} + a_l_out e^{-ikx}     (x <= x1)
    psi = a_r_out e^{ikx} + a_r_in e^{-ikx}     (x >= x2)

with absolute ``x`` in the exponents, and

    (a_l_in, a_l_out) = Y (a_r_out, a_r_in),    Y = [[q, p], [p*, q*]].

Because phases refer to absolute positions, a stretch of free space is the
identity and a barrier made of pieces ordered left to right has
``Y = Y_1 @ Y_2 @ ... @ Y_n`` (leftmost piece first).

Every builder accepts a scalar ``k`` or an array of wavenumbers; ``q`` and
``p`` then carry the same shape. Products are formed in extended precision
and rounded once, so ``|q|^2 - |p|^2 = 1`` holds to about an ulp of ``|q|^2``
even for opaque barriers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .potential import PotentialSpec, UnitsConfig, regions

DEFAULT_UNITS = UnitsConfig()

# |p| below this fraction of |q| counts as R = 0 (F undefined).
RESONANCE_RTOL = 1e-13


@dataclass(frozen=True)
class TransferMatrix:
    q: complex | np.ndarray
    p: complex | np.ndarray
    k: float | np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """The 2x2 matrix, shape ``(..., 2, 2)`` for array-valued ``k``."""
        q, p = np.asarray(self.q), np.asarray(self.p)
        return np.stack(
            [np.stack([q, p], axis=-1), np.stack([p.conj(), q.conj()], axis=-1)], axis=-2
        )

    def det_residual(self):
        """``|q|^2 - |p|^2 - 1`` relative to ``|q|^2``."""
        q2 = np.abs(self.q) ** 2
        return (q2 - np.abs(self.p) ** 2 - 1.0) / q2

    def identity_residual(self):
        """Absolute ``|q|^2 - |p|^2 - 1`` of the stored entries, evaluated in
        extended precision so the check adds no rounding of its own."""
        q = np.asarray(self.q).astype(np.clongdouble)
        p = np.asarray(self.p).astype(np.clongdouble)
        r = q.real**2 + q.imag**2 - p.real**2 - p.imag**2 - 1
        return r.astype(float) if r.ndim else float(r)

    def inverse_apply(self, a_l_in, a_l_out):
        """Right-side amplitudes ``(a_r_out, a_r_in)`` from left-side ones."""
        q, p = self.q, self.p
        return np.conj(q) * a_l_in - p * a_l_out, -np.conj(p) * a_l_in + q * a_l_out

    def apply(self, a_r_out, a_r_in):
        q, p = self.q, self.p
        return q * a_r_out + p * a_r_in, np.conj(p) * a_r_out + np.conj(q) * a_r_in


@dataclass(frozen=True)
class ScatteringParams:
    """``T, R, J, F`` at one wavenumber (or arrays over a grid).

    ``F_defined`` is False where ``R = 0``; ``F`` then holds a fallback value.
    """

    T: float | np.ndarray
    R: float | np.ndarray
    J: float | np.ndarray
    F: float | np.ndarray
    F_defined: bool | np.ndarray
    k: float | np.ndarray

    @property
    def mu(self):
        """Root selector ``sign(cos F)``; 0 where F is undefined."""
        mu = np.where(np.cos(self.F) >= 0.0, 1, -1)
        mu = np.where(self.F_defined, mu, 0)
        return int(mu) if np.ndim(mu) == 0 else mu


@dataclass(frozen=True)
class BoundaryAmplitudes:
    a_l_in: complex
    a_l_out: complex
    a_r_out: complex
    a_r_in: complex


def _check_k(k):
    k = np.asarray(k, dtype=float)
    if np.any(k == 0) or not np.all(np.isfinite(k)):
        raise ValueError("scattering is defined only for finite k != 0")
    return k


def _out(k, q, p):
    if np.ndim(k) == 0:
        return TransferMatrix(complex(q), complex(p), float(k))
    return TransferMatrix(np.asarray(q, dtype=complex), np.asarray(p, dtype=complex), k)


def identity(k) -> TransferMatrix:
    k = np.asarray(k, dtype=float)
    return _out(k, np.ones_like(k, dtype=complex), np.zeros_like(k, dtype=complex))


def _rect_qp(k, v0, x_start, x_end, units):
    k = k.astype(np.longdouble)
    length = np.longdouble(x_end) - np.longdouble(x_start)
    gv = np.longdouble(units.coupling) * np.longdouble(v0)
    kap2 = (k * k - gv).astype(np.clongdouble)
    kap = np.sqrt(kap2)
    c = np.cos(kap * length)
    small = np.abs(kap * length) < 1e-8
    safe = np.where(small, 1.0, kap)
    s = np.where(small, length * (1 - kap2 * length**2 / 6), np.sin(kap * length) / safe)
    q = np.exp(1j * k * length) * (c - 0.5j * (k * s + kap2 * s / k))
    p = 0.5j * gv * s / k * np.exp(-1j * k * (np.longdouble(x_start) + np.longdouble(x_end)))
    return q, p


def _delta_qp(k, strength, position, units):
    k = k.astype(np.longdouble)
    beta = np.longdouble(units.coupling) * np.longdouble(strength) / (2 * k)
    return 1 + 1j * beta, 1j * beta * np.exp(-2j * k * np.longdouble(position))


def _compose_qp(pairs):
    q, p = pairs[0]
    for q2, p2 in pairs[1:]:
        q, p = q * q2 + p * np.conj(p2), q * p2 + p * np.conj(q2)
    return q, p


def elementary_rect(k, v0: float, x_start: float, x_end: float,
                    units: UnitsConfig = DEFAULT_UNITS) -> TransferMatrix:
    """Flat segment of height ``v0`` on ``[x_start, x_end]``.

    With ``kappa**2 = k**2 - 2 m v0 / hbar**2`` (complex in the tunneling
    regime) and ``L = x_end - x_start``:

        q = e^{ikL} [cos(kappa L) - i/2 (k/kappa + kappa/k) sin(kappa L)]
        p = i/2 (k/kappa - kappa/k) sin(kappa L) e^{-ik(x_start + x_end)}

    Both are written through ``cos(kappa L)`` and ``sin(kappa L)/kappa``,
    which are even in ``kappa``, so the branch of the square root is
    irrelevant and ``E = v0`` needs no special case.
    """
    if not x_start < x_end:
        raise ValueError("x_start must be < x_end")
    k = _check_k(k)
    return _out(k, *_rect_qp(k, v0, x_start, x_end, units))


def elementary_delta(k, strength: float, position: float,
                     units: UnitsConfig = DEFAULT_UNITS) -> TransferMatrix:
    """Spike ``W delta(x - x0)``: ``psi'`` jumps by ``(2m/hbar^2) W psi(x0)``.

    With ``beta = m W / (hbar^2 k)``: ``q = 1 + i beta``,
    ``p = i beta e^{-2ik x0}``.
    """
    k = _check_k(k)
    return _out(k, *_delta_qp(k, strength, position, units))


def shift(Y: TransferMatrix, k, s: float) -> TransferMatrix:
    """Translate the barrier described by ``Y`` by ``s``."""
    return TransferMatrix(Y.q, Y.p * np.exp(-2j * np.asarray(k) * s), Y.k)


def compose(parts: Sequence[TransferMatrix]) -> TransferMatrix:
    """Concatenate barriers ordered left to right: ``Y = Y_1 @ Y_2 @ ...``."""
    if not parts:
        raise ValueError("nothing to compose")
    k0 = np.asarray(parts[0].k)
    for part in parts[1:]:
        if not np.array_equal(np.asarray(part.k), k0):
            raise ValueError("cannot compose transfer matrices built at different k")
    pairs = [(np.asarray(y.q).astype(np.clongdouble), np.asarray(y.p).astype(np.clongdouble))
             for y in parts]
    return _out(k0, *_compose_qp(pairs))


def barrier_transfer_matrix(spec: PotentialSpec, k,
                            units: UnitsConfig = DEFAULT_UNITS) -> TransferMatrix:
    k = _check_k(k)
    pairs = []
    for reg in regions(spec):
        if reg.kind == "delta":
            pairs.append(_delta_qp(k, reg.value, reg.x_start, units))
        elif reg.value != 0.0:
            pairs.append(_rect_qp(k, reg.value, reg.x_start, reg.x_end, units))
    if not pairs:
        return identity(k)
    return _out(k, *_compose_qp(pairs))


def scattering_params(Y: TransferMatrix, k, x1: float, x2: float) -> ScatteringParams:
    """Read ``T, R, J, F`` off ``Y`` using

        q = T^{-1/2} e^{i[k(x2 - x1) - J]}
        p = i (R/T)^{1/2} e^{i[-k(x2 + x1) + F]}

    ``J`` is ``k d - arg q`` with ``arg`` in (-pi, pi]; ``F`` is reduced to
    [0, 2 pi). Where ``R = 0`` the flag ``F_defined`` is False and ``F = 0``.
    """
    k = np.asarray(k, dtype=float)
    q, p = np.asarray(Y.q), np.asarray(Y.p)
    absq = np.abs(q)
    if np.any(absq < 1.0 - 1e-12):
        raise ValueError("|q| < 1: not a transfer matrix")
    T = 1.0 / absq**2
    # |p/q|^2 rather than 1 - T keeps relative accuracy when R is tiny.
    R = (np.abs(p) / absq) ** 2
    J = k * (x2 - x1) - np.angle(q)
    defined = np.abs(p) > RESONANCE_RTOL * absq
    F = np.mod(np.angle(p) + k * (x2 + x1) - 0.5 * np.pi, 2 * np.pi)
    F = np.where(F >= 2 * np.pi, 0.0, F)
    F = np.where(defined, F, 0.0)
    if k.ndim == 0:
        return ScatteringParams(float(T), float(R), float(J), float(F), bool(defined), float(k))
    return ScatteringParams(T, R, J, F, defined, k)


def params_to_transfer(params: ScatteringParams, x1: float, x2: float) -> TransferMatrix:
    """Inverse of :func:`scattering_params`."""
    k = np.asarray(params.k)
    T, R = np.asarray(params.T), np.asarray(params.R)
    q = np.exp(1j * (k * (x2 - x1) - params.J)) / np.sqrt(T)
    p = 1j * np.sqrt(R / T) * np.exp(1j * (-k * (x2 + x1) + params.F))
    return _out(k, q, p)


def default_threads() -> int:
    env = os.environ.get("OCSCATTER_THREADS")
    if env:
        return max(1, int(env))
    return 1


@dataclass(frozen=True)
class SpectrumTable:
    k: np.ndarray
    T: np.ndarray
    R: np.ndarray
    J: np.ndarray
    F: np.ndarray
    F_defined: np.ndarray
    mu: np.ndarray
    q: np.ndarray
    p: np.ndarray
    ok: np.ndarray  # False on rows whose k was rejected

    def __len__(self):
        return len(self.k)

    def params(self) -> ScatteringParams:
        return ScatteringParams(self.T, self.R, self.J, self.F, self.F_defined, self.k)

    def transfer(self) -> TransferMatrix:
        return TransferMatrix(self.q, self.p, self.k)


def _unwrap_runs(values: np.ndarray, breaks: np.ndarray) -> np.ndarray:
    """Remove 2 pi jumps inside each run of consecutive unbroken rows."""
    out = values.copy()
    start = 0
    n = len(values)
    for i in range(n + 1):
        if i == n or breaks[i]:
            if i > start:
                out[start:i] = np.unwrap(values[start:i])
            start = i + 1
    return out


def spectrum(spec: PotentialSpec, k_grid, units: UnitsConfig = DEFAULT_UNITS,
             threads: int | None = None) -> SpectrumTable:
    """Scattering parameters on a wavenumber grid.

    Rows are independent; with ``threads > 1`` the grid is split into chunks
    evaluated concurrently. Rows with an invalid ``k`` come back as NaN with
    ``ok = False`` instead of aborting the sweep. ``J`` is unwrapped along the
    grid; ``F`` is unwrapped within each run between resonances and carries the
    last defined value across rows where ``R = 0``.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    n = len(k_grid)
    ok = np.isfinite(k_grid) & (k_grid > 0)
    q = np.full(n, np.nan, dtype=complex)
    p = np.full(n, np.nan, dtype=complex)
    idx = np.flatnonzero(ok)
    threads = threads or default_threads()

    def work(chunk):
        Y = barrier_transfer_matrix(spec, k_grid[chunk], units)
        return chunk, np.atleast_1d(Y.q), np.atleast_1d(Y.p)

    if len(idx):
        chunks = np.array_split(idx, min(max(threads, 1), len(idx)))
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(work, chunks))
        else:
            results = [work(c) for c in chunks]
        for chunk, qc, pc in results:
            q[chunk], p[chunk] = qc, pc

    T = np.full(n, np.nan)
    R = np.full(n, np.nan)
    J = np.full(n, np.nan)
    F = np.full(n, np.nan)
    defined = np.zeros(n, dtype=bool)
    if len(idx):
        par = scattering_params(TransferMatrix(q[idx], p[idx], k_grid[idx]), k_grid[idx],
                                spec.x1, spec.x2)
        T[idx], R[idx], defined[idx] = par.T, par.R, par.F_defined
        J[idx] = k_grid[idx] * spec.width - np.unwrap(np.angle(q[idx]))
        Fi = np.asarray(par.F, dtype=float).copy()
        dfi = np.asarray(par.F_defined)
        last = None
        for j in range(len(Fi)):
            if dfi[j]:
                last = Fi[j]
            elif last is not None:
                Fi[j] = last
        F[idx] = _unwrap_runs(Fi, ~dfi)
    mu = np.where(defined, np.where(np.cos(F) >= 0.0, 1, -1), 0)
    return SpectrumTable(k_grid, T, R, J, F, defined, mu, q, p, ok)


def wrap_phase(x):
    """Map angles to (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(x)))

