"""
Time-dependent packets assembled from stationary scattering states.

A packet is the k-quadrature

    Psi(x, t) = (2 pi)^(-1/2) sum_j w_j A(k_j) phi(x; k_j) exp(-i E(k_j) t / hbar)

over a uniform k-grid with trapezoid weights ``w_j``, where ``phi`` is the
left-incident stationary state (full process) or one of its two subprocess
parts. Every term solves the time-dependent equation exactly, so the only
errors are the k- and x-quadratures.

Spatial integrals use composite Simpson on a piecewise-uniform grid whose
pieces meet at the barrier breakpoints and at the sector boundaries; the
stationary states are only piecewise smooth and a kink inside a Simpson
panel would cost several digits.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decomposition import find_xc, propagate, subprocess_amplitudes
from .potential import PotentialSpec, UnitsConfig, evaluate, is_symmetric, max_local_wavenumber
from .ssr import Representation, TwoComponentState
from .transfer import DEFAULT_UNITS, barrier_transfer_matrix, default_threads, scattering_params

LEAKAGE_LIMIT = 1e-12
DEFAULT_NK = 768
DEFAULT_SPAN = 12.0  # k-grid half width in units of 1/l
DEFAULT_DX = 0.05
MIN_K_FRACTION = 0.05  # lowest default k, relative to k0
ASYMPTOTIC_WIDTHS = 8.0
MAX_K_DX = math.pi / 4


class LeakageError(ValueError):
    pass


class GridResolutionError(ValueError):
    pass


class PacketLabel(enum.Enum):
    FULL = "full"
    TRANSMITTED = "transmitted"
    REFLECTED = "reflected"
    IN_ASYMPTOTE = "in_asymptote"
    OUT_ASYMPTOTE = "out_asymptote"


def trapezoid_k_weights(k_grid) -> np.ndarray:
    k = np.asarray(k_grid, dtype=float)
    w = np.zeros_like(k)
    d = np.diff(k)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


@dataclass(frozen=True)
class SpectralAmplitude:
    k_grid: np.ndarray
    values: np.ndarray
    declared_center: float
    declared_width: float
    position_offset: float

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_k_weights(self.k_grid)

    def integrate(self, f) -> complex:
        """``int f(k) |A(k)|^2 dk`` on the grid."""
        return complex(np.sum(self.weights * np.asarray(f) * np.abs(self.values) ** 2))

    def norm2(self) -> float:
        return self.integrate(1.0).real

    def mean_k(self) -> float:
        return self.integrate(self.k_grid).real / self.norm2()

    def combine(self, other: "SpectralAmplitude", a: complex = 1.0, b: complex = 1.0):
        """``a A + b B`` on a shared grid (not renormalized)."""
        if not np.array_equal(self.k_grid, other.k_grid):
            raise ValueError("amplitudes live on different k-grids")
        return SpectralAmplitude(self.k_grid, a * self.values + b * other.values,
                                 self.declared_center, self.declared_width, self.position_offset)


def gaussian_leakage(k0: float, width_l: float) -> float:
    """Weight of the untruncated ``|A|^2`` below ``k = 0``."""
    return 0.5 * math.erfc(k0 * width_l / math.sqrt(2.0))


def gaussian_amplitude(k0: float, width_l: float, offset_L: float, k_grid=None,
                       n: int = DEFAULT_NK, span: float = DEFAULT_SPAN,
                       barrier_width: float | None = None) -> SpectralAmplitude:
    """``A(k) ~ exp(-(k - k0)^2 l^2 / 4) exp(i k L)``, normalized on the grid.

    The free packet is then centered at ``x = -L`` at ``t = 0`` with position
    spread ``l / 2`` and momentum spread ``hbar / l``. The default grid is
    uniform over ``k0 +- span / l``.
    """
    if not (width_l > 0 and math.isfinite(width_l)):
        raise ValueError(f"packet width must be positive, got {width_l!r}")
    leak = gaussian_leakage(k0, width_l)
    if leak >= LEAKAGE_LIMIT:
        raise LeakageError(
            f"k0*l = {k0 * width_l:.3g} leaves {leak:.2e} of the packet at k < 0"
        )
    if barrier_width is not None and not (offset_L >= 4 * width_l >= 16 * barrier_width):
        warnings.warn(
            f"packet geometry L={offset_L:g}, l={width_l:g}, d={barrier_width:g} "
            "is not well separated (want L >> l >> d)", stacklevel=2)
    if k_grid is None:
        lo = k0 - span / width_l
        if lo <= 0:
            lo = MIN_K_FRACTION * k0
            warnings.warn(f"k-grid clipped at k = {lo:.3g}; the packet spectrum is truncated "
                          f"at {math.exp(-((k0 - lo) * width_l) ** 2 / 4):.1e} of its peak",
                          stacklevel=2)
        k_grid = np.linspace(lo, k0 + span / width_l, n)
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(k_grid <= 0):
        raise ValueError("k-grid must be strictly positive")
    if np.any(np.diff(k_grid) <= 0):
        raise ValueError("k-grid must be strictly increasing")
    vals = np.exp(-((k_grid - k0) * width_l) ** 2 / 4 + 1j * k_grid * offset_L)
    vals /= math.sqrt(np.sum(trapezoid_k_weights(k_grid) * np.abs(vals) ** 2))
    return SpectralAmplitude(k_grid, vals, float(k0), float(width_l), float(offset_L))


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes, composite Simpson weights and the panel structure behind them."""

    x: np.ndarray
    w: np.ndarray
    pieces: tuple[tuple[int, int], ...] = field(repr=False)
    breaks: tuple[float, ...] = ()

    @property
    def max_step(self) -> float:
        return float(np.max(np.diff(self.x)))

    def weights_between(self, lo: float = -math.inf, hi: float = math.inf) -> np.ndarray:
        """Weights for the integral over ``[lo, hi]``; both limits must be
        piece boundaries (or infinite)."""
        w = np.zeros_like(self.w)
        for i0, i1 in self.pieces:
            a, b = self.x[i0], self.x[i1]
            if a >= lo and b <= hi:
                w[i0:i1 + 1] += _simpson(self.x[i0:i1 + 1])
            elif b > lo and a < hi:
                raise ValueError(f"[{lo}, {hi}] is not aligned with the quadrature pieces")
        return w

    def integrate(self, f) -> complex:
        return complex(np.sum(self.w * f))


def _simpson(x) -> np.ndarray:
    n = len(x) - 1
    h = (x[-1] - x[0]) / n
    w = np.empty(n + 1)
    w[0::2], w[1::2] = 2.0, 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3


def packet_grid(lo: float, hi: float, breaks=(), step: float = DEFAULT_DX) -> QuadratureGrid:
    """Piecewise-uniform grid on ``[lo, hi]`` with every element of ``breaks``
    as a node. Each piece has an even number of panels of width ``<= step``."""
    cuts = sorted({float(lo), float(hi), *(float(b) for b in breaks if lo < b < hi)})
    xs, pieces = [np.array([cuts[0]])], []
    start = 0
    for a, b in zip(cuts, cuts[1:]):
        n = max(2, 2 * math.ceil((b - a) / (2 * step)))
        xs.append(np.linspace(a, b, n + 1)[1:])
        pieces.append((start, start + n))
        start += n
    x = np.concatenate(xs)
    g = QuadratureGrid(x, np.zeros_like(x), tuple(pieces), tuple(cuts))
    return QuadratureGrid(x, g.weights_between(), g.pieces, g.breaks)


@dataclass(frozen=True)
class PacketState:
    x_grid: np.ndarray
    values: np.ndarray
    time: float
    norm: float
    label: PacketLabel
    weights: np.ndarray = field(repr=False)
    derivative: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class PacketNorms:
    t_bar: float
    r_bar: float


@dataclass(frozen=True)
class Expectations:
    mean_x: float
    mean_p: float
    var_x: float
    var_p: float


@dataclass(frozen=True)
class NormHistory:
    t: np.ndarray
    norm_full: np.ndarray
    norm_tr: np.ndarray
    norm_ref: np.ndarray
    mean_x_tr: np.ndarray
    mean_x_ref: np.ndarray
    t_bar: np.ndarray
    r_bar: np.ndarray
    epoch: tuple[str, ...]

    def subprocess_deviation(self) -> np.ndarray:
        return self.norm_tr + self.norm_ref - 1.0

    def asymptotic(self) -> np.ndarray:
        return np.array([e != "interaction" for e in self.epoch])


def spectral_derivative(values, dx: float) -> np.ndarray:
    """``d/dx`` on a uniform periodic grid via FFT."""
    k = 2 * np.pi * np.fft.fftfreq(len(values), d=dx)
    return np.fft.ifft(1j * k * np.fft.fft(values))


def expectations(packet: PacketState, units: UnitsConfig = DEFAULT_UNITS) -> Expectations:
    """Position and momentum moments of the normalized packet.

    The momentum uses the exact derivative carried by synthesized packets,
    falling back to an FFT derivative on uniform grids.
    """
    w, psi, x = packet.weights, packet.values, packet.x_grid
    n = float(np.sum(w * np.abs(psi) ** 2))
    if not n > 0:
        raise ValueError("cannot take expectations of a zero-norm packet")
    mx = float(np.sum(w * x * np.abs(psi) ** 2)) / n
    vx = float(np.sum(w * (x - mx) ** 2 * np.abs(psi) ** 2)) / n
    d = packet.derivative
    if d is None:
        dx = np.diff(x)
        if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
            raise ValueError("FFT momentum needs a uniform grid")
        d = spectral_derivative(psi, float(dx[0]))
    mp = units.hbar * float(np.real(np.sum(w * np.conj(psi) * (-1j) * d))) / n
    p2 = units.hbar ** 2 * float(np.sum(w * np.abs(d) ** 2)) / n
    return Expectations(mx, mp, vx, p2 - mp * mp)


def free_width(amplitude: SpectralAmplitude, t, units: UnitsConfig = DEFAULT_UNITS):
    """Position spread of the free Gaussian packet at time ``t``."""
    s0 = amplitude.declared_width / 2
    sk = 1 / amplitude.declared_width
    return np.sqrt(s0 ** 2 + (units.hbar * sk * np.asarray(t) / units.mass) ** 2)


def epoch_of(spec: PotentialSpec, amplitude: SpectralAmplitude, t,
             units: UnitsConfig = DEFAULT_UNITS, widths: float = ASYMPTOTIC_WIDTHS) -> str:
    """``"pre"``, ``"post"`` or ``"interaction"`` from the free centroid
    ``-L + v t`` and the free spread at ``t``."""
    xbar = -amplitude.position_offset + units.velocity(amplitude.declared_center) * t
    margin = widths * free_width(amplitude, t, units)
    if xbar + margin <= spec.x1:
        return "pre"
    # the reflected centroid mirrors the incident one about x1, so it is
    # clear of the barrier whenever the transmitted one is
    if xbar - margin >= spec.x2:
        return "post"
    return "interaction"


def default_window(spec: PotentialSpec, amplitude: SpectralAmplitude, t_max: float,
                   units: UnitsConfig = DEFAULT_UNITS, t_min: float = 0.0) -> tuple[float, float]:
    """x-range holding the incident, reflected and transmitted packets for
    ``t_min <= t <= t_max`` with ten widths of margin."""
    v = units.velocity(amplitude.k_grid[-1])
    reach = amplitude.position_offset + v * max(abs(t_max), abs(t_min))
    margin = 10 * float(free_width(amplitude, max(abs(t_max), abs(t_min)), units))
    return spec.x1 - reach - margin, spec.x2 + reach + margin


class PacketSynthesizer:
    """Caches the stationary basis on a fixed (k, x) grid pair.

    ``basis_full[j]`` is the left-incident state at ``k_j`` and
    ``basis_ref[j]`` its reflection part (zero for ``x >= x_c(k_j)``); the
    transmission part is their difference. A packet at time ``t`` is then a
    single matrix-vector product.
    """

    def __init__(self, spec: PotentialSpec, amplitude: SpectralAmplitude,
                 grid: QuadratureGrid | None = None, units: UnitsConfig = DEFAULT_UNITS,
                 threads: int | None = None, t_max: float | None = None,
                 step: float = DEFAULT_DX, t_min: float = 0.0):
        self.spec = spec
        self.amplitude = amplitude
        self.units = units
        self.threads = default_threads() if threads is None else max(1, int(threads))
        k = amplitude.k_grid
        self.k = k

        Y = barrier_transfer_matrix(spec, k, units)
        self.q, self.p = np.asarray(Y.q), np.asarray(Y.p)
        self.params = scattering_params(Y, k, spec.x1, spec.x2)
        self.amps = subprocess_amplitudes(self.params)
        self.symmetric = is_symmetric(spec)[0]
        self.x_c = self._crossing_points()
        if self.mu_flips.size and self._flip_weight() > 1e-8:
            warnings.warn(
                f"mu changes sign inside the packet band at k = {self.mu_flips}; the "
                "reflection amplitude jumps there and subprocess norms approach "
                "their asymptotic values only slowly", stacklevel=2)
        lo, hi = self.corrected_support
        if self.symmetric:
            self.boundary = (spec.midpoint, spec.midpoint)
        else:
            self.boundary = (lo, hi)

        if grid is None:
            if t_max is None:
                raise ValueError("need either a grid or t_max")
            a, b = default_window(spec, amplitude, t_max, units, t_min)
            grid = packet_grid(a, b, self.breakpoints(), step)
        self.grid = grid
        kmax = max(max_local_wavenumber(spec, float(kk), units) for kk in (k[0], k[-1]))
        if kmax * grid.max_step > MAX_K_DX:
            raise GridResolutionError(
                f"max k*dx = {kmax * grid.max_step:.3g} exceeds pi/4; refine the x-grid"
            )
        self._bases: dict[str, np.ndarray] = {}

    def breakpoints(self) -> list[float]:
        """Positions where the stationary states have kinks or sector cuts."""
        pts = {self.spec.x1, self.spec.x2, self.spec.midpoint, *self.boundary}
        for s in self.spec.segments:
            pts.update((s.x_start, s.x_end))
        pts.update(d.position for d in self.spec.deltas)
        return sorted(pts)

    @property
    def mu_flips(self) -> np.ndarray:
        """Wavenumbers where ``mu`` changes sign *and* the reflection
        amplitude jumps.

        A flip through a transmission resonance is harmless (``A_ref`` passes
        through zero); a jump is recognized as a step in ``A_ref`` that is more
        than five times larger than the neighbouring steps.
        """
        defined = ~np.asarray(self.amps.degenerate)
        mu, k = np.asarray(self.amps.mu)[defined], self.k[defined]
        a = np.asarray(self.amps.a_ref_l_in)[defined]
        step = np.abs(np.diff(a))
        out = []
        for i in np.flatnonzero(np.diff(mu) != 0):
            local = max(step[max(i - 1, 0)], step[min(i + 1, len(step) - 1)])
            if step[i] > 5 * local:
                out.append(k[i + 1])
        return np.array(out)

    def _flip_weight(self) -> float:
        """Largest ``|A|``-weighted jump of ``A_ref`` at the flips, relative to
        the peak amplitude."""
        a = np.abs(self.amplitude.values)
        idx = np.searchsorted(self.k, self.mu_flips)
        jumps = np.abs(np.asarray(self.amps.a_ref_l_in)[idx]
                       - np.asarray(self.amps.a_ref_l_in)[idx - 1])
        return float(np.max(jumps * a[idx]) / np.max(a)) if idx.size else 0.0

    @property
    def corrected_support(self) -> tuple[float, float]:
        defined = ~np.asarray(self.amps.degenerate)
        if not defined.any():
            return self.spec.x1, self.spec.x2
        xc = self.x_c[defined]
        return min(self.spec.x1, float(xc.min())), max(self.spec.x2, float(xc.max()))

    def _crossing_points(self) -> np.ndarray:
        """x_c on the k-grid, following a single node continuously.

        The node nearest the midpoint is taken at the grid point closest to
        ``k0`` and tracked outwards; picking the nearest node independently
        at every k can jump between nodes, and a jump leaves a slowly
        decaying residue near the barrier in the reflected packet.
        """
        defined = ~np.asarray(self.amps.degenerate)
        idx = np.flatnonzero(defined)
        if idx.size == 0:
            return np.full(self.k.shape, self.spec.midpoint)
        xc = np.full(self.k.shape, np.nan)
        if self.symmetric:
            xc[idx] = self.spec.midpoint
        else:
            anchor = idx[np.argmin(np.abs(self.k[idx] - self.amplitude.declared_center))]
            xc[anchor] = find_xc(self.spec, float(self.k[anchor]), self.units).x_c

            mu = np.asarray(self.amps.mu)

            def walk(order):
                prev, last = xc[anchor], anchor
                for i in order:
                    # a flip of mu swaps the root, so the old node means nothing
                    near = prev if mu[i] == mu[last] else None
                    prev = xc[i] = find_xc(self.spec, float(self.k[i]), self.units,
                                           near=near).x_c
                    last = i

            up, down = idx[idx > anchor], idx[idx < anchor][::-1]
            with ThreadPoolExecutor(2) as ex:
                for f in [ex.submit(walk, up), ex.submit(walk, down)]:
                    f.result()
        if idx.size < len(xc):
            # resonance rows carry no reflection part; x_c is cosmetic there
            xc = np.interp(self.k, self.k[idx], xc[idx])
        return xc

    # -- stationary bases ---------------------------------------------------

    def _chunks(self):
        n = len(self.k)
        size = max(1, math.ceil(n / self.threads))
        return [slice(i, min(n, i + size)) for i in range(0, n, size)]

    def _build(self, which: str) -> np.ndarray:
        x = self.grid.x
        b = np.conj(self.p) / self.q

        def run(sl):
            if which.startswith("full"):
                a = np.ones(sl.stop - sl.start, dtype=complex)
            else:
                a = np.asarray(self.amps.a_ref_l_in)[sl]
            psi, dpsi = propagate(self.spec, self.k[sl], a, b[sl], x, self.units)
            out = dpsi if which.endswith("_d") else psi
            if which.startswith("ref"):
                out = np.where(x[None, :] < self.x_c[sl, None], out, 0)
            return out

        with ThreadPoolExecutor(self.threads) as ex:
            return np.concatenate(list(ex.map(run, self._chunks())), axis=0)

    def basis(self, which: str) -> np.ndarray:
        """``"full"``, ``"ref"`` and their ``_d`` derivatives (cached)."""
        if which not in ("full", "ref", "full_d", "ref_d"):
            raise ValueError(f"unknown basis {which!r}")
        if which not in self._bases:
            self._bases[which] = self._build(which)
        return self._bases[which]

    def coefficients(self, t) -> np.ndarray:
        """``w_j A_j exp(-i E_j t / hbar) / sqrt(2 pi)`` with shape ``(nt, nk)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        A = self.amplitude
        e = self.units.energy(self.k)
        phase = np.exp(-1j * np.outer(t, e) / self.units.hbar)
        return phase * (A.weights * A.values / math.sqrt(2 * math.pi))[None, :]

    def values(self, which: str, t) -> np.ndarray:
        """Packet samples with shape ``(nt, nx)``; ``"tr"`` is full minus ref."""
        c = self.coefficients(t)
        if which.startswith("tr"):
            suffix = which[2:]
            return c @ self.basis("full" + suffix) - c @ self.basis("ref" + suffix)
        return c @ self.basis(which)

    def packet(self, which: str, t: float, derivative: bool = False) -> PacketState:
        labels = {"full": PacketLabel.FULL, "tr": PacketLabel.TRANSMITTED,
                  "ref": PacketLabel.REFLECTED}
        if which not in labels:
            raise ValueError(f"unknown packet {which!r}")
        psi = self.values(which, t)[0]
        d = self.values(which + "_d", t)[0] if derivative else None
        norm = float(np.sum(self.grid.w * np.abs(psi) ** 2))
        return PacketState(self.grid.x, psi, float(t), norm, labels[which], self.grid.w, d)

    # -- spectral quantities --------------------------------------------------

    def spectral_norms(self) -> PacketNorms:
        """``T_bar = int T |A|^2 dk`` and ``R_bar = int R |A|^2 dk``."""
        A = self.amplitude
        return PacketNorms(A.integrate(self.params.T).real, A.integrate(self.params.R).real)

    def overlap_spectral(self) -> complex:
        """``<Psi_tr_in | Psi_ref_in> = int |A|^2 conj(A_tr) A_ref dk``."""
        a_tr = np.asarray(self.amps.a_tr_l_in)
        a_ref = np.asarray(self.amps.a_ref_l_in)
        return self.amplitude.integrate(np.conj(a_tr) * a_ref)

    def overlap_x(self, t: float) -> complex:
        """The same scalar product by x-quadrature of the synthesized packets."""
        tr, ref = self.values("tr", t)[0], self.values("ref", t)[0]
        return self.grid.integrate(np.conj(tr) * ref)

    # -- asymptotes -----------------------------------------------------------

    def _free(self, amps, sign: int, t, x) -> np.ndarray:
        c = self.coefficients(t)[0] * amps
        return c @ np.exp(sign * 1j * np.outer(self.k, x))

    def in_asymptote(self, t: float, x=None, which: str = "full") -> np.ndarray:
        """Free evolution of the incident packet, scaled by the subprocess
        amplitude for ``which`` in ``{"tr", "ref"}``."""
        x = self.grid.x if x is None else np.asarray(x, dtype=float)
        scale = {"full": 1.0, "tr": np.asarray(self.amps.a_tr_l_in),
                 "ref": np.asarray(self.amps.a_ref_l_in)}[which]
        return self._free(np.broadcast_to(scale, self.k.shape), 1, t, x)

    def out_asymptote(self, t: float, x=None) -> tuple[np.ndarray, np.ndarray]:
        """``(Psi_R_out, Psi_L_out)``: free packets with amplitudes ``A/q``
        moving right and ``A p*/q`` moving left."""
        x = self.grid.x if x is None else np.asarray(x, dtype=float)
        return self._free(1 / self.q, 1, t, x), self._free(np.conj(self.p) / self.q, -1, t, x)

    def asymptote_state(self, kind: str, t: float,
                        representation: Representation = Representation.K_REP,
                        x=None) -> TwoComponentState:
        """Two-component column of the in- or out-asymptote.

        ``x_rep`` samples the components on ``x`` (default: the packet grid)
        with the corrected supports as split. ``k_rep`` Fourier transforms
        the components sampled on a uniform ``x`` grid, so the reported
        leakage is a measured quantity rather than a construction artifact.
        """
        if kind not in ("in", "out"):
            raise ValueError("kind must be 'in' or 'out'")
        lo, hi = self.corrected_support
        if representation is Representation.X_REP:
            xs = self.grid.x if x is None else np.asarray(x, dtype=float)
            if kind == "in":
                up, down = self.in_asymptote(t, xs), np.zeros(xs.shape, dtype=complex)
            else:
                right, left = self.out_asymptote(t, xs)
                up, down = left, right
            w = self.grid.w if x is None else None
            return TwoComponentState(Representation.X_REP, xs, up, down, (lo, hi), w)

        if x is None:
            a, b = self.grid.x[0], self.grid.x[-1]
            n = 1 << math.ceil(math.log2((b - a) / (0.5 * MAX_K_DX / self.k[-1])))
            x = np.linspace(a, b, n, endpoint=False)
        x = np.asarray(x, dtype=float)
        dx = x[1] - x[0]
        if kind == "in":
            moving_right, moving_left = self.in_asymptote(t, x), np.zeros(x.shape, dtype=complex)
        else:
            moving_right, moving_left = self.out_asymptote(t, x)
        kk = np.fft.fftshift(2 * np.pi * np.fft.fftfreq(len(x), d=dx))

        def ft(f):
            # unitary continuous transform up to a phase that drops out of |.|^2
            return np.fft.fftshift(np.fft.fft(f)) * dx / math.sqrt(2 * math.pi)

        w = np.full(kk.shape, kk[1] - kk[0])
        return TwoComponentState(Representation.K_REP, kk, ft(moving_right), ft(moving_left),
                                 (0.0, 0.0), w)

    # -- time histories --------------------------------------------------------

    def history(self, t_grid, widths: float = ASYMPTOTIC_WIDTHS) -> NormHistory:
        t = np.asarray(t_grid, dtype=float)
        lo, hi = self.boundary
        w = self.grid.w
        w_left = self.grid.weights_between(hi=lo)
        w_right = self.grid.weights_between(lo=hi)
        x = self.grid.x
        full = self.values("full", t)
        ref = self.values("ref", t)
        tr = full - ref
        d_full, d_tr, d_ref = (np.abs(a) ** 2 for a in (full, tr, ref))
        n_tr, n_ref = d_tr @ w, d_ref @ w
        with np.errstate(invalid="ignore", divide="ignore"):
            mx_tr = (d_tr @ (w * x)) / n_tr
            mx_ref = (d_ref @ (w * x)) / n_ref
        epochs = tuple(epoch_of(self.spec, self.amplitude, ti, self.units, widths) for ti in t)
        return NormHistory(t, d_full @ w, n_tr, n_ref, mx_tr, mx_ref,
                           d_full @ w_right, d_full @ w_left, epochs)


def _synth(spec, amplitude, x_grid, units, t):
    if isinstance(x_grid, QuadratureGrid) or x_grid is None:
        return PacketSynthesizer(spec, amplitude, x_grid, units,
                                 t_max=None if x_grid is not None else max(abs(t), 1.0))
    x = np.asarray(x_grid, dtype=float)
    grid = QuadratureGrid(x, trapezoid_k_weights(x), ((0, len(x) - 1),), (x[0], x[-1]))
    return PacketSynthesizer(spec, amplitude, grid, units)


def synthesize_full(spec: PotentialSpec, amplitude: SpectralAmplitude, t: float,
                    x_grid=None, units: UnitsConfig = DEFAULT_UNITS) -> PacketState:
    """Whole-process packet at time ``t``. A plain array ``x_grid`` is
    integrated with the trapezoid rule; pass a :class:`QuadratureGrid` for
    breakpoint-aligned Simpson weights."""
    return _synth(spec, amplitude, x_grid, units, t).packet("full", t)


def synthesize_subprocess(spec: PotentialSpec, amplitude: SpectralAmplitude, t: float,
                          which: str, x_grid=None,
                          units: UnitsConfig = DEFAULT_UNITS) -> PacketState:
    key = {"transmitted": "tr", "tr": "tr", "reflected": "ref", "ref": "ref"}.get(which)
    if key is None:
        raise ValueError("which must be 'transmitted' or 'reflected'")
    return _synth(spec, amplitude, x_grid, units, t).packet(key, t)


def subprocess_overlap(spec: PotentialSpec, amplitude: SpectralAmplitude,
                       units: UnitsConfig = DEFAULT_UNITS) -> complex:
    """``i int mu sqrt(T R) |A|^2 dk`` evaluated from the subprocess amplitudes."""
    Y = barrier_transfer_matrix(spec, amplitude.k_grid, units)
    par = scattering_params(Y, amplitude.k_grid, spec.x1, spec.x2)
    amps = subprocess_amplitudes(par)
    return amplitude.integrate(np.conj(amps.a_tr_l_in) * amps.a_ref_l_in)


def norm_history(spec: PotentialSpec, amplitude: SpectralAmplitude, t_grid,
                 units: UnitsConfig = DEFAULT_UNITS, threads: int | None = None,
                 step: float = DEFAULT_DX) -> NormHistory:
    t = np.asarray(t_grid, dtype=float)
    synth = PacketSynthesizer(spec, amplitude, None, units, threads,
                              t_max=float(np.max(np.abs(t))), step=step)
    return synth.history(t)


def split_step_evolve(spec: PotentialSpec, psi0, x, t: float, dt: float,
                      units: UnitsConfig = DEFAULT_UNITS) -> np.ndarray:
    """Strang-split Fourier propagation on a uniform periodic grid.

    Only flat segments are represented (sampled at the nodes), so this is a
    low-order cross-check, not a reference solution.
    """
    if spec.deltas:
        raise ValueError("split-step cross-check does not handle delta spikes")
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    n_steps = max(1, int(round(t / dt)))
    h = t / n_steps
    kk = 2 * np.pi * np.fft.fftfreq(len(x), d=dx)
    kinetic = np.exp(-1j * units.hbar * kk ** 2 / (2 * units.mass) * h)
    half_v = np.exp(-0.5j * evaluate(spec, x) * h / units.hbar)
    psi = np.asarray(psi0, dtype=complex)
    for _ in range(n_steps):
        psi = half_v * np.fft.ifft(kinetic * np.fft.fft(half_v * psi))
    return psi
