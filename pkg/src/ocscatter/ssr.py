"""
Scattering matrices and the sigma_3 sector bookkeeping for two-component
asymptotes.

Column conventions (they differ and must not be mixed up):

* ``k_rep``: upper = right-moving waves (support k > 0), lower = left-moving
  waves (support k < 0). ``S_k`` maps ``(A_L,in, A_R,in)`` to
  ``(A_R,out, A_L,out)``.
* ``x_rep``: upper = left region (x < left edge), lower = right region
  (x > right edge). ``S_x`` maps ``(A_L,in, A_R,in)`` to
  ``(A_L,out, A_R,out)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .transfer import TransferMatrix

LEAKAGE_TOL = 1e-8


class Representation(enum.Enum):
    K_REP = "k_rep"
    X_REP = "x_rep"


class Sector(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    MIXED = "mixed"


class SupportOverlapError(ValueError):
    pass


@dataclass(frozen=True)
class ScatteringMatrixPair:
    s_k: np.ndarray
    s_x: np.ndarray
    k: float | np.ndarray

    def unitarity_residual(self) -> tuple[float, float]:
        """Largest ``||S^dag S - I||`` (max-abs entry) of both matrices."""
        eye = np.eye(2)
        res = []
        for s in (self.s_k, self.s_x):
            prod = np.conj(np.swapaxes(s, -1, -2)) @ s
            res.append(float(np.max(np.abs(prod - eye))))
        return res[0], res[1]


def s_matrices(Y: TransferMatrix) -> ScatteringMatrixPair:
    """``S_k = [[1, -p], [p*, 1]] / q`` and ``S_x = [[p*, 1], [1, -p]] / q``."""
    q, p = np.asarray(Y.q), np.asarray(Y.p)
    one = np.ones_like(q)
    s_k = np.stack([np.stack([one, -p], -1), np.stack([np.conj(p), one], -1)], -2)
    s_x = np.stack([np.stack([np.conj(p), one], -1), np.stack([one, -p], -1)], -2)
    s_k = s_k / q[..., None, None]
    s_x = s_x / q[..., None, None]
    return ScatteringMatrixPair(s_k, s_x, Y.k)


@dataclass(frozen=True)
class TwoComponentState:
    """Two sampled components on a common grid.

    ``split`` gives the declared supports: in ``k_rep`` upper lives on
    ``k > split[1]`` and lower on ``k < split[0]`` (both default 0); in
    ``x_rep`` upper lives on ``x < split[0]`` and lower on ``x > split[1]``.
    """

    representation: Representation
    grid: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    split: tuple[float, float] = (0.0, 0.0)
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.upper.shape != self.grid.shape or self.lower.shape != self.grid.shape:
            raise ValueError("components must be sampled on the grid")

    def quad(self) -> np.ndarray:
        return trapezoid_weights(self.grid) if self.weights is None else self.weights

    def support_masks(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.split
        if self.representation is Representation.K_REP:
            return self.grid > hi, self.grid < lo
        return self.grid < lo, self.grid > hi

    def component_norms(self) -> tuple[float, float]:
        w = self.quad()
        return float(np.sum(w * np.abs(self.upper) ** 2)), float(np.sum(w * np.abs(self.lower) ** 2))

    def norm2(self) -> float:
        a, b = self.component_norms()
        return a + b

    def inner(self, other: "TwoComponentState") -> complex:
        """Column scalar product: sum of the componentwise products."""
        w = self.quad()
        return complex(np.sum(w * (np.conj(self.upper) * other.upper
                                   + np.conj(self.lower) * other.lower)))

    def map(self, fn) -> "TwoComponentState":
        """Apply ``fn`` to both components (a sector-preserving operator)."""
        return replace(self, upper=fn(self.upper), lower=fn(self.lower))


def trapezoid_weights(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        return np.ones_like(grid)
    d = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def sigma3_apply(state: TwoComponentState) -> TwoComponentState:
    return replace(state, lower=-state.lower)


def project_plus(state: TwoComponentState) -> TwoComponentState:
    return replace(state, lower=np.zeros_like(state.lower))


def project_minus(state: TwoComponentState) -> TwoComponentState:
    return replace(state, upper=np.zeros_like(state.upper))


@dataclass(frozen=True)
class SectorReport:
    sector: Sector
    weight_plus: float
    weight_minus: float
    leakage: float


def sector_classify(state: TwoComponentState, tol: float = LEAKAGE_TOL) -> SectorReport:
    """Sector label from the component weights.

    ``leakage`` is the fraction of the total norm that sits outside the
    declared supports (upper outside its region plus lower outside its).
    """
    w = state.quad()
    up2, lo2 = np.abs(state.upper) ** 2, np.abs(state.lower) ** 2
    n_up, n_lo = float(np.sum(w * up2)), float(np.sum(w * lo2))
    total = n_up + n_lo
    if not total > 0:
        raise ValueError("cannot classify a zero-norm state")
    m_up, m_lo = state.support_masks()
    leak = float(np.sum(w * up2 * ~m_up) + np.sum(w * lo2 * ~m_lo)) / total
    wp, wm = n_up / total, n_lo / total
    if wm <= tol:
        sector = Sector.PLUS
    elif wp <= tol:
        sector = Sector.MINUS
    else:
        sector = Sector.MIXED
    return SectorReport(sector, wp, wm, leak)


def support_overlap(psi_a, psi_b, weights) -> float:
    """``int |psi_a| |psi_b| / (||psi_a|| ||psi_b||)``; 0 for disjoint packets."""
    na = np.sqrt(np.sum(weights * np.abs(psi_a) ** 2))
    nb = np.sqrt(np.sum(weights * np.abs(psi_b) ** 2))
    return float(np.sum(weights * np.abs(psi_a) * np.abs(psi_b)) / (na * nb))


def expectation(obs, psi, weights) -> float:
    """``<psi|O|psi>`` for a diagonal (1-D array) or dense (2-D) kernel."""
    obs = np.asarray(obs)
    if obs.ndim == 1:
        return float(np.real(np.sum(weights * obs * np.abs(psi) ** 2)))
    return float(np.real(np.sum(weights * np.conj(psi) * (obs @ (weights * psi)))))


def phase_invariance_check(obs, psi_a, psi_b, lam: float, nu: float, grid,
                           overlap_tol: float = 1e-10) -> tuple[float, float]:
    """Expectations of ``obs`` in ``psi_a + e^{i lam} psi_b`` and
    ``psi_a + e^{i nu} psi_b``.

    The packets must not overlap (their normalized ``|psi_a||psi_b|`` integral
    must stay below ``overlap_tol``); for local kernels the two numbers then
    coincide.
    """
    w = trapezoid_weights(grid)
    psi_a, psi_b = np.asarray(psi_a), np.asarray(psi_b)
    ov = support_overlap(psi_a, psi_b, w)
    if ov > overlap_tol:
        raise SupportOverlapError(f"packets overlap (overlap measure {ov:.3g})")
    e_lam = expectation(obs, psi_a + np.exp(1j * lam) * psi_b, w)
    e_nu = expectation(obs, psi_a + np.exp(1j * nu) * psi_b, w)
    return e_lam, e_nu
