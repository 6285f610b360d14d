"""Procrustes-type estimation of isotropic and uni-directional anisotropic growth.

A query pattern ``Z'`` is matched to a centered template pattern ``Z``
through the growth map

    z  |->  lam * exp(1j*beta) * ((2 + tau)/2 * z + tau/2 * exp(2j*gamma) * conj(z))

which composes rotation by ``beta``, isotropic scaling by ``lam > 0`` and an
additional stretch of rate ``tau >= 0`` along the axis ``exp(1j*gamma)``.
``estimate`` fits the four parameters by cyclic coordinate descent on the
squared-residual objective ``distance_functional``; every sweep applies, in
the order beta, lam, gamma, tau, the exact minimizer of the objective in one
coordinate with the remaining three held fixed, so the objective never
increases along the iteration.

Setting ``tau == 0`` and skipping the axis estimate reduces the fit to Full
Procrustes alignment (rotation and scale, :func:`full_procrustes`);
additionally forcing ``lam == 1`` gives Partial Procrustes alignment
(rotation only, :func:`partial_procrustes`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfigurationError, InvalidInputError
from .patterns import Identifier, MatchedPair, StudyDataset

#: Unit-value updates with a numerator smaller than this keep the previous
#: value (the argmax of a zero linear form is undefined).
TIE_EPS = 1e-14

#: Lower clamp for the scale update; keeps lam strictly positive when a
#: pathological instance drives the unconstrained minimizer to zero.
LAM_FLOOR = 1e-12

#: Below this tau the anisotropy axis carries no information and the
#: gamma_meaningless diagnostic is set.
TAU_MEANINGLESS = 1e-8

#: Relative threshold on (sum|z|^2 - |sum z^2|) under which a centered
#: template is treated as collinear (axis weakly identified).
COLLINEAR_RTOL = 1e-12

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Reduce an angle (or array of angles) to [-pi, pi)."""
    return (np.asarray(theta) + math.pi) % TWO_PI - math.pi


def wrap_axis(gamma):
    """Reduce an axis angle (or array) to [0, pi)."""
    return np.asarray(gamma) % math.pi


@dataclass(frozen=True)
class GrowthParams:
    """The parameter tuple (gamma, beta, tau, lam) of the growth model.

    ``gamma`` is the anisotropy axis in [0, pi), ``beta`` the rotation in
    [-pi, pi), ``tau >= 0`` the anisotropy rate and ``lam > 0`` the isotropic
    rate.  Angles outside their canonical ranges are reduced on construction.
    """

    gamma: float
    beta: float
    tau: float
    lam: float

    def __post_init__(self):
        values = (self.gamma, self.beta, self.tau, self.lam)
        if not all(math.isfinite(v) for v in values):
            raise InvalidInputError("growth parameters must be finite")
        if self.tau < 0:
            raise InvalidInputError("tau must be >= 0, got %g" % self.tau)
        if self.lam <= 0:
            raise InvalidInputError("lam must be > 0, got %g" % self.lam)
        object.__setattr__(self, "gamma", float(wrap_axis(self.gamma)))
        object.__setattr__(self, "beta", float(wrap_angle(self.beta)))

    @property
    def e2igamma(self) -> complex:
        """The axis as the unit value exp(2j*gamma), the invariant object."""
        return complex(np.exp(2j * self.gamma))

    @property
    def eibeta(self) -> complex:
        return complex(np.exp(1j * self.beta))


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule of the alternating minimization.

    The iteration breaks once the sum of squared parameter increments of a
    full sweep falls below ``epsilon``.
    """

    epsilon: float = 1e-10
    max_iterations: int = 1000
    tau_floor: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise InvalidInputError("epsilon must be > 0")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")


@dataclass(frozen=True)
class EstimateResult:
    """A converged (or best-so-far) fit with diagnostics."""

    params: GrowthParams
    iterations: int
    final_objective: float
    converged: bool
    gamma_meaningless: bool
    collinear: bool
    n: int


@dataclass(frozen=True)
class EstimateRow:
    """One study estimate, keyed by (finger_id, impression_id)."""

    finger_id: Identifier
    impression_id: Identifier
    gamma: float
    beta: float
    tau: float
    lam: float
    n: int
    iterations: int
    final_objective: float
    converged: bool = True
    gamma_meaningless: bool = False
    collinear: bool = False

    @property
    def params(self) -> GrowthParams:
        return GrowthParams(self.gamma, self.beta, self.tau, self.lam)


@dataclass(frozen=True)
class EstimateTable:
    """Per-(finger, impression) growth estimates over a study."""

    rows: tuple[EstimateRow, ...]
    failures: tuple[tuple[Identifier, Identifier, str], ...] = ()

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def gammas(self) -> np.ndarray:
        return np.array([r.gamma for r in self.rows])

    def betas(self) -> np.ndarray:
        return np.array([r.beta for r in self.rows])

    def taus(self) -> np.ndarray:
        return np.array([r.tau for r in self.rows])

    def lams(self) -> np.ndarray:
        return np.array([r.lam for r in self.rows])

    def doubled_gammas(self) -> np.ndarray:
        """The doubled axis angles 2*gamma_hat, wrapped to [-pi, pi)."""
        return wrap_angle(2.0 * self.gammas())


def _centered_arrays(pair: MatchedPair) -> tuple[np.ndarray, np.ndarray]:
    if not (pair.template.centered and pair.query.centered):
        raise InvalidInputError("pair must be centered; call pair.centered() first")
    return pair.template.points, pair.query.points


def _check_nondegenerate(z: np.ndarray):
    if not np.any(z != 0):
        raise DegenerateConfigurationError("all template points are zero")


def growth_transform(z: np.ndarray, params: GrowthParams) -> np.ndarray:
    """Apply the growth map to complex points ``z``."""
    u = params.e2igamma
    p = (2.0 + params.tau) / 2.0
    q = params.tau / 2.0
    return params.lam * params.eibeta * (p * z + q * u * np.conj(z))


def distance_functional(pair: MatchedPair, params: GrowthParams) -> float:
    """Sum of squared residuals of the growth map on a centered pair.

    F(Z, Z'; gamma, beta, tau, lam)
        = sum_j | z'_j - lam e^{i beta} ((2+tau)/2 z_j + tau/2 e^{2i gamma} conj(z_j)) |^2
    """
    z, zp = _centered_arrays(pair)
    r = zp - growth_transform(z, params)
    return float(np.sum(r.real**2 + r.imag**2))


# ---------------------------------------------------------------------------
# Conditional minimizers.
#
# Each update solves argmin of the objective in its own coordinate, holding
# the other three fixed.  The unit-value updates are normalized complex sums;
# the real updates are ratios of a real inner product to a sum of squared
# magnitudes.  tau is projected to [0, inf), lam clamped to stay positive.
# ---------------------------------------------------------------------------


def update_gamma(
    pair: MatchedPair,
    beta: float,
    tau: float,
    lam: float,
    previous: complex = 1.0 + 0.0j,
) -> complex:
    """Optimal axis unit value exp(2j*gamma) given (beta, tau, lam).

    When the numerator has magnitude below :data:`TIE_EPS` (e.g. for tau = 0
    on noise-free data) the previous unit value is retained.
    """
    z, zp = _centered_arrays(pair)
    _check_nondegenerate(z)
    v = np.exp(1j * beta)
    a = zp - lam * v * ((2.0 + tau) / 2.0) * z
    num = np.sum(a * z)
    if abs(num) < TIE_EPS:
        return complex(previous)
    return complex(np.conj(v) * num / abs(num))


def update_beta(
    pair: MatchedPair,
    e2igamma: complex,
    tau: float,
    lam: float,
    previous: complex = 1.0 + 0.0j,
) -> complex:
    """Optimal rotation unit value exp(1j*beta) given (gamma, tau, lam).

    ``lam`` does not move the argmax (it scales the linear form by a positive
    constant) but is kept for a uniform update signature.
    """
    del lam
    z, zp = _centered_arrays(pair)
    _check_nondegenerate(z)
    num = np.sum(zp * ((2.0 + tau) / 2.0 * np.conj(z) + tau / 2.0 * np.conj(e2igamma) * z))
    if abs(num) < TIE_EPS:
        return complex(previous)
    return complex(num / abs(num))


def update_tau(pair: MatchedPair, e2igamma: complex, beta: float, lam: float) -> float:
    """Optimal stretch rate given (gamma, beta, lam), projected to [0, inf)."""
    z, zp = _centered_arrays(pair)
    _check_nondegenerate(z)
    v = np.exp(1j * beta)
    r = zp - lam * v * z
    s = z + e2igamma * np.conj(z)
    den = float(np.sum(s.real**2 + s.imag**2))
    if den <= TIE_EPS * float(np.sum(z.real**2 + z.imag**2)):
        raise DegenerateConfigurationError(
            "stretch direction is orthogonal to a collinear pattern"
        )
    num = float(np.sum((np.conj(r) * v * s).real))
    return max((2.0 / lam) * num / den, 0.0)


def update_lambda(pair: MatchedPair, e2igamma: complex, beta: float, tau: float) -> float:
    """Optimal isotropic rate given (gamma, beta, tau), kept strictly positive."""
    z, zp = _centered_arrays(pair)
    _check_nondegenerate(z)
    v = np.exp(1j * beta)
    w = (2.0 + tau) / 2.0 * z + tau / 2.0 * e2igamma * np.conj(z)
    den = float(np.sum(w.real**2 + w.imag**2))
    num = float(np.sum((np.conj(zp) * v * w).real))
    return max(num / den, LAM_FLOOR)


# ---------------------------------------------------------------------------
# Alternating minimization.
#
# The solver works on zero-padded (batch, n_max) arrays so that whole
# simulation studies can be fitted in one call; padded points contribute
# nothing to any of the sums.  Every per-pair quantity reduces to five
# sufficient statistics, so one sweep costs O(batch) after an O(batch * n)
# precomputation.
# ---------------------------------------------------------------------------


@dataclass
class _BatchFit:
    gamma: np.ndarray
    beta: np.ndarray
    tau: np.ndarray
    lam: np.ndarray
    iterations: np.ndarray
    final_objective: np.ndarray
    converged: np.ndarray
    collinear: np.ndarray


def _estimate_arrays(z: np.ndarray, zp: np.ndarray, config: SolverConfig) -> _BatchFit:
    """Fit every row of zero-padded (batch, n_max) template/query arrays."""
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    zp = np.atleast_2d(np.asarray(zp, dtype=np.complex128))
    nb = z.shape[0]

    t1 = np.sum(z.real**2 + z.imag**2, axis=1)
    t2 = np.sum(z * z, axis=1)
    s1 = np.sum(zp * np.conj(z), axis=1)
    s2 = np.sum(zp * z, axis=1)
    p1 = np.sum(zp.real**2 + zp.imag**2, axis=1)
    if np.any(t1 <= 0.0):
        raise DegenerateConfigurationError("a template pattern has all points zero")
    collinear = (t1 - np.abs(t2)) <= COLLINEAR_RTOL * t1

    u = np.ones(nb, dtype=np.complex128)  # exp(2j*gamma)
    v = np.ones(nb, dtype=np.complex128)  # exp(1j*beta)
    tau = np.zeros(nb)
    lam = np.ones(nb)
    iterations = np.zeros(nb, dtype=np.int64)
    active = np.ones(nb, dtype=bool)

    for sweep in range(config.max_iterations):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        ui, vi, taui, lami = u[idx], v[idx], tau[idx], lam[idx]
        s1i, s2i, t1i, t2i = s1[idx], s2[idx], t1[idx], t2[idx]

        p = (2.0 + taui) / 2.0
        q = taui / 2.0

        num_b = p * s1i + q * np.conj(ui) * s2i
        mag = np.abs(num_b)
        v_new = np.where(mag < TIE_EPS, vi, num_b / np.where(mag == 0.0, 1.0, mag))

        num_d = (v_new * (p * np.conj(s1i) + q * ui * np.conj(s2i))).real
        den_d = (p * p + q * q) * t1i + 2.0 * p * q * (np.conj(ui) * t2i).real
        lam_new = np.maximum(num_d / den_d, LAM_FLOOR)

        num_a = s2i - lam_new * v_new * p * t2i
        mag = np.abs(num_a)
        u_new = np.where(
            mag < TIE_EPS, ui, np.conj(v_new) * num_a / np.where(mag == 0.0, 1.0, mag)
        )

        num_c = (
            v_new * np.conj(s1i)
            + v_new * u_new * np.conj(s2i)
            - lam_new * u_new * np.conj(t2i)
        ).real - lam_new * t1i
        den_c = 2.0 * t1i + 2.0 * (np.conj(u_new) * t2i).real
        safe = den_c > TIE_EPS * t1i
        tau_new = np.where(
            safe,
            np.maximum((2.0 / lam_new) * num_c / np.where(safe, den_c, 1.0), 0.0),
            taui,
        )

        increment = (
            np.abs(u_new - ui) ** 2
            + np.abs(v_new - vi) ** 2
            + (tau_new - taui) ** 2
            + (lam_new - lami) ** 2
        )

        u[idx], v[idx], tau[idx], lam[idx] = u_new, v_new, tau_new, lam_new
        iterations[idx] = sweep + 1
        active[idx[increment < config.epsilon]] = False

    p = (2.0 + tau) / 2.0
    q = tau / 2.0
    num_d = (v * (p * np.conj(s1) + q * u * np.conj(s2))).real
    den_d = (p * p + q * q) * t1 + 2.0 * p * q * (np.conj(u) * t2).real
    final_objective = np.maximum(p1 - 2.0 * lam * num_d + lam**2 * den_d, 0.0)

    gamma = (np.angle(u) / 2.0) % math.pi
    beta = wrap_angle(np.angle(v))
    return _BatchFit(
        gamma=gamma,
        beta=beta,
        tau=tau,
        lam=lam,
        iterations=iterations,
        final_objective=final_objective,
        converged=~active,
        collinear=collinear,
    )


def estimate(pair: MatchedPair, config: SolverConfig | None = None) -> EstimateResult:
    """Fit (gamma, beta, tau, lam) to a matched pair.

    The patterns are centered internally before iteration.  Initialization
    is the identity transform (beta = gamma = 0, tau = 0, lam = 1); each
    sweep updates beta, lam, gamma, tau in that order and the iteration
    stops when the summed squared increments fall below ``config.epsilon``.

    Returns an :class:`EstimateResult` whose ``converged`` flag is False if
    ``config.max_iterations`` was reached first, in which case the best-so-far
    parameters are reported.  ``gamma_meaningless`` is set when the fitted
    tau is below :data:`TAU_MEANINGLESS`; ``collinear`` warns that the axis
    is weakly identified.
    """
    config = config or SolverConfig()
    if pair.n < 3:
        raise InvalidInputError("estimation requires n >= 3, got n = %d" % pair.n)
    centered = pair.centered()
    fit = _estimate_arrays(
        centered.template.points[None, :], centered.query.points[None, :], config
    )
    params = GrowthParams(
        gamma=float(fit.gamma[0]),
        beta=float(fit.beta[0]),
        tau=float(fit.tau[0]),
        lam=float(fit.lam[0]),
    )
    return EstimateResult(
        params=params,
        iterations=int(fit.iterations[0]),
        final_objective=float(fit.final_objective[0]),
        converged=bool(fit.converged[0]),
        gamma_meaningless=bool(fit.tau[0] < TAU_MEANINGLESS),
        collinear=bool(fit.collinear[0]),
        n=pair.n,
    )


def _padded_study_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    n_max = max(pair.n for pair in pairs)
    z = np.zeros((len(pairs), n_max), dtype=np.complex128)
    zp = np.zeros((len(pairs), n_max), dtype=np.complex128)
    for i, pair in enumerate(pairs):
        centered = pair.centered()
        z[i, : pair.n] = centered.template.points
        zp[i, : pair.n] = centered.query.points
    return z, zp


def estimate_study(
    dataset: StudyDataset | list | tuple,
    config: SolverConfig | None = None,
) -> EstimateTable:
    """Fit every pair of a study in one batched solve.

    Pairs with fewer than three minutiae cannot be estimated; they are
    excluded from the table and recorded in ``EstimateTable.failures``.
    """
    config = config or SolverConfig()
    pairs = list(dataset)
    failures = []
    usable = []
    for pair in pairs:
        if pair.n < 3:
            failures.append(
                (pair.finger_id, pair.impression_id, "n = %d < 3" % pair.n)
            )
        else:
            usable.append(pair)
    if not usable:
        return EstimateTable(rows=(), failures=tuple(failures))
    z, zp = _padded_study_arrays(usable)
    fit = _estimate_arrays(z, zp, config)
    rows = tuple(
        EstimateRow(
            finger_id=pair.finger_id,
            impression_id=pair.impression_id,
            gamma=float(fit.gamma[i]),
            beta=float(fit.beta[i]),
            tau=float(fit.tau[i]),
            lam=float(fit.lam[i]),
            n=pair.n,
            iterations=int(fit.iterations[i]),
            final_objective=float(fit.final_objective[i]),
            converged=bool(fit.converged[i]),
            gamma_meaningless=bool(fit.tau[i] < TAU_MEANINGLESS),
            collinear=bool(fit.collinear[i]),
        )
        for i, pair in enumerate(usable)
    )
    return EstimateTable(rows=rows, failures=tuple(failures))


# ---------------------------------------------------------------------------
# Procrustes special cases (closed form, no iteration).
# ---------------------------------------------------------------------------


def partial_procrustes(pair: MatchedPair) -> float:
    """Optimal rotation angle aligning template to query (no scaling)."""
    z, zp = _centered_arrays(pair)
    num = np.sum(zp * np.conj(z))
    if abs(num) < TIE_EPS:
        raise DegenerateConfigurationError("rotation is undefined for this pair")
    return float(wrap_angle(np.angle(num)))


def full_procrustes(pair: MatchedPair) -> tuple[float, float]:
    """Optimal (rotation angle, scale) aligning template to query."""
    z, zp = _centered_arrays(pair)
    num = np.sum(zp * np.conj(z))
    t1 = float(np.sum(z.real**2 + z.imag**2))
    if t1 <= 0.0 or abs(num) < TIE_EPS:
        raise DegenerateConfigurationError("similarity is undefined for this pair")
    return float(wrap_angle(np.angle(num))), float(abs(num) / t1)
