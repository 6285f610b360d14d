"""Sensitivity sweeps: minimal detectable anisotropy over growth orientations.

For every axis angle gamma in a grid, growth of increasing rate tau is
injected into a base study and the smallest tau at which a chosen test
rejects is recorded.  The distal-axis tests are swept differently: growth of
a fixed rate is injected over a fine gamma grid and the rejection decision
per grid point traces the critical interval around the target axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .anisotropy import (
    DistalTestConfig,
    test_distal_boot,
    test_distal_vm,
    test_rayleigh,
    test_tau_ks,
)
from .circular import AngleSample
from .errors import InvalidInputError
from .estimator import SolverConfig, estimate_study
from .patterns import StudyDataset
from .simulate import GrowthSpec, inject_growth_study, spawn_generators

TAU_MIN_TESTS = ("rayleigh", "tau_ks")
DISTAL_TESTS = ("distal_vm", "distal_boot")


def default_gamma_grid(steps: int = 20) -> np.ndarray:
    """The coarse sweep grid {k pi / steps : k = 0..steps-1}."""
    return np.arange(steps) * math.pi / steps


def fine_gamma_grid(steps: int = 500) -> np.ndarray:
    """The fine grid {k pi / steps : k = 0..steps} used for distal curves."""
    return np.arange(steps + 1) * math.pi / steps


@dataclass(frozen=True)
class SweepSpec:
    """Grids and test selection of a sensitivity sweep."""

    gamma_grid: np.ndarray = field(default_factory=default_gamma_grid)
    tau_grid: np.ndarray = field(
        default_factory=lambda: np.arange(0.002, 0.1201, 0.002)
    )
    test_id: str = "rayleigh"
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        gamma = np.asarray(self.gamma_grid, dtype=np.float64)
        tau = np.asarray(self.tau_grid, dtype=np.float64)
        if gamma.size == 0 or tau.size == 0:
            raise InvalidInputError("sweep grids must be non-empty")
        if np.any(tau <= 0) or np.any(np.diff(tau) <= 0):
            raise InvalidInputError("tau_grid must be strictly increasing and positive")
        if self.test_id not in TAU_MIN_TESTS + DISTAL_TESTS:
            raise InvalidInputError("unknown test_id %r" % self.test_id)
        object.__setattr__(self, "gamma_grid", gamma)
        object.__setattr__(self, "tau_grid", tau)


def _reject_at(dataset, gamma, tau, test_id, alpha, reference, solver):
    grown = inject_growth_study(dataset, GrowthSpec(tau=tau, gamma=gamma))
    table = estimate_study(grown, solver)
    if test_id == "rayleigh":
        report = test_rayleigh(AngleSample(table.doubled_gammas()), alpha=alpha)
    else:
        report = test_tau_ks(table.taus(), reference, alpha=alpha)
    return report.reject


def tau_min_sweep(
    dataset: StudyDataset,
    spec: SweepSpec,
    reference: np.ndarray | None = None,
    solver: SolverConfig | None = None,
) -> list[tuple[float, float | None]]:
    """Smallest rejecting tau per gamma; None marks no rejection on the grid.

    The search ascends the tau grid rather than bisecting because rejection
    need not be perfectly monotone in tau at finite Monte Carlo size.
    """
    if spec.test_id not in TAU_MIN_TESTS:
        raise InvalidInputError(
            "tau_min_sweep supports %s" % (TAU_MIN_TESTS,)
        )
    if spec.test_id == "tau_ks" and reference is None:
        raise InvalidInputError("the KS sweep needs a reference sample")
    results = []
    for gamma in spec.gamma_grid:
        tau_min = None
        for tau in spec.tau_grid:
            if _reject_at(dataset, gamma, tau, spec.test_id, spec.alpha, reference, solver):
                tau_min = float(tau)
                break
        results.append((float(gamma), tau_min))
    return results


def distal_curve(
    dataset: StudyDataset,
    tau: float,
    cfg: DistalTestConfig,
    gamma_grid: np.ndarray | None = None,
    seed: int = 0,
    solver: SolverConfig | None = None,
) -> list[tuple[float, bool, bool]]:
    """Rejection decisions of both distal tests over a gamma grid.

    Growth of rate ``tau`` is injected at every grid angle; each grid point
    gets its own deterministic bootstrap stream derived from ``seed``.
    Returns (gamma, vm_rejects, boot_rejects) per grid point.
    """
    if gamma_grid is None:
        gamma_grid = fine_gamma_grid()
    gamma_grid = np.asarray(gamma_grid, dtype=np.float64)
    streams = spawn_generators(seed, gamma_grid.size)
    results = []
    for gamma, stream in zip(gamma_grid, streams):
        grown = inject_growth_study(dataset, GrowthSpec(tau=tau, gamma=float(gamma)))
        table = estimate_study(grown, solver)
        sample = AngleSample(table.doubled_gammas())
        vm = test_distal_vm(sample, cfg)
        boot = test_distal_boot(sample, cfg, stream)
        results.append((float(gamma), vm.reject, boot.reject))
    return results


def rejection_interval(curve, which: int) -> tuple[float, float] | None:
    """Critical interval for 2*gamma around the target axis, unwrapped.

    ``which`` selects the decision column of :func:`distal_curve` results
    (1 for the parametric test, 2 for the bootstrap test).  Doubled angles
    above pi are unwrapped to the negative side so an interval straddling
    zero is reported as [lo, hi].
    """
    doubled = []
    for entry in curve:
        if entry[which]:
            angle = 2.0 * entry[0]
            if angle > math.pi:
                angle -= 2.0 * math.pi
            doubled.append(angle)
    if not doubled:
        return None
    return (min(doubled), max(doubled))
