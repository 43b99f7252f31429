"""Comparison matrices of the synchronization estimates and their spectra.

Four variants are built:

``D``        circulant, diagonal ``2 - 2l - 2 lam``, neighbours ``lam``
``D_tilde``  circulant, diagonal ``4 - 2l - 2 lam``, neighbours ``lam``
``H``        tridiagonal of size ``N // 2``, diagonal ``-beta lam``, off-diagonal ``lam``
``H_tilde``  tridiagonal of size ``(N - 1) // 2``, same entries

Closed forms: a symmetric circulant with diagonal ``a`` and neighbour weight
``lam`` has eigenvalues ``a + 2 lam cos(2 pi k / N)``; the tridiagonal
Toeplitz matrix of size ``M`` has ``-beta lam + 2 lam cos(k pi / (M + 1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericError, ParameterError
from .levy_process import TimeGrid
from .linalg import eigvalsh, expm

VARIANTS = ("D", "D_tilde", "H", "H_tilde")


@dataclass(frozen=True)
class CouplingMatrixSpec:
    variant: str
    N: int
    lam: float
    l: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if int(self.N) != self.N or self.N < 2:
            raise ParameterError(f"N must be an integer >= 2, got {self.N}")
        if not self.lam >= 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if self.circulant and self.l is None:
            raise ParameterError(f"variant {self.variant} needs the dissipativity constant l")
        if not self.circulant:
            if self.beta is None:
                raise ParameterError(f"variant {self.variant} needs beta")
            if self.size < 1:
                raise ParameterError(f"variant {self.variant} is empty for N={self.N}")

    @property
    def circulant(self) -> bool:
        return self.variant in ("D", "D_tilde")

    @property
    def size(self) -> int:
        if self.circulant:
            return self.N
        return self.N // 2 if self.variant == "H" else (self.N - 1) // 2

    @property
    def diagonal(self) -> float:
        if self.variant == "D":
            return 2.0 - 2.0 * self.l - 2.0 * self.lam
        if self.variant == "D_tilde":
            return 4.0 - 2.0 * self.l - 2.0 * self.lam
        return -self.beta * self.lam


def build_coupling_matrix(spec: CouplingMatrixSpec) -> np.ndarray:
    n = spec.size
    m = np.diag(np.full(n, spec.diagonal))
    idx = np.arange(n)
    if spec.circulant:
        # additive placement: on two nodes both neighbours coincide
        np.add.at(m, (idx, (idx + 1) % n), spec.lam)
        np.add.at(m, (idx, (idx - 1) % n), spec.lam)
    else:
        m[idx[:-1], idx[1:]] = spec.lam
        m[idx[1:], idx[:-1]] = spec.lam
    return m


@dataclass
class EigenReport:
    """Dense-solver spectrum next to the analytic one."""

    spec: CouplingMatrixSpec
    eigenvalues: list
    closed_form_values: list
    mu_max: float
    max_abs_gap: float
    matrix_norm: float

    @property
    def agrees(self) -> bool:
        return self.max_abs_gap <= 1e-10 * max(self.matrix_norm, 1.0)

    def to_dict(self) -> dict:
        return {
            "variant": self.spec.variant,
            "N": self.spec.N,
            "lambda": self.spec.lam,
            "l": self.spec.l,
            "beta": self.spec.beta,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "closed_form_values": [float(v) for v in self.closed_form_values],
            "mu_max": float(self.mu_max),
            "gap": float(self.max_abs_gap),
            "agrees": bool(self.agrees),
        }


def analytic_eigenvalues(spec: CouplingMatrixSpec) -> np.ndarray:
    n = spec.size
    if spec.circulant:
        k = np.arange(n)
        vals = spec.diagonal + 2.0 * spec.lam * np.cos(2.0 * np.pi * k / n)
    else:
        k = np.arange(1, n + 1)
        vals = spec.diagonal + 2.0 * spec.lam * np.cos(k * np.pi / (n + 1))
    return np.sort(vals)


def closed_form_eigenvalues(spec: CouplingMatrixSpec) -> EigenReport:
    """Analytic spectrum cross-checked against the in-repo dense solver."""
    m = build_coupling_matrix(spec)
    dense = eigvalsh(m)
    closed = analytic_eigenvalues(spec)
    return EigenReport(
        spec=spec,
        eigenvalues=list(dense),
        closed_form_values=list(closed),
        mu_max=float(closed[-1]),
        max_abs_gap=float(np.abs(dense - closed).max()),
        matrix_norm=float(np.abs(m).sum(axis=0).max()),
    )


def mu_max_formula(N, beta) -> float:
    """Largest eigenvalue of ``H / lam`` (even ``N``) or ``H_tilde / lam`` (odd ``N``)."""
    if N % 2 == 0:
        return -beta - 2.0 * math.cos(N * math.pi / (N + 2))
    return -beta - 2.0 * math.cos((N - 1) * math.pi / (N + 1))


def admissible_beta_range(N):
    """Open interval of admissible ``beta`` and the default choice.

    Returns
    -------
    (low, high), default
    """
    if int(N) != N or N < 3:
        raise ParameterError(f"N must be an integer >= 3, got {N}")
    angle = N * math.pi / (N + 2) if N % 2 == 0 else (N - 1) * math.pi / (N + 1)
    return (-2.0 * math.cos(angle), 2.0), 1.0 - math.cos(angle)


@dataclass
class GronwallReport:
    check_times: np.ndarray
    trajectory: np.ndarray  # Euler solution at check_times, (K, n)
    bound: np.ndarray  # right side of the Gronwall inequality, (K, n)
    margin: float  # max over times and components of trajectory - bound

    @property
    def violated(self) -> bool:
        return self.margin > 0


def gronwall_bound_check(
    D_fn: Callable[[float], np.ndarray],
    Phi0,
    Psi_fn: Callable[[float], np.ndarray],
    grid: TimeGrid,
    slack_fn: Callable[[float], np.ndarray] = None,
    n_checks: int = 20,
) -> GronwallReport:
    """Compare a solution of ``Phi' = D Phi + Psi - slack`` with the Gronwall bound.

    The trajectory is integrated by explicit Euler.  The bound

        exp(int_{T0}^t D) Phi0 + int_{T0}^t exp(int_tau^t D) Psi(tau) dtau

    is evaluated independently with matrix exponentials of the cumulative
    trapezoidal integral of ``D`` and trapezoidal quadrature in ``tau``.
    The bound is the exact solution of the equality case when the family
    ``D(t)`` commutes; componentwise comparison needs off-diagonal entries
    of ``D`` to be nonnegative.
    """
    times = grid.times
    h = np.diff(times)
    d_vals = np.array([np.atleast_2d(D_fn(t)) for t in times], dtype=float)
    psi = np.array([np.atleast_1d(Psi_fn(t)) for t in times], dtype=float)
    slack = np.zeros_like(psi) if slack_fn is None else np.array([np.atleast_1d(slack_fn(t)) for t in times])
    phi = np.empty_like(psi)
    phi[0] = np.atleast_1d(np.asarray(Phi0, dtype=float))
    for i in range(h.size):
        phi[i + 1] = phi[i] + h[i] * (d_vals[i] @ phi[i] + psi[i] - slack[i])

    cum = np.zeros_like(d_vals)
    cum[1:] = np.cumsum(0.5 * h[:, None, None] * (d_vals[1:] + d_vals[:-1]), axis=0)
    checks = np.unique(np.linspace(0, h.size, min(n_checks, h.size) + 1).round().astype(int))
    bound = np.empty((checks.size, phi.shape[1]))
    for row, m in enumerate(checks):
        kernels = expm(cum[m][None] - cum[: m + 1])  # exp(int_tau^t D) for tau = t_0..t_m
        integrand = np.einsum("kij,kj->ki", kernels, psi[: m + 1])
        w = np.zeros(m + 1)
        if m:
            w[:-1] += 0.5 * h[:m]
            w[1:] += 0.5 * h[:m]
        bound[row] = kernels[0] @ phi[0] + w @ integrand
    if not np.all(np.isfinite(bound)):
        raise NumericError("non-finite Gronwall bound")
    margin = float((phi[checks] - bound).max())
    return GronwallReport(times[checks], phi[checks], bound, margin)


def quadratic_form_margin(spec: CouplingMatrixSpec, zetas: Sequence[np.ndarray], t=1.0) -> float:
    """``max_zeta [zeta^T (t D) zeta + l t |zeta|^2] / |zeta|^2``; nonpositive when the bound holds."""
    m = t * build_coupling_matrix(spec)
    z = np.atleast_2d(np.asarray(zetas, dtype=float))
    q = np.einsum("ki,ij,kj->k", z, m, z)
    return float(((q + spec.l * t * np.einsum("ki,ki->k", z, z)) / np.einsum("ki,ki->k", z, z)).max())
