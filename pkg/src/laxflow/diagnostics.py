"""Operator-bound suites, resolvent/propagator convergence, and the
convergence study against a high-resolution reference run.

Operator norms are evaluated at the Galerkin level: multiplication by the
data is embedded as a finite matrix on the frequency window [0, M).  The
restriction can only shrink an operator norm, so the continuum upper bounds
remain valid assertions for the measured values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .lax import build_bo_lax, build_ccm_lax
from .propagator import find_kappa_zero
from .scheme import SchemeConfig, SchemeOutput, make_schedule, run_scheme
from .spectral import HardyVector, InitialProfile, RealSpectrum, analyze_profile, l2_norm

__all__ = [
    "BoundReport",
    "ConvergenceRow",
    "ConvergenceTable",
    "ResolventRow",
    "run_bound_suite",
    "run_resolvent_convergence",
    "run_convergence_study",
    "fit_rate",
    "run_propagator_sweep",
]

_PASS_TOL = 1e-10


@dataclass(frozen=True)
class BoundReport:
    name: str
    params: dict
    measured: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound + _PASS_TOL * (1.0 + self.bound)


def _split_equation(equation: str) -> Tuple[str, Optional[str]]:
    if equation == "BO":
        return "BO", None
    if equation in ("CCM-focusing", "CCM-defocusing"):
        return "CCM", equation.split("-", 1)[1]
    raise ValueError(f"unknown equation {equation!r}")


def _build_lax(u0, equation: str, n: int, M: int):
    eq, sign = _split_equation(equation)
    if eq == "BO":
        return build_bo_lax(u0, n, M)
    return build_ccm_lax(u0, n, M, sign)


def _mult_matrix(u0, M: int) -> np.ndarray:
    """Multiplication by u0 compressed to [0, M): U[j, l] = u0hat(j - l)."""
    if isinstance(u0, RealSpectrum):
        col = np.array([u0.coeff(j) for j in range(M)])
        row = np.array([u0.coeff(-l) for l in range(M)])
    else:
        col = u0.padded(M)
        row = np.zeros(M, dtype=np.complex128)
        row[0] = col[0]
    return scipy.linalg.toeplitz(col, row)


def _opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, ord=2))


def _resolvent_matrix(u0, equation: str, n: int, M: int, kappa: float) -> np.ndarray:
    lax = _build_lax(u0, equation, n, M)
    return np.linalg.inv(lax.entries + kappa * np.eye(M))


def _random_unit_vectors(M: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=seed))
    z = rng.standard_normal((M, count)) + 1j * rng.standard_normal((M, count))
    return z / np.linalg.norm(z, axis=0)


def run_bound_suite(
    u0,
    equation: str,
    M: int,
    kappas: Sequence[float],
    ns: Sequence[int],
    n_vectors: int = 200,
    seed: int = 0,
) -> List[BoundReport]:
    """Evaluate the perturbation, projection and norm-sandwich bounds.

    Emits one report per (bound, n, kappa) cell; failures are reported with
    passed = False, never raised.
    """
    if M < 8:
        raise ValueError("M must be >= 8")
    if any(k < 1 for k in kappas):
        raise ValueError("kappas must be >= 1")
    eq, _sign = _split_equation(equation)
    norm_u = l2_norm(u0)
    reports: List[BoundReport] = []

    U = _mult_matrix(u0, M)
    hardy_coeffs = u0.hardy_part() if isinstance(u0, RealSpectrum) else u0.padded(M)

    for kappa in kappas:
        r0 = 1.0 / (np.arange(M) + kappa)
        for n in ns:
            pn = np.zeros(M)
            pn[:n] = 1.0
            # multiplication composed with truncation and the free resolvent
            measured = _opnorm((U * pn) * r0)
            reports.append(
                BoundReport(
                    "mult-resolvent",
                    {"n": n, "kappa": kappa, "M": M, "equation": equation},
                    measured,
                    np.sqrt(3.0) / np.sqrt(kappa) * norm_u,
                )
            )
            if eq == "CCM":
                # for Hardy data the multiplication matrix is the lower-
                # triangular Toeplitz factor A itself
                prod = (((U * pn) @ U.conj().T) * pn) * r0
                reports.append(
                    BoundReport(
                        "gram-resolvent",
                        {"n": n, "kappa": kappa, "M": M, "equation": equation},
                        _opnorm(prod),
                        2.0 * norm_u**2,
                    )
                )
            if n >= 1:
                # projection bound: the diagonal maximum is exact; it is
                # zero once the truncation covers the whole window
                measured21 = 1.0 / (n + kappa) if n < M else 0.0
                reports.append(
                    BoundReport(
                        "projection",
                        {"n": n, "kappa": kappa, "M": M, "equation": equation},
                        measured21,
                        1.0 / n,
                    )
                )

    if eq == "CCM":
        # decay of the Gram-resolvent operator norm as kappa grows (to 10^4)
        big_kappa = 1.0e4
        prod = (U @ U.conj().T) * (1.0 / (np.arange(M) + big_kappa))
        reports.append(
            BoundReport(
                "gram-resolvent-decay",
                {"n": M, "kappa": big_kappa, "M": M, "equation": equation},
                _opnorm(prod),
                0.1 * 2.0 * norm_u**2,
            )
        )

    # Hardy-inequality check on the nonnegative modes
    cum = np.cumsum(np.abs(hardy_coeffs)) / (np.arange(len(hardy_coeffs)) + 1.0)
    reports.append(
        BoundReport(
            "hardy",
            {"M": M, "equation": equation},
            float(np.linalg.norm(cum)),
            2.0 * norm_u,
        )
    )

    # norm sandwich and its dual at kappa = kappa0
    kz = find_kappa_zero(u0, eq, M)
    kappa0 = kz.value
    F = _random_unit_vectors(M, n_vectors, seed)
    ks = np.arange(M)
    h1 = np.linalg.norm(((ks + kappa0)[:, None]) * F, axis=0)
    hm1 = np.linalg.norm(F / (ks + kappa0)[:, None], axis=0)
    upper_name, dual_name = "sandwich", "dual-sandwich"
    for n in sorted({1, M // 2, M}):
        lax = _build_lax(u0, equation, n, M)
        shifted = lax.entries + kappa0 * np.eye(M)
        lf = np.linalg.norm(shifted @ F, axis=0)
        rf = np.linalg.norm(np.linalg.solve(shifted, F), axis=0)
        params = {"n": n, "kappa": kappa0, "M": M, "equation": equation}
        reports.append(
            BoundReport(upper_name + "-upper", params, float(np.max(lf / h1)), 1.5)
        )
        reports.append(
            BoundReport(upper_name + "-lower", params, float(np.max(h1 / lf)), 2.0)
        )
        reports.append(
            BoundReport(dual_name + "-upper", params, float(np.max(rf / hm1)), 2.0)
        )
        reports.append(
            BoundReport(dual_name + "-lower", params, float(np.max(hm1 / rf)), 1.5)
        )

    # semi-boundedness: smallest eigenvalue dominated by -kappa0
    for n in sorted({1, M // 2, M}):
        lax = _build_lax(u0, equation, n, M)
        lam_min = float(np.linalg.eigvalsh(lax.entries)[0])
        reports.append(
            BoundReport(
                "semibound",
                {"n": n, "M": M, "equation": equation},
                -lam_min,
                kappa0,
            )
        )
    return reports


@dataclass(frozen=True)
class ResolventRow:
    n: int
    measured: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound + _PASS_TOL * (1.0 + self.bound)


def run_resolvent_convergence(
    u0, equation: str, M: int, kappa: Optional[float] = None
) -> List[ResolventRow]:
    """Measure ||R_n(kappa) - R_M(kappa)|| against the 1/n rate bounds."""
    if M < 32 or (M & (M - 1)) != 0:
        raise ValueError("M must be a power of two >= 32")
    eq, _ = _split_equation(equation)
    kappa0 = find_kappa_zero(u0, eq, M).value
    if kappa is None:
        kappa = kappa0
    if kappa < kappa0:
        raise ValueError(f"kappa must be >= kappa0 = {kappa0}")
    norm_u = l2_norm(u0)
    r_full = _resolvent_matrix(u0, equation, M, M, kappa)
    rows = []
    n = 2
    while n <= M // 2:
        r_n = _resolvent_matrix(u0, equation, n, M, kappa)
        measured = _opnorm(r_n - r_full)
        if eq == "BO":
            bound = 8.0 * np.sqrt(3.0) / (n * np.sqrt(kappa)) * norm_u
        else:
            # chained from the CCM resolvent-identity proof constants
            bound = 16.0 * norm_u**2 / n
        rows.append(ResolventRow(n, measured, bound))
        n *= 2
    return rows


@dataclass(frozen=True)
class ConvergenceRow:
    K: int
    kind: str
    error: float
    norm_diff: float
    wall_time: float
    decompositions: int


@dataclass(frozen=True)
class ConvergenceTable:
    rows: List[ConvergenceRow]
    K_ref: int
    T: float
    equation: str


def _per_time_errors(out: SchemeOutput, ref: SchemeOutput) -> Tuple[np.ndarray, np.ndarray]:
    """L2 error and norm difference against the reference, per time point."""
    K = out.schedule.K
    diff = ref.coeffs.copy()
    diff[:, :K] -= out.coeffs
    hardy_err2 = np.sum(np.abs(diff) ** 2, axis=1)
    hardy_out = np.linalg.norm(out.coeffs, axis=1)
    hardy_ref = np.linalg.norm(ref.coeffs, axis=1)
    if out.equation == "BO":
        err = np.sqrt(np.maximum(2.0 * hardy_err2 - np.abs(diff[:, 0]) ** 2, 0.0))
        n_out = np.sqrt(np.maximum(2.0 * hardy_out**2 - out.coeffs[:, 0].real ** 2, 0.0))
        n_ref = np.sqrt(np.maximum(2.0 * hardy_ref**2 - ref.coeffs[:, 0].real ** 2, 0.0))
    else:
        err = np.sqrt(hardy_err2)
        n_out, n_ref = hardy_out, hardy_ref
    return err, np.abs(n_out - n_ref)


def run_convergence_study(
    u0: Union[InitialProfile, RealSpectrum, HardyVector],
    equation: str,
    Ks: Sequence[int],
    schedule_kind: str,
    T: float,
    grid_points: int,
    K_ref: int,
    check: bool = True,
) -> ConvergenceTable:
    """Errors of the K-frequency scheme against the K_ref reference run.

    The continuum solution is proxied by the scheme itself at K_ref with a
    constant schedule; all runs share the same initial data materialized at
    bandwidth K_ref.
    """
    Ks = list(Ks)
    if any(b <= a for a, b in zip(Ks, Ks[1:])):
        raise ValueError("Ks must be strictly increasing")
    if K_ref < 4 * max(Ks):
        raise ValueError("K_ref must be >= 4 * max(Ks)")
    if grid_points < 11:
        raise ValueError("grid_points must be >= 11")
    eq, _ = _split_equation(equation)
    if isinstance(u0, InitialProfile):
        u0 = analyze_profile(u0, K_ref, hardy=(eq == "CCM"))
    times = np.linspace(-T, T, grid_points)

    ref_cfg = SchemeConfig(equation, make_schedule("constant", K_ref), times, u0)
    try:
        ref = run_scheme(ref_cfg)
    except Exception as exc:
        raise RuntimeError(f"reference run at K_ref={K_ref} failed: {exc}") from exc

    rows = []
    for K in Ks:
        cfg = SchemeConfig(equation, make_schedule(schedule_kind, K), times, u0)
        t0 = time.perf_counter()
        out = run_scheme(cfg)
        wall = time.perf_counter() - t0
        err, nd = _per_time_errors(out, ref)
        rows.append(
            ConvergenceRow(K, schedule_kind, float(np.max(err)), float(np.max(nd)),
                           wall, out.decompositions)
        )
    if check:
        for a, b in zip(rows, rows[1:]):
            if b.error > a.error + 1e-12:
                raise RuntimeError(
                    f"error not non-increasing: K={a.K} -> {a.error:.3e}, "
                    f"K={b.K} -> {b.error:.3e}"
                )
    return ConvergenceTable(rows, K_ref, T, equation)


def fit_rate(table: ConvergenceTable) -> Optional[float]:
    """Least-squares slope of log(error) against log(K); None if degenerate."""
    pts = [(r.K, r.error) for r in table.rows if r.error > 0.0]
    if not pts:
        return None
    if len(table.rows) < 4:
        raise ValueError("need at least 4 rows to fit a rate")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def run_propagator_sweep(
    u0,
    equation: str,
    M: int,
    T: float,
    seeds: Sequence[int] = tuple(range(8)),
) -> List[Tuple[int, float]]:
    """sup over t in [-T, T] (21 points) and a fixed vector family of
    ||(e^{itL_n} - e^{itL_M}) f||, for n = 4, 8, ..., M/2."""
    if M < 64 or (M & (M - 1)) != 0:
        raise ValueError("M must be a power of two >= 64")
    basis = np.eye(M, 8, dtype=np.complex128)
    rand = np.hstack([_random_unit_vectors(M, 1, s) for s in seeds])
    F = np.hstack([basis, rand])
    tgrid = np.linspace(-T, T, 21)

    def evolve_all(n):
        lam, q = np.linalg.eigh(_build_lax(u0, equation, n, M).entries)
        qh_f = q.conj().T @ F
        return np.stack([q @ (np.exp(1j * t * lam)[:, None] * qh_f) for t in tgrid])

    ref = evolve_all(M)
    rows = []
    n = 4
    while n <= M // 2:
        diff = evolve_all(n) - ref
        sup = float(np.max(np.linalg.norm(diff, axis=1)))
        rows.append((n, sup))
        n *= 2
    if rows and rows[-1][1] > rows[0][1] + 1e-12:
        raise RuntimeError("propagator error failed to decrease from n=4 to n=M/2")
    return rows
