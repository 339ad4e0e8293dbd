"""Growth-rate functional, its maximizer, and market viability checks.

The growth rate of a constant-proportion strategy ``pi`` in a Levy market
with triplet (a, c, atoms) is

    g(pi) = <pi, a> - 0.5 <pi, c pi> - sum_k rate_k [<pi, z_k> - log(1 + <pi, z_k>)]

which is concave on the natural constraint set and blows down to -inf on
the boundary atoms.  The maximizer gives the numeraire (growth-optimal)
weights; its value is the market-time velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .markets import EPS_FEAS, TOL_PSD, ConstraintQuery, LevyMarketSpec, in_constraint_set

DELTA_BAR = 1e-10  # minimal slack kept on each jump constraint during line search


class GrowthDomainError(ValueError):
    """Portfolio lies strictly outside the natural constraint set."""


class ArbitrageCheckError(RuntimeError):
    """The viability LP failed for reasons other than infeasibility."""


@dataclass
class GrowthSolution:
    """Output of the growth maximization.

    When ``viable`` is false the market admits an immediate arbitrage and
    ``witness`` certifies it; ``rho``/``g_star`` then hold sentinels
    (``g_star = inf``).
    """

    rho: np.ndarray
    g_star: float
    alpha: float
    viable: bool
    witness: np.ndarray | None = None
    iterations: int = 0
    grad_norm: float = math.nan
    diagnostics: dict = field(default_factory=dict)


@dataclass
class RiskPremium:
    """Risk premium of an Ito coefficient pair (a, sigma)."""

    lam: np.ndarray
    lambda_sq: float
    rho: np.ndarray
    solvable: bool


def _jump_terms(pi: np.ndarray, spec: LevyMarketSpec, eps_feas: float):
    """Per-atom 1 + <pi, z_k>, raising outside the feasible set."""
    Z = spec.jump_matrix
    if Z.shape[0] == 0:
        return np.zeros(0), Z, np.zeros(0)
    q = 1.0 + Z @ pi
    if np.any(q < -eps_feas):
        raise GrowthDomainError("portfolio violates a jump constraint beyond eps_feas")
    return q, Z, spec.jump_rates


def growth_rate(pi: np.ndarray, spec: LevyMarketSpec, eps_feas: float = EPS_FEAS) -> float:
    """Evaluate g(pi); returns -inf when a positive-rate atom wipes out wealth."""
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    q, _, rates = _jump_terms(pi, spec, eps_feas)
    if np.any(q <= 0.0):
        return -math.inf
    val = float(pi @ spec.a) - 0.5 * float(pi @ spec.c @ pi)
    if len(q):
        val -= float(rates @ ((q - 1.0) - np.log(q)))
    return val


def growth_gradient(pi: np.ndarray, spec: LevyMarketSpec, eps_feas: float = EPS_FEAS) -> np.ndarray:
    """Analytic gradient a - c pi - sum_k rate_k z_k (1 - 1/(1 + <pi, z_k>))."""
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    q, Z, rates = _jump_terms(pi, spec, eps_feas)
    if np.any(q <= 0.0):
        raise GrowthDomainError("gradient undefined on the constraint boundary")
    grad = spec.a - spec.c @ pi
    if len(q):
        grad = grad - Z.T @ (rates * (1.0 - 1.0 / q))
    return grad


def growth_hessian(pi: np.ndarray, spec: LevyMarketSpec, eps_feas: float = EPS_FEAS) -> np.ndarray:
    """Hessian -c - sum_k rate_k z_k z_k^T / (1 + <pi, z_k>)^2 (negative semidefinite)."""
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    q, Z, rates = _jump_terms(pi, spec, eps_feas)
    if np.any(q <= 0.0):
        raise GrowthDomainError("hessian undefined on the constraint boundary")
    H = -np.array(spec.c, dtype=float, copy=True)
    if len(q):
        H -= (Z.T * (rates / q**2)) @ Z
    return H


def alpha_constant(rho: np.ndarray, spec: LevyMarketSpec) -> float:
    """Largest relative upward jump of the numeraire, floored at zero."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    Z = spec.jump_matrix
    if Z.shape[0] == 0:
        return 0.0
    return max(0.0, float(np.max(Z @ rho)))


@dataclass
class ViabilityReport:
    viable: bool
    witness: np.ndarray | None = None


def immediate_arbitrage_check(
    spec: LevyMarketSpec, tol_psd: float = TOL_PSD
) -> ViabilityReport:
    """Decide whether an immediate arbitrage direction exists.

    Searches the null space of ``c`` for a direction ``xi`` with
    ``<xi, z_k> >= 0`` on every atom, ``<xi, a> >= 0``, and at least one of
    those strict, via a linear feasibility program normalized by
    ``<xi, a> + sum_k <xi, z_k> = 1``.
    """
    c = spec.c if spec.c is not None else spec.sigma @ spec.sigma.T
    evals, evecs = np.linalg.eigh(0.5 * (c + c.T))
    cutoff = tol_psd * max(evals.max(initial=0.0), 1.0)
    null_basis = evecs[:, np.abs(evals) <= cutoff]
    if null_basis.shape[1] == 0:
        return ViabilityReport(viable=True)

    Z = spec.jump_matrix
    A_rows = [spec.a @ null_basis]
    if Z.shape[0]:
        A_rows.append(Z @ null_basis)
    G = np.vstack([A_rows[0][None, :]] + ([A_rows[1]] if len(A_rows) > 1 else []))
    # G y >= 0 componentwise, sum of rows of G y == 1
    res = linprog(
        c=np.zeros(null_basis.shape[1]),
        A_ub=-G,
        b_ub=np.zeros(G.shape[0]),
        A_eq=G.sum(axis=0, keepdims=True),
        b_eq=np.ones(1),
        bounds=[(None, None)] * null_basis.shape[1],
        method="highs",
    )
    if res.status == 2:  # infeasible: no arbitrage direction
        return ViabilityReport(viable=True)
    if res.status != 0:
        raise ArbitrageCheckError(f"LP solver failure: status {res.status} ({res.message})")
    xi = null_basis @ res.x
    xi = xi / np.max(np.abs(xi))
    return ViabilityReport(viable=False, witness=xi)


def _row_space_basis(spec: LevyMarketSpec, tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis (rows) of span{rows of c, atoms}.

    Directions orthogonal to this span leave g unchanged in a viable market,
    so restricting the solver to it yields the minimal-norm maximizer.
    """
    stack = [np.asarray(spec.c, dtype=float)]
    Z = spec.jump_matrix
    if Z.shape[0]:
        stack.append(Z)
    M = np.vstack(stack)
    if not np.any(M):
        return np.zeros((0, spec.d))
    _, s, Vt = np.linalg.svd(M, full_matrices=False)
    keep = s > tol * s[0]
    return Vt[keep]


def maximize_growth(
    spec: LevyMarketSpec,
    tol: float = 1e-10,
    max_iter: int = 200,
    check_viability: bool = True,
) -> GrowthSolution:
    """Maximize g over the natural constraint set.

    Damped Newton started at pi = 0 with feasibility-preserving backtracking;
    g is concave, so the returned stationary feasible point is the global
    maximizer.  Steps are projected onto span{rows of c, atoms}, which
    selects the minimal-Euclidean-norm maximizer among degenerate optima.
    """
    witness = None
    if check_viability:
        via = immediate_arbitrage_check(spec)
        if not via.viable:
            return GrowthSolution(
                rho=np.zeros(spec.d),
                g_star=math.inf,
                alpha=math.nan,
                viable=False,
                witness=via.witness,
                diagnostics={"reason": "immediate arbitrage"},
            )

    B = _row_space_basis(spec)
    pi = np.zeros(spec.d)
    Z = spec.jump_matrix
    grad_norm = math.nan
    it = 0
    if B.shape[0] == 0:
        # no curvature and no jump constraints: g is linear; viability forces a = 0
        grad_norm = float(np.linalg.norm(spec.a))
        return GrowthSolution(
            rho=pi,
            g_star=growth_rate(pi, spec),
            alpha=alpha_constant(pi, spec),
            viable=True,
            witness=None,
            iterations=0,
            grad_norm=grad_norm,
            diagnostics={"tie_break": "minimal-norm (row-space projection)"},
        )

    for it in range(1, max_iter + 1):
        g0 = growth_rate(pi, spec)
        grad = growth_gradient(pi, spec)
        pgrad = B.T @ (B @ grad)
        grad_norm = float(np.linalg.norm(pgrad))
        if grad_norm <= tol:
            break
        H = growth_hessian(pi, spec)
        Hb = B @ H @ B.T
        try:
            sb = np.linalg.solve(Hb, -(B @ grad))
        except np.linalg.LinAlgError:
            sb, *_ = np.linalg.lstsq(Hb, -(B @ grad), rcond=1e-12)
        step = B.T @ sb
        if float(step @ grad) <= 0.0:
            step = pgrad  # ascent fallback for a degenerate Hessian block

        # largest step keeping every jump constraint slack at least DELTA_BAR
        t = 1.0
        if Z.shape[0]:
            q0 = 1.0 + Z @ pi
            dz = Z @ step
            shrinking = dz < 0
            if np.any(shrinking):
                t_max = np.min((q0[shrinking] - DELTA_BAR) / (-dz[shrinking]))
                t = min(t, 0.99 * max(t_max, 0.0))
        slope = float(grad @ step)
        while t > 1e-16 and growth_rate(pi + t * step, spec) < g0 + 1e-4 * t * slope:
            t *= 0.5
        if t <= 1e-16:
            break
        pi = pi + t * step
        if np.linalg.norm(pi) > 1e8:
            # unbounded ascent: only reachable when the viability gate was skipped
            return GrowthSolution(
                rho=pi / np.linalg.norm(pi),
                g_star=math.inf,
                alpha=math.nan,
                viable=False,
                witness=pi / np.linalg.norm(pi),
                iterations=it,
                grad_norm=grad_norm,
                diagnostics={"reason": "unbounded ascent direction"},
            )

    g_star = growth_rate(pi, spec)
    return GrowthSolution(
        rho=pi,
        g_star=g_star,
        alpha=alpha_constant(pi, spec),
        viable=True,
        witness=witness,
        iterations=it,
        grad_norm=grad_norm,
        diagnostics={"tie_break": "minimal-norm (row-space projection)"},
    )


def risk_premium(a_t: np.ndarray, sigma_t: np.ndarray, tol_rank: float = 1e-10) -> RiskPremium:
    """Risk premium lambda = sigma^T c^dagger a for one coefficient pair.

    The pseudo-inverse is taken by symmetric eigendecomposition with a
    relative rank threshold.  ``solvable`` records whether ``c rho = a``
    actually holds, i.e. whether a numeraire portfolio exists at this step.
    """
    a_t = np.atleast_1d(np.asarray(a_t, dtype=float))
    sigma_t = np.atleast_2d(np.asarray(sigma_t, dtype=float))
    c = sigma_t @ sigma_t.T
    evals, evecs = np.linalg.eigh(c)
    cutoff = tol_rank * max(evals.max(initial=0.0), 0.0)
    inv = np.where(evals > max(cutoff, 0.0), 1.0 / np.where(evals > 0, evals, 1.0), 0.0)
    c_dag = (evecs * inv) @ evecs.T
    rho = c_dag @ a_t
    lam = sigma_t.T @ rho
    a_norm = float(np.linalg.norm(a_t))
    solvable = float(np.linalg.norm(c @ rho - a_t)) <= tol_rank * max(a_norm, 0.0) + 1e-300
    lambda_sq = float(a_t @ rho)
    return RiskPremium(lam=lam, lambda_sq=lambda_sq, rho=rho, solvable=solvable)


def feasible(pi: np.ndarray, spec: LevyMarketSpec, eps_feas: float = EPS_FEAS) -> bool:
    """Convenience wrapper: is ``pi`` in the natural constraint set of ``spec``."""
    return in_constraint_set(pi, ConstraintQuery.from_spec(spec, eps_feas))
