"""Market specifications and the constraint geometry induced by jumps.

A Levy market is described by its triplet: drift vector ``a``, diffusion
covariance ``c`` (or a volatility matrix ``sigma`` with ``c = sigma @ sigma.T``)
and a jump measure given by finitely many atoms, each a vector of relative
jump sizes with a Poisson intensity.  An Ito market carries a coefficient
model that produces per-step ``(a_t, sigma_t)`` on a calendar-time grid.

The natural constraint set consists of the portfolio fractions ``pi`` for
which wealth stays nonnegative across every possible jump, i.e.
``1 + <pi, z> >= 0`` on each atom ``z``.  Its recession cone collects the
directions that remain feasible under arbitrary positive scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL_PSD = 1e-10
EPS_FEAS = 1e-12


class SpecValidationError(ValueError):
    """Raised when a market spec violates its invariants.

    The full list of violations is available as ``.errors``.
    """

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class JumpAtom:
    """One atom of the jump measure: relative jump sizes and intensity."""

    z: np.ndarray
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=float)))
        object.__setattr__(self, "rate", float(self.rate))


@dataclass(frozen=True)
class LevyMarketSpec:
    """Exponential Levy market: constant (a, c, atoms) per unit calendar time.

    Either ``sigma`` (d x m) or ``c`` (d x d) may be supplied; when both are
    given they must agree (``c = sigma @ sigma.T``) within ``TOL_PSD`` in
    max-norm.  ``validate_spec`` materializes ``c`` and freezes the spec.
    """

    d: int
    m: int
    a: np.ndarray
    sigma: np.ndarray | None = None
    c: np.ndarray | None = None
    atoms: tuple[JumpAtom, ...] = ()
    validated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))
        if self.sigma is not None:
            object.__setattr__(self, "sigma", np.atleast_2d(np.asarray(self.sigma, dtype=float)))
        if self.c is not None:
            object.__setattr__(self, "c", np.atleast_2d(np.asarray(self.c, dtype=float)))
        atoms = tuple(
            at if isinstance(at, JumpAtom) else JumpAtom(*at) for at in self.atoms
        )
        object.__setattr__(self, "atoms", atoms)

    @property
    def jump_matrix(self) -> np.ndarray:
        """Stacked atom vectors, shape (n_atoms, d)."""
        if not self.atoms:
            return np.zeros((0, self.d))
        return np.vstack([at.z for at in self.atoms])

    @property
    def jump_rates(self) -> np.ndarray:
        return np.array([at.rate for at in self.atoms])

    @property
    def kappa(self) -> float:
        """Upper jump bound: max relative jump over atoms and coordinates."""
        if not self.atoms:
            return 0.0
        return max(0.0, float(self.jump_matrix.max()))


# ---------------------------------------------------------------------------
# Ito coefficient models


@dataclass(frozen=True)
class ConstantCoefficients:
    """Time-invariant (a, sigma)."""

    a: np.ndarray
    sigma: np.ndarray
    kind: str = field(default="constant", init=False)
    deterministic: bool = field(default=True, init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "sigma", np.atleast_2d(np.asarray(self.sigma, dtype=float)))

    def node_values(self, t_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(t_grid)
        return (
            np.broadcast_to(self.a, (n,) + self.a.shape).copy(),
            np.broadcast_to(self.sigma, (n,) + self.sigma.shape).copy(),
        )


@dataclass(frozen=True)
class PiecewiseCoefficients:
    """Deterministic piecewise-constant schedule.

    ``times`` are the segment start times (first must be 0); segment ``i``
    uses ``a_values[i]`` and ``sigma_values[i]`` on ``[times[i], times[i+1])``.
    """

    times: np.ndarray
    a_values: np.ndarray
    sigma_values: np.ndarray
    kind: str = field(default="piecewise", init=False)
    deterministic: bool = field(default=True, init=False)

    def __post_init__(self):
        object.__setattr__(self, "times", np.atleast_1d(np.asarray(self.times, dtype=float)))
        object.__setattr__(self, "a_values", np.atleast_2d(np.asarray(self.a_values, dtype=float)))
        sig = np.asarray(self.sigma_values, dtype=float)
        if sig.ndim == 1:
            sig = sig.reshape(-1, 1, 1)
        elif sig.ndim == 2:
            sig = sig[:, :, None]
        object.__setattr__(self, "sigma_values", sig)

    def node_values(self, t_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.clip(np.searchsorted(self.times, t_grid, side="right") - 1, 0, len(self.times) - 1)
        return self.a_values[idx], self.sigma_values[idx]


@dataclass(frozen=True)
class MeanRevertingVolatility:
    """Stochastic volatility factor: sigma_t = sigma * exp(y_t) with OU y.

    dy = kappa (theta - y) dt + xi dW;  the appreciation rate stays fixed,
    so the squared risk premium scales like exp(-2 y).
    """

    a: np.ndarray
    sigma: np.ndarray
    kappa: float = 2.0
    theta: float = 0.0
    xi: float = 0.3
    y0: float = 0.0
    kind: str = field(default="stochastic_vol", init=False)
    deterministic: bool = field(default=False, init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "sigma", np.atleast_2d(np.asarray(self.sigma, dtype=float)))

    def node_values(self, t_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # baseline (y = y0 frozen) values, used only for dimension validation
        n = len(t_grid)
        sig = self.sigma * np.exp(self.y0)
        return (
            np.broadcast_to(self.a, (n,) + self.a.shape).copy(),
            np.broadcast_to(sig, (n,) + sig.shape).copy(),
        )


CoefficientModel = ConstantCoefficients | PiecewiseCoefficients | MeanRevertingVolatility


@dataclass(frozen=True)
class ItoMarketSpec:
    """Ito market with (possibly time-varying) coefficient generator."""

    d: int
    m: int
    coefficient_model: CoefficientModel
    validated: bool = False


# ---------------------------------------------------------------------------
# Validation


def spec_violations(spec: LevyMarketSpec | ItoMarketSpec, tol_psd: float = TOL_PSD) -> list[str]:
    """All invariant violations of ``spec`` (empty list when valid)."""
    errors: list[str] = []
    if isinstance(spec, ItoMarketSpec):
        return _ito_violations(spec)
    if spec.d < 1:
        errors.append("asset count d must be >= 1")
        return errors
    if spec.a.shape != (spec.d,):
        errors.append(f"a has shape {spec.a.shape}, expected ({spec.d},)")
    if spec.sigma is None and spec.c is None:
        errors.append("one of sigma or c must be supplied")
    if spec.sigma is not None:
        if spec.sigma.shape != (spec.d, spec.m):
            errors.append(
                f"sigma has shape {spec.sigma.shape}, expected ({spec.d}, {spec.m})"
            )
    c = spec.c
    if spec.sigma is not None and spec.sigma.shape == (spec.d, spec.m):
        c_from_sigma = spec.sigma @ spec.sigma.T
        if c is None:
            c = c_from_sigma
        elif c.shape == (spec.d, spec.d) and np.max(np.abs(c - c_from_sigma)) > tol_psd:
            errors.append("sigma and c disagree: max|c - sigma sigma^T| exceeds tolerance")
    if c is not None:
        if c.shape != (spec.d, spec.d):
            errors.append(f"c has shape {c.shape}, expected ({spec.d}, {spec.d})")
        else:
            if np.max(np.abs(c - c.T)) > tol_psd:
                errors.append("c is not symmetric")
            elif np.linalg.eigvalsh(0.5 * (c + c.T)).min() < -tol_psd:
                errors.append("c is not positive semidefinite")
    for i, at in enumerate(spec.atoms):
        if at.z.shape != (spec.d,):
            errors.append(f"atom {i}: z has shape {at.z.shape}, expected ({spec.d},)")
            continue
        if not np.all(np.isfinite(at.z)):
            errors.append(f"atom {i}: non-finite jump size")
        if np.any(at.z < -1.0):
            errors.append(f"atom {i}: jump below -1 (asset would go negative)")
        if np.all(at.z == 0.0):
            errors.append(f"atom {i}: zero atom not allowed")
        if not (at.rate > 0.0) or not np.isfinite(at.rate):
            errors.append(f"atom {i}: nonpositive rate")
    if not np.all(np.isfinite(spec.a)):
        errors.append("a has non-finite entries")
    return errors


def _ito_violations(spec: ItoMarketSpec) -> list[str]:
    errors: list[str] = []
    if spec.d < 1 or spec.m < 1:
        errors.append("d and m must be >= 1")
        return errors
    model = spec.coefficient_model
    try:
        probe = np.array([0.0, 0.5, 1.0])
        a_path, sigma_path = model.node_values(probe)
    except Exception as exc:  # noqa: BLE001 - report as a validation error
        errors.append(f"coefficient model failed to generate: {exc}")
        return errors
    if a_path.shape != (3, spec.d):
        errors.append(f"generated a has shape {a_path.shape}, expected (3, {spec.d})")
    if sigma_path.shape != (3, spec.d, spec.m):
        errors.append(
            f"generated sigma has shape {sigma_path.shape}, expected (3, {spec.d}, {spec.m})"
        )
    if not (np.all(np.isfinite(a_path)) and np.all(np.isfinite(sigma_path))):
        errors.append("coefficient model produced non-finite values")
    if isinstance(model, MeanRevertingVolatility):
        if model.kappa < 0 or model.xi < 0:
            errors.append("mean-reverting factor needs kappa >= 0 and xi >= 0")
    return errors


def validate_spec(
    spec: LevyMarketSpec | ItoMarketSpec, tol_psd: float = TOL_PSD
) -> LevyMarketSpec | ItoMarketSpec:
    """Validate ``spec`` and return it with ``c`` materialized.

    Idempotent: a spec that already carries ``validated=True`` is returned
    unchanged.  Raises :class:`SpecValidationError` listing every violation.
    """
    if spec.validated:
        return spec
    errors = spec_violations(spec, tol_psd=tol_psd)
    if errors:
        raise SpecValidationError(errors)
    if isinstance(spec, ItoMarketSpec):
        return ItoMarketSpec(d=spec.d, m=spec.m, coefficient_model=spec.coefficient_model, validated=True)
    c = spec.c if spec.c is not None else spec.sigma @ spec.sigma.T
    return LevyMarketSpec(
        d=spec.d, m=spec.m, a=spec.a, sigma=spec.sigma, c=c, atoms=spec.atoms, validated=True
    )


# ---------------------------------------------------------------------------
# Constraint geometry


@dataclass(frozen=True)
class ConstraintQuery:
    """Feasibility queries against the natural constraint set of a jump measure."""

    atoms: tuple[JumpAtom, ...]
    eps_feas: float = EPS_FEAS

    def __post_init__(self):
        if self.eps_feas < 0:
            raise ValueError("eps_feas must be nonnegative")
        atoms = tuple(
            at if isinstance(at, JumpAtom) else JumpAtom(*at) for at in self.atoms
        )
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_spec(cls, spec: LevyMarketSpec, eps_feas: float = EPS_FEAS) -> "ConstraintQuery":
        return cls(atoms=spec.atoms, eps_feas=eps_feas)

    @property
    def jump_matrix(self) -> np.ndarray:
        if not self.atoms:
            return np.zeros((0, 0))
        return np.vstack([at.z for at in self.atoms])


def in_constraint_set(pi: np.ndarray, query: ConstraintQuery) -> bool:
    """Whether ``1 + <pi, z> >= -eps_feas`` holds on every atom."""
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    if not query.atoms:
        return True
    return bool(np.all(1.0 + query.jump_matrix @ pi >= -query.eps_feas))


def in_recession_cone(eta: np.ndarray, query: ConstraintQuery) -> bool:
    """Whether ``u * eta`` stays feasible for every ``u > 0``.

    For a finite-atom jump measure this reduces to ``<eta, z> >= 0`` on
    every atom (up to ``eps_feas``).
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if not query.atoms:
        return True
    return bool(np.all(query.jump_matrix @ eta >= -query.eps_feas))
