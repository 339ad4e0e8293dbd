"""Independent oracles and random-market generators shared by the tests.

Everything here deliberately avoids the library's solver internals: the
growth-rate maximum is located by brute-force grid refinement and gradients
are checked against central finite differences.
"""

from __future__ import annotations

import numpy as np

from market_clock import JumpAtom, LevyMarketSpec, growth_rate, validate_spec


def growth_on_mesh(points: np.ndarray, spec: LevyMarketSpec) -> np.ndarray:
    """Vectorized g over an (N, d) array; -inf where a jump constraint fails."""
    pts = np.atleast_2d(points)
    a = np.asarray(spec.a, dtype=float)
    c = np.asarray(spec.c, dtype=float)
    g = pts @ a - 0.5 * np.einsum("ni,ij,nj->n", pts, c, pts)
    for atom in spec.atoms:
        s = pts @ np.asarray(atom.z, dtype=float)
        bad = s <= -1.0 + 1e-14
        with np.errstate(invalid="ignore", divide="ignore"):
            term = atom.rate * (s - np.log1p(s))
        term[bad] = np.inf
        g = g - term
    return g


def grid_search_gstar(
    spec: LevyMarketSpec,
    box: float = 8.0,
    coarse: int = 401,
    rounds: int = 6,
) -> tuple[float, np.ndarray]:
    """Brute-force maximum of g for d <= 2 by iterated grid refinement.

    The box is expanded until the maximizer is interior (or the expansion
    cap is hit), then the grid is refined around the running argmax.
    """
    d = spec.d
    if d > 2:
        raise ValueError("grid oracle supports d <= 2 only")
    lo = -box * np.ones(d)
    hi = box * np.ones(d)
    for _ in range(6):
        best, arg = _grid_pass(spec, lo, hi, coarse)
        on_edge = np.any(np.isclose(arg, lo) | np.isclose(arg, hi))
        if not on_edge:
            break
        lo, hi = 2 * lo, 2 * hi
    for _ in range(rounds):
        width = (hi - lo) / (coarse - 1)
        lo = arg - 3 * width
        hi = arg + 3 * width
        best, arg = _grid_pass(spec, lo, hi, coarse)
    return best, arg


def _grid_pass(spec, lo, hi, n):
    axes = [np.linspace(lo[i], hi[i], n) for i in range(len(lo))]
    mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    vals = growth_on_mesh(mesh, spec)
    i = int(np.argmax(vals))
    return float(vals[i]), mesh[i].copy()


def central_difference_gradient(
    pi: np.ndarray, spec: LevyMarketSpec, h: float = 1e-6
) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    out = np.empty_like(pi)
    for i in range(pi.size):
        e = np.zeros_like(pi)
        e[i] = h
        out[i] = (growth_rate(pi + e, spec) - growth_rate(pi - e, spec)) / (2 * h)
    return out


def random_viable_spec(rng: np.random.Generator, d: int | None = None) -> LevyMarketSpec:
    """Random market with positive-definite c, bounded atoms, and g* > 0."""
    if d is None:
        d = int(rng.integers(1, 3))
    A = rng.normal(scale=0.3, size=(d, d))
    c = A @ A.T + 0.02 * np.eye(d)
    a = rng.uniform(-0.1, 0.2, size=d)
    while np.linalg.norm(a) < 0.02:
        a = rng.uniform(-0.1, 0.2, size=d)
    atoms = []
    for _ in range(int(rng.integers(0, 3))):
        z = rng.uniform(-0.9, 1.5, size=d)
        atoms.append(JumpAtom(z=z, rate=float(rng.uniform(0.05, 0.5))))
    return validate_spec(LevyMarketSpec(d=d, m=d, a=a, c=c, atoms=tuple(atoms)))


def random_feasible_point(
    rng: np.random.Generator, spec: LevyMarketSpec, scale: float = 1.0
) -> np.ndarray:
    """Random point of the constraint set, found by shrinking a Gaussian draw."""
    for _ in range(200):
        pi = rng.normal(scale=scale, size=spec.d)
        if all(1.0 + float(pi @ atom.z) > 1e-3 for atom in spec.atoms):
            return pi
        scale *= 0.8
    return np.zeros(spec.d)
