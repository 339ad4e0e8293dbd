"""JSON market-spec files.

One format covers both market classes::

    {
      "d": 1, "m": 1,
      "a": [0.08],
      "sigma": [[0.2]]        (or "c": [[0.04]]),
      "atoms": [{"z": [-0.5], "rate": 0.1}],
      "ito": {"model": "constant"}            (optional)
    }

Presence of the "ito" key selects the Ito engine.  Supported coefficient
models: "constant", "schedule" (fields "times", "a", "sigma"), and
"mean_reverting_vol" (fields "kappa", "theta", "xi", "y0").
"""

from __future__ import annotations

import json

import numpy as np

from .markets import (
    ConstantCoefficients,
    ItoMarketSpec,
    JumpAtom,
    LevyMarketSpec,
    MeanRevertingVolatility,
    PiecewiseCoefficients,
    SpecValidationError,
    validate_spec,
)


def parse_spec(data: dict) -> LevyMarketSpec | ItoMarketSpec:
    """Build and validate a market spec from a parsed JSON object."""
    if not isinstance(data, dict):
        raise SpecValidationError(["spec file must contain a JSON object"])
    try:
        d = int(data["d"])
        m = int(data.get("m", d))
    except (KeyError, TypeError, ValueError):
        raise SpecValidationError(["spec must declare integer d (and optionally m)"]) from None
    atoms = tuple(
        JumpAtom(z=np.asarray(at["z"], dtype=float), rate=float(at["rate"]))
        for at in data.get("atoms", [])
    )
    ito = data.get("ito")
    if ito is not None:
        model = _parse_ito_model(data, ito, d, m)
        if atoms:
            raise SpecValidationError(["ito markets do not take jump atoms"])
        return validate_spec(ItoMarketSpec(d=d, m=m, coefficient_model=model))
    spec = LevyMarketSpec(
        d=d,
        m=m,
        a=np.asarray(data.get("a", np.zeros(d)), dtype=float),
        sigma=np.asarray(data["sigma"], dtype=float) if "sigma" in data else None,
        c=np.asarray(data["c"], dtype=float) if "c" in data else None,
        atoms=atoms,
    )
    return validate_spec(spec)


def _parse_ito_model(data: dict, ito: dict, d: int, m: int):
    kind = ito.get("model", "constant")
    if kind == "constant":
        sigma = data.get("sigma")
        if sigma is None and "c" in data:
            c = np.atleast_2d(np.asarray(data["c"], dtype=float))
            evals, evecs = np.linalg.eigh(0.5 * (c + c.T))
            sigma = evecs @ np.diag(np.sqrt(np.maximum(evals, 0.0)))
        if sigma is None:
            raise SpecValidationError(["constant ito model needs sigma or c"])
        return ConstantCoefficients(a=np.asarray(data["a"], dtype=float), sigma=sigma)
    if kind == "schedule":
        return PiecewiseCoefficients(
            times=np.asarray(ito["times"], dtype=float),
            a_values=np.asarray(ito["a"], dtype=float),
            sigma_values=np.asarray(ito["sigma"], dtype=float),
        )
    if kind == "mean_reverting_vol":
        return MeanRevertingVolatility(
            a=np.asarray(data["a"], dtype=float),
            sigma=np.asarray(data["sigma"], dtype=float),
            kappa=float(ito.get("kappa", 2.0)),
            theta=float(ito.get("theta", 0.0)),
            xi=float(ito.get("xi", 0.3)),
            y0=float(ito.get("y0", 0.0)),
        )
    raise SpecValidationError([f"unknown ito coefficient model {kind!r}"])


def load_spec(path: str) -> LevyMarketSpec | ItoMarketSpec:
    """Load and validate a market spec from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise SpecValidationError([f"spec file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise SpecValidationError([f"malformed JSON in {path}: {exc}"]) from None
    try:
        return parse_spec(data)
    except SpecValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError([f"malformed spec: {exc}"]) from None
