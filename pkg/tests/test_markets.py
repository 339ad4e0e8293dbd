"""Spec validation and constraint-set geometry."""

import numpy as np
import pytest

from market_clock import (
    ConstantCoefficients,
    ConstraintQuery,
    ItoMarketSpec,
    JumpAtom,
    LevyMarketSpec,
    MeanRevertingVolatility,
    PiecewiseCoefficients,
    SpecValidationError,
    in_constraint_set,
    in_recession_cone,
    spec_violations,
    validate_spec,
)


def bs1():
    return LevyMarketSpec(d=1, m=1, a=[0.08], c=[[0.04]])


def j2():
    return LevyMarketSpec(
        d=1, m=1, a=[0.05], c=[[0.01]], atoms=[JumpAtom([0.25], 0.2)]
    )


class TestValidation:
    def test_valid_spec_passes_and_materializes_c(self):
        spec = validate_spec(LevyMarketSpec(d=1, m=1, a=[0.08], sigma=[[0.2]]))
        assert spec.validated
        assert np.allclose(spec.c, [[0.04]])

    def test_validation_is_idempotent(self):
        spec = validate_spec(bs1())
        assert validate_spec(spec) is spec

    def test_shape_mismatch_reported(self):
        bad = LevyMarketSpec(d=2, m=2, a=[0.1], c=np.eye(2))
        errs = spec_violations(bad)
        assert any("a has shape" in e for e in errs)

    def test_missing_diffusion_matrix(self):
        errs = spec_violations(LevyMarketSpec(d=1, m=1, a=[0.1]))
        assert any("sigma or c" in e for e in errs)

    def test_sigma_c_disagreement(self):
        bad = LevyMarketSpec(d=1, m=1, a=[0.1], sigma=[[0.2]], c=[[0.9]])
        with pytest.raises(SpecValidationError) as ei:
            validate_spec(bad)
        assert any("disagree" in e for e in ei.value.errors)

    def test_non_psd_c_rejected(self):
        bad = LevyMarketSpec(d=2, m=2, a=[0.1, 0.1], c=[[1.0, 0.0], [0.0, -0.5]])
        errs = spec_violations(bad)
        assert any("positive semidefinite" in e for e in errs)

    def test_asymmetric_c_rejected(self):
        bad = LevyMarketSpec(d=2, m=2, a=[0.1, 0.1], c=[[1.0, 0.5], [0.0, 1.0]])
        errs = spec_violations(bad)
        assert any("symmetric" in e for e in errs)

    def test_jump_below_minus_one_rejected(self):
        bad = LevyMarketSpec(d=1, m=1, a=[0.1], c=[[0.04]], atoms=[JumpAtom([-1.5], 0.1)])
        errs = spec_violations(bad)
        assert any("below -1" in e for e in errs)

    def test_nonpositive_rate_rejected(self):
        bad = LevyMarketSpec(d=1, m=1, a=[0.1], c=[[0.04]], atoms=[JumpAtom([0.5], 0.0)])
        errs = spec_violations(bad)
        assert any("rate" in e for e in errs)

    def test_all_violations_collected(self):
        bad = LevyMarketSpec(
            d=1, m=1, a=[np.nan], c=[[0.04]], atoms=[JumpAtom([-2.0], -1.0)]
        )
        with pytest.raises(SpecValidationError) as ei:
            validate_spec(bad)
        assert len(ei.value.errors) >= 3

    def test_jump_matrix_and_rates(self):
        spec = validate_spec(j2())
        assert spec.jump_matrix.shape == (1, 1)
        assert spec.jump_rates.tolist() == [0.2]
        assert spec.kappa == 0.25

    def test_kappa_zero_without_upward_jumps(self):
        spec = validate_spec(
            LevyMarketSpec(d=1, m=1, a=[0.1], c=[[0.0]], atoms=[JumpAtom([-0.5], 0.1)])
        )
        assert spec.kappa == 0.0


class TestItoModels:
    def test_constant_model_nodes(self):
        spec = validate_spec(
            ItoMarketSpec(
                d=1, m=1,
                coefficient_model=ConstantCoefficients(a=[0.08], sigma=[[0.2]]),
            )
        )
        a, s = spec.coefficient_model.node_values(np.linspace(0, 1, 5))
        assert a.shape == (5, 1) and s.shape == (5, 1, 1)
        assert np.all(a == 0.08) and np.all(s == 0.2)

    def test_piecewise_schedule_lookup(self):
        model = PiecewiseCoefficients(
            times=[0.0, 1.0], a_values=[[0.1], [0.2]], sigma_values=[[[0.2]], [[0.3]]]
        )
        a, s = model.node_values(np.array([0.0, 0.5, 1.0, 2.0]))
        assert a[:, 0].tolist() == [0.1, 0.1, 0.2, 0.2]
        assert s[:, 0, 0].tolist() == [0.2, 0.2, 0.3, 0.3]

    def test_mean_reverting_model_flagged_stochastic(self):
        model = MeanRevertingVolatility(a=[0.08], sigma=[[0.2]])
        assert not model.deterministic
        spec = validate_spec(ItoMarketSpec(d=1, m=1, coefficient_model=model))
        assert spec.validated

    def test_bad_ito_dimensions_rejected(self):
        model = ConstantCoefficients(a=[0.08], sigma=[[0.2]])
        with pytest.raises(SpecValidationError):
            validate_spec(ItoMarketSpec(d=2, m=1, coefficient_model=model))


class TestConstraintGeometry:
    def test_no_atoms_everything_feasible(self):
        q = ConstraintQuery(atoms=())
        assert in_constraint_set(np.array([123.0]), q)
        assert in_recession_cone(np.array([-123.0]), q)

    def test_membership_boundary(self):
        q = ConstraintQuery(atoms=(JumpAtom([-0.5], 0.1),))
        assert in_constraint_set(np.array([1.9]), q)
        assert in_constraint_set(np.array([2.0]), q)  # wealth hits exactly zero
        assert not in_constraint_set(np.array([2.1]), q)

    def test_recession_cone_is_scale_free(self):
        q = ConstraintQuery.from_spec(validate_spec(j2()))
        eta = np.array([5.0])
        assert in_recession_cone(eta, q)
        assert in_recession_cone(100 * eta, q)
        assert not in_recession_cone(-eta, q)

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError):
            ConstraintQuery(atoms=(), eps_feas=-1.0)
