import math
from dataclasses import replace

import numpy as np
import pytest

from observables.linalg import (
    ComplexMatrix,
    ComplexScalar,
    DimensionMismatchError,
    NotHermitianError,
    frobenius_norm,
    unitarity_deviation,
)
from observables.multiport import (
    MultiportPlan,
    NotUnitaryError,
    TwoLevelRotation,
    network_born_check,
    realize_arms,
    realize_measurement,
    reck_decompose,
    reconstruct,
)
from observables.states import DensityState, PureState
from observables.utils.enums import SourceKind
from tests.conftest import (
    MULTIPORT_DIMS,
    RECONSTRUCTION_TOL,
    lowering_operator,
    rotation,
    sigma_x,
    sigma_z,
)
from tests.tests_utils.random_operators import RandomOperators


class TestTwoLevelRotation:
    """Tests for TwoLevelRotation"""

    def test_embedding(self):
        """Test the factor only touches its two modes"""
        factor = TwoLevelRotation(m=1, n=2, theta=math.pi / 2, phi=0.0)
        embedded = factor.matrix(3).entries
        assert np.allclose(embedded, [[1, 0, 0], [0, 0, -1], [0, 1, 0]])

    @pytest.mark.parametrize(("theta", "phi"), [(0.0, 0.0), (0.3, 1.2), (math.pi / 2, 6.0)])
    def test_factor_is_unitary(self, theta: float, phi: float):
        """Test every embedded factor is unitary"""
        factor = TwoLevelRotation(m=0, n=3, theta=theta, phi=phi)
        assert unitarity_deviation(factor.matrix(5)) <= 1e-12

    def test_rejects_bad_modes(self):
        """Test m < n and n < dim are enforced"""
        with pytest.raises(DimensionMismatchError, match="0 <= m < n"):
            TwoLevelRotation(m=2, n=1, theta=0.0, phi=0.0)
        with pytest.raises(DimensionMismatchError, match="mode 3 does not exist"):
            TwoLevelRotation(m=0, n=3, theta=0.0, phi=0.0).matrix(3)


class TestReckDecompose:
    """Tests for reck_decompose and reconstruct"""

    @pytest.mark.parametrize("dim", [1, 2, 5])
    def test_identity(self, dim: int):
        """Test the identity needs no factors and unit phases"""
        plan = reck_decompose(ComplexMatrix.identity(dim))
        assert plan.factor_count == 0
        assert plan.output_phases == tuple(ComplexScalar(1.0, 0.0) for _ in range(dim))

    @pytest.mark.parametrize("theta", [0.1, 0.7, 1.5])
    def test_single_rotation(self, theta: float):
        """Test a real 2x2 rotation is a single factor with its angle"""
        plan = reck_decompose(rotation(theta))
        assert plan.factor_count == 1
        assert plan.factors[0].theta == pytest.approx(theta, abs=1e-12)
        assert plan.factors[0].phi == pytest.approx(0.0, abs=1e-12)
        assert reconstruct(plan).is_close(rotation(theta), RECONSTRUCTION_TOL)

    def test_empty_plan(self):
        """Test an empty plan with unit phases reconstructs the identity"""
        plan = MultiportPlan(dim=3, factors=(), output_phases=(ComplexScalar(1.0, 0.0),) * 3)
        assert reconstruct(plan) == ComplexMatrix.identity(3)

    @pytest.mark.parametrize("dim", MULTIPORT_DIMS)
    def test_round_trip(self, dim: int, rng: np.random.Generator):
        """Test 50 random unitaries per dimension factor and reconstruct"""
        operators = RandomOperators(rng=rng)
        for _ in range(50):
            u = operators.unitary(dim)
            plan = reck_decompose(u)
            rebuilt = reconstruct(plan)
            assert frobenius_norm(rebuilt - u) <= RECONSTRUCTION_TOL
            assert unitarity_deviation(rebuilt) <= 1e-12
            assert plan.factor_count == dim * (dim - 1) // 2
            for factor in plan.factors:
                assert 0.0 <= factor.theta <= math.pi / 2
                assert 0.0 <= factor.phi < 2 * math.pi
            for phase in plan.output_phases:
                assert abs(phase) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_unitary(self):
        """Test a Hermitian non-unitary input reports its deviation"""
        with pytest.raises(NotUnitaryError, match="exceeds") as info:
            reck_decompose(ComplexMatrix([[1, 1], [1, 1]]))
        assert info.value.deviation > 1.0


class TestRealizeMeasurement:
    """Tests for realize_measurement"""

    def test_sigma_x(self):
        """Test σ₁ needs a single factor"""
        realization = realize_measurement(sigma_x())
        assert realization.plan.factor_count == 1
        assert realization.eigenvalues == pytest.approx((-1.0, 1.0))
        assert realization.residual <= RECONSTRUCTION_TOL

    def test_ascending_diagonal_is_trivial(self):
        """Test a diagonal observable in ascending order needs no network"""
        realization = realize_measurement(ComplexMatrix.diagonal([-1, 0.5, 2]))
        assert realization.plan.factor_count == 0

    def test_random_hermitian(self, rng: np.random.Generator):
        """Test V·diag(λ)·V† reproduces random observables"""
        operators = RandomOperators(rng=rng)
        for dim in range(2, 9):
            assert realize_measurement(operators.hermitian(dim)).residual <= RECONSTRUCTION_TOL

    def test_rejects_non_hermitian(self):
        """Test only Hermitian observables can be realized"""
        with pytest.raises(NotHermitianError, match="exceeds"):
            realize_measurement(lowering_operator())


class TestNetworkBornCheck:
    """Tests for network_born_check"""

    def test_eigenstate(self):
        """Test an eigenstate lights a single mode"""
        realization = realize_measurement(sigma_x())
        plus = PureState.normalized([1, 1])
        comparison = network_born_check(plus, realization)
        assert comparison.mode_probabilities == pytest.approx((0.0, 1.0), abs=1e-10)
        assert comparison.max_difference <= 1e-10

    def test_maximally_mixed(self, rng: np.random.Generator):
        """Test I/d lights every mode equally"""
        realization = realize_measurement(RandomOperators(rng=rng).hermitian(4))
        comparison = network_born_check(DensityState.maximally_mixed(4), realization)
        assert comparison.mode_probabilities == pytest.approx((0.25,) * 4, abs=1e-10)

    def test_random_instances(self, rng: np.random.Generator):
        """Test network and Born probabilities agree for random states and observables"""
        operators = RandomOperators(rng=rng)
        for dim in range(2, 9):
            for _ in range(5):
                realization = realize_measurement(operators.hermitian(dim))
                comparison = network_born_check(operators.density(dim), realization)
                assert comparison.max_difference <= 1e-10

    def test_degenerate_outcomes_are_merged(self):
        """Test modes of one degenerate eigenvalue are summed"""
        realization = realize_measurement(ComplexMatrix.diagonal([1, 1, 2]))
        comparison = network_born_check(DensityState.maximally_mixed(3), realization)
        assert comparison.network_probabilities == pytest.approx((2 / 3, 1 / 3))

    def test_dimension_mismatch(self):
        """Test the state must match the observable"""
        with pytest.raises(DimensionMismatchError, match="state dim 3 vs observable dim 2"):
            network_born_check(DensityState.maximally_mixed(3), realize_measurement(sigma_z()))

    def test_faulty_plan_is_detected(self):
        """Test a network with a wrong mixing angle disagrees with the Born rule"""
        realization = realize_measurement(sigma_x())
        factor = realization.plan.factors[0]
        faulty_plan = replace(realization.plan, factors=(replace(factor, theta=factor.theta / 3),))
        faulty = replace(realization, plan=faulty_plan)
        plus = PureState.normalized([1, 1])
        assert network_born_check(plus, realization).max_difference <= 1e-10
        assert network_born_check(plus, faulty).max_difference >= 0.2


class TestRealizeArms:
    """Tests for realize_arms"""

    def test_lowering_on_singlet(self):
        """Test each arm realizes its part: -σ₁/2 on particle 1, -σ₂/2 on particle 2"""
        arms = realize_arms(lowering_operator(), SourceKind.SINGLET)
        assert arms.particle1.observable.is_close(-0.5 * sigma_x(), 1e-15)
        assert arms.particle1.eigenvalues == pytest.approx((-0.5, 0.5))
        assert arms.particle2.eigenvalues == pytest.approx((-0.5, 0.5))
        assert arms.particle1.residual <= RECONSTRUCTION_TOL
        assert arms.particle2.residual <= RECONSTRUCTION_TOL
