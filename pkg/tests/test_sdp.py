import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import linalg
import sdp


def lambda_max_problem(h: np.ndarray, scale: float = 1.0) -> sdp.SdpProblem:
    """min <-emb(H), Y>  s.t.  tr Y = 1; the optimum is -lambda_max(H)."""
    emb = linalg.real_embedding(h)
    n = emb.shape[0]
    return sdp.SdpProblem([n], [-emb], [([scale * np.eye(n)], scale * 1.0)], name="lambda-max")


def test_lambda_max_program_pauli_x(paulis):
    sx, _, _ = paulis
    solution = sdp.solve(lambda_max_problem(sx))
    assert solution.status == sdp.SdpStatus.OPTIMAL
    # dual form: min t s.t. t I - emb(sx) >= 0
    assert -solution.dual_objective == pytest.approx(1.0, abs=1e-7)
    assert -solution.primal_objective == pytest.approx(1.0, abs=1e-7)


@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
@settings(max_examples=10, deadline=None)
def test_lambda_max_program_matches_eigensolver(seed):
    h = linalg.random_hermitian(3, linalg.RandomStream(seed))
    solution = sdp.solve(lambda_max_problem(h))
    assert solution.status == sdp.SdpStatus.OPTIMAL
    assert -solution.primal_objective == pytest.approx(linalg.lambda_max(h), abs=1e-7)


def test_two_node_cut_program():
    # min <C, X> s.t. X_11 = X_22 = 1: optimum X = [[1,-1],[-1,1]], value -2
    c = np.array([[0.0, 1.0], [1.0, 0.0]])
    constraints = [([np.diag([1.0, 0.0])], 1.0), ([np.diag([0.0, 1.0])], 1.0)]
    solution = sdp.solve(sdp.SdpProblem([2], [c], constraints))
    assert solution.status == sdp.SdpStatus.OPTIMAL
    assert solution.primal_objective == pytest.approx(-2.0, abs=1e-6)
    assert np.allclose(solution.x_blocks[0], [[1, -1], [-1, 1]], atol=1e-4)


def test_linear_program_with_scalar_blocks():
    # min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0
    problem = sdp.SdpProblem([1, 1], [[[1.0]], [[2.0]]], [([[[1.0]], [[1.0]]], 1.0)])
    solution = sdp.solve(problem)
    assert solution.status == sdp.SdpStatus.OPTIMAL
    assert solution.primal_objective == pytest.approx(1.0, abs=1e-6)
    assert solution.x_blocks[1][0, 0] == pytest.approx(0.0, abs=1e-6)


def test_trace_normalized_projection():
    # min <diag(3, 1, 2), X> s.t. tr X = 2: all mass on the smallest diagonal entry
    problem = sdp.SdpProblem([3], [np.diag([3.0, 1.0, 2.0])], [([np.eye(3)], 2.0)])
    solution = sdp.solve(problem)
    assert solution.primal_objective == pytest.approx(2.0, abs=1e-6)
    assert solution.y[0] == pytest.approx(1.0, abs=1e-6)


def test_optimal_solution_invariants(paulis):
    _, sy, _ = paulis
    solution = sdp.solve(lambda_max_problem(sy + 0.3 * np.eye(2)))
    assert solution.status == sdp.SdpStatus.OPTIMAL
    assert solution.primal_residual <= 1e-8
    assert solution.relative_gap <= 1e-7
    assert np.linalg.eigvalsh(solution.x_blocks[0])[0] >= -1e-9
    assert np.linalg.eigvalsh(solution.z_blocks[0])[0] >= -1e-9


def test_weak_duality_along_iterates(paulis):
    sx, _, sz = paulis
    solution = sdp.solve(lambda_max_problem(sx + 0.5 * sz))
    assert len(solution.history) > 1
    for record in solution.history:
        scale = 1 + abs(record.primal_objective) + abs(record.dual_objective) + record.complementarity
        assert record.complementarity > 0
        assert record.corrected_gap >= -1e-9 * scale
        assert record.corrected_gap == pytest.approx(record.complementarity, abs=1e-9 * scale)
    last = solution.history[-1]
    assert last.primal_objective >= last.dual_objective - 1e-6


def test_constraint_rescaling_invariance(rng):
    h = linalg.random_hermitian(3, rng)
    base = sdp.solve(lambda_max_problem(h))
    scaled = sdp.solve(lambda_max_problem(h, scale=10.0))
    assert scaled.primal_objective == pytest.approx(base.primal_objective, abs=1e-7)


def test_dependent_constraints_rejected():
    with pytest.raises(ValueError):
        sdp.SdpProblem([2], [np.eye(2)], [([np.eye(2)], 1.0), ([2 * np.eye(2)], 2.0)])


def test_block_shape_and_symmetry_checks():
    with pytest.raises(ValueError):
        sdp.SdpProblem([2], [np.eye(3)], [([np.eye(2)], 1.0)])
    with pytest.raises(ValueError):
        sdp.SdpProblem([2], [np.array([[0.0, 1.0], [0.0, 0.0]])], [([np.eye(2)], 1.0)])


def test_problem_json_round_trip():
    problem = sdp.SdpProblem([2, 1], [np.eye(2), [[1.0]]], [([np.eye(2), [[1.0]]], 3.0)], name="dump")
    restored = sdp.SdpProblem.from_dict(problem.to_dict())
    assert restored.block_dims == [2, 1]
    assert restored.constraints[0][1] == 3.0
    assert restored.name == "dump"


def test_feasibility_trace_one_is_feasible():
    result = sdp.feasibility(sdp.SdpProblem([2], [np.zeros((2, 2))], [([np.eye(2)], 1.0)]))
    assert result.status == sdp.FeasibilityStatus.FEASIBLE
    witness = result.witness[0]
    assert np.trace(witness) == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.eigvalsh(witness)[0] >= -1e-8
    assert np.allclose(witness, np.eye(2) / 2, atol=1e-5)


def test_feasibility_negative_trace_is_infeasible():
    result = sdp.feasibility(sdp.SdpProblem([2], [np.zeros((2, 2))], [([np.eye(2)], -1.0)]))
    assert result.status == sdp.FeasibilityStatus.INFEASIBLE
    assert result.margin >= 1e-8
    # -sum y_j A_j >= 0 on the original cone
    assert -result.certificate[0] >= 0


def test_unbounded_program_is_not_reported_optimal():
    # min -x1 s.t. x1 - x2 = 0 has no finite optimum
    problem = sdp.SdpProblem([1, 1], [[[-1.0]], [[0.0]]], [([[[1.0]], [[-1.0]]], 0.0)])
    solution = sdp.solve(problem, max_iter=100)
    assert solution.status in (sdp.SdpStatus.UNBOUNDED, sdp.SdpStatus.ITERATION_CAP)
