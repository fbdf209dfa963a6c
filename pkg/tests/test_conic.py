import numpy as np
import pytest

from irsbeam.conic import (CeilingRow, ConicProblem, FloorRow, SolverOptions,
                           dominant_eigvec, dump_problem, embed_problem,
                           embed_real, hmat, hvec, load_problem, project_psd,
                           solve, verify_solution)
from irsbeam.errors import InternalInvariantError
from tests.conftest import HAS_CVXPY, needs_cvxpy


def _rand_hermitian(rng, n):
    B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (B + B.conj().T)


def _coeff(a):
    A = np.outer(np.conj(a), a)
    return 0.5 * (A + A.conj().T)


# ---------------------------------------------------------------------------
# Hermitian vectorization and projection helpers


class TestHvec:
    def test_round_trip(self):
        rng = np.random.default_rng(2)
        for n in (1, 2, 5, 8):
            A = _rand_hermitian(rng, n)
            np.testing.assert_allclose(hmat(hvec(A), n), A, atol=1e-14)

    def test_isometry_inner_product(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            A, B = _rand_hermitian(rng, n), _rand_hermitian(rng, n)
            assert hvec(A) @ hvec(B) == pytest.approx(
                np.trace(A @ B).real, rel=1e-12, abs=1e-12)

    def test_norm_preserved(self):
        rng = np.random.default_rng(5)
        A = _rand_hermitian(rng, 6)
        assert np.linalg.norm(hvec(A)) == pytest.approx(
            np.linalg.norm(A, "fro"), rel=1e-12)


class TestProjectPsd:
    def test_hand_example(self):
        got = project_psd(np.array([[2.0, 0.0], [0.0, -1.0]]))
        np.testing.assert_allclose(got, [[2.0, 0.0], [0.0, 0.0]], atol=1e-12)

    def test_fixed_point_on_psd(self):
        rng = np.random.default_rng(7)
        B = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        P = B @ B.conj().T
        np.testing.assert_allclose(project_psd(P), P, atol=1e-10)

    def test_result_is_psd_and_frobenius_nearest(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            A = _rand_hermitian(rng, n)
            X = project_psd(A)
            assert np.linalg.eigvalsh(X).min() >= -1e-10
            base = np.linalg.norm(X - A, "fro")
            # no random PSD candidate may sit closer to A than the projection
            for _ in range(20):
                B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
                Y = B @ B.conj().T
                assert np.linalg.norm(Y - A, "fro") >= base - 1e-9

    def test_idempotent(self):
        rng = np.random.default_rng(13)
        A = _rand_hermitian(rng, 4)
        X = project_psd(A)
        np.testing.assert_allclose(project_psd(X), X, atol=1e-10)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InternalInvariantError):
            project_psd(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestDominantEigvec:
    def test_diagonal_example(self):
        lam, v = dominant_eigvec(np.diag([2.0, 1.0]))
        assert lam == pytest.approx(2.0)
        np.testing.assert_allclose(np.abs(v), [1.0, 0.0], atol=1e-12)

    def test_exchange_example(self):
        lam, v = dominant_eigvec(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert lam == pytest.approx(1.0)
        np.testing.assert_allclose(np.abs(v), [2 ** -0.5] * 2, atol=1e-12)

    def test_matches_rayleigh_quotient(self):
        rng = np.random.default_rng(17)
        A = _rand_hermitian(rng, 6)
        lam, v = dominant_eigvec(A + 10 * np.eye(6))  # shift so top eig > 0
        assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)
        assert (v.conj() @ (A + 10 * np.eye(6)) @ v).real == pytest.approx(
            lam, rel=1e-10)

    def test_rejects_nonpositive_top_eigenvalue(self):
        with pytest.raises(ValueError):
            dominant_eigvec(-np.eye(3))


class TestEmbedReal:
    def test_preserves_trace_products(self):
        rng = np.random.default_rng(19)
        A, W = _rand_hermitian(rng, 4), _rand_hermitian(rng, 4)
        lhs = np.trace(embed_real(A) / 2.0 @ embed_real(W)).real
        assert lhs == pytest.approx(np.trace(A @ W).real, rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------------------
# The splitting solver on instances with known answers


class TestAnalyticInstances:
    def test_maxcut_two_nodes(self):
        # max Tr(C W), diag = 1, PSD; C couples the two entries so the best
        # W is the all-ones matrix with value 2
        C = np.array([[0.0, 1.0], [1.0, 0.0]])
        sol = solve(ConicProblem(n=2, objective=C, mode="linear"))
        assert sol.status == "optimal"
        assert np.trace(C @ sol.W).real == pytest.approx(2.0, abs=1e-4)
        np.testing.assert_allclose(np.diagonal(sol.W).real, 1.0, atol=1e-9)
        assert sol.objective == pytest.approx(2.0, abs=1e-4)

    def test_maxcut_sign_flip(self):
        C = np.array([[0.0, -1.0], [-1.0, 0.0]])
        sol = solve(ConicProblem(n=2, objective=C, mode="linear"))
        assert np.trace(C @ sol.W).real == pytest.approx(2.0, abs=1e-4)
        assert sol.W[0, 1].real == pytest.approx(-1.0, abs=1e-4)

    def test_maxcut_three_nodes_all_ones(self):
        C = np.ones((3, 3)) - np.eye(3)
        sol = solve(ConicProblem(n=3, objective=C, mode="linear"))
        assert np.trace(C @ sol.W).real == pytest.approx(6.0, abs=1e-3)

    def test_single_element_floor(self):
        # n = 1: W = [[1]], floor Tr(W) >= rho gives rho* = 1, 0 dB
        prob = ConicProblem(n=1, floor_rows=(FloorRow(np.eye(1), 1.0),))
        sol = solve(prob)
        assert sol.status == "optimal"
        assert sol.rho == pytest.approx(1.0, rel=1e-5)
        assert sol.objective == pytest.approx(0.0, abs=1e-4)

    def test_two_conflicting_floors(self):
        # floors 2 + 2x >= rho and 2 - 2x >= rho meet at x = 0, rho* = 2
        A = _coeff(np.array([1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0), FloorRow(B, 1.0)))
        sol = solve(prob)
        assert sol.status == "optimal"
        assert sol.rho == pytest.approx(2.0, rel=1e-4)
        assert abs(sol.W[0, 1].real) < 1e-3

    def test_floor_weight_shifts_balance(self):
        # with weight 2 on the second floor the meet point solves
        # 2 + 2x = (2 - 2x)/2 -> x = -1/3, rho* = 4/3
        A = _coeff(np.array([1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0, 1.0),
                                             FloorRow(B, 1.0, 2.0)))
        sol = solve(prob)
        assert sol.rho == pytest.approx(4.0 / 3.0, rel=1e-4)
        assert sol.W[0, 1].real == pytest.approx(-1.0 / 3.0, abs=1e-3)

    def test_floor_scale_shifts_balance(self):
        # scale 3 on the first floor: 3(2 + 2x) = 2 - 2x -> x = -1/2, rho* = 3
        A = _coeff(np.array([1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 3.0), FloorRow(B, 1.0)))
        sol = solve(prob)
        assert sol.rho == pytest.approx(3.0, rel=1e-4)
        assert sol.W[0, 1].real == pytest.approx(-0.5, abs=1e-3)

    def test_binding_ceiling_instance(self):
        # floor 2 + 2 Re(x) >= rho, ceiling 2 + 2 Im(x) <= rho / 2; the
        # optimum x = 1 attains rho* = 4 with both rows active
        a = np.array([1.0, 1.0])
        c = np.array([1.0, 1.0j])
        prob = ConicProblem(n=2, floor_rows=(FloorRow(_coeff(a), 1.0),),
                            ceiling_rows=(CeilingRow(_coeff(c), 1.0),),
                            delta=2.0)
        sol = solve(prob)
        assert sol.status == "optimal"
        assert sol.rho == pytest.approx(4.0, rel=1e-3)
        assert sol.W[0, 1].real == pytest.approx(1.0, abs=5e-3)

    def test_linear_mode_matches_db_mode_argmax(self):
        # the margin objective is monotone in both modes, so the optimal rho
        # agrees even though the objective values differ
        A = _coeff(np.array([1.0, 1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0, 1.0]))
        rows = (FloorRow(A, 1.0), FloorRow(B, 1.0))
        rho_db = solve(ConicProblem(n=3, floor_rows=rows, mode="db")).rho
        rho_lin = solve(ConicProblem(n=3, floor_rows=rows, mode="linear")).rho
        assert rho_db == pytest.approx(rho_lin, rel=1e-3)

    def test_some_floor_binds_at_optimum(self):
        A = _coeff(np.array([1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0]))
        sol = solve(ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),
                                                  FloorRow(B, 1.0))))
        slacks = [1.0 * np.trace(M @ sol.W).real - sol.rho for M in (A, B)]
        assert min(slacks) / sol.rho <= 1e-4


class TestSolverMechanics:
    def test_deterministic_repeat(self):
        A = _coeff(np.array([1.0, 1.0, 1.0j]))
        B = _coeff(np.array([1.0, -1.0, 1.0]))
        prob = ConicProblem(n=3, floor_rows=(FloorRow(A, 1.0), FloorRow(B, 1.0)))
        one = solve(prob)
        two = solve(prob)
        assert np.array_equal(one.W, two.W)
        assert one.rho == two.rho
        assert one.iterations == two.iterations

    def test_warm_start_reconverges_fast(self):
        A = _coeff(np.array([1.0, 1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0, 1.0]))
        prob = ConicProblem(n=3, floor_rows=(FloorRow(A, 1.0), FloorRow(B, 1.0)))
        cold = solve(prob)
        warm = solve(prob, state=cold.state)
        assert warm.status == "optimal"
        assert warm.rho == pytest.approx(cold.rho, rel=1e-5)
        assert warm.iterations <= cold.iterations

    def test_max_iters_status(self):
        A = _coeff(np.array([1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0), FloorRow(B, 1.0)))
        sol = solve(prob, options=SolverOptions(max_iters=3))
        assert sol.status == "max_iters"
        assert sol.iterations == 3

    def test_unit_diagonal_exact_on_report(self):
        A = _coeff(np.exp(1j * np.linspace(0.0, 2.0, 4)))
        sol = solve(ConicProblem(n=4, floor_rows=(FloorRow(A, 1.0),)))
        np.testing.assert_allclose(np.diagonal(sol.W).real, 1.0, atol=1e-9)
        assert np.abs(np.diagonal(sol.W).imag).max() < 1e-12

    def test_verify_wired_into_solution_info(self):
        A = _coeff(np.array([1.0, 1.0]))
        sol = solve(ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),)))
        assert sol.info["verify"]["ok"]

    def test_rejects_bad_rows(self):
        with pytest.raises(ValueError):
            ConicProblem(n=2, floor_rows=(FloorRow(np.eye(2), -1.0),))
        with pytest.raises(ValueError):
            ConicProblem(n=2, ceiling_rows=(CeilingRow(np.eye(2), 0.0),))
        with pytest.raises(ValueError):
            ConicProblem(n=2, delta=0.0)
        with pytest.raises(ValueError):
            ConicProblem(n=2, mode="exp")
        with pytest.raises(InternalInvariantError):
            ConicProblem(n=2, objective=np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestVerifySolution:
    def test_accepts_true_solution(self):
        A = _coeff(np.array([1.0, 1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),))
        sol = solve(prob)
        report = verify_solution(prob, sol.W, sol.rho, tol=1e-5)
        assert report["ok"]

    def test_flags_diagonal_violation(self):
        A = _coeff(np.array([1.0, 1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),))
        W = np.eye(2, dtype=complex) * 1.1
        report = verify_solution(prob, W, 0.1)
        assert not report["ok"]
        assert report["diag_err"] == pytest.approx(0.1, abs=1e-12)

    def test_flags_floor_violation(self):
        A = _coeff(np.array([1.0, -1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),))
        # all-ones W has Tr(A W) = 0, far below the claimed margin 4
        report = verify_solution(prob, np.ones((2, 2), dtype=complex), 4.0)
        assert not report["ok"]
        assert report["floor_violation_rel"] > 0.5

    def test_flags_indefinite_matrix(self):
        A = _coeff(np.array([1.0, 1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),))
        W = np.array([[1.0, 2.0], [2.0, 1.0]], dtype=complex)  # eigs 3, -1
        report = verify_solution(prob, W, 1.0)
        assert report["min_eig_rel"] < -0.3
        assert not report["ok"]


class TestInfeasibility:
    def test_positive_level_conflict_certified(self):
        # diag(W) = 1 pins Tr(W) = 2, so the identity ceiling forces
        # rho >= 2 * 2.5 = 5 while the floor can reach at most 4: certified
        A = _coeff(np.array([1.0, 1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),),
                            ceiling_rows=(CeilingRow(np.eye(2), 1.0),),
                            delta=2.5)
        sol = solve(prob)
        assert sol.status == "infeasible"
        assert "certificate" in sol.info

    def test_degenerate_pinch_never_reports_optimal(self):
        # floor and ceiling on the same row force rho <= rho/2, which only
        # rho -> 0 approaches; a positive margin never exists but no strictly
        # separating level does either, so the solver may stop on the
        # iteration cap -- what it must never do is claim success
        A = _coeff(np.array([1.0, 1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),),
                            ceiling_rows=(CeilingRow(A, 1.0),), delta=2.0)
        sol = solve(prob, options=SolverOptions(max_iters=4000))
        assert sol.status in ("max_iters", "infeasible")
        assert sol.rho < 1e-3

    def test_opposed_rows_certified(self):
        # ceiling on the whole diagonal: Tr(W) = n is forced, so the ceiling
        # demands rho >= delta * n while the floor caps rho at Tr(A W) <= n
        A = _coeff(np.array([1.0, 1.0, 1.0]))
        prob = ConicProblem(n=3, floor_rows=(FloorRow(A, 1.0),),
                            ceiling_rows=(CeilingRow(np.eye(3), 1.0),),
                            delta=4.0)
        sol = solve(prob)
        assert sol.status == "infeasible"

    def test_feasible_neighbor_not_flagged(self):
        # the same geometry with delta < 1 is feasible; guard against the
        # certificate firing on feasible problems
        A = _coeff(np.array([1.0, 1.0, 1.0]))
        prob = ConicProblem(n=3, floor_rows=(FloorRow(A, 1.0),),
                            ceiling_rows=(CeilingRow(np.eye(3), 1.0),),
                            delta=0.25)
        sol = solve(prob)
        assert sol.status == "optimal"
        assert sol.rho > 0


class TestSerialization:
    def test_dump_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(23)
        prob = ConicProblem(
            n=3,
            objective=_rand_hermitian(rng, 3),
            floor_rows=(FloorRow(_coeff(np.exp(1j * rng.uniform(size=3))), 1.5, 0.7),),
            ceiling_rows=(CeilingRow(_coeff(np.exp(1j * rng.uniform(size=3))), 2.5),),
            delta=3.0, mode="db", rho_coeff=0.5)
        path = tmp_path / "prob.json"
        dump_problem(prob, path)
        back = load_problem(path)
        assert back.n == prob.n and back.mode == prob.mode
        assert back.delta == prob.delta and back.rho_coeff == prob.rho_coeff
        np.testing.assert_array_equal(back.objective, prob.objective)
        np.testing.assert_array_equal(back.floor_rows[0].matrix,
                                      prob.floor_rows[0].matrix)
        assert back.floor_rows[0].scale == prob.floor_rows[0].scale
        assert back.floor_rows[0].weight == prob.floor_rows[0].weight
        np.testing.assert_array_equal(back.ceiling_rows[0].matrix,
                                      prob.ceiling_rows[0].matrix)

    def test_solve_dump_path_writes_problem(self, tmp_path):
        A = _coeff(np.array([1.0, 1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),))
        path = tmp_path / "dumped.json"
        solve(prob, dump_path=path)
        assert load_problem(path).n == 2


class TestEmbedding:
    def test_real_double_attains_same_margin(self):
        A = _coeff(np.array([1.0, 1.0j, -1.0]))
        B = _coeff(np.array([1.0, -1.0, 1.0j]))
        prob = ConicProblem(n=3, floor_rows=(FloorRow(A, 1.0), FloorRow(B, 1.0)))
        direct = solve(prob)
        doubled = solve(embed_problem(prob))
        assert doubled.status == "optimal"
        assert doubled.rho == pytest.approx(direct.rho, rel=1e-3)


# ---------------------------------------------------------------------------
# Cross-checks against an independent convex solver


def _cvxpy_reference(prob):
    import cvxpy as cp

    W = cp.Variable((prob.n, prob.n), hermitian=True)
    rho = cp.Variable(pos=True)
    cons = [cp.diag(W) == 1, W >> 0]
    for row in prob.floor_rows:
        cons.append(row.scale * cp.real(cp.trace(row.matrix @ W))
                    >= row.weight * rho)
    for row in prob.ceiling_rows:
        cons.append(row.scale * cp.real(cp.trace(row.matrix @ W))
                    <= rho / prob.delta)
    task = cp.Problem(cp.Maximize(cp.log(rho)), cons)
    try:
        task.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:  # pragma: no cover
        task.solve(solver=cp.SCS)
    return task.status, (None if rho.value is None else float(rho.value))


@needs_cvxpy
class TestCvxpyCrossCheck:
    def test_margin_agrees_on_random_instances(self):
        rng = np.random.default_rng(29)
        for trial in range(4):
            n = 4
            floors = tuple(
                FloorRow(_coeff(np.exp(1j * rng.uniform(-np.pi, np.pi, n))), 1.0)
                for _ in range(3))
            ceils = tuple(
                CeilingRow(_coeff(np.exp(1j * rng.uniform(-np.pi, np.pi, n))), 0.2)
                for _ in range(2))
            prob = ConicProblem(n=n, floor_rows=floors, ceiling_rows=ceils,
                                delta=1.5)
            mine = solve(prob)
            status, rho_ref = _cvxpy_reference(prob)
            assert mine.status == "optimal", f"trial {trial}: {mine.status}"
            assert status in ("optimal", "optimal_inaccurate")
            assert mine.rho == pytest.approx(rho_ref, rel=2e-3), f"trial {trial}"

    def test_infeasible_instances_agree(self):
        A = _coeff(np.array([1.0, 1.0]))
        prob = ConicProblem(n=2, floor_rows=(FloorRow(A, 1.0),),
                            ceiling_rows=(CeilingRow(np.eye(2), 1.0),),
                            delta=2.5)
        mine = solve(prob)
        status, _ = _cvxpy_reference(prob)
        assert mine.status == "infeasible"
        assert "infeasible" in status

    def test_weighted_instance_agrees(self):
        A = _coeff(np.array([1.0, 1.0, 1.0, 1.0]))
        B = _coeff(np.array([1.0, -1.0, 1.0, -1.0]))
        prob = ConicProblem(n=4, floor_rows=(FloorRow(A, 1.0, 1.0),
                                             FloorRow(B, 1.0, 3.0)))
        mine = solve(prob)
        _, rho_ref = _cvxpy_reference(prob)
        assert mine.rho == pytest.approx(rho_ref, rel=2e-3)
