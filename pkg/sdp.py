"""Dense primal-dual interior-point solver for small block-diagonal SDPs.

Primal:  min <C, X>  s.t.  <A_j, X> = b_j,  X >= 0 (block diagonal)
Dual:    max b.y     s.t.  Z = C - sum_j y_j A_j >= 0

HKM search direction with Mehrotra predictor-corrector, infeasible start from
scaled identities. Complex data must be brought in through linalg.real_embedding.
"""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

import config


class SdpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_CAP = "iteration_cap"


class FeasibilityStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNDECIDED = "undecided"


def _as_blocks(blocks: Sequence, block_dims: Sequence[int], what: str) -> List[np.ndarray]:
    if len(blocks) != len(block_dims):
        raise ValueError(f"{what}: 區塊數 {len(blocks)} 與 block_dims {len(block_dims)} 不符。")
    out = []
    for k, (blk, n) in enumerate(zip(blocks, block_dims)):
        arr = np.atleast_2d(np.asarray(blk, dtype=float))
        if arr.shape != (n, n):
            raise ValueError(f"{what}: 第 {k} 區塊形狀 {arr.shape}，預期 {(n, n)}。")
        if not np.allclose(arr, arr.T, atol=1e-12 * max(1.0, np.abs(arr).max())):
            raise ValueError(f"{what}: 第 {k} 區塊不是對稱矩陣。")
        out.append((arr + arr.T) / 2)
    return out


@dataclass
class SdpProblem:
    block_dims: List[int]
    objective: List[np.ndarray]
    constraints: List[Tuple[List[np.ndarray], float]]
    name: str = "sdp"

    def __post_init__(self):
        self.block_dims = [int(n) for n in self.block_dims]
        if not self.block_dims or min(self.block_dims) < 1:
            raise ValueError("block_dims 必須為正整數列表。")
        self.objective = _as_blocks(self.objective, self.block_dims, "objective")
        self.constraints = [
            (_as_blocks(blocks, self.block_dims, f"constraint {j}"), float(rhs))
            for j, (blocks, rhs) in enumerate(self.constraints)
        ]
        if not self.constraints:
            raise ValueError("SDP 至少需要一個等式約束。")
        self._check_independence()

    @property
    def size(self) -> int:
        return sum(self.block_dims)

    def dense(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense block-diagonal C, stacked constraint matrices A (m, N, N) and rhs b."""
        c = scipy.linalg.block_diag(*self.objective)
        a = np.stack([scipy.linalg.block_diag(*blocks) for blocks, _ in self.constraints])
        b = np.array([rhs for _, rhs in self.constraints])
        return c, a, b

    def _check_independence(self):
        flat = np.stack([np.concatenate([blk.ravel() for blk in blocks]) for blocks, _ in self.constraints])
        gram = flat @ flat.T
        eig = np.linalg.eigvalsh(gram)
        if eig[0] <= 1e-10 * eig[-1]:
            rank = int(np.sum(eig > 1e-10 * eig[-1]))
            raise ValueError(f"SDP 約束線性相依: rank {rank} < {len(self.constraints)}。")

    def split(self, x: np.ndarray) -> List[np.ndarray]:
        out, start = [], 0
        for n in self.block_dims:
            out.append(x[start:start + n, start:start + n])
            start += n
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "block_dims": self.block_dims,
            "objective": [blk.tolist() for blk in self.objective],
            "constraints": [{"blocks": [blk.tolist() for blk in blocks], "rhs": rhs} for blocks, rhs in self.constraints],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SdpProblem":
        return cls(
            block_dims=data["block_dims"],
            objective=data["objective"],
            constraints=[(item["blocks"], item["rhs"]) for item in data["constraints"]],
            name=data.get("name", "sdp"),
        )


@dataclass
class IterateRecord:
    iteration: int
    primal_objective: float
    dual_objective: float
    complementarity: float
    primal_residual: float
    dual_residual: float
    step_primal: float = 0.0
    step_dual: float = 0.0
    # primal minus dual objective with the residual terms added back; equals <X, Z>
    corrected_gap: float = 0.0


@dataclass
class SdpSolution:
    status: SdpStatus
    x_blocks: List[np.ndarray]
    y: np.ndarray
    z_blocks: List[np.ndarray]
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: List[IterateRecord] = field(default_factory=list)

    @property
    def relative_gap(self) -> float:
        p, d = self.primal_objective, self.dual_objective
        return abs(p - d) / (1 + abs(p) + abs(d))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "relative_gap": self.relative_gap,
            "iterations": self.iterations,
        }


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha*dx >= 0 for x positive definite."""
    try:
        lower = np.linalg.cholesky(x)
        tmp = scipy.linalg.solve_triangular(lower, dx, lower=True)
        w = scipy.linalg.solve_triangular(lower, tmp.T, lower=True)
        lam = np.linalg.eigvalsh((w + w.T) / 2)[0]
    except np.linalg.LinAlgError:
        return 0.0
    return np.inf if lam >= 0 else -1.0 / lam


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def solve(problem: SdpProblem, tol: Optional[float] = None, gap_tol: Optional[float] = None,
          max_iter: Optional[int] = None) -> SdpSolution:
    tol = config.SDP_TOL if tol is None else tol
    gap_tol = config.SDP_GAP_TOL if gap_tol is None else gap_tol
    max_iter = config.SDP_MAX_ITER if max_iter is None else max_iter
    start_time = time.time()

    c, a, b = problem.dense()
    m, n = len(b), problem.size
    mask = scipy.linalg.block_diag(*[np.ones((k, k)) for k in problem.block_dims])
    a_flat = a.reshape(m, -1)
    a_op = lambda w: a_flat @ w.ravel()
    at_op = lambda v: np.tensordot(v, a, axes=1)

    norm_b, norm_c = np.linalg.norm(b), np.linalg.norm(c)
    norm_a = np.linalg.norm(a_flat, axis=1)
    xi = max(10.0, np.sqrt(n), n * np.max((1 + np.abs(b)) / (1 + norm_a)))
    eta = max(10.0, np.sqrt(n), norm_a.max(), norm_c)
    x = xi * np.eye(n)
    z = eta * np.eye(n)
    y = np.zeros(m)
    identity = np.eye(n)

    history: List[IterateRecord] = []
    status = SdpStatus.ITERATION_CAP
    stall = 0
    it = 0
    best = None
    for it in range(max_iter + 1):
        rp = b - a_op(x)
        rd = c - z - at_op(y)
        pobj, dobj = float(np.vdot(c, x)), float(b @ y)
        comp = float(np.vdot(x, z))
        rel_p = np.linalg.norm(rp) / (1 + norm_b)
        rel_d = np.linalg.norm(rd) / (1 + norm_c)
        rel_gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        record = IterateRecord(it, pobj, dobj, comp, rel_p, rel_d,
                               corrected_gap=pobj - dobj + float(y @ rp) - float(np.vdot(rd, x)))
        history.append(record)
        score = max(rel_p, rel_d, rel_gap)
        if best is None or score < best[0]:
            best = (score, x.copy(), y.copy(), z.copy(), record)

        if rel_p <= tol and rel_d <= tol and rel_gap <= gap_tol:
            status = SdpStatus.OPTIMAL
            break

        # Certificates of infeasibility: dual improving ray / primal improving ray.
        if dobj > 0:
            ray = at_op(y / dobj)
            if dobj > 1e6 * (1 + norm_c) and np.linalg.eigvalsh(ray)[-1] <= tol * (1 + norm_a.max()):
                status = SdpStatus.INFEASIBLE
                break
        if pobj < 0:
            if -pobj > 1e6 * (1 + norm_b) and np.linalg.norm(a_op(x)) / -pobj <= tol * (1 + norm_a.max()):
                status = SdpStatus.UNBOUNDED
                break
        if it == max_iter or stall >= 5:
            break

        mu = comp / n
        try:
            z_inv = np.linalg.inv(z)
        except np.linalg.LinAlgError:
            logging.warning(f"[{problem.name}] 對偶鬆弛矩陣奇異，停止於第 {it} 次迭代。")
            break
        g = np.matmul(np.matmul(x, a), z_inv)
        schur = a_flat @ g.transpose(0, 2, 1).reshape(m, -1).T
        schur = (schur + schur.T) / 2
        try:
            factor = scipy.linalg.cho_factor(schur)
            solve_schur = lambda rhs: scipy.linalg.cho_solve(factor, rhs)
        except np.linalg.LinAlgError:
            solve_schur = lambda rhs: np.linalg.lstsq(schur, rhs, rcond=None)[0]
        x_rd_zinv = x @ rd @ z_inv

        def direction(rc):
            rhs = rp - a_op(rc @ z_inv) + a_op(x_rd_zinv)
            dy = solve_schur(rhs)
            dz = _sym(rd - at_op(dy))
            dx = _sym(rc @ z_inv - x @ dz @ z_inv) * mask
            return dx, dy, dz

        # predictor
        rc = -x @ z
        dx_a, dy_a, dz_a = direction(rc)
        ap = min(1.0, _max_step(x, dx_a))
        ad = min(1.0, _max_step(z, dz_a))
        mu_aff = float(np.vdot(x + ap * dx_a, z + ad * dz_a)) / n
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        # corrector
        rc = sigma * mu * identity - x @ z - dx_a @ dz_a
        dx, dy, dz = direction(rc)
        ap = min(1.0, config.SDP_STEP_FRACTION * _max_step(x, dx))
        ad = min(1.0, config.SDP_STEP_FRACTION * _max_step(z, dz))
        record.step_primal, record.step_dual = ap, ad
        stall = stall + 1 if max(ap, ad) < 1e-10 else 0

        x = _sym(x + ap * dx) * mask
        y = y + ad * dy
        z = _sym(z + ad * dz) * mask

    if status == SdpStatus.ITERATION_CAP:
        _, x, y, z, record = best
        rel_gap = abs(record.primal_objective - record.dual_objective) / (
            1 + abs(record.primal_objective) + abs(record.dual_objective))
        if (record.primal_residual <= config.SDP_ACCEPT_RESIDUAL and record.dual_residual <= config.SDP_ACCEPT_RESIDUAL
                and rel_gap <= config.SDP_ACCEPT_GAP):
            status = SdpStatus.OPTIMAL
        else:
            logging.warning(
                f"[{problem.name}] SDP 未達收斂標準 (迭代 {it}): "
                f"primal {record.primal_residual:.2e}, dual {record.dual_residual:.2e}, gap {rel_gap:.2e}")

    solution = SdpSolution(
        status=status,
        x_blocks=problem.split(x),
        y=y,
        z_blocks=problem.split(z),
        primal_objective=float(np.vdot(c, x)),
        dual_objective=float(b @ y),
        primal_residual=float(np.linalg.norm(b - a_op(x)) / (1 + norm_b)),
        dual_residual=float(np.linalg.norm(c - z - at_op(y)) / (1 + norm_c)),
        iterations=it,
        history=history,
    )
    end_time = time.time()
    logging.debug(
        f"[{problem.name}] SDP 求解完成: 狀態 {status.value}, 目標值 {solution.primal_objective:.10g}, "
        f"迭代 {it} 次，耗時: {end_time - start_time:.2f} 秒。")
    return solution


@dataclass
class FeasibilityResult:
    status: FeasibilityStatus
    witness: Optional[List[np.ndarray]]
    certificate: Optional[np.ndarray]
    margin: float
    solution: SdpSolution

    def to_dict(self) -> Dict[str, Any]:
        return {"status": self.status.value, "margin": self.margin, "sdp": self.solution.to_dict()}


def phase_one(problem: SdpProblem) -> SdpProblem:
    """min s  s.t.  <A_j, X'> - s tr(A_j) = b_j - tr(A_j),  X' >= 0, s >= 0.

    With X = X' - (s-1) I the optimum tau = s - 1 is minus the largest smallest
    eigenvalue achievable by a solution of the original constraints (capped at -1).
    """
    constraints = []
    for blocks, rhs in problem.constraints:
        trace = sum(np.trace(blk) for blk in blocks)
        constraints.append((list(blocks) + [np.array([[-trace]])], rhs - trace))
    objective = [np.zeros((n, n)) for n in problem.block_dims] + [np.ones((1, 1))]
    return SdpProblem(problem.block_dims + [1], objective, constraints, name=f"{problem.name}/phase1")


def feasibility(problem: SdpProblem, tol: Optional[float] = None,
                margin: Optional[float] = None) -> FeasibilityResult:
    """Feasible if the phase-I optimum tau <= tol, infeasible if the Farkas margin b.y >= margin."""
    tol = config.FEASIBILITY_TOL if tol is None else tol
    margin = config.FEASIBILITY_TOL if margin is None else margin
    aux = phase_one(problem)
    solution = solve(aux)
    if solution.status != SdpStatus.OPTIMAL:
        raise RuntimeError(f"[{problem.name}] phase-I SDP 求解失敗: {solution.status.value}")
    s = float(solution.x_blocks[-1][0, 0])
    tau = s - 1.0
    if tau <= tol:
        witness = [blk - tau * np.eye(blk.shape[0]) for blk in solution.x_blocks[:-1]]
        return FeasibilityResult(FeasibilityStatus.FEASIBLE, witness, None, -tau, solution)
    # y with -sum y_j A_j >= 0 and b.y >= tau > 0 separates b from the image of the PSD cone.
    y = solution.y
    farkas = float(np.dot([rhs for _, rhs in problem.constraints], y))
    if tau >= margin and farkas >= margin:
        return FeasibilityResult(FeasibilityStatus.INFEASIBLE, None, y, farkas, solution)
    logging.warning(f"[{problem.name}] 可行性判定落在邊界帶內 (tau={tau:.3e})，結果為 undecided。")
    return FeasibilityResult(FeasibilityStatus.UNDECIDED, None, None, tau, solution)
