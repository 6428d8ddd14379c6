"""Free spectrahedra: matrix cube/diamond, membership, non-monic normalization and the cube inclusion SDP."""
import itertools
import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np

import config
import linalg
import sdp


@dataclass
class SpectrahedronTuple:
    """(A_0, A_1, ..., A_g) defining {X : sum A_i (x) X_i <= A_0 (x) I}."""
    A0: np.ndarray
    A: List[np.ndarray]
    monic: bool = False

    def __post_init__(self):
        self.A0 = linalg.hermitize(self.A0)
        self.A = [linalg.hermitize(a) for a in self.A]
        d = self.A0.shape[0]
        for i, a in enumerate(self.A):
            if a.shape != (d, d):
                raise ValueError(f"A_{i + 1} 維度 {a.shape} 與 A_0 維度 {d} 不一致。")
        if self.monic and not np.allclose(self.A0, np.eye(d), atol=config.HERMITIAN_TOL):
            raise ValueError("monic 元組的 A_0 必須為單位矩陣。")

    @property
    def g(self) -> int:
        return len(self.A)

    @property
    def d(self) -> int:
        return self.A0.shape[0]

    @classmethod
    def from_monic(cls, matrices: Sequence[np.ndarray], d: Optional[int] = None) -> "SpectrahedronTuple":
        matrices = [linalg.hermitize(m) for m in matrices]
        dim = matrices[0].shape[0] if matrices else (d or 1)
        return cls(np.eye(dim, dtype=complex), matrices, monic=True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "g": self.g,
            "d": self.d,
            "A0": linalg.matrix_to_dict(self.A0),
            "A": [linalg.matrix_to_dict(a) for a in self.A],
            "monic": self.monic,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectrahedronTuple":
        matrices = [linalg.matrix_from_dict(m) for m in data["A"]]
        d = int(data.get("d", matrices[0].shape[0] if matrices else 1))
        a0 = linalg.matrix_from_dict(data["A0"]) if "A0" in data else np.eye(d)
        tup = cls(a0, matrices, monic=bool(data.get("monic", "A0" not in data)))
        if "g" in data and int(data["g"]) != tup.g:
            raise ValueError(f"元組 JSON 的 g={data['g']} 與矩陣數 {tup.g} 不符。")
        return tup


@dataclass
class MatrixTuplePoint:
    X: List[np.ndarray]

    def __post_init__(self):
        self.X = [linalg.hermitize(x) for x in self.X]
        if len({x.shape for x in self.X}) > 1:
            raise ValueError("矩陣元組的各矩陣維度必須相同。")

    @property
    def n(self) -> int:
        return self.X[0].shape[0] if self.X else 0


@dataclass
class InclusionResult:
    t_min: float
    max_scale: float
    choi_witness: np.ndarray
    dual_state: np.ndarray
    certificate: float
    solution: Optional[sdp.SdpSolution] = None

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "t_min": self.t_min,
            "max_scale": self.max_scale if math.isfinite(self.max_scale) else None,
            "certificate": self.certificate,
            "dual_state": linalg.matrix_to_dict(self.dual_state),
        }
        if self.solution is not None:
            out["sdp"] = self.solution.to_dict()
        return out


def sign_vectors(g: int, chunk: int = 1 << 14) -> Iterator[np.ndarray]:
    """All of {+1,-1}^g in chunks of rows."""
    if g > config.ENUMERATION_MAX_G:
        raise ValueError(f"g={g} 超過符號枚舉上限 {config.ENUMERATION_MAX_G}。")
    total = 1 << g
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        bits = (idx[:, None] >> np.arange(g)[None, :]) & 1
        yield 1.0 - 2.0 * bits


def max_signed_lambda(matrices: Sequence[np.ndarray], offset: Optional[np.ndarray] = None):
    """max over eps in {+-1}^g of lambda_max(offset + sum eps_i M_i), with the maximizing eps."""
    if not matrices:
        raise ValueError("符號枚舉需要至少一個矩陣。")
    stack = np.array([linalg.hermitize(m) for m in matrices])
    g = len(matrices)
    best_value, best_eps = -np.inf, np.ones(g)
    for eps in sign_vectors(g):
        total = np.tensordot(eps, stack, axes=1)
        if offset is not None:
            total = total + offset
        lam = np.linalg.eigvalsh(total)[:, -1]
        k = int(np.argmax(lam))
        if lam[k] > best_value:
            best_value, best_eps = float(lam[k]), eps[k].copy()
    return best_value, best_eps


def cube_tuple(g: int) -> SpectrahedronTuple:
    """Diagonal 2g x 2g realization: A_i has +1 at position 2i-1 and -1 at 2i."""
    if g < 1:
        raise ValueError("g 必須 >= 1。")
    matrices = []
    for i in range(g):
        diag = np.zeros(2 * g)
        diag[2 * i], diag[2 * i + 1] = 1.0, -1.0
        matrices.append(np.diag(diag).astype(complex))
    return SpectrahedronTuple.from_monic(matrices)


def diamond_tuple(g: int) -> SpectrahedronTuple:
    """Diagonal 2^g realization of the matrix diamond, one entry per sign vector."""
    eps = next(sign_vectors(g, chunk=1 << g))
    return SpectrahedronTuple.from_monic([np.diag(eps[:, i]).astype(complex) for i in range(g)])


def lmi_membership(s: SpectrahedronTuple, x: MatrixTuplePoint, tol: Optional[float] = None) -> bool:
    tol = config.MEMBERSHIP_TOL if tol is None else tol
    if len(x.X) != s.g:
        raise ValueError(f"點的矩陣數 {len(x.X)} 與 g={s.g} 不符。")
    n = x.n
    lhs = sum((linalg.kron(a, xi) for a, xi in zip(s.A, x.X)), np.zeros((s.d * n, s.d * n), dtype=complex))
    return linalg.lambda_max(lhs - linalg.kron(s.A0, np.eye(n))) <= tol


def cube_membership(x: MatrixTuplePoint, tol: Optional[float] = None) -> bool:
    tol = config.MEMBERSHIP_TOL if tol is None else tol
    return all(linalg.op_norm(xi) <= 1 + tol for xi in x.X)


def diamond_membership(x: MatrixTuplePoint, tol: Optional[float] = None) -> bool:
    tol = config.MEMBERSHIP_TOL if tol is None else tol
    if not x.X:
        return True
    value, _ = max_signed_lambda(x.X)
    return value <= 1 + tol


def level1_cube_in(b: SpectrahedronTuple, tol: Optional[float] = None) -> bool:
    """Vertex test of D_cube(1) inside the level-1 set of b: sum eps_i B_i <= A_0 for all signs."""
    tol = config.MEMBERSHIP_TOL if tol is None else tol
    if b.g == 0:
        return linalg.lambda_min(b.A0) >= -tol
    value, _ = max_signed_lambda(b.A, offset=-b.A0)
    return value <= tol


def normalize_nonmonic(s: SpectrahedronTuple) -> SpectrahedronTuple:
    """Monic tuple on supp(A_0) defining the same free spectrahedron."""
    if s.monic:
        return s
    delta = 1e-6
    scale = max(linalg.op_norm(s.A0), *(linalg.op_norm(a) for a in s.A), 1e-300)
    tol = config.SUPPORT_TOL * scale
    if linalg.lambda_min(s.A0) < -tol:
        raise ValueError("A_0 非半正定：0 不在第一層集合內。")
    for i, a in enumerate(s.A):
        for sign in (1.0, -1.0):
            if linalg.lambda_max(sign * delta * a - s.A0) > tol * delta:
                raise ValueError(f"0 不是第一層集合的內點：方向 {'+' if sign > 0 else '-'}e_{i + 1} 被違反。")
    w, v = np.linalg.eigh(s.A0)
    keep = w > config.SUPPORT_TOL * max(w.max(initial=0.0), 1e-300)
    if not np.any(keep):
        raise ValueError("A_0 支撐為零：0 不是第一層集合的內點。")
    iso, kernel = v[:, keep], v[:, ~keep]
    for i, a in enumerate(s.A):
        if kernel.shape[1] and np.abs(a @ kernel).max() > tol:
            raise ValueError(f"A_{i + 1} 超出 A_0 的支撐：方向 ±e_{i + 1} 被違反。")
    root = 1.0 / np.sqrt(w[keep])
    congruence = iso * root
    if not kernel.shape[1]:
        congruence = congruence @ iso.conj().T
    monic = [congruence.conj().T @ a @ congruence for a in s.A]
    return SpectrahedronTuple.from_monic(monic, d=int(keep.sum()))


def choi_map(choi: np.ndarray, t: float, x: np.ndarray, g: int) -> np.ndarray:
    """Phi(X) = Tr_1[C (X^T (x) I)] / t for the unital CP map encoded by the witness."""
    n = 2 * g
    d = choi.shape[0] // n
    return linalg.partial_trace_first(choi @ linalg.kron(np.asarray(x).T, np.eye(d)), n, d) / t


def dual_certificate(b: SpectrahedronTuple, rho: np.ndarray) -> float:
    """sum_i ||rho^{1/2} B_i rho^{1/2}||_1 for a density matrix rho."""
    rho = linalg.hermitize(rho)
    if rho.shape != (b.d, b.d):
        raise ValueError(f"狀態維度 {rho.shape} 與元組維度 {b.d} 不符。")
    if linalg.lambda_min(rho) < -1e-8 or abs(np.trace(rho).real - 1) > 1e-8:
        raise ValueError("rho 必須是半正定且跡為 1 的密度矩陣。")
    root = linalg.sqrtm_psd(rho)
    return float(sum(linalg.trace_norm(root @ bi @ root) for bi in b.A))


def inclusion_problem(b: SpectrahedronTuple) -> sdp.SdpProblem:
    """min t  s.t.  Tr_1 C = t I_d,  Tr_1[C (A_i^T (x) I)] = B_i,  C >= 0, over the cube reference tuple.

    Hermitian equalities are imposed against an orthonormal Hermitian basis; C enters through
    its real embedding, t is a 1x1 block.
    """
    g, d = b.g, b.d
    n = 2 * g * d
    reference = cube_tuple(g).A
    basis = linalg.hermitian_basis(d)
    zero_t = np.zeros((1, 1))
    constraints = []
    for h in basis:
        w = 0.5 * linalg.real_embedding(linalg.kron(np.eye(2 * g), h))
        constraints.append(([w, np.array([[-np.trace(h).real]])], 0.0))
    for a_ref, bi in zip(reference, b.A):
        for h in basis:
            w = 0.5 * linalg.real_embedding(linalg.kron(a_ref.T, h))
            constraints.append(([w, zero_t], float(np.trace(h @ bi).real)))
    objective = [np.zeros((2 * n, 2 * n)), np.ones((1, 1))]
    return sdp.SdpProblem([2 * n, 1], objective, constraints, name=f"cube-inclusion(g={g},d={d})")


def _clean_state(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(linalg.hermitize(m))
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        return np.eye(m.shape[0], dtype=complex) / m.shape[0]
    w = w / w.sum()
    return linalg.hermitize((v * w) @ v.conj().T)


def cube_inclusion(b: SpectrahedronTuple) -> InclusionResult:
    """Largest s with s.D_cube inside D_B is 1/t_min of the Choi-matrix SDP."""
    if not b.monic:
        raise ValueError("cube_inclusion 需要 monic 元組，請先呼叫 normalize_nonmonic。")
    g, d = b.g, b.d
    if 2 * g * d > config.INCLUSION_MAX_DIM:
        raise ValueError(f"2g*d = {2 * g * d} 超過稠密 SDP 上限 {config.INCLUSION_MAX_DIM}。")
    if g == 0 or all(np.abs(bi).max(initial=0.0) == 0 for bi in b.A):
        rho = np.eye(d, dtype=complex) / d
        return InclusionResult(0.0, math.inf, np.zeros((2 * g * d, 2 * g * d), dtype=complex), rho, 0.0)

    logging.info(f"開始求解立方體包含 SDP (g={g}, d={d})。")
    start_time = time.time()
    problem = inclusion_problem(b)
    solution = sdp.solve(problem)
    if solution.status != sdp.SdpStatus.OPTIMAL:
        raise RuntimeError(f"包含 SDP 求解失敗: {solution.status.value}")
    t_min = float(solution.primal_objective)
    choi = linalg.complex_from_embedding(solution.x_blocks[0])

    basis = linalg.hermitian_basis(d)
    lam0 = sum(yk * h for yk, h in zip(solution.y[:len(basis)], basis))
    rho = _clean_state(-lam0)
    certificate = dual_certificate(b, rho)
    if certificate > t_min + config.INCLUSION_TOL:
        logging.warning(f"對偶證書 {certificate:.8f} 超過 t_min {t_min:.8f}。")
    end_time = time.time()
    logging.info(f"立方體包含 SDP 完成: t_min={t_min:.8f}，證書={certificate:.8f}，耗時: {end_time - start_time:.2f} 秒。")
    return InclusionResult(t_min, 1.0 / t_min if t_min > 0 else math.inf, choi, rho, certificate, solution)


def scale_along(b: SpectrahedronTuple, s: Sequence[float]) -> SpectrahedronTuple:
    """s.B = (s_1 B_1, ..., s_g B_g)."""
    if len(s) != b.g:
        raise ValueError(f"縮放向量長度 {len(s)} 與 g={b.g} 不符。")
    return SpectrahedronTuple(b.A0, [si * bi for si, bi in zip(s, b.A)], monic=b.monic)


def level1_normalized(b: SpectrahedronTuple) -> SpectrahedronTuple:
    """Divides a monic tuple by max_eps lambda_max(sum eps_i B_i) so the level-1 inclusion is tight."""
    value, _ = max_signed_lambda(b.A)
    if value <= 0:
        raise ValueError("零元組無法正規化。")
    return SpectrahedronTuple.from_monic([bi / value for bi in b.A])
