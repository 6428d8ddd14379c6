"""Extremal constructions: anti-commuting families, Pauli inequalities, Haar nets and net inequalities."""
import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

import config
import linalg
from constants import tau_star_closed
from steering import Assemblage, SteeringInequality


@dataclass
class AnticommutingFamily:
    F: List[np.ndarray]

    @property
    def g(self) -> int:
        return len(self.F)

    @property
    def dim(self) -> int:
        return self.F[0].shape[0]

    def residual(self) -> float:
        """max over i, j of ||F_i F_j + F_j F_i - 2 delta_ij I||."""
        eye = np.eye(self.dim)
        worst = 0.0
        for i, fi in enumerate(self.F):
            for j, fj in enumerate(self.F[i:], start=i):
                target = 2 * eye if i == j else 0
                worst = max(worst, float(np.abs(fi @ fj + fj @ fi - target).max()))
        return worst

    def to_dict(self) -> Dict[str, Any]:
        return {"g": self.g, "dim": self.dim, "F": [linalg.matrix_to_dict(f) for f in self.F]}


def anticommuting_family(g: int) -> AnticommutingFamily:
    """F^(k+1) = (sX (x) F^(k)_i ..., sY (x) I, sZ (x) I), starting from F^(0) = ([1])."""
    if g < 1 or g > config.ANTICOMMUTING_MAX_G:
        raise ValueError(f"g={g} 超出反交換族範圍 [1, {config.ANTICOMMUTING_MAX_G}]。")
    _, sx, sy, sz = linalg.pauli()
    family = [np.ones((1, 1), dtype=complex)]
    while len(family) < g:
        eye = np.eye(family[0].shape[0])
        family = [linalg.kron(sx, f) for f in family] + [linalg.kron(sy, eye), linalg.kron(sz, eye)]
    return AnticommutingFamily(family[:g])


def pauli_inequality(g: int) -> SteeringInequality:
    return SteeringInequality.unbiased_from(anticommuting_family(g).F)


def optimal_assemblage(g: int) -> Assemblage:
    """sigma_{+-|x} = (I +- F_x) / (2 dim)."""
    family = anticommuting_family(g)
    eye = np.eye(family.dim)
    return Assemblage([[(eye + f) / (2 * family.dim), (eye - f) / (2 * family.dim)] for f in family.F])


# --- Haar nets --------------------------------------------------------------

def _distances(batch: np.ndarray, point: np.ndarray) -> np.ndarray:
    return np.linalg.norm(batch - point, ord=2, axis=(1, 2))


def _nearest(batch: np.ndarray, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    dist = np.stack([_distances(batch, p) for p in points])
    idx = np.argmin(dist, axis=0)
    return idx, dist[idx, np.arange(batch.shape[0])]


@dataclass
class UnitaryNet:
    d: int
    delta: float
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.points.shape[0] != self.weights.size:
            raise ValueError("網點數與權重數不符。")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1) > 1e-9:
            raise ValueError("網權重必須非負且總和為 1。")

    @property
    def K(self) -> int:
        return self.weights.size

    def covering_check(self, rng: linalg.RandomStream, samples: int = 10_000,
                       slack: Optional[float] = None) -> Tuple[bool, float]:
        """Every fresh Haar sample lies within delta + slack of a net point."""
        slack = config.NET_COVERING_SLACK if slack is None else slack
        fresh = linalg.haar_unitary(self.d, rng, size=samples)
        _, dist = _nearest(fresh, self.points)
        radius = float(dist.max())
        return radius <= self.delta + slack, radius

    def to_dict(self) -> Dict[str, Any]:
        return {"d": self.d, "K": self.K, "delta": self.delta, "weights": self.weights.tolist(),
                "points": [linalg.matrix_to_dict(u) for u in self.points]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UnitaryNet":
        points = np.array([linalg.matrix_from_dict(u) for u in data["points"]])
        return cls(int(data["d"]), float(data["delta"]), points, np.asarray(data["weights"], dtype=float))


def unitary_net(d: int, target_K: int, pool: int, rng: linalg.RandomStream) -> UnitaryNet:
    """Greedy farthest-point subsample of a Haar pool, weighted by nearest-point frequencies."""
    if target_K < 1 or target_K > pool:
        raise ValueError(f"需要 1 <= K <= pool，收到 K={target_K}, pool={pool}。")
    logging.info(f"開始建構 U({d}) 網: K={target_K}，pool={pool}。")
    start_time = time.time()
    pool_stream, weight_stream = rng.split(2)
    candidates = linalg.haar_unitary(d, pool_stream, size=pool)
    chosen = [0]
    gap = _distances(candidates, candidates[0])
    for _ in range(1, target_K):
        idx = int(np.argmax(gap))
        chosen.append(idx)
        gap = np.minimum(gap, _distances(candidates, candidates[idx]))
    points = candidates[chosen]
    delta = float(gap.max())

    fresh = linalg.haar_unitary(d, weight_stream, size=10 * pool)
    idx, _ = _nearest(fresh, points)
    weights = np.bincount(idx, minlength=target_K).astype(float)
    weights /= weights.sum()
    end_time = time.time()
    logging.info(f"U({d}) 網完成: delta={delta:.4f}，耗時: {end_time - start_time:.2f} 秒。")
    return UnitaryNet(d, delta, points, weights)


def balanced_B(d: int) -> np.ndarray:
    """diag(+1 x ceil(d/2), -1 x floor(d/2)) / tau*(d), normalized to E_phi|<phi, B phi>| = 1."""
    if d < 2:
        raise ValueError("balanced_B 需要 d >= 2。")
    signs = np.concatenate([np.ones((d + 1) // 2), -np.ones(d // 2)])
    return np.diag(signs / float(tau_star_closed(d))).astype(complex)


# --- net inequalities -------------------------------------------------------

@dataclass
class CertifiedBound:
    value: float
    certified: bool
    grid_max: float
    lipschitz: float
    mesh: float

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "certified": self.certified, "grid_max": self.grid_max,
                "lipschitz": self.lipschitz, "mesh": self.mesh}


@dataclass
class NetInequality:
    B: np.ndarray
    net: UnitaryNet
    A: List[np.ndarray]
    witnessX: List[np.ndarray]
    vq_lower: float
    vl_upper: float = float("nan")
    certified: bool = False

    @property
    def ratio(self) -> float:
        return self.vq_lower / self.vl_upper

    def to_inequality(self) -> SteeringInequality:
        return SteeringInequality.unbiased_from(self.A)

    def to_dict(self) -> Dict[str, Any]:
        return {"d": self.net.d, "K": self.net.K, "delta": self.net.delta, "vq_lower": self.vq_lower,
                "vl_upper": self.vl_upper, "ratio": self.ratio, "certified": self.certified,
                "trace_norm_B": linalg.trace_norm(self.B)}


_ICOSAHEDRON_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4), (11, 10, 2),
    (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5),
    (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(level: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """Unit-sphere vertices and faces after `level` midpoint subdivisions, with the longest chord edge."""
    if level < 0:
        raise ValueError("細分層數必須 >= 0。")
    phi = (1 + np.sqrt(5)) / 2
    vertices = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
                (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
                (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    vertices = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in vertices]
    faces = list(_ICOSAHEDRON_FACES)
    for _ in range(level):
        cache: Dict[Tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = vertices[i] + vertices[j]
                vertices.append(m / np.linalg.norm(m))
                cache[key] = len(vertices) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined
    verts = np.array(vertices)
    tri = np.array(faces)
    edges = np.concatenate([verts[tri[:, 0]] - verts[tri[:, 1]], verts[tri[:, 1]] - verts[tri[:, 2]],
                            verts[tri[:, 2]] - verts[tri[:, 0]]])
    return verts, tri, float(np.linalg.norm(edges, axis=1).max())


def bloch_coefficients(h: np.ndarray) -> Tuple[float, np.ndarray]:
    """H = c I + r . sigma for a 2x2 Hermitian H."""
    _, sx, sy, sz = linalg.pauli()
    h = linalg.hermitize(h)
    return float(np.trace(h).real / 2), np.array([np.trace(h @ s).real / 2 for s in (sx, sy, sz)])


def vl_net_certified(ineq: NetInequality, grid: Optional[int] = None,
                     rng: Optional[linalg.RandomStream] = None, samples: int = 10_000) -> CertifiedBound:
    """Upper bound on sup_v sum_i |<v, A_i v>|, the LHS value of the unbiased net inequality.

    For d = 2 the objective is Lipschitz on the Bloch sphere, so the maximum over an icosphere
    grid plus L times the mesh is certified. Other d fall back to a sampled estimate.
    """
    d = ineq.B.shape[0]
    if d != 2:
        rng = rng or linalg.RandomStream(config.DEFAULT_SEED)
        z = linalg.complex_gaussian_vector(d, rng, size=samples)
        v = z / np.linalg.norm(z, axis=1, keepdims=True)
        values = sum(np.abs(np.einsum("si,ij,sj->s", v.conj(), a, v).real) for a in ineq.A)
        estimate = float(values.max())
        logging.warning(f"d={d} 無法認證 V_L 上界，回傳抽樣估計 {estimate:.6f} (非認證)。")
        return CertifiedBound(estimate, False, estimate, float("nan"), float("nan"))
    level = config.ICOSPHERE_LEVEL if grid is None else grid
    verts, _, mesh = icosphere(level)
    coeffs = [bloch_coefficients(a) for a in ineq.A]
    c = np.array([ci for ci, _ in coeffs])
    r = np.array([ri for _, ri in coeffs])
    values = np.abs(c[None, :] + verts @ r.T).sum(axis=1)
    lipschitz = float(np.linalg.norm(r, axis=1).sum())
    grid_max = float(values.max())
    return CertifiedBound(grid_max + lipschitz * mesh, True, grid_max, lipschitz, mesh)


def net_inequality(d: int, net: UnitaryNet, grid: Optional[int] = None) -> NetInequality:
    """A_i = u_i U_i^dag B U_i / (1 + 2 delta ||B||_1) with witness X_i = (U_i^dag Pol(B)^dag U_i)^T."""
    if net.d != d:
        raise ValueError(f"網維度 {net.d} 與 d={d} 不符。")
    b = balanced_B(d)
    scale = 1 + 2 * net.delta * linalg.trace_norm(b)
    pol = linalg.polar_sign(b)
    A = [w * u.conj().T @ b @ u / scale for w, u in zip(net.weights, net.points)]
    X = [(u.conj().T @ pol.conj().T @ u).T for u in net.points]
    omega = np.eye(d).reshape(-1) / np.sqrt(d)
    total = sum(linalg.kron(a, x) for a, x in zip(A, X))
    vq_lower = float(np.vdot(omega, total @ omega).real)
    ineq = NetInequality(b, net, A, X, vq_lower)
    bound = vl_net_certified(ineq, grid)
    ineq.vl_upper, ineq.certified = bound.value, bound.certified
    logging.info(f"網不等式 (d={d}, K={net.K}): vq_lower={vq_lower:.6f}，vl_upper={bound.value:.6f}，比值={ineq.ratio:.4f}。")
    return ineq
