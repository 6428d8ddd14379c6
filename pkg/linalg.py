"""Dense complex Hermitian linear algebra, tensor operations and random sampling."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Any

import numpy as np

import config


def hermitize(matrix) -> np.ndarray:
    """Returns (H + H^dagger)/2 as a complex array."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"Hermitian 矩陣必須為方陣，收到形狀 {m.shape}。")
    if not np.all(np.isfinite(m)):
        raise ValueError("矩陣包含非有限數值。")
    return (m + m.conj().T) / 2


def pauli() -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    identity = np.eye(2, dtype=complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return identity, sx, sy, sz


@dataclass
class Spectrum:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig_hermitian(h) -> Spectrum:
    h = hermitize(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        residual = np.linalg.norm(h - h.conj().T, ord=np.inf)
        logging.error(f"Hermitian 特徵分解未收斂 (維度 {h.shape[0]}，殘差 {residual:.3e}): {e}")
        raise RuntimeError(f"特徵分解未收斂，殘差 {residual:.3e}") from e
    order = np.argsort(w)[::-1]
    spectrum = Spectrum(eigenvalues=w[order], eigenvectors=v[:, order])
    scale = max(np.abs(h).max(initial=0.0), 1.0)
    residual = np.abs(spectrum.reconstruct() - h).max(initial=0.0)
    if residual > config.SPECTRAL_TOL * scale:
        raise RuntimeError(f"特徵分解重建殘差過大: {residual:.3e}")
    return spectrum


def lambda_max(h) -> float:
    return float(np.linalg.eigvalsh(hermitize(h))[-1])


def lambda_min(h) -> float:
    return float(np.linalg.eigvalsh(hermitize(h))[0])


def kron(a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > config.KRON_MAX_DIM:
        raise ValueError(f"Kronecker 乘積維度 {rows}x{cols} 超過上限 {config.KRON_MAX_DIM}。")
    return np.kron(a, b)


def _check_bipartite(m: np.ndarray, dim_first: int, dim_second: int) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    n = dim_first * dim_second
    if m.shape != (n, n):
        raise ValueError(f"矩陣形狀 {m.shape} 與 {dim_first}x{dim_second} 的張量結構不符。")
    return m.reshape(dim_first, dim_second, dim_first, dim_second)


def partial_trace_first(m, dim_first: int, dim_second: int) -> np.ndarray:
    """Tr_1[M] for M acting on C^{dim_first} (x) C^{dim_second}."""
    return np.einsum("ijik->jk", _check_bipartite(m, dim_first, dim_second))


def partial_trace_second(m, dim_first: int, dim_second: int) -> np.ndarray:
    return np.einsum("ijkj->ik", _check_bipartite(m, dim_first, dim_second))


def polar_sign(b) -> np.ndarray:
    """Unitary Pol(B) with B = Pol(B)|B|; zero eigenvalues are sent to +1."""
    w, v = np.linalg.eigh(hermitize(b))
    signs = np.where(w >= 0, 1.0, -1.0)
    return (v * signs) @ v.conj().T


def trace_norm(b) -> float:
    return float(np.abs(np.linalg.eigvalsh(hermitize(b))).sum())


def op_norm(b) -> float:
    """Operator norm. Hermitian input uses the spectrum, general input the largest singular value."""
    m = np.asarray(b, dtype=complex)
    if m.size == 0:
        return 0.0
    if np.allclose(m, m.conj().T, atol=config.HERMITIAN_TOL * max(1.0, np.abs(m).max())):
        return float(np.abs(np.linalg.eigvalsh(hermitize(m))).max())
    return float(np.linalg.norm(m, ord=2))


def is_psd(h, tol: float = config.MEMBERSHIP_TOL) -> bool:
    return lambda_min(h) >= -tol


def sqrtm_psd(h) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(h))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def inv_sqrtm_psd(h) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(h))
    if w.min() <= config.SUPPORT_TOL * max(w.max(), 0.0):
        raise ValueError("矩陣非正定，無法取逆平方根。")
    return (v / np.sqrt(w)) @ v.conj().T


def support_restriction(h, tol: float = config.SUPPORT_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Isometry V onto the support of a PSD matrix and the restricted matrix V^dagger H V."""
    w, v = np.linalg.eigh(hermitize(h))
    scale = max(np.abs(w).max(initial=0.0), 0.0)
    keep = w > tol * scale
    if not np.any(keep):
        raise ValueError("矩陣支撐為零。")
    iso = v[:, keep]
    return iso, hermitize(iso.conj().T @ h @ iso)


def real_embedding(h) -> np.ndarray:
    """[[Re H, -Im H], [Im H, Re H]]; H >= 0 iff the embedding is PSD."""
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def complex_from_embedding(y) -> np.ndarray:
    """Inverse of real_embedding, averaging both copies so PSD input stays PSD."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0] // 2
    re = (y[:n, :n] + y[n:, n:]) / 2
    im = (y[n:, :n] - y[:n, n:]) / 2
    return hermitize(re + 1j * im)


def hermitian_basis(d: int) -> List[np.ndarray]:
    """Hilbert-Schmidt orthonormal basis of the d x d Hermitian matrices."""
    basis = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        basis.append(e)
    for k in range(d):
        for l in range(k + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[k, l] = sym[l, k] = 1 / np.sqrt(2)
            basis.append(sym)
            anti = np.zeros((d, d), dtype=complex)
            anti[k, l] = 1j / np.sqrt(2)
            anti[l, k] = -1j / np.sqrt(2)
            basis.append(anti)
    return basis


@dataclass
class RandomStream:
    """Reproducible random stream; identical (seed, stream_id, path) gives identical draws."""
    seed: int
    stream_id: int = 0
    path: Tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        self.generator = np.random.default_rng(sequence)

    def split(self, count: int) -> List["RandomStream"]:
        return [RandomStream(self.seed, self.stream_id, self.path + (k,)) for k in range(count)]

    def to_dict(self) -> Dict[str, Any]:
        return {"seed": self.seed, "stream_id": self.stream_id, "path": list(self.path)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RandomStream":
        return cls(int(data["seed"]), int(data.get("stream_id", 0)), tuple(data.get("path", ())))


def complex_gaussian_vector(d: int, rng: RandomStream, size: int = None) -> np.ndarray:
    """Standard complex Gaussian with E|z_j|^2 = 1; `size` draws a (size, d) batch."""
    if d < 1:
        raise ValueError("維度必須 >= 1。")
    shape = (d,) if size is None else (size, d)
    g = rng.generator
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / np.sqrt(2)


def haar_unitary(d: int, rng: RandomStream, size: int = None) -> np.ndarray:
    """Haar unitary via Ginibre sample, QR and phase correction of the R diagonal."""
    if d < 1:
        raise ValueError("維度必須 >= 1。")
    count = 1 if size is None else size
    g = rng.generator
    z = (g.standard_normal((count, d, d)) + 1j * g.standard_normal((count, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    phases = diag / np.abs(diag)
    u = q * phases[:, None, :]
    return u[0] if size is None else u


def random_unit_vector(d: int, rng: RandomStream) -> np.ndarray:
    z = complex_gaussian_vector(d, rng)
    return z / np.linalg.norm(z)


def random_hermitian(d: int, rng: RandomStream, scale: float = 1.0) -> np.ndarray:
    g = rng.generator
    m = g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))
    return scale * hermitize(m)


def random_density_matrix(d: int, rng: RandomStream, rank: int = None) -> np.ndarray:
    g = rng.generator
    k = d if rank is None else rank
    m = g.standard_normal((d, k)) + 1j * g.standard_normal((d, k))
    rho = m @ m.conj().T
    return hermitize(rho / np.trace(rho).real)


def matrix_to_dict(m) -> Dict[str, Any]:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_dict(data: Dict[str, Any]) -> np.ndarray:
    re = np.asarray(data["re"], dtype=float)
    im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    if re.ndim != 2 or re.shape != im.shape:
        raise ValueError(f"矩陣 JSON 形狀錯誤: re {re.shape}, im {im.shape}")
    if "dim" in data and re.shape[0] != int(data["dim"]):
        raise ValueError(f"矩陣 JSON 的 dim={data['dim']} 與資料列數 {re.shape[0]} 不符")
    return re + 1j * im


def vector_to_dict(v) -> Dict[str, Any]:
    v = np.asarray(v, dtype=complex)
    return {"re": v.real.tolist(), "im": v.imag.tolist()}


def vector_from_dict(data: Dict[str, Any]) -> np.ndarray:
    re = np.asarray(data["re"], dtype=float)
    return re + 1j * np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
