"""Dichotomic steering inequalities, assemblages, POVM collections and their LHS / quantum values."""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
import linalg
import sdp
import spectrahedra


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    UNDECIDED = "undecided"


@dataclass
class SteeringInequality:
    Fplus: List[np.ndarray]
    Fminus: List[np.ndarray]

    def __post_init__(self):
        self.Fplus = [linalg.hermitize(f) for f in self.Fplus]
        self.Fminus = [linalg.hermitize(f) for f in self.Fminus]
        if len(self.Fplus) != len(self.Fminus) or not self.Fplus:
            raise ValueError(f"F_+ 與 F_- 必須是等長且非空的列表 ({len(self.Fplus)} vs {len(self.Fminus)})。")
        if len({f.shape for f in self.Fplus + self.Fminus}) != 1:
            raise ValueError("不等式的所有矩陣必須有相同維度。")

    @property
    def g(self) -> int:
        return len(self.Fplus)

    @property
    def d(self) -> int:
        return self.Fplus[0].shape[0]

    @property
    def unbiased(self) -> bool:
        return all(np.abs(fp + fm).max() <= 1e-10 for fp, fm in zip(self.Fplus, self.Fminus))

    @classmethod
    def unbiased_from(cls, fplus: Sequence[np.ndarray]) -> "SteeringInequality":
        fplus = [linalg.hermitize(f) for f in fplus]
        return cls(fplus, [-f for f in fplus])

    @classmethod
    def trivial(cls, fs: Sequence[np.ndarray]) -> "SteeringInequality":
        fs = [linalg.hermitize(f) for f in fs]
        return cls(fs, [f.copy() for f in fs])

    def scaled(self, c: float) -> "SteeringInequality":
        return SteeringInequality([c * f for f in self.Fplus], [c * f for f in self.Fminus])

    def shifted(self, c: float) -> "SteeringInequality":
        """Adds c/g * I to both outcomes of every setting; every value moves by exactly c."""
        shift = (c / self.g) * np.eye(self.d)
        return SteeringInequality([f + shift for f in self.Fplus], [f + shift for f in self.Fminus])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "g": self.g,
            "d": self.d,
            "Fplus": [linalg.matrix_to_dict(f) for f in self.Fplus],
            "Fminus": [linalg.matrix_to_dict(f) for f in self.Fminus],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SteeringInequality":
        fplus = [linalg.matrix_from_dict(m) for m in data["Fplus"]]
        if "Fminus" in data:
            ineq = cls(fplus, [linalg.matrix_from_dict(m) for m in data["Fminus"]])
        else:
            ineq = cls.unbiased_from(fplus)
        if int(data.get("g", ineq.g)) != ineq.g or int(data.get("d", ineq.d)) != ineq.d:
            raise ValueError(f"不等式 JSON 的 g/d 標頭與資料不符 (資料 g={ineq.g}, d={ineq.d})。")
        return ineq


@dataclass
class ABDecomposition:
    Aplus: List[np.ndarray]
    Aminus: List[np.ndarray]

    def reconstruct(self) -> SteeringInequality:
        return SteeringInequality([p + m for p, m in zip(self.Aplus, self.Aminus)],
                                  [p - m for p, m in zip(self.Aplus, self.Aminus)])

    @property
    def offset(self) -> np.ndarray:
        return sum(self.Aplus[1:], self.Aplus[0].copy())


def decompose(F: SteeringInequality) -> ABDecomposition:
    return ABDecomposition([(fp + fm) / 2 for fp, fm in zip(F.Fplus, F.Fminus)],
                           [(fp - fm) / 2 for fp, fm in zip(F.Fplus, F.Fminus)])


@dataclass
class Assemblage:
    """sigma[x] = [sigma_{+|x}, sigma_{-|x}], all with a common unit-trace marginal."""
    sigma: List[List[np.ndarray]]

    def __post_init__(self):
        self.sigma = [[linalg.hermitize(s) for s in pair] for pair in self.sigma]
        if not self.sigma or any(len(pair) != 2 for pair in self.sigma):
            raise ValueError("組合 (assemblage) 必須是非空的 g x 2 矩陣陣列。")
        if len({s.shape for pair in self.sigma for s in pair}) != 1:
            raise ValueError("組合的所有矩陣必須有相同維度。")
        for x, pair in enumerate(self.sigma):
            for a, s in zip("+-", pair):
                if linalg.lambda_min(s) < -1e-9:
                    raise ValueError(f"sigma_{{{a}|{x + 1}}} 非半正定。")
        marginals = [pair[0] + pair[1] for pair in self.sigma]
        for x, m in enumerate(marginals):
            if np.abs(m - marginals[0]).max() > 1e-8:
                raise ValueError(f"設定 {x + 1} 的邊際態與設定 1 不一致 (無信號條件被違反)。")
        if abs(np.trace(marginals[0]).real - 1) > 1e-8:
            raise ValueError("組合的邊際態跡不為 1。")

    @property
    def g(self) -> int:
        return len(self.sigma)

    @property
    def d(self) -> int:
        return self.sigma[0][0].shape[0]

    @property
    def average(self) -> np.ndarray:
        return linalg.hermitize(sum(pair[0] + pair[1] for pair in self.sigma) / self.g)

    def to_dict(self) -> Dict[str, Any]:
        return {"g": self.g, "d": self.d,
                "sigma": [[linalg.matrix_to_dict(s) for s in pair] for pair in self.sigma]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Assemblage":
        a = cls([[linalg.matrix_from_dict(s) for s in pair] for pair in data["sigma"]])
        if int(data.get("g", a.g)) != a.g or int(data.get("d", a.d)) != a.d:
            raise ValueError(f"組合 JSON 的 g/d 標頭與資料不符 (資料 g={a.g}, d={a.d})。")
        return a


@dataclass
class PovmCollection:
    """effects[x] = [E_{+|x}, E_{-|x}] with E_{+|x} + E_{-|x} = I."""
    effects: List[List[np.ndarray]]

    def __post_init__(self):
        self.effects = [[linalg.hermitize(e) for e in pair] for pair in self.effects]
        if not self.effects or any(len(pair) != 2 for pair in self.effects):
            raise ValueError("POVM 集合必須是非空的 g x 2 效應陣列。")
        if len({e.shape for pair in self.effects for e in pair}) != 1:
            raise ValueError("POVM 效應維度必須一致。")
        eye = np.eye(self.n)
        for x, (ep, em) in enumerate(self.effects):
            if min(linalg.lambda_min(ep), linalg.lambda_min(em)) < -1e-9:
                raise ValueError(f"第 {x + 1} 個 POVM 的效應非半正定。")
            if np.abs(ep + em - eye).max() > 1e-9:
                raise ValueError(f"第 {x + 1} 個 POVM 不完備: E_+ + E_- != I。")

    @property
    def g(self) -> int:
        return len(self.effects)

    @property
    def n(self) -> int:
        return self.effects[0][0].shape[0]

    @classmethod
    def from_observables(cls, observables: Sequence[np.ndarray]) -> "PovmCollection":
        """Sharp or unsharp dichotomic POVMs E_{+-} = (I +- O)/2 from observables with ||O|| <= 1."""
        effects = []
        for o in observables:
            o = linalg.hermitize(o)
            eye = np.eye(o.shape[0])
            effects.append([(eye + o) / 2, (eye - o) / 2])
        return cls(effects)

    def to_dict(self) -> Dict[str, Any]:
        return {"g": self.g, "n": self.n,
                "effects": [[linalg.matrix_to_dict(e) for e in pair] for pair in self.effects]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PovmCollection":
        return cls([[linalg.matrix_from_dict(e) for e in pair] for pair in data["effects"]])


@dataclass
class NoiseDirection:
    s: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float).ravel()
        if self.s.size == 0 or np.any(self.s < 0) or np.any(self.s > 1):
            raise ValueError(f"雜訊方向的分量必須在 [0, 1] 內，收到 {self.s.tolist()}。")

    def to_dict(self) -> Dict[str, Any]:
        return {"s": self.s.tolist()}


@dataclass
class JmResult:
    verdict: Verdict
    margin: float
    joint: Optional[List[np.ndarray]] = None
    signs: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        out = {"verdict": self.verdict.value, "margin": self.margin}
        if self.joint is not None:
            out["joint"] = [linalg.matrix_to_dict(j) for j in self.joint]
        return out


# --- values ---------------------------------------------------------------

def lhs_optimum(F: SteeringInequality) -> Tuple[float, np.ndarray]:
    """V_L(F) = max over eps of lambda_max(sum A_+ + sum eps_x A_-), with the optimal eps."""
    dec = decompose(F)
    return spectrahedra.max_signed_lambda(dec.Aminus, offset=dec.offset)


def vl_value(F: SteeringInequality) -> float:
    return lhs_optimum(F)[0]


def _scale(F: SteeringInequality) -> float:
    return max(linalg.op_norm(f) for f in F.Fplus + F.Fminus)


def _is_zero(ms: Sequence[np.ndarray], scale: float) -> bool:
    return all(np.abs(m).max() <= config.HERMITIAN_TOL * max(1.0, scale) for m in ms)


def vq_value(F: SteeringInequality) -> float:
    """Largest quantum value sup_X lambda_max(I (x) sum A_+ + sum X_x (x) A_-x) over contractions X."""
    dec = decompose(F)
    scale = _scale(F)
    offset = dec.offset
    if _is_zero(dec.Aminus, scale):
        return linalg.lambda_max(offset)

    start_time = time.time()
    vl = vl_value(F)
    if _is_zero(dec.Aplus, scale):
        tup = spectrahedra.SpectrahedronTuple.from_monic([a / vl for a in dec.Aminus])
        value = spectrahedra.cube_inclusion(tup).t_min * vl
        end_time = time.time()
        logging.info(f"無偏 V_Q = {value:.8f} (V_L = {vl:.8f})，耗時: {end_time - start_time:.2f} 秒。")
        return value

    shift = 0.0
    if vl <= 0.1 * scale:
        shift = abs(vl) + scale
        offset = offset + shift * np.eye(F.d)
        vl += shift

    def included(t: float) -> bool:
        tup = spectrahedra.SpectrahedronTuple(t * np.eye(F.d) - offset, dec.Aminus)
        try:
            monic = spectrahedra.normalize_nonmonic(tup)
        except ValueError:
            return False
        return spectrahedra.cube_inclusion(monic).t_min <= 1.0 + config.INCLUSION_SLACK

    lo = vl
    hi = linalg.lambda_max(offset) + sum(linalg.op_norm(a) for a in dec.Aminus)
    hi += config.INCLUSION_SLACK * max(abs(hi), 1.0)
    if not included(hi):
        raise RuntimeError(f"二分法上界 t={hi:.6g} 未通過包含判定 (符號異常)。")
    evaluations = 0
    while hi - lo > config.BISECTION_REL_WIDTH * max(abs(hi), 1e-300):
        mid = (lo + hi) / 2
        if included(mid):
            hi = mid
        else:
            lo = mid
        evaluations += 1
    end_time = time.time()
    logging.info(f"有偏 V_Q 二分法完成: {hi - shift:.8f}，探測 {evaluations} 次，耗時: {end_time - start_time:.2f} 秒。")
    return hi - shift


def violation(F: SteeringInequality) -> float:
    """V_Q / V_L, with V = 1 when both vanish."""
    vl = vl_value(F)
    vq = vq_value(F)
    tiny = config.HERMITIAN_TOL * max(1.0, _scale(F))
    if abs(vl) <= tiny and abs(vq) <= tiny:
        return 1.0
    if vl <= 0:
        raise ValueError(f"V_L = {vl:.6g} <= 0，違反比值未定義。")
    return vq / vl


def vq_seesaw(F: SteeringInequality, n: int, restarts: int, rng: linalg.RandomStream,
              max_iter: int = 500) -> float:
    """Alternating lower bound on the level-n quantum value; restart 0 starts at the optimal LHS signs."""
    if n < 1 or restarts < 1:
        raise ValueError("see-saw 需要 n >= 1 且 restarts >= 1。")
    dec = decompose(F)
    offset = dec.offset
    if _is_zero(dec.Aminus, _scale(F)):
        return linalg.lambda_max(offset)
    d = F.d
    base = linalg.kron(np.eye(n), offset)
    _, eps_star = lhs_optimum(F)
    best = -np.inf
    for r, stream in enumerate(rng.split(restarts)):
        if r == 0:
            xs = [e * np.eye(n, dtype=complex) for e in eps_star]
        else:
            xs = [linalg.polar_sign(linalg.random_hermitian(n, stream)) for _ in range(F.g)]
        value = -np.inf
        for _ in range(max_iter):
            m = base + sum(linalg.kron(x, a) for x, a in zip(xs, dec.Aminus))
            spectrum = linalg.eig_hermitian(m)
            new_value, v = float(spectrum.eigenvalues[0]), spectrum.eigenvectors[:, 0]
            gain = new_value - value
            value = max(value, new_value)
            if gain < config.SEESAW_GAIN_TOL:
                break
            proj = np.outer(v, v.conj())
            xs = [linalg.polar_sign(linalg.partial_trace_second(linalg.kron(np.eye(n), a) @ proj, n, d))
                  for a in dec.Aminus]
        logging.debug(f"see-saw restart {r}: {value:.10f}")
        best = max(best, value)
    return best


def assemblage_value(F: SteeringInequality, a: Assemblage) -> float:
    if (F.g, F.d) != (a.g, a.d):
        raise ValueError(f"不等式 (g={F.g}, d={F.d}) 與組合 (g={a.g}, d={a.d}) 維度不符。")
    total = 0.0
    for fp, fm, (sp, sm) in zip(F.Fplus, F.Fminus, a.sigma):
        total += np.trace(sp @ fp).real + np.trace(sm @ fm).real
    return float(total)


# --- assemblage <-> POVM ---------------------------------------------------

def _support(state: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    state = linalg.hermitize(state)
    w = np.linalg.eigvalsh(state)
    if w.max() <= 0:
        raise ValueError("平均態為零，無法建立 POVM 對應。")
    if w.min() > config.SUPPORT_TOL * w.max():
        return np.eye(state.shape[0], dtype=complex), state
    return linalg.support_restriction(state)


def assemblage_to_povms(a: Assemblage) -> Tuple[PovmCollection, np.ndarray]:
    """E_{a|x} = sbar^{-1/2} sigma_{a|x} sbar^{-1/2} on the support of the average state sbar."""
    sbar = a.average
    iso, restricted = _support(sbar)
    root = linalg.inv_sqrtm_psd(restricted)
    eye = np.eye(iso.shape[1])
    effects = []
    for pair in a.sigma:
        ep, em = (root @ iso.conj().T @ s @ iso @ root for s in pair)
        defect = (eye - ep - em) / 2
        effects.append([ep + defect, em + defect])
    return PovmCollection(effects), sbar


def povms_to_assemblage(p: PovmCollection, sbar: np.ndarray) -> Assemblage:
    iso, restricted = _support(sbar)
    if iso.shape[1] != p.n:
        raise ValueError(f"POVM 維度 {p.n} 與平均態支撐維度 {iso.shape[1]} 不符。")
    root = linalg.sqrtm_psd(restricted)
    return Assemblage([[iso @ root @ e @ root @ iso.conj().T for e in pair] for pair in p.effects])


def assemblage_from_state(rho: np.ndarray, p: PovmCollection) -> Assemblage:
    """sigma_{a|x} = Tr_1[(E_{a|x} (x) I) rho] for rho on C^n (x) C^d."""
    rho = linalg.hermitize(rho)
    n = p.n
    if rho.shape[0] % n:
        raise ValueError(f"態維度 {rho.shape[0]} 不能被 POVM 維度 {n} 整除。")
    d = rho.shape[0] // n
    eye = np.eye(d)
    return Assemblage([[linalg.partial_trace_first(linalg.kron(e, eye) @ rho, n, d) for e in pair]
                       for pair in p.effects])


def white_noise(p: PovmCollection, s: Sequence[float]) -> PovmCollection:
    """E'_{a|x} = s_x E_{a|x} + (1 - s_x) I/2."""
    direction = NoiseDirection(s)
    if direction.s.size != p.g:
        raise ValueError(f"雜訊向量長度 {direction.s.size} 與 g={p.g} 不符。")
    half = np.eye(p.n) / 2
    return PovmCollection([[sx * e + (1 - sx) * half for e in pair]
                           for sx, pair in zip(direction.s, p.effects)])


# --- joint measurability ----------------------------------------------------

@dataclass
class JmProgram:
    """Joint-observable SDP with every G_eps restricted to the face its marginals allow.

    faces[k] is an orthonormal basis of the common support of the effects selected by
    signs[kept[k]]; sign vectors with an empty face carry G_eps = 0 and no block.
    """
    problem: Optional[sdp.SdpProblem]
    signs: np.ndarray
    kept: List[int]
    faces: List[np.ndarray]
    inconsistency: float


def _face(effects: Sequence[np.ndarray]) -> np.ndarray:
    """Orthonormal basis of the intersection of the supports of PSD effects."""
    n = effects[0].shape[0]
    outside = np.zeros((n, n), dtype=complex)
    for e in effects:
        w, v = np.linalg.eigh(linalg.hermitize(e))
        support = v[:, w > config.SUPPORT_TOL]
        outside += np.eye(n) - support @ support.conj().T
    w, v = np.linalg.eigh(linalg.hermitize(outside))
    return v[:, w <= config.SUPPORT_TOL * len(effects)]


def _independent_constraints(constraints: List[Tuple[List[np.ndarray], float]],
                             block_dims: Sequence[int]) -> Tuple[List[Tuple[List[np.ndarray], float]], float]:
    """Orthonormal row basis of the constraint system, plus the norm of the rhs part it cannot reach."""
    flat = np.stack([np.concatenate([blk.ravel() for blk in blocks]) for blocks, _ in constraints])
    rhs = np.array([r for _, r in constraints])
    u, s, vt = np.linalg.svd(flat, full_matrices=False)
    rank = int(np.sum(s > 1e-9 * s[0])) if s.size and s[0] > 0 else 0
    reach = u[:, :rank]
    inconsistency = float(np.linalg.norm(rhs - reach @ (reach.T @ rhs)))
    out = []
    for row, beta in zip(vt[:rank], reach.T @ rhs / s[:rank]):
        blocks, start = [], 0
        for n in block_dims:
            blocks.append(row[start:start + n * n].reshape(n, n))
            start += n * n
        out.append((blocks, float(beta)))
    return out, inconsistency


def joint_measurability_problem(p: PovmCollection) -> JmProgram:
    """G_eps >= 0 for eps in {+-1}^g, sum G_eps = I, sum_{eps_x = +} G_eps = E_{+|x}.

    G_eps <= E_{eps_x|x} for every x, so its range lies in the common support of those effects;
    the program is posed on that face, which keeps sharp but compatible collections interior.
    """
    g, n = p.g, p.n
    if g > config.JM_MAX_G:
        raise ValueError(f"g={g} 超過聯合可測性上限 {config.JM_MAX_G}。")
    signs = next(spectrahedra.sign_vectors(g, chunk=1 << g))
    kept, faces = [], []
    for k, eps in enumerate(signs):
        face = _face([pair[0 if e > 0 else 1] for e, pair in zip(eps, p.effects)])
        if face.shape[1]:
            kept.append(k)
            faces.append(face)
    basis = linalg.hermitian_basis(n)
    if not kept:
        return JmProgram(None, signs, kept, faces, float(np.linalg.norm([np.trace(h).real for h in basis])))

    def pulled(h: np.ndarray) -> List[np.ndarray]:
        return [0.5 * linalg.real_embedding(v.conj().T @ h @ v) for v in faces]

    block_dims = [2 * v.shape[1] for v in faces]
    constraints = []
    for h in basis:
        constraints.append((pulled(h), float(np.trace(h).real)))
    for x, (ep, _) in enumerate(p.effects):
        for h in basis:
            blocks = [w if signs[k][x] > 0 else np.zeros_like(w) for k, w in zip(kept, pulled(h))]
            constraints.append((blocks, float(np.trace(h @ ep).real)))
    reduced, inconsistency = _independent_constraints(constraints, block_dims)
    if not reduced:
        return JmProgram(None, signs, kept, faces, inconsistency)
    objective = [np.zeros((k, k)) for k in block_dims]
    problem = sdp.SdpProblem(block_dims, objective, reduced, name=f"joint-measurability(g={g},n={n})")
    return JmProgram(problem, signs, kept, faces, inconsistency)


def jointly_measurable(p: PovmCollection) -> JmResult:
    """Yes / no with the feasibility margin; |margin| below JM_MARGIN is reported as undecided."""
    program = joint_measurability_problem(p)
    start_time = time.time()
    joint = None
    if program.problem is None or program.inconsistency > config.FEASIBILITY_TOL:
        # marginals cannot be met on the allowed faces even before positivity
        margin = program.inconsistency
        verdict = Verdict.NO
    else:
        result = sdp.feasibility(program.problem, margin=config.JM_MARGIN)
        margin = result.margin
        if result.status == sdp.FeasibilityStatus.FEASIBLE:
            verdict = Verdict.YES
            joint = [np.zeros((p.n, p.n), dtype=complex) for _ in program.signs]
            for k, v, blk in zip(program.kept, program.faces, result.witness):
                joint[k] = linalg.hermitize(v @ linalg.complex_from_embedding(blk) @ v.conj().T)
        elif result.status == sdp.FeasibilityStatus.INFEASIBLE:
            verdict = Verdict.NO
        else:
            verdict = Verdict.UNDECIDED
    if abs(margin) < config.JM_MARGIN:
        verdict, joint = Verdict.UNDECIDED, None
    end_time = time.time()
    logging.info(f"聯合可測性 (g={p.g}, n={p.n}): {verdict.value}，margin={margin:.3e}，耗時: {end_time - start_time:.2f} 秒。")
    return JmResult(verdict, float(margin), joint, program.signs if joint is not None else None)


def has_lhs(a: Assemblage) -> JmResult:
    povms, _ = assemblage_to_povms(a)
    return jointly_measurable(povms)


def noise_threshold(p: PovmCollection, direction: Sequence[float]) -> float:
    """Largest lambda in [0, 1] with the noisy collection at s = lambda * direction jointly measurable."""
    direction = NoiseDirection(direction)
    if not np.any(direction.s > 0):
        raise ValueError("雜訊方向不可為零向量。")

    def compatible(lam: float) -> bool:
        return jointly_measurable(white_noise(p, lam * direction.s)).verdict != Verdict.NO

    logging.info(f"開始雜訊閾值二分法，方向 {direction.s.tolist()}。")
    start_time = time.time()
    if compatible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > config.NOISE_BISECTION_WIDTH:
        mid = (lo + hi) / 2
        if compatible(mid):
            lo = mid
        else:
            hi = mid
    end_time = time.time()
    logging.info(f"雜訊閾值 = {lo:.6f}，耗時: {end_time - start_time:.2f} 秒。")
    return lo
