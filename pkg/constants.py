"""Matrix-cube inclusion constants tau*(d): closed forms and Monte-Carlo checks of the Gaussian functionals."""
import logging
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

import config
import linalg


@dataclass
class TauEstimate:
    d: int
    k_argmin: int
    value: float
    stderr: float
    samples: int
    profile: Optional[List[float]] = None  # mean per k, tau_star_mc only
    k_expected: Optional[bool] = None  # argmin at floor(d/2) or ceil(d/2)

    def to_dict(self) -> Dict[str, Any]:
        out = {"d": self.d, "k_argmin": self.k_argmin, "value": self.value,
               "stderr": self.stderr, "samples": self.samples}
        if self.profile is not None:
            out["profile"] = self.profile
        if self.k_expected is not None:
            out["k_expected"] = self.k_expected
        return out


@dataclass
class QuarterCircleQuery:
    s: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float).ravel()
        if np.any(self.s < 0) or np.any(self.s > 1):
            raise ValueError(f"四分之一圓查詢的分量必須在 [0, 1] 內，收到 {self.s.tolist()}。")


def tau_star_closed(d: int) -> Fraction:
    """tau*(d) = C(2n, n) / 4^n with n = floor(d/2)."""
    if d < 1:
        raise ValueError("d 必須 >= 1。")
    n = d // 2
    return Fraction(math.comb(2 * n, n), 4 ** n)


def kummer_closed(s: int) -> Fraction:
    """E|D_{s,s}| = 4^{1-s} s C(2s, s)."""
    if s < 1:
        raise ValueError("s 必須 >= 1。")
    return Fraction(4 * s * math.comb(2 * s, s), 4 ** s)


def tau_asymptotic_ratio(d: int) -> float:
    return float(tau_star_closed(d)) * math.sqrt(math.pi * d / 2)


def tau_star_sweep(d_max: int) -> List[Dict[str, Any]]:
    if d_max < 1:
        raise ValueError("d_max 必須 >= 1。")
    rows = []
    for d in range(1, d_max + 1):
        tau = tau_star_closed(d)
        rows.append({"d": d, "closed": float(tau), "closed_exact": str(tau),
                     "inverse": float(1 / tau), "asymptotic_ratio": tau_asymptotic_ratio(d)})
    return rows


def quarter_circle_contains(q: QuarterCircleQuery) -> bool:
    return float(np.sum(q.s ** 2)) <= 1 + 1e-12


def _chunks(samples: int, rng: linalg.RandomStream) -> Iterator[Tuple[int, linalg.RandomStream]]:
    if samples < 2:
        raise ValueError("Monte Carlo 樣本數必須 >= 2。")
    count = math.ceil(samples / config.MC_CHUNK)
    for k, stream in enumerate(rng.split(count)):
        yield min(config.MC_CHUNK, samples - k * config.MC_CHUNK), stream


def _mean_stderr(total: np.ndarray, total_sq: np.ndarray, samples: int) -> Tuple[np.ndarray, np.ndarray]:
    mean = total / samples
    var = np.clip((total_sq - samples * mean ** 2) / (samples - 1), 0.0, None)
    return mean, np.sqrt(var / samples)


def h_functional_mc(b: Sequence[float], samples: int, rng: linalg.RandomStream) -> TauEstimate:
    """E| sum_i b_i |z_i|^2 | over standard complex Gaussian z."""
    b = np.asarray(b, dtype=float).ravel()
    if b.size == 0 or abs(np.abs(b).sum() - 1) > 1e-10:
        raise ValueError(f"b 必須滿足 ||b||_1 = 1，收到 {np.abs(b).sum():.12g}。")
    total = total_sq = 0.0
    for size, stream in _chunks(samples, rng):
        w = np.abs(linalg.complex_gaussian_vector(b.size, stream, size=size)) ** 2
        vals = np.abs(w @ b)
        total += vals.sum()
        total_sq += (vals ** 2).sum()
    mean, stderr = _mean_stderr(np.asarray(total), np.asarray(total_sq), samples)
    return TauEstimate(b.size, int(np.sum(b > 0)), float(mean), float(stderr), samples)


def tau_star_mc(d: int, samples: int, rng: linalg.RandomStream) -> TauEstimate:
    """Minimum over k of H(eps^k / d), eps^k with k entries +1; all k share the same Gaussian draws."""
    if d < 1 or d > config.TAU_MC_MAX_D:
        raise ValueError(f"d={d} 超出 Monte Carlo 範圍 [1, {config.TAU_MC_MAX_D}]。")
    logging.info(f"開始 tau*({d}) Monte Carlo 估計，樣本數 {samples}。")
    start_time = time.time()
    total = np.zeros(d + 1)
    total_sq = np.zeros(d + 1)
    for size, stream in _chunks(samples, rng):
        w = np.abs(linalg.complex_gaussian_vector(d, stream, size=size)) ** 2
        head = np.concatenate([np.zeros((size, 1)), np.cumsum(w, axis=1)], axis=1)
        vals = np.abs(2 * head - head[:, -1:]) / d
        total += vals.sum(axis=0)
        total_sq += (vals ** 2).sum(axis=0)
    mean, stderr = _mean_stderr(total, total_sq, samples)
    k = int(np.argmin(mean))
    k_expected = k in (d // 2, (d + 1) // 2)
    if not k_expected:
        logging.warning(f"tau*({d}) 的最小值出現在 k={k}，預期為 {d // 2} 或 {(d + 1) // 2}。")
    end_time = time.time()
    logging.info(f"tau*({d}) ≈ {mean[k]:.6f} ± {stderr[k]:.6f} (k={k})，耗時: {end_time - start_time:.2f} 秒。")
    return TauEstimate(d, k, float(mean[k]), float(stderr[k]), samples, mean.tolist(), k_expected)


def abs_chi2_diff_mc(s: int, t: int, samples: int, rng: linalg.RandomStream) -> TauEstimate:
    """E|X - Y| with X ~ chi^2(2s), Y ~ chi^2(2t) independent."""
    if s < 0 or t < 0 or s + t == 0:
        raise ValueError(f"需要 s, t >= 0 且不同時為零，收到 s={s}, t={t}。")
    total = total_sq = 0.0
    for size, stream in _chunks(samples, rng):
        gen = stream.generator
        x = gen.chisquare(2 * s, size) if s else np.zeros(size)
        y = gen.chisquare(2 * t, size) if t else np.zeros(size)
        vals = np.abs(x - y)
        total += vals.sum()
        total_sq += (vals ** 2).sum()
    mean, stderr = _mean_stderr(np.asarray(total), np.asarray(total_sq), samples)
    return TauEstimate(s + t, s, float(mean), float(stderr), samples)
