import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
import constants
import constructions
import linalg
import spectrahedra
import steering

FILE_SUBCOMMANDS = {"value", "inclusion", "lhs", "robustness"}
MC_SUBCOMMANDS = {"tau"}

Report = Tuple[Dict[str, Any], Optional[List[Dict[str, Any]]]]


class InputError(ValueError):
    """Malformed or missing input; reported with exit code 2."""


@dataclass
class RunConfig:
    subcommand: str
    input: Optional[str] = None
    seed: int = config.DEFAULT_SEED
    samples: int = config.MC_SAMPLES
    sdp_tol: float = config.SDP_TOL
    fmt: str = "json"
    out: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def validate(self):
        if self.subcommand not in config.SUBCOMMANDS:
            raise InputError(f"未知的子命令: {self.subcommand}")
        if self.subcommand in FILE_SUBCOMMANDS and not self.input:
            raise InputError(f"子命令 {self.subcommand} 需要 --input 檔案。")
        if self.input and not os.path.isfile(self.input):
            raise InputError(f"輸入檔案不存在: {self.input}")
        if self.subcommand in MC_SUBCOMMANDS and self.samples < config.MIN_CLI_SAMPLES:
            raise InputError(f"Monte Carlo 樣本數必須 >= {config.MIN_CLI_SAMPLES}，收到 {self.samples}。")
        if self.sdp_tol <= 0:
            raise InputError("--sdp-tol 必須為正數。")

    def to_dict(self) -> Dict[str, Any]:
        return {"subcommand": self.subcommand, "input": self.input, "seed": self.seed,
                "samples": self.samples, "sdp_tol": self.sdp_tol, "format": self.fmt,
                "options": self.options}


def _load_json(path: str, decoder: Callable[[Any], Any]):
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return decoder(data)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, IndexError, ValueError) as e:
        raise InputError(f"無法讀取輸入 {path}: {type(e).__name__}: {e}") from e


# --- subcommands ----------------------------------------------------------

def cmd_tau(cfg: RunConfig) -> Report:
    opts = cfg.options
    rng = linalg.RandomStream(cfg.seed)
    if opts.get("d_max"):
        rows = constants.tau_star_sweep(opts["d_max"])
        if opts.get("mc"):
            for row, stream in zip(rows, rng.split(len(rows))):
                if row["d"] > config.TAU_MC_MAX_D:
                    break
                est = constants.tau_star_mc(row["d"], cfg.samples, stream)
                row.update({"mc": est.value, "stderr": est.stderr, "k_argmin": est.k_argmin,
                            "k_expected": est.k_expected})
        return {"rows": rows}, rows
    d = opts.get("d", 2)
    closed = constants.tau_star_closed(d)
    est = constants.tau_star_mc(d, cfg.samples, rng)
    result = {
        "d": d,
        "closed": float(closed),
        "closed_exact": str(closed),
        "mc": est.value,
        "stderr": est.stderr,
        "k_argmin": est.k_argmin,
        "k_expected": est.k_expected,
        "within_3sigma": abs(est.value - float(closed)) <= 3 * est.stderr,
        "asymptotic_ratio": constants.tau_asymptotic_ratio(d),
    }
    return result, None


def cmd_value(cfg: RunConfig) -> Report:
    ineq = _load_json(cfg.input, steering.SteeringInequality.from_dict)
    vl = steering.vl_value(ineq)
    vq = steering.vq_value(ineq)
    result = {"g": ineq.g, "d": ineq.d, "unbiased": ineq.unbiased, "vl": vl, "vq": vq,
              "violation": steering.violation(ineq)}
    n = cfg.options.get("seesaw_n")
    if n:
        result["seesaw"] = steering.vq_seesaw(ineq, n, cfg.options.get("restarts", 10), linalg.RandomStream(cfg.seed))
        result["seesaw_n"] = n
    return result, None


def _load_tuple(data: Dict[str, Any]) -> spectrahedra.SpectrahedronTuple:
    return spectrahedra.SpectrahedronTuple.from_dict(data)


def cmd_inclusion(cfg: RunConfig) -> Report:
    tup = _load_json(cfg.input, _load_tuple)
    monic = spectrahedra.normalize_nonmonic(tup)
    res = spectrahedra.cube_inclusion(monic)
    result = res.to_dict()
    result.pop("sdp", None)
    result.update({"g": monic.g, "d": monic.d, "level1_cube_in": spectrahedra.level1_cube_in(monic)})
    return result, None


def cmd_pauli(cfg: RunConfig) -> Report:
    g = cfg.options.get("g", 3)
    ineq = constructions.pauli_inequality(g)
    vl = steering.vl_value(ineq)
    vq = steering.vq_value(ineq)
    value = steering.assemblage_value(ineq, constructions.optimal_assemblage(g))
    result = {"g": g, "d": ineq.d, "vl": vl, "vq": vq, "violation": vq / vl, "assemblage_value": value}
    return result, None


def cmd_netopt(cfg: RunConfig) -> Report:
    opts = cfg.options
    d = opts.get("d", 2)
    rows = []
    for K in opts.get("K", [8]):
        runs = []
        for j in range(opts.get("seeds", 1)):
            net = constructions.unitary_net(d, K, opts.get("pool", 2000), linalg.RandomStream(cfg.seed + j, stream_id=K))
            runs.append(constructions.net_inequality(d, net, opts.get("grid")))
        rows.append({
            "K": K,
            "seeds": len(runs),
            "delta": float(np.mean([r.net.delta for r in runs])),
            "vq_lower": float(np.mean([r.vq_lower for r in runs])),
            "vl_upper": float(np.mean([r.vl_upper for r in runs])),
            "ratio": float(np.mean([r.ratio for r in runs])),
            "certified": all(r.certified for r in runs),
        })
    return {"d": d, "rows": rows, "cap": float(1 / constants.tau_star_closed(d))}, rows


def _load_assemblage_or_povms(data: Dict[str, Any]):
    if "sigma" in data:
        return steering.Assemblage.from_dict(data)
    return steering.PovmCollection.from_dict(data)


def cmd_lhs(cfg: RunConfig) -> Report:
    assemblage = _load_json(cfg.input, steering.Assemblage.from_dict)
    res = steering.has_lhs(assemblage)
    return {"g": assemblage.g, "d": assemblage.d, "has_lhs": res.verdict.value, "margin": res.margin}, None


def cmd_robustness(cfg: RunConfig) -> Report:
    obj = _load_json(cfg.input, _load_assemblage_or_povms)
    povms = steering.assemblage_to_povms(obj)[0] if isinstance(obj, steering.Assemblage) else obj
    direction = cfg.options.get("direction") or [1.0] * povms.g
    if len(direction) != povms.g:
        raise InputError(f"--direction 長度 {len(direction)} 與 g={povms.g} 不符。")
    threshold = steering.noise_threshold(povms, direction)
    return {"g": povms.g, "n": povms.n, "direction": list(direction), "threshold": threshold}, None


def _region_directions(cfg: RunConfig, g: int) -> List[np.ndarray]:
    opts = cfg.options
    if opts.get("directions"):
        raw = _load_json(opts["directions"], lambda data: [np.asarray(u, dtype=float) for u in data])
        if any(u.shape != (g,) or np.any(u < 0) or not np.any(u > 0) for u in raw):
            raise InputError(f"方向檔必須是長度 {g} 的非負非零向量列表。")
        return raw
    if g != 2:
        raise InputError("--angles 只適用於 g=2，其他 g 請使用 --directions。")
    n = opts.get("angles", 5)
    if n < 2:
        raise InputError("--angles 必須 >= 2。")
    theta = np.linspace(0.0, np.pi / 2, n)
    return [np.array([math.cos(t), math.sin(t)]) for t in theta]


def _region_corpus(cfg: RunConfig, g: int, d: int) -> List[spectrahedra.SpectrahedronTuple]:
    if cfg.input:
        def decode(data):
            items = data if isinstance(data, list) else [data]
            return [spectrahedra.normalize_nonmonic(_load_tuple(item)) for item in items]
        corpus = _load_json(cfg.input, decode)
    else:
        rng = linalg.RandomStream(cfg.seed)
        corpus = [spectrahedra.SpectrahedronTuple.from_monic([linalg.random_hermitian(d, s) for s in stream.split(g)])
                  for stream in rng.split(cfg.options.get("random", 20))]
        if g <= config.ANTICOMMUTING_MAX_G:
            family = constructions.anticommuting_family(g)
            if family.dim == d:
                corpus.append(spectrahedra.SpectrahedronTuple.from_monic(family.F))
    return [spectrahedra.level1_normalized(b) for b in corpus]


def cmd_region(cfg: RunConfig) -> Report:
    opts = cfg.options
    corpus = _region_corpus(cfg, opts.get("g", 2), opts.get("d", 2))
    if not corpus:
        raise InputError("區域掃描的語料庫為空。")
    g, d = corpus[0].g, corpus[0].d
    if any(b.g != g or b.d != d for b in corpus):
        raise InputError("語料庫中的元組必須有相同的 g 與 d。")
    directions = _region_directions(cfg, g)
    tau = float(constants.tau_star_closed(d))
    rows = []
    for k, u in enumerate(directions):
        bounds = [spectrahedra.cube_inclusion(spectrahedra.scale_along(b, u)).max_scale for b in corpus]
        bound = min(bounds)
        row = {"direction": k}
        row.update({f"u{i + 1}": float(ui) for i, ui in enumerate(u)})
        row.update({
            "upper_bound": bound if math.isfinite(bound) else None,
            "quarter_circle": float(1 / np.linalg.norm(u)),
            "tau_star": float(tau / np.abs(u).max()),
        })
        rows.append(row)
    return {"g": g, "d": d, "instances": len(corpus), "bound_kind": "per-instance upper bound", "rows": rows}, rows


HANDLERS = {
    "tau": cmd_tau,
    "value": cmd_value,
    "inclusion": cmd_inclusion,
    "pauli": cmd_pauli,
    "netopt": cmd_netopt,
    "lhs": cmd_lhs,
    "robustness": cmd_robustness,
    "region": cmd_region,
}


# --- output ------------------------------------------------------------------

def _to_csv(cfg: RunConfig, result: Dict[str, Any], rows: Optional[List[Dict[str, Any]]]) -> str:
    """CSV body preceded by one comment row carrying the run configuration."""
    if rows is None:
        rows = [{k: v for k, v in result.items() if not isinstance(v, (dict, list))}]
    header: List[str] = []
    for row in rows:
        header += [k for k in row if k not in header]
    buffer = io.StringIO()
    buffer.write(f"# config {json.dumps(cfg.to_dict(), sort_keys=True)}\n")
    writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    """Dispatches one subcommand; returns the process exit code."""
    stage = "input"
    try:
        cfg.validate()
        config.SDP_TOL = cfg.sdp_tol
        logging.info(f"收到子命令 '{cfg.subcommand}' 請求，種子 {cfg.seed}。")
        start_time = time.time()
        stage = "compute"
        result, rows = HANDLERS[cfg.subcommand](cfg)
        end_time = time.time()
        logging.info(f"子命令 '{cfg.subcommand}' 完成，耗時: {end_time - start_time:.2f} 秒。")
    except InputError as e:
        logging.error(f"子命令 '{cfg.subcommand}' 輸入錯誤: {e}", exc_info=True)
        _emit(json.dumps({"error": str(e), "type": type(e).__name__, "stage": "input"}, sort_keys=True) + "\n", None)
        return 2
    except (ValueError, RuntimeError) as e:
        logging.error(f"子命令 '{cfg.subcommand}' 在 {stage} 階段發生錯誤: {e}", exc_info=True)
        _emit(json.dumps({"error": str(e), "type": type(e).__name__, "stage": stage}, sort_keys=True) + "\n", None)
        return 1

    if cfg.fmt == "csv":
        text = _to_csv(cfg, result, rows)
    else:
        text = json.dumps({"config": cfg.to_dict(), "result": result}, sort_keys=True, indent=2) + "\n"
    _emit(text, cfg.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Steering inequalities, free spectrahedra and matrix-cube inclusion constants.")
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    parser.add_argument("--samples", type=int, default=config.MC_SAMPLES)
    parser.add_argument("--sdp-tol", type=float, default=config.SDP_TOL)
    parser.add_argument("--format", dest="fmt", choices=["json", "csv"], default="json")
    parser.add_argument("--out", default=None)
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    parsers = {name: sub.add_parser(name, help=help_text) for name, help_text in config.SUBCOMMANDS.items()}

    parsers["tau"].add_argument("--d", type=int, default=2)
    parsers["tau"].add_argument("--d-max", type=int, default=None)
    parsers["tau"].add_argument("--mc", action="store_true", help="add Monte Carlo columns to a --d-max sweep")

    parsers["value"].add_argument("--input", required=True)
    parsers["value"].add_argument("--seesaw-n", type=int, default=None)
    parsers["value"].add_argument("--restarts", type=int, default=10)

    parsers["inclusion"].add_argument("--input", required=True)
    parsers["pauli"].add_argument("--g", type=int, default=3)

    parsers["netopt"].add_argument("--d", type=int, default=2)
    parsers["netopt"].add_argument("--K", type=int, nargs="+", default=[8])
    parsers["netopt"].add_argument("--pool", type=int, default=2000)
    parsers["netopt"].add_argument("--seeds", type=int, default=1)
    parsers["netopt"].add_argument("--grid", type=int, default=None)

    parsers["lhs"].add_argument("--input", required=True)
    parsers["robustness"].add_argument("--input", required=True)
    parsers["robustness"].add_argument("--direction", type=float, nargs="+", default=None)

    parsers["region"].add_argument("--input", default=None)
    parsers["region"].add_argument("--g", type=int, default=2)
    parsers["region"].add_argument("--d", type=int, default=2)
    parsers["region"].add_argument("--angles", type=int, default=5)
    parsers["region"].add_argument("--directions", default=None)
    parsers["region"].add_argument("--random", type=int, default=20)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    common = {"seed", "samples", "sdp_tol", "fmt", "out", "log_level", "subcommand", "input"}
    options = {k: v for k, v in vars(args).items() if k not in common and v is not None}
    return RunConfig(args.subcommand, getattr(args, "input", None), args.seed, args.samples,
                     args.sdp_tol, args.fmt, args.out, options)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO), stream=sys.stderr)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
