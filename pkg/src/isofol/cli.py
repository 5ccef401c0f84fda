"""Batch command-line interface.

Subcommands load a JSON configuration, run one computation, and write
``<prefix>.report.json`` (plus ``<prefix>.scan.csv`` for detector scans).
Exit codes: 0 success, 1 computational failure (partial report preserved),
2 configuration error (no report written).

All randomness flows through a 64-bit counter-based Philox generator, so a
(config, seed) pair reproduces its samples bit-for-bit across platforms;
the first uniform draw for seed 42 is 0.8201981478608876.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path as FilePath
from typing import Callable, Optional

import numpy as np

from . import detector, fuchsian, monodromy, paths, schlesinger, torus
from .errors import ConfigError, IsofolError, SamplingError
from .util import pair, pair_array, unpair, unpair_array

REL_TOL_RANGE = (1e-14, 1e-4)
FD_STEP_RANGE = (1e-9, 1e-2)

COMMANDS = ("monodromy", "schlesinger", "detect", "torus-check")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str
    out_prefix: str
    rel_tol: float = 1e-10
    fd_step: float = 1e-5
    rank_eps: float = 1e-6
    samples: int = 20
    seed: int = 0
    mode: str = "framed"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not REL_TOL_RANGE[0] <= self.rel_tol <= REL_TOL_RANGE[1]:
            raise ConfigError(f"--rel-tol must lie in {REL_TOL_RANGE}")
        if not FD_STEP_RANGE[0] <= self.fd_step <= FD_STEP_RANGE[1]:
            raise ConfigError(f"--fd-step must lie in {FD_STEP_RANGE}")
        if not 0.0 < self.rank_eps < 1.0:
            raise ConfigError("--rank-eps must lie in (0, 1)")
        if self.samples < 0:
            raise ConfigError("--samples must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if self.mode not in ("framed", "class"):
            raise ConfigError("--mode must be 'framed' or 'class'")


@dataclass(frozen=True)
class DomainSpec:
    """Per-coordinate sampling boxes plus an admissibility predicate."""

    boxes: np.ndarray
    predicate: Optional[Callable[[np.ndarray], bool]] = None

    def __post_init__(self):
        boxes = np.asarray(self.boxes, dtype=float)
        if boxes.ndim != 2 or boxes.shape[1] != 2:
            raise ValueError("boxes must have shape (q, 2)")
        if np.any(boxes[:, 1] < boxes[:, 0]):
            raise ValueError("box upper bounds must not be below lower bounds")
        object.__setattr__(self, "boxes", boxes)


def seeded_samples(domain: DomainSpec, count: int, seed: int) -> list:
    """Deterministic rejection samples from the domain boxes.

    Uses the counter-based Philox generator keyed by the seed, so the same
    seed yields identical samples on every platform.  A rejection rate
    above 99 percent raises a sampling error.
    """
    if count == 0:
        return []
    rng = np.random.Generator(np.random.Philox(key=seed))
    lo = domain.boxes[:, 0]
    span = domain.boxes[:, 1] - domain.boxes[:, 0]
    out = []
    attempts = 0
    max_attempts = max(1000, 100 * count)
    while len(out) < count:
        attempts += 1
        if attempts > max_attempts and len(out) < attempts / 100.0:
            raise SamplingError(
                f"rejection rate above 99% ({len(out)} accepted in {attempts} attempts)"
            )
        tau = lo + span * rng.random(lo.size)
        if domain.predicate is None or domain.predicate(tau):
            out.append(tau)
    return out


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

def bundled_config_path(name: str) -> FilePath:
    """Filesystem path of a bundled example configuration."""
    with resources.as_file(resources.files("isofol").joinpath("configs", name)) as p:
        return FilePath(str(p))


def _load_json(path: str) -> dict:
    p = FilePath(path)
    if not p.is_file():
        raise ConfigError(f"input file not found: {path}")
    try:
        with open(p, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _piece_from_json(data: dict):
    try:
        kind = data["type"]
        if kind == "segment":
            return paths.Segment(unpair(data["start"]), unpair(data["end"]))
        if kind == "arc":
            return paths.Arc(unpair(data["center"]), float(data["radius"]),
                             float(data["angles"][0]), float(data["angles"][1]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad path piece {data!r}: {exc}") from exc
    raise ConfigError(f"unknown path piece type {data.get('type')!r}")


def _pole_path_from_json(data, system) -> schlesinger.PolePath:
    if len(data) != system.n:
        raise ConfigError("pole_path must list one piece list per pole")
    pole_paths = []
    for k, pieces in enumerate(data):
        if not pieces:
            u = complex(system.poles[k])
            pole_paths.append(paths.Path([paths.Segment(u, u)]))
        else:
            pole_paths.append(paths.Path([_piece_from_json(p) for p in pieces]))
    return schlesinger.PolePath(tuple(pole_paths))


def _family_from_json(data: dict, rel_tol: float):
    try:
        kind = data["type"]
    except (KeyError, TypeError) as exc:
        raise ConfigError("family config needs a 'type' field") from exc
    if kind == "nilpotent3":
        try:
            a = unpair_array(data["a"])
            u = unpair_array(data["u"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad nilpotent3 family config: {exc}") from exc
        basepoint = unpair(data["basepoint"]) if "basepoint" in data else None
        family = detector.nilpotent_parameter_family(a, u, basepoint=basepoint,
                                                     rel_tol=rel_tol)
        reference = detector.nilpotent_reference_tau(a, u)
        return family, reference
    if kind == "torus":
        try:
            t = torus.torus_from_json_dict(data)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad torus family config: {exc}") from exc
        if not t.alpha_is_finite:
            raise ConfigError("detector work needs the finite-slope chart")
        return torus.parameter_family(), torus.torus_tau(t)
    raise ConfigError(f"unknown family type {kind!r}")


def _samples_from_config(data, family, reference, count, seed):
    if data and "points" in data:
        pts = [np.asarray(p, dtype=float) for p in data["points"]]
        for p in pts:
            if p.shape != (family.dimension,):
                raise ConfigError(
                    f"sample points must have {family.dimension} coordinates"
                )
        return pts
    if data and "boxes" in data:
        boxes = np.asarray(data["boxes"], dtype=float)
    else:
        # default: a small box around the reference configuration
        width = np.full(family.dimension, 0.1)
        boxes = np.column_stack([reference - width, reference + width])
    try:
        domain = DomainSpec(boxes, family.admissible)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return seeded_samples(domain, count, seed)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _jsonify(value):
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return _jsonify(value.tolist())
    if isinstance(value, complex):
        return pair(value)
    return value


def _run_monodromy(config: RunConfig) -> dict:
    data = _load_json(config.input_path)
    try:
        system = fuchsian.system_from_json_dict(data["system"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad system config: {exc}") from exc
    basepoint = unpair(data["basepoint"]) if "basepoint" in data else \
        paths.default_basepoint(system.poles)
    radius_factor = float(data.get("radius_factor", 0.4))
    loop_system = paths.canonical_generators(basepoint, system.poles, radius_factor)
    transports = monodromy.loop_transports(system, loop_system, config.rel_tol)
    tup = monodromy.MonodromyTuple(
        basepoint, np.stack([t.matrix for t in transports]),
        monodromy.KIND_LINEAR, loop_system.order)
    defect = monodromy.product_defect(tup, system, loop_system, config.rel_tol)
    return {
        "tuple": monodromy.tuple_to_json_dict(tup),
        "product_defect": defect,
        "trace_invariants": monodromy.trace_invariants(tup).tolist(),
        "degraded_ordering": loop_system.degraded,
        "diagnostics": {
            "steps": [t.steps for t in transports],
            "rejected": [t.rejected for t in transports],
            "max_error_estimates": [t.max_error_estimate for t in transports],
            "loop_clearance": loop_system.r_min,
        },
    }


def _run_schlesinger(config: RunConfig) -> dict:
    data = _load_json(config.input_path)
    try:
        system = fuchsian.system_from_json_dict(data["system"])
        pole_path = _pole_path_from_json(data["pole_path"], system)
    except KeyError as exc:
        raise ConfigError(f"schlesinger config needs {exc}") from exc
    flowed = schlesinger.flow(system, pole_path, config.rel_tol)
    drift = schlesinger.isomonodromy_drift(system, pole_path, config.rel_tol)
    tr0 = np.trace(system.residues, axis1=1, axis2=2)
    tr1 = np.trace(flowed.residues, axis1=1, axis2=2)
    det0 = np.linalg.det(system.residues)
    det1 = np.linalg.det(flowed.residues)
    return {
        "system": fuchsian.system_to_json_dict(flowed),
        "isomonodromy_drift": drift,
        "trace_drift": float(np.max(np.abs(tr1 - tr0))),
        "det_drift": float(np.max(np.abs(det1 - det0))),
        "initial_traces": pair_array(tr0),
        "final_traces": pair_array(tr1),
    }


def _run_detect(config: RunConfig) -> tuple[dict, str]:
    data = _load_json(config.input_path)
    if "family" not in data:
        raise ConfigError("detect config needs a 'family' section")
    family, reference = _family_from_json(data["family"], config.rel_tol)
    samples = _samples_from_config(data.get("samples"), family, reference,
                                   config.samples, config.seed)
    if not samples:
        raise ConfigError("no sample points (set --samples or samples.points)")
    rank_map = detector.rank_scan(family, samples, config.mode,
                                  config.fd_step, config.rank_eps)
    for report in rank_map.reports:
        if report is not None:
            flag = detector.complex_structure_check(report, family.complex_pairs)
            object.__setattr__(report, "complex_structure", flag)
    results = {
        "mode": config.mode,
        "coordinate_names": list(family.coordinate_names),
        "scan": detector.rank_map_to_json_dict(rank_map),
    }
    return results, detector.rank_map_to_csv(rank_map)


def _run_torus_check(config: RunConfig) -> dict:
    data = _load_json(config.input_path)
    try:
        t = torus.torus_from_json_dict(data)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad torus config: {exc}") from exc
    tup = torus.translation_monodromy(t)
    integrals = torus.first_integrals(t)
    results = {
        "translation_lengths": pair_array(tup.translations),
        "first_integrals": pair_array(integrals),
        "flags": list(tup.flags),
    }
    if t.alpha_is_finite:
        family = torus.parameter_family()
        tau = torus.torus_tau(t)
        report = detector.kernel_report(family, tau, "class",
                                        config.fd_step, config.rank_eps)
        closed_form = torus.analytic_kernel(t)
        from .util import subspace_distance

        results.update({
            "class_rank": report.rank,
            "detector_kernel_dim": report.kernel_dim,
            "analytic_kernel_dim": closed_form.shape[1],
            "max_principal_angle": subspace_distance(report.kernel_basis, closed_form),
            "kernel_report": detector.report_to_json_dict(report),
        })
    return results


def _write_report(config: RunConfig, payload: dict):
    path = FilePath(config.out_prefix + ".report.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonify(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def run(config: RunConfig) -> int:
    """Execute a parsed configuration; returns the process exit code."""
    params = {
        "rel_tol": config.rel_tol,
        "fd_step": config.fd_step,
        "rank_eps": config.rank_eps,
        "samples": config.samples,
        "seed": config.seed,
        "mode": config.mode,
    }
    envelope = {"command": config.command, "params": params, "status": "ok"}
    scan_csv = None
    try:
        if config.command == "monodromy":
            envelope["results"] = _run_monodromy(config)
        elif config.command == "schlesinger":
            envelope["results"] = _run_schlesinger(config)
        elif config.command == "detect":
            envelope["results"], scan_csv = _run_detect(config)
        else:
            envelope["results"] = _run_torus_check(config)
    except ConfigError:
        raise
    except IsofolError as exc:
        envelope["status"] = "error"
        envelope["error"] = {"type": type(exc).__name__, "message": str(exc)}
        _write_report(config, envelope)
        return 1
    _write_report(config, envelope)
    if scan_csv is not None:
        with open(config.out_prefix + ".scan.csv", "w", encoding="utf-8") as fh:
            fh.write(scan_csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isofol",
        description="monodromy, Schlesinger flow, and integrable-direction detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("monodromy", "framed monodromy of a Fuchsian system"),
        ("schlesinger", "integrate the Schlesinger flow along a pole motion"),
        ("detect", "kernel scan of a parameter family"),
        ("torus-check", "closed-form torus foliation report"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--input", required=True, help="JSON configuration file")
        p.add_argument("--out-prefix", required=True, help="output path prefix")
        p.add_argument("--rel-tol", type=float, default=1e-10)
        p.add_argument("--fd-step", type=float, default=1e-5)
        p.add_argument("--rank-eps", type=float, default=1e-6)
        p.add_argument("--samples", type=int, default=20)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mode", choices=("framed", "class"), default="framed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(
            command=args.command,
            input_path=args.input,
            out_prefix=args.out_prefix,
            rel_tol=args.rel_tol,
            fd_step=args.fd_step,
            rank_eps=args.rank_eps,
            samples=args.samples,
            seed=args.seed,
            mode=args.mode,
        )
        return run(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
