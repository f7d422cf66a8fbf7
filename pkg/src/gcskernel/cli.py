"""Command-line front end: check | detect | decompose | solve.

Exit codes: 0 well, 1 parse/validation error, 3 under, 4 over,
5 over-and-under, 6 unstable.  Reports are deterministic for a fixed model
and configuration; JSON output is byte-stable (sorted keys, fixed
separators).  The environment variable GCS_SEED overrides --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .compiler import (
    AnchorError,
    add_anchors,
    assignment_from_params,
    compile_model,
    linear_system,
    params_from_assignment,
)
from .decompose import DecompositionError, bottom_up, solve_tree, top_down
from .detect import (
    CapExceeded,
    detection_report,
    greedy_dependency_groups,
    greedy_well_parts,
    oracle_max_well_part,
    oracle_min_dependent_sets,
)
from .model import Model, model_from_json_dict, validate
from .numeric import newton_solve, optimize_solve
from .structural import build_graphs, counting_state
from .witness import characterize, generate_witness

EXIT = {"well": 0, "under": 3, "over": 4, "over-and-under": 5, "unstable": 6}


@dataclass
class RunConfig:
    residual_tol: float = 1e-9
    rank_tol: float = 1e-8
    seed: int = 0
    witnesses: int = 3
    fmt: str = "text"
    mode: str = "both"  # structural | witness | both
    max_iter: int = 100

    def __post_init__(self):
        if self.residual_tol <= 0 or self.rank_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.witnesses < 1:
            raise ValueError("witness count must be >= 1")


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")
        return
    def walk(obj, indent=0):
        pad = "  " * indent
        if isinstance(obj, dict):
            for k in sorted(obj):
                v = obj[k]
                if isinstance(v, (dict, list)):
                    sys.stdout.write(f"{pad}{k}:\n")
                    walk(v, indent + 1)
                else:
                    sys.stdout.write(f"{pad}{k}: {v}\n")
        elif isinstance(obj, list):
            for v in obj:
                if isinstance(v, (dict, list)):
                    walk(v, indent + 1)
                else:
                    sys.stdout.write(f"{pad}- {v}\n")
    walk(payload)


def _load(path: str):
    """Load either a geometric model or a raw linear-system JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise SystemExitError(1, f"cannot read {path}: {err}")
    if "equations" in data:
        rows = [eq["coeffs"] for eq in data["equations"]]
        rhs = [eq.get("rhs", 0.0) for eq in data["equations"]]
        names = data.get("variables")
        return None, linear_system(rows, rhs, names)
    try:
        model = model_from_json_dict(data)
    except (KeyError, TypeError, ValueError) as err:
        raise SystemExitError(1, f"malformed model {path}: {err}")
    problems = validate(model)
    if problems:
        lines = "; ".join(f"{p.code}[{p.subject}]: {p.message}" for p in problems)
        raise SystemExitError(1, f"model {path} does not validate: {lines}")
    return model, compile_model(model)


class SystemExitError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _characterize(model: Model, system, cfg: RunConfig) -> dict:
    report = {}
    verdict = "well"
    if model is None:
        # raw equation system: witness analysis degenerates to a rank check at
        # a random assignment, structural analysis is not applicable
        rng = np.random.default_rng(cfg.seed)
        from .witness import characterize_at
        x = rng.uniform(-1.0, 1.0, size=system.n_variables)
        wr = characterize_at(system, x, 0)
        report["witness"] = wr.to_json_dict()
        return {"verdict": wr.verdict, "report": report}
    if cfg.mode in ("structural", "both"):
        _, cg = build_graphs(system, model)
        cv = counting_state(cg, model.dimension)
        report["structural"] = {
            "state": cv.state,
            "deficit": cv.deficit,
            "advisory": cv.advisory,
            "violatingSubgraph": list(cv.witness_subgraph) if cv.witness_subgraph else None,
        }
        verdict = cv.state
    if cfg.mode in ("witness", "both"):
        wr = characterize(system, model, seed=cfg.seed, votes=cfg.witnesses)
        report["witness"] = wr.to_json_dict()
        verdict = wr.verdict
    return {"verdict": verdict, "report": report}


def cmd_check(args, cfg: RunConfig) -> int:
    model, system = _load(args.model)
    out = _characterize(model, system, cfg)
    payload = {"command": "check", "model": args.model, **out}
    _emit(payload, cfg.fmt)
    return EXIT.get(out["verdict"], 6)


def cmd_detect(args, cfg: RunConfig) -> int:
    model, system = _load(args.model)
    if model is None:
        rng = np.random.default_rng(cfg.seed)
        x = rng.uniform(-1.0, 1.0, size=system.n_variables)
    else:
        wit = generate_witness(system.without_anchors(), model, seed=cfg.seed)
        x = wit.assignment
        system = system.without_anchors()
    greedy = greedy_dependency_groups(system, x, seed_row=args.seed_row)
    payload = {
        "command": "detect",
        "model": args.model,
        "greedy": detection_report(greedy, [], "greedy", cfg.seed),
    }
    try:
        oracle = oracle_min_dependent_sets(system, x)
        payload["oracle"] = detection_report(oracle, [], "oracle", cfg.seed)
    except CapExceeded as err:
        payload["oracle"] = {"skipped": str(err)}
    if model is not None:
        parts = greedy_well_parts(model, system, x, seed_entity=args.seed_entity)
        payload["greedy"]["wellParts"] = sorted(
            list(p.sorted_entities()) for p in parts)
        try:
            best = oracle_max_well_part(model, system, x)
            payload["oracle"]["maxWellPart"] = sorted(best.entities)
        except CapExceeded as err:
            payload["oracle"]["maxWellPart"] = f"skipped: {err}"
        wr = characterize(system, model, seed=cfg.seed, votes=cfg.witnesses)
        payload["freeMotions"] = wr.free_motions
        payload["verdict"] = wr.verdict
        ill = not greedy and wr.verdict == "well"
        payload["summary"] = ("no ill-constrained parts" if ill
                              else "ill-constrained parts listed")
    _emit(payload, cfg.fmt)
    return 0


def cmd_decompose(args, cfg: RunConfig) -> int:
    model, system = _load(args.model)
    if model is None:
        raise SystemExitError(1, "decompose needs a geometric model")
    wr = characterize(system, model, seed=cfg.seed, votes=cfg.witnesses)
    try:
        tree = bottom_up(model, seed=cfg.seed) if args.strategy == "bottom-up" \
            else top_down(model)
        payload = {
            "command": "decompose",
            "model": args.model,
            "strategy": args.strategy,
            "verdict": wr.verdict,
            "tree": tree.to_json_dict(),
        }
    except DecompositionError as err:
        payload = {
            "command": "decompose",
            "model": args.model,
            "strategy": args.strategy,
            "verdict": wr.verdict,
            "error": str(err),
        }
    if wr.verdict != "well":
        payload["advice"] = "model is not well-constrained; run detect first"
    _emit(payload, cfg.fmt)
    return EXIT.get(wr.verdict, 6)


def cmd_solve(args, cfg: RunConfig) -> int:
    model, system = _load(args.model)
    if model is None:
        raise SystemExitError(1, "solve needs a geometric model")
    try:
        start = assignment_from_params(model, system)
    except ValueError as err:
        raise SystemExitError(1, str(err))

    if args.strategy == "decomposed":
        try:
            tree = bottom_up(model, seed=cfg.seed)
            plan, solution, cert = solve_tree(model, tree)
        except DecompositionError as err:
            raise SystemExitError(4, f"decomposed solve failed: {err}")
        result = cert
        params = solution
    else:
        try:
            anchored = add_anchors(system, model)
        except AnchorError:
            anchored = system  # no frame to pin; least-squares steps cope
        result = newton_solve(anchored, start, max_iter=cfg.max_iter, tol=cfg.residual_tol)
        if not result.converged:
            result = optimize_solve(anchored, start, max_iter=cfg.max_iter,
                                    tol=cfg.residual_tol)
        params = params_from_assignment(model, anchored, result.assignment)

    payload = {
        "command": "solve",
        "model": args.model,
        "strategy": args.strategy,
        "status": result.status,
        "iterations": result.iterations,
        "residualMax": result.residual_norm,
        "entities": {k: list(v) for k, v in sorted(params.items())},
    }
    _emit(payload, cfg.fmt)
    if result.status == "converged":
        return 0
    if result.status == "inconsistent":
        return 4
    return 6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcs",
        description="Geometric constraint system characterization, detection, "
                    "decomposition and solving.")
    parser.add_argument("--tolerance", type=float, default=1e-9,
                        help="residual tolerance (default 1e-9)")
    parser.add_argument("--rank-tol", type=float, default=1e-8,
                        help="relative rank tolerance (default 1e-8)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--witnesses", type=int, default=3,
                        help="witness votes per characterization (default 3)")
    parser.add_argument("--mode", choices=["structural", "witness", "both"],
                        default="both")
    parser.add_argument("--format", choices=["text", "json"], default="text")
    parser.add_argument("--max-iter", type=int, default=100)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="characterize the constraint state")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("detect", help="locate over/under-constrained parts")
    p.add_argument("model")
    p.add_argument("--seed-row", type=int, default=0)
    p.add_argument("--seed-entity", default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("decompose", help="split a well-constrained model into clusters")
    p.add_argument("model")
    p.add_argument("--strategy", choices=["bottom-up", "top-down"], default="bottom-up")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("solve", help="solve and print entity parameters")
    p.add_argument("model")
    p.add_argument("--strategy", choices=["direct", "decomposed"], default="direct")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = args.seed
    if "GCS_SEED" in os.environ:
        try:
            seed = int(os.environ["GCS_SEED"])
        except ValueError:
            print("GCS_SEED must be an integer", file=sys.stderr)
            return 1
    try:
        cfg = RunConfig(
            residual_tol=args.tolerance,
            rank_tol=args.rank_tol,
            seed=seed,
            witnesses=args.witnesses,
            fmt=args.format,
            mode=args.mode,
            max_iter=args.max_iter,
        )
    except ValueError as err:
        print(str(err), file=sys.stderr)
        return 1
    try:
        return args.func(args, cfg)
    except SystemExitError as err:
        print(str(err), file=sys.stderr)
        return err.code


if __name__ == "__main__":
    sys.exit(main())
