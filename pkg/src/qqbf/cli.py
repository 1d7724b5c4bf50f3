"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 validation or verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import blocks, mesh, noise, pipeline
from .qubit import (
    Indeterminate,
    RiemannPoint,
    fidelity_pure,
    parse_point,
    point_to_json,
    result_to_json,
    sample_haar,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2

TABLE_ROWS = {
    "ProductThenAddition": [("1", "1", "0"), ("0", "0", "1"), ("1", "1", "1"),
                            ("0", "0", "0"), ("inf", "inf", "0")],
    "AdditionThenProduct": [("1", "0", "1"), ("0", "1", "1"), ("1", "1", "1"),
                            ("0", "0", "1"), ("inf", "0", "1")],
}


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _point(text: str):
    try:
        return parse_point(str(text))
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def _load_matrix(path: str) -> np.ndarray:
    obj = _load_json(path)
    if isinstance(obj, dict) and {"re", "im"} <= set(obj):
        return np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    if isinstance(obj, dict) and "matrix" in obj:
        obj = obj["matrix"]
    arr = np.array(obj, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise UsageError("matrix must be {re, im} arrays or nested [re, im] pairs")


def _overlap(args, photons: int) -> noise.OverlapSpec | None:
    if args.overlap:
        try:
            return noise.OverlapSpec.from_json(_load_json(args.overlap))
        except (KeyError, ValueError) as e:
            raise ValidationError(str(e)) from None
    if getattr(args, "c_i", None) is not None and photons == 2:
        return noise.OverlapSpec.two_photon(args.c_i)
    if photons == 3 and (args.c_same is not None or args.c_cross is not None):
        return noise.OverlapSpec.pairs(1.0 if args.c_same is None else args.c_same,
                                       1.0 if args.c_cross is None else args.c_cross)
    return None


# ---------------------------------------------------------------------------

def cmd_run_block(args) -> int:
    z1 = _point(args.z1)
    if args.kind == "inversion":
        out = blocks.inversion(z1)
        report = {"kind": "inversion", "inputs": [point_to_json(z1)],
                  "branches": [{"branch": "", "output": point_to_json(out),
                                "target": point_to_json(out), "probability": 1.0,
                                "fidelity": 1.0}]}
    else:
        if args.z2 is None:
            raise UsageError("--z2 is required for two-input blocks")
        z2 = _point(args.z2)
        phases = [float(x) for x in args.phases] if args.phases else [0.0] * 4
        if len(phases) != 4:
            raise UsageError("--phases takes four values")
        block = (blocks.product_unitary(*phases) if args.kind == "product"
                 else blocks.addition_unitary(*phases))
        outcomes = blocks.run_block(block, z1, z2)
        report = {"kind": args.kind, "phases": phases,
                  "inputs": [point_to_json(z1), point_to_json(z2)],
                  "branches": [blocks.outcome_to_json(o) for o in outcomes]}
    _emit(pipeline.dumps({"config": vars_config(args), **report}), args.output)
    return EXIT_OK


def cmd_characterize(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required")
    op = args.op
    if op not in pipeline.BLOCK_OPS and op not in mesh.PRESETS:
        raise UsageError(f"unknown operation {op!r}")
    shots = None if str(args.shots).lower() in ("inf", "none") else int(args.shots)
    spec = _overlap(args, pipeline.n_inputs(op))
    report = pipeline.characterize(op, args.samples, shots, spec, args.seed,
                                   args.accidental_rate, args.bins)
    report.config["command"] = vars_config(args)
    _emit(report.dumps(), args.output)
    return EXIT_OK


def cmd_compile(args) -> int:
    if args.preset:
        try:
            program = mesh.preset(args.preset).program
        except ValueError as e:
            raise UsageError(str(e)) from None
    elif args.unitary:
        U = _load_matrix(args.unitary)
        try:
            program = mesh.decompose(U, args.tol)
        except ValueError as e:
            raise ValidationError(str(e)) from None
    else:
        raise UsageError("give --unitary or --preset")
    _emit(pipeline.dumps(mesh.program_to_json(program)), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    report: dict = {"config": vars_config(args)}
    if args.preset:
        try:
            p = mesh.preset(args.preset)
        except ValueError as e:
            raise UsageError(str(e)) from None
        U = p.unitary()
        rt = mesh.round_trip_residual(U, mesh.decompose(U))
        rng = np.random.default_rng(args.seed or 0)
        worst = 0.0
        for _ in range(args.samples):
            zs = [sample_haar(rng) for _ in range(p.n_inputs)]
            for o in mesh.run_preset(p, zs):
                if isinstance(o.output, RiemannPoint) and not isinstance(o.target, Indeterminate):
                    worst = max(worst, 1 - fidelity_pure(o.output, o.target))
        report.update(preset=p.name, round_trip_residual=rt, worst_infidelity=worst)
        ok = rt < args.tol and worst < args.tol
    elif args.program:
        try:
            program = mesh.program_from_json(_load_json(args.program))
        except (KeyError, ValueError) as e:
            raise ValidationError(f"invalid program: {e}") from None
        V = mesh.compose(program)
        dev = float(np.max(np.abs(V @ V.conj().T - np.eye(6))))
        report.update(unitarity_residual=dev)
        ok = dev < args.tol
        if args.unitary:
            U = _load_matrix(args.unitary)
            res = mesh.round_trip_residual(U, program)
            report.update(residual=res)
            ok = ok and res < args.tol
    elif args.unitary:
        U = _load_matrix(args.unitary)
        try:
            program = mesh.decompose(U, args.tol)
        except ValueError as e:
            raise ValidationError(str(e)) from None
        res = mesh.round_trip_residual(U, program)
        report.update(residual=res)
        ok = res < args.tol
    else:
        raise UsageError("give --preset, --program or --unitary")
    report["passed"] = bool(ok)
    _emit(pipeline.dumps(report), args.output)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_sweep(args) -> int:
    rows = pipeline.sweep_critical(args.op, args.points, args.half_width)
    _emit(pipeline.sweep_to_csv(rows), args.output)
    return EXIT_OK


def cmd_noise_table(args) -> int:
    try:
        spec = (noise.OverlapSpec.from_json(_load_json(args.overlap)) if args.overlap
                else noise.OverlapSpec.pairs(args.c_same, args.c_cross))
    except (KeyError, ValueError) as e:
        raise ValidationError(f"invalid overlap: {e}") from None
    names = [args.preset] if args.preset else list(TABLE_ROWS)
    rows = []
    for name in names:
        p = mesh.preset(name)
        inputs = TABLE_ROWS.get(name) or [("1",) * p.n_inputs]
        for zs in inputs:
            pts = [_point(z) for z in zs]
            target = p.expected(p.branches[p.main], pts)
            fd = None if isinstance(target, Indeterminate) else noise.preset_fidelity(name, pts, spec)
            rows.append({"preset": name, "inputs": [point_to_json(z) for z in pts],
                         "branch": "".join(p.branches[p.main]),
                         "target": result_to_json(target), "F_D": fd})
    _emit(pipeline.dumps({"overlap": spec.to_json(), "rows": rows}), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------

def vars_config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qqbf", description="Photonic quantum-to-quantum Bernoulli factory simulator.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="JSON file whose keys override the flags")
        p.add_argument("--output", "-o", help="write the result here instead of stdout")
        p.set_defaults(func=func)
        return p

    p = add("run-block", cmd_run_block, "Simulate one building block on two input qubits.")
    p.add_argument("--kind", choices=["product", "addition", "inversion"], required=True)
    p.add_argument("--z1", required=True, help='complex literal such as "1+2i" or "inf"')
    p.add_argument("--z2")
    p.add_argument("--phases", nargs="*", help="four free phases of the block")

    p = add("characterize", cmd_characterize, "Haar-ensemble fidelity and success-rate study.")
    p.add_argument("--op", required=True,
                   help=f"one of {', '.join(pipeline.BLOCK_OPS)} or a preset name")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--shots", default="inf", help='events per sample or "inf" for exact')
    p.add_argument("--seed", type=int)
    p.add_argument("--overlap", help="OverlapSpec JSON file")
    p.add_argument("--c-i", dest="c_i", type=float, help="two-photon indistinguishability")
    p.add_argument("--c-same", dest="c_same", type=float)
    p.add_argument("--c-cross", dest="c_cross", type=float)
    p.add_argument("--accidental-rate", dest="accidental_rate", type=float, default=0.0)
    p.add_argument("--bins", type=int, default=20)

    p = add("compile", cmd_compile, "Decompose a 6x6 unitary (or emit a preset) as a mesh program.")
    p.add_argument("--unitary", help="JSON matrix file")
    p.add_argument("--preset")
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("verify", cmd_verify, "Check a program, a unitary round trip or a preset.")
    p.add_argument("--program")
    p.add_argument("--unitary")
    p.add_argument("--preset")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("sweep", cmd_sweep, "Success probability around a critical point as CSV.")
    p.add_argument("--op", choices=["product", "addition"], required=True)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--half-width", dest="half_width", type=float, default=2.0)

    p = add("noise-table", cmd_noise_table, "Three-photon fidelities under partial distinguishability.")
    p.add_argument("--preset")
    p.add_argument("--overlap")
    p.add_argument("--c-same", dest="c_same", type=float, default=1.0)
    p.add_argument("--c-cross", dest="c_cross", type=float, default=0.9)
    return ap


def _apply_config(parser, args):
    if not getattr(args, "config", None):
        return args
    cfg = _load_json(args.config)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    known = set(vars(args)) - {"func", "config", "command"}
    unknown = set(k.replace("-", "_") for k in cfg) - known
    if unknown:
        raise UsageError(f"unknown config fields: {sorted(unknown)}")
    for k, v in cfg.items():
        setattr(args, k.replace("-", "_"), v)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(parser, args)
        return args.func(args)
    except UsageError as e:
        print(f"qqbf: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"qqbf: validation failed: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
