"""Command-line scenario runner.

Exit codes: 0 success, 1 validation failure, 2 usage / parse / configuration
error.  Outputs are CSV and JSON only; every file is written to a temporary
name and renamed into place once all results are computed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

from . import __version__
from .bench import (
    BenchDocument,
    BenchParseError,
    default_bench_text,
    parse_bench,
    parse_length,
    render_bench,
    render_element,
)
from .elements import fourier_grid
from .errors import OpticsError
from .field import GridSpec, fidelity, field_csv_text, normalize
from .interferometer import phase_sweep, run_interferometer, sweep_phases
from .validation import run_validation
from .wigner import field_support, negativity_metrics, wigner_compare, wigner_transform

ENV_OUT = "XPCOMM_OUT"
DEFAULT_OUT = "xpcomm_out"
DEFAULT_PHASES = 64
COMMUTATOR_FIDELITY = 0.9999
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_outputs(out_dir: Path, files: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        _write_atomic(out_dir / name, text)


def _json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _load(args) -> tuple[BenchDocument, str]:
    if args.bench is None:
        text, source = default_bench_text(), "builtin:paper_default.bench"
    else:
        path = Path(args.bench)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise UsageError(f"cannot read bench file {args.bench}: {exc}") from None
        source = str(path)
    try:
        doc = parse_bench(text)
    except BenchParseError as exc:
        raise UsageError(f"{source}: invalid bench description\n" + "\n".join(
            f"{source}:{d}" for d in exc.diagnostics
        )) from None
    n = doc.grid.n_points if args.grid_n is None else args.grid_n
    he = doc.grid.half_extent
    if args.grid_half_extent is not None:
        try:
            he = parse_length(args.grid_half_extent)
        except BenchParseError as exc:
            raise UsageError(f"--grid-half-extent: {exc}") from None
    try:
        grid = GridSpec(n, he)
    except OpticsError as exc:
        raise UsageError(f"invalid grid override: {exc}") from None
    return dataclasses.replace(doc, grid=grid), source


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(ENV_OUT) or DEFAULT_OUT)


def _grid_dict(grid: GridSpec) -> dict:
    return {"n_points": grid.n_points, "half_extent_m": grid.half_extent, "spacing_m": grid.spacing}


def _manifest(doc: BenchDocument, source: str, command: str, phase: float) -> dict:
    p = doc.params
    return {
        "tool": "xpcomm",
        "version": __version__,
        "command": command,
        "bench": source,
        "params": {
            "lambda_m": p.lambda_,
            "f_m": p.f,
            "l_m": p.l,
            "w_m": doc.input_spec.w,
            "hbar_Js": p.hbar,
        },
        "C": p.C,
        "phase_rad": phase,
        "input": {"kind": doc.input_spec.kind, "w_m": doc.input_spec.w},
        "grid": _grid_dict(doc.grid),
        "fourier_grid": _grid_dict(fourier_grid(doc.grid, p.lambda_, p.f)),
        "arms": {name: [render_element(e) for e in arm] for name, arm in doc.arms.items()},
    }


def _run_captured(fn, *args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = fn(*args)
    messages = list(dict.fromkeys(str(w.message) for w in caught))
    return result, messages


def _safe_fidelity(a, b):
    try:
        return fidelity(a, b)
    except OpticsError:
        return None


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    doc, source = _load(args)
    psi = doc.input_field()
    spec = doc.to_interferometer()
    ports, clips = _run_captured(run_interferometer, psi, spec)
    fids = {"d1": _safe_fidelity(ports.d1, psi), "d2": _safe_fidelity(ports.d2, psi)}
    commutator_port = next((k for k, v in fids.items() if v is not None and v >= COMMUTATOR_FIDELITY), None)
    manifest = _manifest(doc, source, "simulate", doc.phase)
    manifest.update(
        raw_probabilities={"d1": ports.raw_probabilities[0], "d2": ports.raw_probabilities[1]},
        fidelity_with_input=fids,
        commutator_port=commutator_port,
        clipping_warnings=clips,
        outputs=["d1.csv", "d2.csv", "manifest.json"],
    )
    _write_outputs(_out_dir(args), {
        "d1.csv": field_csv_text(ports.d1),
        "d2.csv": field_csv_text(ports.d2),
        "manifest.json": _json(manifest),
    })
    print(f"C = {doc.params.C:.8g}; port probabilities d1 = {ports.raw_probabilities[0]:.6g}, "
          f"d2 = {ports.raw_probabilities[1]:.6g}; commutator port: {commutator_port}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc, source = _load(args)
    phases = sweep_phases(args.phases if args.phases is not None else DEFAULT_PHASES)
    psi = doc.input_field()
    pmap, clips = _run_captured(phase_sweep, psi, doc.to_interferometer(), phases)
    manifest = _manifest(doc, source, "sweep", None)
    manifest.update(
        phases_rad=phases.tolist(),
        clipping_warnings=clips,
        outputs=["probability_map.csv", "probability_map.json", "sweep_manifest.json"],
    )
    _write_outputs(_out_dir(args), {
        "probability_map.csv": pmap.to_csv(),
        "probability_map.json": pmap.to_json(),
        "sweep_manifest.json": _json(manifest),
    })
    print(f"wrote {len(phases)} x {psi.grid.n_points} probability map")
    return EXIT_OK


def cmd_wigner(args) -> int:
    doc, source = _load(args)
    psi = doc.input_field()
    spec = doc.to_interferometer().with_phase(math.pi)
    ports, clips = _run_captured(run_interferometer, psi, spec)
    fields = {
        "input": normalize(psi),
        "commutator": normalize(ports.d1),
        "anticommutator": normalize(ports.d2),
    }
    maps = {name: wigner_transform(f) for name, f in fields.items()}
    metrics = {name: negativity_metrics(m).as_dict() for name, m in maps.items()}
    compare = {
        "commutator_vs_input": wigner_compare(maps["input"], maps["commutator"]),
        "anticommutator_vs_input": wigner_compare(maps["input"], maps["anticommutator"]),
    }
    windows = [field_support(f) for f in fields.values()]
    x_max = max(w[0] for w in windows)
    k_max = max(w[1] for w in windows)
    files = {}
    for name, m in maps.items():
        c = m.cropped(x_max, k_max)
        files[f"wigner_{name}.json"] = c.to_json()
        files[f"wigner_{name}.csv"] = c.to_csv()
    manifest = _manifest(doc, source, "wigner", math.pi)
    manifest.update(
        metrics=metrics,
        wigner_compare=compare,
        crop_window={"x_max_m": x_max, "k_max_radpm": k_max},
        clipping_warnings=clips,
        convention="W(x,k) = (1/pi) * integral conj(psi(x+y)) psi(x-y) exp(2iky) dy, k = p/hbar",
    )
    files["wigner_metrics.json"] = _json(manifest)
    _write_outputs(_out_dir(args), files)
    for name, m in metrics.items():
        print(f"{name:<15} min W = {m['min_value']:.4g}  max W = {m['max_value']:.4g}  "
              f"negative volume = {m['negative_volume']:.3g}")
    return EXIT_OK


def cmd_validate(args) -> int:
    doc, source = _load(args)
    results = run_validation(doc.params, doc.to_interferometer(), doc.grid)
    for r in results:
        print(r.line())
    passed = all(r.passed for r in results)
    report = _manifest(doc, source, "validate", doc.phase)
    report.update(checks=[r.as_dict() for r in results], passed=passed)
    _write_outputs(_out_dir(args), {"validate_report.json": _json(report)})
    print("all checks passed" if passed else "validation FAILED")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_parse_check(args) -> int:
    doc, source = _load(args)
    if args.render:
        sys.stdout.write(render_bench(doc))
    else:
        print(f"{source}: ok (C = {doc.params.C:.8g}, grid {doc.grid.n_points} x {doc.grid.spacing:.6g} m)")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "wigner": cmd_wigner,
    "validate": cmd_validate,
    "parse-check": cmd_parse_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bench", metavar="PATH", help="bench description (default: the built-in paper_default.bench)")
    common.add_argument("--out", metavar="DIR", help=f"output directory (default: ${ENV_OUT} or ./{DEFAULT_OUT})")
    common.add_argument("--grid-n", type=int, metavar="INT", help="override grid point count (power of two)")
    common.add_argument("--grid-half-extent", metavar="LEN", help="override grid half extent, e.g. 6mm")
    common.add_argument("--phases", type=int, metavar="INT", help=f"phase sweep resolution (default {DEFAULT_PHASES})")

    parser = argparse.ArgumentParser(
        prog="xpcomm",
        description="Simulate the Mach-Zehnder test of position/momentum non-commutativity.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the interferometer once, write port fields")
    sub.add_parser("sweep", parents=[common], help="detection probability at D1 versus phase and x")
    sub.add_parser("wigner", parents=[common], help="Wigner maps of input, commutator and anti-commutator ports")
    sub.add_parser("validate", parents=[common], help="run the closed-form oracle suite")
    pc = sub.add_parser("parse-check", parents=[common], help="parse a bench file and report diagnostics")
    pc.add_argument("--render", action="store_true", help="print the canonical form of the bench")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.phases is not None and args.phases < 2:
        print("xpcomm: error: --phases must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"xpcomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OpticsError as exc:
        print(f"xpcomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
