"""
Command-line interface.

Exit codes: 0 success, 1 verification mismatch, 2 input error (bad model
file, state or arguments), 3 numerical failure.
"""
from __future__ import annotations

import argparse
import glob
import hashlib
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import asymptotic_project, coefficients, decompose, infinite_time_state
from .evolve import propagate, verification_horizon
from .liouvillian import Liouvillian, Model, spectrum
from .modelspec import ModelSpecError, load_model
from .models import CATALOG
from .operator_core import FOCK, basis_ket, coherent_ket
from .structure import (block_structure, check_conserved, check_strong_symmetry,
                        find_symmetry_generators)
from .validation import NumericalError, check_density_matrix

logger = logging.getLogger("lindbladkit")

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3
COHERENT_TAIL_MAX = 1e-12

CATALOG_DEFAULTS = {
    "dephasing": {},
    "two_qubit": {},
    "driven_two_qubit": {"omega": 1.0},
    "d_photon": {"d": 2, "dim": 20},
}
INTEGER_PARAMS = {"d", "dim"}


class InputError(ValueError):
    """Bad command-line input; maps to exit code 2."""


# ----------------------------------------------------------------------------
# output formatting


DISPLAY_CHOP = 1e-12


def fmt17(x: float) -> str:
    # adding 0.0 turns -0.0 into 0.0 so equal inputs give equal bytes
    return format(float(x) + 0.0, ".17g")


def fmt6(x: float) -> str:
    x = float(x)
    return format(0.0 if abs(x) < DISPLAY_CHOP else x, ".6g")


def _fmt_complex6(z) -> str:
    z = complex(z)
    im = 0.0 if abs(z.imag) < DISPLAY_CHOP else z.imag
    return f"{fmt6(z.real)}{'+' if im >= 0 else '-'}{fmt6(abs(im))}i"


def _to_json(obj, indent: int = 2, level: int = 0) -> str:
    """JSON with every float written at 17 significant digits."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_to_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_to_json(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _to_json(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite number {obj} in report")
        return fmt17(obj)
    return json.dumps(str(obj))


def _complex_pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _matrix_json(A) -> list:
    return [[_complex_pair(z) for z in row] for row in np.asarray(A)]


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# model and state resolution


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = int(v) if k.strip() in INTEGER_PARAMS else float(v)
        except ValueError:
            raise InputError(f"--param {k}: {v!r} is not a number") from None
    return out


def bundled_models() -> dict[str, Path]:
    root = resources.files("lindbladkit") / "data" / "models"
    return {Path(str(p)).stem: Path(str(p)) for p in root.iterdir() if str(p).endswith(".json")}


def resolve_model(spec: str, params: dict | None = None) -> Model:
    """Model from a file path, a catalog name or a bundled model name."""
    params = params or {}
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise InputError(f"model file {spec} does not exist")
        return load_model(path, params or None)
    if spec in CATALOG:
        kwargs = {**CATALOG_DEFAULTS[spec], **params}
        unknown = set(kwargs) - set(CATALOG_DEFAULTS[spec])
        if unknown:
            raise InputError(f"catalog model {spec} has no parameter(s) {', '.join(sorted(unknown))}")
        return CATALOG[spec](**kwargs).model
    bundled = bundled_models()
    if spec in bundled:
        return load_model(bundled[spec], params or None)
    names = sorted(set(CATALOG) | set(bundled))
    raise InputError(f"unknown model {spec!r}; give a file path or one of: {', '.join(names)}")


def model_hash(model: Model) -> str:
    h = hashlib.sha256()
    h.update(model.name.encode())
    h.update(repr(model.space.factors).encode())
    h.update(np.ascontiguousarray(model.hamiltonian).tobytes())
    for F in model.jumps:
        h.update(np.ascontiguousarray(F).tobytes())
    return h.hexdigest()


_KET_RE = re.compile(r"ket\(\s*([0-9,\s]+)\s*\)")
_COHERENT_RE = re.compile(r"coherent\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)")


def resolve_state(spec: str, model: Model) -> np.ndarray:
    """Density matrix from ``ket(...)``, ``coherent(re,im)`` or a ``.npy``/``.json`` file."""
    space = model.space
    m = _KET_RE.fullmatch(spec.strip())
    if m:
        body = m.group(1).replace(" ", "")
        labels = [int(x) for x in body.split(",")] if "," in body else [int(c) for c in body]
        if len(labels) != len(space):
            raise InputError(f"ket has {len(labels)} labels but the model has {len(space)} spaces")
        try:
            psi = basis_ket(labels, space)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        return np.outer(psi, psi.conj())
    m = _COHERENT_RE.fullmatch(spec.strip())
    if m:
        if len(space) != 1 or space.factors[0][0] != FOCK:
            raise InputError("coherent states need a model with a single fock space")
        try:
            alpha = complex(float(m.group(1)), float(m.group(2)))
        except ValueError:
            raise InputError(f"coherent amplitude in {spec!r} is not numeric") from None
        psi, tail = coherent_ket(alpha, space.dim)
        if tail > COHERENT_TAIL_MAX:
            raise InputError(f"fock truncation {space.dim} drops {tail:.3g} of the coherent state; "
                             f"increase dim (about |alpha|^2 + 10|alpha| + 20)")
        return np.outer(psi, psi.conj())
    path = Path(spec)
    if path.exists():
        if path.suffix == ".npy":
            rho = np.load(path)
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
            rho = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data.get("imag", 0.0))
        try:
            return check_density_matrix(rho, model.dim, hermitian_tol=1e-10, trace_tol=1e-10,
                                        psd_tol=1e-10, name=f"state {spec}")
        except ValueError as exc:
            raise InputError(str(exc)) from None
    raise InputError(f"invalid state {spec!r}; use ket(...), coherent(re,im) or a matrix file")


def default_margin(model: Model) -> int:
    """Twice the largest ladder offset of any jump on a fock model, else 0."""
    if not any(kind == FOCK for kind, _ in model.space.factors):
        return 0
    reach = 0
    for F in model.jumps:
        r, c = np.nonzero(np.abs(F) > 0)
        if r.size:
            reach = max(reach, int(np.max(np.abs(c - r))))
    return 2 * reach


# ----------------------------------------------------------------------------
# commands


def analyze_model(model: Model, tol: float, seed: int) -> dict:
    L = Liouvillian(model)
    spec = spectrum(L, vectors=False, tol_real=L.zero_tol(tol))
    dec = decompose(L, tol=tol, spectrum=spec)
    bs = block_structure(dec, L, seed=seed)
    report = {
        "model": model.name,
        "hash": model_hash(model),
        "dimension": model.dim,
        "steady_dimension": dec.dim,
        "gap": dec.gap if math.isfinite(dec.gap) else None,
        "gap_note": "" if math.isfinite(dec.gap) else "no decaying modes",
        "eigenvalues": [_complex_pair(z) for z in spec.eigenvalues],
        "rotating_frequencies": [m.frequency for m in dec.rotating],
        "blocks": [
            {"kappa": k, "n": b.n, "m": b.m, "energies": [float(e) for e in E],
             "T": _matrix_json(b.T)}
            for k, (b, E) in enumerate(zip(bs.blocks, bs.energies))
        ],
        "support_dimension": bs.support_dim,
        "residuals": {
            "block_reconstruction": {"value": bs.residual, "tolerance": 1e-8},
        },
        "tolerances": {"null_space": tol, "zero_eigenvalue": dec.tol_zero, "probe_seed": bs.seed},
    }
    return report


def _analyze_path(args):
    spec, params, tol, seed = args
    return analyze_model(resolve_model(spec, params), tol, seed)


def cmd_analyze(args) -> int:
    params = _parse_params(args.param)
    if args.models:
        paths = sorted(glob.glob(args.models))
        if not paths:
            raise InputError(f"no model files match {args.models!r}")
        jobs = [(p, params, args.tol, args.seed) for p in paths]
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            reports = list(pool.map(_analyze_path, jobs))
        _emit(_to_json(reports) + "\n", args.out)
        return EXIT_OK
    if not args.model:
        raise InputError("analyze needs a model or --models")
    report = analyze_model(resolve_model(args.model, params), args.tol, args.seed)
    _emit(_to_json(report) + "\n", args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    model = resolve_model(args.model, _parse_params(args.param))
    L = Liouvillian(model)
    s = spectrum(L, vectors=False, tol_real=L.zero_tol(args.tol))
    lines = ["re,im"] + [f"{fmt17(z.real)},{fmt17(z.imag)}" for z in s.eigenvalues]
    _emit("\n".join(lines) + "\n", args.csv)
    return EXIT_OK


def _matrix_lines(A, indent="  ") -> list[str]:
    out = []
    for row in np.asarray(A):
        out.append(indent + "  ".join(f"{_fmt_complex6(z):>22}" for z in row))
    return out


def cmd_predict(args) -> int:
    model = resolve_model(args.model, _parse_params(args.param))
    rho = resolve_state(args.state, model)
    L = Liouvillian(model)
    dec = decompose(L, tol=args.tol)
    if args.time is None:
        out = asymptotic_project(dec, rho)
    else:
        out = infinite_time_state(dec, rho, args.time)
    c = coefficients(dec, rho)
    if args.format == "json":
        report = {"model": model.name, "hash": model_hash(model), "state": args.state,
                  "time": args.time, "rho": _matrix_json(out),
                  "coefficients": [_complex_pair(z) for z in c]}
        _emit(_to_json(report) + "\n", args.out)
        return EXIT_OK
    title = "rho_inf(t={})".format(fmt6(args.time)) if args.time is not None else "rho_ss"
    lines = [f"model {model.name}  steady dimension {dec.dim}", f"{title}:"]
    lines += _matrix_lines(out)
    lines.append("coefficients Tr{J_mu^dag rho_in}:")
    lines += [f"  {k:3d}  {_fmt_complex6(z)}" for k, z in enumerate(c)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    model = resolve_model(args.model, _parse_params(args.param))
    rho = resolve_state(args.state, model)
    L = Liouvillian(model)
    dec = decompose(L, tol=args.zero_tol)
    predicted = asymptotic_project(dec, rho)
    t_final = args.t_final
    if t_final is None:
        t_final = verification_horizon(dec.gap)
        if t_final is None:
            print("no decaying modes (infinite gap); propagation check skipped")
            return EXIT_OK
    if dec.rotating:
        predicted = infinite_time_state(dec, rho, t_final)
    evolved = propagate(L, rho, t_final)
    residual = float(np.max(np.abs(predicted - evolved)))
    print(f"model {model.name}  t_final {fmt6(t_final)}  gap {fmt6(dec.gap)}")
    print("asymptotic projection:")
    print("\n".join(_matrix_lines(predicted)))
    print("propagated state:")
    print("\n".join(_matrix_lines(evolved)))
    ok = residual < args.tol
    print(f"residual {fmt17(residual)} {'<' if ok else '>='} tolerance {fmt17(args.tol)}")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_structure(args) -> int:
    model = resolve_model(args.model, _parse_params(args.param))
    L = Liouvillian(model)
    dec = decompose(L, tol=args.tol)
    bs = block_structure(dec, L, seed=args.seed)
    lines = [f"model {model.name}  steady dimension {dec.dim}  support {bs.support_dim}",
             f"{'kappa':>5}  {'n':>3}  {'m':>3}  energies"]
    for k, (b, E) in enumerate(zip(bs.blocks, bs.energies)):
        lines.append(f"{k:>5}  {b.n:>3}  {b.m:>3}  " + " ".join(fmt6(e) for e in E))
    for k, b in enumerate(bs.blocks):
        lines.append(f"T[{k}] ({b.m}x{b.m}):")
        lines += _matrix_lines(b.T)
    lines.append(f"capacity sum n^2 = {bs.capacity}  reconstruction residual {fmt6(bs.residual)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _describe(A: np.ndarray) -> str:
    terms = []
    n = A.shape[0]
    for i in range(n):
        for j in range(n):
            z = A[i, j]
            if abs(z) > 1e-9:
                terms.append(f"({_fmt_complex6(z)})|{i}><{j}|")
    return " + ".join(terms) if terms else "0"


def cmd_symmetries(args) -> int:
    model = resolve_model(args.model, _parse_params(args.param))
    L = Liouvillian(model)
    gens = find_symmetry_generators(L, tol=args.tol)
    margin = default_margin(model) if args.interior_margin is None else args.interior_margin
    lines = [f"model {model.name}  {len(gens)} weak-symmetry generators (interior margin {margin})",
             f"{'k':>3}  {'strong':>6}  {'conserved':>9}  operator"]
    for k, A in enumerate(gens):
        strong = check_strong_symmetry(A, model)
        cons = check_conserved(A, model, interior_margin=margin)
        lines.append(f"{k:>3}  {str(strong):>6}  {str(cons):>9}  {_describe(A)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lindbladkit",
        description="Infinite-time states and conserved quantities of Lindblad models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol_flag=True):
        sp.add_argument("model", nargs="?" if sp.prog.endswith("analyze") else None,
                        help="model file (.json), catalog name or bundled model name")
        sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="override a model parameter (repeatable)")
        if tol_flag:
            sp.add_argument("--tol", type=float, default=1e-9,
                            help="relative zero threshold for null spaces and eigenvalues (default 1e-9)")
        sp.add_argument("--out", help="write output to this file instead of stdout")

    sp = sub.add_parser("analyze", help="full report: spectrum, steady space, blocks")
    common(sp)
    sp.add_argument("--seed", type=int, default=0, help="block-discovery probe seed (default 0)")
    sp.add_argument("--models", help="glob of model files to analyze in parallel")
    sp.add_argument("--workers", type=int, default=None, help="parallel workers for --models")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("spectrum", help="eigenvalues as CSV (re,im)")
    common(sp)
    sp.add_argument("--csv", help="CSV output file (default stdout)")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("predict", help="infinite-time state of an initial state")
    common(sp)
    sp.add_argument("--state", required=True,
                    help="ket(0101), coherent(re,im) or a .npy/.json matrix file")
    sp.add_argument("--time", type=float, default=None,
                    help="evaluate the limit cycle at this time (rotating coherences)")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("verify", help="compare the asymptotic projection with propagation")
    common(sp, tol_flag=False)
    sp.add_argument("--state", required=True, help="initial state, as for predict")
    sp.add_argument("--t-final", type=float, default=None,
                    help="propagation time (default 30 / gap)")
    sp.add_argument("--tol", type=float, default=1e-6,
                    help="maximum allowed entrywise mismatch (default 1e-6)")
    sp.add_argument("--zero-tol", type=float, default=1e-9,
                    help="relative zero threshold for null spaces (default 1e-9)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("structure", help="block table and factor states")
    common(sp)
    sp.add_argument("--seed", type=int, default=0, help="block-discovery probe seed (default 0)")
    sp.set_defaults(func=cmd_structure)

    sp = sub.add_parser("symmetries", help="weak-symmetry generators with strong/conserved flags")
    common(sp)
    sp.add_argument("--interior-margin", type=int, default=None,
                    help="top fock levels excluded from conservation checks "
                         "(default twice the jump reach, i.e. 2d for a^d)")
    sp.set_defaults(func=cmd_symmetries)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ModelSpecError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
