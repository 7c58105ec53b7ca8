"""Command line front end: ``phasekit phase-dist | homodyne | verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

import argparse
import csv
import io
import json
import os
import re
import sys
import tempfile

import numpy as np

from . import couplings, homodyne, phase, phasespace, verify
from .config import RunConfig
from .errors import ConfigError, PhasekitError, SpecParseError
from .fock import FockVector, make_state
from .quadrature import AnglePartition, radial_grid

SCHEMA_VERSION = 1

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX = re.compile(rf"^(?P<re>[+-]?{_NUM})?(?:(?P<sign>[+-])(?P<im>{_NUM})?i)?$|^(?P<pim>[+-]?{_NUM})i$")


def parse_complex(text, offset=0, full=None):
    """``re+imi`` with optional sign, a bare real, or a bare imaginary ``bi``."""
    full = text if full is None else full
    t = text.strip()
    m = _COMPLEX.match(t)
    if not t or m is None:
        raise SpecParseError("expected a complex number like 1.5-0.5i", full, offset)
    if m.group("pim") is not None:
        return complex(0.0, float(m.group("pim")))
    if m.group("re") is None and m.group("sign") is None:
        raise SpecParseError("expected a complex number like 1.5-0.5i", full, offset)
    real = float(m.group("re")) if m.group("re") else 0.0
    imag = 0.0
    if m.group("sign"):
        imag = float(m.group("im") or 1.0) * (-1.0 if m.group("sign") == "-" else 1.0)
    return complex(real, imag)


def _parse_int(text, offset, full):
    if not re.fullmatch(r"\d+", text.strip()):
        raise SpecParseError("expected a non-negative integer", full, offset)
    return int(text)


def parse_state(text, dim):
    """State grammar: ``number:n | coherent:z | pair:z | tmpc:q,z | monomial:n`` (``vacuum`` = ``number:0``)."""
    if text.strip() == "vacuum":
        return make_state("number", 0, dim=dim)
    kind, sep, arg = text.partition(":")
    if not sep:
        raise SpecParseError("missing ':' after the state kind", text, len(text))
    at = len(kind) + 1
    if kind == "number":
        return make_state("number", _parse_int(arg, at, text), dim=dim)
    if kind == "monomial":
        return make_state("monomial", _parse_int(arg, at, text), dim=dim)
    if kind == "coherent":
        return make_state("coherent", parse_complex(arg, at, text), dim=dim)
    if kind == "pair":
        return make_state("pair_coherent", parse_complex(arg, at, text), dim=dim)
    if kind == "tmpc":
        q, comma, z = arg.partition(",")
        if not comma:
            raise SpecParseError("tmpc needs 'q,alpha'", text, at + len(arg))
        return make_state("two_mode_phase_coherent", _parse_int(q, at, text), parse_complex(z, at + len(q) + 1, text), dim=dim)
    raise SpecParseError(f"unknown state kind {kind!r}", text, 0)


def parse_observable(text, cfg):
    """Observable grammar: ``canonical | file:path | F:k | G:k | dirac:x0``; returns a PhaseMatrix."""
    d = cfg.dim
    if text == "canonical":
        return phase.PhaseMatrix.canonical(d)
    kind, sep, arg = text.partition(":")
    if not sep:
        raise SpecParseError(f"unknown observable {text!r}", text, 0)
    at = len(kind) + 1
    if kind == "file":
        try:
            mat = np.load(arg) if arg.endswith(".npy") else np.loadtxt(arg, dtype=complex)
        except OSError as exc:
            raise SpecParseError(f"cannot read phase matrix: {exc}", text, at) from None
        return phase.PhaseMatrix(np.atleast_2d(mat))
    if kind in ("F", "G"):
        k = _parse_int(arg, at, text)
        if k >= d:
            raise SpecParseError(f"index {k} must be below the dimension {d}", text, at)
        grid = radial_grid(cfg.quad)
        builder = phasespace.profile_F if kind == "F" else phasespace.profile_G
        return phasespace.margins(builder(k, grid, d)).phase_matrix
    if kind == "dirac":
        try:
            x0 = float(arg)
        except ValueError:
            raise SpecParseError("expected a positive number", text, at) from None
        return phasespace.margins(phasespace.profile_dirac(x0, phase.PhaseMatrix.canonical(d))).phase_matrix
    raise SpecParseError(f"unknown observable kind {kind!r}", text, 0)


# --- output --------------------------------------------------------------------


def _fmt(v):
    return repr(float(v))


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".phasekit-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text, out):
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _rows_csv(partition, prob, residual=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["theta_lo", "theta_hi", "prob"] + (["residual"] if residual is not None else [])
    w.writerow(head)
    for j, (lo, hi) in enumerate(partition.intervals()):
        row = [_fmt(lo), _fmt(hi), _fmt(prob[j])]
        if residual is not None:
            row.append(_fmt(residual[j]))
        w.writerow(row)
    return buf.getvalue()


def _rows_json(partition, prob, residual=None):
    rows = []
    for j, (lo, hi) in enumerate(partition.intervals()):
        row = {"theta_lo": float(lo), "theta_hi": float(hi), "prob": float(prob[j])}
        if residual is not None:
            row["residual"] = float(residual[j])
        rows.append(row)
    return rows


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _manifest(command, cfg, inputs, prob, extra=None):
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.echo(),
        "inputs": inputs,
        "normalization_residual": float(1.0 - np.sum(prob)),
    }
    out.update(extra or {})
    return out


def _sidecar(out, name):
    stem = out[:-4] if out.endswith(".csv") else out
    return f"{stem}.{name}"


# --- commands ------------------------------------------------------------------


def _single_mode_density(state):
    if isinstance(state, FockVector):
        return state.density()
    return None


def cmd_phase_dist(args, cfg):
    state = parse_state(args.state, cfg.dim)
    part = AnglePartition.uniform(cfg.bins)
    rho = _single_mode_density(state)
    if rho is None:
        # two-mode input: canonical phase of the number difference, via V
        if args.observable != "canonical":
            raise ConfigError("two-mode states only support the canonical observable")
        cfg.require_coupling_order()
        grid = radial_grid(cfg.quad)
        prob = couplings.mixture_bin_mass(state.amp[None], [1.0], couplings.V_KERNEL, grid, part).sum(axis=0)
        C = None
    else:
        C = parse_observable(args.observable, cfg)
        if C.dim != cfg.dim:
            raise ConfigError(f"phase matrix dimension {C.dim} differs from --dim {cfg.dim}")
        prob = phase.phase_distribution(rho, C, part)
    inputs = {"state": args.state, "observable": args.observable, "leakage": float(state.leakage)}
    extra = {}
    if C is not None:
        extra["circular_variance"] = phase.circular_variance(rho, C)
    manifest = _manifest("phase-dist", cfg, inputs, prob, extra)
    _write_distribution(args.out, cfg, part, prob, None, manifest)
    return 0


def _write_distribution(out, cfg, part, prob, residual, manifest, extra_tables=None):
    if cfg.fmt == "json":
        doc = dict(manifest)
        doc["rows"] = _rows_json(part, prob, residual)
        doc.update(extra_tables or {})
        _emit(_dump(doc), out)
        return
    _emit(_rows_csv(part, prob, residual), out)
    if out:
        _atomic_write(_sidecar(out, "manifest.json"), _dump(manifest))


def _joint_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "theta_lo", "theta_hi", "mass", "density"])
    dens = table.density
    for q, x in enumerate(table.grid.nodes):
        for j, (lo, hi) in enumerate(table.partition.intervals()):
            w.writerow([_fmt(x), _fmt(lo), _fmt(hi), _fmt(table.mass[q, j]), _fmt(dens[q, j])])
    return buf.getvalue()


def cmd_homodyne(args, cfg):
    cfg.require_coupling_order()
    signal = parse_state(args.signal, cfg.dim)
    param = parse_state(args.param, cfg.dim)
    if not isinstance(signal, FockVector) or not isinstance(param, FockVector):
        raise ConfigError("homodyne takes single-mode signal and parameter states")
    rho = signal.density()
    sigma = param.density()
    grid = radial_grid(cfg.quad)
    part = AnglePartition.uniform(cfg.bins)
    inputs = {"signal": args.signal, "param": args.param, "modified": bool(args.modified)}
    if args.modified:
        if np.max(np.abs(sigma.mat - np.diag(np.eye(cfg.dim)[0]))) > 1e-12:
            raise ConfigError("the modified scheme feeds the ancilla with the vacuum; use 'vacuum' as the parameter state")
        res = homodyne.modified_scheme_phase_dist(rho, grid, part)
        prob, residual = res.via_w, res.residual
        extra = {
            "max_residual": res.max_residual,
            "residual_tolerance": cfg.tol("modified"),
            "w_dropped_weight": res.dropped_weight,
        }
        if res.max_residual > cfg.tol("modified"):
            print(f"warning: modified-scheme residual {res.max_residual:.3e} exceeds {cfg.tol('modified'):.1e}; "
                  f"W truncation drops {res.dropped_weight:.3e} of the norm", file=sys.stderr)
        manifest = _manifest("homodyne", cfg, inputs, prob, extra)
        _write_distribution(args.out, cfg, part, prob, residual, manifest)
        return 0
    table = homodyne.double_homodyne_dist(rho, sigma, grid, part, allow_nondiagonal=args.allow_nondiagonal)
    prob = table.angle_marginal()
    manifest = _manifest("homodyne", cfg, inputs, prob, {"total_mass": table.total})
    if cfg.fmt == "json":
        joint = {"joint": {"x": table.grid.nodes.tolist(), "mass": table.mass.tolist(), "density": table.density.tolist()}}
        _write_distribution(args.out, cfg, part, prob, None, manifest, joint)
    else:
        _write_distribution(args.out, cfg, part, prob, None, manifest)
        if args.out:
            _atomic_write(_sidecar(args.out, "joint.csv"), _joint_csv(table))
    return 0


def cmd_verify(args, cfg):
    checks, report, timings = verify.run_suites(args.suite, cfg)
    for c in checks:
        print(c.line())
    for name, secs in timings.items():
        print(f"suite {name}: {secs:.1f} s", file=sys.stderr)
    print("verification " + ("passed" if report["passed"] else "FAILED"))
    if args.out:
        _atomic_write(args.out, _dump(report))
    return 0 if report["passed"] else 1


# --- entry point ---------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=32, help="Fock truncation dimension d")
    common.add_argument("--quad", type=int, default=64, help="radial quadrature order Q")
    common.add_argument("--bins", type=int, default=64, help="number of angle bins K")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path (stdout when omitted)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("--tol-override", action="append", default=[], metavar="KEY=VAL")

    parser = argparse.ArgumentParser(prog="phasekit", description="Covariant phase observables on a truncated Fock space.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase-dist", parents=[common], help="binned phase distribution of a state")
    p.add_argument("state", help="number:n | coherent:re+imi | pair:re+imi | tmpc:q,re+imi | monomial:n")
    p.add_argument("observable", nargs="?", default="canonical", help="canonical | file:path | F:k | G:k | dirac:x0")
    p.set_defaults(func=cmd_phase_dist)

    h = sub.add_parser("homodyne", parents=[common], help="double homodyne joint distribution and angle marginal")
    h.add_argument("signal")
    h.add_argument("param", nargs="?", default="vacuum")
    h.add_argument("--modified", action="store_true", help="entangle with a vacuum ancilla through W first")
    h.add_argument("--allow-nondiagonal", action="store_true", help="accept parameter states with number coherences")
    h.set_defaults(func=cmd_homodyne)

    v = sub.add_parser("verify", parents=[common], help="run invariant suites")
    v.add_argument("suite", choices=verify.SUITES + ("all",))
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(args.dim, args.quad, args.bins, args.seed, args.fmt).with_overrides(args.tol_override)
        return args.func(args, cfg)
    except PhasekitError as exc:
        print(f"phasekit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
