"""Command-line front end: ``eqmatch {gen,match,tail,verify,events}``.

Exit status: 0 success, 1 a verification check failed, 2 invalid arguments,
3 the generated region is too small to decide a quantity.  Options may also be
read from a ``key=value`` file given with ``--config``; command-line flags win.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .clumping import (build_hierarchy, compute_edge_cutlevels, default_k_max, k_max_for_margin,
                       torus_k_max, truncation_bias)
from .errors import (ArgumentError, DegenerateSampleError, EqMatchError, UndecidableError,
                     UnsupportedGeometryError)
from .events import event_frequencies, theoretical_bound
from .lattice import Torus, Window, generate_configuration, read_configuration, translate_configuration, write_configuration
from .matching import build_matching
from .meshalkin import meshalkin_lift
from .tails import check_domination, estimate_tail, fit_exponent, parse_radii
from ._trials import trial_seed

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNDECIDABLE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _sides(text: str, d: int):
    vals = [int(v) for v in str(text).split(",") if v.strip()]
    if len(vals) == 1:
        vals = vals * d
    if len(vals) != d or min(vals) < 1:
        raise ArgumentError(f"--side needs 1 or {d} positive integers, got {text!r}")
    return tuple(vals)


def _ints(text) -> List[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text)
    if ".." in text:
        a, b = (int(v) for v in text.split(".."))
        return list(range(a, b + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _formats(text: str) -> List[str]:
    out = [f.strip() for f in str(text).split(",") if f.strip()]
    bad = [f for f in out if f not in ("csv", "json", "svg")]
    if bad:
        raise ArgumentError(f"unknown format(s) {bad}; choose from csv, json, svg")
    return out


def _spec(args) -> dict:
    skip = {"func", "config", "command"}
    spec = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"command": args.command, "spec": spec, "version": __version__}


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, body: str, args):
    header = "# " + json.dumps(_spec(args), sort_keys=True) + "\n"
    path.write_text(header + body)


def _k_max(args, d: int, sides, geometry: str) -> Optional[int]:
    if args.kmax is not None and args.margin is not None:
        raise ArgumentError("give at most one of --kmax and --margin")
    if args.kmax is not None:
        return int(args.kmax)
    if args.margin is not None:
        return k_max_for_margin(int(args.margin), d)
    if geometry == "torus":
        return torus_k_max(sides, d)
    return default_k_max(d, max(sides) / 2)


def _configuration(args):
    if getattr(args, "input", None):
        return read_configuration(args.input)
    d = int(args.dim)
    sides = _sides(args.side, d)
    g = Torus(sides) if args.geometry == "torus" else Window((0,) * d, sides)
    return generate_configuration(d, g, int(args.seed), float(args.bias))


# -- commands -------------------------------------------------------------------

def cmd_gen(args) -> int:
    c = _configuration(args)
    out = Path(args.out or "config.eqmz")
    path, sidecar = write_configuration(c, out)
    meta = json.loads(Path(sidecar).read_text())
    meta["provenance"] = _spec(args)
    _write_json(Path(sidecar), meta)
    print(f"wrote {path} ({c.n_sites} sites, ones density {c.ones_density():.6f})")
    return 0


def _clump_matching(c, args):
    k_max = _k_max(args, c.dimension, c.sides, "torus" if c.periodic else "window")
    e = compute_edge_cutlevels(c, k_max)
    h = build_hierarchy(e)
    return build_matching(c, h)


def cmd_match(args) -> int:
    formats = _formats(args.format)
    c = _configuration(args)
    prefix = Path(args.out or "match")
    if args.rule == "meshalkin":
        m = meshalkin_lift(c, args.axis)
        body = m.to_csv()
        summary = {"n_sites": m.n_sites, "n_pairs": m.n_pairs, "unmatched": m.n_unmatched,
                   "censored": int(m.censored.sum())}
    else:
        m = _clump_matching(c, args)
        body = m.to_csv()
        summary = m.summary()
        print(f"K_max={m.k_max} truncation residual={m.meta.get('residual_bound', 0.0):.3e}")
    if "csv" in formats:
        _write_csv(prefix.with_suffix(".csv"), body, args)
    _write_json(prefix.with_suffix(".json"), {**_spec(args), "summary": summary})
    print(json.dumps(summary, sort_keys=True))
    return 0


def _plot(curve, d, path: Path):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ArgumentError("svg output needs matplotlib (pip install eqmatch[plot])") from None
    matplotlib.rcParams["svg.hashsalt"] = "eqmatch"
    r = curve.radii.astype(float)
    p = curve.p_hat
    lo, hi = curve.intervals()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.errorbar(r, p, yerr=[p - lo, hi - p], fmt="o", ms=3, label="empirical")
    ok = r > 1
    if ok.any() and p[ok][0] > 0:
        for variant, style in (("main", "-"), ("preliminary", "--"), ("ceiling", ":")):
            ref = theoretical_bound(r[ok], d, 1.0, variant)
            ax.plot(r[ok], ref * p[ok][0] / ref[0], style, label=variant)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("P(Z > r)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_tail(args) -> int:
    d = int(args.dim)
    sides = _sides(args.side, d)
    geometry = args.geometry or ("torus" if args.rule == "meshalkin" else "window")
    formats = _formats(args.format)
    k_max = None
    if args.rule == "clump":
        k_max = _k_max(args, d, sides, geometry)
    radii = parse_radii(args.radii)
    curve = estimate_tail(args.rule, d, sides, int(args.trials), int(args.seed), radii, geometry=geometry,
                          k_max=k_max, bias=float(args.bias), axis=args.axis, censored=args.censored,
                          guard=args.guard)
    r_lo, r_hi = float(radii[0]), float(radii[-1])
    fit = fit_exponent(curve, r_lo, r_hi)
    result = {**_spec(args), "fit": {"slope": fit.slope, "stderr": fit.stderr, "n_points": fit.n_points,
                                      "r_lo": r_lo, "r_hi": r_hi}, "k_max": k_max,
              "censored_sites": curve.meta["censored_sites"]}
    if k_max is not None and geometry == "window":
        result["truncation_residual"] = truncation_bias(d, k_max, max(sides) / 2)
    if r_lo > 1:
        result["domination"] = check_domination(curve, d, r_lo, r_hi)
    prefix = Path(args.out or "tail")
    if "csv" in formats:
        _write_csv(prefix.with_suffix(".csv"), curve.to_csv(), args)
    _write_json(prefix.with_suffix(".json"), result)
    if "svg" in formats:
        _plot(curve, d, prefix.with_suffix(".svg"))
    print(json.dumps(result["fit"], sort_keys=True))
    return 0


def _verify_one(c, rng) -> List[str]:
    """Property checks on one torus configuration; returns failure messages."""
    from .transport import matching_transport, verify_kbad_identity, verify_mass_transport

    failures = []
    imbalance = abs(2 * c.ones() - c.n_sites)
    e = compute_edge_cutlevels(c)
    h = build_hierarchy(e)
    m = build_matching(c, h)
    try:
        m.base.check()
    except EqMatchError as exc:
        failures.append(f"clump matching invalid: {exc}")
    if m.n_unmatched != imbalance:
        failures.append(f"clump rule leaves {m.n_unmatched} unmatched, imbalance is {imbalance}")
    for k in range(1, h.k_max + 1):
        lhs, rhs = verify_kbad_identity(c, h, m, k)
        if lhs != rhs:
            failures.append(f"k-bad identity fails at k={k}: {lhs} != {rhs}")
    out_mass, in_mass = verify_mass_transport(c, matching_transport(m))
    if out_mass != in_mass:
        failures.append("matching transport is not balanced")
    z = tuple(int(v) for v in rng.integers(0, c.sides))
    shifted = translate_configuration(c, z)
    for rule in ("clump", "meshalkin"):
        a = m.base if rule == "clump" else meshalkin_lift(c)
        b = build_matching(shifted, build_hierarchy(compute_edge_cutlevels(shifted))).base if rule == "clump" \
            else meshalkin_lift(shifted)
        if not np.array_equal(_translate_partner(a.partner, z, c.sides), b.partner):
            failures.append(f"{rule} rule is not equivariant under shift {z}")
    mm = meshalkin_lift(c)
    try:
        mm.check()
    except EqMatchError as exc:
        failures.append(f"meshalkin matching invalid: {exc}")
    return failures


def _translate_partner(partner: np.ndarray, z, sides) -> np.ndarray:
    n = partner.size
    coords = np.stack(np.unravel_index(np.arange(n), sides), axis=1)
    moved = np.ravel_multi_index(tuple(((coords + np.asarray(z)) % np.asarray(sides)).T), sides)
    out = np.full(n, -1, dtype=np.int64)
    ok = partner >= 0
    out[moved[ok]] = moved[partner[ok]]
    return out


def cmd_verify(args) -> int:
    d = int(args.dim)
    sides = _sides(args.side, d)
    if args.geometry != "torus":
        raise ArgumentError("verify runs its identity suite on tori; use --geometry torus")
    failures = []
    for t in range(int(args.trials)):
        seed = trial_seed(int(args.seed), t)
        c = generate_configuration(d, Torus(sides), seed, float(args.bias))
        rng = np.random.default_rng(seed)
        failures += [f"trial {t}: {msg}" for msg in _verify_one(c, rng)]
    report = {**_spec(args), "trials": int(args.trials), "failures": failures, "passed": not failures}
    _write_json(Path(args.out or "verify").with_suffix(".json"), report)
    for msg in failures[:20]:
        print(msg, file=sys.stderr)
    print(f"{int(args.trials)} trials, {len(failures)} failures")
    return 0 if not failures else EXIT_FAIL


def cmd_events(args) -> int:
    d = int(args.dim)
    ks = _ints(args.k)
    formats = _formats(args.format)
    scales = [float(v) for v in str(args.s).split(",") if v.strip()]
    rows = event_frequencies(d, int(args.trials), int(args.seed), enclosed_levels=ks, hit_levels=ks,
                             scales=scales, bias=float(args.bias))
    prefix = Path(args.out or "events")
    table = [r.to_dict() for r in rows]
    if "csv" in formats:
        cols = ["event", "k", "s", "trials", "count", "p_hat", "stderr", "bound", "ok"]
        body = ",".join(cols) + "\n" + "".join(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c])
                                                          for c in cols) + "\n" for r in table)
        _write_csv(prefix.with_suffix(".csv"), body, args)
    _write_json(prefix.with_suffix(".json"), {**_spec(args), "rows": table})
    for r in table:
        print(f"{r['event']:>20} k={r['k']} s={r['s']:.4g} p_hat={r['p_hat']:.4g} bound={r['bound']:.4g} "
              f"{'ok' if r['ok'] else 'VIOLATED'}")
    return 0 if all(r["ok"] for r in table) else EXIT_FAIL


# -- parsing ----------------------------------------------------------------------

def _add_common(p, rule=True):
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--side", default="64", help="one side length or a comma list")
    p.add_argument("--geometry", choices=("window", "torus"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bias", type=float, default=0.5)
    p.add_argument("--out", default=None, help="output path or prefix")
    p.add_argument("--format", default="csv,json", help="comma list of csv, json, svg")
    if rule:
        p.add_argument("--rule", choices=("meshalkin", "clump"), default="clump")
        p.add_argument("--axis", type=int, default=None)
        p.add_argument("--kmax", type=int, default=None)
        p.add_argument("--margin", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eqmatch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"eqmatch {__version__}")
    parser.add_argument("--config", default=None, help="key=value file with default flag values")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen", help="generate a configuration file")
    _add_common(p, rule=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("match", help="match a configuration")
    _add_common(p)
    p.add_argument("--input", default=None, help="configuration file from 'gen'")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("tail", help="estimate the displacement tail")
    _add_common(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--radii", default="4..512")
    p.add_argument("--censored", choices=("exclude", "survive"), default="exclude")
    p.add_argument("--guard", type=int, default=None, help="minimum boundary distance of sampled sites")
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("verify", help="run the identity and property suite on tori")
    _add_common(p, rule=False)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("events", help="event frequencies against their bounds")
    _add_common(p, rule=False)
    p.add_argument("--k", default="4")
    p.add_argument("--s", default="4,16")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_events)
    return parser


def _read_config(path) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ArgumentError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(parser, argv, values: dict):
    """Turn config entries into flags placed before the command-line ones."""
    sub_idx = next(i for i, a in enumerate(argv) if a in ("gen", "match", "tail", "verify", "events"))
    extra = []
    for key, value in values.items():
        extra += [f"--{key}", value]
    return argv[: sub_idx + 1] + extra + argv[sub_idx + 1 :]


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            argv = _apply_config(parser, argv, _read_config(args.config))
            args = parser.parse_args(argv)
        if getattr(args, "geometry", None) is None and args.command in ("gen", "match", "verify", "events"):
            args.geometry = "torus" if args.command == "verify" else "window"
        return args.func(args)
    except _UsageError as exc:
        print(f"eqmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UndecidableError as exc:
        print(f"eqmatch: undecidable: {exc} (try a larger --margin)", file=sys.stderr)
        return EXIT_UNDECIDABLE
    except (ArgumentError, ValueError, DegenerateSampleError, UnsupportedGeometryError) as exc:
        print(f"eqmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
