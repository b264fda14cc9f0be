"""Compare the compiled kernels with the pure-Python fallback.

Run ``python benchmarks/bench_kernels.py [--repeat N] [--json out.json]``.
Each kernel is timed on identical inputs under both backends, outputs are
checked for agreement, and the best of ``--repeat`` runs is reported.
"""

import argparse
import json
import timeit

import numpy as np

from eqmatch import _backend
from eqmatch.lattice import Torus, generate_configuration
from eqmatch.matching import clump_match


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    rows = (rng.random((64, 4096)) < 0.5).astype(np.uint8)
    axes = [np.arange(-512, 512), np.arange(0, 1024)]
    n = 256 * 256
    idx = np.arange(n).reshape(256, 256)
    u = np.concatenate([idx.reshape(-1), idx.reshape(-1)])
    v = np.concatenate([np.roll(idx, -1, 0).reshape(-1), np.roll(idx, -1, 1).reshape(-1)])
    level = rng.integers(0, 12, size=u.size).astype(np.int16)
    order = np.argsort(np.maximum(level, 1), kind="stable")
    faces = 4000
    lo = rng.integers(0, 200, size=(faces, 2)).astype(np.int64)
    hi = lo + rng.integers(0, 50, size=(faces, 2))
    return {
        "rows": rows, "axes": axes, "n": n, "u": u[order], "v": v[order], "level": level[order],
        "face_axis": rng.integers(0, 2, size=faces).astype(np.int64), "lo": lo, "hi": hi,
        "face_level": rng.integers(2, 20, size=faces).astype(np.int16),
    }


def _cases(k, x):
    def raster():
        cut = np.zeros((2, 256, 256), dtype=np.int16)
        k.rasterize_faces(cut, x["face_axis"], x["lo"], x["hi"], x["face_level"])
        return cut

    def forest():
        parent, link = k.kruskal_forest(x["n"], x["u"], x["v"], x["level"])
        return k.representatives(parent, link, np.arange(x["n"]), 6)

    return {
        "coin_bits 1024^2": lambda: k.coin_bits(12345, 1 << 52, x["axes"]),
        "meshalkin_rows 64x4096": lambda: k.meshalkin_rows(x["rows"], True),
        "rasterize_faces 4000 boxes": raster,
        "kruskal+representatives 256^2": forest,
    }


def _pipeline():
    c = generate_configuration(2, Torus((512, 512)), 1)
    return clump_match(c).partner


def run(repeat: int = 3) -> list:
    x = _inputs()
    names = list(_cases(_backend.kernels(), x)) + ["clump_match 512^2 torus"]
    results = []
    outputs = {}
    for backend in _backend.available():
        with _backend.use_backend(backend) as k:
            cases = _cases(k, x)
            cases["clump_match 512^2 torus"] = _pipeline
            for name in names:
                fn = cases[name]
                outputs[(backend, name)] = fn()
                best = min(timeit.repeat(fn, number=1, repeat=repeat))
                results.append({"kernel": name, "backend": backend, "seconds": best})
    for name in names:
        vals = [outputs[(b, name)] for b in _backend.available()]
        for other in vals[1:]:
            a, b = (np.asarray(v) for v in (vals[0], other))
            if not np.array_equal(a, b):
                raise SystemExit(f"backends disagree on {name}")
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None, help="also write the timings here")
    args = ap.parse_args(argv)
    results = run(args.repeat)
    by_name = {}
    for r in results:
        by_name.setdefault(r["kernel"], {})[r["backend"]] = r["seconds"]
    print(f"{'kernel':32} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, t in by_name.items():
        py, cc = t.get("python"), t.get("compiled")
        speed = f"{py / cc:8.1f}" if py and cc else f"{'-':>8}"
        cc_text = f"{cc:10.4f}" if cc is not None else f"{'n/a':>10}"
        print(f"{name:32} {py:10.4f} {cc_text} {speed}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
