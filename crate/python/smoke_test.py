"""Smoke test for the adsqnm extension module.

Build first with `cargo build --release -p adsqnm-py`, then run `python3 python/smoke_test.py`.
The script loads target/{release,debug}/libadsqnm.so (or $ADSQNM_LIB) directly, so no
install step is needed.
"""

import importlib.machinery
import importlib.util
import json
import math
import os
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    candidates = [os.environ.get("ADSQNM_LIB")] + [
        str(ROOT / "target" / profile / name)
        for profile in ("release", "debug")
        for name in ("libadsqnm.so", "libadsqnm.dylib", "adsqnm.dll")
    ]
    path = next((c for c in candidates if c and os.path.exists(c)), None)
    if path is None:
        sys.exit("extension not built; run `cargo build --release -p adsqnm-py`")
    loader = importlib.machinery.ExtensionFileLoader("adsqnm", path)
    spec = importlib.util.spec_from_file_location("adsqnm", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def check(label, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {label} {detail}")
    return ok


def main():
    aq = load()
    results = []

    bh = aq.BlackHole(1.0, 0.0)
    results.append(check("horizon", abs(bh.r_plus - 1.0) < 1e-12, f"r+ = {bh.r_plus}"))
    results.append(check("surface gravity", abs(bh.surface_gravity - 2.0) < 1e-10))

    try:
        aq.BlackHole(1.0, 1.2)
        results.append(check("|a| >= 1 rejected", False))
    except ValueError as e:
        results.append(check("|a| >= 1 rejected", "|a| < 1" in str(e)))

    spinning = aq.BlackHole(1.0, 0.1)
    op = aq.Operator(spinning, 12, 6)
    v = [complex(1.0, 0.0)] * op.dim
    lam = complex(2.0, -0.5)
    row0 = op.matrix(lam)[0]
    applied = op.apply(lam, v)
    results.append(check("operator apply", abs(sum(row0) - applied[0]) < 1e-9 * (1 + abs(applied[0]))))

    spectrum = aq.solve_qnf(spinning, 16, 8, (1.5, 10.0, -4.0, 0.5), fine_n_radial=32)
    converged = [e for e in spectrum if e["converged"]]
    results.append(
        check(
            "quasinormal frequencies decay",
            bool(converged) and all(e["lambda"].imag < 0 for e in converged),
            f"{len(converged)} converged",
        )
    )

    r0, r1 = spinning.indicial_roots(complex(1.0, -0.3))
    results.append(check("indicial roots", r0 == 0 and abs(r1) > 0))

    tw = aq.twisting_potential(aq.BlackHole(1.0, 0.1, nu=0.75), 64, 12)
    results.append(check("twisting decay", tw["decay_power"] is not None and tw["decay_power"] > 1.9))

    rows = aq.horizon_dichotomy(spinning, 6, seed=4)
    results.append(check("horizon dichotomy", all(r["holds"] for r in rows), f"{len(rows)} seeds"))

    probe = aq.upper_bound_probe(spinning, 16, 8, [complex(0, 5), complex(5, 1), complex(0.5, 0.5)])
    results.append(check("probe", probe["skipped"] == 1 and math.isfinite(probe["spread"])))

    config = {"params": {"M": 1.0, "a": 0.1, "nu": 1.5, "k": 0}, "pipeline": ["horizon", "assemble"]}
    with tempfile.TemporaryDirectory() as out:
        manifest = aq.run_pipeline(json.dumps(config), output_dir=out)
        statuses = {s["stage"]: s["status"] for s in manifest["stages"]}
        results.append(check("pipeline", set(statuses.values()) == {"ok"}, json.dumps(statuses)))

    if not all(results):
        sys.exit(1)
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
