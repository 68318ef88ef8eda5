#!/usr/bin/env python3
"""Smoke test for the bqc_py extension module.

Builds nothing itself: run `cargo build -p bqc-py` first. The script copies
the fresh cdylib next to itself under the importable name, then exercises
one call from every binding group and cross-checks a few invariants.
"""

import math
import pathlib
import shutil
import sys

ROOT = pathlib.Path(__file__).resolve().parents[1]


def stage_module() -> None:
    candidates = [
        ROOT / "target" / "debug" / "libbqc_py.so",
        ROOT / "target" / "release" / "libbqc_py.so",
        ROOT / "target" / "debug" / "libbqc_py.dylib",
        ROOT / "target" / "release" / "libbqc_py.dylib",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("no built extension found; run `cargo build -p bqc-py` first")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    dest = ROOT / "python" / "bqc_py.so"
    if not dest.exists() or newest.stat().st_mtime > dest.stat().st_mtime:
        shutil.copy2(newest, dest)
    sys.path.insert(0, str(dest.parent))


stage_module()

import bqc_py  # noqa: E402

CHECKS = 0


def check(label: str, ok: bool) -> None:
    global CHECKS
    if not ok:
        sys.exit(f"FAIL {label}")
    CHECKS += 1
    print(f"ok {CHECKS:2d} - {label}")


# Quadratic forms: construction, exact arithmetic, and box counts.
q = bqc_py.QuadraticForm.diagonal([1, 1, 1, 1, -1])
check("model quadric has n = 5 and discriminant -1", q.n == 5 and q.discriminant() == -1)
check("evaluate is exact", q.evaluate([3, 4, 0, 0, 5]) == 0)
check(
    "slice and naive box counts agree",
    q.count_box(4, method="slice") == q.count_box(4, method="naive"),
)

big = bqc_py.QuadraticForm([[10**6, 1], [1, -(10**6)]])
check("discriminants leave i64 without losing exactness", big.discriminant() == -(10**12) - 1)

# Exponential sums against the size envelope.
re, im = q.expsum(12, [1, 0, 2, 0, 1])
check("S_12(c) stays under the envelope", math.hypot(re, im) <= q.envelope_bound(12))

# Local densities: the two singular-series routes agree within their tails.
(euler, euler_tail), (qser, qser_tail) = q.singular_series(q_max=20, p_max=20)
check(
    "singular series routes agree within tails",
    abs(euler - qser) <= euler_tail + qser_tail and euler > 0,
)

# Archimedean density with a reproducible seed.
value, stderr = q.sigma_infinity(samples=50_000, seed=7)
value2, _ = q.sigma_infinity(samples=50_000, seed=7)
check("sigma_infinity is seeded and positive", value == value2 and value > 0)

# Biquadratic forms: counts by both routes and the thin family.
b = bqc_py.BiquadraticForm.diagonal_squares(3, -1)
check("pair evaluation is exact", b.evaluate([1, 2, 1], [2, 1, 2]) == 2 * 2 + 4 - 4)
check(
    "direct and mobius height counts agree",
    b.count_nu(40.0, route="direct") == b.count_nu(40.0, route="mobius"),
)
check("tilde dominates the doubly-restricted count", b.count_pairs(3, 6, restrict="tilde") >= b.count_pairs(3, 6, restrict="pairs"))

plus = bqc_py.BiquadraticForm.diagonal_squares(3, 1)
t1, t2 = plus.thin_count(100.0), plus.thin_count(1000.0)
slope = math.log(t2 / t1) / math.log(10.0)
check("thin family grows near the critical exponent 2", abs(slope - 2.0) <= 0.1)

series, tail = plus.joint_series(q_max=16)
check("joint series stabilizes", tail <= 0.1 * max(abs(series), 1.0))

# Module-level helpers and JSON round trips.
check("zeta(2) matches pi^2/6", abs(bqc_py.zeta(2) - math.pi**2 / 6) < 1e-9)
check("kappa flags parity", bqc_py.kappa(4) == 0 and bqc_py.kappa(5) == 1)

again = bqc_py.load_form(q.to_json())
check("quadratic JSON round trip", again.gram() == q.gram())
again_b = bqc_py.load_form(b.to_json())
check("biquadratic JSON round trip", again_b.coeffs() == b.coeffs())

c = bqc_py.peyre_constant(series, 80.0, 4)
check("leading constant assembles from its parts", c > 0)

print(f"all {CHECKS} smoke checks passed")
