#!/usr/bin/env python3
"""Smoke test for the clickstat Python extension.

Build the module first, then run this script:

    cargo build --release -p clickstat-python
    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_clickstat():
    candidates = [
        REPO / "target" / "release" / "libclickstat.so",
        REPO / "target" / "debug" / "libclickstat.so",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "libclickstat.so not found; run `cargo build --release -p clickstat-python` first"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    staging = Path(tempfile.mkdtemp(prefix="clickstat_py_"))
    shutil.copy2(newest, staging / "clickstat.so")
    sys.path.insert(0, str(staging))
    import clickstat  # noqa: E402

    print(f"imported clickstat {clickstat.__version__} from {newest}")
    return clickstat


def approx(a, b, tol, label):
    if abs(a - b) > tol:
        sys.exit(f"FAIL {label}: {a} vs {b} (tol {tol})")
    print(f"  ok {label}: {a:.10g}")


def main():
    cs = import_clickstat()

    # effective decay rate at the two reference scaling values
    det20 = cs.DetectionParams(gamma=1.0, bandwidth=1.0, x=20.0)
    det02 = cs.DetectionParams(gamma=1.0, bandwidth=1.0, x=0.2)
    approx(det20.gamma_eff, 0.9500000001, 1e-9, "gamma_eff(x=20)")
    approx(det02.gamma_eff, 0.0936537654, 1e-9, "gamma_eff(x=0.2)")

    # wide-band survival amplitude and the frozen-atom branch
    wide = cs.DetectionParams(gamma=1.0, bandwidth=1.0, x=1e8)
    approx(abs(wide.survival_amplitude(1.0)), math.exp(-0.5), 1e-6, "|abar| Markovian")
    zeno = cs.DetectionParams(gamma=1.0, bandwidth=1.0, tau=0.0)
    assert zeno.survival_amplitude(3.0) == 1.0 + 0.0j, "Zeno branch"
    assert zeno.jump_weight(3.0) == 0.0, "Zeno jump weight"
    print("  ok Zeno branch frozen")

    # reference two-level model: gamma_eff(20) = 4 omega
    omega = det20.gamma_eff / 4.0
    model = cs.AtomModel.two_level(delta=0.0, omega=omega)
    assert model.dim == 2 and model.levels == ["e", "g"]

    p0 = cs.ld_point(model, det20, 0.0)
    approx(p0["lambda"], 0.0, 1e-9, "lambda(0)")
    approx(p0["flux"], 0.15833, 1e-4, "I(0)")
    approx(cs.stationary_flux(model, det20), p0["flux"], 1e-6, "null-space flux route")
    approx(p0["mandel_q"], -2.0 / 3.0, 1e-6, "Mandel Q(0) at x = 20")

    # flux ordering between the two response times over a small sweep
    grid = [-1.0, -0.5, 0.0, 0.5, 1.0]
    sweep20 = cs.ld_sweep(model, det20, grid)
    sweep02 = cs.ld_sweep(model, det02, grid)
    assert all(a["flux"] > b["flux"] for a, b in zip(sweep20, sweep02)), "flux ordering"
    assert all(a["lambda"] <= b["lambda"] + 1e-12 for a, b in zip(sweep20[:-1], sweep20[1:])), (
        "lambda nondecreasing"
    )
    print("  ok flux ordering I(s; x=20) > I(s; x=0.2) on the grid")

    # count-resolved ladder: normalization and generating function
    pn = cs.pn_distribution(model, det20, t_final=10.0)
    total = sum(p for _, p in pn)
    approx(total, 1.0, 1e-8, "sum P(n,t)")
    approx(cs.finite_time_generating(model, det20, 10.0, 0.0), 0.0, 1e-10, "F(0,t)")

    # trajectories: determinism and rate sanity
    det_traj = cs.DetectionParams(gamma=1.0, bandwidth=2000.0, x=20.0)
    clicks_a = cs.simulate_trajectory(model, det_traj, horizon=50.0, dt=0.01, seed=42)
    clicks_b = cs.simulate_trajectory(model, det_traj, horizon=50.0, dt=0.01, seed=42)
    assert clicks_a == clicks_b, "seeded determinism"
    print(f"  ok seeded determinism ({len(clicks_a)} clicks)")

    stats = cs.ensemble_statistics(model, det_traj, horizon=50.0, dt=0.01, count=400, seed=7)
    pull = abs(stats["rate"] - p0["flux"]) / stats["rate_std_error"]
    # ground-state start carries a small negative transient bias; allow for it
    if not (stats["rate"] < p0["flux"] + 3.0 * stats["rate_std_error"] and pull < 6.0):
        sys.exit(f"FAIL ensemble rate: {stats['rate']} vs {p0['flux']} ({pull:.1f} SE)")
    print(f"  ok ensemble rate {stats['rate']:.4f} vs I(0) = {p0['flux']:.4f} ({pull:.1f} SE)")

    print("smoke test passed")


if __name__ == "__main__":
    main()
