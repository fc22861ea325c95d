"""Smoke test for the fronttrack_py extension.

Build first:
    cargo build -p fronttrack-py --release --features extension-module
then run:
    python3 python/smoke_test.py

If the module is already importable (for example after `maturin develop`)
it is used as is; otherwise the shared library is picked up from target/.
"""

import importlib
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    try:
        return importlib.import_module("fronttrack_py")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libfronttrack_py.so", "libfronttrack_py.dylib", "fronttrack_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                tmp = Path(tempfile.mkdtemp())
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                shutil.copy(lib, tmp / ("fronttrack_py" + suffix))
                sys.path.insert(0, str(tmp))
                return importlib.import_module("fronttrack_py")
    sys.exit("fronttrack_py not found; build it with cargo build -p fronttrack-py --release --features extension-module")


def main():
    ft = load_module()

    p = ft.Profile([0.0], [1.0, 0.0])
    assert p.breakpoints == [0.0] and p.values == [1.0, 0.0]
    assert p.total_variation() == 1.0
    assert ft.Profile.from_csv(p.to_csv()).values == p.values

    shock = ft.solve_riemann(1.0, 0.0, 0.05)
    assert len(shock) == 1 and shock[0][3] == "shock" and shock[0][2] == 0.5
    fan = ft.solve_riemann(0.0, 1.0, 0.5)
    assert [w[1] for w in fan] == [0.5, 1.0]

    assert ft.oracle_burgers_riemann(0.0, 1.0, 1.0, 0.25) == 0.25
    t = math.log(2.0)
    assert abs(ft.oracle_damped_burgers_ramp(0.3, t) - 0.3 * 0.5 / 1.5) < 1e-15

    s = ft.Scenario.load(str(ROOT / "scenarios" / "damped_ramp.json"))
    with tempfile.TemporaryDirectory() as out:
        run = s.run(out)
        assert run.passed, run.checks
        assert (Path(out) / "reports" / "checks.json").exists()
    err = ft.damped_ramp_error(run.final_profile, s.t_final)
    assert abs(err - run.oracle_error) < 1e-12
    ups = [u for (_, _, u) in run.functionals]
    assert all(b <= a + 1e-12 for a, b in zip(ups, ups[1:]))
    assert all(w >= 0.0 for (_, _, w, _) in run.measure("mu_source"))

    merge = ft.Scenario.load(str(ROOT / "scenarios" / "merging_shocks.json"))
    report = merge.sweep(jobs=2)
    assert report["pass"], report
    assert report["exceptional"]["flagged"] == [1.0]

    print(f"ok: damped ramp L1 error {err:.4e}, {run.event_count} events, merge flagged at {report['exceptional']['flagged']}")


if __name__ == "__main__":
    main()
