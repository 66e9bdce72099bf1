"""Smoke test for the windscale_py extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/windscale_py-*.whl
"""
import math
import os
import sys
import tempfile

import windscale_py as ws


def check(cond, msg):
    if not cond:
        sys.exit(f"FAIL: {msg}")
    print(f"ok   {msg}")


def main():
    x = ws.fgn(0.8, 1 << 16, seed=3)
    fit = ws.dfa(x)["fit"]
    check(abs(fit["alpha"] - 0.8) < 0.05, f"DFA recovers H=0.8 from FGN (alpha={fit['alpha']:.3f})")
    check(ws.fgn(0.8, 64, 1, "durbin_levinson") == ws.fgn(0.8, 64, 1, "dl"), "seeded FGN is deterministic")

    p = ws.ModelParams.preset(0.9, seed=5)
    month = ws.simulate(p, 4320)
    check(len(month) == 4320 and month == ws.simulate(p, 4320), "simulation is seeded")
    check(all(0.0 - 50 <= v <= 3600 + 500 for v in month), "output stays near the operating range")
    modes = ws.pdf_histogram(month, 100)
    check(abs(sum(d * (modes["bin_edges"][1] - modes["bin_edges"][0]) for d in modes["density"]) - 1) < 1e-9, "density integrates to one")

    p2 = p.replace(a=1300.0, seed=9)
    check((p2.a, p2.seed, p.a) == (1300.0, 9, 1235.0), "replace() copies with overrides")

    s = ws.TurbineSeries(
        "WT01",
        "2014-03-01T00:00:00Z",
        [100.0, 2600.0, 2600.0, None, 1500.0],
        power_min=[80.0, 2550.0, 2500.0, None, 1400.0],
        power_max=[124.0, 2650.0, 2700.0, None, 1600.0],
        power_std=[10.0, 20.0, 20.0, None, 0.0],
    )
    clean, report = ws.cleanse(s)
    check(clean.power_avg == [100.0, None, None, None, None], f"cleansing flags ramp, repeat and zero std ({report['counts']})")
    check(report["na_fraction_after"] == 0.8, "report carries NA fractions")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "s.csv")
        ws.write_csv(path, [s])
        check(ws.read_csv(path)["WT01"] == s, "CSV round trip is exact")

    a = ws.acf(month, 144, n_shuffles=10, seed=1)
    check(a["theta"][0] == 1.0 and a["band_halfwidth"] > 0, "ACF with surrogate band")
    spec = ws.spectrum(month, 1, 1 / 864000, 1 / 21600)
    check(math.isfinite(spec["beta"]), f"spectral slope beta={spec['beta']:.2f}")
    cmp = ws.compare(month, month, max_lag=144)
    check(cmp["qq_max_deviation"] == 0 and cmp["acf_max_abs_diff"] == 0, "self-comparison is zero")

    try:
        ws.fgn(1.5, 10, 0)
        check(False, "invalid H raises")
    except ValueError:
        check(True, "invalid H raises ValueError")
    try:
        ws.pdf_histogram([None, None], 10)
        check(False, "all-NA histogram raises")
    except ws.WindscaleError:
        check(True, "all-NA histogram raises WindscaleError")

    year = []
    for m in range(6):
        year += ws.simulate(ws.ModelParams.preset(0.9, seed=100 + m), 4320)
    data = ws.TurbineSeries("SYN", "2014-03-01T00:00:00Z", year)
    fitted, result = ws.calibrate(data, hurst=0.9, seed=2, replicas=2)
    check(fitted.d > 0 and "diagnostics" in result, f"calibration runs ({fitted})")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
