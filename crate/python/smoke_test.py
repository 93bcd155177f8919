"""Smoke test of the Python bindings.

Build and install first:
    cd crates/python && maturin build --release -o dist && pip install dist/deathtoll-*.whl
Then run:
    python python/smoke_test.py

If target/debug/deathtoll (or $DEATHTOLL_BIN) exists, a synthetic data set
written by the CLI is loaded and refitted too.
"""

import math
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import deathtoll as dt


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)
    print(f"ok  {msg}")


def distributions():
    g = dt.Gpd(0.5, 2.0)
    check(g.mean() == 4.0, "GPD mean at xi=0.5, beta=2 is 4")
    check(dt.Gpd(1.5, 1.0).mean() is None, "infinite mean is None")
    check(abs(g.cdf(g.quantile(0.9)) - 0.9) < 1e-12, "cdf inverts quantile")
    draws = g.sample(20000, seed=3)
    check(len(draws) == 20000 and min(draws) >= 0.0, "samples are non-negative")
    check(abs(sorted(draws)[10000] - g.median()) < 0.1, "sample median near the median")
    try:
        dt.Gpd(-1.5, 1.0)
        raised = False
    except dt.DeathtollError:
        raised = True
    check(raised, "xi <= -1 raises DeathtollError")


def fits_and_projection():
    f, s = dt.reference_fits("flood")
    check(f.disaster_type == "flood" and len(f.coefficients) == len(f.terms), "reference flood fit")
    ratio = f.predict("EAP", 4.61, 1e4) / f.predict("EAP", 4.11, 1e4)
    check(abs(ratio - (4.61 / 4.11) ** f.coefficients[1]) < 1e-12, "count ratio follows the CO2 ratio")
    back = dt.FrequencyFit.from_json(f.to_json())
    check(back.coefficients == f.coefficients and math.isnan(back.loglik), "fit survives JSON")
    check(s.distribution("SAS", 2000.0).xi > -1.0, "severity distribution at a design point")

    rows = dt.project(f, s, dt.Scenario.reference(), [2040])
    world = next(r for r in rows if r["region"] is None)
    check(abs(world["n_disasters"] / 186.0 - 1) < 0.1, f"world flood disasters 2040: {world['n_disasters']:.1f}")
    check(abs(world["annual_deaths"] / 1388.9 - 1) < 0.1, f"world flood deaths 2040: {world['annual_deaths']:.1f}")

    boot = dt.bootstrap(f, s, dt.Scenario.reference(), [2040], replications=20, subsample_size=10, seed=1)
    again = dt.bootstrap(f, s, dt.Scenario.reference(), [2040], replications=20, subsample_size=10, seed=1, jobs=2)
    check(boot == again, "bootstrap does not depend on the worker count")
    check(all(e["low"] <= e["median"] <= e["high"] for e in boot), "bootstrap intervals contain the median")


def tests_and_dependence():
    r = dt.lr_test(-18468.0, -18127.5, 1)
    check(abs(r["statistic"] - 681.0) < 1e-9 and r["p_value"] < 1e-10, "LR statistic 681")
    x = dt.Gpd(0.2, 1.0).sample(500, seed=1)
    check(dt.chi_bar(x, x, [0.5, 0.9]) == [2.0, 2.0], "comonotone chi-bar is 2")


def cli_round_trip():
    root = Path(__file__).resolve().parent.parent
    binary = Path(os.environ.get("DEATHTOLL_BIN", root / "target" / "debug" / "deathtoll"))
    if not binary.exists():
        print(f"skip CLI round trip ({binary} not built)")
        return
    with tempfile.TemporaryDirectory() as d:
        Path(d, "run.toml").write_text('types = ["storm"]\n')
        subprocess.run([str(binary), "simulate", "--config", "run.toml", "--seed", "8"], cwd=d, check=True,
                       capture_output=True)
        data = dt.Dataset.load(Path(d, "out/events.csv"), Path(d, "out/covariates.csv"))
        check(len(data) > 0, f"loaded {len(data)} synthetic events")
        f0, s0 = dt.reference_fits("storm")
        f = dt.fit_frequency_model(data, "storm")
        z = max(abs(a - b) / e for a, b, e in zip(f.coefficients, f0.coefficients, f.std_errors))
        check(z < 3.0, f"storm frequency refit within 3 SE (max |z| {z:.2f})")
        s = dt.fit_severity_model(data, "storm")
        check(s.n_obs == len(data), "severity fit uses every event")


if __name__ == "__main__":
    distributions()
    fits_and_projection()
    tests_and_dependence()
    cli_round_trip()
    print("all smoke checks passed")
    sys.exit(0)
