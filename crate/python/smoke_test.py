"""Smoke test for the chargesched_py extension module.

Build and install first, e.g. ``maturin build -m crates/python/Cargo.toml``
followed by ``pip install`` of the wheel.
"""

import math

import chargesched_py as cs


def close(a, b, tol=1e-9):
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


def main():
    two = [
        cs.Request(1, 0.0, 2.0, 2.0, 2.0, 35.0),
        cs.Request(2, 0.0, 4.0, 4.0, 2.0, 35.0),
    ]
    sol = cs.solve_offline(two)
    assert sol.kkt_passed, sol.kkt_max_violation
    assert all(close(total, 1.5) for _, _, total in sol.intervals), sol.intervals
    assert close(sol.rates[1][0], 1.0) and close(sol.rates[2][1], 1.5)

    single = [cs.Request(7, 1.0, 5.0, 4.0, 3.3, 35.0)]
    for algo in ("oa", "orchard:1", "avg"):
        run = cs.run_online(single, algo)
        assert close(run.total_cost, cs.solve_offline(single).cost), algo
    eg = cs.run_online(single, "eg")
    assert close(eg.trace[0][1], 1.0 + 4.0 / 3.3)

    try:
        cs.run_online(single, "greedy")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown algorithm accepted")
    try:
        cs.solve_offline([cs.Request(9, 0.0, 4.0, 14.0, 3.3, 35.0)])
    except ValueError as e:
        assert "9" in str(e)
    else:
        raise AssertionError("infeasible request accepted")

    cfg = cs.ScenarioConfig.builtin(1)
    reqs = cs.generate_instance(cfg, 3)
    assert reqs and all(8.0 <= r.arrival_h < 24.0 for r in reqs)
    rows = cs.simulate(cfg, ["orchard", "oa"], 2, 3)
    assert len(rows) == 4 and all(row[5] >= 1.0 - 1e-9 for row in rows)
    assert rows == cs.simulate(cfg, ["orchard", "oa"], 2, 3)
    print("smoke test passed:", len(reqs), "requests, ratios", [round(r[5], 4) for r in rows])


if __name__ == "__main__":
    main()
