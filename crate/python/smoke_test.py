"""Smoke test for the momdet extension module.

Build first (see README), which places momdet.so next to this script.
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import momdet  # noqa: E402


def main():
    g = momdet.Spec("gaussian", {"sigma": 1.0})
    a = momdet.analyze(g)
    assert a.conclusion == "Determinate", a
    assert "Thm1" in a.fired_rules
    doc = json.loads(a.to_json())
    assert doc["verdict"]["conclusion"] == "Determinate"
    assert len(doc["reports"]) == 5

    ln = momdet.Spec.from_json('{"family": "lognormal", "params": {"mu": 0.0, "sigma": 1.0}}')
    a = momdet.analyze(ln)
    assert a.conclusion == "Indeterminate"
    assert "KreinIndetS" in a.fired_rules

    e1 = momdet.Spec.from_catalog("example1_a1")
    only = momdet.analyze(e1, only="KstarH,KreinH")
    verdicts = {name: v for name, v, _ in only.conditions}
    assert verdicts["KstarH"] == "FailsToHold", verdicts

    rows = momdet.moment_table(momdet.Spec("exponential", {"lambda": 1.0}), kmax=12)
    k10 = next(r for r in rows if r[0] == 10)
    assert abs(k10[1] - math.lgamma(11)) < 1e-9

    pts = dict(momdet.trace(g, kmax=10))
    assert abs(pts[8] - 4.0) < 1e-6

    sq = momdet.analyze(g.then("square_pushforward"))
    assert "SquareCorollary" in sq.fired_rules

    try:
        momdet.Spec.from_json('{"params": {}}')
    except ValueError as err:
        assert "family" in str(err)
    else:
        raise AssertionError("missing family accepted")

    results = momdet.catalog_run()
    assert len(results) == len(momdet.catalog_names())
    bad = [r for r in results if not r[2]]
    assert not bad, bad
    print(f"smoke test ok: {len(results)} catalog entries match")


if __name__ == "__main__":
    main()
