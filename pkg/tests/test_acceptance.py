"""End-to-end acceptance checks, one per criterion.

Each check prints a ``PASS``/``FAIL`` line with its wall time, both under
pytest and when run directly (``python tests/test_acceptance.py``).
"""

import sys

import pytest

from pcsp.experiments import run_experiment

# (criterion, experiment, time budget in seconds)
CRITERIA = [
    (1, "olsak-k3-k5", 300),
    (2, "olsak-k3-k6", 60),
    (3, "olsak-c5-k3", 1800),
    (4, "pol-t", 60),
    (5, "nae-examples", 600),
    (6, "k4-loop", 60),
    (7, "aip-1in3-nae", 300),
    (8, "blp-gaps", 60),
    (9, "width1", 300),
    (10, "round-trip", 300),
    (11, "robustness", 60),
    (12, "symmetric-alternating", 300),
    (13, "trash-colour", 600),
]


def check(number, name, budget):
    rep = run_experiment(name)
    ok = rep.passed and rep.wall_time <= budget
    failed = [k for k, v in rep.checks.items() if not v]
    line = f"criterion {number:2d} {name:<22} {'PASS' if ok else 'FAIL'}  {rep.wall_time:7.2f}s / {budget}s"
    if failed:
        line += "  failed: " + "; ".join(failed)
    return ok, line, rep


@pytest.mark.slow
@pytest.mark.parametrize("number,name,budget", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_criterion(number, name, budget, capsys):
    ok, line, rep = check(number, name, budget)
    with capsys.disabled():
        print("\n" + line)
    assert rep.checks and all(rep.checks.values()), rep.checks
    assert rep.wall_time <= budget


if __name__ == "__main__":
    results = [check(*c) for c in CRITERIA]
    for _, line, _ in results:
        print(line)
    sys.exit(0 if all(ok for ok, _, _ in results) else 1)
