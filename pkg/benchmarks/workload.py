"""Fixed kernel workload, printed as JSON so two backends can be compared.

Run with ``PCSP_NO_NUMBA=1`` for the interpreted kernels.
"""

import json
import sys
import time

import numpy as np

from pcsp._accel import backend_name
from pcsp.conditions import example_2_16, example_2_18, olsak
from pcsp.core import Structure, clique, cycle, nae, one_in_three, template
from pcsp.homsearch import count_homs, find_hom, gac
from pcsp.indicator import check_condition_in_pol
from pcsp.minionlab import FunctionTable, enumerate_polymorphisms, is_polymorphism


def random_graphs(rng, count, n, m):
    for _ in range(count):
        edges = {tuple(map(int, rng.integers(0, n, 2))) for _ in range(m)}
        yield Structure("G", n, [("E", 2)], [sorted(e for e in edges | {(b, a) for a, b in edges} if e[0] != e[1])])


def run(scale=1, heavy=False):
    rng = np.random.default_rng(7)
    out, times = {}, {}

    t = time.perf_counter()
    out["hom"] = [None if (h := find_hom(g, clique(3))) is None else list(h.mapping)
                  for g in random_graphs(rng, 20 * scale, 40, 90)]
    times["hom"] = time.perf_counter() - t

    t = time.perf_counter()
    out["count"] = [count_homs(cycle(n), clique(3)) for n in range(3, 10 + scale)]
    out["gac"] = [None if (d := gac(g, clique(2))) is None else [sorted(s) for s in d.sets]
                  for g in random_graphs(rng, 40 * scale, 10, 12)]
    times["count+gac"] = time.perf_counter() - t

    t = time.perf_counter()
    out["pol"] = [len(enumerate_polymorphisms(template(clique(3), clique(4)), 2).array()),
                  len(enumerate_polymorphisms(template(one_in_three(), nae(2)), 3).array())]
    tables = rng.integers(0, 4, (200 * scale, 9))
    out["is_pol"] = [bool(is_polymorphism(FunctionTable(3, 4, 2, row), template(clique(3), clique(4))).ok)
                     for row in tables]
    times["polymorphisms"] = time.perf_counter() - t

    t = time.perf_counter()
    out["indicator"] = [check_condition_in_pol(example_2_18(), template(nae(2))).status,
                        check_condition_in_pol(example_2_16(), template(nae(2), nae(4))).status]
    times["indicator"] = time.perf_counter() - t
    if heavy:
        # minutes without numba
        t = time.perf_counter()
        out["olsak_k3_k5"] = check_condition_in_pol(olsak(), template(clique(3), clique(5))).status
        times["olsak indicator"] = time.perf_counter() - t
    return {"backend": backend_name(), "results": out, "times": times}


if __name__ == "__main__":
    print(json.dumps(run(int(sys.argv[1]), sys.argv[2:] == ["--heavy"])))
