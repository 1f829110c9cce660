import importlib.util
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from pcsp import _kernels

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
WORKLOAD = os.path.join(ROOT, "benchmarks", "workload.py")
NUMBA = "numba" if importlib.util.find_spec("numba") else "python"


def run_workload(flag):
    env = dict(os.environ, PCSP_NO_NUMBA=flag)
    r = subprocess.run([sys.executable, WORKLOAD, "1"], env=env, capture_output=True, text=True, check=True)
    return json.loads(r.stdout)


@pytest.mark.slow
def test_backends_agree_on_workload():
    slow = run_workload("1")
    assert slow["backend"] == "python"
    fast = run_workload("0")
    assert fast["backend"] == NUMBA
    assert fast["results"] == slow["results"]


def test_bit_kernels_match_python():
    for x in [0, 1, 2, 3, 0b1011000, 2 ** 40 + 5, 2 ** 62]:
        x = np.uint64(x)
        assert _kernels.popcount(x) == _kernels.popcount.py_func(x) == bin(int(x)).count("1")
        if x:
            assert _kernels.lowbit(x) == _kernels.lowbit.py_func(x)


def test_flag_disables_numba():
    code = "from pcsp._accel import backend_name; print(backend_name())"
    for flag, want in [("1", "python"), ("yes", "python"), ("0", NUMBA), ("", NUMBA)]:
        r = subprocess.run([sys.executable, "-c", code], env=dict(os.environ, PCSP_NO_NUMBA=flag),
                           capture_output=True, text=True, check=True)
        assert r.stdout.strip() == want
