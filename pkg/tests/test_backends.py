import os
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


def _python(code, **env):
    full = dict(os.environ, **env)
    return subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=full)


def test_numpy_backend_can_be_forced():
    res = _python("from airylab import backend; print(backend())", AIRYLAB_BACKEND="numpy")
    assert res.returncode == 0 and res.stdout.strip() == "numpy"


def test_invalid_backend_is_rejected():
    res = _python("import airylab", AIRYLAB_BACKEND="fortran")
    assert res.returncode != 0 and "AIRYLAB_BACKEND" in res.stderr


def test_forced_numpy_backend_gives_same_passage_values():
    code = ("from airylab.stats import lpp_edge_sample;"
            "print(repr(lpp_edge_sample('geometric', 12, 5, 40).values.tolist()))")
    a = _python(code, AIRYLAB_BACKEND="numpy")
    b = _python(code)
    assert a.returncode == 0 and a.stdout == b.stdout


def test_benchmark_quick_run():
    res = subprocess.run([sys.executable, str(ROOT / "benchmarks" / "bench_backends.py"),
                          "--quick", "--repeat", "1"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "speedup" in res.stdout


@pytest.mark.skipif(os.environ.get("AIRYLAB_BACKEND") == "numpy", reason="numba disabled")
def test_numba_is_active_by_default():
    numba = pytest.importorskip("numba")
    from airylab import backend
    assert numba and backend() == "numba"
