import dataclasses
import os
import subprocess
import sys

import numpy as np
import pytest

from renewalctl import kernels
from renewalctl.model import _noise_grid
from renewalctl.rng import FrameRng
from renewalctl.sim import get_scenario, run_scenario

needs_compiled = pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")

NOISES = ["deterministic", {"kind": "uniform", "width": 1.5}, "exponential"]


def _same(a: dict, b: dict):
    assert a.keys() == b.keys()
    for k in a:
        x, y = np.asarray(a[k]), np.asarray(b[k])
        assert x.shape == y.shape, k
        assert np.array_equal(x, y, equal_nan=x.dtype.kind == "f"), k


def _with_noise(name, noise, horizon):
    s = get_scenario(name, horizon=horizon, seed=42)
    model = dataclasses.replace(s.model, noise=_noise_grid(noise, s.model.mean_energy.shape))
    return dataclasses.replace(s, model=model)


@needs_compiled
@pytest.mark.parametrize("noise", NOISES, ids=["deterministic", "uniform", "exponential"])
def test_task_bit_identical(noise):
    for name, V in (("one_class", 1.0), ("ten_class", 0.3)):
        s = _with_noise(name, noise, 3000)
        args = (s.model, V, np.zeros(s.num_queues), s.horizon, 1, 100)
        _same(kernels.fallback.run_task(*args, FrameRng(5)), kernels.compiled.run_task(*args, FrameRng(5)))


@needs_compiled
@pytest.mark.parametrize("noise", NOISES, ids=["deterministic", "uniform", "exponential"])
def test_flow_bit_identical(noise):
    for name in ("flow_control_ten_class", "flow_control_null", "rate_switch"):
        s = _with_noise(name, noise, 1500)
        starts, mults = s.phases()
        args = (s.model, 100.0, np.ones(10), 0.5, np.zeros(10), 0.0, s.horizon, 3, starts, mults, True)
        _same(kernels.fallback.run_flow(*args, FrameRng(9)), kernels.compiled.run_flow(*args, FrameRng(9)))


@needs_compiled
def test_online_lfp_bit_identical():
    from renewalctl.lfp import random_feasible_instance
    insts = [get_scenario("online_lfp", horizon=10).model]
    insts += [random_feasible_instance(np.random.default_rng(i)) for i in range(5)]
    for inst in insts:
        args = (inst, 50.0, np.zeros(len(inst.d)), 2000, 7)
        _same(kernels.fallback.run_online_lfp(*args), kernels.compiled.run_online_lfp(*args))


@needs_compiled
def test_engine_summaries_identical_across_backends():
    for name in ("one_class_noisy", "flow_control_ten_class", "online_lfp"):
        s = get_scenario(name, horizon=2000, seed=3)
        a, ta = run_scenario(s, backend="python")
        b, tb = run_scenario(s, backend="cython")
        ra, rb = a.to_record(), b.to_record()
        assert ra.pop("backend") == "python" and rb.pop("backend") == "cython"
        assert ra == rb
        assert np.array_equal(ta.data, tb.data)


def test_get_backend():
    assert kernels.get_backend("python") is kernels.fallback
    assert kernels.get_backend() is kernels.active
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_var_forces_fallback():
    env = dict(os.environ, RENEWALCTL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import renewalctl; print(renewalctl.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_compiled_is_default():
    if os.environ.get("RENEWALCTL_PURE_PYTHON"):
        pytest.skip("fallback forced by environment")
    assert kernels.BACKEND == "cython"


@needs_compiled
def test_benchmark_script_runs(capsys):
    import importlib.util
    from pathlib import Path
    path = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--frames", "300", "--repeat", "1"]) == 0
    assert "NO" not in capsys.readouterr().out
