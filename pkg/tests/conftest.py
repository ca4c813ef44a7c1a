"""Shared fixtures: kernels, probe dictionaries, corpus, fast configs."""

import numpy as np
import pytest

from ptdiff import (ClassifierConfig, JetConfig, QuadratureConfig,
                    build_kernel, load_corpus, make_dictionary)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def kernel_cache():
    cache = {}

    def get(n, k):
        if (n, k) not in cache:
            cache[(n, k)] = build_kernel(n, k)
        return cache[(n, k)]

    return get


@pytest.fixture(scope="session")
def dict_cache():
    cache = {}

    def get(n=1, d=1, i=0, size=10, seed=0):
        key = (n, d, i, size, seed)
        if key not in cache:
            cache[key] = make_dictionary(*key)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def fast_classifier():
    """Reduced-resolution classifier configuration for battery tests."""

    def make(n=1, levels=None, dict_size=8, seed=0, tight_quad=False):
        if levels is None:
            levels = 10 if n == 1 else 8
        if tight_quad:
            quad = QuadratureConfig(rel_tol=1e-11, abs_floor=1e-16,
                                    max_cells=2 ** 13)
        else:
            quad = QuadratureConfig(rel_tol=1e-9, abs_floor=1e-15,
                                    max_cells=2 ** 11)
        return ClassifierConfig(
            levels=levels, dict_size=dict_size, seed=seed, quad=quad,
            jet_config=JetConfig(levels=8))

    return make


_REPORT_LINES = []


def report_line(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    line = f"[{status}] {name}{suffix}"
    _REPORT_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT_LINES:
            terminalreporter.write_line(line)
