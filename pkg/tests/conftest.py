import math

import pytest

from ranforensics import report, synth
from ranforensics.ingest import load_study

# Reference per-N aggregate goodput (Mb/s) for the two stacks.
OAI_POINTS = [(1, 114.59), (3, 65.21), (6, 35.09), (12, 16.35)]
SRK_POINTS = [(1, 103.34), (3, 66.44), (6, 35.01), (12, 16.15)]


def oracle_jain(xs):
    """Direct evaluation of (sum x)^2 / (n sum x^2), kept apart from the library."""
    s = sum(xs)
    return s * s / (len(xs) * sum(x * x for x in xs))


def oracle_nearest_rank_p95(xs):
    ordered = sorted(xs)
    return ordered[math.ceil(0.95 * len(ordered)) - 1]


def rel_close(a, b, tol=1e-6):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


@pytest.fixture(scope="session")
def cu_du_study(tmp_path_factory):
    out = tmp_path_factory.mktemp("cu_du")
    truths = synth.cu_du_load_truths()
    manifest = synth.generate_study(truths, out / "study")
    return truths, manifest


@pytest.fixture(scope="session")
def cu_du_bundles(cu_du_study):
    return load_study(cu_du_study[1])


@pytest.fixture(scope="session")
def cu_du_report(cu_du_bundles):
    return report.analyze_bundles(cu_du_bundles)
