"""One test per acceptance criterion, run on the default configuration.

Each test prints its ``[PASS]``/``[FAIL]`` line; the lines are also collected
into a summary section at the end of the pytest report.
"""

import pytest

from choquard_lsr.checks import CHECKS, Workbench, run_one
from choquard_lsr.config import RunConfig

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module")
def workbench(profile):
    return Workbench(RunConfig.from_dict(), profile)


def run(number, wb):
    res = run_one(number, wb)
    line = f"{res.line()} ({res.elapsed:.1f} s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, res.message
    return res


def test_01_ground_state(workbench):
    # fresh solve so the runtime bound is measured, not served from the fixture
    run(1, workbench)


def test_02_scaling(workbench):
    run(2, workbench)


def test_03_linearized_kernel(workbench):
    run(3, workbench)


def test_04_convolution(workbench):
    run(4, workbench)


def test_05_quasi_solution_decay(workbench):
    run(5, workbench)


def test_06_coercivity(workbench):
    run(6, workbench)


def test_07_contraction(workbench):
    run(7, workbench)


def test_08_correction_size(workbench):
    run(8, workbench)


def test_09_barriers(workbench):
    run(9, workbench)


def test_10_reduced_functional(workbench):
    run(10, workbench)


def test_11_concentration(workbench):
    run(11, workbench)


def test_12_hls(workbench):
    run(12, workbench)


def test_every_criterion_has_a_test():
    assert [n for n, _ in CHECKS] == list(range(1, 13))
