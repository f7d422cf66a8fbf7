from pathlib import Path

import numpy as np
import pytest

from gcskernel import eval_jacobian, eval_residuals

CORPUS = Path(__file__).resolve().parents[1] / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


def finite_difference_jacobian(system, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    J = np.zeros((system.n_residuals, system.n_variables))
    for j in range(system.n_variables):
        step = np.zeros_like(x)
        step[j] = h
        J[:, j] = (eval_residuals(system, x + step) - eval_residuals(system, x - step)) / (2 * h)
    return J


def assert_jacobian_matches_fd(system, x, tol=1e-6):
    J = eval_jacobian(system, x)
    F = finite_difference_jacobian(system, x)
    scale = np.maximum(1.0, np.abs(J))
    assert np.max(np.abs(J - F) / scale) <= tol
