import numpy as np
import pytest
import scipy.stats
import sympy

from oueigen.poly import Polynomial
from oueigen.system import random_stable_system, validate_system

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str = "") -> None:
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title}"
    if detail:
        line += f" [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def rotation(a=1.0, b=2.0, sigma=0.8):
    return validate_system(np.array([[-a, b], [-b, -a]]), sigma * np.eye(2))


def unit_1d():
    """``A = -1, B = sqrt(2)`` so that the generator is ``-x d/dx + d^2/dx^2``."""
    return validate_system(np.array([[-1.0]]), np.array([[np.sqrt(2.0)]]))


def random_system(d, seed, **kw):
    return random_stable_system(d, np.random.default_rng(seed), **kw)


def selfadjoint_system(seed, d=3):
    rng = np.random.default_rng(seed)
    U = scipy.stats.ortho_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
    A = -U @ np.diag(rng.uniform(0.5, 2.5, d)) @ U.T
    B = U @ np.diag(rng.uniform(0.3, 1.5, d)) @ U.T
    return validate_system(A, B)


def normal_system(seed, n_pairs=1, n_real=1, scaled_orthogonal=False):
    rng = np.random.default_rng(seed)
    d = 2 * n_pairs + n_real
    D = np.zeros((d, d))
    for k in range(n_pairs):
        a, b = rng.uniform(0.5, 2), rng.uniform(0.3, 2)
        D[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[-a, b], [-b, -a]]
    for j in range(2 * n_pairs, d):
        D[j, j] = -rng.uniform(0.5, 2.5)
    R = scipy.stats.ortho_group.rvs(d, random_state=rng)
    if scaled_orthogonal:
        B = rng.uniform(0.5, 1.5) * scipy.stats.ortho_group.rvs(d, random_state=rng)
    else:
        s = np.zeros(d)
        for k in range(n_pairs):
            s[2 * k : 2 * k + 2] = rng.uniform(0.3, 1.5)
        s[2 * n_pairs :] = rng.uniform(0.3, 1.5, n_real)
        B = R @ np.diag(s) @ R.T
    return validate_system(R @ D @ R.T, B)


def random_poly(rng, d, degree, nterms=8, complex_=True):
    exps = []
    while len(exps) < nterms:
        e = rng.integers(0, degree + 1, size=d)
        if e.sum() <= degree:
            exps.append(e)
    c = rng.normal(size=nterms) + (1j * rng.normal(size=nterms) if complex_ else 0)
    return Polynomial.from_arrays(d, np.array(exps), c)


def to_sympy(p, symbols):
    return sum(complex(c) * sympy.prod([s**int(k) for s, k in zip(symbols, e)]) for e, c in p.terms.items())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
