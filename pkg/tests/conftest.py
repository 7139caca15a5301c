import numpy as np
import pytest
from scipy.integrate import solve_ivp

from digrowth.config import load_network
from digrowth.network import build_network

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Print and keep one acceptance line; they are repeated in the summary."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def random_metzler(rng, n, diag=(-3.0, 1.0), off=(0.0, 1.0), density=0.6):
    A = rng.uniform(*off, (n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(A, rng.uniform(*diag, n))
    return A


def random_schedule(rng, n, p, span=(0.1, 2.0)):
    return [(float(rng.uniform(*span)), random_metzler(rng, n)) for _ in range(p)]


def ode_oracle(schedule, x0, rtol=1e-12):
    """Integrate season by season with an explicit high-order Runge-Kutta."""
    x = np.asarray(x0, dtype=float)
    for d, A in schedule:
        sol = solve_ivp(lambda t, y: A @ y, (0.0, d), x, method="DOP853", rtol=rtol, atol=1e-14 * max(1.0, np.abs(x).max()))
        x = sol.y[:, -1]
    return x


def rk4_richardson(A, x0, t, steps=400):
    """Classical RK4 at two step sizes combined by Richardson extrapolation."""

    def rk4(h, k):
        x = np.asarray(x0, dtype=float)
        for _ in range(k):
            k1 = A @ x
            k2 = A @ (x + 0.5 * h * k1)
            k3 = A @ (x + 0.5 * h * k2)
            k4 = A @ (x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    coarse = rk4(t / steps, steps)
    fine = rk4(t / (2 * steps), 2 * steps)
    return fine + (fine - coarse) / 15.0


def chain_network(rates):
    """One season, links 0 -> 1 -> ... -> l."""
    n = len(rates)
    links = [[(i, i + 1) for i in range(n - 1)]]
    return build_network([list(rates)], links)


def rotating_chain(rates_by_season):
    """Three sites; in season k site k sends to site k+1 (mod 3)."""
    links = [[(k, (k + 1) % 3)] for k in range(3)]
    return build_network(rates_by_season, links)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture(scope="session")
def net33():
    return load_network("section33")


@pytest.fixture(scope="session")
def net44():
    return load_network("section44")


@pytest.fixture(scope="session")
def e33():
    return load_network("e33")


@pytest.fixture(scope="session")
def birds():
    return load_network("birds_source")
