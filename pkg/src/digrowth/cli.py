"""Command-line front end.

Every subcommand takes ``--net`` (a YAML path or a bundled fixture name) and
``--set NAME=VALUE`` to override network parameters.  ``--config FILE`` on
the group reads default option values from YAML: top-level keys apply to
every subcommand, a mapping under a subcommand's name applies to that one
only, and flags given on the command line always win.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
Files are written through a temporary file and renamed, so a failed run
never leaves partial output.
"""

from __future__ import annotations

import functools
import json
import math
from pathlib import Path

import click
import numpy as np
import yaml

from . import __version__
from .analysis import entry_growth, lyapunov, monodromy, simulate as simulate_traj, sweep as run_sweep
from .bounds import H, circuit_bound, threshold_bound
from .circuits import (
    best_circuit,
    circuit_sort_key,
    enumerate_qtcircuits,
    enumerate_tcircuits,
    format_circuit,
    growth_index_qcircuit,
    growth_index_system,
    parse_circuit,
)
from .config import list_fixtures, load_network, write_atomic
from .errors import InvalidArgumentError, NoCircuitFound, NumericFailure, ValidationError
from .network import SystemParams
from .stochastic import DurationDistribution, parse_dist, simulate_random, stochastic_threshold_bound

EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class CliError(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _guard(func):
    """Map library exceptions to exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as exc:
            raise CliError("invalid input:\n  " + "\n  ".join(exc.problems), EXIT_VALIDATION) from None
        except (InvalidArgumentError, NoCircuitFound) as exc:
            raise CliError(str(exc), EXIT_VALIDATION) from None
        except NumericFailure as exc:
            raise CliError(f"numerical failure: {exc}", EXIT_NUMERIC) from None
        except OSError as exc:
            raise CliError(f"I/O error: {exc}", EXIT_IO) from None

    return wrapper


# -- option parsing --------------------------------------------------------------


def _overrides(pairs) -> dict[str, float]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise InvalidArgumentError(f"--set expects NAME=VALUE, got {pair!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InvalidArgumentError(f"--set {key}: {value!r} is not a number") from None
    return out


def parse_range(text: str, log: bool) -> np.ndarray:
    """``LO:HI:N`` into ``N`` points, geometric when ``log`` is set."""
    parts = str(text).split(":")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) != 3:
            raise ValueError
    except (ValueError, IndexError):
        raise InvalidArgumentError(f"range must be LO:HI:N, got {text!r}") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise InvalidArgumentError(f"range needs finite LO <= HI and N >= 1, got {text!r}")
    if log:
        if lo <= 0:
            raise InvalidArgumentError(f"log range needs LO > 0, got {text!r}")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _network(net, sets):
    if net is None:
        raise InvalidArgumentError("--net is required (a YAML path or one of: " + ", ".join(list_fixtures()) + ")")
    return load_network(net, _overrides(sets))


def _params(m, T) -> SystemParams:
    if m is None or T is None:
        raise InvalidArgumentError("--m and --T are required")
    return SystemParams(m, T)


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)


def _side(text: str, out: str | None) -> None:
    """Human-readable notes go to stdout, or stderr when stdout carries data."""
    click.echo(text, err=not out)


def _json(obj) -> str:
    def default(x):
        if isinstance(x, (np.floating, np.integer)):
            return x.item()
        if isinstance(x, np.ndarray):
            return x.tolist()
        raise TypeError(type(x))

    return json.dumps(obj, indent=2, default=default, allow_nan=True)


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        doc = yaml.safe_load(Path(value).read_text())
    except OSError as exc:
        raise CliError(f"I/O error: {exc}", EXIT_IO) from None
    except yaml.YAMLError as exc:
        raise CliError(f"invalid input: {value}: not valid YAML ({exc})", EXIT_VALIDATION) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise CliError(f"invalid input: {value}: expected a mapping", EXIT_VALIDATION)
    commands = cli.commands
    common = {k.replace("-", "_"): v for k, v in doc.items() if k not in commands}
    defaults = {}
    problems = []
    for name, cmd in commands.items():
        known = {p.name for p in cmd.params}
        section = doc.get(name) or {}
        if not isinstance(section, dict):
            problems.append(f"{name}: expected a mapping")
            continue
        section = {k.replace("-", "_"): v for k, v in section.items()}
        for key in section:
            if key not in known:
                problems.append(f"{name}.{key}: unknown option")
        merged = {k: v for k, v in common.items() if k in known}
        merged.update(section)
        if "set" in merged and isinstance(merged["set"], dict):
            merged["set"] = [f"{k}={v}" for k, v in merged["set"].items()]
        defaults[name] = merged
    all_known = set().union(*({p.name for p in c.params} for c in commands.values()))
    problems += [f"{k}: unknown option" for k in common if k not in all_known]
    if problems:
        raise CliError("invalid input:\n  " + "\n  ".join(problems), EXIT_VALIDATION)
    ctx.default_map = defaults
    return value


def net_options(func):
    func = click.option("--set", "set", multiple=True, metavar="NAME=VALUE", help="Override a network parameter.")(func)
    func = click.option("--net", metavar="PATH|FIXTURE", help="Network YAML file or bundled fixture name.")(func)
    return func


def point_options(func):
    func = click.option("--T", "T", type=float, help="Period length.")(func)
    func = click.option("--m", "m", type=float, help="Migration intensity.")(func)
    return func


out_option = click.option("--out", type=click.Path(dir_okay=False), help="Output file (default stdout).")


@click.group()
@click.version_option(__version__)
@click.option(
    "--config",
    type=click.Path(dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="YAML file with default option values.",
)
def cli():
    """Growth of populations on season-switched migration networks."""


# -- subcommands ---------------------------------------------------------------


@cli.command()
@net_options
@point_options
@click.option("--periods", type=float, default=1.0, show_default=True, help="Number of periods to simulate.")
@click.option("--dt", type=float, default=None, help="Sampling step (default T/100).")
@out_option
@_guard
def simulate(net, set, m, T, periods, dt, out):
    """Per-site log populations over time from x(0) = (1, ..., 1)."""
    network = _network(net, set)
    traj = simulate_traj(network, _params(m, T), periods=periods, dt=dt)
    _emit(traj.to_csv(), out)


@cli.command()
@net_options
@click.option("--q-max", type=int, default=1, show_default=True, help="Largest number of periods per circuit.")
@click.option("--max-walk-len", type=int, default=None, help="Longest leg for multi-period circuits (default n).")
@click.option("--limit", type=int, default=20, show_default=True, help="Circuits to list (0 for all).")
@out_option
@_guard
def circuits(net, set, q_max, max_walk_len, limit, out):
    """List circuits by growth index, best first."""
    network = _network(net, set)
    if q_max < 1:
        raise InvalidArgumentError("--q-max must be >= 1")
    walk = network.n if max_walk_len is None else max_walk_len
    found, truncated = [], False
    for q in range(1, q_max + 1):
        cs = enumerate_tcircuits(network) if q == 1 else enumerate_qtcircuits(network, q, max_walk_len=walk)
        truncated |= cs.truncated
        found.extend(cs)
    found.sort(key=lambda c: circuit_sort_key(network, c))
    rows = [(format_circuit(c), c.q, c.L, growth_index_qcircuit(network, c)) for c in found]
    positive = any(r[3] > 0 for r in rows)
    lines = [f"system growth index: {growth_index_system(network):.12g}"]
    if not rows:
        lines.append("no T-circuit" if q_max == 1 else f"no circuit with q <= {q_max}")
    else:
        shown = rows if limit <= 0 else rows[:limit]
        lines.append(f"{len(rows)} circuit(s){' (truncated)' if truncated else ''}; index per period:")
        lines += [f"  {idx:+.12g}  q={q}  L={L}  {text}" for text, q, L, idx in shown]
        if len(shown) < len(rows):
            lines.append(f"  ... {len(rows) - len(shown)} more")
    if positive:
        lines.append("a circuit with positive growth index exists: growth for small m and large T")
    elif q_max == 1:
        lines.append("no T-circuit with positive growth index")
    else:
        lines.append(f"no circuit with q <= {q_max} has a positive growth index")
    try:
        c, idx = best_circuit(network, q_max=q_max, max_walk_len=walk)
        lines.append(f"best: {format_circuit(c)} (q={c.q}, index {idx:.12g})")
    except NoCircuitFound:
        pass
    _emit("\n".join(lines) + "\n", out)


@cli.command()
@net_options
@point_options
@click.option("--q-max", type=int, default=1, show_default=True, help="Largest q for the circuit bound.")
@out_option
@_guard
def analyze(net, set, m, T, q_max, out):
    """Full report at one (m, T): Perron root, verdict and circuit bound."""
    network = _network(net, set)
    params = _params(m, T)
    try:
        circs = [best_circuit(network, q_max=q_max)[0]]
    except NoCircuitFound:
        circs = []
    try:
        report = lyapunov(network, params, circuits=circs)
    except NumericFailure as exc:
        report = getattr(exc, "report", None)
        if report is not None:
            _side(_json(report.as_dict()), out)
        raise
    diag = [entry_growth(network, params, i, i) for i in range(network.n)]
    data = report.as_dict()
    data["diagonal"] = diag
    data["diagonal_certifies_growth"] = max(diag) > 1.0
    lines = [
        f"m = {params.m:.12g}, T = {params.T:.12g}",
        f"lambda = {report.lam:.12g}",
        f"Lambda = {report.Lyapunov:.12g}",
        f"verdict: {report.verdict}",
        f"system growth index: {report.chi:.12g}",
        "monodromy diagonal: " + ", ".join(f"{d:.6g}" for d in diag),
    ]
    for c in report.circuits:
        h = "n/a (T below T_star)" if c.H is None else f"{c.H:.6g}"
        lines.append(f"circuit {c.circuit}: index {c.chi_c:.12g}, bound H = {h}")
    text = "\n".join(lines) + "\n---\n" + _json(data) + "\n"
    _emit(text, out)


@cli.command()
@net_options
@click.option("--m-range", required=False, metavar="LO:HI:N", help="Log-spaced m values.")
@click.option("--T-range", "T_range", required=False, metavar="LO:HI:N", help="Linearly spaced T values.")
@click.option("--threshold", is_flag=True, help="Also locate the growth threshold for each T.")
@click.option("--threshold-out", type=click.Path(dir_okay=False), help="Threshold CSV file (default OUT with _threshold suffix).")
@out_option
@_guard
def sweep(net, set, m_range, T_range, threshold, threshold_out, out):
    """Lyapunov exponent on an (m, T) grid as CSV."""
    network = _network(net, set)
    if not m_range or not T_range:
        raise InvalidArgumentError("--m-range and --T-range are required")
    grid = run_sweep(network, parse_range(m_range, log=True), parse_range(T_range, log=False), threshold=threshold)
    _emit(grid.to_csv(), out)
    if grid.errors:
        _side(f"{len(grid.errors)} cell(s) failed to converge", out)
    if threshold:
        text = grid.threshold_csv()
        if threshold_out is None and out:
            p = Path(out)
            threshold_out = str(p.with_name(p.stem + "_threshold" + p.suffix))
        if threshold_out:
            write_atomic(threshold_out, text)
        else:
            click.echo(text, nl=False)


@cli.command()
@net_options
@point_options
@click.option("--dist", default="degenerate", show_default=True, metavar="SPEC",
              help="degenerate, uniform:A:B or lognormal:MU:SIGMA factor on each season length.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cycles", type=int, default=1000, show_default=True)
@click.option("--burn-in", type=int, default=0, show_default=True, help="Cycles left out of the estimate.")
@click.option("--circuit", default=None, help="Circuit in bar notation for the per-cycle bound.")
@click.option("--epsilon", type=float, default=0.5, show_default=True, help="Slack in the threshold bound.")
@out_option
@_guard
def stochastic(net, set, m, T, dist, seed, cycles, burn_in, circuit, epsilon, out):
    """Monte-Carlo run with random season lengths; CSV plus JSON summary."""
    network = _network(net, set)
    params = _params(m, T)
    law = DurationDistribution.jitter(network, parse_dist(dist))
    c = parse_circuit(circuit, network.p, network.names) if circuit else None
    run = simulate_random(network, law, params, cycles, seed, circuit=c, burn_in=burn_in)
    summary = run.summary()
    summary["distribution"] = law.factors[0].spec()
    if c is not None:
        try:
            tb = stochastic_threshold_bound(network, c, law, params.T, epsilon)
            summary["threshold_bound"] = {
                "value": tb.value,
                "chi_stoc": tb.chi_stoc,
                "epsilon": tb.epsilon,
                "in_regime": tb.in_regime,
            }
        except InvalidArgumentError as exc:
            summary["threshold_bound"] = str(exc)
    _emit(run.to_csv(), out)
    _side(_json(summary), out)


@cli.command()
@net_options
@point_options
@click.option("--theta", type=float, default=None, help="Warm-up time per leg (default half the leg duration).")
@click.option("--q-max", type=int, default=1, show_default=True)
@click.option("--circuit", default=None, help="Circuit in bar notation (default: best circuit).")
@out_option
@_guard
def bound(net, set, m, T, theta, q_max, circuit, out):
    """Circuit lower bound and threshold bound, checked against the monodromy."""
    network = _network(net, set)
    if T is None:
        raise InvalidArgumentError("--T is required")
    if circuit:
        c = parse_circuit(circuit, network.p, network.names)
    else:
        c = best_circuit(network, q_max=q_max)[0]
    b = circuit_bound(network, c, theta, T=T)
    data = {
        "circuit": b.circuit,
        "q": b.q,
        "chi_c": b.chi_c,
        "L": b.L,
        "C": b.C,
        "mu": b.mu,
        "T_star": b.T_star,
        "thetas": list(b.thetas),
        "m_scale": b.m_scale,
    }
    if m is not None:
        params = SystemParams(m, T)
        h = H(m, T, b)
        M = np.linalg.matrix_power(monodromy(network, params), c.q)
        actual = float(M[c.start, c.start])
        data.update({"m": m, "T": T, "H": h, "entry": actual, "holds": actual >= h * (1 - 1e-12)})
    try:
        tb = threshold_bound(b, T)
        data["threshold"] = {
            "value": tb.value,
            "alpha": tb.alpha,
            "applicable": tb.applicable,
            "sufficient": tb.sufficient,
            "sufficient_applicable": tb.sufficient_applicable,
        }
    except InvalidArgumentError as exc:
        data["threshold"] = str(exc)
    _emit(_json(data) + "\n", out)


def main(argv=None):
    cli.main(args=argv, prog_name="digrowth")


if __name__ == "__main__":
    main()
