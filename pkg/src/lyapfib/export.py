"""CSV emission/parsing and static SVG figures."""

from __future__ import annotations

import io
import math
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "lyapfib"

SIG_DIGITS = 12


def format_value(x) -> str:
    if isinstance(x, (bool,)):
        raise TypeError("booleans are not CSV values")
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if x == 0.0:
        return "0"
    if math.isnan(x):
        return "nan"
    return f"{x:.{SIG_DIGITS}g}"


def parse_value(text: str):
    if text.lstrip("-").isdigit():
        return int(text)
    return float(text)


def format_csv(header, rows) -> str:
    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()


def write_csv(fh, header, rows) -> None:
    fh.write(",".join(header) + "\n")
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        fh.write(",".join(format_value(v) for v in row) + "\n")


def parse_csv(text: str):
    """Inverse of :func:`format_csv`: ``(header, rows)`` with ints and floats."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ValueError("empty CSV")
    header = lines[0].split(",")
    rows = [tuple(parse_value(v) for v in line.split(",")) for line in lines[1:]]
    return header, rows


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def _save(fig: Figure, path) -> None:
    fig.savefig(Path(path), format="svg", metadata={"Date": None})


def plot_bounds(rows, path, reference: float | None = 0.2165) -> None:
    n = [r[0] for r in rows]
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(n, [r[2] for r in rows], "o-", color="tab:blue", label="lower")
    ax.plot(n, [r[3] for r in rows], "o-", color="tab:red", label="upper")
    if reference is not None:
        ax.axhline(reference, color="black", lw=0.8, ls="--", label=f"{reference}")
    ax.set_xlabel("n")
    ax.set_ylabel(r"$\lambda$")
    ax.legend()
    _save(fig, path)


def plot_lambda_curve(curve, path) -> None:
    rows = list(curve.rows())
    x = [r[0] for r in rows]
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    if curve.kind == "bernoulli":
        ax.plot(x, [r[2] for r in rows], color="tab:blue", lw=1)
        ax.plot(x, [r[3] for r in rows], color="tab:blue", lw=1)
        ax.plot(x, [r[1] for r in rows], ".", color="black", ms=3)
        ax.set_xlabel("p")
    else:
        ax.plot(x, [r[2] for r in rows], color="tab:blue", lw=1)
        ax.plot(x, [r[1] for r in rows], ".", color="black", ms=3)
        ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$\lambda$")
    ax.set_title(f"n = {curve.n}")
    _save(fig, path)


def plot_variance_curve(curve, path) -> None:
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(curve.params, curve.variance, ".", color="black", ms=3)
    ax.set_xlabel("p" if curve.kind == "bernoulli" else r"$\xi$")
    ax.set_ylabel("Var(L)")
    ax.set_title(f"k = {curve.k:g}, n = {curve.n}, m = {curve.m}")
    _save(fig, path)


def plot_invariant(sample, path, bins: int = 400) -> None:
    fig = Figure(figsize=(10, 4))
    ax1, ax2 = fig.subplots(1, 2)
    upper = max(4.0, float(sample.values.max()))
    ax1.hist(sample.values, bins=bins, range=(0.0, upper), color="tab:blue")
    ax1.set_title("Histogram")
    x, f = sample.ecdf()
    step = max(1, len(x) // 5000)
    ax2.plot(x[::step], f[::step], color="black", lw=1)
    ax2.set_xlim(0.0, upper)
    ax2.set_title("CDF")
    _save(fig, path)
