"""Command-line surface: each experiment is a command, each run a manifest.

Every command parses descriptors once, runs the library, and writes flat
files into --out: CSV tables for anything plot-shaped, a JSON record for
fitted numbers, and always a manifest.json naming the command and every
option it ran with. Replaying a manifest (kronlab --manifest run.json)
reproduces the output files byte for byte; nothing here consults a clock,
an environment variable, or a random source.

Exit codes are part of the contract: 0 success, 2 bad input, 3 precision
budget refused, 4 scan budget exhausted (partial output still written),
5 not enough data to fit.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .approx import convergent_sequence, verify_sequence_properties
from .dim import box_count, box_dimension_fit, diophantine_dimension_fit, theoretical_bounds, holder_bound
from .errors import (
    BoundUndefinedError,
    BudgetExceededError,
    DescriptorError,
    InsufficientDataError,
    PrecisionBudgetError,
    RationalFrequencyError,
    WindowTooNarrowError,
)
from .kron import (
    FrequencyMatrix,
    WindowPolicy,
    almost_period_quality,
    inclusion_length_ladder,
    orbit_sample,
)
from .torus import DEFAULT_BITS, FrequencyTuple, PrecisionReal, TorusPoint
from ._fixedpoint import frac_to_unit_float

TOOL_VERSION = "0.1.0"

EXIT_VALIDATION = 2
EXIT_PRECISION = 3
EXIT_BUDGET = 4
EXIT_DATA = 5

DEFAULT_SCALES = "0.25,0.125,0.0625,0.03125,0.015625,0.0078125,0.00390625"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_manifest(outdir: Path, command: str, options: dict):
    _write_json(outdir / "manifest.json", {
        "tool": "kronlab",
        "version": TOOL_VERSION,
        "command": command,
        "options": options,
    })


def _outdir(out: str) -> Path:
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _parse_frequency(text: str, bits: int) -> FrequencyTuple:
    return FrequencyTuple.parse([d.strip() for d in text.split(",")], bits)


def _parse_target(text: str | None, bits: int, m: int) -> TorusPoint:
    if text is None or text.strip() == "":
        return TorusPoint([0.0] * m)
    parts = [d.strip() for d in text.split(",")]
    if len(parts) != m:
        raise ValueError(f"target has {len(parts)} coordinates, frequency has {m}")
    coords = []
    for d in parts:
        p = PrecisionReal.parse(d, bits)
        coords.append(frac_to_unit_float(p.frac_scaled, p.bits))
    return TorusPoint(coords)


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip() != ""]


# ---------------------------------------------------------------- runners
# Each runner takes plain JSON-friendly keyword arguments (exactly what
# the manifest stores) and returns an exit code.

def _run_convergents(freq: str, beta: float, k: int, precision: int,
                     out: str, fmt: str) -> int:
    outdir = _outdir(out)
    frequency = _parse_frequency(freq, precision)
    seq = convergent_sequence(frequency, beta, k)
    m = len(frequency)
    rows = []
    for i, (q, r) in enumerate(zip(seq.denominators, seq.residuals)):
        if i + 1 < len(seq.denominators):
            a_next = seq.partial_quotient_bounds[i]
            bound = seq.c_hat * (1.0 / seq.denominators[i + 1]) ** (1.0 / m)
        else:
            a_next = None
            bound = None
        rows.append((i + 1, q, r, a_next, bound))
    if fmt == "json":
        _write_json(outdir / "sequence.json", {
            "beta": seq.beta,
            "c_hat": seq.c_hat,
            "levels": [
                {"k": k_, "q": q, "residual": r, "a_next": a, "a1_bound": b}
                for k_, q, r, a, b in rows
            ],
        })
    else:
        _write_csv(outdir / "sequence.csv",
                   ["k", "q_k", "residual", "a_next", "a1_bound"], rows)
    diag = verify_sequence_properties(seq) if len(seq) >= 3 else None
    payload = {"beta": seq.beta, "c_hat": seq.c_hat, "levels": len(seq)}
    if diag is not None:
        payload.update({
            "growth_exponent": diag.growth_exponent,
            "growth_max_ratio": diag.growth_max_ratio,
            "tail_constant_eta1": diag.tail_constant,
            "gamma_low": diag.gamma_low,
            "gamma_high": diag.gamma_high,
            "amplitude": diag.amplitude,
        })
    _write_json(outdir / "diagnostics.json", payload)
    _write_manifest(outdir, "convergents", {
        "freq": freq, "beta": beta, "k": k,
        "precision": precision, "out": out, "fmt": fmt,
    })
    click.echo(f"levels 1..{len(seq)}: q ends at {seq.denominators[-1]}, "
               f"c_hat={seq.c_hat}")
    return 0


def _ladder_files(outdir: Path, rows):
    _write_csv(outdir / "ladder.csv",
               ["epsilon", "l_hat", "window_lo", "window_hi", "truncated"],
               [(r.epsilon, r.l_hat, r.window[0], r.window[1], r.truncated)
                for r in rows])
    sol_rows = []
    for r in rows:
        if r.scan is None:
            continue
        sols = r.scan.solutions.tolist()
        for i, q in enumerate(sols):
            gap = sols[i + 1] - q if i + 1 < len(sols) else None
            sol_rows.append((r.epsilon, q, gap))
    _write_csv(outdir / "solutions.csv", ["epsilon", "q", "gap_to_next"], sol_rows)


def _run_scan(freq: str, theta: str | None, eps: str, precision: int,
              out: str, fmt: str, seed_min: int, seed_factor: float,
              budget: int) -> int:
    outdir = _outdir(out)
    frequency = _parse_frequency(freq, precision)
    target = _parse_target(theta, precision, len(frequency))
    ladder = _parse_floats(eps)
    policy = WindowPolicy(seed_min=seed_min, seed_factor=seed_factor, budget=budget)
    rows = inclusion_length_ladder(frequency, target, ladder, policy)
    _ladder_files(outdir, rows)
    if fmt == "json":
        _write_json(outdir / "ladder.json", [
            {"epsilon": r.epsilon, "l_hat": r.l_hat,
             "window": list(r.window), "truncated": r.truncated}
            for r in rows
        ])
    _write_manifest(outdir, "scan", {
        "freq": freq, "theta": theta, "eps": eps, "precision": precision,
        "out": out, "fmt": fmt, "seed_min": seed_min,
        "seed_factor": seed_factor, "budget": budget,
    })
    dirty = sum(1 for r in rows if r.truncated)
    for r in rows:
        state = "truncated" if r.truncated else "clean"
        click.echo(f"eps={r.epsilon}: l_hat={r.l_hat} on {r.window} ({state})")
    return EXIT_BUDGET if dirty else 0


def _run_dimension(freq: str | None, theta: str | None, eps: str | None,
                   from_csv: str | None, m: int, n: int, nu: float,
                   d: float | None, precision: int, out: str, fmt: str,
                   seed_min: int, seed_factor: float, budget: int) -> int:
    outdir = _outdir(out)
    if from_csv is not None:
        pairs = []
        with open(from_csv, newline="") as f:
            for rec in csv.DictReader(f):
                pairs.append((float(rec["epsilon"]), float(rec["l_hat"]),
                              rec.get("truncated", "0") in ("1", "True", "true")))
        dims = m
    else:
        if freq is None or eps is None:
            raise ValueError("need --freq and --eps (or --from-csv)")
        frequency = _parse_frequency(freq, precision)
        target = _parse_target(theta, precision, len(frequency))
        policy = WindowPolicy(seed_min=seed_min, seed_factor=seed_factor, budget=budget)
        rows = inclusion_length_ladder(frequency, target, _parse_floats(eps), policy)
        _ladder_files(outdir, rows)
        pairs = [(r.epsilon, r.l_hat, r.truncated) for r in rows]
        dims = len(frequency)

    clean = [(e, l) for e, l, trunc in pairs if not trunc]
    dropped = len(pairs) - len(clean)
    if len(clean) < 4:
        raise InsufficientDataError(
            f"{len(clean)} clean rows after dropping {dropped}; need 4 to fit"
        )
    est = diophantine_dimension_fit(clean)

    ambient = (dims + n) if d is None else d
    bracket: dict = {"m": dims, "n": n, "nu": nu, "d": ambient}
    try:
        bb = theoretical_bounds(dims, n, nu, ambient)
        bracket["lower"] = bb.lower
        bracket["upper"] = bb.upper
    except BoundUndefinedError as exc:
        bb = None
        bracket["lower"] = (ambient - n) / n
        bracket["upper"] = None
        bracket["upper_note"] = str(exc)
    tol = 0.3
    if bb is not None:
        within = bb.lower - tol <= est.slope <= bb.upper + tol
    else:
        within = bracket["lower"] - tol <= est.slope
    _write_json(outdir / "estimate.json", {
        "slope": est.slope,
        "slope_lower": est.slope_lower,
        "slope_upper": est.slope_upper,
        "fit_residual": est.fit_residual,
        "samples": [list(p) for p in est.samples],
        "rows_dropped_truncated": dropped,
        "bracket": bracket,
        "tolerance": tol,
        "verdict": "within" if within else "outside",
    })
    _write_manifest(outdir, "dimension", {
        "freq": freq, "theta": theta, "eps": eps, "from_csv": from_csv,
        "m": m, "n": n, "nu": nu, "d": d, "precision": precision,
        "out": out, "fmt": fmt, "seed_min": seed_min,
        "seed_factor": seed_factor, "budget": budget,
    })
    click.echo(f"slope {est.slope:.4f} "
               f"[{est.slope_lower:.4f}, {est.slope_upper:.4f}], "
               f"verdict: {'within' if within else 'outside'}")
    return 0


def _run_orbit(matrix: str, lattice: str, count: int, step: float | None,
               scales: str, precision: int, out: str, fmt: str) -> int:
    outdir = _outdir(out)
    mat = FrequencyMatrix.parse(matrix, precision)
    points = orbit_sample(mat, lattice, count, step)
    _write_csv(outdir / "points.csv",
               [f"x{j}" for j in range(mat.m)],
               [tuple(p) for p in points])
    curve = box_count(points, _parse_floats(scales))
    _write_csv(outdir / "boxcounts.csv", ["scale", "count"],
               list(zip(curve.scales, curve.counts)))
    est = box_dimension_fit(curve)
    _write_json(outdir / "estimate.json", {
        "slope": est.slope,
        "slope_lower": est.slope_lower,
        "slope_upper": est.slope_upper,
        "fit_residual": est.fit_residual,
        "samples": [list(p) for p in est.samples],
        "excluded_saturated": [list(p) for p in est.excluded],
        "points_used": curve.points_used,
        "ambient_dim": curve.ambient_dim,
    })
    _write_manifest(outdir, "orbit", {
        "matrix": matrix, "lattice": lattice, "count": count, "step": step,
        "scales": scales, "precision": precision, "out": out, "fmt": fmt,
    })
    click.echo(f"{len(points)} points, slope {est.slope:.4f}")
    return 0


def _run_bounds(m: int, n: int, nu: float, d: float | None, alpha: float,
                out: str, fmt: str) -> int:
    outdir = _outdir(out)
    ambient = (m + n) if d is None else d
    payload: dict = {"inputs": {"m": m, "n": n, "nu": nu, "d": ambient, "alpha": alpha}}
    try:
        bb = theoretical_bounds(m, n, nu, ambient)
        payload["lower"] = bb.lower
        payload["upper"] = bb.upper
        payload["holder_upper"] = holder_bound(bb.upper, alpha)
    except BoundUndefinedError as exc:
        payload["lower"] = (ambient - n) / n
        payload["upper"] = None
        payload["upper_note"] = str(exc)
    _write_json(outdir / "bounds.json", payload)
    _write_manifest(outdir, "bounds", {
        "m": m, "n": n, "nu": nu, "d": d, "alpha": alpha, "out": out, "fmt": fmt,
    })
    upper = payload["upper"]
    click.echo(f"lower {payload['lower']}, upper "
               f"{'undefined' if upper is None else upper}")
    return 0


def _run_almost_period(freq: str, beta: float, k: int, k0: int, targets: str,
                       nu: float, precision: int, out: str, fmt: str) -> int:
    outdir = _outdir(out)
    frequency = _parse_frequency(freq, precision)
    seq = convergent_sequence(frequency, beta, k)
    record = almost_period_quality(seq, k0, _parse_floats(targets), nu)
    _write_csv(outdir / "periods.csv",
               ["target", "tau", "residual", "reeval_residual"],
               [(e.target, e.tau, e.residual, e.reeval_residual)
                for e in record.entries])
    _write_json(outdir / "quality.json", {
        "k0": record.k0,
        "nu": record.nu,
        "eta": record.eta,
        "max_residual": record.max_residual,
        "c2_hat": record.c2_hat,
        "max_reeval_gap": record.max_reeval_gap,
        "consistent": record.consistent,
    })
    _write_manifest(outdir, "almost-period", {
        "freq": freq, "beta": beta, "k": k, "k0": k0, "targets": targets,
        "nu": nu, "precision": precision, "out": out, "fmt": fmt,
    })
    click.echo(f"k0={record.k0}: worst residual {record.max_residual}, "
               f"c2_hat={record.c2_hat}")
    return 0


_RUNNERS = {
    "convergents": _run_convergents,
    "scan": _run_scan,
    "dimension": _run_dimension,
    "orbit": _run_orbit,
    "bounds": _run_bounds,
    "almost-period": _run_almost_period,
}


def _execute(command: str, options: dict):
    runner = _RUNNERS[command]
    try:
        code = runner(**options)
    except (DescriptorError, RationalFrequencyError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except PrecisionBudgetError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PRECISION)
    except BudgetExceededError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_BUDGET)
    except (InsufficientDataError, WindowTooNarrowError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    if code:
        sys.exit(code)


# ---------------------------------------------------------------- commands

_common = [
    click.option("--precision", default=DEFAULT_BITS, show_default=True,
                 help="fixed-point fractional bits for all reals"),
    click.option("--out", default=".", show_default=True,
                 help="directory for output files"),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                 default="csv", show_default=True),
]


def _with(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group(invoke_without_command=True)
@click.option("--manifest", "manifest_path", default=None,
              help="replay a saved manifest.json instead of giving a command")
@click.version_option(TOOL_VERSION, prog_name="kronlab")
@click.pass_context
def main(ctx, manifest_path):
    """Integer solutions of torus approximation systems, measured."""
    if ctx.invoked_subcommand is not None:
        return
    if manifest_path is None:
        click.echo(ctx.get_help())
        ctx.exit(0)
    data = json.loads(Path(manifest_path).read_text())
    if data.get("command") not in _RUNNERS:
        click.echo(f"error: manifest names unknown command {data.get('command')!r}",
                   err=True)
        sys.exit(EXIT_VALIDATION)
    _execute(data["command"], data["options"])


@main.command("convergents")
@click.option("--freq", required=True, help="frequency descriptor, e.g. golden-1")
@click.option("--beta", default=2.0, show_default=True)
@click.option("--k", default=12, show_default=True, help="number of levels")
@_with(_common)
def convergents_cmd(freq, beta, k, precision, out, fmt):
    """Build the geometric denominator ladder with its certificates."""
    _execute("convergents", {"freq": freq, "beta": beta, "k": k,
                             "precision": precision, "out": out, "fmt": fmt})


@main.command("scan")
@click.option("--freq", required=True, help="comma-separated descriptors")
@click.option("--theta", default=None, help="target point (default 0)")
@click.option("--eps", required=True, help="comma-separated epsilon ladder")
@click.option("--seed-min", default=10_000, show_default=True)
@click.option("--seed-factor", default=50.0, show_default=True)
@click.option("--budget", default=100_000_000, show_default=True)
@_with(_common)
def scan_cmd(freq, theta, eps, seed_min, seed_factor, budget, precision, out, fmt):
    """Enumerate solutions per epsilon and measure inclusion lengths."""
    _execute("scan", {"freq": freq, "theta": theta, "eps": eps,
                      "precision": precision, "out": out, "fmt": fmt,
                      "seed_min": seed_min, "seed_factor": seed_factor,
                      "budget": budget})


@main.command("dimension")
@click.option("--freq", default=None, help="comma-separated descriptors")
@click.option("--theta", default=None)
@click.option("--eps", default=None, help="comma-separated epsilon ladder")
@click.option("--from-csv", "from_csv", default=None,
              help="fit an existing ladder.csv instead of scanning")
@click.option("--m", default=1, show_default=True,
              help="system dimension when using --from-csv")
@click.option("--n", default=1, show_default=True)
@click.option("--nu", default=0.0, show_default=True)
@click.option("--d", default=None, type=float,
              help="ambient dimension for the bracket (default m+n)")
@click.option("--seed-min", default=10_000, show_default=True)
@click.option("--seed-factor", default=50.0, show_default=True)
@click.option("--budget", default=100_000_000, show_default=True)
@_with(_common)
def dimension_cmd(freq, theta, eps, from_csv, m, n, nu, d, seed_min,
                  seed_factor, budget, precision, out, fmt):
    """Fit the inclusion-length slope and compare to the bound bracket."""
    _execute("dimension", {"freq": freq, "theta": theta, "eps": eps,
                           "from_csv": from_csv, "m": m, "n": n, "nu": nu,
                           "d": d, "precision": precision, "out": out,
                           "fmt": fmt, "seed_min": seed_min,
                           "seed_factor": seed_factor, "budget": budget})


@main.command("orbit")
@click.option("--matrix", required=True,
              help="rows ';'-separated, entries ','-separated")
@click.option("--lattice", type=click.Choice(["integer", "real"]),
              default="integer", show_default=True)
@click.option("--count", default=4096, show_default=True)
@click.option("--step", default=None, type=float,
              help="real-grid spacing (default: golden conjugate)")
@click.option("--scales", default=DEFAULT_SCALES, show_default=False,
              help="comma-separated dyadic scales (default 2^-2..2^-8)")
@_with(_common)
def orbit_cmd(matrix, lattice, count, step, scales, precision, out, fmt):
    """Sample a matrix orbit on the torus and fit its box dimension."""
    _execute("orbit", {"matrix": matrix, "lattice": lattice, "count": count,
                       "step": step, "scales": scales,
                       "precision": precision, "out": out, "fmt": fmt})


@main.command("bounds")
@click.option("--m", required=True, type=int)
@click.option("--n", default=1, show_default=True)
@click.option("--nu", default=0.0, show_default=True)
@click.option("--d", default=None, type=float, help="ambient dimension (default m+n)")
@click.option("--alpha", default=1.0, show_default=True,
              help="Holder exponent for the composed ceiling")
@click.option("--out", default=".", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="json", show_default=True)
def bounds_cmd(m, n, nu, d, alpha, out, fmt):
    """Evaluate the theoretical dimension bracket."""
    _execute("bounds", {"m": m, "n": n, "nu": nu, "d": d, "alpha": alpha,
                        "out": out, "fmt": fmt})


@main.command("almost-period")
@click.option("--freq", required=True)
@click.option("--beta", default=2.0, show_default=True)
@click.option("--k", default=20, show_default=True)
@click.option("--k0", default=1, show_default=True)
@click.option("--targets", required=True, help="comma-separated real targets")
@click.option("--nu", default=0.0, show_default=True)
@_with(_common)
def almost_period_cmd(freq, beta, k, k0, targets, nu, precision, out, fmt):
    """Greedy almost periods for each target, with quality constants."""
    _execute("almost-period", {"freq": freq, "beta": beta, "k": k, "k0": k0,
                               "targets": targets, "nu": nu,
                               "precision": precision, "out": out, "fmt": fmt})


if __name__ == "__main__":
    main()
