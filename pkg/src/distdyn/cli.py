"""Command-line front end.

Every command writes into ``--out``: its result files, the fully resolved
``config.json`` (rerunnable with ``--config``) and ``MANIFEST.sha256``.
Options come from built-in defaults, then the ``--config`` JSON file, then
explicit flags.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import __version__
from .density import (
    DegenerateSampleError,
    EstimationConfig,
    Grid1D,
    GridMismatchError,
    adaptive_density,
    pilot_density,
)
from .divergence import METRICS, canonical_metric
from .dynamics import ergodic_bands
from .io import (
    sha256_file,
    triangular_rows,
    write_density,
    write_ergodic,
    write_json,
    write_kernel,
    write_manifest,
    write_rows,
)
from .markov_tests import RejectionSamplingError, TestResult, first_order_tests, homogeneity_tests
from .montecarlo import (
    HOMOGENEITY_RHO,
    HOMOGENEITY_THETA,
    ORDER_RHO1,
    ORDER_RHO2,
    SAMPLE_SIZES,
    expand_grid,
    innovation_sd,
    run_power_study,
)
from .panel import (
    PanelDataset,
    PanelError,
    TransitionSample,
    load_panel,
    make_transitions,
    pool_overlapping,
    quantile_boundaries,
    quantile_label,
    split_by_initial_income,
)

logger = logging.getLogger("distdyn")

FORMAT_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
SUBSAMPLES = ("low", "medium", "high")
PRESETS = {"desk": (200, 200), "full": (1000, 1000)}


class ConfigError(ValueError):
    """Invalid or inconsistent options."""


class NumericalFailure(RuntimeError):
    """A computation finished but did not meet its numerical criterion."""


# -- option parsing ------------------------------------------------------------

def _int_list(text) -> List[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _float_list(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _metric_list(values) -> List[str]:
    if isinstance(values, str):
        values = [values]
    out = []
    for v in values:
        out.extend(canonical_metric(p) for p in str(v).split(",") if p.strip())
    return list(dict.fromkeys(out))


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes", "on"):
        return True
    if str(v).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_str(v):
    return None if v is None else str(v)


# name -> (converter, help); defaults live in DEFAULTS per command
OPTIONS = {
    "input": (_opt_str, "panel CSV/TSV in long format"),
    "value_column": (str, "column holding output per worker"),
    "id_column": (str, "country identifier column"),
    "year_column": (str, "year column"),
    "subsample": (_opt_str, "restrict to an initial-income third: low, medium or high"),
    "grid": (str, "evaluation grid lo:hi:m"),
    "alpha": (float, "adaptive sensitivity (0 gives the standard estimator)"),
    "floor": (float, "marginal density below which kernel rows are flagged"),
    "seed": (int, "master seed"),
    "workers": (int, "worker processes"),
    "tau": (int, "transition length in years"),
    "periods": (_opt_str, "periods a-b, comma separated; ';' separates independent sequences"),
    "overlap": (int, "years two consecutive periods may share"),
    "metric": (_metric_list, "divergence metric (repeatable): L1, L2, Linf, H"),
    "bootstrap": (int, "bootstrap replications B"),
    "weight": (str, "homogeneity weight: first or pooled"),
    "pool": (_bool, "pool overlapping transitions"),
    "generate_from": (str, "first-order generator: replicate or observed"),
    "coverage": (float, "pointwise band coverage"),
    "years": (_opt_str, "years to profile, comma separated"),
    "quantiles": (str, "quantile probabilities, comma separated"),
    "kind": (str, "homogeneity or first_order"),
    "preset": (str, "desk (runs=200, B=200) or full (runs=1000, B=1000)"),
    "runs": (int, "Monte Carlo runs per cell"),
    "p1": (_opt_str, "rho (homogeneity) or rho1 (first order) values"),
    "p2": (_opt_str, "theta (homogeneity) or rho2 (first order) values"),
    "n": (str, "sample sizes, comma separated"),
    "nominal": (float, "nominal rejection level"),
    "grid_points": (int, "Monte Carlo grid points per axis"),
    "innovation": (str, "read the innovation scale as sd or variance"),
    "sigma_eps": (float, "innovation scale"),
    "burn_in": (int, "burn-in length"),
}

_COMMON = {"seed": 0, "workers": 1}
_DATA = {"input": None, "value_column": "value", "id_column": "country", "year_column": "year",
         "subsample": None}
_EST = {"grid": "-1:4:100", "alpha": 0.5, "floor": 1e-8}

DEFAULTS: Dict[str, dict] = {
    "describe": {**_COMMON, **_DATA, **_EST, "years": "", "quantiles": "0.2,0.4,0.6,0.8"},
    "test-homogeneity": {**_COMMON, **_DATA, **_EST, "tau": 5, "periods": None, "overlap": 0,
                         "metric": ["L1", "H"], "bootstrap": 1000, "weight": "first"},
    "test-order": {**_COMMON, **_DATA, **_EST, "tau": 5, "periods": None, "pool": True,
                   "metric": list(METRICS), "bootstrap": 1000, "generate_from": "replicate"},
    "ergodic": {**_COMMON, **_DATA, **_EST, "tau": 5, "periods": None, "pool": True,
                "bootstrap": 1000, "coverage": 0.9},
    "montecarlo": {**_COMMON, "kind": "homogeneity", "preset": "desk", "runs": None, "bootstrap": None,
                   "p1": None, "p2": None, "n": ",".join(str(n) for n in SAMPLE_SIZES),
                   "metric": list(METRICS), "nominal": 0.05, "alpha": 0.0, "grid_points": 40,
                   "innovation": "sd", "sigma_eps": 0.15, "burn_in": 100},
    "selftest": {},
}

HELP = {
    "describe": "cross-sectional densities and quantile boundaries",
    "test-homogeneity": "bootstrap tests of time homogeneity across periods",
    "test-order": "bootstrap tests of the first-order Markov property",
    "ergodic": "ergodic density with bootstrap bands",
    "montecarlo": "size and power study on simulated data",
    "selftest": "quick numerical self-checks",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distdyn", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name], argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file of options (flags override it)")
        p.add_argument("--out", help="output directory" + (" (optional)" if name == "selftest" else ""))
        p.add_argument("-v", "--verbose", action="store_true", default=False)
        for key in defaults:
            flag = "--" + key.replace("_", "-")
            conv, text = OPTIONS[key]
            shown = defaults[key]
            text = f"{text} [default: {shown}]" if shown not in (None, "") else text
            if key == "metric":
                p.add_argument(flag, action="append", help=text)
            elif key == "pool":
                p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, help=text)
            else:
                p.add_argument(flag, dest=key, help=text)
    return parser


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags; every value converted."""
    defaults = DEFAULTS[command]
    merged = dict(defaults)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        if loaded.get("command", command) != command:
            raise ConfigError(f"config is for command {loaded['command']!r}, not {command!r}")
        options = loaded.get("options", loaded)
        for key, value in options.items():
            if key in ("command", "format_version", "version", "provenance"):
                continue
            key = key.replace("-", "_")
            if key not in defaults:
                raise ConfigError(f"unknown option {key!r} for {command}")
            merged[key] = value
    for key in defaults:
        if hasattr(args, key):
            merged[key] = getattr(args, key)
    out = {}
    for key, value in merged.items():
        conv = OPTIONS[key][0]
        try:
            out[key] = value if value is None else conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return out


# -- shared helpers ----------------------------------------------------------------

def estimation_config(cfg: dict) -> EstimationConfig:
    try:
        grid = Grid1D.parse(cfg["grid"])
    except ValueError as exc:
        raise ConfigError(f"bad --grid {cfg['grid']!r}: {exc}") from None
    if not 0.0 <= cfg["alpha"] <= 1.0:
        raise ConfigError("alpha must lie in [0, 1]")
    if not cfg["floor"] > 0:
        raise ConfigError("floor must be positive")
    return EstimationConfig(grid, cfg["alpha"], cfg["floor"])


def load_input(cfg: dict) -> Tuple[PanelDataset, str]:
    if not cfg.get("input"):
        raise ConfigError("--input is required")
    panel = load_panel(cfg["input"], cfg["value_column"], cfg["id_column"], cfg["year_column"])
    label = "all"
    if cfg.get("subsample"):
        which = cfg["subsample"].lower()
        if which not in SUBSAMPLES:
            raise ConfigError(f"subsample must be one of {', '.join(SUBSAMPLES)}")
        groups = split_by_initial_income(panel, panel.first_year, 3)
        panel = panel.subset(groups[SUBSAMPLES.index(which)])
        label = which
    return panel, label


def parse_period(text: str) -> Tuple[int, int]:
    try:
        a, b = (int(v) for v in text.strip().split("-"))
    except ValueError:
        raise ConfigError(f"period {text!r} is not of the form YYYY-YYYY") from None
    if b <= a:
        raise ConfigError(f"period {text!r} ends before it starts")
    return a, b


def parse_sequences(text: str) -> List[List[Tuple[int, int]]]:
    seqs = []
    for chunk in text.split(";"):
        if chunk.strip():
            seqs.append([parse_period(p) for p in chunk.split(",") if p.strip()])
    if not seqs:
        raise ConfigError("no periods given")
    return seqs


def default_sequences(first: int, last: int, tau: int) -> List[List[Tuple[int, int]]]:
    """Consecutive ``tau``-year periods from the first year.

    When they stop short of the last year, a final period ending at the last
    year is appended if it overlaps its neighbour by at most one year;
    otherwise a second sequence aligned on the last year is added.
    """
    if last - first < tau:
        raise ConfigError(f"tau={tau} does not fit in the panel span {first}-{last}")
    forward = [(a, a + tau) for a in range(first, last - tau + 1, tau)]
    end = forward[-1][1]
    if end == last:
        return [forward]
    tail = (last - tau, last)
    if end - tail[0] <= 1:
        return [forward + [tail]]
    backward = [(b - tau, b) for b in range(last, first + tau - 1, -tau)][::-1]
    return [forward, backward]


def period_label(p: Tuple[int, int]) -> str:
    return f"{p[0]}-{p[1]}"


def check_sequence(seq, tau: int, overlap: int):
    for a, b in seq:
        if b - a != tau:
            raise ConfigError(f"period {a}-{b} does not span tau={tau} years")
    distinct = list(dict.fromkeys(seq))
    for (a1, b1), (a2, b2) in zip(distinct, distinct[1:]):
        shared = b1 - a2
        if shared > overlap:
            raise ConfigError(f"periods {a1}-{b1} and {a2}-{b2} share {shared} year(s); "
                              f"allow it explicitly with --overlap {shared}")


def transitions_in(panel: PanelDataset, period: Tuple[int, int], tau: int, arity: int,
                   pool: bool) -> TransitionSample:
    """All ``arity``-tuples of ``tau`` spacing inside ``period``.

    Pooling takes every start year (overlapping transitions); otherwise starts
    advance by ``tau`` years.
    """
    a, b = period
    last_start = b - (arity - 1) * tau
    if last_start < a:
        raise ConfigError(f"period {a}-{b} is shorter than {(arity - 1) * tau} years")
    if pool:
        return pool_overlapping(panel, a, last_start, tau, arity)
    parts = [make_transitions(panel, s, tau, arity) for s in range(a, last_start + 1, tau)]
    return TransitionSample(tau, np.vstack([p.tuples for p in parts]),
                            [lab for p in parts for lab in p.labels])


class Output:
    """Tracks the files a command writes so the manifest covers exactly them."""

    def __init__(self, directory: str):
        self.dir = directory
        self.files: List[str] = []
        os.makedirs(directory, exist_ok=True)

    def path(self, name: str) -> str:
        full = os.path.join(self.dir, name)
        self.files.append(full)
        return full

    def finish(self, command: str, cfg: dict, provenance: dict = None):
        resolved = {"command": command, "format_version": FORMAT_VERSION, "version": __version__,
                    "seed": cfg.get("seed"), "options": cfg}
        if provenance:
            resolved["provenance"] = provenance
        write_json(self.path("config.json"), resolved)
        write_manifest(self.dir, self.files)


def _provenance(cfg: dict) -> dict:
    if cfg.get("input"):
        return {"input_sha256": sha256_file(cfg["input"])}
    return {}


# -- commands ------------------------------------------------------------------------

def cmd_describe(cfg: dict, out: Output) -> int:
    panel, _ = load_input(cfg)
    est = estimation_config(cfg)
    years = _int_list(cfg["years"] or "")
    try:
        probs = _float_list(cfg["quantiles"])
    except ValueError as exc:
        raise ConfigError(f"bad --quantiles: {exc}") from None
    for y in years:
        panel.year_index(y)  # range check before any work
    summary = {"countries": len(panel.countries), "years": [panel.first_year, panel.last_year],
               "densities": {}}
    for y in years:
        col = panel.normalized[:, panel.year_index(y)]
        dens, bw = adaptive_density(col, est.grid, est.alpha)
        write_density(out.path(f"density_{y}.csv"), dens)
        summary["densities"][str(y)] = {"integral": float(dens.integral), "bandwidth": bw.to_dict(),
                                       "local_maxima": [float(v) for v in dens.local_maxima()]}
        print(f"{y}: mass on grid {dens.integral:.4f}, modes at "
              f"{', '.join(f'{v:.2f}' for v in dens.local_maxima())}")
    q = quantile_boundaries(panel, probs)
    write_rows(out.path("quantiles.csv"), ["year"] + [quantile_label(p) for p in probs],
               ([y] + [repr(float(v)) for v in row] for y, row in zip(panel.years, q)))
    write_json(out.path("describe.json"), summary)
    return EXIT_OK


def cmd_test_homogeneity(cfg: dict, out: Output) -> int:
    panel, _ = load_input(cfg)
    est = estimation_config(cfg)
    tau = cfg["tau"]
    if cfg["periods"]:
        seqs, overlap = parse_sequences(cfg["periods"]), cfg["overlap"]
    else:
        seqs, overlap = default_sequences(panel.first_year, panel.last_year, tau), max(cfg["overlap"], 1)
    for seq in seqs:
        if len(seq) < 2:
            raise ConfigError("each period sequence needs at least two periods")
        check_sequence(seq, tau, overlap)
    metrics = cfg["metric"]
    if cfg["weight"] not in ("first", "pooled"):
        raise ConfigError("weight must be 'first' or 'pooled'")

    summary, records = [], []
    for k, seq in enumerate(seqs):
        samples = [make_transitions(panel, a, tau, 2) for a, _ in seq]
        labels = [period_label(p) for p in seq]
        cells = {m: {} for m in metrics}
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                res = homogeneity_tests(samples[i], samples[j], metrics, cfg["bootstrap"], cfg["seed"],
                                        est, cfg["weight"], f"{labels[i]}|{labels[j]}", cfg["workers"])
                for m in metrics:
                    cells[m][(i, j)] = res[m].asl
                    summary.append(res[m].csv_row())
                    records.append(res[m].to_dict())
        suffix = f"_seq{k + 1}" if len(seqs) > 1 else ""
        for m in metrics:
            header, rows = triangular_rows(labels, cells[m])
            write_rows(out.path(f"asl_{m}{suffix}.csv"), header, rows)
            print(f"ASL, {m}, tau={tau}" + (f", sequence {k + 1}" if suffix else ""))
            for row in rows:
                print("  " + row[0] + "  " + "  ".join(f"{float(c):.2f}" if c else "    " for c in row[1:]))
    write_rows(out.path("results.csv"), TestResult.CSV_HEADER, summary)
    write_json(out.path("results.json"), records)
    return EXIT_OK


def cmd_test_order(cfg: dict, out: Output) -> int:
    panel, _ = load_input(cfg)
    est = estimation_config(cfg)
    tau = cfg["tau"]
    periods = parse_sequences(cfg["periods"])[0] if cfg["periods"] else [(panel.first_year, panel.last_year)]
    if cfg["generate_from"] not in ("replicate", "observed"):
        raise ConfigError("generate_from must be 'replicate' or 'observed'")
    metrics = cfg["metric"]
    summary, records, table = [], [], []
    for p in periods:
        triples = transitions_in(panel, p, tau, 3, cfg["pool"])
        res = first_order_tests(triples, metrics, cfg["bootstrap"], cfg["seed"], est,
                                cfg["generate_from"], period_label(p), cfg["workers"])
        table.append([period_label(p), triples.n] + [repr(float(res[m].asl)) for m in metrics])
        for m in metrics:
            summary.append(res[m].csv_row())
            records.append(res[m].to_dict())
        print(f"{period_label(p)} (n={triples.n}): " +
              ", ".join(f"{m} asl={res[m].asl:.3f}" for m in metrics))
    write_rows(out.path("order_asl.csv"), ["period", "n"] + metrics, table)
    write_rows(out.path("results.csv"), TestResult.CSV_HEADER, summary)
    write_json(out.path("results.json"), records)
    return EXIT_OK


def cmd_ergodic(cfg: dict, out: Output) -> int:
    panel, _ = load_input(cfg)
    est = estimation_config(cfg)
    tau, B = cfg["tau"], cfg["bootstrap"]
    if B != 0 and B < 100:
        raise ConfigError("--bootstrap must be 0 (no bands) or at least 100")
    if not 0 < cfg["coverage"] <= 1:
        raise ConfigError("coverage must lie in (0, 1]")
    periods = parse_sequences(cfg["periods"])[0] if cfg["periods"] else [(panel.first_year, panel.last_year)]
    failed = []
    for p in periods:
        pairs = transitions_in(panel, p, tau, 2, cfg["pool"])
        res = ergodic_bands(pairs, B, cfg["coverage"], est, cfg["seed"], workers=cfg["workers"])
        stem = f"ergodic_{period_label(p)}"
        out.path(stem + ".csv"), out.path(stem + ".json")
        write_ergodic(os.path.join(out.dir, stem), res,
                      {"period": period_label(p), "tau": tau, "n": pairs.n, "pool": cfg["pool"]})
        write_kernel(out.path(f"kernel_{period_label(p)}.csv"), est.kernel(pairs.tuples))
        modes = res.density.local_maxima()
        print(f"{period_label(p)} (n={pairs.n}): {len(modes)} mode(s) at "
              f"{', '.join(f'{v:.2f}' for v in modes)}; iterations {res.iterations}")
        if not res.converged:
            failed.append(period_label(p))
    if failed:
        raise NumericalFailure(f"ergodic iteration did not converge for {', '.join(failed)} "
                               "(outputs written)")
    return EXIT_OK


def cmd_montecarlo(cfg: dict, out: Output) -> int:
    kind = cfg["kind"].replace("-", "_")
    if kind not in ("homogeneity", "first_order"):
        raise ConfigError("kind must be homogeneity or first_order")
    if cfg["preset"] not in PRESETS:
        raise ConfigError(f"preset must be one of {', '.join(PRESETS)}")
    runs, B = PRESETS[cfg["preset"]]
    runs = cfg["runs"] if cfg["runs"] is not None else runs
    B = cfg["bootstrap"] if cfg["bootstrap"] is not None else B
    d1, d2 = (HOMOGENEITY_RHO, HOMOGENEITY_THETA) if kind == "homogeneity" else (ORDER_RHO1, ORDER_RHO2)
    p1 = _float_list(cfg["p1"]) if cfg["p1"] else list(d1)
    p2 = _float_list(cfg["p2"]) if cfg["p2"] else list(d2)
    ns = _int_list(cfg["n"])
    if not (p1 and p2 and ns):
        raise ConfigError("empty parameter grid")
    sigma = innovation_sd(cfg["sigma_eps"], cfg["innovation"])
    table = run_power_study(kind, expand_grid(p1, p2, ns), cfg["metric"], runs, B, cfg["nominal"],
                            cfg["seed"], cfg["workers"], cfg["alpha"], cfg["grid_points"], sigma,
                            cfg["burn_in"])
    with open(out.path("power_table.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(table.to_csv())
    with open(out.path("power_table.json"), "w", encoding="utf-8", newline="") as fh:
        fh.write(table.to_json() + "\n")
    print(table.to_csv(), end="")
    return EXIT_OK


def selftest_checks() -> List[Tuple[str, bool, str]]:
    """Small closed-form checks of the numerical core."""
    from math import erf, exp, sqrt

    from .density import KernelGrid2D, DensityGrid1D
    from .divergence import divergences
    from .dynamics import compose, ergodic

    def gauss_rows(g, mean, sd):
        v = np.exp(-0.5 * ((g.points[None, :] - mean(g.points)[:, None]) / sd) ** 2)
        return KernelGrid2D(g, g, v / g.integrate(v, axis=1)[:, None], kind="conditional")

    checks = []
    g = Grid1D(-6, 7, 201)
    d = divergences(gauss_rows(g, lambda x: 0 * x, 1.0), gauss_rows(g, lambda x: 0 * x + 1, 1.0),
                    DensityGrid1D(g, np.ones(g.m)))
    l1 = 2 * erf(0.5 / sqrt(2))
    h = sqrt(1 - exp(-1 / 8))
    checks.append(("L1 shifted Gaussians", abs(d["L1"] - l1) <= 0.01, f"{d['L1']:.4f} vs {l1:.4f}"))
    checks.append(("Hellinger shifted Gaussians", abs(d["H"] - h) <= 0.005, f"{d['H']:.4f} vs {h:.4f}"))

    sd = 0.15 / sqrt(0.75)
    g = Grid1D(-3 * sd, 3 * sd, 100)
    k = gauss_rows(g, lambda x: 0.5 * x, 0.15)
    res = ergodic(k)
    truth = np.exp(-0.5 * (g.points / sd) ** 2) / (sd * sqrt(2 * np.pi))
    err = g.integrate(np.abs(res.density.values - truth))
    checks.append(("AR(1) ergodic density", res.converged and err <= 0.02, f"L1 {err:.4f}"))

    g = Grid1D(-6 * sd, 6 * sd, 200)
    two = compose(gauss_rows(g, lambda x: 0.5 * x, 0.15), gauss_rows(g, lambda x: 0.5 * x, 0.15))
    exact = gauss_rows(g, lambda x: 0.25 * x, 0.15 * sqrt(1.25))
    inner = np.abs(g.points) <= 3 * sd
    worst = g.integrate(np.abs(two.values - exact.values), axis=1)[inner].max()
    checks.append(("two-step AR(1) kernel", worst <= 0.02, f"max row L1 {worst:.4f}"))

    rng = np.random.default_rng(0)
    z = rng.normal(size=(200, 2))
    g = Grid1D(-3, 3, 20)
    same = np.array_equal(adaptive_density(z, g, 0.0)[0].values, pilot_density(z, g).values)
    checks.append(("alpha=0 equals pilot", same, ""))
    return checks


def cmd_selftest(cfg: dict, out: "Output | None") -> int:
    checks = selftest_checks()
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
    if out is not None:
        write_json(out.path("selftest.json"),
                   [{"check": n, "passed": bool(ok), "detail": d} for n, ok, d in checks])
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_NUMERIC


COMMANDS = {
    "describe": cmd_describe,
    "test-homogeneity": cmd_test_homogeneity,
    "test-order": cmd_test_order,
    "ergodic": cmd_ergodic,
    "montecarlo": cmd_montecarlo,
    "selftest": cmd_selftest,
}


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    command = args.command
    try:
        cfg = resolve(command, args)
        out_dir = getattr(args, "out", None)
        if out_dir is None and command != "selftest":
            raise ConfigError("--out is required")
        if "workers" in cfg and cfg["workers"] < 1:
            raise ConfigError("workers must be at least 1")
        out = Output(out_dir) if out_dir else None
        try:
            code = COMMANDS[command](cfg, out)
        finally:
            if out is not None and out.files:
                out.finish(command, cfg, _provenance(cfg))
        return code
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (PanelError, DegenerateSampleError, GridMismatchError, OSError, UnicodeDecodeError) as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA
    except (NumericalFailure, FloatingPointError, RejectionSamplingError, RuntimeError) as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
