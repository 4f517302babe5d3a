"""Balanced country-by-year panels of output per worker.

Values are normalized by the cross-sectional arithmetic mean of each year;
every downstream sample is built from the normalized (relative) values.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np


class PanelError(ValueError):
    """Input data cannot form a usable balanced panel."""


@dataclass(frozen=True)
class PanelDataset:
    countries: Tuple[str, ...]
    years: Tuple[int, ...]
    values: np.ndarray
    normalized: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        object.__setattr__(self, "countries", tuple(str(c) for c in self.countries))
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        if vals.shape != (len(self.countries), len(self.years)):
            raise PanelError(f"values shape {vals.shape} does not match "
                             f"{len(self.countries)} countries x {len(self.years)} years")
        if not self.countries or not self.years:
            raise PanelError("a panel needs at least one country and one year")
        if len(set(self.countries)) != len(self.countries):
            raise PanelError("duplicate country identifiers")
        if list(self.years) != list(range(self.years[0], self.years[0] + len(self.years))):
            raise PanelError("years must be contiguous and increasing")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            bad = np.argwhere(~(vals > 0) | ~np.isfinite(vals))[0]
            raise PanelError(f"non-positive value for {self.countries[bad[0]]} "
                             f"in {self.years[bad[1]]}")
        vals.flags.writeable = False
        norm = vals / vals.mean(axis=0, keepdims=True)
        norm.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "normalized", norm)

    @property
    def first_year(self) -> int:
        return self.years[0]

    @property
    def last_year(self) -> int:
        return self.years[-1]

    def year_index(self, year: int) -> int:
        if not self.first_year <= year <= self.last_year:
            raise PanelError(f"year {year} outside panel range {self.first_year}-{self.last_year}")
        return year - self.first_year

    def subset(self, countries: Iterable[str], renormalize: bool = False) -> "PanelDataset":
        """Panel restricted to ``countries``.

        By default relative values stay relative to the full-sample mean, so
        income groups remain comparable with the whole panel.
        """
        wanted = list(countries)
        index = {c: i for i, c in enumerate(self.countries)}
        missing = [c for c in wanted if c not in index]
        if missing:
            raise PanelError(f"unknown countries: {', '.join(missing)}")
        rows = [index[c] for c in wanted]
        sub = PanelDataset(tuple(wanted), self.years, self.values[rows])
        if not renormalize:
            object.__setattr__(sub, "normalized", self.normalized[rows])
        return sub


@dataclass
class TransitionSample:
    """Observation tuples ``(x, y)`` or ``(x, y, z)`` spaced ``tau`` years apart."""

    tau: int
    tuples: np.ndarray
    labels: Optional[List[Tuple[str, int]]] = None

    def __post_init__(self):
        self.tuples = np.asarray(self.tuples, dtype=float)
        if self.tuples.ndim != 2 or self.tuples.shape[1] not in (2, 3):
            raise ValueError(f"tuples must have arity 2 or 3, got shape {self.tuples.shape}")
        if self.tuples.shape[0] < 2:
            raise ValueError("a transition sample needs at least 2 tuples")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.labels is not None and len(self.labels) != self.tuples.shape[0]:
            raise ValueError("labels and tuples differ in length")

    @property
    def arity(self) -> int:
        return self.tuples.shape[1]

    @property
    def n(self) -> int:
        return self.tuples.shape[0]

    def pairs(self, first: int = 0, second: int = 1) -> np.ndarray:
        return self.tuples[:, [first, second]]


def load_panel(source, value_column: str = "value", id_column: str = "country",
               year_column: str = "year") -> PanelDataset:
    """Read a long-format CSV/TSV (delimiter sniffed) into a balanced panel.

    The panel covers the years every country reports. A country missing a
    year inside that span is an error, as is any non-positive value.
    """
    text = source.read() if hasattr(source, "read") else open(source, encoding="utf-8").read()
    if not text.strip():
        raise PanelError("empty input")
    try:
        dialect = csv.Sniffer().sniff(text[:4096], delimiters=",;\t|")
    except csv.Error:
        dialect = csv.excel
    reader = csv.DictReader(io.StringIO(text), dialect=dialect)
    header = reader.fieldnames or []
    for col in (id_column, year_column, value_column):
        if col not in header:
            raise PanelError(f"column {col!r} not found; header is {header}")

    cells = {}
    by_country = defaultdict(set)
    bad_rows = []
    for lineno, row in enumerate(reader, start=2):
        cid = (row[id_column] or "").strip()
        raw_year = (row[year_column] or "").strip()
        raw_value = (row[value_column] or "").strip()
        if not cid or not raw_year or not raw_value:
            bad_rows.append(f"line {lineno}: missing field")
            continue
        try:
            year = int(float(raw_year))
            value = float(raw_value)
        except ValueError:
            bad_rows.append(f"line {lineno}: unparseable year/value {raw_year!r}/{raw_value!r}")
            continue
        if not np.isfinite(value) or value <= 0:
            bad_rows.append(f"line {lineno}: non-positive value {value} for {cid} {year}")
            continue
        if (cid, year) in cells:
            raise PanelError(f"duplicate entry for {cid} {year} (line {lineno})")
        cells[(cid, year)] = value
        by_country[cid].add(year)
    if bad_rows:
        shown = "; ".join(bad_rows[:10])
        more = f" (+{len(bad_rows) - 10} more)" if len(bad_rows) > 10 else ""
        raise PanelError(f"rejected {len(bad_rows)} row(s): {shown}{more}")
    if len(by_country) < 2:
        raise PanelError(f"need at least 2 countries, found {len(by_country)}")

    countries = list(by_country)
    common = set.intersection(*by_country.values())
    if len(common) < 2:
        raise PanelError("fewer than 2 years are common to all countries")
    first, last = min(common), max(common)
    for year in range(first, last + 1):
        if year not in common:
            absent = sorted(c for c in countries if year not in by_country[c])
            raise PanelError(f"unbalanced panel: {', '.join(absent)} missing year {year}")
    years = list(range(first, last + 1))
    values = np.array([[cells[(c, y)] for y in years] for c in countries])
    return PanelDataset(tuple(countries), tuple(years), values)


def make_transitions(panel: PanelDataset, start_year: int, tau: int, arity: int = 2) -> TransitionSample:
    """One tuple per country: values at ``start``, ``start + tau`` (and ``+ 2 tau``)."""
    if arity not in (2, 3):
        raise ValueError("arity must be 2 or 3")
    if tau <= 0:
        raise ValueError("tau must be positive")
    horizon = (arity - 1) * tau
    last_start = panel.last_year - horizon
    if not panel.first_year <= start_year <= last_start:
        raise PanelError(f"start year {start_year} with tau={tau}, arity={arity} exceeds the "
                         f"panel; admissible start years are {panel.first_year}-{last_start}")
    cols = [panel.year_index(start_year + k * tau) for k in range(arity)]
    tuples = panel.normalized[:, cols]
    labels = [(c, start_year) for c in panel.countries]
    return TransitionSample(tau, tuples, labels)


def pool_overlapping(panel: PanelDataset, first_start: int, last_start: int, tau: int,
                     arity: int = 2) -> TransitionSample:
    """Stack :func:`make_transitions` over every start year in the range."""
    if last_start < first_start:
        raise ValueError("last_start precedes first_start")
    parts = [make_transitions(panel, s, tau, arity) for s in range(first_start, last_start + 1)]
    tuples = np.vstack([p.tuples for p in parts])
    labels = [lab for p in parts for lab in p.labels]
    return TransitionSample(tau, tuples, labels)


def split_by_initial_income(panel: PanelDataset, base_year: int, groups: int = 3) -> List[List[str]]:
    """Partition countries into low/medium/high groups by relative income.

    Ties are broken by country identifier. When the count is not divisible
    by ``groups`` the extra countries go to the middle group(s).
    """
    if groups < 1:
        raise ValueError("groups must be positive")
    col = panel.year_index(base_year)
    order = sorted(range(len(panel.countries)),
                   key=lambda i: (panel.normalized[i, col], panel.countries[i]))
    n = len(order)
    if n < groups:
        raise PanelError(f"cannot split {n} countries into {groups} groups")
    base, extra = divmod(n, groups)
    sizes = [base] * groups
    middle = groups // 2
    if groups % 2:
        sizes[middle] += extra
    else:
        sizes[middle - 1] += extra // 2
        sizes[middle] += extra - extra // 2
    out, pos = [], 0
    for size in sizes:
        out.append([panel.countries[i] for i in order[pos:pos + size]])
        pos += size
    return out


def quantile_boundaries(panel: PanelDataset, probabilities: Sequence[float]) -> np.ndarray:
    """Per-year empirical quantiles (linear interpolation between order statistics)
    of the normalized cross-section; shape ``(years, len(probabilities))``."""
    probs = np.asarray(list(probabilities), dtype=float)
    if probs.size == 0:
        raise ValueError("need at least one probability")
    if np.any((probs <= 0) | (probs >= 1)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    if np.any(np.diff(probs) <= 0):
        raise ValueError("probabilities must be strictly increasing")
    return np.quantile(panel.normalized, probs, axis=0, method="linear").T


def quantile_label(p: float) -> str:
    pct = round(100 * p, 6)
    return f"p{int(pct)}" if pct == int(pct) else f"p{pct:g}"


def write_panel_csv(panel: PanelDataset, stream: TextIO, value_column="value",
                    id_column="country", year_column="year"):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([id_column, year_column, value_column])
    for i, c in enumerate(panel.countries):
        for j, y in enumerate(panel.years):
            writer.writerow([c, y, repr(float(panel.values[i, j]))])
