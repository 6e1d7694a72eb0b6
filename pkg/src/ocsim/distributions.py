"""Empirical distribution tables and the on-disk bundle format.

Every input distribution of the simulator (age pyramids, household sizes,
mortality, sentence lengths, ...) is a `DistributionTable` of one of three
kinds:

* ``categorical``      -- sample a bin label by probability mass
* ``piecewise-by-age`` -- sample an integer age uniformly inside a bin
                          chosen by probability mass
* ``scalar-rate``      -- per-bin rates (not masses), looked up by age or
                          by label; a single-bin table acts as one scalar

A bundle is a directory with one CSV per table, columns
``bin_label,lower_bound,upper_bound,mass`` plus an optional leading
``# kind=<kind>`` comment line. The bundle shipped under
``ocsim/data/distributions`` is synthetic: shapes are plausible but not
calibrated to any real city.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ocsim.errors import ConfigError

CATEGORICAL = "categorical"
PIECEWISE_BY_AGE = "piecewise-by-age"
SCALAR_RATE = "scalar-rate"
KINDS = (CATEGORICAL, PIECEWISE_BY_AGE, SCALAR_RATE)

MASS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Bin:
    label: str
    lower: float | None
    upper: float | None
    mass: float


@dataclass(frozen=True)
class DistributionTable:
    name: str
    kind: str
    bins: tuple[Bin, ...]
    description: str = ""
    _masses: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_masses", np.array([b.mass for b in self.bins], dtype=float)
        )

    def validate(self) -> None:
        """Raise ConfigError (naming this table) on any invariant breach."""
        path = f"distributions.{self.name}"
        if self.kind not in KINDS:
            raise ConfigError(path, f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if not self.bins:
            raise ConfigError(path, "table has no bins")
        for b in self.bins:
            if b.mass < 0:
                raise ConfigError(path, f"bin {b.label!r} has negative mass {b.mass}")
        if self.kind in (CATEGORICAL, PIECEWISE_BY_AGE):
            total = float(self._masses.sum())
            if abs(total - 1.0) > MASS_TOLERANCE:
                raise ConfigError(path, f"probability masses sum to {total!r}, expected 1")
        if self.kind == PIECEWISE_BY_AGE:
            self._validate_age_ranges(path, require_zero_start=True)
        if self.kind == SCALAR_RATE and self._has_ranges():
            self._validate_age_ranges(path, require_zero_start=False)

    def _has_ranges(self) -> bool:
        return all(b.lower is not None and b.upper is not None for b in self.bins)

    def _validate_age_ranges(self, path: str, require_zero_start: bool) -> None:
        if not self._has_ranges():
            raise ConfigError(path, "every bin needs lower_bound and upper_bound")
        ordered = sorted(self.bins, key=lambda b: b.lower)
        for b in ordered:
            if b.upper < b.lower:
                raise ConfigError(path, f"bin {b.label!r} has upper < lower")
        for prev, nxt in zip(ordered, ordered[1:]):
            if nxt.lower <= prev.upper:
                raise ConfigError(path, f"bins {prev.label!r} and {nxt.label!r} overlap")
            if self.kind == PIECEWISE_BY_AGE and nxt.lower != prev.upper + 1:
                raise ConfigError(
                    path, f"gap between bins {prev.label!r} and {nxt.label!r}"
                )
        if require_zero_start and ordered[0].lower != 0:
            raise ConfigError(path, "age ranges must start at 0")

    # -- sampling -----------------------------------------------------------

    def sample_label(self, rng: np.random.Generator) -> str:
        idx = rng.choice(len(self.bins), p=self._masses)
        return self.bins[idx].label

    def sample_bin(self, rng: np.random.Generator) -> Bin:
        return self.bins[rng.choice(len(self.bins), p=self._masses)]

    def sample_age_years(self, rng: np.random.Generator) -> int:
        """Pick a bin by mass, then an integer age uniformly inside it."""
        b = self.sample_bin(rng)
        return int(rng.integers(int(b.lower), int(b.upper) + 1))

    def sample_value(self, rng: np.random.Generator) -> float:
        """Sample a numeric value: uniform integer in the bin's range when
        bounds are present, otherwise the bin label parsed as a number."""
        b = self.sample_bin(rng)
        if b.lower is not None and b.upper is not None:
            return float(rng.integers(int(b.lower), int(b.upper) + 1))
        return float(b.label)

    # -- lookups ------------------------------------------------------------

    def rate_for_age(self, age_years: float) -> float:
        """Scalar-rate lookup by age; ages outside all bins rate 0."""
        for b in self.bins:
            if b.lower is not None and b.upper is not None and b.lower <= age_years <= b.upper:
                return b.mass
        return 0.0

    def rate_array(self, max_age: int = 200) -> np.ndarray:
        """Rates indexed by integer age 0..max_age (vectorized lookups)."""
        cached = getattr(self, "_rate_array", None)
        if cached is None or len(cached) != max_age + 1:
            arr = np.zeros(max_age + 1)
            for b in self.bins:
                if b.lower is not None and b.upper is not None:
                    lo = max(0, int(b.lower))
                    hi = min(max_age, int(b.upper))
                    arr[lo : hi + 1] = b.mass
            object.__setattr__(self, "_rate_array", arr)
            cached = arr
        return cached

    def rate_for_label(self, label: str) -> float:
        for b in self.bins:
            if b.label == label:
                return b.mass
        return 0.0

    @property
    def scalar(self) -> float:
        """Value of a single-bin scalar-rate table."""
        if len(self.bins) != 1:
            raise ConfigError(f"distributions.{self.name}", "expected a single-bin table")
        return self.bins[0].mass

    def mode_label(self) -> str:
        return self.bins[int(np.argmax(self._masses))].label

    def mass_by_label(self) -> dict[str, float]:
        return {b.label: b.mass for b in self.bins}


def _parse_optional(value: str) -> float | None:
    value = value.strip()
    return None if value in ("", "-", "none") else float(value)


def load_table(path: Path, name: str | None = None) -> DistributionTable:
    """Read one table CSV. Kind comes from a leading ``# kind=`` line and is
    inferred from the content when absent."""
    text = Path(path).read_text().splitlines()
    kind = None
    description = ""
    rows = []
    for line in text:
        if line.startswith("#"):
            body = line.lstrip("# ").strip()
            if body.startswith("kind="):
                kind = body.split("=", 1)[1].split()[0]
                if "description=" in body:
                    description = body.split("description=", 1)[1]
            else:
                description = body
            continue
        rows.append(line)
    reader = csv.DictReader(rows)
    bins = []
    for row in reader:
        bins.append(
            Bin(
                label=row["bin_label"].strip(),
                lower=_parse_optional(row["lower_bound"]),
                upper=_parse_optional(row["upper_bound"]),
                mass=float(row["mass"]),
            )
        )
    table_name = name or Path(path).stem
    if kind is None:
        kind = _infer_kind(bins)
    return DistributionTable(name=table_name, kind=kind, bins=tuple(bins), description=description)


def _infer_kind(bins: list[Bin]) -> str:
    total = sum(b.mass for b in bins)
    ranged = all(b.lower is not None and b.upper is not None for b in bins)
    if abs(total - 1.0) <= MASS_TOLERANCE:
        return PIECEWISE_BY_AGE if ranged else CATEGORICAL
    return SCALAR_RATE


def save_table(table: DistributionTable, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# kind={table.kind}")
        if table.description:
            fh.write(f" description={table.description}")
        fh.write("\n")
        writer = csv.writer(fh)
        writer.writerow(["bin_label", "lower_bound", "upper_bound", "mass"])
        for b in table.bins:
            writer.writerow(
                [
                    b.label,
                    "" if b.lower is None else _fmt_bound(b.lower),
                    "" if b.upper is None else _fmt_bound(b.upper),
                    repr(b.mass),
                ]
            )


def _fmt_bound(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


def load_bundle(directory: Path) -> dict[str, DistributionTable]:
    """Load every ``*.csv`` in a bundle directory, keyed by file stem."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError("distributions.bundle", f"not a directory: {directory}")
    tables = {}
    for path in sorted(directory.glob("*.csv")):
        tables[path.stem] = load_table(path)
    if not tables:
        raise ConfigError("distributions.bundle", f"no tables found in {directory}")
    return tables


def save_bundle(tables: Mapping[str, DistributionTable], directory: Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, table in tables.items():
        save_table(table, directory / f"{name}.csv")


def builtin_bundle_dir() -> Path:
    return Path(resources.files("ocsim").joinpath("data/distributions"))


def load_builtin_bundle() -> dict[str, DistributionTable]:
    return load_bundle(builtin_bundle_dir())


def validate_bundle(tables: Mapping[str, DistributionTable], required: Iterable[str]) -> None:
    for name in required:
        if name not in tables:
            raise ConfigError(f"distributions.{name}", "required table is missing")
    for table in tables.values():
        table.validate()


def table_to_json(table: DistributionTable) -> dict:
    return {
        "kind": table.kind,
        "description": table.description,
        "bins": [
            {"label": b.label, "lower": b.lower, "upper": b.upper, "mass": b.mass}
            for b in table.bins
        ],
    }


def table_from_json(name: str, payload: dict) -> DistributionTable:
    try:
        bins = tuple(
            Bin(
                label=str(b["label"]),
                lower=None if b.get("lower") is None else float(b["lower"]),
                upper=None if b.get("upper") is None else float(b["upper"]),
                mass=float(b["mass"]),
            )
            for b in payload["bins"]
        )
        return DistributionTable(
            name=name,
            kind=payload["kind"],
            bins=bins,
            description=payload.get("description", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"distributions.{name}", f"malformed table: {exc}") from exc
