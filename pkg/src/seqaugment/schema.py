"""Variable and cohort schema definitions plus the flat-text schema format.

A schema fixes the canonical variable order, each variable's kind
(numeric / categorical / binary) and domain, and the series length in
hours. The bundled reference schema describes a 20-variable hypotension
cohort sampled hourly for 48 hours: 9 numeric vitals/labs, 4 ordinal
categorical treatments/scores, and 7 binary measured-flags.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaMismatch

NUMERIC = "numeric"
CATEGORICAL = "categorical"
BINARY = "binary"
KINDS = (NUMERIC, CATEGORICAL, BINARY)

_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")


@dataclass(frozen=True)
class VariableSpec:
    """One column of the cohort: its kind and admissible values."""

    name: str
    kind: str
    unit: str = ""
    categories: tuple[str, ...] = ()
    numeric_range: tuple[float, float] | None = None

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"variable name {self.name!r} is not a valid identifier")
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == NUMERIC:
            if self.categories:
                raise ValueError(f"numeric variable {self.name!r} must not list categories")
            if self.numeric_range is not None:
                lo, hi = self.numeric_range
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ValueError(f"numeric_range of {self.name!r} must satisfy min < max")
        else:
            if self.numeric_range is not None:
                raise ValueError(f"{self.kind} variable {self.name!r} must not set numeric_range")
            n = len(self.categories)
            if self.kind == CATEGORICAL and n < 2:
                raise ValueError(f"categorical variable {self.name!r} needs >= 2 categories")
            if self.kind == BINARY and n != 2:
                raise ValueError(f"binary variable {self.name!r} needs exactly 2 categories")
            if len(set(self.categories)) != n:
                raise ValueError(f"duplicate categories in variable {self.name!r}")

    @property
    def is_discrete(self) -> bool:
        return self.kind in (CATEGORICAL, BINARY)

    def parse_cell(self, raw: str):
        """Parse a raw CSV cell into the variable's domain.

        Returns the parsed float (numeric) or category string (discrete).
        Raises ValueError with a reason when the cell is out of domain.
        """
        if self.kind == NUMERIC:
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise ValueError(f"{raw!r} is not a number") from None
            if not math.isfinite(value):
                raise ValueError(f"{raw!r} is not finite")
            if self.numeric_range is not None:
                lo, hi = self.numeric_range
                if not (lo <= value <= hi):
                    raise ValueError(f"{value} outside range [{lo}, {hi}]")
            return value
        raw = str(raw).strip()
        if raw not in self.categories:
            raise ValueError(f"{raw!r} is not one of {list(self.categories)}")
        return raw

    def category_index(self, value: str) -> int:
        return self.categories.index(value)


@dataclass(frozen=True)
class CohortSchema:
    """Ordered variable list and fixed per-patient series length (hours)."""

    variables: tuple[VariableSpec, ...]
    series_length: int

    def __post_init__(self):
        if self.series_length < 1:
            raise ValueError("series_length must be positive")
        if not self.variables:
            raise ValueError("schema needs at least one variable")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def numeric_variables(self) -> list[VariableSpec]:
        return [v for v in self.variables if v.kind == NUMERIC]

    @property
    def discrete_variables(self) -> list[VariableSpec]:
        return [v for v in self.variables if v.is_discrete]

    @property
    def numeric_positions(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == NUMERIC]

    @property
    def discrete_positions(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.is_discrete]

    def variable(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def to_text(self) -> str:
        """Canonical flat key-value serialization (also used for hashing)."""
        lines = [f"series_length = {self.series_length}"]
        for i, v in enumerate(self.variables, start=1):
            prefix = f"variable.{i:02d}"
            lines.append(f"{prefix}.name = {v.name}")
            lines.append(f"{prefix}.kind = {v.kind}")
            lines.append(f"{prefix}.unit = {v.unit}")
            if v.kind == NUMERIC:
                if v.numeric_range is not None:
                    lo, hi = v.numeric_range
                    lines.append(f"{prefix}.range = {lo!r}, {hi!r}")
            else:
                lines.append(f"{prefix}.categories = " + " | ".join(v.categories))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]


def parse_schema_text(text: str) -> CohortSchema:
    """Parse the flat key-value schema format produced by CohortSchema.to_text."""
    series_length = None
    entries: dict[int, dict[str, str]] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaMismatch(f"schema line {lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "series_length":
            try:
                series_length = int(value)
            except ValueError:
                raise SchemaMismatch(f"schema line {lineno}: series_length must be an integer") from None
            continue
        m = re.match(r"^variable\.(\d+)\.(name|kind|unit|range|categories)$", key)
        if not m:
            raise SchemaMismatch(f"schema line {lineno}: unknown key {key!r}")
        entries.setdefault(int(m.group(1)), {})[m.group(2)] = value
    if series_length is None:
        raise SchemaMismatch("schema is missing series_length")
    if not entries:
        raise SchemaMismatch("schema lists no variables")

    variables = []
    for idx in sorted(entries):
        fields = entries[idx]
        missing = {"name", "kind"} - set(fields)
        if missing:
            raise SchemaMismatch(f"variable.{idx:02d} is missing {sorted(missing)}")
        kind = fields["kind"]
        categories: tuple[str, ...] = ()
        numeric_range = None
        if kind == NUMERIC:
            if "range" in fields:
                parts = [p.strip() for p in fields["range"].split(",")]
                if len(parts) != 2:
                    raise SchemaMismatch(f"variable.{idx:02d}.range must be 'min, max'")
                numeric_range = (float(parts[0]), float(parts[1]))
        else:
            if "categories" not in fields:
                raise SchemaMismatch(f"variable.{idx:02d} ({kind}) must list categories")
            categories = tuple(c.strip() for c in fields["categories"].split("|"))
        try:
            variables.append(
                VariableSpec(
                    name=fields["name"],
                    kind=kind,
                    unit=fields.get("unit", ""),
                    categories=categories,
                    numeric_range=numeric_range,
                )
            )
        except ValueError as exc:
            raise SchemaMismatch(f"variable.{idx:02d}: {exc}") from None
    return CohortSchema(variables=tuple(variables), series_length=series_length)


def load_schema(path) -> CohortSchema:
    path = Path(path)
    if not path.exists():
        raise SchemaMismatch(f"schema file not found: {path}")
    return parse_schema_text(path.read_text(encoding="utf-8"))


def _gcs_categories() -> tuple[str, ...]:
    return tuple(str(s) for s in range(3, 16))


def hypotension_schema() -> CohortSchema:
    """Reference 20-variable hourly schema for a 48h hypotension cohort.

    9 numeric + 4 categorical + 7 binary measured-flag variables. Numeric
    ranges are generous physiologic clamp bounds; categorical class lists
    follow the source dataset's discretization.
    """
    variables = (
        VariableSpec("map", NUMERIC, "mmHg", numeric_range=(20.0, 200.0)),
        VariableSpec("diastolic_bp", NUMERIC, "mmHg", numeric_range=(10.0, 150.0)),
        VariableSpec("systolic_bp", NUMERIC, "mmHg", numeric_range=(30.0, 250.0)),
        VariableSpec(
            "fluid_boluses", CATEGORICAL, "mL",
            categories=("[0,250)", "[250,500)", "[500,1000)", ">=1000"),
        ),
        VariableSpec("urine", NUMERIC, "mL", numeric_range=(0.0, 2000.0)),
        VariableSpec(
            "vasopressors", CATEGORICAL, "mcg/kg/min",
            categories=("0", "(0,8.4)", "[8.4,20.28)", ">=20.28"),
        ),
        VariableSpec("alt", NUMERIC, "IU/L", numeric_range=(0.0, 5000.0)),
        VariableSpec("ast", NUMERIC, "IU/L", numeric_range=(0.0, 5000.0)),
        VariableSpec(
            "fio2", CATEGORICAL, "fraction",
            categories=("<=0.2", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1.0"),
        ),
        VariableSpec("gcs", CATEGORICAL, "point", categories=_gcs_categories()),
        VariableSpec("po2", NUMERIC, "mmHg", numeric_range=(20.0, 600.0)),
        VariableSpec("lactic_acid", NUMERIC, "mmol/L", numeric_range=(0.0, 30.0)),
        VariableSpec("serum_creatinine", NUMERIC, "mg/dL", numeric_range=(0.0, 30.0)),
        VariableSpec("urine_m", BINARY, "", categories=("0", "1")),
        VariableSpec("alt_ast_m", BINARY, "", categories=("0", "1")),
        VariableSpec("fio2_m", BINARY, "", categories=("0", "1")),
        VariableSpec("gcs_m", BINARY, "", categories=("0", "1")),
        VariableSpec("po2_m", BINARY, "", categories=("0", "1")),
        VariableSpec("lactic_acid_m", BINARY, "", categories=("0", "1")),
        VariableSpec("serum_creatinine_m", BINARY, "", categories=("0", "1")),
    )
    return CohortSchema(variables=variables, series_length=48)
