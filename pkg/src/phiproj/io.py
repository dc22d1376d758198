"""CSV ingestion, run configuration and JSON output."""
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .family import DomainMode, make_family
from .measures import DiscreteSignedMeasure, ProbabilityMeasure

__all__ = ["InputError", "Table", "RunConfig", "read_table", "load_config", "dumps"]

ID_COLUMN = "id"
WEIGHT_COLUMN = "weight"


class InputError(ValueError):
    """Malformed input file; the message carries line and field context."""


@dataclass
class Table:
    columns: list
    values: np.ndarray
    ids: list = None
    weights: np.ndarray = None

    @property
    def atoms(self):
        return self.ids if self.ids is not None else list(range(self.values.shape[0]))

    def column(self, name):
        return self.values[:, self.columns.index(name)]


def _parse_float(text, path, line, name):
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{path}: line {line}, field '{name}': cannot parse {text!r} as a number") from None
    if not math.isfinite(v):
        raise InputError(f"{path}: line {line}, field '{name}': value must be finite")
    return v


def read_table(path):
    """Read a header-first, comma-delimited UTF-8 CSV.

    ``id`` (string keys) and ``weight`` are optional reserved columns; every
    other column must be numeric.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise InputError(f"{path}: line 1: duplicate column names")
        data_cols = [h for h in header if h not in (ID_COLUMN, WEIGHT_COLUMN)]
        ids, weights, rows = [], [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
            rec = dict(zip(header, (c.strip() for c in row)))
            if ID_COLUMN in rec:
                ids.append(rec[ID_COLUMN])
            if WEIGHT_COLUMN in rec:
                weights.append(_parse_float(rec[WEIGHT_COLUMN], path, line, WEIGHT_COLUMN))
            rows.append([_parse_float(rec[c], path, line, c) for c in data_cols])
    if not rows:
        raise InputError(f"{path}: no data rows")
    if ids and len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate values in '{ID_COLUMN}' column")
    values = np.array(rows, dtype=float).reshape(len(rows), len(data_cols))
    return Table(data_cols, values, ids or None, np.array(weights) if weights else None)


def table_probability(table, renormalize=False):
    w = table.weights if table.weights is not None else np.full(len(table.values), 1.0 / len(table.values))
    try:
        return ProbabilityMeasure(w, atoms=table.atoms, coords=table.values,
                                  renormalize=renormalize or table.weights is None)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def table_measure(table):
    if table.weights is None:
        raise InputError(f"measure file needs a '{WEIGHT_COLUMN}' column")
    return DiscreteSignedMeasure(table.weights, atoms=table.atoms)


@dataclass
class RunConfig:
    gamma: float = 1.0
    nonnegative: bool = True
    tol: float = 1e-10
    max_iter: int = 200
    oracle: bool = False
    seed: int = 0
    targets: object = None
    renormalize: bool = False
    oracle_resolution: int = 401
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("config: tol must be positive")
        if int(self.max_iter) < 1:
            raise InputError("config: max_iter must be at least 1")

    def family(self):
        mode = DomainMode.NONNEGATIVE_EXTENSION if self.nonnegative else DomainMode.FULL_LINE
        try:
            return make_family(self.gamma, mode)
        except ValueError as exc:
            raise InputError(f"config: divergence: {exc}") from None

    def centering(self, columns):
        """Target per column, zero when none is given."""
        m = np.zeros(len(columns))
        if self.targets is None:
            return m
        if isinstance(self.targets, dict):
            unknown = set(self.targets) - set(columns)
            if unknown:
                raise InputError(f"config: targets for unknown columns {sorted(unknown)}")
            for i, c in enumerate(columns):
                m[i] = float(self.targets.get(c, 0.0))
            return m
        t = list(self.targets)
        if len(t) != len(columns):
            raise InputError(f"config: {len(t)} targets for {len(columns)} columns")
        return np.array(t, dtype=float)


_CONFIG_KEYS = {"divergence", "tol", "max_iter", "oracle", "seed", "targets",
                "renormalize", "oracle_resolution"}


def parse_config(raw, source="config"):
    if not isinstance(raw, dict):
        raise InputError(f"{source}: top level must be an object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise InputError(f"{source}: unknown keys {sorted(unknown)}")
    div = raw.get("divergence", {})
    if not isinstance(div, dict):
        raise InputError(f"{source}: field 'divergence' must be an object")
    try:
        return RunConfig(
            gamma=float(div.get("gamma", 1.0)),
            nonnegative=bool(div.get("nonnegative", True)),
            tol=float(raw.get("tol", 1e-10)),
            max_iter=int(raw.get("max_iter", 200)),
            oracle=bool(raw.get("oracle", False)),
            seed=int(raw.get("seed", 0)),
            targets=raw.get("targets"),
            renormalize=bool(raw.get("renormalize", False)),
            oracle_resolution=int(raw.get("oracle_resolution", 401)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{source}: {exc}") from None


def load_config(path):
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw, source=str(path))


def _encode(obj, indent, level):
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no infinities; null marks a missing or unbounded value
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in seq]
        return "[" + sep.join(items) + end + "]"
    if hasattr(obj, "value"):
        return _encode(obj.value, indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0)
