"""Shared data model: universes, datasets, query workloads.

A universe is a product domain U = U_1 x .. x U_d where attribute i takes
values in {0, .., m_i - 1} and is flagged categorical or numerical.  A
dataset is a multiset of points of U.  A workload is a collection of
distinct attribute subsets S with nonnegative weights p(S) and a query
kind: plain marginals (count rows matching a full assignment of S),
shifted product queries (each attribute contributes a factor
phi_j(t_j - x_j mod m_j)), or extended marginals (equality on categorical
attributes, prefix/suffix ranges on numerical ones).

Attributes are indexed from zero throughout; subsets are canonicalized to
sorted index tuples.  String-valued CSV cells are mapped to dense integer
codes at ingestion and the mapping is returned so reports can translate
back.

All types are immutable after construction and safe to share across
threads.
"""

import csv
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

CATEGORICAL = "categorical"
NUMERICAL = "numerical"
KINDS = ("marginal", "product", "extended")


class FourierMarginalsError(Exception):
    """Base class for all errors raised by this package."""


class SizeTooSmall(FourierMarginalsError):
    """An attribute domain has fewer than two values."""


class LengthMismatch(FourierMarginalsError):
    """Parallel per-attribute lists have different lengths."""


class AllZeroWeights(FourierMarginalsError):
    """Weight normalization was requested but every weight is zero."""


class AssignmentOutOfRange(FourierMarginalsError):
    """A target assignment uses an attribute index or value outside the universe."""


class Unestimable(FourierMarginalsError):
    """A zero-weight set cannot be answered from the released frequencies."""


@dataclass(frozen=True)
class Universe:
    """Product domain with per-attribute sizes and kind flags."""

    domain_sizes: tuple
    attribute_kind: tuple

    @property
    def d(self):
        return len(self.domain_sizes)

    @property
    def size(self):
        # python int, so large products never overflow; dense paths
        # enforce their own caps before materializing
        n = 1
        for m in self.domain_sizes:
            n *= int(m)
        return n

    def subdomain_sizes(self, members):
        return tuple(self.domain_sizes[j] for j in members)

    def subuniverse_size(self, members):
        n = 1
        for j in members:
            n *= int(self.domain_sizes[j])
        return n


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of a universe, stored as an (n, d) integer array."""

    universe: Universe
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != self.universe.d:
            rows = rows.reshape(-1, self.universe.d)
        object.__setattr__(self, "rows", rows)
        sizes = np.array(self.universe.domain_sizes)
        if rows.size and (rows.min() < 0 or (rows >= sizes).any()):
            raise AssignmentOutOfRange("dataset row outside the universe")

    @property
    def n(self):
        return self.rows.shape[0]


@dataclass(frozen=True, eq=False)
class Workload:
    """Weighted collection of query sets over one universe.

    sets are canonical sorted index tuples and must be distinct; weights
    are nonnegative and normalized only on request.  phi carries the
    per-attribute factor tables of product workloads (indicator of zero
    for attributes without an explicit table, which recovers marginals).
    """

    universe: Universe
    sets: tuple
    weights: np.ndarray
    kind: str = "marginal"
    phi: tuple = None

    def __post_init__(self):
        canon = tuple(tuple(sorted(int(j) for j in s)) for s in self.sets)
        for s in canon:
            if s and (s[0] < 0 or s[-1] >= self.universe.d):
                raise AssignmentOutOfRange(f"set {s} outside [0, {self.universe.d})")
            if len(set(s)) != len(s):
                raise AssignmentOutOfRange(f"set {s} repeats an attribute")
        if len(set(canon)) != len(canon):
            raise AssignmentOutOfRange("duplicate sets in workload")
        object.__setattr__(self, "sets", canon)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(canon),):
            raise LengthMismatch("one weight per set required")
        if (w < 0).any():
            raise AssignmentOutOfRange("negative weight")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if self.kind not in KINDS:
            raise AssignmentOutOfRange(f"unknown kind {self.kind!r}")
        if self.phi is not None:
            if len(self.phi) != self.universe.d:
                raise LengthMismatch("one phi table per attribute required")
            tables = []
            for m, table in zip(self.universe.domain_sizes, self.phi):
                table = tuple(float(v) for v in table)
                if len(table) != m:
                    raise LengthMismatch("phi table length must match domain size")
                tables.append(table)
            object.__setattr__(self, "phi", tuple(tables))

    def phi_tables(self):
        """Factor tables with the indicator-of-zero default filled in."""
        if self.phi is not None:
            return self.phi
        return tuple((1.0,) + (0.0,) * (m - 1)
                     for m in self.universe.domain_sizes)


@dataclass(frozen=True)
class SubsetClosure:
    """Family of subsets closed under taking subsets."""

    members: tuple

    def __contains__(self, s):
        return tuple(sorted(s)) in set(self.members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def build_universe(domain_sizes, kinds=None):
    """Validate sizes and kind flags and return a Universe.

    kinds defaults to all categorical.
    """
    sizes = tuple(int(m) for m in domain_sizes)
    if not sizes:
        raise SizeTooSmall("need at least one attribute")
    if kinds is None:
        kinds = (CATEGORICAL,) * len(sizes)
    kinds = tuple(kinds)
    if len(kinds) != len(sizes):
        raise LengthMismatch(f"{len(sizes)} sizes but {len(kinds)} kinds")
    for m in sizes:
        if m < 2:
            raise SizeTooSmall(f"domain size {m} is below 2")
    for k in kinds:
        if k not in (CATEGORICAL, NUMERICAL):
            raise AssignmentOutOfRange(f"unknown attribute kind {k!r}")
    return Universe(domain_sizes=sizes, attribute_kind=kinds)


def downward_closure(workload, positive_only=False):
    """Closure of the workload's sets under taking subsets.

    With positive_only, only sets contained in some member with positive
    weight are kept (the closure that matters for released frequencies).
    Members are ordered by (cardinality, lexicographic).
    """
    closure = set()
    for s, w in zip(workload.sets, workload.weights):
        if positive_only and w <= 0:
            continue
        for r in range(len(s) + 1):
            closure.update(itertools.combinations(s, r))
    members = tuple(sorted(closure, key=lambda s: (len(s), s)))
    return SubsetClosure(members=members)


def normalize_weights(workload):
    """Scale the weights to sum to one; membership and order unchanged."""
    total = float(workload.weights.sum())
    if total <= 0:
        raise AllZeroWeights("cannot normalize an all-zero weight vector")
    return Workload(universe=workload.universe, sets=workload.sets,
                    weights=workload.weights / total, kind=workload.kind,
                    phi=workload.phi)


def marginal_eval(dataset, members, target):
    """Exact count of dataset rows matching a partial assignment.

    members may be given in any order; target is aligned with it.
    """
    sizes = dataset.universe.domain_sizes
    members = tuple(int(j) for j in members)
    target = tuple(int(t) for t in target)
    if len(members) != len(target):
        raise LengthMismatch("one target value per member attribute")
    for j, t in zip(members, target):
        if not 0 <= j < dataset.universe.d:
            raise AssignmentOutOfRange(f"attribute index {j} out of range")
        if not 0 <= t < sizes[j]:
            raise AssignmentOutOfRange(f"value {t} outside domain of attribute {j}")
    if dataset.n == 0:
        return 0
    match = np.ones(dataset.n, dtype=bool)
    for j, t in zip(members, target):
        match &= dataset.rows[:, j] == t
    return int(match.sum())


def read_workload_json(source):
    """Parse a workload document.

    The document has the shape {"attributes": [{"name", "size", "kind"}],
    "sets": [{"attrs": [names], "weight"}], "kind": ..} plus an optional
    "phi" object mapping attribute names to factor tables for product
    workloads.  Accepts a path, a file object, or an already-parsed dict.
    Returns (universe, workload, attribute names).
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    attrs = doc["attributes"]
    names = [a["name"] for a in attrs]
    if len(set(names)) != len(names):
        raise AssignmentOutOfRange("duplicate attribute names")
    universe = build_universe([a["size"] for a in attrs],
                              [a.get("kind", CATEGORICAL) for a in attrs])
    index = {name: j for j, name in enumerate(names)}
    sets = []
    weights = []
    for entry in doc["sets"]:
        try:
            sets.append(tuple(index[name] for name in entry["attrs"]))
        except KeyError as exc:
            raise AssignmentOutOfRange(f"unknown attribute {exc.args[0]!r}")
        weights.append(float(entry.get("weight", 1.0)))
    kind = doc.get("kind", "marginal")
    phi = None
    if "phi" in doc and doc["phi"]:
        if kind != "product":
            raise AssignmentOutOfRange("phi tables only apply to product workloads")
        phi = [None] * universe.d
        for name, table in doc["phi"].items():
            if name not in index:
                raise AssignmentOutOfRange(f"unknown attribute {name!r} in phi")
            phi[index[name]] = tuple(float(v) for v in table)
        for j, table in enumerate(phi):
            if table is None:
                phi[j] = (1.0,) + (0.0,) * (universe.domain_sizes[j] - 1)
        phi = tuple(phi)
    workload = Workload(universe=universe, sets=tuple(sets),
                        weights=np.array(weights), kind=kind, phi=phi)
    return universe, workload, names


def read_dataset_csv(source, universe, names):
    """Read a dataset whose header row names the attributes.

    Columns may appear in any order and extra columns are rejected.
    Integer cells are validated against the domain; non-integer cells
    are assigned dense codes per attribute, in order of first
    appearance.  Returns (dataset, value_maps) where value_maps[name]
    gives the string-to-code mapping of attributes that needed one.
    """
    if hasattr(source, "read"):
        reader = csv.reader(source)
        rows = _parse_csv_rows(reader, universe, names)
    else:
        with open(source, newline="") as fh:
            rows = _parse_csv_rows(csv.reader(fh), universe, names)
    return rows


def _parse_csv_rows(reader, universe, names):
    header = next(reader, None)
    if header is None:
        raise LengthMismatch("empty dataset file")
    header = [h.strip() for h in header]
    position = {}
    for col, name in enumerate(header):
        if name not in names:
            raise AssignmentOutOfRange(f"unknown column {name!r}")
        position[name] = col
    if len(position) != len(names):
        missing = sorted(set(names) - set(position))
        raise LengthMismatch(f"missing columns: {', '.join(missing)}")
    order = [position[name] for name in names]
    value_maps = {name: {} for name in names}
    out = []
    for line, raw in enumerate(reader, start=2):
        if not raw:
            continue
        if len(raw) != len(header):
            raise LengthMismatch(f"line {line}: expected {len(header)} cells")
        point = []
        for j, col in enumerate(order):
            cell = raw[col].strip()
            try:
                value = int(cell)
            except ValueError:
                codes = value_maps[names[j]]
                if cell not in codes:
                    if len(codes) >= universe.domain_sizes[j]:
                        raise AssignmentOutOfRange(
                            f"line {line}: attribute {names[j]!r} has more "
                            f"than {universe.domain_sizes[j]} distinct values")
                    codes[cell] = len(codes)
                value = codes[cell]
            point.append(value)
        out.append(point)
    rows = np.array(out, dtype=np.int64).reshape(len(out), universe.d)
    dataset = Dataset(universe=universe, rows=rows)
    value_maps = {name: codes for name, codes in value_maps.items() if codes}
    return dataset, value_maps
