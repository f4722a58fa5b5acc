"""Attributed network container, file parsers and block-model samplers."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "AttributedNetwork",
    "ValidationError",
    "ParseError",
    "parse_edge_list",
    "format_edge_list",
    "parse_gml",
    "load_gml",
    "format_gml",
    "read_attributes_csv",
    "write_attributes_csv",
    "read_labels_csv",
    "write_labels_csv",
    "sample_sbm",
    "sample_four_group",
    "four_group_probabilities",
    "four_group_labels",
    "dataset_path",
]

DATA_DIR = Path(__file__).with_name("data")


class ValidationError(ValueError):
    """Input violates a structural or parameter constraint."""


class ParseError(ValueError):
    """Malformed input file. ``where`` is a line number or ``(line, column)``."""

    def __init__(self, message: str, where=None):
        self.where = where
        if where is not None:
            message = f"{message} (at {where})"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class AttributedNetwork:
    """Undirected simple graph with one real attribute per vertex.

    Edges are stored once as ``(i, j)`` with ``i < j``, sorted. Adjacency is a
    CSR layout over directed slots: slot ``e`` in row ``j`` is the directed
    edge ``j -> indices[e]`` and ``reverse[e]`` is the slot of the opposite
    direction.
    """

    n_vertices: int
    edges: np.ndarray
    attributes: np.ndarray
    vertex_ids: tuple | None = None
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)
    reverse: np.ndarray = field(init=False, repr=False)
    edge_slots: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n_vertices)
        if n < 0:
            raise ValidationError("n_vertices must be non-negative")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        attrs = np.asarray(self.attributes, dtype=float).reshape(-1)
        if attrs.shape[0] != n:
            raise ValidationError(f"expected {n} attributes, got {attrs.shape[0]}")
        if not np.all(np.isfinite(attrs)):
            raise ValidationError("attributes must be finite")
        if self.vertex_ids is not None and len(self.vertex_ids) != n:
            raise ValidationError("vertex_ids length must equal n_vertices")
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValidationError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                bad = edges[edges[:, 0] == edges[:, 1]][0]
                raise ValidationError(f"self-loop at vertex {bad[0]}")
        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        if edges.shape[0] > 1:
            dup = np.all(edges[1:] == edges[:-1], axis=1)
            if np.any(dup):
                i, j = edges[1:][dup][0]
                raise ValidationError(f"duplicate edge ({i}, {j})")

        m = edges.shape[0]
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        perm = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        indices = dst[perm]
        # position of each directed edge (by construction index) in CSR order
        where = np.empty(2 * m, dtype=np.int64)
        where[perm] = np.arange(2 * m)
        reverse = np.empty(2 * m, dtype=np.int64)
        fwd, bwd = where[:m], where[m:]
        reverse[fwd] = bwd
        reverse[bwd] = fwd
        edge_slots = np.stack([fwd, bwd], axis=1) if m else np.zeros((0, 2), np.int64)

        for name, value in (
            ("edges", edges),
            ("attributes", attrs),
            ("indptr", indptr),
            ("indices", indices),
            ("reverse", reverse),
            ("edge_slots", edge_slots),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "n_vertices", n)
        if self.vertex_ids is not None:
            object.__setattr__(self, "vertex_ids", tuple(self.vertex_ids))

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def slot(self, j: int, i: int) -> int:
        """Directed slot index of ``j -> i``; raises ``KeyError`` for non-edges."""
        lo, hi = self.indptr[j], self.indptr[j + 1]
        pos = lo + int(np.searchsorted(self.indices[lo:hi], i))
        if pos >= hi or self.indices[pos] != i:
            raise KeyError(f"({j}, {i}) is not an edge")
        return int(pos)

    def slot_sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_vertices), self.degrees)

    def with_attributes(self, attributes) -> "AttributedNetwork":
        return AttributedNetwork(self.n_vertices, self.edges, attributes, self.vertex_ids)

    def ids(self) -> Sequence:
        return self.vertex_ids if self.vertex_ids is not None else range(self.n_vertices)

    def same_as(self, other: "AttributedNetwork") -> bool:
        return (
            self.n_vertices == other.n_vertices
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.attributes, other.attributes)
        )


# --------------------------------------------------------------------------
# edge list


def parse_edge_list(text: str | Iterable[str]) -> AttributedNetwork:
    """Parse ``i j`` lines (``#`` starts a comment). Attributes are zero."""
    lines = text.splitlines() if isinstance(text, str) else text
    pairs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected two vertex ids, got {line!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer vertex id in {line!r}", lineno) from None
        if i < 0 or j < 0:
            raise ParseError("vertex ids must be non-negative", lineno)
        if i == j:
            raise ValidationError(f"self-loop at vertex {i} (line {lineno})")
        pairs.append((i, j))
    n = 1 + max((max(p) for p in pairs), default=-1)
    return AttributedNetwork(n, np.array(pairs, dtype=np.int64).reshape(-1, 2), np.zeros(n))


def format_edge_list(network: AttributedNetwork) -> str:
    out = [f"# {network.n_vertices} vertices, {network.n_edges} edges"]
    out += [f"{i} {j}" for i, j in network.edges]
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# GML subset

_GML_TOKEN = re.compile(r'\s*(?:(\[)|(\])|"([^"]*)"|([A-Za-z_][A-Za-z0-9_]*)|([-+]?[0-9.]+(?:[eE][-+]?\d+)?))')


def _gml_tokens(text: str):
    pos, n = 0, len(text)
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(p):
        ln = int(np.searchsorted(line_starts, p, side="right"))
        return (ln, p - line_starts[ln - 1] + 1)

    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            return
        m = _GML_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", where(pos))
        start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
        if m.group(1):
            yield "[", None, where(start)
        elif m.group(2):
            yield "]", None, where(start)
        elif m.group(3) is not None:
            yield "value", m.group(3), where(start)
        elif m.group(4):
            yield "key", m.group(4), where(start)
        else:
            s = m.group(5)
            try:
                v = int(s)
            except ValueError:
                try:
                    v = float(s)
                except ValueError:
                    raise ParseError(f"bad number {s!r}", where(start)) from None
            yield "value", v, where(start)
        pos = m.end()


def _gml_tree(text: str) -> list:
    """Nested ``[(key, value | list), ...]`` structure."""
    stack: list[list] = [[]]
    opened = []
    key = None
    key_pos = None
    for kind, value, pos in _gml_tokens(text):
        if kind == "key":
            if key is not None:
                raise ParseError(f"key {key!r} has no value", key_pos)
            key, key_pos = value, pos
        elif kind == "value":
            if key is None:
                raise ParseError(f"value {value!r} without key", pos)
            stack[-1].append((key, value))
            key = None
        elif kind == "[":
            if key is None:
                raise ParseError("'[' without key", pos)
            child: list = []
            stack[-1].append((key, child))
            stack.append(child)
            opened.append(pos)
            key = None
        else:
            if len(stack) == 1:
                raise ParseError("unbalanced ']'", pos)
            if key is not None:
                raise ParseError(f"key {key!r} has no value", key_pos)
            stack.pop()
            opened.pop()
    if key is not None:
        raise ParseError(f"key {key!r} has no value", key_pos)
    if len(stack) != 1:
        raise ParseError("unbalanced '[' (never closed)", opened[-1])
    return stack[0]


def parse_gml(text: str) -> tuple[AttributedNetwork, np.ndarray | None]:
    """Parse the ``graph/node/edge`` GML subset.

    Node ids are remapped to dense indices in file order and kept in
    ``vertex_ids``. When every node carries ``value``, the distinct values
    (sorted) are mapped to ``0..L-1`` and returned as ground-truth labels.
    """
    tree = _gml_tree(text)
    graphs = [v for k, v in tree if k == "graph"]
    if len(graphs) != 1 or not isinstance(graphs[0], list):
        raise ParseError("expected exactly one 'graph [ ... ]' block")
    graph = graphs[0]

    ids, values = [], []
    raw_edges = []
    for k, v in graph:
        if k == "node":
            if not isinstance(v, list):
                raise ParseError("node must be a block")
            d = dict(v)
            if "id" not in d:
                raise ParseError(f"node #{len(ids)} without id")
            ids.append(d["id"])
            values.append(d.get("value"))
        elif k == "edge":
            if not isinstance(v, list):
                raise ParseError("edge must be a block")
            d = dict(v)
            if "source" not in d or "target" not in d:
                raise ParseError(f"edge #{len(raw_edges)} without source/target")
            raw_edges.append((d["source"], d["target"]))

    index = {}
    for node_id in ids:
        if node_id in index:
            raise ValidationError(f"duplicate node id {node_id}")
        index[node_id] = len(index)
    try:
        edges = [(index[s], index[t]) for s, t in raw_edges]
    except KeyError as exc:
        raise ValidationError(f"edge refers to unknown node {exc.args[0]}") from None

    n = len(ids)
    network = AttributedNetwork(n, np.array(edges, dtype=np.int64).reshape(-1, 2), np.zeros(n), tuple(ids))
    labels = None
    if n and all(v is not None for v in values):
        alphabet = sorted(set(values), key=lambda x: (isinstance(x, str), x))
        lookup = {v: i for i, v in enumerate(alphabet)}
        labels = np.array([lookup[v] for v in values], dtype=np.int64)
    return network, labels


def load_gml(path: str | Path) -> tuple[AttributedNetwork, np.ndarray | None]:
    return parse_gml(Path(path).read_text())


def format_gml(network: AttributedNetwork, labels=None) -> str:
    ids = network.ids()
    out = ["graph", "[", "  directed 0"]
    for v, node_id in enumerate(ids):
        out += ["  node", "  [", f"    id {node_id}"]
        if labels is not None:
            out.append(f"    value {int(labels[v])}")
        out.append("  ]")
    for i, j in network.edges:
        out += ["  edge", "  [", f"    source {ids[i]}", f"    target {ids[j]}", "  ]"]
    out.append("]")
    return "\n".join(out) + "\n"


def dataset_path(name: str) -> Path:
    """Resolve a bundled dataset name (``karate``, ``football``) or a file path."""
    p = Path(name)
    if p.suffix == ".gml" and p.exists():
        return p
    bundled = DATA_DIR / f"{name}.gml"
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"no dataset {name!r} (bundled: {sorted(q.stem for q in DATA_DIR.glob('*.gml'))})")


# --------------------------------------------------------------------------
# CSV side files


def _read_csv_column(text: str, column: str, cast):
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "vertex_id" not in reader.fieldnames or column not in reader.fieldnames:
        raise ParseError(f"expected header 'vertex_id,{column}'", 1)
    out = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            out[int(row["vertex_id"])] = cast(row[column])
        except (TypeError, ValueError):
            raise ParseError(f"bad row {row}", lineno) from None
    return out


def _align(network: AttributedNetwork, mapping: dict, what: str) -> list:
    try:
        return [mapping[v] for v in network.ids()]
    except KeyError as exc:
        raise ValidationError(f"{what} file has no entry for vertex {exc.args[0]}") from None


def read_attributes_csv(text: str, network: AttributedNetwork) -> np.ndarray:
    return np.array(_align(network, _read_csv_column(text, "value", float), "attribute"))


def write_attributes_csv(network: AttributedNetwork, attributes=None) -> str:
    attributes = network.attributes if attributes is None else attributes
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex_id", "value"])
    for v, d in zip(network.ids(), attributes):
        w.writerow([v, repr(float(d))])
    return buf.getvalue()


def read_labels_csv(text: str, network: AttributedNetwork) -> np.ndarray:
    return np.array(_align(network, _read_csv_column(text, "label", int), "label"), dtype=np.int64)


def write_labels_csv(network: AttributedNetwork, labels) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex_id", "label"])
    for v, x in zip(network.ids(), labels):
        w.writerow([v, int(x)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# samplers


def sample_sbm(n: int, labels, gamma_prime, seed) -> AttributedNetwork:
    """Draw every pair ``i < j`` independently with probability ``G'[x_i, x_j] / n``."""
    labels = np.asarray(labels, dtype=np.int64)
    gp = np.asarray(gamma_prime, dtype=float)
    if labels.shape != (n,):
        raise ValidationError(f"labels must have length {n}")
    if gp.ndim != 2 or gp.shape[0] != gp.shape[1]:
        raise ValidationError("gamma_prime must be square")
    if n and labels.max(initial=0) >= gp.shape[0]:
        raise ValidationError("label outside gamma_prime range")
    if not np.allclose(gp, gp.T, rtol=0, atol=1e-12):
        raise ValidationError("gamma_prime must be symmetric")
    if np.any(gp < 0) or np.any(gp > n):
        raise ValidationError("gamma_prime entries must lie in [0, n]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    prob = gp[labels[iu], labels[ju]] / n if n else np.zeros(0)
    hit = rng.random(iu.shape[0]) < prob
    return AttributedNetwork(n, np.stack([iu[hit], ju[hit]], axis=1), np.zeros(n))


FOUR_GROUP_SIZE = 32


def four_group_labels() -> np.ndarray:
    return np.repeat(np.arange(4), FOUR_GROUP_SIZE)


def four_group_probabilities(z_out) -> tuple[Fraction, Fraction]:
    """``(p_in, p_out)`` as exact fractions with ``31 p_in + 96 p_out = 16``."""
    z = Fraction(z_out)
    if not 0 <= z <= 16:
        raise ValidationError(f"z_out must lie in [0, 16], got {z_out}")
    p_out = z / 96
    p_in = (16 - 96 * p_out) / 31
    return p_in, p_out


def sample_four_group(z_out: float, seed) -> tuple[AttributedNetwork, np.ndarray]:
    """128-vertex, four-community benchmark with expected degree 16."""
    p_in, p_out = four_group_probabilities(z_out)
    n = 4 * FOUR_GROUP_SIZE
    gp = np.full((4, 4), float(p_out) * n)
    np.fill_diagonal(gp, float(p_in) * n)
    labels = four_group_labels()
    return sample_sbm(n, labels, gp, seed), labels
