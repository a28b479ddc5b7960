"""Metric graphs: combinatorics, per-edge coefficients and vertex condition matrices.

Edge coordinates run from 0 to the edge length, with 0 placed at the
lexicographically smaller endpoint id.  Derivative traces are reported in the
direction away from the vertex (into the edge) unless stated otherwise.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GraphSpecError,
    LoopEdgeError,
    NegativePotentialError,
    NonpositiveConductanceError,
    NonpositiveLengthError,
    ParallelEdgeError,
    UnknownVertexError,
)


@dataclass(frozen=True)
class Edge:
    """Undirected edge with a fixed coordinate orientation.

    ``va`` sits at coordinate 0, ``vb`` at coordinate ``length``.  ``c`` and
    ``p`` are the per-edge constant conductance and potential.
    """

    index: int
    va: str
    vb: str
    length: float
    c: float = 1.0
    p: float = 0.0

    def endpoint(self, end: int) -> str:
        return self.va if end == 0 else self.vb


@dataclass(frozen=True)
class VertexConditions:
    """Vertex condition matrices for one vertex, in adjacency order."""

    vertex: str
    I: np.ndarray  # (d-1, d) bi-diagonal continuity rows
    A: np.ndarray  # (d, d) continuity rows plus a zero row
    B: np.ndarray  # (d, d) zero rows plus the conductance row
    C: np.ndarray  # (d,) conductance endpoint values


class MetricGraph:
    """Validated metric graph.  Immutable after construction."""

    def __init__(self, vertices: list[str], edges: list[Edge]):
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        self._vindex = {v: i for i, v in enumerate(self.vertices)}
        # adjacency: per vertex, ordered list of (edge index, end) with
        # end 0 meaning coordinate 0 of the edge meets the vertex
        adj: dict[str, list[tuple[int, int]]] = {v: [] for v in self.vertices}
        for e in self.edges:
            adj[e.va].append((e.index, 0))
            adj[e.vb].append((e.index, 1))
        self.adjacency = {v: tuple(ends) for v, ends in adj.items()}

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    def vertex_index(self, v: str) -> int:
        try:
            return self._vindex[v]
        except KeyError:
            raise UnknownVertexError(f"unknown vertex {v!r}") from None

    def degree(self, v: str) -> int:
        return len(self.adjacency[v])

    def incident(self, v: str) -> tuple[tuple[int, int], ...]:
        """Incident (edge index, end) pairs in adjacency order."""
        self.vertex_index(v)
        return self.adjacency[v]

    @property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    def n_continuity_rows(self) -> int:
        return 2 * self.m - self.n

    def continuity_rows(self) -> list[tuple[str, int]]:
        """Global continuity-row layout: (vertex, local row) per row.

        Vertices in canonical order; within a vertex the rows are the
        consecutive differences of the adjacency-ordered incident ends.
        """
        rows = []
        for v in self.vertices:
            for r in range(self.degree(v) - 1):
                rows.append((v, r))
        return rows

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for ei, end in self.adjacency[v]:
                w = self.edges[ei].endpoint(1 - end)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


def validate_graph(
    vertices: list[str],
    edges: list[tuple[str, str, float] | tuple[str, str, float, float, float]],
) -> MetricGraph:
    """Build a MetricGraph from raw data, enforcing the standing assumptions.

    Each edge is ``(va, vb, length)`` or ``(va, vb, length, c, p)``.  The
    coordinate origin is assigned to the lexicographically smaller endpoint.
    """
    vertices = [str(v) for v in vertices]
    if len(set(vertices)) != len(vertices):
        raise GraphSpecError("duplicate vertex ids")
    vset = set(vertices)
    built: list[Edge] = []
    seen_pairs: set[frozenset[str]] = set()
    for k, raw in enumerate(edges):
        if len(raw) == 3:
            va, vb, length = raw
            c, p = 1.0, 0.0
        else:
            va, vb, length, c, p = raw
        va, vb = str(va), str(vb)
        for v in (va, vb):
            if v not in vset:
                raise UnknownVertexError(f"edge {k}: unknown vertex {v!r}")
        if va == vb:
            raise LoopEdgeError(f"edge {k}: loop at vertex {va!r}")
        pair = frozenset((va, vb))
        if pair in seen_pairs:
            raise ParallelEdgeError(f"edge {k}: parallel edge {va!r}-{vb!r}")
        seen_pairs.add(pair)
        length = float(length)
        if not (length > 0.0 and np.isfinite(length)):
            raise NonpositiveLengthError(f"edge {k}: length {length} must be positive")
        c = float(c)
        if not (c > 0.0 and np.isfinite(c)):
            raise NonpositiveConductanceError(f"edge {k}: conductance {c} must be positive")
        p = float(p)
        if p < 0.0 or not np.isfinite(p):
            raise NegativePotentialError(f"edge {k}: potential {p} must be nonnegative")
        if vb < va:
            va, vb = vb, va
        built.append(Edge(index=len(built), va=va, vb=vb, length=length, c=c, p=p))
    g = MetricGraph(vertices, built)
    if not g.is_connected():
        warnings.warn("metric graph is disconnected", stacklevel=2)
    return g


def vertex_matrices(g: MetricGraph, v: str) -> VertexConditions:
    """Vertex condition matrices for ``v`` in the graph's adjacency order."""
    ends = g.incident(v)
    d = len(ends)
    I = np.zeros((d - 1, d)) if d > 1 else np.zeros((0, d))
    for r in range(d - 1):
        I[r, r] = 1.0
        I[r, r + 1] = -1.0
    A = np.vstack([I, np.zeros((1, d))])
    C = np.array([g.edges[ei].c for ei, _ in ends])
    B = np.zeros((d, d))
    B[-1, :] = C
    return VertexConditions(vertex=v, I=I, A=A, B=B, C=C)


# --- graph-file parser -------------------------------------------------------

_EDGE_KEYS = {"ends", "length", "c", "p"}


def load_graph(path: str) -> MetricGraph:
    """Parse a TOML graph file.

    Layout::

        [graph]
        vertices = ["v1", "v2", "v3"]

        [[edge]]
        ends = ["v1", "v2"]
        length = 1.0
        c = 1.0      # optional, default 1.0
        p = 0.0      # optional, default 0.0

    Unknown keys are rejected.
    """
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = set(data) - {"graph", "edge"}
    if unknown:
        raise GraphSpecError(f"unknown top-level keys: {sorted(unknown)}")
    gsec = data.get("graph", {})
    if set(gsec) - {"vertices"}:
        raise GraphSpecError(f"unknown [graph] keys: {sorted(set(gsec) - {'vertices'})}")
    vertices = gsec.get("vertices")
    if not vertices:
        raise GraphSpecError("graph file must list [graph].vertices")
    edges = []
    for k, esec in enumerate(data.get("edge", [])):
        unknown = set(esec) - _EDGE_KEYS
        if unknown:
            raise GraphSpecError(f"edge {k}: unknown keys {sorted(unknown)}")
        if "ends" not in esec or "length" not in esec:
            raise GraphSpecError(f"edge {k}: 'ends' and 'length' are required")
        ends = esec["ends"]
        if len(ends) != 2:
            raise GraphSpecError(f"edge {k}: 'ends' must have two entries")
        edges.append((ends[0], ends[1], esec["length"], esec.get("c", 1.0), esec.get("p", 0.0)))
    if not edges:
        raise GraphSpecError("graph file has no edges")
    return validate_graph(vertices, edges)


# --- convenience builders (used throughout the tests and CLI examples) ------


def interval(length: float = 1.0, c: float = 1.0, p: float = 0.0) -> MetricGraph:
    """Single edge: the unit interval as a two-vertex graph."""
    return validate_graph(["v0", "v1"], [("v0", "v1", length, c, p)])


def path_graph(n_edges: int = 2, length: float = 1.0, c: float = 1.0, p: float = 0.0) -> MetricGraph:
    verts = [f"v{i}" for i in range(n_edges + 1)]
    edges = [(f"v{i}", f"v{i+1}", length, c, p) for i in range(n_edges)]
    return validate_graph(verts, edges)


def star_graph(n_leaves: int = 3, length: float = 1.0, c: float = 1.0, p: float = 0.0) -> MetricGraph:
    verts = ["v0"] + [f"v{i}" for i in range(1, n_leaves + 1)]
    edges = [("v0", f"v{i}", length, c, p) for i in range(1, n_leaves + 1)]
    return validate_graph(verts, edges)
