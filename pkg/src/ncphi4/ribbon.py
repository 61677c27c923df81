"""Ribbon graphs of the Moyal phi^4 vertex.

A graph is a rotation system: each vertex lists its four half-edges in
cyclic order, internal lines pair half-edges, and the remaining half-edges
are external legs. Faces are the orbits of ``h -> sigma(alpha(h))`` where
``alpha`` crosses a line (and fixes an external leg, which is capped off)
and ``sigma`` steps to the next half-edge around the vertex.

Text format, one item per line (``#`` starts a comment)::

    v <id>: h1 h2 h3 h4     vertex, half-edges in cyclic order
    e: hA hB                internal line
    x: h                    external leg
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .errors import DomainError, StructuralError

VALENCE = 4


class GraphParseError(StructuralError):
    def __init__(self, message, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class GraphKind(str, enum.Enum):
    PLANAR_REGULAR = "planar_regular"
    PLANAR_IRREGULAR = "planar_irregular"
    NONPLANAR = "nonplanar"


@dataclass(frozen=True)
class RibbonGraph:
    vertices: tuple[tuple[str, ...], ...]
    internal_edges: tuple[tuple[str, str], ...]
    external_legs: tuple[str, ...] = ()
    vertex_ids: tuple[str, ...] | None = None
    name: str = ""
    combinatorial_factor: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(tuple(str(h) for h in v) for v in self.vertices))
        object.__setattr__(self, "internal_edges",
                           tuple((str(a), str(b)) for a, b in self.internal_edges))
        object.__setattr__(self, "external_legs", tuple(str(h) for h in self.external_legs))
        if self.vertex_ids is None:
            object.__setattr__(self, "vertex_ids", tuple(str(i) for i in range(len(self.vertices))))
        _validate(self)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def L(self) -> int:
        return len(self.internal_edges)

    @property
    def N(self) -> int:
        return len(self.external_legs)

    def half_edges(self) -> list[str]:
        return [h for v in self.vertices for h in v]

    def to_text(self) -> str:
        lines = [f"# {self.name}"] if self.name else []
        for vid, cyc in zip(self.vertex_ids, self.vertices):
            lines.append(f"v {vid}: " + " ".join(cyc))
        lines += [f"e: {a} {b}" for a, b in self.internal_edges]
        lines += [f"x: {h}" for h in self.external_legs]
        return "\n".join(lines) + "\n"


def _validate(graph: RibbonGraph) -> None:
    seen: set[str] = set()
    for cyc in graph.vertices:
        if len(cyc) != VALENCE:
            raise StructuralError(f"vertex {cyc} has valence {len(cyc)}, expected {VALENCE}")
        for h in cyc:
            if h in seen:
                raise StructuralError(f"half-edge {h!r} appears more than once")
            seen.add(h)
    covered: set[str] = set()
    for a, b in graph.internal_edges:
        for h in (a, b):
            if h not in seen:
                raise StructuralError(f"line uses unknown half-edge {h!r}")
            if h in covered:
                raise StructuralError(f"half-edge {h!r} is paired more than once")
            covered.add(h)
        if a == b:
            raise StructuralError(f"half-edge {a!r} is paired with itself")
    for h in graph.external_legs:
        if h not in seen:
            raise StructuralError(f"external leg uses unknown half-edge {h!r}")
        if h in covered:
            raise StructuralError(f"half-edge {h!r} is both paired and external")
        covered.add(h)
    dangling = seen - covered
    if dangling:
        raise StructuralError(f"dangling half-edges (neither paired nor external): {sorted(dangling)}")
    if not _connected(graph):
        raise StructuralError("graph is disconnected")


def _connected(graph: RibbonGraph) -> bool:
    if graph.n <= 1:
        return True
    owner = {h: i for i, cyc in enumerate(graph.vertices) for h in cyc}
    adj: dict[int, set[int]] = {i: set() for i in range(graph.n)}
    for a, b in graph.internal_edges:
        adj[owner[a]].add(owner[b])
        adj[owner[b]].add(owner[a])
    stack, reached = [0], {0}
    while stack:
        for j in adj[stack.pop()]:
            if j not in reached:
                reached.add(j)
                stack.append(j)
    return len(reached) == graph.n


def parse_graph(text: str, name: str = "") -> RibbonGraph:
    """Read the line format described in the module docstring."""
    vertices, vids, edges, legs = [], [], [], []
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise GraphParseError(f"expected '<kind>: ...', got {raw.strip()!r}", lineno)
        tokens = rest.split()
        head = head.split()
        if not head:
            raise GraphParseError("missing line kind", lineno)
        kind = head[0]
        if kind == "v":
            if len(head) != 2:
                raise GraphParseError("vertex line must be 'v <id>: h1 h2 h3 h4'", lineno)
            if len(tokens) != VALENCE:
                raise GraphParseError(f"vertex {head[1]} lists {len(tokens)} half-edges, expected {VALENCE}", lineno)
            for h in tokens:
                if h in where:
                    raise GraphParseError(f"half-edge {h!r} already used on line {where[h]}", lineno)
                where[h] = lineno
            vertices.append(tuple(tokens))
            vids.append(head[1])
        elif kind == "e":
            if len(head) != 1 or len(tokens) != 2:
                raise GraphParseError("line entry must be 'e: hA hB'", lineno)
            edges.append((tokens[0], tokens[1]))
        elif kind == "x":
            if len(head) != 1 or len(tokens) != 1:
                raise GraphParseError("leg entry must be 'x: h'", lineno)
            legs.append(tokens[0])
        else:
            raise GraphParseError(f"unknown line kind {kind!r}", lineno)
    try:
        return RibbonGraph(tuple(vertices), tuple(edges), tuple(legs), tuple(vids), name=name)
    except StructuralError as exc:
        if isinstance(exc, GraphParseError):
            raise
        raise GraphParseError(str(exc)) from None


class FaceTrace(NamedTuple):
    faces: list[tuple[str, ...]]
    broken: list[tuple[str, ...]]

    @property
    def F(self) -> int:
        return len(self.faces)

    @property
    def B(self) -> int:
        return len(self.broken)


def trace_faces(graph: RibbonGraph) -> FaceTrace:
    """Faces of the ribbon structure, with those touching an external leg marked broken."""
    sigma = {}
    for cyc in graph.vertices:
        for i, h in enumerate(cyc):
            sigma[h] = cyc[(i + 1) % len(cyc)]
    alpha = {h: h for h in graph.external_legs}
    for a, b in graph.internal_edges:
        alpha[a], alpha[b] = b, a
    legs = set(graph.external_legs)

    faces, broken = [], []
    visited: set[str] = set()
    for start in graph.half_edges():
        if start in visited:
            continue
        face = []
        h = start
        while h not in visited:
            visited.add(h)
            face.append(h)
            h = sigma[alpha[h]]
        face = tuple(face)
        faces.append(face)
        if legs.intersection(face):
            broken.append(face)
    return FaceTrace(faces, broken)


class GraphClass(NamedTuple):
    g: int
    F: int
    B: int
    kind: GraphKind


def classify(graph: RibbonGraph) -> GraphClass:
    """Genus from 2 - 2g = n - L + F, then planar regular / irregular / nonplanar."""
    trace = trace_faces(graph)
    twice_g = 2 - (graph.n - graph.L + trace.F)
    if twice_g < 0 or twice_g % 2:
        raise StructuralError(f"Euler count gives 2g = {twice_g}; the rotation system is inconsistent")
    g = twice_g // 2
    if g > 0:
        kind = GraphKind.NONPLANAR
    elif trace.B <= 1:
        # B = 0 only for vacuum graphs, which have no broken face to speak of.
        kind = GraphKind.PLANAR_REGULAR
    else:
        kind = GraphKind.PLANAR_IRREGULAR
    return GraphClass(g, trace.F, trace.B, kind)


def builtin_graphs() -> dict[str, RibbonGraph]:
    """The one-loop tadpoles T1, T2, T3 and the planar regular bubble.

    Tadpoles carry combinatorial factor 4, the bubble 4 * 4 * 4.
    """
    vertex = ("0", "1", "2", "3")
    return {
        "T1": RibbonGraph((vertex,), (("0", "1"),), ("2", "3"), name="T1", combinatorial_factor=4),
        "T2": RibbonGraph((vertex,), (("1", "2"),), ("3", "0"), name="T2", combinatorial_factor=4),
        "T3": RibbonGraph((vertex,), (("0", "2"),), ("1", "3"), name="T3", combinatorial_factor=4),
        "bubble": RibbonGraph(
            (vertex, ("4", "5", "6", "7")),
            (("2", "5"), ("3", "4")),
            ("0", "1", "6", "7"),
            name="bubble",
            combinatorial_factor=4 * 4 * 4,
        ),
    }


class PowerCountVerdict(NamedTuple):
    b: int
    L: int
    degree: int
    nc_degree: int
    nc_convergent: bool


def power_count_loops(b: int, N: int) -> PowerCountVerdict:
    """Power counting of a planar phi^4 graph with ``b`` loops and ``N`` legs.

    L = 2b - 2 + N/2 lines; the commutative superficial degree is 4b - 2L.
    Replacing one propagator by its NC correction costs four more powers in
    the denominator. The correction could only diverge if b >= L/2 + 1.
    """
    if b < 0 or N < 0 or N % 2:
        raise DomainError(f"need b >= 0 and even N >= 0, got b={b}, N={N}")
    L = 2 * b - 2 + N // 2
    degree = 4 * b - 2 * L
    # b >= L/2 + 1  <=>  2b >= L + 2, kept in integers
    divergent = 2 * b >= L + 2
    return PowerCountVerdict(b, L, degree, degree - 4, not divergent)


def power_count(graph_class: GraphClass, n: int, N: int) -> PowerCountVerdict:
    """Power-counting verdict for a planar graph, with b = F - 1 loops."""
    if graph_class.g != 0:
        raise DomainError("power counting with b = F - 1 only holds for planar graphs")
    verdict = power_count_loops(graph_class.F - 1, N)
    if verdict.L != 2 * n - N // 2:
        raise DomainError(
            f"inconsistent graph data: L = 2b - 2 + N/2 = {verdict.L} but 2n - N/2 = {2 * n - N // 2}"
        )
    return verdict


def power_count_sweep(b_max: int = 50, N_max: int = 20) -> list[PowerCountVerdict]:
    """Verdicts for every b in 1..b_max and even N in 2..N_max."""
    return [power_count_loops(b, N) for N in range(2, N_max + 1, 2) for b in range(1, b_max + 1)]


def rotate_vertex(graph: RibbonGraph, index: int, shift: int) -> RibbonGraph:
    """Copy of ``graph`` with one vertex's cyclic order rotated by ``shift``."""
    cyc = graph.vertices[index]
    shift %= len(cyc)
    vertices = list(graph.vertices)
    vertices[index] = cyc[shift:] + cyc[:shift]
    return RibbonGraph(tuple(vertices), graph.internal_edges, graph.external_legs,
                       graph.vertex_ids, graph.name, graph.combinatorial_factor)


def relabel(graph: RibbonGraph, mapping: Mapping[str, str]) -> RibbonGraph:
    m = lambda h: mapping.get(h, h)  # noqa: E731
    return RibbonGraph(
        tuple(tuple(m(h) for h in v) for v in graph.vertices),
        tuple((m(a), m(b)) for a, b in graph.internal_edges),
        tuple(m(h) for h in graph.external_legs),
        graph.vertex_ids, graph.name, graph.combinatorial_factor,
    )


def graph_from_pairing(pairs: Iterable[tuple[int, int]], n: int, legs: Iterable[int]) -> RibbonGraph:
    """Build a graph on ``n`` vertices labelled 0..4n-1 (vertex v owns 4v..4v+3)."""
    vertices = tuple(tuple(str(4 * v + j) for j in range(VALENCE)) for v in range(n))
    return RibbonGraph(vertices, tuple((str(a), str(b)) for a, b in pairs), tuple(str(h) for h in legs))
