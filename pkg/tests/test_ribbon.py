import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ncphi4.errors import DomainError, StructuralError
from ncphi4.ribbon import (
    GraphKind,
    GraphParseError,
    RibbonGraph,
    builtin_graphs,
    classify,
    graph_from_pairing,
    parse_graph,
    power_count,
    power_count_loops,
    power_count_sweep,
    relabel,
    rotate_vertex,
    trace_faces,
)

GOLDEN = {
    "T1": (1, 1, 2, 2, 0, 1, GraphKind.PLANAR_REGULAR),
    "T2": (1, 1, 2, 2, 0, 1, GraphKind.PLANAR_REGULAR),
    "T3": (1, 1, 2, 2, 0, 2, GraphKind.PLANAR_IRREGULAR),
    "bubble": (2, 2, 4, 2, 0, 1, GraphKind.PLANAR_REGULAR),
}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_builtin_golden_set(name):
    graph = builtin_graphs()[name]
    n, L, N, F, g, B, kind = GOLDEN[name]
    gc = classify(graph)
    assert (graph.n, graph.L, graph.N) == (n, L, N)
    assert (gc.F, gc.g, gc.B, gc.kind) == (F, g, B, kind)


def test_crossed_pairing_is_nonplanar():
    # one vertex, both lines crossing: n - L + F = 1 - 2 + 1 = 0, so g = 1
    gc = classify(graph_from_pairing([(0, 2), (1, 3)], n=1, legs=[]))
    assert (gc.F, gc.g, gc.kind) == (1, 1, GraphKind.NONPLANAR)


def test_vacuum_double_tadpole_is_planar():
    gc = classify(graph_from_pairing([(0, 1), (2, 3)], n=1, legs=[]))
    assert (gc.F, gc.g, gc.B) == (3, 0, 0)
    assert gc.kind is GraphKind.PLANAR_REGULAR


def test_faces_partition_half_edges():
    graph = builtin_graphs()["bubble"]
    trace = trace_faces(graph)
    seen = [h for face in trace.faces for h in face]
    assert sorted(seen) == sorted(graph.half_edges())


def test_text_round_trip():
    for graph in builtin_graphs().values():
        again = parse_graph(graph.to_text(), name=graph.name)
        assert classify(again) == classify(graph)
        assert again.vertices == graph.vertices


def test_parse_comments_and_format():
    text = """
    # the irregular tadpole
    v a: p q r s   # cyclic order
    e: p r
    x: q
    x: s
    """
    gc = classify(parse_graph(text))
    assert gc.kind is GraphKind.PLANAR_IRREGULAR


@pytest.mark.parametrize(
    "text,line",
    [
        ("v 0: a b c\n", 1),
        ("v 0: a b c d\nv 1: a e f g\n", 2),
        ("v 0: a b c d\nq: a b\n", 2),
        ("v 0: a b c d\ne: a b c\n", 2),
        ("v 0: a b c d\nnot a line\n", 2),
    ],
)
def test_parse_errors_report_line(text, line):
    with pytest.raises(GraphParseError) as info:
        parse_graph(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize(
    "vertices,edges,legs",
    [
        ((("a", "b", "c", "d"),), (("a", "b"),), ("c",)),  # dangling d
        ((("a", "b", "c", "d"),), (("a", "b"), ("b", "c")), ("d",)),  # b used twice
        ((("a", "b", "c", "d"),), (("a", "z"),), ("b", "c", "d")),  # unknown z
        ((("a", "b", "c", "d"), ("e", "f", "g", "h")), (("a", "b"), ("e", "f")), ("c", "d", "g", "h")),
    ],
)
def test_structural_errors(vertices, edges, legs):
    with pytest.raises(StructuralError):
        RibbonGraph(vertices, edges, legs)


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(1, 4))
    half = list(range(4 * n))
    order = draw(st.permutations(half))
    n_legs = draw(st.sampled_from([k for k in range(0, 4 * n + 1, 2) if k <= 6]))
    legs, paired = order[:n_legs], order[n_legs:]
    pairs = list(zip(paired[::2], paired[1::2]))
    try:
        return graph_from_pairing(pairs, n, legs)
    except StructuralError:
        assume(False)


@settings(max_examples=200, deadline=None)
@given(connected_graphs(), st.data())
def test_classification_invariant_under_rotation_and_relabel(graph, data):
    base = classify(graph)
    assert base.g >= 0 and 1 <= base.F and base.B <= min(base.F, graph.N)
    index = data.draw(st.integers(0, graph.n - 1))
    shift = data.draw(st.integers(0, 3))
    assert classify(rotate_vertex(graph, index, shift)) == base
    mapping = {h: f"h{h}" for h in graph.half_edges()}
    assert classify(relabel(graph, mapping)) == base


@settings(max_examples=200, deadline=None)
@given(connected_graphs())
def test_mirror_image_has_same_genus(graph):
    mirrored = RibbonGraph(tuple(tuple(reversed(v)) for v in graph.vertices),
                           graph.internal_edges, graph.external_legs)
    a, b = classify(graph), classify(mirrored)
    assert (a.g, a.F, a.B) == (b.g, b.F, b.B)


def test_power_count_sweep_never_diverges():
    verdicts = power_count_sweep(50, 20)
    assert len(verdicts) == 50 * 10
    assert all(v.nc_convergent for v in verdicts)
    assert all(v.nc_degree == v.degree - 4 for v in verdicts)


def test_power_count_degree_matches_textbook():
    # commutative phi^4 in 4D: omega = 4 - N
    for N in range(2, 21, 2):
        for b in (1, 2, 7):
            assert power_count_loops(b, N).degree == 4 - N


def test_only_vacuum_corrections_could_diverge():
    assert not power_count_loops(1, 0).nc_convergent
    with pytest.raises(DomainError):
        power_count_loops(1, 3)


def test_power_count_of_classified_graphs():
    graphs = builtin_graphs()
    v = power_count(classify(graphs["bubble"]), n=2, N=4)
    assert (v.b, v.L, v.degree, v.nc_convergent) == (1, 2, 0, True)
    with pytest.raises(DomainError):
        power_count(classify(graphs["bubble"]), n=3, N=4)
    nonplanar = classify(graph_from_pairing([(0, 2), (1, 3)], n=1, legs=[]))
    with pytest.raises(DomainError):
        power_count(nonplanar, n=1, N=0)
