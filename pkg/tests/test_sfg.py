import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import K1064, rel
from optocool.constants import C
from optocool.plants import MirrorParams, mirror_graph, mirror_plant
from optocool.sfg import GraphError, SignalFlowGraph, solve_all, transfer
from optocool.twophoton import (
    E_P,
    E_Q,
    QuadratureMatrix,
    Response,
    ScalarResponse,
    SingularityError,
    identity,
    make_grid,
)


def chain(*gains):
    g = SignalFlowGraph().add_source("a", 1).add_sink("b", 1)
    prev = "a"
    for i, k in enumerate(gains[:-1]):
        g.add_node(f"n{i}", 1)
        g.add_edge(prev, f"n{i}", k)
        prev = f"n{i}"
    g.add_edge(prev, "b", gains[-1])
    return g


def random_graph(rng, n_internal=5, grid=None, p_edge=0.45):
    g = SignalFlowGraph()
    dims = {}
    for name in ("s1", "s2"):
        dims[name] = int(rng.integers(1, 3))
        g.add_source(name, dims[name])
    for i in range(n_internal):
        dims[f"n{i}"] = int(rng.integers(1, 3))
        g.add_node(f"n{i}", dims[f"n{i}"])
    for name in ("o1", "o2"):
        dims[name] = int(rng.integers(1, 3))
        g.add_sink(name, dims[name])
    n_freq = len(grid)
    internal = [f"n{i}" for i in range(n_internal)]
    for u, w in itertools.product(["s1", "s2"] + internal, internal + ["o1", "o2"]):
        if rng.random() > p_edge:
            continue
        shape = (n_freq, dims[w], dims[u])
        m = 0.25 * (rng.normal(size=shape) + 1j * rng.normal(size=shape))
        if u == w:
            m = m * 0.5
        g.add_edge(u, w, Response._from_matrix(m, grid))
    return g


# --- elimination ---------------------------------------------------------------
def test_chain_composition():
    g = chain(2.0, 3.0)
    assert g.eliminate_node("n0").edges[("a", "b")].values == pytest.approx(6.0)


def test_diamond_path_sum():
    g = chain(2.0, 3.0).add_edge("a", "b", 0.5)
    assert g.eliminate_node("n0").edges[("a", "b")].values == pytest.approx(6.5)


@pytest.mark.parametrize("node", ["a", "b"])
def test_eliminate_terminal_rejected(node):
    with pytest.raises(GraphError):
        chain(2.0, 3.0).eliminate_node(node)


def test_eliminate_with_self_loop_rejected():
    g = chain(2.0, 3.0).add_edge("n0", "n0", 0.5)
    with pytest.raises(GraphError):
        g.eliminate_node("n0")


def test_self_loop_scalar():
    g = chain(2.0, 3.0).add_edge("n0", "n0", 0.5).close_self_loop("n0")
    assert g.edges[("a", "n0")].values == pytest.approx(4.0)
    assert ("n0", "n0") not in g.edges


def test_self_loop_pole():
    g = chain(2.0, 3.0).add_edge("n0", "n0", 1.0)
    with pytest.raises(SingularityError):
        g.close_self_loop("n0")


def test_radiation_pressure_propagator():
    # a nilpotent loop closes to 1 + F exactly
    grid = make_grid(10, 100, 5)
    F = ScalarResponse(0.3 + 0.2j * np.arange(5), grid) * (E_P @ E_Q.H)
    g = SignalFlowGraph().add_source("a", 2).add_node("n", 2).add_sink("b", 2)
    g.add_edge("a", "n", identity(2)).add_edge("n", "n", F).add_edge("n", "b", identity(2))
    assert g.transfer("a", "b").allclose(identity(2) + F, rtol=1e-14, atol=1e-15)


def test_no_path_gives_zero():
    g = SignalFlowGraph().add_source("a", 2).add_sink("b", 1).add_node("n", 2)
    g.add_edge("a", "n", 1.0)
    T = g.transfer("a", "b")
    assert T.shape == (1, 2) and np.all(T.values == 0)


def test_parallel_edges_sum():
    g = SignalFlowGraph().add_source("a", 1).add_sink("b", 1)
    g.add_edge("a", "b", 1.0).add_edge("a", "b", 2.0)
    assert g.edges[("a", "b")].values == pytest.approx(3.0)


@pytest.mark.parametrize(
    "build",
    [
        lambda g: g.add_edge("a", "zz", 1.0),
        lambda g: g.add_edge("b", "n", 1.0),
        lambda g: g.add_edge("n", "a", 1.0),
    ],
)
def test_bad_edges(build):
    g = SignalFlowGraph().add_source("a", 1).add_sink("b", 1).add_node("n", 1)
    with pytest.raises(GraphError):
        build(g)


def test_edge_dimension_checked():
    g = SignalFlowGraph().add_source("a", 2).add_sink("b", 1)
    with pytest.raises(ValueError):
        g.add_edge("a", "b", identity(2))


def test_bad_order():
    with pytest.raises(GraphError):
        chain(1.0, 2.0, 3.0).reduce(["n0"])


# --- direct solve --------------------------------------------------------------
def test_solve_self_loop():
    g = SignalFlowGraph().add_source("a", 1).add_node("n", 1).add_sink("b", 1)
    g.add_edge("a", "n", 1.0).add_edge("n", "n", 0.3).add_edge("n", "b", 1.0)
    out = g.solve_all({"a": ScalarResponse(1.0)})
    assert out["n"].values == pytest.approx(1 / 0.7, rel=1e-14)
    assert float(np.real(out["n"].values)) == pytest.approx(1.4286, abs=5e-5)


def test_solve_acyclic_chain():
    out = solve_all(chain(2.0, 3.0, 0.5), {"a": ScalarResponse(1.0)})
    assert out["b"].values == pytest.approx(3.0)


def test_solve_rejects_non_source():
    with pytest.raises(GraphError):
        chain(1.0, 2.0).solve_all({"n0": ScalarResponse(1.0)})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solve_all_matches_transfer(seed):
    rng = np.random.default_rng(seed)
    grid = make_grid(1, 100, 4)
    g = random_graph(rng, grid=grid)
    exc = {}
    for s in ("s1", "s2"):
        v = rng.normal(size=(4, g.nodes[s], 1)) + 0j
        exc[s] = Response._from_matrix(v, grid)
    try:
        out = g.solve_all(exc)
        T = {(s, o): g.transfer(s, o) for s in exc for o in ("o1", "o2")}
    except SingularityError:
        return
    for o in ("o1", "o2"):
        pred = T[("s1", o)] @ exc["s1"] + T[("s2", o)] @ exc["s2"]
        assert pred.allclose(out[o], rtol=1e-10, atol=1e-12 * max(1.0, np.abs(out[o].values).max()))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(list(range(5))))
def test_elimination_order_independent(seed, perm):
    rng = np.random.default_rng(seed)
    grid = make_grid(1, 100, 3)
    g = random_graph(rng, grid=grid)
    try:
        a = g.transfer("s1", "o1")
        b = g.transfer("s1", "o1", [f"n{i}" for i in perm])
    except SingularityError:
        return
    assert b.allclose(a, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(a.values).max()))


# --- mirror graph against closed forms -----------------------------------------
@pytest.mark.parametrize("R", [1.0, 0.999])
def test_mirror_graph_closed_forms(R):
    grid = make_grid(1, 1000, 60)
    p = MirrorParams(M=10.0, P=2e5, k=K1064, R=R)
    g = mirror_graph(p, grid)
    chi0 = -1 / (p.M * grid.omega**2)
    K = 4 * p.k * (2 * R) * chi0 * p.P / C
    r = np.sqrt(R)
    H = -r * (np.eye(2) - K[:, None, None] * np.array([[0, 0], [1, 0]]))
    assert np.allclose(g.transfer("a_fi", "a_fo").values, H, rtol=1e-12, atol=1e-15)
    assert rel(g.transfer("F_ext", "x").values, chi0) < 1e-12
    T = g.transfer("a_fi", "x").values
    assert rel(T[:, 0], chi0 * 2 * 2 * R * np.sqrt(p.P) / C) < 1e-12
    assert np.all(T[:, 1] == 0)
    Z = g.transfer("F_ext", "a_fo").values
    assert rel(Z[:, 1], chi0 * 2 * p.k * r * np.sqrt(p.P)) < 1e-12
    assert np.all(np.abs(Z[:, 0]) == 0)


@pytest.mark.parametrize("R", [1.0, 0.999])
def test_mirror_graph_matches_plant(R):
    grid = make_grid(1, 1000, 60)
    p = MirrorParams(M=10.0, P=2e5, k=K1064, R=R)
    g = mirror_graph(p, grid)
    pl = mirror_plant(p, grid)
    pairs = [("a_fi", "a_fo", pl.H_om), ("a_fi", "x", pl.T_om), ("F_ext", "a_fo", pl.Z_om),
             ("F_ext", "x", pl.chi_om), ("x_sens", "a_fo", pl.Y_om)]
    for src, dst, ref in pairs:
        assert transfer(g, src, dst).allclose(ref, rtol=1e-12, atol=1e-30)
    name, T_b, xi_b = pl.loss_channels[0]
    assert name == "back"
    assert transfer(g, "a_bi", "x").allclose(xi_b, rtol=1e-12, atol=1e-30)
    assert transfer(g, "a_bi", "a_fo").allclose(T_b, rtol=1e-12, atol=1e-16)


def test_mirror_graph_drive_matches_transfer():
    grid = make_grid(1, 1000, 40)
    g = mirror_graph(MirrorParams(M=10.0, P=2e5, k=K1064), grid)
    out = g.solve_all({"a_fi": E_Q.on(grid)})
    assert out["a_fo"].allclose(g.transfer("a_fi", "a_fo") @ E_Q, rtol=1e-12, atol=1e-16)


def test_mirror_graph_radiation_pressure_path_cancels():
    # force -> motion through the radiation-pressure loop contributes nothing
    grid = make_grid(1, 1000, 40)
    p = MirrorParams(M=10.0, P=2e5, k=K1064)
    assert mirror_graph(p, grid).transfer("F_ext", "x").allclose(
        ScalarResponse(-1 / (p.M * grid.omega**2), grid), rtol=1e-13)


def test_mirror_graph_order_independent():
    grid = make_grid(1, 1000, 20)
    g = mirror_graph(MirrorParams(M=10.0, P=2e5, k=K1064, R=0.99), grid)
    ref = g.transfer("a_fi", "a_fo")
    for order in itertools.permutations(g.internal_nodes):
        assert g.transfer("a_fi", "a_fo", order).allclose(ref, rtol=1e-10, atol=1e-15)


def test_quadrature_matrix_edge_on_scalar_promotes():
    g = SignalFlowGraph().add_source("a", 2).add_sink("b", 2)
    g.add_edge("a", "b", 2.0)
    assert isinstance(g.edges[("a", "b")], QuadratureMatrix)
