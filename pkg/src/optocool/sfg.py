"""Signal-flow graphs with operator-valued edges.

Nodes carry a dimension (1 for scalar quantities such as force or
displacement, 2 for two-photon fields). An edge ``u -> w`` carries an operator
mapping the value at ``u`` into a contribution at ``w``; the value of a node is
the sum over its in-edges. Reduction follows the textbook procedure: close the
self-loop of a node with ``G = (1 - F)^-1``, then eliminate the node by
composing every in-edge with every out-edge (``B @ A``).
"""

import numpy as np

from .twophoton import (
    DimensionError,
    GridMismatchError,
    Response,
    ScalarResponse,
    SingularityError,
    SINGULAR_RTOL,
    identity,
    zeros,
)

__all__ = [
    "GraphError",
    "SignalFlowGraph",
    "eliminate_node",
    "close_self_loop",
    "transfer",
    "solve_all",
]


class GraphError(ValueError):
    pass


def _as_op(op, src_dim, dst_dim):
    if not isinstance(op, Response):
        if not np.isscalar(op):
            raise TypeError(f"edge operator must be a Response or a number, got {type(op).__name__}")
        op = ScalarResponse(complex(op))
    if isinstance(op, ScalarResponse) and src_dim == dst_dim == 2:
        op = op * identity(2)
    if op.shape != (dst_dim, src_dim):
        raise DimensionError(
            f"edge operator {type(op).__name__} {op.shape} does not map dim {src_dim} to dim {dst_dim}"
        )
    return op


class SignalFlowGraph:
    """Mutable builder; reductions return new graphs and leave ``self`` untouched."""

    def __init__(self):
        self.nodes = {}  # id -> dim
        self.edges = {}  # (src, dst) -> Response
        self.sources = set()
        self.sinks = set()
        self.grid = None

    # --- construction ------------------------------------------------------
    def add_node(self, node_id, dim=2):
        if node_id in self.nodes:
            raise GraphError(f"duplicate node id {node_id!r}")
        if dim not in (1, 2):
            raise GraphError(f"node dimension must be 1 or 2, got {dim!r}")
        self.nodes[node_id] = dim
        return self

    def add_source(self, node_id, dim=2):
        self.add_node(node_id, dim)
        self.sources.add(node_id)
        return self

    def add_sink(self, node_id, dim=2):
        self.add_node(node_id, dim)
        self.sinks.add(node_id)
        return self

    def add_edge(self, src, dst, op):
        """Add ``src -> dst``; a parallel edge is summed into the existing one."""
        for n in (src, dst):
            if n not in self.nodes:
                raise GraphError(f"unknown node {n!r}")
        if dst in self.sources:
            raise GraphError(f"source {dst!r} cannot have in-edges")
        if src in self.sinks:
            raise GraphError(f"sink {src!r} cannot have out-edges")
        op = _as_op(op, self.nodes[src], self.nodes[dst])
        self._track_grid(op)
        key = (src, dst)
        self.edges[key] = self.edges[key] + op if key in self.edges else op
        return self

    def _track_grid(self, op):
        if op.grid is None:
            return
        if self.grid is None:
            self.grid = op.grid
        elif op.grid != self.grid:
            raise GridMismatchError("edge operator lives on a different grid than the graph")

    def copy(self):
        g = SignalFlowGraph()
        g.nodes = dict(self.nodes)
        g.edges = dict(self.edges)
        g.sources = set(self.sources)
        g.sinks = set(self.sinks)
        g.grid = self.grid
        return g

    @property
    def internal_nodes(self):
        return [n for n in self.nodes if n not in self.sources and n not in self.sinks]

    def in_edges(self, node_id):
        return {u: op for (u, w), op in self.edges.items() if w == node_id and u != node_id}

    def out_edges(self, node_id):
        return {w: op for (u, w), op in self.edges.items() if u == node_id and w != node_id}

    def dump(self):
        """Debug listing, one ``src -> dst : kind`` record per line."""
        lines = [f"node {n} dim={d}{' source' if n in self.sources else ''}{' sink' if n in self.sinks else ''}"
                 for n, d in self.nodes.items()]
        lines += [f"{u} -> {w} : {type(op).__name__}" for (u, w), op in self.edges.items()]
        return "\n".join(lines)

    # --- reduction ---------------------------------------------------------
    def close_self_loop(self, node_id):
        g = self.copy()
        F = g.edges.pop((node_id, node_id), None)
        if F is None:
            return g
        dim = g.nodes[node_id]
        try:
            G = (identity(dim) - F).inv()
        except SingularityError as e:
            raise SingularityError(f"self-loop on node {node_id!r} is singular", e.omega) from None
        for u, A in g.in_edges(node_id).items():
            g.edges[(u, node_id)] = G @ A
        return g

    def eliminate_node(self, node_id):
        if node_id not in self.nodes:
            raise GraphError(f"unknown node {node_id!r}")
        if node_id in self.sources or node_id in self.sinks:
            raise GraphError(f"cannot eliminate source/sink node {node_id!r}")
        if (node_id, node_id) in self.edges:
            raise GraphError(f"node {node_id!r} has a self-loop; close it first")
        g = self.copy()
        ins = g.in_edges(node_id)
        outs = g.out_edges(node_id)
        for key in [k for k in g.edges if node_id in k]:
            del g.edges[key]
        del g.nodes[node_id]
        for u, A in ins.items():
            for w, B in outs.items():
                g.add_edge(u, w, B @ A)
        return g

    def reduce(self, order=None):
        """Close and eliminate every internal node; only source -> sink edges remain."""
        internal = self.internal_nodes
        if order is None:
            order = internal
        else:
            order = list(order)
            if sorted(map(str, order)) != sorted(map(str, internal)):
                raise GraphError("elimination order must list every internal node exactly once")
        g = self
        for n in order:
            g = g.close_self_loop(n).eliminate_node(n)
        return g

    def transfer(self, src, dst, order=None):
        if src not in self.sources:
            raise GraphError(f"{src!r} is not a source")
        if dst not in self.sinks:
            raise GraphError(f"{dst!r} is not a sink")
        g = self.reduce(order)
        op = g.edges.get((src, dst))
        if op is None:
            op = zeros(self.nodes[dst], self.nodes[src], self.grid)
        return op

    def solve_all(self, excitations):
        """Direct solve of ``(1 - A) x = b`` for all non-source nodes.

        ``excitations`` maps source ids to their values (unlisted sources are
        zero). Returns a dict of node id -> value, sources included.
        """
        for s in excitations:
            if s not in self.sources:
                raise GraphError(f"{s!r} is not a source")
        grid = self.grid
        for v in excitations.values():
            if v.grid is not None:
                if grid is not None and v.grid != grid:
                    raise GridMismatchError("excitation grid differs from the graph grid")
                grid = v.grid
        n_freq = 1 if grid is None else len(grid)

        unknown = [n for n in self.nodes if n not in self.sources]
        offset, pos = {}, 0
        for n in unknown:
            offset[n] = pos
            pos += self.nodes[n]
        size = pos
        A = np.zeros((n_freq, size, size), dtype=complex)
        b = np.zeros((n_freq, size, 1), dtype=complex)

        def block(op):
            m = op.matrix
            return np.broadcast_to(m, (n_freq,) + m.shape[-2:])

        for (u, w), op in self.edges.items():
            rw = slice(offset[w], offset[w] + self.nodes[w])
            if u in self.sources:
                if u in excitations:
                    b[:, rw, :] += block(op @ excitations[u])
            else:
                cu = slice(offset[u], offset[u] + self.nodes[u])
                A[:, rw, cu] += block(op)
        M = np.eye(size) - A
        # node dimensions carry mixed physical units, so test conditioning on
        # the row-equilibrated system rather than on det(M)
        rows = np.max(np.abs(M), axis=-1, keepdims=True)
        Ms = M / rows
        bad = np.linalg.cond(Ms) > 1 / SINGULAR_RTOL
        if np.any(bad):
            omega = None if grid is None else float(grid.omega[np.argmax(bad)])
            raise SingularityError("graph node system is singular", omega)
        x = np.linalg.solve(Ms, b / rows)

        out = {}
        for s in self.sources:
            if s in excitations:
                out[s] = excitations[s]
            else:
                out[s] = zeros(self.nodes[s], 1, grid)
        for n in unknown:
            vals = x[:, offset[n]:offset[n] + self.nodes[n], :]
            if grid is None:
                vals = vals[0]
            out[n] = Response._from_matrix(vals, grid)
        return out


def eliminate_node(graph, node_id):
    return graph.eliminate_node(node_id)


def close_self_loop(graph, node_id):
    return graph.close_self_loop(node_id)


def transfer(graph, src, dst, order=None):
    return graph.transfer(src, dst, order)


def solve_all(graph, excitations):
    return graph.solve_all(excitations)
