"""Flow graphs and their random-graph models.

A color's flow graph is the subgraph of the overlay that carries that
color: one full cycle layer plus the last-layer edges of peers whose
forwarding color matches.  Distributionally, such a graph is a uniform
random Hamiltonian cycle superposed with an independently thinned second
cycle.  This module provides both samplers:

* ``sample_thinned_pair`` permutes the nodes twice and drops second-cycle
  edges with probability 1-q;
* ``fgc_construct`` grows both edge sets node by node, drawing each new
  child uniformly among the nodes that do not yet have an incoming edge
  and whose choice cannot close a premature (non-Hamiltonian) cycle.

The incremental construction exposes the discovery order of the nodes and
the coverage counts z(t) that drive the expansion and contraction
analyses, so the Monte Carlo harness is built on it.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

_INF = float("inf")


@dataclass
class FlowGraph:
    """Directed multigraph with a designated source node."""

    nodes: list
    edges: list
    source: int = 1
    _adj: dict | None = field(default=None, repr=False, compare=False)

    def adjacency(self) -> dict:
        if self._adj is None:
            adj = {v: [] for v in self.nodes}
            for i, j in self.edges:
                adj[i].append(j)
            self._adj = adj
        return self._adj

    def out_degrees(self) -> dict:
        return {v: len(nbrs) for v, nbrs in self.adjacency().items()}


def extract_flow_graph(overlay, k: int, cfg, mu: dict) -> FlowGraph:
    """Subgraph of ``overlay`` carrying color ``k`` chunks.

    All edges of the layer scheduled for color k, plus every last-layer
    edge whose tail forwards color k.  ``mu`` maps peer -> forwarding color.
    """
    if not 1 <= k <= cfg.k_count - 1:
        raise ValueError(f"color {k} out of range 1..{cfg.k_count - 1}")
    lam_k = cfg.schedule[k - 1]
    edges = list(overlay.layers[lam_k - 1].successor.items())
    last = overlay.layers[cfg.m_count - 1].successor
    edges.extend((i, j) for i, j in last.items() if mu[i] == k)
    return FlowGraph(overlay.peer_list(), edges)


def superpose(e1, e2, n: int) -> FlowGraph:
    """Multigraph union of two edge sets over nodes 1..n; parallels kept."""
    return FlowGraph(list(range(1, n + 1)), list(e1) + list(e2))


def reverse(g: FlowGraph) -> FlowGraph:
    """Same graph with every edge direction flipped."""
    return FlowGraph(list(g.nodes), [(j, i) for i, j in g.edges], g.source)


def bfs_distances(g: FlowGraph, root: int) -> dict:
    """Exact hop distances from ``root``; unreachable nodes map to inf."""
    if root not in g.adjacency():
        raise ValueError(f"root {root} not in graph")
    dist = dict.fromkeys(g.nodes, _INF)
    dist[root] = 0
    queue = deque([root])
    adj = g.adjacency()
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if dist[w] is _INF:
                dist[w] = du
                queue.append(w)
    return dist


def depth(g: FlowGraph, dist: dict | None = None) -> int:
    """Maximum finite hop distance from the source."""
    if dist is None:
        dist = bfs_distances(g, g.source)
    return max(d for d in dist.values() if d != _INF)


def all_pairs_diameter(g: FlowGraph) -> int:
    """Exact diameter over all ordered reachable pairs (C-level BFS)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    idx = {v: i for i, v in enumerate(sorted(g.nodes))}
    n = len(idx)
    rows = [idx[i] for i, _ in g.edges]
    cols = [idx[j] for _, j in g.edges]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    dmat = shortest_path(adj, method="D", unweighted=True)
    finite = dmat[np.isfinite(dmat)]
    return int(finite.max())


def random_hamiltonian_cycle(n: int, rng: np.random.Generator) -> list:
    """Uniform directed Hamiltonian cycle on nodes 1..n, as an edge list."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    order = [1] + list(rng.permutation(np.arange(2, n + 1)))
    edges = [(int(order[i]), int(order[i + 1])) for i in range(n - 1)]
    edges.append((int(order[-1]), 1))
    return edges


def sample_thinned_pair(n: int, q: float, rng: np.random.Generator):
    """Two independent uniform cycles, the second thinned edge-wise.

    Returns ``(e1, e2)`` where e1 is a full cycle and e2 keeps each edge of
    an independent cycle with probability q.  Superposing them yields the
    flow-graph distribution.
    """
    e1 = random_hamiltonian_cycle(n, rng)
    h2 = random_hamiltonian_cycle(n, rng)
    keep = rng.random(n) < q
    e2 = [h2[i] for i in range(n) if keep[i]]
    return e1, e2


@dataclass
class FgcTrace:
    """Full record of one incremental flow-graph construction.

    ``order`` is the node discovery sequence (index t-1 holds the node
    whose out-edges were drawn at iteration t); ``z_series[t]`` counts the
    nodes within one hop of the first t discovered nodes, with
    ``z_series[0] == 1``.  Candidate counts are recorded per iteration and
    verified against their closed forms while the trace is built.
    """

    n: int
    q: float
    order: np.ndarray
    tau: np.ndarray
    e1: list
    e2: list
    z_series: np.ndarray
    c1_counts: np.ndarray
    c2_counts: np.ndarray

    def superposed(self) -> FlowGraph:
        return superpose(self.e1, self.e2, self.n)

    def to_csv(self) -> str:
        lines = ["t,z,F,tau,c1_count,c2_count"]
        n = self.n
        for t in range(1, n + 1):
            z = int(self.z_series[t])
            f = f"{(n - z) / (n - t):.10g}" if t < n else "nan"
            lines.append(
                f"{t},{z},{f},{int(self.tau[t - 1])},"
                f"{int(self.c1_counts[t - 1])},{int(self.c2_counts[t - 1])}"
            )
        return "\n".join(lines) + "\n"


class CandidateCountError(AssertionError):
    """A candidate-set size disagreed with its closed form; the draw is unsound."""


def _check_counts(actual: int, expected: int, t: int, which: str):
    if actual != expected:
        raise CandidateCountError(
            f"iteration {t}: |C(v_t, {which})| = {actual}, expected {expected}"
        )


def fgc_construct(
    n: int,
    q: float,
    rng: np.random.Generator,
    tau=None,
) -> FgcTrace:
    """Grow a Hamiltonian cycle and a thinned companion node by node.

    Iteration t draws an outgoing edge for the t-th discovered node: always
    one first-set edge, plus one second-set edge when the t-th coin flip
    (probability q) came up 1.  Children are drawn uniformly among nodes
    with no incoming edge in the respective set, never closing a cycle
    early; the final first-set edge closes the Hamiltonian cycle.

    ``tau`` fixes the coin flips (any 0/1 sequence of length n) instead of
    drawing them, which is how conditional expectations are exercised.

    Candidate-set sizes are checked against their closed forms at every
    iteration and a mismatch raises :class:`CandidateCountError`.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must be a probability")
    if tau is None:
        tau_arr = (rng.random(n) < q).astype(np.int8)
    else:
        tau_arr = np.asarray(tau, dtype=np.int8)
        if tau_arr.shape != (n,) or not np.isin(tau_arr, (0, 1)).all():
            raise ValueError("tau must be a 0/1 vector of length n")

    # Pre-draw all uniform indices.  First-set candidate counts are n-t at
    # iteration t; second-set counts depend only on the coin-flip prefix,
    # so both index streams are known before the walk starts.
    u1 = rng.integers(0, np.arange(n - 1, 0, -1)).tolist()
    prefix_arr = np.concatenate(([0], np.cumsum(tau_arr[:-1])))  # flips before t
    sizes2 = n - prefix_arr - 1
    draw2_mask = (tau_arr == 1) & (sizes2 >= 1)
    u2 = (
        rng.integers(0, sizes2[draw2_mask]).tolist() if draw2_mask.any() else []
    )
    tau_list = tau_arr.tolist()
    prefix = prefix_arr.tolist()

    # Each edge set is a union of vertex-disjoint paths.  For set s we keep:
    #   no_in[s]  - index-addressable list of nodes with no incoming edge
    #   pos[s]    - node -> position in no_in (parallel array)
    #   pstart    - for every path end, the start of its path
    #   pend      - for every path start, the end of its path
    # The candidate set of v is no_in minus the start of v's own path.
    no_in1 = list(range(1, n + 1))
    pos1 = list(range(-1, n))  # pos1[node] = index into no_in1
    start1 = list(range(n + 1))
    end1 = list(range(n + 1))
    no_in2 = list(range(1, n + 1))
    pos2 = list(range(-1, n))
    start2 = list(range(n + 1))
    end2 = list(range(n + 1))

    in_z = bytearray(n + 1)
    in_z[1] = 1
    order = [1]
    z = 1
    z_series = [1]
    e1 = []
    e2 = []
    c1_counts = []
    c2_counts = []
    j2 = 0

    for t in range(1, n + 1):
        v = order[t - 1]

        # First edge set: always one draw; the last draw closes the cycle.
        s_v = start1[v]
        count1 = len(no_in1) - 1
        if t < n:
            if count1 != n - t:
                _check_counts(count1, n - t, t, "E1")
            u = u1[t - 1]
            idx = pos1[s_v]
            if u == idx:
                u = count1
            c = no_in1[u]
            c1_counts.append(count1)
        else:
            if count1 != 0 or no_in1[0] != s_v:
                raise CandidateCountError(
                    f"iteration {n}: first edge set did not reduce to the "
                    f"Hamiltonian closure"
                )
            c = s_v
            c1_counts.append(1)
        # splice c into v's path
        i = pos1[c]
        last = no_in1[-1]
        no_in1[i] = last
        pos1[last] = i
        no_in1.pop()
        e_c = end1[c]
        start1[e_c] = s_v
        end1[s_v] = e_c
        e1.append((v, c))
        if not in_z[c]:
            in_z[c] = 1
            order.append(c)
            z += 1

        # Second edge set: drawn only on a 1-flip.
        count2 = len(no_in2) - 1
        if t < n and count2 != n - prefix[t - 1] - 1:
            _check_counts(count2, n - prefix[t - 1] - 1, t, "E2")
        if tau_list[t - 1]:
            s_v2 = start2[v]
            if count2 == 0:
                # only reachable at t == n with every earlier flip a 1
                if no_in2[0] != s_v2:
                    raise CandidateCountError(
                        f"iteration {n}: second edge set closure is not Hamiltonian"
                    )
                c2 = s_v2
                c2_counts.append(1)
            else:
                u = u2[j2]
                j2 += 1
                idx = pos2[s_v2]
                if u == idx:
                    u = count2
                c2 = no_in2[u]
                c2_counts.append(count2)
            i = pos2[c2]
            last = no_in2[-1]
            no_in2[i] = last
            pos2[last] = i
            no_in2.pop()
            e_c = end2[c2]
            start2[e_c] = s_v2
            end2[s_v2] = e_c
            e2.append((v, c2))
            if not in_z[c2]:
                in_z[c2] = 1
                order.append(c2)
                z += 1
        else:
            c2_counts.append(count2)
        z_series.append(z)

    return FgcTrace(
        n=n,
        q=q,
        order=np.array(order, dtype=np.int32),
        tau=tau_arr,
        e1=e1,
        e2=e2,
        z_series=np.array(z_series, dtype=np.int32),
        c1_counts=np.array(c1_counts, dtype=np.int32),
        c2_counts=np.array(c2_counts, dtype=np.int32),
    )


def expansion_series(trace: FgcTrace):
    """Coverage counts z(t) and contraction ratios F(t) = (N-z(t))/(N-t).

    Returns ``(z, f)`` where ``z[t]`` is defined for t = 0..N and ``f[t]``
    for t = 0..N-1.
    """
    z = np.asarray(trace.z_series, dtype=np.float64)
    n = trace.n
    t = np.arange(n)
    f = (n - z[:n]) / (n - t)
    return trace.z_series.copy(), f


def expected_remaining(n: int, l: int, t: int, z_l: int, tau_sum_t: int, tau_sum_l: int) -> float:
    """Conditional mean of N - z(t) given the graph at iteration l.

    Both the graph state (through ``z_l``) and the coin-flip prefix sums at
    l and t are conditioned on; with l = 0 and flips averaged out this
    reduces to (N-t-1)(1 - t q/(N-1)).
    """
    if not 0 <= l <= t < n:
        raise ValueError("need 0 <= l <= t < n")
    return (
        (n - t - 1)
        / (n - l - 1)
        * (n - tau_sum_t - 1)
        / (n - tau_sum_l - 1)
        * (n - z_l)
    )


def expansion_mean_formula(n: int, q: float, t: int) -> float:
    """Closed-form E[z(t)]/t: 1 + 1/t + q(1 - t/(N-1))."""
    return 1.0 + 1.0 / t + q * (1.0 - t / (n - 1))


def iterate_coverage(z_series: np.ndarray, t0: int, hops: int) -> int:
    """h-fold coverage iterate: start at t0 and look up z hop times."""
    x = t0
    n = len(z_series) - 1
    for _ in range(hops):
        x = int(z_series[min(x, n)])
    return x


def contraction_hop_budget(n: int, phi: float, t0: int) -> int:
    """Number of contraction hops needed to shrink N-t0 down to log N."""
    if not 0.0 < phi < 1.0:
        raise ValueError("phi must be in (0, 1)")
    return int(math.floor(math.log((n - t0) / math.log(n)) / math.log(1.0 / phi)))
