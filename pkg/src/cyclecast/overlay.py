"""Multi-layer ring overlay: M independent directed Hamiltonian cycles.

The overlay keeps M "layers" over one peer set.  Layer m holds the m-th
outgoing edge of every peer, and each layer is (and must stay) a single
directed Hamiltonian cycle.  Peer 1 is the stream source and is always
present.  Joins splice the newcomer into one uniformly chosen edge per
layer; leaves reconnect the departing peer's parent to its child in every
layer.  Both operations preserve the single-cycle invariant, which
``validate`` checks explicitly.
"""

from dataclasses import dataclass, field

import numpy as np

SOURCE = 1


@dataclass
class Layer:
    """One cycle layer: successor map plus its inverse for O(1) leaves."""

    successor: dict
    predecessor: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.predecessor:
            self.predecessor = {c: p for p, c in self.successor.items()}

    def __eq__(self, other):
        return isinstance(other, Layer) and self.successor == other.successor


@dataclass
class LayerCheck:
    layer: int
    bijection_ok: bool
    single_cycle_ok: bool
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.bijection_ok and self.single_cycle_ok


@dataclass
class ValidationReport:
    n: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]


class Overlay:
    """Peer set plus M successor-map layers, mutated by join/leave.

    Mutation is single-threaded; once an overlay is handed to analysis
    code it must be treated as read-only.
    """

    def __init__(self, peers, layers):
        self._peer_list = list(peers)
        self._peer_pos = {p: i for i, p in enumerate(self._peer_list)}
        self.layers = layers

    # -- construction ------------------------------------------------------

    @classmethod
    def initial(cls, m_count: int) -> "Overlay":
        """Two-peer overlay: every layer is the 2-cycle source <-> peer 2."""
        if m_count < 2:
            raise ValueError("overlay needs at least 2 layers")
        layers = [Layer({SOURCE: 2, 2: SOURCE}) for _ in range(m_count)]
        return cls([SOURCE, 2], layers)

    # -- basic views -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._peer_list)

    @property
    def m_count(self) -> int:
        return len(self.layers)

    @property
    def peers(self) -> set:
        return set(self._peer_list)

    def peer_list(self) -> list:
        return list(self._peer_list)

    def __contains__(self, peer) -> bool:
        return peer in self._peer_pos

    def __eq__(self, other):
        return (
            isinstance(other, Overlay)
            and self.peers == other.peers
            and self.layers == other.layers
        )

    # -- mutation ----------------------------------------------------------

    def join(self, new_peer: int, rng: np.random.Generator) -> "Overlay":
        """Splice ``new_peer`` into one uniformly chosen edge of each layer.

        Edge choices are independent across layers.  Every edge (p, succ(p))
        is identified by its tail, so a uniform peer draw is a uniform edge
        draw.
        """
        if new_peer in self._peer_pos:
            raise ValueError(f"peer {new_peer} already in overlay")
        if new_peer <= 0:
            raise ValueError("peer ids are positive integers")
        tails = rng.integers(0, self.n, size=self.m_count)
        for layer, i in zip(self.layers, tails):
            parent = self._peer_list[i]
            child = layer.successor[parent]
            layer.successor[parent] = new_peer
            layer.successor[new_peer] = child
            layer.predecessor[child] = new_peer
            layer.predecessor[new_peer] = parent
        self._peer_pos[new_peer] = len(self._peer_list)
        self._peer_list.append(new_peer)
        return self

    def leave(self, peer: int) -> "Overlay":
        """Remove ``peer``, reconnecting its parent to its child per layer."""
        if peer == SOURCE:
            raise ValueError("the source peer cannot leave")
        if peer not in self._peer_pos:
            raise ValueError(f"peer {peer} not in overlay")
        if self.n < 3:
            raise ValueError("overlay cannot shrink below 2 peers")
        for layer in self.layers:
            parent = layer.predecessor.pop(peer)
            child = layer.successor.pop(peer)
            layer.successor[parent] = child
            layer.predecessor[child] = parent
        pos = self._peer_pos.pop(peer)
        last = self._peer_list.pop()
        if last != peer:
            self._peer_list[pos] = last
            self._peer_pos[last] = pos
        return self

    # -- validation --------------------------------------------------------

    def validate(self) -> ValidationReport:
        """Check that every layer is a single Hamiltonian cycle.

        Fast path: walk the successor map from the source.  A first return
        to the source after exactly N steps proves both bijectivity and the
        single-cycle property; anything else triggers a slower diagnosis.
        """
        n = self.n
        checks = []
        for m, layer in enumerate(self.layers, start=1):
            succ = layer.successor
            ok = len(succ) == n
            if ok:
                try:
                    cur = succ[SOURCE]
                    steps = 1
                    while cur != SOURCE and steps <= n:
                        cur = succ[cur]
                        steps += 1
                    ok = cur == SOURCE and steps == n
                except KeyError:
                    ok = False
            if ok:
                checks.append(LayerCheck(m, True, True))
            else:
                checks.append(self._diagnose(m, layer))
        return ValidationReport(n, checks)

    def _diagnose(self, m: int, layer: Layer) -> LayerCheck:
        peers = self.peers
        succ = layer.successor
        bijection = (
            set(succ.keys()) == peers and len(set(succ.values())) == len(peers)
            and set(succ.values()) == peers
        )
        single = False
        if set(succ.keys()) >= peers:
            seen = set()
            cur = SOURCE
            while cur not in seen:
                seen.add(cur)
                cur = succ.get(cur)
                if cur is None:
                    break
            single = cur == SOURCE and seen == peers
        detail = []
        if not bijection:
            detail.append("successor map is not a bijection on the peer set")
        if not single:
            detail.append("walk from the source does not cover all peers")
        return LayerCheck(m, bijection, single, "; ".join(detail))

    # -- canonical encodings and serialization ------------------------------

    def cycle_code(self, m: int) -> tuple:
        """Successor walk from the source in layer m (1-based), source omitted.

        Bijective with the set of Hamiltonian cycles on the current peers,
        which makes it a countable category for goodness-of-fit tests.
        """
        succ = self.layers[m - 1].successor
        code = []
        cur = succ[SOURCE]
        while cur != SOURCE:
            code.append(cur)
            cur = succ[cur]
        return tuple(code)

    def relabeled_cycle_code(self, m: int) -> tuple:
        """Cycle code with peer ids replaced by their rank (1 = smallest).

        Makes codes comparable across overlays whose peer sets differ,
        e.g. trials of a churn history with random departures.
        """
        rank = {p: i + 1 for i, p in enumerate(sorted(self._peer_list))}
        return tuple(rank[p] for p in self.cycle_code(m))

    def to_text(self) -> str:
        """Line format: header ``N M``, then one successor line per layer."""
        ordered = sorted(self._peer_list)
        lines = [f"{self.n} {self.m_count}"]
        for layer in self.layers:
            succ = layer.successor
            lines.append(" ".join(str(succ[p]) for p in ordered))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Overlay":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        n, m = map(int, lines[0].split())
        if len(lines) != 1 + m:
            raise ValueError("layer count does not match header")
        rows = [list(map(int, ln.split())) for ln in lines[1:]]
        for row in rows:
            if len(row) != n:
                raise ValueError("successor row length does not match header")
        peers = sorted(rows[0])
        if any(sorted(row) != peers for row in rows):
            raise ValueError("layers disagree on the peer set")
        layers = [Layer(dict(zip(peers, row))) for row in rows]
        return cls(peers, layers)


def init_network(m_count: int = 2) -> Overlay:
    """Fresh two-peer overlay with ``m_count`` identical 2-cycle layers."""
    return Overlay.initial(m_count)


def random_churn(
    overlay: Overlay,
    ops: int,
    target_n: int,
    rng: np.random.Generator,
    next_id: int | None = None,
    validate_each: bool = False,
) -> Overlay:
    """Drive ``ops`` random join/leave operations toward ``target_n`` peers.

    Below target, joins outnumber leaves 3:1; at or above target the bias
    flips, so the population hovers around ``target_n`` once reached.  Peer
    ids come from a monotone counter.  With ``validate_each`` the overlay is
    validated after every mutation and the first failure raises.
    """
    if next_id is None:
        next_id = max(overlay.peers) + 1
    for _ in range(ops):
        n = overlay.n
        grow = n < target_n
        if n < 3:
            do_join = True
        else:
            do_join = rng.random() < (0.75 if grow else 0.25)
        if do_join:
            overlay.join(next_id, rng)
            next_id += 1
        else:
            peer = SOURCE
            plist = overlay._peer_list
            while peer == SOURCE:
                peer = plist[rng.integers(0, n)]
            overlay.leave(peer)
        if validate_each:
            report = overlay.validate()
            if not report.passed:
                raise AssertionError(
                    f"overlay invariant broken after mutation: {report.failures()}"
                )
    return overlay
