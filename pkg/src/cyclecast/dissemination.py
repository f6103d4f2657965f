"""Time-slotted chunk dissemination over a cycle overlay.

The source emits one chunk per slot except every K-th slot, coloring chunk
t with t mod K.  Every peer cycles through a shared length-K schedule of
outgoing layers: position k < K forwards the newest color-k chunk the peer
holds, position K forwards the newest chunk of the peer's own forwarding
color over the last layer.  Chunks received during a slot only become
forwardable in the next slot, and a newly received chunk displaces the
one held for its color only if it was generated later.

Two invariants of the algorithm are checked after the fact from the
delivery log: freshness (whoever receives chunk t at slot l already held
chunk t-K by slot l-K) and the per-peer delay bound t + K * d_k(v), where
d_k(v) is the peer's hop distance from the source in the color's flow
graph.
"""

from dataclasses import dataclass, field

import numpy as np

from cyclecast.flowgraph import bfs_distances, depth
from cyclecast.overlay import SOURCE, Overlay

PHASE_POLICIES = ("join-slot", "zero", "random")


@dataclass(frozen=True)
class StreamConfig:
    """Layer count, slots per round, layer schedule and phase policy."""

    m_count: int
    k_count: int
    schedule: tuple
    phase_policy: str = "join-slot"

    def __post_init__(self):
        if self.m_count < 2:
            raise ValueError("need at least 2 layers")
        if self.k_count < 2:
            raise ValueError("round length must be at least 2")
        if len(self.schedule) != self.k_count:
            raise ValueError("schedule length must equal the round length")
        if self.schedule[-1] != self.m_count:
            raise ValueError("last schedule entry must be the last layer")
        for lam in self.schedule[:-1]:
            if not 1 <= lam <= self.m_count - 1:
                raise ValueError(
                    f"schedule entries before the last must be in 1..{self.m_count - 1}"
                )
        if self.phase_policy not in PHASE_POLICIES:
            raise ValueError(f"phase policy must be one of {PHASE_POLICIES}")

    @property
    def thin_prob(self) -> float:
        """Chance a given peer forwards a fixed color on its last layer."""
        return 1.0 / (self.k_count - 1)


def default_schedule(m_count: int, k_count: int) -> tuple:
    """Round-robin over layers 1..M-1, closing with layer M."""
    return tuple((i % (m_count - 1)) + 1 for i in range(k_count - 1)) + (m_count,)


def assign_color(t: int, k_count: int):
    """Color of the slot-t chunk, or None on idle slots (t mod K == 0)."""
    if t < 0 or k_count < 2:
        raise ValueError("need t >= 0 and round length >= 2")
    r = t % k_count
    return r if r else None


@dataclass
class PeerStreamState:
    """Per-peer stream bookkeeping; ``latest`` maps color -> newest chunk."""

    mu: int
    phase: int
    latest: dict = field(default_factory=dict)


def scheduled_action(v: int, t: int, cfg: StreamConfig, state: PeerStreamState):
    """(layer, color) peer v acts on during slot t.

    Position r = ((t - phase) mod K) + 1 of the schedule; the final
    position forwards the peer's own color over the last layer.
    """
    r = (t - state.phase) % cfg.k_count + 1
    if r < cfg.k_count:
        return cfg.schedule[r - 1], r
    return cfg.m_count, state.mu


@dataclass
class DeliveryLog:
    """First-reception slots plus the generated-chunk history of one run."""

    first_rx: dict
    generated: list
    horizon: int
    k_count: int
    mu: dict
    phases: dict

    def receptions_csv(self) -> str:
        lines = ["peer,chunk_t,color,rx_slot"]
        for (peer, t), slot in sorted(self.first_rx.items()):
            lines.append(f"{peer},{t},{t % self.k_count},{slot}")
        return "\n".join(lines) + "\n"

    def generated_csv(self) -> str:
        lines = ["chunk_t,color"]
        for t, color in self.generated:
            lines.append(f"{t},{color}")
        return "\n".join(lines) + "\n"


def draw_stream_assignments(overlay: Overlay, cfg: StreamConfig, rng: np.random.Generator):
    """Forwarding colors and schedule phases for every peer.

    Colors are uniform on 1..K-1 and fixed for the peer's lifetime.  The
    join-slot policy derives the phase from the peer id, which the id
    counter makes a proxy for join time; the other policies use 0 or a
    uniform draw.
    """
    peers = sorted(overlay.peers)
    k = cfg.k_count
    mu = {v: int(c) for v, c in zip(peers, rng.integers(1, k, size=len(peers)))}
    if cfg.phase_policy == "zero":
        phases = dict.fromkeys(peers, 0)
    elif cfg.phase_policy == "random":
        phases = {v: int(p) for v, p in zip(peers, rng.integers(0, k, size=len(peers)))}
    else:
        phases = {v: v % k for v in peers}
    return mu, phases


class StreamSimulation:
    """Deterministic sequential engine; one ``step`` executes one slot."""

    def __init__(self, overlay, cfg, rng=None, mu=None, phases=None):
        if mu is None or phases is None:
            if rng is None:
                raise ValueError("need an rng when mu/phases are not supplied")
            drawn_mu, drawn_phases = draw_stream_assignments(overlay, cfg, rng)
            mu = drawn_mu if mu is None else mu
            phases = drawn_phases if phases is None else phases
        self.overlay = overlay
        self.cfg = cfg
        self.states = {
            v: PeerStreamState(mu=mu[v], phase=phases[v]) for v in overlay.peers
        }
        self.slot = 0
        self.first_rx = {}
        self.generated = []

    def step(self) -> "StreamSimulation":
        """Execute the current slot: schedule sends, generate, deliver."""
        t = self.slot
        cfg = self.cfg
        k = cfg.k_count
        layers = self.overlay.layers
        # sends are decided before anything arrives or is generated this slot
        deliveries = []
        for v, state in self.states.items():
            r = (t - state.phase) % k + 1
            if r < k:
                layer, color = cfg.schedule[r - 1], r
            else:
                layer, color = cfg.m_count, state.mu
            chunk = state.latest.get(color)
            if chunk is not None:
                deliveries.append((layers[layer - 1].successor[v], chunk))
        color = t % k
        if color:
            src = self.states[SOURCE]
            src.latest[color] = t
            self.first_rx[(SOURCE, t)] = t
            self.generated.append((t, color))
        first_rx = self.first_rx
        for recv, chunk in deliveries:
            key = (recv, chunk)
            if key not in first_rx:
                first_rx[key] = t
            latest = self.states[recv].latest
            col = chunk % k
            if latest.get(col, 0) < chunk:
                latest[col] = chunk
        self.slot = t + 1
        return self

    def log(self) -> DeliveryLog:
        return DeliveryLog(
            first_rx=self.first_rx,
            generated=self.generated,
            horizon=self.slot,
            k_count=self.cfg.k_count,
            mu={v: s.mu for v, s in self.states.items()},
            phases={v: s.phase for v, s in self.states.items()},
        )


def run(overlay, cfg, horizon, rng=None, mu=None, phases=None) -> DeliveryLog:
    """Simulate slots 0..horizon-1 on a validated overlay."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    report = overlay.validate()
    if not report.passed:
        raise ValueError(f"overlay failed validation: {report.failures()}")
    sim = StreamSimulation(overlay, cfg, rng=rng, mu=mu, phases=phases)
    for _ in range(horizon):
        sim.step()
    return sim.log()


@dataclass
class Violation:
    kind: str
    peer: int
    chunk: int
    detail: str


def check_freshness_invariant(log: DeliveryLog, k_count: int) -> list:
    """Receptions of chunk t at slot l must follow chunk t-K by slot l-K."""
    generated = {t for t, _ in log.generated}
    violations = []
    for (v, t), l in log.first_rx.items():
        prev = t - k_count
        if prev in generated:
            got = log.first_rx.get((v, prev))
            if got is None or got > l - k_count:
                violations.append(
                    Violation(
                        "freshness",
                        v,
                        t,
                        f"received chunk {t} at slot {l} but chunk {prev} "
                        f"{'never arrived' if got is None else f'arrived at slot {got}'}",
                    )
                )
    return violations


def check_delay_bound(log: DeliveryLog, flowgraphs: list, k_count: int) -> list:
    """Every chunk must reach peer v within K * (hops from source) slots.

    ``flowgraphs[k-1]`` is the color-k flow graph extracted with the same
    assignments as the run.  Pairs whose bound falls beyond the executed
    slots are not checked.
    """
    last_slot = log.horizon - 1
    violations = []
    dists = [bfs_distances(g, g.source) for g in flowgraphs]
    for t, color in log.generated:
        dist = dists[color - 1]
        for v, d in dist.items():
            bound = t + k_count * d
            if bound > last_slot:
                continue
            rx = log.first_rx.get((v, t))
            if rx is None or rx > bound:
                violations.append(
                    Violation(
                        "delay",
                        v,
                        t,
                        f"chunk {t} (color {color}) due at peer {v} by slot "
                        f"{bound}, {'never arrived' if rx is None else f'arrived {rx}'}",
                    )
                )
    return violations


def check_throughput(log: DeliveryLog, flowgraphs: list, k_count: int) -> list:
    """All chunks old enough for the worst-case bound must be fully delivered.

    The eligible window ends K * max-depth slots before the last executed
    slot; every generated chunk inside it must have reached every peer.
    """
    last_slot = log.horizon - 1
    d_max = max(depth(g) for g in flowgraphs)
    window_end = last_slot - k_count * d_max
    peers = flowgraphs[0].nodes
    violations = []
    for t, color in log.generated:
        if t > window_end:
            continue
        for v in peers:
            if (v, t) not in log.first_rx:
                violations.append(
                    Violation(
                        "throughput",
                        v,
                        t,
                        f"chunk {t} (color {color}) generated in the eligible "
                        f"window never reached peer {v}",
                    )
                )
    return violations
