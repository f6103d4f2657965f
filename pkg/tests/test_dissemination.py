import numpy as np
import pytest

from cyclecast.dissemination import (
    DeliveryLog,
    StreamConfig,
    StreamSimulation,
    assign_color,
    check_delay_bound,
    check_freshness_invariant,
    check_throughput,
    default_schedule,
    draw_stream_assignments,
    run,
    scheduled_action,
    PeerStreamState,
)
from cyclecast.flowgraph import FlowGraph, depth, extract_flow_graph
from cyclecast.overlay import Overlay, init_network
from cyclecast.stats import build_pure_join_overlay


def rng(seed=0):
    return np.random.default_rng(seed)


FIG_OVERLAY_TEXT = "6 2\n2 3 4 5 6 1\n4 6 5 2 1 3\n"
FIG_MU = {1: 1, 2: 2, 3: 2, 4: 1, 5: 1, 6: 2}


class TestStreamConfig:
    def test_valid(self):
        cfg = StreamConfig(3, 4, (1, 2, 1, 3))
        assert cfg.thin_prob == pytest.approx(1 / 3)

    def test_last_entry_must_be_last_layer(self):
        with pytest.raises(ValueError):
            StreamConfig(2, 3, (1, 1, 1))

    def test_prefix_entries_below_last_layer(self):
        with pytest.raises(ValueError):
            StreamConfig(2, 3, (1, 2, 2))

    def test_schedule_length(self):
        with pytest.raises(ValueError):
            StreamConfig(2, 3, (1, 2))

    def test_round_length_two_allowed(self):
        cfg = StreamConfig(2, 2, (1, 2))
        assert cfg.thin_prob == 1.0

    def test_default_schedule(self):
        assert default_schedule(2, 3) == (1, 1, 2)
        assert default_schedule(3, 4) == (1, 2, 1, 3)

    def test_unknown_phase_policy(self):
        with pytest.raises(ValueError):
            StreamConfig(2, 3, (1, 1, 2), "sync")


class TestAssignColor:
    @pytest.mark.parametrize(
        "t,k,want",
        [(0, 3, None), (3, 3, None), (6, 3, None), (4, 3, 1), (7, 4, 3), (1, 2, 1), (2, 2, None)],
    )
    def test_examples(self, t, k, want):
        assert assign_color(t, k) == want

    def test_domain(self):
        with pytest.raises(ValueError):
            assign_color(-1, 3)


class TestScheduledAction:
    def test_cycles_through_schedule(self):
        cfg = StreamConfig(3, 4, (1, 2, 1, 3))
        state = PeerStreamState(mu=2, phase=0)
        layers = [scheduled_action(9, t, cfg, state)[0] for t in range(4)]
        assert layers == [1, 2, 1, 3]

    def test_last_position_forwards_own_color(self):
        cfg = StreamConfig(2, 3, (1, 1, 2))
        state = PeerStreamState(mu=2, phase=0)
        assert scheduled_action(9, 5, cfg, state) == (2, 2)

    def test_periodic_in_round_length(self):
        cfg = StreamConfig(3, 4, (1, 2, 1, 3))
        state = PeerStreamState(mu=1, phase=2)
        for t in range(8):
            assert scheduled_action(9, t, cfg, state) == scheduled_action(9, t + 4, cfg, state)

    def test_every_window_covers_all_positions(self):
        cfg = StreamConfig(3, 4, (1, 2, 1, 3))
        for phase in range(4):
            state = PeerStreamState(mu=3, phase=phase)
            for start in range(9):
                acts = {scheduled_action(9, t, cfg, state) for t in range(start, start + 4)}
                assert len(acts) == 4


class TestStepSemantics:
    def test_generated_chunk_not_forwarded_same_slot(self):
        ov = init_network(2)
        cfg = StreamConfig(2, 3, (1, 1, 2), "zero")
        log = run(ov, cfg, 2, rng())
        # chunk 1 appears at the source at slot 1 and nowhere else yet
        assert log.first_rx == {(1, 1): 1}

    def test_older_reception_logged_but_latest_kept(self):
        ov = init_network(2)
        cfg = StreamConfig(2, 3, (1, 1, 2), "zero")
        sim = StreamSimulation(ov, cfg, rng())
        sim.states[1].latest = {1: 1}   # source is behind
        sim.states[2].latest = {1: 4}   # peer 2 already saw a later chunk
        sim.slot = 6  # position 1: both forward color 1 over layer 1
        sim.step()
        assert sim.first_rx[(2, 1)] == 6
        assert sim.states[2].latest[1] == 4

    def test_two_deliveries_same_slot_newest_wins(self):
        # layer 1: 1->2->3->1, layer 2: 1->3, 3->2, 2->1; peers 1 and 3
        # both deliver color-1 chunks to peer 2 during slot 0
        ov = Overlay.from_text("3 2\n2 3 1\n3 1 2\n")
        cfg = StreamConfig(2, 3, (1, 1, 2))
        mu = {1: 1, 2: 1, 3: 1}
        phases = {1: 0, 2: 0, 3: 1}  # peer 3 is at its last position at slot 0
        sim = StreamSimulation(ov, cfg, mu=mu, phases=phases)
        sim.states[1].latest = {1: 4}
        sim.states[3].latest = {1: 7}
        sim.step()
        assert sim.first_rx[(2, 4)] == 0 and sim.first_rx[(2, 7)] == 0
        assert sim.states[2].latest[1] == 7

    def test_idle_when_no_chunk_of_scheduled_color(self):
        ov = init_network(2)
        cfg = StreamConfig(2, 3, (1, 1, 2), "zero")
        sim = StreamSimulation(ov, cfg, rng())
        sim.step()  # slot 0: nothing generated yet, nothing to send
        assert sim.first_rx == {}


class TestRun:
    def test_two_peer_chunks_arrive_within_one_round(self):
        # hand check: d(2) = 1, so every chunk must arrive by t + K
        ov = init_network(2)
        cfg = StreamConfig(2, 3, (1, 1, 2), "zero")
        log = run(ov, cfg, 30, rng())
        for t, _ in log.generated:
            if t + 3 <= 29:
                assert log.first_rx[(2, t)] <= t + 3

    def test_six_peer_reference_run_delivers_everything(self):
        ov = Overlay.from_text(FIG_OVERLAY_TEXT)
        cfg = StreamConfig(2, 3, (1, 1, 2), "zero")
        phases = dict.fromkeys(range(1, 7), 0)
        log = run(ov, cfg, 200, mu=FIG_MU, phases=phases)
        graphs = [extract_flow_graph(ov, k, cfg, FIG_MU) for k in (1, 2)]
        assert check_freshness_invariant(log, 3) == []
        assert check_delay_bound(log, graphs, 3) == []
        assert check_throughput(log, graphs, 3) == []

    def test_zero_horizon_gives_empty_log(self):
        log = run(init_network(2), StreamConfig(2, 3, (1, 1, 2)), 0, rng())
        assert log.first_rx == {} and log.generated == []

    def test_negative_horizon_rejected(self):
        with pytest.raises(ValueError):
            run(init_network(2), StreamConfig(2, 3, (1, 1, 2)), -1, rng())

    def test_invalid_overlay_rejected(self):
        from cyclecast.overlay import Layer

        bad = Overlay([1, 2, 3, 4], [Layer({1: 2, 2: 1, 3: 4, 4: 3})] * 2)
        with pytest.raises(ValueError):
            run(bad, StreamConfig(2, 3, (1, 1, 2)), 5, rng())

    def test_determinism(self):
        ov = build_pure_join_overlay(20, 2, rng(3))
        cfg = StreamConfig(2, 3, (1, 1, 2), "random")
        a = run(ov, cfg, 60, rng(17))
        b = run(ov, cfg, 60, rng(17))
        assert a.first_rx == b.first_rx
        assert a.generated == b.generated
        assert a.receptions_csv() == b.receptions_csv()

    @pytest.mark.parametrize("policy", ["join-slot", "zero", "random"])
    def test_invariants_hold_under_every_phase_policy(self, policy):
        ov = build_pure_join_overlay(40, 2, rng(8))
        cfg = StreamConfig(2, 3, (1, 1, 2), policy)
        g = rng(21)
        mu, phases = draw_stream_assignments(ov, cfg, g)
        graphs = [extract_flow_graph(ov, k, cfg, mu) for k in (1, 2)]
        horizon = 3 * (2 * max(depth(gr) for gr in graphs) + 4)
        log = run(ov, cfg, horizon, mu=mu, phases=phases)
        assert check_freshness_invariant(log, 3) == []
        assert check_delay_bound(log, graphs, 3) == []
        assert check_throughput(log, graphs, 3) == []


class TestChecksOnSyntheticLogs:
    def make_log(self, first_rx, generated, horizon, k=3):
        return DeliveryLog(first_rx, generated, horizon, k, {}, {})

    def test_freshness_violation_detected(self):
        log = self.make_log(
            {(1, 1): 1, (1, 4): 4, (2, 1): 4, (2, 4): 5},
            [(1, 1), (4, 1)],
            10,
        )
        violations = check_freshness_invariant(log, 3)
        assert len(violations) == 1
        assert violations[0].peer == 2 and violations[0].chunk == 4

    def test_freshness_vacuous_for_first_round(self):
        log = self.make_log({(1, 1): 1, (2, 1): 2, (2, 2): 3}, [(1, 1), (2, 2)], 6)
        assert check_freshness_invariant(log, 3) == []

    def test_missing_earlier_chunk_is_violation(self):
        log = self.make_log({(1, 1): 1, (1, 4): 4, (2, 4): 8}, [(1, 1), (4, 1)], 12)
        assert len(check_freshness_invariant(log, 3)) == 1

    def test_delay_bound_arithmetic(self):
        # two-hop peer, K=3, chunk at slot 7: deadline is slot 13
        g = FlowGraph([1, 2, 3], [(1, 2), (2, 3), (3, 1)])
        base = {(1, 7): 7, (2, 7): 9}
        ok = self.make_log({**base, (3, 7): 13}, [(7, 1)], 20)
        late = self.make_log({**base, (3, 7): 14}, [(7, 1)], 20)
        assert check_delay_bound(ok, [g], 3) == []
        bad = check_delay_bound(late, [g], 3)
        assert len(bad) == 1 and bad[0].peer == 3

    def test_delay_bound_respects_horizon(self):
        g = FlowGraph([1, 2, 3], [(1, 2), (2, 3), (3, 1)])
        log = self.make_log({(1, 7): 7, (2, 7): 9}, [(7, 1)], 13)
        # deadline 13 is beyond the last executed slot 12: not checked
        assert check_delay_bound(log, [g], 3) == []

    def test_throughput_flags_missing_delivery(self):
        g = FlowGraph([1, 2], [(1, 2), (2, 1)])
        log = self.make_log({(1, 1): 1}, [(1, 1)], 30)
        bad = check_throughput(log, [g], 3)
        assert len(bad) == 1 and bad[0].peer == 2


class TestCsvExports:
    def test_reception_csv_shape(self):
        ov = init_network(2)
        log = run(ov, StreamConfig(2, 3, (1, 1, 2), "zero"), 10, rng())
        lines = log.receptions_csv().strip().splitlines()
        assert lines[0] == "peer,chunk_t,color,rx_slot"
        assert len(lines) == len(log.first_rx) + 1

    def test_generated_csv_shape(self):
        ov = init_network(2)
        log = run(ov, StreamConfig(2, 3, (1, 1, 2), "zero"), 10, rng())
        lines = log.generated_csv().strip().splitlines()
        assert lines[0] == "chunk_t,color"
        assert lines[1] == "1,1"


class TestAssignments:
    def test_forward_colors_in_range(self):
        ov = build_pure_join_overlay(30, 2, rng(2))
        cfg = StreamConfig(2, 4, (1, 1, 1, 2))
        mu, phases = draw_stream_assignments(ov, cfg, rng(5))
        assert set(mu) == ov.peers and set(phases) == ov.peers
        assert all(1 <= c <= 3 for c in mu.values())

    def test_zero_policy(self):
        ov = init_network(2)
        cfg = StreamConfig(2, 3, (1, 1, 2), "zero")
        _, phases = draw_stream_assignments(ov, cfg, rng(5))
        assert phases == {1: 0, 2: 0}

    def test_join_slot_policy_uses_id(self):
        ov = init_network(2)
        cfg = StreamConfig(2, 3, (1, 1, 2), "join-slot")
        _, phases = draw_stream_assignments(ov, cfg, rng(5))
        assert phases == {1: 1, 2: 2}
