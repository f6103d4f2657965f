"""Command-line front end: churn, stream, fgc and verify subcommands.

All randomness flows from --seed.  Flags may also be provided as flat keys
in a JSON file via --config; explicit flags win.  Exit status is 0 iff
every executed check passed.
"""

import argparse
import json
import sys

import numpy as np

from cyclecast import dissemination as dsm
from cyclecast import stats
from cyclecast.flowgraph import extract_flow_graph, fgc_construct
from cyclecast.overlay import Overlay, init_network, random_churn
from cyclecast.stats import (
    concentration_test,
    contraction_test,
    depth_scaling_experiment,
    diameter_symmetry_test,
    expansion_mean_test,
    fgc_equivalence_test,
    layer_uniformity_test,
)

SUITES = (
    "uniformity",
    "fgc-equivalence",
    "expansion",
    "concentration",
    "scaling",
    "contraction",
    "diameter",
    "topology",
    "dissemination",
    "all",
)

# Parameter presets: "desk" pins the acceptance-scale runs, "quick" is a
# fast smoke profile with the same structure.
PROFILES = {
    "desk": {
        "uniformity": dict(n=5, trials=24000, m_count=2),
        "fgc-equivalence": dict(n=6, q=0.5, trials=100_000),
        "expansion": dict(n=1000, q=0.5, t=500, trials=10_000),
        "concentration": dict(n=1000, q=0.5, psi=0.1, t_values=(250, 500), trials=10_000),
        "scaling": dict(
            n_list=(256, 512, 1024, 2048, 4096, 8192), q_values=(1.0, 0.5, 0.0), trials=200
        ),
        "contraction": dict(n=2048, q=0.5, epsilon=0.1, trials=10_000),
        "diameter": dict(n=64, q=0.5, trials=10_000, allpairs_n=256, allpairs_trials=100),
        "topology": dict(n=1000, m_count=3, ops=10_000),
        "dissemination": dict(
            n=500, m_values=(2, 3), k_values=(3, 4), policies=dsm.PHASE_POLICIES
        ),
    },
    "quick": {
        "uniformity": dict(n=4, trials=6000, m_count=2),
        "fgc-equivalence": dict(n=5, q=0.5, trials=24_000),
        "expansion": dict(n=200, q=0.5, t=100, trials=1500),
        "concentration": dict(n=200, q=0.5, psi=0.1, t_values=(50, 100), trials=1500),
        "scaling": dict(n_list=(64, 128, 256), q_values=(1.0, 0.5, 0.0), trials=100),
        "contraction": dict(n=256, q=0.5, epsilon=0.1, trials=800),
        "diameter": dict(n=32, q=0.5, trials=1500, allpairs_n=64, allpairs_trials=20),
        "topology": dict(n=100, m_count=3, ops=1000),
        "dissemination": dict(n=60, m_values=(2,), k_values=(3,), policies=("join-slot",)),
    },
}


def _parse_lambda(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _load_config(args: argparse.Namespace, parser_defaults: dict):
    """Fill unset flags from the JSON config file, if one was given."""
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        cfg = json.load(fh)
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            continue
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)


# ---------------------------------------------------------------------------
# churn


def cmd_churn(args) -> int:
    rng = np.random.default_rng(args.seed)
    overlay = init_network(args.m)
    try:
        if args.script:
            with open(args.script) as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    op, peer = line.split()
                    if op == "join":
                        overlay.join(int(peer), rng)
                    elif op == "leave":
                        overlay.leave(int(peer))
                    else:
                        raise ValueError(f"line {line_no}: unknown op {op!r}")
                    report = overlay.validate()
                    if not report.passed:
                        raise AssertionError(
                            f"line {line_no}: validation failed: {report.failures()}"
                        )
        else:
            random_churn(
                overlay, args.ops, args.n, rng, validate_each=True
            )
    except (ValueError, AssertionError) as exc:
        print(f"churn failed: {exc}", file=sys.stderr)
        return 1
    text = overlay.to_text()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(
        f"churn ok: {overlay.n} peers, {overlay.m_count} layers, validated after every op",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------------------------
# stream


def _stream_once(overlay, cfg, horizon, rng):
    """Run one dissemination and return (log, flowgraphs, violations)."""
    mu, phases = dsm.draw_stream_assignments(overlay, cfg, rng)
    graphs = [
        extract_flow_graph(overlay, k, cfg, mu) for k in range(1, cfg.k_count)
    ]
    if horizon is None:
        from cyclecast.flowgraph import depth

        d_max = max(depth(g) for g in graphs)
        horizon = cfg.k_count * (2 * d_max + 4)
    log = dsm.run(overlay, cfg, horizon, mu=mu, phases=phases)
    violations = (
        dsm.check_freshness_invariant(log, cfg.k_count)
        + dsm.check_delay_bound(log, graphs, cfg.k_count)
        + dsm.check_throughput(log, graphs, cfg.k_count)
    )
    return log, graphs, violations


def cmd_stream(args) -> int:
    rng = np.random.default_rng(args.seed)
    try:
        schedule = (
            _parse_lambda(args.lam) if args.lam else dsm.default_schedule(args.m, args.k)
        )
        cfg = dsm.StreamConfig(args.m, args.k, schedule, args.phase)
    except ValueError as exc:
        print(f"bad stream configuration: {exc}", file=sys.stderr)
        return 2
    if args.overlay_in:
        with open(args.overlay_in) as fh:
            overlay = Overlay.from_text(fh.read())
        if overlay.m_count != args.m:
            print("overlay layer count does not match --m", file=sys.stderr)
            return 2
    else:
        overlay = stats.build_pure_join_overlay(args.n, args.m, rng)
    log, _, violations = _stream_once(overlay, cfg, args.horizon, rng)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(log.receptions_csv())
    if args.generated_out:
        with open(args.generated_out, "w") as fh:
            fh.write(log.generated_csv())
    if violations:
        v = violations[0]
        print(
            f"stream failed: {len(violations)} violation(s); first: {v.kind}: {v.detail}",
            file=sys.stderr,
        )
        return 1
    print(
        f"stream ok: {overlay.n} peers, horizon {log.horizon}, "
        f"{len(log.generated)} chunks, {len(log.first_rx)} receptions, 0 violations",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------------------------
# fgc


def cmd_fgc(args) -> int:
    rng = np.random.default_rng(args.seed)
    trace = fgc_construct(args.n, args.q, rng)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(trace.to_csv())
    else:
        sys.stdout.write(trace.to_csv())
    if args.graph_out:
        g = trace.superposed()
        with open(args.graph_out, "w") as fh:
            fh.write(f"# source={g.source}\n")
            for i, j in g.edges:
                fh.write(f"{i} {j}\n")
    print(
        f"fgc ok: n={args.n} q={args.q} extra-edges={len(trace.e2)}",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------------------------
# verify


def _verify_topology(params, seed) -> stats.ExperimentReport:
    rng = np.random.default_rng(seed)
    overlay = init_network(params["m_count"])
    failure = None
    try:
        random_churn(overlay, params["ops"], params["n"], rng, validate_each=True)
    except AssertionError as exc:
        failure = str(exc)
    report = stats.ExperimentReport(
        "topology-invariant",
        {"seed": seed, **params},
        values={"final_n": overlay.n},
    )
    report.check(
        "every mutation kept all layers single cycles",
        failure is None,
        0.0 if failure is None else 1.0,
        0.0,
        note=failure or f"{params['ops']} operations",
    )
    return report


def _verify_dissemination(params, seed) -> list:
    reports = []
    for m in params["m_values"]:
        for k in params["k_values"]:
            for policy in params["policies"]:
                rng = np.random.default_rng(seed)
                overlay = stats.build_pure_join_overlay(params["n"], m, rng)
                cfg = dsm.StreamConfig(m, k, dsm.default_schedule(m, k), policy)
                log, _, violations = _stream_once(overlay, cfg, None, rng)
                report = stats.ExperimentReport(
                    "dissemination",
                    {"seed": seed, "n": params["n"], "m": m, "k": k, "policy": policy},
                    values={
                        "horizon": log.horizon,
                        "chunks": len(log.generated),
                        "receptions": len(log.first_rx),
                    },
                )
                report.check(
                    "freshness, delay bound and throughput",
                    not violations,
                    len(violations),
                    0.0,
                )
                reports.append(report)
    return reports


def _run_suite(name: str, profile: dict, seed: int, q_override, keep_samples=False) -> list:
    if name == "uniformity":
        p = profile["uniformity"]
        return [
            layer_uniformity_test(p["n"], p["trials"], script, seed=seed, m_count=p["m_count"])
            for script in ("pure-join", "mixed")
        ]
    if name == "fgc-equivalence":
        p = profile["fgc-equivalence"]
        q = p["q"] if q_override is None else q_override
        return [fgc_equivalence_test(p["n"], q, p["trials"], seed=seed)]
    if name == "expansion":
        p = profile["expansion"]
        q = p["q"] if q_override is None else q_override
        return [
            expansion_mean_test(
                p["n"], q, p["t"], p["trials"], seed=seed, keep_samples=keep_samples
            )
        ]
    if name == "concentration":
        p = profile["concentration"]
        q = p["q"] if q_override is None else q_override
        return [
            concentration_test(p["n"], q, p["psi"], p["t_values"], p["trials"], seed=seed)
        ]
    if name == "scaling":
        p = profile["scaling"]
        qs = p["q_values"] if q_override is None else (q_override,)
        return [
            depth_scaling_experiment(
                p["n_list"], q, p["trials"], seed=seed, keep_samples=keep_samples
            )
            for q in qs
        ]
    if name == "contraction":
        p = profile["contraction"]
        q = p["q"] if q_override is None else q_override
        return [contraction_test(p["n"], q, p["epsilon"], p["trials"], seed=seed)]
    if name == "diameter":
        p = profile["diameter"]
        q = p["q"] if q_override is None else q_override
        return [
            diameter_symmetry_test(
                p["n"],
                q,
                p["trials"],
                seed=seed,
                allpairs_n=p["allpairs_n"],
                allpairs_trials=p["allpairs_trials"],
                keep_samples=keep_samples,
            )
        ]
    if name == "topology":
        return [_verify_topology(profile["topology"], seed)]
    if name == "dissemination":
        return [_verify_dissemination(profile["dissemination"], seed)]
    raise ValueError(f"unknown suite {name}")


def cmd_verify(args) -> int:
    profile = PROFILES[args.profile]
    suites = [s for s in SUITES if s != "all"] if args.suite == "all" else [args.suite]
    keep = bool(args.samples_out)
    reports = []
    for suite in suites:
        result = _run_suite(suite, profile, args.seed, args.q, keep_samples=keep)
        for item in result:
            reports.extend(item if isinstance(item, list) else [item])
    failed = []
    for report in reports:
        print(report.to_text())
        print()
        if not report.passed:
            failed.append(report.name)
    if args.out:
        payload = json.dumps([r.to_dict() for r in reports], indent=2)
        with open(args.out, "w") as fh:
            fh.write(payload)
    if keep:
        for report in reports:
            for key in report.samples:
                path = f"{args.samples_out}{report.name}.{key}.csv"
                with open(path, "w") as fh:
                    fh.write(report.samples_csv(key))
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return 1
    print(f"all {len(reports)} report(s) passed", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclecast",
        description="P2P streaming over random Hamiltonian cycle overlays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("churn", help="run a join/leave history, validating each step")
    p.add_argument("--n", type=int, default=100, help="target peer count")
    p.add_argument("--m", type=int, default=2, help="layer count")
    p.add_argument("--ops", type=int, default=1000, help="random operations to run")
    p.add_argument("--script", help="file of explicit 'join ID' / 'leave ID' lines")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the overlay dump here (default stdout)")
    p.add_argument("--config", help="JSON file with flat flag defaults")
    p.set_defaults(func=cmd_churn)

    p = sub.add_parser("stream", help="disseminate chunks and check the run")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=3, help="slots per scheduling round")
    p.add_argument("--lam", help="comma-separated layer schedule, e.g. 1,1,2")
    p.add_argument("--horizon", type=int, help="slots to simulate (default: auto-sized)")
    p.add_argument("--phase", choices=dsm.PHASE_POLICIES, default="join-slot")
    p.add_argument("--overlay-in", help="load a dumped overlay instead of building one")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the reception log CSV here")
    p.add_argument("--generated-out", help="write the generated-chunk CSV here")
    p.add_argument("--config", help="JSON file with flat flag defaults")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("fgc", help="run the incremental flow-graph construction")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the trace CSV here (default stdout)")
    p.add_argument("--graph-out", help="write the superposed edge list here")
    p.add_argument("--config", help="JSON file with flat flag defaults")
    p.set_defaults(func=cmd_fgc)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("--q", type=float, help="override the suite's thinning probability")
    p.add_argument("--out", help="write all reports as JSON here")
    p.add_argument(
        "--samples-out",
        help="prefix for raw per-trial sample CSVs (where a suite records them)",
    )
    p.add_argument("--config", help="JSON file with flat flag defaults")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub_action = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    defaults = {a.dest: a.default for a in sub_action.choices[args.command]._actions}
    _load_config(args, defaults)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
