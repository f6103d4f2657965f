"""Monte Carlo verification harness for the overlay's distributional claims.

Each experiment is a pure function of its parameters and a master seed:
trial i draws its randomness from a generator keyed by (seed, i), so
reports are bit-identical across reruns and trials could be farmed out to
workers without changing any number.

Distributional checks use chi-square goodness of fit at significance
0.001 (several tests run per suite, so the level is conservative).  Bound
checks are one-sided: an empirical frequency is compared against a stated
exponential or polynomial ceiling and can only fail if the ceiling is
actually exceeded.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats as sps

from cyclecast.overlay import SOURCE, Overlay, init_network
from cyclecast.flowgraph import (
    all_pairs_diameter,
    bfs_distances,
    contraction_hop_budget,
    depth,
    expansion_mean_formula,
    fgc_construct,
    iterate_coverage,
    reverse,
    sample_thinned_pair,
    superpose,
)

SIGNIFICANCE = 0.001


def trial_rng(seed: int, *key) -> np.random.Generator:
    """Generator for one trial, derived only from the seed and the key."""
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: float
    reference: float
    kind: str = "bound"  # "bound" (observed <= reference) or "p-value" (>=)
    note: str = ""


@dataclass
class ExperimentReport:
    """Outcome of one experiment; serializable and reproducible."""

    name: str
    parameters: dict
    values: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    expected_fail: bool = False
    samples: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, passed, observed, reference, kind="bound", note=""):
        self.checks.append(
            CheckResult(name, bool(passed), float(observed), float(reference), kind, note)
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def samples_csv(self, key: str) -> str:
        """Per-trial values of one recorded sample series as CSV."""
        lines = ["trial,value"]
        lines.extend(f"{i},{v}" for i, v in enumerate(self.samples[key]))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [f"experiment: {self.name}"]
        lines.append("  parameters: " + ", ".join(f"{k}={v}" for k, v in self.parameters.items()))
        for k, v in self.values.items():
            lines.append(f"  {k} = {v}")
        for c in self.checks:
            rel = "<=" if c.kind == "bound" else ">"
            status = "pass" if c.passed else "FAIL"
            note = f"  ({c.note})" if c.note else ""
            lines.append(
                f"  [{status}] {c.name}: {c.observed:.6g} {rel} {c.reference:.6g}{note}"
            )
        tag = " (expected fail: negative control)" if self.expected_fail else ""
        lines.append(f"  result: {'PASS' if self.passed else 'FAIL'}{tag}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# chi-square helpers


def uniform_chisquare_p(counts) -> float:
    """Goodness-of-fit p-value against the uniform distribution."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size <= 1:
        return 1.0
    if counts.sum() / counts.size < 5:
        raise ValueError("expected cell counts below 5; draw more trials")
    stat, p = sps.chisquare(counts)
    return float(p)


def two_sample_chisquare_p(sample_a, sample_b, min_expected: float = 5.0) -> float:
    """Two-sample chi-square that the samples share one distribution.

    Categories are merged in sorted order until every pooled bin keeps the
    expected counts of both rows at or above ``min_expected``.
    """
    ca, cb = Counter(sample_a), Counter(sample_b)
    cats = sorted(set(ca) | set(cb))
    na, nb = sum(ca.values()), sum(cb.values())
    if not cats or na == 0 or nb == 0:
        raise ValueError("empty sample")
    threshold = min_expected * (na + nb) / min(na, nb)
    bins_a, bins_b = [], []
    acc_a = acc_b = 0
    for cat in cats:
        acc_a += ca.get(cat, 0)
        acc_b += cb.get(cat, 0)
        if acc_a + acc_b >= threshold:
            bins_a.append(acc_a)
            bins_b.append(acc_b)
            acc_a = acc_b = 0
    if acc_a or acc_b:
        if bins_a:
            bins_a[-1] += acc_a
            bins_b[-1] += acc_b
        else:
            bins_a, bins_b = [acc_a], [acc_b]
    if len(bins_a) < 2:
        return 1.0  # a single shared category: trivially identical
    _, p, _, _ = sps.chi2_contingency([bins_a, bins_b])
    return float(p)


# ---------------------------------------------------------------------------
# churn histories


def _leave_random(overlay: Overlay, rng: np.random.Generator):
    plist = overlay._peer_list
    peer = SOURCE
    while peer == SOURCE:
        peer = plist[rng.integers(0, overlay.n)]
    overlay.leave(peer)


def build_pure_join_overlay(n: int, m_count: int, rng: np.random.Generator) -> Overlay:
    """Grow from the seed pair to n peers with joins only."""
    overlay = init_network(m_count)
    for pid in range(3, n + 1):
        overlay.join(pid, rng)
    return overlay


def build_mixed_churn_overlay(n: int, m_count: int, rng: np.random.Generator) -> Overlay:
    """Overshoot to n+2 peers, interleave three leave/join pairs, shrink to n."""
    overlay = init_network(m_count)
    next_id = 3
    while overlay.n < n + 2:
        overlay.join(next_id, rng)
        next_id += 1
    for _ in range(3):
        _leave_random(overlay, rng)
        overlay.join(next_id, rng)
        next_id += 1
    while overlay.n > n:
        _leave_random(overlay, rng)
    return overlay


CHURN_SCRIPTS = {
    "pure-join": build_pure_join_overlay,
    "mixed": build_mixed_churn_overlay,
}


def _resolve_script(churn_script):
    if callable(churn_script):
        return churn_script, getattr(churn_script, "__name__", "custom")
    try:
        return CHURN_SCRIPTS[churn_script], churn_script
    except KeyError:
        raise ValueError(
            f"unknown churn script {churn_script!r}; known: {sorted(CHURN_SCRIPTS)}"
        ) from None


# ---------------------------------------------------------------------------
# experiments


def layer_uniformity_test(
    n: int,
    trials: int,
    churn_script="pure-join",
    seed: int = 0,
    m_count: int = 2,
) -> ExperimentReport:
    """Layer-1 cycles from fresh churn histories are uniform over (N-1)! cycles."""
    import itertools

    if n > 6:
        raise ValueError("cycle space too large to enumerate beyond n=6")
    n_cycles = math.factorial(n - 1)
    if trials < 1000 * n_cycles:
        raise ValueError(f"need at least {1000 * n_cycles} trials for n={n}")
    script, script_name = _resolve_script(churn_script)
    counts = Counter()
    for i in range(trials):
        overlay = script(n, m_count, trial_rng(seed, i))
        counts[overlay.relabeled_cycle_code(1)] += 1
    cats = [tuple(p) for p in itertools.permutations(range(2, n + 1))]
    observed = [counts.get(c, 0) for c in cats]
    if sum(observed) != trials:
        raise AssertionError("observed cycle codes outside the enumerated space")
    p = uniform_chisquare_p(observed)
    report = ExperimentReport(
        "layer-uniformity",
        {"n": n, "trials": trials, "script": script_name, "m_count": m_count, "seed": seed},
        values={"cycle_count": n_cycles, "min_cell": min(observed), "max_cell": max(observed)},
    )
    report.check("uniform over cycles", p > SIGNIFICANCE, p, SIGNIFICANCE, kind="p-value")
    return report


def _cycle_code_from_edges(edges, n: int) -> tuple:
    succ = dict(edges)
    code = []
    cur = succ[SOURCE]
    while cur != SOURCE:
        code.append(cur)
        cur = succ[cur]
    if len(code) != n - 1:
        raise AssertionError("edge set is not a Hamiltonian cycle")
    return tuple(code)


def fgc_equivalence_test(n: int, q: float, trials: int, seed: int = 0) -> ExperimentReport:
    """Incremental construction matches permute-and-thin distributionally.

    Checks (i) uniformity of the incrementally grown cycle over (N-1)!
    cycles and (ii) equality of the joint law of (second-set edge count,
    superposed depth) across the two samplers.
    """
    import itertools

    if n > 7:
        raise ValueError("joint law enumeration is only feasible up to n=7")
    joint_a = []
    joint_b = []
    code_counts = Counter()
    for i in range(trials):
        e1, e2 = sample_thinned_pair(n, q, trial_rng(seed, 0, i))
        joint_a.append((len(e2), depth(superpose(e1, e2, n))))
        trace = fgc_construct(n, q, trial_rng(seed, 1, i))
        code_counts[_cycle_code_from_edges(trace.e1, n)] += 1
        joint_b.append((len(trace.e2), depth(trace.superposed())))
    cats = [tuple(p) for p in itertools.permutations(range(2, n + 1))]
    p_uniform = uniform_chisquare_p([code_counts.get(c, 0) for c in cats])
    p_joint = two_sample_chisquare_p(joint_a, joint_b)
    report = ExperimentReport(
        "fgc-equivalence",
        {"n": n, "q": q, "trials": trials, "seed": seed},
        values={
            "mean_extra_edges_permute": float(np.mean([a for a, _ in joint_a])),
            "mean_extra_edges_fgc": float(np.mean([a for a, _ in joint_b])),
            "mean_depth_permute": float(np.mean([d for _, d in joint_a])),
            "mean_depth_fgc": float(np.mean([d for _, d in joint_b])),
        },
    )
    report.check(
        "grown cycle uniform", p_uniform > SIGNIFICANCE, p_uniform, SIGNIFICANCE, kind="p-value"
    )
    report.check(
        "joint (edges, depth) law matches",
        p_joint > SIGNIFICANCE,
        p_joint,
        SIGNIFICANCE,
        kind="p-value",
    )
    return report


def expansion_mean_test(
    n: int, q: float, t: int, trials: int, seed: int = 0, keep_samples: bool = False
) -> ExperimentReport:
    """Mean one-hop coverage z(t)/t agrees with 1 + 1/t + q(1 - t/(N-1))."""
    if not 1 <= t <= n // 2:
        raise ValueError("need 1 <= t <= n/2")
    zs = np.empty(trials, dtype=np.float64)
    for i in range(trials):
        trace = fgc_construct(n, q, trial_rng(seed, i))
        zs[i] = trace.z_series[t]
    target = expansion_mean_formula(n, q, t)
    mean = float(np.mean(zs) / t)
    se = float(np.std(zs / t, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    margin = abs(mean - target)
    formula_min = min(expansion_mean_formula(n, q, tt) for tt in range(1, n // 2 + 1))
    report = ExperimentReport(
        "expansion-mean",
        {"n": n, "q": q, "t": t, "trials": trials, "seed": seed},
        values={"mean": mean, "target": target, "se": se, "formula_min": formula_min},
    )
    if keep_samples:
        report.samples["z_over_t"] = (zs / t).tolist()
    report.check(
        "mean z(t)/t within 3 standard errors",
        margin <= 3 * se + 1e-12,
        margin,
        3 * se,
        note=f"target {target:.6f}",
    )
    report.check(
        "formula minimum exceeds 1+q/2",
        formula_min > 1 + q / 2,
        1 + q / 2,
        formula_min,
        note="minimum over t <= N/2",
    )
    return report


def concentration_test(
    n: int, q: float, psi: float, t_values, trials: int, seed: int = 0
) -> ExperimentReport:
    """One-sided Chernoff-style ceiling on slow-expansion events.

    Frequency of {z(t) <= (1+psi) t} must not exceed exp(-t (q/2-psi)^2/8)
    at any requested t <= N/2.
    """
    if not 0 < psi < q / 2:
        raise ValueError("need 0 < psi < q/2")
    t_values = sorted(int(t) for t in t_values)
    if t_values[0] < 1 or t_values[-1] > n // 2:
        raise ValueError("every t must lie in [1, n/2]")
    sigma = (q / 2 - psi) ** 2 / 8
    hits = dict.fromkeys(t_values, 0)
    for i in range(trials):
        trace = fgc_construct(n, q, trial_rng(seed, i))
        for t in t_values:
            if trace.z_series[t] <= (1 + psi) * t:
                hits[t] += 1
    report = ExperimentReport(
        "expansion-concentration",
        {"n": n, "q": q, "psi": psi, "t_values": t_values, "trials": trials, "seed": seed},
        values={"sigma": sigma},
    )
    for t in t_values:
        freq = hits[t] / trials
        bound = math.exp(-sigma * t)
        report.check(f"slow expansion at t={t}", freq <= bound, freq, bound)
    return report


def depth_scaling_experiment(
    n_list,
    q: float,
    trials: int,
    seed: int = 0,
    psi: float = 0.1,
    allpairs_limit: int = 512,
    keep_samples: bool = False,
) -> ExperimentReport:
    """Mean depth grows linearly in ln N (R^2 >= 0.95 for q > 0).

    Also records, per trace, the distance to the median-discovery node and
    to the last node, checking both against their stated tail ceilings.
    With q=0 the graph is a bare cycle: the experiment asserts depth N-1
    exactly and reports the failed fit as the expected negative control.
    """
    n_list = sorted(int(x) for x in n_list)
    if len(n_list) < 2 or trials < 100:
        raise ValueError("need at least two sizes and 100 trials per size")
    if q > 0 and not 0 < psi < q / 2:
        raise ValueError("need 0 < psi < q/2")
    mean_depth = []
    max_ratio = []
    values = {}
    report = ExperimentReport(
        "depth-scaling",
        {"n_list": n_list, "q": q, "trials": trials, "seed": seed, "psi": psi},
        expected_fail=(q == 0),
    )
    for n in n_list:
        depths = np.empty(trials)
        mid_over = 0
        tail_over = 0
        diam_sum = 0
        theta = math.log(n) + math.log(n / 2) / math.log(1 + psi) if q > 0 else None
        for i in range(trials):
            trace = fgc_construct(n, q, trial_rng(seed, n, i))
            g = trace.superposed()
            dist = bfs_distances(g, SOURCE)
            depths[i] = depth(g, dist)
            if q > 0:
                d_mid = dist[int(trace.order[n // 2 - 1])]
                d_last = dist[int(trace.order[n - 1])]
                if d_mid >= theta:
                    mid_over += 1
                if d_last - d_mid > theta:
                    tail_over += 1
            if n <= allpairs_limit:
                diam_sum += all_pairs_diameter(g)
        mean_depth.append(float(depths.mean()))
        max_ratio.append(float(depths.max() / math.log(n)))
        if keep_samples:
            report.samples[f"depth_n{n}"] = depths.astype(int).tolist()
        values[f"mean_depth_n{n}"] = mean_depth[-1]
        values[f"max_depth_over_log_n{n}"] = max_ratio[-1]
        if n <= allpairs_limit:
            values[f"mean_diameter_n{n}"] = diam_sum / trials
        if q == 0:
            report.check(
                f"bare-cycle depth exact at n={n}",
                bool((depths == n - 1).all()),
                float(depths.max()),
                n - 1,
                note="negative control",
            )
        else:
            sigma = (q / 2 - psi) ** 2 / 8
            sigma_c = (q / 2 - psi) ** 2 / 32
            log_term = math.log(n / 2) / math.log(1 + psi)
            report.check(
                f"median-node distance tail at n={n} (natural log)",
                mid_over / trials <= math.exp(sigma) * log_term / n**sigma,
                mid_over / trials,
                math.exp(sigma) * log_term / n**sigma,
            )
            report.check(
                f"last-node distance gap tail at n={n} (natural log)",
                tail_over / trials <= log_term / n**sigma_c + math.exp(-sigma_c * n / 4),
                tail_over / trials,
                log_term / n**sigma_c + math.exp(-sigma_c * n / 4),
            )
    fit = sps.linregress(np.log(n_list), mean_depth)
    r2 = float(fit.rvalue**2)
    values.update({"fit_slope": float(fit.slope), "fit_intercept": float(fit.intercept), "fit_r2": r2})
    report.values = values
    # Boundedness of max depth / ln N: in the top half of the size list the
    # ratio must not exceed the running maximum from smaller sizes by more
    # than 10%.  A growing ratio means the depth outpaces log N.
    half = len(n_list) // 2
    worst = 0.0
    for i in range(half, len(max_ratio)):
        worst = max(worst, max_ratio[i] / max(max_ratio[:i]))
    ratio_ok = worst <= 1.10
    if q == 0:
        report.check(
            "log scaling rejected on the bare cycle",
            not (r2 >= 0.95 and ratio_ok),
            r2,
            0.95,
            note="depth is linear in N, not log N",
        )
    else:
        report.check("linear fit of depth vs ln N", r2 >= 0.95, r2, 0.95, kind="p-value")
        report.check(
            "max depth / ln N bounded over the top half (10% slack)",
            ratio_ok,
            worst,
            1.10,
        )
    return report


def contraction_test(
    n: int, q: float, epsilon: float, trials: int, seed: int = 0
) -> ExperimentReport:
    """Late-phase contraction obeys its supermartingale ceilings.

    Checks, over traces: (i) the halfway contraction ratio rarely exceeds
    1 - q/2 + eps; (ii) the ratio rarely rises by more than eps after the
    halfway point; (iii) after the stated number of contraction hops, at
    most log N nodes remain uncovered; (iv) the mean ratio is nonincreasing
    within Monte Carlo error.
    """
    if q == 0:
        if not 0 < epsilon < 1:
            raise ValueError("need 0 < epsilon < 1")
    elif not 0 < epsilon < q / 2:
        raise ValueError("need 0 < epsilon < q/2")
    t0 = n // 2
    ts = np.arange(n)  # F(t) defined for t < n
    f_sum = np.zeros(n)
    fdiff_sum = np.zeros(n - 1)
    fdiff_sq = np.zeros(n - 1)
    rise_hits = np.zeros(n, dtype=np.int64)  # index t > t0
    start_hits = 0
    uncovered_hits = 0
    phi = 1 - q / 2 + epsilon
    hops = contraction_hop_budget(n, phi, t0) if phi < 1 else None
    for i in range(trials):
        trace = fgc_construct(n, q, trial_rng(seed, i))
        z = trace.z_series
        f = (n - z[:n]) / (n - ts)
        f_sum += f
        d = np.diff(f)
        fdiff_sum += d
        fdiff_sq += d * d
        if f[t0] >= 1 - q / 2 + epsilon:
            start_hits += 1
        rise_hits[t0 + 1 :] += f[t0 + 1 :] - f[t0] > epsilon
        if hops is not None:
            if n - iterate_coverage(z, t0, hops) > math.log(n):
                uncovered_hits += 1
    report = ExperimentReport(
        "contraction",
        {"n": n, "q": q, "epsilon": epsilon, "trials": trials, "seed": seed},
        values={
            "t0": t0,
            "mean_F_t0": float(f_sum[t0] / trials),
            "hop_budget": hops,
        },
    )
    report.check(
        "halfway ratio above 1-q/2+eps",
        start_hits / trials <= math.exp(-epsilon**2 * t0 / 32),
        start_hits / trials,
        math.exp(-epsilon**2 * t0 / 32),
    )
    rise_freq = rise_hits[t0 + 1 :] / trials
    rise_bounds = np.exp(-(epsilon**2) * (n - ts[t0 + 1 :]) / 8)
    worst = int(np.argmax(rise_freq - rise_bounds))
    report.check(
        "ratio rise after halfway (all later t)",
        bool((rise_freq <= rise_bounds).all()),
        float(rise_freq[worst]),
        float(rise_bounds[worst]),
        note=f"worst margin at t={t0 + 1 + worst}",
    )
    if hops is not None:
        bound = hops * n ** (-(epsilon**2) / 8)
        report.check(
            "uncovered nodes after hop budget",
            uncovered_hits / trials <= bound,
            uncovered_hits / trials,
            bound,
        )
    else:
        report.check(
            "uncovered nodes after hop budget",
            True,
            0.0,
            1.0,
            note="degenerate at q=0: no contraction claimed",
        )
    mean_diff = fdiff_sum / trials
    var_diff = np.maximum(fdiff_sq / trials - mean_diff**2, 0.0)
    se_diff = np.sqrt(var_diff / max(trials - 1, 1))
    slack = mean_diff - 3 * se_diff
    worst = int(np.argmax(slack))
    report.check(
        "mean ratio nonincreasing (3 standard errors)",
        bool((slack <= 1e-12).all()),
        float(mean_diff[worst]),
        float(3 * se_diff[worst]),
        note=f"worst step at t={worst}",
    )
    return report


def diameter_symmetry_test(
    n: int,
    q: float,
    trials: int,
    seed: int = 0,
    allpairs_n: int = 256,
    allpairs_trials: int = 100,
    keep_samples: bool = False,
) -> ExperimentReport:
    """Depth from the source and depth toward the source share one law.

    Uses two independent banks of sampled graphs (the statistics would be
    paired, not independent, if both came from the same graphs).  Also
    asserts, per graph at size ``allpairs_n``, that the exact diameter is
    at most depth-from plus depth-toward (both paths run through the
    source).
    """
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    if allpairs_n > 256:
        raise ValueError("all-pairs check is limited to n <= 256")
    from_depths = []
    to_depths = []
    for i in range(trials):
        e1, e2 = sample_thinned_pair(n, q, trial_rng(seed, 0, i))
        from_depths.append(depth(superpose(e1, e2, n)))
        e1, e2 = sample_thinned_pair(n, q, trial_rng(seed, 1, i))
        to_depths.append(depth(reverse(superpose(e1, e2, n))))
    p = two_sample_chisquare_p(from_depths, to_depths)
    slack_max = -(10**9)
    triangle_ok = True
    for i in range(allpairs_trials):
        e1, e2 = sample_thinned_pair(allpairs_n, q, trial_rng(seed, 2, i))
        g = superpose(e1, e2, allpairs_n)
        d_from = depth(g)
        d_to = depth(reverse(g))
        diam = all_pairs_diameter(g)
        slack_max = max(slack_max, diam - d_from - d_to)
        if diam > d_from + d_to:
            triangle_ok = False
    report = ExperimentReport(
        "diameter-symmetry",
        {
            "n": n,
            "q": q,
            "trials": trials,
            "seed": seed,
            "allpairs_n": allpairs_n,
            "allpairs_trials": allpairs_trials,
        },
        values={
            "mean_depth_from": float(np.mean(from_depths)),
            "mean_depth_to": float(np.mean(to_depths)),
            "max_diameter_slack": slack_max,
        },
    )
    if keep_samples:
        report.samples["depth_from"] = from_depths
        report.samples["depth_to"] = to_depths
    report.check(
        "depth laws match (two-sample)", p > SIGNIFICANCE, p, SIGNIFICANCE, kind="p-value"
    )
    report.check(
        "diameter <= depth-from + depth-toward",
        triangle_ok,
        float(slack_max),
        0.0,
        note=f"exact, all-pairs at n={allpairs_n}",
    )
    return report
