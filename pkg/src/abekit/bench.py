"""Benchmark harness: time / peak-memory / op-count / energy-estimate
measurements across schemes, security levels and attribute counts, plus
a per-op-class wall-time breakdown of the group operations.

Energy is a model, not a measurement: joules = active delta power (mW)
x wall time (ms) x 1e-6.  Device profiles carry published baseline
powers for four reference boards; their default active deltas are
calibrated from reported (time, energy) pairs and are meant to be
re-calibrated by users with power hardware.
"""

from __future__ import annotations

import csv
import math
import random
import resource
import statistics
import time
from dataclasses import dataclass, field, replace

from . import schemes as sch
from .access_tree import AttributeBag, compile_text
from .pairing import SecurityLevel, suite_init

CSV_HEADER = ["scheme", "op", "level", "n_attrs", "trial", "wall_time_ms",
              "peak_mem_bytes", "exp_g1", "exp_g2", "exp_gt", "pairings",
              "hash_to_group", "energy_est_j"]
SUMMARY_HEADER = ["scheme", "op", "level", "n_attrs", "mean_ms", "ci95_ms"]

POLICY_SHAPES = ("and", "or", "random")


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    baseline_power_mw: float
    active_delta_mw: float

    def __post_init__(self):
        if self.baseline_power_mw <= 0 or self.active_delta_mw < 0:
            raise ValueError("powers must be positive")


# Baseline powers are published board figures; active deltas are
# calibrated from reported (execution time, energy) pairs.
DEVICE_PROFILES = {
    "edison": DeviceProfile("edison", 1335.84, 180.8),
    "galileo": DeviceProfile("galileo", 7021.44, 286.7),
    "rpi1": DeviceProfile("rpi1", 2358.4, 160.0),
    "rpizero": DeviceProfile("rpizero", 1504.0, 160.0),
}
DEFAULT_PROFILE = "edison"


@dataclass
class BenchConfig:
    schemes: tuple = ("cp",)
    levels: tuple = (80, 112, 128)
    attr_counts: tuple = tuple(range(1, 31))
    trials: int = 3
    shape: str = "and"
    profile: str = DEFAULT_PROFILE
    ops: tuple = ("encrypt", "decrypt")
    seed: int | None = None
    warmup: int = 1

    def validate(self):
        if self.trials < 3:
            raise ValueError("trials must be >= 3")
        if not self.attr_counts or any(not 1 <= n <= 64 for n in self.attr_counts):
            raise ValueError("attribute counts must lie in [1, 64]")
        if any(lv not in (80, 112, 128) for lv in self.levels):
            raise ValueError("levels must be a subset of {80, 112, 128}")
        if self.shape not in POLICY_SHAPES:
            raise ValueError(f"unknown policy shape {self.shape!r}")
        if self.profile not in DEVICE_PROFILES:
            raise ValueError(f"unknown device profile {self.profile!r}")
        if any(s not in ("cp", "kp") for s in self.schemes):
            raise ValueError("schemes must be a subset of {cp, kp}")


@dataclass
class BenchRecord:
    scheme: str
    op: str
    level: int
    n_attrs: int
    trial: int
    wall_time_ms: float
    peak_mem_bytes: int
    exp_g1: int
    exp_g2: int
    exp_gt: int
    pairings: int
    hash_to_group: int
    energy_est_j: float

    def row(self):
        return [self.scheme, self.op, self.level, self.n_attrs, self.trial,
                f"{self.wall_time_ms:.3f}", self.peak_mem_bytes,
                self.exp_g1, self.exp_g2, self.exp_gt, self.pairings,
                self.hash_to_group, f"{self.energy_est_j:.6f}"]


def estimate_energy(profile: DeviceProfile, wall_time_ms: float) -> float:
    """Model: joules = active delta power in mW x time in ms x 1e-6."""
    return profile.active_delta_mw * wall_time_ms * 1e-6


def bench_policy(shape: str, n: int, rng=None) -> str:
    attrs = [f"attr_{i}" for i in range(1, n + 1)]
    if n == 1:
        return attrs[0]
    if shape == "and":
        return " and ".join(attrs)
    if shape == "or":
        return " or ".join(attrs)
    rng = rng or random.Random(0)
    k = rng.randint(1, n)
    return f"{k} of (" + ", ".join(attrs) + ")"


def _peak_rss_bytes() -> int:
    # ru_maxrss is KiB on Linux; a high-water mark, so deltas are best-effort
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def _measure(fn):
    rss0 = _peak_rss_bytes()
    t0 = time.perf_counter()
    result = fn()
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    peak = max(0, _peak_rss_bytes() - rss0)
    return result, elapsed_ms, peak


def run_bench(config: BenchConfig, csv_path=None, summary_path=None):
    """One BenchRecord per (scheme, op, level, n_attrs, trial).  Counter
    columns are seed-independent and identical across trials; times are
    wall-clock and machine-specific.

    Trials are interleaved across cells (trial-major order), so a
    transient machine slowdown touches each cell in at most one trial
    instead of biasing whole cells.
    """
    config.validate()
    profile = DEVICE_PROFILES[config.profile]
    rng = random.Random(config.seed) if config.seed is not None \
        else random.SystemRandom()

    def make_cell(scheme, level_bits, n):
        suite = suites[(scheme, level_bits)]
        policy = bench_policy(config.shape, n, random.Random(n))
        tree = compile_text(policy)
        bag = AttributeBag.build([f"attr_{i}" for i in range(1, n + 1)])
        if scheme == "cp":
            params, master = setups[(scheme, level_bits)]
            key = sch.cp_keygen(params, master, bag, rng)

            def encrypt():
                return sch.cp_encrypt(params, tree, rng)

            def decrypt(ct):
                return sch.cp_decrypt(params, key, ct)
        else:
            params, master, universe = setups[(scheme, level_bits)]
            for attr in bag.attrs:
                sch.kp_register(universe, master, attr)
            key = sch.kp_keygen(params, master, universe, tree, rng)

            def encrypt():
                return sch.kp_encrypt(params, universe, bag, rng)

            def decrypt(ct):
                return sch.kp_decrypt(params, key, ct)

        return suite, encrypt, decrypt

    suites, setups, cells = {}, {}, []
    for scheme in config.schemes:
        for level_bits in config.levels:
            suite = suite_init(SecurityLevel.from_bits(level_bits))
            suites[(scheme, level_bits)] = suite
            if scheme == "cp":
                setups[(scheme, level_bits)] = sch.cp_setup(suite, rng)
            else:
                setups[(scheme, level_bits)] = sch.kp_setup(suite, rng)
            for n in config.attr_counts:
                cells.append(((scheme, level_bits, n),
                              make_cell(scheme, level_bits, n)))

    for _key, (_suite, encrypt, decrypt) in cells:
        for _ in range(config.warmup):
            ct, _k = encrypt()
            decrypt(ct)

    records = []
    for trial in range(1, config.trials + 1):
        for (scheme, level_bits, n), (suite, encrypt, decrypt) in cells:
            snap = suite.counters.snapshot()
            (ct, _k), enc_ms, enc_peak = _measure(encrypt)
            enc_delta = suite.counters.diff(snap)
            if "encrypt" in config.ops:
                records.append(_record(scheme, "encrypt", level_bits,
                                       n, trial, enc_ms, enc_peak,
                                       enc_delta, profile))
            if "decrypt" in config.ops:
                snap = suite.counters.snapshot()
                _, dec_ms, dec_peak = _measure(lambda: decrypt(ct))
                dec_delta = suite.counters.diff(snap)
                records.append(_record(scheme, "decrypt", level_bits,
                                       n, trial, dec_ms, dec_peak,
                                       dec_delta, profile))
    records.sort(key=lambda r: (r.scheme, r.op, r.level, r.n_attrs, r.trial))
    if csv_path:
        write_csv(records, csv_path)
    summary = summarize(records)
    if summary_path:
        write_summary(summary, summary_path)
    return records, summary


def _record(scheme, op, level, n, trial, ms, peak, delta, profile):
    return BenchRecord(scheme, op, level, n, trial, ms, peak,
                       delta.exp_g1, delta.exp_g2, delta.exp_gt,
                       delta.pairings, delta.hash_to_group,
                       estimate_energy(profile, ms))


def summarize(records):
    """Per-cell mean, median and normal-approximation 95% CI."""
    cells = {}
    for rec in records:
        cells.setdefault((rec.scheme, rec.op, rec.level, rec.n_attrs),
                         []).append(rec.wall_time_ms)
    summary = []
    for (scheme, op, level, n), times in sorted(cells.items()):
        mean = statistics.fmean(times)
        sd = statistics.stdev(times) if len(times) > 1 else 0.0
        ci95 = 1.96 * sd / math.sqrt(len(times))
        summary.append({"scheme": scheme, "op": op, "level": level,
                        "n_attrs": n, "mean_ms": mean, "ci95_ms": ci95,
                        "median_ms": statistics.median(times)})
    return summary


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(rec.row())


def write_summary(summary, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for row in summary:
            writer.writerow([row["scheme"], row["op"], row["level"],
                             row["n_attrs"], f"{row['mean_ms']:.3f}",
                             f"{row['ci95_ms']:.3f}"])


def profile_breakdown(scheme: str, op: str, n_attrs: int, level_bits: int,
                      seed: int | None = None) -> dict:
    """Fractions of wall time spent per op class during one call.

    Returned keys: hash_to_group, exponentiation, pairing, other;
    values are in [0, 1] and hash+exp+pairing sum to <= 1.
    """
    suite = suite_init(SecurityLevel.from_bits(level_bits))
    rng = random.Random(seed) if seed is not None else random.SystemRandom()
    policy = bench_policy("and", n_attrs)
    tree = compile_text(policy)
    bag = AttributeBag.build([f"attr_{i}" for i in range(1, n_attrs + 1)])
    if scheme == "cp":
        params, master = sch.cp_setup(suite, rng)
        key = sch.cp_keygen(params, master, bag, rng)
        ct, _ = sch.cp_encrypt(params, tree, rng)
        target = {"encrypt": lambda: sch.cp_encrypt(params, tree, rng),
                  "decrypt": lambda: sch.cp_decrypt(params, key, ct)}[op]
    elif scheme == "kp":
        params, master, universe = sch.kp_setup(suite, rng)
        for attr in bag.attrs:
            sch.kp_register(universe, master, attr)
        key = sch.kp_keygen(params, master, universe, tree, rng)
        ct, _ = sch.kp_encrypt(params, universe, bag, rng)
        target = {"encrypt": lambda: sch.kp_encrypt(params, universe, bag, rng),
                  "decrypt": lambda: sch.kp_decrypt(params, key, ct)}[op]
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    suite.timing_enabled = True
    suite.op_time = {"hash_to_group": 0.0, "exp": 0.0, "pairing": 0.0}
    t0 = time.perf_counter()
    target()
    total = time.perf_counter() - t0
    suite.timing_enabled = False
    if total <= 0:
        total = 1e-9
    fractions = {
        "hash_to_group": min(1.0, suite.op_time["hash_to_group"] / total),
        "exponentiation": min(1.0, suite.op_time["exp"] / total),
        "pairing": min(1.0, suite.op_time["pairing"] / total),
    }
    fractions["other"] = max(0.0, 1.0 - sum(fractions.values()))
    return fractions


def linear_fit(xs, ys):
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx if sxx else 0.0
    intercept = my - slope * mx
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - my) ** 2 for y in ys)
    r2 = 1.0 - ss_res / ss_tot if ss_tot else 1.0
    return slope, intercept, r2


def plot_summary(summary, out_dir):
    """Optional SVG plots (time vs n_attrs per level); needs matplotlib."""
    import pathlib

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    combos = sorted({(row["scheme"], row["op"]) for row in summary})
    for scheme, op in combos:
        fig, ax = plt.subplots()
        for level in sorted({row["level"] for row in summary}):
            pts = [(row["n_attrs"], row["mean_ms"]) for row in summary
                   if row["scheme"] == scheme and row["op"] == op
                   and row["level"] == level]
            if pts:
                pts.sort()
                ax.plot([p[0] for p in pts], [p[1] for p in pts],
                        marker="o", label=f"{level} bits")
        ax.set_xlabel("number of attributes")
        ax.set_ylabel("mean wall time (ms)")
        ax.set_title(f"{scheme.upper()}-ABE {op}")
        ax.legend()
        path = out_dir / f"{scheme}_{op}_time_vs_attrs.svg"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths
