"""Experiment orchestration: config parsing, the active-sampling outer loop,
and deterministic CSV metrics emission.

Every output except the wall_ms column is a pure function of the config.
Each trial draws its phantom and initial mask from seed + trial_index, so
methods compared under one config see identical starting data.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .mri import MaskSpec, PhantomSpec, acquire, enumerate_fiber_patterns, init_cartesian_mask, k_test, psnr, ser, synth_ground_truth
from .sampling import (
    VAR_PLUS_LEV,
    VAR_TIMES_LEV,
    VARIANCE,
    LEVERAGE,
    coherence_baseline,
    combine_utilities,
    leverage_utility,
    random_baseline,
    select_batch,
    variance_utility,
)
from .solver import DivergenceError, ProblemSpec, solve
from .tensors import fft_inverse

METHODS = (VARIANCE, LEVERAGE, VAR_PLUS_LEV, VAR_TIMES_LEV, "random", "coherence")

CSV_HEADER = "trial,round,method,observed_count,sampling_ratio,k_test,ser_db,psnr_db,wall_ms"


@dataclass
class MetricsRow:
    trial: int
    round: int
    method: str
    observed_count: int
    sampling_ratio: float
    k_test: float
    ser_db: float
    psnr_db: float
    wall_ms: int


@dataclass
class ExperimentConfig:
    phantom: PhantomSpec
    mask: MaskSpec
    method: str = VARIANCE
    batch_size: int = 10
    num_batches: int = 40
    trials: int = 1
    seed: int = 0
    output_dir: str = "out"
    warm_start: bool = True
    solver: str = "admm"
    rho: float = 1.0
    lambda_s: float = 0.0
    max_sweeps: int = 200
    tol: float = 1e-6
    rank_tol: float = 1e-6
    alpha: np.ndarray | None = None
    lam: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose one of {METHODS}")
        if self.batch_size < 1 or self.num_batches < 0 or self.trials < 1:
            raise ValueError("batch_size >= 1, num_batches >= 0, trials >= 1 required")
        if self.phantom.shape != self.mask.shape:
            raise ValueError("phantom and mask shapes differ")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def format_row(row: MetricsRow) -> str:
    return ",".join(
        _fmt(v)
        for v in (
            row.trial,
            row.round,
            row.method,
            row.observed_count,
            row.sampling_ratio,
            row.k_test,
            row.ser_db,
            row.psnr_db,
            row.wall_ms,
        )
    )


def emit_csv(rows: list, path):
    """Write header plus one line per row; floats carry 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        for row in rows:
            f.write(format_row(row) + "\n")


def parse_csv(path) -> list:
    """Read back a metrics CSV into MetricsRow objects."""
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            t, r, method, oc, ratio, kt, sdb, pdb, wall = line.split(",")
            rows.append(
                MetricsRow(
                    trial=int(t),
                    round=int(r),
                    method=method,
                    observed_count=int(oc),
                    sampling_ratio=float(ratio),
                    k_test=float(kt),
                    ser_db=float(sdb),
                    psnr_db=float(pdb),
                    wall_ms=int(wall),
                )
            )
    return rows


def _round_seed(base_seed: int, trial: int, rnd: int) -> int:
    return int(np.random.SeedSequence([base_seed, trial, rnd]).generate_state(1)[0])


def _select(cfg: ExperimentConfig, problem, state, ma, candidates, count, seed):
    if cfg.method == "random":
        return random_baseline(candidates, count, seed)
    if cfg.method == "coherence":
        return coherence_baseline(state, candidates, count, cfg.rank_tol)
    if cfg.method == VARIANCE:
        u = variance_utility(ma)
    elif cfg.method == LEVERAGE:
        u = leverage_utility(state, problem, cfg.rank_tol)
    else:
        u = combine_utilities(
            variance_utility(ma),
            leverage_utility(state, problem, cfg.rank_tol),
            "sum" if cfg.method == VAR_PLUS_LEV else "product",
        )
    return select_batch(u, candidates, count)


def run_experiment(cfg: ExperimentConfig) -> list:
    """Run trials x (1 + num_batches) reconstruction rounds and return the
    metric rows, mirroring them incrementally to output_dir/metrics.csv."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    rows = []
    with open(csv_path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        f.flush()
        for trial in range(cfg.trials):
            trial_seed = cfg.seed + trial
            phantom = replace(cfg.phantom, seed=trial_seed)
            image, truth = synth_ground_truth(phantom)
            full_img = fft_inverse(truth)
            omega = init_cartesian_mask(replace(cfg.mask, seed=trial_seed), truth)
            problem = ProblemSpec(
                shape=truth.shape,
                omega=omega,
                alpha=cfg.alpha,
                lam=cfg.lam,
                rho=cfg.rho,
                lambda_s=cfg.lambda_s,
                solver=cfg.solver,
                max_sweeps=cfg.max_sweeps,
                tol=cfg.tol,
            )
            state = None
            ma = None
            for rnd in range(cfg.num_batches + 1):
                t0 = time.perf_counter()
                try:
                    if rnd > 0:
                        candidates = enumerate_fiber_patterns(truth.shape, cfg.mask.readout_mode, omega)
                        if not candidates:
                            break
                        count = min(cfg.batch_size, len(candidates))
                        batch = _select(cfg, problem, state, ma, candidates, count, _round_seed(cfg.seed, trial, rnd))
                        omega = acquire(truth, omega, batch)
                        problem = replace(problem, omega=omega)
                    state, ma = solve(problem, state if cfg.warm_start else None)
                    kt = k_test(state.M, truth)
                    recon_img = fft_inverse(state.M)
                    row = MetricsRow(
                        trial=trial,
                        round=rnd,
                        method=cfg.method,
                        observed_count=len(omega),
                        sampling_ratio=omega.ratio,
                        k_test=kt,
                        ser_db=ser(recon_img, full_img),
                        psnr_db=psnr(recon_img, full_img),
                        wall_ms=int(round(1000 * (time.perf_counter() - t0))),
                    )
                except DivergenceError:
                    row = MetricsRow(
                        trial=trial,
                        round=rnd,
                        method=cfg.method,
                        observed_count=len(omega),
                        sampling_ratio=omega.ratio,
                        k_test=float("nan"),
                        ser_db=float("nan"),
                        psnr_db=float("nan"),
                        wall_ms=int(round(1000 * (time.perf_counter() - t0))),
                    )
                    rows.append(row)
                    f.write(format_row(row) + "\n")
                    f.flush()
                    break
                rows.append(row)
                f.write(format_row(row) + "\n")
                f.flush()
    return rows


# ---------------------------------------------------------------------------
# config file parsing: flat key=value lines, dotted keys, '#' comments
# ---------------------------------------------------------------------------

_BOOLS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _ints(text) -> tuple:
    return tuple(int(v) for v in text.split(","))


def _floats(text) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def parse_config(text: str) -> ExperimentConfig:
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        kv[key.strip()] = value.strip()

    known = {
        "phantom.shape", "phantom.ranks", "phantom.sparse_fraction", "phantom.noise_sigma",
        "mask.readout_mode", "mask.center_fraction", "mask.random_line_fraction",
        "problem.solver", "problem.rho", "problem.lambda_s", "problem.max_sweeps",
        "problem.tol", "problem.alpha", "problem.lambda_i", "sampling.rank_tol",
        "method", "batch_size", "num_batches", "trials", "seed", "output_dir", "warm_start",
    }
    unknown = set(kv) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for required in ("phantom.shape", "phantom.ranks"):
        if required not in kv:
            raise ValueError(f"missing required config key {required}")

    shape = _ints(kv["phantom.shape"])
    phantom = PhantomSpec(
        shape=shape,
        tucker_ranks=_ints(kv["phantom.ranks"]),
        sparse_fraction=float(kv.get("phantom.sparse_fraction", "0")),
        noise_sigma=float(kv.get("phantom.noise_sigma", "0")),
        seed=0,
    )
    mask = MaskSpec(
        shape=shape,
        readout_mode=int(kv.get("mask.readout_mode", "0")),
        center_fraction=float(kv.get("mask.center_fraction", "0.1")),
        random_line_fraction=float(kv.get("mask.random_line_fraction", "0.2")),
        seed=0,
    )
    return ExperimentConfig(
        phantom=phantom,
        mask=mask,
        method=kv.get("method", VARIANCE),
        batch_size=int(kv.get("batch_size", "10")),
        num_batches=int(kv.get("num_batches", "40")),
        trials=int(kv.get("trials", "1")),
        seed=int(kv.get("seed", "0")),
        output_dir=kv.get("output_dir", "out"),
        warm_start=_BOOLS[kv.get("warm_start", "true").lower()],
        solver=kv.get("problem.solver", "admm"),
        rho=float(kv.get("problem.rho", "1.0")),
        lambda_s=float(kv.get("problem.lambda_s", "0.0")),
        max_sweeps=int(kv.get("problem.max_sweeps", "200")),
        tol=float(kv.get("problem.tol", "1e-6")),
        rank_tol=float(kv.get("sampling.rank_tol", "1e-6")),
        alpha=_floats(kv["problem.alpha"]) if "problem.alpha" in kv else None,
        lam=_floats(kv["problem.lambda_i"]) if "problem.lambda_i" in kv else None,
    )


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
