"""Multi-seed experiment runner with streaming CSV results.

Rows are written and flushed at every evaluation, so an interrupted run
leaves a valid (truncated) file.  Exploitability columns are on the reporting
scale used throughout the package: the mean of the two players'
best-response gains.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import games
from .learners import ALGORITHMS, ConfigError, LearnerConfig, run
from .sampling import SamplingScheme

CSV_HEADER = ("game", "algo", "sampling", "seed", "iteration", "exploit_last", "exploit_avg")

# Desk-scale iteration budgets, by game size.
DEFAULT_ITERATIONS = {
    "kuhn": 1_000_000,
    "leduc": 1_000_000,
    "goofspiel4": 1_000_000,
    "goofspiel5": 300_000,
    "liars4": 1_000_000,
    "liars6": 100_000,
}

TUNED_PAIRS = {
    "left": (0.05, 0.010147),
    "middle": (0.1, 0.17),
    "right": (0.2, 0.2946),
}


@dataclass
class ExperimentConfig:
    game: str = "kuhn"
    algorithm: str = "pftrl-rkl"
    scheme: str = "outcome"
    eta: float = 1e-4
    mu: float = 0.1
    t_sigma: float = 100_000
    iterations: int | None = None
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    eval_every: int | None = None
    epsilon: float = 1.0
    out: str | Path | None = None
    plot: str | Path | None = None

    def validate(self) -> None:
        games.parse_game(self.game)
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.eval_every is not None and self.eval_every < 1:
            raise ConfigError("evaluation interval must be positive")
        for s in self.seeds:
            self.learner(s)

    @property
    def total_iterations(self) -> int:
        if self.iterations is not None:
            return int(self.iterations)
        return DEFAULT_ITERATIONS.get(games.parse_game(self.game).label, 100_000)

    def sampling_scheme(self) -> SamplingScheme:
        if self.scheme == "outcome":
            return SamplingScheme.outcome(self.epsilon)
        return SamplingScheme(self.scheme)

    def learner(self, seed: int) -> LearnerConfig:
        return LearnerConfig(
            algorithm=self.algorithm, eta=self.eta, mu=self.mu, anchor_interval=self.t_sigma,
            scheme=self.sampling_scheme(), iterations=self.total_iterations, seed=seed,
        )

    @property
    def algo_label(self) -> str:
        """Algorithm name as stored in results; ``+`` marks anchor updates."""
        anchored = self.algorithm.startswith("pftrl") and self.t_sigma != math.inf
        return self.algorithm + ("+" if anchored else "")


class ResultRow(NamedTuple):
    game: str
    algo: str
    sampling: str
    seed: int
    iteration: int
    exploit_last: float
    exploit_avg: float


def _format_row(row: ResultRow) -> list[str]:
    return [row.game, row.algo, row.sampling, str(row.seed), str(row.iteration),
            format(row.exploit_last, ".17g"), format(row.exploit_avg, ".17g")]


@dataclass
class ResultsFile:
    path: Path | None
    rows: list[ResultRow]

    def to_csv(self) -> str:
        lines = [",".join(CSV_HEADER)]
        lines += [",".join(_format_row(r)) for r in self.rows]
        return "\n".join(lines) + "\n"


def read_results(path: str | Path) -> ResultsFile:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [
            ResultRow(g, a, s, int(seed), int(it), float(el), float(ea))
            for g, a, s, seed, it, el, ea in reader
        ]
    return ResultsFile(Path(path), rows)


def run_experiment(config: ExperimentConfig) -> ResultsFile:
    """Run every seed in ascending order, streaming rows to ``config.out`` if set."""
    config.validate()
    tree = games.build(config.game)
    label = games.parse_game(config.game).label
    rows: list[ResultRow] = []
    fh = None
    if config.out is not None:
        Path(config.out).parent.mkdir(parents=True, exist_ok=True)
        fh = open(config.out, "w", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n") if fh else None
        if writer:
            writer.writerow(CSV_HEADER)
            fh.flush()
        for seed in sorted(config.seeds):
            def record(rec, seed=seed):
                row = ResultRow(label, config.algo_label, config.scheme, seed,
                                rec.iteration, rec.exploit_last, rec.exploit_avg)
                rows.append(row)
                if writer:
                    writer.writerow(_format_row(row))
                    fh.flush()

            run(config.learner(seed), tree, config.eval_every, record)
    finally:
        if fh:
            fh.close()
    result = ResultsFile(Path(config.out) if config.out else None, rows)
    if config.plot is not None:
        from .plotting import emit_plot

        emit_plot([result], config.plot)
    return result


class Curve(NamedTuple):
    iterations: np.ndarray
    mean: np.ndarray
    low: np.ndarray
    high: np.ndarray


def mean_curves(rows, metric: str = "exploit_last") -> dict[tuple[str, str, str], Curve]:
    """Per (game, algo, sampling): mean/min/max across seeds at each iteration.

    Values are sorted before summation, so the result does not depend on the
    order the seeds appear in.
    """
    grouped: dict[tuple[str, str, str], dict[int, list[float]]] = {}
    for r in rows:
        key = (r.game, r.algo, r.sampling)
        grouped.setdefault(key, {}).setdefault(r.iteration, []).append(getattr(r, metric))
    out = {}
    for key, by_iter in grouped.items():
        its = np.array(sorted(by_iter))
        vals = [np.sort(np.asarray(by_iter[i])) for i in its]
        out[key] = Curve(
            its,
            np.array([math.fsum(v) / len(v) for v in vals]),
            np.array([v[0] for v in vals]),
            np.array([v[-1] for v in vals]),
        )
    return out


def tuned_strength_comparison(game, mu_rkl, mu_kl, iterations, seeds, *, eta=1e-4,
                              eval_every=None, out_dir=None, full_walk_iterations=None):
    """Full-traversal RKL plus outcome-sampled RKL and KL, all without anchor updates.

    The full traversal is deterministic, so it runs for the first seed only.
    Returns the three results in that order.
    """
    specs = [
        ("pftrl-rkl", "full", mu_rkl, seeds[:1], full_walk_iterations or iterations),
        ("pftrl-rkl", "outcome", mu_rkl, seeds, iterations),
        ("pftrl-kl", "outcome", mu_kl, seeds, iterations),
    ]
    results = []
    for algo, scheme, mu, sds, iters in specs:
        out = None
        if out_dir is not None:
            out = Path(out_dir) / f"{games.parse_game(game).label}_{scheme}_{algo}_mu{mu:g}.csv"
        cfg = ExperimentConfig(game=game, algorithm=algo, scheme=scheme, eta=eta, mu=mu,
                               t_sigma=math.inf, iterations=iters, seeds=list(sds),
                               eval_every=eval_every, out=out)
        results.append(run_experiment(cfg))
    return results
