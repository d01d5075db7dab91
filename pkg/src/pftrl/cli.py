"""Command-line entry point: ``pftrl run | fig3 | oracle``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import games
from .game_core import GameError
from .harness import TUNED_PAIRS, ExperimentConfig, run_experiment, tuned_strength_comparison
from .learners import ALGORITHMS, ConfigError


def _t_sigma(text: str) -> float:
    if text.lower() in ("inf", "infinity", "never"):
        return math.inf
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("--t-sigma must be a positive integer or 'inf'")
    return value


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from exc


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pftrl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one algorithm on one game for several seeds")
    run_p.add_argument("--game", choices=games.BENCHMARKS + games.MICRO, default="kuhn")
    run_p.add_argument("--algo", choices=ALGORITHMS, default="pftrl-rkl")
    run_p.add_argument("--sampling", choices=("full", "outcome", "external"), default="outcome")
    run_p.add_argument("--eta", type=_positive_float, default=1e-4)
    run_p.add_argument("--mu", type=float, default=0.1)
    run_p.add_argument("--t-sigma", type=_t_sigma, default=100_000)
    run_p.add_argument("--iters", type=int, default=None, help="iterations (default depends on game size)")
    run_p.add_argument("--seeds", type=_seeds, default=list(range(10)))
    run_p.add_argument("--eval-every", type=int, default=None, help="default: max(1, iters/200)")
    run_p.add_argument("--epsilon", type=float, default=1.0)
    run_p.add_argument("--out", type=Path, default=None)
    run_p.add_argument("--plot", type=Path, default=None)

    fig = sub.add_parser("fig3", help="tuned-strength comparison of RKL and KL perturbations")
    fig.add_argument("--game", choices=games.BENCHMARKS, default="kuhn")
    fig.add_argument("--panel", choices=tuple(TUNED_PAIRS), default="middle")
    fig.add_argument("--mu-rkl", type=float, default=None)
    fig.add_argument("--mu-kl", type=float, default=None)
    fig.add_argument("--eta", type=_positive_float, default=1e-4)
    fig.add_argument("--iters", type=int, default=500_000)
    fig.add_argument("--full-iters", type=int, default=None, help="iterations for the full-traversal curve")
    fig.add_argument("--seeds", type=_seeds, default=list(range(10)))
    fig.add_argument("--eval-every", type=int, default=None)
    fig.add_argument("--out", type=Path, default=Path("fig3"), help="output directory for CSVs")
    fig.add_argument("--plot", type=Path, default=None)

    orc = sub.add_parser("oracle", help="exhaustive unbiasedness / conditional-variance checks")
    orc.add_argument("--game", choices=games.MICRO, action="append", default=None)
    orc.add_argument("--pairs", type=int, default=20, help="random (pi, sigma) pairs per setting")
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--out", type=Path, default=None, help="CSV of the worst unbiasedness report")
    return parser


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(
        game=args.game, algorithm=args.algo, scheme=args.sampling, eta=args.eta, mu=args.mu,
        t_sigma=args.t_sigma, iterations=args.iters, seeds=args.seeds, eval_every=args.eval_every,
        epsilon=args.epsilon, out=args.out, plot=args.plot,
    )
    result = run_experiment(cfg)
    last = [r for r in result.rows if r.iteration == max(x.iteration for x in result.rows)]
    mean = float(np.mean([r.exploit_last for r in last]))
    print(f"{cfg.game} {cfg.algo_label} {cfg.scheme}: final mean last-iterate exploitability {mean:.6g}"
          f" (log10 {math.log10(max(mean, 1e-12)):.3f}) over {len(last)} seeds")
    return 0


def _cmd_fig3(args) -> int:
    mu_rkl, mu_kl = TUNED_PAIRS[args.panel]
    mu_rkl = args.mu_rkl if args.mu_rkl is not None else mu_rkl
    mu_kl = args.mu_kl if args.mu_kl is not None else mu_kl
    results = tuned_strength_comparison(
        args.game, mu_rkl, mu_kl, args.iters, args.seeds, eta=args.eta,
        eval_every=args.eval_every, out_dir=args.out, full_walk_iterations=args.full_iters,
    )
    for res in results:
        final = max(r.iteration for r in res.rows)
        vals = [r.exploit_last for r in res.rows if r.iteration == final]
        r0 = res.rows[0]
        mean = float(np.mean(vals))
        print(f"{r0.sampling:8s} {r0.algo:10s} final log10 exploitability {math.log10(max(mean, 1e-12)):.3f}")
    if args.plot is not None:
        from .plotting import emit_plot

        emit_plot(results, args.plot)
    return 0


def _cmd_oracle(args) -> int:
    from .oracle import verify_conditional_variance, verify_unbiasedness
    from .sampling import SamplingScheme
    from .strategy import random_profile

    rng = np.random.default_rng(args.seed)
    worst = None
    ok = True
    for name in args.game or list(games.MICRO):
        tree = games.build(name)
        for kind in ("rkl", "kl"):
            for scheme in (SamplingScheme.outcome(1.0), SamplingScheme.external()):
                gap = var = closed = 0.0
                for _ in range(args.pairs):
                    pi, sigma = random_profile(tree, rng), random_profile(tree, rng)
                    for mu in (0.0, 0.1):
                        rep = verify_unbiasedness(tree, pi, sigma, mu, kind, scheme)
                        if worst is None or rep.max_gap > worst.max_gap:
                            worst = rep
                        gap = max(gap, rep.max_gap)
                    vrep = verify_conditional_variance(tree, pi, sigma, kind, scheme)
                    var = max(var, vrep.max_variance)
                    if kind == "rkl":
                        closed = max(closed, vrep.max_closed_form_gap)
                line = f"{name:16s} {kind:3s} {scheme.tag:8s} max_gap={gap:.2e} max_cond_var={var:.2e}"
                if kind == "rkl":
                    line += f" closed_form_gap={closed:.2e}"
                    ok &= var < 1e-18 and closed < 1e-12
                ok &= gap < 1e-9
                print(line)
    if args.out is not None and worst is not None:
        args.out.write_text(worst.to_csv())
    print("oracle suite:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "fig3":
            return _cmd_fig3(args)
        return _cmd_oracle(args)
    except (ConfigError, GameError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted; results written so far are kept", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
