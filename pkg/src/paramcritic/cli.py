"""Command-line front end: ``paramcritic {toy,cartpole,check}``.

Exit status: 0 success, 1 failed check, 2 configuration or output error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import checks, nn
from .config import ConfigError, dump_config, load_config, train_config
from .trainer import RECORD_COLUMNS, TrainRecord, run_baseline, run_parameter_critic

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


class RecordWriter:
    """CSV sink for TrainRecords; a header row, then one row per iteration."""

    def __init__(self, path, prefix: dict | None = None, flush_interval: int = 1000):
        self.prefix = prefix or {}
        self.flush_interval = flush_interval
        self._fh = open(path, "w", newline="")
        self._csv = csv.writer(self._fh)
        self._csv.writerow([*self.prefix, *RECORD_COLUMNS])
        self._rows = 0

    def __call__(self, rec: TrainRecord) -> None:
        self._csv.writerow([*(_fmt(v) for v in self.prefix.values()),
                            *(_fmt(getattr(rec, c)) for c in RECORD_COLUMNS)])
        self._rows += 1
        if self.flush_interval and self._rows % self.flush_interval == 0:
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _run(mode: str, config, **hooks):
    return (run_baseline if mode == "baseline" else run_parameter_critic)(config, **hooks)


def _sigma_tag(sigma: float) -> str:
    return format(float(sigma), "g")


def _toy_job(cfg: dict, mode: str, sigma: float, trial: int, part: str) -> tuple[str, float, int, float]:
    config = train_config("toy", cfg, noise_sigma=float(sigma), trial=trial)
    writer = RecordWriter(part, {"trial": trial}, cfg["flush_interval"])
    try:
        records = _run(mode, config, on_record=writer)
    finally:
        writer.close()
    return mode, sigma, trial, records[-1].theta_norm_sq


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _concat(parts: list[Path], dest: Path) -> None:
    with open(dest, "w") as out:
        for k, part in enumerate(parts):
            with open(part) as fh:
                header = fh.readline()
                if k == 0:
                    out.write(header)
                out.writelines(fh)
            part.unlink()


def cmd_toy(cfg: dict, workers: int) -> int:
    out = Path(cfg["out"])
    parts_dir = out / "parts"
    parts_dir.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")

    jobs = []
    for mode in cfg["modes"]:
        for sigma in cfg["noise_levels"]:
            for trial in range(cfg["trials"]):
                part = parts_dir / f"toy_{mode}_sigma{_sigma_tag(sigma)}_trial{trial}.csv"
                jobs.append((cfg, mode, sigma, trial, str(part)))
    results = _map(_toy_job, jobs, workers)

    finals: dict[tuple[str, float], list[float]] = {}
    for mode, sigma, trial, norm_sq in results:
        finals.setdefault((mode, sigma), []).append(math.log(norm_sq) if norm_sq > 0 else -math.inf)
    for mode in cfg["modes"]:
        for sigma in cfg["noise_levels"]:
            tag = f"toy_{mode}_sigma{_sigma_tag(sigma)}"
            _concat([parts_dir / f"{tag}_trial{t}.csv" for t in range(cfg["trials"])], out / f"{tag}.csv")
    parts_dir.rmdir()

    with open(out / "toy_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "sigma", "stat", "log_theta_norm_sq"])
        for (mode, sigma), values in finals.items():
            for trial, v in enumerate(values):
                w.writerow([mode, _sigma_tag(sigma), f"trial{trial}", _fmt(v)])
            q25, med, q75 = np.percentile(values, [25, 50, 75])
            for stat, v in (("median", med), ("q25", q25), ("q75", q75)):
                w.writerow([mode, _sigma_tag(sigma), stat, _fmt(float(v))])
            print(f"{mode:8s} sigma={_sigma_tag(sigma):5s} median log||theta||^2 = {med:.4f} "
                  f"(q25 {q25:.4f}, q75 {q75:.4f})")
    return EXIT_OK


def _arch_tag(hidden) -> str:
    return "x".join(str(n) for n in hidden)


def _cartpole_job(cfg: dict, mode: str, hidden: list[int], trial: int, out: str) -> dict:
    config = train_config("cartpole", cfg, actor_hidden=tuple(hidden), trial=trial)
    name = f"cartpole_{mode}_{_arch_tag(hidden)}_trial{trial}"
    ckpt_dir = Path(out) / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    template = nn.init_network((4, *hidden, 1), config.actor_activation, "tanh", 0)

    def checkpoint(t, theta, critic):
        nn.save_network(nn.unflatten(template, theta), ckpt_dir / f"{name}_iter{t}_actor.txt")
        if critic is not None:
            nn.save_network(critic.net, ckpt_dir / f"{name}_iter{t}_critic.txt")

    writer = RecordWriter(Path(out) / f"{name}.csv", flush_interval=cfg["flush_interval"])
    try:
        records = _run(mode, config, on_record=writer, on_checkpoint=checkpoint,
                       checkpoint_interval=cfg["checkpoint_interval"])
    finally:
        writer.close()
    evals = [r.eval_return for r in records if r.eval_return is not None]
    return {"run": name, "final_eval": evals[-1] if evals else None, "best_eval": max(evals) if evals else None}


def cmd_cartpole(cfg: dict, workers: int) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    jobs = [(cfg, mode, hidden, trial, str(out))
            for mode in cfg["modes"] for hidden in cfg["architectures"] for trial in range(cfg["trials"])]
    results = _map(_cartpole_job, jobs, workers)
    with open(out / "cartpole_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "final_eval", "best_eval"])
        for r in results:
            w.writerow([r["run"], _fmt(r["final_eval"]), _fmt(r["best_eval"])])
            print(f"{r['run']}: final eval {_fmt(r['final_eval'])}, best eval {_fmt(r['best_eval'])}")
    return EXIT_OK


def cmd_check(estimator=None) -> int:
    results = checks.run_checks(estimator)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paramcritic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("toy", "noisy quadratic sweep, baseline vs critic"),
                            ("cartpole", "cartpole with a parameter critic")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat YAML file of key: value settings")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--trials", type=int, help="independent trials per setting")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker processes")
        p.add_argument("overrides", nargs="*", metavar="key=value", help="config overrides")
    sub.add_parser("check", help="run the estimator and sampler self-checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        return cmd_check()
    try:
        cfg = load_config(args.command, args.config, args.overrides,
                          out=args.out, seed=args.seed, trials=args.trials)
        runner = cmd_toy if args.command == "toy" else cmd_cartpole
        return runner(cfg, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
