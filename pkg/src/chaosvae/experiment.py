"""Train/evaluate runs, grid search and the multi-run VAE vs C-VAE comparison."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import io
import itertools
import json

import numpy as np

from .errors import InputError
from .occ import DecisionReport, ThresholdStrategy
from .stats import RunSeries, comparison_rows, rows_to_csv, rows_to_text
from .vae import PRESET_GRID, TrainConfig, VaeModel, train

MODEL_NOISE = {"vae": "gaussian", "cvae": "chaotic"}


@dataclass
class RunResult:
    report: DecisionReport
    trace: list
    model: VaeModel
    config: TrainConfig


def run_single(split, config, strategy, noise=None):
    """Train on ``split.X_train`` and score ``split.X_test``."""
    model = VaeModel.build(split.X_train.shape[1], config, noise=noise)
    model, trace = train(model, split.X_train, config)
    report = DecisionReport.evaluate(model, split.X_test, strategy, X_train=split.X_train)
    return RunResult(report, trace, model, config)


def expand_grid(base, grid):
    """Every combination of ``grid`` values applied on top of ``base``.

    Keys are expanded in sorted order so the combination index is stable.
    An empty or missing grid yields ``[base]``.
    """
    if not grid:
        return [base]
    keys = sorted(grid)
    for key in keys:
        if key not in TrainConfig.__dataclass_fields__:
            raise InputError(f"grid key {key!r} is not a training option")
    return [replace(base, **dict(zip(keys, combo)))
            for combo in itertools.product(*(list(grid[k]) for k in keys))]


def preset_grid():
    return {k: list(v) for k, v in PRESET_GRID.items()}


def best_of_grid(split, base, grid, strategy, noise_factory=None):
    """Evaluate every grid point; return ``(best_cr, best_index, crs)``.

    Ties keep the earliest combination.
    """
    crs = []
    for cfg in expand_grid(base, grid):
        noise = noise_factory(cfg) if noise_factory is not None else None
        crs.append(run_single(split, cfg, strategy, noise).report.cr)
    best = int(np.argmax(crs))
    return crs[best], best, crs


def _run_task(args):
    split, base, grid, strategy, noise_factory = args
    return best_of_grid(split, base, grid, strategy, noise_factory)


@dataclass
class ExperimentSummary:
    dataset_tag: str
    base_config: dict
    grid: dict
    strategy: str
    run_seeds: list
    per_run: dict                      # model tag -> list of (best_cr, best_index, crs)
    combinations: int = 1
    series: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    ttest: object = None

    def config_echo(self):
        echo = {"dataset": self.dataset_tag, "base_config": self.base_config,
                "grid": self.grid, "combinations": self.combinations,
                "threshold": self.strategy, "run_seeds": self.run_seeds}
        return json.dumps(echo, sort_keys=True)

    def to_csv(self):
        """Machine-readable report: config echo, per-run table, summary table."""
        out = io.StringIO()
        out.write(f"# config,{self.config_echo()}\n")
        out.write("run,seed,model,best_cr,best_combination\n")
        for tag in sorted(self.per_run):
            for i, (cr, idx, _) in enumerate(self.per_run[tag]):
                out.write(f"{i},{self.run_seeds[i]},{tag},{float(cr)!r},{idx}\n")
        out.write("\n")
        out.write(rows_to_csv(self.rows))
        return out.getvalue()

    def to_text(self):
        return rows_to_text(self.rows)


def compare(split, base, strategy, run_count=15, base_seed=0, grid=None,
            dataset_tag="dataset", jobs=1, noise_factories=None,
            models=("vae", "cvae")):
    """Repeat the best-of-grid search ``run_count`` times for each model.

    Run ``i`` uses seed ``base_seed + i`` for parameter init, shuffling and
    the noise source of both models.  ``noise_factories`` optionally maps a
    model tag to ``f(config) -> noise source`` (serial runs only).
    """
    if run_count < 2:
        raise InputError("a comparison needs run_count >= 2")
    if isinstance(strategy, str):
        strategy = ThresholdStrategy.parse(strategy)
    noise_factories = noise_factories or {}
    if noise_factories and jobs > 1:
        raise InputError("custom noise factories are only supported with jobs=1")
    seeds = [base_seed + i for i in range(run_count)]
    tasks = []
    for tag in models:
        if tag not in MODEL_NOISE:
            raise InputError(f"unknown model tag {tag!r}")
        for seed in seeds:
            cfg = replace(base, noise=MODEL_NOISE[tag], init_seed=seed)
            tasks.append((split, cfg, grid, strategy, noise_factories.get(tag)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    per_run = {tag: results[k * run_count:(k + 1) * run_count]
               for k, tag in enumerate(models)}
    base_echo = {k: v for k, v in base.to_dict().items()
                 if k not in ("noise", "init_seed")}
    summary = ExperimentSummary(dataset_tag, base_echo, grid or {}, str(strategy),
                                seeds, per_run, len(expand_grid(base, grid)))
    summary.series = {tag: RunSeries(tag, dataset_tag, [r[0] for r in per_run[tag]])
                      for tag in models}
    if len(models) == 2:
        summary.rows, summary.ttest = comparison_rows(
            dataset_tag, summary.series[models[0]], summary.series[models[1]])
    return summary
