"""Command-line interface: train one run, compare strategies, sweep grids.

Configs are TOML files.  The key names, defaults, and validation rules are
part of the package contract and documented in the README; every emitted CSV
starts with the schema comment line ``# sptn-csv-v1``.  All outputs are
deterministic functions of (config, seeds).

Exit codes: 0 success, 2 config error, 3 I/O or data-format error,
4 threshold failure under ``--check``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .data import (
    Dataset,
    IdxFormatError,
    load_mnist_idx,
    split_shuffle,
    synth_blobs,
    synth_digits,
)
from .effort import EffortLedger, effort_ratio, effort_ratio_incl_forward
from .network import save_checkpoint
from .numerics import Prng
from .selector import SparsityConfig
from .trainer import TrainConfig, TrainResult, train

CSV_SCHEMA_LINE = "# sptn-csv-v1"
RECORDS_HEADER = (
    "epoch,train_loss_mean,test_accuracy,lr,"
    "forward_macs,backward_macs,update_macs,samples_skipped"
)
COMPARISON_HEADER = (
    "name,strategy,final_accuracy,effort_ratio,"
    "effort_ratio_incl_forward,samples_skipped"
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CHECK = 4

# Salt for deriving a dataset seed from the training seed when the config
# does not pin one explicitly.
DATA_SEED_SALT = 0xDA7A5EED

_DATASET_KINDS = ("mnist", "synth_blobs", "synth_digits")
_SWEEP_PARAMS = ("s_min", "s_max", "zeta", "skip_threshold")


class ConfigError(Exception):
    """Config schema or validation failure; the message names the field path."""


@dataclass
class DatasetSpec:
    kind: str
    seed: int | None = None
    # mnist
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    train_limit: int | None = None
    test_limit: int | None = None
    # synth_blobs
    n: int | None = None
    classes: int | None = None
    dim: int | None = None
    separation: float = 4.0
    # synth_digits
    noise: float = 0.25
    max_shift: int = 3
    # shared by the synthetic kinds
    test_fraction: float = 0.2


@dataclass
class CheckSpec:
    min_accuracy: float | None = None
    max_effort_ratio: float | None = None
    max_accuracy_drop: float | None = None
    min_samples_skipped: int | None = None


@dataclass
class RunSpec:
    name: str
    dataset: DatasetSpec
    train: TrainConfig
    trace: bool = False
    baseline: bool = False
    check: CheckSpec | None = None


@dataclass
class RunOutcome:
    spec: RunSpec
    result: TrainResult

    @property
    def final_accuracy(self) -> float:
        return self.result.records[-1].test_accuracy


# ---------------------------------------------------------------------------
# Config parsing


def _load_toml(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: not valid TOML: {exc}") from exc


def _expect_table(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a table")
    return obj


def _reject_unknown(table: dict, allowed, path: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{path}{key}: unknown key")


def _get(table: dict, key: str, kinds, path: str, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"{path}{key}: required key missing")
        return default
    value = table[key]
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"{path}{key}: wrong type, expected {kinds}")
    if not isinstance(value, tuple(kinds)):
        raise ConfigError(f"{path}{key}: wrong type, expected {kinds}")
    return value


def _get_float(table, key, path, default=None, required=False):
    value = _get(table, key, (int, float), path, default, required)
    return None if value is None else float(value)


def _parse_dataset(table: dict, path: str) -> DatasetSpec:
    kind = _get(table, "kind", (str,), path, required=True)
    if kind not in _DATASET_KINDS:
        raise ConfigError(f"{path}kind: unknown dataset kind {kind!r}")
    spec = DatasetSpec(kind=kind)
    spec.seed = _get(table, "seed", (int,), path)
    if kind == "mnist":
        _reject_unknown(
            table,
            {"kind", "seed", "train_images", "train_labels", "test_images",
             "test_labels", "train_limit", "test_limit"},
            path,
        )
        spec.train_images = _get(table, "train_images", (str,), path, required=True)
        spec.train_labels = _get(table, "train_labels", (str,), path, required=True)
        spec.test_images = _get(table, "test_images", (str,), path, required=True)
        spec.test_labels = _get(table, "test_labels", (str,), path, required=True)
        spec.train_limit = _get(table, "train_limit", (int,), path)
        spec.test_limit = _get(table, "test_limit", (int,), path)
        for key in ("train_limit", "test_limit"):
            value = getattr(spec, key)
            if value is not None and value < 1:
                raise ConfigError(f"{path}{key}: must be >= 1")
    elif kind == "synth_blobs":
        _reject_unknown(
            table,
            {"kind", "seed", "n", "classes", "dim", "separation", "test_fraction"},
            path,
        )
        spec.n = _get(table, "n", (int,), path, required=True)
        spec.classes = _get(table, "classes", (int,), path, required=True)
        spec.dim = _get(table, "dim", (int,), path, required=True)
        spec.separation = _get_float(table, "separation", path, 4.0)
        spec.test_fraction = _get_float(table, "test_fraction", path, 0.2)
    else:
        _reject_unknown(
            table,
            {"kind", "seed", "n", "noise", "max_shift", "test_fraction"},
            path,
        )
        spec.n = _get(table, "n", (int,), path, required=True)
        spec.noise = _get_float(table, "noise", path, DatasetSpec.noise)
        spec.max_shift = _get(table, "max_shift", (int,), path, 3)
        spec.test_fraction = _get_float(table, "test_fraction", path, 0.2)
    if spec.test_fraction is not None and not 0.0 < spec.test_fraction < 1.0:
        raise ConfigError(f"{path}test_fraction: must be in (0, 1)")
    return spec


def _parse_sparsity(table: dict, path: str) -> SparsityConfig:
    allowed = {
        "strategy", "s_min", "s_max", "zeta", "fixed_ratio",
        "d_min", "d_max", "beta", "skip_threshold", "select_on",
    }
    _reject_unknown(table, allowed, path)
    cfg = SparsityConfig(
        strategy=_get(table, "strategy", (str,), path, "full"),
        s_min=_get_float(table, "s_min", path, 0.1),
        s_max=_get_float(table, "s_max", path, 0.8),
        zeta=_get_float(table, "zeta", path, 0.9),
        fixed_ratio=_get_float(table, "fixed_ratio", path, 0.5),
        d_min=_get_float(table, "d_min", path, 0.0),
        d_max=_get_float(table, "d_max", path, 1.0),
        beta=_get_float(table, "beta", path, 1.0),
        skip_threshold=_get_float(table, "skip_threshold", path, 0.5),
        select_on=_get(table, "select_on", (str,), path, "delta_z"),
    )
    return cfg


def _parse_train(table: dict, path: str) -> TrainConfig:
    allowed = {
        "epochs", "architecture", "lr0", "warmup_epochs", "seed",
        "eval_every", "sparsity",
    }
    _reject_unknown(table, allowed, path)
    arch = _get(table, "architecture", (list,), path)
    if arch is not None:
        if not all(
            isinstance(w, int) and not isinstance(w, bool) and w >= 1 for w in arch
        ):
            raise ConfigError(f"{path}architecture: must be a list of widths >= 1")
        arch = tuple(arch)
    sparsity_table = table.get("sparsity", {})
    cfg = TrainConfig(
        epochs=_get(table, "epochs", (int,), path, required=True),
        lr0=_get_float(table, "lr0", path, TrainConfig.lr0),
        warmup_epochs=_get(table, "warmup_epochs", (int,), path, 5),
        seed=_get(table, "seed", (int,), path, 0),
        eval_every=_get(table, "eval_every", (int,), path, 1),
        sparsity=_parse_sparsity(
            _expect_table(sparsity_table, f"{path}sparsity"), f"{path}sparsity."
        ),
    )
    if arch is not None:
        cfg.architecture = arch
    try:
        cfg.validate()
    except ValueError as exc:
        # Validator messages are rooted at "train."/"sparsity."; re-root them
        # at this table's path so nested specs report a full field path.
        msg = str(exc)
        if msg.startswith("train."):
            msg = msg[len("train."):]
        raise ConfigError(f"{path}{msg}") from exc
    return cfg


def _parse_check(table: dict, path: str) -> CheckSpec:
    allowed = {
        "min_accuracy", "max_effort_ratio", "max_accuracy_drop",
        "min_samples_skipped",
    }
    _reject_unknown(table, allowed, path)
    return CheckSpec(
        min_accuracy=_get_float(table, "min_accuracy", path),
        max_effort_ratio=_get_float(table, "max_effort_ratio", path),
        max_accuracy_drop=_get_float(table, "max_accuracy_drop", path),
        min_samples_skipped=_get(table, "min_samples_skipped", (int,), path),
    )


def _parse_run(table: dict, path: str, allow_batch_keys: bool = False) -> RunSpec:
    allowed = {"name", "trace", "dataset", "train"}
    if allow_batch_keys:
        allowed |= {"baseline", "check"}
    _reject_unknown(table, allowed, path)
    name = _get(table, "name", (str,), path, required=True)
    if not name or "/" in name or name.startswith("."):
        raise ConfigError(f"{path}name: must be a plain file-name stem")
    dataset = _parse_dataset(
        _expect_table(_get(table, "dataset", (dict,), path, required=True),
                      f"{path}dataset"),
        f"{path}dataset.",
    )
    train_cfg = _parse_train(
        _expect_table(_get(table, "train", (dict,), path, required=True),
                      f"{path}train"),
        f"{path}train.",
    )
    spec = RunSpec(
        name=name,
        dataset=dataset,
        train=train_cfg,
        trace=_get(table, "trace", (bool,), path, False),
    )
    if allow_batch_keys:
        spec.baseline = _get(table, "baseline", (bool,), path, False)
        if "check" in table:
            spec.check = _parse_check(
                _expect_table(table["check"], f"{path}check"), f"{path}check."
            )
    return spec


# ---------------------------------------------------------------------------
# Dataset construction


def build_datasets(spec: DatasetSpec, train_seed: int) -> tuple[Dataset, Dataset]:
    """Materialize (train, test) sets for a dataset spec, deterministically."""
    seed = spec.seed if spec.seed is not None else train_seed ^ DATA_SEED_SALT
    if spec.kind == "mnist":
        train_set = load_mnist_idx(spec.train_images, spec.train_labels)
        test_set = load_mnist_idx(spec.test_images, spec.test_labels)
        if spec.train_limit is not None:
            train_set = train_set.subset(np.arange(min(spec.train_limit, len(train_set))))
        if spec.test_limit is not None:
            test_set = test_set.subset(np.arange(min(spec.test_limit, len(test_set))))
        return train_set, test_set
    rng = Prng(seed)
    if spec.kind == "synth_blobs":
        full = synth_blobs(spec.n, spec.classes, spec.dim, rng, spec.separation)
    else:
        full = synth_digits(spec.n, rng, spec.noise, spec.max_shift)
    return split_shuffle(full, spec.test_fraction, rng)


def _dataset_cache_key(spec: DatasetSpec, train_seed: int):
    seed = spec.seed if spec.seed is not None else train_seed ^ DATA_SEED_SALT
    return (spec.kind, seed) + tuple(
        getattr(spec, f) for f in (
            "train_images", "train_labels", "test_images", "test_labels",
            "train_limit", "test_limit", "n", "classes", "dim",
            "separation", "noise", "max_shift", "test_fraction",
        )
    )


# ---------------------------------------------------------------------------
# Output writers


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(path, records) -> None:
    lines = [CSV_SCHEMA_LINE, RECORDS_HEADER]
    for r in records:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.epoch, r.train_loss_mean, r.test_accuracy, r.lr,
                    r.forward_macs, r.backward_macs, r.update_macs,
                    r.samples_skipped,
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_ledger_json(path, ledger: EffortLedger) -> None:
    Path(path).write_text(json.dumps(ledger.as_dict(), indent=2, sort_keys=True) + "\n")


def trace_header(depth: int) -> str:
    cols = ["sample_index", "alpha", "alpha_max", "D", "skipped"]
    for layer in range(1, depth + 1):
        cols += [f"Y{layer}", f"y_max{layer}", f"S{layer}", f"k{layer}"]
    return ",".join(cols)


def write_trace_csv(path, traces, depth: int) -> None:
    """Per-sample trace rows; skipped samples carry zeroed layer stats."""
    lines = [CSV_SCHEMA_LINE, trace_header(depth)]
    for index, tr in enumerate(traces):
        row = [str(index), repr(tr.alpha), repr(tr.alpha_max), repr(tr.decision),
               "1" if tr.skipped else "0"]
        if tr.layers:
            for st in tr.layers:
                row += [repr(st.total_error), repr(st.total_error_max),
                        repr(st.rate), str(st.k)]
        else:
            row += ["0.0", "0.0", "0.0", "0"] * depth
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_run_outputs(outcome: RunOutcome, out_dir: Path) -> None:
    spec = outcome.spec
    write_records_csv(out_dir / f"{spec.name}.records.csv", outcome.result.records)
    write_ledger_json(out_dir / f"{spec.name}.ledger.json", outcome.result.ledger)
    save_checkpoint(outcome.result.model, out_dir / f"{spec.name}.sptn")
    if spec.trace and outcome.result.traces is not None:
        write_trace_csv(
            out_dir / f"{spec.name}.trace.csv",
            outcome.result.traces,
            outcome.result.model.depth,
        )


# ---------------------------------------------------------------------------
# Run execution


def execute_run(spec: RunSpec, datasets: tuple[Dataset, Dataset] | None = None) -> RunOutcome:
    if datasets is None:
        datasets = build_datasets(spec.dataset, spec.train.seed)
    train_set, test_set = datasets
    result = train(train_set, test_set, spec.train, collect_traces=spec.trace)
    return RunOutcome(spec=spec, result=result)


def _apply_seed_override(spec: RunSpec, seed: int | None) -> RunSpec:
    if seed is None:
        return spec
    return replace(
        spec,
        train=replace(spec.train, seed=seed),
        dataset=replace(spec.dataset, seed=None),
    )


def cmd_train(config_path, out_dir: Path, quiet: bool, seed_override: int | None) -> int:
    table = _load_toml(config_path)
    spec = _apply_seed_override(_parse_run(table, ""), seed_override)
    outcome = execute_run(spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_run_outputs(outcome, out_dir)
    if not quiet:
        ledger = outcome.result.ledger
        print(
            f"{spec.name}: accuracy {outcome.final_accuracy:.4f}, "
            f"backward MACs {ledger.backward_macs}, "
            f"update MACs {ledger.update_macs}, "
            f"skipped {ledger.samples_skipped}/{ledger.samples_presented}"
        )
    return EXIT_OK


def _comparison_rows(outcomes, baseline: RunOutcome):
    rows = []
    for oc in outcomes:
        rows.append(
            {
                "name": oc.spec.name,
                "strategy": oc.spec.train.sparsity.strategy,
                "final_accuracy": oc.final_accuracy,
                "effort_ratio": effort_ratio(oc.result.ledger, baseline.result.ledger),
                "effort_ratio_incl_forward": effort_ratio_incl_forward(
                    oc.result.ledger, baseline.result.ledger
                ),
                "samples_skipped": oc.result.ledger.samples_skipped,
            }
        )
    return rows


def write_comparison_csv(path, rows) -> None:
    lines = [CSV_SCHEMA_LINE, COMPARISON_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                _fmt(row[key])
                for key in (
                    "name", "strategy", "final_accuracy", "effort_ratio",
                    "effort_ratio_incl_forward", "samples_skipped",
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _print_comparison(rows) -> None:
    headers = ("name", "strategy", "final_accuracy", "effort_ratio",
               "effort_ratio_incl_forward", "samples_skipped")
    cells = [
        [
            row["name"], row["strategy"],
            f"{row['final_accuracy']:.4f}",
            f"{row['effort_ratio']:.4f}",
            f"{row['effort_ratio_incl_forward']:.4f}",
            str(row["samples_skipped"]),
        ]
        for row in rows
    ]
    widths = [
        max(len(headers[i]), *(len(c[i]) for c in cells)) if cells else len(headers[i])
        for i in range(len(headers))
    ]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    for c in cells:
        print("  ".join(c[i].ljust(widths[i]) for i in range(len(headers))))


def _check_failures(outcomes, baseline: RunOutcome, rows) -> list[str]:
    failures = []
    by_name = {row["name"]: row for row in rows}
    for oc in outcomes:
        check = oc.spec.check
        if check is None:
            continue
        row = by_name[oc.spec.name]
        if check.min_accuracy is not None and row["final_accuracy"] < check.min_accuracy:
            failures.append(
                f"{oc.spec.name}: accuracy {row['final_accuracy']:.4f} "
                f"< required {check.min_accuracy:.4f}"
            )
        if check.max_effort_ratio is not None and row["effort_ratio"] > check.max_effort_ratio:
            failures.append(
                f"{oc.spec.name}: effort ratio {row['effort_ratio']:.4f} "
                f"> allowed {check.max_effort_ratio:.4f}"
            )
        if check.max_accuracy_drop is not None:
            drop = (baseline.final_accuracy - row["final_accuracy"]) * 100.0
            if drop > check.max_accuracy_drop:
                failures.append(
                    f"{oc.spec.name}: accuracy drop {drop:.2f} points "
                    f"> allowed {check.max_accuracy_drop:.2f}"
                )
        if (
            check.min_samples_skipped is not None
            and row["samples_skipped"] < check.min_samples_skipped
        ):
            failures.append(
                f"{oc.spec.name}: skipped {row['samples_skipped']} samples "
                f"< required {check.min_samples_skipped}"
            )
    return failures


def cmd_compare(
    config_path, out_dir: Path, quiet: bool, seed_override: int | None,
    check: bool,
) -> int:
    table = _load_toml(config_path)
    _reject_unknown(table, {"runs", "parallel"}, "")
    runs_raw = _get(table, "runs", (list,), "", required=True)
    if len(runs_raw) < 2:
        raise ConfigError("runs: need at least two runs to compare")
    parallel = _get(table, "parallel", (int,), "", 1)
    if parallel < 1:
        raise ConfigError("parallel: must be >= 1")
    specs = [
        _apply_seed_override(
            _parse_run(_expect_table(entry, f"runs[{i}]"), f"runs[{i}].",
                       allow_batch_keys=True),
            seed_override,
        )
        for i, entry in enumerate(runs_raw)
    ]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("runs: run names must be unique")
    baselines = [s for s in specs if s.baseline]
    if len(baselines) != 1:
        raise ConfigError("runs: exactly one run must set baseline = true")
    if baselines[0].train.sparsity.strategy != "full":
        raise ConfigError("runs: the baseline run must use strategy = \"full\"")

    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(execute_run, spec) for spec in specs]
            outcomes = [f.result() for f in futures]
    else:
        cache: dict = {}
        outcomes = []
        for spec in specs:
            key = _dataset_cache_key(spec.dataset, spec.train.seed)
            if key not in cache:
                cache[key] = build_datasets(spec.dataset, spec.train.seed)
            outcomes.append(execute_run(spec, cache[key]))

    baseline_outcome = next(oc for oc in outcomes if oc.spec.baseline)
    rows = _comparison_rows(outcomes, baseline_outcome)
    out_dir.mkdir(parents=True, exist_ok=True)
    for oc in outcomes:
        write_run_outputs(oc, out_dir)
    write_comparison_csv(out_dir / "comparison.csv", rows)
    if not quiet:
        _print_comparison(rows)
    if check:
        failures = _check_failures(outcomes, baseline_outcome, rows)
        if failures:
            for failure in failures:
                print(f"check failed: {failure}", file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


_SWEEP_METRICS = (
    "final_accuracy", "forward_macs", "backward_macs", "update_macs",
    "samples_skipped",
)


def _sweep_header() -> str:
    return ",".join(
        list(_SWEEP_PARAMS)
        + ["seed", "stat"]
        + list(_SWEEP_METRICS)
        + [f"{m}_std" for m in _SWEEP_METRICS]
    )


def cmd_sweep(config_path, out_dir: Path, quiet: bool, seed_override: int | None) -> int:
    table = _load_toml(config_path)
    _reject_unknown(table, {"base", "sweep"}, "")
    base = _apply_seed_override(
        _parse_run(
            _expect_table(_get(table, "base", (dict,), "", required=True), "base"),
            "base.",
        ),
        seed_override,
    )
    sweep_table = _expect_table(_get(table, "sweep", (dict,), "", required=True), "sweep")
    _reject_unknown(sweep_table, set(_SWEEP_PARAMS) | {"seeds"}, "sweep.")

    grids: dict[str, list] = {}
    for key in _SWEEP_PARAMS:
        if key in sweep_table:
            values = _get(sweep_table, key, (list,), "sweep.")
            if not values or not all(isinstance(v, (int, float)) for v in values):
                raise ConfigError(f"sweep.{key}: must be a non-empty list of numbers")
            grids[key] = [float(v) for v in values]
    seeds = sweep_table.get("seeds")
    if seeds is not None:
        if not isinstance(seeds, list) or not seeds or not all(
            isinstance(s, int) and not isinstance(s, bool) for s in seeds
        ):
            raise ConfigError("sweep.seeds: must be a non-empty list of integers")
    if not grids and seeds is None:
        raise ConfigError("sweep: empty grid, list at least one parameter or seeds")
    if seeds is None:
        seeds = [base.train.seed]

    combo_values = [
        grids.get(key, [getattr(base.train.sparsity, key)]) for key in _SWEEP_PARAMS
    ]
    lines = [CSV_SCHEMA_LINE, _sweep_header()]
    total_runs = 0
    for combo in itertools.product(*combo_values):
        patch = dict(zip(_SWEEP_PARAMS, combo))
        sparsity = replace(base.train.sparsity, **patch)
        results = []
        for seed in seeds:
            train_cfg = replace(base.train, seed=seed, sparsity=sparsity)
            try:
                train_cfg.validate()
            except ValueError as exc:
                raise ConfigError(f"sweep: invalid combination {patch}: {exc}") from exc
            spec = replace(base, train=train_cfg)
            outcome = execute_run(spec)
            ledger = outcome.result.ledger
            metrics = (
                outcome.final_accuracy, ledger.forward_macs,
                ledger.backward_macs, ledger.update_macs,
                ledger.samples_skipped,
            )
            results.append(metrics)
            lines.append(
                ",".join(
                    [repr(v) for v in combo]
                    + [str(seed), "run"]
                    + [_fmt(m) for m in metrics]
                    + [""] * len(_SWEEP_METRICS)
                )
            )
            total_runs += 1
        # One aggregate row per grid point: means plus population stds.
        block = np.array(results, dtype=np.float64)
        lines.append(
            ",".join(
                [repr(v) for v in combo]
                + ["", "mean"]
                + [repr(float(v)) for v in block.mean(axis=0)]
                + [repr(float(v)) for v in block.std(axis=0)]
            )
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    if not quiet:
        print(f"sweep: {total_runs} runs written to {out_dir / 'sweep.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry points


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sptn",
        description="Train sparse-backpropagation MLPs and meter their effort.",
    )
    parser.add_argument("--out-dir", default=".", help="directory for output files")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument(
        "--seed-override", type=int, default=None,
        help="override every run's training seed (and derived dataset seed)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_train = sub.add_parser("train", help="run a single training config")
    p_train.add_argument("config")
    p_compare = sub.add_parser("compare", help="run a batch and compare to a baseline")
    p_compare.add_argument("config")
    p_compare.add_argument(
        "--check", action="store_true",
        help="exit 4 if any run violates its [check] thresholds",
    )
    p_sweep = sub.add_parser("sweep", help="run a hyperparameter grid")
    p_sweep.add_argument("config")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = Path(args.out_dir)
    try:
        if args.command == "train":
            return cmd_train(args.config, out_dir, args.quiet, args.seed_override)
        if args.command == "compare":
            return cmd_compare(
                args.config, out_dir, args.quiet, args.seed_override, args.check
            )
        return cmd_sweep(args.config, out_dir, args.quiet, args.seed_override)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, IdxFormatError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # Semantic validation failures surfaced after parsing, e.g. an
        # architecture whose input width does not match the dataset.
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_CONFIG


def console_main() -> None:
    sys.exit(main())
