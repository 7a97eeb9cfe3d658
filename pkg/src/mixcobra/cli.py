"""Command-line entry point: ``mixcobra {bench,sweep,gen,tune}``.

The config file is flat ``key = value`` text whose keys are the
:class:`~mixcobra.experiment.ExperimentConfig` fields; lists are comma
separated and ``#`` starts a comment::

    generator = spirals
    machines = lda, logit, knn5, cart, bag
    repetitions = 20
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import logging
import sys
import typing
from pathlib import Path

from . import datagen, io
from .experiment import ErrorTable, ExperimentConfig, _Fixed, _load_fixed, _run_repetition, run_dimension_sweep, run_experiment

log = logging.getLogger("mixcobra")

_LIST_INT = {"extra_dims"}
_LIST_FLOAT = {"alpha_values", "beta_values", "delta_values", "gamma_values"}
_LIST_STR = {"machines", "prediction_files", "aggregators"}
_PATHS = {"dataset"}


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _split_list(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from flat key/value text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    parser.read_string("[experiment]\n" + text)
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    hints = typing.get_type_hints(ExperimentConfig)
    kwargs = {}
    for key, raw in parser["experiment"].items():
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        raw = raw.strip()
        if raw.lower() in ("", "none", "auto"):
            kwargs[key] = None if key not in _LIST_STR else ()
            continue
        if key in _LIST_INT:
            value = tuple(int(v) for v in _split_list(raw))
        elif key in _LIST_FLOAT:
            value = tuple(float(v) for v in _split_list(raw))
        elif key in _LIST_STR:
            value = tuple(_split_list(raw))
            if key == "prediction_files" and base_dir is not None:
                value = tuple(str(base_dir / v) for v in value)
        else:
            hint = hints[key]
            kinds = typing.get_args(hint) or (hint,)
            if bool in kinds:
                value = parse_bool(raw)
            elif int in kinds:
                value = int(raw)
            elif float in kinds:
                value = float(raw)
            else:
                value = raw
            if key in _PATHS and base_dir is not None:
                value = str(base_dir / value)
        kwargs[key] = value
    if "dataset" in kwargs and "generator" not in kwargs:
        kwargs["generator"] = None
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path.parent)


def write_table(table: ErrorTable, out_dir) -> None:
    out = io.ensure_dir(out_dir)
    io.save_error_table(table, out / "errors.csv")
    io.save_wins(table, out / "wins.csv")
    io.save_repetitions(table, out / "repetitions.csv")
    io.save_cv_surfaces(table.cv_records, out / "cv_surface.csv")
    _save_selected(table.selected, out / "selected_params.csv")
    (out / "summary.txt").write_text(table.summary(), encoding="utf-8")


def _save_selected(selected, path):
    rows = ([agg, str(rep), n1, io.format_number(v1), n2, io.format_number(v2)]
            for agg, rep, n1, v1, n2, v2 in selected)
    io._write_csv(path, ["aggregator", "repetition", "param1", "value1", "param2", "value2"], rows)


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.parallel is not None:
        updates["parallel"] = args.parallel
    if getattr(args, "full_scale", False):
        updates["repetitions"] = 100
        updates["n"] = 1000
    return dataclasses.replace(cfg, **updates)


def cmd_bench(args) -> int:
    table = run_experiment(_config_from_args(args))
    write_table(table, args.out)
    sys.stdout.write(table.summary())
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    tables = run_dimension_sweep(cfg)
    out = io.ensure_dir(args.out)
    rows = []
    for table in tables:
        write_table(table, out / f"d{table.dim}")
        rows.extend([str(table.dim), name, f"{table.mean(name):.6f}", f"{table.std(name):.6f}"]
                    for name in table.names)
        sys.stdout.write(table.summary() + "\n")
    io._write_csv(out / "sweep.csv", ["d", "machine", "mean_error", "std_error"], rows)
    return 0


def cmd_gen(args) -> int:
    cfg = _config_from_args(args).resolved()
    if cfg.generator is None:
        raise ValueError("gen needs a generator")
    spec = datagen.GeneratorSpec(cfg.generator, cfg.n, cfg.seed, cfg.noise_dims, cfg.noise_sd)
    data = datagen.generate(spec)
    out = io.ensure_dir(args.out)
    io.save_dataset(data, out / "dataset.csv")
    sys.stdout.write(f"wrote {data.n} rows, d={data.d} to {out / 'dataset.csv'}\n")
    return 0


def cmd_tune(args) -> int:
    """CV report for one train/test split (repetition 0)."""
    cfg = _config_from_args(args).resolved()
    fixed = _load_fixed(cfg) if cfg.dataset else _Fixed()
    _, _, records, selected, _ = _run_repetition(cfg, fixed, 0, cfg.noise_dims)
    out = io.ensure_dir(args.out)
    io.save_cv_surfaces(records, out / "cv_surface.csv")
    _save_selected(selected, out / "selected_params.csv")
    for agg, _, n1, v1, n2, v2 in selected:
        sys.stdout.write(f"{agg}: {n1}={v1:.6g} {n2}={v2:.6g}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixcobra", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_text in (
        ("bench", cmd_bench, "repeated train/test benchmark"),
        ("sweep", cmd_sweep, "benchmark over appended noise dimensions"),
        ("gen", cmd_gen, "export a simulated dataset as CSV"),
        ("tune", cmd_tune, "cross-validation report for one split"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--parallel", type=parse_bool, help="run repetitions in worker processes")
        if name in ("bench", "sweep"):
            p.add_argument("--full-scale", action="store_true", help="K=100 repetitions, n=1000")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        log.error("error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
