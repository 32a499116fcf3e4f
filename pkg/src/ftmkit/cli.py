"""Command-line frontend.

Every command writes under ``--out`` and finishes with ``manifest.json``
listing each artifact and its SHA-256.  Reports carry a config hash built
from the command's arguments, with input files replaced by their content
hashes, so the same inputs and flags always give the same bytes.

Exit codes: 0 ok, 1 unexpected, 2 config, 3 data, 4 convergence, 5 io.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import __version__
from .channel import generate_dataset, list_presets, load_preset
from .core import Dataset, to_labeled_sample
from .correction import (
    DEFAULT_BREAKPOINTS,
    detect_breakpoints,
    fit_segmented,
    global_linear_rmse,
)
from .energy import EnergyProfile, energy_report, energy_table, parse_period
from .errors import ConfigError, DataError, FtmError, IoFailure
from .eval import (
    ErrorRecord,
    baseline_records,
    compare,
    distance_rssi_spearman,
    rssi_profile,
    rssi_profile_table,
    write_comparison,
)
from .io import (
    EstimatorSpec,
    ExperimentConfig,
    SourceSpec,
    config_hash,
    import_external,
    load_experiment_config,
    load_mapping,
    read_dataset,
    sha256_file,
    write_dataset,
    write_manifest,
)

log = logging.getLogger("ftmkit")

_INPUT_ARGS = ("data", "model", "mapping", "config", "input")
_IGNORED_ARGS = ("out", "func", "verbose", "workers")


def _run_hash(args: argparse.Namespace) -> str:
    doc = {}
    for k, v in sorted(vars(args).items()):
        if k in _IGNORED_ARGS:
            continue
        if k in _INPUT_ARGS and v is not None:
            paths = v if isinstance(v, list) else [v]
            v = [sha256_file(p) if Path(p).is_file() else str(p) for p in paths]
        doc[k] = v
    return config_hash(doc)


def _meta(args, chash: str) -> dict:
    return {"command": args.command, "config_sha256": chash, "ftmkit_version": __version__}


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc
    return out


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _csv_list(text: str, cast=str) -> list:
    try:
        return [cast(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc


def _load_data(paths: Sequence[str], lenient: bool = False) -> list[Dataset]:
    return [read_dataset(p, lenient=lenient) for p in paths]


# ----------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    spec = load_preset(args.preset, seed=args.seed)
    ds = generate_dataset(spec, workers=args.workers)
    out = _out_dir(args)
    name = args.name or spec.name
    write_dataset(ds, out / f"{name}.ftm")
    log.info("simulated %d measurements -> %s", len(ds), out / f"{name}.ftm")
    write_manifest(out, _meta(args, _run_hash(args)))
    return 0


def cmd_ingest(args) -> int:
    mapping = load_mapping(args.mapping) if args.mapping else None
    ds = import_external(args.input, mapping, lenient=args.lenient)
    out = _out_dir(args)
    target = out / f"{args.name or ds.name}.ftm"
    write_dataset(ds, target)
    log.info("ingested %d measurements -> %s", len(ds), target)
    write_manifest(out, _meta(args, _run_hash(args)))
    return 0


def cmd_fit_correction(args) -> int:
    groups: dict[int, list[tuple[float, float]]] = {}
    for ds in _load_data(args.data):
        for m in ds.measurements:
            if m.rtt_est is not None:
                groups.setdefault(int(m.bandwidth), []).append((m.rtt_raw, m.rtt_est))
    if not groups:
        raise DataError("no measurement carries rtt_est; nothing to fit")
    chash = _run_hash(args)
    out = _out_dir(args)
    report = [f"# config_sha256={chash}\n", "bandwidth_mhz\tn\tbreakpoints_ns\tsegmented_rmse_ns\tglobal_rmse_ns\n"]
    for bw, pairs in sorted(groups.items()):
        if args.detect:
            bps = detect_breakpoints(pairs, k=args.segments, min_points=args.min_points)
        else:
            bps = _csv_list(args.breakpoints, float)
        cmap = fit_segmented(pairs, bps)
        doc = {"bandwidth_mhz": bw, "config_sha256": chash, **cmap.to_dict()}
        _write_text(out / f"correction_{bw}mhz.yaml", yaml.safe_dump(doc, sort_keys=True))
        resid = [cmap.rmse[cmap.segment_of(x)] for x, _ in pairs]
        seg_rmse = (sum(r * r for r in resid) / len(resid)) ** 0.5
        report.append(
            f"{bw}\t{len(pairs)}\t{','.join(f'{b:.3f}' for b in cmap.breakpoints)}\t"
            f"{seg_rmse:.6f}\t{global_linear_rmse(pairs):.6f}\n"
        )
    _write_text(out / "correction_report.tsv", "".join(report))
    write_manifest(out, _meta(args, chash))
    return 0


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_experiment_config(args.config)
        if args.seed is not None:
            cfg = ExperimentConfig(**{**cfg.__dict__, "seed": int(args.seed)})
        return cfg
    if args.seed is None:
        raise ConfigError("--seed is required (or give --config with a seed)")
    if not args.data and not args.preset:
        raise ConfigError("give --data, --preset or --config")
    sources = [SourceSpec(path=p) for p in args.data or []] + [SourceSpec(preset=p) for p in args.preset or []]
    ests = [
        EstimatorSpec(v, None, {}, args.budget, args.strategy)
        for v in _csv_list(args.variant)
    ]
    return ExperimentConfig(
        seed=int(args.seed),
        sources=tuple(sources),
        estimators=tuple(ests),
        train_fraction=args.train_fraction,
        folds=args.folds,
        target_mode=args.target_mode,
        output_dir=args.out,
    )


def _load_sources(cfg: ExperimentConfig) -> list[Dataset]:
    out = []
    for s in cfg.sources:
        if s.preset:
            out.append(generate_dataset(load_preset(s.preset, seed=cfg.seed + s.seed_offset)))
        elif s.mapping:
            out.append(import_external(s.path, load_mapping(s.mapping)))
        else:
            out.append(read_dataset(s.path))
    return out


def cmd_train(args) -> int:
    from .ml.export import save_model
    from .ml.model import train
    from .ml.search import cross_validate
    from .ml.split import SplitSpec, split_by_source

    cfg = _config_from_args(args)
    datasets = _load_sources(cfg)
    names = []
    for ds in datasets:
        n = ds.name
        while n in names:
            n += "_"
        names.append(n)
    sources = {n: list(ds.measurements) for n, ds in zip(names, datasets)}
    parts = split_by_source(sources, SplitSpec(cfg.train_fraction, cfg.folds, cfg.seed))
    train_samples = [to_labeled_sample(m) for tr, _ in parts.values() for m in tr]
    chash = _run_hash(args)
    out = _out_dir(args)
    # the held-out part of each source, for `evaluate`
    for name, ds in zip(names, datasets):
        write_dataset(Dataset(f"{name}-test", ds.scenario, tuple(parts[name][1])), out / f"test_{name}.ftm")

    for est in cfg.estimators:
        log.info("cross-validating %s (%s, budget %d)", est.variant, est.strategy, est.budget)
        res = cross_validate(
            train_samples,
            est.variant,
            est.space,
            folds=cfg.folds,
            budget=est.budget,
            rng_seed=cfg.seed,
            strategy=est.strategy,
            target_mode=cfg.target_mode,
            fixed=est.fixed,
        )
        model = train(est.variant, train_samples, res.best_params, rng_seed=cfg.seed, target_mode=cfg.target_mode)
        save_model(model, out / f"{est.variant}.ftmm")
        lines = [
            f"# config_sha256={chash}\n",
            f"# variant={est.variant} strategy={res.strategy} folds={cfg.folds} target_mode={cfg.target_mode}\n",
            f"# best_cv_rmse_m={res.best_score:.6f} best_params={_params_str(res.best_params)}\n",
            "evaluation\tcv_rmse_m\tparams\n",
        ]
        for i, (p, s) in enumerate(res.history):
            lines.append(f"{i}\t{s:.6f}\t{_params_str(p)}\n")
        _write_text(out / f"cv_{est.variant}.tsv", "".join(lines))
        log.info("%s: best CV RMSE %.3f m with %s", est.variant, res.best_score, _params_str(res.best_params))
    write_manifest(out, _meta(args, chash))
    return 0


def _params_str(p: dict) -> str:
    return ",".join(f"{k}={_num_str(p[k])}" for k in sorted(p))


def _num_str(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def cmd_evaluate(args) -> int:
    from .ml.export import load_model

    datasets = _load_data(args.data)
    models = {}
    for p in args.model or []:
        name = Path(p).stem
        while name in models:
            name += "_"
        models[name] = load_model(p)
    records: list[ErrorRecord] = []
    for ds in datasets:
        records.extend(baseline_records(ds))
        if not models:
            continue
        samples = [to_labeled_sample(m) for m in ds.measurements]
        X = [[s.rtt_raw, s.mean_rssi] for s in samples]
        for name, model in models.items():
            pred = model.predict_array(X) if X else []
            for s, m, d in zip(samples, ds.measurements, pred):
                records.append(ErrorRecord.make(name, s.true_distance, float(d), ds.scenario, m.bandwidth))
    if not records:
        raise DataError("no measurements to evaluate")
    chash = _run_hash(args)
    meta = {"config_sha256": chash}
    out = _out_dir(args)
    write_comparison(compare(records), out, meta)
    for ds in datasets:
        rows = rssi_profile(ds)
        rho = distance_rssi_spearman(ds) if len(ds) > 1 else float("nan")
        _write_text(
            out / f"rssi_profile_{ds.name}.tsv",
            rssi_profile_table(rows, {**meta, "spearman_distance_rssi": f"{rho:.6f}"}),
        )
    write_manifest(out, _meta(args, chash))
    return 0


def cmd_energy(args) -> int:
    periods = [parse_period(t) for t in _csv_list(args.periods)]
    profile = EnergyProfile(args.i_sleep, args.i_ftm, args.t_ftm, args.battery)
    rows = energy_table(periods, profile)
    chash = _run_hash(args)
    text = energy_report(rows, profile, {"config_sha256": chash})
    out = _out_dir(args)
    _write_text(out / "energy.tsv", text)
    if not args.quiet:
        sys.stdout.write(text)
    write_manifest(out, _meta(args, chash))
    return 0


def cmd_export_model(args) -> int:
    from .ml.export import load_model, to_c_header, to_json

    model = load_model(args.model)
    out = _out_dir(args)
    stem = Path(args.model).stem
    if args.format == "json":
        _write_text(out / f"{stem}.json", to_json(model))
    else:
        _write_text(out / f"{stem}.h", to_c_header(model, args.prefix))
    write_manifest(out, _meta(args, _run_hash(args)))
    return 0


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftmkit", description="Wi-Fi FTM ranging toolkit")
    p.add_argument("--version", action="version", version=f"ftmkit {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--out", required=True, help="output directory (created if missing)")
        sp.set_defaults(func=func)
        return sp

    s = add("simulate", cmd_simulate, "simulate a synthetic dataset from a scenario preset")
    s.add_argument("--preset", required=True, help=f"preset name ({', '.join(list_presets())}) or YAML path")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--name", help="output dataset name (default: preset name)")
    s.add_argument("--workers", type=int, default=1, help="threads; output does not depend on it")

    s = add("ingest", cmd_ingest, "convert an external log to a DatasetFileV1 file")
    s.add_argument("--input", required=True)
    s.add_argument("--mapping", help="YAML column/unit mapping; omit for DatasetFileV1 input")
    s.add_argument("--name", help="output dataset name")
    s.add_argument("--lenient", action="store_true", help="downgrade validation failures to warnings")

    s = add("fit-correction", cmd_fit_correction, "fit the piecewise-linear rtt_raw -> rtt_est map")
    s.add_argument("--data", nargs="+", required=True)
    s.add_argument("--breakpoints", default=",".join(str(b) for b in DEFAULT_BREAKPOINTS), help="ns, comma separated")
    s.add_argument("--detect", action="store_true", help="search the breakpoints instead of using --breakpoints")
    s.add_argument("--segments", type=int, default=3, help="segment count for --detect")
    s.add_argument("--min-points", type=int, default=2)

    s = add("train", cmd_train, "split, cross-validate and train distance estimators")
    s.add_argument("--config", help="experiment YAML (sources, split, estimators, seed)")
    s.add_argument("--data", nargs="+", help="DatasetFileV1 sources")
    s.add_argument("--preset", nargs="+", help="synthetic preset sources")
    s.add_argument("--seed", type=int, help="required unless the config has one")
    s.add_argument("--variant", default="tree", help="comma separated subset of tree,svr,gp,nn")
    s.add_argument("--budget", type=int, default=20, help="hyperparameter candidates per variant")
    s.add_argument("--strategy", default="random", choices=("random", "grid", "surrogate"))
    s.add_argument("--folds", type=int, default=5)
    s.add_argument("--train-fraction", type=float, default=0.7)
    s.add_argument("--target-mode", default="absolute", choices=("absolute", "correction"))

    s = add("evaluate", cmd_evaluate, "error summaries, ECDFs and RSSI profiles")
    s.add_argument("--data", nargs="+", required=True, help="labeled DatasetFileV1 files")
    s.add_argument("--model", nargs="*", help="compact model files")

    s = add("energy", cmd_energy, "duty-cycle current and battery lifetime table")
    s.add_argument("--periods", default="10s,1m,10m,30m,1h")
    d = EnergyProfile()
    s.add_argument("--i-sleep", type=float, default=d.i_sleep, help="mA")
    s.add_argument("--i-ftm", type=float, default=d.i_ftm_avg, help="mA")
    s.add_argument("--t-ftm", type=float, default=d.t_ftm, help="s")
    s.add_argument("--battery", type=float, default=d.battery_capacity, help="mAh")
    s.add_argument("--quiet", action="store_true", help="do not echo the table")

    s = add("export-model", cmd_export_model, "dump a compact model as JSON or a C header")
    s.add_argument("--model", required=True)
    s.add_argument("--format", choices=("json", "c"), default="json")
    s.add_argument("--prefix", default="ftm_model", help="C identifier prefix")
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except FtmError as exc:
        print(f"ftmkit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ftmkit {args.command}: {exc}", file=sys.stderr)
        return IoFailure.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
