"""Command line interface.

Subcommands: validate (input checks), run (hyperparameter search producing
a run directory), select (export one candidate as a model file), allocate
(budget allocation from a model file), response (point response queries),
refresh (re-estimate on a rolled-forward window), simulate (synthetic data
with known ground truth).

Exit codes: 0 success, 2 invalid input or configuration, 1 unexpected
failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import traceback

import numpy as np

from . import pipeline, search, simulator
from .allocator import (
    MAX_RESPONSE,
    TARGET_EFFICIENCY,
    AllocationProblem,
    allocate_max_response,
    allocate_target_efficiency,
    curves_from_doc,
    marginal_response,
)
from .dataset import (
    VariableRoles,
    load_dataset,
    load_holidays,
    validate_dataset,
)
from .decomposition import DecompositionConfig, decompose
from .evaluation import load_lift_studies
from .pipeline import HyperparameterVector
from .reporting import (
    build_onepager,
    export_model,
    model_filename,
    render_allocation,
    render_plots,
    write_model,
)
from .search import (
    HyperparameterSpace,
    SearchConfig,
    cluster_candidates,
    pareto_fronts,
    refresh_model,
    run_search,
)
from .transforms import GEOMETRIC

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

MANIFEST_FILE = "manifest.json"
MODELS_DIR = "models"
ONEPAGERS_DIR = "onepagers"

# Per-channel bound overrides accept the plural spelling used in training
# configs (thetas = c(0, 0.3) style) as well as the singular one.
_BOUND_ALIASES = {
    "thetas": "theta",
    "alphas": "alpha",
    "gammas": "gamma",
    "shapes": "shape",
    "scales": "scale",
}


class CliError(ValueError):
    pass


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError(f"{path}: config must be a JSON object")
    return cfg


def _resolve(base: str, path: str | None) -> str | None:
    if path is None:
        return None
    return path if os.path.isabs(path) else os.path.join(base, path)


def _roles_from_config(cfg: dict) -> VariableRoles:
    try:
        return VariableRoles(
            dep_var=cfg["dep_var"],
            dep_var_type=cfg.get("dep_var_type", "revenue"),
            paid_media_spends=tuple(cfg["paid_media_spends"]),
            paid_media_vars=tuple(cfg.get("paid_media_vars", ())),
            organic_vars=tuple(cfg.get("organic_vars", ())),
            context_vars=tuple(cfg.get("context_vars", ())),
            factor_vars=tuple(cfg.get("factor_vars", ())),
            prophet_vars=tuple(cfg.get("prophet_vars", ())),
            prophet_country=cfg.get("prophet_country", ""),
        )
    except KeyError as exc:
        raise CliError(f"config missing required field {exc.args[0]!r}") from exc


def _decomp_config(cfg: dict, roles: VariableRoles) -> DecompositionConfig | None:
    if not roles.prophet_vars:
        return None
    extra = dict(cfg.get("decomposition", {}))
    extra.pop("components", None)
    extra.pop("country", None)
    return DecompositionConfig(
        components=roles.prophet_vars, country=roles.prophet_country, **extra
    )


def _bound_overrides(cfg: dict) -> dict | None:
    raw = cfg.get("hyperparameters")
    if not raw:
        return None
    out: dict[str, dict[str, tuple[float, float]]] = {}
    for channel, params in raw.items():
        out[channel] = {}
        for pname, bound in params.items():
            key = _BOUND_ALIASES.get(pname, pname)
            if len(bound) != 2:
                raise CliError(
                    f"hyperparameter bound {channel}.{pname} must be [low, high]"
                )
            out[channel][key] = (float(bound[0]), float(bound[1]))
    return out


def _search_config(cfg: dict, args) -> SearchConfig:
    calibrated = bool(cfg.get("calibration_input"))
    default_weights = [1.0, 1.0, 1.0] if calibrated else [1.0, 1.0, 0.0]
    weights = cfg.get("optimize_weights", default_weights)
    if getattr(args, "weights", None):
        weights = [float(v) for v in args.weights.split(",")]
    if len(weights) != 3:
        raise CliError("optimize_weights must have three entries")
    kwargs = {}
    for key in (
        "iterations",
        "trials",
        "ts_validation",
        "train_fraction",
        "calibration_constraint",
        "min_candidates",
        "clusters",
        "population",
        "mutation",
        "crossover",
    ):
        if key in cfg:
            kwargs[key] = cfg[key]
    if getattr(args, "iterations", None) is not None:
        kwargs["iterations"] = args.iterations
    if getattr(args, "trials", None) is not None:
        kwargs["trials"] = args.trials
    seed = cfg.get("seed", 0)
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    workers = getattr(args, "workers", None) or cfg.get("workers", 1)
    return SearchConfig(
        seed=seed, weights=tuple(weights), workers=workers, **kwargs
    )


def _prepare_inputs(cfg: dict, base: str):
    """Load dataset, holidays, decomposition, and lift studies per config."""
    if "data" not in cfg:
        raise CliError("config missing required field 'data'")
    if "window_start" not in cfg or "window_end" not in cfg:
        raise CliError("config must set window_start and window_end")
    roles = _roles_from_config(cfg)
    ds = load_dataset(
        _resolve(base, cfg["data"]), roles, (cfg["window_start"], cfg["window_end"])
    )
    holidays = None
    if cfg.get("holidays"):
        holidays = load_holidays(_resolve(base, cfg["holidays"]))
    dcfg = _decomp_config(cfg, roles)
    if dcfg is not None and "holiday" in dcfg.components and holidays is None:
        raise CliError("prophet_vars includes holiday but no holidays file was given")
    decomp = decompose(ds, holidays, dcfg) if dcfg is not None else None
    studies = None
    if cfg.get("calibration_input"):
        studies = load_lift_studies(_resolve(base, cfg["calibration_input"]))
    return ds, holidays, dcfg, decomp, studies


def _model_width(ds, decomp) -> int:
    factor_organic = [v for v in ds.roles.organic_vars if v in ds.roles.factor_vars]
    numeric_organic = [v for v in ds.roles.organic_vars if v not in ds.roles.factor_vars]
    width = (
        len(ds.roles.paid_media_spends)
        + len(numeric_organic)
        + len(ds.expanded_names(factor_organic))
        + len(ds.context_columns)
    )
    if decomp is not None:
        width += len(decomp.components)
    return width


# --- run directory artifacts ------------------------------------------------


def _archive_header(space: HyperparameterSpace, channels: list[str]) -> list[str]:
    cols = [
        "id",
        "trial",
        "generation",
        "index",
        "pareto_front",
        "cluster",
        "scalar",
        "nrmse_train",
        "nrmse_val",
        "nrmse_test",
        "decomp_rssd",
        "mape_lift",
        "lambda",
        "converged",
    ]
    for channel, pname in space.param_names():
        cols.append(f"hyper.{channel}.{pname}" if channel else "hyper.lambda_hp")
    for c in channels:
        cols.append(f"effect_share.{c}")
    for c in channels:
        cols.append(f"spend_share.{c}")
    for c in channels:
        cols.append(f"efficiency.{c}")
    return cols


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_archive_csv(path, result, candidates) -> None:
    """Archive rows with decoded hyperparameters; floats use repr so a row
    reproduces the candidate exactly."""
    space = result.space
    channels = sorted(candidates[0].effect_shares) if candidates else []
    header = _archive_header(space, channels)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for cand in candidates:
            hv = space.decode(cand.vector)
            row = [
                cand.id,
                cand.trial,
                cand.generation,
                cand.index,
                _cell(cand.pareto_front),
                _cell(cand.cluster),
                _cell(result.scalar(cand)),
                _cell(cand.nrmse_train),
                _cell(cand.nrmse_val),
                _cell(cand.nrmse_test),
                _cell(cand.decomp_rssd),
                _cell(cand.mape_lift),
                _cell(cand.lam),
                _cell(cand.converged),
            ]
            for channel, pname in space.param_names():
                if pname == "lambda_hp":
                    row.append(_cell(hv.lambda_hp))
                else:
                    row.append(_cell(hv.channels[channel][pname]))
            for c in channels:
                row.append(_cell(cand.effect_shares.get(c)))
            for c in channels:
                row.append(_cell(cand.spend_shares.get(c)))
            for c in channels:
                row.append(_cell(cand.efficiency.get(c)))
            writer.writerow(row)


def read_archive_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _row_hyperparameters(row: dict, space: HyperparameterSpace) -> HyperparameterVector:
    channels: dict[str, dict[str, float]] = {c: {} for c in space.channels}
    lambda_hp = 0.0
    for channel, pname in space.param_names():
        if pname == "lambda_hp":
            lambda_hp = float(row["hyper.lambda_hp"])
        else:
            channels[channel][pname] = float(row[f"hyper.{channel}.{pname}"])
    return HyperparameterVector(
        family=space.family,
        channels=channels,
        lambda_hp=lambda_hp,
        max_lag=space.max_lag,
    )


def _default_run_id(cfg: dict, seed: int) -> str:
    blob = json.dumps({"config": cfg, "seed": seed}, sort_keys=True).encode()
    return "run_" + hashlib.sha256(blob).hexdigest()[:10]


def _render_candidate_pages(
    run_dir, result, pareto, ds, decomp, studies, limit=None
) -> str:
    """Re-evaluate Pareto candidates and write their one-pager metrics and
    plots; returns the selected candidate id."""
    pages_dir = os.path.join(run_dir, ONEPAGERS_DIR)
    os.makedirs(pages_dir, exist_ok=True)
    selected = result.selected()
    todo = pareto if limit is None else pareto[:limit]
    if selected not in todo:
        todo = [*todo, selected]
    for cand in todo:
        fc = pipeline.evaluate_candidate(
            ds,
            decomp,
            result.space.decode(cand.vector),
            result.config.split,
            studies=studies,
            rssd_reference=result.rssd_reference,
        )
        fc.id = cand.id
        fc.pareto_front = cand.pareto_front
        fc.cluster = cand.cluster
        cluster_rois = None
        if cand.cluster is not None:
            cluster_rois = [
                c.efficiency for c in pareto if c.cluster == cand.cluster
            ]
        op = build_onepager(fc, cluster_rois)
        page_dir = os.path.join(pages_dir, cand.id)
        os.makedirs(page_dir, exist_ok=True)
        op.save_json(os.path.join(page_dir, "metrics.json"))
        render_plots(op, page_dir)
    return selected.id


def _write_run_dir(
    out_dir,
    run_id,
    cfg: dict,
    result,
    pareto,
    n_clusters,
    ds,
    decomp,
    studies,
    sources: dict,
    onepager_limit=None,
) -> str:
    run_dir = os.path.join(out_dir, run_id)
    os.makedirs(run_dir, exist_ok=True)
    os.makedirs(os.path.join(run_dir, MODELS_DIR), exist_ok=True)

    csv_scope = cfg.get("csv_out", "pareto")
    if csv_scope not in ("pareto", "all"):
        raise CliError("csv_out must be 'pareto' or 'all'")
    csv_name = f"{csv_scope}.csv"
    rows = (
        result.archive
        if csv_scope == "all"
        else [c for c in result.archive if c.pareto_front is not None]
    )
    write_archive_csv(os.path.join(run_dir, csv_name), result, rows)

    selected_id = _render_candidate_pages(
        run_dir, result, pareto, ds, decomp, studies, limit=onepager_limit
    )

    manifest = {
        "run_id": run_id,
        "sources": sources,
        "config": cfg,
        "window": [ds.window_start.isoformat(), ds.window_end.isoformat()],
        "roles": {
            "dep_var": ds.roles.dep_var,
            "dep_var_type": ds.roles.dep_var_type,
            "paid_media_spends": list(ds.roles.paid_media_spends),
            "paid_media_vars": list(ds.roles.paid_media_vars),
            "organic_vars": list(ds.roles.organic_vars),
            "context_vars": list(ds.roles.context_vars),
            "factor_vars": list(ds.roles.factor_vars),
            "prophet_vars": list(ds.roles.prophet_vars),
            "prophet_country": ds.roles.prophet_country,
        },
        "search": result.config.to_dict(),
        "space": result.space.to_dict(),
        "dataset_fingerprint": result.dataset_fingerprint,
        "calibrated": result.calibrated,
        "rssd_reference": result.rssd_reference,
        "archive_csv": csv_name,
        "n_evaluated": len(result.archive),
        "n_pareto": len(pareto),
        "n_clusters": n_clusters,
        "selected": selected_id,
    }
    with open(os.path.join(run_dir, MANIFEST_FILE), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return run_dir


def _finish_search(result, log):
    pareto = pareto_fronts(result)
    n_clusters = 0
    if result.config.clusters:
        n_clusters = cluster_candidates(pareto, seed=result.config.seed)
    print(
        f"{len(result.archive)} candidates evaluated, {len(pareto)} on "
        f"{max((c.pareto_front or 0) for c in pareto)} Pareto front(s), "
        f"{n_clusters} cluster(s)",
        file=log,
    )
    return pareto, n_clusters


def _manifest_inputs(run_dir):
    """Rebuild dataset, decomposition, and studies from a run manifest."""
    path = os.path.join(run_dir, MANIFEST_FILE)
    if not os.path.exists(path):
        raise CliError(f"{run_dir}: not a run directory (no {MANIFEST_FILE})")
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    roles = VariableRoles(
        dep_var=manifest["roles"]["dep_var"],
        dep_var_type=manifest["roles"]["dep_var_type"],
        paid_media_spends=tuple(manifest["roles"]["paid_media_spends"]),
        paid_media_vars=tuple(manifest["roles"]["paid_media_vars"]),
        organic_vars=tuple(manifest["roles"]["organic_vars"]),
        context_vars=tuple(manifest["roles"]["context_vars"]),
        factor_vars=tuple(manifest["roles"]["factor_vars"]),
        prophet_vars=tuple(manifest["roles"]["prophet_vars"]),
        prophet_country=manifest["roles"]["prophet_country"],
    )
    ds = load_dataset(manifest["sources"]["data"], roles, tuple(manifest["window"]))
    if manifest["dataset_fingerprint"] != ds.fingerprint():
        raise CliError("data file changed since the run (fingerprint mismatch)")
    holidays = None
    if manifest["sources"].get("holidays"):
        holidays = load_holidays(manifest["sources"]["holidays"])
    dcfg = _decomp_config(manifest["config"], roles)
    decomp = decompose(ds, holidays, dcfg) if dcfg is not None else None
    studies = None
    if manifest["sources"].get("calibration_input"):
        studies = load_lift_studies(manifest["sources"]["calibration_input"])
    return manifest, ds, holidays, dcfg, decomp, studies


# --- subcommands ------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    base = os.path.dirname(os.path.abspath(args.config))
    ds, _, _, decomp, _ = _prepare_inputs(cfg, base)
    report = validate_dataset(ds, _model_width(ds, decomp))
    print(report)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return EXIT_OK if report.ok else EXIT_USAGE


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    base = os.path.dirname(os.path.abspath(args.config))
    ds, holidays, dcfg, decomp, studies = _prepare_inputs(cfg, base)
    report = validate_dataset(ds, _model_width(ds, decomp))
    for line in str(report).splitlines():
        if line != "OK: no errors or warnings":
            print(line, file=sys.stderr)

    scfg = _search_config(cfg, args)
    family = cfg.get("adstock", GEOMETRIC)
    space = HyperparameterSpace.from_dataset(
        ds, family=family, overrides=_bound_overrides(cfg), max_lag=cfg.get("max_lag")
    )
    log = sys.stderr if not args.quiet else None
    result = run_search(ds, decomp, space, scfg, studies=studies, log=log)
    pareto, n_clusters = _finish_search(result, sys.stderr)

    run_id = args.run_id or _default_run_id(cfg, scfg.seed)
    sources = {
        "data": os.path.abspath(_resolve(base, cfg["data"])),
        "holidays": os.path.abspath(_resolve(base, cfg["holidays"]))
        if cfg.get("holidays")
        else None,
        "calibration_input": os.path.abspath(_resolve(base, cfg["calibration_input"]))
        if cfg.get("calibration_input")
        else None,
    }
    run_dir = _write_run_dir(
        args.out,
        run_id,
        cfg,
        result,
        pareto,
        n_clusters,
        ds,
        decomp,
        studies,
        sources,
        onepager_limit=args.onepagers,
    )
    print(run_dir)
    print(f"selected: {result.selected().id}")
    return EXIT_OK


def cmd_select(args) -> int:
    manifest, ds, _, dcfg, decomp, studies = _manifest_inputs(args.run)
    space = HyperparameterSpace.from_dict(manifest["space"])
    scfg = SearchConfig.from_dict(manifest["search"])
    rows = read_archive_csv(os.path.join(args.run, manifest["archive_csv"]))
    by_id = {row["id"]: row for row in rows}
    model_id = args.model or manifest["selected"]
    if model_id not in by_id:
        raise CliError(
            f"model id {model_id!r} not in archive {manifest['archive_csv']}"
        )
    row = by_id[model_id]
    hv = _row_hyperparameters(row, space)
    fc = pipeline.evaluate_candidate(
        ds,
        decomp,
        hv,
        scfg.split,
        studies=studies,
        rssd_reference=manifest.get("rssd_reference"),
    )
    fc.id = model_id
    doc = export_model(
        fc, ds, space, scfg, dcfg, rssd_reference=manifest.get("rssd_reference")
    )
    models_dir = os.path.join(args.run, MODELS_DIR)
    os.makedirs(models_dir, exist_ok=True)
    path = os.path.join(models_dir, model_filename(model_id))
    write_model(doc, path)
    print(path)
    return EXIT_OK


def _load_model_doc(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: corrupt model file: {exc}") from exc
    if "transforms" not in doc or "coefficients" not in doc:
        raise CliError(f"{path}: not a model file")
    return doc


def _doc_n_periods(doc: dict) -> int:
    import datetime as dt

    start = dt.date.fromisoformat(doc["window"][0])
    end = dt.date.fromisoformat(doc["window"][1])
    step = 1 if doc["frequency"] == "daily" else 7
    return (end - start).days // step + 1


def _parse_multipliers(text: str | None, k: int, what: str):
    if text is None:
        return None
    values = [float(v) for v in text.split(",")]
    if len(values) == 1:
        values = values * k
    if len(values) != k:
        raise CliError(f"{what} needs 1 or {k} comma-separated values")
    return np.array(values)


def cmd_allocate(args) -> int:
    doc = _load_model_doc(args.model)
    order = [
        c for c in doc["roles"]["paid_media_spends"] if c in doc["transforms"]
    ]
    curves = curves_from_doc(doc)
    curve_list = [curves[c] for c in order]
    n_periods = args.periods or _doc_n_periods(doc)
    problem = AllocationProblem(
        curves=curve_list,
        scenario=args.scenario,
        total_budget=args.budget / n_periods if args.budget is not None else None,
        target_value=args.target,
        dep_var_type=doc["dep_var_type"],
        constr_low=_parse_multipliers(args.low, len(curve_list), "--low"),
        constr_up=_parse_multipliers(args.up, len(curve_list), "--up"),
        n_periods=n_periods,
        seed=args.seed or 0,
    )
    if args.scenario == MAX_RESPONSE:
        plan = allocate_max_response(problem)
    else:
        if args.target is None:
            raise CliError("target_efficiency needs --target")
        plan = allocate_target_efficiency(problem)

    os.makedirs(args.out, exist_ok=True)
    json_path = os.path.join(args.out, "allocation.json")
    plan.save(json_path)
    render_allocation(plan, os.path.join(args.out, "allocation.svg"))
    label = "ROAS" if plan.dep_var_type == "revenue" else "CPA"
    for name, before, after in zip(plan.channels, plan.previous_spend, plan.spend):
        print(f"{name}: {before:,.2f} -> {after:,.2f} per period")
    print(
        f"total spend {plan.total_spend:,.2f}, total response "
        f"{plan.total_response:,.2f}, {label} {plan.efficiency:.4f}"
    )
    for note in plan.notes:
        print(f"note: {note}", file=sys.stderr)
    print(json_path)
    return EXIT_OK


def cmd_response(args) -> int:
    doc = _load_model_doc(args.model)
    curves = curves_from_doc(doc)
    if args.channel not in curves:
        raise CliError(f"unknown channel {args.channel!r}")
    curve = curves[args.channel]
    out = {
        "channel": args.channel,
        "spend": args.spend,
        "response": curve.response(args.spend),
        "marginal": marginal_response(doc, args.channel, args.spend),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_refresh(args) -> int:
    doc = _load_model_doc(args.model)
    holidays = load_holidays(args.holidays) if args.holidays else None
    log = sys.stderr if not args.quiet else None
    result, ds, decomp = refresh_model(
        doc,
        args.data,
        holidays,
        refresh_steps=args.steps,
        refresh_iters=args.iterations,
        refresh_trials=args.trials,
        seed=args.seed,
        workers=args.workers or 1,
        log=log,
    )
    pareto, n_clusters = _finish_search(result, sys.stderr)

    cfg = {
        "refresh_of": doc["model_id"],
        "refresh_steps": args.steps,
        "prophet_vars": doc["roles"]["prophet_vars"],
        "prophet_country": doc["roles"]["prophet_country"],
        "decomposition": {
            k: v
            for k, v in doc["decomposition"].items()
            if k not in ("components", "country")
        },
        "csv_out": "pareto",
    }
    run_id = args.run_id or f"refresh_{doc['model_id']}_{args.steps}"
    sources = {
        "data": os.path.abspath(args.data),
        "holidays": os.path.abspath(args.holidays) if args.holidays else None,
        "calibration_input": None,
    }
    run_dir = _write_run_dir(
        args.out,
        run_id,
        cfg,
        result,
        pareto,
        n_clusters,
        ds,
        decomp,
        None,
        sources,
        onepager_limit=args.onepagers,
    )

    # A refresh run exports its selected model right away.
    selected = result.selected()
    fc = pipeline.evaluate_candidate(
        ds,
        decomp,
        result.space.decode(selected.vector),
        result.config.split,
        rssd_reference=result.rssd_reference,
    )
    fc.id = selected.id
    new_doc = export_model(
        fc,
        ds,
        result.space,
        result.config,
        DecompositionConfig.from_dict(doc["decomposition"])
        if doc["decomposition"].get("components")
        else None,
        rssd_reference=result.rssd_reference,
    )
    path = os.path.join(run_dir, MODELS_DIR, model_filename(selected.id))
    write_model(new_doc, path)
    print(run_dir)
    print(f"selected: {selected.id}")
    print(path)
    return EXIT_OK


def cmd_simulate(args) -> int:
    ds, truth = simulator.simulate(
        n_periods=args.periods,
        frequency=args.frequency,
        n_channels=args.channels,
        seed=args.seed or 0,
        noise_fraction=args.noise,
    )
    os.makedirs(args.out, exist_ok=True)
    data_path = os.path.join(args.out, "data.csv")
    ds.save(data_path)
    truth.save(os.path.join(args.out, "truth.json"))
    written = [data_path, os.path.join(args.out, "truth.json")]

    cfg = {
        "data": "data.csv",
        "dep_var": ds.roles.dep_var,
        "dep_var_type": ds.roles.dep_var_type,
        "paid_media_spends": list(ds.roles.paid_media_spends),
        "prophet_vars": list(ds.roles.prophet_vars),
        "window_start": ds.window_start.isoformat(),
        "window_end": ds.window_end.isoformat(),
        "adstock": GEOMETRIC,
    }
    if args.lift_studies > 0:
        from .evaluation import save_lift_studies

        studies = simulator.cut_lift_studies(truth, n_studies=args.lift_studies)
        lift_path = os.path.join(args.out, "lift_studies.csv")
        save_lift_studies(studies, lift_path)
        cfg["calibration_input"] = "lift_studies.csv"
        written.append(lift_path)
    cfg_path = os.path.join(args.out, "config.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(cfg_path)
    for path in written:
        print(path)
    return EXIT_OK


# --- argument parsing -------------------------------------------------------


def _add_common(p, seed_default=None):
    p.add_argument("--seed", type=int, default=seed_default, help="random seed")
    p.add_argument("--workers", type=int, default=None, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediamix", description="media mix modeling toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset against its config")
    p.add_argument("--config", required=True)
    p.add_argument("--json", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="hyperparameter search producing a run directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="parent directory for the run")
    p.add_argument("--run-id", default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--weights", default=None, help="nrmse,rssd,mape e.g. 1,1,0")
    p.add_argument(
        "--onepagers",
        type=int,
        default=None,
        help="render at most N candidate one-pagers (default: all Pareto candidates)",
    )
    p.add_argument("--quiet", action="store_true", help="suppress progress logging")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("select", help="export one archived candidate as a model file")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--model", default=None, help="candidate id (default: selected)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("allocate", help="budget allocation from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--scenario",
        choices=(MAX_RESPONSE, TARGET_EFFICIENCY),
        default=MAX_RESPONSE,
    )
    p.add_argument("--budget", type=float, default=None, help="total budget")
    p.add_argument("--target", type=float, default=None, help="target ROAS or CPA")
    p.add_argument("--low", default=None, help="lower bound multiplier(s)")
    p.add_argument("--up", default=None, help="upper bound multiplier(s)")
    p.add_argument("--periods", type=int, default=None, help="planning periods")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("response", help="response and marginal at a spend level")
    p.add_argument("--model", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--spend", type=float, required=True)
    p.set_defaults(func=cmd_response)

    p = sub.add_parser("refresh", help="re-estimate on a rolled-forward window")
    p.add_argument("--model", required=True, help="previously exported model file")
    p.add_argument("--data", required=True, help="data CSV covering the new window")
    p.add_argument("--holidays", default=None)
    p.add_argument("--steps", type=int, required=True, help="periods to advance")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--run-id", default=None)
    p.add_argument("--onepagers", type=int, default=None)
    p.add_argument("--quiet", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_refresh)

    p = sub.add_parser("simulate", help="synthetic dataset with known ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--periods", type=int, default=208)
    p.add_argument("--frequency", choices=("weekly", "daily"), default="weekly")
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--noise", type=float, default=None, help="noise fraction")
    p.add_argument("--lift-studies", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
