"""Command-line entry point: ``python -m procscore <command>``.

Every command reads one JSON config (``--config``), lets flags override it,
and writes its outputs into ``--out``. Each output embeds the hash of the
effective config and the seed, and nothing time-dependent, so reruns are
byte-identical.

Exit codes: 0 success, 2 bad input or config, 1 anything else.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from procscore import activity, assessment, deviations, scoring
from procscore.classification import (
    ACTIVITIES,
    DEFAULT_SCHEMA,
    Activity,
    FeatureSchema,
    JCDModel,
    build_chains,
    evaluate,
    fit_jcd,
    predict_jcd,
)
from procscore.errors import InputError, InvalidConfig, MissingTransform
from procscore.mining import DEFAULT_KEYWORDS, LanguageProfile, export_dataset, import_dataset, mine_repository, read_rows

log = logging.getLogger("procscore")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "format": "csv",
    "out": "out",
    "mine": {"repos": [], "keywords": list(DEFAULT_KEYWORDS), "language_profile": None},
    "classify": {
        "train": None, "input": None, "model": None, "order": 1,
        "schema": [list(e) for e in DEFAULT_SCHEMA.entries],
        "bandwidth_rule": "sj", "use_sojourn": True, "net_empty_rule": False,
        "predecessor_labels": "unknown",  # or "known": use labels present in the input
    },
    "curves": {"commits": None, "issues": None, "grid": activity.DEFAULT_GRID, "bandwidth_rule": "sj", "svg": False},
    "calibrate": {
        "process_model": None, "feature_defs": None, "n_processes": 10_000,
        "events_per_process": [10, 100], "bandwidth_rule": "sj", "ideals": {},
    },
    "simulate": {
        "process_model": None, "feature_defs": None, "n_processes": 100,
        "events_per_process": [10, 100], "bandwidth_rule": "sj",
    },
    "assess": {
        "process_model": None, "project": None, "project_id": "", "transforms": None, "feature_defs": None,
        "importances": None, "train_features": None, "ground_truth": None, "regressor": "ridge(0.001)",
        "importance_repeats": 30, "precomputed": None,
    },
}

# config keys holding file paths, resolved against the config file's directory
_PATH_KEYS = {
    "mine": ("language_profile",),
    "classify": ("train", "input", "model"),
    "curves": ("commits", "issues"),
    "calibrate": ("process_model", "feature_defs"),
    "simulate": ("process_model", "feature_defs"),
    "assess": ("process_model", "project", "transforms", "feature_defs", "train_features", "ground_truth"),
}


# --- configuration ----------------------------------------------------------------

def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "ideals":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _resolve_paths(cfg: dict, base: Path) -> None:
    for section, keys in _PATH_KEYS.items():
        for key in keys:
            value = cfg[section].get(key)
            if value and not Path(value).is_absolute():
                cfg[section][key] = str(base / value)
    repos = cfg["mine"].get("repos") or []
    cfg["mine"]["repos"] = [r if Path(r).is_absolute() else str(base / r) for r in repos]


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidConfig("config must be a JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise InvalidConfig(f"unknown config sections {sorted(unknown)}")
    cfg = _merge(DEFAULTS, data)
    _resolve_paths(cfg, p.parent.resolve())
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


class Run:
    """Effective config plus output helpers that stamp every file."""

    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.section = cfg.get(command, {})
        self.seed = int(cfg["seed"])
        self.fmt = cfg["format"]
        self.out = Path(cfg["out"])
        # only the parts that influence this command go into the hash
        self.hash = config_hash({"command": command, "seed": self.seed, "format": self.fmt, command: self.section})

    @property
    def stamp(self) -> str:
        return f"procscore {self.command} config={self.hash} seed={self.seed}"

    @property
    def meta(self) -> dict:
        return {"command": self.command, "config_hash": self.hash, "seed": self.seed}

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.path(name)
        path.write_text(json.dumps({"meta": self.meta, **payload}, indent=2) + "\n", encoding="utf-8")
        return path

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        path = self.path(name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# {self.stamp}\r\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        return path


def _require(section: dict, key: str, what: str) -> str:
    value = section.get(key)
    if not value:
        raise InvalidConfig(f"missing {what} (config key '{key}')")
    if not Path(value).exists():
        raise InputError(f"{what} not found: {value}")
    return value


def _fmt(v: float) -> str:
    return repr(float(v))


# --- mine -------------------------------------------------------------------------------

def cmd_mine(run: Run) -> int:
    sec = run.section
    repos = sec.get("repos") or []
    if not repos:
        raise InvalidConfig("no repositories given")
    profile = None
    if sec.get("language_profile"):
        profile = LanguageProfile.load(_require(sec, "language_profile", "language profile"))
    keywords = tuple(sec.get("keywords") or DEFAULT_KEYWORDS)
    records, origin = [], []
    for repo in repos:
        mined = mine_repository(repo, profile=profile, keywords=keywords)
        records += mined
        origin += [Path(repo).name] * len(mined)
    path = run.path(f"commits.{run.fmt}")
    extra = {"repo": origin} if len(repos) > 1 else None
    export_dataset(records, path, run.fmt, comment=run.stamp, extra_columns=extra)
    log.info("mined %d commits into %s", len(records), path)
    return 0


# --- classify ----------------------------------------------------------------------------

def _labels_of(rows: list[dict]) -> dict[str, Activity]:
    out = {}
    for row in rows:
        lab = (row.get("label") or "").strip()
        if lab:
            out[row["id"]] = Activity.parse(lab)
    return out


def cmd_classify(run: Run) -> int:
    sec = run.section
    schema = FeatureSchema.of(sec["schema"])
    order = int(sec["order"])
    model = None
    if sec.get("model") and Path(sec["model"]).exists():
        model = JCDModel.load(sec["model"])
    elif sec.get("train"):
        train_path = _require(sec, "train", "training file")
        records = import_dataset(train_path)
        labels = _labels_of(read_rows(train_path))
        if not labels:
            raise InputError(f"{train_path} has no 'label' column values")
        chains = [ch for ch in build_chains(records, schema, order + 1, labels, require_labels=True)
                  if len(ch) > order]
        model = fit_jcd(chains, order, schema, sec["bandwidth_rule"], sec["use_sojourn"], sec["net_empty_rule"])
        run.write_json("model.json", model.to_dict())
    else:
        raise InputError("classify needs a pretrained model or a labeled training file")
    if model.schema != schema and sec.get("schema") != DEFAULTS["classify"]["schema"]:
        raise InputError("configured schema differs from the model's schema")

    input_path = sec.get("input") or sec.get("train")
    input_path = _require({"input": input_path}, "input", "input commits file")
    records = import_dataset(input_path)
    truth = _labels_of(read_rows(input_path))
    known = truth if sec["predecessor_labels"] == "known" else {}
    chains = build_chains(records, model.schema, model.order + 1, known)
    rows, preds, truths = [], [], []
    by_id = {r.id: r for r in records}
    for ch in chains:
        label, post = predict_jcd(model, ch.with_unlabeled_principal(), allow_shorter=True)
        cid = ch.ids[-1]
        rows.append([cid, by_id[cid].author_timestamp, label.value, *[_fmt(p) for p in post]])
        if cid in truth:
            preds.append(label)
            truths.append(truth[cid])
    run.write_csv("classified.csv", ["id", "author_timestamp", "predicted", "p_a", "p_c", "p_p"], rows)
    if truths:
        metrics = evaluate(preds, truths, ACTIVITIES)
        run.write_json("metrics.json", {"n": len(truths), **metrics.to_dict()})
        print(f"accuracy {metrics.accuracy:.4f}  kappa {metrics.kappa:.4f}  (n={len(truths)})")
    return 0


# --- curves -------------------------------------------------------------------------------

def _commit_events(path: str) -> dict[str, list[activity.Event]]:
    rows = read_rows(path)
    if not rows:
        raise InputError(f"{path}: no commits")
    if "predicted" not in rows[0] and "label" not in rows[0]:
        raise InputError(f"{path}: expected a 'predicted' or 'label' column")
    times = activity.normalize_project_time([float(r["author_timestamp"]) for r in rows])
    events: dict[str, list[activity.Event]] = {}
    for row, t in zip(rows, times):
        lab = (row.get("predicted") or row.get("label") or "").strip()
        if lab:
            events.setdefault(Activity.parse(lab).value, []).append(activity.Event(t, 1.0))
    return events


def cmd_curves(run: Run) -> int:
    sec = run.section
    events: dict[str, list[activity.Event]] = {}
    if sec.get("commits"):
        events.update(_commit_events(_require(sec, "commits", "classified commits file")))
    if sec.get("issues"):
        events.update(activity.issue_events(activity.read_issue_csv(_require(sec, "issues", "issue file"))))
    if not events:
        raise InputError("curves needs classified commits and/or an issue file")
    grid = int(sec["grid"])
    curves = {act: activity.build_curve(ev, sec["bandwidth_rule"]) for act, ev in sorted(events.items())}
    for act, curve in curves.items():
        table = activity.curve_table(curve, grid)
        run.write_csv(f"curve_{act}.csv", ["x", "f", "F"], [[_fmt(v) for v in row] for row in table])
    run.write_json("curves.json", {"curves": {k: c.to_dict() for k, c in curves.items()}})
    if sec.get("svg"):
        activity.export_svg(curves, run.path("curves.svg"))
    return 0


# --- calibrate / simulate ---------------------------------------------------------------------

def _load_pm(sec: dict) -> activity.ProcessModel:
    path = _require(sec, "process_model", "process-model curves file")
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return activity.ProcessModel.from_dict(data)


def _load_defs(sec: dict) -> list[deviations.FeatureDef]:
    defs = deviations.load_feature_defs(_require(sec, "feature_defs", "feature definitions file"))
    if not defs:
        raise InvalidConfig("feature definitions are empty")
    return defs


def _calibration_config(run: Run) -> scoring.CalibrationConfig:
    sec = run.section
    ideals = {k: scoring.IdealValue.from_dict(v) for k, v in (sec.get("ideals") or {}).items()}
    return scoring.CalibrationConfig(int(sec["n_processes"]), run.seed, tuple(sec["events_per_process"]),
                                     sec["bandwidth_rule"], ideals)


def _safe_name(feature: str) -> str:
    return feature.replace(":", "_")


def cmd_calibrate(run: Run) -> int:
    defs = _load_defs(run.section)
    pm = _load_pm(run.section)
    cfg = _calibration_config(run)
    transforms = scoring.calibrate_features(cfg, pm, defs)
    for name, t in transforms.items():
        run.write_json(f"transform_{_safe_name(name)}.json", {"transforms": [t.to_dict()]})
    rows = [[name, t.n, _fmt(t.ideal), _fmt(t.bandwidth), _fmt(t.distances[0]), _fmt(t.distances[-1])]
            for name, t in transforms.items()]
    run.write_csv("calibration_report.csv", ["feature", "n", "ideal", "h", "min_distance", "max_distance"], rows)
    return 0


def cmd_simulate(run: Run) -> int:
    sec = run.section
    cfg = _calibration_config(run)
    curves = scoring.simulate_processes(cfg)
    header = ["process", "n_events", "bandwidth"]
    rows = [[j, c.points.size, _fmt(c.bandwidth)] for j, c in enumerate(curves)]
    if sec.get("feature_defs") or sec.get("process_model"):
        defs, pm = _load_defs(sec), _load_pm(sec)
        values = scoring.simulated_values(cfg, pm, defs, curves)
        header += [fd.name for fd in defs]
        rows = [row + [_fmt(v) for v in vals] for row, vals in zip(rows, values)]
    if run.fmt == "json":
        run.write_json("simulated.json", {"curves": [c.to_dict() for c in curves]})
    run.write_csv("simulated.csv", header, rows)
    return 0


# --- assess ------------------------------------------------------------------------------------

def _load_transforms(path: str) -> dict[str, scoring.ScoreTransform]:
    p = Path(path)
    files = sorted(p.glob("transform_*.json")) if p.is_dir() else [p]
    out = {}
    for f in files:
        out.update(scoring.load_transforms(f))
    return out


def _assess_precomputed(run: Run, pre: dict) -> assessment.AssessmentReport:
    names = pre["features"]
    return assessment.report_from_scores(names, pre.get("raw", [float("nan")] * len(names)), pre["scores"],
                                         pre["importances"], pre.get("z"), pre.get("severity"),
                                         run.section.get("project_id", ""), run.meta)


def _assess_full(run: Run) -> assessment.AssessmentReport:
    sec = run.section
    defs = _load_defs(sec)
    pm = _load_pm(sec)
    project = activity.load_curves_json(_require(sec, "project", "project curves file"))
    transforms = _load_transforms(_require(sec, "transforms", "transforms"))
    for fd in defs:
        if fd.name not in transforms:
            raise MissingTransform(f"no transform for feature {fd.name!r}")
    model, importances = None, sec.get("importances")
    if sec.get("train_features"):
        projects = assessment.read_feature_matrix(_require(sec, "train_features", "training feature matrix"))
        truth = {g.project_id: g.severity for g in
                 assessment.read_ground_truth(_require(sec, "ground_truth", "ground-truth file"))}
        names = tuple(fd.name for fd in defs)
        if projects and projects[0].names != names:
            raise InputError("training feature columns must match the feature definitions")
        missing = [p.project_id for p in projects if p.project_id not in truth]
        if missing:
            raise InputError(f"no ground truth for {missing}")
        x = assessment.feature_matrix(projects)
        y = np.array([truth[p.project_id] for p in projects])
        model = assessment.fit_regressor(assessment.RegressorSpec.parse(sec["regressor"]), x, y)
        if importances is None:
            importances = assessment.permutation_importance(model, x, y, int(sec["importance_repeats"]), run.seed)
    if importances is None:
        importances = [1.0 / len(defs)] * len(defs)
    return assessment.assess(project, pm, model, transforms, importances, defs,
                             sec.get("project_id", ""), run.meta)


def cmd_assess(run: Run) -> int:
    pre = run.section.get("precomputed")
    report = _assess_precomputed(run, pre) if pre else _assess_full(run)
    path = run.path("report.json")
    path.write_text(report.to_json(), encoding="utf-8")
    table = report.table()
    run.path("report.txt").write_text(f"# {run.stamp}\n{table}", encoding="utf-8")
    sys.stdout.write(table)
    return 0


COMMANDS = {
    "mine": cmd_mine,
    "classify": cmd_classify,
    "curves": cmd_curves,
    "calibrate": cmd_calibrate,
    "assess": cmd_assess,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--format", choices=["csv", "json"], help="dataset output format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="procscore", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("mine", parents=[common], help="extract commit records from git repositories")
    p.add_argument("repos", nargs="*", help="repository paths")
    p.add_argument("--keywords", help="comma-separated keyword list")
    p.add_argument("--language-profile", help="comment-syntax profile JSON")

    p = sub.add_parser("classify", parents=[common], help="predict maintenance activities")
    p.add_argument("--train", help="labeled commits file (with a 'label' column)")
    p.add_argument("--input", help="commits to classify (defaults to the training file)")
    p.add_argument("--model", help="pretrained model JSON")
    p.add_argument("--order", type=int)

    p = sub.add_parser("curves", parents=[common], help="build activity curves")
    p.add_argument("--commits", help="classified commits CSV")
    p.add_argument("--issues", help="issue CSV (activity, timestamp, hours)")
    p.add_argument("--grid", type=int)
    p.add_argument("--svg", action="store_true", default=None)

    for name in ("calibrate", "simulate"):
        p = sub.add_parser(name, parents=[common], help=f"{name} score transforms" if name == "calibrate"
                           else "simulate random processes")
        p.add_argument("--process-model", help="process-model curves JSON")
        p.add_argument("--feature-defs", help="feature definitions JSON")
        p.add_argument("--n-processes", type=int)

    p = sub.add_parser("assess", parents=[common], help="score a project against the process model")
    p.add_argument("--process-model")
    p.add_argument("--project", help="project curves JSON")
    p.add_argument("--transforms", help="transform JSON file or directory")
    p.add_argument("--feature-defs")
    return parser


def _apply_flags(cfg: dict, args: argparse.Namespace) -> dict:
    for key in ("seed", "out", "format"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    sec = cfg[args.command]
    cwd = Path.cwd()
    for key, value in vars(args).items():
        if value is None or key in ("config", "seed", "out", "format", "verbose", "command"):
            continue
        if key == "repos":
            if value:
                sec["repos"] = [str((cwd / r).resolve()) for r in value]
        elif key == "keywords":
            sec["keywords"] = [k.strip() for k in value.split(",") if k.strip()]
        else:
            sec[key] = value
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _apply_flags(load_config(args.config), args)
        return COMMANDS[args.command](Run(args.command, cfg))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001  (reported, mapped to exit 1)
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
