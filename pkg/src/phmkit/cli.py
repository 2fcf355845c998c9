"""Batch command-line surface: synth, featurize, train, evaluate, report.

One JSON run-configuration drives every command; ``--seed`` and ``--out``
override the config on the command line. Every run writes a resolved-config
echo into the output directory. Exit codes: 0 success, 2 config error,
3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import ann, features, forest, metrics, preprocess, report, synth
from .errors import ConfigError, DataError, NumericError
from .ingest import (
    Manifest,
    assemble_dataset,
    load_manifest,
    parse_canonical_csv,
    serialize_canonical_csv,
    write_manifest,
)
from .loss import PredictionBatch
from .types import LabelVector

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

MODELS = ("ann", "rf", "erf")


@dataclass
class RunConfig:
    out_dir: str
    data_csv: str | None = None
    manifest: str | None = None
    feature_cache: str | None = None
    predictions: str | None = None
    pca: bool = True
    pca_mode: str = "literal"
    loss: str = "composite"
    gamma: float = 10.0
    model: str = "ann"
    seed: int = 0
    epochs: int = 5000
    learning_rate: float = 1e-3
    label_scale: float = 100.0
    rul_rectify: bool = False
    n_estimators: int = 100
    max_depth: int | None = None
    synth: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.pca_mode not in preprocess.PCA_MODES:
            raise ConfigError(f"pca_mode must be one of {preprocess.PCA_MODES}")
        if self.loss not in ("composite", "mse"):
            raise ConfigError(f"loss must be 'composite' or 'mse', got {self.loss!r}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")

    @property
    def model_file(self) -> Path:
        return Path(self.out_dir) / "model.json"

    @property
    def transform_file(self) -> Path:
        return Path(self.out_dir) / "transform.json"


def load_run_config(path, seed=None, out=None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    known = set(RunConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if raw.get("loss", "composite") == "mse" and "gamma" in raw:
        raise ConfigError("gamma is only valid with the composite loss")
    if raw.get("model", "ann") in ("rf", "erf") and raw.get("loss") == "composite":
        raise ConfigError("tree ensembles train on mse; composite loss is ANN-only")
    if raw.get("model") in ("rf", "erf"):
        raw = {**raw, "loss": "mse"}
    if "out_dir" not in raw and out is None:
        raise ConfigError("config must set out_dir (or pass --out)")

    cfg = RunConfig(**raw) if "out_dir" in raw else RunConfig(out_dir=str(out), **raw)
    if seed is not None:
        cfg.seed = int(seed)
    if out is not None:
        cfg.out_dir = str(out)
    return cfg


def _echo_config(cfg: RunConfig, command: str) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, **asdict(cfg)}
    (out / "resolved_config.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )


def _load_dataset(cfg: RunConfig):
    if not cfg.data_csv or not cfg.manifest:
        raise ConfigError("this command needs data_csv and manifest paths in the config")
    for path in (cfg.data_csv, cfg.manifest):
        if not Path(path).exists():
            raise ConfigError(f"input path does not exist: {path}")
    records = parse_canonical_csv(cfg.data_csv)
    manifest = load_manifest(cfg.manifest)
    return records, manifest


def _features_for(
    pairs, cache_path: Path | None
) -> tuple[features.FeatureMatrix, list[LabelVector]]:
    """Featurize pairs, preferring rows from the cache file when present."""
    labels = [lab for _, lab in pairs]
    keys = [(rec.unit_id, rec.cycle_number) for rec, _ in pairs]
    if cache_path is not None and cache_path.exists():
        cached = features.read_cache(cache_path)
        index = {key: i for i, key in enumerate(cached.row_keys)}
        try:
            rows = [index[key] for key in keys]
        except KeyError as exc:
            raise DataError(f"feature cache is missing cycle {exc.args[0]}") from None
        matrix = features.FeatureMatrix(
            values=cached.values[rows], row_keys=tuple(keys)
        )
        return matrix, labels
    matrix, labels = features.extract_matrix(pairs)
    return matrix, labels


def cmd_synth(cfg: RunConfig) -> int:
    synth_raw = dict(cfg.synth)
    if "n_units" not in synth_raw:
        raise ConfigError("synth config must set n_units")
    synth_raw.setdefault("seed", cfg.seed)
    for key in ("lifetime_range", "cycle_length_range"):
        if key in synth_raw:
            synth_raw[key] = tuple(synth_raw[key])
    config = synth.SynthConfig(**synth_raw)
    records, manifest = synth.generate_fleet(config)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    serialize_canonical_csv(records, out / "data.csv")
    write_manifest(manifest, out / "manifest.json")
    _echo_config(cfg, "synth")
    rows = sum(r.length for r in records)
    print(f"wrote {len(manifest.units)} units, {len(records)} cycles, {rows} rows to {out}")
    return EXIT_OK


def cmd_featurize(cfg: RunConfig) -> int:
    cache = Path(cfg.feature_cache) if cfg.feature_cache else Path(cfg.out_dir) / "features.csv"
    if cache.exists():
        print(f"feature cache {cache} already present, skipping extraction")
        return EXIT_OK
    records, manifest = _load_dataset(cfg)
    train, test = assemble_dataset(records, manifest)
    matrix, _ = features.extract_matrix(train + test)
    cache.parent.mkdir(parents=True, exist_ok=True)
    features.write_cache(matrix, cache)
    _echo_config(cfg, "featurize")
    print(f"extracted {matrix.n} x {features.N_FEATURES} features to {cache}")
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    records, manifest = _load_dataset(cfg)
    train_pairs, _ = assemble_dataset(records, manifest)
    if not train_pairs:
        raise DataError("training split is empty")
    cache = Path(cfg.feature_cache) if cfg.feature_cache else None
    matrix, labels = _features_for(train_pairs, cache)

    transform = preprocess.fit_pipeline(
        matrix, pca_enabled=cfg.pca, pca_mode=cfg.pca_mode
    )
    X = transform.apply(matrix)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    preprocess.save_transform(transform, cfg.transform_file)

    if cfg.model == "ann":
        train_config = ann.TrainConfig(
            epochs=cfg.epochs,
            learning_rate=cfg.learning_rate,
            loss=cfg.loss,
            gamma=cfg.gamma,
            label_scale=cfg.label_scale,
            seed=cfg.seed,
            rul_rectify=cfg.rul_rectify,
        )
        params, history = ann.train(X, labels, train_config)
        ann.save_model(params, train_config, transform.schema, cfg.model_file)
        np.savetxt(out / "loss_history.csv", history, header="loss", comments="")
        final = history[-1]
    else:
        forest_config = forest.ForestConfig(
            n_estimators=cfg.n_estimators,
            variant=cfg.model,
            max_depth=cfg.max_depth,
            seed=cfg.seed,
        )
        targets = forest.scale_labels(labels, cfg.label_scale)
        model = forest.fit_forest(X, targets, forest_config)
        forest.save_forest(model, transform.schema, cfg.model_file)
        preds = forest.forest_predict(model, X, cfg.label_scale)
        final = float(np.mean((preds.rul_pred - targets[:, 6]) ** 2))
    _echo_config(cfg, "train")
    print(f"trained {cfg.model} on {matrix.n} cycles; final training loss {final:.6g}")
    return EXIT_OK


def _predict_with_model(cfg: RunConfig, X: np.ndarray) -> PredictionBatch:
    raw = json.loads(Path(cfg.model_file).read_text(encoding="utf-8"))
    if raw.get("kind") == "ann":
        params, train_config, schema = ann.load_model(cfg.model_file)
        if cfg.rul_rectify and not train_config.rul_rectify:
            train_config = dataclasses.replace(train_config, rul_rectify=True)
        batch = ann.predict(params, X, train_config)
    else:
        model, schema = forest.load_forest(cfg.model_file)
        batch = forest.forest_predict(model, X, cfg.label_scale)
        if cfg.rul_rectify:
            batch = PredictionBatch(
                class_probs=batch.class_probs, rul_pred=np.maximum(batch.rul_pred, 0.0)
            )
    if schema != features.schema_hash():
        raise DataError(
            "model was trained against a different feature schema (hash mismatch)"
        )
    return batch


def _write_report_bundle(
    out: Path,
    labels: list[LabelVector],
    preds: PredictionBatch,
    manifest: Manifest,
    row_keys,
) -> metrics.MetricsReport:
    scored = metrics.evaluate(labels, preds, manifest, row_keys)
    metrics.save_report(scored, out / "metrics.json", out / "metrics.txt")
    metrics.write_predictions(row_keys, preds, out / "predictions.csv")

    rul_true = np.array([lab.rul for lab in labels], dtype=float)
    parity = report.parity_data(rul_true, preds.rul_pred)
    curve = report.sorted_rul_curve(rul_true, preds.rul_pred)
    by_health = report.error_box_by_health(labels, preds)
    by_component = report.error_box_by_component(labels, preds)

    parity.to_csv(out / "parity.csv", index=False, lineterminator="\n")
    curve.to_csv(out / "sorted_rul.csv", index=False, lineterminator="\n")
    for name, boxes in (("box_health", by_health), ("box_component", by_component)):
        with open(out / f"{name}.json", "w", encoding="utf-8") as fh:
            json.dump([b.to_dict() for b in boxes], fh, indent=2)
            fh.write("\n")
    (out / "parity.svg").write_text(report.render_svg(parity, "parity"), encoding="utf-8")
    (out / "sorted_rul.svg").write_text(report.render_svg(curve, "sorted_rul"), encoding="utf-8")
    (out / "box_health.svg").write_text(report.render_svg(by_health, "box"), encoding="utf-8")
    (out / "box_component.svg").write_text(report.render_svg(by_component, "box"), encoding="utf-8")

    bundle = {
        "metrics": scored.to_dict(),
        "parity": parity.to_dict(orient="list"),
        "sorted_rul": curve.to_dict(orient="list"),
        "box_health": [b.to_dict() for b in by_health],
        "box_component": [b.to_dict() for b in by_component],
    }
    (out / "report.json").write_text(json.dumps(bundle, indent=2) + "\n", encoding="utf-8")
    return scored


def _evaluate_common(cfg: RunConfig, command: str) -> int:
    records, manifest = _load_dataset(cfg)
    _, test_pairs = assemble_dataset(records, manifest)
    if not test_pairs:
        raise DataError("test split is empty")
    labels = [lab for _, lab in test_pairs]
    keys = [(rec.unit_id, rec.cycle_number) for rec, _ in test_pairs]

    if cfg.predictions:
        pred_keys, batch = metrics.read_predictions(cfg.predictions)
        if pred_keys != keys:
            index = {key: i for i, key in enumerate(pred_keys)}
            try:
                rows = [index[key] for key in keys]
            except KeyError as exc:
                raise DataError(
                    f"predictions file is missing test cycle {exc.args[0]}"
                ) from None
            batch = PredictionBatch(
                class_probs=batch.class_probs[rows], rul_pred=batch.rul_pred[rows]
            )
    else:
        if not cfg.model_file.exists():
            raise ConfigError(f"model file not found: {cfg.model_file}")
        if not cfg.transform_file.exists():
            raise ConfigError(f"transform file not found: {cfg.transform_file}")
        transform = preprocess.load_transform(cfg.transform_file)
        if transform.schema != features.schema_hash():
            raise DataError(
                "persisted transform does not match the feature schema (hash mismatch)"
            )
        cache = Path(cfg.feature_cache) if cfg.feature_cache else None
        matrix, labels = _features_for(test_pairs, cache)
        X = transform.apply(matrix)
        batch = _predict_with_model(cfg, X)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scored = _write_report_bundle(out, labels, batch, manifest, keys)
    _echo_config(cfg, command)
    print(scored.to_text(), end="")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    return _evaluate_common(cfg, "evaluate")


def cmd_report(cfg: RunConfig) -> int:
    if not cfg.predictions:
        default = Path(cfg.out_dir) / "predictions.csv"
        if not default.exists():
            raise ConfigError("report needs a predictions file (config key 'predictions')")
        cfg.predictions = str(default)
    return _evaluate_common(cfg, "report")


COMMANDS = {
    "synth": cmd_synth,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phmkit",
        description="Turbofan fault prognosis: health state, eventual failures, RUL",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="run configuration JSON")
        cmd.add_argument("--seed", type=int, default=None, help="override config seed")
        cmd.add_argument("--out", default=None, help="override output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config, seed=args.seed, out=args.out)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
