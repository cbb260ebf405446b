import sys
import os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

"""
Command-line frontend for the FaceCode analyses.

    python -m cli.main <command> --embeddings E --attributes A [flags]

Every command writes its artifacts and a manifest.json to <out>/<command>.
"""

import argparse
import html
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml
from pydantic import ValidationError

from src.core import CONFIG, load_config, get_section
from src.core.errors import ConfigError, DataError, FaceCodeError
from src.ingestion.dataset import (
    AttributeTable, EmbeddingSet, load_attributes, load_embeddings, save_attributes, save_embeddings
)
from src.ingestion.synthgen import SynthSpec, calibrate, generate, mean_identity_r2
from src.processing.decoding import (
    ablation_decode, chance_level, make_identity_folds, permutation_test, predict_cv
)
from src.processing.ensemble import (
    FaceSpace, alignment_overlap, assign_pcs, attribute_directions, build_face_space,
    explained_variance_ratio, pc_anova, sliding_window_predict, unit_pc_alignment
)
from src.processing.unitstats import (
    ATTRIBUTES, UnitProfile, correlation_profile, effect_size_summary, merge_profiles, profile_units
)
from src.reporting import plots
from src.reporting.artifacts import ArtifactWriter
from src.retrieval.subspace import make_plan
from src.retrieval.verification import (
    ablation_curve, auc, make_split, score_pairs, summarize_ablation
)
from src.utils import setup_logging
from cli.schemas import COMMANDS, ErrorResponse, RunConfig

logger = logging.getLogger(__name__)

SUMMARY_NAME = "summary.json"
ERROR_NAME = "error.json"

# ------------------------------------------------------------------------------
# Configuration
# ------------------------------------------------------------------------------
# flags that map one-to-one onto RunConfig fields
_FLAG_FIELDS = (
    "embeddings", "attributes", "seed", "sizes", "replicates", "window", "held_out",
    "permutations", "threads", "out", "plots", "profile", "calibrate",
)
# execution details that never change an artifact
_UNRECORDED_FIELDS = {"threads", "out"}


def _parse_sizes(text: str) -> List[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--sizes expects comma separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--embeddings", type=Path, help="Embedding file (.bin or .csv)")
    common.add_argument("--attributes", type=Path, help="Attribute CSV (image_id,identity,gender,yaw)")
    common.add_argument("--seed", type=int, help="Master seed (default 0)")
    common.add_argument("--sizes", type=_parse_sizes, help="Subspace sizes, e.g. 128,64,32")
    common.add_argument("--replicates", type=int, help="Random subspaces per size")
    common.add_argument("--window", type=int, help="PCs per sliding window")
    common.add_argument("--held-out", dest="held_out", type=int, help="Identities held out per fold")
    common.add_argument("--permutations", type=int, help="Permutation-test iterations")
    common.add_argument("--threads", type=int, help="Worker threads")
    common.add_argument("--out", type=Path, help="Output root (env FACECODE_OUTPUT_ROOT)")
    common.add_argument("--plots", action="store_const", const=True, help="Also write SVG figures")
    common.add_argument("--profile", choices=["paper"], help="Named parameter profile")
    common.add_argument("--config", type=Path, help="Alternative settings.yaml")
    common.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(prog="facecode", description="Embedding-space analyses of face descriptors")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        cmd = sub.add_parser(command, parents=[common])
        if command == "synth":
            cmd.add_argument("--calibrate", type=float, help="Bisect noise to reach this mean identity r^2")
    return parser


def _load_settings(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return CONFIG
    try:
        return load_config(str(path))
    except (FileNotFoundError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot load settings from {path}", detail=str(e)) from e


def resolve_config(args: argparse.Namespace, settings: Optional[Dict[str, Any]] = None) -> RunConfig:
    """settings.yaml defaults, then the named profile, then explicit flags.

    Raises:
        ConfigError: If the merged values fail validation
    """
    settings = CONFIG if settings is None else settings
    subspace = get_section("subspace", settings)
    verification = get_section("verification", settings)
    statistics = get_section("statistics", settings)
    decoding = get_section("decoding", settings)
    ensemble = get_section("ensemble", settings)
    dataset = get_section("dataset", settings)
    output = get_section("output", settings)
    performance = get_section("performance", settings)

    values: Dict[str, Any] = {
        "sizes": subspace.get("sizes"),
        "replicates": subspace.get("replicates"),
        "split_fraction": verification.get("split_fraction"),
        "renormalize": verification.get("renormalize"),
        "zero_norm_policy": verification.get("zero_norm_policy"),
        "tile_size": verification.get("tile_size"),
        "alpha": statistics.get("alpha"),
        "pooled_error": statistics.get("pooled_error"),
        "max_stored_correlations_dim": statistics.get("max_stored_correlations_dim"),
        "histogram_bins": statistics.get("histogram_bins"),
        "held_out": decoding.get("held_out"),
        "permutations": decoding.get("permutations"),
        "lda_priors": decoding.get("lda_priors"),
        "window": ensemble.get("window"),
        "window_step": ensemble.get("window_step"),
        "assignment_floor": ensemble.get("assignment_floor"),
        "dataset_format": dataset.get("format"),
        "csv_float_format": dataset.get("csv_float_format"),
        "synth": get_section("synth", settings),
        "out": output.get("root"),
        "plots": output.get("plots"),
        "threads": performance.get("threads"),
    }

    profile_name = getattr(args, "profile", None)
    if profile_name:
        profile = (settings.get("profiles") or {}).get(profile_name)
        if profile is None:
            raise ConfigError(f"Unknown profile {profile_name!r}")
        values.update(profile)

    for flag in _FLAG_FIELDS:
        value = getattr(args, flag, None)
        if value is not None:
            values[flag] = value
    values["command"] = args.command

    try:
        return RunConfig(**{k: v for k, v in values.items() if v is not None})
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration for {args.command}", detail=str(e)) from e


# ------------------------------------------------------------------------------
# Helpers
# ------------------------------------------------------------------------------
def _load_inputs(cfg: RunConfig):
    emb = load_embeddings(cfg.embeddings)
    attrs = load_attributes(cfg.attributes, embeddings=emb)
    return emb, attrs


def _plan_sizes(cfg: RunConfig, dim: int) -> List[int]:
    """Sizes for this dimension; the named profile's grid drops sizes above D with a warning."""
    sizes = list(cfg.sizes)
    too_big = [s for s in sizes if s > dim]
    if too_big and cfg.profile == "paper":
        logger.warning(f"Dropping subspace sizes {too_big} above D={dim}")
        sizes = [s for s in sizes if s <= dim]
        if not sizes:
            raise ConfigError(f"No subspace size fits D={dim}")
    return sizes


def _profiles_frame(profiles: Sequence[UnitProfile], index_name: str) -> pd.DataFrame:
    rows = []
    for profile in profiles:
        for attribute in ATTRIBUTES:
            test = profile.test(attribute)
            rows.append({
                index_name: profile.unit_index,
                "attribute": attribute,
                "f_ratio": test.f_ratio if test else np.nan,
                "df_between": test.df_between if test else np.nan,
                "df_within": test.df_within if test else np.nan,
                "p_value": test.p_value if test else np.nan,
                "r_squared": test.r_squared if test else np.nan,
                "degenerate": profile.degenerate,
            })
    return pd.DataFrame(rows)


def _r2_curves(profiles: Sequence[UnitProfile]) -> Dict[str, List[float]]:
    return {
        a: [p.test(a).r_squared if p.test(a) is not None else np.nan for p in profiles]
        for a in ATTRIBUTES
    }


def _space_profiles(space: FaceSpace, attrs: AttributeTable, cfg: RunConfig) -> List[UnitProfile]:
    return merge_profiles(*(pc_anova(space, attrs, a, pooled_error=cfg.pooled_error) for a in ATTRIBUTES))


# ------------------------------------------------------------------------------
# Commands
# ------------------------------------------------------------------------------
def cmd_synth(cfg: RunConfig, writer: ArtifactWriter) -> Dict[str, Any]:
    spec = SynthSpec.from_config(cfg.synth, seed=cfg.seed)
    if cfg.calibrate is not None:
        spec = calibrate(cfg.calibrate, spec)
    data = generate(spec)

    suffix = "csv" if cfg.dataset_format == "csv" else "bin"
    save_embeddings(data.embeddings, writer.path(f"embeddings.{suffix}"), format=cfg.dataset_format,
                    float_format=cfg.csv_float_format)
    writer.register(f"embeddings.{suffix}")
    save_attributes(data.attributes, writer.path("attributes.csv"))
    writer.register("attributes.csv")
    writer.write_json("ground_truth.json", data.truth.to_dict())

    return {
        "spec": spec.to_dict(),
        "n_images": data.embeddings.n_images,
        "n_units": data.embeddings.n_units,
        "n_identities": data.attributes.n_identities,
        "mean_identity_r2": mean_identity_r2(data.embeddings.descriptors, data.attributes.identities),
    }


def cmd_verify(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
               attrs: AttributeTable) -> Dict[str, Any]:
    split = make_split(attrs, cfg.split_fraction, cfg.seed)
    scores = score_pairs(emb, attrs, split, renormalize=cfg.renormalize,
                         zero_norm_policy=cfg.zero_norm_policy, tile_size=cfg.tile_size,
                         n_jobs=cfg.threads)
    writer.write_json("split.json", {"seed": split.seed, "fraction": split.fraction,
                                     "set_a": list(split.set_a), "set_b": list(split.set_b)})
    if cfg.plots:
        edges = np.linspace(-1.0, 1.0, cfg.histogram_bins + 1)
        plots.plot_histogram(np.histogram(scores.genuine, bins=edges)[0], edges,
                             writer.register("genuine_scores.svg"), "genuine cosine")
        plots.plot_histogram(np.histogram(scores.impostor, bins=edges)[0], edges,
                             writer.register("impostor_scores.svg"), "impostor cosine")
    return {
        "auc": auc(scores),
        "gallery_a": len(split.set_a),
        "gallery_b": len(split.set_b),
        "comparisons": split.comparisons,
        "genuine_pairs": scores.genuine_count,
        "impostor_pairs": scores.impostor_count,
        "zero_norm_pairs": scores.zero_norm_pairs,
    }


def cmd_ablate(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
               attrs: AttributeTable) -> Dict[str, Any]:
    plan = make_plan(emb.n_units, _plan_sizes(cfg, emb.n_units), cfg.replicates, cfg.seed)
    split = make_split(attrs, cfg.split_fraction, cfg.seed)
    table = ablation_curve(emb, attrs, split, plan, renormalize=cfg.renormalize,
                           zero_norm_policy=cfg.zero_norm_policy, tile_size=cfg.tile_size,
                           n_jobs=cfg.threads)
    summary = summarize_ablation(table)
    writer.write_json("plan.json", plan.to_dict())
    writer.write_csv("ablation.csv", table)
    writer.write_csv("ablation_summary.csv", summary)
    if cfg.plots:
        plots.plot_ablation(summary, writer.register("ablation.svg"))
    return {
        "sizes": list(plan.sizes),
        "replicates": plan.replicates,
        "mean_auc": dict(zip((str(s) for s in summary["size"]), summary["mean_auc"])),
        "zero_norm_pairs": int(table["zero_norm_pairs"].sum()),
    }


def cmd_anova(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
              attrs: AttributeTable) -> Dict[str, Any]:
    profiles = profile_units(emb, attrs, pooled_error=cfg.pooled_error)
    writer.write_csv("unit_anova.csv", _profiles_frame(profiles, "unit"))
    if cfg.plots:
        plots.plot_effect_sizes(_r2_curves(profiles), writer.register("unit_effect_sizes.svg"))
    return {a: effect_size_summary(profiles, a, cfg.alpha) for a in ATTRIBUTES}


def cmd_correlate(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
                  attrs: AttributeTable) -> Dict[str, Any]:
    profile = correlation_profile(emb, max_stored_dim=cfg.max_stored_correlations_dim,
                                  bins=cfg.histogram_bins)
    edges = profile.bin_edges
    writer.write_csv("correlation_histogram.csv", pd.DataFrame({
        "bin_left": edges[:-1], "bin_right": edges[1:], "count": profile.histogram,
    }))
    if cfg.plots:
        plots.plot_histogram(profile.histogram, edges, writer.register("correlations.svg"),
                             "Pearson r between units")
    return {
        "pairs": profile.count,
        "median_r": profile.median,
        "abs_r_p95": profile.abs_p95,
        "constant_units": list(profile.constant_units),
    }


def _cmd_decode(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
                attrs: AttributeTable, task: str) -> Dict[str, Any]:
    folds = make_identity_folds(attrs, cfg.held_out, cfg.seed)
    result = predict_cv(emb, attrs, folds, task, priors=cfg.lda_priors)
    chance = chance_level(attrs, folds, task)

    def statistic(matrix: np.ndarray) -> float:
        return predict_cv(matrix, attrs, folds, task, priors=cfg.lda_priors).metric

    perm = permutation_test(statistic, emb, cfg.permutations, cfg.seed,
                            higher_is_better=task == "gender", n_jobs=cfg.threads)
    plan = make_plan(emb.n_units, _plan_sizes(cfg, emb.n_units), cfg.replicates, cfg.seed)
    table = ablation_decode(emb, attrs, folds, plan, task, priors=cfg.lda_priors, n_jobs=cfg.threads)

    truth = attrs.genders if task == "gender" else attrs.yaws
    writer.write_csv("predictions.csv", pd.DataFrame({
        "image_id": list(emb.image_ids), "truth": truth, "prediction": result.predictions,
    }))
    writer.write_csv("decode_ablation.csv", table)
    writer.write_csv("permutation_null.csv", pd.DataFrame({"statistic": perm.null}))
    writer.write_json("folds.json", [sorted(f.held_out_identities) for f in folds])
    metric_name = "accuracy" if task == "gender" else "mae_degrees"
    if cfg.plots:
        plots.plot_decode_ablation(table, writer.register("decode_ablation.svg"),
                                   ylabel=metric_name, chance=chance)
    means = table.groupby("size", sort=False)["metric"].mean()
    return {
        "task": task,
        metric_name: result.metric,
        "chance": chance,
        "folds": len(folds),
        "permutations": cfg.permutations,
        "p_value": perm.p_value,
        "null_overlap": perm.overlap,
        "ablation_mean": {str(k): float(v) for k, v in means.items()},
    }


def cmd_decode_gender(cfg, writer, emb, attrs):
    return _cmd_decode(cfg, writer, emb, attrs, "gender")


def cmd_decode_view(cfg, writer, emb, attrs):
    return _cmd_decode(cfg, writer, emb, attrs, "viewpoint")


def cmd_pca(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
            attrs: AttributeTable) -> Dict[str, Any]:
    space = build_face_space(emb)
    ratio = explained_variance_ratio(space)
    profiles = _space_profiles(space, attrs, cfg)
    writer.write_csv("eigenvalues.csv", pd.DataFrame({
        "pc": np.arange(space.dim), "eigenvalue": space.basis.values, "explained_variance_ratio": ratio,
    }))
    writer.write_csv("pc_anova.csv", _profiles_frame(profiles, "pc"))
    if cfg.plots:
        plots.plot_effect_sizes(_r2_curves(profiles), writer.register("pc_effect_sizes.svg"), xlabel="PC")
    curves = _r2_curves(profiles)
    return {
        "pcs": space.dim,
        "degenerate_pcs": int((~space.nondegenerate()).sum()),
        "explained_variance_first_10": float(ratio[:10].sum()),
        "peak_pc": {a: int(np.nanargmax(v)) if not np.all(np.isnan(v)) else None for a, v in curves.items()},
        "summary": {a: effect_size_summary(profiles, a, cfg.alpha) for a in ATTRIBUTES},
    }


def cmd_windows(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
                attrs: AttributeTable) -> Dict[str, Any]:
    space = build_face_space(emb)
    split = make_split(attrs, cfg.split_fraction, cfg.seed)
    folds = make_identity_folds(attrs, cfg.held_out, cfg.seed)
    tables = [
        sliding_window_predict(space, attrs, cfg.window, task, split=split, folds=folds,
                               step=cfg.window_step, priors=cfg.lda_priors, n_jobs=cfg.threads)
        for task in ("identity", "gender", "viewpoint")
    ]
    table = pd.concat(tables, ignore_index=True)
    writer.write_csv("windows.csv", table)
    if cfg.plots:
        plots.plot_windows(table, writer.register("windows.svg"))
    best = {}
    for task, rows in table.groupby("task", sort=False):
        index = rows["metric"].idxmin() if task == "viewpoint" else rows["metric"].idxmax()
        best[task] = {"start": int(rows.loc[index, "start"]), "metric": float(rows.loc[index, "metric"])}
    return {"window": cfg.window, "step": cfg.window_step, "best_window": best}


def cmd_directions(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
                   attrs: AttributeTable) -> Dict[str, Any]:
    space = build_face_space(emb)
    report = attribute_directions(space, emb, attrs, priors=cfg.lda_priors)
    frame = report.to_frame()
    writer.write_csv("directions.csv", frame)
    if cfg.plots:
        plots.plot_directions(frame, writer.register("directions.svg"))
    return {
        "peak_pc": {a: int(frame[f"{a}_similarity"].idxmax()) for a in ATTRIBUTES},
        "flagged_identities": list(report.flagged_identities),
    }


def cmd_alignment(cfg: RunConfig, writer: ArtifactWriter, emb: EmbeddingSet,
                  attrs: AttributeTable) -> Dict[str, Any]:
    space = build_face_space(emb)
    profiles = _space_profiles(space, attrs, cfg)
    assignment = assign_pcs(profiles, floor=cfg.assignment_floor)
    alignment = unit_pc_alignment(space)
    overlap = alignment_overlap(alignment, assignment)

    r2 = _r2_curves(profiles)
    writer.write_csv("pc_assignment.csv", pd.DataFrame({
        "pc": np.arange(space.dim), "attribute": assignment,
        **{f"{a}_r2": r2[a] for a in ATTRIBUTES},
    }))
    similarity = pd.DataFrame(alignment.similarity, columns=[f"pc{k}" for k in range(space.dim)])
    similarity.insert(0, "unit", np.arange(space.dim))
    writer.write_csv("unit_pc_alignment.csv", similarity)
    writer.write_csv("alignment_overlap.csv", overlap)
    if cfg.plots:
        plots.plot_alignment(alignment.by_assignment(assignment), writer.register("alignment.svg"))

    row_norm_error = float(np.abs((alignment.similarity ** 2).sum(axis=1) - 1.0).max())
    labels, counts = np.unique(assignment.astype(str), return_counts=True)
    return {
        "assigned_pcs": {str(k): int(v) for k, v in zip(labels, counts)},
        "row_norm_max_error": row_norm_error,
        "ks_tests": int(len(overlap)),
        "ks_rejected_at_1pct": float((overlap["p_value"] < 0.01).mean()) if len(overlap) else None,
    }


def cmd_report(cfg: RunConfig, writer: ArtifactWriter) -> Dict[str, Any]:
    """Bundle every command's summary and figures into report.json / report.html."""
    sections: Dict[str, Any] = {}
    figures: Dict[str, List[str]] = {}
    for directory in sorted(p for p in cfg.out.iterdir() if p.is_dir() and p.name != "report"):
        summary_path = directory / SUMMARY_NAME
        if not summary_path.exists():
            continue
        sections[directory.name] = json.loads(summary_path.read_text(encoding="utf-8"))
        figures[directory.name] = [f.read_text(encoding="utf-8") for f in sorted(directory.glob("*.svg"))]
    if not sections:
        raise ConfigError(f"No command summaries found under {cfg.out}")

    writer.write_json("report.json", sections)
    parts = ["<!DOCTYPE html>", "<html><head><meta charset=\"utf-8\"><title>FaceCode report</title></head><body>",
             "<h1>FaceCode report</h1>"]
    for name, summary in sections.items():
        parts.append(f"<h2>{html.escape(name)}</h2>")
        parts.append(f"<pre>{html.escape(json.dumps(summary, sort_keys=True, indent=2))}</pre>")
        parts.extend(f"<div>{svg}</div>" for svg in figures[name])
    parts.append("</body></html>")
    writer.write_text("report.html", "\n".join(parts) + "\n")
    return {"sections": sorted(sections)}


COMMAND_HANDLERS: Dict[str, Callable[..., Dict[str, Any]]] = {
    "verify": cmd_verify,
    "ablate": cmd_ablate,
    "anova": cmd_anova,
    "correlate": cmd_correlate,
    "decode-gender": cmd_decode_gender,
    "decode-view": cmd_decode_view,
    "pca": cmd_pca,
    "windows": cmd_windows,
    "directions": cmd_directions,
    "alignment": cmd_alignment,
}


def run(cfg: RunConfig) -> Dict[str, Any]:
    """Execute one command and write its summary and manifest."""
    writer = ArtifactWriter(cfg.out_dir)
    inputs: List[Path] = []
    if cfg.command == "synth":
        summary = cmd_synth(cfg, writer)
    elif cfg.command == "report":
        summary = cmd_report(cfg, writer)
        inputs = sorted(p for p in cfg.out.glob(f"*/{SUMMARY_NAME}") if p.parent.name != "report")
    else:
        emb, attrs = _load_inputs(cfg)
        inputs = [cfg.embeddings, cfg.attributes]
        summary = COMMAND_HANDLERS[cfg.command](cfg, writer, emb, attrs)

    summary = {"command": cfg.command, "seed": cfg.seed, **summary}
    writer.write_json(SUMMARY_NAME, summary)
    writer.write_manifest(cfg.command, cfg.model_dump(mode="json", exclude=_UNRECORDED_FIELDS), cfg.seed, inputs)
    return summary


def _emit_error(error: FaceCodeError, out_dir: Optional[Path]) -> int:
    payload = ErrorResponse(**error.to_dict()).model_dump(exclude_none=True)
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / ERROR_NAME).write_text(text, encoding="utf-8")
        except OSError as e:
            logger.error(f"Could not write {ERROR_NAME}: {e}")
    sys.stdout.write(text)
    return error.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out_dir: Optional[Path] = None
    try:
        settings = _load_settings(args.config)
        log_config = get_section("logging", settings)
        setup_logging(
            log_dir=log_config.get("log_dir", "./logs"),
            level=args.log_level or log_config.get("level", "INFO"),
            max_bytes=log_config.get("max_bytes", 10485760),
            backup_count=log_config.get("backup_count", 5),
        )
        out_root = args.out or Path(get_section("output", settings).get("root", "./outputs"))
        out_dir = out_root / args.command

        cfg = resolve_config(args, settings)
        out_dir = cfg.out_dir
        logger.info(f"Running {cfg.command} (seed={cfg.seed}, threads={cfg.threads})")
        run(cfg)
        return 0
    except FaceCodeError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return _emit_error(e, out_dir)
    except FileNotFoundError as e:
        logger.error(str(e))
        return _emit_error(DataError(str(e)), out_dir)
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return _emit_error(FaceCodeError(str(e)), out_dir)


if __name__ == "__main__":
    sys.exit(main())
