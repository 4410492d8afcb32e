"""Command line entry point: segment, eval, sweep, corrupt, synth."""

from __future__ import annotations

import json
import os
import shutil
import sys
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import evalkit
from .accumulator import write_accumulator_csv
from .config import PipelineConfig, default_config, load_config
from .errors import InvalidParam, RepsegError
from .estimator import RepetitionSegmenter
from .evalkit import GroundTruth, LevelSpec
from .imagecore import load_image, read_mask_png, write_image_png, write_mask_png


def _atomic_write_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_cfg(config_path) -> PipelineConfig:
    return load_config(config_path) if config_path else default_config()


def _jobs_option(jobs: int | None) -> int:
    if jobs is not None:
        return max(jobs, 1)
    env = os.environ.get("REPSEG_JOBS")
    return max(int(env), 1) if env else 1


def _parse_values(text: str, conv):
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise InvalidParam(f"cannot parse value list {text!r}: {e}") from e


@click.group()
def main():
    """Unsupervised repeated-pattern segmentation and evaluation."""


def _run(fn) -> None:
    try:
        fn()
    except InvalidParam as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except RepsegError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    except Exception:
        traceback.print_exc()
        sys.exit(1)


def _dump_superpixel_overlay(img: np.ndarray, assignment: np.ndarray,
                             path: Path) -> None:
    if img.ndim == 2:
        rgb = np.stack([img] * 3, axis=-1)
    else:
        rgb = img.copy()
    boundary = np.zeros(assignment.shape, dtype=bool)
    boundary[:, 1:] |= assignment[:, 1:] != assignment[:, :-1]
    boundary[1:, :] |= assignment[1:, :] != assignment[:-1, :]
    rgb[boundary] = (255, 0, 0)
    write_image_png(rgb, path)


@main.command()
@click.argument("image_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON pipeline config (built-in defaults when omitted).")
@click.option("--level", "level_name", default="default", show_default=True)
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
@click.option("--dump-superpixels", is_flag=True)
@click.option("--dump-accumulator", is_flag=True)
@click.option("--dump-graph", is_flag=True)
def segment(image_path, config_path, level_name, out_dir,
            dump_superpixels, dump_accumulator, dump_graph):
    """Segment one image at a named semantic level."""

    def go():
        cfg = _load_cfg(config_path)
        spec = cfg.level(level_name)
        img = load_image(image_path)
        est = evalkit.make_segmenter(spec, cfg.defaults)
        mask = est.fit_predict(img)

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(image_path).stem
        write_mask_png(mask, out / f"{stem}.{level_name}.mask.png")
        report = {
            "image": str(image_path),
            "level": level_name,
            "params": est.get_params(),
            "stats": est.run_stats(),
        }
        _write_json(out / f"{stem}.{level_name}.report.json", report)
        if dump_superpixels:
            _dump_superpixel_overlay(img, est.superpixels_.assignment,
                                     out / f"{stem}.{level_name}.superpixels.png")
        if dump_accumulator and est.accumulator_ is not None:
            write_accumulator_csv(est.accumulator_,
                                  out / f"{stem}.{level_name}.accumulator.csv")
        if dump_graph:
            lines = ["a,b,multiplicity"]
            lines += [f"{a},{b},{m}" for (a, b), m in sorted(est.graph_.edges.items())]
            _atomic_write_text(out / f"{stem}.{level_name}.graph.csv",
                               "\n".join(lines) + "\n")

    _run(go)


def _eval_one(args):
    stem, image, gt_levels, level_specs, defaults = args
    gt = GroundTruth(levels=gt_levels)
    result = {}
    for spec in level_specs:
        rep = evalkit.evaluate_image(image, gt, spec, defaults)
        result[spec.name] = rep.to_dict()
    return stem, result


@main.command("eval")
@click.argument("dataset_root", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--jobs", type=int, default=None,
              help="Parallel workers (REPSEG_JOBS env var as fallback).")
def eval_cmd(dataset_root, config_path, out_dir, jobs):
    """Evaluate every config level on a dataset, with aggregate scores."""

    def go():
        cfg = _load_cfg(config_path)
        items = evalkit.load_dataset(dataset_root)
        specs = list(cfg.levels.values())
        tasks = [(it.stem, it.image, it.gt.levels, specs, cfg.defaults)
                 for it in items]
        n_jobs = _jobs_option(jobs)
        per_image: dict[str, dict] = {}
        failures: dict[str, str] = {}
        results = []
        if n_jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as ex:
                futures = [(t[0], ex.submit(_eval_one, t)) for t in tasks]
                for stem, fut in futures:
                    try:
                        results.append(fut.result())
                    except Exception as e:  # per-image failures are recorded
                        failures[stem] = f"{type(e).__name__}: {e}"
        else:
            for t in tasks:
                try:
                    results.append(_eval_one(t))
                except Exception as e:
                    failures[t[0]] = f"{type(e).__name__}: {e}"
        for stem, result in results:
            per_image[stem] = result

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for stem, result in per_image.items():
            _write_json(out / f"{stem}.report.json", result)

        aggregate: dict[str, dict] = {}
        for spec in specs:
            sums: dict[str, list[float]] = {}
            for result in per_image.values():
                for gt_level, scores in result[spec.name]["levels"].items():
                    for metric in ("precision", "recall", "f1"):
                        sums.setdefault(f"{gt_level}.{metric}", []).append(
                            scores[metric])
            aggregate[spec.name] = {key: sum(v) / len(v)
                                    for key, v in sums.items() if v}
        _write_json(out / "eval_report.json", {
            "metric": evalkit.METRIC_NAME,
            "images": len(items),
            "evaluated": sorted(per_image),
            "failed": failures,
            "aggregate": aggregate,
        })
        if items and not per_image:
            raise RepsegError("all images failed to evaluate")

    _run(go)


@main.command()
@click.argument("image_path", type=click.Path())
@click.option("--gt", "gt_path", type=click.Path(), required=True,
              help="16-bit PNG ground-truth instance mask.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--level", "level_name", default="default", show_default=True,
              help="Level supplying the fixed (non-swept) parameters.")
@click.option("--r-values", required=True, help="Comma-separated r values.")
@click.option("--superpixels", "spx_values", required=True,
              help="Comma-separated superpixel counts.")
@click.option("--out", "out_csv", type=click.Path(), required=True)
@click.option("--dump-accumulator", is_flag=True)
def sweep(image_path, gt_path, config_path, level_name, r_values, spx_values,
          out_csv, dump_accumulator):
    """Heatmap-style sweep over (r, superpixel count)."""

    def go():
        cfg = _load_cfg(config_path)
        fixed = cfg.level(level_name)
        img = load_image(image_path)
        gt = GroundTruth(levels={"instance": read_mask_png(gt_path)})
        dump_dir = Path(out_csv).parent / "accumulators" if dump_accumulator else None
        rows = evalkit.sweep(img, gt, _parse_values(r_values, float),
                             _parse_values(spx_values, int), fixed,
                             cfg.defaults, dump_accumulator_dir=dump_dir)
        lines = ["r,superpixels,precision,recall"]
        lines += [f"{row['r']:g},{row['superpixels']},"
                  f"{row['precision']!r},{row['recall']!r}" for row in rows]
        out = Path(out_csv)
        out.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(out, "\n".join(lines) + "\n")

    _run(go)


@main.command()
@click.argument("dataset_root", type=click.Path())
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--kinds", default="all", show_default=True,
              help="Comma-separated corruption kinds, or 'all'.")
@click.option("--seed", type=int, default=31337, show_default=True)
def corrupt(dataset_root, out_dir, kinds, seed):
    """Write corrupted copies of a dataset, one sibling tree per kind."""

    def go():
        kind_list = list(evalkit.CORRUPTION_KINDS) if kinds == "all" else \
            [k.strip() for k in kinds.split(",") if k.strip()]
        for kind in kind_list:
            if kind not in evalkit.CORRUPTION_KINDS:
                raise InvalidParam(
                    f"unknown corruption kind {kind!r}; choose from "
                    f"{', '.join(evalkit.CORRUPTION_KINDS)}")
        items = evalkit.load_dataset(dataset_root)
        root = Path(dataset_root)
        for kind in kind_list:
            tree = Path(out_dir) / kind
            (tree / "images").mkdir(parents=True, exist_ok=True)
            for it in items:
                corrupted = evalkit.corrupt(it.image, kind, seed)
                write_image_png(corrupted, tree / "images" / f"{it.stem}.png")
                src_masks = root / "masks" / it.stem
                if src_masks.is_dir():
                    dst = tree / "masks" / it.stem
                    dst.mkdir(parents=True, exist_ok=True)
                    for mp in src_masks.glob("*.png"):
                        shutil.copyfile(mp, dst / mp.name)

    _run(go)


@main.command()
@click.option("--icon", default="cross", show_default=True,
              type=click.Choice(evalkit.ICON_NAMES))
@click.option("--rows", type=int, default=5, show_default=True)
@click.option("--cols", type=int, default=5, show_default=True)
@click.option("--period", type=int, default=64, show_default=True)
@click.option("--jitter", type=int, default=0, show_default=True)
@click.option("--canvas", type=int, default=512, show_default=True)
@click.option("--icon-size", type=int, default=24, show_default=True)
@click.option("--gt-margin", type=int, default=6, show_default=True,
              help="Dilation of the ground-truth region around each icon.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--name", default=None, help="Image stem (default: icon_seed).")
def synth(icon, rows, cols, period, jitter, canvas, icon_size, gt_margin,
          seed, out_dir, name):
    """Generate a synthetic tiling with instance/pattern ground truth."""

    def go():
        img, gt = evalkit.synth(icon, rows, cols, period, jitter, canvas,
                                seed, icon_size=icon_size, gt_margin=gt_margin)
        stem = name or f"{icon}_{seed}"
        root = Path(out_dir)
        (root / "images").mkdir(parents=True, exist_ok=True)
        mask_dir = root / "masks" / stem
        mask_dir.mkdir(parents=True, exist_ok=True)
        write_image_png(img, root / "images" / f"{stem}.png")
        for level, mask in gt.levels.items():
            write_mask_png(mask, mask_dir / f"{level}.png")

    _run(go)


if __name__ == "__main__":
    main()
