"""Command-line front end.

    scenesynth bg|detect|extract|synth|eval|pipeline --config scene.toml [flags]

Exit status is 0 on success, 2 for configuration problems and 1 for any
other failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from scenesynth import background_model, change_detect, composer, frame_store, metrics, object_bank
from scenesynth.config import Config
from scenesynth.errors import ConfigError, SceneSynthError

log = logging.getLogger("scenesynth")


def cmd_bg(cfg: Config) -> None:
    cfg.require(cfg.scene)
    frames = frame_store.load_sequence(cfg.scene, cfg.frame_range)
    bg = background_model.median_background(frames, cfg.window)
    cfg.output.mkdir(parents=True, exist_ok=True)
    frame_store.write_image(cfg.background_path, bg.pixels)
    frame_store.write_json(cfg.output / "background.json", {"source_window": list(bg.source_window)})
    log.info("background from frames %d..%d -> %s", *bg.source_window, cfg.background_path)


def _load_background(cfg: Config) -> background_model.BackgroundImage:
    cfg.require(cfg.background_path)
    meta_path = cfg.output / "background.json"
    window = tuple(frame_store.read_json(meta_path)["source_window"]) if meta_path.exists() else (0, 0)
    return background_model.BackgroundImage(frame_store.read_image(cfg.background_path), window)


def cmd_detect(cfg: Config) -> None:
    cfg.require(cfg.scene)
    out_dir = cfg.output / "masks"
    out_dir.mkdir(parents=True, exist_ok=True)
    frames = frame_store.load_sequence(cfg.scene, cfg.frame_range)
    external = cfg.mask_source
    if external:
        cfg.require(external)
        masks = change_detect.load_masks(external, [f.index for f in frames])
        if Path(external).resolve() == out_dir.resolve():
            return
    else:
        bg = _load_background(cfg)
        masks = (change_detect.detect(f, bg, cfg.detector) for f in frames)
    n = 0
    for m in masks:
        change_detect.save_mask(out_dir, m)
        n += 1
    log.info("wrote %d masks to %s", n, out_dir)


def cmd_extract(cfg: Config) -> None:
    cfg.require(cfg.scene, cfg.mask_dir)
    frames = frame_store.load_sequence(cfg.scene, cfg.extract_range or cfg.frame_range)
    masks = change_detect.load_masks(cfg.mask_dir, [f.index for f in frames])
    bank = object_bank.build_bank(frames, masks, cfg.filter, cfg.scene_id)
    object_bank.save_bank(bank, cfg.bank_dir)
    log.info("bank with %d objects -> %s", len(bank), cfg.bank_dir)


def cmd_synth(cfg: Config) -> None:
    spec = cfg.synth
    if spec.placement is composer.Placement.CROSS:
        foreign = cfg.data["synth"]["foreign_banks"]
        if not foreign:
            raise ConfigError("cross-scene placement needs synth.foreign_banks")
        cfg.require(*foreign)
        banks = [object_bank.load_bank(p) for p in foreign]
    else:
        cfg.require(cfg.bank_dir)
        banks = [object_bank.load_bank(cfg.bank_dir)]
    bg = _load_background(cfg)
    manifest = composer.build_dataset(banks, bg, spec, cfg.synth_dir, config=cfg.as_dict())
    log.info("wrote %d samples to %s", len(manifest.samples), cfg.synth_dir)


def _evaluate_videos(cfg: Config) -> metrics.EvalReport:
    videos = cfg.data["eval"]["videos"]
    if not videos:
        videos = [{
            "id": cfg.scene_id,
            "category": cfg.data["eval"]["category"],
            "scene": str(cfg.scene),
            "pred": cfg.data["eval"]["pred"] or str(cfg.mask_dir),
        }]
    per_video, category_of = [], {}
    for v in videos:
        try:
            vid, cat, scene, pred = v["id"], v["category"], v["scene"], v["pred"]
        except KeyError as exc:
            raise ConfigError(f"eval.videos entry missing {exc}") from exc
        cfg.require(scene, pred)
        per_video.append((vid, metrics.evaluate_video(scene, pred)))
        category_of[vid] = cat
    return metrics.report(per_video, category_of)


def cmd_eval(cfg: Config) -> None:
    rep = _evaluate_videos(cfg)
    cfg.output.mkdir(parents=True, exist_ok=True)
    frame_store.write_json(cfg.output / "eval.json", rep.to_dict())
    table = rep.table()
    (cfg.output / "eval.txt").write_text(table + "\n")
    print(table)


def cmd_pipeline(cfg: Config) -> None:
    cmd_bg(cfg)
    cmd_detect(cfg)
    cmd_extract(cfg)
    cmd_synth(cfg)


COMMANDS = {
    "bg": cmd_bg,
    "detect": cmd_detect,
    "extract": cmd_extract,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenesynth",
                                     description="Scene-specific cut-and-paste training data synthesis")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="per-scene TOML config file")
    parser.add_argument("--scene", help="CDnet-layout scene directory")
    parser.add_argument("--output", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n-samples", type=int)
    parser.add_argument("--placement", choices=[p.value for p in composer.Placement])
    parser.add_argument("--blend", choices=["poisson", "direct"])
    parser.add_argument("--masks", help="builtin | external:<dir>")
    parser.add_argument("--window", type=int, help="frames in the median background")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def overrides_from(args: argparse.Namespace) -> dict:
    ov: dict = {}
    if args.scene is not None:
        ov["scene"] = str(Path(args.scene).absolute())
    if args.output is not None:
        ov["output"] = str(Path(args.output).absolute())
    synth = {k: v for k, v in (("seed", args.seed), ("n_samples", args.n_samples),
                               ("placement", args.placement), ("blend", args.blend)) if v is not None}
    if synth:
        ov["synth"] = synth
    if args.masks is not None:
        src = args.masks
        if src.startswith("external:"):
            src = "external:" + str(Path(src[len("external:"):]).absolute())
        ov["detector"] = {"source": src}
    if args.window is not None:
        ov["background"] = {"window": args.window}
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = Config.load(args.config, overrides_from(args))
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"scenesynth: configuration error: {exc}", file=sys.stderr)
        return 2
    except (SceneSynthError, OSError, ValueError, KeyError) as exc:
        print(f"scenesynth: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
