"""Per-scene TOML configuration and command-line overrides."""

from __future__ import annotations

import copy
import sys
from pathlib import Path

from scenesynth.change_detect import DetectorParams
from scenesynth.composer import Placement, SynthSpec
from scenesynth.errors import ConfigError
from scenesynth.object_bank import ObjectFilter
from scenesynth.poisson_blend import BlendMethod, SolverParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "scene": None,
    "scene_id": None,
    "output": "out",
    "frames": None,
    "background": {"window": 50},
    "detector": {"source": "builtin", "threshold": 30, "open_radius": 1, "close_radius": 1},
    "objects": {"min_area": 50, "max_area_fraction": 0.5, "reject_border_touching": True, "frames": None},
    "synth": {
        "n_samples": 200,
        "max_objects_per_sample": 10,
        "placement": "original",
        "blend": "poisson",
        "seed": 0,
        "max_resample_attempts": 10,
        "allow_overlap": False,
        "allow_empty": False,
        "foreign_banks": [],
    },
    "solver": {"rel_tol": 1e-6, "max_iters": None},
    "eval": {"category": "baseline", "pred": None, "videos": []},
}

_PATH_KEYS = ("scene", "output")


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key} must be a table")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def _resolve(path, root: Path) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p if p.is_absolute() else (root / p))


class Config:
    """Effective configuration: defaults <- file <- flags."""

    def __init__(self, data: dict):
        self.data = data
        try:
            self.detector = DetectorParams(**{k: v for k, v in data["detector"].items() if k != "source"})
            self.filter = ObjectFilter(**{k: v for k, v in data["objects"].items() if k != "frames"})
            self.solver = SolverParams(rel_tol=float(data["solver"]["rel_tol"]),
                                       max_iters=data["solver"]["max_iters"])
            s = data["synth"]
            self.synth = SynthSpec(
                n_samples=s["n_samples"],
                max_objects_per_sample=s["max_objects_per_sample"],
                placement=Placement(s["placement"]),
                blend_method=BlendMethod(s["blend"]),
                seed=s["seed"],
                max_resample_attempts=s["max_resample_attempts"],
                allow_overlap=s["allow_overlap"],
                allow_empty=s["allow_empty"],
                solver=self.solver,
            )
            window = data["background"]["window"]
            if not isinstance(window, int) or window < 1:
                raise ValueError(f"background.window must be a positive integer, got {window!r}")
            self._check_range(data["frames"], "frames")
            self._check_range(data["objects"]["frames"], "objects.frames")
            self.mask_source  # validates
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @staticmethod
    def _check_range(rng, name):
        if rng is None:
            return
        if len(rng) != 2 or rng[0] > rng[1]:
            raise ValueError(f"{name} must be [first, last] with first <= last, got {rng!r}")

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "Config":
        data = copy.deepcopy(DEFAULTS)
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"config file {path} does not exist")
            try:
                raw = tomllib.loads(path.read_text())
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            root = path.parent
            for key in _PATH_KEYS:
                if key in raw:
                    raw[key] = _resolve(raw[key], root)
            synth = raw.get("synth", {})
            if "foreign_banks" in synth:
                synth["foreign_banks"] = [_resolve(p, root) for p in synth["foreign_banks"]]
            det = raw.get("detector", {})
            if str(det.get("source", "")).startswith("external:"):
                det["source"] = "external:" + _resolve(det["source"][len("external:"):], root)
            ev = raw.get("eval", {})
            if ev.get("pred"):
                ev["pred"] = _resolve(ev["pred"], root)
            for v in ev.get("videos", []):
                for k in ("scene", "pred"):
                    if k in v:
                        v[k] = _resolve(v[k], root)
            data = _merge(data, raw)
        if overrides:
            data = _merge(data, overrides)
        if data["scene_id"] is None and data["scene"] is not None:
            data["scene_id"] = Path(data["scene"]).name
        return cls(data)

    @property
    def scene(self) -> Path:
        if self.data["scene"] is None:
            raise ConfigError("no scene directory configured")
        return Path(self.data["scene"])

    @property
    def scene_id(self) -> str:
        return self.data["scene_id"] or "scene"

    @property
    def output(self) -> Path:
        return Path(self.data["output"])

    @property
    def frame_range(self):
        r = self.data["frames"]
        return tuple(r) if r is not None else None

    @property
    def extract_range(self):
        r = self.data["objects"]["frames"]
        return tuple(r) if r is not None else None

    @property
    def window(self) -> int:
        return self.data["background"]["window"]

    @property
    def mask_source(self) -> str | None:
        """None for the built-in detector, else the external mask directory."""
        src = self.data["detector"]["source"]
        if src == "builtin":
            return None
        if src.startswith("external:") and len(src) > len("external:"):
            return src[len("external:"):]
        raise ValueError(f"detector.source must be 'builtin' or 'external:<dir>', got {src!r}")

    @property
    def background_path(self) -> Path:
        return self.output / "background.png"

    @property
    def mask_dir(self) -> Path:
        ext = self.mask_source
        return Path(ext) if ext else self.output / "masks"

    @property
    def bank_dir(self) -> Path:
        return self.output / "bank"

    @property
    def synth_dir(self) -> Path:
        return self.output / "synth"

    def require(self, *paths) -> None:
        for p in paths:
            if not Path(p).exists():
                raise ConfigError(f"required path {p} does not exist")

    def as_dict(self) -> dict:
        return copy.deepcopy(self.data)
