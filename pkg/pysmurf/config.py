"""
Run configuration: dataset presets, config files and overrides.

Precedence, lowest first: preset, config file, ``--set`` overrides.

Config files are flat text::

    # KITTI with a lighter smoothness term
    preset = kitti
    weights.smooth = 3.0
    solver.steps = 200, 200, 300
"""

import dataclasses
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Union, get_args, get_origin, get_type_hints

from pysmurf.errors import RejectedInputError
from pysmurf.objectives.config import LossWeights, PhotometricConfig
from pysmurf.occlusion.config import OcclusionConfig
from pysmurf.selfsup.augment import AugmentConfig
from pysmurf.selfsup.inversion import InversionTrainingConfig
from pysmurf.solver.config import SolverConfig

logger = logging.getLogger("pysmurf.config")

PRESETS = ("default", "sintel", "kitti", "chairs")

# section name -> attribute path from RunConfig
SECTIONS: Dict[str, Tuple[str, ...]] = {
    "run": (),
    "solver": ("solver",),
    "adam": ("solver", "hyper"),
    "weights": ("solver", "weights"),
    "photometric": ("solver", "photometric"),
    "occlusion": ("solver", "occlusion"),
    "fb": ("solver", "occlusion", "fb"),
    "ramp": ("solver", "ramp"),
    "augment": ("augment",),
    "inversion": ("inversion",),
    "eval": ("evaluation",),
}

ALIASES = {
    "solver.learning_rate": "adam.learning_rate",
}


@dataclass(frozen=True)
class EvalConfig:
    """
    Evaluation options.

    With ``resize`` the pair is solved at ``height`` x ``width`` and the flow
    resized back (components rescaled) before metrics.
    """
    resize: bool = False
    height: int = 480
    width: int = 928
    mode: Literal["conjunction", "disjunction"] = "conjunction"

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise RejectedInputError(f"eval size must be positive, got {self.height}x{self.width}")
        if self.mode not in ("conjunction", "disjunction"):
            raise RejectedInputError(f"eval mode must be 'conjunction' or 'disjunction', got '{self.mode}'")

    @property
    def working_size(self) -> Optional[Tuple[int, int]]:
        return (self.height, self.width) if self.resize else None


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs."""
    preset: str = "default"
    solver: SolverConfig = field(default_factory=SolverConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    inversion: InversionTrainingConfig = field(default_factory=InversionTrainingConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    workers: int = 1
    audit_log: Optional[str] = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise RejectedInputError(f"workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "solver": self.solver.to_dict(),
            "augment": dataclasses.asdict(self.augment),
            "inversion": self.inversion.to_dict(),
            "evaluation": dataclasses.asdict(self.evaluation),
            "workers": self.workers,
        }


def _get_preset_config(preset: str) -> RunConfig:
    """Get preset configuration for a dataset."""
    if preset == "kitti":
        return RunConfig(
            preset=preset,
            solver=SolverConfig(
                weights=LossWeights(smooth=4.0, smoothness_order=2),
                occlusion=OcclusionConfig(method="fb_consistency"),
            ),
            evaluation=EvalConfig(height=488, width=1144),
        )
    elif preset == "chairs":
        return RunConfig(
            preset=preset,
            solver=SolverConfig(
                weights=LossWeights(smooth=4.0, smoothness_order=1),
                photometric=PhotometricConfig(full_image_warping=False),
                occlusion=OcclusionConfig(method="range_map"),
            ),
            evaluation=EvalConfig(height=384, width=512),
        )
    elif preset in ("sintel", "default"):
        return RunConfig(preset=preset)
    raise RejectedInputError(f"unknown preset '{preset}' (choose from {', '.join(PRESETS)})")


def preset_config(preset: str = "default") -> RunConfig:
    return _get_preset_config(preset)


# ========================================
# PARSING
# ========================================

def _coerce(raw: str, hint: Any, key: str) -> Any:
    text = raw.strip()
    origin = get_origin(hint)
    args = get_args(hint)
    if origin is Union:
        options = [a for a in args if a is not type(None)]
        if text.lower() in ("none", "null", ""):
            if len(options) < len(args):
                return None
            raise RejectedInputError(f"{key} may not be empty")
        return _coerce(text, options[0], key)
    if origin is Literal:
        if text not in args:
            raise RejectedInputError(f"{key} must be one of {list(args)}, got '{text}'")
        return text
    if origin is tuple:
        parts = [p for p in (s.strip() for s in text.strip("()[]").split(",")) if p]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(p, args[0], key) for p in parts)
        if len(parts) != len(args):
            raise RejectedInputError(f"{key} needs {len(args)} comma-separated values, got '{text}'")
        return tuple(_coerce(p, a, key) for p, a in zip(parts, args))
    if hint is bool:
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise RejectedInputError(f"{key} must be a boolean, got '{text}'")
    if hint in (int, float):
        try:
            return hint(text)
        except ValueError:
            raise RejectedInputError(f"{key} must be {hint.__name__}, got '{text}'") from None
    if hint is str:
        return text
    raise RejectedInputError(f"{key} names a section, not a value")


def _replace_path(obj: Any, path: Tuple[str, ...], name: str, value: Any) -> Any:
    if not path:
        return replace(obj, **{name: value})
    child = getattr(obj, path[0])
    return replace(obj, **{path[0]: _replace_path(child, path[1:], name, value)})


def apply_override(config: RunConfig, key: str, raw: str) -> RunConfig:
    """
    Set ``section.field`` from its text form.

    Raises:
        RejectedInputError: unknown key or unparseable / out-of-range value
    """
    key = ALIASES.get(key.strip(), key.strip())
    section, _, name = key.rpartition(".")
    if section not in SECTIONS:
        raise RejectedInputError(f"unknown config key '{key}'")
    path = SECTIONS[section]
    target: Any = config
    for attr in path:
        target = getattr(target, attr)
    known = {f.name for f in fields(target)}
    if name not in known or (not path and name == "preset"):
        raise RejectedInputError(f"unknown config key '{key}'")
    hint = get_type_hints(type(target))[name]
    value = _coerce(raw, hint, key)
    try:
        if key == "solver.steps":
            return replace(config, solver=config.solver.with_steps(value))
        return _replace_path(config, path, name, value)
    except (TypeError, ValueError) as e:
        if isinstance(e, RejectedInputError):
            raise
        raise RejectedInputError(f"bad value for {key}: {e}") from None


def parse_config_text(text: str) -> Tuple[Optional[str], List[Tuple[str, str]]]:
    """
    Split config text into an optional preset and ordered (key, value) pairs.
    """
    preset = None
    pairs: List[Tuple[str, str]] = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise RejectedInputError(f"config line {number}: expected 'key = value', got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "preset":
            preset = value
        else:
            pairs.append((key, value))
    return preset, pairs


def parse_override(text: str) -> Tuple[str, str]:
    """``section.field=value`` as given to ``--set``."""
    if "=" not in text:
        raise RejectedInputError(f"override must look like section.field=value, got '{text}'")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    preset: Optional[str] = None,
) -> RunConfig:
    """
    Build a RunConfig from a preset, an optional file and overrides.

    An explicit ``preset`` argument wins over a ``preset =`` line in the file.
    """
    file_preset, pairs = (None, [])
    if path is not None:
        file_preset, pairs = parse_config_text(Path(path).read_text())
    config = preset_config(preset or file_preset or "default")
    for key, value in pairs:
        config = apply_override(config, key, value)
    for override in overrides:
        config = apply_override(config, *parse_override(override))
    logger.debug("config preset=%s with %d file values", config.preset, len(pairs))
    return config
