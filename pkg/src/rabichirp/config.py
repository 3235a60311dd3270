"""Run configuration: YAML schema, file tables, and object builders.

A run is described by one YAML file.  Example with every section:

    model:
      omega_ab: {kind: constant, value: 20.0}
      sign_ab: -1
      mu_aa:   {kind: constant, value: 0.003}
      mu_bb:   {kind: constant, value: 0.0015}
      mu_ab:   {kind: constant, value: 0.5}
    pulse:
      f0: 0.248
      envelope: {kind: gaussian, center: 60.0, width: 27.0, height: 1.0}
      chirp: design            # or a function spec like the envelope
      t_start: 0.0
      t_end: 120.0
    integrate:
      tol: 1.0e-9
      samples: 1201
      frames: [lab, tau-full, tau-rwa, rabi]
      tau_max: null            # null: full warp range (simulate) / pi (verify)
      phase_convention: product
    grids:
      tau_n: null              # null: carrier-resolution rule
      design_n: null
    design:
      tol_fp: 1.0e-8
      max_iter: 100
      relax: 1.0
    thresholds:
      rwa_metric: 10.0
      transfer: 0.99
    output:
      dir: out

Function specs take one of four kinds:

    {kind: constant, value: v}
    {kind: gaussian, center: c, width: w, height: h}
    {kind: sin2, start: s, duration: d, height: h}
    {kind: table, path: samples.txt, order: 3}     # or inline times/values

Table files are plain text, two whitespace-separated columns (time, value),
with '#' comments and blank lines ignored.  Relative paths resolve against
the config file's directory.
"""

from dataclasses import dataclass
import math
import os
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .model import PulseSpec, SystemModel
from .timefun import TimeFunction

OUTPUT_ROOT_ENV = "RABICHIRP_OUTDIR"

_DEFAULTS = {
    "integrate": {
        "tol": 1e-9,
        "samples": 1201,
        "frames": ["lab"],
        "tau_max": None,
        "phase_convention": "product",
    },
    "grids": {"tau_n": None, "design_n": None},
    "design": {"tol_fp": 1e-8, "max_iter": 100, "relax": 1.0},
    "thresholds": {"rwa_metric": 10.0, "transfer": 0.99},
    "output": {"dir": "out"},
}

_FRAME_CHOICES = ("lab", "tau-full", "tau-rwa", "rabi")


def read_table(path):
    """Two-column sample table: times and values."""
    times, values = [], []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigError(f"{path}:{ln}: expected two columns")
            times.append(float(parts[0]))
            values.append(float(parts[1]))
    if len(times) < 2:
        raise ConfigError(f"{path}: table needs at least two samples")
    return np.asarray(times), np.asarray(values)


def write_table(path, times, values, comment=None):
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for t, v in zip(times, values):
            fh.write(f"{t:.17g} {v:.17g}\n")


def timefunction_from_spec(spec, key, base_dir="."):
    """Build a TimeFunction from its config mapping."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("expected a mapping with a 'kind' entry", key=key)
    kind = spec["kind"]
    try:
        if kind == "constant":
            return TimeFunction.constant(_num(spec, "value", key))
        if kind == "gaussian":
            return TimeFunction.gaussian(
                _num(spec, "center", key), _num(spec, "width", key),
                _num(spec, "height", key))
        if kind == "sin2":
            return TimeFunction.sin_squared(
                _num(spec, "start", key), _num(spec, "duration", key),
                _num(spec, "height", key))
        if kind == "table":
            order = int(spec.get("order", 3))
            if "path" in spec:
                times, values = read_table(Path(base_dir) / spec["path"])
            elif "times" in spec and "values" in spec:
                times = np.asarray(spec["times"], dtype=float)
                values = np.asarray(spec["values"], dtype=float)
            else:
                raise ConfigError("table needs 'path' or 'times'/'values'", key=key)
            return TimeFunction.tabulated(times, values, order)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc), key=key) from exc
    raise ConfigError(f"unknown function kind {kind!r}", key=key)


def timefunction_to_spec(tf):
    if tf.kind == "table":
        return {
            "kind": "table",
            "times": [float(v) for v in tf.params["times"]],
            "values": [float(v) for v in tf.params["values"]],
            "order": int(tf.params["order"]),
        }
    return {"kind": tf.kind, **{k: float(v) for k, v in tf.params.items()}}


def _num(mapping, name, key, allow_none=False):
    if name not in mapping or mapping[name] is None:
        if allow_none:
            return None
        raise ConfigError(f"missing numeric entry '{name}'", key=key)
    v = mapping[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{name}' must be a number, got {v!r}", key=key)
    if not math.isfinite(float(v)):
        raise ConfigError(f"'{name}' must be finite", key=key)
    return float(v)


@dataclass
class RunConfig:
    """Validated, normalized run description."""

    model: dict
    pulse: dict
    integrate: dict
    grids: dict
    design: dict
    thresholds: dict
    output: dict
    base_dir: str = "."

    @classmethod
    def from_dict(cls, raw, base_dir="."):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        unknown = set(raw) - {"model", "pulse", *_DEFAULTS}
        if unknown:
            raise ConfigError(f"unknown section(s): {sorted(unknown)}")
        for section in ("model", "pulse"):
            if section not in raw or not isinstance(raw[section], dict):
                raise ConfigError("missing section", key=section)
        sections = {}
        for name, defaults in _DEFAULTS.items():
            block = dict(defaults)
            user = raw.get(name) or {}
            if not isinstance(user, dict):
                raise ConfigError("must be a mapping", key=name)
            bad = set(user) - set(defaults)
            if bad:
                raise ConfigError(f"unknown key(s) {sorted(bad)}", key=name)
            block.update(user)
            sections[name] = block
        cfg = cls(
            model=dict(raw["model"]),
            pulse=dict(raw["pulse"]),
            integrate=sections["integrate"],
            grids=sections["grids"],
            design=sections["design"],
            thresholds=sections["thresholds"],
            output=sections["output"],
            base_dir=str(base_dir),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    def validate(self):
        for name in ("omega_ab", "mu_aa", "mu_bb", "mu_ab"):
            if name not in self.model:
                raise ConfigError("missing entry", key=f"model.{name}")
        sign = self.model.get("sign_ab")
        if sign not in (-1, 1):
            raise ConfigError("sign_ab must be -1 or +1", key="model.sign_ab")
        for name in ("f0", "t_start", "t_end"):
            _num(self.pulse, name, f"pulse.{name}")
        if self.pulse["f0"] <= 0 and self.pulse["f0"] != 0:
            raise ConfigError("must satisfy F0 > 0", key="pulse.f0")
        if "envelope" not in self.pulse:
            raise ConfigError("missing entry", key="pulse.envelope")
        chirp = self.pulse.get("chirp")
        if chirp is None:
            raise ConfigError(
                "missing entry (use the string 'design' to request one)",
                key="pulse.chirp")
        if not (chirp == "design" or isinstance(chirp, dict)):
            raise ConfigError("must be 'design' or a function spec",
                              key="pulse.chirp")
        tol = _num(self.integrate, "tol", "integrate.tol")
        if tol <= 0:
            raise ConfigError("must be positive", key="integrate.tol")
        if int(self.integrate["samples"]) < 2:
            raise ConfigError("needs >= 2", key="integrate.samples")
        frames = self.integrate["frames"]
        if not isinstance(frames, list) or not frames:
            raise ConfigError("must be a non-empty list", key="integrate.frames")
        for fr in frames:
            if fr not in _FRAME_CHOICES:
                raise ConfigError(
                    f"unknown frame {fr!r}, choose from {_FRAME_CHOICES}",
                    key="integrate.frames")
        if self.integrate["phase_convention"] not in ("product", "integral"):
            raise ConfigError("must be 'product' or 'integral'",
                              key="integrate.phase_convention")
        if self.integrate["tau_max"] is not None:
            if _num(self.integrate, "tau_max", "integrate.tau_max") <= 0:
                raise ConfigError("must be positive", key="integrate.tau_max")
        for gk in ("tau_n", "design_n"):
            v = self.grids[gk]
            if v is not None and int(v) < 9:
                raise ConfigError("needs >= 9 points", key=f"grids.{gk}")
        if _num(self.design, "tol_fp", "design.tol_fp") <= 0:
            raise ConfigError("must be positive", key="design.tol_fp")
        if int(self.design["max_iter"]) < 1:
            raise ConfigError("needs >= 1", key="design.max_iter")
        relax = _num(self.design, "relax", "design.relax")
        if not (0 < relax <= 1):
            raise ConfigError("must be in (0, 1]", key="design.relax")
        for tk in ("rwa_metric", "transfer"):
            if _num(self.thresholds, tk, f"thresholds.{tk}") <= 0:
                raise ConfigError("must be positive", key=f"thresholds.{tk}")
        # building the objects exercises every functional invariant
        self.build_model()
        self.build_pulse()

    # -- builders --------------------------------------------------------

    def build_model(self):
        def tf(name):
            return timefunction_from_spec(
                self.model[name], f"model.{name}", self.base_dir)
        try:
            return SystemModel(
                omega_ab=tf("omega_ab"), sign_ab=int(self.model["sign_ab"]),
                mu_aa=tf("mu_aa"), mu_bb=tf("mu_bb"), mu_ab=tf("mu_ab"))
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(str(exc), key="model") from exc

    def build_pulse(self, chirp_override=None):
        """PulseSpec from the config; chirp 'design' maps to None."""
        spec = self.pulse.get("chirp")
        if chirp_override is not None:
            chirp = chirp_override
        elif spec == "design":
            chirp = None
        else:
            chirp = timefunction_from_spec(spec, "pulse.chirp", self.base_dir)
        try:
            return PulseSpec(
                f0=float(self.pulse["f0"]),
                envelope=timefunction_from_spec(
                    self.pulse["envelope"], "pulse.envelope", self.base_dir),
                chirp=chirp,
                t_start=float(self.pulse["t_start"]),
                t_end=float(self.pulse["t_end"]),
            )
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(str(exc), key="pulse") from exc

    def wants_design(self):
        return self.pulse.get("chirp") == "design"

    def output_dir(self):
        """Output directory; relative paths live under the env root."""
        d = Path(self.output["dir"])
        if not d.is_absolute():
            root = os.environ.get(OUTPUT_ROOT_ENV)
            if root:
                d = Path(root) / d
        return d

    # -- round trip --------------------------------------------------------

    def to_dict(self):
        return {
            "model": self.model,
            "pulse": self.pulse,
            "integrate": self.integrate,
            "grids": self.grids,
            "design": self.design,
            "thresholds": self.thresholds,
            "output": self.output,
        }

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def save(self, path):
        Path(path).write_text(self.to_yaml())

    def override(self, dotted_key, value):
        """Apply one 'section.key=value' style override (parsed as YAML)."""
        parts = dotted_key.split(".")
        target = self.to_dict()
        node = target
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"unknown override path {dotted_key!r}")
            node = node[p]
        if parts[-1] not in node and parts[0] in _DEFAULTS:
            raise ConfigError(f"unknown override path {dotted_key!r}")
        node[parts[-1]] = yaml.safe_load(value) if isinstance(value, str) else value
        return RunConfig.from_dict(target, base_dir=self.base_dir)
