"""Pipeline configuration.

Config files use a TOML subset read by a small built-in parser (this
interpreter generation has no stdlib TOML reader and the sandbox index
carries none): ``[section]`` headers, ``key = value`` pairs, comments with
``#``, and scalar values (quoted strings, integers, floats, booleans) plus
single-line arrays.  Unknown sections or keys are rejected rather than
ignored, so typos fail loudly.  The resolved configuration has a canonical
JSON form whose SHA-256 digest stamps every derived artifact.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .dataset import KiBounds
from .gbdt import TrainParams
from .metrics import (
    DEFAULT_BIN_START,
    DEFAULT_BIN_STOP,
    DEFAULT_BIN_WIDTH,
    DEFAULT_THRESHOLD,
)

__all__ = ["ConfigError", "PipelineConfig", "config_from_mapping",
           "load_config", "parse_toml"]


class ConfigError(ValueError):
    pass


def _parse_value(text: str, line_no: int):
    text = text.strip()
    if not text:
        raise ConfigError(f"line {line_no}: missing value")
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"line {line_no}: unterminated array")
        body = text[1:-1].strip()
        if not body:
            return []
        parts, depth, current = [], 0, ""
        for ch in body:
            if ch == "," and depth == 0:
                parts.append(current)
                current = ""
            else:
                if ch == "[":
                    depth += 1
                elif ch == "]":
                    depth -= 1
                current += ch
        parts.append(current)
        return [_parse_value(p, line_no) for p in parts]
    if text.startswith('"'):
        if len(text) < 2 or not text.endswith('"'):
            raise ConfigError(f"line {line_no}: unterminated string")
        return text[1:-1]
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {line_no}: cannot parse value {text!r}") from None


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        if ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out)


def parse_toml(text: str) -> dict:
    """Parse the supported TOML subset into nested dicts."""
    root: dict = {}
    table = root
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {line_no}: malformed table header")
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {line_no}: empty table name")
            table = root
            for part in name.split("."):
                part = part.strip()
                if not part:
                    raise ConfigError(f"line {line_no}: malformed table name")
                table = table.setdefault(part, {})
                if not isinstance(table, dict):
                    raise ConfigError(f"line {line_no}: {name!r} clashes with a key")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().strip('"')
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        if key in table:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        table[key] = _parse_value(value, line_no)
    return root


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 2024
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    bounds: KiBounds = field(default_factory=KiBounds)
    radius: int = 2
    nbits: int = 2048
    gbdt: TrainParams = field(default_factory=TrainParams)
    bin_start: float = DEFAULT_BIN_START
    bin_stop: float = DEFAULT_BIN_STOP
    bin_width: float = DEFAULT_BIN_WIDTH
    threshold: float = DEFAULT_THRESHOLD
    property_table: str | None = None
    fasta: str | None = None
    workers: int = 1

    def canonical_json(self) -> str:
        doc = {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "ki_min_nm": self.bounds.min_nm,
            "ki_max_nm": self.bounds.max_nm,
            "radius": self.radius,
            "nbits": self.nbits,
            "gbdt": {
                "n_trees": self.gbdt.n_trees,
                "max_depth": self.gbdt.max_depth,
                "learning_rate": self.gbdt.learning_rate,
                "min_samples_leaf": self.gbdt.min_samples_leaf,
                "n_histogram_bins": self.gbdt.n_histogram_bins,
                "subsample": self.gbdt.subsample,
                "early_stopping_rounds": self.gbdt.early_stopping_rounds,
                "seed": self.gbdt.seed,
                "splitter": self.gbdt.splitter,
            },
            "bin_start": self.bin_start,
            "bin_stop": self.bin_stop,
            "bin_width": self.bin_width,
            "threshold": self.threshold,
            "property_table": self.property_table,
            "fasta": self.fasta,
            "workers": self.workers,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed, gbdt=replace(self.gbdt, seed=seed))


_SCHEMA = {
    None: {"seed"},
    "split": {"ratios"},
    "curation": {"ki_min_nm", "ki_max_nm"},
    "fingerprint": {"radius", "nbits"},
    "gbdt": {"n_trees", "max_depth", "learning_rate", "min_samples_leaf",
             "n_histogram_bins", "subsample", "early_stopping_rounds",
             "splitter"},
    "evaluation": {"bin_start", "bin_stop", "bin_width", "threshold"},
    "paths": {"property_table", "fasta"},
    "featurize": {"workers"},
}


def _expect(value, types, where: str):
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{where}: unexpected boolean")
    if not isinstance(value, tuple(types)):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(f"{where}: expected {names}, got {type(value).__name__}")
    return value


def config_from_mapping(doc: dict) -> PipelineConfig:
    for section, body in doc.items():
        if isinstance(body, dict):
            if section not in _SCHEMA or section is None:
                raise ConfigError(f"unknown config section [{section}]")
            for key in body:
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
        else:
            if section not in _SCHEMA[None]:
                raise ConfigError(f"unknown top-level key {section!r}")

    cfg = PipelineConfig()
    if "seed" in doc:
        cfg = replace(cfg, seed=_expect(doc["seed"], [int], "seed"))
    sp = doc.get("split", {})
    if "ratios" in sp:
        ratios = _expect(sp["ratios"], [list], "split.ratios")
        if len(ratios) != 3:
            raise ConfigError("split.ratios needs exactly three entries")
        cfg = replace(cfg, ratios=tuple(float(_expect(r, [int, float],
                                                      "split.ratios[]"))
                                        for r in ratios))
    cu = doc.get("curation", {})
    if cu:
        try:
            bounds = KiBounds(
                min_nm=float(_expect(cu.get("ki_min_nm", cfg.bounds.min_nm),
                                     [int, float], "curation.ki_min_nm")),
                max_nm=float(_expect(cu.get("ki_max_nm", cfg.bounds.max_nm),
                                     [int, float], "curation.ki_max_nm")))
        except ValueError as exc:
            raise ConfigError(f"curation bounds: {exc}") from exc
        cfg = replace(cfg, bounds=bounds)
    fp = doc.get("fingerprint", {})
    if "radius" in fp:
        cfg = replace(cfg, radius=_expect(fp["radius"], [int], "fingerprint.radius"))
    if "nbits" in fp:
        cfg = replace(cfg, nbits=_expect(fp["nbits"], [int], "fingerprint.nbits"))
    gb = doc.get("gbdt", {})
    if gb:
        kwargs = {}
        for key in _SCHEMA["gbdt"]:
            if key not in gb:
                continue
            value = gb[key]
            if key == "splitter":
                value = _expect(value, [str], "gbdt.splitter")
            elif key in ("learning_rate", "subsample"):
                value = float(_expect(value, [int, float], f"gbdt.{key}"))
            else:
                value = _expect(value, [int], f"gbdt.{key}")
            kwargs[key] = value
        try:
            cfg = replace(cfg, gbdt=replace(cfg.gbdt, **kwargs))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    ev = doc.get("evaluation", {})
    updates = {}
    for toml_key, attr in (("bin_start", "bin_start"), ("bin_stop", "bin_stop"),
                           ("bin_width", "bin_width"), ("threshold", "threshold")):
        if toml_key in ev:
            updates[attr] = float(_expect(ev[toml_key], [int, float],
                                          f"evaluation.{toml_key}"))
    if updates:
        cfg = replace(cfg, **updates)
    pa = doc.get("paths", {})
    if "property_table" in pa:
        cfg = replace(cfg, property_table=_expect(pa["property_table"], [str],
                                                  "paths.property_table"))
    if "fasta" in pa:
        cfg = replace(cfg, fasta=_expect(pa["fasta"], [str], "paths.fasta"))
    fe = doc.get("featurize", {})
    if "workers" in fe:
        workers = _expect(fe["workers"], [int], "featurize.workers")
        if workers < 1:
            raise ConfigError("featurize.workers must be >= 1")
        cfg = replace(cfg, workers=workers)

    if cfg.radius < 0:
        raise ConfigError("fingerprint.radius must be >= 0")
    if cfg.nbits <= 0 or (cfg.nbits & (cfg.nbits - 1)) != 0:
        raise ConfigError("fingerprint.nbits must be a power of two")
    if any(r <= 0 for r in cfg.ratios) or abs(sum(cfg.ratios) - 1.0) > 1e-9:
        raise ConfigError("split.ratios must be positive and sum to 1")
    # gbdt seed follows the pipeline seed unless training is re-seeded later
    cfg = replace(cfg, gbdt=replace(cfg.gbdt, seed=cfg.seed))
    return cfg


def load_config(path=None) -> PipelineConfig:
    """Load a config file, or the defaults when path is None."""
    if path is None:
        return config_from_mapping({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_mapping(parse_toml(text))
