"""Scenario files (``.scn``): TOML with a fixed, strictly checked set of keys.

::

    seed = 0
    horizon = 400

    [model]
    a = [-0.5, -0.8]
    b = [0, 0, 2, 1, 0.5]

    [controller]
    variant = "full"        # full | reduced | igmvc | compensated-full | compensated-reduced
    N = 4
    Q = 1                   # scalar means q*I, or a list of N entries
    lambda = 1
    compensation = "none"   # exact | hold | none

    [reference]
    kind = "ramp"           # zero | step | ramp | power | square | noise | custom

    [disturbance]
    kind = "ramp"

    [outputs]
    csv = "trace.csv"
    report = "report.txt"
    plot = "trace.svg"
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .carima import CarimaModel
from .controller import ControllerSpec
from .errors import ConfigError
from .simkit import SignalGen

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TOP_KEYS = {"name", "seed", "horizon"}
SECTIONS = {
    "model": {"a", "b"},
    "controller": {"variant", "N", "Q", "lambda", "compensation"},
    "reference": {"kind", "scale", "n", "period", "seed", "dist", "samples"},
    "disturbance": {"kind", "scale", "n", "period", "seed", "dist", "samples"},
    "outputs": {"csv", "report", "plot"},
}
REQUIRED = ("model", "controller", "reference", "disturbance")


@dataclass(frozen=True)
class Scenario:
    name: str
    model: CarimaModel
    controller: ControllerSpec
    reference: SignalGen
    disturbance: SignalGen
    horizon: int = 400
    seed: int = 0
    outputs: dict = field(default_factory=dict)
    source: Optional[Path] = None

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed,
                       reference=_reseed(self.reference, seed),
                       disturbance=_reseed(self.disturbance, seed))

    def with_dist(self, dist: str) -> "Scenario":
        fix = lambda g: replace(g, dist=dist) if g.kind == "noise" else g  # noqa: E731
        return replace(self, reference=fix(self.reference), disturbance=fix(self.disturbance))


def _reseed(g: SignalGen, seed: int) -> SignalGen:
    return replace(g, seed=seed) if g.kind == "noise" else g


def _line_of(text: str, key: str, section: Optional[str]) -> int:
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"^\"?{re.escape(key)}\"?\s*=", s):
            return lineno
        if section is not None and s == f"[{key}]":
            return lineno
    return 0


def _fail(src: str, text: str, msg: str, key: str, section: Optional[str]):
    line = _line_of(text, key, section) if key else 0
    where = f"{src}:{line}" if line else src
    raise ConfigError(f"{where}: {msg}")


def _signal(sec: dict, default_seed: int) -> SignalGen:
    kw = dict(sec)
    kw.setdefault("seed", default_seed)
    if "samples" in kw:
        kw["samples"] = tuple(kw["samples"])
    return SignalGen(**kw)


def parse_scenario(text: str, src: str = "<scenario>", name: Optional[str] = None) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{src}: {exc}") from None
    for key, val in data.items():
        if isinstance(val, dict):
            if key not in SECTIONS:
                _fail(src, text, f"unknown section [{key}]", key, None)
            for sub in val:
                if sub not in SECTIONS[key]:
                    _fail(src, text, f"unknown key {sub!r} in [{key}]", sub, key)
        elif key not in TOP_KEYS:
            _fail(src, text, f"unknown key {key!r}", key, None)
    for sec in REQUIRED:
        if sec not in data:
            raise ConfigError(f"{src}: missing section [{sec}]")
    seed = int(data.get("seed", 0))
    try:
        model = CarimaModel(**data["model"])
        c = dict(data["controller"])
        if "N" not in c:
            raise ValueError("controller needs N")
        spec = ControllerSpec(N=c["N"], Q=c.get("Q", 1.0), lam=c.get("lambda", 0.0),
                              variant=c.get("variant", "full"),
                              compensation=c.get("compensation", "none"))
        ref = _signal(data["reference"], seed)
        dist = _signal(data["disturbance"], seed)
        horizon = int(data.get("horizon", 400))
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{src}: {exc}") from None
    return Scenario(name=data.get("name", name or Path(src).stem), model=model,
                    controller=spec, reference=ref, disturbance=dist, horizon=horizon,
                    seed=seed, outputs=dict(data.get("outputs", {})))


def bundled_names() -> list[str]:
    root = resources.files("gpclab") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".scn"))


def resolve(path) -> Path:
    """A file path, or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".scn" else p.name + ".scn"
    bundled = resources.files("gpclab") / "scenarios" / name
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"{path}: no such scenario file (bundled: {', '.join(bundled_names())})")


def load_scenario(path) -> Scenario:
    p = resolve(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    sc = parse_scenario(text, src=str(p), name=p.stem)
    return replace(sc, source=p)
