"""Scenario files: a flat ``key = value`` text format.

Grammar (one entry per line)::

    # comment, blank lines ignored
    n = 3                       # optional; checked against x0
    x0 = 0 0.6 1                # whitespace separated reals
    r = 0.5 1 0.25              # or one real, broadcast to every agent
    z = 0 0.5 1                 # optional equilibrium for check-thm1
    tie_tol = 0
    convergence_tol = 1e-12
    max_steps = 100000
    stability_window = 100
    mode = free                 # free | frozen

Inside arrays ``v*k`` repeats ``v`` k times, so ``r = 0.01*5 1.9254 2*200``
is a 206-entry vector.  Keys may appear once each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import OpinionState
from .simulator import CONVERGENCE_TOL, STABILITY_WINDOW, Mode

ARRAY_KEYS = ("x0", "r", "z")
OPTION_KEYS = ("tie_tol", "convergence_tol", "max_steps", "stability_window", "mode")
KNOWN_KEYS = ("n",) + ARRAY_KEYS + OPTION_KEYS


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioOptions:
    tie_tol: float = 0.0
    convergence_tol: float = CONVERGENCE_TOL
    max_steps: int = 100_000
    stability_window: int = STABILITY_WINDOW
    mode: Mode = Mode.FREE


@dataclass(frozen=True, eq=False)
class ScenarioFile:
    x0: np.ndarray
    r: np.ndarray
    options: ScenarioOptions = field(default_factory=ScenarioOptions)
    z: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(self.x0.size)

    def state(self) -> OpinionState:
        return OpinionState(self.x0, self.r, self.options.tie_tol)

    def equilibrium(self) -> OpinionState | None:
        if self.z is None:
            return None
        return OpinionState(self.z, self.r, self.options.tie_tol)


def _parse_real(tok: str, where: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ScenarioError(f"{where}: not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise ScenarioError(f"{where}: value must be finite, got {tok!r}")
    return v


def _parse_array(text: str, where: str) -> list[float]:
    out: list[float] = []
    for tok in text.split():
        if "*" in tok:
            val, _, cnt = tok.partition("*")
            try:
                k = int(cnt)
            except ValueError:
                raise ScenarioError(f"{where}: bad repeat count in {tok!r}") from None
            if k < 1:
                raise ScenarioError(f"{where}: repeat count must be positive in {tok!r}")
            out.extend([_parse_real(val, where)] * k)
        else:
            out.append(_parse_real(tok, where))
    if not out:
        raise ScenarioError(f"{where}: empty array")
    return out


def _parse_int(text: str, where: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioError(f"{where}: expected an integer, got {text!r}") from None


def parse_scenario(text: str, source: str = "<string>") -> ScenarioFile:
    raw: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value'")
        key, _, val = body.partition("=")
        key, val = key.strip(), val.strip()
        if key not in KNOWN_KEYS:
            raise ScenarioError(f"{source}:{lineno}: unknown field {key!r}")
        if key in raw:
            raise ScenarioError(f"{source}:{lineno}: field {key!r} given twice")
        if not val:
            raise ScenarioError(f"{source}:{lineno}: field {key!r} has no value")
        raw[key] = (lineno, val)

    def where(key):
        return f"{source}:{raw[key][0]}: field {key!r}"

    for key in ("x0", "r"):
        if key not in raw:
            raise ScenarioError(f"{source}: missing required field {key!r}")
    x0 = _parse_array(raw["x0"][1], where("x0"))
    r = _parse_array(raw["r"][1], where("r"))
    n = len(x0)
    if "n" in raw and _parse_int(raw["n"][1], where("n")) != n:
        raise ScenarioError(f"{where('n')}: n does not match the length of x0 ({n})")
    if len(r) == 1:
        r = r * n
    elif len(r) != n:
        raise ScenarioError(f"{where('r')}: length {len(r)} does not match x0 length {n}")
    if any(v <= 0 for v in r):
        raise ScenarioError(f"{where('r')}: bounds must be strictly positive")
    z = None
    if "z" in raw:
        z = _parse_array(raw["z"][1], where("z"))
        if len(z) != n:
            raise ScenarioError(f"{where('z')}: length {len(z)} does not match x0 length {n}")

    opts = {}
    if "tie_tol" in raw:
        opts["tie_tol"] = _parse_real(raw["tie_tol"][1], where("tie_tol"))
        if opts["tie_tol"] < 0:
            raise ScenarioError(f"{where('tie_tol')}: tie_tol must be >= 0")
    if "convergence_tol" in raw:
        opts["convergence_tol"] = _parse_real(raw["convergence_tol"][1], where("convergence_tol"))
        if opts["convergence_tol"] <= 0:
            raise ScenarioError(f"{where('convergence_tol')}: convergence_tol must be > 0")
    for key in ("max_steps", "stability_window"):
        if key in raw:
            opts[key] = _parse_int(raw[key][1], where(key))
            if opts[key] < 1:
                raise ScenarioError(f"{where(key)}: {key} must be >= 1")
    if "mode" in raw:
        try:
            opts["mode"] = Mode(raw["mode"][1])
        except ValueError:
            raise ScenarioError(f"{where('mode')}: mode must be 'free' or 'frozen'") from None
    return ScenarioFile(np.array(x0), np.array(r), ScenarioOptions(**opts),
                        None if z is None else np.array(z))


def load_scenario(source: str | Path) -> ScenarioFile:
    """Load from a path, or parse ``source`` directly if it contains a newline or '='."""
    if isinstance(source, Path) or ("\n" not in source and "=" not in source):
        path = Path(source)
        return parse_scenario(path.read_text(encoding="utf-8"), str(path))
    return parse_scenario(source)


def _fmt_array(a: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in a)


def dump_scenario(sc: ScenarioFile) -> str:
    o = sc.options
    lines = [
        f"n = {sc.n}",
        f"x0 = {_fmt_array(sc.x0)}",
        f"r = {_fmt_array(sc.r)}",
    ]
    if sc.z is not None:
        lines.append(f"z = {_fmt_array(sc.z)}")
    lines += [
        f"tie_tol = {o.tie_tol!r}",
        f"convergence_tol = {o.convergence_tol!r}",
        f"max_steps = {o.max_steps}",
        f"stability_window = {o.stability_window}",
        f"mode = {o.mode.value}",
    ]
    return "\n".join(lines) + "\n"
