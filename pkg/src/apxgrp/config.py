"""Run configuration: a YAML file with backend / input / command / output blocks.

Reference layout::

    seed: 0
    backend: {kind: lattice, d: 1}        # only for file / literals inputs
    input:
      family: {kind: beatty, n: 100, alpha: "4*pi"}
      # or   file: sets/x.txt
      # or   literals: ["(0)", "(1)", "(-1)"]
      # or   corpus: paper-examples        (corpus-run only)
      second: {family: {...}}              # cover / commens partner set
    command:
      name: tripling
      options: {variant: tripling}
    output:
      dir: out
      formats: [csv, json]
      cache: false

Unknown keys anywhere are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .families import CORPORA, FamilyError, FamilySpec

COMMANDS = {
    "tripling": {"variant"},
    "cover": {"mode", "side", "budget"},
    "commens": {"side", "budget"},
    "approx-k": {"exact", "symmetrize"},
    "tower": {"N", "all_m", "symmetrize"},
    "seed-search": {"family", "budget"},
    "closure": {"max_size"},
    "near-subgroup": set(),
    "perfectness": {"l", "m", "samples", "exhaustive", "symmetric_classes"},
    "word-depth": {"a", "n_max", "exact"},
    "freiman": {"e_budget"},
    "dimcmp": {"p", "group", "varieties", "epsilon"},
    "dichotomy": {"p_bound"},
    "gen": set(),
    "corpus-run": set(),
}

FORMATS = ("csv", "json")


class ConfigError(ValueError):
    pass


def _only(block: dict, allowed: set, where: str) -> None:
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class InputSpec:
    family: FamilySpec | None = None
    file: str | None = None
    literals: tuple[str, ...] | None = None
    corpus: str | None = None

    @classmethod
    def from_dict(cls, d: dict, where: str = "input") -> InputSpec:
        _only(d, {"family", "file", "literals", "corpus"}, where)
        given = [k for k in ("family", "file", "literals", "corpus") if d.get(k) is not None]
        if len(given) > 1:
            raise ConfigError(f"{where}: give exactly one of family/file/literals/corpus")
        fam = None
        if d.get("family") is not None:
            try:
                fam = FamilySpec.from_dict(d["family"])
            except (FamilyError, TypeError) as exc:
                raise ConfigError(f"{where}.family: {exc}") from None
        corpus = d.get("corpus")
        if corpus is not None and corpus not in CORPORA:
            raise ConfigError(f"{where}.corpus: unknown corpus {corpus!r}")
        lits = d.get("literals")
        return cls(fam, d.get("file"), None if lits is None else tuple(str(x) for x in lits), corpus)

    def to_dict(self) -> dict:
        if self.family is not None:
            return {"family": self.family.to_dict()}
        if self.file is not None:
            return {"file": self.file}
        if self.literals is not None:
            return {"literals": list(self.literals)}
        if self.corpus is not None:
            return {"corpus": self.corpus}
        return {}

    @property
    def empty(self) -> bool:
        return not self.to_dict()


@dataclass(frozen=True)
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    backend: dict | None = None
    input: InputSpec = InputSpec()
    second: InputSpec | None = None
    out_dir: str = "out"
    formats: tuple[str, ...] = FORMATS
    cache: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; known: {sorted(COMMANDS)}")
        _only(self.options, COMMANDS[self.command], f"command.options ({self.command})")
        bad = set(self.formats) - set(FORMATS)
        if bad or not self.formats:
            raise ConfigError(f"formats must be a nonempty subset of {FORMATS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if self.command == "corpus-run" and self.input.corpus is None:
            raise ConfigError("corpus-run needs input.corpus")
        if self.command not in ("corpus-run", "dimcmp") and self.input.empty:
            raise ConfigError(f"{self.command} needs an input block")
        if self.input.literals and self.backend is None:
            raise ConfigError("literal inputs need a backend block")

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        _only(d, {"seed", "backend", "input", "command", "output"}, "config")
        cmd = d.get("command")
        if not isinstance(cmd, dict) or "name" not in cmd:
            raise ConfigError("command block with a name is required")
        _only(cmd, {"name", "options"}, "command")
        inp = dict(d.get("input") or {})
        second = inp.pop("second", None)
        out = d.get("output") or {}
        _only(out, {"dir", "formats", "cache"}, "output")
        backend = d.get("backend")
        if backend is not None:
            _only(backend, {"kind", "d", "n", "p", "generators", "rules", "max_len", "exponent"}, "backend")
        formats = out.get("formats", list(FORMATS))
        if isinstance(formats, str):
            formats = [formats]
        return cls(
            command=cmd["name"],
            options=dict(cmd.get("options") or {}),
            backend=backend,
            input=InputSpec.from_dict(inp),
            second=None if second is None else InputSpec.from_dict(second, "input.second"),
            out_dir=str(out.get("dir", "out")),
            formats=tuple(formats),
            cache=bool(out.get("cache", False)),
            seed=d.get("seed", 0),
        )

    def to_dict(self) -> dict:
        """Echo used in reports; excludes the output block (it does not affect results)."""
        inp = self.input.to_dict()
        if self.second is not None:
            inp["second"] = self.second.to_dict()
        out = {"seed": self.seed, "command": {"name": self.command, "options": self.options}, "input": inp}
        if self.backend is not None:
            out["backend"] = self.backend
        return out

    def replace(self, **kw) -> RunConfig:
        import dataclasses

        return dataclasses.replace(self, **kw)


def load_config(path: str | Path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return RunConfig.from_dict(data)
