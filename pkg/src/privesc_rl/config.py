"""Configuration objects shared by the simulator, trainer, bench and CLI.

All configs are plain dataclasses that round-trip through ``to_dict`` /
``from_dict`` so that every artifact written to disk (checkpoint, report,
trace) can embed the exact configuration that produced it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

# Injectable weakness classes.  "1.1" and "1.2" are the two DLL-hijack
# variants (missing import vs. writable import); "2".."12" follow the
# numbering used throughout reports and the CLI.
VULN_IDS = (
    "1.1", "1.2", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12",
)

# Rows of a standard 12-row results table.  Row "1" is the missing-DLL
# variant; the writable-DLL variant "1.2" is reported separately.
TABLE_ROW_IDS = ("1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12")

# Decoy kinds the generator can inject (at most one of each per host):
#   service   - vulnerable-looking but non-elevated service
#   quoted    - writable parent folder but properly quoted service path
#   creds     - Winlogon credentials for a standard (non-admin) user
#   pathdir   - writable folder on the Windows path with no missing DLL
#   msi_bit   - only one of the two AlwaysInstallElevated bits set
#   task      - writable executable of a non-elevated scheduled task
DECOY_KINDS = ("service", "quoted", "creds", "pathdir", "msi_bit", "task")


@dataclass
class VulnMode:
    """Which weaknesses to inject into a generated host.

    kind is one of:
      * "single-random": one weakness drawn uniformly from VULN_IDS
      * "fixed":         exactly the single id in ``ids``
      * "multi":         every id in ``ids``
    """

    kind: str = "single-random"
    ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("single-random", "fixed", "multi"):
            raise ValueError(f"unknown vuln mode kind: {self.kind!r}")
        self.ids = tuple(str(i) for i in self.ids)
        for i in self.ids:
            if i not in VULN_IDS:
                raise ValueError(f"unknown vulnerability id: {i!r}")
        if self.kind == "fixed" and len(self.ids) != 1:
            raise ValueError("fixed vuln mode needs exactly one id")
        if self.kind == "multi" and not self.ids:
            raise ValueError("multi vuln mode needs at least one id")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ids": list(self.ids)}

    @classmethod
    def from_dict(cls, d: dict) -> "VulnMode":
        return cls(kind=d.get("kind", "single-random"), ids=tuple(d.get("ids", ())))


def _default_decoy_rates() -> dict[str, float]:
    return {k: 0.25 for k in DECOY_KINDS}


@dataclass
class EnvConfig:
    """Host-generation and episode parameters."""

    n_services: tuple[int, int] = (1, 20)
    n_autoruns: tuple[int, int] = (1, 10)
    n_tasks: tuple[int, int] = (1, 10)
    dlls_per_service: tuple[int, int] = (1, 4)
    n_max_steps: int = 1000
    decoy_rates: dict[str, float] = field(default_factory=_default_decoy_rates)
    vuln_mode: VulnMode = field(default_factory=VulnMode)

    def __post_init__(self):
        self.n_services = _check_range("n_services", self.n_services, 1, 200)
        self.n_autoruns = _check_range("n_autoruns", self.n_autoruns, 1, 50)
        self.n_tasks = _check_range("n_tasks", self.n_tasks, 1, 50)
        self.dlls_per_service = _check_range("dlls_per_service", self.dlls_per_service, 1, 4)
        if self.n_max_steps < 1:
            raise ValueError("n_max_steps must be positive")
        for k, v in self.decoy_rates.items():
            if k not in DECOY_KINDS:
                raise ValueError(f"unknown decoy kind: {k!r}")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"decoy rate for {k!r} out of [0, 1]: {v}")
        if isinstance(self.vuln_mode, dict):
            self.vuln_mode = VulnMode.from_dict(self.vuln_mode)

    def to_dict(self) -> dict:
        return {
            "n_services": list(self.n_services),
            "n_autoruns": list(self.n_autoruns),
            "n_tasks": list(self.n_tasks),
            "dlls_per_service": list(self.dlls_per_service),
            "n_max_steps": self.n_max_steps,
            "decoy_rates": dict(self.decoy_rates),
            "vuln_mode": self.vuln_mode.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        kw: dict[str, Any] = {}
        for f in ("n_services", "n_autoruns", "n_tasks", "dlls_per_service"):
            if f in d:
                kw[f] = tuple(d[f])
        if "n_max_steps" in d:
            kw["n_max_steps"] = int(d["n_max_steps"])
        if "decoy_rates" in d:
            kw["decoy_rates"] = {k: float(v) for k, v in d["decoy_rates"].items()}
        if "vuln_mode" in d:
            kw["vuln_mode"] = VulnMode.from_dict(d["vuln_mode"])
        return cls(**kw)


def _check_range(name: str, rng, lo: int, hi: int) -> tuple[int, int]:
    a, b = int(rng[0]), int(rng[1])
    if not (lo <= a <= b <= hi):
        raise ValueError(f"{name} range [{a}, {b}] invalid (allowed [{lo}, {hi}], lo <= hi)")
    return (a, b)


@dataclass
class NetConfig:
    """Shape of the set-aggregating policy/value network.

    Every entity encoder is a two-layer perceptron in -> hidden (relu)
    -> embed (linear).  Per-service embeddings are combined with the
    max-pooled autorun, task and per-service DLL embeddings plus the
    27-entry general state, then fed to a shared policy head and a
    shared value head.
    """

    encoder_hidden: int = 48
    embed_dim: int = 24
    head_hidden: int = 72
    service_in: int = 11
    dll_in: int = 3
    autorun_in: int = 2
    task_in: int = 3
    general_in: int = 27
    n_actions: int = 38

    @property
    def trunk_in(self) -> int:
        # service embed + DLL agg + autorun agg + task agg + general state
        return self.embed_dim * 4 + self.general_in

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        allowed = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: int(v) for k, v in d.items() if k in allowed})


@dataclass
class TrainConfig:
    """Episodic advantage actor-critic settings."""

    episodes: int = 50_000
    gamma: float = 0.995
    lr: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    value_loss_weight: float = 1.0
    entropy_weight: float = 0.0
    seed: int = 0
    metrics_window: int = 100
    checkpoint_every: int = 5000
    log_every: int = 500

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        allowed = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in allowed})


@dataclass
class RunConfig:
    """Fully merged configuration of a CLI run, embedded in artifacts."""

    env: EnvConfig = field(default_factory=EnvConfig)
    net: NetConfig = field(default_factory=NetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "env": self.env.to_dict(),
            "net": self.net.to_dict(),
            "train": self.train.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            env=EnvConfig.from_dict(d.get("env", {})),
            net=NetConfig.from_dict(d.get("net", {})),
            train=TrainConfig.from_dict(d.get("train", {})),
            seed=int(d.get("seed", 0)),
        )
