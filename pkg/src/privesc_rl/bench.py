"""Evaluation bench: baseline policies and seeded benchmark reports.

Five policies share one episode runner:

* ``oracle`` — reads the injected weakness off the host and replays the
  known-minimal exploit sequence (full-knowledge lower bound),
* ``expert`` — a deterministic hand-written rule cascade working only from
  observed facts,
* ``det-rl`` / ``stoch-rl`` — a trained network queried greedily or by
  sampling,
* ``random`` — uniform over the 38 actions.

``evaluate`` runs per-weakness single-vulnerability benchmarks;
``multi_vuln_eval`` covers hosts with several simultaneous weaknesses and
the many-services stress setting.  Reports serialize to JSON, to an
aligned-text table (one row per weakness), and to raw per-episode JSONL.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .actions import Action
from .config import EnvConfig, NetConfig, VULN_IDS, VulnMode
from .net import forward_net, greedy_action, sample_action
from .nn import ParamStore
from .state import encode, init_state, update as update_state
from .winsim import EscalationEnv, generate_host
from .winsim.knowledge import Knowledge

# Known-minimal exploit sequences, one per weakness variant.  Age-old
# invariant of the bench: replaying sequence v on a fresh single-weakness
# host of kind v always ends with reward 1.
ORACLE_SEQUENCES: dict[str, tuple[int, ...]] = {
    "1.1": (37, 31, 29, 30, 38, 28, 3, 7, 16, 9),
    "1.2": (37, 31, 29, 30, 27, 3, 7, 15, 9),
    "2": (37, 31, 25, 18, 9),
    "3": (37, 31, 28, 2, 6, 14, 9),
    "4": (37, 31, 26, 20, 9),
    "5": (37, 31, 27, 2, 6, 13, 9),
    "6": (37, 31, 28, 2, 6, 13, 9),
    "7": (37, 32, 27, 1, 5, 11),
    "8": (37, 34, 4, 8, 21),
    "9": (35, 36, 24),
    "10": (22, 23, 36, 24),
    "11": (37, 33, 27, 1, 5, 12),
    "12": (37, 32, 28, 1, 5, 11),
}

#: Report row label -> weakness variant evaluated under that label.  The
#: missing-DLL variant represents row "1"; the in-place-DLL variant "1.2"
#: is reported separately when evaluating all variants.
TABLE_ROW_VARIANTS: dict[str, str] = {
    "1": "1.1", "2": "2", "3": "3", "4": "4", "5": "5", "6": "6",
    "7": "7", "8": "8", "9": "9", "10": "10", "11": "11", "12": "12",
}

POLICY_KINDS = ("oracle", "expert", "det-rl", "stoch-rl", "random")

_CREATE_ACTION = {
    "exe": Action.CREATE_EXE,
    "service_exe": Action.CREATE_SERVICE_EXE,
    "dll": Action.COMPILE_DLL,
    "msi": Action.CREATE_MSI,
}
_DOWNLOAD_ACTION = {
    "exe": Action.DOWNLOAD_EXE,
    "service_exe": Action.DOWNLOAD_SERVICE_EXE,
    "dll": Action.DOWNLOAD_DLL,
    "msi": Action.DOWNLOAD_MSI,
}


# ---------------------------------------------------------------------------
# Policies


class OraclePolicy:
    """Replays the frozen minimal sequence for the host's injected weakness."""

    name = "oracle"

    def __init__(self):
        self._seq: tuple[int, ...] = ()
        self._i = 0

    def begin(self, env: EscalationEnv) -> None:
        injected = env.host.injected
        if len(injected) != 1:
            raise ValueError("oracle policy requires a single-weakness host")
        self._seq = ORACLE_SEQUENCES[injected[0]]
        self._i = 0

    def act(self, rng: np.random.Generator) -> int:
        if self._i >= len(self._seq):
            raise RuntimeError("oracle sequence exhausted before episode end")
        a = self._seq[self._i]
        self._i += 1
        return a

    def observe(self, action: int, result) -> None:
        pass


def _artifact_step(kn: Knowledge, kind: str) -> Optional[int]:
    """Next create/download action still needed before using artifact `kind`."""
    if not kn.created[kind]:
        return int(_CREATE_ACTION[kind])
    if not kn.downloaded[kind]:
        return int(_DOWNLOAD_ACTION[kind])
    return None


def expert_action(kn: Knowledge) -> int:
    """Deterministic rule cascade: run exploited things, chase credentials,
    fire the first applicable exploit chain against an elevated target, and
    otherwise work down a fixed enumeration order."""

    def elevated(svc_key: str) -> bool:
        info = kn.services.get(svc_key)
        return info is not None and info.elevated

    # 1. something already exploited is waiting to run
    if kn.start_targets():
        return int(Action.START_EXPLOITED_SERVICE)

    # 2. credentials in hand
    untested = kn.untested_creds()
    if untested:
        if not kn.users_listed:
            return int(Action.LIST_USERS)
        admins = {a.lower() for a in kn.admins}
        if any(user in admins for user, _pw in untested):
            return int(Action.TEST_CREDENTIALS)
    if kn.unattend_blobs:
        return int(Action.DECODE_BASE64_CREDS)

    # 3. exploit chains, elevated targets only
    if any(elevated(k) for k in kn.reconfig_targets()):
        return int(Action.RECONFIGURE_SERVICE_ADD_ADMIN)
    if any(elevated(k) for k in kn.registry_targets()):
        return int(Action.SET_IMAGEPATH_ADD_ADMIN)

    bin_targets = [k for k in kn.service_binary_targets() if elevated(k)]
    hijack_targets = [k for k in kn.hijack_targets() if elevated(k)]
    if bin_targets or hijack_targets:
        a = _artifact_step(kn, "service_exe")
        if a is not None:
            return a
        if bin_targets:
            return int(Action.OVERWRITE_SERVICE_BINARY)
        return int(Action.PLANT_UNQUOTED_PATH_EXE)

    def dll_has_elevated_caller(name: str) -> bool:
        return any(elevated(c) for c in kn.dll_callers(name))

    overwrite_dlls = [d for d in kn.writable_dlls() if dll_has_elevated_caller(d)]
    plant_dlls = [d for d in kn.missing_dlls() if dll_has_elevated_caller(d)]
    if overwrite_dlls or (plant_dlls and kn.writable_path_dirs()):
        a = _artifact_step(kn, "dll")
        if a is not None:
            return a
        if overwrite_dlls:
            return int(Action.OVERWRITE_DLL)
        return int(Action.PLANT_MISSING_DLL)

    if kn.bits == (True, True):
        a = _artifact_step(kn, "msi")
        if a is not None:
            return a
        return int(Action.INSTALL_MSI)

    if kn.autorun_exe_targets() or kn.startup_plant_targets():
        a = _artifact_step(kn, "exe")
        if a is not None:
            return a
        return int(Action.OVERWRITE_AUTORUN_EXE)
    if any(kn.tasks[k].run_as == "SYSTEM" for k in kn.task_exe_targets()):
        a = _artifact_step(kn, "exe")
        if a is not None:
            return a
        return int(Action.OVERWRITE_TASK_EXE)

    # 4. enumeration, cheapest leads first
    if not kn.winlogon_checked:
        return int(Action.CHECK_WINLOGON_CREDS)
    if kn.current_user is None:
        return int(Action.WHOAMI)
    if not kn.services_listed:
        return int(Action.LIST_SERVICES)
    if not kn.reconfig_checked:
        return int(Action.CHECK_SERVICE_PERMISSIONS)
    if not kn.registry_acl_checked:
        return int(Action.CHECK_SERVICE_REGISTRY_ACLS)
    if kn.pending_dirs:
        return int(Action.CHECK_DIRECTORY_PERMISSIONS)
    if kn.pending_files:
        return int(Action.CHECK_EXECUTABLE_PERMISSIONS)
    if kn.bits is None:
        return int(Action.CHECK_INSTALL_ELEVATED_BITS)
    if not kn.autoruns_listed:
        return int(Action.LIST_AUTORUNS)
    if not kn.tasks_listed:
        return int(Action.LIST_TASKS)
    if not kn.unattend_searched:
        return int(Action.FIND_UNATTEND_FILES)
    if not kn.dll_scan_done:
        return int(Action.SCAN_SERVICE_BINARIES_FOR_DLLS)
    if kn.dll_imports and not kn.dll_search_done:
        return int(Action.SEARCH_DLLS)
    if kn.missing_dlls() and not kn.path_known:
        return int(Action.GET_WINDOWS_PATH)
    # everything known, nothing exploitable: idle until truncation
    return int(Action.WHOAMI)


class ExpertPolicy:
    """Rule cascade over observation-derived knowledge only."""

    name = "expert"

    def __init__(self):
        self._kn = Knowledge()

    def begin(self, env: EscalationEnv) -> None:
        self._kn = Knowledge()

    def act(self, rng: np.random.Generator) -> int:
        return expert_action(self._kn)

    def observe(self, action: int, result) -> None:
        self._kn.absorb_step(action, result.facts)


class RandomPolicy:
    """Uniform over all 38 actions, independent across steps."""

    name = "random"

    def begin(self, env: EscalationEnv) -> None:
        pass

    def act(self, rng: np.random.Generator) -> int:
        return int(rng.integers(1, 39))

    def observe(self, action: int, result) -> None:
        pass


class RLPolicy:
    """Trained network, queried greedily or by sampling from the softmax."""

    def __init__(self, params: ParamStore, net_cfg: NetConfig, deterministic: bool):
        self.params = params
        self.net_cfg = net_cfg
        self.deterministic = deterministic
        self.name = "det-rl" if deterministic else "stoch-rl"
        self._state = init_state()

    def begin(self, env: EscalationEnv) -> None:
        self._state = init_state()

    def act(self, rng: np.random.Generator) -> int:
        out, _ = forward_net(self.params, self.net_cfg, encode(self._state))
        if self.deterministic:
            return greedy_action(out)
        return sample_action(out, rng)

    def observe(self, action: int, result) -> None:
        update_state(self._state, action, result.facts)


def make_policy(kind: str, params: Optional[ParamStore] = None,
                net_cfg: Optional[NetConfig] = None):
    if kind == "oracle":
        return OraclePolicy()
    if kind == "expert":
        return ExpertPolicy()
    if kind == "random":
        return RandomPolicy()
    if kind in ("det-rl", "stoch-rl"):
        if params is None:
            raise ValueError(f"policy {kind!r} needs trained parameters")
        return RLPolicy(params, net_cfg if net_cfg is not None else NetConfig(),
                        deterministic=(kind == "det-rl"))
    raise ValueError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")


# ---------------------------------------------------------------------------
# Episode runner and reports


@dataclass
class EpisodeResult:
    vulns: tuple[str, ...]
    env_seed: int
    length: int
    reward: float
    success: bool
    path: Optional[str]
    actions: Optional[tuple[int, ...]] = None

    def to_dict(self) -> dict:
        d = {
            "vulns": list(self.vulns),
            "env_seed": self.env_seed,
            "length": self.length,
            "reward": self.reward,
            "success": self.success,
            "path": self.path,
        }
        if self.actions is not None:
            d["actions"] = list(self.actions)
        return d


def run_episode(env: EscalationEnv, policy, rng: np.random.Generator,
                record_actions: bool = False) -> EpisodeResult:
    policy.begin(env)
    actions: list[int] = []
    reward = 0.0
    while not env.done:
        a = policy.act(rng)
        res = env.step(a)
        policy.observe(a, res)
        reward = res.reward
        if record_actions:
            actions.append(a)
    return EpisodeResult(
        vulns=tuple(env.host.injected),
        env_seed=env.host.seed,
        length=env.step_count,
        reward=reward,
        success=env.success_path is not None,
        path=env.success_path,
        actions=tuple(actions) if record_actions else None,
    )


@dataclass
class VulnStats:
    vuln_id: str
    episodes: int
    successes: int
    mean_length: float
    min_length: int
    max_length: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0

    def to_dict(self) -> dict:
        return {
            "vuln_id": self.vuln_id,
            "episodes": self.episodes,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "mean_length": self.mean_length,
            "min_length": self.min_length,
            "max_length": self.max_length,
        }


@dataclass
class EvalReport:
    policy: str
    seed: int
    n_per_vuln: int
    env_config: dict
    rows: list[VulnStats]
    episodes: list[EpisodeResult] = field(default_factory=list)
    mode: Optional[str] = None

    def row(self, vuln_id: str) -> VulnStats:
        for r in self.rows:
            if r.vuln_id == vuln_id:
                return r
        raise KeyError(vuln_id)

    def overall_mean_length(self) -> float:
        return float(np.mean([r.mean_length for r in self.rows]))

    def overall_success_rate(self) -> float:
        total = sum(r.episodes for r in self.rows)
        return sum(r.successes for r in self.rows) / total if total else 0.0

    def table_rows(self) -> list[tuple[str, VulnStats]]:
        """The 12 standard report rows (row "1" backed by variant 1.1)."""
        out = []
        for label, variant in TABLE_ROW_VARIANTS.items():
            try:
                out.append((label, self.row(variant)))
            except KeyError:
                pass
        return out

    def table_avg(self) -> float:
        rows = self.table_rows()
        return float(np.mean([s.mean_length for _l, s in rows])) if rows else float("nan")

    def to_dict(self) -> dict:
        d = {
            "policy": self.policy,
            "seed": self.seed,
            "n_per_vuln": self.n_per_vuln,
            "env_config": self.env_config,
            "rows": [r.to_dict() for r in self.rows],
            "overall_mean_length": self.overall_mean_length(),
            "overall_success_rate": self.overall_success_rate(),
        }
        if self.mode is not None:
            d["mode"] = self.mode
        if len(self.table_rows()) == 12:
            d["table_avg"] = self.table_avg()
        return d

    def format_text(self) -> str:
        lines = [f"policy: {self.policy}   seed: {self.seed}   episodes/row: {self.n_per_vuln}"]
        if self.mode is not None:
            lines[0] += f"   mode: {self.mode}"
        lines.append(f"{'vuln':>6}  {'mean':>7}  {'min':>5}  {'max':>5}  {'success':>8}")
        table = self.table_rows()
        shown = table if len(table) == 12 else [(r.vuln_id, r) for r in self.rows]
        for label, s in shown:
            lines.append(
                f"{label:>6}  {s.mean_length:>7.1f}  {s.min_length:>5}  "
                f"{s.max_length:>5}  {s.success_rate:>8.1%}"
            )
        if len(table) == 12:
            lines.append(f"{'AVG':>6}  {self.table_avg():>7.1f}")
            extra = [r for r in self.rows if r.vuln_id not in TABLE_ROW_VARIANTS.values()]
            for s in extra:
                lines.append(
                    f"{s.vuln_id:>6}  {s.mean_length:>7.1f}  {s.min_length:>5}  "
                    f"{s.max_length:>5}  {s.success_rate:>8.1%}   (extra variant)"
                )
        else:
            lines.append(f"{'ALL':>6}  {self.overall_mean_length():>7.1f}  "
                         f"{'':>5}  {'':>5}  {self.overall_success_rate():>8.1%}")
        return "\n".join(lines)

    def write_json(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            header = {"policy": self.policy, "seed": self.seed,
                      "env_config": self.env_config}
            fh.write(json.dumps(header) + "\n")
            for ep in self.episodes:
                fh.write(json.dumps(ep.to_dict()) + "\n")


def _episode_seed(seed: int, *idx: int) -> int:
    return int(np.random.SeedSequence([seed, *idx]).generate_state(1)[0])


def _stats_for(vuln_id: str, results: list[EpisodeResult]) -> VulnStats:
    lengths = [r.length for r in results]
    return VulnStats(
        vuln_id=vuln_id,
        episodes=len(results),
        successes=sum(r.success for r in results),
        mean_length=float(np.mean(lengths)) if lengths else float("nan"),
        min_length=min(lengths) if lengths else 0,
        max_length=max(lengths) if lengths else 0,
    )


def evaluate(policy_kind: str, vulns: Sequence[str] = VULN_IDS,
             n_per_vuln: int = 100, seed: int = 0,
             env_cfg: Optional[EnvConfig] = None,
             params: Optional[ParamStore] = None,
             net_cfg: Optional[NetConfig] = None,
             record_actions: bool = False,
             keep_episodes: bool = True) -> EvalReport:
    """Per-weakness benchmark: ``n_per_vuln`` fresh seeded hosts for each
    weakness in ``vulns``, each locked to that single weakness."""
    base = env_cfg if env_cfg is not None else EnvConfig()
    policy = make_policy(policy_kind, params, net_cfg)
    rows: list[VulnStats] = []
    episodes: list[EpisodeResult] = []
    for vi, vuln_id in enumerate(vulns):
        cfg = dc_replace(base, vuln_mode=VulnMode(kind="fixed", ids=(vuln_id,)))
        results = []
        for i in range(n_per_vuln):
            env_seed = _episode_seed(seed, vi, i)
            env = EscalationEnv(generate_host(env_seed, cfg), cfg)
            rng = np.random.default_rng(np.random.SeedSequence([seed, vi, i, 1]))
            results.append(run_episode(env, policy, rng, record_actions))
        rows.append(_stats_for(vuln_id, results))
        if keep_episodes:
            episodes.extend(results)
    return EvalReport(
        policy=policy.name, seed=seed, n_per_vuln=n_per_vuln,
        env_config=base.to_dict(), rows=rows, episodes=episodes,
    )


MULTI_MODES = ("random-pairs", "all-12", "six-service-vulns", "many-services")

_ALL_12 = ("1.1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12")
_SERVICE_ROWS = ("2", "3", "4", "5", "6")


def multi_vuln_eval(params: ParamStore, mode: str, n_episodes: int = 200,
                    seed: int = 0, env_cfg: Optional[EnvConfig] = None,
                    net_cfg: Optional[NetConfig] = None,
                    policy_kind: str = "det-rl",
                    record_actions: bool = False) -> EvalReport:
    """Generalization benchmark on hosts unlike the single-weakness
    training distribution.

    Modes: ``random-pairs`` (two distinct random weaknesses per host),
    ``all-12`` (one host class carrying every report-row weakness),
    ``six-service-vulns`` (all six service-based weaknesses at once),
    ``many-services`` (50 services, one random weakness).
    """
    if mode not in MULTI_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MULTI_MODES}")
    base = env_cfg if env_cfg is not None else EnvConfig()
    policy = make_policy(policy_kind, params, net_cfg)
    pick_rng = np.random.default_rng(np.random.SeedSequence([seed, 977]))
    results: list[EpisodeResult] = []
    for i in range(n_episodes):
        if mode == "random-pairs":
            pair = tuple(pick_rng.choice(len(VULN_IDS), size=2, replace=False))
            ids = (VULN_IDS[pair[0]], VULN_IDS[pair[1]])
            cfg = dc_replace(base, vuln_mode=VulnMode(kind="multi", ids=ids))
        elif mode == "all-12":
            cfg = dc_replace(base, vuln_mode=VulnMode(kind="multi", ids=_ALL_12))
        elif mode == "six-service-vulns":
            dll_variant = "1.1" if pick_rng.integers(2) == 0 else "1.2"
            ids = (dll_variant,) + _SERVICE_ROWS
            cfg = dc_replace(base, vuln_mode=VulnMode(kind="multi", ids=ids))
        else:  # many-services
            cfg = dc_replace(base, n_services=(50, 50), vuln_mode=VulnMode())
        env_seed = _episode_seed(seed, 1000 + i)
        env = EscalationEnv(generate_host(env_seed, cfg), cfg)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1000 + i, 1]))
        results.append(run_episode(env, policy, rng, record_actions))
    report = EvalReport(
        policy=policy.name, seed=seed, n_per_vuln=n_episodes,
        env_config=base.to_dict(), rows=[_stats_for(mode, results)],
        episodes=results, mode=mode,
    )
    return report
