"""Observation facts emitted by the simulated host.

Every step returns a list of facts — structured records, not rendered tool
output.  Facts are the only channel from the host to the agent: the belief
tracker folds them into its state and never peeks at ground truth.

All fact classes are frozen dataclasses with a string ``kind`` tag so that
episode traces can be serialized to JSON losslessly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, is_dataclass
from typing import Optional


@dataclass(frozen=True)
class ServiceListing:
    """One row of the service enumeration (name, raw path, account, state)."""

    name: str
    image_path: str
    run_as: str
    started: bool


@dataclass(frozen=True)
class AutoRunListing:
    """One autorun entry: a registry value pointing at an executable, or a
    startup folder (``kind == "startup_dir"``, ``path`` is the folder)."""

    entry_id: str
    kind: str  # "registry" | "startup_dir"
    path: str


@dataclass(frozen=True)
class TaskListing:
    name: str
    exe_path: str
    run_as: str
    trigger: str


@dataclass(frozen=True)
class Fact:
    kind = "fact"


@dataclass(frozen=True)
class ServiceList(Fact):
    kind = "service_list"
    entries: tuple[ServiceListing, ...] = ()


@dataclass(frozen=True)
class DirAclResult(Fact):
    kind = "dir_acl"
    path: str = ""
    writable: bool = False


@dataclass(frozen=True)
class FileAclResult(Fact):
    kind = "file_acl"
    path: str = ""
    exists: bool = True
    writable: bool = False


@dataclass(frozen=True)
class ServiceAclResult(Fact):
    kind = "service_acl"
    name: str = ""
    reconfigurable: bool = False


@dataclass(frozen=True)
class RegistryAclResult(Fact):
    kind = "registry_acl"
    name: str = ""
    modifiable: bool = False


@dataclass(frozen=True)
class AutoRunList(Fact):
    kind = "autorun_list"
    entries: tuple[AutoRunListing, ...] = ()


@dataclass(frozen=True)
class TaskList(Fact):
    kind = "task_list"
    entries: tuple[TaskListing, ...] = ()


@dataclass(frozen=True)
class UserList(Fact):
    kind = "user_list"
    users: tuple[str, ...] = ()
    admins: tuple[str, ...] = ()


@dataclass(frozen=True)
class CurrentUser(Fact):
    kind = "current_user"
    name: str = ""


@dataclass(frozen=True)
class WindowsPath(Fact):
    kind = "windows_path"
    dirs: tuple[str, ...] = ()


@dataclass(frozen=True)
class WinlogonCreds(Fact):
    """Winlogon auto-logon values; both fields None when nothing is stored."""

    kind = "winlogon_creds"
    username: Optional[str] = None
    password: Optional[str] = None


@dataclass(frozen=True)
class UnattendFound(Fact):
    """Results of the unattend*/sysprep* sweep; empty tuple means none found.
    Each entry is (path, base64 blob)."""

    kind = "unattend_found"
    files: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class DecodedCreds(Fact):
    kind = "decoded_creds"
    creds: tuple[tuple[str, str], ...] = ()  # (user, password)


@dataclass(frozen=True)
class CredTestResult(Fact):
    kind = "cred_test"
    results: tuple[tuple[str, bool, bool], ...] = ()  # (user, valid, is_admin)
    success: bool = False


@dataclass(frozen=True)
class DllScan(Fact):
    kind = "dll_scan"
    imports: tuple[tuple[str, tuple[str, ...]], ...] = ()  # (service, dll names)


@dataclass(frozen=True)
class DllSearch(Fact):
    kind = "dll_search"
    results: tuple[tuple[str, Optional[str]], ...] = ()  # (dll, found path | None)


@dataclass(frozen=True)
class InstallElevatedBits(Fact):
    kind = "install_elevated_bits"
    machine: bool = False
    user: bool = False


@dataclass(frozen=True)
class ArtifactCreated(Fact):
    kind = "artifact_created"
    artifact: str = ""  # "exe" | "service_exe" | "dll" | "msi"


@dataclass(frozen=True)
class ArtifactDownloaded(Fact):
    kind = "artifact_downloaded"
    artifact: str = ""


@dataclass(frozen=True)
class Exploited(Fact):
    """A host object is now under attacker control (tampered binary, hijacked
    path, re-configured service, replaced DLL, planted startup file...)."""

    kind = "exploited"
    target_kind: str = ""  # "service" | "dll" | "autorun" | "task" | "startup_dir"
    target: str = ""


@dataclass(frozen=True)
class ActionFailed(Fact):
    """The action's preconditions were not met; the step was a no-op."""

    kind = "action_failed"
    reason: str = ""


@dataclass(frozen=True)
class StepResult:
    facts: tuple[Fact, ...]
    reward: float
    done: bool
    step_index: int


FACT_CLASSES: dict[str, type] = {
    c.kind: c
    for c in (
        ServiceList, DirAclResult, FileAclResult, ServiceAclResult,
        RegistryAclResult, AutoRunList, TaskList, UserList, CurrentUser,
        WindowsPath, WinlogonCreds, UnattendFound, DecodedCreds,
        CredTestResult, DllScan, DllSearch, InstallElevatedBits,
        ArtifactCreated, ArtifactDownloaded, Exploited, ActionFailed,
    )
}


def _plain(value):
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


def fact_to_dict(fact: Fact) -> dict:
    d = {"kind": fact.kind}
    d.update(_plain(fact))
    return d


def _detuple(value):
    if isinstance(value, list):
        return tuple(_detuple(v) for v in value)
    return value


def fact_from_dict(d: dict) -> Fact:
    kind = d["kind"]
    cls = FACT_CLASSES[kind]
    kw = {k: v for k, v in d.items() if k != "kind"}
    if cls is ServiceList:
        kw["entries"] = tuple(ServiceListing(**e) for e in kw.get("entries", ()))
    elif cls is AutoRunList:
        kw["entries"] = tuple(AutoRunListing(**e) for e in kw.get("entries", ()))
    elif cls is TaskList:
        kw["entries"] = tuple(TaskListing(**e) for e in kw.get("entries", ()))
    else:
        kw = {k: _detuple(v) for k, v in kw.items()}
    return cls(**kw)
