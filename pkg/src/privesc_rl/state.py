"""Agent belief state and its fixed numeric encoding.

The belief has two layers:

* auxiliary memory (a ``Knowledge`` instance): names, paths, credentials,
  permission queues — everything needed to ground actions, none of it fed to
  the network;
* derived features: 27 general variables plus one attribute row per known
  service (11), per known DLL of a service (3), per autorun entry (2) and
  per scheduled task (3).

Three-valued attributes encode +1 (true) / 0 (undetermined) / -1 (false);
two-valued flags share the codebook as +1 / -1, so 0 always reads as "not
yet known".  Entity rows appear in discovery order, and an empty category is
padded with a single all-zero pseudo row so every tensor has at least one
row.  The coordinate layout below is frozen; tests pin it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .winsim.facts import Fact
from .winsim.host import in_windows_dir, parent_dir
from .winsim.knowledge import Knowledge, ServiceInfo, is_abs_path

TRI_TRUE = 1
TRI_UNKNOWN = 0
TRI_FALSE = -1

GENERAL_SIZE = 27
SERVICE_ATTRS = 11
DLL_ATTRS = 3
AUTORUN_ATTRS = 2
TASK_ATTRS = 3

#: Frozen order of the 27 general-state coordinates.
GENERAL_COORDS = (
    "creds_in_files",
    "file_creds_elevated",
    "creds_in_registry",
    "registry_creds_elevated",
    "writable_path_folder",
    "install_elevated_bits",
    "autoruns_enumerable",
    "created_exe",
    "created_service_exe",
    "created_dll",
    "created_msi",
    "downloaded_exe",
    "downloaded_service_exe",
    "downloaded_dll",
    "downloaded_msi",
    "know_users",
    "creds_to_check",
    "know_services",
    "know_tasks",
    "know_autoruns",
    "dll_scan_done",
    "dll_search_done",
    "dirs_pending_check",
    "files_pending_check",
    "know_current_user",
    "know_windows_path",
    "creds_to_decode",
)

SERVICE_COORDS = (
    "running", "elevated", "unquoted", "writable_parent", "whitespace",
    "in_windows", "exe_writable", "reconfigurable", "registry_modifiable",
    "vulnerable_dll", "exploited",
)
DLL_COORDS = ("missing", "writable", "replaced")
AUTORUN_COORDS = ("writable", "in_windows")
TASK_COORDS = ("elevated", "exe_writable", "in_windows")


def _tri(v: Optional[bool]) -> int:
    if v is None:
        return TRI_UNKNOWN
    return TRI_TRUE if v else TRI_FALSE


def _b(v: bool) -> int:
    return TRI_TRUE if v else TRI_FALSE


@dataclass
class GeneralState:
    values: dict[str, int]

    def vector(self) -> np.ndarray:
        return np.array([self.values[c] for c in GENERAL_COORDS], dtype=np.float64)


@dataclass
class DllState:
    name: str
    missing: int
    writable: int
    replaced: int

    def vector(self) -> np.ndarray:
        return np.array([self.missing, self.writable, self.replaced], dtype=np.float64)


@dataclass
class ServiceState:
    key: str
    name: str
    attrs: dict[str, int]
    dlls: list[DllState] = field(default_factory=list)

    def vector(self) -> np.ndarray:
        return np.array([self.attrs[c] for c in SERVICE_COORDS], dtype=np.float64)


@dataclass
class AutoRunState:
    key: str
    writable: int
    in_windows: int

    def vector(self) -> np.ndarray:
        return np.array([self.writable, self.in_windows], dtype=np.float64)


@dataclass
class TaskState:
    key: str
    elevated: int
    exe_writable: int
    in_windows: int

    def vector(self) -> np.ndarray:
        return np.array([self.elevated, self.exe_writable, self.in_windows], dtype=np.float64)


@dataclass
class AgentState:
    """Belief container; all derived views are pure functions of ``aux``."""

    aux: Knowledge = field(default_factory=Knowledge)


@dataclass
class EncodedState:
    """Fixed-layout numeric view fed to the network.

    ``dlls[i]`` holds the DLL rows of service row ``i`` and may be empty —
    DLL sets are aggregated inside the network, so they are not padded.  A
    padded (pseudo-entity) category has an all-zero row and an empty key
    tuple.
    """

    general: np.ndarray          # (27,)
    services: np.ndarray         # (N, 11), N >= 1
    dlls: list[np.ndarray]       # N entries of shape (n_i, 3)
    autoruns: np.ndarray         # (M, 2), M >= 1
    tasks: np.ndarray            # (L, 3), L >= 1
    service_keys: tuple[str, ...] = ()
    autorun_keys: tuple[str, ...] = ()
    task_keys: tuple[str, ...] = ()


def init_state() -> AgentState:
    return AgentState()


def update(state: AgentState, action: int, facts: Sequence[Fact]) -> AgentState:
    """Fold one step's observations into the belief (in place)."""
    state.aux.absorb_step(action, facts)
    return state


# ---------------------------------------------------------------------------
# Derivations


def _creds_elevated(kn: Knowledge, source: str) -> int:
    keys = [k for k in kn.creds if kn.cred_sources.get(k) == source]
    if not keys:
        return TRI_UNKNOWN
    admins_l = [a.lower() for a in kn.admins]
    votes: list[Optional[bool]] = []
    for user_l, pw in keys:
        st = kn.creds[(user_l, pw)]
        if st is not None:
            votes.append(st[0] and st[1])
        elif kn.users_listed:
            votes.append(user_l in admins_l)
        else:
            votes.append(None)
    if any(v is True for v in votes):
        return TRI_TRUE
    if all(v is False for v in votes):
        return TRI_FALSE
    return TRI_UNKNOWN


def derive_general(state: AgentState) -> GeneralState:
    kn = state.aux
    v: dict[str, int] = {}

    if not kn.unattend_searched:
        v["creds_in_files"] = TRI_UNKNOWN
    else:
        has_file_creds = bool(kn.unattend_blobs) or any(
            s == "file" for s in kn.cred_sources.values()
        )
        v["creds_in_files"] = _b(has_file_creds)
    if v["creds_in_files"] == TRI_FALSE:
        v["file_creds_elevated"] = TRI_FALSE
    elif v["creds_in_files"] == TRI_UNKNOWN:
        v["file_creds_elevated"] = TRI_UNKNOWN
    else:
        v["file_creds_elevated"] = _creds_elevated(kn, "file")

    if not kn.winlogon_checked:
        v["creds_in_registry"] = TRI_UNKNOWN
    else:
        v["creds_in_registry"] = _b(
            any(s == "registry" for s in kn.cred_sources.values())
        )
    if v["creds_in_registry"] == TRI_FALSE:
        v["registry_creds_elevated"] = TRI_FALSE
    elif v["creds_in_registry"] == TRI_UNKNOWN:
        v["registry_creds_elevated"] = TRI_UNKNOWN
    else:
        v["registry_creds_elevated"] = _creds_elevated(kn, "registry")

    if not kn.path_known:
        v["writable_path_folder"] = TRI_UNKNOWN
    else:
        statuses = [kn.dir_writable(d) for d in kn.path_dirs]
        if any(s is True for s in statuses):
            v["writable_path_folder"] = TRI_TRUE
        elif statuses and all(s is False for s in statuses):
            v["writable_path_folder"] = TRI_FALSE
        else:
            v["writable_path_folder"] = TRI_UNKNOWN

    if kn.bits is None:
        v["install_elevated_bits"] = TRI_UNKNOWN
    else:
        v["install_elevated_bits"] = _b(kn.bits[0] and kn.bits[1])

    v["autoruns_enumerable"] = TRI_TRUE if kn.autoruns_listed else TRI_UNKNOWN

    for kind in ("exe", "service_exe", "dll", "msi"):
        v[f"created_{kind}"] = _b(kn.created[kind])
        v[f"downloaded_{kind}"] = _b(kn.downloaded[kind])

    v["know_users"] = _b(kn.users_listed)
    v["creds_to_check"] = _b(bool(kn.untested_creds()))
    v["know_services"] = _b(kn.services_listed)
    v["know_tasks"] = _b(kn.tasks_listed)
    v["know_autoruns"] = _b(kn.autoruns_listed)
    v["dll_scan_done"] = _b(kn.dll_scan_done)
    v["dll_search_done"] = _b(kn.dll_search_done)
    v["dirs_pending_check"] = _b(bool(kn.pending_dirs))
    v["files_pending_check"] = _b(bool(kn.pending_files))
    v["know_current_user"] = _b(kn.current_user is not None)
    v["know_windows_path"] = _b(kn.path_known)
    v["creds_to_decode"] = _b(bool(kn.unattend_blobs))
    return GeneralState(v)


def _derive_dlls(kn: Knowledge, svc_key: str) -> list[DllState]:
    names = kn.dll_imports.get(svc_key, ())
    out = []
    for name in names:
        key = name.lower()
        replaced = key in kn.replaced_dlls
        if not kn.dll_search_done or key not in kn.dll_paths:
            missing = TRI_UNKNOWN
            writable = TRI_UNKNOWN
        else:
            path = kn.dll_paths[key]
            if path is None:
                missing = TRI_TRUE
                writable = TRI_FALSE
            else:
                missing = TRI_FALSE
                st = kn.file_status(path)
                writable = _tri(None if st is None else (st[0] and st[1]))
        out.append(DllState(name=name, missing=missing, writable=writable,
                            replaced=_b(replaced)))
    return out


def _derive_service(kn: Knowledge, key: str, info: ServiceInfo) -> ServiceState:
    attrs: dict[str, int] = {}
    attrs["running"] = _b(kn.service_running.get(key, info.started))
    attrs["elevated"] = _b(info.elevated)
    attrs["unquoted"] = _b(not info.quoted)
    attrs["whitespace"] = _b(info.has_space)
    attrs["in_windows"] = _b(info.in_windows)

    # "writable parent": the binary's folder, or any folder an unquoted-path
    # truncation would search first
    relevant: list[Optional[bool]] = []
    if is_abs_path(info.image_path):
        relevant.append(kn.dir_writable(parent_dir(info.exe_path)))
    for _cand, container in info.hijack_points:
        relevant.append(kn.dir_writable(container))
    if any(s is True for s in relevant):
        attrs["writable_parent"] = TRI_TRUE
    elif relevant and all(s is False for s in relevant):
        attrs["writable_parent"] = TRI_FALSE
    else:
        attrs["writable_parent"] = TRI_UNKNOWN

    if is_abs_path(info.image_path):
        attrs["exe_writable"] = _tri(kn.effective_file_writable(info.exe_path))
    else:
        attrs["exe_writable"] = TRI_UNKNOWN
    attrs["reconfigurable"] = _tri(kn.svc_reconfig.get(key))
    attrs["registry_modifiable"] = _tri(kn.svc_registry_acl.get(key))

    dlls = _derive_dlls(kn, key)
    if not dlls:
        attrs["vulnerable_dll"] = TRI_UNKNOWN
    else:
        flags = []
        for d in dlls:
            if d.missing == TRI_TRUE or d.writable == TRI_TRUE:
                flags.append(True)
            elif d.missing == TRI_FALSE and d.writable == TRI_FALSE:
                flags.append(False)
            else:
                flags.append(None)
        if any(f is True for f in flags):
            attrs["vulnerable_dll"] = TRI_TRUE
        elif all(f is False for f in flags):
            attrs["vulnerable_dll"] = TRI_FALSE
        else:
            attrs["vulnerable_dll"] = TRI_UNKNOWN

    attrs["exploited"] = _b(key in kn.exploited_services)
    return ServiceState(key=key, name=info.name, attrs=attrs, dlls=dlls)


def derive_services(state: AgentState) -> list[ServiceState]:
    kn = state.aux
    return [_derive_service(kn, key, info) for key, info in kn.services.items()]


def derive_autoruns(state: AgentState) -> list[AutoRunState]:
    kn = state.aux
    out = []
    for entry_id, listing in kn.autoruns.items():
        if listing.kind == "registry":
            st = kn.file_status(listing.path)
            writable = _tri(None if st is None else (st[0] and st[1]))
        else:
            writable = _tri(kn.dir_writable(listing.path))
        out.append(AutoRunState(
            key=entry_id,
            writable=writable,
            in_windows=_b(in_windows_dir(listing.path)),
        ))
    return out


def derive_tasks(state: AgentState) -> list[TaskState]:
    kn = state.aux
    out = []
    for key, listing in kn.tasks.items():
        st = kn.file_status(listing.exe_path)
        out.append(TaskState(
            key=key,
            elevated=_b(listing.run_as.upper() == "SYSTEM"),
            exe_writable=_tri(None if st is None else (st[0] and st[1])),
            in_windows=_b(in_windows_dir(listing.exe_path)),
        ))
    return out


# ---------------------------------------------------------------------------
# Encoding


def _stack(rows: list[np.ndarray], width: int) -> np.ndarray:
    if not rows:
        return np.zeros((1, width), dtype=np.float64)
    return np.stack(rows).astype(np.float64)


def encode(state: AgentState) -> EncodedState:
    general = derive_general(state).vector()
    services = derive_services(state)
    autoruns = derive_autoruns(state)
    tasks = derive_tasks(state)

    svc_rows = [s.vector() for s in services]
    dll_mats = [
        np.stack([d.vector() for d in s.dlls]).astype(np.float64)
        if s.dlls else np.zeros((0, DLL_ATTRS), dtype=np.float64)
        for s in services
    ]
    if not services:
        dll_mats = [np.zeros((0, DLL_ATTRS), dtype=np.float64)]

    return EncodedState(
        general=general,
        services=_stack(svc_rows, SERVICE_ATTRS),
        dlls=dll_mats,
        autoruns=_stack([a.vector() for a in autoruns], AUTORUN_ATTRS),
        tasks=_stack([t.vector() for t in tasks], TASK_ATTRS),
        service_keys=tuple(s.key for s in services),
        autorun_keys=tuple(a.key for a in autoruns),
        task_keys=tuple(t.key for t in tasks),
    )
