"""Attacker-side bookkeeping, derived purely from observation facts.

``Knowledge`` is the auxiliary memory of the attack: names, paths, accounts,
credentials, permission-check queues and per-object findings.  The
environment keeps one instance to resolve action targets (the agent never
supplies arguments — every action applies to whatever qualifying objects are
currently known), and the belief tracker keeps an identical instance as the
side store that backs the neural state encoding.

Everything here is a function of the fact stream plus the agent's own
actions; ground truth is never consulted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .facts import (
    ActionFailed,
    ArtifactCreated,
    ArtifactDownloaded,
    AutoRunList,
    AutoRunListing,
    CredTestResult,
    CurrentUser,
    DecodedCreds,
    DirAclResult,
    DllScan,
    DllSearch,
    Exploited,
    Fact,
    FileAclResult,
    InstallElevatedBits,
    RegistryAclResult,
    ServiceAclResult,
    ServiceList,
    ServiceListing,
    TaskList,
    TaskListing,
    UnattendFound,
    UserList,
    WindowsPath,
    WinlogonCreds,
)
from .host import (
    ARTIFACT_KINDS,
    in_windows_dir,
    is_quoted,
    norm_path,
    parent_dir,
    strip_quotes,
    unquoted_hijack_points,
)


def is_abs_path(p: str) -> bool:
    return norm_path(p).startswith("c:\\")


@dataclass
class ServiceInfo:
    """What the service enumeration revealed about one service."""

    name: str
    image_path: str
    run_as: str
    started: bool

    @property
    def exe_path(self) -> str:
        return strip_quotes(self.image_path)

    @property
    def elevated(self) -> bool:
        return self.run_as.lower() == "localsystem"

    @property
    def quoted(self) -> bool:
        return is_quoted(self.image_path)

    @property
    def has_space(self) -> bool:
        return " " in self.exe_path

    @property
    def in_windows(self) -> bool:
        return is_abs_path(self.exe_path) and in_windows_dir(self.exe_path)

    @property
    def hijack_points(self) -> list[tuple[str, str]]:
        return unquoted_hijack_points(self.image_path)


@dataclass
class Knowledge:
    """Cumulative attacker view of the host (auxiliary memory)."""

    current_user: Optional[str] = None

    services: dict[str, ServiceInfo] = field(default_factory=dict)
    services_listed: bool = False
    service_running: dict[str, bool] = field(default_factory=dict)

    autoruns: dict[str, AutoRunListing] = field(default_factory=dict)
    autoruns_listed: bool = False

    tasks: dict[str, TaskListing] = field(default_factory=dict)
    tasks_listed: bool = False

    users: list[str] = field(default_factory=list)
    admins: list[str] = field(default_factory=list)
    users_listed: bool = False

    path_dirs: list[str] = field(default_factory=list)
    path_known: bool = False

    # Permission-check queues and results.  Queues hold display paths in
    # discovery order; results are keyed by normalized path.
    pending_dirs: list[str] = field(default_factory=list)
    checked_dirs: dict[str, bool] = field(default_factory=dict)
    pending_files: list[str] = field(default_factory=list)
    checked_files: dict[str, tuple[bool, bool]] = field(default_factory=dict)

    svc_reconfig: dict[str, bool] = field(default_factory=dict)
    reconfig_checked: bool = False
    svc_registry_acl: dict[str, bool] = field(default_factory=dict)
    registry_acl_checked: bool = False

    dll_imports: dict[str, tuple[str, ...]] = field(default_factory=dict)
    dll_scan_done: bool = False
    dll_paths: dict[str, Optional[str]] = field(default_factory=dict)
    dll_search_done: bool = False

    winlogon_checked: bool = False
    unattend_searched: bool = False
    unattend_blobs: dict[str, str] = field(default_factory=dict)  # path -> blob

    # (user lower, password) -> None while untested, else (valid, is_admin)
    creds: dict[tuple[str, str], Optional[tuple[bool, bool]]] = field(default_factory=dict)
    # same key -> where the credential came from ("registry" | "file")
    cred_sources: dict[tuple[str, str], str] = field(default_factory=dict)

    bits: Optional[tuple[bool, bool]] = None

    created: dict[str, bool] = field(default_factory=lambda: {k: False for k in ARTIFACT_KINDS})
    downloaded: dict[str, bool] = field(default_factory=lambda: {k: False for k in ARTIFACT_KINDS})

    # Ordered sets of things we have tampered with (dict used as such).
    exploited_services: dict[str, bool] = field(default_factory=dict)
    replaced_dlls: dict[str, bool] = field(default_factory=dict)
    exploited_autoruns: dict[str, bool] = field(default_factory=dict)
    exploited_tasks: dict[str, bool] = field(default_factory=dict)
    planted_startup_dirs: dict[str, bool] = field(default_factory=dict)

    # ------------------------------------------------------------------
    # Queue helpers

    def _queue_dir(self, path: str) -> None:
        if not is_abs_path(path):
            return
        n = norm_path(path)
        if n in self.checked_dirs:
            return
        if any(norm_path(p) == n for p in self.pending_dirs):
            return
        self.pending_dirs.append(path)

    def _queue_file(self, path: str) -> None:
        if not is_abs_path(path):
            return
        n = norm_path(path)
        if n in self.checked_files:
            return
        if any(norm_path(p) == n for p in self.pending_files):
            return
        self.pending_files.append(path)

    # ------------------------------------------------------------------
    # Fact absorption

    def absorb(self, fact: Fact) -> None:
        if isinstance(fact, ActionFailed):
            return
        if isinstance(fact, ServiceList):
            self.services_listed = True
            for e in fact.entries:
                key = e.name.lower()
                self.services[key] = ServiceInfo(e.name, e.image_path, e.run_as, e.started)
                self.service_running[key] = e.started
                if is_abs_path(e.image_path):
                    exe = strip_quotes(e.image_path)
                    self._queue_file(exe)
                    self._queue_dir(parent_dir(exe))
                for _cand, container in unquoted_hijack_points(e.image_path):
                    self._queue_dir(container)
        elif isinstance(fact, AutoRunList):
            self.autoruns_listed = True
            for e in fact.entries:
                self.autoruns[e.entry_id] = e
                if e.kind == "registry":
                    self._queue_file(e.path)
                else:
                    self._queue_dir(e.path)
        elif isinstance(fact, TaskList):
            self.tasks_listed = True
            for e in fact.entries:
                self.tasks[e.name.lower()] = e
                self._queue_file(e.exe_path)
        elif isinstance(fact, UserList):
            self.users_listed = True
            self.users = list(fact.users)
            self.admins = list(fact.admins)
        elif isinstance(fact, CurrentUser):
            self.current_user = fact.name
        elif isinstance(fact, WindowsPath):
            self.path_known = True
            self.path_dirs = list(fact.dirs)
            for d in fact.dirs:
                self._queue_dir(d)
        elif isinstance(fact, DirAclResult):
            n = norm_path(fact.path)
            self.checked_dirs[n] = fact.writable
            self.pending_dirs = [p for p in self.pending_dirs if norm_path(p) != n]
        elif isinstance(fact, FileAclResult):
            n = norm_path(fact.path)
            self.checked_files[n] = (fact.exists, fact.writable)
            self.pending_files = [p for p in self.pending_files if norm_path(p) != n]
        elif isinstance(fact, ServiceAclResult):
            self.reconfig_checked = True
            self.svc_reconfig[fact.name.lower()] = fact.reconfigurable
        elif isinstance(fact, RegistryAclResult):
            self.registry_acl_checked = True
            self.svc_registry_acl[fact.name.lower()] = fact.modifiable
        elif isinstance(fact, DllScan):
            self.dll_scan_done = True
            for svc, names in fact.imports:
                self.dll_imports[svc.lower()] = tuple(names)
        elif isinstance(fact, DllSearch):
            self.dll_search_done = True
            for name, path in fact.results:
                self.dll_paths[name.lower()] = path
                if path is not None:
                    self._queue_file(path)
        elif isinstance(fact, WinlogonCreds):
            self.winlogon_checked = True
            if fact.username is not None and fact.password is not None:
                key = (fact.username.lower(), fact.password)
                self.creds.setdefault(key, None)
                self.cred_sources.setdefault(key, "registry")
        elif isinstance(fact, UnattendFound):
            self.unattend_searched = True
            for path, blob in fact.files:
                self.unattend_blobs[path] = blob
        elif isinstance(fact, DecodedCreds):
            self.unattend_blobs.clear()
            for user, password in fact.creds:
                key = (user.lower(), password)
                self.creds.setdefault(key, None)
                self.cred_sources.setdefault(key, "file")
        elif isinstance(fact, CredTestResult):
            for user, valid, admin in fact.results:
                for key in list(self.creds):
                    if key[0] == user.lower() and self.creds[key] is None:
                        self.creds[key] = (valid, admin)
        elif isinstance(fact, InstallElevatedBits):
            self.bits = (fact.machine, fact.user)
        elif isinstance(fact, ArtifactCreated):
            self.created[fact.artifact] = True
        elif isinstance(fact, ArtifactDownloaded):
            self.downloaded[fact.artifact] = True
        elif isinstance(fact, Exploited):
            if fact.target_kind == "service":
                self.exploited_services[fact.target.lower()] = True
            elif fact.target_kind == "dll":
                self.replaced_dlls[fact.target.lower()] = True
            elif fact.target_kind == "autorun":
                self.exploited_autoruns[fact.target] = True
            elif fact.target_kind == "task":
                self.exploited_tasks[fact.target.lower()] = True
            elif fact.target_kind == "startup_dir":
                self.planted_startup_dirs[norm_path(fact.target)] = True

    def absorb_step(self, action: int, facts) -> None:
        """Fold a full step into the knowledge: the facts themselves plus the
        deterministic consequences of the agent's own start/stop commands
        (which produce no observation)."""
        from ..actions import Action

        failed = any(isinstance(f, ActionFailed) for f in facts)
        if not failed and action == Action.START_EXPLOITED_SERVICE:
            for name in self.start_targets():
                self.service_running[name] = True
        elif not failed and action == Action.STOP_EXPLOITED_SERVICE:
            for name in self.stop_targets():
                self.service_running[name] = False
        for f in facts:
            self.absorb(f)

    # ------------------------------------------------------------------
    # Derived views used for action targeting and the expert heuristic

    def dir_writable(self, path: str) -> Optional[bool]:
        return self.checked_dirs.get(norm_path(path))

    def file_status(self, path: str) -> Optional[tuple[bool, bool]]:
        return self.checked_files.get(norm_path(path))

    def effective_file_writable(self, path: str) -> Optional[bool]:
        """Can we place our own content at ``path``?  True if the file is
        known writable, or known missing inside a known-writable folder.
        None while undetermined."""
        st = self.file_status(path)
        if st is None:
            return None
        exists, writable = st
        if exists:
            return writable
        parent = self.dir_writable(parent_dir(path))
        if parent is None:
            return None
        return parent

    def start_targets(self) -> list[str]:
        return [
            s for s in self.exploited_services
            if not self.service_running.get(s, False)
        ]

    def stop_targets(self) -> list[str]:
        return [
            s for s in self.exploited_services
            if self.service_running.get(s, False)
        ]

    def service_binary_targets(self) -> list[str]:
        out = []
        for key, info in self.services.items():
            if key in self.exploited_services:
                continue
            if self.effective_file_writable(info.exe_path) is True:
                out.append(key)
        return out

    def hijack_plant_point(self, key: str) -> Optional[str]:
        info = self.services.get(key)
        if info is None:
            return None
        for candidate, container in info.hijack_points:
            if self.dir_writable(container) is True:
                return candidate
        return None

    def hijack_targets(self) -> list[str]:
        return [
            key for key, _info in self.services.items()
            if key not in self.exploited_services
            and self.hijack_plant_point(key) is not None
        ]

    def reconfig_targets(self) -> list[str]:
        return [
            key for key, ok in self.svc_reconfig.items()
            if ok and key not in self.exploited_services
        ]

    def registry_targets(self) -> list[str]:
        return [
            key for key, ok in self.svc_registry_acl.items()
            if ok and key not in self.exploited_services
        ]

    def writable_path_dirs(self) -> list[str]:
        return [d for d in self.path_dirs if self.dir_writable(d) is True]

    def missing_dlls(self) -> list[str]:
        return [
            name for name, path in self.dll_paths.items()
            if path is None and name not in self.replaced_dlls
        ]

    def writable_dlls(self) -> list[str]:
        out = []
        for name, path in self.dll_paths.items():
            if path is None or name in self.replaced_dlls:
                continue
            st = self.file_status(path)
            if st is not None and st[0] and st[1]:
                out.append(name)
        return out

    def dll_callers(self, dll_name: str) -> list[str]:
        dll = dll_name.lower()
        return [
            svc for svc, imports in self.dll_imports.items()
            if any(i.lower() == dll for i in imports)
        ]

    def autorun_exe_targets(self) -> list[str]:
        out = []
        for entry_id, listing in self.autoruns.items():
            if listing.kind != "registry" or entry_id in self.exploited_autoruns:
                continue
            st = self.file_status(listing.path)
            if st is not None and st[0] and st[1]:
                out.append(entry_id)
        return out

    def startup_plant_targets(self) -> list[str]:
        out = []
        for _entry_id, listing in self.autoruns.items():
            if listing.kind != "startup_dir":
                continue
            if norm_path(listing.path) in self.planted_startup_dirs:
                continue
            if self.dir_writable(listing.path) is True:
                out.append(listing.path)
        return out

    def task_exe_targets(self) -> list[str]:
        out = []
        for key, listing in self.tasks.items():
            if key in self.exploited_tasks:
                continue
            st = self.file_status(listing.exe_path)
            if st is not None and st[0] and st[1]:
                out.append(key)
        return out

    def untested_creds(self) -> list[tuple[str, str]]:
        return [k for k, v in self.creds.items() if v is None]
