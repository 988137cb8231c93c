"""Episode dynamics: how the 38 actions act on a generated host.

The environment owns the ground-truth host, the attacker context and a
``Knowledge`` instance built purely from emitted facts.  Actions never take
arguments — each one applies to every qualifying object the attacker
currently knows about (e.g. the directory-permission check sweeps the whole
queue of discovered-but-unchecked folders in a single step).  An action whose
preconditions are unmet emits an ``ActionFailed`` fact and changes nothing;
it still consumes a step.

The episode ends with reward 1 as soon as one of the success routes in
``check_success`` holds, or with reward 0 when the step budget runs out.
"""

from __future__ import annotations

from typing import Optional

from ..actions import Action
from ..config import EnvConfig
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
    StepResult,
    TaskList,
    TaskListing,
    UnattendFound,
    UserList,
    WindowsPath,
    WinlogonCreds,
)
from .generate import generate_host
from .host import (
    AttackerContext,
    Credential,
    SimHost,
    check_success,
    norm_path,
    parent_dir,
    service_imagepath_key,
)
from .knowledge import Knowledge

import base64

# Where downloaded payloads land on the target.
PAYLOAD_FILES = {
    "exe": "payload.exe",
    "service_exe": "svc-payload.exe",
    "dll": "payload.dll",
    "msi": "installer.msi",
}

_CREATE_KIND = {
    Action.CREATE_EXE: "exe",
    Action.CREATE_SERVICE_EXE: "service_exe",
    Action.COMPILE_DLL: "dll",
    Action.CREATE_MSI: "msi",
}
_DOWNLOAD_KIND = {
    Action.DOWNLOAD_EXE: "exe",
    Action.DOWNLOAD_SERVICE_EXE: "service_exe",
    Action.DOWNLOAD_DLL: "dll",
    Action.DOWNLOAD_MSI: "msi",
}

FAIL_NEED_CURRENT_USER = "need-current-user"
FAIL_NOT_CREATED = "artifact-not-created"
FAIL_NOT_DOWNLOADED = "artifact-not-downloaded"
FAIL_NOTHING_TO_START = "nothing-to-start"
FAIL_NOTHING_TO_STOP = "nothing-to-stop"
FAIL_NO_TARGET = "no-known-target"
FAIL_NO_WRITABLE_PATH_DIR = "no-writable-path-dir"
FAIL_NOTHING_TO_DECODE = "nothing-to-decode"
FAIL_NO_UNTESTED_CREDS = "no-untested-credentials"
FAIL_USERS_UNKNOWN = "users-unknown"
FAIL_SERVICES_UNKNOWN = "services-unknown"
FAIL_NO_KNOWN_DLLS = "no-known-dlls"
FAIL_NO_PENDING_FILES = "no-pending-files"
FAIL_NO_PENDING_DIRS = "no-pending-directories"


class EscalationEnv:
    def __init__(self, host: SimHost, cfg: Optional[EnvConfig] = None):
        self.host = host
        self.cfg = cfg if cfg is not None else EnvConfig()
        self.attacker = AttackerContext(current_user="user")
        self.knowledge = Knowledge()
        self.step_count = 0
        self.done = False
        self.success_path: Optional[str] = None

    # ------------------------------------------------------------------

    def step(self, action: int) -> StepResult:
        if self.done:
            raise ValueError("episode is over; create a fresh environment")
        a = Action(action)
        facts = self._apply(a)
        self.knowledge.absorb_step(a, facts)
        self.step_count += 1
        path = check_success(self.host, self.attacker)
        reward = 1.0 if path is not None else 0.0
        if path is not None:
            self.done = True
            self.success_path = path
        elif self.step_count >= self.cfg.n_max_steps:
            self.done = True
        return StepResult(tuple(facts), reward, self.done, self.step_count)

    # ------------------------------------------------------------------

    def _apply(self, a: Action) -> list[Fact]:
        host, atk, kn = self.host, self.attacker, self.knowledge
        user = atk.current_user

        if a in _CREATE_KIND:
            if kn.current_user is None:
                return [ActionFailed(FAIL_NEED_CURRENT_USER)]
            kind = _CREATE_KIND[a]
            atk.created[kind] = True
            return [ArtifactCreated(kind)]

        if a in _DOWNLOAD_KIND:
            kind = _DOWNLOAD_KIND[a]
            if not kn.created[kind]:
                return [ActionFailed(FAIL_NOT_CREATED)]
            atk.downloaded[kind] = True
            host.fs.add_file(self._payload_path(kind), write_grants={user})
            return [ArtifactDownloaded(kind)]

        if a == Action.START_EXPLOITED_SERVICE:
            targets = kn.start_targets()
            if not targets:
                return [ActionFailed(FAIL_NOTHING_TO_START)]
            for name in targets:
                rec = host.get_service(name)
                if rec is not None and not rec.started:
                    rec.started = True
                    if rec.exploited and rec.elevated:
                        host.add_admin(user)
            return []

        if a == Action.STOP_EXPLOITED_SERVICE:
            targets = kn.stop_targets()
            if not targets:
                return [ActionFailed(FAIL_NOTHING_TO_STOP)]
            for name in targets:
                rec = host.get_service(name)
                if rec is not None:
                    rec.started = False
            return []

        if a == Action.OVERWRITE_AUTORUN_EXE:
            if not kn.downloaded["exe"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            entries = kn.autorun_exe_targets()
            dirs = kn.startup_plant_targets()
            if not entries and not dirs:
                return [ActionFailed(FAIL_NO_TARGET)]
            facts: list[Fact] = []
            for entry_id in entries:
                for rec in host.autoruns:
                    if rec.entry_id == entry_id:
                        rec.exploited = True
                facts.append(Exploited("autorun", entry_id))
            for d in dirs:
                host.fs.add_file(d + "\\payload.exe", write_grants={user})
                for rec in host.autoruns:
                    if rec.kind == "startup_dir" and norm_path(rec.path) == norm_path(d):
                        rec.exploited = True
                facts.append(Exploited("startup_dir", d))
            return facts

        if a == Action.OVERWRITE_TASK_EXE:
            if not kn.downloaded["exe"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            targets = kn.task_exe_targets()
            if not targets:
                return [ActionFailed(FAIL_NO_TARGET)]
            facts = []
            for name in targets:
                rec = host.get_task(name)
                if rec is not None:
                    rec.exploited = True
                    facts.append(Exploited("task", rec.name))
            return facts

        if a == Action.OVERWRITE_SERVICE_BINARY:
            if not kn.downloaded["service_exe"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            targets = kn.service_binary_targets()
            if not targets:
                return [ActionFailed(FAIL_NO_TARGET)]
            facts = []
            for key in targets:
                rec = host.get_service(key)
                if rec is None:
                    continue
                if not host.fs.exists(rec.exe_path):
                    host.fs.add_file(rec.exe_path, write_grants={user})
                rec.exploited = True
                facts.append(Exploited("service", rec.name))
            return facts

        if a == Action.PLANT_UNQUOTED_PATH_EXE:
            if not kn.downloaded["service_exe"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            targets = kn.hijack_targets()
            if not targets:
                return [ActionFailed(FAIL_NO_TARGET)]
            facts = []
            for key in targets:
                plant = kn.hijack_plant_point(key)
                rec = host.get_service(key)
                if rec is None or plant is None:
                    continue
                host.fs.add_file(plant, write_grants={user})
                rec.exploited = True
                facts.append(Exploited("service", rec.name))
            return facts

        if a == Action.OVERWRITE_DLL:
            if not kn.downloaded["dll"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            targets = kn.writable_dlls()
            if not targets:
                return [ActionFailed(FAIL_NO_TARGET)]
            return self._replace_dlls(targets)

        if a == Action.PLANT_MISSING_DLL:
            if not kn.downloaded["dll"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            targets = kn.missing_dlls()
            if not targets:
                return [ActionFailed(FAIL_NO_TARGET)]
            wdirs = kn.writable_path_dirs()
            if not wdirs:
                return [ActionFailed(FAIL_NO_WRITABLE_PATH_DIR)]
            plant_dir = wdirs[0]
            for dll in targets:
                path = plant_dir + "\\" + dll
                host.fs.add_file(path, write_grants={self.attacker.current_user})
                host.dll_locations[dll] = path
            return self._replace_dlls(targets)

        if a in (Action.RECONFIGURE_SERVICE_TO_EXE, Action.SET_IMAGEPATH_TO_EXE):
            if not kn.downloaded["service_exe"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            targets = (
                kn.reconfig_targets()
                if a == Action.RECONFIGURE_SERVICE_TO_EXE
                else kn.registry_targets()
            )
            if not targets:
                return [ActionFailed(FAIL_NO_TARGET)]
            return self._repoint_services(targets, self._payload_path("service_exe"))

        if a in (Action.RECONFIGURE_SERVICE_ADD_ADMIN, Action.SET_IMAGEPATH_ADD_ADMIN):
            targets = (
                kn.reconfig_targets()
                if a == Action.RECONFIGURE_SERVICE_ADD_ADMIN
                else kn.registry_targets()
            )
            if not targets:
                return [ActionFailed(FAIL_NO_TARGET)]
            cmd = f"net localgroup administrators {user} /add"
            return self._repoint_services(targets, cmd)

        if a == Action.INSTALL_MSI:
            if not kn.downloaded["msi"]:
                return [ActionFailed(FAIL_NOT_DOWNLOADED)]
            machine, user_bit = host.aie_bits()
            if machine and user_bit:
                host.add_admin(user)
            return []

        if a == Action.FIND_UNATTEND_FILES:
            files = tuple((f.path, f.blob) for f in host.unattend_files)
            return [UnattendFound(files)]

        if a == Action.DECODE_BASE64_CREDS:
            if not kn.unattend_blobs:
                return [ActionFailed(FAIL_NOTHING_TO_DECODE)]
            decoded = []
            for _path, blob in kn.unattend_blobs.items():
                text = base64.b64decode(blob.encode()).decode()
                u, _, p = text.partition(":")
                decoded.append((u, p))
                if atk.find_credential(u, p) is None:
                    atk.credentials.append(Credential(u, p, source="unattend"))
            return [DecodedCreds(tuple(decoded))]

        if a == Action.TEST_CREDENTIALS:
            untested = kn.untested_creds()
            if not untested:
                return [ActionFailed(FAIL_NO_UNTESTED_CREDS)]
            if not kn.users_listed:
                return [ActionFailed(FAIL_USERS_UNKNOWN)]
            results = []
            success = False
            for user_l, pw in untested:
                cred = atk.find_credential(user_l, pw)
                display = cred.user if cred is not None else user_l
                urec = host.get_user(user_l)
                valid = urec is not None and urec.password == pw
                admin = bool(valid and host.is_admin(urec.name))
                if cred is not None:
                    cred.tested, cred.valid, cred.is_admin = True, valid, admin
                results.append((display, valid, admin))
                success = success or (valid and admin)
            return [CredTestResult(tuple(results), success)]

        if a == Action.CHECK_SERVICE_PERMISSIONS:
            if not kn.services_listed:
                return [ActionFailed(FAIL_SERVICES_UNKNOWN)]
            return [
                ServiceAclResult(s.name, s.reconfigurable) for s in host.services
            ]

        if a == Action.CHECK_SERVICE_REGISTRY_ACLS:
            if not kn.services_listed:
                return [ActionFailed(FAIL_SERVICES_UNKNOWN)]
            return [
                RegistryAclResult(s.name, s.registry_writable) for s in host.services
            ]

        if a == Action.CHECK_EXECUTABLE_PERMISSIONS:
            pending = list(kn.pending_files)
            if not pending:
                return [ActionFailed(FAIL_NO_PENDING_FILES)]
            facts = []
            for path in pending:
                exists = host.fs.exists(path)
                writable = bool(exists and host.can_write(user, path))
                facts.append(FileAclResult(path, exists, writable))
            return facts

        if a == Action.CHECK_DIRECTORY_PERMISSIONS:
            pending = list(kn.pending_dirs)
            if not pending:
                return [ActionFailed(FAIL_NO_PENDING_DIRS)]
            facts = []
            expected = self._expected_files()
            for d in pending:
                facts.append(DirAclResult(d, host.can_write(user, d)))
                dn = norm_path(d)
                for p in expected:
                    if norm_path(parent_dir(p)) == dn and not host.fs.exists(p):
                        facts.append(FileAclResult(p, exists=False, writable=False))
            return facts

        if a == Action.SCAN_SERVICE_BINARIES_FOR_DLLS:
            if not kn.services_listed:
                return [ActionFailed(FAIL_SERVICES_UNKNOWN)]
            imports = tuple(
                (s.name, tuple(s.dll_imports))
                for s in host.services
                if host.fs.exists(s.exe_path)
            )
            return [DllScan(imports)]

        if a == Action.SEARCH_DLLS:
            if not kn.dll_scan_done or not kn.dll_imports:
                return [ActionFailed(FAIL_NO_KNOWN_DLLS)]
            seen: dict[str, str] = {}
            for names in kn.dll_imports.values():
                for n in names:
                    seen.setdefault(n.lower(), n)
            results = tuple(
                (display, host.dll_locations.get(key))
                for key, display in seen.items()
            )
            return [DllSearch(results)]

        if a == Action.LIST_SERVICES:
            entries = tuple(
                ServiceListing(s.name, s.image_path, s.run_as, s.started)
                for s in host.services
            )
            return [ServiceList(entries)]

        if a == Action.LIST_AUTORUNS:
            entries = tuple(
                AutoRunListing(r.entry_id, r.kind, r.path) for r in host.autoruns
            )
            return [AutoRunList(entries)]

        if a == Action.LIST_TASKS:
            entries = tuple(
                TaskListing(t.name, t.exe_path, t.run_as, t.trigger)
                for t in host.tasks
            )
            return [TaskList(entries)]

        if a == Action.CHECK_INSTALL_ELEVATED_BITS:
            machine, user_bit = host.aie_bits()
            return [InstallElevatedBits(machine, user_bit)]

        if a == Action.CHECK_WINLOGON_CREDS:
            u, p = host.winlogon_creds()
            if u is not None and p is not None and atk.find_credential(u, p) is None:
                atk.credentials.append(Credential(u, p, source="winlogon"))
            return [WinlogonCreds(u, p)]

        if a == Action.LIST_USERS:
            users = tuple(u.name for u in host.users)
            admins = tuple(u.name for u in host.users if host.is_admin(u.name))
            return [UserList(users, admins)]

        if a == Action.WHOAMI:
            return [CurrentUser(user)]

        if a == Action.GET_WINDOWS_PATH:
            return [WindowsPath(tuple(host.path_dirs))]

        raise AssertionError(f"unhandled action {a!r}")

    # ------------------------------------------------------------------

    def _payload_path(self, kind: str) -> str:
        return f"C:\\Users\\{self.attacker.current_user}\\Downloads\\{PAYLOAD_FILES[kind]}"

    def _expected_files(self) -> list[str]:
        """Known object paths whose absence a directory sweep would notice."""
        kn = self.knowledge
        out = []
        for info in kn.services.values():
            if info.exe_path and "\\" in info.exe_path:
                out.append(info.exe_path)
        for listing in kn.autoruns.values():
            if listing.kind == "registry":
                out.append(listing.path)
        for listing in kn.tasks.values():
            out.append(listing.exe_path)
        return out

    def _replace_dlls(self, dll_keys: list[str]) -> list[Fact]:
        facts: list[Fact] = []
        newly: list[str] = []
        for dll in dll_keys:
            facts.append(Exploited("dll", dll))
            for svc_key in self.knowledge.dll_callers(dll):
                rec = self.host.get_service(svc_key)
                if rec is not None and not rec.exploited:
                    rec.exploited = True
                    newly.append(rec.name)
        for name in newly:
            facts.append(Exploited("service", name))
        return facts

    def _repoint_services(self, targets: list[str], new_image: str) -> list[Fact]:
        facts = []
        for key in targets:
            rec = self.host.get_service(key)
            if rec is None:
                continue
            rec.image_path = new_image
            self.host.registry[service_imagepath_key(rec.name)] = new_image
            rec.exploited = True
            facts.append(Exploited("service", rec.name))
        return facts


def reset(seed: int, cfg: Optional[EnvConfig] = None) -> EscalationEnv:
    """Generate the host for ``seed`` and wrap it in a fresh environment."""
    cfg = cfg if cfg is not None else EnvConfig()
    return EscalationEnv(generate_host(seed, cfg), cfg)


def step(env: EscalationEnv, action: int) -> StepResult:
    return env.step(action)
