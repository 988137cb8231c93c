"""Ground-truth model of the simulated Windows host.

The host is the hidden state of the decision process: a filesystem tree with
per-principal ACLs, a registry, services, scheduled tasks, autorun entries,
local users and the attacker's own session context.  Observation facts are
derived from this state; the agent never reads it directly.

Paths follow Windows semantics: backslash separators, case-insensitive
comparison, optional surrounding quotes on service image paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

SYSTEM_PRINCIPAL = "SYSTEM"

WINLOGON_USER_KEY = (
    "HKLM\\SOFTWARE\\Microsoft\\Windows NT\\CurrentVersion\\Winlogon\\DefaultUserName"
)
WINLOGON_PASSWORD_KEY = (
    "HKLM\\SOFTWARE\\Microsoft\\Windows NT\\CurrentVersion\\Winlogon\\DefaultPassword"
)
AIE_MACHINE_KEY = (
    "HKLM\\SOFTWARE\\Policies\\Microsoft\\Windows\\Installer\\AlwaysInstallElevated"
)
AIE_USER_KEY = (
    "HKCU\\SOFTWARE\\Policies\\Microsoft\\Windows\\Installer\\AlwaysInstallElevated"
)


def service_imagepath_key(name: str) -> str:
    return f"HKLM\\SYSTEM\\CurrentControlSet\\Services\\{name}\\ImagePath"


# ---------------------------------------------------------------------------
# Path helpers


def strip_quotes(p: str) -> str:
    p = p.strip()
    if len(p) >= 2 and p[0] == '"' and p[-1] == '"':
        return p[1:-1]
    return p


def norm_path(p: str) -> str:
    """Canonical form used for all path comparison: unquoted, lower-case,
    backslash-separated, no trailing separator."""
    p = strip_quotes(p).replace("/", "\\").lower()
    while p.endswith("\\") and len(p) > 3:
        p = p[:-1]
    return p


def parent_dir(p: str) -> str:
    n = strip_quotes(p)
    i = n.rfind("\\")
    if i <= 1:
        return n
    head = n[:i]
    if head.endswith(":"):
        head += "\\"
    return head


def basename(p: str) -> str:
    n = strip_quotes(p)
    return n[n.rfind("\\") + 1:]


def is_quoted(p: str) -> bool:
    p = p.strip()
    return len(p) >= 2 and p[0] == '"' and p[-1] == '"'


def in_windows_dir(p: str) -> bool:
    return norm_path(p).startswith("c:\\windows")


def unquoted_hijack_points(raw_path: str) -> list[tuple[str, str]]:
    """Spurious executables the service manager would try before the real
    binary of an unquoted path containing spaces.

    Returns (candidate exe path, containing directory) pairs in resolution
    order.  Empty for quoted or space-free paths.
    """
    if is_quoted(raw_path) or " " not in raw_path:
        return []
    out = []
    for i, ch in enumerate(raw_path):
        if ch == " ":
            prefix = raw_path[:i]
            if "\\" not in prefix:
                continue
            candidate = prefix + ".exe"
            out.append((candidate, parent_dir(candidate)))
    return out


# ---------------------------------------------------------------------------
# Filesystem


@dataclass
class FsNode:
    name: str
    is_dir: bool
    children: dict[str, "FsNode"] = field(default_factory=dict)
    write_grants: set[str] = field(default_factory=set)

    def child(self, name: str) -> Optional["FsNode"]:
        return self.children.get(name.lower())


class Fs:
    """Case-insensitive filesystem tree rooted at the drive letter.

    Write access is explicit: a principal may write a node iff it appears in
    the node's grant set (administrators and SYSTEM are implicitly granted
    everywhere; that check lives in SimHost).  Directory write means creating
    or replacing children; file write means modifying content.  There is no
    ACL inheritance — a file inside a writable folder is not itself writable
    unless granted, matching how explicit ACLs behave.
    """

    def __init__(self):
        self.root = FsNode(name="C:", is_dir=True)

    @staticmethod
    def _parts(path: str) -> Optional[list[str]]:
        n = norm_path(path)
        parts = [p for p in n.split("\\") if p]
        if not parts or parts[0] != "c:":
            return None
        return parts[1:]

    def resolve(self, path: str) -> Optional[FsNode]:
        parts = self._parts(path)
        if parts is None:
            return None
        node = self.root
        for part in parts:
            node = node.children.get(part)
            if node is None:
                return None
        return node

    def exists(self, path: str) -> bool:
        return self.resolve(path) is not None

    def is_dir(self, path: str) -> bool:
        node = self.resolve(path)
        return node is not None and node.is_dir

    def add_dir(self, path: str, write_grants: Iterable[str] = ()) -> FsNode:
        node = self.root
        display_parts = [p for p in strip_quotes(path).replace("/", "\\").split("\\") if p][1:]
        for disp in display_parts:
            key = disp.lower()
            nxt = node.children.get(key)
            if nxt is None:
                nxt = FsNode(name=disp, is_dir=True)
                node.children[key] = nxt
            node = nxt
        node.write_grants |= set(write_grants)
        return node

    def add_file(self, path: str, write_grants: Iterable[str] = ()) -> FsNode:
        parent = self.add_dir(parent_dir(path))
        disp = basename(path)
        key = disp.lower()
        node = parent.children.get(key)
        if node is None:
            node = FsNode(name=disp, is_dir=False)
            parent.children[key] = node
        node.write_grants |= set(write_grants)
        return node

    def remove(self, path: str) -> None:
        parent = self.resolve(parent_dir(path))
        if parent is not None:
            parent.children.pop(basename(path).lower(), None)

    def grant_write(self, path: str, principal: str) -> None:
        node = self.resolve(path)
        if node is None:
            raise KeyError(f"no such path: {path!r}")
        node.write_grants.add(principal)

    def to_dict(self) -> dict:
        def conv(node: FsNode) -> dict:
            d: dict = {"name": node.name, "dir": node.is_dir}
            if node.write_grants:
                d["write_grants"] = sorted(node.write_grants)
            if node.children:
                d["children"] = [conv(c) for c in node.children.values()]
            return d

        return conv(self.root)


# ---------------------------------------------------------------------------
# Host records


@dataclass
class ServiceRec:
    """A Windows service.  ``image_path`` is the raw configured string and may
    be quoted and may contain spaces; ``exe_path`` strips the quotes."""

    name: str
    image_path: str
    run_as: str
    started: bool
    elevated: bool
    reconfigurable: bool = False
    registry_writable: bool = False
    dll_imports: list[str] = field(default_factory=list)
    exploited: bool = False

    @property
    def exe_path(self) -> str:
        return strip_quotes(self.image_path)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "image_path": self.image_path,
            "run_as": self.run_as,
            "started": self.started,
            "elevated": self.elevated,
            "reconfigurable": self.reconfigurable,
            "registry_writable": self.registry_writable,
            "dll_imports": list(self.dll_imports),
            "exploited": self.exploited,
        }


@dataclass
class AutoRunRec:
    """Registry autorun value (``path`` is the executable) or a startup
    folder (``path`` is the directory)."""

    entry_id: str
    kind: str  # "registry" | "startup_dir"
    path: str
    exploited: bool = False

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "kind": self.kind,
            "path": self.path,
            "exploited": self.exploited,
        }


@dataclass
class TaskRec:
    name: str
    exe_path: str
    run_as: str
    elevated: bool
    trigger: str
    exploited: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "exe_path": self.exe_path,
            "run_as": self.run_as,
            "elevated": self.elevated,
            "trigger": self.trigger,
            "exploited": self.exploited,
        }


@dataclass
class UserRec:
    name: str
    password: str
    is_admin: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "password": self.password, "is_admin": self.is_admin}


@dataclass
class UnattendFile:
    path: str
    blob: str  # base64("user:password")

    def to_dict(self) -> dict:
        return {"path": self.path, "blob": self.blob}


@dataclass
class Credential:
    user: str
    password: str
    source: str  # "winlogon" | "unattend"
    tested: bool = False
    valid: bool = False
    is_admin: bool = False

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "password": self.password,
            "source": self.source,
            "tested": self.tested,
            "valid": self.valid,
            "is_admin": self.is_admin,
        }


ARTIFACT_KINDS = ("exe", "service_exe", "dll", "msi")


@dataclass
class AttackerContext:
    """Attacker-side session state: who we run as, which payloads exist on
    the attack box, which were downloaded to the target, and credentials
    harvested so far."""

    current_user: str
    created: dict[str, bool] = field(
        default_factory=lambda: {k: False for k in ARTIFACT_KINDS}
    )
    downloaded: dict[str, bool] = field(
        default_factory=lambda: {k: False for k in ARTIFACT_KINDS}
    )
    credentials: list[Credential] = field(default_factory=list)

    def find_credential(self, user: str, password: str) -> Optional[Credential]:
        for c in self.credentials:
            if c.user.lower() == user.lower() and c.password == password:
                return c
        return None

    def to_dict(self) -> dict:
        return {
            "current_user": self.current_user,
            "created": dict(self.created),
            "downloaded": dict(self.downloaded),
            "credentials": [c.to_dict() for c in self.credentials],
        }


# ---------------------------------------------------------------------------
# The host itself


@dataclass
class SimHost:
    seed: int
    fs: Fs
    registry: dict[str, str | int]
    services: list[ServiceRec]
    autoruns: list[AutoRunRec]
    tasks: list[TaskRec]
    users: list[UserRec]
    path_dirs: list[str]
    unattend_files: list[UnattendFile]
    startup_dirs: list[str]
    injected: list[str]
    decoys: list[str]
    # normalized DLL name -> path of the file that would be loaded, or None
    # if the import cannot be resolved anywhere on the search path
    dll_locations: dict[str, Optional[str]] = field(default_factory=dict)
    admin_members: set[str] = field(default_factory=set)

    def __post_init__(self):
        for u in self.users:
            if u.is_admin:
                self.admin_members.add(u.name)

    # -- lookups ----------------------------------------------------------

    def get_service(self, name: str) -> Optional[ServiceRec]:
        for s in self.services:
            if s.name.lower() == name.lower():
                return s
        return None

    def get_task(self, name: str) -> Optional[TaskRec]:
        for t in self.tasks:
            if t.name.lower() == name.lower():
                return t
        return None

    def get_user(self, name: str) -> Optional[UserRec]:
        for u in self.users:
            if u.name.lower() == name.lower():
                return u
        return None

    def is_admin(self, principal: str) -> bool:
        if principal == SYSTEM_PRINCIPAL:
            return True
        return any(principal.lower() == m.lower() for m in self.admin_members)

    # -- ACL queries (total: every principal/path pair has an answer) ------

    def can_write(self, principal: str, path: str) -> bool:
        """True iff ``principal`` may modify the node at ``path``.  Missing
        paths are not writable (creation rights are a property of the parent
        directory, see ``can_create``)."""
        if self.is_admin(principal):
            return True
        node = self.fs.resolve(path)
        if node is None:
            return False
        return principal in node.write_grants

    def can_create(self, principal: str, path: str) -> bool:
        """True iff ``principal`` may create a new node at ``path`` (i.e. the
        parent directory exists and is writable)."""
        if self.is_admin(principal):
            return True
        parent = self.fs.resolve(parent_dir(path))
        if parent is None or not parent.is_dir:
            return False
        return principal in parent.write_grants

    def aie_bits(self) -> tuple[bool, bool]:
        return (
            bool(self.registry.get(AIE_MACHINE_KEY, 0)),
            bool(self.registry.get(AIE_USER_KEY, 0)),
        )

    def winlogon_creds(self) -> tuple[Optional[str], Optional[str]]:
        u = self.registry.get(WINLOGON_USER_KEY)
        p = self.registry.get(WINLOGON_PASSWORD_KEY)
        return (u if isinstance(u, str) else None, p if isinstance(p, str) else None)

    def add_admin(self, principal: str) -> None:
        self.admin_members.add(principal)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "injected": list(self.injected),
            "decoys": list(self.decoys),
            "users": [u.to_dict() for u in self.users],
            "admin_members": sorted(self.admin_members),
            "services": [s.to_dict() for s in self.services],
            "autoruns": [a.to_dict() for a in self.autoruns],
            "tasks": [t.to_dict() for t in self.tasks],
            "path_dirs": list(self.path_dirs),
            "startup_dirs": list(self.startup_dirs),
            "unattend_files": [f.to_dict() for f in self.unattend_files],
            "dll_locations": dict(self.dll_locations),
            "registry": dict(self.registry),
            "filesystem": self.fs.to_dict(),
        }


SUCCESS_PATH_ADMIN_GROUP = "admin-group"
SUCCESS_PATH_CREDENTIALS = "credentials"
SUCCESS_PATH_ELEVATED_OVERWRITE = "elevated-overwrite"


def check_success(host: SimHost, attacker: AttackerContext) -> Optional[str]:
    """Terminal condition, first matching route wins.

    1. the attacker's user is now in the local administrators group,
    2. the attacker holds verified credentials of an administrator,
    3. an executable that runs elevated (autorun entry, startup-folder
       program, or elevated scheduled task) has been overwritten.
    """
    if host.is_admin(attacker.current_user):
        return SUCCESS_PATH_ADMIN_GROUP
    for c in attacker.credentials:
        if c.tested and c.valid and c.is_admin:
            return SUCCESS_PATH_CREDENTIALS
    for a in host.autoruns:
        if a.exploited:
            return SUCCESS_PATH_ELEVATED_OVERWRITE
    for t in host.tasks:
        if t.exploited and t.elevated:
            return SUCCESS_PATH_ELEVATED_OVERWRITE
    return None
