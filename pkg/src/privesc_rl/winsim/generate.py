"""Procedural host generator.

Each seed yields one fully populated host: base filesystem and accounts, a
crowd of benign background services / autoruns / scheduled tasks, the
requested weaknesses, and (independently rolled) decoys — objects that look
interesting but cannot yield elevation, such as a re-configurable service
that does not run elevated.

Names come from a fixed synthetic vocabulary with numeric suffixes, so hosts
look plausible without referencing real products.
"""

from __future__ import annotations

import base64
import random

from ..config import DECOY_KINDS, EnvConfig, VULN_IDS
from .host import (
    AIE_MACHINE_KEY,
    AIE_USER_KEY,
    Fs,
    ServiceRec,
    AutoRunRec,
    TaskRec,
    SimHost,
    UnattendFile,
    UserRec,
    WINLOGON_PASSWORD_KEY,
    WINLOGON_USER_KEY,
    service_imagepath_key,
)

WORDS = (
    "aurora", "basalt", "cedar", "delta", "ember", "falcon", "garnet",
    "harbor", "indigo", "juniper", "krypton", "lumen", "meadow", "nimbus",
    "onyx", "pioneer", "quartz", "raven", "sierra", "topaz", "umber",
    "vertex", "willow", "zephyr",
)

SYSTEM_DLL_POOL = (
    "netcfg32.dll", "sysio.dll", "wincore.dll", "msgrt.dll", "drvlink.dll",
    "uiready.dll", "cryptbase32.dll", "taskcomm.dll", "svchelper.dll",
    "regio.dll",
)

STARTUP_DIR = "C:\\ProgramData\\Microsoft\\Windows\\Start Menu\\Programs\\Startup"
RUN_KEY_PREFIX = "HKLM\\SOFTWARE\\Microsoft\\Windows\\CurrentVersion\\Run\\"
CURRENT_USER = "user"

TASK_TRIGGERS = ("daily", "logon", "boot", "idle")


class _Namer:
    """Unique synthetic names: word (+ optional second word) + counter."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.n = 100

    def word(self) -> str:
        return self.rng.choice(WORDS)

    def num(self) -> int:
        self.n += 1
        return self.n

    def app(self, spaces: bool = False) -> str:
        if spaces:
            return f"{self.word().capitalize()} {self.word().capitalize()} {self.num()}"
        return f"{self.word().capitalize()}{self.num()}"

    def service(self) -> str:
        return f"{self.word()}svc{self.num()}"

    def dll(self) -> str:
        return f"{self.word()}link{self.num()}.dll"


def _quote(path: str) -> str:
    return f'"{path}"'


def _b64(user: str, password: str) -> str:
    return base64.b64encode(f"{user}:{password}".encode()).decode()


class _Builder:
    def __init__(self, seed: int, cfg: EnvConfig):
        self.seed = seed
        self.cfg = cfg
        self.rng = random.Random(seed)
        self.names = _Namer(self.rng)
        self.fs = Fs()
        self.registry: dict[str, str | int] = {}
        self.services: list[ServiceRec] = []
        self.autoruns: list[AutoRunRec] = []
        self.tasks: list[TaskRec] = []
        self.users: list[UserRec] = []
        self.path_dirs: list[str] = []
        self.unattend_files: list[UnattendFile] = []
        self.dll_locations: dict[str, str | None] = {}
        self.injected: list[str] = []
        self.decoys: list[str] = []

    # -- base layout -------------------------------------------------------

    def base(self):
        for d in (
            "C:\\Windows\\System32",
            "C:\\Windows\\Tasks",
            "C:\\Program Files",
            "C:\\ProgramData",
            f"C:\\Users\\{CURRENT_USER}",
            STARTUP_DIR,
        ):
            self.fs.add_dir(d)
        # the attacker can always stage downloads in their own profile
        self.fs.add_dir(f"C:\\Users\\{CURRENT_USER}\\Downloads", write_grants={CURRENT_USER})
        self.path_dirs = ["C:\\Windows\\System32", "C:\\Windows"]
        for name in SYSTEM_DLL_POOL:
            path = f"C:\\Windows\\System32\\{name}"
            self.fs.add_file(path)
            self.dll_locations[name.lower()] = path

        pw = lambda: f"{self.names.word().capitalize()}{self.rng.randint(1000, 9999)}!"
        self.users.append(UserRec(CURRENT_USER, pw(), is_admin=False))
        self.users.append(UserRec("Administrator", pw(), is_admin=True))
        if self.rng.random() < 0.5:
            self.users.append(UserRec(f"{self.names.word()}.adm", pw(), is_admin=True))
        for _ in range(self.rng.randint(0, 2)):
            self.users.append(UserRec(f"{self.names.word()}.{self.names.word()}", pw(), is_admin=False))
        self.registry[AIE_MACHINE_KEY] = 0
        self.registry[AIE_USER_KEY] = 0

    # -- record helpers ----------------------------------------------------

    def _register_service(self, rec: ServiceRec):
        self.services.append(rec)
        self.registry[service_imagepath_key(rec.name)] = rec.image_path

    def _sample_dlls(self) -> list[str]:
        lo, hi = self.cfg.dlls_per_service
        k = self.rng.randint(lo, hi)
        return list(self.rng.sample(SYSTEM_DLL_POOL, k))

    def _add_background_service(self):
        name = self.names.service()
        style = self.rng.random()
        if style < 0.2:
            exe = f"C:\\Windows\\System32\\{name}.exe"
            image = exe
        elif style < 0.6:
            app = self.names.app(spaces=False)
            exe = f"C:\\Program Files\\{app}\\{name}.exe"
            image = exe
        else:
            app = self.names.app(spaces=True)
            exe = f"C:\\Program Files\\{app}\\{name}.exe"
            image = _quote(exe)
        self.fs.add_file(exe)
        elevated = self.rng.random() < 0.6
        self._register_service(ServiceRec(
            name=name,
            image_path=image,
            run_as="LocalSystem" if elevated else self.rng.choice(["LocalService", "NetworkService"]),
            started=self.rng.random() < 0.7,
            elevated=elevated,
            dll_imports=self._sample_dlls(),
        ))

    def _add_background_autorun(self):
        name = f"{self.names.word()}tray{self.names.num()}"
        if self.rng.random() < 0.3:
            exe = f"C:\\Windows\\System32\\{name}.exe"
        else:
            exe = f"C:\\Program Files\\{self.names.app()}\\{name}.exe"
        self.fs.add_file(exe)
        self.autoruns.append(AutoRunRec(
            entry_id=f"{RUN_KEY_PREFIX}{name}", kind="registry", path=exe,
        ))

    def _add_background_task(self, elevated=None, exe_grants=(), in_windows=None):
        name = f"{self.names.word().capitalize()}Update{self.names.num()}"
        if in_windows is None:
            in_windows = self.rng.random() < 0.3
        if in_windows:
            exe = f"C:\\Windows\\Tasks\\{name}.exe"
        else:
            exe = f"C:\\Program Files\\{self.names.app()}\\{name}.exe"
        self.fs.add_file(exe, write_grants=exe_grants)
        if elevated is None:
            elevated = self.rng.random() < 0.5
        rec = TaskRec(
            name=name,
            exe_path=exe,
            run_as="SYSTEM" if elevated else CURRENT_USER,
            elevated=elevated,
            trigger=self.rng.choice(TASK_TRIGGERS),
        )
        self.tasks.append(rec)
        return rec

    def _vuln_service(self, **overrides) -> ServiceRec:
        """Dedicated elevated, stopped service used as a weakness carrier."""
        name = self.names.service()
        app = self.names.app(spaces=False)
        exe = f"C:\\Program Files\\{app}\\{name}.exe"
        rec = ServiceRec(
            name=name,
            image_path=exe,
            run_as="LocalSystem",
            started=False,
            elevated=True,
            dll_imports=self._sample_dlls(),
        )
        exe_grants = overrides.pop("exe_grants", ())
        for k, v in overrides.items():
            setattr(rec, k, v)
        self.fs.add_file(rec.exe_path, write_grants=exe_grants)
        self._register_service(rec)
        return rec

    # -- weaknesses --------------------------------------------------------

    def inject(self, vuln: str):
        self.injected.append(vuln)
        getattr(self, "_inject_" + vuln.replace(".", "_"))()

    def _inject_1_1(self):
        # service imports a DLL that resolves nowhere; a folder on the
        # Windows path accepts writes from the current user
        missing = self.names.dll()
        rec = self._vuln_service()
        rec.dll_imports = self._sample_dlls()[:2] + [missing]
        self.dll_locations[missing.lower()] = None
        bindir = f"C:\\Program Files\\{self.names.app()}\\bin"
        self.fs.add_dir(bindir, write_grants={CURRENT_USER})
        self.path_dirs.append(bindir)

    def _inject_1_2(self):
        writable = self.names.dll()
        rec = self._vuln_service()
        app = self.names.app()
        path = f"C:\\Program Files\\{app}\\{writable}"
        self.fs.add_file(path, write_grants={CURRENT_USER})
        self.dll_locations[writable.lower()] = path
        rec.dll_imports = self._sample_dlls()[:2] + [writable]

    def _inject_2(self):
        self._vuln_service(reconfigurable=True)

    def _inject_3(self):
        # unquoted image path with spaces after a writable directory: the
        # truncated candidate <container>\<word>.exe can be planted
        name = self.names.service()
        container_app = self.names.app(spaces=False)
        subdir = f"{self.names.word()} {self.names.word()} suite"
        exe = f"C:\\Program Files\\{container_app}\\{subdir}\\{name}.exe"
        rec = ServiceRec(
            name=name,
            image_path=exe,  # unquoted on purpose
            run_as="LocalSystem",
            started=False,
            elevated=True,
            dll_imports=self._sample_dlls(),
        )
        self.fs.add_file(exe)
        self.fs.grant_write(f"C:\\Program Files\\{container_app}", CURRENT_USER)
        self._register_service(rec)

    def _inject_4(self):
        self._vuln_service(registry_writable=True)

    def _inject_5(self):
        self._vuln_service(exe_grants={CURRENT_USER})

    def _inject_6(self):
        # configured binary does not exist and its folder accepts writes;
        # quoted path so this cannot be confused with a truncation hijack
        name = self.names.service()
        app = self.names.app(spaces=True)
        exe = f"C:\\Program Files\\{app}\\{name}.exe"
        rec = ServiceRec(
            name=name,
            image_path=_quote(exe),
            run_as="LocalSystem",
            started=False,
            elevated=True,
            dll_imports=self._sample_dlls(),
        )
        self.fs.add_dir(f"C:\\Program Files\\{app}", write_grants={CURRENT_USER})
        self._register_service(rec)

    def _inject_7(self):
        name = f"{self.names.word()}tray{self.names.num()}"
        exe = f"C:\\Program Files\\{self.names.app()}\\{name}.exe"
        self.fs.add_file(exe, write_grants={CURRENT_USER})
        self.autoruns.append(AutoRunRec(
            entry_id=f"{RUN_KEY_PREFIX}{name}", kind="registry", path=exe,
        ))

    def _inject_8(self):
        self.registry[AIE_MACHINE_KEY] = 1
        self.registry[AIE_USER_KEY] = 1

    def _inject_9(self):
        admin = next(u for u in self.users if u.is_admin)
        self.registry[WINLOGON_USER_KEY] = admin.name
        self.registry[WINLOGON_PASSWORD_KEY] = admin.password

    def _inject_10(self):
        admin = next(u for u in self.users if u.is_admin)
        path = "C:\\Windows\\Panther\\Unattend.xml"
        self.fs.add_file(path)
        self.unattend_files.append(UnattendFile(path, _b64(admin.name, admin.password)))

    def _inject_11(self):
        self._add_background_task(elevated=True, exe_grants={CURRENT_USER}, in_windows=False)

    def _inject_12(self):
        self.fs.grant_write(STARTUP_DIR, CURRENT_USER)

    # -- decoys ------------------------------------------------------------

    def add_decoy(self, kind: str):
        self.decoys.append(kind)
        getattr(self, "_decoy_" + kind)()

    def _decoy_service(self):
        """Looks exploitable, but runs without elevation."""
        flavor = self.rng.choice(("reconfig", "registry", "exe", "missing", "unquoted"))
        name = self.names.service()
        if flavor == "unquoted":
            container_app = self.names.app(spaces=False)
            subdir = f"{self.names.word()} {self.names.word()} tools"
            exe = f"C:\\Program Files\\{container_app}\\{subdir}\\{name}.exe"
            image = exe
            self.fs.add_file(exe)
            self.fs.grant_write(f"C:\\Program Files\\{container_app}", CURRENT_USER)
        else:
            app = self.names.app(spaces=False)
            exe = f"C:\\Program Files\\{app}\\{name}.exe"
            image = exe
            if flavor == "missing":
                self.fs.add_dir(f"C:\\Program Files\\{app}", write_grants={CURRENT_USER})
            elif flavor == "exe":
                self.fs.add_file(exe, write_grants={CURRENT_USER})
            else:
                self.fs.add_file(exe)
        self._register_service(ServiceRec(
            name=name,
            image_path=image,
            run_as="LocalService",
            started=self.rng.random() < 0.5,
            elevated=False,
            reconfigurable=(flavor == "reconfig"),
            registry_writable=(flavor == "registry"),
            dll_imports=self._sample_dlls(),
        ))

    def _decoy_quoted(self):
        """Writable application folder, but the service path is quoted and
        its binary exists and rejects writes — nothing to hijack."""
        name = self.names.service()
        app = self.names.app(spaces=True)
        exe = f"C:\\Program Files\\{app}\\{name}.exe"
        self.fs.add_file(exe)
        self.fs.grant_write(f"C:\\Program Files\\{app}", CURRENT_USER)
        elevated = self.rng.random() < 0.5
        self._register_service(ServiceRec(
            name=name,
            image_path=_quote(exe),
            run_as="LocalSystem" if elevated else "LocalService",
            started=self.rng.random() < 0.5,
            elevated=elevated,
            dll_imports=self._sample_dlls(),
        ))

    def _decoy_creds(self):
        victim = next((u for u in self.users if not u.is_admin and u.name != CURRENT_USER), None)
        if victim is None:
            victim = UserRec(f"{self.names.word()}.{self.names.word()}",
                             f"{self.names.word().capitalize()}{self.rng.randint(1000, 9999)}!",
                             is_admin=False)
            self.users.append(victim)
        self.registry[WINLOGON_USER_KEY] = victim.name
        self.registry[WINLOGON_PASSWORD_KEY] = victim.password

    def _decoy_pathdir(self):
        bindir = f"C:\\Program Files\\{self.names.app()}\\bin"
        self.fs.add_dir(bindir, write_grants={CURRENT_USER})
        self.path_dirs.append(bindir)

    def _decoy_msi_bit(self):
        self.registry[AIE_MACHINE_KEY] = 1
        self.registry[AIE_USER_KEY] = 0

    def _decoy_task(self):
        self._add_background_task(elevated=False, exe_grants={CURRENT_USER})

    # -- assembly ----------------------------------------------------------

    def build(self) -> SimHost:
        self.base()

        vulns = self._pick_vulns()
        n_services = self.rng.randint(*self.cfg.n_services)
        n_autoruns = self.rng.randint(*self.cfg.n_autoruns)
        n_tasks = self.rng.randint(*self.cfg.n_tasks)

        decoy_roll = {
            kind: self.rng.random() < self.cfg.decoy_rates.get(kind, 0.0)
            for kind in DECOY_KINDS
        }
        if "1.1" in vulns:
            decoy_roll["pathdir"] = False
        if "9" in vulns:
            decoy_roll["creds"] = False
        if "8" in vulns:
            decoy_roll["msi_bit"] = False

        need_services = sum(v in ("1.1", "1.2", "2", "3", "4", "5", "6") for v in vulns)
        need_services += int(decoy_roll["service"]) + int(decoy_roll["quoted"])
        need_autoruns = sum(v == "7" for v in vulns)
        need_tasks = sum(v == "11" for v in vulns) + int(decoy_roll["task"])

        for _ in range(max(0, n_services - need_services)):
            self._add_background_service()
        for _ in range(max(0, n_autoruns - need_autoruns)):
            self._add_background_autorun()
        for _ in range(max(0, n_tasks - need_tasks)):
            self._add_background_task()

        for v in vulns:
            self.inject(v)
        for kind in DECOY_KINDS:
            if decoy_roll[kind]:
                self.add_decoy(kind)

        # one autorun row always exists: the all-users startup folder
        self.autoruns.append(AutoRunRec(
            entry_id=f"startup-dir:{STARTUP_DIR}", kind="startup_dir", path=STARTUP_DIR,
        ))

        host = SimHost(
            seed=self.seed,
            fs=self.fs,
            registry=self.registry,
            services=self.services,
            autoruns=self.autoruns,
            tasks=self.tasks,
            users=self.users,
            path_dirs=self.path_dirs,
            unattend_files=self.unattend_files,
            startup_dirs=[STARTUP_DIR],
            injected=list(vulns),
            decoys=self.decoys,
            dll_locations=self.dll_locations,
        )
        return host

    def _pick_vulns(self) -> list[str]:
        mode = self.cfg.vuln_mode
        if mode.kind == "single-random":
            return [self.rng.choice(VULN_IDS)]
        if mode.kind == "fixed":
            return list(mode.ids)
        ordered = [v for v in VULN_IDS if v in mode.ids]
        return ordered


def generate_host(seed: int, cfg: EnvConfig | None = None) -> SimHost:
    """Deterministically build one host from ``seed`` and ``cfg``."""
    return _Builder(seed, cfg if cfg is not None else EnvConfig()).build()
