"""Action space of the escalation agent.

The agent controls a Windows host through 38 high-level actions.  They fall
into three groups:

* artifact actions (A1-A8): build a payload on the attacker box, or download
  a previously built payload onto the target,
* exploit actions (A9-A21): tamper with the host (overwrite binaries, plant
  files, re-configure services, install an MSI) or run what was tampered,
* discovery actions (A22-A38): enumerate the host and emit observation facts
  without mutating it.

Action identifiers are stable 1-based integers; network logits use the same
order shifted to 0-based.
"""

from __future__ import annotations

from enum import IntEnum


class Action(IntEnum):
    CREATE_EXE = 1
    CREATE_SERVICE_EXE = 2
    COMPILE_DLL = 3
    CREATE_MSI = 4
    DOWNLOAD_EXE = 5
    DOWNLOAD_SERVICE_EXE = 6
    DOWNLOAD_DLL = 7
    DOWNLOAD_MSI = 8
    START_EXPLOITED_SERVICE = 9
    STOP_EXPLOITED_SERVICE = 10
    OVERWRITE_AUTORUN_EXE = 11
    OVERWRITE_TASK_EXE = 12
    OVERWRITE_SERVICE_BINARY = 13
    PLANT_UNQUOTED_PATH_EXE = 14
    OVERWRITE_DLL = 15
    PLANT_MISSING_DLL = 16
    RECONFIGURE_SERVICE_TO_EXE = 17
    RECONFIGURE_SERVICE_ADD_ADMIN = 18
    SET_IMAGEPATH_TO_EXE = 19
    SET_IMAGEPATH_ADD_ADMIN = 20
    INSTALL_MSI = 21
    FIND_UNATTEND_FILES = 22
    DECODE_BASE64_CREDS = 23
    TEST_CREDENTIALS = 24
    CHECK_SERVICE_PERMISSIONS = 25
    CHECK_SERVICE_REGISTRY_ACLS = 26
    CHECK_EXECUTABLE_PERMISSIONS = 27
    CHECK_DIRECTORY_PERMISSIONS = 28
    SCAN_SERVICE_BINARIES_FOR_DLLS = 29
    SEARCH_DLLS = 30
    LIST_SERVICES = 31
    LIST_AUTORUNS = 32
    LIST_TASKS = 33
    CHECK_INSTALL_ELEVATED_BITS = 34
    CHECK_WINLOGON_CREDS = 35
    LIST_USERS = 36
    WHOAMI = 37
    GET_WINDOWS_PATH = 38


#: Human-readable names, as they appear in episode traces and reports.
ACTION_NAMES: dict[Action, str] = {
    Action.CREATE_EXE: "Create a malicious executable in Kali Linux",
    Action.CREATE_SERVICE_EXE: "Create a malicious service executable in Kali Linux",
    Action.COMPILE_DLL: "Compile a custom malicious DLL in Kali Linux",
    Action.CREATE_MSI: "Create a malicious MSI in Kali Linux",
    Action.DOWNLOAD_EXE: "Download a malicious executable in Windows",
    Action.DOWNLOAD_SERVICE_EXE: "Download a malicious service executable in Windows",
    Action.DOWNLOAD_DLL: "Download a malicious DLL in Windows",
    Action.DOWNLOAD_MSI: "Download a malicious MSI in Windows",
    Action.START_EXPLOITED_SERVICE: "Start an exploited service",
    Action.STOP_EXPLOITED_SERVICE: "Stop an exploited service",
    Action.OVERWRITE_AUTORUN_EXE: "Overwrite the executable of an autorun",
    Action.OVERWRITE_TASK_EXE: "Overwrite the executable of a scheduled task",
    Action.OVERWRITE_SERVICE_BINARY: "Overwrite a service binary",
    Action.PLANT_UNQUOTED_PATH_EXE: (
        "Move a malicious executable so that it is executed by an unquoted service path"
    ),
    Action.OVERWRITE_DLL: "Overwrite a DLL",
    Action.PLANT_MISSING_DLL: (
        "Move a malicious DLL to a folder on Windows path to replace a missing DLL"
    ),
    Action.RECONFIGURE_SERVICE_TO_EXE: "Re-configure service to use a malicious executable",
    Action.RECONFIGURE_SERVICE_ADD_ADMIN: (
        "Re-configure service to add the user to local administrators"
    ),
    Action.SET_IMAGEPATH_TO_EXE: "Change service registry to point to a malicious executable",
    Action.SET_IMAGEPATH_ADD_ADMIN: (
        "Change service registry to add the user to local administrators"
    ),
    Action.INSTALL_MSI: "Install a malicious MSI file",
    Action.FIND_UNATTEND_FILES: "Search for unattend* sysprep* unattended* files",
    Action.DECODE_BASE64_CREDS: "Decode base64 credentials",
    Action.TEST_CREDENTIALS: "Test credentials",
    Action.CHECK_SERVICE_PERMISSIONS: "Check service permissions with accesschk64",
    Action.CHECK_SERVICE_REGISTRY_ACLS: "Check the ACLs of the service registry with Get-ACL",
    Action.CHECK_EXECUTABLE_PERMISSIONS: "Check executable permissions with icacls",
    Action.CHECK_DIRECTORY_PERMISSIONS: "Check directory permissions with icacls",
    Action.SCAN_SERVICE_BINARIES_FOR_DLLS: "Analyze service executables for DLLs",
    Action.SEARCH_DLLS: "Search for DLLs",
    Action.LIST_SERVICES: "Get a list of services",
    Action.LIST_AUTORUNS: "Get a list of AutoRuns",
    Action.LIST_TASKS: "Get a list of scheduled tasks",
    Action.CHECK_INSTALL_ELEVATED_BITS: "Check AlwaysInstallElevated bits",
    Action.CHECK_WINLOGON_CREDS: "Check for passwords in Winlogon registry",
    Action.LIST_USERS: "Get a list of local users and administrators",
    Action.WHOAMI: "Get the current user",
    Action.GET_WINDOWS_PATH: "Get the Windows path",
}

N_ACTIONS = len(Action)

ARTIFACT_ACTIONS = tuple(Action(i) for i in range(1, 9))
EXPLOIT_ACTIONS = tuple(Action(i) for i in range(9, 22))
DISCOVERY_ACTIONS = tuple(Action(i) for i in range(22, 39))


def action_name(a: int) -> str:
    return ACTION_NAMES[Action(a)]
