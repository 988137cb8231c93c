"""Command line front end: train, eval, trace, inspect.

Every artifact written by a subcommand embeds the fully merged run
configuration (config file < command-line flags), so any checkpoint,
report or trace can be traced back to the exact settings that produced it.

Exit codes: 0 success, 2 usage/config error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .actions import action_name
from .bench import MULTI_MODES, POLICY_KINDS, evaluate, make_policy, multi_vuln_eval
from .config import EnvConfig, NetConfig, RunConfig, VULN_IDS, VulnMode
from .nn import load_params
from .winsim import EscalationEnv, generate_host

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

TRACE_FORMAT = "privesc-rl-trace"
TRACE_VERSION = 1


class CliError(Exception):
    """Usage or configuration problem; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Configuration plumbing


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"config file not found: {path}")
    try:
        with open(p) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise CliError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(d, dict):
        raise CliError(f"config file {path} must contain a JSON object")
    return d


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < command-line flags."""
    d = _load_config_file(args.config) if getattr(args, "config", None) else {}
    try:
        cfg = RunConfig.from_dict(d)
    except (ValueError, TypeError) as e:
        raise CliError(f"bad configuration: {e}")

    t = cfg.train
    for flag, attr in (("episodes", "episodes"), ("seed", "seed"), ("lr", "lr"),
                       ("gamma", "gamma"), ("entropy_weight", "entropy_weight"),
                       ("value_loss_weight", "value_loss_weight"),
                       ("checkpoint_every", "checkpoint_every"),
                       ("log_every", "log_every")):
        v = getattr(args, flag, None)
        if v is not None:
            setattr(t, attr, v)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "max_steps", None) is not None:
        cfg.env.n_max_steps = args.max_steps
    if getattr(args, "no_decoys", False):
        cfg.env.decoy_rates = {k: 0.0 for k in cfg.env.decoy_rates}
    try:
        # re-validate after overrides
        cfg.env = EnvConfig.from_dict(cfg.env.to_dict())
    except (ValueError, TypeError) as e:
        raise CliError(f"bad configuration: {e}")
    return cfg


def _parse_vulns(spec: str | None) -> tuple[str, ...]:
    if not spec:
        return VULN_IDS
    ids = tuple(s.strip() for s in spec.split(",") if s.strip())
    for i in ids:
        if i not in VULN_IDS:
            raise CliError(f"unknown vulnerability id {i!r} (known: {', '.join(VULN_IDS)})")
    return ids


def _load_checkpoint(path: str | None):
    if not path:
        raise CliError("this policy needs --checkpoint")
    p = Path(path)
    if not p.is_file():
        raise CliError(f"checkpoint not found: {path}")
    params, config = load_params(str(p))
    net_cfg = NetConfig.from_dict(config.get("run", {}).get("net", {}))
    return params, net_cfg, config


# ---------------------------------------------------------------------------
# Subcommands


def cmd_train(args: argparse.Namespace) -> int:
    from .a2c import train

    cfg = build_run_config(args)
    out = Path(args.out)
    res = train(cfg, out_dir=out, verbose=not args.quiet)
    if not args.no_plot:
        from .plots import plot_learning_curve

        plot_learning_curve(out / "metrics.csv", out / "learning_curve.png")
    last = res.metrics.rows[-1]
    print(f"trained {res.episodes} episodes in {res.wall_seconds:.0f}s; "
          f"final {cfg.train.metrics_window}-episode avg length {last[3]:.1f}, "
          f"avg reward {last[4]:.3f}")
    print(f"artifacts in {out}/")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    params = net_cfg = None
    if args.policy in ("det-rl", "stoch-rl"):
        params, net_cfg, _ = _load_checkpoint(args.checkpoint)

    if args.mode == "single":
        vulns = _parse_vulns(args.vulns)
        n_per = args.per_vuln if args.per_vuln else max(1, args.samples // len(vulns))
        report = evaluate(args.policy, vulns=vulns, n_per_vuln=n_per,
                          seed=args.seed if args.seed is not None else 0,
                          env_cfg=cfg.env, params=params, net_cfg=net_cfg)
    else:
        if args.policy == "oracle":
            raise CliError("the oracle policy only runs on single-weakness hosts")
        report = multi_vuln_eval(params, args.mode,
                                 n_episodes=args.episodes_per_mode,
                                 seed=args.seed if args.seed is not None else 0,
                                 env_cfg=cfg.env, net_cfg=net_cfg,
                                 policy_kind=args.policy)

    print(report.format_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_json(out / "report.json")
        report.write_jsonl(out / "episodes.jsonl")
        if not args.no_plot:
            from .plots import plot_eval_report

            plot_eval_report(report, out / "report.png")
        print(f"report written to {out}/")
    return EXIT_OK


def cmd_trace(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    params = net_cfg = None
    if args.policy in ("det-rl", "stoch-rl"):
        params, net_cfg, _ = _load_checkpoint(args.checkpoint)
    elif args.policy == "oracle" and cfg.env.vuln_mode.kind == "multi":
        raise CliError("the oracle policy only runs on single-weakness hosts")
    policy = make_policy(args.policy, params, net_cfg)
    seed = args.seed if args.seed is not None else 0

    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    n_written = 0
    with open(out, "w") as fh:
        meta = {
            "trace_format": TRACE_FORMAT,
            "version": TRACE_VERSION,
            "policy": args.policy,
            "seed": seed,
            "episodes": args.episodes,
            "config": cfg.to_dict(),
        }
        fh.write(json.dumps(meta) + "\n")
        for i in range(args.episodes):
            env_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
            env = EscalationEnv(generate_host(env_seed, cfg.env), cfg.env)
            rng = np.random.default_rng(np.random.SeedSequence([seed, i, 1]))
            policy.begin(env)
            while not env.done:
                a = policy.act(rng)
                res = env.step(a)
                policy.observe(a, res)
                line = {
                    "episode": i,
                    "env_seed": env_seed,
                    "step": res.step_index,
                    "action": int(a),
                    "action_name": action_name(a),
                    "facts": [f.kind for f in res.facts],
                    "reward": res.reward,
                    "done": res.done,
                    "vulns": list(env.host.injected),
                }
                fh.write(json.dumps(line) + "\n")
                n_written += 1
    print(f"wrote {args.episodes} episodes ({n_written} steps) to {out}")
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    if args.vuln is not None and args.vuln not in VULN_IDS:
        raise CliError(f"unknown vulnerability id {args.vuln!r} (known: {', '.join(VULN_IDS)})")
    cfg = build_run_config(args)
    if args.vuln is not None:
        cfg.env.vuln_mode = VulnMode(kind="fixed", ids=(args.vuln,))
    host = generate_host(args.seed, cfg.env)
    if args.json:
        print(json.dumps(host.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK

    print(f"host seed {host.seed}")
    print(f"injected: {', '.join(host.injected) or '(none)'}")
    print(f"decoys:   {', '.join(host.decoys) or '(none)'}")
    admins = ", ".join(sorted(host.admin_members))
    print(f"users:    {', '.join(u.name for u in host.users)}  (admins: {admins})")
    m, u = host.aie_bits()
    print(f"install-elevated bits: machine={int(m)} user={int(u)}")
    wu, wp = host.winlogon_creds()
    if wu is not None:
        print(f"winlogon creds: {wu} / {wp}")
    if host.unattend_files:
        print("unattend files: " + ", ".join(f.path for f in host.unattend_files))
    print(f"windows path: {'; '.join(host.path_dirs)}")
    print(f"services ({len(host.services)}):")
    for s in host.services:
        flags = []
        if s.elevated:
            flags.append("elevated")
        if s.started:
            flags.append("started")
        if s.reconfigurable:
            flags.append("reconfigurable")
        if s.registry_writable:
            flags.append("registry-writable")
        print(f"  {s.name:<22} {s.image_path}  [{', '.join(flags) or '-'}]")
    print(f"autoruns ({len(host.autoruns)}):")
    for a in host.autoruns:
        print(f"  {a.entry_id:<28} ({a.kind}) {a.path}")
    print(f"tasks ({len(host.tasks)}):")
    for t in host.tasks:
        print(f"  {t.name:<22} {t.exe_path}  (run as {t.run_as}, {t.trigger})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="privesc-rl",
        description="Train and evaluate an escalation agent on simulated Windows hosts.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON config file (env/net/train sections)")
        sp.add_argument("--seed", type=int, default=None, help="master seed")
        sp.add_argument("--max-steps", type=int, default=None,
                        help="episode step limit override")
        sp.add_argument("--no-decoys", action="store_true",
                        help="disable decoy injection")

    sp = sub.add_parser("train", help="run the training loop")
    add_common(sp)
    sp.add_argument("--out", default="runs/train", help="output directory")
    sp.add_argument("--episodes", type=int, default=None)
    sp.add_argument("--lr", type=float, default=None)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--entropy-weight", dest="entropy_weight", type=float, default=None)
    sp.add_argument("--value-loss-weight", dest="value_loss_weight", type=float, default=None)
    sp.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, default=None)
    sp.add_argument("--log-every", dest="log_every", type=int, default=None)
    sp.add_argument("--quiet", action="store_true", help="suppress progress lines")
    sp.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="benchmark a policy")
    add_common(sp)
    sp.add_argument("--policy", choices=POLICY_KINDS, required=True)
    sp.add_argument("--checkpoint", help="trained checkpoint (RL policies)")
    sp.add_argument("--mode", choices=("single",) + MULTI_MODES, default="single",
                    help="single-weakness rows or a generalization scenario")
    sp.add_argument("--vulns", help="comma-separated weakness ids (single mode)")
    sp.add_argument("--samples", type=int, default=1000,
                    help="total episodes spread over the weakness rows")
    sp.add_argument("--per-vuln", dest="per_vuln", type=int, default=None,
                    help="episodes per weakness row (overrides --samples)")
    sp.add_argument("--episodes-per-mode", dest="episodes_per_mode", type=int,
                    default=200, help="episodes for generalization modes")
    sp.add_argument("--out", help="directory for report.json/episodes.jsonl/report.png")
    sp.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("trace", help="write labeled per-step episode traces")
    add_common(sp)
    sp.add_argument("--policy", choices=POLICY_KINDS, default="stoch-rl")
    sp.add_argument("--checkpoint", help="trained checkpoint (RL policies)")
    sp.add_argument("--episodes", type=int, default=100)
    sp.add_argument("--out", default="traces.jsonl", help="output JSONL file")
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("inspect", help="print a generated host")
    sp.add_argument("--config", help="JSON config file (env section)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--vuln", help="lock the injected weakness")
    sp.add_argument("--no-decoys", action="store_true")
    sp.add_argument("--max-steps", type=int, default=None)
    sp.add_argument("--json", action="store_true", help="full JSON dump")
    sp.set_defaults(func=cmd_inspect)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
