"""Tests for the evaluation bench: reference policies, reports, IO."""

import json

import numpy as np
import pytest

from privesc_rl.bench import (
    MULTI_MODES,
    ORACLE_SEQUENCES,
    POLICY_KINDS,
    TABLE_ROW_VARIANTS,
    EpisodeResult,
    OraclePolicy,
    evaluate,
    make_policy,
    multi_vuln_eval,
    run_episode,
)
from privesc_rl.config import DECOY_KINDS, EnvConfig, VULN_IDS, VulnMode
from privesc_rl.winsim import EscalationEnv, generate_host

NO_DECOYS = {k: 0.0 for k in DECOY_KINDS}

# Minimal per-row action counts with perfect information about the host.
TABLE_ORACLE = {
    "1": 10, "2": 5, "3": 7, "4": 5, "5": 7, "6": 7,
    "7": 6, "8": 5, "9": 3, "10": 4, "11": 6, "12": 6,
}


def test_oracle_sequence_lengths_match_table():
    assert set(ORACLE_SEQUENCES) == set(VULN_IDS)
    for label, variant in TABLE_ROW_VARIANTS.items():
        assert len(ORACLE_SEQUENCES[variant]) == TABLE_ORACLE[label]
    for seq in ORACLE_SEQUENCES.values():
        assert all(1 <= a <= 38 for a in seq)


def test_table_row_mapping():
    assert list(TABLE_ROW_VARIANTS) == [str(i) for i in range(1, 13)]
    assert TABLE_ROW_VARIANTS["1"] == "1.1"
    assert all(v in VULN_IDS for v in TABLE_ROW_VARIANTS.values())


def test_oracle_eval_is_exact():
    report = evaluate("oracle", n_per_vuln=20, seed=0)
    assert report.overall_success_rate() == 1.0
    for vuln_id, seq in ORACLE_SEQUENCES.items():
        s = report.row(vuln_id)
        # perfect play has zero variance: every episode ends on the last action
        assert s.min_length == s.max_length == len(seq)
        assert s.mean_length == float(len(seq))
        assert s.successes == s.episodes == 20
    assert abs(report.table_avg() - 71 / 12) < 1e-12


def test_oracle_rejects_multi_weakness_host():
    cfg = EnvConfig(vuln_mode=VulnMode(kind="multi", ids=("2", "9")))
    env = EscalationEnv(generate_host(5, cfg), cfg)
    with pytest.raises(ValueError):
        run_episode(env, OraclePolicy(), np.random.default_rng(0))


def test_expert_eval_band():
    report = evaluate("expert", n_per_vuln=30, seed=0)
    assert report.overall_success_rate() == 1.0
    assert 9.0 <= report.table_avg() <= 13.0
    # the credential route needs no lure artifacts and no decoy can stretch it
    assert report.row("9").mean_length == 3.0


def test_expert_short_on_clean_hosts():
    cfg = EnvConfig(decoy_rates=NO_DECOYS)
    report = evaluate("expert", vulns=("6",), n_per_vuln=25, seed=1, env_cfg=cfg)
    assert report.overall_success_rate() == 1.0
    assert report.row("6").mean_length <= 10.0


def test_random_policy_uniform():
    policy = make_policy("random")
    rng = np.random.default_rng(123)
    counts = np.zeros(38)
    n = 38_000
    for _ in range(n):
        a = policy.act(rng)
        counts[a - 1] += 1
    expected = n / 38
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 37 degrees of freedom; 80 is far out in the tail
    assert chi2 < 80.0


def test_random_eval_band():
    report = evaluate("random", n_per_vuln=8, seed=2, keep_episodes=False)
    assert report.overall_success_rate() >= 0.95
    assert 80.0 <= report.overall_mean_length() <= 400.0


def test_run_episode_deterministic_given_seeds():
    cfg = EnvConfig()
    results = []
    for _ in range(2):
        env = EscalationEnv(generate_host(99, cfg), cfg)
        rng = np.random.default_rng(7)
        results.append(run_episode(env, make_policy("random"), rng,
                                   record_actions=True))
    a, b = results
    assert a == b
    assert len(a.actions) == a.length
    assert a.env_seed == 99


def test_recorded_actions_replay():
    """Feeding the recorded action list back into a fresh env reproduces the
    episode outcome exactly."""
    cfg = EnvConfig()
    env = EscalationEnv(generate_host(4, cfg), cfg)
    res = run_episode(env, make_policy("expert"), np.random.default_rng(0),
                      record_actions=True)
    env2 = EscalationEnv(generate_host(4, cfg), cfg)
    reward = 0.0
    for a in res.actions:
        step = env2.step(a)
        reward = step.reward
    assert env2.done
    assert reward == res.reward
    assert env2.success_path == res.path
    assert env2.step_count == res.length


def test_report_rows_match_episodes():
    report = evaluate("expert", vulns=("2", "9"), n_per_vuln=10, seed=3)
    assert len(report.episodes) == 20
    for vuln_id in ("2", "9"):
        eps = [e for e in report.episodes if e.vulns == (vuln_id,)]
        s = report.row(vuln_id)
        assert s.episodes == len(eps) == 10
        assert s.successes == sum(e.success for e in eps)
        assert abs(s.mean_length - np.mean([e.length for e in eps])) < 1e-12
        assert s.min_length == min(e.length for e in eps)
        assert s.max_length == max(e.length for e in eps)


def test_report_json_roundtrip(tmp_path):
    report = evaluate("oracle", n_per_vuln=3, seed=0, record_actions=True)
    jpath = tmp_path / "report.json"
    report.write_json(jpath)
    with open(jpath) as fh:
        d = json.load(fh)
    assert d["policy"] == "oracle"
    assert len(d["rows"]) == 13
    assert d["overall_success_rate"] == 1.0
    assert abs(d["table_avg"] - 71 / 12) < 1e-12

    lpath = tmp_path / "episodes.jsonl"
    report.write_jsonl(lpath)
    with open(lpath) as fh:
        lines = [json.loads(line) for line in fh]
    assert lines[0]["policy"] == "oracle"
    assert len(lines) == 1 + len(report.episodes)
    ep = lines[1]
    assert ep["success"] is True
    assert len(ep["actions"]) == ep["length"]


def test_format_text_layout():
    report = evaluate("oracle", n_per_vuln=2, seed=0, keep_episodes=False)
    text = report.format_text()
    lines = text.splitlines()
    assert "policy: oracle" in lines[0]
    assert any(line.lstrip().startswith("AVG") for line in lines)
    assert any("(extra variant)" in line for line in lines)  # variant 1.2
    # one row per report label
    for label in TABLE_ROW_VARIANTS:
        assert any(line.split()[0] == label for line in lines[2:])


def test_multi_vuln_eval_modes():
    expected_n_vulns = {"random-pairs": 2, "all-12": 12,
                       "six-service-vulns": 6, "many-services": 1}
    for mode in MULTI_MODES:
        report = multi_vuln_eval(None, mode, n_episodes=5, seed=0,
                                 policy_kind="expert")
        assert report.mode == mode
        assert report.rows[0].vuln_id == mode
        assert report.rows[0].episodes == 5
        assert report.overall_success_rate() == 1.0
        for ep in report.episodes:
            assert len(ep.vulns) == expected_n_vulns[mode]
    with pytest.raises(ValueError):
        multi_vuln_eval(None, "nope", n_episodes=1)


def test_make_policy_errors():
    for kind in ("oracle", "expert", "random"):
        assert make_policy(kind).name == kind
    with pytest.raises(ValueError):
        make_policy("det-rl")
    with pytest.raises(ValueError):
        make_policy("stoch-rl")
    with pytest.raises(ValueError):
        make_policy("bogus")
    assert set(POLICY_KINDS) == {"oracle", "expert", "det-rl", "stoch-rl", "random"}
