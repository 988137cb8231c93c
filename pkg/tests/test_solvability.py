"""Every weakness variant is solvable by its minimal scripted sequence."""

from privesc_rl.bench import ORACLE_SEQUENCES
from privesc_rl.config import DECOY_KINDS, EnvConfig, VULN_IDS, VulnMode
from privesc_rl.winsim import EscalationEnv, generate_host


def replay(vuln_id, seed, decoy_rates):
    cfg = EnvConfig(vuln_mode=VulnMode(kind="fixed", ids=(vuln_id,)),
                    decoy_rates=decoy_rates)
    env = EscalationEnv(generate_host(seed, cfg), cfg)
    reward = 0.0
    for a in ORACLE_SEQUENCES[vuln_id]:
        assert not env.done, f"episode ended early: {vuln_id} seed {seed}"
        reward = env.step(a).reward
    return env, reward


def test_oracle_replay_all_variants_100_seeds():
    rates = EnvConfig().decoy_rates  # default decoy probabilities
    failures = []
    for vuln_id in VULN_IDS:
        for seed in range(100):
            env, reward = replay(vuln_id, seed, rates)
            if not (env.done and reward == 1.0):
                failures.append((vuln_id, seed))
    assert failures == []


def test_oracle_replay_with_every_decoy_present():
    rates = {k: 1.0 for k in DECOY_KINDS}
    for vuln_id in VULN_IDS:
        for seed in range(30):
            env, reward = replay(vuln_id, seed, rates)
            assert env.done and reward == 1.0, (vuln_id, seed)


def test_oracle_sequences_use_exactly_the_needed_steps():
    """The scripted sequences terminate the episode on their final action."""
    for vuln_id in VULN_IDS:
        seq = ORACLE_SEQUENCES[vuln_id]
        cfg = EnvConfig(vuln_mode=VulnMode(kind="fixed", ids=(vuln_id,)))
        env = EscalationEnv(generate_host(11, cfg), cfg)
        for a in seq[:-1]:
            res = env.step(a)
            assert not res.done
        assert env.step(seq[-1]).done
