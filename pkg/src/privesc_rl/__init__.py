"""Deep-RL local privilege escalation on simulated Windows hosts.

The package provides:

* ``winsim`` — procedurally generated single-host POMDP with 38 high-level
  attack and discovery actions,
* ``state`` — the agent's belief state and its fixed numeric encoding,
* ``nn`` / ``net`` — a small dense-network substrate with hand-written
  gradients and the set-aggregating actor-critic built on it,
* ``a2c`` — episodic advantage actor-critic training,
* ``bench`` — scripted baselines and evaluation reports,
* ``cli`` — the ``privesc-rl`` command line front end.
"""

__version__ = "0.1.0"
