"""Set-aggregating actor-critic network: shapes, invariances, exact gradients."""

import numpy as np

from privesc_rl.config import NetConfig
from privesc_rl.net import (
    NetOutput,
    backward_net,
    forward_net,
    greedy_action,
    init_net,
    sample_action,
)
from privesc_rl.nn import huber, max_rel_error, numeric_grad
from privesc_rl.state import EncodedState


def random_encoding(rng, n_services=None, n_autoruns=None, n_tasks=None):
    n = n_services if n_services is not None else int(rng.integers(1, 6))
    m = n_autoruns if n_autoruns is not None else int(rng.integers(1, 5))
    k = n_tasks if n_tasks is not None else int(rng.integers(1, 4))
    tern = lambda shape: rng.integers(-1, 2, size=shape).astype(np.float64)
    return EncodedState(
        general=tern(27),
        services=tern((n, 11)),
        dlls=[tern((int(rng.integers(0, 4)), 3)) for _ in range(n)],
        autoruns=tern((m, 2)),
        tasks=tern((k, 3)),
        service_keys=tuple(f"s{i}" for i in range(n)),
        autorun_keys=tuple(f"a{i}" for i in range(m)),
        task_keys=tuple(f"t{i}" for i in range(k)),
    )


def test_parameter_count_is_under_budget():
    params = init_net(NetConfig(), np.random.default_rng(0))
    assert params.param_count() == 17_159
    assert params.param_count() < 27_000


def test_forward_shapes_and_policy_normalization():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(1))
    rng = np.random.default_rng(2)
    for _ in range(20):
        enc = random_encoding(rng)
        out, cache = forward_net(params, cfg, enc)
        assert isinstance(out, NetOutput)
        assert out.per_service_values.shape == (enc.services.shape[0],)
        assert out.logits.shape == (38,)
        assert out.policy.shape == (38,)
        assert abs(out.policy.sum() - 1.0) < 1e-12
        assert (out.policy >= 0).all()
        assert out.value == out.per_service_values.max()
        assert 0 <= out.selected_service < enc.services.shape[0]


def test_value_is_max_and_selection_is_first_argmax():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    enc = random_encoding(rng, n_services=4)
    # Duplicate the winning row.  The two copies go through batched matmuls
    # at different row positions, so their head outputs can differ in the
    # last couple of ulps; the tie is near-exact, not bit-exact.
    out, _ = forward_net(params, cfg, enc)
    win = out.selected_service
    enc.services = np.vstack([enc.services[win], enc.services])
    enc.dlls = [enc.dlls[win]] + enc.dlls
    enc.service_keys = ("dup",) + enc.service_keys
    out2, _ = forward_net(params, cfg, enc)
    vals = out2.per_service_values
    assert out2.selected_service in (0, win + 1)
    assert out2.selected_service == int(np.argmax(vals))  # first argmax wins
    assert abs(vals[0] - vals[win + 1]) < 1e-12
    assert abs(out2.value - out.value) < 1e-12
    assert out2.value == vals.max()


def test_permutation_invariance():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    for _ in range(10):
        enc = random_encoding(rng, n_services=5, n_autoruns=4, n_tasks=3)
        out, _ = forward_net(params, cfg, enc)

        perm_s = rng.permutation(5)
        perm_a = rng.permutation(4)
        perm_t = rng.permutation(3)
        enc2 = EncodedState(
            general=enc.general.copy(),
            services=enc.services[perm_s],
            dlls=[enc.dlls[i][rng.permutation(enc.dlls[i].shape[0])]
                  for i in perm_s],
            autoruns=enc.autoruns[perm_a],
            tasks=enc.tasks[perm_t],
            service_keys=tuple(enc.service_keys[i] for i in perm_s),
            autorun_keys=tuple(enc.autorun_keys[i] for i in perm_a),
            task_keys=tuple(enc.task_keys[i] for i in perm_t),
        )
        out2, _ = forward_net(params, cfg, enc2)
        # Row order feeds batched matmuls, whose blocked summation can shift
        # the last ulp per row; invariance holds to ~1e-15, assert at 1e-12.
        assert np.abs(np.sort(out.per_service_values)
                      - np.sort(out2.per_service_values)).max() < 1e-12
        assert abs(out2.value - out.value) < 1e-12
        assert np.abs(out2.policy - out.policy).max() < 1e-12


def test_policy_ignores_non_selected_services():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(7))
    rng = np.random.default_rng(8)
    enc = random_encoding(rng, n_services=4)
    out, _ = forward_net(params, cfg, enc)
    loser = (out.selected_service + 1) % 4
    enc.services[loser] = rng.integers(-1, 2, size=11).astype(np.float64)
    out2, _ = forward_net(params, cfg, enc)
    if out2.selected_service == out.selected_service:
        assert np.array_equal(out2.policy, out.policy)


def test_empty_dll_sets_pool_to_zero_vector():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(9))
    rng = np.random.default_rng(10)
    enc = random_encoding(rng, n_services=2)
    enc.dlls = [np.zeros((0, 3)), np.zeros((0, 3))]
    out, cache = forward_net(params, cfg, enc)
    assert np.isfinite(out.logits).all()


def test_head_gradients_are_separable():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(11))
    rng = np.random.default_rng(12)
    enc = random_encoding(rng)
    _out, cache = forward_net(params, cfg, enc)

    only_policy = backward_net(params, cfg, cache,
                               d_logits=np.ones(38), d_value=0.0)
    assert not only_policy["val1.W"].any()
    assert not only_policy["val2.W"].any()
    assert only_policy["pol1.W"].any()

    only_value = backward_net(params, cfg, cache,
                              d_logits=np.zeros(38), d_value=1.0)
    assert not only_value["pol1.W"].any()
    assert only_value["val1.W"].any()


def test_full_graph_gradient_matches_finite_differences():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(13))
    rng = np.random.default_rng(14)
    enc = random_encoding(rng, n_services=3)
    adv, target, a_idx = 0.8, 0.4, 17

    def loss():
        out, _ = forward_net(params, cfg, enc)
        l_pol = -adv * float(np.log(out.policy[a_idx]))
        l_val, _ = huber(out.value, target)
        return l_pol + l_val

    out, cache = forward_net(params, cfg, enc)
    d_logits = adv * out.policy.copy()
    d_logits[a_idx] -= adv
    _, dv = huber(out.value, target)
    grads = backward_net(params, cfg, cache, d_logits, dv)

    num = numeric_grad(loss, params, max_entries_per_param=60,
                       rng=np.random.default_rng(15))
    assert max_rel_error(grads, num) < 1e-4


def test_sampling_follows_the_policy_and_greedy_takes_argmax():
    cfg = NetConfig()
    params = init_net(cfg, np.random.default_rng(16))
    rng = np.random.default_rng(17)
    enc = random_encoding(rng)
    out, _ = forward_net(params, cfg, enc)

    draws = np.array([sample_action(out, rng) for _ in range(20000)])
    assert draws.min() >= 1 and draws.max() <= 38
    freq = np.bincount(draws, minlength=39)[1:] / draws.size
    assert np.abs(freq - out.policy).max() < 0.02

    g = greedy_action(out)
    assert g == int(np.argmax(out.policy)) + 1
