"""Set-aggregating actor-critic network over the encoded belief state.

Entities of each category (services, DLLs, autoruns, tasks) pass through a
shared two-layer encoder; autorun and task embeddings are element-wise
max-pooled into single vectors, and each service pools its own DLL rows the
same way (an empty DLL set pools to zeros).  Every service then gets a trunk
vector

    [service embedding | DLL pool | autorun pool | task pool | general 27]

scored by a shared value head.  The service with the highest value is
selected (lowest index on ties); its trunk alone feeds the policy head,
whose 38 logits define the action distribution, and its value becomes the
state value.  Because the state value is the max over per-service values,
the exact gradient flows only through the selected trunk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetConfig
from .nn import (
    DenseCache,
    ParamStore,
    add_dense,
    dense_backward,
    dense_forward,
    max_rows_backward,
    max_rows_forward,
    softmax,
)
from .state import EncodedState

ENCODERS = ("svc", "dll", "ar", "task")


def init_net(cfg: NetConfig, rng: np.random.Generator) -> ParamStore:
    params = ParamStore()
    ins = {
        "svc": cfg.service_in,
        "dll": cfg.dll_in,
        "ar": cfg.autorun_in,
        "task": cfg.task_in,
    }
    for enc in ENCODERS:
        add_dense(params, rng, f"{enc}1", ins[enc], cfg.encoder_hidden)
        add_dense(params, rng, f"{enc}2", cfg.encoder_hidden, cfg.embed_dim)
    add_dense(params, rng, "pol1", cfg.trunk_in, cfg.head_hidden)
    add_dense(params, rng, "pol2", cfg.head_hidden, cfg.n_actions)
    add_dense(params, rng, "val1", cfg.trunk_in, cfg.head_hidden)
    add_dense(params, rng, "val2", cfg.head_hidden, 1)
    return params


@dataclass
class NetOutput:
    per_service_values: np.ndarray  # (N,)
    selected_service: int
    logits: np.ndarray              # (38,)
    policy: np.ndarray              # (38,)
    value: float


@dataclass
class NetCache:
    enc: EncodedState
    svc_caches: tuple[DenseCache, DenseCache]
    dll_caches: list[tuple[DenseCache, DenseCache] | None]
    dll_winners: list[np.ndarray | None]
    ar_caches: tuple[DenseCache, DenseCache]
    ar_winners: np.ndarray
    task_caches: tuple[DenseCache, DenseCache]
    task_winners: np.ndarray
    trunks: np.ndarray              # (N, trunk_in)
    val_caches: tuple[DenseCache, DenseCache]
    pol_caches: tuple[DenseCache, DenseCache]
    selected: int


def _encode_rows(params: ParamStore, enc_name: str, rows: np.ndarray):
    h, c1 = dense_forward(params, f"{enc_name}1", rows, "relu")
    emb, c2 = dense_forward(params, f"{enc_name}2", h, "identity")
    return emb, (c1, c2)


def forward_net(params: ParamStore, cfg: NetConfig,
                enc: EncodedState) -> tuple[NetOutput, NetCache]:
    svc_emb, svc_caches = _encode_rows(params, "svc", enc.services)

    n = enc.services.shape[0]
    dll_caches: list = []
    dll_winners: list = []
    dll_pool = np.zeros((n, cfg.embed_dim), dtype=np.float64)
    for i in range(n):
        rows = enc.dlls[i] if i < len(enc.dlls) else np.zeros((0, cfg.dll_in))
        if rows.shape[0] == 0:
            dll_caches.append(None)
            dll_winners.append(None)
            continue
        emb, caches = _encode_rows(params, "dll", rows)
        pooled, winners = max_rows_forward(emb)
        dll_pool[i] = pooled
        dll_caches.append(caches)
        dll_winners.append(winners)

    ar_emb, ar_caches = _encode_rows(params, "ar", enc.autoruns)
    a_agg, ar_winners = max_rows_forward(ar_emb)
    task_emb, task_caches = _encode_rows(params, "task", enc.tasks)
    t_agg, task_winners = max_rows_forward(task_emb)

    trunks = np.concatenate(
        [
            svc_emb,
            dll_pool,
            np.tile(a_agg, (n, 1)),
            np.tile(t_agg, (n, 1)),
            np.tile(enc.general, (n, 1)),
        ],
        axis=1,
    )

    vh, v1 = dense_forward(params, "val1", trunks, "relu")
    vals, v2 = dense_forward(params, "val2", vh, "identity")
    per_service_values = vals[:, 0]
    selected = int(np.argmax(per_service_values))

    ph, p1 = dense_forward(params, "pol1", trunks[selected], "relu")
    logits, p2 = dense_forward(params, "pol2", ph, "identity")
    policy = softmax(logits)

    output = NetOutput(
        per_service_values=per_service_values,
        selected_service=selected,
        logits=logits,
        policy=policy,
        value=float(per_service_values[selected]),
    )
    cache = NetCache(
        enc=enc,
        svc_caches=svc_caches,
        dll_caches=dll_caches,
        dll_winners=dll_winners,
        ar_caches=ar_caches,
        ar_winners=ar_winners,
        task_caches=task_caches,
        task_winners=task_winners,
        trunks=trunks,
        val_caches=(v1, v2),
        pol_caches=(p1, p2),
        selected=selected,
    )
    return output, cache


def _decode_rows(params: ParamStore, caches, dy: np.ndarray,
                 grads: dict[str, np.ndarray]) -> np.ndarray:
    c1, c2 = caches
    dh = dense_backward(params, c2, dy, grads)
    return dense_backward(params, c1, dh, grads)


def backward_net(params: ParamStore, cfg: NetConfig, cache: NetCache,
                 d_logits: np.ndarray, d_value: float) -> dict[str, np.ndarray]:
    """Exact gradients of ``d_logits . logits + d_value * value`` w.r.t. all
    parameters.  The caller supplies the loss derivatives in logits/value."""
    grads = params.zero_grads()
    n = cache.trunks.shape[0]
    sel = cache.selected
    d_trunks = np.zeros_like(cache.trunks)

    # policy head (selected trunk only)
    p1, p2 = cache.pol_caches
    dh = dense_backward(params, p2, np.asarray(d_logits, dtype=np.float64), grads)
    d_trunks[sel] += dense_backward(params, p1, dh, grads)

    # value head: value == per-service max, so only the selected row moves it
    v1, v2 = cache.val_caches
    dvals = np.zeros((n, 1), dtype=np.float64)
    dvals[sel, 0] = d_value
    dvh = dense_backward(params, v2, dvals, grads)
    d_trunks += dense_backward(params, v1, dvh, grads)

    e = cfg.embed_dim
    d_svc_emb = d_trunks[:, :e]
    d_dll_pool = d_trunks[:, e:2 * e]
    d_a_agg = d_trunks[:, 2 * e:3 * e].sum(axis=0)
    d_t_agg = d_trunks[:, 3 * e:4 * e].sum(axis=0)

    _decode_rows(params, cache.svc_caches, d_svc_emb, grads)

    for i in range(n):
        if cache.dll_caches[i] is None:
            continue
        d_pool = d_dll_pool[i]
        if not np.any(d_pool):
            continue
        n_rows = cache.dll_caches[i][0].x.shape[0]
        d_emb = max_rows_backward(cache.dll_winners[i], n_rows, d_pool)
        _decode_rows(params, cache.dll_caches[i], d_emb, grads)

    d_ar_emb = max_rows_backward(cache.ar_winners, cache.ar_caches[0].x.shape[0], d_a_agg)
    _decode_rows(params, cache.ar_caches, d_ar_emb, grads)
    d_task_emb = max_rows_backward(cache.task_winners, cache.task_caches[0].x.shape[0], d_t_agg)
    _decode_rows(params, cache.task_caches, d_task_emb, grads)

    return grads


def sample_action(output: NetOutput, rng: np.random.Generator) -> int:
    """Draw a 1-based action id from the policy distribution."""
    u = rng.random()
    cdf = np.cumsum(output.policy)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, output.policy.size - 1) + 1


def greedy_action(output: NetOutput) -> int:
    """Most-probable action (1-based); ties resolve to the lowest id."""
    return int(np.argmax(output.policy)) + 1
