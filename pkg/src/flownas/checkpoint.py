"""Checkpoint persistence: both policy nets, Adam state, and the search space.

One JSON document per checkpoint.  Weight matrices are flattened row-major;
floats survive the round trip bit-exactly because json emits shortest
repr for 64-bit values.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .policy_net import AdamState, FlowNetwork
from .search_space import SearchSpace

FORMAT_VERSION = 1


def _net_to_dict(net: FlowNetwork, adam: AdamState | None) -> dict:
    doc = {
        "input_dim": net.input_dim,
        "hidden_dim": net.hidden_dim,
        "output_dim": net.output_dim,
        "w1": net.w1.ravel().tolist(),
        "b1": net.b1.tolist(),
        "w2": net.w2.ravel().tolist(),
        "b2": net.b2.tolist(),
    }
    if adam is not None:
        doc["adam"] = {
            "learning_rate": adam.learning_rate,
            "t": adam.t,
            "m": [m.ravel().tolist() for m in adam.m],
            "v": [v.ravel().tolist() for v in adam.v],
        }
    return doc


def _net_from_dict(doc: dict) -> tuple[FlowNetwork, AdamState | None]:
    try:
        hidden, inp, out = doc["hidden_dim"], doc["input_dim"], doc["output_dim"]
        net = FlowNetwork(
            w1=np.asarray(doc["w1"], dtype=np.float64).reshape(hidden, inp),
            b1=np.asarray(doc["b1"], dtype=np.float64),
            w2=np.asarray(doc["w2"], dtype=np.float64).reshape(out, hidden),
            b2=np.asarray(doc["b2"], dtype=np.float64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed network block: {exc}") from exc
    adam = None
    if "adam" in doc:
        a = doc["adam"]
        shapes = [p.shape for p in net.parameters()]
        try:
            adam = AdamState(
                learning_rate=float(a["learning_rate"]),
                t=int(a["t"]),
                m=tuple(
                    np.asarray(m, dtype=np.float64).reshape(s)
                    for m, s in zip(a["m"], shapes)
                ),
                v=tuple(
                    np.asarray(v, dtype=np.float64).reshape(s)
                    for v, s in zip(a["v"], shapes)
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"malformed adam block: {exc}") from exc
    return net, adam


def save_checkpoint(
    path: str | Path,
    space: SearchSpace,
    n_w: FlowNetwork,
    n_a: FlowNetwork,
    adam_w: AdamState | None = None,
    adam_a: AdamState | None = None,
    config_hash: str = "",
) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "search_space": {
            "wavelets": list(space.wavelets),
            "activations": list(space.activations),
            "n_blocks": space.n_blocks,
        },
        "n_w": _net_to_dict(n_w, adam_w),
        "n_a": _net_to_dict(n_a, adam_a),
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_checkpoint(path: str | Path) -> dict:
    """Returns {"space", "n_w", "n_a", "adam_w", "adam_a", "config_hash"}."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format in {path}")
    try:
        ss = doc["search_space"]
        space = SearchSpace(
            wavelets=tuple(ss["wavelets"]),
            activations=tuple(ss["activations"]),
            n_blocks=int(ss["n_blocks"]),
        )
        n_w, adam_w = _net_from_dict(doc["n_w"])
        n_a, adam_a = _net_from_dict(doc["n_a"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc
    if n_w.output_dim != len(space.wavelets) or n_a.output_dim != len(space.activations):
        raise CheckpointError("network output dims do not match the search space")
    return {
        "space": space,
        "n_w": n_w,
        "n_a": n_a,
        "adam_w": adam_w,
        "adam_a": adam_a,
        "config_hash": doc.get("config_hash", ""),
    }
