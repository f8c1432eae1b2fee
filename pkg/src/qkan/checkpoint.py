"""Checkpoint persistence.

Checkpoints are JSON documents holding the network topology and a flat
parameter list in the order defined by QkanNetwork.param_vector:
encoder (weight row-major, then bias), then per layer enc_w, enc_b,
angles, w_base, w_quant, out_bias (each raveled row-major over
(out, in)), then decoder. Floats are serialized with shortest
round-trip precision, so load(save(net)) reproduces forward passes
bitwise. A format_version mismatch is rejected, never migrated.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .errors import DataError
from .network import LinearLayer, QkanLayer, QkanNetwork

FORMAT_VERSION = 1


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory plus rename, so no
    partial file is left behind on failure."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def network_to_dict(net: QkanNetwork, provenance: dict | None = None,
                    optimizer_state: dict | None = None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "shape": net.shape,
        "r": [layer.r for layer in net.layers],
        "encoder": ([net.encoder.n_in, net.encoder.n_out]
                    if net.encoder else None),
        "decoder": ([net.decoder.n_in, net.decoder.n_out]
                    if net.decoder else None),
        "params": list(net.param_vector()),
    }
    if provenance:
        doc["provenance"] = provenance
    if optimizer_state:
        doc["optimizer_state"] = optimizer_state
    return doc


def network_from_dict(doc: dict) -> QkanNetwork:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format_version {version!r}; "
                        f"this build reads version {FORMAT_VERSION}")
    shape = doc["shape"]
    rs = doc["r"]
    layers = []
    for i, r in enumerate(rs):
        n_in, n_out = shape[i], shape[i + 1]
        layers.append(QkanLayer(
            enc_w=np.zeros((n_out, n_in, r)),
            enc_b=np.zeros((n_out, n_in, r)),
            angles=np.zeros((n_out, n_in, r + 1, 3)),
            w_base=np.zeros((n_out, n_in)),
            w_quant=np.zeros((n_out, n_in)),
            out_bias=np.zeros((n_out, n_in)),
        ))
    net = QkanNetwork(layers=layers)
    if doc.get("encoder"):
        n_in, n_out = doc["encoder"]
        net.encoder = LinearLayer(np.zeros((n_out, n_in)), np.zeros(n_out))
    if doc.get("decoder"):
        n_in, n_out = doc["decoder"]
        net.decoder = LinearLayer(np.zeros((n_out, n_in)), np.zeros(n_out))
    params = np.array(doc["params"], dtype=np.float64)
    try:
        net.set_param_vector(params)
    except ValueError as exc:
        raise DataError(f"checkpoint parameter block: {exc}") from None
    return net


def save_checkpoint(net: QkanNetwork, path, provenance: dict | None = None,
                    optimizer_state: dict | None = None) -> None:
    doc = network_to_dict(net, provenance, optimizer_state)
    atomic_write_text(path, json.dumps(doc) + "\n")


def load_checkpoint(path):
    """Returns (network, full checkpoint document)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid checkpoint JSON: {exc}") from None
    return network_from_dict(doc), doc
