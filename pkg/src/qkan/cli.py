"""Command-line entry point.

Subcommands: gen-data, train, eval, spectrum, extend, distill,
mnist-demo. Every flag mirrors a config-file field; flags win on
conflict. Output files are written atomically (temp file + rename).
Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
failure. The QKAN_OUT environment variable sets the default output
root.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import data as datamod
from . import distill as distillmod
from . import spectrum as spectrummod
from .checkpoint import (atomic_write_text, config_hash, load_checkpoint,
                         network_to_dict, save_checkpoint)
from .daruan import DaruanParams, init_daruan
from .errors import ConfigError, DataError, NumericalError, QkanError
from .network import QkanNetwork, make_hqkan
from .train import TrainConfig, rmse, trace_to_csv, train

INIT_STREAM = 0x1417
DEFAULT_SEEDS = [0, 1, 2, 3, 4]


def _default_out(subdir: str) -> str:
    root = os.environ.get("QKAN_OUT", ".")
    return os.path.join(root, subdir)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid config JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return cfg


def _merged(cfg: dict, args: argparse.Namespace, fields: dict) -> dict:
    """Overlay CLI flags (when given) onto the config; validate types."""
    out = {}
    for name, (typ, default, required) in fields.items():
        value = getattr(args, name.replace("-", "_"), None)
        if value is None:
            value = cfg.get(name, default)
        if value is None:
            if required:
                raise ConfigError(f"missing required config field {name!r}")
            out[name] = None
            continue
        try:
            out[name] = typ(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config field {name!r}: {exc}") from None
    unknown = set(cfg) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return out


def _int_list(v):
    if isinstance(v, str):
        v = [s for s in v.split(",") if s]
    return [int(s) for s in v]


def _shape(v):
    shape = _int_list(v)
    if len(shape) < 2 or any(s < 1 for s in shape):
        raise ValueError("shape needs >= 2 positive widths")
    return shape


def _range_pair(v):
    if isinstance(v, str):
        v = v.split(",")
    lo, hi = (float(x) for x in v)
    if not lo < hi:
        raise ValueError("range must satisfy lo < hi")
    return [lo, hi]


def _ensure_out_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _make_dataset(cfg: dict):
    if cfg.get("train-csv") and cfg.get("test-csv"):
        return datamod.read_csv(cfg["train-csv"]), datamod.read_csv(cfg["test-csv"])
    equation = cfg.get("equation")
    if equation is None:
        raise ConfigError("provide either 'equation' or both "
                          "'train-csv' and 'test-csv'")
    if equation == "sinc20":
        return datamod.gen_sinc(cfg["n-train"], cfg["n-test"],
                                noise_std=cfg["noise-frac"],
                                seed=cfg["data-seed"])
    spec = datamod.get_spec(equation)
    return datamod.gen_regression(spec, cfg["n-train"], cfg["n-test"],
                                  noise_frac=cfg["noise-frac"],
                                  seed=cfg["data-seed"],
                                  input_range=tuple(cfg["range"]))


def _init_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, INIT_STREAM]))


# --- subcommands ------------------------------------------------------------


def cmd_gen_data(args) -> int:
    cfg = _merged(_load_config(args.config), args, {
        "equation": (str, None, True),
        "n-train": (int, 1000, False),
        "n-test": (int, 1000, False),
        "noise-frac": (float, 0.1, False),
        "data-seed": (int, 0, False),
        "range": (_range_pair, [0.0, 1.0], False),
        "out": (str, _default_out("data"), False),
    })
    train_ds, test_ds = _make_dataset(dict(cfg, **{"train-csv": None,
                                                   "test-csv": None}))
    out = _ensure_out_dir(cfg["out"])
    datamod.write_csv(train_ds, os.path.join(out, "train.csv"))
    datamod.write_csv(test_ds, os.path.join(out, "test.csv"))
    atomic_write_text(os.path.join(out, "meta.json"),
                      json.dumps(train_ds.meta, indent=2) + "\n")
    print(f"wrote {out}/train.csv, test.csv, meta.json "
          f"({len(train_ds)}/{len(test_ds)} rows)")
    return 0


_TRAIN_FIELDS = {
    "equation": (str, None, False),
    "train-csv": (str, None, False),
    "test-csv": (str, None, False),
    "shape": (_shape, None, True),
    "r": (int, 3, False),
    "optimizer": (str, "lbfgs", False),
    "epochs": (int, 200, False),
    "lr": (float, 1e-3, False),
    "history": (int, 10, False),
    "seeds": (_int_list, DEFAULT_SEEDS, False),
    "n-train": (int, 1000, False),
    "n-test": (int, 1000, False),
    "noise-frac": (float, 0.1, False),
    "data-seed": (int, 0, False),
    "range": (_range_pair, [0.0, 1.0], False),
    "angle-scale": (float, 0.1, False),
    "out": (str, None, False),
}


def run_training(cfg: dict):
    """Train one network per seed; returns (summary, best network)."""
    train_ds, test_ds = _make_dataset(cfg)
    if train_ds.inputs.shape[1] != cfg["shape"][0]:
        raise ConfigError(f"shape[0]={cfg['shape'][0]} does not match the "
                          f"{train_ds.inputs.shape[1]}-dimensional dataset")
    out = _ensure_out_dir(cfg["out"] or _default_out("train"))
    chash = config_hash({k: v for k, v in cfg.items() if k != "out"})
    summary = {"config_hash": chash, "seeds": {}}
    best = None
    for seed in cfg["seeds"]:
        net = QkanNetwork.init(cfg["shape"], cfg["r"], _init_rng(seed),
                               angle_scale=cfg["angle-scale"])
        result = train(net, train_ds, test_ds,
                       TrainConfig(optimizer=cfg["optimizer"],
                                   epochs=cfg["epochs"], lr=cfg["lr"],
                                   history=cfg["history"], seed=seed))
        atomic_write_text(os.path.join(out, f"metrics_seed{seed}.csv"),
                          trace_to_csv(result.trace))
        net.set_param_vector(result.best_params)
        provenance = {"seed": seed, "config_hash": chash,
                      "epoch": result.best_epoch,
                      "best_test_rmse": result.best_test_rmse}
        save_checkpoint(net, os.path.join(out, f"checkpoint_seed{seed}.json"),
                        provenance=provenance)
        summary["seeds"][str(seed)] = {"best_epoch": result.best_epoch,
                                       "best_test_rmse": result.best_test_rmse,
                                       "events": result.events}
        if best is None or result.best_test_rmse < best[1]:
            best = (seed, result.best_test_rmse, net.copy(), provenance)
    summary["best_seed"] = best[0]
    summary["best_test_rmse"] = best[1]
    save_checkpoint(best[2], os.path.join(out, "best.json"),
                    provenance=best[3])
    atomic_write_text(os.path.join(out, "summary.json"),
                      json.dumps(summary, indent=2) + "\n")
    return summary, best[2]


def cmd_train(args) -> int:
    cfg = _merged(_load_config(args.config), args, _TRAIN_FIELDS)
    summary, _ = run_training(cfg)
    print(f"best seed {summary['best_seed']}: "
          f"test RMSE {summary['best_test_rmse']:.6g} "
          f"(outputs in {cfg['out'] or _default_out('train')})")
    return 0


def cmd_eval(args) -> int:
    net, _ = load_checkpoint(args.checkpoint)
    dataset = datamod.read_csv(args.data)
    value = rmse(net.forward(dataset.inputs), dataset.targets)
    report = json.dumps({"checkpoint": args.checkpoint, "data": args.data,
                         "n_samples": len(dataset), "rmse": value}, indent=2)
    if args.out:
        atomic_write_text(args.out, report + "\n")
    print(report)
    return 0


def _spectrum_params(args) -> DaruanParams:
    if args.checkpoint:
        net, _ = load_checkpoint(args.checkpoint)
        li = args.layer
        j, i = args.edge
        try:
            return net.layers[li].get_edge(j, i)
        except IndexError:
            raise ConfigError(f"no edge (layer {li}, out {j}, in {i}) "
                              f"in this checkpoint") from None
    p = init_daruan(args.r, _init_rng(args.seed),
                    geometric=(args.weights == "geometric"))
    if args.weights not in ("geometric", "unit"):
        try:
            weights = np.array([float(v) for v in args.weights.split(",")])
        except ValueError:
            raise ConfigError(f"--weights must be 'geometric', 'unit' or a "
                              f"comma list, got {args.weights!r}") from None
        if weights.size != args.r:
            raise ConfigError(f"--weights lists {weights.size} values, "
                              f"but r={args.r}")
        p.enc_w = weights
    return p


def cmd_spectrum(args) -> int:
    p = _spectrum_params(args)
    ok, report = spectrummod.verify_spectrum(p, tol=args.tol)
    text = report.to_json()
    if args.out:
        atomic_write_text(args.out, text + "\n")
    print(text)
    print(f"spectrum residual {report.residual_l2:.3e} "
          f"{'<' if ok else '>='} tol {args.tol:g}: "
          f"{'OK' if ok else 'FAILED'}")
    return 0 if ok else 4


def cmd_extend(args) -> int:
    net, doc = load_checkpoint(args.checkpoint)
    reference = net.copy()
    net.extend(args.new_r)
    probe = np.random.default_rng(0).uniform(-2.0, 2.0, size=(256, net.in_dim))
    diff = float(np.max(np.abs(net.forward(probe) - reference.forward(probe))))
    if diff >= 1e-12:
        raise NumericalError(f"extension changed outputs by {diff:.3e} "
                             f"on the probe grid")
    provenance = dict(doc.get("provenance", {}), extended_from=doc["r"],
                      probe_max_diff=diff)
    save_checkpoint(net, args.out, provenance=provenance)
    print(f"extended r {doc['r']} -> {args.new_r}; probe max diff {diff:.3e}; "
          f"wrote {args.out}")
    return 0


def cmd_distill(args) -> int:
    net, _ = load_checkpoint(args.checkpoint)
    dataset = datamod.read_csv(args.data)
    domains = distillmod.calibrate_domains(net, dataset.inputs)
    spline_net, fit_report = distillmod.distill_network(
        net, domains, grid_size=args.grid_size, degree=args.degree)
    source = net.forward(dataset.inputs)
    distilled = spline_net.forward(dataset.inputs)
    out = _ensure_out_dir(args.out or _default_out("distill"))
    atomic_write_text(os.path.join(out, "spline.json"),
                      spline_net.to_json() + "\n")
    report = {
        "grid_size": args.grid_size,
        "degree": args.degree,
        "source_vs_distilled_rmse": rmse(distilled, source),
        "clamp_count": spline_net.clamp_count(dataset.inputs),
        "edges": {f"{li}.{j}.{i}": errs
                  for (li, j, i), errs in sorted(fit_report.items())},
    }
    atomic_write_text(os.path.join(out, "distill_report.json"),
                      json.dumps(report, indent=2) + "\n")
    print(f"distilled network RMSE vs source: "
          f"{report['source_vs_distilled_rmse']:.6g}; wrote {out}/spline.json")
    return 0


MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def run_mnist_demo(data_dir: str, n_samples: int = 2000, epochs: int = 50,
                   lr: float = 1e-3, r: int = 3, seed: int = 0):
    """Two-class (digits 0/1) HQKAN demo. Returns the accuracy report,
    or None when the IDX files are absent."""
    paths = {k: os.path.join(data_dir, v) for k, v in MNIST_FILES.items()}
    if not all(os.path.exists(p) for p in paths.values()):
        return None
    images = datamod.read_idx(paths["train_images"])
    labels = datamod.read_idx(paths["train_labels"])
    t_images = datamod.read_idx(paths["test_images"])
    t_labels = datamod.read_idx(paths["test_labels"])

    def subset(x, y, limit=None):
        mask = (y == 0) | (y == 1)
        x, y = x[mask], y[mask]
        if limit is not None:
            x, y = x[:limit], y[:limit]
        onehot = np.eye(2)[y]
        return datamod.Dataset(x, onehot), y

    train_ds, _ = subset(images, labels, n_samples)
    test_ds, y_test = subset(t_images, t_labels)
    net = make_hqkan(train_ds.inputs.shape[1], 2, r=r, rng=_init_rng(seed))
    result = train(net, train_ds, test_ds,
                   TrainConfig(optimizer="adam", epochs=epochs, lr=lr,
                               seed=seed))
    net.set_param_vector(result.best_params)
    pred = np.argmax(net.forward(test_ds.inputs), axis=1)
    accuracy = float(np.mean(pred == y_test))
    return {"n_train": len(train_ds), "n_test": len(test_ds),
            "epochs": epochs, "accuracy": accuracy,
            "param_count": net.param_count()}


def cmd_mnist_demo(args) -> int:
    report = run_mnist_demo(args.data_dir, n_samples=args.n_samples,
                            epochs=args.epochs, lr=args.lr, seed=args.seed)
    if report is None:
        print(f"mnist-demo: IDX files not found under {args.data_dir}; "
              f"skipping")
        return 0
    print(json.dumps(report, indent=2))
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkan",
        description="Data re-uploading activations and quantum-inspired "
                    "Kolmogorov-Arnold networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="JSON config file; flags win on conflict")

    p = sub.add_parser("gen-data", help="generate a benchmark dataset")
    add_config(p)
    p.add_argument("--equation")
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--noise-frac", type=float)
    p.add_argument("--data-seed", type=int)
    p.add_argument("--range")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a network, one run per seed")
    add_config(p)
    p.add_argument("--equation")
    p.add_argument("--train-csv")
    p.add_argument("--test-csv")
    p.add_argument("--shape")
    p.add_argument("--r", type=int)
    p.add_argument("--optimizer", choices=["lbfgs", "adam"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--history", type=int)
    p.add_argument("--seeds")
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--noise-frac", type=float)
    p.add_argument("--data-seed", type=int)
    p.add_argument("--range")
    p.add_argument("--angle-scale", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="RMSE of a checkpoint on a CSV dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("spectrum", help="frequency-spectrum report")
    p.add_argument("--checkpoint")
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--edge", type=int, nargs=2, default=[0, 0],
                   metavar=("OUT", "IN"))
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--weights", default="geometric",
                   help="'geometric', 'unit' or a comma list")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("extend", help="deepen a checkpoint, outputs unchanged")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--new-r", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("distill", help="distill a checkpoint to B-splines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True,
                   help="CSV used for domain calibration and fidelity check")
    p.add_argument("--grid-size", type=int, default=20)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("mnist-demo", help="two-class HQKAN MNIST demo")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--n-samples", type=int, default=2000)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mnist_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except QkanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
