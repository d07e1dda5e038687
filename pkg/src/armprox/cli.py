"""Command-line surface: dataset generation, training, evaluation,
single-configuration checks, streaming proximity monitoring, and latency
benchmarking.

Every flag can also be supplied through an ``ARMPROX_``-prefixed
environment variable (explicit flags win). Exit codes: 0 success,
2 validation error, 3 I/O error, 4 training divergence.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from . import neural as nn
from .kinematics import NUM_JOINTS, HomTransform, control_points
from .proximity import DEFAULT_THRESHOLD, arm_min_distance, sampled_oracle

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_DIVERGED = 4

ENV_PREFIX = "ARMPROX_"


@dataclass(frozen=True)
class MonitorFrame:
    """One streamed configuration: source timestamp, relative base position, joint vectors."""

    timestamp: float
    rel_pos: np.ndarray
    q1: np.ndarray
    q2: np.ndarray


@dataclass(frozen=True)
class WarningEvent:
    """Emitted when the estimated minimum distance falls strictly below the threshold."""

    timestamp: float
    d_min: float
    estimator: str
    threshold: float
    link_a: int | None = None
    link_b: int | None = None

    def to_json(self) -> str:
        doc: dict[str, object] = {"event": "WARNING", "t": self.timestamp, "dmin": self.d_min}
        if self.link_a is not None:
            doc["links"] = [self.link_a, self.link_b]
        doc["threshold"] = self.threshold
        return json.dumps(doc)


def _env(flag: str):
    """Environment fallback for a flag: --min-separation -> ARMPROX_MIN_SEPARATION."""
    return os.environ.get(ENV_PREFIX + flag.lstrip("-").replace("-", "_").upper())


def _add(parser: argparse.ArgumentParser, flag: str, **kwargs) -> None:
    env_value = _env(flag)
    if env_value is not None:
        kwargs["default"] = env_value
        kwargs.pop("required", None)
    parser.add_argument(flag, **kwargs)


def _fractions(text: str) -> list[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


def _mask(text: str) -> frozenset[int]:
    text = str(text).strip()
    if not text or text == "none":
        return frozenset()
    return frozenset(int(p) for p in text.split(",") if p.strip())


def _optional_int(text: str):
    return None if str(text).lower() in ("", "none", "full") else int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armprox",
        description="Dual-arm proximity toolkit: exact minimum distance, learned estimator, collision warnings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a labeled configuration dataset CSV")
    _add(p, "--n", type=int, default=75655, help="number of records")
    _add(p, "--seed", type=int, default=0)
    _add(p, "--out", required=True, help="output CSV path")
    _add(p, "--labeler", choices=ds.LABELERS, default="analytical")
    _add(p, "--threshold", type=float, default=DEFAULT_THRESHOLD, help="collision threshold for the summary (m)")
    _add(p, "--joint-range", default=None, help="lo,hi radians applied to every joint")
    _add(p, "--pos-range", default=None, help="lo,hi meters applied to every base-position axis")
    _add(p, "--min-separation", type=float, default=None, help="minimum base separation (m)")
    _add(p, "--box-half-extent", type=float, default=None, help="box cross-section half extent (m)")
    _add(p, "--config", default=None, help="key=value generation config file")

    p = sub.add_parser("train", help="train the distance regressor on a dataset CSV")
    _add(p, "--data", required=True, help="dataset CSV path")
    _add(p, "--out", required=True, help="checkpoint output path")
    _add(p, "--history", default=None, help="loss history CSV path")
    _add(p, "--epochs", type=int, default=2500)
    _add(p, "--lr", type=float, default=0.05)
    _add(p, "--lr-floor", type=float, default=1e-5)
    _add(p, "--weight-decay", type=float, default=1e-5)
    _add(p, "--charbonnier-eps", type=float, default=1e-3)
    _add(p, "--batch-size", type=_optional_int, default=None, help="mini-batch size; default full batch")
    _add(p, "--mask", type=_mask, default=ds.DEFAULT_MASK, help="dropped raw feature indices, 1-based, comma separated")
    _add(p, "--scale", type=float, default=ds.TWO_PI, help="feature normalization divisor")
    _add(p, "--pos-scale", type=float, default=None, help="separate divisor for the position features")
    _add(p, "--split", type=_fractions, default=[0.9, 0.1], help="partition fractions, e.g. 0.9,0.1")
    _add(p, "--seed", type=int, default=0)
    _add(p, "--hidden", default="200,100,100,25", help="hidden layer widths")
    _add(p, "--leaky-slope", type=float, default=0.001)
    _add(p, "--dropout", type=float, default=0.001)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset CSV")
    _add(p, "--checkpoint", required=True)
    _add(p, "--data", required=True)
    _add(p, "--identity-out", default=None, help="predicted,actual pairs CSV")
    _add(p, "--histogram-out", default=None, help="signed-error histogram CSV")
    _add(p, "--bins", type=int, default=50)
    _add(p, "--split", type=_fractions, default=None, help="evaluate only the last partition of this split")
    _add(p, "--seed", type=int, default=0, help="split shuffling seed")

    p = sub.add_parser("check", help="report distances for one configuration (17 numbers)")
    p.add_argument("values", nargs="+", help="px py pz, 7 joint angles of arm 1, 7 of arm 2")
    _add(p, "--checkpoint", default=None)
    _add(p, "--threshold", type=float, default=DEFAULT_THRESHOLD)

    p = sub.add_parser("monitor", help="stream frames from stdin, emit distances and warnings")
    _add(p, "--estimator", choices=("analytical", "neural"), default="analytical")
    _add(p, "--checkpoint", default=None, help="required for the neural estimator")
    _add(p, "--threshold", type=float, default=DEFAULT_THRESHOLD)
    _add(p, "--input", default=None, help="read frames from a file or named pipe instead of stdin")

    p = sub.add_parser("bench", help="latency report for the three estimators")
    _add(p, "--iters", type=int, default=10000)
    _add(p, "--grid", type=int, default=2000, help="sampling grid for the grid oracle")
    _add(p, "--seed", type=int, default=0)
    _add(p, "--checkpoint", default=None, help="model to time; defaults to a freshly initialized one")
    _add(p, "--out", default=None, help="machine-readable CSV output")

    return parser


def _gen_spec_from_args(args) -> ds.GenSpec:
    options = ds.read_config(args.config) if args.config else {}
    if args.joint_range is not None:
        options["joint_range"] = args.joint_range
    if args.pos_range is not None:
        options["pos_range"] = args.pos_range
    overrides: dict[str, object] = {"n": args.n, "seed": args.seed, "labeler": args.labeler}
    if args.min_separation is not None:
        overrides["min_base_separation"] = args.min_separation
    if args.box_half_extent is not None:
        overrides["box_half_extent"] = args.box_half_extent
    return ds.gen_spec_from_config(options, **overrides)


def cmd_generate(args) -> int:
    spec = _gen_spec_from_args(args)
    if args.threshold <= 0.0:
        raise ValueError("--threshold must be positive")
    data = ds.generate_dataset(spec)
    ds.write_dataset(data, args.out)
    labels = data.d_min
    frac = float((labels < args.threshold).mean())
    print(f"wrote {len(data)} records to {args.out}")
    print(f"labels: min {labels.min():.6f} m, max {labels.max():.6f} m, mean {labels.mean():.6f} m")
    print(f"collision fraction at threshold {args.threshold:g} m: {frac:.4f}")
    return 0


def cmd_train(args) -> int:
    data = ds.read_dataset(args.data)
    fspec = ds.FeatureSpec(mask=args.mask, scale=args.scale, pos_scale=args.pos_scale).validate()
    cfg = nn.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        weight_decay=args.weight_decay,
        lr_floor=args.lr_floor,
        charbonnier_eps=args.charbonnier_eps,
        batch_size=args.batch_size,
        seed=args.seed,
    ).validate()
    parts = ds.split(data, args.split, seed=args.seed)
    if len(parts) < 2:
        raise ValueError("--split needs at least two fractions (train and validation)")
    sizes = ", ".join(str(len(p)) for p in parts)
    print(f"split sizes: {sizes} (train, validation{', holdout' if len(parts) > 2 else ''})")
    train_xy = ds.preprocess(parts[0], fspec)
    val_xy = ds.preprocess(parts[1], fspec)
    hidden = tuple(int(w) for w in str(args.hidden).split(","))
    spec = nn.MlpSpec(
        input_dim=fspec.input_dim,
        hidden=hidden,
        leaky_slope=args.leaky_slope,
        dropout_rate=args.dropout,
    ).validate()
    params = nn.init_model(spec, seed=args.seed)
    trained, history = nn.train(params, train_xy, val_xy, cfg)
    nn.save_checkpoint(args.out, trained, fspec, cfg)
    print(f"wrote checkpoint to {args.out} ({spec.input_dim} inputs, hidden {spec.hidden})")
    if args.history:
        history.write_csv(args.history)
        print(f"wrote loss history to {args.history}")
    m = nn.evaluate(trained, val_xy)
    r2 = "undefined" if m.r2 is None else f"{m.r2:.4f}"
    print(f"validation: MAE {m.mae * 1e3:.1f} mm, RMSE {m.rmse * 1e3:.1f} mm, R2 {r2}")
    return 0


def cmd_eval(args) -> int:
    params, fspec, _ = nn.load_checkpoint(args.checkpoint)
    data = ds.read_dataset(args.data)
    if args.split:
        data = ds.split(data, args.split, seed=args.seed)[-1]
    x, y = ds.preprocess(data, fspec)
    pred = nn.forward(params, x)
    m = nn.metrics_from_predictions(pred, y)
    r2 = "undefined" if m.r2 is None else f"{m.r2:.4f}"
    print(f"records: {len(y)}")
    print(f"MAE {m.mae * 1e3:.1f} mm, RMSE {m.rmse * 1e3:.1f} mm, R2 {r2}")
    if args.identity_out:
        with open(args.identity_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("predicted,actual\n")
            for p_i, y_i in zip(pred, y):
                fh.write(f"{p_i!r},{y_i!r}\n")
        print(f"wrote identity-plot data to {args.identity_out}")
    if args.histogram_out:
        if args.bins < 1:
            raise ValueError("--bins must be at least 1")
        err = pred - y
        sigma = float(err.std())
        counts, edges = np.histogram(err, bins=args.bins)
        with open(args.histogram_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# signed prediction error (m), {len(err)} records\n")
            fh.write(f"# sigma,{sigma!r}\n")
            for k in (1, 2, 3):
                inside = int((np.abs(err) <= k * sigma).sum())
                fh.write(f"# within_{k}_sigma,{inside}\n")
            fh.write("bin_lo,bin_hi,count\n")
            for i, c in enumerate(counts):
                fh.write(f"{edges[i]!r},{edges[i + 1]!r},{int(c)}\n")
        print(f"wrote error histogram to {args.histogram_out}")
    return 0


def _parse_configuration(values: list[str]):
    if len(values) != ds.RAW_FEATURE_DIM:
        raise ValueError(f"expected {ds.RAW_FEATURE_DIM} numbers, got {len(values)}")
    numbers = []
    for pos, text in enumerate(values, start=1):
        try:
            numbers.append(float(text))
        except ValueError:
            raise ValueError(f"value {pos} is not a number: {text!r}") from None
    arr = np.array(numbers)
    return arr[0:3], arr[3:10], arr[10:17]


def cmd_check(args) -> int:
    rel_pos, q1, q2 = _parse_configuration(args.values)
    poly1 = control_points(q1, HomTransform.identity())
    poly2 = control_points(q2, HomTransform.translation(rel_pos))
    result = arm_min_distance(poly1, poly2, threshold=args.threshold)
    verdict = "COLLISION" if result.collision else "CLEAR"
    print(f"analytical d_min: {result.d_min:.6f} m (links {result.link_a},{result.link_b}) -> {verdict}")
    if args.checkpoint:
        params, fspec, _ = nn.load_checkpoint(args.checkpoint)
        predicted = nn.predict_min_distance(params, fspec, rel_pos, q1, q2)
        nn_verdict = "COLLISION" if predicted < args.threshold else "CLEAR"
        print(f"neural d_min: {predicted:.6f} m -> {nn_verdict}")
        print(f"absolute error: {nn.error_metric(predicted, result.d_min):.6f} m")
    return 0


def parse_frame(line: str) -> MonitorFrame:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("frame must be a JSON object")
    try:
        t = float(doc["t"])
        p = np.asarray(doc["p"], dtype=float).reshape(3)
        q1 = np.asarray(doc["q1"], dtype=float).reshape(NUM_JOINTS)
        q2 = np.asarray(doc["q2"], dtype=float).reshape(NUM_JOINTS)
    except KeyError as exc:
        raise ValueError(f"frame is missing key {exc}") from None
    except (TypeError, ValueError):
        raise ValueError("frame fields must be t (number), p (3 numbers), q1/q2 (7 numbers)") from None
    if not (math.isfinite(t) and np.isfinite(p).all() and np.isfinite(q1).all() and np.isfinite(q2).all()):
        raise ValueError("frame values must be finite")
    return MonitorFrame(t, p, q1, q2)


def cmd_monitor(args) -> int:
    if args.threshold <= 0.0:
        raise ValueError("--threshold must be positive")
    if args.estimator == "neural":
        if not args.checkpoint:
            raise ValueError("--estimator neural requires --checkpoint")
        params, fspec, _ = nn.load_checkpoint(args.checkpoint)

    stream = open(args.input, "r", encoding="utf-8") if args.input else sys.stdin
    frames = 0
    warnings = 0
    try:
        for line in stream:
            if not line.strip():
                continue
            try:
                frame = parse_frame(line)
            except ValueError as exc:
                print(f"frame error: {exc}", file=sys.stderr)
                continue
            frames += 1
            links = None
            if args.estimator == "analytical":
                poly1 = control_points(frame.q1, HomTransform.identity())
                poly2 = control_points(frame.q2, HomTransform.translation(frame.rel_pos))
                result = arm_min_distance(poly1, poly2, threshold=args.threshold)
                d_min = result.d_min
                links = (result.link_a, result.link_b)
            else:
                d_min = nn.predict_min_distance(params, fspec, frame.rel_pos, frame.q1, frame.q2)
            collision = d_min < args.threshold
            print(json.dumps({"t": frame.timestamp, "dmin": d_min, "collision": collision}), flush=True)
            if collision:
                warnings += 1
                event = WarningEvent(
                    timestamp=frame.timestamp,
                    d_min=d_min,
                    estimator=args.estimator,
                    threshold=args.threshold,
                    link_a=None if links is None else links[0],
                    link_b=None if links is None else links[1],
                )
                print(event.to_json(), flush=True)
    finally:
        if args.input:
            stream.close()
    print(f"processed {frames} frames, {warnings} warnings", file=sys.stderr)
    return 0


def _latency_stats(samples_us: np.ndarray) -> tuple[float, float]:
    return float(np.median(samples_us)), float(np.percentile(samples_us, 99))


def cmd_bench(args) -> int:
    if args.iters < 1:
        raise ValueError("--iters must be at least 1")
    if args.grid < 2:
        raise ValueError("--grid must be at least 2")
    rng = np.random.default_rng(args.seed)
    spec = ds.GenSpec(n=args.iters, seed=args.seed).validate()
    configs = [ds.sample_configuration(rng, spec) for _ in range(args.iters)]
    polys = [
        (control_points(q1, HomTransform.identity()), control_points(q2, HomTransform.translation(p)))
        for p, q1, q2 in configs
    ]

    if args.checkpoint:
        params, fspec, _ = nn.load_checkpoint(args.checkpoint)
    else:
        fspec = ds.FeatureSpec().validate()
        params = nn.init_model(nn.MlpSpec(input_dim=fspec.input_dim), seed=args.seed)

    def time_each(fn, inputs) -> np.ndarray:
        fn(inputs[0])  # warm up caches and jit
        out = np.empty(len(inputs))
        for i, item in enumerate(inputs):
            t0 = time.perf_counter()
            fn(item)
            out[i] = (time.perf_counter() - t0) * 1e6
        return out

    rows = []
    lat = time_each(lambda pq: arm_min_distance(pq[0], pq[1]), polys)
    med, p99 = _latency_stats(lat)
    rows.append(("analytical", args.iters, "", med, p99, 100.0, "engineering target"))
    print(f"analytical: median {med:.1f} us, p99 {p99:.1f} us over {args.iters} configurations")

    lat = time_each(lambda pq: sampled_oracle(pq[0], pq[1], args.grid), polys)
    med, p99 = _latency_stats(lat)
    rows.append(("sampled_oracle", args.iters, args.grid, med, p99, "", ""))
    print(f"sampled_oracle (grid {args.grid}): median {med:.1f} us, p99 {p99:.1f} us")

    lat = time_each(lambda c: nn.predict_min_distance(params, fspec, c[0], c[1], c[2]), configs)
    med, p99 = _latency_stats(lat)
    rows.append(("neural", args.iters, "", med, p99, 1000.0, "engineering target"))
    print(f"neural inference: median {med:.1f} us, p99 {p99:.1f} us")

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("estimator,iterations,grid,median_us,p99_us,target_us,note\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        print(f"wrote latency report to {args.out}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "check": cmd_check,
    "monitor": cmd_monitor,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except nn.TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ds.DatasetFormatError, nn.CheckpointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
