"""Command line driver.

Subcommands: factorize, attend, metrics, synth, bench, demo-forward,
config. Signals travel as CSV (one sample per line, or time,value
pairs); structured reports are JSON with sorted keys, so an emitted
report re-serializes byte-identically after parsing.

Exit codes: 0 success, 1 domain error (violated precondition), 2 I/O or
parse error.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import synth
from .attention import csim_map, compute_attention
from .config import ENV_CONFIG_PATH, defaults_text, load_run_config
from .errors import DomainError, InputFormatError
from .factorize import constrained_nmf_mu, grbf_basis, nmf_mu, target_basis
from .metrics import estimate_rate_fft, evaluate_windows
from .network import forward_multitask, param_count
from .tensors import EmbeddingMatrix, VoxelEmbedding, Waveform


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def read_signal_csv(path):
    """One value per line, or time,value pairs; a single leading header
    line is tolerated. Malformed rows raise with their line number."""
    values = []
    first = True
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            tokens = [tok.strip() for tok in line.split(",")]
            if len(tokens) > 2:
                raise InputFormatError(f"{path}: line {lineno}: expected 1 or 2 columns, got {len(tokens)}")
            try:
                values.append(float(tokens[-1]))
            except ValueError:
                if first:
                    first = False
                    continue
                raise InputFormatError(
                    f"{path}: line {lineno}: not a number: {tokens[-1]!r}"
                ) from None
            first = False
    if not values:
        raise InputFormatError(f"{path}: no samples found")
    return np.asarray(values)


def write_signal_csv(path, wave, with_time=False):
    lines = []
    for i, v in enumerate(wave.samples):
        if with_time:
            lines.append(f"{i / wave.fs:.6f},{v:.10g}")
        else:
            lines.append(f"{v:.10g}")
    _write_text(path, "\n".join(lines) + "\n")


def read_matrix_csv(path):
    rows = []
    width = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError:
                raise InputFormatError(f"{path}: line {lineno}: non-numeric entry") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise InputFormatError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise InputFormatError(f"{path}: empty matrix")
    return np.asarray(rows)


def _emit_report(args, obj, also_stdout=True):
    text = dump_json(obj)
    if getattr(args, "report", None):
        _write_text(args.report, text)
    if also_stdout:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_factorize(args):
    cfg = load_run_config(args.config, args.seed)
    variant = args.variant or cfg.variant
    rank = args.rank or cfg.rank
    iterations = args.iterations or cfg.iterations

    if args.input:
        v = read_matrix_csv(args.input)
    else:
        m, n = _parse_shape(args.demo_shape, 2, "--demo-shape")
        v = np.random.default_rng(cfg.seed).random((m, n))
    v = EmbeddingMatrix(v)

    if variant == "fsam":
        res = nmf_mu(v, rank, iterations, cfg.seed, guard=cfg.epsilon)
    elif variant == "grbf":
        basis = grbf_basis(v.m, args.grbf_sigma or cfg.grbf_sigma, args.grbf_delta_t or cfg.grbf_delta_t)
        res = constrained_nmf_mu(v, basis.phi, rank, iterations, cfg.seed, guard=cfg.epsilon)
    elif variant == "tsfm":
        if not args.target:
            raise DomainError("tsfm factorization needs --target")
        y = read_signal_csv(args.target)
        res = constrained_nmf_mu(v, target_basis(y, v.m).basis, rank, iterations, cfg.seed, guard=cfg.epsilon)
    else:
        raise DomainError(f"unknown variant {variant!r}")

    _emit_report(args, {
        "variant": variant,
        "m": v.m,
        "n": v.n,
        "rank": rank,
        "iterations": iterations,
        "seed": cfg.seed,
        "error_trace": [float(e) for e in res.error_trace],
        "final_error": float(res.error_trace[-1]),
    })
    return 0


def _parse_shape(text, length, flag):
    try:
        parts = tuple(int(tok) for tok in text.split(","))
    except (AttributeError, ValueError):
        raise InputFormatError(f"{flag} expects {length} comma-separated integers") from None
    if len(parts) != length:
        raise InputFormatError(f"{flag} expects {length} comma-separated integers")
    return parts


def cmd_attend(args):
    cfg = load_run_config(args.config, args.seed)
    variant = args.variant or cfg.variant
    att_cfg = cfg.attention_config(variant)

    if args.input:
        data = np.load(args.input)
        if data.ndim != 4:
            raise DomainError(f"{args.input}: expected a 4D array, got ndim={data.ndim}")
        eps = VoxelEmbedding(data)
        target = read_signal_csv(args.target) if args.target else None
        mask = None
    else:
        shape = _parse_shape(args.shape, 4, "--shape")
        tau = shape[0]
        pulse = synth.gen_pulse(args.fs, args.rate, tau / args.fs, 0.0, 0.0, cfg.seed)
        rng = np.random.default_rng(cfg.seed)
        coords = [
            (c, a, b)
            for c in range(shape[1])
            for a in range(shape[2])
            for b in range(shape[3])
        ]
        rng.shuffle(coords)
        n_planted = min(args.n_planted, len(coords))
        spec = synth.PlantSpec(shape, tuple(coords[:n_planted]), pulse, args.noise_sigma, cfg.seed)
        eps, mask = synth.gen_planted_embedding(spec)
        target = pulse.samples

    out = compute_attention(eps, att_cfg, target)
    report = {
        "variant": variant,
        "shape": list(eps.shape),
        "iterations": att_cfg.iterations,
        "rank": att_cfg.rank,
        "seed": att_cfg.seed,
        "final_error": float(out.factorization.error_trace[-1]),
    }
    if target is not None:
        cs = csim_map(out.excited, target)
        report["csim_mean"] = float(cs.mean())
        if mask is not None:
            report["csim_planted_mean"] = float(cs[mask].mean())
            report["csim_background_mean"] = float(cs[~mask].mean())
            report["csim_gap"] = float(cs[mask].mean() - cs[~mask].mean())
    if args.save_excited:
        np.save(args.save_excited, out.excited.data)
    _emit_report(args, report)
    return 0


def cmd_metrics(args):
    cfg = load_run_config(args.config, args.seed)
    pred = Waveform(read_signal_csv(args.pred), args.fs)
    gt = Waveform(read_signal_csv(args.gt), args.fs)
    report = evaluate_windows(
        pred,
        gt,
        kind=args.kind,
        window_s=args.window_s or cfg.window_s,
        pad_factor=cfg.pad_factor,
        max_lag_s=args.max_lag_s if args.max_lag_s is not None else cfg.max_lag_s,
    )
    obj = report.as_dict()
    if args.format == "json":
        _emit_report(args, obj)
    else:
        if getattr(args, "report", None):
            _write_text(args.report, dump_json(obj))
        sys.stdout.write(_format_table(report))
    return 0


def _format_table(report):
    labels = (("mae", "MAE"), ("rmse", "RMSE"), ("mape", "MAPE"),
              ("corr", "Corr"), ("snr", "SNR"), ("macc", "MACC"))
    lines = [f"{'metric':<8}{'avg':>14}{'se':>14}"]
    for attr, label in labels:
        mv = getattr(report, attr)
        if mv is None:
            continue
        lines.append(f"{label:<8}{mv.avg:>14.6f}{mv.se:>14.6f}")
    lines.append(f"windows  {report.n}")
    return "\n".join(lines) + "\n"


def cmd_synth(args):
    cfg = load_run_config(args.config, args.seed)
    gen = synth.gen_pulse if args.kind == "pulse" else synth.gen_resp
    wave = gen(args.fs, args.rate, args.duration, args.harmonic_ratio, args.noise_sigma, cfg.seed)
    write_signal_csv(args.out, wave, with_time=args.with_time)
    sys.stdout.write(f"wrote {wave.samples.size} samples at {wave.fs} Hz to {args.out}\n")
    return 0


def cmd_bench(args):
    cfg = load_run_config(args.config, args.seed)
    if args.repeats < 1:
        raise DomainError("repeats must be >= 1")
    model = cfg.model_config(omit_attention=args.omit_attention)
    rgb, thermal = _demo_clips(model, args.frames, cfg.seed)

    def run():
        t0 = time.perf_counter()
        forward_multitask(rgb, thermal, model)
        return time.perf_counter() - t0

    for _ in range(3):
        run()
    times = [run() for _ in range(args.repeats)]
    _emit_report(args, {
        "frames": args.frames,
        "resolution": model.input_resolution,
        "channels": model.input_channels,
        "param_count": param_count(model),
        "repeats": args.repeats,
        "warmup": 3,
        "min_s": min(times),
        "median_s": float(np.median(times)),
        "mean_s": float(np.mean(times)),
        "times_s": times,
    })
    return 0


def _demo_clips(model, frames, seed):
    res = model.input_resolution
    if model.input_channels == 4:
        rgb = synth.gen_clip(frames, res, 3, seed=seed)
        thermal = synth.gen_clip(frames, res, 1, seed=seed + 1)
    elif model.input_channels == 3:
        rgb, thermal = synth.gen_clip(frames, res, 3, seed=seed), None
    else:
        rgb, thermal = None, synth.gen_clip(frames, res, 1, seed=seed)
    return rgb, thermal


def cmd_demo_forward(args):
    cfg = load_run_config(args.config, args.seed)
    model = cfg.model_config(omit_attention=args.omit_attention)
    rgb, thermal = _demo_clips(model, args.frames, cfg.seed)
    pulse, resp = forward_multitask(rgb, thermal, model, fs=args.fs)
    hr = estimate_rate_fft(pulse, cfg.band("hr")) if pulse.duration_s >= 10 else None
    rr = estimate_rate_fft(resp, cfg.band("rr")) if resp.duration_s >= 10 else None
    if args.save_prefix:
        write_signal_csv(args.save_prefix + "_bvp.csv", pulse)
        write_signal_csv(args.save_prefix + "_rsp.csv", resp)
    _emit_report(args, {
        "frames": args.frames,
        "fs": args.fs,
        "bvp_len": pulse.samples.size,
        "rsp_len": resp.samples.size,
        "hr_bpm": hr,
        "rr_bpm": rr,
        "attention": not args.omit_attention and cfg.use_attention,
    })
    return 0


def cmd_config(args):
    if args.print_defaults:
        sys.stdout.write(defaults_text())
        return 0
    if args.check:
        load_run_config(args.check)
        sys.stdout.write(f"{args.check}: ok\n")
        return 0
    raise InputFormatError("config needs --print-defaults or --check PATH")


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="physfactor",
        description="Factorization attention, toy physiological model and metric suite.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help=f"INI config path (falls back to ${ENV_CONFIG_PATH}, then defaults)")
    common.add_argument("--seed", type=int, default=None, help="override the configured RNG seed")
    common.add_argument("--report", default=None, help="write the JSON report to this path")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", parents=[common], help="run one factorization on a matrix")
    p.add_argument("--input", help="CSV matrix, one comma-separated row per line")
    p.add_argument("--demo-shape", default="64,512", help="M,N for a seeded random matrix")
    p.add_argument("--variant", choices=("fsam", "grbf", "tsfm"))
    p.add_argument("--rank", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--grbf-sigma", type=float)
    p.add_argument("--grbf-delta-t", type=int)
    p.add_argument("--target", help="target signal CSV (tsfm)")
    p.set_defaults(fn=cmd_factorize)

    p = sub.add_parser("attend", parents=[common],
                       help="run the attention pipeline on a planted or loaded embedding")
    p.add_argument("--input", help="4D .npy embedding (t, c, a, b)")
    p.add_argument("--target", help="target signal CSV for tsfm / CSIM")
    p.add_argument("--shape", default="160,4,3,3", help="T,C,A,B of the planted embedding")
    p.add_argument("--n-planted", type=int, default=12)
    p.add_argument("--noise-sigma", type=float, default=0.3)
    p.add_argument("--rate", type=float, default=72.0)
    p.add_argument("--fs", type=float, default=25.0)
    p.add_argument("--variant", choices=("fsam", "grbf", "tsfm"))
    p.add_argument("--save-excited", help="save the excited embedding to this .npy path")
    p.set_defaults(fn=cmd_attend)

    p = sub.add_parser("metrics", parents=[common], help="windowed metric evaluation of two signal files")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--kind", choices=("hr", "rr"), default="hr")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--window-s", type=float, default=None)
    p.add_argument("--max-lag-s", type=float, default=None)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic signal CSV")
    p.add_argument("--kind", choices=("pulse", "resp"), default="pulse")
    p.add_argument("--fs", type=float, default=25.0)
    p.add_argument("--rate", type=float, default=72.0)
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--harmonic-ratio", type=float, default=0.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--with-time", action="store_true", help="write time,value rows")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("bench", parents=[common], help="time the dual-branch forward pass")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--frames", type=int, default=160)
    p.add_argument("--omit-attention", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("demo-forward", parents=[common],
                       help="forward synthetic clips through both branches")
    p.add_argument("--frames", type=int, default=160)
    p.add_argument("--fs", type=float, default=25.0)
    p.add_argument("--omit-attention", action="store_true")
    p.add_argument("--save-prefix", help="write <prefix>_bvp.csv and <prefix>_rsp.csv")
    p.set_defaults(fn=cmd_demo_forward)

    p = sub.add_parser("config", parents=[common], help="print or validate configuration")
    p.add_argument("--print-defaults", action="store_true")
    p.add_argument("--check", help="validate this INI file")
    p.set_defaults(fn=cmd_config)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
