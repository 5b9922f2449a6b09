"""Command line harness: ``generate``, ``sample``, ``report`` and ``sweep``.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when
sampling itself fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .distributions import Exponential
from .errors import ParameterError, SamplingError, UnboundedRatioError
from .events import EventSeq, read_jsonl, write_jsonl
from .experiments import (SWEEP_AXES, default_benchmark_hawkes, default_hawkes_1d, default_hawkes_5d,
                          hawkes_sweep, marginal_means, sweep_trend, SweepPoint)
from .hawkes import HawkesProcess, make_hawkes_config
from .metrics import SampleSet, kl_per_event, llr, mmd_per_event
from .models import (DEFAULT_JUMP_DURATION, DEFAULT_JUMP_RATE, AlternatingMarkModel, DiscreteToyModel,
                     JumpProcessModel, RenewalModel, model_from_dict, sample_regimes, stitch_poisson)
from .sampler import SpecConfig, autoregressive_sample, speculative_sample, summarize_stats

NAMED_MODELS = ("hawkes", "hawkes1d", "hawkes5d", "benchmark", "jump", "renewal", "alternating", "discrete")


class ConfigError(Exception):
    pass


def _named_model(name: str, args, rng: np.random.Generator):
    if name == "hawkes":
        return HawkesProcess(make_hawkes_config(args.dim, args.sparsity, args.a_max, args.decay, rng))
    if name == "hawkes1d":
        return default_hawkes_1d()
    if name == "hawkes5d":
        return default_hawkes_5d()
    if name == "benchmark":
        return default_benchmark_hawkes()
    if name == "jump":
        return JumpProcessModel(sample_regimes(args.n_regimes, DEFAULT_JUMP_DURATION, DEFAULT_JUMP_RATE, rng))
    if name == "renewal":
        return RenewalModel(Exponential(1.0))
    if name == "alternating":
        return AlternatingMarkModel(Exponential(1.0))
    if name == "discrete":
        return DiscreteToyModel.random(rng)
    raise ConfigError(f"--model: unknown model {name!r}; use a params file or one of {', '.join(NAMED_MODELS)}")


def _load_json(path: str, what: str):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what}: file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{what}: {path} is not valid JSON ({e})") from e


def _read_lines(path: str, what: str) -> list[dict]:
    if not Path(path).is_file():
        raise ConfigError(f"{what}: file not found: {path}")
    try:
        return read_jsonl(path)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{what}: {path} is not valid JSON lines ({e})") from e


def resolve_model(args, rng):
    spec = args.model
    if spec.endswith(".json") or Path(spec).is_file():
        try:
            return model_from_dict(_load_json(spec, "--model"))
        except (KeyError, TypeError) as e:
            raise ConfigError(f"--model: {spec} lacks field {e}") from e
    return _named_model(spec, args, rng)


def _spec_config(args) -> SpecConfig:
    try:
        return SpecConfig(step=args.step, top_k=args.top_k, delta=args.delta, alpha=args.alpha,
                          grid_n=args.grid_n, seed=args.seed)
    except ParameterError as e:
        raise ConfigError(f"sampling config: {e}") from e


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"--out: cannot create {out} ({e})") from e
    return out


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    r_model, r_data = rng.spawn(2)
    model = resolve_model(args, r_model)
    out = _out_dir(args)
    params = model.to_dict()
    if isinstance(model, HawkesProcess):
        a = model.params.adjacency
        params["zero_fraction"] = float(np.mean(a == 0))
    seqs = []
    for r in r_data.spawn(args.n_samples):
        if isinstance(model, JumpProcessModel):
            seqs.append(stitch_poisson(model.regimes, r))
        else:
            seqs.append(autoregressive_sample(model, EventSeq.empty(), args.n_events, r))
    _dump(out / "params.json", params)
    write_jsonl(out / "data.jsonl", seqs)
    print(f"wrote {len(seqs)} sequences to {out / 'data.jsonl'}")
    return 0


def _histories(args) -> list[EventSeq]:
    if not args.history:
        return [EventSeq.empty()]
    rows = _read_lines(args.history, "--history")
    try:
        return [EventSeq.from_dict(r) for r in rows]
    except (KeyError, ValueError) as e:
        raise ConfigError(f"--history: bad sequence in {args.history} ({e})") from e


def cmd_sample(args) -> int:
    rng = np.random.default_rng(args.seed)
    r_model, r_run = rng.spawn(2)
    model = resolve_model(args, r_model)
    cfg = _spec_config(args)
    histories = _histories(args)
    out = _out_dir(args)
    modes = ["autoregressive", "speculative"] if args.mode == "both" else [args.mode]
    streams = dict(zip(("autoregressive", "speculative"), r_run.spawn(2)))
    for mode in modes:
        variant = "autoregressive" if mode == "autoregressive" else f"top{cfg.top_k}"
        children = streams[mode].spawn(len(histories) * args.n_samples)
        seqs, extra, stats, timings = [], [], [], {}
        for b, h in enumerate(histories):
            for s in range(args.n_samples):
                r = children[b * args.n_samples + s]
                if mode == "autoregressive":
                    seqs.append(autoregressive_sample(model, h, args.n_events, r, timings=timings))
                else:
                    seq, st = speculative_sample(model, h, args.n_events, cfg, r)
                    seqs.append(seq)
                    stats += st
                extra.append({"history": b, "sample": s, "n_history": len(h)})
        write_jsonl(out / f"samples_{variant}.jsonl", seqs, extra)
        if mode == "autoregressive":
            report = {"mode": mode, "variant": variant, "n_events": args.n_events,
                      "timings_ms": {k: v * 1e3 for k, v in timings.items()}}
        else:
            report = {"mode": mode, "variant": variant, "n_events": args.n_events,
                      "config": asdict(cfg), **summarize_stats(stats)}
        _dump(out / f"stats_{variant}.json", report)
        print(f"{variant}: wrote {len(seqs)} samples to {out}")
    return 0


def _sample_set(path: str, what: str) -> SampleSet:
    rows = _read_lines(path, what)
    if not rows:
        raise ConfigError(f"{what}: {path} is empty")
    try:
        n_hist = 1 + max(r.get("history", 0) for r in rows)
        groups = [[] for _ in range(n_hist)]
        heads = [None] * n_hist
        for r in rows:
            b = r.get("history", 0)
            seq = EventSeq.from_dict(r)
            n0 = r.get("n_history", 0)
            heads[b] = seq.head(n0) if n0 else EventSeq.empty()
            groups[b].append(seq)
        return SampleSet.from_sequences(heads, groups)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{what}: {path} does not hold a rectangular sample set ({e})") from e


def _per_history(fn, a: SampleSet, b: SampleSet):
    vals = []
    for i in range(a.shape[0]):
        ai = SampleSet(a.taus[i:i + 1], a.marks[i:i + 1], a.histories[i:i + 1])
        bi = SampleSet(b.taus[i:i + 1], b.marks[i:i + 1], b.histories[i:i + 1])
        vals.append(fn(ai, bi))
    return float(np.mean(vals)), float(np.std(vals))


def _variant_name(path: str) -> str:
    stem = Path(path).stem
    return stem[len("samples_"):] if stem.startswith("samples_") else stem


def _report_samples(args, out: Path) -> int:
    if not args.reference or not args.candidate:
        raise ConfigError("report needs --reference and --candidate (or --sweep)")
    model = resolve_model(args, np.random.default_rng(args.seed))
    ref = _sample_set(args.reference, "--reference")
    cands = [(_variant_name(p), _sample_set(p, "--candidate")) for p in args.candidate]
    d = model.n_marks
    metrics = {
        "kl": lambda x, y: kl_per_event(x, y, d),
        "mmd": mmd_per_event,
        "llr": lambda x, y: llr(model, x, y),
    }
    rows = []
    half_a, half_b = ref.split()
    pairs = [("true", half_a, half_b)] + [(name, c, ref) for name, c in cands]
    for name, x, y in pairs:
        if x.shape[0] != y.shape[0] or x.shape[2] != y.shape[2]:
            raise ConfigError(f"shape mismatch: {name} has (B, S, L) = {x.shape}, reference {y.shape}")
        for metric, fn in metrics.items():
            mean, std = _per_history(fn, x, y)
            rows.append({"metric": metric, "variant": name, "mean": f"{mean:.10g}", "std": f"{std:.10g}"})
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["metric", "variant", "mean", "std"])
        w.writeheader()
        w.writerows(rows)
    timing_rows = []
    for path in dict.fromkeys([args.reference] + list(args.candidate)):
        stats_path = Path(path).with_name(Path(path).name.replace("samples_", "stats_", 1)).with_suffix(".json")
        if stats_path.is_file():
            t = json.loads(stats_path.read_text()).get("timings_ms", {})
            comps = {k: t.get(k, 0.0) for k in ("encoder", "decoder", "sample", "rejection_const")}
            timing_rows.append({"variant": _variant_name(path), **{k: f"{v:.3f}" for k, v in comps.items()},
                                "total": f"{sum(comps.values()):.3f}"})
    if timing_rows:
        with open(out / "timing.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(timing_rows[0]))
            w.writeheader()
            w.writerows(timing_rows)
    _dump(out / "summary.json", {"metrics": rows, "timings_ms": timing_rows})
    print(f"wrote {out / 'metrics.csv'}")
    return 0


def _read_sweep(path: str) -> list[SweepPoint]:
    if not Path(path).is_file():
        raise ConfigError(f"--sweep: file not found: {path}")
    with open(path, newline="") as fh:
        try:
            return [SweepPoint(int(r["dim"]), float(r["sparsity"]), float(r["a_max"]), float(r["decay"]),
                               float(r["avg_step"]), float(r["acceptance_rate"]), float(r["spectral_rescale"]))
                    for r in csv.DictReader(fh)]
        except (KeyError, ValueError) as e:
            raise ConfigError(f"--sweep: {path} is not a sweep table ({e})") from e


def _report_sweep(args, out: Path) -> int:
    points = _read_sweep(args.sweep)
    cells = {}
    for p in points:
        cells.setdefault((p.dim, p.sparsity), []).append(p.avg_step)
    with open(out / "heatmap.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dim", "sparsity", "avg_step"])
        for (dim, sp), v in sorted(cells.items()):
            w.writerow([dim, sp, f"{np.mean(v):.10g}"])
    trend = sweep_trend(points)
    trend["by_a_max"] = marginal_means(points, "a_max")
    trend["by_decay"] = marginal_means(points, "decay")
    _dump(out / "trend.json", {k: ({str(a): b for a, b in v.items()} if isinstance(v, dict) else v)
                               for k, v in trend.items()})
    print(f"wrote {out / 'heatmap.csv'}")
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args)
    if args.sweep:
        return _report_sweep(args, out)
    return _report_samples(args, out)


SWEEP_FIELDS = ["dim", "sparsity", "a_max", "decay", "avg_step", "acceptance_rate", "spectral_rescale"]


def cmd_sweep(args) -> int:
    cfg = _spec_config(args)
    axes = {"dim": args.dims, "sparsity": args.sparsities, "a_max": args.a_maxes, "decay": args.decays}
    for k, v in axes.items():
        if not v:
            raise ConfigError(f"sweep axis {k} is empty")
    if any(not 0 <= s <= 1 for s in args.sparsities):
        raise ConfigError("--sparsities must lie in [0, 1]")
    out = _out_dir(args)
    points = hawkes_sweep(axes, args.n_samples, args.n_events, cfg, args.seed, args.workers)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS)
        w.writeheader()
        for p in points:
            row = asdict(p)
            w.writerow({k: (f"{row[k]:.10g}" if isinstance(row[k], float) else row[k]) for k in SWEEP_FIELDS})
    trend = sweep_trend(points)
    _dump(out / "trend.json", {k: ({str(a): b for a, b in v.items()} if isinstance(v, dict) else v)
                               for k, v in trend.items()})
    print(f"wrote {len(points)} configurations to {out / 'sweep.csv'}")
    return 0


def _common(p: argparse.ArgumentParser, sampling: bool = True):
    p.add_argument("--model", default="hawkes1d",
                   help=f"params JSON path or one of: {', '.join(NAMED_MODELS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("--n-events", type=int, default=100)
    p.add_argument("--n-samples", type=int, default=10)
    p.add_argument("--config", help="JSON file whose keys override the flags")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--sparsity", type=float, default=0.5)
    p.add_argument("--a-max", type=float, default=0.5)
    p.add_argument("--decay", type=float, default=1.0)
    p.add_argument("--n-regimes", type=int, default=20)
    if sampling:
        p.add_argument("--step", type=int, default=5)
        p.add_argument("--top-k", type=int, default=1)
        p.add_argument("--delta", type=float, default=0.0)
        p.add_argument("--alpha", type=float, default=0.995)
        p.add_argument("--grid-n", type=int, default=512)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectpp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    g = sub.add_parser("generate", help="write a synthetic dataset and its generating params")
    _common(g, sampling=False)
    g.set_defaults(func=cmd_generate)
    s = sub.add_parser("sample", help="sample continuations autoregressively and/or speculatively")
    _common(s)
    s.add_argument("--mode", choices=["autoregressive", "speculative", "both"], default="both")
    s.add_argument("--history", help="JSONL of starting histories (default: one empty history)")
    s.set_defaults(func=cmd_sample)
    r = sub.add_parser("report", help="metrics and timing tables from sample files, or sweep heatmap data")
    _common(r, sampling=False)
    r.add_argument("--reference", help="autoregressive samples JSONL")
    r.add_argument("--candidate", nargs="*", default=[], help="sample JSONL files to compare")
    r.add_argument("--sweep", help="sweep.csv written by the sweep command")
    r.set_defaults(func=cmd_report)
    w = sub.add_parser("sweep", help="average accepted step over random Hawkes configurations")
    _common(w)
    w.add_argument("--dims", type=int, nargs="*", default=list(SWEEP_AXES["dim"]))
    w.add_argument("--sparsities", type=float, nargs="*", default=list(SWEEP_AXES["sparsity"]))
    w.add_argument("--a-maxes", type=float, nargs="*", default=list(SWEEP_AXES["a_max"]))
    w.add_argument("--decays", type=float, nargs="*", default=list(SWEEP_AXES["decay"]))
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep, n_samples=4)
    return parser


def _apply_config(args) -> None:
    if not getattr(args, "config", None):
        return
    cfg = _load_json(args.config, "--config")
    if not isinstance(cfg, dict):
        raise ConfigError(f"--config: {args.config} must hold a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("func", "command", "config"):
            raise ConfigError(f"--config: unknown field {key!r}")
        setattr(args, attr, value)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except (ConfigError, ParameterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (UnboundedRatioError, SamplingError) as e:
        print(f"sampling error ({args.command}, model {args.model}): {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
