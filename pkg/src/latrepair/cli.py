"""Command-line entry point: ``latrepair {synth,train,process,calibrate,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .evaluation import PAPER_REFERENCE, calibrate_threshold, evaluate, read_predictions, span_from_record
from .lattice import LatticeError, linear_lattice, parse_lattice, parse_transliteration_line, serialize_lattice
from .lexicon import Lexicon, LexiconError
from .lm import SmoothingConfigError
from .pipeline import PipelineConfig, PipelineError, RepairModels, process_turn
from .scope import DEFAULT_THETA, DEFAULT_WEIGHTS, ScopeModelError
from .synth import SynthSpec, build_lexicon, generate_synthetic
from .training import AnnotationError, ModelBundle, read_annotations, train_models, write_annotations

log = logging.getLogger("latrepair")

# flag -> built-in default; config files may set any of these by dest name
DEFAULTS = {
    "window": 4,
    "beam": 10,
    "tau_ip": 0.5,
    "theta": None,
    "alpha": DEFAULT_WEIGHTS[0],
    "beta": DEFAULT_WEIGHTS[1],
    "gamma": DEFAULT_WEIGHTS[2],
    "discount": 0.5,
    "budget_ms": 10000.0,
    "jobs": 1,
    "fragment_trigger": True,
}


class CLIError(Exception):
    pass


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{v} is outside [0, 1]")
    return v


def _open_unit(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{v} is outside (0, 1)")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{v} must be >= 1")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{v} must be >= 0")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{v} must be > 0")
    return v


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from --config, then from built-in defaults."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        unknown = set(config) - set(DEFAULTS)
        if unknown:
            raise CLIError(f"unknown config key(s) {sorted(unknown)}")
    for key, default in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, config.get(key, default))
    return args


def _add_weights(p):
    p.add_argument("--alpha", type=_unit_interval, help="word replacement weight (0.5)")
    p.add_argument("--beta", type=_unit_interval, help="semantic-class replacement weight (0.3)")
    p.add_argument("--gamma", type=_unit_interval, help="POS replacement weight (0.2)")


def _add_pipeline_flags(p):
    p.add_argument("--window", type=_positive_int, help="words searched on each side of an IP (4)")
    p.add_argument("--beam", type=_positive_int, help="partial paths kept per side (10)")
    p.add_argument("--tau-ip", dest="tau_ip", type=_unit_interval, help="acoustic trigger threshold (0.5)")
    p.add_argument("--theta", type=float, help="acceptance threshold, per-word log-probability (model's)")
    p.add_argument("--budget-ms", dest="budget_ms", type=_positive_float, help="per-turn time budget (10000)")
    p.add_argument("--jobs", type=_positive_int, help="worker processes (1)")
    p.add_argument("--no-fragment-trigger", dest="fragment_trigger", action="store_false", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latrepair", description=__doc__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus (transliterations + gold annotations)")
    p.add_argument("--n", type=_nonneg_int, required=True, help="number of turns")
    p.add_argument("--out", required=True, help="output prefix: writes PREFIX.txt, PREFIX.gold.jsonl")
    p.add_argument("--spec", help="synthetic spec JSON (defaults to the built-in scheduling domain)")
    p.add_argument("--seed", type=int)
    p.add_argument("--repair-rate", dest="repair_rate", type=_unit_interval)
    p.add_argument("--min-words", dest="min_words", type=_nonneg_int)
    p.add_argument("--oracle-ip", action="store_true", help="ip=1.0 on gold IPs only, no fragment flags")
    p.add_argument("--lexicon-out", help="also write the matching lexicon")

    p = sub.add_parser("train", help="estimate the scope model and trigrams")
    p.add_argument("--annotations", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    _add_weights(p)
    p.add_argument("--discount", type=_open_unit, help="absolute discount D (0.5)")
    p.add_argument("--theta", type=float, help=f"acceptance threshold stored in the model ({DEFAULT_THETA})")
    p.add_argument("--window", type=_positive_int)
    p.add_argument("--config")

    p = sub.add_parser("process", help="detect repairs and splice repair paths into lattices")
    p.add_argument("--model", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--input", required=True, help="lattice records (.jsonl) or transliterations")
    p.add_argument("--format", choices=["auto", "lattice", "text"], default="auto")
    p.add_argument("--out", required=True, help="augmented lattice records")
    p.add_argument("--edits", required=True, help="per-turn edit records")
    _add_pipeline_flags(p)
    p.add_argument("--config")

    p = sub.add_parser("calibrate", help="choose theta on held-out data and store it in the model")
    p.add_argument("--model", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--format", choices=["auto", "lattice", "text"], default="auto")
    p.add_argument("--out", help="write the model with the calibrated theta here")
    _add_pipeline_flags(p)
    p.add_argument("--config")

    p = sub.add_parser("eval", help="detection / correct-scope recall and precision")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True, help="edit records written by 'process'")
    p.add_argument("--json", help="also write the metrics as JSON")
    p.add_argument("--reference", action="store_true", help="show the published reference rows for layout")
    return ap


# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = SynthSpec.load(args.spec) if args.spec else SynthSpec()
    if args.seed is not None:
        spec.seed = args.seed
    if args.repair_rate is not None:
        spec.repair_rate = args.repair_rate
    if args.min_words is not None:
        spec.min_words = args.min_words
    turns = generate_synthetic(spec, args.n)
    prefix = Path(args.out)
    with open(f"{prefix}.txt", "w", encoding="utf-8") as fh:
        for t in turns:
            if args.oracle_ip:
                fh.write(f"{t.gold.turn_id}\t{' '.join(t.oracle_tokens())}\n")
            else:
                fh.write(t.transliteration() + "\n")
    write_annotations((t.gold for t in turns), f"{prefix}.gold.jsonl")
    if args.lexicon_out:
        build_lexicon(spec).save(args.lexicon_out)
    n_rep = sum(1 for t in turns if t.gold.repairs)
    print(f"wrote {len(turns)} turns ({n_rep} with a repair) to {prefix}.txt / {prefix}.gold.jsonl")
    return 0


def cmd_train(args) -> int:
    _resolve(args)
    weights = (args.alpha, args.beta, args.gamma)
    if abs(sum(weights) - 1.0) > 1e-12:
        raise CLIError(f"--alpha/--beta/--gamma must sum to 1, got {sum(weights)}")
    corpus = read_annotations(args.annotations)
    if not corpus:
        raise CLIError(f"{args.annotations}: empty corpus")
    lex = Lexicon.load(args.lexicon)
    theta = DEFAULT_THETA if args.theta is None else args.theta
    bundle = train_models(corpus, lex, weights, theta, args.window, args.discount)
    bundle.save(args.out)
    s = bundle.summary
    print(f"trained on {s['turns']} turns, {s['repairs']} repairs, {s['links']} links; "
          f"vocab {s['word_vocab']} words / {s['pos_tags']} tags / {s['sem_classes']} classes -> {args.out}")
    return 0


def _read_inputs(path: str, fmt: str):
    with open(path, encoding="utf-8") as fh:
        lines = [(k, line.rstrip("\n")) for k, line in enumerate(fh, start=1) if line.strip()]
    if fmt == "auto":
        fmt = "lattice" if lines and lines[0][1].lstrip().startswith("{") else "text"
    out = []
    for k, line in lines:
        if fmt == "lattice":
            out.append(parse_lattice(line, line=k))
        else:
            turn_id, tokens = parse_transliteration_line(line, k)
            out.append(linear_lattice(tokens, turn_id))
    return out


_WORKER: dict = {}


def _init_worker(model_path, lexicon_path, config):
    _WORKER["models"] = RepairModels.from_bundle(ModelBundle.load(model_path), Lexicon.load(lexicon_path))
    _WORKER["config"] = config


def _work(lattice):
    t0 = time.perf_counter()
    res = process_turn(lattice, _WORKER["models"], _WORKER["config"])
    return res, 1000 * (time.perf_counter() - t0)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(tau_ip=args.tau_ip, enable_fragment_trigger=args.fragment_trigger, window=args.window,
                          beam=args.beam, theta=args.theta, budget_ms=args.budget_ms)


def _run(args, lattices):
    config = _pipeline_config(args)
    if args.jobs > 1 and len(lattices) > 1:
        with ProcessPoolExecutor(args.jobs, initializer=_init_worker,
                                 initargs=(args.model, args.lexicon, config)) as pool:
            results = list(pool.map(_work, lattices, chunksize=max(1, len(lattices) // (4 * args.jobs))))
    else:
        _init_worker(args.model, args.lexicon, config)
        results = [_work(lat) for lat in lattices]
    for res, ms in results:
        log.info("turn %s: %.2f ms of %.0f ms budget, %d edit(s)%s", res.lattice.turn_id, ms, config.budget_ms,
                 len(res.edits), " [truncated]" if res.truncated else "")
    return [r for r, _ in results]


def cmd_process(args) -> int:
    _resolve(args)
    lattices = _read_inputs(args.input, args.format)
    results = _run(args, lattices)
    with open(args.out, "w", encoding="utf-8") as lat_fh, open(args.edits, "w", encoding="utf-8") as ed_fh:
        for res in results:
            lat_fh.write(serialize_lattice(res.lattice) + "\n")
            ed_fh.write(json.dumps(res.sidecar(), ensure_ascii=False) + "\n")
    n_edits = sum(len(r.edits) for r in results)
    n_trunc = sum(r.truncated for r in results)
    print(f"processed {len(results)} turns: {n_edits} repair(s) inserted, {n_trunc} truncated")
    return 0


def cmd_calibrate(args) -> int:
    _resolve(args)
    args.theta = -math.inf
    lattices = _read_inputs(args.input, args.format)
    gold = read_annotations(args.gold)
    results = _run(args, lattices)
    scored = {r.lattice.turn_id: [(e.hypothesis.score, span_from_record(e.to_record())) for e in r.edits]
              for r in results}
    theta, metrics = calibrate_threshold(scored, gold)
    print(f"theta = {theta!r}")
    print(metrics.table("Held-out"))
    if args.out:
        bundle = ModelBundle.load(args.model)
        bundle.scope.accept_threshold = theta
        bundle.save(args.out)
    return 0


def cmd_eval(args) -> int:
    gold = read_annotations(args.gold)
    preds = read_predictions(args.pred)
    gold_ids = {t.turn_id for t in gold}
    if preds and not gold_ids & set(preds):
        raise CLIError("gold and prediction files share no turn ids")
    metrics = evaluate(gold, preds)
    print(metrics.table("Result", PAPER_REFERENCE if args.reference else None))
    if args.json:
        Path(args.json).write_text(json.dumps(metrics.to_dict(), indent=1) + "\n", encoding="utf-8")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "process": cmd_process,
    "calibrate": cmd_calibrate,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CLIError, LatticeError, LexiconError, AnnotationError, ScopeModelError, PipelineError,
            SmoothingConfigError, OSError, ValueError) as exc:
        print(f"latrepair {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
