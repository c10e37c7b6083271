"""Command line front end.

Subcommands: ``simulate`` (synthesize an episode), ``replay`` (run the
pipeline and report), ``query`` (replay with a query script), ``eval``
(score against ground truth), ``gridsearch`` (sweep the integration
parameters), and ``inspect`` (dump the belief state).  Exit codes: 0 on
success, 2 for parse errors, 3 for validation errors, 4 for integrity
errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import scenelog
from .amortizer import AmortizationParams
from .config import EngineConfig
from .errors import EngineError, ValidationError, exit_code_for
from .evalkit import (
    MODE_AMORTIZED,
    MODE_ONE_SHOT,
    annotate_episode,
    grid_search,
    score,
)
from .replay import replay
from .simkit import SimSpec, generate, knn_examples, make_episode_spec

GRID_COLUMNS = ("ac", "cf", "accuracy", "precision", "recall", "coverage",
                "mode")


def _parse_override(setting: str) -> tuple[str, object]:
    if "=" not in setting:
        raise ValidationError(
            f"override {setting!r} must look like section.key=value")
    dotted, raw = setting.split("=", 1)
    try:
        value: object = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return dotted, value


def _load_config(args: argparse.Namespace) -> EngineConfig:
    cfg = (EngineConfig.load(args.config)
           if getattr(args, "config", None) else EngineConfig())
    overrides = dict(_parse_override(s) for s in getattr(args, "set", []) or [])
    if getattr(args, "no_filters", False):
        overrides["filters.enabled"] = False
    if getattr(args, "knn", None):
        overrides["annotators.knn_table"] = str(args.knn)
    if getattr(args, "ac", None) is not None:
        overrides["amortization.ac"] = args.ac
    if getattr(args, "cf", None) is not None:
        overrides["amortization.cf"] = args.cf
    return cfg.apply_overrides(overrides) if overrides else cfg


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump_json(data: object) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.spec:
        text = Path(args.spec).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ValidationError(
                f"{args.spec}: invalid JSON: {err.msg}") from None
        spec = SimSpec.from_dict(data)
        if args.seed is not None:
            spec.seed = args.seed
    else:
        from .simkit import NoiseSpec
        spec = make_episode_spec(
            n_objects=args.objects,
            n_observations=args.observations,
            n_pick_place=args.pick_place,
            blur_fraction=args.blur_fraction,
            idle_every=args.idle_every,
            idle_duration=args.idle_duration,
            noise=NoiseSpec(pose=args.noise_pose,
                            histogram=args.noise_histogram,
                            descriptor=args.noise_descriptor),
            classifier_dropout=args.dropout,
            confusion_rate=args.confusion,
            seed=args.seed if args.seed is not None else 0,
        )
    scenes, gt = generate(spec)
    scenelog.write_scenes(scenes, args.out)
    if args.gt:
        scenelog.write_ground_truth(gt, args.gt)
    if args.knn_out:
        scenelog.write_descriptor_table(knn_examples(spec), args.knn_out)
    print(f"wrote {len(scenes)} scenes to {args.out}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    config = _load_config(args)
    scenes = scenelog.read_scenes(args.log)
    result = replay(scenes, config, base_dir=Path(args.log).parent)
    _write_or_print(_dump_json(result.report()), args.out)
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    config = _load_config(args)
    scenes = scenelog.read_scenes(args.log)
    script = scenelog.read_query_script(args.script)
    result = replay(scenes, config, script=script,
                    base_dir=Path(args.log).parent)
    lines = "".join(json.dumps(q.to_dict(), sort_keys=True) + "\n"
                    for q in result.transcript)
    _write_or_print(lines, args.out)
    return 0


def _prepared_episode(args: argparse.Namespace, config: EngineConfig):
    scenes = scenelog.read_scenes(args.log)
    gt = scenelog.read_ground_truth(args.gt)
    result = replay(scenes, config, base_dir=Path(args.log).parent)
    bank = config.bank(Path(args.log).parent)
    keys = sorted({t for _, labels in gt.items() for t in labels})
    annotate_episode(result.episode, keys, bank, result.ledger)
    return result.episode, gt, bank


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args)
    episode, gt, bank = _prepared_episode(args, config)
    params = config.amortization
    reports = [
        score(episode, gt, AmortizationParams(ac=1, cf=0.0), MODE_ONE_SHOT,
              bank),
        score(episode, gt, params, MODE_AMORTIZED, bank),
    ]
    for report in reports:
        row = report.row()
        print(f"mode={row['mode']} ac={row['ac']} cf={row['cf']} "
              f"coverage={row['coverage']:.4f} accuracy={row['accuracy']:.4f} "
              f"precision={row['precision']:.4f} recall={row['recall']:.4f}")
    if args.rows_out:
        _write_rows([r.row() for r in reports], args.rows_out)
    return 0


def _write_rows(rows: list[dict], out: str | None) -> None:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=GRID_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    _write_or_print(buffer.getvalue(), out)


def _parse_range(text: str) -> list[int]:
    try:
        if ":" in text:
            lo, hi = text.split(":", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise ValidationError(f"invalid integer range {text!r}") from None
    if not values:
        raise ValidationError(f"empty range {text!r}")
    return values


def _parse_floats(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v]
    except ValueError:
        raise ValidationError(f"invalid float list {text!r}") from None
    if not values:
        raise ValidationError(f"empty float list {text!r}")
    return values


def cmd_gridsearch(args: argparse.Namespace) -> int:
    config = _load_config(args)
    episode, gt, bank = _prepared_episode(args, config)
    result = grid_search(
        episode, gt,
        ac_values=_parse_range(args.ac_range),
        cf_values=_parse_floats(args.cf_list),
        bank=bank,
        normalized_rule=args.normalized,
    )
    _write_rows(result.rows(), args.out)
    print(json.dumps({"selected": {"ac": result.selected.ac,
                                   "cf": result.selected.cf}},
                     sort_keys=True))
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    config = _load_config(args)
    scenes = scenelog.read_scenes(args.log)
    result = replay(scenes, config, base_dir=Path(args.log).parent)
    summary = {
        "scenes": len(result.episode.scenes),
        "processed": sum(1 for d in result.decisions if d.processed),
        "skip_reasons": result.skip_counts(),
        "objects": result.episode.belief_summary(),
    }
    _write_or_print(_dump_json(summary), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefstate",
        description="Belief-state engine over perception scene logs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="engine configuration JSON file")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a configuration entry (JSON value)")
        p.add_argument("--no-filters", action="store_true",
                       help="disable all scene filters")
        p.add_argument("--knn", help="descriptor table for the classifier")
        p.add_argument("--ac", type=int, help="integration window override")
        p.add_argument("--cf", type=float,
                       help="integration confidence floor override")

    p = sub.add_parser("simulate", help="generate a synthetic episode")
    p.add_argument("--spec", help="simulation spec JSON file")
    p.add_argument("--out", required=True, help="scene log output path")
    p.add_argument("--gt", help="ground truth output path")
    p.add_argument("--knn-out", help="descriptor table output path")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--objects", type=int, default=9)
    p.add_argument("--observations", type=int, default=30)
    p.add_argument("--pick-place", type=int, default=3)
    p.add_argument("--blur-fraction", type=float, default=0.0)
    p.add_argument("--idle-every", type=int, default=0)
    p.add_argument("--idle-duration", type=float, default=30.0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--confusion", type=float, default=0.0)
    p.add_argument("--noise-pose", type=float, default=0.0)
    p.add_argument("--noise-histogram", type=float, default=0.0)
    p.add_argument("--noise-descriptor", type=float, default=0.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="replay a scene log and report")
    p.add_argument("--log", required=True)
    p.add_argument("--out", help="write the JSON report here")
    add_config_flags(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("query", help="replay with a query script")
    p.add_argument("--log", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--out", help="write the JSONL transcript here")
    add_config_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score answers against ground truth")
    p.add_argument("--log", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--rows-out", help="write metric rows as CSV here")
    add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gridsearch",
                       help="sweep integration parameters and pick a point")
    p.add_argument("--log", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--ac-range", default="1:20",
                   help="integer range lo:hi or comma list")
    p.add_argument("--cf-list", default="0.6,0.66,0.72,0.8",
                   help="comma-separated confidence floors")
    p.add_argument("--normalized", action="store_true",
                   help="use the range-normalized selection rule")
    p.add_argument("--out", help="write grid rows as CSV here")
    add_config_flags(p)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("inspect", help="dump the belief state of a log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", help="write the JSON summary here")
    add_config_flags(p)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as err:
        print(f"error: {err}", file=sys.stderr)
        return exit_code_for(err)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return exit_code_for(ValidationError(str(err)))


if __name__ == "__main__":
    raise SystemExit(main())
