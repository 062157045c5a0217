"""Command-line pipeline: split, calibrate, predict, evaluate, simulate, report.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 calibration error,
4 I/O error. Data goes to ``--out`` (or stdout), diagnostics to stderr.
Outputs are only written once every result has been computed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import conformal, dataset, metrics, simulation
from .errors import CalibrationError, ConformalError, RecordFormatError, ValidationError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CALIBRATION, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _alpha(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _fractions(text):
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fractions {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("need exactly three comma-separated fractions")
    return parts


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conformal-ordinal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def records_cmd(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("records", help="JSON Lines record file")
        p.add_argument("--manifest", required=True, help="label-space manifest (JSON)")
        return p

    p = records_cmd("split", "seeded train/calibration/test split")
    p.add_argument("--fractions", type=_fractions, default=(0.70, 0.15, 0.15))
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--out", required=True, help="output directory")

    p = records_cmd("calibrate", "fit the conformal threshold")
    p.add_argument("--alpha", type=_alpha, default=0.1)
    p.add_argument("--force-nonempty", action="store_true")
    p.add_argument("--out")

    p = records_cmd("predict", "emit prediction sets")
    p.add_argument("--model", required=True)
    p.add_argument("--force-nonempty", action="store_true")
    p.add_argument("--out")

    p = records_cmd("evaluate", "score a labelled test file")
    p.add_argument("--model", required=True)
    p.add_argument("--force-nonempty", action="store_true")
    p.add_argument("--dataset", help="dataset name shown in tables")
    p.add_argument("--system", help="model name shown in tables")
    p.add_argument("--format", choices=("table", "machine"), default="machine")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte-Carlo coverage experiment")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--n-cal", type=int, default=1815)
    p.add_argument("--n-test", type=int, default=1815)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--alpha", type=_alpha, default=0.1)
    p.add_argument("--sharpness", type=float, default=1.0)
    p.add_argument("--distortion", type=float, default=1.0)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--force-nonempty", action="store_true")
    p.add_argument("--per-trial", help="also write a per-trial CSV table here")
    p.add_argument("--out")

    p = sub.add_parser("report", help="render evaluation reports as one table")
    p.add_argument("reports", nargs="+", help="EvalReport JSON files")
    p.add_argument("--format", choices=("table", "machine"), default="table")
    p.add_argument("--out")
    return parser


def _load_model(args):
    model = conformal.load_model(args.model)
    if args.force_nonempty:
        model = dataclasses.replace(model, force_nonempty=True)
    return model


def _cmd_split(args):
    manifest = dataset.load_manifest(args.manifest)
    records = dataset.load_records(args.records, manifest)
    spec = dataset.SplitSpec(args.fractions, args.seed)
    parts = dataset.split(records, spec)
    out = Path(args.out)
    outputs = {out / f"{name}.jsonl": dataset.format_records(part)
               for name, part in zip(("train", "calibration", "test"), parts)}
    outputs[out / "split_report.json"] = json.dumps(dataset.split_report(spec, parts), indent=2) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    return outputs


def _cmd_calibrate(args):
    manifest = dataset.load_manifest(args.manifest)
    records = dataset.load_records(args.records, manifest)
    model = conformal.calibrate(
        records, args.alpha, args.force_nonempty, calibration_sha256=conformal.file_sha256(args.records)
    )
    return {args.out: json.dumps(conformal.model_to_dict(model), indent=2) + "\n"}


def _cmd_predict(args):
    manifest = dataset.load_manifest(args.manifest)
    records = dataset.load_records(args.records, manifest)
    model = _load_model(args)
    sets = conformal.predict_batch(model, records)
    return {args.out: conformal.format_predictions(sets, model.label_space)}


def _cmd_evaluate(args):
    manifest = dataset.load_manifest(args.manifest)
    records = dataset.load_records(args.records, manifest)
    model = _load_model(args)
    if records.label_space != model.label_space:
        raise ValidationError("record set and model use different label spaces")
    report = metrics.evaluate(model, records, dataset=args.dataset, system=args.system)
    text = report.to_json() if args.format == "machine" else metrics.format_table([report])
    return {args.out: text}


def _cmd_simulate(args):
    config = simulation.SimConfig(
        K=args.K, n_calibration=args.n_cal, n_test=args.n_test, trials=args.trials,
        alpha=args.alpha, sharpness=args.sharpness, distortion=args.distortion,
        seed=args.seed, force_nonempty=args.force_nonempty,
    )
    result = simulation.run_coverage_experiment(config)
    outputs = {args.out: result.to_json()}
    if args.per_trial:
        outputs[args.per_trial] = result.per_trial_csv()
    return outputs


def _cmd_report(args):
    reports = []
    for path in args.reports:
        try:
            reports.append(metrics.EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8"))))
        except (json.JSONDecodeError, TypeError) as exc:
            raise RecordFormatError(f"not an evaluation report: {exc}", path) from None
    if args.format == "machine":
        text = json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    else:
        text = metrics.format_table(reports)
    return {args.out: text}


COMMANDS = {
    "split": _cmd_split,
    "calibrate": _cmd_calibrate,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
}


def _emit(outputs: dict, stdout):
    written = []
    try:
        for path, text in outputs.items():
            if path is None:
                stdout.write(text)
            else:
                dataset.atomic_write_text(path, text)
                written.append(path)
    except BaseException:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run one subcommand and return its exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        _emit(COMMANDS[args.command](args), stdout)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"calibration error: {exc}", file=stderr)
        return EXIT_CALIBRATION
    except (ConformalError, ValueError) as exc:
        print(f"invalid input: {exc}", file=stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=stderr)
        return EXIT_IO
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
