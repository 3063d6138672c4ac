"""Command-line surface: sample-plan, synth, train, evaluate, predict, roc-export.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical error.
Heavy modules are imported inside the handlers so quick planning calls start
fast.
"""

import argparse
import sys
from pathlib import Path

from .errors import DataError, InvalidInputError, NumericalError
from .sampler import SamplerConfig, select_frames


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; our contract says 1
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="padstack",
                     description="Frame-skipping recurrent ensemble for "
                                 "presentation attack detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-plan", help="print the retained frame indices")
    p.add_argument("--frames", type=int, required=True, help="total frames in the video")
    p.add_argument("--segment", type=int, default=30, help="frames per segment")

    p = sub.add_parser("synth", help="materialize a synthetic protocol")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--name", default="synth")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--frames", type=int, default=7)
    p.add_argument("--n-train", type=int, default=400, help="train videos (total, even)")
    p.add_argument("--n-source-test", type=int, default=100)
    p.add_argument("--n-target", type=int, default=100)
    p.add_argument("--delta", type=float, default=5.0, help="live-class drift amplitude")
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("train", help="train the ensemble on a protocol")
    p.add_argument("--protocol", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="ensemble model file")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--lstm-hidden", type=int, default=1000)
    p.add_argument("--bilstm-hidden", type=int, default=500)
    p.add_argument("--gru-hidden", type=int, default=20)
    p.add_argument("--meta-hidden", type=int, default=20)
    p.add_argument("--meta-max-epochs", type=int, default=100)
    p.add_argument("--stacking-fraction", type=float, default=0.25)
    p.add_argument("--combiner", choices=("meta", "sum"), default="meta")
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--validation-frequency", type=int, default=30)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--max-gradient-norm", type=float, default=None)
    p.add_argument("--val-fraction", type=float, default=0.2,
                   help="fraction of the train pool held out for validation")
    p.add_argument("--history", type=Path, default=None,
                   help="directory for TrainHistory tables (default <out>.history)")

    p = sub.add_parser("evaluate", help="cross-dataset evaluation of a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--protocol", type=Path, required=True)
    p.add_argument("--report", type=Path, required=True)

    p = sub.add_parser("predict", help="score sequences with a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", type=Path, default=None, help="one FSEQ file")
    p.add_argument("--manifest", type=Path, default=None, help="manifest of FSEQ files")

    p = sub.add_parser("roc-export", help="write the target ROC table")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--protocol", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    return parser


def cmd_sample_plan(args) -> int:
    if args.frames < 1:
        raise UsageError(f"--frames must be >= 1, got {args.frames}")
    if args.segment < 1:
        raise UsageError(f"--segment must be >= 1, got {args.segment}")
    selection = select_frames(args.frames, SamplerConfig(args.segment))
    print(" ".join(str(i) for i in selection.indices))
    return 0


def cmd_synth(args) -> int:
    from . import dataio
    from .numerics import derive_seed

    for flag, value in (("--n-train", args.n_train),
                        ("--n-source-test", args.n_source_test),
                        ("--n-target", args.n_target)):
        if value < 2 or value % 2:
            raise UsageError(f"{flag} must be an even count >= 2, got {value}")
    try:
        specs = {
            "src-train": dataio.SyntheticSpec(args.n_train // 2, args.dim, args.frames,
                                              args.delta, args.noise,
                                              derive_seed(args.seed, 0)),
            "src-test": dataio.SyntheticSpec(args.n_source_test // 2, args.dim,
                                             args.frames, args.delta, args.noise,
                                             derive_seed(args.seed, 1)),
            "tgt-test": dataio.SyntheticSpec(args.n_target // 2, args.dim, args.frames,
                                             args.delta, args.noise,
                                             derive_seed(args.seed, 2)),
        }
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc

    out = args.out
    (out / "fseq").mkdir(parents=True, exist_ok=True)
    src_tag, tgt_tag = f"{args.name}-src", f"{args.name}-tgt"
    manifest_names = {"src-train": "src_train.csv", "src-test": "src_test.csv",
                      "tgt-test": "tgt_test.csv"}
    for pool, spec in specs.items():
        tag = tgt_tag if pool.startswith("tgt") else src_tag
        rows = []
        for seq in dataio.generate_synthetic(spec, id_prefix=f"{args.name}-{pool}"):
            rel = Path("fseq") / f"{seq.video_id}.fseq"
            dataio.write_fseq(seq, out / rel)
            rows.append(dataio.ManifestRow(rel, seq.label, tag, seq.video_id))
        dataio.write_manifest(rows, out / manifest_names[pool])

    protocol = dataio.ProtocolConfig(
        name=args.name,
        sources=[src_tag],
        target=tgt_tag,
        manifests={src_tag: {"train": Path("src_train.csv"),
                             "test": Path("src_test.csv")},
                   tgt_tag: {"test": Path("tgt_test.csv")}},
    )
    dataio.write_protocol(protocol, out / "protocol.json")
    print(f"wrote protocol {out / 'protocol.json'}")
    return 0


def cmd_train(args) -> int:
    from . import dataio, ensemble, trainer
    from .numerics import derive_seed

    try:
        base = trainer.TrainConfig(
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            validation_frequency=args.validation_frequency,
            patience=args.patience,
            max_epochs=args.max_epochs,
            max_gradient_norm=args.max_gradient_norm,
        )
        config = ensemble.EnsembleConfig(
            lstm_hidden=args.lstm_hidden,
            bilstm_hidden=args.bilstm_hidden,
            gru_hidden=args.gru_hidden,
            meta_hidden=args.meta_hidden,
            meta_max_epochs=args.meta_max_epochs,
            stacking_split_fraction=args.stacking_fraction,
            base=base,
            seed=args.seed,
        )
        if not 0.0 < args.val_fraction < 1.0:
            raise InvalidInputError(f"--val-fraction must be in (0, 1), got {args.val_fraction}")
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc

    protocol = dataio.read_protocol(args.protocol)
    train_pool, _, _ = dataio.load_protocol(protocol)
    train_part, val_part = dataio.stratified_split(
        train_pool, args.val_fraction, derive_seed(args.seed, 100))
    model, histories = ensemble.train_ensemble(train_part, val_part, config,
                                               combiner=args.combiner)
    ensemble.save_ensemble(model, args.out)

    history_dir = args.history or args.out.with_name(args.out.name + ".history")
    history_dir.mkdir(parents=True, exist_ok=True)
    for name, history in histories.items():
        trainer.write_history(history, history_dir / f"{name}.tsv")
    print(f"wrote model {args.out}")
    print(f"wrote history tables under {history_dir}")
    return 0


def cmd_evaluate(args) -> int:
    from . import dataio, ensemble, evaluation

    model = ensemble.load_ensemble(args.model)
    protocol = dataio.read_protocol(args.protocol)
    _, source_test, target_test = dataio.load_protocol(protocol, include_train=False)
    report = evaluation.cross_dataset_eval(model, source_test, target_test,
                                           protocol_name=protocol.name)
    evaluation.write_report(report, args.report)
    roc_path = args.report.with_name(args.report.name + ".roc.tsv")
    evaluation.write_roc_table(report.roc, roc_path)
    sys.stdout.write(evaluation.format_report(report))
    print(f"wrote report {args.report}")
    print(f"wrote ROC table {roc_path}")
    return 0


def cmd_predict(args) -> int:
    from . import dataio, ensemble

    if (args.input is None) == (args.manifest is None):
        raise UsageError("exactly one of --input or --manifest is required")
    model = ensemble.load_ensemble(args.model)
    if args.input is not None:
        seqs = [dataio.read_fseq(args.input)]
    else:
        seqs = [dataio.read_fseq(row.fseq_path)
                for row in dataio.read_manifest(args.manifest)]
    for seq in seqs:
        score = ensemble.predict(model, seq)
        print(f"{seq.video_id} {score:.6f}")
    return 0


def cmd_roc_export(args) -> int:
    from . import dataio, ensemble, evaluation

    model = ensemble.load_ensemble(args.model)
    protocol = dataio.read_protocol(args.protocol)
    _, _, target_test = dataio.load_protocol(protocol, include_train=False)
    curve = evaluation.roc_curve(
        evaluation.score_sequences(model, target_test, "target-test"))
    evaluation.write_roc_table(curve, args.out)
    print(f"wrote ROC table {args.out}")
    return 0


_HANDLERS = {
    "sample-plan": cmd_sample_plan,
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "roc-export": cmd_roc_export,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"padstack: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, InvalidInputError, OSError) as exc:
        print(f"padstack: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"padstack: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
