"""Command-line entry point: extract one video to FSEQ plus a manifest row.

Exit codes mirror the padstack convention: 0 success, 1 usage error,
2 data error. Jobs are one video per invocation; batch work is expected to
fan out across processes.
"""

import argparse
import sys
from pathlib import Path

from .errors import DataError, InvalidInputError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="padextract",
                     description="Extract frame-skipped DenseNet-201 features "
                                 "from a video into an FSEQ file")
    parser.add_argument("--video", type=Path, required=True)
    parser.add_argument("--label", choices=("live", "attack"), required=True)
    parser.add_argument("--tag", required=True, help="dataset tag for the manifest")
    parser.add_argument("--subject", required=True, help="subject id for the manifest")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--manifest", type=Path, default=None,
                        help="manifest to append to (default <out>/manifest.csv)")
    parser.add_argument("--segment", type=int, default=30, help="frames per segment")
    parser.add_argument("--weights", type=Path, default=None,
                        help="local DenseNet-201 checkpoint")
    parser.add_argument("--random-weights", action="store_true",
                        help="seeded random weights instead of the pretrained ones")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for --random-weights")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if args.weights and args.random_weights:
        print("padextract: error: --weights and --random-weights are exclusive",
              file=sys.stderr)
        return 1

    from .extract import ExtractionJob, run_job
    from .features import FeatureExtractor
    from .fseq import append_manifest_row

    try:
        job = ExtractionJob(args.video, args.label, args.tag, args.subject,
                            segment_length=args.segment, out_dir=args.out)
    except InvalidInputError as exc:
        print(f"padextract: error: {exc}", file=sys.stderr)
        return 1
    try:
        extractor = FeatureExtractor(
            weights_path=args.weights,
            random_seed=args.seed if args.random_weights else None,
            batch_size=args.batch_size,
        )
        fseq_path = run_job(job, extractor)
        manifest = args.manifest or args.out / "manifest.csv"
        append_manifest_row(manifest, fseq_path, args.label, args.tag, args.subject)
    except (DataError, InvalidInputError, OSError) as exc:
        print(f"padextract: data error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {fseq_path}")
    print(f"appended to {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
