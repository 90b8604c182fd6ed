"""Command line front end: plm / glove / tags / dictionary subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dictionary import extract_dictionary
from .errors import ExtractionError
from .plm import extract_glove, extract_plm
from .tags import extract_tags


def _read_counts(path: str | None) -> dict[str, int] | None:
    if path is None:
        return None
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            word, _, count = line.rpartition("\t" if "\t" in line else " ")
            counts[word] = int(count)
    return counts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charprobe-extract",
        description="Export model embeddings, vocabularies, tags, and word lists "
        "into the probe toolkit's file formats.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plm = sub.add_parser("plm", help="export a transformer checkpoint's embedding layer")
    plm.add_argument("model_id", help="local checkpoint directory or hub identifier")
    plm.add_argument("out_dir", help="directory for embeddings.bin / vocab.tsv / manifest.json")
    plm.add_argument("--counts", help="word count file (surface<TAB>count) for the frequency column")

    glove = sub.add_parser("glove", help="export a flat-text word-vector file")
    glove.add_argument("vectors", help="text file of 'word v1 .. vd' lines")
    glove.add_argument("out_dir")
    glove.add_argument("--counts", help="word count file for the frequency column")
    glove.add_argument("--name", help="model name recorded in the manifest")

    tags = sub.add_parser("tags", help="tag every vocab entry with one-hot PoS/NER rows")
    tags.add_argument("vocab", help="vocab.tsv produced by the plm or glove subcommand")
    tags.add_argument("out", help="output tags.tsv path")

    wordlist = sub.add_parser("dictionary", help="dump a lowercase word list from WordNet")
    wordlist.add_argument("out", help="output wordlist.txt path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plm":
            manifest = extract_plm(args.model_id, args.out_dir, frequencies=_read_counts(args.counts))
            print(f"wrote {Path(args.out_dir) / 'embeddings.bin'} ({manifest.marker or 'no'} marker)")
        elif args.command == "glove":
            manifest = extract_glove(
                args.vectors, args.out_dir, frequencies=_read_counts(args.counts), name=args.name
            )
            print(f"wrote {Path(args.out_dir) / 'embeddings.bin'} as {manifest.model}")
        elif args.command == "tags":
            n_rows = extract_tags(args.vocab, args.out)
            print(f"wrote {args.out} ({n_rows} rows)")
        elif args.command == "dictionary":
            n_words = extract_dictionary(args.out)
            print(f"wrote {args.out} ({n_words} words)")
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
