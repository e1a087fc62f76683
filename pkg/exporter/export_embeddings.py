#!/usr/bin/env python3
"""Embed a text dataset with a pretrained sentence encoder into an SEMB file.

The output is the little-endian SEMB v1 binary consumed by the semuep
simulator: magic "SEMB", version u32, dim u32, count u64, then per record an
id u64, a length-prefixed UTF-8 text, and dim float32 components. Ids are
sequential from 0 in the dataset's original order, so re-running with the
same inputs reproduces the file byte for byte.

Usage:
    export_embeddings --dataset ag_news --limit 4000 \
        --encoder sentence-transformers/all-MiniLM-L6-v2 --normalize --out kb.semb
"""

from __future__ import annotations

import argparse
import struct
import sys

import numpy as np

DEFAULT_ENCODER = "sentence-transformers/all-MiniLM-L6-v2"

SEMB_MAGIC = b"SEMB"
SEMB_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="export_embeddings", description=__doc__)
    parser.add_argument("--dataset", default="ag_news", help="Hugging Face dataset name")
    parser.add_argument("--split", default="train")
    parser.add_argument("--limit", type=int, required=True, help="number of records to export")
    parser.add_argument("--encoder", default=DEFAULT_ENCODER)
    parser.add_argument("--normalize", action="store_true",
                        help="l2-normalize embeddings before writing")
    parser.add_argument("--out", required=True)
    parser.add_argument("--field", default="auto",
                        choices=("auto", "text", "title", "description", "title_description"),
                        help="which dataset field(s) to embed; auto prefers a 'text' "
                             "column and falls back to title + '. ' + description")
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--expect-dim", type=int, default=None,
                        help="abort if the encoder dimension differs")
    return parser


def extract_text(row: dict, field: str) -> str:
    if field == "auto":
        if "text" in row:
            return str(row["text"])
        field = "title_description"
    if field == "title_description":
        return f"{row['title']}. {row['description']}"
    return str(row[field])


def load_texts(dataset: str, split: str, limit: int, field: str) -> list[str]:
    from datasets import load_dataset

    data = load_dataset(dataset, split=split)
    texts = []
    for i, row in enumerate(data):
        if i >= limit:
            break
        texts.append(extract_text(row, field))
    return texts


def load_encoder(name: str):
    from sentence_transformers import SentenceTransformer

    return SentenceTransformer(name)


def encode_texts(encoder, texts: list[str], batch_size: int, normalize: bool) -> np.ndarray:
    vectors = encoder.encode(
        texts,
        batch_size=batch_size,
        convert_to_numpy=True,
        normalize_embeddings=normalize,
        show_progress_bar=False,
    )
    return np.ascontiguousarray(vectors, dtype="<f4")


def write_semb(path: str, texts: list[str], vectors: np.ndarray) -> None:
    count, dim = vectors.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<4sIIQ", SEMB_MAGIC, SEMB_VERSION, dim, count))
        for i, text in enumerate(texts):
            raw = text.encode("utf-8")
            f.write(struct.pack("<QI", i, len(raw)))
            f.write(raw)
            f.write(vectors[i].tobytes())


def run_export(args) -> int:
    if args.limit < 1:
        print("error: --limit must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        texts = load_texts(args.dataset, args.split, args.limit, args.field)
    except Exception as exc:  # dataset unavailable, network down, bad name
        print(f"error: could not load dataset {args.dataset!r}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if len(texts) < args.limit:
        print(f"error: dataset provided only {len(texts)} of {args.limit} records",
              file=sys.stderr)
        return EXIT_RUNTIME
    try:
        encoder = load_encoder(args.encoder)
    except Exception as exc:
        print(f"error: could not load encoder {args.encoder!r}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    vectors = encode_texts(encoder, texts, args.batch_size, args.normalize)
    if args.expect_dim is not None and vectors.shape[1] != args.expect_dim:
        print(f"error: encoder dimension {vectors.shape[1]} != expected {args.expect_dim}",
              file=sys.stderr)
        return EXIT_RUNTIME
    write_semb(args.out, texts, vectors)
    print(f"wrote {vectors.shape[0]} records of dimension {vectors.shape[1]} to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    return run_export(build_parser().parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
