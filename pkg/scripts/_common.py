"""Shared helpers for the experiment scripts (run from the repository root)."""
import argparse
import os
from pathlib import Path

from pnlm import corpus


def parser(doc: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--out-dir", default="results", help="where CSV/text outputs go")
    p.add_argument("--corpus", default=None, help="corpus directory (env PNLM_CORPUS_DIR)")
    p.add_argument("--seed", type=int, default=0)
    return p


def images(root, names=None):
    """Corpus images, fetching the bundled samples on first use."""
    root = corpus.corpus_dir(root)
    if not (root / corpus.MANIFEST).exists():
        corpus.fetch_skimage(root)
    return corpus.load_corpus(root, names)


def out_dir(path) -> Path:
    d = Path(path)
    os.makedirs(d, exist_ok=True)
    return d
