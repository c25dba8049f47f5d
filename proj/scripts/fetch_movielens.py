#!/usr/bin/env python3
"""Fetch MovieLens-100K ratings and build an item-text file.

Writes <out>/u.data (tab-separated user, item, rating, timestamp) and
<out>/items.jsonl ({"item_id", "text"} built from title, year and genres).

GroupLens is tried first. If it is unreachable, the copy of ML-100K bundled
in the RecBole wheel on PyPI is used; its .inter file is u.data plus a
header row.
"""

import argparse
import io
import json
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
    "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical", "Mystery",
    "Romance", "Sci-Fi", "Thriller", "War", "Western",
]


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS_URL, timeout=30) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    ratings = archive.read("ml-100k/u.data").decode("latin-1")
    texts = []
    for line in archive.read("ml-100k/u.item").decode("latin-1").splitlines():
        fields = line.split("|")
        if len(fields) < 24:
            continue
        genres = [g for g, flag in zip(GENRES, fields[5:24]) if flag == "1"]
        texts.append((fields[0], " ".join([fields[1]] + genres)))
    return ratings, texts


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet",
             "recbole==1.2.1", "-d", tmp],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        archive = zipfile.ZipFile(wheel)
        base = "recbole/dataset_example/ml-100k/ml-100k"
        inter = archive.read(base + ".inter").decode("utf-8").splitlines()
        items = archive.read(base + ".item").decode("utf-8").splitlines()
    ratings = "\n".join(inter[1:]) + "\n"
    texts = []
    for line in items[1:]:
        fields = line.split("\t")
        texts.append((fields[0], " ".join(f for f in fields[1:] if f)))
    return ratings, texts


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/ml-100k")
    args = parser.parse_args()

    try:
        ratings, texts = from_grouplens()
        source = "grouplens"
    except Exception as exc:  # network failures of any kind
        print(f"grouplens unavailable ({exc}); using RecBole's bundled copy", file=sys.stderr)
        ratings, texts = from_recbole()
        source = "recbole"

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "u.data").write_text(ratings)
    with open(out / "items.jsonl", "w") as f:
        for item_id, text in texts:
            f.write(json.dumps({"item_id": item_id, "text": text}) + "\n")
    n = sum(1 for line in ratings.splitlines() if line.strip())
    print(f"wrote {n} ratings and {len(texts)} item texts to {out} (source: {source})")


if __name__ == "__main__":
    main()
