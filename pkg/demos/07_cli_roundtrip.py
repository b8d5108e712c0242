"""The command-line workflow: train, predict, evaluate.

Generates a small essay file and embedding file, trains a reduced model,
scores the same essays, and evaluates the predictions, all through the same
entry points the installed ``delaes`` command exposes.

Run:  python demos/07_cli_roundtrip.py
"""
import tempfile
from pathlib import Path

import numpy as np

from delaes.cli import main

FILLERS = ("river", "stone", "cloud", "meadow", "lantern", "harbor")
KEYWORDS = ("magnet", "beacon")

CONFIG = """
windows = 2,3
filters = 6
hidden_units = 6
batch_size = 16
epochs = 80
learning_rate = 0.01
embedding_dim = 12
dropout = 0.0
range1 = 0:2
"""


def build_fixtures(root: Path):
    rng = np.random.default_rng(5)
    rows = ["essay_id\tessay_set\tessay\tdomain1_score"]
    for i in range(1, 129):
        length = int(rng.integers(10, 15))
        tokens = [FILLERS[int(rng.integers(0, len(FILLERS)))] for _ in range(length)]
        for keyword in KEYWORDS:
            if rng.integers(0, 2):
                for pos in rng.choice(length, size=3, replace=False):
                    tokens[int(pos)] = keyword
        score = sum(keyword in tokens for keyword in KEYWORDS)
        rows.append(f"{i}\t1\t{' '.join(tokens)}\t{score}")
    (root / "essays.tsv").write_text("\n".join(rows) + "\n", encoding="latin-1")

    lines = []
    for token in FILLERS:
        vec = rng.normal(0, 0.5, 12)
        lines.append(token + " " + " ".join(f"{v:.5f}" for v in vec))
    for axis, keyword in enumerate(KEYWORDS):
        vec = np.zeros(12)
        vec[axis] = 3.0
        lines.append(keyword + " " + " ".join(f"{v:.5f}" for v in vec))
    (root / "vectors.txt").write_text("\n".join(lines) + "\n")
    (root / "micro.cfg").write_text(CONFIG)


with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    build_fixtures(root)

    print("$ delaes train --data essays.tsv --prompt 1 --embeddings vectors.txt"
          " --out model.bin --config micro.cfg --seed 7")
    status = main(["train", "--data", str(root / "essays.tsv"), "--prompt", "1",
                   "--embeddings", str(root / "vectors.txt"),
                   "--out", str(root / "model.bin"),
                   "--config", str(root / "micro.cfg"), "--seed", "7"])
    print("exit status:", status)
    history = (root / "model.bin.history.csv").read_text().strip().splitlines()
    print("history rows:", len(history) - 1, "| last:", history[-1])
    print()

    print("$ delaes predict --model model.bin --data essays.tsv --out pred.csv")
    status = main(["predict", "--model", str(root / "model.bin"),
                   "--data", str(root / "essays.tsv"),
                   "--out", str(root / "pred.csv")])
    predictions = (root / "pred.csv").read_text().strip().splitlines()
    print("exit status:", status, "| first predictions:", predictions[:4])
    print()

    print("$ delaes eval --pred pred.csv --gold essays.tsv --range 0:2")
    status = main(["eval", "--pred", str(root / "pred.csv"),
                   "--gold", str(root / "essays.tsv"), "--range", "0:2"])
    print("exit status:", status)
