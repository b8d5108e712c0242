"""Pre-trained word vectors and the trainable embedding matrix.

Run:  python demos/02_embeddings.py
"""
import tempfile
from pathlib import Path

import numpy as np

from delaes import Vocabulary, build_embedding_matrix, embed, load_embeddings

# ---------------------------------------------------------------------------
# The text embedding format: one token plus its vector per line, with an
# optional "count dim" header (as word2vec text exports produce).
# ---------------------------------------------------------------------------
content = """3 4
computer 0.10 -0.20 0.30 0.40
school 0.05 0.15 -0.25 0.35
teacher -0.40 0.10 0.20 -0.10
"""
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "vectors.txt"
    path.write_text(content)
    table = load_embeddings(path, expected_dim=4)

print(f"loaded {len(table)} vectors of dimension {table.dimension}")
print("computer ->", table.vectors["computer"])
print()

# ---------------------------------------------------------------------------
# The matrix aligns rows with vocabulary indices.  Known tokens copy their
# vectors; out-of-table tokens (including UNK) draw from a seeded uniform
# [-0.05, 0.05]; the PAD row is pinned to zero and never trained.
# ---------------------------------------------------------------------------
vocab = Vocabulary(["computer", "school", "holograms"])
matrix = build_embedding_matrix(vocab, table, seed=7)
print("matrix shape:", matrix.weights.shape)
print("PAD row:", matrix.weights[0])
print("known row (computer):", matrix.weights[vocab.index("computer")])
print("out-of-table row (holograms):",
      np.round(matrix.weights[vocab.index("holograms")], 4))

again = build_embedding_matrix(vocab, table, seed=7)
print("same seed reproduces the matrix bit for bit:",
      bool((matrix.weights == again.weights).all()))
print()

# ---------------------------------------------------------------------------
# Essays become dense matrices with one column per token.
# ---------------------------------------------------------------------------
columns = embed(["computer", "school", "wormholes"], vocab, matrix)
print("embedded shape (dim x tokens):", columns.shape)
print("unknown token reuses the UNK row:",
      bool((columns[:, 2] == matrix.weights[1]).all()))
