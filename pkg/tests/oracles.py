"""Brute-force reference implementations, written from the definitions only.

Nothing here imports podforge's metric code; these are the independent side of
every equivalence test.
"""

import math
from collections import Counter


def windows(tokens, w, stride=1):
    tokens = list(tokens)
    if len(tokens) <= w:
        return [tokens]
    return [tokens[i:i + w] for i in range(0, len(tokens) - w + 1, stride)]


def distinct(tokens, n, w, stride=1):
    ratios = []
    for win in windows(tokens, w, stride):
        grams = [tuple(win[i:i + n]) for i in range(len(win) - n + 1)]
        ratios.append(len(set(grams)) / len(grams))
    return sum(ratios) / len(ratios)


def ttr_mean(tokens, w, stride=1):
    ratios = [len(set(win)) / len(win) for win in windows(tokens, w, stride)]
    return sum(ratios) / len(ratios)


def entropy_bits(tokens):
    counts = Counter(tokens)
    total = sum(counts.values())
    return -sum(c / total * math.log2(c / total) for c in counts.values())


def info_density(tokens, stopwords, w, stride=1):
    """Returns (mean entropy over windows with content, per-window unique content counts)."""
    values, uniques = [], []
    for win in windows(tokens, w, stride):
        content = [t for t in win if t not in stopwords]
        uniques.append(len(set(content)))
        if content:
            values.append(entropy_bits(content))
    if not values:
        return None, uniques
    return sum(values) / len(values), uniques


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


def mean_pair_distance(vectors):
    dists = []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            dists.append(1.0 - cosine(vectors[i], vectors[j]))
    return sum(dists) / len(dists)


def dedup_filter(vectors, threshold):
    """Entry j survives iff no surviving earlier entry i has cos(i, j) >= threshold."""
    n = len(vectors)
    alive = [True] * n
    for j in range(n):
        for i in range(j):
            if alive[i] and cosine(vectors[i], vectors[j]) >= threshold - 1e-9:
                alive[j] = False
                break
    return [j for j in range(n) if alive[j]]


def chunk_windows(tokens, w):
    """Non-overlapping chunks; a final partial chunk counts only if it has at least w/2 tokens."""
    tokens = list(tokens)
    chunks = []
    i = 0
    while i < len(tokens):
        chunk = tokens[i:i + w]
        if len(chunk) == w or 2 * len(chunk) >= w:
            chunks.append(chunk)
        i += w
    return chunks
