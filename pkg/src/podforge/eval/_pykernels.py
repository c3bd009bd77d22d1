"""Pure-Python sliding-window kernels.

Fallback for ``_ckernels``; the two must agree to within float rounding.
Windows are ``codes[o:o + span]`` for ``o = 0, stride, ..., (count - 1) * stride``.
"""

from __future__ import annotations

from math import log2


def distinct_sum(codes, n_codes, span, stride, count):
    """Sum over windows of (unique codes / span)."""
    counts = [0] * n_codes
    unique = 0
    total = 0.0
    lo = hi = 0
    for w in range(count):
        start = w * stride
        end = start + span
        # drop what left the window, add what entered
        for i in range(lo, min(start, hi)):
            c = codes[i]
            counts[c] -= 1
            if counts[c] == 0:
                unique -= 1
        for i in range(max(hi, start), end):
            c = codes[i]
            if counts[c] == 0:
                unique += 1
            counts[c] += 1
        lo, hi = start, end
        total += unique / span
    return total


def entropy_sum(codes, is_stop, n_codes, span, stride, count):
    """Sum of per-window Shannon entropies (bits) over non-stopword codes.

    Returns ``(sum, n_valid)`` where windows with no content token are skipped.
    """
    counts = [0] * n_codes
    seen = [False] * n_codes
    total = 0.0
    valid = 0
    lo = hi = 0
    for w in range(count):
        start = w * stride
        end = start + span
        for i in range(lo, min(start, hi)):
            counts[codes[i]] -= 1
        for i in range(max(hi, start), end):
            counts[codes[i]] += 1
        lo, hi = start, end

        m = 0
        s = 0.0
        firsts = []
        for i in range(start, end):
            c = codes[i]
            if is_stop[c] or seen[c]:
                continue
            seen[c] = True
            firsts.append(c)
            k = counts[c]
            m += k
            s += k * log2(k)
        for c in firsts:
            seen[c] = False
        if m == 0:
            continue
        total += log2(m) - s / m
        valid += 1
    return total, valid
