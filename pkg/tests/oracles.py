"""Independent reference implementations used as test oracles.

These are deliberately slow, loop-based and written without reusing any
package code, so agreement with the vectorised implementations means
something.
"""
from fractions import Fraction
import math

ONE, ZERO, INVALID = 1, 0, -1


def squared_magnitude(rows):
    return [ax * ax + ay * ay + az * az for ax, ay, az in rows]


def first_peak(values, threshold):
    """Exhaustive scan for the first sample > threshold that is >= its neighbours."""
    n = len(values)
    for i in range(n):
        v = values[i]
        if not v > threshold:
            continue
        if i > 0 and v < values[i - 1]:
            continue
        if i < n - 1 and v < values[i + 1]:
            continue
        return i
    return None


def _segment_states(segment, K):
    # Exact rational arithmetic: compare x - mu against K * sigma by squaring.
    n = len(segment)
    mu = sum(Fraction(v) for v in segment) / n
    var = sum((Fraction(v) - mu) ** 2 for v in segment) / n
    bound = Fraction(K) ** 2 * var
    out = []
    for x in segment:
        d = Fraction(x) - mu
        if d * d > bound:
            out.append(ONE if d > 0 else ZERO)
        else:
            out.append(INVALID)
    return out


def quantize(values, K, segment_len=10):
    """Per-sample tri-state thresholding with exact arithmetic."""
    out = []
    for start in range(0, len(values), segment_len):
        seg = list(values[start:start + segment_len])
        if len(seg) < 2:
            out.extend([INVALID] * len(seg))
        else:
            out.extend(_segment_states(seg, K))
    return out


def agreement(a, b):
    """Matching fraction over positions valid in both; (0.0, 0) if none."""
    shared = 0
    same = 0
    for x, y in zip(a, b):
        if x != INVALID and y != INVALID:
            shared += 1
            same += x == y
    return (same / shared if shared else 0.0), shared


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    sab = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = sum((x - ma) ** 2 for x in a)
    sbb = sum((y - mb) ** 2 for y in b)
    return sab / math.sqrt(saa * sbb)
