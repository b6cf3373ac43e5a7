#!/usr/bin/env python3
"""Brute-force captioning metrics for caption_pairs.json.

Writes caption_golden.json next to this file. The C++ tests compare against
the frozen output; rerun only when the fixture pairs change.

When pycocoevalcap is importable its CIDEr-D scorer is used as a cross-check.
"""

import itertools
import json
import math
import re
import sys
from collections import Counter
from pathlib import Path

HERE = Path(__file__).resolve().parent


def tokens(text):
    return re.sub(r"[^a-z0-9]", " ", text.lower()).split()


def ngrams(seq, n):
    return Counter(tuple(seq[i:i + n]) for i in range(len(seq) - n + 1))


def bleu_stats(cand, refs):
    lens = sorted(len(r) for r in refs)
    closest = min(lens, key=lambda L: (abs(L - len(cand)), L))
    matches, totals = [], []
    for n in range(1, 5):
        c = ngrams(cand, n)
        clipped = 0
        for g, k in c.items():
            clipped += min(k, max(ngrams(r, n)[g] for r in refs))
        matches.append(clipped)
        totals.append(max(0, len(cand) - n + 1))
    return matches, totals, len(cand), closest


def bleu_from(matches, totals, c, r):
    out = []
    for n in range(1, 5):
        if c == 0 or any(matches[k] == 0 or totals[k] == 0 for k in range(n)):
            out.append(0.0)
            continue
        bp = 1.0 if c >= r else math.exp(1 - r / c)
        out.append(bp * math.exp(sum(math.log(matches[k] / totals[k]) for k in range(n)) / n))
    return out


def lcs(a, b):
    # Exhaustive recursion with memo; sequences here are short.
    memo = {}

    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if (i, j) not in memo:
            memo[(i, j)] = go(i + 1, j + 1) + 1 if a[i] == b[j] else max(go(i + 1, j), go(i, j + 1))
        return memo[(i, j)]

    return go(0, 0)


def rouge_l(cand, refs, beta=1.2):
    best = 0.0
    for r in refs:
        m = lcs(cand, r)
        if m == 0:
            continue
        p, rec = m / len(cand), m / len(r)
        best = max(best, (1 + beta ** 2) * p * rec / (rec + beta ** 2 * p))
    return best


def meteor(cand, refs):
    best = 0.0
    for r in refs:
        free = list(range(len(r)))
        align = []
        for i, w in enumerate(cand):
            for j in free:
                if r[j] == w:
                    align.append((i, j))
                    free.remove(j)
                    break
        if not align:
            continue
        chunks = 1 + sum(1 for (i0, j0), (i1, j1) in zip(align, align[1:])
                         if not (i1 == i0 + 1 and j1 == j0 + 1))
        m = len(align)
        p, rec = m / len(cand), m / len(r)
        fmean = 10 * p * rec / (rec + 9 * p)
        best = max(best, fmean * (1 - 0.5 * (chunks / m) ** 3))
    return best


def cider_d(cands, refs, sigma=6.0):
    ids = sorted(cands)
    log_n = math.log(len(ids))
    df = Counter()
    for i in ids:
        seen = set()
        for r in refs[i]:
            for n in range(1, 5):
                seen.update(ngrams(r, n))
        df.update(seen)

    def vec(seq, n):
        return {g: k * (log_n - math.log(max(1.0, df[g]))) for g, k in ngrams(seq, n).items()}

    def norm(v):
        return math.sqrt(sum(x * x for x in v.values()))

    per = {}
    for i in ids:
        c = cands[i]
        total = 0.0
        for n in range(1, 5):
            vh = vec(c, n)
            acc = 0.0
            for r in refs[i]:
                vr = vec(r, n)
                dot = sum(min(w, vr[g]) * vr[g] for g, w in vh.items() if g in vr)
                if norm(vh) != 0 and norm(vr) != 0:
                    dot /= norm(vh) * norm(vr)
                acc += dot * math.exp(-((len(c) - len(r)) ** 2) / (2 * sigma ** 2))
            total += acc / len(refs[i])
        per[i] = 10 * total / 4
    return per


def coco_cross_check(cands, refs, per):
    try:
        from pycocoevalcap.cider.cider import Cider
    except ImportError:
        return False
    gts = {i: [" ".join(r) for r in refs[i]] for i in cands}
    res = {i: [" ".join(cands[i])] for i in cands}
    # The toolkit rejects empty hypotheses; its length term counts bigrams,
    # which differs from token counts only for empty sequences.
    keep = [i for i in cands if cands[i]]
    _, scores = Cider().compute_score({i: gts[i] for i in keep}, {i: res[i] for i in keep})
    # The toolkit computes document frequencies over the kept ids only.
    sub = cider_d({i: cands[i] for i in keep}, {i: refs[i] for i in keep})
    for i, s in zip(sorted(keep), scores):
        if abs(s - sub[i]) > 1e-9:
            sys.exit(f"cider mismatch on {i}: toolkit {s} vs oracle {sub[i]}")
    return True


def main():
    items = json.loads((HERE / "caption_pairs.json").read_text())["items"]
    cands = {it["id"]: tokens(it["candidate"]) for it in items}
    refs = {it["id"]: [tokens(r) for r in it["references"]] for it in items}

    out_items = []
    corpus = [[0] * 4, [0] * 4, 0, 0]
    for it in items:
        i = it["id"]
        m, t, c, r = bleu_stats(cands[i], refs[i])
        for k in range(4):
            corpus[0][k] += m[k]
            corpus[1][k] += t[k]
        corpus[2] += c
        corpus[3] += r
        perms = list(itertools.permutations(refs[i]))
        assert all(meteor(cands[i], list(p)) == meteor(cands[i], refs[i]) for p in perms)
        out_items.append({
            "id": i,
            "bleu": bleu_from(m, t, c, r),
            "rouge_l": rouge_l(cands[i], refs[i]),
            "meteor": meteor(cands[i], refs[i]),
        })
    per = cider_d(cands, refs)
    for entry in out_items:
        entry["cider"] = per[entry["id"]]
    golden = {
        "items": out_items,
        "corpus_bleu": bleu_from(*corpus),
        "cider": sum(per.values()) / len(per),
        "cross_checked_cider": coco_cross_check(cands, refs, per),
    }
    (HERE / "caption_golden.json").write_text(json.dumps(golden, indent=2) + "\n")


if __name__ == "__main__":
    main()
