#!/usr/bin/env python3
# Copyright 2026 The bioqa Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Brute-force reference scorer for the toy fixtures.

Shares no code with the C++ library. Prints the aggregate as JSON, or with
--check compares against a frozen expectation file and exits non-zero on any
difference.
"""

import argparse
import collections
import json
import sys
import unicodedata
from fractions import Fraction

ARTICLES = {"a", "an", "the"}


def _one_pass(s):
    s = unicodedata.normalize("NFKD", s)
    out = []
    for ch in s:
        cat = unicodedata.category(ch)
        if cat == "Mn" or cat == "Cf":
            continue
        if cat == "Pd":
            out.append(" ")
        elif cat.startswith("P"):
            continue
        elif ch.isspace() or cat == "Cc":
            out.append(" ")
        else:
            out.append(ch)
    s = "".join(out).lower()
    return " ".join(t for t in s.split() if t not in ARTICLES)


def normalize(s):
    for _ in range(5):
        nxt = _one_pass(s)
        if nxt == s:
            break
        s = nxt
    return s


def chromosome_aliases():
    table = {}
    for n in [str(i) for i in range(1, 23)] + ["x", "y"]:
        canon = "chromosome " + n
        for alias in ("chr " + n, "chr" + n, n + " chromosome"):
            table[alias] = canon
    return table


def resolve(s, table):
    return table.get(s, s)


def f1(pred, gold):
    p, g = pred.split(), gold.split()
    if not p and not g:
        return Fraction(1)
    if not p or not g:
        return Fraction(0)
    common = sum((collections.Counter(p) & collections.Counter(g)).values())
    if common == 0:
        return Fraction(0)
    prec, rec = Fraction(common, len(p)), Fraction(common, len(g))
    return 2 * prec * rec / (prec + rec)


def match(pred, gold, table, threshold):
    a, b = resolve(normalize(pred), table), resolve(normalize(gold), table)
    em = a == b
    score = f1(a, b)
    return em, em or score >= threshold, score


def aggregate(gold_path, results_path, threshold=Fraction(3, 5)):
    table = chromosome_aliases()
    gold = {}
    with open(gold_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                gold[row["id"]] = row
    n = em = concept = fallbacks = 0
    per_source = collections.defaultdict(lambda: [0, 0, 0])
    pairs = {}
    with open(results_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            g = gold[rec["question_id"]]
            pred = "" if rec.get("error") else rec["final_answer"]
            if not rec.get("error") and rec["used_fallback"]:
                fallbacks += 1
            e, c, score = match(pred, g["short_answer"], table, threshold)
            n += 1
            em += e
            concept += c
            src = per_source[g["source"]]
            src[0] += 1
            src[1] += e
            src[2] += c
            pairs[rec["question_id"]] = {"em": e, "concept": c,
                                         "token_f1": [score.numerator, score.denominator]}
    return {
        "n": n,
        "em": [em, n],
        "concept": [concept, n],
        "fallback": [fallbacks, n],
        "per_source": {k: {"n": v[0], "em": [v[1], v[0]], "concept": [v[2], v[0]]}
                       for k, v in sorted(per_source.items())},
        "pairs": dict(sorted(pairs.items())),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gold", required=True)
    ap.add_argument("--results", required=True)
    ap.add_argument("--check", help="frozen expectation JSON")
    args = ap.parse_args()
    got = aggregate(args.gold, args.results)
    if not args.check:
        json.dump(got, sys.stdout, indent=2, ensure_ascii=False)
        print()
        return 0
    with open(args.check, encoding="utf-8") as fh:
        want = json.load(fh)
    if got != want:
        print("oracle disagrees with frozen expectation", file=sys.stderr)
        json.dump(got, sys.stderr, indent=2)
        return 1
    print("oracle matches frozen expectation")
    return 0


if __name__ == "__main__":
    sys.exit(main())
