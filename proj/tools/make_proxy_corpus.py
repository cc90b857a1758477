#!/usr/bin/env python3
"""Write a unigram proxy corpus (JSONL) from wordfreq frequency lists.

Words are drawn independently in proportion to their frequency, so the text
has realistic word and subword statistics but no syntax. Good enough to
measure tokenizer fertility when no real corpus is at hand.
"""

import argparse
import itertools
import json
import random
import sys

from wordfreq import top_n_list, word_frequency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lang", required=True, help="wordfreq language code, e.g. hu, en")
    ap.add_argument("--mb", type=float, required=True, help="approximate output size in MB")
    ap.add_argument("--out", required=True)
    ap.add_argument("--words", type=int, default=200_000, help="vocabulary size to sample from")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--subset", default="web")
    args = ap.parse_args()

    vocab = top_n_list(args.lang, args.words)
    cum = list(itertools.accumulate(word_frequency(w, args.lang) for w in vocab))
    rng = random.Random(args.seed)
    target = int(args.mb * 1_000_000)
    written = 0
    doc = 0
    with open(args.out, "w", encoding="utf-8") as f:
        while written < target:
            paragraphs = []
            for _ in range(rng.randint(2, 6)):
                sentences = []
                for _ in range(rng.randint(2, 8)):
                    words = rng.choices(vocab, cum_weights=cum, k=rng.randint(5, 25))
                    sentences.append(words[0].capitalize() + " " + " ".join(words[1:]) + ".")
                paragraphs.append(" ".join(sentences))
            line = json.dumps({"id": f"{args.lang}-{doc}", "text": "\n\n".join(paragraphs), "lang": args.lang,
                               "subset": args.subset}, ensure_ascii=False)
            f.write(line + "\n")
            written += len(line.encode("utf-8")) + 1
            doc += 1
    print(f"{doc} documents, {written / 1e6:.1f} MB", file=sys.stderr)


if __name__ == "__main__":
    main()
