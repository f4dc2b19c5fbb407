#!/usr/bin/env python3
# Copyright 2026 The sparsedp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes a synthetic topic-structured English-like corpus.

Sentences pick one of a few topics and draw pseudo-words from that topic's
Zipf distribution, with common stop words mixed in, so that word
co-occurrence carries signal an embedding model can learn.
"""

import argparse
import random

STOP = ["the", "of", "and", "a", "to", "in", "is", "was", "it", "for", "on", "with"]
ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"]
VOWELS = ["a", "e", "i", "o", "u"]


def pseudo_words(count, rng):
  seen = set()
  out = []
  while len(out) < count:
    w = "".join(rng.choice(ONSETS) + rng.choice(VOWELS) for _ in range(rng.randint(2, 3)))
    if w not in seen:
      seen.add(w)
      out.append(w)
  return out


def main():
  ap = argparse.ArgumentParser()
  ap.add_argument("--words", type=int, default=400)
  ap.add_argument("--topics", type=int, default=8)
  ap.add_argument("--sentences", type=int, default=6000)
  ap.add_argument("--seed", type=int, default=7)
  ap.add_argument("--out", default="data/tiny_corpus.txt")
  args = ap.parse_args()

  rng = random.Random(args.seed)
  vocab = pseudo_words(args.words, rng)
  topics = []
  for _ in range(args.topics):
    order = vocab[:]
    rng.shuffle(order)
    topics.append(order)
  weights = [1.0 / (r + 1) for r in range(args.words)]

  lines = []
  for _ in range(args.sentences):
    topic = rng.choice(topics)
    length = rng.randint(6, 14)
    words = []
    for _ in range(length):
      if rng.random() < 0.25:
        words.append(rng.choice(STOP))
      else:
        words.append(rng.choices(topic, weights)[0])
    lines.append(" ".join(words).capitalize() + ".")
  with open(args.out, "w") as f:
    f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
  main()
