"""Generate the bundled synthetic corpora and gazetteer lists.

Two datasets come out of this script, both with fixed seeds so the
files in data/ can be regenerated byte for byte:

* data/synth/ -- a corpus sized for the gazetteer-lift check. Entity
  phrases are split into disjoint train and test pools (4:1), so a
  model without the gazetteer meets mostly unseen entities at test
  time while the gazetteer covers both pools.
* data/toy/   -- a small corpus with embedding and tag sidecars for the
  cluster- and embedding-feature presets.

Both corpora use the three-column format (token, POS, label). POS tags
are a deterministic function of the word and carry no entity signal.
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

ENTITY_TYPES = ("PER", "LOC", "GRP", "CORP", "CW", "PROD")
POS_TAGS = ("NN", "VB", "JJ", "RB", "PP")

CONSONANTS = [chr(c) for c in range(0x0995, 0x09B0)] + ["র", "ল", "শ", "স", "হ"]
VOWEL_SIGNS = ["", "া", "ি", "ী", "ু", "ে", "ো"]


def make_word(rng: random.Random) -> str:
    n = rng.randint(2, 4)
    return "".join(rng.choice(CONSONANTS) + rng.choice(VOWEL_SIGNS) for _ in range(n))


def make_word_pool(rng: random.Random, size: int, taken: set[str]) -> list[str]:
    pool = []
    while len(pool) < size:
        w = make_word(rng)
        if w not in taken:
            taken.add(w)
            pool.append(w)
    return pool


def pos_of(word: str) -> str:
    return random.Random(word).choice(POS_TAGS)


def make_sentence(rng: random.Random, fillers: list[str], mentions: list[tuple[str, list[str]]]):
    """Assemble one sentence: filler tokens with mention spans dropped in.

    Insertion points are drawn in filler coordinates and applied right to
    left, so a later mention can never split an earlier one.
    """
    n_fill = rng.randint(6, 12)
    tokens = [rng.choice(fillers) for _ in range(n_fill)]
    labels = ["O"] * n_fill
    placed = [(rng.randint(0, n_fill), etype, words) for etype, words in mentions]
    for at, etype, words in sorted(placed, key=lambda p: p[0], reverse=True):
        tokens[at:at] = words
        labels[at:at] = [f"B-{etype}"] + [f"I-{etype}"] * (len(words) - 1)
    pos = [pos_of(t) for t in tokens]
    return tokens, pos, labels


def write_three_col(path: Path, sentences) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for tokens, pos, labels in sentences:
            for t, p, l in zip(tokens, pos, labels):
                fh.write(f"{t}\t{p}\t{l}\n")
            fh.write("\n")


def gen_synth(root: Path) -> None:
    rng = random.Random(20250819)
    taken: set[str] = set()

    # 500 phrases across the six types; roughly 15% are two words long.
    per_type = {t: (84 if i < 4 else 82) for i, t in enumerate(ENTITY_TYPES)}
    phrase_words = make_word_pool(rng, 640, taken)
    widx = 0
    pools: dict[str, list[list[str]]] = {}
    for etype in ENTITY_TYPES:
        phrases = []
        for _ in range(per_type[etype]):
            if rng.random() < 0.15:
                phrases.append([phrase_words[widx], phrase_words[widx + 1]])
                widx += 2
            else:
                phrases.append([phrase_words[widx]])
                widx += 1
        pools[etype] = phrases

    fillers = make_word_pool(rng, 600, taken)

    train_pool: dict[str, list[list[str]]] = {}
    test_pool: dict[str, list[list[str]]] = {}
    for etype, phrases in pools.items():
        rng.shuffle(phrases)
        cut = int(round(len(phrases) * 0.8))
        train_pool[etype] = phrases[:cut]
        test_pool[etype] = phrases[cut:]

    def corpus(n_sentences: int, pool: dict[str, list[list[str]]]):
        out = []
        for _ in range(n_sentences):
            n_mentions = 1 if rng.random() < 0.7 else 2
            mentions = []
            for _ in range(n_mentions):
                etype = rng.choice(ENTITY_TYPES)
                mentions.append((etype, rng.choice(pool[etype])))
            out.append(make_sentence(rng, fillers, mentions))
        return out

    write_three_col(root / "synth" / "train.tsv", corpus(1600, train_pool))
    write_three_col(root / "synth" / "test.tsv", corpus(400, test_pool))

    gaz_dir = root / "synth" / "gaz"
    gaz_dir.mkdir(parents=True, exist_ok=True)
    for etype in ENTITY_TYPES:
        with open(gaz_dir / f"{etype.lower()}.txt", "w", encoding="utf-8") as fh:
            for phrase in pools[etype]:
                fh.write(" ".join(phrase) + "\n")


def gen_toy(root: Path) -> None:
    rng = random.Random(77)
    taken: set[str] = set()
    phrase_words = make_word_pool(rng, 60, taken)
    fillers = make_word_pool(rng, 80, taken)
    pools = {etype: [[phrase_words[i * 10 + j]] for j in range(10)] for i, etype in enumerate(ENTITY_TYPES)}

    def corpus(n_sentences: int):
        out = []
        for _ in range(n_sentences):
            etype = rng.choice(ENTITY_TYPES)
            mentions = [(etype, rng.choice(pools[etype]))]
            out.append(make_sentence(rng, fillers, mentions))
        return out

    splits = {"train": corpus(60), "test": corpus(20)}
    label_names = ["O"] + [f"{bi}-{t}" for t in ENTITY_TYPES for bi in ("B", "I")]

    (root / "toy").mkdir(parents=True, exist_ok=True)
    with open(root / "toy" / "gaz.tsv", "w", encoding="utf-8") as fh:
        for etype in ENTITY_TYPES:
            for phrase in pools[etype]:
                fh.write(" ".join(phrase) + "\t" + etype + "\n")

    for name, sentences in splits.items():
        write_three_col(root / "toy" / f"{name}.tsv", sentences)
        for layer in (23, 24):
            lrng = random.Random(1000 + layer)
            with open(root / "toy" / f"emb{layer}_{name}.txt", "w", encoding="utf-8") as fh:
                fh.write(f"#SIDECAR kind=emb layer={layer} dim=8\n")
                for s, (tokens, _, labels) in enumerate(sentences):
                    for t, label in enumerate(labels):
                        # Cluster center indexed by entity type, O at the origin,
                        # plus small noise so the clusters are distinct but not
                        # degenerate.
                        center = [0.0] * 8
                        if label != "O":
                            center[ENTITY_TYPES.index(label[2:])] = 2.0
                            center[6] = 1.0 if label.startswith("B-") else -1.0
                        vals = [c + lrng.gauss(0.0, 0.15) for c in center]
                        fh.write(f"{s} {t} " + " ".join(f"{v:.6f}" for v in vals) + "\n")
        trng = random.Random(2000)
        with open(root / "toy" / f"tags_{name}.txt", "w", encoding="utf-8") as fh:
            fh.write("#SIDECAR kind=tag layer=-1 dim=0\n")
            for s, (tokens, _, labels) in enumerate(sentences):
                for t, label in enumerate(labels):
                    tag = label if trng.random() >= 0.1 else trng.choice(label_names)
                    fh.write(f"{s} {t} {tag}\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory root")
    args = parser.parse_args()
    root = Path(args.out)
    gen_synth(root)
    gen_toy(root)
    print(f"wrote {root}/synth and {root}/toy")


if __name__ == "__main__":
    main()
