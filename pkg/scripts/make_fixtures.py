#!/usr/bin/env python3
"""Regenerate the bundled fixtures deterministically.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from tagmt.corpus import write_pairs_tsv, write_vg_corpus
from tagmt.fileio import atomic_write
from tagmt.tagging import write_detections_file
from tagmt.toy import (
    TAG_LABELS,
    examples_to_detections,
    examples_to_vg,
    make_copy_task,
    make_disambiguation_examples,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")

WAT2022_TEXT_ONLY = [
    ("EN-HI E-Test", "36.2"),
    ("EN-HI C-Test", "29.6"),
    ("EN-ML E-Test", "30.8"),
    ("EN-ML C-Test", "14.6"),
    ("EN-BN E-Test", "41"),
    ("EN-BN C-Test", "22.6"),
]
WAT2022_MULTIMODAL = [
    ("EN-HI E-Test", "42"),
    ("EN-HI C-Test", "39.1"),
    ("EN-ML E-Test", "41"),
    ("EN-ML C-Test", "20.4"),
    ("EN-BN E-Test", "42.1"),
    ("EN-BN C-Test", "28.7"),
]

TOY_CFG = """\
# End-to-end toy experiment; paths are relative to this file.
[experiment]
seed = 13
task = toy-disambiguation
corpus_name = toy

[paths]
train_corpus = disambig/train.tsv
valid_corpus = disambig/valid.tsv
test_corpus = disambig/test.tsv
bitext_source = disambig/extra.src
bitext_target = disambig/extra.tgt
detections = disambig/detections.tsv
tag_vocabulary = disambig/tag_vocab.txt
output_dir = out

[tagging]
backend = file
k = 10

[translator]
layers = 2
heads = 2
model_dim = 32
ff_dim = 64
dropout = 0.0
label_smoothing = 0.1
max_steps = 250
validation_interval = 50
learning_rate = 3e-3
warmup_steps = 25
batch_size = 32
max_len = 48

[synthesizer]
layers = 2
heads = 2
model_dim = 32
ff_dim = 64
dropout = 0.0
label_smoothing = 0.1
max_steps = 250
validation_interval = 50
learning_rate = 3e-3
warmup_steps = 25
batch_size = 32
max_len = 48

[decode]
method = greedy
max_len = 48
"""


def main():
    copy_dir = os.path.join(FIXTURES, "copy_task")
    pairs = make_copy_task(1300, seed=7)
    write_pairs_tsv(pairs[:1000], os.path.join(copy_dir, "train.tsv"))
    write_pairs_tsv(pairs[1000:1100], os.path.join(copy_dir, "valid.tsv"))
    write_pairs_tsv(pairs[1100:1300], os.path.join(copy_dir, "test.tsv"))
    print(f"copy task: 1000/100/200 pairs in {copy_dir}")

    dis_dir = os.path.join(FIXTURES, "disambig")
    train = make_disambiguation_examples(200, seed=11, id_start=0)
    valid = make_disambiguation_examples(50, seed=12, id_start=10_000)
    test = make_disambiguation_examples(100, seed=14, id_start=20_000)
    extra = make_disambiguation_examples(100, seed=15, id_start=30_000)
    write_vg_corpus(examples_to_vg(train, "train"), os.path.join(dis_dir, "train.tsv"))
    write_vg_corpus(examples_to_vg(valid, "dtest"), os.path.join(dis_dir, "valid.tsv"))
    write_vg_corpus(examples_to_vg(test, "etest"), os.path.join(dis_dir, "test.tsv"))
    detections = {}
    for examples in (train, valid, test):
        detections.update(examples_to_detections(examples))
    write_detections_file(detections, os.path.join(dis_dir, "detections.tsv"))
    with atomic_write(os.path.join(dis_dir, "tag_vocab.txt")) as out:
        for label in TAG_LABELS:
            out.write(label + "\n")
    with atomic_write(os.path.join(dis_dir, "extra.src")) as out:
        for ex in extra:
            out.write(ex.source + "\n")
    with atomic_write(os.path.join(dis_dir, "extra.tgt")) as out:
        for ex in extra:
            out.write(ex.target + "\n")
    print(f"disambiguation world: 200/50/100 VG records + 100 bitext lines in {dis_dir}")

    write_pairs_tsv(WAT2022_TEXT_ONLY, os.path.join(FIXTURES, "wat2022_text_only.tsv"))
    write_pairs_tsv(WAT2022_MULTIMODAL, os.path.join(FIXTURES, "wat2022_multimodal.tsv"))
    with atomic_write(os.path.join(FIXTURES, "toy.cfg")) as out:
        out.write(TOY_CFG)
    print(f"config + published scores in {FIXTURES}")


if __name__ == "__main__":
    main()
