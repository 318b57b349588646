import os
import subprocess
import sys

import pytest

from conftest import fixture_path
from tagmt.cli import main
from tagmt.corpus import load_vg_corpus
from tagmt.fileio import read_lines

DISAMBIG = fixture_path("disambig")

MINI_CFG = """\
[experiment]
seed = 13
task = toy-disambiguation
corpus_name = toy

[paths]
train_corpus = {d}/train.tsv
valid_corpus = {d}/valid.tsv
test_corpus = {d}/test.tsv
bitext_source = {d}/extra.src
bitext_target = {d}/extra.tgt
detections = {d}/detections.tsv
tag_vocabulary = {d}/tag_vocab.txt
output_dir = {out}

[tagging]
backend = file
k = 10

[translator]
layers = 1
heads = 2
model_dim = 32
ff_dim = 48
dropout = 0.0
max_steps = 50
validation_interval = 25
learning_rate = 3e-3
warmup_steps = 10
batch_size = 32
max_len = 48

[synthesizer]
layers = 1
heads = 2
model_dim = 32
ff_dim = 48
dropout = 0.0
max_steps = 50
validation_interval = 25
learning_rate = 3e-3
warmup_steps = 10
batch_size = 32
max_len = 48

[decode]
method = greedy
max_len = 48
"""


def write_mini_cfg(tmp_path, out_dir):
    path = tmp_path / "mini.cfg"
    path.write_text(MINI_CFG.format(d=DISAMBIG, out=out_dir), encoding="utf-8")
    return str(path)


def test_corpus_stats_table(capsys):
    assert main(["corpus", "stats", "--vg", os.path.join(DISAMBIG, "train.tsv"), "--split", "train"]) == 0
    out = capsys.readouterr().out
    assert "sentences" in out and "200" in out


def test_corpus_stats_bitext_tsv(capsys):
    code = main(
        [
            "corpus",
            "stats",
            "--source",
            os.path.join(DISAMBIG, "extra.src"),
            "--target",
            os.path.join(DISAMBIG, "extra.tgt"),
            "--format",
            "tsv",
        ]
    )
    assert code == 0
    assert "sentences\t100" in capsys.readouterr().out


def test_corpus_validate_ok(capsys):
    assert main(["corpus", "validate", "--vg", os.path.join(DISAMBIG, "test.tsv")]) == 0
    assert "OK: 100" in capsys.readouterr().out


def test_corpus_validate_bad_line_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\t1\t1\t2\t2\tsrc\ttgt\nbroken\t1\t2\n", encoding="utf-8")
    assert main(["corpus", "validate", "--vg", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err


def test_corpus_validate_needs_input(capsys):
    assert main(["corpus", "validate"]) == 1


def test_usage_error_exit_1():
    proc = subprocess.run(
        [sys.executable, "-m", "tagmt.cli", "corpus", "stats", "--nonsense"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1


def test_eval_report_cli_matches_published_numbers(capsys):
    code = main(
        [
            "eval",
            "report",
            "--text-only",
            fixture_path("wat2022_text_only.tsv"),
            "--multimodal",
            fixture_path("wat2022_multimodal.tsv"),
            "--format",
            "table",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("EN-HI E-Test"))
    assert "42.0" in line and "36.2" in line and "+5.8" in line


def test_eval_bleu_cli(tmp_path, capsys):
    hyp = tmp_path / "hyp.txt"
    ref = tmp_path / "ref.txt"
    hyp.write_text("a b c d\n", encoding="utf-8")
    ref.write_text("a b c d\n", encoding="utf-8")
    assert main(["eval", "bleu", "--hypotheses", str(hyp), "--references", str(ref)]) == 0
    assert "BLEU = 100.0" in capsys.readouterr().out


def test_tags_extract_stub_backend(tmp_path, capsys):
    out = tmp_path / "tagsets.tsv"
    code = main(
        [
            "tags",
            "extract",
            "--corpus",
            os.path.join(DISAMBIG, "valid.tsv"),
            "--backend",
            "stub",
            "--k",
            "3",
            "--output",
            str(out),
            "--seed",
            "5",
        ]
    )
    assert code == 0
    lines = read_lines(str(out))
    assert len(lines) == 50
    for line in lines:
        image_id, labels = line.split("\t")
        assert len([l for l in labels.split(",") if l]) <= 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit_3(tmp_path, capsys):
    train_tsv = tmp_path / "train.tsv"
    train_tsv.write_text("".join(f"s{i} x\ts{i} x\n" for i in range(40)), encoding="utf-8")
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "[translator]\nlayers = 1\nheads = 2\nmodel_dim = 16\nff_dim = 16\n"
        "max_steps = 30\nvalidation_interval = 30\nlearning_rate = 1e300\n"
        "grad_clip = 1e308\nwarmup_steps = 1\nmax_len = 8\n",
        encoding="utf-8",
    )
    code = main(
        [
            "mt",
            "train",
            "--config",
            str(cfg),
            "--train",
            str(train_tsv),
            "--output",
            str(tmp_path / "m.ckpt"),
        ]
    )
    assert code == 3


@pytest.mark.slow
def test_pipeline_reproducible_and_equals_manual_composition(tmp_path, capsys):
    out_a = tmp_path / "a"
    out_a2 = tmp_path / "a2"
    out_b = tmp_path / "b"
    cfg = write_mini_cfg(tmp_path, "unused")

    assert main(["pipeline", "run", "--config", cfg, "--output-dir", str(out_a)]) == 0
    assert main(["pipeline", "run", "--config", cfg, "--output-dir", str(out_a2)]) == 0

    compare = [
        "tagged_train.tsv",
        "tagged_test.tsv",
        "synth_pairs.tsv",
        "enriched.tsv",
        "hypotheses_text.txt",
        "hypotheses_multimodal.txt",
        "report.tsv",
        "report.txt",
    ]
    for name in compare:
        a = (out_a / name).read_bytes()
        a2 = (out_a2 / name).read_bytes()
        assert a == a2, f"{name} differs between identical runs"

    # manual composition of subcommands reproduces every pipeline artifact
    out_b.mkdir()

    def run(argv):
        assert main(argv) == 0

    def p(name):
        return str(out_b / name)

    train_vg = os.path.join(DISAMBIG, "train.tsv")
    valid_vg = os.path.join(DISAMBIG, "valid.tsv")
    test_vg = os.path.join(DISAMBIG, "test.tsv")
    det = os.path.join(DISAMBIG, "detections.tsv")
    tvoc = os.path.join(DISAMBIG, "tag_vocab.txt")

    for split, vg in (("train", train_vg), ("valid", valid_vg), ("test", test_vg)):
        run(
            ["tags", "extract", "--corpus", vg, "--backend", "file", "--detections", det,
             "--tag-vocabulary", tvoc, "--k", "10", "--output", p(f"tagsets_{split}.tsv")]
        )
        run(
            ["tags", "inject", "--corpus", vg, "--tagsets", p(f"tagsets_{split}.tsv"),
             "--output", p(f"tagged_{split}.tsv")]
        )

    # plain text views of the corpora (documented VG format -> pairs TSV)
    for split, vg in (("train", train_vg), ("valid", valid_vg)):
        corpus = load_vg_corpus(vg)
        with open(p(f"text_{split}.tsv"), "w", encoding="utf-8") as fh:
            for rec in corpus.records:
                fh.write(f"{rec.source_text}\t{rec.target_text}\n")
    test_corpus = load_vg_corpus(test_vg)
    with open(p("test_sources.txt"), "w", encoding="utf-8") as fh:
        for rec in test_corpus.records:
            fh.write(rec.source_text + "\n")
    with open(p("test_refs.txt"), "w", encoding="utf-8") as fh:
        for rec in test_corpus.records:
            fh.write(rec.target_text + "\n")
    with open(p("test_tagged_sources.txt"), "w", encoding="utf-8") as fh:
        for line in read_lines(p("tagged_test.tsv")):
            fh.write(line.split("\t")[0] + "\n")

    run(["mt", "train", "--config", cfg, "--train", p("text_train.tsv"),
         "--valid", p("text_valid.tsv"), "--output", p("translator_text.ckpt")])

    run(["synth", "build-pairs", "--tagged", p("tagged_train.tsv"), "--output", p("synth_pairs.tsv")])
    run(["synth", "train", "--config", cfg, "--pairs", p("synth_pairs.tsv"),
         "--output", p("synthesizer.ckpt")])
    run(["synth", "enrich", "--checkpoint", p("synthesizer.ckpt"),
         "--source", os.path.join(DISAMBIG, "extra.src"),
         "--target", os.path.join(DISAMBIG, "extra.tgt"),
         "--tag-vocabulary", tvoc, "--k", "10", "--output", p("enriched.tsv")])

    with open(p("combined_train.tsv"), "w", encoding="utf-8") as fh:
        for line in read_lines(p("tagged_train.tsv")):
            fh.write(line + "\n")
        for line in read_lines(p("enriched.tsv")):
            tagged_source, target, _ = line.split("\t")
            fh.write(f"{tagged_source}\t{target}\n")

    run(["mt", "train", "--config", cfg, "--train", p("combined_train.tsv"),
         "--valid", p("tagged_valid.tsv"), "--output", p("translator_multimodal.ckpt")])

    run(["mt", "translate", "--checkpoint", p("translator_text.ckpt"),
         "--input", p("test_sources.txt"), "--output", p("hypotheses_text.txt"),
         "--decode", "greedy", "--max-len", "48"])
    run(["mt", "translate", "--checkpoint", p("translator_multimodal.ckpt"),
         "--input", p("test_tagged_sources.txt"), "--output", p("hypotheses_multimodal.txt"),
         "--decode", "greedy", "--max-len", "48"])

    def bleu_of(hyp_path):
        capsys.readouterr()
        run(["eval", "bleu", "--hypotheses", hyp_path, "--references", p("test_refs.txt"),
             "--format", "tsv"])
        out = capsys.readouterr().out
        return next(l.split("\t")[1] for l in out.splitlines() if l.startswith("bleu\t"))

    with open(p("scores_text.tsv"), "w", encoding="utf-8") as fh:
        fh.write(f"toy-disambiguation\t{bleu_of(p('hypotheses_text.txt'))}\n")
    with open(p("scores_mm.tsv"), "w", encoding="utf-8") as fh:
        fh.write(f"toy-disambiguation\t{bleu_of(p('hypotheses_multimodal.txt'))}\n")
    run(["eval", "report", "--text-only", p("scores_text.tsv"), "--multimodal", p("scores_mm.tsv"),
         "--corpus-name", "toy", "--split", "etest", "--format", "tsv",
         "--output", p("report.tsv")])

    for name in ("tagged_train.tsv", "synth_pairs.tsv", "enriched.tsv",
                 "hypotheses_text.txt", "hypotheses_multimodal.txt", "report.tsv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_non_utf8_input_exit_2(tmp_path, capsys):
    bad = tmp_path / "latin1.tsv"
    bad.write_bytes("a\t1\t1\t2\t2\tcafé\ttgt\n".encode("latin-1"))
    assert main(["corpus", "validate", "--vg", str(bad)]) == 2
