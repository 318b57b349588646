"""Corpus BLEU and side-by-side comparison reports.

BLEU here is the plain corpus metric: clipped n-gram precisions up to
max_order aggregated over the corpus, geometric mean, brevity penalty
exp(1 - ref_len / hyp_len) when the hypothesis side is shorter. One
reference per hypothesis. No smoothing by default; an optional add-one
variant exists for tiny corpora (numerator and denominator of orders >= 2
each get +1). Tokenization is the caller's job and is expected to be plain
whitespace splitting on detokenized text.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyCorpus, LengthMismatch, MissingBaseline
from .fileio import atomic_write


@dataclass(frozen=True)
class BleuScore:
    score: float
    ngram_precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_length: int
    ref_length: int

    def __str__(self):
        precisions = "/".join(f"{p:.3f}" for p in self.ngram_precisions)
        return (
            f"BLEU = {self.score:.1f} ({precisions}) "
            f"bp={self.brevity_penalty:.3f} hyp_len={self.hyp_length} "
            f"ref_len={self.ref_length}"
        )


def _ngram_counts(tokens, order):
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def corpus_bleu(hypotheses, references, max_order=4, smooth="none"):
    """Corpus-level BLEU over aligned token-sequence lists.

    Returns 0 when any counted order has zero matches (or zero hypothesis
    n-grams) unless add-one smoothing is enabled for orders >= 2.
    """
    if smooth not in ("none", "add1"):
        raise ValueError(f"smooth must be 'none' or 'add1', got {smooth!r}")
    if len(hypotheses) != len(references):
        raise LengthMismatch(len(hypotheses), len(references))
    if not hypotheses:
        raise EmptyCorpus("cannot score an empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp = list(hyp)
        ref = list(ref)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_order + 1):
            hyp_counts = _ngram_counts(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            for gram, count in hyp_counts.items():
                matches[n - 1] += min(count, ref_counts.get(gram, 0))

    precisions = []
    for n in range(max_order):
        m, t = matches[n], totals[n]
        if smooth == "add1" and n >= 1:
            m, t = m + 1, t + 1
        precisions.append(m / t if t > 0 else 0.0)

    if hyp_len == 0:
        bp = 1.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0

    if any(p == 0.0 for p in precisions):
        score = 0.0
    else:
        log_mean = sum(math.log(p) for p in precisions) / max_order
        score = 100.0 * bp * math.exp(log_mean)
    return BleuScore(
        score=score,
        ngram_precisions=tuple(precisions),
        brevity_penalty=bp,
        hyp_length=hyp_len,
        ref_length=ref_len,
    )


def bleu_from_texts(hypothesis_lines, reference_lines, max_order=4, smooth="none"):
    """BLEU over raw text lines, whitespace-tokenized."""
    return corpus_bleu(
        [line.split() for line in hypothesis_lines],
        [line.split() for line in reference_lines],
        max_order=max_order,
        smooth=smooth,
    )


@dataclass(frozen=True)
class ReportRow:
    task: str
    system_score: float
    baseline_score: float | None = None
    delta: float | None = None


@dataclass
class EvalReport:
    rows: list[ReportRow]
    metadata: dict = field(default_factory=dict)


def report_delta(text_only, multimodal, corpus_name="", split="", timestamp=None):
    """Build a comparison report: one row per multimodal task.

    Deltas are exact subtractions (multimodal minus text-only); rendering
    rounds to one decimal place but never re-rounds previously rounded
    inputs. Every multimodal task needs a text-only baseline.
    """
    rows = []
    for task, mm_score in multimodal.items():
        if task not in text_only:
            raise MissingBaseline(task)
        base = text_only[task]
        rows.append(
            ReportRow(
                task=task,
                system_score=float(mm_score),
                baseline_score=float(base),
                delta=float(mm_score) - float(base),
            )
        )
    metadata = {"bleu_tokenization": "whitespace"}
    if corpus_name:
        metadata["corpus"] = corpus_name
    if split:
        metadata["split"] = split
    if timestamp is not None:
        metadata["timestamp"] = timestamp
    return EvalReport(rows=rows, metadata=metadata)


def _fmt(value):
    return "" if value is None else f"{value:.1f}"


def _fmt_delta(value):
    return "" if value is None else f"{value:+.1f}"


def render_report_tsv(report):
    lines = ["task\tsystem\tbaseline\tdelta"]
    for row in report.rows:
        lines.append(
            f"{row.task}\t{_fmt(row.system_score)}\t"
            f"{_fmt(row.baseline_score)}\t{_fmt_delta(row.delta)}"
        )
    for key in sorted(report.metadata):
        lines.append(f"# {key}: {report.metadata[key]}")
    return "\n".join(lines) + "\n"


def render_report_table(report):
    header = ("Task", "System", "Baseline", "Delta")
    body = [
        (row.task, _fmt(row.system_score), _fmt(row.baseline_score), _fmt_delta(row.delta))
        for row in report.rows
    ]
    widths = [
        max(len(header[col]), *(len(line[col]) for line in body)) if body else len(header[col])
        for col in range(4)
    ]
    def fmt_line(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()

    lines = [fmt_line(header), fmt_line(tuple("-" * w for w in widths))]
    lines.extend(fmt_line(line) for line in body)
    for key in sorted(report.metadata):
        lines.append(f"{key}: {report.metadata[key]}")
    return "\n".join(lines) + "\n"


def write_report(report, path, fmt="tsv"):
    if fmt not in ("tsv", "table"):
        raise ValueError(f"fmt must be 'tsv' or 'table', got {fmt!r}")
    rendered = render_report_tsv(report) if fmt == "tsv" else render_report_table(report)
    with atomic_write(path) as out:
        out.write(rendered)


def read_scores_tsv(lines):
    """Parse (task, score) TSV lines into an ordered task -> score map."""
    scores = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        task, score = line.split("\t")
        scores[task.strip()] = float(score)
    return scores
