"""Dataset ingestion, metric runs, reports and robustness experiments."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .classic import HIGHER, LOWER, bleu, cider_per_item, meteor_lite, rouge_l
from .embeddings import EmbeddingTable, mean_metric
from .metric import i2ce_candidate
from .neural import EncoderModel
from .text import remove_stopwords, tokenize
from .transport import wmd

log = logging.getLogger(__name__)

REPORT_SCHEMA = "i2ce-report"
REPORT_VERSION = 1
METRICS = ("bleu", "meteor", "rouge", "cider", "mean", "wmd", "i2ce")
ROWS = {
    "bleu": ("B@1", "B@2", "B@3", "B@4"),
    "meteor": ("METEOR",),
    "rouge": ("ROUGE-L",),
    "cider": ("CIDEr",),
    "mean": ("MEAN",),
    "wmd": ("WMD",),
    "i2ce": ("I2CE",),
}
STOPWORD_MODES = ("cand", "refs", "both")


class DatasetError(ValueError):
    """Input file cannot be turned into an evaluation dataset."""


@dataclass
class Item:
    item_id: str
    candidate: str
    references: list[str]


@dataclass
class EvaluationDataset:
    items: list[Item]
    source: str | None = None
    model_name: str | None = None
    checksum: str | None = None

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if item.item_id in seen:
                raise DatasetError(f"duplicate item id {item.item_id!r}")
            seen.add(item.item_id)
            if not item.references:
                raise DatasetError(f"item {item.item_id!r} has no references")

    def __len__(self):
        return len(self.items)

    def tokenized(self):
        return [(tokenize(it.candidate), [tokenize(r) for r in it.references]) for it in self.items]


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _infer_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".jsonl":
        return "jsonl"
    if suffix in (".tsv", ".txt"):
        return "tsv"
    if suffix == ".json":
        return "coco-json"
    raise DatasetError(f"cannot infer dataset format from {path.name!r}")


def _read_jsonl(path: Path) -> list[Item]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                items.append(Item(str(rec["id"]), str(rec["candidate"]),
                                  [str(r) for r in rec["references"]]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
    return items


def _read_tsv(path: Path) -> list[Item]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) < 2:
                raise DatasetError(f"{path}:{lineno}: expected id<TAB>candidate<TAB>references...")
            items.append(Item(fields[0], fields[1], [f for f in fields[2:] if f.strip()]))
    return items


def _read_coco(path: Path, candidates: Path | None) -> list[Item]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        refs: dict[str, list[str]] = {}
        for ann in data["annotations"]:
            refs.setdefault(str(ann["image_id"]), []).append(str(ann["caption"]))
        if candidates is not None:
            results = json.loads(Path(candidates).read_text(encoding="utf-8"))
        else:
            results = data.get("results")
        if results is None:
            raise DatasetError(f"{path}: no candidate captions (pass a results file)")
        cands = {}
        for res in results:
            key = str(res["image_id"])
            if key in cands:
                raise DatasetError(f"duplicate item id {key!r} in results")
            cands[key] = str(res["caption"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetError(f"{path}: {exc}") from None
    items = []
    for key, cand in cands.items():
        if key not in refs:
            raise DatasetError(f"item {key!r} has no references")
        items.append(Item(key, cand, refs[key]))
    return items


def load_dataset(path: str | Path, format: str | None = None, candidates: str | Path | None = None,
                 model_name: str | None = None) -> EvaluationDataset:
    """Read ``jsonl`` (``{id, candidate, references}`` per line), ``tsv``
    (id, candidate, then one reference per column) or ``coco-json``
    (``annotations`` with ``image_id``/``caption``; candidates from a COCO
    results list given as ``candidates`` or under a ``results`` key)."""
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "jsonl":
        items = _read_jsonl(path)
    elif fmt == "tsv":
        items = _read_tsv(path)
    elif fmt == "coco-json":
        items = _read_coco(path, Path(candidates) if candidates else None)
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}")
    checksum = file_sha256(path)
    if candidates:
        checksum += ":" + file_sha256(candidates)
    return EvaluationDataset(items, str(path), model_name or path.stem, checksum)


# --------------------------------------------------------------------------
# reports


@dataclass
class MetricRow:
    direction: str = HIGHER
    status: str = "ok"
    reason: str | None = None
    corpus: float | None = None
    per_item: list[float | None] = field(default_factory=list)


@dataclass
class EvaluationReport:
    item_ids: list[str]
    rows: dict[str, MetricRow]
    dataset: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[str]:
        return [name for name, row in self.rows.items() if row.status != "ok"]

    def value(self, name: str) -> float | None:
        return self.rows[name].corpus

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "schema_version": REPORT_VERSION,
            "dataset": self.dataset,
            "config": self.config,
            "item_ids": self.item_ids,
            "metrics": {k: vars(v) for k, v in self.rows.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> EvaluationReport:
        if data.get("schema") != REPORT_SCHEMA:
            raise DatasetError("not an evaluation report")
        if data.get("schema_version") != REPORT_VERSION:
            raise DatasetError(f"unsupported report version {data.get('schema_version')}")
        rows = {k: MetricRow(**v) for k, v in data["metrics"].items()}
        return cls(list(data["item_ids"]), rows, data.get("dataset", {}), data.get("config", {}))

    def render_text(self) -> str:
        name = self.dataset.get("model") or "score"
        return format_table({k: [r.corpus] for k, r in self.rows.items()}, [name],
                            notes={k: r.reason for k, r in self.rows.items() if r.status != "ok"})


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.3f}"


def format_table(rows: dict[str, Sequence[float | None]], columns: Sequence[str],
                 title: str | None = None, notes: dict | None = None) -> str:
    """Plain-text table: one row per metric, one column per captioning model,
    three decimals."""
    header = ["Metric", *columns]
    body = [[name, *(_fmt(v) for v in values)] for name, values in rows.items()]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    line = lambda cells: "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                                   for i, (c, w) in enumerate(zip(cells, widths))).rstrip()
    out = [title] if title else []
    out.append(line(header))
    out.append("-" * len(out[-1]))
    out.extend(line(r) for r in body)
    for name, reason in (notes or {}).items():
        out.append(f"! {name} failed: {reason}")
    return "\n".join(out) + "\n"


def table_from_reports(reports: dict[str, EvaluationReport]) -> str:
    names = list(reports)
    row_names: list[str] = []
    for rep in reports.values():
        row_names += [r for r in rep.rows if r not in row_names]
    rows = {r: [reports[n].rows[r].corpus if r in reports[n].rows else None for n in names]
            for r in row_names}
    return format_table(rows, names)


# --------------------------------------------------------------------------
# evaluation


@dataclass
class EvalFlags:
    bleu_max_n: int = 4
    wmd_remove_stopwords: bool = False
    i2ce_aggregate: str = "mean"


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def _run_metric(metric: str, corpus, embeddings, model, flags: EvalFlags) -> dict[str, MetricRow]:
    if metric == "bleu":
        n = flags.bleu_max_n
        per_item = [[s.value for s in bleu([pair], n)] for pair in corpus]
        overall = bleu(corpus, n)
        return {s.metric_name: MetricRow(corpus=s.value, per_item=[p[k] for p in per_item])
                for k, s in enumerate(overall)}
    if metric == "meteor":
        vals = [meteor_lite(c, refs).value for c, refs in corpus]
        return {"METEOR": MetricRow(corpus=_mean(vals), per_item=vals)}
    if metric == "rouge":
        vals = [rouge_l(c, refs).value for c, refs in corpus]
        return {"ROUGE-L": MetricRow(corpus=_mean(vals), per_item=vals)}
    if metric == "cider":
        vals = cider_per_item(corpus)
        return {"CIDEr": MetricRow(corpus=_mean(vals), per_item=vals)}
    if metric == "mean":
        if embeddings is None:
            raise LookupError("MEAN needs an embedding table")
        vals = [mean_metric(c, refs, embeddings).value for c, refs in corpus]
        return {"MEAN": MetricRow(corpus=_mean(vals), per_item=vals)}
    if metric == "wmd":
        if embeddings is None:
            raise LookupError("WMD needs an embedding table")
        if flags.wmd_remove_stopwords:
            corpus = [(remove_stopwords(c), [remove_stopwords(r) for r in refs]) for c, refs in corpus]
        vals = [wmd(c, refs, embeddings).value for c, refs in corpus]
        return {"WMD": MetricRow(LOWER, corpus=_mean(vals), per_item=vals)}
    if metric == "i2ce":
        if model is None:
            raise LookupError("I2CE needs an encoder checkpoint")
        vals = [i2ce_candidate(model, c, refs, flags.i2ce_aggregate).value if c else 0.0
                for c, refs in corpus]
        return {"I2CE": MetricRow(corpus=_mean(vals), per_item=vals)}
    raise ValueError(f"unknown metric {metric!r}")


def evaluate(dataset: EvaluationDataset, metrics: Sequence[str] = METRICS,
             embeddings: EmbeddingTable | None = None, model: EncoderModel | None = None,
             flags: EvalFlags | None = None, config: dict | None = None) -> EvaluationReport:
    """Run the selected metrics. A metric that cannot run is marked failed
    with its reason; the others still run."""
    flags = flags or EvalFlags()
    corpus = dataset.tokenized()
    rows: dict[str, MetricRow] = {}
    for metric in metrics:
        if metric not in ROWS:
            raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
        try:
            rows.update(_run_metric(metric, corpus, embeddings, model, flags))
        except Exception as exc:  # isolate: one metric never sinks the report
            log.warning("%s failed: %s", metric, exc)
            direction = LOWER if metric == "wmd" else HIGHER
            for name in ROWS[metric][: flags.bleu_max_n if metric == "bleu" else None]:
                rows[name] = MetricRow(direction, "failed", f"{type(exc).__name__}: {exc}")
    cfg = {"metrics": list(metrics), **vars(flags), **(config or {})}
    info = {"source": dataset.source, "model": dataset.model_name,
            "sha256": dataset.checksum, "n_items": len(dataset)}
    return EvaluationReport([it.item_id for it in dataset.items], rows, info, cfg)


# --------------------------------------------------------------------------
# experiments


def _strip_dataset(dataset: EvaluationDataset, mode: str) -> EvaluationDataset:
    if mode not in STOPWORD_MODES:
        raise ValueError(f"stop-word mode must be one of {STOPWORD_MODES}")
    items = []
    for it in dataset.items:
        cand = it.candidate
        refs = it.references
        if mode in ("cand", "both"):
            cand = " ".join(remove_stopwords(tokenize(cand)))
        if mode in ("refs", "both"):
            refs = [" ".join(remove_stopwords(tokenize(r))) for r in refs]
        items.append(Item(it.item_id, cand, refs))
    return EvaluationDataset(items, dataset.source, dataset.model_name, dataset.checksum)


def stopword_experiment(dataset: EvaluationDataset, embeddings: EmbeddingTable | None,
                        mode: str = "both") -> dict[str, float | None]:
    """B@1 on whole sentences, B@1* with stop words removed (per ``mode``),
    and MEAN."""
    corpus = dataset.tokenized()
    stripped = _strip_dataset(dataset, mode).tokenized()
    rows = {"B@1": bleu(corpus, 1)[0].value, "B@1*": bleu(stripped, 1)[0].value, "MEAN": None}
    if embeddings is not None:
        rows["MEAN"] = _mean(mean_metric(c, refs, embeddings).value for c, refs in corpus)
    return rows


def stopword_table(datasets: dict[str, EvaluationDataset], embeddings, mode: str = "both") -> str:
    results = {name: stopword_experiment(ds, embeddings, mode) for name, ds in datasets.items()}
    rows = {r: [results[n][r] for n in datasets] for r in ("B@1", "B@1*", "MEAN")}
    return format_table(rows, list(datasets))


def load_synonyms(path: str | Path | None = None) -> dict[str, str]:
    """Tab-separated ``word<TAB>replacement`` lines; defaults to the shipped sample."""
    if path is None:
        text = resources.files("i2ce.data").joinpath("synonyms_sample.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(f"synonym table line {lineno}: expected word<TAB>replacement")
        table[parts[0].strip()] = parts[1].strip()
    return table


def perturb(dataset: EvaluationDataset, kind: str, synonym_table: dict[str, str] | None = None,
            seed: int = 0) -> EvaluationDataset:
    """Rewrite every candidate; references are left alone.

    ``synonym`` replaces words found in the table, ``shuffle`` permutes the
    tokens (item ``k`` uses generator ``[seed, k]``), ``stopword-drop``
    removes stop words.
    """
    if kind == "synonym" and synonym_table is None:
        raise ValueError("synonym perturbation needs a synonym table")
    items = []
    for k, it in enumerate(dataset.items):
        toks = tokenize(it.candidate)
        if kind == "synonym":
            toks = [synonym_table.get(t, t) for t in toks]
        elif kind == "shuffle":
            toks = [toks[i] for i in np.random.default_rng([seed, k]).permutation(len(toks))]
        elif kind == "stopword-drop":
            toks = remove_stopwords(toks)
        else:
            raise ValueError(f"unknown perturbation {kind!r}")
        items.append(Item(it.item_id, " ".join(toks), list(it.references)))
    name = f"{dataset.model_name}+{kind}" if dataset.model_name else kind
    return EvaluationDataset(items, dataset.source, name, dataset.checksum)


def robustness_compare(original: EvaluationReport, perturbed: EvaluationReport) -> dict[str, float | None]:
    """Normalized score drop per metric: (orig - pert) / orig for
    higher-better rows, (pert - orig) / orig for lower-better rows."""
    if original.item_ids != perturbed.item_ids:
        raise ValueError("reports cover different items")
    if set(original.rows) != set(perturbed.rows):
        raise ValueError("reports cover different metrics")
    out = {}
    for name, row in original.rows.items():
        o, p = row.corpus, perturbed.rows[name].corpus
        if o is None or p is None or o == 0:
            out[name] = None
        elif row.direction == LOWER:
            out[name] = (p - o) / o
        else:
            out[name] = (o - p) / o
    return out


def correlate(report: EvaluationReport, metric_a: str, metric_b: str) -> dict[str, float | None]:
    """Pearson and Spearman (average ranks for ties) over per-item scores.
    A constant score vector yields None."""
    for m in (metric_a, metric_b):
        if m not in report.rows or report.rows[m].status != "ok":
            raise ValueError(f"metric {m!r} has no per-item scores in this report")
    pairs = [(a, b) for a, b in zip(report.rows[metric_a].per_item, report.rows[metric_b].per_item)
             if a is not None and b is not None]
    if len(pairs) < 2:
        return {"pearson": None, "spearman": None}
    a, b = (np.array(x, dtype=np.float64) for x in zip(*pairs))
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return {"pearson": None, "spearman": None}
    pearson = float(stats.pearsonr(a, b)[0])
    spearman = float(stats.spearmanr(a, b)[0])
    clean = lambda x: None if math.isnan(x) else x
    return {"pearson": clean(pearson), "spearman": clean(spearman)}
