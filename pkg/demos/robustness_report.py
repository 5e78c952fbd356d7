"""Compare simulated captioning models with every metric, then perturb
candidates and see which metrics hold up.

Run: python demos/robustness_report.py
"""

from i2ce import harness, toyworld
from i2ce.metric import train_two_stage

table = toyworld.desk_embeddings()
model = train_two_stage(toyworld.desk_training_plan(), table).model


def dataset(name):
    records = toyworld.dataset_records(40, 7, name)
    items = [harness.Item(r["id"], r["candidate"], r["references"]) for r in records]
    return harness.EvaluationDataset(items, model_name=name)


datasets = {name: dataset(name) for name in toyworld.MODEL_QUALITIES}

# stop words removed from candidates and references (B@1*), against MEAN
print(harness.stopword_table(datasets, table, mode="both"))

# all metrics, one column per model
reports = {name: harness.evaluate(ds, harness.METRICS, table, model) for name, ds in datasets.items()}
print(harness.table_from_reports(reports))

# perturb one model's candidates; normalized drop per metric
base_name = "top-down+"
base = reports[base_name]
synonyms = harness.load_synonyms()
drops = {}
for kind in ("synonym", "shuffle", "stopword-drop"):
    perturbed = harness.perturb(datasets[base_name], kind, synonyms, seed=0)
    drops[kind] = harness.robustness_compare(base, harness.evaluate(perturbed, harness.METRICS, table, model))
rows = {metric: [drops[k][metric] for k in drops] for metric in base.rows}
print(harness.format_table(rows, list(drops), title=f"normalized drop, {base_name}"))

print("per-item correlation with B@1:")
for metric in ("METEOR", "CIDEr", "MEAN", "I2CE"):
    r = harness.correlate(base, "B@1", metric)
    print(f"  {metric:7s} pearson {r['pearson']:.3f}  spearman {r['spearman']:.3f}")
