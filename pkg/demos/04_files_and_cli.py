"""
Record files, FCE banding, and the command-line pipeline
========================================================

Records carry either a label name or a raw holistic score; the manifest's
band map turns FCE's 1-40 scale into low / medium / high. The same files
then flow through ``split -> calibrate -> predict -> evaluate``.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from conformal_ordinal import FCE_BAND_MAP, THREE_BAND, Manifest, load_records
from conformal_ordinal.cli import run
from conformal_ordinal.dataset import write_manifest

work = Path(tempfile.mkdtemp())
write_manifest(Manifest(THREE_BAND, FCE_BAND_MAP), work / "manifest.json")

# %%
# Fake FCE scripts: a raw score per essay and a scorer's band probabilities.
rng = np.random.default_rng(0)
raw = rng.integers(1, 41, size=600)
with open(work / "fce.jsonl", "w") as fh:
    for i, score in enumerate(raw):
        band = int(score > 18) + int(score > 30)
        p = rng.dirichlet(np.ones(3) * 0.5)
        p = 0.75 * p + 0.25 * np.eye(3)[band]
        fh.write(json.dumps({"id": f"fce{i:04d}", "probs": p.tolist(), "raw_score": int(score)}) + "\n")

records = load_records(work / "fce.jsonl", work / "manifest.json")
print(np.bincount(records.labels, minlength=3), "records per band")

# %%
m = ["--manifest", str(work / "manifest.json")]
run(["split", str(work / "fce.jsonl"), *m, "--out", str(work / "split")])
print((work / "split" / "split_report.json").read_text())
run(["calibrate", str(work / "split" / "calibration.jsonl"), *m, "--out", str(work / "model.json")])
run(["predict", str(work / "split" / "test.jsonl"), *m, "--model", str(work / "model.json"),
     "--out", str(work / "sets.jsonl")])
print((work / "sets.jsonl").read_text().splitlines()[:3])
run(["evaluate", str(work / "split" / "test.jsonl"), *m, "--model", str(work / "model.json"),
     "--dataset", "FCE (synthetic)", "--system", "toy", "--format", "table"])
