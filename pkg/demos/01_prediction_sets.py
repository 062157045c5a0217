"""
Prediction sets from a calibrated threshold
===========================================

Calibrate the LAC threshold on held-out records, then turn each test
record's probabilities into a set of plausible scores. Singleton sets can
be released automatically; anything wider goes to a human rater.
"""

import numpy as np

from conformal_ordinal import THREE_BAND, RecordSet, calibrate, evaluate, generate_exchangeable, predict_batch

# %%
# Synthetic three-band scorer. Each record is a probability vector over
# low / medium / high plus the label a human gave.
raw = generate_exchangeable(K=3, n=746, sharpness=0.4, seed=42)
records = RecordSet(THREE_BAND, raw.ids, raw.probs, raw.labels)
cal, test = records.take(range(373)), records.take(range(373, 746))

# %%
model = calibrate(cal, alpha=0.1)
print(f"q_alpha = {model.q_alpha:.4f} from {model.n_calibration} calibration records")

sets = predict_batch(model, test)
for s in sets[:8]:
    print(s.record_id, [THREE_BAND.names[i] for i in s.members])

# %%
# Triage: singletons are confident, everything else is flagged.
sizes = np.array([len(s) for s in sets])
print(f"auto-release {np.mean(sizes == 1):.0%}, flag for review {np.mean(sizes > 1):.0%}, "
      f"empty {np.mean(sizes == 0):.0%}")

# %%
# With force_nonempty the argmax label fills any empty set.
forced = calibrate(cal, alpha=0.1, force_nonempty=True)
report = evaluate(forced, test, dataset="synthetic", system="dirichlet-0.4")
print(report.to_json())
