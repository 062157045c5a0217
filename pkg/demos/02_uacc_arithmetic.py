"""
UAcc: rewarding small prediction sets
=====================================

UAcc rescales accuracy by ``sqrt(K / average set size)``. Two systems with
the same accuracy separate once one of them commits to tighter sets.
"""

from conformal_ordinal import uacc
from conformal_ordinal.metrics import EvalReport, format_table

# (dataset, system, QWK, accuracy, F1, coverage, avg |C|, K)
rows = [
    ("ASAP P1", "Qwen-2.5 3B", 0.69, 0.50, 0.45, 0.91, 3.51, 11),
    ("ASAP P1", "Llama-2 7B", 0.82, 0.54, 0.52, 0.91, 2.74, 11),
    ("ASAP P1", "Llama-3 8B", 0.80, 0.54, 0.51, 0.91, 2.81, 11),
    ("TOEFL11", "Qwen-2.5 3B", 0.69, 0.77, 0.76, 0.89, 1.32, 3),
    ("TOEFL11", "Llama-3 8B", 0.70, 0.77, 0.77, 0.89, 1.29, 3),
    ("Cambridge-FCE", "Qwen-2.5 3B", 0.16, 0.65, 0.62, 0.95, 2.30, 3),
    ("Cambridge-FCE", "Llama-3 8B", 0.28, 0.66, 0.64, 0.88, 1.74, 3),
]

reports = [
    EvalReport(accuracy=acc, macro_f1=f1, qwk=k, coverage=cov, avg_set_size=size,
               singleton_rate=float("nan"), uacc=uacc(acc, K, size), n_test=0, K=K,
               alpha=0.1, q_alpha=float("nan"), dataset=ds, system=sysname)
    for ds, sysname, k, acc, f1, cov, size, K in rows
]
print(format_table(reports))

# %%
# Same accuracy, smaller sets: the gain is entirely from set width.
print(f"{uacc(0.54, 11, 2.81):.3f} vs {uacc(0.54, 11, 2.74):.3f}")
# A K-label set on every record reduces UAcc to plain accuracy.
print(uacc(0.6, 11, 11.0))
