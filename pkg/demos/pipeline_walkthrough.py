"""From raw vehicle records to a trained detector, at desk scale.

Generates a small corridor with two incidents, walks the records through
aggregation, feature construction, labeling and normalization, then trains
the classical and hybrid models and prints their test metrics.
"""

import numpy as np

from qincident import data, evaluation, model, nn, scenario

# A 12-zone corridor, 10 minutes, two hand-placed incidents.
events = [
    scenario.IncidentEvent(zone=4, start_s=60, duration_s=80),
    scenario.IncidentEvent(zone=9, start_s=360, duration_s=70),
]
config = scenario.ScenarioConfig(
    n_zones=12, duration_s=600, seed=3, incidents=tuple(events)
)
records, _ = scenario.generate(config)
print(f"{len(records)} vehicle records from {config.n_zones} zones x {config.duration_s}s")

# Aggregate per second, build the six-feature rows, attach labels.
aggregates = data.aggregate(records, bucket_seconds=1, n_zones=12, duration_s=600)
rows = data.build_features(aggregates, data.default_topology(12))
rows = data.label(rows, events, bucket_seconds=1)
positives = sum(r.label for r in rows)
print(f"{len(rows)} rows, {positives} labeled positive ({positives / len(rows):.1%})")

example = next(r for r in rows if r.label == 1 and r.bucket_start == 100)
print("a positive row (zone, upstream, downstream speed/count):")
print(" ", np.round(example.features(), 2))

# Chronological split, normalization fitted on the training rows only.
split = data.normalize(data.split(rows, "DS-1"))
print(f"train {len(split.train_rows)} rows / test {len(split.test_rows)} rows")

# Train both model kinds and compare on the held-out rows.
train_config = nn.TrainConfig(epochs=20, batch_size=16, seed=0)
aggregates_out = []
for kind, qubits in (("classical", 4), ("hybrid", 4)):
    agg = evaluation.run_experiment(
        model.HybridModelConfig(kind=kind, n_qubits=qubits),
        split,
        train_config,
        n_runs=3,
        base_seed=0,
    )
    aggregates_out.append(agg)

_, table = evaluation.compare(aggregates_out)
print()
print(table)
