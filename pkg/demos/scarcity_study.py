"""Data-scarcity comparison.

Trains the classical baseline and the 4-qubit hybrid on a desk-scale
well-fed per-second regime (a 16-zone corridor) and on the canonical
starved per-minute regime (56 zones, 150 training rows), and prints both
comparison tables.  Takes about two minutes.  The full protocol at 30 runs
per model is the CLI's job:

    qincident experiment --splits DS-1,DS-2,DS-3 --runs 30 --out out/exp
"""

from qincident import data, evaluation, model, nn, scenario

N_RUNS = 3


def build_split(name, n_zones, duration_s, bucket_seconds):
    config = scenario.ScenarioConfig(n_zones=n_zones, duration_s=duration_s, seed=1)
    events = scenario.default_schedule(config, bucket_seconds=bucket_seconds)
    config = scenario.ScenarioConfig(
        n_zones=n_zones, duration_s=duration_s, seed=1, incidents=tuple(events)
    )
    records, _ = scenario.generate(config)
    aggregates = data.aggregate(records, bucket_seconds, n_zones, duration_s=duration_s)
    rows = data.build_features(aggregates, data.default_topology(n_zones))
    rows = data.label(rows, events, bucket_seconds=bucket_seconds)
    return data.normalize(data.split(rows, name))


train_config = nn.TrainConfig(epochs=20, batch_size=16, seed=0)
configs = [
    model.HybridModelConfig(kind="classical"),
    model.HybridModelConfig(kind="hybrid", n_qubits=4),
]

regimes = (
    ("DS-1", 16, 1250, 1),    # plenty of per-second data, shrunk corridor
    ("DS-3", 56, 1500, 60),   # the canonical scarce regime: 150 train rows
)
for name, n_zones, duration, bucket in regimes:
    split = build_split(name, n_zones, duration, bucket)
    print(
        f"\n{name}: {len(split.train_rows)} train rows "
        f"({sum(r.label for r in split.train_rows)} positive), "
        f"{len(split.test_rows)} test rows"
    )
    aggregates_out = [
        evaluation.run_experiment(c, split, train_config, n_runs=N_RUNS, base_seed=0)
        for c in configs
    ]
    _, table = evaluation.compare(aggregates_out)
    print(table)
