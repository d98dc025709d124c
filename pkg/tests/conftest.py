import math

import pytest

from msaw.data_model import Feature, Instance, Schema, SeasonDataset
from msaw.naive_bayes import fit_batch
from msaw.synth import DriftSpec, generate


def make_schema(n_features=1, alphabet=("P", "N", "M"), positive="1"):
    features = tuple(Feature(f"f{i}", tuple(alphabet)) for i in range(n_features))
    return Schema(features=features, label_name="label", positive_label=positive)


def random_instances(rng, schema, n):
    instances = []
    for i in range(n):
        values = {
            f.name: f.alphabet[int(rng.integers(len(f.alphabet)))]
            for f in schema.features
        }
        instances.append(Instance(values=values, label=bool(rng.integers(2)), ordinal=i))
    return instances


def random_season(rng, schema, n, season_id="s", role="source"):
    return SeasonDataset.from_instances(
        schema, season_id, random_instances(rng, schema, n), role=role
    )


@pytest.fixture
def pnm_schema():
    return make_schema()


@pytest.fixture
def ten_instances(pnm_schema):
    """Four positives (P:3, N:1) and six negatives (P:1, N:5) of one feature."""
    rows = [("P", True)] * 3 + [("N", True)] + [("P", False)] + [("N", False)] * 5
    return [
        Instance(values={"f0": v}, label=lab, ordinal=i)
        for i, (v, lab) in enumerate(rows)
    ]


def tiny_stream(schema, rows, season_id="stream"):
    instances = [
        Instance(values={"f0": v}, label=lab, ordinal=i)
        for i, (v, lab) in enumerate(rows)
    ]
    return SeasonDataset.from_instances(schema, season_id, instances, role="target")


def manual_adaptive_run(source_model, target_model, stream, alpha, beta, threshold):
    """Scalar transcription of the adaptive update sequence (n=1 source).

    Independent oracle: advance the index, amplify the target weight by
    beta * j, normalize, emit the combined probability, penalize thresholded
    mistakes by sqrt(j)/(sqrt(j)+alpha), then fold the instance into the
    target model.
    """
    w_s, w_t = 1.0, 1.0
    j = 0
    probs, weights = [], []
    for inst in stream:
        j += 1
        w_t = w_t * beta * j
        total = w_s + w_t
        w_s, w_t = w_s / total, w_t / total
        s = source_model.predict_proba(inst)
        t = target_model.predict_proba(inst)
        probs.append(w_s * s + w_t * t)
        factor = math.sqrt(j) / (math.sqrt(j) + alpha)
        if (s > threshold) != inst.label:
            w_s *= factor
        if (t > threshold) != inst.label:
            w_t *= factor
        target_model.update(inst)
        weights.append((w_s, w_t))
    return probs, weights


@pytest.fixture(scope="session")
def benchmark():
    """Default synthetic benchmark, generated and fitted once per session."""
    spec = DriftSpec()
    schema, seasons = generate(spec)
    sources, target = seasons[:-1], seasons[-1]
    models = [fit_batch(schema, season) for season in sources]
    return {
        "spec": spec,
        "schema": schema,
        "sources": sources,
        "target": target,
        "models": models,
    }
