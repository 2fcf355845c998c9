import numpy as np
import pytest

from phmkit.ingest import assemble_dataset
from phmkit.synth import SynthConfig, generate_fleet


@pytest.fixture(scope="session")
def tiny_fleet():
    """Nine units, short cycles: enough structure for fast pipeline tests."""
    config = SynthConfig(
        n_units=9,
        lifetime_range=(20, 30),
        cycle_length_range=(15, 30),
        noise_scale=0.3,
        seed=123,
    )
    records, manifest = generate_fleet(config)
    return records, manifest


@pytest.fixture(scope="session")
def tiny_split(tiny_fleet):
    records, manifest = tiny_fleet
    return assemble_dataset(records, manifest), manifest


def brute_force_auroc(labels, scores):
    """O(n^2) pairwise oracle: fraction of (pos, neg) pairs ranked correctly,
    ties counting one half. Enumerates every pair via an outer comparison."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=float)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def brute_force_aupr(labels, scores):
    """O(n^2) threshold-stepping oracle: average precision over distinct
    descending score thresholds with ties grouped at one threshold."""
    labels = np.asarray(labels, dtype=float)
    scores = np.asarray(scores, dtype=float)
    n_pos = labels.sum()
    thresholds = np.sort(np.unique(scores))[::-1]
    ap = 0.0
    prev_recall = 0.0
    for thr in thresholds:
        keep = scores >= thr
        tp = labels[keep].sum()
        precision = tp / keep.sum()
        recall = tp / n_pos
        ap += precision * (recall - prev_recall)
        prev_recall = recall
    return ap
