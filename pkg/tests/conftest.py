import numpy as np
import pytest

from ebmf import RatingTriple, build_sparse

TINY_LINES = [
    "1\t1\t5\t881250949",
    "1\t2\t3\t881250950",
    "1\t3\t4\t881250951",
    "2\t1\t4\t881250952",
    "2\t2\t2\t881250953",
    "2\t3\t4\t881250954",
]


@pytest.fixture
def tiny_data():
    """2 users x 3 items, 6 ratings; small enough to check by hand."""
    triples = [
        RatingTriple(1, 1, 5.0, 0),
        RatingTriple(1, 2, 3.0, 0),
        RatingTriple(1, 3, 4.0, 0),
        RatingTriple(2, 1, 4.0, 0),
        RatingTriple(2, 2, 2.0, 0),
        RatingTriple(2, 3, 4.0, 0),
    ]
    return build_sparse(triples)


@pytest.fixture
def tiny_config_file(tmp_path):
    """Writes the 6-rating fixture dataset plus a fixed-mode config."""
    dataset = tmp_path / "tiny.tsv"
    dataset.write_text("".join(line + "\n" for line in TINY_LINES))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"dataset = {dataset}\n"
        "format = tab\n"
        "mode = fixed\n"
        "k = 1\n"
        "lambda1 = 0.1\n"
        "lambda2 = 0.1\n"
        "test_fraction = 0.17\n"
        "seed = 7\n"
        f"output_dir = {tmp_path / 'out'}\n"
    )
    return cfg, dataset, tmp_path


def random_ratings(rng, n, p, density=0.6):
    """Random dense-ish rating structure for property tests."""
    triples = []
    for u in range(n):
        items = rng.permutation(p)[: max(1, int(density * p))]
        for j in items:
            triples.append(RatingTriple(u + 1, int(j) + 1, float(rng.uniform(0.5, 5.0)), 0))
    # make sure every item appears at least once
    data = build_sparse(triples)
    missing = [j for j in range(p) if j not in set(data.item_ids - 1)]
    for j in missing:
        triples.append(RatingTriple(1, j + 1, float(rng.uniform(0.5, 5.0)), 0))
    return build_sparse(triples)
