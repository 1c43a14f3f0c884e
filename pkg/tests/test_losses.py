import math

import numpy as np
import pytest
import torch

from profile_rec.errors import NumericError
from profile_rec.models import Objective
from profile_rec.services.losses import (
    alignment_loss,
    bpr_loss,
    contrastive_loss,
    dot_bpr_loss,
    mlm_loss,
)


def cos(left: np.ndarray, right: np.ndarray) -> float:
    return float(left @ right / (np.linalg.norm(left) * np.linalg.norm(right)))


def contrastive_oracle(users, positives, negatives, temperature: float, standard: bool) -> float:
    total = 0.0
    for row, user in enumerate(users):
        terms = [cos(user, positive) / temperature for column, positive in enumerate(positives) if standard or column != row]
        terms.append(cos(user, negatives[row]) / temperature)
        denominator = math.log(sum(math.exp(term) for term in terms))
        total += denominator - cos(user, positives[row]) / temperature
    return total / len(users)


def log_softmax_row(logits: np.ndarray, row: int, column: int) -> float:
    shifted = logits[row] - logits[row].max()
    return float(shifted[column] - math.log(np.exp(shifted).sum()))


def random_triplet(rng: np.random.Generator, batch: int, dim: int = 5):
    return tuple(rng.standard_normal((batch, dim)) for _ in range(3))


@pytest.mark.parametrize("mode", [Objective.contrastive_paper, Objective.contrastive_standard])
def test_contrastive_loss_matches_enumeration(mode) -> None:
    rng = np.random.default_rng(0)
    for _ in range(100):
        batch = int(rng.integers(2, 9))
        users, positives, negatives = random_triplet(rng, batch)
        temperature = float(rng.uniform(0.05, 1.0))

        loss = contrastive_loss(
            torch.from_numpy(users), torch.from_numpy(positives), torch.from_numpy(negatives), temperature, mode
        )

        expected = contrastive_oracle(
            users, positives, negatives, temperature, standard=mode is Objective.contrastive_standard
        )
        assert abs(float(loss) - expected) <= 1e-9


def test_contrastive_loss_ignores_embedding_scale() -> None:
    users, positives, negatives = (torch.from_numpy(part) for part in random_triplet(np.random.default_rng(1), 4))

    plain = contrastive_loss(users, positives, negatives, 0.05)
    scaled = contrastive_loss(users * 7.3, positives, negatives * 0.2, 0.05)

    assert torch.allclose(plain, scaled)


def test_contrastive_loss_rejects_bpr_objective_and_bad_temperature() -> None:
    users, positives, negatives = (torch.from_numpy(part) for part in random_triplet(np.random.default_rng(2), 3))

    with pytest.raises(NumericError):
        contrastive_loss(users, positives, negatives, 0.05, Objective.bpr)
    with pytest.raises(NumericError) as exc:
        contrastive_loss(users, positives, negatives, 0.0)

    assert exc.value.detail == "Temperature must be positive."


def test_zero_norm_embedding_raises() -> None:
    users, positives, negatives = (torch.from_numpy(part) for part in random_triplet(np.random.default_rng(3), 3))
    users[1] = 0.0

    with pytest.raises(NumericError) as exc:
        contrastive_loss(users, positives, negatives, 0.05)

    assert exc.value.detail == "Cosine similarity is undefined for a zero-norm embedding."


def test_bpr_loss_matches_enumeration() -> None:
    rng = np.random.default_rng(4)
    for _ in range(100):
        users, positives, negatives = random_triplet(rng, int(rng.integers(1, 9)))
        temperature = float(rng.uniform(0.05, 1.0))

        loss = bpr_loss(torch.from_numpy(users), torch.from_numpy(positives), torch.from_numpy(negatives), temperature)

        expected = np.mean(
            [
                math.log1p(math.exp(-(cos(u, p) - cos(u, n)) / temperature))
                for u, p, n in zip(users, positives, negatives)
            ]
        )
        assert abs(float(loss) - expected) <= 1e-9


def test_dot_bpr_loss_matches_enumeration() -> None:
    users, positives, negatives = random_triplet(np.random.default_rng(5), 6)

    loss = dot_bpr_loss(torch.from_numpy(users), torch.from_numpy(positives), torch.from_numpy(negatives))

    expected = np.mean([math.log1p(math.exp(-(u @ p - u @ n))) for u, p, n in zip(users, positives, negatives)])
    assert abs(float(loss) - expected) <= 1e-9


def test_mlm_loss_matches_enumeration() -> None:
    rng = np.random.default_rng(6)
    for _ in range(100):
        rows, length, width, vocab = 3, 6, 4, 11
        states = rng.standard_normal((rows, length, width))
        decoder = rng.standard_normal((vocab, width))
        count = int(rng.integers(1, 8))
        positions = np.stack([rng.integers(rows, size=count), rng.integers(1, length, size=count)], axis=1)
        labels = rng.integers(vocab, size=count)

        loss = mlm_loss(
            torch.from_numpy(states),
            torch.from_numpy(positions),
            torch.from_numpy(labels),
            lambda hidden: hidden @ torch.from_numpy(decoder).T,
        )

        logits = np.stack([decoder @ states[row, position] for row, position in positions])
        expected = -np.mean([log_softmax_row(logits, index, int(label)) for index, label in enumerate(labels)])
        assert abs(float(loss) - expected) <= 1e-9


def test_mlm_loss_without_labels_is_zero() -> None:
    states = torch.randn(2, 4, 3, dtype=torch.float64, requires_grad=True)

    loss = mlm_loss(states, torch.zeros((0, 2), dtype=torch.long), torch.zeros(0, dtype=torch.long), lambda x: x)
    loss.backward()

    assert float(loss) == 0.0
    assert torch.all(states.grad == 0)


def test_alignment_loss_matches_enumeration() -> None:
    rng = np.random.default_rng(7)
    for _ in range(100):
        batch = int(rng.integers(1, 9))
        cf = rng.standard_normal((batch, 4))
        text = rng.standard_normal((batch, 6))
        weight = rng.standard_normal((4, 6))
        temperature = float(rng.uniform(0.05, 1.0))

        loss = alignment_loss(
            torch.from_numpy(cf),
            torch.from_numpy(text),
            lambda rows: rows @ torch.from_numpy(weight).T,
            temperature,
        )

        projected = text @ weight.T
        logits = np.array([[cos(p, c) for c in cf] for p in projected]) / temperature
        text_to_cf = -np.mean([log_softmax_row(logits, row, row) for row in range(batch)])
        cf_to_text = -np.mean([log_softmax_row(logits.T, row, row) for row in range(batch)])
        assert abs(float(loss) - 0.5 * (text_to_cf + cf_to_text)) <= 1e-9


def test_standard_contrastive_loss_is_non_negative() -> None:
    rng = np.random.default_rng(8)
    for _ in range(100):
        users, positives, negatives = random_triplet(rng, int(rng.integers(2, 9)))
        temperature = float(rng.uniform(0.01, 1.0))

        loss = contrastive_loss(
            torch.from_numpy(users),
            torch.from_numpy(positives),
            torch.from_numpy(negatives),
            temperature,
            Objective.contrastive_standard,
        )

        assert float(loss) >= 0.0


@pytest.mark.parametrize("mode", [Objective.contrastive_paper, Objective.contrastive_standard])
def test_contrastive_gradient_matches_finite_differences(mode) -> None:
    users, positives, negatives = (
        torch.from_numpy(part).requires_grad_() for part in random_triplet(np.random.default_rng(9), 4)
    )

    assert torch.autograd.gradcheck(
        lambda u, p, n: contrastive_loss(u, p, n, 0.5, mode),
        (users, positives, negatives),
        eps=1e-6,
        atol=1e-8,
        rtol=1e-6,
    )


def test_objective_accepts_the_exclusive_alias() -> None:
    assert Objective("contrastive-exclusive") is Objective.contrastive_paper
    assert Objective("contrastive-paper") is Objective.contrastive_paper
