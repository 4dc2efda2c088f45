"""Shared builders for synthetic channel instances."""

import numpy as np
import pytest

from irsbeam.channel import (
    ChannelRealization,
    RankOneChannel,
    ula_response,
    ura_response,
)


def dense_instance(rng, K, M, N):
    """Unstructured instance: CN-normalized response vectors, CN gains."""
    chans, users = [], []
    for _ in range(K):
        a = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        b = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        gain = complex(rng.standard_normal() + 1j * rng.standard_normal())
        chans.append(RankOneChannel(gain, a / np.linalg.norm(a),
                                    b / np.linalg.norm(b)))
        users.append(rng.standard_normal(M) + 1j * rng.standard_normal(M))
    return ChannelRealization(chans, users)


def model_instance(rng, K, M, N):
    """Instance drawn from the system's channel family: conj-ULA BS vectors
    at sin-space separation >= 2/N, URA surface vectors, CN gains and
    CN(0, I) user vectors."""
    while True:
        s = rng.uniform(-1, 1, K)
        if K == 1 or np.min(np.abs(np.subtract.outer(s, s))
                            [np.triu_indices(K, 1)]) >= 2.0 / N:
            break
    chans, users = [], []
    for k in range(K):
        a = ura_response(1, M, rng.uniform(-np.pi / 2, np.pi / 2),
                         rng.uniform(-np.pi / 4, np.pi / 4))
        b = np.conj(ula_response(N, float(np.arcsin(s[k]))))
        gain = complex(rng.standard_normal() + 1j * rng.standard_normal())
        chans.append(RankOneChannel(gain, a, b))
        users.append((rng.standard_normal(M) + 1j * rng.standard_normal(M))
                     / np.sqrt(2.0))
    return ChannelRealization(chans, users)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
