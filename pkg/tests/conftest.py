"""Shared fixtures.

Policy-dependent tests need a fully trained Q-network, which costs a couple
of minutes to produce.  It is trained at most once and reused across test
sessions through pytest's cache, keyed by a digest of the sources that define
the training computation, so editing those modules retrains while unrelated
edits do not.
"""

from __future__ import annotations

import hashlib
import pathlib

import pytest

from synchrony import dqn

_CACHE_KEY = "synchrony/trained-checkpoint"
_TRAIN_SEED = 0
_TRAIN_EPISODES = 500


def _source_digest() -> str:
    root = pathlib.Path(__file__).resolve().parents[1] / "src" / "synchrony"
    h = hashlib.sha256()
    for name in ("dqn.py", "model.py", "_kernels.py"):
        h.update((root / name).read_bytes())
    return h.hexdigest()[:16]


@pytest.fixture(scope="session")
def trained_checkpoint(pytestconfig) -> pathlib.Path:
    """Path to a 500-episode checkpoint trained with seed 0."""
    digest = _source_digest()
    cached = pytestconfig.cache.get(_CACHE_KEY, None)
    if cached and cached.get("digest") == digest:
        path = pathlib.Path(cached["path"])
        if path.exists():
            return path
    env = dqn.KuramotoTrainingEnv()
    params, _ = dqn.train(env, episodes=_TRAIN_EPISODES, seed=_TRAIN_SEED)
    path = pytestconfig.cache.mkdir("synchrony") / "checkpoint_seed0.json"
    dqn.save_checkpoint(path, params, dqn.DqnHyper(),
                        seed=_TRAIN_SEED, episodes=_TRAIN_EPISODES)
    pytestconfig.cache.set(_CACHE_KEY, {"digest": digest, "path": str(path)})
    return path


@pytest.fixture(scope="session")
def trained_params(trained_checkpoint) -> dqn.MlpParams:
    params, _, _ = dqn.load_checkpoint(trained_checkpoint)
    return params
