import numpy as np
import pytest

from mctime import ExperimentConfig


@pytest.fixture(scope="session")
def tiny_config():
    """A seconds-scale profile for orchestration tests: 8x8 mesh, 40 times,
    two small ensemble members, short training."""
    return ExperimentConfig(
        mesh_axes=((-5.0, 5.0, 8), (-5.0, 5.0, 8)),
        t_start=0.2, t_end=8.0, t_step=0.2,
        n_hidden_grid=(24, 16), n_features_grid=(4,),
        epochs=8,
        k_override=2,
        master_seed=1234,
    )
