import pytest

from gridpool.harness import SweepConfig, run_sweep

MASTER_SEED = 20260808


@pytest.fixture(scope="session")
def default_sweep():
    """The full default Monte Carlo sweep, shared by the acceptance tests.

    3504 cells x 200 replicates; takes on the order of a minute or two.
    """
    config = SweepConfig(master_seed=MASTER_SEED)
    return config, run_sweep(config)
