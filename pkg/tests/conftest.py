import pytest

from dynspanner import derive_config

# The default harness configuration: practical mode with small constants so
# desk-scale experiments finish quickly.  The eps' formula is infeasible at
# c=1.05, lambda=8, so an explicit override is required.
ACC_OVERRIDES = {"lambda": 8.0, "c": 1.05, "k": 8, "epsPrime": 0.01}


@pytest.fixture(scope="session")
def acc_config():
    return derive_config(
        dim=2, eps_target=0.5, R=2.0, mode="practical", overrides=ACC_OVERRIDES
    )
