import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynspanner import InfeasibleConfigError, config_from_json, derive_config
from dynspanner.config import BucketCoord


def test_theory_lambda_default():
    cfg = derive_config(dim=2, eps_target=0.5, R=2.0, mode="theory")
    # lambda = 4 * (2 + eps_target) / eps_target * R = 4 * 2.5 * 2 * 2
    assert cfg.lam == 40.0
    assert cfg.mode == "theory"
    assert cfg.waived == ()


def test_theory_k_inequalities_hold():
    cfg = derive_config(dim=1, eps_target=0.5, R=2.0, mode="theory")
    gap = cfg.eps - cfg.eps_prime
    k1 = math.log(1.0 + cfg.C3 / ((cfg.Cphi - 1.0) * gap)) / math.log(cfg.c)
    k2 = math.log(1.0 + 2.0 * cfg.C5 / gap) / math.log(cfg.c)
    assert cfg.k >= k1
    assert cfg.k >= k2
    assert 0.0 < cfg.eps_prime <= (1.0 + cfg.lam**-2) / cfg.c - 1.0 + 1e-15


def test_practical_eps_prime_formula():
    cfg = derive_config(
        dim=2,
        eps_target=0.5,
        R=2.0,
        mode="practical",
        overrides={"lambda": 8.0, "c": 1.01},
    )
    expected = (1.0 / 1.01) * (1.0 + 1.0 / 64.0) - 1.0
    assert cfg.eps_prime == pytest.approx(expected, rel=1e-12)
    assert cfg.eps_prime == pytest.approx(0.0055693, abs=1e-6)
    assert "eps_prime_feasible" not in cfg.waived


def test_infeasible_c_raises():
    # c = 1.2 > 1 + 1/1600 forces eps' <= 0 without an explicit override.
    with pytest.raises(InfeasibleConfigError):
        derive_config(
            dim=2,
            eps_target=0.5,
            R=2.0,
            mode="practical",
            overrides={"c": 1.2, "lambda": 40.0},
        )


def test_eps_prime_override_must_stay_below_eps():
    with pytest.raises(InfeasibleConfigError):
        derive_config(
            dim=2,
            eps_target=0.5,
            R=2.0,
            mode="practical",
            overrides={"c": 1.05, "lambda": 8.0, "epsPrime": 0.5},
        )


def test_acceptance_config_waives_eps_prime(acc_config):
    # The default harness config needs the override, and reports the waiver.
    assert acc_config.eps_prime == 0.01
    assert "eps_prime_feasible" in acc_config.waived
    assert acc_config.eps == pytest.approx(math.sqrt(1.5) - 1.0, rel=1e-12)


def test_derive_config_deterministic():
    kwargs = dict(
        dim=3,
        eps_target=0.4,
        R=2.0,
        mode="practical",
        overrides={"lambda": 8.0, "c": 1.05, "k": 8, "epsPrime": 0.01},
    )
    assert derive_config(**kwargs) == derive_config(**kwargs)


def _c2k3():
    return derive_config(
        dim=2,
        eps_target=0.5,
        R=2.0,
        mode="practical",
        overrides={"c": 2.0, "k": 3, "lambda": 8.0, "epsPrime": 0.1},
    )


def test_pair_bucket_examples():
    cfg = _c2k3()
    assert cfg.pair_bucket_of_length(1.0) == BucketCoord(index=0, size=0)
    # m = floor(log2 5) = 2; 2 mod 3 = 2; floor(2/3) = 0
    assert cfg.pair_bucket_of_length(5.0) == BucketCoord(index=2, size=0)
    # m = -1; -1 mod 3 = 2; floor(-1/3) = -1; bracket: 2^-1 <= 0.5 < 2^0
    assert cfg.pair_bucket_of_length(0.5) == BucketCoord(index=2, size=-1)


def test_pair_bucket_rejects_zero_length():
    with pytest.raises(ValueError):
        _c2k3().pair_bucket_of_length(0.0)


@settings(max_examples=200, deadline=None)
@given(
    length=st.floats(min_value=1e-6, max_value=1e6),
    c=st.floats(min_value=1.01, max_value=3.0),
    k=st.integers(min_value=1, max_value=8),
)
def test_bucket_bracket_property(length, c, k):
    cfg = derive_config(
        dim=2,
        eps_target=0.5,
        R=2.0,
        mode="practical",
        overrides={"c": c, "k": k, "lambda": 8.0, "epsPrime": 0.01},
    )
    b = cfg.pair_bucket_of_length(length)
    assert 0 <= b.index < k
    m = k * b.size + b.index
    # The boundary snap can move lengths within 1e-12 (relative, in log
    # space) of a power of c into the adjacent bucket; allow that jitter.
    assert length >= c**m * (1.0 - 1e-9)
    assert length <= c ** (m + 1) * (1.0 + 1e-9)


def test_config_from_json_roundtrip():
    text = (
        '{"dim": 2, "eps": 0.5, "R": 2.0, "mode": "practical", '
        '"overrides": {"lambda": 8.0, "c": 1.05, "k": 8, "epsPrime": 0.01}}'
    )
    cfg = config_from_json(text)
    assert cfg.dim == 2 and cfg.k == 8 and cfg.lam == 8.0
    d = cfg.to_json_dict()
    assert d["eps_target"] == 0.5
    assert isinstance(d["waived"], list)


def test_unknown_override_rejected():
    with pytest.raises(ValueError):
        derive_config(
            dim=2,
            eps_target=0.5,
            R=2.0,
            mode="practical",
            overrides={"bogus": 1},
        )


def test_input_validation():
    with pytest.raises(ValueError):
        derive_config(dim=2, eps_target=-1.0, R=2.0)
    with pytest.raises(ValueError):
        derive_config(dim=2, eps_target=0.5, R=1.0)
    with pytest.raises(ValueError):
        derive_config(dim=0, eps_target=0.5, R=2.0)
    with pytest.raises(ValueError):
        derive_config(dim=2, eps_target=0.5, R=2.0, mode="theory", overrides={"k": 5})
