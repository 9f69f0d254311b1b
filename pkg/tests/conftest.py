import pytest

from nhspectra import agbz_sample_theta, char_poly, extended_hn, nh_ssh, standard_hn


@pytest.fixture(scope="session")
def preset_models():
    return {
        -0.3: extended_hn(0.5, 1.3, 0.7, 1.5),
        -0.5: extended_hn(0.5, 1.5, 0.5, 1.5),
        -0.7: extended_hn(0.5, 1.7, 0.3, 1.5),
    }


@pytest.fixture(scope="session")
def ssh_model():
    return nh_ssh(1.0, 1.0, 0.2, 1.0)


@pytest.fixture(scope="session")
def std_hn():
    return standard_hn(2.0, 0.5)


@pytest.fixture(scope="session")
def sweep_cache(preset_models, std_hn):
    """Full-resolution theta sweeps, computed once per session."""
    cache = {}

    def get(key):
        if key not in cache:
            model = std_hn if key == "std" else preset_models[key]
            cache[key] = agbz_sample_theta(model)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def charpolys(preset_models, std_hn, ssh_model):
    cps = {g: char_poly(m) for g, m in preset_models.items()}
    cps["std"] = char_poly(std_hn)
    cps["ssh"] = char_poly(ssh_model)
    return cps
