import pytest

from curbfuse import PipelineConfig, SceneSpec, generate


@pytest.fixture(scope="session")
def small_scene():
    """Four-frame straight scene with mild noise and a few outliers."""
    return generate(
        SceneSpec(n_frames=4, noise_sigma=0.02, outlier_rate=0.05, seed=7)
    )


@pytest.fixture(scope="session")
def small_cfg():
    return PipelineConfig(seed=3)
