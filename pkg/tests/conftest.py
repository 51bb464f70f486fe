import pytest

from nanet.dataset import Jitter, RenderSpec, build_dataset


def tiny_render_spec():
    """Canvas-64 geometry that satisfies the no-clip invariant (4 dashes +
    3 gaps = 49 px, times max scale 1.1 is 53.9 <= 64)."""
    return RenderSpec(
        canvas=64,
        dot_radius=2.5,
        dash_width=10.0,
        dash_height=5.0,
        symbol_gap=3.0,
        jitter=Jitter(max_rotation_deg=10.0, max_translation_px=2.0, scale_range=(0.9, 1.1)),
    )


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """26 letters x 3 instances at 64x64: 52 train, 26 test per condition."""
    out = tmp_path_factory.mktemp("tiny_ds")
    return build_dataset(tiny_render_spec(), None, seed=5, out_dir=out, per_letter=3, test_per_letter=1)
