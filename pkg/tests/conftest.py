import pytest

from helpers import make_matrix, write_test_bundle, two_blobs


@pytest.fixture
def blob_bundle(tmp_path):
    """Bundle with one word whose periods sit in different blobs."""
    points, _ = two_blobs(40, 40, separation=12.0, seed=7)
    earlier = make_matrix("shift", "old", points[:40])
    later = make_matrix("shift", "new", points[40:])
    write_test_bundle(tmp_path / "bundle", [earlier, later], periods=["old", "new"])
    return tmp_path / "bundle"
