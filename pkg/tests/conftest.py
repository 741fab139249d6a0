import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--oracle-scale",
        action="store",
        default="fast",
        type=str,
        help="Grid resolution for oracle comparisons: fast or full.",
    )


# Using @pytest.mark.full_scale_only uses the 'skip_by_oracle_scale' autouse fixture below
def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "full_scale_only: skip the test unless --oracle-scale full",
    )


@pytest.fixture(scope="session")
def oracle_scale(request):
    scale = request.config.getoption("--oracle-scale")
    if scale not in ("fast", "full"):
        raise ValueError(f"Invalid oracle scale '{scale}'")
    return scale


@pytest.fixture(scope="session")
def oracle_nodes(oracle_scale):
    """Nodes per axis for the joint and dual oracle grids."""
    return 201 if oracle_scale == "full" else 101


@pytest.fixture(autouse=True)
def skip_by_oracle_scale(request):
    if request.node.get_closest_marker("full_scale_only"):
        if request.config.getoption("--oracle-scale") != "full":
            pytest.skip("needs --oracle-scale full")
